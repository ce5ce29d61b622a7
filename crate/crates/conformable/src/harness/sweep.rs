//! Deterministic trial grid: every function pair against every order and
//! interval, with per-trial records suitable for machine diffing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::calculus::AlphaInterval;
use crate::corpus::{mix_seed, rng_for, sample_function};
use crate::expr::{parse_expr, ExpressionFn};
use crate::gruss::{
    bound_thm31_with_sups, bound_thm32_with_sups, identity_h, identity_k, variant_sups,
    BoundReport, BoundVariant, IdentityReport, SupNormResult, Theorem,
};
use crate::harness::config::{Check, FunctionSource, SweepConfig};
use crate::pompeiu::{find_xi, phi, pompeiu_quotient, MvtStatus};
use crate::Error;

use rand::Rng;

/// A mean value trial resolves when the residual at the witness is below
/// this factor times `max(1, |Q|)`.
pub const MVT_RESOLVE_FACTOR: f64 = 1e-8;

/// Mean value check on one randomly drawn point pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvtOutcome {
    pub x1: f64,
    pub x2: f64,
    /// The weighted difference quotient the witness must reproduce.
    pub q: f64,
    pub xi: f64,
    pub phi_xi: f64,
    pub residual: f64,
    pub status: MvtStatus,
    pub resolved: bool,
}

/// Everything one trial produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub f: String,
    pub g: String,
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub bounds: Vec<BoundReport>,
    pub identities: Vec<IdentityReport>,
    pub mvt: Option<MvtOutcome>,
    /// Checks that errored instead of producing a report, as
    /// `"<check>: <message>"`. Non-empty errors never abort the sweep.
    pub errors: Vec<String>,
    pub wall_time_ms: f64,
}

pub(crate) struct CheckSet {
    pub bounds: Vec<BoundReport>,
    pub identities: Vec<IdentityReport>,
    pub mvt: Option<MvtOutcome>,
    pub errors: Vec<String>,
}

/// Run the configured checks for one `(f, g, ctx)` triple. Sup norms are
/// computed once and shared across both inequalities; every failure is
/// recorded as a string instead of aborting.
pub(crate) fn run_checks(
    f: &ExpressionFn,
    g: &ExpressionFn,
    ctx: &AlphaInterval,
    config: &SweepConfig,
    mvt_seed: u64,
) -> CheckSet {
    let mut out = CheckSet { bounds: Vec::new(), identities: Vec::new(), mvt: None, errors: Vec::new() };
    let spec = &config.tolerances;
    let variants = config.selected_variants();

    // One sup pair per weight, shared by every bound that consumes it: the
    // published weight drives Paper, the mean value weight the rest.
    let wants_bounds = config.wants(Check::Thm31) || config.wants(Check::Thm32);
    let mut sups_for = |variant: BoundVariant,
                        errors: &mut Vec<String>|
     -> Option<(SupNormResult, SupNormResult)> {
        match variant_sups(f, g, ctx, variant) {
            Ok(pair) => Some(pair),
            Err(e) => {
                errors.push(format!("sup_norm/{}: {e}", variant.label()));
                None
            }
        }
    };
    let (published, provable) = if wants_bounds {
        let published = variants
            .contains(&BoundVariant::Paper)
            .then(|| sups_for(BoundVariant::Paper, &mut out.errors))
            .flatten();
        let provable = variants
            .iter()
            .any(|v| *v != BoundVariant::Paper)
            .then(|| sups_for(BoundVariant::Safe, &mut out.errors))
            .flatten();
        (published, provable)
    } else {
        (None, None)
    };

    for theorem in [Theorem::Thm31, Theorem::Thm32] {
        let wanted = match theorem {
            Theorem::Thm31 => config.wants(Check::Thm31),
            Theorem::Thm32 => config.wants(Check::Thm32),
        };
        if !wanted {
            continue;
        }
        for &variant in &variants {
            let sups = match variant {
                BoundVariant::Paper => &published,
                BoundVariant::Corrected | BoundVariant::Safe => &provable,
            };
            let Some((pf, pg)) = sups else { continue };
            let result = match theorem {
                Theorem::Thm31 => bound_thm31_with_sups(f, g, ctx, spec, variant, pf, pg),
                Theorem::Thm32 => bound_thm32_with_sups(f, g, ctx, spec, variant, pf, pg),
            };
            match result {
                Ok(report) => out.bounds.push(report),
                Err(e) => out
                    .errors
                    .push(format!("{}/{}: {e}", theorem.label(), variant.label())),
            }
        }
    }

    if config.wants(Check::IdentityK) {
        match identity_k(f, g, ctx, spec) {
            Ok(report) => out.identities.push(report),
            Err(e) => out.errors.push(format!("identity_K: {e}")),
        }
    }
    if config.wants(Check::IdentityH) {
        match identity_h(f, g, ctx, spec) {
            Ok(report) => out.identities.push(report),
            Err(e) => out.errors.push(format!("identity_H: {e}")),
        }
    }

    if config.wants(Check::Mvt) {
        match run_mvt(f, ctx, mvt_seed) {
            Ok(outcome) => out.mvt = Some(outcome),
            Err(e) => out.errors.push(format!("mvt: {e}")),
        }
    }

    out
}

/// Draw a point pair and chase the witness. Points are redrawn until they are
/// at least 5% of the interval apart so the quotient stays well conditioned.
fn run_mvt(f: &ExpressionFn, ctx: &AlphaInterval, seed: u64) -> Result<MvtOutcome, Error> {
    let (a, b) = (ctx.a(), ctx.b());
    let width = b - a;
    let mut rng = rng_for(seed);
    let mut x1 = a + 0.25 * width;
    let mut x2 = b - 0.25 * width;
    for _ in 0..100 {
        let c1 = a + rng.gen::<f64>() * width;
        let c2 = a + rng.gen::<f64>() * width;
        if (c1 - c2).abs() >= 0.05 * width {
            x1 = c1;
            x2 = c2;
            break;
        }
    }

    let alpha = ctx.alpha();
    let q = pompeiu_quotient(f, x1, x2, alpha)?;
    let tol = 1e-9 * q.abs().max(1.0);
    let witness = find_xi(f, x1, x2, alpha, tol)?;
    let phi_xi = phi(f, witness.xi, alpha)?;
    Ok(MvtOutcome {
        x1,
        x2,
        q,
        xi: witness.xi,
        phi_xi,
        residual: witness.residual,
        status: witness.status,
        resolved: witness.residual <= MVT_RESOLVE_FACTOR * q.abs().max(1.0),
    })
}

fn build_pairs(config: &SweepConfig) -> Result<Vec<(ExpressionFn, ExpressionFn)>, Error> {
    match &config.functions {
        FunctionSource::Pairs(texts) => texts
            .iter()
            .map(|(ft, gt)| Ok((parse_expr(ft)?, parse_expr(gt)?)))
            .collect(),
        FunctionSource::Corpus(c) => {
            let constraints = config.resolve_constraints(config.interval_hull());
            (0..c.count as u64)
                .map(|i| {
                    let f = sample_function(mix_seed(c.seed, i, 0), &constraints)?;
                    let g = sample_function(mix_seed(c.seed, i, 1), &constraints)?;
                    Ok((f, g))
                })
                .collect()
        }
    }
}

/// Evaluate the full cross product of pairs, orders, and intervals.
///
/// Trial ids are `"{seed:016x}-{index:06}"` with `index` advancing in the
/// fixed order pairs > alphas > intervals, so records from two runs with the
/// same config and seed line up row for row.
pub fn run_sweep(config: &SweepConfig, seed: u64) -> Result<Vec<TrialRecord>, Error> {
    config.validate()?;
    let pairs = build_pairs(config)?;

    let mut records =
        Vec::with_capacity(pairs.len() * config.alphas.len() * config.intervals.len());
    let mut index: u64 = 0;
    for (f, g) in &pairs {
        for &alpha in &config.alphas {
            for &(a, b) in &config.intervals {
                let started = Instant::now();
                let trial_id = format!("{seed:016x}-{index:06}");
                let (bounds, identities, mvt, errors) = match AlphaInterval::new(alpha, a, b) {
                    Ok(ctx) => {
                        let c = run_checks(f, g, &ctx, config, mix_seed(seed, index, 2));
                        (c.bounds, c.identities, c.mvt, c.errors)
                    }
                    Err(e) => (Vec::new(), Vec::new(), None, vec![format!("interval: {e}")]),
                };
                records.push(TrialRecord {
                    trial_id,
                    f: f.source_text().to_string(),
                    g: g.source_text().to_string(),
                    alpha,
                    a,
                    b,
                    bounds,
                    identities,
                    mvt,
                    errors,
                    wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
                });
                index += 1;
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gruss::BoundVariant;
    use crate::harness::config::CorpusSource;
    use crate::quad::QuadratureSpec;

    fn tiny_config() -> SweepConfig {
        SweepConfig {
            alphas: vec![0.5, 1.0],
            intervals: vec![(1.0, 2.0)],
            functions: FunctionSource::Pairs(vec![
                ("x".into(), "x^2".into()),
                ("exp(x/2)".into(), "1 + x".into()),
            ]),
            variants: BoundVariant::ALL.to_vec(),
            tolerances: QuadratureSpec::default(),
            checks: Check::ALL.to_vec(),
        }
    }

    #[test]
    fn sweep_covers_the_cross_product_in_declared_order() {
        let records = run_sweep(&tiny_config(), 7).unwrap();
        assert_eq!(records.len(), 4);
        assert_eq!(records[0].trial_id, "0000000000000007-000000");
        assert_eq!(records[3].trial_id, "0000000000000007-000003");
        // pairs outermost, then alphas, then intervals
        assert_eq!(records[0].f, "x");
        assert_eq!(records[0].alpha, 0.5);
        assert_eq!(records[1].alpha, 1.0);
        assert_eq!(records[2].f, "exp(x/2)");
        for r in &records {
            assert_eq!(r.bounds.len(), 6, "two theorems, three variants");
            assert_eq!(r.identities.len(), 2);
            assert!(r.mvt.is_some());
            assert!(r.errors.is_empty(), "unexpected errors: {:?}", r.errors);
        }
    }

    #[test]
    fn sweep_is_deterministic_apart_from_wall_time() {
        let first = run_sweep(&tiny_config(), 99).unwrap();
        let second = run_sweep(&tiny_config(), 99).unwrap();
        assert_eq!(first.len(), second.len());
        for (x, y) in first.iter().zip(&second) {
            let mut x = x.clone();
            let mut y = y.clone();
            x.wall_time_ms = 0.0;
            y.wall_time_ms = 0.0;
            assert_eq!(x, y);
        }
    }

    #[test]
    fn safe_bounds_hold_and_identities_pass_on_the_tiny_grid() {
        let records = run_sweep(&tiny_config(), 3).unwrap();
        for r in &records {
            for bound in &r.bounds {
                if bound.variant == BoundVariant::Safe {
                    assert!(bound.holds, "{}: safe margin {}", r.trial_id, bound.margin);
                }
            }
            for id in &r.identities {
                assert!(id.pass, "{}: {} residual {}", r.trial_id, id.name.label(), id.abs_residual);
            }
            let mvt = r.mvt.as_ref().unwrap();
            assert!(mvt.resolved, "{}: mvt residual {}", r.trial_id, mvt.residual);
        }
    }

    #[test]
    fn corpus_source_draws_the_requested_pair_count() {
        let config = SweepConfig {
            alphas: vec![1.0],
            intervals: vec![(1.0, 2.0)],
            functions: FunctionSource::Corpus(CorpusSource {
                seed: 11,
                count: 3,
                constraints: None,
            }),
            variants: vec![BoundVariant::Safe],
            tolerances: QuadratureSpec::default(),
            checks: vec![Check::Thm31, Check::IdentityK],
        };
        let records = run_sweep(&config, 5).unwrap();
        assert_eq!(records.len(), 3);
        for r in &records {
            assert_eq!(r.bounds.len(), 1);
            assert_eq!(r.identities.len(), 1);
            assert!(r.mvt.is_none());
        }
    }

    #[test]
    fn domain_failures_are_recorded_not_fatal() {
        let config = SweepConfig {
            alphas: vec![1.0],
            intervals: vec![(1.0, 2.0)],
            // log(1 - x) is undefined on all of [1, 2].
            functions: FunctionSource::Pairs(vec![("log(1 - x)".into(), "x".into())]),
            variants: vec![BoundVariant::Safe],
            tolerances: QuadratureSpec::default(),
            checks: Check::ALL.to_vec(),
        };
        let records = run_sweep(&config, 1).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert!(r.bounds.is_empty());
        assert!(r.identities.is_empty());
        assert!(r.mvt.is_none());
        assert!(!r.errors.is_empty());
        assert!(r.errors.iter().any(|e| e.starts_with("sup_norm/")));
    }
}
