//! Mean value theorem for the weighted difference quotient.
//!
//! For distinct positive `x1`, `x2` and `0 < alpha <= 1`, the quotient
//!
//! ```text
//! Q = alpha * (x1^alpha f(x2) - x2^alpha f(x1)) / (x1^alpha - x2^alpha)
//! ```
//!
//! equals `phi(xi) = alpha f(xi) - xi^alpha D_alpha f(xi)` at some `xi`
//! strictly between the two points, where `D_alpha` is the order-`alpha`
//! derivative. Since `xi^alpha D_alpha f(xi) = xi f'(xi)`, `phi` is the
//! classical Pompeiu weight `f - xi f'` with its first term rescaled; the
//! statement follows from the Cauchy mean value theorem applied to
//! `f(t)/t^alpha` against `1/t^alpha`, which also pins the exponent: any
//! other power of `xi` on the derivative term breaks the theorem for
//! `alpha < 1`. [`find_xi`] realizes such a `xi` numerically: it scans the
//! open interval, bisects the first sign change of `phi - Q` from the left,
//! and falls back to the scan minimizer when no sign change exists (the
//! theorem guarantees a root of the continuous problem, but a root can be a
//! tangency that never crosses zero).

use serde::{Deserialize, Serialize};

use crate::calculus::{check_alpha, conf_deriv};
use crate::expr::ExpressionFn;
use crate::Error;

/// How [`find_xi`] located its witness point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MvtStatus {
    /// A sign change of `phi - Q` was bracketed and bisected.
    Bracketed,
    /// No sign change on the scan grid; `xi` is the refined minimizer of
    /// `|phi - Q|`.
    ScanMin,
    /// `phi` is constant over the interval to within tolerance, so every
    /// point is a witness; `xi` is the midpoint.
    DegenerateConstantPhi,
}

/// Witness point with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanValueResult {
    pub xi: f64,
    /// `|phi(xi) - Q|`.
    pub residual: f64,
    /// Final bisection bracket when `status` is `Bracketed`.
    pub bracket: Option<(f64, f64)>,
    pub status: MvtStatus,
}

/// The weighted difference quotient `Q` for a pair of distinct points.
pub fn pompeiu_quotient(f: &ExpressionFn, x1: f64, x2: f64, alpha: f64) -> Result<f64, Error> {
    check_alpha(alpha)?;
    check_point(x1, "x1")?;
    check_point(x2, "x2")?;
    let p1 = x1.powf(alpha);
    let p2 = x2.powf(alpha);
    if p1 == p2 {
        return Err(Error::InvalidArgument(format!(
            "points must be distinct, got x1 = {x1}, x2 = {x2}"
        )));
    }
    let num = p1 * f.value(x2)? - p2 * f.value(x1)?;
    Ok(alpha * num / (p1 - p2))
}

/// The auxiliary function `phi(xi) = alpha f(xi) - xi^alpha D_alpha f(xi)`.
pub fn phi(f: &ExpressionFn, xi: f64, alpha: f64) -> Result<f64, Error> {
    check_alpha(alpha)?;
    check_point(xi, "xi")?;
    let v = f.value(xi)?;
    Ok(alpha * v - xi.powf(alpha) * conf_deriv(f, xi, alpha)?)
}

fn check_point(x: f64, name: &str) -> Result<(), Error> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidArgument(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

/// Interior points scanned before bracketing.
const SCAN_POINTS: usize = 512;
const MAX_BISECTIONS: u32 = 200;

/// Locate a witness `xi` with `|phi(xi) - Q| <= tol` where possible.
///
/// The first sign change from the left is taken, so among multiple witnesses
/// the reported one is the leftmost the scan resolves.
pub fn find_xi(
    f: &ExpressionFn,
    x1: f64,
    x2: f64,
    alpha: f64,
    tol: f64,
) -> Result<MeanValueResult, Error> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let q = pompeiu_quotient(f, x1, x2, alpha)?;
    let (lo, hi) = (x1.min(x2), x1.max(x2));

    let n = SCAN_POINTS;
    let mut xs = Vec::with_capacity(n);
    let mut hs = Vec::with_capacity(n);
    let mut phi_min = f64::INFINITY;
    let mut phi_max = f64::NEG_INFINITY;
    for i in 1..=n {
        let x = lo + (hi - lo) * (i as f64) / ((n + 1) as f64);
        let p = phi(f, x, alpha)?;
        phi_min = phi_min.min(p);
        phi_max = phi_max.max(p);
        xs.push(x);
        hs.push(p - q);
    }

    if phi_max - phi_min <= tol {
        let mid = 0.5 * (lo + hi);
        let residual = (phi(f, mid, alpha)? - q).abs();
        return Ok(MeanValueResult {
            xi: mid,
            residual,
            bracket: None,
            status: MvtStatus::DegenerateConstantPhi,
        });
    }

    // Leftmost sign change, zeros counting as changes.
    let crossing = (0..n - 1).find(|&i| hs[i] == 0.0 || hs[i] * hs[i + 1] < 0.0);
    if let Some(i) = crossing {
        if hs[i] == 0.0 {
            return Ok(MeanValueResult {
                xi: xs[i],
                residual: 0.0,
                bracket: Some((xs[i], xs[i + 1])),
                status: MvtStatus::Bracketed,
            });
        }
        let (mut a, mut b) = (xs[i], xs[i + 1]);
        let mut ha = hs[i];
        let mut best = (xs[i], hs[i].abs());
        for _ in 0..MAX_BISECTIONS {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let hm = phi(f, m, alpha)? - q;
            if hm.abs() < best.1 {
                best = (m, hm.abs());
            }
            if hm.abs() <= tol {
                return Ok(MeanValueResult {
                    xi: m,
                    residual: hm.abs(),
                    bracket: Some((a, b)),
                    status: MvtStatus::Bracketed,
                });
            }
            if (ha < 0.0) == (hm < 0.0) {
                a = m;
                ha = hm;
            } else {
                b = m;
            }
        }
        // The bracket collapsed to adjacent floats before |h| dipped under
        // tol; report the best point seen with its honest residual.
        return Ok(MeanValueResult {
            xi: best.0,
            residual: best.1,
            bracket: Some((a, b)),
            status: MvtStatus::Bracketed,
        });
    }

    // No crossing: refine the scan minimizer of |h| by golden section.
    let mut arg = 0;
    for i in 1..n {
        if hs[i].abs() < hs[arg].abs() {
            arg = i;
        }
    }
    let win_lo = if arg == 0 { xs[0] } else { xs[arg - 1] };
    let win_hi = if arg == n - 1 { xs[n - 1] } else { xs[arg + 1] };
    let (xi, residual) = golden_min(
        &mut |x| Ok::<f64, Error>((phi(f, x, alpha)? - q).abs()),
        win_lo,
        win_hi,
        1e-12 * (hi - lo),
    )?;
    let (xi, residual) = if residual < hs[arg].abs() { (xi, residual) } else { (xs[arg], hs[arg].abs()) };
    Ok(MeanValueResult { xi, residual, bracket: None, status: MvtStatus::ScanMin })
}

/// Golden-section minimization returning the best probed point.
pub(crate) fn golden_min<E>(
    f: &mut dyn FnMut(f64) -> Result<f64, E>,
    mut a: f64,
    mut b: f64,
    xtol: f64,
) -> Result<(f64, f64), E> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    while (b - a) > xtol && d > c {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn quotient_is_symmetric_in_its_points() {
        let f = parse_expr("exp(x) - x^2").unwrap();
        for &alpha in &[0.25, 0.5, 1.0] {
            let q12 = pompeiu_quotient(&f, 1.2, 2.7, alpha).unwrap();
            let q21 = pompeiu_quotient(&f, 2.7, 1.2, alpha).unwrap();
            // Swapping negates numerator and denominator; IEEE division of
            // negated operands is exact, so the values are identical.
            assert_eq!(q12, q21);
        }
    }

    #[test]
    fn quotient_rejects_coincident_points() {
        let f = parse_expr("x").unwrap();
        assert!(pompeiu_quotient(&f, 2.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn phi_at_alpha_one_is_the_tangent_intercept() {
        // phi(xi) = f(xi) - xi f'(xi) for alpha = 1.
        let f = parse_expr("x^3").unwrap();
        let p = phi(&f, 2.0, 1.0).unwrap();
        assert_eq!(p, 8.0 - 2.0 * 12.0);
    }

    #[test]
    fn quadratic_witness_is_the_geometric_mean_point() {
        // f = t^2, alpha = 1 on [1, 2]: Q = (1*4 - 2*1)/(1 - 2) = -2 and
        // phi(xi) = xi^2 - 2 xi^2 = -xi^2, so xi = sqrt(2).
        let f = parse_expr("x^2").unwrap();
        let r = find_xi(&f, 1.0, 2.0, 1.0, 1e-12).unwrap();
        assert_eq!(r.status, MvtStatus::Bracketed);
        assert!((r.xi - 2.0f64.sqrt()).abs() < 1e-6);
        assert!(r.residual <= 1e-12);
        let (lo, hi) = r.bracket.unwrap();
        assert!(lo <= r.xi && r.xi <= hi);
    }

    #[test]
    fn half_order_identity_witness_is_the_geometric_mean_point() {
        // f = t, alpha = 1/2: Q = -sqrt(x1 x2)/2 and phi(xi) = -xi/2, so the
        // witness is exactly the geometric mean. It lies strictly between
        // even nearly coincident points, which pins the derivative weight:
        // with any other exponent on xi the root escapes the interval.
        let f = parse_expr("x").unwrap();
        let r = find_xi(&f, 1.2, 1.8, 0.5, 1e-12).unwrap();
        assert!((r.xi - (1.2f64 * 1.8).sqrt()).abs() < 1e-7, "xi = {}", r.xi);
        assert!(1.2 < r.xi && r.xi < 1.8);
        assert!(r.residual <= 1e-12);
    }

    #[test]
    fn witness_against_independent_dense_scan() {
        // Oracle: brute-force the leftmost sign change of phi - Q on a much
        // finer grid than find_xi uses, then compare locations.
        let f = parse_expr("exp(x)").unwrap();
        let (x1, x2, alpha) = (1.0, 3.0, 0.5);
        let q = pompeiu_quotient(&f, x1, x2, alpha).unwrap();
        let n = 200_001;
        let mut prev = phi(&f, x1 + (x2 - x1) / (n as f64 + 1.0), alpha).unwrap() - q;
        let mut oracle = None;
        for i in 2..=n {
            let x = x1 + (x2 - x1) * (i as f64) / (n as f64 + 1.0);
            let h = phi(&f, x, alpha).unwrap() - q;
            if prev * h <= 0.0 {
                oracle = Some(x);
                break;
            }
            prev = h;
        }
        let oracle = oracle.expect("the mean value theorem guarantees a crossing");
        let r = find_xi(&f, x1, x2, alpha, 1e-11).unwrap();
        assert_eq!(r.status, MvtStatus::Bracketed);
        assert!((r.xi - oracle).abs() < 2.0 * (x2 - x1) / (n as f64), "{} vs {oracle}", r.xi);
        assert!(r.residual <= 1e-11);
    }

    #[test]
    fn constant_function_degenerates() {
        let f = parse_expr("3").unwrap();
        let r = find_xi(&f, 1.0, 2.0, 0.5, 1e-10).unwrap();
        assert_eq!(r.status, MvtStatus::DegenerateConstantPhi);
        assert!(r.residual <= 1e-10);
        assert_eq!(r.xi, 1.5);
        assert!(r.bracket.is_none());

        // Linear functions at alpha = 1 have phi identically zero.
        let g = parse_expr("2.5*x").unwrap();
        let r = find_xi(&g, 1.0, 4.0, 1.0, 1e-10).unwrap();
        assert_eq!(r.status, MvtStatus::DegenerateConstantPhi);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn witness_lies_strictly_inside() {
        let f = parse_expr("x^3 - x").unwrap();
        for &alpha in &[0.25, 0.5, 0.75, 1.0] {
            let r = find_xi(&f, 1.0, 2.0, alpha, 1e-10).unwrap();
            assert!(1.0 < r.xi && r.xi < 2.0, "alpha={alpha}: xi={}", r.xi);
            assert!(r.residual <= 1e-9, "alpha={alpha}: residual={}", r.residual);
        }
    }

    #[test]
    fn point_order_does_not_change_the_witness() {
        let f = parse_expr("log(x) + x^2").unwrap();
        let r1 = find_xi(&f, 1.0, 2.5, 0.75, 1e-10).unwrap();
        let r2 = find_xi(&f, 2.5, 1.0, 0.75, 1e-10).unwrap();
        assert_eq!(r1.xi, r2.xi);
        assert_eq!(r1.status, r2.status);
    }
}
