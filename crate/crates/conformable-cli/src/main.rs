//! `confverify`: single checks, parameter sweeps, and randomized
//! counterexample searches over the conformable library, with JSON and CSV
//! reports.
//!
//! Exit codes: 0 all asserted checks passed; 1 an asserted check failed
//! (a safe-variant bound violated beyond quadrature slack, an identity
//! residual out of tolerance, or an unresolved mean value witness); 2 a
//! quadrature failed to converge; 64 usage or configuration error. Usage
//! errors win over everything, then assertion failures, then
//! non-convergence. The `paper` and `corrected` bound variants never affect
//! the exit code.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use conformable::calculus::{alpha_integral, conf_deriv, conf_deriv_limit};
use conformable::gruss::{
    bound_thm31, bound_thm32, functional_h, functional_k, functional_k_corrected,
    identity_h_with, identity_k_with, kernel_alpha1_agreement, moment_c_crosscheck, BoundReport,
    BoundVariant, IdentityReport, DEFAULT_IDENTITY_ATOL, DEFAULT_IDENTITY_RTOL,
};
use conformable::harness::{
    desk_suite, emit_fuzz_report, emit_report, fuzz_search, read_report, run_sweep, ReportFormat,
    SweepConfig, SweepReport, MVT_RESOLVE_FACTOR,
};
use conformable::pompeiu::{find_xi, pompeiu_quotient};
use conformable::{parse_expr, AlphaInterval, Error, ExpressionFn, QuadratureSpec};

const EXIT_OK: i32 = 0;
const EXIT_ASSERTION: i32 = 1;
const EXIT_NONCONVERGENT: i32 = 2;
const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(name = "confverify", version, about = "Numerical checks for conformable calculus identities and bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weighted integral of an expression over [a, b]
    Integrate {
        #[command(flatten)]
        func: FuncArg,
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        tols: TolArgs,
    },
    /// Order-alpha derivative at a point, optionally against the limit quotient
    Deriv {
        #[command(flatten)]
        func: FuncArg,
        /// Order of the derivative, in (0, 1]
        #[arg(long)]
        alpha: f64,
        /// Evaluation point (positive)
        #[arg(long)]
        t: f64,
        /// Also evaluate the symmetric limit quotient at this step scale
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Locate the mean value witness for a two-point quotient
    Mvt {
        #[command(flatten)]
        func: FuncArg,
        /// Order, in (0, 1]
        #[arg(long)]
        alpha: f64,
        /// First sample point
        #[arg(long)]
        x1: f64,
        /// Second sample point
        #[arg(long)]
        x2: f64,
        /// Residual target for the witness search (default 1e-9 * max(1, |Q|))
        #[arg(long)]
        tol: Option<f64>,
    },
    /// First covariance-style functional K[f, g], published and corrected forms
    K {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        tols: TolArgs,
    },
    /// Second covariance-style functional H[f, g]
    H {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        tols: TolArgs,
    },
    /// Dual-route identities and closed-form cross-checks for one pair
    CheckIdentities {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        tols: TolArgs,
        /// Absolute residual below which an identity passes
        #[arg(long, default_value_t = DEFAULT_IDENTITY_ATOL)]
        atol: f64,
        /// Relative residual below which an identity passes
        #[arg(long, default_value_t = DEFAULT_IDENTITY_RTOL)]
        rtol: f64,
    },
    /// Evaluate one inequality for a pair, in one or all variants
    Verify {
        /// Which inequality to evaluate
        #[arg(value_enum)]
        theorem: TheoremArg,
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        tols: TolArgs,
        /// Bound variant to evaluate
        #[arg(long, value_enum, default_value_t = VariantArg::All)]
        variant: VariantArg,
    },
    /// Run every configured check over a grid of pairs, orders, and intervals
    Sweep {
        /// JSON config file; defaults to the built-in desk suite
        #[arg(long)]
        config: Option<PathBuf>,
        /// Base seed for trial ids and per-trial point draws
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Randomized counterexample search with fresh corpus functions per trial
    Fuzz {
        /// JSON config file; defaults to the built-in desk suite
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed every draw derives from
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of randomized trials
        #[arg(long, default_value_t = 1000)]
        trials: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Re-emit a stored JSON sweep report, e.g. as CSV
    Report {
        /// JSON report produced by `sweep`
        input: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(clap::Args)]
struct FuncArg {
    /// Expression in x, e.g. "exp(x) - x^2"
    #[arg(long)]
    f: String,
}

#[derive(clap::Args)]
struct PairArgs {
    /// First expression in x
    #[arg(long)]
    f: String,
    /// Second expression in x
    #[arg(long)]
    g: String,
    /// Order, in (0, 1]
    #[arg(long)]
    alpha: f64,
    /// Left endpoint (positive)
    #[arg(long)]
    a: f64,
    /// Right endpoint (greater than a)
    #[arg(long)]
    b: f64,
}

#[derive(clap::Args)]
struct DomainArgs {
    /// Order, in (0, 1]
    #[arg(long)]
    alpha: f64,
    /// Left endpoint (positive)
    #[arg(long)]
    a: f64,
    /// Right endpoint (greater than a)
    #[arg(long)]
    b: f64,
}

#[derive(clap::Args)]
struct TolArgs {
    /// Absolute quadrature tolerance
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Relative quadrature tolerance
    #[arg(long)]
    rel_tol: Option<f64>,
}

impl TolArgs {
    fn spec(&self) -> Result<QuadratureSpec, Error> {
        let mut spec = QuadratureSpec::default();
        if let Some(abs) = self.abs_tol {
            spec.abs_tol = abs;
        }
        if let Some(rel) = self.rel_tol {
            spec.rel_tol = rel;
        }
        if let Err((field, message)) = spec.validate() {
            return Err(Error::InvalidConfig { field: field.to_string(), message });
        }
        Ok(spec)
    }
}

#[derive(clap::Args)]
struct OutputArgs {
    /// Write here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> ReportFormat {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TheoremArg {
    Thm31,
    Thm32,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Paper,
    Corrected,
    Safe,
    All,
}

impl VariantArg {
    fn selection(self) -> Vec<BoundVariant> {
        match self {
            VariantArg::Paper => vec![BoundVariant::Paper],
            VariantArg::Corrected => vec![BoundVariant::Corrected],
            VariantArg::Safe => vec![BoundVariant::Safe],
            VariantArg::All => BoundVariant::ALL.to_vec(),
        }
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NonConvergent(_) => EXIT_NONCONVERGENT,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn parse_function(text: &str) -> Result<ExpressionFn, Error> {
    Ok(parse_expr(text)?)
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Report(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<SweepConfig, Error> {
    let config = match path {
        None => desk_suite(),
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig {
                field: path.display().to_string(),
                message: e.to_string(),
            })?
        }
    };
    config.validate()?;
    Ok(config)
}

fn write_output(bytes: &[u8], out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

/// Exit code shared by everything that produces bound and identity reports:
/// only safe-variant bounds, identities, and witness resolution assert.
fn verdict(
    bounds: &[BoundReport],
    identities: &[IdentityReport],
    mvt_resolved: &[bool],
    errors_present: bool,
) -> i32 {
    let safe_violated = bounds
        .iter()
        .any(|b| b.variant == BoundVariant::Safe && !b.holds);
    if safe_violated || identities.iter().any(|i| !i.pass) || mvt_resolved.contains(&false) {
        return EXIT_ASSERTION;
    }
    let unconverged = bounds.iter().any(|b| !b.converged)
        || identities.iter().any(|i| !i.converged);
    if unconverged || errors_present {
        return EXIT_NONCONVERGENT;
    }
    EXIT_OK
}

fn dispatch(command: Command) -> Result<i32, Error> {
    match command {
        Command::Integrate { func, domain, tols } => {
            let f = parse_function(&func.f)?;
            let ctx = AlphaInterval::new(domain.alpha, domain.a, domain.b)?;
            let spec = tols.spec()?;
            let r = alpha_integral(&f, &ctx, &spec)?;
            print_json(&r)?;
            Ok(if r.converged { EXIT_OK } else { EXIT_NONCONVERGENT })
        }
        Command::Deriv { func, alpha, t, eps } => {
            let f = parse_function(&func.f)?;
            let value = conf_deriv(&f, t, alpha)?;
            let out = match eps {
                None => json!({ "value": value }),
                Some(eps) => {
                    let limit = conf_deriv_limit(&f, t, alpha, eps)?;
                    json!({
                        "value": value,
                        "limit_value": limit,
                        "abs_difference": (value - limit).abs(),
                    })
                }
            };
            print_json(&out)?;
            Ok(EXIT_OK)
        }
        Command::Mvt { func, alpha, x1, x2, tol } => {
            let f = parse_function(&func.f)?;
            let q = pompeiu_quotient(&f, x1, x2, alpha)?;
            let tol = tol.unwrap_or(1e-9 * q.abs().max(1.0));
            let r = find_xi(&f, x1, x2, alpha, tol)?;
            let resolved = r.residual <= MVT_RESOLVE_FACTOR * q.abs().max(1.0);
            print_json(&json!({
                "q": q,
                "xi": r.xi,
                "residual": r.residual,
                "bracket": r.bracket,
                "status": r.status,
                "resolved": resolved,
            }))?;
            Ok(if resolved { EXIT_OK } else { EXIT_ASSERTION })
        }
        Command::K { pair, tols } => {
            let (f, g, ctx) = pair_inputs(&pair)?;
            let spec = tols.spec()?;
            let k = functional_k(&f, &g, &ctx, &spec)?;
            let k_corrected = functional_k_corrected(&f, &g, &ctx, &spec)?;
            print_json(&json!({ "k": k, "k_corrected": k_corrected }))?;
            Ok(EXIT_OK)
        }
        Command::H { pair, tols } => {
            let (f, g, ctx) = pair_inputs(&pair)?;
            let spec = tols.spec()?;
            let h = functional_h(&f, &g, &ctx, &spec)?;
            print_json(&json!({ "h": h }))?;
            Ok(EXIT_OK)
        }
        Command::CheckIdentities { pair, tols, atol, rtol } => {
            let (f, g, ctx) = pair_inputs(&pair)?;
            let spec = tols.spec()?;
            let reports = vec![
                identity_k_with(&f, &g, &ctx, &spec, atol, rtol)?,
                identity_h_with(&f, &g, &ctx, &spec, atol, rtol)?,
                moment_c_crosscheck(&ctx, &spec)?,
                kernel_alpha1_agreement(ctx.a(), ctx.b())?,
            ];
            print_json(&reports)?;
            Ok(verdict(&[], &reports, &[], false))
        }
        Command::Verify { theorem, pair, tols, variant } => {
            let (f, g, ctx) = pair_inputs(&pair)?;
            let spec = tols.spec()?;
            let mut reports = Vec::new();
            for v in variant.selection() {
                let report = match theorem {
                    TheoremArg::Thm31 => bound_thm31(&f, &g, &ctx, &spec, v)?,
                    TheoremArg::Thm32 => bound_thm32(&f, &g, &ctx, &spec, v)?,
                };
                reports.push(report);
            }
            print_json(&reports)?;
            Ok(verdict(&reports, &[], &[], false))
        }
        Command::Sweep { config, seed, output } => {
            let config = load_config(config.as_deref())?;
            let records = run_sweep(&config, seed)?;
            let report = SweepReport {
                library_version: conformable::VERSION.to_string(),
                seed,
                config,
                records,
            };
            let mut buf = Vec::new();
            emit_report(&report, output.format.into(), &mut buf)?;
            write_output(&buf, output.out.as_deref())?;

            let bounds: Vec<BoundReport> =
                report.records.iter().flat_map(|r| r.bounds.clone()).collect();
            let identities: Vec<IdentityReport> =
                report.records.iter().flat_map(|r| r.identities.clone()).collect();
            let resolved: Vec<bool> = report
                .records
                .iter()
                .filter_map(|r| r.mvt.as_ref().map(|m| m.resolved))
                .collect();
            let errors = report.records.iter().any(|r| !r.errors.is_empty());
            Ok(verdict(&bounds, &identities, &resolved, errors))
        }
        Command::Fuzz { config, seed, trials, output } => {
            let config = load_config(config.as_deref())?;
            let summary = fuzz_search(seed, trials, &config)?;
            let mut buf = Vec::new();
            emit_fuzz_report(&summary, output.format.into(), &mut buf)?;
            write_output(&buf, output.out.as_deref())?;

            let assertion_failed = !summary.violations.is_empty()
                || summary.identity_stats.iter().any(|s| s.failures > 0)
                || summary.mvt.as_ref().is_some_and(|m| m.unresolved > 0);
            if assertion_failed {
                return Ok(EXIT_ASSERTION);
            }
            if summary.unconverged_checks > 0 || summary.trial_errors > 0 {
                return Ok(EXIT_NONCONVERGENT);
            }
            Ok(EXIT_OK)
        }
        Command::Report { input, output } => {
            let mut file = std::fs::File::open(&input)?;
            let report = read_report(&mut file)?;
            let mut buf = Vec::new();
            emit_report(&report, output.format.into(), &mut buf)?;
            write_output(&buf, output.out.as_deref())?;
            Ok(EXIT_OK)
        }
    }
}

fn pair_inputs(pair: &PairArgs) -> Result<(ExpressionFn, ExpressionFn, AlphaInterval), Error> {
    let f = parse_function(&pair.f)?;
    let g = parse_function(&pair.g)?;
    let ctx = AlphaInterval::new(pair.alpha, pair.a, pair.b)?;
    Ok((f, g, ctx))
}
