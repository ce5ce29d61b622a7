//! Order-`alpha` derivative and weighted integrals on a positive interval.
//!
//! For `0 < alpha <= 1` and `t > 0` the order-`alpha` derivative of `f` is
//! `t^(1-alpha) * f'(t)`, and the weighted integral over `[a, b]` with
//! `0 < a < b` is the ordinary integral of `f(x) * x^(alpha-1)`. At
//! `alpha = 1` both reduce exactly to the classical derivative and integral:
//! `powf(x, 0.0)` is `1.0` and `powf(x, 1.0)` is `x` bit-for-bit, so the
//! reduction introduces no rounding of its own.

use std::cell::{Cell, RefCell};

use crate::expr::{EvalError, ExpressionFn};
use crate::quad::{self, QuadResult, QuadratureSpec};
use crate::Error;

/// A validated `(alpha, a, b)` triple: `0 < alpha <= 1`, `0 < a < b`, all
/// finite. Keeping the interval strictly positive keeps the weight
/// `x^(alpha-1)` and every power `x^(k*alpha)` finite and smooth on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaInterval {
    alpha: f64,
    a: f64,
    b: f64,
}

impl AlphaInterval {
    pub fn new(alpha: f64, a: f64, b: f64) -> Result<AlphaInterval, Error> {
        check_alpha(alpha)?;
        if !(a.is_finite() && b.is_finite() && 0.0 < a && a < b) {
            return Err(Error::InvalidArgument(format!(
                "interval must satisfy 0 < a < b with finite endpoints, got a = {a}, b = {b}"
            )));
        }
        Ok(AlphaInterval { alpha, a, b })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `b^(k*alpha) - a^(k*alpha)`, the span constant of order `k`.
    pub fn pow_span(&self, k: u32) -> f64 {
        let ka = self.alpha * k as f64;
        self.b.powf(ka) - self.a.powf(ka)
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), Error> {
    if !(alpha.is_finite() && 0.0 < alpha && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Order-`alpha` derivative at `t`: `t^(1-alpha) * f'(t)` with the exact
/// derivative from dual-number evaluation.
pub fn conf_deriv(f: &ExpressionFn, t: f64, alpha: f64) -> Result<f64, Error> {
    check_alpha(alpha)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let (_, d) = f.eval(t)?;
    Ok(t.powf(1.0 - alpha) * d)
}

/// Order-`alpha` derivative approximated by the symmetric difference quotient
/// `[f(t + eps*t^(1-alpha)) - f(t - eps*t^(1-alpha))] / (2*eps)`.
///
/// Exists as an independent cross-check on [`conf_deriv`]; agreement between
/// the two is a property of the definition, not of shared code.
pub fn conf_deriv_limit(f: &ExpressionFn, t: f64, alpha: f64, eps: f64) -> Result<f64, Error> {
    check_alpha(alpha)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let step = eps * t.powf(1.0 - alpha);
    if t + step == t {
        return Err(Error::InvalidArgument(format!(
            "step {step} underflows at t = {t}; eps is too small for this scale"
        )));
    }
    if t - step <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "step {step} reaches past zero at t = {t}; eps is too large"
        )));
    }
    let hi = f.value(t + step)?;
    let lo = f.value(t - step)?;
    Ok((hi - lo) / (2.0 * eps))
}

/// Weighted integral of `f` over the interval: `integral of f(x) x^(alpha-1)`.
pub fn alpha_integral(
    f: &ExpressionFn,
    ctx: &AlphaInterval,
    spec: &QuadratureSpec,
) -> Result<QuadResult, Error> {
    alpha_integral_fn(|x| f.value(x), ctx, spec)
}

/// Weighted integral of an arbitrary pointwise function.
pub fn alpha_integral_fn<F>(
    mut f: F,
    ctx: &AlphaInterval,
    spec: &QuadratureSpec,
) -> Result<QuadResult, Error>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    validate_spec(spec)?;
    let alpha = ctx.alpha();
    let mut g = |x: f64| -> Result<f64, EvalError> { Ok(f(x)? * x.powf(alpha - 1.0)) };
    Ok(quad::adaptive_quad(&mut g, ctx.a(), ctx.b(), spec)?)
}

/// Doubly weighted integral of `big_f(x, t)` over the square `[a, b]^2`:
/// the integral of `big_f(x, t) * t^(alpha-1) * x^(alpha-1)`.
///
/// The outer (x) integration runs at the requested tolerances; each inner (t)
/// integration runs ten times tighter so its error stays subordinate.
/// `evaluations` counts calls to `big_f`; the subdivision budget is
/// `max_subdivisions^2` shared across outer and inner runs together.
pub fn alpha_integral_2d<F>(
    big_f: F,
    ctx: &AlphaInterval,
    spec: &QuadratureSpec,
) -> Result<QuadResult, Error>
where
    F: Fn(f64, f64) -> Result<f64, EvalError>,
{
    validate_spec(spec)?;
    let alpha = ctx.alpha();
    let (a, b) = (ctx.a(), ctx.b());
    let inner_spec = QuadratureSpec {
        abs_tol: spec.abs_tol * 0.1,
        rel_tol: spec.rel_tol * 0.1,
        ..*spec
    };
    let budget = Cell::new((spec.max_subdivisions as u64).saturating_mul(spec.max_subdivisions as u64));

    struct InnerStats {
        evaluations: u64,
        worst_error: f64,
        all_converged: bool,
    }
    let stats = RefCell::new(InnerStats { evaluations: 0, worst_error: 0.0, all_converged: true });

    let mut outer_integrand = |x: f64| -> Result<f64, EvalError> {
        let mut inner_integrand =
            |t: f64| -> Result<f64, EvalError> { Ok(big_f(x, t)? * t.powf(alpha - 1.0)) };
        let inner = quad::adaptive_quad_with_budget(&mut inner_integrand, a, b, &inner_spec, &budget)?;
        let mut s = stats.borrow_mut();
        s.evaluations += inner.evaluations;
        s.worst_error = s.worst_error.max(inner.error_estimate);
        s.all_converged &= inner.converged;
        Ok(inner.value * x.powf(alpha - 1.0))
    };
    let outer = quad::adaptive_quad_with_budget(&mut outer_integrand, a, b, spec, &budget)?;

    let stats = stats.into_inner();
    // Pointwise inner errors integrate against the outer weight, whose mass
    // is (b^alpha - a^alpha) / alpha.
    let weight_mass = ctx.pow_span(1) / alpha;
    Ok(QuadResult {
        value: outer.value,
        error_estimate: outer.error_estimate + stats.worst_error * weight_mass,
        evaluations: stats.evaluations,
        converged: outer.converged && stats.all_converged,
    })
}

pub(crate) fn validate_spec(spec: &QuadratureSpec) -> Result<(), Error> {
    spec.validate()
        .map_err(|(field, msg)| Error::InvalidArgument(format!("quadrature {field}: {msg}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn ctx(alpha: f64, a: f64, b: f64) -> AlphaInterval {
        AlphaInterval::new(alpha, a, b).unwrap()
    }

    #[test]
    fn interval_validation_rejects_bad_inputs() {
        assert!(AlphaInterval::new(0.0, 1.0, 2.0).is_err());
        assert!(AlphaInterval::new(1.5, 1.0, 2.0).is_err());
        assert!(AlphaInterval::new(f64::NAN, 1.0, 2.0).is_err());
        assert!(AlphaInterval::new(0.5, -1.0, 2.0).is_err());
        assert!(AlphaInterval::new(0.5, 0.0, 2.0).is_err());
        assert!(AlphaInterval::new(0.5, 2.0, 2.0).is_err());
        assert!(AlphaInterval::new(0.5, 3.0, 2.0).is_err());
        assert!(AlphaInterval::new(0.5, 1.0, f64::INFINITY).is_err());
        assert!(AlphaInterval::new(1.0, 0.5, 3.0).is_ok());
    }

    #[test]
    fn deriv_matches_power_rule() {
        // For f = t^2: t^(1-alpha) * 2t = 2 t^(2-alpha).
        let f = parse_expr("x^2").unwrap();
        let d = conf_deriv(&f, 2.0, 0.5).unwrap();
        assert!((d - 2.0 * 2.0f64.powf(1.5)).abs() < 1e-14);
        // alpha = 1 is the classical derivative, exactly.
        assert_eq!(conf_deriv(&f, 2.0, 1.0).unwrap(), 4.0);
    }

    #[test]
    fn limit_form_agrees_with_closed_form() {
        let f = parse_expr("exp(x) + x^3").unwrap();
        for &(t, alpha) in &[(0.5, 0.25), (1.0, 0.5), (2.0, 0.75), (3.0, 1.0)] {
            let exact = conf_deriv(&f, t, alpha).unwrap();
            let approx = conf_deriv_limit(&f, t, alpha, 1e-6).unwrap();
            assert!(
                (exact - approx).abs() <= 1e-6 * exact.abs().max(1.0),
                "t={t} alpha={alpha}: {exact} vs {approx}"
            );
        }
    }

    #[test]
    fn limit_form_rejects_degenerate_steps() {
        let f = parse_expr("x^2").unwrap();
        assert!(matches!(
            conf_deriv_limit(&f, 1.0, 1.0, 1e-300),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            conf_deriv_limit(&f, 1e-3, 1.0, 0.5),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn weighted_integral_of_constant_one() {
        // integral of x^(alpha-1) over [a,b] is (b^alpha - a^alpha)/alpha.
        let one = parse_expr("1").unwrap();
        for &(alpha, a, b) in &[(0.25, 1.0, 2.0), (0.5, 1.0, 4.0), (0.75, 0.5, 3.0), (1.0, 2.0, 5.0)] {
            let c = ctx(alpha, a, b);
            let r = alpha_integral(&one, &c, &QuadratureSpec::default()).unwrap();
            let exact = c.pow_span(1) / alpha;
            assert!(r.converged);
            assert!((r.value - exact).abs() < 1e-10, "alpha={alpha} [{a},{b}]");
        }
    }

    #[test]
    fn weight_cancellation_yields_plain_length() {
        // f(x) = x^(1-alpha) makes the weighted integrand identically 1.
        let c = ctx(0.5, 1.0, 4.0);
        let f = parse_expr("x^0.5").unwrap();
        let r = alpha_integral(&f, &c, &QuadratureSpec::default()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-11);
    }

    #[test]
    fn alpha_one_reduces_to_classical_integral() {
        let f = parse_expr("exp(x)*sin(x)").unwrap();
        let c = ctx(1.0, 1.0, 2.0);
        let spec = QuadratureSpec::default();
        let weighted = alpha_integral(&f, &c, &spec).unwrap();
        let mut plain = |x: f64| f.value(x);
        let classical = quad::adaptive_quad(&mut plain, 1.0, 2.0, &spec).unwrap();
        assert_eq!(weighted.value, classical.value);
    }

    #[test]
    fn square_integral_separates_for_product_integrands() {
        // big_f(x,t) = f(x) g(t) makes the square integral a product of two
        // one-dimensional weighted integrals.
        let f = parse_expr("x^2").unwrap();
        let g = parse_expr("exp(x)").unwrap();
        let c = ctx(0.5, 1.0, 2.0);
        let spec = QuadratureSpec::default();
        let lhs = alpha_integral_2d(
            |x, t| Ok(f.value(x)? * g.value(t)?),
            &c,
            &spec,
        )
        .unwrap();
        let rf = alpha_integral(&f, &c, &spec).unwrap();
        let rg = alpha_integral(&g, &c, &spec).unwrap();
        assert!(lhs.converged);
        assert!((lhs.value - rf.value * rg.value).abs() < 1e-8);
        assert!((lhs.value - rf.value * rg.value).abs() <= lhs.error_estimate + 1e-9);
    }

    #[test]
    fn square_integral_of_antisymmetric_integrand_vanishes() {
        let c = ctx(0.75, 1.0, 3.0);
        let r = alpha_integral_2d(|x, t| Ok(x * x * t - t * t * x), &c, &QuadratureSpec::default());
        let r = r.unwrap();
        assert!(r.value.abs() < 1e-9);
    }

    #[test]
    fn square_integral_budget_is_shared() {
        let c = ctx(0.5, 1.0, 2.0);
        let spec = QuadratureSpec { max_subdivisions: 2, abs_tol: 1e-14, rel_tol: 1e-14, ..QuadratureSpec::default() };
        let r = alpha_integral_2d(|x, t| Ok((50.0 * x * t).sin()), &c, &spec).unwrap();
        assert!(!r.converged);
    }
}
