//! Sweep and fuzz configuration with field-naming validation.

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusConstraints, OpSet};
use crate::expr::parse_expr;
use crate::gruss::BoundVariant;
use crate::quad::QuadratureSpec;
use crate::Error;

/// Which checks a sweep runs on every trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Check {
    #[serde(rename = "thm31")]
    Thm31,
    #[serde(rename = "thm32")]
    Thm32,
    #[serde(rename = "identity_K")]
    IdentityK,
    #[serde(rename = "identity_H")]
    IdentityH,
    #[serde(rename = "mvt")]
    Mvt,
}

impl Check {
    pub const ALL: [Check; 5] =
        [Check::Thm31, Check::Thm32, Check::IdentityK, Check::IdentityH, Check::Mvt];
}

/// Where trial function pairs come from: explicit source texts or a seeded
/// corpus draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionSource {
    Pairs(Vec<(String, String)>),
    Corpus(CorpusSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSource {
    pub seed: u64,
    pub count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<ConstraintOverrides>,
}

/// Optional overrides of [`CorpusConstraints`]; anything unset falls back to
/// the defaults, with the screening interval defaulting to the hull of the
/// configured intervals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitude_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_ops: Option<Vec<OpName>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpName {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Var,
}

impl OpName {
    fn flag(self) -> OpSet {
        match self {
            OpName::Add => OpSet::ADD,
            OpName::Sub => OpSet::SUB,
            OpName::Mul => OpSet::MUL,
            OpName::Div => OpSet::DIV,
            OpName::Pow => OpSet::POW,
            OpName::Exp => OpSet::EXP,
            OpName::Log => OpSet::LOG,
            OpName::Sin => OpSet::SIN,
            OpName::Cos => OpSet::COS,
            OpName::Sqrt => OpSet::SQRT,
            OpName::Var => OpSet::VAR,
        }
    }
}

/// Full description of a sweep or fuzz campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
    pub functions: FunctionSource,
    #[serde(default = "all_variants")]
    pub variants: Vec<BoundVariant>,
    #[serde(default)]
    pub tolerances: QuadratureSpec,
    #[serde(default = "all_checks")]
    pub checks: Vec<Check>,
}

fn all_variants() -> Vec<BoundVariant> {
    BoundVariant::ALL.to_vec()
}

fn all_checks() -> Vec<Check> {
    Check::ALL.to_vec()
}

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::InvalidConfig { field: field.to_string(), message: message.into() }
}

impl SweepConfig {
    /// Check every invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<(), Error> {
        if self.alphas.is_empty() {
            return Err(config_err("alphas", "must not be empty"));
        }
        for (i, &alpha) in self.alphas.iter().enumerate() {
            if !(alpha.is_finite() && 0.0 < alpha && alpha <= 1.0) {
                return Err(config_err(
                    &format!("alphas[{i}]"),
                    format!("must lie in (0, 1], got {alpha}"),
                ));
            }
        }
        if self.intervals.is_empty() {
            return Err(config_err("intervals", "must not be empty"));
        }
        for (i, &(a, b)) in self.intervals.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && 0.0 < a && a < b) {
                return Err(config_err(
                    &format!("intervals[{i}]"),
                    format!("must satisfy 0 < a < b, got ({a}, {b})"),
                ));
            }
        }
        match &self.functions {
            FunctionSource::Pairs(pairs) => {
                if pairs.is_empty() {
                    return Err(config_err("functions.pairs", "must not be empty"));
                }
                for (i, (f, g)) in pairs.iter().enumerate() {
                    parse_expr(f).map_err(|e| {
                        config_err(&format!("functions.pairs[{i}].0"), e.to_string())
                    })?;
                    parse_expr(g).map_err(|e| {
                        config_err(&format!("functions.pairs[{i}].1"), e.to_string())
                    })?;
                }
            }
            FunctionSource::Corpus(c) => {
                if c.count == 0 {
                    return Err(config_err("functions.corpus.count", "must be at least 1"));
                }
                if let Some(o) = &c.constraints {
                    if let Some((a, b)) = o.interval {
                        if !(a.is_finite() && b.is_finite() && 0.0 < a && a < b) {
                            return Err(config_err(
                                "functions.corpus.constraints.interval",
                                format!("must satisfy 0 < a < b, got ({a}, {b})"),
                            ));
                        }
                    }
                    if o.max_depth == Some(0) {
                        return Err(config_err(
                            "functions.corpus.constraints.max_depth",
                            "must be at least 1",
                        ));
                    }
                    if let Some(cap) = o.magnitude_cap {
                        if !(cap.is_finite() && cap > 0.0) {
                            return Err(config_err(
                                "functions.corpus.constraints.magnitude_cap",
                                format!("must be positive, got {cap}"),
                            ));
                        }
                    }
                }
            }
        }
        if self.variants.is_empty() {
            return Err(config_err("variants", "must not be empty"));
        }
        if self.checks.is_empty() {
            return Err(config_err("checks", "must not be empty"));
        }
        if let Err((field, message)) = self.tolerances.validate() {
            return Err(config_err(&format!("tolerances.{field}"), message));
        }
        Ok(())
    }

    /// Convex hull of the configured intervals.
    pub fn interval_hull(&self) -> (f64, f64) {
        let a = self.intervals.iter().map(|i| i.0).fold(f64::INFINITY, f64::min);
        let b = self.intervals.iter().map(|i| i.1).fold(f64::NEG_INFINITY, f64::max);
        (a, b)
    }

    /// Corpus constraints with overrides applied; `fallback_interval` is the
    /// screen interval when the config does not pin one.
    pub fn resolve_constraints(&self, fallback_interval: (f64, f64)) -> CorpusConstraints {
        let overrides = match &self.functions {
            FunctionSource::Corpus(c) => c.constraints.clone(),
            FunctionSource::Pairs(_) => None,
        };
        let overrides = overrides.unwrap_or_default();
        let defaults = CorpusConstraints::default();
        CorpusConstraints {
            interval: overrides.interval.unwrap_or(fallback_interval),
            max_depth: overrides.max_depth.unwrap_or(defaults.max_depth),
            magnitude_cap: overrides.magnitude_cap.unwrap_or(defaults.magnitude_cap),
            allowed_ops: match overrides.allowed_ops {
                None => defaults.allowed_ops,
                Some(names) => names
                    .iter()
                    .fold(OpSet::empty(), |acc, name| acc.union(name.flag())),
            },
        }
    }

    /// Variants in canonical order (`paper`, `corrected`, `safe`) filtered to
    /// the configured selection, so output ordering does not depend on how
    /// the config file lists them.
    pub fn selected_variants(&self) -> Vec<BoundVariant> {
        BoundVariant::ALL.iter().copied().filter(|v| self.variants.contains(v)).collect()
    }

    pub fn wants(&self, check: Check) -> bool {
        self.checks.contains(&check)
    }
}

/// Corpus seed of the default campaign.
pub const DESK_CORPUS_SEED: u64 = 20260822;

/// The default campaign: a four-by-four grid of orders and intervals, a
/// 25-pair seeded corpus, every check, every variant.
pub fn desk_suite() -> SweepConfig {
    SweepConfig {
        alphas: vec![0.25, 0.5, 0.75, 1.0],
        intervals: vec![(1.0, 2.0), (1.0, 4.0), (0.5, 3.0), (2.0, 5.0)],
        functions: FunctionSource::Corpus(CorpusSource {
            seed: DESK_CORPUS_SEED,
            count: 25,
            constraints: None,
        }),
        variants: all_variants(),
        tolerances: QuadratureSpec::default(),
        checks: all_checks(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_suite_validates() {
        desk_suite().validate().unwrap();
    }

    #[test]
    fn validation_names_the_offending_field() {
        let mut c = desk_suite();
        c.alphas = vec![0.5, 1.5];
        match c.validate().unwrap_err() {
            Error::InvalidConfig { field, .. } => assert_eq!(field, "alphas[1]"),
            other => panic!("unexpected error {other}"),
        }

        let mut c = desk_suite();
        c.intervals[2] = (3.0, 1.0);
        match c.validate().unwrap_err() {
            Error::InvalidConfig { field, .. } => assert_eq!(field, "intervals[2]"),
            other => panic!("unexpected error {other}"),
        }

        let mut c = desk_suite();
        c.functions = FunctionSource::Pairs(vec![("x".into(), "x +".into())]);
        match c.validate().unwrap_err() {
            Error::InvalidConfig { field, .. } => assert_eq!(field, "functions.pairs[0].1"),
            other => panic!("unexpected error {other}"),
        }

        let mut c = desk_suite();
        c.tolerances.abs_tol = 0.0;
        match c.validate().unwrap_err() {
            Error::InvalidConfig { field, .. } => assert_eq!(field, "tolerances.abs_tol"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = desk_suite();
        let text = serde_json::to_string_pretty(&c).unwrap();
        let back: SweepConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "alphas": [0.5],
            "intervals": [[1.0, 2.0]],
            "functions": {"pairs": [["x", "x^2"]]},
            "surprise": 7
        }"#;
        assert!(serde_json::from_str::<SweepConfig>(text).is_err());
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let text = r#"{
            "alphas": [1.0],
            "intervals": [[1.0, 2.0]],
            "functions": {"pairs": [["x", "exp(x)"]]}
        }"#;
        let c: SweepConfig = serde_json::from_str(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.variants, all_variants());
        assert_eq!(c.checks, Check::ALL.to_vec());
        assert_eq!(c.tolerances, QuadratureSpec::default());
    }

    #[test]
    fn op_name_overrides_restrict_the_opset() {
        let mut c = desk_suite();
        c.functions = FunctionSource::Corpus(CorpusSource {
            seed: 1,
            count: 2,
            constraints: Some(ConstraintOverrides {
                allowed_ops: Some(vec![OpName::Add, OpName::Var]),
                ..ConstraintOverrides::default()
            }),
        });
        let resolved = c.resolve_constraints(c.interval_hull());
        assert!(resolved.allowed_ops.contains(OpSet::ADD));
        assert!(resolved.allowed_ops.contains(OpSet::VAR));
        assert!(!resolved.allowed_ops.contains(OpSet::MUL));
        assert_eq!(resolved.interval, (0.5, 5.0));
    }
}
