//! Seeded generation of random test functions.
//!
//! `sample_function` draws expression trees from a seeded stream and keeps
//! the first one that passes a dense evaluation screen on the target
//! interval: every point evaluates without a domain error, values stay below
//! the magnitude cap, and derivatives stay below ten times the cap. The
//! screen is what makes downstream quadrature and sup-norm scans total: a
//! kept function is certified finite on its interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::{Expr, ExpressionFn, Func};
use crate::Error;

/// Operation toggles for generated trees, as a small bitset.
///
/// `VAR` controls whether `x` may appear at leaves; with it cleared the
/// corpus degenerates to constants, which downstream property tests use to
/// pin equality cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpSet(u16);

impl OpSet {
    pub const ADD: OpSet = OpSet(1 << 0);
    pub const SUB: OpSet = OpSet(1 << 1);
    pub const MUL: OpSet = OpSet(1 << 2);
    pub const DIV: OpSet = OpSet(1 << 3);
    pub const POW: OpSet = OpSet(1 << 4);
    pub const EXP: OpSet = OpSet(1 << 5);
    pub const LOG: OpSet = OpSet(1 << 6);
    pub const SIN: OpSet = OpSet(1 << 7);
    pub const COS: OpSet = OpSet(1 << 8);
    pub const SQRT: OpSet = OpSet(1 << 9);
    pub const VAR: OpSet = OpSet(1 << 10);

    pub const fn empty() -> OpSet {
        OpSet(0)
    }

    pub const fn all() -> OpSet {
        OpSet((1 << 11) - 1)
    }

    pub const fn union(self, other: OpSet) -> OpSet {
        OpSet(self.0 | other.0)
    }

    pub const fn without(self, other: OpSet) -> OpSet {
        OpSet(self.0 & !other.0)
    }

    pub const fn contains(self, other: OpSet) -> bool {
        self.0 & other.0 == other.0
    }
}

impl Default for OpSet {
    fn default() -> Self {
        OpSet::all()
    }
}

/// Shape constraints for generated functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusConstraints {
    /// Interval the screen runs on; also the certified domain of the result.
    pub interval: (f64, f64),
    /// Maximum tree depth, counting the root as depth 1.
    pub max_depth: u32,
    /// Cap on `|f|` over the interval; `|f'|` is capped at ten times this.
    pub magnitude_cap: f64,
    pub allowed_ops: OpSet,
}

impl Default for CorpusConstraints {
    fn default() -> Self {
        CorpusConstraints {
            interval: (0.5, 5.0),
            max_depth: 4,
            magnitude_cap: 25.0,
            allowed_ops: OpSet::all(),
        }
    }
}

/// Grid size of the acceptance screen.
pub const SCREEN_POINTS: usize = 1001;
/// `|f'|` is screened against `DERIV_CAP_FACTOR * magnitude_cap`.
pub const DERIV_CAP_FACTOR: f64 = 10.0;
const MAX_ATTEMPTS: u32 = 500;

/// Mix a base seed with two stream indices into a fresh 64-bit seed.
///
/// Distinct `(base, lane, slot)` triples give independent streams, so a
/// schedule can derive per-trial and per-role seeds without coupling the
/// draws to execution order.
pub fn mix_seed(base: u64, lane: u64, slot: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(base ^ splitmix(lane.wrapping_add(1) ^ splitmix(slot.wrapping_add(1))))
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&seed.rotate_left(17).to_le_bytes());
    bytes[16..24].copy_from_slice(&seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).to_le_bytes());
    bytes[24..32].copy_from_slice(&(!seed).to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

const LEAF_CONSTANTS: [f64; 8] = [1.0, 2.0, 3.0, 0.5, 0.25, 1.5, 5.0, 0.75];

#[derive(Clone, Copy)]
enum NodeKind {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Un(Func),
}

fn allowed_nodes(ops: OpSet) -> Vec<NodeKind> {
    let mut kinds = Vec::new();
    // Binary operators enter twice: without the extra weight the corpus
    // skews heavily toward wrapped unary calls.
    for (flag, kind) in [
        (OpSet::ADD, NodeKind::Add),
        (OpSet::SUB, NodeKind::Sub),
        (OpSet::MUL, NodeKind::Mul),
        (OpSet::DIV, NodeKind::Div),
    ] {
        if ops.contains(flag) {
            kinds.push(kind);
            kinds.push(kind);
        }
    }
    if ops.contains(OpSet::POW) {
        kinds.push(NodeKind::Pow);
    }
    for (flag, f) in [
        (OpSet::EXP, Func::Exp),
        (OpSet::LOG, Func::Log),
        (OpSet::SIN, Func::Sin),
        (OpSet::COS, Func::Cos),
        (OpSet::SQRT, Func::Sqrt),
    ] {
        if ops.contains(flag) {
            kinds.push(NodeKind::Un(f));
        }
    }
    kinds
}

fn gen_leaf(rng: &mut ChaCha8Rng, ops: OpSet) -> Expr {
    if ops.contains(OpSet::VAR) && rng.gen_bool(0.6) {
        return Expr::Var;
    }
    let mut c = LEAF_CONSTANTS[rng.gen_range(0..LEAF_CONSTANTS.len())];
    if rng.gen_bool(0.3) {
        c = -c;
    }
    Expr::Num(c)
}

fn gen_tree(rng: &mut ChaCha8Rng, kinds: &[NodeKind], ops: OpSet, depth: u32, max_depth: u32) -> Expr {
    let must_leaf = depth >= max_depth || kinds.is_empty();
    if must_leaf || rng.gen_bool(0.25 + 0.1 * depth as f64) {
        return gen_leaf(rng, ops);
    }
    match kinds[rng.gen_range(0..kinds.len())] {
        NodeKind::Add => Expr::Add(
            Box::new(gen_tree(rng, kinds, ops, depth + 1, max_depth)),
            Box::new(gen_tree(rng, kinds, ops, depth + 1, max_depth)),
        ),
        NodeKind::Sub => Expr::Sub(
            Box::new(gen_tree(rng, kinds, ops, depth + 1, max_depth)),
            Box::new(gen_tree(rng, kinds, ops, depth + 1, max_depth)),
        ),
        NodeKind::Mul => Expr::Mul(
            Box::new(gen_tree(rng, kinds, ops, depth + 1, max_depth)),
            Box::new(gen_tree(rng, kinds, ops, depth + 1, max_depth)),
        ),
        NodeKind::Div => Expr::Div(
            Box::new(gen_tree(rng, kinds, ops, depth + 1, max_depth)),
            Box::new(gen_tree(rng, kinds, ops, depth + 1, max_depth)),
        ),
        // Exponents stay small integers: the screen would reject almost
        // every free-form exponent anyway, wasting the attempt budget.
        NodeKind::Pow => Expr::Pow(
            Box::new(gen_tree(rng, kinds, ops, depth + 1, max_depth)),
            Box::new(Expr::Num(if rng.gen_bool(0.7) { 2.0 } else { 3.0 })),
        ),
        NodeKind::Un(f) => Expr::Call(f, Box::new(gen_tree(rng, kinds, ops, depth + 1, max_depth))),
    }
}

fn passes_screen(f: &ExpressionFn, c: &CorpusConstraints) -> bool {
    let (a, b) = c.interval;
    let deriv_cap = DERIV_CAP_FACTOR * c.magnitude_cap;
    for i in 0..SCREEN_POINTS {
        let x = a + (b - a) * (i as f64) / ((SCREEN_POINTS - 1) as f64);
        match f.eval(x) {
            Ok((v, d)) => {
                if v.abs() > c.magnitude_cap || d.abs() > deriv_cap {
                    return false;
                }
            }
            Err(_) => return false,
        }
    }
    true
}

fn check_constraints(c: &CorpusConstraints) -> Result<(), Error> {
    let (a, b) = c.interval;
    if !(a.is_finite() && b.is_finite() && 0.0 < a && a < b) {
        return Err(Error::InvalidArgument(format!(
            "corpus interval must satisfy 0 < a < b, got ({a}, {b})"
        )));
    }
    if c.max_depth == 0 {
        return Err(Error::InvalidArgument("corpus max_depth must be at least 1".into()));
    }
    if !(c.magnitude_cap.is_finite() && c.magnitude_cap > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "corpus magnitude_cap must be positive, got {}",
            c.magnitude_cap
        )));
    }
    Ok(())
}

/// Draw one screened function. The same `(seed, constraints)` pair always
/// returns the same function; rejected attempts advance the random stream
/// deterministically.
pub fn sample_function(seed: u64, constraints: &CorpusConstraints) -> Result<ExpressionFn, Error> {
    check_constraints(constraints)?;
    let mut rng = rng_for(seed);
    let kinds = allowed_nodes(constraints.allowed_ops);
    let (a, b) = constraints.interval;
    for _ in 0..MAX_ATTEMPTS {
        let tree = gen_tree(&mut rng, &kinds, constraints.allowed_ops, 1, constraints.max_depth);
        let mut f = ExpressionFn::from_expr(tree);
        if passes_screen(&f, constraints) {
            // The screen just succeeded on the same grid, so this cannot fail.
            f.certify_on(a, b, SCREEN_POINTS).expect("screened function certifies");
            return Ok(f);
        }
    }
    Err(Error::CorpusExhausted { seed, attempts: MAX_ATTEMPTS })
}
