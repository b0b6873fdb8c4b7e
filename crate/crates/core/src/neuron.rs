//! Neurons as threshold classifiers and their compilation to OBDDs.
//!
//! A step-activation neuron fires iff `Σ wᵢ·xᵢ + b ≥ 0`, which is the linear
//! classifier `Σ wᵢ·xᵢ ≥ T` with `T = -b`. Two compilers are provided:
//!
//! * [`compile_pseudo`] works on integer weights. It fills a table of
//!   sub-classifiers keyed by `(depth, residual threshold)`; the number of
//!   cells is bounded by `n·(2W+1)` where `W = |T| + Σ|wᵢ|`.
//! * [`compile_exact`] is a memoized Shannon expansion over exact residual
//!   thresholds. It is exponential in the worst case and capped at a small
//!   arity; it serves as a reference.
//!
//! Real weights are interpreted as the decimal numbers they print as (the
//! shortest representation that round-trips the `f64`), so `1.15` means
//! exactly 115/100 and scaling by a power of ten is exact.

use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::instance::{Instance, VarId};
use crate::obdd::{Manager, NodeRef, ObddError};

/// Largest arity [`compile_exact`] accepts by default.
pub const DEFAULT_EXACT_CAP: usize = 20;

/// Largest number of decimal digits [`quantize`] accepts.
pub const MAX_DIGITS: u32 = 9;

#[derive(Debug, Error)]
pub enum NeuronError {
    #[error("weight or bias is not finite")]
    NonFinite,
    #[error("{0} digits requested, at most {MAX_DIGITS} supported")]
    DigitsOutOfRange(u32),
    #[error("quantized parameters overflow a 64-bit integer")]
    QuantizeOverflow,
    #[error("unit has {arity} inputs but {vars} variables were supplied")]
    BindingArity { arity: usize, vars: usize },
    #[error("variable {0} is bound to more than one input")]
    DuplicateBinding(VarId),
    #[error("exact compilation of {arity} inputs exceeds the cap of {cap}")]
    ExactCapExceeded { arity: usize, cap: usize },
    #[error("neuron file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Obdd(#[from] ObddError),
}

pub type Result<T> = std::result::Result<T, NeuronError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoundMode {
    /// Toward zero.
    #[default]
    Truncate,
    /// To the nearest integer, halves away from zero.
    Nearest,
}

/// A neuron with real weights and bias; fires iff `Σ w·x + b ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearThresholdUnit {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// The same neuron with the bias moved to the right-hand side:
/// fires iff `Σ w·x ≥ threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdClassifier {
    pub weights: Vec<f64>,
    pub threshold: f64,
}

/// Integer linear classifier: fires iff `Σ w·x ≥ threshold`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntThresholdUnit {
    weights: Vec<i64>,
    threshold: i64,
    magnitude: i64,
}

/// Exact integer form of any threshold classifier over a common scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactUnit {
    pub weights: Vec<BigInt>,
    pub threshold: BigInt,
}

impl LinearThresholdUnit {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        LinearThresholdUnit { weights, bias }
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    pub fn to_threshold_form(&self) -> ThresholdClassifier {
        ThresholdClassifier { weights: self.weights.clone(), threshold: -self.bias }
    }

    /// The pre-activation `Σ w·x + b` in floating point.
    pub fn activation(&self, x: &[bool]) -> f64 {
        self.weights.iter().zip(x).filter(|(_, &b)| b).map(|(w, _)| w).sum::<f64>() + self.bias
    }

    pub fn exact(&self) -> Result<ExactUnit> {
        self.to_threshold_form().exact()
    }
}

impl ThresholdClassifier {
    pub fn exact(&self) -> Result<ExactUnit> {
        let mut parts = self.weights.iter().map(|&w| decimal_parts(w)).collect::<Result<Vec<_>>>()?;
        parts.push(decimal_parts(self.threshold)?);
        let scale = parts.iter().map(|&(_, s)| s).max().unwrap_or(0);
        let mut ints: Vec<BigInt> = parts.into_iter().map(|(m, s)| m * pow10(scale - s)).collect();
        let threshold = ints.pop().unwrap();
        Ok(ExactUnit { weights: ints, threshold })
    }
}

impl IntThresholdUnit {
    /// Fails when `W = |T| + Σ|w|` does not fit in an `i64`.
    pub fn new(weights: Vec<i64>, threshold: i64) -> Result<Self> {
        let magnitude = weights
            .iter()
            .try_fold(threshold.checked_abs(), |acc, w| Some(acc?.checked_add(w.checked_abs()?)))
            .flatten()
            .ok_or(NeuronError::QuantizeOverflow)?;
        Ok(IntThresholdUnit { weights, threshold, magnitude })
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn threshold(&self) -> i64 {
        self.threshold
    }

    /// `W = |T| + Σ|w|`.
    pub fn magnitude(&self) -> i64 {
        self.magnitude
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    pub fn fires(&self, x: &[bool]) -> bool {
        let s: i128 = self.weights.iter().zip(x).filter(|(_, &b)| b).map(|(&w, _)| w as i128).sum();
        s >= self.threshold as i128
    }

    pub fn exact(&self) -> ExactUnit {
        ExactUnit {
            weights: self.weights.iter().map(|&w| BigInt::from(w)).collect(),
            threshold: BigInt::from(self.threshold),
        }
    }

    /// The unit with every parameter multiplied by `factor`.
    pub fn scaled(&self, factor: i64) -> Result<Self> {
        let weights = self
            .weights
            .iter()
            .map(|w| w.checked_mul(factor))
            .collect::<Option<Vec<_>>>()
            .ok_or(NeuronError::QuantizeOverflow)?;
        let t = self.threshold.checked_mul(factor).ok_or(NeuronError::QuantizeOverflow)?;
        Self::new(weights, t)
    }
}

impl ExactUnit {
    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    pub fn fires(&self, x: &[bool]) -> bool {
        let mut s = BigInt::zero();
        for (w, &b) in self.weights.iter().zip(x) {
            if b {
                s += w;
            }
        }
        s >= self.threshold
    }

    /// The same unit with `i64` weights, when they and `W` fit.
    pub fn to_int(&self) -> Result<IntThresholdUnit> {
        let weights = self.weights.iter().map(|w| w.to_i64()).collect::<Option<Vec<_>>>();
        match (weights, self.threshold.to_i64()) {
            (Some(w), Some(t)) => IntThresholdUnit::new(w, t),
            _ => Err(NeuronError::QuantizeOverflow),
        }
    }
}

/// Anything with an exact threshold-classifier reading.
pub trait ExactThreshold {
    fn exact_unit(&self) -> Result<ExactUnit>;
}

impl ExactThreshold for LinearThresholdUnit {
    fn exact_unit(&self) -> Result<ExactUnit> {
        self.exact()
    }
}

impl ExactThreshold for ThresholdClassifier {
    fn exact_unit(&self) -> Result<ExactUnit> {
        self.exact()
    }
}

impl ExactThreshold for IntThresholdUnit {
    fn exact_unit(&self) -> Result<ExactUnit> {
        Ok(self.exact())
    }
}

impl ExactThreshold for ExactUnit {
    fn exact_unit(&self) -> Result<ExactUnit> {
        Ok(self.clone())
    }
}

fn pow10(e: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), e as usize)
}

/// Splits `x` into `(mantissa, scale)` with `x = mantissa / 10^scale`, using
/// the shortest decimal that round-trips.
fn decimal_parts(x: f64) -> Result<(BigInt, u32)> {
    if !x.is_finite() {
        return Err(NeuronError::NonFinite);
    }
    // `Display` for f64 never uses exponent notation.
    let s = format!("{}", x);
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.as_str()),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let all = format!("{}{}", int, frac);
    let mut m: BigInt = all.parse().expect("f64 display is decimal");
    if neg {
        m = -m;
    }
    Ok((m, frac.len() as u32))
}

fn round_scaled(x: f64, digits: u32, mode: RoundMode) -> Result<i64> {
    let (m, s) = decimal_parts(x)?;
    let q = if digits >= s {
        m * pow10(digits - s)
    } else {
        let d = pow10(s - digits);
        match mode {
            RoundMode::Truncate => m / d,
            RoundMode::Nearest => {
                let half = &d / 2;
                let mag: BigInt = (m.abs() + half) / d;
                if m.sign() == Sign::Minus {
                    -mag
                } else {
                    mag
                }
            }
        }
    };
    q.to_i64().ok_or(NeuronError::QuantizeOverflow)
}

/// Scales every weight and the threshold `-b` by `10^digits` and rounds to
/// integers.
pub fn quantize(u: &LinearThresholdUnit, digits: u32, mode: RoundMode) -> Result<IntThresholdUnit> {
    if digits > MAX_DIGITS {
        return Err(NeuronError::DigitsOutOfRange(digits));
    }
    let weights = u.weights.iter().map(|&w| round_scaled(w, digits, mode)).collect::<Result<Vec<_>>>()?;
    let threshold = round_scaled(-u.bias, digits, mode)?;
    IntThresholdUnit::new(weights, threshold)
}

/// Variables `0..n`, i.e. input `i` bound to variable `i`.
pub fn identity_binding(n: usize) -> Vec<VarId> {
    (0..n as u32).map(VarId).collect()
}

/// Input indices sorted by the level of their bound variable, top first.
fn binding_order(mgr: &Manager, arity: usize, vars: &[VarId]) -> Result<Vec<usize>> {
    if vars.len() != arity {
        return Err(NeuronError::BindingArity { arity, vars: vars.len() });
    }
    let mut seen = std::collections::HashSet::new();
    for &v in vars {
        if v.index() >= mgr.num_vars() {
            return Err(ObddError::VarOutOfRange { var: v.0, num_vars: mgr.num_vars() }.into());
        }
        if !seen.insert(v) {
            return Err(NeuronError::DuplicateBinding(v));
        }
    }
    let mut idx: Vec<usize> = (0..arity).collect();
    idx.sort_by_key(|&i| mgr.level(vars[i]));
    Ok(idx)
}

/// Cells are `(depth, t)`: the sub-classifier over the inputs from `depth`
/// on that fires iff their weighted sum reaches the residual threshold `t`.
/// Setting an input to 1 moves to `t - w`, to 0 keeps `t`.
struct PseudoTable<'a> {
    weights: Vec<i64>,
    vars: Vec<VarId>,
    // achievable suffix sums: [min_rest[d], max_rest[d]]
    min_rest: Vec<i64>,
    max_rest: Vec<i64>,
    memo: Vec<HashMap<i64, NodeRef>>,
    cells: usize,
    budget: Option<usize>,
    mgr: &'a mut Manager,
}

impl PseudoTable<'_> {
    fn cell(&mut self, depth: usize, t: i64) -> Result<NodeRef> {
        if t <= self.min_rest[depth] {
            return Ok(NodeRef::TRUE);
        }
        if t > self.max_rest[depth] {
            return Ok(NodeRef::FALSE);
        }
        if let Some(&r) = self.memo[depth].get(&t) {
            return Ok(r);
        }
        self.cells += 1;
        if let Some(budget) = self.budget {
            if self.cells > budget {
                return Err(ObddError::NodeBudgetExceeded { budget }.into());
            }
        }
        let hi = self.cell(depth + 1, t - self.weights[depth])?;
        let lo = self.cell(depth + 1, t)?;
        let r = self.mgr.node(self.vars[depth], lo, hi)?;
        self.memo[depth].insert(t, r);
        Ok(r)
    }
}

/// Pseudo-polynomial compilation of an integer unit. `vars[i]` is the
/// variable that input `i` reads.
pub fn compile_pseudo(mgr: &mut Manager, u: &IntThresholdUnit, vars: &[VarId]) -> Result<NodeRef> {
    compile_pseudo_stats(mgr, u, vars).map(|(r, _)| r)
}

/// [`compile_pseudo`], also returning the number of table cells visited.
///
/// The manager's node budget, if set, also caps the number of cells.
pub fn compile_pseudo_stats(mgr: &mut Manager, u: &IntThresholdUnit, vars: &[VarId]) -> Result<(NodeRef, usize)> {
    let order = binding_order(mgr, u.arity(), vars)?;
    let n = order.len();
    let weights: Vec<i64> = order.iter().map(|&i| u.weights[i]).collect();
    let bound: Vec<VarId> = order.iter().map(|&i| vars[i]).collect();
    // |suffix sums| ≤ W, which fits in i64 by construction
    let mut min_rest = vec![0i64; n + 1];
    let mut max_rest = vec![0i64; n + 1];
    for d in (0..n).rev() {
        min_rest[d] = min_rest[d + 1] + weights[d].min(0);
        max_rest[d] = max_rest[d + 1] + weights[d].max(0);
    }
    let budget = mgr.node_budget();
    let mut table =
        PseudoTable { weights, vars: bound, min_rest, max_rest, memo: vec![HashMap::new(); n], cells: 0, budget, mgr };
    let root = table.cell(0, u.threshold)?;
    let cells = table.cells;
    debug_assert!(cells as u128 <= n as u128 * (2 * u.magnitude as u128 + 1));
    Ok((root, cells))
}

struct ShannonExpansion<'a> {
    weights: Vec<BigInt>,
    vars: Vec<VarId>,
    min_rest: Vec<BigInt>,
    max_rest: Vec<BigInt>,
    memo: HashMap<(usize, BigInt), NodeRef>,
    mgr: &'a mut Manager,
}

impl ShannonExpansion<'_> {
    fn expand(&mut self, depth: usize, t: BigInt) -> Result<NodeRef> {
        if t <= self.min_rest[depth] {
            return Ok(NodeRef::TRUE);
        }
        if t > self.max_rest[depth] {
            return Ok(NodeRef::FALSE);
        }
        let key = (depth, t);
        if let Some(&r) = self.memo.get(&key) {
            return Ok(r);
        }
        let hi = self.expand(depth + 1, &key.1 - &self.weights[depth])?;
        let lo = self.expand(depth + 1, key.1.clone())?;
        let r = self.mgr.node(self.vars[depth], lo, hi)?;
        self.memo.insert(key, r);
        Ok(r)
    }
}

/// Exact compilation with the default arity cap.
pub fn compile_exact<U: ExactThreshold + ?Sized>(mgr: &mut Manager, u: &U, vars: &[VarId]) -> Result<NodeRef> {
    compile_exact_capped(mgr, u, vars, DEFAULT_EXACT_CAP)
}

pub fn compile_exact_capped<U: ExactThreshold + ?Sized>(
    mgr: &mut Manager,
    u: &U,
    vars: &[VarId],
    cap: usize,
) -> Result<NodeRef> {
    let e = u.exact_unit()?;
    if e.arity() > cap {
        return Err(NeuronError::ExactCapExceeded { arity: e.arity(), cap });
    }
    let order = binding_order(mgr, e.arity(), vars)?;
    let n = order.len();
    let weights: Vec<BigInt> = order.iter().map(|&i| e.weights[i].clone()).collect();
    let mut min_rest = vec![BigInt::zero(); n + 1];
    let mut max_rest = vec![BigInt::zero(); n + 1];
    for d in (0..n).rev() {
        let w = &weights[d];
        min_rest[d] = &min_rest[d + 1] + if w.is_negative() { w.clone() } else { BigInt::zero() };
        max_rest[d] = &max_rest[d + 1] + if w.is_positive() { w.clone() } else { BigInt::zero() };
    }
    let mut s = ShannonExpansion {
        weights,
        vars: order.iter().map(|&i| vars[i]).collect(),
        min_rest,
        max_rest,
        memo: HashMap::new(),
        mgr,
    };
    s.expand(0, e.threshold)
}

// ---- text format ----

/// Contents of a neuron file.
#[derive(Debug, Clone, PartialEq)]
pub enum NeuronFile {
    /// `weights:` and `bias:` lines.
    Real(LinearThresholdUnit),
    /// `weights:` and `threshold:` lines with integers.
    Int(IntThresholdUnit),
}

impl NeuronFile {
    pub fn arity(&self) -> usize {
        match self {
            NeuronFile::Real(u) => u.arity(),
            NeuronFile::Int(u) => u.arity(),
        }
    }
}

pub fn parse_neuron(text: &str) -> Result<NeuronFile> {
    let perr = |line, msg: &str| NeuronError::Parse { line, msg: msg.to_string() };
    let mut weights: Option<(usize, Vec<&str>)> = None;
    let mut bias = None;
    let mut threshold = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (key, rest) = l.split_once(':').ok_or_else(|| perr(line, "expected `key: value`"))?;
        let rest = rest.trim();
        match key.trim() {
            "weights" => weights = Some((line, rest.split_whitespace().collect())),
            "bias" => bias = Some((line, rest)),
            "threshold" => threshold = Some((line, rest)),
            other => return Err(perr(line, &format!("unknown key `{}`", other))),
        }
    }
    let (wline, wtoks) = weights.ok_or_else(|| perr(1, "missing `weights:` line"))?;
    match (bias, threshold) {
        (Some((bline, b)), None) => {
            let weights = wtoks
                .iter()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| perr(wline, "weights must be numbers"))?;
            let bias: f64 = b.parse().map_err(|_| perr(bline, "bias must be a number"))?;
            if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
                return Err(NeuronError::NonFinite);
            }
            Ok(NeuronFile::Real(LinearThresholdUnit::new(weights, bias)))
        }
        (None, Some((tline, t))) => {
            let weights = wtoks
                .iter()
                .map(|t| t.parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| perr(wline, "integer unit weights must be integers"))?;
            let t: i64 = t.parse().map_err(|_| perr(tline, "threshold must be an integer"))?;
            Ok(NeuronFile::Int(IntThresholdUnit::new(weights, t)?))
        }
        (Some(_), Some((line, _))) => Err(perr(line, "give either `bias:` or `threshold:`, not both")),
        (None, None) => Err(perr(wline, "missing `bias:` or `threshold:` line")),
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for LinearThresholdUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "weights: {}", join(&self.weights))?;
        writeln!(f, "bias: {}", self.bias)
    }
}

impl fmt::Display for IntThresholdUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "weights: {}", join(&self.weights))?;
        writeln!(f, "threshold: {}", self.threshold)
    }
}

/// Truth of the unit on `x`, for anything the module can read exactly.
pub fn fires<U: ExactThreshold + ?Sized>(u: &U, x: &Instance) -> Result<bool> {
    Ok(u.exact_unit()?.fires(x.bits()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> LinearThresholdUnit {
        LinearThresholdUnit::new(vec![1.15, 0.95, -1.05], -0.52)
    }

    fn all_rows(n: usize) -> impl Iterator<Item = Instance> {
        (0..1u64 << n).map(move |i| Instance::from_index(n, i))
    }

    #[test]
    fn threshold_form_of_worked_neuron() {
        let t = worked().to_threshold_form();
        assert_eq!(t.weights, vec![1.15, 0.95, -1.05]);
        assert_eq!(t.threshold, 0.52);
    }

    #[test]
    fn threshold_form_constant_cases() {
        let mut m = Manager::new(2);
        let zero = LinearThresholdUnit::new(vec![0.0, 0.0], 0.0);
        assert_eq!(compile_exact(&mut m, &zero, &identity_binding(2)).unwrap(), NodeRef::TRUE);
        let mut m1 = Manager::new(1);
        let never = LinearThresholdUnit::new(vec![1.0], -2.0);
        assert_eq!(compile_exact(&mut m1, &never, &identity_binding(1)).unwrap(), NodeRef::FALSE);
    }

    #[test]
    fn quantize_worked_neuron() {
        let q = quantize(&worked(), 2, RoundMode::Truncate).unwrap();
        assert_eq!(q.weights(), &[115, 95, -105]);
        assert_eq!(q.threshold(), 52);
        assert_eq!(q.magnitude(), 367);
    }

    #[test]
    fn quantize_truncates_toward_zero() {
        let u = LinearThresholdUnit::new(vec![0.9, -0.9], -0.5);
        let q = quantize(&u, 0, RoundMode::Truncate).unwrap();
        assert_eq!(q.weights(), &[0, 0]);
        assert_eq!(q.threshold(), 0);
        let mut m = Manager::new(2);
        assert_eq!(compile_pseudo(&mut m, &q, &identity_binding(2)).unwrap(), NodeRef::TRUE);

        let n = quantize(&u, 0, RoundMode::Nearest).unwrap();
        assert_eq!(n.weights(), &[1, -1]);
        assert_eq!(n.threshold(), 1);
        let half = LinearThresholdUnit::new(vec![0.25, -0.35], 0.0);
        let h = quantize(&half, 1, RoundMode::Nearest).unwrap();
        assert_eq!(h.weights(), &[3, -4]);
    }

    #[test]
    fn quantize_errors() {
        assert!(matches!(quantize(&worked(), 10, RoundMode::Truncate), Err(NeuronError::DigitsOutOfRange(10))));
        let big = LinearThresholdUnit::new(vec![1e15], 0.0);
        assert!(matches!(quantize(&big, 9, RoundMode::Truncate), Err(NeuronError::QuantizeOverflow)));
        let nan = LinearThresholdUnit::new(vec![f64::NAN], 0.0);
        assert!(matches!(quantize(&nan, 1, RoundMode::Truncate), Err(NeuronError::NonFinite)));
        assert!(IntThresholdUnit::new(vec![i64::MAX, 1], 0).is_err());
    }

    #[test]
    fn lossless_quantization_agrees_on_every_row() {
        // every parameter has at most two decimals
        let u = LinearThresholdUnit::new(vec![0.5, -1.25, 2.0, 0.75, -0.1, 0.33, 1.01, -0.02], -0.4);
        let q = quantize(&u, 2, RoundMode::Truncate).unwrap();
        let e = u.exact().unwrap();
        for x in all_rows(8) {
            assert_eq!(q.fires(x.bits()), e.fires(x.bits()), "{}", x);
        }
    }

    #[test]
    fn pseudo_matches_worked_formula() {
        let q = quantize(&worked(), 2, RoundMode::Truncate).unwrap();
        let mut m = Manager::new(3);
        let f = compile_pseudo(&mut m, &q, &identity_binding(3)).unwrap();
        for x in all_rows(3) {
            let (a, b, c) = (x.bits()[0], x.bits()[1], x.bits()[2]);
            let expect = (!c && (a || b)) || (c && a && b);
            assert_eq!(m.evaluate(f, &x).unwrap(), expect, "{}", x);
        }
    }

    #[test]
    fn pseudo_zero_weights_positive_threshold_is_false() {
        let u = IntThresholdUnit::new(vec![0, 0, 0], 1).unwrap();
        let mut m = Manager::new(3);
        assert_eq!(compile_pseudo(&mut m, &u, &identity_binding(3)).unwrap(), NodeRef::FALSE);
    }

    #[test]
    fn exact_examples() {
        let mut m = Manager::new(3);
        let f = compile_exact(&mut m, &worked(), &identity_binding(3)).unwrap();
        assert_eq!(m.model_count(f, 3).unwrap(), 4u32.into());
        let q = quantize(&worked(), 2, RoundMode::Truncate).unwrap();
        let g = compile_pseudo(&mut m, &q, &identity_binding(3)).unwrap();
        assert_eq!(f, g);

        let mut m1 = Manager::new(1);
        let lit = IntThresholdUnit::new(vec![1], 1).unwrap();
        let x = compile_exact(&mut m1, &lit, &identity_binding(1)).unwrap();
        assert_eq!(x, m1.var(VarId(0)).unwrap());
    }

    #[test]
    fn exact_cap_is_enforced() {
        let u = IntThresholdUnit::new(vec![1; 21], 3).unwrap();
        let mut m = Manager::new(21);
        assert!(matches!(
            compile_exact(&mut m, &u, &identity_binding(21)),
            Err(NeuronError::ExactCapExceeded { arity: 21, cap: 20 })
        ));
    }

    #[test]
    fn ties_fire() {
        // 0.1 + 0.2 == 0.3 exactly in decimal, not in binary floating point
        let u = LinearThresholdUnit::new(vec![0.1, 0.2], -0.3);
        let e = u.exact().unwrap();
        assert!(e.fires(&[true, true]));
        let u2 = LinearThresholdUnit::new(vec![0.1, 0.7], -0.8);
        assert!(u2.exact().unwrap().fires(&[true, true]));
        assert!(u2.activation(&[true, true]) < 0.0);
    }

    #[test]
    fn exact_units_scale_to_integers() {
        let u = LinearThresholdUnit::new(vec![1.15, 0.95, -1.05], -0.52).exact().unwrap();
        let i = u.to_int().unwrap();
        assert_eq!(i.weights(), &[115, 95, -105]);
        assert_eq!(i.threshold(), 52);
        let big = ExactUnit { weights: vec![BigInt::from(i64::MAX)], threshold: BigInt::from(1) };
        assert!(matches!(big.to_int(), Err(NeuronError::QuantizeOverflow)));
    }

    #[test]
    fn binding_errors() {
        let u = IntThresholdUnit::new(vec![1, 1], 1).unwrap();
        let mut m = Manager::new(2);
        assert!(matches!(
            compile_pseudo(&mut m, &u, &[VarId(0)]),
            Err(NeuronError::BindingArity { arity: 2, vars: 1 })
        ));
        assert!(matches!(
            compile_pseudo(&mut m, &u, &[VarId(1), VarId(1)]),
            Err(NeuronError::DuplicateBinding(VarId(1)))
        ));
    }

    #[test]
    fn cell_budget_aborts() {
        let u = IntThresholdUnit::new((1..=16).collect(), 40).unwrap();
        let mut m = Manager::new(16);
        m.set_node_budget(Some(10));
        assert!(matches!(
            compile_pseudo(&mut m, &u, &identity_binding(16)),
            Err(NeuronError::Obdd(ObddError::NodeBudgetExceeded { budget: 10 }))
        ));
    }

    #[test]
    fn neuron_text_round_trip() {
        let text = "weights: 1.15 0.95 -1.05\nbias: -0.52\n";
        let NeuronFile::Real(u) = parse_neuron(text).unwrap() else { panic!() };
        assert_eq!(u, worked());
        assert_eq!(u.to_string(), text);
        let q = quantize(&u, 2, RoundMode::Truncate).unwrap();
        assert_eq!(parse_neuron(&q.to_string()).unwrap(), NeuronFile::Int(q));
        assert!(parse_neuron("weights: 1 2\n").is_err());
        assert!(parse_neuron("weights: 1 x\nbias: 0\n").is_err());
        assert!(parse_neuron("weights: 1.5\nthreshold: 1\n").is_err());
    }
}
