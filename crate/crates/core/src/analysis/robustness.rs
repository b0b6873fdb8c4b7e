//! Instance, model and maximum robustness.
//!
//! `gek(k)` holds the instances of a function whose robustness is at least
//! `k`: `gek(1) = f` and `gek(k) = ∧_v ∀v.gek(k-1)`, i.e. an instance stays
//! in the set only if it and all of its Hamming neighbours were in the
//! previous one. The instances of robustness exactly `k` are
//! `f_k = gek(k) ∧ ¬gek(k+1)`.

use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{AnalysisError, Result};
use crate::instance::Instance;
use crate::obdd::{Manager, NodeRef};

/// Minimum number of flips that changes the label. `Infinite` for constant
/// functions, which no flip can change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Robustness {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Robustness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Robustness::Finite(k) => write!(f, "{}", k),
            Robustness::Infinite => write!(f, "inf"),
        }
    }
}

/// Which instances a profile covers: those labelled 1, labelled 0, or all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarity {
    Positive,
    Negative,
    #[default]
    Both,
}

fn check_len(mgr: &Manager, x: &Instance) -> Result<()> {
    if x.len() != mgr.num_vars() {
        return Err(AnalysisError::InstanceLength { expected: mgr.num_vars(), got: x.len() });
    }
    Ok(())
}

/// Robustness of `x` under `f`, by the per-node recurrence
/// `r(g) = min(r(g|x_v), 1 + r(g|¬x_v))` with distance 0 at the terminal of
/// the opposite label.
pub fn instance_robustness(mgr: &Manager, f: NodeRef, x: &Instance) -> Result<Robustness> {
    check_len(mgr, x)?;
    if f.is_terminal() {
        return Ok(Robustness::Infinite);
    }
    let target = NodeRef::constant(!mgr.evaluate(f, x)?);
    let mut memo = HashMap::new();
    let r = distance(mgr, f, x, target, &mut memo)?;
    Ok(r.map_or(Robustness::Infinite, Robustness::Finite))
}

fn distance(
    mgr: &Manager,
    g: NodeRef,
    x: &Instance,
    target: NodeRef,
    memo: &mut HashMap<NodeRef, Option<usize>>,
) -> Result<Option<usize>> {
    if g.is_terminal() {
        return Ok((g == target).then_some(0));
    }
    if let Some(&r) = memo.get(&g) {
        return Ok(r);
    }
    let d = mgr.decision(g)?.expect("internal node");
    let (keep, flip) = if x.get(d.var) { (d.hi, d.lo) } else { (d.lo, d.hi) };
    let a = distance(mgr, keep, x, target, memo)?;
    let b = distance(mgr, flip, x, target, memo)?.map(|r| r + 1);
    let r = match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    memo.insert(g, r);
    Ok(r)
}

/// The chain `gek(1), gek(2), …` up to and including the first unsatisfiable
/// member.
pub fn robust_sets(mgr: &mut Manager, f: NodeRef) -> Result<Vec<NodeRef>> {
    if f.is_terminal() {
        return Err(AnalysisError::Trivial);
    }
    let mut chain = vec![f];
    let mut g = f;
    while !g.is_false() {
        g = next_gek(mgr, g)?;
        chain.push(g);
    }
    Ok(chain)
}

fn next_gek(mgr: &mut Manager, g: NodeRef) -> Result<NodeRef> {
    // variables outside the support contribute g itself
    let mut acc = g;
    for v in mgr.support(g)? {
        let all = mgr.forall(g, v)?;
        acc = mgr.and(acc, all)?;
        if acc.is_false() {
            break;
        }
    }
    Ok(acc)
}

/// Robustness distribution of the instances of one label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarityProfile {
    /// `counts[k-1]` is the number of instances with robustness exactly `k`.
    pub counts: Vec<BigUint>,
    /// Number of instances with this label.
    pub instances: BigUint,
    /// `Σ_k k·counts[k-1]`.
    pub sum: BigUint,
}

impl PolarityProfile {
    pub fn max(&self) -> usize {
        self.counts.len()
    }

    /// Average robustness over the instances of this label.
    pub fn mean(&self) -> BigRational {
        ratio(&self.sum, &self.instances)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobustnessProfile {
    pub num_vars: usize,
    pub positive: Option<PolarityProfile>,
    pub negative: Option<PolarityProfile>,
}

impl RobustnessProfile {
    fn parts(&self) -> impl Iterator<Item = &PolarityProfile> {
        self.positive.iter().chain(self.negative.iter())
    }

    /// Sum of robustness over the covered instances.
    pub fn sum(&self) -> BigUint {
        self.parts().map(|p| &p.sum).sum()
    }

    /// Sum of robustness over the covered instances divided by `2^n`. With
    /// both polarities this is the average robustness of a uniformly random
    /// instance.
    pub fn mr(&self) -> BigRational {
        ratio(&self.sum(), &(BigUint::from(1u8) << self.num_vars))
    }

    /// Sum of robustness divided by the number of covered instances.
    pub fn mr_covered(&self) -> BigRational {
        let covered: BigUint = self.parts().map(|p| &p.instances).sum();
        ratio(&self.sum(), &covered)
    }

    pub fn max(&self) -> usize {
        self.parts().map(PolarityProfile::max).max().unwrap_or(0)
    }
}

fn ratio(a: &BigUint, b: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(a.clone()), BigInt::from(b.clone()))
}

fn polarity_profile(mgr: &mut Manager, g: NodeRef, n: usize) -> Result<PolarityProfile> {
    let chain = robust_sets(mgr, g)?;
    let sizes = chain.iter().map(|&h| mgr.model_count(h, n)).collect::<std::result::Result<Vec<_>, _>>()?;
    // chain members are nested, so exact-k counts are successive differences
    let counts: Vec<BigUint> = sizes.windows(2).map(|w| &w[0] - &w[1]).collect();
    let sum = counts.iter().enumerate().map(|(i, c)| c * BigUint::from(i + 1)).sum();
    Ok(PolarityProfile { counts, instances: sizes[0].clone(), sum })
}

/// Exact robustness distribution of `f` over `n` variables.
pub fn model_robustness(mgr: &mut Manager, f: NodeRef, n: usize, polarity: Polarity) -> Result<RobustnessProfile> {
    if f.is_terminal() {
        return Err(AnalysisError::Trivial);
    }
    let positive = match polarity {
        Polarity::Positive | Polarity::Both => Some(polarity_profile(mgr, f, n)?),
        Polarity::Negative => None,
    };
    let negative = match polarity {
        Polarity::Negative | Polarity::Both => {
            let nf = mgr.not(f)?;
            Some(polarity_profile(mgr, nf, n)?)
        }
        Polarity::Positive => None,
    };
    Ok(RobustnessProfile { num_vars: n, positive, negative })
}

/// Largest robustness of any covered instance. Only builds the `gek` chain,
/// without counting.
pub fn max_robustness(mgr: &mut Manager, f: NodeRef, polarity: Polarity) -> Result<usize> {
    if f.is_terminal() {
        return Err(AnalysisError::Trivial);
    }
    let mut best = 0;
    if polarity != Polarity::Negative {
        best = robust_sets(mgr, f)?.len() - 1;
    }
    if polarity != Polarity::Positive {
        let nf = mgr.not(f)?;
        best = best.max(robust_sets(mgr, nf)?.len() - 1);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramRow {
    pub k: usize,
    pub count: BigUint,
    /// `count / 2^n`.
    pub proportion: BigRational,
}

impl HistogramRow {
    pub fn proportion_f64(&self) -> f64 {
        self.proportion.to_f64().unwrap_or(0.0)
    }
}

/// Per-robustness-level instance counts of a profile, with both polarities
/// merged when present.
pub fn robustness_histogram(profile: &RobustnessProfile) -> Vec<HistogramRow> {
    let total = BigUint::from(1u8) << profile.num_vars;
    let mut counts: Vec<BigUint> = vec![BigUint::zero(); profile.max()];
    for p in profile.parts() {
        for (i, c) in p.counts.iter().enumerate() {
            counts[i] += c;
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramRow { k: i + 1, proportion: ratio(&count, &total), count })
        .collect()
}

/// Mean instance robustness over a set of instances.
pub fn dataset_average_robustness<'a>(
    mgr: &Manager,
    f: NodeRef,
    data: impl IntoIterator<Item = &'a Instance>,
) -> Result<BigRational> {
    if f.is_terminal() {
        return Err(AnalysisError::Trivial);
    }
    let mut sum = 0usize;
    let mut rows = 0usize;
    for x in data {
        match instance_robustness(mgr, f, x)? {
            Robustness::Finite(r) => sum += r,
            Robustness::Infinite => unreachable!("non-constant function"),
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(AnalysisError::EmptyDataset);
    }
    Ok(BigRational::new(sum.into(), rows.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::VarId;

    fn ab(m: &mut Manager) -> (NodeRef, NodeRef) {
        (m.var(VarId(0)).unwrap(), m.var(VarId(1)).unwrap())
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn instance_examples() {
        let mut m = Manager::new(2);
        let (a, b) = ab(&mut m);
        let and = m.and(a, b).unwrap();
        let or = m.or(a, b).unwrap();
        let x = Instance::new(vec![true, true]);
        assert_eq!(instance_robustness(&m, NodeRef::TRUE, &x).unwrap(), Robustness::Infinite);
        assert_eq!(instance_robustness(&m, and, &x).unwrap(), Robustness::Finite(1));
        assert_eq!(instance_robustness(&m, or, &x).unwrap(), Robustness::Finite(2));
        assert!(instance_robustness(&m, or, &Instance::zeros(3)).is_err());
    }

    #[test]
    fn gek_examples() {
        let mut m = Manager::new(2);
        let (a, b) = ab(&mut m);
        let and = m.and(a, b).unwrap();
        let or = m.or(a, b).unwrap();
        assert_eq!(robust_sets(&mut m, or).unwrap(), vec![or, and, NodeRef::FALSE]);
        assert_eq!(robust_sets(&mut m, and).unwrap(), vec![and, NodeRef::FALSE]);
        assert_eq!(robust_sets(&mut m, NodeRef::TRUE), Err(AnalysisError::Trivial));
    }

    #[test]
    fn profile_examples() {
        let mut m = Manager::new(2);
        let (a, b) = ab(&mut m);
        let p = model_robustness(&mut m, a, 1, Polarity::Both);
        // `a` depends on level 0 only, so one variable suffices
        let p = p.unwrap();
        assert_eq!(p.positive.as_ref().unwrap().sum, 1u8.into());
        assert_eq!(p.negative.as_ref().unwrap().sum, 1u8.into());
        assert_eq!(p.mr(), q(1, 1));

        let or = m.or(a, b).unwrap();
        let p = model_robustness(&mut m, or, 2, Polarity::Both).unwrap();
        let pos = p.positive.as_ref().unwrap();
        assert_eq!(pos.counts, vec![BigUint::from(2u8), BigUint::from(1u8)]);
        assert_eq!(pos.mean(), q(4, 3));
        assert_eq!(p.mr(), q(5, 4));
        assert_eq!(p.mr_covered(), q(5, 4));
        assert_eq!(p.max(), 2);

        let pos_only = model_robustness(&mut m, or, 2, Polarity::Positive).unwrap();
        assert_eq!(pos_only.mr(), q(1, 1));
        let hist = robustness_histogram(&pos_only);
        assert_eq!(hist.iter().map(|r| r.proportion.clone()).collect::<Vec<_>>(), vec![q(1, 2), q(1, 4)]);

        let p = model_robustness(&mut m, a, 1, Polarity::Positive).unwrap();
        let hist = robustness_histogram(&p);
        assert_eq!(hist.len(), 1);
        assert_eq!(hist[0].proportion, q(1, 2));
    }

    #[test]
    fn max_by_polarity() {
        let mut m = Manager::new(2);
        let (a, b) = ab(&mut m);
        let and = m.and(a, b).unwrap();
        let or = m.or(a, b).unwrap();
        let xor = m.xor(a, b).unwrap();
        assert_eq!(max_robustness(&mut m, or, Polarity::Both).unwrap(), 2);
        assert_eq!(max_robustness(&mut m, and, Polarity::Positive).unwrap(), 1);
        // (0,0) needs two flips to reach a ∧ b
        assert_eq!(max_robustness(&mut m, and, Polarity::Negative).unwrap(), 2);
        assert_eq!(max_robustness(&mut m, xor, Polarity::Both).unwrap(), 1);
    }

    #[test]
    fn dataset_average() {
        let mut m = Manager::new(2);
        let (a, b) = ab(&mut m);
        let or = m.or(a, b).unwrap();
        let all: Vec<Instance> = (0..4).map(|i| Instance::from_index(2, i)).collect();
        assert_eq!(dataset_average_robustness(&m, or, &all).unwrap(), q(5, 4));
        assert_eq!(dataset_average_robustness(&m, or, &all[3..]).unwrap(), q(2, 1));
        assert_eq!(dataset_average_robustness(&m, or, &[]), Err(AnalysisError::EmptyDataset));
        assert_eq!(dataset_average_robustness(&m, NodeRef::TRUE, &all), Err(AnalysisError::Trivial));
    }
}
