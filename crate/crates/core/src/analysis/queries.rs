//! Per-variable queries: marginals and unateness.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{AnalysisError, Result};
use crate::instance::VarId;
use crate::obdd::{Manager, NodeRef};

/// `P(v = 1 | f = 1)` under uniform inputs over `n` variables.
pub fn marginal(mgr: &mut Manager, f: NodeRef, v: VarId, n: usize) -> Result<BigRational> {
    let total = mgr.model_count(f, n)?;
    if total == 0u8.into() {
        return Err(AnalysisError::Unsatisfiable);
    }
    let x = mgr.var(v)?;
    let with = mgr.and(f, x)?;
    let hits = mgr.model_count(with, n)?;
    Ok(BigRational::new(BigInt::from(hits), BigInt::from(total)))
}

/// Marginals of variables `0..n`.
pub fn marginals(mgr: &mut Manager, f: NodeRef, n: usize) -> Result<Vec<BigRational>> {
    (0..n as u32).map(|v| marginal(mgr, f, VarId(v), n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unateness {
    /// Raising the input never lowers the output.
    PosUnate,
    /// Raising the input never raises the output.
    NegUnate,
    /// The output never depends on the input.
    Unused,
    NonUnate,
}

impl Unateness {
    pub fn label(self) -> &'static str {
        match self {
            Unateness::PosUnate => "pos",
            Unateness::NegUnate => "neg",
            Unateness::Unused => "unused",
            Unateness::NonUnate => "none",
        }
    }
}

pub fn unateness(mgr: &mut Manager, f: NodeRef, v: VarId) -> Result<Unateness> {
    let hi = mgr.condition(f, v, true)?;
    let lo = mgr.condition(f, v, false)?;
    if hi == lo {
        return Ok(Unateness::Unused);
    }
    let not_hi = mgr.not(hi)?;
    if mgr.and(lo, not_hi)?.is_false() {
        return Ok(Unateness::PosUnate);
    }
    let not_lo = mgr.not(lo)?;
    if mgr.and(hi, not_lo)?.is_false() {
        return Ok(Unateness::NegUnate);
    }
    Ok(Unateness::NonUnate)
}

pub fn unateness_all(mgr: &mut Manager, f: NodeRef) -> Result<Vec<Unateness>> {
    (0..mgr.num_vars() as u32).map(|v| unateness(mgr, f, VarId(v))).collect()
}
