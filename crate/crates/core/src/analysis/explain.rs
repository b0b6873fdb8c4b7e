//! Minimum-cardinality sufficient reasons (PI-explanations).

use std::collections::HashMap;
use std::fmt;

use super::{AnalysisError, Result};
use crate::instance::{Instance, PartialInstance, VarId};
use crate::obdd::{Manager, NodeRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Explanation {
    pub literals: PartialInstance,
    /// The label the literals force.
    pub label: bool,
}

impl Explanation {
    pub fn cardinality(&self) -> usize {
        self.literals.len()
    }
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "label {}: {}", u8::from(self.label), self.literals)
    }
}

#[derive(Clone, Copy)]
enum Choice {
    Keep(VarId, NodeRef),
    Drop(NodeRef),
}

struct Search<'a> {
    mgr: &'a mut Manager,
    x: &'a Instance,
    memo: HashMap<NodeRef, (Option<usize>, Option<Choice>)>,
}

impl Search<'_> {
    /// Smallest number of literals of `x` that make `g` valid, with the
    /// first step of an optimal witness. Including the top variable wins ties.
    fn solve(&mut self, g: NodeRef) -> Result<Option<usize>> {
        if g.is_true() {
            return Ok(Some(0));
        }
        if g.is_false() {
            return Ok(None);
        }
        if let Some(&(m, _)) = self.memo.get(&g) {
            return Ok(m);
        }
        let d = self.mgr.decision(g)?.expect("internal node");
        let kept = if self.x.get(d.var) { d.hi } else { d.lo };
        let dropped = self.mgr.and(d.lo, d.hi)?;
        let keep = self.solve(kept)?.map(|m| m + 1);
        let drop = self.solve(dropped)?;
        let best = match (keep, drop) {
            (Some(k), Some(d2)) if d2 < k => (drop, Some(Choice::Drop(dropped))),
            (Some(_), _) => (keep, Some(Choice::Keep(d.var, kept))),
            (None, Some(_)) => (drop, Some(Choice::Drop(dropped))),
            (None, None) => (None, None),
        };
        self.memo.insert(g, best);
        Ok(best.0)
    }
}

/// A smallest subset of `x`'s literals under which `f` is constant at
/// `f(x)`. Among equally small subsets the one that includes variables
/// earliest in the diagram's order is returned.
pub fn pi_explanation(mgr: &mut Manager, f: NodeRef, x: &Instance) -> Result<Explanation> {
    if x.len() != mgr.num_vars() {
        return Err(AnalysisError::InstanceLength { expected: mgr.num_vars(), got: x.len() });
    }
    let label = mgr.evaluate(f, x)?;
    let g = if label { f } else { mgr.not(f)? };
    let mut search = Search { mgr, x, memo: HashMap::new() };
    search.solve(g)?.expect("x itself is a sufficient reason");
    let mut literals = PartialInstance::new();
    let mut cur = g;
    while !cur.is_true() {
        match search.memo[&cur].1.expect("path to TRUE") {
            Choice::Keep(v, next) => {
                literals.insert(v, x.get(v));
                cur = next;
            }
            Choice::Drop(next) => cur = next,
        }
    }
    Ok(Explanation { literals, label })
}

/// The label `y` forces on `f`, if it forces one.
fn forced(mgr: &mut Manager, f: NodeRef, y: &PartialInstance) -> Result<Option<bool>> {
    let r = mgr.restrict(f, y)?;
    Ok(r.is_terminal().then(|| r.is_true()))
}

pub fn is_sufficient(mgr: &mut Manager, f: NodeRef, e: &Explanation) -> Result<bool> {
    Ok(forced(mgr, f, &e.literals)? == Some(e.label))
}

/// True when dropping any single literal loses sufficiency.
pub fn is_minimal(mgr: &mut Manager, f: NodeRef, e: &Explanation) -> Result<bool> {
    for (v, _) in e.literals.iter() {
        let mut fewer = e.literals.clone();
        fewer.remove(v);
        if forced(mgr, f, &fewer)? == Some(e.label) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Extends a sufficient reason `y` with the bits of `fill` elsewhere. The
/// result has the label `y` forces, whatever `fill` looks like.
pub fn fooling_complete(mgr: &mut Manager, f: NodeRef, y: &PartialInstance, fill: &Instance) -> Result<Instance> {
    if fill.len() != mgr.num_vars() {
        return Err(AnalysisError::InstanceLength { expected: mgr.num_vars(), got: fill.len() });
    }
    let label = forced(mgr, f, y)?.ok_or(AnalysisError::NotSufficient)?;
    let z = y.complete(fill);
    assert_eq!(mgr.evaluate(f, &z)?, label, "sufficient reason must fix the label");
    Ok(z)
}
