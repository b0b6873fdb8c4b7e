//! Reduced ordered binary decision diagrams.
//!
//! A [`Manager`] owns a hash-consed node store. Every node is created through
//! a single constructor that drops redundant tests and looks the triple
//! `(var, lo, hi)` up in the unique table, so two handles are equal exactly
//! when they denote the same Boolean function. There are no complement edges;
//! negation is a memoized traversal that swaps the terminals.
//!
//! The variable order is fixed when the manager is built. By default variable
//! `i` sits at level `i`; [`Manager::with_order`] takes any permutation.
//!
//! ```
//! use nnkc::obdd::{Manager, NodeRef};
//! use nnkc::VarId;
//!
//! let mut m = Manager::new(2);
//! let a = m.literal(VarId(0), true).unwrap();
//! let b = m.literal(VarId(1), true).unwrap();
//! let f = m.or(a, b).unwrap();
//! assert_eq!(m.model_count(f, 2).unwrap(), 3u32.into());
//! let na = m.not(a).unwrap();
//! assert_eq!(m.and(a, na).unwrap(), NodeRef::FALSE);
//! ```

mod io;

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU32, Ordering};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::instance::{Instance, PartialInstance, VarId};

static NEXT_MANAGER_ID: AtomicU32 = AtomicU32::new(1);

const FALSE_IDX: u32 = 0;
const TRUE_IDX: u32 = 1;
const TERMINAL_VAR: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObddError {
    #[error("variable {var} out of range for a manager over {num_vars} variables")]
    VarOutOfRange { var: u32, num_vars: usize },
    #[error("handle belongs to a different manager")]
    ForeignHandle,
    #[error("node budget of {budget} nodes exceeded")]
    NodeBudgetExceeded { budget: usize },
    #[error("expected {expected} substitutions, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("instance has {got} bits, manager has {expected} variables")]
    InstanceLength { expected: usize, got: usize },
    #[error("cannot count over {requested} variables: function depends on level {required_level}")]
    TooFewCountVars { requested: usize, required_level: usize },
    #[error("invalid variable order: {0}")]
    InvalidOrder(String),
    #[error("node children must lie strictly below variable {0}")]
    Unordered(VarId),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("structural audit failed: {0}")]
    Corrupt(String),
}

pub type Result<T> = std::result::Result<T, ObddError>;

/// Handle to a diagram node. The two terminals are shared by all managers;
/// every other handle is only meaningful for the manager that created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeRef {
    owner: u32,
    index: u32,
}

impl NodeRef {
    pub const FALSE: NodeRef = NodeRef { owner: 0, index: FALSE_IDX };
    pub const TRUE: NodeRef = NodeRef { owner: 0, index: TRUE_IDX };

    pub fn constant(value: bool) -> NodeRef {
        if value {
            NodeRef::TRUE
        } else {
            NodeRef::FALSE
        }
    }

    pub fn is_terminal(self) -> bool {
        self.index <= TRUE_IDX
    }

    pub fn is_true(self) -> bool {
        self == NodeRef::TRUE
    }

    pub fn is_false(self) -> bool {
        self == NodeRef::FALSE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
    Xor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    var: u32,
    lo: u32,
    hi: u32,
}

/// Decomposition of a non-terminal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub var: VarId,
    pub lo: NodeRef,
    pub hi: NodeRef,
}

pub struct Manager {
    id: u32,
    level_of: Vec<u32>,
    var_at: Vec<u32>,
    nodes: Vec<Node>,
    unique: HashMap<Node, u32>,
    apply_cache: HashMap<(BoolOp, u32, u32), u32>,
    ite_cache: HashMap<(u32, u32, u32), u32>,
    not_cache: HashMap<u32, u32>,
    cond_cache: HashMap<(u32, u32, bool), u32>,
    count_cache: HashMap<u32, BigUint>,
    node_budget: Option<usize>,
}

impl std::fmt::Debug for Manager {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Manager")
            .field("id", &self.id)
            .field("num_vars", &self.num_vars())
            .field("nodes", &self.total_nodes())
            .finish()
    }
}

impl Manager {
    /// A manager over `num_vars` variables in declaration order.
    pub fn new(num_vars: usize) -> Self {
        let order = (0..num_vars as u32).collect::<Vec<_>>();
        Self::build(order)
    }

    /// A manager whose level `i` tests variable `order[i]`.
    pub fn with_order(order: &[VarId]) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for v in order {
            let i = v.index();
            if i >= n {
                return Err(ObddError::InvalidOrder(format!("{} is not below {}", v, n)));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(ObddError::InvalidOrder(format!("{} appears twice", v)));
            }
        }
        Ok(Self::build(order.iter().map(|v| v.0).collect()))
    }

    fn build(var_at: Vec<u32>) -> Self {
        let mut level_of = vec![0; var_at.len()];
        for (level, &v) in var_at.iter().enumerate() {
            level_of[v as usize] = level as u32;
        }
        let terminal = |i| Node { var: TERMINAL_VAR, lo: i, hi: i };
        Manager {
            id: NEXT_MANAGER_ID.fetch_add(1, Ordering::Relaxed),
            level_of,
            var_at,
            nodes: vec![terminal(FALSE_IDX), terminal(TRUE_IDX)],
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
            ite_cache: HashMap::new(),
            not_cache: HashMap::new(),
            cond_cache: HashMap::new(),
            count_cache: HashMap::new(),
            node_budget: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.var_at.len()
    }

    /// Variables listed from the top level down.
    pub fn order(&self) -> Vec<VarId> {
        self.var_at.iter().map(|&v| VarId(v)).collect()
    }

    pub fn level(&self, v: VarId) -> usize {
        self.level_of[v.index()] as usize
    }

    pub fn var_at_level(&self, level: usize) -> VarId {
        VarId(self.var_at[level])
    }

    /// Number of non-terminal nodes ever created by this manager.
    pub fn total_nodes(&self) -> usize {
        self.nodes.len() - 2
    }

    /// Caps the number of non-terminal nodes; creating more fails with
    /// [`ObddError::NodeBudgetExceeded`].
    pub fn set_node_budget(&mut self, budget: Option<usize>) {
        self.node_budget = budget;
    }

    pub fn node_budget(&self) -> Option<usize> {
        self.node_budget
    }

    pub fn clear_caches(&mut self) {
        self.apply_cache.clear();
        self.ite_cache.clear();
        self.not_cache.clear();
        self.cond_cache.clear();
        self.count_cache.clear();
    }

    // ---- handle plumbing ----

    fn idx(&self, f: NodeRef) -> Result<u32> {
        if f.owner == 0 || f.owner == self.id {
            debug_assert!((f.index as usize) < self.nodes.len());
            Ok(f.index)
        } else {
            Err(ObddError::ForeignHandle)
        }
    }

    fn handle(&self, index: u32) -> NodeRef {
        if index <= TRUE_IDX {
            NodeRef { owner: 0, index }
        } else {
            NodeRef { owner: self.id, index }
        }
    }

    /// Whether `f` can be used with this manager.
    pub fn owns(&self, f: NodeRef) -> bool {
        self.idx(f).is_ok()
    }

    fn check_var(&self, v: VarId) -> Result<()> {
        if v.index() < self.num_vars() {
            Ok(())
        } else {
            Err(ObddError::VarOutOfRange { var: v.0, num_vars: self.num_vars() })
        }
    }

    #[inline]
    fn level_idx(&self, i: u32) -> u32 {
        let var = self.nodes[i as usize].var;
        if var == TERMINAL_VAR {
            self.var_at.len() as u32
        } else {
            self.level_of[var as usize]
        }
    }

    /// Cofactors of `i` with respect to the variable at `level`.
    #[inline]
    fn cofactors(&self, i: u32, level: u32) -> (u32, u32) {
        if self.level_idx(i) == level {
            let n = self.nodes[i as usize];
            (n.lo, n.hi)
        } else {
            (i, i)
        }
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> Result<u32> {
        if lo == hi {
            return Ok(lo);
        }
        let node = Node { var, lo, hi };
        if let Some(&i) = self.unique.get(&node) {
            return Ok(i);
        }
        if let Some(budget) = self.node_budget {
            if self.total_nodes() >= budget {
                return Err(ObddError::NodeBudgetExceeded { budget });
            }
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(node);
        self.unique.insert(node, i);
        Ok(i)
    }

    // ---- construction ----

    pub fn literal(&mut self, v: VarId, positive: bool) -> Result<NodeRef> {
        self.check_var(v)?;
        let i = if positive { self.mk(v.0, FALSE_IDX, TRUE_IDX)? } else { self.mk(v.0, TRUE_IDX, FALSE_IDX)? };
        Ok(self.handle(i))
    }

    pub fn var(&mut self, v: VarId) -> Result<NodeRef> {
        self.literal(v, true)
    }

    /// The node testing `v` with the given children. The children must not
    /// mention `v` or any variable above it.
    pub fn node(&mut self, v: VarId, lo: NodeRef, hi: NodeRef) -> Result<NodeRef> {
        self.check_var(v)?;
        let (l, h) = (self.idx(lo)?, self.idx(hi)?);
        let level = self.level_of[v.index()];
        if self.level_idx(l) <= level || self.level_idx(h) <= level {
            return Err(ObddError::Unordered(v));
        }
        let i = self.mk(v.0, l, h)?;
        Ok(self.handle(i))
    }

    /// Conjunction of the literals of `y`.
    pub fn cube(&mut self, y: &PartialInstance) -> Result<NodeRef> {
        let mut lits: Vec<(VarId, bool)> = y.iter().collect();
        for &(v, _) in &lits {
            self.check_var(v)?;
        }
        lits.sort_by_key(|&(v, _)| std::cmp::Reverse(self.level(v)));
        let mut acc = TRUE_IDX;
        for (v, b) in lits {
            acc = if b { self.mk(v.0, FALSE_IDX, acc)? } else { self.mk(v.0, acc, FALSE_IDX)? };
        }
        Ok(self.handle(acc))
    }

    // ---- Boolean operations ----

    pub fn apply(&mut self, op: BoolOp, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        let (a, b) = (self.idx(f)?, self.idx(g)?);
        let r = self.apply_rec(op, a, b)?;
        Ok(self.handle(r))
    }

    pub fn and(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.apply(BoolOp::And, f, g)
    }

    pub fn or(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.apply(BoolOp::Or, f, g)
    }

    pub fn xor(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.apply(BoolOp::Xor, f, g)
    }

    fn apply_rec(&mut self, op: BoolOp, a: u32, b: u32) -> Result<u32> {
        match op {
            BoolOp::And => {
                if a == FALSE_IDX || b == FALSE_IDX {
                    return Ok(FALSE_IDX);
                }
                if a == TRUE_IDX || a == b {
                    return Ok(b);
                }
                if b == TRUE_IDX {
                    return Ok(a);
                }
            }
            BoolOp::Or => {
                if a == TRUE_IDX || b == TRUE_IDX {
                    return Ok(TRUE_IDX);
                }
                if a == FALSE_IDX || a == b {
                    return Ok(b);
                }
                if b == FALSE_IDX {
                    return Ok(a);
                }
            }
            BoolOp::Xor => {
                if a == b {
                    return Ok(FALSE_IDX);
                }
                if a == FALSE_IDX {
                    return Ok(b);
                }
                if b == FALSE_IDX {
                    return Ok(a);
                }
                if a == TRUE_IDX {
                    return self.not_rec(b);
                }
                if b == TRUE_IDX {
                    return self.not_rec(a);
                }
            }
        }
        // all three operators are commutative
        let key = (op, a.min(b), a.max(b));
        if let Some(&r) = self.apply_cache.get(&key) {
            return Ok(r);
        }
        let top = self.level_idx(a).min(self.level_idx(b));
        let (a0, a1) = self.cofactors(a, top);
        let (b0, b1) = self.cofactors(b, top);
        let lo = self.apply_rec(op, a0, b0)?;
        let hi = self.apply_rec(op, a1, b1)?;
        let r = self.mk(self.var_at[top as usize], lo, hi)?;
        self.apply_cache.insert(key, r);
        Ok(r)
    }

    pub fn not(&mut self, f: NodeRef) -> Result<NodeRef> {
        let a = self.idx(f)?;
        let r = self.not_rec(a)?;
        Ok(self.handle(r))
    }

    fn not_rec(&mut self, a: u32) -> Result<u32> {
        match a {
            FALSE_IDX => return Ok(TRUE_IDX),
            TRUE_IDX => return Ok(FALSE_IDX),
            _ => {}
        }
        if let Some(&r) = self.not_cache.get(&a) {
            return Ok(r);
        }
        let n = self.nodes[a as usize];
        let lo = self.not_rec(n.lo)?;
        let hi = self.not_rec(n.hi)?;
        let r = self.mk(n.var, lo, hi)?;
        self.not_cache.insert(a, r);
        self.not_cache.insert(r, a);
        Ok(r)
    }

    /// If-then-else: `(f ∧ g) ∨ (¬f ∧ h)`.
    pub fn ite(&mut self, f: NodeRef, g: NodeRef, h: NodeRef) -> Result<NodeRef> {
        let (a, b, c) = (self.idx(f)?, self.idx(g)?, self.idx(h)?);
        let r = self.ite_rec(a, b, c)?;
        Ok(self.handle(r))
    }

    fn ite_rec(&mut self, f: u32, g: u32, h: u32) -> Result<u32> {
        if f == TRUE_IDX || g == h {
            return Ok(g);
        }
        if f == FALSE_IDX {
            return Ok(h);
        }
        if g == TRUE_IDX && h == FALSE_IDX {
            return Ok(f);
        }
        if g == FALSE_IDX && h == TRUE_IDX {
            return self.not_rec(f);
        }
        if let Some(&r) = self.ite_cache.get(&(f, g, h)) {
            return Ok(r);
        }
        let top = self.level_idx(f).min(self.level_idx(g)).min(self.level_idx(h));
        let (f0, f1) = self.cofactors(f, top);
        let (g0, g1) = self.cofactors(g, top);
        let (h0, h1) = self.cofactors(h, top);
        let lo = self.ite_rec(f0, g0, h0)?;
        let hi = self.ite_rec(f1, g1, h1)?;
        let r = self.mk(self.var_at[top as usize], lo, hi)?;
        self.ite_cache.insert((f, g, h), r);
        Ok(r)
    }

    // ---- conditioning and substitution ----

    /// `f|v=b`: the function obtained by fixing `v`. The result does not
    /// mention `v`.
    pub fn condition(&mut self, f: NodeRef, v: VarId, b: bool) -> Result<NodeRef> {
        self.check_var(v)?;
        let a = self.idx(f)?;
        let r = self.cond_rec(a, v.0, self.level_of[v.index()], b)?;
        Ok(self.handle(r))
    }

    fn cond_rec(&mut self, a: u32, var: u32, level: u32, b: bool) -> Result<u32> {
        let l = self.level_idx(a);
        if l > level {
            return Ok(a);
        }
        let n = self.nodes[a as usize];
        if l == level {
            return Ok(if b { n.hi } else { n.lo });
        }
        if let Some(&r) = self.cond_cache.get(&(a, var, b)) {
            return Ok(r);
        }
        let lo = self.cond_rec(n.lo, var, level, b)?;
        let hi = self.cond_rec(n.hi, var, level, b)?;
        let r = self.mk(n.var, lo, hi)?;
        self.cond_cache.insert((a, var, b), r);
        Ok(r)
    }

    /// Conditions on every literal of `y`.
    pub fn restrict(&mut self, f: NodeRef, y: &PartialInstance) -> Result<NodeRef> {
        let mut g = f;
        for (v, b) in y.iter() {
            g = self.condition(g, v, b)?;
        }
        Ok(g)
    }

    /// `∀v. f`, i.e. `f|v=1 ∧ f|v=0`.
    pub fn forall(&mut self, f: NodeRef, v: VarId) -> Result<NodeRef> {
        let hi = self.condition(f, v, true)?;
        let lo = self.condition(f, v, false)?;
        self.and(hi, lo)
    }

    /// Vector substitution. `f` lives in `placeholders`, a manager whose
    /// variable `i` stands for `subs[i]`; the result lives in `self` and
    /// satisfies `result(x) = f(subs[0](x), …, subs[k-1](x))`.
    pub fn compose(&mut self, placeholders: &Manager, f: NodeRef, subs: &[NodeRef]) -> Result<NodeRef> {
        if subs.len() != placeholders.num_vars() {
            return Err(ObddError::ArityMismatch { expected: placeholders.num_vars(), got: subs.len() });
        }
        let root = placeholders.idx(f)?;
        let subs = subs.iter().map(|&s| self.idx(s)).collect::<Result<Vec<_>>>()?;
        let mut memo = HashMap::new();
        let r = self.compose_rec(placeholders, root, &subs, &mut memo)?;
        Ok(self.handle(r))
    }

    fn compose_rec(&mut self, src: &Manager, a: u32, subs: &[u32], memo: &mut HashMap<u32, u32>) -> Result<u32> {
        if a <= TRUE_IDX {
            return Ok(a);
        }
        if let Some(&r) = memo.get(&a) {
            return Ok(r);
        }
        let n = src.nodes[a as usize];
        let lo = self.compose_rec(src, n.lo, subs, memo)?;
        let hi = self.compose_rec(src, n.hi, subs, memo)?;
        let r = self.ite_rec(subs[n.var as usize], hi, lo)?;
        memo.insert(a, r);
        Ok(r)
    }

    // ---- queries ----

    pub fn is_valid(&self, f: NodeRef) -> bool {
        f.is_true()
    }

    pub fn is_sat(&self, f: NodeRef) -> bool {
        !f.is_false()
    }

    pub fn decision(&self, f: NodeRef) -> Result<Option<Decision>> {
        let a = self.idx(f)?;
        if a <= TRUE_IDX {
            return Ok(None);
        }
        let n = self.nodes[a as usize];
        Ok(Some(Decision { var: VarId(n.var), lo: self.handle(n.lo), hi: self.handle(n.hi) }))
    }

    pub fn evaluate(&self, f: NodeRef, x: &Instance) -> Result<bool> {
        if x.len() != self.num_vars() {
            return Err(ObddError::InstanceLength { expected: self.num_vars(), got: x.len() });
        }
        let mut a = self.idx(f)?;
        while a > TRUE_IDX {
            let n = self.nodes[a as usize];
            a = if x.get(VarId(n.var)) { n.hi } else { n.lo };
        }
        Ok(a == TRUE_IDX)
    }

    fn reachable(&self, root: u32) -> Vec<u32> {
        let mut seen = HashSet::new();
        let mut stack = vec![root];
        let mut out = Vec::new();
        while let Some(a) = stack.pop() {
            if a <= TRUE_IDX || !seen.insert(a) {
                continue;
            }
            out.push(a);
            let n = self.nodes[a as usize];
            stack.push(n.lo);
            stack.push(n.hi);
        }
        out
    }

    /// Distinct non-terminal nodes reachable from `f`.
    pub fn node_count(&self, f: NodeRef) -> Result<usize> {
        Ok(self.reachable(self.idx(f)?).len())
    }

    /// Variables tested anywhere in `f`, sorted by index.
    pub fn support(&self, f: NodeRef) -> Result<Vec<VarId>> {
        let mut vars: Vec<VarId> = self
            .reachable(self.idx(f)?)
            .into_iter()
            .map(|a| VarId(self.nodes[a as usize].var))
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        vars.sort();
        Ok(vars)
    }

    fn count_rec(&mut self, a: u32) -> BigUint {
        match a {
            FALSE_IDX => return BigUint::zero(),
            TRUE_IDX => return BigUint::one(),
            _ => {}
        }
        if let Some(c) = self.count_cache.get(&a) {
            return c.clone();
        }
        let n = self.nodes[a as usize];
        let level = self.level_idx(a);
        let lo_gap = self.level_idx(n.lo) - level - 1;
        let hi_gap = self.level_idx(n.hi) - level - 1;
        let c = (self.count_rec(n.lo) << lo_gap) + (self.count_rec(n.hi) << hi_gap);
        self.count_cache.insert(a, c.clone());
        c
    }

    /// Number of satisfying assignments to the variables at levels `0..n`.
    /// `n` may exceed the manager's variable count; extra variables are free.
    pub fn model_count(&mut self, f: NodeRef, n: usize) -> Result<BigUint> {
        let a = self.idx(f)?;
        let total = self.num_vars();
        if n < total {
            let deepest = self.reachable(a).into_iter().map(|i| self.level_idx(i) as usize).max();
            if let Some(d) = deepest {
                if d >= n {
                    return Err(ObddError::TooFewCountVars { requested: n, required_level: d });
                }
            }
        }
        let full = self.count_rec(a) << self.level_idx(a);
        Ok(if n >= total { full << (n - total) } else { full >> (total - n) })
    }

    /// Checks ordering, reducedness and uniqueness of every node under `f`.
    pub fn audit(&self, f: NodeRef) -> Result<()> {
        for a in self.reachable(self.idx(f)?) {
            let n = self.nodes[a as usize];
            if n.lo == n.hi {
                return Err(ObddError::Corrupt(format!("node {} has equal children", a)));
            }
            let level = self.level_idx(a);
            if self.level_idx(n.lo) <= level || self.level_idx(n.hi) <= level {
                return Err(ObddError::Corrupt(format!("node {} violates the order", a)));
            }
            if self.unique.get(&n) != Some(&a) {
                return Err(ObddError::Corrupt(format!("node {} is not the unique copy", a)));
            }
        }
        Ok(())
    }
}
