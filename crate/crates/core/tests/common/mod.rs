//! Truth-table oracles and random function generators shared by the
//! integration tests. Nothing here goes through the diagram algorithms
//! except `TruthTable::build`, which only uses the node constructor.
#![allow(dead_code)]

use std::collections::VecDeque;

use nnkc::{Instance, Manager, NodeRef, VarId};
use rand::Rng;

/// Function over `n` variables; entry `i` is the value at
/// `Instance::from_index(n, i)` (variable `v` is bit `v` of `i`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    pub n: usize,
    pub bits: Vec<bool>,
}

impl TruthTable {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        TruthTable { n, bits: (0..1usize << n).map(&mut f).collect() }
    }

    pub fn of(mgr: &Manager, f: NodeRef, n: usize) -> Self {
        TruthTable::from_fn(n, |i| mgr.evaluate(f, &Instance::from_index(n, i as u64)).unwrap())
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn is_constant(&self) -> bool {
        self.bits.iter().all(|&b| b == self.bits[0])
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Builds the diagram by Shannon expansion from the top level down in
    /// the manager's order.
    pub fn build(&self, mgr: &mut Manager) -> NodeRef {
        let order = mgr.order();
        self.build_rec(mgr, &order, 0, 0)
    }

    fn build_rec(&self, mgr: &mut Manager, order: &[VarId], level: usize, fixed: usize) -> NodeRef {
        if level == self.n {
            return NodeRef::constant(self.bits[fixed]);
        }
        let v = order[level];
        let lo = self.build_rec(mgr, order, level + 1, fixed);
        let hi = self.build_rec(mgr, order, level + 1, fixed | 1 << v.index());
        mgr.node(v, lo, hi).unwrap()
    }

    /// Distance from every instance to the nearest instance of the other
    /// label, by multi-source breadth-first search over the hypercube.
    /// `None` everywhere for constant functions.
    pub fn hamming_distances(&self) -> Vec<Option<usize>> {
        let size = 1usize << self.n;
        let mut out = vec![None; size];
        for label in [false, true] {
            // distances to the nearest instance labelled `label`
            let mut dist: Vec<Option<usize>> = vec![None; size];
            let mut queue = VecDeque::new();
            for (i, &b) in self.bits.iter().enumerate() {
                if b == label {
                    dist[i] = Some(0);
                    queue.push_back(i);
                }
            }
            while let Some(i) = queue.pop_front() {
                let d = dist[i].unwrap();
                for v in 0..self.n {
                    let j = i ^ (1 << v);
                    if dist[j].is_none() {
                        dist[j] = Some(d + 1);
                        queue.push_back(j);
                    }
                }
            }
            for i in 0..size {
                if self.bits[i] != label {
                    out[i] = dist[i];
                }
            }
        }
        out
    }

    /// True when fixing the variables in `mask` to their values in `x`
    /// forces the label `f(x)`.
    pub fn forces(&self, x: usize, mask: usize) -> bool {
        let label = self.bits[x];
        let free: Vec<usize> = (0..self.n).filter(|v| mask >> v & 1 == 0).collect();
        (0..1usize << free.len()).all(|assign| {
            let mut y = x & mask;
            for (k, &v) in free.iter().enumerate() {
                if assign >> k & 1 == 1 {
                    y |= 1 << v;
                }
            }
            self.bits[y] == label
        })
    }

    /// Smallest number of `x`'s literals that force `f(x)`.
    pub fn min_sufficient(&self, x: usize) -> usize {
        let mut masks: Vec<usize> = (0..1usize << self.n).collect();
        masks.sort_by_key(|m| m.count_ones());
        let m = masks.into_iter().find(|&m| self.forces(x, m)).unwrap();
        m.count_ones() as usize
    }

    /// `(models with v = 1, models)`.
    pub fn marginal(&self, v: usize) -> (usize, usize) {
        let hits = (0..self.bits.len()).filter(|&i| self.bits[i] && i >> v & 1 == 1).count();
        (hits, self.count())
    }

    /// `(never drops when v rises, never rises when v rises, independent of v)`.
    pub fn monotonicity(&self, v: usize) -> (bool, bool, bool) {
        let mut up = true;
        let mut down = true;
        let mut unused = true;
        for i in (0..self.bits.len()).filter(|&i| i >> v & 1 == 0) {
            let (lo, hi) = (self.bits[i], self.bits[i | 1 << v]);
            up &= !lo || hi;
            down &= lo || !hi;
            unused &= lo == hi;
        }
        (up, down, unused)
    }
}

/// A mix of function shapes so robustness levels above 1 actually occur:
/// random tables, small DNFs, threshold functions and Hamming balls.
pub fn random_function(rng: &mut impl Rng, n: usize) -> TruthTable {
    match rng.gen_range(0..4) {
        0 => {
            let density = rng.gen_range(0.05..0.95);
            TruthTable::from_fn(n, |_| rng.gen_bool(density))
        }
        1 => {
            let terms: Vec<(usize, usize)> = (0..rng.gen_range(1..4))
                .map(|_| {
                    let mask = rng.gen_range(1..1usize << n);
                    (mask, rng.gen_range(0..1usize << n) & mask)
                })
                .collect();
            TruthTable::from_fn(n, |i| terms.iter().any(|&(mask, val)| i & mask == val))
        }
        2 => {
            let w: Vec<i64> = (0..n).map(|_| rng.gen_range(-5..=5)).collect();
            let t = rng.gen_range(-6..=6);
            TruthTable::from_fn(n, |i| (0..n).filter(|&v| i >> v & 1 == 1).map(|v| w[v]).sum::<i64>() >= t)
        }
        _ => {
            let center = rng.gen_range(0..1usize << n);
            let radius = rng.gen_range(0..=n as u32 / 2 + 1);
            TruthTable::from_fn(n, |i| (i ^ center).count_ones() <= radius)
        }
    }
}

/// A random non-constant function.
pub fn random_nontrivial(rng: &mut impl Rng, n: usize) -> TruthTable {
    loop {
        let t = random_function(rng, n);
        if !t.is_constant() {
            return t;
        }
    }
}
