//! Total and partial assignments of the binary input variables.

use std::collections::BTreeMap;
use std::fmt;

/// A variable of the diagram manager. Variables are numbered `0..n`; the
/// manager decides at which level of the diagram each one is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VarId {
    fn from(i: usize) -> Self {
        VarId(i as u32)
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// A total assignment: one bit per variable, indexed by [`VarId`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance(Vec<bool>);

impl Instance {
    pub fn new(bits: Vec<bool>) -> Self {
        Instance(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Instance(vec![false; n])
    }

    /// The `index`-th assignment in binary counting order, where variable 0
    /// is the least significant bit.
    pub fn from_index(n: usize, index: u64) -> Self {
        Instance((0..n).map(|i| (index >> i) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, v: VarId) -> bool {
        self.0[v.index()]
    }

    pub fn set(&mut self, v: VarId, value: bool) {
        self.0[v.index()] = value;
    }

    pub fn flip(&mut self, v: VarId) {
        self.0[v.index()] ^= true;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn hamming(&self, other: &Instance) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// Restricts this instance to the given variables.
    pub fn project(&self, vars: impl IntoIterator<Item = VarId>) -> PartialInstance {
        vars.into_iter().map(|v| (v, self.get(v))).collect()
    }
}

impl From<Vec<bool>> for Instance {
    fn from(bits: Vec<bool>) -> Self {
        Instance(bits)
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A set of `(variable, bit)` pairs with no variable repeated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PartialInstance(BTreeMap<VarId, bool>);

impl PartialInstance {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a literal. Returns the previous value when the variable was
    /// already assigned; the new value replaces it.
    pub fn insert(&mut self, v: VarId, value: bool) -> Option<bool> {
        self.0.insert(v, value)
    }

    pub fn remove(&mut self, v: VarId) -> Option<bool> {
        self.0.remove(&v)
    }

    pub fn get(&self, v: VarId) -> Option<bool> {
        self.0.get(&v).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, bool)> + '_ {
        self.0.iter().map(|(&v, &b)| (v, b))
    }

    /// True when every literal agrees with `x`.
    pub fn is_consistent_with(&self, x: &Instance) -> bool {
        self.iter().all(|(v, b)| v.index() < x.len() && x.get(v) == b)
    }

    /// Overlays the literals on top of `fill`.
    pub fn complete(&self, fill: &Instance) -> Instance {
        let mut out = fill.clone();
        for (v, b) in self.iter() {
            out.set(v, b);
        }
        out
    }
}

impl FromIterator<(VarId, bool)> for PartialInstance {
    fn from_iter<I: IntoIterator<Item = (VarId, bool)>>(iter: I) -> Self {
        PartialInstance(iter.into_iter().collect())
    }
}

impl fmt::Display for PartialInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, b) in self.iter() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            if !b {
                f.write_str("-")?;
            }
            write!(f, "{}", v)?;
        }
        Ok(())
    }
}
