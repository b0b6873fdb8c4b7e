//! Line-oriented text format.
//!
//! ```text
//! obdd n=<vars> root=<id>
//! <id> <var> <lo-id> <hi-id>
//! ...
//! ```
//!
//! Ids 0 and 1 are the FALSE and TRUE terminals. Internal nodes are numbered
//! from 2 in post-order (lo before hi), so every line only refers to ids that
//! appear above it and the output is deterministic.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write;

use super::{Manager, NodeRef, ObddError, Result, FALSE_IDX, TRUE_IDX};
use crate::instance::VarId;

struct Parsed {
    num_vars: usize,
    root: usize,
    nodes: Vec<(usize, u32, usize, usize)>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> ObddError {
    ObddError::Parse { line, msg: msg.into() }
}

fn parse(text: &str) -> Result<Parsed> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("obdd") {
        return Err(parse_err(hline, "expected header `obdd n=<vars> root=<id>`"));
    }
    let mut num_vars = None;
    let mut root = None;
    for field in fields {
        let (key, value) = field.split_once('=').ok_or_else(|| parse_err(hline, format!("bad field `{}`", field)))?;
        let value: usize = value.parse().map_err(|_| parse_err(hline, format!("bad number in `{}`", field)))?;
        match key {
            "n" => num_vars = Some(value),
            "root" => root = Some(value),
            _ => return Err(parse_err(hline, format!("unknown field `{}`", key))),
        }
    }
    let num_vars = num_vars.ok_or_else(|| parse_err(hline, "missing n="))?;
    let root = root.ok_or_else(|| parse_err(hline, "missing root="))?;

    let mut nodes = Vec::new();
    for (line, l) in lines {
        let nums = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| parse_err(line, "expected four integers"))?;
        let [id, var, lo, hi] = nums[..] else {
            return Err(parse_err(line, "expected `<id> <var> <lo> <hi>`"));
        };
        if var >= num_vars {
            return Err(parse_err(line, format!("variable {} out of range", var)));
        }
        if id != nodes.len() + 2 {
            return Err(parse_err(line, format!("expected id {}, found {}", nodes.len() + 2, id)));
        }
        if lo >= id || hi >= id {
            return Err(parse_err(line, "children must be defined before their parent"));
        }
        if lo == hi {
            return Err(parse_err(line, "redundant node"));
        }
        nodes.push((id, var as u32, lo, hi));
    }
    if root >= nodes.len() + 2 {
        return Err(parse_err(hline, format!("root {} is not defined", root)));
    }
    Ok(Parsed { num_vars, root, nodes })
}

/// An order in which every parent variable precedes its children's
/// variables, preferring smaller variable indices.
fn infer_order(p: &Parsed) -> Result<Vec<VarId>> {
    let n = p.num_vars;
    let var_of = |id: usize| if id < 2 { None } else { Some(p.nodes[id - 2].1 as usize) };
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    let mut edges = std::collections::HashSet::new();
    for &(_, var, lo, hi) in &p.nodes {
        for child in [lo, hi] {
            if let Some(cv) = var_of(child) {
                if edges.insert((var as usize, cv)) {
                    succ[var as usize].push(cv);
                    indeg[cv] += 1;
                }
            }
        }
    }
    let mut heap: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = heap.pop() {
        order.push(VarId(v as u32));
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                heap.push(Reverse(w));
            }
        }
    }
    if order.len() != n {
        return Err(parse_err(1, "no variable order is consistent with the edges"));
    }
    Ok(order)
}

impl Manager {
    /// Serializes `f` in the text format.
    pub fn to_text(&self, f: NodeRef) -> Result<String> {
        let root = self.idx(f)?;
        let mut ids: HashMap<u32, usize> = HashMap::new();
        ids.insert(FALSE_IDX, 0);
        ids.insert(TRUE_IDX, 1);
        let mut body = String::new();
        // iterative post-order
        let mut stack = vec![(root, false)];
        while let Some((a, expanded)) = stack.pop() {
            if ids.contains_key(&a) {
                continue;
            }
            let n = self.nodes[a as usize];
            if expanded {
                let id = ids.len();
                ids.insert(a, id);
                writeln!(body, "{} {} {} {}", id, n.var, ids[&n.lo], ids[&n.hi]).unwrap();
            } else {
                stack.push((a, true));
                stack.push((n.hi, false));
                stack.push((n.lo, false));
            }
        }
        Ok(format!("obdd n={} root={}\n{}", self.num_vars(), ids[&root], body))
    }

    /// Reads a diagram into a fresh manager whose variable order is inferred
    /// from the file, so node counts are preserved.
    pub fn from_text(text: &str) -> Result<(Manager, NodeRef)> {
        let p = parse(text)?;
        let order = infer_order(&p)?;
        let mut m = Manager::with_order(&order)?;
        let mut handles = vec![NodeRef::FALSE, NodeRef::TRUE];
        for &(_, var, lo, hi) in &p.nodes {
            let h = m.node(VarId(var), handles[lo], handles[hi])?;
            handles.push(h);
        }
        Ok((m, handles[p.root]))
    }

    /// Reads a diagram into this manager, whatever its order. The file's
    /// variables must exist here.
    pub fn import_text(&mut self, text: &str) -> Result<NodeRef> {
        let p = parse(text)?;
        if p.num_vars > self.num_vars() {
            return Err(ObddError::VarOutOfRange { var: p.num_vars as u32 - 1, num_vars: self.num_vars() });
        }
        let mut handles = vec![NodeRef::FALSE, NodeRef::TRUE];
        for &(_, var, lo, hi) in &p.nodes {
            let x = self.var(VarId(var))?;
            let h = self.ite(x, handles[hi], handles[lo])?;
            handles.push(h);
        }
        Ok(handles[p.root])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;

    fn sample(m: &mut Manager) -> NodeRef {
        let a = m.var(VarId(0)).unwrap();
        let b = m.var(VarId(1)).unwrap();
        let c = m.var(VarId(2)).unwrap();
        let ab = m.or(a, b).unwrap();
        m.xor(ab, c).unwrap()
    }

    #[test]
    fn format_is_stable() {
        let mut m = Manager::new(2);
        let a = m.var(VarId(0)).unwrap();
        let b = m.var(VarId(1)).unwrap();
        let f = m.and(a, b).unwrap();
        assert_eq!(m.to_text(f).unwrap(), "obdd n=2 root=3\n2 1 0 1\n3 0 0 2\n");
        assert_eq!(m.to_text(NodeRef::FALSE).unwrap(), "obdd n=2 root=0\n");
    }

    #[test]
    fn round_trip_into_same_manager_is_handle_equal() {
        let mut m = Manager::new(3);
        let f = sample(&mut m);
        let text = m.to_text(f).unwrap();
        assert_eq!(m.import_text(&text).unwrap(), f);
    }

    #[test]
    fn from_text_recovers_custom_order() {
        let mut m = Manager::with_order(&[VarId(2), VarId(1), VarId(0)]).unwrap();
        let f = sample(&mut m);
        let text = m.to_text(f).unwrap();
        let (m2, g) = Manager::from_text(&text).unwrap();
        assert_eq!(m2.order(), m.order());
        assert_eq!(m2.node_count(g).unwrap(), m.node_count(f).unwrap());
        for i in 0..8 {
            let x = Instance::from_index(3, i);
            assert_eq!(m.evaluate(f, &x).unwrap(), m2.evaluate(g, &x).unwrap());
        }
        assert_eq!(m2.to_text(g).unwrap(), text);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(Manager::from_text("").is_err());
        assert!(Manager::from_text("bdd n=1 root=0").is_err());
        assert!(Manager::from_text("obdd n=1 root=2\n2 0 1 1\n").is_err());
        assert!(Manager::from_text("obdd n=1 root=2\n2 3 0 1\n").is_err());
        assert!(Manager::from_text("obdd n=1 root=3\n2 0 0 1\n").is_err());
        assert!(Manager::from_text("obdd n=2 root=2\n2 0 0 3\n").is_err());
        // 0 above 1 on one path and 1 above 0 on another
        let cyclic = "obdd n=2 root=5\n2 1 0 1\n3 0 2 1\n4 0 0 1\n5 1 3 4\n";
        assert!(Manager::from_text(cyclic).is_err());
    }
}
