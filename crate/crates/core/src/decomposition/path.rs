//! Path decompositions: a sequence of vertex bags covering every vertex and
//! edge, where each vertex occupies a contiguous run of bags.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::special_form::SpecialFormGraph;
use crate::solution_graph::{SolutionGraph, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathDecomposition {
    pub bags: Vec<Vec<VertexId>>,
    pub width: usize,
}

impl PathDecomposition {
    /// Wraps bags and computes the width (largest bag size minus one).
    pub fn new(bags: Vec<Vec<VertexId>>) -> Self {
        let width = bags
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
            .saturating_sub(1);
        Self { bags, width }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bags serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One `bag k: id id ...` line per bag, `k` counted from 1.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, bag) in self.bags.iter().enumerate() {
            let _ = write!(out, "bag {}:", k + 1);
            for v in bag {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    /// Copy without the bag at position `index`.
    pub fn without_bag(&self, index: usize) -> Self {
        let mut bags = self.bags.clone();
        bags.remove(index);
        Self::new(bags)
    }

    /// Largest number of vertices sharing one label within a single bag.
    pub fn max_label_occupancy(&self, g: &SolutionGraph) -> usize {
        let mut best = 0;
        for bag in &self.bags {
            let mut counts = vec![0usize; g.num_vars() + 1];
            for &v in bag {
                if let Some(vertex) = g.vertex(v) {
                    if vertex.label <= g.num_vars() {
                        counts[vertex.label] += 1;
                        best = best.max(counts[vertex.label]);
                    }
                }
            }
        }
        best
    }
}

/// Builds the bags from the blocks of a special-form graph.
///
/// A vertex enters the bag of its block and leaves once every incident edge
/// has been placed. The right-hand-side vertex stays in every bag when it
/// took part in the schedule; for `b = 0` it is isolated and gets a bag of
/// its own in front.
pub fn decompose(sf: &SpecialFormGraph) -> PathDecomposition {
    let g = sf.graph();
    let nv = g.vertices().len();
    let mut created = vec![0usize; nv];
    for (k, block) in sf.vertex_blocks().iter().enumerate() {
        for &v in block {
            created[v] = k;
        }
    }
    let mut done = created.clone();
    for (k, range) in sf.edge_blocks().iter().enumerate() {
        for e in &g.edges()[range.clone()] {
            done[e.u] = done[e.u].max(k);
            done[e.v] = done[e.v].max(k);
        }
    }
    let t = sf.vertex_blocks().len();
    if sf.b_scheduled() {
        done[0] = t - 1;
    }
    let mut bags = vec![Vec::new(); t];
    let isolated_b = !sf.b_scheduled() && nv > 1;
    for v in usize::from(isolated_b)..nv {
        for bag in &mut bags[created[v]..=done[v]] {
            bag.push(v);
        }
    }
    if isolated_b {
        bags.insert(0, vec![0]);
    }
    PathDecomposition::new(bags)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecompositionViolation {
    UnknownVertex(VertexId),
    VertexNotCovered(VertexId),
    EdgeNotCovered {
        u: VertexId,
        v: VertexId,
        label: usize,
    },
    NotContiguous(VertexId),
}

impl fmt::Display for DecompositionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnknownVertex(v) => write!(f, "bag mentions unknown vertex v{v}"),
            Self::VertexNotCovered(v) => write!(f, "vertex v{v} is in no bag"),
            Self::EdgeNotCovered { u, v, label } => {
                write!(f, "edge v{u}--v{v} (label {label}) shares no bag")
            }
            Self::NotContiguous(v) => write!(f, "bags holding v{v} are not contiguous"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionVerdict {
    pub result: Result<(), DecompositionViolation>,
    pub width: usize,
}

impl DecompositionVerdict {
    pub fn is_valid(&self) -> bool {
        self.result.is_ok()
    }
}

/// Checks vertex coverage, edge coverage and contiguity, in that order.
pub fn validate_decomposition(g: &SolutionGraph, pd: &PathDecomposition) -> DecompositionVerdict {
    let width = pd
        .bags
        .iter()
        .map(Vec::len)
        .max()
        .unwrap_or(0)
        .saturating_sub(1);
    DecompositionVerdict {
        result: check(g, pd),
        width,
    }
}

fn check(g: &SolutionGraph, pd: &PathDecomposition) -> Result<(), DecompositionViolation> {
    let known: HashSet<VertexId> = g.vertices().iter().map(|v| v.id).collect();
    let bags: Vec<HashSet<VertexId>> = pd
        .bags
        .iter()
        .map(|b| b.iter().copied().collect())
        .collect();
    for bag in &bags {
        if let Some(&v) = bag.iter().find(|v| !known.contains(v)) {
            return Err(DecompositionViolation::UnknownVertex(v));
        }
    }
    for v in g.vertices() {
        if !bags.iter().any(|b| b.contains(&v.id)) {
            return Err(DecompositionViolation::VertexNotCovered(v.id));
        }
    }
    for e in g.edges() {
        if !bags.iter().any(|b| b.contains(&e.u) && b.contains(&e.v)) {
            return Err(DecompositionViolation::EdgeNotCovered {
                u: e.u,
                v: e.v,
                label: e.label,
            });
        }
    }
    for v in g.vertices() {
        let hits: Vec<usize> = (0..bags.len())
            .filter(|&k| bags[k].contains(&v.id))
            .collect();
        if hits.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(DecompositionViolation::NotContiguous(v.id));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{build_special_form, schedule};
    use crate::instance::{IlpInstance, Solution};
    use crate::solution_graph::build_graph;

    fn example() -> IlpInstance {
        IlpInstance::from_rows(vec![vec![-2, 3, 1], vec![1, -2, 1]], vec![0, 0]).unwrap()
    }

    fn pipeline(inst: &IlpInstance, s: &[u64]) -> (SpecialFormGraph, PathDecomposition) {
        let s = Solution::new(s.to_vec());
        let trace = schedule(inst, &s).unwrap();
        let sf = build_special_form(inst, &s, &trace).unwrap();
        let pd = decompose(&sf);
        (sf, pd)
    }

    #[test]
    fn example_decomposition() {
        let (sf, pd) = pipeline(&example(), &[5, 3, 1]);
        let verdict = validate_decomposition(sf.graph(), &pd);
        assert!(verdict.is_valid(), "{verdict:?}");
        assert!(verdict.width <= 5);
        assert!(pd.max_label_occupancy(sf.graph()) <= 2);
        assert_eq!(pd.bags.len(), 6);
        assert_eq!(pd.bags[0], vec![0]);
    }

    #[test]
    fn dropping_interior_bag_breaks_it() {
        let (sf, pd) = pipeline(&example(), &[5, 3, 1]);
        for k in 2..pd.bags.len() - 1 {
            assert!(!validate_decomposition(sf.graph(), &pd.without_bag(k)).is_valid());
        }
    }

    #[test]
    fn matched_pair() {
        let inst = IlpInstance::from_rows(vec![vec![1, -1]], vec![0]).unwrap();
        let (sf, pd) = pipeline(&inst, &[1, 1]);
        assert_eq!(sf.vertex_blocks().len(), 1);
        let verdict = validate_decomposition(sf.graph(), &pd);
        assert!(verdict.is_valid());
        assert_eq!(pd.bags, vec![vec![0], vec![1, 2]]);
        assert_eq!(verdict.width, 1);
    }

    #[test]
    fn single_bag_is_trivially_valid() {
        let inst = example();
        let g = build_graph(&inst, &Solution::new(vec![5, 3, 1])).unwrap();
        let pd = PathDecomposition::new(vec![g.vertices().iter().map(|v| v.id).collect()]);
        let verdict = validate_decomposition(&g, &pd);
        assert!(verdict.is_valid());
        assert_eq!(verdict.width, g.vertices().len() - 1);
    }

    #[test]
    fn violations_are_reported_in_order() {
        let inst = IlpInstance::from_rows(vec![vec![1, -1]], vec![0]).unwrap();
        let g = build_graph(&inst, &Solution::new(vec![1, 1])).unwrap();
        let v = |bags: Vec<Vec<usize>>| {
            validate_decomposition(&g, &PathDecomposition::new(bags)).result
        };
        assert_eq!(
            v(vec![vec![0, 1, 2, 7]]),
            Err(DecompositionViolation::UnknownVertex(7))
        );
        assert_eq!(
            v(vec![vec![0, 1]]),
            Err(DecompositionViolation::VertexNotCovered(2))
        );
        assert_eq!(
            v(vec![vec![0, 1], vec![2]]),
            Err(DecompositionViolation::EdgeNotCovered {
                u: 1,
                v: 2,
                label: 1
            })
        );
        assert_eq!(
            v(vec![vec![0, 1, 2], vec![2], vec![0]]),
            Err(DecompositionViolation::NotContiguous(0))
        );
    }

    #[test]
    fn rhs_vertex_in_every_bag() {
        let inst = IlpInstance::from_rows(vec![vec![1, 2]], vec![7]).unwrap();
        let (sf, pd) = pipeline(&inst, &[1, 3]);
        assert!(pd.bags.iter().all(|b| b.contains(&0)));
        let verdict = validate_decomposition(sf.graph(), &pd);
        assert!(verdict.is_valid());
        assert!(verdict.width <= 4);
    }

    #[test]
    fn exports() {
        let pd = PathDecomposition::new(vec![vec![0, 1], vec![1, 2, 3]]);
        assert_eq!(pd.to_text(), "bag 1: 0 1\nbag 2: 1 2 3\n");
        assert_eq!(pd.to_json(), r#"{"bags":[[0,1],[1,2,3]],"width":2}"#);
        assert_eq!(PathDecomposition::from_json(&pd.to_json()).unwrap(), pd);
    }
}
