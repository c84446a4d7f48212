//! Brute-force ground truth: exhaustive enumeration of a box `[0, k_i]^n`.
//!
//! Verdicts are always relative to the box. A solution outside it is never
//! seen, so "no solution" only means "none within the box".

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instance::{IlpInstance, Solution};

pub const DEFAULT_BOX: u64 = 10;
pub const DEFAULT_BUDGET: u64 = 200_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub var_names: Vec<String>,
    /// Upper limit per variable.
    pub box_bounds: Vec<u64>,
    /// Lexicographically ordered.
    pub solutions: Vec<Solution>,
    /// Set when the node budget ran out; `solutions` is then incomplete.
    pub partial: bool,
}

impl SolutionSet {
    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn contains(&self, s: &[u64]) -> bool {
        self.solutions.iter().any(|x| x.values() == s)
    }

    /// One row per solution under a header of variable names.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.var_names).expect("in-memory write");
        for s in &self.solutions {
            w.write_record(s.values().iter().map(u64::to_string))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleVerdict {
    Feasible(Solution),
    InfeasibleWithinBox,
    /// Budget exhausted before a solution was found.
    Inconclusive,
}

impl OracleVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, OracleVerdict::Feasible(_))
    }
}

/// The same limit `k` for every variable.
pub fn uniform_box(inst: &IlpInstance, k: u64) -> Vec<u64> {
    vec![k; inst.num_vars()]
}

/// Partial-sum pruning data: for each row and each position `p`, the least
/// and greatest contribution of variables `p..n`.
struct Pruner {
    min_tail: Vec<Vec<i128>>,
    max_tail: Vec<Vec<i128>>,
}

impl Pruner {
    fn new(inst: &IlpInstance, bounds: &[u64]) -> Self {
        let n = inst.num_vars();
        let m = inst.num_constraints();
        let mut min_tail = vec![vec![0i128; n + 1]; m];
        let mut max_tail = vec![vec![0i128; n + 1]; m];
        for j in 0..m {
            for i in (0..n).rev() {
                let extreme = inst.coeff(j, i) as i128 * bounds[i] as i128;
                min_tail[j][i] = min_tail[j][i + 1] + extreme.min(0);
                max_tail[j][i] = max_tail[j][i + 1] + extreme.max(0);
            }
        }
        Self { min_tail, max_tail }
    }

    /// Whether the remaining variables from position `p` can still close
    /// every row.
    fn viable(&self, inst: &IlpInstance, partial: &[i128], p: usize) -> bool {
        partial.iter().enumerate().all(|(j, &s)| {
            let need = inst.rhs()[j] as i128 - s;
            self.min_tail[j][p] <= need && need <= self.max_tail[j][p]
        })
    }
}

struct Search<'a> {
    inst: &'a IlpInstance,
    bounds: &'a [u64],
    pruner: &'a Pruner,
    budget: u64,
    nodes: &'a AtomicU64,
    exhausted: &'a AtomicBool,
    stop_at_first: bool,
}

impl Search<'_> {
    /// Depth-first over positions `p..n`; returns `false` to stop.
    fn dfs(
        &self,
        p: usize,
        x: &mut Vec<u64>,
        partial: &mut [i128],
        out: &mut Vec<Solution>,
    ) -> bool {
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.budget {
            self.exhausted.store(true, Ordering::Relaxed);
            return false;
        }
        if !self.pruner.viable(self.inst, partial, p) {
            return true;
        }
        if p == self.inst.num_vars() {
            out.push(Solution::new(x.clone()));
            return !self.stop_at_first;
        }
        let col = self.inst.column(p);
        for v in 0..=self.bounds[p] {
            x.push(v);
            let go = self.dfs(p + 1, x, partial, out);
            x.pop();
            if !go {
                return false;
            }
            for (s, &a) in partial.iter_mut().zip(&col) {
                *s += a as i128;
            }
        }
        for (s, &a) in partial.iter_mut().zip(&col) {
            *s -= a as i128 * (self.bounds[p] as i128 + 1);
        }
        true
    }
}

/// Every solution within `bounds`, in lexicographic order.
///
/// The outermost variable's range is split across threads and the pieces are
/// concatenated in order.
pub fn enumerate_solutions(inst: &IlpInstance, bounds: &[u64], budget: u64) -> SolutionSet {
    assert_eq!(bounds.len(), inst.num_vars(), "one bound per variable");
    let pruner = Pruner::new(inst, bounds);
    let nodes = AtomicU64::new(0);
    let exhausted = AtomicBool::new(false);
    let search = Search {
        inst,
        bounds,
        pruner: &pruner,
        budget,
        nodes: &nodes,
        exhausted: &exhausted,
        stop_at_first: false,
    };
    let m = inst.num_constraints();
    let col0 = inst.column(0);
    let pieces: Vec<Vec<Solution>> = (0..=bounds[0])
        .into_par_iter()
        .map(|v| {
            let mut partial: Vec<i128> = col0.iter().map(|&a| a as i128 * v as i128).collect();
            debug_assert_eq!(partial.len(), m);
            let mut x = vec![v];
            let mut out = Vec::new();
            search.dfs(1, &mut x, &mut partial, &mut out);
            out
        })
        .collect();
    SolutionSet {
        var_names: inst.var_names().to_vec(),
        box_bounds: bounds.to_vec(),
        solutions: pieces.into_iter().flatten().collect(),
        partial: exhausted.load(Ordering::Relaxed),
    }
}

/// The lexicographically first solution within `bounds`.
pub fn brute_force_feasible(inst: &IlpInstance, bounds: &[u64], budget: u64) -> OracleVerdict {
    assert_eq!(bounds.len(), inst.num_vars(), "one bound per variable");
    let pruner = Pruner::new(inst, bounds);
    let nodes = AtomicU64::new(0);
    let exhausted = AtomicBool::new(false);
    let search = Search {
        inst,
        bounds,
        pruner: &pruner,
        budget,
        nodes: &nodes,
        exhausted: &exhausted,
        stop_at_first: true,
    };
    let mut partial = vec![0i128; inst.num_constraints()];
    let mut out = Vec::new();
    search.dfs(0, &mut Vec::new(), &mut partial, &mut out);
    match out.pop() {
        Some(s) => OracleVerdict::Feasible(s),
        None if exhausted.load(Ordering::Relaxed) => OracleVerdict::Inconclusive,
        None => OracleVerdict::InfeasibleWithinBox,
    }
}
