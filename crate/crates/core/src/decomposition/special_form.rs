//! Special-form solution graphs.
//!
//! Round `k` of the schedule contributes the vertex block `V^k` (one fresh
//! vertex per label increased in that round) and the edge block `E^k`. Edges
//! are chosen so that after `E^k` the number of open stubs of label `i` for
//! constraint `j` is exactly `|c^k_{j,i}|`, where the signed targets satisfy
//!
//! * `c^k_{j,i} ∈ {⌊a_{j,i}·c_i^k / s_l⌋, ⌈a_{j,i}·c_i^k / s_l⌉}`,
//! * the positive targets of row `j` sum to `⌈r^k_{j,pos}⌉` and the negative
//!   ones to `⌊r^k_{j,neg}⌋`,
//! * `|c^k_{j,i}| ≥ |c^{k+1}_{j,i}|` whenever label `i` is not increased in
//!   round `k + 1`.
//!
//! Stubs are always consumed oldest vertex first, so at most one vertex per
//! label stays partially matched between rounds.

use std::ops::Range;

use num_rational::Ratio;
use thiserror::Error;

use super::schedule::ScheduleTrace;
use crate::instance::{IlpInstance, Solution};
use crate::solution_graph::{
    sol_of, validate_graph, Edge, GraphError, SolutionGraph, Vertex, VertexId, Violation,
    MAX_GRAPH_ELEMENTS,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecialFormError {
    #[error("trace does not belong to solution {0}")]
    TraceMismatch(Solution),
    #[error("no admissible open-edge targets for constraint {constraint}")]
    NoTargets { constraint: usize },
    #[error("target search for constraint {constraint} exceeded its budget")]
    SearchBudget { constraint: usize },
    #[error("round {round}, constraint {constraint}: cannot reach the open-edge targets")]
    Matching { round: usize, constraint: usize },
    #[error("constructed graph is not a member: {0}")]
    InvalidGraph(Violation),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("arithmetic overflow while building the special form")]
    Overflow,
}

/// Limit on search nodes per constraint side when picking targets.
const TARGET_SEARCH_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialFormGraph {
    graph: SolutionGraph,
    vertex_blocks: Vec<Vec<VertexId>>,
    edge_blocks: Vec<Range<usize>>,
    /// `c^k_{j,i}` indexed `[k][j][label]`.
    targets: Vec<Vec<Vec<i64>>>,
    /// Open stubs per label after `E^k`, indexed `[k][j][label]`.
    open_counts: Vec<Vec<Vec<u64>>>,
    /// Signed open stubs before `E^k` is added, `d^{k-1}_{j,i}`.
    pre_open: Vec<Vec<Vec<i64>>>,
    r_pos: Vec<Vec<Ratio<i64>>>,
    r_neg: Vec<Vec<Ratio<i64>>>,
    counters: Vec<Vec<u64>>,
    increases: Vec<Vec<usize>>,
    s_l: u64,
    b_scheduled: bool,
    backtracks: usize,
}

impl SpecialFormGraph {
    pub fn graph(&self) -> &SolutionGraph {
        &self.graph
    }

    pub fn into_graph(self) -> SolutionGraph {
        self.graph
    }

    /// `V^1, ..., V^t`. The label-0 vertex sits in `V^1`.
    pub fn vertex_blocks(&self) -> &[Vec<VertexId>] {
        &self.vertex_blocks
    }

    /// `E^k` as index ranges into `graph().edges()`.
    pub fn edge_blocks(&self) -> &[Range<usize>] {
        &self.edge_blocks
    }

    pub fn targets(&self) -> &[Vec<Vec<i64>>] {
        &self.targets
    }

    /// Targets for zero-based `row` restricted to variable labels `1..=n`.
    pub fn variable_targets(&self, row: usize) -> Vec<Vec<i64>> {
        self.targets.iter().map(|t| t[row][1..].to_vec()).collect()
    }

    pub fn open_counts(&self) -> &[Vec<Vec<u64>>] {
        &self.open_counts
    }

    pub fn pre_open_counts(&self) -> &[Vec<Vec<i64>>] {
        &self.pre_open
    }

    /// `r^k_{j,pos}` indexed `[k][j]`.
    pub fn r_pos(&self) -> &[Vec<Ratio<i64>>] {
        &self.r_pos
    }

    /// `r^k_{j,neg}` indexed `[k][j]`.
    pub fn r_neg(&self) -> &[Vec<Ratio<i64>>] {
        &self.r_neg
    }

    /// Whether the right-hand side took part in the schedule (`b ≠ 0`).
    pub fn b_scheduled(&self) -> bool {
        self.b_scheduled
    }

    /// How often the target search had to undo a round.
    pub fn backtracks(&self) -> usize {
        self.backtracks
    }

    /// Re-derives every structural property of the special form from the
    /// graph and blocks and compares it with the recorded data.
    pub fn check_invariants(&self, inst: &IlpInstance) -> Result<(), String> {
        let g = &self.graph;
        let n = inst.num_vars();
        let m = inst.num_constraints();
        let nv = g.vertices().len();
        let label_of = |id: VertexId| g.vertices()[id].label;

        let mut block_of = vec![usize::MAX; nv];
        for (k, block) in self.vertex_blocks.iter().enumerate() {
            let mut seen = vec![false; n + 1];
            for &v in block {
                if block_of[v] != usize::MAX {
                    return Err(format!("vertex v{v} in two blocks"));
                }
                block_of[v] = k;
                if std::mem::replace(&mut seen[label_of(v)], true) {
                    return Err(format!(
                        "block {} holds two vertices labelled {}",
                        k + 1,
                        label_of(v)
                    ));
                }
            }
        }
        if let Some(v) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(format!("vertex v{v} in no block"));
        }
        let mut next = 0;
        for (k, range) in self.edge_blocks.iter().enumerate() {
            if range.start != next {
                return Err(format!("edge block {} is not contiguous", k + 1));
            }
            next = range.end;
            for e in &g.edges()[range.clone()] {
                if block_of[e.u] > k || block_of[e.v] > k {
                    return Err(format!(
                        "edge v{}--v{} in E^{} touches a later block",
                        e.u,
                        e.v,
                        k + 1
                    ));
                }
            }
        }
        if next != g.edges().len() {
            return Err("edge blocks do not cover all edges".to_string());
        }

        let s_l = self.s_l as i128;
        let mut used = vec![vec![0u64; m]; nv];
        for (k, range) in self.edge_blocks.iter().enumerate().take(self.targets.len()) {
            for e in &g.edges()[range.clone()] {
                used[e.u][e.label - 1] += 1;
                used[e.v][e.label - 1] += 1;
            }
            for row in 0..m {
                let mut open = vec![0u64; n + 1];
                let mut pending = vec![0u32; n + 1];
                for v in 0..nv {
                    if block_of[v] <= k {
                        let want = inst.label_coeff(row, label_of(v)).unsigned_abs();
                        let left = want.checked_sub(used[v][row]).ok_or("degree exceeded")?;
                        open[label_of(v)] += left;
                        pending[label_of(v)] += u32::from(left > 0);
                    }
                }
                if pending.iter().any(|&p| p > 1) {
                    return Err(format!(
                        "round {}: two partially matched vertices share a label",
                        k + 1
                    ));
                }
                if open != self.open_counts[k][row] {
                    return Err(format!(
                        "round {}, row {}: open counts differ",
                        k + 1,
                        row + 1
                    ));
                }
                let mut pos_sum = 0i128;
                let mut neg_sum = 0i128;
                let mut pos_num = 0i128;
                let mut neg_num = 0i128;
                for label in 0..=n {
                    let a = inst.label_coeff(row, label) as i128;
                    let c = self.counters[k][label] as i128;
                    let t = self.targets[k][row][label];
                    if t.unsigned_abs() != open[label] {
                        return Err(format!(
                            "round {}, row {}, label {label}: open ≠ |c^k|",
                            k + 1,
                            row + 1
                        ));
                    }
                    if t.unsigned_abs() > a.unsigned_abs() as u64 {
                        return Err(format!("round {}: |c^k| exceeds |a|", k + 1));
                    }
                    let q = a * c;
                    let (lo, hi) = (q.div_euclid(s_l), -((-q).div_euclid(s_l)));
                    if (t as i128) < lo || (t as i128) > hi {
                        return Err(format!(
                            "round {}, row {}, label {label}: target outside floor/ceil",
                            k + 1,
                            row + 1
                        ));
                    }
                    if a >= 0 {
                        pos_sum += t as i128;
                        pos_num += q;
                    } else {
                        neg_sum += t as i128;
                        neg_num += q;
                    }
                    if k + 1 < self.targets.len()
                        && !self.increases[k + 1].contains(&label)
                        && self.targets[k + 1][row][label].unsigned_abs() > t.unsigned_abs()
                    {
                        return Err(format!(
                            "round {}, row {}, label {label}: targets grew without increase",
                            k + 2,
                            row + 1
                        ));
                    }
                }
                let ceil_pos = -((-pos_num).div_euclid(s_l));
                let floor_neg = neg_num.div_euclid(s_l);
                if pos_sum != ceil_pos || neg_sum != floor_neg {
                    return Err(format!("round {}, row {}: target sums off", k + 1, row + 1));
                }
            }
        }
        Ok(())
    }
}

/// Picks target magnitudes for one side of one row across all rounds.
///
/// `mags[k][x] = (|a_x| · c_x^k, increased in round k)` for the labels `x` on
/// that side. Depth-first over rounds; within a round the combinations of
/// ceiling bumps are tried with increased labels first, then by ascending
/// label, so the first leaf is the greedy choice.
struct SideSearch<'a> {
    mags: &'a [Vec<(u128, bool)>],
    s_l: u128,
    backtracks: usize,
}

struct Level {
    floors: Vec<u64>,
    candidates: Vec<usize>,
    pick: Vec<usize>,
}

impl Level {
    fn current(&self) -> Vec<u64> {
        let mut cur = self.floors.clone();
        for &p in &self.pick {
            cur[self.candidates[p]] += 1;
        }
        cur
    }
}

impl SideSearch<'_> {
    /// The first combination for round `k` given the previous magnitudes, or
    /// `None` when the round admits no choice.
    fn enter(&self, k: usize, prev: &[u64]) -> Option<Level> {
        let round = &self.mags[k];
        let floors: Vec<u64> = round.iter().map(|&(q, _)| (q / self.s_l) as u64).collect();
        let total: u128 = round.iter().map(|&(q, _)| q).sum();
        let need = total.div_ceil(self.s_l) as u64;
        let base: u64 = floors.iter().sum();
        for (x, &(_, increased)) in round.iter().enumerate() {
            if !increased && floors[x] > prev[x] {
                return None;
            }
        }
        let mut candidates: Vec<usize> = (0..round.len())
            .filter(|&x| {
                let (q, increased) = round[x];
                q % self.s_l != 0 && (increased || floors[x] < prev[x])
            })
            .collect();
        candidates.sort_by_key(|&x| (!round[x].1, x));
        let bumps = (need - base) as usize;
        if bumps > candidates.len() {
            return None;
        }
        Some(Level {
            floors,
            candidates,
            pick: (0..bumps).collect(),
        })
    }

    fn run(&mut self, width: usize) -> Result<Option<Vec<Vec<u64>>>, ()> {
        let rounds = self.mags.len();
        let mut levels: Vec<Level> = Vec::with_capacity(rounds);
        let mut out: Vec<Vec<u64>> = Vec::with_capacity(rounds);
        let mut nodes = 0usize;
        let zeros = vec![0u64; width];
        loop {
            let k = out.len();
            if k == rounds {
                return Ok(Some(out));
            }
            nodes += 1;
            if nodes > TARGET_SEARCH_BUDGET {
                return Err(());
            }
            let prev = out.last().unwrap_or(&zeros);
            if let Some(level) = self.enter(k, prev) {
                out.push(level.current());
                levels.push(level);
                continue;
            }
            // Undo rounds until one has another combination left.
            loop {
                let Some(level) = levels.last_mut() else {
                    return Ok(None);
                };
                out.pop();
                self.backtracks += 1;
                let len = level.candidates.len();
                if next_combination(&mut level.pick, len) {
                    out.push(level.current());
                    break;
                }
                levels.pop();
            }
        }
    }
}

fn next_combination(pick: &mut [usize], len: usize) -> bool {
    let k = pick.len();
    for pos in (0..k).rev() {
        if pick[pos] < len - k + pos {
            pick[pos] += 1;
            for later in pos + 1..k {
                pick[later] = pick[later - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Builds the special-form graph for solution `s` from its schedule.
pub fn build_special_form(
    inst: &IlpInstance,
    s: &Solution,
    trace: &ScheduleTrace,
) -> Result<SpecialFormGraph, SpecialFormError> {
    let n = inst.num_vars();
    let m = inst.num_constraints();
    if trace.targets().len() != n + 1
        || trace.targets()[1..] != *s.values()
        || trace.includes_b() == inst.rhs_is_zero()
    {
        return Err(SpecialFormError::TraceMismatch(s.clone()));
    }
    let total: u128 = 1 + s.values().iter().map(|&v| v as u128).sum::<u128>();
    if total > MAX_GRAPH_ELEMENTS {
        return Err(GraphError::TooLarge(MAX_GRAPH_ELEMENTS).into());
    }
    let s_l = trace.s_l();
    let counters = trace.counters_after_reduce();
    let increases = trace.round_increases();
    let rounds = counters.len();

    // Vertex ids are label-major: 0 is the b vertex, then s_1 vertices of
    // label 1 in creation order, and so on.
    let mut offset = vec![0usize; n + 2];
    offset[1] = 1;
    for label in 1..=n {
        offset[label + 1] = offset[label] + s.values()[label - 1] as usize;
    }
    let vertices: Vec<Vertex> = (0..=n)
        .flat_map(|label| (offset[label]..offset[label + 1]).map(move |id| Vertex { id, label }))
        .collect();

    let coeff = |row: usize, label: usize| inst.label_coeff(row, label);

    // Targets c^k_{j,i}, one independent search per row and side.
    let mut targets = vec![vec![vec![0i64; n + 1]; m]; rounds];
    let mut backtracks = 0;
    for row in 0..m {
        for positive in [true, false] {
            let side: Vec<usize> = (0..=n)
                .filter(|&l| {
                    let a = coeff(row, l);
                    a != 0 && (a > 0) == positive
                })
                .collect();
            if side.is_empty() {
                continue;
            }
            let mags: Vec<Vec<(u128, bool)>> = (0..rounds)
                .map(|k| {
                    side.iter()
                        .map(|&l| {
                            let q = coeff(row, l).unsigned_abs() as u128 * counters[k][l] as u128;
                            (q, increases[k].contains(&l))
                        })
                        .collect()
                })
                .collect();
            let mut search = SideSearch {
                mags: &mags,
                s_l: s_l as u128,
                backtracks: 0,
            };
            let chosen = match search.run(side.len()) {
                Ok(Some(chosen)) => chosen,
                Ok(None) => {
                    return Err(SpecialFormError::NoTargets {
                        constraint: row + 1,
                    })
                }
                Err(()) => {
                    return Err(SpecialFormError::SearchBudget {
                        constraint: row + 1,
                    })
                }
            };
            backtracks += search.backtracks;
            for (k, mags) in chosen.iter().enumerate() {
                for (x, &l) in side.iter().enumerate() {
                    let v = i64::try_from(mags[x]).map_err(|_| SpecialFormError::Overflow)?;
                    targets[k][row][l] = if positive { v } else { -v };
                }
            }
        }
    }

    let ratio = |num: i128| -> Result<Ratio<i64>, SpecialFormError> {
        let num = i64::try_from(num).map_err(|_| SpecialFormError::Overflow)?;
        let den = i64::try_from(s_l).map_err(|_| SpecialFormError::Overflow)?;
        Ok(Ratio::new(num, den))
    };
    let mut r_pos = Vec::with_capacity(rounds);
    let mut r_neg = Vec::with_capacity(rounds);
    for c in &counters {
        let mut pos_k = Vec::with_capacity(m);
        let mut neg_k = Vec::with_capacity(m);
        for row in 0..m {
            let (mut p, mut q) = (0i128, 0i128);
            for (label, &ci) in c.iter().enumerate() {
                let a = coeff(row, label) as i128;
                if a >= 0 {
                    p += a * ci as i128;
                } else {
                    q += a * ci as i128;
                }
            }
            pos_k.push(ratio(p)?);
            neg_k.push(ratio(q)?);
        }
        r_pos.push(pos_k);
        r_neg.push(neg_k);
    }

    // Blocks and edges, round by round.
    let mut open = vec![vec![0u64; m]; vertices.len()];
    let mut created = vec![0usize; n + 1];
    let mut alive: Vec<Vec<VertexId>> = vec![Vec::new(); n + 1];
    let mut vertex_blocks: Vec<Vec<VertexId>> = Vec::with_capacity(rounds.max(1));
    let mut edge_blocks = Vec::with_capacity(rounds.max(1));
    let mut edges: Vec<Edge> = Vec::new();
    let mut open_counts = Vec::with_capacity(rounds);
    let mut pre_open = Vec::with_capacity(rounds);

    for k in 0..rounds {
        let mut block = Vec::new();
        if k == 0 && !trace.includes_b() {
            block.push(0);
        }
        for &label in &increases[k] {
            let id = if label == 0 {
                0
            } else {
                offset[label] + created[label]
            };
            created[label] += 1;
            for (row, o) in open[id].iter_mut().enumerate() {
                *o = coeff(row, label).unsigned_abs();
            }
            alive[label].push(id);
            block.push(id);
        }
        block.sort_unstable();
        vertex_blocks.push(block);

        let start = edges.len();
        let mut open_k = Vec::with_capacity(m);
        let mut pre_k = Vec::with_capacity(m);
        for row in 0..m {
            let mut pos_stubs = Vec::new();
            let mut neg_stubs = Vec::new();
            let mut pre_row = vec![0i64; n + 1];
            for label in 0..=n {
                let a = coeff(row, label);
                let have: u64 = alive[label].iter().map(|&v| open[v][row]).sum();
                pre_row[label] = if a < 0 { -(have as i64) } else { have as i64 };
                let want = targets[k][row][label].unsigned_abs();
                let mut drop = have.checked_sub(want).ok_or(SpecialFormError::Matching {
                    round: k + 1,
                    constraint: row + 1,
                })?;
                for &v in &alive[label] {
                    let take = drop.min(open[v][row]);
                    let stubs = if a > 0 {
                        &mut pos_stubs
                    } else {
                        &mut neg_stubs
                    };
                    stubs.extend(std::iter::repeat_n(v, take as usize));
                    drop -= take;
                }
            }
            if pos_stubs.len() != neg_stubs.len() {
                return Err(SpecialFormError::Matching {
                    round: k + 1,
                    constraint: row + 1,
                });
            }
            for (&u, &v) in pos_stubs.iter().zip(&neg_stubs) {
                open[u][row] -= 1;
                open[v][row] -= 1;
                edges.push(Edge {
                    u,
                    v,
                    label: row + 1,
                });
            }
            if edges.len() as u128 + total > MAX_GRAPH_ELEMENTS {
                return Err(GraphError::TooLarge(MAX_GRAPH_ELEMENTS).into());
            }
            let after: Vec<u64> = (0..=n)
                .map(|label| alive[label].iter().map(|&v| open[v][row]).sum())
                .collect();
            open_k.push(after);
            pre_k.push(pre_row);
        }
        for list in alive.iter_mut() {
            list.retain(|&v| open[v].iter().any(|&o| o > 0));
        }
        edge_blocks.push(start..edges.len());
        open_counts.push(open_k);
        pre_open.push(pre_k);
    }
    if rounds == 0 {
        vertex_blocks.push(vec![0]);
        edge_blocks.push(0..0);
    }

    let graph = SolutionGraph::from_parts(n, vertices, edges);
    validate_graph(inst, &graph).map_err(SpecialFormError::InvalidGraph)?;
    if sol_of(&graph) != *s {
        return Err(SpecialFormError::TraceMismatch(s.clone()));
    }
    Ok(SpecialFormGraph {
        graph,
        vertex_blocks,
        edge_blocks,
        targets,
        open_counts,
        pre_open,
        r_pos,
        r_neg,
        counters,
        increases,
        s_l,
        b_scheduled: trace.includes_b(),
        backtracks,
    })
}
