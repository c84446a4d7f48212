//! Labelled multigraphs that encode solutions of `Ax = b`.
//!
//! A solution `s` is written in unary: `s_i` vertices carry label `i`, and a
//! single extra vertex with label `0` stands for `b`. For every constraint `j`,
//! each vertex is the endpoint of exactly `|a_{j,i}|` edges labelled `j`
//! (`|b_j|` for the label-0 vertex), and every such edge joins endpoints of
//! opposite sign. A graph satisfying this balances positive and negative
//! stubs, which is exactly `As = b`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{IlpInstance, Solution};

pub type VertexId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    /// `0` for the right-hand-side vertex, `i ∈ [1, n]` for variable `i`.
    pub label: usize,
}

/// Unordered edge between `u` and `v` for constraint `label ∈ [1, m]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub label: usize,
}

impl Edge {
    pub fn touches(&self, w: VertexId) -> bool {
        self.u == w || self.v == w
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionGraph {
    num_vars: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    fn of(c: i64) -> Self {
        if c < 0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

/// Sign of a vertex labelled `label` with respect to zero-based `row`.
/// Zero coefficients count as positive.
pub fn vertex_sign(inst: &IlpInstance, row: usize, label: usize) -> Sign {
    Sign::of(inst.label_coeff(row, label))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("assignment has length {found}, instance has {expected} variables")]
    LengthMismatch { found: usize, expected: usize },
    #[error("not a solution: constraint {constraint} has {positive} positive and {negative} negative stubs")]
    NotASolution {
        constraint: usize,
        positive: u128,
        negative: u128,
    },
    #[error("graph would need more than {0} vertices or edges")]
    TooLarge(u128),
    #[error("dot line {line}: {msg}")]
    Dot { line: usize, msg: String },
}

/// Upper limit on vertices plus edges materialized by [`build_graph`].
pub const MAX_GRAPH_ELEMENTS: u128 = 20_000_000;

/// The membership conditions, in the order they are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    /// Vertex labels partition `V` and exactly one vertex has label 0.
    VertexPartition = 1,
    /// Edge labels partition `E` (each edge labelled by a constraint).
    EdgePartition = 2,
    /// Every `j`-edge joins vertices of opposite sign for `j`.
    OppositeSigns = 3,
    /// `j`-degrees equal `|a_{j,i}|`, and `|b_j|` for the label-0 vertex.
    Degrees = 4,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "condition {} violated: {}",
            self.condition as u8, self.detail
        )
    }
}

impl SolutionGraph {
    /// Wraps raw vertices and edges. No checks happen here; see
    /// [`validate_graph`].
    pub fn from_parts(num_vars: usize, vertices: Vec<Vertex>, edges: Vec<Edge>) -> Self {
        Self {
            num_vars,
            vertices,
            edges,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertices.iter().find(|v| v.id == id)
    }

    /// Id of the first label-0 vertex.
    pub fn b_vertex(&self) -> Option<VertexId> {
        self.vertices.iter().find(|v| v.label == 0).map(|v| v.id)
    }

    /// Copy with the vertex `id` relabelled.
    pub fn with_label(&self, id: VertexId, label: usize) -> Self {
        let mut g = self.clone();
        for v in g.vertices.iter_mut().filter(|v| v.id == id) {
            v.label = label;
        }
        g
    }

    /// Copy without the edge at position `index`.
    pub fn without_edge(&self, index: usize) -> Self {
        let mut g = self.clone();
        g.edges.remove(index);
        g
    }

    /// Copy with one extra edge.
    pub fn with_edge(&self, edge: Edge) -> Self {
        let mut g = self.clone();
        g.edges.push(edge);
        g
    }

    /// Graphviz rendering. Vertex `v<id>` carries its label and, as a tooltip,
    /// its sign for each constraint.
    pub fn to_dot(&self, inst: &IlpInstance) -> String {
        let mut out = String::from("graph G {\n");
        for v in &self.vertices {
            let signs: Vec<String> = (0..inst.num_constraints())
                .map(|row| {
                    if v.label <= inst.num_vars() {
                        vertex_sign(inst, row, v.label).symbol().to_string()
                    } else {
                        "?".to_string()
                    }
                })
                .collect();
            let _ = writeln!(
                out,
                "  v{} [label=\"{}\", tooltip=\"{}\"];",
                v.id,
                v.label,
                signs.join(",")
            );
        }
        for e in &self.edges {
            let _ = writeln!(out, "  v{} -- v{} [label=\"{}\"];", e.u, e.v, e.label);
        }
        out.push_str("}\n");
        out
    }

    /// Reads back the DOT subset written by [`SolutionGraph::to_dot`].
    pub fn from_dot(text: &str, num_vars: usize) -> Result<Self, GraphError> {
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: &str| GraphError::Dot {
                line: k + 1,
                msg: msg.to_string(),
            };
            if line.is_empty() || line == "}" || line.starts_with("graph") {
                continue;
            }
            let line = line.trim_end_matches(';');
            let (head, attrs) = line
                .split_once('[')
                .ok_or_else(|| err("expected an attribute list"))?;
            let label = dot_label(attrs).ok_or_else(|| err("missing label attribute"))?;
            if let Some((a, b)) = head.split_once("--") {
                let u = dot_vertex(a).ok_or_else(|| err("bad edge source"))?;
                let v = dot_vertex(b).ok_or_else(|| err("bad edge target"))?;
                edges.push(Edge { u, v, label });
            } else {
                let id = dot_vertex(head).ok_or_else(|| err("bad vertex name"))?;
                vertices.push(Vertex { id, label });
            }
        }
        Ok(Self::from_parts(num_vars, vertices, edges))
    }
}

fn dot_vertex(s: &str) -> Option<VertexId> {
    s.trim().strip_prefix('v')?.parse().ok()
}

fn dot_label(attrs: &str) -> Option<usize> {
    let rest = &attrs[attrs.find("label=\"")? + 7..];
    rest[..rest.find('"')?].parse().ok()
}

/// Builds the canonical graph for solution `s`.
///
/// Vertex ids are assigned label-major (`0` is the `b` vertex, then the `s_1`
/// vertices of label 1, and so on). For each constraint the positive stubs and
/// the negative stubs are listed in `(label, id)` order and zipped.
pub fn build_graph(inst: &IlpInstance, s: &Solution) -> Result<SolutionGraph, GraphError> {
    let n = inst.num_vars();
    if s.len() != n {
        return Err(GraphError::LengthMismatch {
            found: s.len(),
            expected: n,
        });
    }
    let total: u128 = 1 + s.values().iter().map(|&v| v as u128).sum::<u128>();
    if total > MAX_GRAPH_ELEMENTS {
        return Err(GraphError::TooLarge(MAX_GRAPH_ELEMENTS));
    }
    let mut vertices = vec![Vertex { id: 0, label: 0 }];
    for (i, &count) in s.values().iter().enumerate() {
        for _ in 0..count {
            vertices.push(Vertex {
                id: vertices.len(),
                label: i + 1,
            });
        }
    }

    let mut edges = Vec::new();
    for row in 0..inst.num_constraints() {
        let (mut positive, mut negative) = (0u128, 0u128);
        for label in 0..=n {
            let c = inst.label_coeff(row, label);
            let count = if label == 0 {
                1
            } else {
                s.values()[label - 1] as u128
            };
            let stubs = c.unsigned_abs() as u128 * count;
            if c > 0 {
                positive += stubs;
            } else {
                negative += stubs;
            }
        }
        if positive != negative {
            return Err(GraphError::NotASolution {
                constraint: row + 1,
                positive,
                negative,
            });
        }
        if edges.len() as u128 + positive + total > MAX_GRAPH_ELEMENTS {
            return Err(GraphError::TooLarge(MAX_GRAPH_ELEMENTS));
        }
        let stubs = |want: Sign| {
            vertices
                .iter()
                .filter(move |v| {
                    let c = inst.label_coeff(row, v.label);
                    c != 0 && Sign::of(c) == want
                })
                .flat_map(move |v| {
                    std::iter::repeat_n(
                        v.id,
                        inst.label_coeff(row, v.label).unsigned_abs() as usize,
                    )
                })
        };
        edges.extend(
            stubs(Sign::Positive)
                .zip(stubs(Sign::Negative))
                .map(|(u, v)| Edge {
                    u,
                    v,
                    label: row + 1,
                }),
        );
    }
    Ok(SolutionGraph::from_parts(n, vertices, edges))
}

/// Checks the four membership conditions and reports the first one violated.
pub fn validate_graph(inst: &IlpInstance, g: &SolutionGraph) -> Result<(), Violation> {
    let n = inst.num_vars();
    let m = inst.num_constraints();
    let fail = |condition: Condition, detail: String| Err(Violation { condition, detail });

    let mut index: HashMap<VertexId, usize> = HashMap::with_capacity(g.vertices.len());
    let mut zero_count = 0;
    for v in &g.vertices {
        if index.insert(v.id, v.label).is_some() {
            return fail(
                Condition::VertexPartition,
                format!("vertex v{} listed twice", v.id),
            );
        }
        if v.label > n {
            return fail(
                Condition::VertexPartition,
                format!("vertex v{} has label {} outside [0,{n}]", v.id, v.label),
            );
        }
        zero_count += usize::from(v.label == 0);
    }
    if zero_count != 1 {
        return fail(
            Condition::VertexPartition,
            format!("{zero_count} vertices carry label 0, expected exactly one"),
        );
    }

    for e in &g.edges {
        if e.label == 0 || e.label > m {
            return fail(
                Condition::EdgePartition,
                format!(
                    "edge v{}--v{} has label {} outside [1,{m}]",
                    e.u, e.v, e.label
                ),
            );
        }
        for w in [e.u, e.v] {
            if !index.contains_key(&w) {
                return fail(
                    Condition::EdgePartition,
                    format!("edge endpoint v{w} is not a vertex"),
                );
            }
        }
    }

    for e in &g.edges {
        let row = e.label - 1;
        let su = vertex_sign(inst, row, index[&e.u]);
        let sv = vertex_sign(inst, row, index[&e.v]);
        if e.u == e.v || su == sv {
            return fail(
                Condition::OppositeSigns,
                format!(
                    "edge v{}--v{} labelled {} joins two {} endpoints",
                    e.u,
                    e.v,
                    e.label,
                    if su == Sign::Positive {
                        "positive"
                    } else {
                        "negative"
                    }
                ),
            );
        }
    }

    let mut degree: HashMap<(VertexId, usize), u64> = HashMap::new();
    for e in &g.edges {
        *degree.entry((e.u, e.label)).or_default() += 1;
        *degree.entry((e.v, e.label)).or_default() += 1;
    }
    for v in &g.vertices {
        for row in 0..m {
            let want = inst.label_coeff(row, v.label).unsigned_abs();
            let got = degree.get(&(v.id, row + 1)).copied().unwrap_or(0);
            if got != want {
                return fail(
                    Condition::Degrees,
                    format!(
                        "vertex v{} (label {}) has {got} edges labelled {}, expected {want}",
                        v.id,
                        v.label,
                        row + 1
                    ),
                );
            }
        }
    }
    Ok(())
}

/// `(|V_1|, ..., |V_n|)`.
pub fn sol_of(g: &SolutionGraph) -> Solution {
    let mut counts = vec![0u64; g.num_vars];
    for v in &g.vertices {
        if (1..=g.num_vars).contains(&v.label) {
            counts[v.label - 1] += 1;
        }
    }
    Solution::new(counts)
}
