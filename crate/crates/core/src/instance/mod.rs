//! ILP instances in standard form `Ax = b` over non-negative integers.
//!
//! Variables carry labels `1..=n`; label `0` is reserved for the right-hand
//! side vector, which several constructions treat as an extra variable with
//! coefficients `-b_j`. Constraint labels run over `1..=m`. Storage is
//! zero-based; the `*_label` accessors take labels.

mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_constraints, parse_instance, ParseError};

/// Name reserved for the right-hand side symbol.
pub const RESERVED_B: &str = "b";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("instance needs at least one variable")]
    NoVariables,
    #[error("instance needs at least one constraint")]
    NoConstraints,
    #[error("row {row} has {found} coefficients, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("right-hand side has {found} entries, expected {expected}")]
    RhsLength { found: usize, expected: usize },
    #[error("expected {expected} variable names, got {found}")]
    NameCount { found: usize, expected: usize },
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("variable name `{0}` is reserved")]
    ReservedName(String),
    #[error("assignment has length {found}, instance has {expected} variables")]
    LengthMismatch { found: usize, expected: usize },
    #[error("arithmetic overflow while {0}")]
    Overflow(&'static str),
}

/// Relation of a constraint before conversion to standard form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        })
    }
}

/// One linear constraint `Σ coeff·var REL rhs` over named variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(String, i64)>,
    pub relation: Relation,
    pub rhs: i64,
}

/// An ILP instance `Ax = b`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IlpInstance {
    coeffs: Vec<Vec<i64>>,
    rhs: Vec<i64>,
    var_names: Vec<String>,
    user_vars: usize,
}

impl IlpInstance {
    /// Builds an instance from rows of `A`, the vector `b` and variable names.
    pub fn new(
        coeffs: Vec<Vec<i64>>,
        rhs: Vec<i64>,
        var_names: Vec<String>,
    ) -> Result<Self, InstanceError> {
        let user_vars = var_names.len();
        Self::with_slack(coeffs, rhs, var_names, user_vars)
    }

    /// Like [`IlpInstance::new`], but the variables from index `user_vars`
    /// on are slack variables introduced by [`to_standard_form`].
    pub fn with_slack(
        coeffs: Vec<Vec<i64>>,
        rhs: Vec<i64>,
        var_names: Vec<String>,
        user_vars: usize,
    ) -> Result<Self, InstanceError> {
        let m = coeffs.len();
        if m == 0 {
            return Err(InstanceError::NoConstraints);
        }
        let n = coeffs[0].len();
        if n == 0 {
            return Err(InstanceError::NoVariables);
        }
        for (row, r) in coeffs.iter().enumerate() {
            if r.len() != n {
                return Err(InstanceError::RaggedRow {
                    row: row + 1,
                    found: r.len(),
                    expected: n,
                });
            }
        }
        if rhs.len() != m {
            return Err(InstanceError::RhsLength {
                found: rhs.len(),
                expected: m,
            });
        }
        if var_names.len() != n {
            return Err(InstanceError::NameCount {
                found: var_names.len(),
                expected: n,
            });
        }
        if coeffs.iter().flatten().chain(&rhs).any(|&v| v == i64::MIN) {
            return Err(InstanceError::Overflow("negating an entry"));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &var_names {
            if name == RESERVED_B {
                return Err(InstanceError::ReservedName(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                return Err(InstanceError::DuplicateName(name.clone()));
            }
        }
        Ok(Self {
            coeffs,
            rhs,
            var_names,
            user_vars: user_vars.min(n),
        })
    }

    /// Instance with default names `x1..xn`.
    pub fn from_rows(coeffs: Vec<Vec<i64>>, rhs: Vec<i64>) -> Result<Self, InstanceError> {
        let n = coeffs.first().map_or(0, Vec::len);
        let names = (1..=n).map(|i| format!("x{i}")).collect();
        Self::new(coeffs, rhs, names)
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    /// Number of variables that came from the user (not slack).
    pub fn num_user_vars(&self) -> usize {
        self.user_vars
    }

    pub fn is_slack(&self, var: usize) -> bool {
        var >= self.user_vars
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.coeffs
    }

    pub fn rhs(&self) -> &[i64] {
        &self.rhs
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    /// `a_{row, var}` with zero-based indices.
    pub fn coeff(&self, row: usize, var: usize) -> i64 {
        self.coeffs[row][var]
    }

    /// Coefficient of label `label ∈ [0, n]` in constraint `row` (zero-based),
    /// where label 0 stands for the right-hand side with coefficient `-b_row`.
    pub fn label_coeff(&self, row: usize, label: usize) -> i64 {
        if label == 0 {
            -self.rhs[row]
        } else {
            self.coeffs[row][label - 1]
        }
    }

    /// Column `A_i` for the zero-based variable `var`.
    pub fn column(&self, var: usize) -> Vec<i64> {
        self.coeffs.iter().map(|r| r[var]).collect()
    }

    pub fn rhs_is_zero(&self) -> bool {
        self.rhs.iter().all(|&b| b == 0)
    }

    /// Zero-based indices with `a_{row,i} >= 0`.
    pub fn pos(&self, row: usize) -> Vec<usize> {
        (0..self.num_vars())
            .filter(|&i| self.coeffs[row][i] >= 0)
            .collect()
    }

    /// Zero-based indices with `a_{row,i} < 0`.
    pub fn neg(&self, row: usize) -> Vec<usize> {
        (0..self.num_vars())
            .filter(|&i| self.coeffs[row][i] < 0)
            .collect()
    }

    /// `max_i |a_{row,i}|`.
    pub fn max_abs_coeff(&self, row: usize) -> i64 {
        self.coeffs[row]
            .iter()
            .map(|a| a.unsigned_abs())
            .max()
            .unwrap_or(0)
            .try_into()
            .unwrap_or(i64::MAX)
    }

    pub fn nonzeros(&self) -> usize {
        self.coeffs.iter().flatten().filter(|&&a| a != 0).count()
    }

    /// Variable index for a name, zero-based.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|v| v == name)
    }

    /// Residual `As - b`, computed with checked arithmetic.
    pub fn evaluate(&self, assignment: &[u64]) -> Result<Vec<i64>, InstanceError> {
        if assignment.len() != self.num_vars() {
            return Err(InstanceError::LengthMismatch {
                found: assignment.len(),
                expected: self.num_vars(),
            });
        }
        self.coeffs
            .iter()
            .zip(&self.rhs)
            .map(|(row, &b)| {
                let mut acc: i64 = 0;
                for (&a, &s) in row.iter().zip(assignment) {
                    let s = i64::try_from(s).map_err(|_| InstanceError::Overflow("evaluating"))?;
                    acc = a
                        .checked_mul(s)
                        .and_then(|t| acc.checked_add(t))
                        .ok_or(InstanceError::Overflow("evaluating"))?;
                }
                acc.checked_sub(b)
                    .ok_or(InstanceError::Overflow("evaluating"))
            })
            .collect()
    }

    pub fn is_solution(&self, assignment: &[u64]) -> bool {
        matches!(self.evaluate(assignment), Ok(r) if r.iter().all(|&x| x == 0))
    }

    /// Short human summary: sizes and coefficient range.
    pub fn summary(&self) -> InstanceSummary {
        let all = self.coeffs.iter().flatten().copied();
        InstanceSummary {
            num_vars: self.num_vars(),
            num_constraints: self.num_constraints(),
            slack_vars: self.num_vars() - self.user_vars,
            min_coeff: all.clone().min().unwrap_or(0),
            max_coeff: all.max().unwrap_or(0),
            min_rhs: self.rhs.iter().copied().min().unwrap_or(0),
            max_rhs: self.rhs.iter().copied().max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub num_vars: usize,
    pub num_constraints: usize,
    pub slack_vars: usize,
    pub min_coeff: i64,
    pub max_coeff: i64,
    pub min_rhs: i64,
    pub max_rhs: i64,
}

impl fmt::Display for IlpInstance {
    /// Renders the instance in ILP-v1 syntax, one constraint per line. Zero
    /// coefficients are kept so the variable order survives a re-parse.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (row, b) in self.coeffs.iter().zip(&self.rhs) {
            for (k, (a, name)) in row.iter().zip(&self.var_names).enumerate() {
                if k > 0 {
                    f.write_str(" + ")?;
                }
                write!(f, "{a} {name}")?;
            }
            writeln!(f, " = {b}")?;
        }
        Ok(())
    }
}

/// A vector of non-negative integers, one entry per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Solution(pub Vec<u64>);

impl Solution {
    pub fn new(values: Vec<u64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    /// `s_l = max_i s_i`.
    pub fn max_entry(&self) -> u64 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Drops slack coordinates, keeping the user variables of `inst`.
    pub fn project_user(&self, inst: &IlpInstance) -> Solution {
        Solution(self.0[..inst.num_user_vars()].to_vec())
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Converts constraints with `=`, `<=`, `>=` into an instance in standard
/// form. Each `<=` row gains a slack variable with coefficient `+1`, each
/// `>=` row one with `-1`; slack variables follow all user variables.
pub fn to_standard_form(
    constraints: &[Constraint],
    var_order: &[String],
) -> Result<IlpInstance, InstanceError> {
    if constraints.is_empty() {
        return Err(InstanceError::NoConstraints);
    }
    let user_vars = var_order.len();
    let slack_count = constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();
    let mut names: Vec<String> = var_order.to_vec();
    for k in 1..=slack_count {
        names.push(fresh_slack_name(k, &names));
    }
    let n = names.len();
    let mut rows = Vec::with_capacity(constraints.len());
    let mut rhs = Vec::with_capacity(constraints.len());
    let mut next_slack = user_vars;
    for c in constraints {
        let mut row = vec![0i64; n];
        for (name, a) in &c.terms {
            let idx = var_order
                .iter()
                .position(|v| v == name)
                .expect("constraint mentions an undeclared variable");
            row[idx] = row[idx]
                .checked_add(*a)
                .ok_or(InstanceError::Overflow("collecting coefficients"))?;
        }
        match c.relation {
            Relation::Eq => {}
            Relation::Le => {
                row[next_slack] = 1;
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -1;
                next_slack += 1;
            }
        }
        rows.push(row);
        rhs.push(c.rhs);
    }
    IlpInstance::with_slack(rows, rhs, names, user_vars)
}

fn fresh_slack_name(k: usize, taken: &[String]) -> String {
    let mut name = format!("_s{k}");
    while taken.contains(&name) {
        name.insert(0, '_');
    }
    name
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> IlpInstance {
        IlpInstance::from_rows(vec![vec![-2, 3, 1], vec![1, -2, 1]], vec![0, 0]).unwrap()
    }

    #[test]
    fn evaluate_example_solution() {
        let inst = example();
        assert_eq!(inst.evaluate(&[5, 3, 1]).unwrap(), vec![0, 0]);
        assert_eq!(inst.evaluate(&[0, 0, 0]).unwrap(), vec![0, 0]);
        assert!(inst.is_solution(&[5, 3, 1]));
    }

    #[test]
    fn evaluate_residual() {
        let inst = IlpInstance::from_rows(vec![vec![2]], vec![1]).unwrap();
        assert_eq!(inst.evaluate(&[1]).unwrap(), vec![1]);
        assert!(!inst.is_solution(&[1]));
    }

    #[test]
    fn evaluate_length_mismatch() {
        assert_eq!(
            example().evaluate(&[1, 2]),
            Err(InstanceError::LengthMismatch {
                found: 2,
                expected: 3
            })
        );
    }

    #[test]
    fn evaluate_overflow_is_an_error() {
        let inst = IlpInstance::from_rows(vec![vec![i64::MAX, 1]], vec![0]).unwrap();
        assert_eq!(
            inst.evaluate(&[1, 1]),
            Err(InstanceError::Overflow("evaluating"))
        );
        assert!(inst.evaluate(&[u64::MAX, 0]).is_err());
    }

    #[test]
    fn slack_rules() {
        let le = Constraint {
            terms: vec![("x1".into(), 1)],
            relation: Relation::Le,
            rhs: 3,
        };
        let inst = to_standard_form(&[le], &["x1".to_string()]).unwrap();
        assert_eq!(inst.rows(), &[vec![1, 1]]);
        assert_eq!(inst.rhs(), &[3]);
        assert!(inst.is_slack(1));
        assert_eq!(inst.num_user_vars(), 1);

        let ge = Constraint {
            terms: vec![("x1".into(), 1)],
            relation: Relation::Ge,
            rhs: 2,
        };
        let inst = to_standard_form(&[ge], &["x1".to_string()]).unwrap();
        assert_eq!(inst.rows(), &[vec![1, -1]]);
        assert_eq!(inst.rhs(), &[2]);
    }

    #[test]
    fn standard_input_is_unchanged() {
        let eq = Constraint {
            terms: vec![("x1".into(), 4), ("x2".into(), -1)],
            relation: Relation::Eq,
            rhs: 0,
        };
        let inst = to_standard_form(&[eq], &["x1".to_string(), "x2".to_string()]).unwrap();
        assert_eq!(inst.rows(), &[vec![4, -1]]);
        assert_eq!(inst.num_vars(), inst.num_user_vars());
    }

    #[test]
    fn slack_names_avoid_user_names() {
        let c = Constraint {
            terms: vec![("_s1".into(), 1)],
            relation: Relation::Le,
            rhs: 1,
        };
        let inst = to_standard_form(&[c], &["_s1".to_string()]).unwrap();
        assert_eq!(inst.var_names(), &["_s1".to_string(), "__s1".to_string()]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(
            IlpInstance::from_rows(vec![], vec![]),
            Err(InstanceError::NoConstraints)
        );
        assert_eq!(
            IlpInstance::from_rows(vec![vec![]], vec![0]),
            Err(InstanceError::NoVariables)
        );
        assert!(matches!(
            IlpInstance::from_rows(vec![vec![1, 2], vec![1]], vec![0, 0]),
            Err(InstanceError::RaggedRow { row: 2, .. })
        ));
        assert!(matches!(
            IlpInstance::new(vec![vec![1]], vec![0], vec!["b".into()]),
            Err(InstanceError::ReservedName(_))
        ));
        assert!(matches!(
            IlpInstance::new(vec![vec![1, 1]], vec![0], vec!["y".into(), "y".into()]),
            Err(InstanceError::DuplicateName(_))
        ));
    }

    #[test]
    fn pos_neg_and_label_coeff() {
        let inst = IlpInstance::from_rows(vec![vec![-2, 0, 1]], vec![4]).unwrap();
        assert_eq!(inst.pos(0), vec![1, 2]);
        assert_eq!(inst.neg(0), vec![0]);
        assert_eq!(inst.label_coeff(0, 0), -4);
        assert_eq!(inst.label_coeff(0, 1), -2);
        assert_eq!(inst.max_abs_coeff(0), 2);
    }
}
