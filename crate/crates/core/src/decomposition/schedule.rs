//! The increase/reduce counter schedule that fixes the block order of the
//! special-form graph.
//!
//! Every scheduled label `i` owns a counter `c_i`. `Increase(i)` adds `s_l`
//! (the largest entry of the solution) and `Reduce` subtracts `s_i` from
//! every counter. A round increases, in ascending label order, each label whose
//! counter is below its target `s_i`, then reduces. After exactly `s_l` rounds
//! each label has been increased `s_i` times and every counter is back to 0.
//!
//! When `b ≠ 0` the right-hand side is scheduled as label 0 with `s_0 = 1`
//! and coefficients `-b_j`, turning the system into a homogeneous one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{IlpInstance, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    Increase(usize),
    Reduce,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("assignment has length {found}, instance has {expected} variables")]
    LengthMismatch { found: usize, expected: usize },
    #[error("assignment {0} is not a solution")]
    NotASolution(Solution),
    #[error("arithmetic overflow while scheduling")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleTrace {
    /// Targets indexed by label; `targets[0]` is 1 iff `b ≠ 0`.
    targets: Vec<u64>,
    s_l: u64,
    steps: Vec<Step>,
    /// Counters `c_0..c_n` after each step.
    c_history: Vec<Vec<u64>>,
    /// Counters `r_1..r_m` after each step.
    r_history: Vec<Vec<i64>>,
}

impl ScheduleTrace {
    pub fn s_l(&self) -> u64 {
        self.s_l
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// `c_0..c_n` after each step (`c_0` stays 0 when `b = 0`).
    pub fn c_history(&self) -> &[Vec<u64>] {
        &self.c_history
    }

    pub fn r_history(&self) -> &[Vec<i64>] {
        &self.r_history
    }

    /// Target count per label (`targets()[0]` is the `b` label).
    pub fn targets(&self) -> &[u64] {
        &self.targets
    }

    /// Whether label 0 takes part in the schedule.
    pub fn includes_b(&self) -> bool {
        self.targets[0] == 1
    }

    /// Number of rounds, i.e. of `Reduce` steps.
    pub fn rounds(&self) -> usize {
        self.steps.iter().filter(|s| **s == Step::Reduce).count()
    }

    /// Labels increased in each round, in order.
    pub fn round_increases(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for step in &self.steps {
            match step {
                Step::Increase(i) => out.last_mut().unwrap().push(*i),
                Step::Reduce => out.push(Vec::new()),
            }
        }
        out.pop();
        out
    }

    fn after_reduce<T: Clone>(&self, hist: &[Vec<T>]) -> Vec<Vec<T>> {
        self.steps
            .iter()
            .zip(hist)
            .filter(|(s, _)| **s == Step::Reduce)
            .map(|(_, h)| h.clone())
            .collect()
    }

    /// Counters `c_0..c_n` after each `Reduce`.
    pub fn counters_after_reduce(&self) -> Vec<Vec<u64>> {
        self.after_reduce(&self.c_history)
    }

    /// Variable counters `c_1..c_n` after each `Reduce`.
    pub fn variable_counters_after_reduce(&self) -> Vec<Vec<u64>> {
        self.counters_after_reduce()
            .into_iter()
            .map(|c| c[1..].to_vec())
            .collect()
    }

    /// `r_1..r_m` after each `Reduce`.
    pub fn residues_after_reduce(&self) -> Vec<Vec<i64>> {
        self.after_reduce(&self.r_history)
    }

    /// Checks the counter discipline at every step:
    /// `0 ≤ c_i < 2·s_l`, `c_i ≤ s_l` right after a `Reduce`,
    /// `r_j·s_l = Σ c_i·a_{j,i}`, `|r_j| < 2·n·max_i|a_{j,i}|`, and that the
    /// run ends with all counters at zero after `s_l` rounds with `s_i`
    /// increases per label.
    ///
    /// When `b ≠ 0` the bound is taken over the extended system: `n + 1`
    /// labels and `max(max_i |a_{j,i}|, |b_j|)`.
    pub fn check_invariants(&self, inst: &IlpInstance) -> Result<(), String> {
        let labels = self.targets.len();
        let s_l = self.s_l as i128;
        let width = if self.includes_b() {
            labels
        } else {
            labels - 1
        } as i128;
        let bounds: Vec<i128> = (0..inst.num_constraints())
            .map(|row| {
                let mut max = inst.max_abs_coeff(row) as i128;
                if self.includes_b() {
                    max = max.max(inst.rhs()[row].unsigned_abs() as i128);
                }
                2 * width * max
            })
            .collect();
        for (k, (step, (c, r))) in self
            .steps
            .iter()
            .zip(self.c_history.iter().zip(&self.r_history))
            .enumerate()
        {
            for (i, &ci) in c.iter().enumerate() {
                if ci as i128 >= 2 * s_l {
                    return Err(format!(
                        "step {k}: c_{i} = {ci} not below 2·s_l = {}",
                        2 * s_l
                    ));
                }
                if *step == Step::Reduce && ci as i128 > s_l {
                    return Err(format!("step {k}: c_{i} = {ci} exceeds s_l after reduce"));
                }
            }
            for (row, &rj) in r.iter().enumerate() {
                let rhs: i128 = c
                    .iter()
                    .enumerate()
                    .map(|(label, &ci)| ci as i128 * inst.label_coeff(row, label) as i128)
                    .sum();
                if rj as i128 * s_l != rhs {
                    return Err(format!(
                        "step {k}: r_{} · s_l = {} but Σ c_i·a = {rhs}",
                        row + 1,
                        rj as i128 * s_l
                    ));
                }
                let bound = bounds[row];
                let within = (rj as i128).abs() < bound || (bound == 0 && rj == 0);
                if !within {
                    return Err(format!(
                        "step {k}: |r_{}| = {} not below {bound}",
                        row + 1,
                        rj.abs()
                    ));
                }
            }
        }
        if self.rounds() as u64 != self.s_l {
            return Err(format!(
                "{} rounds, expected s_l = {}",
                self.rounds(),
                self.s_l
            ));
        }
        for (label, &target) in self.targets.iter().enumerate() {
            let count = self
                .steps
                .iter()
                .filter(|s| **s == Step::Increase(label))
                .count() as u64;
            if count != target {
                return Err(format!(
                    "label {label} increased {count} times, expected {target}"
                ));
            }
        }
        if let (Some(c), Some(r)) = (self.c_history.last(), self.r_history.last()) {
            if c.iter().any(|&v| v != 0) || r.iter().any(|&v| v != 0) {
                return Err("counters not zero at the end".to_string());
            }
        }
        Ok(())
    }
}

/// Runs the increase/reduce schedule for solution `s`. The zero solution of
/// a homogeneous system yields the empty trace.
pub fn schedule(inst: &IlpInstance, s: &Solution) -> Result<ScheduleTrace, ScheduleError> {
    let n = inst.num_vars();
    let m = inst.num_constraints();
    if s.len() != n {
        return Err(ScheduleError::LengthMismatch {
            found: s.len(),
            expected: n,
        });
    }
    if !inst.is_solution(s.values()) {
        return Err(ScheduleError::NotASolution(s.clone()));
    }
    let mut targets = Vec::with_capacity(n + 1);
    targets.push(u64::from(!inst.rhs_is_zero()));
    targets.extend_from_slice(s.values());
    let s_l = targets.iter().copied().max().unwrap_or(0);
    s_l.checked_mul(2).ok_or(ScheduleError::Overflow)?;

    let mut c = vec![0u64; n + 1];
    let mut r = vec![0i64; m];
    let mut steps = Vec::new();
    let mut c_history = Vec::new();
    let mut r_history = Vec::new();
    for _ in 0..s_l {
        for label in 0..=n {
            if c[label] < targets[label] {
                c[label] += s_l;
                for (row, rj) in r.iter_mut().enumerate() {
                    *rj = rj
                        .checked_add(inst.label_coeff(row, label))
                        .ok_or(ScheduleError::Overflow)?;
                }
                steps.push(Step::Increase(label));
                c_history.push(c.clone());
                r_history.push(r.clone());
            }
        }
        for (ci, &si) in c.iter_mut().zip(&targets) {
            *ci -= si;
        }
        steps.push(Step::Reduce);
        c_history.push(c.clone());
        r_history.push(r.clone());
    }
    Ok(ScheduleTrace {
        targets,
        s_l,
        steps,
        c_history,
        r_history,
    })
}
