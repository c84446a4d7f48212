//! The ILP automaton.
//!
//! The alphabet is one symbol per variable plus a symbol `b`. A state is a
//! bit `B` (has `b` been read) and a residue vector `r`, starting at
//! `(0, 0)`. Reading `x_i` adds the column `A_i` to `r`; reading `b` once
//! subtracts the right-hand side and sets `B`. Residues must stay within
//! `|r_j| ≤ bound_j`. The only accepting state is `(1, 0)`, so the Parikh image
//! of every accepted word solves `Ax = b`, and for a large enough bound every
//! solution is the Parikh image of some accepted word.
//!
//! The automaton is never built up front; [`IlpAutomaton::check_feasible`]
//! explores it on the fly.

pub mod bp;
mod explore;
mod export;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{ScheduleTrace, Step};
use crate::instance::{IlpInstance, Solution, RESERVED_B};
use explore::{explore, TransitionSystem};

pub use bp::{
    emit_boolean_program, interpret_boolean_program, BoolProgram, BpParseError, Reachability,
};
pub use export::ExplicitAutomaton;

pub const DEFAULT_MULTIPLIER: u64 = 2;
pub const DEFAULT_MAX_STATES: usize = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("bound multiplier must be at least 1")]
    ZeroMultiplier,
    #[error("residue bound overflows")]
    BoundOverflow,
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("more than {0} reachable states")]
    TooManyStates(usize),
    #[error("scheduled word is rejected by the automaton (bound too tight?)")]
    WordRejected,
    #[error("trace has {found} labels, instance has {expected} variables")]
    TraceMismatch { found: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    /// Variable with zero-based index.
    Var(usize),
    B,
}

/// A word over `{x_1, ..., x_n, b}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    /// Parses whitespace-separated symbols, using the instance's variable
    /// names and `b`.
    pub fn parse(text: &str, inst: &IlpInstance) -> Result<Self, AutomatonError> {
        text.split_whitespace()
            .map(|tok| {
                if tok == RESERVED_B {
                    Ok(Symbol::B)
                } else {
                    inst.var_index(tok)
                        .map(Symbol::Var)
                        .ok_or_else(|| AutomatonError::UnknownSymbol(tok.to_string()))
                }
            })
            .collect::<Result<_, _>>()
            .map(Word)
    }

    pub fn render(&self, inst: &IlpInstance) -> String {
        self.0
            .iter()
            .map(|s| match s {
                Symbol::Var(i) => inst.var_names()[*i].as_str(),
                Symbol::B => RESERVED_B,
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Occurrence counts of `x_1..x_n` in `word`; `b` is dropped.
pub fn parikh(word: &Word, num_vars: usize) -> Result<Solution, AutomatonError> {
    let mut counts = vec![0u64; num_vars];
    for sym in &word.0 {
        if let Symbol::Var(i) = *sym {
            *counts
                .get_mut(i)
                .ok_or_else(|| AutomatonError::UnknownSymbol(format!("x{}", i + 1)))? += 1;
        }
    }
    Ok(Solution::new(counts))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AutomatonState {
    pub b_used: bool,
    pub residues: Vec<i64>,
}

impl fmt::Display for AutomatonState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},(", u8::from(self.b_used))?;
        for (k, r) in self.residues.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str("))")
    }
}

/// `bound_j = multiplier · (n + 1) · max(max_i |a_{j,i}|, |b_j|)`.
pub fn residue_bounds(inst: &IlpInstance, multiplier: u64) -> Result<Vec<i64>, AutomatonError> {
    if multiplier == 0 {
        return Err(AutomatonError::ZeroMultiplier);
    }
    let scale = (inst.num_vars() as u128 + 1) * multiplier as u128;
    (0..inst.num_constraints())
        .map(|row| {
            let max = (inst.max_abs_coeff(row) as u128).max(inst.rhs()[row].unsigned_abs() as u128);
            scale
                .checked_mul(max)
                .and_then(|b| i64::try_from(b).ok())
                .ok_or(AutomatonError::BoundOverflow)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feasibility {
    /// A shortest accepted word.
    Feasible { witness: Word },
    /// The accepting state is unreachable under the residue bounds.
    InfeasibleWithinBound,
    /// The state budget ran out first.
    Inconclusive,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub verdict: Feasibility,
    pub states_explored: usize,
}

#[derive(Debug, Clone)]
pub struct IlpAutomaton<'a> {
    inst: &'a IlpInstance,
    bounds: Vec<i64>,
    ranges: Vec<(i64, i64)>,
}

impl<'a> IlpAutomaton<'a> {
    pub fn new(inst: &'a IlpInstance, multiplier: u64) -> Result<Self, AutomatonError> {
        let bounds = residue_bounds(inst, multiplier)?;
        let mut ranges = vec![(0, 1)];
        ranges.extend(bounds.iter().map(|&b| (-b, b)));
        Ok(Self {
            inst,
            bounds,
            ranges,
        })
    }

    pub fn instance(&self) -> &IlpInstance {
        self.inst
    }

    pub fn bounds(&self) -> &[i64] {
        &self.bounds
    }

    pub fn initial(&self) -> AutomatonState {
        AutomatonState {
            b_used: false,
            residues: vec![0; self.inst.num_constraints()],
        }
    }

    pub fn is_final(&self, state: &AutomatonState) -> bool {
        state.b_used && state.residues.iter().all(|&r| r == 0)
    }

    /// Successor of `state` on `symbol`, or `None` for the dead state.
    pub fn step(&self, state: &AutomatonState, symbol: Symbol) -> Option<AutomatonState> {
        let delta = |row: usize| match symbol {
            Symbol::Var(i) => self.inst.coeff(row, i),
            Symbol::B => -self.inst.rhs()[row],
        };
        if let Symbol::Var(i) = symbol {
            if i >= self.inst.num_vars() {
                return None;
            }
        }
        if symbol == Symbol::B && state.b_used {
            return None;
        }
        let residues = state
            .residues
            .iter()
            .enumerate()
            .map(|(row, &r)| {
                r.checked_add(delta(row))
                    .filter(|v| v.abs() <= self.bounds[row])
            })
            .collect::<Option<Vec<i64>>>()?;
        Some(AutomatonState {
            b_used: state.b_used || symbol == Symbol::B,
            residues,
        })
    }

    /// Runs `word` from the initial state.
    pub fn run(&self, word: &Word) -> Option<AutomatonState> {
        word.0
            .iter()
            .try_fold(self.initial(), |s, &sym| self.step(&s, sym))
    }

    pub fn accepts(&self, word: &Word) -> bool {
        self.run(word).is_some_and(|s| self.is_final(&s))
    }

    fn symbol_of(&self, action: usize) -> Symbol {
        if action < self.inst.num_vars() {
            Symbol::Var(action)
        } else {
            Symbol::B
        }
    }

    /// Breadth-first search for the accepting state. The witness is the
    /// shortest accepted word; ties go to the word whose symbols come first in
    /// the order `x_1 < ... < x_n < b`.
    pub fn check_feasible(&self, max_states: usize) -> SearchOutcome {
        let ex = explore(self, max_states, true, false);
        let verdict = match ex.target {
            Some(t) => Feasibility::Feasible {
                witness: Word(
                    ex.path_to(t)
                        .into_iter()
                        .map(|a| self.symbol_of(a))
                        .collect(),
                ),
            },
            None if ex.truncated => Feasibility::Inconclusive,
            None => Feasibility::InfeasibleWithinBound,
        };
        SearchOutcome {
            verdict,
            states_explored: ex.len(),
        }
    }

    /// Maps the increase steps of a schedule to variable symbols and places
    /// `b` at the earliest position that keeps the run within bounds.
    pub fn schedule_to_word(&self, trace: &ScheduleTrace) -> Result<Word, AutomatonError> {
        let n = self.inst.num_vars();
        if trace.targets().len() != n + 1 {
            return Err(AutomatonError::TraceMismatch {
                found: trace.targets().len().saturating_sub(1),
                expected: n,
            });
        }
        let vars: Vec<Symbol> = trace
            .steps()
            .iter()
            .filter_map(|s| match s {
                Step::Increase(i) if *i > 0 => Some(Symbol::Var(i - 1)),
                _ => None,
            })
            .collect();
        let m = self.inst.num_constraints();
        let within = |r: &[i128]| {
            r.iter()
                .zip(&self.bounds)
                .all(|(&v, &b)| v.abs() <= b as i128)
        };
        // prefix[k] = residues after the first k variable symbols, before b.
        let mut prefix = vec![vec![0i128; m]];
        for sym in &vars {
            let Symbol::Var(i) = *sym else { unreachable!() };
            let last = prefix.last().unwrap();
            prefix.push(
                (0..m)
                    .map(|row| last[row] + self.inst.coeff(row, i) as i128)
                    .collect(),
            );
        }
        let shifted = |k: usize| -> Vec<i128> {
            (0..m)
                .map(|row| prefix[k][row] - self.inst.rhs()[row] as i128)
                .collect()
        };
        let len = vars.len();
        if shifted(len).iter().any(|&v| v != 0) {
            return Err(AutomatonError::WordRejected);
        }
        let mut suffix_ok = vec![true; len + 2];
        for k in (0..=len).rev() {
            suffix_ok[k] = suffix_ok[k + 1] && within(&shifted(k));
        }
        for p in 0..=len {
            if !within(&prefix[p]) {
                break;
            }
            if suffix_ok[p] {
                let mut word = vars.clone();
                word.insert(p, Symbol::B);
                return Ok(Word(word));
            }
        }
        Err(AutomatonError::WordRejected)
    }

    /// All reachable states with their transitions, or an error when more
    /// than `max_states` are reachable.
    pub fn export(&self, max_states: usize) -> Result<ExplicitAutomaton, AutomatonError> {
        let ex = explore(self, max_states, false, true);
        if ex.truncated {
            return Err(AutomatonError::TooManyStates(max_states));
        }
        let states = (0..ex.len())
            .map(|k| decode(ex.state(k)))
            .collect::<Vec<_>>();
        let finals = (0..ex.len())
            .filter(|&k| self.is_target(ex.state(k)))
            .collect();
        let transitions = ex
            .transitions
            .iter()
            .map(|&(from, a, to)| (from, self.symbol_of(a), to))
            .collect();
        Ok(ExplicitAutomaton {
            states,
            transitions,
            finals,
        })
    }
}

fn decode(state: &[i64]) -> AutomatonState {
    AutomatonState {
        b_used: state[0] == 1,
        residues: state[1..].to_vec(),
    }
}

impl TransitionSystem for IlpAutomaton<'_> {
    fn ranges(&self) -> &[(i64, i64)] {
        &self.ranges
    }

    fn initial(&self) -> Vec<i64> {
        vec![0; self.ranges.len()]
    }

    fn num_actions(&self) -> usize {
        self.inst.num_vars() + 1
    }

    fn apply(&self, state: &[i64], action: usize, out: &mut [i64]) -> bool {
        let n = self.inst.num_vars();
        if action == n {
            if state[0] == 1 {
                return false;
            }
            out[0] = 1;
        } else {
            out[0] = state[0];
        }
        for row in 0..self.bounds.len() {
            let delta = if action == n {
                -self.inst.rhs()[row]
            } else {
                self.inst.coeff(row, action)
            };
            match state[row + 1].checked_add(delta) {
                Some(v) if v.abs() <= self.bounds[row] => out[row + 1] = v,
                _ => return false,
            }
        }
        true
    }

    fn is_target(&self, state: &[i64]) -> bool {
        state[0] == 1 && state[1..].iter().all(|&r| r == 0)
    }
}

/// Feasibility with the given bound multiplier and state budget.
pub fn check_feasible(
    inst: &IlpInstance,
    multiplier: u64,
    max_states: usize,
) -> Result<SearchOutcome, AutomatonError> {
    Ok(IlpAutomaton::new(inst, multiplier)?.check_feasible(max_states))
}

/// Explicit state graph of the reachable part of the automaton.
pub fn export_automaton(
    inst: &IlpInstance,
    multiplier: u64,
    max_states: usize,
) -> Result<ExplicitAutomaton, AutomatonError> {
    IlpAutomaton::new(inst, multiplier)?.export(max_states)
}
