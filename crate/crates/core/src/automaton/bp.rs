//! Bounded-counter Boolean programs (BP-v1).
//!
//! ```text
//! bp 1
//! var r1 in [-12, 12] init 0
//! bit B init 0
//! rule x1: true -> r1 += 2
//! rule b: B == 0 -> r1 += -1, B := 1
//! target: B == 1 && r1 == 0
//! ```
//!
//! A run starts from the initial values and repeatedly fires an enabled rule.
//! A rule is enabled when its guard holds and every updated variable stays in
//! its range. The question is whether a state satisfying the target is
//! reachable.

use std::fmt::{self, Write as _};

use thiserror::Error;

use super::explore::{explore, TransitionSystem};
use super::{residue_bounds, AutomatonError};
use crate::instance::{IlpInstance, RESERVED_B};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct BpParseError {
    pub line: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpVar {
    pub name: String,
    pub low: i64,
    pub high: i64,
    pub init: i64,
    pub is_bit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Update {
    Add(usize, i64),
    Set(usize, i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    /// Conjunction of `var == value` tests; empty means `true`.
    pub guard: Vec<(usize, i64)>,
    pub updates: Vec<Update>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolProgram {
    pub vars: Vec<BpVar>,
    pub rules: Vec<Rule>,
    pub target: Vec<(usize, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reachability {
    /// Rule names along a shortest run to the target.
    Reachable(Vec<String>),
    Unreachable,
    Inconclusive,
}

impl Reachability {
    pub fn is_reachable(&self) -> bool {
        matches!(self, Reachability::Reachable(_))
    }
}

/// The program whose runs are exactly the runs of the ILP automaton.
pub fn emit_boolean_program(inst: &IlpInstance, multiplier: u64) -> Result<String, AutomatonError> {
    let bounds = residue_bounds(inst, multiplier)?;
    let m = inst.num_constraints();
    let mut out = String::from("bp 1\n");
    for (j, b) in bounds.iter().enumerate() {
        let _ = writeln!(out, "var r{} in [-{b}, {b}] init 0", j + 1);
    }
    out.push_str("bit B init 0\n");
    let updates = |coeffs: Vec<i64>| -> String {
        let parts: Vec<String> = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(j, a)| format!("r{} += {a}", j + 1))
            .collect();
        parts.join(", ")
    };
    for (i, name) in inst.var_names().iter().enumerate() {
        let u = updates((0..m).map(|j| inst.coeff(j, i)).collect());
        let u = if u.is_empty() { "skip".to_string() } else { u };
        let _ = writeln!(out, "rule {name}: true -> {u}");
    }
    let u = updates(inst.rhs().iter().map(|&b| -b).collect());
    let sep = if u.is_empty() { "" } else { ", " };
    let _ = writeln!(out, "rule {RESERVED_B}: B == 0 -> {u}{sep}B := 1");
    out.push_str("target: B == 1");
    for j in 1..=m {
        let _ = write!(out, " && r{j} == 0");
    }
    out.push('\n');
    Ok(out)
}

/// Parses and explores `text`.
pub fn interpret_boolean_program(
    text: &str,
    max_states: usize,
) -> Result<Reachability, BpParseError> {
    Ok(BoolProgram::parse(text)?.reachability(max_states))
}

fn err(line: usize, msg: impl Into<String>) -> BpParseError {
    BpParseError {
        line,
        msg: msg.into(),
    }
}

fn int(line: usize, s: &str) -> Result<i64, BpParseError> {
    s.trim()
        .parse()
        .map_err(|_| err(line, format!("expected an integer, found `{}`", s.trim())))
}

fn ident(line: usize, s: &str) -> Result<&str, BpParseError> {
    let s = s.trim();
    let ok = s
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(s)
    } else {
        Err(err(line, format!("bad identifier `{s}`")))
    }
}

impl BoolProgram {
    pub fn parse(text: &str) -> Result<Self, BpParseError> {
        let mut prog = BoolProgram {
            vars: Vec::new(),
            rules: Vec::new(),
            target: Vec::new(),
        };
        let mut header = false;
        let mut target = false;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            if !header {
                if l.split_whitespace().collect::<Vec<_>>() != ["bp", "1"] {
                    return Err(err(line, "expected header `bp 1`"));
                }
                header = true;
                continue;
            }
            if target {
                return Err(err(line, "nothing may follow the target"));
            }
            if let Some(rest) = l.strip_prefix("var ") {
                let (name, rest) = rest
                    .split_once(" in ")
                    .ok_or_else(|| err(line, "expected `var NAME in [LO, HI] init V`"))?;
                let (range, init) = rest
                    .split_once(" init ")
                    .ok_or_else(|| err(line, "missing `init`"))?;
                let range = range
                    .trim()
                    .strip_prefix('[')
                    .and_then(|r| r.strip_suffix(']'))
                    .ok_or_else(|| err(line, "range must be `[LO, HI]`"))?;
                let (lo, hi) = range
                    .split_once(',')
                    .ok_or_else(|| err(line, "range must be `[LO, HI]`"))?;
                let name = prog.fresh(line, name)?;
                prog.push_var(
                    line,
                    name,
                    int(line, lo)?,
                    int(line, hi)?,
                    int(line, init)?,
                    false,
                )?;
            } else if let Some(rest) = l.strip_prefix("bit ") {
                let (name, init) = rest
                    .split_once(" init ")
                    .ok_or_else(|| err(line, "expected `bit NAME init V`"))?;
                let name = prog.fresh(line, name)?;
                prog.push_var(line, name, 0, 1, int(line, init)?, true)?;
            } else if let Some(rest) = l.strip_prefix("rule ") {
                let (name, rest) = rest
                    .split_once(':')
                    .ok_or_else(|| err(line, "expected `rule NAME: GUARD -> UPDATES`"))?;
                let (guard, updates) = rest
                    .split_once("->")
                    .ok_or_else(|| err(line, "missing `->`"))?;
                let rule = Rule {
                    name: ident(line, name)?.to_string(),
                    guard: prog.condition(line, guard)?,
                    updates: prog.updates(line, updates)?,
                };
                prog.rules.push(rule);
            } else if let Some(rest) = l.strip_prefix("target:") {
                prog.target = prog.condition(line, rest)?;
                target = true;
            } else {
                return Err(err(line, format!("unrecognised line `{l}`")));
            }
        }
        if !header {
            return Err(err(1, "empty program"));
        }
        if !target {
            return Err(err(text.lines().count().max(1), "missing target"));
        }
        Ok(prog)
    }

    fn fresh(&self, line: usize, name: &str) -> Result<String, BpParseError> {
        let name = ident(line, name)?;
        if self.vars.iter().any(|v| v.name == name) {
            return Err(err(line, format!("variable `{name}` declared twice")));
        }
        Ok(name.to_string())
    }

    fn push_var(
        &mut self,
        line: usize,
        name: String,
        low: i64,
        high: i64,
        init: i64,
        is_bit: bool,
    ) -> Result<(), BpParseError> {
        if low > high || !(low..=high).contains(&init) {
            return Err(err(
                line,
                format!("`{name}` has an empty range or out-of-range init"),
            ));
        }
        self.vars.push(BpVar {
            name,
            low,
            high,
            init,
            is_bit,
        });
        Ok(())
    }

    fn lookup(&self, line: usize, name: &str) -> Result<usize, BpParseError> {
        let name = ident(line, name)?;
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| err(line, format!("undeclared variable `{name}`")))
    }

    fn condition(&self, line: usize, text: &str) -> Result<Vec<(usize, i64)>, BpParseError> {
        let text = text.trim();
        if text == "true" {
            return Ok(Vec::new());
        }
        text.split("&&")
            .map(|atom| {
                let (name, value) = atom.split_once("==").ok_or_else(|| {
                    err(
                        line,
                        format!("expected `VAR == INT`, found `{}`", atom.trim()),
                    )
                })?;
                Ok((self.lookup(line, name)?, int(line, value)?))
            })
            .collect()
    }

    fn updates(&self, line: usize, text: &str) -> Result<Vec<Update>, BpParseError> {
        let text = text.trim();
        if text == "skip" {
            return Ok(Vec::new());
        }
        text.split(',')
            .map(|u| {
                if let Some((name, value)) = u.split_once("+=") {
                    Ok(Update::Add(self.lookup(line, name)?, int(line, value)?))
                } else if let Some((name, value)) = u.split_once(":=") {
                    Ok(Update::Set(self.lookup(line, name)?, int(line, value)?))
                } else {
                    Err(err(
                        line,
                        format!(
                            "expected `VAR += INT` or `VAR := INT`, found `{}`",
                            u.trim()
                        ),
                    ))
                }
            })
            .collect()
    }

    pub fn reachability(&self, max_states: usize) -> Reachability {
        let sys = BpSystem {
            ranges: self.vars.iter().map(|v| (v.low, v.high)).collect(),
            prog: self,
        };
        let ex = explore(&sys, max_states, true, false);
        match ex.target {
            Some(t) => Reachability::Reachable(
                ex.path_to(t)
                    .into_iter()
                    .map(|a| self.rules[a].name.clone())
                    .collect(),
            ),
            None if ex.truncated => Reachability::Inconclusive,
            None => Reachability::Unreachable,
        }
    }
}

impl fmt::Display for BoolProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cond = |c: &[(usize, i64)]| -> String {
            if c.is_empty() {
                return "true".into();
            }
            c.iter()
                .map(|(v, x)| format!("{} == {x}", self.vars[*v].name))
                .collect::<Vec<_>>()
                .join(" && ")
        };
        writeln!(f, "bp 1")?;
        for v in &self.vars {
            if v.is_bit {
                writeln!(f, "bit {} init {}", v.name, v.init)?;
            } else {
                writeln!(
                    f,
                    "var {} in [{}, {}] init {}",
                    v.name, v.low, v.high, v.init
                )?;
            }
        }
        for r in &self.rules {
            let ups = if r.updates.is_empty() {
                "skip".to_string()
            } else {
                r.updates
                    .iter()
                    .map(|u| match *u {
                        Update::Add(v, x) => format!("{} += {x}", self.vars[v].name),
                        Update::Set(v, x) => format!("{} := {x}", self.vars[v].name),
                    })
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            writeln!(f, "rule {}: {} -> {ups}", r.name, cond(&r.guard))?;
        }
        writeln!(f, "target: {}", cond(&self.target))
    }
}

struct BpSystem<'a> {
    prog: &'a BoolProgram,
    ranges: Vec<(i64, i64)>,
}

impl TransitionSystem for BpSystem<'_> {
    fn ranges(&self) -> &[(i64, i64)] {
        &self.ranges
    }

    fn initial(&self) -> Vec<i64> {
        self.prog.vars.iter().map(|v| v.init).collect()
    }

    fn num_actions(&self) -> usize {
        self.prog.rules.len()
    }

    fn apply(&self, state: &[i64], action: usize, out: &mut [i64]) -> bool {
        let rule = &self.prog.rules[action];
        if rule.guard.iter().any(|&(v, x)| state[v] != x) {
            return false;
        }
        out.copy_from_slice(state);
        for u in &rule.updates {
            let (v, value) = match *u {
                Update::Add(v, x) => match out[v].checked_add(x) {
                    Some(value) => (v, value),
                    None => return false,
                },
                Update::Set(v, x) => (v, x),
            };
            let (lo, hi) = self.ranges[v];
            if value < lo || value > hi {
                return false;
            }
            out[v] = value;
        }
        true
    }

    fn is_target(&self, state: &[i64]) -> bool {
        self.prog.target.iter().all(|&(v, x)| state[v] == x)
    }
}
