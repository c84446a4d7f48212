use std::fmt::Write as _;

use serde::Serialize;

use super::{AutomatonState, Symbol};
use crate::instance::{IlpInstance, RESERVED_B};

/// The reachable part of an automaton. State 0 is the initial state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExplicitAutomaton {
    pub states: Vec<AutomatonState>,
    pub transitions: Vec<(usize, Symbol, usize)>,
    pub finals: Vec<usize>,
}

fn symbol_name(inst: &IlpInstance, sym: Symbol) -> &str {
    match sym {
        Symbol::Var(i) => &inst.var_names()[i],
        Symbol::B => RESERVED_B,
    }
}

impl ExplicitAutomaton {
    pub fn has_final(&self) -> bool {
        !self.finals.is_empty()
    }

    pub fn to_dot(&self, inst: &IlpInstance) -> String {
        let mut out = String::from("digraph automaton {\n  rankdir=LR;\n");
        for (k, s) in self.states.iter().enumerate() {
            let shape = if self.finals.contains(&k) {
                "doublecircle"
            } else {
                "circle"
            };
            let _ = write!(out, "  q{k} [label=\"{s}\", shape={shape}");
            if k == 0 {
                out.push_str(", initial=true");
            }
            out.push_str("];\n");
        }
        for &(from, sym, to) in &self.transitions {
            let _ = writeln!(
                out,
                "  q{from} -> q{to} [label=\"{}\"];",
                symbol_name(inst, sym)
            );
        }
        out.push_str("}\n");
        out
    }

    /// `states N`, `initial 0`, `final k ...`, then one `from symbol to` line
    /// per transition.
    pub fn to_adjacency(&self, inst: &IlpInstance) -> String {
        let mut out = format!("states {}\ninitial 0\nfinal", self.states.len());
        for f in &self.finals {
            let _ = write!(out, " {f}");
        }
        out.push('\n');
        for (k, s) in self.states.iter().enumerate() {
            let _ = writeln!(out, "state {k} {s}");
        }
        for &(from, sym, to) in &self.transitions {
            let _ = writeln!(out, "{from} {} {to}", symbol_name(inst, sym));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::{export_automaton, AutomatonError};
    use crate::instance::IlpInstance;

    #[test]
    fn pair_cycle() {
        let inst = IlpInstance::from_rows(vec![vec![1, -1]], vec![0]).unwrap();
        let a = export_automaton(&inst, 2, 1000).unwrap();
        // bound 2·3·1 = 6: residues -6..=6 with and without B
        assert_eq!(a.states.len(), 26);
        assert_eq!(a.finals.len(), 1);
        let text = a.to_adjacency(&inst);
        assert!(text.starts_with("states 26\ninitial 0\nfinal "));
        assert!(text.contains("state 1 (0,(1))"));
        assert!(text.contains("state 2 (0,(-1))"));
        assert!(text.contains("\n0 x1 1\n"));
        assert!(text.contains("\n1 x2 0\n"));
        let dot = a.to_dot(&inst);
        assert!(dot.contains("q0 [label=\"(0,(0))\", shape=circle, initial=true];"));
        assert!(dot.contains("shape=doublecircle"));
    }

    #[test]
    fn parity_has_no_reachable_final() {
        let inst = IlpInstance::from_rows(vec![vec![2]], vec![1]).unwrap();
        let a = export_automaton(&inst, 2, 1000).unwrap();
        assert!(!a.has_final());
    }

    #[test]
    fn budget() {
        let inst =
            IlpInstance::from_rows(vec![vec![-2, 3, 1], vec![1, -2, 1]], vec![0, 0]).unwrap();
        assert_eq!(
            export_automaton(&inst, 2, 5),
            Err(AutomatonError::TooManyStates(5))
        );
    }
}
