//! The cross-check pipeline behind `verify`.

use serde::Serialize;

use ilp_pathwidth::automaton::{
    check_feasible, emit_boolean_program, interpret_boolean_program, parikh, Feasibility,
    IlpAutomaton, Reachability,
};
use ilp_pathwidth::decomposition::{
    build_special_form, decompose, schedule, validate_decomposition, width_bound,
};
use ilp_pathwidth::oracle::{enumerate_solutions, uniform_box};
use ilp_pathwidth::solution_graph::{build_graph, sol_of, validate_graph};
use ilp_pathwidth::{IlpInstance, Solution};

#[derive(Debug, Clone, Copy)]
pub struct VerifyParams {
    pub box_bound: u64,
    pub multiplier: u64,
    pub max_states: usize,
    pub budget: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyOutcome {
    pub oracle_solutions: usize,
    pub oracle_partial: bool,
    pub graphs_checked: usize,
    pub decompositions_checked: usize,
    pub max_width: usize,
    pub words_checked: usize,
    pub automaton: String,
    pub program: String,
    pub breaches: Vec<String>,
}

impl VerifyOutcome {
    pub fn oracle_feasible(&self) -> bool {
        self.oracle_solutions > 0
    }
}

fn check_solution(
    inst: &IlpInstance,
    s: &Solution,
    p: &VerifyParams,
    out: &mut VerifyOutcome,
) -> Result<(), String> {
    let g = build_graph(inst, s).map_err(|e| format!("build_graph: {e}"))?;
    validate_graph(inst, &g).map_err(|v| format!("graph rejected: {v}"))?;
    if &sol_of(&g) != s {
        return Err(format!("graph encodes {}", sol_of(&g)));
    }
    out.graphs_checked += 1;

    let trace = schedule(inst, s).map_err(|e| format!("schedule: {e}"))?;
    trace
        .check_invariants(inst)
        .map_err(|e| format!("schedule: {e}"))?;
    let sf = build_special_form(inst, s, &trace).map_err(|e| format!("special form: {e}"))?;
    sf.check_invariants(inst)
        .map_err(|e| format!("special form: {e}"))?;
    let pd = decompose(&sf);
    let verdict = validate_decomposition(sf.graph(), &pd);
    if let Err(v) = verdict.result {
        return Err(format!("decomposition: {v}"));
    }
    let bound = width_bound(inst.num_vars(), inst.rhs_is_zero());
    if verdict.width > bound {
        return Err(format!("width {} exceeds {bound}", verdict.width));
    }
    if pd.max_label_occupancy(sf.graph()) > 2 {
        return Err("more than two vertices of one label in a bag".into());
    }
    out.max_width = out.max_width.max(verdict.width);
    out.decompositions_checked += 1;

    let a = IlpAutomaton::new(inst, p.multiplier).map_err(|e| e.to_string())?;
    let word = a
        .schedule_to_word(&trace)
        .map_err(|e| format!("schedule word: {e}"))?;
    if !a.accepts(&word) {
        return Err(format!("word `{}` rejected", word.render(inst)));
    }
    let image = parikh(&word, inst.num_vars()).map_err(|e| e.to_string())?;
    if &image != s {
        return Err(format!("word has Parikh image {image}"));
    }
    out.words_checked += 1;
    Ok(())
}

/// Runs every module on `inst` and collects invariant breaches.
pub fn verify_instance(inst: &IlpInstance, p: &VerifyParams) -> VerifyOutcome {
    let mut out = VerifyOutcome::default();
    let set = enumerate_solutions(inst, &uniform_box(inst, p.box_bound), p.budget);
    out.oracle_solutions = set.solutions.len();
    out.oracle_partial = set.partial;
    for s in &set.solutions {
        if let Err(e) = check_solution(inst, s, p, &mut out) {
            out.breaches.push(format!("s = {s}: {e}"));
        }
    }

    let search = match check_feasible(inst, p.multiplier, p.max_states) {
        Ok(r) => r,
        Err(e) => {
            out.breaches.push(format!("automaton: {e}"));
            return out;
        }
    };
    out.automaton = match &search.verdict {
        Feasibility::Feasible { witness } => {
            let image = parikh(witness, inst.num_vars()).expect("witness uses instance symbols");
            if !inst.is_solution(image.values()) {
                out.breaches
                    .push(format!("witness Parikh image {image} is not a solution"));
            }
            "feasible".into()
        }
        Feasibility::InfeasibleWithinBound => {
            if out.oracle_feasible() {
                out.breaches.push(format!(
                    "oracle finds {} but the automaton reports infeasible within its bound",
                    set.solutions[0]
                ));
            }
            "infeasible within bound".into()
        }
        Feasibility::Inconclusive => "inconclusive".into(),
    };

    match emit_boolean_program(inst, p.multiplier)
        .map_err(|e| e.to_string())
        .and_then(|text| interpret_boolean_program(&text, p.max_states).map_err(|e| e.to_string()))
    {
        Ok(reach) => {
            let agree = matches!(
                (&search.verdict, &reach),
                (Feasibility::Feasible { .. }, Reachability::Reachable(_))
                    | (
                        Feasibility::InfeasibleWithinBound,
                        Reachability::Unreachable
                    )
                    | (Feasibility::Inconclusive, Reachability::Inconclusive)
            );
            out.program = match reach {
                Reachability::Reachable(_) => "reachable",
                Reachability::Unreachable => "unreachable",
                Reachability::Inconclusive => "inconclusive",
            }
            .into();
            if !agree {
                out.breaches.push(format!(
                    "program says {}, automaton {}",
                    out.program, out.automaton
                ));
            }
        }
        Err(e) => out.breaches.push(format!("boolean program: {e}")),
    }
    out
}
