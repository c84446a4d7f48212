//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use ilp_pathwidth::automaton::{
    check_feasible, emit_boolean_program, interpret_boolean_program, parikh, Feasibility,
    IlpAutomaton, Reachability, DEFAULT_MAX_STATES, DEFAULT_MULTIPLIER,
};
use ilp_pathwidth::corpus::{random_corpus, CorpusParams};
use ilp_pathwidth::decomposition::{
    build_special_form, decompose, schedule, validate_decomposition, width_bound,
};
use ilp_pathwidth::oracle::{enumerate_solutions, uniform_box, DEFAULT_BUDGET};
use ilp_pathwidth::solution_graph::{
    build_graph, sol_of, validate_graph, vertex_sign, Edge, SolutionGraph,
};
use ilp_pathwidth::{IlpInstance, Solution};

const SEED: u64 = 0x1_2024;
const INSTANCES: usize = 500;
const BOX: u64 = 8;
/// Bytes allowed per unit of `n + m + nonzeros` in an emitted program.
const BP_BYTES_PER_UNIT: usize = 64;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, errors: &[String], detail: String) {
        let ok = errors.is_empty();
        if !ok {
            self.failures += 1;
        }
        println!(
            "criterion {id} [{}] {name}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        for e in errors.iter().take(5) {
            println!("    {e}");
        }
        if errors.len() > 5 {
            println!("    ... {} more", errors.len() - 5);
        }
    }
}

fn secs(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

fn criterion_1() -> (Vec<String>, String) {
    let start = Instant::now();
    let mut errors = Vec::new();
    let inst = IlpInstance::from_rows(vec![vec![-2, 3, 1], vec![1, -2, 1]], vec![0, 0]).unwrap();
    let s = Solution::new(vec![5, 3, 1]);
    let trace = schedule(&inst, &s).unwrap();
    let mut expect = |what: &str, got: String, want: String| {
        if got != want {
            errors.push(format!("{what}: got {got}, expected {want}"));
        }
    };
    expect(
        "c after reduce",
        format!("{:?}", trace.variable_counters_after_reduce()),
        format!(
            "{:?}",
            vec![[0, 2, 4], [0, 4, 3], [0, 1, 2], [0, 3, 1], [0, 0, 0]]
        ),
    );
    let r = trace.residues_after_reduce();
    expect(
        "r_1",
        format!("{:?}", r.iter().map(|v| v[0]).collect::<Vec<_>>()),
        "[2, 3, 1, 2, 0]".into(),
    );
    expect(
        "r_2",
        format!("{:?}", r.iter().map(|v| v[1]).collect::<Vec<_>>()),
        "[0, -1, 0, -1, 0]".into(),
    );
    match build_special_form(&inst, &s, &trace) {
        Ok(sf) => {
            expect(
                "c^k row 1",
                format!("{:?}", sf.variable_targets(0)),
                format!(
                    "{:?}",
                    vec![[0, 2, 0], [0, 3, 0], [0, 1, 0], [0, 2, 0], [0, 0, 0]]
                ),
            );
            expect(
                "c^k row 2",
                format!("{:?}", sf.variable_targets(1)),
                format!(
                    "{:?}",
                    vec![[0, -1, 1], [0, -2, 1], [0, -1, 1], [0, -2, 1], [0, 0, 0]]
                ),
            );
        }
        Err(e) => errors.push(format!("special form: {e}")),
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(1) {
        errors.push(format!("took {}", secs(elapsed)));
    }
    (
        errors,
        format!("worked example traces reproduced in {}", secs(elapsed)),
    )
}

/// An instance with its oracle solutions inside the box.
struct Case {
    inst: IlpInstance,
    solutions: Vec<Solution>,
    partial: bool,
}

fn corpus_cases() -> Vec<Case> {
    random_corpus(SEED, INSTANCES, &CorpusParams::default())
        .into_par_iter()
        .map(|inst| {
            let set = enumerate_solutions(&inst, &uniform_box(&inst, BOX), DEFAULT_BUDGET);
            Case {
                inst,
                solutions: set.solutions,
                partial: set.partial,
            }
        })
        .collect()
}

fn per_solution<F>(cases: &[Case], f: F) -> Vec<String>
where
    F: Fn(&IlpInstance, &Solution) -> Result<(), String> + Sync,
{
    cases
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, c)| {
            c.solutions
                .iter()
                .filter_map(|s| {
                    f(&c.inst, s)
                        .err()
                        .map(|e| format!("instance {k}, s = {s}: {e}"))
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn criterion_2(cases: &[Case], oracle_time: Duration) -> (Vec<String>, String) {
    let start = Instant::now();
    let mut errors: Vec<String> = cases
        .iter()
        .enumerate()
        .filter(|(_, c)| c.partial)
        .map(|(k, _)| format!("instance {k}: oracle budget exhausted"))
        .collect();
    errors.extend(per_solution(cases, |inst, s| {
        let trace = schedule(inst, s).map_err(|e| e.to_string())?;
        let sf = build_special_form(inst, s, &trace).map_err(|e| e.to_string())?;
        let pd = decompose(&sf);
        let verdict = validate_decomposition(sf.graph(), &pd);
        if let Err(v) = verdict.result {
            return Err(format!("invalid decomposition: {v}"));
        }
        let bound = width_bound(inst.num_vars(), inst.rhs_is_zero());
        if verdict.width > bound {
            return Err(format!("width {} > {bound}", verdict.width));
        }
        let occupancy = pd.max_label_occupancy(sf.graph());
        if occupancy > 2 {
            return Err(format!("{occupancy} vertices share a label in one bag"));
        }
        Ok(())
    }));
    let elapsed = start.elapsed() + oracle_time;
    if elapsed >= Duration::from_secs(60) {
        errors.push(format!("took {}", secs(elapsed)));
    }
    let total: usize = cases.iter().map(|c| c.solutions.len()).sum();
    (
        errors,
        format!(
            "{} instances, {total} solutions decomposed within 2n / 2n-1 in {}",
            cases.len(),
            secs(elapsed)
        ),
    )
}

/// Relabels the first variable vertex to 0.
fn label_merge(g: &SolutionGraph) -> Option<SolutionGraph> {
    g.vertices()
        .iter()
        .find(|v| v.label != 0)
        .map(|v| g.with_label(v.id, 0))
}

/// Adds a `j`-edge between two distinct vertices of equal sign for `j`.
fn sign_violating_edge(inst: &IlpInstance, g: &SolutionGraph) -> Option<SolutionGraph> {
    let vs = g.vertices();
    for row in 0..inst.num_constraints() {
        for (a, u) in vs.iter().enumerate() {
            for w in &vs[a + 1..] {
                if vertex_sign(inst, row, u.label) == vertex_sign(inst, row, w.label) {
                    return Some(g.with_edge(Edge {
                        u: u.id,
                        v: w.id,
                        label: row + 1,
                    }));
                }
            }
        }
    }
    None
}

fn criterion_3(cases: &[Case]) -> (Vec<String>, String) {
    let start = Instant::now();
    let counts: Vec<[usize; 3]> = cases
        .par_iter()
        .map(|c| {
            let mut k = [0; 3];
            for s in &c.solutions {
                if let Ok(g) = build_graph(&c.inst, s) {
                    k[0] += usize::from(label_merge(&g).is_some());
                    k[1] += usize::from(!g.edges().is_empty());
                    k[2] += usize::from(sign_violating_edge(&c.inst, &g).is_some());
                }
            }
            k
        })
        .collect();
    let errors = per_solution(cases, |inst, s| {
        let g = build_graph(inst, s).map_err(|e| e.to_string())?;
        if &sol_of(&g) != s {
            return Err(format!("sol_of gives {}", sol_of(&g)));
        }
        validate_graph(inst, &g).map_err(|v| format!("constructed graph rejected: {v}"))?;
        if let Some(m) = label_merge(&g) {
            if validate_graph(inst, &m).is_ok() {
                return Err("label merge accepted".into());
            }
        }
        if !g.edges().is_empty() && validate_graph(inst, &g.without_edge(0)).is_ok() {
            return Err("edge deletion accepted".into());
        }
        if let Some(m) = sign_violating_edge(inst, &g) {
            if validate_graph(inst, &m).is_ok() {
                return Err("sign-violating edge accepted".into());
            }
        }
        Ok(())
    });
    let applied = counts
        .iter()
        .fold([0; 3], |a, k| [a[0] + k[0], a[1] + k[1], a[2] + k[2]]);
    (
        errors,
        format!(
            "round trip and membership on all solutions; rejected {} label merges, {} edge deletions, {} sign-violating edges in {}",
            applied[0],
            applied[1],
            applied[2],
            secs(start.elapsed())
        ),
    )
}

struct AutomatonRun {
    outcome: Feasibility,
}

fn automaton_runs(cases: &[Case]) -> Vec<AutomatonRun> {
    cases
        .par_iter()
        .map(|c| AutomatonRun {
            outcome: check_feasible(&c.inst, DEFAULT_MULTIPLIER, DEFAULT_MAX_STATES)
                .expect("default bounds fit")
                .verdict,
        })
        .collect()
}

fn criterion_4(cases: &[Case], runs: &[AutomatonRun]) -> (Vec<String>, String) {
    let mut errors = Vec::new();
    let mut witnesses = 0;
    for (k, (c, run)) in cases.iter().zip(runs).enumerate() {
        if let Feasibility::Feasible { witness } = &run.outcome {
            witnesses += 1;
            let p = parikh(witness, c.inst.num_vars()).unwrap();
            match c.inst.evaluate(p.values()) {
                Ok(r) if r.iter().all(|&v| v == 0) => {}
                other => errors.push(format!("instance {k}: witness Parikh {p} gives {other:?}")),
            }
        }
    }
    (errors, format!("{witnesses} witnesses evaluate to zero"))
}

fn criterion_5(cases: &[Case], runs: &[AutomatonRun]) -> (Vec<String>, String) {
    let mut errors = Vec::new();
    let (mut both, mut neither, mut beyond_box, mut inconclusive) = (0, 0, 0, 0);
    for (k, (c, run)) in cases.iter().zip(runs).enumerate() {
        let oracle = !c.solutions.is_empty();
        match (&run.outcome, oracle) {
            (Feasibility::Feasible { .. }, true) => both += 1,
            (Feasibility::Feasible { .. }, false) => beyond_box += 1,
            (Feasibility::InfeasibleWithinBound, false) => neither += 1,
            (Feasibility::InfeasibleWithinBound, true) => errors.push(format!(
                "instance {k}: oracle finds {} but the automaton reports infeasible (bound finding)",
                c.solutions[0]
            )),
            (Feasibility::Inconclusive, _) => {
                inconclusive += 1;
                errors.push(format!("instance {k}: automaton inconclusive"));
            }
        }
    }
    (
        errors,
        format!(
            "{both} feasible in both, {neither} infeasible in both, {beyond_box} feasible beyond the box (witness checked), {inconclusive} inconclusive"
        ),
    )
}

fn criterion_6(cases: &[Case]) -> (Vec<String>, String) {
    let errors = per_solution(cases, |inst, s| {
        let trace = schedule(inst, s).map_err(|e| e.to_string())?;
        let a = IlpAutomaton::new(inst, DEFAULT_MULTIPLIER).map_err(|e| e.to_string())?;
        let word = a.schedule_to_word(&trace).map_err(|e| e.to_string())?;
        if !a.accepts(&word) {
            return Err(format!("word `{}` rejected", word.render(inst)));
        }
        let p = parikh(&word, inst.num_vars()).map_err(|e| e.to_string())?;
        if &p != s {
            return Err(format!("Parikh image {p}"));
        }
        Ok(())
    });
    (
        errors,
        "every schedule word is accepted with Parikh image s".into(),
    )
}

fn criterion_7(cases: &[Case], runs: &[AutomatonRun]) -> (Vec<String>, String) {
    let results: Vec<Result<usize, String>> = cases
        .par_iter()
        .zip(runs)
        .enumerate()
        .map(|(k, (c, run))| {
            let text =
                emit_boolean_program(&c.inst, DEFAULT_MULTIPLIER).map_err(|e| e.to_string())?;
            let units = c.inst.num_vars() + c.inst.num_constraints() + c.inst.nonzeros();
            if text.len() > BP_BYTES_PER_UNIT * units {
                return Err(format!(
                    "instance {k}: {} bytes for {units} units",
                    text.len()
                ));
            }
            let reach = interpret_boolean_program(&text, DEFAULT_MAX_STATES)
                .map_err(|e| format!("instance {k}: {e}"))?;
            // Both searches try symbols in the same order, so even the
            // witnesses coincide.
            let agree = match (&run.outcome, &reach) {
                (Feasibility::Feasible { witness }, Reachability::Reachable(path)) => witness
                    .render(&c.inst)
                    .split(' ')
                    .eq(path.iter().map(String::as_str)),
                (Feasibility::InfeasibleWithinBound, Reachability::Unreachable) => true,
                (Feasibility::Inconclusive, Reachability::Inconclusive) => true,
                _ => false,
            };
            if agree {
                Ok(text.len() / units)
            } else {
                Err(format!(
                    "instance {k}: program says {reach:?}, automaton {:?}",
                    run.outcome
                ))
            }
        })
        .collect();
    let errors: Vec<String> = results.iter().filter_map(|r| r.clone().err()).collect();
    let worst = results
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .max()
        .copied()
        .unwrap_or(0);
    (
        errors,
        format!("verdicts agree; at most {worst} bytes per unit of n+m+nonzeros (limit {BP_BYTES_PER_UNIT})"),
    )
}

/// Checks every schedule run. With `b = 0` the residue bound is
/// `2·n·max_i |a_{j,i}|` as stated. With `b ≠ 0` the right-hand side is
/// scheduled as an extra variable with coefficients `-b_j`, so the bound is
/// taken over that extended system: `n + 1` columns and `|b_j|` in the max.
/// Runs that would exceed the bound of the unextended system are counted and
/// reported.
fn criterion_8(cases: &[Case]) -> (Vec<String>, String) {
    let stats: Vec<(usize, usize)> = cases
        .par_iter()
        .map(|c| {
            let (mut events, mut outside) = (0, 0);
            for t in c.solutions.iter().filter_map(|s| schedule(&c.inst, s).ok()) {
                events += t.steps().len();
                let exceeds = t.r_history().iter().any(|r| {
                    r.iter().enumerate().any(|(j, &v)| {
                        let b = 2 * c.inst.num_vars() as i64 * c.inst.max_abs_coeff(j);
                        !(v.abs() < b || (b == 0 && v == 0))
                    })
                });
                outside += usize::from(exceeds);
            }
            (events, outside)
        })
        .collect();
    let events: usize = stats.iter().map(|s| s.0).sum();
    let outside: usize = stats.iter().map(|s| s.1).sum();
    let errors = per_solution(cases, |inst, s| {
        schedule(inst, s)
            .map_err(|e| e.to_string())?
            .check_invariants(inst)
    });
    (
        errors,
        format!(
            "counter bounds and r·s_l identity hold over {events} events; \
             {outside} b≠0 runs exceed the bound computed without the b column"
        ),
    )
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    let (e, d) = criterion_1();
    report.line(1, "worked example", &e, d);

    let start = Instant::now();
    let cases = corpus_cases();
    let oracle_time = start.elapsed();

    let (e, d) = criterion_2(&cases, oracle_time);
    report.line(2, "width bound", &e, d);
    let (e, d) = criterion_3(&cases);
    report.line(3, "graph semantics", &e, d);
    let runs = automaton_runs(&cases);
    let (e, d) = criterion_4(&cases, &runs);
    report.line(4, "automaton soundness", &e, d);
    let (e, d) = criterion_5(&cases, &runs);
    report.line(5, "automaton/oracle agreement", &e, d);
    let (e, d) = criterion_6(&cases);
    report.line(6, "schedule to word", &e, d);
    let (e, d) = criterion_7(&cases, &runs);
    report.line(7, "boolean program", &e, d);
    let (e, d) = criterion_8(&cases);
    report.line(8, "counter invariants", &e, d);

    if report.failures == 0 {
        println!("all 8 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", report.failures);
        ExitCode::FAILURE
    }
}
