mod report;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use ilp_pathwidth::automaton::{
    self, emit_boolean_program, parikh, Feasibility, IlpAutomaton, DEFAULT_MAX_STATES,
    DEFAULT_MULTIPLIER,
};
use ilp_pathwidth::corpus::{random_corpus, CorpusParams};
use ilp_pathwidth::decomposition::{
    build_special_form, decompose, schedule, validate_decomposition, width_bound, ScheduleTrace,
    Step,
};
use ilp_pathwidth::oracle::{enumerate_solutions, uniform_box, DEFAULT_BOX, DEFAULT_BUDGET};
use ilp_pathwidth::solution_graph::{build_graph, validate_graph};
use ilp_pathwidth::{parse_instance, IlpInstance, Solution};
use report::{
    RunReport, EXIT_BREACH, EXIT_FEASIBLE, EXIT_INCONCLUSIVE, EXIT_INFEASIBLE, EXIT_USAGE,
};
use verify::{verify_instance, VerifyParams};

const DEFAULT_EXPORT_STATES: usize = 100_000;

/// ILP feasibility through solution graphs, path decompositions and counter
/// automata.
///
/// Exit status: 0 feasible, 1 infeasible, 2 usage or input error,
/// 3 inconclusive (a search budget ran out), 4 a constructed object broke an
/// invariant.
#[derive(Debug, Parser)]
#[command(name = "ilp-pw", version)]
struct Cli {
    /// Print the run report as JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Write the main output (DOT, BP, bags, CSV) to this file.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct AutomatonOpts {
    /// Residue bound multiplier; bound_j = M·(n+1)·max(|a_j|, |b_j|).
    #[arg(long, default_value_t = DEFAULT_MULTIPLIER, value_name = "M")]
    multiplier: u64,
    /// Cap on explored automaton states.
    #[arg(long, value_name = "N")]
    max_states: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
    Adjacency,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BagsFormat {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide feasibility with the automaton and print a shortest witness word.
    Check {
        file: PathBuf,
        #[command(flatten)]
        opts: AutomatonOpts,
    },
    /// Print a solution (slack variables dropped).
    Solve {
        file: PathBuf,
        #[command(flatten)]
        opts: AutomatonOpts,
    },
    /// Print the solution graph of a solution as DOT.
    Graph {
        file: PathBuf,
        /// Values for the user variables (or all variables), e.g. `5,3,1`.
        #[arg(long)]
        solution: String,
    },
    /// Path decomposition of the solution graph, with the schedule trace.
    Decompose {
        file: PathBuf,
        #[arg(long)]
        solution: String,
        #[arg(long, value_enum, default_value_t = BagsFormat::Json)]
        format: BagsFormat,
    },
    /// Explore the reachable automaton; `--export` prints it.
    Automaton {
        file: PathBuf,
        #[arg(long)]
        export: bool,
        #[arg(long, value_enum, default_value_t = ExportFormat::Dot)]
        format: ExportFormat,
        #[command(flatten)]
        opts: AutomatonOpts,
    },
    /// Print the bounded-counter Boolean program (BP-v1).
    EmitBp {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MULTIPLIER, value_name = "M")]
        multiplier: u64,
    },
    /// Enumerate all solutions in [0, K]^n as CSV.
    Oracle {
        file: PathBuf,
        #[arg(long = "box", default_value_t = DEFAULT_BOX, value_name = "K")]
        box_bound: u64,
        /// Cap on enumeration nodes.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Cross-check every module on one file or on random instances.
    Verify {
        #[arg(required_unless_present = "random", conflicts_with = "random")]
        file: Option<PathBuf>,
        #[arg(long = "box", default_value_t = DEFAULT_BOX, value_name = "K")]
        box_bound: u64,
        /// Number of random instances (n ≤ 4, m ≤ 3, |a| ≤ 3, |b| ≤ 5).
        #[arg(long, value_name = "N")]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[command(flatten)]
        opts: AutomatonOpts,
    },
}

struct Failure {
    code: i32,
    msg: String,
}

fn fail(code: i32, msg: impl Into<String>) -> Failure {
    Failure {
        code,
        msg: msg.into(),
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

fn load(path: &Path, report: &mut RunReport) -> Result<IlpInstance, Failure> {
    let start = Instant::now();
    let text = fs::read_to_string(path)
        .map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    let inst =
        parse_instance(&text).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    report.instance = Some(inst.summary());
    report.time("parse", ms(start));
    Ok(inst)
}

/// Reads `5,3,1`, `(5,3,1)` or `5 3 1`. A vector over the user variables
/// only gets its slack values filled in.
fn parse_solution(text: &str, inst: &IlpInstance) -> Result<Solution, Failure> {
    let values = text
        .trim()
        .trim_start_matches('(')
        .trim_end_matches(')')
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u64>()
                .map_err(|_| fail(EXIT_USAGE, format!("`{t}` is not a non-negative integer")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = inst.num_vars();
    let user = inst.num_user_vars();
    let full = if values.len() == n {
        values
    } else if values.len() == user {
        complete_slack(inst, values)?
    } else {
        return Err(fail(
            EXIT_USAGE,
            format!("expected {user} or {n} values, got {}", values.len()),
        ));
    };
    if !inst.is_solution(&full) {
        return Err(fail(
            EXIT_USAGE,
            format!("{} is not a solution", Solution::new(full)),
        ));
    }
    Ok(Solution::new(full))
}

fn complete_slack(inst: &IlpInstance, mut values: Vec<u64>) -> Result<Vec<u64>, Failure> {
    let user = values.len();
    for var in user..inst.num_vars() {
        let row = (0..inst.num_constraints())
            .find(|&j| inst.coeff(j, var) != 0)
            .expect("slack column has one entry");
        let lhs: i128 = (0..user)
            .map(|i| inst.coeff(row, i) as i128 * values[i] as i128)
            .sum();
        let slack = (inst.rhs()[row] as i128 - lhs) * inst.coeff(row, var) as i128;
        let slack = u64::try_from(slack)
            .map_err(|_| fail(EXIT_USAGE, format!("constraint {} is violated", row + 1)))?;
        values.push(slack);
    }
    Ok(values)
}

fn named(inst: &IlpInstance, s: &Solution) -> Value {
    let mut m = Map::new();
    for (name, v) in inst.var_names().iter().zip(s.values()) {
        m.insert(name.clone(), json!(v));
    }
    Value::Object(m)
}

fn search(
    inst: &IlpInstance,
    opts: &AutomatonOpts,
    report: &mut RunReport,
) -> Result<Feasibility, Failure> {
    let start = Instant::now();
    let out = automaton::check_feasible(
        inst,
        opts.multiplier,
        opts.max_states.unwrap_or(DEFAULT_MAX_STATES),
    )
    .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    report.time("search", ms(start));
    report.set("multiplier", opts.multiplier);
    report.set("states_explored", out.states_explored);
    let (verdict, code) = match &out.verdict {
        Feasibility::Feasible { .. } => ("feasible", EXIT_FEASIBLE),
        Feasibility::InfeasibleWithinBound => ("infeasible within bound", EXIT_INFEASIBLE),
        Feasibility::Inconclusive => ("inconclusive", EXIT_INCONCLUSIVE),
    };
    report.set("verdict", verdict);
    report.exit_code = code;
    Ok(out.verdict)
}

fn trace_lines(inst: &IlpInstance, trace: &ScheduleTrace) -> Vec<Value> {
    let fmt_c = |c: &[u64]| Solution::new(c[1..].to_vec()).to_string();
    let fmt_r = |r: &[i64]| {
        let parts: Vec<String> = r.iter().map(i64::to_string).collect();
        format!("({})", parts.join(","))
    };
    trace
        .steps()
        .iter()
        .zip(trace.c_history().iter().zip(trace.r_history()))
        .map(|(step, (c, r))| {
            let what = match step {
                Step::Increase(0) => "increase b".to_string(),
                Step::Increase(i) => format!("increase {}", inst.var_names()[i - 1]),
                Step::Reduce => "reduce".to_string(),
            };
            Value::from(format!("{what}: c = {} r = {}", fmt_c(c), fmt_r(r)))
        })
        .collect()
}

/// Runs one subcommand; returns the report and the main output, if any.
fn run(cli: &Cli) -> Result<(RunReport, Option<String>), Failure> {
    match &cli.command {
        Command::Check { file, opts } => {
            let mut report = RunReport::new("check");
            let inst = load(file, &mut report)?;
            if let Feasibility::Feasible { witness } = search(&inst, opts, &mut report)? {
                let image =
                    parikh(&witness, inst.num_vars()).expect("witness uses instance symbols");
                report.set("witness", witness.render(&inst));
                report.set("witness_length", witness.len());
                report.set("parikh", image.to_string());
                let residual = inst
                    .evaluate(image.values())
                    .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
                report.set("residual", json!(residual));
            }
            Ok((report, None))
        }
        Command::Solve { file, opts } => {
            let mut report = RunReport::new("solve");
            let inst = load(file, &mut report)?;
            if let Feasibility::Feasible { witness } = search(&inst, opts, &mut report)? {
                let image =
                    parikh(&witness, inst.num_vars()).expect("witness uses instance symbols");
                let user = image.project_user(&inst);
                report.set("solution", user.to_string());
                let mut m = Map::new();
                for (name, v) in inst.var_names().iter().zip(user.values()) {
                    m.insert(name.clone(), json!(v));
                }
                report.set("values", Value::Object(m));
            }
            Ok((report, None))
        }
        Command::Graph { file, solution } => {
            let mut report = RunReport::new("graph");
            let inst = load(file, &mut report)?;
            let s = parse_solution(solution, &inst)?;
            let start = Instant::now();
            let g = build_graph(&inst, &s).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            let valid = validate_graph(&inst, &g);
            report.time("build", ms(start));
            report.set("solution", named(&inst, &s));
            report.set("vertices", g.vertices().len());
            report.set("edges", g.edges().len());
            report.set("valid", valid.is_ok());
            if let Err(v) = valid {
                report.set("violation", v.to_string());
                report.exit_code = EXIT_BREACH;
            }
            Ok((report, Some(g.to_dot(&inst))))
        }
        Command::Decompose {
            file,
            solution,
            format,
        } => {
            let mut report = RunReport::new("decompose");
            let inst = load(file, &mut report)?;
            let s = parse_solution(solution, &inst)?;
            let start = Instant::now();
            let trace = schedule(&inst, &s).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            let sf = build_special_form(&inst, &s, &trace)
                .map_err(|e| fail(EXIT_BREACH, e.to_string()))?;
            let pd = decompose(&sf);
            let verdict = validate_decomposition(sf.graph(), &pd);
            report.time("decompose", ms(start));
            report.set("solution", named(&inst, &s));
            report.set("s_l", trace.s_l());
            report.set("bags", pd.bags.len());
            report.set("width", pd.width);
            report.set(
                "width_bound",
                width_bound(inst.num_vars(), inst.rhs_is_zero()),
            );
            report.set("valid", verdict.is_valid());
            if let Err(v) = &verdict.result {
                report.set("violation", v.to_string());
                report.exit_code = EXIT_BREACH;
            }
            report.set("trace", Value::Array(trace_lines(&inst, &trace)));
            let text = match format {
                BagsFormat::Json => pd.to_json() + "\n",
                BagsFormat::Text => pd.to_text(),
            };
            Ok((report, Some(text)))
        }
        Command::Automaton {
            file,
            export,
            format,
            opts,
        } => {
            let mut report = RunReport::new("automaton");
            let inst = load(file, &mut report)?;
            let start = Instant::now();
            let cap = opts.max_states.unwrap_or(DEFAULT_EXPORT_STATES);
            let a = IlpAutomaton::new(&inst, opts.multiplier)
                .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            report.set("multiplier", opts.multiplier);
            report.set("bounds", json!(a.bounds()));
            let explicit = a
                .export(cap)
                .map_err(|e| fail(EXIT_INCONCLUSIVE, e.to_string()))?;
            report.time("explore", ms(start));
            report.set("states", explicit.states.len());
            report.set("transitions", explicit.transitions.len());
            report.set("final_reachable", explicit.has_final());
            report.exit_code = if explicit.has_final() {
                EXIT_FEASIBLE
            } else {
                EXIT_INFEASIBLE
            };
            let text = export.then(|| match format {
                ExportFormat::Dot => explicit.to_dot(&inst),
                ExportFormat::Adjacency => explicit.to_adjacency(&inst),
            });
            Ok((report, text))
        }
        Command::EmitBp { file, multiplier } => {
            let mut report = RunReport::new("emit-bp");
            let inst = load(file, &mut report)?;
            let text = emit_boolean_program(&inst, *multiplier)
                .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            report.set("multiplier", *multiplier);
            report.set("counters", inst.num_constraints());
            report.set("rules", inst.num_vars() + 1);
            report.set("bytes", text.len());
            Ok((report, Some(text)))
        }
        Command::Oracle {
            file,
            box_bound,
            budget,
        } => {
            let mut report = RunReport::new("oracle");
            let inst = load(file, &mut report)?;
            let start = Instant::now();
            let set = enumerate_solutions(&inst, &uniform_box(&inst, *box_bound), *budget);
            report.time("enumerate", ms(start));
            report.set("box", *box_bound);
            report.set("solutions", set.solutions.len());
            report.set("partial", set.partial);
            report.exit_code = match (set.solutions.first(), set.partial) {
                (Some(first), _) => {
                    report.set("first", first.to_string());
                    EXIT_FEASIBLE
                }
                (None, true) => EXIT_INCONCLUSIVE,
                (None, false) => {
                    report.set("verdict", "infeasible within box");
                    EXIT_INFEASIBLE
                }
            };
            Ok((report, Some(set.to_csv())))
        }
        Command::Verify {
            file,
            box_bound,
            random,
            seed,
            budget,
            opts,
        } => {
            let mut report = RunReport::new("verify");
            let params = VerifyParams {
                box_bound: *box_bound,
                multiplier: opts.multiplier,
                max_states: opts.max_states.unwrap_or(DEFAULT_MAX_STATES),
                budget: *budget,
            };
            report.set("box", *box_bound);
            report.set("multiplier", opts.multiplier);
            let start = Instant::now();
            if let Some(count) = random {
                report.set("seed", *seed);
                let corpus = random_corpus(*seed, *count, &CorpusParams::default());
                let (mut breaches, mut solutions, mut feasible) = (Vec::new(), 0, 0);
                for (k, inst) in corpus.iter().enumerate() {
                    let out = verify_instance(inst, &params);
                    solutions += out.oracle_solutions;
                    feasible += usize::from(out.automaton == "feasible");
                    breaches.extend(
                        out.breaches
                            .iter()
                            .map(|b| Value::from(format!("instance {k}: {b}"))),
                    );
                }
                report.set("instances", corpus.len());
                report.set("automaton_feasible", feasible);
                report.set("oracle_solutions", solutions);
                report.set("breach_count", breaches.len());
                report.exit_code = if breaches.is_empty() {
                    EXIT_FEASIBLE
                } else {
                    EXIT_BREACH
                };
                report.set("breaches", Value::Array(breaches));
            } else {
                let inst = load(file.as_ref().expect("clap requires FILE"), &mut report)?;
                let out = verify_instance(&inst, &params);
                report.exit_code = if !out.breaches.is_empty() {
                    EXIT_BREACH
                } else {
                    match out.automaton.as_str() {
                        "feasible" => EXIT_FEASIBLE,
                        "inconclusive" => EXIT_INCONCLUSIVE,
                        _ => EXIT_INFEASIBLE,
                    }
                };
                let v = serde_json::to_value(&out).expect("outcome serializes");
                if let Value::Object(m) = v {
                    for (k, v) in m {
                        report.results.insert(k, v);
                    }
                }
            }
            report.time("verify", ms(start));
            Ok((report, None))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut report, artifact) = match run(&cli) {
        Ok(r) => r,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            return ExitCode::from(f.code as u8);
        }
    };
    let mut artifact_to_stdout = None;
    if let Some(text) = artifact {
        match &cli.out {
            Some(path) => {
                if let Err(e) = fs::write(path, &text) {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(EXIT_USAGE as u8);
                }
                report.outputs.push(path.display().to_string());
            }
            None if cli.json => report.artifact = Some(text),
            None => artifact_to_stdout = Some(text),
        }
    }
    if cli.json {
        println!("{}", report.to_json());
    } else if let Some(text) = artifact_to_stdout {
        print!("{text}");
        eprint!("{report}");
    } else {
        print!("{report}");
    }
    ExitCode::from(report.exit_code as u8)
}
