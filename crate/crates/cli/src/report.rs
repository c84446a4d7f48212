use std::fmt::{self, Write as _};

use serde::Serialize;
use serde_json::{Map, Value};

use ilp_pathwidth::instance::InstanceSummary;

pub const EXIT_FEASIBLE: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
/// A constructed graph, decomposition or word broke an invariant.
pub const EXIT_BREACH: i32 = 4;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub subcommand: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceSummary>,
    pub results: Map<String, Value>,
    pub timings_ms: Map<String, Value>,
    pub outputs: Vec<String>,
    /// The main output when it is neither printed nor written to a file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifact: Option<String>,
}

impl RunReport {
    pub fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            exit_code: EXIT_FEASIBLE,
            instance: None,
            results: Map::new(),
            timings_ms: Map::new(),
            outputs: Vec::new(),
            artifact: None,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn time(&mut self, phase: &str, ms: f64) {
        let rounded = (ms * 1000.0).round() / 1000.0;
        self.timings_ms.insert(phase.to_string(), rounded.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_value(out: &mut String, key: &str, v: &Value, indent: usize) {
    let pad = " ".repeat(indent);
    match v {
        Value::Array(items)
            if items.iter().any(|i| i.is_array() || i.is_object()) || items.len() > 8 =>
        {
            let _ = writeln!(out, "{pad}{key}:");
            for item in items {
                let _ = writeln!(out, "{pad}  - {}", scalar(item));
            }
        }
        Value::Object(map) => {
            let _ = writeln!(out, "{pad}{key}:");
            for (k, v) in map {
                write_value(out, k, v, indent + 2);
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{key}: {}", scalar(other));
        }
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "subcommand: {}", self.subcommand);
        if let Some(s) = &self.instance {
            let _ = writeln!(
                out,
                "instance: n = {} ({} slack), m = {}, coefficients in [{}, {}], rhs in [{}, {}]",
                s.num_vars,
                s.slack_vars,
                s.num_constraints,
                s.min_coeff,
                s.max_coeff,
                s.min_rhs,
                s.max_rhs
            );
        }
        for (k, v) in &self.results {
            write_value(&mut out, k, v, 0);
        }
        if !self.timings_ms.is_empty() {
            let t: Vec<String> = self
                .timings_ms
                .iter()
                .map(|(k, v)| format!("{k} {} ms", scalar(v)))
                .collect();
            let _ = writeln!(out, "timings: {}", t.join(", "));
        }
        for p in &self.outputs {
            let _ = writeln!(out, "output: {p}");
        }
        if let Some(a) = &self.artifact {
            out.push_str(a);
            if !a.ends_with('\n') {
                out.push('\n');
            }
        }
        let _ = writeln!(out, "exit code: {}", self.exit_code);
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_renderings_carry_the_values() {
        let mut r = RunReport::new("check");
        r.set("verdict", "feasible");
        r.set("states_explored", 12);
        r.set(
            "trace",
            Value::Array(vec![Value::from("a"), Value::from("b")]),
        );
        r.time("search", 1.23456);
        let text = r.to_string();
        assert!(text.contains("verdict: feasible\n"));
        assert!(text.contains("states_explored: 12\n"));
        assert!(text.contains("timings: search 1.235 ms\n"));
        assert!(text.ends_with("exit code: 0\n"));
        let json: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["results"]["verdict"], "feasible");
        assert_eq!(json["results"]["states_explored"], 12);
        assert_eq!(json["timings_ms"]["search"], 1.235);
        assert_eq!(json["exit_code"], 0);
    }
}
