//! CSV and JSON rendering of a [`Report`].
//!
//! Numbers are printed through serde_json in both formats (shortest
//! round-trip form), so the two payloads carry identical digits.

use serde_json::Value;

use crate::config::{to_toml, Format, RunConfig};
use crate::experiments::{Cell, Report};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn number(v: f64) -> String {
    serde_json::to_string(&v).expect("f64 serialises")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) => number(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => csv_field(s),
    }
}

fn json_cell(c: &Cell) -> Value {
    match c {
        Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
        Cell::Int(v) => Value::from(*v),
        Cell::Text(s) => Value::String(s.clone()),
    }
}

pub fn render(config: &RunConfig, report: &Report) -> String {
    match config.format {
        Format::Csv => render_csv(config, report),
        Format::Json => render_json(config, report),
    }
}

pub fn render_csv(config: &RunConfig, report: &Report) -> String {
    let mut out = format!("# smc {VERSION}\n# experiment: {}\n# config:\n", config.experiment);
    for line in to_toml(config).lines() {
        out.push_str(&format!("#   {line}\n").replace("#   \n", "#\n"));
    }
    for (k, v) in &report.summary {
        out.push_str(&format!("# summary: {k} = {}\n", csv_cell(v)));
    }
    out.push_str(&report.columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
    out.push('\n');
    for row in &report.rows {
        out.push_str(&row.iter().map(csv_cell).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// One object; each data row is kept on its own line for diffing.
pub fn render_json(config: &RunConfig, report: &Report) -> String {
    let config_value = serde_json::to_value(config).expect("config serialises");
    let summary: serde_json::Map<String, Value> = report.summary.iter().map(|(k, v)| (k.clone(), json_cell(v))).collect();
    let mut out = String::from("{\n");
    out.push_str(&format!("  \"version\": {},\n", Value::String(VERSION.into())));
    out.push_str(&format!("  \"experiment\": {},\n", Value::String(config.experiment.to_string())));
    out.push_str(&format!("  \"config\": {},\n", config_value));
    out.push_str(&format!("  \"summary\": {},\n", Value::Object(summary)));
    out.push_str(&format!("  \"columns\": {},\n", serde_json::to_string(&report.columns).expect("strings serialise")));
    out.push_str("  \"data\": [");
    for (i, row) in report.rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Num(v) => number(*v),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => Value::String(s.clone()).to_string(),
            })
            .collect();
        out.push_str(if i == 0 { "\n    [" } else { ",\n    [" });
        out.push_str(&cells.join(","));
        out.push(']');
    }
    out.push_str(if report.rows.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
    out
}
