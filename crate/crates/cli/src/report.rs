//! Row serialization shared by every subcommand.

use cmtori::torus::{Estimate, GlobalIndex, Rational};
use cmtori::ClassNumberReport;
use serde_json::{json, Map, Value};

pub type Row = Map<String, Value>;

/// Field order for reports; CSV columns follow it.
pub const REPORT_FIELDS: [&str; 16] = [
    "spec",
    "h_T",
    "h_T1",
    "tamagawa",
    "h_K",
    "h_Kplus",
    "Q",
    "t",
    "r",
    "s",
    "S",
    "e_local",
    "e_exponent_total",
    "global_index",
    "route_agreement",
    "mu_order",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Integers stay integers; other values are dyadic and convert exactly.
pub fn rational(x: Rational) -> Value {
    if x.is_integer() {
        json!(x.to_integer())
    } else {
        json!(*x.numer() as f64 / *x.denom() as f64)
    }
}

pub fn estimate(e: &Estimate) -> Value {
    match e {
        Estimate::Exact(x) => rational(*x),
        Estimate::Interval(lo, hi) => json!([rational(*lo), rational(*hi)]),
    }
}

pub fn report_row(rep: &ClassNumberReport) -> Row {
    let e_local: Map<String, Value> = rep
        .local
        .entries
        .iter()
        .map(|(p, e)| (p.to_string(), json!(e.e_value)))
        .collect();
    let global_index = match rep.global_index {
        GlobalIndex::Exact(n) => json!(n),
        // the index is some divisor of the bound
        GlobalIndex::Divides(b) => json!([1, b]),
    };
    let mut row = Row::new();
    row.insert("spec".into(), json!(rep.spec.to_string()));
    row.insert("h_T".into(), estimate(&rep.h_t));
    row.insert("h_T1".into(), rational(rep.h_t1));
    row.insert("tamagawa".into(), estimate(&rep.tamagawa));
    row.insert("h_K".into(), json!(rep.h_k));
    row.insert("h_Kplus".into(), json!(rep.h_kplus));
    row.insert("Q".into(), json!(rep.q));
    row.insert("t".into(), json!(rep.profile.t));
    row.insert("r".into(), json!(rep.profile.r));
    row.insert("s".into(), json!(rep.profile.s));
    row.insert("S".into(), json!(rep.profile.primes));
    row.insert("e_local".into(), Value::Object(e_local));
    row.insert("e_exponent_total".into(), json!(rep.local.total_exponent));
    row.insert("global_index".into(), global_index);
    row.insert("route_agreement".into(), json!(rep.route_agreement));
    row.insert("mu_order".into(), json!(rep.mu_order));
    row
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render_json(rows: &[Row]) -> String {
    let doc = json!({ "schema": 1, "rows": rows });
    let mut out = serde_json::to_string_pretty(&doc).expect("json values serialize");
    out.push('\n');
    out
}

fn render_csv(fields: &[&str], rows: &[Row]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(fields).expect("in-memory write");
    for row in rows {
        let record: Vec<String> = fields
            .iter()
            .map(|f| row.get(*f).map(cell).unwrap_or_default())
            .collect();
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to vec")).expect("utf-8 cells")
}

fn render_text(fields: &[&str], rows: &[Row]) -> String {
    let width = fields.iter().map(|f| f.len()).max().unwrap_or(0);
    let blocks: Vec<String> = rows
        .iter()
        .map(|row| {
            fields
                .iter()
                .filter_map(|f| row.get(*f).map(|v| (f, v)))
                .map(|(f, v)| {
                    let shown = if v.is_null() { "unknown".to_string() } else { cell(v) };
                    format!("{f:<width$}  {shown}\n")
                })
                .collect()
        })
        .collect();
    blocks.join("\n")
}

pub fn render(format: Format, fields: &[&str], rows: &[Row]) -> String {
    match format {
        Format::Json => render_json(rows),
        Format::Csv => render_csv(fields, rows),
        Format::Text => render_text(fields, rows),
    }
}
