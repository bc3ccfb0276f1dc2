//! Machine-readable run reports.
//!
//! Reports are schema-versioned and deterministic: identical configuration
//! produces byte-identical output. Wall-clock timings would break that, so
//! they are emitted only when explicitly requested with `--timings`.

use serde::Serialize;
use sobmult::denom::DenominatorResult;
use sobmult::{BoundednessReport, MultiplierVerdict};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct InputEcho {
    pub function: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    pub singularities: Vec<f64>,
    pub depth: usize,
    pub tol: f64,
    pub levels: usize,
}

/// Every numeric result in the report was computed under these.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub quadrature_rel_tol: f64,
    pub max_panels: u32,
    pub probe_ratio_threshold: f64,
    pub endpoint_tol: f64,
    pub majorant_slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub w0: MultiplierVerdict,
    pub full: MultiplierVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelResidual {
    pub x: f64,
    pub family: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelSection {
    pub points: Vec<f64>,
    pub residuals: Vec<KernelResidual>,
    pub max_symmetry_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_ms: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classify_ms: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator_ms: Option<u128>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub input: InputEcho,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundedness: Option<BoundednessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator: Option<DenominatorResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refusal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => {
                let value = serde_json::to_value(self).expect("report serializes");
                let mut rows = Vec::new();
                flatten("", &value, &mut rows);
                let mut out = String::from("key,value\r\n");
                for (k, v) in rows {
                    out.push_str(&format!("{},{}\r\n", csv_escape(&k), csv_escape(&v)));
                }
                out
            }
        }
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_owned()
    }
}

/// Depth-first flattening with dotted keys; serde_json maps iterate in
/// sorted key order, so the row order is deterministic.
fn flatten(prefix: &str, value: &serde_json::Value, rows: &mut Vec<(String, String)>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, rows);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        serde_json::Value::Null => rows.push((prefix.to_owned(), String::new())),
        serde_json::Value::Bool(b) => rows.push((prefix.to_owned(), b.to_string())),
        serde_json::Value::Number(n) => rows.push((prefix.to_owned(), n.to_string())),
        serde_json::Value::String(s) => rows.push((prefix.to_owned(), s.clone())),
    }
}
