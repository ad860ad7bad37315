//! Canonical JSON and CSV emission. Key order and float formatting are
//! fixed so that identical runs give identical bytes.

use std::fmt::Write;

use condmetrics::MetricReport;

use crate::config::PairingMode;

/// Scalar columns of a [`MetricReport`], in emission order.
pub const SCALAR_COLUMNS: [&str; 9] = [
    "is", "bcis", "wcis", "fid", "bcfid", "wcfid", "cfid_sum", "accuracy", "dims_used",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub mode: PairingMode,
    pub mapping: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: MetricReport,
    pub pairing: Option<Pairing>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

/// 17 significant digits; `null` for non-finite values.
pub fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

fn opt_number(v: Option<f64>) -> String {
    v.map_or_else(|| "null".into(), number)
}

fn array<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    let parts: Vec<String> = items.iter().map(f).collect();
    format!("[{}]", parts.join(", "))
}

fn opt_array(v: &Option<Vec<f64>>) -> String {
    v.as_ref().map_or_else(|| "null".into(), |v| array(v, |x| number(*x)))
}

fn string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialise")
}

/// Writes `{"key": value, ...}` one entry per line.
pub fn object(entries: &[(&str, String)]) -> String {
    let mut out = String::from("{\n");
    for (i, (k, v)) in entries.iter().enumerate() {
        let sep = if i + 1 == entries.len() { "" } else { "," };
        writeln!(out, "  {}: {v}{sep}", string(k)).unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn to_json(out: &RunOutput) -> String {
    let r = &out.report;
    let pairing = out.pairing.as_ref().map_or_else(
        || "null".into(),
        |p| {
            format!(
                "{{\"mode\": {}, \"mapping\": {}}}",
                string(p.mode.as_str()),
                array(&p.mapping, |m| m.to_string())
            )
        },
    );
    object(&[
        ("is", opt_number(r.is)),
        ("bcis", opt_number(r.bcis)),
        ("wcis", opt_number(r.wcis)),
        ("fid", opt_number(r.fid)),
        ("bcfid", opt_number(r.bcfid)),
        ("wcfid", opt_number(r.wcfid)),
        ("cfid_sum", opt_number(r.cfid_sum)),
        ("accuracy", opt_number(r.accuracy)),
        ("per_class_fid", opt_array(&r.per_class_fid)),
        ("per_class_is", opt_array(&r.per_class_is)),
        ("per_class_accuracy", opt_array(&r.per_class_accuracy)),
        ("dims_used", r.dims_used.map_or_else(|| "null".into(), |d| d.to_string())),
        ("pairing", pairing),
        ("seed", out.seed.to_string()),
        ("warnings", array(&out.warnings, |w| string(w))),
    ])
}

/// Scalar values as CSV fields; missing values are empty.
pub fn scalar_fields(r: &MetricReport) -> Vec<String> {
    let f = |v: Option<f64>| v.filter(|x| x.is_finite()).map_or_else(String::new, number);
    vec![
        f(r.is),
        f(r.bcis),
        f(r.wcis),
        f(r.fid),
        f(r.bcfid),
        f(r.wcfid),
        f(r.cfid_sum),
        f(r.accuracy),
        r.dims_used.map_or_else(String::new, |d| d.to_string()),
    ]
}

/// Header plus one row per `(parameter, report)`.
pub fn to_csv(param: &str, rows: &[(String, MetricReport)]) -> String {
    let mut out = String::new();
    out.push_str(param);
    for c in SCALAR_COLUMNS {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (p, r) in rows {
        out.push_str(p);
        for field in scalar_fields(r) {
            out.push(',');
            out.push_str(&field);
        }
        out.push('\n');
    }
    out
}

/// Parses a scalar column back out of [`to_csv`] output.
pub fn csv_column(text: &str, name: &str) -> Option<Vec<Option<f64>>> {
    let mut lines = text.lines();
    let idx = lines.next()?.split(',').position(|h| h == name)?;
    Some(
        lines
            .map(|l| l.split(',').nth(idx).and_then(|v| v.parse().ok()))
            .collect(),
    )
}
