//! Plot-ready output rows and their byte-stable serialization.

use qbattery_core::dynamics::Trajectory;
use qbattery_core::energetics::ergotropy_b;
use serde::Serialize;

use crate::config::OutputFormat;

/// Bumped whenever [`COLUMNS`] changes.
pub const SCHEMA_VERSION: &str = "qbattery-output/1";

pub const COLUMNS: [&str; 22] = [
    "t",
    "g_tau",
    "a_mean_re",
    "a_mean_im",
    "b_mean_re",
    "b_mean_im",
    "na_re",
    "na_im",
    "nb_re",
    "nb_im",
    "ab_dag_re",
    "ab_dag_im",
    "a_sq_re",
    "a_sq_im",
    "b_sq_re",
    "b_sq_im",
    "ab_re",
    "ab_im",
    "e_b_over_omega0",
    "ergotropy_b_over_omega0",
    "e_a_over_omega0",
    "m_value",
];

/// One retained sample in [`COLUMNS`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputRow(pub [f64; COLUMNS.len()]);

impl OutputRow {
    pub fn get(&self, column: &str) -> Option<f64> {
        COLUMNS.iter().position(|c| *c == column).map(|i| self.0[i])
    }

    pub fn t(&self) -> f64 {
        self.0[0]
    }

    pub fn ergotropy(&self) -> f64 {
        self.0[19]
    }
}

/// Rows for every `stride`-th sample plus the final one.
pub fn rows_from_trajectory(traj: &Trajectory, stride: usize) -> qbattery_core::Result<Vec<OutputRow>> {
    let stride = stride.max(1);
    let last = traj.samples.len() - 1;
    let omega0 = traj.params.omega0;
    traj.samples
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == last)
        .map(|(_, sample)| {
            let s = &sample.state;
            let report = ergotropy_b(s, omega0)?;
            let mut v = [0.0; COLUMNS.len()];
            v[0] = sample.t;
            v[1] = traj.params.g * sample.t;
            for (k, m) in s.to_array().iter().enumerate() {
                v[2 + 2 * k] = m.re;
                v[3 + 2 * k] = m.im;
            }
            v[18] = report.e_b / omega0;
            v[19] = report.ergotropy_b / omega0;
            v[20] = report.e_a / omega0;
            v[21] = report.m_value;
            Ok(OutputRow(v))
        })
        .collect()
}

/// 17 significant digits, lowercase scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render(rows: &[OutputRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Json => render_json(rows),
    }
}

fn render_csv(rows: &[OutputRow]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.0.iter().map(|&x| format_float(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonTable<'a> {
    schema_version: &'static str,
    columns: &'a [&'static str],
    rows: Vec<&'a [f64]>,
}

fn render_json(rows: &[OutputRow]) -> String {
    let table = JsonTable {
        schema_version: SCHEMA_VERSION,
        columns: &COLUMNS,
        rows: rows.iter().map(|r| &r.0[..]).collect(),
    };
    let mut out = serde_json::to_string(&table).expect("finite rows serialize");
    out.push('\n');
    out
}

/// Parses a CSV produced by [`render`], checking the header.
pub fn parse_csv(text: &str) -> Result<Vec<OutputRow>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    if header != COLUMNS.join(",") {
        return Err(format!("unexpected header `{header}`"));
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let mut v = [0.0; COLUMNS.len()];
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != COLUMNS.len() {
                return Err(format!("row {n}: {} fields", fields.len()));
            }
            for (slot, f) in v.iter_mut().zip(fields) {
                *slot = f.parse().map_err(|e| format!("row {n}: {e}"))?;
            }
            Ok(OutputRow(v))
        })
        .collect()
}
