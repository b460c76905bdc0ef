//! CSV emission.
//!
//! `metrics.csv` carries 6 significant digits for readability; terminal
//! value dumps use full (round-trip) precision for lossless replication.
//! Non-finite measures are serialized as literal `inf` / `-inf` / `nan`
//! tokens, never as empty cells.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use pisim_core::metrics::MetricsReport;
use pisim_core::retdist::ReturnDistribution;

use crate::harness::Histogram;

/// One `metrics.csv` row: an experiment cell and its report.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub strategy: String,
    pub rebalance: String,
    /// Confidence level in percent (e.g. 95).
    pub cl_percent: f64,
    pub report: MetricsReport,
}

/// Format with 6 significant digits; `inf`/`nan` stay literal tokens.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-9..=14).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{:.5e}", x)
    }
}

/// Full-precision (shortest round-trip) representation.
pub fn format_full(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

/// Column header derived from the configured thresholds and orders.
pub fn metrics_header(n_thresholds: usize, kappa_orders: &[u32]) -> String {
    let mut cols = vec![
        "strategy".to_string(),
        "rebalance".to_string(),
        "cl".to_string(),
        "mean".to_string(),
        "std".to_string(),
        "sharpe".to_string(),
    ];
    for i in 1..=n_thresholds {
        cols.push(format!("omega_{i}"));
    }
    for &n in kappa_orders {
        for i in 1..=n_thresholds {
            cols.push(format!("kappa{n}_{i}"));
        }
    }
    cols.push("shortfall_prob".to_string());
    cols.push("expected_shortfall".to_string());
    cols.join(",")
}

pub fn write_metrics_csv(
    path: &Path,
    rows: &[MetricsRow],
    n_thresholds: usize,
    kappa_orders: &[u32],
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", metrics_header(n_thresholds, kappa_orders))?;
    for row in rows {
        let r = &row.report;
        let mut cells = vec![
            row.strategy.clone(),
            row.rebalance.clone(),
            format_sig6(row.cl_percent),
            format_sig6(r.mean),
            format_sig6(r.std),
            format_sig6(r.sharpe),
        ];
        for &(_, v) in &r.omega {
            cells.push(format_sig6(v));
        }
        for &(_, v) in &r.kappa {
            cells.push(format_sig6(v));
        }
        cells.push(format_sig6(r.shortfall_prob));
        cells.push(format_sig6(r.expected_shortfall));
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()
}

pub fn write_terminal_values(path: &Path, values: &[f64]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "terminal_value")?;
    for &v in values {
        writeln!(w, "{}", format_full(v))?;
    }
    w.flush()
}

pub fn write_histogram(path: &Path, hist: &Histogram) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "bin_left,bin_right,count")?;
    for (i, &c) in hist.counts.iter().enumerate() {
        let left = hist.edges[i];
        let right = hist.edges[(i + 1).min(hist.edges.len() - 1)];
        writeln!(w, "{},{},{c}", format_full(left), format_full(right))?;
    }
    w.flush()
}

/// `(t, s, pdf, cdf)` rows for every prepared rebalance date.
pub fn write_distributions(
    path: &Path,
    entries: impl Iterator<Item = (f64, impl std::ops::Deref<Target = ReturnDistribution>)>,
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,s,pdf,cdf")?;
    for (t, dist) in entries {
        for (s, pdf, cdf) in dist.rows() {
            writeln!(
                w,
                "{},{},{},{}",
                format_full(t),
                format_full(s),
                format_full(pdf),
                format_full(cdf)
            )?;
        }
    }
    w.flush()
}
