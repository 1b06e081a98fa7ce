//! Side-by-side comparison of results bundles.

use std::collections::BTreeSet;
use std::path::Path;

use gaitbench_core::eval::{read_metrics, MetricsReport};
use gaitbench_core::llm::Confidence;

use crate::args::ReportArgs;
use crate::CliError;

pub const MISSING: &str = "—";
/// Appended to the share of a stratum too small to score.
pub const INSUFFICIENT: &str = "*";

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<(String, Vec<String>)>,
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), num)
}

fn level_name(c: Confidence) -> &'static str {
    match c {
        Confidence::High => "High",
        Confidence::Medium => "Medium",
        Confidence::Low => "Low",
    }
}

fn column_names(paths: &[&Path]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    paths
        .iter()
        .map(|p| {
            let base = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            let mut name = base.clone();
            let mut i = 2;
            while !seen.insert(name.clone()) {
                name = format!("{base}#{i}");
                i += 1;
            }
            name
        })
        .collect()
}

pub fn build_table(runs: &[(String, MetricsReport)]) -> Table {
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    let mut row = |label: &str, f: &dyn Fn(&MetricsReport) -> String| {
        rows.push((label.to_string(), runs.iter().map(|(_, r)| f(r)).collect()));
    };
    row("Classifier", &|r| r.meta.classifier.clone());
    row("Model", &|r| r.meta.model_id.clone().unwrap_or_else(|| MISSING.into()));
    row("Reference", &|r| {
        if r.meta.model_id.is_none() {
            MISSING.into()
        } else if r.meta.grounded {
            "yes".into()
        } else {
            "no".into()
        }
    });
    row("Records", &|r| r.n_records.to_string());
    row("Failed", &|r| r.n_failed.to_string());
    row("Multiclass F1", &|r| opt(r.multiclass.map(|m| m.macro_f1)));
    row("Multiclass MCC", &|r| opt(r.multiclass.map(|m| m.mcc)));
    row("Binary F1", &|r| num(r.binary.macro_f1));
    row("Binary MCC", &|r| num(r.binary.mcc));
    for (i, level) in Confidence::ALL.iter().enumerate() {
        let name = level_name(*level);
        let stratum = move |r: &MetricsReport| r.confidence.as_ref().and_then(|c| c.get(i).cloned());
        row(&format!("{name} % samples"), &|r| match stratum(r) {
            Some(s) if s.sufficient => s.percent,
            Some(s) => format!("{}{INSUFFICIENT}", s.percent),
            None => MISSING.into(),
        });
        row(&format!("{name} F1"), &|r| opt(stratum(r).and_then(|s| s.macro_f1)));
        row(&format!("{name} MCC"), &|r| opt(stratum(r).and_then(|s| s.mcc)));
    }
    Table {
        headers: runs.iter().map(|(n, _)| n.clone()).collect(),
        rows,
    }
}

fn width(s: &str) -> usize {
    s.chars().count()
}

pub fn render_text(table: &Table) -> String {
    let label_w = table
        .rows
        .iter()
        .map(|(l, _)| width(l))
        .chain([width("Metric")])
        .max()
        .unwrap_or(0);
    let col_w: Vec<usize> = table
        .headers
        .iter()
        .enumerate()
        .map(|(j, h)| {
            table
                .rows
                .iter()
                .map(|(_, c)| width(&c[j]))
                .chain([width(h)])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let pad_left = |s: &str, w: usize| format!("{}{s}", " ".repeat(w - width(s)));
    let mut out = format!("{:<label_w$}", "Metric");
    for (h, w) in table.headers.iter().zip(&col_w) {
        out += "  ";
        out += &pad_left(h, *w);
    }
    out += "\n";
    for (label, cells) in &table.rows {
        out += &format!("{label:<label_w$}");
        for (c, w) in cells.iter().zip(&col_w) {
            out += "  ";
            out += &pad_left(c, *w);
        }
        out += "\n";
    }
    if table
        .rows
        .iter()
        .any(|(_, cells)| cells.iter().any(|c| c.ends_with(INSUFFICIENT)))
    {
        out += &format!("{INSUFFICIENT} stratum below the minimum size; F1 and MCC not reported\n");
    }
    out
}

pub fn write_csv<W: std::io::Write>(table: &Table, w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(std::iter::once("Metric").chain(table.headers.iter().map(String::as_str)))?;
    for (label, cells) in &table.rows {
        wtr.write_record(std::iter::once(label.as_str()).chain(cells.iter().map(String::as_str)))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> Result<String, CliError> {
    let paths: Vec<&Path> = args.bundles.iter().map(|p| p.as_path()).collect();
    let names = column_names(&paths);
    let runs = names
        .into_iter()
        .zip(&paths)
        .map(|(n, p)| {
            read_metrics(p)
                .map(|r| (n, r))
                .map_err(|e| CliError::Runtime(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let table = build_table(&runs);
    if let Some(csv_path) = &args.csv {
        let f = std::fs::File::create(csv_path)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", csv_path.display())))?;
        write_csv(&table, std::io::BufWriter::new(f))
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", csv_path.display())))?;
    }
    Ok(render_text(&table))
}
