//! Aggregates and report files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ScoringError};

use super::matrix::{write_results_csv, RunRecord};
use super::scoring::{
    f1_from_medians, median_table, normalize_medians, F1Table, ReferenceResults, F1_POINTS,
};
use super::wilcoxon::p_value_matrix;

pub const RESULTS_FILE: &str = "results.csv";
pub const AGGREGATES_FILE: &str = "aggregates.json";
pub const REPORT_FILE: &str = "report.md";

/// Everything derived from a set of run records. Infinite values (cells
/// where every run failed) are stored as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Local methods first, then reference competitors.
    pub methods: Vec<String>,
    pub reference_methods: Vec<String>,
    pub instances: Vec<String>,
    pub f1: F1Table,
    pub medians: Vec<Vec<Option<f64>>>,
    pub normalized: Vec<Vec<Option<f64>>>,
    pub mean_normalized: Vec<Option<f64>>,
    /// `[i][j]`: p-value of "method `i` has lower normalized medians than
    /// method `j`" over the instances.
    pub wilcoxon: Vec<Vec<Option<f64>>>,
    pub failed_cells: Vec<(String, String)>,
    pub runs: usize,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Aggregates {
    pub fn index(&self, method: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == method)
    }

    pub fn mean_normalized_of(&self, method: &str) -> Option<f64> {
        self.mean_normalized[self.index(method)?]
    }

    /// p-value of "`a` better than `b`".
    pub fn p_value(&self, a: &str, b: &str) -> Option<f64> {
        self.wilcoxon[self.index(a)?][self.index(b)?]
    }
}

/// Scores `records`, optionally against external reference medians, which
/// then also supply the normalization bounds.
pub fn aggregate(
    records: &[RunRecord],
    reference: Option<&ReferenceResults>,
) -> Result<Aggregates, ScoringError> {
    let local = median_table(records)?;
    let (medians, bounds) = match reference {
        Some(r) => (r.merge_into(&local), Some(r.bounds())),
        None => (local.clone(), None),
    };
    let f1 = f1_from_medians(&medians, &F1_POINTS);
    let normalized = normalize_medians(&medians, bounds.as_ref());
    let mean_normalized = normalized
        .values
        .iter()
        .map(|row| finite(row.iter().sum::<f64>() / row.len() as f64))
        .collect();
    let wilcoxon = p_value_matrix(&normalized.values);
    Ok(Aggregates {
        methods: medians.methods.clone(),
        reference_methods: medians.methods[local.methods.len()..].to_vec(),
        instances: medians.instances.clone(),
        f1,
        medians: medians
            .values
            .iter()
            .map(|r| r.iter().map(|&v| finite(v)).collect())
            .collect(),
        normalized: normalized
            .values
            .iter()
            .map(|r| r.iter().map(|&v| finite(v)).collect())
            .collect(),
        mean_normalized,
        wilcoxon,
        failed_cells: local.failed_cells(),
        runs: records.len(),
    })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) => format!("{x:.digits$}"),
        None => "n/a".into(),
    }
}

/// Markdown report with methods ordered by descending F1 score.
pub fn render_report(agg: &Aggregates) -> String {
    let order = agg.f1.ranking();
    let mut out = String::new();
    let _ = writeln!(out, "# Results\n");
    let _ = writeln!(
        out,
        "{} runs, {} methods, {} instances.\n",
        agg.runs,
        agg.methods.len() - agg.reference_methods.len(),
        agg.instances.len()
    );
    if !agg.reference_methods.is_empty() {
        let _ = writeln!(
            out,
            "Reference competitors: {}.\n",
            agg.reference_methods.join(", ")
        );
    }
    if !agg.failed_cells.is_empty() {
        let _ = writeln!(
            out,
            "> **Warning:** {} cell(s) have no successful run and rank last on their instance:",
            agg.failed_cells.len()
        );
        for (m, i) in &agg.failed_cells {
            let _ = writeln!(out, "> - {m} on {i}");
        }
        out.push('\n');
    }

    let _ = writeln!(out, "## F1 ranking\n");
    let _ = writeln!(out, "| Rank | Method | F1 | Mean normalized median |");
    let _ = writeln!(out, "|---:|---|---:|---:|");
    for (rank, &m) in order.iter().enumerate() {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            rank + 1,
            agg.methods[m],
            agg.f1.totals[m],
            fmt_opt(agg.mean_normalized[m], 4)
        );
    }

    let table = |out: &mut String, title: &str, values: &[Vec<Option<f64>>], digits: usize| {
        let _ = writeln!(out, "\n## {title}\n");
        let _ = writeln!(out, "| Method | {} |", agg.instances.join(" | "));
        let _ = writeln!(out, "|---|{}", "---:|".repeat(agg.instances.len()));
        for &m in &order {
            let cells: Vec<String> = values[m].iter().map(|&v| fmt_opt(v, digits)).collect();
            let _ = writeln!(out, "| {} | {} |", agg.methods[m], cells.join(" | "));
        }
    };
    table(
        &mut out,
        "Normalized median per instance",
        &agg.normalized,
        4,
    );
    table(&mut out, "Median best cost per instance", &agg.medians, 4);
    let points: Vec<Vec<Option<f64>>> = agg
        .f1
        .points
        .iter()
        .map(|r| r.iter().map(|&v| Some(v)).collect())
        .collect();
    table(&mut out, "F1 points per instance", &points, 1);

    let _ = writeln!(out, "\n## Wilcoxon signed-rank p-values\n");
    let _ = writeln!(
        out,
        "One-sided test that the row method has lower normalized medians than the column method.\n"
    );
    let names: Vec<&str> = order.iter().map(|&m| agg.methods[m].as_str()).collect();
    let _ = writeln!(out, "| | {} |", names.join(" | "));
    let _ = writeln!(out, "|---|{}", "---:|".repeat(names.len()));
    for &i in &order {
        let cells: Vec<String> = order
            .iter()
            .map(|&j| match agg.wilcoxon[i][j] {
                None => "-".into(),
                Some(p) if p < 0.05 => format!("**{p:.3}**"),
                Some(p) => format!("{p:.3}"),
            })
            .collect();
        let _ = writeln!(out, "| {} | {} |", agg.methods[i], cells.join(" | "));
    }
    out
}

/// Writes `results.csv`, `aggregates.json` and `report.md` into `dir`.
///
/// All three files are first written under temporary names and renamed
/// only once every write succeeded.
pub fn emit_report(agg: &Aggregates, records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut csv = Vec::new();
    write_results_csv(records, &mut csv)?;
    let json = serde_json::to_string_pretty(agg).map_err(|e| Error::format("aggregates", e))?;
    let files = [
        (RESULTS_FILE, csv),
        (AGGREGATES_FILE, json.into_bytes()),
        (REPORT_FILE, render_report(agg).into_bytes()),
    ];
    let mut staged = Vec::new();
    for (name, bytes) in &files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, bytes) {
            for t in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(Error::io(format!("writing {}", tmp.display()), e));
        }
        staged.push(tmp);
    }
    let mut written = Vec::new();
    for ((name, _), tmp) in files.iter().zip(staged) {
        let target = dir.join(name);
        fs::rename(&tmp, &target)
            .map_err(|e| Error::io(format!("writing {}", target.display()), e))?;
        written.push(target);
    }
    Ok(written)
}

pub fn load_aggregates(path: &Path) -> Result<Aggregates> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e))
}
