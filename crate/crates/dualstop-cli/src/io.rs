//! File formats: CSV emission at full float precision, tree and custom
//! family descriptions in JSON, and the sweep report serialization.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use dualstop_core::families::CustomColumn;
use dualstop_core::models::{TreeModel, TreeNodeSpec};
use dualstop_core::optimality::SweepReport;
use dualstop_core::randomize::XiLaw;

use crate::error::{CliError, Result};

/// 17 significant digits: enough to reproduce any `f64` exactly on
/// re-parse.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(CliError::Numerical(format!(
                "csv row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{} is empty", path.display())))?
        .split(',')
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(header.len());
        for cell in line.split(',') {
            let value: f64 = cell.parse().map_err(|_| {
                CliError::Config(format!(
                    "{} line {}: '{cell}' is not a number",
                    path.display(),
                    i + 2
                ))
            })?;
            row.push(value);
        }
        if row.len() != header.len() {
            return Err(CliError::Config(format!(
                "{} line {}: {} fields, expected {}",
                path.display(),
                i + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeNodeFile {
    reward: f64,
    #[serde(default)]
    parent: usize,
    #[serde(default = "one")]
    prob: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeFile {
    levels: Vec<Vec<TreeNodeFile>>,
}

/// Load a tree from JSON: `{"levels": [[{"reward": r, "parent": p,
/// "prob": q}, ...], ...]}` with the root level first.
pub fn load_tree(path: &Path) -> Result<TreeModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read tree {}: {e}", path.display())))?;
    let file: TreeFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse tree {}: {e}", path.display())))?;
    let levels: Vec<Vec<TreeNodeSpec>> = file
        .levels
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|n| TreeNodeSpec {
                    reward: n.reward,
                    parent: n.parent,
                    prob: n.prob,
                })
                .collect()
        })
        .collect();
    TreeModel::from_levels(&levels)
        .map_err(|e| CliError::Config(format!("invalid tree {}: {e}", path.display())))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomFile {
    columns: Vec<CustomColumnFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomColumnFile {
    increments: Vec<String>,
}

/// Load custom martingale increment expressions from JSON:
/// `{"columns": [{"increments": ["w1", "w12 * w1"]}, ...]}`.
pub fn load_custom_columns(path: &Path) -> Result<Vec<CustomColumn>> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read family {}: {e}", path.display()))
    })?;
    let file: CustomFile = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!("cannot parse family {}: {e}", path.display()))
    })?;
    if file.columns.is_empty() {
        return Err(CliError::Config(format!(
            "family {} has no columns",
            path.display()
        )));
    }
    Ok(file
        .columns
        .into_iter()
        .map(|c| CustomColumn {
            increments: c.increments,
        })
        .collect())
}

fn law_name(law: XiLaw) -> &'static str {
    match law {
        XiLaw::Uniform => "uniform",
        XiLaw::Texp => "texp",
    }
}

/// Serialize a sweep report; floats go through `serde_json`'s shortest
/// round-trip representation.
pub fn sweep_to_json(report: &SweepReport) -> Value {
    let trials: Vec<Value> = report
        .trials
        .iter()
        .map(|t| {
            json!({
                "tree": t.tree,
                "trial": t.trial,
                "kind": t.kind.name(),
                "s": t.s,
                "segment_ok": t.segment_ok,
                "increment_ok": t.increment_ok,
                "weak_all_brute": t.weak_all_brute,
                "weak0_cond": t.weak0_cond,
                "sure0_cond": t.sure0_cond,
                "weak0_brute": t.weak0_brute,
                "sure0_brute": t.sure0_brute,
                "sure_cond": t.sure_cond,
                "sure_all_brute": t.sure_all_brute,
                "gap": t.gap,
                "variance": t.variance,
            })
        })
        .collect();
    json!({
        "xi_law": law_name(report.xi_law),
        "n_trees": report.n_trees,
        "trials_total": report.trials.len(),
        "interior_exercise_paths": report.interior_exercise_paths,
        "all_agree": report.all_agree(),
        "disagreements": report.disagreements,
        "findings": report.findings,
        "trials": trials,
    })
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("cannot serialize json: {e}")))?;
    fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}
