//! `report.json`, `sweep.csv` and optional field dumps.

use std::path::{Path, PathBuf};

use crate::harness::run::RunArtifact;
use crate::quadrature::nan_max;
use crate::{Error, Result};

/// Column names of `sweep.csv` for `n` curves.
pub fn csv_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["eps", "I_eps", "I_tilde", "J_eps"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=n).map(|i| format!("A_{i}")));
    for i in 1..=n {
        for j in i + 1..=n {
            h.push(format!("B_{i}_{j}"));
        }
    }
    h.extend(
        [
            "residual_BR1",
            "residual_BR2",
            "defect_linearity",
            "talenti_int_gap",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

/// Shortest round-trip representation, so reruns are byte-identical.
fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn csv_rows(artifact: &RunArtifact) -> Vec<Vec<String>> {
    let n = artifact.scenario.curves.len();
    let width = csv_header(n).len();
    let br1 = num(artifact.residuals.max_br1());
    let br2 = num(artifact.residuals.max_br2());
    artifact
        .sweep
        .iter()
        .map(|o| match &o.point {
            Some(p) => {
                let r = &p.report;
                let mut row = vec![num(o.epsilon), num(r.i_eps), num(r.i_tilde), num(r.j_eps)];
                row.extend(r.a.iter().map(|&v| num(v)));
                row.extend(r.b.iter().map(|t| num(t.value)));
                row.push(br1.clone());
                row.push(br2.clone());
                row.push(num(p
                    .linearity
                    .iter()
                    .map(|l| l.max_defect)
                    .fold(0.0, nan_max)));
                row.push(num(r.int_gap.iter().sum()));
                row
            }
            None => {
                let mut row = vec![num(o.epsilon)];
                row.resize(width, "NaN".into());
                row
            }
        })
        .collect()
}

pub fn write_csv(artifact: &RunArtifact, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(csv_header(artifact.scenario.curves.len()))
        .map_err(|e| csv_err(path, e))?;
    for row in csv_rows(artifact) {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

/// Writes `report.json` and `sweep.csv` into `out_dir` (created if missing).
pub fn emit_results(artifact: &RunArtifact, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join("report.json");
    let text = serde_json::to_string_pretty(artifact).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    let csv = dir.join("sweep.csv");
    write_csv(artifact, &csv)?;
    Ok(vec![json, csv])
}
