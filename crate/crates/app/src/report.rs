use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use synergy_core::empirical::{CounterMatrix, PairSynergyMatrix};

use crate::config::RunConfig;
use crate::error::{AppError, Result};

/// A command's output together with the configuration that produced it.
/// Field order is fixed by the struct, and maps inside are sorted, so the JSON
/// is stable across runs.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'static str,
    pub config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_version: Option<u64>,
    pub result: T,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| AppError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `out`, or stdout when absent.
pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| AppError::input(path.display(), e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| AppError::Internal(e.to_string())),
    }
}

fn csv_err(e: csv::Error) -> AppError {
    AppError::Internal(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| AppError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| AppError::Internal(e.to_string()))
}

pub fn pair_matrix_csv(m: &PairSynergyMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "a",
        "b",
        "synergy",
        "set_value",
        "baseline_value",
        "baseline",
        "wins",
        "games",
        "ci_low",
        "ci_high",
        "sufficient",
    ])
    .map_err(csv_err)?;
    for e in &m.entries {
        w.write_record([
            e.a.to_string(),
            e.b.to_string(),
            e.score.synergy.to_string(),
            e.score.set_value.as_real().to_string(),
            e.score.baseline_value.as_real().to_string(),
            m.baseline.to_string(),
            e.joint.wins.to_string(),
            e.joint.games.to_string(),
            e.joint.ci_low.to_string(),
            e.joint.ci_high.to_string(),
            e.sufficient.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn counter_matrix_csv(m: &CounterMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "a",
        "b",
        "score",
        "vs_rate",
        "vs_wins",
        "vs_games",
        "overall_rate",
        "sufficient",
    ])
    .map_err(csv_err)?;
    for e in &m.entries {
        w.write_record([
            e.a.to_string(),
            e.b.to_string(),
            e.score.to_string(),
            e.vs.rate.to_string(),
            e.vs.wins.to_string(),
            e.vs.games.to_string(),
            e.overall.rate.to_string(),
            e.sufficient.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}
