use std::fs;
use std::path::Path;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use synergy_core::empirical::{
    counter_matrix_z, ingest_match_log, pair_synergy_matrix_z, CounterMatrix, MatchLog, PairSynergyMatrix,
};
use synergy_core::ElementId;

use crate::config::RunConfig;
use crate::error::{AppError, Result};

/// Everything the service needs to answer draft queries, frozen at build time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSnapshot {
    pub version: u64,
    /// Seconds since the Unix epoch.
    pub built_at: u64,
    /// SHA-256 of the raw match-log bytes.
    pub source_digest: String,
    pub log_digest: String,
    pub config: RunConfig,
    pub records: usize,
    pub rejected: usize,
    pub pool: Vec<ElementId>,
    pub pair_matrix: PairSynergyMatrix,
    pub counter_matrix: CounterMatrix,
    pub log: MatchLog,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `SOURCE_DATE_EPOCH` when set, so builds can be made reproducible.
pub fn build_time() -> Result<u64> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| AppError::Usage(format!("SOURCE_DATE_EPOCH is not an integer: {v:?}"))),
        Err(_) => Ok(SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)),
    }
}

impl AnalysisSnapshot {
    pub fn build(log: MatchLog, rejected: usize, source_digest: String, config: RunConfig, version: u64, built_at: u64) -> Result<Self> {
        let pair_matrix = pair_synergy_matrix_z(&log, config.baseline, config.min_games, config.z)
            .map_err(|e| AppError::input("match log", e))?;
        let counter_matrix =
            counter_matrix_z(&log, config.min_games, config.z).map_err(|e| AppError::input("match log", e))?;
        Ok(AnalysisSnapshot {
            version,
            built_at,
            source_digest,
            log_digest: log.digest(),
            config,
            records: log.len(),
            rejected,
            pool: log.pool().cloned().collect(),
            pair_matrix,
            counter_matrix,
            log,
        })
    }

    /// Ingests a JSONL match log held in memory.
    pub fn from_jsonl(bytes: &[u8], config: RunConfig, version: u64, built_at: u64) -> Result<(Self, Vec<synergy_core::empirical::Rejection>)> {
        let ingested = ingest_match_log(bytes).map_err(|e| AppError::input("match log", e))?;
        let snap = Self::build(
            ingested.log,
            ingested.rejects.len(),
            sha256_hex(bytes),
            config,
            version,
            built_at,
        )?;
        Ok((snap, ingested.rejects))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| AppError::input(path.display(), e))?;
        serde_json::from_slice(&bytes).map_err(|e| AppError::input(path.display(), format!("invalid snapshot: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_vec(self).map_err(|e| AppError::Internal(e.to_string()))?;
        json.push(b'\n');
        fs::write(path, json).map_err(|e| AppError::input(path.display(), e))
    }
}

/// Holds the published snapshot. Readers clone the `Arc` and keep a consistent
/// view for the whole request; publishing swaps the pointer in one step.
#[derive(Debug)]
pub struct SnapshotStore {
    current: RwLock<Arc<AnalysisSnapshot>>,
}

impl SnapshotStore {
    pub fn new(snapshot: AnalysisSnapshot) -> Self {
        SnapshotStore {
            current: RwLock::new(Arc::new(snapshot)),
        }
    }

    pub fn current(&self) -> Arc<AnalysisSnapshot> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Publishes `snapshot`, raising its version above the current one if
    /// needed. Returns the published version.
    pub fn publish(&self, mut snapshot: AnalysisSnapshot) -> u64 {
        let mut slot = self.current.write().unwrap_or_else(|e| e.into_inner());
        snapshot.version = snapshot.version.max(slot.version + 1);
        let version = snapshot.version;
        *slot = Arc::new(snapshot);
        version
    }
}
