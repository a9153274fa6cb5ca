use serde::{Deserialize, Serialize};
use synergy_core::empirical::{DEFAULT_MIN_GAMES, DEFAULT_Z};
use synergy_core::recommend::Weights;
use synergy_core::search::{OutlierMethod, SearchStrategy};
use synergy_core::tcg::COPY_CAP;
use synergy_core::BaselineKind;

use crate::error::{AppError, Result};

/// Every knob that can change a report. Embedded in each report so a run can
/// be reproduced from its output alone. Worker count is deliberately absent:
/// results do not depend on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub baseline: BaselineKind,
    pub min_games: u64,
    pub z: f64,
    pub outlier: OutlierMethod,
    pub threshold: f64,
    pub seed: u64,
    pub strategy: SearchStrategy,
    pub k: usize,
    pub weights: Weights,
    pub copy_cap: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            baseline: BaselineKind::Mean,
            min_games: DEFAULT_MIN_GAMES,
            z: DEFAULT_Z,
            outlier: OutlierMethod::MadZ,
            threshold: OutlierMethod::MadZ.default_threshold(),
            seed: 0,
            strategy: SearchStrategy::Exhaustive,
            k: 10,
            weights: Weights::default(),
            copy_cap: COPY_CAP,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.z.is_finite() && self.z > 0.0) {
            return Err(AppError::Usage(format!("--z must be positive, got {}", self.z)));
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(AppError::Usage(format!(
                "--threshold must be non-negative, got {}",
                self.threshold
            )));
        }
        if self.k == 0 {
            return Err(AppError::Usage("--k must be at least 1".into()));
        }
        if !(1..=COPY_CAP).contains(&self.copy_cap) {
            return Err(AppError::Usage(format!("--copy-cap must be between 1 and {COPY_CAP}")));
        }
        self.weights.validate().map_err(|e| AppError::Usage(e.to_string()))
    }
}
