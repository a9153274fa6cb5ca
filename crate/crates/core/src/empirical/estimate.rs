use serde::{Deserialize, Serialize};

use super::{EmpiricalError, MatchLog, SideTable};
use crate::synergy::{ElementId, SynergyError, SynergySet, Value, ValueFunction, ValueScale};

/// Normal quantile for a two-sided 95% interval.
pub const DEFAULT_Z: f64 = 1.96;

pub const DEFAULT_MIN_GAMES: u64 = 30;

/// Wilson score interval for `wins` out of `games`, clamped so it always
/// contains the point rate.
pub fn wilson_interval(wins: u64, games: u64, z: f64) -> (f64, f64) {
    if games == 0 {
        return (0.0, 1.0);
    }
    let n = games as f64;
    let p = wins as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = (center - half).max(0.0).min(p);
    let high = (center + half).min(1.0).max(p);
    (low, high)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinRateEstimate {
    pub wins: u64,
    pub games: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl WinRateEstimate {
    /// `None` when `games` is zero or `wins > games`.
    pub fn new(wins: u64, games: u64, z: f64) -> Option<Self> {
        if games == 0 || wins > games {
            return None;
        }
        let (ci_low, ci_high) = wilson_interval(wins, games, z);
        Some(WinRateEstimate {
            wins,
            games,
            rate: wins as f64 / games as f64,
            ci_low,
            ci_high,
        })
    }
}

pub fn solo_win_rate(log: &MatchLog, e: &ElementId) -> Result<WinRateEstimate, EmpiricalError> {
    solo_win_rate_z(log, e, DEFAULT_Z)
}

pub fn solo_win_rate_z(log: &MatchLog, e: &ElementId, z: f64) -> Result<WinRateEstimate, EmpiricalError> {
    let (wins, games) = log.sides().tally([e]);
    WinRateEstimate::new(wins, games, z).ok_or_else(|| EmpiricalError::UnknownElement(e.clone()))
}

pub fn joint_win_rate(log: &MatchLog, set: &SynergySet) -> Result<WinRateEstimate, EmpiricalError> {
    joint_win_rate_z(log, set, DEFAULT_Z)
}

pub fn joint_win_rate_z(log: &MatchLog, set: &SynergySet, z: f64) -> Result<WinRateEstimate, EmpiricalError> {
    if set.cardinality() < 2 {
        return Err(SynergyError::Cardinality {
            got: set.cardinality(),
        }
        .into());
    }
    let (wins, games) = log.sides().tally(set.elements());
    WinRateEstimate::new(wins, games, z).ok_or_else(|| EmpiricalError::NeverCoOccurred(set.label()))
}

/// Win-rate value function over side observations. Singletons map to their
/// solo rate, larger sets to the rate of sides fielding every element.
#[derive(Clone, Debug)]
pub struct WinRateValueFunction<'a> {
    table: &'a SideTable,
    min_games: u64,
    z: f64,
    scale: ValueScale,
}

impl<'a> WinRateValueFunction<'a> {
    pub fn over(table: &'a SideTable, min_games: u64, z: f64) -> Result<Self, EmpiricalError> {
        if table.is_empty() {
            return Err(EmpiricalError::EmptyLog);
        }
        Ok(WinRateValueFunction {
            table,
            min_games,
            z,
            scale: ValueScale::Numeric,
        })
    }

    pub fn min_games(&self) -> u64 {
        self.min_games
    }

    /// Estimate for any set; multiplicity is ignored.
    pub fn estimate(&self, set: &SynergySet) -> Option<WinRateEstimate> {
        let (wins, games) = self.table.tally(set.elements());
        WinRateEstimate::new(wins, games, self.z)
    }
}

pub fn winrate_value_function(log: &MatchLog, min_games: u64) -> Result<WinRateValueFunction<'_>, EmpiricalError> {
    WinRateValueFunction::over(log.sides(), min_games, DEFAULT_Z)
}

impl ValueFunction for WinRateValueFunction<'_> {
    fn scale(&self) -> &ValueScale {
        &self.scale
    }

    fn in_pool(&self, element: &ElementId) -> bool {
        self.table.contains(element)
    }

    fn evaluate(&self, set: &SynergySet) -> Result<Value, SynergyError> {
        self.estimate(set)
            .map(|est| Value::numeric(est.rate))
            .ok_or_else(|| SynergyError::EvaluationGap {
                set: set.label(),
                reason: "elements never appeared together on one side".into(),
            })
    }

    fn low_confidence(&self, set: &SynergySet) -> bool {
        self.estimate(set).map_or(true, |est| est.games < self.min_games)
    }
}
