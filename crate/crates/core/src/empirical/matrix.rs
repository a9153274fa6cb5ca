use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::estimate::{solo_win_rate_z, WinRateEstimate, WinRateValueFunction};
use super::{EmpiricalError, MatchLog};
use crate::synergy::{compute_synergy, BaselineKind, ElementId, SynergyScore, SynergySet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub a: ElementId,
    pub b: ElementId,
    pub score: SynergyScore,
    pub joint: WinRateEstimate,
    /// `joint.games >= min_games`.
    pub sufficient: bool,
}

/// Synergy of every pair that ever shared a side. Each pair is stored once
/// with `a < b`; entries are sorted by `(a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSynergyMatrix {
    pub baseline: BaselineKind,
    pub min_games: u64,
    pub z: f64,
    /// Digest of the log the matrix was computed from.
    pub log_digest: String,
    pub entries: Vec<PairEntry>,
}

impl PairSynergyMatrix {
    pub fn get(&self, x: &ElementId, y: &ElementId) -> Option<&PairEntry> {
        let key = if x <= y { (x, y) } else { (y, x) };
        self.entries
            .binary_search_by(|e| (&e.a, &e.b).cmp(&key))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Entry with the highest synergy, ties to the canonically smaller pair.
    pub fn argmax(&self) -> Option<&PairEntry> {
        self.entries.iter().fold(None, |best: Option<&PairEntry>, e| match best {
            Some(b) if b.score.synergy.total_cmp(&e.score.synergy).is_ge() => Some(b),
            _ => Some(e),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

pub fn pair_synergy_matrix(
    log: &MatchLog,
    baseline: BaselineKind,
    min_games: u64,
) -> Result<PairSynergyMatrix, EmpiricalError> {
    pair_synergy_matrix_z(log, baseline, min_games, super::DEFAULT_Z)
}

pub fn pair_synergy_matrix_z(
    log: &MatchLog,
    baseline: BaselineKind,
    min_games: u64,
    z: f64,
) -> Result<PairSynergyMatrix, EmpiricalError> {
    let vf = WinRateValueFunction::over(log.sides(), min_games, z)?;
    let mut pairs = BTreeSet::new();
    for r in log.records() {
        for roster in &r.sides {
            for (i, x) in roster.iter().enumerate() {
                for y in &roster[i + 1..] {
                    pairs.insert(if x < y { (x, y) } else { (y, x) });
                }
            }
        }
    }
    let mut entries = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let set = SynergySet::from_elements([a.clone(), b.clone()])?;
        let score = compute_synergy(&set, &vf, baseline)?;
        let joint = vf.estimate(&set).expect("pair co-occurred");
        entries.push(PairEntry {
            a: a.clone(),
            b: b.clone(),
            score,
            sufficient: joint.games >= min_games,
            joint,
        });
    }
    Ok(PairSynergyMatrix {
        baseline,
        min_games,
        z,
        log_digest: log.digest(),
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterEntry {
    pub a: ElementId,
    pub b: ElementId,
    /// `vs.rate - overall.rate`; negative when `b` counters `a`.
    pub score: f64,
    /// `a`'s record in matches with `b` on the opposing side.
    pub vs: WinRateEstimate,
    pub overall: WinRateEstimate,
    /// `vs.games >= min_games`.
    pub sufficient: bool,
}

/// Counter scores for every ordered pair that met as opponents, sorted by
/// `(a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterMatrix {
    pub min_games: u64,
    pub z: f64,
    pub log_digest: String,
    pub entries: Vec<CounterEntry>,
}

impl CounterMatrix {
    pub fn get(&self, a: &ElementId, b: &ElementId) -> Option<&CounterEntry> {
        self.entries
            .binary_search_by(|e| (&e.a, &e.b).cmp(&(a, b)))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

fn opposed_tally(log: &MatchLog, a: &ElementId, b: &ElementId) -> (u64, u64) {
    let table = log.sides();
    let (mut wins, mut games) = (0, 0);
    for &id in table.appearances(a) {
        let (opponents, _) = table.side(id ^ 1);
        if opponents.binary_search(b).is_ok() {
            games += 1;
            wins += table.side(id).1 as u64;
        }
    }
    (wins, games)
}

pub fn counter_score(
    log: &MatchLog,
    a: &ElementId,
    b: &ElementId,
    min_games: u64,
) -> Result<CounterEntry, EmpiricalError> {
    counter_score_z(log, a, b, min_games, super::DEFAULT_Z)
}

pub fn counter_score_z(
    log: &MatchLog,
    a: &ElementId,
    b: &ElementId,
    min_games: u64,
    z: f64,
) -> Result<CounterEntry, EmpiricalError> {
    let overall = solo_win_rate_z(log, a, z)?;
    solo_win_rate_z(log, b, z)?;
    let (wins, games) = opposed_tally(log, a, b);
    let vs = WinRateEstimate::new(wins, games, z)
        .ok_or_else(|| EmpiricalError::NeverOpposed(a.clone(), b.clone()))?;
    Ok(CounterEntry {
        a: a.clone(),
        b: b.clone(),
        score: vs.rate - overall.rate,
        vs,
        overall,
        sufficient: vs.games >= min_games,
    })
}

pub fn counter_matrix(log: &MatchLog, min_games: u64) -> Result<CounterMatrix, EmpiricalError> {
    counter_matrix_z(log, min_games, super::DEFAULT_Z)
}

pub fn counter_matrix_z(log: &MatchLog, min_games: u64, z: f64) -> Result<CounterMatrix, EmpiricalError> {
    if log.is_empty() {
        return Err(EmpiricalError::EmptyLog);
    }
    let mut tallies: BTreeMap<(&ElementId, &ElementId), (u64, u64)> = BTreeMap::new();
    for r in log.records() {
        for side in 0..2 {
            let won = r.won(side) as u64;
            for a in &r.sides[side] {
                for b in &r.sides[1 - side] {
                    let t = tallies.entry((a, b)).or_default();
                    t.0 += won;
                    t.1 += 1;
                }
            }
        }
    }
    let mut overall = BTreeMap::new();
    let mut entries = Vec::with_capacity(tallies.len());
    for ((a, b), (wins, games)) in tallies {
        let overall = match overall.get(a) {
            Some(o) => *o,
            None => *overall.entry(a).or_insert(solo_win_rate_z(log, a, z)?),
        };
        let vs = WinRateEstimate::new(wins, games, z).expect("pair met at least once");
        entries.push(CounterEntry {
            a: a.clone(),
            b: b.clone(),
            score: vs.rate - overall.rate,
            vs,
            overall,
            sufficient: games >= min_games,
        });
    }
    Ok(CounterMatrix {
        min_games,
        z,
        log_digest: log.digest(),
        entries,
    })
}
