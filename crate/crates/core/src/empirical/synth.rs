//! Synthetic match logs with a planted pair effect.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MatchLog, MatchRecord};
use crate::synergy::ElementId;

#[derive(Clone, Debug)]
pub struct PlantedConfig {
    pub pool_size: usize,
    pub team_size: usize,
    pub matches: usize,
    /// Win-probability shift for a side fielding both planted elements.
    pub boost: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            pool_size: 10,
            team_size: 3,
            matches: 5000,
            boost: 0.2,
            seed: 0,
        }
    }
}

/// Element names: `a`, `b`, ... for pools up to 26, `e0`, `e1`, ... beyond.
pub fn element_name(i: usize, pool_size: usize) -> ElementId {
    let name = if pool_size <= 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("e{i}")
    };
    ElementId::new(name).expect("non-empty")
}

/// Random disjoint teams; side 0 wins with probability
/// `0.5 + boost * [side 0 has both planted] - boost * [side 1 has both planted]`.
/// The planted pair is the first two elements of the pool.
pub fn planted_log(cfg: &PlantedConfig) -> MatchLog {
    assert!(cfg.pool_size >= 2 * cfg.team_size && cfg.team_size >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let names: Vec<ElementId> = (0..cfg.pool_size).map(|i| element_name(i, cfg.pool_size)).collect();
    let has_pair = |team: &[usize]| team.contains(&0) && team.contains(&1);
    let records = (0..cfg.matches)
        .map(|m| {
            let picks = index::sample(&mut rng, cfg.pool_size, 2 * cfg.team_size).into_vec();
            let (t0, t1) = picks.split_at(cfg.team_size);
            let p0 = 0.5 + cfg.boost * (has_pair(t0) as u8 as f64) - cfg.boost * (has_pair(t1) as u8 as f64);
            let winner = if rng.gen::<f64>() < p0 { 0 } else { 1 };
            MatchRecord {
                match_id: format!("P-{m:06}"),
                sides: [
                    t0.iter().map(|&i| names[i].clone()).collect(),
                    t1.iter().map(|&i| names[i].clone()).collect(),
                ],
                winner,
                moves: None,
            }
        })
        .collect();
    MatchLog::from_records(records).expect("generated records are valid")
}
