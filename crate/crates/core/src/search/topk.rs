use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::space::{count_sets, sample_sets, CandidateSpace};
use super::SearchError;
use crate::synergy::{
    compute_synergy, rank_order, BaselineKind, SynergyError, SynergyScore, SynergySet, ValueFunction,
};

/// Sets evaluated per parallel round.
const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchStrategy {
    Exhaustive,
    UniformSample { n: usize, seed: u64 },
}

impl SearchStrategy {
    /// Parses `exhaustive` or `sample:<n>`; `seed` is used for sampling.
    pub fn parse(s: &str, seed: u64) -> Result<Self, SearchError> {
        if s == "exhaustive" {
            return Ok(SearchStrategy::Exhaustive);
        }
        let n = s
            .strip_prefix("sample:")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .ok_or_else(|| SearchError::InvalidStrategy(s.to_string()))?;
        Ok(SearchStrategy::UniformSample { n, seed })
    }
}

impl fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchStrategy::Exhaustive => f.write_str("exhaustive"),
            SearchStrategy::UniformSample { n, .. } => write!(f, "sample:{n}"),
        }
    }
}

impl FromStr for SearchStrategy {
    type Err = SearchError;

    /// Parses with seed 0; use [`SearchStrategy::parse`] to supply one.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SearchStrategy::parse(s, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKResult {
    pub k: usize,
    pub entries: Vec<SynergyScore>,
    /// Distinct candidate sets considered, including skipped ones.
    pub sets_examined: u64,
    /// Sets for which the value function had no data.
    pub sets_skipped: u64,
    pub strategy: SearchStrategy,
    pub exhaustive: bool,
}

/// Heap entry ordered so the worst-ranked score sits on top.
struct Ranked(SynergyScore);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_order(&self.0, &other.0)
    }
}

struct BoundedTop {
    k: usize,
    heap: BinaryHeap<Ranked>,
}

impl BoundedTop {
    fn new(k: usize) -> Self {
        BoundedTop {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    fn push(&mut self, score: SynergyScore) {
        if self.heap.len() == self.k {
            if let Some(worst) = self.heap.peek() {
                if rank_order(&score, &worst.0) != Ordering::Less {
                    return;
                }
            }
        }
        self.heap.push(Ranked(score));
        if self.heap.len() > self.k {
            self.heap.pop();
        }
    }

    fn into_sorted(self) -> Vec<SynergyScore> {
        self.heap.into_sorted_vec().into_iter().map(|r| r.0).collect()
    }
}

/// Scores `sets` in order. Evaluation gaps become `None`; any other error
/// aborts with the error of the earliest failing set.
pub(crate) fn score_chunk<V>(
    sets: &[SynergySet],
    vf: &V,
    baseline: BaselineKind,
    pool: Option<&rayon::ThreadPool>,
) -> Result<Vec<Option<SynergyScore>>, SynergyError>
where
    V: ValueFunction + ?Sized,
{
    let one = |set: &SynergySet| match compute_synergy(set, vf, baseline) {
        Ok(s) => Ok(Some(s)),
        Err(SynergyError::EvaluationGap { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    match pool {
        Some(pool) => pool.install(|| sets.par_iter().map(one).collect()),
        None => sets.iter().map(one).collect(),
    }
}

pub(crate) fn worker_pool(workers: usize) -> Result<Option<rayon::ThreadPool>, SearchError> {
    if workers <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map(Some)
        .map_err(|e| SearchError::Workers(e.to_string()))
}

/// Checks the preconditions shared by every search over `space`.
pub(crate) fn check_search<V>(space: &CandidateSpace, vf: &V, baseline: BaselineKind) -> Result<(), SearchError>
where
    V: ValueFunction + ?Sized,
{
    let scale = vf.scale().kind();
    if !baseline.supports(scale) {
        return Err(SynergyError::ScaleMismatch(format!("{baseline} baseline is not defined on a {scale} scale")).into());
    }
    if let Some(e) = space.pool().iter().find(|e| !vf.in_pool(e)) {
        return Err(SynergyError::UnknownElement(e.clone()).into());
    }
    Ok(())
}

/// Finds the `k` highest-synergy sets of `space`, single-threaded.
pub fn top_k_synergy<V>(
    space: &CandidateSpace,
    vf: &V,
    baseline: BaselineKind,
    k: usize,
    strategy: SearchStrategy,
) -> Result<TopKResult, SearchError>
where
    V: ValueFunction + ?Sized,
{
    top_k_synergy_parallel(space, vf, baseline, k, strategy, 1)
}

/// [`top_k_synergy`] evaluating candidates on `workers` threads. The result
/// does not depend on `workers`.
pub fn top_k_synergy_parallel<V>(
    space: &CandidateSpace,
    vf: &V,
    baseline: BaselineKind,
    k: usize,
    strategy: SearchStrategy,
    workers: usize,
) -> Result<TopKResult, SearchError>
where
    V: ValueFunction + ?Sized,
{
    if k == 0 {
        return Err(SearchError::InvalidK);
    }
    check_search(space, vf, baseline)?;
    let pool = worker_pool(workers)?;

    let mut top = BoundedTop::new(k);
    let mut examined = 0u64;
    let mut skipped = 0u64;
    let mut feed = |chunk: &[SynergySet]| -> Result<(), SearchError> {
        examined += chunk.len() as u64;
        for s in score_chunk(chunk, vf, baseline, pool.as_ref())? {
            match s {
                Some(s) => top.push(s),
                None => skipped += 1,
            }
        }
        Ok(())
    };

    match strategy {
        SearchStrategy::Exhaustive => {
            let mut stream = space.iter();
            loop {
                let chunk: Vec<SynergySet> = stream.by_ref().take(CHUNK).collect();
                if chunk.is_empty() {
                    break;
                }
                feed(&chunk)?;
            }
        }
        SearchStrategy::UniformSample { n, seed } => {
            if n == 0 {
                return Err(SearchError::InvalidStrategy("sample:0".into()));
            }
            let sets = distinct_sample(space, n, seed)?;
            for chunk in sets.chunks(CHUNK) {
                feed(chunk)?;
            }
        }
    }
    if examined == 0 {
        return Err(SearchError::EmptySpace);
    }

    Ok(TopKResult {
        k,
        entries: top.into_sorted(),
        sets_examined: examined,
        sets_skipped: skipped,
        strategy,
        exhaustive: matches!(strategy, SearchStrategy::Exhaustive),
    })
}

/// `n` uniform draws with repeats removed, first occurrence kept.
fn distinct_sample(space: &CandidateSpace, n: usize, seed: u64) -> Result<Vec<SynergySet>, SearchError> {
    let mut seen = std::collections::HashSet::new();
    Ok(sample_sets(space, n, seed)?
        .into_iter()
        .filter(|s| seen.insert(s.clone()))
        .collect())
}

/// Scores every set of `space` (exhaustive) or of a uniform sample (duplicates
/// removed, first occurrence kept), in candidate order. Gaps are dropped and
/// counted.
pub fn score_space<V>(
    space: &CandidateSpace,
    vf: &V,
    baseline: BaselineKind,
    strategy: SearchStrategy,
    workers: usize,
) -> Result<(Vec<SynergyScore>, u64), SearchError>
where
    V: ValueFunction + ?Sized,
{
    check_search(space, vf, baseline)?;
    let pool = worker_pool(workers)?;
    let sets: Vec<SynergySet> = match strategy {
        SearchStrategy::Exhaustive => {
            if count_sets(space) == num_bigint::BigUint::default() {
                return Err(SearchError::EmptySpace);
            }
            space.iter().collect()
        }
        SearchStrategy::UniformSample { n, seed } => distinct_sample(space, n, seed)?,
    };
    let mut scores = Vec::with_capacity(sets.len());
    let mut skipped = 0;
    for chunk in sets.chunks(CHUNK) {
        for s in score_chunk(chunk, vf, baseline, pool.as_ref())? {
            match s {
                Some(s) => scores.push(s),
                None => skipped += 1,
            }
        }
    }
    Ok((scores, skipped))
}
