use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SearchError;
use crate::synergy::{ElementId, SynergySet};

/// Predicate restricting which sets of a space are analysed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetFilter {
    /// `must-contain:<id>`
    MustContain(ElementId),
    /// `must-contain-any:<id>,<id>,...`
    MustContainAny(BTreeSet<ElementId>),
}

impl SetFilter {
    pub fn accepts(&self, set: &SynergySet) -> bool {
        match self {
            SetFilter::MustContain(e) => set.contains(e),
            SetFilter::MustContainAny(ids) => ids.iter().any(|e| set.contains(e)),
        }
    }
}

impl fmt::Display for SetFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetFilter::MustContain(e) => write!(f, "must-contain:{e}"),
            SetFilter::MustContainAny(ids) => {
                let ids: Vec<&str> = ids.iter().map(ElementId::as_str).collect();
                write!(f, "must-contain-any:{}", ids.join(","))
            }
        }
    }
}

impl FromStr for SetFilter {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SearchError::InvalidSpace(format!("unknown filter {s:?}"));
        if let Some(id) = s.strip_prefix("must-contain-any:") {
            let ids = id
                .split(',')
                .map(ElementId::new)
                .collect::<Result<BTreeSet<_>, _>>()
                .map_err(|_| bad())?;
            return Ok(SetFilter::MustContainAny(ids));
        }
        if let Some(id) = s.strip_prefix("must-contain:") {
            return ElementId::new(id).map(SetFilter::MustContain).map_err(|_| bad());
        }
        Err(bad())
    }
}

impl Serialize for SetFilter {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SetFilter {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// All multisets over `pool` with between `size_min` and `size_max` copies in
/// total and at most `copy_cap` copies of each element.
///
/// The pool is kept sorted by id, so pool index order is the canonical element
/// order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSpace {
    pool: Vec<ElementId>,
    size_min: u32,
    size_max: u32,
    copy_cap: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    filter: Option<SetFilter>,
}

impl CandidateSpace {
    pub fn new(
        pool: impl IntoIterator<Item = ElementId>,
        size_min: u32,
        size_max: u32,
        copy_cap: u32,
    ) -> Result<Self, SearchError> {
        let mut pool: Vec<ElementId> = pool.into_iter().collect();
        pool.sort();
        if pool.is_empty() {
            return Err(SearchError::InvalidSpace("pool is empty".into()));
        }
        if let Some(w) = pool.windows(2).find(|w| w[0] == w[1]) {
            return Err(SearchError::InvalidSpace(format!("duplicate pool element {}", w[0])));
        }
        if size_min < 2 {
            return Err(SearchError::InvalidSpace(format!("size_min must be at least 2, got {size_min}")));
        }
        if size_max < size_min {
            return Err(SearchError::InvalidSpace(format!(
                "size_max {size_max} is below size_min {size_min}"
            )));
        }
        if copy_cap == 0 {
            return Err(SearchError::InvalidSpace("copy_cap must be at least 1".into()));
        }
        Ok(CandidateSpace {
            pool,
            size_min,
            size_max,
            copy_cap,
            filter: None,
        })
    }

    pub fn with_filter(mut self, filter: SetFilter) -> Result<Self, SearchError> {
        let known = |e: &ElementId| self.pool.binary_search(e).is_ok();
        let ok = match &filter {
            SetFilter::MustContain(e) => known(e),
            SetFilter::MustContainAny(ids) => !ids.is_empty() && ids.iter().all(known),
        };
        if !ok {
            return Err(SearchError::InvalidSpace(format!("filter {filter} names elements outside the pool")));
        }
        self.filter = Some(filter);
        Ok(self)
    }

    pub fn pool(&self) -> &[ElementId] {
        &self.pool
    }

    pub fn size_min(&self) -> u32 {
        self.size_min
    }

    pub fn size_max(&self) -> u32 {
        self.size_max
    }

    pub fn copy_cap(&self) -> u32 {
        self.copy_cap
    }

    pub fn filter(&self) -> Option<&SetFilter> {
        self.filter.as_ref()
    }

    pub fn accepts(&self, set: &SynergySet) -> bool {
        self.filter.as_ref().is_none_or(|f| f.accepts(set))
    }

    /// Whether `set` belongs to the unfiltered space.
    pub fn contains(&self, set: &SynergySet) -> bool {
        let n = set.cardinality();
        n >= self.size_min
            && n <= self.size_max
            && set
                .counts()
                .all(|(e, c)| c <= self.copy_cap && self.pool.binary_search(e).is_ok())
    }

    /// Largest set size any set of this space can reach.
    fn reachable_max(&self) -> u64 {
        (self.size_max as u64).min(self.pool.len() as u64 * self.copy_cap as u64)
    }

    fn to_set(&self, indices: &[usize]) -> SynergySet {
        SynergySet::from_elements(indices.iter().map(|&i| self.pool[i].clone()))
            .expect("space sets are non-empty")
    }

    /// Streams every set of the space in canonical order, applying the filter.
    pub fn iter(&self) -> SetStream<'_> {
        SetStream {
            space: self,
            seq: Vec::with_capacity(self.size_max as usize),
            done: false,
        }
    }
}

/// Exact number of sets in the unfiltered space.
pub fn count_sets(space: &CandidateSpace) -> BigUint {
    SpaceIndex::new(space).total().clone()
}

/// Streams the sets of `space` in canonical order.
pub fn enumerate_sets(space: &CandidateSpace) -> SetStream<'_> {
    space.iter()
}

/// Draws `n` sets uniformly (with replacement) from `space` using a seeded
/// ChaCha8 stream. Uniform indices are unranked into sets; sets rejected by the
/// filter are redrawn, so the result is uniform over the filtered space.
pub fn sample_sets(space: &CandidateSpace, n: usize, seed: u64) -> Result<Vec<SynergySet>, SearchError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let index = SpaceIndex::new(space);
    if index.total().is_zero() {
        return Err(SearchError::EmptySpace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = n.saturating_mul(1000).max(100_000);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        if attempts == max_attempts {
            return Err(SearchError::FilterTooSelective { attempts });
        }
        attempts += 1;
        let i = rng.gen_biguint_below(index.total());
        let set = index.unrank(&i)?;
        if space.accepts(&set) {
            out.push(set);
        }
    }
    Ok(out)
}

/// Counting tables for a space, supporting rank and unrank in canonical order.
///
/// Sets are identified with non-decreasing index sequences into the pool and
/// ordered as a depth-first pre-order walk of the prefix tree of such
/// sequences, which coincides with lexicographic order on sorted id lists.
/// `ways[j][s]` is the number of ways to pick `s` copies from pool elements
/// `j..` (coefficient of `x^s` in the product of `1 + x + ... + x^cap`);
/// Only the second prefix sum over `s` is kept; it gives subtree sizes.
pub struct SpaceIndex<'a> {
    space: &'a CandidateSpace,
    cum2: Vec<Vec<BigUint>>,
    total: BigUint,
}

impl<'a> SpaceIndex<'a> {
    pub fn new(space: &'a CandidateSpace) -> Self {
        let n = space.pool.len();
        let max = space.size_max as usize;
        let cap = space.copy_cap as usize;
        let mut cum = vec![vec![BigUint::zero(); max + 1]; n + 1];
        let mut cum2 = vec![vec![BigUint::zero(); max + 1]; n + 1];
        // Empty suffix: one way to pick nothing.
        for s in 0..=max {
            cum[n][s] = BigUint::one();
        }
        for j in (0..n).rev() {
            let mut running = BigUint::zero();
            for s in 0..=max {
                let mut w = cum[j + 1][s].clone();
                if s > cap {
                    w -= &cum[j + 1][s - cap - 1];
                }
                running += w;
                cum[j][s] = running.clone();
            }
        }
        for j in 0..=n {
            let mut running = BigUint::zero();
            for s in 0..=max {
                running += &cum[j][s];
                cum2[j][s] = running.clone();
            }
        }
        let min = space.size_min as usize;
        let mut total = cum[0][max].clone();
        if min > 0 {
            total -= &cum[0][min - 1];
        }
        SpaceIndex {
            space,
            cum2,
            total,
        }
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    fn cum2_at(&self, j: usize, s: i64) -> BigUint {
        if s < 0 {
            BigUint::zero()
        } else {
            self.cum2[j][s as usize].clone()
        }
    }

    /// Number of sets in the subtree rooted at a prefix of length `len` whose
    /// last element is pool index `x`, already used `used` times.
    fn subtree(&self, len: usize, x: usize, used: u32) -> BigUint {
        let max = self.space.size_max as i64;
        let min = self.space.size_min as i64;
        let len = len as i64;
        if len > max {
            return BigUint::zero();
        }
        let lo = (min - len).max(0);
        let hi = max - len;
        let r = (self.space.copy_cap - used) as i64;
        let j = x + 1;
        // sum over t in [lo, hi] of (cum[j][t] - cum[j][t - r - 1])
        let head = self.cum2_at(j, hi) - self.cum2_at(j, lo - 1);
        let tail = self.cum2_at(j, hi - r - 1) - self.cum2_at(j, lo - r - 2);
        head - tail
    }

    /// Children of a prefix in canonical order, as `(element, used count)`.
    fn children<'s>(&self, seq: &'s [usize]) -> impl Iterator<Item = (usize, u32)> + 's {
        let n = self.space.pool.len();
        let cap = self.space.copy_cap;
        let (repeat, start) = match seq.last() {
            Some(&x) => {
                let used = seq.iter().rev().take_while(|&&y| y == x).count() as u32;
                ((used < cap).then_some((x, used + 1)), x + 1)
            }
            None => (None, 0),
        };
        repeat.into_iter().chain((start..n).map(|y| (y, 1)))
    }

    /// The set at position `index` of the canonical order.
    pub fn unrank(&self, index: &BigUint) -> Result<SynergySet, SearchError> {
        if index >= &self.total {
            return Err(SearchError::IndexOutOfRange);
        }
        let min = self.space.size_min as usize;
        let mut rest = index.clone();
        let mut seq: Vec<usize> = Vec::new();
        loop {
            if seq.len() >= min {
                if rest.is_zero() {
                    return Ok(self.space.to_set(&seq));
                }
                rest -= 1u32;
            }
            let len = seq.len() + 1;
            let mut next = None;
            for (y, used) in self.children(&seq) {
                let size = self.subtree(len, y, used);
                if rest < size {
                    next = Some(y);
                    break;
                }
                rest -= size;
            }
            match next {
                Some(y) => seq.push(y),
                None => unreachable!("index below total always resolves"),
            }
        }
    }

    /// Position of `set` in the canonical order of the unfiltered space.
    pub fn rank(&self, set: &SynergySet) -> Result<BigUint, SearchError> {
        if !self.space.contains(set) {
            return Err(SearchError::NotInSpace(set.label()));
        }
        let target: Vec<usize> = set
            .expanded()
            .map(|e| self.space.pool.binary_search(e).expect("checked by contains"))
            .collect();
        let min = self.space.size_min as usize;
        let mut rank = BigUint::zero();
        for depth in 0..target.len() {
            let seq = &target[..depth];
            if seq.len() >= min {
                rank += 1u32;
            }
            for (y, used) in self.children(seq) {
                if y == target[depth] {
                    break;
                }
                rank += self.subtree(depth + 1, y, used);
            }
        }
        Ok(rank)
    }
}

/// Canonical-order stream over a space. Single consumer.
pub struct SetStream<'a> {
    space: &'a CandidateSpace,
    seq: Vec<usize>,
    done: bool,
}

impl SetStream<'_> {
    /// Whether a subtree rooted at a node of length `len` ending in element `y`
    /// (used `used` times) contains at least one set of admissible size.
    fn productive(&self, len: usize, y: usize, used: u32) -> bool {
        let sp = self.space;
        let cap = sp.copy_cap as u64;
        let n = sp.pool.len() as u64;
        let len = len as u64;
        let reach = len + (cap - used as u64) + cap * (n - 1 - y as u64);
        len <= sp.size_max as u64 && reach >= sp.size_min as u64
    }

    fn first_child(&self) -> Option<usize> {
        let cap = self.space.copy_cap;
        let n = self.space.pool.len();
        let len = self.seq.len() + 1;
        let start = match self.seq.last() {
            Some(&x) => {
                let used = self.seq.iter().rev().take_while(|&&y| y == x).count() as u32;
                if used < cap && self.productive(len, x, used + 1) {
                    return Some(x);
                }
                x + 1
            }
            None => 0,
        };
        // Reachable size shrinks with the element index, so only the first
        // candidate needs checking.
        (start < n && self.productive(len, start, 1)).then_some(start)
    }

    /// Moves to the next node in pre-order that holds a set of admissible size.
    fn advance(&mut self) -> bool {
        let n = self.space.pool.len();
        let min = self.space.size_min as usize;
        loop {
            if let Some(c) = self.first_child() {
                self.seq.push(c);
            } else {
                loop {
                    let Some(y) = self.seq.pop() else {
                        return false;
                    };
                    let z = y + 1;
                    if z < n && self.productive(self.seq.len() + 1, z, 1) {
                        self.seq.push(z);
                        break;
                    }
                }
            }
            if self.seq.len() >= min {
                return true;
            }
        }
    }
}

impl Iterator for SetStream<'_> {
    type Item = SynergySet;

    fn next(&mut self) -> Option<SynergySet> {
        if self.done || self.space.reachable_max() < self.space.size_min as u64 {
            return None;
        }
        loop {
            if !self.advance() {
                self.done = true;
                return None;
            }
            let set = self.space.to_set(&self.seq);
            if self.space.accepts(&set) {
                return Some(set);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> Vec<ElementId> {
        names.iter().map(|s| ElementId::new(*s).unwrap()).collect()
    }

    fn pool(n: usize) -> Vec<ElementId> {
        (0..n).map(|i| ElementId::new(format!("e{i:02}")).unwrap()).collect()
    }

    fn labels(space: &CandidateSpace) -> Vec<String> {
        space.iter().map(|s| s.label()).collect()
    }

    #[test]
    fn small_counts() {
        let s = CandidateSpace::new(pool(5), 2, 2, 1).unwrap();
        assert_eq!(count_sets(&s), BigUint::from(10u32));
        let s = CandidateSpace::new(pool(3), 2, 2, 2).unwrap();
        assert_eq!(count_sets(&s), BigUint::from(6u32));
        // Sizes beyond what the pool can supply contribute nothing.
        let s = CandidateSpace::new(pool(2), 2, 9, 1).unwrap();
        assert_eq!(count_sets(&s), BigUint::from(1u32));
    }

    #[test]
    fn invalid_spaces() {
        assert!(matches!(CandidateSpace::new(pool(4), 0, 0, 1), Err(SearchError::InvalidSpace(_))));
        assert!(matches!(CandidateSpace::new(pool(4), 3, 2, 1), Err(SearchError::InvalidSpace(_))));
        assert!(matches!(CandidateSpace::new(pool(4), 2, 2, 0), Err(SearchError::InvalidSpace(_))));
        assert!(matches!(CandidateSpace::new(vec![], 2, 2, 1), Err(SearchError::InvalidSpace(_))));
        assert!(matches!(
            CandidateSpace::new(ids(&["a", "a"]), 2, 2, 2),
            Err(SearchError::InvalidSpace(_))
        ));
        let s = CandidateSpace::new(ids(&["a", "b"]), 2, 2, 1).unwrap();
        assert!(s.with_filter("must-contain:z".parse().unwrap()).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let s = CandidateSpace::new(ids(&["a", "b"]), 2, 2, 1).unwrap();
        assert_eq!(labels(&s), ["a+b"]);
        let s = CandidateSpace::new(ids(&["a", "b"]), 2, 2, 2).unwrap();
        assert_eq!(labels(&s), ["a+a", "a+b", "b+b"]);
        let s = CandidateSpace::new(ids(&["c", "a", "b"]), 2, 2, 1)
            .unwrap()
            .with_filter("must-contain:a".parse().unwrap())
            .unwrap();
        assert_eq!(labels(&s), ["a+b", "a+c"]);
    }

    #[test]
    fn enumeration_is_canonical_across_sizes() {
        let s = CandidateSpace::new(ids(&["a", "b", "c"]), 2, 3, 2).unwrap();
        let sets: Vec<SynergySet> = s.iter().collect();
        let mut sorted = sets.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sets, sorted);
        assert_eq!(BigUint::from(sets.len()), count_sets(&s));
        assert_eq!(sets.first().unwrap().label(), "a+a");
        assert_eq!(sets[1].label(), "a+a+b");
    }

    #[test]
    fn unreachable_minimum_yields_empty_stream() {
        let s = CandidateSpace::new(ids(&["a", "b"]), 5, 6, 2).unwrap();
        assert!(count_sets(&s).is_zero());
        assert_eq!(s.iter().count(), 0);
        assert!(matches!(sample_sets(&s, 3, 1), Err(SearchError::EmptySpace)));
        assert!(sample_sets(&s, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn rank_unrank_agree_with_stream() {
        let s = CandidateSpace::new(pool(4), 2, 4, 3).unwrap();
        let idx = SpaceIndex::new(&s);
        for (i, set) in s.iter().enumerate() {
            let i = BigUint::from(i);
            assert_eq!(idx.unrank(&i).unwrap(), set);
            assert_eq!(idx.rank(&set).unwrap(), i);
        }
        assert!(matches!(idx.unrank(idx.total()), Err(SearchError::IndexOutOfRange)));
        let outside = SynergySet::of(&["e00", "e00", "e00", "e00"]).unwrap();
        assert!(matches!(idx.rank(&outside), Err(SearchError::NotInSpace(_))));
    }

    #[test]
    fn sampling_singleton_space() {
        let s = CandidateSpace::new(ids(&["a", "b"]), 2, 2, 1).unwrap();
        let out = sample_sets(&s, 5, 99).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|x| x.label() == "a+b"));
    }

    #[test]
    fn sampling_covers_small_space_and_is_reproducible() {
        // Three elements, pairs with up to two copies: six sets.
        let s = CandidateSpace::new(ids(&["a", "b", "c"]), 2, 2, 2).unwrap();
        let all: BTreeSet<SynergySet> = s.iter().collect();
        assert_eq!(all.len(), 6);
        let draws = sample_sets(&s, 1000, 7).unwrap();
        let seen: BTreeSet<SynergySet> = draws.iter().cloned().collect();
        assert_eq!(seen, all);
        assert_eq!(draws, sample_sets(&s, 1000, 7).unwrap());
        // Each set expects ~167 hits; 5 sigma is about 59.
        for set in &all {
            let hits = draws.iter().filter(|d| *d == set).count();
            assert!((108..=226).contains(&hits), "{set} drawn {hits} times");
        }
    }

    #[test]
    fn sampling_respects_filter() {
        let s = CandidateSpace::new(pool(6), 2, 3, 2)
            .unwrap()
            .with_filter("must-contain-any:e00,e05".parse().unwrap())
            .unwrap();
        let draws = sample_sets(&s, 200, 3).unwrap();
        assert!(draws.iter().all(|d| s.accepts(d) && s.contains(d)));
    }

    #[test]
    fn filter_round_trips_through_strings() {
        for text in ["must-contain:a", "must-contain-any:a,b"] {
            let f: SetFilter = text.parse().unwrap();
            assert_eq!(f.to_string(), text);
        }
        assert!("contains:a".parse::<SetFilter>().is_err());
        assert!("must-contain:".parse::<SetFilter>().is_err());
    }

    #[test]
    fn large_space_counts_without_enumeration() {
        // 300 distinct cards, 60-card selections, up to 4 copies each.
        let s = CandidateSpace::new(pool(300), 60, 60, 4).unwrap();
        let c = count_sets(&s);
        let expected: BigUint = "1259689051853456301005216314371887769218453783929561863142106384476680"
            .parse()
            .unwrap();
        assert_eq!(c, expected);
        let idx = SpaceIndex::new(&s);
        let last = idx.unrank(&(c.clone() - 1u32)).unwrap();
        assert_eq!(last.cardinality(), 60);
        assert_eq!(idx.rank(&last).unwrap(), c - 1u32);
    }
}
