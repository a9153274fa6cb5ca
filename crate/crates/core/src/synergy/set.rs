use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SynergyError;

/// Opaque identifier of a game element. Never empty.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ElementId(String);

impl ElementId {
    pub fn new(id: impl Into<String>) -> Result<Self, SynergyError> {
        let id = id.into();
        if id.is_empty() {
            return Err(SynergyError::EmptyElementId);
        }
        Ok(ElementId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ElementId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl<'de> Deserialize<'de> for ElementId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ElementId::new(s).map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for ElementId {
    type Err = SynergyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ElementId::new(s)
    }
}

/// A multiset of elements.
///
/// Ordering between sets is the lexicographic order of their sorted, expanded
/// id sequences (`[a, a, b] < [a, b] < [b]`), with a proper prefix sorting
/// first. This is the canonical order used for tie-breaking and enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SynergySet {
    entries: BTreeMap<ElementId, u32>,
    cardinality: u32,
}

impl SynergySet {
    /// Builds a set from an iterator of elements; repeats add multiplicity.
    pub fn from_elements<I>(elements: I) -> Result<Self, SynergyError>
    where
        I: IntoIterator<Item = ElementId>,
    {
        let mut entries = BTreeMap::new();
        let mut cardinality = 0u32;
        for e in elements {
            *entries.entry(e).or_insert(0) += 1;
            cardinality += 1;
        }
        if cardinality == 0 {
            return Err(SynergyError::EmptySet);
        }
        Ok(SynergySet {
            entries,
            cardinality,
        })
    }

    /// Builds a set from `(element, count)` pairs. Zero counts are rejected.
    pub fn from_counts<I>(counts: I) -> Result<Self, SynergyError>
    where
        I: IntoIterator<Item = (ElementId, u32)>,
    {
        let mut entries = BTreeMap::new();
        let mut cardinality = 0u32;
        for (e, n) in counts {
            if n == 0 {
                return Err(SynergyError::ZeroCount(e));
            }
            *entries.entry(e).or_insert(0) += n;
            cardinality += n;
        }
        if cardinality == 0 {
            return Err(SynergyError::EmptySet);
        }
        Ok(SynergySet {
            entries,
            cardinality,
        })
    }

    /// Convenience constructor from string ids, mostly for tests and fixtures.
    pub fn of(ids: &[&str]) -> Result<Self, SynergyError> {
        Self::from_elements(
            ids.iter()
                .map(|s| ElementId::new(*s))
                .collect::<Result<Vec<_>, _>>()?,
        )
    }

    pub fn singleton(element: ElementId) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(element, 1);
        SynergySet {
            entries,
            cardinality: 1,
        }
    }

    pub fn cardinality(&self) -> u32 {
        self.cardinality
    }

    /// Number of distinct elements.
    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn count(&self, element: &ElementId) -> u32 {
        self.entries.get(element).copied().unwrap_or(0)
    }

    pub fn contains(&self, element: &ElementId) -> bool {
        self.entries.contains_key(element)
    }

    /// Distinct elements with their counts, sorted by id.
    pub fn counts(&self) -> impl Iterator<Item = (&ElementId, u32)> + '_ {
        self.entries.iter().map(|(e, n)| (e, *n))
    }

    /// Distinct elements sorted by id.
    pub fn elements(&self) -> impl Iterator<Item = &ElementId> + '_ {
        self.entries.keys()
    }

    /// Every copy of every element, sorted by id.
    pub fn expanded(&self) -> impl Iterator<Item = &ElementId> + '_ {
        self.entries
            .iter()
            .flat_map(|(e, n)| std::iter::repeat_n(e, *n as usize))
    }

    /// Expanded ids joined with `+`, e.g. `a+a+b`.
    pub fn label(&self) -> String {
        self.expanded()
            .map(ElementId::as_str)
            .collect::<Vec<_>>()
            .join("+")
    }
}

impl Ord for SynergySet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.expanded().cmp(other.expanded())
    }
}

impl PartialOrd for SynergySet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SynergySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.label().replace('+', ", "))
    }
}

impl Serialize for SynergySet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.expanded())
    }
}

impl<'de> Deserialize<'de> for SynergySet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let ids = Vec::<ElementId>::deserialize(deserializer)?;
        SynergySet::from_elements(ids).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[&str]) -> SynergySet {
        SynergySet::of(ids).unwrap()
    }

    #[test]
    fn empty_id_rejected() {
        assert!(matches!(
            ElementId::new(""),
            Err(SynergyError::EmptyElementId)
        ));
        assert!(serde_json::from_str::<ElementId>("\"\"").is_err());
    }

    #[test]
    fn multiplicity_and_canonical_equality() {
        let s = set(&["b", "a", "b"]);
        assert_eq!(s.cardinality(), 3);
        assert_eq!(s.distinct(), 2);
        assert_eq!(s.count(&ElementId::new("b").unwrap()), 2);
        assert_eq!(s, set(&["b", "b", "a"]));
        assert_eq!(s.label(), "a+b+b");
    }

    #[test]
    fn canonical_order_is_lexicographic_on_expansion() {
        let mut sets = vec![set(&["b", "b"]), set(&["a", "b"]), set(&["a", "a"]), set(&["a", "a", "b"])];
        sets.sort();
        let labels: Vec<_> = sets.iter().map(SynergySet::label).collect();
        assert_eq!(labels, ["a+a", "a+a+b", "a+b", "b+b"]);
    }

    #[test]
    fn zero_count_rejected() {
        let a = ElementId::new("a").unwrap();
        assert!(matches!(
            SynergySet::from_counts([(a, 0)]),
            Err(SynergyError::ZeroCount(_))
        ));
        assert!(matches!(
            SynergySet::from_elements(Vec::new()),
            Err(SynergyError::EmptySet)
        ));
    }

    #[test]
    fn serde_uses_expanded_sorted_list() {
        let s = set(&["b", "a", "a"]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"["a","a","b"]"#);
        let back: SynergySet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
