use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::EmpiricalError;
use crate::synergy::ElementId;

/// One piece-usage event: which side moved, and the piece class used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveEvent {
    pub side: u8,
    pub piece: String,
}

impl Serialize for MoveEvent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.side, &self.piece).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MoveEvent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (side, piece) = <(u8, String)>::deserialize(d)?;
        Ok(MoveEvent { side, piece })
    }
}

/// One observed match between two sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    pub sides: [Vec<ElementId>; 2],
    pub winner: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moves: Option<Vec<MoveEvent>>,
}

impl MatchRecord {
    /// Checks record invariants and removes duplicate roster entries.
    pub fn validate(mut self) -> Result<Self, String> {
        if self.match_id.is_empty() {
            return Err("empty match_id".into());
        }
        if self.winner > 1 {
            return Err("winner out of range".into());
        }
        for (i, roster) in self.sides.iter_mut().enumerate() {
            if roster.is_empty() {
                return Err(format!("side {i} roster is empty"));
            }
            let mut seen = HashSet::new();
            roster.retain(|e| seen.insert(e.clone()));
        }
        if let Some(e) = self.sides[0].iter().find(|e| self.sides[1].contains(e)) {
            return Err(format!("element {e} appears on both sides"));
        }
        if let Some(moves) = &self.moves {
            if moves.iter().any(|m| m.side > 1) {
                return Err("move side out of range".into());
            }
            if moves.iter().any(|m| m.piece.is_empty()) {
                return Err("empty piece class in move log".into());
            }
        }
        Ok(self)
    }

    pub fn won(&self, side: usize) -> bool {
        self.winner as usize == side
    }
}

/// Raw line shape, kept loose so schema violations can be reported precisely.
#[derive(Deserialize)]
struct RawRecord {
    match_id: String,
    sides: Vec<Vec<String>>,
    winner: i64,
    #[serde(default)]
    moves: Option<Vec<(i64, String)>>,
}

fn parse_line(line: &str) -> Result<MatchRecord, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| format!("invalid record: {e}"))?;
    if raw.sides.len() != 2 {
        return Err(format!("expected exactly two sides, got {}", raw.sides.len()));
    }
    if !(0..=1).contains(&raw.winner) {
        return Err("winner out of range".into());
    }
    let mut sides: [Vec<ElementId>; 2] = Default::default();
    for (slot, roster) in sides.iter_mut().zip(raw.sides) {
        *slot = roster
            .into_iter()
            .map(ElementId::new)
            .collect::<Result<_, _>>()
            .map_err(|_| "empty element id".to_string())?;
    }
    let moves = match raw.moves {
        None => None,
        Some(ms) => Some(
            ms.into_iter()
                .map(|(side, piece)| {
                    u8::try_from(side)
                        .ok()
                        .filter(|s| *s <= 1)
                        .map(|side| MoveEvent { side, piece })
                        .ok_or_else(|| "move side out of range".to_string())
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    MatchRecord {
        match_id: raw.match_id,
        sides,
        winner: raw.winner as u8,
        moves,
    }
    .validate()
}

/// Per-side observations: the distinct elements a side fielded and whether it
/// won. Estimators count over these.
#[derive(Clone, Debug, Default)]
pub struct SideTable {
    sides: Vec<(Vec<ElementId>, bool)>,
    index: BTreeMap<ElementId, Vec<u32>>,
}

impl SideTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one side observation. Elements are deduplicated.
    pub fn push(&mut self, elements: impl IntoIterator<Item = ElementId>, won: bool) {
        let elements: Vec<ElementId> = elements.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let id = self.sides.len() as u32;
        for e in &elements {
            self.index.entry(e.clone()).or_default().push(id);
        }
        self.sides.push((elements, won));
    }

    pub fn len(&self) -> usize {
        self.sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sides.is_empty()
    }

    pub fn elements(&self) -> impl Iterator<Item = &ElementId> + '_ {
        self.index.keys()
    }

    pub fn contains(&self, e: &ElementId) -> bool {
        self.index.contains_key(e)
    }

    /// Observation ids in which `e` appears, ascending.
    pub fn appearances(&self, e: &ElementId) -> &[u32] {
        self.index.get(e).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn side(&self, id: u32) -> (&[ElementId], bool) {
        let (els, won) = &self.sides[id as usize];
        (els, *won)
    }

    /// `(wins, games)` over sides containing every element of `elements`.
    pub fn tally<'e>(&self, elements: impl IntoIterator<Item = &'e ElementId>) -> (u64, u64) {
        let elements: Vec<&ElementId> = elements.into_iter().collect();
        let Some(rarest) = elements.iter().min_by_key(|e| self.appearances(e).len()) else {
            return (0, 0);
        };
        let (mut wins, mut games) = (0, 0);
        for &id in self.appearances(rarest) {
            let (els, won) = self.side(id);
            if elements.iter().all(|e| els.binary_search(e).is_ok()) {
                games += 1;
                wins += won as u64;
            }
        }
        (wins, games)
    }
}

/// Validated match records plus the derived element pool and side index.
#[derive(Clone, Debug)]
pub struct MatchLog {
    records: Vec<MatchRecord>,
    table: SideTable,
}

impl MatchLog {
    pub fn from_records(records: Vec<MatchRecord>) -> Result<Self, EmpiricalError> {
        let mut ids = HashSet::new();
        let mut table = SideTable::new();
        let mut checked = Vec::with_capacity(records.len());
        for (i, r) in records.into_iter().enumerate() {
            let r = r
                .validate()
                .map_err(|reason| EmpiricalError::InvalidRecord { index: i, reason })?;
            if !ids.insert(r.match_id.clone()) {
                return Err(EmpiricalError::InvalidRecord {
                    index: i,
                    reason: format!("duplicate match_id {}", r.match_id),
                });
            }
            for side in 0..2 {
                table.push(r.sides[side].iter().cloned(), r.won(side));
            }
            checked.push(r);
        }
        Ok(MatchLog {
            records: checked,
            table,
        })
    }

    pub fn empty() -> Self {
        MatchLog {
            records: Vec::new(),
            table: SideTable::new(),
        }
    }

    pub fn records(&self) -> &[MatchRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Every element seen on any side, sorted.
    pub fn pool(&self) -> impl Iterator<Item = &ElementId> + '_ {
        self.table.elements()
    }

    pub fn contains(&self, e: &ElementId) -> bool {
        self.table.contains(e)
    }

    /// Side observations, two per record: `2 * record + side`.
    pub fn sides(&self) -> &SideTable {
        &self.table
    }

    /// SHA-256 over the canonical JSON of the records, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.records {
            h.update(serde_json::to_vec(r).expect("records serialize"));
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

impl PartialEq for MatchLog {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

impl Serialize for MatchLog {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.records.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatchLog {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let records = Vec::<MatchRecord>::deserialize(d)?;
        MatchLog::from_records(records).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line number in the input.
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub log: MatchLog,
    pub rejects: Vec<Rejection>,
    /// Non-blank lines read.
    pub lines: usize,
}

/// Largest tolerated share of invalid lines.
pub const MAX_REJECT_FRACTION: f64 = 0.10;

/// Reads newline-delimited match records. Blank lines are ignored. Invalid
/// records are collected with their line numbers; if more than 10% of the
/// lines are invalid the whole log is refused.
pub fn ingest_match_log<R: BufRead>(reader: R) -> Result<Ingested, EmpiricalError> {
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    let mut ids = HashSet::new();
    let mut lines = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EmpiricalError::MalformedStream {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        lines += 1;
        match parse_line(&line) {
            Ok(r) if !ids.insert(r.match_id.clone()) => rejects.push(Rejection {
                line: i + 1,
                reason: format!("duplicate match_id {}", r.match_id),
            }),
            Ok(r) => records.push(r),
            Err(reason) => rejects.push(Rejection { line: i + 1, reason }),
        }
    }
    if rejects.len() as f64 > MAX_REJECT_FRACTION * lines as f64 {
        return Err(EmpiricalError::TooManyRejects {
            rejected: rejects.len(),
            total: lines,
            rejects,
        });
    }
    let log = MatchLog::from_records(records)?;
    Ok(Ingested { log, rejects, lines })
}
