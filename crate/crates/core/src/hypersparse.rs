//! Associative-array traffic matrix keyed by address strings.
//!
//! Rows are sources, columns are destinations and every stored entry counts
//! the valid packets sent from the row key to the column key. Rows and
//! columns appear when the first packet for them arrives; no explicit zero
//! is ever stored.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::ingest::PacketWindow;
use crate::netstats::QuantityKind;

/// Sorted two-level map `source -> (destination -> packets)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrafficMatrix {
    rows: BTreeMap<String, BTreeMap<String, u64>>,
    cols: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Col,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    /// Sum of entries (`A 1` or `1ᵀ A`).
    Sum,
    /// Count of nonzero entries (`|A|₀ 1` or `1ᵀ |A|₀`).
    Nnz,
}

/// Per-key network quantity. Keys with a zero value are absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVector {
    pub kind: QuantityKind,
    pub values: BTreeMap<String, u64>,
}

impl DegreeVector {
    pub fn get(&self, key: &str) -> u64 {
        self.values.get(key).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.values.values().sum()
    }
}

/// Table II aggregates of one traffic matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AggregateSummary {
    pub valid_packets: u64,
    pub unique_links: u64,
    pub unique_sources: u64,
    pub unique_destinations: u64,
}

/// A set of row or column keys used for selection.
pub trait KeySet {
    fn contains_key(&self, key: &str) -> bool;
}

/// Selects every key.
#[derive(Debug, Clone, Copy, Default)]
pub struct AllKeys;

impl KeySet for AllKeys {
    fn contains_key(&self, _key: &str) -> bool {
        true
    }
}

impl KeySet for BTreeSet<String> {
    fn contains_key(&self, key: &str) -> bool {
        self.contains(key)
    }
}

impl KeySet for BTreeSet<&str> {
    fn contains_key(&self, key: &str) -> bool {
        self.contains(key)
    }
}

impl KeySet for HashSet<String> {
    fn contains_key(&self, key: &str) -> bool {
        self.contains(key)
    }
}

impl KeySet for HashSet<&str> {
    fn contains_key(&self, key: &str) -> bool {
        self.contains(key)
    }
}

impl KeySet for [&str] {
    fn contains_key(&self, key: &str) -> bool {
        self.contains(&key)
    }
}

impl TrafficMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `k` packets to entry `(src, dst)`. Adding zero is a no-op.
    pub fn accumulate(&mut self, src: &str, dst: &str, k: u64) {
        if k == 0 {
            return;
        }
        let row = match self.rows.get_mut(src) {
            Some(row) => row,
            None => self.rows.entry(src.to_owned()).or_default(),
        };
        match row.get_mut(dst) {
            Some(count) => *count += k,
            None => {
                row.insert(dst.to_owned(), k);
                if !self.cols.contains(dst) {
                    self.cols.insert(dst.to_owned());
                }
            }
        }
    }

    /// Builds `A_t` from one window: entry `(i, j)` counts packets `i -> j`.
    pub fn from_window(window: &PacketWindow) -> Self {
        let mut m = TrafficMatrix::new();
        for r in window.records() {
            m.accumulate(&r.src, &r.dst, 1);
        }
        m
    }

    pub fn get(&self, src: &str, dst: &str) -> u64 {
        self.rows
            .get(src)
            .and_then(|row| row.get(dst))
            .copied()
            .unwrap_or(0)
    }

    pub fn row_keys(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn col_keys(&self) -> impl Iterator<Item = &str> {
        self.cols.iter().map(String::as_str)
    }

    pub fn row(&self, src: &str) -> Option<&BTreeMap<String, u64>> {
        self.rows.get(src)
    }

    /// Stored entries in `(src, dst)` order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.rows.iter().flat_map(|(src, row)| {
            row.iter()
                .map(move |(dst, &count)| (src.as_str(), dst.as_str(), count))
        })
    }

    pub fn nnz(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row or column reduction by sum or nonzero count.
    pub fn reduce(&self, axis: Axis, mode: Reduction) -> DegreeVector {
        let kind = match (axis, mode) {
            (Axis::Row, Reduction::Sum) => QuantityKind::SourcePackets,
            (Axis::Row, Reduction::Nnz) => QuantityKind::SourceFanOut,
            (Axis::Col, Reduction::Nnz) => QuantityKind::DestinationFanIn,
            (Axis::Col, Reduction::Sum) => QuantityKind::DestinationPackets,
        };
        let weight = |count: u64| match mode {
            Reduction::Sum => count,
            Reduction::Nnz => 1,
        };
        let values = match axis {
            Axis::Row => self
                .rows
                .iter()
                .map(|(src, row)| (src.clone(), row.values().map(|&c| weight(c)).sum()))
                .collect(),
            Axis::Col => {
                let mut acc: BTreeMap<&str, u64> = BTreeMap::new();
                for (_, dst, count) in self.entries() {
                    *acc.entry(dst).or_default() += weight(count);
                }
                acc.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
            }
        };
        DegreeVector { kind, values }
    }

    /// Restriction to `rows × cols`. Keys absent from the matrix select nothing.
    pub fn submatrix<R, C>(&self, rows: &R, cols: &C) -> TrafficMatrix
    where
        R: KeySet + ?Sized,
        C: KeySet + ?Sized,
    {
        let mut out = TrafficMatrix::new();
        for (src, row) in &self.rows {
            if !rows.contains_key(src) {
                continue;
            }
            for (dst, &count) in row {
                if cols.contains_key(dst) {
                    out.accumulate(src, dst, count);
                }
            }
        }
        out
    }

    pub fn aggregates(&self) -> AggregateSummary {
        AggregateSummary {
            valid_packets: self.entries().map(|(_, _, c)| c).sum(),
            unique_links: self.nnz() as u64,
            unique_sources: self.rows.len() as u64,
            unique_destinations: self.cols.len() as u64,
        }
    }

    /// Triple-list dump `src,dst,count\n` sorted by `(src, dst)`.
    pub fn to_triples(&self) -> String {
        let mut out = String::new();
        for (src, dst, count) in self.entries() {
            let _ = writeln!(out, "{src},{dst},{count}");
        }
        out
    }

    /// Parses the output of [`TrafficMatrix::to_triples`].
    pub fn from_triples(text: &str) -> Result<TrafficMatrix, String> {
        let mut m = TrafficMatrix::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let (Some(src), Some(dst), Some(count), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(format!("line {}: expected src,dst,count", n + 1));
            };
            let count: u64 = count
                .parse()
                .map_err(|_| format!("line {}: invalid count {count:?}", n + 1))?;
            if count == 0 {
                return Err(format!("line {}: zero count", n + 1));
            }
            m.accumulate(src, dst, count);
        }
        Ok(m)
    }
}
