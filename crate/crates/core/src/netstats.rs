//! Network quantities, their histograms and binary-logarithmic pooling.
//!
//! For a quantity `d` with histogram `n_t(d)` the pipeline is
//!
//! ```text
//! p_t(d) = n_t(d) / Σ n_t(d)
//! P_t(d) = Σ_{k ≤ d} p_t(k)
//! D_t(d_i) = P_t(d_i) - P_t(d_{i-1}),   d_i = 2^i,  d_{-1} = 0
//! ```
//!
//! so bin `i` holds the mass of degrees in `(2^(i-1), 2^i]` and bin 0 holds
//! exactly `d = 1`. Averaging `D_t` over windows gives `D(d_i)` and the
//! population standard deviation `σ(d_i)`.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::hypersparse::{Axis, DegreeVector, Reduction, TrafficMatrix};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("empty histogram has no probability distribution")]
    EmptyHistogram,
    #[error("no pooled distributions to average")]
    NoPools,
    #[error("cannot average {0} with {1}")]
    MixedKinds(QuantityKind, QuantityKind),
    #[error("pooled distribution has no nonzero bin")]
    AllZero,
    #[error("pooled csv: {0}")]
    Csv(String),
}

/// The five network quantities extracted from a traffic matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityKind {
    SourcePackets,
    SourceFanOut,
    LinkPackets,
    DestinationFanIn,
    DestinationPackets,
}

impl QuantityKind {
    pub const ALL: [QuantityKind; 5] = [
        QuantityKind::SourcePackets,
        QuantityKind::SourceFanOut,
        QuantityKind::LinkPackets,
        QuantityKind::DestinationFanIn,
        QuantityKind::DestinationPackets,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuantityKind::SourcePackets => "source_packets",
            QuantityKind::SourceFanOut => "source_fan_out",
            QuantityKind::LinkPackets => "link_packets",
            QuantityKind::DestinationFanIn => "destination_fan_in",
            QuantityKind::DestinationPackets => "destination_packets",
        }
    }
}

impl fmt::Display for QuantityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuantityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QuantityKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown quantity {s:?}"))
    }
}

/// Key joining source and destination in link-level vectors.
pub const LINK_SEPARATOR: &str = "→";

/// Extracts one network quantity as a keyed vector.
pub fn network_quantity(m: &TrafficMatrix, kind: QuantityKind) -> DegreeVector {
    match kind {
        QuantityKind::SourcePackets => m.reduce(Axis::Row, Reduction::Sum),
        QuantityKind::SourceFanOut => m.reduce(Axis::Row, Reduction::Nnz),
        QuantityKind::DestinationFanIn => m.reduce(Axis::Col, Reduction::Nnz),
        QuantityKind::DestinationPackets => m.reduce(Axis::Col, Reduction::Sum),
        QuantityKind::LinkPackets => DegreeVector {
            kind,
            values: m
                .entries()
                .map(|(s, d, c)| (format!("{s}{LINK_SEPARATOR}{d}"), c))
                .collect(),
        },
    }
}

/// `n_t(d)`: how many keys have each value `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeHistogram {
    pub kind: QuantityKind,
    pub counts: BTreeMap<u64, u64>,
}

impl DegreeHistogram {
    pub fn max_degree(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `Σ_d n(d)·d`.
    pub fn weighted_total(&self) -> u64 {
        self.counts.iter().map(|(d, n)| d * n).sum()
    }
}

pub fn degree_histogram(v: &DegreeVector) -> DegreeHistogram {
    let mut counts = BTreeMap::new();
    for &d in v.values.values() {
        if d > 0 {
            *counts.entry(d).or_insert(0) += 1;
        }
    }
    DegreeHistogram {
        kind: v.kind,
        counts,
    }
}

/// Histogram of a quantity straight from the matrix, without building keys.
pub fn quantity_histogram(m: &TrafficMatrix, kind: QuantityKind) -> DegreeHistogram {
    let mut counts = BTreeMap::new();
    let mut bump = |d: u64| *counts.entry(d).or_insert(0u64) += 1;
    match kind {
        QuantityKind::SourcePackets => {
            for key in m.row_keys() {
                bump(m.row(key).map_or(0, |r| r.values().sum()));
            }
        }
        QuantityKind::SourceFanOut => {
            for key in m.row_keys() {
                bump(m.row(key).map_or(0, |r| r.len() as u64));
            }
        }
        QuantityKind::LinkPackets => {
            for (_, _, c) in m.entries() {
                bump(c);
            }
        }
        QuantityKind::DestinationFanIn | QuantityKind::DestinationPackets => {
            let mut per_col: std::collections::HashMap<&str, u64> =
                std::collections::HashMap::new();
            for (_, dst, c) in m.entries() {
                let w = if kind == QuantityKind::DestinationFanIn {
                    1
                } else {
                    c
                };
                *per_col.entry(dst).or_insert(0) += w;
            }
            for d in per_col.into_values() {
                bump(d);
            }
        }
    }
    DegreeHistogram { kind, counts }
}

/// `p_t(d) = n_t(d) / Σ n_t(d)`.
pub fn probability(h: &DegreeHistogram) -> Result<BTreeMap<u64, f64>, StatsError> {
    let total: u64 = h.counts.values().sum();
    if total == 0 {
        return Err(StatsError::EmptyHistogram);
    }
    let total = total as f64;
    Ok(h.counts
        .iter()
        .map(|(&d, &n)| (d, n as f64 / total))
        .collect())
}

/// Running (compensated) sum of `p` in increasing `d`.
pub fn cumulative(p: &BTreeMap<u64, f64>) -> BTreeMap<u64, f64> {
    let mut acc = CompensatedSum::new();
    p.iter()
        .map(|(&d, &pd)| {
            acc.add(pd);
            (d, acc.value())
        })
        .collect()
}

/// Bin edges `1, 2, 4, …, 2^I` with `2^I` the smallest power of two `≥ d_max`.
pub fn bin_edges(d_max: u64) -> Vec<u64> {
    let d_max = d_max.max(1);
    let top = d_max.next_power_of_two();
    let mut edges = Vec::with_capacity(top.trailing_zeros() as usize + 1);
    let mut e = 1u64;
    loop {
        edges.push(e);
        if e >= top {
            break;
        }
        e <<= 1;
    }
    edges
}

/// Index of the logarithmic bin holding degree `d ≥ 1`.
pub fn bin_index(d: u64) -> usize {
    debug_assert!(d >= 1);
    d.next_power_of_two().trailing_zeros() as usize
}

/// Differential cumulative probability on binary-logarithmic bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PooledDistribution {
    pub kind: QuantityKind,
    pub bin_edges: Vec<u64>,
    /// `D(d_i)`; mean over windows when `n_windows > 1`.
    pub values: Vec<f64>,
    /// `σ(d_i)`; all zero for a single window.
    pub sigmas: Vec<f64>,
    pub n_windows: usize,
    /// Largest raw degree with nonzero probability.
    pub d_max: u64,
}

impl PooledDistribution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }

    /// `D(1)`, the mass at degree one.
    pub fn d1(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Copy with bins zero-padded up to `n` bins.
    pub fn padded(&self, n: usize) -> PooledDistribution {
        let mut out = self.clone();
        if n > out.values.len() {
            let start = out.bin_edges.len();
            out.values.resize(n, 0.0);
            out.sigmas.resize(n, 0.0);
            out.bin_edges.extend((start..n).map(|i| 1u64 << i));
        }
        out
    }
}

/// Pools a cumulative distribution:
/// `D(d_i) = P(d_i) - P(d_{i-1})`, where `P` is a right-continuous step
/// function over the keys of `cum`.
pub fn log_pool(cum: &BTreeMap<u64, f64>, d_max: u64, kind: QuantityKind) -> PooledDistribution {
    let at = |d: u64| -> f64 { cum.range(..=d).next_back().map_or(0.0, |(_, &p)| p) };
    let edges = bin_edges(d_max);
    let mut prev = 0.0;
    let values = edges
        .iter()
        .map(|&e| {
            let p = at(e);
            let v = p - prev;
            prev = p;
            v.max(0.0)
        })
        .collect::<Vec<_>>();
    PooledDistribution {
        kind,
        sigmas: vec![0.0; edges.len()],
        bin_edges: edges,
        values,
        n_windows: 1,
        d_max,
    }
}

/// `probability → cumulative → log_pool` for one window.
pub fn pool_histogram(h: &DegreeHistogram) -> Result<PooledDistribution, StatsError> {
    let p = probability(h)?;
    let d_max = h.max_degree().ok_or(StatsError::EmptyHistogram)?;
    Ok(log_pool(&cumulative(&p), d_max, h.kind))
}

/// Per-bin mean and population standard deviation across windows.
///
/// Inputs are reduced in the given order; shorter inputs are zero-padded.
pub fn window_mean_std(pools: &[PooledDistribution]) -> Result<PooledDistribution, StatsError> {
    let first = pools.first().ok_or(StatsError::NoPools)?;
    if let Some(other) = pools.iter().find(|p| p.kind != first.kind) {
        return Err(StatsError::MixedKinds(first.kind, other.kind));
    }
    let bins = pools.iter().map(|p| p.values.len()).max().unwrap_or(0);
    let n = pools.len() as f64;

    let mut means = vec![0.0; bins];
    let mut m2 = vec![0.0; bins];
    for (k, pool) in pools.iter().enumerate() {
        let count = (k + 1) as f64;
        for i in 0..bins {
            let x = pool.values.get(i).copied().unwrap_or(0.0);
            let delta = x - means[i];
            means[i] += delta / count;
            m2[i] += delta * (x - means[i]);
        }
    }
    let sigmas = m2.iter().map(|s| (s.max(0.0) / n).sqrt()).collect();

    Ok(PooledDistribution {
        kind: first.kind,
        bin_edges: (0..bins).map(|i| 1u64 << i).collect(),
        values: means,
        sigmas,
        n_windows: pools.len(),
        d_max: pools.iter().map(|p| p.d_max).max().unwrap_or(0),
    })
}

/// `d_max = argmax(D(d) > 0)`, tracked as the largest raw degree.
pub fn observed_dmax(pool: &PooledDistribution) -> Result<u64, StatsError> {
    if pool.values.iter().any(|&v| v > 0.0) && pool.d_max >= 1 {
        Ok(pool.d_max)
    } else {
        Err(StatsError::AllZero)
    }
}

pub const POOLED_CSV_HEADER: &str = "kind,bin_edge,mean,sigma,n_windows";

/// Pooled-distribution CSV, one line per bin after a header line.
pub fn pooled_to_csv(pool: &PooledDistribution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{POOLED_CSV_HEADER}");
    for ((edge, mean), sigma) in pool.bin_edges.iter().zip(&pool.values).zip(&pool.sigmas) {
        let _ = writeln!(
            out,
            "{},{edge},{mean:?},{sigma:?},{}",
            pool.kind, pool.n_windows
        );
    }
    out
}

/// Reads [`pooled_to_csv`] output. `d_max` is not part of the file and is
/// taken from the caller.
pub fn pooled_from_csv(text: &str, d_max: u64) -> Result<PooledDistribution, StatsError> {
    let err = |msg: String| StatsError::Csv(msg);
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == POOLED_CSV_HEADER => {}
        other => return Err(err(format!("unexpected header {other:?}"))),
    }
    let mut kind = None;
    let mut n_windows = 0;
    let (mut edges, mut values, mut sigmas) = (Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(err(format!("row {}: expected 5 fields", n + 1)));
        }
        let k: QuantityKind = f[0].parse().map_err(err)?;
        if *kind.get_or_insert(k) != k {
            return Err(err(format!("row {}: mixed kinds", n + 1)));
        }
        let bad = |what: &str| err(format!("row {}: bad {what}", n + 1));
        edges.push(f[1].parse::<u64>().map_err(|_| bad("bin_edge"))?);
        values.push(f[2].parse::<f64>().map_err(|_| bad("mean"))?);
        sigmas.push(f[3].parse::<f64>().map_err(|_| bad("sigma"))?);
        n_windows = f[4].parse::<usize>().map_err(|_| bad("n_windows"))?;
    }
    Ok(PooledDistribution {
        kind: kind.ok_or_else(|| err("no rows".into()))?,
        bin_edges: edges,
        values,
        sigmas,
        n_windows,
        d_max,
    })
}
