//! Brute-force dense reference implementations and random test matrices.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use hstraffic::topology::CategoryStats;
use hstraffic::TrafficMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Square dense matrix over node keys shared by rows and columns.
pub struct Dense {
    pub keys: Vec<String>,
    pub a: Vec<Vec<u64>>,
}

impl Dense {
    pub fn n(&self) -> usize {
        self.keys.len()
    }

    pub fn to_sparse(&self) -> TrafficMatrix {
        let mut m = TrafficMatrix::new();
        for i in 0..self.n() {
            for j in 0..self.n() {
                if self.a[i][j] > 0 {
                    m.accumulate(&self.keys[i], &self.keys[j], self.a[i][j]);
                }
            }
        }
        m
    }

    pub fn d_out(&self) -> Vec<u64> {
        self.a
            .iter()
            .map(|r| r.iter().filter(|&&x| x > 0).count() as u64)
            .collect()
    }

    pub fn d_in(&self) -> Vec<u64> {
        (0..self.n())
            .map(|j| (0..self.n()).filter(|&i| self.a[i][j] > 0).count() as u64)
            .collect()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.a.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.n())
            .map(|j| (0..self.n()).map(|i| self.a[i][j]).sum())
            .collect()
    }

    /// `(valid_packets, unique_links, unique_sources, unique_destinations)`.
    pub fn aggregates(&self) -> (u64, u64, u64, u64) {
        let packets = self.row_sums().iter().sum();
        let links = self.d_out().iter().sum();
        let sources = self.d_out().iter().filter(|&&d| d > 0).count() as u64;
        let dests = self.d_in().iter().filter(|&&d| d > 0).count() as u64;
        (packets, links, sources, dests)
    }

    /// Nonzero entries of a per-node vector keyed by node name.
    pub fn keyed(&self, v: &[u64]) -> BTreeMap<String, u64> {
        self.keys
            .iter()
            .zip(v)
            .filter(|(_, &x)| x > 0)
            .map(|(k, &x)| (k.clone(), x))
            .collect()
    }

    pub fn link_packets(&self, sep: &str) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for i in 0..self.n() {
            for j in 0..self.n() {
                if self.a[i][j] > 0 {
                    out.insert(
                        format!("{}{sep}{}", self.keys[i], self.keys[j]),
                        self.a[i][j],
                    );
                }
            }
        }
        out
    }

    /// Stats of the block `rows × cols`.
    pub fn block(&self, rows: &[bool], cols: &[bool]) -> CategoryStats {
        let mut s = CategoryStats::default();
        let mut used_cols = vec![false; self.n()];
        for i in 0..self.n() {
            let mut row_used = false;
            for j in 0..self.n() {
                if rows[i] && cols[j] && self.a[i][j] > 0 {
                    s.packets += self.a[i][j];
                    s.links += 1;
                    row_used = true;
                    used_cols[j] = true;
                }
            }
            s.sources += u64::from(row_used);
        }
        s.destinations = used_cols.iter().filter(|&&u| u).count() as u64;
        s
    }

    /// Repeated argmax of `d_out + d_in` with row and column removal.
    pub fn supernodes(&self, k: usize) -> Vec<usize> {
        let n = self.n();
        let mut gone = vec![false; n];
        let mut picked = Vec::new();
        while picked.len() < k {
            let mut best: Option<(u64, u64, usize)> = None;
            for x in 0..n {
                if gone[x] {
                    continue;
                }
                let (mut deg, mut pk) = (0, 0);
                for y in 0..n {
                    if !gone[y] && self.a[x][y] > 0 {
                        deg += 1;
                        pk += self.a[x][y];
                    }
                    if !gone[y] && self.a[y][x] > 0 {
                        deg += 1;
                        pk += self.a[y][x];
                    }
                }
                let better = match best {
                    None => deg > 0,
                    Some((bd, bp, bx)) => {
                        (deg, pk) > (bd, bp)
                            || ((deg, pk) == (bd, bp) && self.keys[x] < self.keys[bx])
                    }
                };
                if better {
                    best = Some((deg, pk, x));
                }
            }
            match best {
                Some((deg, _, x)) if deg > 1 => {
                    gone[x] = true;
                    picked.push(x);
                }
                _ => break,
            }
        }
        picked
    }

    pub fn categories(&self, k: usize) -> DenseTopology {
        let n = self.n();
        let (d_out, d_in) = (self.d_out(), self.d_in());
        let i1: Vec<bool> = d_out.iter().map(|&d| d == 1).collect();
        let j1: Vec<bool> = d_in.iter().map(|&d| d == 1).collect();
        let sn = self.supernodes(k);
        let is_sn: Vec<bool> = (0..n).map(|x| sn.contains(&x)).collect();
        let i_core: Vec<bool> = (0..n).map(|x| d_out[x] > 1 && !is_sn[x]).collect();
        let j_core: Vec<bool> = (0..n).map(|x| d_in[x] > 1 && !is_sn[x]).collect();

        let isolated = self.block(&i1, &j1);

        // Supernode leaves: i1 rows into each supernode column and j1
        // columns out of each supernode row, skipping isolated links.
        let mut leaf_src = BTreeSet::new();
        let mut leaf_dst = BTreeSet::new();
        let mut sn_leaves = CategoryStats::default();
        for &s in &sn {
            for i in 0..n {
                if i1[i] && !j1[s] && self.a[i][s] > 0 {
                    leaf_src.insert(i);
                    sn_leaves.packets += self.a[i][s];
                    sn_leaves.links += 1;
                }
            }
            for j in 0..n {
                if j1[j] && !i1[s] && self.a[s][j] > 0 {
                    leaf_dst.insert(j);
                    sn_leaves.packets += self.a[s][j];
                    sn_leaves.links += 1;
                }
            }
        }
        sn_leaves.sources = leaf_src.len() as u64;
        sn_leaves.destinations = leaf_dst.len() as u64;

        let core = self.block(&i_core, &j_core);
        let to_core = self.block(&i1, &j_core);
        let from_core = self.block(&i_core, &j1);
        let core_leaves = CategoryStats {
            sources: to_core.sources,
            packets: to_core.packets + from_core.packets,
            links: to_core.links + from_core.links,
            destinations: from_core.destinations,
        };

        DenseTopology {
            supernodes: sn.iter().map(|&x| self.keys[x].clone()).collect(),
            isolated,
            supernode_leaves: sn_leaves,
            core,
            core_leaves,
            degree_one_sources: i1.iter().filter(|&&b| b).count() as u64,
            degree_one_destinations: j1.iter().filter(|&&b| b).count() as u64,
        }
    }
}

pub struct DenseTopology {
    pub supernodes: Vec<String>,
    pub isolated: CategoryStats,
    pub supernode_leaves: CategoryStats,
    pub core: CategoryStats,
    pub core_leaves: CategoryStats,
    pub degree_one_sources: u64,
    pub degree_one_destinations: u64,
}

/// Random matrix on `n` nodes with skewed endpoints so that hubs, leaves
/// and isolated pairs all occur.
pub fn random_dense(rng: &mut ChaCha8Rng, n: usize) -> Dense {
    let keys = (0..n).map(|i| format!("n{i}")).collect();
    let mut a = vec![vec![0u64; n]; n];
    let edges = rng.gen_range(1..=2 * n);
    let skew = rng.gen_range(1.0..4.0);
    for _ in 0..edges {
        let pick = |rng: &mut ChaCha8Rng| ((rng.gen::<f64>().powf(skew)) * n as f64) as usize % n;
        let i = if rng.gen_bool(0.5) {
            pick(rng)
        } else {
            rng.gen_range(0..n)
        };
        let j = if rng.gen_bool(0.5) {
            pick(rng)
        } else {
            rng.gen_range(0..n)
        };
        a[i][j] += rng.gen_range(1..=4);
    }
    Dense { keys, a }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
