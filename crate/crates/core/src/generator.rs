//! Seeded synthetic traffic with known topology.
//!
//! A mixture is built from isolated pairs, one star whose leaves all send to
//! its center, a dense core and leaves hanging off the core. Optionally the
//! remaining packets go to extra sources whose fan-outs are drawn from a
//! modified Zipf-Mandelbrot distribution.
//!
//! Each component gets its own first octet so that addresses never collide:
//!
//! | octet | nodes |
//! |-------|-------|
//! | 10/11 | isolated sources / destinations |
//! | 20/21 | star center / star leaves |
//! | 30/31 | core / core leaves |
//! | 40/41 | sampled sources / their destinations |

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ingest::PacketRecord;
use crate::topology::CategoryStats;
use crate::zm::ZmParams;

/// Start of generated timestamps (2015-12-02 00:00 UTC), in microseconds.
pub const BASE_TIMESTAMP_US: u64 = 1_449_014_400_000_000;
const MAX_INDEX: u64 = (1 << 24) - 1;
const MAX_CORE: u64 = 2000;
pub const MAX_SAMPLER_DMAX: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("infeasible generator spec: {0}")]
pub struct SpecError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorSpec {
    pub n_isolated_pairs: u64,
    pub supernode_leaf_count: u64,
    pub core_size: u64,
    pub core_density: f64,
    pub core_leaf_count: u64,
    pub degree_model: Option<ZmParams>,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            n_isolated_pairs: 0,
            supernode_leaf_count: 0,
            core_size: 0,
            core_density: 0.5,
            core_leaf_count: 0,
            degree_model: None,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let err = |m: String| Err(SpecError(m));
        for (name, n) in [
            ("n_isolated_pairs", self.n_isolated_pairs),
            ("supernode_leaf_count", self.supernode_leaf_count),
            ("core_leaf_count", self.core_leaf_count),
        ] {
            if n > MAX_INDEX {
                return err(format!("{name} must be at most {MAX_INDEX}"));
            }
        }
        if self.supernode_leaf_count == 1 {
            return err("a star needs at least 2 leaves".into());
        }
        if self.core_size > 0 {
            if self.core_size < 3 {
                return err(format!(
                    "core_size must be 0 or at least 3, got {}",
                    self.core_size
                ));
            }
            if self.core_size > MAX_CORE {
                return err(format!("core_size must be at most {MAX_CORE}"));
            }
            if !(self.core_density > 0.0 && self.core_density <= 1.0) {
                return err(format!(
                    "core_density must lie in (0, 1], got {}",
                    self.core_density
                ));
            }
        } else if self.core_leaf_count > 0 {
            return err("core leaves need a core".into());
        }
        if let Some(p) = &self.degree_model {
            if p.d_max > MAX_SAMPLER_DMAX {
                return err(format!(
                    "degree model d_max must be at most {MAX_SAMPLER_DMAX}"
                ));
            }
        }
        Ok(())
    }

    fn has_structure(&self) -> bool {
        self.n_isolated_pairs + self.supernode_leaf_count + self.core_size > 0
    }
}

/// Exact bookkeeping of what was generated.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GroundTruth {
    pub packets: u64,
    pub links: u64,
    pub isolated_links: CategoryStats,
    pub supernode_leaves: CategoryStats,
    pub core: CategoryStats,
    pub core_leaves: CategoryStats,
    pub star_center: Option<String>,
    /// Fan-out of every sampled source, in emission order.
    pub sampled_fan_outs: Vec<u64>,
    /// False when sampled sources are present: their links fall into
    /// categories that depend on the draw, so only the structured part is
    /// tallied above.
    pub categories_exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Node {
    octet: u8,
    index: u32,
}

impl Node {
    fn new(octet: u8, index: u64) -> Node {
        Node {
            octet,
            index: index as u32,
        }
    }

    fn address(self) -> String {
        let i = self.index;
        format!(
            "{}.{}.{}.{}",
            self.octet,
            (i >> 16) & 255,
            (i >> 8) & 255,
            i & 255
        )
    }
}

/// Inverse-CDF sampler for `p(d) ∝ (d + δ)^-α` on `1..=d_max`.
#[derive(Debug, Clone)]
pub struct ZmSampler {
    cdf: Vec<f64>,
}

impl ZmSampler {
    pub fn new(p: &ZmParams) -> Result<Self, SpecError> {
        if p.d_max > MAX_SAMPLER_DMAX {
            return Err(SpecError(format!(
                "sampler d_max must be at most {MAX_SAMPLER_DMAX}"
            )));
        }
        let mut cdf = Vec::with_capacity(p.d_max as usize);
        let mut acc = 0.0;
        for d in 1..=p.d_max {
            acc += crate::zm::rho(d, p);
            cdf.push(acc);
        }
        Ok(ZmSampler { cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let total = *self.cdf.last().expect("d_max >= 1");
        let u = rng.gen::<f64>() * total;
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.cdf.len() - 1) as u64 + 1
    }
}

/// Lazily expands the generated links into packet records, one link at a
/// time, with timestamps one microsecond apart.
pub struct SyntheticStream {
    links: std::vec::IntoIter<(Node, Node, u64)>,
    current: Option<(String, String, u64)>,
    next_ts: u64,
}

impl Iterator for SyntheticStream {
    type Item = PacketRecord;

    fn next(&mut self) -> Option<PacketRecord> {
        loop {
            if let Some((src, dst, left)) = &mut self.current {
                if *left > 0 {
                    *left -= 1;
                    let ts = self.next_ts;
                    self.next_ts += 1;
                    return Some(PacketRecord::tcp_v4(ts, src.clone(), dst.clone()));
                }
            }
            let (s, d, c) = self.links.next()?;
            self.current = Some((s.address(), d.address(), c));
        }
    }
}

/// Builds `n_packets` valid packets from `spec`.
///
/// Without a degree model every structured link gets one packet and the
/// rest are dealt round-robin over the links. With one, structured links
/// get exactly one packet and sampled sources absorb the remainder; the
/// last sampled source is cut short so the total is exact.
pub fn generate_synthetic(
    spec: &GeneratorSpec,
    n_packets: u64,
) -> Result<(SyntheticStream, GroundTruth), SpecError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut truth = GroundTruth {
        categories_exact: spec.degree_model.is_none(),
        ..GroundTruth::default()
    };

    // Structured links, each tagged with the category it counts toward.
    let mut links: Vec<(Node, Node)> = Vec::new();
    let mut tags: Vec<u8> = Vec::new();
    for i in 0..spec.n_isolated_pairs {
        links.push((Node::new(10, i), Node::new(11, i)));
        tags.push(0);
    }
    let center = Node::new(20, 1);
    if spec.supernode_leaf_count > 0 {
        truth.star_center = Some(center.address());
        for i in 0..spec.supernode_leaf_count {
            links.push((Node::new(21, i), center));
            tags.push(1);
        }
    }
    let n = spec.core_size;
    if n > 0 {
        let core = core_edges(n, spec.core_density, &mut rng);
        let mut degree = vec![0u64; n as usize];
        for &(u, v) in &core {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
            links.push((Node::new(30, u), Node::new(30, v)));
            tags.push(2);
        }
        for k in 0..spec.core_leaf_count {
            let hub = (k / 2) % n;
            degree[hub as usize] += 1;
            let (leaf, hub_node) = (Node::new(31, k), Node::new(30, hub));
            links.push(if k % 2 == 0 {
                (leaf, hub_node)
            } else {
                (hub_node, leaf)
            });
            tags.push(3);
        }
        let top = degree.iter().copied().max().unwrap_or(0);
        if spec.supernode_leaf_count <= top {
            return Err(SpecError(format!(
                "the star ({} leaves) must exceed every core node's degree (max {top})",
                spec.supernode_leaf_count
            )));
        }
    }

    let structured = links.len() as u64;
    if n_packets < structured {
        return Err(SpecError(format!(
            "{n_packets} packets cannot cover {structured} structured links"
        )));
    }
    if spec.degree_model.is_none() && structured == 0 && n_packets > 0 {
        return Err(SpecError("spec generates no links".into()));
    }

    let mut counts = vec![1u64; links.len()];
    let mut sampled: Vec<(Node, Node, u64)> = Vec::new();
    match &spec.degree_model {
        None if structured > 0 => {
            let extra = n_packets - structured;
            let (each, rem) = (extra / structured, extra % structured);
            for (i, c) in counts.iter_mut().enumerate() {
                *c += each + u64::from((i as u64) < rem);
            }
        }
        None => {}
        Some(p) => {
            let sampler = ZmSampler::new(p)?;
            let mut left = n_packets - structured;
            let (mut src, mut dst) = (0u64, 0u64);
            while left > 0 {
                let f = sampler.sample(&mut rng).min(left);
                if src > MAX_INDEX || dst + f > MAX_INDEX + 1 {
                    return Err(SpecError(
                        "too many sampled nodes for the address space".into(),
                    ));
                }
                for _ in 0..f {
                    sampled.push((Node::new(40, src), Node::new(41, dst), 1));
                    dst += 1;
                }
                truth.sampled_fan_outs.push(f);
                left -= f;
                src += 1;
            }
        }
    }
    if !spec.has_structure() && spec.degree_model.is_none() {
        return Err(SpecError("spec generates no links".into()));
    }

    tally(&mut truth, spec, &links, &tags, &counts);
    truth.links = structured + sampled.len() as u64;
    truth.packets = counts.iter().sum::<u64>() + sampled.len() as u64;

    let mut all: Vec<(Node, Node, u64)> = links
        .into_iter()
        .zip(counts)
        .map(|((s, d), c)| (s, d, c))
        .collect();
    all.extend(sampled);
    Ok((
        SyntheticStream {
            links: all.into_iter(),
            current: None,
            next_ts: BASE_TIMESTAMP_US,
        },
        truth,
    ))
}

/// Directed double ring `u -> u+1`, `u -> u+2` plus random extra edges up to
/// `round(density · n(n-1))`.
fn core_edges(n: u64, density: f64, rng: &mut ChaCha8Rng) -> Vec<(u64, u64)> {
    let mut edges: Vec<(u64, u64)> = (0..n)
        .flat_map(|u| [(u, (u + 1) % n), (u, (u + 2) % n)])
        .collect();
    let target = ((density * (n * (n - 1)) as f64).round() as u64).max(edges.len() as u64);
    let need = (target as usize).saturating_sub(edges.len());
    if need > 0 {
        let ring: std::collections::HashSet<(u64, u64)> = edges.iter().copied().collect();
        let mut extra: Vec<(u64, u64)> = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| u != v && !ring.contains(&(u, v)))
            .collect();
        extra.shuffle(rng);
        extra.truncate(need);
        extra.sort_unstable();
        edges.extend(extra);
    }
    edges
}

fn tally(
    truth: &mut GroundTruth,
    spec: &GeneratorSpec,
    links: &[(Node, Node)],
    tags: &[u8],
    counts: &[u64],
) {
    let packets = |tag: u8| -> u64 {
        tags.iter()
            .zip(counts)
            .filter(|(&t, _)| t == tag)
            .map(|(_, &c)| c)
            .sum()
    };
    let iso = spec.n_isolated_pairs;
    truth.isolated_links = CategoryStats {
        sources: iso,
        packets: packets(0),
        links: iso,
        destinations: iso,
    };
    let star = spec.supernode_leaf_count;
    truth.supernode_leaves = CategoryStats {
        sources: star,
        packets: packets(1),
        links: star,
        destinations: 0,
    };
    let n_core = links.iter().zip(tags).filter(|(_, &t)| t == 2).count() as u64;
    truth.core = CategoryStats {
        sources: spec.core_size,
        packets: packets(2),
        links: n_core,
        destinations: spec.core_size,
    };
    let cl = spec.core_leaf_count;
    truth.core_leaves = CategoryStats {
        sources: cl.div_ceil(2),
        packets: packets(3),
        links: cl,
        destinations: cl / 2,
    };
}
