//! Decomposition of a traffic matrix into isolated links, supernodes and
//! their leaves, the core and the core leaves.
//!
//! With `i1 = {d_out = 1}`, `j1 = {d_in = 1}` and supernode set `S`, rows
//! split into `i1`, `S \ i1` and `i_core`, columns into `j1`, `S \ j1` and
//! `j_core`. Every stored entry lands in exactly one of the nine blocks:
//!
//! ```text
//!              j1              S \ j1          j_core
//! i1           isolated        supernode leaf  core leaf
//! S \ i1       supernode leaf  supernode       supernode
//! i_core       core leaf       supernode       core
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::hypersparse::{AggregateSummary, Axis, DegreeVector, Reduction, TrafficMatrix};

pub const DEFAULT_SUPERNODES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FanVectors {
    pub d_out: DegreeVector,
    pub d_in: DegreeVector,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CategoryStats {
    pub sources: u64,
    pub packets: u64,
    pub links: u64,
    pub destinations: u64,
}

impl CategoryStats {
    /// Each count divided by the matching matrix total; zero totals give zero.
    pub fn fractions(&self, totals: &AggregateSummary) -> [f64; 4] {
        let frac = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        [
            frac(self.sources, totals.unique_sources),
            frac(self.packets, totals.valid_packets),
            frac(self.links, totals.unique_links),
            frac(self.destinations, totals.unique_destinations),
        ]
    }
}

impl std::ops::Add for CategoryStats {
    type Output = CategoryStats;

    fn add(self, o: CategoryStats) -> CategoryStats {
        CategoryStats {
            sources: self.sources + o.sources,
            packets: self.packets + o.packets,
            links: self.links + o.links,
            destinations: self.destinations + o.destinations,
        }
    }
}

/// How the core source and destination sets are chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreRule {
    /// Degree above one, supernodes removed.
    #[default]
    Exclusion,
    /// `1 < d_out < d_out(first supernode)` and likewise for `d_in`; no upper
    /// bound without a supernode. Supernodes are not removed.
    StrictInequality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TopologyOptions {
    pub max_supernodes: usize,
    pub core_rule: CoreRule,
}

impl Default for TopologyOptions {
    fn default() -> Self {
        TopologyOptions {
            max_supernodes: DEFAULT_SUPERNODES,
            core_rule: CoreRule::Exclusion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    IsolatedLinks,
    SupernodeLeaves,
    Supernodes,
    Core,
    CoreLeaves,
    Residual,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::IsolatedLinks,
        Category::SupernodeLeaves,
        Category::Supernodes,
        Category::Core,
        Category::CoreLeaves,
        Category::Residual,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::IsolatedLinks => "isolated_links",
            Category::SupernodeLeaves => "supernode_leaves",
            Category::Supernodes => "supernodes",
            Category::Core => "core",
            Category::CoreLeaves => "core_leaves",
            Category::Residual => "residual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyBreakdown {
    pub supernodes: Vec<String>,
    pub isolated_links: CategoryStats,
    pub supernode_leaves: CategoryStats,
    /// Traffic among supernodes and between supernodes and the core.
    pub supernode_traffic: CategoryStats,
    pub core: CategoryStats,
    pub core_leaves: CategoryStats,
    /// Entries in no category. Always empty under [`CoreRule::Exclusion`].
    pub residual: CategoryStats,
    pub totals: AggregateSummary,
}

impl TopologyBreakdown {
    pub fn get(&self, c: Category) -> CategoryStats {
        match c {
            Category::IsolatedLinks => self.isolated_links,
            Category::SupernodeLeaves => self.supernode_leaves,
            Category::Supernodes => self.supernode_traffic,
            Category::Core => self.core,
            Category::CoreLeaves => self.core_leaves,
            Category::Residual => self.residual,
        }
    }

    pub fn fractions(&self, c: Category) -> [f64; 4] {
        self.get(c).fractions(&self.totals)
    }
}

pub fn fan_vectors(m: &TrafficMatrix) -> FanVectors {
    FanVectors {
        d_out: m.reduce(Axis::Row, Reduction::Nnz),
        d_in: m.reduce(Axis::Col, Reduction::Nnz),
    }
}

/// Distinct rows, distinct columns, packets and links of a set of entries.
#[derive(Default)]
struct Tally<'a> {
    sources: HashSet<&'a str>,
    destinations: HashSet<&'a str>,
    packets: u64,
    links: u64,
}

impl<'a> Tally<'a> {
    fn add(&mut self, src: &'a str, dst: &'a str, count: u64) {
        self.sources.insert(src);
        self.destinations.insert(dst);
        self.packets += count;
        self.links += 1;
    }

    fn stats(&self) -> CategoryStats {
        CategoryStats {
            sources: self.sources.len() as u64,
            packets: self.packets,
            links: self.links,
            destinations: self.destinations.len() as u64,
        }
    }
}

/// Source and destination leaves counted separately, as for supernode and
/// core leaves: packets and links add, sources come from the first part and
/// destinations from the second.
#[derive(Default)]
struct LeafTally<'a> {
    to_hub: Tally<'a>,
    from_hub: Tally<'a>,
}

impl LeafTally<'_> {
    fn stats(&self) -> CategoryStats {
        CategoryStats {
            sources: self.to_hub.sources.len() as u64,
            packets: self.to_hub.packets + self.from_hub.packets,
            links: self.to_hub.links + self.from_hub.links,
            destinations: self.from_hub.destinations.len() as u64,
        }
    }
}

fn ones(v: &DegreeVector) -> HashSet<&str> {
    v.values
        .iter()
        .filter(|(_, &d)| d == 1)
        .map(|(k, _)| k.as_str())
        .collect()
}

/// Links whose source and destination each have exactly one connection.
pub fn isolated_links(m: &TrafficMatrix, f: &FanVectors) -> CategoryStats {
    let (i1, j1) = (ones(&f.d_out), ones(&f.d_in));
    let mut t = Tally::default();
    for (s, d, c) in m.entries() {
        if i1.contains(s) && j1.contains(d) {
            t.add(s, d, c);
        }
    }
    t.stats()
}

/// Up to `k` nodes of largest `d_out + d_in`, each removed (row and column)
/// before the next is chosen. Stops once the largest remaining combined
/// degree is at most one. Ties go to more packets, then the smaller key.
pub fn find_supernodes(m: &TrafficMatrix, k: usize) -> Vec<String> {
    // node -> (combined degree, packets)
    let mut score: HashMap<&str, (u64, u64)> = HashMap::new();
    let mut incoming: HashMap<&str, Vec<(&str, u64)>> = HashMap::new();
    for (s, d, c) in m.entries() {
        let e = score.entry(s).or_default();
        e.0 += 1;
        e.1 += c;
        let e = score.entry(d).or_default();
        e.0 += 1;
        e.1 += c;
        incoming.entry(d).or_default().push((s, c));
    }

    let mut chosen = Vec::new();
    let mut removed: HashSet<&str> = HashSet::new();
    while chosen.len() < k {
        let best = score
            .iter()
            .filter(|(key, _)| !removed.contains(*key))
            .max_by(|(ka, a), (kb, b)| a.cmp(b).then_with(|| kb.cmp(ka)));
        let Some((&node, &(degree, _))) = best else {
            break;
        };
        if degree <= 1 {
            break;
        }
        removed.insert(node);
        chosen.push(node.to_owned());
        if let Some(row) = m.row(node) {
            for (dst, &c) in row {
                if let Some(e) = score.get_mut(dst.as_str()) {
                    e.0 -= 1;
                    e.1 -= c;
                }
            }
        }
        if let Some(col) = incoming.get(node) {
            for &(src, c) in col {
                if src != node {
                    let e = score.get_mut(src).expect("source scored");
                    e.0 -= 1;
                    e.1 -= c;
                }
            }
        }
    }
    chosen
}

/// Degree-one sources sending to a supernode and degree-one destinations
/// fed by one. Links that are already isolated are not leaves.
pub fn supernode_leaves(m: &TrafficMatrix, supernodes: &[String], f: &FanVectors) -> CategoryStats {
    let (i1, j1) = (ones(&f.d_out), ones(&f.d_in));
    let sn: HashSet<&str> = supernodes.iter().map(String::as_str).collect();
    let mut t = LeafTally::default();
    for (s, d, c) in m.entries() {
        if i1.contains(s) && j1.contains(d) {
            continue;
        }
        if i1.contains(s) && sn.contains(d) {
            t.to_hub.add(s, d, c);
        } else if sn.contains(s) && j1.contains(d) {
            t.from_hub.add(s, d, c);
        }
    }
    t.stats()
}

/// Core source and destination sets under the default exclusion rule.
pub fn core_membership(
    supernodes: &[String],
    f: &FanVectors,
) -> (BTreeSet<String>, BTreeSet<String>) {
    core_membership_with(supernodes, f, CoreRule::Exclusion)
}

pub fn core_membership_with(
    supernodes: &[String],
    f: &FanVectors,
    rule: CoreRule,
) -> (BTreeSet<String>, BTreeSet<String>) {
    let pick = |v: &DegreeVector, upper: Option<u64>| -> BTreeSet<String> {
        v.values
            .iter()
            .filter(|(k, &d)| match rule {
                CoreRule::Exclusion => d > 1 && !supernodes.contains(k),
                CoreRule::StrictInequality => d > 1 && upper.is_none_or(|u| d < u),
            })
            .map(|(k, _)| k.clone())
            .collect()
    };
    let first = supernodes.first();
    let out_bound = first.map(|k| f.d_out.get(k));
    let in_bound = first.map(|k| f.d_in.get(k));
    (pick(&f.d_out, out_bound), pick(&f.d_in, in_bound))
}

/// Statistics of `A(i_core, j_core)`.
pub fn core_stats(
    m: &TrafficMatrix,
    i_core: &BTreeSet<String>,
    j_core: &BTreeSet<String>,
) -> CategoryStats {
    let mut t = Tally::default();
    for (s, d, c) in m.entries() {
        if i_core.contains(s) && j_core.contains(d) {
            t.add(s, d, c);
        }
    }
    t.stats()
}

/// Degree-one sources sending into `j_core` and degree-one destinations fed
/// from `i_core`.
pub fn core_leaves(
    m: &TrafficMatrix,
    i_core: &BTreeSet<String>,
    j_core: &BTreeSet<String>,
    f: &FanVectors,
) -> CategoryStats {
    let (i1, j1) = (ones(&f.d_out), ones(&f.d_in));
    let mut t = LeafTally::default();
    for (s, d, c) in m.entries() {
        if i1.contains(s) && j_core.contains(d) {
            t.to_hub.add(s, d, c);
        }
        if i_core.contains(s) && j1.contains(d) {
            t.from_hub.add(s, d, c);
        }
    }
    t.stats()
}

pub fn topology_breakdown(m: &TrafficMatrix) -> TopologyBreakdown {
    topology_breakdown_with(m, &TopologyOptions::default())
}

/// Full decomposition in one pass over the entries.
///
/// Entries are assigned in the order isolated, supernode leaf, core, core
/// leaf, supernode; under the exclusion rule these blocks are disjoint and
/// the order does not matter.
pub fn topology_breakdown_with(m: &TrafficMatrix, opts: &TopologyOptions) -> TopologyBreakdown {
    let f = fan_vectors(m);
    let supernodes = find_supernodes(m, opts.max_supernodes);
    let (i_core, j_core) = core_membership_with(&supernodes, &f, opts.core_rule);

    let d_out: HashMap<&str, u64> = f
        .d_out
        .values
        .iter()
        .map(|(k, &v)| (k.as_str(), v))
        .collect();
    let d_in: HashMap<&str, u64> = f
        .d_in
        .values
        .iter()
        .map(|(k, &v)| (k.as_str(), v))
        .collect();
    let sn: HashSet<&str> = supernodes.iter().map(String::as_str).collect();
    let i_core: HashSet<&str> = i_core.iter().map(String::as_str).collect();
    let j_core: HashSet<&str> = j_core.iter().map(String::as_str).collect();

    let mut isolated = Tally::default();
    let mut sn_leaves = LeafTally::default();
    let mut core = Tally::default();
    let mut core_lv = LeafTally::default();
    let mut sn_traffic = Tally::default();
    let mut residual = Tally::default();

    for (s, d, c) in m.entries() {
        let s1 = d_out[s] == 1;
        let d1 = d_in[d] == 1;
        if s1 && d1 {
            isolated.add(s, d, c);
        } else if s1 && sn.contains(d) {
            sn_leaves.to_hub.add(s, d, c);
        } else if d1 && sn.contains(s) {
            sn_leaves.from_hub.add(s, d, c);
        } else if i_core.contains(s) && j_core.contains(d) {
            core.add(s, d, c);
        } else if s1 && j_core.contains(d) {
            core_lv.to_hub.add(s, d, c);
        } else if d1 && i_core.contains(s) {
            core_lv.from_hub.add(s, d, c);
        } else if sn.contains(s) || sn.contains(d) {
            sn_traffic.add(s, d, c);
        } else {
            residual.add(s, d, c);
        }
    }

    // Only supernodes themselves count as supernode sources/destinations.
    sn_traffic.sources.retain(|k| sn.contains(k));
    sn_traffic.destinations.retain(|k| sn.contains(k));

    TopologyBreakdown {
        isolated_links: isolated.stats(),
        supernode_leaves: sn_leaves.stats(),
        supernode_traffic: sn_traffic.stats(),
        core: core.stats(),
        core_leaves: core_lv.stats(),
        residual: residual.stats(),
        totals: m.aggregates(),
        supernodes,
    }
}

pub const TOPOLOGY_CSV_HEADER: &str =
    "category,sources,packets,links,destinations,frac_sources,frac_packets,frac_links,frac_destinations";

/// One row per category plus a `total` row holding the matrix aggregates.
pub fn topology_to_csv(b: &TopologyBreakdown) -> String {
    let mut out = String::from(TOPOLOGY_CSV_HEADER);
    out.push('\n');
    let mut row = |name: &str, s: CategoryStats| {
        let fr = s.fractions(&b.totals);
        out.push_str(&format!(
            "{name},{},{},{},{},{:?},{:?},{:?},{:?}\n",
            s.sources, s.packets, s.links, s.destinations, fr[0], fr[1], fr[2], fr[3]
        ));
    };
    for c in Category::ALL {
        row(c.as_str(), b.get(c));
    }
    let t = &b.totals;
    row(
        "total",
        CategoryStats {
            sources: t.unique_sources,
            packets: t.valid_packets,
            links: t.unique_links,
            destinations: t.unique_destinations,
        },
    );
    out
}

/// Count of degree-one sources and destinations, for partition checks.
pub fn degree_one_counts(f: &FanVectors) -> (u64, u64) {
    let count = |v: &DegreeVector| v.values.values().filter(|&&d| d == 1).count() as u64;
    (count(&f.d_out), count(&f.d_in))
}

/// Combined degree `d_out + d_in` per node identity.
pub fn combined_degree(m: &TrafficMatrix) -> BTreeMap<String, u64> {
    let f = fan_vectors(m);
    let mut out = f.d_out.values;
    for (k, v) in f.d_in.values {
        *out.entry(k).or_default() += v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{a_star, in_star};
    use proptest::prelude::*;

    fn stats(sources: u64, packets: u64, links: u64, destinations: u64) -> CategoryStats {
        CategoryStats {
            sources,
            packets,
            links,
            destinations,
        }
    }

    fn keys(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn matrix(entries: &[(&str, &str, u64)]) -> TrafficMatrix {
        let mut m = TrafficMatrix::new();
        for &(s, d, c) in entries {
            m.accumulate(s, d, c);
        }
        m
    }

    #[test]
    fn fan_vectors_examples() {
        let f = fan_vectors(&a_star());
        assert_eq!(f.d_out.get("s1"), 3);
        assert_eq!(f.d_out.get("s2"), 1);
        assert_eq!(
            f.d_in.values.values().copied().collect::<Vec<_>>(),
            vec![2, 1, 1]
        );

        let f = fan_vectors(&TrafficMatrix::new());
        assert!(f.d_out.is_empty() && f.d_in.is_empty());

        let mut star = TrafficMatrix::new();
        for i in 0..9 {
            star.accumulate("c", &format!("d{i}"), 1);
        }
        let f = fan_vectors(&star);
        assert_eq!(f.d_out.get("c"), 9);
        assert!(f.d_in.values.values().all(|&d| d == 1));
    }

    #[test]
    fn isolated_examples() {
        let a = a_star();
        assert_eq!(
            isolated_links(&a, &fan_vectors(&a)),
            CategoryStats::default()
        );

        let mut b = a_star();
        b.accumulate("s3", "d4", 2);
        assert_eq!(isolated_links(&b, &fan_vectors(&b)), stats(1, 2, 1, 1));

        let pairs = matrix(&[
            ("a", "1", 1),
            ("b", "2", 1),
            ("c", "3", 1),
            ("d", "4", 1),
            ("e", "5", 1),
        ]);
        assert_eq!(
            isolated_links(&pairs, &fan_vectors(&pairs)),
            stats(5, 5, 5, 5)
        );
    }

    #[test]
    fn supernode_examples() {
        assert_eq!(find_supernodes(&a_star(), 5), vec!["s1"]);
        assert!(find_supernodes(&TrafficMatrix::new(), 5).is_empty());

        let mut two = in_star("c9", "x", 9);
        for i in 0..7 {
            two.accumulate(&format!("y{i}"), "c7", 1);
        }
        assert_eq!(find_supernodes(&two, 5), vec!["c9", "c7"]);
        assert_eq!(find_supernodes(&two, 1), vec!["c9"]);
    }

    #[test]
    fn supernode_ties_prefer_packets_then_key() {
        let m = matrix(&[("a", "x", 1), ("a", "y", 1), ("b", "z", 5), ("b", "w", 1)]);
        assert_eq!(find_supernodes(&m, 1), vec!["b"]);
        let m = matrix(&[("b", "x", 1), ("b", "y", 1), ("a", "z", 1), ("a", "w", 1)]);
        assert_eq!(find_supernodes(&m, 1), vec!["a"]);
    }

    #[test]
    fn node_identity_spans_both_roles() {
        // h sends to two and receives from two: combined degree 4 beats the
        // pure source with fan-out 3.
        let m = matrix(&[
            ("h", "p", 1),
            ("h", "q", 1),
            ("r", "h", 1),
            ("t", "h", 1),
            ("s", "u", 1),
            ("s", "v", 1),
            ("s", "w", 1),
        ]);
        assert_eq!(find_supernodes(&m, 1), vec!["h"]);
    }

    #[test]
    fn supernode_leaf_examples() {
        let a = a_star();
        let f = fan_vectors(&a);
        assert_eq!(supernode_leaves(&a, &["s1".into()], &f), stats(0, 2, 2, 2));

        let star = in_star("c", "l", 9);
        let f = fan_vectors(&star);
        assert_eq!(
            supernode_leaves(&star, &["c".into()], &f),
            stats(9, 9, 9, 0)
        );

        let ring = matrix(&[
            ("a", "b", 1),
            ("a", "c", 1),
            ("b", "a", 1),
            ("b", "c", 1),
            ("c", "a", 1),
            ("c", "b", 1),
        ]);
        let f = fan_vectors(&ring);
        assert_eq!(
            supernode_leaves(&ring, &find_supernodes(&ring, 5), &f),
            CategoryStats::default()
        );
    }

    #[test]
    fn core_examples() {
        let a = a_star();
        let f = fan_vectors(&a);
        let (ic, jc) = core_membership(&["s1".into()], &f);
        assert!(ic.is_empty());
        assert_eq!(jc, keys(&["d1"]));
        assert_eq!(core_stats(&a, &ic, &jc), CategoryStats::default());
        assert_eq!(core_leaves(&a, &ic, &jc, &f), stats(1, 1, 1, 0));

        // Two hubs cross-connected, each also reaching one shared peer.
        let hubs = matrix(&[
            ("h1", "h2", 1),
            ("h1", "p", 1),
            ("h1", "q", 1),
            ("h2", "h1", 1),
            ("h2", "p", 1),
            ("h2", "q", 1),
        ]);
        let f = fan_vectors(&hubs);
        let (ic, jc) = core_membership(&[], &f);
        assert_eq!(ic, keys(&["h1", "h2"]));
        assert_eq!(jc, keys(&["p", "q"]));

        let star = in_star("c", "l", 9);
        let f = fan_vectors(&star);
        let (ic, jc) = core_membership(&find_supernodes(&star, 5), &f);
        assert!(ic.is_empty() && jc.is_empty());
        assert_eq!(core_leaves(&star, &ic, &jc, &f), CategoryStats::default());
    }

    #[test]
    fn complete_bipartite_core() {
        let mut m = TrafficMatrix::new();
        for s in ["a", "b", "c"] {
            for d in ["x", "y", "z"] {
                m.accumulate(s, d, 1);
            }
        }
        let all = |v: &[&str]| keys(v);
        assert_eq!(
            core_stats(&m, &all(&["a", "b", "c"]), &all(&["x", "y", "z"])),
            stats(3, 9, 9, 3)
        );
        assert_eq!(
            core_stats(&m, &BTreeSet::new(), &BTreeSet::new()),
            CategoryStats::default()
        );
    }

    #[test]
    fn hub_with_in_leaves_gives_core_leaves() {
        // h is in the core with no supernode list.
        let mut m = in_star("h", "l", 4);
        for (s, d) in [("g", "h"), ("g", "k"), ("g", "j"), ("h", "k"), ("h", "j")] {
            m.accumulate(s, d, 1);
        }
        let f = fan_vectors(&m);
        let (ic, jc) = core_membership(&[], &f);
        assert_eq!(ic, keys(&["g", "h"]));
        assert_eq!(jc, keys(&["h", "j", "k"]));
        assert_eq!(core_leaves(&m, &ic, &jc, &f), stats(4, 4, 4, 0));
        assert_eq!(core_stats(&m, &ic, &jc), stats(2, 5, 5, 3));
    }

    #[test]
    fn breakdown_of_a_star() {
        let b = topology_breakdown(&a_star());
        assert_eq!(b.supernodes, vec!["s1"]);
        assert_eq!(b.fractions(Category::SupernodeLeaves)[3], 2.0 / 3.0);
        assert_eq!(b.fractions(Category::CoreLeaves)[0], 0.5);
        assert_eq!(b.residual, CategoryStats::default());
        assert_eq!(b.supernode_traffic, stats(1, 3, 1, 0));

        let empty = topology_breakdown(&TrafficMatrix::new());
        for c in Category::ALL {
            assert_eq!(empty.get(c), CategoryStats::default());
            assert_eq!(empty.fractions(c), [0.0; 4]);
        }
    }

    #[test]
    fn csv_rows() {
        let text = topology_to_csv(&topology_breakdown(&a_star()));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TOPOLOGY_CSV_HEADER);
        assert_eq!(lines.len(), 8);
        assert!(lines[2].starts_with("supernode_leaves,0,2,2,2,0.0,"));
        assert_eq!(lines[7], "total,2,6,4,3,1.0,1.0,1.0,1.0");
    }

    #[test]
    fn strict_rule_without_supernodes_has_no_upper_bound() {
        let m = matrix(&[("a", "x", 1), ("a", "y", 1), ("b", "x", 1), ("b", "y", 1)]);
        let f = fan_vectors(&m);
        let (ic, jc) = core_membership_with(&[], &f, CoreRule::StrictInequality);
        assert_eq!(ic, keys(&["a", "b"]));
        assert_eq!(jc, keys(&["x", "y"]));
        let opts = TopologyOptions {
            max_supernodes: 5,
            core_rule: CoreRule::StrictInequality,
        };
        // Every node has degree 2: a is the first supernode and bounds the
        // core at d_out < 2, so nothing remains in the core.
        let b = topology_breakdown_with(&m, &opts);
        assert_eq!(b.core, CategoryStats::default());
    }

    fn arb_matrix() -> impl Strategy<Value = TrafficMatrix> {
        prop::collection::vec((0u8..25, 0u8..25, 1u64..4), 0..80).prop_map(|triples| {
            let mut m = TrafficMatrix::new();
            for (s, d, c) in triples {
                m.accumulate(&format!("n{s}"), &format!("n{d}"), c);
            }
            m
        })
    }

    proptest! {
        #[test]
        fn isolated_triple_equality(m in arb_matrix()) {
            let s = isolated_links(&m, &fan_vectors(&m));
            prop_assert_eq!(s.sources, s.links);
            prop_assert_eq!(s.destinations, s.links);
        }

        #[test]
        fn degree_one_partition(m in arb_matrix()) {
            let b = topology_breakdown(&m);
            let (n_src, n_dst) = degree_one_counts(&fan_vectors(&m));
            let leaves = b.isolated_links + b.supernode_leaves + b.core_leaves;
            prop_assert_eq!(leaves.sources, n_src);
            prop_assert_eq!(leaves.destinations, n_dst);
            prop_assert_eq!(b.residual, CategoryStats::default());
        }

        #[test]
        fn one_pass_matches_standalone_operations(m in arb_matrix()) {
            let b = topology_breakdown(&m);
            let f = fan_vectors(&m);
            let (ic, jc) = core_membership(&b.supernodes, &f);
            prop_assert_eq!(b.isolated_links, isolated_links(&m, &f));
            prop_assert_eq!(b.supernode_leaves, supernode_leaves(&m, &b.supernodes, &f));
            prop_assert_eq!(b.core, core_stats(&m, &ic, &jc));
            prop_assert_eq!(b.core_leaves, core_leaves(&m, &ic, &jc, &f));
        }

        #[test]
        fn packets_and_links_are_partitioned(m in arb_matrix()) {
            let b = topology_breakdown(&m);
            let sum = Category::ALL.iter().fold(CategoryStats::default(), |acc, &c| acc + b.get(c));
            prop_assert_eq!(sum.packets, b.totals.valid_packets);
            prop_assert_eq!(sum.links, b.totals.unique_links);
            for c in Category::ALL {
                for x in b.fractions(c) {
                    prop_assert!((0.0..=1.0).contains(&x));
                }
            }
        }

        #[test]
        fn removal_never_raises_degree(m in arb_matrix()) {
            let before = combined_degree(&m);
            if let Some(top) = find_supernodes(&m, 1).first() {
                let rest: BTreeSet<String> = m
                    .row_keys()
                    .chain(m.col_keys())
                    .filter(|k| *k != top)
                    .map(str::to_owned)
                    .collect();
                let after = combined_degree(&m.submatrix(&rest, &rest));
                for (k, d) in after {
                    prop_assert!(d <= before[&k]);
                }
            }
        }
    }
}
