//! Shared matrices for unit tests.

use crate::hypersparse::TrafficMatrix;

/// A★: the window [s1→d1 ×3, s1→d2, s1→d3, s2→d1].
pub(crate) fn a_star() -> TrafficMatrix {
    let mut m = TrafficMatrix::new();
    for (s, d) in [
        ("s1", "d1"),
        ("s1", "d1"),
        ("s1", "d1"),
        ("s1", "d2"),
        ("s1", "d3"),
        ("s2", "d1"),
    ] {
        m.accumulate(s, d, 1);
    }
    m
}

/// Star with `center` receiving one packet from each of `leaves` sources.
pub(crate) fn in_star(center: &str, prefix: &str, leaves: usize) -> TrafficMatrix {
    let mut m = TrafficMatrix::new();
    for i in 0..leaves {
        m.accumulate(&format!("{prefix}{i}"), center, 1);
    }
    m
}
