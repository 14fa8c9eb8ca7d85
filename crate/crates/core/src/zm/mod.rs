//! Modified Zipf-Mandelbrot model `p(d; α, δ) ∝ 1/(d + δ)^α`, where `d` is a
//! measured network quantity rather than a rank.
//!
//! [`train_delta`] fits the offset `δ` for a fixed exponent so the model
//! reproduces the measured `D(1)`, and [`infer_parameters`] sweeps a grid of
//! exponents under the half-norm log metric.

mod infer;
mod train;

pub use infer::{
    admissible_bins, half_norm_loss, infer_parameters, infer_parameters_parallel, AlphaGrid, ZmFit,
    LOG_RESOLUTION,
};
pub use train::{train_delta, DeltaSolution, TrainError, DELTA_MAX, DELTA_MIN, DELTA_START};

use crate::netstats::{bin_edges, PooledDistribution, QuantityKind};
use crate::numeric::CompensatedSum;

/// Largest `d_max` summed term by term; beyond it the tail is approximated.
pub const EXACT_SUM_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ZmError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("{0}")]
    Domain(String),
    #[error("no admissible bins (every bin has D(d_i) <= sigma(d_i))")]
    NoAdmissibleBins,
    #[error("data has {data} bins but model has {model}")]
    MisalignedBins { data: usize, model: usize },
    #[error("delta training failed for every alpha on the grid")]
    NoSolution,
}

/// Model parameters and the normalization limit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ZmParams {
    pub alpha: f64,
    pub delta: f64,
    pub d_max: u64,
}

impl ZmParams {
    /// Checks `α > 0`, `δ ≥ 0` (both finite) and `d_max ≥ 1`.
    pub fn new(alpha: f64, delta: f64, d_max: u64) -> Result<Self, ZmError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ZmError::InvalidParams(format!(
                "alpha must be > 0, got {alpha}"
            )));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(ZmError::InvalidParams(format!(
                "delta must be >= 0, got {delta}"
            )));
        }
        if d_max < 1 {
            return Err(ZmError::InvalidParams("d_max must be >= 1".into()));
        }
        Ok(ZmParams {
            alpha,
            delta,
            d_max,
        })
    }
}

/// Unnormalized model `ρ(d; α, δ) = (d + δ)^-α`.
pub fn rho(d: u64, p: &ZmParams) -> f64 {
    (d as f64 + p.delta).powf(-p.alpha)
}

/// `∂_δ ρ = -α (d + δ)^-(α+1) = -α ρ(d; α+1, δ)`.
pub fn rho_grad_delta(d: u64, p: &ZmParams) -> f64 {
    -p.alpha * (d as f64 + p.delta).powf(-(p.alpha + 1.0))
}

/// `Σ_{d=1}^{d_max} ρ(d; α, δ)`, exact up to [`EXACT_SUM_LIMIT`] terms.
pub fn rho_sum(p: &ZmParams) -> f64 {
    rho_sum_split(p, EXACT_SUM_LIMIT)
}

/// [`rho_sum`] with an explicit exact-head length; terms past `head` come
/// from the Euler-Maclaurin tail.
pub fn rho_sum_split(p: &ZmParams, head: u64) -> f64 {
    range_sum(p.alpha, p.delta, 1, p.d_max, head)
}

/// `Σ_{d=lo}^{hi} (d + δ)^-α`, summing `d ≤ head` directly.
pub(crate) fn range_sum(alpha: f64, delta: f64, lo: u64, hi: u64, head: u64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    let exact_hi = hi.min(head);
    if lo <= exact_hi {
        for d in lo..=exact_hi {
            acc.add((d as f64 + delta).powf(-alpha));
        }
    }
    let tail_lo = lo.max(head.saturating_add(1));
    if tail_lo <= hi {
        acc.add(euler_maclaurin(alpha, delta, tail_lo, hi));
    }
    acc.value()
}

/// Both `Σ ρ(d; α, δ)` and `Σ ρ(d; α+1, δ)` over `1..=d_max` in one pass.
pub(crate) fn rho_sum_pair(alpha: f64, delta: f64, d_max: u64, head: u64) -> (f64, f64) {
    let mut s0 = CompensatedSum::new();
    let mut s1 = CompensatedSum::new();
    for d in 1..=d_max.min(head) {
        let x = d as f64 + delta;
        let t = x.powf(-alpha);
        s0.add(t);
        s1.add(t / x);
    }
    if d_max > head {
        s0.add(euler_maclaurin(alpha, delta, head + 1, d_max));
        s1.add(euler_maclaurin(alpha + 1.0, delta, head + 1, d_max));
    }
    (s0.value(), s1.value())
}

/// Euler-Maclaurin estimate of `Σ_{d=a}^{b} (d + δ)^-α`: the integral, the
/// endpoint average, and the `B2`/`B4` derivative corrections.
fn euler_maclaurin(alpha: f64, delta: f64, a: u64, b: u64) -> f64 {
    let xa = a as f64 + delta;
    let xb = b as f64 + delta;
    let log_ratio = (xb / xa).ln();
    let one_minus = 1.0 - alpha;
    let integral = if one_minus.abs() < 1e-12 {
        log_ratio
    } else {
        xa.powf(one_minus) * (one_minus * log_ratio).exp_m1() / one_minus
    };
    let f = |x: f64| x.powf(-alpha);
    let f1 = |x: f64| -alpha * x.powf(-alpha - 1.0);
    let f3 = |x: f64| -alpha * (alpha + 1.0) * (alpha + 2.0) * x.powf(-alpha - 3.0);
    integral + 0.5 * (f(xa) + f(xb)) + (f1(xb) - f1(xa)) / 12.0 - (f3(xb) - f3(xa)) / 720.0
}

/// Model `D(d_i; α, δ)` on the same binary-logarithmic bins as the data.
///
/// Bin `i` holds `Σ p(d)` over `d ∈ (2^(i-1), 2^i] ∩ [1, d_max]`.
pub fn model_distribution(p: &ZmParams, kind: QuantityKind) -> PooledDistribution {
    let edges = bin_edges(p.d_max);
    let raw: Vec<f64> = edges
        .iter()
        .map(|&edge| {
            let lo = if edge == 1 { 1 } else { edge / 2 + 1 };
            let hi = edge.min(p.d_max);
            range_sum(p.alpha, p.delta, lo, hi, EXACT_SUM_LIMIT)
        })
        .collect();
    let norm = raw.iter().copied().collect::<CompensatedSum>().value();
    PooledDistribution {
        kind,
        sigmas: vec![0.0; edges.len()],
        bin_edges: edges,
        values: raw.iter().map(|r| r / norm).collect(),
        n_windows: 1,
        d_max: p.d_max,
    }
}

/// Leaf parameter `1/(1 + δ)^α`, proportional to the model mass at `d = 1`.
pub fn leaf_parameter(p: &ZmParams) -> f64 {
    (1.0 + p.delta).powf(-p.alpha)
}
