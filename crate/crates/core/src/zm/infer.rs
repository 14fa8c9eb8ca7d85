//! Grid inference of `(α, δ)` under the half-norm log metric
//! `Σ |log D(d_i) - log D(d_i; α, δ)|^(1/2)` over admissible bins.

use rayon::prelude::*;
use serde::Serialize;

use super::{leaf_parameter, model_distribution, train_delta, ZmError, ZmParams};
use crate::netstats::PooledDistribution;

/// Candidate exponents `start, start+step, …, stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        AlphaGrid {
            start: 0.10,
            stop: 4.00,
            step: 0.01,
        }
    }
}

impl AlphaGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, ZmError> {
        let ok = start.is_finite() && stop.is_finite() && step.is_finite();
        if !ok || start <= 0.0 || start >= stop || step <= 0.0 {
            return Err(ZmError::InvalidParams(format!(
                "alpha grid needs 0 < start < stop and step > 0, got {start}:{stop}:{step}"
            )));
        }
        Ok(AlphaGrid { start, stop, step })
    }

    /// Parses `start:stop:step`.
    pub fn parse(text: &str) -> Result<Self, ZmError> {
        let parts: Vec<&str> = text.split(':').collect();
        let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
        match nums.as_deref() {
            Ok([a, b, s]) => AlphaGrid::new(*a, *b, *s),
            _ => Err(ZmError::InvalidParams(format!(
                "alpha grid must be start:stop:step, got {text:?}"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid points, rounded to 10 decimals so that `0.10 + 170·0.01` is `1.8`.
    pub fn values(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| ((self.start + i as f64 * self.step) * 1e10).round() / 1e10)
            .collect()
    }
}

/// Inferred model for one pooled distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZmFit {
    pub params: ZmParams,
    pub loss: f64,
    pub leaf: f64,
    pub bins_used: usize,
    /// Newton updates spent training the winning `δ`.
    pub training_iterations: usize,
}

/// Bins with `D(d_i) > σ(d_i)` and `D(d_i) > 0`.
pub fn admissible_bins(data: &PooledDistribution) -> Vec<usize> {
    data.values
        .iter()
        .zip(&data.sigmas)
        .enumerate()
        .filter(|(_, (&v, &s))| v > 0.0 && v > s)
        .map(|(i, _)| i)
        .collect()
}

/// Log gaps at or below this are rounding noise and count as zero. The
/// square root would otherwise turn a one-ulp gap into a `1e-8` loss term.
pub const LOG_RESOLUTION: f64 = 1e-12;

/// Half-norm distance between data and model logs over admissible bins.
///
/// A model bin that is zero where the data is admissible contributes an
/// infinite loss.
pub fn half_norm_loss(
    data: &PooledDistribution,
    model: &PooledDistribution,
) -> Result<f64, ZmError> {
    if data.values.len() != model.values.len() {
        return Err(ZmError::MisalignedBins {
            data: data.values.len(),
            model: model.values.len(),
        });
    }
    let bins = admissible_bins(data);
    if bins.is_empty() {
        return Err(ZmError::NoAdmissibleBins);
    }
    Ok(bins
        .into_iter()
        .map(|i| {
            let m = model.values[i];
            if m > 0.0 {
                let gap = (data.values[i].ln() - m.ln()).abs();
                if gap <= LOG_RESOLUTION {
                    0.0
                } else {
                    gap.sqrt()
                }
            } else {
                f64::INFINITY
            }
        })
        .sum())
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    alpha: f64,
    delta: f64,
    loss: f64,
    iterations: usize,
}

fn evaluate(data: &PooledDistribution, alpha: f64) -> Option<Candidate> {
    let sol = train_delta(data.d1(), alpha, data.d_max).ok()?;
    let params = ZmParams::new(alpha, sol.delta, data.d_max).ok()?;
    let model = model_distribution(&params, data.kind);
    let loss = half_norm_loss(data, &model).ok()?;
    Some(Candidate {
        alpha,
        delta: sol.delta,
        loss,
        iterations: sol.iterations,
    })
}

fn check_data(data: &PooledDistribution) -> Result<(), ZmError> {
    let d1 = data.d1();
    if !(d1 > 0.0 && d1 < 1.0) {
        return Err(ZmError::Domain(format!(
            "D(1) must lie in (0, 1), got {d1}"
        )));
    }
    if data.d_max < 1 {
        return Err(ZmError::Domain("d_max must be >= 1".into()));
    }
    if admissible_bins(data).is_empty() {
        return Err(ZmError::NoAdmissibleBins);
    }
    Ok(())
}

/// Argmin over candidates in grid order; ties keep the smaller `α`.
fn select(data: &PooledDistribution, candidates: Vec<Option<Candidate>>) -> Result<ZmFit, ZmError> {
    let best = candidates
        .into_iter()
        .flatten()
        .filter(|c| !c.loss.is_nan())
        .fold(None::<Candidate>, |best, c| match best {
            Some(b) if b.loss <= c.loss => Some(b),
            _ => Some(c),
        })
        .ok_or(ZmError::NoSolution)?;
    let params = ZmParams::new(best.alpha, best.delta, data.d_max)?;
    Ok(ZmFit {
        params,
        loss: best.loss,
        leaf: leaf_parameter(&params),
        bins_used: admissible_bins(data).len(),
        training_iterations: best.iterations,
    })
}

/// Trains `δ` for every grid `α` and keeps the lowest half-norm loss.
///
/// Exponents whose training has no root in `(0, 10)` are skipped.
pub fn infer_parameters(data: &PooledDistribution, grid: &AlphaGrid) -> Result<ZmFit, ZmError> {
    check_data(data)?;
    let candidates = grid
        .values()
        .into_iter()
        .map(|a| evaluate(data, a))
        .collect();
    select(data, candidates)
}

/// [`infer_parameters`] with the grid sweep spread over the current rayon
/// pool. The result is identical to the sequential sweep.
pub fn infer_parameters_parallel(
    data: &PooledDistribution,
    grid: &AlphaGrid,
) -> Result<ZmFit, ZmError> {
    check_data(data)?;
    let candidates = grid
        .values()
        .into_par_iter()
        .map(|a| evaluate(data, a))
        .collect();
    select(data, candidates)
}
