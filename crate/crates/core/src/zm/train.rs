//! Newton training of the model offset `δ` for a fixed exponent.
//!
//! Matching the model to the measured `D(1)` gives the root problem
//!
//! ```text
//! f(δ)  = D(1) (1+δ)^α Σ ρ(d; α, δ) - 1
//! f'(δ) = α D(1) (1+δ)^α [ Σ ρ(d; α, δ) / (1+δ) - Σ ρ(d; α+1, δ) ]
//! ```
//!
//! `f` is increasing in `δ`, so a sign change over `[0, 10]` brackets the
//! unique root. Newton steps that leave the current bracket are replaced by
//! bisection.

use super::{rho_sum_pair, EXACT_SUM_LIMIT};

pub const DELTA_MIN: f64 = 0.0;
pub const DELTA_MAX: f64 = 10.0;
pub const DELTA_START: f64 = 1.0;
/// Successive-iterate tolerance on `δ`.
pub const STEP_TOLERANCE: f64 = 1e-3;
/// Residual bound on `|f(δ)|` required alongside the step tolerance.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
const MAX_ITERATIONS: usize = 100;
const POLISH_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("D(1) must lie in (0, 1), got {0}")]
    Domain(f64),
    #[error("invalid training input: {0}")]
    InvalidInput(String),
    #[error(
        "no delta in (0, 10) reproduces D(1) at alpha {alpha} (f(0) = {f_lo}, f(10) = {f_hi})"
    )]
    NoRoot { alpha: f64, f_lo: f64, f_hi: f64 },
    #[error("delta training did not converge after {0} iterations")]
    NotConverged(usize),
}

/// A trained offset with its convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSolution {
    pub delta: f64,
    /// Updates taken until both tolerances held.
    pub iterations: usize,
    /// Update at which `|Δδ|` first fell below [`STEP_TOLERANCE`].
    pub step_converged_at: usize,
    /// `f(δ)` at the returned offset.
    pub residual: f64,
    /// Size of the final update.
    pub last_step: f64,
    /// Number of updates that fell back to bisection.
    pub bisections: usize,
}

struct Objective {
    d1: f64,
    alpha: f64,
    d_max: u64,
}

impl Objective {
    fn eval(&self, delta: f64) -> (f64, f64) {
        let (s0, s1) = rho_sum_pair(self.alpha, delta, self.d_max, EXACT_SUM_LIMIT);
        let g = (1.0 + delta).powf(self.alpha);
        let f = self.d1 * g * s0 - 1.0;
        let df = self.alpha * self.d1 * g * (s0 / (1.0 + delta) - s1);
        (f, df)
    }
}

/// Extra Newton steps after convergence, kept only while `|f|` shrinks.
/// These bring `δ` to working precision and are not counted as iterations.
fn polish(
    obj: &Objective,
    mut delta: f64,
    mut f: f64,
    mut df: f64,
    lo: f64,
    hi: f64,
) -> (f64, f64) {
    for _ in 0..POLISH_STEPS {
        if f == 0.0 || df <= 0.0 {
            break;
        }
        let next = delta - f / df;
        if !(next > lo && next < hi) || next == delta {
            break;
        }
        let (f_next, df_next) = obj.eval(next);
        if f_next.abs() >= f.abs() {
            break;
        }
        (delta, f, df) = (next, f_next, df_next);
    }
    (delta, f)
}

/// Trains `δ` so that the model `D(1; α, δ)` equals `d1`.
pub fn train_delta(d1: f64, alpha: f64, d_max: u64) -> Result<DeltaSolution, TrainError> {
    if !(d1 > 0.0 && d1 < 1.0) {
        return Err(TrainError::Domain(d1));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(TrainError::InvalidInput(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    if d_max < 1 {
        return Err(TrainError::InvalidInput("d_max must be >= 1".into()));
    }

    let obj = Objective { d1, alpha, d_max };
    let (f_lo, _) = obj.eval(DELTA_MIN);
    let (f_hi, _) = obj.eval(DELTA_MAX);
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(TrainError::NoRoot { alpha, f_lo, f_hi });
    }

    let (mut lo, mut hi) = (DELTA_MIN, DELTA_MAX);
    let mut delta = DELTA_START;
    let (mut f, mut df) = obj.eval(delta);
    let mut iterations = 0;
    let mut step_converged_at = None;
    let mut last_step = f64::INFINITY;
    let mut bisections = 0;

    loop {
        let step_ok = last_step < STEP_TOLERANCE;
        if f == 0.0 || (step_ok && f.abs() < RESIDUAL_TOLERANCE) {
            let (delta, f) = polish(&obj, delta, f, df, lo, hi);
            return Ok(DeltaSolution {
                delta,
                iterations,
                step_converged_at: step_converged_at.unwrap_or(iterations),
                residual: f,
                last_step,
                bisections,
            });
        }
        if iterations >= MAX_ITERATIONS {
            return Err(TrainError::NotConverged(iterations));
        }

        if f < 0.0 {
            lo = delta;
        } else {
            hi = delta;
        }
        let newton = delta - f / df;
        let next = if df > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            bisections += 1;
            0.5 * (lo + hi)
        };
        if next == delta {
            // The bracket has collapsed onto one representable value.
            return Ok(DeltaSolution {
                delta,
                iterations,
                step_converged_at: step_converged_at.unwrap_or(iterations),
                residual: f,
                last_step: 0.0,
                bisections,
            });
        }
        last_step = (next - delta).abs();
        iterations += 1;
        if last_step < STEP_TOLERANCE && step_converged_at.is_none() {
            step_converged_at = Some(iterations);
        }
        delta = next;
        (f, df) = obj.eval(delta);
    }
}
