//! Optimal randomized transmission probability.
//!
//! With `Ā(p) = (A p + B)/(C p² + D p + E)` the derivative has the sign of
//! `M(p) = −AC p² − 2BC p + (AE − BD)`. `M` is decreasing on `[0, 1]`
//! whenever `A·C ≠ 0`, so the maximizer is the root
//! `(−BC + √Δ)/(AC)`, `Δ = B²C² + AC(AE − BD)`, projected onto the
//! feasible interval.

use serde::Serialize;
use thiserror::Error;

use crate::metrics::{avg_cra_closed, cra_coefficients_unchecked, CraRational};
use crate::model::{ChannelPair, CorrelationClass, Policy, SourceModel};

/// Default lower end of the feasible interval. `p_α = 0` stops all
/// transmissions and breaks ergodicity, so the interval is kept away from it.
pub const DEFAULT_LOWER: f64 = 1e-3;

/// Relative threshold on `|A·C|` below which `M` is treated as affine.
pub const DEGENERATE_AC: f64 = 1e-14;

/// Relative slack for the numerical nonnegativity of `Δ`.
pub const DISCRIMINANT_SLACK: f64 = 1e-9;

/// Values closer than this are ties; ties go to the smaller `p_α`.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("invalid feasible interval [{lower}, {upper}]: need 0 < lower <= upper <= 1")]
    Interval { lower: f64, upper: f64 },
    #[error("grid step {0} must be positive and finite")]
    Step(f64),
    #[error("discriminant {delta:e} is materially negative (scale {scale:e})")]
    NegativeDiscriminant { delta: f64, scale: f64 },
}

/// `[p_ell, p_u]` with `0 < p_ell ≤ p_u ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibleInterval {
    lower: f64,
    upper: f64,
}

impl FeasibleInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self, OptimizerError> {
        if lower > 0.0 && lower <= upper && upper <= 1.0 {
            Ok(Self { lower, upper })
        } else {
            Err(OptimizerError::Interval { lower, upper })
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn project(&self, x: f64) -> f64 {
        x.max(self.lower).min(self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

impl Default for FeasibleInterval {
    fn default() -> Self {
        Self {
            lower: DEFAULT_LOWER,
            upper: 1.0,
        }
    }
}

/// Which part of the case analysis produced the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// Interior stationary point of the general rational form.
    GeneralRoot,
    /// `p_s = p_s^e`, `p + q < 1`: objective decreasing, lower end.
    SymmetricPersistent,
    /// `p_s = p_s^e`, `p + q > 1`: objective increasing, upper end.
    SymmetricAlternating,
    /// `p_s = p_s^e`, `p + q = 1`: objective constant, lower end by the tie rule.
    SymmetricIndifferent,
    /// `A·C ≈ 0`: `M` is affine or constant.
    DegenerateA,
    /// General branch whose candidate was projected onto an interval end.
    Clamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerResult {
    pub p_alpha_star: f64,
    pub value: f64,
    pub branch: Branch,
    pub delta: f64,
}

/// `M(p) = −AC p² − 2BC p + (AE − BD)`, the numerator of `dĀ/dp`.
pub fn derivative_numerator(k: &CraRational, p_alpha: f64) -> f64 {
    -k.a * k.c * p_alpha * p_alpha - 2.0 * k.b * k.c * p_alpha + (k.a * k.e - k.b * k.d)
}

/// `Δ = B²C² + AC(AE − BD)`.
pub fn discriminant(k: &CraRational) -> f64 {
    k.b * k.b * k.c * k.c + k.a * k.c * (k.a * k.e - k.b * k.d)
}

/// [`discriminant`] with the nonnegativity check applied; small negative
/// round-off is clamped to zero.
pub fn checked_discriminant(k: &CraRational) -> Result<f64, OptimizerError> {
    let delta = discriminant(k);
    let scale = k.scale() * k.scale();
    if delta < -DISCRIMINANT_SLACK * scale {
        return Err(OptimizerError::NegativeDiscriminant { delta, scale });
    }
    Ok(delta.max(0.0))
}

/// Both zeros of `M`, `(−BC ± √Δ)/(AC)`, in ascending order.
pub fn derivative_roots(k: &CraRational) -> Option<(f64, f64)> {
    let ac = k.a * k.c;
    if ac == 0.0 {
        return None;
    }
    let sq = discriminant(k).max(0.0).sqrt();
    let r1 = (-k.b * k.c + sq) / ac;
    let r2 = (-k.b * k.c - sq) / ac;
    Some((r1.min(r2), r1.max(r2)))
}

fn objective(src: &SourceModel, ch: &ChannelPair, p_alpha: f64) -> f64 {
    avg_cra_closed(
        src,
        ch,
        &Policy::new(p_alpha).expect("feasible points are valid policies"),
    )
}

/// Maximizes the average CRA over `interval`.
pub fn optimize(
    src: &SourceModel,
    ch: &ChannelPair,
    interval: &FeasibleInterval,
) -> Result<OptimizerResult, OptimizerError> {
    if ch.is_symmetric() {
        let (p_alpha_star, branch) = match src.correlation_class() {
            CorrelationClass::Alternating => (interval.upper(), Branch::SymmetricAlternating),
            CorrelationClass::Persistent => (interval.lower(), Branch::SymmetricPersistent),
            CorrelationClass::Memoryless => (interval.lower(), Branch::SymmetricIndifferent),
        };
        return Ok(OptimizerResult {
            p_alpha_star,
            value: objective(src, ch, p_alpha_star),
            branch,
            delta: 0.0,
        });
    }
    optimize_rational(src, ch, &cra_coefficients_unchecked(src, ch), interval)
}

/// General-branch optimization given precomputed coefficients.
pub fn optimize_rational(
    src: &SourceModel,
    ch: &ChannelPair,
    k: &CraRational,
    interval: &FeasibleInterval,
) -> Result<OptimizerResult, OptimizerError> {
    let delta = checked_discriminant(k)?;
    let ac = k.a * k.c;
    if ac.abs() < DEGENERATE_AC * k.scale() {
        let p_alpha_star = affine_argmax(k, interval, |p| objective(src, ch, p));
        return Ok(OptimizerResult {
            p_alpha_star,
            value: objective(src, ch, p_alpha_star),
            branch: Branch::DegenerateA,
            delta,
        });
    }
    let candidate = (-k.b * k.c + delta.sqrt()) / ac;
    let p_alpha_star = interval.project(candidate);
    let branch = if p_alpha_star == candidate {
        Branch::GeneralRoot
    } else {
        Branch::Clamped
    };
    Ok(OptimizerResult {
        p_alpha_star,
        value: objective(src, ch, p_alpha_star),
        branch,
        delta,
    })
}

/// `M(p) = −2BC p + (AE − BD)` once the quadratic term vanishes.
fn affine_argmax(k: &CraRational, interval: &FeasibleInterval, f: impl Fn(f64) -> f64) -> f64 {
    let slope = -2.0 * k.b * k.c;
    let offset = k.a * k.e - k.b * k.d;
    let (lo, hi) = (interval.lower(), interval.upper());
    if slope.abs() <= DEGENERATE_AC * k.scale() {
        // Constant sign of the derivative.
        return if offset > 0.0 { hi } else { lo };
    }
    let root = -offset / slope;
    if slope < 0.0 {
        // M goes from positive to negative: increase then decrease.
        interval.project(root)
    } else {
        // Minimum at the root; the maximum is at an end.
        if f(hi) > f(lo) + TIE_TOL {
            hi
        } else {
            lo
        }
    }
}

/// Brute-force maximizer over `lower, lower + step, …` (plus `upper` when
/// the grid misses it). Ties resolve to the smallest `p_α`.
pub fn grid_argmax(
    src: &SourceModel,
    ch: &ChannelPair,
    interval: &FeasibleInterval,
    step: f64,
) -> Result<(f64, f64), OptimizerError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(OptimizerError::Step(step));
    }
    let (lo, hi) = (interval.lower(), interval.upper());
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut best = (lo, objective(src, ch, lo));
    let mut consider = |p: f64| {
        let v = objective(src, ch, p);
        if v > best.1 + TIE_TOL {
            best = (p, v);
        }
    };
    for i in 1..=n {
        consider((lo + i as f64 * step).min(hi));
    }
    if lo + n as f64 * step < hi - 1e-12 {
        consider(hi);
    }
    Ok(best)
}
