//! CRA objective and the marginal baselines.

use serde::Serialize;
use thiserror::Error;

use crate::model::{ChannelPair, LambdaSet, Policy, SourceModel, EQUALITY_TOL};
use crate::stationary::{stationary_closed_form, JointStationary};

/// Inputs with `|p_s − p_s^e|` below this are evaluated through both the
/// rational form and the resolvent route, which must agree to this tolerance.
pub const NEAR_SYMMETRIC_BAND: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("rational CRA form is degenerate for p_s = p_s^e = {p_s}")]
    DegenerateChannel { p_s: f64 },
    #[error("weight omega = {0} is outside [0, 1]")]
    Weight(f64),
}

/// `Ā_CRA = π(0,0,1) + π(1,1,0)`.
pub fn avg_cra_from_pi(pi: &JointStationary) -> f64 {
    pi.get(0, 0, 1) + pi.get(1, 1, 0)
}

/// Coefficients of `Ā_CRA(p_α) = (A p_α + B) / (C p_α² + D p_α + E)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CraRational {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl CraRational {
    pub fn numerator(&self, p_alpha: f64) -> f64 {
        self.a * p_alpha + self.b
    }

    pub fn denominator(&self, p_alpha: f64) -> f64 {
        (self.c * p_alpha + self.d) * p_alpha + self.e
    }

    pub fn eval(&self, p_alpha: f64) -> f64 {
        self.numerator(p_alpha) / self.denominator(p_alpha)
    }

    /// Magnitude used to make absolute thresholds on `A·C`, `Δ`, `M` relative.
    pub fn scale(&self) -> f64 {
        let num = self.a.abs().max(self.b.abs());
        let den = self.c.abs().max(self.d.abs()).max(self.e.abs());
        num * den
    }
}

/// Closed-form coefficients; fails on the symmetric channel where numerator
/// and denominator share a factor.
pub fn cra_coefficients(src: &SourceModel, ch: &ChannelPair) -> Result<CraRational, MetricsError> {
    if ch.is_symmetric() {
        return Err(MetricsError::DegenerateChannel { p_s: ch.bob() });
    }
    Ok(cra_coefficients_unchecked(src, ch))
}

pub(crate) fn cra_coefficients_unchecked(src: &SourceModel, ch: &ChannelPair) -> CraRational {
    let (p, q) = (src.p(), src.q());
    let (s, e) = (ch.bob(), ch.eve());
    let sum = p + q;
    let k = s * e - s - e;
    CraRational {
        a: p * q * (s * s * (1.0 - e) * (sum - 2.0) + e * e * (1.0 - s) * sum),
        b: p * q * sum * (2.0 * s * e - s - e),
        c: k * s * e * (sum - 1.0).powi(2) * sum,
        d: k * (s + e) * (1.0 - sum) * sum * sum,
        e: k * sum.powi(3),
    }
}

fn cra_resolvent_route(src: &SourceModel, ch: &ChannelPair, pol: &Policy) -> f64 {
    let lam = LambdaSet::new(*pol, *ch);
    let pi =
        stationary_closed_form(src, &lam).expect("resolvents are regular for in-domain parameters");
    avg_cra_from_pi(&pi)
}

/// Average CRA at `pol`.
///
/// Symmetric channels go through the resolvent route; inside the
/// near-symmetric band both routes are computed and must agree to
/// [`NEAR_SYMMETRIC_BAND`], and the resolvent value is returned.
pub fn avg_cra_closed(src: &SourceModel, ch: &ChannelPair, pol: &Policy) -> f64 {
    let gap = (ch.bob() - ch.eve()).abs();
    if gap < EQUALITY_TOL {
        return cra_resolvent_route(src, ch, pol);
    }
    let rational = cra_coefficients_unchecked(src, ch).eval(pol.p_alpha());
    if gap <= NEAR_SYMMETRIC_BAND {
        let exact = cra_resolvent_route(src, ch, pol);
        assert!(
            (exact - rational).abs() < NEAR_SYMMETRIC_BAND,
            "rational CRA form lost precision near p_s = p_s^e: {rational} vs {exact}"
        );
        return exact;
    }
    rational
}

/// `[π_{X,X̂}(0,0), π_{X,X̂}(1,1)]`.
pub fn bob_marginal(src: &SourceModel, ch: &ChannelPair, pol: &Policy) -> [f64; 2] {
    let (p, q) = (src.p(), src.q());
    let u = pol.p_alpha() * ch.bob();
    let den = (p + q) * (p + q + u * (1.0 - p - q));
    [q * (q + u * (1.0 - q)) / den, p * (p + u * (1.0 - p)) / den]
}

/// `[π_{X,X̂ᵉ}(0,1), π_{X,X̂ᵉ}(1,0)]`; the two terms coincide.
pub fn eve_marginal(src: &SourceModel, ch: &ChannelPair, pol: &Policy) -> [f64; 2] {
    let (p, q) = (src.p(), src.q());
    let u = pol.p_alpha() * ch.eve();
    let den = (p + q) * (p + q + u * (1.0 - p - q));
    let t = p * q * (1.0 - u) / den;
    [t, t]
}

/// Bob's marginal reconstruction accuracy.
pub fn marginal_accuracy(src: &SourceModel, ch: &ChannelPair, pol: &Policy) -> f64 {
    let [m00, m11] = bob_marginal(src, ch, pol);
    m00 + m11
}

/// Probability that Eve's estimate is wrong.
pub fn marginal_confidentiality(src: &SourceModel, ch: &ChannelPair, pol: &Policy) -> f64 {
    let [m01, m10] = eve_marginal(src, ch, pol);
    m01 + m10
}

/// `Ā_ω = (1 − ω)·accuracy + ω·confidentiality`.
pub fn weighted_metric(
    src: &SourceModel,
    ch: &ChannelPair,
    pol: &Policy,
    omega: f64,
) -> Result<f64, MetricsError> {
    check_weight(omega)?;
    Ok(combine(
        marginal_accuracy(src, ch, pol),
        marginal_confidentiality(src, ch, pol),
        omega,
    ))
}

fn check_weight(omega: f64) -> Result<(), MetricsError> {
    if (0.0..=1.0).contains(&omega) {
        Ok(())
    } else {
        Err(MetricsError::Weight(omega))
    }
}

fn combine(accuracy: f64, confidentiality: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        accuracy
    } else if omega == 1.0 {
        confidentiality
    } else {
        (1.0 - omega) * accuracy + omega * confidentiality
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedValue {
    pub omega: f64,
    pub value: f64,
}

/// Every metric at one operating point, read off a single stationary solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub cra: f64,
    pub accuracy: f64,
    pub confidentiality: f64,
    pub non_confidential_accuracy: f64,
    pub weighted: Vec<WeightedValue>,
    pub distribution: JointStationary,
}

impl MetricReport {
    pub fn compute(
        src: &SourceModel,
        ch: &ChannelPair,
        pol: &Policy,
        omegas: &[f64],
    ) -> Result<Self, MetricsError> {
        for &w in omegas {
            check_weight(w)?;
        }
        let lam = LambdaSet::new(*pol, *ch);
        let pi = stationary_closed_form(src, &lam)
            .expect("resolvents are regular for in-domain parameters");
        let cra = avg_cra_from_pi(&pi);
        let non_confidential_accuracy = pi.get(0, 0, 0) + pi.get(1, 1, 1);
        let accuracy = cra + non_confidential_accuracy;
        let confidentiality = (0..2u8)
            .map(|a| pi.get(0, a, 1) + pi.get(1, a, 0))
            .sum::<f64>();
        let weighted = omegas
            .iter()
            .map(|&omega| WeightedValue {
                omega,
                value: combine(accuracy, confidentiality, omega),
            })
            .collect();
        Ok(Self {
            cra,
            accuracy,
            confidentiality,
            non_confidential_accuracy,
            weighted,
            distribution: pi,
        })
    }
}
