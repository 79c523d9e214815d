//! Source, channel and policy primitives.
//!
//! All types validate their parameters at construction; everything
//! downstream assumes the domain invariants hold.

use serde::Serialize;
use thiserror::Error;

use crate::mat2::Mat2;

/// Absolute tolerance for the memoryless class (`p + q = 1`) and the
/// symmetric-channel branch (`p_s = p_s^e`).
pub const EQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
}

fn open_unit(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(ModelError::Domain {
            name,
            value,
            domain: "(0, 1)",
        })
    }
}

/// Time-homogeneous binary Markov source.
///
/// `p = Pr[X' = 1 | X = 0]`, `q = Pr[X' = 0 | X = 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceModel {
    p: f64,
    q: f64,
}

/// Sign of the one-step correlation of the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CorrelationClass {
    /// `p + q < 1`
    Persistent,
    /// `p + q = 1`
    Memoryless,
    /// `p + q > 1`
    Alternating,
}

impl SourceModel {
    pub fn new(p: f64, q: f64) -> Result<Self, ModelError> {
        Ok(Self {
            p: open_unit("p", p)?,
            q: open_unit("q", q)?,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `[v0, v1] = [q, p] / (p + q)`.
    pub fn stationary(&self) -> [f64; 2] {
        let s = self.p + self.q;
        [self.q / s, self.p / s]
    }

    pub fn transition_matrix(&self) -> Mat2 {
        Mat2([[1.0 - self.p, self.p], [self.q, 1.0 - self.q]])
    }

    pub fn correlation_class(&self) -> CorrelationClass {
        let s = self.p + self.q - 1.0;
        if s.abs() < EQUALITY_TOL {
            CorrelationClass::Memoryless
        } else if s < 0.0 {
            CorrelationClass::Persistent
        } else {
            CorrelationClass::Alternating
        }
    }
}

/// Bernoulli success probabilities of Bob's and Eve's erasure channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelPair {
    bob: f64,
    eve: f64,
}

impl ChannelPair {
    pub fn new(p_s: f64, p_s_e: f64) -> Result<Self, ModelError> {
        Ok(Self {
            bob: open_unit("p_s", p_s)?,
            eve: open_unit("p_s_e", p_s_e)?,
        })
    }

    /// `p_s`
    pub fn bob(&self) -> f64 {
        self.bob
    }

    /// `p_s^e`
    pub fn eve(&self) -> f64 {
        self.eve
    }

    pub fn is_symmetric(&self) -> bool {
        (self.bob - self.eve).abs() < EQUALITY_TOL
    }
}

/// Randomized stationary policy: transmit with probability `p_alpha` each slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Policy {
    p_alpha: f64,
}

impl Policy {
    pub fn new(p_alpha: f64) -> Result<Self, ModelError> {
        if p_alpha > 0.0 && p_alpha <= 1.0 {
            Ok(Self { p_alpha })
        } else {
            Err(ModelError::Domain {
                name: "p_alpha",
                value: p_alpha,
                domain: "(0, 1]",
            })
        }
    }

    pub fn p_alpha(&self) -> f64 {
        self.p_alpha
    }
}

/// Joint per-slot reception outcome probabilities.
///
/// `l11`: both receive, `l10`: only Bob, `l01`: only Eve, `l00`: neither
/// (including slots without a transmission).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaSet {
    pub l11: f64,
    pub l10: f64,
    pub l01: f64,
    pub l00: f64,
}

impl LambdaSet {
    pub fn new(pol: Policy, ch: ChannelPair) -> Self {
        let a = pol.p_alpha();
        let (s, e) = (ch.bob(), ch.eve());
        Self {
            l11: a * s * e,
            l10: a * s * (1.0 - e),
            l01: a * (1.0 - s) * e,
            l00: a * (1.0 - s) * (1.0 - e) + (1.0 - a),
        }
    }

    /// Bob's per-slot success probability `P_A = l11 + l10`.
    pub fn p_a(&self) -> f64 {
        self.l11 + self.l10
    }

    /// Eve's per-slot success probability `P_B = l11 + l01`.
    pub fn p_b(&self) -> f64 {
        self.l11 + self.l01
    }

    pub fn sum(&self) -> f64 {
        self.l11 + self.l10 + self.l01 + self.l00
    }
}
