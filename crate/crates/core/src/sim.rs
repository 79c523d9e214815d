//! Slot-level Monte Carlo simulation of the source, the randomized
//! transmitter, both erasure channels and the two last-value estimators.
//!
//! Every replication owns a ChaCha8 generator seeded from the master seed
//! with the run index as stream id, and consumes exactly four uniforms per
//! slot in a fixed order (source transition, transmit decision, Bob's
//! channel, Eve's channel). Results are reduced in run-index order, so the
//! output is identical for any worker count.
//!
//! Both receivers are synchronized at `t = 0` (they hold `X_0` with age 0),
//! which makes the estimators well defined from the first slot on.

use std::io::{self, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::model::{ChannelPair, ModelError, Policy, SourceModel};

pub const DEFAULT_HORIZON: u64 = 50_000;
pub const DEFAULT_RUNS: u64 = 400;
pub const DEFAULT_WARMUP: u64 = 1_000;
pub const DEFAULT_SEED: u64 = 1;
/// Maximum number of slots kept by [`capture_trace`].
pub const TRACE_CAP: u64 = 1_000_000;

pub const TRACE_HEADER: &str = "t,x,alpha,h,h_e,theta,theta_e,xhat,xhat_e,cra";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("runs must be at least 1")]
    Runs,
    #[error("warmup {warmup} must be smaller than the horizon {horizon}")]
    Warmup { warmup: u64, horizon: u64 },
    #[error("p_alpha grid is empty")]
    EmptyGrid,
    #[error("age histogram cap and stride must be positive")]
    Sampling,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    horizon: u64,
    runs: u64,
    seed: u64,
    warmup: u64,
}

impl SimConfig {
    pub fn new(horizon: u64, runs: u64, seed: u64, warmup: u64) -> Result<Self, SimError> {
        if horizon < 1 {
            return Err(SimError::Horizon);
        }
        if runs < 1 {
            return Err(SimError::Runs);
        }
        if warmup >= horizon {
            return Err(SimError::Warmup { warmup, horizon });
        }
        Ok(Self {
            horizon,
            runs,
            seed,
            warmup,
        })
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }
    pub fn runs(&self) -> u64 {
        self.runs
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn warmup(&self) -> u64 {
        self.warmup
    }

    /// Number of slots averaged per run: `(warmup, horizon]`.
    pub fn measured_slots(&self) -> u64 {
        self.horizon - self.warmup
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            runs: DEFAULT_RUNS,
            seed: DEFAULT_SEED,
            warmup: DEFAULT_WARMUP,
        }
    }
}

/// One slot of a replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlotRecord {
    pub t: u64,
    pub x: u8,
    pub alpha: bool,
    pub h: bool,
    pub h_e: bool,
    pub theta: u64,
    pub theta_e: u64,
    pub xhat: u8,
    pub xhat_e: u8,
    pub cra: bool,
}

#[inline]
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// State of one replication.
struct Replication {
    rng: ChaCha8Rng,
    p: f64,
    q: f64,
    p_alpha: f64,
    p_s: f64,
    p_s_e: f64,
    rec: SlotRecord,
}

impl Replication {
    fn new(src: &SourceModel, ch: &ChannelPair, pol: &Policy, seed: u64, run: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run);
        let x = u8::from(unit(&mut rng) < src.stationary()[1]);
        let rec = SlotRecord {
            t: 0,
            x,
            alpha: true,
            h: true,
            h_e: true,
            theta: 0,
            theta_e: 0,
            xhat: x,
            xhat_e: x,
            cra: false,
        };
        Self {
            rng,
            p: src.p(),
            q: src.q(),
            p_alpha: pol.p_alpha(),
            p_s: ch.bob(),
            p_s_e: ch.eve(),
            rec,
        }
    }

    #[inline]
    fn step(&mut self) -> &SlotRecord {
        let flip = unit(&mut self.rng) < if self.rec.x == 0 { self.p } else { self.q };
        let alpha = unit(&mut self.rng) < self.p_alpha;
        let h = unit(&mut self.rng) < self.p_s;
        let h_e = unit(&mut self.rng) < self.p_s_e;

        let r = &mut self.rec;
        r.t += 1;
        r.x ^= u8::from(flip);
        r.alpha = alpha;
        r.h = h;
        r.h_e = h_e;
        if alpha && h {
            r.theta = 0;
            r.xhat = r.x;
        } else {
            r.theta += 1;
        }
        if alpha && h_e {
            r.theta_e = 0;
            r.xhat_e = r.x;
        } else {
            r.theta_e += 1;
        }
        r.cra = r.xhat == r.x && r.xhat_e != r.x;
        r
    }
}

/// Per-run time averages.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RunMeans {
    cra: f64,
    accuracy: f64,
    confidentiality: f64,
}

fn run_once(
    src: &SourceModel,
    ch: &ChannelPair,
    pol: &Policy,
    cfg: &SimConfig,
    run: u64,
) -> RunMeans {
    let mut rep = Replication::new(src, ch, pol, cfg.seed, run);
    for _ in 0..cfg.warmup {
        rep.step();
    }
    let (mut cra, mut acc, mut conf) = (0u64, 0u64, 0u64);
    for _ in cfg.warmup..cfg.horizon {
        let r = rep.step();
        cra += u64::from(r.cra);
        acc += u64::from(r.xhat == r.x);
        conf += u64::from(r.xhat_e != r.x);
    }
    let n = cfg.measured_slots() as f64;
    RunMeans {
        cra: cra as f64 / n,
        accuracy: acc as f64 / n,
        confidentiality: conf as f64 / n,
    }
}

/// Cross-run means and standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEstimate {
    pub mean_cra: f64,
    pub mean_accuracy: f64,
    pub mean_confidentiality: f64,
    pub stderr_cra: f64,
    pub stderr_accuracy: f64,
    pub stderr_confidentiality: f64,
    pub runs_used: u64,
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `cfg.runs()` independent replications.
pub fn simulate(
    src: &SourceModel,
    ch: &ChannelPair,
    pol: &Policy,
    cfg: &SimConfig,
    exec: Execution,
) -> SimEstimate {
    let runs = exec.map(cfg.runs as usize, |r| run_once(src, ch, pol, cfg, r as u64));
    let (mean_cra, stderr_cra) = mean_and_stderr(runs.iter().map(|r| r.cra));
    let (mean_accuracy, stderr_accuracy) = mean_and_stderr(runs.iter().map(|r| r.accuracy));
    let (mean_confidentiality, stderr_confidentiality) =
        mean_and_stderr(runs.iter().map(|r| r.confidentiality));
    SimEstimate {
        mean_cra,
        mean_accuracy,
        mean_confidentiality,
        stderr_cra,
        stderr_accuracy,
        stderr_confidentiality,
        runs_used: cfg.runs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub p_alpha: f64,
    pub estimate: SimEstimate,
}

/// One [`simulate`] per grid point, all with the same master seed.
pub fn sweep(
    src: &SourceModel,
    ch: &ChannelPair,
    grid: &[f64],
    cfg: &SimConfig,
    exec: Execution,
) -> Result<Vec<SweepPoint>, SimError> {
    if grid.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    let policies = grid
        .iter()
        .map(|&a| Policy::new(a))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(policies
        .iter()
        .map(|pol| SweepPoint {
            p_alpha: pol.p_alpha(),
            estimate: simulate(src, ch, pol, cfg, exec),
        })
        .collect())
}

/// Which slots feed the age histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgeSampling {
    /// Largest age tracked per axis; larger ages land in the overflow counters.
    pub cap: usize,
    /// Sample every `stride`-th slot after warmup, starting with the first.
    pub stride: u64,
}

/// Joint histogram of `(Θ, Θᵉ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgeHistogram {
    cap: usize,
    counts: Vec<u64>,
    /// Bob's age marginal, `cap + 2` bins with the last one for `Θ > cap`.
    bob: Vec<u64>,
    eve: Vec<u64>,
    samples: u64,
}

impl AgeHistogram {
    fn new(cap: usize) -> Self {
        let side = cap + 1;
        Self {
            cap,
            counts: vec![0; side * side],
            bob: vec![0; cap + 2],
            eve: vec![0; cap + 2],
            samples: 0,
        }
    }

    fn record(&mut self, theta: u64, theta_e: u64) {
        let cap = self.cap as u64;
        self.samples += 1;
        self.bob[theta.min(cap + 1) as usize] += 1;
        self.eve[theta_e.min(cap + 1) as usize] += 1;
        if theta <= cap && theta_e <= cap {
            self.counts[theta as usize * (self.cap + 1) + theta_e as usize] += 1;
        }
    }

    fn merge(&mut self, other: &AgeHistogram) {
        self.samples += other.samples;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.bob.iter_mut().zip(&other.bob) {
            *a += b;
        }
        for (a, b) in self.eve.iter_mut().zip(&other.eve) {
            *a += b;
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * (self.cap + 1) + j]
    }

    /// Normalized by the total number of samples.
    pub fn frequency(&self, i: usize, j: usize) -> f64 {
        self.count(i, j) as f64 / self.samples as f64
    }

    /// Bob's age counts `0..=cap` followed by the `> cap` overflow.
    pub fn bob_marginal(&self) -> &[u64] {
        &self.bob
    }

    pub fn eve_marginal(&self) -> &[u64] {
        &self.eve
    }
}

/// Empirical joint distribution of Bob's and Eve's ages.
pub fn empirical_age_distribution(
    src: &SourceModel,
    ch: &ChannelPair,
    pol: &Policy,
    cfg: &SimConfig,
    sampling: AgeSampling,
    exec: Execution,
) -> Result<AgeHistogram, SimError> {
    if sampling.cap == 0 || sampling.stride == 0 {
        return Err(SimError::Sampling);
    }
    let parts = exec.map(cfg.runs as usize, |run| {
        let mut hist = AgeHistogram::new(sampling.cap);
        let mut rep = Replication::new(src, ch, pol, cfg.seed, run as u64);
        for _ in 0..cfg.warmup {
            rep.step();
        }
        for k in 0..cfg.measured_slots() {
            let r = rep.step();
            if k % sampling.stride == 0 {
                hist.record(r.theta, r.theta_e);
            }
        }
        hist
    });
    let mut total = AgeHistogram::new(sampling.cap);
    for h in &parts {
        total.merge(h);
    }
    Ok(total)
}

/// Slot records of one replication, `t = 0` (the synchronizing slot) included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTrace {
    pub records: Vec<SlotRecord>,
}

impl SimTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.t,
                r.x,
                u8::from(r.alpha),
                u8::from(r.h),
                u8::from(r.h_e),
                r.theta,
                r.theta_e,
                r.xhat,
                r.xhat_e,
                u8::from(r.cra)
            )?;
        }
        Ok(())
    }
}

/// Replays run `run` of `cfg` slot by slot, keeping at most [`TRACE_CAP`] slots.
pub fn capture_trace(
    src: &SourceModel,
    ch: &ChannelPair,
    pol: &Policy,
    cfg: &SimConfig,
    run: u64,
) -> SimTrace {
    let slots = cfg.horizon.min(TRACE_CAP - 1);
    let mut rep = Replication::new(src, ch, pol, cfg.seed, run);
    let mut records = Vec::with_capacity(slots as usize + 1);
    records.push(rep.rec);
    for _ in 0..slots {
        records.push(*rep.step());
    }
    SimTrace { records }
}
