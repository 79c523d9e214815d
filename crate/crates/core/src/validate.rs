//! Seeded cross-check battery.
//!
//! Every check compares two independent computations of the same quantity
//! over randomly drawn tuples and records the worst discrepancy against a
//! fixed tolerance. The report is a pure function of the configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exec::Execution;
use crate::metrics::{avg_cra_from_pi, bob_marginal, cra_coefficients, eve_marginal, CraRational};
use crate::model::{ChannelPair, CorrelationClass, LambdaSet, Policy, SourceModel};
use crate::optimizer::{
    checked_discriminant, discriminant, grid_argmax, optimize, optimize_rational, FeasibleInterval,
};
use crate::sim::{simulate, SimConfig};
use crate::stationary::{
    series_truncation_bound, stationary_by_series, stationary_closed_form, stationary_numeric,
    JointKernel,
};

pub const THREE_ORACLE_TOL: f64 = 1e-8;
pub const RATIONAL_TOL: f64 = 1e-10;
pub const MARGINAL_TOL: f64 = 1e-10;
pub const OPTIMIZER_TOL: f64 = 2e-4;
pub const GRID_STEP: f64 = 1e-4;
pub const DISCRIMINANT_TOL: f64 = 1e-9;
/// Points of the `p_α` grid used by the rational-form check.
pub const RATIONAL_GRID: usize = 20;

/// Deliberate defects used to prove the battery can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fault {
    /// Flips the sign of the `A` coefficient of the rational form.
    CoefficientSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatteryConfig {
    pub tuples: usize,
    pub seed: u64,
    pub series_terms: usize,
    /// Symmetric tuples per correlation class for the endpoint check.
    pub symmetric_tuples: usize,
    /// Simulation agreement is skipped when `None`.
    pub simulation: Option<SimCheck>,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimCheck {
    pub tuples: usize,
    pub config: SimConfig,
    /// Allowed deviation in standard errors.
    pub sigmas: f64,
}

impl SimCheck {
    /// `T = 5000`, 50 runs, 5σ.
    pub fn fast(seed: u64) -> Self {
        Self {
            tuples: 5,
            config: SimConfig::new(5_000, 50, seed, 1_000).expect("valid"),
            sigmas: 5.0,
        }
    }
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            tuples: 200,
            seed: 1,
            series_terms: crate::stationary::DEFAULT_SERIES_TERMS,
            symmetric_tuples: 20,
            simulation: Some(SimCheck::fast(1)),
            fault: None,
        }
    }
}

/// Worst case of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed discrepancy (or violation, for one-sided checks).
    pub worst: f64,
    pub tolerance: f64,
    /// `tolerance − worst`; negative when the check fails.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub config: BatteryConfig,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            cases: 0,
            failures: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        // NaN counts as a failure.
        if !(err <= self.tolerance) {
            self.failures += 1;
        }
        if err.is_nan() || err > self.worst {
            self.worst = if err.is_nan() { f64::INFINITY } else { err };
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            cases: self.cases,
            failures: self.failures,
            worst: self.worst,
            tolerance: self.tolerance,
            margin: self.tolerance - self.worst,
            passed: self.failures == 0,
        }
    }
}

/// A random model tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuple {
    pub src: SourceModel,
    pub ch: ChannelPair,
    pub pol: Policy,
}

/// Draws `p, q, p_s, p_s^e ∈ (0.02, 0.98)` and `p_α ∈ (0.02, 1]`.
pub fn random_tuple(rng: &mut impl Rng) -> Tuple {
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let src = SourceModel::new(u(0.02, 0.98), u(0.02, 0.98)).expect("in domain");
    let ch = ChannelPair::new(u(0.02, 0.98), u(0.02, 0.98)).expect("in domain");
    let pol = Policy::new(1.0 - u(0.0, 0.98)).expect("in domain");
    Tuple { src, ch, pol }
}

/// [`random_tuple`] restricted to `|p_s − p_s^e| > 1e-6`.
pub fn random_general_tuple(rng: &mut impl Rng) -> Tuple {
    loop {
        let t = random_tuple(rng);
        if (t.ch.bob() - t.ch.eve()).abs() > 1e-6 {
            return t;
        }
    }
}

fn coefficients(t: &Tuple, fault: Option<Fault>) -> CraRational {
    let mut k = cra_coefficients(&t.src, &t.ch).expect("general branch");
    if fault == Some(Fault::CoefficientSign) {
        k.a = -k.a;
    }
    k
}

/// Runs the battery.
pub fn run_battery(cfg: &BatteryConfig, exec: Execution) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tuples: Vec<Tuple> = (0..cfg.tuples)
        .map(|_| random_general_tuple(&mut rng))
        .collect();
    let interval = FeasibleInterval::default();

    let mut linear = Tally::new("closed_vs_linear_solve", THREE_ORACLE_TOL);
    // Series error relative to max(tolerance, certified truncation bound).
    let mut series = Tally::new("series_within_bound", 1.0);
    let mut rational = Tally::new("rational_form", RATIONAL_TOL);
    let mut marginals = Tally::new("marginals", MARGINAL_TOL);
    let mut partition = Tally::new("partition_identity", MARGINAL_TOL);
    let mut delta = Tally::new("discriminant", DISCRIMINANT_TOL);
    let mut opt = Tally::new("optimizer_vs_grid", OPTIMIZER_TOL);

    // Per-tuple work is independent; gather the errors, then tally in order.
    let rows = exec.map(tuples.len(), |i| {
        let t = &tuples[i];
        let lam = LambdaSet::new(t.pol, t.ch);
        let closed = stationary_closed_form(&t.src, &lam).ok();
        let numeric = stationary_numeric(&JointKernel::build(&t.src, &lam)).ok();
        let series = stationary_by_series(&t.src, &lam, cfg.series_terms);
        let allowed = THREE_ORACLE_TOL.max(series_truncation_bound(&lam, cfg.series_terms));
        let (linear_err, series_err) = match (closed, numeric) {
            (Some(c), Some(n)) => (
                c.max_abs_diff(&n),
                c.max_abs_diff(&series).max(n.max_abs_diff(&series)) / allowed,
            ),
            _ => (f64::INFINITY, f64::INFINITY),
        };

        let k = coefficients(t, cfg.fault);
        let mut rational_err: f64 = 0.0;
        for g in 0..RATIONAL_GRID {
            let a = 0.02 + 0.98 * g as f64 / (RATIONAL_GRID - 1) as f64;
            let pol = Policy::new(a).expect("in domain");
            let pi = stationary_closed_form(&t.src, &LambdaSet::new(pol, t.ch)).expect("regular");
            rational_err = rational_err.max((k.eval(a) - avg_cra_from_pi(&pi)).abs());
        }

        let (marg_err, part_err) = match closed {
            Some(pi) => {
                let bob = bob_marginal(&t.src, &t.ch, &t.pol);
                let eve = eve_marginal(&t.src, &t.ch, &t.pol);
                let m = |x: u8, a: u8| pi.get(x, a, 0) + pi.get(x, a, 1);
                let me = |x: u8, b: u8| pi.get(x, 0, b) + pi.get(x, 1, b);
                let errs = [
                    bob[0] - m(0, 0),
                    bob[1] - m(1, 1),
                    eve[0] - me(0, 1),
                    eve[1] - me(1, 0),
                ];
                let marg = errs.iter().fold(0.0f64, |w, e| w.max(e.abs()));
                let both = pi.get(0, 0, 0) + pi.get(1, 1, 1);
                let part = (avg_cra_from_pi(&pi) + both - (bob[0] + bob[1])).abs();
                (marg, part)
            }
            None => (f64::INFINITY, f64::INFINITY),
        };

        let raw = discriminant(&k);
        let delta_violation = (-raw / (k.scale() * k.scale())).max(0.0);

        let opt_err = match (
            checked_discriminant(&k).and_then(|_| optimize_rational(&t.src, &t.ch, &k, &interval)),
            grid_argmax(&t.src, &t.ch, &interval, GRID_STEP),
        ) {
            (Ok(r), Ok((g, _))) => (r.p_alpha_star - g).abs(),
            _ => f64::INFINITY,
        };
        [
            linear_err,
            series_err,
            rational_err,
            marg_err,
            part_err,
            delta_violation,
            opt_err,
        ]
    });
    for r in &rows {
        linear.record(r[0]);
        series.record(r[1]);
        rational.record(r[2]);
        marginals.record(r[3]);
        partition.record(r[4]);
        delta.record(r[5]);
        opt.record(r[6]);
    }

    let mut checks = vec![
        linear.finish(),
        series.finish(),
        rational.finish(),
        marginals.finish(),
        partition.finish(),
        delta.finish(),
        opt.finish(),
    ];
    checks.push(symmetric_endpoints(cfg, &mut rng, &interval));
    if let Some(sim) = &cfg.simulation {
        checks.push(simulation_agreement(sim, &mut rng, exec));
    }
    let passed = checks.iter().all(|c| c.passed);
    ValidationReport {
        config: *cfg,
        checks,
        passed,
    }
}

/// Symmetric channels: the optimizer endpoint must match the grid oracle.
fn symmetric_endpoints(
    cfg: &BatteryConfig,
    rng: &mut ChaCha8Rng,
    interval: &FeasibleInterval,
) -> CheckResult {
    let mut tally = Tally::new("symmetric_endpoints", 1e-12);
    for class in [
        CorrelationClass::Persistent,
        CorrelationClass::Memoryless,
        CorrelationClass::Alternating,
    ] {
        for _ in 0..cfg.symmetric_tuples {
            let p: f64 = rng.random_range(0.05..0.95);
            let q = match class {
                CorrelationClass::Persistent => rng.random_range(0.02..(1.0 - p).max(0.03) - 0.01),
                CorrelationClass::Memoryless => 1.0 - p,
                CorrelationClass::Alternating => rng.random_range((1.0 - p + 0.01).min(0.97)..0.98),
            };
            let Ok(src) = SourceModel::new(p, q) else {
                continue;
            };
            if src.correlation_class() != class {
                continue;
            }
            let s = rng.random_range(0.02..0.98);
            let ch = ChannelPair::new(s, s).expect("in domain");
            let err = match (
                optimize(&src, &ch, interval),
                grid_argmax(&src, &ch, interval, 1e-3),
            ) {
                (Ok(r), Ok((g, _))) => (r.p_alpha_star - g).abs(),
                _ => f64::INFINITY,
            };
            tally.record(err);
        }
    }
    tally.finish()
}

/// Simulated mean CRA within `sigmas` standard errors of the closed form.
fn simulation_agreement(sim: &SimCheck, rng: &mut ChaCha8Rng, exec: Execution) -> CheckResult {
    let mut tally = Tally::new("simulation_agreement", sim.sigmas);
    for _ in 0..sim.tuples {
        let t = random_tuple(rng);
        let exact = crate::metrics::avg_cra_closed(&t.src, &t.ch, &t.pol);
        let est = simulate(&t.src, &t.ch, &t.pol, &sim.config, exec);
        let z = if est.stderr_cra > 0.0 {
            (est.mean_cra - exact).abs() / est.stderr_cra
        } else if (est.mean_cra - exact).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        tally.record(z);
    }
    tally.finish()
}
