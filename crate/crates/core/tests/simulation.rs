use std::num::NonZeroUsize;

use cra_core::metrics::{avg_cra_closed, marginal_accuracy, marginal_confidentiality};
use cra_core::optimizer::optimize;
use cra_core::sim::{
    capture_trace, empirical_age_distribution, simulate, sweep, AgeSampling, TRACE_HEADER,
};
use cra_core::{
    ChannelPair, Execution, FeasibleInterval, LambdaSet, Policy, SimConfig, SourceModel,
};

#[test]
fn schedule_does_not_change_results() {
    let src = SourceModel::new(0.25, 0.35).unwrap();
    let ch = ChannelPair::new(0.75, 0.3).unwrap();
    let pol = Policy::new(0.45).unwrap();
    let cfg = SimConfig::new(4_000, 24, 17, 500).unwrap();
    let seq = simulate(&src, &ch, &pol, &cfg, Execution::Sequential);
    let par = simulate(&src, &ch, &pol, &cfg, Execution::Parallel);
    let three = simulate(
        &src,
        &ch,
        &pol,
        &cfg,
        Execution::Workers(NonZeroUsize::new(3).unwrap()),
    );
    assert_eq!(seq, par);
    assert_eq!(seq, three);
}

#[test]
fn seeds_matter_and_repeat() {
    let src = SourceModel::new(0.25, 0.35).unwrap();
    let ch = ChannelPair::new(0.75, 0.3).unwrap();
    let pol = Policy::new(0.45).unwrap();
    let a = SimConfig::new(3_000, 8, 1, 500).unwrap();
    let b = SimConfig::new(3_000, 8, 2, 500).unwrap();
    let x = simulate(&src, &ch, &pol, &a, Execution::Sequential);
    assert_eq!(x, simulate(&src, &ch, &pol, &a, Execution::Sequential));
    assert_ne!(x, simulate(&src, &ch, &pol, &b, Execution::Sequential));
}

#[test]
fn all_three_metrics_agree() {
    let src = SourceModel::new(0.15, 0.5).unwrap();
    let ch = ChannelPair::new(0.6, 0.35).unwrap();
    let pol = Policy::new(0.7).unwrap();
    let cfg = SimConfig::new(20_000, 60, 5, 1_000).unwrap();
    let est = simulate(&src, &ch, &pol, &cfg, Execution::default());
    let z = |mean: f64, se: f64, exact: f64| (mean - exact).abs() / se;
    assert!(
        z(
            est.mean_cra,
            est.stderr_cra,
            avg_cra_closed(&src, &ch, &pol)
        ) < 5.0
    );
    assert!(
        z(
            est.mean_accuracy,
            est.stderr_accuracy,
            marginal_accuracy(&src, &ch, &pol)
        ) < 5.0
    );
    assert!(
        z(
            est.mean_confidentiality,
            est.stderr_confidentiality,
            marginal_confidentiality(&src, &ch, &pol)
        ) < 5.0
    );
}

#[test]
fn sweep_tracks_the_curve() {
    let src = SourceModel::new(0.2, 0.3).unwrap();
    let ch = ChannelPair::new(0.9, 0.4).unwrap();
    let grid = [0.1, 0.4, 0.7, 1.0];
    let cfg = SimConfig::new(10_000, 30, 3, 1_000).unwrap();
    let pts = sweep(&src, &ch, &grid, &cfg, Execution::default()).unwrap();
    assert_eq!(pts.len(), 4);
    for pt in pts {
        let exact = avg_cra_closed(&src, &ch, &Policy::new(pt.p_alpha).unwrap());
        assert!((pt.estimate.mean_cra - exact).abs() < 5.0 * pt.estimate.stderr_cra);
    }
    assert!(sweep(&src, &ch, &[0.5, 0.0], &cfg, Execution::default()).is_err());
}

#[test]
fn trace_csv_matches_records() {
    let src = SourceModel::new(0.4, 0.4).unwrap();
    let ch = ChannelPair::new(0.8, 0.2).unwrap();
    let pol = Policy::new(0.5).unwrap();
    let cfg = SimConfig::new(200, 1, 9, 10).unwrap();
    let trace = capture_trace(&src, &ch, &pol, &cfg, 0);
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TRACE_HEADER));
    assert_eq!(lines.count(), trace.records.len());
    for r in &trace.records {
        assert_eq!(r.cra, r.xhat == r.x && r.xhat_e != r.x);
    }
}

#[test]
fn warmup_does_not_shift_the_means() {
    let src = SourceModel::new(0.25, 0.35).unwrap();
    let ch = ChannelPair::new(0.75, 0.3).unwrap();
    let pol = Policy::new(0.45).unwrap();
    let cold = SimConfig::new(20_000, 100, 21, 0).unwrap();
    let warm = SimConfig::new(20_000, 100, 21, 1_000).unwrap();
    let a = simulate(&src, &ch, &pol, &cold, Execution::default());
    let b = simulate(&src, &ch, &pol, &warm, Execution::default());
    let se = a.stderr_cra.hypot(b.stderr_cra);
    assert!((a.mean_cra - b.mean_cra).abs() < 3.0 * se);
}

#[test]
fn symmetric_memoryless_sweep_is_flat() {
    let src = SourceModel::new(0.3, 0.7).unwrap();
    let ch = ChannelPair::new(0.6, 0.6).unwrap();
    let grid: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let cfg = SimConfig::new(10_000, 40, 8, 1_000).unwrap();
    let pts = sweep(&src, &ch, &grid, &cfg, Execution::default()).unwrap();
    for a in &pts {
        for b in &pts {
            let se = a.estimate.stderr_cra.hypot(b.estimate.stderr_cra);
            assert!((a.estimate.mean_cra - b.estimate.mean_cra).abs() < 3.0 * se);
        }
    }
}

#[test]
fn sweep_argmax_agrees_with_the_optimizer() {
    let src = SourceModel::new(0.2, 0.3).unwrap();
    let ch = ChannelPair::new(0.8, 0.4).unwrap();
    let opt = optimize(&src, &ch, &FeasibleInterval::default()).unwrap();
    let grid: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
    let cfg = SimConfig::new(20_000, 60, 4, 1_000).unwrap();
    let pts = sweep(&src, &ch, &grid, &cfg, Execution::default()).unwrap();
    let best = pts
        .iter()
        .max_by(|a, b| a.estimate.mean_cra.total_cmp(&b.estimate.mean_cra))
        .unwrap();
    let near = pts
        .iter()
        .min_by(|a, b| {
            (a.p_alpha - opt.p_alpha_star)
                .abs()
                .total_cmp(&(b.p_alpha - opt.p_alpha_star).abs())
        })
        .unwrap();
    let se = best.estimate.stderr_cra.hypot(near.estimate.stderr_cra);
    assert!(best.estimate.mean_cra - near.estimate.mean_cra < 3.0 * se);
    assert!(best.estimate.mean_cra < opt.value + 3.0 * best.estimate.stderr_cra);
}

#[test]
fn synchronized_age_cell_matches_lambda_11() {
    let src = SourceModel::new(0.3, 0.2).unwrap();
    let ch = ChannelPair::new(0.7, 0.4).unwrap();
    let pol = Policy::new(0.6).unwrap();
    let lam = LambdaSet::new(pol, ch);
    let cfg = SimConfig::new(1_000 + 64 * 200, 100, 12, 1_000).unwrap();
    let sampling = AgeSampling {
        cap: 40,
        stride: 64,
    };
    let hist =
        empirical_age_distribution(&src, &ch, &pol, &cfg, sampling, Execution::default()).unwrap();
    let n = hist.samples() as f64;
    let se = (lam.l11 * (1.0 - lam.l11) / n).sqrt();
    assert!((hist.frequency(0, 0) - lam.l11).abs() < 3.0 * se);
}
