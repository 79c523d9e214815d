use std::fmt;

use cra_core::geofence::{build_maps, extract_contour, GeofenceError, Scene, SpatialMap};
use cra_core::metrics::{
    avg_cra_closed, avg_cra_from_pi, cra_coefficients, marginal_accuracy, marginal_confidentiality,
    weighted_metric,
};
use cra_core::optimizer::optimize;
use cra_core::sim::sweep;
use cra_core::stationary::stationary_numeric;
use cra_core::validate::{run_battery, BatteryConfig, Fault, SimCheck};
use cra_core::{
    ChannelPair, Execution, FeasibleInterval, JointKernel, LambdaSet, MetricReport, Policy,
    SimConfig, SourceModel,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    AnalyzeArgs, Command, FaultArg, Format, GeofenceArgs, ModelArgs, OptimizeArgs, SweepArgs,
    ValidateArgs,
};
use crate::output::{json_bytes, num, opt_num, Outputs};

/// Exit status 2: bad input; nothing was written.
/// Exit status 1: the run completed but a check or a cell failed.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn usage(e: impl fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

/// Result of a subcommand: files to write, text for stdout, and an optional
/// failure to report after writing.
pub struct Run {
    pub outputs: Outputs,
    pub stdout: String,
    pub failure: Option<String>,
}

pub struct Context {
    pub seed: u64,
    pub format: Format,
    pub exec: Execution,
}

pub fn execute(command: &mut Command, ctx: &Context) -> Result<Run, CliError> {
    match command {
        Command::Analyze(a) => analyze(a, ctx),
        Command::Sweep(a) => sweep_cmd(a, ctx),
        Command::Optimize(a) => optimize_cmd(a, ctx),
        Command::Validate(a) => validate(a, ctx),
        Command::Geofence(a) => geofence(a, ctx),
        Command::DemoScene => demo_scene(),
        Command::Replay(_) => unreachable!("replay is dispatched by main"),
    }
}

fn model(m: &ModelArgs) -> Result<(SourceModel, ChannelPair), CliError> {
    let src = SourceModel::new(m.p, m.q).map_err(CliError::usage)?;
    let ch = ChannelPair::new(m.ps, m.pse).map_err(CliError::usage)?;
    Ok((src, ch))
}

fn single(ctx: &Context, stem: &str, json: Value, csv: String) -> Run {
    let mut outputs = Outputs::default();
    let bytes = match ctx.format {
        Format::Json => json_bytes(&json),
        Format::Csv => csv.into_bytes(),
    };
    let stdout = String::from_utf8(bytes.clone()).expect("utf-8 output");
    outputs.add(format!("{stem}.{}", ctx.format.extension()), bytes);
    Run {
        outputs,
        stdout,
        failure: None,
    }
}

fn analyze(a: &AnalyzeArgs, ctx: &Context) -> Result<Run, CliError> {
    let (src, ch) = model(&a.model)?;
    let pol = Policy::new(a.palpha).map_err(CliError::usage)?;
    let report = MetricReport::compute(&src, &ch, &pol, &a.omega).map_err(CliError::usage)?;

    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["inputs"] = json!({ "p": a.model.p, "q": a.model.q, "ps": a.model.ps, "pse": a.model.pse, "palpha": a.palpha });

    let mut csv = String::from("metric,omega,value\n");
    for (name, v) in [
        ("cra", report.cra),
        ("accuracy", report.accuracy),
        ("confidentiality", report.confidentiality),
        (
            "non_confidential_accuracy",
            report.non_confidential_accuracy,
        ),
    ] {
        csv.push_str(&format!("{name},,{}\n", num(v)));
    }
    for w in &report.weighted {
        csv.push_str(&format!("a_omega,{},{}\n", num(w.omega), num(w.value)));
    }
    Ok(single(ctx, "analyze", value, csv))
}

pub const SWEEP_HEADER: &str =
    "p_alpha,cra_closed,cra_numeric,cra_sim_mean,cra_sim_stderr,a0,a1,a_omega";

#[derive(Serialize)]
struct SweepRow {
    p_alpha: f64,
    cra_closed: f64,
    cra_numeric: Option<f64>,
    cra_sim_mean: Option<f64>,
    cra_sim_stderr: Option<f64>,
    a0: f64,
    a1: f64,
    a_omega: f64,
}

/// `from, from + step, …` up to `to`, each point rounded to 12 decimals so
/// the grid prints cleanly.
fn p_alpha_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(from > 0.0 && to <= 1.0 && from <= to && step > 0.0 && step.is_finite()) {
        return Err(CliError::Usage(format!(
            "invalid grid: need 0 < from <= to <= 1 and step > 0 (got from={from}, to={to}, step={step})"
        )));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(CliError::Usage(format!(
            "grid has {} points; at most 1000001 allowed",
            n + 1
        )));
    }
    Ok((0..=n)
        .map(|k| ((from + k as f64 * step) * 1e12).round() / 1e12)
        .map(|x: f64| x.min(to))
        .collect())
}

fn sweep_cmd(a: &SweepArgs, ctx: &Context) -> Result<Run, CliError> {
    let (src, ch) = model(&a.model)?;
    let grid = p_alpha_grid(a.from, a.to, a.step)?;
    if !(0.0..=1.0).contains(&a.omega) {
        return Err(CliError::Usage(format!(
            "omega = {} is outside [0, 1]",
            a.omega
        )));
    }
    let sim = if a.sim {
        let cfg = SimConfig::new(a.horizon, a.runs, ctx.seed, a.warmup).map_err(CliError::usage)?;
        Some(sweep(&src, &ch, &grid, &cfg, ctx.exec).map_err(CliError::usage)?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(grid.len());
    for (k, &pa) in grid.iter().enumerate() {
        let pol = Policy::new(pa).map_err(CliError::usage)?;
        let numeric = if a.numeric {
            let pi = stationary_numeric(&JointKernel::build(&src, &LambdaSet::new(pol, ch)))
                .map_err(|e| CliError::Failure(e.to_string()))?;
            Some(avg_cra_from_pi(&pi))
        } else {
            None
        };
        let est = sim.as_ref().map(|s| s[k].estimate);
        rows.push(SweepRow {
            p_alpha: pa,
            cra_closed: avg_cra_closed(&src, &ch, &pol),
            cra_numeric: numeric,
            cra_sim_mean: est.map(|e| e.mean_cra),
            cra_sim_stderr: est.map(|e| e.stderr_cra),
            a0: marginal_accuracy(&src, &ch, &pol),
            a1: marginal_confidentiality(&src, &ch, &pol),
            a_omega: weighted_metric(&src, &ch, &pol, a.omega).map_err(CliError::usage)?,
        });
    }

    let mut csv = format!("{SWEEP_HEADER}\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            num(r.p_alpha),
            num(r.cra_closed),
            opt_num(r.cra_numeric),
            opt_num(r.cra_sim_mean),
            opt_num(r.cra_sim_stderr),
            num(r.a0),
            num(r.a1),
            num(r.a_omega)
        ));
    }
    let value = json!({ "omega": a.omega, "rows": rows });
    Ok(single(ctx, "sweep", value, csv))
}

fn optimize_cmd(a: &OptimizeArgs, ctx: &Context) -> Result<Run, CliError> {
    let (src, ch) = model(&a.model)?;
    let interval = FeasibleInterval::new(a.pmin, a.pmax).map_err(CliError::usage)?;
    let r = optimize(&src, &ch, &interval).map_err(|e| CliError::Failure(e.to_string()))?;
    let coefficients = cra_coefficients(&src, &ch).ok();
    let value = json!({
        "p_alpha_star": r.p_alpha_star,
        "value": r.value,
        "branch": r.branch,
        "delta": r.delta,
        "interval": interval,
        "coefficients": coefficients,
    });
    let csv = format!(
        "p_alpha_star,value,branch,delta\n{},{},{:?},{}\n",
        num(r.p_alpha_star),
        num(r.value),
        r.branch,
        num(r.delta)
    );
    Ok(single(ctx, "optimize", value, csv))
}

fn validate(a: &ValidateArgs, ctx: &Context) -> Result<Run, CliError> {
    if a.tuples == 0 {
        return Err(CliError::Usage("--tuples must be positive".into()));
    }
    let cfg = BatteryConfig {
        tuples: a.tuples,
        seed: ctx.seed,
        series_terms: a.series_terms,
        symmetric_tuples: a.symmetric_tuples,
        simulation: (!a.no_sim).then(|| SimCheck::fast(ctx.seed)),
        fault: a
            .inject_fault
            .map(|FaultArg::CoefficientSign| Fault::CoefficientSign),
    };
    let report = run_battery(&cfg, ctx.exec);

    let mut csv = String::from("check,cases,failures,worst,tolerance,margin,passed\n");
    for c in &report.checks {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.name,
            c.cases,
            c.failures,
            num(c.worst),
            num(c.tolerance),
            num(c.margin),
            c.passed
        ));
    }
    let mut run = single(
        ctx,
        "validate",
        serde_json::to_value(&report).expect("report serializes"),
        csv,
    );
    let mut summary = String::new();
    for c in &report.checks {
        summary.push_str(&format!(
            "{} {:<24} cases {:>4}  worst {:.3e}  tol {:.1e}  margin {:.3e}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.cases,
            c.worst,
            c.tolerance,
            c.margin
        ));
    }
    run.stdout = summary;
    if !report.passed {
        let names: Vec<&str> = report.failed_checks().map(|c| c.name).collect();
        run.failure = Some(format!("validation failed: {}", names.join(", ")));
    }
    Ok(run)
}

fn map_files(outputs: &mut Outputs, map: &SpatialMap) {
    let mut bin = Vec::new();
    map.write_binary(&mut bin).expect("writing to memory");
    outputs.add(format!("{}.bin", map.quantity), bin);
    let mut csv = Vec::new();
    map.write_csv(&mut csv).expect("writing to memory");
    outputs.add(format!("{}.csv", map.quantity), csv);
}

fn geofence(a: &mut GeofenceArgs, ctx: &Context) -> Result<Run, CliError> {
    let scene = match &a.scene_content {
        Some(s) => s.clone(),
        None => {
            let text = std::fs::read_to_string(&a.scene)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.scene.display())))?;
            Scene::from_json(&text).map_err(CliError::usage)?
        }
    };
    scene.validate().map_err(CliError::usage)?;
    a.scene_content = Some(scene.clone());
    let src = SourceModel::new(a.p, a.q).map_err(CliError::usage)?;
    let interval = FeasibleInterval::new(a.pmin, a.pmax).map_err(CliError::usage)?;
    if !(a.threshold > 0.0 && a.threshold < 1.0) {
        return Err(CliError::usage(GeofenceError::Threshold(a.threshold)));
    }

    let maps = build_maps(&scene, &src, &interval, ctx.exec).map_err(CliError::usage)?;
    let contour = extract_contour(&maps.cra, a.threshold).map_err(CliError::usage)?;

    let summary = json!({
        "scene_hash": maps.cra.scene_hash,
        "bob_success": maps.bob_success,
        "holes": maps.holes,
        "threshold": a.threshold,
        "polylines": contour.polylines.len(),
        "inside_nodes": contour.inside_count(),
        "cra_range": [maps.cra.min(), maps.cra.max()],
        "eve_success_range": [maps.eve_success.min(), maps.eve_success.max()],
        "map_digests": {
            "eve_success_probability": maps.eve_success.digest(),
            "optimal_cra": maps.cra.digest(),
            "optimal_p_alpha": maps.p_alpha.digest(),
        },
    });
    let csv = format!(
        "scene_hash,bob_success,holes,threshold,polylines,inside_nodes\n{},{},{},{},{},{}\n",
        maps.cra.scene_hash,
        num(maps.bob_success),
        maps.holes,
        num(a.threshold),
        contour.polylines.len(),
        contour.inside_count()
    );
    let mut run = single(ctx, "geofence", summary, csv);
    for m in [&maps.eve_success, &maps.cra, &maps.p_alpha] {
        map_files(&mut run.outputs, m);
    }
    run.outputs.add(
        "contour.geojson",
        json_bytes(&contour.to_geojson(&maps.cra)),
    );
    if let Err(e) = maps.validate() {
        run.failure = Some(e.to_string());
    }
    Ok(run)
}

fn demo_scene() -> Result<Run, CliError> {
    let mut text = Scene::demo().to_json();
    text.push('\n');
    let mut outputs = Outputs::default();
    outputs.add("scene.json", text.clone().into_bytes());
    Ok(Run {
        outputs,
        stdout: text,
        failure: None,
    })
}
