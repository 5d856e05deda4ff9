use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use slelab::geometry::{Rect, WhitneyHistogram};
use slelab::mc::*;

use crate::config::{self, Params};
use crate::{io_error, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Cardy,
    Dermoment,
    Zmoment,
    Bessel,
    Swallow,
    Tracedim,
    Boundarydim,
    Transience,
    Dtail,
}

impl Experiment {
    fn name(self) -> String {
        self.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    pub name: Experiment,
    /// JSON configuration (`{"schema": 1, "run": {...}, "params": {...}}`); flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Adaptive step factor h: steps of length max(horizon/steps, h²r²).
    #[arg(long)]
    pub rel_step: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub swallow_tol: Option<f64>,
    #[arg(long)]
    pub c_hit: Option<f64>,
    #[arg(long)]
    pub stop_im: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_undecided: Option<f64>,
    #[arg(long)]
    pub max_excluded: Option<f64>,
    /// Worker threads; defaults to the config file, then SLELAB_WORKERS.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory for results.csv and manifest.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub params: Params,
}

/// Everything an experiment produced besides the CSV rows.
struct Outcome {
    rows: Vec<ResultRow>,
    undecided: usize,
    excluded: usize,
    warnings: Vec<String>,
    details: Value,
    extra_files: Vec<(String, WhitneyHistogram)>,
}

impl Outcome {
    fn from_batch(b: BatchResult, details: Value) -> Self {
        Outcome {
            rows: b.rows(),
            undecided: b.undecided,
            excluded: b.excluded,
            warnings: b.warnings,
            details,
            extra_files: Vec::new(),
        }
    }
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: String,
    version: String,
    experiment: Experiment,
    config: &'a ExperimentConfig,
    params: Value,
    master_seed: u64,
    seed_rule: &'static str,
    undecided: usize,
    excluded: usize,
    warnings: &'a [String],
    passed: bool,
    wall_time_s: f64,
    outputs: Vec<String>,
    details: &'a Value,
}

fn apply_flags(cfg: &mut ExperimentConfig, a: &ExperimentArgs) {
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => { $(if let Some(v) = a.$flag { cfg.$field = v; })* };
    }
    set!(kappa => kappa, runs => n_runs, steps => n_steps, seed => master_seed, max_steps => max_steps,
         c_hit => c_hit, stop_im => stop_im, threshold => threshold,
         max_undecided => max_undecided, max_excluded => max_excluded);
    if a.horizon.is_some() {
        cfg.horizon = a.horizon;
    }
    if a.rel_step.is_some() {
        cfg.rel_step = a.rel_step;
    }
    if a.swallow_tol.is_some() {
        cfg.swallow_tol = a.swallow_tol;
    }
    if a.workers.is_some() {
        cfg.workers = a.workers;
    }
    if a.out.is_some() {
        cfg.output = a.out.clone();
    }
}

fn workers_from_env(cfg: &mut ExperimentConfig) -> Result<(), CliError> {
    if cfg.workers.is_none() {
        if let Ok(v) = std::env::var("SLELAB_WORKERS") {
            let n = v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("SLELAB_WORKERS: not a worker count: {v:?}")))?;
            cfg.workers = Some(n);
        }
    }
    Ok(())
}

fn rect(v: &[f64], what: &str) -> Result<Rect, CliError> {
    match v {
        [x0, x1, y0, y1] => Ok(Rect::new(*x0, *x1, *y0, *y1)?),
        _ => Err(CliError::Usage(format!("--{what} needs four numbers x0,x1,y0,y1"))),
    }
}

/// Fills the defaults of `name` into `p`, so the manifest records exactly what ran.
fn resolve(name: Experiment, cfg: &ExperimentConfig, mut p: Params) -> Params {
    let set = |v: &mut Option<f64>, d: f64| {
        v.get_or_insert(d);
    };
    match name {
        Experiment::Cardy => {
            p.s.get_or_insert_with(|| vec![1.5, 2.0, 4.0]);
        }
        Experiment::Dermoment => {
            set(&mut p.x, 0.0);
            set(&mut p.y, 2.0);
            set(&mut p.b, 1.0);
        }
        Experiment::Zmoment => {
            set(&mut p.x, 0.0);
            set(&mut p.y, 1.0);
            set(&mut p.a, 0.5);
            p.stop_levels.get_or_insert_with(|| vec![cfg.stop_im]);
        }
        Experiment::Bessel => {
            set(&mut p.x, 2.0);
            set(&mut p.a, 1.0);
            set(&mut p.b, 4.0);
        }
        Experiment::Swallow => {
            set(&mut p.x, 0.0);
            set(&mut p.y, 1.0);
            p.times.get_or_insert_with(|| vec![1.0, 10.0, 100.0]);
        }
        Experiment::Tracedim => {
            p.eps.get_or_insert_with(|| (3..=7).map(|k| 2f64.powi(-k)).collect());
            let w = DIMENSION_WINDOW;
            p.window.get_or_insert_with(|| vec![w.x0, w.x1, w.y0, w.y1]);
        }
        Experiment::Boundarydim => {
            set(&mut p.h, 0.5);
            p.levels.get_or_insert_with(|| (3..=7).collect());
            p.region.get_or_insert_with(|| vec![-4.0, 4.0, 0.0, 4.0]);
        }
        Experiment::Transience => {
            p.checkpoints.get_or_insert_with(|| vec![1.0, 4.0, 16.0]);
        }
        Experiment::Dtail => {
            set(&mut p.x, 0.0);
            set(&mut p.y, 1.0);
            set(&mut p.t, 1.0);
            set(&mut p.b, 0.5);
            p.delta.get_or_insert_with(|| vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0]);
        }
    }
    set(&mut p.z_bound, 3.0);
    set(&mut p.abs_slack, 0.02);
    set(&mut p.rel_slack, 0.0);
    p
}

fn slope_row(slope: &MCEstimate, target: f64, kappa: f64) -> ResultRow {
    ResultRow {
        param: kappa,
        estimate: slope.mean,
        stderr: slope.stderr,
        n: slope.n,
        target: Some(target),
        z_score: (slope.stderr > 0.0).then(|| (slope.mean - target) / slope.stderr),
    }
}

const HIT_RADII: [f64; 3] = [1.0, 2.0, 4.0];

/// Runs `estimate` at the configured `c_hit` and again at the other radii in
/// `HIT_RADII`, recording the largest drift in units of the main stderr.
fn with_hit_sensitivity(
    cfg: &ExperimentConfig,
    estimate: impl Fn(&ExperimentConfig) -> slelab::Result<BatchResult>,
) -> Result<Outcome, CliError> {
    let main = estimate(cfg)?;
    let mut reruns = Vec::new();
    let mut warnings = Vec::new();
    for c_hit in HIT_RADII.into_iter().filter(|&c| c != cfg.c_hit) {
        match estimate(&ExperimentConfig { c_hit, ..cfg.clone() }) {
            Ok(b) => {
                let drift = main
                    .estimates
                    .iter()
                    .zip(&b.estimates)
                    .map(|(m, e)| (e.mean - m.mean).abs() / m.stderr)
                    .fold(0.0, f64::max);
                if drift >= 2.0 {
                    warnings.push(format!("c_hit = {c_hit} moves an estimate by {drift:.2} stderr"));
                }
                let means: Vec<f64> = b.estimates.iter().map(|e| e.mean).collect();
                reruns.push(json!({ "c_hit": c_hit, "estimates": means, "max_drift_stderr": drift }));
            }
            Err(e) => warnings.push(format!("c_hit = {c_hit}: {e}")),
        }
    }
    let mut out = Outcome::from_batch(main, json!({ "c_hit_sensitivity": reruns }));
    out.warnings.extend(warnings);
    Ok(out)
}

fn execute(name: Experiment, cfg: &ExperimentConfig, p: &Params) -> Result<Outcome, CliError> {
    // `resolve` has filled every field used below
    let get = |v: Option<f64>| v.unwrap_or(f64::NAN);
    let z = || Complex64::new(get(p.x), get(p.y));
    let list = |v: &Option<Vec<f64>>| v.clone().unwrap_or_default();
    Ok(match name {
        Experiment::Cardy => {
            let s = list(&p.s);
            with_hit_sensitivity(cfg, |c| estimate_cardy(c, &s))?
        }
        Experiment::Dermoment => Outcome::from_batch(estimate_derivative_moment(cfg, z(), get(p.b))?, Value::Null),
        Experiment::Zmoment => {
            Outcome::from_batch(estimate_z_moment(cfg, z(), get(p.a), &list(&p.stop_levels))?, Value::Null)
        }
        Experiment::Bessel => {
            with_hit_sensitivity(cfg, |c| estimate_bessel_exit(c, get(p.x), get(p.a), get(p.b)))?
        }
        Experiment::Swallow => Outcome::from_batch(estimate_swallow_prob(cfg, z(), &list(&p.times))?, Value::Null),
        Experiment::Tracedim => {
            let window = rect(&list(&p.window), "window")?;
            let r = estimate_trace_dimension(cfg, &list(&p.eps), window)?;
            Outcome {
                rows: vec![slope_row(&r.slope, r.target, cfg.kappa)],
                undecided: 0,
                excluded: 0,
                warnings: Vec::new(),
                details: json!({ "epsilons": r.epsilons, "mean_counts": r.mean_counts, "fit": r.fit }),
                extra_files: Vec::new(),
            }
        }
        Experiment::Boundarydim => {
            let region = rect(&list(&p.region), "region")?;
            let levels = p.levels.clone().unwrap_or_default();
            let r = estimate_boundary_dimension(cfg, get(p.h), &levels, region)?;
            let mut total = WhitneyHistogram { counts: BTreeMap::new() };
            for hist in &r.histograms {
                for (n, c) in &hist.counts {
                    *total.counts.entry(*n).or_insert(0) += c;
                }
            }
            Outcome {
                rows: vec![slope_row(&r.slope, r.target, cfg.kappa)],
                undecided: 0,
                excluded: 0,
                warnings: Vec::new(),
                details: json!({ "levels": r.levels, "mean_counts": r.mean_counts, "fit": r.fit }),
                extra_files: vec![("whitney.csv".into(), total)],
            }
        }
        Experiment::Transience => {
            let r = estimate_transience(cfg, &list(&p.checkpoints), p.allow_kappa8)?;
            let details = json!({ "increasing_fraction": r.increasing.mean, "increasing_stderr": r.increasing.stderr });
            Outcome::from_batch(r.batch, details)
        }
        Experiment::Dtail => {
            let r = estimate_derest_tail(cfg, get(p.x), get(p.y), get(p.t), &list(&p.delta), get(p.b))?;
            let details = json!({ "bound_shapes": r.bound_shapes, "constant": r.constant, "spearman": r.spearman });
            Outcome::from_batch(r.batch, details)
        }
    })
}

/// The resolved parameters without the fields this experiment does not use.
fn params_json(p: &Params) -> Value {
    let mut v = serde_json::to_value(p).unwrap_or(Value::Null);
    if let Value::Object(map) = &mut v {
        map.retain(|_, x| !x.is_null());
    }
    v
}

fn write_file(path: &Path, write: impl FnOnce(BufWriter<File>) -> slelab::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    write(BufWriter::new(file))?;
    Ok(())
}

pub fn run(args: &ExperimentArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let (mut cfg, file_params) = match &args.config {
        Some(path) => {
            let f = config::load(path)?;
            (f.run, f.params)
        }
        None => (ExperimentConfig::default(), Params::default()),
    };
    apply_flags(&mut cfg, args);
    workers_from_env(&mut cfg)?;
    cfg.validate()?;
    let params = resolve(args.name, &cfg, file_params.overlay(args.params.clone()));

    let outcome = execute(args.name, &cfg, &params)?;

    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let mut outputs = Vec::new();
    let csv_path = dir.join("results.csv");
    write_file(&csv_path, |w| write_results_csv(&outcome.rows, w))?;
    outputs.push(csv_path.display().to_string());
    for (file, hist) in &outcome.extra_files {
        let path = dir.join(file);
        write_file(&path, |w| hist.write_csv(w))?;
        outputs.push(path.display().to_string());
    }

    let (zb, abs, rel) = (
        params.z_bound.unwrap_or(3.0),
        params.abs_slack.unwrap_or(0.0),
        params.rel_slack.unwrap_or(0.0),
    );
    let failing: Vec<&ResultRow> = outcome.rows.iter().filter(|r| !r.within(zb, abs, rel)).collect();
    let manifest_path = dir.join("manifest.json");
    outputs.push(manifest_path.display().to_string());
    let manifest = RunManifest {
        command: format!("experiment {}", args.name.name()),
        version: format!("slelab-v{}", env!("CARGO_PKG_VERSION")),
        experiment: args.name,
        config: &cfg,
        params: params_json(&params),
        master_seed: cfg.master_seed,
        seed_rule: "run i uses child_seed(master_seed, i)",
        undecided: outcome.undecided,
        excluded: outcome.excluded,
        warnings: &outcome.warnings,
        passed: failing.is_empty(),
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs,
        details: &outcome.details,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Numerical(e.to_string()))?;
    std::fs::write(&manifest_path, text + "\n").map_err(|e| io_error(&manifest_path, e))?;

    for r in &outcome.rows {
        let target = r.target.map(|t| format!("{t:.6}")).unwrap_or_else(|| "-".into());
        println!("{:>10} {:.6} ± {:.6} (target {target})", r.param, r.estimate, r.stderr);
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if !failing.is_empty() {
        let params: Vec<String> = failing.iter().map(|r| r.param.to_string()).collect();
        return Err(CliError::Acceptance(format!(
            "estimates outside {zb}·stderr + {abs} + {rel}·|target| at {}",
            params.join(", ")
        )));
    }
    Ok(())
}
