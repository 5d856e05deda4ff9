//! Monte Carlo harness: batches of independent runs with per-run seeds
//! derived from a master seed, reduced in run-index order so results do not
//! depend on the number of worker threads.

mod estimators;
pub(crate) mod flow;
mod geometric;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SleError};
use crate::rng::child_seed;

pub use estimators::{
    compare_negt_law, estimate_bessel_exit, estimate_cardy, estimate_derest_tail, estimate_derivative_moment,
    estimate_lbdexp_ratio, estimate_swallow_prob, estimate_z_moment, DerestReport, LawComparison, MomentStats,
};
pub use geometric::{
    estimate_boundary_dimension, estimate_trace_dimension, estimate_transience, BoundaryDimension,
    TraceDimension, TransienceProfile, DIMENSION_WINDOW,
};

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub master_seed: u64,
    pub params: BTreeMap<String, f64>,
}

impl MCEstimate {
    pub(crate) fn new(mean: f64, stderr: f64, n: usize, master_seed: u64) -> Self {
        MCEstimate {
            mean,
            stderr,
            n,
            master_seed,
            params: BTreeMap::new(),
        }
    }

    pub(crate) fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// `(mean − target)/stderr`; zero when both the error and the gap vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = self.mean - target;
        if self.stderr > 0.0 {
            gap / self.stderr
        } else if gap == 0.0 {
            0.0
        } else {
            gap.signum() * f64::INFINITY
        }
    }
}

/// Parameters shared by all experiments.
///
/// `n_steps` steps of length `horizon/n_steps` make up the uniform grid.
/// With `rel_step = Some(h)` the grid step becomes the smallest allowed step
/// and the actual step is `max(dt_min, h²·r²)` for a point at distance `r`
/// from the driving point; such runs end after `max_steps` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kappa: f64,
    pub n_runs: usize,
    pub n_steps: usize,
    /// Time span of the grid; `None` picks a per-experiment default.
    pub horizon: Option<f64>,
    pub master_seed: u64,
    pub rel_step: Option<f64>,
    pub max_steps: usize,
    /// Defaults to `10⁻⁴·√dt_min`.
    pub swallow_tol: Option<f64>,
    /// Real points hit the driving point once `Y ≤ c_hit·√dt_min`.
    pub c_hit: f64,
    pub stop_im: f64,
    /// Decision threshold on `Y₁/Y_s` in the Cardy experiment.
    pub threshold: f64,
    /// Largest tolerated fraction of runs left undecided.
    pub max_undecided: f64,
    /// Largest tolerated fraction of runs excluded by discretisation artefacts.
    pub max_excluded: f64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kappa: 2.0,
            n_runs: 1000,
            n_steps: 4000,
            horizon: None,
            master_seed: 0,
            rel_step: None,
            max_steps: 10_000_000,
            swallow_tol: None,
            c_hit: 1.0,
            stop_im: 1e-3,
            threshold: 0.5,
            max_undecided: 0.05,
            max_excluded: 0.01,
            workers: None,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(SleError::invalid("kappa", "must be finite and >= 0"));
        }
        if self.n_runs == 0 {
            return Err(SleError::invalid("n_runs", "must be at least 1"));
        }
        if self.n_steps == 0 {
            return Err(SleError::invalid("n_steps", "must be at least 1"));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(SleError::invalid("horizon", "must be positive"));
            }
        }
        if let Some(h) = self.rel_step {
            if !(h > 0.0 && h < 1.0) {
                return Err(SleError::invalid("rel_step", "must lie in (0, 1)"));
            }
        }
        if self.max_steps == 0 {
            return Err(SleError::invalid("max_steps", "must be at least 1"));
        }
        if let Some(t) = self.swallow_tol {
            if !(t >= 0.0) {
                return Err(SleError::invalid("swallow_tol", "must be >= 0"));
            }
        }
        if !(self.c_hit > 0.0) {
            return Err(SleError::invalid("c_hit", "must be positive"));
        }
        if !(self.stop_im > 0.0) {
            return Err(SleError::invalid("stop_im", "must be positive"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(SleError::invalid("threshold", "must lie in (0, 1)"));
        }
        for (name, v) in [("max_undecided", self.max_undecided), ("max_excluded", self.max_excluded)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SleError::invalid(name, "must lie in [0, 1]"));
            }
        }
        if self.workers == Some(0) {
            return Err(SleError::invalid("workers", "must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn horizon_or(&self, default: f64) -> f64 {
        self.horizon.unwrap_or(default)
    }

    pub(crate) fn swallow_tol_for(&self, dt_min: f64) -> f64 {
        self.swallow_tol.unwrap_or(1e-4 * dt_min.sqrt())
    }
}

/// Evaluates `run(index, seed)` for every run index, in parallel, and returns
/// the results in index order. Seeds are `child_seed(master_seed, index)`.
pub fn run_indexed<T, F>(n_runs: usize, master_seed: u64, workers: Option<usize>, run: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    let job = || -> Vec<T> {
        (0..n_runs)
            .into_par_iter()
            .map(|i| run(i, child_seed(master_seed, i as u64)))
            .collect()
    };
    match workers {
        None => Ok(job()),
        Some(0) => Err(SleError::invalid("workers", "must be at least 1")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| SleError::Estimation(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Sample mean and standard error of the mean, summed in the given order.
pub(crate) fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Success fraction with the binomial standard error `√(p(1−p)/n)`.
pub(crate) fn binomial(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = successes as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Estimates for a list of parameter values, with run accounting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchResult {
    pub param_name: String,
    pub params: Vec<f64>,
    pub estimates: Vec<MCEstimate>,
    pub targets: Vec<Option<f64>>,
    pub n_runs: usize,
    /// Runs that reached their time or step budget without a decision.
    pub undecided: usize,
    /// Runs dropped because of discretisation artefacts (e.g. a swallow the
    /// continuous flow cannot produce).
    pub excluded: usize,
    pub warnings: Vec<String>,
}

impl BatchResult {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.params
            .iter()
            .zip(&self.estimates)
            .zip(&self.targets)
            .map(|((&param, e), &target)| ResultRow {
                param,
                estimate: e.mean,
                stderr: e.stderr,
                n: e.n,
                target,
                z_score: target.map(|t| e.z_score(t)),
            })
            .collect()
    }
}

/// Fails when more than `limit` of the runs were undecided.
pub(crate) fn check_fraction(what: &str, count: usize, n_runs: usize, limit: f64) -> Result<()> {
    if count as f64 > limit * n_runs as f64 {
        return Err(SleError::RunLimit {
            what: what.to_string(),
            count,
            n_runs,
            limit,
        });
    }
    Ok(())
}

/// One line of an experiment's CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResultRow {
    pub param: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
    pub target: Option<f64>,
    pub z_score: Option<f64>,
}

impl ResultRow {
    /// Within `z_bound·stderr + abs_slack + rel_slack·|target|` of the target
    /// (rows without a target always pass).
    pub fn within(&self, z_bound: f64, abs_slack: f64, rel_slack: f64) -> bool {
        match self.target {
            None => true,
            Some(t) => (self.estimate - t).abs() <= z_bound * self.stderr + abs_slack + rel_slack * t.abs(),
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes rows as `param,estimate,stderr,n,target,z_score` with 17
/// significant digits; missing targets are left empty.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| SleError::Io(e.to_string());
    w.write_record(["param", "estimate", "stderr", "n", "target", "z_score"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            num(r.param),
            num(r.estimate),
            num(r.stderr),
            r.n.to_string(),
            r.target.map(num).unwrap_or_default(),
            r.z_score.map(num).unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runner_is_ordered_and_worker_independent() {
        let f = |i: usize, seed: u64| (i, seed);
        let a = run_indexed(100, 5, Some(1), f).unwrap();
        let b = run_indexed(100, 5, Some(3), f).unwrap();
        let c = run_indexed(100, 5, None, f).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(a.iter().enumerate().all(|(k, &(i, s))| k == i && s == child_seed(5, i as u64)));
        assert!(run_indexed(3, 0, Some(0), f).is_err());
    }

    #[test]
    fn stats() {
        assert_eq!(mean_stderr(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        let (p, se) = binomial(25, 100);
        assert_eq!(p, 0.25);
        assert!((se - (0.25 * 0.75 / 100.0f64).sqrt()).abs() < 1e-15);
        assert_eq!(binomial(0, 10), (0.0, 0.0));
    }

    #[test]
    fn z_scores_and_rows() {
        let e = MCEstimate::new(1.0, 0.0, 5, 0);
        assert_eq!(e.z_score(1.0), 0.0);
        assert_eq!(e.z_score(0.0), f64::INFINITY);
        let row = ResultRow { param: 2.0, estimate: 0.5, stderr: 0.01, n: 10, target: Some(0.525), z_score: Some(-2.5) };
        assert!(row.within(3.0, 0.0, 0.0));
        assert!(!row.within(2.0, 0.0, 0.0));
        assert!(row.within(0.0, 0.0, 0.05));
        let mut buf = Vec::new();
        let none = ResultRow { target: None, z_score: None, ..row };
        write_results_csv(&[row, none], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "param,estimate,stderr,n,target,z_score");
        assert_eq!(lines[1], "2.0000000000000000e0,5.0000000000000000e-1,1.0000000000000000e-2,10,5.2500000000000002e-1,-2.5000000000000000e0");
        assert!(lines[2].ends_with(",10,,"));
    }

    #[test]
    fn config_validation_and_json() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = ExperimentConfig { threshold: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"kappa": 6, "n_runs": 10}"#).unwrap();
        assert_eq!(cfg.kappa, 6.0);
        assert_eq!(cfg.n_steps, 4000);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"kapa": 6}"#).is_err());
    }
}
