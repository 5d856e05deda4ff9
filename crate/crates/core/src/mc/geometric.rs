use serde::Serialize;

use super::{binomial, mean_stderr, run_indexed, BatchResult, ExperimentConfig, MCEstimate};
use crate::driving::sample_brownian;
use crate::error::{Result, SleError};
use crate::formulas::dim_exponents;
use crate::geometry::least_squares;
use crate::geometry::{
    polyline_box_count, swallow_oracle, whitney_decompose, whitney_filter, whitney_histogram, DimensionFit, Rect,
    WhitneyHistogram,
};
use crate::loewner::{build_chain, trace, LoewnerChain, TracePolyline};

/// Window `[−1, 1] × [0.2, 1.2]` used for trace box counting.
pub const DIMENSION_WINDOW: Rect = Rect {
    x0: -1.0,
    x1: 1.0,
    y0: 0.2,
    y1: 1.2,
};

fn chain_for(cfg: &ExperimentConfig, horizon: f64, seed: u64) -> Result<(LoewnerChain, TracePolyline)> {
    let chain = build_chain(&sample_brownian(cfg.kappa, horizon, cfg.n_steps, seed)?)?;
    let tr = trace(&chain);
    Ok((chain, tr))
}

/// Slope of `log mean(count)` against `x`, with a delete-one jackknife
/// standard error over runs. Points with a zero mean are skipped.
fn jackknife_slope(xs: &[f64], per_run: &[Vec<f64>]) -> Result<(DimensionFit, f64, Vec<f64>)> {
    let n = per_run.len();
    let k = xs.len();
    let totals: Vec<f64> = (0..k).map(|j| per_run.iter().map(|r| r[j]).sum()).collect();
    let fit_of = |sums: &[f64], m: f64| {
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(sums)
            .filter(|(_, &s)| s > 0.0)
            .map(|(&x, &s)| (x, (s / m).ln()))
            .collect();
        least_squares(&pts)
    };
    let means: Vec<f64> = totals.iter().map(|t| t / n as f64).collect();
    let fit = fit_of(&totals, n as f64)?;
    let stderr = if n > 1 {
        let mut slopes = Vec::with_capacity(n);
        for r in per_run {
            let sums: Vec<f64> = totals.iter().zip(r).map(|(t, c)| t - c).collect();
            slopes.push(fit_of(&sums, (n - 1) as f64).map(|f| f.slope).unwrap_or(fit.slope));
        }
        let m = slopes.iter().sum::<f64>() / n as f64;
        ((n - 1) as f64 / n as f64 * slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>()).sqrt()
    } else {
        0.0
    };
    Ok((fit, stderr, means))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceDimension {
    pub slope: MCEstimate,
    pub target: f64,
    pub fit: DimensionFit,
    pub epsilons: Vec<f64>,
    pub mean_counts: Vec<f64>,
}

/// Box-counting slope of traces in `window`: box counts are averaged over
/// runs before the log-log fit.
pub fn estimate_trace_dimension(cfg: &ExperimentConfig, eps_schedule: &[f64], window: Rect) -> Result<TraceDimension> {
    cfg.validate()?;
    let horizon = cfg.horizon_or(1.0);
    let counts = run_indexed(cfg.n_runs, cfg.master_seed, cfg.workers, |_, seed| -> Result<Vec<f64>> {
        let (_, tr) = chain_for(cfg, horizon, seed)?;
        let r = polyline_box_count(&tr.points, window, eps_schedule)?;
        Ok(r.counts.iter().map(|&c| c as f64).collect())
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = eps_schedule.iter().map(|e| (1.0 / e).ln()).collect();
    let (fit, stderr, mean_counts) = jackknife_slope(&xs, &counts)
        .map_err(|e| SleError::Estimation(format!("trace misses the window: {e}")))?;
    let target = if cfg.kappa > 0.0 {
        dim_exponents(cfg.kappa)?.trace_exp
    } else {
        1.0
    };
    Ok(TraceDimension {
        slope: MCEstimate::new(fit.slope, stderr, cfg.n_runs, cfg.master_seed)
            .with("kappa", cfg.kappa)
            .with("horizon", horizon),
        target,
        fit,
        epsilons: eps_schedule.to_vec(),
        mean_counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryDimension {
    pub slope: MCEstimate,
    pub target: f64,
    pub fit: DimensionFit,
    pub levels: Vec<i32>,
    /// Mean `W(n)` per level over runs.
    pub mean_counts: Vec<f64>,
    pub histograms: Vec<WhitneyHistogram>,
}

/// Slope of `log W(n)` against `n·log 2`, where `W(n)` counts Whitney squares
/// of size `2^{−n}` of the unbounded component at the end of the chain that
/// reach height `h` and lie within distance 1 of the trace.
pub fn estimate_boundary_dimension(
    cfg: &ExperimentConfig,
    h: f64,
    levels: &[i32],
    region: Rect,
) -> Result<BoundaryDimension> {
    cfg.validate()?;
    if !(cfg.kappa > 4.0) {
        return Err(SleError::invalid(
            "kappa",
            "for κ ≤ 4 the boundary is the trace; use the trace dimension estimator",
        ));
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(SleError::invalid("h", "must lie in (0, 1)"));
    }
    let finest = *levels
        .iter()
        .max()
        .ok_or_else(|| SleError::invalid("levels", "need at least one level"))?;
    let min_size = 2f64.powi(-finest);
    let horizon = cfg.horizon_or(1.0);
    let hists = run_indexed(cfg.n_runs, cfg.master_seed, cfg.workers, |_, seed| -> Result<WhitneyHistogram> {
        let (chain, tr) = chain_for(cfg, horizon, seed)?;
        let tol = cfg.swallow_tol.unwrap_or_else(|| chain.default_swallow_tol());
        let oracle = swallow_oracle(&chain, tol);
        let cells = whitney_decompose(&tr, &oracle, region, min_size)?;
        Ok(whitney_histogram(&whitney_filter(&cells, h, 1.0)))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let per_run: Vec<Vec<f64>> = hists
        .iter()
        .map(|hist| levels.iter().map(|&n| hist.get(n) as f64).collect())
        .collect();
    let finest_mean = hists.iter().map(|hist| hist.get(finest) as f64).sum::<f64>() / hists.len() as f64;
    if finest_mean < 50.0 {
        return Err(SleError::Estimation(format!(
            "only {finest_mean:.1} Whitney squares per run at level {finest} (need 50); W(n) means: {:?}",
            levels
                .iter()
                .map(|&n| (n, hists.iter().map(|hist| hist.get(n)).sum::<usize>() as f64 / hists.len() as f64))
                .collect::<Vec<_>>()
        )));
    }
    let xs: Vec<f64> = levels.iter().map(|&n| n as f64 * std::f64::consts::LN_2).collect();
    let (fit, stderr, mean_counts) = jackknife_slope(&xs, &per_run)?;
    Ok(BoundaryDimension {
        slope: MCEstimate::new(fit.slope, stderr, cfg.n_runs, cfg.master_seed)
            .with("kappa", cfg.kappa)
            .with("h", h),
        target: dim_exponents(cfg.kappa)?.boundary_exp,
        fit,
        levels: levels.to_vec(),
        mean_counts,
        histograms: hists,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransienceProfile {
    /// Mean over runs of `min |γ(t_k)|` over grid times `t_k ≥ T`, per checkpoint `T`.
    pub batch: BatchResult,
    /// Fraction of runs whose profile is strictly increasing in `T`.
    pub increasing: MCEstimate,
}

/// Growth of `min_{t ≥ T} |γ(t)|` over checkpoints `T`, on traces up to the
/// horizon (default four times the last checkpoint).
pub fn estimate_transience(cfg: &ExperimentConfig, checkpoints: &[f64], allow_kappa8: bool) -> Result<TransienceProfile> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    if cfg.kappa == 8.0 {
        if !allow_kappa8 {
            return Err(SleError::invalid("kappa", "transience is not established for κ = 8"));
        }
        warnings.push("transience is not known at κ = 8".to_string());
    }
    if checkpoints.is_empty() || checkpoints.iter().any(|&t| !(t >= 0.0)) {
        return Err(SleError::invalid("checkpoints", "need times >= 0"));
    }
    let last = checkpoints.iter().copied().fold(0.0, f64::max);
    let horizon = cfg.horizon_or(4.0 * last.max(0.25));
    if last >= horizon {
        return Err(SleError::invalid("checkpoints", "checkpoints must lie before the horizon"));
    }
    let dt = horizon / cfg.n_steps as f64;
    let profiles = run_indexed(cfg.n_runs, cfg.master_seed, cfg.workers, |_, seed| -> Result<Vec<f64>> {
        let (_, tr) = chain_for(cfg, horizon, seed)?;
        let mut suffix_min: Vec<f64> = tr.points.iter().map(|p| p.norm()).collect();
        for k in (0..suffix_min.len() - 1).rev() {
            suffix_min[k] = suffix_min[k].min(suffix_min[k + 1]);
        }
        Ok(checkpoints
            .iter()
            .map(|&t| {
                let k = ((t / dt) - 1e-9).ceil().max(0.0) as usize;
                suffix_min[k.min(suffix_min.len() - 1)]
            })
            .collect())
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let estimates = checkpoints
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let col: Vec<f64> = profiles.iter().map(|p| p[j]).collect();
            let (m, se) = mean_stderr(&col);
            MCEstimate::new(m, se, col.len(), cfg.master_seed)
                .with("checkpoint", t)
                .with("kappa", cfg.kappa)
        })
        .collect();
    let inc = profiles
        .iter()
        .filter(|p| p.windows(2).all(|w| w[1] > w[0]))
        .count();
    let (p, se) = binomial(inc, profiles.len());
    Ok(TransienceProfile {
        batch: BatchResult {
            param_name: "checkpoint".into(),
            params: checkpoints.to_vec(),
            estimates,
            targets: vec![None; checkpoints.len()],
            n_runs: cfg.n_runs,
            undecided: 0,
            excluded: 0,
            warnings,
        },
        increasing: MCEstimate::new(p, se, profiles.len(), cfg.master_seed),
    })
}
