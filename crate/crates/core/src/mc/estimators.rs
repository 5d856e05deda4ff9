use num_complex::Complex64;
use serde::Serialize;

use super::flow::{complex_step, real_step, Direction, Driver};
use super::{binomial, check_fraction, mean_stderr, run_indexed, BatchResult, ExperimentConfig, MCEstimate};
use crate::driving::sample_brownian;
use crate::error::{Result, SleError};
use crate::formulas::{
    bessel_exit_prob, cardy_hit_prob, derest_tail_bound, derivative_moment_f, exponents, z_moment, Nu, ZMoment,
};
use crate::loewner::{backward_flow_with_derivative, build_chain, centered_inverse};
use crate::rng::child_seed;

/// How a single run ended.
enum Outcome<T> {
    Decided(T),
    Undecided,
    Excluded,
}

struct Tally<T> {
    decided: Vec<T>,
    undecided: usize,
    excluded: usize,
}

fn tally<T>(outcomes: Vec<Outcome<T>>) -> Tally<T> {
    let mut t = Tally {
        decided: Vec::with_capacity(outcomes.len()),
        undecided: 0,
        excluded: 0,
    };
    for o in outcomes {
        match o {
            Outcome::Decided(v) => t.decided.push(v),
            Outcome::Undecided => t.undecided += 1,
            Outcome::Excluded => t.excluded += 1,
        }
    }
    t
}

fn require_decided<T>(t: &Tally<T>) -> Result<()> {
    if t.decided.is_empty() {
        return Err(SleError::Estimation("no run reached a decision".into()));
    }
    Ok(())
}

/// Hit probabilities `P[X ≥ s]` for the Cardy-type variant.
///
/// Each run tracks `Y₁ = g(1) − ξ` and `Y_s = g(s) − ξ` for all `s` on one
/// driving path until `Y₁ ≤ c_hit·√dt_min`, then decides `X ≥ s` iff
/// `Y₁/Y_s > threshold` (a point `s` that hits in the same step counts as
/// ratio 1). Estimates are fractions of decided runs.
pub fn estimate_cardy(cfg: &ExperimentConfig, s_values: &[f64]) -> Result<BatchResult> {
    cfg.validate()?;
    if !(cfg.kappa > 4.0 && cfg.kappa < 8.0) {
        return Err(SleError::invalid("kappa", "the Cardy experiment needs κ in (4, 8)"));
    }
    if s_values.is_empty() || s_values.iter().any(|&s| !(s >= 1.0 && s.is_finite())) {
        return Err(SleError::invalid("s_values", "need at least one finite s >= 1"));
    }
    let horizon = cfg.horizon_or(1.0);
    let outcomes = run_indexed(cfg.n_runs, cfg.master_seed, cfg.workers, |_, seed| {
        let mut drv = Driver::new(cfg, horizon, seed, None);
        let hit_level = cfg.c_hit * drv.dt_min().sqrt();
        let mut y1: f64 = 1.0;
        let mut ys: Vec<f64> = s_values.to_vec();
        loop {
            if drv.exhausted() {
                return Outcome::Undecided;
            }
            let dt = drv.next_dt(y1.max(0.0));
            let dxi = drv.increment(dt);
            y1 = real_step(y1, dt, dxi);
            for y in ys.iter_mut() {
                *y = real_step(*y, dt, dxi);
            }
            if y1 <= hit_level {
                let hits: Vec<bool> = ys
                    .iter()
                    .map(|&y| y <= hit_level || y1.max(0.0) / y > cfg.threshold)
                    .collect();
                return Outcome::Decided(hits);
            }
        }
    })?;
    let t = tally(outcomes);
    require_decided(&t)?;
    check_fraction("left undecided", t.undecided, cfg.n_runs, cfg.max_undecided)?;
    let n = t.decided.len();
    let mut estimates = Vec::new();
    let mut targets = Vec::new();
    for (k, &s) in s_values.iter().enumerate() {
        let hits = t.decided.iter().filter(|h| h[k]).count();
        let (p, se) = binomial(hits, n);
        estimates.push(
            MCEstimate::new(p, se, n, cfg.master_seed)
                .with("s", s)
                .with("kappa", cfg.kappa)
                .with("threshold", cfg.threshold)
                .with("c_hit", cfg.c_hit),
        );
        targets.push(Some(cardy_hit_prob(s, cfg.kappa)?));
    }
    Ok(BatchResult {
        param_name: "s".into(),
        params: s_values.to_vec(),
        estimates,
        targets,
        n_runs: cfg.n_runs,
        undecided: t.undecided,
        excluded: t.excluded,
        warnings: Vec::new(),
    })
}

/// Probability that `Y = g(x) − ξ`, started at `x`, reaches `b` before
/// falling to `a + c_hit·√dt_min`.
pub fn estimate_bessel_exit(cfg: &ExperimentConfig, x: f64, a: f64, b: f64) -> Result<BatchResult> {
    cfg.validate()?;
    if !(cfg.kappa > 0.0) {
        return Err(SleError::invalid("kappa", "must be positive"));
    }
    if !(0.0 < a && a < x && x < b && b.is_finite()) {
        return Err(SleError::invalid("x", "need 0 < a < x < b"));
    }
    let horizon = cfg.horizon_or(10.0 * b * b);
    let outcomes = run_indexed(cfg.n_runs, cfg.master_seed, cfg.workers, |_, seed| {
        let mut drv = Driver::new(cfg, horizon, seed, None);
        let low = a + cfg.c_hit * drv.dt_min().sqrt();
        let mut y = x;
        loop {
            if y >= b {
                return Outcome::Decided(true);
            }
            if y <= low {
                return Outcome::Decided(false);
            }
            if drv.exhausted() {
                return Outcome::Undecided;
            }
            let dt = drv.next_dt((y - a).min(b - y));
            let dxi = drv.increment(dt);
            y = real_step(y, dt, dxi);
        }
    })?;
    let t = tally(outcomes);
    require_decided(&t)?;
    check_fraction("left undecided", t.undecided, cfg.n_runs, cfg.max_undecided)?;
    let n = t.decided.len();
    let (p, se) = binomial(t.decided.iter().filter(|&&h| h).count(), n);
    let est = MCEstimate::new(p, se, n, cfg.master_seed)
        .with("x", x)
        .with("a", a)
        .with("b", b)
        .with("kappa", cfg.kappa);
    Ok(BatchResult {
        param_name: "x".into(),
        params: vec![x],
        estimates: vec![est],
        targets: vec![Some(bessel_exit_prob(x, a, b, cfg.kappa)?)],
        n_runs: cfg.n_runs,
        undecided: t.undecided,
        excluded: t.excluded,
        warnings: Vec::new(),
    })
}

/// `ŷ^a·E[(1+x(0)²)^b |g'(ẑ)|^a]` where the flow of `ẑ` is run until
/// `Im = 1`: forward when `ŷ > 1`, backward when `ŷ < 1`; `x(0)` is the real
/// part of `g − ξ` at that moment.
pub fn estimate_derivative_moment(cfg: &ExperimentConfig, zhat: Complex64, b: f64) -> Result<BatchResult> {
    cfg.validate()?;
    if !(zhat.im > 0.0 && zhat.im != 1.0 && zhat.re.is_finite() && zhat.im.is_finite()) {
        return Err(SleError::invalid("zhat", "need Im ẑ > 0 and Im ẑ ≠ 1"));
    }
    let target = derivative_moment_f(zhat, b, cfg.kappa)?;
    let (dir, nu) = if zhat.im > 1.0 {
        (Direction::Forward, Nu::Minus)
    } else {
        (Direction::Backward, Nu::Plus)
    };
    let ex = exponents(b, cfg.kappa, nu);
    let horizon = cfg.horizon_or(1.0);
    let tol = cfg.swallow_tol_for(horizon / cfg.n_steps as f64);
    let scale = zhat.im.powf(ex.a);
    let outcomes = run_indexed(cfg.n_runs, cfg.master_seed, cfg.workers, |_, seed| {
        let mut drv = Driver::new(cfg, horizon, seed, None);
        let mut v = zhat;
        let mut d = Complex64::new(1.0, 0.0);
        loop {
            if drv.exhausted() {
                return Outcome::Undecided;
            }
            let dt = drv.next_dt(v.norm());
            let dxi = drv.increment(dt);
            let s = complex_step(v, dt, dxi, dir, Some(1.0));
            v = s.v;
            d *= s.factor;
            if s.reached {
                return Outcome::Decided(scale * (1.0 + v.re * v.re).powf(b) * d.norm().powf(ex.a));
            }
            if dir == Direction::Forward && v.im <= tol {
                return Outcome::Excluded;
            }
        }
    })?;
    let t = tally(outcomes);
    require_decided(&t)?;
    check_fraction("left undecided", t.undecided, cfg.n_runs, cfg.max_undecided)?;
    check_fraction("swallowed before the crossing", t.excluded, cfg.n_runs, cfg.max_excluded)?;
    let (m, se) = mean_stderr(&t.decided);
    let est = MCEstimate::new(m, se, t.decided.len(), cfg.master_seed)
        .with("b", b)
        .with("a", ex.a)
        .with("lambda", ex.lambda)
        .with("zhat_re", zhat.re)
        .with("zhat_im", zhat.im)
        .with("kappa", cfg.kappa);
    Ok(BatchResult {
        param_name: "b".into(),
        params: vec![b],
        estimates: vec![est],
        targets: vec![Some(target)],
        n_runs: cfg.n_runs,
        undecided: t.undecided,
        excluded: t.excluded,
        warnings: Vec::new(),
    })
}

/// `E[ψ^a]` with `ψ = Im z·|g'(z)|/Im g(z)` taken when `Im g` first reaches
/// each of `stop_levels`; all levels are recorded on the same runs.
///
/// Finite-target mode needs `κ < 8` and `a < 1 − κ/8`; for `κ ≥ 8` the limit
/// is zero for `a < 0` and only the trend across levels is meaningful, so no
/// target is attached.
pub fn estimate_z_moment(cfg: &ExperimentConfig, z: Complex64, a: f64, stop_levels: &[f64]) -> Result<BatchResult> {
    cfg.validate()?;
    if !(z.im > 0.0) {
        return Err(SleError::invalid("z", "need Im z > 0"));
    }
    if stop_levels.is_empty() || stop_levels.iter().any(|&l| !(l > 0.0 && l < z.im)) {
        return Err(SleError::invalid("stop_levels", "levels must lie in (0, Im z)"));
    }
    let mut warnings = Vec::new();
    let target = if a == 0.0 {
        Some(1.0)
    } else if cfg.kappa < 8.0 && a < 1.0 - cfg.kappa / 8.0 {
        if 1.0 - cfg.kappa / 8.0 - a < 0.1 {
            warnings.push(format!(
                "a = {a} is within 0.1 of 1 - κ/8 = {}: the variance of Z^a may be infinite",
                1.0 - cfg.kappa / 8.0
            ));
        }
        match z_moment(z, a, cfg.kappa)? {
            ZMoment::Finite(v) => Some(v),
            other => return Err(SleError::Estimation(format!("unexpected target {other:?}"))),
        }
    } else if cfg.kappa >= 8.0 && a < 0.0 {
        warnings.push("E[Z^a] vanishes in the limit; compare estimates across stop levels".into());
        None
    } else {
        return Err(SleError::invalid(
            "a",
            "need a < 1 - κ/8 (κ < 8) or a < 0 (κ ≥ 8); otherwise the moment is infinite",
        ));
    };
    let mut levels = stop_levels.to_vec();
    levels.sort_by(|x, y| y.total_cmp(x));
    let horizon = cfg.horizon_or(1.0);
    let tol = cfg.swallow_tol_for(horizon / cfg.n_steps as f64);
    let outcomes = run_indexed(cfg.n_runs, cfg.master_seed, cfg.workers, |_, seed| {
        let mut drv = Driver::new(cfg, horizon, seed, None);
        let mut v = z;
        let mut d = Complex64::new(1.0, 0.0);
        let mut psi = Vec::with_capacity(levels.len());
        while psi.len() < levels.len() {
            if drv.exhausted() {
                return Outcome::Undecided;
            }
            let dt = drv.next_dt(v.norm());
            let mut dxi = drv.increment(dt);
            let mut remaining = dt;
            // a step may cross several levels; flow the rest of it after each crossing
            while remaining > 0.0 && psi.len() < levels.len() {
                let level = levels[psi.len()];
                let s = complex_step(v, remaining, dxi, Direction::Forward, Some(level));
                dxi = 0.0;
                v = s.v;
                d *= s.factor;
                if !s.reached {
                    break;
                }
                psi.push(z.im * d.norm() / level);
                remaining -= s.flowed;
            }
            if v.im <= tol && psi.len() < levels.len() {
                let last = z.im * d.norm() / v.im.max(f64::MIN_POSITIVE);
                psi.resize(levels.len(), last);
            }
        }
        Outcome::Decided(psi)
    })?;
    let t = tally(outcomes);
    require_decided(&t)?;
    check_fraction("left undecided", t.undecided, cfg.n_runs, cfg.max_undecided)?;
    let n = t.decided.len();
    let mut estimates = Vec::new();
    for (k, &level) in levels.iter().enumerate() {
        let vals: Vec<f64> = t.decided.iter().map(|p| p[k].powf(a)).collect();
        let (m, se) = mean_stderr(&vals);
        estimates.push(
            MCEstimate::new(m, se, n, cfg.master_seed)
                .with("a", a)
                .with("stop_im", level)
                .with("kappa", cfg.kappa),
        );
    }
    Ok(BatchResult {
        param_name: "stop_im".into(),
        targets: vec![target; levels.len()],
        params: levels,
        estimates,
        n_runs: cfg.n_runs,
        undecided: t.undecided,
        excluded: t.excluded,
        warnings,
    })
}

/// Fraction of runs in which `z` is swallowed by each time `t`.
///
/// A point counts as swallowed once its image is numerically real
/// (`Im ≤ swallow_tol`) and has reached the driving point in the sense of the
/// real hit rule (`|g − ξ| ≤ c_hit·√dt`, measured after the driving move as for real points). For κ ≤ 4 the image of a fixed point
/// also sinks towards the real line, but far from the driving point, and the
/// imaginary part alone would report those runs as swallowed.
pub fn estimate_swallow_prob(cfg: &ExperimentConfig, z: Complex64, t_values: &[f64]) -> Result<BatchResult> {
    cfg.validate()?;
    if !(z.im > 0.0) {
        return Err(SleError::invalid("z", "need Im z > 0"));
    }
    if t_values.is_empty() || t_values.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(SleError::invalid("t_values", "need finite times >= 0"));
    }
    let t_last = t_values.iter().copied().fold(0.0, f64::max);
    let horizon = cfg.horizon_or(if t_last > 0.0 { t_last } else { 1.0 });
    if cfg.rel_step.is_none() && t_last > horizon * (1.0 + 1e-12) {
        return Err(SleError::invalid("t_values", "times beyond the horizon"));
    }
    let dt_min = horizon / cfg.n_steps as f64;
    let tol = cfg.swallow_tol_for(dt_min);
    let reach = cfg.c_hit * dt_min.sqrt();
    let outcomes = run_indexed(cfg.n_runs, cfg.master_seed, cfg.workers, |_, seed| {
        let mut drv = Driver::new(cfg, horizon, seed, Some(t_last));
        let mut v = z;
        while drv.t < t_last {
            if drv.exhausted() {
                return Outcome::Undecided;
            }
            let dt = drv.next_dt(v.norm());
            let dxi = drv.increment(dt);
            if v.im <= tol && Complex64::new(v.re - dxi, v.im).norm() <= reach {
                return Outcome::Decided(Some(drv.t));
            }
            v = complex_step(v, dt, dxi, Direction::Forward, None).v;
        }
        Outcome::Decided(None)
    })?;
    let t = tally(outcomes);
    require_decided(&t)?;
    check_fraction("left undecided", t.undecided, cfg.n_runs, cfg.max_undecided)?;
    let n = t.decided.len();
    let estimates = t_values
        .iter()
        .map(|&tv| {
            let hits = t.decided.iter().filter(|tau| tau.is_some_and(|tau| tau <= tv)).count();
            let (p, se) = binomial(hits, n);
            MCEstimate::new(p, se, n, cfg.master_seed)
                .with("t", tv)
                .with("z_re", z.re)
                .with("z_im", z.im)
                .with("kappa", cfg.kappa)
        })
        .collect();
    Ok(BatchResult {
        param_name: "t".into(),
        params: t_values.to_vec(),
        estimates,
        targets: vec![None; t_values.len()],
        n_runs: cfg.n_runs,
        undecided: t.undecided,
        excluded: t.excluded,
        warnings: Vec::new(),
    })
}

/// Mean and variance of a real sample with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentStats {
    pub mean: f64,
    pub mean_stderr: f64,
    pub var: f64,
    pub var_stderr: f64,
}

impl MomentStats {
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let (mean, mean_stderr) = mean_stderr(xs);
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        MomentStats {
            mean,
            mean_stderr,
            var: m2 * n / (n - 1.0),
            var_stderr: ((m4 - m2 * m2) / n).max(0.0).sqrt(),
        }
    }
}

fn joint_z(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    let s = sa.hypot(sb);
    if s > 0.0 {
        (a - b) / s
    } else if a == b {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Two independent samples that should share a law: `g_{−t}(z)` from the
/// backward flow and `f̂_t(z) − ξ(t)` from the inverse chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawComparison {
    pub backward_re: MomentStats,
    pub backward_im: MomentStats,
    pub inverse_re: MomentStats,
    pub inverse_im: MomentStats,
    /// Joint z-scores for mean(Re), mean(Im), var(Re), var(Im).
    pub z_scores: [f64; 4],
    pub n: usize,
}

impl LawComparison {
    pub fn max_abs_z(&self) -> f64 {
        self.z_scores.iter().fold(0.0, |m, z| m.max(z.abs()))
    }
}

/// Compares the laws of `g_{−t}(z)` and `f̂_t(z) − ξ(t)` at `t = horizon`
/// (default 1), each run drawing two independent driving paths.
pub fn compare_negt_law(cfg: &ExperimentConfig, z: Complex64) -> Result<LawComparison> {
    cfg.validate()?;
    if !(z.im > 0.0) {
        return Err(SleError::invalid("z", "need Im z > 0"));
    }
    if cfg.n_runs < 2 {
        return Err(SleError::invalid("n_runs", "need at least 2 runs"));
    }
    let horizon = cfg.horizon_or(1.0);
    let n = cfg.n_steps;
    let samples = run_indexed(cfg.n_runs, cfg.master_seed, cfg.workers, |_, seed| -> Result<(Complex64, Complex64)> {
        let back = sample_brownian(cfg.kappa, horizon, n, child_seed(seed, 0))?;
        let (w, _) = backward_flow_with_derivative(&back, z, n)?;
        let fwd = build_chain(&sample_brownian(cfg.kappa, horizon, n, child_seed(seed, 1))?)?;
        let (f, _) = centered_inverse(&fwd, z, n)?;
        Ok((w, f))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let col = |f: &dyn Fn(&(Complex64, Complex64)) -> f64| MomentStats::of(&samples.iter().map(f).collect::<Vec<_>>());
    let br = col(&|p| p.0.re);
    let bi = col(&|p| p.0.im);
    let ir = col(&|p| p.1.re);
    let ii = col(&|p| p.1.im);
    Ok(LawComparison {
        z_scores: [
            joint_z(br.mean, br.mean_stderr, ir.mean, ir.mean_stderr),
            joint_z(bi.mean, bi.mean_stderr, ii.mean, ii.mean_stderr),
            joint_z(br.var, br.var_stderr, ir.var, ir.var_stderr),
            joint_z(bi.var, bi.var_stderr, ii.var, ii.var_stderr),
        ],
        backward_re: br,
        backward_im: bi,
        inverse_re: ir,
        inverse_im: ii,
        n: samples.len(),
    })
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Empirical tails `P[|f̂'_t(x+iy)| ≥ δ/y]` over a `δ` grid next to the
/// shape of the corollary's bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerestReport {
    pub batch: BatchResult,
    /// Bound shape with unit constant, one per `δ`.
    pub bound_shapes: Vec<f64>,
    /// Smallest constant `C` with `empirical ≤ C·shape` on the grid.
    pub constant: f64,
    /// Rank correlation between `δ` and the empirical tail.
    pub spearman: f64,
}

pub fn estimate_derest_tail(
    cfg: &ExperimentConfig,
    x: f64,
    y: f64,
    t: f64,
    deltas: &[f64],
    b: f64,
) -> Result<DerestReport> {
    cfg.validate()?;
    if deltas.is_empty() {
        return Err(SleError::invalid("deltas", "need at least one δ"));
    }
    let bound_shapes = deltas
        .iter()
        .map(|&d| derest_tail_bound(x, y, t, d, b, cfg.kappa, 1.0))
        .collect::<Result<Vec<f64>>>()?;
    if !(t > 0.0) {
        return Err(SleError::invalid("t", "must be positive"));
    }
    let z = Complex64::new(x, y);
    let n = cfg.n_steps;
    let derivs = run_indexed(cfg.n_runs, cfg.master_seed, cfg.workers, |_, seed| -> Result<f64> {
        let path = sample_brownian(cfg.kappa, t, n, seed)?;
        Ok(backward_flow_with_derivative(&path, z, n)?.1.norm())
    })?
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let estimates: Vec<MCEstimate> = deltas
        .iter()
        .map(|&d| {
            let (p, se) = binomial(derivs.iter().filter(|&&g| g >= d / y).count(), derivs.len());
            MCEstimate::new(p, se, derivs.len(), cfg.master_seed)
                .with("delta", d)
                .with("x", x)
                .with("y", y)
                .with("t", t)
                .with("b", b)
                .with("kappa", cfg.kappa)
        })
        .collect();
    let constant = estimates
        .iter()
        .zip(&bound_shapes)
        .map(|(e, s)| e.mean / s)
        .fold(0.0, f64::max);
    let empirical: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
    let spearman = if deltas.len() > 1 { spearman(deltas, &empirical) } else { f64::NAN };
    Ok(DerestReport {
        batch: BatchResult {
            param_name: "delta".into(),
            params: deltas.to_vec(),
            targets: vec![None; deltas.len()],
            estimates,
            n_runs: cfg.n_runs,
            undecided: 0,
            excluded: 0,
            warnings: Vec::new(),
        },
        bound_shapes,
        constant,
        spearman,
    })
}

/// `E[|f̂'_1(ẑ)|^a 1{Im f̂_1(ẑ) ≥ c}] / ((1 + (x̂/ŷ)²)^b ŷ^{λ−a})` for each
/// `ẑ`, with `ν = 1` exponents, using backward-flow samples at time 1.
/// The lower bound holds when these ratios stay above a positive constant.
pub fn estimate_lbdexp_ratio(cfg: &ExperimentConfig, b: f64, zhats: &[Complex64], c: f64) -> Result<BatchResult> {
    cfg.validate()?;
    if !(cfg.kappa > 0.0) {
        return Err(SleError::invalid("kappa", "must be positive"));
    }
    if !(b < (cfg.kappa + 4.0) / (4.0 * cfg.kappa)) {
        return Err(SleError::invalid("b", "need b < (κ+4)/(4κ)"));
    }
    if !(c > 0.0) {
        return Err(SleError::invalid("c", "must be positive"));
    }
    if zhats.is_empty() || zhats.iter().any(|z| !(z.im > 0.0)) {
        return Err(SleError::invalid("zhats", "need points with Im > 0"));
    }
    let ex = exponents(b, cfg.kappa, Nu::Plus);
    let n = cfg.n_steps;
    let values = run_indexed(cfg.n_runs, cfg.master_seed, cfg.workers, |_, seed| -> Result<Vec<f64>> {
        let path = sample_brownian(cfg.kappa, 1.0, n, seed)?;
        zhats
            .iter()
            .map(|&z| {
                let (w, d) = backward_flow_with_derivative(&path, z, n)?;
                let shape = (1.0 + (z.re / z.im).powi(2)).powf(b) * z.im.powf(ex.lambda - ex.a);
                Ok(if w.im >= c { d.norm().powf(ex.a) / shape } else { 0.0 })
            })
            .collect()
    })?
    .into_iter()
    .collect::<Result<Vec<Vec<f64>>>>()?;
    let estimates = zhats
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let col: Vec<f64> = values.iter().map(|v| v[k]).collect();
            let (m, se) = mean_stderr(&col);
            MCEstimate::new(m, se, col.len(), cfg.master_seed)
                .with("zhat_re", z.re)
                .with("zhat_im", z.im)
                .with("b", b)
                .with("a", ex.a)
                .with("lambda", ex.lambda)
                .with("c", c)
        })
        .collect();
    Ok(BatchResult {
        param_name: "abs_zhat".into(),
        params: zhats.iter().map(|z| z.norm()).collect(),
        estimates,
        targets: vec![None; zhats.len()],
        n_runs: cfg.n_runs,
        undecided: 0,
        excluded: 0,
        warnings: Vec::new(),
    })
}
