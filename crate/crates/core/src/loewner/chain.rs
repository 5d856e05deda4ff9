use num_complex::Complex64;

use super::step::{
    canonical, forward_level_time, forward_step, forward_step_with_derivative,
    inverse_step, inverse_step_with_derivative, StepOutcome,
};
use crate::driving::DrivingPath;
use crate::error::{Result, SleError};

/// Per-step parameters of a discretised Loewner chain.
///
/// Step `j` (1-based) runs over `(t_{j−1}, t_j]` with the driving frozen at
/// `c_j = ξ(t_j)`, the right endpoint. `g_{t_k}` is the composition of steps
/// `1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoewnerChain {
    dt: f64,
    centers: Vec<f64>,
    kappa: f64,
    seed: u64,
}

pub fn build_chain(path: &DrivingPath) -> Result<LoewnerChain> {
    if path.len() < 2 {
        return Err(SleError::invalid("path", "need at least two samples to form a step"));
    }
    Ok(LoewnerChain {
        dt: path.dt(),
        centers: path.values()[1..].to_vec(),
        kappa: path.kappa(),
        seed: path.seed(),
    })
}

impl LoewnerChain {
    pub fn from_centers(dt: f64, centers: Vec<f64>, kappa: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(SleError::invalid("dt", "must be positive"));
        }
        if centers.is_empty() {
            return Err(SleError::invalid("centers", "chain must have at least one step"));
        }
        Ok(Self {
            dt,
            centers,
            kappa,
            seed: 0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    /// Driving values `c_1..c_n`.
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn n_steps(&self) -> usize {
        self.centers.len()
    }
    pub fn total_time(&self) -> f64 {
        self.dt * self.centers.len() as f64
    }
    /// `ξ(t_k)`, with `ξ(0) = 0`.
    pub fn driving_at(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.centers[k - 1]
        }
    }
    /// Default swallow tolerance `10⁻⁴·√dt`.
    pub fn default_swallow_tol(&self) -> f64 {
        1e-4 * self.dt.sqrt()
    }

    fn check_step(&self, k: usize) -> Result<()> {
        if k > self.n_steps() {
            return Err(SleError::IndexOutOfRange {
                index: k,
                len: self.n_steps() + 1,
            });
        }
        Ok(())
    }

    /// Restarted chain `ĝ_t = g_{t_j + t} ∘ g_{t_j}^{-1}(· + ξ(t_j)) − ξ(t_j)`.
    pub fn restart(&self, j: usize) -> Result<LoewnerChain> {
        if j >= self.n_steps() {
            return Err(SleError::IndexOutOfRange {
                index: j,
                len: self.n_steps(),
            });
        }
        let base = self.driving_at(j);
        Ok(LoewnerChain {
            dt: self.dt,
            centers: self.centers[j..].iter().map(|c| c - base).collect(),
            kappa: self.kappa,
            seed: self.seed,
        })
    }
}

/// Image of a point under `g_{t_k}`, or the step at which it was swallowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapOutcome {
    Image(Complex64),
    SwallowedAt { step: usize, image: Complex64 },
}

impl MapOutcome {
    pub fn image(self) -> Option<Complex64> {
        match self {
            MapOutcome::Image(w) => Some(w),
            MapOutcome::SwallowedAt { .. } => None,
        }
    }
}

/// `g_{t_k}(z)` by composing forward steps `1..=k`.
pub fn forward_map(chain: &LoewnerChain, z: Complex64, k: usize, swallow_tol: f64) -> Result<MapOutcome> {
    chain.check_step(k)?;
    if z.im < 0.0 {
        return Err(SleError::invalid("z", "must lie in the closed upper half-plane"));
    }
    let mut w = canonical(z);
    for (j, &c) in chain.centers[..k].iter().enumerate() {
        match forward_step(w, c, chain.dt, swallow_tol) {
            StepOutcome::Moved(next) => w = next,
            StepOutcome::Swallowed(image) => {
                return Ok(MapOutcome::SwallowedAt { step: j + 1, image })
            }
        }
    }
    Ok(MapOutcome::Image(w))
}

/// `g'_{t_k}(z)` as the product of per-step derivative factors.
pub fn forward_derivative(chain: &LoewnerChain, z: Complex64, k: usize, swallow_tol: f64) -> Result<Complex64> {
    chain.check_step(k)?;
    let mut w = canonical(z);
    let mut d = Complex64::new(1.0, 0.0);
    for (j, &c) in chain.centers[..k].iter().enumerate() {
        let (next, factor) = forward_step_with_derivative(w, c, chain.dt);
        if w.im > 0.0 && next.im <= swallow_tol {
            return Err(SleError::Swallowed { step: j + 1 });
        }
        w = next;
        d *= factor;
    }
    Ok(d)
}

/// `g_{t_k}^{-1}(w)` by inverse steps `k, k−1, …, 1`.
pub fn inverse_map(chain: &LoewnerChain, w: Complex64, k: usize) -> Result<Complex64> {
    chain.check_step(k)?;
    let mut w = canonical(w);
    for &c in chain.centers[..k].iter().rev() {
        w = inverse_step(w, c, chain.dt);
    }
    Ok(w)
}

/// `f̂_{t_k}(z) − ξ(t_k)` and its derivative, where `f̂_t(z) = g_t^{-1}(z + ξ(t))`.
pub fn centered_inverse(chain: &LoewnerChain, z: Complex64, k: usize) -> Result<(Complex64, Complex64)> {
    chain.check_step(k)?;
    let shift = chain.driving_at(k);
    let mut w = canonical(z + shift);
    let mut d = Complex64::new(1.0, 0.0);
    for &c in chain.centers[..k].iter().rev() {
        let (next, factor) = inverse_step_with_derivative(w, c, chain.dt);
        w = next;
        d *= factor;
    }
    Ok((w - shift, d))
}

/// `g_{−t_k}(z)`: the backward flow driven by `path`, with step `j` using
/// `ξ(t_j)` as in [`build_chain`].
pub fn backward_flow(path: &DrivingPath, z: Complex64, k: usize) -> Result<Complex64> {
    backward_flow_with_derivative(path, z, k).map(|(w, _)| w)
}

pub fn backward_flow_with_derivative(path: &DrivingPath, z: Complex64, k: usize) -> Result<(Complex64, Complex64)> {
    if !(z.im > 0.0) {
        return Err(SleError::invalid("z", "backward flow needs Im z > 0"));
    }
    if k >= path.len() {
        return Err(SleError::IndexOutOfRange {
            index: k,
            len: path.len(),
        });
    }
    let mut w = z;
    let mut d = Complex64::new(1.0, 0.0);
    for &c in &path.values()[1..=k] {
        let (next, factor) = inverse_step_with_derivative(w, c, path.dt());
        w = next;
        d *= factor;
    }
    Ok((w, d))
}

/// First step at which `u = log Im g` reached a requested level, with the
/// exact crossing time inside that step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCrossing {
    pub level: f64,
    pub step: usize,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub step: usize,
    pub g: Complex64,
    pub gprime: Complex64,
    pub log_im: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackOptions {
    /// Levels of `u = log Im g_t(z0)` whose first crossing is recorded.
    pub levels: Vec<f64>,
    /// Stop once `Im g ≤ stop_im`. Default `10⁻³·Im z0`.
    pub stop_im: Option<f64>,
    pub swallow_tol: Option<f64>,
    pub record_history: bool,
}

/// State of one point after forward tracking.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedPoint {
    pub z0: Complex64,
    pub g: Complex64,
    pub gprime: Complex64,
    pub step: usize,
    pub swallowed: bool,
    pub tau_step: Option<usize>,
    pub level_log_im: f64,
    pub psi: f64,
    pub crossings: Vec<Option<LevelCrossing>>,
    /// `Im z0 · |g'| / Im g` at the stopping step.
    pub z_estimate: f64,
    pub stop_im: f64,
    pub history: Vec<FlowSample>,
}

/// Runs the forward flow of `z0` through the chain, recording `g`, `g'`,
/// `u = log Im g`, the ratio `ψ = Im z0·|g'|/Im g`, and level crossings.
pub fn track_point(chain: &LoewnerChain, z0: Complex64, opts: &TrackOptions) -> Result<TrackedPoint> {
    if !(z0.im > 0.0) {
        return Err(SleError::invalid("z0", "tracked points need Im z0 > 0"));
    }
    let stop_im = opts.stop_im.unwrap_or(1e-3 * z0.im);
    if !(stop_im >= 0.0) {
        return Err(SleError::invalid("stop_im", "must be >= 0"));
    }
    let swallow_tol = opts.swallow_tol.unwrap_or_else(|| chain.default_swallow_tol());
    let dt = chain.dt;
    let mut w = z0;
    let mut d = Complex64::new(1.0, 0.0);
    let mut crossings: Vec<Option<LevelCrossing>> = vec![None; opts.levels.len()];
    let mut history = Vec::new();
    let sample = |step: usize, w: Complex64, d: Complex64| FlowSample {
        step,
        g: w,
        gprime: d,
        log_im: w.im.ln(),
        psi: z0.im * d.norm() / w.im,
    };
    if opts.record_history {
        history.push(sample(0, w, d));
    }
    let mut step = 0;
    let mut swallowed = false;
    let mut last_psi = 1.0;
    for (j, &c) in chain.centers.iter().enumerate() {
        if w.im <= stop_im {
            break;
        }
        let v = Complex64::new(w.re - c, w.im);
        let (next, factor) = forward_step_with_derivative(w, c, dt);
        for (slot, &level) in crossings.iter_mut().zip(&opts.levels) {
            if slot.is_none() {
                let target = level.exp();
                if let Some(s) = forward_level_time(v, dt, target) {
                    *slot = Some(LevelCrossing {
                        level,
                        step: j + 1,
                        time: j as f64 * dt + s,
                    });
                } else if w.im <= target {
                    // already at or below the level before any motion
                    *slot = Some(LevelCrossing {
                        level,
                        step: j,
                        time: j as f64 * dt,
                    });
                }
            }
        }
        step = j + 1;
        if next.im <= swallow_tol {
            w = next;
            swallowed = true;
            break;
        }
        w = next;
        d *= factor;
        last_psi = z0.im * d.norm() / w.im;
        if opts.record_history {
            history.push(sample(step, w, d));
        }
    }
    // on a swallow the last finite ratio is kept: ψ converges as t → τ
    let z_estimate = last_psi;
    Ok(TrackedPoint {
        z0,
        g: w,
        gprime: d,
        step,
        swallowed,
        tau_step: swallowed.then_some(step),
        level_log_im: w.im.ln(),
        psi: z_estimate,
        crossings,
        z_estimate,
        stop_im,
        history,
    })
}

/// `|∂_u log|g'||` between consecutive samples of a history; bounded by 1
/// for the continuous flow.
pub fn log_derivative_slopes(history: &[FlowSample]) -> Vec<f64> {
    history
        .windows(2)
        .filter_map(|pair| {
            let du = pair[1].log_im - pair[0].log_im;
            (du != 0.0).then(|| (pair[1].gprime.norm().ln() - pair[0].gprime.norm().ln()) / du)
        })
        .collect()
}
