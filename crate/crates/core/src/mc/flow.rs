//! Per-run stepping of points under Brownian driving.
//!
//! Driving increments are drawn on the fly. With a uniform grid every step
//! has length `dt_min` and the increments come out in the same order as in
//! [`sample_brownian`](crate::driving::sample_brownian), so a run reproduces
//! the chain built from the same seed. In adaptive mode the step is
//! `max(dt_min, h²·r²)` where `r` is the distance of the tracked point to the
//! driving point; the flow is scale invariant, so this keeps the relative
//! resolution fixed while spending few steps on runs that wander far away.

use num_complex::Complex64;

use crate::loewner::step::{forward_rel, inverse_rel};
use crate::loewner::{forward_level_time, inverse_level_time};
use crate::rng::{rng_from_seed, standard_normal, SimRng};

use super::ExperimentConfig;

pub(crate) struct Driver {
    rng: SimRng,
    kappa: f64,
    dt_min: f64,
    rel_step: Option<f64>,
    max_steps: usize,
    t_max: f64,
    pub t: f64,
    pub steps: usize,
}

impl Driver {
    /// Driver for one run. Uniform runs stop after `n_steps` steps; adaptive
    /// runs after `max_steps` steps or once time `t_max` is reached.
    pub fn new(cfg: &ExperimentConfig, horizon: f64, seed: u64, t_max: Option<f64>) -> Self {
        let dt_min = horizon / cfg.n_steps as f64;
        let (max_steps, t_max) = match cfg.rel_step {
            None => (cfg.n_steps, f64::INFINITY),
            Some(_) => (cfg.max_steps, t_max.unwrap_or(f64::INFINITY)),
        };
        Driver {
            rng: rng_from_seed(seed),
            kappa: cfg.kappa,
            dt_min,
            rel_step: cfg.rel_step,
            max_steps,
            t_max,
            t: 0.0,
            steps: 0,
        }
    }

    pub fn dt_min(&self) -> f64 {
        self.dt_min
    }

    pub fn exhausted(&self) -> bool {
        self.steps >= self.max_steps || self.t >= self.t_max
    }

    /// Length of the next step for a point at distance `scale` from the driving point.
    pub fn next_dt(&self, scale: f64) -> f64 {
        let dt = match self.rel_step {
            None => self.dt_min,
            Some(h) => (h * h * scale * scale).max(self.dt_min),
        };
        dt.min(self.t_max - self.t)
    }

    /// Driving increment over a step of length `dt`; advances the clock.
    pub fn increment(&mut self, dt: f64) -> f64 {
        self.t += dt;
        self.steps += 1;
        (self.kappa * dt).sqrt() * standard_normal(&mut self.rng)
    }
}

/// Real slit update of `Y = g(x) − ξ`: `Y ← √(Y² + 4dt) − Δξ`.
#[inline]
pub(crate) fn real_step(y: f64, dt: f64, dxi: f64) -> f64 {
    (y * y + 4.0 * dt).sqrt() - dxi
}

/// Direction of the Loewner flow for a tracked complex point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Backward,
}

/// One step of `v = g − ξ` together with the derivative factor. `v` is
/// first moved by the driving increment, then flowed for `dt` (or for the
/// part of the step that reaches `Im = level`, if it does).
pub(crate) struct Substep {
    pub v: Complex64,
    pub factor: Complex64,
    /// Time actually flowed; smaller than `dt` when the level was reached.
    pub flowed: f64,
    pub reached: bool,
}

pub(crate) fn complex_step(v: Complex64, dt: f64, dxi: f64, dir: Direction, level: Option<f64>) -> Substep {
    let shifted = Complex64::new(v.re - dxi, v.im);
    let hit = level.and_then(|y| match dir {
        Direction::Forward => forward_level_time(shifted, dt, y),
        Direction::Backward => inverse_level_time(shifted, dt, y),
    });
    let s = hit.unwrap_or(dt);
    let (rr, ri) = match dir {
        Direction::Forward => forward_rel(shifted.re, shifted.im, 4.0 * s),
        Direction::Backward => inverse_rel(shifted.re, shifted.im, 4.0 * s),
    };
    let root = Complex64::new(rr, ri);
    let mut next = root;
    if let (true, Some(y)) = (hit.is_some(), level) {
        // land exactly on the level so later comparisons are clean
        next.im = y;
    }
    Substep {
        v: next,
        factor: shifted / root,
        flowed: s,
        reached: hit.is_some(),
    }
}
