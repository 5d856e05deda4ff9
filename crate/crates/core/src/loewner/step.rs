//! One-step slit maps for piecewise-constant driving.
//!
//! With the driving value frozen at `c` for a step of length `dt`, the
//! Loewner flow is solved exactly by
//!
//! ```text
//! forward:   w ↦ c + sqrt((w − c)² + 4 dt)
//! inverse:   w ↦ c + sqrt((w − c)² − 4 dt)
//! ```
//!
//! Both use the square root with non-negative imaginary part. On the real
//! axis, where the radicand is positive, the root takes the sign of
//! `Re(w − c)` so real points stay on their side of the driving point.
//! Everything below is written on raw `f64` pairs so the zipper kernel can
//! keep several tips in registers.

use num_complex::Complex64;

/// Square root of `qr + i qi` with `Im ≥ 0`.
///
/// When the result is real the sign bit of `qi` picks its sign; callers pass
/// `qi = 2·Re(v)·Im(v)` so real inputs inherit the sign of `Re(v)`.
#[inline(always)]
pub(crate) fn sqrt_upper(qr: f64, qi: f64) -> (f64, f64) {
    let m = (qr * qr + qi * qi).sqrt();
    let big = ((m + qr.abs()) * 0.5).sqrt();
    let small = qi.abs() / (2.0 * big.max(f64::MIN_POSITIVE));
    let (re_mag, im) = if qr >= 0.0 { (big, small) } else { (small, big) };
    (re_mag.copysign(qi), im)
}

/// Forward slit step in coordinates relative to the new driving value:
/// given `v = w − c`, returns `sqrt(v² + 4dt)`.
#[inline(always)]
pub(crate) fn forward_rel(vr: f64, vi: f64, four_dt: f64) -> (f64, f64) {
    sqrt_upper(vr * vr - vi * vi + four_dt, 2.0 * vr * vi)
}

/// Inverse slit step relative to the driving value: `sqrt(v² − 4dt)`.
#[inline(always)]
pub(crate) fn inverse_rel(vr: f64, vi: f64, four_dt: f64) -> (f64, f64) {
    sqrt_upper(vr * vr - vi * vi - four_dt, 2.0 * vr * vi)
}

/// Result of one forward step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Moved(Complex64),
    /// The image fell to within the swallow tolerance of the real axis.
    Swallowed(Complex64),
}

impl StepOutcome {
    pub fn point(self) -> Complex64 {
        match self {
            StepOutcome::Moved(w) | StepOutcome::Swallowed(w) => w,
        }
    }
    pub fn is_swallowed(self) -> bool {
        matches!(self, StepOutcome::Swallowed(_))
    }
}

/// Normalises `-0.0` imaginary parts so real points carry a positive zero.
#[inline]
pub(crate) fn canonical(w: Complex64) -> Complex64 {
    Complex64::new(w.re, if w.im == 0.0 { 0.0 } else { w.im })
}

/// Exact forward flow over one step of constant driving `c`.
///
/// Points strictly inside the half-plane are reported swallowed when the
/// image has `Im ≤ swallow_tol`; real points are never swallowed by this rule.
pub fn forward_step(w: Complex64, c: f64, dt: f64, swallow_tol: f64) -> StepOutcome {
    let w = canonical(w);
    let (sr, si) = forward_rel(w.re - c, w.im, 4.0 * dt);
    let out = Complex64::new(c + sr, si);
    if w.im > 0.0 && si <= swallow_tol {
        StepOutcome::Swallowed(out)
    } else {
        StepOutcome::Moved(out)
    }
}

/// Forward step together with its derivative factor `(w − c)/sqrt((w − c)² + 4dt)`.
pub fn forward_step_with_derivative(w: Complex64, c: f64, dt: f64) -> (Complex64, Complex64) {
    let w = canonical(w);
    let v = Complex64::new(w.re - c, w.im);
    let (sr, si) = forward_rel(v.re, v.im, 4.0 * dt);
    let s = Complex64::new(sr, si);
    (Complex64::new(c + sr, si), v / s)
}

/// Inverse slit step: the preimage of `w` under the forward step.
pub fn inverse_step(w: Complex64, c: f64, dt: f64) -> Complex64 {
    let w = canonical(w);
    let (sr, si) = inverse_rel(w.re - c, w.im, 4.0 * dt);
    Complex64::new(c + sr, si)
}

/// Inverse step with derivative factor `(w − c)/sqrt((w − c)² − 4dt)`.
pub fn inverse_step_with_derivative(w: Complex64, c: f64, dt: f64) -> (Complex64, Complex64) {
    let w = canonical(w);
    let v = Complex64::new(w.re - c, w.im);
    let (sr, si) = inverse_rel(v.re, v.im, 4.0 * dt);
    let s = Complex64::new(sr, si);
    (Complex64::new(c + sr, si), v / s)
}

/// Length `s ∈ (0, dt]` of forward flow, from relative position `v`, after
/// which `Im` equals `target`; `None` if the full step stays above it.
///
/// Solves `Im sqrt(v² + 4s) = Y`: writing the root as `p + iY` gives
/// `p = Re v · Im v / Y` and `4s = p² − Y² − Re(v²)`.
pub fn forward_level_time(v: Complex64, dt: f64, target: f64) -> Option<f64> {
    let (_, si) = forward_rel(v.re, v.im, 4.0 * dt);
    if si > target || v.im <= target {
        return None;
    }
    let p = v.re * v.im / target;
    let s = (p * p - target * target - (v.re * v.re - v.im * v.im)) / 4.0;
    Some(s.clamp(0.0, dt))
}

/// Backward-flow analogue of [`forward_level_time`] (Im increases).
pub fn inverse_level_time(v: Complex64, dt: f64, target: f64) -> Option<f64> {
    let (_, si) = inverse_rel(v.re, v.im, 4.0 * dt);
    if si < target || v.im >= target {
        return None;
    }
    let p = v.re * v.im / target;
    let s = ((v.re * v.re - v.im * v.im) - p * p + target * target) / 4.0;
    Some(s.clamp(0.0, dt))
}
