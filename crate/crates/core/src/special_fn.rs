//! Real special functions used by the closed-form predictions: the Gauss
//! hypergeometric function, Gamma, and the dilogarithm.
//!
//! `hyp2f1` sums the defining series directly for `z <= 1/2`. Above that the
//! linear transformation `z -> 1 - z` is applied, so both transformed series
//! converge at least like `2^-n`. When `c - a - b` is (numerically) an
//! integer the transformation's Gamma factors have cancelling poles; there the
//! function is evaluated at `c ± h`, `c ± 2h` and Richardson-extrapolated in
//! `h`, which is exact to `O(h^4)` because `2F1` is analytic in `c`.

use std::f64::consts::PI;

use crate::error::{Result, SleError};

/// Distance to a non-positive integer below which an argument counts as a pole.
pub const POLE_TOL: f64 = 1e-12;

/// Distance of `c - a - b` to an integer below which the degenerate
/// branch of the `1 - z` transformation is used.
const DEGENERATE_TOL: f64 = 1e-6;

/// Perturbation step in `c` for the degenerate branch.
const DEGENERATE_STEP: f64 = 1e-4;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Stopping rule for series summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0) {
            return Err(SleError::invalid("rel_tol", "must be positive"));
        }
        if max_terms == 0 {
            return Err(SleError::invalid("max_terms", "must be at least 1"));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-15,
            max_terms: 20_000,
        }
    }
}

/// Returns the pole location if `x` lies within [`POLE_TOL`] of a
/// non-positive integer.
pub fn nonpositive_integer(x: f64) -> Option<f64> {
    let r = x.round();
    if r <= 0.0 && (x - r).abs() < POLE_TOL {
        Some(r)
    } else {
        None
    }
}

/// `sin(pi x)` with the argument reduced before multiplying by pi, so that it
/// vanishes to full precision near integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    (PI * r).sin()
}

fn lanczos(x: f64) -> f64 {
    // valid for x >= 0.5
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &p) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += p / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    // split the power so large arguments do not overflow before e^-t
    let half = t.powf((x + 0.5) / 2.0);
    (2.0 * PI).sqrt() * half * (-t).exp() * half * acc
}

/// The Gamma function.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(SleError::invalid("x", "must be finite"));
    }
    if let Some(at) = nonpositive_integer(x) {
        return Err(SleError::Pole { at });
    }
    if x < 0.5 {
        Ok(PI / (sin_pi(x) * lanczos(1.0 - x)))
    } else {
        Ok(lanczos(x))
    }
}

/// `1/Gamma(x)`, which is entire: zero at the poles of Gamma.
pub fn recip_gamma(x: f64) -> f64 {
    match gamma_fn(x) {
        Ok(g) => 1.0 / g,
        Err(_) => 0.0,
    }
}

fn direct_series(a: f64, b: f64, c: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut small_run = 0;
    for n in 0..ctrl.max_terms {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // require two consecutive negligible terms past the turning point
        if term.abs() <= ctrl.rel_tol * sum.abs() && nf + 1.0 > (a.abs() + b.abs()) {
            small_run += 1;
            if small_run >= 2 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(SleError::NonConvergence {
        terms: ctrl.max_terms,
    })
}

/// Both branches of the `z -> 1 - z` connection formula for non-integer `c - a - b`.
fn one_minus_z(a: f64, b: f64, c: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    let s = c - a - b;
    let w = 1.0 - z;
    let gc = gamma_fn(c)?;
    let first = gc * gamma_fn(s)? * recip_gamma(c - a) * recip_gamma(c - b);
    let second = gc * gamma_fn(-s)? * recip_gamma(a) * recip_gamma(b);
    let mut value = 0.0;
    if first != 0.0 {
        value += first * direct_series(a, b, 1.0 - s, w, ctrl)?;
    }
    if second != 0.0 {
        value += second * w.powf(s) * direct_series(c - a, c - b, 1.0 + s, w, ctrl)?;
    }
    Ok(value)
}

/// Gauss hypergeometric function `2F1(a, b; c; z)` for `0 <= z < 1`.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(SleError::invalid("z", format!("{z} is outside [0, 1)")));
    }
    if let Some(at) = nonpositive_integer(c) {
        return Err(SleError::Pole { at });
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let terminating = nonpositive_integer(a).is_some() || nonpositive_integer(b).is_some();
    if terminating || z <= 0.5 {
        return direct_series(a, b, c, z, ctrl);
    }
    let s = c - a - b;
    if (s - s.round()).abs() > DEGENERATE_TOL {
        return one_minus_z(a, b, c, z, ctrl);
    }
    let h = DEGENERATE_STEP;
    let sym = |step: f64| -> Result<f64> {
        Ok(0.5 * (one_minus_z(a, b, c + step, z, ctrl)? + one_minus_z(a, b, c - step, z, ctrl)?))
    };
    let near = sym(h)?;
    let far = sym(2.0 * h)?;
    Ok((4.0 * near - far) / 3.0)
}

/// `2F1(a, b; c; 1)` by Gauss's summation theorem.
///
/// Returns 0 when `c - a` or `c - b` is a pole of Gamma, and 1 when `a` or
/// `b` vanishes. Fails when the series diverges at 1.
pub fn hyp2f1_at_one(a: f64, b: f64, c: f64) -> Result<f64> {
    if let Some(at) = nonpositive_integer(c) {
        return Err(SleError::Pole { at });
    }
    if a == 0.0 || b == 0.0 {
        return Ok(1.0);
    }
    if nonpositive_integer(c - a).is_some() || nonpositive_integer(c - b).is_some() {
        return Ok(0.0);
    }
    let excess = c - a - b;
    if excess <= 0.0 {
        return Err(SleError::DivergentAtOne { excess });
    }
    Ok(gamma_fn(c)? * gamma_fn(excess)? / (gamma_fn(c - a)? * gamma_fn(c - b)?))
}

fn dilog_series(x: f64) -> f64 {
    let mut power = x;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = power / (kf * kf);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        power *= x;
    }
    sum
}

/// Li₂ on `[0, 1]`.
fn dilog_unit(x: f64) -> f64 {
    if x <= 0.5 {
        dilog_series(x)
    } else if x == 1.0 {
        PI * PI / 6.0
    } else {
        // Euler reflection
        PI * PI / 6.0 - x.ln() * (1.0 - x).ln() - dilog_series(1.0 - x)
    }
}

/// The real dilogarithm `Li₂(x)` for `x <= 1`.
pub fn dilog(x: f64) -> Result<f64> {
    if !(x <= 1.0) {
        return Err(SleError::invalid("x", format!("dilog requires x <= 1, got {x}")));
    }
    if x >= 0.0 {
        return Ok(dilog_unit(x));
    }
    if x >= -0.5 {
        return Ok(dilog_series(x));
    }
    // Landen: maps (-inf, 0) onto (0, 1)
    let y = x / (x - 1.0);
    let l = (1.0 - x).ln();
    Ok(-dilog_unit(y) - 0.5 * l * l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctrl() -> SeriesControl {
        SeriesControl::default()
    }

    #[test]
    fn gamma_known_values() {
        assert!((gamma_fn(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma_fn(0.5).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert!((gamma_fn(4.0).unwrap() - 6.0).abs() < 1e-12);
        assert!((gamma_fn(-0.5).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gamma_pole_reports_location() {
        assert_eq!(gamma_fn(-3.0), Err(SleError::Pole { at: -3.0 }));
        assert_eq!(gamma_fn(0.0), Err(SleError::Pole { at: 0.0 }));
        assert!(matches!(gamma_fn(-2.0 + 1e-13), Err(SleError::Pole { .. })));
        assert!(gamma_fn(-2.0 + 1e-9).is_ok());
    }

    #[test]
    fn gamma_matches_factorials_and_reflection_over_range() {
        let mut fact = 1.0f64;
        for n in 1..50 {
            let g = gamma_fn(n as f64 + 1.0).unwrap();
            fact *= n as f64;
            assert!((g / fact - 1.0).abs() < 1e-12, "n={n}");
        }
        for &x in &[-19.7, -10.25, -3.5, -0.3, 0.2] {
            let lhs = gamma_fn(x).unwrap() * gamma_fn(1.0 - x).unwrap();
            let rhs = PI / (PI * x).sin();
            assert!((lhs / rhs - 1.0).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn hyp2f1_trivial_points() {
        assert_eq!(hyp2f1(0.7, -1.3, 0.5, 0.0, &ctrl()).unwrap(), 1.0);
        let v = hyp2f1(-1.5, 0.5, 0.5, 0.5, &ctrl()).unwrap();
        assert!((v - 0.5f64.powf(1.5)).abs() < 1e-13);
        assert!((v - 0.353_553_390_6).abs() < 1e-10);
    }

    #[test]
    fn hyp2f1_log_identity_against_brute_force() {
        // oracle: 200 terms of the raw series
        let z: f64 = 0.5;
        let mut term = 1.0;
        let mut oracle = 1.0;
        for n in 0..200 {
            let nf = n as f64;
            term *= (1.0 + nf) * (1.0 + nf) / ((2.0 + nf) * (nf + 1.0)) * z;
            oracle += term;
        }
        let v = hyp2f1(1.0, 1.0, 2.0, z, &ctrl()).unwrap();
        assert!((v - oracle).abs() < 1e-14);
        assert!((v + (1.0 - z).ln() / z).abs() < 1e-14);
    }

    #[test]
    fn hyp2f1_transformed_region() {
        // -ln(1-z)/z has c - a - b = 0: exercises the degenerate branch
        for &z in &[0.6f64, 0.8, 0.95, 0.999] {
            let v = hyp2f1(1.0, 1.0, 2.0, z, &ctrl()).unwrap();
            let exact = -(1.0 - z).ln() / z;
            assert!((v / exact - 1.0).abs() < 1e-9, "z={z}: {v} vs {exact}");
        }
        // arcsin(sqrt z)/sqrt(z(1-z)) = 2F1(1,1;3/2;z), non-degenerate (s = -1/2)
        for &z in &[0.55f64, 0.75, 0.9, 0.99] {
            let v = hyp2f1(1.0, 1.0, 1.5, z, &ctrl()).unwrap();
            let exact = z.sqrt().asin() / (z * (1.0 - z)).sqrt();
            assert!((v / exact - 1.0).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn hyp2f1_errors() {
        assert!(matches!(
            hyp2f1(1.0, 1.0, -2.0, 0.3, &ctrl()),
            Err(SleError::Pole { .. })
        ));
        assert!(hyp2f1(1.0, 1.0, 2.0, 1.0, &ctrl()).is_err());
        let tight = SeriesControl::new(1e-15, 3).unwrap();
        assert!(matches!(
            hyp2f1(1.0, 1.0, 2.0, 0.4, &tight),
            Err(SleError::NonConvergence { terms: 3 })
        ));
        assert!(SeriesControl::new(0.0, 5).is_err());
        assert!(SeriesControl::new(1e-10, 0).is_err());
    }

    #[test]
    fn hyp2f1_at_one_cases() {
        assert_eq!(hyp2f1_at_one(0.0, 0.3, 1.7).unwrap(), 1.0);
        assert_eq!(hyp2f1_at_one(-1.5, 0.5, 0.5).unwrap(), 0.0);
        let v = hyp2f1_at_one(1.0 - 4.0 / 6.0, 2.0 - 8.0 / 6.0, 2.0 - 4.0 / 6.0).unwrap();
        let oracle = gamma_fn(4.0 / 3.0).unwrap() * gamma_fn(1.0 / 3.0).unwrap()
            / (gamma_fn(1.0).unwrap() * gamma_fn(2.0 / 3.0).unwrap());
        assert!((v - oracle).abs() < 1e-13);
        assert!(matches!(
            hyp2f1_at_one(1.0, 1.0, 2.0),
            Err(SleError::DivergentAtOne { .. })
        ));
    }

    #[test]
    fn dilog_constants() {
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        assert!((dilog(-1.0).unwrap() + PI * PI / 12.0).abs() < 1e-14);
        assert!((dilog(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-15);
        // Li2(1/2) = pi^2/12 - ln^2(2)/2
        let l2 = 2f64.ln();
        assert!((dilog(0.5).unwrap() - (PI * PI / 12.0 - 0.5 * l2 * l2)).abs() < 1e-15);
        assert!(dilog(1.0 + 1e-12).is_err());
    }

    #[test]
    fn dilog_matches_quadrature() {
        // Li2(x) = -∫_0^x ln(1-s)/s ds, Simpson on a fine grid
        for &x in &[-7.5f64, -2.0, -0.8, 0.3, 0.7, 0.95] {
            let n = 20_000;
            let h = x / n as f64;
            let f = |s: f64| if s == 0.0 { -1.0 } else { (1.0 - s).ln() / s };
            let mut acc = f(0.0) + f(x);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(i as f64 * h);
            }
            let quad = -acc * h / 3.0;
            assert!((dilog(x).unwrap() - quad).abs() < 1e-10, "x={x}");
        }
    }
}
