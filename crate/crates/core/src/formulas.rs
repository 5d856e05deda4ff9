//! Closed-form predictions for chordal SLE(κ): derivative moments, the law
//! of `Z`, boundary hitting probabilities, and the dimension exponents.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, SleError};
use crate::special_fn::{dilog, gamma_fn, hyp2f1, hyp2f1_at_one, SeriesControl};

/// Direction of the time change in the derivative moment formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Nu {
    Plus,
    Minus,
}

impl Nu {
    pub fn sign(self) -> f64 {
        match self {
            Nu::Plus => 1.0,
            Nu::Minus => -1.0,
        }
    }

    pub fn from_sign(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Nu::Plus),
            -1 => Ok(Nu::Minus),
            _ => Err(SleError::invalid("nu", format!("must be +1 or -1, got {s}"))),
        }
    }
}

/// `a = 2b + νκb(1−b)/2`, `λ = 4b + νκb(1−2b)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPair {
    pub a: f64,
    pub lambda: f64,
    pub b: f64,
    pub nu: Nu,
    pub kappa: f64,
}

pub fn exponents(b: f64, kappa: f64, nu: Nu) -> ExponentPair {
    let s = nu.sign();
    ExponentPair {
        a: 2.0 * b + s * kappa * b * (1.0 - b) / 2.0,
        lambda: 4.0 * b + s * kappa * b * (1.0 - 2.0 * b) / 2.0,
        b,
        nu,
        kappa,
    }
}

/// The value `F(ẑ) = (1 + (x̂/ŷ)²)^b ŷ^λ`, with `ν = −sign(log ŷ)`.
pub fn derivative_moment_f(zhat: Complex64, b: f64, kappa: f64) -> Result<f64> {
    let (x, y) = (zhat.re, zhat.im);
    if !(y > 0.0) {
        return Err(SleError::invalid("zhat", "needs Im > 0"));
    }
    if y == 1.0 {
        return Err(SleError::invalid("zhat", "Im zhat = 1 is excluded"));
    }
    let nu = if y > 1.0 { Nu::Minus } else { Nu::Plus };
    let ex = exponents(b, kappa, nu);
    Ok((1.0 + (x / y).powi(2)).powf(b) * y.powf(ex.lambda))
}

/// `η_j = 1/2 − 2/κ − (−1)^j √(32aκ + (2κ−8)²)/(4κ)`, returned as `(η₀, η₁)`.
pub fn eta_exponents(a: f64, kappa: f64) -> Result<(f64, f64)> {
    check_kappa(kappa)?;
    let disc = 32.0 * a * kappa + (2.0 * kappa - 8.0).powi(2);
    if disc < 0.0 {
        return Err(SleError::invalid(
            "a",
            format!("32·a·κ + (2κ−8)² = {disc} is negative"),
        ));
    }
    let base = 0.5 - 2.0 / kappa;
    let r = disc.sqrt() / (4.0 * kappa);
    Ok((base - r, base + r))
}

/// `Ĝ(x+iy) = 2F1(η₀, η₁; 1/2; x²/(x²+y²))`.
pub fn g_hat(z: Complex64, a: f64, kappa: f64) -> Result<f64> {
    if !(z.im > 0.0) {
        return Err(SleError::invalid("z", "needs Im > 0"));
    }
    let (e0, e1) = eta_exponents(a, kappa)?;
    let w = z.re * z.re / z.norm_sqr();
    hyp2f1(e0, e1, 0.5, w, &SeriesControl::default())
}

/// `Ĝ(1)`, the boundary value of [`g_hat`] as `x/y → ∞`.
pub fn g_hat_at_one(a: f64, kappa: f64) -> Result<f64> {
    let (e0, e1) = eta_exponents(a, kappa)?;
    hyp2f1_at_one(e0, e1, 0.5)
}

/// `E[Z(z)^a]`, with the infinite and zero regimes kept symbolic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ZMoment {
    Finite(f64),
    Infinite,
    Zero,
}

impl ZMoment {
    pub fn value(self) -> f64 {
        match self {
            ZMoment::Finite(v) => v,
            ZMoment::Infinite => f64::INFINITY,
            ZMoment::Zero => 0.0,
        }
    }
}

pub fn z_moment(z: Complex64, a: f64, kappa: f64) -> Result<ZMoment> {
    check_kappa(kappa)?;
    if !(z.im > 0.0) {
        return Err(SleError::invalid("z", "needs Im > 0"));
    }
    let edge = 1.0 - kappa / 8.0;
    if a == 0.0 {
        return Ok(ZMoment::Finite(1.0));
    }
    if kappa < 8.0 && a < edge {
        return Ok(ZMoment::Finite(g_hat(z, a, kappa)? / g_hat_at_one(a, kappa)?));
    }
    if a > 0.0 {
        return Ok(ZMoment::Infinite);
    }
    if kappa >= 8.0 {
        return Ok(ZMoment::Zero);
    }
    Err(SleError::invalid("a", format!("no closed form for a = {a}, κ = {kappa}")))
}

/// `P[X ≥ s]` where `X` is the leftmost point of `γ ∩ [1, ∞)`, for `4 < κ < 8`.
pub fn cardy_hit_prob(s: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 4.0 && kappa < 8.0) {
        return Err(SleError::invalid("kappa", "the formula holds for 4 < κ < 8"));
    }
    if !(s >= 1.0) {
        return Err(SleError::invalid("s", "must be >= 1"));
    }
    let (a, b, c) = (1.0 - 4.0 / kappa, 2.0 - 8.0 / kappa, 2.0 - 4.0 / kappa);
    let f = if s == 1.0 {
        hyp2f1_at_one(a, b, c)?
    } else {
        hyp2f1(a, b, c, 1.0 / s, &SeriesControl::default())?
    };
    let num = 4f64.powf((kappa - 4.0) / kappa) * PI.sqrt() * f * s.powf((4.0 - kappa) / kappa);
    Ok(num / (gamma_fn(c)? * gamma_fn(4.0 / kappa - 0.5)?))
}

/// Scale function of the Bessel process `(g_t(x) − ξ(t))/√κ`.
pub fn bessel_scale(x: f64, kappa: f64) -> f64 {
    if kappa == 4.0 {
        x.ln()
    } else {
        x.powf((kappa - 4.0) / kappa)
    }
}

/// Probability that `g_t(x) − ξ(t)`, started at `x`, reaches `b` before `a`.
pub fn bessel_exit_prob(x: f64, a: f64, b: f64, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(0.0 < a && a <= x && x <= b && a < b) {
        return Err(SleError::invalid("x", format!("need 0 < a <= x <= b, got a={a} x={x} b={b}")));
    }
    let (fa, fb, fx) = (bessel_scale(a, kappa), bessel_scale(b, kappa), bessel_scale(x, kappa));
    Ok((fx - fa) / (fb - fa))
}

/// `h(z) = Im(θ z^β)` with `β = 1 − 4/κ`, `θ = exp(iπ(1−β)/2)`.
pub fn swallow_harmonic(z: Complex64, kappa: f64) -> Result<f64> {
    if !(kappa > 4.0) {
        return Err(SleError::invalid("kappa", "h is only defined for κ > 4"));
    }
    if z.im < 0.0 {
        return Err(SleError::invalid("z", "must lie in the closed upper half-plane"));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Ok(0.0);
    }
    let beta = 1.0 - 4.0 / kappa;
    // principal branch; z in the closed upper half-plane keeps arg in [0, π]
    let (r, arg) = z.to_polar();
    let phase = PI * (1.0 - beta) / 2.0 + beta * arg;
    Ok(r.powf(beta) * phase.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimExponents {
    pub trace_exp: f64,
    pub boundary_exp: f64,
}

pub fn dim_exponents(kappa: f64) -> Result<DimExponents> {
    check_kappa(kappa)?;
    Ok(DimExponents {
        trace_exp: (1.0 + kappa / 8.0).min(2.0),
        boundary_exp: if kappa <= 4.0 { 1.0 + kappa / 8.0 } else { 1.0 + 2.0 / kappa },
    })
}

/// `ϑ(δ, s)`: `δ^{−s}` for `s > 0`, `1 + |log δ|` for `s = 0`, `1` for `s < 0`.
///
/// `|s| ≤ 1e-12` counts as zero, since `s = a − λ` is computed in floating point.
pub fn vartheta(delta: f64, s: f64) -> f64 {
    if s.abs() <= 1e-12 {
        1.0 + delta.ln().abs()
    } else if s > 0.0 {
        delta.powf(-s)
    } else {
        1.0
    }
}

/// Upper bound shape `C (1 + x²/y²)^b (y/δ)^λ ϑ(δ, a − λ)` for
/// `P[|f̂'_t(x+iy)| ≥ δ/y]`, exponents taken with `ν = +1`.
pub fn derest_tail_bound(x: f64, y: f64, t: f64, delta: f64, b: f64, kappa: f64, c: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(y > 0.0 && y <= 1.0) {
        return Err(SleError::invalid("y", "must lie in (0, 1]"));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(SleError::invalid("t", "must lie in [0, 1]"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(SleError::invalid("delta", "must lie in (0, 1]"));
    }
    if !(b >= 0.0 && b <= 1.0 + 4.0 / kappa) {
        return Err(SleError::invalid("b", "must lie in [0, 1 + 4/κ]"));
    }
    let ex = exponents(b, kappa, Nu::Plus);
    Ok(c * (1.0 + x * x / (y * y)).powf(b) * (y / delta).powf(ex.lambda) * vartheta(delta, ex.a - ex.lambda))
}

/// `G(s) = log s·log(1+s) − ½log²(1+s) + Li₂(−s)`.
pub fn transience_g(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(SleError::invalid("s", "must be positive"));
    }
    let l1 = s.ln_1p();
    Ok(s.ln() * l1 - 0.5 * l1 * l1 + dilog(-s)?)
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(SleError::invalid("kappa", "must be positive"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponent_examples() {
        let e = exponents(0.0, 3.0, Nu::Plus);
        assert_eq!((e.a, e.lambda), (0.0, 0.0));
        for kappa in [1.0, 4.0, 6.5] {
            let e = exponents(0.5, kappa, Nu::Plus);
            assert!((e.a - (1.0 + kappa / 8.0)).abs() < 1e-15);
            assert_eq!(e.lambda, 2.0);
        }
        let e = exponents(1.0, 2.0, Nu::Minus);
        assert_eq!((e.a, e.lambda), (2.0, 5.0));
    }

    #[test]
    fn derivative_moment_examples() {
        assert!((derivative_moment_f(c(0.0, 2.0), 1.0, 2.0).unwrap() - 32.0).abs() < 1e-12);
        let lambda = exponents(0.7, 3.0, Nu::Plus).lambda;
        let v = derivative_moment_f(c(0.0, 0.4), 0.7, 3.0).unwrap();
        assert!((v - 0.4f64.powf(lambda)).abs() < 1e-15);
        let v = derivative_moment_f(c(1.0, 2.0), 0.5, 6.0).unwrap();
        assert!((v - 1.25f64.sqrt() * 4.0).abs() < 1e-12);
        assert!(derivative_moment_f(c(0.3, 1.0), 1.0, 2.0).is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_exponents(0.0, 4.0).unwrap(), (0.0, 0.0));
        let (e0, e1) = eta_exponents(0.75, 2.0).unwrap();
        assert!((e0 + 1.5).abs() < 1e-15 && (e1 - 0.5).abs() < 1e-15);
        assert!(eta_exponents(-1.0, 2.0).is_err());
    }

    #[test]
    fn z_moment_cases() {
        assert_eq!(z_moment(c(0.3, 1.0), -0.5, 9.0).unwrap(), ZMoment::Zero);
        let a = 0.9 * (1.0 - 6.0 / 8.0) + 0.2;
        assert_eq!(z_moment(c(0.0, 1.0), a, 6.0).unwrap(), ZMoment::Infinite);
        assert_eq!(z_moment(c(0.0, 1.0), 0.5, 9.0).unwrap(), ZMoment::Infinite);
        assert_eq!(z_moment(c(2.0, 0.5), 0.0, 9.0).unwrap(), ZMoment::Finite(1.0));

        // at z = i the 2F1 argument vanishes, so the moment is 1/Ĝ(1) = 1/Gauss sum
        let (e0, e1) = eta_exponents(0.5, 2.0).unwrap();
        let gauss = gamma_fn(0.5).unwrap() * gamma_fn(0.5 - e0 - e1).unwrap()
            / (gamma_fn(0.5 - e0).unwrap() * gamma_fn(0.5 - e1).unwrap());
        match z_moment(c(0.0, 1.0), 0.5, 2.0).unwrap() {
            ZMoment::Finite(v) => assert!((v - 1.0 / gauss).abs() < 1e-13),
            other => panic!("{other:?}"),
        }
        // negative discriminant: outside the table
        assert!(z_moment(c(0.0, 1.0), -2.0, 2.0).is_err());
    }

    #[test]
    fn g_hat_reduces_at_the_edge() {
        for kappa in [2.0, 3.0, 6.0] {
            let a = 1.0 - kappa / 8.0;
            for i in 0..20 {
                let z = c(-3.0 + 0.31 * i as f64, 0.2 + 0.13 * i as f64);
                let exact = (z.im / z.norm()).powf((8.0 - kappa) / kappa);
                let v = g_hat(z, a, kappa).unwrap();
                assert!((v - exact).abs() < 1e-9, "κ={kappa} z={z}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn cardy_normalisation_and_decay() {
        for kappa in [4.5, 5.0, 6.0, 7.0, 7.5] {
            assert!((cardy_hit_prob(1.0, kappa).unwrap() - 1.0).abs() < 1e-9);
            let mut prev = 1.0;
            for s in [1.01, 1.5, 2.0, 4.0, 10.0, 100.0, 1e4, 1e6] {
                let p = cardy_hit_prob(s, kappa).unwrap();
                assert!(p < prev, "κ={kappa} s={s}");
                prev = p;
            }
        }
        assert!(cardy_hit_prob(1e6, 6.0).unwrap() < 0.1);
        assert!(cardy_hit_prob(2.0, 4.0).is_err());
        assert!(cardy_hit_prob(0.5, 6.0).is_err());
    }

    #[test]
    fn cardy_against_naive_series() {
        // independent oracle: plain series for 2F1 at 1/s = 1/2, 4000 terms
        let (kappa, s) = (6.0, 2.0);
        let (a, b, cc) = (1.0 - 4.0 / kappa, 2.0 - 8.0 / kappa, 2.0 - 4.0 / kappa);
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 0..4000 {
            let nf = n as f64;
            term *= (a + nf) * (b + nf) / ((cc + nf) * (nf + 1.0)) / s;
            sum += term;
        }
        let oracle = 4f64.powf(1.0 / 3.0) * PI.sqrt() * sum * s.powf(-1.0 / 3.0)
            / (gamma_fn(cc).unwrap() * gamma_fn(4.0 / kappa - 0.5).unwrap());
        assert!((cardy_hit_prob(s, kappa).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn bessel_examples() {
        assert_eq!(bessel_exit_prob(1.0, 1.0, 4.0, 6.0).unwrap(), 0.0);
        assert_eq!(bessel_exit_prob(4.0, 1.0, 4.0, 6.0).unwrap(), 1.0);
        assert!((bessel_exit_prob(2.0, 1.0, 4.0, 4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(bessel_exit_prob(5.0, 1.0, 4.0, 4.0).is_err());
        assert!(bessel_exit_prob(0.5, 0.0, 4.0, 4.0).is_err());
    }

    #[test]
    fn swallow_harmonic_examples() {
        assert_eq!(swallow_harmonic(c(0.0, 0.0), 6.0).unwrap(), 0.0);
        assert!((swallow_harmonic(c(0.0, 1.0), 8.0).unwrap() - 1.0).abs() < 1e-15);
        let v = swallow_harmonic(c(1.0, 0.0), 6.0).unwrap();
        assert!((v - (PI / 3.0).sin()).abs() < 1e-15);
        assert!(swallow_harmonic(c(0.0, 1.0), 4.0).is_err());
        // positive on both boundary rays away from 0
        assert!(swallow_harmonic(c(-1.0, 0.0), 6.0).unwrap() > 0.0);
    }

    #[test]
    fn dimension_tables() {
        assert_eq!(dim_exponents(2.0).unwrap().trace_exp, 1.25);
        assert_eq!(dim_exponents(8.0).unwrap().trace_exp, 2.0);
        assert_eq!(dim_exponents(12.0).unwrap().trace_exp, 2.0);
        assert!((dim_exponents(6.0).unwrap().boundary_exp - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(dim_exponents(4.0).unwrap().boundary_exp, 1.5);
    }

    #[test]
    fn derest_examples() {
        assert_eq!(vartheta(0.3, -0.2), 1.0);
        assert!((vartheta(0.1, 0.0) - (1.0 + 10f64.ln())).abs() < 1e-15);
        assert!((vartheta(0.5, 2.0) - 4.0).abs() < 1e-15);
        // b = 1/2: λ = 2 and a − λ = κ/8 − 1 < 0 for κ = 2
        let v = derest_tail_bound(0.0, 0.5, 1.0, 0.25, 0.5, 2.0, 1.0).unwrap();
        assert!((v - 4.0).abs() < 1e-14);
        assert!(derest_tail_bound(0.0, 1.5, 1.0, 0.25, 0.5, 2.0, 1.0).is_err());
        assert!(derest_tail_bound(0.0, 0.5, 1.0, 0.25, 5.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn transience_g_values() {
        assert!(transience_g(1e-8).unwrap().abs() < 1e-6);
        let l2 = 2f64.ln();
        let exact = -0.5 * l2 * l2 - PI * PI / 12.0;
        assert!((transience_g(1.0).unwrap() - exact).abs() < 1e-14);
        assert!(transience_g(0.0).is_err());
    }

    #[test]
    fn transience_g_solves_its_ode() {
        for s in [0.5f64, 1.0, 2.0, 5.0] {
            let h = 1e-4 * s;
            let g = |x: f64| transience_g(x).unwrap();
            let d1 = (g(s + h) - g(s - h)) / (2.0 * h);
            let d2 = (g(s + h) - 2.0 * g(s) + g(s - h)) / (h * h);
            let residual = s * (1.0 + s).powi(2) * d2 + s * (1.0 + s) * d1 - 1.0;
            assert!(residual.abs() < 1e-4, "s={s}: {residual}");
        }
    }

    proptest! {
        #[test]
        fn derivative_moment_reflection(x in -5.0f64..5.0, y in 0.05f64..4.0, b in -1.0f64..2.0, kappa in 0.5f64..10.0) {
            prop_assume!((y - 1.0).abs() > 1e-6);
            let l = derivative_moment_f(c(x, y), b, kappa).unwrap();
            let r = derivative_moment_f(c(-x, y), b, kappa).unwrap();
            prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
        }

        #[test]
        fn bessel_monotone_and_scale_free(
            a in 0.1f64..1.0, width in 0.5f64..5.0, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0,
            scale in 0.1f64..10.0, kappa in prop::sample::select(vec![2.0, 4.0, 6.0, 9.0])
        ) {
            let b = a + width;
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let (x1, x2) = (a + lo * width, a + hi * width);
            let p1 = bessel_exit_prob(x1, a, b, kappa).unwrap();
            let p2 = bessel_exit_prob(x2, a, b, kappa).unwrap();
            prop_assert!(p1 <= p2 + 1e-15);
            let q = bessel_exit_prob(scale * x1, scale * a, scale * b, kappa).unwrap();
            prop_assert!((p1 - q).abs() < 1e-10);
        }

        #[test]
        fn exponent_relations_hold(b in -2.0f64..2.0, kappa in 0.1f64..12.0, plus in any::<bool>()) {
            let nu = if plus { Nu::Plus } else { Nu::Minus };
            let e = exponents(b, kappa, nu);
            let s = nu.sign();
            prop_assert_eq!(e.a, 2.0 * b + s * kappa * b * (1.0 - b) / 2.0);
            prop_assert_eq!(e.lambda, 4.0 * b + s * kappa * b * (1.0 - 2.0 * b) / 2.0);
            let (e0, e1) = eta_exponents(0.3, kappa).unwrap();
            prop_assert!(e0 <= e1);
        }
    }
}
