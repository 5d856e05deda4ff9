use std::collections::HashSet;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::{is_dyadic, Rect};
use crate::error::{Result, SleError};

/// Occupied-box counts `N(ε)` of a point set inside a window.
///
/// Boxes are cells of the absolute grid `ε·ℤ²`, so counts do not change
/// under translation by multiples of `ε`. Squares stand in for the disks of
/// the covering-number definition; that only shifts `log N` by a constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCountResult {
    pub epsilons: Vec<f64>,
    pub counts: Vec<usize>,
    pub window: Rect,
}

impl BoxCountResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| SleError::Io(e.to_string());
        w.write_record(["eps", "count"]).map_err(err)?;
        for (e, n) in self.epsilons.iter().zip(&self.counts) {
            w.write_record([format!("{e:.16e}"), n.to_string()]).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn box_count(points: &[Complex64], window: Rect, eps_list: &[f64]) -> Result<BoxCountResult> {
    window.validate()?;
    if eps_list.is_empty() {
        return Err(SleError::invalid("eps_list", "no scales given"));
    }
    for w in eps_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(SleError::invalid("eps_list", "scales must be strictly decreasing"));
        }
    }
    if let Some(e) = eps_list.iter().find(|e| !is_dyadic(**e)) {
        return Err(SleError::invalid("eps_list", format!("{e} is not a power of two")));
    }
    let inside: Vec<Complex64> = points.iter().copied().filter(|p| window.contains(*p)).collect();
    let mut counts = Vec::with_capacity(eps_list.len());
    let mut seen = HashSet::new();
    for &eps in eps_list {
        seen.clear();
        for p in &inside {
            seen.insert(((p.re / eps).floor() as i64, (p.im / eps).floor() as i64));
        }
        counts.push(seen.len());
    }
    Ok(BoxCountResult {
        epsilons: eps_list.to_vec(),
        counts,
        window,
    })
}

/// Inserts points along each segment so consecutive points are at most
/// `spacing` apart.
pub fn densify(points: &[Complex64], spacing: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(points.len());
    if let Some(&first) = points.first() {
        out.push(first);
    }
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((b - a).norm() / spacing).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            out.push(a + (b - a) * (k as f64 / pieces as f64));
        }
    }
    out
}

/// Box counts of the polyline through `points`, sampled at a quarter of the
/// finest scale.
pub fn polyline_box_count(points: &[Complex64], window: Rect, eps_list: &[f64]) -> Result<BoxCountResult> {
    let finest = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    box_count(&densify(points, finest / 4.0), window, eps_list)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_scales: usize,
}

/// Least-squares slope of `log N` against `log 1/ε`, restricted to scales in
/// `eps_range = (min, max)` when given. Scales with `N = 0` are skipped.
pub fn fit_dimension(result: &BoxCountResult, eps_range: Option<(f64, f64)>) -> Result<DimensionFit> {
    let pts: Vec<(f64, f64)> = result
        .epsilons
        .iter()
        .zip(&result.counts)
        .filter(|(e, n)| **n > 0 && eps_range.is_none_or(|(lo, hi)| **e >= lo && **e <= hi))
        .map(|(e, n)| ((1.0 / e).ln(), (*n as f64).ln()))
        .collect();
    least_squares(&pts)
}

pub(crate) fn least_squares(pts: &[(f64, f64)]) -> Result<DimensionFit> {
    if pts.len() < 3 {
        return Err(SleError::Estimation(format!(
            "need at least 3 usable scales for a fit, have {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(DimensionFit {
        slope,
        intercept,
        r2,
        n_scales: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Rect {
        Rect::new(-4.0, 4.0, -4.0, 4.0).unwrap()
    }

    fn dyadic(m0: i32, m1: i32) -> Vec<f64> {
        (m0..=m1).map(|m| 2f64.powi(-m)).collect()
    }

    #[test]
    fn single_and_separated_points() {
        let eps = dyadic(0, 6);
        let r = box_count(&[Complex64::new(0.3, 0.7)], unit(), &eps).unwrap();
        assert!(r.counts.iter().all(|&n| n == 1));
        let pts = [Complex64::new(0.0, 0.0), Complex64::new(0.6, 0.6)];
        let r = box_count(&pts, unit(), &[0.25]).unwrap();
        assert_eq!(r.counts, vec![2]);
        let r = box_count(&[], unit(), &eps).unwrap();
        assert!(r.counts.iter().all(|&n| n == 0));
    }

    #[test]
    fn unit_segment() {
        for m in 2..8 {
            let eps = 2f64.powi(-m);
            let n = (4.0 / eps) as usize;
            let pts: Vec<Complex64> = (0..=n).map(|k| Complex64::new(k as f64 * eps / 4.0 + 1e-9, 0.1)).collect();
            let r = box_count(&pts, unit(), &[eps]).unwrap();
            let base = 1usize << m;
            assert!(r.counts[0] >= base && r.counts[0] <= base + 1, "m={m}: {}", r.counts[0]);
        }
        let pts = [Complex64::new(1e-9, 0.1), Complex64::new(1.0 + 1e-9, 0.1)];
        let r = polyline_box_count(&pts, unit(), &dyadic(2, 8)).unwrap();
        let fit = fit_dimension(&r, None).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05);
    }

    #[test]
    fn scale_validation() {
        assert!(box_count(&[], unit(), &[0.5, 0.25, 0.3]).is_err());
        assert!(box_count(&[], unit(), &[0.3]).is_err());
        assert!(box_count(&[], unit(), &[0.25, 0.5]).is_err());
        assert!(Rect::new(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn exact_power_laws() {
        for (d, c) in [(1.5, 1.0), (1.5, 7.3), (0.0, 3.0), (1.9, 0.01)] {
            let eps = dyadic(1, 9);
            let pts: Vec<(f64, f64)> = eps.iter().map(|e| ((1.0 / e).ln(), (c * e.powf(-d)).ln())).collect();
            let fit = least_squares(&pts).unwrap();
            assert!((fit.slope - d).abs() < 1e-12, "d={d} c={c}: {}", fit.slope);
            assert!((fit.r2 - 1.0).abs() < 1e-12);
        }
        let r = BoxCountResult {
            epsilons: vec![0.5, 0.25],
            counts: vec![1, 2],
            window: unit(),
        };
        assert!(fit_dimension(&r, None).is_err());
    }

    #[test]
    fn csv_export() {
        let r = box_count(&[Complex64::new(0.1, 0.1)], unit(), &[0.5, 0.25]).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("eps,count\n"));
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn monotone_under_inclusion_and_translation(
            xs in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..60),
            extra in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 0..20),
            shift_x in -4i32..4, shift_y in -4i32..4,
        ) {
            let window = Rect::new(-100.0, 100.0, -100.0, 100.0).unwrap();
            let eps = dyadic(0, 5);
            let a: Vec<Complex64> = xs.iter().map(|&(x, y)| Complex64::new(x, y)).collect();
            let mut b = a.clone();
            b.extend(extra.iter().map(|&(x, y)| Complex64::new(x, y)));
            let ra = box_count(&a, window, &eps).unwrap();
            let rb = box_count(&b, window, &eps).unwrap();
            for (na, nb) in ra.counts.iter().zip(&rb.counts) {
                prop_assert!(na <= nb);
            }
            for w in ra.counts.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for &e in &eps {
                let shift = Complex64::new(shift_x as f64 * e, shift_y as f64 * e);
                let moved: Vec<Complex64> = a.iter().map(|p| p + shift).collect();
                let r1 = box_count(&a, window, &[e]).unwrap();
                let r2 = box_count(&moved, window, &[e]).unwrap();
                prop_assert_eq!(r1.counts, r2.counts);
            }
        }
    }
}
