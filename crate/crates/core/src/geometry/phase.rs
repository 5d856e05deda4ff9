use std::collections::{HashMap, HashSet};

use num_complex::Complex64;

use super::boxcount::densify;
use super::distance::segment_distance;
use super::Rect;
use crate::error::{Result, SleError};

const MIN_GAP: usize = 3;

/// Number of pairs of segments of the polyline closer than `tol` that are
/// separated by at least two other segments. Two segments around a single
/// short one meet at a sharp turn of the discrete curve rather than a loop,
/// so they are not counted.
///
/// Segments are bucketed on a grid; a pair is examined only in the
/// lowest-indexed grid cell shared by both tol-inflated bounding boxes, so
/// each pair is counted once.
pub fn self_intersections(points: &[Complex64], tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(SleError::invalid("tol", "must be positive"));
    }
    if points.len() < 4 {
        return Ok(0);
    }
    let n_seg = points.len() - 1;
    let total: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let cell = (2.0 * total / n_seg as f64).max(tol);
    let half = tol / 2.0;
    let boxes: Vec<(i64, i64, i64, i64)> = points
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            (
                ((a.re.min(b.re) - half) / cell).floor() as i64,
                ((a.re.max(b.re) + half) / cell).floor() as i64,
                ((a.im.min(b.im) - half) / cell).floor() as i64,
                ((a.im.max(b.im) + half) / cell).floor() as i64,
            )
        })
        .collect();
    let mut grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for (s, &(x0, x1, y0, y1)) in boxes.iter().enumerate() {
        for ix in x0..=x1 {
            for iy in y0..=y1 {
                grid.entry((ix, iy)).or_default().push(s as u32);
            }
        }
    }
    let mut count = 0usize;
    let mut keys: Vec<&(i64, i64)> = grid.keys().collect();
    keys.sort_unstable();
    for key in keys {
        let members = &grid[key];
        for (i, &s) in members.iter().enumerate() {
            for &t in &members[i + 1..] {
                let (s, t) = (s.min(t) as usize, s.max(t) as usize);
                if t - s < MIN_GAP {
                    continue;
                }
                let (bs, bt) = (boxes[s], boxes[t]);
                if bs.0.max(bt.0) != key.0 || bs.2.max(bt.2) != key.1 {
                    continue;
                }
                if bs.1 < bt.0 || bt.1 < bs.0 || bs.3 < bt.2 || bt.3 < bs.2 {
                    continue;
                }
                if segment_distance(points[s], points[s + 1], points[t], points[t + 1]) < tol {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

/// Fraction of the `eps`-boxes tiling `region` (anchored at its lower-left
/// corner) that the polyline passes through.
pub fn filling_fraction(points: &[Complex64], region: Rect, eps: f64) -> Result<f64> {
    region.validate()?;
    if !(eps > 0.0) {
        return Err(SleError::invalid("eps", "must be positive"));
    }
    let nx = (region.width() / eps).round().max(1.0) as i64;
    let ny = (region.height() / eps).round().max(1.0) as i64;
    let mut seen = HashSet::new();
    for p in densify(points, eps / 4.0) {
        let ix = ((p.re - region.x0) / eps).floor() as i64;
        let iy = ((p.im - region.y0) / eps).floor() as i64;
        if (0..nx).contains(&ix) && (0..ny).contains(&iy) {
            seen.insert((ix, iy));
        }
    }
    Ok(seen.len() as f64 / (nx * ny) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn straight_chain_has_none() {
        let pts: Vec<Complex64> = (0..200).map(|k| c(0.0, k as f64 * 0.01)).collect();
        assert_eq!(self_intersections(&pts, 1e-3).unwrap(), 0);
        assert!(self_intersections(&pts, 0.0).is_err());
    }

    #[test]
    fn sharp_turn_is_not_a_loop() {
        let pts = [c(0.0, 0.0), c(1.0, 1.0), c(1.0, 1.001), c(0.0, 0.0011)];
        assert_eq!(self_intersections(&pts, 0.01).unwrap(), 0);
        let hook = [c(0.0, 0.0), c(1.0, 1.0), c(1.0, 1.001), c(0.9, 1.1), c(0.5, 0.5005)];
        assert_eq!(self_intersections(&hook, 0.01).unwrap(), 1);
    }

    #[test]
    fn figure_eight_crosses() {
        let pts: Vec<Complex64> = (0..=400)
            .map(|k| {
                let t = k as f64 / 400.0 * std::f64::consts::TAU;
                c(t.sin(), 1.5 + (2.0 * t).sin() / 2.0)
            })
            .collect();
        assert!(self_intersections(&pts, 1e-6).unwrap() >= 1);
    }

    #[test]
    fn filling_examples() {
        let region = Rect::new(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(filling_fraction(&[], region, 0.25).unwrap(), 0.0);
        // serpentine through every box centre
        let mut pts = Vec::new();
        for j in 0..4 {
            let y = 0.125 + 0.25 * j as f64;
            if j % 2 == 0 {
                pts.extend([c(0.125, y), c(0.875, y)]);
            } else {
                pts.extend([c(0.875, y), c(0.125, y)]);
            }
        }
        assert_eq!(filling_fraction(&pts, region, 0.25).unwrap(), 1.0);
        assert_eq!(filling_fraction(&pts[..2], region, 0.25).unwrap(), 0.25);
    }

    fn brute(points: &[Complex64], tol: f64) -> usize {
        let n = points.len() - 1;
        let mut count = 0;
        for s in 0..n {
            for t in s + 3..n {
                if segment_distance(points[s], points[s + 1], points[t], points[t + 1]) < tol {
                    count += 1;
                }
            }
        }
        count
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_reversal(
            steps in prop::collection::vec((-0.2f64..0.2, -0.2f64..0.2), 3..120),
            tol in 0.001f64..0.1,
        ) {
            let mut p = c(0.0, 0.0);
            let mut pts = vec![p];
            for (dx, dy) in steps {
                p += c(dx, dy);
                pts.push(p);
            }
            let n = self_intersections(&pts, tol).unwrap();
            prop_assert_eq!(n, brute(&pts, tol));
            let rev: Vec<Complex64> = pts.iter().rev().copied().collect();
            prop_assert_eq!(n, self_intersections(&rev, tol).unwrap());
        }
    }
}
