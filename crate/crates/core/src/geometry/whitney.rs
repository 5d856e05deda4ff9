use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::distance::SegmentIndex;
use super::{is_dyadic, Rect};
use crate::error::{Result, SleError};
use crate::loewner::{forward_map, LoewnerChain, MapOutcome, TracePolyline};

/// Dyadic square `[corner, corner + size(1+i)]` of a Whitney decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhitneyCell {
    pub corner: Complex64,
    pub size: f64,
    /// Lower bound `dist(center) − size/√2` for `dist(Q, ∂H)`, where the
    /// boundary is the trace together with the real line.
    pub dist_to_boundary: f64,
    /// Same lower bound for the distance to the trace alone.
    pub dist_to_trace: f64,
}

impl WhitneyCell {
    pub fn center(&self) -> Complex64 {
        self.corner + Complex64::new(0.5, 0.5) * self.size
    }
    pub fn top(&self) -> f64 {
        self.corner.im + self.size
    }
    /// `n` with `size = 2^{−n}`.
    pub fn level(&self) -> i32 {
        -(self.size.log2().round() as i32)
    }
    pub fn corners(&self) -> [Complex64; 4] {
        let s = self.size;
        [
            self.corner,
            self.corner + Complex64::new(s, 0.0),
            self.corner + Complex64::new(0.0, s),
            self.corner + Complex64::new(s, s),
        ]
    }
}

/// Predicate "this point is swallowed by time `t_n`" for a chain, by running
/// the forward flow with the given swallow tolerance.
pub fn swallow_oracle(chain: &LoewnerChain, swallow_tol: f64) -> impl Fn(Complex64) -> bool + Sync + '_ {
    move |z: Complex64| {
        matches!(
            forward_map(chain, z, chain.n_steps(), swallow_tol),
            Ok(MapOutcome::SwallowedAt { .. }) | Err(_)
        )
    }
}

struct Ctx<'a> {
    index: &'a SegmentIndex,
    oracle: &'a (dyn Fn(Complex64) -> bool + Sync),
    region: Rect,
    min_size: f64,
}

impl Ctx<'_> {
    fn boundary_dist(&self, z: Complex64) -> f64 {
        self.index.dist_within(z, z.im).min(z.im)
    }

    fn visit(&self, corner: Complex64, size: f64, out: &mut Vec<WhitneyCell>) {
        let r = &self.region;
        if corner.re >= r.x1 || corner.re + size <= r.x0 || corner.im >= r.y1 || corner.im + size <= r.y0 {
            return;
        }
        let inside =
            corner.re >= r.x0 && corner.re + size <= r.x1 && corner.im >= r.y0 && corner.im + size <= r.y1;
        if inside {
            let center = corner + Complex64::new(0.5, 0.5) * size;
            let half_diag = size / SQRT_2;
            let dc = self.boundary_dist(center) - half_diag;
            if dc >= size {
                // the square misses the boundary, so its center decides for all of it
                if !(self.oracle)(center) {
                    out.push(WhitneyCell {
                        corner,
                        size,
                        dist_to_boundary: dc,
                        dist_to_trace: (self.index.dist(center) - half_diag).max(0.0),
                    });
                }
                return;
            }
        }
        let half = size / 2.0;
        if half >= self.min_size {
            for (dx, dy) in [(0.0, 0.0), (half, 0.0), (0.0, half), (half, half)] {
                self.visit(corner + Complex64::new(dx, dy), half, out);
            }
        }
    }
}

/// Maximal dyadic squares inside `region` that satisfy
/// `d(Q) ≤ dist(Q, trace ∪ ℝ)` and whose centers are not swallowed.
///
/// Squares are found top-down starting from the largest dyadic size that
/// fits in the region; a square is split until it qualifies or falls below
/// `min_size`. Every emitted square other than a top-level one has a parent
/// that failed the test, which bounds its boundary distance by `(2+√2)·d(Q)`.
/// The output is sorted by corner (then size), independent of scheduling.
pub fn whitney_decompose(
    trace: &TracePolyline,
    swallowed: &(dyn Fn(Complex64) -> bool + Sync),
    region: Rect,
    min_size: f64,
) -> Result<Vec<WhitneyCell>> {
    region.validate()?;
    if region.y0 < 0.0 {
        return Err(SleError::invalid("region", "must lie in the upper half-plane"));
    }
    if !is_dyadic(min_size) {
        return Err(SleError::invalid("min_size", "must be a power of two"));
    }
    let index = SegmentIndex::new(&trace.points, None)?;
    let top = 2f64.powf(region.width().min(region.height()).log2().floor()).max(min_size);
    let ctx = Ctx {
        index: &index,
        oracle: swallowed,
        region,
        min_size,
    };
    let (ix0, ix1) = ((region.x0 / top).floor() as i64, (region.x1 / top).ceil() as i64);
    let (iy0, iy1) = ((region.y0 / top).floor() as i64, (region.y1 / top).ceil() as i64);
    let roots: Vec<Complex64> = (iy0..iy1)
        .flat_map(|iy| (ix0..ix1).map(move |ix| Complex64::new(ix as f64 * top, iy as f64 * top)))
        .collect();
    let parts: Vec<Vec<WhitneyCell>> = roots
        .par_iter()
        .map(|&c| {
            let mut out = Vec::new();
            ctx.visit(c, top, &mut out);
            out
        })
        .collect();
    let mut cells: Vec<WhitneyCell> = parts.into_iter().flatten().collect();
    cells.sort_by(|a, b| {
        (a.corner.re, a.corner.im, a.size)
            .partial_cmp(&(b.corner.re, b.corner.im, b.size))
            .expect("finite cells")
    });
    Ok(cells)
}

/// Cells with `sup Im ≥ h` whose distance to the trace is at most `hull_dist_cap`.
pub fn whitney_filter(cells: &[WhitneyCell], h: f64, hull_dist_cap: f64) -> Vec<WhitneyCell> {
    cells
        .iter()
        .copied()
        .filter(|c| c.top() >= h && c.dist_to_trace <= hull_dist_cap)
        .collect()
}

/// `S_h(a) = Σ d(Q)^a` over the cells kept by [`whitney_filter`].
pub fn whitney_sum(cells: &[WhitneyCell], h: f64, a: f64, hull_dist_cap: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(SleError::invalid("h", "must lie in (0, 1)"));
    }
    Ok(whitney_filter(cells, h, hull_dist_cap)
        .iter()
        .map(|c| c.size.powf(a))
        .sum())
}

/// Number of cells `W(n)` of each size `2^{−n}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WhitneyHistogram {
    pub counts: BTreeMap<i32, usize>,
}

impl WhitneyHistogram {
    pub fn get(&self, n: i32) -> usize {
        self.counts.get(&n).copied().unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| SleError::Io(e.to_string());
        w.write_record(["n", "W"]).map_err(err)?;
        for (n, c) in &self.counts {
            w.write_record([n.to_string(), c.to_string()]).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn whitney_histogram(cells: &[WhitneyCell]) -> WhitneyHistogram {
    let mut counts = BTreeMap::new();
    for c in cells {
        *counts.entry(c.level()).or_insert(0) += 1;
    }
    WhitneyHistogram { counts }
}
