//! Geometric estimators on traces: box counting and dimension fits, distance
//! to the trace, Whitney decompositions of the unbounded complement, and the
//! self-intersection / filling diagnostics.

mod boxcount;
mod distance;
mod phase;
mod whitney;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SleError};

pub(crate) use boxcount::least_squares;
pub use boxcount::{box_count, densify, fit_dimension, polyline_box_count, BoxCountResult, DimensionFit};
pub use distance::{dist_to_polyline, point_segment_distance, segment_distance, SegmentIndex};
pub use phase::{filling_fraction, self_intersections};
pub use whitney::{
    swallow_oracle, whitney_decompose, whitney_filter, whitney_histogram, whitney_sum, WhitneyCell,
    WhitneyHistogram,
};

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let r = Rect { x0, x1, y0, y1 };
        r.validate()?;
        Ok(r)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.x1, self.y0, self.y1].iter().all(|v| v.is_finite());
        if !finite || !(self.x1 > self.x0 && self.y1 > self.y0) {
            return Err(SleError::invalid("window", format!("degenerate rectangle {self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }
    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }
}

/// True when `x` is `2^k` for an integer `k`.
pub(crate) fn is_dyadic(x: f64) -> bool {
    x > 0.0 && x.is_finite() && {
        let l = x.log2();
        l == l.round()
    }
}
