use num_complex::Complex64;

use crate::error::{Result, SleError};

pub fn point_segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

fn cross(u: Complex64, v: Complex64) -> f64 {
    u.re * v.im - u.im * v.re
}

fn segments_cross(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Euclidean distance between segments `[a, b]` and `[c, d]`.
pub fn segment_distance(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    if segments_cross(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Exact distance from `z` to the polyline through `points` by brute force.
pub fn dist_to_polyline(z: Complex64, points: &[Complex64]) -> Result<f64> {
    match points.len() {
        0 => Err(SleError::invalid("trace", "empty polyline")),
        1 => Ok((z - points[0]).norm()),
        _ => Ok(points
            .windows(2)
            .map(|w| point_segment_distance(z, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)),
    }
}

/// Uniform spatial hash of polyline segments for nearest-distance queries.
///
/// Each segment is registered in every cell its bounding box touches. A
/// query scans square rings of cells around the query cell and stops once
/// the best distance found cannot be beaten by any cell further out.
#[derive(Debug, Clone)]
pub struct SegmentIndex {
    points: Vec<Complex64>,
    origin: Complex64,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    entries: Vec<u32>,
}

impl SegmentIndex {
    /// Builds the index; `cell` is the bucket side, chosen automatically when `None`.
    pub fn new(points: &[Complex64], cell: Option<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(SleError::invalid("trace", "empty polyline"));
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p.re);
            x1 = x1.max(p.re);
            y0 = y0.min(p.im);
            y1 = y1.max(p.im);
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-12);
        let cell = match cell {
            Some(c) if c > 0.0 => c,
            Some(_) => return Err(SleError::invalid("cell", "must be positive")),
            None => {
                // about one segment per cell on average, at most 1024 cells per side
                let total: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
                let mean = total / (points.len().max(2) - 1) as f64;
                mean.max(span / 1024.0).max(1e-12)
            }
        };
        let nx = (((x1 - x0) / cell).floor() as usize + 1).min(1 << 14);
        let ny = (((y1 - y0) / cell).floor() as usize + 1).min(1 << 14);
        let cell = cell.max((x1 - x0) / (nx as f64 - 0.5)).max((y1 - y0) / (ny as f64 - 0.5));
        let origin = Complex64::new(x0, y0);

        let mut index = SegmentIndex {
            points: points.to_vec(),
            origin,
            cell,
            nx,
            ny,
            starts: Vec::new(),
            entries: Vec::new(),
        };
        let segs: Vec<(usize, usize, usize, usize)> = (0..index.n_segments())
            .map(|s| index.seg_cells(s))
            .collect();
        let mut counts = vec![0u32; nx * ny + 1];
        for &(ix0, ix1, iy0, iy1) in &segs {
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    counts[iy * nx + ix + 1] += 1;
                }
            }
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut entries = vec![0u32; counts[nx * ny] as usize];
        for (s, &(ix0, ix1, iy0, iy1)) in segs.iter().enumerate() {
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    let slot = &mut fill[iy * nx + ix];
                    entries[*slot as usize] = s as u32;
                    *slot += 1;
                }
            }
        }
        index.starts = counts;
        index.entries = entries;
        Ok(index)
    }

    /// Number of segments (a single point counts as one degenerate segment).
    fn n_segments(&self) -> usize {
        self.points.len().saturating_sub(1).max(1)
    }

    fn segment(&self, s: usize) -> (Complex64, Complex64) {
        if self.points.len() == 1 {
            (self.points[0], self.points[0])
        } else {
            (self.points[s], self.points[s + 1])
        }
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let ix = ((x - self.origin.re) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let iy = ((y - self.origin.im) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (ix, iy)
    }

    fn seg_cells(&self, s: usize) -> (usize, usize, usize, usize) {
        let (a, b) = self.segment(s);
        let (ix0, iy0) = self.cell_of(a.re.min(b.re), a.im.min(b.im));
        let (ix1, iy1) = self.cell_of(a.re.max(b.re), a.im.max(b.im));
        (ix0, ix1, iy0, iy1)
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Distance from `z` to the polyline.
    pub fn dist(&self, z: Complex64) -> f64 {
        self.dist_within(z, f64::INFINITY)
    }

    /// `min(dist(z, polyline), bound)`; the search stops early once nothing
    /// closer than `bound` can remain.
    pub fn dist_within(&self, z: Complex64, bound: f64) -> f64 {
        let (cx, cy) = self.cell_of(z.re, z.im);
        // cells r rings out are at least max(gap, (r-1)·cell) away, where gap is
        // the distance from z to the clamped cell (nonzero only outside the grid)
        let bx0 = self.origin.re + cx as f64 * self.cell;
        let by0 = self.origin.im + cy as f64 * self.cell;
        let gap = ((bx0 - z.re).max(z.re - bx0 - self.cell).max(0.0)).hypot((by0 - z.im).max(z.im - by0 - self.cell).max(0.0));
        let mut best = bound;
        let max_ring = self.nx.max(self.ny);
        for r in 0..=max_ring {
            if r > 0 && gap.max((r - 1) as f64 * self.cell) >= best {
                break;
            }
            let (lo_x, hi_x) = (cx as isize - r as isize, cx as isize + r as isize);
            let (lo_y, hi_y) = (cy as isize - r as isize, cy as isize + r as isize);
            for iy in lo_y.max(0)..=hi_y.min(self.ny as isize - 1) {
                let on_edge_row = iy == lo_y || iy == hi_y;
                let mut ix = lo_x.max(0);
                while ix <= hi_x.min(self.nx as isize - 1) {
                    if on_edge_row || ix == lo_x || ix == hi_x {
                        let k = iy as usize * self.nx + ix as usize;
                        for &s in &self.entries[self.starts[k] as usize..self.starts[k + 1] as usize] {
                            let (a, b) = self.segment(s as usize);
                            let d = point_segment_distance(z, a, b);
                            if d < best {
                                best = d;
                            }
                        }
                        ix += 1;
                    } else {
                        // interior of the ring was scanned earlier: jump to the right edge
                        ix = hi_x;
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn examples() {
        let poly = [c(0.0, 0.0), c(0.0, 2.0)];
        assert_eq!(dist_to_polyline(c(1.0, 1.0), &poly).unwrap(), 1.0);
        assert_eq!(dist_to_polyline(c(0.0, 2.0), &poly).unwrap(), 0.0);
        assert!(dist_to_polyline(c(0.0, 0.0), &[]).is_err());
        let idx = SegmentIndex::new(&poly, None).unwrap();
        assert_eq!(idx.dist(c(1.0, 1.0)), 1.0);
        assert_eq!(idx.dist(c(0.0, 0.0)), 0.0);
        assert!((idx.dist(c(3.0, 6.0)) - 5.0).abs() < 1e-15);
        let single = SegmentIndex::new(&[c(1.0, 1.0)], None).unwrap();
        assert!((single.dist(c(4.0, 5.0)) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn segment_distances() {
        assert_eq!(segment_distance(c(0.0, 0.0), c(1.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)), 0.0);
        assert!((segment_distance(c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.3), c(2.0, 0.3)) - 0.3).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn index_matches_brute_force(
            steps in prop::collection::vec((-0.3f64..0.3, -0.3f64..0.3), 1..300),
            qs in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 1..20),
            cell in prop::option::of(0.01f64..1.0),
        ) {
            let mut p = c(0.0, 0.0);
            let mut pts = vec![p];
            for (dx, dy) in steps {
                p += c(dx, dy);
                pts.push(p);
            }
            let idx = SegmentIndex::new(&pts, cell).unwrap();
            for (x, y) in qs {
                let z = c(x, y);
                let exact = dist_to_polyline(z, &pts).unwrap();
                prop_assert!((idx.dist(z) - exact).abs() < 1e-12);
                prop_assert!((idx.dist_within(z, 0.1) - exact.min(0.1)).abs() < 1e-12);
            }
        }
    }
}
