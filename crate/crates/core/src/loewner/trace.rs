//! Trace extraction by the zipper: the tip at `t_k` is the top of the slit
//! opened in step `k`, pulled back through the inverse slit maps of steps
//! `k−1, …, 1`. Total cost is `n²/2` inverse steps.

use std::io::Write;

use num_complex::Complex64;

use super::chain::LoewnerChain;
use super::step::inverse_rel;
use crate::error::Result;

/// Tips processed together; independent dependency chains let the CPU
/// overlap the square roots and divisions of neighbouring tips.
const LANES: usize = 8;

/// SVG canvas and the half-plane window it shows.
pub const SVG_WIDTH: f64 = 1000.0;
pub const SVG_HEIGHT: f64 = 500.0;
pub const SVG_WINDOW: [f64; 4] = [-3.0, 3.0, 0.0, 3.0];

/// Ordered tips `γ(t_k)`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePolyline {
    pub points: Vec<Complex64>,
    pub dt: f64,
    pub kappa: f64,
    pub seed: u64,
}

impl TracePolyline {
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| crate::error::SleError::Io(e.to_string());
        w.write_record(["t", "re", "im"]).map_err(err)?;
        for (k, p) in self.points.iter().enumerate() {
            w.write_record([
                format!("{:.16e}", self.time(k)),
                format!("{:.16e}", p.re),
                format!("{:.16e}", p.im),
            ])
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Renders the polyline onto a fixed 1000×500 canvas showing `[−3,3]×[0,3]`.
    pub fn to_svg(&self) -> String {
        let [x0, x1, y0, y1] = SVG_WINDOW;
        let mut pts = String::with_capacity(self.points.len() * 16);
        for p in &self.points {
            let px = (p.re - x0) / (x1 - x0) * SVG_WIDTH;
            let py = (y1 - p.im) / (y1 - y0) * SVG_HEIGHT;
            if !pts.is_empty() {
                pts.push(' ');
            }
            pts.push_str(&format!("{px:.3},{py:.3}"));
        }
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
             <line x1=\"0\" y1=\"{h}\" x2=\"{w}\" y2=\"{h}\" stroke=\"gray\" stroke-width=\"1\"/>\n\
             <polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"{pts}\"/>\n\
             </svg>\n",
            w = SVG_WIDTH,
            h = SVG_HEIGHT,
        )
    }
}

#[inline(always)]
fn pull_back(wr: &mut f64, wi: &mut f64, c: f64, four_dt: f64) {
    let (sr, si) = inverse_rel(*wr - c, *wi, four_dt);
    *wr = c + sr;
    *wi = si;
}

/// Computes the tips `γ(t_k)` for every step of the chain.
pub fn trace(chain: &LoewnerChain) -> TracePolyline {
    let centers = chain.centers();
    let n = centers.len();
    let dt = chain.dt();
    let four_dt = 4.0 * dt;
    let height = 2.0 * dt.sqrt();
    let mut points = Vec::with_capacity(n + 1);
    points.push(Complex64::new(0.0, 0.0));

    let mut wr = [0.0f64; LANES];
    let mut wi = [0.0f64; LANES];
    let mut first = 1;
    while first <= n {
        let lanes = LANES.min(n - first + 1);
        // lane l holds tip k = first + l, seeded at the top of slit k
        for l in 0..lanes {
            wr[l] = centers[first + l - 1];
            wi[l] = height;
        }
        // staggered part: steps first+lanes-2 down to first, only for tips above them
        for j in (first..first + lanes - 1).rev() {
            let c = centers[j - 1];
            for l in (j - first + 1)..lanes {
                pull_back(&mut wr[l], &mut wi[l], c, four_dt);
            }
        }
        // common part: every lane passes through steps first-1 .. 1
        if lanes == LANES {
            for &c in centers[..first - 1].iter().rev() {
                for l in 0..LANES {
                    pull_back(&mut wr[l], &mut wi[l], c, four_dt);
                }
            }
        } else {
            for &c in centers[..first - 1].iter().rev() {
                for l in 0..lanes {
                    pull_back(&mut wr[l], &mut wi[l], c, four_dt);
                }
            }
        }
        for l in 0..lanes {
            points.push(Complex64::new(wr[l], wi[l]));
        }
        first += lanes;
    }

    TracePolyline {
        points,
        dt,
        kappa: chain.kappa(),
        seed: chain.seed(),
    }
}

/// Reference zipper: one tip at a time through [`super::step::inverse_step`].
pub fn trace_reference(chain: &LoewnerChain) -> TracePolyline {
    let centers = chain.centers();
    let dt = chain.dt();
    let mut points = vec![Complex64::new(0.0, 0.0)];
    for k in 1..=centers.len() {
        let mut w = Complex64::new(centers[k - 1], 2.0 * dt.sqrt());
        for &c in centers[..k - 1].iter().rev() {
            w = super::step::inverse_step(w, c, dt);
        }
        points.push(w);
    }
    TracePolyline {
        points,
        dt,
        kappa: chain.kappa(),
        seed: chain.seed(),
    }
}
