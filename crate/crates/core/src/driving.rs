//! Sampled driving functions `ξ(t) = √κ B_t` on uniform grids.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SleError};
use crate::rng::{rng_from_seed, standard_normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Brownian,
    Deterministic,
    Derived,
}

/// Driving values `ξ(0), ξ(dt), …, ξ(n·dt)` with `ξ(0) = 0`.
///
/// Restarts are taken relative to the root samples the path was cut from, so
/// restarting twice is sample-for-sample identical to restarting once.
#[derive(Debug, Clone)]
pub struct DrivingPath {
    kappa: f64,
    dt: f64,
    seed: u64,
    origin: Origin,
    values: Vec<f64>,
    root: Arc<Vec<f64>>,
    offset: usize,
}

impl PartialEq for DrivingPath {
    fn eq(&self, other: &Self) -> bool {
        self.kappa.to_bits() == other.kappa.to_bits()
            && self.dt.to_bits() == other.dt.to_bits()
            && self.seed == other.seed
            && self.origin == other.origin
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(SleError::invalid("kappa", "must be finite and >= 0"));
    }
    Ok(())
}

impl DrivingPath {
    /// Wraps explicit samples. `values[0]` must be zero.
    pub fn from_values(kappa: f64, dt: f64, values: Vec<f64>, origin: Origin) -> Result<Self> {
        check_kappa(kappa)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SleError::invalid("dt", "must be positive"));
        }
        match values.first() {
            None => return Err(SleError::invalid("values", "path must have at least one sample")),
            Some(&v0) if v0 != 0.0 => {
                return Err(SleError::invalid("values", format!("xi(0) must be 0, got {v0}")))
            }
            _ => {}
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SleError::invalid("values", "samples must be finite"));
        }
        let root = Arc::new(values.clone());
        Ok(Self {
            kappa,
            dt,
            seed: 0,
            origin,
            values,
            root,
            offset: 0,
        })
    }

    /// All-zero path (the deterministic vertical slit).
    pub fn zero(n_steps: usize, dt: f64) -> Result<Self> {
        Self::from_values(0.0, dt, vec![0.0; n_steps + 1], Origin::Deterministic)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn origin(&self) -> Origin {
        self.origin
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }
    pub fn horizon(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Returns the path restarted at step `k0`: `ξ(t + k0·dt) − ξ(k0·dt)`.
    pub fn restart(&self, k0: usize) -> Result<Self> {
        if k0 >= self.len() {
            return Err(SleError::IndexOutOfRange {
                index: k0,
                len: self.len(),
            });
        }
        if k0 == 0 {
            return Ok(self.clone());
        }
        let offset = self.offset + k0;
        let anchor = self.root[offset];
        let values = self.root[offset..offset + self.len() - k0]
            .iter()
            .map(|v| v - anchor)
            .collect();
        Ok(Self {
            kappa: self.kappa,
            dt: self.dt,
            seed: self.seed,
            origin: Origin::Derived,
            values,
            root: Arc::clone(&self.root),
            offset,
        })
    }

    /// Brownian scaling `ξ̃(t) = α^{-1/2} ξ(αt)` on the grid `dt/α`.
    ///
    /// `alpha` must be an integer power of two so the new grid is exact in
    /// floating point; sample `k` of the result is sample `k` of the input.
    pub fn rescale(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(SleError::invalid("alpha", "must be positive"));
        }
        let log2 = alpha.log2();
        if log2 != log2.round() {
            return Err(SleError::invalid(
                "alpha",
                format!("{alpha} is not a power of two; the rescaled grid would not be exact"),
            ));
        }
        if alpha == 1.0 {
            return Ok(self.clone());
        }
        let factor = alpha.sqrt().recip();
        let values: Vec<f64> = self.values.iter().map(|v| v * factor).collect();
        let mut out = Self::from_values(self.kappa, self.dt / alpha, values, Origin::Derived)?;
        out.seed = self.seed;
        Ok(out)
    }

    /// Increments `ξ(t_k) − ξ(t_{k−1})` for `k = 1..=n`.
    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Writes `t,xi` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| SleError::Io(e.to_string());
        w.write_record(["t", "xi"]).map_err(csv_err)?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([format!("{:.16e}", self.time(k)), format!("{v:.16e}")])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `t,xi` CSV on a uniform grid.
    pub fn read_csv<R: Read>(input: R, kappa: f64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers().map_err(|e| SleError::Parse(e.to_string()))?;
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "xi" {
            return Err(SleError::Parse("expected header `t,xi`".into()));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| SleError::Parse(e.to_string()))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| SleError::Parse(format!("`{s}`: {e}")))
            };
            times.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        if times.len() < 2 {
            return Err(SleError::Parse("need at least two rows to infer dt".into()));
        }
        let dt = times[1] - times[0];
        for (k, t) in times.iter().enumerate() {
            if (t - k as f64 * dt).abs() > 1e-9 * (1.0 + t.abs()) {
                return Err(SleError::Parse(format!("row {k}: time grid is not uniform")));
            }
        }
        Self::from_values(kappa, dt, values, Origin::Deterministic)
    }
}

/// Samples `ξ = √κ B` on `n_steps` uniform steps over `[0, horizon]`.
pub fn sample_brownian(kappa: f64, horizon: f64, n_steps: usize, seed: u64) -> Result<DrivingPath> {
    check_kappa(kappa)?;
    if n_steps == 0 {
        return Err(SleError::invalid("n_steps", "must be at least 1"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(SleError::invalid("horizon", "must be positive"));
    }
    let dt = horizon / n_steps as f64;
    let sd = (kappa * dt).sqrt();
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut x = 0.0;
    values.push(x);
    for _ in 0..n_steps {
        x += sd * standard_normal(&mut rng);
        values.push(x);
    }
    let mut path = DrivingPath::from_values(kappa, dt, values, Origin::Brownian)?;
    path.seed = seed;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kappa_gives_zero_path() {
        let p = sample_brownian(0.0, 1.0, 50, 3).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
        assert_eq!(p.len(), 51);
        assert_eq!(p.dt(), 1.0 / 50.0);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = sample_brownian(2.0, 1.0, 100, 11).unwrap();
        let b = sample_brownian(2.0, 1.0, 100, 11).unwrap();
        let c = sample_brownian(2.0, 1.0, 100, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn single_step_variance_over_seeds() {
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|s| sample_brownian(2.0, 1.0, 1, s).unwrap().values()[1])
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        // stderr of the sample variance for a Gaussian: sigma^2 * sqrt(2/(n-1))
        let se = 2.0 * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - 2.0).abs() < 4.0 * se, "var={var}");
    }

    #[test]
    fn parameter_validation() {
        assert!(sample_brownian(-1.0, 1.0, 10, 0).is_err());
        assert!(sample_brownian(1.0, 0.0, 10, 0).is_err());
        assert!(sample_brownian(1.0, 1.0, 0, 0).is_err());
        assert!(DrivingPath::from_values(1.0, 0.1, vec![0.5, 1.0], Origin::Deterministic).is_err());
        assert!(DrivingPath::from_values(1.0, 0.1, vec![], Origin::Deterministic).is_err());
    }

    #[test]
    fn restart_edges_and_composition() {
        let p = sample_brownian(3.0, 1.0, 40, 5).unwrap();
        assert_eq!(p.restart(0).unwrap(), p);
        let last = p.restart(40).unwrap();
        assert_eq!(last.values(), &[0.0]);
        assert!(p.restart(41).is_err());
        for (a, b) in [(3usize, 10usize), (0, 7), (20, 20), (1, 0)] {
            let twice = p.restart(a).unwrap().restart(b).unwrap();
            let once = p.restart(a + b).unwrap();
            assert_eq!(twice.values(), once.values());
            assert_eq!(twice.values()[0], 0.0);
        }
    }

    #[test]
    fn rescale_rules() {
        let p = sample_brownian(3.0, 1.0, 16, 5).unwrap();
        assert_eq!(p.rescale(1.0).unwrap(), p);
        let z = DrivingPath::zero(8, 0.5).unwrap().rescale(4.0).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        assert_eq!(z.dt(), 0.125);
        assert!(p.rescale(3.0).is_err());
        assert!(p.rescale(-2.0).is_err());
        let half = p.rescale(0.5).unwrap();
        assert_eq!(half.dt(), 2.0 / 16.0);
        assert_eq!(half.values()[0], 0.0);
    }

    #[test]
    fn increment_variance_survives_transforms() {
        // pooled over seeds: rescaled and restarted paths keep variance kappa*dt
        let kappa = 2.0;
        let mut rescaled = Vec::new();
        let mut restarted = Vec::new();
        for s in 0..2000 {
            let p = sample_brownian(kappa, 1.0, 64, s).unwrap();
            let r = p.rescale(4.0).unwrap();
            rescaled.extend(r.increments().map(|d| d * d / r.dt()));
            let q = p.restart(17).unwrap();
            restarted.extend(q.increments().map(|d| d * d / q.dt()));
        }
        for xs in [&rescaled, &restarted] {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!((mean - kappa).abs() < 4.0 * se, "mean={mean} se={se}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let p = sample_brownian(2.0, 1.0, 20, 1).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,xi\n"));
        let q = DrivingPath::read_csv(&buf[..], 2.0).unwrap();
        assert_eq!(q.values(), p.values());
        assert!((q.dt() - p.dt()).abs() < 1e-15);
        assert!(DrivingPath::read_csv("a,b\n0,0\n".as_bytes(), 1.0).is_err());
    }
}
