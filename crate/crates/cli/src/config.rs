use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};
use slelab::mc::ExperimentConfig;

use crate::{io_error, CliError};

pub const SCHEMA: u32 = 1;

/// Experiment-specific parameters. Each experiment reads the fields it
/// needs and falls back to its own defaults for the rest.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Cardy: comma-separated s values.
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    /// Real part of the tracked point; Bessel: starting point.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// Imaginary part of the tracked point.
    #[arg(long)]
    pub y: Option<f64>,
    /// Z moment exponent; Bessel: lower barrier.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Derivative exponent b; Bessel: upper barrier.
    #[arg(long)]
    pub b: Option<f64>,
    /// Swallowing: comma-separated times.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Tail experiment: flow time.
    #[arg(long)]
    pub t: Option<f64>,
    /// Z moment: comma-separated stopping levels of Im g.
    #[arg(long, value_delimiter = ',')]
    pub stop_levels: Option<Vec<f64>>,
    /// Trace dimension: comma-separated box sizes.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Trace dimension window x0,x1,y0,y1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    /// Boundary dimension: comma-separated levels n (squares of size 2^-n).
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<i32>>,
    /// Boundary dimension: minimal height reached by counted squares.
    #[arg(long)]
    pub h: Option<f64>,
    /// Boundary dimension region x0,x1,y0,y1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub region: Option<Vec<f64>>,
    /// Transience: comma-separated checkpoints.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<f64>>,
    /// Transience: run at κ = 8 anyway.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub allow_kappa8: bool,
    /// Tail experiment: comma-separated δ values.
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    /// Acceptance: allowed number of standard errors.
    #[arg(long)]
    pub z_bound: Option<f64>,
    /// Acceptance: absolute slack added to the z bound.
    #[arg(long)]
    pub abs_slack: Option<f64>,
    /// Acceptance: slack relative to the target.
    #[arg(long)]
    pub rel_slack: Option<f64>,
}

impl Params {
    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: Params) -> Params {
        macro_rules! pick {
            ($($f:ident),*) => { Params { $($f: top.$f.or(self.$f),)* allow_kappa8: top.allow_kappa8 || self.allow_kappa8 } };
        }
        pick!(s, x, y, a, b, times, t, stop_levels, eps, window, levels, h, region, checkpoints, delta, z_bound, abs_slack, rel_slack)
    }
}

/// On-disk experiment configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    #[serde(default)]
    pub run: ExperimentConfig,
    #[serde(default)]
    pub params: Params,
}

pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
    if file.schema != SCHEMA {
        return Err(CliError::Usage(format!(
            "config: unsupported schema {} (expected {SCHEMA})",
            file.schema
        )));
    }
    Ok(file)
}

pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_schema_one_and_rejects_unknown_keys() {
        let f = parse(r#"{"schema": 1, "run": {"kappa": 6.0, "n_runs": 10}, "params": {"s": [2.0]}}"#).unwrap();
        assert_eq!(f.run.kappa, 6.0);
        assert_eq!(f.run.n_runs, 10);
        assert_eq!(f.params.s, Some(vec![2.0]));
        assert!(parse(r#"{"schema": 2}"#).is_err());
        assert!(parse(r#"{"schema": 1, "run": {"c_hti": 2.0}}"#).is_err());
        assert!(parse(r#"{"schema": 1, "params": {"sigma": 2.0}}"#).is_err());
        assert!(parse(r#"{"schema": 1, "extra": 0}"#).is_err());
        assert!(parse(r#"{"run": {}}"#).is_err());
    }

    #[test]
    fn overlay_prefers_the_top_layer() {
        let base = Params { x: Some(1.0), y: Some(2.0), ..Params::default() };
        let top = Params { y: Some(3.0), allow_kappa8: true, ..Params::default() };
        let p = base.overlay(top);
        assert_eq!((p.x, p.y, p.allow_kappa8), (Some(1.0), Some(3.0), true));
    }
}
