use clap::{Args, ValueEnum};
use num_complex::Complex64;
use slelab::formulas::*;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulaName {
    /// P[X ≥ s] for the Cardy-type variant (--s --kappa).
    Cardy,
    /// Trace and boundary dimension exponents (--kappa).
    Dim,
    /// Exponents a and λ (--b --kappa --nu).
    Exponents,
    /// F(ẑ) for the derivative moments (--x --y --b --kappa).
    Dermoment,
    /// Ĝ(z) (--x --y --a --kappa).
    Ghat,
    /// E[Z(z)^a] (--x --y --a --kappa).
    Zmoment,
    /// η₀ and η₁ (--a --kappa).
    Eta,
    /// Bessel exit probability through b before a (--x --a --b --kappa).
    Bessel,
    /// Scale function of the Bessel process (--x --kappa).
    BesselScale,
    /// Swallowing harmonic function h(z) (--x --y --kappa).
    SwallowHarmonic,
    /// ϑ(δ, s) (--delta --s).
    Vartheta,
    /// Tail bound shape for |f̂'_t| (--x --y --t --delta --b --kappa, optional --c).
    DerestBound,
    /// G(s) (--s).
    TransienceG,
}

#[derive(Debug, Args)]
pub struct FormulaArgs {
    pub name: FormulaName,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Sign of the time change, +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
}

fn need(v: Option<f64>, flag: &str, name: FormulaName) -> Result<f64, CliError> {
    v.ok_or_else(|| {
        let formula = name.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default();
        CliError::Usage(format!("formula {formula} needs --{flag}"))
    })
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// Evaluates the named formula as `(label, value)` pairs.
pub fn evaluate(args: &FormulaArgs) -> Result<Vec<(&'static str, String)>, CliError> {
    let n = args.name;
    let kappa = || need(args.kappa, "kappa", n);
    let z = || -> Result<Complex64, CliError> {
        Ok(Complex64::new(need(args.x, "x", n)?, need(args.y, "y", n)?))
    };
    let out = match n {
        FormulaName::Cardy => vec![("cardy_hit_prob", num(cardy_hit_prob(need(args.s, "s", n)?, kappa()?)?))],
        FormulaName::Dim => {
            let d = dim_exponents(kappa()?)?;
            vec![("trace", num(d.trace_exp)), ("boundary", num(d.boundary_exp))]
        }
        FormulaName::Exponents => {
            let nu = Nu::from_sign(args.nu.ok_or_else(|| CliError::Usage("formula exponents needs --nu".into()))?)?;
            let e = exponents(need(args.b, "b", n)?, kappa()?, nu);
            vec![("a", num(e.a)), ("lambda", num(e.lambda))]
        }
        FormulaName::Dermoment => vec![("F", num(derivative_moment_f(z()?, need(args.b, "b", n)?, kappa()?)?))],
        FormulaName::Ghat => vec![("g_hat", num(g_hat(z()?, need(args.a, "a", n)?, kappa()?)?))],
        FormulaName::Zmoment => {
            let v = match z_moment(z()?, need(args.a, "a", n)?, kappa()?)? {
                ZMoment::Finite(v) => num(v),
                ZMoment::Infinite => "infinite".into(),
                ZMoment::Zero => "zero".into(),
            };
            vec![("z_moment", v)]
        }
        FormulaName::Eta => {
            let (e0, e1) = eta_exponents(need(args.a, "a", n)?, kappa()?)?;
            vec![("eta0", num(e0)), ("eta1", num(e1))]
        }
        FormulaName::Bessel => {
            let p = bessel_exit_prob(need(args.x, "x", n)?, need(args.a, "a", n)?, need(args.b, "b", n)?, kappa()?)?;
            vec![("bessel_exit_prob", num(p))]
        }
        FormulaName::BesselScale => vec![("bessel_scale", num(bessel_scale(need(args.x, "x", n)?, kappa()?)))],
        FormulaName::SwallowHarmonic => vec![("h", num(swallow_harmonic(z()?, kappa()?)?))],
        FormulaName::Vartheta => vec![("vartheta", num(vartheta(need(args.delta, "delta", n)?, need(args.s, "s", n)?)))],
        FormulaName::DerestBound => {
            let v = derest_tail_bound(
                need(args.x, "x", n)?,
                need(args.y, "y", n)?,
                need(args.t, "t", n)?,
                need(args.delta, "delta", n)?,
                need(args.b, "b", n)?,
                kappa()?,
                args.c.unwrap_or(1.0),
            )?;
            vec![("bound", num(v))]
        }
        FormulaName::TransienceG => vec![("G", num(transience_g(need(args.s, "s", n)?)?))],
    };
    Ok(out)
}

pub fn run(args: &FormulaArgs) -> Result<(), CliError> {
    for (label, value) in evaluate(args)? {
        println!("{label} = {value}");
    }
    Ok(())
}
