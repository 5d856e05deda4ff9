//! Numerical laboratory for chordal Schramm–Loewner evolution.
//!
//! Brownian driving functions are turned into discretised Loewner chains
//! (piecewise-constant driving, exact slit maps per step). On top of those
//! sit point tracking, the zipper trace, geometric estimators and a
//! reproducible Monte Carlo harness that compares simulations with the
//! closed forms in [`formulas`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod driving;
pub mod error;
pub mod formulas;
pub mod geometry;
pub mod loewner;
pub mod mc;
pub mod rng;
pub mod special_fn;

pub use driving::{sample_brownian, DrivingPath, Origin};
pub use error::{Result, SleError};
pub use loewner::{build_chain, LoewnerChain, TracePolyline, TrackedPoint};
