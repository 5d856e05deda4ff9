//! Discretised chordal Loewner flow: slit steps, composed maps, point
//! tracking, backward flow, and trace extraction.

pub mod chain;
pub mod step;
pub mod trace;

pub use chain::{
    backward_flow, backward_flow_with_derivative, build_chain, centered_inverse, forward_derivative,
    forward_map, inverse_map, log_derivative_slopes, track_point, FlowSample, LevelCrossing,
    LoewnerChain, MapOutcome, TrackOptions, TrackedPoint,
};
pub use step::{
    forward_level_time, forward_step, forward_step_with_derivative, inverse_level_time, inverse_step,
    inverse_step_with_derivative, StepOutcome,
};
pub use trace::{trace, trace_reference, TracePolyline};
