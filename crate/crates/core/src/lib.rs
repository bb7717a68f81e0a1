//! Phase decomposition for light-pulse atom interferometers with
//! instantaneous pulses, and the interference of a two-state quantum clock
//! sent through them.
//!
//! ```
//! use twinphase::{build_rbi_asymmetric, proper_time_difference, Species};
//!
//! let seq = build_rbi_asymmetric(1.8e10, 0.325, 0.1).unwrap();
//! let dt = proper_time_difference(&seq, &Species::sr87()).unwrap();
//! assert!(dt < 0.0);
//! ```

pub mod clock;
pub mod constants;
pub mod dd;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod kinematics;
pub mod oracle;
pub mod phase;
pub mod physics;
pub mod scan;
pub mod sum;

pub use clock::{beat, clock_limit_phase, fringe, fringe_state, per_state_phase, visibility_node, visibility_scan, BeatSignal, ClockLimit};
pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{
    build_mzi, build_rbi_asymmetric, build_rbi_double_loop, build_rbi_symmetric, closure_check, parse_geometry,
    require_closed, serialize_geometry, ClosureReport, GeometryKind, GeometrySpec, ParseError, ParseErrorKind,
};
pub use oracle::{OracleConfig, OracleResult, PulseShape};
pub use phase::{gravito_recoil_phase, laser_phase, proper_time_difference, recoil_double_sum, total_phase};
pub use physics::{
    compton_frequency, Branch, ClockPair, ClockState, GravityEnv, InitialConditions, PhaseBreakdown, Pulse,
    PulseSequence, Species,
};
