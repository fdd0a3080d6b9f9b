//! Exact optimization toolkit for the (multi-depot) dial-a-ride problem with
//! limited pickups per trip.
//!
//! The pipeline is: parse a benchmark instance ([`instance`]), tighten time
//! windows and eliminate arcs ([`preprocess`]), enumerate route fragments
//! ([`fragment`]), assemble the fragment network ([`network`]), build one of
//! four MILP formulations ([`formulations`]) and solve it over a pluggable
//! integer-programming backend with lazy infeasible-path cuts ([`milp`]).
//! A brute-force exact solver for tiny instances lives in [`oracle`] and is
//! used throughout the test suite as ground truth.

pub mod customers;
pub mod formulations;
pub mod fragment;
pub mod instance;
pub mod milp;
pub mod network;
pub mod oracle;
pub mod preprocess;
pub mod run;
pub mod scheduling;

pub use customers::CustomerSet;
pub use instance::{Instance, Location, MdarpConfig};
pub use scheduling::{check_schedule, route_cost, RoutePath, Schedule};

/// Tolerance for equality comparisons on times and costs.
pub const TIME_EPS: f64 = 1e-6;

/// Tolerance when deciding whether an incumbent variable value is integral.
pub const INTEGRALITY_EPS: f64 = 1e-5;
