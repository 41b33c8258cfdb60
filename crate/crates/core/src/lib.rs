//! Feedback-driven, non-block network-coded broadcast over heterogeneous
//! packet erasure channels.
//!
//! The crate pairs a slot-level simulator of the online coding scheme with
//! the closed-form delivery-rate and delivery-delay model, and the tooling
//! to compare the two.

pub mod analysis;
pub mod coder;
pub mod compare;
pub mod gfield;
pub mod knowledge;
pub mod report;
pub mod scenario;
pub mod simulator;

pub use analysis::{analyze, AnalyticReport};
pub use compare::{run_compare, CompareReport, Mode, Thresholds};
pub use scenario::load_scenario;
pub use simulator::{run, RunReport, ScenarioConfig};
