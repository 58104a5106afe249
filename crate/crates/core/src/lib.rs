//! Deterministic 2-D bi-static sensing simulator with extended-ARQ feedback.
//!
//! A Tx gNB illuminates a moving target, an Rx gNB measures the echo and
//! reports one of four feedback levels (ACK, NACK, LOST, NOT_FOUND). The Tx/Rx
//! pair then holds, sweeps or widens its beams and escalates power.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod detector;
pub mod error;
pub mod geometry;
pub mod link;
pub mod montecarlo;
pub mod protocol;
pub mod scenario;
pub mod sim;

pub use array::{array_gain, beamwidth_3db, make_codebook, ArrayConfig, Beam, Codebook};
pub use detector::{classify, decide_feedback, update_memory, Feedback, Outcome, SensingMemory, Thresholds};
pub use error::{Error, Result};
pub use geometry::{los_clear, mirror_across, reflected_path, segments_intersect, Obstacle, ReflectedPath, Segment, Vec2, Wall};
pub use link::{bistatic_echo_power, noise_power, resi, ue_snr, LinkParams, PathInfo, PathKind};
pub use montecarlo::{run_montecarlo, run_montecarlo_with_threads, sample_trajectory, StatsTable};
pub use protocol::{beam_sweep, react, terminated, NodeConfig, PowerSchedule, ProtocolLimits, ProtocolState, TerminationReason};
pub use scenario::Scenario;
pub use sim::{best_physical_path, run_scenario, Simulator, StepRecord, Trace};
