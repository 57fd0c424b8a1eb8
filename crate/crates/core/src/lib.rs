//! Distributed reservoir forward models for a simulated hexapod.
//!
//! Each leg owns a small leaky-tanh reservoir that receives the efference copy
//! of its CTr-joint motor command and learns, with recursive least squares, to
//! predict the foot-contact signal the leg should feel on flat ground. During
//! locomotion the mismatch between predicted and actual contact drives
//! searching and elevation reflexes and a backbone-joint state machine.
//!
//! Module map:
//!
//! * [`reservoir`] leaky reservoir dynamics, intrinsic plasticity, time-constant search
//! * [`rls`] online readout learning and the batch ridge reference solver
//! * [`cpg`] two-neuron oscillator, post-processing, delay lines, gait table
//! * [`plant`] 1-D kinematic walker on segmented terrain
//! * [`control`] forward-model bank, error accumulators, backbone joint, baseline model
//! * [`harness`] training protocol, scenarios, sweeps, config and file outputs

pub mod control;
pub mod cpg;
mod error;
pub mod harness;
mod ids;
pub mod plant;
pub mod reservoir;
pub mod rls;

pub use error::{Error, Result};
pub use ids::{GaitId, LegId, Phase};

/// Duration of one simulation tick in seconds (≈ 27 Hz update rate).
pub const TICK_SECONDS: f64 = 0.037;
