//! Simulation and optimization toolkit for a wideband multi-user downlink
//! assisted by distributed reflecting surfaces.
//!
//! The transmitter is a large uniform linear array driven by a small number
//! of RF chains through an analog stage of phase shifters, optionally
//! augmented with one or two layers of true-time-delay lines so the analog
//! beam stays aligned across the whole band instead of squinting away from
//! the carrier direction. Each RF chain serves one reflecting surface over a
//! line-of-sight hop; the surfaces forward the signal to single-antenna
//! users through their own hops.
//!
//! The crate provides:
//!
//! - [`config`]: system-level parameters and the subcarrier grid;
//! - [`scenario`]: node placement, geometry-derived angles, and link-gain
//!   models;
//! - [`channel`]: array responses and per-subcarrier two-hop channels;
//! - [`ttd`]: delay/phase front-end models — ideal and quantized steering,
//!   closed-form and brute-force array gains, and control-bit budgets;
//! - [`wmmse`]: weighted-MMSE digital precoding under a total power
//!   constraint;
//! - [`ris`]: discrete reflection-phase search by exhaustive coordinate
//!   descent;
//! - [`solver`]: the end-to-end alternating optimizer plus hardware and
//!   complexity accounting.
//!
//! All randomness flows through explicit seeds and every loop runs in a
//! fixed order, so identical inputs produce bit-identical outputs.

pub mod channel;
pub mod config;
pub mod error;
pub mod ris;
pub mod scenario;
pub mod solver;
pub mod ttd;
pub mod wmmse;

pub use channel::{generate_channels, ChannelRows, ChannelSet};
pub use config::{dbm_to_watt, SystemConfig, SPEED_OF_LIGHT};
pub use error::{Error, Result};
pub use ris::{candidate_set, optimize_reflection, ReflectionConfig, ReflectionSearch};
pub use scenario::{GainModel, Scenario};
pub use solver::{
    complexity_report, hardware_report, joint_optimize, joint_optimize_with_channels,
    ComplexityReport, HardwareReport, SolveOptions, SolveResult,
};
pub use ttd::{
    build_analog_beamformer, gain_closed_form, required_bits, AnalogArchitecture,
    AnalogBeamformer, BitRequirement, DelayStep, SchemeKind,
};
pub use wmmse::{wmmse_solve, DigitalBeamformer, WmmseState};
