//! Link-level simulator for resonant beam communication (RBCom).
//!
//! A resonant beam oscillates between two retroreflectors, one at the
//! transmitter and one at the receiver, with a gain medium in front of each.
//! Information is carried by intensity-modulating the beam once per
//! reflection round. The crate is organised bottom-up:
//!
//! - [`physics`]: gain profile, saturable gain, diffraction loss, the
//!   steady-state operating point and round-trip timing.
//! - [`framing`]: symbol alphabet, SS/IS frames, SS detection and
//!   multiple-access frame planning.
//! - [`channel`]: the photodetector branch shared by both transceivers.
//! - [`scheme_direct`]: direct modulation with ratio demodulation, which
//!   cancels the echo carried over from the previous round.
//! - [`scheme_adaptive`]: pump-compensated modulation with energy detection.
//! - [`mobility`]: round-by-round Doppler accumulation and link lifetime.
//! - [`baselines`]: VLC / FOC / RBCom rate-vs-distance models.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channel;
pub mod framing;
pub mod mobility;
pub mod physics;
pub mod rng;
pub mod scheme_adaptive;
pub mod scheme_direct;
pub mod stats;

pub use physics::{CavityLink, GainMedium, PhysicsError, SteadyState, SPEED_OF_LIGHT};

use thiserror::Error;

/// Failure of an end-to-end simulation or sweep.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Framing(#[from] framing::FramingError),
    #[error(transparent)]
    Direct(#[from] scheme_direct::DirectError),
    #[error(transparent)]
    Adaptive(#[from] scheme_adaptive::AdaptiveError),
    #[error("invalid configuration: {0}")]
    Config(String),
}
