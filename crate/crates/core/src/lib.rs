//! Simulation and verification library for a massive MISO block-fading link
//! with noiseless output feedback.
//!
//! The crate simulates the channel (`channel`), runs the sequential MMSE
//! estimator and feedback encoders (`estimator`), implements the per-block
//! training/beamforming scheme (`scheme`), evaluates every closed-form
//! capacity bound and the water-filling ideal-CSI capacity (`bounds`), and
//! verifies the moment-bound machinery behind those results by reproducible
//! Monte Carlo (`montecarlo`).

pub mod bounds;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod numerics;
pub mod scheme;

pub use bounds::{BoundReport, GainCurve, RateLowerBound, WaterfillSolution};
pub use channel::{BlockState, ChannelConfig, PowerConstraint};
pub use error::{Error, Result};
pub use estimator::{EncoderKind, FeedbackEncoder, GaussPrior, MmseState};
pub use montecarlo::{GainSweep, GainSweepRow, LemmaCheckResult, McEstimate};
pub use numerics::{Complex64, ComplexMat, ComplexVec, HermitianMat, RngStream};
pub use scheme::{SchemeConfig, SchemeTrace};

/// Default master seed used by the CLI when none is given.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;
