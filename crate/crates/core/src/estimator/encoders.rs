//! Feedback encoders: maps from (own message randomness, fed-back outputs)
//! to the next input vector.
//!
//! The estimator's covariance bounds hold for *any* such map, including
//! nonlinear adaptive ones, so the verification suites run each check against
//! three qualitatively different built-ins: plain pilots, conjugate
//! beamforming on the transmitter's own running estimate, and a seeded
//! nonlinear mixer of past outputs. A zero encoder is included as the trivial
//! edge case.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::numerics::{sample_cn, Complex64, ComplexVec};

use super::MmseState;

/// Anything that can drive the downlink through the feedback loop.
///
/// Causality is structural: `next_input` runs before the output it will
/// cause exists, and `observe` delivers that output with unit delay.
pub trait FeedbackEncoder {
    /// Reset at a block boundary.
    fn begin_block(&mut self);
    /// Input vector for the current channel use.
    fn next_input(&mut self) -> ComplexVec;
    /// Unit-delay feedback of the output caused by the last input.
    fn observe(&mut self, y: Complex64);
}

/// The built-in encoder families.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    /// Round-robin pilots `sqrt(P) e_t`.
    Pilot,
    /// Conjugate beam along the transmitter's own running estimate,
    /// falling back to a pilot while the estimate is zero.
    ConjugateBeam,
    /// Seeded nonlinear mixing of fresh randomness with the last output.
    RandomMix,
    /// Always transmits the zero vector.
    Zero,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 3] = [
        EncoderKind::Pilot,
        EncoderKind::ConjugateBeam,
        EncoderKind::RandomMix,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EncoderKind::Pilot => "pilot",
            EncoderKind::ConjugateBeam => "conjugate-beam",
            EncoderKind::RandomMix => "random-mix",
            EncoderKind::Zero => "zero",
        }
    }

    /// Builds a per-trial encoder instance. The trial rng seeds any message
    /// randomness the encoder owns, so trials stay independent and
    /// reproducible.
    pub fn build(&self, cfg: &ChannelConfig, trial_rng: &mut impl Rng) -> BuiltEncoder {
        let m = cfg.antennas_m;
        let power = cfg.power_p;
        match self {
            EncoderKind::Pilot => BuiltEncoder::Pilot(PilotEncoder::new(m, power)),
            EncoderKind::ConjugateBeam => {
                BuiltEncoder::ConjugateBeam(ConjugateBeamEncoder::new(m, power))
            }
            EncoderKind::RandomMix => {
                BuiltEncoder::RandomMix(RandomMixEncoder::new(m, power, trial_rng.gen::<u64>()))
            }
            EncoderKind::Zero => BuiltEncoder::Zero(ZeroEncoder { m }),
        }
    }
}

/// Enum dispatch so trial loops stay monomorphic.
pub enum BuiltEncoder {
    Pilot(PilotEncoder),
    ConjugateBeam(ConjugateBeamEncoder),
    RandomMix(RandomMixEncoder),
    Zero(ZeroEncoder),
}

impl FeedbackEncoder for BuiltEncoder {
    fn begin_block(&mut self) {
        match self {
            BuiltEncoder::Pilot(e) => e.begin_block(),
            BuiltEncoder::ConjugateBeam(e) => e.begin_block(),
            BuiltEncoder::RandomMix(e) => e.begin_block(),
            BuiltEncoder::Zero(e) => e.begin_block(),
        }
    }

    fn next_input(&mut self) -> ComplexVec {
        match self {
            BuiltEncoder::Pilot(e) => e.next_input(),
            BuiltEncoder::ConjugateBeam(e) => e.next_input(),
            BuiltEncoder::RandomMix(e) => e.next_input(),
            BuiltEncoder::Zero(e) => e.next_input(),
        }
    }

    fn observe(&mut self, y: Complex64) {
        match self {
            BuiltEncoder::Pilot(e) => e.observe(y),
            BuiltEncoder::ConjugateBeam(e) => e.observe(y),
            BuiltEncoder::RandomMix(e) => e.observe(y),
            BuiltEncoder::Zero(e) => e.observe(y),
        }
    }
}

pub struct PilotEncoder {
    m: usize,
    amp: f64,
    t: usize,
}

impl PilotEncoder {
    pub fn new(m: usize, power: f64) -> Self {
        Self {
            m,
            amp: power.sqrt(),
            t: 0,
        }
    }
}

impl FeedbackEncoder for PilotEncoder {
    fn begin_block(&mut self) {
        self.t = 0;
    }

    fn next_input(&mut self) -> ComplexVec {
        let idx = self.t % self.m;
        self.t += 1;
        ComplexVec::scaled_unit(self.m, idx, self.amp).expect("idx < m")
    }

    fn observe(&mut self, _y: Complex64) {}
}

/// Transmits `sqrt(P) conj(hhat)/||hhat||`, tracking its own estimate from
/// the fed-back outputs; a pilot seeds the loop while the estimate is zero.
pub struct ConjugateBeamEncoder {
    m: usize,
    amp: f64,
    state: MmseState,
    last_x: Option<ComplexVec>,
    t: usize,
}

impl ConjugateBeamEncoder {
    pub fn new(m: usize, power: f64) -> Self {
        Self {
            m,
            amp: power.sqrt(),
            state: MmseState::reset(m).expect("m >= 1"),
            last_x: None,
            t: 0,
        }
    }
}

impl FeedbackEncoder for ConjugateBeamEncoder {
    fn begin_block(&mut self) {
        self.state = MmseState::reset(self.m).expect("m >= 1");
        self.last_x = None;
        self.t = 0;
    }

    fn next_input(&mut self) -> ComplexVec {
        let norm = self.state.h_hat().norm();
        let x = if norm > 1e-300 {
            self.state
                .h_hat()
                .conj()
                .scaled(Complex64::new(self.amp / norm, 0.0))
        } else {
            ComplexVec::scaled_unit(self.m, self.t % self.m, self.amp).expect("idx < m")
        };
        self.t += 1;
        self.last_x = Some(x.clone());
        x
    }

    fn observe(&mut self, y: Complex64) {
        let x = self.last_x.take().expect("observe follows next_input");
        self.state
            .update(&x, y)
            .expect("encoder-side estimate update");
    }
}

/// Nonlinear feedback mixer: a fresh random direction warped by a bounded
/// function of the last output, normalized to power P per use.
pub struct RandomMixEncoder {
    m: usize,
    amp: f64,
    rng: ChaCha8Rng,
    last_y: Complex64,
}

impl RandomMixEncoder {
    pub fn new(m: usize, power: f64, message_seed: u64) -> Self {
        Self {
            m,
            amp: power.sqrt(),
            rng: ChaCha8Rng::seed_from_u64(message_seed),
            last_y: Complex64::new(0.0, 0.0),
        }
    }
}

impl FeedbackEncoder for RandomMixEncoder {
    fn begin_block(&mut self) {
        self.last_y = Complex64::new(0.0, 0.0);
    }

    fn next_input(&mut self) -> ComplexVec {
        let fresh = sample_cn(self.m, &mut self.rng).expect("m >= 1");
        let twist = sample_cn(self.m, &mut self.rng).expect("m >= 1");
        // bounded nonlinear function of the fed-back output
        let gain = self.last_y / (1.0 + self.last_y.norm());
        let mut dir = fresh;
        dir.add_scaled(&twist, gain);
        let norm = dir.norm();
        if norm > 1e-300 {
            dir.scaled(Complex64::new(self.amp / norm, 0.0))
        } else {
            ComplexVec::scaled_unit(self.m, 0, self.amp).expect("m >= 1")
        }
    }

    fn observe(&mut self, y: Complex64) {
        self.last_y = y;
    }
}

pub struct ZeroEncoder {
    m: usize,
}

impl FeedbackEncoder for ZeroEncoder {
    fn begin_block(&mut self) {}

    fn next_input(&mut self) -> ComplexVec {
        ComplexVec::zeros(self.m)
    }

    fn observe(&mut self, _y: Complex64) {}
}
