//! Block-fading MISO channel with noiseless unit-delay output feedback.
//!
//! The fading vector stays fixed for one coherence block of `T_c` uses and is
//! redrawn independently at every block boundary. Each use maps an input
//! vector `x` to the scalar output `y = h^T x + z` with fresh unit-variance
//! complex Gaussian noise. Causality is enforced structurally: encoders only
//! ever see fed-back outputs, never the fading vector itself.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sample_cn, sample_cn_scalar, Complex64, ComplexVec};

/// Which moment of the input the power budget constrains.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerConstraint {
    /// Time-averaged E||x||^2 <= P.
    SecondMoment,
    /// Time-averaged E||x||^4 <= kappa^2 P^2.
    FourthMoment,
}

/// Static scenario parameters.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub antennas_m: usize,
    pub coherence_tc: usize,
    pub power_p: f64,
    pub constraint: PowerConstraint,
    /// Fourth-moment budget scale; ignored for second-moment runs.
    pub kappa: f64,
}

impl ChannelConfig {
    pub fn new(
        antennas_m: usize,
        coherence_tc: usize,
        power_p: f64,
        constraint: PowerConstraint,
        kappa: f64,
    ) -> Result<Self> {
        if antennas_m < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 antennas, got {antennas_m}"
            )));
        }
        if coherence_tc < 1 {
            return Err(Error::InvalidInput("coherence length must be >= 1".into()));
        }
        if !power_p.is_finite() || power_p <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "power must be positive and finite, got {power_p}"
            )));
        }
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "kappa must be positive and finite, got {kappa}"
            )));
        }
        Ok(Self {
            antennas_m,
            coherence_tc,
            power_p,
            constraint,
            kappa,
        })
    }

    /// Convenience constructor for second-moment runs (kappa unused).
    pub fn second_moment(antennas_m: usize, coherence_tc: usize, power_p: f64) -> Result<Self> {
        Self::new(
            antennas_m,
            coherence_tc,
            power_p,
            PowerConstraint::SecondMoment,
            1.0,
        )
    }

    /// Coherence scaling exponent `log T_c / log M`.
    pub fn alpha(&self) -> f64 {
        (self.coherence_tc as f64).ln() / (self.antennas_m as f64).ln()
    }

    /// Per-use transmit power of the training/beamforming scheme:
    /// `P` under the second-moment budget, `kappa P / sqrt(3)` under the
    /// fourth-moment budget.
    pub fn effective_power(&self) -> f64 {
        match self.constraint {
            PowerConstraint::SecondMoment => self.power_p,
            PowerConstraint::FourthMoment => self.kappa * self.power_p / 3f64.sqrt(),
        }
    }
}

/// One coherence block in flight.
#[derive(Clone, Debug)]
pub struct BlockState {
    h: ComplexVec,
    coherence_tc: usize,
    t_in_block: usize,
}

/// Draws a fresh block: `h ~ CN(0, I_M)`, use counter reset.
pub fn new_block(cfg: &ChannelConfig, rng: &mut impl Rng) -> BlockState {
    let h = sample_cn(cfg.antennas_m, rng).expect("config guarantees M >= 2");
    BlockState {
        h,
        coherence_tc: cfg.coherence_tc,
        t_in_block: 0,
    }
}

impl BlockState {
    /// Test hook: start a block on a fixed fading vector.
    pub fn with_channel(h: ComplexVec, coherence_tc: usize) -> Self {
        Self {
            h,
            coherence_tc,
            t_in_block: 0,
        }
    }

    pub fn t_in_block(&self) -> usize {
        self.t_in_block
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    // Crate-private on purpose: estimator diagnostics and test oracles may
    // inspect the realized fading vector, encoders never can.
    pub(crate) fn channel_for_diagnostics(&self) -> ComplexVec {
        self.h.clone()
    }

    /// One channel use: `y = h^T x + z`, `z ~ CN(0, 1)`.
    pub fn transmit(&mut self, x: &ComplexVec, rng: &mut impl Rng) -> Result<Complex64> {
        let z = sample_cn_scalar(rng);
        self.transmit_with_noise(x, z)
    }

    /// Test hook: one channel use with caller-chosen noise.
    pub fn transmit_with_noise(&mut self, x: &ComplexVec, z: Complex64) -> Result<Complex64> {
        if x.dim() != self.h.dim() {
            return Err(Error::InvalidInput(format!(
                "input dim {} does not match {} antennas",
                x.dim(),
                self.h.dim()
            )));
        }
        if self.t_in_block >= self.coherence_tc {
            return Err(Error::BlockExhausted {
                used: self.t_in_block,
                coherence_tc: self.coherence_tc,
            });
        }
        self.t_in_block += 1;
        Ok(self.h.dot_t(x) + z)
    }
}

/// The feedback link: noiseless, unit delay. The identity is the whole
/// point -- calling it marks the spot where a value crosses from receiver to
/// transmitter, so the causality boundary is visible in the code.
#[inline]
pub fn feedback(y: Complex64) -> Complex64 {
    y
}
