//! Per-block training and conjugate-beamforming scheme.
//!
//! Each coherence block spends `T_tau` uses sounding one antenna at a time
//! with pilots `sqrt(P) e_t`, the receiver forms the scalar MMSE estimate of
//! the sounded coefficients, feeds the outputs back, and the remaining
//! `T_c - T_tau` uses carry Gaussian data symbols beamformed along the
//! conjugate of the estimate. Only the first `T_tau` antennas are ever
//! excited; the rest transmit zero.

use rand::Rng;

use crate::channel::{feedback, new_block, ChannelConfig};
use crate::error::{Error, Result};
use crate::numerics::{sample_cn_scalar, Complex64, ComplexVec};

/// Training length: `ceil(min(M, T_c) / log2(max(4, min(M, T_c))))`.
/// Logs are base 2 throughout the crate.
pub fn training_length(m: usize, tc: usize) -> Result<usize> {
    if m < 2 || tc < 2 {
        return Err(Error::DegenerateConfig(format!(
            "training needs M >= 2 and T_c >= 2, got M={m}, T_c={tc}"
        )));
    }
    let q = m.min(tc) as f64;
    let t_train = (q / q.max(4.0).log2()).ceil() as usize;
    if t_train >= tc {
        return Err(Error::DegenerateConfig(format!(
            "training length {t_train} leaves no data phase in T_c={tc}"
        )));
    }
    Ok(t_train)
}

/// Scheme parameters for one scenario.
#[derive(Clone, Debug)]
pub struct SchemeConfig {
    pub channel: ChannelConfig,
    pub t_train: usize,
    /// Per-use transmit power: `P` under the second-moment budget,
    /// `kappa P / sqrt(3)` under the fourth-moment budget.
    pub effective_power: f64,
}

impl SchemeConfig {
    /// Derives the training split and per-use power from the channel budget.
    pub fn from_channel(channel: ChannelConfig) -> Result<Self> {
        let t_train = training_length(channel.antennas_m, channel.coherence_tc)?;
        let effective_power = channel.effective_power();
        Self::new(channel, t_train, effective_power)
    }

    pub fn new(channel: ChannelConfig, t_train: usize, effective_power: f64) -> Result<Self> {
        if t_train < 1 || t_train >= channel.coherence_tc {
            return Err(Error::DegenerateConfig(format!(
                "t_train={t_train} must satisfy 1 <= t_train < T_c={}",
                channel.coherence_tc
            )));
        }
        if t_train > channel.antennas_m {
            return Err(Error::DegenerateConfig(format!(
                "t_train={t_train} exceeds M={}",
                channel.antennas_m
            )));
        }
        if effective_power.is_nan() || effective_power <= 0.0 {
            return Err(Error::InvalidInput("effective power must be > 0".into()));
        }
        Ok(Self {
            channel,
            t_train,
            effective_power,
        })
    }

    pub fn data_len(&self) -> usize {
        self.channel.coherence_tc - self.t_train
    }

    /// sigma^2 = 1/(P+1): variance of the residual interference direction.
    pub fn sigma_sq(&self) -> f64 {
        1.0 / (self.effective_power + 1.0)
    }

    /// The per-block rate proxy `(T_c - T_tau)/T_c * log2(1 + P g /
    /// (P sigma^2 + 1))` evaluated at an estimate energy `g`.
    pub fn rate_proxy_bits(&self, g: f64) -> f64 {
        let p = self.effective_power;
        let frac = self.data_len() as f64 / self.channel.coherence_tc as f64;
        frac * (1.0 + p * g / (p * self.sigma_sq() + 1.0)).log2()
    }
}

/// Pilot for training slot `t` (1-based): `sqrt(power) e_t`.
pub fn pilot(t: usize, power: f64, m: usize) -> Result<ComplexVec> {
    if t < 1 || t > m {
        return Err(Error::InvalidInput(format!(
            "pilot slot {t} out of range 1..={m}"
        )));
    }
    ComplexVec::scaled_unit(m, t - 1, power.sqrt())
}

/// Scalar MMSE estimate from the stacked training outputs:
/// `hhat_tau = sqrt(P)/(P+1) * y_tau`, entrywise.
pub fn scalar_mmse(y_train: &ComplexVec, power: f64) -> ComplexVec {
    let gain = power.sqrt() / (power + 1.0);
    y_train.scaled(Complex64::new(gain, 0.0))
}

/// Conjugate beamforming: `x = sqrt(power) * conj(hhat_tau)/||hhat_tau|| * s`,
/// zero-padded to the full array.
pub fn precode(h_hat_tau: &ComplexVec, power: f64, s: Complex64, m: usize) -> Result<ComplexVec> {
    let norm = h_hat_tau.norm();
    if norm == 0.0 {
        return Err(Error::ZeroEstimate);
    }
    if h_hat_tau.dim() > m {
        return Err(Error::InvalidInput(format!(
            "estimate dim {} exceeds array size {m}",
            h_hat_tau.dim()
        )));
    }
    let scale = s * (power.sqrt() / norm);
    let mut x = ComplexVec::zeros(m);
    for i in 0..h_hat_tau.dim() {
        x[i] = h_hat_tau[i].conj() * scale;
    }
    Ok(x)
}

/// LMMSE combiner weight `beta = P g / (P g + P sigma^2 + 1)` with
/// `sigma^2 = 1/(power+1)`; lies in [0, 1).
pub fn combiner_beta(g: f64, power: f64) -> f64 {
    let sigma_sq = 1.0 / (power + 1.0);
    let pg = power * g;
    pg / (pg + power * sigma_sq + 1.0)
}

/// Residual mean-square error of the combiner:
/// `P g (P sigma^2 + 1) / (P g + P sigma^2 + 1)`.
pub fn residual_mse(g: f64, power: f64) -> f64 {
    let sigma_sq = 1.0 / (power + 1.0);
    let pg = power * g;
    pg * (power * sigma_sq + 1.0) / (pg + power * sigma_sq + 1.0)
}

/// Everything observable about one simulated block.
#[derive(Clone, Debug)]
pub struct SchemeTrace {
    /// Training-phase outputs (dim `T_tau`).
    pub y_train: ComplexVec,
    /// Scalar MMSE estimate of the sounded coefficients.
    pub h_hat_tau: ComplexVec,
    /// `g = ||hhat_tau||^2`.
    pub g: f64,
    /// Data symbols drawn i.i.d. CN(0, 1).
    pub symbols: Vec<Complex64>,
    /// Data-phase outputs.
    pub per_symbol_y: Vec<Complex64>,
    /// `sigma^2 = 1/(P+1)`.
    pub sigma_sq: f64,
    /// Blocks redrawn because the estimate was numerically zero
    /// (probability-zero event; counted rather than hidden).
    pub resampled_blocks: u32,
}

/// Simulates one coherence block end to end through the channel.
pub fn simulate_block(cfg: &SchemeConfig, rng: &mut impl Rng) -> Result<SchemeTrace> {
    let m = cfg.channel.antennas_m;
    let p = cfg.effective_power;
    let mut resampled = 0u32;
    loop {
        let mut block = new_block(&cfg.channel, rng);
        let mut y_train = Vec::with_capacity(cfg.t_train);
        for t in 1..=cfg.t_train {
            let x = pilot(t, p, m)?;
            y_train.push(feedback(block.transmit(&x, rng)?));
        }
        let y_train = ComplexVec::new(y_train)?;
        let h_hat_tau = scalar_mmse(&y_train, p);
        let g = h_hat_tau.norm_sqr();
        if g == 0.0 {
            // zero-probability event; resample the block and count it
            resampled += 1;
            if resampled > 32 {
                return Err(Error::NumericalFailure(
                    "zero training estimate kept recurring".into(),
                ));
            }
            continue;
        }
        let mut symbols = Vec::with_capacity(cfg.data_len());
        let mut per_symbol_y = Vec::with_capacity(cfg.data_len());
        for _ in 0..cfg.data_len() {
            let s = sample_cn_scalar(rng);
            let x = precode(&h_hat_tau, p, s, m)?;
            per_symbol_y.push(block.transmit(&x, rng)?);
            symbols.push(s);
        }
        return Ok(SchemeTrace {
            y_train,
            h_hat_tau,
            g,
            symbols,
            per_symbol_y,
            sigma_sq: cfg.sigma_sq(),
            resampled_blocks: resampled,
        });
    }
}
