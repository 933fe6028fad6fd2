//! Sequential conditional-Gaussian (MMSE) estimation of the fading vector
//! from feedback-dependent observations.
//!
//! Within a block the receiver-side estimate evolves by rank-one updates
//!
//! ```text
//! hhat' = hhat + Omega x* (y - x^T hhat) / (x^T Omega x* + 1)
//! Omega' = Omega - Omega x* x^T Omega / (x^T Omega x* + 1)
//! ```
//!
//! starting from `hhat = 0`, `Omega = I`. The same conditioning exists in a
//! general multi-output form (`update_general`) and as a one-shot joint
//! conditioning (`batch_condition`) that serves as the independent oracle for
//! the recursion. The inputs `x` may depend arbitrarily (nonlinearly) on past
//! outputs; the conditional covariance still never leaves `0 <= Omega <= I`.

mod encoders;

pub use encoders::{BuiltEncoder, EncoderKind, FeedbackEncoder};

use rand::Rng;

use crate::channel::{feedback, new_block, ChannelConfig};
use crate::error::{Error, Result};
use crate::numerics::{Complex64, ComplexMat, ComplexVec, HermitianMat, RngStream};

/// Allowed spectrum drift before the covariance is re-projected onto [0, 1].
const CLIP_TOLERANCE: f64 = 1e-9;
/// Drift beyond this is treated as a bug, not conditioning.
const HARD_TOLERANCE: f64 = 1e-6;

/// Receiver-side conditional mean and covariance for the current block.
#[derive(Clone, Debug)]
pub struct MmseState {
    h_hat: ComplexVec,
    omega: HermitianMat,
    t_in_block: usize,
    clip_events: u32,
}

impl MmseState {
    /// Block-start state: zero mean, identity covariance.
    pub fn reset(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidDimension("estimator needs dim >= 1".into()));
        }
        Ok(Self {
            h_hat: ComplexVec::zeros(m),
            omega: HermitianMat::identity(m)?,
            t_in_block: 0,
            clip_events: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.h_hat.dim()
    }

    pub fn h_hat(&self) -> &ComplexVec {
        &self.h_hat
    }

    pub fn omega(&self) -> &HermitianMat {
        &self.omega
    }

    /// Number of in-block observations folded into the state.
    pub fn t_in_block(&self) -> usize {
        self.t_in_block
    }

    /// How many times the covariance spectrum had to be re-projected.
    pub fn clip_events(&self) -> u32 {
        self.clip_events
    }

    /// Folds in one observation `y = x^T h + z`.
    pub fn update(&mut self, x: &ComplexVec, y: Complex64) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "input dim {} does not match state dim {}",
                x.dim(),
                self.dim()
            )));
        }
        let w = self.omega.mul_conj(x);
        let q = x.dot_t(&w).re;
        if q < -HARD_TOLERANCE {
            return Err(Error::NumericalFailure(format!(
                "covariance quadratic form went negative ({q:.3e})"
            )));
        }
        // >= 1 by construction; never regularized further
        let denom = q.max(0.0) + 1.0;
        let innovation = y - x.dot_t(&self.h_hat);
        self.h_hat.add_scaled(&w, innovation / denom);
        self.omega.sub_outer_self(&w, denom);
        self.hygiene()?;
        self.t_in_block += 1;
        Ok(())
    }

    /// Cheap per-update drift detector. The rank-one downdate keeps the
    /// matrix exactly Hermitian by construction, so only the spectrum can
    /// drift; diagonal overshoot is a lower bound on any eigenvalue
    /// violation and costs O(M) to scan. On overshoot the full spectral
    /// projection runs (and errors out above the hard tolerance).
    fn hygiene(&mut self) -> Result<()> {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let d = self.omega.get(i, i).re;
            worst = worst.max(-d).max(d - 1.0);
        }
        if worst > CLIP_TOLERANCE {
            self.enforce_spectrum()?;
        }
        Ok(())
    }

    /// Full spectral hygiene: measures the eigenvalue violation of
    /// `0 <= Omega <= I`, re-projects when it exceeds the clip tolerance and
    /// fails hard when it exceeds 1e-6 (that magnitude indicates a bug, not
    /// rounding).
    pub fn enforce_spectrum(&mut self) -> Result<f64> {
        let (lo, hi) = self.omega.eig_range();
        let violation = (-lo).max(hi - 1.0).max(0.0);
        if violation > HARD_TOLERANCE {
            return Err(Error::NumericalFailure(format!(
                "covariance spectrum violation {violation:.3e} exceeds hard tolerance"
            )));
        }
        if violation > CLIP_TOLERANCE {
            self.omega.clamp_spectrum(0.0, 1.0);
            self.clip_events += 1;
        }
        Ok(violation)
    }
}

/// Prior (or posterior) of a complex Gaussian vector.
#[derive(Clone, Debug)]
pub struct GaussPrior {
    pub mean: ComplexVec,
    pub cov: HermitianMat,
}

impl GaussPrior {
    pub fn standard(m: usize) -> Result<Self> {
        Ok(Self {
            mean: ComplexVec::zeros(m),
            cov: HermitianMat::identity(m)?,
        })
    }
}

fn check_prior(prior: &GaussPrior) -> Result<()> {
    if prior.mean.dim() != prior.cov.dim() {
        return Err(Error::InvalidState("prior mean/cov dim mismatch".into()));
    }
    let (lo, _) = prior.cov.eig_range();
    if lo < -1e-9 {
        return Err(Error::InvalidState(format!(
            "prior covariance is not PSD (lambda_min = {lo:.3e})"
        )));
    }
    Ok(())
}

/// Joint-Gaussian conditioning on `y = A u + z`, `z ~ CN(0, I_N)`:
///
/// ```text
/// mean' = mean + Omega A^H (A Omega A^H + I)^{-1} (y - A mean)
/// cov'  = Omega - Omega A^H (A Omega A^H + I)^{-1} A Omega
/// ```
fn condition_on(prior: &GaussPrior, a: &ComplexMat, y: &ComplexVec) -> Result<GaussPrior> {
    let m = prior.cov.dim();
    if a.cols() != m {
        return Err(Error::InvalidInput(format!(
            "observation matrix has {} columns, prior dim is {m}",
            a.cols()
        )));
    }
    if y.dim() != a.rows() {
        return Err(Error::InvalidInput(format!(
            "got {} outputs for {} observation rows",
            y.dim(),
            a.rows()
        )));
    }
    // S = A Omega A^H + I is PD no matter how degenerate A Omega A^H is;
    // a failed factorization therefore signals a bug upstream.
    let s = a.gram_through(&prior.cov, 1.0);
    let chol = s.cholesky().ok_or_else(|| {
        Error::NumericalFailure("innovation covariance not positive definite".into())
    })?;

    // G = Omega A^H (M x N)
    let ah = a.hermitian_transpose();
    let g = mul_hermitian_mat(&prior.cov, &ah);

    let mut innovation = y.clone();
    let predicted = a.mul_vec(&prior.mean);
    innovation.add_scaled(&predicted, Complex64::new(-1.0, 0.0));
    let gain = chol.solve_vec(&innovation);

    let mut mean = prior.mean.clone();
    for j in 0..g.cols() {
        mean.add_scaled(&g.col(j), gain[j]);
    }

    // X = S^{-1} G^H (N x M), cov' = Omega - G X
    let x = chol.solve_mat(&g.hermitian_transpose());
    let correction = g.mul_mat(&x);
    let mut cov = HermitianMat::zeros(m);
    for i in 0..m {
        for j in i..m {
            let raw = prior.cov.get(i, j) - correction.get(i, j);
            let mirrored = prior.cov.get(j, i) - correction.get(j, i);
            cov.set_sym(i, j, (raw + mirrored.conj()) * 0.5);
        }
    }
    Ok(GaussPrior { mean, cov })
}

fn mul_hermitian_mat(h: &HermitianMat, m: &ComplexMat) -> ComplexMat {
    let n = h.dim();
    debug_assert_eq!(n, m.rows());
    let mut out = ComplexMat::zeros(n, m.cols());
    for i in 0..n {
        for j in 0..m.cols() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += h.get(i, k) * m.get(k, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// One multi-output conditioning step (N outputs at once).
pub fn update_general(prior: &GaussPrior, a: &ComplexMat, y: &ComplexVec) -> Result<GaussPrior> {
    check_prior(prior)?;
    condition_on(prior, a, y)
}

/// Oracle: conditions on all observations in one joint solve. For any
/// observation order this equals the iterated single-step updates.
pub fn batch_condition(
    prior: &GaussPrior,
    observations: &[(ComplexVec, Complex64)],
) -> Result<GaussPrior> {
    check_prior(prior)?;
    if observations.is_empty() {
        return Ok(prior.clone());
    }
    let rows: Vec<ComplexVec> = observations.iter().map(|(r, _)| r.clone()).collect();
    let a = ComplexMat::from_rows(&rows)?;
    let y = ComplexVec::new(observations.iter().map(|&(_, y)| y).collect())?;
    condition_on(prior, &a, &y)
}

/// Empirical error covariance of `h - hhat` after a given number of
/// feedback-driven observations, together with the average covariance the
/// recursion itself reported. The two must agree for a correct estimator.
pub struct ErrorCovEstimate {
    pub empirical: HermitianMat,
    pub mean_reported: HermitianMat,
    pub trials: u64,
}

/// Runs `observations` feedback rounds per trial (encoder -> channel ->
/// estimator) and averages the realized error outer products.
pub fn estimate_error_cov_mc(
    kind: EncoderKind,
    cfg: &ChannelConfig,
    observations: usize,
    trials: u64,
    seed: u64,
) -> Result<ErrorCovEstimate> {
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    if observations >= cfg.coherence_tc {
        return Err(Error::InvalidInput(format!(
            "{observations} observations do not fit in a block of {}",
            cfg.coherence_tc
        )));
    }
    let m = cfg.antennas_m;
    let mut empirical = HermitianMat::zeros(m);
    let mut mean_reported = HermitianMat::zeros(m);
    let weight = 1.0 / trials as f64;
    for trial in 0..trials {
        let mut rng = RngStream::new(seed, trial).rng();
        let mut encoder = kind.build(cfg, &mut rng);
        let mut block = new_block(cfg, &mut rng);
        let mut est = MmseState::reset(m)?;
        encoder.begin_block();
        for _ in 0..observations {
            step_feedback_round(&mut encoder, &mut block, &mut est, &mut rng)?;
        }
        let err = block_error(&block, &est);
        empirical.add_outer_self(&err, weight);
        mean_reported = mean_reported.add(&{
            let mut o = est.omega().clone();
            o.scale(weight);
            o
        });
    }
    Ok(ErrorCovEstimate {
        empirical,
        mean_reported,
        trials,
    })
}

/// One feedback round: encoder emits `x`, channel produces `y`, the
/// estimator folds it in and the output is fed back with unit delay.
pub fn step_feedback_round<E: FeedbackEncoder>(
    encoder: &mut E,
    block: &mut crate::channel::BlockState,
    est: &mut MmseState,
    rng: &mut impl Rng,
) -> Result<(ComplexVec, Complex64)> {
    let x = encoder.next_input();
    let y = block.transmit(&x, rng)?;
    est.update(&x, y)?;
    encoder.observe(feedback(y));
    Ok((x, y))
}

pub(crate) fn block_error(block: &crate::channel::BlockState, est: &MmseState) -> ComplexVec {
    block_channel(block).sub(est.h_hat())
}

// The true fading vector is deliberately not public API on BlockState;
// estimator-side diagnostics get at it through this crate-private accessor.
pub(crate) fn block_channel(block: &crate::channel::BlockState) -> ComplexVec {
    block.channel_for_diagnostics()
}
