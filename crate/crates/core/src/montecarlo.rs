//! Trial orchestration: scheme rate estimation, moment-bound verification
//! suites, and the quartic-form identity, all reproducibly seeded.
//!
//! Every trial owns stream `trial_index` of the master seed, so results are
//! independent of worker count and scheduling; aggregation always runs
//! sequentially over the index-ordered per-trial values.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{new_block, BlockState, ChannelConfig};
use crate::error::{Error, Result};
use crate::estimator::{
    step_feedback_round, BuiltEncoder, EncoderKind, FeedbackEncoder, MmseState,
};
use crate::numerics::{
    chi2_log_lower_bound_bits, chi2_log_mean_bits, sample_cn, sample_cn_scalar, Complex64,
    ComplexMat, HermitianMat, RngStream,
};
use crate::scheme::{simulate_block, SchemeConfig};

/// A Monte Carlo point estimate with its standard error.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub master_seed: u64,
}

/// Outcome of one one-sided bound check: pass iff
/// `observed <= bound + 3 stderr`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaCheckResult {
    pub lemma_id: String,
    /// Human-readable scenario (encoder, M, T_c, P, time index).
    pub scenario: String,
    pub observed: f64,
    pub bound: f64,
    pub stderr: f64,
    /// `(bound - observed)/stderr`; `None` for exact (zero-variance) checks.
    pub slack_sigmas: Option<f64>,
    pub pass: bool,
    pub trials: u64,
    pub seed: u64,
}

impl LemmaCheckResult {
    fn one_sided(
        lemma_id: &str,
        scenario: String,
        observed: f64,
        bound: f64,
        stderr: f64,
        trials: u64,
        seed: u64,
    ) -> Self {
        let pass = observed <= bound + 3.0 * stderr;
        let slack_sigmas = (stderr > 0.0).then(|| (bound - observed) / stderr);
        Self {
            lemma_id: lemma_id.to_string(),
            scenario,
            observed,
            bound,
            stderr,
            slack_sigmas,
            pass,
            trials,
            seed,
        }
    }

    /// Two-sided identity check written in the one-sided schema:
    /// `|difference| <= 0 + 3 stderr`.
    fn identity(
        lemma_id: &str,
        scenario: String,
        difference: f64,
        stderr: f64,
        trials: u64,
        seed: u64,
    ) -> Self {
        Self::one_sided(
            lemma_id,
            scenario,
            difference.abs(),
            0.0,
            stderr,
            trials,
            seed,
        )
    }
}

/// Deterministic parallel trial map: trial `i` runs on stream `i` of the
/// master seed and the outputs come back in index order.
pub fn par_trials<T, F>(trials: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i).rng();
            f(i, &mut rng)
        })
        .collect()
}

/// Sample mean and standard error of index-ordered values.
pub fn mc_mean(values: &[f64], seed: u64) -> McEstimate {
    let n = values.len() as f64;
    assert!(values.len() >= 2, "standard error needs at least 2 trials");
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    McEstimate {
        mean,
        stderr: (var / n).sqrt(),
        trials: values.len() as u64,
        master_seed: seed,
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < 2 {
        return Err(Error::InvalidInput(
            "Monte Carlo needs at least 2 trials".into(),
        ));
    }
    Ok(())
}

/// Monte Carlo estimate of the per-block rate proxy
/// `(T_c - T_tau)/T_c * log2(1 + P g/(P sigma^2 + 1))` of the
/// training/beamforming scheme.
pub fn estimate_scheme_rate(cfg: &SchemeConfig, trials: u64, seed: u64) -> Result<McEstimate> {
    check_trials(trials)?;
    let proxies = par_trials(trials, seed, |_, rng| {
        let trace = simulate_block(cfg, rng).expect("validated scheme config");
        cfg.rate_proxy_bits(trace.g)
    });
    Ok(mc_mean(&proxies, seed))
}

fn scenario_label(kind: EncoderKind, cfg: &ChannelConfig, t: usize) -> String {
    format!(
        "{} M={} Tc={} P={} t={}",
        kind.name(),
        cfg.antennas_m,
        cfg.coherence_tc,
        cfg.power_p,
        t
    )
}

/// Evolves one trial through `observations` feedback rounds.
fn trial_state(
    kind: EncoderKind,
    cfg: &ChannelConfig,
    observations: usize,
    rng: &mut ChaCha8Rng,
) -> (BuiltEncoder, BlockState, MmseState) {
    let mut encoder = kind.build(cfg, rng);
    let mut block = new_block(cfg, rng);
    let mut est = MmseState::reset(cfg.antennas_m).expect("M >= 2");
    encoder.begin_block();
    for _ in 0..observations {
        step_feedback_round(&mut encoder, &mut block, &mut est, rng)
            .expect("in-block feedback round");
    }
    (encoder, block, est)
}

/// Cap on `E||hhat_t||^2` after `k = (t-1) mod T_c` in-block observations.
pub fn hhat_second_moment_cap(m: usize, k: usize) -> f64 {
    (m as f64).min(k as f64)
}

/// Cap on `E||hhat_t||^4`: `min(M^2 + 2M, 2k^2 + 5k)`.
pub fn hhat_fourth_moment_cap(m: usize, k: usize) -> f64 {
    let kk = k as f64;
    let mm = m as f64;
    (mm * mm + 2.0 * mm).min(2.0 * kk * kk + 5.0 * kk)
}

/// Checks the estimate-energy caps at in-block time `t` (the state after
/// `t-1` observations): second moment against `min(M, t-1)` and fourth
/// moment against `min(M^2 + 2M, 2(t-1)^2 + 5(t-1))`.
pub fn verify_hhat_power(
    kind: EncoderKind,
    cfg: &ChannelConfig,
    t: usize,
    trials: u64,
    seed: u64,
) -> Result<[LemmaCheckResult; 2]> {
    check_trials(trials)?;
    if t < 1 || t > cfg.coherence_tc {
        return Err(Error::InvalidInput(format!(
            "t={t} outside the block 1..={}",
            cfg.coherence_tc
        )));
    }
    let k = t - 1;
    let stats = par_trials(trials, seed, |_, rng| {
        let (_, _, est) = trial_state(kind, cfg, k, rng);
        let h2 = est.h_hat().norm_sqr();
        (h2, h2 * h2)
    });
    let second: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let fourth: Vec<f64> = stats.iter().map(|s| s.1).collect();
    let m2 = mc_mean(&second, seed);
    let m4 = mc_mean(&fourth, seed);
    let label = scenario_label(kind, cfg, t);
    Ok([
        LemmaCheckResult::one_sided(
            "estimate-power",
            label.clone(),
            m2.mean,
            hhat_second_moment_cap(cfg.antennas_m, k),
            m2.stderr,
            trials,
            seed,
        ),
        LemmaCheckResult::one_sided(
            "estimate-power4",
            label,
            m4.mean,
            hhat_fourth_moment_cap(cfg.antennas_m, k),
            m4.stderr,
            trials,
            seed,
        ),
    ])
}

/// Checks the one-step estimator increment at time `t`: conditional energy
/// at most 1 and conditional fourth moment at most 3, verified in their
/// marginalized form.
pub fn verify_increment_moments(
    kind: EncoderKind,
    cfg: &ChannelConfig,
    t: usize,
    trials: u64,
    seed: u64,
) -> Result<[LemmaCheckResult; 2]> {
    check_trials(trials)?;
    if t < 1 || t >= cfg.coherence_tc {
        return Err(Error::InvalidInput(format!(
            "increment at t={t} needs 1 <= t < T_c={}",
            cfg.coherence_tc
        )));
    }
    let stats = par_trials(trials, seed, |_, rng| {
        let (mut enc, mut block, mut est) = trial_state(kind, cfg, t - 1, rng);
        let before = est.h_hat().clone();
        step_feedback_round(&mut enc, &mut block, &mut est, rng).expect("in-block round");
        let d2 = est.h_hat().sub(&before).norm_sqr();
        (d2, d2 * d2)
    });
    let second: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let fourth: Vec<f64> = stats.iter().map(|s| s.1).collect();
    let m2 = mc_mean(&second, seed);
    let m4 = mc_mean(&fourth, seed);
    let label = scenario_label(kind, cfg, t);
    Ok([
        LemmaCheckResult::one_sided(
            "increment-power",
            label.clone(),
            m2.mean,
            1.0,
            m2.stderr,
            trials,
            seed,
        ),
        LemmaCheckResult::one_sided(
            "increment-power4",
            label,
            m4.mean,
            3.0,
            m4.stderr,
            trials,
            seed,
        ),
    ])
}

/// Checks the genie-output power `E|(||hhat_t|| + z)|^2 = 1 + E||hhat_t||^2`
/// against `min(M, T_c) + 1`.
pub fn verify_genie_power(
    kind: EncoderKind,
    cfg: &ChannelConfig,
    t: usize,
    trials: u64,
    seed: u64,
) -> Result<LemmaCheckResult> {
    check_trials(trials)?;
    if t < 1 || t > cfg.coherence_tc {
        return Err(Error::InvalidInput(format!(
            "t={t} outside the block 1..={}",
            cfg.coherence_tc
        )));
    }
    let values = par_trials(trials, seed, |_, rng| {
        let (_, _, est) = trial_state(kind, cfg, t - 1, rng);
        let genie = Complex64::new(est.h_hat().norm(), 0.0) + sample_cn_scalar(rng);
        genie.norm_sqr()
    });
    let est = mc_mean(&values, seed);
    let bound = (cfg.antennas_m.min(cfg.coherence_tc) as f64) + 1.0;
    Ok(LemmaCheckResult::one_sided(
        "genie-power",
        scenario_label(kind, cfg, t),
        est.mean,
        bound,
        est.stderr,
        trials,
        seed,
    ))
}

/// Worst covariance-spectrum violation of `0 <= Omega <= I` seen anywhere
/// in `runs` adaptive blocks, checked pre-clipping at every step.
pub fn verify_cov_spectrum(
    kind: EncoderKind,
    cfg: &ChannelConfig,
    runs: u64,
    seed: u64,
) -> Result<LemmaCheckResult> {
    check_trials(runs)?;
    let steps = cfg.coherence_tc - 1;
    let worst_per_run = par_trials(runs, seed, |_, rng| {
        let mut enc = kind.build(cfg, rng);
        let mut block = new_block(cfg, rng);
        let mut est = MmseState::reset(cfg.antennas_m).expect("M >= 2");
        enc.begin_block();
        let mut worst = 0.0f64;
        for _ in 0..steps {
            step_feedback_round(&mut enc, &mut block, &mut est, rng).expect("in-block round");
            let (lo, hi) = est.omega().eig_range();
            worst = worst.max(-lo).max(hi - 1.0);
            assert_eq!(est.clip_events(), 0, "spectrum was clipped mid-run");
        }
        worst
    });
    let observed = worst_per_run.iter().copied().fold(0.0, f64::max);
    Ok(LemmaCheckResult::one_sided(
        "cov-spectrum",
        scenario_label(kind, cfg, cfg.coherence_tc),
        observed,
        1e-9,
        0.0,
        runs,
        seed,
    ))
}

/// Closed-form quartic moment `E[(u^H A u)^2]` for `u ~ CN(0, Omega)` and
/// Hermitian `A`: `trace(A Omega A Omega) + trace(A Omega)^2`.
///
/// Note this is the proper-complex value. The real-Gaussian counterpart
/// carries a factor 2 on the first trace; for PSD arguments it only
/// overstates the moment, which is why the one-sided estimate caps above
/// (`M^2 + 2M`, increment fourth moment 3) remain valid ceilings.
pub fn quartic_form_moment(a: &HermitianMat, omega: &HermitianMat) -> Result<f64> {
    if a.dim() != omega.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let (lo, _) = omega.eig_range();
    if lo < -1e-9 {
        return Err(Error::InvalidInput(format!(
            "covariance is not PSD (lambda_min = {lo:.3e})"
        )));
    }
    let t1 = a.trace_product(omega);
    // trace(A Omega A Omega) via B = A*Omega, sum_ij B_ij B_ji
    let n = a.dim();
    let b = {
        let am: ComplexMat = a.clone().into();
        let om: ComplexMat = omega.clone().into();
        am.mul_mat(&om)
    };
    let mut t2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            t2 += (b.get(i, j) * b.get(j, i)).re;
        }
    }
    Ok(t2 + t1 * t1)
}

/// Monte Carlo companion of `quartic_form_moment`.
pub fn quartic_form_moment_mc(
    a: &HermitianMat,
    omega: &HermitianMat,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials)?;
    if a.dim() != omega.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let root = omega.sqrt_psd();
    let n = a.dim();
    let values = par_trials(trials, seed, |_, rng| {
        let g = sample_cn(n, rng).expect("n >= 1");
        let u = root.mul_vec(&g);
        let quad = u.dot_h(&a.mul_vec(&u)).re;
        quad * quad
    });
    Ok(mc_mean(&values, seed))
}

/// Identity check: the closed-form quartic moment against its Monte Carlo
/// estimate.
pub fn verify_quartic_form(
    a: &HermitianMat,
    omega: &HermitianMat,
    trials: u64,
    seed: u64,
) -> Result<LemmaCheckResult> {
    let closed = quartic_form_moment(a, omega)?;
    let mc = quartic_form_moment_mc(a, omega, trials, seed)?;
    Ok(LemmaCheckResult::identity(
        "quartic-form-identity",
        format!("dim={} closed={closed:.6}", a.dim()),
        mc.mean - closed,
        mc.stderr,
        trials,
        seed,
    ))
}

/// Chi-squared log-moment checks: the digamma closed form against Monte
/// Carlo, and its floor `log2 max(k-2, 1)`.
pub fn verify_chi2_log_moment(k: u64, trials: u64, seed: u64) -> Result<Vec<LemmaCheckResult>> {
    check_trials(trials)?;
    let closed = chi2_log_mean_bits(k)?;
    let floor = chi2_log_lower_bound_bits(k)?;
    // chi2(k) for even k is the sum of k/2 i.i.d. Exp(2) variables
    let half = k / 2;
    let values = par_trials(trials, seed, |_, rng| {
        let mut acc = 0.0f64;
        for _ in 0..half {
            let u: f64 = rng.gen::<f64>();
            acc += -2.0 * (1.0 - u).ln();
        }
        acc.log2()
    });
    let mc = mc_mean(&values, seed);
    Ok(vec![
        LemmaCheckResult::identity(
            "chi2-log-mean",
            format!("k={k} closed={closed:.6}"),
            mc.mean - closed,
            mc.stderr,
            trials,
            seed,
        ),
        LemmaCheckResult::one_sided(
            "chi2-log-floor",
            format!("k={k}"),
            floor,
            closed,
            0.0,
            trials,
            seed,
        ),
    ])
}

/// Sequential-vs-batch conditioning agreement over random adaptive cases.
pub fn verify_sequential_vs_batch(cases: u64, seed: u64) -> Result<LemmaCheckResult> {
    use crate::estimator::{batch_condition, GaussPrior};
    check_trials(cases)?;
    let deviations = par_trials(cases, seed, |case, rng| {
        let m = 2 + (case % 4) as usize;
        let steps = 1 + (case % 6) as usize;
        let cfg = ChannelConfig::second_moment(m, steps + 2, 3.0).expect("valid");
        let mut enc = EncoderKind::RandomMix.build(&cfg, rng);
        let mut block = new_block(&cfg, rng);
        let mut est = MmseState::reset(m).expect("m >= 2");
        enc.begin_block();
        let mut obs = Vec::with_capacity(steps);
        for _ in 0..steps {
            let (x, y) = step_feedback_round(&mut enc, &mut block, &mut est, rng).expect("round");
            obs.push((x, y));
        }
        let prior = GaussPrior::standard(m).expect("m >= 2");
        let batch = batch_condition(&prior, &obs).expect("batch conditioning");
        let mean_dev = est.h_hat().sub(&batch.mean).norm();
        let cov_dev = est.omega().max_abs_diff(&batch.cov);
        mean_dev.max(cov_dev)
    });
    let observed = deviations.iter().copied().fold(0.0, f64::max);
    Ok(LemmaCheckResult::one_sided(
        "sequential-vs-batch",
        format!("{cases} random adaptive cases, M<=5, T<=6"),
        observed,
        1e-8,
        0.0,
        cases,
        seed,
    ))
}

/// One-pass moment suite at the end of the block: estimate energy caps,
/// increment moments at the last in-block step, and the genie power, all
/// from the same `trials` simulations.
pub fn lemma_suite_point(
    kind: EncoderKind,
    cfg: &ChannelConfig,
    trials: u64,
    seed: u64,
) -> Result<Vec<LemmaCheckResult>> {
    check_trials(trials)?;
    if cfg.coherence_tc < 2 {
        return Err(Error::InvalidInput(
            "moment suite needs a block of at least 2 uses".into(),
        ));
    }
    let steps = cfg.coherence_tc - 1;
    let stats = par_trials(trials, seed, |_, rng| {
        let (mut enc, mut block, mut est) = trial_state(kind, cfg, steps - 1, rng);
        let before = est.h_hat().clone();
        step_feedback_round(&mut enc, &mut block, &mut est, rng).expect("in-block round");
        let inc2 = est.h_hat().sub(&before).norm_sqr();
        let h2 = est.h_hat().norm_sqr();
        let genie = Complex64::new(est.h_hat().norm(), 0.0) + sample_cn_scalar(rng);
        [h2, h2 * h2, inc2, inc2 * inc2, genie.norm_sqr()]
    });
    let column = |idx: usize| -> Vec<f64> { stats.iter().map(|s| s[idx]).collect() };
    let t = cfg.coherence_tc;
    let k = steps;
    let label = scenario_label(kind, cfg, t);
    let m2 = mc_mean(&column(0), seed);
    let m4 = mc_mean(&column(1), seed);
    let i2 = mc_mean(&column(2), seed);
    let i4 = mc_mean(&column(3), seed);
    let ge = mc_mean(&column(4), seed);
    Ok(vec![
        LemmaCheckResult::one_sided(
            "estimate-power",
            label.clone(),
            m2.mean,
            hhat_second_moment_cap(cfg.antennas_m, k),
            m2.stderr,
            trials,
            seed,
        ),
        LemmaCheckResult::one_sided(
            "estimate-power4",
            label.clone(),
            m4.mean,
            hhat_fourth_moment_cap(cfg.antennas_m, k),
            m4.stderr,
            trials,
            seed,
        ),
        LemmaCheckResult::one_sided(
            "increment-power",
            label.clone(),
            i2.mean,
            1.0,
            i2.stderr,
            trials,
            seed,
        ),
        LemmaCheckResult::one_sided(
            "increment-power4",
            label.clone(),
            i4.mean,
            3.0,
            i4.stderr,
            trials,
            seed,
        ),
        LemmaCheckResult::one_sided(
            "genie-power",
            label,
            ge.mean,
            (cfg.antennas_m.min(cfg.coherence_tc) as f64) + 1.0,
            ge.stderr,
            trials,
            seed,
        ),
    ])
}

/// One row of a beamforming-gain sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GainSweepRow {
    pub m: usize,
    pub tc: usize,
    pub t_tau: usize,
    pub rate_bits: f64,
    pub rate_over_log2m: f64,
    pub stderr: f64,
}

/// Sweep outcome; degenerate points are skipped and reported.
#[derive(Clone, Debug)]
pub struct GainSweep {
    pub rows: Vec<GainSweepRow>,
    pub skipped: Vec<(usize, String)>,
}

/// Scheme-rate sweep along `T_c = max(2, round(M^alpha))`.
pub fn sweep_gain(
    alpha: f64,
    p: f64,
    m_list: &[usize],
    trials: u64,
    seed: u64,
) -> Result<GainSweep> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::Domain("alpha must be >= 0".into()));
    }
    if m_list.is_empty() {
        return Err(Error::InvalidInput("empty antenna list".into()));
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &m in m_list {
        let tc = ((m as f64).powf(alpha).round() as usize).max(2);
        let point = ChannelConfig::second_moment(m, tc, p)
            .and_then(SchemeConfig::from_channel)
            .and_then(|cfg| Ok((estimate_scheme_rate(&cfg, trials, seed)?, cfg)));
        match point {
            Ok((est, cfg)) => rows.push(GainSweepRow {
                m,
                tc,
                t_tau: cfg.t_train,
                rate_bits: est.mean,
                rate_over_log2m: est.mean / (m as f64).log2(),
                stderr: est.stderr,
            }),
            Err(e) => skipped.push((m, e.to_string())),
        }
    }
    if rows.is_empty() {
        return Err(Error::DegenerateConfig(
            "every sweep point was degenerate".into(),
        ));
    }
    Ok(GainSweep { rows, skipped })
}
