//! Closed-form capacity bounds, the water-filling ideal-CSI capacity, and
//! the beamforming-gain curves. All outputs are bits per channel use.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ln_factorial, GaussLegendre};
use crate::scheme::training_length;

/// Capacity upper bound under the second-moment budget:
/// `2 log2(4 + 3 min(M, T_c)) + log2(1 + 4P)`.
pub fn upper_second(m: usize, tc: usize, p: f64) -> f64 {
    let q = m.min(tc) as f64;
    2.0 * (4.0 + 3.0 * q).log2() + (1.0 + 4.0 * p).log2()
}

/// Capacity upper bound under the fourth-moment budget:
/// `log2(1 + min(M + 2, sqrt(2) (T_c + 1)) kappa P)`.
pub fn upper_fourth(m: usize, tc: usize, p: f64, kappa: f64) -> f64 {
    let q = ((m + 2) as f64).min(2f64.sqrt() * (tc + 1) as f64);
    (1.0 + q * kappa * p).log2()
}

/// A rate lower bound, clamped at zero when the raw formula goes negative
/// (a negative rate bound carries no information).
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct RateLowerBound {
    pub bits: f64,
    /// True when the raw value was negative and got clamped.
    pub vacuous: bool,
}

/// Achievable-rate lower bound of the training/beamforming scheme under the
/// second-moment budget:
///
/// ```text
/// (T_c - T_tau)/T_c * log2(1 + P max(T_tau - 1, 1/2)/(2 + 1/P)
///                            - 1/max(T_tau, 2))
/// ```
///
/// with `T_tau` from `training_length`.
pub fn lower_second(m: usize, tc: usize, p: f64) -> Result<RateLowerBound> {
    let t_tau = training_length(m, tc)?;
    let frac = (tc - t_tau) as f64 / tc as f64;
    let boost = p * ((t_tau as f64 - 1.0).max(0.5)) / (2.0 + 1.0 / p);
    let loss = 1.0 / (t_tau.max(2) as f64);
    let raw = frac * (1.0 + boost - loss).log2();
    Ok(RateLowerBound {
        bits: raw.max(0.0),
        vacuous: raw < 0.0,
    })
}

/// Same bound under the fourth-moment budget: the transmit power becomes
/// `P_o = kappa P / sqrt(3)`.
pub fn lower_fourth(m: usize, tc: usize, p: f64, kappa: f64) -> Result<RateLowerBound> {
    lower_second(m, tc, kappa * p / 3f64.sqrt())
}

/// Large-array approximation of the ideal-CSI capacity: `log2(1 + P M)`.
pub fn ideal_asymptote(m: usize, p: f64) -> f64 {
    (1.0 + p * m as f64).log2()
}

/// Water-filling solution for the ideal-CSI ergodic capacity over
/// `gamma = ||h||^2 ~ Gamma(M, 1)`.
#[derive(Copy, Clone, Debug)]
pub struct WaterfillSolution {
    /// Ergodic rate at the optimal allocation, bits/use.
    pub bits: f64,
    /// Water level `mu`; the allocation is `(mu - 1/gamma)^+`.
    pub mu: f64,
    /// `|E[(mu - 1/gamma)^+] - P|` at the returned level.
    pub power_residual: f64,
}

/// Gamma(M, 1) density with the normalization precomputed once.
struct GammaPdf {
    shape: f64,
    ln_norm: f64,
}

impl GammaPdf {
    fn new(m: usize) -> Self {
        Self {
            shape: m as f64,
            ln_norm: ln_factorial(m - 1),
        }
    }

    #[inline]
    fn eval(&self, g: f64) -> f64 {
        if g <= 0.0 {
            return if self.shape == 1.0 { 1.0 } else { 0.0 };
        }
        ((self.shape - 1.0) * g.ln() - g - self.ln_norm).exp()
    }

    /// Upper integration limit with tail mass far below 1e-12: walk out
    /// until the density itself is negligible against the bulk.
    fn tail_cut(&self) -> f64 {
        let m = self.shape;
        let mut g = m + 12.0 * m.sqrt() + 40.0;
        loop {
            let ln_pdf = (m - 1.0) * g.ln() - g - self.ln_norm;
            // density below e^-45 ~ 3e-20; times any log factor it is dust
            if ln_pdf < -45.0 {
                return g;
            }
            g *= 1.5;
        }
    }
}

const WF_PANELS: usize = 96;
const WF_ORDER: usize = 16;

/// E[(mu - 1/gamma)^+] for the given water level.
fn allocated_power(pdf: &GammaPdf, rule: &GaussLegendre, gamma_max: f64, mu: f64) -> f64 {
    let lo = 1.0 / mu;
    if lo >= gamma_max {
        return 0.0;
    }
    rule.integrate_panels(lo, gamma_max, WF_PANELS, |g| (mu - 1.0 / g) * pdf.eval(g))
}

/// E[log2(mu gamma) ; gamma > 1/mu].
fn allocated_rate(pdf: &GammaPdf, rule: &GaussLegendre, gamma_max: f64, mu: f64) -> f64 {
    let lo = 1.0 / mu;
    if lo >= gamma_max {
        return 0.0;
    }
    rule.integrate_panels(lo, gamma_max, WF_PANELS, |g| (mu * g).log2() * pdf.eval(g))
}

/// Solves the water level by bisection to a 1e-9 power residual and returns
/// the optimal ergodic rate.
pub fn ideal_waterfill_solution(m: usize, p: f64) -> Result<WaterfillSolution> {
    if m == 0 {
        return Err(Error::InvalidDimension("need at least one antenna".into()));
    }
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::InvalidInput(format!("power must be > 0, got {p}")));
    }
    let pdf = GammaPdf::new(m);
    let rule = GaussLegendre::new(WF_ORDER);
    let gamma_max = pdf.tail_cut();

    // bracket the level: power(mu) is increasing, -> 0 as mu -> 0
    let mut lo = 1e-12;
    let mut hi = p + 1.0;
    let mut grow = 0;
    while allocated_power(&pdf, &rule, gamma_max, hi) < p {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::NumericalFailure(
                "failed to bracket the water level".into(),
            ));
        }
    }
    let mut mu = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        mu = 0.5 * (lo + hi);
        let got = allocated_power(&pdf, &rule, gamma_max, mu);
        residual = (got - p).abs();
        if residual <= 1e-9 {
            break;
        }
        if got < p {
            lo = mu;
        } else {
            hi = mu;
        }
    }
    if residual > 1e-9 {
        return Err(Error::NumericalFailure(format!(
            "water-level bisection stalled at residual {residual:.3e}"
        )));
    }
    let bits = allocated_rate(&pdf, &rule, gamma_max, mu);
    Ok(WaterfillSolution {
        bits,
        mu,
        power_residual: residual,
    })
}

/// Water-filling ideal-CSI capacity, bits/use.
pub fn ideal_waterfill(m: usize, p: f64) -> Result<f64> {
    Ok(ideal_waterfill_solution(m, p)?.bits)
}

/// Ergodic rate of the constant allocation `P(gamma) = P`:
/// `E[log2(1 + P gamma)]`. Always a feasible competitor of water-filling.
pub fn equal_power_rate(m: usize, p: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidDimension("need at least one antenna".into()));
    }
    let pdf = GammaPdf::new(m);
    let rule = GaussLegendre::new(WF_ORDER);
    let gamma_max = pdf.tail_cut();
    Ok(rule.integrate_panels(0.0, gamma_max, WF_PANELS, |g| {
        (1.0 + p * g).log2() * pdf.eval(g)
    }))
}

/// Rate of a rescaled off-level allocation `c (mu' - 1/g)^+` with `c` chosen
/// to spend exactly `p`; used by the local-optimality check.
pub fn perturbed_level_rate(m: usize, p: f64, mu_prime: f64) -> Result<f64> {
    let pdf = GammaPdf::new(m);
    let rule = GaussLegendre::new(WF_ORDER);
    let gamma_max = pdf.tail_cut();
    let spent = allocated_power(&pdf, &rule, gamma_max, mu_prime);
    if spent <= 0.0 {
        return Ok(0.0);
    }
    let c = p / spent;
    Ok(
        rule.integrate_panels(1.0 / mu_prime, gamma_max, WF_PANELS, |g| {
            (1.0 + c * (mu_prime - 1.0 / g) * g).log2() * pdf.eval(g)
        }),
    )
}

/// Beamforming-gain curves over a grid of coherence exponents alpha.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GainCurve {
    pub alpha_grid: Vec<f64>,
    /// Achievable gain `min(alpha, 1)` (both budgets).
    pub lower: Vec<f64>,
    /// Converse under the second-moment budget: `min(2 alpha, 1)`.
    pub upper_second: Vec<f64>,
    /// Exact gain under the fourth-moment budget: `min(alpha, 1)`.
    pub exact_fourth: Vec<f64>,
}

pub fn gain_curve(alpha_grid: &[f64]) -> Result<GainCurve> {
    if alpha_grid.iter().any(|&a| !a.is_finite() || a < 0.0) {
        return Err(Error::Domain("alpha must be >= 0".into()));
    }
    Ok(GainCurve {
        alpha_grid: alpha_grid.to_vec(),
        lower: alpha_grid.iter().map(|&a| a.min(1.0)).collect(),
        upper_second: alpha_grid.iter().map(|&a| (2.0 * a).min(1.0)).collect(),
        exact_fourth: alpha_grid.iter().map(|&a| a.min(1.0)).collect(),
    })
}

/// All closed-form bound values for one scenario point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub m: usize,
    pub tc: usize,
    pub p: f64,
    pub kappa: f64,
    /// `log T_c / log M`.
    pub alpha: f64,
    pub ideal_waterfill_bits: f64,
    pub ideal_asymptote_bits: f64,
    pub upper_second_bits: f64,
    pub upper_fourth_bits: f64,
    /// `None` when the configuration leaves no data phase (T_c too small).
    pub lower_second_bits: Option<f64>,
    pub lower_fourth_bits: Option<f64>,
    pub lower_second_vacuous: bool,
    pub lower_fourth_vacuous: bool,
}

pub fn bound_report(m: usize, tc: usize, p: f64, kappa: f64) -> Result<BoundReport> {
    if m < 2 {
        return Err(Error::InvalidInput("need at least 2 antennas".into()));
    }
    if tc < 1 {
        return Err(Error::InvalidInput("coherence length must be >= 1".into()));
    }
    if !(p > 0.0 && kappa > 0.0) {
        return Err(Error::InvalidInput("power and kappa must be > 0".into()));
    }
    let (ls, lf) = match lower_second(m, tc, p) {
        Ok(b) => (Some(b), Some(lower_fourth(m, tc, p, kappa)?)),
        Err(Error::DegenerateConfig(_)) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(BoundReport {
        m,
        tc,
        p,
        kappa,
        alpha: (tc as f64).ln() / (m as f64).ln(),
        ideal_waterfill_bits: ideal_waterfill(m, p)?,
        ideal_asymptote_bits: ideal_asymptote(m, p),
        upper_second_bits: upper_second(m, tc, p),
        upper_fourth_bits: upper_fourth(m, tc, p, kappa),
        lower_second_bits: ls.map(|b| b.bits),
        lower_fourth_bits: lf.map(|b| b.bits),
        lower_second_vacuous: ls.map(|b| b.vacuous).unwrap_or(false),
        lower_fourth_vacuous: lf.map(|b| b.vacuous).unwrap_or(false),
    })
}
