//! Digamma, chi-squared log moments and the Gamma(M, 1) density.

use crate::error::{Error, Result};

/// Euler's constant gamma_o.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_2: f64 = std::f64::consts::LN_2;

/// Digamma function for positive arguments.
///
/// Integer arguments use the exact series psi(m) = -gamma_o + sum_{p<m} 1/p;
/// everything else goes through the recurrence plus the asymptotic expansion.
pub fn digamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("digamma needs x > 0, got {x}")));
    }
    let rounded = x.round();
    if (x - rounded).abs() < 1e-12 && rounded <= 1e6 {
        let m = rounded as u64;
        // sum smallest terms first
        let mut acc = 0.0;
        for p in (1..m).rev() {
            acc += 1.0 / p as f64;
        }
        return Ok(acc - EULER_GAMMA);
    }
    let mut shift = 0.0;
    let mut y = x;
    while y < 10.0 {
        shift -= 1.0 / y;
        y += 1.0;
    }
    // Stirling-type expansion, |error| < 1e-14 for y >= 10
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let series = y.ln()
        - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0))));
    Ok(shift + series)
}

fn check_even_dof(k: u64) -> Result<u64> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "chi-squared helpers need an even k >= 2, got {k}"
        )));
    }
    Ok(k)
}

/// E[log2 u] for u ~ chi-squared with k degrees of freedom (k even),
/// via E[ln u] = psi(k/2) + ln 2.
pub fn chi2_log_mean_bits(k: u64) -> Result<f64> {
    let k = check_even_dof(k)?;
    Ok((digamma(k as f64 / 2.0)? + LN_2) / LN_2)
}

/// log2 max{k - 2, 1}: the closed-form floor under `chi2_log_mean_bits`.
pub fn chi2_log_lower_bound_bits(k: u64) -> Result<f64> {
    let k = check_even_dof(k)?;
    Ok(((k - 2).max(1) as f64).log2())
}

/// ln(n!) computed by direct summation (n stays small here).
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Density of gamma = ||h||^2 for h ~ CN(0, I_M): Gamma(M, 1), i.e.
/// g^{M-1} e^{-g} / (M-1)!. Kept in log space so large shapes do not overflow.
pub fn gamma_density(g: f64, shape_m: usize) -> Result<f64> {
    if shape_m == 0 {
        return Err(Error::InvalidDimension("gamma shape must be >= 1".into()));
    }
    if !g.is_finite() || g < 0.0 {
        return Err(Error::Domain(format!(
            "gamma density needs g >= 0, got {g}"
        )));
    }
    if g == 0.0 {
        return Ok(if shape_m == 1 { 1.0 } else { 0.0 });
    }
    let ln_pdf = (shape_m as f64 - 1.0) * g.ln() - g - ln_factorial(shape_m - 1);
    Ok(ln_pdf.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GaussLegendre;
    use approx::assert_abs_diff_eq;

    #[test]
    fn digamma_at_one_is_minus_euler_gamma() {
        assert_abs_diff_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, epsilon = 1e-12);
    }

    #[test]
    fn digamma_integer_series() {
        assert_abs_diff_eq!(digamma(2.0).unwrap(), 1.0 - EULER_GAMMA, epsilon = 1e-12);
        let expected = -EULER_GAMMA + 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        assert_abs_diff_eq!(digamma(5.0).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn digamma_recurrence_holds_off_integers() {
        // psi(x+1) = psi(x) + 1/x
        for &x in &[0.3, 1.7, 4.9, 25.6] {
            let lhs = digamma(x + 1.0).unwrap();
            let rhs = digamma(x).unwrap() + 1.0 / x;
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn digamma_rejects_nonpositive() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-3.0).is_err());
    }

    #[test]
    fn chi2_log_mean_known_values() {
        // k=2: (-gamma_o + ln 2)/ln 2
        let k2 = (-EULER_GAMMA + LN_2) / LN_2;
        assert_abs_diff_eq!(chi2_log_mean_bits(2).unwrap(), k2, epsilon = 1e-12);
        assert_abs_diff_eq!(chi2_log_mean_bits(2).unwrap(), 0.16725, epsilon = 5e-5);
        // k=4: (1 - gamma_o + ln 2)/ln 2
        let k4 = (1.0 - EULER_GAMMA + LN_2) / LN_2;
        assert_abs_diff_eq!(chi2_log_mean_bits(4).unwrap(), k4, epsilon = 1e-12);
        assert_abs_diff_eq!(chi2_log_mean_bits(4).unwrap(), 1.60995, epsilon = 5e-5);
    }

    #[test]
    fn chi2_lower_bound_values() {
        assert_eq!(chi2_log_lower_bound_bits(2).unwrap(), 0.0);
        assert_eq!(chi2_log_lower_bound_bits(4).unwrap(), 1.0);
        assert_eq!(chi2_log_lower_bound_bits(10).unwrap(), 3.0);
    }

    #[test]
    fn chi2_log_mean_dominates_floor() {
        for k in (2..=200).step_by(2) {
            let mean = chi2_log_mean_bits(k).unwrap();
            let floor = chi2_log_lower_bound_bits(k).unwrap();
            assert!(mean >= floor, "k={k}: {mean} < {floor}");
        }
    }

    #[test]
    fn chi2_rejects_odd_and_small() {
        assert!(chi2_log_mean_bits(3).is_err());
        assert!(chi2_log_mean_bits(0).is_err());
        assert!(chi2_log_lower_bound_bits(5).is_err());
    }

    #[test]
    fn gamma_density_point_values() {
        assert_abs_diff_eq!(gamma_density(0.0, 1).unwrap(), 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(
            gamma_density(1.0, 1).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
        assert_eq!(gamma_density(0.0, 2).unwrap(), 0.0);
        assert!(gamma_density(-0.5, 2).is_err());
    }

    #[test]
    fn gamma_density_mean_matches_shape() {
        // E[gamma] = M for Gamma(M, 1); integrate g * f over [0, 50]
        let rule = GaussLegendre::new(24);
        let mean = rule.integrate_panels(0.0, 50.0, 200, |g| g * gamma_density(g, 2).unwrap());
        assert_abs_diff_eq!(mean, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn gamma_density_normalizes_for_large_shape() {
        let rule = GaussLegendre::new(24);
        let total = rule.integrate_panels(0.0, 2000.0, 400, |g| gamma_density(g, 800).unwrap());
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }
}
