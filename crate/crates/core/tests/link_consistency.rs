//! Cross-module checks: the simulated link, the estimator it carries, and
//! the closed-form bounds must all agree with each other.

use miso_lab::bounds;
use miso_lab::channel::{ChannelConfig, PowerConstraint};
use miso_lab::estimator::estimate_error_cov_mc;
use miso_lab::montecarlo::estimate_scheme_rate;
use miso_lab::scheme::SchemeConfig;
use miso_lab::EncoderKind;

#[test]
fn scheme_rate_sits_between_bounds_on_a_grid() {
    for &(m, tc) in &[(4usize, 4usize), (8, 4), (16, 8), (64, 8)] {
        for &p in &[1.0, 10.0] {
            let channel = ChannelConfig::second_moment(m, tc, p).unwrap();
            let scheme = SchemeConfig::from_channel(channel).unwrap();
            let est = estimate_scheme_rate(&scheme, 20_000, 11).unwrap();
            let lower = bounds::lower_second(m, tc, p).unwrap().bits;
            let upper = bounds::upper_second(m, tc, p);
            assert!(
                est.mean >= lower - 3.0 * est.stderr,
                "M={m} Tc={tc} P={p}: {} < {lower}",
                est.mean
            );
            assert!(
                est.mean <= upper + 3.0 * est.stderr,
                "M={m} Tc={tc} P={p}: {} > {upper}",
                est.mean
            );
        }
    }
}

#[test]
fn fourth_moment_scheme_rate_dominates_its_bound() {
    for &kappa in &[1.0, 2.0] {
        let channel =
            ChannelConfig::new(16, 8, 10.0, PowerConstraint::FourthMoment, kappa).unwrap();
        let scheme = SchemeConfig::from_channel(channel).unwrap();
        let est = estimate_scheme_rate(&scheme, 20_000, 13).unwrap();
        let lower = bounds::lower_fourth(16, 8, 10.0, kappa).unwrap().bits;
        let upper = bounds::upper_fourth(16, 8, 10.0, kappa);
        assert!(est.mean >= lower - 3.0 * est.stderr, "kappa={kappa}");
        assert!(est.mean <= upper + 3.0 * est.stderr, "kappa={kappa}");
    }
}

#[test]
fn reported_covariance_matches_realized_errors_entrywise() {
    // over trials the recursion's Omega must equal the covariance of the
    // errors it actually leaves behind, entry by entry
    let cfg = ChannelConfig::second_moment(3, 6, 5.0).unwrap();
    for kind in EncoderKind::ALL {
        let trials = 40_000;
        let est = estimate_error_cov_mc(kind, &cfg, 3, trials, 19).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let got = est.empirical.get(i, j);
                let want = est.mean_reported.get(i, j);
                // entrywise scale is O(1); products of unit-variance terms
                // have std <= ~1.5, so 3 stderr is ~0.0225 here
                let tol = 3.0 * 1.5 / (trials as f64).sqrt();
                assert!(
                    (got - want).norm() < tol,
                    "{} entry ({i},{j}): {got} vs {want}",
                    kind.name()
                );
            }
        }
        // the realized error covariance never exceeds the prior
        let (_, hi) = est.empirical.eig_range();
        assert!(hi <= 1.0 + 0.03, "{}: top eigenvalue {hi}", kind.name());
    }
}

#[test]
fn gain_curve_is_consistent_with_sweeps() {
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
    let gc = bounds::gain_curve(&grid).unwrap();
    for i in 0..grid.len() {
        assert!(gc.lower[i] <= gc.upper_second[i] + 1e-15);
        assert_eq!(gc.exact_fourth[i], gc.lower[i]);
    }
    // the achievable curve saturates at full gain
    assert_eq!(*gc.lower.last().unwrap(), 1.0);
}
