//! Noise calibration and stepsize rules for a target `(alpha, eps)`-RDP level.

use crate::divergence::{lipschitz_unchecked, theta_unchecked};
use crate::error::{invalid, require_nonnegative, require_positive, Result};

/// Smallest `s` with `theta_L(s) <= xi (1 - L^-2)` for every integer `s >= s_min`:
/// `s_min = log_L sqrt(xi / (xi - 1))`.
pub fn theta_upper_threshold(l: f64, xi: f64) -> Result<f64> {
    if !(l.is_finite() && l > 1.0) {
        return Err(invalid(
            "L",
            alloc::format!("must be a finite real > 1, got {l}"),
        ));
    }
    if !(xi > 1.0) {
        return Err(invalid("xi", alloc::format!("must be > 1, got {xi}")));
    }
    // log(xi / (xi - 1)) = -log1p(-1 / xi)
    Ok(-0.5 * libm::log1p(-1.0 / xi) / libm::log(l))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanResult {
    /// Stepsize `1 / (2 (M + m))`.
    pub lam_bar: f64,
    /// Noise level that meets the target.
    pub sigma_bar: f64,
    /// Factor by which the closed-form noise level had to be raised to meet
    /// the target; `sigma_bar / sigma_inflation` is the closed form itself.
    pub sigma_inflation: f64,
    /// Minimum cycle length; `+inf` when `m = 0`.
    pub ell_bar: f64,
    /// `4 alpha (C lam_bar / (b sigma_bar))^2 (1 + 4 m E / (M + m))`.
    pub achieved_bound: f64,
    pub epsilon: f64,
}

impl PlanResult {
    /// With `m = 0` no finite cycle length satisfies the plan; the convex
    /// multi-epoch bound should be used directly.
    pub fn is_convex_degenerate(&self) -> bool {
        self.ell_bar.is_infinite()
    }

    /// Cycle length to use in practice: `ceil(ell_bar)`, or `None` when degenerate.
    pub fn min_cycle_length(&self) -> Option<u64> {
        if self.is_convex_degenerate() {
            None
        } else {
            Some(libm::ceil(self.ell_bar).max(1.0) as u64)
        }
    }
}

fn check_curvature(m: f64, upper: f64) -> Result<()> {
    require_nonnegative("m", m)?;
    require_nonnegative("M", upper)?;
    if m + upper == 0.0 {
        return Err(invalid("m + M", "must be positive"));
    }
    Ok(())
}

/// Calibrates `(lam_bar, sigma_bar, ell_bar)` so that any run with stepsize
/// `lam_bar`, noise `sigma >= sigma_bar`, cycle length `ell >= ell_bar` and
/// `E` passes is `(alpha, epsilon)`-RDP.
///
/// The noise level starts from the closed form
/// `(C lam_bar / (2 b)) sqrt((1 / (alpha eps)) (1 + 4 m E / (M + m)))` and is
/// raised by the smallest factor that brings the achieved bound to `epsilon`.
pub fn plan_for_epsilon(
    m: f64,
    upper: f64,
    clip_norm: f64,
    batch_size: u64,
    epochs: u64,
    alpha: f64,
    epsilon: f64,
) -> Result<PlanResult> {
    check_curvature(m, upper)?;
    require_positive("clip_norm", clip_norm)?;
    if batch_size == 0 {
        return Err(invalid("batch_size", "must be a positive integer"));
    }
    if epochs == 0 {
        return Err(invalid("E", "must be a positive integer"));
    }
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(invalid(
            "alpha",
            alloc::format!("must be a finite real > 1, got {alpha}"),
        ));
    }
    require_positive("epsilon", epsilon)?;

    let lam_bar = 1.0 / (2.0 * (upper + m));
    let growth = 1.0 + 4.0 * m / (upper + m) * epochs as f64;
    let scale = clip_norm * lam_bar / batch_size as f64;
    let closed_form = scale / 2.0 * libm::sqrt(growth / (alpha * epsilon));
    let achieved = |sigma: f64| {
        let z = scale / sigma;
        4.0 * alpha * z * z * growth
    };

    let mut sigma_bar = closed_form;
    let first = achieved(sigma_bar);
    if first > epsilon {
        sigma_bar *= libm::sqrt(first / epsilon);
        while achieved(sigma_bar) > epsilon {
            sigma_bar = libm::nextafter(sigma_bar, f64::INFINITY);
        }
    }

    let ell_bar = if m == 0.0 {
        f64::INFINITY
    } else {
        core::f64::consts::LN_2 / libm::log1p(m * lam_bar)
    };

    Ok(PlanResult {
        lam_bar,
        sigma_bar,
        sigma_inflation: sigma_bar / closed_form,
        ell_bar,
        achieved_bound: achieved(sigma_bar),
        epsilon,
    })
}

/// Stepsize `min(1 / sqrt(E), 1 / (2 (m + M)))`, under which the multi-epoch
/// bound is at most `4 alpha (C / (b sigma))^2 (1 + theta_{L_lam}(ell))` for
/// every number of passes `E`.
pub fn epoch_independent_stepsize(epochs: u64, m: f64, upper: f64) -> Result<f64> {
    if epochs == 0 {
        return Err(invalid("E", "must be a positive integer"));
    }
    check_curvature(m, upper)?;
    Ok((1.0 / libm::sqrt(epochs as f64)).min(1.0 / (2.0 * (m + upper))))
}

/// Right-hand side `4 alpha (C / (b sigma))^2 (1 + theta_{L_lam}(ell))` of the
/// epoch-independent guarantee.
#[allow(clippy::too_many_arguments)]
pub fn epoch_independent_bound(
    lam: f64,
    m: f64,
    upper: f64,
    clip_norm: f64,
    batch_size: u64,
    sigma: f64,
    alpha: f64,
    ell: u64,
) -> f64 {
    let z = clip_norm / (batch_size as f64 * sigma);
    4.0 * alpha * z * z * (1.0 + theta_unchecked(lipschitz_unchecked(lam, m, upper), ell))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accountant::{bound_multi_epoch, CurvatureSpec, PrivacyParams};
    use crate::divergence::theta;

    #[test]
    fn threshold_examples() {
        let v = theta_upper_threshold(2f64.sqrt(), 2.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15, "{v}");
        assert!(theta_upper_threshold(1.5, 1e12).unwrap() < 1e-10);
        let v = theta_upper_threshold(1.1, 2.0).unwrap();
        assert!((v - 0.5 * 2f64.ln() / 1.1f64.ln()).abs() < 1e-12);
        assert!((v - 3.636).abs() < 1e-3);
        assert!(theta(1.1, 4).unwrap() <= 2.0 * (1.0 - 1.1f64.powi(-2)));
        assert!(theta_upper_threshold(1.0, 2.0).is_err());
        assert!(theta_upper_threshold(1.5, 1.0).is_err());
    }

    #[test]
    fn threshold_is_sufficient() {
        for &l in &[1.01, 1.1, 1.3, 2.0, 3.5] {
            for &xi in &[1.05, 1.5, 2.0, 4.0, 50.0] {
                let s_min = theta_upper_threshold(l, xi).unwrap();
                let start = s_min.ceil().max(1.0) as u64;
                for s in start..start + 50 {
                    assert!(theta(l, s).unwrap() <= xi * (1.0 - 1.0 / (l * l)) * (1.0 + 1e-14));
                }
            }
        }
    }

    #[test]
    fn plan_example() {
        let plan = plan_for_epsilon(1.0, 1.0, 1.0, 1, 1, 2.0, 0.1).unwrap();
        assert_eq!(plan.lam_bar, 0.25);
        let closed_form = plan.sigma_bar / plan.sigma_inflation;
        assert!(
            (closed_form - 0.125 * 15f64.sqrt()).abs() < 1e-12,
            "{closed_form}"
        );
        assert!((plan.ell_bar - 2f64.ln() / 1.25f64.ln()).abs() < 1e-12);
        assert!((plan.ell_bar - 3.106).abs() < 1e-3);
        assert!(plan.achieved_bound <= 0.1);
        assert_eq!(plan.min_cycle_length(), Some(4));
    }

    #[test]
    fn plan_convex_degenerate() {
        let plan = plan_for_epsilon(0.0, 1.0, 1.0, 1, 3, 2.0, 0.5).unwrap();
        assert!(plan.is_convex_degenerate());
        assert_eq!(plan.min_cycle_length(), None);
        assert!(plan.achieved_bound <= 0.5);
        assert!(plan_for_epsilon(0.0, 0.0, 1.0, 1, 3, 2.0, 0.5).is_err());
        assert!(plan_for_epsilon(1.0, 1.0, 1.0, 1, 0, 2.0, 0.5).is_err());
    }

    #[test]
    fn plan_epoch_scaling() {
        for &(m, upper) in &[(1.0, 1.0), (0.1, 3.0), (2.0, 0.5)] {
            let a = plan_for_epsilon(m, upper, 1.0, 2, 3, 4.0, 0.2).unwrap();
            let b = plan_for_epsilon(m, upper, 1.0, 2, 6, 4.0, 0.2).unwrap();
            let r = m / (upper + m);
            let want = ((1.0 + 24.0 * r) / (1.0 + 12.0 * r)).sqrt();
            assert!((b.sigma_bar / a.sigma_bar - want).abs() < 1e-9);
            assert!(b.sigma_bar / a.sigma_bar < 2f64.sqrt());
        }
    }

    #[test]
    fn plan_guarantee_holds_for_multi_epoch_bound() {
        let (m, upper, clip, b, e, alpha, eps) = (0.7, 1.3, 1.5, 2u64, 3u64, 4.0, 0.3);
        let plan = plan_for_epsilon(m, upper, clip, b, e, alpha, eps).unwrap();
        let ell = plan.min_cycle_length().unwrap();
        let c = CurvatureSpec::new(m, upper, f64::INFINITY).unwrap();
        for extra in 0..5u64 {
            let ell = ell + extra;
            let p = PrivacyParams::new(
                alpha,
                plan.sigma_bar,
                plan.lam_bar,
                clip,
                b,
                b * ell,
                e * ell,
            )
            .unwrap();
            let r = bound_multi_epoch(&p, &c);
            assert!(r.valid && r.value <= eps, "{} > {eps}", r.value);
        }
    }

    #[test]
    fn stepsize_examples() {
        assert_eq!(epoch_independent_stepsize(1, 1.0, 1.0).unwrap(), 0.25);
        assert_eq!(epoch_independent_stepsize(100, 0.01, 0.01).unwrap(), 0.1);
        assert!(epoch_independent_stepsize(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn stepsize_rule_bounds_every_epoch_count() {
        let (m, upper, clip, b, sigma, alpha, ell) = (0.3, 0.8, 1.0, 1u64, 1.0, 2.0, 5u64);
        let c = CurvatureSpec::new(m, upper, f64::INFINITY).unwrap();
        for &e in &[1u64, 4, 16, 64] {
            let lam = epoch_independent_stepsize(e, m, upper).unwrap();
            let p = PrivacyParams::new(alpha, sigma, lam, clip, b, b * ell, e * ell).unwrap();
            let bound = bound_multi_epoch(&p, &c);
            let l = c.lipschitz(lam);
            let z = lam * clip / (b as f64 * sigma);
            let chain = 4.0 * alpha * z * z * (1.0 + e as f64 * theta(l, ell).unwrap());
            let rhs = epoch_independent_bound(lam, m, upper, clip, b, sigma, alpha, ell);
            assert!(bound.value <= chain * (1.0 + 1e-14));
            assert!(chain <= rhs * (1.0 + 1e-14), "E={e}: {chain} > {rhs}");
        }
    }
}
