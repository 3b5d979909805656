//! Rényi-DP bounds for the last iterate of cyclically sampled DP-SGD.
//!
//! Every bound is returned as a [`BoundReport`] that lists the hypotheses it
//! relies on. A report whose hypotheses fail is still returned (with value
//! `+inf`) so that callers can print why a regime did not apply.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::divergence::{lipschitz_unchecked, theta_unchecked};
use crate::error::{invalid, require_nonnegative, require_positive, Result};

/// DP-SGD hyperparameters. The cycle length `ell = k / b` and the number of
/// completed passes `E = floor(T / ell)` are always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    /// Rényi order, `> 1`.
    pub alpha: f64,
    /// Standard deviation of the Gaussian noise added to each displacement.
    pub sigma: f64,
    /// Stepsize.
    pub lam: f64,
    /// Per-example l2 clip norm.
    pub clip_norm: f64,
    pub batch_size: u64,
    pub dataset_size: u64,
    pub iterations: u64,
}

impl PrivacyParams {
    pub fn new(
        alpha: f64,
        sigma: f64,
        lam: f64,
        clip_norm: f64,
        batch_size: u64,
        dataset_size: u64,
        iterations: u64,
    ) -> Result<Self> {
        let p = Self {
            alpha,
            sigma,
            lam,
            clip_norm,
            batch_size,
            dataset_size,
            iterations,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return Err(invalid(
                "alpha",
                format!("must be a finite real > 1, got {}", self.alpha),
            ));
        }
        require_positive("sigma", self.sigma)?;
        require_positive("lam", self.lam)?;
        require_positive("clip_norm", self.clip_norm)?;
        if self.batch_size == 0 {
            return Err(invalid("batch_size", "must be a positive integer"));
        }
        if self.dataset_size == 0 {
            return Err(invalid("dataset_size", "must be a positive integer"));
        }
        if !self.dataset_size.is_multiple_of(self.batch_size) {
            return Err(invalid(
                "batch_size",
                format!(
                    "dataset_size {} is not a multiple of batch_size {}",
                    self.dataset_size, self.batch_size
                ),
            ));
        }
        Ok(())
    }

    /// Steps per pass over the data, `k / b`.
    pub fn ell(&self) -> u64 {
        self.dataset_size / self.batch_size
    }

    /// Completed passes, `floor(T / ell)`.
    pub fn epochs(&self) -> u64 {
        self.iterations / self.ell()
    }

    /// `lam C / (b sigma)`, the per-record displacement in noise units.
    fn scaled_sensitivity(&self) -> f64 {
        self.lam * self.clip_norm / (self.batch_size as f64 * self.sigma)
    }
}

/// Curvature constants of the component losses and the diameter of `dom h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSpec {
    /// Weak-convexity parameter `m` (0 for convex losses).
    pub m: f64,
    /// Upper curvature `M`.
    pub upper: f64,
    /// Diameter of `dom h`; `f64::INFINITY` when unbounded.
    pub diameter: f64,
}

impl CurvatureSpec {
    pub fn new(m: f64, upper: f64, diameter: f64) -> Result<Self> {
        let c = Self { m, upper, diameter };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        require_nonnegative("m", self.m)?;
        require_nonnegative("M", self.upper)?;
        if !(self.diameter > 0.0) {
            return Err(invalid(
                "d_h",
                format!("must be positive or infinite, got {}", self.diameter),
            ));
        }
        Ok(())
    }

    /// Largest admissible stepsize `1 / (2 (m + M))`; infinite when `m = M = 0`.
    pub fn stepsize_cap(&self) -> f64 {
        let total = self.m + self.upper;
        if total == 0.0 {
            f64::INFINITY
        } else {
            1.0 / (2.0 * total)
        }
    }

    /// `L_lam` for this curvature.
    pub fn lipschitz(&self, lam: f64) -> f64 {
        lipschitz_unchecked(lam, self.m, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    CurvatureIndependent,
    Diameter,
    MultiEpoch,
    MultiEpochConvex,
    TStar,
    PabiBaseline,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::CurvatureIndependent,
        Regime::Diameter,
        Regime::MultiEpoch,
        Regime::MultiEpochConvex,
        Regime::TStar,
        Regime::PabiBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::CurvatureIndependent => "CurvatureIndependent",
            Regime::Diameter => "Diameter",
            Regime::MultiEpoch => "MultiEpoch",
            Regime::MultiEpochConvex => "MultiEpochConvex",
            Regime::TStar => "TStar",
            Regime::PabiBaseline => "PabiBaseline",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One hypothesis of a bound: a short name, the concrete requirement and
/// whether it held.
#[derive(Debug, Clone, PartialEq)]
pub struct Precondition {
    pub name: &'static str,
    pub required: String,
    pub satisfied: bool,
}

impl Precondition {
    fn new(name: &'static str, required: String, satisfied: bool) -> Self {
        Self {
            name,
            required,
            satisfied,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub regime: Regime,
    /// Bound on `D_alpha(X_T || X'_T)`; `+inf` whenever `valid` is false.
    pub value: f64,
    pub preconditions: Vec<Precondition>,
    pub valid: bool,
    /// Set for order-of-magnitude comparison lines that are not guarantees.
    pub asymptotic: bool,
}

impl BoundReport {
    fn gated(
        regime: Regime,
        preconditions: Vec<Precondition>,
        value: impl FnOnce() -> f64,
    ) -> Self {
        let valid = preconditions.iter().all(|p| p.satisfied);
        Self {
            regime,
            value: if valid { value() } else { f64::INFINITY },
            preconditions,
            valid,
            asymptotic: false,
        }
    }

    /// Report for the case where no regime applies.
    pub fn none() -> Self {
        Self {
            regime: Regime::CurvatureIndependent,
            value: f64::INFINITY,
            preconditions: Vec::new(),
            valid: false,
            asymptotic: false,
        }
    }

    pub fn failed(&self) -> impl Iterator<Item = &Precondition> {
        self.preconditions.iter().filter(|p| !p.satisfied)
    }
}

fn full_pass(p: &PrivacyParams) -> Precondition {
    Precondition::new(
        "T >= ell",
        format!("T >= {}", p.ell()),
        p.iterations >= p.ell(),
    )
}

fn small_stepsize(p: &PrivacyParams, c: &CurvatureSpec) -> Precondition {
    let cap = c.stepsize_cap();
    Precondition::new("lam <= 1/(2(m+M))", format!("lam <= {cap:e}"), p.lam <= cap)
}

/// `8 alpha T (lam C / sigma)^2`, valid for any stepsize once `T >= ell`.
pub fn bound_curvature_independent(p: &PrivacyParams) -> BoundReport {
    BoundReport::gated(
        Regime::CurvatureIndependent,
        alloc::vec![full_pass(p)],
        || {
            let z = p.lam * p.clip_norm / p.sigma;
            8.0 * p.alpha * p.iterations as f64 * z * z
        },
    )
}

/// `(alpha / (2 sigma^2)) (L_lam d_h + 2 lam C / b)^2` for bounded `dom h`.
pub fn bound_diameter(p: &PrivacyParams, c: &CurvatureSpec) -> BoundReport {
    let pre = alloc::vec![
        small_stepsize(p, c),
        Precondition::new(
            "d_h < inf",
            String::from("finite diameter"),
            c.diameter.is_finite()
        ),
    ];
    BoundReport::gated(Regime::Diameter, pre, || {
        let l = c.lipschitz(p.lam);
        let shift = l * c.diameter + 2.0 * p.lam * p.clip_norm / p.batch_size as f64;
        p.alpha / (2.0 * p.sigma * p.sigma) * shift * shift
    })
}

/// `4 alpha (lam C / (b sigma))^2 [theta(T - E ell) + E theta(ell)]` with
/// `theta = theta_{L_lam}`.
pub fn bound_multi_epoch(p: &PrivacyParams, c: &CurvatureSpec) -> BoundReport {
    let pre = alloc::vec![small_stepsize(p, c), full_pass(p)];
    BoundReport::gated(Regime::MultiEpoch, pre, || {
        let l = c.lipschitz(p.lam);
        let ell = p.ell();
        let e = p.epochs();
        let rem = p.iterations - e * ell;
        let z = p.scaled_sensitivity();
        4.0 * p.alpha * z * z * (theta_unchecked(l, rem) + e as f64 * theta_unchecked(l, ell))
    })
}

/// Convex specialization: `4 alpha (lam C / (b sigma))^2 (1/(T - E ell) + E / ell)`,
/// the first term being zero when `T = E ell`.
pub fn bound_multi_epoch_convex(p: &PrivacyParams, c: &CurvatureSpec) -> BoundReport {
    let cap = if c.upper == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (2.0 * c.upper)
    };
    let pre = alloc::vec![
        Precondition::new("m == 0", String::from("convex components"), c.m == 0.0),
        Precondition::new("lam <= 1/(2M)", format!("lam <= {cap:e}"), p.lam <= cap),
        full_pass(p),
    ];
    BoundReport::gated(Regime::MultiEpochConvex, pre, || {
        let ell = p.ell();
        let e = p.epochs();
        let rem = p.iterations - e * ell;
        let tail = if rem == 0 { 0.0 } else { 1.0 / rem as f64 };
        let per_pass = 1.0 / ell as f64;
        let z = p.scaled_sensitivity();
        4.0 * p.alpha * z * z * (tail + e as f64 * per_pass)
    })
}

/// Bound given the first step `t_star` whose batch holds the differing record:
/// `2 alpha (lam C / (b sigma))^2 [E' theta(ell) + theta(T - t* - 1 - E' ell)]`
/// with `E' = floor((T - t* - 1) / ell)`.
pub fn bound_tstar(p: &PrivacyParams, c: &CurvatureSpec, t_star: u64) -> BoundReport {
    let pre = alloc::vec![
        small_stepsize(p, c),
        Precondition::new("t* >= 1", format!("t* = {t_star}"), t_star >= 1),
        Precondition::new(
            "T >= t* + 1",
            format!("T >= {}", t_star.saturating_add(1)),
            t_star >= 1 && p.iterations > t_star,
        ),
    ];
    BoundReport::gated(Regime::TStar, pre, || {
        let l = c.lipschitz(p.lam);
        let ell = p.ell();
        let span = p.iterations - t_star - 1;
        let e = span / ell;
        let z = p.scaled_sensitivity();
        2.0 * p.alpha
            * z
            * z
            * (e as f64 * theta_unchecked(l, ell) + theta_unchecked(l, span - e * ell))
    })
}

/// All guarantee regimes that need no extra inputs, in selection order.
pub fn guarantee_reports(p: &PrivacyParams, c: &CurvatureSpec) -> [BoundReport; 4] {
    [
        bound_curvature_independent(p),
        bound_diameter(p, c),
        bound_multi_epoch(p, c),
        bound_multi_epoch_convex(p, c),
    ]
}

/// Smallest valid guarantee. `TStar` (position dependent) and the PABI line
/// (not a guarantee) never compete. Ties go to the earlier regime.
pub fn best_bound(p: &PrivacyParams, c: &CurvatureSpec) -> BoundReport {
    let mut best: Option<BoundReport> = None;
    for report in guarantee_reports(p, c) {
        if !report.valid {
            continue;
        }
        match &best {
            Some(b) if b.value <= report.value => {}
            _ => best = Some(report),
        }
    }
    best.unwrap_or_else(BoundReport::none)
}

/// PABI comparison line `(alpha E / ell) (lam Q / sigma)^2` for a
/// `Q`-Lipschitz loss without clipping or batching. Asymptotic only; the
/// unknown constant is taken as 1.
pub fn pabi_baseline(p: &PrivacyParams, lipschitz_q: f64) -> Result<BoundReport> {
    require_positive("Q", lipschitz_q)?;
    let z = p.lam * lipschitz_q / p.sigma;
    let value = p.alpha * p.epochs() as f64 / p.ell() as f64 * z * z;
    Ok(BoundReport {
        regime: Regime::PabiBaseline,
        value,
        preconditions: Vec::new(),
        valid: true,
        asymptotic: true,
    })
}

/// Standard conversion of an `(alpha, eps)`-RDP guarantee to `(eps', delta)`-DP:
/// `eps + log(1 / delta) / (alpha - 1)`.
pub fn rdp_to_dp(rdp_epsilon: f64, alpha: f64, delta: f64) -> Result<f64> {
    if rdp_epsilon.is_nan() || rdp_epsilon < 0.0 {
        return Err(invalid(
            "epsilon",
            format!("must be nonnegative, got {rdp_epsilon}"),
        ));
    }
    if !(alpha > 1.0) {
        return Err(invalid("alpha", format!("must be > 1, got {alpha}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    Ok(rdp_epsilon + libm::log(1.0 / delta) / (alpha - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(alpha: f64, sigma: f64, lam: f64, c: f64, b: u64, k: u64, t: u64) -> PrivacyParams {
        PrivacyParams::new(alpha, sigma, lam, c, b, k, t).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * b.abs().max(1e-300)
    }

    #[test]
    fn params_validation() {
        assert!(PrivacyParams::new(1.0, 1.0, 0.1, 1.0, 1, 4, 4).is_err());
        assert!(PrivacyParams::new(2.0, 0.0, 0.1, 1.0, 1, 4, 4).is_err());
        assert!(PrivacyParams::new(2.0, 1.0, 0.1, 1.0, 3, 4, 4).is_err());
        assert!(PrivacyParams::new(2.0, 1.0, 0.1, 1.0, 0, 4, 4).is_err());
        let p = params(2.0, 1.0, 0.1, 1.0, 2, 8, 9);
        assert_eq!(p.ell(), 4);
        assert_eq!(p.epochs(), 2);
        assert!(CurvatureSpec::new(-1.0, 1.0, 1.0).is_err());
        assert!(CurvatureSpec::new(0.0, 1.0, 0.0).is_err());
        assert!(CurvatureSpec::new(0.0, 1.0, f64::INFINITY).is_ok());
    }

    #[test]
    fn curvature_independent_examples() {
        let r = bound_curvature_independent(&params(2.0, 1.0, 0.1, 1.0, 1, 1, 10));
        assert!(r.valid && close(r.value, 1.6));
        let r = bound_curvature_independent(&params(2.0, 10.0, 0.1, 1.0, 1, 1, 10));
        assert!(close(r.value, 0.016));
        let r = bound_curvature_independent(&params(2.0, 1.0, 0.1, 1.0, 1, 20, 10));
        assert!(!r.valid && r.value == f64::INFINITY);
    }

    #[test]
    fn diameter_examples() {
        let c = CurvatureSpec::new(0.0, 1.0, 1.0).unwrap();
        let r = bound_diameter(&params(2.0, 1.0, 0.1, 1.0, 2, 2, 1), &c);
        assert!(r.valid && close(r.value, 1.21), "{}", r.value);
        let c = CurvatureSpec::new(0.0, 1.0, f64::INFINITY).unwrap();
        assert!(!bound_diameter(&params(2.0, 1.0, 0.1, 1.0, 2, 2, 1), &c).valid);
        let c = CurvatureSpec::new(0.5, 0.5, 1.0).unwrap();
        let r = bound_diameter(&params(2.0, 1.0, 0.6, 1.0, 2, 2, 1), &c);
        assert!(!r.valid);
        assert_eq!(r.failed().next().unwrap().name, "lam <= 1/(2(m+M))");
    }

    #[test]
    fn multi_epoch_examples() {
        let c = CurvatureSpec::new(0.0, 1.0, f64::INFINITY).unwrap();
        let p8 = params(2.0, 1.0, 0.1, 1.0, 1, 4, 8);
        let p9 = params(2.0, 1.0, 0.1, 1.0, 1, 4, 9);
        assert!(close(bound_multi_epoch(&p8, &c).value, 0.04));
        assert!(close(bound_multi_epoch(&p9, &c).value, 0.12));
        assert_eq!(
            bound_multi_epoch(&p8, &c).value,
            bound_multi_epoch_convex(&p8, &c).value
        );
        assert_eq!(
            bound_multi_epoch(&p9, &c).value,
            bound_multi_epoch_convex(&p9, &c).value
        );

        assert!(close(bound_multi_epoch_convex(&p8, &c).value, 0.04));
        assert!(close(bound_multi_epoch_convex(&p9, &c).value, 0.12));
        let p4 = params(2.0, 1.0, 0.1, 1.0, 1, 4, 4);
        assert!(close(
            bound_multi_epoch_convex(&p4, &c).value,
            4.0 * 2.0 * 0.01 * 0.25
        ));
    }

    #[test]
    fn multi_epoch_convex_requires_m_zero() {
        let c = CurvatureSpec::new(0.1, 1.0, f64::INFINITY).unwrap();
        let r = bound_multi_epoch_convex(&params(2.0, 1.0, 0.1, 1.0, 1, 4, 8), &c);
        assert!(!r.valid);
    }

    #[test]
    fn tstar_examples() {
        let c = CurvatureSpec::new(0.0, 1.0, f64::INFINITY).unwrap();
        let p = params(2.0, 1.0, 0.1, 1.0, 1, 4, 10);
        let r = bound_tstar(&p, &c, 1);
        assert!(close(r.value, 0.02), "{}", r.value);
        assert_eq!(bound_tstar(&p, &c, 9).value, 0.0);
        assert!(!bound_tstar(&p, &c, 10).valid);
        assert!(!bound_tstar(&p, &c, 0).valid);

        let c = CurvatureSpec::new(0.5, 1.0, f64::INFINITY).unwrap();
        let cap = c.stepsize_cap();
        let small = bound_tstar(&params(2.0, 1.0, cap, 1.0, 2, 16, 40), &c, 1).value;
        let large = bound_tstar(&params(2.0, 1.0, cap, 1.0, 4, 16, 40), &c, 1).value;
        assert!(large < small);
    }

    #[test]
    fn best_bound_selection() {
        let c = CurvatureSpec::new(0.0, 1.0, f64::INFINITY).unwrap();
        let b = best_bound(&params(2.0, 1.0, 0.1, 1.0, 1, 4, 8), &c);
        assert_eq!(b.regime, Regime::MultiEpoch);
        assert!(close(b.value, 0.04));

        let c = CurvatureSpec::new(1.0, 1.0, 1.0).unwrap();
        let b = best_bound(&params(2.0, 1.0, 0.5, 1.0, 1, 4, 8), &c);
        assert_eq!(b.regime, Regime::CurvatureIndependent);

        let c = CurvatureSpec::new(1.0, 1.0, f64::INFINITY).unwrap();
        let b = best_bound(&params(2.0, 1.0, 0.5, 1.0, 1, 4, 2), &c);
        assert!(!b.valid && b.value == f64::INFINITY);
    }

    #[test]
    fn pabi_examples() {
        // E = 3, ell = 4
        let p = params(2.0, 1.0, 0.1, 1.0, 1, 4, 12);
        let r = pabi_baseline(&p, 1.0).unwrap();
        assert!(r.asymptotic && close(r.value, 0.015));
        assert!(close(pabi_baseline(&p, 2.0).unwrap().value, 0.06));
        let p = params(2.0, 1.0, 0.1, 1.0, 1, 4, 3);
        assert_eq!(pabi_baseline(&p, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn rdp_to_dp_examples() {
        assert!(close(rdp_to_dp(0.0, 2.0, (-1.0f64).exp()).unwrap(), 1.0));
        assert!((rdp_to_dp(1.6, 2.0, 1e-6).unwrap() - 15.4155).abs() < 1e-4);
        assert!((rdp_to_dp(0.7, 1e9, 1e-6).unwrap() - 0.7).abs() < 1e-6);
        assert!(rdp_to_dp(0.7, 1.0, 1e-6).is_err());
        assert!(rdp_to_dp(0.7, 2.0, 0.0).is_err());
        assert!(rdp_to_dp(0.7, 2.0, 1.0).is_err());
        assert_eq!(rdp_to_dp(f64::INFINITY, 2.0, 0.5).unwrap(), f64::INFINITY);
    }

    fn arb_setting() -> impl Strategy<Value = (PrivacyParams, CurvatureSpec)> {
        (
            1.1f64..16.0,
            0.2f64..4.0,
            0.01f64..1.0,
            0.1f64..4.0,
            1u64..4,
            1u64..6,
            1u64..40,
            0.0f64..2.0,
            0.01f64..3.0,
            prop_oneof![Just(f64::INFINITY), 0.1f64..5.0],
        )
            .prop_map(|(alpha, sigma, frac, clip, b, cycles, t, m, upper, d)| {
                let c = CurvatureSpec::new(m, upper, d).unwrap();
                let lam = frac * c.stepsize_cap();
                (
                    PrivacyParams::new(alpha, sigma, lam, clip, b, b * cycles, t).unwrap(),
                    c,
                )
            })
    }

    fn all_values(p: &PrivacyParams, c: &CurvatureSpec) -> [f64; 5] {
        [
            bound_curvature_independent(p).value,
            bound_diameter(p, c).value,
            bound_multi_epoch(p, c).value,
            bound_multi_epoch_convex(p, c).value,
            bound_tstar(p, c, 1).value,
        ]
    }

    fn le(a: f64, b: f64) -> bool {
        a <= b * (1.0 + 1e-12) || (a.is_infinite() && b.is_infinite())
    }

    proptest! {
        #[test]
        fn monotone_in_sigma_lam_clip_alpha((p, c) in arb_setting(), grow in 1.0f64..3.0) {
            let base = all_values(&p, &c);
            let more_noise = all_values(&PrivacyParams { sigma: p.sigma * grow, ..p }, &c);
            let more_clip = all_values(&PrivacyParams { clip_norm: p.clip_norm * grow, ..p }, &c);
            let more_alpha = all_values(&PrivacyParams { alpha: p.alpha * grow, ..p }, &c);
            let less_lam = all_values(&PrivacyParams { lam: p.lam / grow, ..p }, &c);
            for i in 0..5 {
                prop_assert!(le(more_noise[i], base[i]));
                prop_assert!(le(base[i], more_clip[i]));
                prop_assert!(le(base[i], more_alpha[i]));
                prop_assert!(le(less_lam[i], base[i]));
            }
        }

        #[test]
        fn report_invariant((p, c) in arb_setting()) {
            for r in guarantee_reports(&p, &c) {
                prop_assert_eq!(r.valid, r.preconditions.iter().all(|q| q.satisfied));
                if !r.valid { prop_assert_eq!(r.value, f64::INFINITY); }
                else { prop_assert!(r.value >= 0.0 && r.value.is_finite()); }
            }
        }

        #[test]
        fn convex_specialization_is_exact((p, c) in arb_setting()) {
            let c = CurvatureSpec { m: 0.0, ..c };
            let p = PrivacyParams { lam: p.lam.min(c.stepsize_cap()), ..p };
            prop_assert_eq!(bound_multi_epoch(&p, &c).value, bound_multi_epoch_convex(&p, &c).value);
        }

        #[test]
        fn tstar_after_first_cycle_is_half_multi_epoch_or_less((p, c) in arb_setting()) {
            // t* = ell - 1 drops exactly one full cycle from the span.
            let ell = p.ell();
            if ell >= 2 && p.iterations >= ell {
                let me = bound_multi_epoch(&p, &c);
                let ts = bound_tstar(&p, &c, ell - 1);
                if me.valid && ts.valid {
                    prop_assert!(le(ts.value, me.value / 2.0));
                }
            }
        }

        #[test]
        fn best_is_minimum((p, c) in arb_setting()) {
            let best = best_bound(&p, &c);
            for r in guarantee_reports(&p, &c) {
                prop_assert!(best.value <= r.value);
            }
        }
    }
}
