//! Shifted-divergence bookkeeping: the per-pass amplification factor `theta`,
//! the Lipschitz constant of the clipped prox-linear step, optimal residual
//! schedules and a symbolic ledger that replays the shift-reduction argument.
//!
//! Nothing here evaluates a divergence. The ledger tracks only the upper-bound
//! arithmetic: a shift `tau` that must be driven to zero and the Gaussian
//! cost `alpha * a^2 / (2 sigma^2)` paid for every residual `a` used to do so.

use alloc::vec::Vec;

use crate::error::{invalid, require_nonnegative, require_positive, Error, Result};

/// Relative slack allowed when a residual exactly exhausts the available shift.
const SHIFT_SLACK: f64 = 1e-12;

fn check_lipschitz(l: f64) -> Result<()> {
    if l.is_finite() && l >= 1.0 {
        Ok(())
    } else {
        Err(invalid(
            "L",
            alloc::format!("must be a finite real >= 1, got {l}"),
        ))
    }
}

/// `theta_L(s) = L^{2(s-1)} / sum_{j<s} L^{2j}`, with `theta_L(0) = 0`.
///
/// For `L > 1` this is evaluated as `(1 - L^-2) / (1 - L^-2s)` through
/// `expm1`, which neither overflows for large `s` nor loses precision when
/// `L` is within rounding of one.
pub fn theta(l: f64, s: u64) -> Result<f64> {
    check_lipschitz(l)?;
    Ok(theta_unchecked(l, s))
}

pub(crate) fn theta_unchecked(l: f64, s: u64) -> f64 {
    if s == 0 {
        return 0.0;
    }
    if s == 1 {
        return 1.0;
    }
    if l == 1.0 {
        return 1.0 / s as f64;
    }
    let u = libm::log(l);
    libm::expm1(-2.0 * u) / libm::expm1(-2.0 * s as f64 * u)
}

/// Lipschitz constant `sqrt(1 + 2 lam m (1 + m / (M + m)))` of the clipped
/// prox-linear step for stepsizes `lam <= 1 / (2 (m + M))`.
///
/// When `m = M = 0` the ratio `m / (M + m)` is taken as zero, so the result is 1.
pub fn lipschitz_constant(lam: f64, m: f64, upper: f64) -> Result<f64> {
    require_positive("lam", lam)?;
    require_nonnegative("m", m)?;
    require_nonnegative("M", upper)?;
    Ok(lipschitz_unchecked(lam, m, upper))
}

pub(crate) fn lipschitz_unchecked(lam: f64, m: f64, upper: f64) -> f64 {
    if m == 0.0 {
        return 1.0;
    }
    let ratio = m / (upper + m);
    libm::sqrt(1.0 + 2.0 * lam * m * (1.0 + ratio))
}

/// Optimal residuals for one pass of the shift-reduction argument.
///
/// `residuals[t-1]` is the residual `a_t`, `normalized[t-1]` is
/// `b_t = a_t / (L tau + s)` and `remainders[t-1]` is the normalized leftover
/// shift `R_t`, which satisfies `R_{t+1} = L R_t - b_{t+1}` and `R_T = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSchedule {
    pub horizon: u64,
    pub lipschitz: f64,
    pub tau: f64,
    pub gap: f64,
    pub residuals: Vec<f64>,
    pub normalized: Vec<f64>,
    pub remainders: Vec<f64>,
    /// `S_T = sum_{i<T} L^{2i}`; may be `+inf` for very long horizons.
    pub normalizer: f64,
}

impl ResidualSchedule {
    /// Initial shift budget `L tau + s` absorbed by the schedule.
    pub fn budget(&self) -> f64 {
        self.lipschitz * self.tau + self.gap
    }

    /// `sum_t a_t^2`.
    pub fn squared_norm(&self) -> f64 {
        self.residuals.iter().map(|a| a * a).sum()
    }

    /// Replays the schedule through a [`ShiftLedger`] started at shift `tau`.
    pub fn replay(&self, alpha: f64, sigma: f64) -> Result<ShiftLedger> {
        let mut ledger = ShiftLedger::new(alpha, sigma, self.tau)?;
        for (i, &a) in self.residuals.iter().enumerate() {
            let gap = if i == 0 { self.gap } else { 0.0 };
            ledger = ledger.step(self.lipschitz, 0.0, gap, a)?;
        }
        Ok(ledger)
    }
}

/// Builds the schedule `a_t = (L tau + s) L^{T-1} L^{T-t} / S_T`, the minimizer
/// of `sum a_t^2` subject to every intermediate shift staying nonnegative and
/// the final shift being zero.
pub fn residual_schedule(l: f64, horizon: u64, tau: f64, gap: f64) -> Result<ResidualSchedule> {
    check_lipschitz(l)?;
    if horizon == 0 {
        return Err(invalid("T", "must be a positive integer"));
    }
    require_nonnegative("tau", tau)?;
    require_nonnegative("s", gap)?;
    let budget = l * tau + gap;
    if !(budget > 0.0) {
        return Err(invalid("L*tau + s", "must be positive"));
    }

    let th = theta_unchecked(l, horizon);
    let t_max = horizon as f64;
    // b_t = theta_L(T) L^{-(t-1)}; R_t = L^{t-1} S_{T-t} / S_T.
    let mut normalized = Vec::with_capacity(horizon as usize);
    let mut remainders = Vec::with_capacity(horizon as usize);
    let u = libm::log(l);
    for t in 1..=horizon {
        let tf = t as f64;
        normalized.push(th * libm::exp(-(tf - 1.0) * u));
        let r = if l == 1.0 {
            (t_max - tf) / t_max
        } else {
            libm::exp(-(tf + 1.0) * u) * libm::expm1(-2.0 * (t_max - tf) * u)
                / libm::expm1(-2.0 * t_max * u)
        };
        remainders.push(r);
    }
    let residuals = normalized.iter().map(|b| budget * b).collect();
    let normalizer = if l == 1.0 {
        t_max
    } else {
        libm::expm1(2.0 * t_max * u) / libm::expm1(2.0 * u)
    };

    Ok(ResidualSchedule {
        horizon,
        lipschitz: l,
        tau,
        gap,
        residuals,
        normalized,
        remainders,
        normalizer,
    })
}

/// Symbolic state of the shift-reduction argument: the current
/// infinity-Wasserstein shift bound and the divergence cost paid so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftLedger {
    pub tau: f64,
    pub accumulated_cost: f64,
    pub alpha: f64,
    pub sigma: f64,
    /// Running bound on the magnitude of every term folded into `tau`; the
    /// forward recurrence amplifies rounding by `L` per step, so feasibility
    /// is judged relative to this scale.
    magnitude: f64,
}

impl ShiftLedger {
    pub fn new(alpha: f64, sigma: f64, tau: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(invalid(
                "alpha",
                alloc::format!("must be a finite real > 1, got {alpha}"),
            ));
        }
        require_positive("sigma", sigma)?;
        require_nonnegative("tau", tau)?;
        Ok(Self {
            tau,
            accumulated_cost: 0.0,
            alpha,
            sigma,
            magnitude: tau,
        })
    }

    /// Scale against which rounding in `tau` is measured.
    pub fn rounding_scale(&self) -> f64 {
        self.magnitude
    }

    /// One application of the shift-reduction recurrence through an operator
    /// that is `L`-Lipschitz up to an additive `zeta`, differs from its
    /// neighbor by at most `s`, and is followed by Gaussian noise that absorbs
    /// a residual `a`.
    ///
    /// The new shift is `L tau + zeta + s - a`; a residual larger than the
    /// available shift is rejected.
    pub fn step(&self, l: f64, zeta: f64, s: f64, a: f64) -> Result<Self> {
        check_lipschitz(l)?;
        require_nonnegative("zeta", zeta)?;
        require_nonnegative("s", s)?;
        require_nonnegative("a", a)?;
        let available = l * self.tau + zeta + s;
        let magnitude = l * self.magnitude + zeta + s + a;
        let shift = available - a;
        let slack = SHIFT_SLACK * magnitude;
        if shift < -slack {
            return Err(Error::InfeasibleResidual {
                residual: a,
                available,
            });
        }
        Ok(Self {
            tau: if shift <= slack { 0.0 } else { shift },
            accumulated_cost: self.accumulated_cost
                + self.alpha * a * a / (2.0 * self.sigma * self.sigma),
            magnitude,
            ..*self
        })
    }
}

fn check_order_and_noise(alpha: f64, sigma: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(invalid(
            "alpha",
            alloc::format!("must be a finite real > 1, got {alpha}"),
        ));
    }
    require_positive("sigma", sigma)
}

/// Divergence cost of one pass using the optimal schedule:
/// `(alpha / 2) ((L tau + s) / sigma)^2 theta_L(T)`.
pub fn single_pass_cost(
    l: f64,
    tau: f64,
    s: f64,
    horizon: u64,
    alpha: f64,
    sigma: f64,
) -> Result<f64> {
    check_lipschitz(l)?;
    require_nonnegative("tau", tau)?;
    require_nonnegative("s", s)?;
    if horizon == 0 {
        return Err(invalid("T", "must be a positive integer"));
    }
    check_order_and_noise(alpha, sigma)?;
    let z = (l * tau + s) / sigma;
    Ok(0.5 * alpha * z * z * theta_unchecked(l, horizon))
}

/// Cost of `T` steps of the additive-residual regime (`tau = 0`,
/// `zeta = s`, nonexpansive part): `2 alpha T (zeta / sigma)^2`.
pub fn additive_pass_cost(zeta: f64, horizon: u64, alpha: f64, sigma: f64) -> Result<f64> {
    require_nonnegative("zeta", zeta)?;
    check_order_and_noise(alpha, sigma)?;
    let z = zeta / sigma;
    Ok(2.0 * alpha * horizon as f64 * z * z)
}
