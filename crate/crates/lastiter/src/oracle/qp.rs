//! Brute-force solver for the residual allocation problem
//!
//! ```text
//! minimize   0.5 * |a|^2
//! subject to r_t(a) = L^(t-1) (L tau + s) - sum_{i<=t} a_i L^(t-i) >= 0,  t < T
//!            r_T(a) = 0
//! ```
//!
//! by enumerating every active set of the inequality constraints and keeping
//! the KKT point with the smallest objective.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MAX_HORIZON: u64 = 12;
const KKT_TOLERANCE: f64 = 1e-10;

/// Constraint rows `G` and right-hand sides `c` with `r(a) = c - G a`.
fn constraints(l: f64, horizon: usize, tau: f64, gap: f64) -> (DMatrix<f64>, DVector<f64>) {
    let g = DMatrix::from_fn(horizon, horizon, |t, i| {
        if i <= t {
            l.powi((t - i) as i32)
        } else {
            0.0
        }
    });
    let c = DVector::from_fn(horizon, |t, _| l.powi(t as i32) * (l * tau + gap));
    (g, c)
}

/// Residual vector `r(a)` for the problem above.
pub fn residuals(l: f64, tau: f64, gap: f64, a: &[f64]) -> Vec<f64> {
    let (g, c) = constraints(l, a.len(), tau, gap);
    (c - g * DVector::from_column_slice(a))
        .iter()
        .copied()
        .collect()
}

/// Minimizer of the residual allocation problem for `1 <= T <= MAX_HORIZON`.
pub fn qp_residual_oracle(l: f64, horizon: u64, tau: f64, gap: f64) -> Result<Vec<f64>> {
    if !(l.is_finite() && l >= 1.0) {
        return Err(Error::Oracle(format!(
            "L must be a finite real >= 1, got {l}"
        )));
    }
    if horizon == 0 || horizon > MAX_HORIZON {
        return Err(Error::Oracle(format!(
            "T must lie in 1..={MAX_HORIZON}, got {horizon}"
        )));
    }
    if !(tau >= 0.0 && gap >= 0.0 && tau.is_finite() && gap.is_finite()) {
        return Err(Error::Oracle(
            "tau and s must be finite and nonnegative".into(),
        ));
    }
    let n = horizon as usize;
    let (g, c) = constraints(l, n, tau, gap);
    let scale = c.amax().max(1.0);

    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let active: Vec<usize> = (0..n - 1)
            .filter(|&t| mask & (1 << t) != 0)
            .chain([n - 1])
            .collect();
        let rows = DMatrix::from_fn(active.len(), n, |r, i| g[(active[r], i)]);
        let rhs = DVector::from_fn(active.len(), |r, _| c[active[r]]);
        let gram = &rows * rows.transpose();
        let Some(nu) = gram.lu().solve(&rhs) else {
            continue;
        };
        let a = rows.transpose() * &nu;
        // a = G_A' nu; an active inequality t < T has multiplier -nu_t >= 0.
        let dual_ok = (0..active.len() - 1).all(|r| nu[r] <= KKT_TOLERANCE * scale);
        let r = &c - &g * &a;
        let primal_ok = r.iter().take(n - 1).all(|&v| v >= -KKT_TOLERANCE * scale)
            && r[n - 1].abs() <= KKT_TOLERANCE * scale;
        if !(dual_ok && primal_ok) {
            continue;
        }
        let obj = 0.5 * a.norm_squared();
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, a));
        }
    }
    best.map(|(_, a)| a.iter().copied().collect())
        .ok_or_else(|| Error::Oracle("no KKT point found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_case() {
        let a = qp_residual_oracle(1.0, 3, 0.0, 1.0).unwrap();
        for v in a {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_step_example() {
        let a = qp_residual_oracle(2.0, 2, 0.0, 1.0).unwrap();
        assert!(
            (a[0] - 0.8).abs() < 1e-12 && (a[1] - 0.4).abs() < 1e-12,
            "{a:?}"
        );
    }

    #[test]
    fn single_step_pays_everything() {
        let a = qp_residual_oracle(1.5, 1, 0.4, 0.3).unwrap();
        assert!((a[0] - (1.5 * 0.4 + 0.3)).abs() < 1e-15);
    }

    #[test]
    fn minimizer_is_feasible() {
        for &l in &[1.0, 1.25, 2.0, 3.0] {
            for horizon in 1..=6 {
                let a = qp_residual_oracle(l, horizon, 0.5, 0.2).unwrap();
                let r = residuals(l, 0.5, 0.2, &a);
                assert!(r[..r.len() - 1].iter().all(|&v| v >= -1e-10));
                assert!(r[r.len() - 1].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(qp_residual_oracle(0.5, 2, 0.0, 1.0).is_err());
        assert!(qp_residual_oracle(1.0, 0, 0.0, 1.0).is_err());
        assert!(qp_residual_oracle(1.0, 13, 0.0, 1.0).is_err());
        assert!(qp_residual_oracle(1.0, 2, -1.0, 1.0).is_err());
    }
}
