use nalgebra::DVector;

use crate::error::{invalid, Result};

/// Euclidean projection onto the radius-`C` ball, i.e. per-example gradient
/// clipping. An infinite `C` never clips.
pub fn clip(y: &DVector<f64>, c: f64) -> DVector<f64> {
    let norm = y.norm();
    if norm <= c {
        y.clone()
    } else {
        y * (c / norm)
    }
}

/// Closed convex regularizer `h` of the composite objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularizerSpec {
    Zero,
    /// `w ||x||_1`.
    L1 {
        weight: f64,
    },
    /// Indicator of the centered ball of radius `R`.
    Ball {
        radius: f64,
    },
}

/// Relative tolerance on the ball constraint for points produced by projection.
const BALL_TOLERANCE: f64 = 1e-12;

impl RegularizerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RegularizerSpec::Zero => Ok(()),
            RegularizerSpec::L1 { weight } if weight.is_finite() && weight > 0.0 => Ok(()),
            RegularizerSpec::L1 { weight } => Err(invalid(
                "weight",
                alloc::format!("must be positive, got {weight}"),
            )),
            RegularizerSpec::Ball { radius } if radius.is_finite() && radius > 0.0 => Ok(()),
            RegularizerSpec::Ball { radius } => Err(invalid(
                "radius",
                alloc::format!("must be positive, got {radius}"),
            )),
        }
    }

    /// Diameter of `dom h`.
    pub fn diameter(&self) -> f64 {
        match *self {
            RegularizerSpec::Ball { radius } => 2.0 * radius,
            _ => f64::INFINITY,
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        match *self {
            RegularizerSpec::Ball { radius } => x.norm() <= radius * (1.0 + BALL_TOLERANCE),
            _ => x.iter().all(|v| v.is_finite()),
        }
    }

    /// `prox_{lam h}(z)`.
    pub fn prox(&self, lam: f64, z: &DVector<f64>) -> DVector<f64> {
        match *self {
            RegularizerSpec::Zero => z.clone(),
            RegularizerSpec::L1 { weight } => {
                let t = lam * weight;
                z.map(|v| {
                    if v > t {
                        v - t
                    } else if v < -t {
                        v + t
                    } else {
                        0.0
                    }
                })
            }
            RegularizerSpec::Ball { radius } => clip(z, radius),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip(&v(&[3.0, 4.0]), 10.0), v(&[3.0, 4.0]));
        let c = clip(&v(&[3.0, 4.0]), 1.0);
        assert!((c - v(&[0.6, 0.8])).norm() < 1e-15);
        assert_eq!(clip(&v(&[0.0, 0.0]), 2.0), v(&[0.0, 0.0]));
        assert_eq!(clip(&v(&[1e300, 0.0]), f64::INFINITY), v(&[1e300, 0.0]));
    }

    #[test]
    fn prox_examples() {
        let l1 = RegularizerSpec::L1 { weight: 1.0 };
        assert_eq!(l1.prox(0.5, &v(&[1.0, -0.3])), v(&[0.5, 0.0]));
        let ball = RegularizerSpec::Ball { radius: 1.0 };
        assert_eq!(ball.prox(7.0, &v(&[0.0, 2.0])), v(&[0.0, 1.0]));
        let z = v(&[1.5, -2.5, 0.1]);
        assert_eq!(RegularizerSpec::Zero.prox(0.3, &z), z);
        assert_eq!(ball.diameter(), 2.0);
        assert!(l1.diameter().is_infinite());
        assert!(RegularizerSpec::L1 { weight: 0.0 }.validate().is_err());
        assert!(RegularizerSpec::Ball { radius: -1.0 }.validate().is_err());
    }

    fn arb_vec(n: usize) -> impl Strategy<Value = DVector<f64>> {
        proptest::collection::vec(-10.0f64..10.0, n).prop_map(DVector::from_vec)
    }

    fn regs() -> impl Strategy<Value = RegularizerSpec> {
        prop_oneof![
            Just(RegularizerSpec::Zero),
            (0.01f64..3.0).prop_map(|weight| RegularizerSpec::L1 { weight }),
            (0.1f64..5.0).prop_map(|radius| RegularizerSpec::Ball { radius }),
        ]
    }

    proptest! {
        #[test]
        fn clip_is_projection(y in arb_vec(4), c in 0.01f64..20.0) {
            let p = clip(&y, c);
            prop_assert!(p.norm() <= c * (1.0 + 1e-12));
            // Projection optimality: <y - p, q - p> <= 0 for q in the ball.
            let q = clip(&DVector::from_element(4, 1.0), c);
            prop_assert!((&y - &p).dot(&(q - &p)) <= 1e-9);
        }

        #[test]
        fn prox_firm_nonexpansive(reg in regs(), lam in 0.01f64..3.0, u in arb_vec(3), w in arb_vec(3)) {
            let d = &u - &w;
            let dp = reg.prox(lam, &u) - reg.prox(lam, &w);
            prop_assert!(dp.norm() <= d.norm() * (1.0 + 1e-12) + 1e-12);
            // ||dp||^2 <= <d, dp> and ||dp - d||^2 <= ||d||^2 - ||dp||^2
            let tol = 1e-9 * (1.0 + d.norm_squared());
            prop_assert!(dp.norm_squared() <= d.dot(&dp) + tol);
            prop_assert!((&dp - &d).norm_squared() <= d.norm_squared() - dp.norm_squared() + tol);
            if matches!(reg, RegularizerSpec::Ball { .. }) {
                prop_assert!(reg.contains(&reg.prox(lam, &u)));
            }
        }

        #[test]
        fn clip_satisfies_prox_inequalities(c in 0.05f64..5.0, u in arb_vec(3), w in arb_vec(3)) {
            let d = &u - &w;
            let dp = clip(&u, c) - clip(&w, c);
            let tol = 1e-9 * (1.0 + d.norm_squared());
            prop_assert!(dp.norm_squared() <= d.dot(&dp) + tol);
            prop_assert!((&dp - &d).norm_squared() <= d.norm_squared() - dp.norm_squared() + tol);
        }
    }
}
