//! An explicit convex record on which the clipped gradient step expands
//! distances, so the unit Lipschitz constant claimed for convex losses does
//! not survive clipping in two dimensions.

use lastiter::core::lipschitz_constant;
use lastiter::core::sim::{
    prox_linear_step, DMatrix, DVector, QuadraticLoss, RegularizerSpec, SyntheticDataset,
};
use lastiter::oracle::empirical_lipschitz;

const LAM: f64 = 0.5;
const CLIP: f64 = 1.0;

/// `f(x) = x2^2 / 2 + 0.75 x1`, convex with `M = 1`, so `lam = 1/(2M)`.
fn record() -> SyntheticDataset {
    let hessian = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]));
    let loss = QuadraticLoss::new(hessian, DVector::from_vec(vec![0.75, 0.0])).unwrap();
    SyntheticDataset::new(vec![loss], 0.0, 1.0).unwrap()
}

/// Jacobian of `x - lam clip(H x + c)` where the clip is active:
/// `I - lam (C/|g|) (I - u u') H` with `u = g / |g|`.
fn jacobian(g: &DVector<f64>) -> DMatrix<f64> {
    let norm = g.norm();
    let u = g / norm;
    let h = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]));
    let proj = DMatrix::identity(2, 2) - &u * u.transpose();
    DMatrix::identity(2, 2) - proj * h * (LAM * CLIP / norm)
}

#[test]
fn clipped_convex_step_is_expansive() {
    let ds = record();
    let x = DVector::from_vec(vec![0.0, 0.75]);
    let g = ds.component(1).gradient(&x);
    assert!(g.norm() > CLIP);
    let j = jacobian(&g);
    let eig = (j.transpose() * &j).symmetric_eigen();
    let (top, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let sigma_max = eig.eigenvalues[top].sqrt();
    let v = eig.eigenvectors.column(top).into_owned();

    let h = 1e-7;
    let y = &x + &v * h;
    let ratio = (prox_linear_step(&x, &ds, &[1], LAM, CLIP)
        - prox_linear_step(&y, &ds, &[1], LAM, CLIP))
    .norm()
        / h;
    assert!((ratio - sigma_max).abs() < 1e-6, "{ratio} vs {sigma_max}");
    assert!(sigma_max > 1.03, "{sigma_max}");
    assert_eq!(lipschitz_constant(LAM, 0.0, 1.0).unwrap(), 1.0);

    // The sampler finds the same expansion on its own.
    let emp = empirical_lipschitz(&ds, &RegularizerSpec::Zero, LAM, CLIP, 10_000, 3);
    assert!(emp > 1.01, "{emp}");
}

#[test]
fn unclipped_convex_step_is_nonexpansive() {
    let ds = record();
    let emp = empirical_lipschitz(&ds, &RegularizerSpec::Zero, LAM, f64::INFINITY, 10_000, 3);
    assert!(emp <= 1.0 + 1e-9, "{emp}");
}
