//! Sampling-based checks of the operator properties the accountant relies on.

use lastiter_core::sim::{clip, prox_linear_step, DVector, RegularizerSpec, SyntheticDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Standard deviation of the broad sampling distribution.
pub const BROAD_SCALE: f64 = 3.0;
/// Tight pairs sit at distance `10^u`, `u` uniform on this range.
const TIGHT_LOG10: std::ops::Range<f64> = -6.0..-3.0;
/// Pairs closer than this, relative to `1 + |x|`, are dropped: projection onto
/// the domain can merge them up to rounding.
const MIN_SEPARATION: f64 = 1e-9;

fn separated(x: &DVector<f64>, dist: f64) -> bool {
    dist > MIN_SEPARATION * (1.0 + x.norm())
}

fn gaussian(rng: &mut ChaCha20Rng, dim: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn into_domain(reg: &RegularizerSpec, x: DVector<f64>) -> DVector<f64> {
    match *reg {
        RegularizerSpec::Ball { radius } => clip(&x, radius),
        _ => x,
    }
}

/// A broad pair on even draws, a tight pair around a broad point on odd ones.
fn sample_pair(
    rng: &mut ChaCha20Rng,
    reg: &RegularizerSpec,
    dim: usize,
    index: usize,
) -> (DVector<f64>, DVector<f64>) {
    let x = into_domain(reg, gaussian(rng, dim, BROAD_SCALE));
    let y = if index.is_multiple_of(2) {
        gaussian(rng, dim, BROAD_SCALE)
    } else {
        let dir = gaussian(rng, dim, 1.0).normalize();
        let r = 10f64.powf(rng.random_range(TIGHT_LOG10));
        &x + dir * r
    };
    (x, into_domain(reg, y))
}

/// Largest observed `|A(x) - A(y)| / |x - y|` for the prox-linear operator
/// `A(x) = x - (lam / |B|) sum_{i in B} clip(grad f_i(x), C)`, over every
/// single-record batch and the full batch. Points are drawn from `dom h`.
pub fn empirical_lipschitz(
    ds: &SyntheticDataset,
    reg: &RegularizerSpec,
    lam: f64,
    clip_norm: f64,
    n_pairs: usize,
    seed: u64,
) -> f64 {
    let mut batches: Vec<Vec<usize>> = (1..=ds.len()).map(|i| vec![i]).collect();
    if ds.len() > 1 {
        batches.push((1..=ds.len()).collect());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for index in 0..n_pairs {
        let (x, y) = sample_pair(&mut rng, reg, ds.dim(), index);
        let dist = (&x - &y).norm();
        if !separated(&x, dist) {
            continue;
        }
        for batch in &batches {
            let ax = prox_linear_step(&x, ds, batch, lam, clip_norm);
            let ay = prox_linear_step(&y, ds, batch, lam, clip_norm);
            worst = worst.max((ax - ay).norm() / dist);
        }
    }
    worst
}

/// Largest observed `|A(x) - A(y)| - |x - y|` over the same pairs and batches
/// as [`empirical_lipschitz`], for the additive bound `|x - y| + 2 lam C`.
pub fn empirical_additive_excess(
    ds: &SyntheticDataset,
    reg: &RegularizerSpec,
    lam: f64,
    clip_norm: f64,
    n_pairs: usize,
    seed: u64,
) -> f64 {
    let mut batches: Vec<Vec<usize>> = (1..=ds.len()).map(|i| vec![i]).collect();
    if ds.len() > 1 {
        batches.push((1..=ds.len()).collect());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for index in 0..n_pairs {
        let (x, y) = sample_pair(&mut rng, reg, ds.dim(), index);
        let dist = (&x - &y).norm();
        for batch in &batches {
            let ax = prox_linear_step(&x, ds, batch, lam, clip_norm);
            let ay = prox_linear_step(&y, ds, batch, lam, clip_norm);
            worst = worst.max((ax - ay).norm() - dist);
        }
    }
    worst
}

/// Largest observed `|phi(x) - phi'(x)|` at the step that first uses the
/// differing record, where `phi`, `phi'` are the gradient maps of the two
/// datasets on that step's batch.
pub fn neighbor_displacement(
    ds: &SyntheticDataset,
    ds_prime: &SyntheticDataset,
    lam: f64,
    clip_norm: f64,
    batch_size: usize,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if ds.len() != ds_prime.len() || ds.dim() != ds_prime.dim() {
        return Err(Error::Oracle("datasets differ in size or dimension".into()));
    }
    if batch_size == 0 || batch_size > ds.len() {
        return Err(Error::Oracle(format!(
            "batch size must lie in 1..={}",
            ds.len()
        )));
    }
    let differing = ds.differing_indices(ds_prime);
    let i_star = match differing.as_slice() {
        [] => return Ok(0.0),
        [i] => *i,
        _ => {
            return Err(
                lastiter_core::Error::NotNeighbors(format!("records {differing:?} differ")).into(),
            )
        }
    };
    let start = (i_star - 1) / batch_size * batch_size + 1;
    let batch: Vec<usize> = (start..start + batch_size).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_samples {
        let x = gaussian(&mut rng, ds.dim(), BROAD_SCALE);
        let a = prox_linear_step(&x, ds, &batch, lam, clip_norm);
        let b = prox_linear_step(&x, ds_prime, &batch, lam, clip_norm);
        worst = worst.max((a - b).norm());
    }
    Ok(worst)
}

/// Largest observed firm-nonexpansiveness defect
/// `|P x - P y|^2 - <P x - P y, x - y>` of `P = prox_{lam h}` and of clipping
/// at `clip_norm`, relative to `|x - y| (1 + |x| + |y|)` so that rounding
/// stays at machine precision. Nonpositive for exact proximal maps.
pub fn prox_defect(
    reg: &RegularizerSpec,
    lam: f64,
    clip_norm: f64,
    dim: usize,
    n_pairs: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for index in 0..n_pairs {
        let (x, y) = sample_pair(&mut rng, &RegularizerSpec::Zero, dim, index);
        let d = &x - &y;
        let dist = d.norm();
        if !separated(&x, dist) {
            continue;
        }
        let scale = dist * (1.0 + x.norm() + y.norm());
        for (px, py) in [
            (reg.prox(lam, &x), reg.prox(lam, &y)),
            (clip(&x, clip_norm), clip(&y, clip_norm)),
        ] {
            let dp = px - py;
            worst = worst.max((dp.norm_squared() - dp.dot(&d)) / scale);
        }
    }
    worst
}
