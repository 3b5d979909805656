use alloc::vec::Vec;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::dataset::{first_step_containing, SyntheticDataset};
use super::prox::{clip, RegularizerSpec};
use crate::accountant::PrivacyParams;
use crate::error::{Error, Result};

/// 1-based indices `{j_t + 1, ..., j_t + b}` of the batch used at step `t >= 1`.
pub fn cyclic_batch(t: u64, batch_size: usize, k: usize) -> Vec<usize> {
    let j = ((batch_size as u64 * (t - 1)) % k as u64) as usize;
    (j + 1..=j + batch_size).collect()
}

/// Prox-linear step `x - (lam / |B|) sum_{i in B} clip(grad f_i(x), C)`.
pub fn prox_linear_step(
    x: &DVector<f64>,
    ds: &SyntheticDataset,
    batch: &[usize],
    lam: f64,
    clip_norm: f64,
) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for &i in batch {
        g += clip(&ds.component(i).gradient(x), clip_norm);
    }
    x - g * (lam / batch.len() as f64)
}

/// Per-step Gaussian noise derived from one root seed. Step `t` reads its own
/// ChaCha stream, so any two runs with the same seed see the same `N_t`
/// regardless of what else was drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    pub seed: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// `N_t ~ N(0, sigma^2 I)` in dimension `dim`.
    pub fn sample(&self, t: u64, dim: usize, sigma: f64) -> DVector<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(t);
        DVector::from_fn(dim, |_, _| sigma * rng.sample::<f64, _>(StandardNormal))
    }
}

/// Iterates `X_0, ..., X_T` of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub iterates: Vec<DVector<f64>>,
    pub noise_seed: u64,
    pub params: PrivacyParams,
}

impl Trajectory {
    pub fn last(&self) -> &DVector<f64> {
        self.iterates.last().expect("trajectory always holds X_0")
    }
}

fn check_run_inputs(
    ds: &SyntheticDataset,
    reg: &RegularizerSpec,
    p: &PrivacyParams,
    x0: &DVector<f64>,
) -> Result<()> {
    p.validate()?;
    reg.validate()?;
    if ds.len() as u64 != p.dataset_size {
        return Err(crate::error::invalid(
            "dataset_size",
            alloc::format!(
                "dataset holds {} records, params say {}",
                ds.len(),
                p.dataset_size
            ),
        ));
    }
    if x0.len() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            got: x0.len(),
        });
    }
    if !reg.contains(x0) {
        return Err(Error::OutsideDomain);
    }
    Ok(())
}

/// Runs cyclically sampled DP-SGD:
/// `X_t = prox_{lam h}(X_{t-1} - lam g_t + N_t)` with `g_t` the mean clipped
/// gradient over `B_t`. Noise is added to the displacement, not to `g_t`.
pub fn run_dp_sgd(
    ds: &SyntheticDataset,
    reg: &RegularizerSpec,
    p: &PrivacyParams,
    x0: &DVector<f64>,
    seed: u64,
) -> Result<Trajectory> {
    check_run_inputs(ds, reg, p, x0)?;
    Ok(run_unchecked(ds, reg, p, x0, NoiseStream::new(seed)))
}

fn run_unchecked(
    ds: &SyntheticDataset,
    reg: &RegularizerSpec,
    p: &PrivacyParams,
    x0: &DVector<f64>,
    noise: NoiseStream,
) -> Trajectory {
    let b = p.batch_size as usize;
    let k = p.dataset_size as usize;
    let mut iterates = Vec::with_capacity(p.iterations as usize + 1);
    iterates.push(x0.clone());
    let mut x = x0.clone();
    for t in 1..=p.iterations {
        let batch = cyclic_batch(t, b, k);
        let displaced = prox_linear_step(&x, ds, &batch, p.lam, p.clip_norm);
        x = reg.prox(p.lam, &(displaced + noise.sample(t, x.len(), p.sigma)));
        iterates.push(x.clone());
    }
    Trajectory {
        iterates,
        noise_seed: noise.seed,
        params: *p,
    }
}

/// Two coupled runs on neighboring datasets sharing every `N_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRun {
    pub original: Trajectory,
    pub neighbor: Trajectory,
    /// 1-based record where the datasets differ, if any.
    pub differing_index: Option<usize>,
    /// First step whose batch contains the differing record.
    pub t_star: Option<u64>,
    /// First `t` with `X_t != X'_t`, if the runs ever separate.
    pub first_divergence: Option<u64>,
}

pub fn run_pair(
    ds: &SyntheticDataset,
    ds_prime: &SyntheticDataset,
    reg: &RegularizerSpec,
    p: &PrivacyParams,
    x0: &DVector<f64>,
    seed: u64,
) -> Result<PairRun> {
    check_run_inputs(ds, reg, p, x0)?;
    check_run_inputs(ds_prime, reg, p, x0)?;
    let differing = ds.differing_indices(ds_prime);
    if differing.len() > 1 {
        return Err(Error::NotNeighbors(alloc::format!(
            "records {differing:?} differ"
        )));
    }
    let noise = NoiseStream::new(seed);
    let original = run_unchecked(ds, reg, p, x0, noise);
    let neighbor = run_unchecked(ds_prime, reg, p, x0, noise);
    let first_divergence = original
        .iterates
        .iter()
        .zip(&neighbor.iterates)
        .position(|(a, b)| a != b)
        .map(|t| t as u64);
    let differing_index = differing.first().copied();
    Ok(PairRun {
        original,
        neighbor,
        differing_index,
        t_star: differing_index.map(|i| first_step_containing(i, p.batch_size as usize)),
        first_divergence,
    })
}
