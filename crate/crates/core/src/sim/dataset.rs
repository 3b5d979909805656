use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, require_nonnegative, Error, Result};

/// Absolute slack, scaled by `max(1, m, M)`, on the curvature envelope check.
const ENVELOPE_TOLERANCE: f64 = 1e-9;

/// `f(x) = 0.5 x' A x + c' x` with symmetric `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLoss {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
}

impl QuadraticLoss {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        if !hessian.is_square() {
            return Err(invalid("hessian", "must be square"));
        }
        if hessian.nrows() != linear.len() {
            return Err(Error::DimensionMismatch {
                expected: hessian.nrows(),
                got: linear.len(),
            });
        }
        let scale = hessian.amax().max(1.0);
        if (&hessian - hessian.transpose()).amax() > 1e-12 * scale {
            return Err(invalid("hessian", "must be symmetric"));
        }
        Ok(Self { hessian, linear })
    }

    /// One-dimensional `f(x) = 0.5 a x^2 + c x`.
    pub fn scalar(a: f64, c: f64) -> Self {
        Self {
            hessian: DMatrix::from_element(1, 1, a),
            linear: DVector::from_element(1, c),
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.hessian * x + &self.linear
    }

    /// Smallest and largest eigenvalue of the Hessian.
    pub fn spectrum(&self) -> (f64, f64) {
        let eig = self.hessian.clone().symmetric_eigen().eigenvalues;
        (eig.min(), eig.max())
    }
}

/// `k` quadratic component losses whose Hessian spectra lie in `[-m, M]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    components: Vec<QuadraticLoss>,
    declared_m: f64,
    declared_upper: f64,
    /// 1-based index of the record replaced by [`SyntheticDataset::make_neighbor`].
    replaced: Option<usize>,
}

impl SyntheticDataset {
    pub fn new(components: Vec<QuadraticLoss>, m: f64, upper: f64) -> Result<Self> {
        require_nonnegative("m", m)?;
        require_nonnegative("M", upper)?;
        let Some(first) = components.first() else {
            return Err(invalid(
                "components",
                "dataset must hold at least one component",
            ));
        };
        let dim = first.dim();
        for c in &components {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        let ds = Self {
            components,
            declared_m: m,
            declared_upper: upper,
            replaced: None,
        };
        for (i, c) in ds.components.iter().enumerate() {
            ds.check_envelope(i, c)?;
        }
        Ok(ds)
    }

    fn check_envelope(&self, index: usize, c: &QuadraticLoss) -> Result<()> {
        let tol = ENVELOPE_TOLERANCE * self.declared_m.max(self.declared_upper).max(1.0);
        let (lo, hi) = c.spectrum();
        for eigenvalue in [lo, hi] {
            if eigenvalue < -self.declared_m - tol || eigenvalue > self.declared_upper + tol {
                return Err(Error::CurvatureEnvelope {
                    index,
                    eigenvalue,
                    m: self.declared_m,
                    upper: self.declared_upper,
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[QuadraticLoss] {
        &self.components
    }

    /// Component `f_i`, 1-based.
    pub fn component(&self, i: usize) -> &QuadraticLoss {
        &self.components[i - 1]
    }

    pub fn declared_m(&self) -> f64 {
        self.declared_m
    }

    pub fn declared_upper(&self) -> f64 {
        self.declared_upper
    }

    pub fn replaced_index(&self) -> Option<usize> {
        self.replaced
    }

    /// Extreme eigenvalues over all components.
    pub fn spectral_range(&self) -> (f64, f64) {
        self.components
            .iter()
            .map(QuadraticLoss::spectrum)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                (lo.min(a), hi.max(b))
            })
    }

    /// Dataset equal to `self` except that record `i_star` (1-based) is
    /// replaced. The replacement must respect the same curvature envelope.
    pub fn make_neighbor(&self, i_star: usize, replacement: QuadraticLoss) -> Result<Self> {
        if i_star == 0 || i_star > self.len() {
            return Err(invalid(
                "i_star",
                format!("must lie in 1..={}, got {i_star}", self.len()),
            ));
        }
        if replacement.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: replacement.dim(),
            });
        }
        self.check_envelope(i_star - 1, &replacement)?;
        let mut components = self.components.clone();
        components[i_star - 1] = replacement;
        Ok(Self {
            components,
            replaced: Some(i_star),
            ..*self
        })
    }

    /// 1-based indices at which two datasets of equal size differ.
    pub fn differing_indices(&self, other: &Self) -> Vec<usize> {
        self.components
            .iter()
            .zip(&other.components)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// First step `t >= 1` whose cyclic batch contains record `i_star` (1-based).
pub fn first_step_containing(i_star: usize, batch_size: usize) -> u64 {
    ((i_star - 1) / batch_size) as u64 + 1
}

/// Random quadratic dataset with Hessian spectra in `[-m, M]`.
///
/// Each Hessian is `Q diag(e) Q'` with `Q` a random orthogonal basis and `e`
/// uniform on `[-m, M]`. The envelope is made tight: component 1 receives the
/// eigenvalue `-m` and (in dimension >= 2) also `M`; in dimension 1 the
/// eigenvalue `M` goes to component 2 when it exists. Linear terms are
/// standard Gaussian.
pub fn generate_quadratic_dataset(
    dim: usize,
    k: usize,
    m: f64,
    upper: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    require_nonnegative("m", m)?;
    require_nonnegative("M", upper)?;
    if m + upper == 0.0 {
        return Err(invalid("m + M", "must be positive"));
    }
    if dim == 0 {
        return Err(invalid("dim", "must be positive"));
    }
    if k == 0 {
        return Err(invalid("k", "must be positive"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut components = Vec::with_capacity(k);
    for i in 0..k {
        let gauss = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
        let q = gauss.qr().q();
        let mut eig: Vec<f64> = (0..dim).map(|_| rng.random_range(-m..=upper)).collect();
        if i == 0 {
            eig[0] = if dim == 1 && k == 1 && m == 0.0 {
                upper
            } else {
                -m
            };
            if dim >= 2 {
                eig[dim - 1] = upper;
            }
        } else if i == 1 && dim == 1 {
            eig[0] = upper;
        }
        let diag = DMatrix::from_diagonal(&DVector::from_vec(eig));
        let h = &q * diag * q.transpose();
        let h = (&h + h.transpose()) * 0.5;
        let c = DVector::<f64>::from_fn(dim, |_, _| rng.sample(StandardNormal));
        components.push(QuadraticLoss::new(h, c)?);
    }
    SyntheticDataset::new(components, m, upper)
}
