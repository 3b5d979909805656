//! Exact-in-law propagation of one-dimensional DP-SGD on a cell grid, and
//! Rényi divergences between the resulting laws.
//!
//! A law is held as per-cell masses plus a short list of point masses. One
//! step pushes every cell mass through the deterministic gradient map by
//! cloud-in-cell splitting, convolves with the cell-integrated Gaussian kernel
//! by direct summation, and then applies the proximal map. Point masses are
//! moved exactly and redeposited as Gaussians, so the initial point mass at
//! `x0` and the atoms created by the proximal maps carry no discretization
//! error of their own.

use lastiter_core::sim::{cyclic_batch, RegularizerSpec, SyntheticDataset};
use lastiter_core::PrivacyParams;

use crate::error::{Error, Result};

pub const DEFAULT_CELLS: usize = 8192;
/// Largest probability mass allowed to leave the grid over a whole run.
pub const TRUNCATION_TOLERANCE: f64 = 1e-10;
/// Densities below this are treated as zero when forming likelihood ratios.
pub const DENSITY_FLOOR: f64 = 1e-300;
/// Kernel weights are computed out to this many standard deviations; beyond
/// it they underflow anyway.
const KERNEL_REACH_SIGMAS: f64 = 40.0;

fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// `P(u < Z <= v)` for standard normal `Z`, without cancellation in the tails.
fn norm_interval(u: f64, v: f64) -> f64 {
    if u >= 0.0 {
        norm_sf(u) - norm_sf(v)
    } else if v <= 0.0 {
        norm_cdf(v) - norm_cdf(u)
    } else {
        1.0 - norm_cdf(u) - norm_sf(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// Law of a real random variable: a piecewise-constant density on
/// `n_cells` equal cells of `[lo, hi]` plus point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub lo: f64,
    pub hi: f64,
    pub density: Vec<f64>,
    pub atoms: Vec<Atom>,
}

impl DensityGrid {
    /// Density sampled at cell centers.
    pub fn from_fn(lo: f64, hi: f64, n_cells: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = (hi - lo) / n_cells as f64;
        Self {
            lo,
            hi,
            density: (0..n_cells).map(|j| f(lo + (j as f64 + 0.5) * h)).collect(),
            atoms: Vec::new(),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.density.len()
    }

    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / self.n_cells() as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.lo + (j as f64 + 0.5) * self.cell_width()
    }

    /// Mass of the point mass at `x`, or 0.
    pub fn atom_at(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.position == x)
            .map(|a| a.mass)
            .sum()
    }

    pub fn atom_lo(&self) -> f64 {
        self.atom_at(self.lo)
    }

    pub fn atom_hi(&self) -> f64 {
        self.atom_at(self.hi)
    }

    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_width()
            + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        let h = self.cell_width();
        let cont: f64 = self
            .density
            .iter()
            .enumerate()
            .map(|(j, d)| d * h * self.center(j))
            .sum();
        cont + self.atoms.iter().map(|a| a.mass * a.position).sum::<f64>()
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.n_cells() == other.n_cells()
    }
}

/// Grid resolution for [`density_propagate_1d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub cells: usize,
    /// Support override; defaults to `x0 -/+ (12 sigma sqrt(T) + lam C T)`.
    pub support: Option<(f64, f64)>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cells: DEFAULT_CELLS,
            support: None,
        }
    }
}

impl GridSpec {
    pub fn with_cells(cells: usize) -> Self {
        Self {
            cells,
            support: None,
        }
    }

    /// Same support with half the cell width.
    pub fn refined(self) -> Self {
        Self {
            cells: self.cells * 2,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    lo: f64,
    hi: f64,
    n: usize,
    h: f64,
    // Whether an edge is also the boundary of the regularizer's domain, so
    // that mass pushed across it becomes an atom rather than being lost.
    lo_is_boundary: bool,
    hi_is_boundary: bool,
}

impl Layout {
    fn new(spec: &GridSpec, reg: &RegularizerSpec, p: &PrivacyParams, x0: f64) -> Result<Self> {
        let (mut lo, mut hi) = spec.support.unwrap_or_else(|| {
            let steps = p.iterations.max(1) as f64;
            let half = 12.0 * p.sigma * steps.sqrt() + p.lam * p.clip_norm * steps;
            (x0 - half, x0 + half)
        });
        let (mut lo_b, mut hi_b) = (false, false);
        if let RegularizerSpec::Ball { radius } = *reg {
            if lo <= -radius {
                lo = -radius;
                lo_b = true;
            }
            if hi >= radius {
                hi = radius;
                hi_b = true;
            }
        }
        if !(lo < hi && lo <= x0 && x0 <= hi) {
            return Err(Error::Oracle(format!(
                "support [{lo}, {hi}] must contain x0 = {x0}"
            )));
        }
        if spec.cells < 2 {
            return Err(Error::Oracle("grid needs at least two cells".into()));
        }
        Ok(Self {
            lo,
            hi,
            n: spec.cells,
            h: (hi - lo) / spec.cells as f64,
            lo_is_boundary: lo_b,
            hi_is_boundary: hi_b,
        })
    }

    fn center(&self, j: usize) -> f64 {
        self.lo + (j as f64 + 0.5) * self.h
    }

    /// Splits `mass` at `x` between the two nearest cell centers.
    fn deposit(&self, cells: &mut [f64], x: f64, mass: f64) {
        let u = (x - self.lo) / self.h - 0.5;
        let i = u.floor();
        if i < 0.0 {
            cells[0] += mass;
        } else if i as usize + 1 >= self.n {
            cells[self.n - 1] += mass;
        } else {
            let f = u - i;
            let i = i as usize;
            cells[i] += mass * (1.0 - f);
            cells[i + 1] += mass * f;
        }
    }

    /// Adds the cell masses of `N(z, sigma^2)` scaled by `mass`; returns the
    /// mass falling below `lo` and above `hi`.
    fn deposit_gaussian(&self, cells: &mut [f64], z: f64, sigma: f64, mass: f64) -> (f64, f64) {
        let mut prev = (self.lo - z) / sigma;
        for (j, c) in cells.iter_mut().enumerate() {
            let next = (self.lo + (j + 1) as f64 * self.h - z) / sigma;
            *c += mass * norm_interval(prev, next);
            prev = next;
        }
        (
            mass * norm_cdf((self.lo - z) / sigma),
            mass * norm_sf((self.hi - z) / sigma),
        )
    }
}

/// `x -> x - (lam / b) sum_i clip(a_i x + c_i, C)` for the current batch.
struct StepMap {
    scale: f64,
    clip: f64,
    terms: Vec<(f64, f64)>,
}

impl StepMap {
    fn new(ds: &SyntheticDataset, batch: &[usize], lam: f64, clip: f64) -> Self {
        let terms = batch
            .iter()
            .map(|&i| {
                let f = ds.component(i);
                (f.hessian[(0, 0)], f.linear[0])
            })
            .collect();
        Self {
            scale: lam / batch.len() as f64,
            clip,
            terms,
        }
    }

    fn apply(&self, x: f64) -> f64 {
        let g: f64 = self
            .terms
            .iter()
            .map(|&(a, c)| (a * x + c).clamp(-self.clip, self.clip))
            .sum();
        x - self.scale * g
    }
}

/// Discrete offset law of the Gaussian kernel on the cell lattice:
/// `weights[d + reach] = P((d - 1/2) h < sigma Z <= (d + 1/2) h)`.
struct Kernel {
    reach: usize,
    weights: Vec<f64>,
}

impl Kernel {
    fn new(h: f64, sigma: f64, max_reach: usize) -> Self {
        let reach = ((KERNEL_REACH_SIGMAS * sigma / h).ceil() as usize).min(max_reach);
        let weights = (0..=2 * reach)
            .map(|i| {
                let d = i as f64 - reach as f64;
                norm_interval((d - 0.5) * h / sigma, (d + 0.5) * h / sigma)
            })
            .collect();
        Self { reach, weights }
    }
}

struct Law {
    cells: Vec<f64>,
    atoms: Vec<Atom>,
}

fn check_inputs(
    ds: &SyntheticDataset,
    ds_prime: &SyntheticDataset,
    reg: &RegularizerSpec,
    p: &PrivacyParams,
    x0: f64,
) -> Result<()> {
    p.validate()?;
    reg.validate()?;
    for d in [ds, ds_prime] {
        if d.dim() != 1 {
            return Err(Error::Oracle(format!(
                "density propagation needs dim = 1, got {}",
                d.dim()
            )));
        }
        if d.len() as u64 != p.dataset_size {
            return Err(Error::Oracle(format!(
                "dataset holds {} records, params say {}",
                d.len(),
                p.dataset_size
            )));
        }
        let total = d.declared_m() + d.declared_upper();
        if total > 0.0 && p.lam * 2.0 * total > 1.0 + 1e-12 {
            return Err(Error::Oracle(format!(
                "stepsize {} exceeds 1/(2(m+M)) = {}, the step map may not be monotone",
                p.lam,
                0.5 / total
            )));
        }
    }
    if !reg.contains(&nalgebra::DVector::from_element(1, x0)) {
        return Err(lastiter_core::Error::OutsideDomain.into());
    }
    Ok(())
}

fn apply_prox(
    reg: &RegularizerSpec,
    lam: f64,
    layout: &Layout,
    mut cells: Vec<f64>,
    below: f64,
    above: f64,
    truncated: &mut f64,
) -> Law {
    match *reg {
        RegularizerSpec::Zero => {
            *truncated += below + above;
            Law {
                cells,
                atoms: Vec::new(),
            }
        }
        RegularizerSpec::Ball { .. } => {
            let mut atoms = Vec::new();
            for (edge, mass, is_boundary) in [
                (layout.lo, below, layout.lo_is_boundary),
                (layout.hi, above, layout.hi_is_boundary),
            ] {
                if !is_boundary {
                    *truncated += mass;
                } else if mass > 0.0 {
                    atoms.push(Atom {
                        position: edge,
                        mass,
                    });
                }
            }
            Law { cells, atoms }
        }
        RegularizerSpec::L1 { weight } => {
            *truncated += below + above;
            let t = lam * weight;
            if t == 0.0 {
                return Law {
                    cells,
                    atoms: Vec::new(),
                };
            }
            let mut out = vec![0.0; layout.n];
            let mut at_zero = 0.0;
            for (j, mass) in cells.iter_mut().enumerate() {
                if *mass == 0.0 {
                    continue;
                }
                let a = layout.lo + j as f64 * layout.h;
                let b = a + layout.h;
                let dead = (b.min(t) - a.max(-t)).max(0.0);
                at_zero += *mass * dead / layout.h;
                if b > t {
                    let start = a.max(t);
                    layout.deposit(
                        &mut out,
                        0.5 * (start + b) - t,
                        *mass * (b - start) / layout.h,
                    );
                }
                if a < -t {
                    let end = b.min(-t);
                    layout.deposit(&mut out, 0.5 * (a + end) + t, *mass * (end - a) / layout.h);
                }
            }
            let atoms = if at_zero > 0.0 {
                vec![Atom {
                    position: 0.0,
                    mass: at_zero,
                }]
            } else {
                Vec::new()
            };
            Law { cells: out, atoms }
        }
    }
}

fn propagate(
    ds: &SyntheticDataset,
    reg: &RegularizerSpec,
    p: &PrivacyParams,
    x0: f64,
    layout: &Layout,
) -> Result<DensityGrid> {
    let n = layout.n;
    let h = layout.h;
    let ext = (p.lam * p.clip_norm / h).ceil() as usize + 2;
    let width = n + 2 * ext;
    let kernel = Kernel::new(h, p.sigma, width);
    let tail_below: Vec<f64> = (0..width)
        .map(|i| norm_cdf((ext as f64 - i as f64 - 0.5) * h / p.sigma))
        .collect();
    let tail_above: Vec<f64> = (0..width)
        .map(|i| norm_sf(((n + ext) as f64 - i as f64 - 0.5) * h / p.sigma))
        .collect();

    let mut law = Law {
        cells: vec![0.0; n],
        atoms: vec![Atom {
            position: x0,
            mass: 1.0,
        }],
    };
    let mut truncated = 0.0;
    let mut pushed = vec![0.0; width];
    let b = p.batch_size as usize;
    let k = p.dataset_size as usize;
    for t in 1..=p.iterations {
        let map = StepMap::new(ds, &cyclic_batch(t, b, k), p.lam, p.clip_norm);
        pushed.fill(0.0);
        for (j, &mass) in law.cells.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let u = (map.apply(layout.center(j)) - layout.lo) / h - 0.5 + ext as f64;
            let i = u.floor();
            let f = u - i;
            let i = i as usize;
            pushed[i] += mass * (1.0 - f);
            pushed[i + 1] += mass * f;
        }

        let mut next = vec![0.0; n];
        let (mut below, mut above) = (0.0, 0.0);
        let reach = kernel.reach as isize;
        for (i, &mass) in pushed.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            below += mass * tail_below[i];
            above += mass * tail_above[i];
            let base = i as isize - ext as isize;
            let d_lo = (-reach).max(-base);
            let d_hi = reach.min(n as isize - 1 - base);
            if d_lo > d_hi {
                continue;
            }
            let out = &mut next[(base + d_lo) as usize..=(base + d_hi) as usize];
            let w = &kernel.weights[(d_lo + reach) as usize..=(d_hi + reach) as usize];
            for (o, &wk) in out.iter_mut().zip(w) {
                *o += mass * wk;
            }
        }
        for atom in &law.atoms {
            let (lo_tail, hi_tail) =
                layout.deposit_gaussian(&mut next, map.apply(atom.position), p.sigma, atom.mass);
            below += lo_tail;
            above += hi_tail;
        }
        law = apply_prox(reg, p.lam, layout, next, below, above, &mut truncated);
    }

    if truncated > TRUNCATION_TOLERANCE {
        return Err(Error::Truncation {
            mass: truncated,
            tolerance: TRUNCATION_TOLERANCE,
        });
    }
    Ok(DensityGrid {
        lo: layout.lo,
        hi: layout.hi,
        density: law.cells.iter().map(|m| m / h).collect(),
        atoms: law.atoms,
    })
}

/// Laws of the last iterates `X_T` and `X'_T` of two coupled one-dimensional
/// runs started from the point mass at `x0`, on a shared grid.
pub fn density_propagate_1d(
    ds: &SyntheticDataset,
    ds_prime: &SyntheticDataset,
    reg: &RegularizerSpec,
    p: &PrivacyParams,
    x0: f64,
    grid: &GridSpec,
) -> Result<(DensityGrid, DensityGrid)> {
    check_inputs(ds, ds_prime, reg, p, x0)?;
    let layout = Layout::new(grid, reg, p, x0)?;
    if ds == ds_prime {
        let law = propagate(ds, reg, p, x0, &layout)?;
        return Ok((law.clone(), law));
    }
    let (a, b) = rayon::join(
        || propagate(ds, reg, p, x0, &layout),
        || propagate(ds_prime, reg, p, x0, &layout),
    );
    Ok((a?, b?))
}

fn check_pair(p: &DensityGrid, q: &DensityGrid) -> Result<()> {
    if !p.same_layout(q) {
        return Err(Error::Oracle("densities live on different grids".into()));
    }
    Ok(())
}

/// `D_alpha(P || Q)` by cell quadrature plus atom terms. Cells where `q`
/// falls below [`DENSITY_FLOOR`] are dropped; if the `P` mass dropped that way
/// exceeds [`TRUNCATION_TOLERANCE`] the result is `+inf`.
pub fn renyi_divergence_grid(p: &DensityGrid, q: &DensityGrid, alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::Oracle(format!(
            "alpha must be a finite real > 1, got {alpha}"
        )));
    }
    check_pair(p, q)?;
    let h = p.cell_width();
    let mut sum = 0.0;
    let mut undominated = 0.0;
    let mut term = |pm: f64, qm: f64, weight: f64| {
        if pm <= 0.0 {
            return;
        }
        if qm < DENSITY_FLOOR {
            undominated += pm * weight;
            return;
        }
        sum += weight * (alpha * pm.ln() + (1.0 - alpha) * qm.ln()).exp();
    };
    for (&pd, &qd) in p.density.iter().zip(&q.density) {
        term(pd, qd, h);
    }
    for a in &p.atoms {
        term(a.mass, q.atom_at(a.position), 1.0);
    }
    if undominated > TRUNCATION_TOLERANCE {
        return Ok(f64::INFINITY);
    }
    Ok((sum.ln() / (alpha - 1.0)).max(0.0))
}

/// `KL(P || Q)`, the `alpha -> 1` limit of [`renyi_divergence_grid`].
pub fn kl_divergence_grid(p: &DensityGrid, q: &DensityGrid) -> Result<f64> {
    check_pair(p, q)?;
    let h = p.cell_width();
    let mut sum = 0.0;
    let mut undominated = 0.0;
    let mut term = |pm: f64, qm: f64, weight: f64| {
        if pm <= 0.0 {
            return;
        }
        if qm < DENSITY_FLOOR {
            undominated += pm * weight;
            return;
        }
        sum += weight * pm * (pm.ln() - qm.ln());
    };
    for (&pd, &qd) in p.density.iter().zip(&q.density) {
        term(pd, qd, h);
    }
    for a in &p.atoms {
        term(a.mass, q.atom_at(a.position), 1.0);
    }
    if undominated > TRUNCATION_TOLERANCE {
        return Ok(f64::INFINITY);
    }
    Ok(sum.max(0.0))
}
