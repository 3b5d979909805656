//! Independent checks of the accountant: exact 1-D laws of the last iterate,
//! a brute-force residual allocation solver and sampled operator properties.

mod density;
mod harness;
mod qp;

pub use density::{
    density_propagate_1d, kl_divergence_grid, renyi_divergence_grid, Atom, DensityGrid, GridSpec,
    DEFAULT_CELLS, DENSITY_FLOOR, TRUNCATION_TOLERANCE,
};
pub use harness::{
    empirical_additive_excess, empirical_lipschitz, neighbor_displacement, prox_defect, BROAD_SCALE,
};
pub use qp::{qp_residual_oracle, residuals, MAX_HORIZON};
