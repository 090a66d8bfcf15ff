//! Sobolev q-capacity estimation by discrete q-Dirichlet energy minimization.
//!
//! The capacity of a compact K is the infimum of the q-energy over compactly
//! supported Lipschitz functions with u >= 1 on K; non-compact targets take
//! the supremum over compact subsets, which the grid realizes through the
//! conservative inner rasterization. Everything reported here is the energy
//! of a stored feasible field: an upper bound for the discrete minimum that
//! approaches the capacity from below under grid refinement (the mask grows
//! into the set while the discretization error shrinks).

mod energy;
mod estimate;
mod oracle;
mod solver;

pub use energy::q_energy;
pub(crate) use energy::{for_each_cell_pair, raw_energy};
pub use estimate::{estimate_capacity, CapacityEstimate, LevelEstimate};
pub use oracle::{radial_capacity_oracle, radial_extremal, unit_sphere_area};
pub use solver::{minimize_q_energy, minimize_q_energy_with_zero, Minimization, SolverParams};
