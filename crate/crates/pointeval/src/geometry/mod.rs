//! Implicit subsets of R^{2d} ≅ C^d, dyadic shells, and grid rasterization.

mod point;
mod raster;
mod set;
mod shell;

pub use point::PointCd;
pub use raster::{probably_nonempty, rasterize, NodeMask};
pub use set::{CellClass, ImplicitSet, SetExpr};
pub use shell::{
    annulus_shell, make_swiss_cheese, shell_minus_domain, swiss_cheese_centers, AnnulusShell,
};
