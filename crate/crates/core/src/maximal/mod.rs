//! Restricted and dual maximal operators, the multilinear estimate checks
//! and the decay experiment for the restricted strong-type integral.
//!
//! Points `x + t y` are formed in `R^d` from a fixed representative of `y`
//! and wrapped back onto the torus. For kernels the representative window
//! starts at the kernel's support arc, so a mollified measure sitting near
//! the origin is not split into two far-apart pieces.

mod d11;
mod omega;
mod operators;
mod strong_type;
mod tangency;
mod transverse;

pub use d11::{sup_growth, theorem_d11_experiment, D11Config, D11Row, MaximalReport, SupGrowth};
pub use omega::OmegaSet;
pub use operators::{
    dual_operator, full_maximal, linearized_adjoint, linearized_operator, restricted_maximal,
    restricted_maximal_dilated, support_growth_check, t_discretization_bound, t_grid,
    ScaleFunction, ScaleKind, SupportGrowth,
};
pub use strong_type::{
    restricted_strong_type_integral, restricted_strong_type_split, McConfig, McEstimate,
    StrongTypeSplit,
};
pub use tangency::{internal_tangency_exact, internal_tangency_measure, tangency_constant};
pub use transverse::{transverse_inequality_check, TransverseCheck};
