//! Galerkin solution of the weighted weak form
//!
//! `-<x', phi'>_c + k <x, phi>_c = <f, phi>_c` for all `phi` vanishing at
//! both ends, with `x = x0 b_0 + sum u_i b_i + x_T b_{n+1}`. The final value
//! `x_T` is unknown and is fixed afterwards by the initial velocity.

mod assemble;
pub mod linalg;
mod report;
mod solve;

pub use assemble::{apply_f_operator, apply_f_operator_poly, assemble, AssembledSystem, OperatorImage};
pub use linalg::{principal_angles, SymmetricSolver};
pub use report::{
    error_report, verify_projection_identity, verify_projection_identity_shifted, AngleSummary, BoundSummary, ErrorReport, ProjectionResidual,
};
pub use solve::{
    boundary_map, boundary_map_unchecked, boundary_value, is_exceptional, solve_weak, solve_weak_bvp,
    BoundaryMap, ExceptionalCheck, MapMode, WeakSolution, EXCEPTIONAL_TOL,
};
