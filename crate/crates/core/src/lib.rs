//! Weak-form (Galerkin) solvers for damped oscillators.
//!
//! The equation `x'' + c x' + k x = f` is solved on a finite horizon from
//! its variational form in the exponentially weighted product
//! `<f, g>_c = int e^{ct} f g`. Every numerical solution can be checked
//! against a Duhamel-convolution reference ([`oracle`]) and comes with
//! computable error bounds ([`weakform::error_report`]).

pub mod analytic;
pub mod basis;
pub mod corpus;
pub mod energy;
pub mod error;
pub mod mdof;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod weakform;

pub use error::{Error, Result};
pub use model::{
    BoundaryConditions, DerivedParams, Excitation, InitialConditions, Motion, Sample, SdofSystem,
    TimeFunction, Trajectory, Trial,
};
pub use basis::{BasisFamily, BasisSet};
pub use energy::{ConservationIdentity, EnergyAudit};
pub use mdof::{Engine, MdofSystem, ModalSystem};
pub use oracle::DuhamelOracle;
pub use weakform::{BoundaryMap, ErrorReport, WeakSolution};
