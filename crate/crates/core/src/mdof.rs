//! Multi-degree-of-freedom systems `M x'' + C x' + K x = f` with classical
//! damping, solved mode by mode.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFamily, BasisSet};
use crate::error::{invalid, Error, Result};
use crate::model::{Excitation, InitialConditions, Motion, Sample, SdofSystem, Trajectory};
use crate::oracle::DuhamelOracle;
use crate::weakform::{boundary_map_unchecked, is_exceptional, solve_weak, BoundaryMap, EXCEPTIONAL_TOL};

/// Largest accepted `max|offdiag| / max|diag|` of the modal damping matrix.
pub const NON_CLASSICAL_TOL: f64 = 1e-8;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MdofSystem {
    m: DMatrix<f64>,
    c: DMatrix<f64>,
    k: DMatrix<f64>,
    t_bar: f64,
}

fn check_symmetric(name: &'static str, a: &DMatrix<f64>, n: usize) -> Result<()> {
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "`{name}` is {}x{}, expected {n}x{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid(name, "non-finite entry"));
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    if (a - a.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(invalid(name, "matrix is not symmetric"));
    }
    Ok(())
}

impl MdofSystem {
    pub fn new(m: DMatrix<f64>, c: DMatrix<f64>, k: DMatrix<f64>, t_bar: f64) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Err(invalid("M", "empty matrix"));
        }
        check_symmetric("M", &m, n)?;
        check_symmetric("C", &c, n)?;
        check_symmetric("K", &k, n)?;
        if !(t_bar.is_finite() && t_bar > 0.0) {
            return Err(invalid("t_bar", format!("must be positive, got {t_bar}")));
        }
        if Cholesky::new(m.clone()).is_none() {
            return Err(Error::NotPositiveDefinite { name: "M" });
        }
        if Cholesky::new(k.clone()).is_none() {
            return Err(Error::NotPositiveDefinite { name: "K" });
        }
        Ok(Self { m, c, k, t_bar })
    }

    pub fn dof(&self) -> usize {
        self.m.nrows()
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn t_bar(&self) -> f64 {
        self.t_bar
    }

    /// `1/2 v^T M v + 1/2 x^T K x`.
    pub fn energy(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.m * v)) + 0.5 * x.dot(&(&self.k * x))
    }

    /// Largest `|M x'' + C x' + K x - f|` over interior grid points, with
    /// accelerations from centered differences of the velocities.
    pub fn ode_residual(&self, dofs: &[Trajectory], f: &[Excitation]) -> Result<f64> {
        let n = self.dof();
        if dofs.len() != n || f.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} DOF but {} trajectories and {} excitations",
                dofs.len(),
                f.len()
            )));
        }
        let len = dofs[0].len();
        if dofs.iter().any(|d| d.len() != len) || len < 3 {
            return Err(invalid("trajectories", "need a common grid of at least 3 points"));
        }
        let mut worst = 0.0f64;
        for q in 1..len - 1 {
            let prev = |d: &Trajectory| d.samples()[q - 1];
            let next = |d: &Trajectory| d.samples()[q + 1];
            let t = dofs[0].samples()[q].t;
            let x = DVector::from_fn(n, |i, _| dofs[i].samples()[q].x);
            let v = DVector::from_fn(n, |i, _| dofs[i].samples()[q].v);
            let a = DVector::from_fn(n, |i, _| (next(&dofs[i]).v - prev(&dofs[i]).v) / (next(&dofs[i]).t - prev(&dofs[i]).t));
            let load = f.iter().map(|fi| fi.eval(t)).collect::<Result<Vec<_>>>()?;
            let r = &self.m * a + &self.c * v + &self.k * x - DVector::from_vec(load);
            worst = worst.max(r.amax());
        }
        Ok(worst)
    }
}

/// One mode of a mass-normalized system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega_n: f64,
    /// M-orthonormal shape, largest component positive.
    pub shape: Vec<f64>,
    /// Modal damping coefficient `phi^T C phi`.
    pub damping: f64,
    pub damping_ratio: f64,
    pub underdamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalSystem {
    modes: Vec<Mode>,
    /// Shapes as columns: `x = Phi q`.
    shapes: DMatrix<f64>,
    /// `Phi^T M`: `q = Phi^T M x`.
    to_modal: DMatrix<f64>,
    subproblems: Vec<SdofSystem>,
    offdiag_ratio: f64,
    t_bar: f64,
}

impl ModalSystem {
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn shapes(&self) -> &DMatrix<f64> {
        &self.shapes
    }

    pub fn to_modal(&self) -> &DMatrix<f64> {
        &self.to_modal
    }

    /// Per-mode SDOF problems `q'' + c_i q' + omega_i^2 q = f_i`.
    pub fn subproblems(&self) -> &[SdofSystem] {
        &self.subproblems
    }

    /// Relative size of the discarded off-diagonal modal damping.
    pub fn offdiag_ratio(&self) -> f64 {
        self.offdiag_ratio
    }

    pub fn t_bar(&self) -> f64 {
        self.t_bar
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Modal loads `f_i = phi_i^T f`.
    pub fn modal_excitations(&self, f: &[Excitation]) -> Result<Vec<Excitation>> {
        self.check_len("excitations", f.len())?;
        (0..self.len())
            .map(|i| {
                let terms: Vec<(f64, &Excitation)> = f.iter().enumerate().map(|(j, fj)| (self.shapes[(j, i)], fj)).collect();
                Excitation::linear_combination(&terms)
            })
            .collect()
    }

    /// Modal initial data `q_0 = Phi^T M x_0` and likewise for velocities.
    pub fn modal_initial_conditions(&self, ic: &[InitialConditions]) -> Result<Vec<InitialConditions>> {
        self.check_len("initial conditions", ic.len())?;
        let x0 = &self.to_modal * DVector::from_iterator(ic.len(), ic.iter().map(|c| c.x0));
        let v0 = &self.to_modal * DVector::from_iterator(ic.len(), ic.iter().map(|c| c.v0));
        (0..self.len()).map(|i| InitialConditions::new(x0[i], v0[i])).collect()
    }

    /// Recombines modal trajectories (common grid) into physical ones.
    pub fn to_physical(&self, modal: &[Trajectory]) -> Result<Vec<Trajectory>> {
        self.check_len("modal trajectories", modal.len())?;
        let len = modal[0].len();
        if modal.iter().any(|m| m.len() != len) {
            return Err(invalid("modal trajectories", "grids differ"));
        }
        (0..self.len())
            .map(|dof| {
                let samples = (0..len)
                    .map(|q| {
                        let mut s = Sample {
                            t: modal[0].samples()[q].t,
                            x: 0.0,
                            v: 0.0,
                        };
                        for (i, m) in modal.iter().enumerate() {
                            s.x += self.shapes[(dof, i)] * m.samples()[q].x;
                            s.v += self.shapes[(dof, i)] * m.samples()[q].v;
                        }
                        s
                    })
                    .collect();
                Trajectory::new(samples)
            })
            .collect()
    }

    /// `1/2 q_i'^2 + 1/2 omega_i^2 q_i^2` for each mode.
    pub fn modal_energies(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> Vec<f64> {
        self.modes
            .iter()
            .enumerate()
            .map(|(i, m)| 0.5 * qdot[i] * qdot[i] + 0.5 * m.omega_n * m.omega_n * q[i] * q[i])
            .collect()
    }

    fn check_len(&self, what: &str, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::DimensionMismatch(format!("{} {what} for {} DOF", got, self.len())));
        }
        Ok(())
    }
}

/// Generalized eigensolve of `(K, M)` through the Cholesky factor of `M`.
pub fn modal_decompose(sys: &MdofSystem) -> Result<ModalSystem> {
    let n = sys.dof();
    let chol = Cholesky::new(sys.m.clone()).ok_or(Error::NotPositiveDefinite { name: "M" })?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite { name: "M" })?;
    let reduced = &l_inv * &sys.k * l_inv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if eig.eigenvalues[order[0]] <= 0.0 {
        return Err(Error::NotPositiveDefinite { name: "K" });
    }
    let back = l_inv.transpose();
    let mut shapes = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut phi = &back * eig.eigenvectors.column(i);
        let pivot = phi.iter().cloned().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            phi = -phi;
        }
        shapes.set_column(col, &phi);
    }
    let modal_c = shapes.transpose() * &sys.c * &shapes;
    let diag_max = (0..n).map(|i| modal_c[(i, i)].abs()).fold(0.0, f64::max);
    let off_max = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| modal_c[(i, j)].abs())
        .fold(0.0, f64::max);
    let offdiag_ratio = if off_max == 0.0 {
        0.0
    } else if diag_max == 0.0 {
        f64::INFINITY
    } else {
        off_max / diag_max
    };
    if offdiag_ratio >= NON_CLASSICAL_TOL {
        return Err(Error::NonClassicalDamping { ratio: offdiag_ratio });
    }
    let mut modes = Vec::with_capacity(n);
    let mut subproblems = Vec::with_capacity(n);
    for (col, &i) in order.iter().enumerate() {
        let kappa = eig.eigenvalues[i];
        let damping = modal_c[(col, col)];
        let sub = SdofSystem::new(damping, kappa, sys.t_bar)?;
        let damping_ratio = sub.damping_ratio();
        modes.push(Mode {
            omega_n: kappa.sqrt(),
            shape: shapes.column(col).iter().copied().collect(),
            damping,
            damping_ratio,
            underdamped: damping_ratio < 1.0,
        });
        subproblems.push(sub);
    }
    let to_modal = shapes.transpose() * &sys.m;
    Ok(ModalSystem {
        modes,
        shapes,
        to_modal,
        subproblems,
        offdiag_ratio,
        t_bar: sys.t_bar,
    })
}

/// Per-mode solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Engine {
    Oracle,
    /// Galerkin solve; a damped-wave family takes each mode's own damping.
    Weak(BasisFamily),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdofSolution {
    pub modal: ModalSystem,
    /// Modal coordinates on the grid.
    pub modes: Vec<Trajectory>,
    /// Physical coordinates on the grid.
    pub dofs: Vec<Trajectory>,
}

pub fn mdof_solve(
    sys: &MdofSystem,
    f: &[Excitation],
    ic: &[InitialConditions],
    engine: &Engine,
    grid: &[f64],
) -> Result<MdofSolution> {
    let modal = modal_decompose(sys)?;
    let f_modal = modal.modal_excitations(f)?;
    let ic_modal = modal.modal_initial_conditions(ic)?;
    if let Engine::Weak(_) = engine {
        for (i, sub) in modal.subproblems().iter().enumerate() {
            let check = is_exceptional(sub, EXCEPTIONAL_TOL)?;
            if check.exceptional {
                return Err(Error::ExceptionalHorizon {
                    t_bar: sys.t_bar(),
                    sine: check.sine,
                    suggestion: check.suggestion,
                    mode: Some(i),
                });
            }
        }
    }
    let modes = modal
        .subproblems()
        .par_iter()
        .zip(f_modal.par_iter())
        .zip(ic_modal.par_iter())
        .map(|((sub, fi), ici)| -> Result<Trajectory> {
            let motion: Box<dyn Motion> = match engine {
                Engine::Oracle => Box::new(DuhamelOracle::new(sub, fi, ici)?),
                Engine::Weak(family) => {
                    let family = match family {
                        BasisFamily::DampedWave { modes, .. } => BasisFamily::DampedWave {
                            c: sub.c(),
                            modes: *modes,
                        },
                        other => other.clone(),
                    };
                    let basis = BasisSet::from_family(sub.t_bar(), family)?;
                    Box::new(solve_weak(sub, &basis, fi, ici)?)
                }
            };
            Trajectory::from_motion(motion.as_ref(), grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let dofs = modal.to_physical(&modes)?;
    Ok(MdofSolution { modal, modes, dofs })
}

/// Per-mode maps `q_i'(0) -> q_i(T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalCorrespondence {
    pub maps: Vec<BoundaryMap>,
    /// Modes whose horizon is exceptional.
    pub exceptional_modes: Vec<usize>,
    /// Every map is invertible.
    pub bijective: bool,
}

pub fn mdof_boundary_correspondence(
    modal: &ModalSystem,
    f_modal: &[Excitation],
    ic_modal: &[InitialConditions],
) -> Result<ModalCorrespondence> {
    modal.check_len("modal excitations", f_modal.len())?;
    modal.check_len("modal initial conditions", ic_modal.len())?;
    let mut maps = Vec::with_capacity(modal.len());
    let mut exceptional_modes = Vec::new();
    for (i, sub) in modal.subproblems().iter().enumerate() {
        maps.push(boundary_map_unchecked(sub, &f_modal[i], ic_modal[i].x0)?);
        if is_exceptional(sub, EXCEPTIONAL_TOL)?.exceptional {
            exceptional_modes.push(i);
        }
    }
    Ok(ModalCorrespondence {
        maps,
        bijective: exceptional_modes.is_empty(),
        exceptional_modes,
    })
}
