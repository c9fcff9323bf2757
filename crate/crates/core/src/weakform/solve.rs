use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analytic::Fundamentals;
use crate::basis::{BasisEval, BasisSet};
use crate::error::{invalid, Error, Result};
use crate::model::{BoundaryConditions, Excitation, InitialConditions, Motion, SdofSystem, Trial};
use crate::oracle::DuhamelOracle;

use super::assemble::assemble;
use super::linalg::SymmetricSolver;

/// Default threshold on `|sin(omega_d T)|`.
pub const EXCEPTIONAL_TOL: f64 = 1e-8;

/// Galerkin approximation `x0 b_0 + sum u_i b_i + x_T b_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSolution {
    basis: BasisSet,
    u: DVector<f64>,
    x0: f64,
    xt: f64,
    condition: f64,
    closure_coefficient: f64,
}

impl WeakSolution {
    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn basis_id(&self) -> String {
        self.basis.id()
    }

    /// Interior coefficients.
    pub fn u(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn xt(&self) -> f64 {
        self.xt
    }

    /// Condition number of the Galerkin matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Coefficient of `x_T` in the initial-velocity equation.
    pub fn closure_coefficient(&self) -> f64 {
        self.closure_coefficient
    }

    /// All `n + 2` coefficients, carriers first and last.
    pub fn coefficients(&self) -> DVector<f64> {
        let n = self.u.len();
        DVector::from_fn(n + 2, |i, _| match i {
            0 => self.x0,
            i if i == n + 1 => self.xt,
            i => self.u[i - 1],
        })
    }

    /// Copy with interior coefficient `i` (0-based) shifted by `delta`.
    pub fn perturbed(&self, i: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.u[i] += delta;
        out
    }

    fn jet_with(&self, t: f64, ev: &mut BasisEval) -> [f64; 3] {
        self.basis.eval_into(t, ev);
        let coef = self.coefficients();
        let dot = |v: &[f64]| v.iter().zip(coef.iter()).map(|(a, b)| a * b).sum::<f64>();
        [dot(&ev.value), dot(&ev.first), dot(&ev.second)]
    }
}

impl Trial for WeakSolution {
    fn jet(&self, t: f64) -> [f64; 3] {
        self.jet_with(t, &mut BasisEval::default())
    }
}

impl Motion for WeakSolution {
    fn state(&self, t: f64) -> (f64, f64) {
        let [x, v, _] = self.jet(t);
        (x, v)
    }
}

/// Galerkin solution of the boundary-value problem `x(0) = x0`, `x(T) = x_T`.
pub fn solve_weak_bvp(
    sys: &SdofSystem,
    basis: &BasisSet,
    f: &Excitation,
    bc: &BoundaryConditions,
) -> Result<WeakSolution> {
    let assembled = assemble(sys, basis, f, bc.x0)?;
    let solver = SymmetricSolver::new(&assembled.b)?;
    let u = solver.solve(&assembled.rhs(bc.xt));
    Ok(WeakSolution {
        basis: basis.clone(),
        u,
        x0: bc.x0,
        xt: bc.xt,
        condition: solver.condition(),
        closure_coefficient: f64::NAN,
    })
}

/// Galerkin solution of the initial-value problem.
///
/// Solves `B u = F_fixed` and `B w = F_slope`, so `u(x_T) = u + x_T w`, then
/// picks `x_T` so that the approximation starts with velocity `v0`.
pub fn solve_weak(sys: &SdofSystem, basis: &BasisSet, f: &Excitation, ic: &InitialConditions) -> Result<WeakSolution> {
    let assembled = assemble(sys, basis, f, ic.x0)?;
    let solver = SymmetricSolver::new(&assembled.b)?;
    let u_fixed = solver.solve(&assembled.f_fixed);
    let u_slope = solver.solve(&assembled.f_slope);

    let start = basis.eval_all(0.0);
    let n = basis.n();
    let slopes = &start.first[1..=n];
    let dot = |v: &DVector<f64>| v.iter().zip(slopes).map(|(a, b)| a * b).sum::<f64>();
    let coefficient = dot(&u_slope) + start.first[n + 1];
    let rhs = ic.v0 - ic.x0 * start.first[0] - dot(&u_fixed);
    let scale = start.first.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if !(coefficient.abs() > 1e-12 * scale) {
        return Err(Error::DegenerateClosure { coefficient });
    }
    let xt = rhs / coefficient;
    Ok(WeakSolution {
        basis: basis.clone(),
        u: u_fixed + u_slope * xt,
        x0: ic.x0,
        xt,
        condition: solver.condition(),
        closure_coefficient: coefficient,
    })
}

/// Whether `sin(omega_d T)` vanishes, and how far `T` is from the nearest
/// point where it does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalCheck {
    pub exceptional: bool,
    pub sine: f64,
    /// Distance from `T` to the nearest `m pi / omega_d`, `m >= 1`.
    pub distance: f64,
    /// A nearby horizon well away from the exceptional set.
    pub suggestion: f64,
}

pub fn is_exceptional(sys: &SdofSystem, tol: f64) -> Result<ExceptionalCheck> {
    let wd = sys.derived_params()?.omega_d;
    let t = sys.t_bar();
    let sine = (wd * t).sin();
    let half_period = std::f64::consts::PI / wd;
    let m = (t / half_period).round().max(1.0);
    let distance = (t - m * half_period).abs();
    let exceptional = sine.abs() < tol;
    let suggestion = if exceptional {
        t + 0.1 * half_period
    } else {
        t
    };
    Ok(ExceptionalCheck {
        exceptional,
        sine,
        distance,
        suggestion,
    })
}

/// The affine map `v0 -> x(T)` for fixed `x0` and `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMap {
    pub alpha: f64,
    pub beta: f64,
}

impl BoundaryMap {
    pub fn eval(&self, v0: f64) -> f64 {
        self.alpha * v0 + self.beta
    }

    pub fn is_invertible(&self, tol: f64) -> bool {
        self.alpha.abs() > tol
    }

    /// Initial velocity that reaches `xt`.
    pub fn invert(&self, xt: f64) -> Result<f64> {
        if self.alpha == 0.0 {
            return Err(Error::DegenerateClosure { coefficient: 0.0 });
        }
        Ok((xt - self.beta) / self.alpha)
    }
}

/// How the final displacement is computed.
#[derive(Debug, Clone, PartialEq)]
pub enum MapMode {
    /// Duhamel oracle.
    Analytic,
    /// Galerkin solves on the given basis.
    Galerkin(BasisSet),
}

/// `x(T)` for the initial data `(x0, v0)`.
pub fn boundary_value(sys: &SdofSystem, f: &Excitation, x0: f64, v0: f64, mode: &MapMode) -> Result<f64> {
    let ic = InitialConditions::new(x0, v0)?;
    match mode {
        MapMode::Analytic => Ok(DuhamelOracle::new(sys, f, &ic)?.state(sys.t_bar()).0),
        MapMode::Galerkin(basis) => Ok(solve_weak(sys, basis, f, &ic)?.xt()),
    }
}

/// The boundary map; fails on exceptional horizons.
pub fn boundary_map(sys: &SdofSystem, f: &Excitation, x0: f64, mode: &MapMode) -> Result<BoundaryMap> {
    let check = is_exceptional(sys, EXCEPTIONAL_TOL)?;
    if check.exceptional {
        return Err(Error::ExceptionalHorizon {
            t_bar: sys.t_bar(),
            sine: check.sine,
            suggestion: check.suggestion,
            mode: None,
        });
    }
    match mode {
        MapMode::Analytic => boundary_map_unchecked(sys, f, x0),
        MapMode::Galerkin(_) => {
            let beta = boundary_value(sys, f, x0, 0.0, mode)?;
            let alpha = boundary_value(sys, f, x0, 1.0, mode)? - beta;
            Ok(BoundaryMap { alpha, beta })
        }
    }
}

/// Analytic map without the exceptional-horizon check:
/// `alpha = s(T)`, `beta = x(T)` for initial data `(x0, 0)`.
pub fn boundary_map_unchecked(sys: &SdofSystem, f: &Excitation, x0: f64) -> Result<BoundaryMap> {
    if (f.t_bar() - sys.t_bar()).abs() > 1e-12 * sys.t_bar() {
        return Err(invalid("excitation", "horizon differs from the system horizon"));
    }
    let alpha = Fundamentals::new(sys)?.at(sys.t_bar()).s;
    let beta = DuhamelOracle::new(sys, f, &InitialConditions::new(x0, 0.0)?)?
        .state(sys.t_bar())
        .0;
    Ok(BoundaryMap { alpha, beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_problem_has_zero_solution() {
        let sys = SdofSystem::new(0.2, 1.0, 3.0).unwrap();
        let basis = BasisSet::bernstein(3.0, 8).unwrap();
        let f = Excitation::zero(3.0).unwrap();
        let sol = solve_weak(&sys, &basis, &f, &InitialConditions::zero()).unwrap();
        assert!(sol.u().amax() == 0.0);
        assert_eq!(sol.xt(), 0.0);
    }

    #[test]
    fn step_response_degree_16() {
        let sys = SdofSystem::new(0.0, 1.0, 1.0).unwrap();
        let basis = BasisSet::bernstein(1.0, 16).unwrap();
        let f = Excitation::constant(1.0, 1.0).unwrap();
        let sol = solve_weak(&sys, &basis, &f, &InitialConditions::zero()).unwrap();
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert!((sol.state(t).0 - (1.0 - t.cos())).abs() < 1e-6);
        }
    }

    #[test]
    fn initial_data_are_met() {
        let sys = SdofSystem::new(0.2, 1.0, 8.0).unwrap();
        let basis = BasisSet::bernstein(8.0, 12).unwrap();
        let f = Excitation::polynomial(8.0, vec![0.0, 0.3]).unwrap();
        let ic = InitialConditions::new(1.0, 0.5).unwrap();
        let sol = solve_weak(&sys, &basis, &f, &ic).unwrap();
        let (x, v) = sol.state(0.0);
        assert!((x - 1.0).abs() < 1e-14);
        assert!((v - 0.5).abs() < 1e-10);
        assert!((sol.state(8.0).0 - sol.xt()).abs() < 1e-13);
    }

    #[test]
    fn exceptional_examples() {
        let at = |c: f64, t: f64| {
            let sys = SdofSystem::new(c, 1.0, t).unwrap();
            is_exceptional(&sys, EXCEPTIONAL_TOL).unwrap()
        };
        let pi = at(0.0, PI);
        assert!(pi.exceptional);
        assert!(pi.distance < 1e-15);
        assert!(!at(0.0, 1.0).exceptional);
        let wd = (1.0f64 - 0.09).sqrt();
        assert!(at(0.6, 2.0 * PI / wd).exceptional);
        assert!(!at(0.0, PI + 0.1).exceptional);
        assert!(!at(0.0, pi.suggestion).exceptional);
    }

    #[test]
    fn analytic_map_examples() {
        let sys = SdofSystem::new(0.3, 1.0, 2.0).unwrap();
        let zero = Excitation::zero(2.0).unwrap();
        let map = boundary_map(&sys, &zero, 0.0, &MapMode::Analytic).unwrap();
        assert_eq!(map.beta, 0.0);
        assert_eq!(map.alpha, Fundamentals::new(&sys).unwrap().at(2.0).s);

        let quarter = SdofSystem::new(0.0, 1.0, PI / 2.0).unwrap();
        let z = Excitation::zero(PI / 2.0).unwrap();
        let map = boundary_map(&quarter, &z, 1.0, &MapMode::Analytic).unwrap();
        assert!((map.alpha - 1.0).abs() < 1e-15);
        assert!(map.beta.abs() < 1e-15);

        let half = SdofSystem::new(0.0, 1.0, PI).unwrap();
        let z = Excitation::zero(PI).unwrap();
        assert!(boundary_map(&half, &z, 0.0, &MapMode::Analytic).is_err());
        assert!(boundary_map_unchecked(&half, &z, 0.0).unwrap().alpha.abs() < 1e-12);
    }

    #[test]
    fn galerkin_map_approaches_analytic() {
        let sys = SdofSystem::new(0.2, 1.0, 4.0).unwrap();
        let f = Excitation::polynomial(4.0, vec![1.0, -0.25]).unwrap();
        let exact = boundary_map(&sys, &f, 0.5, &MapMode::Analytic).unwrap();
        let mut last = f64::INFINITY;
        for degree in [4, 8, 16] {
            let basis = BasisSet::bernstein(4.0, degree).unwrap();
            let map = boundary_map(&sys, &f, 0.5, &MapMode::Galerkin(basis)).unwrap();
            let err = (map.alpha - exact.alpha).abs() + (map.beta - exact.beta).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-8);
    }
}
