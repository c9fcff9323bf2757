use nalgebra::{DMatrix, DVector};

use crate::basis::{BasisSet, GramKind};
use crate::error::{invalid, Error, Result};
use crate::model::{poly_derivative, Excitation, SdofSystem, Trial};

use super::solve::{is_exceptional, EXCEPTIONAL_TOL};

/// `x'' + c x' + k x` for a piecewise polynomial displacement; the result
/// lives on the same mesh and has the same degree.
pub fn apply_f_operator_poly(sys: &SdofSystem, x: &Excitation) -> Result<Excitation> {
    let segments = x
        .segments()
        .iter()
        .map(|p| {
            let d1 = poly_derivative(p);
            let d2 = poly_derivative(&d1);
            (0..p.len())
                .map(|j| {
                    sys.k() * p[j]
                        + sys.c() * d1.get(j).copied().unwrap_or(0.0)
                        + d2.get(j).copied().unwrap_or(0.0)
                })
                .collect()
        })
        .collect();
    Excitation::with_max_degree(x.mesh().to_vec(), segments, x.degree().max(Excitation::MAX_DEGREE))
}

/// `x'' + c x' + k x` of an arbitrary trial function, evaluated lazily.
pub struct OperatorImage<'a, T: Trial + ?Sized> {
    c: f64,
    k: f64,
    x: &'a T,
}

pub fn apply_f_operator<'a, T: Trial + ?Sized>(sys: &SdofSystem, x: &'a T) -> OperatorImage<'a, T> {
    OperatorImage {
        c: sys.c(),
        k: sys.k(),
        x,
    }
}

impl<T: Trial + ?Sized> OperatorImage<'_, T> {
    pub fn value(&self, t: f64) -> f64 {
        let [x, v, a] = self.x.jet(t);
        a + self.c * v + self.k * x
    }
}

/// The Galerkin system `B u = F_fixed + x_T F_slope`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub b: DMatrix<f64>,
    pub f_fixed: DVector<f64>,
    pub f_slope: DVector<f64>,
    pub basis_id: String,
    pub sys: SdofSystem,
    pub x0: f64,
    /// Full value Gram `<b_i, b_j>_c`, carriers included.
    pub value_gram: DMatrix<f64>,
    /// Full derivative Gram `<b_i', b_j'>_c`, carriers included.
    pub derivative_gram: DMatrix<f64>,
    /// `<f, b_i>_c` for every function, carriers included.
    pub load: DVector<f64>,
}

impl AssembledSystem {
    /// Right-hand side for a given final displacement.
    pub fn rhs(&self, xt: f64) -> DVector<f64> {
        &self.f_fixed + &self.f_slope * xt
    }
}

/// Builds `B_ij = -<b_i', b_j'>_c + k <b_i, b_j>_c` and
/// `F_i = <f, b_i>_c + <x0 b_0' + x_T b_{n+1}', b_i'>_c - k <x0 b_0 + x_T b_{n+1}, b_i>_c`.
pub fn assemble(sys: &SdofSystem, basis: &BasisSet, f: &Excitation, x0: f64) -> Result<AssembledSystem> {
    check_compatible(sys, basis, f)?;
    let check = is_exceptional(sys, EXCEPTIONAL_TOL)?;
    if check.exceptional {
        return Err(Error::ExceptionalHorizon {
            t_bar: sys.t_bar(),
            sine: check.sine,
            suggestion: check.suggestion,
            mode: None,
        });
    }
    let (c, k) = (sys.c(), sys.k());
    let n = basis.n();
    let last = n + 1;
    let value_gram = basis.gram_full(c, k, GramKind::Value);
    let derivative_gram = basis.gram_full(c, k, GramKind::Derivative);
    let load = basis.load_vector(f, c);

    let b = DMatrix::from_fn(n, n, |i, j| {
        -derivative_gram[(i + 1, j + 1)] + k * value_gram[(i + 1, j + 1)]
    });
    let carrier = |col: usize, i: usize| derivative_gram[(col, i + 1)] - k * value_gram[(col, i + 1)];
    let f_fixed = DVector::from_fn(n, |i, _| load[i + 1] + x0 * carrier(0, i));
    let f_slope = DVector::from_fn(n, |i, _| carrier(last, i));
    Ok(AssembledSystem {
        b,
        f_fixed,
        f_slope,
        basis_id: basis.id(),
        sys: *sys,
        x0,
        value_gram,
        derivative_gram,
        load,
    })
}

pub(crate) fn check_compatible(sys: &SdofSystem, basis: &BasisSet, f: &Excitation) -> Result<()> {
    let t = sys.t_bar();
    if (basis.t_bar() - t).abs() > 1e-12 * t {
        return Err(invalid("basis", format!("built for T = {}, system horizon is {t}", basis.t_bar())));
    }
    if (f.t_bar() - t).abs() > 1e-12 * t {
        return Err(invalid("excitation", format!("defined on [0, {}], system horizon is {t}", f.t_bar())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct Sine;
    impl Trial for Sine {
        fn jet(&self, t: f64) -> [f64; 3] {
            [t.sin(), t.cos(), -t.sin()]
        }
    }

    #[test]
    fn operator_examples() {
        let undamped = SdofSystem::new(0.0, 1.0, 3.0).unwrap();
        let image = apply_f_operator(&undamped, &Sine);
        for t in [0.0, 0.4, 2.9] {
            assert_abs_diff_eq!(image.value(t), 0.0, epsilon = 1e-15);
        }
        let sys = SdofSystem::new(1.0, 2.0, 3.0).unwrap();
        let one = Excitation::constant(3.0, 1.0).unwrap();
        assert_eq!(apply_f_operator_poly(&sys, &one).unwrap().eval(1.0).unwrap(), 2.0);
        let sq = Excitation::polynomial(3.0, vec![0.0, 0.0, 1.0]).unwrap();
        let f = apply_f_operator_poly(&sys, &sq).unwrap();
        assert_eq!(f.segments()[0], vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn one_interior_function() {
        let sys = SdofSystem::new(0.0, 1.0, 1.0).unwrap();
        let basis = BasisSet::bernstein(1.0, 2).unwrap();
        let zero = Excitation::zero(1.0).unwrap();
        let a = assemble(&sys, &basis, &zero, 0.0).unwrap();
        assert_abs_diff_eq!(a.b[(0, 0)], -4.0 / 3.0 + 2.0 / 15.0, epsilon = 1e-15);
        assert_eq!(a.f_fixed[0], 0.0);
    }

    #[test]
    fn rhs_is_affine_in_final_value() {
        let sys = SdofSystem::new(0.3, 2.0, 2.0).unwrap();
        let basis = BasisSet::bernstein(2.0, 7).unwrap();
        let f = Excitation::polynomial(2.0, vec![1.0, -1.0, 0.5]).unwrap();
        let a = assemble(&sys, &basis, &f, 0.7).unwrap();
        let diff = a.rhs(1.0) - a.rhs(0.0);
        assert!((diff - &a.f_slope).amax() < 1e-15);
        assert!((&a.b - a.b.transpose()).amax() == 0.0);
    }

    #[test]
    fn exceptional_horizon_is_rejected() {
        let sys = SdofSystem::new(0.0, 1.0, std::f64::consts::PI).unwrap();
        let basis = BasisSet::bernstein(sys.t_bar(), 6).unwrap();
        let f = Excitation::zero(sys.t_bar()).unwrap();
        assert!(matches!(
            assemble(&sys, &basis, &f, 0.0),
            Err(Error::ExceptionalHorizon { .. })
        ));
    }
}
