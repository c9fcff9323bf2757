use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::analytic::Fundamentals;
use crate::basis::{BasisEval, BasisSet, GramKind};
use crate::error::{Error, Result};
use crate::model::{Excitation, InitialConditions, Motion, SdofSystem, TimeFunction};
use crate::oracle::DuhamelOracle;
use crate::quadrature::{panel_breaks, weak_integral, GaussRule};

use super::assemble::check_compatible;
use super::linalg::{orthonormal_columns, principal_angles};
use super::solve::WeakSolution;

const ORDER: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSummary {
    pub min: f64,
    pub max: f64,
    pub all: Vec<f64>,
}

impl AngleSummary {
    fn from_angles(all: Vec<f64>) -> Self {
        let min = all.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = all.iter().cloned().fold(0.0, f64::max);
        Self {
            min: if all.is_empty() { 0.0 } else { min },
            max,
            all,
        }
    }
}

/// Evaluated right-hand sides of the a-posteriori bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub x_at_t: f64,
    pub x_linf: f64,
    pub x_l2: f64,
    pub v_at_t: f64,
    pub v_l2: f64,
}

/// `max_i |<f - f_ap, b_i>_c|` computed two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResidual {
    /// From the Gram matrices: `<f, b_i>_c + <x_ap', b_i'>_c - k <x_ap, b_i>_c`.
    pub direct: f64,
    /// From the weak residual: `<F_er, b_i'>_0`.
    pub dual: f64,
    /// `||f||_c + ||x_ap''||_c + c ||x_ap'||_c + k ||x_ap||_c`, the size of
    /// the terms that cancel in the residual.
    pub scale: f64,
}

/// Error norms against the Duhamel reference, weak residual norms,
/// subspace angles and bound evaluations for one weak solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub basis_id: String,
    pub n: usize,
    pub xt: f64,
    pub condition: f64,
    /// `||e^{c.}(f - f_ap)||_{H^-1}`: mean-adjusted L2 norm of `F_er`.
    pub f_er_hminus1: f64,
    /// `||F_er||_{L2}` with `F_er(0) = 0`.
    #[serde(rename = "F_er_l2")]
    pub big_f_er_l2: f64,
    /// `||F_er||_{H1}`, which controls the error for smooth forcing.
    #[serde(rename = "F_er_h1")]
    pub big_f_er_h1: f64,
    pub x_er_l2: f64,
    pub x_er_linf: f64,
    pub v_er_l2: f64,
    pub x_er_h1: f64,
    pub x_er_at_t: f64,
    pub v_er_at_t: f64,
    /// `||x_er||_{H1} / ||F_er||_{L2}`.
    pub ratio_h1_over_fer: f64,
    pub theta_nh: AngleSummary,
    pub theta_h: AngleSummary,
    /// Coefficient making `x - x0 b_0 - lambda b_1` start at rest.
    pub lambda_ic: f64,
    pub bound_rhs: BoundSummary,
    /// Measured error divided by `||F_er||_{L2}`.
    pub effective_constants: BoundSummary,
    pub projection_residual: ProjectionResidual,
}

impl ErrorReport {
    /// Bounds exceeded by the measured errors, allowing for roundoff in
    /// the reference solution.
    pub fn bound_violations(&self, floor: f64) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, measured: f64, bound: f64| {
            if measured > bound + floor {
                out.push(format!("{name}: measured {measured:.3e} > bound {bound:.3e}"));
            }
        };
        check("x_l2", self.x_er_l2, self.bound_rhs.x_l2);
        check("x_linf", self.x_er_linf, self.bound_rhs.x_linf);
        check("x_at_t", self.x_er_at_t, self.bound_rhs.x_at_t);
        check("v_at_t", self.v_er_at_t, self.bound_rhs.v_at_t);
        check("v_l2", self.v_er_l2, self.bound_rhs.v_l2);
        out
    }
}

/// Quadrature nodes on `[0, T]` with everything sampled there.
struct Samples {
    t: Vec<f64>,
    w: Vec<f64>,
    /// Index one past the last node of each panel.
    panel_stop: Vec<usize>,
    panel_left: Vec<f64>,
    /// Basis values and first derivatives, one row per node.
    value: DMatrix<f64>,
    first: DMatrix<f64>,
    second: DMatrix<f64>,
    /// `int_0^t e^{c tau} b_j` at each node.
    cum: DMatrix<f64>,
    /// Same at `T`.
    cum_end: DVector<f64>,
    start: BasisEval,
    end: BasisEval,
}

impl Samples {
    fn new(basis: &BasisSet, c: f64, omega_d: f64, f: &Excitation) -> Self {
        let t_bar = basis.t_bar();
        let len = basis.len();
        let mut width = t_bar / (64.0f64).max(2.0 * len as f64);
        width = width.min(0.5 / omega_d);
        if c > 0.0 {
            width = width.min(1.0 / c);
        }
        let breaks = panel_breaks(0.0, t_bar, f.mesh(), width);
        let rule = GaussRule::cached(ORDER);
        let m = (breaks.len() - 1) * ORDER;
        let mut s = Self {
            t: Vec::with_capacity(m),
            w: Vec::with_capacity(m),
            panel_stop: Vec::new(),
            panel_left: Vec::new(),
            value: DMatrix::zeros(m, len),
            first: DMatrix::zeros(m, len),
            second: DMatrix::zeros(m, len),
            cum: DMatrix::zeros(m, len),
            cum_end: DVector::zeros(len),
            start: basis.eval_all(0.0),
            end: basis.eval_all(t_bar),
        };
        let mut ev = BasisEval::default();
        let mut acc = DVector::<f64>::zeros(len);
        for p in breaks.windows(2) {
            let (l, r) = (p[0], p[1]);
            s.panel_left.push(l);
            for (t, w) in rule.mapped(l, r) {
                let q = s.t.len();
                s.t.push(t);
                s.w.push(w);
                basis.eval_into(t, &mut ev);
                for j in 0..len {
                    s.value[(q, j)] = ev.value[j];
                    s.first[(q, j)] = ev.first[j];
                    s.second[(q, j)] = ev.second[j];
                }
                let mut partial = acc.clone();
                let mut inner = BasisEval::default();
                for (tau, wt) in rule.mapped(l, t) {
                    basis.eval_into(tau, &mut inner);
                    let e = wt * (c * tau).exp();
                    for j in 0..len {
                        partial[j] += e * inner.value[j];
                    }
                }
                s.cum.row_mut(q).copy_from(&partial.transpose());
            }
            let first_q = s.t.len() - ORDER;
            for q in first_q..s.t.len() {
                let e = s.w[q] * (c * s.t[q]).exp();
                for j in 0..len {
                    acc[j] += e * s.value[(q, j)];
                }
            }
            s.panel_stop.push(s.t.len());
        }
        s.cum_end = acc;
        s
    }
}

/// Weak residual `F_er = F_f - F_ap` at every node and at `T`, with
/// `F_ap(t) = e^{ct} x_ap'(t) - x_ap'(0) + k int_0^t e^{c tau} x_ap`.
fn weak_residual(s: &Samples, sys: &SdofSystem, f: &Excitation, coef: &DVector<f64>) -> (Vec<f64>, f64) {
    let (c, k) = (sys.c(), sys.k());
    let big_f = weak_integral(f, c);
    let v0 = dot(&s.start.first, coef);
    let xdot = &s.first * coef;
    let cum = &s.cum * coef;
    let at_nodes = s
        .t
        .iter()
        .enumerate()
        .map(|(q, &t)| big_f.eval(t) - ((c * t).exp() * xdot[q] - v0 + k * cum[q]))
        .collect();
    let t_bar = sys.t_bar();
    let at_end = big_f.eval(t_bar) - ((c * t_bar).exp() * dot(&s.end.first, coef) - v0 + k * s.cum_end.dot(coef));
    (at_nodes, at_end)
}

fn dot(a: &[f64], b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn projection_residuals(
    s: &Samples,
    sys: &SdofSystem,
    basis: &BasisSet,
    f: &Excitation,
    coef: &DVector<f64>,
    f_er: &[f64],
    shift: f64,
) -> ProjectionResidual {
    let (c, k) = (sys.c(), sys.k());
    let n = basis.n();
    let stiffness = basis.gram_full(c, k, GramKind::Stiffness);
    let load = basis.load_vector(f, c);
    let applied = stiffness.tr_mul(coef);
    let direct = (1..=n).map(|i| (load[i] - applied[i]).abs()).fold(0.0, f64::max);
    let dual = (1..=n)
        .map(|i| {
            s.t.iter()
                .enumerate()
                .map(|(q, _)| s.w[q] * (f_er[q] + shift) * s.first[(q, i)])
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    let weighted = |g: &dyn Fn(usize) -> f64| {
        s.t.iter()
            .enumerate()
            .map(|(q, &t)| s.w[q] * (c * t).exp() * g(q).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let x = &s.value * coef;
    let v = &s.first * coef;
    let a = &s.second * coef;
    let scale = weighted(&|q| f.value(s.t[q]))
        + weighted(&|q| a[q])
        + c * weighted(&|q| v[q])
        + k * weighted(&|q| x[q]);
    ProjectionResidual { direct, dual, scale }
}

/// Galerkin orthogonality residual of `solution`; zero up to roundoff for
/// any output of [`super::solve_weak`].
pub fn verify_projection_identity(
    sys: &SdofSystem,
    basis: &BasisSet,
    f: &Excitation,
    ic: &InitialConditions,
    solution: &WeakSolution,
) -> Result<ProjectionResidual> {
    verify_projection_identity_shifted(sys, basis, f, ic, solution, 0.0)
}

/// As [`verify_projection_identity`], with a constant added to `F_er` in
/// the dual route.
pub fn verify_projection_identity_shifted(
    sys: &SdofSystem,
    basis: &BasisSet,
    f: &Excitation,
    ic: &InitialConditions,
    solution: &WeakSolution,
    shift: f64,
) -> Result<ProjectionResidual> {
    check_compatible(sys, basis, f)?;
    check_solution(basis, ic, solution)?;
    let omega_d = sys.derived_params()?.omega_d;
    let s = Samples::new(basis, sys.c(), omega_d, f);
    let coef = solution.coefficients();
    let (f_er, _) = weak_residual(&s, sys, f, &coef);
    Ok(projection_residuals(&s, sys, basis, f, &coef, &f_er, shift))
}

fn check_solution(basis: &BasisSet, ic: &InitialConditions, solution: &WeakSolution) -> Result<()> {
    if solution.basis() != basis {
        return Err(Error::DimensionMismatch(format!(
            "solution uses {} but the report was asked for {}",
            solution.basis_id(),
            basis.id()
        )));
    }
    if solution.x0() != ic.x0 {
        return Err(Error::BoundaryViolation(format!(
            "solution starts at {} but x0 = {}",
            solution.x0(),
            ic.x0
        )));
    }
    Ok(())
}

/// Full diagnostics of a weak solution against the Duhamel reference.
pub fn error_report(
    sys: &SdofSystem,
    basis: &BasisSet,
    f: &Excitation,
    ic: &InitialConditions,
    solution: &WeakSolution,
) -> Result<ErrorReport> {
    check_compatible(sys, basis, f)?;
    check_solution(basis, ic, solution)?;
    let (c, k, t_bar) = (sys.c(), sys.k(), sys.t_bar());
    let fund = Fundamentals::new(sys)?;
    let wd = fund.omega_d();
    let oracle = DuhamelOracle::new(sys, f, ic)?;
    let s = Samples::new(basis, c, wd, f);
    let coef = solution.coefficients();
    let m = s.t.len();
    let n = basis.n();

    let (f_er, f_er_end) = weak_residual(&s, sys, f, &coef);
    let x_ap = &s.value * &coef;
    let v_ap = &s.first * &coef;
    let a_ap = &s.second * &coef;

    // Errors against the reference.
    let mut x_l2 = 0.0;
    let mut v_l2 = 0.0;
    let mut x_linf = 0.0f64;
    for q in 0..m {
        let (x, v) = oracle.state(s.t[q]);
        x_l2 += s.w[q] * (x - x_ap[q]).powi(2);
        v_l2 += s.w[q] * (v - v_ap[q]).powi(2);
        x_linf = x_linf.max((x - x_ap[q]).abs());
    }
    for &t in s.panel_left.iter().chain(std::iter::once(&t_bar)) {
        let (x, _) = oracle.state(t);
        x_linf = x_linf.max((x - solution.state(t).0).abs());
    }
    let (x_l2, v_l2) = (x_l2.sqrt(), v_l2.sqrt());
    let (x_end, v_end) = oracle.state(t_bar);
    let (xa_end, va_end) = solution.state(t_bar);
    let x_er_at_t = (x_end - xa_end).abs();
    let v_er_at_t = (v_end - va_end).abs();

    // Weak residual norms.
    let f_er_l2 = (0..m).map(|q| s.w[q] * f_er[q].powi(2)).sum::<f64>().sqrt();
    let mean = (0..m).map(|q| s.w[q] * f_er[q]).sum::<f64>() / t_bar;
    let f_er_hm1 = (0..m).map(|q| s.w[q] * (f_er[q] - mean).powi(2)).sum::<f64>().sqrt();
    let f_er_dot = (0..m)
        .map(|q| {
            let t = s.t[q];
            let fap = a_ap[q] + c * v_ap[q] + k * x_ap[q];
            s.w[q] * ((c * t).exp() * (f.value(t) - fap)).powi(2)
        })
        .sum::<f64>();
    let f_er_h1 = (f_er_l2.powi(2) + f_er_dot).sqrt();

    // Kernels of the F-form of the Duhamel integral.
    let mut g1 = Vec::with_capacity(m);
    let mut g2 = Vec::with_capacity(m);
    let mut h2 = Vec::with_capacity(m);
    for &t in &s.t {
        let fv = fund.at(t);
        g1.push(fv.d - 0.5 * c * fv.s);
        let h = 0.5 * c * fv.d + wd * wd * fv.s;
        h2.push(h);
        g2.push(h / wd);
    }

    // Projections onto span{b_i'} in L2(0, T), via weighted node vectors.
    let sqrt_w: Vec<f64> = s.w.iter().map(|w| w.sqrt()).collect();
    let deriv = DMatrix::from_fn(m, n, |q, i| sqrt_w[q] * s.first[(q, i + 1)]);
    let qd = orthonormal_columns(&deriv, 1e-13);
    let as_vec = |v: &[f64]| DVector::from_fn(m, |q, _| sqrt_w[q] * v[q]);
    let perp_norm = |v: &[f64]| {
        let x = as_vec(v);
        let proj = &qd * qd.tr_mul(&x);
        (x - proj).norm()
    };
    let norm = |v: &[f64]| as_vec(v).norm();
    let f_er_in_span = qd.tr_mul(&as_vec(&f_er)).norm();

    let end = fund.at(t_bar);
    let decay_end = (-0.5 * c * t_bar).exp();
    let x_at_t_bound = decay_end
        * (f_er_l2 * (perp_norm(&g1).powi(2) + perp_norm(&g2).powi(2)).sqrt()
            + f_er_in_span * (norm(&g1).powi(2) + norm(&g2).powi(2)).sqrt());
    let vel_gain = (end.d_dot.powi(2) + end.s_dot.powi(2)).sqrt();
    let v_at_t_bound = (-c * t_bar).exp() * f_er_end.abs()
        + vel_gain
            * (f_er_l2 * (perp_norm(&g1).powi(2) + perp_norm(&h2).powi(2)).sqrt()
                + f_er_in_span * (norm(&g1).powi(2) + norm(&h2).powi(2)).sqrt());

    // Pointwise bounds with cumulative norms taken at panel ends.
    let (mut cf, mut cg12, mut cg1h2) = (0.0, 0.0, 0.0);
    let mut x_linf_bound = 0.0f64;
    let mut x_l2_bound = 0.0;
    let mut v_l2_bound = 0.0;
    let mut start = 0;
    for (p, &stop) in s.panel_stop.iter().enumerate() {
        for q in start..stop {
            cf += s.w[q] * f_er[q].powi(2);
            cg12 += s.w[q] * (g1[q].powi(2) + g2[q].powi(2));
            cg1h2 += s.w[q] * (g1[q].powi(2) + h2[q].powi(2));
        }
        let left = s.panel_left[p];
        let right = s.panel_left.get(p + 1).copied().unwrap_or(t_bar);
        let bx = (-0.5 * c * left).exp() * cf.sqrt() * cg12.sqrt();
        x_linf_bound = x_linf_bound.max(bx);
        x_l2_bound += (right - left) * bx * bx;
        for q in start..stop {
            let fv = fund.at(s.t[q]);
            let bv = (-c * s.t[q]).exp() * f_er[q].abs()
                + (fv.d_dot.powi(2) + fv.s_dot.powi(2)).sqrt() * cf.sqrt() * cg1h2.sqrt();
            v_l2_bound += s.w[q] * bv * bv;
        }
        start = stop;
    }
    let bound_rhs = BoundSummary {
        x_at_t: x_at_t_bound,
        x_linf: x_linf_bound,
        x_l2: x_l2_bound.sqrt(),
        v_at_t: v_at_t_bound,
        v_l2: v_l2_bound.sqrt(),
    };
    let per = |v: f64| if f_er_l2 > 0.0 { v / f_er_l2 } else { 0.0 };
    let effective_constants = BoundSummary {
        x_at_t: per(x_er_at_t),
        x_linf: per(x_linf),
        x_l2: per(x_l2),
        v_at_t: per(v_er_at_t),
        v_l2: per(v_l2),
    };

    // Subspace angles.
    let big_g = DMatrix::from_fn(m, basis.len(), |q, j| {
        (c * s.t[q]).exp() * s.first[(q, j)] - s.start.first[j] + k * s.cum[(q, j)]
    });
    let e00 = initial_rest_subspace(&s.start);
    let centered = |cols: DMatrix<f64>| {
        let mut out = cols;
        for mut col in out.column_iter_mut() {
            let mean = (0..m).map(|q| s.w[q] * col[q]).sum::<f64>() / t_bar;
            for q in 0..m {
                col[q] = sqrt_w[q] * (col[q] - mean);
            }
        }
        out
    };
    let forcing_space = centered(&big_g * e00);
    let carrier_space = centered(big_g.columns(0, 2).into_owned());
    let theta_nh = AngleSummary::from_angles(principal_angles(&forcing_space, &deriv));
    let theta_h = AngleSummary::from_angles(principal_angles(&carrier_space, &deriv));

    let lambda_ic = (ic.v0 - ic.x0 * s.start.first[0]) / s.start.first[1];
    let projection_residual = projection_residuals(&s, sys, basis, f, &coef, &f_er, 0.0);
    let x_er_h1 = (x_l2 * x_l2 + v_l2 * v_l2).sqrt();

    Ok(ErrorReport {
        basis_id: basis.id(),
        n,
        xt: solution.xt(),
        condition: solution.condition(),
        f_er_hminus1: f_er_hm1,
        big_f_er_l2: f_er_l2,
        big_f_er_h1: f_er_h1,
        x_er_l2: x_l2,
        x_er_linf: x_linf,
        v_er_l2: v_l2,
        x_er_h1,
        x_er_at_t,
        v_er_at_t,
        ratio_h1_over_fer: per(x_er_h1),
        theta_nh,
        theta_h,
        lambda_ic,
        bound_rhs,
        effective_constants,
        projection_residual,
    })
}

/// Coefficient vectors of trial functions with zero initial value and
/// slope (null space of the two initial constraints).
fn initial_rest_subspace(start: &BasisEval) -> DMatrix<f64> {
    let len = start.value.len();
    let constraints = DMatrix::from_fn(2, len, |r, j| if r == 0 { start.value[j] } else { start.first[j] });
    let scale = constraints.amax();
    let normal = (constraints.transpose() * &constraints) / (scale * scale);
    let eig = SymmetricEigen::new(normal);
    let keep: Vec<usize> = (0..len).filter(|&i| eig.eigenvalues[i].abs() < 1e-10).collect();
    DMatrix::from_fn(len, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
}
