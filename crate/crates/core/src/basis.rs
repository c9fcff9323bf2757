//! Trial bases on `[0, T]`.
//!
//! A basis holds `n + 2` functions: the carrier `b_0` (value 1 at 0, 0 at
//! T), the interior functions `b_1..b_n` vanishing at both ends, and the
//! carrier `b_{n+1}` (0 at 0, 1 at T).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Excitation, TimeFunction};
use crate::quadrature::{composite_nodes, panel_breaks};

/// Which family the functions come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum BasisFamily {
    /// Bernstein polynomials `B_{i,N}(t/T)`; carriers are `B_0` and `B_N`.
    Bernstein { degree: usize },
    /// Interior `e^{-ct/2} sin(pi k t / T)`, carriers
    /// `e^{-ct/2} cos(pi t / 2T)` and `sin(pi t / 2T)`. Experimental.
    DampedWave { c: f64, modes: usize },
}

/// Gram matrix selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GramKind {
    /// `<b_i, b_j>_c`
    Value,
    /// `<b_i', b_j'>_c`
    Derivative,
    /// `-<b_i', b_j'>_c + k <b_i, b_j>_c`
    Stiffness,
}

/// Values and first two derivatives of every basis function at one time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BasisEval {
    pub value: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    t_bar: f64,
    family: BasisFamily,
    /// Optional change of basis on the interior block: `b~_i = sum_j T_ij b_j`.
    transform: Option<(DMatrix<f64>, f64)>,
}

impl BasisSet {
    pub const MAX_BERNSTEIN_DEGREE: usize = 40;

    pub fn bernstein(t_bar: f64, degree: usize) -> Result<Self> {
        check_horizon(t_bar)?;
        if degree < 2 {
            return Err(invalid("degree", format!("Bernstein basis needs degree >= 2, got {degree}")));
        }
        if degree > Self::MAX_BERNSTEIN_DEGREE {
            return Err(Error::DegreeTooLarge {
                degree,
                cap: Self::MAX_BERNSTEIN_DEGREE,
            });
        }
        Ok(Self {
            t_bar,
            family: BasisFamily::Bernstein { degree },
            transform: None,
        })
    }

    pub fn damped_wave(t_bar: f64, c: f64, modes: usize) -> Result<Self> {
        check_horizon(t_bar)?;
        if modes == 0 {
            return Err(invalid("modes", "need at least one interior function"));
        }
        if !c.is_finite() {
            return Err(invalid("c", "must be finite"));
        }
        Ok(Self {
            t_bar,
            family: BasisFamily::DampedWave { c, modes },
            transform: None,
        })
    }

    pub fn from_family(t_bar: f64, family: BasisFamily) -> Result<Self> {
        match family {
            BasisFamily::Bernstein { degree } => Self::bernstein(t_bar, degree),
            BasisFamily::DampedWave { c, modes } => Self::damped_wave(t_bar, c, modes),
        }
    }

    pub fn t_bar(&self) -> f64 {
        self.t_bar
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    /// Number of interior functions.
    pub fn n(&self) -> usize {
        match self.family {
            BasisFamily::Bernstein { degree } => degree - 1,
            BasisFamily::DampedWave { modes, .. } => modes,
        }
    }

    /// Total number of functions, carriers included.
    pub fn len(&self) -> usize {
        self.n() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_orthonormalized(&self) -> bool {
        self.transform.is_some()
    }

    /// Stable identifier used in reports.
    pub fn id(&self) -> String {
        let base = match self.family {
            BasisFamily::Bernstein { degree } => format!("bernstein(degree={degree},T={})", self.t_bar),
            BasisFamily::DampedWave { c, modes } => {
                format!("damped-wave(c={c},modes={modes},T={})", self.t_bar)
            }
        };
        match &self.transform {
            Some((_, c)) => format!("{base}+orthonormal(c={c})"),
            None => base,
        }
    }

    pub fn eval_all(&self, t: f64) -> BasisEval {
        let mut out = BasisEval::default();
        self.eval_into(t, &mut out);
        out
    }

    /// Fills `out` with all values and derivatives at `t`.
    pub fn eval_into(&self, t: f64, out: &mut BasisEval) {
        let len = self.len();
        out.value.resize(len, 0.0);
        out.first.resize(len, 0.0);
        out.second.resize(len, 0.0);
        match self.family {
            BasisFamily::Bernstein { degree } => bernstein_eval(degree, self.t_bar, t, out),
            BasisFamily::DampedWave { c, modes } => damped_wave_eval(c, modes, self.t_bar, t, out),
        }
        if let Some((tm, _)) = &self.transform {
            for v in [&mut out.value, &mut out.first, &mut out.second] {
                let interior = DVector::from_column_slice(&v[1..len - 1]);
                let mapped = tm * interior;
                v[1..len - 1].copy_from_slice(mapped.as_slice());
            }
        }
    }

    /// Checks the endpoint conditions and the nonzero initial slope.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let n = self.n();
        let start = self.eval_all(0.0);
        let end = self.eval_all(self.t_bar);
        let bad = |what: &str, got: f64| {
            Err(invalid("basis", format!("{what}: got {got:.3e}")))
        };
        if (start.value[0] - 1.0).abs() > tol || end.value[0].abs() > tol {
            return bad("b_0 must be 1 at 0 and 0 at T", start.value[0]);
        }
        if start.value[n + 1].abs() > tol || (end.value[n + 1] - 1.0).abs() > tol {
            return bad("b_(n+1) must be 0 at 0 and 1 at T", end.value[n + 1]);
        }
        for i in 1..=n {
            if start.value[i].abs() > tol || end.value[i].abs() > tol {
                return bad("interior functions must vanish at both ends", start.value[i].abs().max(end.value[i].abs()));
            }
        }
        if start.first[1..=n].iter().all(|d| d.abs() <= tol) {
            return bad("some interior function needs a nonzero initial slope", 0.0);
        }
        Ok(())
    }

    /// Quadrature breakpoints fine enough for products of two basis
    /// functions with the weight `e^{ct}`.
    pub fn quadrature_breaks(&self, c: f64, extra: &[f64]) -> (Vec<f64>, usize) {
        let t = self.t_bar;
        let decay_width = if c != 0.0 { 2.0 / c.abs() } else { t };
        match self.family {
            BasisFamily::Bernstein { degree } => {
                let order = (degree + 12).clamp(16, 128);
                (panel_breaks(0.0, t, extra, decay_width.min(t)), order)
            }
            BasisFamily::DampedWave { c: cb, modes } => {
                let wave_width = t / (modes as f64 + 1.0);
                let w = decay_width.min(wave_width).min(if cb != 0.0 { 2.0 / cb.abs() } else { t });
                (panel_breaks(0.0, t, extra, w), 24)
            }
        }
    }

    /// Full `(n+2) x (n+2)` Gram, carriers included. `k` only enters the
    /// stiffness combination.
    pub fn gram_full(&self, c: f64, k: f64, kind: GramKind) -> DMatrix<f64> {
        match kind {
            GramKind::Stiffness => {
                self.gram_full(c, k, GramKind::Value) * k - self.gram_full(c, k, GramKind::Derivative)
            }
            _ => {
                let raw = match self.family {
                    BasisFamily::Bernstein { degree } if kind == GramKind::Value => {
                        bernstein_value_gram(degree, self.t_bar, c)
                    }
                    BasisFamily::Bernstein { degree } => bernstein_derivative_gram(degree, self.t_bar, c),
                    BasisFamily::DampedWave { .. } => return self.quadrature_gram_full(c, kind),
                };
                self.apply_transform(raw)
            }
        }
    }

    /// Same Gram by composite Gauss quadrature, for any family.
    pub fn quadrature_gram_full(&self, c: f64, kind: GramKind) -> DMatrix<f64> {
        let (breaks, order) = self.quadrature_breaks(c, &[]);
        let len = self.len();
        let mut g = DMatrix::zeros(len, len);
        let mut ev = BasisEval::default();
        for (t, w) in composite_nodes(&breaks, order) {
            self.eval_into(t, &mut ev);
            let v = match kind {
                GramKind::Value => &ev.value,
                GramKind::Derivative => &ev.first,
                GramKind::Stiffness => panic!("quadrature Gram is built for values or derivatives"),
            };
            let wt = w * (c * t).exp();
            for i in 0..len {
                let wi = wt * v[i];
                for j in i..len {
                    g[(i, j)] += wi * v[j];
                }
            }
        }
        g.fill_lower_triangle_with_upper_triangle();
        g
    }

    /// Interior `n x n` block of the chosen Gram.
    pub fn basis_gram(&self, c: f64, k: f64, which: GramKind) -> DMatrix<f64> {
        let n = self.n();
        self.gram_full(c, k, which).view((1, 1), (n, n)).into_owned()
    }

    /// `<f, b_i>_c` for every function, carriers included.
    pub fn load_vector(&self, f: &Excitation, c: f64) -> DVector<f64> {
        let (breaks, order) = self.quadrature_breaks(c, f.mesh());
        let order = (order + f.degree() / 2 + 2).min(128);
        let mut out = DVector::zeros(self.len());
        let mut ev = BasisEval::default();
        for (t, w) in composite_nodes(&breaks, order) {
            self.eval_into(t, &mut ev);
            let wf = w * (c * t).exp() * f.value(t);
            for (o, b) in out.iter_mut().zip(&ev.value) {
                *o += wf * b;
            }
        }
        out
    }

    /// Interior block made orthonormal in `<., .>_c` (Cholesky of the
    /// value Gram). Carriers are untouched.
    pub fn orthonormalized(&self, c: f64) -> Result<Self> {
        let base = Self {
            transform: None,
            ..self.clone()
        };
        let g = base.basis_gram(c, 0.0, GramKind::Value);
        let chol = g
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { name: "interior value Gram" })?;
        let l_inv = chol
            .l()
            .try_inverse()
            .ok_or(Error::NotPositiveDefinite { name: "interior value Gram" })?;
        Ok(Self {
            transform: Some((l_inv, c)),
            ..base
        })
    }

    fn apply_transform(&self, raw: DMatrix<f64>) -> DMatrix<f64> {
        match &self.transform {
            None => raw,
            Some((tm, _)) => {
                let len = self.len();
                let mut p = DMatrix::<f64>::identity(len, len);
                p.view_mut((1, 1), (len - 2, len - 2)).copy_from(tm);
                &p * raw * p.transpose()
            }
        }
    }
}

fn check_horizon(t_bar: f64) -> Result<()> {
    if !(t_bar.is_finite() && t_bar > 0.0) {
        return Err(invalid("t_bar", format!("horizon must be finite and > 0, got {t_bar}")));
    }
    Ok(())
}

/// A single basis function viewed as a scalar function of time.
pub struct BasisFunction<'a> {
    basis: &'a BasisSet,
    index: usize,
}

impl<'a> BasisFunction<'a> {
    pub fn new(basis: &'a BasisSet, index: usize) -> Self {
        assert!(index < basis.len());
        Self { basis, index }
    }
}

impl crate::model::Trial for BasisFunction<'_> {
    fn jet(&self, t: f64) -> [f64; 3] {
        let ev = self.basis.eval_all(t);
        [ev.value[self.index], ev.first[self.index], ev.second[self.index]]
    }
}

impl TimeFunction for BasisFunction<'_> {
    fn value(&self, t: f64) -> f64 {
        self.basis.eval_all(t).value[self.index]
    }

    fn derivative(&self, t: f64) -> f64 {
        self.basis.eval_all(t).first[self.index]
    }
}

fn bernstein_eval(degree: usize, t_bar: f64, t: f64, out: &mut BasisEval) {
    let u = (t / t_bar).clamp(0.0, 1.0);
    let w = 1.0 - u;
    let n = degree;
    let mut level = Vec::with_capacity(n + 1);
    level.push(1.0);
    let mut lower2 = Vec::new();
    let mut lower1 = Vec::new();
    for d in 1..=n {
        if d == n - 1 {
            lower2 = level.clone();
        }
        if d == n {
            lower1 = level.clone();
        }
        let mut next = vec![0.0; d + 1];
        next[0] = w * level[0];
        for i in 1..d {
            next[i] = w * level[i] + u * level[i - 1];
        }
        next[d] = u * level[d - 1];
        level = next;
    }
    let at = |v: &Vec<f64>, i: isize| -> f64 {
        if i < 0 || i as usize >= v.len() {
            0.0
        } else {
            v[i as usize]
        }
    };
    let s1 = n as f64 / t_bar;
    let s2 = (n * (n - 1)) as f64 / (t_bar * t_bar);
    for i in 0..=n {
        let ii = i as isize;
        out.value[i] = level[i];
        out.first[i] = s1 * (at(&lower1, ii - 1) - at(&lower1, ii));
        out.second[i] = s2 * (at(&lower2, ii - 2) - 2.0 * at(&lower2, ii - 1) + at(&lower2, ii));
    }
}

fn damped_wave_eval(c: f64, modes: usize, t_bar: f64, t: f64, out: &mut BasisEval) {
    let g = (-0.5 * c * t).exp();
    let h = 0.5 * c;
    let a = std::f64::consts::PI / (2.0 * t_bar);
    let (sa, ca) = (a * t).sin_cos();
    out.value[0] = g * ca;
    out.first[0] = g * (-h * ca - a * sa);
    out.second[0] = g * ((h * h - a * a) * ca + c * a * sa);
    for k in 1..=modes {
        let om = std::f64::consts::PI * k as f64 / t_bar;
        let (s, co) = (om * t).sin_cos();
        out.value[k] = g * s;
        out.first[k] = g * (-h * s + om * co);
        out.second[k] = g * ((h * h - om * om) * s - c * om * co);
    }
    out.value[modes + 1] = sa;
    out.first[modes + 1] = a * ca;
    out.second[modes + 1] = -a * a * sa;
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `1F1(a; b; z)` for `b > a > 0`, using Kummer's transformation for
/// negative `z` so that every series term is positive.
fn hyp1f1(a: f64, b: f64, z: f64) -> f64 {
    let (a, scale, z) = if z < 0.0 { (b - a, z.exp(), -z) } else { (a, 1.0, z) };
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..10_000 {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * z / (nf + 1.0);
        sum += term;
        if term <= 1e-17 * sum && nf > z {
            break;
        }
    }
    scale * sum
}

/// `int_0^T e^{ct} B_i B_j dt` for Bernstein polynomials of degree `n`.
fn bernstein_value_gram(n: usize, t_bar: f64, c: f64) -> DMatrix<f64> {
    let z = c * t_bar;
    let m2 = 2 * n;
    let w: Vec<f64> = (0..=m2)
        .map(|m| hyp1f1(m as f64 + 1.0, m2 as f64 + 2.0, z) / (m2 as f64 + 1.0))
        .collect();
    let bn: Vec<f64> = (0..=n).map(|i| binomial(n, i)).collect();
    DMatrix::from_fn(n + 1, n + 1, |i, j| {
        t_bar * bn[i] * bn[j] / binomial(m2, i + j) * w[i + j]
    })
}

/// Derivative Gram via `B_{i,n}' = (n/T)(B_{i-1,n-1} - B_{i,n-1})`.
fn bernstein_derivative_gram(n: usize, t_bar: f64, c: f64) -> DMatrix<f64> {
    let lower = bernstein_value_gram(n - 1, t_bar, c);
    let mut diff = DMatrix::zeros(n + 1, n);
    for i in 0..=n {
        if i >= 1 {
            diff[(i, i - 1)] = 1.0;
        }
        if i < n {
            diff[(i, i)] = -1.0;
        }
    }
    let s = n as f64 / t_bar;
    let mut g = &diff * lower * diff.transpose() * (s * s);
    g.fill_lower_triangle_with_upper_triangle();
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_bernstein_examples() {
        let b = BasisSet::bernstein(1.0, 2).unwrap();
        let ev = b.eval_all(0.5);
        assert_abs_diff_eq!(ev.value[1], 0.5, epsilon = 1e-15);
        let ev0 = b.eval_all(0.0);
        assert_abs_diff_eq!(ev0.first[1], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev0.second[1], -4.0, epsilon = 1e-15);
    }

    #[test]
    fn partition_of_unity() {
        for degree in [2, 5, 17, 40] {
            let b = BasisSet::bernstein(3.0, degree).unwrap();
            for i in 0..50 {
                let t = 3.0 * ((i as f64 * 0.618_033_988_75) % 1.0);
                let ev = b.eval_all(t);
                assert!((ev.value.iter().sum::<f64>() - 1.0).abs() < 1e-13);
                assert!(ev.first.iter().sum::<f64>().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degree_cap() {
        assert!(matches!(
            BasisSet::bernstein(1.0, 41),
            Err(Error::DegreeTooLarge { degree: 41, cap: 40 })
        ));
        assert!(BasisSet::bernstein(1.0, 1).is_err());
    }

    #[test]
    fn invariants_hold_for_both_families() {
        BasisSet::bernstein(2.5, 9).unwrap().check_invariants(1e-14).unwrap();
        BasisSet::damped_wave(2.5, 0.4, 6).unwrap().check_invariants(1e-14).unwrap();
    }

    #[test]
    fn damped_wave_examples() {
        let b = BasisSet::damped_wave(1.0, 0.0, 1).unwrap();
        assert_abs_diff_eq!(b.eval_all(0.5).value[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.eval_all(0.0).first[1], std::f64::consts::PI, epsilon = 1e-15);
        let damped = BasisSet::damped_wave(2.0, 0.7, 3).unwrap();
        for i in 1..=3 {
            assert_abs_diff_eq!(damped.eval_all(0.0).value[i], 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(damped.eval_all(2.0).value[i], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for b in [
            BasisSet::bernstein(2.0, 7).unwrap(),
            BasisSet::damped_wave(2.0, 0.3, 4).unwrap(),
        ] {
            for &t in &[0.3, 1.1, 1.7] {
                let (lo, mid, hi) = (b.eval_all(t - h), b.eval_all(t), b.eval_all(t + h));
                for i in 0..b.len() {
                    let fd1 = (hi.value[i] - lo.value[i]) / (2.0 * h);
                    let fd2 = (hi.first[i] - lo.first[i]) / (2.0 * h);
                    assert!((fd1 - mid.first[i]).abs() < 1e-6);
                    assert!((fd2 - mid.second[i]).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn single_interior_stiffness_entry() {
        let b = BasisSet::bernstein(1.0, 2).unwrap();
        let s = b.basis_gram(0.0, 1.0, GramKind::Stiffness);
        assert_abs_diff_eq!(s[(0, 0)], -4.0 / 3.0 + 2.0 / 15.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_grams_match_quadrature() {
        for &(degree, c, t) in &[(4, 0.0, 1.0), (12, 0.2, 8.0), (25, -0.8, 3.0), (40, 1.0, 5.0)] {
            let b = BasisSet::bernstein(t, degree).unwrap();
            for kind in [GramKind::Value, GramKind::Derivative] {
                let exact = b.gram_full(c, 1.0, kind);
                let quad = b.quadrature_gram_full(c, kind);
                let scale = exact.amax();
                assert!((&exact - &quad).amax() <= 1e-11 * scale, "degree {degree} kind {kind:?}");
                assert!((&exact - exact.transpose()).amax() == 0.0);
            }
        }
    }

    #[test]
    fn orthonormalized_value_gram_is_identity() {
        for b in [
            BasisSet::bernstein(2.0, 10).unwrap(),
            BasisSet::damped_wave(2.0, 0.5, 5).unwrap(),
        ] {
            let o = b.orthonormalized(0.5).unwrap();
            let g = o.basis_gram(0.5, 0.0, GramKind::Value);
            let n = o.n();
            assert!((g - DMatrix::<f64>::identity(n, n)).amax() < 1e-10);
            assert!(o.id().contains("orthonormal"));
        }
    }

    #[test]
    fn load_vector_matches_pointwise_quadrature() {
        let b = BasisSet::bernstein(2.0, 6).unwrap();
        let f = Excitation::new(vec![0.0, 0.7, 2.0], vec![vec![1.0, 1.0], vec![-2.0, 0.0, 0.5]]).unwrap();
        let load = b.load_vector(&f, 0.3);
        let rule = crate::quadrature::GaussRule::new(40);
        for i in 0..b.len() {
            let g = |t: f64| (0.3 * t).exp() * f.value(t) * b.eval_all(t).value[i];
            let q = rule.integrate(0.0, 0.7, g) + rule.integrate(0.7, 2.0, g);
            assert_abs_diff_eq!(load[i], q, epsilon = 1e-13);
        }
    }
}
