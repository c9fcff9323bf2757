//! Domain types shared by every solver: oscillator parameters, piecewise
//! polynomial excitations, initial/boundary data and sampled trajectories.
//!
//! Mass is normalized to one throughout, so an SDOF problem reads
//! `x'' + c x' + k x = f` on `[0, T]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Normalized damped oscillator `x'' + c x' + k x = f` on `[0, t_bar]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdofSystem {
    c: f64,
    k: f64,
    t_bar: f64,
}

/// Damping ratio and the undamped / damped eigenfrequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub xi: f64,
    pub omega_n: f64,
    pub omega_d: f64,
}

impl SdofSystem {
    pub fn new(c: f64, k: f64, t_bar: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(invalid("c", format!("damping must be finite and >= 0, got {c}")));
        }
        if !k.is_finite() || k <= 0.0 {
            return Err(invalid("k", format!("stiffness must be finite and > 0, got {k}")));
        }
        if !t_bar.is_finite() || t_bar <= 0.0 {
            return Err(invalid("t_bar", format!("horizon must be finite and > 0, got {t_bar}")));
        }
        Ok(Self { c, k, t_bar })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn t_bar(&self) -> f64 {
        self.t_bar
    }

    /// Same oscillator on a different horizon.
    pub fn with_horizon(&self, t_bar: f64) -> Result<Self> {
        Self::new(self.c, self.k, t_bar)
    }

    /// `c / (2 sqrt(k))`, without the underdamped check.
    pub fn damping_ratio(&self) -> f64 {
        self.c / (2.0 * self.k.sqrt())
    }

    /// Damping ratio and eigenfrequencies. Fails unless the system is
    /// underdamped, since every closed form downstream assumes it.
    pub fn derived_params(&self) -> Result<DerivedParams> {
        let xi = self.damping_ratio();
        if xi >= 1.0 {
            return Err(Error::NotUnderdamped { xi });
        }
        let omega_n = self.k.sqrt();
        // (1 - xi)(1 + xi) avoids cancellation as xi -> 1.
        let omega_d = omega_n * ((1.0 - xi) * (1.0 + xi)).sqrt();
        Ok(DerivedParams {
            xi,
            omega_n,
            omega_d,
        })
    }
}

/// Initial displacement and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialConditions {
    pub x0: f64,
    pub v0: f64,
}

impl InitialConditions {
    pub fn new(x0: f64, v0: f64) -> Result<Self> {
        if !x0.is_finite() || !v0.is_finite() {
            return Err(invalid("initial conditions", "x0 and v0 must be finite"));
        }
        Ok(Self { x0, v0 })
    }

    pub fn zero() -> Self {
        Self::default()
    }
}

impl std::ops::Add for InitialConditions {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            x0: self.x0 + rhs.x0,
            v0: self.v0 + rhs.v0,
        }
    }
}

/// Displacements prescribed at both ends of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub x0: f64,
    pub xt: f64,
}

impl BoundaryConditions {
    pub fn new(x0: f64, xt: f64) -> Result<Self> {
        if !x0.is_finite() || !xt.is_finite() {
            return Err(invalid("boundary conditions", "x0 and xT must be finite"));
        }
        Ok(Self { x0, xt })
    }
}

/// Scalar function of time with a first derivative.
pub trait TimeFunction {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
    /// Points where the function may fail to be smooth. Quadrature splits
    /// panels there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Anything that yields displacement and velocity at arbitrary times.
pub trait Motion {
    fn state(&self, t: f64) -> (f64, f64);
}

impl<F: Fn(f64) -> (f64, f64)> Motion for F {
    fn state(&self, t: f64) -> (f64, f64) {
        self(t)
    }
}

/// A twice-differentiable displacement: `[x, x', x'']` at `t`.
pub trait Trial {
    fn jet(&self, t: f64) -> [f64; 3];
}

/// Closure-backed [`TimeFunction`].
pub struct SmoothFn<V, D> {
    value: V,
    derivative: D,
}

impl<V: Fn(f64) -> f64, D: Fn(f64) -> f64> SmoothFn<V, D> {
    pub fn new(value: V, derivative: D) -> Self {
        Self { value, derivative }
    }
}

impl<V: Fn(f64) -> f64, D: Fn(f64) -> f64> TimeFunction for SmoothFn<V, D> {
    fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        (self.derivative)(t)
    }
}

/// Evaluates a polynomial given by ascending coefficients (Horner).
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Coefficients of the derivative polynomial.
pub fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &a)| j as f64 * a)
        .collect()
}

/// Coefficients of `q(s) = p(s + delta)` (Taylor shift).
pub fn poly_shift(coeffs: &[f64], delta: f64) -> Vec<f64> {
    let mut out = coeffs.to_vec();
    let n = out.len();
    if delta == 0.0 {
        return out;
    }
    for i in 0..n {
        for j in (i..n - 1).rev() {
            out[j] += delta * out[j + 1];
        }
    }
    out
}

/// Product of two polynomials in ascending coefficients.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Piecewise polynomial forcing on `[0, T]`.
///
/// Each segment stores its coefficients in the local coordinate
/// `t - t_left`. Evaluation is right-continuous at interior breakpoints and
/// left-continuous at `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excitation {
    mesh: Vec<f64>,
    segments: Vec<Vec<f64>>,
}

impl Excitation {
    /// Default cap on the per-segment polynomial degree.
    pub const MAX_DEGREE: usize = 10;

    pub fn new(mesh: Vec<f64>, segments: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_max_degree(mesh, segments, Self::MAX_DEGREE)
    }

    pub fn with_max_degree(
        mesh: Vec<f64>,
        mut segments: Vec<Vec<f64>>,
        max_degree: usize,
    ) -> Result<Self> {
        if mesh.len() < 2 {
            return Err(invalid("mesh", "need at least two breakpoints"));
        }
        if mesh[0] != 0.0 {
            return Err(invalid("mesh", format!("must start at 0, got {}", mesh[0])));
        }
        if mesh.iter().any(|t| !t.is_finite()) {
            return Err(invalid("mesh", "breakpoints must be finite"));
        }
        if let Some(w) = mesh.windows(2).find(|w| w[1] <= w[0]) {
            return Err(invalid(
                "mesh",
                format!("breakpoints must be strictly increasing ({} then {})", w[0], w[1]),
            ));
        }
        if segments.len() != mesh.len() - 1 {
            return Err(invalid(
                "segments",
                format!("{} segments for {} intervals", segments.len(), mesh.len() - 1),
            ));
        }
        for (i, seg) in segments.iter_mut().enumerate() {
            if seg.is_empty() {
                seg.push(0.0);
            }
            if seg.iter().any(|a| !a.is_finite()) {
                return Err(invalid("segments", format!("segment {i} has non-finite coefficients")));
            }
            while seg.len() > 1 && *seg.last().unwrap() == 0.0 {
                seg.pop();
            }
            if seg.len() - 1 > max_degree {
                return Err(Error::DegreeTooLarge {
                    degree: seg.len() - 1,
                    cap: max_degree,
                });
            }
        }
        Ok(Self { mesh, segments })
    }

    pub fn zero(t_bar: f64) -> Result<Self> {
        Self::constant(t_bar, 0.0)
    }

    pub fn constant(t_bar: f64, value: f64) -> Result<Self> {
        Self::new(vec![0.0, t_bar], vec![vec![value]])
    }

    /// Single polynomial `sum a_j t^j` on `[0, T]`.
    pub fn polynomial(t_bar: f64, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0, t_bar], vec![coeffs])
    }

    /// Tabulated forcing, linearly interpolated between samples.
    pub fn from_samples(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(invalid("samples", "times and values differ in length"));
        }
        if times.len() < 2 {
            return Err(invalid("samples", "need at least two samples"));
        }
        let segments = times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| vec![v[0], (v[1] - v[0]) / (t[1] - t[0])])
            .collect();
        Self::new(times.to_vec(), segments)
    }

    /// Piecewise interpolant of `f` on `pieces` equal segments, with
    /// `degree + 1` Chebyshev–Lobatto nodes per segment (continuous across
    /// breakpoints since the nodes include both ends).
    pub fn interpolate<F: Fn(f64) -> f64>(
        f: F,
        t_bar: f64,
        pieces: usize,
        degree: usize,
    ) -> Result<Self> {
        if pieces == 0 {
            return Err(invalid("pieces", "need at least one segment"));
        }
        if degree > Self::MAX_DEGREE {
            return Err(Error::DegreeTooLarge {
                degree,
                cap: Self::MAX_DEGREE,
            });
        }
        let h = t_bar / pieces as f64;
        let mesh: Vec<f64> = (0..=pieces).map(|i| i as f64 * h).collect();
        let mut segments = Vec::with_capacity(pieces);
        for i in 0..pieces {
            let left = mesh[i];
            if degree == 0 {
                segments.push(vec![f(left + 0.5 * h)]);
                continue;
            }
            // Fit in the unit variable u = (t - left) / h, then rescale.
            let nodes: Vec<f64> = (0..=degree)
                .map(|m| 0.5 * (1.0 - (std::f64::consts::PI * m as f64 / degree as f64).cos()))
                .collect();
            let n = degree + 1;
            let vander = nalgebra::DMatrix::from_fn(n, n, |r, c| nodes[r].powi(c as i32));
            let rhs = nalgebra::DVector::from_iterator(n, nodes.iter().map(|&u| f(left + u * h)));
            let coeffs = vander
                .lu()
                .solve(&rhs)
                .ok_or_else(|| invalid("interpolate", "singular interpolation system"))?;
            segments.push(
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, &a)| a / h.powi(j as i32))
                    .collect(),
            );
        }
        Self::new(mesh, segments)
    }

    pub fn t_bar(&self) -> f64 {
        *self.mesh.last().unwrap()
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    pub fn segments(&self) -> &[Vec<f64>] {
        &self.segments
    }

    /// Highest segment degree.
    pub fn degree(&self) -> usize {
        self.segments.iter().map(|s| s.len() - 1).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|s| s.iter().all(|&a| a == 0.0))
    }

    /// Index of the segment used to evaluate at `t` (clamped to the domain).
    pub fn segment_index(&self, t: f64) -> usize {
        let last = self.segments.len() - 1;
        if t >= self.t_bar() {
            return last;
        }
        // partition_point gives the first breakpoint > t.
        let idx = self.mesh.partition_point(|&m| m <= t);
        idx.saturating_sub(1).min(last)
    }

    /// Value at `t`; fails outside `[0, T]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_bar()).contains(&t) {
            return Err(Error::OutOfDomain {
                t,
                t_bar: self.t_bar(),
            });
        }
        Ok(self.value_clamped(t))
    }

    fn value_clamped(&self, t: f64) -> f64 {
        let i = self.segment_index(t);
        horner(&self.segments[i], t - self.mesh[i])
    }

    /// Derivative inside the segment containing `t`.
    pub fn slope(&self, t: f64) -> f64 {
        let i = self.segment_index(t);
        horner(&poly_derivative(&self.segments[i]), t - self.mesh[i])
    }

    /// Interior jumps `(t, f(t+) - f(t-))`.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        (1..self.segments.len())
            .map(|i| {
                let h = self.mesh[i] - self.mesh[i - 1];
                let left = horner(&self.segments[i - 1], h);
                let right = self.segments[i][0];
                (self.mesh[i], right - left)
            })
            .filter(|&(_, j)| j != 0.0)
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mesh: self.mesh.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| s.iter().map(|a| a * factor).collect())
                .collect(),
        }
    }

    /// Re-expresses the excitation on a finer mesh containing this one.
    fn refined(&self, mesh: &[f64]) -> Vec<Vec<f64>> {
        mesh.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let i = self.segment_index(mid);
                poly_shift(&self.segments[i], w[0] - self.mesh[i])
            })
            .collect()
    }

    /// Same function on a mesh whose intervals are no wider than `max_width`.
    pub fn subdivided(&self, max_width: f64) -> Self {
        let mut mesh = vec![0.0];
        for w in self.mesh.windows(2) {
            let pieces = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
            for p in 1..pieces {
                mesh.push(w[0] + (w[1] - w[0]) * p as f64 / pieces as f64);
            }
            mesh.push(w[1]);
        }
        let segments = self.refined(&mesh);
        Self { mesh, segments }
    }

    /// `sum w_i f_i` over excitations sharing the same horizon.
    pub fn linear_combination(terms: &[(f64, &Excitation)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| invalid("terms", "empty linear combination"))?;
        let t_bar = first.1.t_bar();
        if terms
            .iter()
            .any(|(_, e)| (e.t_bar() - t_bar).abs() > 1e-12 * t_bar)
        {
            return Err(invalid("terms", "excitations have different horizons"));
        }
        let mesh = merge_meshes(terms.iter().map(|(_, e)| e.mesh()), t_bar);
        let mut segments = vec![Vec::<f64>::new(); mesh.len() - 1];
        for (w, e) in terms {
            for (acc, seg) in segments.iter_mut().zip(e.refined(&mesh)) {
                if acc.len() < seg.len() {
                    acc.resize(seg.len(), 0.0);
                }
                for (a, s) in acc.iter_mut().zip(seg) {
                    *a += w * s;
                }
            }
        }
        let max_degree = terms.iter().map(|(_, e)| e.degree()).max().unwrap_or(0);
        Self::with_max_degree(mesh, segments, max_degree.max(Self::MAX_DEGREE))
    }

    /// `s -> f(s / lambda) / lambda^2` on `[0, lambda T]`.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", format!("must be finite and > 0, got {lambda}")));
        }
        let mesh = self.mesh.iter().map(|t| t * lambda).collect();
        let segments = self
            .segments
            .iter()
            .map(|s| {
                s.iter()
                    .enumerate()
                    .map(|(j, a)| a / lambda.powi(j as i32 + 2))
                    .collect()
            })
            .collect();
        Self::with_max_degree(mesh, segments, self.degree().max(Self::MAX_DEGREE))
    }
}

impl TimeFunction for Excitation {
    fn value(&self, t: f64) -> f64 {
        self.value_clamped(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        self.slope(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.mesh.clone()
    }
}

/// Sorted union of breakpoint sets, merging points closer than `1e-13 T`.
pub fn merge_meshes<'a>(meshes: impl IntoIterator<Item = &'a [f64]>, t_bar: f64) -> Vec<f64> {
    let mut all: Vec<f64> = meshes.into_iter().flatten().copied().collect();
    all.push(0.0);
    all.push(t_bar);
    all.retain(|t| (0.0..=t_bar).contains(t));
    all.sort_by(f64::total_cmp);
    let tol = 1e-13 * t_bar;
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        match out.last() {
            Some(&last) if t - last <= tol => {}
            _ => out.push(t),
        }
    }
    // Make sure the final point is exactly the horizon.
    if let Some(last) = out.last_mut() {
        *last = t_bar;
    }
    out
}

/// One sample of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

/// Displacement and velocity sampled on a grid covering `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    samples: Vec<Sample>,
}

impl Trajectory {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        validate_grid(samples.iter().map(|s| s.t))?;
        if samples.iter().any(|s| !s.x.is_finite() || !s.v.is_finite()) {
            return Err(invalid("trajectory", "non-finite state"));
        }
        Ok(Self { samples })
    }

    /// Samples `motion` on `grid`.
    pub fn from_motion(motion: &dyn Motion, grid: &[f64]) -> Result<Self> {
        Self::new(
            grid.iter()
                .map(|&t| {
                    let (x, v) = motion.state(t);
                    Sample { t, x, v }
                })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn t_bar(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// Largest pointwise displacement and velocity differences. Grids must match.
    pub fn max_abs_diff(&self, other: &Trajectory) -> Result<(f64, f64)> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "trajectories have {} and {} samples",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .fold((0.0_f64, 0.0_f64), |(dx, dv), (a, b)| {
                (dx.max((a.x - b.x).abs()), dv.max((a.v - b.v).abs()))
            }))
    }
}

/// Checks that a grid is strictly increasing, starts at 0 and is finite.
pub fn validate_grid(times: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut prev: Option<f64> = None;
    for t in times {
        if !t.is_finite() {
            return Err(invalid("grid", "non-finite time"));
        }
        match prev {
            None if t != 0.0 => {
                return Err(invalid("grid", format!("must start at t = 0, got {t}")));
            }
            Some(p) if t <= p => {
                return Err(invalid("grid", format!("times must increase ({p} then {t})")));
            }
            _ => {}
        }
        prev = Some(t);
    }
    if prev.is_none() {
        return Err(invalid("grid", "empty grid"));
    }
    Ok(())
}

/// `n` equally spaced points from 0 to `t_bar` inclusive.
pub fn uniform_grid(t_bar: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut grid: Vec<f64> = (0..n)
        .map(|i| t_bar * i as f64 / (n - 1) as f64)
        .collect();
    grid[n - 1] = t_bar;
    grid
}
