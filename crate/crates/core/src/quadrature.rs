//! Exponentially weighted integration.
//!
//! `<f, g>_c = int_a^b e^{ct} f g dt`. Polynomial pairs go through exact
//! moments of `t^j e^{ct}`; everything else through composite Gauss–Legendre.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::model::{merge_meshes, poly_mul, poly_shift, Excitation, TimeFunction};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const MAX_CACHED_ORDER: usize = 128;

impl GaussRule {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared rule for orders up to 128; larger orders are computed fresh.
    pub fn cached(n: usize) -> std::borrow::Cow<'static, GaussRule> {
        static CACHE: OnceLock<Vec<OnceLock<GaussRule>>> = OnceLock::new();
        if n == 0 || n > MAX_CACHED_ORDER {
            return std::borrow::Cow::Owned(Self::new(n.max(1)));
        }
        let cache = CACHE.get_or_init(|| (0..=MAX_CACHED_ORDER).map(|_| OnceLock::new()).collect());
        std::borrow::Cow::Borrowed(cache[n].get_or_init(|| Self::new(n)))
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(t, w)| w * f(t)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Breakpoints covering `[a, b]` that include `extra` points and have no
/// panel wider than `max_width`.
pub fn panel_breaks(a: f64, b: f64, extra: &[f64], max_width: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = extra.iter().copied().filter(|t| *t > a && *t < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (b - a).abs().max(1.0));
    let mut out = Vec::with_capacity(pts.len());
    for w in pts.windows(2) {
        let pieces = if max_width > 0.0 {
            ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize
        } else {
            1
        };
        for p in 0..pieces {
            out.push(w[0] + (w[1] - w[0]) * p as f64 / pieces as f64);
        }
    }
    out.push(b);
    out
}

/// Composite Gauss–Legendre over consecutive breakpoints.
pub fn integrate_composite<F: FnMut(f64) -> f64>(breaks: &[f64], order: usize, mut f: F) -> f64 {
    let rule = GaussRule::cached(order);
    breaks
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], &mut f))
        .sum()
}

/// Nodes and weights of the composite rule, in increasing node order.
pub fn composite_nodes(breaks: &[f64], order: usize) -> Vec<(f64, f64)> {
    let rule = GaussRule::cached(order);
    breaks
        .windows(2)
        .flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>())
        .collect()
}

/// `int_0^1 u^j e^{zu} du` for real `z`, summed as a series of positive terms.
pub fn exp_moment_unit(z: f64, j: usize) -> f64 {
    let jf = j as f64;
    if z >= 0.0 {
        // sum_m z^m / (m! (j + m + 1))
        let mut term = 1.0;
        let mut sum = 1.0 / (jf + 1.0);
        for m in 1..4000 {
            let mf = m as f64;
            term *= z / mf;
            let add = term / (jf + mf + 1.0);
            sum += add;
            if add <= 1e-17 * sum && mf > z {
                break;
            }
        }
        sum
    } else {
        // u -> 1 - u turns the integrand into e^z (1-w)^j e^{-zw}.
        let y = -z;
        let mut term = 1.0 / (jf + 1.0);
        let mut sum = term;
        for m in 1..4000 {
            let mf = m as f64;
            term *= y / (jf + mf + 1.0);
            sum += term;
            if term <= 1e-17 * sum && mf > y {
                break;
            }
        }
        z.exp() * sum
    }
}

/// `int_a^b t^j e^{ct} dt`.
pub fn exp_moment(c: f64, j: usize, a: f64, b: f64) -> f64 {
    let jp = j as i32 + 1;
    if c.abs() < 1e-12 {
        return (b.powi(jp) - a.powi(jp)) / jp as f64;
    }
    b.powi(jp) * exp_moment_unit(c * b, j) - a.powi(jp) * exp_moment_unit(c * a, j)
}

/// `int_left^{left+h} (t - left)^j e^{ct} dt`, the form used with local
/// segment coordinates.
pub fn exp_moment_local(c: f64, j: usize, left: f64, h: f64) -> f64 {
    let scale = (c * left).exp() * h.powi(j as i32 + 1);
    if c.abs() < 1e-12 {
        return scale / (j as f64 + 1.0);
    }
    scale * exp_moment_unit(c * h, j)
}

/// `[E_0(z), ..., E_jmax(z)]` with `E_j(z) = int_0^1 u^j e^{zu} du` for
/// complex `z`.
///
/// Uses the power series when it loses fewer digits than the forward
/// recursion `E_j = (e^z - j E_{j-1}) / z`, the recursion otherwise.
pub fn exp_moments_unit_complex(z: Complex64, jmax: usize) -> Vec<Complex64> {
    let r = z.norm();
    // Natural logs of the digits each method is expected to lose.
    let series_loss = r - z.re.max(0.0) + ((r + jmax as f64 + 1.0) / (jmax as f64 + 1.0)).ln();
    let recursion_loss: f64 = (1..=jmax)
        .map(|m| (m as f64 / r.max(1e-300)).max(1.0).ln())
        .sum();
    if r <= 1.0 || series_loss <= recursion_loss {
        (0..=jmax).map(|j| exp_moment_unit_series(z, j)).collect()
    } else {
        let ez = z.exp();
        let mut out = Vec::with_capacity(jmax + 1);
        out.push((ez - 1.0) / z);
        for j in 1..=jmax {
            let prev = out[j - 1];
            out.push((ez - prev * j as f64) / z);
        }
        out
    }
}

/// Single complex moment; see [`exp_moments_unit_complex`].
pub fn exp_moment_unit_complex(z: Complex64, j: usize) -> Complex64 {
    exp_moments_unit_complex(z, j)[j]
}

fn exp_moment_unit_series(z: Complex64, j: usize) -> Complex64 {
    let jf = j as f64;
    let r = z.norm();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(1.0 / (jf + 1.0), 0.0);
    for m in 1..4000 {
        let mf = m as f64;
        term *= z / mf;
        let add = term / (jf + mf + 1.0);
        sum += add;
        if add.norm() <= 1e-17 * sum.norm().max(1e-300) && mf > r {
            break;
        }
    }
    sum
}

/// Integration interval and Gauss order for [`inner_product_c`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedProductSpec {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub gauss_order: usize,
}

impl WeightedProductSpec {
    pub const DEFAULT_GAUSS_ORDER: usize = 12;

    pub fn new(c: f64, a: f64, b: f64) -> Result<Self> {
        Self::with_order(c, a, b, Self::DEFAULT_GAUSS_ORDER)
    }

    pub fn with_order(c: f64, a: f64, b: f64, gauss_order: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(invalid("interval", format!("need a < b, got ({a}, {b})")));
        }
        if !c.is_finite() {
            return Err(invalid("c", "weight exponent must be finite"));
        }
        if gauss_order < 2 {
            return Err(invalid("gauss_order", "need at least 2 points per segment"));
        }
        Ok(Self {
            c,
            a,
            b,
            gauss_order,
        })
    }
}

/// Operand of [`inner_product_c`].
#[derive(Clone, Copy)]
pub enum Integrand<'a> {
    /// Piecewise polynomial; integrated exactly.
    Poly(&'a Excitation),
    /// Arbitrary function with optional breakpoints where it is not smooth.
    Func(&'a dyn Fn(f64) -> f64, &'a [f64]),
}

impl Integrand<'_> {
    fn eval(&self, t: f64) -> f64 {
        match self {
            Integrand::Poly(e) => e.value(t),
            Integrand::Func(f, _) => f(t),
        }
    }

    fn breaks(&self) -> Vec<f64> {
        match self {
            Integrand::Poly(e) => e.mesh().to_vec(),
            Integrand::Func(_, b) => b.to_vec(),
        }
    }
}

/// `int_a^b e^{ct} f g dt`.
pub fn inner_product_c(f: Integrand<'_>, g: Integrand<'_>, spec: &WeightedProductSpec) -> f64 {
    if let (Integrand::Poly(p), Integrand::Poly(q)) = (f, g) {
        return poly_product_exact(p, q, spec);
    }
    let mut extra = f.breaks();
    extra.extend(g.breaks());
    let breaks = panel_breaks(spec.a, spec.b, &extra, f64::INFINITY);
    let c = spec.c;
    integrate_composite(&breaks, spec.gauss_order, |t| (c * t).exp() * f.eval(t) * g.eval(t))
}

fn poly_product_exact(p: &Excitation, q: &Excitation, spec: &WeightedProductSpec) -> f64 {
    let t_bar = p.t_bar().max(q.t_bar()).max(spec.b);
    let mesh = merge_meshes([p.mesh(), q.mesh(), &[spec.a, spec.b][..]], t_bar);
    let mut total = 0.0;
    for w in mesh.windows(2) {
        let (l, r) = (w[0], w[1]);
        if r <= spec.a || l >= spec.b {
            continue;
        }
        let mid = 0.5 * (l + r);
        let ip = p.segment_index(mid);
        let iq = q.segment_index(mid);
        let pc = poly_shift(&p.segments()[ip], l - p.mesh()[ip]);
        let qc = poly_shift(&q.segments()[iq], l - q.mesh()[iq]);
        let prod = poly_mul(&pc, &qc);
        let h = r - l;
        total += prod
            .iter()
            .enumerate()
            .map(|(j, a)| a * exp_moment_local(spec.c, j, l, h))
            .sum::<f64>();
    }
    total
}

/// Which constant to use when turning the weak integral into an H^-1 norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `F(0) = 0`.
    ZeroAtOrigin,
    /// `F` minus its mean over `[0, T]`; the smallest L2 representative.
    #[default]
    MeanAdjusted,
}

/// `F(t) = int_0^t e^{c tau} f(tau) d tau + shift`, exact on each segment.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakIntegral {
    f: Excitation,
    c: f64,
    offsets: Vec<f64>,
    shift: f64,
}

/// Builds the weak integral of `e^{ct} f` with `F(0) = 0`.
pub fn weak_integral(f: &Excitation, c: f64) -> WeakIntegral {
    let mesh = f.mesh();
    let mut offsets = Vec::with_capacity(f.segments().len());
    let mut acc = 0.0;
    for (i, seg) in f.segments().iter().enumerate() {
        offsets.push(acc);
        acc += segment_integral(seg, c, mesh[i], mesh[i + 1] - mesh[i]);
    }
    WeakIntegral {
        f: f.clone(),
        c,
        offsets,
        shift: 0.0,
    }
}

fn segment_integral(seg: &[f64], c: f64, left: f64, h: f64) -> f64 {
    seg.iter()
        .enumerate()
        .map(|(j, a)| a * exp_moment_local(c, j, left, h))
        .sum()
}

impl WeakIntegral {
    /// Same antiderivative plus a constant.
    pub fn shifted(&self, k: f64) -> Self {
        Self {
            shift: self.shift + k,
            ..self.clone()
        }
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn excitation(&self) -> &Excitation {
        &self.f
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.f.segment_index(t);
        let left = self.f.mesh()[i];
        self.shift + self.offsets[i] + segment_integral(&self.f.segments()[i], self.c, left, t - left)
    }

    /// Mean of `F` over `[0, T]` in the unweighted sense.
    pub fn mean(&self) -> f64 {
        let t_bar = self.f.t_bar();
        integrate_composite(&self.panels(), 24, |t| self.eval(t)) / t_bar
    }

    /// `||F - K||_{L2(0,T)}` with `K` chosen by `norm`.
    pub fn l2_norm(&self, norm: Normalization) -> f64 {
        let k = match norm {
            Normalization::ZeroAtOrigin => self.eval(0.0),
            Normalization::MeanAdjusted => self.mean(),
        };
        integrate_composite(&self.panels(), 24, |t| (self.eval(t) - k).powi(2))
            .max(0.0)
            .sqrt()
    }

    fn panels(&self) -> Vec<f64> {
        let t_bar = self.f.t_bar();
        let width = if self.c.abs() > 0.0 { 2.0 / self.c.abs() } else { t_bar };
        panel_breaks(0.0, t_bar, self.f.mesh(), width.min(t_bar / 4.0))
    }
}

impl TimeFunction for WeakIntegral {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        (self.c * t).exp() * self.f.value(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.f.mesh().to_vec()
    }
}

/// `||e^{c.} f||_{H^-1}` realized as the L2 norm of its weak integral.
pub fn h_minus1_norm(f: &Excitation, c: f64, norm: Normalization) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    weak_integral(f, c).l2_norm(norm)
}

/// `(int_0^T e^{ct} f^2)^{1/2}` for a piecewise polynomial.
pub fn weighted_l2_norm(f: &Excitation, c: f64) -> f64 {
    let spec = WeightedProductSpec {
        c,
        a: 0.0,
        b: f.t_bar(),
        gauss_order: WeightedProductSpec::DEFAULT_GAUSS_ORDER,
    };
    inner_product_c(Integrand::Poly(f), Integrand::Poly(f), &spec)
        .max(0.0)
        .sqrt()
}
