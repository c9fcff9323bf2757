//! Closed-form free response of the underdamped oscillator and the time
//! dilation that rescales a problem.

use crate::error::{invalid, Result};
use crate::model::{Excitation, InitialConditions, Motion, SdofSystem};

/// Fundamental solutions `d` (data `(1, -c/2)`) and `s` (data `(0, 1)`)
/// with their time derivatives, at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalValues {
    pub d: f64,
    pub s: f64,
    pub d_dot: f64,
    pub s_dot: f64,
}

/// Precomputed `c` and `omega_d` for repeated evaluation of `d` and `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fundamentals {
    c: f64,
    omega_d: f64,
}

impl Fundamentals {
    pub fn new(sys: &SdofSystem) -> Result<Self> {
        let p = sys.derived_params()?;
        Ok(Self {
            c: sys.c(),
            omega_d: p.omega_d,
        })
    }

    pub fn omega_d(&self) -> f64 {
        self.omega_d
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn at(&self, t: f64) -> FundamentalValues {
        let decay = (-0.5 * self.c * t).exp();
        let (sin, cos) = (self.omega_d * t).sin_cos();
        let d = decay * cos;
        let s = decay * sin / self.omega_d;
        FundamentalValues {
            d,
            s,
            d_dot: -0.5 * self.c * d - self.omega_d * self.omega_d * s,
            s_dot: -0.5 * self.c * s + d,
        }
    }

    /// Free response for the given initial data.
    pub fn free_response(&self, ic: &InitialConditions, t: f64) -> (f64, f64) {
        let fv = self.at(t);
        let b = ic.v0 + 0.5 * self.c * ic.x0;
        (ic.x0 * fv.d + b * fv.s, ic.x0 * fv.d_dot + b * fv.s_dot)
    }
}

pub fn fundamental_solutions(sys: &SdofSystem, t: f64) -> Result<FundamentalValues> {
    Ok(Fundamentals::new(sys)?.at(t))
}

/// Displacement and velocity of the unforced motion at `t`.
pub fn homogeneous_solution(sys: &SdofSystem, ic: &InitialConditions, t: f64) -> Result<(f64, f64)> {
    if t < 0.0 {
        return Err(invalid("t", format!("time must be >= 0, got {t}")));
    }
    Ok(Fundamentals::new(sys)?.free_response(ic, t))
}

/// A problem rewritten in the dilated time `s = lambda t`.
///
/// The dilated displacement is `chi(s) = x(s / lambda)` on `[0, lambda T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DilatedProblem {
    pub lambda: f64,
    pub sys: SdofSystem,
    pub f: Excitation,
    pub ic: InitialConditions,
}

/// `(c, k, f, x0, v0, T) -> (c/l, k/l^2, f(./l)/l^2, x0, v0/l, l T)`.
pub fn time_dilate(
    sys: &SdofSystem,
    f: &Excitation,
    ic: &InitialConditions,
    lambda: f64,
) -> Result<DilatedProblem> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda", format!("must be finite and > 0, got {lambda}")));
    }
    let new_sys = SdofSystem::new(sys.c() / lambda, sys.k() / (lambda * lambda), sys.t_bar() * lambda)?;
    Ok(DilatedProblem {
        lambda,
        sys: new_sys,
        f: f.dilated(lambda)?,
        ic: InitialConditions::new(ic.x0, ic.v0 / lambda)?,
    })
}

impl DilatedProblem {
    /// Undoes the dilation, so `dilate(lambda).invert()` is the identity.
    pub fn invert(&self) -> Result<DilatedProblem> {
        time_dilate(&self.sys, &self.f, &self.ic, 1.0 / self.lambda)
    }

    /// Original-time state from a solution of the dilated problem:
    /// `x(t) = chi(lambda t)`, `x'(t) = lambda chi'(lambda t)`.
    pub fn map_back<'a, M: Motion + ?Sized>(&self, dilated: &'a M) -> impl Motion + 'a {
        let lambda = self.lambda;
        move |t: f64| {
            let (x, v) = dilated.state(lambda * t);
            (x, lambda * v)
        }
    }
}
