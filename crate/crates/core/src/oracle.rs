//! Reference solutions by Duhamel convolution.
//!
//! With `w = c/2 + i omega_d` and `I(t) = int_0^t f(tau) e^{w tau} d tau`,
//! the forced response is `x_p = s Re I - d Im I / omega_d` and
//! `v_p = s' Re I - d' Im I / omega_d`. For piecewise polynomial `f` the
//! integral is a finite sum of complex moments, so no quadrature is involved.

use num_complex::Complex64;

use crate::analytic::Fundamentals;
use crate::error::{invalid, Error, Result};
use crate::model::{validate_grid, Excitation, InitialConditions, Motion, Sample, SdofSystem, TimeFunction, Trajectory};
use crate::quadrature::{exp_moments_unit_complex, panel_breaks, GaussRule};

/// Closed-form evaluator of the exact solution of an initial-value problem.
#[derive(Debug, Clone)]
pub struct DuhamelOracle {
    fund: Fundamentals,
    ic: InitialConditions,
    w: Complex64,
    f: Excitation,
    prefix: Vec<Complex64>,
    t_bar: f64,
}

impl DuhamelOracle {
    pub fn new(sys: &SdofSystem, f: &Excitation, ic: &InitialConditions) -> Result<Self> {
        let fund = Fundamentals::new(sys)?;
        check_horizon(sys, f)?;
        let w = Complex64::new(0.5 * sys.c(), fund.omega_d());
        // Short segments keep |w h| <= 1, where the moment series is exact
        // to roundoff.
        let f = f.subdivided(1.0 / w.norm());
        let mesh = f.mesh();
        let mut prefix = Vec::with_capacity(f.segments().len());
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, seg) in f.segments().iter().enumerate() {
            prefix.push(acc);
            acc += segment_moment(seg, w, mesh[i], mesh[i + 1] - mesh[i]);
        }
        Ok(Self {
            fund,
            ic: *ic,
            w,
            f,
            prefix,
            t_bar: sys.t_bar(),
        })
    }

    pub fn t_bar(&self) -> f64 {
        self.t_bar
    }

    /// `int_0^t f(tau) e^{w tau} d tau`.
    pub fn convolution_integral(&self, t: f64) -> Complex64 {
        let i = self.f.segment_index(t);
        let left = self.f.mesh()[i];
        self.prefix[i] + segment_moment(&self.f.segments()[i], self.w, left, t - left)
    }

    /// Forced part only (zero initial data).
    pub fn particular(&self, t: f64) -> (f64, f64) {
        let fv = self.fund.at(t);
        let big_i = self.convolution_integral(t);
        let im = big_i.im / self.fund.omega_d();
        (fv.s * big_i.re - fv.d * im, fv.s_dot * big_i.re - fv.d_dot * im)
    }

    /// Displacement, velocity and acceleration `f - c v - k x`.
    pub fn jet(&self, t: f64) -> [f64; 3] {
        let (x, v) = self.state(t);
        let k = self.fund.omega_d().powi(2) + 0.25 * self.fund.c().powi(2);
        [x, v, self.f.value(t) - self.fund.c() * v - k * x]
    }
}

impl Motion for DuhamelOracle {
    fn state(&self, t: f64) -> (f64, f64) {
        let (xh, vh) = self.fund.free_response(&self.ic, t);
        let (xp, vp) = self.particular(t);
        (xh + xp, vh + vp)
    }
}

impl crate::model::Trial for DuhamelOracle {
    fn jet(&self, t: f64) -> [f64; 3] {
        DuhamelOracle::jet(self, t)
    }
}

fn segment_moment(seg: &[f64], w: Complex64, left: f64, x: f64) -> Complex64 {
    if x <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let moments = exp_moments_unit_complex(w * x, seg.len() - 1);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut xp = x;
    for (a, m) in seg.iter().zip(moments) {
        sum += m * (a * xp);
        xp *= x;
    }
    (w * left).exp() * sum
}

fn check_horizon(sys: &SdofSystem, f: &Excitation) -> Result<()> {
    if (f.t_bar() - sys.t_bar()).abs() > 1e-12 * sys.t_bar() {
        return Err(invalid(
            "excitation",
            format!("defined on [0, {}] but the horizon is {}", f.t_bar(), sys.t_bar()),
        ));
    }
    Ok(())
}

fn check_grid(grid: &[f64], t_bar: f64) -> Result<()> {
    validate_grid(grid.iter().copied())?;
    if let Some(&last) = grid.last() {
        if last > t_bar * (1.0 + 1e-14) {
            return Err(Error::OutOfDomain { t: last, t_bar });
        }
    }
    Ok(())
}

/// Exact solution sampled on `grid`.
pub fn duhamel_solve(
    sys: &SdofSystem,
    f: &Excitation,
    ic: &InitialConditions,
    grid: &[f64],
) -> Result<Trajectory> {
    check_grid(grid, sys.t_bar())?;
    let oracle = DuhamelOracle::new(sys, f, ic)?;
    Trajectory::from_motion(&oracle, grid)
}

/// Zero-initial-data response written in terms of an antiderivative `F` of
/// `e^{ct} f`:
///
/// `x(t) = s(t) int_0^t F h2 + d(t) int_0^t F g1 - F(0) s(t)`
///
/// with `g1 = d - (c/2) s` and `h2 = (c/2) d + omega_d^2 s`. The last term
/// makes the result independent of the constant in `F`.
pub fn duhamel_from_f(sys: &SdofSystem, big_f: &dyn TimeFunction, grid: &[f64]) -> Result<Trajectory> {
    check_grid(grid, sys.t_bar())?;
    let fund = Fundamentals::new(sys)?;
    let c = sys.c();
    let wd = fund.omega_d();
    let f0 = big_f.value(0.0);
    let width = 0.25 / wd.max(0.5 * c).max(1.0 / sys.t_bar());
    let rule = GaussRule::cached(16);
    let breaks = big_f.breakpoints();

    let (mut a_acc, mut b_acc) = (0.0, 0.0);
    let mut prev = 0.0;
    let mut samples = Vec::with_capacity(grid.len());
    for &t in grid {
        if t > prev {
            for p in panel_breaks(prev, t, &breaks, width).windows(2) {
                for (tau, wt) in rule.mapped(p[0], p[1]) {
                    let fv = fund.at(tau);
                    let ff = big_f.value(tau);
                    a_acc += wt * ff * (0.5 * c * fv.d + wd * wd * fv.s);
                    b_acc += wt * ff * (fv.d - 0.5 * c * fv.s);
                }
            }
            prev = t;
        }
        let fv = fund.at(t);
        let x = fv.s * a_acc + fv.d * b_acc - f0 * fv.s;
        let v = fv.s_dot * a_acc + fv.d_dot * b_acc + (-c * t).exp() * big_f.value(t) - f0 * fv.s_dot;
        samples.push(Sample { t, x, v });
    }
    Trajectory::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::homogeneous_solution;
    use crate::model::uniform_grid;
    use crate::quadrature::weak_integral;

    #[test]
    fn free_vibration_matches_closed_form() {
        let sys = SdofSystem::new(0.2, 1.0, 10.0).unwrap();
        let ic = InitialConditions::new(1.0, -0.3).unwrap();
        let f = Excitation::zero(10.0).unwrap();
        let traj = duhamel_solve(&sys, &f, &ic, &uniform_grid(10.0, 101)).unwrap();
        for s in traj.samples() {
            let (x, v) = homogeneous_solution(&sys, &ic, s.t).unwrap();
            assert!((s.x - x).abs() < 1e-14 && (s.v - v).abs() < 1e-14);
        }
    }

    #[test]
    fn undamped_step_response() {
        let sys = SdofSystem::new(0.0, 1.0, 6.0).unwrap();
        let f = Excitation::constant(6.0, 1.0).unwrap();
        let traj = duhamel_solve(&sys, &f, &InitialConditions::zero(), &uniform_grid(6.0, 61)).unwrap();
        for s in traj.samples() {
            assert!((s.x - (1.0 - s.t.cos())).abs() < 1e-14);
            assert!((s.v - s.t.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn f_form_matches_direct_form() {
        let sys = SdofSystem::new(0.3, 2.0, 5.0).unwrap();
        let f = Excitation::new(
            vec![0.0, 1.5, 3.0, 5.0],
            vec![vec![1.0, -0.5], vec![0.25, 0.0, 0.1], vec![-1.0]],
        )
        .unwrap();
        let grid = uniform_grid(5.0, 201);
        let direct = duhamel_solve(&sys, &f, &InitialConditions::zero(), &grid).unwrap();
        let big_f = weak_integral(&f, sys.c());
        for shift in [0.0, -5.0, 100.0] {
            let via_f = duhamel_from_f(&sys, &big_f.shifted(shift), &grid).unwrap();
            let (dx, dv) = direct.max_abs_diff(&via_f).unwrap();
            assert!(dx < 1e-11 && dv < 1e-11, "shift {shift}: {dx} {dv}");
        }
    }

    #[test]
    fn zero_antiderivative_gives_rest() {
        let sys = SdofSystem::new(0.1, 1.0, 2.0).unwrap();
        let zero = weak_integral(&Excitation::zero(2.0).unwrap(), 0.1);
        let traj = duhamel_from_f(&sys, &zero, &uniform_grid(2.0, 11)).unwrap();
        assert!(traj.samples().iter().all(|s| s.x == 0.0 && s.v == 0.0));
    }

    #[test]
    fn grid_outside_horizon_is_rejected() {
        let sys = SdofSystem::new(0.1, 1.0, 2.0).unwrap();
        let f = Excitation::zero(2.0).unwrap();
        assert!(duhamel_solve(&sys, &f, &InitialConditions::zero(), &[0.0, 2.5]).is_err());
        assert!(duhamel_solve(&sys, &f, &InitialConditions::zero(), &[0.0, 1.0, 0.5]).is_err());
    }

    #[test]
    fn solution_is_linear_in_data() {
        let sys = SdofSystem::new(0.2, 1.0, 4.0).unwrap();
        let f1 = Excitation::polynomial(4.0, vec![0.5, 1.0, -0.2]).unwrap();
        let f2 = Excitation::new(vec![0.0, 2.0, 4.0], vec![vec![1.0], vec![0.0, -1.0]]).unwrap();
        let ic1 = InitialConditions::new(1.0, 0.0).unwrap();
        let ic2 = InitialConditions::new(-0.5, 2.0).unwrap();
        let sum = Excitation::linear_combination(&[(1.0, &f1), (1.0, &f2)]).unwrap();
        let grid = uniform_grid(4.0, 81);
        let a = duhamel_solve(&sys, &f1, &ic1, &grid).unwrap();
        let b = duhamel_solve(&sys, &f2, &ic2, &grid).unwrap();
        let ab = duhamel_solve(&sys, &sum, &(ic1 + ic2), &grid).unwrap();
        for ((p, q), r) in a.samples().iter().zip(b.samples()).zip(ab.samples()) {
            assert!((p.x + q.x - r.x).abs() < 1e-10);
            assert!((p.v + q.v - r.v).abs() < 1e-10);
        }
    }
}
