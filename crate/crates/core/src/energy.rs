//! Energy diagnostics: the weighted Lagrangian and Hamiltonian, their
//! balance laws, and the energy inequality for forced motion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Excitation, Motion, SdofSystem, TimeFunction, Trajectory, Trial};
use crate::quadrature::{composite_nodes, panel_breaks};

const ORDER: usize = 16;

/// `1/2 e^{ct} (v^2 + k x^2)`.
pub fn hamiltonian_c(sys: &SdofSystem, x: f64, v: f64, t: f64) -> f64 {
    0.5 * (sys.c() * t).exp() * (v * v + sys.k() * x * x)
}

/// `1/2 e^{ct} (v^2 - k x^2)`.
pub fn lagrangian_c(sys: &SdofSystem, x: f64, v: f64, t: f64) -> f64 {
    0.5 * (sys.c() * t).exp() * (v * v - sys.k() * x * x)
}

/// Unweighted Hamiltonian `1/2 (v^2 + k x^2)`.
pub fn hamiltonian(sys: &SdofSystem, x: f64, v: f64) -> f64 {
    0.5 * (v * v + sys.k() * x * x)
}

/// `max |dH_c/dt + c L_c|` over interior grid points, with centered
/// differences of `H_c`. Small for free motion only.
pub fn energy_law_residual(sys: &SdofSystem, traj: &Trajectory) -> f64 {
    forced_law_residual(sys, traj, None)
}

fn forced_law_residual(sys: &SdofSystem, traj: &Trajectory, f: Option<&Excitation>) -> f64 {
    let s = traj.samples();
    let h = |i: usize| hamiltonian_c(sys, s[i].x, s[i].v, s[i].t);
    // dH_c/dt jumps with f, so stencils straddling a jump are skipped.
    let jumps: Vec<f64> = f.map_or_else(Vec::new, |f| f.jumps().iter().map(|j| j.0).collect());
    (1..s.len().saturating_sub(1))
        .filter(|&i| !jumps.iter().any(|&tj| s[i - 1].t < tj && tj < s[i + 1].t))
        .map(|i| {
            let rate = (h(i + 1) - h(i - 1)) / (s[i + 1].t - s[i - 1].t);
            let power = f.map_or(0.0, |f| (sys.c() * s[i].t).exp() * f.value(s[i].t) * s[i].v);
            (rate + sys.c() * lagrangian_c(sys, s[i].x, s[i].v, s[i].t) - power).abs()
        })
        .fold(0.0, f64::max)
}

/// `max |H(t) - H(0)| / H(0)` for the unweighted Hamiltonian.
pub fn hamiltonian_drift(sys: &SdofSystem, traj: &Trajectory) -> f64 {
    let s = traj.samples();
    let h0 = hamiltonian(sys, s[0].x, s[0].v);
    let drift = s
        .iter()
        .map(|p| (hamiltonian(sys, p.x, p.v) - h0).abs())
        .fold(0.0, f64::max);
    if h0 > 0.0 {
        drift / h0
    } else {
        drift
    }
}

/// The three forms of the zero-boundary energy identity:
/// `lhs = 1/2 e^{cT} u'(T)^2 - 1/2 u'(0)^2`,
/// `rhs1 = <f, u'>_c - c int L_c(u, u')`,
/// `rhs2 = -<f', u>_c - c <f, u>_c - c int L_c(u, u')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationIdentity {
    pub lhs: f64,
    pub rhs1: f64,
    pub rhs2: f64,
    /// `<f', u>_c` alone, for comparison with the shortened form of `rhs2`.
    pub fdot_u: f64,
}

impl ConservationIdentity {
    pub fn max_discrepancy(&self) -> f64 {
        (self.lhs - self.rhs1).abs().max((self.lhs - self.rhs2).abs())
    }
}

fn nodes(sys: &SdofSystem, extra: &[f64]) -> Vec<(f64, f64)> {
    let t_bar = sys.t_bar();
    let mut width = t_bar / 64.0;
    width = width.min(0.25 / sys.k().sqrt());
    if sys.c() > 0.0 {
        width = width.min(1.0 / sys.c());
    }
    composite_nodes(&panel_breaks(0.0, t_bar, extra, width), ORDER)
}

/// Evaluates the identity for `u` vanishing at both ends, with
/// `f = u'' + c u' + k u` in the weak sense.
pub fn conservation_identity(sys: &SdofSystem, f: &dyn TimeFunction, u: &dyn Trial) -> Result<ConservationIdentity> {
    let (c, t_bar) = (sys.c(), sys.t_bar());
    let start = u.jet(0.0);
    let end = u.jet(t_bar);
    let pts = nodes(sys, &f.breakpoints());
    let scale = pts.iter().map(|&(t, _)| u.jet(t)[0].abs()).fold(1.0, f64::max);
    if start[0].abs() > 1e-10 * scale || end[0].abs() > 1e-10 * scale {
        return Err(Error::BoundaryViolation(format!(
            "u(0) = {:e}, u(T) = {:e}; both must vanish",
            start[0], end[0]
        )));
    }
    let (mut f_du, mut df_u, mut f_u, mut lag) = (0.0, 0.0, 0.0, 0.0);
    for (t, w) in pts {
        let [x, v, _] = u.jet(t);
        let e = w * (c * t).exp();
        f_du += e * f.value(t) * v;
        df_u += e * f.derivative(t) * x;
        f_u += e * f.value(t) * x;
        lag += w * lagrangian_c(sys, x, v, t);
    }
    Ok(ConservationIdentity {
        lhs: 0.5 * (c * t_bar).exp() * end[1] * end[1] - 0.5 * start[1] * start[1],
        rhs1: f_du - c * lag,
        rhs2: -df_u - c * f_u - c * lag,
        fdot_u: df_u,
    })
}

/// Energy audit of a forced trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    /// `H_c(0)`.
    pub h0: f64,
    /// `H_c(T)`.
    pub h_t: f64,
    /// `H(T) - H(0)` for the unweighted Hamiltonian.
    pub conservation_lhs: f64,
    /// `f x |_0^T - sum J_j x(t_j) - int f' x - c int x'^2`, with `J_j` the
    /// jumps of `f`.
    pub conservation_rhs: f64,
    /// Largest mismatch of the two sides above over the grid.
    pub balance_residual: f64,
    /// `1/2 ||x'||_c^2 + 1/2 k ||x||_c^2`.
    pub dissipation_lhs: f64,
    /// `(||f||_c + m ||f'||_c) ||x||_c + m (H(0) - f(0) x(0))` plus jump
    /// terms, with `m = (e^{cT} - 1)/c` (`T` when `c = 0`).
    pub dissipation_rhs: f64,
    pub dissipation_holds: bool,
    /// `max |dH_c/dt + c L_c - e^{ct} f x'|` by centered differences.
    pub law_residual: f64,
    /// `|H_c(T) - H_c(0)|`.
    pub corollary_lhs: f64,
    /// `e^{cT} f(T) x(T) - f(0) x(0) - <f', x>_c`.
    pub corollary_rhs: f64,
    /// Reported only: the corollary is not asserted.
    pub corollary_holds: bool,
    /// For free motion, whether `H` never increases on the grid.
    pub h_nonincreasing: Option<bool>,
}

/// Evaluates the balance laws and the energy inequality for `x` on `grid`.
pub fn dissipation_audit(sys: &SdofSystem, f: &Excitation, x: &dyn Motion, grid: &[f64]) -> Result<EnergyAudit> {
    let (c, k, t_bar) = (sys.c(), sys.k(), sys.t_bar());
    let traj = Trajectory::from_motion(x, grid)?;
    if (traj.t_bar() - t_bar).abs() > 1e-12 * t_bar {
        return Err(Error::DimensionMismatch(format!(
            "grid ends at {}, horizon is {t_bar}",
            traj.t_bar()
        )));
    }
    let jumps = f.jumps();
    let s = traj.samples();
    let (x0, v0) = (s[0].x, s[0].v);
    let f0 = f.value(0.0);
    let h_start = hamiltonian(sys, x0, v0);

    // Pointwise balance, accumulated interval by interval.
    let mut extra: Vec<f64> = grid.to_vec();
    extra.extend(f.mesh().iter().copied());
    let mut pts = nodes(sys, &extra).into_iter().peekable();
    let (mut int_fx, mut int_v2) = (0.0, 0.0);
    let mut balance_residual = 0.0f64;
    let mut rhs_at = 0.0;
    for p in s {
        while let Some(&(t, w)) = pts.peek() {
            if t > p.t {
                break;
            }
            let (xq, vq) = x.state(t);
            int_fx += w * f.slope(t) * xq;
            int_v2 += w * vq * vq;
            pts.next();
        }
        let jump_work: f64 = jumps.iter().filter(|(tj, _)| *tj <= p.t).map(|(tj, j)| j * x.state(*tj).0).sum();
        rhs_at = f.value(p.t) * p.x - f0 * x0 - jump_work - int_fx - c * int_v2;
        let lhs = hamiltonian(sys, p.x, p.v) - h_start;
        balance_residual = balance_residual.max((lhs - rhs_at).abs());
    }
    let last = s[s.len() - 1];
    let conservation_lhs = hamiltonian(sys, last.x, last.v) - h_start;

    // Weighted norms and the inequality.
    let (mut xx, mut vv, mut ff, mut dd, mut fdot_x) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (t, w) in nodes(sys, f.mesh()) {
        let (xq, vq) = x.state(t);
        let e = w * (c * t).exp();
        xx += e * xq * xq;
        vv += e * vq * vq;
        ff += e * f.value(t).powi(2);
        dd += e * f.slope(t).powi(2);
        fdot_x += e * f.slope(t) * xq;
    }
    let m = if c > 0.0 { (c * t_bar).exp_m1() / c } else { t_bar };
    let jump_bound: f64 = jumps.iter().map(|(tj, j)| (j * x.state(*tj).0).abs()).sum();
    let dissipation_lhs = 0.5 * vv + 0.5 * k * xx;
    let dissipation_rhs = (ff.sqrt() + m * dd.sqrt()) * xx.sqrt() + m * (h_start - f0 * x0 + jump_bound);
    let tol = 1e-12 * dissipation_lhs.abs().max(dissipation_rhs.abs()).max(f64::MIN_POSITIVE);

    let h0 = hamiltonian_c(sys, x0, v0, 0.0);
    let h_t = hamiltonian_c(sys, last.x, last.v, t_bar);
    let fdot_x_jumps: f64 = jumps.iter().map(|(tj, j)| (c * tj).exp() * j * x.state(*tj).0).sum();
    let corollary_lhs = (h_t - h0).abs();
    let corollary_rhs = (c * t_bar).exp() * f.value(t_bar) * last.x - f0 * x0 - fdot_x - fdot_x_jumps;

    let h_nonincreasing = f.is_zero().then(|| {
        let tol = 1e-12 * h_start.max(f64::MIN_POSITIVE);
        s.windows(2)
            .all(|p| hamiltonian(sys, p[1].x, p[1].v) <= hamiltonian(sys, p[0].x, p[0].v) + tol)
    });

    Ok(EnergyAudit {
        h0,
        h_t,
        conservation_lhs,
        conservation_rhs: rhs_at,
        balance_residual,
        dissipation_lhs,
        dissipation_rhs,
        dissipation_holds: dissipation_lhs <= dissipation_rhs + tol,
        law_residual: forced_law_residual(sys, &traj, Some(f)),
        corollary_lhs,
        corollary_rhs,
        corollary_holds: corollary_lhs <= corollary_rhs + tol,
        h_nonincreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{uniform_grid, InitialConditions, Sample, SmoothFn};
    use crate::oracle::DuhamelOracle;
    use std::f64::consts::{E, PI};

    #[test]
    fn hamiltonian_examples() {
        let sys = SdofSystem::new(0.0, 1.0, 1.0).unwrap();
        for t in [0.0f64, 0.7, 3.0] {
            assert!((hamiltonian_c(&sys, t.cos(), -t.sin(), t) - 0.5).abs() < 1e-15);
        }
        assert_eq!(hamiltonian_c(&sys, 0.0, 0.0, 0.4), 0.0);
        let damped = SdofSystem::new(1.0, 1.0, 2.0).unwrap();
        assert!((hamiltonian_c(&damped, 1.0, 0.0, 1.0) - E / 2.0).abs() < 1e-15);
    }

    fn free(c: f64, t_bar: f64) -> (SdofSystem, Trajectory) {
        let sys = SdofSystem::new(c, 1.0, t_bar).unwrap();
        let f = Excitation::zero(t_bar).unwrap();
        let oracle = DuhamelOracle::new(&sys, &f, &InitialConditions::new(1.0, 0.3).unwrap()).unwrap();
        let n = (t_bar / 1e-3).round() as usize + 1;
        (sys, Trajectory::from_motion(&oracle, &uniform_grid(t_bar, n)).unwrap())
    }

    #[test]
    fn law_residuals() {
        let (sys, traj) = free(0.0, 5.0);
        assert!(energy_law_residual(&sys, &traj) < 1e-6);
        assert!(hamiltonian_drift(&sys, &traj) < 1e-12);
        let (sys, traj) = free(0.2, 5.0);
        assert!(energy_law_residual(&sys, &traj) < 1e-4);
        let wrong: Vec<Sample> = traj
            .samples()
            .iter()
            .map(|s| Sample { t: s.t, x: s.t.sin(), v: 0.0 })
            .collect();
        assert!(energy_law_residual(&sys, &Trajectory::new(wrong).unwrap()) > 0.1);
    }

    struct Manufactured {
        omega: f64,
    }

    impl Trial for Manufactured {
        fn jet(&self, t: f64) -> [f64; 3] {
            let w = self.omega;
            [(w * t).sin(), w * (w * t).cos(), -w * w * (w * t).sin()]
        }
    }

    fn forcing(sys: SdofSystem, w: f64) -> impl TimeFunction {
        let (c, k) = (sys.c(), sys.k());
        SmoothFn::new(
            move |t: f64| (k - w * w) * (w * t).sin() + c * w * (w * t).cos(),
            move |t: f64| (k - w * w) * w * (w * t).cos() - c * w * w * (w * t).sin(),
        )
    }

    #[test]
    fn conservation_identity_undamped_and_damped() {
        let u = Manufactured { omega: PI };
        for c in [0.0, 0.3] {
            let sys = SdofSystem::new(c, 1.0, 1.0).unwrap();
            let id = conservation_identity(&sys, &forcing(sys, PI), &u).unwrap();
            assert!(id.max_discrepancy() < 1e-10 * id.lhs.abs().max(1.0), "{id:?}");
        }
        let sys = SdofSystem::new(0.0, 1.0, 1.0).unwrap();
        let zero = SmoothFn::new(|_: f64| 0.0, |_: f64| 0.0);
        let id = conservation_identity(&sys, &zero, &Manufactured { omega: 0.0 }).unwrap();
        assert_eq!((id.lhs, id.rhs1, id.rhs2), (0.0, 0.0, 0.0));
        let short = SdofSystem::new(0.0, 1.0, 0.5).unwrap();
        assert!(matches!(
            conservation_identity(&short, &zero, &u),
            Err(Error::BoundaryViolation(_))
        ));
    }

    #[test]
    fn free_damped_audit() {
        let sys = SdofSystem::new(0.2, 1.0, 8.0).unwrap();
        let f = Excitation::zero(8.0).unwrap();
        let oracle = DuhamelOracle::new(&sys, &f, &InitialConditions::new(1.0, 0.0).unwrap()).unwrap();
        let audit = dissipation_audit(&sys, &f, &oracle, &uniform_grid(8.0, 401)).unwrap();
        assert_eq!(audit.h_nonincreasing, Some(true));
        assert!(audit.dissipation_holds);
        assert!(audit.balance_residual < 1e-10);
    }

    #[test]
    fn forced_audit_with_jumps() {
        let sys = SdofSystem::new(0.3, 2.0, 6.0).unwrap();
        let f = Excitation::new(vec![0.0, 2.0, 6.0], vec![vec![1.0, 0.5], vec![-1.0, 0.0, 0.1]]).unwrap();
        let oracle = DuhamelOracle::new(&sys, &f, &InitialConditions::new(0.2, -0.4).unwrap()).unwrap();
        let audit = dissipation_audit(&sys, &f, &oracle, &uniform_grid(6.0, 6001)).unwrap();
        assert!(audit.balance_residual < 1e-7, "{audit:?}");
        assert!((audit.conservation_lhs - audit.conservation_rhs).abs() < 1e-7);
        assert!(audit.dissipation_holds);
        assert!(audit.law_residual < 1e-4);
        assert_eq!(audit.h_nonincreasing, None);
    }

    #[test]
    fn corrupted_motion_is_detected() {
        let sys = SdofSystem::new(0.2, 1.0, 4.0).unwrap();
        let f = Excitation::constant(4.0, 1.0).unwrap();
        let oracle = DuhamelOracle::new(&sys, &f, &InitialConditions::zero()).unwrap();
        let corrupted = |t: f64| {
            let (x, v) = oracle.state(t);
            (x + 0.01 * t, v)
        };
        let audit = dissipation_audit(&sys, &f, &corrupted, &uniform_grid(4.0, 4001)).unwrap();
        assert!(audit.balance_residual > 1e-3);
        assert!(audit.law_residual > 1e-3);
    }
}
