//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use nalgebra::DMatrix;
use weakdyn::analytic::{fundamental_solutions, time_dilate};
use weakdyn::basis::BasisSet;
use weakdyn::corpus::standard_corpus;
use weakdyn::energy::{conservation_identity, dissipation_audit, energy_law_residual, hamiltonian};
use weakdyn::mdof::{mdof_solve, modal_decompose, Engine, MdofSystem};
use weakdyn::model::{uniform_grid, SmoothFn};
use weakdyn::oracle::{duhamel_from_f, duhamel_solve, DuhamelOracle};
use weakdyn::quadrature::{weak_integral, weighted_l2_norm};
use weakdyn::weakform::{
    apply_f_operator_poly, boundary_map_unchecked, boundary_value, error_report, is_exceptional, solve_weak,
    verify_projection_identity, MapMode, EXCEPTIONAL_TOL,
};
use weakdyn::{BasisFamily, Excitation, InitialConditions, Motion, SdofSystem, Trajectory, Trial};

type Outcome = Result<String, String>;

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_fidelity() -> Outcome {
    let mut worst = 0.0f64;
    for (c, k, t_bar) in [(0.0, 1.0, 10.0), (0.2, 1.0, 10.0), (1.0, 4.0, 5.0)] {
        let sys = SdofSystem::new(c, k, t_bar).map_err(|e| e.to_string())?;
        let ic = InitialConditions::new(1.0, -0.5).unwrap();
        let grid = uniform_grid(t_bar, 1000);
        let traj = duhamel_solve(&sys, &Excitation::zero(t_bar).unwrap(), &ic, &grid).unwrap();
        let wd = (k - 0.25 * c * c).sqrt();
        for s in traj.samples() {
            let (sin, cos) = (wd * s.t).sin_cos();
            let x = (-0.5 * c * s.t).exp() * (ic.x0 * cos + (ic.v0 + 0.5 * c * ic.x0) / wd * sin);
            worst = worst.max((s.x - x).abs());
        }
    }
    check(worst < 1e-10, format!("max |x - closed form| = {worst:.3e}"))
}

fn integration_constant() -> Outcome {
    let sys = SdofSystem::new(0.2, 1.0, 6.0).unwrap();
    let f = Excitation::interpolate(|t| (1.3 * t).cos() + 0.1 * t, 6.0, 12, 3).unwrap();
    let big_f = weak_integral(&f, sys.c());
    let grid = uniform_grid(6.0, 400);
    let base = duhamel_from_f(&sys, &big_f, &grid).unwrap();
    let mut worst = 0.0f64;
    for k in [-5.0, 1.0, 100.0] {
        let other = duhamel_from_f(&sys, &big_f.shifted(k), &grid).unwrap();
        worst = worst.max(base.max_abs_diff(&other).unwrap().0);
    }
    check(worst < 1e-9, format!("max deviation over K = {worst:.3e}"))
}

fn fundamental_identity() -> Outcome {
    let params = [(0.0, 1.0, 10.0), (0.2, 1.0, 10.0), (1.0, 4.0, 5.0), (0.5, 9.0, 3.0), (1.9, 1.0, 20.0)];
    let mut worst = 0.0f64;
    for (c, k, t_bar) in params {
        let sys = SdofSystem::new(c, k, t_bar).unwrap();
        let wd = sys.derived_params().unwrap().omega_d;
        for t in uniform_grid(t_bar, 10_000) {
            let v = fundamental_solutions(&sys, t).unwrap();
            let lhs = v.d * v.d + wd * wd * v.s * v.s;
            worst = worst.max((lhs - (-c * t).exp()).abs());
        }
    }
    check(worst < 1e-12, format!("max identity error = {worst:.3e}"))
}

fn derivative_relations() -> Outcome {
    let sys = SdofSystem::new(0.3, 2.0, 10.0).unwrap();
    let points: Vec<f64> = (1..20).map(|i| 0.5 * i as f64).collect();
    let err = |h: f64| {
        points.iter().fold(0.0f64, |acc, &t| {
            let (p, m, v) = (
                fundamental_solutions(&sys, t + h).unwrap(),
                fundamental_solutions(&sys, t - h).unwrap(),
                fundamental_solutions(&sys, t).unwrap(),
            );
            let dd = ((p.d - m.d) / (2.0 * h) - v.d_dot).abs();
            let ds = ((p.s - m.s) / (2.0 * h) - v.s_dot).abs();
            acc.max(dd).max(ds)
        })
    };
    let e: Vec<f64> = [1e-3, 1e-4, 1e-5].iter().map(|&h| err(h)).collect();
    let (p1, p2) = ((e[0] / e[1]).log10(), (e[1] / e[2]).log10());
    // Rounding (~eps/h) starts to show at h = 1e-5, hence the looser second order.
    let ok = (1.8..2.2).contains(&p1) && p2 > 1.5;
    check(ok, format!("errors [{}], orders {p1:.2} {p2:.2}", sci(&e)))
}

fn corpus_bases(t_bar: f64, c: f64) -> Vec<BasisSet> {
    vec![
        BasisSet::bernstein(t_bar, 8).unwrap(),
        BasisSet::bernstein(t_bar, 16).unwrap(),
        BasisSet::damped_wave(t_bar, c, 12).unwrap(),
    ]
}

fn galerkin_orthogonality() -> Outcome {
    let corpus = standard_corpus().unwrap();
    let mut worst = 0.0f64;
    let mut solves = 0;
    for case in &corpus {
        for basis in corpus_bases(case.sys.t_bar(), case.sys.c()) {
            let sol = solve_weak(&case.sys, &basis, &case.f, &case.ic).unwrap();
            let r = verify_projection_identity(&case.sys, &basis, &case.f, &case.ic, &sol).unwrap();
            let norm = weighted_l2_norm(&case.f, case.sys.c());
            let scale = if norm > 0.0 { norm } else { r.scale };
            worst = worst.max(r.direct / scale);
            solves += 1;
        }
    }
    check(
        worst < 1e-8,
        format!("{} cases, {solves} solves, max relative residual {worst:.3e}", corpus.len()),
    )
}

fn convergence() -> Outcome {
    let sys = SdofSystem::new(0.2, 1.0, 8.0).unwrap();
    let f = Excitation::interpolate(|t| (2.0 * t).sin(), 8.0, 64, 3).unwrap();
    let ic = InitialConditions::zero();
    let mut errs = Vec::new();
    let mut ratios = Vec::new();
    for degree in [4, 8, 16, 32] {
        let basis = BasisSet::bernstein(8.0, degree).unwrap();
        let sol = solve_weak(&sys, &basis, &f, &ic).unwrap();
        let rep = error_report(&sys, &basis, &f, &ic, &sol).unwrap();
        errs.push(rep.x_er_linf);
        ratios.push(rep.ratio_h1_over_fer);
    }
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    check(
        decreasing && errs[3] < 1e-5 && spread < 10.0,
        format!("x_err_linf [{}], ratio max/min {spread:.2}", sci(&errs)),
    )
}

fn error_bounds() -> Outcome {
    let mut violations = Vec::new();
    let mut checked = 0;
    for case in standard_corpus().unwrap() {
        for basis in corpus_bases(case.sys.t_bar(), case.sys.c()) {
            let sol = solve_weak(&case.sys, &basis, &case.f, &case.ic).unwrap();
            let rep = error_report(&case.sys, &basis, &case.f, &case.ic, &sol).unwrap();
            for v in rep.bound_violations(1e-12) {
                violations.push(format!("{} {}: {v}", case.name, basis.id()));
            }
            checked += 1;
        }
    }
    check(violations.is_empty(), format!("{checked} reports, violations {violations:?}"))
}

fn boundary_map_checks() -> Outcome {
    let sys = SdofSystem::new(0.2, 1.0, 6.0).unwrap();
    let f = Excitation::polynomial(6.0, vec![1.0, 0.3]).unwrap();
    let xs: Vec<f64> = [-1.0, 0.0, 1.0]
        .iter()
        .map(|&v| boundary_value(&sys, &f, 0.5, v, &MapMode::Analytic).unwrap())
        .collect();
    let collinear = (xs[2] - 2.0 * xs[1] + xs[0]).abs();

    let alpha = |t_bar: f64| {
        let s = SdofSystem::new(0.0, 1.0, t_bar).unwrap();
        boundary_map_unchecked(&s, &Excitation::zero(t_bar).unwrap(), 0.0).unwrap().alpha.abs()
    };
    let approach: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&d| alpha(PI - d)).collect();
    let shrinking = approach.windows(2).all(|w| w[1] < w[0]);
    let at_pi = alpha(PI);
    let flag = |t: f64| is_exceptional(&SdofSystem::new(0.0, 1.0, t).unwrap(), EXCEPTIONAL_TOL).unwrap().exceptional;
    let ok = collinear < 1e-10 && shrinking && at_pi < 1e-12 && flag(PI) && !flag(PI + 0.1);
    check(
        ok,
        format!("collinearity {collinear:.2e}, alpha near pi [{}], alpha(pi) {at_pi:.2e}", sci(&approach)),
    )
}

fn dilation() -> Outcome {
    let k = 4.0;
    let sys = SdofSystem::new(0.4, k, 5.0).unwrap();
    let f = Excitation::new(vec![0.0, 2.0, 5.0], vec![vec![1.0, -0.2], vec![0.0, 0.1, 0.02]]).unwrap();
    let ic = InitialConditions::new(0.3, -0.7).unwrap();
    let dilated = time_dilate(&sys, &f, &ic, k.sqrt()).unwrap();
    let inner = DuhamelOracle::new(&dilated.sys, &dilated.f, &dilated.ic).unwrap();
    let back = dilated.map_back(&inner);
    let direct = DuhamelOracle::new(&sys, &f, &ic).unwrap();
    let worst = uniform_grid(5.0, 1000)
        .into_iter()
        .map(|t| (back.state(t).0 - direct.state(t).0).abs())
        .fold(0.0, f64::max);
    check(
        worst < 1e-8 && dilated.sys.k() == 1.0,
        format!("max |x - mapped back| = {worst:.3e}"),
    )
}

/// `u = sin(pi t / T)`, zero at both ends.
struct SineTrial {
    w: f64,
}

impl Trial for SineTrial {
    fn jet(&self, t: f64) -> [f64; 3] {
        let w = self.w;
        [(w * t).sin(), w * (w * t).cos(), -w * w * (w * t).sin()]
    }
}

fn energy() -> Outcome {
    let free = Excitation::zero(10.0).unwrap();
    let ic = InitialConditions::new(1.0, 0.5).unwrap();
    let undamped = SdofSystem::new(0.0, 1.0, 10.0).unwrap();
    let traj = Trajectory::from_motion(&DuhamelOracle::new(&undamped, &free, &ic).unwrap(), &uniform_grid(10.0, 1001)).unwrap();
    let h0 = hamiltonian(&undamped, 1.0, 0.5);
    let drift = traj
        .samples()
        .iter()
        .map(|s| (hamiltonian(&undamped, s.x, s.v) - h0).abs() / h0)
        .fold(0.0, f64::max);

    let damped = SdofSystem::new(0.2, 1.0, 10.0).unwrap();
    let traj = Trajectory::from_motion(&DuhamelOracle::new(&damped, &free, &ic).unwrap(), &uniform_grid(10.0, 10_001)).unwrap();
    let law = energy_law_residual(&damped, &traj);

    let mut identity = 0.0f64;
    for (c, k, t_bar) in [(0.0, 1.0, 2.0), (0.3, 2.0, 3.0), (1.0, 4.0, 1.5)] {
        let sys = SdofSystem::new(c, k, t_bar).unwrap();
        let w = PI / t_bar;
        let f = SmoothFn::new(
            move |t: f64| (k - w * w) * (w * t).sin() + c * w * (w * t).cos(),
            move |t: f64| (k - w * w) * w * (w * t).cos() - c * w * w * (w * t).sin(),
        );
        let id = conservation_identity(&sys, &f, &SineTrial { w }).unwrap();
        identity = identity.max(id.max_discrepancy() / id.lhs.abs().max(1.0));
    }

    let mut failures = Vec::new();
    for case in standard_corpus().unwrap() {
        let oracle = DuhamelOracle::new(&case.sys, &case.f, &case.ic).unwrap();
        let audit = dissipation_audit(&case.sys, &case.f, &oracle, &uniform_grid(case.sys.t_bar(), 2001)).unwrap();
        if !audit.dissipation_holds {
            failures.push(case.name);
        }
    }
    check(
        drift < 1e-9 && law < 1e-4 && identity < 1e-8 && failures.is_empty(),
        format!(
            "H0 drift {drift:.2e}, law residual {law:.2e}, identity {identity:.2e}, inequality failures {failures:?}"
        ),
    )
}

fn two_dof() -> (MdofSystem, Vec<Excitation>, Vec<InitialConditions>) {
    let k = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
    let m = DMatrix::identity(2, 2);
    let c = &m * 0.1 + &k * 0.05;
    let sys = MdofSystem::new(m, c, k, 6.0).unwrap();
    let f = vec![
        Excitation::polynomial(6.0, vec![1.0, 0.5, -0.1]).unwrap(),
        Excitation::zero(6.0).unwrap(),
    ];
    let ic = vec![InitialConditions::new(0.1, 0.0).unwrap(), InitialConditions::zero()];
    (sys, f, ic)
}

fn mdof() -> Outcome {
    let (sys, f, ic) = two_dof();
    let grid = uniform_grid(6.0, 6001);
    let oracle = mdof_solve(&sys, &f, &ic, &Engine::Oracle, &grid).unwrap();
    let weak = mdof_solve(&sys, &f, &ic, &Engine::Weak(BasisFamily::Bernstein { degree: 16 }), &grid).unwrap();
    let err = oracle
        .dofs
        .iter()
        .zip(&weak.dofs)
        .map(|(a, b)| a.max_abs_diff(b).unwrap().0)
        .fold(0.0, f64::max);
    let residual = sys.ode_residual(&oracle.dofs, &f).unwrap();

    let modal = modal_decompose(&sys).unwrap();
    let wd = modal.subproblems()[0].derived_params().unwrap().omega_d;
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("half_period.toml");
    std::fs::write(
        &cfg,
        format!(
            "[system.mdof]\nm = [[1.0, 0.0], [0.0, 1.0]]\nc = [[0.2, -0.05], [-0.05, 0.2]]\n\
             k = [[2.0, -1.0], [-1.0, 2.0]]\nt_bar = {:.17e}\n\n\
             [[excitations]]\nkind = \"polynomial\"\ncoefficients = [1.0, 0.5, -0.1]\n\n\
             [[excitations]]\nkind = \"zero\"\n\n[ic]\nx0 = [0.1, 0.0]\n\n\
             [basis]\nfamily = \"bernstein\"\ndegree = 16\n",
            PI / wd
        ),
    )
    .unwrap();
    let code = run_binary(&cfg, dir.path());
    check(
        err < 1e-5 && residual < 1e-6 && code == Some(3),
        format!("weak vs oracle {err:.2e}, ODE residual {residual:.2e}, half-period exit code {code:?}"),
    )
}

fn run_binary(cfg: &Path, out: &Path) -> Option<i32> {
    Command::new(env!("CARGO_BIN_EXE_weakdyn"))
        .args(["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("WEAKFORM_LOG", "off")
        .output()
        .ok()?
        .status
        .code()
}

fn manufactured() -> Outcome {
    let mut worst = 0.0f64;
    for case in standard_corpus().unwrap() {
        let t_bar = case.sys.t_bar();
        let basis = BasisSet::bernstein(t_bar, 7).unwrap();
        let p = Excitation::polynomial(t_bar, vec![0.3, 0.2, -0.1, 0.01]).unwrap();
        let f = apply_f_operator_poly(&case.sys, &p).unwrap();
        let ic = InitialConditions::new(0.3, 0.2).unwrap();
        let sol = solve_weak(&case.sys, &basis, &f, &ic).unwrap();
        for t in uniform_grid(t_bar, 1000) {
            worst = worst.max((sol.state(t).0 - p.eval(t).unwrap()).abs());
        }
    }
    check(worst < 1e-9, format!("max |x - p| = {worst:.3e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("oracle fidelity", oracle_fidelity),
        ("integration constant", integration_constant),
        ("fundamental identity", fundamental_identity),
        ("derivative relations", derivative_relations),
        ("galerkin orthogonality", galerkin_orthogonality),
        ("convergence", convergence),
        ("error bounds", error_bounds),
        ("boundary map", boundary_map_checks),
        ("time dilation", dilation),
        ("energy", energy),
        ("mdof", mdof),
        ("manufactured exactness", manufactured),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Ok(Err(detail)) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: panicked", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
