//! Subcommand implementations.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use weakdyn::energy::{dissipation_audit, hamiltonian_drift};
use weakdyn::mdof::{mdof_boundary_correspondence, mdof_solve, modal_decompose, Engine};
use weakdyn::model::uniform_grid;
use weakdyn::weakform::{
    boundary_map, boundary_map_unchecked, boundary_value, error_report, is_exceptional, solve_weak, ExceptionalCheck,
    MapMode, EXCEPTIONAL_TOL,
};
use weakdyn::{BasisSet, DuhamelOracle, Error, Motion, Trajectory};

use crate::config::{Loaded, MdofProblem, Problem, SdofProblem};
use crate::error::CliError;
use crate::output::{ensure_dir, per_dof, write_csv, write_json};

const TRAJECTORY_HEADER: [&str; 6] = ["t", "x_weak", "v_weak", "x_oracle", "v_oracle", "abs_err"];

/// Options shared by all subcommands.
pub struct Common {
    pub out: PathBuf,
    pub grid: usize,
}

impl Common {
    pub fn new(loaded: &Loaded, out: Option<PathBuf>, grid: Option<usize>) -> Result<Self, CliError> {
        let out = out
            .or_else(|| loaded.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        let grid = grid.unwrap_or(loaded.output.grid_points);
        if grid < 2 {
            return Err(CliError::Usage("--grid must be at least 2".into()));
        }
        ensure_dir(&out)?;
        Ok(Self { out, grid })
    }
}

fn sdof_only<'a>(loaded: &'a Loaded, command: &str) -> Result<&'a SdofProblem, CliError> {
    match &loaded.problem {
        Problem::Sdof(p) => Ok(p),
        Problem::Mdof(_) => Err(CliError::Usage(format!("`{command}` expects a [system.sdof] config"))),
    }
}

fn trajectory_rows(weak: &Trajectory, oracle: &Trajectory) -> (Vec<Vec<f64>>, f64, f64) {
    let mut max_x = 0.0f64;
    let mut max_v = 0.0f64;
    let rows = weak
        .samples()
        .iter()
        .zip(oracle.samples())
        .map(|(w, o)| {
            let err = (w.x - o.x).abs();
            max_x = max_x.max(err);
            max_v = max_v.max((w.v - o.v).abs());
            vec![w.t, w.x, w.v, o.x, o.v, err]
        })
        .collect();
    (rows, max_x, max_v)
}

pub fn solve(loaded: &Loaded, common: &Common) -> Result<(), CliError> {
    match &loaded.problem {
        Problem::Sdof(p) => solve_sdof(p, loaded, common),
        Problem::Mdof(p) => solve_mdof(p, loaded, common),
    }
}

fn solve_sdof(p: &SdofProblem, loaded: &Loaded, common: &Common) -> Result<(), CliError> {
    let basis = p.basis()?;
    let sol = solve_weak(&p.sys, &basis, &p.f, &p.ic)?;
    let oracle = DuhamelOracle::new(&p.sys, &p.f, &p.ic)?;
    let grid = uniform_grid(p.sys.t_bar(), common.grid);
    let weak_traj = Trajectory::from_motion(&sol, &grid)?;
    let oracle_traj = Trajectory::from_motion(&oracle, &grid)?;
    let (rows, max_abs_err, max_abs_err_v) = trajectory_rows(&weak_traj, &oracle_traj);
    let report = error_report(&p.sys, &basis, &p.f, &p.ic, &sol)?;
    write_csv(&common.out.join(&loaded.output.trajectory), &TRAJECTORY_HEADER, &rows)?;
    let diagnostics = json!({
        "basis": basis.id(),
        "x_t": sol.xt(),
        "condition": sol.condition(),
        "closure_coefficient": sol.closure_coefficient(),
        "max_abs_err": max_abs_err,
        "max_abs_err_v": max_abs_err_v,
        "exceptional": is_exceptional(&p.sys, EXCEPTIONAL_TOL)?,
        "bound_violations": report.bound_violations(1e-12),
        "report": report,
    });
    write_json(&common.out.join(&loaded.output.diagnostics), &diagnostics)?;
    log::info!("solve: max |x_weak - x_oracle| = {max_abs_err:e}");
    Ok(())
}

fn fine_grid(t_bar: f64) -> Vec<f64> {
    uniform_grid(t_bar, ((t_bar / 1e-3).ceil() as usize + 1).max(3))
}

fn solve_mdof(p: &MdofProblem, loaded: &Loaded, common: &Common) -> Result<(), CliError> {
    let grid = uniform_grid(p.sys.t_bar(), common.grid);
    let weak = mdof_solve(&p.sys, &p.f, &p.ic, &Engine::Weak(p.family.clone()), &grid)?;
    let oracle = mdof_solve(&p.sys, &p.f, &p.ic, &Engine::Oracle, &grid)?;
    let mut max_abs_err = Vec::new();
    for (dof, (w, o)) in weak.dofs.iter().zip(&oracle.dofs).enumerate() {
        let (rows, max_x, _) = trajectory_rows(w, o);
        write_csv(&per_dof(&common.out, &loaded.output.trajectory, dof), &TRAJECTORY_HEADER, &rows)?;
        max_abs_err.push(max_x);
    }
    let fine = fine_grid(p.sys.t_bar());
    let fine_oracle = mdof_solve(&p.sys, &p.f, &p.ic, &Engine::Oracle, &fine)?;
    let fine_weak = mdof_solve(&p.sys, &p.f, &p.ic, &Engine::Weak(p.family.clone()), &fine)?;
    let diagnostics = json!({
        "basis": format!("{:?}", p.family),
        "modes": weak.modal.modes(),
        "offdiag_damping_ratio": weak.modal.offdiag_ratio(),
        "max_abs_err": max_abs_err,
        "ode_residual_oracle": p.sys.ode_residual(&fine_oracle.dofs, &p.f)?,
        "ode_residual_weak": p.sys.ode_residual(&fine_weak.dofs, &p.f)?,
    });
    write_json(&common.out.join(&loaded.output.diagnostics), &diagnostics)?;
    Ok(())
}

struct ConvergenceRow {
    degree: usize,
    x_err_linf: f64,
    x_err_l2: f64,
    v_err_l2: f64,
    f_er_l2: f64,
    theta_nh_max: f64,
    theta_h_max: f64,
    ratio: f64,
}

pub fn convergence(loaded: &Loaded, common: &Common, degrees: &[usize], floor: f64) -> Result<(), CliError> {
    let p = sdof_only(loaded, "convergence")?;
    if degrees.len() < 2 {
        return Err(CliError::Usage("--degrees needs at least two entries".into()));
    }
    let mut rows = Vec::with_capacity(degrees.len());
    for &degree in degrees {
        let basis = BasisSet::from_family(p.sys.t_bar(), p.family_of_size(degree))?;
        let sol = solve_weak(&p.sys, &basis, &p.f, &p.ic)?;
        let r = error_report(&p.sys, &basis, &p.f, &p.ic, &sol)?;
        rows.push(ConvergenceRow {
            degree,
            x_err_linf: r.x_er_linf,
            x_err_l2: r.x_er_l2,
            v_err_l2: r.v_er_l2,
            f_er_l2: r.big_f_er_l2,
            theta_nh_max: r.theta_nh.max,
            theta_h_max: r.theta_h.max,
            ratio: r.ratio_h1_over_fer,
        });
    }
    let header = [
        "degree",
        "x_err_linf",
        "x_err_l2",
        "v_err_l2",
        "F_er_l2",
        "theta_nh_max",
        "theta_h_max",
        "ratio_H1_over_Fer",
    ];
    let path = common.out.join("convergence.csv");
    let csv_err = |e: csv::Error| CliError::Io {
        path: path.clone(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in &rows {
        let mut rec = vec![r.degree.to_string()];
        rec.extend(
            [r.x_err_linf, r.x_err_l2, r.v_err_l2, r.f_er_l2, r.theta_nh_max, r.theta_h_max, r.ratio]
                .iter()
                .map(|&v| crate::output::fmt(v)),
        );
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let mut failures = Vec::new();
    for pair in rows.windows(2) {
        for (name, a, b) in [
            ("x_err_linf", pair[0].x_err_linf, pair[1].x_err_linf),
            ("x_err_l2", pair[0].x_err_l2, pair[1].x_err_l2),
        ] {
            if b >= a && a > floor {
                failures.push(format!("{name} rose from {a:e} to {b:e} at degree {}", pair[1].degree));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(failures.join("; ")))
    }
}

/// Thresholds applied by the energy audit.
pub struct EnergyTolerances {
    pub law: f64,
    pub balance: f64,
    pub drift: f64,
}

pub fn energy(
    loaded: &Loaded,
    common: &Common,
    engine: &str,
    grid_override: bool,
    tol: &EnergyTolerances,
    corrupt: f64,
) -> Result<(), CliError> {
    let p = sdof_only(loaded, "energy")?;
    let t_bar = p.sys.t_bar();
    let motion: Box<dyn Motion> = match engine {
        "oracle" => Box::new(DuhamelOracle::new(&p.sys, &p.f, &p.ic)?),
        "weak" => Box::new(solve_weak(&p.sys, &p.basis()?, &p.f, &p.ic)?),
        other => return Err(CliError::Usage(format!("unknown engine `{other}` (oracle | weak)"))),
    };
    let corrupted = |t: f64| {
        let (x, v) = motion.state(t);
        (x + corrupt * t, v)
    };
    let grid = if grid_override {
        uniform_grid(t_bar, common.grid)
    } else {
        fine_grid(t_bar)
    };
    let audit = dissipation_audit(&p.sys, &p.f, &corrupted, &grid)?;
    let drift = if p.f.is_zero() {
        Some(hamiltonian_drift(&p.sys, &Trajectory::from_motion(&corrupted, &grid)?))
    } else {
        None
    };
    let undamped_free = p.f.is_zero() && p.sys.c() == 0.0;
    let checks = json!({
        "dissipation_inequality": audit.dissipation_holds,
        "pointwise_balance": audit.balance_residual <= tol.balance,
        "energy_law": audit.law_residual <= tol.law,
        "nonincreasing": audit.h_nonincreasing,
        "conservation": if undamped_free { drift.map(|d| d <= tol.drift) } else { None },
    });
    let passed = checks
        .as_object()
        .expect("object")
        .values()
        .all(|v| v.as_bool().unwrap_or(true));
    write_json(
        &common.out.join("energy.json"),
        &json!({
            "engine": engine,
            "grid_points": grid.len(),
            "audit": audit,
            "hamiltonian_drift": drift,
            "tolerances": { "law": tol.law, "balance": tol.balance, "drift": tol.drift },
            "checks": checks,
            "passed": passed,
        }),
    )?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("energy checks failed: {checks}")))
    }
}

#[derive(Serialize)]
struct MapEvaluation {
    v0: f64,
    x_t: f64,
}

pub fn boundary_map_cmd(loaded: &Loaded, common: &Common, v0s: &[f64]) -> Result<(), CliError> {
    let path = common.out.join("boundary_map.json");
    match &loaded.problem {
        Problem::Sdof(p) => {
            let x0 = p.ic.x0;
            let check: ExceptionalCheck = is_exceptional(&p.sys, EXCEPTIONAL_TOL)?;
            let analytic = boundary_map_unchecked(&p.sys, &p.f, x0)?;
            let evaluations = v0s
                .iter()
                .map(|&v0| {
                    Ok(MapEvaluation {
                        v0,
                        x_t: boundary_value(&p.sys, &p.f, x0, v0, &MapMode::Analytic)?,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let scale = evaluations.iter().map(|e| e.x_t.abs()).fold(1.0, f64::max);
            let collinearity = evaluations
                .iter()
                .map(|e| (e.x_t - analytic.eval(e.v0)).abs() / scale)
                .fold(0.0, f64::max);
            let galerkin = if check.exceptional {
                None
            } else {
                Some(boundary_map(&p.sys, &p.f, x0, &MapMode::Galerkin(p.basis()?))?)
            };
            write_json(
                &path,
                &json!({
                    "x0": x0,
                    "alpha": analytic.alpha,
                    "beta": analytic.beta,
                    "invertible": !check.exceptional,
                    "exceptional": check,
                    "evaluations": evaluations,
                    "collinearity_residual": collinearity,
                    "galerkin": galerkin,
                }),
            )?;
            if check.exceptional {
                return Err(Error::ExceptionalHorizon {
                    t_bar: p.sys.t_bar(),
                    sine: check.sine,
                    suggestion: check.suggestion,
                    mode: None,
                }
                .into());
            }
            Ok(())
        }
        Problem::Mdof(p) => {
            let modal = modal_decompose(&p.sys)?;
            let f_modal = modal.modal_excitations(&p.f)?;
            let ic_modal = modal.modal_initial_conditions(&p.ic)?;
            let corr = mdof_boundary_correspondence(&modal, &f_modal, &ic_modal)?;
            write_json(&path, &corr)?;
            if let Some(&mode) = corr.exceptional_modes.first() {
                let check = is_exceptional(&modal.subproblems()[mode], EXCEPTIONAL_TOL)?;
                return Err(Error::ExceptionalHorizon {
                    t_bar: p.sys.t_bar(),
                    sine: check.sine,
                    suggestion: check.suggestion,
                    mode: Some(mode),
                }
                .into());
            }
            Ok(())
        }
    }
}

/// Parses `4,8,16` style lists.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| format!("cannot parse `{}`", p.trim())))
        .collect()
}
