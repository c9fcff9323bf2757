//! Run configuration files.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;
use toml::Spanned;
use weakdyn::{BasisFamily, BasisSet, Excitation, InitialConditions, MdofSystem, SdofSystem};

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: Spanned<SystemConfig>,
    pub excitation: Option<Spanned<ExcitationConfig>>,
    /// One excitation per DOF for MDOF systems.
    pub excitations: Option<Spanned<Vec<ExcitationConfig>>>,
    pub ic: Option<Spanned<IcConfig>>,
    pub basis: Option<Spanned<BasisConfig>>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemConfig {
    Sdof {
        c: f64,
        k: f64,
        t_bar: f64,
    },
    Mdof {
        m: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        k: Vec<Vec<f64>>,
        t_bar: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExcitationConfig {
    Zero,
    Constant {
        value: f64,
    },
    /// A single polynomial in `t`, lowest power first.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// Local polynomials in `t - mesh[i]` on each mesh interval.
    PolynomialSegments {
        mesh: Vec<f64>,
        segments: Vec<Vec<f64>>,
    },
    /// Piecewise-polynomial interpolant of `amplitude sin(omega t + phase)`.
    SineSampled {
        #[serde(default = "one")]
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        pieces: usize,
        #[serde(default = "three")]
        degree: usize,
    },
    /// Piecewise-linear through `(times, values)`.
    Samples {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn three() -> usize {
    3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Scalars {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcConfig {
    pub x0: Option<Scalars>,
    pub v0: Option<Scalars>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BasisConfig {
    Bernstein { degree: usize },
    DampedWave { modes: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    pub dir: Option<PathBuf>,
    #[serde(default = "default_trajectory")]
    pub trajectory: String,
    #[serde(default = "default_diagnostics")]
    pub diagnostics: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            grid_points: default_grid(),
            dir: None,
            trajectory: default_trajectory(),
            diagnostics: default_diagnostics(),
        }
    }
}

fn default_grid() -> usize {
    201
}

fn default_trajectory() -> String {
    "trajectory.csv".into()
}

fn default_diagnostics() -> String {
    "diagnostics.json".into()
}

/// A validated single-DOF problem.
#[derive(Debug, Clone)]
pub struct SdofProblem {
    pub sys: SdofSystem,
    pub f: Excitation,
    pub ic: InitialConditions,
    pub family: BasisFamily,
}

impl SdofProblem {
    pub fn basis(&self) -> weakdyn::Result<BasisSet> {
        BasisSet::from_family(self.sys.t_bar(), self.family.clone())
    }

    /// The configured family with its size replaced by `size`.
    pub fn family_of_size(&self, size: usize) -> BasisFamily {
        match self.family {
            BasisFamily::Bernstein { .. } => BasisFamily::Bernstein { degree: size },
            BasisFamily::DampedWave { c, .. } => BasisFamily::DampedWave { c, modes: size },
        }
    }
}

#[derive(Debug, Clone)]
pub struct MdofProblem {
    pub sys: MdofSystem,
    pub f: Vec<Excitation>,
    pub ic: Vec<InitialConditions>,
    pub family: BasisFamily,
}

#[derive(Debug, Clone)]
pub enum Problem {
    Sdof(SdofProblem),
    Mdof(MdofProblem),
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub problem: Problem,
    pub output: OutputConfig,
}

/// Reports errors as `path:line: [block] message`.
struct Locator<'a> {
    path: &'a Path,
    src: &'a str,
}

impl Locator<'_> {
    fn line(&self, offset: usize) -> usize {
        self.src[..offset.min(self.src.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, spanned: &Spanned<T>, block: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!(
            "{}:{}: [{block}] {msg}",
            self.path.display(),
            self.line(spanned.span().start)
        ))
    }
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(path, &src)
}

pub fn parse(path: &Path, src: &str) -> Result<Loaded, CliError> {
    let cfg: RunConfig = toml::from_str(src).map_err(|e| {
        let line = e.span().map(|s| format!(":{}", src[..s.start].matches('\n').count() + 1)).unwrap_or_default();
        CliError::Config(format!("{}{line}: {}", path.display(), e.message()))
    })?;
    let loc = Locator { path, src };
    if cfg.output.grid_points < 2 {
        return Err(CliError::Config(format!(
            "{}: [output] grid_points must be at least 2",
            path.display()
        )));
    }
    let problem = match cfg.system.get_ref() {
        SystemConfig::Sdof { c, k, t_bar } => {
            let sys = SdofSystem::new(*c, *k, *t_bar).map_err(|e| loc.err(&cfg.system, "system", e))?;
            sys.derived_params().map_err(|e| loc.err(&cfg.system, "system", e))?;
            if cfg.excitations.is_some() {
                return Err(loc.err(cfg.excitations.as_ref().unwrap(), "excitations", "only MDOF systems take a list; use [excitation]"));
            }
            let f = match &cfg.excitation {
                Some(e) => build_excitation(e.get_ref(), *t_bar).map_err(|m| loc.err(e, "excitation", m))?,
                None => Excitation::zero(*t_bar).map_err(|e| loc.err(&cfg.system, "system", e))?,
            };
            let ic = match &cfg.ic {
                Some(ic) => {
                    let x0 = scalar(&ic.get_ref().x0).map_err(|m| loc.err(ic, "ic", m))?;
                    let v0 = scalar(&ic.get_ref().v0).map_err(|m| loc.err(ic, "ic", m))?;
                    InitialConditions::new(x0, v0).map_err(|e| loc.err(ic, "ic", e))?
                }
                None => InitialConditions::zero(),
            };
            let family = build_family(&cfg.basis, *c);
            if let Some(b) = &cfg.basis {
                BasisSet::from_family(*t_bar, family.clone()).map_err(|e| loc.err(b, "basis", e))?;
            }
            Problem::Sdof(SdofProblem { sys, f, ic, family })
        }
        SystemConfig::Mdof { m, c, k, t_bar } => {
            let n = m.len();
            let mat = |rows: &Vec<Vec<f64>>, name: &str| -> Result<DMatrix<f64>, CliError> {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(loc.err(&cfg.system, "system", format!("`{name}` must be {n}x{n}")));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            };
            let sys = MdofSystem::new(mat(m, "m")?, mat(c, "c")?, mat(k, "k")?, *t_bar)
                .map_err(|e| loc.err(&cfg.system, "system", e))?;
            if cfg.excitation.is_some() {
                return Err(loc.err(cfg.excitation.as_ref().unwrap(), "excitation", "MDOF systems take [[excitations]], one per DOF"));
            }
            let f = match &cfg.excitations {
                Some(list) => {
                    if list.get_ref().len() != n {
                        return Err(loc.err(list, "excitations", format!("expected {n} entries, got {}", list.get_ref().len())));
                    }
                    list.get_ref()
                        .iter()
                        .map(|e| build_excitation(e, *t_bar).map_err(|m| loc.err(list, "excitations", m)))
                        .collect::<Result<Vec<_>, _>>()?
                }
                None => vec![Excitation::zero(*t_bar).map_err(|e| loc.err(&cfg.system, "system", e))?; n],
            };
            let ic = match &cfg.ic {
                Some(ic) => {
                    let x0 = vector(&ic.get_ref().x0, n).map_err(|m| loc.err(ic, "ic", m))?;
                    let v0 = vector(&ic.get_ref().v0, n).map_err(|m| loc.err(ic, "ic", m))?;
                    x0.iter()
                        .zip(&v0)
                        .map(|(&x, &v)| InitialConditions::new(x, v).map_err(|e| loc.err(ic, "ic", e)))
                        .collect::<Result<Vec<_>, _>>()?
                }
                None => vec![InitialConditions::zero(); n],
            };
            let family = build_family(&cfg.basis, 0.0);
            if let Some(b) = &cfg.basis {
                BasisSet::from_family(*t_bar, family.clone()).map_err(|e| loc.err(b, "basis", e))?;
            }
            Problem::Mdof(MdofProblem { sys, f, ic, family })
        }
    };
    Ok(Loaded {
        problem,
        output: cfg.output,
    })
}

fn build_family(basis: &Option<Spanned<BasisConfig>>, c: f64) -> BasisFamily {
    match basis.as_ref().map(|b| b.get_ref()) {
        None => BasisFamily::Bernstein { degree: 16 },
        Some(BasisConfig::Bernstein { degree }) => BasisFamily::Bernstein { degree: *degree },
        Some(BasisConfig::DampedWave { modes }) => BasisFamily::DampedWave { c, modes: *modes },
    }
}

fn build_excitation(cfg: &ExcitationConfig, t_bar: f64) -> Result<Excitation, String> {
    let out = match cfg {
        ExcitationConfig::Zero => Excitation::zero(t_bar),
        ExcitationConfig::Constant { value } => Excitation::constant(t_bar, *value),
        ExcitationConfig::Polynomial { coefficients } => Excitation::polynomial(t_bar, coefficients.clone()),
        ExcitationConfig::PolynomialSegments { mesh, segments } => {
            if mesh.last().is_some_and(|&t| (t - t_bar).abs() > 1e-12 * t_bar) {
                return Err(format!("mesh must end at t_bar = {t_bar}"));
            }
            Excitation::new(mesh.clone(), segments.clone())
        }
        ExcitationConfig::SineSampled {
            amplitude,
            omega,
            phase,
            pieces,
            degree,
        } => {
            let (a, w, p) = (*amplitude, *omega, *phase);
            Excitation::interpolate(move |t| a * (w * t + p).sin(), t_bar, *pieces, *degree)
        }
        ExcitationConfig::Samples { times, values } => {
            if times.last().is_some_and(|&t| (t - t_bar).abs() > 1e-12 * t_bar) {
                return Err(format!("times must end at t_bar = {t_bar}"));
            }
            Excitation::from_samples(times, values)
        }
    };
    out.map_err(|e| e.to_string())
}

fn scalar(v: &Option<Scalars>) -> Result<f64, String> {
    match v {
        None => Ok(0.0),
        Some(Scalars::One(x)) => Ok(*x),
        Some(Scalars::Many(_)) => Err("expected a number for a single-DOF system".into()),
    }
}

fn vector(v: &Option<Scalars>, n: usize) -> Result<Vec<f64>, String> {
    match v {
        None => Ok(vec![0.0; n]),
        Some(Scalars::Many(xs)) if xs.len() == n => Ok(xs.clone()),
        Some(Scalars::Many(xs)) => Err(format!("expected {n} values, got {}", xs.len())),
        Some(Scalars::One(_)) => Err(format!("expected a list of {n} values")),
    }
}
