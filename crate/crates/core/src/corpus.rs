//! A fixed set of reference problems used by tests, benches and the CLI.

use crate::error::Result;
use crate::model::{Excitation, InitialConditions, SdofSystem};

/// One reference problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusCase {
    pub name: String,
    pub sys: SdofSystem,
    pub f: Excitation,
    pub ic: InitialConditions,
}

/// Forcing shapes in the corpus.
pub const FORCINGS: [&str; 4] = ["zero", "constant", "polynomial", "piecewise-linear"];

/// Damping values in the corpus.
pub const DAMPINGS: [f64; 3] = [0.0, 0.2, 1.0];

pub fn forcing(kind: &str, t_bar: f64) -> Result<Excitation> {
    match kind {
        "zero" => Excitation::zero(t_bar),
        "constant" => Excitation::constant(t_bar, 1.5),
        "polynomial" => Excitation::polynomial(t_bar, vec![0.5, -0.4, 0.08, -0.004]),
        _ => {
            let times: Vec<f64> = (0..=6).map(|i| t_bar * i as f64 / 6.0).collect();
            Excitation::from_samples(&times, &[0.0, 1.0, -0.5, 0.8, 0.2, -1.0, 0.3])
        }
    }
}

/// Twelve cases: every damping value against every forcing shape, on
/// non-exceptional horizons.
pub fn standard_corpus() -> Result<Vec<CorpusCase>> {
    let mut out = Vec::new();
    for &c in &DAMPINGS {
        let (k, t_bar) = if c < 1.0 { (1.0, 6.0) } else { (4.0, 5.0) };
        let sys = SdofSystem::new(c, k, t_bar)?;
        for kind in FORCINGS {
            let ic = if kind == "zero" {
                InitialConditions::new(1.0, 0.0)?
            } else {
                InitialConditions::new(0.5, -0.3)?
            };
            out.push(CorpusCase {
                name: format!("c={c},k={k},T={t_bar},f={kind}"),
                sys,
                f: forcing(kind, t_bar)?,
                ic,
            });
        }
    }
    Ok(out)
}
