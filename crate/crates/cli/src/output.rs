//! CSV and JSON writers.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Seventeen significant digits, enough to round-trip every `f64`.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io(dir))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| fmt(v))).map_err(csv_err)?;
    }
    w.flush().map_err(io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("diagnostics serialize");
    fs::write(path, text + "\n").map_err(io(path))
}

/// `trajectory.csv` -> `trajectory_dof1.csv`.
pub fn per_dof(dir: &Path, name: &str, dof: usize) -> PathBuf {
    let p = Path::new(name);
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
    let ext = p.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    dir.join(format!("{stem}_dof{}.{ext}", dof + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn dof_names() {
        assert_eq!(per_dof(Path::new("out"), "traj.csv", 0), Path::new("out/traj_dof1.csv"));
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_csv(&path, &["t", "x"], &[vec![0.0, 1.5]]).unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert_eq!(text, "t,x\n0.0000000000000000e0,1.5000000000000000e0\n");
    }
}
