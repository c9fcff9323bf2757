//! Shared fixtures for the criterion benches.

use nalgebra::DMatrix;
use weakdyn::{Excitation, InitialConditions, MdofSystem, SdofSystem};

/// Lightly damped oscillator driven by a 64-piece cubic fit of `sin 2t`.
pub fn forced_sine() -> (SdofSystem, Excitation, InitialConditions) {
    let sys = SdofSystem::new(0.2, 1.0, 8.0).unwrap();
    let f = Excitation::interpolate(|t| (2.0 * t).sin(), 8.0, 64, 3).unwrap();
    (sys, f, InitialConditions::new(0.5, -0.3).unwrap())
}

/// Spring chain of `n` unit masses with Rayleigh damping.
pub fn chain(n: usize, t_bar: f64) -> MdofSystem {
    let k = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    });
    let m = DMatrix::identity(n, n);
    let c = &m * 0.1 + &k * 0.05;
    MdofSystem::new(m, c, k, t_bar).unwrap()
}
