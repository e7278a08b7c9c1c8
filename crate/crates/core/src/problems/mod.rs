//! Benchmark energy surfaces: two closed-form wells, a 2D quartic, a Morse
//! vacancy lattice and a P1 phase-field discretization.

mod analytic;
mod morse;
mod phase_field;

pub use analytic::{
    doublewell_curvature, doublewell_curvature_alt, doublewell_turning_points, AsymmetricWell1d,
    DoubleWell1d, Quartic2d,
};
pub use morse::{
    build_morse_vacancy, build_morse_vacancy_with, morse_pair, MorseConnectivityProvider,
    MorseVacancy,
};
pub use phase_field::{build_phase_field, structured_unit_square, PhaseField};
