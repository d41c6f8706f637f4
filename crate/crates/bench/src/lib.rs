//! Shared fixtures for the kernel benchmarks.

use bracket_core::{Generator, StochasticMatrix};

/// The three-state weather chain (rain, nice, snow).
pub fn oz() -> StochasticMatrix {
    StochasticMatrix::new(
        ["R", "N", "S"],
        vec![
            vec![0.5, 0.25, 0.25],
            vec![0.5, 0.0, 0.5],
            vec![0.25, 0.25, 0.5],
        ],
    )
    .expect("valid chain")
}

/// Birth-death generator on `0..=k` with constant rates.
pub fn birth_death(k: usize, birth: f64, death: f64) -> Generator {
    Generator::birth_death(k, |_| birth, |n| if n == 0 { 0.0 } else { death }).expect("valid generator")
}

pub const EXPRESSIONS: &[&str] = &[
    "P(even|Omega)",
    "P(low & even|high + two)",
    "P(~wet|Omega_3)",
    "E[X*Y] | doubles",
    "Var[2*X + 1]",
    "P(Omega|X|Y|Omega)",
];
