//! Shared fixtures for the criterion benches.

use bscatter_core::bound_lab::{GaussianSum, LineGrid};
use bscatter_core::{split_potential, BallGrid, Potential, PotentialSplit};

/// Ball grid and potential split at a bench-sized resolution.
pub fn ball_fixture(resolution: usize) -> (BallGrid, PotentialSplit) {
    let grid = BallGrid::new(6.0, resolution).expect("grid");
    let split = split_potential(&Potential::gaussian_well(0.5), &grid).expect("split");
    (grid, split)
}

/// Quartic line grid with one seeded input profile.
pub fn hilbert_fixture(cells: usize, seed: u64) -> (LineGrid, Vec<f64>) {
    let grid = LineGrid::quartic(14.0, cells);
    let u = GaussianSum::random(seed).profile(&grid);
    (grid, u)
}
