//! Benchmark fixtures shared by the criterion targets.

use dynoprior_core::Matrix;

/// `rows × cols` matrix with smooth, deterministic entries.
pub fn fixture(rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |i, j| ((i * cols + j) as f64 * 0.013).sin() + 0.1 * (j as f64 * 0.7).cos())
}

/// Evenly spaced points on `[-1, 1]`, one per column.
pub fn grid(points: usize) -> Matrix {
    Matrix::from_fn(1, points, |_, j| -1.0 + 2.0 * j as f64 / (points.max(2) - 1) as f64)
}
