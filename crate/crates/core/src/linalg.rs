//! Small dense-matrix helpers shared by the chain modules.

use nalgebra::DMatrix;

pub type Matrix = DMatrix<f64>;

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `aⁿ` by repeated squaring.
pub fn power(a: &Matrix, mut n: u64) -> Matrix {
    let mut result = Matrix::identity(a.nrows(), a.ncols());
    let mut base = a.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Scaling-and-squaring Padé exponential. Used where the argument is not a
/// generator (negative times), so uniformization does not apply.
pub fn expm(a: &Matrix) -> Matrix {
    if a.nrows() == 0 {
        return a.clone();
    }
    a.exp()
}

pub fn row_sums(a: &Matrix) -> Vec<f64> {
    a.row_iter().map(|r| r.sum()).collect()
}

pub fn column_sums(a: &Matrix) -> Vec<f64> {
    a.column_iter().map(|c| c.sum()).collect()
}
