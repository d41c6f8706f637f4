/// Shared numeric tolerances.
///
/// `algebraic` bounds identities that hold exactly in exact arithmetic and
/// involve a handful of floating-point operations (normalization, Bayes,
/// bracket identities). `summed` bounds identities evaluated through longer
/// sums or products (identity insertion, Chapman–Kolmogorov, matrix powers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub algebraic: f64,
    pub summed: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        algebraic: 1e-12,
        summed: 1e-10,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
