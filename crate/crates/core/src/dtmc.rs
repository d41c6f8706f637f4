//! Discrete-time homogeneous Markov chains.
//!
//! A chain state is a probability vector. Row vectors are acted on from the
//! left, `u⁽ⁿ⁾ = u⁽⁰⁾ Pⁿ`; column vectors from the right by the transpose,
//! `v⁽ⁿ⁾ = (Pᵀ)ⁿ v⁽⁰⁾`. Both orientations share one row-vector kernel; the
//! column form is its transpose.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, Matrix};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Row,
    Column,
}

impl Orientation {
    fn name(self) -> &'static str {
        match self {
            Orientation::Row => "row",
            Orientation::Column => "column",
        }
    }
}

/// Nonnegative weights summing to one, tagged with state labels and an
/// orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    states: Vec<String>,
    weights: Vec<f64>,
    orientation: Orientation,
}

impl ProbVector {
    pub fn new(states: Vec<String>, weights: Vec<f64>, orientation: Orientation) -> Result<Self> {
        if states.len() != weights.len() {
            return Err(Error::NotProbVector(format!(
                "{} states but {} weights",
                states.len(),
                weights.len()
            )));
        }
        if let Some((s, w)) = states
            .iter()
            .zip(&weights)
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::NotProbVector(format!("weight {w} on state `{s}`")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Tolerances::DEFAULT.algebraic {
            return Err(Error::NotProbVector(format!("weights sum to {sum}")));
        }
        Ok(ProbVector {
            states,
            weights,
            orientation,
        })
    }

    pub fn row<S: Into<String>>(states: impl IntoIterator<Item = S>, weights: Vec<f64>) -> Result<Self> {
        Self::new(states.into_iter().map(Into::into).collect(), weights, Orientation::Row)
    }

    pub fn column<S: Into<String>>(
        states: impl IntoIterator<Item = S>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            states.into_iter().map(Into::into).collect(),
            weights,
            Orientation::Column,
        )
    }

    /// All mass on `state`.
    pub fn one_hot(states: &[String], state: &str, orientation: Orientation) -> Result<Self> {
        let k = states
            .iter()
            .position(|s| s == state)
            .ok_or_else(|| Error::UnknownLabel(state.to_string()))?;
        let mut w = vec![0.0; states.len()];
        w[k] = 1.0;
        Self::new(states.to_vec(), w, orientation)
    }

    pub fn uniform(states: &[String], orientation: Orientation) -> Result<Self> {
        let n = states.len();
        Self::new(states.to_vec(), vec![1.0 / n as f64; n], orientation)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn get(&self, state: &str) -> Option<f64> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| self.weights[i])
    }

    pub fn transpose(&self) -> ProbVector {
        ProbVector {
            orientation: match self.orientation {
                Orientation::Row => Orientation::Column,
                Orientation::Column => Orientation::Row,
            },
            ..self.clone()
        }
    }

    /// `Σ wᵢ²`, the overlap of the vector with itself. At most one, with
    /// equality only for a point mass; it is not a probability.
    pub fn self_overlap(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    pub(crate) fn expect(&self, orientation: Orientation) -> Result<()> {
        if self.orientation != orientation {
            return Err(Error::Orientation {
                expected: orientation.name(),
                found: self.orientation.name(),
            });
        }
        Ok(())
    }

    pub(crate) fn align(&self, states: &[String]) -> Result<()> {
        if self.states != states {
            return Err(Error::Alignment {
                expected: states.to_vec(),
                found: self.states.clone(),
            });
        }
        Ok(())
    }

    /// Builds a vector from raw weights produced by an evolution kernel:
    /// tiny negative rounding noise is clamped and the sum renormalized.
    pub(crate) fn from_evolved(
        states: Vec<String>,
        mut weights: Vec<f64>,
        orientation: Orientation,
    ) -> Result<Self> {
        let tol = Tolerances::DEFAULT.algebraic;
        let worst = weights.iter().copied().fold(0.0, f64::min);
        if worst < -tol {
            return Err(Error::SimplexViolation { violation: -worst });
        }
        let sum: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::SimplexViolation {
                violation: (sum - 1.0).abs(),
            });
        }
        for w in &mut weights {
            *w = w.max(0.0) / sum;
        }
        Self::new(states, weights, orientation)
    }
}

impl fmt::Display for ProbVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (open, close) = match self.orientation {
            Orientation::Row => ("(", ")"),
            Orientation::Column => ("[", "]ᵀ"),
        };
        write!(f, "{open}")?;
        for (i, (s, w)) in self.states.iter().zip(&self.weights).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s}: {w}")?;
        }
        write!(f, "{close}")
    }
}

/// A row-stochastic matrix; entry `(i, j)` is the probability of moving from
/// state `i` to state `j` in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    states: Vec<String>,
    p: Matrix,
}

impl StochasticMatrix {
    pub fn new<S: Into<String>>(states: impl IntoIterator<Item = S>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        let r = states.len();
        if rows.len() != r || rows.iter().any(|row| row.len() != r) {
            return Err(Error::domain(format!("transition matrix must be {r}×{r}")));
        }
        let p = DMatrix::from_fn(r, r, |i, j| rows[i][j]);
        Self::from_matrix(states, p)
    }

    pub fn from_matrix(states: Vec<String>, p: Matrix) -> Result<Self> {
        Self::checked(states, p, Tolerances::DEFAULT.algebraic)
    }

    fn checked(states: Vec<String>, p: Matrix, tol: f64) -> Result<Self> {
        let r = states.len();
        if p.nrows() != r || p.ncols() != r {
            return Err(Error::domain(format!("transition matrix must be {r}×{r}")));
        }
        if r == 0 {
            return Err(Error::domain("a chain needs at least one state"));
        }
        check_distinct(&states)?;
        for (i, row) in p.row_iter().enumerate() {
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::NotStochastic {
                    row: states[i].clone(),
                    reason: format!("entry {v}"),
                });
            }
            let sum = row.sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::NotStochastic {
                    row: states[i].clone(),
                    reason: format!("row sums to {sum}"),
                });
            }
        }
        Ok(StochasticMatrix { states, p })
    }

    pub fn identity(states: Vec<String>) -> Self {
        let r = states.len();
        StochasticMatrix {
            states,
            p: Matrix::identity(r, r),
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.p
    }

    pub fn entry(&self, from: usize, to: usize) -> f64 {
        self.p[(from, to)]
    }

    /// `Pⁿ` by repeated squaring.
    pub fn matrix_power(&self, n: u64) -> StochasticMatrix {
        let pn = linalg::power(&self.p, n);
        Self::checked(self.states.clone(), pn, Tolerances::DEFAULT.summed)
            .expect("powers of a stochastic matrix stay stochastic")
    }

    fn step_row(&self, u: &[f64]) -> Vec<f64> {
        let r = self.len();
        let mut out = vec![0.0; r];
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += ui * self.p[(i, j)];
            }
        }
        out
    }

    fn evolve_weights(&self, u0: &[f64], n: u64) -> Vec<f64> {
        if n <= 4 * self.len() as u64 + 16 {
            let mut u = u0.to_vec();
            for _ in 0..n {
                u = self.step_row(&u);
            }
            u
        } else {
            let pn = linalg::power(&self.p, n);
            let u = DVector::from_column_slice(u0).transpose() * pn;
            u.iter().copied().collect()
        }
    }

    /// `u⁽ⁿ⁾ = u⁽⁰⁾ Pⁿ` for a row vector.
    pub fn evolve_left(&self, u0: &ProbVector, n: u64) -> Result<ProbVector> {
        u0.expect(Orientation::Row)?;
        u0.align(&self.states)?;
        ProbVector::from_evolved(
            self.states.clone(),
            self.evolve_weights(u0.weights(), n),
            Orientation::Row,
        )
    }

    /// `v⁽ⁿ⁾ = (Pᵀ)ⁿ v⁽⁰⁾` for a column vector.
    pub fn evolve_right(&self, v0: &ProbVector, n: u64) -> Result<ProbVector> {
        v0.expect(Orientation::Column)?;
        Ok(self.evolve_left(&v0.transpose(), n)?.transpose())
    }

    /// `max |P^{m+n} − P^m P^n|` over all entries.
    pub fn chapman_kolmogorov(&self, m: u64, n: u64) -> f64 {
        let lhs = linalg::power(&self.p, m + n);
        let rhs = linalg::power(&self.p, m) * linalg::power(&self.p, n);
        linalg::max_abs_diff(&lhs, &rhs)
    }

    /// The stationary row vector `π = π P`.
    ///
    /// Uniqueness is checked first by the rank of the linear system
    /// `π (P − I) = 0, Σ π = 1`. Power iteration then runs from a fixed
    /// non-uniform start until successive iterates differ by less than
    /// `1e-13` in L1 or the budget of `10⁵` steps is spent; periodic chains
    /// fall back to the direct solve.
    pub fn stationary(&self) -> Result<Stationary> {
        let r = self.len();
        let mut a = self.p.transpose() - Matrix::identity(r, r);
        for j in 0..r {
            a[(r - 1, j)] = 1.0;
        }
        let sv = a.clone().singular_values();
        let (min_sv, max_sv) = sv
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if min_sv <= 1e-10 * max_sv {
            return Err(Error::NonUnique);
        }

        let norm = (r * (r + 1) / 2) as f64;
        let mut u: Vec<f64> = (1..=r).map(|k| k as f64 / norm).collect();
        let mut last_step = f64::INFINITY;
        for it in 1..=STATIONARY_MAX_ITER {
            let next = self.step_row(&u);
            last_step = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).sum();
            u = next;
            if last_step < 1e-13 {
                let v = ProbVector::from_evolved(self.states.clone(), u.clone(), Orientation::Row)?;
                if self.stationary_residual(&v) <= Tolerances::DEFAULT.summed {
                    return Ok(Stationary {
                        vector: v,
                        method: StationaryMethod::PowerIteration,
                        iterations: it,
                    });
                }
                break;
            }
        }

        let mut b = DVector::zeros(r);
        b[r - 1] = 1.0;
        let solved = a.lu().solve(&b);
        let fail = |residual: f64| Error::Convergence {
            iterations: STATIONARY_MAX_ITER,
            residual,
            last: u.clone(),
        };
        let Some(pi) = solved else {
            return Err(fail(last_step));
        };
        let weights: Vec<f64> = pi.iter().copied().collect();
        let v = ProbVector::from_evolved(self.states.clone(), weights, Orientation::Row)
            .map_err(|_| fail(last_step))?;
        let residual = self.stationary_residual(&v);
        if residual > Tolerances::DEFAULT.summed {
            return Err(fail(residual));
        }
        Ok(Stationary {
            vector: v,
            method: StationaryMethod::LinearSolve,
            iterations: STATIONARY_MAX_ITER,
        })
    }

    /// `max |π P − π|`.
    pub fn stationary_residual(&self, pi: &ProbVector) -> f64 {
        self.step_row(pi.weights())
            .iter()
            .zip(pi.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

const STATIONARY_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryMethod {
    PowerIteration,
    LinearSolve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub vector: ProbVector,
    pub method: StationaryMethod,
    pub iterations: usize,
}

pub(crate) fn check_distinct(states: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for s in states {
        if !seen.insert(s) {
            return Err(Error::DuplicateLabel(s.clone()));
        }
    }
    Ok(())
}
