//! Continuous-time homogeneous Markov chains.
//!
//! `q_ij` is the rate of jumping from state `i` to state `j`, so rows of a
//! generator sum to zero and probability columns evolve under `Qᵀ`.

use nalgebra::DVector;

use crate::dtmc::{check_distinct, Orientation, ProbVector, StochasticMatrix};
use crate::linalg::{self, Matrix};
use crate::observables::{parse_numeral, Observable};
use crate::{Error, Result, Tolerances};

/// Poisson tail mass at which the uniformization series is cut.
pub const UNIFORMIZATION_TAIL: f64 = 1e-14;

/// A generator matrix `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    states: Vec<String>,
    q: Matrix,
}

/// Finite-difference residuals of the Kolmogorov equations at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmogorovResiduals {
    /// `max |P′(t) − P(t) Q|`
    pub forward: f64,
    /// `max |P′(t) − Q P(t)|`
    pub backward: f64,
    /// `max |P(t) Q − Q P(t)|`
    pub commutator: f64,
}

impl Generator {
    pub fn new<S: Into<String>>(states: impl IntoIterator<Item = S>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        let r = states.len();
        if rows.len() != r || rows.iter().any(|row| row.len() != r) {
            return Err(Error::domain(format!("generator must be {r}×{r}")));
        }
        Self::from_matrix(states, Matrix::from_fn(r, r, |i, j| rows[i][j]))
    }

    pub fn from_matrix(states: Vec<String>, q: Matrix) -> Result<Self> {
        let r = states.len();
        if r == 0 {
            return Err(Error::domain("a chain needs at least one state"));
        }
        if q.nrows() != r || q.ncols() != r {
            return Err(Error::domain(format!("generator must be {r}×{r}")));
        }
        check_distinct(&states)?;
        for (i, row) in q.row_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() || (i != j && *v < 0.0) {
                    return Err(Error::NotGenerator {
                        row: states[i].clone(),
                        reason: format!("entry {v} in column {}", states[j]),
                    });
                }
            }
            let scale = row.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let sum = row.sum();
            if sum.abs() > Tolerances::DEFAULT.algebraic * scale {
                return Err(Error::NotGenerator {
                    row: states[i].clone(),
                    reason: format!("row sums to {sum}"),
                });
            }
        }
        Ok(Generator { states, q })
    }

    /// Builds `Q` from off-diagonal rates; the diagonal is filled in.
    pub fn from_off_diagonal(states: Vec<String>, mut q: Matrix) -> Result<Self> {
        for i in 0..q.nrows().min(q.ncols()) {
            q[(i, i)] = 0.0;
            let out: f64 = q.row(i).sum();
            q[(i, i)] = -out;
        }
        Self::from_matrix(states, q)
    }

    pub fn zero(states: Vec<String>) -> Result<Self> {
        let r = states.len();
        Self::from_matrix(states, Matrix::zeros(r, r))
    }

    /// Births at rate `lambda` on `{0, …, k}`; state `k` is absorbing.
    pub fn pure_birth(lambda: f64, k: usize) -> Result<Self> {
        Self::birth_death(k, |_| lambda, |_| 0.0)
    }

    /// Birth–death chain on `{0, …, k}` with `i → i+1` at `birth(i)` and
    /// `i → i−1` at `death(i)`.
    pub fn birth_death(k: usize, birth: impl Fn(usize) -> f64, death: impl Fn(usize) -> f64) -> Result<Self> {
        let r = k + 1;
        let mut q = Matrix::zeros(r, r);
        for i in 0..r {
            if i < k {
                q[(i, i + 1)] = birth(i);
            }
            if i > 0 {
                q[(i, i - 1)] = death(i);
            }
        }
        if q.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("birth and death rates must be finite and nonnegative"));
        }
        Self::from_off_diagonal((0..r).map(|i| i.to_string()).collect(), q)
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
        &self.q
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.q[(from, to)]
    }

    /// The uniformization rate `Λ = 1.05·max|q_ii| + ε`.
    pub fn uniformization_rate(&self) -> f64 {
        let max = (0..self.len()).map(|i| self.q[(i, i)].abs()).fold(0.0, f64::max);
        1.05 * max + f64::MIN_POSITIVE
    }

    /// `P(t) = exp(Qt)` by uniformization.
    pub fn transition_matrix(&self, t: f64) -> Result<StochasticMatrix> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("time must be finite and nonnegative, got {t}")));
        }
        Ok(StochasticMatrix::from_matrix(self.states.clone(), self.uniformized(t))
            .expect("uniformization yields a stochastic matrix"))
    }

    fn uniformized(&self, t: f64) -> Matrix {
        let r = self.len();
        let lambda = self.uniformization_rate();
        let x = lambda * t;
        if t == 0.0 || x < f64::MIN_POSITIVE * 1e10 {
            return Matrix::identity(r, r);
        }
        // Keep Λτ ≤ 1 per step so e^{−Λτ} stays representable and the series
        // is short, then square back up.
        let mut squarings = 0u32;
        let mut tau = t;
        while lambda * tau > 1.0 {
            tau /= 2.0;
            squarings += 1;
        }
        let m = Matrix::identity(r, r) + &self.q / lambda;
        let x = lambda * tau;
        let mut weight = (-x).exp();
        let mut cumulative = weight;
        let mut power = Matrix::identity(r, r);
        let mut p = &power * weight;
        let mut k = 0u32;
        while 1.0 - cumulative >= UNIFORMIZATION_TAIL && k < 200 {
            k += 1;
            power = &power * &m;
            weight *= x / k as f64;
            cumulative += weight;
            p += &power * weight;
        }
        normalize_rows(&mut p);
        for _ in 0..squarings {
            p = &p * &p;
            normalize_rows(&mut p);
        }
        p
    }

    /// Central-difference check of `P′ = PQ` and `P′ = QP`.
    pub fn kolmogorov_residuals(&self, t: f64) -> Result<KolmogorovResiduals> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("time must be positive, got {t}")));
        }
        let h = (1e-4 * t.max(1.0)).min(t);
        let ahead = self.uniformized(t + h);
        let behind = self.uniformized(t - h);
        let derivative = (ahead - behind) / (2.0 * h);
        let p = self.uniformized(t);
        let pq = &p * &self.q;
        let qp = &self.q * &p;
        Ok(KolmogorovResiduals {
            forward: linalg::max_abs_diff(&derivative, &pq),
            backward: linalg::max_abs_diff(&derivative, &qp),
            commutator: linalg::max_abs_diff(&pq, &qp),
        })
    }

    /// `exp(Qᵀt) p0` for a column probability vector.
    pub fn evolve_density(&self, p0: &ProbVector, t: f64) -> Result<ProbVector> {
        p0.expect(Orientation::Column)?;
        p0.align(&self.states)?;
        let p = self.transition_matrix(t)?;
        let v = DVector::from_column_slice(p0.weights());
        let out = p.matrix().tr_mul(&v);
        ProbVector::from_evolved(self.states.clone(), out.iter().copied().collect(), Orientation::Column)
    }

    /// `1ᵀ · U⁻¹ D_X U · p0` with `U = exp(Qᵀt)` and `U⁻¹ = exp(−Qᵀt)`.
    pub fn heisenberg_expectation(&self, x: &Observable, t: f64, p0: &ProbVector) -> Result<f64> {
        p0.expect(Orientation::Column)?;
        p0.align(&self.states)?;
        let values = x.resolve_labels(&self.states)?;
        let (u, u_inv) = self.propagator_pair(t)?;
        let d = Matrix::from_diagonal(&DVector::from_vec(values));
        let xt = &u_inv * d * &u;
        let v = DVector::from_column_slice(p0.weights());
        Ok((xt * v).sum())
    }

    /// `(exp(Qᵀt), exp(−Qᵀt))`.
    pub fn propagator_pair(&self, t: f64) -> Result<(Matrix, Matrix)> {
        let u = self.transition_matrix(t)?.matrix().transpose();
        let u_inv = linalg::expm(&(self.q.transpose() * -t));
        Ok((u, u_inv))
    }

    /// Stationary row distribution, shared with the uniformized jump chain
    /// `I + Q/Λ`.
    pub fn stationary(&self) -> Result<ProbVector> {
        let lambda = self.uniformization_rate();
        let m = Matrix::identity(self.len(), self.len()) + &self.q / lambda;
        let mut m = m.map(|v| v.max(0.0));
        normalize_rows(&mut m);
        let chain = StochasticMatrix::from_matrix(self.states.clone(), m)?;
        Ok(chain.stationary()?.vector)
    }
}

fn normalize_rows(p: &mut Matrix) {
    for mut row in p.row_iter_mut() {
        row.iter_mut().for_each(|v| *v = v.max(0.0));
        let s = row.sum();
        if s > 0.0 {
            row /= s;
        }
    }
}

/// `⟨s|X̂|ψ⟩ = Σ_n X(n) p_n`.
pub fn doi_expectation(x: &Observable, p: &ProbVector) -> Result<f64> {
    p.expect(Orientation::Column)?;
    let values = x.resolve_labels(p.states())?;
    Ok(values.iter().zip(p.weights()).map(|(a, b)| a * b).sum())
}

/// `Σ_m (1/m!) ⟨m| X̂ Σ_n p_n |n⟩` under the inner product `⟨m|n⟩ = n! δ_mn`.
///
/// States must be nonnegative-integer occupation numbers.
pub fn peliti_expectation(x: &Observable, p: &ProbVector) -> Result<f64> {
    p.expect(Orientation::Column)?;
    let values = x.resolve_labels(p.states())?;
    let mut total = 0.0;
    for ((label, xn), pn) in p.states().iter().zip(values).zip(p.weights()) {
        let n = parse_numeral(label)?;
        if n < 0.0 || n.fract() != 0.0 {
            return Err(Error::NonNumericLabel(label.clone()));
        }
        let n = n as u64;
        // ⟨n|n⟩ = n! against the standard bra's weight 1/n!, combined in log form.
        let (ln_overlap, ln_weight) = (ln_factorial(n), -ln_factorial(n));
        total += xn * pn * (ln_overlap + ln_weight).exp();
    }
    Ok(total)
}

fn ln_factorial(n: u64) -> f64 {
    if n <= 20 {
        factorial(n).ln()
    } else {
        statrs::function::factorial::ln_factorial(n)
    }
}

fn factorial(n: u64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Transition rates in gain form: `w[(n, n′)]` is the rate of gain into `n`
/// from `n′`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainLossRates {
    states: Vec<String>,
    w: Matrix,
}

impl GainLossRates {
    pub fn new(states: Vec<String>, w: Matrix) -> Result<Self> {
        let r = states.len();
        if r == 0 || w.nrows() != r || w.ncols() != r {
            return Err(Error::domain(format!("rate table must be {r}×{r} with r > 0")));
        }
        check_distinct(&states)?;
        for i in 0..r {
            for j in 0..r {
                let v = w[(i, j)];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::domain(format!("rate into {} from {} is {v}", states[i], states[j])));
                }
            }
            if w[(i, i)] != 0.0 {
                return Err(Error::domain(format!("self-rate of {} must be 0", states[i])));
            }
        }
        Ok(GainLossRates { states, w })
    }

    /// Collects `(from, to, rate)` triples; repeated pairs add up.
    pub fn from_transitions<'a>(
        states: Vec<String>,
        transitions: impl IntoIterator<Item = (&'a str, &'a str, f64)>,
    ) -> Result<Self> {
        let r = states.len();
        let mut w = Matrix::zeros(r, r);
        let index = |s: &str| {
            states
                .iter()
                .position(|x| x == s)
                .ok_or_else(|| Error::UnknownLabel(s.to_string()))
        };
        for (from, to, rate) in transitions {
            let (j, i) = (index(from)?, index(to)?);
            if !(rate >= 0.0) || !rate.is_finite() {
                return Err(Error::domain(format!("rate {from} → {to} is {rate}")));
            }
            if i == j {
                return Err(Error::domain(format!("self-rate of {from} must be 0")));
            }
            w[(i, j)] += rate;
        }
        Self::new(states, w)
    }

    /// Reads the rates back off a generator: `W_{nn′} = q_{n′n}`.
    pub fn from_generator(g: &Generator) -> Self {
        let mut w = g.q.transpose();
        w.fill_diagonal(0.0);
        GainLossRates {
            states: g.states.clone(),
            w,
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    /// `W_{nn′}`.
    pub fn gain(&self, n: usize, from: usize) -> f64 {
        self.w[(n, from)]
    }

    /// `v_n = Σ_{n′} W_{n′n}`, the total rate of leaving `n`.
    pub fn loss_rate(&self, n: usize) -> f64 {
        self.w.column(n).sum()
    }

    /// `L_{nn′} = W_{nn′} − v_n δ_{nn′}`; equal to `Qᵀ`.
    pub fn master_operator(&self) -> Matrix {
        let mut l = self.w.clone();
        for n in 0..self.states.len() {
            l[(n, n)] -= self.loss_rate(n);
        }
        l
    }

    pub fn generator(&self) -> Generator {
        generator_from_rates(self)
    }
}

/// `q_{n′n} = W_{nn′}` off the diagonal and `q_{nn} = −v_n`.
pub fn generator_from_rates(g: &GainLossRates) -> Generator {
    Generator::from_off_diagonal(g.states.clone(), g.w.transpose())
        .expect("nonnegative rates always form a generator")
}

/// A rate density `w(x|x′)` sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridKernel {
    grid: Vec<f64>,
    dx: f64,
    /// `w[(i, j)] = w(x_i | x_j)`
    w: Matrix,
}

impl GridKernel {
    pub fn new(grid: Vec<f64>, dx: f64, w: Matrix) -> Result<Self> {
        let r = grid.len();
        if r == 0 || w.nrows() != r || w.ncols() != r {
            return Err(Error::domain(format!("kernel must be {r}×{r} with r > 0")));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::domain(format!("grid spacing must be positive, got {dx}")));
        }
        for pair in grid.windows(2) {
            let step = pair[1] - pair[0];
            if (step - dx).abs() > 1e-9 * dx.max(pair[1].abs()) {
                return Err(Error::domain(format!("grid is not uniform with spacing {dx}")));
            }
        }
        if let Some(v) = w.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain(format!("rate density {v} on grid")));
        }
        Ok(GridKernel { grid, dx, w })
    }

    /// Samples `w(x, x′)` on `n` points `lo, lo + dx, …`.
    pub fn from_fn(lo: f64, dx: f64, n: usize, w: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let grid: Vec<f64> = (0..n).map(|i| lo + i as f64 * dx).collect();
        let m = Matrix::from_fn(n, n, |i, j| w(grid[i], grid[j]));
        Self::new(grid, dx, m)
    }

    /// Symmetric nearest-neighbour hopping at rate density `gamma` on a ring.
    pub fn ring(n: usize, dx: f64, gamma: f64) -> Result<Self> {
        Self::from_fn(0.0, dx, n, |x, y| {
            let i = (x / dx).round() as i64;
            let j = (y / dx).round() as i64;
            let d = (i - j).rem_euclid(n as i64);
            if n > 1 && (d == 1 || d == n as i64 - 1) {
                gamma
            } else {
                0.0
            }
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// `L(x_i, x_j) = w(x_i|x_j) Δx − δ_ij v(x_i)`.
    pub fn master_matrix(&self) -> Matrix {
        let r = self.grid.len();
        let mut l = &self.w * self.dx;
        for i in 0..r {
            let v: f64 = self.w.column(i).sum() * self.dx;
            l[(i, i)] -= v;
        }
        l
    }

    /// The generator on cell masses `P(x_i) Δx`: the rate `j → i` is
    /// `w(x_i|x_j) Δx`.
    pub fn mass_generator(&self) -> Generator {
        let states = (0..self.grid.len()).map(|i| format!("x{i}")).collect();
        Generator::from_off_diagonal(states, self.w.transpose() * self.dx)
            .expect("nonnegative rates always form a generator")
    }
}

/// Evolves density samples under `∂p/∂t = L p`.
pub fn grid_master_evolve(k: &GridKernel, p0: &[f64], t: f64) -> Result<Vec<f64>> {
    if p0.len() != k.grid.len() {
        return Err(Error::domain(format!("expected {} density samples, got {}", k.grid.len(), p0.len())));
    }
    if let Some(v) = p0.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::domain(format!("density sample {v}")));
    }
    let mass: f64 = p0.iter().sum::<f64>() * k.dx;
    if (mass - 1.0).abs() > Tolerances::DEFAULT.summed {
        return Err(Error::domain(format!("density integrates to {mass}, not 1")));
    }
    let g = k.mass_generator();
    let masses: Vec<f64> = p0.iter().map(|v| v * k.dx / mass).collect();
    let p = ProbVector::new(g.states().to_vec(), masses, Orientation::Column)?;
    let out = g.evolve_density(&p, t)?;
    Ok(out.weights().iter().map(|m| m / k.dx).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_core::{RngCore, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn two_state(a: f64, b: f64) -> Generator {
        Generator::new(["0", "1"], vec![vec![-a, a], vec![b, -b]]).unwrap()
    }

    fn p01(a: f64, b: f64, t: f64) -> f64 {
        a / (a + b) * (1.0 - (-(a + b) * t).exp())
    }

    fn taylor(q: &Matrix, t: f64) -> Matrix {
        let r = q.nrows();
        let qt = q * t;
        let mut term = Matrix::identity(r, r);
        let mut sum = term.clone();
        for k in 1..80 {
            term = &term * &qt / k as f64;
            sum += &term;
        }
        sum
    }

    fn uniform01(rng: &mut Xoshiro256PlusPlus) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn random_generator(rng: &mut Xoshiro256PlusPlus, r: usize) -> Generator {
        let q = Matrix::from_fn(r, r, |i, j| if i == j { 0.0 } else { uniform01(rng) });
        Generator::from_off_diagonal((0..r).map(|i| format!("s{i}")).collect(), q).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let g = two_state(1.0, 2.0);
        assert_eq!(g.transition_matrix(0.0).unwrap().matrix(), &Matrix::identity(2, 2));
        assert!(g.transition_matrix(-1.0).is_err());
    }

    #[test]
    fn two_state_closed_form() {
        let (a, b) = (1.0, 2.0);
        let g = two_state(a, b);
        for t in [0.01, 0.7, 3.0, 40.0] {
            let p = g.transition_matrix(t).unwrap();
            assert!((p.entry(0, 1) - p01(a, b, t)).abs() < 1e-12, "t = {t}");
            assert!((p.entry(1, 0) - p01(b, a, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_birth_is_poisson() {
        let lambda = 1.3;
        let t = 2.0;
        let g = Generator::pure_birth(lambda, 40).unwrap();
        assert_eq!(g.rate(3, 4), lambda);
        assert_eq!(g.rate(3, 3), -lambda);
        let p = g.transition_matrix(t).unwrap();
        for k in 0..15 {
            let lt: f64 = lambda * t;
            let expected = lt.powi(k as i32) * (-lt).exp() / factorial(k as u64);
            assert!((p.entry(0, k) - expected).abs() < 1e-12, "k = {k}");
        }
        let p0 = ProbVector::one_hot(g.states(), "0", Orientation::Column).unwrap();
        let pt = g.evolve_density(&p0, t).unwrap();
        let n = Observable::from_pairs(g.states().iter().map(|s| (s.clone(), s.parse::<f64>().unwrap())));
        assert!((doi_expectation(&n, &pt).unwrap() - lambda * t).abs() < 1e-8);
        assert!((peliti_expectation(&n, &pt).unwrap() - lambda * t).abs() < 1e-8);
    }

    #[test]
    fn zero_rates() {
        let g = GainLossRates::new(vec!["a".into(), "b".into()], Matrix::zeros(2, 2)).unwrap().generator();
        assert_eq!(g.matrix(), &Matrix::zeros(2, 2));
        let r = g.kolmogorov_residuals(1.0).unwrap();
        assert!(r.forward < 1e-15 && r.backward < 1e-15);
    }

    #[test]
    fn gain_form_round_trip() {
        let states: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let rates = GainLossRates::from_transitions(states.clone(), [("a", "b", 2.0), ("c", "a", 0.5)]).unwrap();
        // Gain into b from a.
        assert_eq!(rates.gain(1, 0), 2.0);
        let g = rates.generator();
        assert_eq!(g.rate(0, 1), 2.0);
        assert_eq!(g.rate(2, 0), 0.5);
        assert_eq!(g.rate(0, 0), -2.0);
        assert_eq!(GainLossRates::from_generator(&g), rates);
        assert_eq!(rates.master_operator(), g.matrix().transpose());
        assert!(GainLossRates::from_transitions(states.clone(), [("a", "b", -1.0)]).is_err());
        assert!(GainLossRates::from_transitions(states, [("a", "z", 1.0)]).is_err());
    }

    #[test]
    fn rejects_bad_generators() {
        assert!(Generator::new(["0", "1"], vec![vec![-1.0, 1.0], vec![1.0, -0.5]]).is_err());
        assert!(Generator::new(["0", "1"], vec![vec![1.0, -1.0], vec![1.0, -1.0]]).is_err());
        assert!(Generator::new(["0", "0"], vec![vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn kolmogorov_two_state_and_oz() {
        let g = two_state(1.0, 2.0);
        let r = g.kolmogorov_residuals(0.7).unwrap();
        assert!(r.forward <= 1e-6 && r.backward <= 1e-6 && r.commutator <= 1e-8);
        let oz = [[0.5, 0.25, 0.25], [0.5, 0.0, 0.5], [0.25, 0.25, 0.5]];
        let q = Matrix::from_fn(3, 3, |i, j| oz[i][j] - if i == j { 1.0 } else { 0.0 });
        let g = Generator::from_matrix(vec!["R".into(), "N".into(), "S".into()], q).unwrap();
        for t in [0.3, 1.0, 5.0] {
            let r = g.kolmogorov_residuals(t).unwrap();
            assert!(r.forward <= 1e-6 && r.backward <= 1e-6 && r.commutator <= 1e-8);
        }
    }

    #[test]
    fn evolve_two_state() {
        let (a, b) = (1.0, 2.0);
        let g = two_state(a, b);
        let p0 = ProbVector::one_hot(g.states(), "0", Orientation::Column).unwrap();
        assert_eq!(g.evolve_density(&p0, 0.0).unwrap(), p0);
        let p = g.evolve_density(&p0, 0.7).unwrap();
        assert!((p.weights()[1] - p01(a, b, 0.7)).abs() < 1e-12);
        let p = g.evolve_density(&p0, 60.0).unwrap();
        assert!((p.weights()[0] - b / (a + b)).abs() < 1e-8);
        assert!((p.weights()[1] - a / (a + b)).abs() < 1e-8);
        let row = ProbVector::one_hot(g.states(), "0", Orientation::Row).unwrap();
        assert!(matches!(g.evolve_density(&row, 1.0), Err(Error::Orientation { .. })));
        let stat = g.stationary().unwrap();
        assert!((stat.weights()[0] - b / (a + b)).abs() < 1e-12);
    }

    #[test]
    fn uniformization_matches_taylor() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        for _ in 0..50 {
            let r = 2 + (rng.next_u64() % 4) as usize;
            let g = random_generator(&mut rng, r);
            let norm = g.matrix().column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
            let t = 5.0 / norm * uniform01(&mut rng);
            let p = g.transition_matrix(t).unwrap();
            assert!(linalg::max_abs_diff(p.matrix(), &taylor(g.matrix(), t)) < 1e-10);
        }
    }

    #[test]
    fn semigroup_and_conservation() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        for _ in 0..50 {
            let g = random_generator(&mut rng, 4);
            let (s, t) = (3.0 * uniform01(&mut rng), 3.0 * uniform01(&mut rng));
            let ps = g.transition_matrix(s).unwrap();
            let pt = g.transition_matrix(t).unwrap();
            let pst = g.transition_matrix(s + t).unwrap();
            assert!(linalg::max_abs_diff(&(ps.matrix() * pt.matrix()), pst.matrix()) < 1e-10);
            let (u, u_inv) = g.propagator_pair(t).unwrap();
            for c in linalg::column_sums(&u) {
                assert!((c - 1.0).abs() < 1e-12);
            }
            assert!(linalg::max_abs_diff(&(&u * &u_inv), &Matrix::identity(4, 4)) < 1e-12);
        }
    }

    #[test]
    fn heisenberg_matches_schrodinger() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        for _ in 0..100 {
            let r = 2 + (rng.next_u64() % 4) as usize;
            let g = random_generator(&mut rng, r);
            let t = uniform01(&mut rng);
            let raw: Vec<f64> = (0..r).map(|_| uniform01(&mut rng) + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let p0 = ProbVector::new(g.states().to_vec(), raw.iter().map(|v| v / total).collect(), Orientation::Column)
                .unwrap();
            let x = Observable::from_pairs(g.states().iter().map(|s| (s.clone(), 4.0 * uniform01(&mut rng) - 2.0)));
            let h = g.heisenberg_expectation(&x, t, &p0).unwrap();
            let s = doi_expectation(&x, &g.evolve_density(&p0, t).unwrap()).unwrap();
            assert!((h - s).abs() < 1e-10);
        }
    }

    #[test]
    fn heisenberg_examples() {
        let (a, b) = (1.0, 2.0);
        let g = two_state(a, b);
        let p0 = ProbVector::one_hot(g.states(), "0", Orientation::Column).unwrap();
        let x = Observable::from_pairs([("0", 0.0), ("1", 1.0)]);
        let h = g.heisenberg_expectation(&x, 0.7, &p0).unwrap();
        assert!((h - p01(a, b, 0.7)).abs() < 1e-10);
        assert_eq!(g.heisenberg_expectation(&x, 0.0, &p0).unwrap(), 0.0);
        let c = Observable::from_pairs([("0", 2.5), ("1", 2.5)]);
        for t in [0.0, 0.5, 4.0] {
            assert!((g.heisenberg_expectation(&c, t, &p0).unwrap() - 2.5).abs() < 1e-10);
        }
    }

    #[test]
    fn doi_and_peliti() {
        let p = ProbVector::column(["0", "1"], vec![0.5, 0.5]).unwrap();
        let one = Observable::from_pairs([("0", 1.0), ("1", 1.0)]);
        let sq = Observable::from_pairs([("0", 0.0), ("1", 1.0)]);
        assert_eq!(doi_expectation(&one, &p).unwrap(), 1.0);
        assert_eq!(peliti_expectation(&one, &p).unwrap(), 1.0);
        assert_eq!(peliti_expectation(&sq, &p).unwrap(), 0.5);
        let states: Vec<String> = (0..30).map(|n| n.to_string()).collect();
        let w: Vec<f64> = (0..30).map(|n| (n + 1) as f64).collect();
        let total: f64 = w.iter().sum();
        let p = ProbVector::new(states.clone(), w.iter().map(|v| v / total).collect(), Orientation::Column).unwrap();
        let x = Observable::from_pairs(states.iter().map(|s| (s.clone(), s.parse::<f64>().unwrap().powi(2))));
        let d = doi_expectation(&x, &p).unwrap();
        assert!((peliti_expectation(&x, &p).unwrap() - d).abs() < 1e-10);
        let hot = ProbVector::one_hot(&states, "7", Orientation::Column).unwrap();
        assert_eq!(doi_expectation(&x, &hot).unwrap(), 49.0);
        let bad = ProbVector::column(["a"], vec![1.0]).unwrap();
        assert!(peliti_expectation(&Observable::from_pairs([("a", 1.0)]), &bad).is_err());
    }

    #[test]
    fn grid_without_rates_is_static() {
        let k = GridKernel::from_fn(0.0, 0.5, 4, |_, _| 0.0).unwrap();
        let p0 = vec![0.5, 0.5, 0.5, 0.5];
        assert_eq!(grid_master_evolve(&k, &p0, 3.0).unwrap(), p0);
        assert!(grid_master_evolve(&k, &[1.0, 1.0, 1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn ring_relaxes_to_uniform() {
        let n = 8;
        let dx = 0.25;
        let k = GridKernel::ring(n, dx, 2.0).unwrap();
        let mut p0 = vec![0.0; n];
        p0[0] = 1.0 / dx;
        let p = grid_master_evolve(&k, &p0, 200.0).unwrap();
        let mass: f64 = p.iter().sum::<f64>() * dx;
        assert!((mass - 1.0).abs() < 1e-10);
        for v in p {
            assert!((v - 1.0 / (n as f64 * dx)).abs() < 1e-8);
        }
    }

    #[test]
    fn two_cell_grid_is_two_state_chain() {
        let (a, b) = (1.0, 2.0);
        let k = GridKernel::new(vec![0.0, 1.0], 1.0, Matrix::from_row_slice(2, 2, &[0.0, b, a, 0.0])).unwrap();
        assert_eq!(k.master_matrix(), two_state(a, b).matrix().transpose());
        let p = grid_master_evolve(&k, &[1.0, 0.0], 0.7).unwrap();
        assert!((p[1] - p01(a, b, 0.7)).abs() < 1e-12);
    }
}
