//! Poisson, Wiener and drifting Brownian processes: analytic laws and seeded
//! path samplers.
//!
//! Paths are drawn from xoshiro256++ streams. Path `i` of a run seeded with
//! `s` uses the stream seeded (via SplitMix64) with `mix(s ^ mix(i + 1))`,
//! where `mix` is the SplitMix64 finalizer, so paths can be generated in any
//! order. Normal variates come from the Box–Muller transform; Poisson
//! variates from inversion for means up to 10 and PTRS rejection above.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use statrs::function::factorial::ln_factorial;

use crate::quadrature::{self, QuadConfig};
use crate::{format, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonProcess {
    lambda: f64,
}

impl PoissonProcess {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("Poisson rate must be positive, got {lambda}")));
        }
        Ok(PoissonProcess { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerProcess {
    sigma: f64,
}

impl WienerProcess {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(WienerProcess { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// `X(t) = x0 + μt + σW(t)` for a standard Wiener process `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianMotion {
    x0: f64,
    mu: f64,
    sigma: f64,
}

impl BrownianMotion {
    pub fn new(x0: f64, mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        if !x0.is_finite() || !mu.is_finite() {
            return Err(Error::domain("x0 and mu must be finite"));
        }
        Ok(BrownianMotion { x0, mu, sigma })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Process {
    Poisson(PoissonProcess),
    Wiener(WienerProcess),
    Brownian(BrownianMotion),
}

impl Process {
    fn start(&self) -> f64 {
        match self {
            Process::Brownian(b) => b.x0,
            _ => 0.0,
        }
    }

    /// Analytic mean and variance of `X(t)`.
    pub fn moments(&self, t: f64) -> (f64, f64) {
        match self {
            Process::Poisson(p) => (p.lambda * t, p.lambda * t),
            Process::Wiener(w) => (0.0, t * w.sigma * w.sigma),
            Process::Brownian(b) => (b.x0 + b.mu * t, t * b.sigma * b.sigma),
        }
    }
}

impl From<PoissonProcess> for Process {
    fn from(p: PoissonProcess) -> Self {
        Process::Poisson(p)
    }
}

impl From<WienerProcess> for Process {
    fn from(w: WienerProcess) -> Self {
        Process::Wiener(w)
    }
}

impl From<BrownianMotion> for Process {
    fn from(b: BrownianMotion) -> Self {
        Process::Brownian(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
}

impl SamplePath {
    /// `#seed=<n>`, a `t,value` header, then one row per time point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "#seed={}", self.seed)?;
        writeln!(out, "t,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{},{}", format::number(*t), format::number(*v))?;
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// `(λt)^k e^{−λt} / k!`.
pub fn poisson_pmf(p: &PoissonProcess, k: u64, t: f64) -> Result<f64> {
    check_time(t)?;
    let m = p.lambda * t;
    Ok((k as f64 * m.ln() - m - ln_factorial(k)).exp())
}

/// `P(N(s + t) = j | N(s) = i)`: the pmf of `j − i` at elapsed time `t`.
pub fn poisson_transition(p: &PoissonProcess, i: u64, j: u64, t: f64) -> Result<f64> {
    check_time(t)?;
    if j < i {
        return Ok(0.0);
    }
    poisson_pmf(p, j - i, t)
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-d * d / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// The `N(0, tσ²)` density at `x`.
pub fn wiener_density(w: &WienerProcess, x: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(normal_pdf(x, 0.0, t * w.sigma * w.sigma))
}

/// The `N(μt, tσ²)` density of the displacement `y = X(t) − x0`.
pub fn brownian_density(b: &BrownianMotion, y: f64, t: f64) -> Result<f64> {
    wiener_density(&WienerProcess { sigma: b.sigma }, y - b.mu * t, t)
}

/// Largest `|P(x,t|y,s) − ∫ P(x,t|z,τ) P(z,τ|y,s) dz|` over a grid of
/// `(x, y)` pairs scaled to the process.
pub fn ck_check_continuous(w: &WienerProcess, s: f64, tau: f64, t: f64) -> Result<f64> {
    if !(s < tau && tau < t) || !s.is_finite() || !t.is_finite() {
        return Err(Error::domain(format!("need s < tau < t, got {s}, {tau}, {t}")));
    }
    let var = |dt: f64| dt * w.sigma * w.sigma;
    let (v1, v2) = (var(tau - s), var(t - tau));
    let spread = var(t - s).sqrt();
    let cfg = QuadConfig::default().with_abs_tol(1e-13).with_rel_tol(1e-12);
    let mut worst = 0.0f64;
    for yi in -2..=2 {
        let y = yi as f64 * w.sigma;
        for xi in -3..=3 {
            let x = y + xi as f64 * spread;
            let direct = normal_pdf(x, y, var(t - s));
            // The integrand is a Gaussian in z; centre the quadrature on it.
            let centre = (y * v2 + x * v1) / (v1 + v2);
            let scale = (v1 * v2 / (v1 + v2)).sqrt();
            let conv = quadrature::integrate_line(
                |z| normal_pdf(x, z, v2) * normal_pdf(z, y, v1),
                centre,
                scale,
                &cfg,
            )?
            .value;
            worst = worst.max((direct - conv).abs());
        }
    }
    Ok(worst)
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-path random source.
pub struct PathRng {
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl PathRng {
    pub fn new(seed: u64, path: u64) -> Self {
        PathRng {
            rng: Xoshiro256PlusPlus::seed_from_u64(mix(seed ^ mix(path.wrapping_add(1)))),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by Box–Muller; the second variate is kept for the
    /// next call.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            0
        } else if mean <= 10.0 {
            self.poisson_inversion(mean)
        } else {
            self.poisson_ptrs(mean)
        }
    }

    fn poisson_inversion(&mut self, mean: f64) -> u64 {
        let u = self.uniform();
        let mut p = (-mean).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf && k < 1000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    }

    // Hörmann's transformed rejection with squeeze.
    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        let slam = mean.sqrt();
        let loglam = mean.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let invalpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
            if us >= 0.07 && v <= vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = v.ln() + invalpha.ln() - (a / (us * us) + b).ln();
            let rhs = -mean + k * loglam - ln_factorial(k as u64);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if let Some(t) = times.first() {
        if !(*t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("times must start at or after 0, got {t}")));
        }
    }
    if let Some(w) = times.windows(2).find(|w| !(w[0] < w[1]) || !w[1].is_finite()) {
        return Err(Error::domain(format!("times must be strictly increasing: {} then {}", w[0], w[1])));
    }
    Ok(())
}

fn draw_path(proc: &Process, times: &[f64], rng: &mut PathRng) -> Vec<f64> {
    let mut values = Vec::with_capacity(times.len());
    let mut x = proc.start();
    let mut last = 0.0;
    for &t in times {
        let dt = t - last;
        if dt > 0.0 {
            x += match proc {
                Process::Poisson(p) => rng.poisson(p.lambda * dt) as f64,
                Process::Wiener(w) => w.sigma * dt.sqrt() * rng.normal(),
                Process::Brownian(b) => b.mu * dt + b.sigma * dt.sqrt() * rng.normal(),
            };
        }
        values.push(x);
        last = t;
    }
    values
}

/// One path observed at `times`, starting from the process's initial value
/// at time 0.
pub fn sample_path(proc: &Process, times: &[f64], seed: u64) -> Result<SamplePath> {
    check_times(times)?;
    let mut rng = PathRng::new(seed, 0);
    Ok(SamplePath {
        times: times.to_vec(),
        values: draw_path(proc, times, &mut rng),
        seed,
    })
}

/// `n_paths` independent paths at `times`; path `i` uses stream `i`.
pub fn sample_paths(proc: &Process, times: &[f64], n_paths: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_times(times)?;
    Ok((0..n_paths as u64)
        .map(|i| draw_path(proc, times, &mut PathRng::new(seed, i)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
}

pub fn sample_moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let variance = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Moments { mean, variance }
}

/// Sample mean and variance of `X(t)` over `n_paths` paths.
pub fn empirical_moments(proc: &Process, t: f64, n_paths: usize, seed: u64) -> Result<Moments> {
    check_time(t)?;
    if n_paths < 100 {
        return Err(Error::domain(format!("need at least 100 paths, got {n_paths}")));
    }
    let xs: Vec<f64> = sample_paths(proc, &[t], n_paths, seed)?
        .into_iter()
        .map(|p| p[0])
        .collect();
    Ok(sample_moments(&xs))
}
