//! Continuous sample spaces described by densities.
//!
//! Probabilities of regions, conditional densities and expectations are
//! computed by adaptive quadrature. Base-event brackets `P(x|x′)` are Dirac
//! deltas and are never produced as numbers; conditioning on a single point
//! reduces to evaluating a region's indicator ([`Density::point_bracket`]).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::quadrature::{self, QuadConfig};
use crate::{Error, Result};

/// How far a density's total mass may sit from one at construction.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// A subset of a continuous sample space.
pub trait Region: Clone {
    type Point: Copy;

    fn contains(&self, p: Self::Point) -> bool;
    fn intersect(&self, other: &Self) -> Self;
}

/// Common operations on a continuous density `f(x) = P(x|Ω)`.
pub trait Density: Sized {
    type Point: Copy;
    type Region: Region<Point = Self::Point>;

    /// The density at `p`; zero outside the support.
    fn pdf(&self, p: Self::Point) -> f64;

    fn quad(&self) -> &QuadConfig;

    /// The whole support as a region.
    fn support(&self) -> Self::Region;

    /// `∫_R g(x) f(x) dx`.
    fn integrate_over<G: Fn(Self::Point) -> f64>(&self, r: &Self::Region, g: G) -> Result<f64>;

    /// `P(E) = ∫_E f(x) dx`.
    fn region_probability(&self, r: &Self::Region) -> Result<f64> {
        let p = self.integrate_over(r, |_| 1.0)?;
        let slack = self.quad().abs_tol.max(NORMALIZATION_TOL);
        if p > 1.0 + slack || p < -slack {
            return Err(Error::domain(format!("region probability {p} outside [0, 1]")));
        }
        Ok(p.clamp(0.0, 1.0))
    }

    /// Probability of the evidence `e`, rejecting evidence indistinguishable
    /// from zero at the quadrature tolerance.
    fn evidence(&self, e: &Self::Region) -> Result<f64> {
        let p = self.region_probability(e)?;
        if p <= self.quad().abs_tol {
            return Err(Error::ZeroEvidence);
        }
        Ok(p)
    }

    /// `P(x|E) = f(x) / P(E)` for `x ∈ E`, zero otherwise.
    fn conditional_density(&self, e: &Self::Region, x: Self::Point) -> Result<f64> {
        let pe = self.evidence(e)?;
        Ok(if e.contains(x) { self.pdf(x) / pe } else { 0.0 })
    }

    /// `P(F|E) = P(E ∩ F) / P(E)`.
    fn conditional_probability(&self, f: &Self::Region, e: &Self::Region) -> Result<f64> {
        let pe = self.evidence(e)?;
        let pef = self.region_probability(&e.intersect(f))?;
        Ok((pef / pe).clamp(0.0, 1.0))
    }

    /// `P(A|x)`: one when `x ∈ A`, zero otherwise.
    fn point_bracket(&self, a: &Self::Region, x: Self::Point) -> f64 {
        if a.contains(x) {
            1.0
        } else {
            0.0
        }
    }

    /// `E[g] = ∫ g(x) f(x) dx`, provided `∫ |g| f` converges.
    ///
    /// Absolute convergence is checked by integrating `|g| f` at the density's
    /// tolerance and again at one hundredth of it; failure of either run, or
    /// estimates that move by more than their combined error bounds, is
    /// reported as divergence.
    fn expectation<G: Fn(Self::Point) -> f64>(&self, g: G) -> Result<f64> {
        let support = self.support();
        let coarse = self.integrate_over(&support, |p| g(p).abs());
        let fine = self.tightened().integrate_over(&support, |p| g(p).abs());
        match (coarse, fine) {
            (Ok(a), Ok(b)) => {
                let bound = 100.0 * self.quad().abs_tol.max(self.quad().rel_tol * a.abs());
                if (a - b).abs() > bound {
                    return Err(Error::Divergence { estimate: b });
                }
            }
            (Err(Error::Integration { estimate, .. }), _)
            | (_, Err(Error::Integration { estimate, .. })) => {
                return Err(Error::Divergence { estimate })
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
        self.integrate_over(&support, g)
    }

    /// A copy with quadrature tolerances divided by 100.
    fn tightened(&self) -> Self;
}

/// A closed interval `[lo, hi]`; `hi` may be `+∞` and `lo` may be `−∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn at_least(lo: f64) -> Self {
        Interval::new(lo, f64::INFINITY)
    }

    pub fn at_most(hi: f64) -> Self {
        Interval::new(f64::NEG_INFINITY, hi)
    }

    pub fn real_line() -> Self {
        Interval::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }
}

impl Region for Interval {
    type Point = f64;

    fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn intersect(&self, other: &Self) -> Self {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }
}

type Pdf1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A density on an interval of the real line.
#[derive(Clone)]
pub struct Density1D {
    name: String,
    support: Interval,
    pdf: Pdf1,
    quad: QuadConfig,
}

impl fmt::Debug for Density1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density1D")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("quad", &self.quad)
            .finish()
    }
}

impl Density1D {
    /// Builds a density and checks it: nonnegative at a spread of sample
    /// points and of unit mass within [`NORMALIZATION_TOL`].
    pub fn new(
        name: impl Into<String>,
        support: Interval,
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        quad: QuadConfig,
    ) -> Result<Self> {
        if support.is_empty() || support.lo.is_nan() || support.hi.is_nan() {
            return Err(Error::domain("density support must be a non-empty interval"));
        }
        let d = Density1D {
            name: name.into(),
            support,
            pdf: Arc::new(pdf),
            quad,
        };
        for k in 1..100 {
            let u = k as f64 / 100.0;
            let x = match (support.lo.is_finite(), support.hi.is_finite()) {
                (true, true) => support.lo + u * (support.hi - support.lo),
                (true, false) => support.lo + u / (1.0 - u),
                (false, true) => support.hi - u / (1.0 - u),
                (false, false) => (u - 0.5) / (u * (1.0 - u)),
            };
            let v = (d.pdf)(x);
            if !(v >= 0.0) {
                return Err(Error::domain(format!("density {} is {v} at {x}", d.name)));
            }
        }
        let total = d.integrate_over(&support, |_| 1.0)?;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum: total });
        }
        Ok(d)
    }

    /// `λ e^{−λt}` on `[0, ∞)`.
    pub fn exponential(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("exponential rate must be positive, got {lambda}")));
        }
        Self::new(
            format!("exponential({lambda})"),
            Interval::at_least(0.0),
            move |t| if t >= 0.0 { lambda * (-lambda * t).exp() } else { 0.0 },
            QuadConfig::default(),
        )
    }

    /// The normal density with mean `mu` and variance `sigma2`.
    pub fn normal(mu: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite() && mu.is_finite()) {
            return Err(Error::domain(format!("normal needs finite mean and positive variance, got ({mu}, {sigma2})")));
        }
        let norm = 1.0 / (2.0 * PI * sigma2).sqrt();
        Self::new(
            format!("normal({mu}, {sigma2})"),
            Interval::real_line(),
            move |x| norm * (-(x - mu) * (x - mu) / (2.0 * sigma2)).exp(),
            QuadConfig::default(),
        )
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::domain(format!("uniform needs finite lo < hi, got [{lo}, {hi}]")));
        }
        let h = 1.0 / (hi - lo);
        Self::new(
            format!("uniform({lo}, {hi})"),
            Interval::new(lo, hi),
            move |x| if (lo..=hi).contains(&x) { h } else { 0.0 },
            QuadConfig::default(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support_interval(&self) -> Interval {
        self.support
    }
}

impl Density for Density1D {
    type Point = f64;
    type Region = Interval;

    fn pdf(&self, x: f64) -> f64 {
        if self.support.contains(x) {
            (self.pdf)(x)
        } else {
            0.0
        }
    }

    fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    fn support(&self) -> Interval {
        self.support
    }

    fn integrate_over<G: Fn(f64) -> f64>(&self, r: &Interval, g: G) -> Result<f64> {
        let r = r.intersect(&self.support);
        if r.is_empty() {
            return Ok(0.0);
        }
        let pdf = &self.pdf;
        let integrand = |x: f64| {
            let f = pdf(x);
            if f == 0.0 {
                0.0
            } else {
                g(x) * f
            }
        };
        // Centre whole-line integrals where the mass is.
        if !r.lo.is_finite() && !r.hi.is_finite() {
            return Ok(quadrature::integrate_line(integrand, self.centre(), 1.0, &self.quad)?.value);
        }
        Ok(quadrature::integrate(integrand, r.lo, r.hi, &self.quad)?.value)
    }

    fn tightened(&self) -> Self {
        Density1D {
            quad: self
                .quad
                .with_abs_tol(self.quad.abs_tol / 100.0)
                .with_rel_tol(self.quad.rel_tol / 100.0),
            ..self.clone()
        }
    }
}

impl Density1D {
    fn centre(&self) -> f64 {
        // Largest sampled density on a coarse grid; good enough to place the
        // whole-line map over the bulk of a unimodal density.
        (-200..=200)
            .map(|k| k as f64 * 0.5)
            .max_by(|a, b| (self.pdf)(*a).total_cmp(&(self.pdf)(*b)))
            .unwrap_or(0.0)
    }
}

type Indicator = Arc<dyn Fn(f64, f64) -> bool + Send + Sync>;

/// A region of the plane: a bounding box and an indicator inside it.
#[derive(Clone)]
pub struct PlanarRegion {
    pub x: (f64, f64),
    pub y: (f64, f64),
    indicator: Indicator,
}

impl fmt::Debug for PlanarRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarRegion")
            .field("x", &self.x)
            .field("y", &self.y)
            .finish_non_exhaustive()
    }
}

impl PlanarRegion {
    pub fn new(
        x: (f64, f64),
        y: (f64, f64),
        indicator: impl Fn(f64, f64) -> bool + Send + Sync + 'static,
    ) -> Self {
        PlanarRegion {
            x,
            y,
            indicator: Arc::new(indicator),
        }
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64)) -> Self {
        Self::new(x, y, |_, _| true)
    }

    /// `{(x, y) : (x − cx)² + (y − cy)² ≤ r²}`.
    pub fn disc(cx: f64, cy: f64, r: f64) -> Self {
        Self::new((cx - r, cx + r), (cy - r, cy + r), move |x, y| {
            (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r
        })
    }

    /// `{y ≥ 0}` clipped to the box `[-extent, extent]²`.
    pub fn upper_half(extent: f64) -> Self {
        Self::new((-extent, extent), (0.0, extent), |_, y| y >= 0.0)
    }

    pub fn is_empty(&self) -> bool {
        !(self.x.0 < self.x.1 && self.y.0 < self.y.1)
    }
}

impl Region for PlanarRegion {
    type Point = (f64, f64);

    fn contains(&self, (x, y): (f64, f64)) -> bool {
        self.x.0 <= x && x <= self.x.1 && self.y.0 <= y && y <= self.y.1 && (self.indicator)(x, y)
    }

    fn intersect(&self, other: &Self) -> Self {
        let (a, b) = (self.indicator.clone(), other.indicator.clone());
        PlanarRegion {
            x: (self.x.0.max(other.x.0), self.x.1.min(other.x.1)),
            y: (self.y.0.max(other.y.0), self.y.1.min(other.y.1)),
            indicator: Arc::new(move |x, y| a(x, y) && b(x, y)),
        }
    }
}

type Pdf2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A density on a bounded region of the plane.
#[derive(Clone)]
pub struct Density2D {
    name: String,
    support: PlanarRegion,
    pdf: Pdf2,
    quad: QuadConfig,
}

impl fmt::Debug for Density2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density2D")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("quad", &self.quad)
            .finish()
    }
}

impl Density2D {
    pub fn new(
        name: impl Into<String>,
        support: PlanarRegion,
        pdf: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        quad: QuadConfig,
    ) -> Result<Self> {
        if support.is_empty() || ![support.x.0, support.x.1, support.y.0, support.y.1].iter().all(|v| v.is_finite()) {
            return Err(Error::domain("planar support must be a finite, non-empty box"));
        }
        let d = Density2D {
            name: name.into(),
            support,
            pdf: Arc::new(pdf),
            quad,
        };
        for i in 0..=10 {
            for j in 0..=10 {
                let x = d.support.x.0 + (d.support.x.1 - d.support.x.0) * i as f64 / 10.0;
                let y = d.support.y.0 + (d.support.y.1 - d.support.y.0) * j as f64 / 10.0;
                let v = d.pdf((x, y));
                if !(v >= 0.0) {
                    return Err(Error::domain(format!("density {} is {v} at ({x}, {y})", d.name)));
                }
            }
        }
        let total = d.integrate_over(&d.support.clone(), |_| 1.0)?;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum: total });
        }
        Ok(d)
    }

    /// The uniform density `1/π` on the closed unit disc.
    pub fn uniform_disc() -> Result<Self> {
        Self::new(
            "uniform_disc",
            PlanarRegion::disc(0.0, 0.0, 1.0),
            |_, _| 1.0 / PI,
            QuadConfig::default(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl Density for Density2D {
    type Point = (f64, f64);
    type Region = PlanarRegion;

    fn pdf(&self, p: (f64, f64)) -> f64 {
        if self.support.contains(p) {
            (self.pdf)(p.0, p.1)
        } else {
            0.0
        }
    }

    fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    fn support(&self) -> PlanarRegion {
        self.support.clone()
    }

    fn integrate_over<G: Fn((f64, f64)) -> f64>(&self, r: &PlanarRegion, g: G) -> Result<f64> {
        let r = r.intersect(&self.support);
        if r.is_empty() {
            return Ok(0.0);
        }
        let pdf = &self.pdf;
        let r2 = r.clone();
        Ok(quadrature::integrate_masked(
            |x, y| g((x, y)) * pdf(x, y),
            move |x, y| r2.contains((x, y)),
            r.x,
            r.y,
            &self.quad,
        )?
        .value)
    }

    fn tightened(&self) -> Self {
        Density2D {
            quad: self
                .quad
                .with_abs_tol(self.quad.abs_tol / 100.0)
                .with_rel_tol(self.quad.rel_tol / 100.0),
            ..self.clone()
        }
    }
}

/// Partition function and mean energies of a classical ideal gas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealGasStats {
    /// `V (2πm / (h²β))^{3/2}` in closed form.
    pub z: f64,
    /// The same quantity by radial quadrature over momentum magnitude.
    pub z_quadrature: f64,
    /// `⟨ε⟩` by quadrature; `3 / (2β)` in closed form.
    pub mean_energy: f64,
    /// `N ⟨ε⟩`.
    pub total_energy: f64,
}

/// Single-molecule statistics for `N` non-interacting molecules with
/// `f(ε) = e^{−βε} / z` on phase space, `ε = p² / 2m`.
///
/// The momentum integrals are taken in the dimensionless variable
/// `u = p / √(2m/β)`, so physical constants of any magnitude can be used.
pub fn ideal_gas_stats(beta: f64, mass: f64, volume: f64, h: f64, n: u64) -> Result<IdealGasStats> {
    for (name, v) in [("beta", beta), ("mass", mass), ("volume", volume), ("h", h)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    if n == 0 {
        return Err(Error::domain("molecule count must be positive"));
    }
    let cfg = QuadConfig::default().with_abs_tol(1e-13).with_rel_tol(1e-12);
    let shell = |u: f64| 4.0 * PI * u * u * (-u * u).exp();
    let i2 = quadrature::integrate(shell, 0.0, f64::INFINITY, &cfg)?.value;
    let i4 = quadrature::integrate(|u| u * u * shell(u), 0.0, f64::INFINITY, &cfg)?.value;
    let p0 = (2.0 * mass / beta).sqrt();
    let z = volume * (2.0 * PI * mass / (h * h * beta)).powf(1.5);
    let z_quadrature = volume * (p0 / h).powi(3) * i2;
    let mean_energy = (i4 / i2) / beta;
    Ok(IdealGasStats {
        z,
        z_quadrature,
        mean_energy,
        total_energy: n as f64 * mean_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_upper_half() {
        let d = Density2D::uniform_disc().unwrap();
        let upper = PlanarRegion::upper_half(1.0);
        assert!((d.region_probability(&upper).unwrap() - 0.5).abs() < 1e-6);
        assert!((d.region_probability(&d.support()).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn darts_conditionals() {
        let d = Density2D::uniform_disc().unwrap();
        let upper = PlanarRegion::upper_half(1.0);
        let inner = PlanarRegion::disc(0.0, 0.0, 0.5);
        let p = d.conditional_probability(&inner, &upper).unwrap();
        assert!((p - 0.25).abs() < 1e-6);
        let c = d.conditional_density(&upper, (0.0, 0.5)).unwrap();
        assert!((c - 2.0 / PI).abs() < 1e-6);
        assert_eq!(d.conditional_density(&upper, (0.0, -0.5)).unwrap(), 0.0);
        let c = d.conditional_density(&d.support(), (0.3, 0.3)).unwrap();
        assert!((c - 1.0 / PI).abs() < 1e-8);
        let p = d.conditional_probability(&PlanarRegion::rectangle((-2.0, 2.0), (-2.0, 2.0)), &upper).unwrap();
        assert!((p - 1.0).abs() < 1e-8);
    }

    #[test]
    fn disc_first_moment_vanishes() {
        let d = Density2D::uniform_disc().unwrap();
        assert!(d.expectation(|(x, _)| x).unwrap().abs() < 1e-8);
        assert!((d.expectation(|_| 1.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn exponential_survival_and_mean() {
        let lambda = 1.7;
        let d = Density1D::exponential(lambda).unwrap();
        for t in [0.0, 0.3, 1.0, 4.0] {
            let p = d.region_probability(&Interval::at_least(t)).unwrap();
            assert!((p - (-lambda * t).exp()).abs() < 1e-10);
        }
        let p = d.conditional_probability(&Interval::at_least(2.5), &Interval::at_least(1.0)).unwrap();
        assert!((p - (-lambda * 1.5).exp()).abs() < 1e-10);
        assert!((d.expectation(|t| t).unwrap() - 1.0 / lambda).abs() < 1e-8);
    }

    #[test]
    fn superset_condition_is_one() {
        let d = Density1D::exponential(2.0).unwrap();
        let p = d.conditional_probability(&Interval::at_least(0.5), &Interval::at_least(1.0)).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_evidence() {
        let d = Density1D::exponential(2.0).unwrap();
        assert_eq!(
            d.conditional_density(&Interval::at_most(-1.0), 0.5),
            Err(Error::ZeroEvidence)
        );
        let disc = Density2D::uniform_disc().unwrap();
        let outside = PlanarRegion::rectangle((2.0, 3.0), (2.0, 3.0));
        assert_eq!(disc.conditional_probability(&disc.support(), &outside), Err(Error::ZeroEvidence));
    }

    #[test]
    fn point_evidence_is_an_indicator() {
        let d = Density1D::exponential(1.0).unwrap();
        assert_eq!(d.point_bracket(&Interval::new(1.0, 2.0), 1.5), 1.0);
        assert_eq!(d.point_bracket(&Interval::new(1.0, 2.0), 2.5), 0.0);
    }

    #[test]
    fn heavy_tail_first_moment_diverges() {
        let cauchy = Density1D::new(
            "cauchy",
            Interval::real_line(),
            |x| 1.0 / (PI * (1.0 + x * x)),
            QuadConfig::default(),
        )
        .unwrap();
        assert!(matches!(cauchy.expectation(|x| x), Err(Error::Divergence { .. })));
        assert!(cauchy.expectation(|x| x.atan()).unwrap().abs() < 1e-8);
    }

    #[test]
    fn construction_rejects_bad_densities() {
        let r = Density1D::new("half", Interval::new(0.0, 1.0), |_| 0.5, QuadConfig::default());
        assert!(matches!(r, Err(Error::NotNormalized { .. })));
        let r = Density1D::new("neg", Interval::new(0.0, 1.0), |x| 2.0 - 2.0 * x - 0.5, QuadConfig::default());
        assert!(r.is_err());
        assert!(Density1D::exponential(-1.0).is_err());
    }

    #[test]
    fn normal_moments() {
        let d = Density1D::normal(1.5, 4.0).unwrap();
        assert!((d.expectation(|x| x).unwrap() - 1.5).abs() < 1e-8);
        let var = d.expectation(|x| (x - 1.5) * (x - 1.5)).unwrap();
        assert!((var - 4.0).abs() < 1e-7);
    }

    #[test]
    fn ideal_gas() {
        let g = ideal_gas_stats(2.0, 3.0, 5.0, 0.7, 1).unwrap();
        assert!((g.mean_energy * 2.0 - 1.5).abs() < 1e-6);
        assert!(((g.z_quadrature - g.z) / g.z).abs() < 1e-6);
        assert_eq!(g.total_energy, g.mean_energy);
        let g2 = ideal_gas_stats(4.0, 3.0, 5.0, 0.7, 10).unwrap();
        assert!((g2.mean_energy - g.mean_energy / 2.0).abs() < 1e-12);
        assert!((g2.total_energy - 10.0 * g2.mean_energy).abs() < 1e-12);
        assert!(ideal_gas_stats(0.0, 1.0, 1.0, 1.0, 1).is_err());
        assert!(ideal_gas_stats(1.0, 1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn physical_constants() {
        // Argon at 300 K in one litre.
        let k = 1.380_649e-23;
        let g = ideal_gas_stats(1.0 / (k * 300.0), 6.63e-26, 1e-3, 6.626_070_15e-34, 1).unwrap();
        assert!(((g.z_quadrature - g.z) / g.z).abs() < 1e-6);
        assert!((g.mean_energy / (1.5 * k * 300.0) - 1.0).abs() < 1e-6);
    }
}
