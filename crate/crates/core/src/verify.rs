//! Invariant checks run against every declaration in a model.

use std::fmt;

use crate::continuous::{Density as _, Region as _};
use crate::ctmc::{doi_expectation, peliti_expectation};
use crate::dsl::model::{Density, Model, ObservableKind, Region, Space};
use crate::linalg::{self, Matrix};
use crate::observables::{parse_numeral, variance, variance_by_moments, Observable};
use crate::processes::{
    brownian_density, ck_check_continuous, empirical_moments, poisson_pmf, poisson_transition, Process,
};
use crate::quadrature::{self, QuadConfig};
use crate::sample::EventSet;
use crate::{Error, Generator, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: impl Into<String>, outcome: Result<(bool, String)>) {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, e.to_string()));
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    /// A check that a residual stays within `tol`.
    fn within(&mut self, name: impl Into<String>, residual: Result<f64>, tol: f64) {
        self.push(
            name,
            residual.map(|r| (r <= tol, format!("residual {r:.3e} (tolerance {tol:.0e})"))),
        );
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

pub fn verify_model(m: &Model) -> Report {
    let mut r = Report::default();
    spaces(m, &mut r);
    chains(m, &mut r);
    generators(m, &mut r);
    densities(m, &mut r);
    processes(m, &mut r);
    r
}

fn spaces(m: &Model, r: &mut Report) {
    for (name, space) in &m.spaces {
        let s = space.outcomes();
        r.within(
            format!("space {name}: masses sum to one"),
            Ok((s.masses().iter().sum::<f64>() - 1.0).abs()),
            1e-12,
        );
        let events: Vec<(&String, &EventSet)> = m
            .events
            .iter()
            .filter(|(_, e)| e.space == *name)
            .filter_map(|(n, e)| match &e.region {
                Region::Set(set) => Some((n, set)),
                _ => None,
            })
            .collect();
        let singletons = s.singleton_partition();
        for (en, e) in &events {
            r.within(
                format!("space {name}: total probability of {en}"),
                s.total_probability(e, &singletons)
                    .and_then(|t| Ok((t - s.probability(e)?).abs())),
                1e-12,
            );
            r.within(
                format!("space {name}: {en} and its complement"),
                s.complement(e)
                    .and_then(|c| Ok((s.probability(e)? + s.probability(&c)? - 1.0).abs())),
                1e-12,
            );
            for (fname, f) in &events {
                if s.probability(f).unwrap_or(0.0) <= 0.0 || s.probability(e).unwrap_or(0.0) <= 0.0 {
                    continue;
                }
                r.within(
                    format!("space {name}: identity insertion P({en}|{fname})"),
                    (|| Ok((s.insert_identity(e, &singletons, f)? - s.bracket(e, f)?).abs()))(),
                    1e-12,
                );
                r.within(
                    format!("space {name}: Bayes P({en}|{fname})"),
                    (|| Ok((s.bayes(e, f)? - s.bracket(e, f)?).abs()))(),
                    1e-12,
                );
            }
        }
        for (on, o) in m.observables.iter().filter(|(_, o)| o.space == *name) {
            if let ObservableKind::Table(x) = &o.kind {
                let check = (|| {
                    let a = variance(s, x)?;
                    let b = variance_by_moments(s, x)?;
                    let scale = crate::observables::expectation_fn(s, |v| v * v, x)?.max(1.0);
                    Ok((a - b).abs() / scale)
                })();
                r.within(format!("space {name}: variance of {on} two ways"), check, 1e-10);
            }
        }
        if let Space::Product(p) = space {
            for (i, factor) in p.factors().iter().enumerate() {
                let check = p.marginal(i).map(|marg| {
                    marg.masses()
                        .iter()
                        .zip(factor.masses())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                });
                r.within(format!("space {name}: marginal {i} matches its factor"), check, 1e-12);
            }
            let numeric = p
                .factors()
                .iter()
                .all(|f| f.labels().iter().all(|l| parse_numeral(l).is_ok()));
            if numeric {
                let ones = vec![1; p.factors().len()];
                let check = (|| {
                    let joint = p.moment_product(&ones)?;
                    let mut product = 1.0;
                    for i in 0..p.factors().len() {
                        product *= p.factor_moment(i, 1)?;
                    }
                    Ok((joint - product).abs() / product.abs().max(1.0))
                })();
                r.within(format!("space {name}: moments factorize"), check, 1e-12);
            }
        }
    }
}

fn chains(m: &Model, r: &mut Report) {
    for (name, c) in &m.chains {
        let p = &c.matrix;
        r.within(format!("chain {name}: Chapman-Kolmogorov"), Ok(p.chapman_kolmogorov(2, 3)), 1e-12);
        match p.stationary() {
            Ok(s) => r.within(
                format!("chain {name}: stationary residual"),
                Ok(p.stationary_residual(&s.vector)),
                1e-10,
            ),
            Err(Error::NonUnique) => r.push(
                format!("chain {name}: stationary distribution"),
                Ok((true, "not unique; residual check skipped".into())),
            ),
            Err(e) => r.push(format!("chain {name}: stationary distribution"), Err(e)),
        }
        if let Some(u0) = &c.initial {
            let check = (|| {
                let mut worst = 0.0f64;
                for n in 0..=20 {
                    let u = p.evolve_left(u0, n)?;
                    worst = worst.max((u.weights().iter().sum::<f64>() - 1.0).abs());
                }
                Ok(worst)
            })();
            r.within(format!("chain {name}: evolution stays on the simplex"), check, 1e-12);
        }
    }
}

fn generators(m: &Model, r: &mut Report) {
    for (name, c) in &m.generators {
        let g = &c.generator;
        let t = 1.0 / g.uniformization_rate().max(1.0);
        let k = g.kolmogorov_residuals(t);
        r.within(
            format!("generator {name}: forward equation"),
            k.as_ref().map(|k| k.forward).map_err(Clone::clone),
            1e-6,
        );
        r.within(
            format!("generator {name}: backward equation"),
            k.as_ref().map(|k| k.backward).map_err(Clone::clone),
            1e-6,
        );
        r.within(
            format!("generator {name}: P(t)Q = QP(t)"),
            k.as_ref().map(|k| k.commutator).map_err(Clone::clone),
            1e-8,
        );
        r.within(format!("generator {name}: semigroup"), semigroup(g, 0.3 * t, 0.7 * t), 1e-10);
        let conservation = g.propagator_pair(t).map(|(u, _)| {
            linalg::column_sums(&u)
                .iter()
                .map(|s| (s - 1.0).abs())
                .fold(0.0, f64::max)
        });
        r.within(format!("generator {name}: conservation"), conservation, 1e-12);
        let inverse = g.propagator_pair(t).map(|(u, u_inv)| {
            let n = u.nrows();
            linalg::max_abs_diff(&(u * u_inv), &Matrix::identity(n, n))
        });
        r.within(format!("generator {name}: exp(Qᵀt) exp(-Qᵀt) = I"), inverse, 1e-12);
        if let Some(p0) = &c.initial {
            let x = Observable::from_pairs(g.states().iter().enumerate().map(|(i, s)| (s.clone(), i as f64)));
            let check = (|| {
                let p = g.evolve_density(p0, t)?;
                let h = g.heisenberg_expectation(&x, t, p0)?;
                Ok((h - doi_expectation(&x, &p)?).abs())
            })();
            r.within(format!("generator {name}: Heisenberg and Schrödinger pictures"), check, 1e-10);
            let check = (|| {
                let mut worst = 0.0f64;
                for s in [t, 10.0 * t, 100.0 * t] {
                    let p = g.evolve_density(p0, s)?;
                    worst = worst.max((p.weights().iter().sum::<f64>() - 1.0).abs());
                }
                Ok(worst)
            })();
            r.within(format!("generator {name}: evolution stays on the simplex"), check, 1e-12);
            let occupation = g
                .states()
                .iter()
                .all(|s| s.parse::<u64>().is_ok());
            if occupation {
                let n = Observable::from_pairs(g.states().iter().map(|s| (s.clone(), s.parse::<f64>().unwrap())));
                let check = (|| {
                    let p = g.evolve_density(p0, t)?;
                    Ok((peliti_expectation(&n, &p)? - doi_expectation(&n, &p)?).abs())
                })();
                r.within(format!("generator {name}: Doi and Peliti functionals"), check, 1e-10);
            }
        }
    }
}

fn semigroup(g: &Generator, s: f64, t: f64) -> Result<f64> {
    let ps = g.transition_matrix(s)?;
    let pt = g.transition_matrix(t)?;
    let pst = g.transition_matrix(s + t)?;
    Ok(linalg::max_abs_diff(&(ps.matrix() * pt.matrix()), pst.matrix()))
}

fn densities(m: &Model, r: &mut Report) {
    for (name, d) in &m.densities {
        let events: Vec<(&String, &Region)> = m
            .events
            .iter()
            .filter(|(_, e)| e.space == *name)
            .map(|(n, e)| (n, &e.region))
            .collect();
        match d {
            Density::Line(d) => {
                r.within(
                    format!("density {name}: normalization"),
                    d.region_probability(&d.support()).map(|p| (p - 1.0).abs()),
                    1e-8,
                );
                for (en, e) in &events {
                    let Region::Interval(e) = e else { continue };
                    for (fname, f) in &events {
                        let Region::Interval(f) = f else { continue };
                        let check = (|| {
                            let pe = d.region_probability(e)?;
                            if pe <= d.quad().abs_tol {
                                return Ok(0.0);
                            }
                            let joint = d.region_probability(&e.intersect(f))?;
                            Ok((d.conditional_probability(f, e)? * pe - joint).abs())
                        })();
                        r.within(format!("density {name}: product rule for {fname} given {en}"), check, 1e-8);
                    }
                }
            }
            Density::Plane(d) => {
                r.within(
                    format!("density {name}: normalization"),
                    d.region_probability(&d.support()).map(|p| (p - 1.0).abs()),
                    1e-8,
                );
                for (en, e) in &events {
                    let Region::Planar(e) = e else { continue };
                    for (fname, f) in &events {
                        let Region::Planar(f) = f else { continue };
                        let check = (|| {
                            let pe = d.region_probability(e)?;
                            if pe <= d.quad().abs_tol {
                                return Ok(0.0);
                            }
                            let joint = d.region_probability(&e.intersect(f))?;
                            Ok((d.conditional_probability(f, e)? * pe - joint).abs())
                        })();
                        r.within(format!("density {name}: product rule for {fname} given {en}"), check, 1e-6);
                    }
                }
            }
        }
    }
}

fn processes(m: &Model, r: &mut Report) {
    const PATHS: usize = 20_000;
    const SEED: u64 = 1;
    for (name, proc) in &m.processes {
        let t = 1.0;
        match proc {
            Process::Poisson(p) => {
                let check = (|| {
                    let lt = p.lambda() * t;
                    let kmax = (lt + 20.0 * lt.sqrt() + 50.0) as u64;
                    let (mut mean, mut second) = (0.0, 0.0);
                    for k in 0..=kmax {
                        let q = poisson_pmf(p, k, t)?;
                        mean += k as f64 * q;
                        second += (k * k) as f64 * q;
                    }
                    Ok((mean - lt).abs().max((second - mean * mean - lt).abs()))
                })();
                r.within(format!("process {name}: mean and variance are λt"), check, 1e-10);
                let check = (|| {
                    let lt = p.lambda() * t;
                    let k = (lt + 20.0 * lt.sqrt() + 50.0) as usize;
                    let g = Generator::pure_birth(p.lambda(), k)?;
                    let pt = g.transition_matrix(t)?;
                    let mut worst = 0.0f64;
                    for i in 0..3.min(k) {
                        for j in 0..k / 2 {
                            let a = poisson_transition(p, i as u64, j as u64, t)?;
                            worst = worst.max((a - pt.entry(i, j)).abs());
                        }
                    }
                    Ok(worst)
                })();
                r.within(format!("process {name}: agrees with the pure-birth chain"), check, 1e-8);
            }
            Process::Wiener(w) => {
                r.within(
                    format!("process {name}: Chapman-Kolmogorov"),
                    ck_check_continuous(w, 0.0, 0.5, 1.0),
                    1e-8,
                );
            }
            Process::Brownian(b) => {
                let check = (|| {
                    let f = |y: f64| brownian_density(b, y, t).unwrap_or(0.0);
                    let cfg = QuadConfig::default();
                    let mean = quadrature::integrate_line(|y| y * f(y), b.mu() * t, b.sigma(), &cfg)?.value;
                    let var =
                        quadrature::integrate_line(|y| (y - b.mu() * t).powi(2) * f(y), b.mu() * t, b.sigma(), &cfg)?
                            .value;
                    let s2 = b.sigma() * b.sigma() * t;
                    Ok((mean - b.mu() * t).abs().max((var - s2).abs() / s2.max(1.0)))
                })();
                r.within(format!("process {name}: drift μt and variance σ²t"), check, 1e-8);
            }
        }
        let (mean, var) = proc.moments(t);
        let check = empirical_moments(proc, t, PATHS, SEED).map(|mo| {
            let band = 4.0 * (var / PATHS as f64).sqrt();
            ((mo.mean - mean).abs() <= band, format!("sample mean {:.6} vs {mean:.6} ± {band:.2e}", mo.mean))
        });
        r.push(format!("process {name}: Monte Carlo mean"), check);
    }
}
