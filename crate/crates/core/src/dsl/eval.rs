//! Evaluation of parsed expressions against a loaded model.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{EventExpr, Expr, Lhs, ObsTree, Rhs};
use super::model::{Density, Domain, Model, ObservableKind, Region};
use crate::continuous::{Density as _, Interval, PlanarRegion, Region as _};
use crate::ctmc::doi_expectation;
use crate::dtmc::ProbVector;
use crate::observables::{conditional_expectation, expectation, variance, Observable};
use crate::sample::{DiscreteSpace, EventSet};
use crate::{Error, Result};

/// Extra numeric names usable inside observable trees.
pub type Bindings = BTreeMap<String, f64>;

pub fn evaluate(e: &Expr, m: &Model) -> Result<f64> {
    evaluate_with(e, m, &Bindings::new())
}

pub fn evaluate_with(e: &Expr, m: &Model, bindings: &Bindings) -> Result<f64> {
    Evaluator { m, bindings }.expr(e)
}

struct Evaluator<'a> {
    m: &'a Model,
    bindings: &'a Bindings,
}

fn mismatch(msg: impl Into<String>) -> Error {
    Error::TypeMismatch(msg.into())
}

impl<'a> Evaluator<'a> {
    fn expr(&self, e: &Expr) -> Result<f64> {
        match e {
            Expr::Bracket { lhs, mids, rhs } => self.bracket(lhs, mids, rhs),
            Expr::Expect { obs, given } => self.expect(obs, given.as_ref()),
            Expr::Var { obs } => self.var(obs),
        }
    }

    /// Finds the single declaration that every name in the expression lives
    /// on. Atoms that are not declared events may be outcome labels.
    fn domain(&self, atoms: &[&str], observables: &[&str], chain: bool) -> Result<Option<String>> {
        let mut declared = BTreeSet::new();
        let mut labels = Vec::new();
        for a in atoms {
            if let Some(ev) = self.m.events.get(*a) {
                declared.insert(ev.space.clone());
            } else if self.m.observables.contains_key(*a) {
                return Err(mismatch(format!("`{a}` is an observable where an event is expected")));
            } else {
                labels.push(*a);
            }
        }
        for o in observables {
            if let Some(decl) = self.m.observables.get(*o) {
                declared.insert(decl.space.clone());
            } else if self.bindings.contains_key(*o) {
            } else if self.m.events.contains_key(*o) {
                return Err(mismatch(format!("`{o}` is an event where an observable is expected")));
            } else {
                return Err(Error::Unresolved(o.to_string()));
            }
        }
        let candidates: Vec<String> = if let Some(first) = declared.iter().next() {
            if declared.len() > 1 {
                return Err(mismatch(format!(
                    "names from different spaces: {}",
                    declared.iter().cloned().collect::<Vec<_>>().join(", ")
                )));
            }
            vec![first.clone()]
        } else if !labels.is_empty() {
            self.discrete_names()
                .filter(|n| labels.iter().all(|l| self.m.labels(n).unwrap().iter().any(|x| x == l)))
                .collect()
        } else if chain {
            self.m.chains.keys().chain(self.m.generators.keys()).cloned().collect()
        } else {
            return Ok(None);
        };
        if let Some(l) = labels.iter().find(|l| {
            !candidates
                .iter()
                .any(|c| self.m.labels(c).is_some_and(|ls| ls.iter().any(|x| x == *l)))
        }) {
            return Err(Error::Unresolved(l.to_string()));
        }
        match candidates.len() {
            0 => Err(Error::Unresolved("Omega_t (no chain or generator declared)".into())),
            1 => {
                let d = candidates.into_iter().next().unwrap();
                if chain && !matches!(self.m.domain(&d), Some(Domain::Chain | Domain::Generator)) {
                    return Err(mismatch(format!("`Omega_t` needs a chain, but `{d}` is a {}", self.kind(&d))));
                }
                Ok(Some(d))
            }
            _ => Err(Error::Domain(format!("ambiguous: could refer to any of {}", candidates.join(", ")))),
        }
    }

    fn discrete_names(&self) -> impl Iterator<Item = String> + '_ {
        self.m
            .spaces
            .keys()
            .chain(self.m.chains.keys())
            .chain(self.m.generators.keys())
            .cloned()
    }

    fn kind(&self, name: &str) -> &'static str {
        self.m.domain(name).map_or("missing", Domain::name)
    }

    fn event_set(&self, e: &EventExpr, domain: &str) -> Result<EventSet> {
        let labels = self.m.labels(domain).expect("discrete domain");
        let all = || EventSet::from_labels(labels.iter().cloned());
        Ok(match e {
            EventExpr::Atom(a) => match self.m.events.get(a) {
                Some(ev) => match &ev.region {
                    Region::Set(s) => s.clone(),
                    _ => return Err(mismatch(format!("`{a}` is a continuous region"))),
                },
                None => EventSet::from_labels([a.clone()]),
            },
            EventExpr::Union(a, b) => self.event_set(a, domain)?.union(&self.event_set(b, domain)?),
            EventExpr::Intersect(a, b) => self.event_set(a, domain)?.intersection(&self.event_set(b, domain)?),
            EventExpr::Complement(a) => all().difference(&self.event_set(a, domain)?),
            EventExpr::Paren(a) => self.event_set(a, domain)?,
        })
    }

    fn interval(&self, e: &EventExpr) -> Result<Interval> {
        match e {
            EventExpr::Atom(a) => match self.m.events.get(a).map(|ev| &ev.region) {
                Some(Region::Interval(i)) => Ok(*i),
                _ => Err(Error::Unresolved(a.clone())),
            },
            EventExpr::Intersect(a, b) => Ok(self.interval(a)?.intersect(&self.interval(b)?)),
            EventExpr::Paren(a) => self.interval(a),
            _ => Err(mismatch("events on a line density support only intersection")),
        }
    }

    fn planar(&self, e: &EventExpr, support: &PlanarRegion) -> Result<PlanarRegion> {
        match e {
            EventExpr::Atom(a) => match self.m.events.get(a).map(|ev| &ev.region) {
                Some(Region::Planar(r)) => Ok(r.clone()),
                _ => Err(Error::Unresolved(a.clone())),
            },
            EventExpr::Intersect(a, b) => Ok(self.planar(a, support)?.intersect(&self.planar(b, support)?)),
            EventExpr::Union(a, b) => {
                let (a, b) = (self.planar(a, support)?, self.planar(b, support)?);
                let (x, y) = ((a.x.0.min(b.x.0), a.x.1.max(b.x.1)), (a.y.0.min(b.y.0), a.y.1.max(b.y.1)));
                Ok(PlanarRegion::new(x, y, move |x, y| a.contains((x, y)) || b.contains((x, y))))
            }
            EventExpr::Complement(a) => {
                let a = self.planar(a, support)?;
                Ok(PlanarRegion::new(support.x, support.y, move |x, y| !a.contains((x, y))))
            }
            EventExpr::Paren(a) => self.planar(a, support),
        }
    }

    /// Observable values in the label order of a discrete domain.
    fn table(&self, t: &ObsTree, domain: &str) -> Result<Vec<f64>> {
        let labels = self.m.labels(domain).expect("discrete domain");
        let mut columns: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for name in t.names() {
            if let Some(decl) = self.m.observables.get(name) {
                match &decl.kind {
                    ObservableKind::Table(o) => {
                        columns.insert(name, o.resolve_labels(labels)?);
                    }
                    ObservableKind::Coordinate(_) => return Err(mismatch(format!("`{name}` is a density coordinate"))),
                }
            }
        }
        Ok((0..labels.len())
            .map(|i| {
                t.eval_with(&mut |n| match columns.get(n) {
                    Some(c) => c[i],
                    None => self.bindings[n],
                })
            })
            .collect())
    }

    fn point_fn<'b>(&'b self, t: &'b ObsTree) -> Result<impl Fn(&[f64]) -> f64 + 'b> {
        let mut coords = BTreeMap::new();
        for name in t.names() {
            if let Some(decl) = self.m.observables.get(name) {
                match decl.kind {
                    ObservableKind::Coordinate(i) => {
                        coords.insert(name.to_string(), i);
                    }
                    ObservableKind::Table(_) => return Err(mismatch(format!("`{name}` is not a density coordinate"))),
                }
            }
        }
        Ok(move |p: &[f64]| {
            t.eval_with(&mut |n| match coords.get(n) {
                Some(i) => p[*i],
                None => self.bindings[n],
            })
        })
    }

    fn space(&self, domain: &str) -> &DiscreteSpace {
        self.m.spaces[domain].outcomes()
    }

    /// The distribution a chain or generator is in at `Omega_t`.
    fn state(&self, domain: &str, t: f64) -> Result<ProbVector> {
        if let Some(c) = self.m.chains.get(domain) {
            if t < 0.0 || t.fract() != 0.0 {
                return Err(mismatch(format!("chain `{domain}` takes whole steps, got Omega_{t}")));
            }
            let u0 = c
                .initial
                .as_ref()
                .ok_or_else(|| Error::Model(format!("chain `{domain}` has no initial distribution")))?;
            c.matrix.evolve_left(u0, t as u64)
        } else {
            let g = &self.m.generators[domain];
            let p0 = g
                .initial
                .as_ref()
                .ok_or_else(|| Error::Model(format!("generator `{domain}` has no initial distribution")))?;
            g.generator.evolve_density(p0, t)
        }
    }

    fn mids_tree(mids: &[String]) -> ObsTree {
        let mut it = mids.iter().map(|n| ObsTree::Name(n.clone()));
        let first = it.next().expect("mids nonempty");
        it.fold(first, |acc, n| ObsTree::Product(Box::new(acc), Box::new(n)))
    }

    fn bracket(&self, lhs: &Lhs, mids: &[String], rhs: &Rhs) -> Result<f64> {
        if !mids.is_empty() && (*lhs != Lhs::Omega || matches!(rhs, Rhs::Event(_))) {
            return Err(mismatch("observables inside a bracket need Omega on both sides"));
        }
        let mut atoms = Vec::new();
        if let Lhs::Event(e) = lhs {
            atoms.extend(e.atoms());
        }
        if let Rhs::Event(e) = rhs {
            atoms.extend(e.atoms());
        }
        let mid_names: Vec<&str> = mids.iter().map(String::as_str).collect();
        let chain = matches!(rhs, Rhs::OmegaT(_));
        let Some(domain) = self.domain(&atoms, &mid_names, chain)? else {
            return Ok(1.0);
        };
        if !mids.is_empty() {
            let tree = Self::mids_tree(mids);
            return match rhs {
                Rhs::OmegaT(t) => self.state_expectation(&tree, &domain, *t),
                _ => self.expect(&tree, None),
            };
        }
        match self.m.domain(&domain) {
            Some(Domain::Space) => {
                let space = self.space(&domain);
                let a = match lhs {
                    Lhs::Omega => space.omega(),
                    Lhs::Event(e) => self.event_set(e, &domain)?,
                };
                match rhs {
                    Rhs::Omega => space.probability(&a),
                    Rhs::Event(e) => space.bracket(&a, &self.event_set(e, &domain)?),
                    Rhs::OmegaT(_) => unreachable!("domain check requires a chain"),
                }
            }
            Some(Domain::Chain | Domain::Generator) => {
                let t = match rhs {
                    Rhs::OmegaT(t) => *t,
                    Rhs::Omega => 0.0,
                    Rhs::Event(_) => {
                        return Err(mismatch(format!("evidence on `{domain}` must be Omega or Omega_t")))
                    }
                };
                let p = self.state(&domain, t)?;
                match lhs {
                    Lhs::Omega => Ok(p.weights().iter().sum()),
                    Lhs::Event(e) => {
                        let a = self.event_set(e, &domain)?;
                        Ok(p.states()
                            .iter()
                            .zip(p.weights())
                            .filter(|(s, _)| a.contains(s))
                            .map(|(_, w)| w)
                            .sum())
                    }
                }
            }
            Some(Domain::Density) => match &self.m.densities[&domain] {
                Density::Line(d) => {
                    let a = match lhs {
                        Lhs::Omega => d.support(),
                        Lhs::Event(e) => self.interval(e)?,
                    };
                    match rhs {
                        Rhs::Omega => d.region_probability(&a),
                        Rhs::Event(e) => d.conditional_probability(&a, &self.interval(e)?),
                        Rhs::OmegaT(_) => unreachable!("domain check requires a chain"),
                    }
                }
                Density::Plane(d) => {
                    let support = d.support();
                    let a = match lhs {
                        Lhs::Omega => support.clone(),
                        Lhs::Event(e) => self.planar(e, &support)?,
                    };
                    match rhs {
                        Rhs::Omega => d.region_probability(&a),
                        Rhs::Event(e) => d.conditional_probability(&a, &self.planar(e, &support)?),
                        Rhs::OmegaT(_) => unreachable!("domain check requires a chain"),
                    }
                }
            },
            _ => Err(mismatch(format!("`{domain}` is a {}", self.kind(&domain)))),
        }
    }

    fn state_expectation(&self, tree: &ObsTree, domain: &str, t: f64) -> Result<f64> {
        let p = self.state(domain, t)?;
        let values = self.table(tree, domain)?;
        let x = Observable::from_pairs(p.states().iter().cloned().zip(values));
        if self.m.generators.contains_key(domain) {
            doi_expectation(&x, &p)
        } else {
            Ok(x.resolve_labels(p.states())?
                .iter()
                .zip(p.weights())
                .map(|(a, b)| a * b)
                .sum())
        }
    }

    fn expect(&self, obs: &ObsTree, given: Option<&EventExpr>) -> Result<f64> {
        let atoms = given.map(EventExpr::atoms).unwrap_or_default();
        let Some(domain) = self.domain(&atoms, &obs.names(), false)? else {
            return Ok(obs.eval_with(&mut |n| self.bindings[n]));
        };
        match self.m.domain(&domain) {
            Some(Domain::Space) => {
                let space = self.space(&domain);
                let x = Observable::from_pairs(space.labels().iter().cloned().zip(self.table(obs, &domain)?));
                match given {
                    None => expectation(space, &x),
                    Some(e) => conditional_expectation(space, &x, &self.event_set(e, &domain)?),
                }
            }
            Some(Domain::Chain | Domain::Generator) => {
                if given.is_some() {
                    return Err(mismatch("conditional expectations are not defined on chains"));
                }
                self.state_expectation(obs, &domain, 0.0)
            }
            Some(Domain::Density) => {
                let g = self.point_fn(obs)?;
                match &self.m.densities[&domain] {
                    Density::Line(d) => match given {
                        None => d.expectation(|x| g(&[x])),
                        Some(e) => {
                            let r = self.interval(e)?;
                            let pe = d.evidence(&r)?;
                            Ok(d.integrate_over(&r, |x| g(&[x]))? / pe)
                        }
                    },
                    Density::Plane(d) => match given {
                        None => d.expectation(|(x, y)| g(&[x, y])),
                        Some(e) => {
                            let r = self.planar(e, &d.support())?;
                            let pe = d.evidence(&r)?;
                            Ok(d.integrate_over(&r, |(x, y)| g(&[x, y]))? / pe)
                        }
                    },
                }
            }
            _ => Err(mismatch(format!("`{domain}` is a {}", self.kind(&domain)))),
        }
    }

    fn var(&self, obs: &ObsTree) -> Result<f64> {
        let Some(domain) = self.domain(&[], &obs.names(), false)? else {
            return Ok(0.0);
        };
        match self.m.domain(&domain) {
            Some(Domain::Space) => {
                let space = self.space(&domain);
                let x = Observable::from_pairs(space.labels().iter().cloned().zip(self.table(obs, &domain)?));
                variance(space, &x)
            }
            Some(Domain::Chain | Domain::Generator) => {
                let mean = self.state_expectation(obs, &domain, 0.0)?;
                let centred = ObsTree::Sum(Box::new(obs.clone()), Box::new(ObsTree::Number(-mean)));
                let sq = ObsTree::Product(Box::new(centred.clone()), Box::new(centred));
                Ok(self.state_expectation(&sq, &domain, 0.0)?.max(0.0))
            }
            Some(Domain::Density) => {
                let g = self.point_fn(obs)?;
                let v = match &self.m.densities[&domain] {
                    Density::Line(d) => {
                        let mean = d.expectation(|x| g(&[x]))?;
                        d.expectation(|x| (g(&[x]) - mean).powi(2))?
                    }
                    Density::Plane(d) => {
                        let mean = d.expectation(|(x, y)| g(&[x, y]))?;
                        d.expectation(|(x, y)| (g(&[x, y]) - mean).powi(2))?
                    }
                };
                Ok(v.max(0.0))
            }
            _ => Err(mismatch(format!("`{domain}` is a {}", self.kind(&domain)))),
        }
    }
}
