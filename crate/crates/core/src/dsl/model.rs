//! JSON model files.
//!
//! A model declares named spaces, events, observables, discrete- and
//! continuous-time chains, densities and processes. Masses, rates and matrix
//! entries may be JSON numbers or strings such as `"1/6"`, which are divided
//! exactly and rounded once.
//!
//! ```json
//! {
//!   "spaces": { "die": { "outcomes": ["1", "2", "3", "4", "5", "6"] } },
//!   "events": { "even": { "space": "die", "members": ["2", "4", "6"] } },
//!   "observables": { "X": { "space": "die", "numeric_labels": true } }
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::continuous::{Density1D, Density2D, Interval, PlanarRegion};
use crate::ctmc::{GainLossRates, Generator};
use crate::dtmc::{Orientation, ProbVector, StochasticMatrix};
use crate::linalg::Matrix;
use crate::observables::{Observable, ProductSpace};
use crate::processes::{BrownianMotion, PoissonProcess, Process, WienerProcess};
use crate::sample::{DiscreteSpace, EventSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Num {
    Float(f64),
    Text(String),
}

impl Num {
    fn value(&self) -> Result<f64> {
        match self {
            Num::Float(v) => Ok(*v),
            Num::Text(s) => parse_number(s),
        }
    }
}

/// Parses `"p/q"` with integer `p`, `q` exactly, or any decimal literal.
pub fn parse_number(s: &str) -> Result<f64> {
    let bad = || Error::Model(format!("`{s}` is not a number"));
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        let limit = 1i64 << 53;
        if p.abs() > limit || q.abs() > limit {
            return Err(Error::Model(format!("`{s}` needs integers below 2^53")));
        }
        // Both operands are exact, so IEEE division rounds the quotient once.
        return Ok(p as f64 / q as f64);
    }
    s.parse().map_err(|_| bad())
}

fn values(nums: &[Num]) -> Result<Vec<f64>> {
    nums.iter().map(Num::value).collect()
}

/// Initial distributions: explicit weights, or a state label for a point mass.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawInitial {
    Weights(Vec<Num>),
    State(String),
}

impl RawInitial {
    fn vector(&self, states: &[String], orientation: Orientation) -> Result<ProbVector> {
        match self {
            RawInitial::Weights(w) => ProbVector::new(states.to_vec(), values(w)?, orientation),
            RawInitial::State(s) => ProbVector::one_hot(states, s, orientation),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default)]
    spaces: BTreeMap<String, RawSpace>,
    #[serde(default)]
    events: BTreeMap<String, RawEvent>,
    #[serde(default)]
    observables: BTreeMap<String, RawObservable>,
    #[serde(default)]
    chains: BTreeMap<String, RawChain>,
    #[serde(default)]
    generators: BTreeMap<String, RawGenerator>,
    #[serde(default)]
    densities: BTreeMap<String, RawDensity>,
    #[serde(default)]
    processes: BTreeMap<String, RawProcess>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    outcomes: Option<Vec<String>>,
    masses: Option<Vec<Num>>,
    product: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    space: String,
    members: Option<Vec<String>>,
    region: Option<RawRegion>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawRegion {
    Interval { lo: Option<Num>, hi: Option<Num> },
    Disc { center: [Num; 2], radius: Num },
    Rectangle { x: [Num; 2], y: [Num; 2] },
    UpperHalf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservable {
    space: String,
    values: Option<BTreeMap<String, Num>>,
    #[serde(default)]
    numeric_labels: bool,
    coordinate: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    states: Vec<String>,
    matrix: Vec<Vec<Num>>,
    initial: Option<RawInitial>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRate {
    from: String,
    to: String,
    rate: Num,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBirthDeath {
    max: usize,
    birth: Num,
    #[serde(default)]
    death: Option<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    states: Option<Vec<String>>,
    matrix: Option<Vec<Vec<Num>>>,
    rates: Option<Vec<RawRate>>,
    birth_death: Option<RawBirthDeath>,
    initial: Option<RawInitial>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawDensity {
    UniformDisc,
    Exponential { lambda: Num },
    Normal { mean: Num, variance: Num },
    Uniform { lo: Num, hi: Num },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawProcess {
    Poisson { lambda: Num },
    Wiener { sigma: Num },
    Brownian { x0: Option<Num>, mu: Num, sigma: Num },
}

#[derive(Debug, Clone)]
pub enum Space {
    Discrete(DiscreteSpace),
    Product(ProductSpace),
}

impl Space {
    /// The space events and observables are evaluated on.
    pub fn outcomes(&self) -> &DiscreteSpace {
        match self {
            Space::Discrete(s) => s,
            Space::Product(p) => p.joint(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Density {
    Line(Density1D),
    Plane(Density2D),
}

#[derive(Debug, Clone)]
pub enum Region {
    Set(EventSet),
    Interval(Interval),
    Planar(PlanarRegion),
}

#[derive(Debug, Clone)]
pub struct Event {
    pub space: String,
    pub region: Region,
}

#[derive(Debug, Clone)]
pub enum ObservableKind {
    Table(Observable),
    /// The `i`-th coordinate of a density's point.
    Coordinate(usize),
}

#[derive(Debug, Clone)]
pub struct ObservableDecl {
    pub space: String,
    pub kind: ObservableKind,
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub matrix: StochasticMatrix,
    pub initial: Option<ProbVector>,
}

#[derive(Debug, Clone)]
pub struct Ctmc {
    pub generator: Generator,
    pub initial: Option<ProbVector>,
}

/// What a name in the shared namespace refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Space,
    Chain,
    Generator,
    Density,
    Process,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Space => "space",
            Domain::Chain => "chain",
            Domain::Generator => "generator",
            Domain::Density => "density",
            Domain::Process => "process",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Model {
    pub spaces: BTreeMap<String, Space>,
    pub events: BTreeMap<String, Event>,
    pub observables: BTreeMap<String, ObservableDecl>,
    pub chains: BTreeMap<String, Chain>,
    pub generators: BTreeMap<String, Ctmc>,
    pub densities: BTreeMap<String, Density>,
    pub processes: BTreeMap<String, Process>,
}

fn ctx<'a>(what: &'static str, name: &'a str) -> impl Fn(Error) -> Error + 'a {
    move |e| match e {
        Error::Model(m) => Error::Model(format!("{what} `{name}`: {m}")),
        other => Error::Model(format!("{what} `{name}`: {other}")),
    }
}

fn square(rows: &[Vec<Num>], r: usize) -> Result<Matrix> {
    if rows.len() != r || rows.iter().any(|row| row.len() != r) {
        return Err(Error::Model(format!("matrix must be {r}×{r}")));
    }
    let flat: Vec<f64> = rows.iter().flatten().map(Num::value).collect::<Result<_>>()?;
    Ok(Matrix::from_row_slice(r, r, &flat))
}

impl Model {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Model(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawModel = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        let mut m = Model::default();

        let mut products = Vec::new();
        for (name, s) in &raw.spaces {
            match (&s.outcomes, &s.product) {
                (Some(outcomes), None) => {
                    let space = match &s.masses {
                        Some(masses) => DiscreteSpace::new(outcomes.clone(), values(masses)?),
                        None => DiscreteSpace::uniform(outcomes.clone()),
                    }
                    .map_err(ctx("space", name))?;
                    m.spaces.insert(name.clone(), Space::Discrete(space));
                }
                (None, Some(factors)) if s.masses.is_none() => products.push((name, factors)),
                _ => return Err(Error::Model(format!("space `{name}` needs either outcomes or product"))),
            }
        }
        for (name, factors) in products {
            let spaces = factors
                .iter()
                .map(|f| match m.spaces.get(f) {
                    Some(Space::Discrete(s)) => Ok(s.clone()),
                    Some(Space::Product(_)) => Err(Error::Model(format!("space `{name}`: factor `{f}` is a product"))),
                    None => Err(Error::Model(format!("space `{name}`: unknown factor `{f}`"))),
                })
                .collect::<Result<Vec<_>>>()?;
            let p = ProductSpace::new(spaces).map_err(ctx("space", name))?;
            m.spaces.insert(name.clone(), Space::Product(p));
        }

        for (name, c) in &raw.chains {
            let p = square(&c.matrix, c.states.len()).map_err(ctx("chain", name))?;
            let matrix = StochasticMatrix::from_matrix(c.states.clone(), p).map_err(ctx("chain", name))?;
            let initial = c
                .initial
                .as_ref()
                .map(|w| w.vector(&c.states, Orientation::Row))
                .transpose()
                .map_err(ctx("chain", name))?;
            m.chains.insert(name.clone(), Chain { matrix, initial });
        }

        for (name, g) in &raw.generators {
            let generator = Self::generator(g).map_err(ctx("generator", name))?;
            let initial = g
                .initial
                .as_ref()
                .map(|w| w.vector(generator.states(), Orientation::Column))
                .transpose()
                .map_err(ctx("generator", name))?;
            m.generators.insert(name.clone(), Ctmc { generator, initial });
        }

        for (name, d) in &raw.densities {
            let density = match d {
                RawDensity::UniformDisc => Density2D::uniform_disc().map(Density::Plane),
                RawDensity::Exponential { lambda } => Density1D::exponential(lambda.value()?).map(Density::Line),
                RawDensity::Normal { mean, variance } => {
                    Density1D::normal(mean.value()?, variance.value()?).map(Density::Line)
                }
                RawDensity::Uniform { lo, hi } => Density1D::uniform(lo.value()?, hi.value()?).map(Density::Line),
            }
            .map_err(ctx("density", name))?;
            m.densities.insert(name.clone(), density);
        }

        for (name, p) in &raw.processes {
            let process = match p {
                RawProcess::Poisson { lambda } => PoissonProcess::new(lambda.value()?).map(Process::Poisson),
                RawProcess::Wiener { sigma } => WienerProcess::new(sigma.value()?).map(Process::Wiener),
                RawProcess::Brownian { x0, mu, sigma } => BrownianMotion::new(
                    x0.as_ref().map(Num::value).transpose()?.unwrap_or(0.0),
                    mu.value()?,
                    sigma.value()?,
                )
                .map(Process::Brownian),
            }
            .map_err(ctx("process", name))?;
            m.processes.insert(name.clone(), process);
        }

        m.check_namespace()?;

        for (name, e) in &raw.events {
            let region = m.event_region(e).map_err(ctx("event", name))?;
            m.events.insert(
                name.clone(),
                Event {
                    space: e.space.clone(),
                    region,
                },
            );
        }

        for (name, o) in &raw.observables {
            let kind = m.observable(o).map_err(ctx("observable", name))?;
            m.observables.insert(
                name.clone(),
                ObservableDecl {
                    space: o.space.clone(),
                    kind,
                },
            );
        }
        Ok(m)
    }

    fn generator(g: &RawGenerator) -> Result<Generator> {
        match (&g.matrix, &g.rates, &g.birth_death) {
            (Some(rows), None, None) => {
                let states = g.states.clone().ok_or_else(|| Error::Model("missing states".into()))?;
                let q = square(rows, states.len())?;
                Generator::from_matrix(states, q)
            }
            (None, Some(rates), None) => {
                let states = g.states.clone().ok_or_else(|| Error::Model("missing states".into()))?;
                let triples = rates
                    .iter()
                    .map(|r| Ok((r.from.as_str(), r.to.as_str(), r.rate.value()?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(GainLossRates::from_transitions(states, triples)?.generator())
            }
            (None, None, Some(bd)) => {
                if g.states.is_some() {
                    return Err(Error::Model("birth_death numbers its own states".into()));
                }
                let birth = bd.birth.value()?;
                let death = bd.death.as_ref().map(Num::value).transpose()?.unwrap_or(0.0);
                Generator::birth_death(bd.max, |_| birth, |i| death * i as f64)
            }
            _ => Err(Error::Model("give exactly one of matrix, rates or birth_death".into())),
        }
    }

    fn check_namespace(&self) -> Result<()> {
        let mut seen: BTreeMap<&str, Domain> = BTreeMap::new();
        let groups: [(Domain, Vec<&String>); 5] = [
            (Domain::Space, self.spaces.keys().collect()),
            (Domain::Chain, self.chains.keys().collect()),
            (Domain::Generator, self.generators.keys().collect()),
            (Domain::Density, self.densities.keys().collect()),
            (Domain::Process, self.processes.keys().collect()),
        ];
        for (domain, names) in groups {
            for name in names {
                if let Some(prev) = seen.insert(name, domain) {
                    return Err(Error::Model(format!(
                        "`{name}` is declared both as a {} and as a {}",
                        prev.name(),
                        domain.name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Which kind of declaration `name` refers to.
    pub fn domain(&self, name: &str) -> Option<Domain> {
        if self.spaces.contains_key(name) {
            Some(Domain::Space)
        } else if self.chains.contains_key(name) {
            Some(Domain::Chain)
        } else if self.generators.contains_key(name) {
            Some(Domain::Generator)
        } else if self.densities.contains_key(name) {
            Some(Domain::Density)
        } else if self.processes.contains_key(name) {
            Some(Domain::Process)
        } else {
            None
        }
    }

    /// Outcome or state labels of a discrete domain.
    pub fn labels(&self, name: &str) -> Option<&[String]> {
        if let Some(s) = self.spaces.get(name) {
            Some(s.outcomes().labels())
        } else if let Some(c) = self.chains.get(name) {
            Some(c.matrix.states())
        } else {
            self.generators.get(name).map(|g| g.generator.states())
        }
    }

    fn event_region(&self, e: &RawEvent) -> Result<Region> {
        let domain = self
            .domain(&e.space)
            .ok_or_else(|| Error::Model(format!("unknown space `{}`", e.space)))?;
        match (&e.members, &e.region, domain) {
            (Some(members), None, Domain::Space | Domain::Chain | Domain::Generator) => {
                let labels = self.labels(&e.space).expect("discrete domain has labels");
                if let Some(bad) = members.iter().find(|m| !labels.contains(m)) {
                    return Err(Error::UnknownLabel(bad.clone()));
                }
                Ok(Region::Set(EventSet::from_labels(members.iter().cloned())))
            }
            (None, Some(r), Domain::Density) => {
                let density = &self.densities[&e.space];
                match (r, density) {
                    (RawRegion::Interval { lo, hi }, Density::Line(_)) => {
                        let lo = lo.as_ref().map(Num::value).transpose()?.unwrap_or(f64::NEG_INFINITY);
                        let hi = hi.as_ref().map(Num::value).transpose()?.unwrap_or(f64::INFINITY);
                        if !(lo <= hi) {
                            return Err(Error::Model(format!("interval [{lo}, {hi}] is reversed")));
                        }
                        Ok(Region::Interval(Interval::new(lo, hi)))
                    }
                    (RawRegion::Disc { center, radius }, Density::Plane(_)) => {
                        let r = radius.value()?;
                        if !(r > 0.0) {
                            return Err(Error::Model(format!("radius {r} must be positive")));
                        }
                        Ok(Region::Planar(PlanarRegion::disc(center[0].value()?, center[1].value()?, r)))
                    }
                    (RawRegion::Rectangle { x, y }, Density::Plane(_)) => Ok(Region::Planar(PlanarRegion::rectangle(
                        (x[0].value()?, x[1].value()?),
                        (y[0].value()?, y[1].value()?),
                    ))),
                    (RawRegion::UpperHalf, Density::Plane(d)) => {
                        use crate::continuous::Density as _;
                        let s = d.support();
                        let extent = [s.x.0, s.x.1, s.y.0, s.y.1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                        Ok(Region::Planar(PlanarRegion::upper_half(extent)))
                    }
                    _ => Err(Error::Model("region kind does not match the density's dimension".into())),
                }
            }
            _ => Err(Error::Model(format!(
                "events on a {} need {}",
                domain.name(),
                if domain == Domain::Density { "a region" } else { "members" }
            ))),
        }
    }

    fn observable(&self, o: &RawObservable) -> Result<ObservableKind> {
        let domain = self
            .domain(&o.space)
            .ok_or_else(|| Error::Model(format!("unknown space `{}`", o.space)))?;
        let forms = o.values.is_some() as u8 + o.numeric_labels as u8 + o.coordinate.is_some() as u8;
        if forms != 1 {
            return Err(Error::Model("give exactly one of values, numeric_labels or coordinate".into()));
        }
        match domain {
            Domain::Density => match (o.coordinate, &self.densities[&o.space]) {
                (Some(0), Density::Line(_)) | (Some(0 | 1), Density::Plane(_)) => {
                    Ok(ObservableKind::Coordinate(o.coordinate.unwrap()))
                }
                (Some(i), _) => Err(Error::Model(format!("coordinate {i} out of range"))),
                _ => Err(Error::Model("observables on densities are coordinates".into())),
            },
            Domain::Process => Err(Error::Model("observables cannot live on processes".into())),
            _ => {
                let labels = self.labels(&o.space).expect("discrete domain has labels").to_vec();
                let obs = if let Some(values) = &o.values {
                    let pairs = values
                        .iter()
                        .map(|(k, v)| Ok((k.clone(), v.value()?)))
                        .collect::<Result<Vec<_>>>()?;
                    if let Some((k, _)) = pairs.iter().find(|(k, _)| !labels.contains(k)) {
                        return Err(Error::UnknownLabel(k.clone()));
                    }
                    Observable::from_pairs(pairs)
                } else if o.numeric_labels {
                    let pairs = labels
                        .iter()
                        .map(|l| Ok((l.clone(), crate::observables::parse_numeral(l)?)))
                        .collect::<Result<Vec<_>>>()?;
                    Observable::from_pairs(pairs)
                } else {
                    let i = o.coordinate.unwrap();
                    match self.spaces.get(&o.space) {
                        Some(Space::Product(p)) => p.coordinate_observable(i)?,
                        _ => return Err(Error::Model("coordinate observables need a product space".into())),
                    }
                };
                obs.resolve_labels(&labels)?;
                Ok(ObservableKind::Table(obs))
            }
        }
    }
}
