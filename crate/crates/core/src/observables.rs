//! Observables on finite spaces and independent product spaces.

use std::collections::HashMap;

use crate::sample::{DiscreteSpace, EventSet, Partition};
use crate::{Error, Result, Tolerances};

/// A real-valued assignment `ω ↦ x(ω)` acting diagonally on base outcomes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observable {
    values: HashMap<String, f64>,
}

impl Observable {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Observable {
            values: pairs.into_iter().map(|(l, v)| (l.into(), v)).collect(),
        }
    }

    /// Evaluates `f` on every outcome label of `space`.
    pub fn from_fn(space: &DiscreteSpace, f: impl Fn(&str) -> f64) -> Self {
        Self::from_pairs(space.labels().iter().map(|l| (l.clone(), f(l))))
    }

    pub fn constant(space: &DiscreteSpace, c: f64) -> Self {
        Self::from_fn(space, |_| c)
    }

    /// `X(ω) = ω` for spaces whose labels are decimal numerals.
    pub fn numeric_labels(space: &DiscreteSpace) -> Result<Self> {
        let mut values = HashMap::with_capacity(space.len());
        for label in space.labels() {
            values.insert(label.clone(), parse_numeral(label)?);
        }
        Ok(Observable { values })
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.values.get(label).copied()
    }

    /// Values in the outcome order of `space`.
    pub fn resolve(&self, space: &DiscreteSpace) -> Result<Vec<f64>> {
        self.resolve_labels(space.labels())
    }

    /// Values in the order of `labels`, e.g. the states of a chain.
    pub fn resolve_labels(&self, labels: &[String]) -> Result<Vec<f64>> {
        labels
            .iter()
            .map(|l| self.get(l).ok_or_else(|| Error::Totality(l.clone())))
            .collect()
    }

    /// Pointwise combination; both observables must be defined on `space`.
    pub fn zip_with(
        &self,
        other: &Observable,
        space: &DiscreteSpace,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Observable> {
        let a = self.resolve(space)?;
        let b = other.resolve(space)?;
        Ok(Self::from_pairs(
            space
                .labels()
                .iter()
                .zip(a.iter().zip(&b))
                .map(|(l, (&x, &y))| (l.clone(), f(x, y))),
        ))
    }
}

pub(crate) fn parse_numeral(label: &str) -> Result<f64> {
    label
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::NonNumericLabel(label.to_string()))
}

/// `⟨X⟩ = P(Ω|X|Ω) = Σ x(ω) m(ω)`.
pub fn expectation(space: &DiscreteSpace, x: &Observable) -> Result<f64> {
    expectation_fn(space, |v| v, x)
}

/// `⟨F(X)⟩ = Σ F(x(ω)) m(ω)`.
pub fn expectation_fn(
    space: &DiscreteSpace,
    f: impl Fn(f64) -> f64,
    x: &Observable,
) -> Result<f64> {
    let values = x.resolve(space)?;
    Ok(values
        .iter()
        .zip(space.masses())
        .map(|(&v, &m)| f(v) * m)
        .sum())
}

/// `σ² = Σ (x − x̄)² m`, evaluated in two passes.
///
/// Results within [`Tolerances::algebraic`] below zero are clamped to zero.
pub fn variance(space: &DiscreteSpace, x: &Observable) -> Result<f64> {
    let mean = expectation(space, x)?;
    let var = expectation_fn(space, |v| (v - mean) * (v - mean), x)?;
    if var < -Tolerances::DEFAULT.algebraic {
        return Err(Error::domain(format!("negative variance {var}")));
    }
    Ok(var.max(0.0))
}

/// `⟨X²⟩ − ⟨X⟩²`; kept as a cross-check for [`variance`].
pub fn variance_by_moments(space: &DiscreteSpace, x: &Observable) -> Result<f64> {
    let mean = expectation(space, x)?;
    Ok(expectation_fn(space, |v| v * v, x)? - mean * mean)
}

/// `E(X|F) = Σ_{ω∈F} x(ω) m(ω) / P(F)`.
pub fn conditional_expectation(
    space: &DiscreteSpace,
    x: &Observable,
    given: &EventSet,
) -> Result<f64> {
    let ket = space.ket_expansion(given)?;
    let values = x.resolve(space)?;
    Ok(values.iter().zip(&ket).map(|(v, (_, p))| v * p).sum())
}

/// `Σⱼ E(X|Fⱼ) P(Fⱼ)` over a partition, skipping zero-mass blocks.
pub fn partition_expectation(
    space: &DiscreteSpace,
    x: &Observable,
    part: &Partition,
) -> Result<f64> {
    let part = space.validate_partition(part.blocks().to_vec())?;
    let mut total = 0.0;
    for block in part.blocks() {
        let p = space.probability(block)?;
        if p > 0.0 {
            total += conditional_expectation(space, x, block)? * p;
        }
    }
    Ok(total)
}

/// Independent joint space `Ω₁ × … × Ωₙ` with product masses.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpace {
    factors: Vec<DiscreteSpace>,
    joint: DiscreteSpace,
    tuples: Vec<Vec<usize>>,
    numeric: Vec<Option<Vec<f64>>>,
}

impl ProductSpace {
    /// Joint outcomes are the factor labels joined with `,`, enumerated with
    /// the first factor varying slowest.
    pub fn new(factors: Vec<DiscreteSpace>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::domain("a product space needs at least one factor"));
        }
        let mut tuples: Vec<Vec<usize>> = vec![vec![]];
        for f in &factors {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    (0..f.len()).map(move |i| {
                        let mut t = t.clone();
                        t.push(i);
                        t
                    })
                })
                .collect();
        }
        let labels: Vec<String> = tuples
            .iter()
            .map(|t| {
                t.iter()
                    .zip(&factors)
                    .map(|(&i, f)| f.labels()[i].as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        let masses: Vec<f64> = tuples
            .iter()
            .map(|t| t.iter().zip(&factors).map(|(&i, f)| f.masses()[i]).product())
            .collect();
        let joint = DiscreteSpace::new(labels, masses)?;
        let numeric = factors
            .iter()
            .map(|f| {
                f.labels()
                    .iter()
                    .map(|l| parse_numeral(l))
                    .collect::<Result<Vec<_>>>()
                    .ok()
            })
            .collect();
        Ok(ProductSpace {
            factors,
            joint,
            tuples,
            numeric,
        })
    }

    pub fn factors(&self) -> &[DiscreteSpace] {
        &self.factors
    }

    pub fn joint(&self) -> &DiscreteSpace {
        &self.joint
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.factors.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.factors.len(),
            });
        }
        Ok(())
    }

    fn numeric_factor(&self, i: usize) -> Result<&[f64]> {
        self.check_index(i)?;
        match &self.numeric[i] {
            Some(v) => Ok(v),
            None => {
                let bad = self.factors[i]
                    .labels()
                    .iter()
                    .find(|l| parse_numeral(l).is_err())
                    .cloned()
                    .unwrap_or_default();
                Err(Error::NonNumericLabel(bad))
            }
        }
    }

    /// Sums joint masses over every coordinate except `i`.
    pub fn marginal(&self, i: usize) -> Result<DiscreteSpace> {
        self.check_index(i)?;
        let factor = &self.factors[i];
        let mut masses = vec![0.0; factor.len()];
        for (t, m) in self.tuples.iter().zip(self.joint.masses()) {
            masses[t[i]] += m;
        }
        DiscreteSpace::new(factor.labels().to_vec(), masses)
    }

    /// Joint outcomes whose coordinate `i` equals `label`.
    pub fn coordinate_event(&self, i: usize, label: &str) -> Result<EventSet> {
        self.check_index(i)?;
        let k = self.factors[i].index_of(label)?;
        Ok(self
            .tuples
            .iter()
            .zip(self.joint.labels())
            .filter(|(t, _)| t[i] == k)
            .map(|(_, l)| l.clone())
            .collect())
    }

    /// The coordinate observable `Xᵢ(r) = rᵢ` on the joint space.
    pub fn coordinate_observable(&self, i: usize) -> Result<Observable> {
        let values = self.numeric_factor(i)?;
        Ok(Observable::from_pairs(
            self.tuples
                .iter()
                .zip(self.joint.labels())
                .map(|(t, l)| (l.clone(), values[t[i]])),
        ))
    }

    /// `E[Xᵢᵏ]` on factor `i` alone.
    pub fn factor_moment(&self, i: usize, k: u32) -> Result<f64> {
        let values = self.numeric_factor(i)?;
        Ok(values
            .iter()
            .zip(self.factors[i].masses())
            .map(|(v, m)| pow(*v, k) * m)
            .sum())
    }

    /// `E[Π Xᵢ^{kᵢ}]` by enumerating the joint space.
    ///
    /// Under the product construction this equals `Π E[Xᵢ^{kᵢ}]`.
    pub fn moment_product(&self, exponents: &[u32]) -> Result<f64> {
        if exponents.len() != self.factors.len() {
            return Err(Error::domain(format!(
                "{} exponents for {} factors",
                exponents.len(),
                self.factors.len()
            )));
        }
        let columns = (0..self.factors.len())
            .map(|i| {
                if exponents[i] == 0 {
                    Ok(None)
                } else {
                    self.numeric_factor(i).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self
            .tuples
            .iter()
            .zip(self.joint.masses())
            .map(|(t, m)| {
                let mono: f64 = columns
                    .iter()
                    .zip(exponents)
                    .zip(t)
                    .map(|((col, &k), &idx)| col.map_or(1.0, |c| pow(c[idx], k)))
                    .product();
                mono * m
            })
            .sum())
    }
}

fn pow(v: f64, k: u32) -> f64 {
    v.powi(k as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn die() -> DiscreteSpace {
        DiscreteSpace::uniform(["1", "2", "3", "4", "5", "6"]).unwrap()
    }

    fn face() -> Observable {
        Observable::numeric_labels(&die()).unwrap()
    }

    #[test]
    fn die_expectation() {
        let d = die();
        assert!((expectation(&d, &face()).unwrap() - 3.5).abs() < 1e-12);
        let c = Observable::constant(&d, 2.25);
        assert!((expectation(&d, &c).unwrap() - 2.25).abs() < 1e-12);
    }

    #[test]
    fn expectation_of_functions() {
        let d = die();
        let oracle: f64 = (1..=6).map(|i| (i * i) as f64 / 6.0).sum();
        assert!((oracle - 91.0 / 6.0).abs() < 1e-12);
        let sq = expectation_fn(&d, |v| v * v, &face()).unwrap();
        assert!((sq - oracle).abs() < 1e-12);
        let id = expectation_fn(&d, |v| v, &face()).unwrap();
        assert_eq!(id, expectation(&d, &face()).unwrap());
        assert!((expectation_fn(&d, |_| 1.0, &face()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn die_variance_is_35_over_12() {
        let d = die();
        let oracle: f64 = (1..=6).map(|i| (i as f64 - 3.5).powi(2) / 6.0).sum();
        assert!((oracle - 35.0 / 12.0).abs() < 1e-14);
        assert!((variance(&d, &face()).unwrap() - oracle).abs() < 1e-12);
        assert!((variance_by_moments(&d, &face()).unwrap() - oracle).abs() < 1e-12);
        assert!(variance(&d, &Observable::constant(&d, 4.0)).unwrap() < 1e-24);

        let pm = DiscreteSpace::uniform(["-1", "1"]).unwrap();
        let x = Observable::numeric_labels(&pm).unwrap();
        assert!((variance(&pm, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_value_is_a_totality_error() {
        let d = die();
        let x = Observable::from_pairs([("1", 1.0)]);
        assert_eq!(expectation(&d, &x), Err(Error::Totality("2".into())));
    }

    #[test]
    fn conditional_expectation_examples() {
        let d = die();
        let even = EventSet::from_labels(["2", "4", "6"]);
        let oracle = (2.0 + 4.0 + 6.0) / 3.0;
        let got = conditional_expectation(&d, &face(), &even).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        let got = conditional_expectation(&d, &face(), &d.omega()).unwrap();
        assert!((got - 3.5).abs() < 1e-12);
        let got = conditional_expectation(&d, &face(), &EventSet::from_labels(["5"])).unwrap();
        assert!((got - 5.0).abs() < 1e-12);
        assert_eq!(
            conditional_expectation(&d, &face(), &EventSet::empty()),
            Err(Error::ZeroEvidence)
        );
    }

    #[test]
    fn partition_expectation_examples() {
        let d = die();
        let even = EventSet::from_labels(["2", "4", "6"]);
        let odd = EventSet::from_labels(["1", "3", "5"]);
        let part = d.validate_partition(vec![even, odd]).unwrap();
        assert!((partition_expectation(&d, &face(), &part).unwrap() - 3.5).abs() < 1e-12);
        let part = d.singleton_partition();
        assert!((partition_expectation(&d, &face(), &part).unwrap() - 3.5).abs() < 1e-12);
        let part = d.validate_partition(vec![d.omega()]).unwrap();
        assert!((partition_expectation(&d, &face(), &part).unwrap() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn product_space_construction() {
        let two = ProductSpace::new(vec![die(), die()]).unwrap();
        assert_eq!(two.joint().len(), 36);
        assert!(two.joint().masses().iter().all(|m| (m - 1.0 / 36.0).abs() < 1e-15));

        let single = ProductSpace::new(vec![die()]).unwrap();
        assert_eq!(single.joint().labels(), die().labels());
        for (a, b) in single.joint().masses().iter().zip(die().masses()) {
            assert!((a - b).abs() < 1e-15);
        }

        let coin = DiscreteSpace::uniform(["H", "T"]).unwrap();
        let dc = ProductSpace::new(vec![die(), coin]).unwrap();
        assert_eq!(dc.joint().len(), 12);
        assert!(dc.joint().masses().iter().all(|m| (m - 1.0 / 12.0).abs() < 1e-15));
        assert_eq!(dc.joint().labels()[1], "1,T");
    }

    #[test]
    fn marginals() {
        let two = ProductSpace::new(vec![die(), die()]).unwrap();
        let m = two.marginal(0).unwrap();
        for (a, b) in m.masses().iter().zip(die().masses()) {
            assert!((a - b).abs() < 1e-12);
        }
        let coin = DiscreteSpace::new(["H", "T"], [0.3, 0.7]).unwrap();
        let dc = ProductSpace::new(vec![die(), coin.clone()]).unwrap();
        let m = dc.marginal(1).unwrap();
        // Sum over the die coordinate: 6 · (1/6 · 0.3) and 6 · (1/6 · 0.7).
        let oracle: Vec<f64> = ["H", "T"]
            .iter()
            .map(|c| {
                dc.joint()
                    .labels()
                    .iter()
                    .zip(dc.joint().masses())
                    .filter(|(l, _)| l.ends_with(c))
                    .map(|(_, m)| m)
                    .sum()
            })
            .collect();
        assert!((m.masses()[0] - oracle[0]).abs() < 1e-12);
        assert!((m.masses()[1] - 0.7).abs() < 1e-12);
        assert!(matches!(dc.marginal(2), Err(Error::IndexOutOfRange { index: 2, len: 2 })));
        let single = ProductSpace::new(vec![die()]).unwrap();
        let m = single.marginal(0).unwrap();
        assert_eq!(m.labels(), die().labels());
        assert!(m.masses().iter().zip(die().masses()).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn moments_of_two_dice() {
        let two = ProductSpace::new(vec![die(), die()]).unwrap();
        assert!((two.moment_product(&[1, 1]).unwrap() - 49.0 / 4.0).abs() < 1e-12);
        assert!((two.moment_product(&[0, 0]).unwrap() - 1.0).abs() < 1e-12);
        let oracle: f64 = (1..=6)
            .flat_map(|i| (1..=6).map(move |_j| (i * i) as f64 / 36.0))
            .sum();
        assert!((two.moment_product(&[2, 0]).unwrap() - oracle).abs() < 1e-12);
        let product = two.factor_moment(0, 2).unwrap() * two.factor_moment(1, 0).unwrap();
        assert!((product - 91.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn non_numeric_factor_is_rejected() {
        let coin = DiscreteSpace::uniform(["H", "T"]).unwrap();
        let dc = ProductSpace::new(vec![die(), coin]).unwrap();
        assert_eq!(
            dc.moment_product(&[1, 1]),
            Err(Error::NonNumericLabel("H".into()))
        );
        // A zero exponent never touches the coordinate values.
        assert!((dc.moment_product(&[1, 0]).unwrap() - 3.5).abs() < 1e-12);
    }
}
