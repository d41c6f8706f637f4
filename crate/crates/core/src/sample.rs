//! Finite sample spaces, events and brackets.
//!
//! A [`DiscreteSpace`] holds the outcome masses `m(ω)`; it is the system
//! state `|Ω⟩ = Σ |ω⟩ m(ω)`. Events are label sets. The bracket `P(A|B)` is
//! `P(A ∩ B) / P(B)` and every conditional quantity in this module is built
//! from it.

use std::collections::{BTreeSet, HashMap};

use crate::{Error, Result, Tolerances};

/// A set of outcome labels.
///
/// Membership in a particular space is checked when the event is used, so
/// the same event value can be applied to any space that shares the labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct EventSet {
    members: BTreeSet<String>,
}

impl EventSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        EventSet {
            members: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn members(&self) -> &BTreeSet<String> {
        &self.members
    }

    pub fn contains(&self, label: &str) -> bool {
        self.members.contains(label)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn union(&self, other: &EventSet) -> EventSet {
        EventSet {
            members: self.members.union(&other.members).cloned().collect(),
        }
    }

    pub fn intersection(&self, other: &EventSet) -> EventSet {
        EventSet {
            members: self.members.intersection(&other.members).cloned().collect(),
        }
    }

    pub fn difference(&self, other: &EventSet) -> EventSet {
        EventSet {
            members: self.members.difference(&other.members).cloned().collect(),
        }
    }

    pub fn is_disjoint(&self, other: &EventSet) -> bool {
        self.members.is_disjoint(&other.members)
    }

    pub fn is_superset(&self, other: &EventSet) -> bool {
        self.members.is_superset(&other.members)
    }

    /// The bra `P(E|` only records which base outcomes `E` contains; it
    /// carries no distribution information.
    pub fn bra_expansion(&self) -> BTreeSet<String> {
        self.members.clone()
    }
}

impl<S: Into<String>> FromIterator<S> for EventSet {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        EventSet::from_labels(iter)
    }
}

/// A finite outcome set with nonnegative masses summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpace {
    labels: Vec<String>,
    masses: Vec<f64>,
    index: HashMap<String, usize>,
}

impl DiscreteSpace {
    /// Builds a space from labels and masses.
    ///
    /// Masses must be finite and nonnegative and sum to one within
    /// [`Tolerances::algebraic`]; they are then divided by their sum once, so
    /// downstream compositions start from an exactly normalized state.
    pub fn new<L, S, M>(labels: L, masses: M) -> Result<Self>
    where
        L: IntoIterator<Item = S>,
        S: Into<String>,
        M: IntoIterator<Item = f64>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let masses: Vec<f64> = masses.into_iter().collect();
        if labels.len() != masses.len() {
            return Err(Error::domain(format!(
                "{} labels but {} masses",
                labels.len(),
                masses.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::domain("a sample space needs at least one outcome"));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        for (label, &m) in labels.iter().zip(&masses) {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidMass {
                    label: label.clone(),
                    value: m,
                });
            }
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > Tolerances::DEFAULT.algebraic {
            return Err(Error::NotNormalized { sum });
        }
        let masses = masses.into_iter().map(|m| m / sum).collect();
        Ok(DiscreteSpace {
            labels,
            masses,
            index,
        })
    }

    pub fn uniform<L, S>(labels: L) -> Result<Self>
    where
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        Self::new(labels, std::iter::repeat_n(1.0 / n as f64, n))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn mass(&self, label: &str) -> Result<f64> {
        Ok(self.masses[self.index_of(label)?])
    }

    /// The sure event `Ω`.
    pub fn omega(&self) -> EventSet {
        EventSet::from_labels(self.labels.iter().cloned())
    }

    pub fn singleton(&self, label: &str) -> Result<EventSet> {
        self.index_of(label)?;
        Ok(EventSet::from_labels([label]))
    }

    pub fn complement(&self, e: &EventSet) -> Result<EventSet> {
        self.check(e)?;
        Ok(self.omega().difference(e))
    }

    /// Fails with the first label of `e` that is not an outcome.
    pub fn check(&self, e: &EventSet) -> Result<()> {
        for label in e.members() {
            self.index_of(label)?;
        }
        Ok(())
    }

    pub(crate) fn mask(&self, e: &EventSet) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        for label in e.members() {
            mask[self.index_of(label)?] = true;
        }
        Ok(mask)
    }

    /// `P(E) = P(E|Ω) = Σ_{ω∈E} m(ω)`.
    pub fn probability(&self, e: &EventSet) -> Result<f64> {
        let mask = self.mask(e)?;
        let p: f64 = self
            .masses
            .iter()
            .zip(&mask)
            .filter(|(_, &inside)| inside)
            .map(|(m, _)| m)
            .sum();
        Ok(p.min(1.0))
    }

    fn evidence(&self, b: &EventSet) -> Result<f64> {
        let p = self.probability(b)?;
        if p <= 0.0 {
            return Err(Error::ZeroEvidence);
        }
        Ok(p)
    }

    /// The bracket `P(A|B) = P(A ∩ B) / P(B)`.
    pub fn bracket(&self, a: &EventSet, b: &EventSet) -> Result<f64> {
        self.check(a)?;
        let pb = self.evidence(b)?;
        let pab = self.probability(&a.intersection(b))?;
        Ok((pab / pb).clamp(0.0, 1.0))
    }

    /// `P(A|B)` computed through Bayes' formula `P(B|A) P(A) / P(B)`.
    pub fn bayes(&self, a: &EventSet, b: &EventSet) -> Result<f64> {
        let pa = self.evidence(a)?;
        let pb = self.evidence(b)?;
        let b_given_a = self.bracket(b, a)?;
        Ok((b_given_a * pa / pb).clamp(0.0, 1.0))
    }

    /// Checks that `blocks` are pairwise disjoint and cover every outcome.
    pub fn validate_partition(&self, blocks: Vec<EventSet>) -> Result<Partition> {
        let mut owner: Vec<Option<usize>> = vec![None; self.len()];
        for (b, block) in blocks.iter().enumerate() {
            for label in block.members() {
                let i = self.index_of(label)?;
                if owner[i].is_some() {
                    return Err(Error::PartitionOverlap(label.clone()));
                }
                owner[i] = Some(b);
            }
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(Error::PartitionGap(self.labels[i].clone()));
        }
        Ok(Partition { blocks })
    }

    /// The base partition `{ω₁}, …, {ωₙ}`.
    pub fn singleton_partition(&self) -> Partition {
        Partition {
            blocks: self
                .labels
                .iter()
                .map(|l| EventSet::from_labels([l.as_str()]))
                .collect(),
        }
    }

    fn check_partition(&self, part: &Partition) -> Result<()> {
        self.validate_partition(part.blocks.clone()).map(|_| ())
    }

    /// `P(E|Ω) = Σᵢ P(E|Hᵢ) P(Hᵢ|Ω)`, skipping blocks of zero mass.
    pub fn total_probability(&self, e: &EventSet, part: &Partition) -> Result<f64> {
        self.check(e)?;
        self.check_partition(part)?;
        let mut total = 0.0;
        for block in part.blocks() {
            let ph = self.probability(block)?;
            if ph > 0.0 {
                total += self.bracket(e, block)? * ph;
            }
        }
        Ok(total)
    }

    /// `Σᵢ P(A|Hᵢ) P(Hᵢ|B)`, the bracket with `Σ |Hᵢ⟩P(Hᵢ|` inserted between
    /// its two sides. Zero-mass blocks contribute nothing.
    ///
    /// This reproduces `P(A|B)` for the base partition and, more generally,
    /// whenever `A` or `B` is a union of blocks. For other partitions it is a
    /// different quantity (take `{Ω}`: the sum collapses to `P(A)`).
    pub fn insert_identity(&self, a: &EventSet, part: &Partition, b: &EventSet) -> Result<f64> {
        self.check(a)?;
        self.check_partition(part)?;
        self.evidence(b)?;
        let mut total = 0.0;
        for block in part.blocks() {
            if self.probability(block)? > 0.0 {
                total += self.bracket(a, block)? * self.bracket(block, b)?;
            }
        }
        Ok(total)
    }

    /// `P(E ∩ F) = P(E) P(F)` within [`Tolerances::algebraic`]. Events of
    /// zero probability are independent of everything.
    pub fn is_independent(&self, e: &EventSet, f: &EventSet) -> Result<bool> {
        let pe = self.probability(e)?;
        let pf = self.probability(f)?;
        if pe == 0.0 || pf == 0.0 {
            return Ok(true);
        }
        let pef = self.probability(&e.intersection(f))?;
        Ok((pef - pe * pf).abs() <= Tolerances::DEFAULT.algebraic)
    }

    /// The ket `|E⟩ = Σ |ω⟩ P(ω|E)` as `(label, P(ω|E))` pairs in outcome
    /// order, zero outside `E`.
    pub fn ket_expansion(&self, e: &EventSet) -> Result<Vec<(String, f64)>> {
        let pe = self.evidence(e)?;
        let mask = self.mask(e)?;
        Ok(self
            .labels
            .iter()
            .zip(&self.masses)
            .zip(mask)
            .map(|((l, &m), inside)| (l.clone(), if inside { m / pe } else { 0.0 }))
            .collect())
    }
}

/// A complete, mutually disjoint family of events.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    blocks: Vec<EventSet>,
}

impl Partition {
    pub fn blocks(&self) -> &[EventSet] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}
