//! Randomized invariants across the discrete, chain and generator modules.

use bracket_core::linalg::Matrix;
use bracket_core::observables::{
    expectation, expectation_fn, partition_expectation, variance, variance_by_moments,
};
use bracket_core::{
    DiscreteSpace, EventSet, Generator, Observable, Orientation, Partition, ProbVector, ProductSpace,
    StochasticMatrix,
};
use proptest::prelude::*;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Masses on `n` outcomes, some possibly zero, at least one positive.
fn masses(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], n)
        .prop_filter("some mass", |w| w.iter().any(|&x| x > 0.0))
        .prop_map(|w| normalize(&w))
}

fn space() -> impl Strategy<Value = DiscreteSpace> {
    (1usize..9)
        .prop_flat_map(masses)
        .prop_map(|m| DiscreteSpace::new(labels(m.len()), m).unwrap())
}

fn subset(s: &DiscreteSpace, keep: &[bool]) -> EventSet {
    EventSet::from_labels(
        s.labels()
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(l, _)| l.clone()),
    )
}

/// A space, a partition given as block indices, and two arbitrary events.
fn space_with_partition() -> impl Strategy<Value = (DiscreteSpace, Vec<EventSet>, EventSet, EventSet)> {
    space().prop_flat_map(|s| {
        let n = s.len();
        (
            Just(s),
            prop::collection::vec(0usize..4, n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(s, owner, a, b)| {
                let blocks: Vec<EventSet> = (0..4)
                    .map(|k| {
                        let keep: Vec<bool> = owner.iter().map(|&o| o == k).collect();
                        subset(&s, &keep)
                    })
                    .filter(|e| !e.is_empty())
                    .collect();
                let (a, b) = (subset(&s, &a), subset(&s, &b));
                (s, blocks, a, b)
            })
    })
}

fn union_all<'a>(sets: impl IntoIterator<Item = &'a EventSet>) -> EventSet {
    sets.into_iter().fold(EventSet::empty(), |acc, e| acc.union(e))
}

proptest! {
    #[test]
    fn additivity_over_disjoint_events((s, blocks, _, _) in space_with_partition()) {
        let total = s.probability(&union_all(&blocks)).unwrap();
        let sum: f64 = blocks.iter().map(|b| s.probability(b).unwrap()).sum();
        prop_assert!((total - sum).abs() <= 1e-12);
        prop_assert!((total - 1.0).abs() <= 1e-12);
        let some: Vec<&EventSet> = blocks.iter().step_by(2).collect();
        let partial: f64 = some.iter().map(|b| s.probability(b).unwrap()).sum();
        prop_assert!((s.probability(&union_all(some)).unwrap() - partial).abs() <= 1e-12);
    }

    #[test]
    fn complement_rule((s, _, a, _) in space_with_partition()) {
        let pa = s.probability(&a).unwrap();
        let pc = s.probability(&s.complement(&a).unwrap()).unwrap();
        prop_assert!((pa + pc - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn singleton_brackets_are_orthonormal(s in space()) {
        for i in s.labels() {
            for j in s.labels() {
                if s.mass(i).unwrap() > 0.0 && s.mass(j).unwrap() > 0.0 {
                    let b = s.bracket(&s.singleton(i).unwrap(), &s.singleton(j).unwrap()).unwrap();
                    prop_assert_eq!(b, if i == j { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn identity_insertion_with_measurable_side((s, blocks, a, b) in space_with_partition()) {
        let part: Partition = s.validate_partition(blocks.clone()).unwrap();
        // Events built from whole blocks.
        let a_meas = union_all(blocks.iter().step_by(2));
        let b_meas = union_all(blocks.iter().skip(1).step_by(2));
        for (lhs, rhs) in [(&a_meas, &b), (&a, &b_meas)] {
            if s.probability(rhs).unwrap() > 0.0 {
                let direct = s.bracket(lhs, rhs).unwrap();
                let inserted = s.insert_identity(lhs, &part, rhs).unwrap();
                prop_assert!((direct - inserted).abs() <= 1e-10, "{direct} vs {inserted}");
            }
        }
        // The base partition resolves any pair of events.
        if s.probability(&b).unwrap() > 0.0 {
            let base = s.singleton_partition();
            let inserted = s.insert_identity(&a, &base, &b).unwrap();
            prop_assert!((s.bracket(&a, &b).unwrap() - inserted).abs() <= 1e-10);
        }
    }

    #[test]
    fn bayes_matches_bracket((s, _, a, b) in space_with_partition()) {
        if s.probability(&a).unwrap() > 0.0 && s.probability(&b).unwrap() > 0.0 {
            prop_assert!((s.bayes(&a, &b).unwrap() - s.bracket(&a, &b).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn omega_given_anything_is_one((s, _, a, _) in space_with_partition()) {
        if s.probability(&a).unwrap() > 0.0 {
            prop_assert!((s.bracket(&s.omega(), &a).unwrap() - 1.0).abs() <= 1e-12);
        }
    }
}

/// A space of numeric outcomes `v_0..v_n` with random masses.
fn numeric_space() -> impl Strategy<Value = DiscreteSpace> {
    (1usize..5).prop_flat_map(|n| {
        (prop::collection::btree_set(-5i32..6, n), masses(n)).prop_map(|(vals, m)| {
            let labels: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
            let m = &m[..labels.len()];
            DiscreteSpace::new(labels, normalize(m)).unwrap()
        })
    })
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * x + k)
}

proptest! {
    #[test]
    fn linearity_by_joint_enumeration(
        factors in prop::collection::vec(numeric_space(), 2..4),
        coefs in prop::collection::vec(-3.0f64..3.0, 3),
        polys in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 1..4), 3),
    ) {
        let k = factors.len();
        let prod = ProductSpace::new(factors.clone()).unwrap();
        let joint = prod.joint();
        let coords: Vec<Vec<f64>> = (0..k)
            .map(|i| prod.coordinate_observable(i).unwrap().resolve(joint).unwrap())
            .collect();
        let combined: f64 = joint
            .masses()
            .iter()
            .enumerate()
            .map(|(w, m)| m * (0..k).map(|i| coefs[i] * poly(&polys[i], coords[i][w])).sum::<f64>())
            .sum();
        let separate: f64 = (0..k)
            .map(|i| {
                let x = Observable::numeric_labels(&factors[i]).unwrap();
                coefs[i] * expectation_fn(&factors[i], |v| poly(&polys[i], v), &x).unwrap()
            })
            .sum();
        prop_assert!((combined - separate).abs() <= 1e-12 * (1.0 + combined.abs()));
    }

    #[test]
    fn coordinate_events_factorize(factors in prop::collection::vec(numeric_space(), 2..4)) {
        let prod = ProductSpace::new(factors.clone()).unwrap();
        let joint = prod.joint();
        for i in 0..factors.len() {
            for j in (i + 1)..factors.len() {
                for li in factors[i].labels() {
                    for lj in factors[j].labels() {
                        let ei = prod.coordinate_event(i, li).unwrap();
                        let ej = prod.coordinate_event(j, lj).unwrap();
                        let both = joint.probability(&ei.intersection(&ej)).unwrap();
                        let prod_marg = factors[i].mass(li).unwrap() * factors[j].mass(lj).unwrap();
                        prop_assert!((both - prod_marg).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn total_expectation((s, blocks, _, _) in space_with_partition(), vals in prop::collection::vec(-10.0f64..10.0, 8)) {
        let x = Observable::from_fn(&s, |l| vals[l.parse::<usize>().unwrap()]);
        let part = s.validate_partition(blocks).unwrap();
        let direct = expectation(&s, &x).unwrap();
        prop_assert!((partition_expectation(&s, &x, &part).unwrap() - direct).abs() <= 1e-12);
    }

    #[test]
    fn variance_forms_agree(s in space(), vals in prop::collection::vec(-10.0f64..10.0, 8)) {
        let x = Observable::from_fn(&s, |l| vals[l.parse::<usize>().unwrap()]);
        let v = variance(&s, &x).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!((v - variance_by_moments(&s, &x).unwrap()).abs() <= 1e-10);
    }
}

fn stochastic(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.0f64..1.0], n)
            .prop_filter("nonzero row", |r| r.iter().any(|&x| x > 0.0))
            .prop_map(|r| normalize(&r)),
        n,
    )
}

fn chain_and_vector() -> impl Strategy<Value = (StochasticMatrix, Vec<f64>, u64)> {
    (1usize..7).prop_flat_map(|n| {
        (stochastic(n), masses(n), 0u64..40)
            .prop_map(move |(rows, u, k)| (StochasticMatrix::new(labels(n), rows).unwrap(), u, k))
    })
}

fn assert_simplex(p: &ProbVector) -> Result<(), TestCaseError> {
    prop_assert!(p.weights().iter().all(|&w| w >= 0.0));
    prop_assert!((p.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn evolution_stays_on_the_simplex((p, u, n) in chain_and_vector()) {
        let states = p.states().to_vec();
        let row = ProbVector::new(states.clone(), u.clone(), Orientation::Row).unwrap();
        let col = ProbVector::new(states, u, Orientation::Column).unwrap();
        assert_simplex(&p.evolve_left(&row, n).unwrap())?;
        assert_simplex(&p.evolve_right(&col, n).unwrap())?;
    }
}

proptest! {
    #[test]
    fn left_right_duality((p, u, n) in chain_and_vector()) {
        let row = ProbVector::new(p.states().to_vec(), u.clone(), Orientation::Row).unwrap();
        let left = p.evolve_left(&row, n).unwrap().transpose();
        // (Pᵀ)ⁿ u computed densely.
        let pt = p.matrix().transpose();
        let mut v = nalgebra::DVector::from_vec(u);
        for _ in 0..n {
            v = &pt * v;
        }
        prop_assert_eq!(left.orientation(), Orientation::Column);
        for (a, b) in left.weights().iter().zip(v.iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn all_ones_bra_is_conserved((p, _, n) in chain_and_vector()) {
        let pn = p.matrix_power(n);
        for c in pn.matrix().transpose().column_iter() {
            prop_assert!((c.sum() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn self_overlap_bounded(u in (1usize..8).prop_flat_map(masses)) {
        let v = ProbVector::new(labels(u.len()), u.clone(), Orientation::Row).unwrap();
        let o = v.self_overlap();
        prop_assert!(o <= 1.0 + 1e-15);
        let one_hot = u.iter().filter(|&&w| w > 0.0).count() == 1;
        prop_assert_eq!((o - 1.0).abs() <= 1e-15, one_hot);
    }
}

fn generator() -> impl Strategy<Value = Generator> {
    (1usize..7).prop_flat_map(|n| {
        prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.0f64..5.0], n * n).prop_map(move |w| {
            let mut q = Matrix::from_row_slice(n, n, &w);
            q.fill_diagonal(0.0);
            Generator::from_off_diagonal(labels(n), q).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn generator_conserves_probability(g in generator(), t in 0.0f64..5.0) {
        let (u, _) = g.propagator_pair(t).unwrap();
        for c in u.column_iter() {
            prop_assert!((c.sum() - 1.0).abs() <= 1e-12);
        }
        let p0 = ProbVector::uniform(g.states(), Orientation::Column).unwrap();
        assert_simplex(&g.evolve_density(&p0, t).unwrap())?;
    }

    #[test]
    fn semigroup(g in generator(), s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let ps = g.transition_matrix(s).unwrap();
        let pt = g.transition_matrix(t).unwrap();
        let pst = g.transition_matrix(s + t).unwrap();
        let composed = ps.matrix() * pt.matrix();
        prop_assert!(bracket_core::linalg::max_abs_diff(&composed, pst.matrix()) <= 1e-10);
    }

    #[test]
    fn forward_and_backward_agree(g in generator(), t in 0.05f64..3.0) {
        prop_assert!(g.kolmogorov_residuals(t).unwrap().commutator <= 1e-8);
    }
}
