use cavgate::qspace::{
    atomic_transition, atomic_transition_labels, fock_lowering, fock_raising, photon_number, Atom,
};
use cavgate::{CompositeSpace, Level, Operator, QuantumState, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn basis(space: &CompositeSpace, l1: Level, l2: Level, n: usize) -> Vec<C64> {
    let mut v = vec![c(0.0); space.dim()];
    v[space.index(l1, l2, n)] = c(1.0);
    v
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn dimensions() {
    assert_eq!(CompositeSpace::new(0, 0).unwrap().dim(), 16);
    assert_eq!(CompositeSpace::new(1, 9).unwrap().dim(), 144);
    assert!(CompositeSpace::new(3, 2).is_err());
}

#[test]
fn decode_encode_round_trip_example() {
    let s = CompositeSpace::new(0, 9).unwrap();
    let i = s.encode(Level::R, Level::B, 5).unwrap();
    assert_eq!(s.decode(i), (Level::R, Level::B, 5));
    assert_eq!(s.encode(Level::R, Level::B, 10), None);
}

#[test]
fn flat_index_layout() {
    let s = CompositeSpace::new(2, 4).unwrap();
    assert_eq!(s.index(Level::G, Level::G, 2), 0);
    assert_eq!(s.index(Level::G, Level::A, 2), 3);
    assert_eq!(s.index(Level::R, Level::R, 4), 15 * 3 + 2);
}

#[test]
fn lowering_examples() {
    let s = CompositeSpace::new(0, 2).unwrap();
    let a = fock_lowering(&s);
    let out = a.apply(&basis(&s, Level::B, Level::R, 1));
    assert_eq!(out[s.index(Level::B, Level::R, 0)], c(1.0));
    assert!(a.apply(&basis(&s, Level::B, Level::R, 0)).iter().all(|z| z.norm() == 0.0));

    let s = CompositeSpace::new(0, 9).unwrap();
    let a = fock_lowering(&s);
    let v = a.get(s.index(Level::G, Level::G, 4), s.index(Level::G, Level::G, 5));
    assert!((v.re - 2.23607).abs() < 1e-5);
}

#[test]
fn lowering_drops_the_lower_band_edge() {
    let s = CompositeSpace::new(3, 6).unwrap();
    let a = fock_lowering(&s);
    let out = a.apply(&basis(&s, Level::G, Level::G, 3));
    assert!(out.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn transition_examples() {
    let s = CompositeSpace::new(0, 0).unwrap();
    let op = atomic_transition(&s, Atom::First, Level::G, Level::A);
    assert_eq!(op.apply(&basis(&s, Level::G, Level::G, 0)), basis(&s, Level::A, Level::G, 0));
    assert!(op.apply(&basis(&s, Level::R, Level::G, 0)).iter().all(|z| z.norm() == 0.0));
    let op = atomic_transition(&s, Atom::Second, Level::G, Level::B);
    assert_eq!(op.apply(&basis(&s, Level::G, Level::G, 0)), basis(&s, Level::G, Level::B, 0));
}

#[test]
fn transition_labels_reject_unknown() {
    let s = CompositeSpace::new(0, 0).unwrap();
    assert!(atomic_transition_labels(&s, 1, "g", "x").is_err());
    assert!(atomic_transition_labels(&s, 3, "g", "a").is_err());
    assert!(atomic_transition_labels(&s, 2, "r", "b").is_ok());
}

#[test]
fn hermitian_claim_is_checked() {
    let s = CompositeSpace::new(0, 0).unwrap();
    let bad = vec![(0, 1, c(1.0))];
    assert!(Operator::from_triplets(s, bad, true).is_err());
    let good = vec![(0, 1, C64::new(0.0, 1.0)), (1, 0, C64::new(0.0, -1.0))];
    assert!(Operator::from_triplets(s, good, true).unwrap().is_hermitian());
    assert!(Operator::from_triplets(s, vec![(16, 0, c(1.0))], false).is_err());
}

#[test]
fn entries_are_row_major_sorted() {
    let s = CompositeSpace::new(0, 1).unwrap();
    let t = vec![(5, 3, c(1.0)), (0, 7, c(2.0)), (5, 1, c(3.0)), (0, 2, c(4.0))];
    let op = Operator::from_triplets(s, t, false).unwrap();
    let order: Vec<(usize, usize)> = op.entries().map(|(r, c, _)| (r, c)).collect();
    assert_eq!(order, vec![(0, 2), (0, 7), (5, 1), (5, 3)]);
}

#[test]
fn states_are_validated() {
    let s = CompositeSpace::new(0, 0).unwrap();
    let mut v = DVector::zeros(16);
    v[0] = c(1.1);
    assert!(QuantumState::pure(&s, v).is_err());
    let mut m = DMatrix::zeros(16, 16);
    m[(0, 0)] = c(1.5);
    m[(1, 1)] = c(-0.5);
    assert!(QuantumState::mixed(&s, m).is_err());
    assert!(QuantumState::basis(&s, Level::G, Level::G, 1).is_err());
}

fn space_strategy() -> impl Strategy<Value = CompositeSpace> {
    (0usize..6, 0usize..3).prop_map(|(lo, w)| CompositeSpace::new(lo, lo + w).unwrap())
}

fn level() -> impl Strategy<Value = Level> {
    (0usize..4).prop_map(|i| Level::from_index(i).unwrap())
}

fn atom() -> impl Strategy<Value = Atom> {
    prop_oneof![Just(Atom::First), Just(Atom::Second)]
}

/// Random sparse operator on a small space.
fn operator_on(space: CompositeSpace) -> impl Strategy<Value = Operator> {
    let dim = space.dim();
    proptest::collection::vec((0..dim, 0..dim, -1.0f64..1.0, -1.0f64..1.0), 0..40).prop_map(
        move |t| {
            let t = t.into_iter().map(|(r, c, x, y)| (r, c, C64::new(x, y))).collect();
            Operator::from_triplets(space, t, false).unwrap()
        },
    )
}

fn small_ops() -> impl Strategy<Value = (Operator, Operator, C64)> {
    (0usize..3)
        .prop_map(|lo| CompositeSpace::new(lo, lo + 3).unwrap())
        .prop_flat_map(|s| (operator_on(s), operator_on(s), (-2.0f64..2.0, -2.0f64..2.0)))
        .prop_map(|(a, b, (x, y))| (a, b, C64::new(x, y)))
}

proptest! {
    #[test]
    fn index_map_is_a_bijection(space in space_strategy()) {
        let mut seen = vec![false; space.dim()];
        for l1 in Level::ALL {
            for l2 in Level::ALL {
                for n in space.fock_min()..=space.fock_max() {
                    let i = space.encode(l1, l2, n).unwrap();
                    prop_assert!(!seen[i]);
                    seen[i] = true;
                    prop_assert_eq!(space.decode(i), (l1, l2, n));
                }
            }
        }
        prop_assert!(seen.iter().all(|&x| x));
        prop_assert_eq!(space.dim(), 16 * (space.fock_max() - space.fock_min() + 1));
    }

    #[test]
    fn number_operator_is_diagonal(space in space_strategy()) {
        let nop = photon_number(&space);
        let a = fock_lowering(&space);
        let ada = fock_raising(&space).mul(&a).unwrap();
        for i in 0..space.dim() {
            let n = space.photons(i);
            prop_assert_eq!(nop.get(i, i), c(n as f64));
            // Hard truncation removes a^dagger a on the lowest retained level.
            let expect = if n > space.fock_min() || n == 0 { n as f64 } else { 0.0 };
            prop_assert!((ada.get(i, i).re - expect).abs() < 1e-12);
            for (j, _) in ada.row(i) {
                prop_assert_eq!(j, i);
            }
        }
    }

    #[test]
    fn transition_adjoint_swaps_levels(space in space_strategy(), at in atom(), mu in level(), nu in level()) {
        let fwd = atomic_transition(&space, at, mu, nu).adjoint();
        let back = atomic_transition(&space, at, nu, mu);
        prop_assert_eq!(max_diff(&fwd.to_dense(), &back.to_dense()), 0.0);
    }

    #[test]
    fn distinct_subsystems_commute(space in space_strategy(), l in proptest::array::uniform4(0usize..4)) {
        let lv = l.map(|i| Level::from_index(i).unwrap());
        let one = atomic_transition(&space, Atom::First, lv[0], lv[1]);
        let two = atomic_transition(&space, Atom::Second, lv[2], lv[3]);
        let a = fock_lowering(&space);
        for (x, y) in [(&one, &two), (&one, &a), (&two, &a)] {
            let k = x.commutator(y).unwrap();
            prop_assert_eq!(k.nnz(), 0);
        }
    }

    #[test]
    fn algebra_matches_dense_oracle((a, b, s) in small_ops()) {
        let (da, db) = (a.to_dense(), b.to_dense());
        prop_assert!(max_diff(&a.add(&b).unwrap().to_dense(), &(&da + &db)) < 1e-13);
        prop_assert!(max_diff(&a.scale(s).to_dense(), &(&da * s)) < 1e-13);
        prop_assert!(max_diff(&a.mul(&b).unwrap().to_dense(), &(&da * &db)) < 1e-13);
        prop_assert!(max_diff(&a.adjoint().to_dense(), &da.adjoint()) < 1e-13);
        prop_assert!(max_diff(&a.commutator(&b).unwrap().to_dense(), &(&da * &db - &db * &da)) < 1e-13);
        let v: Vec<C64> = (0..a.dim()).map(|i| C64::new(i as f64 * 0.1, 1.0 - i as f64 * 0.05)).collect();
        let dv = &da * DVector::from_vec(v.clone());
        let sv = a.apply(&v);
        for (x, y) in sv.iter().zip(dv.iter()) {
            prop_assert!((x - y).norm() < 1e-13);
        }
    }
}

#[test]
fn space_mismatch_is_an_error() {
    let a = Operator::identity(CompositeSpace::new(0, 1).unwrap());
    let b = Operator::identity(CompositeSpace::new(1, 2).unwrap());
    assert!(a.mul(&b).is_err());
    assert!(a.add(&b).is_err());
}
