use cavgate::model::{excitation_number, hamiltonian_from_blocks, lindblad_set, rotating_frame_hamiltonian};
use cavgate::qspace::{atomic_transition, Atom};
use cavgate::{CompositeSpace, Level, SystemParams, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;

type M = DMatrix<C64>;

fn ket_bra(dim: usize, i: usize, j: usize) -> M {
    let mut m = M::zeros(dim, dim);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

fn lowering(lo: usize, hi: usize) -> M {
    let nf = hi - lo + 1;
    let mut m = M::zeros(nf, nf);
    for n in lo + 1..=hi {
        m[(n - 1 - lo, n - lo)] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Kronecker-product construction, atom 1 (x) atom 2 (x) cavity.
fn dense_oracle(p: &SystemParams, lo: usize, hi: usize) -> M {
    let nf = hi - lo + 1;
    let i4 = M::identity(4, 4);
    let inf = M::identity(nf, nf);
    let c = lowering(lo, hi);
    let cd = c.adjoint();
    let re = |x: f64| C64::new(x, 0.0);
    let (g, a, b, r) = (0, 1, 2, 3);
    let e1 = [0.0, p.laser_detuning1, p.laser_detuning1 - p.cavity_detuning_a - p.cavity_detuning_b, p.laser_detuning1 - p.cavity_detuning_a];
    let e2 = [0.0, p.laser_detuning2 + p.cavity_detuning_a + p.cavity_detuning_b, p.laser_detuning2, p.laser_detuning2 + p.cavity_detuning_b];
    let mut d1 = M::zeros(4, 4);
    let mut d2 = M::zeros(4, 4);
    for l in 0..4 {
        d1[(l, l)] = re(e1[l]);
        d2[(l, l)] = re(e2[l]);
    }
    let laser1 = (ket_bra(4, a, g) + ket_bra(4, g, a)) * re(p.rabi1);
    let laser2 = (ket_bra(4, b, g) + ket_bra(4, g, b)) * re(p.rabi2);
    let on1 = |x: &M, f: &M| x.kronecker(&i4).kronecker(f);
    let on2 = |x: &M, f: &M| i4.kronecker(x).kronecker(f);
    let mut h = on1(&d1, &inf) + on2(&d2, &inf) + on1(&laser1, &inf) + on2(&laser2, &inf);
    for on in [&on1 as &dyn Fn(&M, &M) -> M, &on2] {
        let va = on(&ket_bra(4, a, r), &c) * re(p.coupling_a);
        let vb = on(&ket_bra(4, b, r), &cd) * re(p.coupling_b);
        h += &va + va.adjoint() + &vb + vb.adjoint();
    }
    h
}

fn max_diff(a: &M, b: &M) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn bare_detunings_from_frame_table() {
    let p = SystemParams::reference();
    let s = CompositeSpace::new(0, 3).unwrap();
    let h = rotating_frame_hamiltonian(&p, &s).unwrap();
    let e = |l1, l2, n| h.get(s.index(l1, l2, n), s.index(l1, l2, n)).re;
    let gg = e(Level::G, Level::G, 1);
    assert!((e(Level::R, Level::G, 2) - gg - (-58.2)).abs() < 1e-12);
    assert!((e(Level::G, Level::R, 0) - gg - 58.0).abs() < 1e-12);
}

#[test]
fn uncoupled_hamiltonian_is_the_frame_table() {
    let p = SystemParams {
        rabi1: 0.0,
        rabi2: 0.0,
        coupling_a: 0.0,
        coupling_b: 0.0,
        ..SystemParams::reference()
    };
    let s = CompositeSpace::new(2, 4).unwrap();
    let h = rotating_frame_hamiltonian(&p, &s).unwrap();
    assert!(h.entries().all(|(r, c, _)| r == c));
    let (e1, e2) = p.frame_energies();
    for i in 0..s.dim() {
        let (l1, l2, _) = s.decode(i);
        assert_eq!(h.get(i, i).re, e1[l1.index()] + e2[l2.index()]);
    }
}

#[test]
fn no_dissipation_means_no_jumps() {
    let s = CompositeSpace::new(0, 2).unwrap();
    assert!(lindblad_set(&SystemParams::reference(), &s).unwrap().is_empty());
}

#[test]
fn jump_operator_counts() {
    let s = CompositeSpace::new(0, 2).unwrap();
    let p = SystemParams { decay: 0.01, dephasing: 0.02, cavity_loss: 0.1, thermal_photons: 2.0, ..SystemParams::reference() };
    assert_eq!(lindblad_set(&p, &s).unwrap().len(), 6 + 2 + 2);
    let p = SystemParams { cavity_loss: 0.1, ..SystemParams::reference() };
    assert_eq!(lindblad_set(&p, &s).unwrap().len(), 1);
}

#[test]
fn decay_operators_square_to_projectors() {
    let s = CompositeSpace::new(1, 3).unwrap();
    let gamma = 0.037;
    let p = SystemParams { decay: gamma, ..SystemParams::reference() };
    let ls = lindblad_set(&p, &s).unwrap();
    let mut k = 0;
    for atom in [Atom::First, Atom::Second] {
        for nu in [Level::R, Level::A, Level::B] {
            let ll = ls[k].adjoint().mul(&ls[k]).unwrap().to_dense();
            let proj = atomic_transition(&s, atom, nu, nu).to_dense() * C64::new(gamma, 0.0);
            assert!(max_diff(&ll, &proj) < 1e-15, "{atom:?} {nu:?}");
            k += 1;
        }
    }
}

#[test]
fn invalid_params_are_rejected() {
    let s = CompositeSpace::new(0, 1).unwrap();
    for p in [
        SystemParams { coupling_a: -1.0, ..SystemParams::reference() },
        SystemParams { laser_detuning1: 0.0, ..SystemParams::reference() },
        SystemParams { cavity_detuning_b: 0.0, ..SystemParams::reference() },
        SystemParams { decay: -0.1, ..SystemParams::reference() },
        SystemParams { thermal_photons: f64::NAN, ..SystemParams::reference() },
    ] {
        assert!(rotating_frame_hamiltonian(&p, &s).is_err());
    }
}

fn params() -> impl Strategy<Value = SystemParams> {
    let nz = || prop_oneof![-900.0f64..-1.0, 1.0f64..900.0];
    (0.0f64..80.0, 0.0f64..80.0, nz(), nz(), 0.0f64..20.0, 0.0f64..20.0, nz(), nz()).prop_map(
        |(o1, o2, d1, d2, ga, gb, da, db)| SystemParams {
            rabi1: o1,
            rabi2: o2,
            laser_detuning1: d1,
            laser_detuning2: d2,
            coupling_a: ga,
            coupling_b: gb,
            cavity_detuning_a: da,
            cavity_detuning_b: db,
            ..SystemParams::reference()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_kronecker_oracle(p in params(), lo in 0usize..6, w in 0usize..3) {
        let s = CompositeSpace::new(lo, lo + w).unwrap();
        let h = rotating_frame_hamiltonian(&p, &s).unwrap();
        prop_assert!(h.is_hermitian());
        prop_assert!(h.hermitian_deviation() < 1e-12);
        let oracle = dense_oracle(&p, lo, lo + w);
        prop_assert!(max_diff(&h.to_dense(), &oracle) < 1e-12);
        let blocks = hamiltonian_from_blocks(&p, &s).unwrap();
        prop_assert!(max_diff(&blocks.to_dense(), &oracle) < 1e-12);
    }

    #[test]
    fn photon_number_moves_by_one_only_on_cavity_terms(p in params(), lo in 0usize..4) {
        let s = CompositeSpace::new(lo, lo + 2).unwrap();
        let h = rotating_frame_hamiltonian(&p, &s).unwrap();
        for (r, c, _) in h.entries() {
            let (a1, a2, n) = s.decode(r);
            let (b1, b2, m) = s.decode(c);
            let dn = n as i64 - m as i64;
            let atoms_changed = (a1 != b1) as u8 + (a2 != b2) as u8;
            prop_assert!(dn.abs() <= 1);
            prop_assert!(atoms_changed <= 1);
            if dn != 0 {
                // Only r <-> a (photon absorbed) or r <-> b (photon emitted).
                let (from, to) = if a1 != b1 { (b1, a1) } else { (b2, a2) };
                let pair = [from, to];
                prop_assert!(pair.contains(&Level::R));
                prop_assert!(pair.contains(&Level::A) || pair.contains(&Level::B));
            }
            prop_assert_eq!(excitation_number(a1, a2, n), excitation_number(b1, b2, m));
        }
    }

    #[test]
    fn ground_pair_isolated_without_lasers(p in params(), lo in 0usize..4) {
        let p = SystemParams { rabi1: 0.0, rabi2: 0.0, ..p };
        let s = CompositeSpace::new(lo, lo + 2).unwrap();
        let h = rotating_frame_hamiltonian(&p, &s).unwrap();
        for n in s.fock_min()..=s.fock_max() {
            let i = s.index(Level::G, Level::G, n);
            prop_assert!(h.row(i).all(|(c, _)| c == i));
        }
    }
}
