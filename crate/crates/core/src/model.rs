//! Rotating-frame Hamiltonian and dissipators for the two-atom cavity system.
//!
//! All frequencies and rates are ordinary frequencies in MHz; the factor
//! 2 pi is applied inside the propagators only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qspace::{
    atomic_transition, fock_lowering, fock_raising, Atom, CompositeSpace, Level, Operator, C64,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Rabi frequency of the laser driving g -> a on the first atom.
    pub rabi1: f64,
    /// Rabi frequency of the laser driving g -> b on the second atom.
    pub rabi2: f64,
    /// Laser detuning from the g -> a transition.
    pub laser_detuning1: f64,
    /// Laser detuning from the g -> b transition.
    pub laser_detuning2: f64,
    /// Cavity coupling on the a <-> r transition.
    pub coupling_a: f64,
    /// Cavity coupling on the r <-> b transition.
    pub coupling_b: f64,
    /// Cavity detuning from a <-> r.
    pub cavity_detuning_a: f64,
    /// Cavity detuning from r <-> b.
    pub cavity_detuning_b: f64,
    pub decay: f64,
    pub dephasing: f64,
    pub cavity_loss: f64,
    pub thermal_photons: f64,
    /// Extra shift added to both Rydberg frame energies (resonance trim).
    #[serde(default)]
    pub rydberg_offset: f64,
}

impl SystemParams {
    /// Parameter set of the reference Rabi-oscillation figure, without dissipation.
    pub fn reference() -> Self {
        SystemParams {
            rabi1: 56.5,
            rabi2: 60.0,
            laser_detuning1: 663.8,
            laser_detuning2: -742.0,
            coupling_a: 9.5,
            coupling_b: 10.0,
            cavity_detuning_a: 722.0,
            cavity_detuning_b: 800.0,
            decay: 0.0,
            dephasing: 0.0,
            cavity_loss: 0.0,
            thermal_photons: 0.0,
            rydberg_offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("omega1", self.rabi1),
            ("omega2", self.rabi2),
            ("delta1", self.laser_detuning1),
            ("delta2", self.laser_detuning2),
            ("g_a", self.coupling_a),
            ("g_b", self.coupling_b),
            ("Delta_a", self.cavity_detuning_a),
            ("Delta_b", self.cavity_detuning_b),
            ("Gamma", self.decay),
            ("gamma_deph", self.dephasing),
            ("kappa", self.cavity_loss),
            ("nbar_th", self.thermal_photons),
            ("rydberg_offset", self.rydberg_offset),
        ];
        for (key, v) in all {
            if !v.is_finite() {
                return Err(Error::InvalidParam {
                    key,
                    reason: format!("{v} is not finite"),
                });
            }
        }
        for (key, v) in [
            ("omega1", self.rabi1),
            ("omega2", self.rabi2),
            ("g_a", self.coupling_a),
            ("g_b", self.coupling_b),
            ("Gamma", self.decay),
            ("gamma_deph", self.dephasing),
            ("kappa", self.cavity_loss),
            ("nbar_th", self.thermal_photons),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidParam {
                    key,
                    reason: format!("{v} must be >= 0"),
                });
            }
        }
        for (key, v) in [
            ("delta1", self.laser_detuning1),
            ("delta2", self.laser_detuning2),
            ("Delta_a", self.cavity_detuning_a),
            ("Delta_b", self.cavity_detuning_b),
        ] {
            if v == 0.0 {
                return Err(Error::InvalidParam {
                    key,
                    reason: "must be nonzero".into(),
                });
            }
        }
        Ok(())
    }

    pub fn without_dissipation(&self) -> Self {
        SystemParams {
            decay: 0.0,
            dephasing: 0.0,
            cavity_loss: 0.0,
            ..*self
        }
    }

    /// Frame energies of g, a, b, r (level-index order) for each atom.
    pub fn frame_energies(&self) -> ([f64; 4], [f64; 4]) {
        let d1 = self.laser_detuning1;
        let d2 = self.laser_detuning2;
        let da = self.cavity_detuning_a;
        let db = self.cavity_detuning_b;
        let eps = self.rydberg_offset;
        (
            [0.0, d1, d1 - da - db, d1 - da + eps],
            [0.0, d2 + da + db, d2, d2 + db + eps],
        )
    }
}

/// Time-independent rotating-frame Hamiltonian.
pub fn rotating_frame_hamiltonian(params: &SystemParams, space: &CompositeSpace) -> Result<Operator> {
    params.validate()?;
    let (e1, e2) = params.frame_energies();
    let re = |x: f64| C64::new(x, 0.0);
    let mut t: Vec<(usize, usize, C64)> = Vec::new();
    let push_pair = |t: &mut Vec<(usize, usize, C64)>, i: usize, j: usize, v: f64| {
        if v != 0.0 {
            t.push((i, j, re(v)));
            t.push((j, i, re(v)));
        }
    };

    for idx in 0..space.dim() {
        let (l1, l2, n) = space.decode(idx);
        let e = e1[l1.index()] + e2[l2.index()];
        if e != 0.0 {
            t.push((idx, idx, re(e)));
        }
        // Laser couplings, one per atom.
        if l1 == Level::G {
            push_pair(&mut t, space.index(Level::A, l2, n), idx, params.rabi1);
        }
        if l2 == Level::G {
            push_pair(&mut t, space.index(l1, Level::B, n), idx, params.rabi2);
        }
        // Cavity couplings out of r: r,n -> a,n-1 and r,n -> b,n+1.
        for atom in [Atom::First, Atom::Second] {
            let own = if atom == Atom::First { l1 } else { l2 };
            if own != Level::R {
                continue;
            }
            let with = |l: Level, m: usize| match atom {
                Atom::First => space.encode(l, l2, m),
                Atom::Second => space.encode(l1, l, m),
            };
            if n > space.fock_min() {
                if let Some(j) = with(Level::A, n - 1) {
                    push_pair(&mut t, j, idx, params.coupling_a * (n as f64).sqrt());
                }
            }
            if let Some(j) = with(Level::B, n + 1) {
                push_pair(&mut t, j, idx, params.coupling_b * ((n + 1) as f64).sqrt());
            }
        }
    }
    Operator::from_triplets(*space, t, true)
}

/// The same Hamiltonian assembled from embedded building blocks; slower,
/// kept as an independent construction for cross-checks.
pub fn hamiltonian_from_blocks(params: &SystemParams, space: &CompositeSpace) -> Result<Operator> {
    params.validate()?;
    let (e1, e2) = params.frame_energies();
    let c = fock_lowering(space);
    let cd = fock_raising(space);
    let mut h = Operator::zero(*space);
    let re = |x: f64| C64::new(x, 0.0);
    for l in Level::ALL {
        h = h.add(&atomic_transition(space, Atom::First, l, l).scale(re(e1[l.index()])))?;
        h = h.add(&atomic_transition(space, Atom::Second, l, l).scale(re(e2[l.index()])))?;
    }
    let drive1 = atomic_transition(space, Atom::First, Level::G, Level::A).scale(re(params.rabi1));
    let drive2 = atomic_transition(space, Atom::Second, Level::G, Level::B).scale(re(params.rabi2));
    h = h.add(&drive1)?.add(&drive1.adjoint())?;
    h = h.add(&drive2)?.add(&drive2.adjoint())?;
    for atom in [Atom::First, Atom::Second] {
        let to_a = c
            .mul(&atomic_transition(space, atom, Level::R, Level::A))?
            .scale(re(params.coupling_a));
        let to_b = cd
            .mul(&atomic_transition(space, atom, Level::R, Level::B))?
            .scale(re(params.coupling_b));
        h = h.add(&to_a)?.add(&to_a.adjoint())?;
        h = h.add(&to_b)?.add(&to_b.adjoint())?;
    }
    h.claim_hermitian()
}

/// Decay, dephasing and optional thermal cavity jump operators. Operators
/// with a vanishing rate are omitted.
pub fn lindblad_set(params: &SystemParams, space: &CompositeSpace) -> Result<Vec<Operator>> {
    params.validate()?;
    let mut out = Vec::new();
    if params.decay > 0.0 {
        let s = C64::new(params.decay.sqrt(), 0.0);
        for atom in [Atom::First, Atom::Second] {
            for nu in [Level::R, Level::A, Level::B] {
                out.push(atomic_transition(space, atom, nu, Level::G).scale(s));
            }
        }
    }
    if params.dephasing > 0.0 {
        let s = (params.dephasing / 2.0).sqrt();
        for atom in [Atom::First, Atom::Second] {
            let t = (0..space.dim())
                .map(|idx| {
                    let (l1, l2, _) = space.decode(idx);
                    let own = if atom == Atom::First { l1 } else { l2 };
                    let sign = if own == Level::G { 1.0 } else { -1.0 };
                    (idx, idx, C64::new(sign * s, 0.0))
                })
                .collect();
            out.push(Operator::from_triplets(*space, t, true)?);
        }
    }
    if params.cavity_loss > 0.0 {
        let k = params.cavity_loss;
        let nb = params.thermal_photons;
        out.push(fock_lowering(space).scale(C64::new((k * (nb + 1.0)).sqrt(), 0.0)));
        if nb > 0.0 {
            out.push(fock_raising(space).scale(C64::new((k * nb).sqrt(), 0.0)));
        }
    }
    Ok(out)
}

/// Conserved excitation count of a basis state: photons plus per-level
/// charges chosen so every Hamiltonian term preserves the total.
pub fn excitation_number(l1: Level, l2: Level, n: usize) -> i64 {
    let q1 = match l1 {
        Level::G | Level::A => 1,
        Level::R => 0,
        Level::B => -1,
    };
    let q2 = match l2 {
        Level::G | Level::B => -1,
        Level::R => 0,
        Level::A => 1,
    };
    n as i64 + q1 + q2
}
