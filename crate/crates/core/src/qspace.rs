//! Two four-level atoms times a truncated photon band: basis indexing,
//! sparse operators and state containers.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for the hermiticity claim carried by an [`Operator`].
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    G = 0,
    A = 1,
    B = 2,
    R = 3,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::G, Level::A, Level::B, Level::R];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Self::ALL.get(i).copied()
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" | "G" => Ok(Level::G),
            "a" | "A" => Ok(Level::A),
            "b" | "B" => Ok(Level::B),
            "r" | "R" => Ok(Level::R),
            other => Err(Error::InvalidLevel(other.to_string())),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Level::G => "g",
            Level::A => "a",
            Level::B => "b",
            Level::R => "r",
        };
        f.write_str(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    First,
    Second,
}

impl Atom {
    pub fn from_number(i: u8) -> Result<Atom> {
        match i {
            1 => Ok(Atom::First),
            2 => Ok(Atom::Second),
            _ => Err(Error::InvalidAtom(i)),
        }
    }
}

/// Basis `(level1, level2, n)` with `n` in `[fock_min, fock_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CompositeSpace {
    fock_min: usize,
    fock_max: usize,
}

impl CompositeSpace {
    pub fn new(fock_min: usize, fock_max: usize) -> Result<Self> {
        if fock_min > fock_max {
            return Err(Error::InvalidRange {
                what: "fock band",
                detail: format!("fock_min {fock_min} > fock_max {fock_max}"),
            });
        }
        Ok(CompositeSpace { fock_min, fock_max })
    }

    /// Band `[max(0, n - halfwidth), n + halfwidth]`.
    pub fn around(n: usize, halfwidth: usize) -> Self {
        CompositeSpace {
            fock_min: n.saturating_sub(halfwidth),
            fock_max: n + halfwidth,
        }
    }

    pub fn fock_min(&self) -> usize {
        self.fock_min
    }

    pub fn fock_max(&self) -> usize {
        self.fock_max
    }

    pub fn n_fock(&self) -> usize {
        self.fock_max - self.fock_min + 1
    }

    pub fn dim(&self) -> usize {
        16 * self.n_fock()
    }

    pub fn contains_photons(&self, n: usize) -> bool {
        (self.fock_min..=self.fock_max).contains(&n)
    }

    pub fn encode(&self, l1: Level, l2: Level, n: usize) -> Option<usize> {
        if !self.contains_photons(n) {
            return None;
        }
        Some((l1.index() * 4 + l2.index()) * self.n_fock() + (n - self.fock_min))
    }

    /// Like [`encode`](Self::encode) but panics outside the band.
    pub fn index(&self, l1: Level, l2: Level, n: usize) -> usize {
        self.encode(l1, l2, n)
            .unwrap_or_else(|| panic!("photon number {n} outside band {self}"))
    }

    pub fn decode(&self, idx: usize) -> (Level, Level, usize) {
        assert!(idx < self.dim(), "index {idx} out of range for {self}");
        let nf = self.n_fock();
        let pair = idx / nf;
        (
            Level::ALL[pair / 4],
            Level::ALL[pair % 4],
            self.fock_min + idx % nf,
        )
    }

    pub fn photons(&self, idx: usize) -> usize {
        self.fock_min + idx % self.n_fock()
    }

    /// Fock levels sitting at an artificial truncation edge. The lower
    /// edge only counts when it is above the vacuum.
    pub fn is_truncation_edge(&self, n: usize) -> bool {
        n == self.fock_max || (self.fock_min > 0 && n == self.fock_min)
    }
}

impl fmt::Display for CompositeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.fock_min, self.fock_max)
    }
}

/// Sparse complex matrix in row-major, column-sorted storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: CompositeSpace,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl Operator {
    /// Duplicate entries are summed and exact zeros dropped. A hermitian
    /// claim is verified against [`HERMITIAN_TOL`].
    pub fn from_triplets(
        space: CompositeSpace,
        mut triplets: Vec<(usize, usize, C64)>,
        hermitian: bool,
    ) -> Result<Self> {
        let dim = space.dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::InvalidRange {
                what: "operator entry",
                detail: format!("({r}, {c}) outside dim {dim}"),
            });
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != C64::new(0.0, 0.0));

        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let op = Operator {
            space,
            row_ptr,
            cols: merged.iter().map(|e| e.1).collect(),
            vals: merged.iter().map(|e| e.2).collect(),
            hermitian: false,
        };
        if hermitian {
            op.claim_hermitian()
        } else {
            Ok(op)
        }
    }

    pub fn zero(space: CompositeSpace) -> Self {
        Operator {
            space,
            row_ptr: vec![0; space.dim() + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(space: CompositeSpace) -> Self {
        let t = (0..space.dim()).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        Self::from_triplets(space, t, true).expect("identity is valid")
    }

    pub fn from_dense(space: CompositeSpace, m: &DMatrix<C64>, hermitian: bool) -> Result<Self> {
        let dim = space.dim();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.nrows().max(m.ncols()),
            });
        }
        let mut t = Vec::new();
        for r in 0..dim {
            for c in 0..dim {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    t.push((r, c, v));
                }
            }
        }
        Self::from_triplets(space, t, hermitian)
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn claim_hermitian(mut self) -> Result<Self> {
        let dev = self.hermitian_deviation();
        if dev >= HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        self.hermitian = true;
        Ok(self)
    }

    /// Entries in deterministic row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.cols[lo..hi].binary_search(&c) {
            Ok(k) => self.vals[lo + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Largest element-wise deviation `|A - A^dagger|`.
    pub fn hermitian_deviation(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Operator {
        let t = self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        let mut op = Self::from_triplets(self.space, t, false).expect("same space");
        op.hermitian = self.hermitian;
        op
    }

    pub fn scale(&self, s: C64) -> Operator {
        let t = self.entries().map(|(r, c, v)| (r, c, v * s)).collect();
        let mut op = Self::from_triplets(self.space, t, false).expect("same space");
        op.hermitian = self.hermitian && s.im == 0.0;
        op
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_space(other)?;
        let t = self.entries().chain(other.entries()).collect();
        let mut op = Self::from_triplets(self.space, t, false)?;
        op.hermitian = self.hermitian && other.hermitian;
        Ok(op)
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check_space(other)?;
        let mut t = Vec::new();
        for (r, k, a) in self.entries() {
            for (c, b) in other.row(k) {
                t.push((r, c, a * b));
            }
        }
        Self::from_triplets(self.space, t, false)
    }

    /// `A B - B A`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        ab.add(&ba.scale(C64::new(-1.0, 0.0)))
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim());
        (0..self.dim())
            .map(|r| self.row(r).map(|(c, a)| a * v[c]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    fn check_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }
}

/// Photon annihilation with hard truncation at the lower band edge.
pub fn fock_lowering(space: &CompositeSpace) -> Operator {
    let mut t = Vec::new();
    for idx in 0..space.dim() {
        let (l1, l2, n) = space.decode(idx);
        if n > space.fock_min() {
            t.push((space.index(l1, l2, n - 1), idx, C64::new((n as f64).sqrt(), 0.0)));
        }
    }
    Operator::from_triplets(*space, t, false).expect("in range")
}

pub fn fock_raising(space: &CompositeSpace) -> Operator {
    fock_lowering(space).adjoint()
}

pub fn photon_number(space: &CompositeSpace) -> Operator {
    let t = (0..space.dim())
        .map(|i| (i, i, C64::new(space.photons(i) as f64, 0.0)))
        .collect();
    Operator::from_triplets(*space, t, true).expect("diagonal")
}

/// `|to><from|` on one atom, identity elsewhere.
pub fn atomic_transition(space: &CompositeSpace, atom: Atom, from: Level, to: Level) -> Operator {
    let mut t = Vec::new();
    for idx in 0..space.dim() {
        let (l1, l2, n) = space.decode(idx);
        let (own, target) = match atom {
            Atom::First => (l1, space.index(to, l2, n)),
            Atom::Second => (l2, space.index(l1, to, n)),
        };
        if own == from {
            t.push((target, idx, C64::new(1.0, 0.0)));
        }
    }
    Operator::from_triplets(*space, t, from == to).expect("in range")
}

/// String-labelled variant of [`atomic_transition`].
pub fn atomic_transition_labels(
    space: &CompositeSpace,
    atom: u8,
    from: &str,
    to: &str,
) -> Result<Operator> {
    Ok(atomic_transition(
        space,
        Atom::from_number(atom)?,
        from.parse()?,
        to.parse()?,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure {
        space: CompositeSpace,
        amplitudes: DVector<C64>,
    },
    Mixed {
        space: CompositeSpace,
        matrix: DMatrix<C64>,
    },
}

/// Tolerances for state validity checks.
pub const NORM_TOL: f64 = 1e-8;
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

impl QuantumState {
    pub fn basis(space: &CompositeSpace, l1: Level, l2: Level, n: usize) -> Result<Self> {
        let idx = space.encode(l1, l2, n).ok_or_else(|| Error::InvalidRange {
            what: "photon number",
            detail: format!("{n} outside band {space}"),
        })?;
        let mut amplitudes = DVector::zeros(space.dim());
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(QuantumState::Pure {
            space: *space,
            amplitudes,
        })
    }

    pub fn pure(space: &CompositeSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        let s = QuantumState::Pure {
            space: *space,
            amplitudes,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn mixed(space: &CompositeSpace, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: matrix.nrows(),
            });
        }
        let s = QuantumState::Mixed {
            space: *space,
            matrix,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn space(&self) -> &CompositeSpace {
        match self {
            QuantumState::Pure { space, .. } | QuantumState::Mixed { space, .. } => space,
        }
    }

    pub fn density(&self) -> DMatrix<C64> {
        match self {
            QuantumState::Pure { amplitudes, .. } => amplitudes * amplitudes.adjoint(),
            QuantumState::Mixed { matrix, .. } => matrix.clone(),
        }
    }

    pub fn population(&self, idx: usize) -> f64 {
        match self {
            QuantumState::Pure { amplitudes, .. } => amplitudes[idx].norm_sqr(),
            QuantumState::Mixed { matrix, .. } => matrix[(idx, idx)].re,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            QuantumState::Pure { amplitudes, .. } => {
                let dev = (amplitudes.norm_squared() - 1.0).abs();
                if dev >= NORM_TOL {
                    return Err(Error::InvalidState(format!("norm deviation {dev:e}")));
                }
            }
            QuantumState::Mixed { matrix, .. } => {
                let tr = matrix.trace();
                if (tr - C64::new(1.0, 0.0)).norm() >= NORM_TOL {
                    return Err(Error::InvalidState(format!("trace {tr}")));
                }
                let herm = (matrix - matrix.adjoint())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                if herm >= DENSITY_HERMITIAN_TOL {
                    return Err(Error::InvalidState(format!("hermiticity {herm:e}")));
                }
                let sym = (matrix + matrix.adjoint()).scale(0.5);
                let min = sym.symmetric_eigenvalues().min();
                if min < -POSITIVITY_TOL {
                    return Err(Error::InvalidState(format!("min eigenvalue {min:e}")));
                }
            }
        }
        Ok(())
    }
}
