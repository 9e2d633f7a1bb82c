//! Ladder, Pauli, spin and projector matrices on a single factor.
//!
//! Qubit basis: index 0 is the ground state, so `σ− = |0⟩⟨1|` and
//! `σz = diag(−1, +1) = [σ+, σ−]`.

use num_complex::Complex64;

use super::operator::Operator;
use super::space::{Factor, FactorKind, LabeledSpace};
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementary {
    Annihilation,
    Creation,
    Number,
    PauliX,
    PauliY,
    PauliZ,
    SigmaMinus,
    SigmaPlus,
    Projector(usize, usize),
    Identity,
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl Elementary {
    fn default_kind(self) -> FactorKind {
        match self {
            Elementary::PauliX
            | Elementary::PauliY
            | Elementary::PauliZ
            | Elementary::SigmaMinus
            | Elementary::SigmaPlus => FactorKind::Qubit,
            _ => FactorKind::Oscillator,
        }
    }

    /// Standard matrix on the given factor.
    pub fn on(self, factor: &Factor) -> Result<Operator> {
        let d = factor.dim;
        let two_level = matches!(
            self,
            Elementary::PauliX | Elementary::PauliY | Elementary::PauliZ | Elementary::SigmaMinus | Elementary::SigmaPlus
        );
        if self != Elementary::Identity && d < 2 {
            return Err(Error::Construction(format!("{self:?} needs dim >= 2, got {d}")));
        }
        if two_level && d != 2 {
            return Err(Error::Construction(format!("{self:?} is defined on dim 2, got {d}")));
        }
        let trip: Vec<(usize, usize, C64)> = match self {
            Elementary::Annihilation => (1..d).map(|n| (n - 1, n, re((n as f64).sqrt()))).collect(),
            Elementary::Creation => (1..d).map(|n| (n, n - 1, re((n as f64).sqrt()))).collect(),
            Elementary::Number => (0..d).map(|n| (n, n, re(n as f64))).collect(),
            Elementary::PauliX => vec![(0, 1, re(1.0)), (1, 0, re(1.0))],
            Elementary::PauliY => vec![(0, 1, C64::new(0.0, 1.0)), (1, 0, C64::new(0.0, -1.0))],
            Elementary::PauliZ => vec![(0, 0, re(-1.0)), (1, 1, re(1.0))],
            Elementary::SigmaMinus => vec![(0, 1, re(1.0))],
            Elementary::SigmaPlus => vec![(1, 0, re(1.0))],
            Elementary::Projector(i, j) => {
                if i >= d || j >= d {
                    return Err(Error::Construction(format!("projector index ({i}, {j}) out of range for dim {d}")));
                }
                vec![(i, j, re(1.0))]
            }
            Elementary::Identity => (0..d).map(|n| (n, n, re(1.0))).collect(),
        };
        let space = LabeledSpace::single(factor.clone())?;
        Operator::new(space, SparseMatrix::from_triplets(d, d, trip))
    }
}

/// Builds an elementary operator on a fresh single-factor space. Ladder,
/// projector and identity kinds use an oscillator factor, the two-level
/// kinds a qubit factor.
pub fn make_elementary(kind: Elementary, label: &str, dim: usize) -> Result<Operator> {
    kind.on(&Factor::new(label, dim, kind.default_kind()))
}

pub fn annihilation(label: &str, dim: usize) -> Result<Operator> {
    make_elementary(Elementary::Annihilation, label, dim)
}

pub fn creation(label: &str, dim: usize) -> Result<Operator> {
    make_elementary(Elementary::Creation, label, dim)
}

pub fn number(label: &str, dim: usize) -> Result<Operator> {
    make_elementary(Elementary::Number, label, dim)
}

pub fn identity(label: &str, dim: usize) -> Result<Operator> {
    make_elementary(Elementary::Identity, label, dim)
}

pub fn projector(label: &str, dim: usize, i: usize, j: usize) -> Result<Operator> {
    make_elementary(Elementary::Projector(i, j), label, dim)
}

pub fn sigma_minus(label: &str) -> Result<Operator> {
    make_elementary(Elementary::SigmaMinus, label, 2)
}

pub fn sigma_plus(label: &str) -> Result<Operator> {
    make_elementary(Elementary::SigmaPlus, label, 2)
}

pub fn pauli_x(label: &str) -> Result<Operator> {
    make_elementary(Elementary::PauliX, label, 2)
}

pub fn pauli_y(label: &str) -> Result<Operator> {
    make_elementary(Elementary::PauliY, label, 2)
}

pub fn pauli_z(label: &str) -> Result<Operator> {
    make_elementary(Elementary::PauliZ, label, 2)
}

/// Collective spin-`j` lowering operator `Ĵ−` with `j = (dim−1)/2`, basis
/// index `k` holding `m = k − j`.
pub fn spin_lower(factor: &Factor) -> Result<Operator> {
    let d = factor.dim;
    if d < 2 {
        return Err(Error::Construction(format!("spin factor needs dim >= 2, got {d}")));
    }
    let j = (d as f64 - 1.0) / 2.0;
    let trip = (1..d).map(|k| {
        let m = k as f64 - j;
        (k - 1, k, re((j * (j + 1.0) - m * (m - 1.0)).sqrt()))
    });
    Operator::new(LabeledSpace::single(factor.clone())?, SparseMatrix::from_triplets(d, d, trip))
}

/// `Ĵz` with eigenvalues `−j..=j` in basis order.
pub fn spin_z(factor: &Factor) -> Result<Operator> {
    let d = factor.dim;
    let j = (d as f64 - 1.0) / 2.0;
    let diag: Vec<C64> = (0..d).map(|k| re(k as f64 - j)).collect();
    Operator::new(LabeledSpace::single(factor.clone())?, SparseMatrix::diagonal(&diag))
}
