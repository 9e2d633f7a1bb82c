use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::space::{Factor, FactorKind, LabeledSpace};
use crate::error::{Error, Result};

type C64 = Complex64;

/// Pure initial state of one factor.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalState {
    Vacuum,
    Fock(usize),
    Coherent(C64),
    Qubit { excited: bool },
}

impl LocalState {
    /// Normalized ket in the factor's basis. Coherent states are
    /// renormalized after truncation.
    pub fn ket(&self, factor: &Factor) -> Result<DVector<C64>> {
        let d = factor.dim;
        let mut v = DVector::zeros(d);
        match *self {
            LocalState::Vacuum => v[0] = C64::new(1.0, 0.0),
            LocalState::Fock(n) => {
                if n >= d {
                    return Err(Error::Validation(format!(
                        "fock({n}) does not fit factor '{}' of dim {d}",
                        factor.label
                    )));
                }
                v[n] = C64::new(1.0, 0.0);
            }
            LocalState::Coherent(alpha) => {
                if factor.kind != FactorKind::Oscillator {
                    return Err(Error::Validation(format!("coherent state on non-oscillator '{}'", factor.label)));
                }
                let mut c = C64::new(1.0, 0.0);
                for n in 0..d {
                    if n > 0 {
                        c *= alpha / (n as f64).sqrt();
                    }
                    v[n] = c;
                }
                let norm = v.norm();
                v /= C64::new(norm, 0.0);
            }
            LocalState::Qubit { excited } => {
                if d != 2 {
                    return Err(Error::Validation(format!("qubit state on factor '{}' of dim {d}", factor.label)));
                }
                v[usize::from(excited)] = C64::new(1.0, 0.0);
            }
        }
        Ok(v)
    }
}

impl fmt::Display for LocalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalState::Vacuum => write!(f, "vacuum"),
            LocalState::Fock(n) => write!(f, "fock({n})"),
            LocalState::Coherent(a) if a.im == 0.0 => write!(f, "coherent({:?})", a.re),
            LocalState::Coherent(a) => write!(f, "coherent({:?} + {:?}i)", a.re, a.im),
            LocalState::Qubit { excited: true } => write!(f, "qubit(excited)"),
            LocalState::Qubit { excited: false } => write!(f, "qubit(ground)"),
        }
    }
}

/// Product ket over a space; factors without an entry start in vacuum.
pub fn product_ket(space: &LabeledSpace, states: &[(String, LocalState)]) -> Result<DVector<C64>> {
    for (label, _) in states {
        if space.position(label).is_none() {
            return Err(Error::Validation(format!("initial state given for unknown factor '{label}'")));
        }
    }
    let mut ket = DVector::from_element(1, C64::new(1.0, 0.0));
    for f in space.factors() {
        let local = states.iter().rev().find(|(l, _)| l == &f.label).map(|(_, s)| s).unwrap_or(&LocalState::Vacuum);
        ket = ket.kronecker(&local.ket(f)?);
    }
    Ok(ket)
}

pub fn product_density(space: &LabeledSpace, states: &[(String, LocalState)]) -> Result<DMatrix<C64>> {
    let k = product_ket(space, states)?;
    Ok(&k * k.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_amplitude() {
        let f = Factor::oscillator("m", 30);
        let alpha = C64::new(0.7, -0.2);
        let v = LocalState::Coherent(alpha).ket(&f).unwrap();
        let mean: C64 = (1..30).map(|n| v[n - 1].conj() * v[n] * (n as f64).sqrt()).sum();
        assert!((mean - alpha).norm() < 1e-12);
    }

    #[test]
    fn product_layout() {
        let s = LabeledSpace::new(vec![Factor::oscillator("a", 3), Factor::qubit("q")]).unwrap();
        let k = product_ket(&s, &[("a".into(), LocalState::Fock(1)), ("q".into(), LocalState::Qubit { excited: true })])
            .unwrap();
        assert_eq!(k[3], C64::new(1.0, 0.0));
        assert!(product_ket(&s, &[("zz".into(), LocalState::Vacuum)]).is_err());
    }
}
