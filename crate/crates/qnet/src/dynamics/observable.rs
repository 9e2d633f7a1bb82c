//! Observable specifications such as `c.n`, `q.sz`, `a.ad*b.a`, `flux[2]`.

use crate::error::{Error, Result};
use crate::hilbert::elementary::{spin_lower, spin_z};
use crate::hilbert::{Elementary, FactorKind, LabeledSpace, Operator};
use crate::tol::TOL_OP;

#[derive(Clone, Debug)]
pub enum Observable {
    /// Expectation of a system operator.
    Expect { name: String, op: Operator, hermitian: bool },
    /// Instantaneous output photon flux; `None` sums all ports.
    Flux { name: String, port: Option<usize> },
    /// Output photons accumulated since the start.
    Emitted { name: String, port: Option<usize> },
    Trace,
}

impl Observable {
    pub fn name(&self) -> &str {
        match self {
            Observable::Expect { name, .. } | Observable::Flux { name, .. } | Observable::Emitted { name, .. } => name,
            Observable::Trace => "trace",
        }
    }

    pub fn is_real(&self) -> bool {
        !matches!(self, Observable::Expect { hermitian: false, .. })
    }

    pub fn parse(text: &str, space: &LabeledSpace, n_outputs: usize) -> Result<Observable> {
        let text = text.trim();
        if text == "trace" {
            return Ok(Observable::Trace);
        }
        for (stem, emitted) in [("flux", false), ("emitted", true)] {
            if let Some(rest) = text.strip_prefix(stem) {
                let port = if rest.is_empty() {
                    None
                } else {
                    let inner = rest
                        .strip_prefix('[')
                        .and_then(|r| r.strip_suffix(']'))
                        .ok_or_else(|| Error::Validation(format!("malformed observable '{text}'")))?;
                    let k: usize = inner
                        .trim()
                        .parse()
                        .map_err(|_| Error::Validation(format!("malformed port in '{text}'")))?;
                    if k == 0 || k > n_outputs {
                        return Err(Error::Validation(format!("'{text}': port outside 1..{n_outputs}")));
                    }
                    Some(k - 1)
                };
                let name = text.to_string();
                return Ok(if emitted { Observable::Emitted { name, port } } else { Observable::Flux { name, port } });
            }
        }
        let mut op = Operator::identity(space);
        for factor in text.split('*') {
            op = &op * &single(factor.trim(), space)?;
        }
        let hermitian = op.hermitian_residual() <= TOL_OP;
        Ok(Observable::Expect { name: text.to_string(), op, hermitian })
    }
}

/// `label.op` with the operator name after the last dot.
fn single(text: &str, space: &LabeledSpace) -> Result<Operator> {
    let (label, name) = text
        .rsplit_once('.')
        .ok_or_else(|| Error::Validation(format!("observable '{text}' is not of the form label.op")))?;
    let factor = space.factor(label).ok_or_else(|| {
        Error::Validation(format!("observable '{text}': no factor '{label}' (have {})", space.labels().join(", ")))
    })?;
    let op = match (name, factor.kind) {
        ("id", _) => Elementary::Identity.on(factor)?,
        ("a", FactorKind::Oscillator) => Elementary::Annihilation.on(factor)?,
        ("ad", FactorKind::Oscillator) => Elementary::Creation.on(factor)?,
        ("n", FactorKind::Oscillator) => Elementary::Number.on(factor)?,
        ("x", FactorKind::Oscillator) => {
            let a = Elementary::Annihilation.on(factor)?;
            (&a + &a.adjoint()).scale_re(std::f64::consts::FRAC_1_SQRT_2)
        }
        ("p", FactorKind::Oscillator) => {
            let a = Elementary::Annihilation.on(factor)?;
            (&a - &a.adjoint()).scale(num_complex::Complex64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2))
        }
        ("sm", FactorKind::Qubit) => Elementary::SigmaMinus.on(factor)?,
        ("sp", FactorKind::Qubit) => Elementary::SigmaPlus.on(factor)?,
        ("sx", FactorKind::Qubit) => Elementary::PauliX.on(factor)?,
        ("sy", FactorKind::Qubit) => Elementary::PauliY.on(factor)?,
        ("sz", FactorKind::Qubit) => Elementary::PauliZ.on(factor)?,
        ("sm", FactorKind::Spin) => spin_lower(factor)?,
        ("sp", FactorKind::Spin) => spin_lower(factor)?.adjoint(),
        ("sz", FactorKind::Spin) => spin_z(factor)?,
        _ => {
            return Err(Error::Validation(format!(
                "observable '{text}': operator '{name}' is not defined on a {:?} factor",
                factor.kind
            )))
        }
    };
    op.embed(space)
}
