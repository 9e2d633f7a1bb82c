use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical role of a tensor factor. Oscillators are truncated Fock spaces;
/// the guard and the linear extraction only look at those.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Oscillator,
    Qubit,
    Spin,
    Qudit,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
    pub kind: FactorKind,
}

impl Factor {
    pub fn new(label: impl Into<String>, dim: usize, kind: FactorKind) -> Self {
        Factor { label: label.into(), dim, kind }
    }

    pub fn oscillator(label: impl Into<String>, dim: usize) -> Self {
        Self::new(label, dim, FactorKind::Oscillator)
    }

    pub fn qubit(label: impl Into<String>) -> Self {
        Self::new(label, 2, FactorKind::Qubit)
    }
}

/// Tensor product of labeled factors, kept sorted by label so that every
/// space built from the same factors has the same matrix layout.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledSpace {
    factors: Vec<Factor>,
}

impl LabeledSpace {
    /// The trivial space (no factors, total dimension 1).
    pub fn scalar() -> Self {
        LabeledSpace { factors: Vec::new() }
    }

    pub fn new(mut factors: Vec<Factor>) -> Result<Self> {
        factors.sort_by(|a, b| a.label.cmp(&b.label));
        for w in factors.windows(2) {
            if w[0].label == w[1].label {
                return Err(Error::Construction(format!("duplicate factor label '{}'", w[0].label)));
            }
        }
        if let Some(f) = factors.iter().find(|f| f.dim == 0) {
            return Err(Error::Construction(format!("factor '{}' has dimension 0", f.label)));
        }
        Ok(LabeledSpace { factors })
    }

    pub fn single(factor: Factor) -> Result<Self> {
        Self::new(vec![factor])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.label.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn is_scalar(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    pub fn factor(&self, label: &str) -> Option<&Factor> {
        self.factors.iter().find(|f| f.label == label)
    }

    /// Smallest space containing both; shared labels must agree on dim and kind.
    pub fn union(&self, other: &LabeledSpace) -> Result<LabeledSpace> {
        if self == other {
            return Ok(self.clone());
        }
        let mut factors = self.factors.clone();
        for f in &other.factors {
            match self.factor(&f.label) {
                Some(g) if g.dim != f.dim || g.kind != f.kind => {
                    return Err(Error::Embedding(format!(
                        "factor '{}' appears with dim {} and dim {}",
                        f.label, g.dim, f.dim
                    )))
                }
                Some(_) => {}
                None => factors.push(f.clone()),
            }
        }
        LabeledSpace::new(factors)
    }

    pub fn contains(&self, other: &LabeledSpace) -> bool {
        other.factors.iter().all(|f| self.factor(&f.label) == Some(f))
    }

    /// Space with the listed labels only.
    pub fn restrict(&self, keep: &[&str]) -> Result<LabeledSpace> {
        for k in keep {
            if self.position(k).is_none() {
                return Err(Error::Embedding(format!("unknown factor label '{k}'")));
            }
        }
        LabeledSpace::new(self.factors.iter().filter(|f| keep.contains(&f.label.as_str())).cloned().collect())
    }

    /// Mixed-radix digits of a basis index, one per factor.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut d = vec![0; self.factors.len()];
        for (k, f) in self.factors.iter().enumerate().rev() {
            d[k] = index % f.dim;
            index /= f.dim;
        }
        d
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        self.factors.iter().zip(digits).fold(0, |acc, (f, &d)| acc * f.dim + d)
    }
}
