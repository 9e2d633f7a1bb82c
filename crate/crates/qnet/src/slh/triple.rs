use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{LabeledSpace, LocalState, Operator};
use crate::tol::TOL_OP;

type C64 = Complex64;

/// `(S, L, H)` with every entry embedded in one shared space.
#[derive(Clone, Debug)]
pub struct SlhTriple {
    space: LabeledSpace,
    s: Vec<Vec<Operator>>,
    l: Vec<Operator>,
    h: Operator,
    ports: Vec<String>,
    /// Free-form annotations (component kind, direct-coupling operands...).
    pub metadata: BTreeMap<String, String>,
    /// Initial states attached by source components, keyed by factor label.
    pub initial: Vec<(String, LocalState)>,
}

/// Residuals of the structural invariants of a triple.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantReport {
    pub unitarity: f64,
    pub hermiticity: f64,
}

impl InvariantReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.unitarity <= tol && self.hermiticity <= tol
    }
}

impl SlhTriple {
    /// Builds a triple, embedding all entries into their union space. `H` is
    /// symmetrized when its anti-Hermitian part is round-off, rejected otherwise.
    pub fn new(s: Vec<Vec<Operator>>, l: Vec<Operator>, h: Operator) -> Result<Self> {
        let n = l.len();
        if s.len() != n || s.iter().any(|row| row.len() != n) {
            return Err(Error::Construction(format!("S must be {n}x{n} to match L")));
        }
        let mut space = h.space().clone();
        for op in s.iter().flatten().chain(l.iter()) {
            space = space.union(op.space())?;
        }
        Self::on_space(space, s, l, h)
    }

    /// Like [`SlhTriple::new`] but on an explicit (possibly larger) space.
    pub fn on_space(space: LabeledSpace, s: Vec<Vec<Operator>>, l: Vec<Operator>, h: Operator) -> Result<Self> {
        let n = l.len();
        if s.len() != n || s.iter().any(|row| row.len() != n) {
            return Err(Error::Construction(format!("S must be {n}x{n} to match L")));
        }
        let s = s
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.embed(&space)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let l = l.into_iter().map(|x| x.embed(&space)).collect::<Result<Vec<_>>>()?;
        let h = finalize_hamiltonian(h.embed(&space)?)?;
        Ok(SlhTriple {
            space,
            s,
            l,
            h,
            ports: (1..=n).map(|k| k.to_string()).collect(),
            metadata: BTreeMap::new(),
            initial: Vec::new(),
        })
    }

    /// `(I_n, 0, 0)` on the scalar space.
    pub fn identity(n: usize) -> Self {
        let sp = LabeledSpace::scalar();
        let one = Operator::identity(&sp);
        let zero = Operator::zero(&sp);
        let s = (0..n).map(|i| (0..n).map(|j| if i == j { one.clone() } else { zero.clone() }).collect()).collect();
        SlhTriple::on_space(sp, s, vec![zero.clone(); n], zero).expect("identity triple")
    }

    /// `(S, 0, 0)` for a constant complex scattering matrix.
    pub fn static_scattering(s: &[Vec<C64>]) -> Result<Self> {
        let sp = LabeledSpace::scalar();
        let n = s.len();
        let ops = s.iter().map(|row| row.iter().map(|&v| Operator::scalar(v)).collect()).collect();
        SlhTriple::on_space(sp.clone(), ops, vec![Operator::zero(&sp); n], Operator::zero(&sp))
    }

    pub fn space(&self) -> &LabeledSpace {
        &self.space
    }

    pub fn n_ports(&self) -> usize {
        self.l.len()
    }

    pub fn s(&self) -> &[Vec<Operator>] {
        &self.s
    }

    pub fn s_entry(&self, i: usize, j: usize) -> &Operator {
        &self.s[i][j]
    }

    pub fn l(&self) -> &[Operator] {
        &self.l
    }

    pub fn h(&self) -> &Operator {
        &self.h
    }

    pub fn ports(&self) -> &[String] {
        &self.ports
    }

    pub fn with_ports(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_ports() {
            return Err(Error::Construction(format!("{} port names for {} ports", names.len(), self.n_ports())));
        }
        self.ports = names;
        Ok(self)
    }

    pub fn set_ports(&mut self, names: Vec<String>) {
        assert_eq!(names.len(), self.n_ports());
        self.ports = names;
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn with_initial(mut self, label: &str, state: LocalState) -> Self {
        self.initial.push((label.to_string(), state));
        self
    }

    pub fn is_time_dependent(&self) -> bool {
        self.h.is_time_dependent() || self.l.iter().chain(self.s.iter().flatten()).any(|x| x.is_time_dependent())
    }

    pub fn s_is_constant(&self) -> bool {
        self.s.iter().flatten().all(|x| !x.is_time_dependent())
    }

    /// Re-embeds every entry into a larger space.
    pub fn embed(&self, target: &LabeledSpace) -> Result<SlhTriple> {
        let mut out = SlhTriple::on_space(target.clone(), self.s.clone(), self.l.clone(), self.h.clone())?;
        out.ports = self.ports.clone();
        out.metadata = self.metadata.clone();
        out.initial = self.initial.clone();
        Ok(out)
    }

    /// All entries frozen at time `t`.
    pub fn at(&self, t: f64) -> SlhTriple {
        SlhTriple {
            space: self.space.clone(),
            s: self.s.iter().map(|r| r.iter().map(|x| x.at(t)).collect()).collect(),
            l: self.l.iter().map(|x| x.at(t)).collect(),
            h: self.h.at(t),
            ports: self.ports.clone(),
            metadata: self.metadata.clone(),
            initial: self.initial.clone(),
        }
    }

    /// `max(‖S†S − I‖, ‖SS† − I‖)` and `‖H − H†‖`, entrywise max-norm.
    pub fn invariants(&self) -> InvariantReport {
        let n = self.n_ports();
        let id = Operator::identity(&self.space);
        let mut unitarity: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut a = Operator::zero(&self.space);
                let mut b = Operator::zero(&self.space);
                for k in 0..n {
                    a = &a + &(&self.s[k][i].adjoint() * &self.s[k][j]);
                    b = &b + &(&self.s[i][k] * &self.s[j][k].adjoint());
                }
                if i == j {
                    a = &a - &id;
                    b = &b - &id;
                }
                unitarity = unitarity.max(a.max_abs()).max(b.max_abs());
            }
        }
        InvariantReport { unitarity, hermiticity: self.h.hermitian_residual() }
    }

    /// Max-norm distance between corresponding entries; port counts must agree.
    pub fn max_diff(&self, other: &SlhTriple) -> Result<f64> {
        if self.n_ports() != other.n_ports() {
            return Err(Error::Composition(format!("{} vs {} ports", self.n_ports(), other.n_ports())));
        }
        let mut d = self.h.max_diff(&other.h)?;
        for (a, b) in self.l.iter().zip(&other.l) {
            d = d.max(a.max_diff(b)?);
        }
        for (ra, rb) in self.s.iter().zip(&other.s) {
            for (a, b) in ra.iter().zip(rb) {
                d = d.max(a.max_diff(b)?);
            }
        }
        Ok(d)
    }

    pub fn approx_eq(&self, other: &SlhTriple, tol: f64) -> bool {
        matches!(self.max_diff(other), Ok(d) if d <= tol)
    }

    pub(crate) fn from_parts(
        space: LabeledSpace,
        s: Vec<Vec<Operator>>,
        l: Vec<Operator>,
        h: Operator,
        ports: Vec<String>,
    ) -> Result<Self> {
        let mut out = SlhTriple::on_space(space, s, l, h)?;
        out.ports = ports;
        Ok(out)
    }

    pub(crate) fn carry_annotations(mut self, from: &[&SlhTriple]) -> Self {
        for g in from {
            for (k, v) in &g.metadata {
                self.metadata.entry(k.clone()).or_insert_with(|| v.clone());
            }
            self.initial.extend(g.initial.iter().cloned());
        }
        self
    }
}

/// Symmetrizes `H` if the anti-Hermitian residual is round-off.
pub(crate) fn finalize_hamiltonian(h: Operator) -> Result<Operator> {
    let residual = h.hermitian_residual();
    let scale = h.max_abs().max(1.0);
    if residual > TOL_OP * scale {
        return Err(Error::Validation(format!("Hamiltonian is not Hermitian: ‖H − H†‖ = {residual:.3e}")));
    }
    Ok(h.symmetrized().cleaned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::elementary::{annihilation, number};

    #[test]
    fn rejects_non_hermitian_h() {
        let a = annihilation("m", 3).unwrap();
        assert!(SlhTriple::new(vec![], vec![], a).is_err());
    }

    #[test]
    fn entries_share_space() {
        let a = annihilation("m", 3).unwrap();
        let s = vec![vec![Operator::scalar(C64::new(1.0, 0.0))]];
        let g = SlhTriple::new(s, vec![a.clone()], number("q", 2).unwrap()).unwrap();
        assert_eq!(g.space().total_dim(), 6);
        assert_eq!(g.s_entry(0, 0).dim(), 6);
        assert!(g.invariants().passes(1e-12));
    }

    #[test]
    fn identity_is_unitary() {
        let g = SlhTriple::identity(3);
        assert_eq!(g.n_ports(), 3);
        assert!(g.invariants().passes(0.0));
    }
}
