use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::coefficient::Coefficient;
use super::space::{FactorKind, LabeledSpace};
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

type C64 = Complex64;

/// Times at which time-dependent operators are compared.
const PROBE_TIMES: [f64; 6] = [0.0, 0.31, 1.07, 2.5, 4.2, 7.9];

/// A time-dependent part `c(t) · M` of an operator.
#[derive(Clone, Debug)]
pub struct Term {
    pub coeff: Coefficient,
    pub matrix: SparseMatrix,
}

/// Sparse operator on a labeled space: a constant matrix plus a sum of
/// scalar-envelope terms. Immutable; arithmetic returns new values.
///
/// The `+`, `-`, `*` operators embed both operands into the union space and
/// panic if the spaces disagree on a shared factor; use the `checked_*`
/// methods where that can happen.
#[derive(Clone, Debug)]
pub struct Operator {
    space: LabeledSpace,
    constant: SparseMatrix,
    terms: Vec<Term>,
}

impl Operator {
    pub fn new(space: LabeledSpace, matrix: SparseMatrix) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Construction(format!(
                "matrix is {}x{} but space dimension is {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Operator { space, constant: matrix, terms: Vec::new() })
    }

    pub fn from_dense(space: LabeledSpace, m: &DMatrix<C64>) -> Result<Self> {
        Self::new(space, SparseMatrix::from_dense(m))
    }

    pub fn zero(space: &LabeledSpace) -> Self {
        let n = space.total_dim();
        Operator { space: space.clone(), constant: SparseMatrix::zeros(n, n), terms: Vec::new() }
    }

    pub fn identity(space: &LabeledSpace) -> Self {
        let n = space.total_dim();
        Operator { space: space.clone(), constant: SparseMatrix::identity(n), terms: Vec::new() }
    }

    /// A c-number on the trivial space; embeds as `c·I` anywhere.
    pub fn scalar(c: C64) -> Self {
        Self::identity(&LabeledSpace::scalar()).scale(c)
    }

    /// `coeff(t) · op` for a constant `op`.
    pub fn timed(coeff: Coefficient, op: &Operator) -> Self {
        let mut out = Operator::zero(&op.space);
        for (c, m) in op.parts() {
            let coeff = match c {
                None => coeff.clone(),
                Some(c) => coeff.mul(c),
            };
            out.terms.push(Term { coeff, matrix: m.clone() });
        }
        out.terms.retain(|t| t.matrix.nnz() > 0);
        out
    }

    pub fn space(&self) -> &LabeledSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    /// Time-independent part of the operator.
    pub fn constant(&self) -> &SparseMatrix {
        &self.constant
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_time_dependent(&self) -> bool {
        !self.terms.is_empty()
    }

    /// Constant part (coefficient `None`) followed by each term.
    pub fn parts(&self) -> impl Iterator<Item = (Option<&Coefficient>, &SparseMatrix)> {
        std::iter::once((None, &self.constant)).chain(self.terms.iter().map(|t| (Some(&t.coeff), &t.matrix)))
    }

    pub fn matrix_at(&self, t: f64) -> SparseMatrix {
        self.terms.iter().fold(self.constant.clone(), |acc, term| acc.axpy(term.coeff.eval(t), &term.matrix))
    }

    /// Freezes all envelopes at time `t`.
    pub fn at(&self, t: f64) -> Operator {
        Operator { space: self.space.clone(), constant: self.matrix_at(t), terms: Vec::new() }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.constant.to_dense()
    }

    /// Pads with identities on every factor of `target` not in this space.
    pub fn embed(&self, target: &LabeledSpace) -> Result<Operator> {
        if &self.space == target {
            return Ok(self.clone());
        }
        if !target.contains(&self.space) {
            let missing: Vec<String> = self
                .space
                .factors()
                .iter()
                .filter(|f| target.factor(&f.label) != Some(f))
                .map(|f| format!("{}:{}", f.label, f.dim))
                .collect();
            return Err(Error::Embedding(format!("target space lacks factor(s) {}", missing.join(", "))));
        }
        let map = EmbedMap::new(&self.space, target);
        Ok(Operator {
            space: target.clone(),
            constant: map.apply(&self.constant),
            terms: self.terms.iter().map(|t| Term { coeff: t.coeff.clone(), matrix: map.apply(&t.matrix) }).collect(),
        })
    }

    fn lift_pair(&self, other: &Operator) -> Result<(Operator, Operator)> {
        let u = self.space.union(&other.space)?;
        Ok((self.embed(&u)?, other.embed(&u)?))
    }

    pub fn checked_add(&self, other: &Operator) -> Result<Operator> {
        let (a, b) = self.lift_pair(other)?;
        Ok(a.add_same(&b, C64::new(1.0, 0.0)))
    }

    pub fn checked_sub(&self, other: &Operator) -> Result<Operator> {
        let (a, b) = self.lift_pair(other)?;
        Ok(a.add_same(&b, C64::new(-1.0, 0.0)))
    }

    pub fn checked_mul(&self, other: &Operator) -> Result<Operator> {
        let (a, b) = self.lift_pair(other)?;
        Ok(a.mul_same(&b))
    }

    fn add_same(&self, other: &Operator, s: C64) -> Operator {
        let mut out = Operator {
            space: self.space.clone(),
            constant: self.constant.axpy(s, &other.constant),
            terms: self.terms.clone(),
        };
        for t in &other.terms {
            out.push_term(t.coeff.clone(), t.matrix.scale(s));
        }
        out
    }

    fn push_term(&mut self, coeff: Coefficient, matrix: SparseMatrix) {
        if matrix.nnz() == 0 {
            return;
        }
        if let Some(k) = self.terms.iter().position(|t| t.coeff.same(&coeff)) {
            self.terms[k].matrix = self.terms[k].matrix.add(&matrix);
            if self.terms[k].matrix.nnz() == 0 {
                self.terms.remove(k);
            }
        } else {
            self.terms.push(Term { coeff, matrix });
        }
    }

    fn mul_same(&self, other: &Operator) -> Operator {
        let mut out = Operator {
            space: self.space.clone(),
            constant: self.constant.matmul(&other.constant),
            terms: Vec::new(),
        };
        for t in &self.terms {
            out.push_term(t.coeff.clone(), t.matrix.matmul(&other.constant));
        }
        for t in &other.terms {
            out.push_term(t.coeff.clone(), self.constant.matmul(&t.matrix));
        }
        for a in &self.terms {
            for b in &other.terms {
                out.push_term(a.coeff.mul(&b.coeff), a.matrix.matmul(&b.matrix));
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator {
            space: self.space.clone(),
            constant: self.constant.scale(s),
            terms: if s == C64::new(0.0, 0.0) {
                Vec::new()
            } else {
                self.terms.iter().map(|t| Term { coeff: t.coeff.clone(), matrix: t.matrix.scale(s) }).collect()
            },
        }
    }

    pub fn scale_re(&self, s: f64) -> Operator {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            constant: self.constant.adjoint(),
            terms: self.terms.iter().map(|t| Term { coeff: t.coeff.conj(), matrix: t.matrix.adjoint() }).collect(),
        }
    }

    pub fn dag(&self) -> Operator {
        self.adjoint()
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Operator) -> Operator {
        &(self * other) + &(other * self)
    }

    /// Drops round-off entries from every part.
    pub fn cleaned(&self) -> Operator {
        let mut out = Operator { space: self.space.clone(), constant: self.constant.cleaned(), terms: Vec::new() };
        for t in &self.terms {
            out.push_term(t.coeff.clone(), t.matrix.cleaned());
        }
        out
    }

    /// Max-norm distance; time-dependent operators are compared at fixed
    /// probe times.
    pub fn max_diff(&self, other: &Operator) -> Result<f64> {
        let (a, b) = self.lift_pair(other)?;
        if !a.is_time_dependent() && !b.is_time_dependent() {
            return Ok(a.constant.sub(&b.constant).max_abs());
        }
        Ok(PROBE_TIMES.iter().map(|&t| a.matrix_at(t).sub(&b.matrix_at(t)).max_abs()).fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &Operator, tol: f64) -> bool {
        matches!(self.max_diff(other), Ok(d) if d <= tol)
    }

    pub fn max_abs(&self) -> f64 {
        if self.terms.is_empty() {
            return self.constant.max_abs();
        }
        PROBE_TIMES.iter().map(|&t| self.matrix_at(t).max_abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    /// `‖X − X†‖_max`, probed over time for time-dependent operators.
    pub fn hermitian_residual(&self) -> f64 {
        let d = self - &self.adjoint();
        d.max_abs()
    }

    /// `(X + X†)/2` applied to the constant part only.
    pub fn symmetrized(&self) -> Operator {
        let c = self.constant.add(&self.constant.adjoint()).scale(C64::new(0.5, 0.0));
        Operator { space: self.space.clone(), constant: c, terms: self.terms.clone() }
    }

    /// If the operator is `c·I`, returns `c`.
    pub fn as_scalar(&self, tol: f64) -> Option<C64> {
        if self.is_time_dependent() {
            return None;
        }
        let n = self.dim();
        let c = if n > 0 { self.constant.get(0, 0) } else { C64::new(0.0, 0.0) };
        let rest = self.constant.sub(&SparseMatrix::identity(n).scale(c));
        (rest.max_abs() <= tol).then_some(c)
    }

    pub fn trace(&self) -> C64 {
        self.constant.trace()
    }

    /// `tr(ρ X(t))` for a dense state on the same space.
    pub fn expect(&self, rho: &DMatrix<C64>, t: f64) -> C64 {
        self.parts()
            .map(|(c, m)| {
                let v = m.trace_product(rho);
                match c {
                    None => v,
                    Some(c) => c.eval(t) * v,
                }
            })
            .sum()
    }

    /// Reduced operator on the factors in `keep`.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Operator> {
        let target = self.space.restrict(keep)?;
        let kept: Vec<usize> = target.factors().iter().map(|f| self.space.position(&f.label).unwrap()).collect();
        let traced: Vec<usize> = (0..self.space.factors().len()).filter(|k| !kept.contains(k)).collect();
        let mut trip = Vec::new();
        for (r, c, v) in self.constant.triplets() {
            let (rd, cd) = (self.space.digits(r), self.space.digits(c));
            if traced.iter().all(|&k| rd[k] == cd[k]) {
                let rk: Vec<usize> = kept.iter().map(|&k| rd[k]).collect();
                let ck: Vec<usize> = kept.iter().map(|&k| cd[k]).collect();
                trip.push((target.index(&rk), target.index(&ck), v));
            }
        }
        let n = target.total_dim();
        Operator::new(target, SparseMatrix::from_triplets(n, n, trip))
    }

    pub fn to_json(&self) -> OperatorJson {
        OperatorJson::from_operator(self)
    }
}

/// Index bookkeeping for padding an operator with identities.
struct EmbedMap {
    src: LabeledSpace,
    target: LabeledSpace,
    positions: Vec<usize>,
    complement: Vec<usize>,
}

impl EmbedMap {
    fn new(src: &LabeledSpace, target: &LabeledSpace) -> Self {
        let positions: Vec<usize> = src.factors().iter().map(|f| target.position(&f.label).unwrap()).collect();
        let complement = (0..target.factors().len()).filter(|k| !positions.contains(k)).collect();
        EmbedMap { src: src.clone(), target: target.clone(), positions, complement }
    }

    fn apply(&self, m: &SparseMatrix) -> SparseMatrix {
        let tf = self.target.factors();
        let comp_dims: Vec<usize> = self.complement.iter().map(|&k| tf[k].dim).collect();
        let comp_total: usize = comp_dims.iter().product();
        let nf = tf.len();
        let mut trip = Vec::with_capacity(m.nnz() * comp_total);
        let mut rd_full = vec![0; nf];
        let mut cd_full = vec![0; nf];
        for (r, c, v) in m.triplets() {
            let (rd, cd) = (self.src.digits(r), self.src.digits(c));
            for (k, &p) in self.positions.iter().enumerate() {
                rd_full[p] = rd[k];
                cd_full[p] = cd[k];
            }
            for mi in 0..comp_total {
                let mut rem = mi;
                for (j, &k) in self.complement.iter().enumerate().rev() {
                    let d = rem % comp_dims[j];
                    rem /= comp_dims[j];
                    rd_full[k] = d;
                    cd_full[k] = d;
                }
                trip.push((self.target.index(&rd_full), self.target.index(&cd_full), v));
            }
        }
        let n = self.target.total_dim();
        SparseMatrix::from_triplets(n, n, trip)
    }
}

fn lift(a: &Operator, b: &Operator) -> (Operator, Operator) {
    a.lift_pair(b).unwrap_or_else(|e| panic!("incompatible operator spaces: {e}"))
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        let (a, b) = lift(self, rhs);
        a.add_same(&b, C64::new(1.0, 0.0))
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        let (a, b) = lift(self, rhs);
        a.add_same(&b, C64::new(-1.0, 0.0))
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        let (a, b) = lift(self, rhs);
        a.mul_same(&b)
    }
}

impl Mul<&Operator> for C64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale(self)
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale_re(self)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_re(-1.0)
    }
}

/// Sparse-triplet serialization `{labels, dims, kinds, entries, terms}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub labels: Vec<String>,
    pub dims: Vec<usize>,
    pub kinds: Vec<FactorKind>,
    pub entries: Vec<(usize, usize, f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub coefficient: String,
    pub entries: Vec<(usize, usize, f64, f64)>,
}

fn entries_of(m: &SparseMatrix) -> Vec<(usize, usize, f64, f64)> {
    let clean = |x: f64| if x == 0.0 { 0.0 } else { x };
    m.cleaned().triplets().map(|(r, c, v)| (r, c, clean(v.re), clean(v.im))).collect()
}

impl OperatorJson {
    pub fn from_operator(op: &Operator) -> Self {
        let space = op.space();
        OperatorJson {
            labels: space.labels().iter().map(|s| s.to_string()).collect(),
            dims: space.dims(),
            kinds: space.factors().iter().map(|f| f.kind).collect(),
            entries: entries_of(op.constant()),
            terms: op
                .terms()
                .iter()
                .map(|t| TermJson { coefficient: t.coeff.describe(), entries: entries_of(&t.matrix) })
                .collect(),
        }
    }

    /// Rebuilds a constant operator; envelopes cannot be restored from text.
    pub fn to_operator(&self) -> Result<Operator> {
        if !self.terms.is_empty() {
            return Err(Error::Unsupported("time-dependent terms cannot be deserialized".into()));
        }
        if self.labels.len() != self.dims.len() || self.labels.len() != self.kinds.len() {
            return Err(Error::Construction("labels, dims and kinds differ in length".into()));
        }
        let factors = self
            .labels
            .iter()
            .zip(&self.dims)
            .zip(&self.kinds)
            .map(|((l, &d), &k)| super::space::Factor::new(l.clone(), d, k))
            .collect();
        let space = LabeledSpace::new(factors)?;
        let n = space.total_dim();
        if let Some(e) = self.entries.iter().find(|e| e.0 >= n || e.1 >= n) {
            return Err(Error::Construction(format!("entry ({}, {}) outside dimension {n}", e.0, e.1)));
        }
        let m = SparseMatrix::from_triplets(n, n, self.entries.iter().map(|&(r, c, re, im)| (r, c, C64::new(re, im))));
        Operator::new(space, m)
    }
}

#[cfg(test)]
mod tests {
    use super::super::elementary::{annihilation, identity, sigma_minus};
    use super::*;

    #[test]
    fn embedding_pads_identities() {
        let a1 = annihilation("m1", 3).unwrap();
        let a2 = annihilation("m2", 3).unwrap();
        let c = a1.commutator(&a2);
        assert_eq!(c.dim(), 9);
        assert!(c.is_zero(0.0));
        let sm = sigma_minus("q").unwrap();
        let u = a1.space().union(sm.space()).unwrap();
        assert_eq!(a1.embed(&u).unwrap().dim(), 6);
    }

    #[test]
    fn embed_into_missing_label_fails() {
        let a = annihilation("m1", 3).unwrap();
        let target = identity("m2", 3).unwrap();
        assert!(a.embed(target.space()).is_err());
    }

    #[test]
    fn non_adjacent_embedding_matches_kron() {
        let a = annihilation("a", 2).unwrap();
        let c = annihilation("c", 3).unwrap();
        let b = identity("b", 2).unwrap();
        let ac = &a * &c;
        let full = ac.embed(&ac.space().union(b.space()).unwrap()).unwrap();
        let expected = a.constant().kron(&SparseMatrix::identity(2)).kron(c.constant());
        assert!(full.constant().sub(&expected).max_abs() < 1e-15);
    }

    #[test]
    fn time_dependent_products() {
        let a = annihilation("m", 3).unwrap();
        let alpha = Coefficient::new("alpha", |t| C64::new(t, 0.5));
        let l = &a + &Operator::timed(alpha, &Operator::identity(a.space()));
        let ll = &l.adjoint() * &l;
        let t = 1.3;
        let at = l.at(t);
        let direct = &at.adjoint() * &at;
        assert!(ll.at(t).max_diff(&direct).unwrap() < 1e-14);
    }

    #[test]
    fn partial_trace_of_product() {
        let n = super::super::elementary::number("a", 3).unwrap();
        let p = super::super::elementary::projector("b", 2, 1, 1).unwrap();
        let rho = &n * &p;
        let red = rho.partial_trace(&["a"]).unwrap();
        assert!(red.max_diff(&n).unwrap() < 1e-15);
        assert!((red.trace() - rho.trace()).norm() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let a = annihilation("m", 4).unwrap();
        let j = a.to_json();
        let back = j.to_operator().unwrap();
        assert!(back.max_diff(&a).unwrap() == 0.0);
    }
}
