//! Superoperators as sums of sandwich terms `A ρ B`.
//!
//! Vectorization is column stacking: `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`, which is
//! also the storage order of `DMatrix`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{Coefficient, LabeledSpace, Operator, SparseMatrix};
use crate::slh::SlhTriple;
use crate::tol::TOL_OP;

type C64 = Complex64;

#[derive(Clone, Debug)]
enum Side {
    Identity,
    Const(SparseMatrix),
    Timed(Operator),
}

impl Side {
    fn from(op: Option<&Operator>) -> Side {
        match op {
            None => Side::Identity,
            Some(o) if o.is_time_dependent() => Side::Timed(o.clone()),
            Some(o) => Side::Const(o.constant().clone()),
        }
    }

    fn at(&self, t: f64) -> Option<std::borrow::Cow<'_, SparseMatrix>> {
        match self {
            Side::Identity => None,
            Side::Const(m) => Some(std::borrow::Cow::Borrowed(m)),
            Side::Timed(o) => Some(std::borrow::Cow::Owned(o.matrix_at(t))),
        }
    }

    fn is_timed(&self) -> bool {
        matches!(self, Side::Timed(_))
    }
}

/// `ρ ↦ Σ_k A_k(t) ρ B_k(t)` on a fixed space.
#[derive(Clone, Debug)]
pub struct SuperOp {
    space: LabeledSpace,
    /// Merged constant one-sided parts.
    left: Option<SparseMatrix>,
    right: Option<SparseMatrix>,
    terms: Vec<(Side, Side)>,
}

impl SuperOp {
    pub fn zero(space: &LabeledSpace) -> Self {
        SuperOp { space: space.clone(), left: None, right: None, terms: Vec::new() }
    }

    pub fn space(&self) -> &LabeledSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.terms.iter().any(|(a, b)| a.is_timed() || b.is_timed())
    }

    /// Adds `A ρ B`; `None` stands for the identity.
    pub fn push(&mut self, a: Option<&Operator>, b: Option<&Operator>) -> Result<()> {
        let a = a.map(|o| o.embed(&self.space)).transpose()?;
        let b = b.map(|o| o.embed(&self.space)).transpose()?;
        let zero = |o: &Option<Operator>| o.as_ref().is_some_and(|o| o.is_zero(0.0));
        if zero(&a) || zero(&b) {
            return Ok(());
        }
        match (&a, &b) {
            (Some(x), None) if !x.is_time_dependent() => {
                self.left = Some(match self.left.take() {
                    Some(m) => m.add(x.constant()),
                    None => x.constant().clone(),
                });
            }
            (None, Some(y)) if !y.is_time_dependent() => {
                self.right = Some(match self.right.take() {
                    Some(m) => m.add(y.constant()),
                    None => y.constant().clone(),
                });
            }
            (None, None) => {
                let id = SparseMatrix::identity(self.dim());
                self.left = Some(match self.left.take() {
                    Some(m) => m.add(&id),
                    None => id,
                });
            }
            _ => self.terms.push((Side::from(a.as_ref()), Side::from(b.as_ref()))),
        }
        Ok(())
    }

    pub fn extend(&mut self, other: &SuperOp) -> Result<()> {
        if other.space != self.space {
            return Err(Error::Embedding("superoperators on different spaces".into()));
        }
        if let Some(l) = &other.left {
            self.left = Some(match self.left.take() {
                Some(m) => m.add(l),
                None => l.clone(),
            });
        }
        if let Some(r) = &other.right {
            self.right = Some(match self.right.take() {
                Some(m) => m.add(r),
                None => r.clone(),
            });
        }
        self.terms.extend(other.terms.iter().cloned());
        Ok(())
    }

    /// `out += L(t) ρ`.
    pub fn apply_into(&self, t: f64, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let one = C64::new(1.0, 0.0);
        if let Some(l) = &self.left {
            *out += l.mul_dense(rho);
        }
        if let Some(r) = &self.right {
            *out += r.dense_mul(rho);
        }
        for (a, b) in &self.terms {
            match (a.at(t), b.at(t)) {
                (Some(a), Some(b)) => a.sandwich_into(rho, &b, one, out),
                (Some(a), None) => *out += a.mul_dense(rho),
                (None, Some(b)) => *out += b.dense_mul(rho),
                (None, None) => *out += rho,
            }
        }
    }

    pub fn apply(&self, t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(rho.nrows(), rho.ncols());
        self.apply_into(t, rho, &mut out);
        out
    }

    /// Sparse superoperator matrix at time `t`.
    pub fn matrix(&self, t: f64) -> SparseMatrix {
        let n = self.dim();
        let id = SparseMatrix::identity(n);
        let mut acc = SparseMatrix::zeros(n * n, n * n);
        if let Some(l) = &self.left {
            acc = acc.add(&id.kron(l));
        }
        if let Some(r) = &self.right {
            acc = acc.add(&r.transpose().kron(&id));
        }
        for (a, b) in &self.terms {
            let a = a.at(t).map(|m| m.into_owned()).unwrap_or_else(|| id.clone());
            let b = b.at(t).map(|m| m.into_owned()).unwrap_or_else(|| id.clone());
            acc = acc.add(&b.transpose().kron(&a));
        }
        acc.cleaned()
    }
}

/// `𝓛[L]ρ = LρL† − ½{L†L, ρ}` for each entry of `ls`, plus `−i[H, ρ]`.
fn push_lindblad(sup: &mut SuperOp, h: &Operator, ls: &[Operator]) -> Result<()> {
    let i = C64::new(0.0, 1.0);
    let mut ll = Operator::zero(sup.space());
    for l in ls {
        ll = ll.checked_add(&(&l.adjoint() * l))?;
    }
    let heff = &h.scale(-i) - &ll.scale_re(0.5);
    sup.push(Some(&heff), None)?;
    sup.push(None, Some(&heff.adjoint()))?;
    for l in ls {
        sup.push(Some(l), Some(&l.adjoint()))?;
    }
    Ok(())
}

/// Vacuum master equation `dρ/dt = −i[H, ρ] + Σᵢ 𝓛[Lᵢ]ρ`. S does not enter.
pub fn liouvillian(g: &SlhTriple) -> Result<SuperOp> {
    let mut sup = SuperOp::zero(g.space());
    push_lindblad(&mut sup, g.h(), g.l())?;
    Ok(sup)
}

/// The three drive-coupling superoperators of a field entering port `j`:
/// `C₁ρ = Σᵢ [Sᵢⱼρ, Lᵢ†]`, `C₂ρ = Σᵢ [Lᵢ, ρSᵢⱼ†]`, `C₃ρ = Σᵢ SᵢⱼρSᵢⱼ† − ρ`.
#[derive(Clone, Debug)]
pub struct DriveCoupling {
    pub c1: SuperOp,
    pub c2: SuperOp,
    pub c3: SuperOp,
}

pub fn drive_coupling(g: &SlhTriple, port: usize) -> Result<DriveCoupling> {
    check_port(g, port)?;
    let sp = g.space();
    let (mut c1, mut c2, mut c3) = (SuperOp::zero(sp), SuperOp::zero(sp), SuperOp::zero(sp));
    for i in 0..g.n_ports() {
        let s = g.s_entry(i, port);
        let l = &g.l()[i];
        let (sd, ld) = (s.adjoint(), l.adjoint());
        c1.push(Some(s), Some(&ld))?;
        c1.push(Some(&(&ld * s).scale_re(-1.0)), None)?;
        c2.push(Some(l), Some(&sd))?;
        c2.push(None, Some(&(&sd * l).scale_re(-1.0)))?;
        c3.push(Some(s), Some(&sd))?;
    }
    c3.push(Some(&Operator::identity(sp).scale_re(-1.0)), None)?;
    Ok(DriveCoupling { c1, c2, c3 })
}

fn check_port(g: &SlhTriple, port: usize) -> Result<()> {
    if port >= g.n_ports() {
        return Err(Error::Validation(format!("drive port {} outside {} ports", port + 1, g.n_ports())));
    }
    Ok(())
}

fn scaled(sup: &SuperOp, coeff: &Coefficient) -> Result<SuperOp> {
    // Folds the coefficient into the left factor of every term.
    let sp = &sup.space;
    let op = |side: &Side| -> Result<Option<Operator>> {
        Ok(match side {
            Side::Identity => None,
            Side::Const(m) => Some(Operator::new(sp.clone(), m.clone())?),
            Side::Timed(o) => Some(o.clone()),
        })
    };
    let mut out = SuperOp::zero(sp);
    if let Some(l) = &sup.left {
        out.push(Some(&Operator::timed(coeff.clone(), &Operator::new(sp.clone(), l.clone())?)), None)?;
    }
    if let Some(r) = &sup.right {
        out.push(Some(&Operator::timed(coeff.clone(), &Operator::identity(sp))), Some(&Operator::new(sp.clone(), r.clone())?))?;
    }
    for (a, b) in &sup.terms {
        let a = op(a)?.unwrap_or_else(|| Operator::identity(sp));
        out.push(Some(&Operator::timed(coeff.clone(), &a)), op(b)?.as_ref())?;
    }
    Ok(out)
}

/// Coherent drive `α(t)` on port `j`:
/// `dρ/dt = 𝓛_vac ρ + α C₁ρ + α* C₂ρ + |α|² C₃ρ`.
///
/// The second commutator carries `S†`, which is what the cascaded-source
/// route produces; with `S = I` the distinction disappears.
pub fn liouvillian_coherent(g: &SlhTriple, port: usize, alpha: &Coefficient) -> Result<SuperOp> {
    let mut sup = liouvillian(g)?;
    let d = drive_coupling(g, port)?;
    sup.extend(&scaled(&d.c1, alpha)?)?;
    sup.extend(&scaled(&d.c2, &alpha.conj())?)?;
    sup.extend(&scaled(&d.c3, &alpha.mul(&alpha.conj()))?)?;
    Ok(sup)
}

/// Gaussian field statistics: `dB†dB = N dt`, `dB dB = M dt`, mean `α(t)`.
#[derive(Clone, Debug)]
pub struct GaussianEnv {
    pub n: f64,
    pub m: C64,
    pub alpha: Option<Coefficient>,
}

impl GaussianEnv {
    pub fn new(n: f64, m: C64, alpha: Option<Coefficient>) -> Result<Self> {
        if !(n >= 0.0) {
            return Err(Error::Validation(format!("violated N >= 0 (N = {n})")));
        }
        if n * (n + 1.0) < m.norm_sqr() - TOL_OP {
            return Err(Error::Validation(format!(
                "violated N(N+1) >= |M|^2 (N(N+1) = {:.12}, |M|^2 = {:.12})",
                n * (n + 1.0),
                m.norm_sqr()
            )));
        }
        Ok(GaussianEnv { n, m, alpha })
    }

    pub fn thermal(n: f64) -> Result<Self> {
        Self::new(n, C64::new(0.0, 0.0), None)
    }

    /// Squeezed thermal field: `N = N_th cosh 2r + sinh² r`,
    /// `M = −(2N_th + 1) e^{iφ} sinh r cosh r`.
    pub fn squeezed(r: f64, phi: f64, n_th: f64) -> Result<Self> {
        let n = n_th * (2.0 * r).cosh() + r.sinh().powi(2);
        let m = -C64::from_polar((2.0 * n_th + 1.0) * r.sinh() * r.cosh(), phi);
        Self::new(n, m, None)
    }
}

/// Master equation for a Gaussian field on port `j`. With `K = Σᵢ Sᵢⱼ* Lᵢ`,
/// `dρ/dt = −i[H + i(α*K − αK†), ρ] + Σᵢ𝓛[Lᵢ]ρ + N𝓛[K]ρ + N𝓛[K†]ρ
///          + (M/2)[K†,[K†,ρ]] + (M*/2)[K,[K,ρ]]`.
/// For one port and `S = 1` this is the usual single-mode form.
pub fn liouvillian_gaussian(g: &SlhTriple, port: usize, env: &GaussianEnv) -> Result<SuperOp> {
    check_port(g, port)?;
    let sp = g.space();
    let mut phase = Vec::with_capacity(g.n_ports());
    for row in g.s() {
        for s in row {
            if s.is_time_dependent() || s.as_scalar(TOL_OP).is_none() {
                return Err(Error::Unsupported(
                    "Gaussian input needs a scattering matrix of c-numbers".into(),
                ));
            }
        }
    }
    for i in 0..g.n_ports() {
        phase.push(g.s_entry(i, port).as_scalar(TOL_OP).expect("checked"));
    }
    let mut k = Operator::zero(sp);
    for (i, l) in g.l().iter().enumerate() {
        k = k.checked_add(&l.scale(phase[i].conj()))?;
    }
    let kd = k.adjoint();
    let i = C64::new(0.0, 1.0);
    let mut h = g.h().clone();
    if let Some(alpha) = &env.alpha {
        let drive = &Operator::timed(alpha.conj(), &k) - &Operator::timed(alpha.clone(), &kd);
        h = h.checked_add(&drive.scale(i))?;
    }
    let mut sup = SuperOp::zero(sp);
    push_lindblad(&mut sup, &h, g.l())?;
    if env.n > 0.0 {
        let mut extra = SuperOp::zero(sp);
        push_lindblad(&mut extra, &Operator::zero(sp), &[k.scale_re(env.n.sqrt()), kd.scale_re(env.n.sqrt())])?;
        sup.extend(&extra)?;
    }
    if env.m.norm() > 0.0 {
        // [X,[X,ρ]] = X²ρ − 2XρX + ρX²
        for (x, c) in [(&kd, env.m * 0.5), (&k, env.m.conj() * 0.5)] {
            let x2 = x * x;
            sup.push(Some(&x2.scale(c)), None)?;
            sup.push(None, Some(&x2.scale(c)))?;
            sup.push(Some(&x.scale(-2.0 * c)), Some(x))?;
        }
    }
    Ok(sup)
}
