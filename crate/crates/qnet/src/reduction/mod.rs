//! Adiabatic elimination of fast, strongly damped degrees of freedom.
//!
//! A family `K(k) = k²Y + kA + B`, `L(k) = kF + G`, `S = W` converges as
//! `k → ∞` to a triple supported on `range(P0)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{LabeledSpace, Operator, SparseMatrix};
use crate::slh::SlhTriple;
use crate::tol::{COND_MAX, TOL_OP};

type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

fn dmax(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// The `k`-scaling pieces of a triple relative to a slow-subspace projector.
#[derive(Clone, Debug)]
pub struct EliminationProblem {
    space: LabeledSpace,
    p0: DMatrix<C64>,
    y: DMatrix<C64>,
    a: DMatrix<C64>,
    b: DMatrix<C64>,
    f: Vec<DMatrix<C64>>,
    g: Vec<DMatrix<C64>>,
    w: Vec<Vec<DMatrix<C64>>>,
    ports: Vec<String>,
}

/// Residuals of the four structural assumptions, in order:
/// `ỸY = YỸ = P1`, `YP0 = 0`, `FᵢP0 = 0`, `P0AP0 = 0`.
#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub residuals: [f64; 4],
    /// Condition number of `Y` restricted to `range(P1)`.
    pub condition: f64,
    /// Set when `Y` is singular on the fast subspace.
    pub null_vector: Option<String>,
    pub offending_port: Option<usize>,
}

impl AssumptionReport {
    pub const CONDITIONS: [&'static str; 4] = ["Ỹ Y = Y Ỹ = P1", "Y P0 = 0", "F_i P0 = 0", "P0 A P0 = 0"];

    pub fn passes(&self) -> bool {
        self.failures().is_empty()
    }

    /// 1-based indices of failing assumptions.
    pub fn failures(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if self.null_vector.is_some() || self.residuals[0] > TOL_OP {
            out.push(1);
        }
        for k in 1..4 {
            if self.residuals[k] > TOL_OP {
                out.push(k + 1);
            }
        }
        out
    }

    pub fn describe(&self) -> String {
        let mut lines = Vec::new();
        for (k, name) in Self::CONDITIONS.iter().enumerate() {
            let ok = !self.failures().contains(&(k + 1));
            let mut line = format!(
                "assumption {} ({name}): {} residual {:.3e}",
                k + 1,
                if ok { "ok" } else { "FAILS" },
                self.residuals[k]
            );
            if k == 0 {
                line.push_str(&format!(", condition {:.3e}", self.condition));
                if let Some(v) = &self.null_vector {
                    line.push_str(&format!("; Ỹ does not exist, null vector {v}"));
                }
            }
            if k == 2 {
                if let Some(p) = self.offending_port {
                    line.push_str(&format!(" (port {})", p + 1));
                }
            }
            lines.push(line);
        }
        lines.join("\n")
    }
}

struct PseudoInverse {
    yt: DMatrix<C64>,
    condition: f64,
    null_vector: Option<DVector<C64>>,
}

fn validate_projector(p: &DMatrix<C64>) -> Result<()> {
    let herm = dmax(&(p - p.adjoint()));
    let idem = dmax(&(p * p - p));
    if herm > TOL_OP || idem > TOL_OP {
        return Err(Error::Elimination(format!(
            "P0 is not an orthogonal projector (P0 - P0† = {herm:.3e}, P0² - P0 = {idem:.3e})"
        )));
    }
    Ok(())
}

fn dense_on(op: &Operator, space: &LabeledSpace) -> Result<DMatrix<C64>> {
    if op.is_time_dependent() {
        return Err(Error::Unsupported(
            "elimination of time-dependent operators (envelopes may not scale with k)".into(),
        ));
    }
    Ok(op.embed(space)?.to_dense())
}

fn to_op(space: &LabeledSpace, m: &DMatrix<C64>) -> Result<Operator> {
    Ok(Operator::new(space.clone(), SparseMatrix::from_dense(m))?.cleaned())
}

/// `K = -(iH + ½ Σ L†L)`.
fn k_operator(h: &DMatrix<C64>, l: &[DMatrix<C64>]) -> DMatrix<C64> {
    let mut k = h * (-I);
    for li in l {
        k -= li.adjoint() * li * C64::new(0.5, 0.0);
    }
    k
}

/// Writes a state vector as a sum over labeled basis states.
fn describe_state(space: &LabeledSpace, v: &DVector<C64>) -> String {
    let labels = space.labels();
    let scale = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut parts = Vec::new();
    for (i, c) in v.iter().enumerate() {
        if c.norm() > 1e-6 * scale.max(1e-300) {
            let digits = space.digits(i);
            let ket: Vec<String> = labels.iter().zip(&digits).map(|(l, d)| format!("{l}={d}")).collect();
            parts.push(format!("({:.4}{:+.4}i)|{}⟩", c.re, c.im, ket.join(",")));
        }
    }
    parts.join(" + ")
}

impl EliminationProblem {
    /// Splits an unscaled triple by projecting `K̄` and `L̄` onto the slow
    /// (`P0`) and fast (`P1 = I − P0`) blocks.
    pub fn decompose(g: &SlhTriple, p0: &Operator) -> Result<Self> {
        let space = g.space().clone();
        let p0 = dense_on(p0, &space)?;
        validate_projector(&p0)?;
        let p1 = DMatrix::identity(p0.nrows(), p0.ncols()) - &p0;
        let h = dense_on(g.h(), &space)?;
        let l: Vec<DMatrix<C64>> = g.l().iter().map(|x| dense_on(x, &space)).collect::<Result<_>>()?;
        let k = k_operator(&h, &l);
        let y = &p1 * &k * &p1;
        let a = &p1 * &k * &p0 + &p0 * &k * &p1;
        let b = &p0 * &k * &p0;
        let f = l.iter().map(|li| &p1 * li * &p1 + &p0 * li * &p1).collect();
        let gg = l.iter().map(|li| &p1 * li * &p0 + &p0 * li * &p0).collect();
        let w = g
            .s()
            .iter()
            .map(|row| row.iter().map(|x| dense_on(x, &space)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(EliminationProblem { space, p0, y, a, b, f, g: gg, w, ports: g.ports().to_vec() })
    }

    /// Builds a problem from an explicit scaling identification.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        space: &LabeledSpace,
        p0: &Operator,
        y: &Operator,
        a: &Operator,
        b: &Operator,
        f: &[Operator],
        g: &[Operator],
        w: &[Vec<Operator>],
    ) -> Result<Self> {
        let n = f.len();
        if g.len() != n || w.len() != n || w.iter().any(|r| r.len() != n) {
            return Err(Error::Elimination(format!("F, G and W must describe {n} ports")));
        }
        let p0d = dense_on(p0, space)?;
        validate_projector(&p0d)?;
        let dense = |ops: &[Operator]| ops.iter().map(|x| dense_on(x, space)).collect::<Result<Vec<_>>>();
        let prob = EliminationProblem {
            space: space.clone(),
            p0: p0d,
            y: dense_on(y, space)?,
            a: dense_on(a, space)?,
            b: dense_on(b, space)?,
            f: dense(f)?,
            g: dense(g)?,
            w: w.iter().map(|r| dense(r)).collect::<Result<_>>()?,
            ports: (1..=n).map(|k| k.to_string()).collect(),
        };
        // the family must have a Hermitian Hamiltonian at every k
        for k in [1.0, 2.0] {
            prob.scaled(k)?;
        }
        Ok(prob)
    }

    pub fn space(&self) -> &LabeledSpace {
        &self.space
    }

    pub fn n_ports(&self) -> usize {
        self.f.len()
    }

    pub fn p0(&self) -> Operator {
        to_op(&self.space, &self.p0).expect("dims match")
    }

    pub fn y(&self) -> Operator {
        to_op(&self.space, &self.y).expect("dims match")
    }

    pub fn a(&self) -> Operator {
        to_op(&self.space, &self.a).expect("dims match")
    }

    pub fn b(&self) -> Operator {
        to_op(&self.space, &self.b).expect("dims match")
    }

    pub fn f(&self, i: usize) -> Operator {
        to_op(&self.space, &self.f[i]).expect("dims match")
    }

    pub fn g(&self, i: usize) -> Operator {
        to_op(&self.space, &self.g[i]).expect("dims match")
    }

    pub fn w(&self, i: usize, j: usize) -> Operator {
        to_op(&self.space, &self.w[i][j]).expect("dims match")
    }

    /// Max-norm of `K̄ − (Y + A + B)` for the triple this problem came from.
    pub fn decomposition_residual(&self, g: &SlhTriple) -> Result<f64> {
        let h = dense_on(g.h(), &self.space)?;
        let l: Vec<DMatrix<C64>> = g.l().iter().map(|x| dense_on(x, &self.space)).collect::<Result<_>>()?;
        Ok(dmax(&(k_operator(&h, &l) - &self.y - &self.a - &self.b)))
    }

    /// The member of the family at scale `k`.
    pub fn scaled(&self, k: f64) -> Result<SlhTriple> {
        let kc = C64::new(k, 0.0);
        let l: Vec<DMatrix<C64>> = self.f.iter().zip(&self.g).map(|(f, g)| f * kc + g).collect();
        let kk = &self.y * (kc * kc) + &self.a * kc + &self.b;
        self.assemble(&kk, &l, &self.w)
    }

    /// `H = i(K + ½ Σ L†L)`.
    fn assemble(&self, k: &DMatrix<C64>, l: &[DMatrix<C64>], s: &[Vec<DMatrix<C64>>]) -> Result<SlhTriple> {
        let mut h = k.clone();
        for li in l {
            h += li.adjoint() * li * C64::new(0.5, 0.0);
        }
        h *= I;
        let sp = &self.space;
        let s_ops = s
            .iter()
            .map(|row| row.iter().map(|x| to_op(sp, x)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let l_ops = l.iter().map(|x| to_op(sp, x)).collect::<Result<Vec<_>>>()?;
        let h_op = to_op(sp, &h)?;
        if h_op.hermitian_residual() > 1e-8 {
            return Err(Error::Elimination(format!(
                "parts imply a non-Hermitian Hamiltonian (residual {:.3e})",
                h_op.hermitian_residual()
            )));
        }
        SlhTriple::on_space(sp.clone(), s_ops, l_ops, h_op.symmetrized())?.with_ports(self.ports.clone())
    }

    /// Parallel composition of two families on disjoint spaces; the slow
    /// projector is the product `P0ᵃ P0ᵇ`.
    pub fn concat(&self, other: &EliminationProblem) -> Result<EliminationProblem> {
        let space = self.space.union(&other.space)?;
        if space.total_dim() != self.space.total_dim() * other.space.total_dim() {
            return Err(Error::Elimination("concatenated problems must act on disjoint factors".into()));
        }
        let lift = |p: &EliminationProblem, m: &DMatrix<C64>| -> Result<DMatrix<C64>> {
            Ok(to_op(&p.space, m)?.embed(&space)?.to_dense())
        };
        let d = space.total_dim();
        let p0 = lift(self, &self.p0)? * lift(other, &other.p0)?;
        let sum = |x: &DMatrix<C64>, y: &DMatrix<C64>| -> Result<DMatrix<C64>> { Ok(lift(self, x)? + lift(other, y)?) };
        let (n1, n2) = (self.n_ports(), other.n_ports());
        let mut f = Vec::new();
        let mut g = Vec::new();
        for i in 0..n1 {
            f.push(lift(self, &self.f[i])?);
            g.push(lift(self, &self.g[i])?);
        }
        for i in 0..n2 {
            f.push(lift(other, &other.f[i])?);
            g.push(lift(other, &other.g[i])?);
        }
        let mut w = vec![vec![DMatrix::zeros(d, d); n1 + n2]; n1 + n2];
        for i in 0..n1 {
            for j in 0..n1 {
                w[i][j] = lift(self, &self.w[i][j])?;
            }
        }
        for i in 0..n2 {
            for j in 0..n2 {
                w[n1 + i][n1 + j] = lift(other, &other.w[i][j])?;
            }
        }
        Ok(EliminationProblem {
            space: space.clone(),
            p0,
            y: sum(&self.y, &other.y)?,
            a: sum(&self.a, &other.a)?,
            b: sum(&self.b, &other.b)?,
            f,
            g,
            w,
            ports: self.ports.iter().chain(&other.ports).cloned().collect(),
        })
    }

    fn p1(&self) -> DMatrix<C64> {
        DMatrix::identity(self.p0.nrows(), self.p0.ncols()) - &self.p0
    }

    /// `Ỹ` from a dense solve of `Y` restricted to `range(P1)`.
    fn pseudo_inverse(&self) -> PseudoInverse {
        let d = self.p0.nrows();
        let eig = self.p1().symmetric_eigen();
        let cols: Vec<DVector<C64>> = (0..d)
            .filter(|&k| eig.eigenvalues[k] > 0.5)
            .map(|k| eig.eigenvectors.column(k).into_owned())
            .collect();
        if cols.is_empty() {
            return PseudoInverse { yt: DMatrix::zeros(d, d), condition: 1.0, null_vector: None };
        }
        let q = DMatrix::from_columns(&cols);
        let yr = q.adjoint() * &self.y * &q;
        let svd = yr.clone().svd(false, true);
        let s = &svd.singular_values;
        let smax = s.max();
        let (kmin, smin) = s.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= COND_MAX) || smax == 0.0 {
            let v = svd.v_t.expect("requested").row(kmin).adjoint();
            return PseudoInverse { yt: DMatrix::zeros(d, d), condition, null_vector: Some(&q * v) };
        }
        let inv = yr.lu().try_inverse().expect("well-conditioned");
        PseudoInverse { yt: &q * inv * q.adjoint(), condition, null_vector: None }
    }

    pub fn check_assumptions(&self) -> AssumptionReport {
        let pi = self.pseudo_inverse();
        let p1 = self.p1();
        let r1 = if pi.null_vector.is_some() {
            f64::INFINITY
        } else {
            dmax(&(&pi.yt * &self.y - &p1)).max(dmax(&(&self.y * &pi.yt - &p1)))
        };
        let r2 = dmax(&(&self.y * &self.p0));
        let mut r3 = 0.0;
        let mut port = None;
        for (i, f) in self.f.iter().enumerate() {
            let r = dmax(&(f * &self.p0));
            if r > r3 {
                r3 = r;
                if r > TOL_OP {
                    port = Some(i);
                }
            }
        }
        let r4 = dmax(&(&self.p0 * &self.a * &self.p0));
        AssumptionReport {
            residuals: [r1, r2, r3, r4],
            condition: pi.condition,
            null_vector: pi.null_vector.map(|v| describe_state(&self.space, &v)),
            offending_port: port,
        }
    }

    /// Limit triple `(S, L, H)` on the full space, with every entry
    /// supported on `range(P0)`.
    pub fn eliminate(&self) -> Result<SlhTriple> {
        let report = self.check_assumptions();
        if !report.passes() {
            return Err(Error::Elimination(format!("assumptions fail:\n{}", report.describe())));
        }
        let yt = self.pseudo_inverse().yt;
        let p0 = &self.p0;
        let n = self.n_ports();
        let d = p0.nrows();
        let k = p0 * (&self.b - &self.a * &yt * &self.a) * p0;
        let l: Vec<DMatrix<C64>> =
            (0..n).map(|i| (&self.g[i] - &self.f[i] * &yt * &self.a) * p0).collect();
        let mut s = vec![vec![DMatrix::zeros(d, d); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = DMatrix::zeros(d, d);
                for lp in 0..n {
                    let mut m = &self.f[i] * &yt * self.f[lp].adjoint();
                    if i == lp {
                        m += DMatrix::identity(d, d);
                    }
                    acc += m * &self.w[lp][j];
                }
                s[i][j] = acc * p0;
            }
        }
        Ok(self.assemble(&k, &l, &s)?.with_meta("reduction", "adiabatic elimination"))
    }
}

/// Parses `label=level[|level...]` items separated by commas into a
/// projector; unlisted factors contribute the identity.
pub fn projector_from_spec(space: &LabeledSpace, spec: &str) -> Result<Operator> {
    let mut p = Operator::identity(space);
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (label, levels) = item
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("expected label=level in '{item}'")))?;
        let label = label.trim();
        let factor = space
            .factor(label)
            .ok_or_else(|| Error::Validation(format!("unknown factor '{label}'")))?;
        let mut local = Operator::zero(&LabeledSpace::single(factor.clone())?);
        for lv in levels.split('|') {
            let n: usize = lv
                .trim()
                .parse()
                .map_err(|_| Error::Validation(format!("bad level '{lv}' for '{label}'")))?;
            local = &local + &crate::hilbert::Elementary::Projector(n, n).on(factor)?;
        }
        p = &p * &local.embed(space)?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::jaynes_cummings;
    use crate::hilbert::elementary::{annihilation, projector, sigma_minus};
    use crate::hilbert::Factor;

    fn jc(kappa: f64, g: f64, gamma: f64) -> SlhTriple {
        jaynes_cummings("jc", kappa, 0.0, 0.0, g, Some(gamma), 4).unwrap()
    }

    #[test]
    fn decomposition_sums_to_k() {
        let g = jc(2.0, 0.7, 0.3);
        let p0 = projector_from_spec(g.space(), "jc.a=0, jc.q=0").unwrap();
        let prob = EliminationProblem::decompose(&g, &p0).unwrap();
        assert!(prob.decomposition_residual(&g).unwrap() < TOL_OP);
        assert!(prob.scaled(1.0).unwrap().approx_eq(&g, 1e-10));
    }

    #[test]
    fn identity_projector_leaves_triple_alone() {
        let g = jc(2.0, 0.7, 0.3);
        let prob = EliminationProblem::decompose(&g, &Operator::identity(g.space())).unwrap();
        assert!(prob.y().is_zero(TOL_OP));
        assert!((0..2).all(|i| prob.f(i).is_zero(TOL_OP)));
        assert!(prob.eliminate().unwrap().approx_eq(&g, 1e-10));
    }

    #[test]
    fn zero_projector_makes_everything_fast() {
        let g = jc(2.0, 0.7, 0.3);
        let prob = EliminationProblem::decompose(&g, &Operator::zero(g.space())).unwrap();
        assert!(prob.b().is_zero(TOL_OP));
        assert!((0..2).all(|i| prob.g(i).is_zero(TOL_OP)));
    }

    #[test]
    fn rejects_non_projector() {
        let g = jc(1.0, 1.0, 1.0);
        let half = Operator::identity(g.space()).scale_re(0.5);
        assert!(matches!(EliminationProblem::decompose(&g, &half), Err(Error::Elimination(_))));
    }

    #[test]
    fn undamped_level_breaks_assumption_one() {
        // the qubit excited state is fast but has no decay and no coupling
        let sp = LabeledSpace::new(vec![Factor::oscillator("c", 3), Factor::qubit("q")]).unwrap();
        let a = annihilation("c", 3).unwrap();
        let g = SlhTriple::on_space(sp.clone(), vec![vec![Operator::identity(&sp)]], vec![a], Operator::zero(&sp)).unwrap();
        let p0 = projector_from_spec(&sp, "c=0, q=0").unwrap();
        let report = EliminationProblem::decompose(&g, &p0).unwrap().check_assumptions();
        assert_eq!(report.failures(), vec![1]);
        let v = report.null_vector.unwrap();
        assert!(v.contains("c=0,q=1"), "{v}");
        assert!(EliminationProblem::decompose(&g, &p0).unwrap().eliminate().is_err());
    }

    #[test]
    fn injected_f_defect_is_flagged() {
        let sp = LabeledSpace::single(Factor::oscillator("c", 3)).unwrap();
        let a = annihilation("c", 3).unwrap();
        let p0 = projector("c", 3, 0, 0).unwrap();
        let y = (&a.adjoint() * &a).scale_re(-0.5);
        let bad_f = &a + &p0;
        let z = Operator::zero(&sp);
        let prob =
            EliminationProblem::from_parts(&sp, &p0, &y, &z, &z.clone(), &[bad_f], &[z.clone()], &[vec![Operator::identity(&sp)]]);
        // the defect also spoils Hermiticity of the family, which is reported first
        match prob {
            Ok(p) => assert!(p.check_assumptions().failures().contains(&3)),
            Err(e) => assert!(e.to_string().contains("non-Hermitian"), "{e}"),
        }
    }

    /// Damped cavity with a coupled qubit: `κ = k²κ₀`, `g = k g₀`.
    fn purcell(k0: f64, g0: f64, gamma: f64, trunc: usize) -> EliminationProblem {
        let sp = LabeledSpace::new(vec![Factor::oscillator("c", trunc), Factor::qubit("q")]).unwrap();
        let a = annihilation("c", trunc).unwrap().embed(&sp).unwrap();
        let sm = sigma_minus("q").unwrap().embed(&sp).unwrap();
        let y = (&a.adjoint() * &a).scale_re(-0.5 * k0);
        let a_op = (&(&a.adjoint() * &sm) + &(&a * &sm.adjoint())).scale(C64::new(0.0, -g0));
        let b = (&sm.adjoint() * &sm).scale_re(-0.5 * gamma);
        let z = Operator::zero(&sp);
        let id = Operator::identity(&sp);
        let p0 = projector_from_spec(&sp, "c=0").unwrap();
        EliminationProblem::from_parts(
            &sp,
            &p0,
            &y,
            &a_op,
            &b,
            &[a.scale_re(k0.sqrt()), z.clone()],
            &[z.clone(), sm.scale_re(gamma.sqrt())],
            &[vec![id.clone(), z.clone()], vec![z, id]],
        )
        .unwrap()
    }

    #[test]
    fn purcell_limit() {
        let (k0, g0, gamma) = (4.0, 1.0, 0.2);
        let prob = purcell(k0, g0, gamma, 4);
        assert!(prob.check_assumptions().passes(), "{}", prob.check_assumptions().describe());
        let red = prob.eliminate().unwrap();
        let sp = prob.space().clone();
        let p0 = prob.p0();
        let sm = sigma_minus("q").unwrap().embed(&sp).unwrap();
        let want_l0 = (&sm * &p0).scale(C64::new(0.0, -2.0 * g0 / k0.sqrt()));
        assert!(red.l()[0].approx_eq(&want_l0, 1e-10));
        assert!(red.h().is_zero(1e-10));
        assert!(red.s_entry(0, 0).approx_eq(&p0.scale_re(-1.0), 1e-10));
        assert!(red.s_entry(1, 1).approx_eq(&p0, 1e-10));
    }

    #[test]
    fn statespec_parsing() {
        let sp = LabeledSpace::new(vec![Factor::oscillator("c", 3), Factor::qubit("q")]).unwrap();
        let p = projector_from_spec(&sp, "c=0|1").unwrap();
        assert!((p.trace().re - 4.0).abs() < 1e-12);
        assert!(projector_from_spec(&sp, "x=0").is_err());
        assert!(projector_from_spec(&sp, "c=zero").is_err());
    }
}
