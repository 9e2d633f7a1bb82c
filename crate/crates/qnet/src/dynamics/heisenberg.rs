//! Heisenberg-picture coefficients and input-output structure.

use num_complex::Complex64;

use crate::error::Result;
use crate::hilbert::Operator;
use crate::slh::SlhTriple;

type C64 = Complex64;

/// Coefficients of `dX = drift dt + Σ_j dB_j† (…) + Σ_j (…) dB_j + Σ_ij (…) dΛ_ij`.
#[derive(Clone, Debug)]
pub struct HeisenbergCoefficients {
    pub drift: Operator,
    /// Multiplies `dB_j`.
    pub db: Vec<Operator>,
    /// Multiplies `dB_j†`.
    pub db_dag: Vec<Operator>,
    /// `dlambda[i][j]` multiplies `dΛ_ij`.
    pub dlambda: Vec<Vec<Operator>>,
}

/// `drift = −i[X,H] + Σᵢ(Lᵢ†XLᵢ − ½{Lᵢ†Lᵢ, X})`,
/// `dB_j: Σᵢ [Lᵢ†, X] Sᵢⱼ`, `dB_j†: Σᵢ Sᵢⱼ† [X, Lᵢ]`,
/// `dΛᵢⱼ: Σ_k S_kᵢ† X S_kⱼ − δᵢⱼ X`.
pub fn heisenberg_coefficients(g: &SlhTriple, x: &Operator) -> Result<HeisenbergCoefficients> {
    let sp = g.space().union(x.space())?;
    let g = g.embed(&sp)?;
    let x = x.embed(&sp)?;
    let n = g.n_ports();
    let i = C64::new(0.0, 1.0);
    let mut drift = x.commutator(g.h()).scale(-i);
    for l in g.l() {
        let ld = l.adjoint();
        drift = &drift + &(&(&ld * &x) * l);
        drift = &drift - &(&(&ld * l).anticommutator(&x)).scale_re(0.5);
    }
    let mut db = Vec::with_capacity(n);
    let mut db_dag = Vec::with_capacity(n);
    for j in 0..n {
        let mut a = Operator::zero(&sp);
        let mut b = Operator::zero(&sp);
        for (k, l) in g.l().iter().enumerate() {
            let s = g.s_entry(k, j);
            a = &a + &(&l.adjoint().commutator(&x) * s);
            b = &b + &(&s.adjoint() * &x.commutator(l));
        }
        db.push(a.cleaned());
        db_dag.push(b.cleaned());
    }
    let mut dlambda = vec![Vec::with_capacity(n); n];
    for (a, row) in dlambda.iter_mut().enumerate() {
        for b in 0..n {
            let mut acc = if a == b { -&x } else { Operator::zero(&sp) };
            for k in 0..n {
                acc = &acc + &(&(&g.s_entry(k, a).adjoint() * &x) * g.s_entry(k, b));
            }
            row.push(acc.cleaned());
        }
    }
    Ok(HeisenbergCoefficients { drift: drift.cleaned(), db, db_dag, dlambda })
}

/// Operator data of `dB_out = S dB_in + L dt` and
/// `dΛ_out = S* dΛ Sᵀ + S* dB* Lᵀ + L^# dB Sᵀ + L^# Lᵀ dt`, stored through
/// the entries needed to rebuild each term.
#[derive(Clone, Debug)]
pub struct OutputRelations {
    pub s: Vec<Vec<Operator>>,
    /// `None` for ports with identically zero coupling.
    pub l: Vec<Option<Operator>>,
    /// `drift[i][j] = Lᵢ† Lⱼ`, the `dt` part of `dΛ_out,ij`.
    pub lambda_drift: Vec<Vec<Operator>>,
}

pub fn output_relations(g: &SlhTriple) -> OutputRelations {
    let l: Vec<Option<Operator>> = g.l().iter().map(|l| (!l.is_zero(crate::tol::TOL_OP)).then(|| l.clone())).collect();
    let lambda_drift = g.l().iter().map(|a| g.l().iter().map(|b| (&a.adjoint() * b).cleaned()).collect()).collect();
    OutputRelations { s: g.s().to_vec(), l, lambda_drift }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::one_sided_cavity;
    use crate::hilbert::elementary::annihilation;
    use crate::slh::series;

    #[test]
    fn cavity_coefficients() {
        let (gamma, delta) = (2.0, 0.7);
        let g = one_sided_cavity("c", gamma, delta, 6).unwrap();
        let a = annihilation("c", 6).unwrap();
        let h = heisenberg_coefficients(&g, &a).unwrap();
        let expect = a.scale(C64::new(-gamma / 2.0, -delta));
        assert!(h.drift.approx_eq(&expect, 1e-12));
        // [a†, a] = −1 away from the truncation edge
        let db = h.db[0].to_dense();
        for k in 0..5 {
            assert!((db[(k, k)] + gamma.sqrt()).norm() < 1e-12);
        }
        assert!(h.db_dag[0].is_zero(1e-12));
        assert!(h.dlambda[0][0].is_zero(1e-12));
    }

    #[test]
    fn identity_gives_zero() {
        let g = series(&one_sided_cavity("b", 1.0, 0.0, 3).unwrap(), &one_sided_cavity("a", 2.0, 0.3, 3).unwrap()).unwrap();
        let h = heisenberg_coefficients(&g, &Operator::identity(g.space())).unwrap();
        assert!(h.drift.is_zero(1e-12) && h.db[0].is_zero(1e-12) && h.db_dag[0].is_zero(1e-12) && h.dlambda[0][0].is_zero(1e-12));
    }

    #[test]
    fn cascade_output_coupling() {
        let (g1, g2) = (1.0, 3.0);
        let g = series(&one_sided_cavity("b", g2, 0.0, 3).unwrap(), &one_sided_cavity("a", g1, 0.0, 3).unwrap()).unwrap();
        let rel = output_relations(&g);
        let sp = g.space();
        let want = &annihilation("a", 3).unwrap().embed(sp).unwrap().scale_re(g1.sqrt())
            + &annihilation("b", 3).unwrap().embed(sp).unwrap().scale_re(g2.sqrt());
        assert!(rel.l[0].as_ref().unwrap().approx_eq(&want, 1e-12));
    }
}
