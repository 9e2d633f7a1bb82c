//! Projection of S, L, H onto low-degree ladder monomials.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{Elementary, FactorKind, LabeledSpace, Operator};
use crate::slh::SlhTriple;
use crate::tol::TOL_LIN;

type C64 = Complex64;

/// Coefficients of `Lⱼ = Σ φ⁻ⱼₖ aₖ + φ⁺ⱼₖ aₖ†` and
/// `H = Σ aⱼ† ω⁻ⱼₖ aₖ + ½ Σ (aⱼ† ω⁺ⱼₖ aₖ† + aⱼ ω⁺*ⱼₖ aₖ)`.
pub(crate) struct Quadratic {
    pub modes: Vec<String>,
    pub s: DMatrix<C64>,
    pub phi_minus: DMatrix<C64>,
    pub phi_plus: DMatrix<C64>,
    pub omega_minus: DMatrix<C64>,
    pub omega_plus: DMatrix<C64>,
}

fn flat(op: &Operator) -> DVector<C64> {
    let m = op.to_dense();
    DVector::from_column_slice(m.as_slice())
}

fn ladders(space: &LabeledSpace) -> Result<Vec<(String, Operator, Operator)>> {
    let mut out = Vec::new();
    for f in space.factors() {
        if f.kind != FactorKind::Oscillator {
            return Err(Error::NotLinear(format!("factor '{}' is a {:?}, not an oscillator", f.label, f.kind)));
        }
        let a = Elementary::Annihilation.on(f)?.embed(space)?;
        let ad = a.adjoint();
        out.push((f.label.clone(), a, ad));
    }
    Ok(out)
}

/// Least-squares fit of `x` onto `basis`; returns coefficients and the
/// max-norm residual operator.
fn fit(x: &DVector<C64>, basis: &[DVector<C64>]) -> Result<(Vec<C64>, DVector<C64>)> {
    if basis.is_empty() {
        return Ok((Vec::new(), x.clone()));
    }
    let m = DMatrix::from_columns(basis);
    let gram = m.adjoint() * &m;
    let rhs = m.adjoint() * x;
    let coef = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotLinear("monomial basis is degenerate (truncation too small)".into()))?;
    let resid = x - &m * &coef;
    Ok((coef.iter().cloned().collect(), resid))
}

fn max_abs(v: &DVector<C64>) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Names the nonlinear monomial whose addition to `basis` best explains `x`.
fn blame(x: &DVector<C64>, basis: &[DVector<C64>], modes: &[(String, Operator, Operator)]) -> String {
    let mut cands: Vec<(String, Operator)> = Vec::new();
    for (l, a, ad) in modes {
        let n = ad * a;
        cands.push((format!("{l}: a†a a†a"), &n * &n));
        cands.push((format!("{l}: a†a† a a"), &(ad * ad) * &(a * a)));
        cands.push((format!("{l}: a†a a"), &n * a));
        cands.push((format!("{l}: a† a†a"), ad * &n));
        cands.push((format!("{l}: a†a†a†"), &(ad * ad) * ad));
        cands.push((format!("{l}: a a a"), &(a * a) * a));
    }
    for (i, (li, ai, adi)) in modes.iter().enumerate() {
        for (lj, aj, adj) in modes.iter().skip(i + 1) {
            cands.push((format!("{li}, {lj}: a†a b†b"), &(adi * ai) * &(adj * aj)));
            cands.push((format!("{li}, {lj}: a†a (b + b†)"), &(adi * ai) * &(aj + adj)));
            cands.push((format!("{li}, {lj}: (a + a†) b†b"), &(ai + adi) * &(adj * aj)));
        }
    }
    let mut best = (String::from("a higher-order term"), f64::INFINITY);
    for (name, op) in cands {
        let mut aug = basis.to_vec();
        aug.push(flat(&op));
        let Ok((_, resid)) = fit(x, &aug) else { continue };
        let r = max_abs(&resid);
        if r < best.1 - 1e-12 {
            best = (name, r);
        }
    }
    best.0
}

pub(crate) fn quadratic_form(g: &SlhTriple) -> Result<Quadratic> {
    if g.is_time_dependent() {
        return Err(Error::NotLinear("time-dependent triple".into()));
    }
    let space = g.space().clone();
    let modes = ladders(&space)?;
    let m = modes.len();
    let n = g.n_ports();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = g.s_entry(i, j).as_scalar(TOL_LIN).ok_or_else(|| {
                Error::NotLinear(format!("S[{},{}] is an operator, not a scalar", i + 1, j + 1))
            })?;
        }
    }
    let id = flat(&Operator::identity(&space));
    // L: span{I, a_k, a_k†}
    let mut lin_basis = vec![id];
    for (_, a, ad) in &modes {
        lin_basis.push(flat(a));
        lin_basis.push(flat(ad));
    }
    let mut phi_minus = DMatrix::zeros(n, m);
    let mut phi_plus = DMatrix::zeros(n, m);
    for (j, l) in g.l().iter().enumerate() {
        let x = flat(&l.embed(&space)?);
        let (coef, resid) = fit(&x, &lin_basis)?;
        if max_abs(&resid) >= TOL_LIN {
            return Err(Error::NotLinear(format!("L[{}] contains {}", j + 1, blame(&x, &lin_basis, &modes))));
        }
        if coef[0].norm() >= TOL_LIN {
            return Err(Error::NotLinear(format!("L[{}] has a constant displacement {}", j + 1, coef[0])));
        }
        for k in 0..m {
            phi_minus[(j, k)] = coef[1 + 2 * k];
            phi_plus[(j, k)] = coef[2 + 2 * k];
        }
    }
    // H: span{I, a, a†, a_j†a_k, a_j†a_k† (j ≤ k), a_j a_k (j ≤ k)}
    let mut h_basis = lin_basis;
    let mut index = Vec::new();
    for (j, (_, _, adj)) in modes.iter().enumerate() {
        for (k, (_, ak, _)) in modes.iter().enumerate() {
            index.push(('n', j, k));
            h_basis.push(flat(&(adj * ak)));
        }
    }
    for j in 0..m {
        for k in j..m {
            index.push(('p', j, k));
            h_basis.push(flat(&(&modes[j].2 * &modes[k].2)));
            index.push(('q', j, k));
            h_basis.push(flat(&(&modes[j].1 * &modes[k].1)));
        }
    }
    let hx = flat(g.h());
    let (coef, resid) = fit(&hx, &h_basis)?;
    if max_abs(&resid) >= TOL_LIN {
        return Err(Error::NotLinear(format!("H contains {}", blame(&hx, &h_basis, &modes))));
    }
    for k in 0..m {
        let lin = coef[1 + 2 * k].norm().max(coef[2 + 2 * k].norm());
        if lin >= TOL_LIN {
            return Err(Error::NotLinear(format!("H has a linear drive term on '{}'", modes[k].0)));
        }
    }
    let mut omega_minus = DMatrix::zeros(m, m);
    let mut omega_plus = DMatrix::zeros(m, m);
    let mut q = DMatrix::zeros(m, m);
    for (c, &(kind, j, k)) in coef[1 + 2 * m..].iter().zip(&index) {
        match kind {
            'n' => omega_minus[(j, k)] = *c,
            'p' => {
                let w = if j == k { *c * 2.0 } else { *c };
                omega_plus[(j, k)] = w;
                omega_plus[(k, j)] = w;
            }
            _ => {
                let w = if j == k { *c * 2.0 } else { *c };
                q[(j, k)] = w;
                q[(k, j)] = w;
            }
        }
    }
    let herm = (&omega_minus - omega_minus.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
        + (&q - omega_plus.map(|c| c.conj())).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if herm >= TOL_LIN {
        return Err(Error::NotLinear(format!("H is not Hermitian (residual {herm:.3e})")));
    }
    Ok(Quadratic { modes: modes.into_iter().map(|(l, _, _)| l).collect(), s, phi_minus, phi_plus, omega_minus, omega_plus })
}
