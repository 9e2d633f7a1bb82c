use nalgebra::DMatrix;
use num_complex::Complex64;

use super::triple::SlhTriple;
use crate::error::{Error, Result};
use crate::hilbert::{LabeledSpace, Operator, SparseMatrix};
use crate::tol::{SINGULAR, TOL_OP};

type C64 = Complex64;

fn half_i_inv() -> C64 {
    // 1/(2i)
    C64::new(0.0, -0.5)
}

fn sum(space: &LabeledSpace, it: impl IntoIterator<Item = Operator>) -> Operator {
    it.into_iter().fold(Operator::zero(space), |acc, x| &acc + &x)
}

fn lift_both(g1: &SlhTriple, g2: &SlhTriple) -> Result<(SlhTriple, SlhTriple)> {
    let u = g1.space().union(g2.space())?;
    Ok((g1.embed(&u)?, g2.embed(&u)?))
}

/// Series product `G2 ◁ G1`: every output of `g1` feeds the same-index input of `g2`.
pub fn series(g2: &SlhTriple, g1: &SlhTriple) -> Result<SlhTriple> {
    let n = g1.n_ports();
    if g2.n_ports() != n {
        return Err(Error::Composition(format!(
            "series product needs equal port counts, got {} and {}",
            g2.n_ports(),
            n
        )));
    }
    let (a, b) = lift_both(g2, g1)?;
    let sp = a.space().clone();
    let (s2, l2) = (a.s(), a.l());
    let (s1, l1) = (b.s(), b.l());
    let s: Vec<Vec<Operator>> =
        (0..n).map(|i| (0..n).map(|j| sum(&sp, (0..n).map(|k| &s2[i][k] * &s1[k][j]))).collect()).collect();
    let s2l1: Vec<Operator> = (0..n).map(|i| sum(&sp, (0..n).map(|k| &s2[i][k] * &l1[k]))).collect();
    let l: Vec<Operator> = (0..n).map(|i| &l2[i] + &s2l1[i]).collect();
    let cross = sum(&sp, (0..n).map(|i| &l2[i].adjoint() * &s2l1[i]));
    let h = &(&b.h().clone() + a.h()) + &(&cross - &cross.adjoint()).scale(half_i_inv());
    Ok(SlhTriple::from_parts(sp, s, l, h, g1.ports().to_vec())?.carry_annotations(&[g1, g2]))
}

/// Concatenation `G1 ⊞ G2`: block-diagonal `S`, stacked `L`, summed `H`.
pub fn concat(g1: &SlhTriple, g2: &SlhTriple) -> Result<SlhTriple> {
    let (a, b) = lift_both(g1, g2)?;
    let sp = a.space().clone();
    let (n1, n2) = (a.n_ports(), b.n_ports());
    let zero = Operator::zero(&sp);
    let mut s = Vec::with_capacity(n1 + n2);
    for i in 0..n1 + n2 {
        let row = (0..n1 + n2)
            .map(|j| match (i < n1, j < n1) {
                (true, true) => a.s()[i][j].clone(),
                (false, false) => b.s()[i - n1][j - n1].clone(),
                _ => zero.clone(),
            })
            .collect();
        s.push(row);
    }
    let l = a.l().iter().chain(b.l()).cloned().collect();
    let h = a.h() + b.h();
    let ports = g1.ports().iter().chain(g2.ports()).cloned().collect();
    Ok(SlhTriple::from_parts(sp, s, l, h, ports)?.carry_annotations(&[g1, g2]))
}

/// Concatenation plus a Hermitian interaction, attributed to the first system.
pub fn direct_couple(g1: &SlhTriple, g2: &SlhTriple, h_int: &Operator) -> Result<SlhTriple> {
    let residual = h_int.hermitian_residual();
    if residual > TOL_OP * h_int.max_abs().max(1.0) {
        return Err(Error::Validation(format!("interaction Hamiltonian is not Hermitian (residual {residual:.3e})")));
    }
    let base = concat(g1, g2)?;
    let u = base.space().union(h_int.space())?;
    let base = base.embed(&u)?;
    let h = base.h() + h_int;
    let mut out = SlhTriple::from_parts(u, base.s().to_vec(), base.l().to_vec(), h, base.ports().to_vec())?;
    out.metadata = base.metadata.clone();
    out.initial = base.initial.clone();
    out.metadata.insert("direct_coupling.first".into(), g1.space().labels().join(","));
    out.metadata.insert("direct_coupling.second".into(), g2.space().labels().join(","));
    Ok(out)
}

/// Result of a feedback reduction with survivor bookkeeping: new port `k`
/// carries old output `outputs[k]` and old input `inputs[k]`.
#[derive(Clone, Debug)]
pub struct FeedbackResult {
    pub triple: SlhTriple,
    pub outputs: Vec<usize>,
    pub inputs: Vec<usize>,
}

/// Closes one loop `out x → in y` (0-based).
pub fn feedback(g: &SlhTriple, x: usize, y: usize) -> Result<SlhTriple> {
    Ok(feedback_multi(g, &[(x, y)])?.triple)
}

/// Closes every `(out, in)` pair at once with the block form of the
/// reduction. Survivors keep their relative order and are paired by rank.
pub fn feedback_multi(g: &SlhTriple, wiring: &[(usize, usize)]) -> Result<FeedbackResult> {
    let n = g.n_ports();
    let mut xs: Vec<usize> = Vec::with_capacity(wiring.len());
    let mut ys: Vec<usize> = Vec::with_capacity(wiring.len());
    for &(x, y) in wiring {
        if x >= n || y >= n {
            return Err(Error::Composition(format!("wire {}→{} outside {n} ports", x + 1, y + 1)));
        }
        if xs.contains(&x) {
            return Err(Error::Composition(format!("output {} wired twice", x + 1)));
        }
        if ys.contains(&y) {
            return Err(Error::Composition(format!("input {} wired twice", y + 1)));
        }
        xs.push(x);
        ys.push(y);
    }
    let xbar: Vec<usize> = (0..n).filter(|i| !xs.contains(i)).collect();
    let ybar: Vec<usize> = (0..n).filter(|j| !ys.contains(j)).collect();
    if wiring.is_empty() {
        return Ok(FeedbackResult { triple: g.clone(), outputs: xbar, inputs: ybar });
    }
    let sp = g.space().clone();
    let s = g.s();
    let l = g.l();
    let m = loop_inverse(g, &xs, &ys)?;
    let k = xs.len();

    // T = S_{:,Y} M, an n×k operator matrix
    let t: Vec<Vec<Operator>> = (0..n)
        .map(|i| (0..k).map(|q| sum(&sp, (0..k).map(|p| &s[i][ys[p]] * &m[p][q]))).collect())
        .collect();
    let s_red: Vec<Vec<Operator>> = xbar
        .iter()
        .map(|&i| {
            ybar.iter().map(|&j| &s[i][j] + &sum(&sp, (0..k).map(|q| &t[i][q] * &s[xs[q]][j]))).collect()
        })
        .collect();
    let tl: Vec<Operator> = (0..n).map(|i| sum(&sp, (0..k).map(|q| &t[i][q] * &l[xs[q]]))).collect();
    let l_red: Vec<Operator> = xbar.iter().map(|&i| &l[i] + &tl[i]).collect();
    let cross = sum(&sp, (0..n).map(|i| &l[i].adjoint() * &tl[i]));
    let h_red = g.h() + &(&cross - &cross.adjoint()).scale(half_i_inv());

    let ports = xbar
        .iter()
        .zip(&ybar)
        .map(|(&o, &i)| {
            if o == i || g.ports()[o] == g.ports()[i] {
                g.ports()[i].clone()
            } else {
                format!("{}>{}", g.ports()[o], g.ports()[i])
            }
        })
        .collect();
    let mut triple = SlhTriple::from_parts(sp, s_red, l_red, h_red, ports)?;
    triple.metadata = g.metadata.clone();
    triple.initial = g.initial.clone();
    Ok(FeedbackResult { triple, outputs: xbar, inputs: ybar })
}

/// `(I − S_XY)⁻¹` as a k×k operator matrix.
fn loop_inverse(g: &SlhTriple, xs: &[usize], ys: &[usize]) -> Result<Vec<Vec<Operator>>> {
    let k = xs.len();
    let sp = g.space();
    let block: Vec<Vec<&Operator>> = xs.iter().map(|&x| ys.iter().map(|&y| g.s_entry(x, y)).collect()).collect();
    if block.iter().flatten().any(|x| x.is_time_dependent()) {
        return Err(Error::Unsupported("feedback through a time-dependent scattering entry".into()));
    }
    let wires = || {
        xs.iter().zip(ys).map(|(x, y)| format!("{}→{}", x + 1, y + 1)).collect::<Vec<_>>().join(", ")
    };
    let scalars: Option<Vec<Vec<C64>>> =
        block.iter().map(|row| row.iter().map(|x| x.as_scalar(1e-14)).collect()).collect();
    if let Some(c) = scalars {
        let a = DMatrix::from_fn(k, k, |p, q| if p == q { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) } - c[p][q]);
        let inv = invert_checked(a).ok_or_else(|| Error::AlgebraicLoop(format!("I − S_XY singular for wires {}", wires())))?;
        return Ok((0..k).map(|p| (0..k).map(|q| Operator::identity(sp).scale(inv[(p, q)])).collect()).collect());
    }
    let d = sp.total_dim();
    let mut a = DMatrix::<C64>::identity(k * d, k * d);
    for p in 0..k {
        for q in 0..k {
            for (r, c, v) in block[p][q].constant().triplets() {
                a[(p * d + r, q * d + c)] -= v;
            }
        }
    }
    let inv = invert_checked(a).ok_or_else(|| Error::AlgebraicLoop(format!("I − S_XY singular for wires {}", wires())))?;
    let mut out = Vec::with_capacity(k);
    for p in 0..k {
        let mut row = Vec::with_capacity(k);
        for q in 0..k {
            let sub = inv.view((p * d, q * d), (d, d)).into_owned();
            row.push(Operator::new(sp.clone(), SparseMatrix::from_dense(&sub).cleaned())?);
        }
        out.push(row);
    }
    Ok(out)
}

fn invert_checked(a: DMatrix<C64>) -> Option<DMatrix<C64>> {
    let sv = a.clone().singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin < SINGULAR {
        return None;
    }
    a.try_inverse()
}

/// Which side of a triple a port permutation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortSide {
    Inputs,
    Outputs,
    Both,
}

fn check_permutation(sigma: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if sigma.len() != n {
        return Err(Error::Composition(format!("permutation of length {} on {n} ports", sigma.len())));
    }
    for &s in sigma {
        if s >= n || seen[s] {
            return Err(Error::Composition(format!("{sigma:?} is not a permutation of 0..{n}")));
        }
        seen[s] = true;
    }
    Ok(())
}

/// Reorders ports with `P_{jk} = δ_{k,σ(j)}` (0-based `σ`): new output `j`
/// is old output `σ(j)`, and on inputs new input `j` is old input `σ(j)`
/// (`S ↦ S Pᵀ`). Applying `σ1` then `σ2` equals applying `σ1∘σ2`.
pub fn permute_ports(g: &SlhTriple, sigma: &[usize], side: PortSide) -> Result<SlhTriple> {
    let n = g.n_ports();
    check_permutation(sigma, n)?;
    let rows: Vec<usize> = if side == PortSide::Inputs { (0..n).collect() } else { sigma.to_vec() };
    let cols: Vec<usize> = if side == PortSide::Outputs { (0..n).collect() } else { sigma.to_vec() };
    let s = rows.iter().map(|&i| cols.iter().map(|&j| g.s_entry(i, j).clone()).collect()).collect();
    let l = rows.iter().map(|&i| g.l()[i].clone()).collect();
    let ports = cols.iter().map(|&j| g.ports()[j].clone()).collect();
    let mut out = SlhTriple::from_parts(g.space().clone(), s, l, g.h().clone(), ports)?;
    out.metadata = g.metadata.clone();
    out.initial = g.initial.clone();
    Ok(out)
}

/// Permutation matrix `P_σ` with the convention of [`permute_ports`].
pub fn permutation_matrix(sigma: &[usize]) -> Result<DMatrix<C64>> {
    check_permutation(sigma, sigma.len())?;
    let n = sigma.len();
    Ok(DMatrix::from_fn(n, n, |j, k| if k == sigma[j] { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadPosition {
    Before,
    After,
}

/// Concatenates `n_extra` pass-through channels before or after `g`.
pub fn pad(g: &SlhTriple, n_extra: usize, position: PadPosition) -> Result<SlhTriple> {
    if n_extra == 0 {
        return Ok(g.clone());
    }
    let mut id = SlhTriple::identity(n_extra);
    id.set_ports((0..n_extra).map(|k| format!("pad{}", k + 1)).collect());
    match position {
        PadPosition::Before => concat(&id, g),
        PadPosition::After => concat(g, &id),
    }
}
