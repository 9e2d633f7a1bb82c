use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::superop::SuperOp;
use crate::error::{Error, Result};
use crate::tol::TOL_OP;

type C64 = Complex64;

/// Largest vectorized dimension solved through a full SVD.
const SVD_MAX: usize = 1024;
/// Largest vectorized dimension materialized at all.
const DENSE_MAX: usize = 4096;
/// Relative singular-value threshold for the null space.
const NULL_TOL: f64 = 1e-9;

/// Unit-trace fixed point of a time-independent generator.
pub fn steady_state(sup: &SuperOp) -> Result<DMatrix<C64>> {
    let d = sup.dim();
    let n = d * d;
    if n > DENSE_MAX {
        return Err(Error::Unsupported(format!(
            "steady state needs a {n}x{n} superoperator; the dense limit is {DENSE_MAX}"
        )));
    }
    let m0 = sup.matrix(0.0);
    if sup.is_time_dependent() {
        // envelopes that are constant in practice are accepted
        for t in [0.37, 1.9, 6.3] {
            if sup.matrix(t).sub(&m0).max_abs() > TOL_OP {
                return Err(Error::Unsupported("steady state of a time-dependent generator".into()));
            }
        }
    }
    let m = m0.to_dense();
    let v = if n <= SVD_MAX { null_vector_svd(m)? } else { null_vector_qr(m, d)? };
    let rho = DMatrix::from_column_slice(d, d, v.as_slice());
    let tr = rho.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::Integration("null vector has zero trace".into()));
    }
    let rho = rho / tr;
    Ok((&rho + rho.adjoint()) * C64::new(0.5, 0.0))
}

fn null_vector_svd(m: DMatrix<C64>) -> Result<DVector<C64>> {
    let svd = m.svd(false, true);
    let s = &svd.singular_values;
    let smax = s.max();
    let null: Vec<usize> = (0..s.len()).filter(|&k| s[k] <= NULL_TOL * smax.max(1.0)).collect();
    if null.len() > 1 {
        return Err(Error::NonUniqueSteadyState(null.len()));
    }
    let k = (0..s.len()).min_by(|&a, &b| s[a].total_cmp(&s[b])).expect("non-empty");
    if null.is_empty() {
        return Err(Error::Integration(format!(
            "generator has no null vector (smallest singular value {:.3e})",
            s[k]
        )));
    }
    let vt = svd.v_t.expect("requested");
    Ok(vt.row(k).adjoint())
}

fn null_vector_qr(m: DMatrix<C64>, d: usize) -> Result<DVector<C64>> {
    let n = d * d;
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let r0 = r[(0, 0)].norm();
    let deficient = (0..n).filter(|&k| r[(k, k)].norm() <= NULL_TOL * r0.max(1.0)).count();
    if deficient > 1 {
        return Err(Error::NonUniqueSteadyState(deficient));
    }
    // Replace the first row by the trace condition.
    let mut a = m;
    let mut b = DVector::zeros(n);
    for c in 0..n {
        a[(0, c)] = C64::new(0.0, 0.0);
    }
    for k in 0..d {
        a[(0, k * d + k)] = C64::new(1.0, 0.0);
    }
    b[0] = C64::new(1.0, 0.0);
    a.lu().solve(&b).ok_or_else(|| Error::Integration("steady-state system is singular".into()))
}
