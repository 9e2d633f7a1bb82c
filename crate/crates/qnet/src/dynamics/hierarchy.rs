//! State layout and right-hand side shared by every simulation mode.
//!
//! The state vector stores the blocks `ρ_{m,n}` (`0 ≤ m,n ≤ N`) column-major
//! one after another, followed by one accumulated output-photon count per
//! output port. Without a Fock input `N = 0` and the single block is `ρ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::superop::{drive_coupling, liouvillian, DriveCoupling, SuperOp};
use crate::catalog::Envelope;
use crate::error::{Error, Result};
use crate::hilbert::{Coefficient, Operator};
use crate::slh::SlhTriple;

type C64 = Complex64;

/// One output port's photon-flux operators, applied to the block shifts
/// `(0,0)`, `(1,0)`, `(0,1)` and `(1,1)` respectively.
#[derive(Clone, Debug)]
struct FluxOps {
    direct: Operator,
    ket: Option<Operator>,
    bra: Option<Operator>,
    both: Option<Operator>,
}

/// Evolution generator together with its block structure.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    d: usize,
    nmax: usize,
    lin: SuperOp,
    fock: Option<(DriveCoupling, Coefficient)>,
    /// `c_{m,n}` weights of the physical state.
    weights: DMatrix<C64>,
    flux: Vec<FluxOps>,
}

impl Hierarchy {
    /// A single-block generator. `flux[k]` is the output flux operator of port `k`.
    pub fn plain(lin: SuperOp, flux: Vec<Operator>) -> Self {
        let d = lin.dim();
        Hierarchy {
            d,
            nmax: 0,
            lin,
            fock: None,
            weights: DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
            flux: flux.into_iter().map(|direct| FluxOps { direct, ket: None, bra: None, both: None }).collect(),
        }
    }

    /// Input field in the pulse mode `ξ` with photon-number amplitudes `psi`
    /// (`psi[n]` multiplies `|n⟩`), entering port `port`.
    pub fn fock(g: &SlhTriple, port: usize, psi: &[C64], envelope: &Envelope) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::Validation("empty photon-number amplitude list".into()));
        }
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!("photon-number amplitudes have norm {norm}, expected 1")));
        }
        let xi_norm = envelope.norm();
        if (xi_norm - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!("pulse envelope has norm {xi_norm:.8}, expected 1")));
        }
        let lin = liouvillian(g)?;
        let coupling = drive_coupling(g, port)?;
        let nmax = psi.len() - 1;
        let weights = DMatrix::from_fn(nmax + 1, nmax + 1, |m, n| psi[m] * psi[n].conj());
        let sp = g.space();
        let mut flux = Vec::new();
        for (k, l) in g.l().iter().enumerate() {
            let l = l.embed(sp)?;
            let s = g.s_entry(k, port).embed(sp)?;
            let (ld, sd) = (l.adjoint(), s.adjoint());
            flux.push(FluxOps { direct: &ld * &l, ket: Some(&ld * &s), bra: Some(&sd * &l), both: Some(&sd * &s) });
        }
        Ok(Hierarchy { d: lin.dim(), nmax, lin, fock: Some((coupling, envelope.xi_coefficient(C64::new(1.0, 0.0)))), weights, flux })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn n_outputs(&self) -> usize {
        self.flux.len()
    }

    fn block_len(&self) -> usize {
        self.d * self.d
    }

    fn offset(&self, m: usize, n: usize) -> usize {
        (m * (self.nmax + 1) + n) * self.block_len()
    }

    pub fn state_len(&self) -> usize {
        (self.nmax + 1) * (self.nmax + 1) * self.block_len() + self.flux.len()
    }

    /// Initial vector: every diagonal block holds `rho0`, the rest are zero.
    pub fn initial(&self, rho0: &DMatrix<C64>) -> Result<DVector<C64>> {
        if rho0.nrows() != self.d || rho0.ncols() != self.d {
            return Err(Error::Validation(format!("initial state is {}x{}, expected dimension {}", rho0.nrows(), rho0.ncols(), self.d)));
        }
        let mut y = DVector::zeros(self.state_len());
        for n in 0..=self.nmax {
            let o = self.offset(n, n);
            y.as_mut_slice()[o..o + self.block_len()].copy_from_slice(rho0.as_slice());
        }
        Ok(y)
    }

    pub fn block(&self, y: &DVector<C64>, m: usize, n: usize) -> DMatrix<C64> {
        let o = self.offset(m, n);
        DMatrix::from_column_slice(self.d, self.d, &y.as_slice()[o..o + self.block_len()])
    }

    /// `Σ c_{m,n} ρ_{m,n}`.
    pub fn physical(&self, y: &DVector<C64>) -> DMatrix<C64> {
        let mut rho = DMatrix::zeros(self.d, self.d);
        for m in 0..=self.nmax {
            for n in 0..=self.nmax {
                let c = self.weights[(m, n)];
                if c.norm() > 0.0 {
                    rho += self.block(y, m, n) * c;
                }
            }
        }
        rho
    }

    /// Accumulated output photon number per output port.
    pub fn emitted(&self, y: &DVector<C64>) -> Vec<f64> {
        let o = self.state_len() - self.flux.len();
        y.as_slice()[o..].iter().map(|c| c.re).collect()
    }

    /// Instantaneous output photon flux per output port.
    pub fn flux(&self, t: f64, y: &DVector<C64>) -> Vec<f64> {
        let xi = self.fock.as_ref().map(|(_, c)| c.eval(t)).unwrap_or_default();
        let blocks: Vec<Vec<DMatrix<C64>>> =
            (0..=self.nmax).map(|m| (0..=self.nmax).map(|n| self.block(y, m, n)).collect()).collect();
        self.flux
            .iter()
            .map(|f| {
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..=self.nmax {
                    for n in 0..=self.nmax {
                        let c = self.weights[(m, n)];
                        if c.norm() == 0.0 {
                            continue;
                        }
                        let (sm, sn) = ((m as f64).sqrt(), (n as f64).sqrt());
                        let mut v = f.direct.expect(&blocks[m][n], t);
                        if m > 0 {
                            if let Some(op) = &f.ket {
                                v += sm * xi * op.expect(&blocks[m - 1][n], t);
                            }
                        }
                        if n > 0 {
                            if let Some(op) = &f.bra {
                                v += sn * xi.conj() * op.expect(&blocks[m][n - 1], t);
                            }
                        }
                        if m > 0 && n > 0 {
                            if let Some(op) = &f.both {
                                v += sm * sn * xi.norm_sqr() * op.expect(&blocks[m - 1][n - 1], t);
                            }
                        }
                        acc += c * v;
                    }
                }
                acc.re
            })
            .collect()
    }

    /// Writes `dy/dt` into `dy`.
    pub fn rhs(&self, t: f64, y: &DVector<C64>, dy: &mut DVector<C64>) {
        dy.fill(C64::new(0.0, 0.0));
        let bl = self.block_len();
        let xi = self.fock.as_ref().map(|(_, c)| c.eval(t)).unwrap_or_default();
        let mut out = DMatrix::zeros(self.d, self.d);
        for m in 0..=self.nmax {
            for n in 0..=self.nmax {
                out.fill(C64::new(0.0, 0.0));
                self.lin.apply_into(t, &self.block(y, m, n), &mut out);
                if let Some((c, _)) = &self.fock {
                    if xi.norm() > 0.0 {
                        let (sm, sn) = ((m as f64).sqrt(), (n as f64).sqrt());
                        if m > 0 {
                            out += c.c1.apply(t, &self.block(y, m - 1, n)) * (xi * sm);
                        }
                        if n > 0 {
                            out += c.c2.apply(t, &self.block(y, m, n - 1)) * (xi.conj() * sn);
                        }
                        if m > 0 && n > 0 {
                            out += c.c3.apply(t, &self.block(y, m - 1, n - 1)) * C64::new(sm * sn * xi.norm_sqr(), 0.0);
                        }
                    }
                }
                let o = self.offset(m, n);
                dy.as_mut_slice()[o..o + bl].copy_from_slice(out.as_slice());
            }
        }
        let o = self.state_len() - self.flux.len();
        for (k, f) in self.flux(t, y).into_iter().enumerate() {
            dy[o + k] = C64::new(f, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{one_sided_cavity, tla_waveguide};
    use crate::dynamics::integrate::{integrate, Options};
    use crate::hilbert::elementary::sigma_minus;

    #[test]
    fn zero_block_follows_vacuum_equation() {
        let g = one_sided_cavity("c", 1.0, 0.2, 4).unwrap();
        let env = Envelope::gaussian(2.0, 0.5).unwrap();
        let h = Hierarchy::fock(&g, 0, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], &env).unwrap();
        let mut rho = DMatrix::zeros(4, 4);
        rho[(1, 1)] = C64::new(0.6, 0.0);
        rho[(0, 0)] = C64::new(0.4, 0.0);
        rho[(0, 1)] = C64::new(0.1, 0.2);
        rho[(1, 0)] = C64::new(0.1, -0.2);
        let y = h.initial(&rho).unwrap();
        let mut dy = DVector::zeros(h.state_len());
        h.rhs(2.0, &y, &mut dy);
        let vac = liouvillian(&g).unwrap().apply(2.0, &rho);
        let d00 = DMatrix::from_column_slice(4, 4, &dy.as_slice()[..16]);
        assert!((d00 - vac).camax() < 1e-14);
    }

    #[test]
    fn single_photon_is_conserved_on_a_two_level_atom() {
        let gamma = 1.0;
        let g = tla_waveguide("q", gamma, 0.0, 0.0).unwrap();
        let env = Envelope::gaussian(4.0, 1.0).unwrap();
        let h = Hierarchy::fock(&g, 0, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], &env).unwrap();
        let mut rho0 = DMatrix::zeros(2, 2);
        rho0[(0, 0)] = C64::new(1.0, 0.0);
        let times: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
        let (ys, _) = integrate(|t, y, dy| h.rhs(t, y, dy), h.initial(&rho0).unwrap(), &times, &Options::default(), |_, _| Ok(()))
            .unwrap();
        let sm = sigma_minus("q").unwrap();
        let pe = (&sm.adjoint() * &sm).constant().clone();
        for (y, &t) in ys.iter().zip(&times) {
            let rho = h.physical(y);
            assert!((rho.trace().re - 1.0).abs() < 1e-8);
            let blocks_herm = (h.block(y, 0, 1) - h.block(y, 1, 0).adjoint()).camax();
            assert!(blocks_herm < 1e-9);
            // excitation + emitted = photons delivered so far
            let delivered = 1.0 - env.w(t);
            let total = pe.trace_product(&rho).re + h.emitted(y)[0];
            assert!((total - delivered).abs() < 1e-4, "t={t}: {total} vs {delivered}");
        }
        assert!((h.emitted(ys.last().unwrap())[0] - 1.0).abs() < 1e-4);
    }
}
