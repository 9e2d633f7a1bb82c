//! Linear (quadratic-Hamiltonian) networks in ABCD form.
//!
//! Passive form acts on `a = (a₁…a_m)`, active form on the doubled-up vector
//! `ã = (a₁…a_m, a₁†…a_m†)`.

mod extract;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{Elementary, Factor, LabeledSpace, Operator};
use crate::slh::SlhTriple;
use crate::tol::{SINGULAR, TOL_OP};

type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Passive,
    Active,
}

#[derive(Clone, Debug)]
pub struct LinearModel {
    pub form: Form,
    pub a: DMatrix<C64>,
    pub b: DMatrix<C64>,
    pub c: DMatrix<C64>,
    pub d: DMatrix<C64>,
    pub modes: Vec<String>,
    /// `Φ` (passive) or `Φ₋`.
    pub phi: DMatrix<C64>,
    pub phi_plus: Option<DMatrix<C64>>,
    /// `Ω` (passive) or `Ω₋`.
    pub omega: DMatrix<C64>,
    pub omega_plus: Option<DMatrix<C64>>,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `diag(I_k, −I_k)`.
pub fn j_matrix(k: usize) -> DMatrix<C64> {
    DMatrix::from_fn(2 * k, 2 * k, |i, j| if i != j { c(0.0, 0.0) } else if i < k { c(1.0, 0.0) } else { c(-1.0, 0.0) })
}

/// `X♭ = J_q X† J_p` for a `2p × 2q` matrix.
pub fn flat(x: &DMatrix<C64>) -> DMatrix<C64> {
    let (p, q) = (x.nrows() / 2, x.ncols() / 2);
    j_matrix(q) * x.adjoint() * j_matrix(p)
}

/// `[[X, Y], [Y*, X*]]`.
fn doubled(x: &DMatrix<C64>, y: &DMatrix<C64>) -> DMatrix<C64> {
    let (r, k) = x.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * k);
    out.view_mut((0, 0), (r, k)).copy_from(x);
    out.view_mut((0, k), (r, k)).copy_from(y);
    out.view_mut((r, 0), (r, k)).copy_from(&y.map(|z| z.conj()));
    out.view_mut((r, k), (r, k)).copy_from(&x.map(|z| z.conj()));
    out
}

/// ABCD data of a linear triple. Passive when L has no creation operators
/// and H conserves excitation number; active (doubled-up) otherwise.
pub fn extract_linear(g: &SlhTriple) -> Result<LinearModel> {
    let q = extract::quadratic_form(g)?;
    let active = max_abs(&q.phi_plus) >= TOL_OP || max_abs(&q.omega_plus) >= TOL_OP;
    let half = c(0.5, 0.0);
    let i = c(0.0, 1.0);
    if !active {
        let phi = q.phi_minus;
        let omega = q.omega_minus;
        let a = -(phi.adjoint() * &phi) * half - &omega * i;
        let b = -(phi.adjoint() * &q.s);
        return Ok(LinearModel {
            form: Form::Passive,
            a,
            b,
            c: phi.clone(),
            d: q.s,
            modes: q.modes,
            phi,
            phi_plus: None,
            omega,
            omega_plus: None,
        });
    }
    let phi_t = doubled(&q.phi_minus, &q.phi_plus);
    // Ω̃ = [[Ω₋, Ω₊], [−Ω₊*, −Ω₋*]]
    let m = q.modes.len();
    let mut omega_t = DMatrix::zeros(2 * m, 2 * m);
    omega_t.view_mut((0, 0), (m, m)).copy_from(&q.omega_minus);
    omega_t.view_mut((0, m), (m, m)).copy_from(&q.omega_plus);
    let lower_left = -q.omega_plus.map(|z| z.conj());
    let lower_right = -q.omega_minus.map(|z| z.conj());
    omega_t.view_mut((m, 0), (m, m)).copy_from(&lower_left);
    omega_t.view_mut((m, m), (m, m)).copy_from(&lower_right);
    let d_t = doubled(&q.s, &DMatrix::zeros(q.s.nrows(), q.s.ncols()));
    let pf = flat(&phi_t);
    let a = -(&pf * &phi_t) * half - &omega_t * i;
    let b = -(&pf * &d_t);
    Ok(LinearModel {
        form: Form::Active,
        a,
        b,
        c: phi_t,
        d: d_t,
        modes: q.modes,
        phi: q.phi_minus,
        phi_plus: Some(q.phi_plus),
        omega: q.omega_minus,
        omega_plus: Some(q.omega_plus),
    })
}

impl LinearModel {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_ports(&self) -> usize {
        match self.form {
            Form::Passive => self.d.nrows(),
            Form::Active => self.d.nrows() / 2,
        }
    }

    /// A model given directly by its matrices (no SLH origin).
    pub fn from_abcd(form: Form, a: DMatrix<C64>, b: DMatrix<C64>, c: DMatrix<C64>, d: DMatrix<C64>, modes: Vec<String>) -> Result<Self> {
        let k = match form {
            Form::Passive => modes.len(),
            Form::Active => 2 * modes.len(),
        };
        let p = d.nrows();
        if a.shape() != (k, k) || b.shape() != (k, p) || c.shape() != (p, k) || d.shape() != (p, p) {
            return Err(Error::Validation(format!(
                "inconsistent shapes A{:?} B{:?} C{:?} D{:?} for {} modes",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape(),
                modes.len()
            )));
        }
        if form == Form::Active && p % 2 != 0 {
            return Err(Error::Validation("active D must have even size".into()));
        }
        let (phi, omega) = (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0));
        Ok(LinearModel { form, a, b, c, d, modes, phi, phi_plus: None, omega, omega_plus: None })
    }

    /// The same system in doubled-up form.
    pub fn to_active(&self) -> LinearModel {
        if self.form == Form::Active {
            return self.clone();
        }
        let z = |m: &DMatrix<C64>| DMatrix::zeros(m.nrows(), m.ncols());
        LinearModel {
            form: Form::Active,
            a: doubled(&self.a, &z(&self.a)),
            b: doubled(&self.b, &z(&self.b)),
            c: doubled(&self.c, &z(&self.c)),
            d: doubled(&self.d, &z(&self.d)),
            modes: self.modes.clone(),
            phi: self.phi.clone(),
            phi_plus: Some(z(&self.phi)),
            omega: self.omega.clone(),
            omega_plus: Some(z(&self.omega)),
        }
    }

    /// `Ξ(s) = D + C(sI − A)⁻¹B`.
    pub fn transfer_function(&self, s: C64) -> Result<DMatrix<C64>> {
        Ok(&self.d + &self.c * self.resolvent(s)? * &self.b)
    }

    /// `ξ(s) = C(sI − A)⁻¹`, the response to initial mode amplitudes.
    pub fn initial_response(&self, s: C64) -> Result<DMatrix<C64>> {
        Ok(&self.c * self.resolvent(s)?)
    }

    fn resolvent(&self, s: C64) -> Result<DMatrix<C64>> {
        let k = self.a.nrows();
        if k == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let m = DMatrix::<C64>::identity(k, k) * s - &self.a;
        let sv = m.clone().singular_values();
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = 1.0 + max_abs(&self.a) + s.norm();
        if smin < SINGULAR * scale {
            return Err(Error::Pole(format!("{s}")));
        }
        m.try_inverse().ok_or_else(|| Error::Pole(format!("{s}")))
    }

    /// Eigenvalues of `A`.
    pub fn poles(&self) -> Vec<C64> {
        if self.a.nrows() == 0 {
            return Vec::new();
        }
        self.a.clone().schur().eigenvalues().map(|v| v.iter().cloned().collect()).unwrap_or_default()
    }

    /// All eigenvalues of `A` have non-positive real part.
    pub fn is_hurwitz(&self) -> bool {
        self.poles().iter().all(|z| z.re <= TOL_OP)
    }

    pub fn realizability(&self) -> Realizability {
        let m = self.to_active();
        let cf = flat(&m.c);
        let r1 = max_abs(&(&m.a + flat(&m.a) + &cf * &m.c));
        let r2 = max_abs(&(&m.b + &cf * &m.d));
        let k = m.d.ncols();
        let r3 = max_abs(&(flat(&m.d) * &m.d - DMatrix::<C64>::identity(k, k)));
        Realizability { residuals: [r1, r2, r3] }
    }

    /// Quadrature-basis matrices with `x = (a + a†)/√2`, `y = i(a† − a)/√2`.
    pub fn quadrature(&self) -> LinearModel {
        let m = self.to_active();
        let t = |k: usize| {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let mut t = DMatrix::zeros(2 * k, 2 * k);
            for j in 0..k {
                t[(j, j)] = c(r, 0.0);
                t[(j, j + k)] = c(r, 0.0);
                t[(j + k, j)] = c(0.0, -r);
                t[(j + k, j + k)] = c(0.0, r);
            }
            t
        };
        let (tm, tn) = (t(m.n_modes()), t(m.n_ports()));
        let (tmi, tni) = (tm.adjoint(), tn.adjoint());
        LinearModel {
            a: &tm * &m.a * &tmi,
            b: &tm * &m.b * &tni,
            c: &tn * &m.c * &tmi,
            d: &tn * &m.d * &tni,
            ..m
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Realizability {
    /// `‖Ã + Ã♭ + C̃♭C̃‖`, `‖B̃ + C̃♭D̃‖`, `‖D̃♭D̃ − I‖` (max norms).
    pub residuals: [f64; 3],
}

impl Realizability {
    pub const CONDITIONS: [&'static str; 3] = ["A + A^flat + C^flat C = 0", "B = -C^flat D", "D^flat D = I"];

    pub fn passes(&self, tol: f64) -> bool {
        self.residuals.iter().all(|r| *r <= tol)
    }

    pub fn failures(&self, tol: f64) -> Vec<(usize, f64)> {
        self.residuals.iter().enumerate().filter(|(_, r)| **r > tol).map(|(k, r)| (k + 1, *r)).collect()
    }
}

/// SLH triple of a realizable model on oscillators truncated at `trunc`.
pub fn abcd_to_slh(model: &LinearModel, trunc: usize) -> Result<SlhTriple> {
    let rep = model.realizability();
    if let Some(&(k, r)) = rep.failures(1e-9).first() {
        return Err(Error::Unrealizable(format!(
            "condition {k} ({}) fails with residual {r:.3e}",
            Realizability::CONDITIONS[k - 1]
        )));
    }
    let act = model.to_active();
    let (m, n) = (act.n_modes(), act.n_ports());
    let conj_blocks = |x: &DMatrix<C64>, r: usize, k: usize| -> f64 {
        let tl = x.view((0, 0), (r, k)).into_owned();
        let tr = x.view((0, k), (r, k)).into_owned();
        let bl = x.view((r, 0), (r, k)).into_owned();
        let br = x.view((r, k), (r, k)).into_owned();
        max_abs(&(bl - tr.map(|z| z.conj()))).max(max_abs(&(br - tl.map(|z| z.conj()))))
    };
    if conj_blocks(&act.c, n, m) > TOL_OP || conj_blocks(&act.d, n, n) > TOL_OP {
        return Err(Error::Unrealizable("C or D lacks the doubled-up block structure".into()));
    }
    if max_abs(&act.d.view((0, n), (n, n)).into_owned()) > TOL_OP {
        return Err(Error::Unrealizable("D mixes annihilation and creation inputs".into()));
    }
    let omega_t = (&act.a + flat(&act.c) * &act.c * c(0.5, 0.0)) * c(0.0, 1.0);
    let om = omega_t.view((0, 0), (m, m)).into_owned();
    let op = omega_t.view((0, m), (m, m)).into_owned();
    let phi_m = act.c.view((0, 0), (n, m)).into_owned();
    let phi_p = act.c.view((0, m), (n, m)).into_owned();
    let s = act.d.view((0, 0), (n, n)).into_owned();

    let factors: Vec<Factor> = act.modes.iter().map(|l| Factor::oscillator(l.clone(), trunc)).collect();
    let space = LabeledSpace::new(factors)?;
    let mut ladders = Vec::with_capacity(m);
    for f in space.factors() {
        let a = Elementary::Annihilation.on(f)?.embed(&space)?;
        ladders.push((a.adjoint(), a));
    }
    // modes are stored in label order, which is also the space order
    let mut l_ops = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc = Operator::zero(&space);
        for (k, (ad, a)) in ladders.iter().enumerate() {
            acc = &(&acc + &a.scale(phi_m[(j, k)])) + &ad.scale(phi_p[(j, k)]);
        }
        l_ops.push(acc.cleaned());
    }
    let mut h = Operator::zero(&space);
    for (j, (adj, _)) in ladders.iter().enumerate() {
        for (k, (adk, ak)) in ladders.iter().enumerate() {
            h = &h + &(adj * ak).scale(om[(j, k)]);
            let pair = (adj * adk).scale(op[(j, k)] * 0.5);
            h = &(&h + &pair) + &pair.adjoint();
        }
    }
    let s_ops: Vec<Vec<Operator>> =
        (0..n).map(|i| (0..n).map(|j| Operator::identity(&space).scale(s[(i, j)])).collect()).collect();
    SlhTriple::on_space(space, s_ops, l_ops, h.cleaned())
}

/// Single-photon reflection amplitude of a two-level atom (resonance `Δ`,
/// total decay `γ`) at probe frequency `ω`.
pub fn tla_reflection(gamma: f64, delta: f64, omega: f64) -> C64 {
    let x = c(gamma / 2.0, -(delta - omega));
    let y = c(gamma / 2.0, delta - omega);
    -x / y
}
