//! Trajectory runs: choose the generator for a drive, integrate, sample observables.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::hierarchy::Hierarchy;
use super::integrate::{integrate, Method, Options, Stats};
use super::observable::Observable;
use super::superop::{liouvillian, liouvillian_coherent, liouvillian_gaussian, GaussianEnv};
use crate::catalog::Envelope;
use crate::error::{Error, Result};
use crate::hilbert::state::product_density;
use crate::hilbert::{Coefficient, Elementary, FactorKind, Operator};
use crate::slh::SlhTriple;
use crate::tol::{TOL_TR, TRUNC_GUARD};

type C64 = Complex64;

/// Field state on the driven port.
#[derive(Clone, Debug)]
pub enum Drive {
    Vacuum,
    Coherent(Coefficient),
    /// `n` photons in the pulse mode `envelope`.
    Fock { n: usize, envelope: Envelope },
    /// `Σ psi[n] |n⟩` in the pulse mode `envelope`.
    Superposition { psi: Vec<C64>, envelope: Envelope },
    Gaussian(GaussianEnv),
}

#[derive(Clone, Debug)]
pub struct SimulationSpec {
    pub drive: Drive,
    /// 0-based driven input port.
    pub port: usize,
    /// Overrides the triple's declared initial state.
    pub initial: Option<DMatrix<C64>>,
    pub times: Vec<f64>,
    pub observables: Vec<String>,
    pub options: Options,
    /// Allowed growth of top-level Fock population; `None` disables the guard.
    pub truncation_guard: Option<f64>,
}

impl SimulationSpec {
    pub fn new(times: Vec<f64>, observables: Vec<String>) -> Self {
        SimulationSpec {
            drive: Drive::Vacuum,
            port: 0,
            initial: None,
            times,
            observables,
            options: Options::default(),
            truncation_guard: Some(TRUNC_GUARD),
        }
    }

    pub fn with_drive(mut self, drive: Drive, port: usize) -> Self {
        self.drive = drive;
        self.port = port;
        self
    }
}

/// `n + 1` evenly spaced times on `[0, t_end]`.
pub fn linspace(t_end: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![0.0];
    }
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub triple_hash: String,
    pub method: String,
    pub atol: Option<f64>,
    pub rtol: Option<f64>,
    pub dt: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    pub determinism: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: RunMetadata,
    #[serde(skip)]
    pub final_state: DMatrix<C64>,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Real part of column `name` over time.
    pub fn real_series(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[k] {
                    Cell::Real(x) => x,
                    Cell::Complex([x, _]) => x,
                })
                .collect(),
        )
    }

    pub fn complex_series(&self, name: &str) -> Option<Vec<C64>> {
        let k = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[k] {
                    Cell::Real(x) => C64::new(x, 0.0),
                    Cell::Complex([x, y]) => C64::new(x, y),
                })
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            out.push_str(&fmt_e(*t));
            for cell in row {
                out.push(',');
                match cell {
                    Cell::Real(x) => out.push_str(&fmt_e(*x)),
                    Cell::Complex([x, y]) => {
                        out.push_str(&fmt_e(*x));
                        out.push(':');
                        out.push_str(&fmt_e(*y));
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serializes")
    }
}

/// `%.12e` as printed by C: two-digit signed exponent.
pub fn fmt_e(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let e: i32 = exp.parse().expect("integer exponent");
    format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

fn top_projectors(g: &SlhTriple) -> Result<Vec<(String, Operator)>> {
    let sp = g.space();
    sp.factors()
        .iter()
        .filter(|f| f.kind == FactorKind::Oscillator)
        .map(|f| Ok((f.label.clone(), Elementary::Projector(f.dim - 1, f.dim - 1).on(f)?.embed(sp)?)))
        .collect()
}

fn build(g: &SlhTriple, spec: &SimulationSpec) -> Result<Hierarchy> {
    let n = g.n_ports();
    if n > 0 && spec.port >= n {
        return Err(Error::Validation(format!("drive port {} outside {} ports", spec.port + 1, n)));
    }
    let sp = g.space();
    let embed = |o: &Operator| o.embed(sp);
    let plain_flux = |alpha: Option<&Coefficient>, thermal: f64| -> Result<Vec<Operator>> {
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let l = embed(&g.l()[k])?;
            let s = embed(g.s_entry(k, spec.port))?;
            let field = match alpha {
                Some(a) => &l + &Operator::timed(a.clone(), &s),
                None => l,
            };
            let mut f = &field.adjoint() * &field;
            if thermal > 0.0 {
                f = &f + &(&s.adjoint() * &s).scale_re(thermal);
            }
            out.push(f);
        }
        Ok(out)
    };
    Ok(match &spec.drive {
        Drive::Vacuum => Hierarchy::plain(liouvillian(g)?, plain_flux(None, 0.0)?),
        Drive::Coherent(alpha) => Hierarchy::plain(liouvillian_coherent(g, spec.port, alpha)?, plain_flux(Some(alpha), 0.0)?),
        Drive::Gaussian(env) => {
            Hierarchy::plain(liouvillian_gaussian(g, spec.port, env)?, plain_flux(env.alpha.as_ref(), env.n)?)
        }
        Drive::Fock { n: photons, envelope } => {
            let mut psi = vec![C64::new(0.0, 0.0); photons + 1];
            psi[*photons] = C64::new(1.0, 0.0);
            Hierarchy::fock(g, spec.port, &psi, envelope)?
        }
        Drive::Superposition { psi, envelope } => Hierarchy::fock(g, spec.port, psi, envelope)?,
    })
}

fn min_eigenvalue(rho: &DMatrix<C64>) -> f64 {
    let h = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Integrates the network under `spec` and samples the requested observables.
pub fn simulate(g: &SlhTriple, spec: &SimulationSpec) -> Result<Trajectory> {
    let h = build(g, spec)?;
    let obs: Vec<Observable> = spec
        .observables
        .iter()
        .map(|o| Observable::parse(o, g.space(), h.n_outputs()))
        .collect::<Result<_>>()?;
    let rho0 = match &spec.initial {
        Some(r) => r.clone(),
        None => product_density(g.space(), &g.initial)?,
    };
    let tops = top_projectors(g)?;
    let p0: Vec<f64> = tops.iter().map(|(_, p)| p.expect(&rho0, 0.0).re).collect();
    let y0 = h.initial(&rho0)?;
    let guard = spec.truncation_guard;
    let check = |t: f64, y: &DVector<C64>| -> Result<()> {
        let rho = h.physical(y);
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TOL_TR || tr.im.abs() > TOL_TR {
            return Err(Error::Integration(format!(
                "trace drifted to {:.12} at t = {t} (tolerance {TOL_TR:e}); no renormalization applied",
                tr
            )));
        }
        if let Some(bound) = guard {
            for ((label, p), p_init) in tops.iter().zip(&p0) {
                let pop = p.expect(&rho, t).re;
                if pop > p_init + bound {
                    return Err(Error::Truncation { label: label.clone(), population: pop });
                }
            }
        }
        Ok(())
    };
    let (ys, stats) = integrate(|t, y, dy| h.rhs(t, y, dy), y0, &spec.times, &spec.options, check)?;
    let mut rows = Vec::with_capacity(ys.len());
    for (y, &t) in ys.iter().zip(&spec.times) {
        let rho = h.physical(y);
        let lam = min_eigenvalue(&rho);
        if lam < -TOL_TR {
            return Err(Error::Integration(format!("state lost positivity at t = {t}: eigenvalue {lam:.3e}")));
        }
        let flux = h.flux(t, y);
        let emitted = h.emitted(y);
        let row = obs
            .iter()
            .map(|o| match o {
                Observable::Expect { op, hermitian, .. } => {
                    let v = op.expect(&rho, t);
                    if *hermitian {
                        Cell::Real(v.re)
                    } else {
                        Cell::Complex([v.re, v.im])
                    }
                }
                Observable::Flux { port, .. } => Cell::Real(pick(&flux, *port)),
                Observable::Emitted { port, .. } => Cell::Real(pick(&emitted, *port)),
                Observable::Trace => Cell::Real(rho.trace().re),
            })
            .collect();
        rows.push(row);
    }
    let final_state = ys.last().map(|y| h.physical(y)).unwrap_or(rho0);
    Ok(Trajectory {
        columns: obs.iter().map(|o| o.name().to_string()).collect(),
        times: spec.times.clone(),
        rows,
        metadata: metadata(g, &spec.options, stats),
        final_state,
    })
}

fn pick(v: &[f64], port: Option<usize>) -> f64 {
    match port {
        Some(k) => v[k],
        None => v.iter().sum(),
    }
}

fn metadata(g: &SlhTriple, opts: &Options, stats: Stats) -> RunMetadata {
    let (method, atol, rtol, dt) = match opts.method {
        Method::Dopri5 { atol, rtol } => ("dopri5", Some(atol), Some(rtol), None),
        Method::Rk4 { dt } => ("rk4", None, None, Some(dt)),
    };
    RunMetadata {
        triple_hash: g.content_hash(),
        method: method.into(),
        atol,
        rtol,
        dt,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
        rhs_evaluations: stats.evaluations,
        determinism: "deterministic: no random numbers; identical inputs reproduce identical output on the same build".into(),
    }
}
