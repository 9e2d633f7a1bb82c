//! Explicit Runge–Kutta integration on flat complex state vectors.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;
type Vector = DVector<C64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Dormand–Prince 5(4) with error control.
    Dopri5 { atol: f64, rtol: f64 },
    /// Classical RK4 with a fixed step, shortened to land on sample times.
    Rk4 { dt: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub method: Method,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { method: Method::Dopri5 { atol: 1e-10, rtol: 1e-8 }, max_steps: 5_000_000 }
    }
}

impl Options {
    pub fn dopri5(atol: f64, rtol: f64) -> Self {
        Options { method: Method::Dopri5 { atol, rtol }, ..Default::default() }
    }

    pub fn rk4(dt: f64) -> Self {
        Options { method: Method::Rk4 { dt }, ..Default::default() }
    }
}

/// Step statistics of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates `dy/dt = f(t, y)` and returns `y` at every entry of `times`
/// (non-decreasing, starting at the initial time). `check` runs after every
/// accepted step and can abort the run.
pub fn integrate<F, G>(mut f: F, y0: Vector, times: &[f64], opts: &Options, mut check: G) -> Result<(Vec<Vector>, Stats)>
where
    F: FnMut(f64, &Vector, &mut Vector),
    G: FnMut(f64, &Vector) -> Result<()>,
{
    if times.is_empty() {
        return Ok((Vec::new(), Stats::default()));
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Validation("sample times must be finite and non-decreasing".into()));
    }
    let mut stats = Stats::default();
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0;
    let mut t = times[0];
    check(t, &y)?;
    out.push(y.clone());
    match opts.method {
        Method::Rk4 { dt } => {
            if !(dt > 0.0) {
                return Err(Error::Validation(format!("fixed step must be positive, got {dt}")));
            }
            let mut rk = Rk4::new(y.len());
            for &target in &times[1..] {
                let span = target - t;
                let n = (span / dt - 1e-9).ceil().max(0.0) as usize;
                for k in 0..n {
                    let t_next = if k + 1 == n { target } else { t + dt };
                    rk.step(&mut f, t, t_next - t, &mut y);
                    stats.evaluations += 4;
                    stats.accepted += 1;
                    if stats.accepted > opts.max_steps {
                        return Err(Error::Integration(format!("exceeded {} steps at t = {t}", opts.max_steps)));
                    }
                    t = t_next;
                    check(t, &y)?;
                }
                t = target;
                out.push(y.clone());
            }
        }
        Method::Dopri5 { atol, rtol } => {
            if !(atol > 0.0 && rtol >= 0.0) {
                return Err(Error::Validation("tolerances must be positive".into()));
            }
            let mut dp = Dopri5::new(y.len());
            let t_end = *times.last().unwrap();
            f(t, &y, &mut dp.k[0]);
            stats.evaluations += 1;
            let mut h = initial_step(&mut f, t, &y, &dp.k[0], atol, rtol, t_end - t);
            stats.evaluations += 1;
            for &target in &times[1..] {
                while t < target {
                    let remaining = target - t;
                    let mut last = false;
                    if h >= remaining || remaining - h < 1e-12 * target.abs().max(1.0) {
                        h = remaining;
                        last = true;
                    }
                    let err = dp.attempt(&mut f, t, h, &y, atol, rtol);
                    stats.evaluations += 6;
                    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if err <= 1.0 {
                        t = if last { target } else { t + h };
                        std::mem::swap(&mut y, &mut dp.y_new);
                        dp.k.swap(0, 6);
                        stats.accepted += 1;
                        check(t, &y)?;
                        if stats.accepted > opts.max_steps {
                            return Err(Error::Integration(format!("exceeded {} steps at t = {t}", opts.max_steps)));
                        }
                        if !last {
                            h *= factor;
                        }
                    } else {
                        stats.rejected += 1;
                        h *= factor.min(1.0);
                        if h < 1e-14 * t.abs().max(1.0) {
                            return Err(Error::Integration(format!("step size underflow (h = {h:.3e}) at t = {t}")));
                        }
                    }
                    if !err.is_finite() {
                        return Err(Error::Integration(format!("non-finite state at t = {t}")));
                    }
                }
                out.push(y.clone());
            }
        }
    }
    Ok((out, stats))
}

fn wnorm(v: &Vector, y: &Vector, y2: &Vector, atol: f64, rtol: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let s: f64 = v
        .iter()
        .zip(y.iter().zip(y2.iter()))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (s / v.len() as f64).sqrt()
}

fn initial_step<F>(f: &mut F, t: f64, y: &Vector, f0: &Vector, atol: f64, rtol: f64, span: f64) -> f64
where
    F: FnMut(f64, &Vector, &mut Vector),
{
    let span = span.abs();
    if span == 0.0 {
        return 1.0;
    }
    let d0 = wnorm(y, y, y, atol, rtol);
    let d1 = wnorm(f0, y, y, atol, rtol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1 = y + f0 * C64::new(h0, 0.0);
    let mut f1 = Vector::zeros(y.len());
    f(t + h0, &y1, &mut f1);
    let d2 = wnorm(&(&f1 - f0), y, y, atol, rtol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

struct Rk4 {
    k: [Vector; 4],
    tmp: Vector,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Rk4 { k: std::array::from_fn(|_| Vector::zeros(n)), tmp: Vector::zeros(n) }
    }

    fn step<F: FnMut(f64, &Vector, &mut Vector)>(&mut self, f: &mut F, t: f64, h: f64, y: &mut Vector) {
        let hc = C64::new(h, 0.0);
        let half = C64::new(0.5 * h, 0.0);
        f(t, y, &mut self.k[0]);
        self.tmp.copy_from(y);
        self.tmp.axpy(half, &self.k[0], C64::new(1.0, 0.0));
        f(t + 0.5 * h, &self.tmp, &mut self.k[1]);
        self.tmp.copy_from(y);
        self.tmp.axpy(half, &self.k[1], C64::new(1.0, 0.0));
        f(t + 0.5 * h, &self.tmp, &mut self.k[2]);
        self.tmp.copy_from(y);
        self.tmp.axpy(hc, &self.k[2], C64::new(1.0, 0.0));
        f(t + h, &self.tmp, &mut self.k[3]);
        let sixth = C64::new(h / 6.0, 0.0);
        let third = C64::new(h / 3.0, 0.0);
        let one = C64::new(1.0, 0.0);
        y.axpy(sixth, &self.k[0], one);
        y.axpy(third, &self.k[1], one);
        y.axpy(third, &self.k[2], one);
        y.axpy(sixth, &self.k[3], one);
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Dopri5 {
    k: [Vector; 7],
    tmp: Vector,
    y_new: Vector,
}

impl Dopri5 {
    fn new(n: usize) -> Self {
        Dopri5 { k: std::array::from_fn(|_| Vector::zeros(n)), tmp: Vector::zeros(n), y_new: Vector::zeros(n) }
    }

    /// One trial step; `k[0]` holds `f(t, y)` on entry. Returns the scaled
    /// error norm and leaves the candidate in `y_new`, its derivative in `k[6]`.
    fn attempt<F: FnMut(f64, &Vector, &mut Vector)>(&mut self, f: &mut F, t: f64, h: f64, y: &Vector, atol: f64, rtol: f64) -> f64 {
        let one = C64::new(1.0, 0.0);
        for s in 1..7 {
            self.tmp.copy_from(y);
            for (j, &a) in A[s].iter().enumerate().take(s) {
                if a != 0.0 {
                    self.tmp.axpy(C64::new(h * a, 0.0), &self.k[j], one);
                }
            }
            f(t + C[s] * h, &self.tmp, &mut self.k[s]);
        }
        // stage 7 input is the fifth-order solution
        self.y_new.copy_from(&self.tmp);
        self.tmp.fill(C64::new(0.0, 0.0));
        for (j, &e) in E.iter().enumerate() {
            if e != 0.0 {
                self.tmp.axpy(C64::new(h * e, 0.0), &self.k[j], one);
            }
        }
        wnorm(&self.tmp, y, &self.y_new, atol, rtol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(rate: f64) -> impl FnMut(f64, &Vector, &mut Vector) {
        move |_, y, dy| {
            dy.copy_from(y);
            *dy *= C64::new(-rate, 0.0);
        }
    }

    #[test]
    fn dopri_hits_samples_and_matches_exponential() {
        let times: Vec<f64> = (0..=10).map(|k| 0.5 * k as f64).collect();
        let y0 = Vector::from_element(1, C64::new(1.0, 0.0));
        let (ys, st) = integrate(decay(1.0), y0, &times, &Options::default(), |_, _| Ok(())).unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0].re - (-t).exp()).abs() < 1e-8);
        }
        assert!(st.accepted > 0);
    }

    #[test]
    fn oscillator_phase() {
        let f = |_: f64, y: &Vector, dy: &mut Vector| {
            dy[0] = C64::new(0.0, -2.0) * y[0];
        };
        let y0 = Vector::from_element(1, C64::new(1.0, 0.0));
        let (ys, _) = integrate(f, y0.clone(), &[0.0, 3.0], &Options::default(), |_, _| Ok(())).unwrap();
        assert!((ys[1][0] - C64::new(0.0, -6.0).exp()).norm() < 1e-7);
        let (ys, _) = integrate(f, y0, &[0.0, 3.0], &Options::rk4(1e-3), |_, _| Ok(())).unwrap();
        assert!((ys[1][0] - C64::new(0.0, -6.0).exp()).norm() < 1e-9);
    }

    #[test]
    fn zero_rhs_and_repeated_times() {
        let y0 = Vector::from_element(3, C64::new(0.2, 0.1));
        let (ys, _) = integrate(|_, _, dy: &mut Vector| dy.fill(C64::new(0.0, 0.0)), y0.clone(), &[0.0, 0.0, 1.0, 2.0], &Options::default(), |_, _| Ok(())).unwrap();
        assert_eq!(ys.len(), 4);
        assert!(ys.iter().all(|y| y == &y0));
    }

    #[test]
    fn check_aborts() {
        let y0 = Vector::from_element(1, C64::new(1.0, 0.0));
        let r = integrate(decay(1.0), y0, &[0.0, 5.0], &Options::default(), |t, _| {
            if t > 1.0 {
                Err(Error::Integration("stop".into()))
            } else {
                Ok(())
            }
        });
        assert!(r.is_err());
    }

    #[test]
    fn bad_times_rejected() {
        let y0 = Vector::from_element(1, C64::new(1.0, 0.0));
        assert!(integrate(decay(1.0), y0, &[1.0, 0.0], &Options::default(), |_, _| Ok(())).is_err());
    }
}
