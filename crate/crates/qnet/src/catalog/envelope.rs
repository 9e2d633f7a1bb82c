//! Square-normalized wavepackets ξ(t) and the source-cavity coupling
//! λ(t) = ξ(t)/√W(t), with W(t) = ∫_t^∞ |ξ(s)|² ds.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::Coefficient;
use crate::tol::W_CLAMP;

type C64 = Complex64;

#[derive(Clone)]
pub enum Envelope {
    /// |ξ|² is the normal density with the given center and width (σ).
    Gaussian { center: f64, width: f64 },
    /// Constant on `[start, start + duration]`.
    Square { start: f64, duration: f64 },
    /// `√κ e^{−κ(t−t0)/2}` for `t ≥ t0`.
    ExpDecay { start: f64, rate: f64 },
    /// `√κ e^{κ(t−t1)/2}` for `t ≤ t1`.
    ExpRise { end: f64, rate: f64 },
    /// User profile supported on `[lo, hi]`; W by adaptive quadrature.
    Custom { name: String, f: Arc<dyn Fn(f64) -> C64 + Send + Sync>, lo: f64, hi: f64 },
}

impl fmt::Debug for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

impl Envelope {
    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Validation(format!("gaussian width must satisfy width > 0, got {width}")));
        }
        Ok(Envelope::Gaussian { center, width })
    }

    pub fn square(start: f64, duration: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::Validation(format!("square duration must satisfy duration > 0, got {duration}")));
        }
        Ok(Envelope::Square { start, duration })
    }

    pub fn exp_decay(start: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::Validation(format!("exp_decay rate must satisfy rate > 0, got {rate}")));
        }
        Ok(Envelope::ExpDecay { start, rate })
    }

    pub fn exp_rise(end: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::Validation(format!("exp_rise rate must satisfy rate > 0, got {rate}")));
        }
        Ok(Envelope::ExpRise { end, rate })
    }

    /// Custom profile; rejected unless square-normalized to 1e-6.
    pub fn custom(
        name: &str,
        f: impl Fn(f64) -> C64 + Send + Sync + 'static,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        let env = Envelope::Custom { name: name.to_string(), f: Arc::new(f), lo, hi };
        let norm = env.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!("envelope '{name}' has ∫|ξ|² = {norm:.8}, expected 1")));
        }
        Ok(env)
    }

    pub fn describe(&self) -> String {
        match self {
            Envelope::Gaussian { center, width } => format!("gaussian(center={center:?}, width={width:?})"),
            Envelope::Square { start, duration } => format!("square(start={start:?}, duration={duration:?})"),
            Envelope::ExpDecay { start, rate } => format!("exp_decay(start={start:?}, rate={rate:?})"),
            Envelope::ExpRise { end, rate } => format!("exp_rise(end={end:?}, rate={rate:?})"),
            Envelope::Custom { name, .. } => name.clone(),
        }
    }

    pub fn xi(&self, t: f64) -> C64 {
        let re = |x: f64| C64::new(x, 0.0);
        match *self {
            Envelope::Gaussian { center, width } => {
                let z = (t - center) / width;
                re((2.0 * PI * width * width).powf(-0.25) * (-0.25 * z * z).exp())
            }
            Envelope::Square { start, duration } => {
                if t >= start && t <= start + duration {
                    re(duration.powf(-0.5))
                } else {
                    re(0.0)
                }
            }
            Envelope::ExpDecay { start, rate } => {
                if t >= start {
                    re(rate.sqrt() * (-0.5 * rate * (t - start)).exp())
                } else {
                    re(0.0)
                }
            }
            Envelope::ExpRise { end, rate } => {
                if t <= end {
                    re(rate.sqrt() * (0.5 * rate * (t - end)).exp())
                } else {
                    re(0.0)
                }
            }
            Envelope::Custom { ref f, lo, hi, .. } => {
                if t >= lo && t <= hi {
                    f(t)
                } else {
                    re(0.0)
                }
            }
        }
    }

    /// Remaining norm `W(t) = ∫_t^∞ |ξ|²`.
    pub fn w(&self, t: f64) -> f64 {
        match *self {
            Envelope::Gaussian { center, width } => 0.5 * libm::erfc((t - center) / (std::f64::consts::SQRT_2 * width)),
            Envelope::Square { start, duration } => ((start + duration - t) / duration).clamp(0.0, 1.0),
            Envelope::ExpDecay { start, rate } => {
                if t <= start {
                    1.0
                } else {
                    (-rate * (t - start)).exp()
                }
            }
            Envelope::ExpRise { end, rate } => {
                if t >= end {
                    0.0
                } else {
                    1.0 - (rate * (t - end)).exp()
                }
            }
            Envelope::Custom { lo, hi, .. } => {
                if t >= hi {
                    0.0
                } else {
                    let a = t.max(lo);
                    adaptive_simpson(&|s| self.xi(s).norm_sqr(), a, hi, 1e-12, 40)
                }
            }
        }
    }

    /// `∫|ξ|²` over the whole line (1 for the analytic profiles).
    pub fn norm(&self) -> f64 {
        match *self {
            Envelope::Custom { lo, hi, .. } => adaptive_simpson(&|s| self.xi(s).norm_sqr(), lo, hi, 1e-12, 40),
            _ => self.w(f64::NEG_INFINITY),
        }
    }

    /// `λ(t) = ξ(t)/√W(t)`, set to zero once `W < 1e-12`.
    pub fn lambda(&self, t: f64) -> C64 {
        let w = self.w(t);
        if w < W_CLAMP {
            return C64::new(0.0, 0.0);
        }
        self.xi(t) / w.sqrt()
    }

    pub fn xi_coefficient(&self, scale: C64) -> Coefficient {
        let env = self.clone();
        Coefficient::new(format!("{scale}*xi[{}]", self.describe()), move |t| scale * env.xi(t))
    }

    pub fn lambda_coefficient(&self) -> Coefficient {
        let env = self.clone();
        Coefficient::new(format!("lambda[{}]", self.describe()), move |t| env.lambda(t))
    }

    /// A time after which the remaining norm is negligible.
    pub fn end_time(&self) -> f64 {
        match *self {
            Envelope::Gaussian { center, width } => center + 8.0 * width,
            Envelope::Square { start, duration } => start + duration,
            Envelope::ExpDecay { start, rate } => start + 30.0 / rate,
            Envelope::ExpRise { end, .. } => end,
            Envelope::Custom { hi, .. } => hi,
        }
    }
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    // Split first so narrow features are not missed by the initial estimate.
    let n = 16;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            rec(f, lo, hi, fa, fm, fb, whole, tol / n as f64, depth)
        })
        .sum()
}
