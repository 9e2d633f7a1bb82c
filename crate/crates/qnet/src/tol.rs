//! Numerical thresholds shared across modules.

/// Max-norm tolerance for operator equality and Hermiticity checks.
pub const TOL_OP: f64 = 1e-10;
/// Trace drift allowed for density states.
pub const TOL_TR: f64 = 1e-8;
/// Residual threshold for linearity detection.
pub const TOL_LIN: f64 = 1e-9;
/// Smallest singular value below which a loop operator is singular.
pub const SINGULAR: f64 = 1e-8;
/// Default top-Fock-level population bound.
pub const TRUNC_GUARD: f64 = 1e-6;
/// Remaining wavepacket norm below which source couplings are clamped.
pub const W_CLAMP: f64 = 1e-12;
/// Condition number above which the fast-sector block counts as singular.
pub const COND_MAX: f64 = 1e12;
/// Entries smaller than this are dropped from sparse results.
pub const PRUNE: f64 = 1e-14;
