//! Numerical tolerances shared across the crate.
//!
//! Relative tolerances scale with the largest eigenvalue (or the reference
//! magnitude noted per constant). The equality band `EQ` is an order of
//! magnitude wider than the violation slack `VIOLATION` so verdicts do not
//! flap between the two under roundoff.

/// Hermiticity defect gate, relative to the largest entry magnitude.
pub const HERM: f64 = 1e-10;

/// Positive semidefiniteness: eigenvalues above `-PSD_REL * lambda_max` pass.
pub const PSD_REL: f64 = 1e-10;

/// Support cutoff: eigenvalues above `SUPP_REL * lambda_max` count toward the support.
pub const SUPP_REL: f64 = 1e-12;

/// Orthonormality and POVM completeness defect gate (absolute, entries are O(1)).
pub const ORTHO: f64 = 1e-10;

/// Trace-one gate for density operators before exact renormalisation.
pub const TRACE_ONE: f64 = 1e-8;

/// Default equality band for relation verdicts, in bits.
pub const EQ: f64 = 1e-8;

/// Violation slack for inequality checks, in bits.
pub const VIOLATION: f64 = 1e-9;

/// Purity gate: a state is pure when its largest eigenvalue exceeds `1 - PURE`.
pub const PURE: f64 = 1e-8;

/// Mutual unbiasedness defect gate on squared overlaps.
pub const MUB: f64 = 1e-8;

/// Relative-entropy support leakage above which the value is infinite.
pub const SUPPORT_LEAK: f64 = 1e-10;

/// `a <= b` up to a tolerance scaled by the magnitude of `b`.
pub fn approx_le(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * (1.0 + b.abs())
}

/// `a == b` up to a tolerance scaled by the magnitude of `b`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}
