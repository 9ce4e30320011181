//! Numerical tolerances shared by every module.

/// Tolerance constants used for invariant checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Deviation of `Σ|amplitude|²` from one.
    pub normalization: f64,
    /// Max-abs entry deviation of `U†U` from the identity.
    pub unitarity: f64,
    /// Max-abs deviation of `A - A†` for observables and states.
    pub hermiticity: f64,
    /// Smallest admissible eigenvalue of a density operator.
    pub min_eigenvalue: f64,
    /// Slack allowed when a fidelity is checked against `[0, 1]`.
    pub fidelity_range: f64,
    /// Relative singular-value cutoff for the Moore-Penrose pseudo-inverse.
    pub pinv_cutoff: f64,
}

pub const TOL: Tolerances = Tolerances {
    normalization: 1e-12,
    unitarity: 1e-10,
    hermiticity: 1e-10,
    min_eigenvalue: -1e-10,
    fidelity_range: 1e-9,
    pinv_cutoff: 1e-12,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}
