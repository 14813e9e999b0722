//! Numerical tolerances shared by every module.

/// Default number of lags for which matrix powers are cached.
pub const DEFAULT_LAG_CAP: usize = 64;

/// Default belief lag cap used by the exact dynamic program.
pub const DEFAULT_DP_LAG_CAP: usize = 16;

/// All comparison tolerances in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    /// Identities that hold exactly in real arithmetic (row sums, orderings,
    /// stationarity, matrix-power composition).
    pub algebraic: f64,
    /// Distance below which `P^k` is treated as converged to the steady state.
    pub convergence: f64,
    /// Agreement of a finite-lag curve with its limit.
    pub limit: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances { algebraic: 1e-12, convergence: 1e-9, limit: 1e-6 };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
