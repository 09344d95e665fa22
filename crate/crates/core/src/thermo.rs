//! Thermodynamic constants and parameter conversions for the square-lattice
//! Ising / FK-Ising (q = 2 random-cluster) correspondence.

use thiserror::Error;

/// Errors from parameter conversion.
#[derive(Debug, Error)]
pub enum ThermoError {
    /// A parameter is outside its admissible open range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Self-dual point of the q = 2 random-cluster model on `Z^2`:
/// `p_c = √2 / (1 + √2) = 2 − √2`.
pub fn critical_edge_probability() -> f64 {
    2.0_f64.sqrt() / (1.0 + 2.0_f64.sqrt())
}

/// Critical temperature of the square-lattice Ising model:
/// `T_c = 2 / ln(1 + √2) ≈ 2.2692`.
pub fn critical_temperature() -> f64 {
    2.0 / (1.0 + 2.0_f64.sqrt()).ln()
}

/// Edge-opening probability coupled to temperature `T`: `p = 1 − e^{−2/T}`.
///
/// Requires `T > 0` (finite); `T = T_c` maps to [`critical_edge_probability`]
/// up to rounding.
pub fn edge_probability_from_temperature(t: f64) -> Result<f64, ThermoError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(ThermoError::InvalidParameter(format!(
            "temperature must be positive and finite, got {t}"
        )));
    }
    Ok(1.0 - (-2.0 / t).exp())
}

/// Temperature coupled to edge-opening probability `p`: `T = −2 / ln(1 − p)`.
///
/// Requires `0 < p < 1`; the degenerate endpoints correspond to `T → 0` and
/// `T → ∞` and are rejected everywhere in this crate.
pub fn temperature_from_edge_probability(p: f64) -> Result<f64, ThermoError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ThermoError::InvalidParameter(format!(
            "edge probability must lie strictly between 0 and 1, got {p}"
        )));
    }
    Ok(-2.0 / (1.0 - p).ln())
}
