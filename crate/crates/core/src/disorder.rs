//! The quenched Gaussian external field.
//!
//! A [`DisorderField`] attaches one standard normal value `h_v` to every vertex
//! of a graph, together with the field strength `ε ≥ 0`; the physical field at
//! `v` is `ε h_v`. Values are drawn from the counter-based generator keyed by
//! `(seed, vertex coordinate)`, which makes them
//!
//! * bit-reproducible: the same seed always yields the same field, and
//! * extension-stable: enlarging the graph (e.g. `Λ_N → Λ_2N`) re-indexes
//!   vertices but leaves the value at every existing coordinate untouched.
//!
//! The module also owns the field-strength schedules `ε(N) = θ N^{−α}` and the
//! classification of the decay exponents by temperature regime.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::LatticeGraph;
use crate::rng::{Substream, GENERATOR_ID};
use crate::thermo::critical_temperature;

/// Errors from field construction and schedules.
#[derive(Debug, Error)]
pub enum DisorderError {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Relative tolerance used to classify a temperature as critical.
pub const CRITICAL_CLASSIFICATION_RTOL: f64 = 1e-12;

/// A quenched Gaussian field on the vertices of one graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderField {
    /// Standard normal values `h_v`, aligned with the graph's vertex order.
    values: Vec<f64>,
    /// Field strength `ε ≥ 0`; the physical field is `ε h_v`.
    epsilon: f64,
    /// Seed the values were drawn from.
    seed: u64,
    /// Identifier of the generator pipeline that produced the values.
    generator: String,
}

impl DisorderField {
    /// Samples the field on `graph` from `seed` at strength `epsilon`.
    ///
    /// Each vertex reads counter position 0 of its own coordinate-keyed
    /// stream, so the mapping `(seed, coordinate) → h` is independent of the
    /// graph the vertex happens to be part of.
    pub fn sample(graph: &LatticeGraph, seed: u64, epsilon: f64) -> Result<Self, DisorderError> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(DisorderError::InvalidParameter(format!(
                "field strength must be finite and nonnegative, got {epsilon}"
            )));
        }
        let values = graph
            .vertices()
            .iter()
            .map(|&(x, y)| Substream::for_vertex(seed, x, y).next_normal())
            .collect();
        Ok(DisorderField { values, epsilon, seed, generator: GENERATOR_ID.to_string() })
    }

    /// A field with explicitly given per-vertex values (pinned worked
    /// examples and externally supplied realizations).
    pub fn from_values(
        graph: &LatticeGraph,
        values: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, DisorderError> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(DisorderError::InvalidParameter(format!(
                "field strength must be finite and nonnegative, got {epsilon}"
            )));
        }
        if values.len() != graph.vertex_count() {
            return Err(DisorderError::InvalidParameter(format!(
                "field has {} values, graph has {} vertices",
                values.len(),
                graph.vertex_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DisorderError::InvalidParameter(
                "field values must all be finite".into(),
            ));
        }
        Ok(DisorderField { values, epsilon, seed: 0, generator: "explicit".to_string() })
    }

    /// A field that is identically zero (used for `ε = 0` reference measures
    /// where no draws are needed at all).
    pub fn zero(graph: &LatticeGraph) -> Self {
        DisorderField {
            values: vec![0.0; graph.vertex_count()],
            epsilon: 0.0,
            seed: 0,
            generator: GENERATOR_ID.to_string(),
        }
    }

    /// Same values, different strength. Quenched comparisons (`ε` vs `2ε`, or
    /// `ε` vs `0`) must share one realization of `h`; this is how they do it.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self, DisorderError> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(DisorderError::InvalidParameter(format!(
                "field strength must be finite and nonnegative, got {epsilon}"
            )));
        }
        Ok(DisorderField { epsilon, ..self.clone() })
    }

    /// Raw standard normal value `h_v` at vertex index `v`.
    pub fn value(&self, v: u32) -> f64 {
        self.values[v as usize]
    }

    /// All raw values in vertex order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Field strength `ε`.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Seed the field was drawn from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator pipeline identifier.
    pub fn generator(&self) -> &str {
        self.generator.as_str()
    }

    /// Sum of raw values over a set of vertex indices: `h_C = Σ_{v∈C} h_v`.
    /// Empty sets sum to 0, and sums are additive over disjoint unions.
    pub fn field_sum(&self, members: &[u32]) -> f64 {
        members.iter().map(|&v| self.values[v as usize]).sum()
    }

    /// Short stable description of this field's provenance
    /// (generator/seed/strength), used to tag derived artifacts.
    pub fn fingerprint(&self) -> String {
        format!("{}/seed{}/eps{:016x}", self.generator, self.seed, self.epsilon.to_bits())
    }

    /// CSV dump with header `vertex_index,x,y,h_value` (raw values, one row
    /// per vertex in index order).
    pub fn to_csv(&self, graph: &LatticeGraph) -> String {
        let mut out = String::from("vertex_index,x,y,h_value\n");
        for (i, &(x, y)) in graph.vertices().iter().enumerate() {
            out.push_str(&format!("{i},{x},{y},{}\n", self.values[i]));
        }
        out
    }

    /// Parses a field from the CSV produced by [`Self::to_csv`], checking
    /// every row's coordinates against `graph`.
    pub fn from_csv(
        graph: &LatticeGraph,
        csv: &str,
        epsilon: f64,
    ) -> Result<Self, DisorderError> {
        let mut lines = csv.lines();
        match lines.next() {
            Some("vertex_index,x,y,h_value") => {}
            other => {
                return Err(DisorderError::InvalidParameter(format!(
                    "expected header 'vertex_index,x,y,h_value', got {other:?}"
                )))
            }
        }
        let mut values = vec![f64::NAN; graph.vertex_count()];
        let mut seen = vec![false; graph.vertex_count()];
        for (row, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(DisorderError::InvalidParameter(format!(
                    "row {row}: expected 4 comma-separated values, got {}",
                    parts.len()
                )));
            }
            let parse_err = |what: &str| {
                DisorderError::InvalidParameter(format!("row {row}: cannot parse {what}"))
            };
            let index: usize = parts[0].parse().map_err(|_| parse_err("vertex_index"))?;
            let x: i64 = parts[1].parse().map_err(|_| parse_err("x"))?;
            let y: i64 = parts[2].parse().map_err(|_| parse_err("y"))?;
            let h: f64 = parts[3].parse().map_err(|_| parse_err("h_value"))?;
            if index >= graph.vertex_count() || graph.vertices()[index] != (x, y) {
                return Err(DisorderError::InvalidParameter(format!(
                    "row {row}: vertex {index} at ({x}, {y}) does not match the graph"
                )));
            }
            if seen[index] {
                return Err(DisorderError::InvalidParameter(format!(
                    "row {row}: duplicate vertex {index}"
                )));
            }
            seen[index] = true;
            values[index] = h;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(DisorderError::InvalidParameter(format!(
                "vertex {missing} has no field value"
            )));
        }
        Self::from_values(graph, values, epsilon)
    }
}

/// Field-strength schedule `ε(N) = θ N^{−α}`.
///
/// Requires `N ≥ 1`, `θ > 0`, and `α ≥ 0`.
pub fn epsilon_schedule(n: u32, theta: f64, alpha: f64) -> Result<f64, DisorderError> {
    if n == 0 {
        return Err(DisorderError::InvalidParameter("schedule requires N ≥ 1".into()));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(DisorderError::InvalidParameter(format!(
            "schedule amplitude must be positive and finite, got {theta}"
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(DisorderError::InvalidParameter(format!(
            "schedule exponent must be nonnegative and finite, got {alpha}"
        )));
    }
    Ok(theta * (n as f64).powf(-alpha))
}

/// Temperature regime relative to the critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemperatureRegime {
    /// `T < T_c` (long-range order at zero field).
    Low,
    /// `T = T_c` (up to relative tolerance [`CRITICAL_CLASSIFICATION_RTOL`]).
    Critical,
    /// `T > T_c`.
    High,
}

/// Classifies a positive temperature against `T_c` with relative tolerance
/// [`CRITICAL_CLASSIFICATION_RTOL`].
pub fn classify_temperature(t: f64) -> Result<TemperatureRegime, DisorderError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(DisorderError::InvalidParameter(format!(
            "temperature must be positive and finite, got {t}"
        )));
    }
    let tc = critical_temperature();
    if (t - tc).abs() <= CRITICAL_CLASSIFICATION_RTOL * tc {
        Ok(TemperatureRegime::Critical)
    } else if t < tc {
        Ok(TemperatureRegime::Low)
    } else {
        Ok(TemperatureRegime::High)
    }
}

/// Decay exponent of the *upper* decoupling threshold: along `ε = θ N^{−α}`
/// with `α > alpha_exponent(T)` the field and zero-field measures merge as
/// `N → ∞`. Exactly `1`, `15/16`, `1/2` in the low / critical / high regimes
/// (all exactly representable in binary).
pub fn alpha_exponent(t: f64) -> Result<f64, DisorderError> {
    Ok(match classify_temperature(t)? {
        TemperatureRegime::Low => 1.0,
        TemperatureRegime::Critical => 15.0 / 16.0,
        TemperatureRegime::High => 0.5,
    })
}

/// Decay exponent of the *lower* threshold: along `ε = θ N^{−β}` with
/// `β < beta_exponent(T)` the measures separate. Exactly `1`, `7/8`, `1/2`.
pub fn beta_exponent(t: f64) -> Result<f64, DisorderError> {
    Ok(match classify_temperature(t)? {
        TemperatureRegime::Low => 1.0,
        TemperatureRegime::Critical => 7.0 / 8.0,
        TemperatureRegime::High => 0.5,
    })
}
