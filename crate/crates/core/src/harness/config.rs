//! Experiment configuration: a single human-editable TOML document with
//! `key = value` sections, stable under serialize∘parse round trips.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

use crate::disorder::alpha_exponent;
use crate::lattice::BoundaryCondition;
use crate::mcmc::{default_burn_in, ChainPlan, MAX_TOTAL_SWEEPS};
use crate::thermo::{critical_temperature, edge_probability_from_temperature};

/// Configuration errors. `Invalid` is a malformed or inconsistent document;
/// `Guard` is a well-formed request that exceeds a resource limit.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// Malformed or inconsistent configuration.
    #[error("config error: {0}")]
    Invalid(String),
    /// Resource-guard violation, named after the limit.
    #[error("guard violated: {0}")]
    Guard(String),
}

/// Model family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Random-field spin model sampled by the heat-bath chain.
    Rfim,
    /// Random-field random-cluster model sampled by the coupled chain.
    Rffk,
}

/// `[model]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    /// Which model family to sample.
    pub kind: ModelKind,
    /// Boundary condition name: `free`/`wired` for the edge model,
    /// `plus`/`minus`/`zero` for the spin model.
    pub boundary: String,
    /// Explicit temperature. Exactly one of `temperature`/`regime` is set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    /// Named temperature regime: `low`, `crit`, or `high`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
    /// Edge probability for the edge model; defaults to `1 − e^{−2/T}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

/// One `[[schedule]]` entry: `ε(N) = θ·N^{−α}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSection {
    /// Prefactor θ (default 1).
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Exponent: the string `"auto"` resolves to α(T); otherwise a positive
    /// real serialized as a number.
    pub alpha: AlphaSpec,
    /// Optional legend label; defaults to `alpha=<value>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn default_theta() -> f64 {
    1.0
}

/// Exponent specification: `"auto"` or an explicit positive number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    /// Resolve from the temperature regime.
    Named(String),
    /// Explicit exponent.
    Value(f64),
}

/// `[grid]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    /// Box radii to sweep (may be empty: the run is then a no-op).
    pub n_list: Vec<u32>,
}

/// `[chain]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSection {
    /// Burn-in sweeps; omitted → `100·N` off criticality, `20·N²` at it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    /// Sweeps between recorded samples.
    pub thinning: u64,
    /// Recorded samples per replica.
    pub samples: u64,
    /// Independent replicas per chain.
    pub replicas: u32,
    /// Seed base for chain substreams.
    pub seed_base: u64,
}

/// `[disorder]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSection {
    /// Number of disorder seeds (`0..seeds`) when no explicit list is given.
    pub seeds: u32,
    /// Explicit seed list; overrides `seeds` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_list: Option<Vec<u64>>,
}

/// `[output]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    /// Store directory for persistent runs.
    pub dir: PathBuf,
    /// Whether to emit the SVG figure next to the CSV.
    #[serde(default = "default_true")]
    pub plot: bool,
}

fn default_true() -> bool {
    true
}

/// `[guards]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardSection {
    /// Total sweep budget over the whole experiment.
    #[serde(default = "default_sweep_guard")]
    pub max_total_sweeps: u64,
}

fn default_sweep_guard() -> u64 {
    MAX_TOTAL_SWEEPS
}

impl Default for GuardSection {
    fn default() -> Self {
        GuardSection { max_total_sweeps: default_sweep_guard() }
    }
}

/// The whole experiment document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `[model]`
    pub model: ModelSection,
    /// `[[schedule]]`
    pub schedule: Vec<ScheduleSection>,
    /// `[grid]`
    pub grid: GridSection,
    /// `[chain]`
    pub chain: ChainSection,
    /// `[disorder]`
    pub disorder: DisorderSection,
    /// `[output]`
    pub output: OutputSection,
    /// `[guards]`
    #[serde(default)]
    pub guards: GuardSection,
}

/// A validated, resolved experiment: every knob made concrete.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    /// Model family.
    pub kind: ModelKind,
    /// Edge-model wiring (kind = Rffk).
    pub fk_boundary: Option<BoundaryCondition>,
    /// Spin-model uniform boundary value (kind = Rfim): +1, −1, or 0.
    pub spin_boundary: Option<i8>,
    /// Temperature.
    pub temperature: f64,
    /// Edge probability (kind = Rffk).
    pub p: Option<f64>,
    /// `(theta, alpha, label)` per schedule.
    pub schedules: Vec<(f64, f64, String)>,
    /// Box radii.
    pub n_list: Vec<u32>,
    /// Chain plan per radius (burn-in resolved).
    pub plans: Vec<ChainPlan>,
    /// Disorder seeds.
    pub seeds: Vec<u64>,
    /// Output directory.
    pub out_dir: PathBuf,
    /// Emit the SVG figure.
    pub plot: bool,
}

/// Temperatures the named regimes resolve to. `crit` is the exact critical
/// temperature; `low` and `high` are representative points on either side.
pub const LOW_REGIME_TEMPERATURE: f64 = 1.5;
/// See [`LOW_REGIME_TEMPERATURE`].
pub const HIGH_REGIME_TEMPERATURE: f64 = 3.5;

/// Resolves a regime name to its temperature.
pub fn regime_temperature(name: &str) -> Result<f64, ConfigError> {
    match name {
        "low" => Ok(LOW_REGIME_TEMPERATURE),
        "crit" => Ok(critical_temperature()),
        "high" => Ok(HIGH_REGIME_TEMPERATURE),
        other => Err(ConfigError::Invalid(format!(
            "unknown regime '{other}' (expected low, crit, or high)"
        ))),
    }
}

impl ExperimentConfig {
    /// Parses a TOML document.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Serializes to TOML. `from_toml(to_toml(c)) == c` for valid configs.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("experiment config serializes")
    }

    /// Validates every section and resolves regimes, exponents, burn-ins,
    /// and seeds. Rejects resource-guard violations before any work starts.
    pub fn resolve(&self) -> Result<ResolvedExperiment, ConfigError> {
        let temperature = match (self.model.temperature, self.model.regime.as_deref()) {
            (Some(t), None) => {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(ConfigError::Invalid(format!(
                        "temperature must be positive and finite, got {t}"
                    )));
                }
                t
            }
            (None, Some(name)) => regime_temperature(name)?,
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "set either temperature or regime, not both".into(),
                ))
            }
            (None, None) => {
                return Err(ConfigError::Invalid(
                    "one of temperature or regime is required".into(),
                ))
            }
        };

        let (fk_boundary, spin_boundary, p) = match self.model.kind {
            ModelKind::Rffk => {
                let bc = match self.model.boundary.as_str() {
                    "free" => BoundaryCondition::FkFree,
                    "wired" => BoundaryCondition::FkWired,
                    other => {
                        return Err(ConfigError::Invalid(format!(
                            "edge-model boundary must be free or wired, got '{other}'"
                        )))
                    }
                };
                let p = match self.model.p {
                    Some(p) if p > 0.0 && p < 1.0 => p,
                    Some(p) => {
                        return Err(ConfigError::Invalid(format!(
                            "edge probability must lie strictly inside (0, 1), got {p}"
                        )))
                    }
                    None => edge_probability_from_temperature(temperature)
                        .map_err(|e| ConfigError::Invalid(e.to_string()))?,
                };
                (Some(bc), None, Some(p))
            }
            ModelKind::Rfim => {
                if self.model.p.is_some() {
                    return Err(ConfigError::Invalid(
                        "edge probability applies only to the edge model".into(),
                    ));
                }
                let s = match self.model.boundary.as_str() {
                    "plus" => 1i8,
                    "minus" => -1,
                    "zero" => 0,
                    other => {
                        return Err(ConfigError::Invalid(format!(
                            "spin-model boundary must be plus, minus, or zero, got '{other}'"
                        )))
                    }
                };
                (None, Some(s), None)
            }
        };

        if self.schedule.is_empty() {
            return Err(ConfigError::Invalid("at least one schedule is required".into()));
        }
        let mut schedules = Vec::with_capacity(self.schedule.len());
        for s in &self.schedule {
            if !(s.theta > 0.0 && s.theta.is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "theta must be positive and finite, got {}",
                    s.theta
                )));
            }
            let alpha = match &s.alpha {
                AlphaSpec::Named(name) if name == "auto" => alpha_exponent(temperature)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?,
                AlphaSpec::Named(other) => {
                    return Err(ConfigError::Invalid(format!(
                        "alpha must be \"auto\" or a positive number, got '{other}'"
                    )))
                }
                AlphaSpec::Value(v) if *v > 0.0 && v.is_finite() => *v,
                AlphaSpec::Value(v) => {
                    return Err(ConfigError::Invalid(format!(
                        "alpha must be positive and finite, got {v}"
                    )))
                }
            };
            let label = s.label.clone().unwrap_or_else(|| format!("alpha={alpha}"));
            schedules.push((s.theta, alpha, label));
        }

        if self.grid.n_list.iter().any(|&n| n == 0) {
            return Err(ConfigError::Invalid("box radii must be at least 1".into()));
        }
        if self.chain.thinning == 0 {
            return Err(ConfigError::Invalid("thinning must be at least 1".into()));
        }
        if self.chain.replicas == 0 {
            return Err(ConfigError::Invalid("replicas must be at least 1".into()));
        }
        if self.guards.max_total_sweeps == 0 {
            return Err(ConfigError::Invalid("max_total_sweeps must be positive".into()));
        }

        let seeds: Vec<u64> = match &self.disorder.seed_list {
            Some(list) if list.is_empty() => {
                return Err(ConfigError::Invalid("seed_list must not be empty".into()))
            }
            Some(list) => list.clone(),
            None => {
                if self.disorder.seeds == 0 {
                    return Err(ConfigError::Invalid(
                        "need at least one disorder seed".into(),
                    ));
                }
                (0..self.disorder.seeds as u64).collect()
            }
        };

        let mut plans = Vec::with_capacity(self.grid.n_list.len());
        let mut total: u128 = 0;
        for &n in &self.grid.n_list {
            let burn_in = match self.chain.burn_in {
                Some(b) => b,
                None => default_burn_in(temperature, n)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?,
            };
            let plan = ChainPlan {
                burn_in,
                thinning: self.chain.thinning,
                samples: self.chain.samples,
                replicas: self.chain.replicas,
                seed_base: self.chain.seed_base,
            };
            // Two chains (zero-field and field-carrying) per seed per point.
            let per_chain = plan.total_sweeps() as u128;
            total += per_chain * 2 * seeds.len() as u128 * self.schedule.len() as u128;
            plans.push(plan);
        }
        if total > self.guards.max_total_sweeps as u128 {
            return Err(ConfigError::Guard(format!(
                "max_total_sweeps: experiment plans {total} sweeps, limit {}",
                self.guards.max_total_sweeps
            )));
        }

        Ok(ResolvedExperiment {
            kind: self.model.kind,
            fk_boundary,
            spin_boundary,
            temperature,
            p,
            schedules,
            n_list: self.grid.n_list.clone(),
            plans,
            seeds,
            out_dir: self.output.dir.clone(),
            plot: self.output.plot,
        })
    }
}
