//! Monte-Carlo estimators for the quantities the exact module can only reach
//! at desk scale: partition-function ratios between zero-field and
//! field-carrying measures, total-variation distances through the
//! Radon–Nikodym representation, concentration diagnostics of the cluster
//! field functional, boundary influence and its decay length, and tail
//! statistics of the maximal cluster.
//!
//! Error-bar discipline: chains run as independent replicas; standard errors
//! of nonlinear functionals are delete-one-replica jackknife estimates.
//! Disorder-level quantities average over explicit seed lists and report the
//! spread across seeds separately from the per-seed Monte-Carlo error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clusters::ClusterError;
use crate::disorder::{alpha_exponent, DisorderField};
use crate::exact::{ExactDistribution, ExactError};
use crate::lattice::{BoundaryCondition, GraphKind, LatticeGraph, SpinBoundary};
use crate::mcmc::{
    heat_bath_probability, ChainPlan, EsChain, McmcError, RfimChain, StartState, SweepChain,
};
use crate::stats::{
    effective_sample_size, jackknife_se, mean, mean_and_se, median, merge_log_sum_exp, LogSumExp,
};

/// Effective-sample-size fraction below which bridge overlap is flagged.
pub const LOW_OVERLAP_THRESHOLD: f64 = 0.05;

/// Errors from estimator construction and execution.
#[derive(Debug, Error)]
pub enum EstimatorError {
    /// A numeric parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A required input is missing or inconsistent.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Underlying sampler error.
    #[error(transparent)]
    Mcmc(#[from] McmcError),
    /// Underlying exact-enumeration error.
    #[error(transparent)]
    Exact(#[from] ExactError),
    /// Underlying cluster error.
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// Diagnostics attached to an estimate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Effective-sample-size fraction of the forward importance weights.
    pub ess_forward: Option<f64>,
    /// Effective-sample-size fraction of the reverse importance weights.
    pub ess_reverse: Option<f64>,
    /// Bridge overlap: the smaller of the two fractions.
    pub overlap: Option<f64>,
    /// Set when the overlap falls below [`LOW_OVERLAP_THRESHOLD`]; the
    /// estimate is still reported.
    pub low_overlap: bool,
    /// Fraction of terms clipped by the positive-part in the
    /// total-variation estimator (plug-in bias indicator).
    pub clamp_fraction: Option<f64>,
}

/// A scalar estimate with a replica-jackknife standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    /// Point estimate.
    pub value: f64,
    /// Standard error (0 when exact or when only one replica exists).
    pub std_error: f64,
    /// Number of replicas behind the error bar.
    pub replicas: u32,
    /// How the estimate was produced.
    pub method: String,
    /// Attached diagnostics.
    pub diagnostics: Diagnostics,
}

impl EstimateWithError {
    fn exact(value: f64, method: &str) -> Self {
        EstimateWithError {
            value,
            std_error: 0.0,
            replicas: 0,
            method: method.to_string(),
            diagnostics: Diagnostics::default(),
        }
    }
}

/// The model family an estimator samples from.
#[derive(Debug, Clone)]
pub enum EstimatorModel<'a> {
    /// Random-cluster model with cluster field factors; `G = F(h, ω)`.
    Fk { boundary: &'a BoundaryCondition, p: f64 },
    /// Random-field spin model; `G(σ) = ε Σ_v h_v σ_v / T`.
    Ising { boundary: &'a SpinBoundary },
}

/// Linear scale `N` of a graph, in the units the scaling exponents refer to:
/// the radius for centered boxes and annuli, half the shorter side for
/// rectangles, and half the square root of the vertex count otherwise.
pub fn linear_scale(graph: &LatticeGraph) -> f64 {
    match *graph.kind() {
        GraphKind::Box { n, .. } => n as f64,
        GraphKind::Annulus { n, .. } => n as f64,
        GraphKind::Rect { width, height, .. } => width.min(height) as f64 / 2.0,
        GraphKind::Masked => (graph.vertex_count() as f64).sqrt() / 2.0,
    }
}

/// Mixes a disorder seed into a chain seed base so that chains attached to
/// different disorder realizations never share substreams.
fn chain_seed(base: u64, disorder_seed: u64) -> u64 {
    base ^ disorder_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs `plan.replicas` chains and collects one observable series per
/// replica: after burn-in, `plan.samples` values spaced `plan.thinning`
/// sweeps apart.
fn drive<C, FM, FO>(plan: &ChainPlan, make: FM, observe: FO) -> Result<Vec<Vec<f64>>, EstimatorError>
where
    C: SweepChain,
    FM: Fn(u32) -> Result<C, McmcError> + Sync,
    FO: Fn(&C) -> Result<f64, EstimatorError> + Sync,
{
    plan.validate()?;
    let per_replica: Vec<Result<Vec<f64>, EstimatorError>> = (0..plan.replicas)
        .into_par_iter()
        .map(|r| {
            let mut chain = make(r)?;
            for _ in 0..plan.burn_in {
                chain.sweep()?;
            }
            let mut series = Vec::with_capacity(plan.samples as usize);
            for _ in 0..plan.samples {
                for _ in 0..plan.thinning {
                    chain.sweep()?;
                }
                series.push(observe(&chain)?);
            }
            Ok(series)
        })
        .collect();
    per_replica.into_iter().collect()
}

/// Collects per-replica series of the log density increment `G` from chains
/// running at field strength `run_epsilon`, evaluated at target strength
/// `field.epsilon()`.
fn g_samples(
    graph: &LatticeGraph,
    model: &EstimatorModel,
    field: &DisorderField,
    run_epsilon: f64,
    t: f64,
    plan: &ChainPlan,
    replica_offset: u32,
    start: StartState,
) -> Result<Vec<Vec<f64>>, EstimatorError> {
    let run_field = field
        .with_epsilon(run_epsilon)
        .map_err(|e| EstimatorError::InvalidParameter(e.to_string()))?;
    let eps_target = field.epsilon();
    match model {
        EstimatorModel::Fk { boundary, p } => drive(
            plan,
            |r| {
                EsChain::new(
                    graph,
                    boundary,
                    &run_field,
                    t,
                    *p,
                    plan.seed_base,
                    replica_offset + r,
                    start,
                )
            },
            |chain: &EsChain| Ok(chain.f_value_at(eps_target)?),
        ),
        EstimatorModel::Ising { boundary } => drive(
            plan,
            |r| {
                RfimChain::new(
                    graph,
                    boundary,
                    &run_field,
                    t,
                    plan.seed_base,
                    replica_offset + r,
                    start,
                )
            },
            |chain: &RfimChain| Ok(eps_target * chain.field_alignment() / t),
        ),
    }
}

/// Per-replica and pooled log-sum-exp of `scale · G` over sample series.
fn scaled_lse(series: &[Vec<f64>], scale: f64) -> (Vec<LogSumExp>, LogSumExp, u64) {
    let parts: Vec<LogSumExp> = series
        .iter()
        .map(|s| {
            let mut lse = LogSumExp::new();
            for &g in s {
                lse.add(scale * g);
            }
            lse
        })
        .collect();
    let pooled = merge_log_sum_exp(&parts);
    let n = pooled.count();
    (parts, pooled, n)
}

/// `log mean exp(scale·G)` from a pooled accumulator.
fn log_mean(pooled: &LogSumExp) -> f64 {
    pooled.value() - (pooled.count() as f64).ln()
}

/// Leave-one-replica-out values of `log mean exp(scale·G)`.
fn loo_log_means(parts: &[LogSumExp]) -> Vec<f64> {
    (0..parts.len())
        .map(|skip| {
            let kept: Vec<LogSumExp> = parts
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, l)| *l)
                .collect();
            log_mean(&merge_log_sum_exp(&kept))
        })
        .collect()
}

/// Effective-sample-size fraction of weights `exp(scale·G)`:
/// `(Σw)² / (n Σw²)` computed in log space.
fn ess_fraction(series: &[Vec<f64>], scale: f64) -> f64 {
    let (_, lse1, n) = scaled_lse(series, scale);
    let (_, lse2, _) = scaled_lse(series, 2.0 * scale);
    if n == 0 {
        return 0.0;
    }
    ((2.0 * lse1.value() - lse2.value()).exp() / n as f64).clamp(0.0, 1.0)
}

/// The three partition-ratio estimates for one disorder realization.
///
/// `forward` targets the reciprocal `1/Z(h)` and `reverse` targets `Z(h)`
/// itself, so their product tends to 1 — the reciprocity diagnostic.
/// `bridged` is the primary `Z(h)` estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionRatioEstimate {
    /// `mean_0[e^{G}]` from zero-field samples — estimates `1/Z(h)`.
    pub forward: EstimateWithError,
    /// `mean_h[e^{−G}]` from field-carrying samples — estimates `Z(h)`.
    pub reverse: EstimateWithError,
    /// `Ẑ = mean_h[e^{−G/2}] / mean_0[e^{G/2}]`, the bridge form of `Z(h)`.
    pub bridged: EstimateWithError,
}

/// Estimates the partition ratio `Z(h) = Z_0 / Z_h` by forward, reverse, and
/// bridge sampling. Zero field strength returns all three as exactly 1 with
/// zero variance.
pub fn estimate_partition_ratio(
    graph: &LatticeGraph,
    model: &EstimatorModel,
    field: &DisorderField,
    t: f64,
    plan: &ChainPlan,
    start: StartState,
) -> Result<PartitionRatioEstimate, EstimatorError> {
    if field.epsilon() == 0.0 {
        return Ok(PartitionRatioEstimate {
            forward: EstimateWithError::exact(1.0, "forward"),
            reverse: EstimateWithError::exact(1.0, "reverse"),
            bridged: EstimateWithError::exact(1.0, "bridged"),
        });
    }
    let g0 = g_samples(graph, model, field, 0.0, t, plan, 0, start)?;
    let gh = g_samples(graph, model, field, field.epsilon(), t, plan, plan.replicas, start)?;

    let ess_f = ess_fraction(&g0, 1.0);
    let ess_r = ess_fraction(&gh, -1.0);
    let overlap = ess_f.min(ess_r);
    let diag = Diagnostics {
        ess_forward: Some(ess_f),
        ess_reverse: Some(ess_r),
        overlap: Some(overlap),
        low_overlap: overlap < LOW_OVERLAP_THRESHOLD,
        clamp_fraction: None,
    };

    // Forward: mean e^{G} on zero-field samples — the reciprocal ratio.
    let (parts_f, pooled_f, _) = scaled_lse(&g0, 1.0);
    let forward_value = log_mean(&pooled_f).exp();
    let forward_loo: Vec<f64> = loo_log_means(&parts_f).iter().map(|&lm| lm.exp()).collect();
    let forward = EstimateWithError {
        value: forward_value,
        std_error: jackknife_se(&forward_loo),
        replicas: plan.replicas,
        method: "forward".into(),
        diagnostics: diag.clone(),
    };

    // Reverse: Ẑ = mean e^{−G} on field-carrying samples.
    let (parts_r, pooled_r, _) = scaled_lse(&gh, -1.0);
    let reverse_value = log_mean(&pooled_r).exp();
    let reverse_loo: Vec<f64> = loo_log_means(&parts_r).iter().map(|&lm| lm.exp()).collect();
    let reverse = EstimateWithError {
        value: reverse_value,
        std_error: jackknife_se(&reverse_loo),
        replicas: plan.replicas,
        method: "reverse".into(),
        diagnostics: diag.clone(),
    };

    // Bridge: Ẑ = mean_h[e^{−G/2}] / mean_0[e^{G/2}] — both halves well
    // behaved when the two ensembles overlap weakly.
    let (parts_bh, pooled_bh, _) = scaled_lse(&gh, -0.5);
    let (parts_b0, pooled_b0, _) = scaled_lse(&g0, 0.5);
    let bridged_value = (log_mean(&pooled_bh) - log_mean(&pooled_b0)).exp();
    let loo_bh = loo_log_means(&parts_bh);
    let loo_b0 = loo_log_means(&parts_b0);
    let bridged_loo: Vec<f64> =
        loo_bh.iter().zip(&loo_b0).map(|(&a, &b)| (a - b).exp()).collect();
    let bridged = EstimateWithError {
        value: bridged_value,
        std_error: jackknife_se(&bridged_loo),
        replicas: plan.replicas,
        method: "bridged".into(),
        diagnostics: diag,
    };

    Ok(PartitionRatioEstimate { forward, reverse, bridged })
}

/// Estimates the total-variation distance between the field-carrying and
/// zero-field measures through the Radon–Nikodym representation
/// `TV = E_0[(1 − Z e^{G})₊]`, using zero-field samples and a supplied
/// partition-ratio estimate.
pub fn estimate_tv_rn(
    graph: &LatticeGraph,
    model: &EstimatorModel,
    field: &DisorderField,
    t: f64,
    plan: &ChainPlan,
    z_hat: Option<f64>,
    start: StartState,
) -> Result<EstimateWithError, EstimatorError> {
    if field.epsilon() == 0.0 {
        return Ok(EstimateWithError::exact(0.0, "radon-nikodym"));
    }
    let z = z_hat.ok_or_else(|| {
        EstimatorError::Precondition(
            "total-variation estimation needs a partition-ratio estimate".into(),
        )
    })?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(EstimatorError::Precondition(format!(
            "partition-ratio estimate must be positive and finite, got {z}"
        )));
    }
    let g0 = g_samples(graph, model, field, 0.0, t, plan, 0, start)?;
    let terms: Vec<Vec<f64>> = g0
        .iter()
        .map(|s| s.iter().map(|&g| (1.0 - z * g.exp()).max(0.0)).collect())
        .collect();
    let all: Vec<f64> = terms.iter().flatten().copied().collect();
    let value = mean(&all);
    let clamp_fraction = all.iter().filter(|&&x| x == 0.0).count() as f64 / all.len() as f64;

    // Delete-one-replica jackknife on the mean.
    let total: f64 = all.iter().sum();
    let loo: Vec<f64> = terms
        .iter()
        .map(|s| {
            let sub: f64 = s.iter().sum();
            (total - sub) / (all.len() - s.len()) as f64
        })
        .collect();

    Ok(EstimateWithError {
        value,
        std_error: jackknife_se(&loo),
        replicas: plan.replicas,
        method: "radon-nikodym".into(),
        diagnostics: Diagnostics {
            clamp_fraction: Some(clamp_fraction),
            ..Diagnostics::default()
        },
    })
}

/// Concentration diagnostics of the cluster field functional around its
/// deterministic center `2ε²N²/T²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    /// Deterministic center `2 ε² N² / T²`.
    pub center: f64,
    /// Fluctuation scale `ε N^{α(T)}` of the upper/lower comparisons.
    pub bound: f64,
    /// Singleton sum `Σ_v ln cosh(ε h_v / T)` (every vertex its own cluster).
    pub singleton_sum: f64,
    /// `|singleton_sum − center|`.
    pub singleton_deviation: f64,
    /// Tolerance `ε √N` for the singleton deviation.
    pub singleton_bound: f64,
    /// Fraction of samples with `F − center > bound`.
    pub p2_exceedance: f64,
    /// Fraction of samples with `F − center < −bound`.
    pub p3_exceedance: f64,
    /// Largest observed margin `F − center` (upper-excursion extreme).
    pub max_margin: f64,
    /// Smallest observed margin `F − center` (lower-excursion extreme).
    pub min_margin: f64,
    /// Number of samples behind the exceedance fractions.
    pub samples: u64,
}

fn concentration_frame(
    graph: &LatticeGraph,
    field: &DisorderField,
    t: f64,
) -> Result<(f64, f64, f64, f64), EstimatorError> {
    let n = linear_scale(graph);
    let eps = field.epsilon();
    let alpha =
        alpha_exponent(t).map_err(|e| EstimatorError::InvalidParameter(e.to_string()))?;
    let center = 2.0 * eps * eps * n * n / (t * t);
    let bound = eps * n.powf(alpha);
    let singleton_sum: f64 = field
        .values()
        .iter()
        .map(|&h| crate::clusters::ln_cosh(eps * h / t))
        .sum();
    let singleton_bound = eps * n.sqrt();
    Ok((center, bound, singleton_sum, singleton_bound))
}

/// Monte-Carlo concentration report: samples the zero-field edge measure and
/// fractions the excursions of `F(h, ·)` beyond `center ± bound`.
pub fn p_statistics(
    graph: &LatticeGraph,
    boundary: &BoundaryCondition,
    field: &DisorderField,
    t: f64,
    p: f64,
    plan: &ChainPlan,
    start: StartState,
) -> Result<ConcentrationReport, EstimatorError> {
    let (center, bound, singleton_sum, singleton_bound) = concentration_frame(graph, field, t)?;
    let model = EstimatorModel::Fk { boundary, p };
    let g0 = g_samples(graph, &model, field, 0.0, t, plan, 0, start)?;
    let all: Vec<f64> = g0.into_iter().flatten().collect();
    let n = all.len() as u64;
    let p2 = all.iter().filter(|&&f| f - center > bound).count() as f64 / n.max(1) as f64;
    let p3 = all.iter().filter(|&&f| f - center < -bound).count() as f64 / n.max(1) as f64;
    let max_margin = all.iter().fold(f64::NEG_INFINITY, |a, &f| a.max(f - center));
    let min_margin = all.iter().fold(f64::INFINITY, |a, &f| a.min(f - center));
    Ok(ConcentrationReport {
        center,
        bound,
        singleton_sum,
        singleton_deviation: (singleton_sum - center).abs(),
        singleton_bound,
        p2_exceedance: p2,
        p3_exceedance: p3,
        max_margin: if all.is_empty() { 0.0 } else { max_margin },
        min_margin: if all.is_empty() { 0.0 } else { min_margin },
        samples: n,
    })
}

/// Exact concentration report on enumerable graphs: the excursion fractions
/// are probability-weighted sums over the full zero-field edge table.
pub fn p_statistics_exact(
    graph: &LatticeGraph,
    boundary: &BoundaryCondition,
    field: &DisorderField,
    t: f64,
    p: f64,
) -> Result<ConcentrationReport, EstimatorError> {
    let (center, bound, singleton_sum, singleton_bound) = concentration_frame(graph, field, t)?;
    let zero = field
        .with_epsilon(0.0)
        .map_err(|e| EstimatorError::InvalidParameter(e.to_string()))?;
    let table = ExactDistribution::enumerate_fk(graph, boundary, &zero, t, p)?;
    let mut p2 = 0.0;
    let mut p3 = 0.0;
    let mut max_margin = f64::NEG_INFINITY;
    let mut min_margin = f64::INFINITY;
    for (mask, &prob) in table.probabilities().iter().enumerate() {
        let omega: Vec<bool> = (0..graph.edge_count()).map(|e| mask >> e & 1 == 1).collect();
        let decomp = crate::clusters::decompose(graph, &omega, boundary)?;
        let f = crate::clusters::f_functional(&decomp, field, t)?;
        if f - center > bound {
            p2 += prob;
        }
        if f - center < -bound {
            p3 += prob;
        }
        max_margin = max_margin.max(f - center);
        min_margin = min_margin.min(f - center);
    }
    Ok(ConcentrationReport {
        center,
        bound,
        singleton_sum,
        singleton_deviation: (singleton_sum - center).abs(),
        singleton_bound,
        p2_exceedance: p2,
        p3_exceedance: p3,
        max_margin,
        min_margin,
        samples: table.probabilities().len() as u64,
    })
}

/// How boundary-influence expectations are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfluenceMethod {
    /// Exact enumeration when the lattice is small enough, sampling
    /// otherwise.
    Auto,
    /// Force exact enumeration (errors beyond the enumeration guard).
    Exact,
    /// Force heat-bath sampling.
    MonteCarlo,
}

/// Largest vertex count the automatic dispatch enumerates exactly.
pub const INFLUENCE_EXACT_LIMIT: usize = 20;

/// Disorder-averaged boundary influence at one lattice size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryInfluence {
    /// Mean over disorder seeds of `½(⟨σ_o⟩⁺ − ⟨σ_o⟩⁻)`.
    pub mean: f64,
    /// Standard error of that mean across seeds.
    pub std_error: f64,
    /// Per-seed values, in seed order.
    pub per_seed: Vec<f64>,
    /// "exact-enumeration" or "heat-bath-mc".
    pub method: String,
}

/// Exact `⟨σ_v⟩` under the spin measure, by streaming enumeration.
fn spin_expectation_exact(
    graph: &LatticeGraph,
    boundary: &SpinBoundary,
    field: &DisorderField,
    t: f64,
    vertex: u32,
) -> Result<f64, EstimatorError> {
    let d = ExactDistribution::enumerate_ising(graph, boundary, field, t)?;
    let p_plus = d.event_probability(|mask| mask >> vertex & 1 == 1);
    Ok(2.0 * p_plus - 1.0)
}

/// Monte-Carlo `⟨σ_v⟩` via the heat-bath chain at a specific vertex.
fn spin_expectation_mc_at(
    graph: &LatticeGraph,
    boundary: &SpinBoundary,
    field: &DisorderField,
    t: f64,
    plan: &ChainPlan,
    seed: u64,
    vertex: u32,
    start: StartState,
) -> Result<f64, EstimatorError> {
    let plan = ChainPlan { seed_base: seed, ..*plan };
    let series = drive(
        &plan,
        |r| RfimChain::new(graph, boundary, field, t, plan.seed_base, r, start),
        |chain: &RfimChain| Ok(chain.spins()[vertex as usize] as f64),
    )?;
    let all: Vec<f64> = series.into_iter().flatten().collect();
    Ok(mean(&all))
}

/// Computes the disorder-averaged boundary influence
/// `m(T, side, ε) = mean_seeds ½(⟨σ_o⟩⁺ − ⟨σ_o⟩⁻)` on the `side × side`
/// square, observed at the center vertex.
pub fn boundary_influence(
    side: u32,
    t: f64,
    epsilon: f64,
    seeds: &[u64],
    plan: &ChainPlan,
    method: InfluenceMethod,
) -> Result<BoundaryInfluence, EstimatorError> {
    if side == 0 {
        return Err(EstimatorError::InvalidParameter("side must be at least 1".into()));
    }
    if seeds.is_empty() {
        return Err(EstimatorError::Precondition("need at least one disorder seed".into()));
    }
    let graph = LatticeGraph::build_rect((0, 0), side, side)
        .map_err(|e| EstimatorError::InvalidParameter(e.to_string()))?;
    let origin = graph.center_vertex();
    let plus = SpinBoundary::uniform(&graph, 1)
        .map_err(|e| EstimatorError::InvalidParameter(e.to_string()))?;
    let minus = SpinBoundary::uniform(&graph, -1)
        .map_err(|e| EstimatorError::InvalidParameter(e.to_string()))?;
    let exact = match method {
        InfluenceMethod::Auto => graph.vertex_count() <= INFLUENCE_EXACT_LIMIT,
        InfluenceMethod::Exact => true,
        InfluenceMethod::MonteCarlo => false,
    };

    let per_seed: Result<Vec<f64>, EstimatorError> = seeds
        .iter()
        .map(|&seed| {
            let field = DisorderField::sample(&graph, seed, epsilon)
                .map_err(|e| EstimatorError::InvalidParameter(e.to_string()))?;
            let (e_plus, e_minus) = if exact {
                (
                    spin_expectation_exact(&graph, &plus, &field, t, origin)?,
                    spin_expectation_exact(&graph, &minus, &field, t, origin)?,
                )
            } else {
                let s = chain_seed(plan.seed_base, seed);
                (
                    spin_expectation_mc_at(
                        &graph,
                        &plus,
                        &field,
                        t,
                        plan,
                        s,
                        origin,
                        StartState::AllPlus,
                    )?,
                    spin_expectation_mc_at(
                        &graph,
                        &minus,
                        &field,
                        t,
                        plan,
                        s ^ 0x5555_5555_5555_5555,
                        origin,
                        StartState::AllMinus,
                    )?,
                )
            };
            Ok((e_plus - e_minus) / 2.0)
        })
        .collect();
    let per_seed = per_seed?;
    let (m, se) = mean_and_se(&per_seed);
    Ok(BoundaryInfluence {
        mean: m,
        std_error: se,
        per_seed,
        method: if exact { "exact-enumeration".into() } else { "heat-bath-mc".into() },
    })
}

/// One row of a correlation-length scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    /// Lattice side.
    pub side: u32,
    /// Boundary influence at the requested field strength.
    pub with_field: BoundaryInfluence,
    /// Boundary influence at zero field strength (same seeds).
    pub zero_field: BoundaryInfluence,
}

/// Correlation-length scan: the halving scale of the boundary influence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationLengthReport {
    /// Smallest scanned side at which the influence has verifiably halved;
    /// `None` when the decision cannot be made on the grid.
    pub psi_star: Option<u32>,
    /// Per-side measurements.
    pub rows: Vec<CorrelationRow>,
}

/// Scans `sides` (ascending) for the smallest side where the boundary
/// influence at strength `epsilon` has fallen to half its zero-field value,
/// by the conservative rule: `m̂_ε + 2·SE_ε ≤ m̂_0 / 2` while
/// `m̂_0 − 2·SE_0 > m̂_0 / 2`.
pub fn correlation_length(
    t: f64,
    epsilon: f64,
    sides: &[u32],
    seeds: &[u64],
    plan: &ChainPlan,
    method: InfluenceMethod,
) -> Result<CorrelationLengthReport, EstimatorError> {
    if sides.is_empty() {
        return Err(EstimatorError::Precondition("need at least one side to scan".into()));
    }
    if sides.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EstimatorError::InvalidParameter(
            "sides must be strictly increasing".into(),
        ));
    }
    let mut rows = Vec::with_capacity(sides.len());
    let mut psi_star = None;
    for &side in sides {
        let with_field = boundary_influence(side, t, epsilon, seeds, plan, method)?;
        let zero_field = boundary_influence(side, t, 0.0, seeds, plan, method)?;
        let halved = with_field.mean + 2.0 * with_field.std_error <= zero_field.mean / 2.0
            && zero_field.mean - 2.0 * zero_field.std_error > zero_field.mean / 2.0;
        if halved && psi_star.is_none() {
            psi_star = Some(side);
        }
        rows.push(CorrelationRow { side, with_field, zero_field });
    }
    Ok(CorrelationLengthReport { psi_star, rows })
}

/// Maximal-cluster statistics at one lattice size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpSizeStats {
    /// Box radius (side `2n+1`).
    pub n: u32,
    /// Samples drawn.
    pub samples: u32,
    /// Median of the maximal cluster size.
    pub median_max: f64,
    /// `median_max / n^{15/8}` — the critical scaling ratio.
    pub median_ratio: f64,
    /// Median of `Σ_C |C|² / n^{15/4}` — the critical second-moment ratio.
    pub median_m_ratio: f64,
    /// Median of `Σ_C |C|² / n²` — the subcritical per-area second moment.
    pub median_sum_sq_per_area: f64,
    /// Median of the second-largest cluster size (0 with fewer than two
    /// clusters) — the supercritical uniqueness check.
    pub median_second_max: f64,
    /// `(multiplier, frequency of max ≥ multiplier · median_max)` pairs.
    pub tail_frequencies: Vec<(f64, f64)>,
    /// Frequency of `max ≥ n^{0.9}` (the subcritical decay check).
    pub subcritical_exceedance: f64,
    /// Under wired boundary: frequency of the boundary cluster containing
    /// the whole interior boundary.
    pub boundary_cover_frequency: Option<f64>,
}

/// Threshold multipliers reported by [`ldp_tail`].
pub const TAIL_MULTIPLIERS: [f64; 4] = [1.0, 1.25, 1.5, 2.0];

/// Samples the zero-field edge measure at probability `p` on centered boxes
/// of the given radii and reports maximal-cluster statistics per size.
pub fn ldp_tail(
    p: f64,
    radii: &[u32],
    samples: u32,
    wired: bool,
    plan: &ChainPlan,
) -> Result<Vec<LdpSizeStats>, EstimatorError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(EstimatorError::InvalidParameter(format!(
            "edge probability must lie strictly inside (0, 1), got {p}"
        )));
    }
    if radii.is_empty() || samples == 0 {
        return Err(EstimatorError::Precondition(
            "need at least one radius and one sample".into(),
        ));
    }
    let boundary = if wired { BoundaryCondition::FkWired } else { BoundaryCondition::FkFree };
    radii
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(EstimatorError::InvalidParameter(
                    "box radius must be at least 1".into(),
                ));
            }
            let graph = LatticeGraph::build_box(n, (0, 0));
            let field = DisorderField::zero(&graph);
            let sub_plan = ChainPlan {
                burn_in: plan.burn_in,
                thinning: plan.thinning,
                samples: samples as u64,
                replicas: 1,
                seed_base: chain_seed(plan.seed_base, n as u64),
            };
            // Per sample: maximal cluster, second-largest, Σ|C|², coverage.
            let mut maxima = Vec::with_capacity(samples as usize);
            let mut seconds = Vec::with_capacity(samples as usize);
            let mut sum_sqs = Vec::with_capacity(samples as usize);
            let mut covered = 0u32;
            {
                sub_plan.validate()?;
                let mut chain = EsChain::new(
                    &graph,
                    &boundary,
                    &field,
                    1.0,
                    p,
                    sub_plan.seed_base,
                    0,
                    StartState::Hot,
                )?;
                for _ in 0..sub_plan.burn_in {
                    chain.sweep()?;
                }
                for _ in 0..samples {
                    for _ in 0..sub_plan.thinning {
                        chain.sweep()?;
                    }
                    let decomp = chain.decomposition()?;
                    let mut sizes: Vec<u64> =
                        decomp.clusters().iter().map(|c| c.size() as u64).collect();
                    sizes.sort_unstable_by(|a, b| b.cmp(a));
                    maxima.push(sizes.first().copied().unwrap_or(0) as f64);
                    seconds.push(sizes.get(1).copied().unwrap_or(0) as f64);
                    sum_sqs.push(sizes.iter().map(|&s| (s as f64) * (s as f64)).sum::<f64>());
                    if wired {
                        if let Some(star) = decomp.boundary_cluster() {
                            let all_in = graph
                                .interior_boundary()
                                .iter()
                                .all(|&v| star.members.binary_search(&v).is_ok());
                            if all_in {
                                covered += 1;
                            }
                        }
                    }
                }
            }
            let med = median(&maxima);
            let scale = (n as f64).powf(15.0 / 8.0);
            let m_scale = (n as f64).powf(15.0 / 4.0);
            let area = (n as f64) * (n as f64);
            let tail: Vec<(f64, f64)> = TAIL_MULTIPLIERS
                .iter()
                .map(|&mult| {
                    let thresh = mult * med;
                    let freq =
                        maxima.iter().filter(|&&m| m >= thresh).count() as f64 / maxima.len() as f64;
                    (mult, freq)
                })
                .collect();
            let sub_thresh = (n as f64).powf(0.9);
            let sub_exc =
                maxima.iter().filter(|&&m| m >= sub_thresh).count() as f64 / maxima.len() as f64;
            Ok(LdpSizeStats {
                n,
                samples,
                median_max: med,
                median_ratio: med / scale,
                median_m_ratio: median(&sum_sqs) / m_scale,
                median_sum_sq_per_area: median(&sum_sqs) / area,
                median_second_max: median(&seconds),
                tail_frequencies: tail,
                subcritical_exceedance: sub_exc,
                boundary_cover_frequency: wired
                    .then(|| covered as f64 / samples as f64),
            })
        })
        .collect()
}

/// Disorder-averaged regime summary at one `(T, N, ε)` point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeReport {
    /// Temperature.
    pub t: f64,
    /// Box radius.
    pub n: u32,
    /// Field strength.
    pub epsilon: f64,
    /// Scaling exponent `α(T)` at this temperature.
    pub alpha: f64,
    /// Disorder-averaged total-variation estimate; the error bar is the
    /// spread of per-seed estimates (which already carry their own
    /// Monte-Carlo noise).
    pub tv: EstimateWithError,
    /// Disorder-averaged bridge partition-ratio estimate.
    pub z: EstimateWithError,
    /// Mean per-seed Monte-Carlo standard error of the TV estimates
    /// (reported separately from the disorder spread).
    pub mean_mc_se: f64,
    /// Pooled excursion fraction `F − center > bound` over all seeds.
    pub p2_exceedance: f64,
    /// Pooled excursion fraction `F − center < −bound`.
    pub p3_exceedance: f64,
    /// Per-seed TV estimates, in seed order.
    pub per_seed_tv: Vec<f64>,
}

/// Produces the disorder-averaged regime summary for `model` on `graph`:
/// per seed, a bridge estimate of `Z(h)`, a Radon–Nikodym TV estimate, and
/// excursion counts of the log density increment `G`; then seed-level
/// aggregation.
///
/// For the edge model, `G = F(h, ω)` and the excursions are counted around
/// the deterministic center `2ε²N²/T²`; for the spin model,
/// `G = ε Σ_v h_v σ_v / T`, symmetric under the zero-field measure, and the
/// excursions are counted around 0. Both use the scale `ε N^{α(T)}`.
pub fn regime_report(
    graph: &LatticeGraph,
    model: &EstimatorModel,
    t: f64,
    epsilon: f64,
    seeds: &[u64],
    plan: &ChainPlan,
    start: StartState,
) -> Result<RegimeReport, EstimatorError> {
    if seeds.is_empty() {
        return Err(EstimatorError::Precondition("need at least one disorder seed".into()));
    }
    let n = linear_scale(graph);
    let outcomes: Result<Vec<_>, EstimatorError> = seeds
        .par_iter()
        .map(|&seed| {
            let field = DisorderField::sample(graph, seed, epsilon)
                .map_err(|e| EstimatorError::InvalidParameter(e.to_string()))?;
            let seed_plan = ChainPlan { seed_base: chain_seed(plan.seed_base, seed), ..*plan };

            // Shared zero-field samples of G at the target ε.
            let g0 = g_samples(graph, model, &field, 0.0, t, &seed_plan, 0, start)?;
            let gh = g_samples(
                graph,
                model,
                &field,
                epsilon,
                t,
                &seed_plan,
                seed_plan.replicas,
                start,
            )?;

            // Bridge Z.
            let (parts_bh, pooled_bh, _) = scaled_lse(&gh, -0.5);
            let (parts_b0, pooled_b0, _) = scaled_lse(&g0, 0.5);
            let z_value = if epsilon == 0.0 {
                1.0
            } else {
                (log_mean(&pooled_bh) - log_mean(&pooled_b0)).exp()
            };
            let z_loo: Vec<f64> = loo_log_means(&parts_bh)
                .iter()
                .zip(&loo_log_means(&parts_b0))
                .map(|(&a, &b)| (a - b).exp())
                .collect();
            let z_se = if epsilon == 0.0 { 0.0 } else { jackknife_se(&z_loo) };

            // TV from the shared zero-field samples.
            let (tv_value, tv_se, clamp_fraction) = if epsilon == 0.0 {
                (0.0, 0.0, 0.0)
            } else {
                let terms: Vec<Vec<f64>> = g0
                    .iter()
                    .map(|s| {
                        s.iter().map(|&g| (1.0 - z_value * g.exp()).max(0.0)).collect()
                    })
                    .collect();
                let all: Vec<f64> = terms.iter().flatten().copied().collect();
                let total: f64 = all.iter().sum();
                let loo: Vec<f64> = terms
                    .iter()
                    .map(|s| {
                        let sub: f64 = s.iter().sum();
                        (total - sub) / (all.len() - s.len()) as f64
                    })
                    .collect();
                let clamped =
                    all.iter().filter(|&&x| x == 0.0).count() as f64 / all.len() as f64;
                (mean(&all), jackknife_se(&loo), clamped)
            };

            // Excursion counts.
            let (center, bound) = match model {
                EstimatorModel::Fk { .. } => {
                    let (c, b, _, _) = concentration_frame(graph, &field, t)?;
                    (c, b)
                }
                EstimatorModel::Ising { .. } => {
                    let alpha = alpha_exponent(t)
                        .map_err(|e| EstimatorError::InvalidParameter(e.to_string()))?;
                    (0.0, epsilon * n.powf(alpha))
                }
            };
            let mut p2 = 0u64;
            let mut p3 = 0u64;
            let mut n_f = 0u64;
            for s in &g0 {
                for &f in s {
                    n_f += 1;
                    if f - center > bound {
                        p2 += 1;
                    }
                    if f - center < -bound {
                        p3 += 1;
                    }
                }
            }
            Ok((z_value, z_se, tv_value, tv_se, p2, p3, n_f, clamp_fraction))
        })
        .collect();
    let outcomes = outcomes?;

    let per_seed_tv: Vec<f64> = outcomes.iter().map(|o| o.2).collect();
    let per_seed_z: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let (tv_mean, tv_spread_se) = mean_and_se(&per_seed_tv);
    let (z_mean, z_spread_se) = mean_and_se(&per_seed_z);
    let mean_mc_se = mean(&outcomes.iter().map(|o| o.3).collect::<Vec<f64>>());
    let mean_clamp = mean(&outcomes.iter().map(|o| o.7).collect::<Vec<f64>>());
    let p2_total: u64 = outcomes.iter().map(|o| o.4).sum();
    let p3_total: u64 = outcomes.iter().map(|o| o.5).sum();
    let n_total: u64 = outcomes.iter().map(|o| o.6).sum();

    Ok(RegimeReport {
        t,
        n: n.round() as u32,
        epsilon,
        alpha: alpha_exponent(t)
            .map_err(|e| EstimatorError::InvalidParameter(e.to_string()))?,
        tv: EstimateWithError {
            value: tv_mean,
            std_error: tv_spread_se,
            replicas: seeds.len() as u32,
            method: "radon-nikodym/disorder-mean".into(),
            diagnostics: Diagnostics {
                clamp_fraction: Some(mean_clamp),
                ..Diagnostics::default()
            },
        },
        z: EstimateWithError {
            value: z_mean,
            std_error: z_spread_se,
            replicas: seeds.len() as u32,
            method: "bridged/disorder-mean".into(),
            diagnostics: Diagnostics::default(),
        },
        mean_mc_se,
        p2_exceedance: p2_total as f64 / n_total.max(1) as f64,
        p3_exceedance: p3_total as f64 / n_total.max(1) as f64,
        per_seed_tv,
    })
}

/// Effective-sample-size fraction of a plain weight vector (re-exported
/// convenience for diagnostics).
pub fn weight_ess_fraction(weights: &[f64]) -> f64 {
    if weights.is_empty() {
        return 0.0;
    }
    effective_sample_size(weights) / weights.len() as f64
}

/// Heat-bath probability re-export used by CLI diagnostics.
pub fn tilt_probability(x: f64) -> f64 {
    heat_bath_probability(x)
}
