//! Markov-chain samplers: single-site heat-bath dynamics for the
//! random-field spin model, and the two-half-step spin–edge coupling sweep
//! for the random-cluster model with cluster field factors.
//!
//! Reproducibility contract: every chain draws from one counter-based
//! substream keyed by `(seed, replica)`, and every sweep consumes a
//! deterministic number of uniforms in a deterministic order — one per vertex
//! for the heat-bath sweep; one per edge (open or not), one per boundary
//! attachment slot, and one per unclamped cluster for the coupling sweep
//! (clamped boundary clusters consume none). Identical plans and seeds
//! therefore give bit-identical sample streams, independent of thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clusters::{
    cluster_stats, decompose_with_links, ClusterDecomposition, ClusterError, ClusterStats,
};
use crate::disorder::DisorderField;
use crate::lattice::{BoundaryCondition, LatticeGraph, SpinBoundary};
use crate::rng::Substream;

/// Hard ceiling on the total number of sweeps a plan may request.
pub const MAX_TOTAL_SWEEPS: u64 = 1_000_000_000;

/// Stream-id namespace for chain substreams (disjoint by construction from
/// the coordinate-keyed disorder streams, which set the top bit).
const CHAIN_STREAM_DOMAIN: u64 = 0x4000_0000_0000_0000;

/// Errors from chain construction and execution.
#[derive(Debug, Error)]
pub enum McmcError {
    /// A numeric parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The boundary condition cannot drive this sampler.
    #[error("unsupported boundary: {0}")]
    UnsupportedBoundary(String),
    /// The chain state violates the coupling invariant.
    #[error("corrupted state: {0}")]
    CorruptedState(String),
    /// The plan asks for more work than the configured ceiling.
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    /// Underlying cluster error.
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// Heat-bath acceptance function `g(t) = e^t / (e^t + e^{−t})`, evaluated
/// stably for large `|t|`.
pub fn heat_bath_probability(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-2.0 * t).exp())
    } else {
        let e = (2.0 * t).exp();
        e / (1.0 + e)
    }
}

/// Default burn-in length for a lattice of linear size `n`: quadratic at the
/// critical temperature (critical slowing down), linear elsewhere.
pub fn default_burn_in(t: f64, linear_size: u32) -> Result<u64, McmcError> {
    let regime = crate::disorder::classify_temperature(t)
        .map_err(|e| McmcError::InvalidParameter(e.to_string()))?;
    let n = linear_size.max(1) as u64;
    Ok(match regime {
        crate::disorder::TemperatureRegime::Critical => 20 * n * n,
        _ => 100 * n,
    })
}

/// Initial state of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartState {
    /// All spins `−1`, all edges closed.
    AllMinus,
    /// All spins `+1`, all edges closed.
    AllPlus,
    /// Independent fair-coin spins (one uniform per vertex), edges closed.
    Hot,
}

/// Execution plan for a set of independent replicas of one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainPlan {
    /// Sweeps discarded before the first record.
    pub burn_in: u64,
    /// Sweeps between consecutive records (≥ 1).
    pub thinning: u64,
    /// Records taken per replica.
    pub samples: u64,
    /// Independent replicas, each on its own substream.
    pub replicas: u32,
    /// Base seed; replica `r` uses the stream keyed by `(seed_base, r)`.
    pub seed_base: u64,
}

impl ChainPlan {
    /// Total sweeps across all replicas.
    pub fn total_sweeps(&self) -> u64 {
        (self.replicas as u64)
            .saturating_mul(self.burn_in.saturating_add(self.thinning.saturating_mul(self.samples)))
    }

    /// Validates the plan against structural and resource constraints.
    pub fn validate(&self) -> Result<(), McmcError> {
        if self.thinning == 0 {
            return Err(McmcError::InvalidParameter("thinning must be at least 1".into()));
        }
        if self.replicas == 0 {
            return Err(McmcError::InvalidParameter("need at least one replica".into()));
        }
        if self.total_sweeps() > MAX_TOTAL_SWEEPS {
            return Err(McmcError::ResourceLimit(format!(
                "plan requests {} sweeps, ceiling is {MAX_TOTAL_SWEEPS}",
                self.total_sweeps()
            )));
        }
        Ok(())
    }
}

/// One recorded observation of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    /// Replica index the record came from.
    pub replica: u32,
    /// Sweep count at recording time.
    pub sweep: u64,
    /// Cluster observables of the recorded configuration (for the spin
    /// sampler: of its agreement clusters).
    pub stats: ClusterStats,
    /// Mean spin over the lattice vertices.
    pub magnetization: f64,
}

/// A chain that can advance by one sweep and record its current state.
pub trait SweepChain: Send {
    /// Advances the chain by one full sweep.
    fn sweep(&mut self) -> Result<(), McmcError>;
    /// Records the current configuration.
    fn record(&self) -> Result<SampleRecord, McmcError>;
}

/// Runs `plan.replicas` independent chains built by `make` and collects their
/// records in `(replica, sweep)` order. Replicas run in parallel; the result
/// does not depend on the thread count because each replica owns its
/// substream.
pub fn run_chain<C, F>(plan: &ChainPlan, make: F) -> Result<Vec<SampleRecord>, McmcError>
where
    C: SweepChain,
    F: Fn(u32) -> Result<C, McmcError> + Sync,
{
    plan.validate()?;
    if plan.samples == 0 {
        return Ok(Vec::new());
    }
    let per_replica: Vec<Result<Vec<SampleRecord>, McmcError>> = (0..plan.replicas)
        .into_par_iter()
        .map(|r| {
            let mut chain = make(r)?;
            for _ in 0..plan.burn_in {
                chain.sweep()?;
            }
            let mut records = Vec::with_capacity(plan.samples as usize);
            for _ in 0..plan.samples {
                for _ in 0..plan.thinning {
                    chain.sweep()?;
                }
                records.push(chain.record()?);
            }
            Ok(records)
        })
        .collect();
    let mut out = Vec::with_capacity((plan.replicas as u64 * plan.samples) as usize);
    for r in per_replica {
        out.extend(r?);
    }
    Ok(out)
}

fn check_chain_parameters(
    graph: &LatticeGraph,
    field: &DisorderField,
    t: f64,
) -> Result<(), McmcError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(McmcError::InvalidParameter(format!(
            "temperature must be positive and finite, got {t}"
        )));
    }
    if field.values().len() != graph.vertex_count() {
        return Err(McmcError::InvalidParameter(format!(
            "field has {} values, graph has {} vertices",
            field.values().len(),
            graph.vertex_count()
        )));
    }
    Ok(())
}

fn initial_spins(n: usize, start: StartState, rng: &mut Substream) -> Vec<i8> {
    match start {
        StartState::AllMinus => vec![-1; n],
        StartState::AllPlus => vec![1; n],
        StartState::Hot => {
            (0..n).map(|_| if rng.next_uniform() < 0.5 { 1 } else { -1 }).collect()
        }
    }
}

/// Single-site heat-bath chain for the random-field spin model.
///
/// One sweep visits every vertex in index order and resamples its spin from
/// the conditional law: `P(σ_x = +1) = g((S_x + b_x + ε h_x)/T)` where `S_x`
/// sums the neighbouring spins and `b_x` is the boundary field.
pub struct RfimChain<'a> {
    graph: &'a LatticeGraph,
    boundary: SpinBoundary,
    boundary_field: Vec<f64>,
    field: &'a DisorderField,
    t: f64,
    spins: Vec<i8>,
    rng: Substream,
    replica: u32,
    sweeps_done: u64,
}

impl<'a> RfimChain<'a> {
    /// Builds a chain for `(graph, boundary, field, T)` on the substream
    /// keyed by `(seed, replica)`.
    pub fn new(
        graph: &'a LatticeGraph,
        boundary: &SpinBoundary,
        field: &'a DisorderField,
        t: f64,
        seed: u64,
        replica: u32,
        start: StartState,
    ) -> Result<Self, McmcError> {
        check_chain_parameters(graph, field, t)?;
        if boundary.values().len() != graph.exterior_boundary().len() {
            return Err(McmcError::UnsupportedBoundary(
                "boundary condition belongs to a different graph".into(),
            ));
        }
        let mut rng = Substream::new(seed, CHAIN_STREAM_DOMAIN | replica as u64);
        let spins = initial_spins(graph.vertex_count(), start, &mut rng);
        Ok(RfimChain {
            graph,
            boundary: boundary.clone(),
            boundary_field: graph.boundary_field(boundary),
            field,
            t,
            spins,
            rng,
            replica,
            sweeps_done: 0,
        })
    }

    /// Current spins in vertex order.
    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// Mean spin over the lattice vertices.
    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| s as f64).sum::<f64>() / self.spins.len() as f64
    }

    /// Alignment `Σ_v h_v σ_v` of the configuration with the raw field.
    pub fn field_alignment(&self) -> f64 {
        self.spins
            .iter()
            .enumerate()
            .map(|(v, &s)| self.field.value(v as u32) * s as f64)
            .sum()
    }

    /// Number of sweeps performed.
    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    /// Agreement clusters of the current spins: interior edges are open
    /// exactly between equal spins, and (for a nonzero boundary) a ghost
    /// collects the boundary vertices whose spin agrees with some fixed
    /// exterior neighbour.
    pub fn agreement_decomposition(&self) -> Result<ClusterDecomposition, McmcError> {
        let omega: Vec<bool> = self
            .graph
            .edges()
            .iter()
            .map(|&(i, j)| self.spins[i as usize] == self.spins[j as usize])
            .collect();
        let links = if self.boundary.is_uniform(0) {
            Vec::new()
        } else {
            let attached: Vec<u32> = self
                .graph
                .interior_boundary()
                .iter()
                .copied()
                .filter(|&v| {
                    self.graph.exterior_neighbors(v).iter().any(|&k| {
                        let xi = self.boundary.value(k as usize);
                        xi != 0 && xi == self.spins[v as usize]
                    })
                })
                .collect();
            vec![attached]
        };
        Ok(decompose_with_links(self.graph, &omega, &links)?)
    }
}

impl SweepChain for RfimChain<'_> {
    fn sweep(&mut self) -> Result<(), McmcError> {
        for v in 0..self.graph.vertex_count() {
            let mut local = self.boundary_field[v]
                + self.field.epsilon() * self.field.value(v as u32);
            for &(w, _) in self.graph.neighbors(v as u32) {
                local += self.spins[w as usize] as f64;
            }
            let u = self.rng.next_uniform();
            self.spins[v] = if u < heat_bath_probability(local / self.t) { 1 } else { -1 };
        }
        self.sweeps_done += 1;
        Ok(())
    }

    fn record(&self) -> Result<SampleRecord, McmcError> {
        let decomp = self.agreement_decomposition()?;
        let stats = cluster_stats(&decomp, self.field, self.t)?;
        Ok(SampleRecord {
            replica: self.replica,
            sweep: self.sweeps_done,
            stats,
            magnetization: self.magnetization(),
        })
    }
}

/// Boundary wiring of the coupling sampler.
#[derive(Debug, Clone)]
enum EsWiring {
    /// No ghost.
    Free,
    /// One unconstrained ghost permanently wired to the interior boundary.
    Wired,
    /// Unconstrained ghosts on explicit groups.
    Partition(Vec<Vec<u32>>),
    /// One ghost with fluctuating attachments and a clamped sign: the
    /// spin-boundary case. `slots` lists one entry per (boundary vertex,
    /// exterior neighbour) pair, in vertex order.
    Clamped { xi: i8, slots: Vec<u32> },
}

/// Two-half-step coupling chain for the random-cluster model with cluster
/// field factors (and, through its spin marginal, the random-field spin
/// model with free or uniform fixed boundary).
///
/// Each sweep first resamples all edges given spins (independent
/// Bernoulli(`p`) on agreeing edges, closed otherwise — one uniform consumed
/// per edge either way, likewise per boundary slot), then resamples spins
/// given edges: each cluster, in order of its smallest member, picks `+1`
/// with probability `g(ε h_C / T)`; a clamped boundary cluster keeps the
/// boundary sign and consumes no uniform.
pub struct EsChain<'a> {
    graph: &'a LatticeGraph,
    wiring: EsWiring,
    field: &'a DisorderField,
    t: f64,
    p: f64,
    spins: Vec<i8>,
    omega: Vec<bool>,
    slot_open: Vec<bool>,
    rng: Substream,
    replica: u32,
    sweeps_done: u64,
}

impl<'a> EsChain<'a> {
    /// Builds a chain for `(graph, boundary, field, T, p)` on the substream
    /// keyed by `(seed, replica)`.
    ///
    /// Random-cluster boundaries (`FkFree` / `FkWired` / `FkPartition`) are
    /// used as wirings. A spin boundary must be uniform: `0` maps to the free
    /// wiring, `±1` to a clamped ghost whose attachments open and close with
    /// the edges; mixed spin boundaries are not supported by this sampler.
    pub fn new(
        graph: &'a LatticeGraph,
        boundary: &BoundaryCondition,
        field: &'a DisorderField,
        t: f64,
        p: f64,
        seed: u64,
        replica: u32,
        start: StartState,
    ) -> Result<Self, McmcError> {
        check_chain_parameters(graph, field, t)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(McmcError::InvalidParameter(format!(
                "edge probability must lie strictly inside (0, 1), got {p}"
            )));
        }
        boundary
            .validate(graph)
            .map_err(|e| McmcError::InvalidParameter(e.to_string()))?;
        let wiring = match boundary {
            BoundaryCondition::FkFree => EsWiring::Free,
            BoundaryCondition::FkWired => EsWiring::Wired,
            BoundaryCondition::FkPartition(gs) => EsWiring::Partition(gs.clone()),
            BoundaryCondition::IsingSpin(sb) => {
                if sb.is_uniform(0) {
                    EsWiring::Free
                } else if sb.is_uniform(1) || sb.is_uniform(-1) {
                    let xi = if sb.is_uniform(1) { 1 } else { -1 };
                    let mut slots = Vec::new();
                    for &v in graph.interior_boundary() {
                        for _ in graph.exterior_neighbors(v) {
                            slots.push(v);
                        }
                    }
                    EsWiring::Clamped { xi, slots }
                } else {
                    return Err(McmcError::UnsupportedBoundary(
                        "the coupling sampler supports uniform spin boundaries only".into(),
                    ));
                }
            }
        };
        let mut rng = Substream::new(seed, CHAIN_STREAM_DOMAIN | replica as u64);
        let spins = initial_spins(graph.vertex_count(), start, &mut rng);
        let slot_count = match &wiring {
            EsWiring::Clamped { slots, .. } => slots.len(),
            _ => 0,
        };
        Ok(EsChain {
            graph,
            wiring,
            field,
            t,
            p,
            spins,
            omega: vec![false; graph.edge_count()],
            slot_open: vec![false; slot_count],
            rng,
            replica,
            sweeps_done: 0,
        })
    }

    /// Current edge configuration.
    pub fn omega(&self) -> &[bool] {
        &self.omega
    }

    /// Current spins in vertex order.
    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// Mean spin over the lattice vertices.
    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| s as f64).sum::<f64>() / self.spins.len() as f64
    }

    /// Number of sweeps performed.
    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    /// Ghost links as of the current state.
    fn links(&self) -> Vec<Vec<u32>> {
        match &self.wiring {
            EsWiring::Free => Vec::new(),
            EsWiring::Wired => vec![self.graph.interior_boundary().to_vec()],
            EsWiring::Partition(gs) => gs.clone(),
            EsWiring::Clamped { slots, .. } => {
                let mut attached: Vec<u32> = slots
                    .iter()
                    .zip(&self.slot_open)
                    .filter(|&(_, &open)| open)
                    .map(|(&v, _)| v)
                    .collect();
                attached.dedup();
                vec![attached]
            }
        }
    }

    /// Cluster decomposition of the current edge configuration under the
    /// current wiring.
    pub fn decomposition(&self) -> Result<ClusterDecomposition, McmcError> {
        Ok(decompose_with_links(self.graph, &self.omega, &self.links())?)
    }

    /// The cluster field functional `Σ_C ln cosh(ε' h_C / T)` of the current
    /// configuration, evaluated at an arbitrary strength `ε'` (density
    /// estimators compare one configuration under several strengths).
    pub fn f_value_at(&self, epsilon: f64) -> Result<f64, McmcError> {
        let scaled = self
            .field
            .with_epsilon(epsilon)
            .map_err(|e| McmcError::InvalidParameter(e.to_string()))?;
        let decomp = self.decomposition()?;
        Ok(crate::clusters::f_functional(&decomp, &scaled, self.t)?)
    }

    fn check_state(&self) -> Result<(), McmcError> {
        for (e, &(i, j)) in self.graph.edges().iter().enumerate() {
            if self.omega[e] && self.spins[i as usize] != self.spins[j as usize] {
                return Err(McmcError::CorruptedState(format!(
                    "open edge {e} joins disagreeing spins at vertices {i} and {j}"
                )));
            }
        }
        if let EsWiring::Clamped { xi, slots } = &self.wiring {
            for (s, (&v, &open)) in slots.iter().zip(&self.slot_open).enumerate() {
                if open && self.spins[v as usize] != *xi {
                    return Err(McmcError::CorruptedState(format!(
                        "open boundary slot {s} joins vertex {v} to a disagreeing boundary"
                    )));
                }
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn force_state(&mut self, spins: Vec<i8>, omega: Vec<bool>) {
        self.spins = spins;
        self.omega = omega;
    }
}

impl SweepChain for EsChain<'_> {
    fn sweep(&mut self) -> Result<(), McmcError> {
        self.check_state()?;
        // Half-step 1: edges given spins.
        for (e, &(i, j)) in self.graph.edges().iter().enumerate() {
            let u = self.rng.next_uniform(); // consumed even when forced closed
            self.omega[e] = self.spins[i as usize] == self.spins[j as usize] && u < self.p;
        }
        if let EsWiring::Clamped { xi, slots } = &self.wiring {
            for (s, &v) in slots.iter().enumerate() {
                let u = self.rng.next_uniform();
                self.slot_open[s] = self.spins[v as usize] == *xi && u < self.p;
            }
        }
        // Half-step 2: spins given clusters, in cluster order.
        let decomp = decompose_with_links(self.graph, &self.omega, &self.links())?;
        let clamp = match &self.wiring {
            EsWiring::Clamped { xi, .. } => Some(*xi),
            _ => None,
        };
        for c in decomp.clusters() {
            let sign = if c.is_boundary_cluster && clamp.is_some() {
                clamp.unwrap() // clamped: no randomness consumed
            } else {
                let x = self.field.epsilon() * self.field.field_sum(&c.members) / self.t;
                let u = self.rng.next_uniform();
                if u < heat_bath_probability(x) {
                    1
                } else {
                    -1
                }
            };
            for &v in &c.members {
                self.spins[v as usize] = sign;
            }
        }
        self.sweeps_done += 1;
        Ok(())
    }

    fn record(&self) -> Result<SampleRecord, McmcError> {
        let decomp = self.decomposition()?;
        let stats = cluster_stats(&decomp, self.field, self.t)?;
        Ok(SampleRecord {
            replica: self.replica,
            sweep: self.sweeps_done,
            stats,
            magnetization: self.magnetization(),
        })
    }
}

/// Runs the heat-bath sampler under a plan.
pub fn run_rfim_chain(
    plan: &ChainPlan,
    graph: &LatticeGraph,
    boundary: &SpinBoundary,
    field: &DisorderField,
    t: f64,
    start: StartState,
) -> Result<Vec<SampleRecord>, McmcError> {
    run_chain(plan, |replica| {
        RfimChain::new(graph, boundary, field, t, plan.seed_base, replica, start)
    })
}

/// Runs the coupling sampler under a plan.
#[allow(clippy::too_many_arguments)]
pub fn run_es_chain(
    plan: &ChainPlan,
    graph: &LatticeGraph,
    boundary: &BoundaryCondition,
    field: &DisorderField,
    t: f64,
    p: f64,
    start: StartState,
) -> Result<Vec<SampleRecord>, McmcError> {
    run_chain(plan, |replica| {
        EsChain::new(graph, boundary, field, t, p, plan.seed_base, replica, start)
    })
}
