//! Independent oracle for the boundary-influence measurement: a Gray-code
//! bitboard enumeration of the spin model that shares no code with the
//! library's enumeration or samplers, covering a square the library can
//! enumerate (side 4) and one it must sample (side 5, 2^25 states).

use rffkim::disorder::DisorderField;
use rffkim::estimators::{boundary_influence, InfluenceMethod};
use rffkim::lattice::{LatticeGraph, SpinBoundary};
use rffkim::mcmc::ChainPlan;

/// Exact `⟨σ_center⟩` under uniform boundary spins `boundary_sign`, by
/// Gray-code enumeration with incremental energy updates: step `i → i+1`
/// flips exactly the bit `trailing_zeros(i+1)` of the Gray code `i ^ (i>>1)`.
fn center_expectation_bitboard(
    graph: &LatticeGraph,
    field: &DisorderField,
    t: f64,
    boundary_sign: i8,
) -> f64 {
    let nv = graph.vertex_count();
    assert!(nv <= 25, "oracle is sized for at most 2^25 states");
    let bc = SpinBoundary::uniform(graph, boundary_sign).unwrap();
    let b = graph.boundary_field(&bc);
    let center = graph.center_vertex() as usize;
    // Local couplings: c_v = b_v + ε h_v.
    let c: Vec<f64> =
        (0..nv).map(|v| b[v] + field.epsilon() * field.value(v as u32)).collect();
    let neighbors: Vec<Vec<usize>> = (0..nv)
        .map(|v| graph.neighbors(v as u32).iter().map(|&(w, _)| w as usize).collect())
        .collect();

    // Start at Gray code 0: all spins −1.
    let mut spins = vec![-1i8; nv];
    let mut energy = 0.0;
    for &(u, v) in graph.edges() {
        energy += (spins[u as usize] * spins[v as usize]) as f64;
    }
    for v in 0..nv {
        energy += spins[v] as f64 * c[v];
    }

    let mut z = 0.0;
    let mut num = 0.0;
    let total: u64 = 1 << nv;
    for i in 0..total {
        let w = (energy / t).exp();
        z += w;
        num += spins[center] as f64 * w;
        if i + 1 == total {
            break;
        }
        let k = (i + 1).trailing_zeros() as usize;
        // Flipping spin k: the pair terms with its neighbors and its local
        // term all change sign relative to the current spin.
        let mut local = c[k];
        for &w_idx in &neighbors[k] {
            local += spins[w_idx] as f64;
        }
        energy -= 2.0 * spins[k] as f64 * local;
        spins[k] = -spins[k];
    }
    num / z
}

fn oracle_influence(side: u32, t: f64, epsilon: f64, seeds: &[u64]) -> Vec<f64> {
    let graph = LatticeGraph::build_rect((0, 0), side, side).unwrap();
    seeds
        .iter()
        .map(|&seed| {
            let field = if epsilon == 0.0 {
                DisorderField::zero(&graph)
            } else {
                DisorderField::sample(&graph, seed, epsilon).unwrap()
            };
            let plus = center_expectation_bitboard(&graph, &field, t, 1);
            let minus = center_expectation_bitboard(&graph, &field, t, -1);
            0.5 * (plus - minus)
        })
        .collect()
}

/// Side 4 (16 spins): the library's enumeration path must match the
/// independent bitboard to 1e−10, seed by seed.
#[test]
fn side_4_enumeration_matches_bitboard() {
    let t = 2.0;
    let epsilon = 0.4;
    let seeds: Vec<u64> = (0..3).collect();
    let plan = ChainPlan { burn_in: 10, thinning: 1, samples: 10, replicas: 1, seed_base: 1 };
    let report =
        boundary_influence(4, t, epsilon, &seeds, &plan, InfluenceMethod::Exact).unwrap();
    let oracle = oracle_influence(4, t, epsilon, &seeds);
    for (i, (lib, ora)) in report.per_seed.iter().zip(&oracle).enumerate() {
        assert!(
            (lib - ora).abs() <= 1e-10,
            "seed {i}: library {lib} vs bitboard {ora}"
        );
    }
}

/// Side 5 (25 spins, beyond the enumeration threshold): the sampling path
/// must land within Monte-Carlo noise of the 2^25-state bitboard value,
/// seed by seed, and the automatic method choice must be the sampler.
#[test]
fn side_5_sampler_matches_bitboard() {
    let t = 2.0;
    let epsilon = 0.3;
    let seeds: Vec<u64> = (0..2).collect();
    let plan = ChainPlan { burn_in: 400, thinning: 2, samples: 2500, replicas: 4, seed_base: 17 };
    let report = boundary_influence(5, t, epsilon, &seeds, &plan, InfluenceMethod::Auto).unwrap();
    assert_eq!(report.method, "heat-bath-mc", "side 5 exceeds the enumeration threshold");
    let oracle = oracle_influence(5, t, epsilon, &seeds);
    for (i, (lib, ora)) in report.per_seed.iter().zip(&oracle).enumerate() {
        assert!(
            (lib - ora).abs() <= 0.06,
            "seed {i}: sampled {lib} vs bitboard {ora} differs beyond noise allowance"
        );
    }
}
