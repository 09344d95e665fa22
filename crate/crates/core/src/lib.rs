//! `rffkim` — simulation and measurement toolkit for the two-dimensional Ising
//! and FK-Ising (random-cluster, q = 2) models in a weak i.i.d. Gaussian external
//! field.
//!
//! The crate provides, bottom-up:
//!
//! * [`lattice`] — finite subgraphs of `Z^2` (boxes, annuli, rectangles, masked
//!   regions), their boundaries, and the planar dual-edge map;
//! * [`rng`] / [`disorder`] — a counter-based splittable PRNG and the Gaussian
//!   field `h = (h_v)` sampled from it, keyed by `(seed, vertex)` so that values
//!   are reproducible and stable under graph extension;
//! * [`exact`] — dense exact distributions on small graphs (spin, edge, and
//!   coupled supports), exact total-variation distances, and exact
//!   partition-function ratios between the zero-field and field measures;
//! * [`clusters`] — open-cluster decompositions under free / wired / partition
//!   boundary wirings, cluster statistics, crossing events and their duals, and
//!   the coarse-graining diagnostics used at scale;
//! * [`mcmc`] — a random-field Ising heat-bath sampler and an Edwards–Sokal
//!   edge/spin alternating sampler, with reproducible multi-replica plans;
//! * [`estimators`] — Monte-Carlo estimators for the partition-function ratio
//!   `Z(h)`, the total-variation distance between the field and zero-field
//!   measures, field-functional concentration statistics, boundary influence,
//!   finite-size correlation lengths, and largest-cluster tail diagnostics;
//! * [`harness`] — experiment configs, a content-addressed result store, the
//!   sweep driver, a pure-text SVG plot emitter, and the `rffkim` CLI.
//!
//! Everything downstream of a `(seed, …)` key is bit-reproducible: reruns of the
//! same configuration produce byte-identical artifacts regardless of thread
//! count (see `RFFKIM_THREADS` in the harness).

pub mod clusters;
pub mod disorder;
pub mod estimators;
pub mod exact;
pub mod harness;
pub mod lattice;
pub mod mcmc;
pub mod rng;
pub mod stats;
pub mod thermo;
