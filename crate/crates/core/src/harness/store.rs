//! Experiment orchestration and persistence: run a configured sweep, write
//! its CSV/JSON/SVG payloads into an append-only content-addressed store,
//! and serve byte-identical cache hits for repeated configurations.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, ModelKind, ResolvedExperiment};
use super::plot::render_svg_from_csv;
use super::HarnessError;
use crate::disorder::epsilon_schedule;
use crate::estimators::{regime_report, EstimatorModel, RegimeReport};
use crate::lattice::{LatticeGraph, SpinBoundary};
use crate::mcmc::{ChainPlan, StartState};

/// Code version stamped into store keys and manifests: identical configs
/// under different code versions are distinct entries.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One output file's identity inside a manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFile {
    /// File name inside the entry directory.
    pub name: String,
    /// SHA-256 of the contents, hex.
    pub sha256: String,
    /// Size in bytes.
    pub bytes: u64,
}

/// Provenance block: everything needed to trace any CSV row back to its
/// chains — disorder seeds, chain plans (seed base, replicas, burn-in,
/// thinning, samples), and the schedule grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Model family.
    pub model: String,
    /// Boundary name.
    pub boundary: String,
    /// Temperature.
    pub temperature: f64,
    /// Edge probability, when the edge model runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// `(theta, alpha, label)` per schedule.
    pub schedules: Vec<(f64, f64, String)>,
    /// Box radii.
    pub n_list: Vec<u32>,
    /// Chain plan per radius (aligned with `n_list`).
    pub plans: Vec<ChainPlan>,
    /// Disorder seeds.
    pub disorder_seeds: Vec<u64>,
}

/// Stored run record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Content-hash key of (config, code version).
    pub key: String,
    /// Code version that produced the entry.
    pub code_version: String,
    /// Output files with their hashes.
    pub files: Vec<ManifestFile>,
    /// Row-level provenance.
    pub provenance: Provenance,
}

/// Append-only content-addressed run store rooted at a directory.
#[derive(Debug, Clone)]
pub struct ResultStore {
    root: PathBuf,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

impl ResultStore {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(root)
            .map_err(|e| HarnessError::Io(format!("cannot create store at {root:?}: {e}")))?;
        Ok(ResultStore { root: root.to_path_buf() })
    }

    /// Store root.
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// The content key of a configuration under a code version.
    pub fn compute_key(config_toml: &str, code_version: &str) -> String {
        sha256_hex(format!("{config_toml}\n{code_version}").as_bytes())
    }

    /// Directory holding the entry for `key`.
    pub fn entry_dir(&self, key: &str) -> PathBuf {
        self.root.join(key)
    }

    /// Returns the manifest when the entry exists and is complete.
    pub fn lookup(&self, key: &str) -> Option<Manifest> {
        let path = self.entry_dir(key).join("manifest.json");
        let text = fs::read_to_string(path).ok()?;
        let manifest: Manifest = serde_json::from_str(&text).ok()?;
        (manifest.key == key).then_some(manifest)
    }

    /// Writes a new entry. Append-only: an existing complete entry is an
    /// error (callers consult [`Self::lookup`] first and reuse it).
    pub fn insert(
        &self,
        key: &str,
        files: &[(String, Vec<u8>)],
        provenance: Provenance,
    ) -> Result<Manifest, HarnessError> {
        if self.lookup(key).is_some() {
            return Err(HarnessError::Io(format!(
                "store entry {key} already exists; the store is append-only"
            )));
        }
        let dir = self.entry_dir(key);
        fs::create_dir_all(&dir)
            .map_err(|e| HarnessError::Io(format!("cannot create entry {dir:?}: {e}")))?;
        let mut manifest_files = Vec::with_capacity(files.len());
        for (name, bytes) in files {
            let path = dir.join(name);
            fs::write(&path, bytes)
                .map_err(|e| HarnessError::Io(format!("cannot write {path:?}: {e}")))?;
            manifest_files.push(ManifestFile {
                name: name.clone(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len() as u64,
            });
        }
        let manifest = Manifest {
            key: key.to_string(),
            code_version: CODE_VERSION.to_string(),
            files: manifest_files,
            provenance,
        };
        let manifest_json = serde_json::to_string_pretty(&manifest)
            .expect("manifest serializes")
            + "\n";
        // The manifest lands last: a crash mid-write leaves an incomplete
        // entry that lookup ignores and a rerun overwrites.
        fs::write(dir.join("manifest.json"), manifest_json)
            .map_err(|e| HarnessError::Io(format!("cannot write manifest: {e}")))?;
        Ok(manifest)
    }
}

/// One CSV row of a sweep: the disorder-aggregated estimates at a grid
/// point, tagged with the schedule exponent that set ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Temperature.
    pub t: f64,
    /// Box radius.
    pub n: u32,
    /// Field strength `θ·N^{−α}`.
    pub epsilon: f64,
    /// Schedule exponent α (as configured, not the regime exponent).
    pub alpha: f64,
    /// Disorder-averaged TV estimate.
    pub tv_mean: f64,
    /// Spread of per-seed TV estimates.
    pub tv_se: f64,
    /// Disorder-averaged bridge partition-ratio estimate.
    pub z_hat: f64,
    /// Spread of per-seed partition-ratio estimates.
    pub z_se: f64,
    /// Pooled upper-excursion fraction.
    pub p2_exceed: f64,
    /// Pooled lower-excursion fraction.
    pub p3_exceed: f64,
}

/// Fixed CSV header of sweep payloads.
pub const SWEEP_CSV_HEADER: &str =
    "T,N,epsilon,alpha,tv_mean,tv_se,z_hat,z_se,p2_exceed,p3_exceed";

impl SweepRow {
    fn from_report(report: &RegimeReport, schedule_alpha: f64) -> Self {
        SweepRow {
            t: report.t,
            n: report.n,
            epsilon: report.epsilon,
            alpha: schedule_alpha,
            tv_mean: report.tv.value,
            tv_se: report.tv.std_error,
            z_hat: report.z.value,
            z_se: report.z.std_error,
            p2_exceed: report.p2_exceedance,
            p3_exceed: report.p3_exceedance,
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.n,
            self.epsilon,
            self.alpha,
            self.tv_mean,
            self.tv_se,
            self.z_hat,
            self.z_se,
            self.p2_exceed,
            self.p3_exceed
        )
    }
}

/// Renders rows to the sweep CSV (header always present).
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

/// Executes the sweep described by a resolved experiment: one row per
/// (schedule, radius) pair, in configuration order.
pub fn sweep_rows(resolved: &ResolvedExperiment) -> Result<Vec<SweepRow>, HarnessError> {
    let mut rows = Vec::new();
    for &(theta, alpha, _) in &resolved.schedules {
        for (i, &n) in resolved.n_list.iter().enumerate() {
            let epsilon = epsilon_schedule(n, theta, alpha)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let graph = LatticeGraph::build_box(n, (0, 0));
            let report = match resolved.kind {
                ModelKind::Rffk => {
                    let boundary =
                        resolved.fk_boundary.as_ref().expect("resolved edge model has wiring");
                    let model = EstimatorModel::Fk {
                        boundary,
                        p: resolved.p.expect("resolved edge model has probability"),
                    };
                    regime_report(
                        &graph,
                        &model,
                        resolved.temperature,
                        epsilon,
                        &resolved.seeds,
                        &resolved.plans[i],
                        StartState::Hot,
                    )?
                }
                ModelKind::Rfim => {
                    let spin = resolved.spin_boundary.expect("resolved spin model has boundary");
                    let boundary = SpinBoundary::uniform(&graph, spin)
                        .map_err(|e| HarnessError::Config(e.to_string()))?;
                    let model = EstimatorModel::Ising { boundary: &boundary };
                    regime_report(
                        &graph,
                        &model,
                        resolved.temperature,
                        epsilon,
                        &resolved.seeds,
                        &resolved.plans[i],
                        StartState::Hot,
                    )?
                }
            };
            rows.push(SweepRow::from_report(&report, alpha));
        }
    }
    Ok(rows)
}

/// Outcome of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Content key.
    pub key: String,
    /// Entry directory holding the payloads.
    pub dir: PathBuf,
    /// Whether the entry was served from the store without recomputing.
    pub cached: bool,
    /// The manifest.
    pub manifest: Manifest,
}

/// Runs (or replays from the store) the experiment described by `config`.
/// The store root is the config's output directory unless overridden.
pub fn run_experiment(
    config: &ExperimentConfig,
    store_root: Option<&Path>,
) -> Result<RunOutcome, HarnessError> {
    let resolved = config.resolve()?;
    let canonical = config.to_toml();
    let key = ResultStore::compute_key(&canonical, CODE_VERSION);
    let store = ResultStore::open(store_root.unwrap_or(&resolved.out_dir))?;

    if let Some(manifest) = store.lookup(&key) {
        return Ok(RunOutcome { dir: store.entry_dir(&key), key, cached: true, manifest });
    }

    let rows = sweep_rows(&resolved)?;
    let csv = sweep_csv(&rows);
    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("config.toml".to_string(), canonical.into_bytes()),
        ("sweep.csv".to_string(), csv.clone().into_bytes()),
    ];
    if resolved.plot && !rows.is_empty() {
        let svg = render_svg_from_csv(&csv)?;
        files.push(("sweep.svg".to_string(), svg.into_bytes()));
    }
    let provenance = Provenance {
        model: match resolved.kind {
            ModelKind::Rfim => "rfim".into(),
            ModelKind::Rffk => "rffk".into(),
        },
        boundary: config.model.boundary.clone(),
        temperature: resolved.temperature,
        p: resolved.p,
        schedules: resolved.schedules.clone(),
        n_list: resolved.n_list.clone(),
        plans: resolved.plans.clone(),
        disorder_seeds: resolved.seeds.clone(),
    };
    let manifest = store.insert(&key, &files, provenance)?;
    Ok(RunOutcome { dir: store.entry_dir(&key), key, cached: false, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{
        AlphaSpec, ChainSection, DisorderSection, GridSection, GuardSection, ModelSection,
        OutputSection, ScheduleSection,
    };
    use std::time::UNIX_EPOCH;

    fn tiny_config(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            model: ModelSection {
                kind: ModelKind::Rffk,
                boundary: "free".into(),
                temperature: Some(2.0),
                regime: None,
                p: None,
            },
            schedule: vec![ScheduleSection {
                theta: 1.0,
                alpha: AlphaSpec::Value(0.5),
                label: None,
            }],
            grid: GridSection { n_list: vec![1] },
            chain: ChainSection {
                burn_in: Some(40),
                thinning: 1,
                samples: 30,
                replicas: 2,
                seed_base: 2,
            },
            disorder: DisorderSection { seeds: 2, seed_list: None },
            output: OutputSection { dir: dir.to_path_buf(), plot: true },
            guards: GuardSection::default(),
        }
    }

    #[test]
    fn run_persists_and_caches() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_config(tmp.path());
        let first = run_experiment(&cfg, None).unwrap();
        assert!(!first.cached);
        let csv_path = first.dir.join("sweep.csv");
        let csv1 = fs::read(&csv_path).unwrap();
        assert!(String::from_utf8_lossy(&csv1).starts_with(SWEEP_CSV_HEADER));
        assert!(first.dir.join("sweep.svg").exists());
        assert!(first.dir.join("config.toml").exists());
        let mtime1 = fs::metadata(&csv_path).unwrap().modified().unwrap();

        let second = run_experiment(&cfg, None).unwrap();
        assert!(second.cached);
        assert_eq!(second.key, first.key);
        assert_eq!(second.manifest, first.manifest);
        let mtime2 = fs::metadata(&csv_path).unwrap().modified().unwrap();
        assert_eq!(
            mtime1.duration_since(UNIX_EPOCH).unwrap(),
            mtime2.duration_since(UNIX_EPOCH).unwrap(),
            "cache hit must not rewrite payloads"
        );
        assert_eq!(fs::read(&csv_path).unwrap(), csv1);
    }

    #[test]
    fn empty_grid_is_a_no_op_entry() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(tmp.path());
        cfg.grid.n_list = vec![];
        let outcome = run_experiment(&cfg, None).unwrap();
        let csv = fs::read_to_string(outcome.dir.join("sweep.csv")).unwrap();
        assert_eq!(csv, format!("{SWEEP_CSV_HEADER}\n"));
        assert!(!outcome.dir.join("sweep.svg").exists());
    }

    #[test]
    fn distinct_configs_get_distinct_keys() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_config(tmp.path());
        let mut other = cfg.clone();
        other.chain.seed_base = 3;
        assert_ne!(
            ResultStore::compute_key(&cfg.to_toml(), CODE_VERSION),
            ResultStore::compute_key(&other.to_toml(), CODE_VERSION)
        );
        // And the same config under another code version is a new entry.
        assert_ne!(
            ResultStore::compute_key(&cfg.to_toml(), CODE_VERSION),
            ResultStore::compute_key(&cfg.to_toml(), "other-version")
        );
    }

    #[test]
    fn insert_refuses_overwrite() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_config(tmp.path());
        let outcome = run_experiment(&cfg, None).unwrap();
        let store = ResultStore::open(tmp.path()).unwrap();
        let err = store.insert(&outcome.key, &[], outcome.manifest.provenance.clone());
        assert!(err.is_err());
    }

    #[test]
    fn guard_violation_aborts_before_any_output() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(tmp.path());
        cfg.guards.max_total_sweeps = 1;
        let err = run_experiment(&cfg, None).unwrap_err();
        assert!(matches!(err, HarnessError::Guard(_)));
        assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
    }
}
