//! The benchmark grid: one dataset per (n, shots) cell, every estimator run
//! on that same dataset, metrics taken against the ideal GHZ target and the
//! cell's MLE reconstruction.
//!
//! The entire run is a pure function of [`BenchConfig`]: the cell seed is
//! derived from `(master_seed, n, shots)`, each estimator's restart stream
//! from `(cell_seed, role)`, and cells are independent, so the emitted
//! artifacts are byte-identical across runs and schedules. Wall-clock
//! timings are logged to stderr and only enter the artifacts when
//! `record_timings` is set (which gives up byte determinism).

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qst_core::estimators::{
    fit_gibbs, mle_fit, psd_estimate, EstimatorKind, OptimizerConfig, ReconstructionResult,
};
use qst_core::metrics::{mle_agreement, residuals, target_fidelity, top_k_residuals};
use qst_core::opsets::{OperatorSet, SetTag};
use qst_core::rng::mix;
use qst_core::sim::{generate_dataset, Dataset, NoiseModel};
use qst_core::state::DensityMatrix;

use crate::io::{fmt_float, write_atomic};

/// Exact column order of `results.csv`.
pub const CSV_HEADER: &str =
    "n,shots,estimator,params,fidelity_target,agreement_mle,observable_error,loss,wall_ms,status";

/// Noise used for a benchmark cell: either one fixed model for every n, or
/// the per-n calibrated depolarizing defaults.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NoiseSpec {
    /// The literal string `"calibrated"`.
    Named(String),
    Fixed(NoiseModel),
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Named("calibrated".to_string())
    }
}

/// Depolarizing strengths chosen so the simulated MLE fidelity sits at the
/// level the grid is normally compared against (about 0.77 at n = 3, 0.56
/// at n = 4, 0.57 at n = 5 through the affine identity 1 - p(1 - 2^-n)).
pub fn calibrated_noise(n: usize) -> NoiseModel {
    let depolarizing = match n {
        3 => 0.263,
        4 => 0.471,
        5 => 0.449,
        _ => 0.2,
    };
    NoiseModel {
        depolarizing,
        dephasing: 0.0,
        readout: 0.0,
    }
}

impl NoiseSpec {
    pub fn for_n(&self, n: usize) -> anyhow::Result<NoiseModel> {
        match self {
            NoiseSpec::Fixed(model) => {
                model.validate()?;
                Ok(*model)
            }
            NoiseSpec::Named(name) if name == "calibrated" => Ok(calibrated_noise(n)),
            NoiseSpec::Named(name) => {
                anyhow::bail!("unknown noise spec {name:?}; expected \"calibrated\" or an object")
            }
        }
    }
}

/// Full description of a benchmark run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub qubit_counts: Vec<usize>,
    pub shot_counts: Vec<u64>,
    pub estimators: Vec<EstimatorKind>,
    pub noise: NoiseSpec,
    pub master_seed: u64,
    pub restarts: usize,
    pub residual_k: usize,
    pub emit_csv: bool,
    pub emit_json: bool,
    /// Real wall times in the artifacts (sacrifices byte determinism).
    pub record_timings: bool,
    /// Substitute rosters for the G4 slot, keyed by qubit count. Rows keep
    /// the G4 label; the params column reflects the substituted size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g4_labels: Option<BTreeMap<usize, Vec<String>>>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            qubit_counts: vec![3, 4, 5],
            shot_counts: vec![256, 1024, 2048],
            estimators: vec![
                EstimatorKind::Mle,
                EstimatorKind::Psd,
                EstimatorKind::Gibbs(SetTag::G1),
                EstimatorKind::Gibbs(SetTag::G2),
                EstimatorKind::Gibbs(SetTag::G3),
                EstimatorKind::Gibbs(SetTag::G4),
            ],
            noise: NoiseSpec::default(),
            master_seed: 0,
            restarts: 10,
            residual_k: 5,
            emit_csv: true,
            emit_json: true,
            record_timings: false,
            g4_labels: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.qubit_counts.is_empty() || self.shot_counts.is_empty() {
            anyhow::bail!("qubit_counts and shot_counts must be non-empty");
        }
        if self.estimators.is_empty() {
            anyhow::bail!("at least one estimator is required");
        }
        if self
            .estimators
            .contains(&EstimatorKind::Gibbs(SetTag::Custom))
        {
            anyhow::bail!("the benchmark grid only runs named estimators, not CUSTOM");
        }
        if self.restarts == 0 || self.residual_k == 0 {
            anyhow::bail!("restarts and residual_k must be positive");
        }
        for &n in &self.qubit_counts {
            if !(1..=qst_core::pauli::DENSE_QUBIT_CAP).contains(&n) {
                anyhow::bail!("qubit count {n} outside the supported range");
            }
            self.noise.for_n(n)?;
        }
        if let Some(overrides) = &self.g4_labels {
            for (&n, labels) in overrides {
                OperatorSet::custom(labels, n)
                    .map_err(|e| anyhow::anyhow!("g4_labels[{n}]: {e}"))?;
            }
        }
        Ok(())
    }

    /// Estimators actually run in a cell (G4 needs at least 3 qubits).
    pub fn estimators_for(&self, n: usize) -> Vec<EstimatorKind> {
        self.estimators
            .iter()
            .copied()
            .filter(|kind| !(matches!(kind, EstimatorKind::Gibbs(SetTag::G4)) && n < 3))
            .collect()
    }

    /// Seed of the dataset in cell (n, shots).
    pub fn cell_seed(&self, n: usize, shots: u64) -> u64 {
        mix(mix(self.master_seed, n as u64), shots)
    }

    /// The operator set backing the G4 slot at this size.
    pub fn g4_set(&self, n: usize) -> qst_core::Result<OperatorSet> {
        if let Some(labels) = self.g4_labels.as_ref().and_then(|m| m.get(&n)) {
            OperatorSet::custom(labels, n)
        } else {
            OperatorSet::g4(n)
        }
    }
}

/// One row of `results.csv` / `results.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub shots: u64,
    pub estimator: String,
    pub params: usize,
    pub fidelity_target: Option<f64>,
    pub agreement_mle: Option<f64>,
    pub observable_error: Option<f64>,
    pub loss: Option<f64>,
    pub wall_ms: f64,
    pub status: String,
    pub seed: u64,
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.shots,
            self.estimator,
            self.params,
            fmt_float(self.fidelity_target),
            fmt_float(self.agreement_mle),
            fmt_float(self.observable_error),
            fmt_float(self.loss),
            fmt_float(Some(self.wall_ms)),
            self.status
        )
    }
}

/// Everything produced by one (n, shots) cell.
struct CellOutput {
    rows: Vec<ResultRow>,
    residual_files: Vec<(String, String)>,
}

fn error_row(
    config: &BenchConfig,
    n: usize,
    shots: u64,
    kind: EstimatorKind,
    message: &str,
) -> ResultRow {
    ResultRow {
        n,
        shots,
        estimator: kind.to_string(),
        params: 0,
        fidelity_target: None,
        agreement_mle: None,
        observable_error: None,
        loss: None,
        wall_ms: 0.0,
        status: format!("error: {}", message.replace(',', ";")),
        seed: config.cell_seed(n, shots),
    }
}

fn params_for(kind: EstimatorKind, n: usize, result: &ReconstructionResult) -> usize {
    match kind {
        // the full methods span the whole non-identity operator space
        EstimatorKind::Mle | EstimatorKind::Psd => 4usize.pow(n as u32) - 1,
        EstimatorKind::Gibbs(_) => result.params.len(),
    }
}

fn run_estimator(
    config: &BenchConfig,
    kind: EstimatorKind,
    dataset: &Dataset,
    base: &OptimizerConfig,
    cell_seed: u64,
    prior_mle: Option<&ReconstructionResult>,
) -> qst_core::Result<ReconstructionResult> {
    let opt = base.with_seed(mix(cell_seed, kind.role()));
    match kind {
        EstimatorKind::Mle => {
            if let Some(mle) = prior_mle {
                return Ok(mle.clone());
            }
            mle_fit(dataset, &opt)
        }
        EstimatorKind::Psd => psd_estimate(dataset),
        EstimatorKind::Gibbs(SetTag::G4) => {
            fit_gibbs(&config.g4_set(dataset.n)?, dataset, &opt)
        }
        EstimatorKind::Gibbs(tag) => {
            let ops = OperatorSet::from_tag(tag, dataset.n)?;
            fit_gibbs(&ops, dataset, &opt)
        }
    }
}

fn run_cell(config: &BenchConfig, n: usize, shots: u64) -> CellOutput {
    let cell_seed = config.cell_seed(n, shots);
    let estimators = config.estimators_for(n);
    let setup = || -> anyhow::Result<(DensityMatrix, Dataset, OperatorSet)> {
        let noise = config.noise.for_n(n)?;
        let target = DensityMatrix::ghz(n)?;
        let full = OperatorSet::full(n)?;
        let dataset = generate_dataset(&target, "ghz", &full, shots, &noise, cell_seed)?;
        Ok((target, dataset, full))
    };
    let (target, dataset, probe) = match setup() {
        Ok(parts) => parts,
        Err(err) => {
            // the whole cell is unusable; report every planned row as failed
            let rows = estimators
                .iter()
                .map(|&kind| error_row(config, n, shots, kind, &err.to_string()))
                .collect();
            return CellOutput {
                rows,
                residual_files: Vec::new(),
            };
        }
    };

    let base = OptimizerConfig {
        restarts: config.restarts,
        ..OptimizerConfig::default()
    };

    // the MLE reference comes first so agreement/error metrics can use it;
    // if it fails, the cell still runs with those metrics left empty
    let started = std::time::Instant::now();
    let mle = mle_fit(&dataset, &base.with_seed(mix(cell_seed, EstimatorKind::Mle.role())));
    let mle_wall = started.elapsed().as_secs_f64() * 1e3;
    eprintln!("[bench] n={n} shots={shots}: MLE reference done in {mle_wall:.0}ms");
    if let Err(err) = &mle {
        eprintln!("[bench] n={n} shots={shots}: MLE reference failed: {err}");
    }
    let mle = mle.ok();

    let mut rows = Vec::with_capacity(estimators.len());
    let mut residual_files = Vec::new();
    for kind in estimators {
        if kind == EstimatorKind::Mle && mle.is_none() {
            rows.push(error_row(config, n, shots, kind, "MLE fit failed"));
            continue;
        }
        let clock = std::time::Instant::now();
        let outcome = run_estimator(config, kind, &dataset, &base, cell_seed, mle.as_ref());
        // the MLE row reuses the reference fit, so report that fit's time
        let wall = if kind == EstimatorKind::Mle {
            mle_wall
        } else {
            clock.elapsed().as_secs_f64() * 1e3
        };
        match outcome {
            Ok(result) => {
                let fidelity_target = target_fidelity(&result.state, &target).ok();
                let (agreement, error) = match (&mle, kind) {
                    (_, EstimatorKind::Mle) => (Some(1.0), Some(0.0)),
                    (Some(mle), _) => {
                        let agreement = mle_agreement(&result.state, &mle.state).ok();
                        let error = residuals(&mle.state, &result.state, &probe)
                            .ok()
                            .map(|entries| qst_core::metrics::mean_square(&entries));
                        (agreement, error)
                    }
                    (None, _) => (None, None),
                };
                if let (EstimatorKind::Gibbs(tag), Some(mle)) = (kind, &mle) {
                    if let Ok(entries) = residuals(&mle.state, &result.state, &probe) {
                        let top = top_k_residuals(&entries, config.residual_k);
                        let mut csv = String::from("pauli,delta\n");
                        for entry in top {
                            csv.push_str(&format!(
                                "{},{}\n",
                                entry.pauli.label(),
                                fmt_float(Some(entry.delta))
                            ));
                        }
                        residual_files
                            .push((format!("residuals_n{n}_s{shots}_{tag}.csv"), csv));
                    }
                }
                let status = if result.warnings.is_empty() {
                    "ok".to_string()
                } else {
                    format!("ok ({})", result.warnings.join("; ").replace(',', ";"))
                };
                rows.push(ResultRow {
                    n,
                    shots,
                    estimator: kind.to_string(),
                    params: params_for(kind, n, &result),
                    fidelity_target,
                    agreement_mle: agreement,
                    observable_error: error,
                    loss: Some(result.final_loss),
                    wall_ms: if config.record_timings { wall } else { 0.0 },
                    status,
                    seed: cell_seed,
                });
            }
            Err(err) => rows.push(error_row(config, n, shots, kind, &err.to_string())),
        }
    }
    CellOutput {
        rows,
        residual_files,
    }
}

/// Run the whole grid and write `results.csv`, `results.json`,
/// `scaling.csv`, and per-cell residual files into `out_dir`. Cells execute
/// in parallel; the artifacts depend only on the config.
pub fn run_benchmark(config: &BenchConfig, out_dir: &Path) -> anyhow::Result<Vec<ResultRow>> {
    config.validate()?;
    let cells: Vec<(usize, u64)> = config
        .qubit_counts
        .iter()
        .flat_map(|&n| config.shot_counts.iter().map(move |&s| (n, s)))
        .collect();

    let outputs: Vec<CellOutput> = cells
        .par_iter()
        .map(|&(n, shots)| run_cell(config, n, shots))
        .collect();

    let rows: Vec<ResultRow> = outputs.iter().flat_map(|c| c.rows.clone()).collect();

    if config.emit_csv {
        let mut csv = String::from(CSV_HEADER);
        csv.push('\n');
        for row in &rows {
            csv.push_str(&row.to_csv_line());
            csv.push('\n');
        }
        write_atomic(&out_dir.join("results.csv"), &csv)?;

        // parameter-efficiency data: fidelity against parameter count per n
        let mut scaling = String::from("n,estimator,params,shots,fidelity_target\n");
        for row in &rows {
            scaling.push_str(&format!(
                "{},{},{},{},{}\n",
                row.n,
                row.estimator,
                row.params,
                row.shots,
                fmt_float(row.fidelity_target)
            ));
        }
        write_atomic(&out_dir.join("scaling.csv"), &scaling)?;
    }

    if config.emit_json {
        let doc = serde_json::json!({
            "config": config,
            "rows": rows,
        });
        write_atomic(
            &out_dir.join("results.json"),
            &serde_json::to_string_pretty(&doc)?,
        )?;
    }

    for output in &outputs {
        for (name, contents) in &output.residual_files {
            write_atomic(&out_dir.join(name), contents)?;
        }
    }
    Ok(rows)
}
