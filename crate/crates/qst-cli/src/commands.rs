//! Implementations behind the `qst` subcommands. Each takes plain values
//! so the logic is testable without spawning the binary.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};

use qst_core::estimators::{
    fit_gibbs, mle_fit, psd_estimate, EstimatorKind, OptimizerConfig, ResultJson, ResultMetrics,
};
use qst_core::metrics::{
    mle_agreement, residuals, target_fidelity, top_k_residuals,
};
use qst_core::opsets::{OperatorSet, SetTag};
use qst_core::sim::{generate_dataset, Dataset, NoiseModel};
use qst_core::state::DensityMatrix;

use crate::io::{fmt_float, write_atomic};

/// Resolve `--set`: a named tag (`g1`..`g4`, `full`) or a path to a JSON
/// array of labels.
pub fn resolve_set(spec: &str, n: usize) -> anyhow::Result<OperatorSet> {
    if let Ok(tag) = spec.parse::<SetTag>() {
        if tag != SetTag::Custom {
            return Ok(OperatorSet::from_tag(tag, n)?);
        }
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!("--set {spec:?} is neither a known tag nor an existing file");
    }
    load_custom_set(path, n)
}

/// Read a JSON array of Pauli labels as a CUSTOM set.
pub fn load_custom_set(path: &Path, n: usize) -> anyhow::Result<OperatorSet> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading operator list {}", path.display()))?;
    let labels: Vec<String> =
        serde_json::from_str(&text).context("operator list must be a JSON array of strings")?;
    Ok(OperatorSet::custom(&labels, n)?)
}

fn build_state(state_tag: &str, n: usize) -> anyhow::Result<DensityMatrix> {
    match state_tag {
        "ghz" => Ok(DensityMatrix::ghz(n)?),
        "mixed" => Ok(DensityMatrix::maximally_mixed(n)?),
        other => bail!("unknown state {other:?}; supported: ghz, mixed"),
    }
}

/// `qst simulate`: write a sampled dataset.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    n: usize,
    state_tag: &str,
    set_spec: &str,
    shots: u64,
    noise: NoiseModel,
    seed: u64,
    out: &Path,
) -> anyhow::Result<()> {
    let state = build_state(state_tag, n)?;
    let operators = resolve_set(set_spec, n)?;
    let dataset = generate_dataset(&state, state_tag, &operators, shots, &noise, seed)?;
    write_atomic(out, &dataset.to_json_string()?)?;
    eprintln!(
        "[simulate] wrote {} records ({} shots each) to {}",
        dataset.records.len(),
        shots,
        out.display()
    );
    Ok(())
}

pub fn load_dataset(path: &Path) -> anyhow::Result<Dataset> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading dataset {}", path.display()))?;
    Ok(Dataset::from_json_str(&text)?)
}

pub fn load_result(path: &Path) -> anyhow::Result<ResultJson> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading result {}", path.display()))?;
    Ok(ResultJson::from_json_str(&text)?)
}

/// `qst reconstruct`: run one estimator on a dataset file and write the
/// result document, with metrics against an optional target / reference.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct(
    dataset_path: &Path,
    estimator: &str,
    ops_path: Option<&Path>,
    restarts: usize,
    seed: u64,
    target: Option<&str>,
    reference_path: Option<&Path>,
    out: &Path,
) -> anyhow::Result<()> {
    let dataset = load_dataset(dataset_path)?;
    let kind: EstimatorKind = estimator.parse()?;
    let config = OptimizerConfig::default()
        .with_restarts(restarts)
        .with_seed(seed);

    let result = match kind {
        EstimatorKind::Mle => mle_fit(&dataset, &config)?,
        EstimatorKind::Psd => psd_estimate(&dataset)?,
        EstimatorKind::Gibbs(SetTag::Custom) => {
            let Some(path) = ops_path else {
                bail!("--estimator custom requires --ops <file>");
            };
            let ops = load_custom_set(path, dataset.n)?;
            fit_gibbs(&ops, &dataset, &config)?
        }
        EstimatorKind::Gibbs(tag) => {
            let ops = OperatorSet::from_tag(tag, dataset.n)?;
            fit_gibbs(&ops, &dataset, &config)?
        }
    };

    let mut metrics = ResultMetrics::default();
    if let Some(tag) = target {
        let target_state = build_state(tag, dataset.n)?;
        metrics.fidelity_target = Some(target_fidelity(&result.state, &target_state)?);
    }
    if let Some(path) = reference_path {
        let reference = load_result(path)?;
        if reference.n != dataset.n {
            bail!(
                "reference has n = {}, dataset has n = {}",
                reference.n,
                dataset.n
            );
        }
        let reference_state = reference.state_matrix()?;
        metrics.agreement_mle = Some(mle_agreement(&result.state, &reference_state)?);
        let probe = OperatorSet::full(dataset.n)?;
        let entries = residuals(&reference_state, &result.state, &probe)?;
        metrics.observable_error = Some(qst_core::metrics::mean_square(&entries));
    }
    let has_metrics = metrics.fidelity_target.is_some() || metrics.agreement_mle.is_some();
    let doc = ResultJson::from_result(&result, has_metrics.then_some(metrics));
    write_atomic(out, &doc.to_json_string()?)?;
    eprintln!(
        "[reconstruct] {} loss {:.3e}, wrote {}",
        result.estimator,
        result.final_loss,
        out.display()
    );
    Ok(())
}

/// `qst evaluate`: metrics for an existing result file.
pub fn evaluate(
    result_path: &Path,
    reference_path: Option<&Path>,
    target: Option<&str>,
    probe_spec: &str,
) -> anyhow::Result<String> {
    if reference_path.is_none() && target.is_none() {
        bail!("evaluate needs --reference and/or --target");
    }
    let result = load_result(result_path)?;
    let state = result.state_matrix()?;
    let mut metrics = ResultMetrics::default();
    if let Some(tag) = target {
        let target_state = build_state(tag, result.n)?;
        metrics.fidelity_target = Some(target_fidelity(&state, &target_state)?);
    }
    if let Some(path) = reference_path {
        let reference = load_result(path)?;
        if reference.n != result.n {
            bail!("reference has n = {}, result has n = {}", reference.n, result.n);
        }
        let reference_state = reference.state_matrix()?;
        metrics.agreement_mle = Some(mle_agreement(&state, &reference_state)?);
        let probe = resolve_set(probe_spec, result.n)?;
        let entries = residuals(&reference_state, &state, &probe)?;
        metrics.observable_error = Some(qst_core::metrics::mean_square(&entries));
    }
    let doc = serde_json::json!({
        "estimator": result.estimator,
        "n": result.n,
        "metrics": metrics,
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// `qst residuals`: top-k residual CSV between a reference (MLE) result and
/// a model result.
pub fn residuals_csv(
    reference_path: &Path,
    model_path: &Path,
    k: usize,
    probe_spec: &str,
) -> anyhow::Result<String> {
    let reference = load_result(reference_path)?;
    let model = load_result(model_path)?;
    if reference.n != model.n {
        bail!(
            "reference has n = {}, model has n = {}",
            reference.n,
            model.n
        );
    }
    let probe = resolve_set(probe_spec, reference.n)?;
    let entries = residuals(
        &reference.state_matrix()?,
        &model.state_matrix()?,
        &probe,
    )?;
    let top = top_k_residuals(&entries, k);
    let mut csv = String::from("pauli,delta\n");
    for entry in top {
        csv.push_str(&format!(
            "{},{}\n",
            entry.pauli.label(),
            fmt_float(Some(entry.delta))
        ));
    }
    Ok(csv)
}
