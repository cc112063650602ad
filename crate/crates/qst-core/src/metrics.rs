//! Evaluation metrics: target fidelity, agreement with the MLE reference,
//! observable reconstruction error, and per-operator residual ranking.

use crate::opsets::OperatorSet;
use crate::pauli::PauliString;
use crate::state::{fidelity, DensityMatrix};
use crate::{Error, Result};

/// Per-operator mismatch `delta = <P>_reference - <P>_model`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualEntry {
    pub pauli: PauliString,
    pub delta: f64,
}

/// Fidelity of a reconstruction against the ideal target state.
pub fn target_fidelity(result_state: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    fidelity(result_state, target)
}

/// Fidelity of a model state against the MLE reconstruction.
pub fn mle_agreement(model_state: &DensityMatrix, mle_state: &DensityMatrix) -> Result<f64> {
    fidelity(model_state, mle_state)
}

/// One residual per probe operator, in the probe set's order. The reference
/// state (usually the MLE) comes first: `delta = <P>_ref - <P>_model`.
pub fn residuals(
    reference: &DensityMatrix,
    model: &DensityMatrix,
    probe_set: &OperatorSet,
) -> Result<Vec<ResidualEntry>> {
    if probe_set.is_empty() {
        return Err(Error::EmptyOperatorSet);
    }
    if reference.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            left: reference.dim(),
            right: model.dim(),
        });
    }
    probe_set
        .iter()
        .map(|p| {
            let delta = reference.expectation(p)? - model.expectation(p)?;
            Ok(ResidualEntry {
                pauli: p.clone(),
                delta,
            })
        })
        .collect()
}

/// Mean squared residual over the probe set (shared computation with
/// [`residuals`], so the two agree exactly).
pub fn observable_error(
    reference: &DensityMatrix,
    model: &DensityMatrix,
    probe_set: &OperatorSet,
) -> Result<f64> {
    let entries = residuals(reference, model, probe_set)?;
    Ok(mean_square(&entries))
}

/// Mean of squared deltas.
pub fn mean_square(entries: &[ResidualEntry]) -> f64 {
    if entries.is_empty() {
        return 0.0;
    }
    entries.iter().map(|e| e.delta * e.delta).sum::<f64>() / entries.len() as f64
}

/// The k largest residuals by magnitude; ties break toward the
/// lexicographically smaller label.
pub fn top_k_residuals(entries: &[ResidualEntry], k: usize) -> Vec<ResidualEntry> {
    let mut sorted = entries.to_vec();
    sorted.sort_by(|a, b| {
        b.delta
            .abs()
            .total_cmp(&a.delta.abs())
            .then_with(|| a.pauli.cmp(&b.pauli))
    });
    sorted.truncate(k);
    sorted
}
