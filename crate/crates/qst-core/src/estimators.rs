//! Reconstruction engines.
//!
//! Three routes from measurement data to a density matrix:
//!
//! 1. **Linear inversion + PSD projection** — synthesize the Pauli-basis
//!    expansion directly from the estimates, then project onto the valid
//!    states (tag `PSD`).
//! 2. **Least-squares MLE** — parameterize `rho = T^dag T / Tr(T^dag T)`
//!    with a lower-triangular `T` and minimize the squared deviation from
//!    the full measured Pauli vector (tag `MLE`).
//! 3. **Structured Gibbs fit** — `rho = exp(-sum_k lambda_k P_k) / Z` over
//!    a restricted operator set, minimizing the same squared loss on that
//!    set only (tags `G1`..`G4`, `FULL`, `CUSTOM`).
//!
//! Both iterative fits run the box-constrained quasi-Newton minimizer in
//! [`crate::optim`] from multiple seeded starts and keep the lowest loss;
//! ties within [`RESTART_TIE_TOL`] go to the earlier restart, so results
//! are deterministic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{eigh, frechet_in_eigenbasis, EXP_EIG_LIMIT};
use crate::opsets::{OperatorSet, SetTag};
use crate::optim::lbfgs_minimize;
use crate::pauli::{enumerate, ColumnAction, PauliString};
use crate::rng::substream;
use crate::sim::Dataset;
use crate::state::{from_pauli_vector, DensityMatrix};
use crate::{C64, CMatrix, Error, Result};

/// Hard ceiling on the lambda box bound (keeps `exp` spectra finite).
pub const LAMBDA_BOUND_MAX: f64 = 350.0;
/// Box half-width for the Cholesky-factor parameters.
pub const MLE_PARAM_BOUND: f64 = 10.0;
/// Loss gaps below this are treated as ties between restarts.
pub const RESTART_TIE_TOL: f64 = 1e-12;

/// Shared settings for the iterative fits.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub lambda_bound: f64,
    pub lbfgs_memory: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-8,
            restarts: 10,
            seed: 0,
            lambda_bound: 30.0,
            lbfgs_memory: 10,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.restarts == 0 || self.lbfgs_memory == 0 {
            return Err(Error::InvalidConfig(
                "max_iters, restarts, and lbfgs_memory must be positive".into(),
            ));
        }
        if self.grad_tol <= 0.0 || self.grad_tol.is_nan() {
            return Err(Error::InvalidConfig("grad_tol must be positive".into()));
        }
        if self.lambda_bound.is_nan()
            || self.lambda_bound <= 0.0
            || self.lambda_bound > LAMBDA_BOUND_MAX
        {
            return Err(Error::InvalidConfig(format!(
                "lambda_bound must lie in (0, {LAMBDA_BOUND_MAX}]"
            )));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

/// Which reconstruction produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Mle,
    Psd,
    Gibbs(SetTag),
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::Mle => f.write_str("MLE"),
            EstimatorKind::Psd => f.write_str("PSD"),
            EstimatorKind::Gibbs(tag) => write!(f, "{tag}"),
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MLE" => Ok(EstimatorKind::Mle),
            "PSD" => Ok(EstimatorKind::Psd),
            other => Ok(EstimatorKind::Gibbs(other.parse()?)),
        }
    }
}

impl Serialize for EstimatorKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EstimatorKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl EstimatorKind {
    /// Stable role index used to derive per-estimator RNG sub-streams.
    pub fn role(&self) -> u64 {
        match self {
            EstimatorKind::Mle => 1,
            EstimatorKind::Psd => 2,
            EstimatorKind::Gibbs(SetTag::G1) => 3,
            EstimatorKind::Gibbs(SetTag::G2) => 4,
            EstimatorKind::Gibbs(SetTag::G3) => 5,
            EstimatorKind::Gibbs(SetTag::G4) => 6,
            EstimatorKind::Gibbs(SetTag::Full) => 7,
            EstimatorKind::Gibbs(SetTag::Custom) => 8,
        }
    }
}

/// Fitted parameters attached to a [`ReconstructionResult`].
#[derive(Clone, Debug, PartialEq)]
pub enum FitParams {
    /// The PSD projection has no free parameters.
    None,
    /// Gibbs coefficients, aligned with the model's operator list.
    Lambdas(Vec<f64>),
    /// Cholesky-factor entries in the layout of [`CholeskyParams`].
    Cholesky(Vec<f64>),
}

impl FitParams {
    pub fn len(&self) -> usize {
        match self {
            FitParams::None => 0,
            FitParams::Lambdas(v) | FitParams::Cholesky(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Output of any estimator.
#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub estimator: EstimatorKind,
    pub state: DensityMatrix,
    pub params: FitParams,
    /// For Gibbs fits, the operator labels aligned with the lambdas.
    pub operators: Option<Vec<String>>,
    pub final_loss: f64,
    pub iterations: usize,
    pub restarts_used: usize,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
}

/// A Gibbs model: restricted operator set plus one coefficient each.
#[derive(Clone, Debug)]
pub struct GibbsModel {
    pub ops: OperatorSet,
    pub lambdas: Vec<f64>,
}

impl GibbsModel {
    /// Checked constructor: one coefficient per operator, all within
    /// `bound` in magnitude.
    pub fn validated(ops: OperatorSet, lambdas: Vec<f64>, bound: f64) -> Result<Self> {
        if ops.len() != lambdas.len() {
            return Err(Error::DimensionMismatch {
                left: ops.len(),
                right: lambdas.len(),
            });
        }
        for (p, &l) in ops.iter().zip(&lambdas) {
            if l.abs() > bound {
                return Err(Error::LambdaOutOfBounds {
                    label: p.label(),
                    value: l,
                    bound,
                });
            }
        }
        Ok(Self { ops, lambdas })
    }
}

/// Squared-deviation loss of a state against a dataset's records.
pub fn dataset_loss(state: &DensityMatrix, dataset: &Dataset) -> Result<f64> {
    let mut loss = 0.0;
    for record in &dataset.records {
        let predicted = state.expectation(&record.pauli)?;
        loss += (predicted - record.estimate).powi(2);
    }
    Ok(loss)
}

// ---------------------------------------------------------------------------
// linear inversion + PSD projection
// ---------------------------------------------------------------------------

/// Raw Pauli-basis synthesis of a dataset.
#[derive(Clone, Debug)]
pub struct LinearInversion {
    /// `(1/2^n)(I + sum m_P P)`; Hermitian, generally not PSD.
    pub matrix: CMatrix,
    /// Smallest eigenvalue; negative values flag a non-physical estimate.
    pub min_eigenvalue: f64,
    /// Operators without a record, treated as coefficient zero.
    pub missing: Vec<PauliString>,
}

/// Synthesize the density-matrix estimate directly from the measured Pauli
/// coefficients. Operators absent from the dataset contribute zero and are
/// reported in `missing`.
pub fn linear_inversion(dataset: &Dataset) -> Result<LinearInversion> {
    dataset.validate()?;
    let map = dataset.estimate_map();
    let mut coefficients = BTreeMap::new();
    let mut missing = Vec::new();
    for p in enumerate(dataset.n, false) {
        match map.get(&p) {
            Some(&value) => {
                coefficients.insert(p, value);
            }
            None => missing.push(p),
        }
    }
    let matrix = from_pauli_vector(&coefficients, dataset.n)?;
    let min_eigenvalue = eigh(&matrix)?.eigenvalues.min();
    Ok(LinearInversion {
        matrix,
        min_eigenvalue,
        missing,
    })
}

/// Linear inversion followed by projection onto the closest valid state.
pub fn psd_estimate(dataset: &Dataset) -> Result<ReconstructionResult> {
    let start = Instant::now();
    let inversion = linear_inversion(dataset)?;
    let state = DensityMatrix::project_from(&inversion.matrix)?;
    let final_loss = dataset_loss(&state, dataset)?;
    let mut warnings = Vec::new();
    if !inversion.missing.is_empty() {
        warnings.push(format!(
            "{} operators had no record and were treated as zero",
            inversion.missing.len()
        ));
    }
    if inversion.min_eigenvalue < 0.0 {
        warnings.push(format!(
            "linear inversion was non-physical (min eigenvalue {:.3e})",
            inversion.min_eigenvalue
        ));
    }
    Ok(ReconstructionResult {
        estimator: EstimatorKind::Psd,
        state,
        params: FitParams::None,
        operators: None,
        final_loss,
        iterations: 0,
        restarts_used: 0,
        wall_time: start.elapsed(),
        warnings,
    })
}

// ---------------------------------------------------------------------------
// structured Gibbs fit
// ---------------------------------------------------------------------------

struct GibbsEvaluator {
    dim: usize,
    actions: Vec<ColumnAction>,
    targets: Vec<f64>,
}

impl GibbsEvaluator {
    fn hamiltonian(&self, lambdas: &[f64]) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim, self.dim);
        for (action, &l) in self.actions.iter().zip(lambdas) {
            action.add_scaled_to(&mut h, C64::new(l, 0.0));
        }
        h
    }

    /// Loss and exact gradient of
    /// `sum_k (Tr(rho(lambda) P_k) - m_k)^2`,
    /// `rho = exp(-H)/Tr(exp(-H))`, `H = sum_k lambda_k P_k`.
    ///
    /// The gradient costs one eigendecomposition plus `O(K d^2)`: with
    /// `W = sum_k 2 r_k (P_k - t_k I)` the chain rule collapses to
    /// `grad_j = -Tr(P_j Dexp(-H)[W]) / Z`, using that the derivative of
    /// `exp` at a Hermitian point is self-adjoint.
    fn loss_grad(&self, lambdas: &[f64]) -> Result<(f64, Vec<f64>)> {
        let h = self.hamiltonian(lambdas);
        let eig = eigh(&h)?;
        let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, &w| m.max(w.abs()));
        if max_abs > EXP_EIG_LIMIT {
            return Err(Error::ExpOverflow {
                max_abs,
                limit: EXP_EIG_LIMIT,
            });
        }
        let z: f64 = eig.eigenvalues.iter().map(|&w| (-w).exp()).sum();
        let rho = eig.apply(|w| (-w).exp() / z);

        let predicted: Vec<f64> = self
            .actions
            .iter()
            .map(|a| a.trace_product(&rho).re)
            .collect();
        let residuals: Vec<f64> = predicted
            .iter()
            .zip(&self.targets)
            .map(|(t, m)| t - m)
            .collect();
        let loss: f64 = residuals.iter().map(|r| r * r).sum();

        // adjoint direction W = sum_k 2 r_k (P_k - t_k I)
        let mut w_dir = CMatrix::zeros(self.dim, self.dim);
        let mut diag_shift = 0.0;
        for ((action, &r), &t) in self.actions.iter().zip(&residuals).zip(&predicted) {
            action.add_scaled_to(&mut w_dir, C64::new(2.0 * r, 0.0));
            diag_shift += 2.0 * r * t;
        }
        for i in 0..self.dim {
            w_dir[(i, i)] -= C64::new(diag_shift, 0.0);
        }

        // Dexp at -H shares eigenvectors with H; eigenvalues flip sign.
        let neg_w = -&eig.eigenvalues;
        let g_mat = frechet_in_eigenbasis(&neg_w, &eig.eigenvectors, &w_dir);
        let grad: Vec<f64> = self
            .actions
            .iter()
            .map(|a| -a.trace_product(&g_mat).re / z)
            .collect();
        Ok((loss, grad))
    }
}

/// Normalized Gibbs state `exp(-sum_k lambda_k P_k) / Z`.
pub fn gibbs_state(model: &GibbsModel) -> Result<DensityMatrix> {
    if model.ops.len() != model.lambdas.len() {
        return Err(Error::DimensionMismatch {
            left: model.ops.len(),
            right: model.lambdas.len(),
        });
    }
    let dim = 1usize << model.ops.n();
    let mut h = CMatrix::zeros(dim, dim);
    for (p, &l) in model.ops.iter().zip(&model.lambdas) {
        p.column_action().add_scaled_to(&mut h, C64::new(l, 0.0));
    }
    let eig = eigh(&h)?;
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, &w| m.max(w.abs()));
    if max_abs > EXP_EIG_LIMIT {
        return Err(Error::ExpOverflow {
            max_abs,
            limit: EXP_EIG_LIMIT,
        });
    }
    let z: f64 = eig.eigenvalues.iter().map(|&w| (-w).exp()).sum();
    DensityMatrix::new(eig.apply(|w| (-w).exp() / z))
}

/// Loss and gradient of the structured fit at explicit coefficients;
/// `targets` is aligned with `model.ops`.
pub fn gibbs_loss_grad(model: &GibbsModel, targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if targets.len() != model.ops.len() || model.lambdas.len() != model.ops.len() {
        return Err(Error::DimensionMismatch {
            left: targets.len(),
            right: model.ops.len(),
        });
    }
    let evaluator = GibbsEvaluator {
        dim: 1usize << model.ops.n(),
        actions: model.ops.iter().map(|p| p.column_action()).collect(),
        targets: targets.to_vec(),
    };
    evaluator.loss_grad(&model.lambdas)
}

/// Extract targets for `ops` from a dataset, failing with the full list of
/// missing labels if coverage is incomplete.
fn targets_for(ops: &OperatorSet, dataset: &Dataset) -> Result<Vec<f64>> {
    let map = dataset.estimate_map();
    let mut targets = Vec::with_capacity(ops.len());
    let mut missing = Vec::new();
    for p in ops {
        match map.get(p) {
            Some(&value) => targets.push(value),
            None => missing.push(p.label()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingOperators(missing));
    }
    Ok(targets)
}

struct RestartRun {
    x: Vec<f64>,
    loss: f64,
    iterations: usize,
    converged: bool,
    restart: usize,
}

/// Multi-start minimization shared by both fits. `start` produces the
/// initial point for a restart index; restart RNG comes from sub-stream
/// `(seed, restart)`.
fn best_of_restarts(
    mut objective: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    mut start: impl FnMut(usize) -> Vec<f64>,
    bounds: &[(f64, f64)],
    config: &OptimizerConfig,
) -> RestartRun {
    let mut best: Option<RestartRun> = None;
    for restart in 0..config.restarts {
        let x0 = start(restart);
        let run = lbfgs_minimize(
            &mut objective,
            &x0,
            bounds,
            config.max_iters,
            config.grad_tol,
            config.lbfgs_memory,
        );
        let candidate = RestartRun {
            x: run.x,
            loss: run.f,
            iterations: run.iterations,
            converged: run.converged,
            restart,
        };
        best = match best {
            None => Some(candidate),
            Some(current) if candidate.loss < current.loss - RESTART_TIE_TOL => Some(candidate),
            Some(current) => Some(current),
        };
    }
    best.expect("restarts >= 1 is enforced by OptimizerConfig::validate")
}

/// Fit a Gibbs model over `ops` to the dataset's estimates for exactly
/// those operators. Restart 0 starts at `lambda = 0`; later restarts start
/// uniformly in `[-1, 1]^K`.
pub fn fit_gibbs(
    ops: &OperatorSet,
    dataset: &Dataset,
    config: &OptimizerConfig,
) -> Result<ReconstructionResult> {
    config.validate()?;
    dataset.validate()?;
    if ops.n() != dataset.n {
        return Err(Error::DimensionMismatch {
            left: ops.n(),
            right: dataset.n,
        });
    }
    if ops.is_empty() {
        return Err(Error::EmptyOperatorSet);
    }
    let targets = targets_for(ops, dataset)?;
    let evaluator = GibbsEvaluator {
        dim: 1usize << ops.n(),
        actions: ops.iter().map(|p| p.column_action()).collect(),
        targets,
    };
    let k = ops.len();
    let bound = config.lambda_bound;
    let bounds = vec![(-bound, bound); k];
    let seed = config.seed;

    let start = Instant::now();
    let best = best_of_restarts(
        |x| match evaluator.loss_grad(x) {
            Ok(pair) => pair,
            // overflow guard tripped mid-search: repel the line search
            Err(_) => (f64::INFINITY, vec![0.0; k]),
        },
        |restart| {
            if restart == 0 {
                vec![0.0; k]
            } else {
                let mut rng = substream(seed, restart as u64);
                (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect()
            }
        },
        &bounds,
        config,
    );

    let model = GibbsModel {
        ops: ops.clone(),
        lambdas: best.x.clone(),
    };
    let state = gibbs_state(&model)?;
    let mut warnings = Vec::new();
    if !best.converged {
        warnings.push(format!(
            "winning restart {} stopped at the iteration cap ({})",
            best.restart, config.max_iters
        ));
    }
    Ok(ReconstructionResult {
        estimator: EstimatorKind::Gibbs(ops.tag()),
        state,
        params: FitParams::Lambdas(best.x),
        operators: Some(ops.labels()),
        final_loss: best.loss,
        iterations: best.iterations,
        restarts_used: config.restarts,
        wall_time: start.elapsed(),
        warnings,
    })
}

// ---------------------------------------------------------------------------
// least-squares MLE over the Cholesky-form parametrization
// ---------------------------------------------------------------------------

/// Lower-triangular factor `T` with a real diagonal; `rho = T^dag T / Tr`.
///
/// The flat parameter vector walks the lower triangle row by row: the
/// diagonal contributes one real entry, every strictly-lower entry
/// contributes its real then imaginary part — `4^n` real parameters total.
#[derive(Clone, Debug)]
pub struct CholeskyParams {
    n: usize,
    entries: CMatrix,
}

impl CholeskyParams {
    pub fn param_count(n: usize) -> usize {
        let dim = 1usize << n;
        dim * dim
    }

    /// `T = I / sqrt(2^n)`, so that `rho(T)` is maximally mixed.
    pub fn identity_start(n: usize) -> Self {
        let dim = 1usize << n;
        let scale = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self {
            n,
            entries: CMatrix::identity(dim, dim) * scale,
        }
    }

    pub fn from_vec(n: usize, x: &[f64]) -> Self {
        let dim = 1usize << n;
        debug_assert_eq!(x.len(), dim * dim);
        let mut entries = CMatrix::zeros(dim, dim);
        let mut idx = 0;
        for row in 0..dim {
            for col in 0..=row {
                if row == col {
                    entries[(row, col)] = C64::new(x[idx], 0.0);
                    idx += 1;
                } else {
                    entries[(row, col)] = C64::new(x[idx], x[idx + 1]);
                    idx += 2;
                }
            }
        }
        Self { n, entries }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let dim = 1usize << self.n;
        let mut x = Vec::with_capacity(dim * dim);
        for row in 0..dim {
            for col in 0..=row {
                let v = self.entries[(row, col)];
                x.push(v.re);
                if row != col {
                    x.push(v.im);
                }
            }
        }
        x
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn factor(&self) -> &CMatrix {
        &self.entries
    }

    /// `rho = T^dag T / Tr(T^dag T)`.
    pub fn density(&self) -> Result<DensityMatrix> {
        let s = self.entries.adjoint() * &self.entries;
        let z = s.trace().re;
        if z < 1e-12 {
            return Err(Error::InvalidState(
                "Cholesky factor is numerically zero".into(),
            ));
        }
        DensityMatrix::new(s / C64::new(z, 0.0))
    }
}

struct MleEvaluator {
    dim: usize,
    actions: Vec<ColumnAction>,
    targets: Vec<f64>,
}

impl MleEvaluator {
    /// Loss and exact gradient in the flat parameter layout of
    /// [`CholeskyParams`]. With `S = T^dag T`, `Z = Tr S`, and
    /// `R = sum_k 2 r_k (P_k - t_k I) / Z`, the differential is
    /// `dL = 2 Re <dT, T R>`, so the gradient of entry (p, q) reads off
    /// `M = T R` directly.
    fn loss_grad(&self, n: usize, x: &[f64]) -> (f64, Vec<f64>) {
        let t_factor = CholeskyParams::from_vec(n, x);
        let t_mat = t_factor.factor();
        let s = t_mat.adjoint() * t_mat;
        let z = s.trace().re;
        if z < 1e-12 {
            // removable singularity at T = 0; no descent path lands here
            return (f64::INFINITY, vec![0.0; x.len()]);
        }
        let rho = &s / C64::new(z, 0.0);

        let predicted: Vec<f64> = self
            .actions
            .iter()
            .map(|a| a.trace_product(&rho).re)
            .collect();
        let residuals: Vec<f64> = predicted
            .iter()
            .zip(&self.targets)
            .map(|(t, m)| t - m)
            .collect();
        let loss: f64 = residuals.iter().map(|r| r * r).sum();

        let mut r_mat = CMatrix::zeros(self.dim, self.dim);
        let mut diag_shift = 0.0;
        for ((action, &r), &t) in self.actions.iter().zip(&residuals).zip(&predicted) {
            action.add_scaled_to(&mut r_mat, C64::new(2.0 * r / z, 0.0));
            diag_shift += 2.0 * r * t / z;
        }
        for i in 0..self.dim {
            r_mat[(i, i)] -= C64::new(diag_shift, 0.0);
        }
        let m = t_mat * r_mat;

        let mut grad = Vec::with_capacity(x.len());
        for row in 0..self.dim {
            for col in 0..=row {
                let v = m[(row, col)];
                grad.push(2.0 * v.re);
                if row != col {
                    grad.push(2.0 * v.im);
                }
            }
        }
        (loss, grad)
    }
}

/// Loss and gradient of the MLE objective at explicit parameters; exposed
/// for gradient verification. `targets` is aligned with the full
/// non-identity enumeration order.
pub fn mle_loss_grad(params: &CholeskyParams, targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    let full = enumerate(params.n(), false);
    if targets.len() != full.len() {
        return Err(Error::DimensionMismatch {
            left: targets.len(),
            right: full.len(),
        });
    }
    let evaluator = MleEvaluator {
        dim: 1usize << params.n(),
        actions: full.iter().map(|p| p.column_action()).collect(),
        targets: targets.to_vec(),
    };
    Ok(evaluator.loss_grad(params.n(), &params.to_vec()))
}

/// Least-squares MLE over the full operator set. Operators without
/// records enter with target zero (and a warning). Restart 0 starts at
/// `T = I/sqrt(2^n)`; later restarts add Gaussian perturbations of scale
/// 0.1 to that start.
pub fn mle_fit(dataset: &Dataset, config: &OptimizerConfig) -> Result<ReconstructionResult> {
    config.validate()?;
    dataset.validate()?;
    let n = dataset.n;
    let full = enumerate(n, false);
    let map = dataset.estimate_map();
    let mut targets = Vec::with_capacity(full.len());
    let mut missing = 0usize;
    for p in &full {
        match map.get(p) {
            Some(&value) => targets.push(value),
            None => {
                targets.push(0.0);
                missing += 1;
            }
        }
    }
    let evaluator = MleEvaluator {
        dim: 1usize << n,
        actions: full.iter().map(|p| p.column_action()).collect(),
        targets,
    };
    let param_count = CholeskyParams::param_count(n);
    let bounds = vec![(-MLE_PARAM_BOUND, MLE_PARAM_BOUND); param_count];
    let base = CholeskyParams::identity_start(n).to_vec();
    let seed = config.seed;

    let start = Instant::now();
    let best = best_of_restarts(
        |x| evaluator.loss_grad(n, x),
        |restart| {
            if restart == 0 {
                base.clone()
            } else {
                let mut rng = substream(seed, restart as u64);
                base.iter()
                    .map(|&b| {
                        let noise: f64 = StandardNormal.sample(&mut rng);
                        b + 0.1 * noise
                    })
                    .collect()
            }
        },
        &bounds,
        config,
    );

    let params = CholeskyParams::from_vec(n, &best.x);
    let state = params.density()?;
    let mut warnings = Vec::new();
    if missing > 0 {
        warnings.push(format!(
            "{missing} of {} operators had no record and were fitted to zero",
            full.len()
        ));
    }
    if !best.converged {
        warnings.push(format!(
            "winning restart {} stopped at the iteration cap ({})",
            best.restart, config.max_iters
        ));
    }
    Ok(ReconstructionResult {
        estimator: EstimatorKind::Mle,
        state,
        params: FitParams::Cholesky(best.x),
        operators: None,
        final_loss: best.loss,
        iterations: best.iterations,
        restarts_used: config.restarts,
        wall_time: start.elapsed(),
        warnings,
    })
}

// ---------------------------------------------------------------------------
// result file schema
// ---------------------------------------------------------------------------

/// Metrics block optionally attached to a serialized result.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement_mle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observable_error: Option<f64>,
}

/// JSON document written for a reconstruction: parameters, the state as
/// row-major `[re, im]` pairs, and optional metrics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultJson {
    pub estimator: String,
    pub n: usize,
    pub params_kind: String,
    pub params: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operators: Option<Vec<String>>,
    pub state: Vec<[f64; 2]>,
    pub final_loss: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<ResultMetrics>,
}

impl ResultJson {
    pub fn from_result(result: &ReconstructionResult, metrics: Option<ResultMetrics>) -> Self {
        let dim = result.state.dim();
        let mut state = Vec::with_capacity(dim * dim);
        for row in 0..dim {
            for col in 0..dim {
                let v = result.state.matrix()[(row, col)];
                state.push([v.re, v.im]);
            }
        }
        let (params_kind, params) = match &result.params {
            FitParams::None => ("none", Vec::new()),
            FitParams::Lambdas(v) => ("lambdas", v.clone()),
            FitParams::Cholesky(v) => ("cholesky", v.clone()),
        };
        Self {
            estimator: result.estimator.to_string(),
            n: result.state.n(),
            params_kind: params_kind.to_string(),
            params,
            operators: result.operators.clone(),
            state,
            final_loss: result.final_loss,
            iterations: result.iterations,
            restarts: result.restarts_used,
            wall_ms: result.wall_time.as_secs_f64() * 1e3,
            warnings: result.warnings.clone(),
            metrics,
        }
    }

    /// Rebuild the (validated) state matrix.
    pub fn state_matrix(&self) -> Result<DensityMatrix> {
        let dim = 1usize << self.n;
        if self.state.len() != dim * dim {
            return Err(Error::Serialization(format!(
                "state has {} entries, expected {}",
                self.state.len(),
                dim * dim
            )));
        }
        let matrix = CMatrix::from_fn(dim, dim, |r, c| {
            let [re, im] = self.state[r * dim + c];
            C64::new(re, im)
        });
        DensityMatrix::new(matrix)
    }

    pub fn estimator_kind(&self) -> Result<EstimatorKind> {
        self.estimator.parse()
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }
}
