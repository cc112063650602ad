//! Dense Hermitian kernels.
//!
//! Everything here is eigendecomposition-based; at the dimensions this crate
//! works with (<= 2^12, benchmarks at <= 32) that is both fast and the most
//! accurate route to `exp`, square roots, and spectral projections.

use nalgebra::DVector;

use crate::{C64, CMatrix, Error, Result};

/// Inputs must satisfy `||H - H^dag|| <= HERMITICITY_RTOL * ||H||` (Frobenius).
pub const HERMITICITY_RTOL: f64 = 1e-9;
/// `expm_hermitian` rejects spectra with `max |w| > EXP_EIG_LIMIT`.
pub const EXP_EIG_LIMIT: f64 = 700.0;
/// `sqrtm_psd` clips eigenvalues in `[PSD_EIG_FLOOR, 0)` to zero and rejects
/// anything below the floor.
pub const PSD_EIG_FLOOR: f64 = -1e-10;
/// Eigenvalue gap below which the divided difference in `frechet_expm`
/// switches to its midpoint limit.
pub const FRECHET_GAP: f64 = 1e-9;

/// Spectral decomposition of a Hermitian matrix: eigenvalues ascending,
/// eigenvector columns orthonormal, `V diag(w) V^dag` reproduces the input.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
}

fn hermiticity_residual(h: &CMatrix) -> f64 {
    let norm = h.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (h - h.adjoint()).norm() / norm
}

fn check_hermitian(h: &CMatrix) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            left: h.nrows(),
            right: h.ncols(),
        });
    }
    let residual = hermiticity_residual(h);
    if residual > HERMITICITY_RTOL {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

/// Full spectral decomposition of a Hermitian matrix.
pub fn eigh(h: &CMatrix) -> Result<HermitianEig> {
    check_hermitian(h)?;
    // Symmetrize first so the solver sees an exactly Hermitian matrix; the
    // input is only guaranteed Hermitian to within HERMITICITY_RTOL.
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or(Error::EigNonConvergence)?;
    // nalgebra returns an unsorted spectrum; reorder ascending.
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let dim = eig.eigenvalues.len();
    let eigenvalues = DVector::from_fn(dim, |i, _| eig.eigenvalues[order[i]]);
    let mut eigenvectors = CMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

impl HermitianEig {
    /// `V diag(f(w)) V^dag`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let dim = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..dim {
            let factor = C64::new(f(self.eigenvalues[j]), 0.0);
            for i in 0..dim {
                scaled[(i, j)] *= factor;
            }
        }
        &scaled * self.eigenvectors.adjoint()
    }
}

/// `exp(H)` for Hermitian `H`. Rejects spectra beyond [`EXP_EIG_LIMIT`];
/// callers are expected to bound their coefficients first.
pub fn expm_hermitian(h: &CMatrix) -> Result<CMatrix> {
    let eig = eigh(h)?;
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, &w| m.max(w.abs()));
    if max_abs > EXP_EIG_LIMIT {
        return Err(Error::ExpOverflow {
            max_abs,
            limit: EXP_EIG_LIMIT,
        });
    }
    Ok(eig.apply(f64::exp))
}

/// Principal square root of a PSD matrix. Eigenvalues slightly below zero
/// (down to [`PSD_EIG_FLOOR`]) are treated as exact zeros; anything lower
/// signals an invalid state upstream.
pub fn sqrtm_psd(a: &CMatrix) -> Result<CMatrix> {
    let eig = eigh(a)?;
    let min_eig = eig.eigenvalues.min();
    if min_eig < PSD_EIG_FLOOR {
        return Err(Error::NotPsd { min_eig });
    }
    Ok(eig.apply(|w| w.max(0.0).sqrt()))
}

/// Directional derivative `D exp(H)[V]` via the Daleckii-Krein formula: in
/// the eigenbasis of `H`, entry (i, j) of the transformed direction is
/// scaled by `(e^{w_i} - e^{w_j}) / (w_i - w_j)`, with the midpoint limit
/// `e^{(w_i + w_j)/2}` once the gap falls below [`FRECHET_GAP`].
pub fn frechet_expm(h: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    check_hermitian(v)?;
    if h.nrows() != v.nrows() {
        return Err(Error::DimensionMismatch {
            left: h.nrows(),
            right: v.nrows(),
        });
    }
    let eig = eigh(h)?;
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, &w| m.max(w.abs()));
    if max_abs > EXP_EIG_LIMIT {
        return Err(Error::ExpOverflow {
            max_abs,
            limit: EXP_EIG_LIMIT,
        });
    }
    Ok(frechet_in_eigenbasis(
        &eig.eigenvalues,
        &eig.eigenvectors,
        v,
    ))
}

/// Same as [`frechet_expm`] for a matrix already decomposed as
/// `U diag(w) U^dag`. The eigenvalue order only has to match the columns.
pub(crate) fn frechet_in_eigenbasis(w: &DVector<f64>, u: &CMatrix, v: &CMatrix) -> CMatrix {
    let dim = w.len();
    let mut tilde = u.adjoint() * v * u;
    for i in 0..dim {
        for j in 0..dim {
            tilde[(i, j)] *= C64::new(exp_divided_difference(w[i], w[j]), 0.0);
        }
    }
    u * tilde * u.adjoint()
}

/// First divided difference of `exp` at `(a, b)`.
pub(crate) fn exp_divided_difference(a: f64, b: f64) -> f64 {
    if (a - b).abs() < FRECHET_GAP {
        ((a + b) / 2.0).exp()
    } else {
        (a.exp() - b.exp()) / (a - b)
    }
}

/// Euclidean projection of a real vector onto the probability simplex.
pub(crate) fn simplex_project(w: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = w.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut mu = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            mu = candidate;
        }
    }
    w.iter().map(|&v| (v - mu).max(0.0)).collect()
}

/// Frobenius-closest unit-trace PSD matrix: eigendecompose, project the
/// spectrum onto the simplex, reassemble.
pub fn project_to_density(a: &CMatrix) -> Result<CMatrix> {
    let eig = eigh(a)?;
    let projected = simplex_project(eig.eigenvalues.as_slice());
    let dim = projected.len();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..dim {
        for i in 0..dim {
            scaled[(i, j)] *= C64::new(projected[j], 0.0);
        }
    }
    Ok(&scaled * eig.eigenvectors.adjoint())
}
