//! Density matrices, GHZ construction, and state-distance functionals.

use std::collections::BTreeMap;

use crate::linalg::{self, eigh};
use crate::pauli::{self, PauliString, DENSE_QUBIT_CAP};
use crate::{C64, CMatrix, Error, Result};

/// Hermiticity tolerance on [`DensityMatrix`] construction (relative).
pub const STATE_HERM_TOL: f64 = 1e-9;
/// Trace tolerance on construction.
pub const STATE_TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue accepted on construction.
pub const STATE_EIG_FLOOR: f64 = -1e-9;

/// A validated quantum state: Hermitian, unit trace, PSD (all to within the
/// constants above). `|0...0>` is basis index 0, `|1...1>` is `2^n - 1`.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: CMatrix,
    n: usize,
}

impl DensityMatrix {
    /// Validate and wrap a matrix. The dimension must be a power of two.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: matrix.ncols(),
            });
        }
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "dimension {dim} is not a power of two"
            )));
        }
        let n = dim.trailing_zeros() as usize;
        if n < 1 {
            return Err(Error::InvalidState("at least one qubit required".into()));
        }
        let norm = matrix.norm();
        if norm > 0.0 && (&matrix - matrix.adjoint()).norm() / norm > STATE_HERM_TOL {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > STATE_TRACE_TOL || trace.im.abs() > STATE_TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace {trace} is not 1"
            )));
        }
        let min_eig = eigh(&matrix)?.eigenvalues.min();
        if min_eig < STATE_EIG_FLOOR {
            return Err(Error::InvalidState(format!(
                "eigenvalue {min_eig:.3e} below the PSD floor"
            )));
        }
        Ok(Self { matrix, n })
    }

    /// The n-qubit GHZ state `(|0...0> + |1...1>)/sqrt(2)` as a projector:
    /// four entries of 1/2 at the corners of the matrix.
    pub fn ghz(n: usize) -> Result<Self> {
        if !(1..=DENSE_QUBIT_CAP).contains(&n) {
            return Err(Error::QubitCapExceeded {
                n,
                cap: DENSE_QUBIT_CAP,
            });
        }
        let dim = 1usize << n;
        let mut matrix = CMatrix::zeros(dim, dim);
        let half = C64::new(0.5, 0.0);
        matrix[(0, 0)] = half;
        matrix[(0, dim - 1)] = half;
        matrix[(dim - 1, 0)] = half;
        matrix[(dim - 1, dim - 1)] = half;
        Ok(Self { matrix, n })
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n: usize) -> Result<Self> {
        if !(1..=DENSE_QUBIT_CAP).contains(&n) {
            return Err(Error::QubitCapExceeded {
                n,
                cap: DENSE_QUBIT_CAP,
            });
        }
        let dim = 1usize << n;
        Ok(Self {
            matrix: CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
            n,
        })
    }

    /// Frobenius-closest valid state to an arbitrary Hermitian matrix.
    pub fn project_from(a: &CMatrix) -> Result<Self> {
        Self::new(linalg::project_to_density(a)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Tr(rho P).
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        pauli::expectation(&self.matrix, p)
    }

    /// Tr(rho^2).
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Expectations of every non-identity Pauli string, in enumeration
    /// order. Exponential in n; intended for n <= 5.
    pub fn pauli_expectations(&self) -> Result<Vec<(PauliString, f64)>> {
        pauli::enumerate(self.n, false)
            .into_iter()
            .map(|p| {
                let value = self.expectation(&p)?;
                Ok((p, value))
            })
            .collect()
    }
}

/// Synthesize `(1/2^n) (I + sum_P m_P P)` from Pauli coefficients. The
/// identity coefficient is fixed at 1 and absent operators contribute 0.
/// The result is Hermitian by construction but not necessarily PSD.
pub fn from_pauli_vector(estimates: &BTreeMap<PauliString, f64>, n: usize) -> Result<CMatrix> {
    if !(1..=DENSE_QUBIT_CAP).contains(&n) {
        return Err(Error::QubitCapExceeded {
            n,
            cap: DENSE_QUBIT_CAP,
        });
    }
    let dim = 1usize << n;
    let scale = 1.0 / dim as f64;
    let mut matrix = CMatrix::identity(dim, dim) * C64::new(scale, 0.0);
    for (p, &coeff) in estimates {
        if p.n() != n {
            return Err(Error::LabelLength {
                label: p.label(),
                got: p.n(),
                expected: n,
            });
        }
        if p.is_identity() {
            return Err(Error::IdentityOperator(p.label()));
        }
        p.column_action()
            .add_scaled_to(&mut matrix, C64::new(coeff * scale, 0.0));
    }
    Ok(matrix)
}

/// Clip tiny negative eigenvalues and renormalize the trace. Finite-precision
/// eigensolvers routinely leave -1e-16-scale noise on otherwise valid states.
fn sanitize(state: &DensityMatrix) -> Result<CMatrix> {
    let eig = eigh(state.matrix())?;
    let min_eig = eig.eigenvalues.min();
    if min_eig >= 0.0 {
        return Ok(state.matrix().clone());
    }
    let clipped = eig.apply(|w| w.max(0.0));
    let trace = clipped.trace().re;
    Ok(clipped / C64::new(trace, 0.0))
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(b) a sqrt(b)))^2`, symmetric in its
/// arguments and equal to `Tr(a b)` when either state is pure.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let a_mat = sanitize(a)?;
    let b_mat = sanitize(b)?;
    let sqrt_b = linalg::sqrtm_psd(&b_mat)?;
    let inner = &sqrt_b * a_mat * &sqrt_b;
    // F = (sum_i sqrt(lambda_i))^2 over the spectrum of the inner matrix.
    let eig = eigh(&inner)?;
    let root_sum: f64 = eig.eigenvalues.iter().map(|&w| w.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Trace distance `(1/2) sum |eig(a - b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let diff = a.matrix() - b.matrix();
    let eig = eigh(&diff)?;
    Ok(0.5 * eig.eigenvalues.iter().map(|w| w.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{enumerate, Pauli};
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_state(n: usize, rng: &mut impl Rng) -> DensityMatrix {
        let dim = 1usize << n;
        let a = CMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let mut rho = &a * a.adjoint();
        let tr = rho.trace().re;
        rho /= C64::new(tr, 0.0);
        DensityMatrix::new(rho).unwrap()
    }

    #[test]
    fn ghz_matrix_shape() {
        let g = DensityMatrix::ghz(3).unwrap();
        let m = g.matrix();
        assert_eq!(m.nrows(), 8);
        for (r, c) in [(0, 0), (0, 7), (7, 0), (7, 7)] {
            assert_abs_diff_eq!(m[(r, c)].re, 0.5, epsilon = 1e-15);
        }
        let nonzero = m.iter().filter(|v| v.norm() > 0.0).count();
        assert_eq!(nonzero, 4);

        // n = 1 degenerates to |+><+|
        let plus = DensityMatrix::ghz(1).unwrap();
        for v in plus.matrix().iter() {
            assert_abs_diff_eq!(v.re, 0.5, epsilon = 1e-15);
        }

        assert_abs_diff_eq!(DensityMatrix::ghz(5).unwrap().purity(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ghz_stabilizer_expectations() {
        for n in 2..=5 {
            let g = DensityMatrix::ghz(n).unwrap();
            for i in 0..n - 1 {
                let zz = PauliString::pair(n, i, i + 1, Pauli::Z);
                assert_abs_diff_eq!(g.expectation(&zz).unwrap(), 1.0, epsilon = 1e-12);
            }
            let xn = PauliString::uniform(n, Pauli::X);
            assert_abs_diff_eq!(g.expectation(&xn).unwrap(), 1.0, epsilon = 1e-12);
            for i in 0..n {
                for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
                    let p = PauliString::single(n, i, axis);
                    assert_abs_diff_eq!(g.expectation(&p).unwrap(), 0.0, epsilon = 1e-12);
                }
            }
        }
        // YYY vanishes for odd n, is +1 for n = 4
        let g3 = DensityMatrix::ghz(3).unwrap();
        assert_abs_diff_eq!(
            g3.expectation(&PauliString::uniform(3, Pauli::Y)).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let g4 = DensityMatrix::ghz(4).unwrap();
        assert_abs_diff_eq!(
            g4.expectation(&PauliString::uniform(4, Pauli::Y)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn from_pauli_vector_cases() {
        // empty map -> maximally mixed
        let m = from_pauli_vector(&BTreeMap::new(), 2).unwrap();
        assert!((m - CMatrix::identity(4, 4) / C64::new(4.0, 0.0)).norm() < 1e-15);

        // full GHZ_3 expectations round-trip to the GHZ matrix
        let g = DensityMatrix::ghz(3).unwrap();
        let map: BTreeMap<_, _> = g.pauli_expectations().unwrap().into_iter().collect();
        let rebuilt = from_pauli_vector(&map, 3).unwrap();
        assert!((rebuilt - g.matrix()).norm() < 1e-12);

        // {XXX: 1} alone gives (I + XXX)/8 with min eigenvalue 0
        let mut map = BTreeMap::new();
        map.insert("XXX".parse().unwrap(), 1.0);
        let m = from_pauli_vector(&map, 3).unwrap();
        let min_eig = eigh(&m).unwrap().eigenvalues.min();
        assert_abs_diff_eq!(min_eig, 0.0, epsilon = 1e-14);

        // wrong key length is rejected
        let mut map = BTreeMap::new();
        map.insert("XX".parse().unwrap(), 0.5);
        assert!(matches!(
            from_pauli_vector(&map, 3),
            Err(Error::LabelLength { .. })
        ));
    }

    #[test]
    fn pauli_vector_round_trip_on_random_states() {
        let mut rng = substream(21, 0);
        for n in 1..=3 {
            let rho = random_state(n, &mut rng);
            let map: BTreeMap<_, _> = rho.pauli_expectations().unwrap().into_iter().collect();
            let rebuilt = from_pauli_vector(&map, n).unwrap();
            assert!(
                (rebuilt - rho.matrix()).norm() < 1e-10,
                "completeness round trip failed at n={n}"
            );
        }
    }

    #[test]
    fn fidelity_reference_values() {
        let g3 = DensityMatrix::ghz(3).unwrap();
        assert_abs_diff_eq!(fidelity(&g3, &g3).unwrap(), 1.0, epsilon = 1e-9);

        let mixed = DensityMatrix::maximally_mixed(3).unwrap();
        assert_abs_diff_eq!(fidelity(&g3, &mixed).unwrap(), 0.125, epsilon = 1e-9);

        let g5 = DensityMatrix::ghz(5).unwrap();
        let mixed5 = DensityMatrix::maximally_mixed(5).unwrap();
        assert_abs_diff_eq!(fidelity(&g5, &mixed5).unwrap(), 0.03125, epsilon = 1e-9);

        // equal classical mixture of |000> and |111>
        let mut m = CMatrix::zeros(8, 8);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(7, 7)] = C64::new(0.5, 0.0);
        let mixture = DensityMatrix::new(m).unwrap();
        assert_abs_diff_eq!(fidelity(&g3, &mixture).unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded() {
        let mut rng = substream(22, 0);
        for _ in 0..10 {
            let a = random_state(2, &mut rng);
            let b = random_state(2, &mut rng);
            let fab = fidelity(&a, &b).unwrap();
            let fba = fidelity(&b, &a).unwrap();
            assert!((fab - fba).abs() < 1e-8, "{fab} vs {fba}");
            assert!((0.0..=1.0).contains(&fab));
            assert_abs_diff_eq!(fidelity(&a, &a).unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn trace_distance_cases() {
        let g3 = DensityMatrix::ghz(3).unwrap();
        assert_abs_diff_eq!(trace_distance(&g3, &g3).unwrap(), 0.0, epsilon = 1e-12);

        // orthogonal pure states
        let mut m0 = CMatrix::zeros(2, 2);
        m0[(0, 0)] = C64::new(1.0, 0.0);
        let mut m1 = CMatrix::zeros(2, 2);
        m1[(1, 1)] = C64::new(1.0, 0.0);
        let s0 = DensityMatrix::new(m0).unwrap();
        let s1 = DensityMatrix::new(m1).unwrap();
        assert_abs_diff_eq!(trace_distance(&s0, &s1).unwrap(), 1.0, epsilon = 1e-12);

        let mixed = DensityMatrix::maximally_mixed(3).unwrap();
        assert_abs_diff_eq!(trace_distance(&g3, &mixed).unwrap(), 0.875, epsilon = 1e-12);
    }

    #[test]
    fn new_rejects_invalid_states() {
        // trace 2
        assert!(DensityMatrix::new(CMatrix::identity(2, 2)).is_err());
        // negative eigenvalue
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(1.2, 0.0);
        m[(1, 1)] = C64::new(-0.2, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        // non-square / non-power-of-two
        assert!(DensityMatrix::new(CMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn expectation_reference_values() {
        let g3 = DensityMatrix::ghz(3).unwrap();
        assert_abs_diff_eq!(
            g3.expectation(&"XXX".parse().unwrap()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            g3.expectation(&"YYY".parse().unwrap()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let g4 = DensityMatrix::ghz(4).unwrap();
        assert_abs_diff_eq!(
            g4.expectation(&"YYYY".parse().unwrap()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn dense_reconstruction_from_full_pauli_vector() {
        // (1/2^n) sum_P <P> P over the full set including identity
        // reconstructs rho (checked at n = 2 against explicit matrices).
        let mut rng = substream(23, 0);
        let rho = random_state(2, &mut rng);
        let mut acc = CMatrix::identity(4, 4) * C64::new(0.25, 0.0);
        for p in enumerate(2, false) {
            let coeff = rho.expectation(&p).unwrap() * 0.25;
            acc += crate::pauli::to_matrix(&p).unwrap() * C64::new(coeff, 0.0);
        }
        assert!((acc - rho.matrix()).norm() < 1e-10);
    }
}
