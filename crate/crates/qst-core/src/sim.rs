//! Synthetic measurement data: noise channels plus finite-shot sampling.
//!
//! Each observable is measured in its own setting: the estimate for `P` is
//! drawn as `2k/N - 1` with `k ~ Binomial(N, (1 + m)/2)` around the noisy
//! true value `m`. Readout error folds in analytically as a
//! `(1 - 2 eps)^weight` scaling of the parity expectation, which is exact in
//! distribution for parity observables. Record `j` of a dataset draws from
//! sub-stream `(seed, j)` (see [`crate::rng`]), so generation order does not
//! matter.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::opsets::OperatorSet;
use crate::pauli::PauliString;
use crate::rng::substream;
use crate::state::DensityMatrix;
use crate::{C64, CMatrix, Error, Result};

/// Tolerance for the integer-realizability check on estimates.
pub const REALIZABILITY_TOL: f64 = 1e-6;

/// Noise applied to the ideal state before sampling.
///
/// The channel is `rho' = (1 - p_dep) Phi_z(rho) + p_dep I/2^n`, where
/// `Phi_z` flips the phase of each qubit independently with probability
/// `dephasing`. `readout` is a per-qubit classical bit-flip at measurement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(default)]
    pub depolarizing: f64,
    #[serde(default)]
    pub dephasing: f64,
    #[serde(default)]
    pub readout: f64,
}

impl NoiseModel {
    pub fn new(depolarizing: f64, dephasing: f64, readout: f64) -> Result<Self> {
        let model = Self {
            depolarizing,
            dephasing,
            readout,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        Self::new(p, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("depolarizing", self.depolarizing, 0.0, 1.0),
            ("dephasing", self.dephasing, 0.0, 1.0),
            ("readout", self.readout, 0.0, 0.5),
        ];
        for (field, value, lo, hi) in ranges {
            if !(lo..=hi).contains(&value) || !value.is_finite() {
                return Err(Error::NoiseOutOfRange {
                    field,
                    value,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.depolarizing == 0.0 && self.dephasing == 0.0 && self.readout == 0.0
    }
}

/// A finite-shot estimate of one Pauli expectation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub pauli: PauliString,
    pub shots: u64,
    pub estimate: f64,
}

impl MeasurementRecord {
    /// `N (1 + estimate) / 2` must be an integer: the estimate has to be
    /// realizable from N binary outcomes.
    pub fn is_realizable(&self) -> bool {
        let k = self.shots as f64 * (1.0 + self.estimate) / 2.0;
        (k - k.round()).abs() <= REALIZABILITY_TOL && (-1.0..=1.0).contains(&self.estimate)
    }
}

/// A batch of measurement records for one state and noise setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub n: usize,
    pub seed: u64,
    #[serde(rename = "state")]
    pub state_tag: String,
    pub noise: NoiseModel,
    pub records: Vec<MeasurementRecord>,
}

impl Dataset {
    /// Structural checks: labels distinct, all of length n.
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        let mut seen = std::collections::BTreeSet::new();
        for record in &self.records {
            if record.pauli.n() != self.n {
                return Err(Error::LabelLength {
                    label: record.pauli.label(),
                    got: record.pauli.n(),
                    expected: self.n,
                });
            }
            if record.pauli.is_identity() {
                return Err(Error::IdentityOperator(record.pauli.label()));
            }
            if !seen.insert(record.pauli.clone()) {
                return Err(Error::DuplicateOperator(record.pauli.label()));
            }
        }
        Ok(())
    }

    /// Estimate for a specific operator, if present.
    pub fn estimate_for(&self, p: &PauliString) -> Option<f64> {
        self.records
            .iter()
            .find(|r| &r.pauli == p)
            .map(|r| r.estimate)
    }

    /// Lookup table keyed by label.
    pub fn estimate_map(&self) -> std::collections::BTreeMap<PauliString, f64> {
        self.records
            .iter()
            .map(|r| (r.pauli.clone(), r.estimate))
            .collect()
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let dataset: Dataset =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        dataset.validate()?;
        Ok(dataset)
    }

    /// Records with analytically exact expectation values of `state` under
    /// `noise` (no shot sampling). `shots` is recorded verbatim; exact
    /// estimates are generally not realizable from finite counts.
    pub fn exact(
        state: &DensityMatrix,
        state_tag: &str,
        operators: &OperatorSet,
        shots: u64,
        noise: &NoiseModel,
    ) -> Result<Self> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        check_ops(state, operators)?;
        let noisy = apply_noise(state, noise)?;
        let readout_scale = |w: usize| (1.0 - 2.0 * noise.readout).powi(w as i32);
        let records = operators
            .iter()
            .map(|p| {
                let estimate = readout_scale(p.weight()) * noisy.expectation(p)?;
                Ok(MeasurementRecord {
                    pauli: p.clone(),
                    shots,
                    estimate,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: state.n(),
            seed: 0,
            state_tag: state_tag.to_string(),
            noise: *noise,
            records,
        })
    }
}

/// `rho' = (1 - p_dep) Phi_z(rho) + p_dep I/2^n`, with `Phi_z` the
/// independent per-qubit phase-flip channel.
pub fn apply_noise(rho: &DensityMatrix, noise: &NoiseModel) -> Result<DensityMatrix> {
    noise.validate()?;
    let dim = rho.dim();
    // Z_i rho Z_i multiplies entry (r, c) by -1 when bit i of r and c
    // differ, so n rounds of the phase-flip channel collapse to scaling
    // entry (r, c) by (1 - 2 p_z)^{popcount(r ^ c)}.
    let damp = 1.0 - 2.0 * noise.dephasing;
    let mut out = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            let factor = damp.powi((r ^ c).count_ones() as i32);
            out[(r, c)] = rho.matrix()[(r, c)] * C64::new(factor, 0.0);
        }
    }
    let p = noise.depolarizing;
    if p > 0.0 {
        out *= C64::new(1.0 - p, 0.0);
        let uniform = p / dim as f64;
        for i in 0..dim {
            out[(i, i)] += C64::new(uniform, 0.0);
        }
    }
    DensityMatrix::new(out)
}

/// One finite-shot estimate of `Tr(rho P)` with readout error `eps`:
/// the true value is `m = (1 - 2 eps)^weight Tr(rho P)`, the estimate is
/// `2k/N - 1` with `k ~ Binomial(N, (1 + m)/2)`.
pub fn sample_expectation(
    rho: &DensityMatrix,
    p: &PauliString,
    shots: u64,
    readout: f64,
    rng: &mut impl Rng,
) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    if p.is_identity() {
        return Err(Error::IdentityOperator(p.label()));
    }
    let raw = rho.expectation(p)?;
    let m = ((1.0 - 2.0 * readout).powi(p.weight() as i32) * raw).clamp(-1.0, 1.0);
    let binomial = Binomial::new(shots, (1.0 + m) / 2.0)
        .map_err(|e| Error::InvalidConfig(format!("binomial: {e}")))?;
    let k = binomial.sample(rng);
    Ok(MeasurementRecord {
        pauli: p.clone(),
        shots,
        estimate: 2.0 * k as f64 / shots as f64 - 1.0,
    })
}

fn check_ops(state: &DensityMatrix, operators: &OperatorSet) -> Result<()> {
    if operators.is_empty() {
        return Err(Error::EmptyOperatorSet);
    }
    if operators.n() != state.n() {
        return Err(Error::DimensionMismatch {
            left: operators.n(),
            right: state.n(),
        });
    }
    Ok(())
}

/// Sample one record per operator from the noisy state. Record `j` uses
/// sub-stream `(seed, j)`, so the dataset is a pure function of
/// `(state, operators, shots, noise, seed)` and independent of evaluation
/// order.
pub fn generate_dataset(
    state: &DensityMatrix,
    state_tag: &str,
    operators: &OperatorSet,
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Dataset> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    check_ops(state, operators)?;
    let noisy = apply_noise(state, noise)?;
    let records = operators
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let mut rng = substream(seed, index as u64);
            sample_expectation(&noisy, p, shots, noise.readout, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let dataset = Dataset {
        n: state.n(),
        seed,
        state_tag: state_tag.to_string(),
        noise: *noise,
        records,
    };
    dataset.validate()?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::fidelity;
    use approx::assert_abs_diff_eq;

    #[test]
    fn noise_model_validates_ranges() {
        assert!(NoiseModel::new(0.3, 0.1, 0.05).is_ok());
        assert!(matches!(
            NoiseModel::new(1.2, 0.0, 0.0),
            Err(Error::NoiseOutOfRange {
                field: "depolarizing",
                ..
            })
        ));
        assert!(matches!(
            NoiseModel::new(0.0, 0.0, 0.6),
            Err(Error::NoiseOutOfRange {
                field: "readout",
                ..
            })
        ));
    }

    #[test]
    fn apply_noise_limits() {
        let ghz = DensityMatrix::ghz(3).unwrap();
        let same = apply_noise(&ghz, &NoiseModel::default()).unwrap();
        assert!((same.matrix() - ghz.matrix()).norm() < 1e-15);

        let mixed = apply_noise(&ghz, &NoiseModel::depolarizing(1.0).unwrap()).unwrap();
        let target = DensityMatrix::maximally_mixed(3).unwrap();
        assert!((mixed.matrix() - target.matrix()).norm() < 1e-15);
    }

    #[test]
    fn depolarizing_fidelity_identity() {
        // fidelity((1-p) ghz + p I/8, ghz) = (1 - p) + p/8
        let ghz = DensityMatrix::ghz(3).unwrap();
        let p = 0.263;
        let noisy = apply_noise(&ghz, &NoiseModel::depolarizing(p).unwrap()).unwrap();
        let f = fidelity(&noisy, &ghz).unwrap();
        assert_abs_diff_eq!(f, (1.0 - p) + p / 8.0, epsilon = 1e-10);
    }

    #[test]
    fn dephasing_kills_coherence_keeps_populations() {
        let ghz = DensityMatrix::ghz(2).unwrap();
        let noisy = apply_noise(&ghz, &NoiseModel::new(0.0, 0.5, 0.0).unwrap()).unwrap();
        // p_z = 1/2 zeroes every off-diagonal element
        assert_abs_diff_eq!(noisy.matrix()[(0, 3)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(noisy.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn deterministic_outcome_has_no_variance() {
        let ghz = DensityMatrix::ghz(3).unwrap();
        let xxx: PauliString = "XXX".parse().unwrap();
        for seed in 0..20 {
            let mut rng = substream(seed, 0);
            let record = sample_expectation(&ghz, &xxx, 512, 0.0, &mut rng).unwrap();
            assert_eq!(record.estimate, 1.0);
        }
    }

    #[test]
    fn identity_cannot_be_sampled() {
        let ghz = DensityMatrix::ghz(2).unwrap();
        let id = PauliString::identity(2);
        let mut rng = substream(0, 0);
        assert!(matches!(
            sample_expectation(&ghz, &id, 100, 0.0, &mut rng),
            Err(Error::IdentityOperator(_))
        ));
    }

    #[test]
    fn binomial_standard_deviation_matches_oracle() {
        // <P> = 0 at N = 1024 has std 1/sqrt(N) = 1/32
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        let z: PauliString = "Z".parse().unwrap();
        let mut values = Vec::with_capacity(200);
        for seed in 0..200u64 {
            let mut rng = substream(seed, 0);
            values.push(
                sample_expectation(&mixed, &z, 1024, 0.0, &mut rng)
                    .unwrap()
                    .estimate,
            );
        }
        let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
        let var: f64 =
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
        let std = var.sqrt();
        assert!(
            (std - 1.0 / 32.0).abs() < 0.2 / 32.0,
            "std {std} not within 20% of 1/32"
        );
    }

    #[test]
    fn readout_scales_parity_expectation() {
        // m = 1, eps = 0.1, weight 3 -> mean estimate 0.8^3 = 0.512
        let ghz = DensityMatrix::ghz(3).unwrap();
        let xxx: PauliString = "XXX".parse().unwrap();
        let mut sum = 0.0;
        let repeats = 400;
        for seed in 0..repeats {
            let mut rng = substream(seed, 7);
            sum += sample_expectation(&ghz, &xxx, 2048, 0.1, &mut rng)
                .unwrap()
                .estimate;
        }
        let mean = sum / repeats as f64;
        // standard error ~ sqrt((1-0.512^2)/2048/400) ~ 1e-3
        assert!(
            (mean - 0.512f64).abs() < 5e-3,
            "mean {mean} far from 0.512"
        );
    }

    #[test]
    fn datasets_are_deterministic_and_realizable() {
        let ghz = DensityMatrix::ghz(3).unwrap();
        let ops = OperatorSet::full(3).unwrap();
        let noise = NoiseModel::depolarizing(0.2).unwrap();
        let a = generate_dataset(&ghz, "ghz", &ops, 2048, &noise, 42).unwrap();
        let b = generate_dataset(&ghz, "ghz", &ops, 2048, &noise, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 63);
        assert!(a.records.iter().all(|r| r.is_realizable()));

        let c = generate_dataset(&ghz, "ghz", &ops, 2048, &noise, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fully_depolarized_estimates_concentrate_near_zero() {
        let ghz = DensityMatrix::ghz(3).unwrap();
        let ops = OperatorSet::g3(3).unwrap();
        let noise = NoiseModel::depolarizing(1.0).unwrap();
        let d = generate_dataset(&ghz, "ghz", &ops, 1 << 16, &noise, 1).unwrap();
        for record in &d.records {
            assert!(
                record.estimate.abs() < 0.02,
                "{} estimate {} not near zero",
                record.pauli,
                record.estimate
            );
        }
    }

    #[test]
    fn noiseless_large_shot_estimates_concentrate() {
        let ghz = DensityMatrix::ghz(3).unwrap();
        let ops = OperatorSet::full(3).unwrap();
        let d =
            generate_dataset(&ghz, "ghz", &ops, 1 << 20, &NoiseModel::default(), 9).unwrap();
        for record in &d.records {
            let exact = ghz.expectation(&record.pauli).unwrap();
            assert!(
                (record.estimate - exact).abs() < 0.01,
                "{}: {} vs {}",
                record.pauli,
                record.estimate,
                exact
            );
        }
    }

    #[test]
    fn estimator_mean_converges_to_noisy_truth() {
        // mean over 500 seeds within 3 standard errors of the true value
        let ghz = DensityMatrix::ghz(3).unwrap();
        let noise = NoiseModel::new(0.2, 0.05, 0.02).unwrap();
        let noisy = apply_noise(&ghz, &noise).unwrap();
        let op: PauliString = "ZZI".parse().unwrap();
        let truth =
            (1.0 - 2.0 * noise.readout).powi(2) * noisy.expectation(&op).unwrap();

        let shots = 1024u64;
        let seeds = 500u64;
        let mut sum = 0.0;
        for seed in 0..seeds {
            let mut rng = substream(seed, 3);
            sum += sample_expectation(&noisy, &op, shots, noise.readout, &mut rng)
                .unwrap()
                .estimate;
        }
        let mean = sum / seeds as f64;
        let se = ((1.0 - truth * truth) / shots as f64 / seeds as f64).sqrt();
        assert!(
            (mean - truth).abs() < 3.0 * se.max(1e-4),
            "mean {mean} vs truth {truth} (se {se})"
        );
    }

    #[test]
    fn json_round_trip_preserves_records() {
        let ghz = DensityMatrix::ghz(3).unwrap();
        let ops = OperatorSet::g3(3).unwrap();
        let noise = NoiseModel::depolarizing(0.263).unwrap();
        let d = generate_dataset(&ghz, "ghz", &ops, 2048, &noise, 42).unwrap();
        let text = d.to_json_string().unwrap();
        let back = Dataset::from_json_str(&text).unwrap();
        assert_eq!(d, back);
        // estimates of 2048-shot data are dyadic and print exactly
        assert!(text.contains("\"pauli\""));
    }

    #[test]
    fn exact_dataset_carries_analytic_values() {
        let ghz = DensityMatrix::ghz(3).unwrap();
        let ops = OperatorSet::g3(3).unwrap();
        let d = Dataset::exact(&ghz, "ghz", &ops, 2048, &NoiseModel::default()).unwrap();
        assert_abs_diff_eq!(
            d.estimate_for(&"XXX".parse().unwrap()).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            d.estimate_for(&"ZZI".parse().unwrap()).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            d.estimate_for(&"XII".parse().unwrap()).unwrap(),
            0.0,
            epsilon = 1e-14
        );
    }
}
