//! Structured observable sets.
//!
//! The G1-G4 hierarchy grows from local observables to global coherence on
//! an open chain:
//!
//! - G1: all single-qubit X/Y/Z (3n operators)
//! - G2: G1 plus nearest-neighbor XX/YY/ZZ pairs (6n - 3)
//! - G3: G2 plus the global strings `X^n` and `Y^n` (6n - 1)
//! - G4: G3 plus every long-range XX/YY/ZZ pair (|i - j| >= 2) and `Z^n`
//!
//! The G4 extension is a convention: "long-range two-qubit correlations"
//! admits several readings, and this one gives 33 operators at n = 4 and 48
//! at n = 5. Callers needing a different roster can supply a custom set.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::pauli::{self, Pauli, PauliString, DENSE_QUBIT_CAP};
use crate::{Error, Result};

/// Which roster an [`OperatorSet`] was built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SetTag {
    G1,
    G2,
    G3,
    G4,
    Full,
    Custom,
}

impl fmt::Display for SetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SetTag::G1 => "G1",
            SetTag::G2 => "G2",
            SetTag::G3 => "G3",
            SetTag::G4 => "G4",
            SetTag::Full => "FULL",
            SetTag::Custom => "CUSTOM",
        };
        f.write_str(s)
    }
}

impl FromStr for SetTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "G1" => Ok(SetTag::G1),
            "G2" => Ok(SetTag::G2),
            "G3" => Ok(SetTag::G3),
            "G4" => Ok(SetTag::G4),
            "FULL" => Ok(SetTag::Full),
            "CUSTOM" => Ok(SetTag::Custom),
            _ => Err(Error::UnknownTag(s.to_string())),
        }
    }
}

/// An ordered list of distinct non-identity Pauli strings on n qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorSet {
    n: usize,
    tag: SetTag,
    operators: Vec<PauliString>,
}

impl OperatorSet {
    /// Single-qubit observables `{X_i, Y_i, Z_i}`, 3n operators.
    pub fn g1(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::TooFewQubits {
                set: "G1",
                min: 1,
                n,
            });
        }
        let mut operators = Vec::with_capacity(3 * n);
        for site in 0..n {
            for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
                operators.push(PauliString::single(n, site, axis));
            }
        }
        Ok(Self {
            n,
            tag: SetTag::G1,
            operators,
        })
    }

    /// G1 plus nearest-neighbor pairs on an open chain, 6n - 3 operators.
    pub fn g2(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewQubits {
                set: "G2",
                min: 2,
                n,
            });
        }
        let mut set = Self::g1(n)?;
        for site in 0..n - 1 {
            for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
                set.operators.push(PauliString::pair(n, site, site + 1, axis));
            }
        }
        set.tag = SetTag::G2;
        Ok(set)
    }

    /// G2 plus the global coherence operators `X^n` and `Y^n`, 6n - 1.
    pub fn g3(n: usize) -> Result<Self> {
        let mut set = Self::g2(n)?;
        set.operators.push(PauliString::uniform(n, Pauli::X));
        set.operators.push(PauliString::uniform(n, Pauli::Y));
        set.tag = SetTag::G3;
        Ok(set)
    }

    /// G3 plus all long-range same-axis pairs and `Z^n` (see module docs).
    pub fn g4(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooFewQubits {
                set: "G4",
                min: 3,
                n,
            });
        }
        let mut set = Self::g3(n)?;
        for i in 0..n {
            for j in i + 2..n {
                for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
                    set.operators.push(PauliString::pair(n, i, j, axis));
                }
            }
        }
        set.operators.push(PauliString::uniform(n, Pauli::Z));
        set.tag = SetTag::G4;
        Ok(set)
    }

    /// Every non-identity string, `4^n - 1` operators in enumeration order.
    pub fn full(n: usize) -> Result<Self> {
        if !(1..=DENSE_QUBIT_CAP).contains(&n) {
            return Err(Error::QubitCapExceeded {
                n,
                cap: DENSE_QUBIT_CAP,
            });
        }
        Ok(Self {
            n,
            tag: SetTag::Full,
            operators: pauli::enumerate(n, false),
        })
    }

    /// User-supplied label list, order preserved. Rejects parse failures,
    /// duplicates, and the identity, naming the offending label.
    pub fn custom<S: AsRef<str>>(labels: &[S], n: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyOperatorSet);
        }
        let mut operators = Vec::with_capacity(labels.len());
        let mut seen = BTreeSet::new();
        for label in labels {
            let p = PauliString::parse(label.as_ref(), n)?;
            if p.is_identity() {
                return Err(Error::IdentityOperator(p.label()));
            }
            if !seen.insert(p.clone()) {
                return Err(Error::DuplicateOperator(p.label()));
            }
            operators.push(p);
        }
        Ok(Self {
            n,
            tag: SetTag::Custom,
            operators,
        })
    }

    /// Build one of the named rosters.
    pub fn from_tag(tag: SetTag, n: usize) -> Result<Self> {
        match tag {
            SetTag::G1 => Self::g1(n),
            SetTag::G2 => Self::g2(n),
            SetTag::G3 => Self::g3(n),
            SetTag::G4 => Self::g4(n),
            SetTag::Full => Self::full(n),
            SetTag::Custom => Err(Error::UnknownTag(
                "CUSTOM sets need an explicit label list".into(),
            )),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tag(&self) -> SetTag {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[PauliString] {
        &self.operators
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PauliString> {
        self.operators.iter()
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.operators.contains(p)
    }

    pub fn labels(&self) -> Vec<String> {
        self.operators.iter().map(|p| p.label()).collect()
    }
}

impl<'a> IntoIterator for &'a OperatorSet {
    type Item = &'a PauliString;
    type IntoIter = std::slice::Iter<'a, PauliString>;

    fn into_iter(self) -> Self::IntoIter {
        self.operators.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::DensityMatrix;
    use approx::assert_abs_diff_eq;

    #[test]
    fn g1_sizes_and_content() {
        assert_eq!(OperatorSet::g1(3).unwrap().len(), 9);
        assert_eq!(OperatorSet::g1(5).unwrap().len(), 15);
        let g1 = OperatorSet::g1(1).unwrap();
        assert_eq!(g1.labels(), ["X", "Y", "Z"]);
    }

    #[test]
    fn g2_g3_sizes() {
        assert_eq!(OperatorSet::g2(3).unwrap().len(), 15);
        assert_eq!(OperatorSet::g2(4).unwrap().len(), 21);
        assert_eq!(OperatorSet::g2(5).unwrap().len(), 27);
        assert_eq!(OperatorSet::g3(3).unwrap().len(), 17);
        assert_eq!(OperatorSet::g3(4).unwrap().len(), 23);
        assert_eq!(OperatorSet::g3(5).unwrap().len(), 29);
        assert!(matches!(
            OperatorSet::g2(1),
            Err(Error::TooFewQubits { .. })
        ));
    }

    #[test]
    fn g4_sizes_under_documented_convention() {
        assert_eq!(OperatorSet::g4(3).unwrap().len(), 21);
        assert_eq!(OperatorSet::g4(4).unwrap().len(), 33);
        assert_eq!(OperatorSet::g4(5).unwrap().len(), 48);
        assert!(matches!(
            OperatorSet::g4(2),
            Err(Error::TooFewQubits { .. })
        ));
    }

    #[test]
    fn full_sizes() {
        assert_eq!(OperatorSet::full(3).unwrap().len(), 63);
        assert_eq!(OperatorSet::full(4).unwrap().len(), 255);
        assert_eq!(OperatorSet::full(5).unwrap().len(), 1023);
    }

    #[test]
    fn size_formulas_hold_up_to_eight_qubits() {
        for n in 2..=8 {
            assert_eq!(OperatorSet::g1(n).unwrap().len(), 3 * n);
            assert_eq!(OperatorSet::g2(n).unwrap().len(), 6 * n - 3);
            assert_eq!(OperatorSet::g3(n).unwrap().len(), 6 * n - 1);
        }
    }

    #[test]
    fn hierarchy_is_strictly_nested() {
        for n in 3..=6 {
            let g1 = OperatorSet::g1(n).unwrap();
            let g2 = OperatorSet::g2(n).unwrap();
            let g3 = OperatorSet::g3(n).unwrap();
            let g4 = OperatorSet::g4(n).unwrap();
            assert!(g1.iter().all(|p| g2.contains(p)) && g2.len() > g1.len());
            assert!(g2.iter().all(|p| g3.contains(p)) && g3.len() > g2.len());
            assert!(g3.iter().all(|p| g4.contains(p)) && g4.len() > g3.len());
        }
    }

    #[test]
    fn sets_never_contain_identity_or_duplicates() {
        for n in 3..=5 {
            for set in [
                OperatorSet::g1(n).unwrap(),
                OperatorSet::g4(n).unwrap(),
                OperatorSet::full(n).unwrap(),
            ] {
                let unique: BTreeSet<_> = set.iter().collect();
                assert_eq!(unique.len(), set.len());
                assert!(set.iter().all(|p| !p.is_identity()));
                assert!(set.iter().all(|p| p.n() == n));
            }
        }
    }

    #[test]
    fn g3_expectations_follow_the_stabilizer_pattern() {
        for n in [3usize, 4, 5] {
            let ghz = DensityMatrix::ghz(n).unwrap();
            for p in OperatorSet::g3(n).unwrap().iter() {
                let value = ghz.expectation(p).unwrap();
                let label = p.label();
                let expected = if label == "X".repeat(n) {
                    1.0
                } else if label == "Y".repeat(n) {
                    // vanishes for odd n, alternates sign for even n
                    if n % 2 == 1 {
                        0.0
                    } else if n % 4 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                } else if p.weight() == 2
                    && p.sites().iter().all(|&s| s == Pauli::I || s == Pauli::Z)
                {
                    1.0
                } else {
                    0.0
                };
                assert_abs_diff_eq!(value, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn custom_sets_validate_labels() {
        let set = OperatorSet::custom(&["XXX", "YYY"], 3).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.tag(), SetTag::Custom);

        match OperatorSet::custom(&["XX"], 3) {
            Err(Error::LabelLength { label, .. }) => assert_eq!(label, "XX"),
            other => panic!("expected length error, got {other:?}"),
        }
        match OperatorSet::custom(&["ZZI", "ZZI"], 3) {
            Err(Error::DuplicateOperator(label)) => assert_eq!(label, "ZZI"),
            other => panic!("expected duplicate error, got {other:?}"),
        }
        assert!(matches!(
            OperatorSet::custom(&["III"], 3),
            Err(Error::IdentityOperator(_))
        ));
    }

    #[test]
    fn tags_round_trip_through_strings() {
        for tag in [
            SetTag::G1,
            SetTag::G2,
            SetTag::G3,
            SetTag::G4,
            SetTag::Full,
            SetTag::Custom,
        ] {
            assert_eq!(tag.to_string().parse::<SetTag>().unwrap(), tag);
        }
        assert!("g3".parse::<SetTag>().is_ok());
        assert!("G9".parse::<SetTag>().is_err());
    }
}
