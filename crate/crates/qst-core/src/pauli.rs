//! n-qubit Pauli strings.
//!
//! A [`PauliString`] is a length-n word over `{I, X, Y, Z}`; qubit 0 is the
//! leftmost character and maps to the most significant bit of a basis index,
//! so `|0...0>` is index 0 and `|1...1>` is index `2^n - 1`.
//!
//! Every Pauli string acts on the computational basis as a signed
//! permutation, `P|b> = phase(b) |b ^ flip>`, which keeps expectation
//! evaluation at `O(2^n)` per operator instead of forming dense products.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{C64, CMatrix, Error, Result};

/// Dense synthesis is refused above this many qubits (dim 2^12 = 4096).
pub const DENSE_QUBIT_CAP: usize = 12;

/// Tolerance on the imaginary part of Tr(rho P) before it is discarded.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

/// Single-site Pauli operator. The derived ordering `I < X < Y < Z` is the
/// per-site ordering used everywhere labels are sorted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(ch: char) -> Option<Self> {
        match ch.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// 2x2 matrix of the single-site operator.
    pub fn matrix(self) -> CMatrix {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => CMatrix::from_row_slice(2, 2, &[l, o, o, l]),
            Pauli::X => CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            Pauli::Y => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            Pauli::Z => CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        }
    }
}

/// An n-site Pauli word. Ordering is lexicographic with `I < X < Y < Z`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    sites: Vec<Pauli>,
}

impl PauliString {
    /// Build from explicit sites. Empty words are not representable.
    pub fn new(sites: Vec<Pauli>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::LabelLength {
                label: String::new(),
                got: 0,
                expected: 1,
            });
        }
        Ok(Self { sites })
    }

    /// Parse an n-character label such as `"IZY"`. Case-insensitive;
    /// the length must equal `n` exactly.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let chars: Vec<char> = text.chars().collect();
        if chars.len() != n || n == 0 {
            return Err(Error::LabelLength {
                label: text.to_string(),
                got: chars.len(),
                expected: n,
            });
        }
        let mut sites = Vec::with_capacity(n);
        for ch in chars {
            match Pauli::from_char(ch) {
                Some(p) => sites.push(p),
                None => {
                    return Err(Error::LabelChar {
                        label: text.to_string(),
                        ch,
                    });
                }
            }
        }
        Ok(Self { sites })
    }

    /// The identity word of length n.
    pub fn identity(n: usize) -> Self {
        Self {
            sites: vec![Pauli::I; n],
        }
    }

    /// Single-site operator `axis` at `site`, identity elsewhere.
    pub fn single(n: usize, site: usize, axis: Pauli) -> Self {
        let mut sites = vec![Pauli::I; n];
        sites[site] = axis;
        Self { sites }
    }

    /// Two-site operator with the same axis at `a` and `b`.
    pub fn pair(n: usize, a: usize, b: usize, axis: Pauli) -> Self {
        let mut sites = vec![Pauli::I; n];
        sites[a] = axis;
        sites[b] = axis;
        Self { sites }
    }

    /// The uniform word `axis^(x)n`, e.g. `X...X`.
    pub fn uniform(n: usize, axis: Pauli) -> Self {
        Self {
            sites: vec![axis; n],
        }
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Pauli] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> Pauli {
        self.sites[i]
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        self.sites.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.sites.iter().all(|&p| p == Pauli::I)
    }

    /// Canonical label, e.g. `"IZY"`.
    pub fn label(&self) -> String {
        self.sites.iter().map(|p| p.to_char()).collect()
    }

    /// Signed-permutation description of the column action.
    pub fn column_action(&self) -> ColumnAction {
        let n = self.n();
        let mut flip_mask = 0usize;
        let mut yz_mask = 0usize;
        let mut y_count = 0u32;
        for (site, &p) in self.sites.iter().enumerate() {
            let bit = 1usize << (n - 1 - site);
            match p {
                Pauli::I => {}
                Pauli::X => flip_mask |= bit,
                Pauli::Y => {
                    flip_mask |= bit;
                    yz_mask |= bit;
                    y_count += 1;
                }
                Pauli::Z => yz_mask |= bit,
            }
        }
        // i^y_count cycles with period 4.
        let global = match y_count % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        ColumnAction {
            dim: 1usize << n,
            flip_mask,
            yz_mask,
            global,
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parse with the qubit count inferred from the label length.
    fn from_str(s: &str) -> Result<Self> {
        PauliString::parse(s, s.chars().count())
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How a Pauli string acts on computational-basis columns:
/// `P|b> = phase(b) |b ^ flip_mask>`.
#[derive(Clone, Copy, Debug)]
pub struct ColumnAction {
    dim: usize,
    flip_mask: usize,
    yz_mask: usize,
    global: C64,
}

impl ColumnAction {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Image of basis index `b` under the permutation part.
    #[inline]
    pub fn map(&self, b: usize) -> usize {
        b ^ self.flip_mask
    }

    /// Phase attached to column `b`: `i^{#Y} * (-1)^{popcount(b & (Y|Z))}`.
    #[inline]
    pub fn phase(&self, b: usize) -> C64 {
        if (b & self.yz_mask).count_ones().is_multiple_of(2) {
            self.global
        } else {
            -self.global
        }
    }

    /// Accumulate `coeff * P` into a dense matrix.
    pub fn add_scaled_to(&self, target: &mut CMatrix, coeff: C64) {
        for b in 0..self.dim {
            target[(self.map(b), b)] += coeff * self.phase(b);
        }
    }

    /// Tr(M P) for a dense square matrix of matching dimension.
    pub fn trace_product(&self, m: &CMatrix) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for b in 0..self.dim {
            acc += self.phase(b) * m[(b, self.map(b))];
        }
        acc
    }
}

/// Dense 2^n x 2^n matrix of the operator (Kronecker product of sites).
pub fn to_matrix(p: &PauliString) -> Result<CMatrix> {
    let n = p.n();
    if n > DENSE_QUBIT_CAP {
        return Err(Error::QubitCapExceeded {
            n,
            cap: DENSE_QUBIT_CAP,
        });
    }
    let action = p.column_action();
    let dim = action.dim();
    let mut m = CMatrix::zeros(dim, dim);
    action.add_scaled_to(&mut m, C64::new(1.0, 0.0));
    Ok(m)
}

/// All length-n Pauli strings in lexicographic order (`I < X < Y < Z` per
/// site, qubit 0 most significant). With the identity there are `4^n`
/// entries and the identity comes first; without it, `4^n - 1`.
pub fn enumerate(n: usize, include_identity: bool) -> Vec<PauliString> {
    assert!(n >= 1, "qubit count must be positive");
    let total = 4usize.pow(n as u32);
    let start = if include_identity { 0 } else { 1 };
    let mut out = Vec::with_capacity(total - start);
    for code in start..total {
        let mut sites = vec![Pauli::I; n];
        let mut c = code;
        for site in (0..n).rev() {
            sites[site] = match c % 4 {
                0 => Pauli::I,
                1 => Pauli::X,
                2 => Pauli::Y,
                _ => Pauli::Z,
            };
            c /= 4;
        }
        out.push(PauliString { sites });
    }
    out
}

/// Tr(rho P), evaluated through the signed permutation. The imaginary part
/// must fall below [`EXPECTATION_IMAG_TOL`]; anything larger flags a
/// non-Hermitian input.
pub fn expectation(rho: &CMatrix, p: &PauliString) -> Result<f64> {
    let dim = 1usize << p.n();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch {
            left: rho.nrows(),
            right: dim,
        });
    }
    let value = p.column_action().trace_product(rho);
    if value.im.abs() > EXPECTATION_IMAG_TOL {
        return Err(Error::ComplexExpectation { imag: value.im });
    }
    Ok(value.re)
}
