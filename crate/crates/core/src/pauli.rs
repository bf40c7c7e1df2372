//! Phase-free Pauli operators in the binary symplectic representation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CodeError, Gf2Error};
use crate::gf2::BitVec;

/// A single-qubit Pauli, phase ignored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'I' | '_' | '.' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// An `n`-qubit Pauli operator `X^x Z^z`, phase ignored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    x: BitVec,
    z: BitVec,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        Self {
            x: BitVec::zeros(n),
            z: BitVec::zeros(n),
        }
    }

    pub fn from_parts(x: BitVec, z: BitVec) -> Result<Self, Gf2Error> {
        if x.len() != z.len() {
            return Err(Gf2Error::DimensionMismatch {
                expected: x.len(),
                found: z.len(),
            });
        }
        Ok(Self { x, z })
    }

    /// `P` on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut op = Self::identity(n);
        op.set(q, p);
        op
    }

    /// Pure X-type operator with the given support.
    pub fn x_type(x: BitVec) -> Self {
        let n = x.len();
        Self { x, z: BitVec::zeros(n) }
    }

    /// Pure Z-type operator with the given support.
    pub fn z_type(z: BitVec) -> Self {
        let n = z.len();
        Self { x: BitVec::zeros(n), z }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.len()
    }

    #[inline]
    pub fn x_part(&self) -> &BitVec {
        &self.x
    }

    #[inline]
    pub fn z_part(&self) -> &BitVec {
        &self.z
    }

    #[inline]
    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x.get(q), self.z.get(q))
    }

    #[inline]
    pub fn set(&mut self, q: usize, p: Pauli) {
        let (x, z) = p.bits();
        self.x.set(q, x);
        self.z.set(q, z);
    }

    /// Multiplies `P` onto qubit `q`.
    #[inline]
    pub fn apply(&mut self, q: usize, p: Pauli) {
        let (x, z) = p.bits();
        if x {
            self.x.flip(q);
        }
        if z {
            self.z.flip(q);
        }
    }

    pub fn weight(&self) -> usize {
        self.x
            .words()
            .iter()
            .zip(self.z.words())
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// Qubits on which the operator acts non-trivially.
    pub fn support(&self) -> Vec<usize> {
        self.x.or(&self.z).ones()
    }

    pub fn support_mask(&self) -> BitVec {
        self.x.or(&self.z)
    }

    /// `Σ_i x_i·z'_i + z_i·x'_i mod 2`; `false` iff the operators commute.
    pub fn symplectic_product(&self, other: &PauliOperator) -> Result<bool, CodeError> {
        if self.n() != other.n() {
            return Err(CodeError::QubitCount {
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok(self.symplectic_unchecked(other))
    }

    #[inline]
    pub(crate) fn symplectic_unchecked(&self, other: &PauliOperator) -> bool {
        let mut acc = 0u32;
        for i in 0..self.x.words().len() {
            acc ^= (self.x.words()[i] & other.z.words()[i]).count_ones();
            acc ^= (self.z.words()[i] & other.x.words()[i]).count_ones();
        }
        acc & 1 == 1
    }

    pub fn commutes_with(&self, other: &PauliOperator) -> Result<bool, CodeError> {
        Ok(!self.symplectic_product(other)?)
    }

    /// Product up to phase.
    pub fn mul(&self, other: &PauliOperator) -> PauliOperator {
        assert_eq!(self.n(), other.n(), "Pauli length mismatch");
        PauliOperator {
            x: self.x.xor(&other.x),
            z: self.z.xor(&other.z),
        }
    }

    pub fn mul_assign(&mut self, other: &PauliOperator) {
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
    }

    /// Keeps only the qubits set in `mask`.
    pub fn restrict(&self, mask: &BitVec) -> PauliOperator {
        PauliOperator {
            x: self.x.and(mask),
            z: self.z.and(mask),
        }
    }

    /// Symplectic vector `(x | z)` of length `2n`.
    pub fn to_symplectic(&self) -> BitVec {
        self.x.concat(&self.z)
    }

    pub fn from_symplectic(v: &BitVec) -> Result<Self, Gf2Error> {
        if !v.len().is_multiple_of(2) {
            return Err(Gf2Error::DimensionMismatch {
                expected: v.len() + 1,
                found: v.len(),
            });
        }
        let n = v.len() / 2;
        Ok(Self {
            x: v.slice(0, n),
            z: v.slice(n, n),
        })
    }

    /// Lexicographic order on `(x_part, z_part)`.
    pub fn lex_cmp(&self, other: &PauliOperator) -> Ordering {
        self.x.lex_cmp(&other.x).then_with(|| self.z.lex_cmp(&other.z))
    }

    /// Swaps X and Z on qubit `q` (Hadamard conjugation).
    pub fn hadamard(&mut self, q: usize) {
        let (x, z) = (self.x.get(q), self.z.get(q));
        self.x.set(q, z);
        self.z.set(q, x);
    }

    /// Relabels qubits: qubit `q` of `self` becomes qubit `perm[q]`.
    pub fn permuted(&self, perm: &[usize]) -> PauliOperator {
        let mut out = PauliOperator::identity(self.n());
        for q in self.support() {
            out.set(perm[q], self.get(q));
        }
        out
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n() {
            write!(f, "{}", self.get(q).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliOperator {
    type Err = Gf2Error;

    /// Dense string such as `XIZY`, one symbol per qubit.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let symbols: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut op = PauliOperator::identity(symbols.len());
        for (q, c) in symbols.into_iter().enumerate() {
            let p = Pauli::from_symbol(c).ok_or_else(|| Gf2Error::Parse {
                line: 1,
                message: format!("invalid Pauli symbol {c:?}"),
            })?;
            op.set(q, p);
        }
        Ok(op)
    }
}

impl Serialize for PauliOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
