//! Bit-packed linear algebra over GF(2).
//!
//! [`BitVec`] and [`BinaryMatrix`] store bits in 64-bit words, row-major for
//! matrices. All row operations work on whole words.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Gf2Error;

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector of length `len` with ones at `positions`.
    ///
    /// Positions are toggled, so a repeated index cancels.
    pub fn from_positions(len: usize, positions: &[usize]) -> Result<Self, Gf2Error> {
        let mut v = Self::zeros(len);
        for &p in positions {
            if p >= len {
                return Err(Gf2Error::IndexOutOfRange { index: p, len });
            }
            v.flip(p);
        }
        Ok(v)
    }

    /// Parses a string of `0`/`1` characters, first character is bit 0.
    pub fn from_bit_str(s: &str) -> Result<Self, Gf2Error> {
        let bits: Result<Vec<bool>, Gf2Error> = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Gf2Error::Parse {
                    line: 1,
                    message: format!("unexpected character {other:?} in bit string"),
                }),
            })
            .collect();
        Ok(Self::from_bools(&bits?))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    /// In-place XOR. Panics on length mismatch.
    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "BitVec length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn or(&self, other: &BitVec) -> BitVec {
        assert_eq!(self.len, other.len, "BitVec length mismatch");
        BitVec {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn and(&self, other: &BitVec) -> BitVec {
        assert_eq!(self.len, other.len, "BitVec length mismatch");
        BitVec {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "BitVec length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of set bits in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let tz = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + tz)
                }
            })
        })
    }

    pub fn ones(&self) -> Vec<usize> {
        self.iter_ones().collect()
    }

    /// Lexicographic comparison of the bit sequences, bit 0 first, `0 < 1`.
    pub fn lex_cmp(&self, other: &BitVec) -> Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            let diff = a ^ b;
            if diff != 0 {
                let first = diff.trailing_zeros();
                return if (a >> first) & 1 == 0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
        }
        self.len.cmp(&other.len)
    }

    /// Hex encoding: digit `j` holds bits `4j..4j+4`, lowest bit in the
    /// least significant position.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        (0..digits)
            .map(|j| {
                let mut d = 0u32;
                for b in 0..4 {
                    let i = 4 * j + b;
                    if i < self.len && self.get(i) {
                        d |= 1 << b;
                    }
                }
                std::char::from_digit(d, 16).expect("nibble")
            })
            .collect()
    }

    pub fn from_hex(len: usize, hex: &str) -> Result<Self, Gf2Error> {
        let digits = len.div_ceil(4);
        if hex.len() != digits {
            return Err(Gf2Error::Parse {
                line: 1,
                message: format!("hex string of length {} cannot encode {len} bits", hex.len()),
            });
        }
        let mut v = Self::zeros(len);
        for (j, c) in hex.chars().enumerate() {
            let d = c.to_digit(16).ok_or_else(|| Gf2Error::Parse {
                line: 1,
                message: format!("invalid hex digit {c:?}"),
            })?;
            for b in 0..4 {
                if d >> b & 1 == 1 {
                    let i = 4 * j + b;
                    if i >= len {
                        return Err(Gf2Error::Parse {
                            line: 1,
                            message: format!("hex string sets bit {i} beyond length {len}"),
                        });
                    }
                    v.set(i, true);
                }
            }
        }
        Ok(v)
    }

    /// Concatenation `self ‖ other`.
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.len + other.len);
        for i in self.iter_ones() {
            out.set(i, true);
        }
        for i in other.iter_ones() {
            out.set(self.len + i, true);
        }
        out
    }

    /// Bits `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> BitVec {
        assert!(start + len <= self.len);
        let mut out = BitVec::zeros(len);
        for i in 0..len {
            if self.get(start + i) {
                out.set(i, true);
            }
        }
        out
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec(")?;
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

/// Serialized as a `0`/`1` string, bit 0 first.
impl Serialize for BitVec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BitVec::from_bit_str(&s).map_err(serde::de::Error::custom)
    }
}

/// A dense matrix over GF(2) with bit-packed rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

/// Result of a consistent affine solve `m·x = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSolution {
    pub solution: BitVec,
    pub nullspace: Vec<BitVec>,
}

/// Reduced row echelon form together with the pivot column of each
/// non-zero row.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub matrix: BinaryMatrix,
    pub pivots: Vec<usize>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows given as lists of set column indices (0-based).
    pub fn from_sparse_rows(rows: usize, cols: usize, entries: &[Vec<usize>]) -> Result<Self, Gf2Error> {
        if entries.len() != rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: rows,
                found: entries.len(),
            });
        }
        let mut m = Self::zeros(rows, cols);
        for (r, row) in entries.iter().enumerate() {
            for &c in row {
                if c >= cols {
                    return Err(Gf2Error::IndexOutOfRange { index: c, len: cols });
                }
                m.set(r, c, true);
            }
        }
        Ok(m)
    }

    /// Builds a matrix from equal-length rows. An empty list gives a `0 × cols` matrix.
    pub fn from_rows(cols: usize, rows: &[BitVec]) -> Result<Self, Gf2Error> {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Gf2Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            m.row_words_mut(r).copy_from_slice(row.words());
        }
        Ok(m)
    }

    /// Parses a dense `0`/`1` literal, rows separated by newlines or `;`.
    pub fn from_dense_str(s: &str) -> Result<Self, Gf2Error> {
        let rows: Vec<BitVec> = s
            .split([';', '\n'])
            .map(str::trim)
            .filter(|r| !r.is_empty())
            .map(BitVec::from_bit_str)
            .collect::<Result<_, _>>()?;
        let cols = rows.first().map_or(0, BitVec::len);
        Self::from_rows(cols, &rows)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let idx = r * self.stride + c / WORD;
        let mask = 1u64 << (c % WORD);
        if value {
            self.data[idx] |= mask;
        } else {
            self.data[idx] &= !mask;
        }
    }

    pub fn row(&self, r: usize) -> BitVec {
        BitVec {
            len: self.cols,
            words: self.row_words(r).to_vec(),
        }
    }

    pub fn row_vecs(&self) -> Vec<BitVec> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn column(&self, c: usize) -> BitVec {
        let mut v = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    /// Column indices of the set bits in row `r`.
    pub fn row_support(&self, r: usize) -> Vec<usize> {
        self.row(r).ones()
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn row_weights(&self) -> Vec<usize> {
        (0..self.rows).map(|r| self.row_weight(r)).collect()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.cols];
        for r in 0..self.rows {
            for c in self.row(r).iter_ones() {
                w[c] += 1;
            }
        }
        w
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// `row[dst] ^= row[src]`.
    #[inline]
    pub fn add_row(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let s = self.stride;
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&lo[src * s..(src + 1) * s], &mut hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&hi[..s], &mut lo[dst * s..(dst + 1) * s])
        };
        for (d, w) in b.iter_mut().zip(a) {
            *d ^= w;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    pub fn transpose(&self) -> BinaryMatrix {
        let mut t = BinaryMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).iter_ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Matrix-vector product `self · v`.
    pub fn mul_vec(&self, v: &BitVec) -> Result<BitVec, Gf2Error> {
        if v.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut out = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            let parity = self
                .row_words(r)
                .iter()
                .zip(v.words())
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones());
            if parity & 1 == 1 {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &BinaryMatrix) -> Result<BinaryMatrix, Gf2Error> {
        if self.cols != other.rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = BinaryMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in self.row(r).iter_ones() {
                let src = other.row_words(k).to_vec();
                for (d, w) in out.row_words_mut(r).iter_mut().zip(&src) {
                    *d ^= w;
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &BinaryMatrix) -> BinaryMatrix {
        let mut out = BinaryMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in self.row(r1).iter_ones() {
                for r2 in 0..other.rows {
                    for c2 in other.row(r2).iter_ones() {
                        out.set(r1 * other.rows + r2, c1 * other.cols + c2, true);
                    }
                }
            }
        }
        out
    }

    /// Horizontal concatenation `(self | other)`.
    pub fn hconcat(&self, other: &BinaryMatrix) -> Result<BinaryMatrix, Gf2Error> {
        if self.rows != other.rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        let rows: Vec<BitVec> = (0..self.rows).map(|r| self.row(r).concat(&other.row(r))).collect();
        BinaryMatrix::from_rows(self.cols + other.cols, &rows)
    }

    /// Vertical concatenation.
    pub fn vconcat(&self, other: &BinaryMatrix) -> Result<BinaryMatrix, Gf2Error> {
        if self.cols != other.cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        let mut out = self.clone();
        out.rows += other.rows;
        out.data.extend_from_slice(&other.data);
        Ok(out)
    }

    /// Keeps the rows listed in `keep`, in that order.
    pub fn select_rows(&self, keep: &[usize]) -> BinaryMatrix {
        let mut out = BinaryMatrix::zeros(keep.len(), self.cols);
        for (i, &r) in keep.iter().enumerate() {
            let src = self.row_words(r).to_vec();
            out.row_words_mut(i).copy_from_slice(&src);
        }
        out
    }

    /// Reduced row echelon form. Pivots are chosen at the lowest column index.
    pub fn echelon(&self) -> Echelon {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut next = 0;
        for c in 0..m.cols {
            if next == m.rows {
                break;
            }
            let Some(p) = (next..m.rows).find(|&r| m.get(r, c)) else {
                continue;
            };
            m.swap_rows(p, next);
            for r in 0..m.rows {
                if r != next && m.get(r, c) {
                    m.add_row(next, r);
                }
            }
            pivots.push(c);
            next += 1;
        }
        Echelon { matrix: m, pivots }
    }

    /// Row rank over GF(2).
    pub fn rank(&self) -> usize {
        // forward elimination only; cheaper than a full echelon form
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..m.cols {
            if rank == m.rows {
                break;
            }
            let Some(p) = (rank..m.rows).find(|&r| m.get(r, c)) else {
                continue;
            };
            m.swap_rows(p, rank);
            for r in rank + 1..m.rows {
                if m.get(r, c) {
                    m.add_row(rank, r);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Indices of a maximal independent subset of rows, greedily in row order.
    pub fn independent_rows(&self) -> Vec<usize> {
        let mut basis: Vec<(usize, BitVec)> = Vec::new();
        let mut keep = Vec::new();
        for r in 0..self.rows {
            let mut v = self.row(r);
            for (pivot, b) in &basis {
                if v.get(*pivot) {
                    v.xor_assign(b);
                }
            }
            let first = v.iter_ones().next();
            if let Some(pivot) = first {
                for (_, b) in basis.iter_mut() {
                    if b.get(pivot) {
                        b.xor_assign(&v);
                    }
                }
                basis.push((pivot, v));
                keep.push(r);
            }
        }
        keep
    }

    /// A basis of `{x : self·x = 0}`.
    pub fn nullspace(&self) -> Vec<BitVec> {
        let ech = self.echelon();
        nullspace_from_echelon(&ech, self.cols)
    }

    /// Solves `self · x = rhs`. Returns `None` when the system is inconsistent.
    pub fn solve_affine(&self, rhs: &BitVec) -> Result<Option<AffineSolution>, Gf2Error> {
        if rhs.len() != self.rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.rows,
                found: rhs.len(),
            });
        }
        // eliminate on [self | rhs]; the extra column tracks the right-hand side
        let mut aug = self.hconcat(&BinaryMatrix::from_rows(1, &rhs_as_rows(rhs))?)?;
        let mut pivots = Vec::new();
        let mut next = 0;
        for c in 0..self.cols {
            if next == aug.rows {
                break;
            }
            let Some(p) = (next..aug.rows).find(|&r| aug.get(r, c)) else {
                continue;
            };
            aug.swap_rows(p, next);
            for r in 0..aug.rows {
                if r != next && aug.get(r, c) {
                    aug.add_row(next, r);
                }
            }
            pivots.push(c);
            next += 1;
        }
        let last = self.cols;
        if (next..aug.rows).any(|r| aug.get(r, last)) {
            return Ok(None);
        }
        let mut solution = BitVec::zeros(self.cols);
        for (i, &c) in pivots.iter().enumerate() {
            if aug.get(i, last) {
                solution.set(c, true);
            }
        }
        let ech = Echelon { matrix: aug, pivots };
        Ok(Some(AffineSolution {
            solution,
            nullspace: nullspace_from_echelon(&ech, self.cols),
        }))
    }

    /// Whether `v` lies in the row space.
    pub fn row_space_contains(&self, v: &BitVec) -> bool {
        let ech = self.echelon();
        reduce_against(&ech, v).is_zero()
    }

    /// Sparse text format: a header `rows cols`, then one line per row listing
    /// the 1-based column indices of its set bits (an empty line for a zero row).
    pub fn to_sparse_string(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter_ones().map(|c| (c + 1).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_sparse(text: &str) -> Result<Self, Gf2Error> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Gf2Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Gf2Error::Parse {
                line: 1,
                message: format!("header must be `rows cols`, got {header:?}"),
            });
        }
        let parse_dim = |s: &str| {
            s.parse::<usize>().map_err(|e| Gf2Error::Parse {
                line: 1,
                message: format!("bad dimension {s:?}: {e}"),
            })
        };
        let rows = parse_dim(dims[0])?;
        let cols = parse_dim(dims[1])?;
        if rows.saturating_mul(cols) > MAX_PARSED_ENTRIES {
            return Err(Gf2Error::Parse {
                line: 1,
                message: format!("matrix {rows}x{cols} exceeds the parser size limit"),
            });
        }
        let mut m = BinaryMatrix::zeros(rows, cols);
        let mut r = 0;
        for (offset, line) in lines.enumerate() {
            let lineno = offset + 2;
            if r == rows {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Gf2Error::Parse {
                    line: lineno,
                    message: format!("more than {rows} rows"),
                });
            }
            for tok in line.split_whitespace() {
                let c: usize = tok.parse().map_err(|e| Gf2Error::Parse {
                    line: lineno,
                    message: format!("bad column index {tok:?}: {e}"),
                })?;
                if c == 0 || c > cols {
                    return Err(Gf2Error::Parse {
                        line: lineno,
                        message: format!("column index {c} outside 1..={cols}"),
                    });
                }
                m.set(r, c - 1, true);
            }
            r += 1;
        }
        // trailing zero rows may be omitted
        Ok(m)
    }
}

/// Upper bound on `rows * cols` accepted from text input.
pub const MAX_PARSED_ENTRIES: usize = 1 << 26;

fn rhs_as_rows(rhs: &BitVec) -> Vec<BitVec> {
    (0..rhs.len()).map(|i| BitVec::from_bools(&[rhs.get(i)])).collect()
}

fn nullspace_from_echelon(ech: &Echelon, cols: usize) -> Vec<BitVec> {
    let mut is_pivot = vec![false; cols];
    for &p in &ech.pivots {
        is_pivot[p] = true;
    }
    (0..cols)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = BitVec::zeros(cols);
            v.set(f, true);
            for (i, &p) in ech.pivots.iter().enumerate() {
                if ech.matrix.get(i, f) {
                    v.set(p, true);
                }
            }
            v
        })
        .collect()
}

/// Reduces `v` by the pivot rows of an echelon form; zero iff `v` is in the row space.
pub fn reduce_against(ech: &Echelon, v: &BitVec) -> BitVec {
    let mut v = v.clone();
    for (i, &p) in ech.pivots.iter().enumerate() {
        if v.get(p) {
            v.xor_assign(&ech.matrix.row(i));
        }
    }
    v
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Serialized in the sparse text format.
impl Serialize for BinaryMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_sparse_string())
    }
}

impl<'de> Deserialize<'de> for BinaryMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BinaryMatrix::parse_sparse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> BitVec {
        BitVec::from_bit_str(s).unwrap()
    }

    #[test]
    fn rank_of_identity_and_zero() {
        assert_eq!(BinaryMatrix::identity(2).rank(), 2);
        assert_eq!(BinaryMatrix::zeros(3, 4).rank(), 0);
    }

    #[test]
    fn rank_with_dependent_row() {
        let h = BinaryMatrix::from_dense_str("110;011;101").unwrap();
        assert_eq!(h.rank(), 2);
        assert_eq!(h.independent_rows(), vec![0, 1]);
    }

    #[test]
    fn solve_identity_system() {
        let sol = BinaryMatrix::identity(3).solve_affine(&bits("101")).unwrap().unwrap();
        assert_eq!(sol.solution, bits("101"));
        assert!(sol.nullspace.is_empty());
    }

    #[test]
    fn solve_zero_system() {
        let sol = BinaryMatrix::zeros(2, 3).solve_affine(&bits("00")).unwrap().unwrap();
        assert!(sol.solution.is_zero());
        assert_eq!(sol.nullspace.len(), 3);
        assert!(BinaryMatrix::zeros(2, 3).solve_affine(&bits("01")).unwrap().is_none());
    }

    #[test]
    fn solve_repetition_code_syndrome() {
        let h = BinaryMatrix::from_dense_str("110;011").unwrap();
        let target = bits("10");
        // brute force over all 8 words
        let solutions: Vec<BitVec> = (0u8..8)
            .map(|x| BitVec::from_bools(&[x & 1 == 1, x & 2 == 2, x & 4 == 4]))
            .filter(|x| h.mul_vec(x).unwrap() == target)
            .collect();
        assert_eq!(solutions.len(), 2);
        assert!(solutions.iter().any(|s| s.weight() == 1));

        let sol = h.solve_affine(&target).unwrap().unwrap();
        assert!(solutions.contains(&sol.solution));
        assert_eq!(sol.nullspace, vec![bits("111")]);
    }

    #[test]
    fn solve_rejects_wrong_rhs_length() {
        let err = BinaryMatrix::identity(2).solve_affine(&bits("1")).unwrap_err();
        assert!(matches!(err, Gf2Error::DimensionMismatch { .. }));
    }

    #[test]
    fn sparse_text_round_trip() {
        let h = BinaryMatrix::from_dense_str("1101000;0110100;0011010").unwrap();
        let text = h.to_sparse_string();
        assert!(text.starts_with("3 7\n1 2 4\n"));
        assert_eq!(BinaryMatrix::parse_sparse(&text).unwrap(), h);
    }

    #[test]
    fn sparse_parse_errors() {
        assert!(BinaryMatrix::parse_sparse("").is_err());
        assert!(BinaryMatrix::parse_sparse("2 x\n").is_err());
        assert!(BinaryMatrix::parse_sparse("1 3\n4\n").is_err());
        assert!(BinaryMatrix::parse_sparse("1 3\n0\n").is_err());
        assert!(BinaryMatrix::parse_sparse("1 3\n1\n2\n").is_err());
        // omitted trailing zero rows are accepted
        let m = BinaryMatrix::parse_sparse("3 3\n1\n").unwrap();
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn kron_and_concat_shapes() {
        let h = BinaryMatrix::from_dense_str("110;011").unwrap();
        let k = h.kron(&BinaryMatrix::identity(3));
        assert_eq!((k.rows(), k.cols()), (6, 9));
        assert_eq!(k.rank(), 6);
        let c = h.hconcat(&BinaryMatrix::identity(2)).unwrap();
        assert_eq!(c.row(0), bits("11010"));
    }

    #[test]
    fn hex_round_trip_and_lex_order() {
        let v = bits("1011001");
        assert_eq!(v.to_hex(), "d4");
        assert_eq!(BitVec::from_hex(7, "d4").unwrap(), v);
        assert!(BitVec::from_hex(7, "d").is_err());
        assert!(BitVec::from_hex(6, "dc").is_err());
        assert_eq!(bits("0100").lex_cmp(&bits("1000")), Ordering::Less);
        assert_eq!(bits("0110").lex_cmp(&bits("0101")), Ordering::Greater);
    }

    fn arb_matrix() -> impl Strategy<Value = BinaryMatrix> {
        (1usize..12, 1usize..80).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::bool::ANY, r * c).prop_map(move |bits| {
                let mut m = BinaryMatrix::zeros(r, c);
                for (i, b) in bits.into_iter().enumerate() {
                    m.set(i / c, i % c, b);
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn rank_equals_transpose_rank(m in arb_matrix()) {
            prop_assert_eq!(m.rank(), m.transpose().rank());
            prop_assert!(m.rank() <= m.rows().min(m.cols()));
        }

        #[test]
        fn affine_solutions_cover_coset(m in arb_matrix(), seed in any::<u64>()) {
            // pick a consistent rhs as the image of a pseudo-random vector
            let mut x = BitVec::zeros(m.cols());
            for i in 0..m.cols() {
                x.set(i, (seed.rotate_left(i as u32) ^ (i as u64 * 0x9e37)) & 1 == 1);
            }
            let rhs = m.mul_vec(&x).unwrap();
            let sol = m.solve_affine(&rhs).unwrap().expect("consistent by construction");
            prop_assert_eq!(m.mul_vec(&sol.solution).unwrap(), rhs.clone());
            prop_assert_eq!(sol.nullspace.len(), m.cols() - m.rank());
            let mut shifted = sol.solution.clone();
            for (i, n) in sol.nullspace.iter().enumerate() {
                prop_assert!(m.mul_vec(n).unwrap().is_zero());
                if (seed >> (i % 64)) & 1 == 1 {
                    shifted.xor_assign(n);
                }
            }
            prop_assert_eq!(m.mul_vec(&shifted).unwrap(), rhs);
        }
    }
}
