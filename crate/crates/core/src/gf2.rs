//! Dense bit vectors and bit matrices over GF(2).
//!
//! Rows are packed little-endian into `u64` words: bit `j` of a row lives in
//! word `j / 64` at position `j % 64`. Padding bits past the logical length
//! are kept at zero so that word-level popcounts and comparisons are exact.

use rand::Rng;
use rayon::prelude::*;

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: String = (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect();
        write!(f, "BitVec({s})")
    }
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

    /// Builds a vector from packed words, clearing any padding bits.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(words_for(len), 0);
        let mut v = Self { len, words };
        v.clear_padding();
        v
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let words = (0..words_for(len)).map(|_| rng.random::<u64>()).collect();
        Self::from_words(len, words)
    }

    fn clear_padding(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
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
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        parity_of_and(&self.words, &other.words)
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Concatenates `self` followed by `other`.
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.len + other.len);
        for i in 0..self.len {
            if self.get(i) {
                out.set(i, true);
            }
        }
        for i in 0..other.len {
            if other.get(i) {
                out.set(self.len + i, true);
            }
        }
        out
    }

    /// Bits `[start, end)` as a new vector.
    pub fn slice(&self, start: usize, end: usize) -> BitVec {
        assert!(start <= end && end <= self.len);
        let mut out = BitVec::zeros(end - start);
        for i in start..end {
            if self.get(i) {
                out.set(i - start, true);
            }
        }
        out
    }

    /// Number of positions where the two vectors differ.
    pub fn hamming(&self, other: &BitVec) -> usize {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Packs bits LSB-first into bytes (bit `i` is bit `i % 8` of byte `i / 8`).
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        self.words
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(nbytes)
            .collect()
    }

    pub fn from_bytes(len: usize, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut words = vec![0u64; words_for(len)];
        for (i, &b) in bytes.iter().enumerate() {
            words[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        let v = Self { len, words };
        // padding bits must be zero in a canonical encoding
        let mut check = v.clone();
        check.clear_padding();
        (check == v).then_some(v)
    }
}

impl BitVec {
    /// Lower-case hex of the packed bytes, prefixed with `len:` unless the
    /// length is a whole number of bytes.
    pub fn to_hex(&self) -> String {
        let h = hex::encode(self.to_bytes());
        if self.len.is_multiple_of(8) {
            h
        } else {
            format!("{}:{h}", self.len)
        }
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let (len, h) = match s.split_once(':') {
            Some((l, h)) => (l.parse().ok()?, h),
            None => (s.len() / 2 * 8, s),
        };
        Self::from_bytes(len, &hex::decode(h).ok()?)
    }
}

impl serde::Serialize for BitVec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> serde::Deserialize<'de> for BitVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        Self::from_hex(&s).ok_or_else(|| serde::de::Error::custom(format!("bad bit string {s:?}")))
    }
}

#[inline]
fn parity_of_and(a: &[u64], b: &[u64]) -> bool {
    let mut acc = 0u64;
    for (x, y) in a.iter().zip(b) {
        acc ^= x & y;
    }
    acc.count_ones() & 1 == 1
}

/// Row-major dense matrix over GF(2).
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows.min(32) {
            let s: String = (0..self.cols.min(96))
                .map(|j| if self.get(i, j) { '1' } else { '.' })
                .collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

/// Result of reducing a matrix to reduced row echelon form.
#[derive(Debug, Clone)]
pub struct Echelon {
    /// The reduced matrix; rows `rank..` are zero.
    pub reduced: BitMatrix,
    /// Column holding the leading one of each nonzero row, increasing.
    pub pivot_cols: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivot_cols.len()
    }

    /// Columns without a pivot, increasing.
    pub fn free_cols(&self) -> Vec<usize> {
        let mut is_pivot = vec![false; self.reduced.cols];
        for &c in &self.pivot_cols {
            is_pivot[c] = true;
        }
        (0..self.reduced.cols).filter(|&c| !is_pivot[c]).collect()
    }
}

/// A basis of the right null space `{x : A x = 0}`.
#[derive(Debug, Clone)]
pub struct NullSpace {
    /// `cols(A) x g` matrix whose columns span the null space.
    pub basis: BitMatrix,
    /// Coordinates where `basis` restricted to these rows is the identity.
    pub free_cols: Vec<usize>,
}

impl BitMatrix {
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

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            let v = BitVec::random(cols, rng);
            m.row_mut(i).copy_from_slice(v.words());
        }
        m
    }

    pub fn from_rows(rows: &[BitVec]) -> Self {
        let cols = rows.first().map_or(0, BitVec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            m.row_mut(i).copy_from_slice(r.words());
        }
        m
    }

    /// Builds a matrix from the column indices set in each row.
    pub fn from_sparse_rows(cols: usize, rows: &[Vec<usize>]) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            for &j in r {
                m.set(i, j, true);
            }
        }
        m
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
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        (self.data[i * self.stride + j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        debug_assert!(i < self.rows && j < self.cols);
        let w = &mut self.data[i * self.stride + j / WORD];
        let mask = 1u64 << (j % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row_vec(&self, i: usize) -> BitVec {
        BitVec::from_words(self.cols, self.row(i).to_vec())
    }

    pub fn col_vec(&self, j: usize) -> BitVec {
        let mut v = BitVec::zeros(self.rows);
        for i in 0..self.rows {
            if self.get(i, j) {
                v.set(i, true);
            }
        }
        v
    }

    /// Indices of the ones in row `i`.
    pub fn row_ones(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, &word) in self.row(i).iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                out.push(w * WORD + b);
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * self.stride);
        head[lo * self.stride..(lo + 1) * self.stride].swap_with_slice(&mut tail[..self.stride]);
    }

    /// `row[dst] ^= row[src]`.
    pub fn xor_row_into(&mut self, dst: usize, src: usize) {
        assert_ne!(dst, src);
        let s = self.stride;
        let (d, r) = if dst < src {
            let (head, tail) = self.data.split_at_mut(src * s);
            (&mut head[dst * s..(dst + 1) * s], &tail[..s])
        } else {
            let (head, tail) = self.data.split_at_mut(dst * s);
            (&mut tail[..s], &head[src * s..(src + 1) * s])
        };
        for (a, b) in d.iter_mut().zip(r) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(
            self.cols,
            v.len(),
            "dimension mismatch in matrix-vector product"
        );
        let mut out = BitVec::zeros(self.rows);
        for i in 0..self.rows {
            if parity_of_and(self.row(i), v.words()) {
                out.set(i, true);
            }
        }
        out
    }

    /// `self · other`.
    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(
            self.cols, other.rows,
            "dimension mismatch in matrix product"
        );
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        let stride = out.stride;
        out.data
            .par_chunks_mut(stride.max(1))
            .enumerate()
            .for_each(|(i, dst)| {
                for (w, &word) in self.row(i).iter().enumerate() {
                    let mut bits = word;
                    while bits != 0 {
                        let k = w * WORD + bits.trailing_zeros() as usize;
                        for (a, b) in dst.iter_mut().zip(other.row(k)) {
                            *a ^= b;
                        }
                        bits &= bits - 1;
                    }
                }
            });
        out
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in self.row_ones(i) {
                out.set(j, i, true);
            }
        }
        out
    }

    /// Submatrix made of the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(rows.len(), self.cols);
        for (k, &i) in rows.iter().enumerate() {
            out.row_mut(k).copy_from_slice(self.row(i));
        }
        out
    }

    /// Gauss-Jordan elimination to reduced row echelon form.
    pub fn rref(&self) -> Echelon {
        let mut m = self.clone();
        let stride = m.stride;
        let mut pivot_cols = Vec::new();
        let mut pivot = vec![0u64; stride];
        let mut rank = 0;
        for c in 0..m.cols {
            if rank == m.rows {
                break;
            }
            let w = c / WORD;
            let mask = 1u64 << (c % WORD);
            let Some(p) = (rank..m.rows).find(|&i| m.data[i * stride + w] & mask != 0) else {
                continue;
            };
            m.swap_rows(rank, p);
            // All rows are zero left of column c except at earlier pivot
            // columns, and the pivot row is zero there, so only words >= w
            // need touching.
            pivot[w..].copy_from_slice(&m.row(rank)[w..]);
            let pr = rank;
            let body = |(i, row): (usize, &mut [u64])| {
                if i != pr && row[w] & mask != 0 {
                    for (a, b) in row[w..].iter_mut().zip(&pivot[w..]) {
                        *a ^= b;
                    }
                }
            };
            if m.rows * (stride - w) > 1 << 14 {
                m.data.par_chunks_mut(stride).enumerate().for_each(body);
            } else {
                m.data.chunks_mut(stride).enumerate().for_each(body);
            }
            pivot_cols.push(c);
            rank += 1;
        }
        Echelon {
            reduced: m,
            pivot_cols,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank()
    }

    /// Basis of `{x : self · x = 0}` in canonical form: identity on the free
    /// columns of the reduced echelon form.
    pub fn null_space(&self) -> NullSpace {
        let ech = self.rref();
        null_space_from_echelon(&ech)
    }

    /// Inverse of a square matrix, or `None` when singular.
    pub fn inverse(&self) -> Option<BitMatrix> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut aug = BitMatrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in self.row_ones(i) {
                aug.set(i, j, true);
            }
            aug.set(i, n + i, true);
        }
        let ech = aug.rref();
        if ech.pivot_cols.len() < n || ech.pivot_cols[n - 1] != n - 1 {
            return None;
        }
        let mut inv = BitMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if ech.reduced.get(i, n + j) {
                    inv.set(i, j, true);
                }
            }
        }
        Some(inv)
    }
}

pub fn null_space_from_echelon(ech: &Echelon) -> NullSpace {
    let n = ech.reduced.cols;
    let free_cols = ech.free_cols();
    let g = free_cols.len();
    let mut basis = BitMatrix::zeros(n, g);
    for (j, &f) in free_cols.iter().enumerate() {
        basis.set(f, j, true);
    }
    // x_{pivot_i} = sum over free f of R[i][f] x_f
    for (i, &p) in ech.pivot_cols.iter().enumerate() {
        for (j, &f) in free_cols.iter().enumerate() {
            if ech.reduced.get(i, f) {
                basis.set(p, j, true);
            }
        }
    }
    NullSpace { basis, free_cols }
}

/// Incrementally maintained basis used to pick linearly independent vectors
/// in a caller-chosen order (and to solve the resulting square system).
#[derive(Debug, Clone)]
pub struct IncrementalBasis {
    dim: usize,
    // pivot bit -> (reduced vector, combination of accepted rhs bits)
    rows: Vec<Option<(BitVec, bool)>>,
    accepted: usize,
}

impl IncrementalBasis {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![None; dim],
            accepted: 0,
        }
    }

    pub fn is_full(&self) -> bool {
        self.accepted == self.dim
    }

    pub fn len(&self) -> usize {
        self.accepted
    }

    pub fn is_empty(&self) -> bool {
        self.accepted == 0
    }

    /// Offers the equation `v · u = rhs`; returns true when `v` was
    /// independent of the equations accepted so far.
    pub fn offer(&mut self, v: &BitVec, rhs: bool) -> bool {
        let mut v = v.clone();
        let mut rhs = rhs;
        loop {
            let Some(p) = highest_bit(&v) else {
                return false;
            };
            match &self.rows[p] {
                Some((bv, bb)) => {
                    v.xor_assign(bv);
                    rhs ^= bb;
                }
                None => {
                    self.rows[p] = Some((v, rhs));
                    self.accepted += 1;
                    return true;
                }
            }
        }
    }

    /// Solves the accepted system; requires a full basis.
    pub fn solve(&self) -> Option<BitVec> {
        if !self.is_full() {
            return None;
        }
        let mut u = BitVec::zeros(self.dim);
        // each stored row has its highest bit at its slot, lower bits refer to
        // already-solved coordinates when processed in increasing order
        for p in 0..self.dim {
            let (v, b) = self.rows[p].as_ref()?;
            let mut bit = *b;
            for w in 0..v.words().len() {
                let mut low = v.words()[w] & u.words()[w];
                if w == p / WORD {
                    low &= (1u64 << (p % WORD)) - 1;
                } else if w > p / WORD {
                    low = 0;
                }
                bit ^= low.count_ones() & 1 == 1;
            }
            u.set(p, bit);
        }
        Some(u)
    }
}

fn highest_bit(v: &BitVec) -> Option<usize> {
    v.words()
        .iter()
        .enumerate()
        .rev()
        .find(|(_, &w)| w != 0)
        .map(|(i, &w)| i * WORD + 63 - w.leading_zeros() as usize)
}
