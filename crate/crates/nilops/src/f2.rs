//! Dense bit-packed linear algebra over F₂.
//!
//! Vectors are rows. A matrix of shape `m × n` represents the linear map
//! `F₂^m → F₂^n` sending basis vector `r` to row `r`, so composition of
//! `f` then `g` is the product `f * g`.

use std::fmt;

const W: usize = 64;

fn words(n: usize) -> usize {
    n.div_ceil(W)
}

/// A bit vector of fixed length.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    len: usize,
    data: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, data: vec![0; words(len)] }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_words(len: usize, data: &[u64]) -> Self {
        let mut v = BitVec { len, data: data[..words(len)].to_vec() };
        v.mask_tail();
        v
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

    fn mask_tail(&mut self) {
        let r = self.len % W;
        if r != 0 {
            if let Some(last) = self.data.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.data
    }

    pub fn get(&self, i: usize) -> bool {
        (self.data[i / W] >> (i % W)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, b: bool) {
        if b {
            self.data[i / W] |= 1 << (i % W);
        } else {
            self.data[i / W] &= !(1 << (i % W));
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.data[i / W] ^= 1 << (i % W);
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a ^= b;
        }
    }

    pub fn xor_words(&mut self, other: &[u64]) {
        for (a, b) in self.data.iter_mut().zip(other) {
            *a ^= b;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of set bits in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.data.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * W + t)
                }
            })
        })
    }

    pub fn first_one(&self) -> Option<usize> {
        self.ones().next()
    }

    /// Concatenation `self ++ other`.
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut v = BitVec::zeros(self.len + other.len);
        for i in self.ones() {
            v.set(i, true);
        }
        for i in other.ones() {
            v.set(self.len + i, true);
        }
        v
    }

    /// Bits `start..start+len`.
    pub fn slice(&self, start: usize, len: usize) -> BitVec {
        let mut v = BitVec::zeros(len);
        for i in 0..len {
            if self.get(start + i) {
                v.set(i, true);
            }
        }
        v
    }

    pub fn dot(&self, other: &BitVec) -> bool {
        let mut acc = 0u64;
        for (a, b) in self.data.iter().zip(&other.data) {
            acc ^= a & b;
        }
        acc.count_ones() % 2 == 1
    }

    /// Renders as a string of `0`/`1` characters, index 0 first.
    pub fn to_bitstring(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Option<BitVec> {
        let mut v = BitVec::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return None,
            }
        }
        Some(v)
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.to_bitstring())
    }
}

/// A dense matrix over F₂, rows packed into `u64` words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        let stride = words(cols);
        Matrix { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[BitVec]) -> Self {
        let mut m = Self::zero(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            debug_assert_eq!(r.len(), cols);
            m.row_mut(i).copy_from_slice(r.words());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::zero(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row(&self, i: usize) -> BitVec {
        BitVec::from_words(self.cols, self.row_words(i))
    }

    pub fn row_vecs(&self) -> Vec<BitVec> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn set_row(&mut self, i: usize, v: &BitVec) {
        debug_assert_eq!(v.len(), self.cols);
        self.row_mut(i).copy_from_slice(v.words());
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.data[i * self.stride + j / W] >> (j % W)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, b: bool) {
        let w = &mut self.data[i * self.stride + j / W];
        if b {
            *w |= 1 << (j % W);
        } else {
            *w &= !(1 << (j % W));
        }
    }

    pub fn flip(&mut self, i: usize, j: usize) {
        self.data[i * self.stride + j / W] ^= 1 << (j % W);
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        let s = self.stride;
        if src == dst {
            self.row_mut(dst).fill(0);
            return;
        }
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&lo[src * s..(src + 1) * s], &mut hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&hi[..s], &mut lo[dst * s..(dst + 1) * s])
        };
        for (x, y) in b.iter_mut().zip(a) {
            *x ^= y;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        for k in 0..s {
            self.data.swap(a * s + k, b * s + k);
        }
    }

    /// Row vector times matrix.
    pub fn apply(&self, v: &BitVec) -> BitVec {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = BitVec::zeros(self.cols);
        for i in v.ones() {
            out.xor_words(self.row_words(i));
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = Matrix::zero(self.rows, other.cols);
        let s = out.stride;
        for i in 0..self.rows {
            let dst = &mut out.data[i * s..(i + 1) * s];
            for (k, &w) in self.row_words(i).iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    let j = k * W + t;
                    for (x, y) in dst.iter_mut().zip(other.row_words(j)) {
                        *x ^= y;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in sum");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a ^= b;
        }
        out
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in sum");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a ^= b;
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in self.row(i).ones() {
                out.set(j, i, true);
            }
        }
        out
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        let mut out = Matrix::zero(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            out.set_row(i, &self.row(i).concat(&other.row(i)));
        }
        out
    }

    /// `[self ; other]`.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix { rows: self.rows + other.rows, cols: self.cols, stride: self.stride, data }
    }

    pub fn block_diag(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zero(self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in self.row(i).ones() {
                out.set(i, j, true);
            }
        }
        for i in 0..other.rows {
            for j in other.row(i).ones() {
                out.set(self.rows + i, self.cols + j, true);
            }
        }
        out
    }

    /// Columns `start..start+len`.
    pub fn col_slice(&self, start: usize, len: usize) -> Matrix {
        let mut out = Matrix::zero(self.rows, len);
        for i in 0..self.rows {
            out.set_row(i, &self.row(i).slice(start, len));
        }
        out
    }

    /// Rows `start..start+len`.
    pub fn row_slice(&self, start: usize, len: usize) -> Matrix {
        let s = self.stride;
        Matrix {
            rows: len,
            cols: self.cols,
            stride: s,
            data: self.data[start * s..(start + len) * s].to_vec(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zero(idx.len(), self.cols);
        for (k, &i) in idx.iter().enumerate() {
            out.row_mut(k).copy_from_slice(self.row_words(i));
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, idx.len(), |i, k| self.get(i, idx[k]))
    }

    /// In-place reduced row echelon form; returns pivot columns.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c)) else { continue };
            self.swap_rows(p, r);
            for i in 0..self.rows {
                if i != r && self.get(i, c) {
                    self.xor_row_into(r, i);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref_in_place().len()
    }

    /// Basis of the row space, in reduced echelon form.
    pub fn row_space(&self) -> Matrix {
        let mut m = self.clone();
        let p = m.rref_in_place();
        m.row_slice(0, p.len())
    }

    /// Basis (as rows) of `{v : v * self = 0}`.
    pub fn left_kernel(&self) -> Matrix {
        let aug = self.hstack(&Matrix::identity(self.rows));
        let mut m = aug;
        let piv = m.rref_in_place();
        let k = piv.iter().take_while(|&&c| c < self.cols).count();
        let mut out = m.row_slice(k, piv.len() - k).col_slice(self.cols, self.rows);
        out.rref_in_place();
        out
    }

    /// Solves `x * self = b` for each row `b` of `rhs`.
    pub fn solve_left(&self, rhs: &Matrix) -> Option<Matrix> {
        assert_eq!(rhs.cols, self.cols);
        let aug = self.hstack(&Matrix::identity(self.rows));
        let mut m = aug;
        let piv = m.rref_in_place();
        let k = piv.iter().take_while(|&&c| c < self.cols).count();
        let mut out = Matrix::zero(rhs.rows, self.rows);
        for t in 0..rhs.rows {
            let mut b = rhs.row(t);
            let mut x = BitVec::zeros(self.rows);
            for (r, &c) in piv.iter().take(k).enumerate() {
                if b.get(c) {
                    b.xor_words(&m.row(r).slice(0, self.cols).words().to_vec());
                    x.xor_assign(&m.row(r).slice(self.cols, self.rows));
                }
            }
            if !b.is_zero() {
                return None;
            }
            out.set_row(t, &x);
        }
        Some(out)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {}", self.row(i).to_bitstring())?;
        }
        Ok(())
    }
}

/// A subspace of `F₂^n` held as a reduced echelon basis.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Subspace {
    basis: Matrix,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Subspace { basis: Matrix::zero(0, n), pivots: vec![] }
    }

    pub fn full(n: usize) -> Self {
        Subspace { basis: Matrix::identity(n), pivots: (0..n).collect() }
    }

    pub fn span(n: usize, gens: &Matrix) -> Self {
        assert_eq!(gens.cols(), n);
        let mut m = gens.clone();
        let pivots = m.rref_in_place();
        Subspace { basis: m.row_slice(0, pivots.len()), pivots }
    }

    pub fn span_vecs(n: usize, gens: &[BitVec]) -> Self {
        Self::span(n, &Matrix::from_rows(n, gens))
    }

    pub fn ambient(&self) -> usize {
        self.basis.cols()
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduces `v` modulo the subspace.
    pub fn reduce(&self, v: &BitVec) -> BitVec {
        let mut v = v.clone();
        for (r, &c) in self.pivots.iter().enumerate() {
            if v.get(c) {
                v.xor_words(self.basis.row_words(r));
            }
        }
        v
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).is_zero()
    }

    pub fn contains_space(&self, other: &Subspace) -> bool {
        (0..other.dim()).all(|i| self.contains(&other.basis.row(i)))
    }

    /// Coordinates of `v ∈ self` in the echelon basis; `None` if `v ∉ self`.
    pub fn coords(&self, v: &BitVec) -> Option<BitVec> {
        let mut c = BitVec::zeros(self.dim());
        let mut w = v.clone();
        for (r, &p) in self.pivots.iter().enumerate() {
            if w.get(p) {
                c.set(r, true);
                w.xor_words(self.basis.row_words(r));
            }
        }
        w.is_zero().then_some(c)
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        Subspace::span(self.ambient(), &self.basis.vstack(&other.basis))
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        let n = self.ambient();
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(n);
        }
        let stacked = self.basis.vstack(&other.basis);
        let ker = stacked.left_kernel();
        let left = ker.col_slice(0, self.dim());
        Subspace::span(n, &left.mul(&self.basis))
    }

    /// Columns not used as pivots; their unit vectors span a complement.
    pub fn free_columns(&self) -> Vec<usize> {
        let mut is_piv = vec![false; self.ambient()];
        for &p in &self.pivots {
            is_piv[p] = true;
        }
        (0..self.ambient()).filter(|&c| !is_piv[c]).collect()
    }

    /// Projection `F₂^n → F₂^n / self` in the complement coordinates.
    pub fn quotient_map(&self) -> Matrix {
        let free = self.free_columns();
        let n = self.ambient();
        let mut m = Matrix::zero(n, free.len());
        for r in 0..n {
            let red = self.reduce(&BitVec::unit(n, r));
            for (k, &c) in free.iter().enumerate() {
                if red.get(c) {
                    m.set(r, k, true);
                }
            }
        }
        m
    }

    /// Section of the quotient map picking unit vectors on free columns.
    pub fn quotient_lift(&self) -> Matrix {
        let free = self.free_columns();
        let n = self.ambient();
        let mut m = Matrix::zero(free.len(), n);
        for (k, &c) in free.iter().enumerate() {
            m.set(k, c, true);
        }
        m
    }

    /// Image of the subspace under a linear map.
    pub fn image_under(&self, f: &Matrix) -> Subspace {
        Subspace::span(f.cols(), &self.basis.mul(f))
    }

    /// Preimage of `self` under `f: F₂^m → F₂^n`.
    pub fn preimage(&self, f: &Matrix) -> Subspace {
        let q = self.quotient_map();
        Subspace::span(f.rows(), &f.mul(&q).left_kernel())
    }
}
