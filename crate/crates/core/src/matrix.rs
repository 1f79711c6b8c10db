//! Dense matrices over a prime field F_p.
//!
//! A matrix of shape `rows x cols` represents a linear map from F_p^cols to
//! F_p^rows; vectors are columns.  Entries are stored row-major as `u32`
//! already reduced mod p.  Elimination skips zero multipliers and switches to
//! a sparse update when the pivot row is mostly zero, which keeps the
//! monomial-basis matrices that dominate this crate cheap.

use std::fmt;

/// Largest supported prime; (p-1)^2 + (p-1) must fit in a `u32`.
pub const MAX_PRIME: u32 = 65521;

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p));
    // Fermat: a^(p-2)
    pow_mod(a, p - 2, p)
}

pub fn pow_mod(a: u32, mut e: u32, p: u32) -> u32 {
    let mut base = (a % p) as u64;
    let mut acc = 1u64 % p as u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    acc as u32
}

pub fn reduce(x: i64, p: u32) -> u32 {
    x.rem_euclid(p as i64) as u32
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    p: u32,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} mod {}", self.rows, self.cols, self.p)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

#[inline(always)]
fn axpy_const<const P: u32>(dst: &mut [u32], src: &[u32], f: u32) {
    if P == 2 {
        for (d, s) in dst.iter_mut().zip(src) {
            *d ^= *s;
        }
    } else {
        for (d, s) in dst.iter_mut().zip(src) {
            *d = (*d + f * *s) % P;
        }
    }
}

#[inline]
fn axpy(p: u32, dst: &mut [u32], src: &[u32], f: u32) {
    match p {
        2 => axpy_const::<2>(dst, src, f),
        3 => axpy_const::<3>(dst, src, f),
        5 => axpy_const::<5>(dst, src, f),
        7 => axpy_const::<7>(dst, src, f),
        _ => {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = (*d + f * *s) % p;
            }
        }
    }
}

impl Matrix {
    pub fn zeros(p: u32, rows: usize, cols: usize) -> Self {
        Matrix { p, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(p: u32, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % p;
        }
        m
    }

    /// Builds from row vectors, reducing entries mod p.  All rows must have
    /// length `cols`.
    pub fn from_rows(p: u32, cols: usize, rows: &[Vec<i64>]) -> Option<Self> {
        let mut m = Self::zeros(p, rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return None;
            }
            for (c, &x) in row.iter().enumerate() {
                m.data[r * cols + c] = reduce(x, p);
            }
        }
        Some(m)
    }

    pub fn from_u32_rows(p: u32, cols: usize, rows: &[Vec<u32>]) -> Self {
        let mut m = Self::zeros(p, rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols);
            for (c, &x) in row.iter().enumerate() {
                m.data[r * cols + c] = x % p;
            }
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(p: u32, rows: usize, cols: &[Vec<u32>]) -> Self {
        let mut m = Self::zeros(p, rows, cols.len());
        for (c, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (r, &x) in col.iter().enumerate() {
                m.data[r * cols.len() + c] = x % p;
            }
        }
        m
    }

    pub fn p(&self) -> u32 {
        self.p
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

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v % self.p;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..self.cols).all(|c| self.get(r, c) == u32::from(r == c)))
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.p, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        assert_eq!(self.p, other.p);
        let mut out = Matrix::zeros(self.p, self.rows, other.cols);
        let n = other.cols;
        if n == 0 {
            return out;
        }
        for i in 0..self.rows {
            let dst = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a != 0 {
                    axpy(self.p, dst, &other.data[k * n..(k + 1) * n], a);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.cols);
        let p = self.p as u64;
        (0..self.rows)
            .map(|r| {
                let mut acc = 0u64;
                for (a, b) in self.row(r).iter().zip(v) {
                    acc += (*a as u64) * (*b as u64);
                    if acc > (1 << 62) {
                        acc %= p;
                    }
                }
                (acc % p) as u32
            })
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape());
        let p = self.p;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| (a + b) % p).collect();
        Matrix { p, rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape());
        let p = self.p;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| (a + p - b) % p).collect();
        Matrix { p, rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: u32) -> Matrix {
        let p = self.p;
        let s = s % p;
        let data = self.data.iter().map(|a| a * s % p).collect();
        Matrix { p, rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> Matrix {
        self.scale(self.p - 1)
    }

    /// Horizontal concatenation.  Every block must have `rows` rows.
    pub fn hstack(p: u32, rows: usize, blocks: &[&Matrix]) -> Matrix {
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Matrix::zeros(p, rows, cols);
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.rows, rows, "hstack row mismatch");
            for r in 0..rows {
                out.data[r * cols + off..r * cols + off + b.cols].copy_from_slice(b.row(r));
            }
            off += b.cols;
        }
        out
    }

    /// Vertical concatenation.  Every block must have `cols` columns.
    pub fn vstack(p: u32, cols: usize, blocks: &[&Matrix]) -> Matrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            assert_eq!(b.cols, cols, "vstack column mismatch");
            data.extend_from_slice(&b.data);
        }
        Matrix { p, rows, cols, data }
    }

    pub fn block_diag(p: u32, blocks: &[&Matrix]) -> Matrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Matrix::zeros(p, rows, cols);
        let (mut ro, mut co) = (0, 0);
        for b in blocks {
            out.set_block(ro, co, b);
            ro += b.rows;
            co += b.cols;
        }
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols);
        for r in 0..b.rows {
            let start = (r0 + r) * self.cols + c0;
            self.data[start..start + b.cols].copy_from_slice(b.row(r));
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zeros(self.p, rows, cols);
        for r in 0..rows {
            let start = (r0 + r) * self.cols + c0;
            out.data[r * cols..(r + 1) * cols].copy_from_slice(&self.data[start..start + cols]);
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.p, self.rows, idx.len());
        for r in 0..self.rows {
            for (j, &c) in idx.iter().enumerate() {
                out.data[r * idx.len() + j] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        Matrix { p: self.p, rows: idx.len(), cols: self.cols, data }
    }

    /// In-place reduced row echelon form.  Pivots are only searched in the
    /// first `limit` columns; row operations act on the full rows.  Returns
    /// the pivot columns.
    fn eliminate(&mut self, limit: usize) -> Vec<usize> {
        let p = self.p;
        let (rows, cols) = (self.rows, self.cols);
        let mut pivots = Vec::new();
        let mut r = 0;
        let mut nz: Vec<usize> = Vec::new();
        let mut scratch: Vec<u32> = Vec::new();
        for c in 0..limit.min(cols) {
            if r == rows {
                break;
            }
            let Some(pr) = (r..rows).find(|&i| self.data[i * cols + c] != 0) else {
                continue;
            };
            if pr != r {
                for j in c..cols {
                    self.data.swap(pr * cols + j, r * cols + j);
                }
            }
            let lead = self.data[r * cols + c];
            if lead != 1 {
                let inv = inv_mod(lead, p);
                for x in &mut self.data[r * cols + c..(r + 1) * cols] {
                    *x = *x * inv % p;
                }
            }
            scratch.clear();
            scratch.extend_from_slice(&self.data[r * cols + c..(r + 1) * cols]);
            nz.clear();
            nz.extend(scratch.iter().enumerate().filter(|(_, &v)| v != 0).map(|(j, _)| j));
            let sparse = nz.len() * 4 < scratch.len();
            for i in 0..rows {
                if i == r {
                    continue;
                }
                let a = self.data[i * cols + c];
                if a == 0 {
                    continue;
                }
                let f = p - a;
                let dst = &mut self.data[i * cols + c..(i + 1) * cols];
                if sparse {
                    for &j in &nz {
                        dst[j] = (dst[j] + f * scratch[j]) % p;
                    }
                } else {
                    axpy(p, dst, &scratch, f);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// Reduced row echelon form together with pivot columns.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let piv = m.eliminate(m.cols);
        (m, piv)
    }

    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        // eliminate the shorter side
        if self.rows < self.cols {
            self.transpose().rref().1.len()
        } else {
            self.rref().1.len()
        }
    }

    /// Basis of the null space, as the columns of a `cols x nullity` matrix.
    pub fn kernel(&self) -> Matrix {
        let (red, piv) = self.rref();
        let n = self.cols;
        let mut is_piv = vec![false; n];
        for &c in &piv {
            is_piv[c] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&c| !is_piv[c]).collect();
        let mut k = Matrix::zeros(self.p, n, free.len());
        for (j, &f) in free.iter().enumerate() {
            k.set(f, j, 1);
            for (i, &pc) in piv.iter().enumerate() {
                let v = red.get(i, f);
                if v != 0 {
                    k.set(pc, j, self.p - v);
                }
            }
        }
        k
    }

    /// A maximal independent subset of the columns (the pivot columns).
    pub fn col_basis(&self) -> Matrix {
        let piv = self.rref().1;
        self.select_cols(&piv)
    }

    pub fn pivot_cols(&self) -> Vec<usize> {
        self.rref().1
    }

    /// Solves `self * X = rhs` column by column.  Returns `None` for each
    /// column of `rhs` outside the column space.
    pub fn solve_each(&self, rhs: &Matrix) -> Vec<Option<Vec<u32>>> {
        assert_eq!(self.rows, rhs.rows);
        let n = self.cols;
        let mut aug = Matrix::hstack(self.p, self.rows, &[self, rhs]);
        let piv = aug.eliminate(n);
        let rank = piv.len();
        (0..rhs.cols)
            .map(|j| {
                let c = n + j;
                if (rank..aug.rows).any(|r| aug.get(r, c) != 0) {
                    return None;
                }
                let mut x = vec![0u32; n];
                for (i, &pc) in piv.iter().enumerate() {
                    x[pc] = aug.get(i, c);
                }
                Some(x)
            })
            .collect()
    }

    /// Solves `self * X = rhs`; `None` if any column is not in the column space.
    pub fn solve(&self, rhs: &Matrix) -> Option<Matrix> {
        let sols = self.solve_each(rhs);
        let mut out = Matrix::zeros(self.p, self.cols, rhs.cols);
        for (j, s) in sols.into_iter().enumerate() {
            let s = s?;
            for (i, v) in s.into_iter().enumerate() {
                out.set(i, j, v);
            }
        }
        Some(out)
    }

    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let x = self.solve(&Matrix::identity(self.p, self.rows))?;
        Some(x)
    }

    /// Whether every column of `other` lies in the column space of `self`.
    pub fn spans(&self, other: &Matrix) -> bool {
        if other.cols == 0 {
            return true;
        }
        self.solve_each(other).iter().all(|s| s.is_some())
    }

    /// Given `sub` spanning a subspace of span(`sup`), returns columns of
    /// `sup` whose classes form a basis of span(sup)/span(sub).
    pub fn complement_cols(sub: &Matrix, sup: &Matrix) -> Matrix {
        let aug = Matrix::hstack(sub.p, sub.rows, &[sub, sup]);
        let piv = aug.pivot_cols();
        let idx: Vec<usize> = piv.into_iter().filter(|&c| c >= sub.cols).map(|c| c - sub.cols).collect();
        sup.select_cols(&idx)
    }

    /// Kronecker product; column i * other.cols + j of the result is the
    /// tensor of column i of `self` with column j of `other`.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.p, self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.get(r1, c1);
                if a == 0 {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        let b = other.get(r2, c2);
                        if b != 0 {
                            out.set(r1 * other.rows + r2, c1 * other.cols + c2, a * b % self.p);
                        }
                    }
                }
            }
        }
        out
    }

    /// Columnwise intersection basis of two column spaces.
    pub fn intersect(a: &Matrix, b: &Matrix) -> Matrix {
        let aug = Matrix::hstack(a.p, a.rows, &[a, &b.neg()]);
        let k = aug.kernel();
        let top = k.block(0, 0, a.cols, k.cols);
        a.mul(&top).col_basis()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(p: u32, rows: &[&[i64]]) -> Matrix {
        let v: Vec<Vec<i64>> = rows.iter().map(|r| r.to_vec()).collect();
        Matrix::from_rows(p, rows[0].len(), &v).unwrap()
    }

    #[test]
    fn rank_and_kernel_small() {
        let a = m(3, &[&[1, 2, 0], &[2, 1, 0]]);
        assert_eq!(a.rank(), 1);
        let k = a.kernel();
        assert_eq!(k.cols(), 2);
        assert!(a.mul(&k).is_zero());
    }

    #[test]
    fn inverse_roundtrip() {
        let a = m(5, &[&[1, 2], &[3, 4]]);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        let sing = m(5, &[&[1, 2], &[2, 4]]);
        assert!(sing.inverse().is_none());
    }

    #[test]
    fn solve_detects_inconsistency() {
        let a = m(2, &[&[1, 0], &[0, 0]]);
        let b = m(2, &[&[1, 1], &[0, 1]]);
        let s = a.solve_each(&b);
        assert!(s[0].is_some());
        assert!(s[1].is_none());
    }

    #[test]
    fn complement_of_subspace() {
        let sup = Matrix::identity(7, 3);
        let sub = m(7, &[&[1], &[1], &[0]]);
        let c = Matrix::complement_cols(&sub, &sup);
        assert_eq!(c.cols(), 2);
        assert_eq!(Matrix::hstack(7, 3, &[&sub, &c]).rank(), 3);
    }

    #[test]
    fn intersection_dimension() {
        let a = m(2, &[&[1, 0], &[0, 1], &[0, 0]]);
        let b = m(2, &[&[0, 0], &[1, 0], &[0, 1]]);
        assert_eq!(Matrix::intersect(&a, &b).cols(), 1);
    }

    fn arb_matrix(p: u32) -> impl Strategy<Value = Matrix> {
        (1usize..7, 1usize..7).prop_flat_map(move |(r, c)| {
            proptest::collection::vec(0..p, r * c)
                .prop_map(move |v| Matrix::from_u32_rows(p, c, &v.chunks(c).map(|x| x.to_vec()).collect::<Vec<_>>()))
        })
    }

    proptest! {
        #[test]
        fn rank_nullity(a in prop_oneof![arb_matrix(2), arb_matrix(3), arb_matrix(11)]) {
            let k = a.kernel();
            prop_assert_eq!(a.rank() + k.cols(), a.cols());
            prop_assert!(a.mul(&k).is_zero());
            prop_assert_eq!(a.rank(), a.transpose().rank());
        }

        #[test]
        fn solve_recovers_image(a in arb_matrix(5), seed in 0u32..1000) {
            let x: Vec<u32> = (0..a.cols()).map(|i| (seed + 3 * i as u32) % 5).collect();
            let b = Matrix::from_cols(5, a.rows(), &[a.mul_vec(&x)]);
            let s = a.solve(&b).expect("image vector must be solvable");
            prop_assert_eq!(a.mul(&s), b);
        }
    }
}
