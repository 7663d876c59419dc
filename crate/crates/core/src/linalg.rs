//! Exact linear algebra: dense integer matrices with Smith normal form, and
//! packed matrices over F2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major integer matrix.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c);
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: i64) {
        self.data[i * self.cols + j] = x;
    }

    pub fn add_to(&mut self, i: usize, j: usize, x: i64) {
        self.data[i * self.cols + j] += x;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(self.cols, other.rows));
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b != 0 {
                        let p = a.checked_mul(b).ok_or(Error::Overflow)?;
                        let cur = out.get(i, j);
                        out.set(i, j, cur.checked_add(p).ok_or(Error::Overflow)?);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn to_f2(&self) -> F2Matrix {
        let mut m = F2Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j).rem_euclid(2) == 1 {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    pub fn reduce_mod(&self, p: i64) -> IntMatrix {
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.rem_euclid(p)).collect(),
        }
    }

    /// Nonzero diagonal entries of the Smith normal form, in divisibility order.
    pub fn smith_diagonal(&self) -> Result<Vec<i64>> {
        let mut a: Vec<Vec<i64>> = (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect();
        let (rows, cols) = (self.rows, self.cols);
        let mut diag = Vec::new();
        let mut t = 0;
        while t < rows.min(cols) {
            // smallest nonzero entry in the remaining block as pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    let x = a[i][j];
                    if x != 0 && best.map_or(true, |(bi, bj)| x.abs() < a[bi][bj].abs()) {
                        best = Some((i, j));
                        if x.abs() == 1 {
                            break;
                        }
                    }
                }
                if matches!(best, Some((bi, bj)) if a[bi][bj].abs() == 1) {
                    break;
                }
            }
            let Some((pi, pj)) = best else { break };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            loop {
                let p = a[t][t];
                let mut dirty = false;
                for i in t + 1..rows {
                    if a[i][t] != 0 {
                        let q = a[i][t].div_euclid(p);
                        row_axpy(&mut a, i, t, -q, t)?;
                        if a[i][t] != 0 {
                            dirty = true;
                        }
                    }
                }
                for j in t + 1..cols {
                    if a[t][j] != 0 {
                        let q = a[t][j].div_euclid(p);
                        for i in t..rows {
                            let v = a[i][t].checked_mul(q).ok_or(Error::Overflow)?;
                            a[i][j] = a[i][j].checked_sub(v).ok_or(Error::Overflow)?;
                        }
                        if a[t][j] != 0 {
                            dirty = true;
                        }
                    }
                }
                if !dirty {
                    // pivot must divide the rest of the block
                    let mut fix = None;
                    'scan: for i in t + 1..rows {
                        for j in t + 1..cols {
                            if a[i][j] % p != 0 {
                                fix = Some(i);
                                break 'scan;
                            }
                        }
                    }
                    match fix {
                        Some(i) => row_axpy(&mut a, t, i, 1, t)?,
                        None => break,
                    }
                    continue;
                }
                // move the smallest nonzero entry of row/column t to the pivot
                let mut bi = t;
                let mut bj = t;
                let mut bv = a[t][t].abs();
                for i in t + 1..rows {
                    if a[i][t] != 0 && a[i][t].abs() < bv {
                        bv = a[i][t].abs();
                        bi = i;
                        bj = t;
                    }
                }
                for j in t + 1..cols {
                    if a[t][j] != 0 && a[t][j].abs() < bv {
                        bv = a[t][j].abs();
                        bi = t;
                        bj = j;
                    }
                }
                a.swap(t, bi);
                for row in a.iter_mut() {
                    row.swap(t, bj);
                }
            }
            diag.push(a[t][t].abs());
            t += 1;
        }
        Ok(diag)
    }

    pub fn rank(&self) -> Result<usize> {
        Ok(self.smith_diagonal()?.len())
    }
}

fn row_axpy(a: &mut [Vec<i64>], dst: usize, src: usize, q: i64, from: usize) -> Result<()> {
    for j in from..a[0].len() {
        let v = a[src][j].checked_mul(q).ok_or(Error::Overflow)?;
        a[dst][j] = a[dst][j].checked_add(v).ok_or(Error::Overflow)?;
    }
    Ok(())
}

/// Row-major matrix over F2 with rows packed into `u64` words.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct F2Matrix {
    pub rows: usize,
    pub cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        Self { rows, cols, words, data: vec![0; rows * words] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, x: bool) {
        let w = &mut self.data[i * self.words + j / 64];
        if x {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    pub fn flip(&mut self, i: usize, j: usize) {
        self.data[i * self.words + j / 64] ^= 1 << (j % 64);
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.words..(i + 1) * self.words]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    t.set(j, i, true);
                }
            }
        }
        t
    }

    pub fn mul(&self, other: &F2Matrix) -> Result<F2Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(self.cols, other.rows));
        }
        let mut out = F2Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) {
                    for w in 0..out.words {
                        out.data[i * out.words + w] ^= other.data[k * other.words + w];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &F2Matrix) -> F2Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a ^= b;
        }
        out
    }

    /// Stack `other` below `self`.
    pub fn vstack(&self, other: &F2Matrix) -> F2Matrix {
        assert_eq!(self.cols, other.cols);
        let mut out = self.clone();
        out.rows += other.rows;
        out.data.extend_from_slice(&other.data);
        out
    }

    pub fn hstack(&self, other: &F2Matrix) -> F2Matrix {
        assert_eq!(self.rows, other.rows);
        let mut out = F2Matrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    out.set(i, j, true);
                }
            }
            for j in 0..other.cols {
                if other.get(i, j) {
                    out.set(i, self.cols + j, true);
                }
            }
        }
        out
    }

    pub fn from_rows(rows: &[Vec<bool>], cols: usize) -> F2Matrix {
        let mut m = F2Matrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                if x {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Row echelon form in place; returns pivot columns.
    fn echelon(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c)) else { continue };
            if p != r {
                for w in 0..self.words {
                    self.data.swap(p * self.words + w, r * self.words + w);
                }
            }
            for i in 0..self.rows {
                if i != r && self.get(i, c) {
                    for w in 0..self.words {
                        let x = self.data[r * self.words + w];
                        self.data[i * self.words + w] ^= x;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().echelon().len()
    }

    /// Basis of the right kernel `{x : A x = 0}`, as rows of the result.
    pub fn kernel(&self) -> F2Matrix {
        let mut a = self.clone();
        let pivots = a.echelon();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut k = F2Matrix::zeros(free.len(), self.cols);
        for (t, &f) in free.iter().enumerate() {
            k.set(t, f, true);
            for (r, &p) in pivots.iter().enumerate() {
                if a.get(r, f) {
                    k.set(t, p, true);
                }
            }
        }
        k
    }

    /// Whether row vector `v` lies in the row space of `self`.
    pub fn row_space_contains(&self, v: &F2Matrix) -> bool {
        self.rank() == self.vstack(v).rank()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smith_toy() {
        let m = IntMatrix::from_rows(&[vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 0]]);
        assert_eq!(m.smith_diagonal().unwrap(), vec![1, 2]);
        let m = IntMatrix::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]);
        assert_eq!(m.smith_diagonal().unwrap(), vec![2, 6, 12]);
        let m = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        assert_eq!(m.smith_diagonal().unwrap(), vec![1, 6]);
    }

    #[test]
    fn f2_kernel_rank() {
        let m = F2Matrix::from_rows(&[vec![true, true, false], vec![false, true, true]], 3);
        assert_eq!(m.rank(), 2);
        let k = m.kernel();
        assert_eq!(k.rows, 1);
        assert!(m.mul(&k.transpose()).unwrap().is_zero());
    }
}
