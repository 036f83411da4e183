//! Dense linear algebra over a finite field and canonical subspaces.
//!
//! A [`Subspace`] is stored by its reduced row echelon basis, so equality of
//! subspaces is equality of the stored matrices. Submodules of `(k0 ⊕ k0)^n`
//! are pairs of `k0`-subspaces, see [`SplitSubspace`].

use std::fmt;

use thiserror::Error;

use crate::gf::{Field, FieldElement, Involution, SplitRingElement};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("ambient dimensions differ: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("matrices over different coefficient rings")]
    MixedRings,
    #[error("vector of length {got} in a space of dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is singular")]
    Singular,
}

/// A dense row-major matrix of field elements. Arithmetic takes the field as an argument.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<u32>> =
            (0..self.rows).map(|i| self.row(i).iter().map(|x| x.index()).collect()).collect();
        write!(f, "Matrix{rows:?}")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![FieldElement::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = FieldElement::ONE;
        }
        m
    }

    /// Builds a matrix from rows of equal length `cols`.
    pub fn from_rows(cols: usize, rows: &[Vec<FieldElement>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> FieldElement) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[FieldElement] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<FieldElement>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Entrywise application of a field involution.
    pub fn conj(&self, f: &Field, inv: Involution) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f.conj(inv, x)).collect(),
        }
    }

    pub fn mul(&self, f: &Field, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = f.mul(a, other[(k, j)]);
                    out[(i, j)] = f.add(out[(i, j)], t);
                }
            }
        }
        out
    }

    pub fn add(&self, f: &Field, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f.add(a, b)).collect(),
        }
    }

    pub fn scale(&self, f: &Field, c: FieldElement) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| f.mul(c, a)).collect(),
        }
    }

    /// Row vector times matrix: `v · M`.
    pub fn left_apply(&self, f: &Field, v: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![FieldElement::ZERO; self.cols];
        for (i, &a) in v.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o = f.add(*o, f.mul(a, self[(i, j)]));
            }
        }
        out
    }

    /// Matrix times column vector: `M · v`.
    pub fn apply(&self, f: &Field, v: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(f, self.row(i), v)).collect()
    }

    /// Stacks `self` above `other`.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Columns `start..end` as a new matrix.
    pub fn col_range(&self, start: usize, end: usize) -> Matrix {
        Matrix::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = FieldElement;
    fn index(&self, (i, j): (usize, usize)) -> &FieldElement {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut FieldElement {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(f: &Field, a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
    a.iter().zip(b).fold(FieldElement::ZERO, |acc, (&x, &y)| f.add(acc, f.mul(x, y)))
}

pub fn add_vec(f: &Field, a: &[FieldElement], b: &[FieldElement]) -> Vec<FieldElement> {
    a.iter().zip(b).map(|(&x, &y)| f.add(x, y)).collect()
}

pub fn sub_vec(f: &Field, a: &[FieldElement], b: &[FieldElement]) -> Vec<FieldElement> {
    a.iter().zip(b).map(|(&x, &y)| f.sub(x, y)).collect()
}

pub fn scale_vec(f: &Field, c: FieldElement, a: &[FieldElement]) -> Vec<FieldElement> {
    a.iter().map(|&x| f.mul(c, x)).collect()
}

/// `a += c * b`.
pub fn axpy(f: &Field, a: &mut [FieldElement], c: FieldElement, b: &[FieldElement]) {
    if c.is_zero() {
        return;
    }
    for (x, &y) in a.iter_mut().zip(b) {
        *x = f.add(*x, f.mul(c, y));
    }
}

/// Reduced row echelon form with zero rows dropped, and the pivot columns.
pub fn rref_with_pivots(f: &Field, m: &Matrix) -> (Matrix, Vec<usize>) {
    let mut rows: Vec<Vec<FieldElement>> = m.row_vecs();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = f.inv(rows[r][c]);
        rows[r] = scale_vec(f, inv, &rows[r]);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let c_i = f.neg(row[c]);
                axpy(f, row, c_i, &pivot_row);
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    (Matrix::from_rows(m.cols, &rows), pivots)
}

pub fn rref(f: &Field, m: &Matrix) -> Matrix {
    rref_with_pivots(f, m).0
}

pub fn rank(f: &Field, m: &Matrix) -> usize {
    rref_with_pivots(f, m).1.len()
}

/// Basis (as rows) of the right kernel `{x : M x = 0}`, in reduced echelon form.
pub fn kernel(f: &Field, m: &Matrix) -> Matrix {
    let (r, pivots) = rref_with_pivots(f, m);
    let n = m.cols;
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::with_capacity(free.len());
    for &fc in &free {
        let mut v = vec![FieldElement::ZERO; n];
        v[fc] = FieldElement::ONE;
        for (i, &pc) in pivots.iter().enumerate() {
            v[pc] = f.neg(r[(i, fc)]);
        }
        basis.push(v);
    }
    rref(f, &Matrix::from_rows(n, &basis))
}

/// Some solution of `M x = b`, if one exists.
pub fn solve(f: &Field, m: &Matrix, b: &[FieldElement]) -> Option<Vec<FieldElement>> {
    assert_eq!(m.rows, b.len());
    let aug = Matrix::from_fn(m.rows, m.cols + 1, |i, j| if j < m.cols { m[(i, j)] } else { b[i] });
    let (r, pivots) = rref_with_pivots(f, &aug);
    if pivots.last() == Some(&m.cols) {
        return None;
    }
    let mut x = vec![FieldElement::ZERO; m.cols];
    for (i, &pc) in pivots.iter().enumerate() {
        x[pc] = r[(i, m.cols)];
    }
    Some(x)
}

pub fn inverse(f: &Field, m: &Matrix) -> Result<Matrix, LinalgError> {
    let n = m.rows;
    if m.cols != n {
        return Err(LinalgError::Singular);
    }
    let aug = Matrix::from_fn(n, 2 * n, |i, j| {
        if j < n {
            m[(i, j)]
        } else if j - n == i {
            FieldElement::ONE
        } else {
            FieldElement::ZERO
        }
    });
    let (r, pivots) = rref_with_pivots(f, &aug);
    if pivots.len() < n || pivots[n - 1] >= n {
        return Err(LinalgError::Singular);
    }
    Ok(r.col_range(n, 2 * n))
}

/// A subspace of `k^n`, stored as its reduced row echelon basis.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    ambient: usize,
    basis: Matrix,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(n={}, {:?})", self.ambient, self.basis)
    }
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Matrix::zeros(0, ambient) }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace { ambient, basis: Matrix::identity(ambient) }
    }

    /// The span of the given rows.
    pub fn span(f: &Field, ambient: usize, rows: &[Vec<FieldElement>]) -> Self {
        Subspace { ambient, basis: rref(f, &Matrix::from_rows(ambient, rows)) }
    }

    pub fn from_matrix(f: &Field, m: &Matrix) -> Self {
        Subspace { ambient: m.cols(), basis: rref(f, m) }
    }

    /// Wraps a matrix already known to be in reduced row echelon form without zero rows.
    pub(crate) fn from_rref_unchecked(basis: Matrix) -> Self {
        Subspace { ambient: basis.cols(), basis }
    }

    /// Span of the coordinate vectors `e_i` for `i` in `coords`.
    pub fn coordinate(ambient: usize, coords: impl IntoIterator<Item = usize>) -> Self {
        let mut idx: Vec<usize> = coords.into_iter().collect();
        idx.sort_unstable();
        idx.dedup();
        let basis = Matrix::from_fn(idx.len(), ambient, |i, j| {
            if idx[i] == j {
                FieldElement::ONE
            } else {
                FieldElement::ZERO
            }
        });
        Subspace { ambient, basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn basis_vecs(&self) -> Vec<Vec<FieldElement>> {
        self.basis.row_vecs()
    }

    pub fn pivots(&self) -> Vec<usize> {
        (0..self.dim())
            .map(|i| self.basis.row(i).iter().position(|x| !x.is_zero()).unwrap())
            .collect()
    }

    fn check(&self, other: &Subspace) -> Result<(), LinalgError> {
        if self.ambient != other.ambient {
            Err(LinalgError::AmbientMismatch(self.ambient, other.ambient))
        } else {
            Ok(())
        }
    }

    pub fn contains(&self, f: &Field, v: &[FieldElement]) -> Result<bool, LinalgError> {
        if v.len() != self.ambient {
            return Err(LinalgError::DimensionMismatch { expected: self.ambient, got: v.len() });
        }
        // Reduce v against the echelon basis.
        let mut w = v.to_vec();
        for (i, p) in self.pivots().into_iter().enumerate() {
            let c = f.neg(w[p]);
            axpy(f, &mut w, c, self.basis.row(i));
        }
        Ok(w.iter().all(|x| x.is_zero()))
    }

    pub fn contains_subspace(&self, f: &Field, other: &Subspace) -> Result<bool, LinalgError> {
        self.check(other)?;
        for r in other.basis_vecs() {
            if !self.contains(f, &r)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn sum(&self, f: &Field, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check(other)?;
        Ok(Subspace::from_matrix(f, &self.basis.vstack(&other.basis)))
    }

    /// Intersection by the Zassenhaus algorithm.
    pub fn intersect(&self, f: &Field, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check(other)?;
        let n = self.ambient;
        let a = self.dim();
        let b = other.dim();
        let z = Matrix::from_fn(a + b, 2 * n, |i, j| {
            if i < a {
                self.basis[(i, j % n)]
            } else if j < n {
                other.basis[(i - a, j)]
            } else {
                FieldElement::ZERO
            }
        });
        let (r, pivots) = rref_with_pivots(f, &z);
        let rows: Vec<Vec<FieldElement>> = pivots
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= n)
            .map(|(i, _)| r.row(i)[n..].to_vec())
            .collect();
        Ok(Subspace { ambient: n, basis: Matrix::from_rows(n, &rows) })
    }

    /// Annihilator under the coordinate dot product: `{y : x·y = 0 for all x}`.
    pub fn annihilator(&self, f: &Field) -> Subspace {
        Subspace { ambient: self.ambient, basis: kernel(f, &self.basis) }
    }

    /// Image under the row-vector map `v ↦ v · M`.
    pub fn image(&self, f: &Field, m: &Matrix) -> Subspace {
        Subspace::from_matrix(f, &self.basis.mul(f, m))
    }

    /// Ordering key using the canonical element order of the field.
    pub fn sort_key(&self, f: &Field) -> Vec<u32> {
        self.basis.data.iter().map(|&x| f.canonical_key(x)).collect()
    }

    /// Text form: rows separated by `;`, entries by spaces, each entry a coefficient tuple.
    pub fn to_text(&self, f: &Field) -> String {
        if self.dim() == 0 {
            return "0".to_string();
        }
        (0..self.dim())
            .map(|i| self.basis.row(i).iter().map(|&x| f.format(x)).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn from_text(f: &Field, ambient: usize, s: &str) -> Result<Subspace, String> {
        let s = s.trim();
        if s == "0" || s.is_empty() {
            return Ok(Subspace::zero(ambient));
        }
        let mut rows = Vec::new();
        for row in s.split(';') {
            let entries: Result<Vec<FieldElement>, _> =
                row.split_whitespace().map(|t| f.parse(t)).collect();
            let entries = entries.map_err(|e| e.to_string())?;
            if entries.len() != ambient {
                return Err(format!("row of length {} in ambient dimension {ambient}", entries.len()));
            }
            rows.push(entries);
        }
        Ok(Subspace::span(f, ambient, &rows))
    }
}

/// Quotient map `k^n → k^n / X` with a chosen section.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quotient {
    pub dim: usize,
    /// `n × dim`; a row vector `v` maps to `v · projection`.
    pub projection: Matrix,
    /// `dim × n`; row `i` is the chosen lift of the `i`-th quotient basis vector.
    pub section: Matrix,
}

/// Quotient of `k^n` by `X`, lifting the quotient basis to the coordinate vectors
/// at the non-pivot columns of `X`.
pub fn quotient(f: &Field, n: usize, x: &Subspace) -> Result<Quotient, LinalgError> {
    if x.ambient_dim() != n {
        return Err(LinalgError::AmbientMismatch(n, x.ambient_dim()));
    }
    let pivots = x.pivots();
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let section = Subspace::coordinate(n, free.iter().copied()).basis;
    let full = x.basis.vstack(&section);
    let inv = inverse(f, &full).expect("pivot complement completes a basis");
    let projection = inv.col_range(x.dim(), n);
    Ok(Quotient { dim: free.len(), projection, section })
}

/// All `k`-dimensional subspaces of `GF(q)^n`, by RREF cell. Intended for small oracles.
pub fn all_subspaces_of_dim(f: &Field, n: usize, k: usize) -> Vec<Subspace> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    for pivots in combinations(n, k) {
        // free positions: (row i, column c) with c > pivots[i] and c not a pivot
        let free: Vec<(usize, usize)> = (0..k)
            .flat_map(|i| {
                let pv = pivots.clone();
                ((pivots[i] + 1)..n).filter(move |c| !pv.contains(c)).map(move |c| (i, c))
            })
            .collect();
        let q = f.q() as usize;
        let total = q.pow(free.len() as u32);
        for mut code in 0..total {
            let mut m = Matrix::zeros(k, n);
            for (i, &p) in pivots.iter().enumerate() {
                m[(i, p)] = FieldElement::ONE;
            }
            for &(i, c) in &free {
                m[(i, c)] = f.element((code % q) as u32);
                code /= q;
            }
            out.push(Subspace { ambient: n, basis: m });
        }
    }
    out
}

pub fn all_subspaces(f: &Field, n: usize) -> Vec<Subspace> {
    (0..=n).flat_map(|k| all_subspaces_of_dim(f, n, k)).collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// All vectors of `GF(q)^n` in index order. Intended for small oracles.
pub fn all_vectors(f: &Field, n: usize) -> impl Iterator<Item = Vec<FieldElement>> + '_ {
    let q = f.q() as u64;
    (0..q.pow(n as u32)).map(move |mut code| {
        (0..n)
            .map(|_| {
                let x = f.element((code % q) as u32);
                code /= q;
                x
            })
            .collect()
    })
}

/// A submodule of `(k0 ⊕ k0)^n`, stored as its two `k0`-components.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SplitSubspace {
    pub left: Subspace,
    pub right: Subspace,
}

impl SplitSubspace {
    pub fn new(left: Subspace, right: Subspace) -> Result<Self, LinalgError> {
        if left.ambient_dim() != right.ambient_dim() {
            return Err(LinalgError::AmbientMismatch(left.ambient_dim(), right.ambient_dim()));
        }
        Ok(SplitSubspace { left, right })
    }

    /// Submodule generated by vectors over the split ring.
    pub fn span(k0: &Field, n: usize, rows: &[Vec<SplitRingElement>]) -> Self {
        let left: Vec<Vec<FieldElement>> = rows.iter().map(|r| r.iter().map(|x| x.left).collect()).collect();
        let right: Vec<Vec<FieldElement>> = rows.iter().map(|r| r.iter().map(|x| x.right).collect()).collect();
        SplitSubspace { left: Subspace::span(k0, n, &left), right: Subspace::span(k0, n, &right) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.left.ambient_dim()
    }

    /// Dimension over `k0`.
    pub fn dim_k0(&self) -> usize {
        self.left.dim() + self.right.dim()
    }

    pub fn sum(&self, f: &Field, other: &SplitSubspace) -> Result<SplitSubspace, LinalgError> {
        Ok(SplitSubspace { left: self.left.sum(f, &other.left)?, right: self.right.sum(f, &other.right)? })
    }

    pub fn intersect(&self, f: &Field, other: &SplitSubspace) -> Result<SplitSubspace, LinalgError> {
        Ok(SplitSubspace {
            left: self.left.intersect(f, &other.left)?,
            right: self.right.intersect(f, &other.right)?,
        })
    }

    pub fn contains(&self, f: &Field, v: &[SplitRingElement]) -> Result<bool, LinalgError> {
        let l: Vec<FieldElement> = v.iter().map(|x| x.left).collect();
        let r: Vec<FieldElement> = v.iter().map(|x| x.right).collect();
        Ok(self.left.contains(f, &l)? && self.right.contains(f, &r)?)
    }
}

/// A matrix over one of the two kinds of coefficient ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoeffMatrix {
    Field(Matrix),
    /// Componentwise pair for the split ring `k0 ⊕ k0`.
    Split { left: Matrix, right: Matrix },
}

impl CoeffMatrix {
    pub fn from_split_rows(cols: usize, rows: &[Vec<SplitRingElement>]) -> Self {
        let l: Vec<Vec<FieldElement>> = rows.iter().map(|r| r.iter().map(|x| x.left).collect()).collect();
        let r: Vec<Vec<FieldElement>> = rows.iter().map(|r| r.iter().map(|x| x.right).collect()).collect();
        CoeffMatrix::Split { left: Matrix::from_rows(cols, &l), right: Matrix::from_rows(cols, &r) }
    }

    /// Row echelon form; componentwise over the split ring.
    pub fn rref(&self, f: &Field) -> CoeffMatrix {
        match self {
            CoeffMatrix::Field(m) => CoeffMatrix::Field(rref(f, m)),
            CoeffMatrix::Split { left, right } => {
                CoeffMatrix::Split { left: rref(f, left), right: rref(f, right) }
            }
        }
    }

    /// Vertical concatenation; both operands must be over the same kind of ring.
    pub fn vstack(&self, other: &CoeffMatrix) -> Result<CoeffMatrix, LinalgError> {
        match (self, other) {
            (CoeffMatrix::Field(a), CoeffMatrix::Field(b)) => Ok(CoeffMatrix::Field(a.vstack(b))),
            (CoeffMatrix::Split { left: a, right: b }, CoeffMatrix::Split { left: c, right: d }) => {
                Ok(CoeffMatrix::Split { left: a.vstack(c), right: b.vstack(d) })
            }
            _ => Err(LinalgError::MixedRings),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::make_field;
    use proptest::prelude::*;

    fn el(f: &Field, xs: &[u32]) -> Vec<FieldElement> {
        xs.iter().map(|&x| f.element(x)).collect()
    }

    fn members(f: &Field, s: &Subspace) -> Vec<Vec<FieldElement>> {
        all_vectors(f, s.ambient_dim()).filter(|v| s.contains(f, v).unwrap()).collect()
    }

    #[test]
    fn rref_examples() {
        let f2 = make_field(2, 1).unwrap();
        assert_eq!(rref(&f2, &Matrix::identity(3)), Matrix::identity(3));
        let m = Matrix::from_rows(2, &[el(&f2, &[1, 1]), el(&f2, &[1, 1])]);
        assert_eq!(rref(&f2, &m), Matrix::from_rows(2, &[el(&f2, &[1, 1])]));

        // [[w, 1], [1, w^2]] over GF(4): second row is w^2 times the first, so rank 1
        // and the normalized row is [1, w^{-1}] = [1, w^2].
        let f4 = make_field(2, 2).unwrap();
        let w = f4.generator();
        let w2 = f4.mul(w, w);
        let m = Matrix::from_rows(2, &[vec![w, f4.one()], vec![f4.one(), w2]]);
        let r = rref(&f4, &m);
        assert_eq!(r, Matrix::from_rows(2, &[vec![f4.one(), w2]]));
    }

    #[test]
    fn kernel_solve_inverse() {
        let f = make_field(5, 1).unwrap();
        let m = Matrix::from_rows(3, &[el(&f, &[1, 2, 3]), el(&f, &[2, 4, 2])]);
        let k = kernel(&f, &m);
        assert_eq!(k.rows(), 1);
        assert!(m.apply(&f, k.row(0)).iter().all(|x| x.is_zero()));
        let b = el(&f, &[1, 0]);
        let x = solve(&f, &m, &b).unwrap();
        assert_eq!(m.apply(&f, &x), b);
        let sq = Matrix::from_rows(2, &[el(&f, &[1, 2]), el(&f, &[2, 4])]);
        assert_eq!(inverse(&f, &sq), Err(LinalgError::Singular));
        assert!(solve(&f, &sq, &el(&f, &[1, 0])).is_none());
        let sq = Matrix::from_rows(2, &[el(&f, &[1, 2]), el(&f, &[3, 4])]);
        let inv = inverse(&f, &sq).unwrap();
        assert_eq!(sq.mul(&f, &inv), Matrix::identity(2));
    }

    #[test]
    fn intersection_examples() {
        let f = make_field(3, 1).unwrap();
        let a = Subspace::span(&f, 2, &[el(&f, &[1, 0])]);
        let b = Subspace::span(&f, 2, &[el(&f, &[1, 1])]);
        assert_eq!(a.intersect(&f, &a).unwrap(), a);
        assert_eq!(a.intersect(&f, &b).unwrap(), Subspace::zero(2));
        assert_eq!(
            a.intersect(&f, &Subspace::zero(3)),
            Err(LinalgError::AmbientMismatch(2, 3))
        );
    }

    #[test]
    fn subspace_oracles_exhaustive() {
        for f in [make_field(2, 1).unwrap(), make_field(3, 1).unwrap(), make_field(2, 2).unwrap()] {
            let n = if f.q() == 2 { 4 } else { 3 };
            let all = all_subspaces(&f, n);
            // Distinct canonical bases describe distinct point sets.
            let mut sets: Vec<_> = all.iter().map(|s| members(&f, s)).collect();
            sets.sort();
            sets.dedup();
            assert_eq!(sets.len(), all.len());
            let step = (all.len() / 40).max(1);
            for a in all.iter().step_by(step) {
                for b in all.iter().step_by(step / 2 + 1) {
                    let i = a.intersect(&f, b).unwrap();
                    let s = a.sum(&f, b).unwrap();
                    assert_eq!(i.dim() + s.dim(), a.dim() + b.dim());
                    let ma = members(&f, a);
                    let expect: Vec<_> = ma.into_iter().filter(|v| b.contains(&f, v).unwrap()).collect();
                    assert_eq!(members(&f, &i), expect);
                }
            }
        }
    }

    #[test]
    fn quotient_examples() {
        let f = make_field(2, 1).unwrap();
        let q0 = quotient(&f, 3, &Subspace::zero(3)).unwrap();
        assert_eq!(q0.dim, 3);
        assert_eq!(q0.projection, Matrix::identity(3));
        let qf = quotient(&f, 3, &Subspace::full(3)).unwrap();
        assert_eq!(qf.dim, 0);

        let x = Subspace::span(&f, 4, &[el(&f, &[1, 1, 0, 1])]);
        let q = quotient(&f, 4, &x).unwrap();
        assert_eq!(q.dim, 3);
        for v in all_vectors(&f, 3) {
            let lifted = q.section.left_apply(&f, &v);
            assert_eq!(q.projection.left_apply(&f, &lifted), v);
        }
        let ker = Subspace::from_matrix(&f, &kernel(&f, &q.projection.transpose()));
        assert_eq!(ker, x);
    }

    #[test]
    fn mixed_rings_rejected() {
        let f = make_field(2, 1).unwrap();
        let a = CoeffMatrix::Field(Matrix::identity(2));
        let b = CoeffMatrix::Split { left: Matrix::identity(2), right: Matrix::identity(2) };
        assert_eq!(a.vstack(&b), Err(LinalgError::MixedRings));
        let s = b.vstack(&b).unwrap().rref(&f);
        assert_eq!(s, b);
    }

    #[test]
    fn subspace_counts_match_gaussian_binomials() {
        let f = make_field(2, 1).unwrap();
        let counts: Vec<usize> = (0..=4).map(|k| all_subspaces_of_dim(&f, 4, k).len()).collect();
        assert_eq!(counts, vec![1, 15, 35, 15, 1]);
    }

    #[test]
    fn text_round_trip() {
        let f = make_field(3, 2).unwrap();
        let s = Subspace::span(&f, 3, &[vec![f.element(4), f.element(1), f.zero()]]);
        assert_eq!(Subspace::from_text(&f, 3, &s.to_text(&f)).unwrap(), s);
        assert_eq!(Subspace::from_text(&f, 3, "0").unwrap(), Subspace::zero(3));
    }

    proptest! {
        #[test]
        fn rref_idempotent_and_row_space_preserving(
            entries in proptest::collection::vec(0u32..4, 12),
        ) {
            let f = make_field(2, 2).unwrap();
            let m = Matrix::from_fn(3, 4, |i, j| f.element(entries[i * 4 + j]));
            let r = rref(&f, &m);
            prop_assert_eq!(rref(&f, &r), r.clone());
            let s = Subspace::from_matrix(&f, &m);
            for row in m.row_vecs() {
                prop_assert!(s.contains(&f, &row).unwrap());
            }
            prop_assert_eq!(s.dim(), rank(&f, &m));
        }
    }
}
