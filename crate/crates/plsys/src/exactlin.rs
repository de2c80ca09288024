//! Exact linear algebra over a field: dense matrices, canonical subspaces,
//! images, kernels, preimages, meets/joins, and induced maps on subspaces
//! and quotients.
//!
//! Subspaces are kept in a canonical reduced form (the RREF of the spanning
//! set viewed as rows), so equal subspaces compare equal bit for bit.

use std::fmt;

use thiserror::Error;

use crate::field::Field;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinError {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimMismatch {
        context: String,
        expected: usize,
        got: usize,
    },
    #[error("containment violated: image of basis vector {index} ({vector:?}) lies outside the target subspace")]
    NotContained { index: usize, vector: Vec<String> },
    #[error("matrix is not invertible")]
    Singular,
}

/// Dense row-major matrix over an exact field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Field> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).render()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl<S: Field> Matrix<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must be rows*cols");
        Matrix { rows, cols, data }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend(r);
        }
        Matrix {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&n| S::from_int(n)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &S {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: S) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).clone());
            }
        }
        out
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matrix product shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zero(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let b = rhs.get(k, c);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(r, c).clone();
                    out.set(r, c, cur + a.clone() * b.clone());
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|r| {
                let mut acc = S::zero();
                for c in 0..self.cols {
                    if !self.get(r, c).is_zero() && !v[c].is_zero() {
                        acc = acc + self.get(r, c).clone() * v[c].clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Horizontal concatenation [self | rhs].
    pub fn hstack(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows);
        let mut out = Self::zero(self.rows, self.cols + rhs.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get(r, c).clone());
            }
            for c in 0..rhs.cols {
                out.set(r, self.cols + c, rhs.get(r, c).clone());
            }
        }
        out
    }

    /// Columns `range` as a new matrix.
    pub fn col_block(&self, start: usize, len: usize) -> Self {
        let mut out = Self::zero(self.rows, len);
        for r in 0..self.rows {
            for c in 0..len {
                out.set(r, c, self.get(r, start + c).clone());
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Unique reduced row echelon form together with the pivot column list
    /// (strictly increasing).
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pivot_row = 0usize;
        for col in 0..m.cols {
            if pivot_row == m.rows {
                break;
            }
            // find a nonzero entry in this column at or below pivot_row
            let found = (pivot_row..m.rows).find(|&r| !m.get(r, col).is_zero());
            let Some(row) = found else { continue };
            m.swap_rows(pivot_row, row);
            let inv = m.get(pivot_row, col).inv().expect("nonzero pivot");
            m.scale_row(pivot_row, &inv);
            for r in 0..m.rows {
                if r != pivot_row && !m.get(r, col).is_zero() {
                    let factor = m.get(r, col).clone();
                    m.row_axpy(r, pivot_row, &factor);
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn scale_row(&mut self, r: usize, factor: &S) {
        for c in 0..self.cols {
            let v = self.get(r, c).clone();
            self.set(r, c, v * factor.clone());
        }
    }

    /// row[r] -= factor * row[src]
    fn row_axpy(&mut self, r: usize, src: usize, factor: &S) {
        for c in 0..self.cols {
            let delta = factor.clone() * self.get(src, c).clone();
            let v = self.get(r, c).clone();
            self.set(r, c, v - delta);
        }
    }

    /// Solves self * x = rhs for a single column vector; `None` if inconsistent.
    pub fn solve(&self, rhs: &[S]) -> Option<Vec<S>> {
        assert_eq!(self.rows, rhs.len(), "rhs length mismatch");
        let rhs_m = Matrix::new(self.rows, 1, rhs.to_vec());
        let aug = self.hstack(&rhs_m);
        let (red, pivots) = aug.rref();
        // inconsistent iff a pivot lands in the rhs column
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![S::zero(); self.cols];
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = red.get(i, self.cols).clone();
        }
        Some(x)
    }

    /// Solves self * X = rhs column by column; `None` if any column is
    /// inconsistent.
    pub fn solve_matrix(&self, rhs: &Self) -> Option<Self> {
        assert_eq!(self.rows, rhs.rows);
        let mut cols = Vec::with_capacity(rhs.cols);
        for c in 0..rhs.cols {
            cols.push(self.solve(&rhs.col(c))?);
        }
        let mut out = Self::zero(self.cols, rhs.cols);
        for (c, colv) in cols.iter().enumerate() {
            for r in 0..self.cols {
                out.set(r, c, colv[r].clone());
            }
        }
        Some(out)
    }

    pub fn inverse(&self) -> Result<Self, LinError> {
        if self.rows != self.cols {
            return Err(LinError::Singular);
        }
        let aug = self.hstack(&Self::identity(self.rows));
        let (red, pivots) = aug.rref();
        if pivots.len() != self.rows || pivots.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(LinError::Singular);
        }
        Ok(red.col_block(self.rows, self.rows))
    }

    pub fn trace(&self) -> S {
        let n = self.rows.min(self.cols);
        let mut acc = S::zero();
        for i in 0..n {
            acc = acc + self.get(i, i).clone();
        }
        acc
    }

    pub fn determinant(&self) -> S {
        assert_eq!(self.rows, self.cols, "determinant of a square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let found = (col..n).find(|&r| !m.get(r, col).is_zero());
            let Some(row) = found else {
                return S::zero();
            };
            if row != col {
                m.swap_rows(col, row);
                det = -det;
            }
            let pivot = m.get(col, col).clone();
            det = det * pivot.clone();
            let inv = pivot.inv().expect("nonzero pivot");
            for r in col + 1..n {
                if !m.get(r, col).is_zero() {
                    let factor = m.get(r, col).clone() * inv.clone();
                    m.row_axpy(r, col, &factor);
                }
            }
        }
        det
    }

    pub fn render_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|x| x.render()).collect())
            .collect()
    }
}

/// A linear subspace of F^n in canonical reduced form: the basis vectors,
/// read as rows, are the nonzero rows of an RREF with strictly increasing
/// pivots. Two equal subspaces therefore have identical representations.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace<S> {
    ambient: usize,
    /// ambient x dim matrix; columns are the canonical basis vectors.
    basis: Matrix<S>,
    /// pivot coordinate of each basis vector, strictly increasing.
    pivots: Vec<usize>,
}

impl<S: Field> fmt::Debug for Subspace<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Subspace(ambient={}, dim={}, basis={:?})",
            self.ambient,
            self.dim(),
            self.basis
        )
    }
}

impl<S: Field> Subspace<S> {
    /// The subspace spanned by the columns of `spanning`.
    pub fn from_spanning(spanning: &Matrix<S>) -> Self {
        let ambient = spanning.rows();
        let (red, pivots) = spanning.transpose().rref();
        let dim = pivots.len();
        let mut basis = Matrix::zero(ambient, dim);
        for i in 0..dim {
            for c in 0..ambient {
                basis.set(c, i, red.get(i, c).clone());
            }
        }
        // pivot coordinates of the canonical row basis
        let pivots = (0..dim)
            .map(|i| {
                (0..ambient)
                    .find(|&c| !red.get(i, c).is_zero())
                    .expect("nonzero basis row")
            })
            .collect();
        Subspace {
            ambient,
            basis,
            pivots,
        }
    }

    pub fn from_vectors(ambient: usize, vectors: &[Vec<S>]) -> Self {
        let mut m = Matrix::zero(ambient, vectors.len());
        for (c, v) in vectors.iter().enumerate() {
            assert_eq!(v.len(), ambient);
            for r in 0..ambient {
                m.set(r, c, v[r].clone());
            }
        }
        Self::from_spanning(&m)
    }

    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: Matrix::zero(ambient, 0),
            pivots: Vec::new(),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: Matrix::identity(ambient),
            pivots: (0..ambient).collect(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient
    }

    /// ambient x dim inclusion matrix (columns = canonical basis).
    pub fn basis(&self) -> &Matrix<S> {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduce `v` modulo the subspace: returns the residual with all pivot
    /// coordinates cleared. The residual is zero iff `v` lies in the subspace.
    pub fn reduce(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.ambient);
        let mut out = v.to_vec();
        for (i, &p) in self.pivots.iter().enumerate() {
            if !out[p].is_zero() {
                let factor = out[p].clone();
                for r in 0..self.ambient {
                    let delta = factor.clone() * self.basis.get(r, i).clone();
                    out[r] = out[r].clone() - delta;
                }
            }
        }
        out
    }

    pub fn contains(&self, v: &[S]) -> bool {
        self.reduce(v).iter().all(|x| x.is_zero())
    }

    pub fn contains_subspace(&self, other: &Subspace<S>) -> bool {
        assert_eq!(self.ambient, other.ambient);
        (0..other.dim()).all(|c| self.contains(&other.basis.col(c)))
    }

    /// Coordinates of `v` in the canonical basis; `None` if `v` is outside.
    pub fn coordinates(&self, v: &[S]) -> Option<Vec<S>> {
        if !self.contains(v) {
            return None;
        }
        // with an RREF row basis, coordinates are just the pivot entries
        Some(self.pivots.iter().map(|&p| v[p].clone()).collect())
    }

    /// Canonical projection F^n -> F^(n-k) with kernel exactly this subspace:
    /// reduce modulo the subspace, then read off the non-pivot coordinates.
    pub fn quotient_projection(&self) -> Matrix<S> {
        let free: Vec<usize> = (0..self.ambient)
            .filter(|c| !self.pivots.contains(c))
            .collect();
        let mut out = Matrix::zero(free.len(), self.ambient);
        for c in 0..self.ambient {
            let mut e = vec![S::zero(); self.ambient];
            e[c] = S::one();
            let reduced = self.reduce(&e);
            for (r, &fc) in free.iter().enumerate() {
                out.set(r, c, reduced[fc].clone());
            }
        }
        out
    }

    /// Canonical section F^(n-k) -> F^n of the quotient projection
    /// (standard vectors at the non-pivot coordinates).
    pub fn quotient_section(&self) -> Matrix<S> {
        let free: Vec<usize> = (0..self.ambient)
            .filter(|c| !self.pivots.contains(c))
            .collect();
        let mut out = Matrix::zero(self.ambient, free.len());
        for (c, &fc) in free.iter().enumerate() {
            out.set(fc, c, S::one());
        }
        out
    }
}

/// Column space of `m` in canonical form.
pub fn image_basis<S: Field>(m: &Matrix<S>) -> Subspace<S> {
    let im = Subspace::from_spanning(m);
    debug_assert_eq!(im.dim() + kernel_dim_oracle(m), m.cols());
    im
}

fn kernel_dim_oracle<S: Field>(m: &Matrix<S>) -> usize {
    m.cols() - m.rank()
}

/// Null space of `m` in canonical form. Rank-nullity is asserted against the
/// image computation.
pub fn kernel_basis<S: Field>(m: &Matrix<S>) -> Subspace<S> {
    let (red, pivots) = m.rref();
    let free: Vec<usize> = (0..m.cols()).filter(|c| !pivots.contains(c)).collect();
    let mut vectors = Vec::with_capacity(free.len());
    for &f in &free {
        let mut v = vec![S::zero(); m.cols()];
        v[f] = S::one();
        for (i, &p) in pivots.iter().enumerate() {
            v[p] = -red.get(i, f).clone();
        }
        vectors.push(v);
    }
    let kernel = Subspace::from_vectors(m.cols(), &vectors);
    assert_eq!(
        kernel.dim() + pivots.len(),
        m.cols(),
        "rank-nullity must hold"
    );
    kernel
}

/// Preimage { v : m v in s }. Contains the kernel of m.
pub fn preimage<S: Field>(m: &Matrix<S>, s: &Subspace<S>) -> Result<Subspace<S>, LinError> {
    if s.ambient_dim() != m.rows() {
        return Err(LinError::DimMismatch {
            context: "preimage target ambient".into(),
            expected: m.rows(),
            got: s.ambient_dim(),
        });
    }
    // solve m v = B w  <=>  [m | -B] (v; w) = 0, project to the v block
    let neg_b = {
        let b = s.basis();
        let mut out = Matrix::zero(b.rows(), b.cols());
        for r in 0..b.rows() {
            for c in 0..b.cols() {
                out.set(r, c, -b.get(r, c).clone());
            }
        }
        out
    };
    let block = m.hstack(&neg_b);
    let ker = kernel_basis(&block);
    let vectors: Vec<Vec<S>> = (0..ker.dim())
        .map(|c| ker.basis().col(c)[..m.cols()].to_vec())
        .collect();
    let result = Subspace::from_vectors(m.cols(), &vectors);
    debug_assert!(result.contains_subspace(&kernel_basis(m)));
    debug_assert!((0..result.dim()).all(|c| s.contains(&m.mul_vec(&result.basis().col(c)))));
    Ok(result)
}

/// Intersection and sum of two subspaces. The modular dimension law
/// dim s1 + dim s2 = dim meet + dim join is asserted.
pub fn meet_join<S: Field>(
    s1: &Subspace<S>,
    s2: &Subspace<S>,
) -> Result<(Subspace<S>, Subspace<S>), LinError> {
    if s1.ambient_dim() != s2.ambient_dim() {
        return Err(LinError::DimMismatch {
            context: "meet/join ambient".into(),
            expected: s1.ambient_dim(),
            got: s2.ambient_dim(),
        });
    }
    let join = Subspace::from_spanning(&s1.basis().hstack(s2.basis()));
    // v = B1 a = B2 b: kernel of [B1 | -B2], then map the a-block through B1
    let neg_b2 = {
        let b = s2.basis();
        let mut out = Matrix::zero(b.rows(), b.cols());
        for r in 0..b.rows() {
            for c in 0..b.cols() {
                out.set(r, c, -b.get(r, c).clone());
            }
        }
        out
    };
    let block = s1.basis().hstack(&neg_b2);
    let ker = kernel_basis(&block);
    let vectors: Vec<Vec<S>> = (0..ker.dim())
        .map(|c| {
            let coeffs = &ker.basis().col(c)[..s1.dim()];
            s1.basis().mul_vec(coeffs)
        })
        .collect();
    let meet = Subspace::from_vectors(s1.ambient_dim(), &vectors);
    assert_eq!(
        s1.dim() + s2.dim(),
        meet.dim() + join.dim(),
        "modular dimension law must hold"
    );
    Ok((meet, join))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InducedMode {
    /// Restriction dom_sub -> cod_sub of m, in the canonical bases.
    Sub,
    /// Map on quotients (domain / dom_sub) -> (codomain / cod_sub), where the
    /// subspaces are the kernels being quotiented.
    Quotient,
}

/// Matrix of the map induced by `m` between subspaces or quotients, in the
/// stored canonical bases.
pub fn induced_map<S: Field>(
    m: &Matrix<S>,
    dom_sub: &Subspace<S>,
    cod_sub: &Subspace<S>,
    mode: InducedMode,
) -> Result<Matrix<S>, LinError> {
    if dom_sub.ambient_dim() != m.cols() {
        return Err(LinError::DimMismatch {
            context: "induced map domain ambient".into(),
            expected: m.cols(),
            got: dom_sub.ambient_dim(),
        });
    }
    if cod_sub.ambient_dim() != m.rows() {
        return Err(LinError::DimMismatch {
            context: "induced map codomain ambient".into(),
            expected: m.rows(),
            got: cod_sub.ambient_dim(),
        });
    }
    match mode {
        InducedMode::Sub => {
            let mut out = Matrix::zero(cod_sub.dim(), dom_sub.dim());
            for c in 0..dom_sub.dim() {
                let image = m.mul_vec(&dom_sub.basis().col(c));
                match cod_sub.coordinates(&image) {
                    Some(coords) => {
                        for r in 0..cod_sub.dim() {
                            out.set(r, c, coords[r].clone());
                        }
                    }
                    None => {
                        return Err(LinError::NotContained {
                            index: c,
                            vector: image.iter().map(|x| x.render()).collect(),
                        })
                    }
                }
            }
            Ok(out)
        }
        InducedMode::Quotient => {
            // well-definedness: m(dom_sub) must land in cod_sub
            for c in 0..dom_sub.dim() {
                let image = m.mul_vec(&dom_sub.basis().col(c));
                if !cod_sub.contains(&image) {
                    return Err(LinError::NotContained {
                        index: c,
                        vector: image.iter().map(|x| x.render()).collect(),
                    });
                }
            }
            let proj = cod_sub.quotient_projection();
            let sect = dom_sub.quotient_section();
            Ok(proj.mul(&m.mul(&sect)))
        }
    }
}
