//! Matrix-valued affine expressions over the scalar coordinates of the
//! decision variables.
//!
//! Every expression has the form `constant + Σ_k y_k · coeff_k` where `y` is
//! the flat coordinate vector of all declared variables. Only coordinates
//! with a nonzero coefficient are stored.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

/// Handle to a declared decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Shape class of a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// `n × n` symmetric matrix; one coordinate per upper-triangular entry.
    Symmetric,
    /// `rows × cols` matrix; one coordinate per entry, row-major.
    Rectangular,
    /// `1 × 1`.
    Scalar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub structure: Structure,
    /// First flat coordinate owned by this variable.
    pub offset: usize,
}

impl VariableInfo {
    /// Number of scalar coordinates.
    pub fn len(&self) -> usize {
        match self.structure {
            Structure::Symmetric => self.rows * (self.rows + 1) / 2,
            Structure::Rectangular => self.rows * self.cols,
            Structure::Scalar => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The variable as an affine expression of the flat coordinates.
    pub(crate) fn expr(&self) -> AffineExpr {
        let mut out = AffineExpr::zeros(self.rows, self.cols);
        match self.structure {
            Structure::Symmetric => {
                let mut k = self.offset;
                for i in 0..self.rows {
                    for j in i..self.rows {
                        let mut c = DMatrix::zeros(self.rows, self.rows);
                        c[(i, j)] = 1.0;
                        c[(j, i)] = 1.0;
                        out.terms.insert(k, c);
                        k += 1;
                    }
                }
            }
            Structure::Rectangular => {
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        let mut c = DMatrix::zeros(self.rows, self.cols);
                        c[(i, j)] = 1.0;
                        out.terms.insert(self.offset + i * self.cols + j, c);
                    }
                }
            }
            Structure::Scalar => {
                out.terms.insert(self.offset, DMatrix::from_element(1, 1, 1.0));
            }
        }
        out
    }

    /// Rebuild the matrix value of this variable from the flat coordinates.
    pub fn unpack(&self, coords: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        match self.structure {
            Structure::Symmetric => {
                let mut k = self.offset;
                for i in 0..self.rows {
                    for j in i..self.rows {
                        m[(i, j)] = coords[k];
                        m[(j, i)] = coords[k];
                        k += 1;
                    }
                }
            }
            Structure::Rectangular => {
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        m[(i, j)] = coords[self.offset + i * self.cols + j];
                    }
                }
            }
            Structure::Scalar => m[(0, 0)] = coords[self.offset],
        }
        m
    }
}

/// Affine matrix expression `constant + Σ_k y_k · terms[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    rows: usize,
    cols: usize,
    constant: DMatrix<f64>,
    terms: BTreeMap<usize, DMatrix<f64>>,
}

impl AffineExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            constant: DMatrix::zeros(rows, cols),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            constant: m,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n))
    }

    pub fn scalar(v: f64) -> Self {
        Self::constant(DMatrix::from_element(1, 1, v))
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn constant_part(&self) -> &DMatrix<f64> {
        &self.constant
    }

    /// Nonzero coefficient matrices keyed by flat coordinate.
    pub fn terms(&self) -> &BTreeMap<usize, DMatrix<f64>> {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coordinate(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }

    /// Evaluate at the flat coordinate vector `y`.
    pub fn eval(&self, y: &[f64]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (&k, c) in &self.terms {
            add_scaled(&mut out, y[k], c);
        }
        out
    }

    fn map(&self, rows: usize, cols: usize, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&k, c)| (k, f(c)))
            .filter(|(_, c)| c.iter().any(|v| *v != 0.0))
            .collect();
        Self {
            rows,
            cols,
            constant: f(&self.constant),
            terms,
        }
    }

    /// `lhs · self`
    pub fn lmul(&self, lhs: &DMatrix<f64>) -> Self {
        assert_eq!(lhs.ncols(), self.rows, "lmul: inner dimension mismatch");
        self.map(lhs.nrows(), self.cols, |c| lhs * c)
    }

    /// `self · rhs`
    pub fn rmul(&self, rhs: &DMatrix<f64>) -> Self {
        assert_eq!(self.cols, rhs.nrows(), "rmul: inner dimension mismatch");
        self.map(self.rows, rhs.ncols(), |c| c * rhs)
    }

    pub fn transpose(&self) -> Self {
        self.map(self.cols, self.rows, |c| c.transpose())
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zeros(self.rows, self.cols);
        }
        self.map(self.rows, self.cols, |c| c * s)
    }

    /// `(self + selfᵀ) / 2`
    pub fn symmetric_part(&self) -> Self {
        assert_eq!(self.rows, self.cols, "symmetric_part of a non-square expression");
        self.map(self.rows, self.cols, |c| (c + c.transpose()) * 0.5)
    }

    /// Largest `‖M − Mᵀ‖_max / max(1, ‖M‖_max)` over the constant and every
    /// coefficient.
    pub fn asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        std::iter::once(&self.constant)
            .chain(self.terms.values())
            .map(|c| {
                let scale = c.amax().max(1.0);
                (c - c.transpose()).amax() / scale
            })
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Self {
        assert_eq!(self.rows, self.cols, "trace of a non-square expression");
        self.map(1, 1, |c| DMatrix::from_element(1, 1, c.trace()))
    }

    /// Scalar expression for entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> Self {
        self.map(1, 1, |c| DMatrix::from_element(1, 1, c[(i, j)]))
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        assert_eq!(self.shape(), other.shape(), "affine expression shape mismatch");
        let mut out = self.clone();
        add_scaled(&mut out.constant, sign, &other.constant);
        for (&k, c) in &other.terms {
            match out.terms.get_mut(&k) {
                Some(existing) => add_scaled(existing, sign, c),
                None => {
                    out.terms.insert(k, c * sign);
                }
            }
        }
        out.terms.retain(|_, c| c.iter().any(|v| *v != 0.0));
        out
    }

    /// Assemble a block matrix. Blocks in a row must share their row count and
    /// blocks in a column must share their column count.
    pub fn block(rows: &[Vec<AffineExpr>]) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty(), "empty block layout");
        let ncols_blocks = rows[0].len();
        let col_widths: Vec<usize> = rows[0].iter().map(|b| b.cols).collect();
        let row_heights: Vec<usize> = rows.iter().map(|r| r[0].rows).collect();
        for (bi, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), ncols_blocks, "ragged block layout");
            for (bj, b) in r.iter().enumerate() {
                assert_eq!(b.rows, row_heights[bi], "block row height mismatch at ({bi},{bj})");
                assert_eq!(b.cols, col_widths[bj], "block column width mismatch at ({bi},{bj})");
            }
        }
        let total_rows: usize = row_heights.iter().sum();
        let total_cols: usize = col_widths.iter().sum();
        let mut out = Self::zeros(total_rows, total_cols);
        let mut r0 = 0;
        for (bi, r) in rows.iter().enumerate() {
            let mut c0 = 0;
            for (bj, b) in r.iter().enumerate() {
                let (h, w) = (row_heights[bi], col_widths[bj]);
                out.constant.view_mut((r0, c0), (h, w)).copy_from(&b.constant);
                for (&k, c) in &b.terms {
                    let slot = out
                        .terms
                        .entry(k)
                        .or_insert_with(|| DMatrix::zeros(total_rows, total_cols));
                    slot.view_mut((r0, c0), (h, w)).copy_from(c);
                }
                c0 += w;
            }
            r0 += row_heights[bi];
        }
        out
    }

    pub fn hstack(parts: &[AffineExpr]) -> Self {
        Self::block(&[parts.to_vec()])
    }

    pub fn vstack(parts: &[AffineExpr]) -> Self {
        let rows: Vec<Vec<AffineExpr>> = parts.iter().map(|p| vec![p.clone()]).collect();
        Self::block(&rows)
    }
}

impl Add for &AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: &AffineExpr) -> AffineExpr {
        self.combine(rhs, 1.0)
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: AffineExpr) -> AffineExpr {
        self.combine(&rhs, 1.0)
    }
}

impl Sub for &AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: &AffineExpr) -> AffineExpr {
        self.combine(rhs, -1.0)
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        self.combine(&rhs, -1.0)
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scale(-1.0)
    }
}

impl Neg for &AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scale(-1.0)
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(self, s: f64) -> AffineExpr {
        self.scale(s)
    }
}

impl Mul<f64> for &AffineExpr {
    type Output = AffineExpr;
    fn mul(self, s: f64) -> AffineExpr {
        self.scale(s)
    }
}

/// `dst += s · src`
pub(crate) fn add_scaled(dst: &mut DMatrix<f64>, s: f64, src: &DMatrix<f64>) {
    dst.zip_apply(src, |d, v| *d += s * v);
}
