//! Dense numeric kernels: multi-right-hand-side solves, truncated SVD and
//! dense eigendecomposition.
//!
//! Every higher layer talks to linear algebra through [`DenseMatrix`] and the
//! free functions here. Storage is real whenever all entries are known to be
//! real; operations between real operands stay real, so problems with real
//! matrices sampled at real points never touch complex arithmetic.

use std::borrow::Cow;

use faer::linalg::solvers::{Eigen, PartialPivLu, Solve, Svd};
use faer::traits::math_utils::abs;
use faer::traits::ComplexField;
use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Largest matrix accepted by [`dense_eig`] unless a cap is given explicitly.
pub const DEFAULT_EIG_CAP: usize = 5000;

/// Pivots smaller than this multiple of the largest entry are treated as zero.
const SINGULAR_PIVOT_RATIO: f64 = 1e-300;

/// Pivot ratio below which a solve is reported as near-singular.
const NEAR_SINGULAR_RATIO: f64 = 1e-13;

#[derive(Clone, Debug)]
enum Storage {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

/// A dense matrix of complex scalars with real storage when possible.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "DenseRecord", into = "DenseRecord")]
pub struct DenseMatrix {
    storage: Storage,
}

/// Column-major serialized form; `im` is absent for real storage.
#[derive(Serialize, Deserialize)]
struct DenseRecord {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<Vec<f64>>,
}

impl From<DenseMatrix> for DenseRecord {
    fn from(m: DenseMatrix) -> Self {
        let (rows, cols) = m.shape();
        let col_major = |f: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
            (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).map(|(i, j)| f(i, j)).collect()
        };
        match &m.storage {
            Storage::Real(a) => DenseRecord {
                rows,
                cols,
                re: col_major(&|i, j| a[(i, j)]),
                im: None,
            },
            Storage::Complex(a) => DenseRecord {
                rows,
                cols,
                re: col_major(&|i, j| a[(i, j)].re),
                im: Some(col_major(&|i, j| a[(i, j)].im)),
            },
        }
    }
}

impl TryFrom<DenseRecord> for DenseMatrix {
    type Error = Error;

    fn try_from(r: DenseRecord) -> Result<Self> {
        let len = r.rows * r.cols;
        if r.re.len() != len || r.im.as_ref().is_some_and(|im| im.len() != len) {
            return Err(Error::dims(format!("{len} entries"), format!("{} entries", r.re.len())));
        }
        match r.im {
            None => DenseMatrix::from_real_fn(r.rows, r.cols, |i, j| r.re[i + j * r.rows]),
            Some(im) => DenseMatrix::from_fn(r.rows, r.cols, |i, j| C64::new(r.re[i + j * r.rows], im[i + j * r.rows])),
        }
    }
}

impl PartialEq for DenseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.nrows() == other.nrows()
            && self.ncols() == other.ncols()
            && (0..self.ncols())
                .all(|j| (0..self.nrows()).all(|i| self.get(i, j) == other.get(i, j)))
    }
}

fn check_finite<T: ComplexField>(m: MatRef<'_, T>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !faer::traits::math_utils::is_finite(&m[(i, j)]) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

impl DenseMatrix {
    pub fn from_real(m: Mat<f64>) -> Result<Self> {
        check_finite(m.as_ref())?;
        Ok(Self {
            storage: Storage::Real(m),
        })
    }

    pub fn from_complex(m: Mat<C64>) -> Result<Self> {
        check_finite(m.as_ref())?;
        Ok(Self {
            storage: Storage::Complex(m),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        Self::from_complex(Mat::from_fn(rows, cols, f))
    }

    pub fn from_real_fn(
        rows: usize,
        cols: usize,
        f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        Self::from_real(Mat::from_fn(rows, cols, f))
    }

    /// Row-major construction from nested rows, mostly for tests and examples.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::from_real_fn(r, c, |i, j| rows[i][j])
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            storage: Storage::Real(Mat::zeros(rows, cols)),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            storage: Storage::Real(Mat::identity(n, n)),
        }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        Self {
            storage: Storage::Real(Mat::from_fn(n, n, |i, j| if i == j { entries[i] } else { 0.0 })),
        }
    }

    pub(crate) fn real_unchecked(m: Mat<f64>) -> Self {
        Self {
            storage: Storage::Real(m),
        }
    }

    pub(crate) fn complex_unchecked(m: Mat<C64>) -> Self {
        Self {
            storage: Storage::Complex(m),
        }
    }

    pub fn nrows(&self) -> usize {
        match &self.storage {
            Storage::Real(m) => m.nrows(),
            Storage::Complex(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match &self.storage {
            Storage::Real(m) => m.ncols(),
            Storage::Complex(m) => m.ncols(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn is_real(&self) -> bool {
        matches!(self.storage, Storage::Real(_))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match &self.storage {
            Storage::Real(m) => C64::new(m[(i, j)], 0.0),
            Storage::Complex(m) => m[(i, j)],
        }
    }

    /// Overwrites one entry, promoting to complex storage if needed.
    pub(crate) fn set_entry(&mut self, i: usize, j: usize, v: C64) {
        if let Storage::Real(m) = &mut self.storage {
            if v.im == 0.0 {
                m[(i, j)] = v.re;
                return;
            }
            *self = self.to_complex();
        }
        if let Storage::Complex(m) = &mut self.storage {
            m[(i, j)] = v;
        }
    }

    pub fn real_mat(&self) -> Option<&Mat<f64>> {
        match &self.storage {
            Storage::Real(m) => Some(m),
            Storage::Complex(_) => None,
        }
    }

    pub fn complex_mat(&self) -> Cow<'_, Mat<C64>> {
        match &self.storage {
            Storage::Real(m) => Cow::Owned(Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
                C64::new(m[(i, j)], 0.0)
            })),
            Storage::Complex(m) => Cow::Borrowed(m),
        }
    }

    pub fn into_complex_mat(self) -> Mat<C64> {
        match self.storage {
            Storage::Real(m) => Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0)),
            Storage::Complex(m) => m,
        }
    }

    pub fn to_complex(&self) -> DenseMatrix {
        Self::complex_unchecked(self.complex_mat().into_owned())
    }

    /// Switches to real storage when every imaginary part is exactly zero.
    pub fn into_real_if_exact(self) -> DenseMatrix {
        match self.storage {
            Storage::Complex(m) => {
                let all_real = (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0));
                if all_real {
                    Self::real_unchecked(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re))
                } else {
                    Self::complex_unchecked(m)
                }
            }
            storage => Self { storage },
        }
    }

    pub fn adjoint(&self) -> DenseMatrix {
        match &self.storage {
            Storage::Real(m) => Self::real_unchecked(m.transpose().to_owned()),
            Storage::Complex(m) => Self::complex_unchecked(m.adjoint().to_owned()),
        }
    }

    pub fn conj(&self) -> DenseMatrix {
        match &self.storage {
            Storage::Real(_) => self.clone(),
            Storage::Complex(m) => {
                Self::complex_unchecked(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj()))
            }
        }
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.ncols() != rhs.nrows() {
            return Err(Error::dims(
                format!("{} rows", self.ncols()),
                format!("{} rows", rhs.nrows()),
            ));
        }
        Ok(match (&self.storage, &rhs.storage) {
            (Storage::Real(a), Storage::Real(b)) => Self::real_unchecked(a * b),
            _ => Self::complex_unchecked(&*self.complex_mat() * &*rhs.complex_mat()),
        })
    }

    pub fn scaled(&self, alpha: C64) -> DenseMatrix {
        match &self.storage {
            Storage::Real(m) if alpha.im == 0.0 => {
                Self::real_unchecked(Mat::from_fn(m.nrows(), m.ncols(), |i, j| alpha.re * m[(i, j)]))
            }
            _ => {
                let m = self.complex_mat();
                Self::complex_unchecked(Mat::from_fn(m.nrows(), m.ncols(), |i, j| alpha * m[(i, j)]))
            }
        }
    }

    /// `self += alpha * other`, promoting to complex storage only if needed.
    pub fn add_scaled(&mut self, alpha: C64, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        let stays_real = alpha.im == 0.0 && self.is_real() && other.is_real();
        if stays_real {
            let (Storage::Real(a), Storage::Real(b)) = (&mut self.storage, &other.storage) else {
                unreachable!()
            };
            for j in 0..a.ncols() {
                for i in 0..a.nrows() {
                    a[(i, j)] += alpha.re * b[(i, j)];
                }
            }
            return Ok(());
        }
        if self.is_real() {
            *self = self.to_complex();
        }
        let Storage::Complex(a) = &mut self.storage else {
            unreachable!()
        };
        match &other.storage {
            Storage::Real(b) => {
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        a[(i, j)] += alpha * b[(i, j)];
                    }
                }
            }
            Storage::Complex(b) => {
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        a[(i, j)] += alpha * b[(i, j)];
                    }
                }
            }
        }
        Ok(())
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = self.clone();
        out.add_scaled(C64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn norm_fro(&self) -> f64 {
        match &self.storage {
            Storage::Real(m) => m.norm_l2(),
            Storage::Complex(m) => m.norm_l2(),
        }
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.ncols())
            .map(|j| (0..self.nrows()).map(|i| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_max(&self) -> f64 {
        match &self.storage {
            Storage::Real(m) => m.norm_max(),
            Storage::Complex(m) => m.norm_max(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.nrows()).map(|i| self.get(i, j)).collect()
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        match &self.storage {
            Storage::Real(m) => m.col(j).norm_l2(),
            Storage::Complex(m) => m.col(j).norm_l2(),
        }
    }

    /// Complex column vector from a slice.
    pub fn from_column(v: &[C64]) -> Result<DenseMatrix> {
        Self::from_fn(v.len(), 1, |i, _| v[i])
    }

    pub fn columns(&self, start: usize, count: usize) -> DenseMatrix {
        match &self.storage {
            Storage::Real(m) => Self::real_unchecked(m.subcols(start, count).to_owned()),
            Storage::Complex(m) => Self::complex_unchecked(m.subcols(start, count).to_owned()),
        }
    }

    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> DenseMatrix {
        match &self.storage {
            Storage::Real(m) => Self::real_unchecked(m.submatrix(row, col, rows, cols).to_owned()),
            Storage::Complex(m) => {
                Self::complex_unchecked(m.submatrix(row, col, rows, cols).to_owned())
            }
        }
    }

    /// Multiplies column `j` by `factors[j]` (real factors keep real storage).
    pub fn scale_columns(&self, factors: &[f64]) -> DenseMatrix {
        match &self.storage {
            Storage::Real(m) => {
                Self::real_unchecked(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * factors[j]))
            }
            Storage::Complex(m) => Self::complex_unchecked(Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
                m[(i, j)] * factors[j]
            })),
        }
    }

    /// Horizontal concatenation; the result is real only if every block is.
    pub fn hstack(blocks: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let Some(first) = blocks.first() else {
            return Ok(DenseMatrix::zeros(0, 0));
        };
        let rows = first.nrows();
        if let Some(bad) = blocks.iter().find(|b| b.nrows() != rows) {
            return Err(Error::dims(format!("{rows} rows"), format!("{} rows", bad.nrows())));
        }
        let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut acc = 0;
        for b in blocks {
            offsets.push(acc);
            acc += b.ncols();
        }
        let locate = |j: usize| {
            let idx = offsets.partition_point(|&o| o <= j) - 1;
            (idx, j - offsets[idx])
        };
        if blocks.iter().all(|b| b.is_real()) {
            let mut m = Mat::<f64>::zeros(rows, cols);
            for j in 0..cols {
                let (b, jj) = locate(j);
                let src = blocks[b].real_mat().expect("real block");
                for i in 0..rows {
                    m[(i, j)] = src[(i, jj)];
                }
            }
            Ok(Self::real_unchecked(m))
        } else {
            Ok(Self::complex_unchecked(Mat::from_fn(rows, cols, |i, j| {
                let (b, jj) = locate(j);
                blocks[b].get(i, jj)
            })))
        }
    }

    /// Assembles a block matrix from a row-major grid of equally sized blocks.
    pub fn from_blocks(grid: &[Vec<&DenseMatrix>]) -> Result<DenseMatrix> {
        let rows_of_blocks: Vec<DenseMatrix> = grid
            .iter()
            .map(|row| DenseMatrix::hstack(row))
            .collect::<Result<_>>()?;
        let total_rows: usize = rows_of_blocks.iter().map(|r| r.nrows()).sum();
        let cols = rows_of_blocks.first().map_or(0, |r| r.ncols());
        if rows_of_blocks.iter().any(|r| r.ncols() != cols) {
            return Err(Error::invalid("block rows have different widths"));
        }
        let mut starts = Vec::new();
        let mut acc = 0;
        for r in &rows_of_blocks {
            starts.push(acc);
            acc += r.nrows();
        }
        let locate = |i: usize| {
            let idx = starts.partition_point(|&o| o <= i) - 1;
            (idx, i - starts[idx])
        };
        if rows_of_blocks.iter().all(|r| r.is_real()) {
            Ok(Self::real_unchecked(Mat::from_fn(total_rows, cols, |i, j| {
                let (b, ii) = locate(i);
                rows_of_blocks[b].get(ii, j).re
            })))
        } else {
            Ok(Self::complex_unchecked(Mat::from_fn(total_rows, cols, |i, j| {
                let (b, ii) = locate(i);
                rows_of_blocks[b].get(ii, j)
            })))
        }
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        let mut worst = 0.0f64;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                worst = worst.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        worst
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.ncols());
        let mut out = vec![C64::new(0.0, 0.0); self.nrows()];
        for (j, &vj) in v.iter().enumerate() {
            if vj == C64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.get(i, j) * vj;
            }
        }
        out
    }
}

/// Pivot diagnostics of one LU factorization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotReport {
    pub min_pivot: f64,
    pub max_pivot: f64,
}

impl PivotReport {
    /// Smallest to largest pivot magnitude; a cheap reciprocal condition proxy.
    pub fn ratio(&self) -> f64 {
        if self.max_pivot == 0.0 {
            0.0
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    pub fn near_singular(&self) -> bool {
        self.ratio() < NEAR_SINGULAR_RATIO
    }
}

/// Solution of a multi-right-hand-side solve plus pivot diagnostics.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: DenseMatrix,
    pub pivots: PivotReport,
}

fn lu_solve<T: ComplexField<Real = f64>>(a: MatRef<'_, T>, b: MatRef<'_, T>) -> Result<(Mat<T>, PivotReport)> {
    let mut scale = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            scale = scale.max(abs(&a[(i, j)]));
        }
    }
    let lu = PartialPivLu::new(a);
    let u = lu.U();
    let mut min_pivot = f64::INFINITY;
    let mut max_pivot = 0.0f64;
    for i in 0..u.nrows() {
        let p = abs(&u[(i, i)]);
        min_pivot = min_pivot.min(p);
        max_pivot = max_pivot.max(p);
    }
    if u.nrows() == 0 {
        min_pivot = 0.0;
    }
    if !(min_pivot > SINGULAR_PIVOT_RATIO * scale) || scale == 0.0 {
        return Err(Error::SingularMatrix {
            pivot: min_pivot,
            scale,
        });
    }
    let x = lu.solve(b);
    if check_finite(x.as_ref()).is_err() {
        return Err(Error::SingularMatrix {
            pivot: min_pivot,
            scale,
        });
    }
    Ok((x, PivotReport { min_pivot, max_pivot }))
}

/// Solves `A X = B` with one LU factorization shared by all columns of `B`.
pub fn solve_multi(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    solve_multi_report(a, b).map(|r| r.solution)
}

pub fn solve_multi_report(a: &DenseMatrix, b: &DenseMatrix) -> Result<SolveReport> {
    if !a.is_square() {
        return Err(Error::dims("square matrix", format!("{:?}", a.shape())));
    }
    if a.nrows() != b.nrows() {
        return Err(Error::dims(format!("{} rows", a.nrows()), format!("{} rows", b.nrows())));
    }
    match (&a.storage, &b.storage) {
        (Storage::Real(am), Storage::Real(bm)) => {
            let (x, pivots) = lu_solve(am.as_ref(), bm.as_ref())?;
            Ok(SolveReport {
                solution: DenseMatrix::real_unchecked(x),
                pivots,
            })
        }
        (Storage::Real(am), Storage::Complex(bm)) => {
            // Real factorization, real and imaginary parts solved as 2L columns.
            let l = bm.ncols();
            let stacked = Mat::from_fn(bm.nrows(), 2 * l, |i, j| {
                if j < l {
                    bm[(i, j)].re
                } else {
                    bm[(i, j - l)].im
                }
            });
            let (x, pivots) = lu_solve(am.as_ref(), stacked.as_ref())?;
            let sol = Mat::from_fn(bm.nrows(), l, |i, j| C64::new(x[(i, j)], x[(i, j + l)]));
            Ok(SolveReport {
                solution: DenseMatrix::complex_unchecked(sol),
                pivots,
            })
        }
        _ => {
            let (x, pivots) = lu_solve(a.complex_mat().as_ref().as_ref(), b.complex_mat().as_ref().as_ref())?;
            Ok(SolveReport {
                solution: DenseMatrix::complex_unchecked(x),
                pivots,
            })
        }
    }
}

/// Truncated singular value decomposition `A ≈ V₀ Σ₀ W₀ᴴ`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// Left singular vectors of the retained part (m × k).
    pub left: DenseMatrix,
    /// Retained singular values, nonincreasing.
    pub singular_values: Vec<f64>,
    /// Right singular vectors of the retained part (n × k).
    pub right: DenseMatrix,
    /// Every computed singular value, retained or not.
    pub all_singular_values: Vec<f64>,
    pub rel_tol: f64,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Singular values divided by the largest one.
    pub fn scaled_singular_values(&self) -> Vec<f64> {
        let s1 = self.all_singular_values.first().copied().unwrap_or(1.0);
        self.all_singular_values.iter().map(|s| s / s1).collect()
    }
}

fn thin_svd<T: ComplexField<Real = f64>>(a: MatRef<'_, T>) -> Result<(Mat<T>, Vec<f64>, Mat<T>)> {
    let svd = Svd::new_thin(a).map_err(|_| Error::NoConvergence {
        unconverged: a.nrows().min(a.ncols()),
    })?;
    let s = svd.S().column_vector();
    let sigma = (0..s.nrows()).map(|i| abs(&s[i])).collect();
    Ok((svd.U().to_owned(), sigma, svd.V().to_owned()))
}

/// Computes the full singular value list of `a`.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    let sv = match &a.storage {
        Storage::Real(m) => m.singular_values(),
        Storage::Complex(m) => m.singular_values(),
    };
    sv.map_err(|_| Error::NoConvergence {
        unconverged: a.nrows().min(a.ncols()),
    })
}

/// Keeps the singular triplets with `σⱼ > rel_tol · σ₁`.
pub fn truncated_svd(a: &DenseMatrix, rel_tol: f64) -> Result<SvdResult> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    let k_of = |sigma: &[f64]| -> Result<usize> {
        let s1 = sigma.first().copied().unwrap_or(0.0);
        if s1 == 0.0 {
            return Err(Error::EmptySpectrum);
        }
        Ok(sigma.iter().take_while(|&&s| s > rel_tol * s1).count())
    };
    match &a.storage {
        Storage::Real(m) => {
            let (u, sigma, v) = thin_svd(m.as_ref())?;
            let k = k_of(&sigma)?;
            Ok(SvdResult {
                left: DenseMatrix::real_unchecked(u.subcols(0, k).to_owned()),
                singular_values: sigma[..k].to_vec(),
                right: DenseMatrix::real_unchecked(v.subcols(0, k).to_owned()),
                all_singular_values: sigma,
                rel_tol,
            })
        }
        Storage::Complex(m) => {
            let (u, sigma, v) = thin_svd(m.as_ref())?;
            let k = k_of(&sigma)?;
            Ok(SvdResult {
                left: DenseMatrix::complex_unchecked(u.subcols(0, k).to_owned()),
                singular_values: sigma[..k].to_vec(),
                right: DenseMatrix::complex_unchecked(v.subcols(0, k).to_owned()),
                all_singular_values: sigma,
                rel_tol,
            })
        }
    }
}

/// Leading `k` singular triplets regardless of magnitude.
pub fn leading_svd(a: &DenseMatrix, k: usize) -> Result<SvdResult> {
    let (left, sigma, right) = match &a.storage {
        Storage::Real(m) => {
            let (u, s, v) = thin_svd(m.as_ref())?;
            let k = k.min(s.len());
            (
                DenseMatrix::real_unchecked(u.subcols(0, k).to_owned()),
                s,
                DenseMatrix::real_unchecked(v.subcols(0, k).to_owned()),
            )
        }
        Storage::Complex(m) => {
            let (u, s, v) = thin_svd(m.as_ref())?;
            let k = k.min(s.len());
            (
                DenseMatrix::complex_unchecked(u.subcols(0, k).to_owned()),
                s,
                DenseMatrix::complex_unchecked(v.subcols(0, k).to_owned()),
            )
        }
    };
    let k = left.ncols();
    Ok(SvdResult {
        left,
        singular_values: sigma[..k].to_vec(),
        right,
        all_singular_values: sigma,
        rel_tol: 0.0,
    })
}

/// Eigenvalues and unit-norm eigenvectors of a dense square matrix.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub values: Vec<C64>,
    /// Columns are eigenvectors, each of unit 2-norm.
    pub vectors: DenseMatrix,
    /// 2-norm condition number of the eigenvector matrix; huge or infinite
    /// for defective matrices.
    pub vector_condition: f64,
}

pub fn dense_eig(a: &DenseMatrix) -> Result<EigDecomposition> {
    dense_eig_capped(a, DEFAULT_EIG_CAP)
}

pub fn dense_eig_capped(a: &DenseMatrix, cap: usize) -> Result<EigDecomposition> {
    if !a.is_square() {
        return Err(Error::dims("square matrix", format!("{:?}", a.shape())));
    }
    let n = a.nrows();
    if n > cap {
        return Err(Error::invalid(format!("dense eigenproblem of size {n} exceeds cap {cap}")));
    }
    if n == 0 {
        return Ok(EigDecomposition {
            values: Vec::new(),
            vectors: DenseMatrix::zeros(0, 0),
            vector_condition: 1.0,
        });
    }
    let eig = match &a.storage {
        Storage::Real(m) => Eigen::new_from_real(m.as_ref()),
        Storage::Complex(m) => Eigen::new(m.as_ref()),
    }
    .map_err(|_| Error::NoConvergence { unconverged: n })?;
    let s = eig.S().column_vector();
    let values: Vec<C64> = (0..n).map(|i| s[i]).collect();
    let u = eig.U();
    let mut vectors = Mat::<C64>::zeros(n, n);
    for j in 0..n {
        let norm = u.col(j).norm_l2();
        let inv = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        for i in 0..n {
            vectors[(i, j)] = u[(i, j)] * inv;
        }
    }
    let sv = vectors.singular_values().map_err(|_| Error::NoConvergence { unconverged: n })?;
    let smax = sv.first().copied().unwrap_or(1.0);
    let smin = sv.last().copied().unwrap_or(1.0);
    let vector_condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    Ok(EigDecomposition {
        values,
        vectors: DenseMatrix::complex_unchecked(vectors),
        vector_condition,
    })
}

/// `max |QᴴQ − I|` entrywise.
pub fn orthonormality_error(q: &DenseMatrix) -> f64 {
    let g = q.adjoint().matmul(q).expect("conformal");
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g.get(i, j) - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

pub(crate) fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_complex(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(r, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .unwrap()
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let x = solve_multi(&DenseMatrix::identity(3), &b).unwrap();
        assert_eq!(x.max_abs_diff(&b), 0.0);
        assert!(x.is_real());
    }

    #[test]
    fn diagonal_solve() {
        let a = DenseMatrix::diag(&[2.0, 4.0]);
        let b = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let x = solve_multi(&a, &b).unwrap();
        assert_eq!(x.get(0, 0), c(0.5, 0.0));
        assert_eq!(x.get(1, 0), c(0.25, 0.0));
    }

    #[test]
    fn random_solve_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut a = random_complex(&mut rng, 10, 10);
        a.add_scaled(c(4.0, 0.0), &DenseMatrix::identity(10)).unwrap();
        let b = random_complex(&mut rng, 10, 3);
        let x = solve_multi(&a, &b).unwrap();
        let r = a.matmul(&x).unwrap().sub(&b).unwrap();
        assert!(r.norm_fro() / b.norm_fro() <= 1e-12);
    }

    #[test]
    fn real_matrix_with_complex_rhs() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let b = DenseMatrix::from_fn(2, 1, |i, _| c(i as f64 + 1.0, 1.0 - i as f64)).unwrap();
        let x = solve_multi(&a, &b).unwrap();
        let r = a.matmul(&x).unwrap().sub(&b).unwrap();
        assert!(r.norm_fro() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(solve_multi(&a, &b), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn nan_rejected_at_construction() {
        let err = DenseMatrix::from_rows(&[vec![1.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn truncation_straddles_threshold() {
        let a = DenseMatrix::diag(&[1.0, 1e-3, 1e-16]);
        let svd = truncated_svd(&a, 1e-14).unwrap();
        assert_eq!(svd.rank(), 2);
        assert_eq!(svd.all_singular_values.len(), 3);
    }

    #[test]
    fn identity_keeps_all_columns() {
        let svd = truncated_svd(&DenseMatrix::identity(4), 0.5).unwrap();
        assert_eq!(svd.rank(), 4);
        // Every left vector is a signed identity column.
        for j in 0..4 {
            let col = svd.left.column(j);
            let ones = col.iter().filter(|x| (x.norm() - 1.0).abs() < 1e-14).count();
            let zeros = col.iter().filter(|x| x.norm() < 1e-14).count();
            assert_eq!((ones, zeros), (1, 3));
        }
    }

    #[test]
    fn rank_two_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_complex(&mut rng, 20, 2);
        let y = random_complex(&mut rng, 6, 2);
        let a = x.matmul(&y.adjoint()).unwrap();
        let svd = truncated_svd(&a, 1e-10).unwrap();
        assert_eq!(svd.rank(), 2);
        assert!(orthonormality_error(&svd.left) <= 1e-12);
    }

    #[test]
    fn zero_matrix_has_empty_spectrum() {
        assert!(matches!(truncated_svd(&DenseMatrix::zeros(3, 2), 1e-14), Err(Error::EmptySpectrum)));
        assert!(truncated_svd(&DenseMatrix::identity(2), 1.5).is_err());
    }

    #[test]
    fn eig_of_diagonal() {
        let e = dense_eig(&DenseMatrix::diag(&[3.0, 7.0])).unwrap();
        let mut vals: Vec<f64> = e.values.iter().map(|v| v.re).collect();
        vals.sort_by(f64::total_cmp);
        assert_eq!(vals, vec![3.0, 7.0]);
        assert!(e.vector_condition < 1.0 + 1e-12);
    }

    #[test]
    fn jordan_block_is_flagged_defective() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let e = dense_eig(&a).unwrap();
        assert!(e.values.iter().all(|v| v.norm() < 1e-12));
        assert!(e.vector_condition > 1e10);
    }

    #[test]
    fn companion_matrix_roots() {
        let roots = [-3.0, -1.5, -0.5, 0.25, 1.0, 2.0, 2.5, 4.0];
        // Monic coefficients of ∏(z − rᵢ), lowest degree first.
        let mut coeffs = vec![1.0];
        for r in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (k, ck) in coeffs.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            coeffs = next;
        }
        let n = roots.len();
        let comp = DenseMatrix::from_real_fn(n, n, |i, j| {
            if j == n - 1 {
                -coeffs[i]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let e = dense_eig(&comp).unwrap();
        let mut got: Vec<f64> = e.values.iter().map(|v| v.re).collect();
        got.sort_by(f64::total_cmp);
        for (g, r) in got.iter().zip(roots) {
            assert!((g - r).abs() <= 1e-10 * r.abs().max(1.0), "{g} vs {r}");
        }
        for (j, lam) in e.values.iter().enumerate() {
            let b = e.vectors.column(j);
            let ab = comp.apply(&b);
            let resid: f64 = ab.iter().zip(&b).map(|(x, y)| (x - lam * y).norm_sqr()).sum::<f64>().sqrt();
            assert!(resid <= 1e-10 * comp.norm_fro());
        }
    }

    #[test]
    fn eig_cap_enforced() {
        assert!(dense_eig_capped(&DenseMatrix::identity(4), 3).is_err());
    }

    #[test]
    fn hstack_and_blocks() {
        let a = DenseMatrix::diag(&[1.0, 2.0]);
        let b = DenseMatrix::from_fn(2, 1, |i, _| c(i as f64, 1.0)).unwrap();
        let h = DenseMatrix::hstack(&[&a, &b]).unwrap();
        assert_eq!(h.shape(), (2, 3));
        assert_eq!(h.get(1, 2), c(1.0, 1.0));
        let g = DenseMatrix::from_blocks(&[vec![&a, &a], vec![&a, &a]]).unwrap();
        assert_eq!(g.shape(), (4, 4));
        assert_eq!(g.get(3, 3), c(2.0, 0.0));
        assert!(g.is_real());
    }

    mod props {
        use super::*;
        use proptest::prelude::{prop_assert, prop_assume, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn solve_residual_small(seed in 0u64..10_000, n in 1usize..12, l in 1usize..4) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut a = random_complex(&mut rng, n, n);
                a.add_scaled(c(2.0 * n as f64, 0.0), &DenseMatrix::identity(n)).unwrap();
                let b = random_complex(&mut rng, n, l);
                let x = solve_multi(&a, &b).unwrap();
                let r = a.matmul(&x).unwrap().sub(&b).unwrap();
                prop_assert!(r.norm_fro() <= 1e-10 * b.norm_fro());
            }

            #[test]
            fn truncated_svd_reconstruction(seed in 0u64..10_000, m in 2usize..10, n in 2usize..8, tol_exp in 1i32..12) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_complex(&mut rng, m, n);
                let tol = 10f64.powi(-tol_exp);
                let svd = truncated_svd(&a, tol).unwrap();
                let s = &svd.all_singular_values;
                prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
                let k = svd.rank();
                let sigma = DenseMatrix::diag(&svd.singular_values);
                let rec = svd.left.matmul(&sigma).unwrap().matmul(&svd.right.adjoint()).unwrap();
                let err = singular_values(&a.sub(&rec).unwrap()).unwrap()[0];
                let next = s.get(k).copied().unwrap_or(0.0);
                prop_assert!(err <= next * (1.0 + 1e-10) + 1e-13 * s[0]);
            }

            #[test]
            fn normal_matrix_eigs_conjugate_under_adjoint(seed in 0u64..10_000, n in 1usize..8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                // Normal matrix Q D Qᴴ from a unitary Q.
                let g = random_complex(&mut rng, n, n);
                let q = truncated_svd(&g, 1e-15).unwrap().left;
                prop_assume!(q.ncols() == n);
                let d = DenseMatrix::from_fn(n, n, |i, j| if i == j { c(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)) } else { c(0.0, 0.0) }).unwrap();
                let a = q.matmul(&d).unwrap().matmul(&q.adjoint()).unwrap();
                let ea = dense_eig(&a).unwrap();
                let eh = dense_eig(&a.adjoint()).unwrap();
                for v in &ea.values {
                    let best = eh.values.iter().map(|w| (w.conj() - v).norm()).fold(f64::INFINITY, f64::min);
                    prop_assert!(best <= 1e-10 * a.norm_fro().max(1.0));
                }
            }
        }
    }
}
