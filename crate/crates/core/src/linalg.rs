//! Dense complex matrices and the handful of spectral routines the rest of
//! the crate is built on.
//!
//! Storage is row-major. Tensor products use the convention that the left
//! factor carries the most significant index, so `(a ⊗ b)[(i,k),(j,l)] =
//! a[i,j] * b[k,l]` with the combined index `i * dim_b + k`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

pub use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest row or column count a Kronecker product may produce by default.
pub const DEFAULT_SIZE_LIMIT: usize = 4096;

/// Entrywise deviation from Hermiticity that is silently symmetrized away.
pub const HERMITIAN_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::shape("rows of unequal length"));
        }
        let data = rows.iter().flatten().copied().collect();
        Ok(ComplexMatrix {
            rows: rows.len(),
            cols: ncols,
            data,
        })
    }

    /// Builds a matrix from row-major real data.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| c64(x, 0.0)).collect())
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = c64(v, 0.0);
        }
        m
    }

    /// `|u><v|`
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// `|i><j|` in dimension `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = c64(1.0, 0.0);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// Real trace inner product `Re Tr[self† other]`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// Largest entrywise modulus of `self - self†`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Returns the Hermitian part if the deviation is within
    /// [`HERMITIAN_TOL`] relative to the matrix scale, otherwise
    /// [`Error::NotHermitian`].
    pub fn symmetrized(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::shape(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(self.hermitian_part())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self * x * self†`
    pub fn conjugate(&self, x: &Self) -> Self {
        self.matmul(x).matmul(&self.adjoint())
    }

    /// Copies the `rows x cols` submatrix starting at `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Real parts, row-major. Useful when a matrix is known to be real.
    pub fn real_parts(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

macro_rules! elementwise {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign:ident, $op:tt) => {
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
                ComplexMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                (&self).$method(rhs)
            }
        }
        impl $assign_trait<&ComplexMatrix> for ComplexMatrix {
            fn $assign(&mut self, rhs: &ComplexMatrix) {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
                for (a, b) in self.data.iter_mut().zip(&rhs.data) {
                    *a = *a $op b;
                }
            }
        }
    };
}

elementwise!(Add, add, AddAssign, add_assign, +);
elementwise!(Sub, sub, SubAssign, sub_assign, -);

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        self.matmul(&rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

/// Kronecker product with the default size limit.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_with_limit(a, b, DEFAULT_SIZE_LIMIT)
}

pub fn kron_with_limit(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    limit: usize,
) -> Result<ComplexMatrix> {
    let rows = a.rows.saturating_mul(b.rows);
    let cols = a.cols.saturating_mul(b.cols);
    let requested = rows.max(cols);
    if requested > limit {
        return Err(Error::SizeLimit { requested, limit });
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let x = a[(i, j)];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = x * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Which factor of a bipartite space a partial trace removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace over one factor of a square matrix on `A ⊗ B`.
pub fn partial_trace(
    m: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
    traced: Subsystem,
) -> Result<ComplexMatrix> {
    let n = dim_a * dim_b;
    if m.rows != n || m.cols != n {
        return Err(Error::shape(format!(
            "partial trace over {dim_a}x{dim_b} needs a {n}x{n} matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    Ok(match traced {
        Subsystem::A => ComplexMatrix::from_fn(dim_b, dim_b, |k, l| {
            (0..dim_a).map(|i| m[(i * dim_b + k, i * dim_b + l)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()
        }),
    })
}

/// Partial trace over an arbitrary set of factors of a square matrix on
/// `dims[0] ⊗ dims[1] ⊗ ...`. `traced[k]` marks factor `k` for removal.
pub fn trace_out(m: &ComplexMatrix, dims: &[usize], traced: &[bool]) -> Result<ComplexMatrix> {
    if dims.len() != traced.len() {
        return Err(Error::shape("dims and traced mask differ in length"));
    }
    let n: usize = dims.iter().product();
    if m.rows != n || m.cols != n {
        return Err(Error::shape(format!(
            "matrix is {}x{}, tensor dims multiply to {n}",
            m.rows, m.cols
        )));
    }
    let split = TensorSplit::new(dims, traced);
    let mut out = ComplexMatrix::zeros(split.kept_dim, split.kept_dim);
    for i in 0..n {
        let (ki, ti) = split.split(i);
        for j in 0..n {
            let (kj, tj) = split.split(j);
            if ti == tj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Tensors `m` with identities: `m` acts on the factors of `dims` flagged
/// in `present`, in order, and the identity acts on the others.
pub fn embed(m: &ComplexMatrix, dims: &[usize], present: &[bool]) -> Result<ComplexMatrix> {
    if dims.len() != present.len() {
        return Err(Error::shape("dims and presence mask differ in length"));
    }
    let absent: Vec<bool> = present.iter().map(|p| !p).collect();
    let split = TensorSplit::new(dims, &absent);
    if m.rows != split.kept_dim || m.cols != split.kept_dim {
        return Err(Error::shape(format!(
            "matrix is {}x{}, present factors multiply to {}",
            m.rows, m.cols, split.kept_dim
        )));
    }
    let n: usize = dims.iter().product();
    if n > DEFAULT_SIZE_LIMIT {
        return Err(Error::SizeLimit {
            requested: n,
            limit: DEFAULT_SIZE_LIMIT,
        });
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let (ki, ti) = split.split(i);
        for j in 0..n {
            let (kj, tj) = split.split(j);
            if ti == tj {
                out[(i, j)] = m[(ki, kj)];
            }
        }
    }
    Ok(out)
}

/// Index bookkeeping for splitting a tensor-product index into the parts on
/// kept and marked factors.
#[derive(Debug, Clone)]
pub(crate) struct TensorSplit {
    dims: Vec<usize>,
    marked: Vec<bool>,
    pub kept_dim: usize,
    pub marked_dim: usize,
}

impl TensorSplit {
    pub fn new(dims: &[usize], marked: &[bool]) -> Self {
        let kept_dim = dims
            .iter()
            .zip(marked)
            .filter(|(_, &t)| !t)
            .map(|(d, _)| d)
            .product();
        let marked_dim = dims
            .iter()
            .zip(marked)
            .filter(|(_, &t)| t)
            .map(|(d, _)| d)
            .product();
        TensorSplit {
            dims: dims.to_vec(),
            marked: marked.to_vec(),
            kept_dim,
            marked_dim,
        }
    }

    /// Returns `(kept_index, marked_index)` of a full index.
    pub fn split(&self, mut idx: usize) -> (usize, usize) {
        let (mut kept, mut mark) = (0, 0);
        let (mut kscale, mut mscale) = (1, 1);
        for k in (0..self.dims.len()).rev() {
            let d = self.dims[k];
            let digit = idx % d;
            idx /= d;
            if self.marked[k] {
                mark += digit * mscale;
                mscale *= d;
            } else {
                kept += digit * kscale;
                kscale *= d;
            }
        }
        (kept, mark)
    }

    /// Inverse of [`TensorSplit::split`].
    pub fn join(&self, mut kept: usize, mut mark: usize) -> usize {
        let mut idx = 0;
        let mut scale = 1;
        for k in (0..self.dims.len()).rev() {
            let d = self.dims[k];
            let digit = if self.marked[k] {
                let x = mark % d;
                mark /= d;
                x
            } else {
                let x = kept % d;
                kept /= d;
                x
            };
            idx += digit * scale;
            scale *= d;
        }
        idx
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and a unitary whose columns are
/// the matching eigenvectors.
pub fn hermitian_eigs(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let h = h.symmetrized()?;
    let n = h.rows;
    let mut a = h.data.clone();
    let mut v = ComplexMatrix::identity(n).data;
    jacobi(&mut a, Some(&mut v), n);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].re.total_cmp(&a[i * n + i].re));
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    Ok((values, vectors))
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn eigvalsh(h: &ComplexMatrix) -> Result<Vec<f64>> {
    let h = h.symmetrized()?;
    let n = h.rows;
    let mut a = h.data;
    jacobi(&mut a, None, n);
    let mut values: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

fn jacobi(a: &mut [Complex64], mut v: Option<&mut Vec<Complex64>>, n: usize) {
    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if scale == 0.0 {
        return;
    }
    for sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if off <= 1e-32 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = a[p * n + q];
                let babs = b.norm();
                if babs == 0.0 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                if sweep > 3 && babs <= f64::EPSILON * 1e-2 * (app.abs() + aqq.abs()) {
                    a[p * n + q] = c64(0.0, 0.0);
                    a[q * n + p] = c64(0.0, 0.0);
                    continue;
                }
                let theta = (aqq - app) / (2.0 * babs);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let e = b / babs;
                let ebar = e.conj();
                // A <- A U with U = [[c, s], [-s ebar, c ebar]] on (p, q)
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * ebar * s;
                    a[k * n + q] = akp * s + akq * ebar * c;
                }
                // A <- U† A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * e * s;
                    a[q * n + k] = apk * s + aqk * e * c;
                }
                a[p * n + q] = c64(0.0, 0.0);
                a[q * n + p] = c64(0.0, 0.0);
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * c - vkq * ebar * s;
                        v[k * n + q] = vkp * s + vkq * ebar * c;
                    }
                }
            }
        }
    }
}

/// Singular values in descending order.
///
/// Hermitian inputs use the moduli of their eigenvalues; other inputs go
/// through a bidiagonal SVD, which keeps zero singular values at roundoff
/// level rather than at the square root of it.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if m.is_square() && m.hermitian_deviation() <= 1e-14 * m.max_abs().max(1e-300) {
        let mut s: Vec<f64> = eigvalsh(m)?.into_iter().map(f64::abs).collect();
        s.sort_by(|x, y| y.total_cmp(x));
        return Ok(s);
    }
    let dense = nalgebra::DMatrix::from_row_slice(m.rows, m.cols, &m.data);
    let mut s: Vec<f64> = dense.singular_values().iter().copied().collect();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("matrix has non-finite singular values"));
    }
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Result of a positive-semidefiniteness test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eig: f64,
}

pub fn psd_check(h: &ComplexMatrix, tol: f64) -> Result<PsdCheck> {
    let min_eig = eigvalsh(h)?.last().copied().unwrap_or(0.0);
    Ok(PsdCheck {
        is_psd: min_eig >= -tol,
        min_eig,
    })
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(h: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let (vals, vecs) = hermitian_eigs(h)?;
    let n = vals.len();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| vecs[(i, k)] * vecs[(j, k)].conj() * f(vals[k]))
            .sum()
    }))
}

/// Square root of a positive-semidefinite matrix; negative eigenvalues are
/// clamped to zero.
pub fn sqrt_psd(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    hermitian_map(h, |x| x.max(0.0).sqrt())
}

/// Inverse square root of a positive-definite matrix.
pub fn inv_sqrt_pd(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let vals = eigvalsh(h)?;
    let min = vals.last().copied().unwrap_or(0.0);
    if min <= 0.0 {
        return Err(Error::domain(format!(
            "inverse square root needs a positive definite matrix (min eigenvalue {min:.3e})"
        )));
    }
    hermitian_map(h, |x| 1.0 / x.sqrt())
}

/// Pauli and identity matrices on a qubit.
pub mod pauli {
    use super::{c64, ComplexMatrix};

    pub fn id() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_vec(
            2,
            2,
            vec![c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)],
        )
        .unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pauli_y_spectrum() {
        let (vals, vecs) = hermitian_eigs(&pauli::y()).unwrap();
        assert!(close(vals[0], 1.0, 1e-14) && close(vals[1], -1.0, 1e-14));
        let recon = vecs
            .matmul(&ComplexMatrix::diag_real(&vals))
            .matmul(&vecs.adjoint());
        assert!(recon.max_abs_diff(&pauli::y()) < 1e-14);
    }

    #[test]
    fn kron_of_paulis() {
        let zx = kron(&pauli::z(), &pauli::x()).unwrap();
        let expected = ComplexMatrix::from_real(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, -1.0, //
                0.0, 0.0, -1.0, 0.0,
            ],
        )
        .unwrap();
        assert_eq!(zx, expected);
    }

    #[test]
    fn kron_respects_limit() {
        let a = ComplexMatrix::identity(70);
        assert_eq!(
            kron(&a, &a),
            Err(Error::SizeLimit {
                requested: 4900,
                limit: 4096
            })
        );
    }

    #[test]
    fn maximally_entangled_marginal() {
        let phi = [c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)];
        let p = ComplexMatrix::outer(&phi, &phi);
        let ra = partial_trace(&p, 2, 2, Subsystem::A).unwrap();
        let rb = partial_trace(&p, 2, 2, Subsystem::B).unwrap();
        assert!(ra.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        assert!(rb.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn partial_trace_shape_error() {
        let m = ComplexMatrix::identity(5);
        assert!(matches!(
            partial_trace(&m, 2, 2, Subsystem::A),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn norms_of_paulis() {
        assert!(close(trace_norm(&pauli::z()).unwrap(), 2.0, 1e-14));
        assert!(close(operator_norm(&pauli::z()).unwrap(), 1.0, 1e-14));
        let nonherm = ComplexMatrix::from_real(2, 2, &[0.0, 2.0, 0.0, 0.0]).unwrap();
        assert!(close(trace_norm(&nonherm).unwrap(), 2.0, 1e-12));
        assert!(close(operator_norm(&nonherm).unwrap(), 2.0, 1e-12));
    }

    #[test]
    fn psd_of_projector_mix() {
        let m = ComplexMatrix::diag_real(&[0.5, 0.0]);
        let check = psd_check(&m, 1e-12).unwrap();
        assert!(check.is_psd);
        assert!(close(check.min_eig, 0.0, 1e-15));
        let bad = ComplexMatrix::diag_real(&[0.5, -1e-3]);
        assert!(!psd_check(&bad, 1e-9).unwrap().is_psd);
    }

    #[test]
    fn not_hermitian_rejected() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(eigvalsh(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn trace_out_middle_factor() {
        let a = ComplexMatrix::diag_real(&[1.0, 2.0]);
        let b = ComplexMatrix::diag_real(&[3.0, 5.0, 7.0]);
        let c = pauli::x();
        let abc = kron(&kron(&a, &b).unwrap(), &c).unwrap();
        let ac = trace_out(&abc, &[2, 3, 2], &[false, true, false]).unwrap();
        let expected = kron(&a, &c).unwrap().scale(15.0);
        assert!(ac.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn embed_middle_identity() {
        let a = pauli::x();
        let c = ComplexMatrix::diag_real(&[1.0, 2.0]);
        let ac = kron(&a, &c).unwrap();
        let full = embed(&ac, &[2, 3, 2], &[true, false, true]).unwrap();
        let expected = kron(&kron(&a, &ComplexMatrix::identity(3)).unwrap(), &c).unwrap();
        assert!(full.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn tensor_split_roundtrip() {
        let s = TensorSplit::new(&[2, 3, 4], &[false, true, false]);
        for idx in 0..24 {
            let (k, m) = s.split(idx);
            assert_eq!(s.join(k, m), idx);
        }
        assert_eq!(s.kept_dim, 8);
        assert_eq!(s.marked_dim, 3);
    }
}
