//! Dense complex vectors and Hermitian matrices.
//!
//! Everything here is a small, immutable value type. Hermitian matrices keep
//! the upper triangle as the source of truth; the lower triangle is always
//! rebuilt from it, so stored entries are exactly conjugate-symmetric.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance used when checking that a unimodular sequence really has unit modulus.
pub const UNIMODULAR_TOL: f64 = 1e-9;

/// Relative off-diagonal Frobenius threshold for the Jacobi sweeps.
const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 60;

/// A finite complex sequence `x_0 .. x_{N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSequence {
    entries: Vec<C64>,
}

impl ComplexSequence {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain(
                "sequence must have at least one entry".into(),
            ));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Domain("sequence entries must be finite".into()));
        }
        Ok(Self { entries })
    }

    /// Builds a sequence and checks that every entry has unit modulus.
    pub fn unimodular(entries: Vec<C64>) -> Result<Self> {
        let seq = Self::new(entries)?;
        if !seq.is_unimodular(UNIMODULAR_TOL) {
            return Err(Error::Domain(format!(
                "sequence is not unimodular (max deviation {:.3e})",
                seq.max_modulus_deviation()
            )));
        }
        Ok(seq)
    }

    /// `x_n = exp(j * phase_n)`.
    pub fn from_phases(phases: &[f64]) -> Result<Self> {
        Self::new(phases.iter().map(|&p| C64::from_polar(1.0, p)).collect())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.entries
    }

    pub fn max_modulus_deviation(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_unimodular(&self, tol: f64) -> bool {
        self.max_modulus_deviation() <= tol
    }

    /// Maps every entry onto the unit circle, `x_n / |x_n|`. Zero entries become 1.
    pub fn project_unimodular(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|z| {
                let r = z.norm();
                if r > 0.0 {
                    z / r
                } else {
                    C64::new(1.0, 0.0)
                }
            })
            .collect();
        Self { entries }
    }

    pub fn energy(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// General dense complex matrix, row-major. Used for eigenvector bases and
/// triangular factors.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Hermitian matrix with exactly conjugate-symmetric storage.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    /// Builds the matrix from its upper triangle: `upper(i, j)` is queried for `i <= j`.
    /// Diagonal imaginary parts are dropped.
    pub fn from_upper(dim: usize, mut upper: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(upper(i, i).re, 0.0);
            for j in i + 1..dim {
                let z = upper(i, j);
                data[i * dim + j] = z;
                data[j * dim + i] = z.conj();
            }
        }
        Self { dim, data }
    }

    /// Validates a full row-major matrix and symmetrizes it from the upper triangle.
    /// Fails with `InvalidMatrix` when `|a_ij - conj(a_ji)|` exceeds
    /// `tol * (max |a| + 1)` anywhere.
    pub fn from_full(dim: usize, data: &[C64], tol: f64) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max) + 1.0;
        for i in 0..dim {
            for j in i..dim {
                let dev = (data[i * dim + j] - data[j * dim + i].conj()).norm();
                if dev > tol * scale {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i},{j}) violates conjugate symmetry by {dev:.3e}"
                    )));
                }
            }
        }
        Ok(Self::from_upper(dim, |i, j| data[i * dim + j]))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("rows must form a square matrix".into()));
        }
        let flat: Vec<C64> = rows.iter().flatten().copied().collect();
        Self::from_full(dim, &flat, 1e-12)
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| C64::new(v, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_upper(dim, |i, j| {
            if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_upper(values.len(), |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `v v^H`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_upper(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `v^H A v`, real for Hermitian `A`.
    pub fn quadratic_form(&self, v: &[C64]) -> f64 {
        let av = self.mul_vec(v);
        v.iter().zip(&av).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * alpha).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        Ok(Self::from_upper(self.dim, |i, j| {
            self.get(i, j) + other.get(i, j)
        }))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        Ok(Self::from_upper(self.dim, |i, j| {
            self.get(i, j) - other.get(i, j)
        }))
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        m.data.copy_from_slice(&self.data);
        m
    }

    /// Entry-wise sum along the `offset`-th diagonal, `sum_i A[i + offset, i]`.
    /// Equals `Tr(Theta^{(offset)} A)`.
    pub fn diagonal_sum(&self, offset: isize) -> C64 {
        let n = self.dim as isize;
        if offset.abs() >= n {
            return C64::new(0.0, 0.0);
        }
        let start = 0.max(-offset);
        let end = n.min(n - offset);
        (start..end)
            .map(|i| self.get((i + offset) as usize, i as usize))
            .sum()
    }

    /// Smallest eigenvalue; convenience over [`eig_hermitian`].
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eig_hermitian(self)?.values.last().copied().unwrap_or(0.0))
    }

    /// PSD test with the tolerance `-tol * (|trace| + 1)` on the smallest eigenvalue.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        let lmin = self.min_eigenvalue()?;
        Ok(lmin >= -tol * (self.trace().abs() + 1.0))
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!(
            "dimension {a} does not match {b}"
        )));
    }
    Ok(())
}

/// Elementary Toeplitz matrix: ones on the `offset`-th superdiagonal (negative
/// offsets select subdiagonals), the zero matrix once `|offset| >= dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementaryToeplitz {
    pub dim: usize,
    pub offset: isize,
}

impl ElementaryToeplitz {
    pub fn new(dim: usize, offset: isize) -> Self {
        Self { dim, offset }
    }

    pub fn transpose(&self) -> Self {
        Self {
            dim: self.dim,
            offset: -self.offset,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.offset.unsigned_abs() >= self.dim
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.entry(i, j);
            }
        }
        m
    }
}

/// Anything that can stand on the left of `Tr(A B)` with a Hermitian `B`.
pub trait MatrixOperand {
    fn dim(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> C64;

    /// `Tr(self * b)`; dimensions are assumed equal.
    fn trace_with(&self, b: &HermitianMatrix) -> C64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.entry(i, j) * b.get(j, i);
            }
        }
        acc
    }
}

impl MatrixOperand for HermitianMatrix {
    fn dim(&self) -> usize {
        self.dim
    }
    fn entry(&self, i: usize, j: usize) -> C64 {
        self.get(i, j)
    }
}

impl MatrixOperand for ElementaryToeplitz {
    fn dim(&self) -> usize {
        self.dim
    }
    fn entry(&self, i: usize, j: usize) -> C64 {
        if j as isize - i as isize == self.offset {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }
    fn trace_with(&self, b: &HermitianMatrix) -> C64 {
        b.diagonal_sum(self.offset)
    }
}

/// `Tr(A B)`.
pub fn trace_inner<A: MatrixOperand>(a: &A, b: &HermitianMatrix) -> Result<C64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.trace_with(b))
}

/// Eigenvalues (descending) and the unitary matrix whose columns are the
/// matching eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    pub fn principal_vector(&self) -> Vec<C64> {
        self.vectors.column(0)
    }

    /// `U diag(values) U^H`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let n = self.values.len();
        HermitianMatrix::from_upper(n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)].conj())
                .sum()
        })
    }
}

/// Cyclic complex Jacobi eigendecomposition.
///
/// Each rotation first removes the phase of the pivot entry with a diagonal
/// unitary, then applies a real Givens rotation. Sweeps stop once the
/// off-diagonal Frobenius norm drops below `1e-13 * ||A||_F`.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<HermitianEigen> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let mut m = a.data.clone();
    let mut v = CMatrix::identity(n);
    let norm = a.frobenius_norm();
    let target = JACOBI_OFF_TOL * norm;

    let off = |m: &[C64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&m) > target && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                let mag = apq.norm();
                if mag == 0.0 || mag < 1e-300 {
                    continue;
                }
                // Phase removal: column q times conj(e), row q times e.
                let e = apq / mag;
                let ec = e.conj();
                for k in 0..n {
                    m[k * n + q] *= ec;
                }
                for k in 0..n {
                    m[q * n + k] *= e;
                }
                for k in 0..n {
                    v[(k, q)] *= ec;
                }

                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let kp = m[k * n + p];
                    let kq = m[k * n + q];
                    m[k * n + p] = kp * c - kq * s;
                    m[k * n + q] = kp * s + kq * c;
                }
                for k in 0..n {
                    let pk = m[p * n + k];
                    let qk = m[q * n + k];
                    m[p * n + k] = pk * c - qk * s;
                    m[q * n + k] = pk * s + qk * c;
                }
                for k in 0..n {
                    let kp = v[(k, p)];
                    let kq = v[(k, q)];
                    v[(k, p)] = kp * c - kq * s;
                    v[(k, q)] = kp * s + kq * c;
                }
                m[p * n + q] = C64::new(0.0, 0.0);
                m[q * n + p] = C64::new(0.0, 0.0);
                m[p * n + p] = C64::new(m[p * n + p].re, 0.0);
                m[q * n + q] = C64::new(m[q * n + q].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));

    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        // Phase convention: largest-magnitude entry made real nonnegative.
        let mut best = 0;
        let mut best_mag = -1.0;
        for i in 0..n {
            let mag = v[(i, src)].norm();
            if mag > best_mag * (1.0 + 1e-12) {
                best = i;
                best_mag = mag;
            }
        }
        let pivot = v[(best, src)];
        let phase = if pivot.norm() > 0.0 {
            pivot.conj() / pivot.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            vectors[(i, col)] = v[(i, src)] * phase;
        }
        vectors[(best, col)] = C64::new(vectors[(best, col)].norm(), 0.0);
    }
    Ok(HermitianEigen { values, vectors })
}

/// `[[Re A, -Im A], [Im A, Re A]]`.
pub fn real_embed(a: &HermitianMatrix) -> DMatrix<f64> {
    let n = a.dim();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a.get(i, j);
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Lower-triangular `L` with `A + shift I = L L^H`, or `NotPsd` naming the
/// first non-positive pivot.
pub fn cholesky_psd(a: &HermitianMatrix, shift: f64) -> Result<CMatrix> {
    if !(shift >= 0.0) {
        return Err(Error::Domain(format!(
            "shift must be nonnegative, got {shift}"
        )));
    }
    let n = a.dim();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j).re + shift;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::NotPsd { pivot: j });
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}
