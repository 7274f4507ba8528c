use nalgebra::DMatrix;
use std::f64::consts::SQRT_2;

use crate::linalg::{HermitianMatrix, C64};

/// One factor of the product cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// Real symmetric PSD matrices of the given dimension, stored as a scaled
    /// upper-triangle vector (`svec`).
    Psd(usize),
    Nonneg(usize),
    Free(usize),
}

impl Cone {
    /// Number of scalar variables the block occupies.
    pub fn len(&self) -> usize {
        match *self {
            Cone::Psd(d) => d * (d + 1) / 2,
            Cone::Nonneg(n) | Cone::Free(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Barrier degree.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Psd(d) => d,
            Cone::Nonneg(n) => n,
            Cone::Free(_) => 0,
        }
    }
}

/// Index of entry `(i, j)`, `i <= j`, inside an `svec` of a symmetric matrix.
/// The layout is column-major over the upper triangle.
#[inline]
pub fn svec_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

/// Inverse of [`svec_index`].
pub fn svec_position(k: usize) -> (usize, usize) {
    let mut j = ((((8 * k + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
    while j * (j + 1) / 2 > k {
        j -= 1;
    }
    while (j + 1) * (j + 2) / 2 <= k {
        j += 1;
    }
    (k - j * (j + 1) / 2, j)
}

/// `svec`: off-diagonal entries scaled by sqrt(2) so that `<svec A, svec B> = Tr(AB)`.
pub fn mat_to_svec(m: &DMatrix<f64>, out: &mut [f64]) {
    let d = m.nrows();
    for j in 0..d {
        for i in 0..=j {
            let v = if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)]) * SQRT_2
            };
            out[svec_index(i, j)] = v;
        }
    }
}

pub fn svec_to_mat(v: &[f64], d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        for i in 0..=j {
            let x = v[svec_index(i, j)];
            if i == j {
                m[(i, i)] = x;
            } else {
                let y = x / SQRT_2;
                m[(i, j)] = y;
                m[(j, i)] = y;
            }
        }
    }
    m
}

/// Sparse linear functional over the scalarized variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRow {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseRow {
    /// Sorts, merges duplicate indices and drops exact zeros.
    pub fn from_terms(mut terms: Vec<(usize, f64)>) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut idx: Vec<usize> = Vec::with_capacity(terms.len());
        let mut val: Vec<f64> = Vec::with_capacity(terms.len());
        for (i, v) in terms {
            if idx.last() == Some(&i) {
                *val.last_mut().unwrap() += v;
            } else {
                idx.push(i);
                val.push(v);
            }
        }
        let (idx, val) = idx.into_iter().zip(val).filter(|(_, v)| *v != 0.0).unzip();
        Self { idx, val }
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.idx
            .iter()
            .zip(&self.val)
            .map(|(&i, &v)| v * x[i])
            .sum()
    }

    pub fn axpy_into(&self, alpha: f64, out: &mut [f64]) {
        for (&i, &v) in self.idx.iter().zip(&self.val) {
            out[i] += alpha * v;
        }
    }
}

/// Standard-form conic program:
///
/// ```text
/// minimize  c'x   subject to  A x = b,  x in K_1 x ... x K_p
/// ```
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProblem {
    pub cones: Vec<Cone>,
    pub c: Vec<f64>,
    pub rows: Vec<SparseRow>,
    pub b: Vec<f64>,
}

impl ConicProblem {
    pub fn num_vars(&self) -> usize {
        self.cones.iter().map(Cone::len).sum()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.cones.len());
        let mut acc = 0;
        for cone in &self.cones {
            off.push(acc);
            acc += cone.len();
        }
        off
    }

    pub fn degree(&self) -> usize {
        self.cones.iter().map(Cone::degree).sum()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseRow::nnz).sum()
    }
}

/// Handle to a real PSD block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsdBlock {
    pub offset: usize,
    pub dim: usize,
}

impl PsdBlock {
    /// Scalarized term for `coef * Y[i, j]`.
    pub fn term(&self, i: usize, j: usize, coef: f64) -> (usize, f64) {
        let k = self.offset + svec_index(i, j);
        if i == j {
            (k, coef)
        } else {
            (k, coef / SQRT_2)
        }
    }

    pub fn extract(&self, x: &[f64]) -> DMatrix<f64> {
        svec_to_mat(
            &x[self.offset..self.offset + self.dim * (self.dim + 1) / 2],
            self.dim,
        )
    }
}

/// Hermitian PSD block of dimension `dim`, carried by a real PSD block of
/// dimension `2 dim`. For the real variable `Y = [[Y11, Y12], [Y21, Y22]]` the
/// Hermitian matrix is `Z = (Y11 + Y22)/2 + j (Y21 - Y12)/2`; `Y` PSD implies
/// `Z` PSD, and every PSD `Z` arises from its own real embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermitianBlock {
    pub real: PsdBlock,
    pub dim: usize,
}

impl HermitianBlock {
    /// Adds `coef * Re Z[p, q]`.
    pub fn add_re(&self, e: &mut LinExpr, p: usize, q: usize, coef: f64) {
        let m = self.dim;
        e.push(self.real.term(p, q, 0.5 * coef));
        e.push(self.real.term(m + p, m + q, 0.5 * coef));
    }

    /// Adds `coef * Im Z[p, q]`.
    pub fn add_im(&self, e: &mut LinExpr, p: usize, q: usize, coef: f64) {
        if p == q {
            return;
        }
        let m = self.dim;
        e.push(self.real.term(m + p, q, 0.5 * coef));
        e.push(self.real.term(p, m + q, -0.5 * coef));
    }

    /// Adds `z * Z[p, q]` to the complex functional whose real and imaginary
    /// parts are `re` and `im`.
    pub fn add_complex(&self, re: &mut LinExpr, im: &mut LinExpr, p: usize, q: usize, z: C64) {
        if z.re != 0.0 {
            self.add_re(re, p, q, z.re);
            self.add_im(im, p, q, z.re);
        }
        if z.im != 0.0 {
            self.add_im(re, p, q, -z.im);
            self.add_re(im, p, q, z.im);
        }
    }

    pub fn extract(&self, x: &[f64]) -> HermitianMatrix {
        let y = self.real.extract(x);
        let m = self.dim;
        HermitianMatrix::from_upper(m, |p, q| {
            C64::new(
                0.5 * (y[(p, q)] + y[(m + p, m + q)]),
                0.5 * (y[(m + p, q)] - y[(p, m + q)]),
            )
        })
    }
}

/// Handle to a run of scalar variables (nonnegative or free).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarBlock {
    pub offset: usize,
    pub len: usize,
}

impl ScalarBlock {
    pub fn index(&self, k: usize) -> usize {
        debug_assert!(k < self.len);
        self.offset + k
    }
}

/// Linear expression under construction; duplicates merge at build time.
pub type LinExpr = Vec<(usize, f64)>;

/// Incremental construction of a [`ConicProblem`].
#[derive(Debug, Default)]
pub struct ProblemBuilder {
    cones: Vec<Cone>,
    n: usize,
    objective: LinExpr,
    rows: Vec<(LinExpr, f64)>,
}

impl ProblemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push_cone(&mut self, cone: Cone) -> usize {
        let off = self.n;
        self.n += cone.len();
        self.cones.push(cone);
        off
    }

    pub fn add_psd(&mut self, dim: usize) -> PsdBlock {
        PsdBlock {
            offset: self.push_cone(Cone::Psd(dim)),
            dim,
        }
    }

    pub fn add_hermitian(&mut self, dim: usize) -> HermitianBlock {
        HermitianBlock {
            real: self.add_psd(2 * dim),
            dim,
        }
    }

    pub fn add_nonneg(&mut self, len: usize) -> ScalarBlock {
        ScalarBlock {
            offset: self.push_cone(Cone::Nonneg(len)),
            len,
        }
    }

    pub fn add_free(&mut self, len: usize) -> ScalarBlock {
        ScalarBlock {
            offset: self.push_cone(Cone::Free(len)),
            len,
        }
    }

    pub fn minimize(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    /// Adds the equality `expr = rhs` and returns its row index.
    pub fn add_row(&mut self, expr: LinExpr, rhs: f64) -> usize {
        self.rows.push((expr, rhs));
        self.rows.len() - 1
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn build(self) -> ConicProblem {
        let mut c = vec![0.0; self.n];
        for (i, v) in self.objective {
            c[i] += v;
        }
        let (rows, b) = self
            .rows
            .into_iter()
            .map(|(e, rhs)| (SparseRow::from_terms(e), rhs))
            .unzip();
        ConicProblem {
            cones: self.cones,
            c,
            rows,
            b,
        }
    }
}
