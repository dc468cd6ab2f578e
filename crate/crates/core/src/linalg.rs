//! Dense complex matrices, biorthogonal eigensystems and the matrix exponential.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default tolerance for eigensystem residual checks.
pub const EIG_TOL: f64 = 1e-9;

/// Eigenvalues closer than this are treated as one degenerate group.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(8) {
                let z = self[(r, c)];
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_err(rows * cols, data.len()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix data"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Result<Self> {
        let rows = cols.first().map_or(0, Vec::len);
        if let Some(bad) = cols.iter().find(|c| c.len() != rows) {
            return Err(dim_err(rows, bad.len()));
        }
        Ok(Self::from_fn(rows, cols.len(), |r, c| cols[c][r]))
    }

    /// Real-valued rows, convenient for small literal matrices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * m);
        for r in rows {
            if r.len() != m {
                return Err(dim_err(m, r.len()));
            }
            data.extend(r.iter().map(|&x| C64::new(x, 0.0)));
        }
        Self::new(n, m, data)
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[C64]) {
        for (r, &z) in v.iter().enumerate() {
            self[(r, c)] = z;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|r| (r..self.cols).all(|c| (self[(r, c)] - self[(c, r)].conj()).norm() <= tol))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(dim_err(
                format!("{} rows", self.cols),
                format!("{} rows", rhs.rows),
            ));
        }
        Ok(from_faer(&(to_faer(self) * to_faer(rhs))))
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(dim_err(self.cols, v.len()));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (p, q) = (rhs.rows, rhs.cols);
        let mut out = Self::zeros(self.rows * p, self.cols * q);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..p {
                    for l in 0..q {
                        out[(i * p + k, j * q + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Rows and columns restricted to `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |r, c| self[(idx[r], idx[c])])
    }

    /// Inverse by partial-pivot LU.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(dim_err("square", format!("{}x{}", self.rows, self.cols)));
        }
        let inv = from_faer(&to_faer(self).partial_piv_lu().inverse());
        if !inv.is_finite() {
            return Err(Error::NonFinite("inverse"));
        }
        Ok(inv)
    }

    /// Unsorted eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        if !self.is_square() {
            return Err(dim_err("square", format!("{}x{}", self.rows, self.cols)));
        }
        match self.rows {
            0 => Ok(Vec::new()),
            1 => Ok(vec![self.data[0]]),
            _ => to_faer(self)
                .eigenvalues()
                .map_err(|_| Error::NoConvergence {
                    iterations: 0,
                    residual: f64::NAN,
                }),
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("inner dimensions must agree")
    }
}

pub(crate) fn to_faer(m: &ComplexMatrix) -> Mat<C64> {
    Mat::from_fn(m.rows, m.cols, |r, c| m[(r, c)])
}

pub(crate) fn from_faer(m: &Mat<C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Total order on complex numbers: real part, then imaginary part.
pub fn cmp_complex(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn sort_complex(v: &mut [C64]) {
    v.sort_by(cmp_complex);
}

/// Right and left eigenvectors satisfying `⟨l_m|r_n⟩ = δ_mn` and `Σ|r_n⟩⟨l_n| = I`.
///
/// Right vectors are unit norm with their largest-modulus entry real positive.
#[derive(Clone, Debug)]
pub struct BiorthoEigensystem {
    eigenvalues: Vec<C64>,
    right: ComplexMatrix,
    left: ComplexMatrix,
}

impl BiorthoEigensystem {
    /// Assembles an eigensystem from its parts without any checks.
    pub fn from_parts(eigenvalues: Vec<C64>, right: ComplexMatrix, left: ComplexMatrix) -> Self {
        Self {
            eigenvalues,
            right,
            left,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// Right eigenvectors as columns.
    pub fn right(&self) -> &ComplexMatrix {
        &self.right
    }

    /// Left eigenvectors as columns.
    pub fn left(&self) -> &ComplexMatrix {
        &self.left
    }

    pub fn right_vector(&self, n: usize) -> Vec<C64> {
        self.right.column(n)
    }

    pub fn left_vector(&self, n: usize) -> Vec<C64> {
        self.left.column(n)
    }

    /// `max |⟨l_m|r_n⟩ - δ_mn|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let g = &self.left.adjoint() * &self.right;
        g.max_abs_diff(&ComplexMatrix::identity(self.dim()))
    }

    /// Product eigensystem of `M ⊗ I - I ⊗ conj(M)` built from this one.
    ///
    /// Entry `m * dim + n` holds eigenvalue `E_m - conj(E_n)`, right vector
    /// `r_m ⊗ conj(r_n)` and left vector `l_m ⊗ conj(l_n)`.
    pub fn composite(&self) -> BiorthoEigensystem {
        let d = self.dim();
        let eigenvalues = (0..d * d)
            .map(|k| self.eigenvalues[k / d] - self.eigenvalues[k % d].conj())
            .collect();
        BiorthoEigensystem {
            eigenvalues,
            right: self.right.kron(&self.right.conj()),
            left: self.left.kron(&self.left.conj()),
        }
    }
}

/// Biorthogonal eigendecomposition, sorted by real then imaginary part.
///
/// Hermitian input yields orthonormal vectors with `L = R`. Degenerate
/// groups get Gram-orthonormalized right vectors. Fails with
/// `DefectiveMatrix` when any eigen-equation residual, scaled by
/// `max(1, ‖M‖_max)`, exceeds `tol`.
pub fn eig_biortho(m: &ComplexMatrix, tol: f64) -> Result<BiorthoEigensystem> {
    if !m.is_square() {
        return Err(dim_err("square", format!("{}x{}", m.rows, m.cols)));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("eigensystem input"));
    }
    let n = m.rows;
    if n == 0 {
        return Ok(BiorthoEigensystem::from_parts(
            Vec::new(),
            ComplexMatrix::zeros(0, 0),
            ComplexMatrix::zeros(0, 0),
        ));
    }
    let scale = m.norm_max().max(1.0);
    let fm = to_faer(m);

    let (eigenvalues, right, left) = if m.is_hermitian(1e-14 * scale) {
        let evd = fm
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::DefectiveMatrix { residual: f64::NAN })?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let vals: Vec<C64> = (0..n).map(|i| C64::new(s[i].re, 0.0)).collect();
        let mut r = ComplexMatrix::from_fn(n, n, |i, j| u[(i, j)]);
        for j in 0..n {
            let mut v = r.column(j);
            fix_gauge(&mut v);
            r.set_column(j, &v);
        }
        let l = r.clone();
        (vals, r, l)
    } else {
        let evd = fm
            .eigen()
            .map_err(|_| Error::DefectiveMatrix { residual: f64::NAN })?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| cmp_complex(&s[a], &s[b]));
        let vals: Vec<C64> = order.iter().map(|&k| s[k]).collect();
        let mut cols: Vec<Vec<C64>> = order
            .iter()
            .map(|&k| (0..n).map(|i| u[(i, k)]).collect())
            .collect();

        for group in degenerate_groups(&vals, DEGENERACY_TOL) {
            if group.len() > 1 {
                gram_schmidt(&mut cols, &group)?;
            }
        }
        for v in cols.iter_mut() {
            let nv = norm2(v);
            if !(nv > 0.0) || !nv.is_finite() {
                return Err(Error::DefectiveMatrix { residual: f64::INFINITY });
            }
            v.iter_mut().for_each(|z| *z /= nv);
            fix_gauge(v);
        }
        let r = ComplexMatrix::from_columns(&cols)?;
        let rinv = r
            .inverse()
            .map_err(|_| Error::DefectiveMatrix { residual: f64::INFINITY })?;
        (vals, r, rinv.adjoint())
    };

    let es = BiorthoEigensystem::from_parts(eigenvalues, right, left);
    let residual = eigen_residual(m, &es) / scale;
    if !(residual <= tol) {
        return Err(Error::DefectiveMatrix { residual });
    }
    Ok(es)
}

/// Largest of `‖M r_n - E_n r_n‖_∞` and `‖M† l_n - E_n* l_n‖_∞`.
pub fn eigen_residual(m: &ComplexMatrix, es: &BiorthoEigensystem) -> f64 {
    let n = es.dim();
    let mr = m * es.right();
    let ml = &m.adjoint() * es.left();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let e = es.eigenvalues[j];
        for i in 0..n {
            let a = (mr[(i, j)] - e * es.right[(i, j)]).norm();
            let b = (ml[(i, j)] - e.conj() * es.left[(i, j)]).norm();
            worst = worst.max(a).max(b);
        }
    }
    if worst.is_nan() {
        f64::INFINITY
    } else {
        worst
    }
}

/// Runs of consecutive sorted eigenvalues whose neighbours lie within `tol`.
pub fn degenerate_groups(sorted: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = sorted.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    // Sorting by real part keeps close pairs within a sliding window on Re.
    for i in 0..n {
        for j in i + 1..n {
            if sorted[j].re - sorted[i].re > tol {
                break;
            }
            if (sorted[j] - sorted[i]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

fn gram_schmidt(cols: &mut [Vec<C64>], group: &[usize]) -> Result<()> {
    for (a, &i) in group.iter().enumerate() {
        let before = norm2(&cols[i]);
        for &j in &group[..a] {
            let p = vdot(&cols[j], &cols[i]);
            let (src, dst) = if j < i {
                let (lo, hi) = cols.split_at_mut(i);
                (&lo[j], &mut hi[0])
            } else {
                let (lo, hi) = cols.split_at_mut(j);
                (&hi[0], &mut lo[i])
            };
            for (d, s) in dst.iter_mut().zip(src) {
                *d -= p * s;
            }
        }
        let after = norm2(&cols[i]);
        if !(after > 1e-300) || !after.is_finite() || !(before > 0.0) {
            return Err(Error::DefectiveMatrix { residual: f64::INFINITY });
        }
        cols[i].iter_mut().for_each(|z| *z /= after);
    }
    Ok(())
}

fn fix_gauge(v: &mut [C64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        // Ties resolved toward the lowest index, with slack for roundoff.
        if z.norm() > best_abs * (1.0 + 1e-12) {
            best_abs = z.norm();
            best = i;
        }
    }
    if best_abs > 0.0 {
        let phase = v[best].conj() / best_abs;
        v.iter_mut().for_each(|z| *z *= phase);
        v[best] = C64::new(v[best].re, 0.0);
    }
}

/// `max |Σ_n r_n l_n† - I|`.
pub fn completeness_residual(es: &BiorthoEigensystem) -> f64 {
    let p = es.right() * &es.left().adjoint();
    p.max_abs_diff(&ComplexMatrix::identity(es.dim()))
}

/// Similarity factor `A` with `A e_n = r_n` and `(A^{-1})† e_n = l_n`.
pub fn similarity_factor(es: &BiorthoEigensystem, tol: f64) -> Result<ComplexMatrix> {
    let a = es.right().clone();
    let ainv = a
        .inverse()
        .map_err(|_| Error::SingularFactor { residual: f64::INFINITY })?;
    let scale = es.left().norm_max().max(1.0);
    let residual = ainv.adjoint().max_abs_diff(es.left()) / scale;
    if !(residual <= tol) {
        return Err(Error::SingularFactor { residual });
    }
    Ok(a)
}

/// Metric `U = A A†` of the biorthogonal basis.
pub fn metric(a: &ComplexMatrix) -> ComplexMatrix {
    a * &a.adjoint()
}

/// `Σ_n ⟨l_n|ρ|l_n⟩`, which equals `Tr(ρ (A A†)^{-1})`.
pub fn biortho_trace(rho: &ComplexMatrix, es: &BiorthoEigensystem) -> Result<C64> {
    check_square(rho, es.dim())?;
    let l = es.left();
    let rl = rho * l;
    Ok((0..es.dim())
        .map(|n| (0..es.dim()).map(|i| l[(i, n)].conj() * rl[(i, n)]).sum::<C64>())
        .sum())
}

/// `Σ_n ⟨l_n|ρ|r_n⟩`, which equals `Tr ρ` for a complete basis.
pub fn mixed_trace(rho: &ComplexMatrix, es: &BiorthoEigensystem) -> Result<C64> {
    check_square(rho, es.dim())?;
    let l = es.left();
    let rr = rho * es.right();
    Ok((0..es.dim())
        .map(|n| (0..es.dim()).map(|i| l[(i, n)].conj() * rr[(i, n)]).sum::<C64>())
        .sum())
}

pub(crate) fn check_square(m: &ComplexMatrix, n: usize) -> Result<()> {
    if m.rows != n || m.cols != n {
        return Err(dim_err(format!("{n}x{n}"), format!("{}x{}", m.rows, m.cols)));
    }
    Ok(())
}

/// Connected components of the undirected graph of nonzero entries.
///
/// Components are ordered by their smallest index; indices within a
/// component ascend. The matrix is block diagonal under this partition.
pub fn connected_blocks(m: &ComplexMatrix) -> Vec<Vec<usize>> {
    let n = m.rows;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for r in 0..n {
        for (c, z) in m.row(r).iter().enumerate() {
            if c != r && *z != ZERO {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[root]].push(i);
    }
    blocks
}

/// Eigenvalues computed block by block, sorted by real then imaginary part.
pub fn block_eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(dim_err("square", format!("{}x{}", m.rows, m.cols)));
    }
    let mut out = Vec::with_capacity(m.rows);
    for block in connected_blocks(m) {
        out.extend(m.submatrix(&block).eigenvalues()?);
    }
    sort_complex(&mut out);
    Ok(out)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA13: f64 = 5.371920351148152;

fn pade_coeffs(m: usize) -> &'static [f64] {
    const P3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
    const P5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
    const P7: [f64; 8] = [
        17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
    ];
    const P9: [f64; 10] = [
        17643225600.0,
        8821612800.0,
        2075673600.0,
        302702400.0,
        30270240.0,
        2162160.0,
        110880.0,
        3960.0,
        90.0,
        1.0,
    ];
    match m {
        3 => &P3,
        5 => &P5,
        7 => &P7,
        _ => &P9,
    }
}

/// Matrix exponential by Padé approximation with scaling and squaring.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(dim_err("square", format!("{}x{}", a.rows, a.cols)));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("exponent"));
    }
    let n = a.rows;
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let fa = to_faer(a);
    let id = Mat::<C64>::identity(n, n);
    let norm = a.norm_one();
    let real = |c: f64| faer::Scale(C64::new(c, 0.0));

    for &(m, theta) in &THETA {
        if norm <= theta {
            let b = pade_coeffs(m);
            let a2 = &fa * &fa;
            let mut even = &id * real(b[0]);
            let mut odd = &id * real(b[1]);
            let mut pow = id.clone();
            for k in 1..=m / 2 {
                pow = &pow * &a2;
                even = even + &pow * real(b[2 * k]);
                odd = odd + &pow * real(b[2 * k + 1]);
            }
            let u = &fa * &odd;
            let out = pade_solve(&(&even - &u), &(&even + &u))?;
            return Ok(from_faer(&out));
        }
    }

    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = &fa * real(2f64.powi(-s));
    let b = &PADE13;
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * real(b[13]) + &a4 * real(b[11]) + &a2 * real(b[9]);
    let u_tail = &a6 * real(b[7]) + &a4 * real(b[5]) + &a2 * real(b[3]) + &id * real(b[1]);
    let u = &scaled * &(&a6 * &u_inner + u_tail);
    let v_inner = &a6 * real(b[12]) + &a4 * real(b[10]) + &a2 * real(b[8]);
    let v = &a6 * &v_inner + &a6 * real(b[6]) + &a4 * real(b[4]) + &a2 * real(b[2]) + &id * real(b[0]);
    let mut r = pade_solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    let out = from_faer(&r);
    if !out.is_finite() {
        return Err(Error::NonFinite("matrix exponential"));
    }
    Ok(out)
}

fn pade_solve(q: &Mat<C64>, p: &Mat<C64>) -> Result<Mat<C64>> {
    use faer::linalg::solvers::Solve;
    let x = q.partial_piv_lu().solve(p);
    let finite = (0..x.nrows()).all(|i| {
        (0..x.ncols()).all(|j| x[(i, j)].re.is_finite() && x[(i, j)].im.is_finite())
    });
    if finite {
        Ok(x)
    } else {
        Err(Error::NonFinite("Padé denominator solve"))
    }
}
