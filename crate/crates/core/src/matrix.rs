//! Dense complex matrices and the decompositions everything else is built on.
//!
//! Matrices are plain [`nalgebra::DMatrix`] values over [`Complex64`]. All
//! decompositions go through nalgebra (faer for the SVD) with an explicit iteration budget so a
//! non-converging run surfaces as [`Error::Decomposition`] instead of hanging.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type DenseMatrix = DMatrix<Complex64>;
pub type DenseVector = DVector<Complex64>;

const MAX_ITERATIONS: usize = 100_000;
const HERMITIAN_REL_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Absolute/relative threshold pair used for rank decisions.
///
/// A singular value counts as nonzero when it exceeds
/// `max(abs, rel * sigma_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const DEFAULT_ABS: f64 = 1e-9;
    pub const DEFAULT_REL: f64 = 1e-12;

    pub fn new(abs: f64, rel: f64) -> Result<Self> {
        if !(abs.is_finite() && rel.is_finite()) || abs < 0.0 || rel < 0.0 {
            return Err(Error::Tolerance(format!(
                "abs={abs}, rel={rel} must be finite and non-negative"
            )));
        }
        if abs == 0.0 && rel == 0.0 {
            return Err(Error::Tolerance("abs and rel cannot both be zero".into()));
        }
        Ok(Self { abs, rel })
    }

    /// Parses `"abs"` or `"abs,rel"`; a missing `rel` keeps the default.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Tolerance(format!("cannot parse {s:?} as a number")))
        };
        match parts.as_slice() {
            [abs] => Self::new(num(abs)?, Self::DEFAULT_REL),
            [abs, rel] => Self::new(num(abs)?, num(rel)?),
            _ => Err(Error::Tolerance(format!("expected \"abs[,rel]\", got {text:?}"))),
        }
    }

    pub fn threshold(&self, sigma_max: f64) -> f64 {
        self.abs.max(self.rel * sigma_max)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: Self::DEFAULT_ABS,
            rel: Self::DEFAULT_REL,
        }
    }
}

/// Singular value decomposition `m = u * diag(s) * v_t` with `s` decreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v_t: DenseMatrix,
}

impl Svd {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        let (rows, cols) = m.shape();
        let k = rows.min(cols);
        if k == 0 {
            return Ok(Self {
                u: DenseMatrix::zeros(rows, 0),
                s: Vec::new(),
                v_t: DenseMatrix::zeros(0, cols),
            });
        }
        let svd = to_faer(m)
            .thin_svd()
            .map_err(|_| decomposition_error("singular value decomposition", m))?;
        let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| fs[b].re.total_cmp(&fs[a].re));
        let u = DenseMatrix::from_fn(rows, k, |i, j| from_c64(fu[(i, order[j])]));
        let v_t = DenseMatrix::from_fn(k, cols, |i, j| from_c64(fv[(j, order[i])]).conj());
        let s = order.iter().map(|&j| fs[j].re.max(0.0)).collect();
        Ok(Self { u, s, v_t })
    }
}

fn to_faer(m: &DenseMatrix) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    })
}

fn from_c64(z: faer::c64) -> C64 {
    C64::new(z.re, z.im)
}

/// Short human-readable identifier for error messages.
pub fn fingerprint(m: &DenseMatrix) -> String {
    let sum: C64 = m.iter().sum();
    format!(
        "{}x{} fro={:.6e} sum={:.6e}{:+.6e}i",
        m.nrows(),
        m.ncols(),
        frobenius(m),
        sum.re,
        sum.im
    )
}

fn decomposition_error(kind: &'static str, m: &DenseMatrix) -> Error {
    Error::Decomposition {
        kind,
        fingerprint: fingerprint(m),
    }
}

pub fn ensure_finite(m: &DenseMatrix) -> Result<()> {
    match m.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        None => Ok(()),
        Some(pos) => Err(Error::InvalidInput(format!(
            "non-finite entry at ({}, {})",
            pos % m.nrows(),
            pos / m.nrows()
        ))),
    }
}

pub fn ensure_square(m: &DenseMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Decreasing singular values; the vector has `min(rows, cols)` entries.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let s = to_faer(m)
        .singular_values()
        .map_err(|_| decomposition_error("singular value decomposition", m))?;
    let mut s: Vec<f64> = s.into_iter().map(|x| x.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub fn rank_from_singular_values(s: &[f64], tol: &Tolerance) -> usize {
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let threshold = tol.threshold(sigma_max);
    s.iter().filter(|&&x| x > threshold).count()
}

pub fn rank_tol(m: &DenseMatrix, tol: &Tolerance) -> Result<usize> {
    Ok(rank_from_singular_values(&singular_values(m)?, tol))
}

pub fn hermitian_residual(m: &DenseMatrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

pub fn normality_residual(m: &DenseMatrix) -> f64 {
    let ma = m.adjoint();
    frobenius(&(m * &ma - &ma * m))
}

pub fn unitarity_residual(m: &DenseMatrix) -> f64 {
    frobenius(&(m.adjoint() * m - DenseMatrix::identity(m.ncols(), m.ncols())))
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues decreasing, matching
/// eigenvectors as columns.
pub fn eigh(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let d = ensure_square(m, "Hermitian eigenproblem input")?;
    let residual = hermitian_residual(m);
    if residual > HERMITIAN_REL_TOL * (1.0 + frobenius(m)) {
        return Err(Error::NotHermitian { residual });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym
        .clone()
        .try_symmetric_eigen(f64::EPSILON, MAX_ITERATIONS)
        .ok_or_else(|| decomposition_error("Hermitian eigendecomposition", &sym))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DenseMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Decreasing real eigenvalues of a Hermitian matrix.
pub fn eig_hermitian(m: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(eigh(m)?.0)
}

/// Eigenvalues of a general square matrix from its complex Schur form.
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<C64>> {
    ensure_square(m, "eigenvalue input")?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, MAX_ITERATIONS)
        .ok_or_else(|| decomposition_error("Schur decomposition", m))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

pub fn frobenius(m: &DenseMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &DenseMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn identity(d: usize) -> DenseMatrix {
    DenseMatrix::identity(d, d)
}

/// Matrix unit `|i><j|` of size `d`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(d, d);
    m[(i, j)] = ONE;
    m
}

pub fn diag(values: &[C64]) -> DenseMatrix {
    DenseMatrix::from_diagonal(&DenseVector::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> DenseMatrix {
    let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
    diag(&v)
}

/// Builds a matrix from real row vectors; handy in tests and examples.
pub fn from_real_rows(rows: &[&[f64]]) -> DenseMatrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    DenseMatrix::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
}

pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    a.kronecker(b)
}

pub fn outer(u: &DenseVector, v: &DenseVector) -> DenseMatrix {
    u * v.adjoint()
}

pub fn power(m: &DenseMatrix, k: usize) -> DenseMatrix {
    let d = m.nrows();
    let mut out = identity(d);
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Polar modulus `|c| = (c* c)^{1/2}`.
pub fn abs_matrix(c: &DenseMatrix) -> Result<DenseMatrix> {
    let svd = Svd::new(c)?;
    let v = svd.v_t.adjoint();
    let k = svd.s.len();
    let mut scaled = v.columns(0, k).into_owned();
    for (j, s) in svd.s.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    Ok(scaled * v.columns(0, k).adjoint())
}

pub fn inverse(m: &DenseMatrix) -> Result<DenseMatrix> {
    ensure_square(m, "inverse input")?;
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput(format!("matrix {} is singular", fingerprint(m))))
}

/// Spectral condition number `sigma_1 / sigma_min` (infinite when singular).
pub fn condition_number(m: &DenseMatrix) -> Result<f64> {
    let s = singular_values(m)?;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => Ok(1.0),
    }
}

/// Frobenius inner product `tr(a* b)`.
pub fn inner(a: &DenseMatrix, b: &DenseMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_singular_values() {
        assert_eq!(singular_values(&identity(3)).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_singular_values_are_moduli() {
        let m = diag(&[C64::new(3.0, 0.0), C64::new(0.0, -4.0)]);
        let s = singular_values(&m).unwrap();
        assert_relative_eq!(s[0], 4.0, epsilon = 1e-14);
        assert_relative_eq!(s[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn rectangular_singular_value_count() {
        let m = DenseMatrix::from_element(2, 5, ONE);
        let s = singular_values(&m).unwrap();
        assert_eq!(s.len(), 2);
        assert_relative_eq!(s[0], 10f64.sqrt(), epsilon = 1e-12);
        assert!(s[1] < 1e-12);
    }

    #[test]
    fn rank_of_zero_and_tiny_entries() {
        let tol = Tolerance::default();
        assert_eq!(rank_tol(&DenseMatrix::zeros(3, 3), &tol).unwrap(), 0);
        let m = real_diag(&[1.0, 1e-14]);
        assert_eq!(rank_tol(&m, &Tolerance::new(1e-9, 0.0).unwrap()).unwrap(), 1);
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerance::new(0.0, 0.0).is_err());
        assert!(Tolerance::new(-1.0, 0.0).is_err());
        assert!(Tolerance::new(f64::NAN, 1.0).is_err());
        let t = Tolerance::parse("1e-6").unwrap();
        assert_eq!(t.abs, 1e-6);
        assert_eq!(t.rel, Tolerance::DEFAULT_REL);
        let t = Tolerance::parse("1e-7, 1e-10").unwrap();
        assert_eq!((t.abs, t.rel), (1e-7, 1e-10));
        assert!(Tolerance::parse("x").is_err());
        assert!(Tolerance::parse("1,2,3").is_err());
    }

    #[test]
    fn hermitian_spectra() {
        assert_eq!(eig_hermitian(&real_diag(&[2.0, 1.0, 0.0])).unwrap(), vec![2.0, 1.0, 0.0]);
        let x = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let ev = eig_hermitian(&x).unwrap();
        assert_relative_eq!(ev[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn general_eigenvalues_of_triangular() {
        let m = from_real_rows(&[&[1.0, 5.0], &[0.0, -2.0]]);
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re));
        assert_relative_eq!(ev[0].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(ev[1].re, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn polar_modulus_of_shift() {
        let m = from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]]);
        let a = abs_matrix(&m).unwrap();
        let expected = real_diag(&[0.0, 2.0]);
        assert!(frobenius(&(a - expected)) < 1e-12);
    }

    #[test]
    fn non_finite_detected() {
        let mut m = identity(2);
        m[(1, 0)] = C64::new(f64::NAN, 0.0);
        assert!(ensure_finite(&m).is_err());
    }
}
