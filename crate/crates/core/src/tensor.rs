//! Tensor-product index structure over square matrices.
//!
//! A composite basis index is big-endian in the factors:
//! `j = ((j_1 d_2 + j_2) d_3 + j_3) ...`. Factor indices in this API are
//! zero-based.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    eig_hermitian, ensure_square, identity, kron, singular_values, DenseMatrix, DenseVector, C64,
    ONE, ZERO,
};
use crate::report::InequalityReport;

/// Ordered local dimensions `(d_1, ..., d_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TensorSpace {
    dims: Vec<usize>,
}

impl TensorSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("a tensor space needs at least one factor".into()));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Dimension(format!("factor {i} has dimension 0")));
        }
        Ok(Self { dims })
    }

    pub fn bipartite(d_a: usize, d_b: usize) -> Result<Self> {
        Self::new(vec![d_a, d_b])
    }

    /// `n` copies of a `d`-dimensional factor.
    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// The common local dimension, if all factors agree.
    pub fn equal_dim(&self) -> Option<usize> {
        let d = self.dims[0];
        self.dims.iter().all(|&x| x == d).then_some(d)
    }

    pub fn check_matrix(&self, m: &DenseMatrix) -> Result<()> {
        let side = ensure_square(m, "tensor-space matrix")?;
        if side != self.total() {
            return Err(Error::Dimension(format!(
                "matrix side {side} does not match dims {:?} (product {})",
                self.dims,
                self.total()
            )));
        }
        Ok(())
    }

    pub fn without(&self, factors: &FactorSet) -> Option<TensorSpace> {
        let dims: Vec<usize> = self
            .dims
            .iter()
            .enumerate()
            .filter(|(i, _)| !factors.contains(*i))
            .map(|(_, &d)| d)
            .collect();
        TensorSpace::new(dims).ok()
    }

    /// Parses `"2,3"` or `"2x3"`.
    pub fn parse(text: &str) -> Result<Self> {
        let dims = text
            .split([',', 'x'])
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Dimension(format!("cannot parse {s:?} in {text:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }

    fn stride_split(&self, k: usize) -> (usize, usize, usize) {
        let left = self.dims[..k].iter().product();
        let right = self.dims[k + 1..].iter().product();
        (left, self.dims[k], right)
    }
}

impl TryFrom<Vec<usize>> for TensorSpace {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<TensorSpace> for Vec<usize> {
    fn from(space: TensorSpace) -> Self {
        space.dims
    }
}

/// Factors to trace out: non-empty, in range, no duplicates. Stored sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSet {
    indices: Vec<usize>,
}

impl FactorSet {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::FactorSet("no factor selected".into()));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::FactorSet(format!("factor {i} out of range for {n} factors")));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::FactorSet(format!("duplicate factor in {indices:?}")));
        }
        Ok(Self { indices })
    }

    pub fn single(i: usize, n: usize) -> Result<Self> {
        Self::new(vec![i], n)
    }

    /// Every factor except `keep`.
    pub fn all_but(keep: usize, n: usize) -> Result<Self> {
        Self::new((0..n).filter(|&i| i != keep).collect(), n)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

fn trace_one_factor(m: &DenseMatrix, space: &TensorSpace, k: usize) -> DenseMatrix {
    let (left, dk, right) = space.stride_split(k);
    let side = left * right;
    let mut out = DenseMatrix::zeros(side, side);
    for a in 0..left {
        for c in 0..right {
            for a2 in 0..left {
                for c2 in 0..right {
                    let mut acc = ZERO;
                    for t in 0..dk {
                        acc += m[((a * dk + t) * right + c, (a2 * dk + t) * right + c2)];
                    }
                    out[(a * right + c, a2 * right + c2)] = acc;
                }
            }
        }
    }
    out
}

/// Traces out the factors in `out`, returning the matrix on the remaining ones.
///
/// Factors are removed one at a time in increasing order, so tracing `{i, j}`
/// at once is the same computation as tracing `i` and then (the shifted) `j`.
/// Tracing every factor yields the 1x1 matrix `[tr m]`.
pub fn partial_trace(m: &DenseMatrix, space: &TensorSpace, out: &FactorSet) -> Result<DenseMatrix> {
    space.check_matrix(m)?;
    if let Some(&i) = out.indices().iter().find(|&&i| i >= space.len()) {
        return Err(Error::FactorSet(format!(
            "factor {i} out of range for {} factors",
            space.len()
        )));
    }
    let mut current = m.clone();
    let mut dims = space.dims().to_vec();
    for (removed, &i) in out.indices().iter().enumerate() {
        let k = i - removed;
        let sub = TensorSpace { dims: dims.clone() };
        current = trace_one_factor(&current, &sub, k);
        dims.remove(k);
        if dims.is_empty() {
            dims.push(1);
        }
    }
    Ok(current)
}

/// Reduced matrix on factor `keep` (every other factor traced out).
pub fn marginal(m: &DenseMatrix, space: &TensorSpace, keep: usize) -> Result<DenseMatrix> {
    if keep >= space.len() {
        return Err(Error::FactorSet(format!(
            "factor {keep} out of range for {} factors",
            space.len()
        )));
    }
    if space.len() == 1 {
        space.check_matrix(m)?;
        return Ok(m.clone());
    }
    partial_trace(m, space, &FactorSet::all_but(keep, space.len())?)
}

/// All single-factor marginals `M_1, ..., M_n`.
pub fn marginals(m: &DenseMatrix, space: &TensorSpace) -> Result<Vec<DenseMatrix>> {
    (0..space.len()).map(|i| marginal(m, space, i)).collect()
}

/// `1 ⊗ ... ⊗ c ⊗ ... ⊗ 1` with `c` on factor `at`.
pub fn embed_factor(c: &DenseMatrix, space: &TensorSpace, at: usize) -> Result<DenseMatrix> {
    if at >= space.len() {
        return Err(Error::FactorSet(format!(
            "factor {at} out of range for {} factors",
            space.len()
        )));
    }
    let side = ensure_square(c, "embedded factor")?;
    if side != space.dims()[at] {
        return Err(Error::Dimension(format!(
            "factor {at} has dimension {}, matrix is {side}x{side}",
            space.dims()[at]
        )));
    }
    let (left, _, right) = space.stride_split(at);
    Ok(kron(&kron(&identity(left), c), &identity(right)))
}

/// Inserts an identity factor of dimension `d` at position `at` of a matrix on
/// `reduced` (the space with that factor removed).
pub fn insert_identity(
    r: &DenseMatrix,
    reduced: &[usize],
    at: usize,
    d: usize,
) -> Result<DenseMatrix> {
    let side: usize = reduced.iter().product();
    if ensure_square(r, "reduced matrix")? != side || at > reduced.len() {
        return Err(Error::Dimension(format!(
            "cannot insert factor {at} into a {}x{} matrix on {reduced:?}",
            r.nrows(),
            r.ncols()
        )));
    }
    let left: usize = reduced[..at].iter().product();
    let right: usize = reduced[at..].iter().product();
    let full = left * d * right;
    let mut out = DenseMatrix::zeros(full, full);
    for a in 0..left {
        for c in 0..right {
            for a2 in 0..left {
                for c2 in 0..right {
                    let v = r[(a * right + c, a2 * right + c2)];
                    if v == ZERO {
                        continue;
                    }
                    for t in 0..d {
                        out[((a * d + t) * right + c, (a2 * d + t) * right + c2)] = v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `Σ_i C_(i)`.
pub fn kronecker_sum(cs: &[DenseMatrix], space: &TensorSpace) -> Result<DenseMatrix> {
    if cs.len() != space.len() {
        return Err(Error::Dimension(format!(
            "{} matrices for {} factors",
            cs.len(),
            space.len()
        )));
    }
    let n = space.total();
    cs.iter()
        .enumerate()
        .try_fold(DenseMatrix::zeros(n, n), |acc, (i, c)| {
            Ok(acc + embed_factor(c, space, i)?)
        })
}

/// Unnormalized `Σ_i |i>⊗|i>` in `C^d ⊗ C^d`.
pub fn omega_vector(d: usize) -> DenseVector {
    let mut v = DenseVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = ONE;
    }
    v
}

/// `(X ⊗ 1)|Ω>` for `X` of shape `d_A x d_B`: the row-major vectorization of `X`
/// as a vector in `C^{d_A} ⊗ C^{d_B}`.
pub fn lift(x: &DenseMatrix) -> DenseVector {
    let (r, c) = x.shape();
    DenseVector::from_fn(r * c, |k, _| x[(k / c, k % c)])
}

/// Inverse of [`lift`].
pub fn unlift(v: &DenseVector, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Swap operator on `C^d ⊗ C^d`.
pub fn flip_operator(d: usize) -> DenseMatrix {
    let mut f = DenseMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            f[(j * d + i, i * d + j)] = ONE;
        }
    }
    f
}

/// `(e^{-iθ} x + e^{iθ} x*)/2`.
pub fn hermitian_part_at(x: &DenseMatrix, theta: f64) -> DenseMatrix {
    let w = C64::from_polar(1.0, -theta);
    (x * w + x.adjoint() * w.conj()).scale(0.5)
}

pub const DEFAULT_ANGLES: usize = 360;

/// Support-function test of `W(a) ⊆ scale · W(m)` on a uniform θ-grid.
///
/// At each angle the largest eigenvalue of the rotated Hermitian part of `a`
/// must not exceed `scale` times that of `m`, up to `1e-8 (1 + σ_1(m))`. The
/// report carries the worst angle.
pub fn range_inclusion_check(
    a: &DenseMatrix,
    m: &DenseMatrix,
    scale: f64,
    angles: usize,
) -> Result<InequalityReport> {
    ensure_square(a, "numerical-range subject")?;
    ensure_square(m, "numerical-range container")?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
    }
    if angles < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 angles, got {angles}")));
    }
    let sigma1 = singular_values(m)?.first().copied().unwrap_or(0.0);
    let tolerance = 1e-8 * (1.0 + sigma1);
    let mut worst = (f64::INFINITY, 0.0, 0.0, 0.0);
    for j in 0..angles {
        let theta = 2.0 * PI * j as f64 / angles as f64;
        let lhs = eig_hermitian(&hermitian_part_at(a, theta))?[0];
        let rhs = scale * eig_hermitian(&hermitian_part_at(m, theta))?[0];
        if rhs - lhs < worst.0 {
            worst = (rhs - lhs, lhs, rhs, theta);
        }
    }
    Ok(InequalityReport::new("numerical_range_inclusion", worst.1, worst.2, tolerance)
        .with("scale", scale)
        .with("theta", worst.3)
        .with("angles", angles as f64))
}
