//! Seeded random matrices.
//!
//! Every sampler is a ChaCha8 stream, so a fixed seed reproduces the same
//! entries on every platform. Complex Gaussian entries are `(g1 + i g2)/sqrt(2)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{frobenius, DenseMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomKind {
    Ginibre,
    Hermitian,
    Positive,
    Normal,
    FixedRank(usize),
    UnitVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub seed: u64,
    pub kind: RandomKind,
    pub rows: usize,
    pub cols: usize,
}

impl RandomSpec {
    pub fn new(seed: u64, kind: RandomKind, rows: usize, cols: usize) -> Self {
        Self {
            seed,
            kind,
            rows,
            cols,
        }
    }

    pub fn square(seed: u64, kind: RandomKind, d: usize) -> Self {
        Self::new(seed, kind, d, d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::RandomSpec(format!(
                "shape {}x{} must be positive",
                self.rows, self.cols
            )));
        }
        let square = self.rows == self.cols;
        match self.kind {
            RandomKind::Hermitian | RandomKind::Positive | RandomKind::Normal if !square => {
                Err(Error::RandomSpec(format!(
                    "{:?} matrices must be square, got {}x{}",
                    self.kind, self.rows, self.cols
                )))
            }
            RandomKind::FixedRank(r) if r > self.rows.min(self.cols) => Err(Error::RandomSpec(
                format!("rank {r} exceeds min({}, {})", self.rows, self.cols),
            )),
            RandomKind::UnitVector if self.cols != 1 => Err(Error::RandomSpec(format!(
                "unit vectors have one column, got {}",
                self.cols
            ))),
            _ => Ok(()),
        }
    }
}

pub fn generate(spec: &RandomSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let mut sampler = Sampler::new(spec.seed);
    let (r, c) = (spec.rows, spec.cols);
    Ok(match spec.kind {
        RandomKind::Ginibre => sampler.ginibre(r, c),
        RandomKind::Hermitian => sampler.hermitian(r),
        RandomKind::Positive => sampler.positive(r),
        RandomKind::Normal => sampler.normal(r),
        RandomKind::FixedRank(k) => sampler.fixed_rank(r, c, k),
        RandomKind::UnitVector => sampler.unit_vector(r),
    })
}

/// Stateful generator behind [`generate`]; sweeps draw many matrices from one stream.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for sub-task `index` of a run seeded with `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { rng }
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn complex_gaussian(&mut self) -> C64 {
        let re = self.gaussian();
        let im = self.gaussian();
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn ginibre(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        // Row-major fill keeps the entry order independent of storage layout.
        let mut m = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self.complex_gaussian();
            }
        }
        m
    }

    pub fn real_gaussian_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = C64::new(self.gaussian(), 0.0);
            }
        }
        m
    }

    pub fn hermitian(&mut self, d: usize) -> DenseMatrix {
        let g = self.ginibre(d, d);
        symmetrize(&g)
    }

    pub fn positive(&mut self, d: usize) -> DenseMatrix {
        let g = self.ginibre(d, d);
        symmetrize(&(&g * g.adjoint()))
    }

    /// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
    pub fn unitary(&mut self, d: usize) -> DenseMatrix {
        let g = self.ginibre(d, d);
        let (mut q, r) = g.qr().unpack();
        for j in 0..d {
            let rjj = r[(j, j)];
            if rjj.norm() > 0.0 {
                let phase = rjj / rjj.norm();
                let col = q.column(j) * phase;
                q.set_column(j, &col);
            }
        }
        normalize_columns(q)
    }

    /// `U diag(z) U*` with Haar `U` and complex Gaussian `z`.
    pub fn normal(&mut self, d: usize) -> DenseMatrix {
        let u = self.unitary(d);
        let z: Vec<C64> = (0..d).map(|_| self.complex_gaussian()).collect();
        normal_from_spectrum(&u, &z)
    }

    /// `X Y*` with Ginibre factors of inner dimension `rank`.
    pub fn fixed_rank(&mut self, rows: usize, cols: usize, rank: usize) -> DenseMatrix {
        let x = self.ginibre(rows, rank);
        let y = self.ginibre(cols, rank);
        x * y.adjoint()
    }

    pub fn unit_vector(&mut self, d: usize) -> DenseMatrix {
        let v = self.ginibre(d, 1);
        let n = frobenius(&v);
        v.unscale(n)
    }

    /// Square matrix with trace exactly removed from the diagonal.
    pub fn traceless(&mut self, d: usize) -> DenseMatrix {
        let mut g = self.ginibre(d, d);
        let mean: C64 = g.diagonal().iter().sum::<C64>() / d as f64;
        for i in 0..d {
            g[(i, i)] -= mean;
        }
        g
    }
}

pub fn normal_from_spectrum(u: &DenseMatrix, z: &[C64]) -> DenseMatrix {
    let mut scaled = u.clone();
    for (j, zj) in z.iter().enumerate() {
        let col = scaled.column(j) * *zj;
        scaled.set_column(j, &col);
    }
    scaled * u.adjoint()
}

fn symmetrize(m: &DenseMatrix) -> DenseMatrix {
    let d = m.nrows();
    let mut out = DenseMatrix::zeros(d, d);
    for i in 0..d {
        out[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..d {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    out
}

fn normalize_columns(mut q: DenseMatrix) -> DenseMatrix {
    for j in 0..q.ncols() {
        let n = q.column(j).norm();
        if n > 0.0 {
            q.column_mut(j).unscale_mut(n);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{
        eig_hermitian, hermitian_residual, normality_residual, rank_tol, singular_values,
        unitarity_residual, Tolerance,
    };

    #[test]
    fn hermitian_is_exactly_symmetric() {
        let m = generate(&RandomSpec::square(1, RandomKind::Hermitian, 3)).unwrap();
        assert_eq!(hermitian_residual(&m), 0.0);
    }

    #[test]
    fn fixed_rank_six_by_six() {
        let m = generate(&RandomSpec::square(1, RandomKind::FixedRank(2), 6)).unwrap();
        let s = singular_values(&m).unwrap();
        assert!(s[2] < 1e-12 * s[0]);
        assert_eq!(rank_tol(&m, &Tolerance::default()).unwrap(), 2);
    }

    #[test]
    fn determinism() {
        for kind in [
            RandomKind::Ginibre,
            RandomKind::Hermitian,
            RandomKind::Positive,
            RandomKind::Normal,
            RandomKind::FixedRank(1),
        ] {
            let spec = RandomSpec::square(42, kind, 4);
            let a = generate(&spec).unwrap();
            let b = generate(&spec).unwrap();
            let bits = |m: &DenseMatrix| -> Vec<(u64, u64)> {
                m.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect()
            };
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn kind_structure() {
        for seed in 0..20 {
            let p = generate(&RandomSpec::square(seed, RandomKind::Positive, 5)).unwrap();
            assert!(*eig_hermitian(&p).unwrap().last().unwrap() >= -1e-12);
            let n = generate(&RandomSpec::square(seed, RandomKind::Normal, 5)).unwrap();
            assert!(normality_residual(&n) <= 1e-12 * (1.0 + frobenius(&n).powi(2)));
            let mut s = Sampler::new(seed);
            assert!(unitarity_residual(&s.unitary(6)) < 1e-12);
            let v = generate(&RandomSpec::new(seed, RandomKind::UnitVector, 4, 1)).unwrap();
            assert!((frobenius(&v) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&RandomSpec::new(0, RandomKind::Hermitian, 2, 3)).is_err());
        assert!(generate(&RandomSpec::new(0, RandomKind::FixedRank(4), 3, 5)).is_err());
        assert!(generate(&RandomSpec::new(0, RandomKind::UnitVector, 3, 2)).is_err());
        assert!(generate(&RandomSpec::new(0, RandomKind::Ginibre, 0, 2)).is_err());
    }

    #[test]
    fn substreams_differ() {
        let a = Sampler::substream(7, 0).ginibre(2, 2);
        let b = Sampler::substream(7, 1).ginibre(2, 2);
        assert_ne!(a, b);
    }
}
