use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{frobenius, identity, trace, DenseMatrix, C64, ONE};
use crate::tensor::{insert_identity, marginal, partial_trace, FactorSet, TensorSpace};

/// Largest witness matrix built explicitly (side `d^{2n}`).
pub const MAX_WITNESS_SIDE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessSpec {
    pub d: usize,
    pub n: usize,
    pub k: usize,
}

impl WitnessSpec {
    pub fn new(d: usize, n: usize, k: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidInput(format!("d = {d} and n = {n} must be positive")));
        }
        if k >= d {
            return Err(Error::InvalidInput(format!("k = {k} must be smaller than d = {d}")));
        }
        Ok(Self { d, n, k })
    }

    /// `n = 1` or `k = 0`: the witness carries no Schmidt-number information.
    pub fn degenerate(&self) -> bool {
        self.n == 1 || self.k == 0
    }

    pub fn weight(&self) -> f64 {
        1.0 + ((self.n - 1) * self.k) as f64
    }

    pub fn system_space(&self) -> TensorSpace {
        TensorSpace::uniform(self.d, self.n).expect("validated")
    }

    fn side(&self) -> Option<usize> {
        self.d.checked_pow(self.n as u32)
    }
}

/// `W_k = (1 + (n-1)k) 1 - Σ_i ω_(i)` on `A_1…A_n ⊗ B_1…B_n`.
pub fn witness_matrix(w: &WitnessSpec) -> Result<DenseMatrix> {
    let half = w.side().filter(|s| s.checked_mul(*s).is_some_and(|t| t <= MAX_WITNESS_SIDE));
    let Some(half) = half else {
        return Err(Error::InvalidInput(format!(
            "witness for d = {}, n = {} exceeds {MAX_WITNESS_SIDE} rows; evaluate it through witness_value",
            w.d, w.n
        )));
    };
    let (d, n) = (w.d, w.n);
    let digits = |mut x: usize| {
        let mut out = vec![0; n];
        for i in (0..n).rev() {
            out[i] = x % d;
            x /= d;
        }
        out
    };
    let all: Vec<Vec<usize>> = (0..half).map(digits).collect();
    let side = half * half;
    let mut m = identity(side) * C64::new(w.weight(), 0.0);
    for i in 0..n {
        // ω_(i): identity on (A_i, B_i), |Ω_j><Ω_j| on the other pairs
        for a in 0..half {
            for b in 0..half {
                let (da, db) = (&all[a], &all[b]);
                if (0..n).any(|j| j != i && da[j] != db[j]) {
                    continue;
                }
                for a2 in 0..half {
                    let da2 = &all[a2];
                    if da2[i] != da[i] {
                        continue;
                    }
                    for b2 in 0..half {
                        let db2 = &all[b2];
                        if db2[i] != db[i] || (0..n).any(|j| j != i && da2[j] != db2[j]) {
                            continue;
                        }
                        m[(a * half + b, a2 * half + b2)] -= ONE;
                    }
                }
            }
        }
    }
    Ok(m)
}

/// `<ψ, W_k ψ>` for `ψ = (M ⊗ 1)|Ω>`: `(1 + (n-1)k)‖M‖_2² - Σ_i ‖M_i‖_2²`.
pub fn witness_value(w: &WitnessSpec, m: &DenseMatrix) -> Result<f64> {
    let space = w.system_space();
    space.check_matrix(m)?;
    let mut value = w.weight() * m.norm_squared();
    for i in 0..w.n {
        let mi = marginal(m, &space, i)?;
        value -= frobenius(&mi).powi(2);
    }
    Ok(value)
}

/// `T(X) = (1 + (n-1)k) tr(X) 1 - Σ_i tr_i[X] ⊗ 1_i`.
pub fn kpositive_map_apply(x: &DenseMatrix, space: &TensorSpace, k: usize) -> Result<DenseMatrix> {
    space.check_matrix(x)?;
    let d = space
        .equal_dim()
        .ok_or_else(|| Error::Dimension(format!("local dimensions {:?} must be equal", space.dims())))?;
    let n = space.len();
    let weight = 1.0 + ((n - 1) * k) as f64;
    let mut out = identity(space.total()) * (trace(x) * weight);
    for i in 0..n {
        let reduced = partial_trace(x, space, &FactorSet::single(i, n)?)?;
        let dims: Vec<usize> = if n == 1 { vec![] } else { vec![d; n - 1] };
        out -= insert_identity(&reduced, &dims, i, d)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{hermitian_residual, kron, matrix_unit};
    use crate::random::Sampler;
    use crate::tensor::lift;

    fn projector_example(w: &WitnessSpec) -> DenseMatrix {
        let mut m = identity(1);
        for _ in 0..w.n - 1 {
            m = kron(&m, &matrix_unit(w.d, 0, 0));
        }
        let mut p = DenseMatrix::zeros(w.d, w.d);
        for j in 0..=w.k {
            p[(j, j)] = ONE;
        }
        kron(&m, &p)
    }

    #[test]
    fn witness_value_on_rank_k_plus_one_example() {
        for (d, n, k) in [(2, 2, 1), (3, 2, 1), (3, 2, 2), (2, 3, 1)] {
            let w = WitnessSpec::new(d, n, k).unwrap();
            let v = witness_value(&w, &projector_example(&w)).unwrap();
            let expected = -(((n - 1) * (k + 1)) as f64);
            assert!((v - expected).abs() <= 1e-9, "{d},{n},{k}: {v}");
        }
    }

    #[test]
    fn witness_matrix_agrees_with_value() {
        let w = WitnessSpec::new(2, 2, 1).unwrap();
        let wm = witness_matrix(&w).unwrap();
        assert!(hermitian_residual(&wm) <= 1e-12);
        let mut s = Sampler::new(4);
        for _ in 0..5 {
            let m = s.ginibre(4, 4);
            let psi = lift(&m);
            let direct = (psi.adjoint() * &wm * &psi)[(0, 0)].re;
            assert!((direct - witness_value(&w, &m).unwrap()).abs() < 1e-10);
        }
        let w3 = WitnessSpec::new(2, 3, 1).unwrap();
        assert!(hermitian_residual(&witness_matrix(&w3).unwrap()) <= 1e-12);
        assert!(witness_matrix(&WitnessSpec::new(5, 3, 1).unwrap()).is_err());
    }

    #[test]
    fn degenerate_specs() {
        assert!(WitnessSpec::new(2, 1, 1).unwrap().degenerate());
        assert!(WitnessSpec::new(3, 2, 0).unwrap().degenerate());
        assert!(WitnessSpec::new(2, 2, 2).is_err());
        let w = WitnessSpec::new(3, 1, 1).unwrap();
        assert!(frobenius(&witness_matrix(&w).unwrap()) < 1e-15);
    }

    #[test]
    fn map_on_identity() {
        for (d, n, k) in [(2, 2, 1), (3, 2, 2), (2, 3, 1)] {
            let space = TensorSpace::uniform(d, n).unwrap();
            let t = kpositive_map_apply(&identity(space.total()), &space, k).unwrap();
            let weight = 1.0 + ((n - 1) * k) as f64;
            let expected = weight * (d as f64).powi(n as i32) - (n * d) as f64;
            assert!(frobenius(&(t - identity(space.total()) * C64::new(expected, 0.0))) < 1e-12);
        }
    }

    #[test]
    fn choi_matrix_is_the_witness() {
        let w = WitnessSpec::new(2, 2, 1).unwrap();
        let space = w.system_space();
        let half = space.total();
        let mut choi = DenseMatrix::zeros(half * half, half * half);
        for a in 0..half {
            for b in 0..half {
                let t = kpositive_map_apply(&matrix_unit(half, a, b), &space, w.k).unwrap();
                choi += kron(&t, &matrix_unit(half, a, b));
            }
        }
        assert!(frobenius(&(choi - witness_matrix(&w).unwrap())) <= 1e-10);
    }
}
