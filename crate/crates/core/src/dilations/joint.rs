//! Joint dilations of two matrices: commutator splitting, rank-two
//! construction and rank adjustment.

use super::flanders::rank_one_from_factors;
use super::structured::constant_diagonal_form;
use super::{marginal_residual, DilationResult, Structure};
use crate::error::{Error, Result};
use crate::matrix::{
    ensure_square, frobenius, identity, kron, rank_from_singular_values, rank_tol,
    singular_values, trace, DenseMatrix, Tolerance, C64, ONE, ZERO,
};
use crate::report::InequalityReport;
use crate::tensor::{marginal, TensorSpace};

const TRACE_MATCH_TOL: f64 = 1e-9;
const MAX_RANK_RETRIES: usize = 32;
/// The target singular value must stand this far above zero relative to σ₁.
const RANK_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ShodaDecomposition {
    pub k: DenseMatrix,
    pub l: DenseMatrix,
    /// Condition number of the similarity used to reach zero diagonal.
    pub similarity_condition: f64,
    /// `‖(kl - lk) - c‖_F`.
    pub residual: f64,
}

/// `c = kl - lk` for traceless `c`.
///
/// A unitary `U` makes `T = U* c U` zero-diagonal; then `k' = diag(1, …, d)` and
/// `l'_ij = T_ij / (i - j)` off the diagonal solve `[k', l'] = T`.
pub fn shoda_decomposition(c: &DenseMatrix) -> Result<ShodaDecomposition> {
    let d = ensure_square(c, "commutator target")?;
    if trace(c).norm() > 1e-9 * (1.0 + frobenius(c)) {
        return Err(Error::NonzeroTrace {
            trace: format!("{}", trace(c)),
        });
    }
    if frobenius(c) == 0.0 {
        return Ok(ShodaDecomposition {
            k: DenseMatrix::zeros(d, d),
            l: DenseMatrix::zeros(d, d),
            similarity_condition: 1.0,
            residual: 0.0,
        });
    }
    let form = constant_diagonal_form(c)?;
    let t = &form.transformed;
    let kp = DenseMatrix::from_fn(d, d, |i, j| if i == j { C64::new(i as f64 + 1.0, 0.0) } else { ZERO });
    let lp = DenseMatrix::from_fn(d, d, |i, j| {
        if i == j {
            ZERO
        } else {
            t[(i, j)] / (i as f64 - j as f64)
        }
    });
    let u = &form.unitary;
    let k = u * kp * u.adjoint();
    let l = u * lp * u.adjoint();
    let residual = frobenius(&(&k * &l - &l * &k - c));
    Ok(ShodaDecomposition {
        k,
        l,
        similarity_condition: 1.0,
        residual,
    })
}

/// Rank-two `M` on `d ⊗ d` with `tr_B M = a` and `tr_A M = b`; requires equal
/// traces.
///
/// With `b^T - a = KL - LK`, the factor pairs `(L, K*)` and `(a - LK, 1)` give
/// `tr_B M = LK + a - LK` and `tr_A M = (KL + a - LK)^T`.
pub fn joint_rank_two_dilation(a: &DenseMatrix, b: &DenseMatrix) -> Result<DilationResult> {
    let d = ensure_square(a, "joint dilation target a")?;
    let db = ensure_square(b, "joint dilation target b")?;
    if d != db {
        return Err(Error::Dimension(format!("targets are {d}x{d} and {db}x{db}")));
    }
    let (ta, tb) = (trace(a), trace(b));
    if (ta - tb).norm() > TRACE_MATCH_TOL {
        return Err(Error::TraceMismatch {
            left: format!("{ta}"),
            right: format!("{tb}"),
        });
    }
    let c = b.transpose() - a;
    let split = shoda_decomposition(&c)?;
    let x1 = split.l.clone();
    let x2 = split.k.adjoint();
    let y1 = a - &split.l * &split.k;
    let y2 = identity(d);
    let m = rank_one_from_factors(&x1, &x2) + rank_one_from_factors(&y1, &y2);
    let space = TensorSpace::bipartite(d, d)?;
    let rec = marginal_residual(&m, &space, 0, a)?;
    let rec_b = marginal_residual(&m, &space, 1, b)?;
    let rank = rank_tol(&m, &Tolerance::default())? as f64;
    Ok(DilationResult::new(m, space, Structure::RankTwo)
        .certify("reconstruction", rec)
        .certify("reconstruction_b", rec_b)
        .certify("rank", rank)
        .certify("commutator_residual", split.residual))
}

fn cyclic_shift(d: usize) -> DenseMatrix {
    DenseMatrix::from_fn(d, d, |i, j| if j == (i + 1) % d { ONE } else { ZERO })
}

fn bipartite_dims(space: &TensorSpace) -> Result<(usize, usize)> {
    match space.dims() {
        &[a, b] => Ok((a, b)),
        dims => Err(Error::Dimension(format!("expected a bipartite space, got {dims:?}"))),
    }
}

/// Sample scales `1, 1/2, 2, 1/4, 4, …`.
fn scale_schedule() -> impl Iterator<Item = f64> {
    (0..MAX_RANK_RETRIES).map(|i| {
        let e = i.div_ceil(2) as i32;
        if i % 2 == 1 {
            0.5f64.powi(e)
        } else {
            2f64.powi(e)
        }
    })
}

/// Joint dilation with the same marginals as `m` and rank exactly `target`.
///
/// `N_j` keeps the first `j` rows of `S_{d_A} ⊗ S_{d_B}` (cyclic shifts). The
/// shifts have zero diagonal, so both partial traces of `N_j` vanish; adding a
/// row changes the rank by at most one, so some `j` hits the target for
/// generic `t` in `m + t N_j`.
pub fn adjust_dilation_rank(
    m: &DenseMatrix,
    space: &TensorSpace,
    target_rank: usize,
) -> Result<DilationResult> {
    let (d_a, d_b) = bipartite_dims(space)?;
    space.check_matrix(m)?;
    let tol = Tolerance::default();
    let n = d_a * d_b;
    let current = rank_tol(m, &tol)?;
    if target_rank < current || target_rank > n {
        return Err(Error::InvalidInput(format!(
            "target rank {target_rank} outside [{current}, {n}]"
        )));
    }
    let a = marginal(m, space, 0)?;
    let b = marginal(m, space, 1)?;
    let finish = |mt: DenseMatrix, t: f64, rows: usize| -> Result<DilationResult> {
        let rec = marginal_residual(&mt, space, 0, &a)?;
        let rec_b = marginal_residual(&mt, space, 1, &b)?;
        let rank = rank_tol(&mt, &tol)? as f64;
        Ok(DilationResult::new(mt, space.clone(), Structure::RankR)
            .certify("reconstruction", rec)
            .certify("reconstruction_b", rec_b)
            .certify("rank", rank)
            .certify("t", t)
            .certify("rows", rows as f64))
    };
    if target_rank == current {
        return finish(m.clone(), 0.0, 0);
    }
    if d_a < 2 || d_b < 2 {
        return Err(Error::InvalidInput(format!(
            "rank cannot change on {d_a}⊗{d_b}: both factors need dimension at least 2"
        )));
    }
    let shift = kron(&cyclic_shift(d_a), &cyclic_shift(d_b));
    let base = {
        let f = frobenius(m);
        if f > 0.0 {
            f
        } else {
            1.0
        }
    };
    for rows in (target_rank - current).max(1)..=n {
        let mut n_j = shift.clone();
        for r in rows..n {
            n_j.row_mut(r).fill(ZERO);
        }
        for scale in scale_schedule() {
            let t = scale * base;
            let mt = m + &n_j * C64::new(t, 0.0);
            let s = singular_values(&mt)?;
            let rank = rank_from_singular_values(&s, &tol);
            if rank == target_rank && s[target_rank - 1] > RANK_SEPARATION * s[0] {
                return finish(mt, t, rows);
            }
            if rank < target_rank && rank == rank_from_singular_values(&singular_values(&n_j)?, &tol) + current {
                // generic rank for this row count is already below target
                break;
            }
        }
    }
    Err(Error::Construction(format!(
        "no perturbation reached rank {target_rank} after {MAX_RANK_RETRIES} scales per row count"
    )))
}

/// `max(rank tr_B M, rank tr_A M) <= rank(M) · min(d_A, d_B)`.
pub fn check_dimension_constraint(m: &DenseMatrix, space: &TensorSpace) -> Result<InequalityReport> {
    let (d_a, d_b) = bipartite_dims(space)?;
    space.check_matrix(m)?;
    let tol = Tolerance::default();
    let rank_a = rank_tol(&marginal(m, space, 0)?, &tol)?;
    let rank_b = rank_tol(&marginal(m, space, 1)?, &tol)?;
    let rank_m = rank_tol(m, &tol)?;
    let lhs = rank_a.max(rank_b) as f64;
    let rhs = (rank_m * d_a.min(d_b)) as f64;
    Ok(InequalityReport::new("dimension_constraint", lhs, rhs, 0.0)
        .with("rank_a", rank_a as f64)
        .with("rank_b", rank_b as f64)
        .with("rank_m", rank_m as f64))
}
