//! Checkers for norm inequalities between a matrix on `d_1 ⊗ … ⊗ d_n` and its
//! single-factor marginals `M_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    abs_matrix, frobenius, normality_residual, rank_tol, singular_values, trace, DenseMatrix,
    Tolerance,
};
use crate::norms::{norm, submajorization_margin, NormSpec, MAJORIZATION_TOL};
use crate::report::InequalityReport;
use crate::tensor::{embed_factor, kronecker_sum, marginal, marginals, TensorSpace};

fn rank_of(m: &DenseMatrix) -> Result<usize> {
    rank_tol(m, &Tolerance::default())
}

fn equal_dim(space: &TensorSpace) -> Result<usize> {
    space.equal_dim().ok_or_else(|| {
        Error::Dimension(format!(
            "local dimensions {:?} must all be equal",
            space.dims()
        ))
    })
}

fn bipartite(space: &TensorSpace) -> Result<()> {
    if space.len() != 2 {
        return Err(Error::Dimension(format!(
            "expected a bipartite space, got {:?}",
            space.dims()
        )));
    }
    Ok(())
}

fn sum_of_marginal_norms(m: &DenseMatrix, space: &TensorSpace, spec: &NormSpec) -> Result<f64> {
    marginals(m, space)?.iter().map(|mi| norm(mi, spec)).sum()
}

fn spec_constants(report: InequalityReport, spec: &NormSpec) -> InequalityReport {
    match *spec {
        NormSpec::Schatten { p } => report.with("p", p),
        NormSpec::KyFan { k } => report.with("k", k as f64),
    }
}

/// Singular values of `Σ C_(i)` against those of `Σ |C_(i)|`. The report is
/// taken at the partial sum with the least slack.
pub fn check_kron_majorization(cs: &[DenseMatrix], space: &TensorSpace) -> Result<InequalityReport> {
    let sum = kronecker_sum(cs, space)?;
    let mut abs_sum = DenseMatrix::zeros(space.total(), space.total());
    for (i, c) in cs.iter().enumerate() {
        abs_sum += embed_factor(&abs_matrix(c)?, space, i)?;
    }
    let lhs = singular_values(&sum)?;
    let rhs = singular_values(&abs_sum)?;
    let (_, index, sx, sy) = submajorization_margin(&lhs, &rhs);
    Ok(InequalityReport::new("kron_majorization", sx, sy, MAJORIZATION_TOL)
        .with("index", index as f64 + 1.0)
        .with("n", space.len() as f64))
}

/// `ν = |||E||| · |||1_r|||*` for the supported families.
pub fn individual_nu(spec: &NormSpec, r: usize) -> f64 {
    let r = r as f64;
    match *spec {
        NormSpec::Schatten { p } if p.is_infinite() => r,
        NormSpec::Schatten { p } => r.powf(1.0 - 1.0 / p),
        NormSpec::KyFan { k } => (r / k as f64).max(1.0),
    }
}

/// `|||M_i||| <= ν |||M|||`, one report per factor.
pub fn check_individual_bound(
    m: &DenseMatrix,
    space: &TensorSpace,
    spec: &NormSpec,
) -> Result<Vec<InequalityReport>> {
    spec.validate()?;
    space.check_matrix(m)?;
    let r = rank_of(m)?;
    let nu = individual_nu(spec, r);
    let total = norm(m, spec)?;
    (0..space.len())
        .map(|i| {
            let lhs = norm(&marginal(m, space, i)?, spec)?;
            let report = InequalityReport::relative(format!("individual_bound[{i}]"), lhs, nu * total)
                .with("nu", nu)
                .with("r", r as f64)
                .with("factor", i as f64);
            Ok(spec_constants(report, spec))
        })
        .collect()
}

/// `Σ |||M_i||| <= c ‖M‖_1 + κ |||M|||`.
pub fn check_template(
    m: &DenseMatrix,
    space: &TensorSpace,
    spec: &NormSpec,
    c: f64,
    kappa: f64,
) -> Result<InequalityReport> {
    spec.validate()?;
    space.check_matrix(m)?;
    if !(c >= 0.0 && c.is_finite()) || !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "c = {c} and kappa = {kappa} must be finite and non-negative"
        )));
    }
    let lhs = sum_of_marginal_norms(m, space, spec)?;
    let rhs = c * norm(m, &NormSpec::trace_norm())? + kappa * norm(m, spec)?;
    let report = InequalityReport::relative("template", lhs, rhs)
        .with("c", c)
        .with("kappa", kappa)
        .with("n", space.len() as f64)
        .with("r", rank_of(m)? as f64);
    Ok(spec_constants(report, spec))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum KyFanVariant {
    General,
    N2,
    /// Requires `rank(M) <= k`.
    LowRank { c: f64 },
}

/// `κ̃ = n d^{n-1} - (d^n - (d-k)^n)/k` for `k <= d`, `(n-1) k^{n-1}` otherwise.
pub fn kappa_tilde(n: usize, d: usize, k: usize) -> f64 {
    let (nf, df, kf) = (n as f64, d as f64, k as f64);
    let n_i = n as i32;
    if k <= d {
        nf * df.powi(n_i - 1) - (df.powi(n_i) - (df - kf).powi(n_i)) / kf
    } else {
        (nf - 1.0) * kf.powi(n_i - 1)
    }
}

pub fn check_kyfan_family(
    m: &DenseMatrix,
    space: &TensorSpace,
    k: usize,
    variant: KyFanVariant,
) -> Result<InequalityReport> {
    let spec = NormSpec::kyfan(k)?;
    space.check_matrix(m)?;
    let d = equal_dim(space)?;
    let n = space.len();
    let lhs = sum_of_marginal_norms(m, space, &spec)?;
    let trace_norm = norm(m, &NormSpec::trace_norm())?;
    let kf_norm = norm(m, &spec)?;
    let r = rank_of(m)?;
    let report = match variant {
        KyFanVariant::General => {
            let kt = kappa_tilde(n, d, k);
            InequalityReport::relative("kyfan_general", lhs, trace_norm + kt * kf_norm)
                .with("kappa_tilde", kt)
        }
        KyFanVariant::N2 => {
            if n != 2 {
                return Err(Error::Dimension(format!(
                    "the two-factor variant needs n = 2, got {n}"
                )));
            }
            InequalityReport::relative("kyfan_n2", lhs, trace_norm + k as f64 * kf_norm)
                .with("kappa_tilde", k as f64)
        }
        KyFanVariant::LowRank { c } => {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::InvalidInput(format!("c = {c} must be non-negative")));
            }
            if r > k {
                return Err(Error::RankMismatch {
                    expected: k,
                    actual: r,
                });
            }
            let kappa = (n as f64 - c).max(0.0);
            InequalityReport::relative("kyfan_lowrank", lhs, c * trace_norm + kappa * kf_norm)
                .with("c", c)
                .with("kappa", kappa)
        }
    };
    Ok(report
        .with("k", k as f64)
        .with("n", n as f64)
        .with("d", d as f64)
        .with("r", r as f64))
}

/// `x^γ` through logarithms; zero stays zero.
fn pow_gamma(x: f64, gamma: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (gamma * x.ln()).exp()
    }
}

/// (a) `Σ ‖M_i‖_p <= (n-1)‖M‖_1 + ‖M‖_p` and
/// (b) `Σ ‖M_i‖_p^γ <= (1 + r^{γ(1-1/p)}(n-1)) ‖M‖_p^γ`.
///
/// When `‖M‖_p^γ` would overflow, (b) is evaluated after dividing both sides
/// by it, and the report carries a note saying so.
pub fn check_audenaert_family(
    m: &DenseMatrix,
    space: &TensorSpace,
    p: f64,
    gamma: f64,
) -> Result<(InequalityReport, InequalityReport)> {
    let spec = NormSpec::schatten(p)?;
    space.check_matrix(m)?;
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma = {gamma} must be finite and at least 1")));
    }
    let n = space.len();
    let nf = n as f64;
    let norms: Vec<f64> = marginals(m, space)?
        .iter()
        .map(|mi| norm(mi, &spec))
        .collect::<Result<_>>()?;
    let mp = norm(m, &spec)?;
    let m1 = norm(m, &NormSpec::trace_norm())?;
    let a = InequalityReport::relative("audenaert", norms.iter().sum(), (nf - 1.0) * m1 + mp)
        .with("p", p)
        .with("n", nf);

    let r = rank_of(m)?;
    let exponent = if p.is_infinite() { gamma } else { gamma * (1.0 - 1.0 / p) };
    let factor = 1.0 + pow_gamma(r as f64, exponent) * (nf - 1.0);
    let overflow = mp > 0.0 && gamma * mp.ln() > 600.0;
    let unit = if overflow { mp } else { 1.0 };
    let lhs_b: f64 = norms.iter().map(|x| pow_gamma(x / unit, gamma)).sum();
    let rhs_b = factor * pow_gamma(mp / unit, gamma);
    let mut b = InequalityReport::relative("audenaert_rank", lhs_b, rhs_b)
        .with("p", p)
        .with("n", nf)
        .with("gamma", gamma)
        .with("r", r as f64)
        .with("factor", factor);
    if overflow {
        b = b.with_note("both sides divided by the p-norm of M raised to gamma");
    }
    Ok((a, b))
}

/// `Σ ‖M_i‖_p <= n d^{(n-1)(1-1/p)} ‖M‖_p` for equal local dimension `d`.
pub fn check_large_rank(m: &DenseMatrix, space: &TensorSpace, p: f64) -> Result<InequalityReport> {
    let spec = NormSpec::schatten(p)?;
    space.check_matrix(m)?;
    let d = equal_dim(space)?;
    let n = space.len();
    let exponent = if p.is_infinite() {
        (n - 1) as f64
    } else {
        (n - 1) as f64 * (1.0 - 1.0 / p)
    };
    let factor = n as f64 * (d as f64).powf(exponent);
    let lhs = sum_of_marginal_norms(m, space, &spec)?;
    Ok(
        InequalityReport::relative("large_rank", lhs, factor * norm(m, &spec)?)
            .with("p", p)
            .with("n", n as f64)
            .with("d", d as f64)
            .with("factor", factor),
    )
}

/// `‖A‖_2^γ + ‖B‖_2^γ <= ‖M‖_2^γ + |tr M|^γ` for rank-one `M`, `γ >= 2`.
pub fn check_rank_one_gamma(m: &DenseMatrix, space: &TensorSpace, gamma: f64) -> Result<InequalityReport> {
    bipartite(space)?;
    space.check_matrix(m)?;
    if !(gamma >= 2.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma = {gamma} must be finite and at least 2")));
    }
    let r = rank_of(m)?;
    if r != 1 {
        return Err(Error::RankMismatch {
            expected: 1,
            actual: r,
        });
    }
    let a = frobenius(&marginal(m, space, 0)?);
    let b = frobenius(&marginal(m, space, 1)?);
    let lhs = pow_gamma(a, gamma) + pow_gamma(b, gamma);
    let rhs = pow_gamma(frobenius(m), gamma) + pow_gamma(trace(m).norm(), gamma);
    Ok(InequalityReport::relative("rank_one_gamma", lhs, rhs).with("gamma", gamma))
}

/// `‖M_A‖_2^2 + ‖M_B‖_2^2 <= r ‖M‖_2^2 + |tr M|^2 / r` for normal `M` of rank `r`.
pub fn check_normal_rank_r(m: &DenseMatrix, space: &TensorSpace) -> Result<InequalityReport> {
    bipartite(space)?;
    space.check_matrix(m)?;
    let f = frobenius(m);
    let residual = normality_residual(m);
    if residual > 1e-9 * (1.0 + f * f) {
        return Err(Error::NotNormal { residual });
    }
    let r = rank_of(m)?;
    let a = frobenius(&marginal(m, space, 0)?);
    let b = frobenius(&marginal(m, space, 1)?);
    let rhs = if r == 0 {
        0.0
    } else {
        r as f64 * f * f + trace(m).norm_sqr() / r as f64
    };
    Ok(InequalityReport::relative("normal_rank_r", a * a + b * b, rhs).with("r", r as f64))
}
