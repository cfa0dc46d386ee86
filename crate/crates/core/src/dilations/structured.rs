//! Single-matrix dilations with a prescribed structure.

use std::f64::consts::FRAC_PI_2;

use super::{residual, DilationResult, Structure};
use crate::error::{Error, Result};
use crate::matrix::{
    ensure_square, frobenius, identity, kron, matrix_unit, normality_residual, power, rank_tol,
    trace, unitarity_residual, DenseMatrix, DenseVector, Svd, Tolerance, C64, ONE, ZERO,
};
use crate::tensor::{lift, TensorSpace};

/// Traces within this distance of a positive integer count as integral.
pub const INTEGER_TRACE_TOL: f64 = 1e-9;

fn trace_is_zero(a: &DenseMatrix) -> bool {
    trace(a).norm() <= 1e-9 * (1.0 + frobenius(a))
}

/// `(a + a*)/2 ⊗ e_11 + (a - a*)/2 ⊗ e_22` on `d ⊗ 2`.
pub fn normal_dilation(a: &DenseMatrix) -> Result<DilationResult> {
    let d = ensure_square(a, "normal dilation target")?;
    let hermitian = (a + a.adjoint()).scale(0.5);
    let skew = (a - a.adjoint()).scale(0.5);
    let m = kron(&hermitian, &matrix_unit(2, 0, 0)) + kron(&skew, &matrix_unit(2, 1, 1));
    let space = TensorSpace::bipartite(d, 2)?;
    let normality = normality_residual(&m);
    let out = DilationResult::new(m, space, Structure::Normal).certify("normality", normality);
    let rec = residual(&out.system_marginal()?, a);
    Ok(out.certify("reconstruction", rec))
}

/// Smallest even ancilla dimension admitted by [`unitary_dilation`].
pub fn min_unitary_ancilla(a: &DenseMatrix) -> Result<usize> {
    let sigma1 = Svd::new(a)?.s.first().copied().unwrap_or(0.0);
    let half = (sigma1 / 2.0).ceil().max(1.0) as usize;
    Ok(2 * half)
}

/// Unitary dilation on `d ⊗ m` built from the singular value decomposition
/// `a = U diag(s) V`: with `φ_k = arccos(s_k/m)` the blocks
/// `W_± = U diag(e^{±iφ_k}) V` alternate along the ancilla diagonal.
pub fn unitary_dilation(a: &DenseMatrix, m_ancilla: usize) -> Result<DilationResult> {
    let d = ensure_square(a, "unitary dilation target")?;
    let svd = Svd::new(a)?;
    let sigma1 = svd.s.first().copied().unwrap_or(0.0);
    let required = min_unitary_ancilla(a)?;
    if m_ancilla == 0 || m_ancilla % 2 == 1 || (m_ancilla as f64) < sigma1 * (1.0 - 1e-12) {
        return Err(Error::AncillaTooSmall {
            required,
            given: m_ancilla,
        });
    }
    let m = m_ancilla as f64;
    let phases: Vec<f64> = svd.s.iter().map(|s| (s / m).clamp(-1.0, 1.0).acos()).collect();
    let block = |sign: f64| -> DenseMatrix {
        let mut u = svd.u.clone();
        for (k, phi) in phases.iter().enumerate() {
            let col = u.column(k) * C64::from_polar(1.0, sign * phi);
            u.set_column(k, &col);
        }
        u * &svd.v_t
    };
    let (w_plus, w_minus) = (block(1.0), block(-1.0));
    let mut big = DenseMatrix::zeros(d * m_ancilla, d * m_ancilla);
    for j in 0..m_ancilla / 2 {
        big += kron(&w_plus, &matrix_unit(m_ancilla, 2 * j, 2 * j));
        big += kron(&w_minus, &matrix_unit(m_ancilla, 2 * j + 1, 2 * j + 1));
    }
    let space = TensorSpace::bipartite(d, m_ancilla)?;
    let unitarity = unitarity_residual(&big);
    let out = DilationResult::new(big, space, Structure::Unitary).certify("unitarity", unitarity);
    let rec = residual(&out.system_marginal()?, a);
    Ok(out.certify("reconstruction", rec))
}

#[derive(Debug, Clone)]
pub struct ConstantDiagonal {
    pub unitary: DenseMatrix,
    /// `unitary* · a · unitary`, every diagonal entry equal to `tr(a)/d`.
    pub transformed: DenseMatrix,
}

/// Unitary similarity to a matrix with constant main diagonal.
///
/// The shifted matrix `b = a - (tr a / d)·1` has `0` in its numerical range.
/// Each step finds a unit vector `x` with `x* c x = 0` for the current
/// trailing compression `c`, makes it the next basis vector and deflates;
/// `d - 1` steps equalize the whole diagonal.
pub fn constant_diagonal_form(a: &DenseMatrix) -> Result<ConstantDiagonal> {
    let d = ensure_square(a, "constant-diagonal input")?;
    let mean = trace(a) / d as f64;
    let shifted = a - identity(d) * mean;
    let mut unitary = identity(d);
    for k in 0..d.saturating_sub(1) {
        let current = unitary.adjoint() * &shifted * &unitary;
        let compression = current.view((k, k), (d - k, d - k)).into_owned();
        let x = zero_of_numerical_range(&compression);
        let q = unitary_with_first_column(&x);
        let mut step = identity(d);
        step.view_mut((k, k), (d - k, d - k)).copy_from(&q);
        unitary *= step;
    }
    let transformed = unitary.adjoint() * a * &unitary;
    Ok(ConstantDiagonal {
        unitary,
        transformed,
    })
}

/// Unit vector `x` with `x* c x ≈ tr(c)/s` for a square `c` of size `s`.
///
/// Diagonal entries `c_kk` are attained by basis vectors. They are merged one
/// at a time: the running point moves along the segment towards `c_kk` to the
/// running average, which stays inside the numerical range of the span.
fn zero_of_numerical_range(c: &DenseMatrix) -> DenseVector {
    let s = c.nrows();
    let scale = 1.0 + frobenius(c);
    let basis = |k: usize| {
        let mut e = DenseVector::zeros(s);
        e[k] = ONE;
        e
    };
    let mean = trace(c) / s as f64;
    if (c[(0, 0)] - mean).norm() <= 1e-15 * scale {
        return basis(0);
    }
    let mut x = basis(0);
    let mut point = c[(0, 0)];
    for k in 1..s {
        let target = (point * k as f64 + c[(k, k)]) / (k + 1) as f64;
        x = point_on_segment(c, &x, point, &basis(k), c[(k, k)], target);
        point = quadratic_form(c, &x);
    }
    x
}

fn quadratic_form(c: &DenseMatrix, x: &DenseVector) -> C64 {
    (x.adjoint() * c * x)[(0, 0)]
}

/// Given orthonormal `u`, `v` with `u*cu = pu`, `v*cv = pv` and `target` on the
/// segment `[pu, pv]`, returns a unit vector in `span(u, v)` attaining `target`.
///
/// After rotating so that the segment lies on the real axis, the phase of the
/// `v` component is chosen so that the imaginary part stays zero along the
/// whole family `u + t e^{iφ} v`; the real part then changes sign between
/// `t = 0` and `t = ∞` and its root solves a quadratic.
fn point_on_segment(
    c: &DenseMatrix,
    u: &DenseVector,
    pu: C64,
    v: &DenseVector,
    pv: C64,
    target: C64,
) -> DenseVector {
    let diff = pv - pu;
    if diff.norm() == 0.0 {
        return u.clone();
    }
    let rot = C64::from_polar(1.0, -diff.arg());
    let h_u = (rot * (pu - target)).re;
    let h_v = (rot * (pv - target)).re;
    if h_u >= 0.0 {
        return u.clone();
    }
    if h_v <= 0.0 {
        return v.clone();
    }
    let s = c.nrows();
    let b = (c - identity(s) * target) * rot;
    let herm = (&b + b.adjoint()).scale(0.5);
    let skew = (&b - b.adjoint()) * C64::new(0.0, -0.5);
    let cross_k = (u.adjoint() * &skew * v)[(0, 0)];
    let phi = if cross_k.norm() > 0.0 { FRAC_PI_2 - cross_k.arg() } else { 0.0 };
    let phase = C64::from_polar(1.0, phi);
    let lin = (phase * (u.adjoint() * &herm * v)[(0, 0)]).re;
    // h_v t^2 + 2 lin t + h_u = 0 with h_u < 0 < h_v.
    let disc = (lin * lin - h_u * h_v).sqrt();
    let t = if lin >= 0.0 { -h_u / (lin + disc) } else { (disc - lin) / h_v };
    let x = u + v * (phase * t);
    let n = x.norm();
    x.unscale(n)
}

/// Unitary whose first column is the unit vector `x` (Householder reflection
/// composed with a phase).
fn unitary_with_first_column(x: &DenseVector) -> DenseMatrix {
    let s = x.len();
    let x0 = x[0];
    let alpha = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
    let mut w = -x.clone();
    w[0] += alpha;
    let wn2 = w.norm_squared();
    let mut phase = identity(s);
    phase[(0, 0)] = alpha;
    if wn2 <= 1e-30 {
        return phase;
    }
    let reflector = identity(s) - (&w * w.adjoint()) * C64::new(2.0 / wn2, 0.0);
    reflector * phase
}

/// Nilpotent dilation on `d ⊗ 2` of a traceless matrix.
///
/// In a basis where `a` has zero diagonal, `a = L + U` with strictly lower and
/// strictly upper parts; `M = L ⊗ e_11 + U ⊗ e_22` has nilpotent blocks.
pub fn nilpotent_dilation(a: &DenseMatrix) -> Result<DilationResult> {
    let d = ensure_square(a, "nilpotent dilation target")?;
    if !trace_is_zero(a) {
        return Err(Error::NonzeroTrace {
            trace: format!("{}", trace(a)),
        });
    }
    let form = constant_diagonal_form(a)?;
    let t = &form.transformed;
    let lower = DenseMatrix::from_fn(d, d, |i, j| if i > j { t[(i, j)] } else { ZERO });
    let upper = DenseMatrix::from_fn(d, d, |i, j| if i < j { t[(i, j)] } else { ZERO });
    let v = &form.unitary;
    let lower = v * lower * v.adjoint();
    let upper = v * upper * v.adjoint();
    let m = kron(&lower, &matrix_unit(2, 0, 0)) + kron(&upper, &matrix_unit(2, 1, 1));
    let space = TensorSpace::bipartite(d, 2)?;
    let nilpotency = frobenius(&power(&m, d));
    let out = DilationResult::new(m, space, Structure::Nilpotent).certify("nilpotency", nilpotency);
    let rec = residual(&out.system_marginal()?, a);
    Ok(out.certify("reconstruction", rec))
}

/// Idempotent dilation on `d ⊗ r ⊗ t` with `r = rank(a)` and `t = tr(a)`.
///
/// `a/t = X_1 X_2*` from the SVD; `φ = (X_1 ⊗ 1)Ω`, `ψ = (X_2 ⊗ 1)Ω` satisfy
/// `<ψ, φ> = tr(a)/t = 1`, so `M = |φ><ψ| ⊗ 1_t` is idempotent. A zero target
/// gets the zero dilation on `d ⊗ 1`. A nonzero traceless target is rejected:
/// an idempotent with zero trace is zero.
pub fn idempotent_dilation(a: &DenseMatrix) -> Result<DilationResult> {
    let d = ensure_square(a, "idempotent dilation target")?;
    let tol = Tolerance::default();
    let rank = rank_tol(a, &tol)?;
    if rank == 0 {
        let space = TensorSpace::bipartite(d, 1)?;
        let out = DilationResult::new(DenseMatrix::zeros(d, d), space, Structure::Idempotent)
            .certify("idempotency", 0.0);
        let rec = residual(&out.system_marginal()?, a);
        return Ok(out.certify("reconstruction", rec));
    }
    let tr = trace(a);
    let nearest = tr.re.round();
    if nearest < 1.0 || (tr - C64::new(nearest, 0.0)).norm() > INTEGER_TRACE_TOL {
        return Err(Error::NonIntegerTrace {
            trace: format!("{tr}"),
            nearest: nearest as i64,
        });
    }
    let t = nearest as usize;
    let svd = Svd::new(a)?;
    let mut x1 = svd.u.columns(0, rank).into_owned();
    let mut x2_adj = svd.v_t.rows(0, rank).into_owned();
    for k in 0..rank {
        let w = (svd.s[k] / t as f64).sqrt();
        x1.column_mut(k).scale_mut(w);
        x2_adj.row_mut(k).scale_mut(w);
    }
    let x2 = x2_adj.adjoint();
    let phi = lift(&x1);
    let psi = lift(&x2);
    let overlap = psi.dotc(&phi);
    let phi = phi.unscale(1.0).map(|z| z / overlap);
    let rank_one = &phi * psi.adjoint();
    let m = kron(&rank_one, &identity(t));
    let space = TensorSpace::new(vec![d, rank, t])?;
    let idempotency = frobenius(&(&m * &m - &m));
    let out = DilationResult::new(m, space, Structure::Idempotent)
        .certify("idempotency", idempotency)
        .certify("overlap_defect", (overlap - ONE).norm());
    let rec = residual(&out.system_marginal()?, a);
    Ok(out.certify("reconstruction", rec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{from_real_rows, real_diag, singular_values};
    use crate::random::Sampler;

    #[test]
    fn normal_of_hermitian_has_empty_skew_block() {
        let mut s = Sampler::new(1);
        let a = s.hermitian(3);
        let r = normal_dilation(&a).unwrap();
        assert!(frobenius(&(&r.m - kron(&a, &matrix_unit(2, 0, 0)))) < 1e-15);
        assert!(r.certificate("reconstruction").unwrap() < 1e-14);
    }

    #[test]
    fn normal_of_shift() {
        let a = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let r = normal_dilation(&a).unwrap();
        assert_eq!(r.m.shape(), (4, 4));
        assert!(r.certificate("normality").unwrap() <= 1e-12);
        assert!(r.certificate("reconstruction").unwrap() <= 1e-14);
    }

    #[test]
    fn normal_of_anti_hermitian_has_empty_hermitian_block() {
        let mut s = Sampler::new(2);
        let h = s.hermitian(3);
        let a = &h * C64::new(0.0, 1.0);
        let r = normal_dilation(&a).unwrap();
        assert!(frobenius(&(&r.m - kron(&a, &matrix_unit(2, 1, 1)))) < 1e-15);
    }

    #[test]
    fn unitary_of_zero_uses_quarter_turns() {
        let a = DenseMatrix::zeros(2, 2);
        let r = unitary_dilation(&a, 2).unwrap();
        assert!(r.certificate("unitarity").unwrap() < 1e-14);
        assert!(r.certificate("reconstruction").unwrap() < 1e-14);
        let block = r.m.view((0, 0), (1, 1))[(0, 0)];
        let _ = block;
    }

    #[test]
    fn unitary_of_scaled_identity_is_identity() {
        let a = identity(2) * C64::new(2.0, 0.0);
        let r = unitary_dilation(&a, 2).unwrap();
        assert!(frobenius(&(&r.m - identity(4))) < 1e-14);
    }

    #[test]
    fn unitary_random_target() {
        let mut s = Sampler::new(3);
        let mut a = s.ginibre(3, 3);
        let sigma1 = singular_values(&a).unwrap()[0];
        a *= C64::new(1.8 / sigma1, 0.0);
        let r = unitary_dilation(&a, 2).unwrap();
        assert!(r.certificate("unitarity").unwrap() <= 1e-9);
        assert!(r.certificate("reconstruction").unwrap() <= 1e-9);
    }

    #[test]
    fn unitary_rejects_bad_ancilla() {
        let a = identity(2) * C64::new(3.0, 0.0);
        match unitary_dilation(&a, 2) {
            Err(Error::AncillaTooSmall { required, .. }) => assert_eq!(required, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(unitary_dilation(&identity(2), 3).is_err());
        assert_eq!(min_unitary_ancilla(&DenseMatrix::zeros(2, 2)).unwrap(), 2);
    }

    #[test]
    fn constant_diagonal_of_constant_diagonal_is_identity() {
        let a = from_real_rows(&[&[1.0, 2.0, 0.0], &[3.0, 1.0, 4.0], &[0.0, 5.0, 1.0]]);
        let form = constant_diagonal_form(&a).unwrap();
        assert_eq!(form.unitary, identity(3));
    }

    #[test]
    fn constant_diagonal_of_pauli_z() {
        // Oracle: the real Givens rotation by π/4 turns diag(1,-1) into [[0,1],[1,0]],
        // so any zero-diagonal unitary conjugate has off-diagonal moduli 1.
        let a = real_diag(&[1.0, -1.0]);
        let form = constant_diagonal_form(&a).unwrap();
        let t = &form.transformed;
        assert!(t[(0, 0)].norm() < 1e-15 && t[(1, 1)].norm() < 1e-15);
        assert!((t[(0, 1)].norm() - 1.0).abs() < 1e-14);
        assert!((t[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert!(unitarity_residual(&form.unitary) < 1e-14);
    }

    #[test]
    fn constant_diagonal_random() {
        let mut s = Sampler::new(4);
        for d in 1..=8 {
            let a = s.ginibre(d, d);
            let form = constant_diagonal_form(&a).unwrap();
            let mean = trace(&a) / d as f64;
            let dev = form
                .transformed
                .diagonal()
                .iter()
                .map(|z| (z - mean).norm())
                .fold(0.0, f64::max);
            assert!(dev <= 1e-10, "d={d} dev={dev}");
            assert!(unitarity_residual(&form.unitary) <= 1e-10);
            let back = &form.unitary * &form.transformed * form.unitary.adjoint();
            assert!(frobenius(&(back - &a)) <= 1e-10);
        }
    }

    #[test]
    fn nilpotent_of_strictly_upper() {
        let a = from_real_rows(&[&[0.0, 2.0, 1.0], &[0.0, 0.0, 3.0], &[0.0, 0.0, 0.0]]);
        let r = nilpotent_dilation(&a).unwrap();
        assert!(frobenius(&(&r.m - kron(&a, &matrix_unit(2, 1, 1)))) < 1e-15);
    }

    #[test]
    fn nilpotent_of_pauli_z() {
        let a = real_diag(&[1.0, -1.0]);
        let r = nilpotent_dilation(&a).unwrap();
        assert_eq!(r.m.shape(), (4, 4));
        assert!(frobenius(&power(&r.m, 4)) < 1e-14);
        assert!(r.certificate("reconstruction").unwrap() < 1e-14);
    }

    #[test]
    fn nilpotent_random_traceless() {
        let mut s = Sampler::new(5);
        let a = s.traceless(3);
        let r = nilpotent_dilation(&a).unwrap();
        assert!(frobenius(&power(&r.m, 6)) <= 1e-8);
        assert!(r.certificate("reconstruction").unwrap() <= 1e-10);
        assert!(matches!(
            nilpotent_dilation(&identity(2)),
            Err(Error::NonzeroTrace { .. })
        ));
    }

    #[test]
    fn idempotent_of_projection() {
        let mut s = Sampler::new(6);
        let u = s.unitary(4);
        let v = u.columns(0, 2).into_owned();
        let p = &v * v.adjoint();
        let r = idempotent_dilation(&p).unwrap();
        assert_eq!(r.space.dims(), &[4, 2, 2]);
        assert!(r.certificate("idempotency").unwrap() <= 1e-10);
        assert!(r.certificate("reconstruction").unwrap() <= 1e-10);
    }

    #[test]
    fn idempotent_of_zero_and_rejections() {
        let r = idempotent_dilation(&DenseMatrix::zeros(2, 2)).unwrap();
        assert_eq!(frobenius(&r.m), 0.0);
        match idempotent_dilation(&real_diag(&[1.0, 0.5])) {
            Err(Error::NonIntegerTrace { nearest, .. }) => assert_eq!(nearest, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(idempotent_dilation(&real_diag(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn idempotent_of_diag_two_one() {
        let a = real_diag(&[2.0, 1.0]);
        let r = idempotent_dilation(&a).unwrap();
        assert_eq!(r.space.dims(), &[2, 2, 3]);
        assert!(r.certificate("idempotency").unwrap() <= 1e-9);
        assert!(r.certificate("reconstruction").unwrap() <= 1e-12);
    }
}
