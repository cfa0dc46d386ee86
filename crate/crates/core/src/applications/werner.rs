use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::MatrixJson;
use crate::matrix::{frobenius, identity, kron, rank_tol, trace, DenseMatrix, Tolerance, C64};
use crate::random::Sampler;
use crate::report::InequalityReport;
use crate::tensor::{flip_operator, marginal, TensorSpace};

/// Tolerance used to re-check a candidate violation before reporting it.
pub const CERTIFICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WernerParams {
    pub d: usize,
    pub alpha: f64,
}

impl WernerParams {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput(format!("local dimension {d} must be at least 2")));
        }
        if !(alpha.abs() <= 1.0) {
            return Err(Error::InvalidInput(format!("alpha = {alpha} must lie in [-1, 1]")));
        }
        Ok(Self { d, alpha })
    }
}

/// `(1 + α F) / (d² + α d)`.
pub fn werner_state(p: &WernerParams) -> DenseMatrix {
    let d = p.d as f64;
    let norm = d * d + p.alpha * d;
    (identity(p.d * p.d) + flip_operator(p.d) * C64::new(p.alpha, 0.0)).unscale(norm)
}

fn two_copy_sides(m: &DenseMatrix, d: usize, alpha: f64) -> Result<(f64, f64)> {
    let space = TensorSpace::bipartite(d, d)?;
    let a = frobenius(&marginal(m, &space, 0)?);
    let b = frobenius(&marginal(m, &space, 1)?);
    let f = frobenius(m);
    let w = alpha.abs();
    Ok((a * a + b * b, w * trace(m).norm_sqr() + f * f / w))
}

fn local_dim(m: &DenseMatrix) -> Result<usize> {
    let n = m.nrows();
    let d = (n as f64).sqrt().round() as usize;
    if m.ncols() != n || d * d != n || d < 2 {
        return Err(Error::Dimension(format!(
            "{}x{} is not a matrix on d⊗d with d >= 2",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(d)
}

/// `‖M_A‖_2² + ‖M_B‖_2² <= |α| |tr M|² + ‖M‖_2² / |α|` for `α < 0`.
///
/// For rank-two `M` a failed verdict would witness two-copy distillability.
pub fn check_two_copy(m: &DenseMatrix, alpha: f64) -> Result<InequalityReport> {
    if !(-1.0..0.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must lie in [-1, 0)")));
    }
    let d = local_dim(m)?;
    let (lhs, rhs) = two_copy_sides(m, d, alpha)?;
    let rank = rank_tol(m, &Tolerance::default())?;
    Ok(InequalityReport::relative("two_copy", lhs, rhs)
        .with("alpha", alpha)
        .with("d", d as f64)
        .with("r", rank as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub seed: u64,
    pub starts: usize,
    pub iterations: usize,
    /// Initial step; it grows by 1.2 after an accepted step and halves otherwise.
    pub step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            starts: 64,
            iterations: 500,
            step: 0.1,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.iterations == 0 {
            return Err(Error::InvalidInput("starts and iterations must be at least 1".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidInput(format!("step {} must be positive", self.step)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationCertificate {
    pub params: WernerParams,
    pub matrix: MatrixJson,
    pub slack: f64,
    pub seed: u64,
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Report for the incumbent, normalized to `‖M‖_2 = 1`.
    pub report: InequalityReport,
    pub incumbent: DenseMatrix,
    /// Largest ratio lhs/rhs seen; a value above 1 is a violation.
    pub best_ratio: f64,
    /// Present only when the incumbent fails its verdict and a recheck of the
    /// archived matrix at [`CERTIFICATE_TOL`].
    pub certificate: Option<ViolationCertificate>,
}

/// Rank-two `M = U V*` with `U, V` of shape `d² × 2`; the columns are the
/// lifted factor matrices `X_1, Y_1` and `X_2, Y_2`.
struct RankTwo {
    d: usize,
    alpha: f64,
}

struct Evaluation {
    ratio: f64,
    grad_u: DenseMatrix,
    grad_v: DenseMatrix,
}

impl RankTwo {
    fn ratio(&self, m: &DenseMatrix) -> f64 {
        let (lhs, rhs) = two_copy_sides(m, self.d, self.alpha).expect("shape fixed");
        if rhs > 0.0 {
            lhs / rhs
        } else {
            0.0
        }
    }

    /// Ratio and its Wirtinger gradients. With `G = ∂f/∂M̄`, the gradients in
    /// `U` and `V` are `G V` and `G* U`; `‖tr_B M‖²` has `G = A ⊗ 1`,
    /// `‖tr_A M‖²` has `G = 1 ⊗ B`, `|tr M|²` has `G = (tr M) 1`, `‖M‖²` has `G = M`.
    fn evaluate(&self, u: &DenseMatrix, v: &DenseMatrix) -> Evaluation {
        let d = self.d;
        let w = self.alpha.abs();
        let m = u * v.adjoint();
        let space = TensorSpace::bipartite(d, d).expect("d >= 2");
        let a = marginal(&m, &space, 0).expect("shape fixed");
        let b = marginal(&m, &space, 1).expect("shape fixed");
        let t = trace(&m);
        let f2 = m.norm_squared();
        let lhs = a.norm_squared() + b.norm_squared();
        let rhs = w * t.norm_sqr() + f2 / w;
        let ratio = lhs / rhs;
        let g_lhs = kron(&a, &identity(d)) + kron(&identity(d), &b);
        let g_rhs = identity(d * d) * (t * w) + m.unscale(w);
        let g = (g_lhs - g_rhs * C64::new(ratio, 0.0)).unscale(rhs);
        Evaluation {
            ratio,
            grad_u: &g * v,
            grad_v: g.adjoint() * u,
        }
    }

    fn normalize(u: &mut DenseMatrix, v: &mut DenseMatrix) {
        let nu = u.norm();
        let nv = v.norm();
        if nu > 0.0 {
            u.unscale_mut(nu);
        }
        if nv > 0.0 {
            v.unscale_mut(nv);
        }
    }

    fn start(&self, seed: u64, index: usize) -> (DenseMatrix, DenseMatrix) {
        let n = self.d * self.d;
        if index == 0 {
            // e_11 ⊗ (projector of rank 2), the extremal case of the constant 3
            let mut u = DenseMatrix::zeros(n, 2);
            u[(0, 0)] = C64::new(1.0, 0.0);
            u[(1, 1)] = C64::new(1.0, 0.0);
            return (u.clone(), u);
        }
        let mut rng = Sampler::substream(seed, index as u64);
        (rng.ginibre(n, 2), rng.ginibre(n, 2))
    }

    fn run(&self, seed: u64, index: usize, cfg: &SearchConfig) -> (f64, DenseMatrix) {
        let (mut u, mut v) = self.start(seed, index);
        Self::normalize(&mut u, &mut v);
        let mut eval = self.evaluate(&u, &v);
        let mut step = cfg.step;
        for _ in 0..cfg.iterations {
            let mut nu = &u + eval.grad_u.scale(step);
            let mut nv = &v + eval.grad_v.scale(step);
            Self::normalize(&mut nu, &mut nv);
            let next = self.evaluate(&nu, &nv);
            if next.ratio.is_finite() && next.ratio > eval.ratio {
                (u, v, eval) = (nu, nv, next);
                step *= 1.2;
            } else {
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
        }
        (eval.ratio, &u * v.adjoint())
    }
}

/// Multistart gradient ascent of lhs/rhs of the two-copy inequality over
/// rank-two matrices on `d ⊗ d`.
///
/// A ratio above one is a violation. Only a violation is conclusive: a
/// nonnegative minimum slack means the search found none, not that none exists.
pub fn search_two_copy_violation(d: usize, alpha: f64, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let params = WernerParams::new(d, alpha)?;
    if alpha >= 0.0 {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must be negative")));
    }
    cfg.validate()?;
    let problem = RankTwo { d, alpha };
    let runs: Vec<(f64, DenseMatrix)> = (0..cfg.starts)
        .into_par_iter()
        .map(|i| problem.run(cfg.seed, i, cfg))
        .collect();
    // first maximum in start order, so the outcome does not depend on scheduling
    let (best_ratio, incumbent) = runs
        .into_iter()
        .fold((f64::NEG_INFINITY, DenseMatrix::zeros(0, 0)), |acc, run| {
            if run.0 > acc.0 {
                run
            } else {
                acc
            }
        });
    let scale = frobenius(&incumbent);
    let incumbent = if scale > 0.0 { incumbent.unscale(scale) } else { incumbent };
    let report = check_two_copy(&incumbent, alpha)?
        .with("ratio", problem.ratio(&incumbent))
        .with("starts", cfg.starts as f64)
        .with("iterations", cfg.iterations as f64)
        .with_note("search result: a violation is conclusive, its absence is only evidence");
    let certificate = if report.verdict {
        None
    } else {
        // recheck the matrix exactly as it will be archived
        let matrix = MatrixJson::from_matrix(&incumbent).with_space(&TensorSpace::bipartite(d, d)?);
        let text = serde_json::to_string(&matrix).map_err(|e| Error::Json(e.to_string()))?;
        let reloaded = crate::json::parse_matrix(&text)?;
        let recheck = check_two_copy(&reloaded, alpha)?.with_tolerance(CERTIFICATE_TOL);
        (!recheck.verdict).then_some(ViolationCertificate {
            params,
            matrix,
            slack: recheck.slack,
            seed: cfg.seed,
            tolerance: CERTIFICATE_TOL,
        })
    };
    Ok(SearchOutcome {
        report,
        incumbent,
        best_ratio,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{eig_hermitian, hermitian_residual, matrix_unit};

    #[test]
    fn werner_examples() {
        let rho = werner_state(&WernerParams::new(3, 0.0).unwrap());
        assert!(frobenius(&(rho - identity(9).unscale(9.0))) < 1e-15);

        // α = -1: twice the antisymmetric projector over d² - d
        for d in 2..=4 {
            let rho = werner_state(&WernerParams::new(d, -1.0).unwrap());
            let ev = eig_hermitian(&rho).unwrap();
            let anti = d * (d - 1) / 2;
            let level = 2.0 / (d * d - d) as f64;
            assert!(ev[..anti].iter().all(|x| (x - level).abs() < 1e-12));
            assert!(ev[anti..].iter().all(|x| x.abs() < 1e-12));
        }
        assert!(WernerParams::new(1, 0.0).is_err());
        assert!(WernerParams::new(2, 1.5).is_err());
    }

    #[test]
    fn werner_grid_properties() {
        for d in 2..=4 {
            for alpha in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let rho = werner_state(&WernerParams::new(d, alpha).unwrap());
                assert!((trace(&rho).re - 1.0).abs() < 1e-12);
                assert!(hermitian_residual(&rho) < 1e-14);
                assert!(eig_hermitian(&rho).unwrap().iter().all(|&x| x >= -1e-12));
                let f = flip_operator(d);
                assert!(frobenius(&(&f * &rho - &rho * &f)) < 1e-14);
            }
        }
    }

    #[test]
    fn constant_three_is_sharp() {
        // m = e_11 ⊗ 1_2 on 2⊗2: ‖A‖² + ‖B‖² = 3 ‖M‖²
        let m = kron(&matrix_unit(2, 0, 0), &identity(2));
        let (lhs, _) = two_copy_sides(&m, 2, -1.0 / 3.0).unwrap();
        assert!((lhs - 3.0 * m.norm_squared()).abs() <= 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let problem = RankTwo { d: 3, alpha: -0.4 };
        let mut s = Sampler::new(5);
        let u = s.ginibre(9, 2);
        let v = s.ginibre(9, 2);
        let eval = problem.evaluate(&u, &v);
        let h = 1e-6;
        for (i, j) in [(0, 0), (4, 1), (8, 0)] {
            for dir in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                let mut up = u.clone();
                up[(i, j)] += dir * h;
                let mut um = u.clone();
                um[(i, j)] -= dir * h;
                let fd = (problem.evaluate(&up, &v).ratio - problem.evaluate(&um, &v).ratio) / (2.0 * h);
                // df = 2 Re(conj(grad) dir)
                let an = 2.0 * (eval.grad_u[(i, j)].conj() * dir).re;
                assert!((fd - an).abs() < 1e-6, "u[{i},{j}] fd={fd} an={an}");
            }
        }
        let mut vp = v.clone();
        vp[(3, 1)] += C64::new(h, 0.0);
        let mut vm = v.clone();
        vm[(3, 1)] -= C64::new(h, 0.0);
        let fd = (problem.evaluate(&u, &vp).ratio - problem.evaluate(&u, &vm).ratio) / (2.0 * h);
        assert!((fd - 2.0 * eval.grad_v[(3, 1)].re).abs() < 1e-6);
    }

    #[test]
    fn search_in_proven_region_finds_nothing() {
        let cfg = SearchConfig {
            seed: 3,
            starts: 8,
            iterations: 200,
            step: 0.1,
        };
        for alpha in [-0.25, -1.0 / 3.0] {
            let out = search_two_copy_violation(3, alpha, &cfg).unwrap();
            assert!(out.report.verdict);
            assert!(out.certificate.is_none());
            assert!(out.best_ratio <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn search_is_deterministic() {
        let cfg = SearchConfig {
            seed: 11,
            starts: 6,
            iterations: 50,
            step: 0.1,
        };
        let a = search_two_copy_violation(3, -0.45, &cfg).unwrap();
        let b = search_two_copy_violation(3, -0.45, &cfg).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.incumbent, b.incumbent);
    }

    #[test]
    fn two_copy_rejects_bad_input() {
        assert!(check_two_copy(&identity(4), 0.5).is_err());
        assert!(check_two_copy(&identity(5), -0.5).is_err());
    }
}
