//! Jordan data, Segré characteristics, Flanders similarity and rank-one
//! (purification) dilations.

use serde::{Deserialize, Serialize};

use super::{marginal_residual, DilationResult, Structure};
use crate::error::{Error, Result};
use crate::json::{JordanBlockJson, JordanSpecJson, MatrixJson};
use crate::matrix::{
    condition_number, eigenvalues, ensure_square, frobenius, identity, inverse, rank_tol, singular_values,
    DenseMatrix, Svd, Tolerance, C64, ONE, ZERO,
};
use crate::tensor::{lift, TensorSpace};

/// Eigenvalues closer than this (relative) are the same in a [`JordanSpec`].
const SPEC_EIGENVALUE_TOL: f64 = 1e-12;
/// Bases with a larger condition number are treated as singular.
const MAX_BASIS_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JordanBlock {
    pub eigenvalue: C64,
    pub size: usize,
}

impl JordanBlock {
    pub fn new(eigenvalue: C64, size: usize) -> Self {
        Self { eigenvalue, size }
    }

    pub fn nilpotent(size: usize) -> Self {
        Self::new(ZERO, size)
    }

    fn is_zero(&self) -> bool {
        self.eigenvalue.norm() <= SPEC_EIGENVALUE_TOL
    }

    /// `λ 1 + N` with ones on the superdiagonal.
    pub fn matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.size, self.size, |i, j| {
            if i == j {
                self.eigenvalue
            } else if j == i + 1 {
                ONE
            } else {
                ZERO
            }
        })
    }
}

/// Jordan blocks plus an optional similarity: the matrix is `S J S⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanSpec {
    pub blocks: Vec<JordanBlock>,
    pub basis: Option<DenseMatrix>,
}

impl JordanSpec {
    pub fn new(blocks: Vec<JordanBlock>, basis: Option<DenseMatrix>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("Jordan data needs at least one block".into()));
        }
        if let Some(b) = blocks.iter().find(|b| b.size == 0) {
            return Err(Error::InvalidInput(format!(
                "Jordan block at {} has size 0",
                b.eigenvalue
            )));
        }
        if blocks.iter().any(|b| !(b.eigenvalue.re.is_finite() && b.eigenvalue.im.is_finite())) {
            return Err(Error::InvalidInput("Jordan eigenvalues must be finite".into()));
        }
        let dim: usize = blocks.iter().map(|b| b.size).sum();
        if let Some(s) = &basis {
            if s.shape() != (dim, dim) {
                return Err(Error::Dimension(format!(
                    "basis is {}x{} but the blocks have total size {dim}",
                    s.nrows(),
                    s.ncols()
                )));
            }
            let cond = condition_number(s)?;
            if !(cond <= MAX_BASIS_CONDITION) {
                return Err(Error::InvalidInput(format!(
                    "basis is not invertible (condition number {cond:.3e})"
                )));
            }
        }
        Ok(Self { blocks, basis })
    }

    pub fn canonical_only(blocks: Vec<JordanBlock>) -> Result<Self> {
        Self::new(blocks, None)
    }

    pub fn from_json(j: &JordanSpecJson) -> Result<Self> {
        let blocks = j
            .blocks
            .iter()
            .map(|b| JordanBlock::new(C64::new(b.re, b.im), b.size))
            .collect();
        let basis = j.basis.as_ref().map(MatrixJson::to_matrix).transpose()?;
        Self::new(blocks, basis)
    }

    pub fn to_json(&self) -> JordanSpecJson {
        JordanSpecJson {
            blocks: self
                .blocks
                .iter()
                .map(|b| JordanBlockJson {
                    re: b.eigenvalue.re,
                    im: b.eigenvalue.im,
                    size: b.size,
                })
                .collect(),
            basis: self.basis.as_ref().map(MatrixJson::from_matrix),
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    /// Block-diagonal Jordan matrix in the listed order.
    pub fn canonical(&self) -> DenseMatrix {
        let d = self.dim();
        let mut j = DenseMatrix::zeros(d, d);
        let mut at = 0;
        for b in &self.blocks {
            j.view_mut((at, at), (b.size, b.size)).copy_from(&b.matrix());
            at += b.size;
        }
        j
    }

    fn basis_or_identity(&self) -> DenseMatrix {
        self.basis.clone().unwrap_or_else(|| identity(self.dim()))
    }

    pub fn matrix(&self) -> Result<DenseMatrix> {
        match &self.basis {
            None => Ok(self.canonical()),
            Some(s) => Ok(s * self.canonical() * inverse(s)?),
        }
    }

    /// Zero-eigenvalue block sizes, decreasing.
    pub fn zero_segre(&self) -> SegreCharacteristic {
        SegreCharacteristic::new(self.blocks.iter().filter(|b| b.is_zero()).map(|b| b.size).collect())
    }

    fn offsets(&self) -> Vec<usize> {
        let mut at = 0;
        self.blocks
            .iter()
            .map(|b| {
                let here = at;
                at += b.size;
                here
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegreCharacteristic {
    pub sizes: Vec<usize>,
}

impl SegreCharacteristic {
    pub fn new(mut sizes: Vec<usize>) -> Self {
        sizes.retain(|&s| s > 0);
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Self { sizes }
    }

    /// `|a_i - b_i| <= 1` after padding the shorter list with zeros; on failure
    /// returns the first offending pair.
    pub fn compatible(&self, other: &Self) -> std::result::Result<(), (usize, usize)> {
        let n = self.sizes.len().max(other.sizes.len());
        for i in 0..n {
            let a = self.sizes.get(i).copied().unwrap_or(0);
            let b = other.sizes.get(i).copied().unwrap_or(0);
            if a.abs_diff(b) > 1 {
                return Err((a, b));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegreEstimate {
    pub characteristic: SegreCharacteristic,
    /// `rank(a^k)` for `k = 0, 1, ...` until it stabilizes.
    pub rank_sequence: Vec<usize>,
    /// A singular value fell within three decades of the rank threshold.
    pub unstable: bool,
}

/// Ranks of `(x/scale)^k`, `k = 0..`; stops once two consecutive ranks agree
/// or `k` reaches the dimension.
fn rank_sequence(x: &DenseMatrix, scale: f64, tol: &Tolerance) -> Result<(Vec<usize>, bool)> {
    let d = x.nrows();
    let sigma1 = scale;
    let mut ranks = vec![d];
    if sigma1 == 0.0 {
        ranks.push(0);
        return Ok((ranks, false));
    }
    let unit = x.unscale(sigma1);
    let mut unstable = false;
    let mut p = identity(d);
    for _ in 0..d {
        p = &p * &unit;
        let s = singular_values(&p)?;
        let thr = tol.threshold(1.0);
        unstable |= s.iter().any(|&v| v > thr * 1e-3 && v < thr * 1e3);
        let r = s.iter().filter(|&&v| v > thr).count();
        let prev = *ranks.last().expect("nonempty");
        ranks.push(r);
        if r == prev || r == 0 {
            break;
        }
    }
    Ok((ranks, unstable))
}

fn blocks_from_ranks(ranks: &[usize]) -> Vec<usize> {
    // at_least[k-1] = number of blocks of size >= k
    let at_least: Vec<usize> = ranks.windows(2).map(|w| w[0] - w[1]).collect();
    let mut sizes = Vec::new();
    for k in 1..=at_least.len() {
        let here = at_least[k - 1] - at_least.get(k).copied().unwrap_or(0);
        sizes.extend(std::iter::repeat_n(k, here));
    }
    sizes
}

/// Jordan block sizes at eigenvalue 0 from the ranks of powers.
pub fn segre_at_zero(a: &DenseMatrix, tol: &Tolerance) -> Result<SegreEstimate> {
    ensure_square(a, "Segré input")?;
    let scale = singular_values(a)?.first().copied().unwrap_or(0.0);
    let (ranks, unstable) = rank_sequence(a, scale, tol)?;
    Ok(SegreEstimate {
        characteristic: SegreCharacteristic::new(blocks_from_ranks(&ranks)),
        rank_sequence: ranks,
        unstable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCluster {
    pub re: f64,
    pub im: f64,
    pub multiplicity_a: usize,
    pub multiplicity_b: usize,
    /// `dim ker (x - λ)^k` for `k = 1..`.
    pub nullities_a: Vec<usize>,
    pub nullities_b: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlandersVerdict {
    pub similar: bool,
    pub unstable: bool,
    pub segre_a: SegreCharacteristic,
    pub segre_b: SegreCharacteristic,
    pub clusters: Vec<EigenCluster>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
}

fn nullities(x: &DenseMatrix, lambda: C64, max_k: usize, tol: &Tolerance) -> Result<(Vec<usize>, bool)> {
    let d = x.nrows();
    let shifted = x - identity(d) * lambda;
    let scale = singular_values(x)?.first().copied().unwrap_or(0.0).max(lambda.norm());
    let (ranks, unstable) = rank_sequence(&shifted, scale, tol)?;
    let mut out: Vec<usize> = ranks.iter().skip(1).map(|r| d - r).collect();
    let last = out.last().copied().unwrap_or(0);
    out.resize(max_k, last);
    out.truncate(max_k);
    Ok((out, unstable))
}

/// Flanders similarity of two square matrices, possibly of different sizes:
/// identical Jordan structure at every nonzero eigenvalue and zero-eigenvalue
/// block sizes differing by at most one after padding.
///
/// Eigenvalues are clustered with radius `sqrt(tol.abs) (1 + scale)`, wide
/// enough to absorb the splitting of small defective blocks. Clusters closer
/// than ten radii, or eigenvalues close to the zero radius, mark the verdict
/// unstable.
pub fn flanders_similar(a: &DenseMatrix, b: &DenseMatrix, tol: &Tolerance) -> Result<FlandersVerdict> {
    ensure_square(a, "Flanders input a")?;
    ensure_square(b, "Flanders input b")?;
    let scale = singular_values(a)?
        .first()
        .copied()
        .unwrap_or(0.0)
        .max(singular_values(b)?.first().copied().unwrap_or(0.0));
    let radius = tol.abs.sqrt() * (1.0 + scale);
    let ea = eigenvalues(a)?;
    let eb = eigenvalues(b)?;
    let mut unstable = ea
        .iter()
        .chain(eb.iter())
        .any(|z| z.norm() > radius * 0.1 && z.norm() < radius * 10.0);

    // single-linkage clusters over nonzero eigenvalues of both matrices
    let mut points: Vec<(C64, bool)> = ea
        .iter()
        .map(|&z| (z, true))
        .chain(eb.iter().map(|&z| (z, false)))
        .filter(|(z, _)| z.norm() > radius)
        .collect();
    points.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));
    let mut label: Vec<usize> = (0..points.len()).collect();
    fn root(label: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i].0 - points[j].0).norm() <= radius {
                let (ri, rj) = (root(&mut label, i), root(&mut label, j));
                label[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<(C64, bool)>> = Default::default();
    for i in 0..points.len() {
        let r = root(&mut label, i);
        groups.entry(r).or_default().push(points[i]);
    }

    let mut clusters = Vec::new();
    let mut violation = None;
    let centers: Vec<C64> = groups
        .values()
        .map(|g| g.iter().map(|p| p.0).sum::<C64>() / g.len() as f64)
        .collect();
    for (i, ci) in centers.iter().enumerate() {
        if ci.norm() < 10.0 * radius {
            unstable = true;
        }
        for cj in centers.iter().skip(i + 1) {
            if (ci - cj).norm() < 10.0 * radius {
                unstable = true;
            }
        }
    }
    for (group, &center) in groups.values().zip(centers.iter()) {
        let ma = group.iter().filter(|p| p.1).count();
        let mb = group.len() - ma;
        let max_k = ma.max(mb);
        let (na, ua) = nullities(a, center, max_k, tol)?;
        let (nb, ub) = nullities(b, center, max_k, tol)?;
        unstable |= ua || ub;
        if violation.is_none() && (ma != mb || na != nb) {
            violation = Some(format!(
                "eigenvalue {center:.6}: multiplicities {ma} vs {mb}, kernel dimensions {na:?} vs {nb:?}"
            ));
        }
        clusters.push(EigenCluster {
            re: center.re,
            im: center.im,
            multiplicity_a: ma,
            multiplicity_b: mb,
            nullities_a: na,
            nullities_b: nb,
        });
    }

    let sa = segre_at_zero(a, tol)?;
    let sb = segre_at_zero(b, tol)?;
    unstable |= sa.unstable || sb.unstable;
    if violation.is_none() {
        if let Err((p, q)) = sa.characteristic.compatible(&sb.characteristic) {
            violation = Some(format!("zero-eigenvalue blocks of sizes {p} and {q} differ by more than one"));
        }
    }
    Ok(FlandersVerdict {
        similar: violation.is_none(),
        unstable,
        segre_a: sa.characteristic,
        segre_b: sb.characteristic,
        clusters,
        violation,
    })
}

/// Rank-one matrix `|Ψ₁><Ψ₂|` on `d_A ⊗ d_B` from `X_1`, `X_2` (`d_A × d_B`),
/// with `Ψ_i = (X_i ⊗ 1)Ω`: its marginals are `X_1 X_2*` and `(X_2* X_1)^T`.
pub(crate) fn rank_one_from_factors(x1: &DenseMatrix, x2: &DenseMatrix) -> DenseMatrix {
    lift(x1) * lift(x2).adjoint()
}

#[derive(Debug, Clone)]
pub struct Purification {
    pub dilation: DilationResult,
    /// The other marginal `tr_A[M] = (X_2* X_1)^T`.
    pub b: DenseMatrix,
    pub verdict: FlandersVerdict,
}

/// Rank-one dilation of `a` on `d_A ⊗ d_b`; possible exactly when
/// `d_b >= rank(a)`.
pub fn purify(a: &DenseMatrix, d_b: usize) -> Result<Purification> {
    let d_a = ensure_square(a, "purification target")?;
    let tol = Tolerance::default();
    let rank = rank_tol(a, &tol)?;
    if d_b == 0 || d_b < rank {
        return Err(Error::RankTooLarge { rank, ancilla: d_b });
    }
    let svd = Svd::new(a)?;
    let k = d_a.min(d_b);
    let v = svd.v_t.adjoint();
    let mut x1 = DenseMatrix::zeros(d_a, d_b);
    let mut x2 = DenseMatrix::zeros(d_a, d_b);
    for j in 0..k {
        let w = svd.s[j].sqrt();
        x1.set_column(j, &(svd.u.column(j) * C64::new(w, 0.0)));
        x2.set_column(j, &(v.column(j) * C64::new(w, 0.0)));
    }
    let m = rank_one_from_factors(&x1, &x2);
    let space = TensorSpace::bipartite(d_a, d_b)?;
    let b = (x2.adjoint() * &x1).transpose();
    let verdict = flanders_similar(a, &b, &tol)?;
    let rec = marginal_residual(&m, &space, 0, a)?;
    let rec_b = marginal_residual(&m, &space, 1, &b)?;
    let dilation = DilationResult::new(m, space, Structure::RankOne)
        .certify("reconstruction", rec)
        .certify("reconstruction_b", rec_b);
    Ok(Purification {
        dilation,
        b,
        verdict,
    })
}

/// Shift factors `(P, Q)` with `PQ = J_p(0)` and `QP = J_q(0)`, `|p - q| <= 1`.
fn shift_factors(p: usize, q: usize) -> (DenseMatrix, DenseMatrix) {
    if p == q {
        (JordanBlock::nilpotent(p).matrix(), identity(p))
    } else if q + 1 == p {
        // P = [I; 0] (p×q), Q = [0 | I] (q×p)
        let pm = DenseMatrix::from_fn(p, q, |i, j| if i == j { ONE } else { ZERO });
        let qm = DenseMatrix::from_fn(q, p, |i, j| if j == i + 1 { ONE } else { ZERO });
        (pm, qm)
    } else {
        // q = p + 1: P = [0 | I] (p×q), Q = [I; 0] (q×p)
        let pm = DenseMatrix::from_fn(p, q, |i, j| if j == i + 1 { ONE } else { ZERO });
        let qm = DenseMatrix::from_fn(q, p, |i, j| if i == j { ONE } else { ZERO });
        (pm, qm)
    }
}

/// Block pairing between two specs: `(index in a, index in b, p, q)` where a
/// missing partner (zero padding) has index `None` and size 0.
type Pair = (Option<usize>, Option<usize>, usize, usize);

fn pair_blocks(a: &JordanSpec, b: &JordanSpec) -> Result<Vec<Pair>> {
    let mut pairs = Vec::new();
    let mut used = vec![false; b.blocks.len()];
    for (ia, ba) in a.blocks.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
        let partner = b.blocks.iter().enumerate().position(|(ib, bb)| {
            !used[ib]
                && !bb.is_zero()
                && bb.size == ba.size
                && (bb.eigenvalue - ba.eigenvalue).norm()
                    <= SPEC_EIGENVALUE_TOL * (1.0 + ba.eigenvalue.norm())
        });
        match partner {
            Some(ib) => {
                used[ib] = true;
                pairs.push((Some(ia), Some(ib), ba.size, ba.size));
            }
            None => {
                return Err(Error::NotFlandersSimilar(format!(
                    "block J_{}({}) of a has no partner in b",
                    ba.size, ba.eigenvalue
                )))
            }
        }
    }
    if let Some((ib, bb)) = b
        .blocks
        .iter()
        .enumerate()
        .find(|(ib, bb)| !used[*ib] && !bb.is_zero())
    {
        let _ = ib;
        return Err(Error::NotFlandersSimilar(format!(
            "block J_{}({}) of b has no partner in a",
            bb.size, bb.eigenvalue
        )));
    }
    let zeros = |s: &JordanSpec| {
        let mut z: Vec<(usize, usize)> = s
            .blocks
            .iter()
            .enumerate()
            .filter(|(_, x)| x.is_zero())
            .map(|(i, x)| (i, x.size))
            .collect();
        z.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
        z
    };
    let (za, zb) = (zeros(a), zeros(b));
    for i in 0..za.len().max(zb.len()) {
        let (ia, p) = za.get(i).map(|&(i, s)| (Some(i), s)).unwrap_or((None, 0));
        let (ib, q) = zb.get(i).map(|&(i, s)| (Some(i), s)).unwrap_or((None, 0));
        if p.abs_diff(q) > 1 {
            return Err(Error::NotFlandersSimilar(format!(
                "zero-eigenvalue blocks of sizes {p} and {q} differ by more than one"
            )));
        }
        pairs.push((ia, ib, p, q));
    }
    Ok(pairs)
}

/// Rank-one `M` on `d_A ⊗ d_B` with `tr_B M = A` and `tr_A M = B` for
/// Flanders-similar Jordan data.
///
/// Pairs of blocks give `Y_1` (`d_A × d_B`) and `Z` (`d_B × d_A`) with
/// `Y_1 Z ≅ J_A` and `Z Y_1 ≅ J_B`. With `A = T_A J T_A⁻¹`, `B = T_B J' T_B⁻¹`
/// and the block reversal `R` (`R J' R = J'^T`), `W = T_B^{-T} R` gives
/// `B^T = W J' W⁻¹`, and `X_1 = T_A Y_1 W⁻¹`, `X_2* = W Z T_A⁻¹` satisfy
/// `X_1 X_2* = A`, `X_2* X_1 = B^T`.
pub fn joint_rank_one_dilation(a: &JordanSpec, b: &JordanSpec) -> Result<DilationResult> {
    let pairs = pair_blocks(a, b)?;
    let (d_a, d_b) = (a.dim(), b.dim());
    let mut y1 = DenseMatrix::zeros(d_a, d_b);
    let mut z = DenseMatrix::zeros(d_b, d_a);
    let mut perm_a = DenseMatrix::zeros(d_a, d_a);
    let mut perm_b = DenseMatrix::zeros(d_b, d_b);
    let mut reversal = DenseMatrix::zeros(d_b, d_b);
    let (off_a, off_b) = (a.offsets(), b.offsets());
    let (mut at_a, mut at_b) = (0, 0);
    for &(ia, ib, p, q) in &pairs {
        let (pm, qm) = match (ia, ib) {
            (Some(i), Some(_)) if !a.blocks[i].is_zero() => {
                (a.blocks[i].matrix(), identity(p))
            }
            _ => shift_factors(p, q),
        };
        y1.view_mut((at_a, at_b), (p, q)).copy_from(&pm);
        z.view_mut((at_b, at_a), (q, p)).copy_from(&qm);
        if let Some(i) = ia {
            for t in 0..p {
                perm_a[(off_a[i] + t, at_a + t)] = ONE;
            }
        }
        if let Some(i) = ib {
            for t in 0..q {
                perm_b[(off_b[i] + t, at_b + t)] = ONE;
            }
        }
        for t in 0..q {
            reversal[(at_b + t, at_b + q - 1 - t)] = ONE;
        }
        at_a += p;
        at_b += q;
    }
    let t_a = a.basis_or_identity() * perm_a;
    let t_b = b.basis_or_identity() * perm_b;
    let w = inverse(&t_b)?.transpose() * reversal;
    let mut x1 = &t_a * y1 * inverse(&w)?;
    let mut x2_adj = &w * z * inverse(&t_a)?;
    // Both targets zero: the block factors vanish, but a nonzero pair with
    // X_1 X_2* = 0 = X_2* X_1 exists once both sides have room for it.
    if (frobenius(&x1) == 0.0 || frobenius(&x2_adj) == 0.0) && d_a >= 2 && d_b >= 2 {
        x1 = DenseMatrix::zeros(d_a, d_b);
        x1[(0, 0)] = ONE;
        x2_adj = DenseMatrix::zeros(d_b, d_a);
        x2_adj[(1, 1)] = ONE;
    }
    let m = rank_one_from_factors(&x1, &x2_adj.adjoint());
    let space = TensorSpace::bipartite(d_a, d_b)?;
    let (target_a, target_b) = (a.matrix()?, b.matrix()?);
    let rec = marginal_residual(&m, &space, 0, &target_a)?;
    let rec_b = marginal_residual(&m, &space, 1, &target_b)?;
    let rank = rank_tol(&m, &Tolerance::default())? as f64;
    Ok(DilationResult::new(m, space, Structure::RankOne)
        .certify("reconstruction", rec)
        .certify("reconstruction_b", rec_b)
        .certify("rank", rank))
}
