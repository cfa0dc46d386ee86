//! The template constant `κ(c) = sup φ*(Λ_1, …, Λ_r)`, where `Λ` lists the
//! values `(Σ_i λ^{(i)}_{j_i} - c)_+` over the multi-index grid in decreasing
//! order and each `λ^{(i)} >= 0` lies in the dual gauge ball.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{dual_exponent, dual_gauge, NormSpec};
use crate::random::Sampler;

/// Largest grid accepted by the brute-force search.
pub const MAX_BRUTEFORCE_GRID: usize = 256;
pub const DEFAULT_BUDGET: usize = 64;
const MAX_SWEEPS: usize = 500;
const GRID_POINTS: usize = 32;
const ASCENT_STEP_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaQuery {
    pub spec: NormSpec,
    pub c: f64,
    pub dims: Vec<usize>,
    /// Number of `Λ` components kept.
    pub r: usize,
}

impl KappaQuery {
    pub fn new(spec: NormSpec, c: f64, dims: Vec<usize>, r: usize) -> Result<Self> {
        let q = Self { spec, c, dims, r };
        q.validate()?;
        Ok(q)
    }

    /// Rank cap equal to the full grid size.
    pub fn unrestricted(spec: NormSpec, c: f64, dims: Vec<usize>) -> Result<Self> {
        let r = dims.iter().product();
        Self::new(spec, c, dims, r)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidInput(format!("c = {} must be finite and non-negative", self.c)));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Dimension(format!("dims {:?} must be positive", self.dims)));
        }
        let total = self.grid_size();
        if self.r == 0 || self.r > total {
            return Err(Error::InvalidInput(format!("r = {} must lie in [1, {total}]", self.r)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn grid_size(&self) -> usize {
        self.dims.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaProfile {
    /// Decreasing, truncated to `r`.
    pub values: Vec<f64>,
    pub generator: Vec<Vec<f64>>,
}

fn grid_values(lams: &[Vec<f64>], c: f64) -> Vec<f64> {
    let mut values = vec![-c];
    for lam in lams {
        values = values
            .iter()
            .flat_map(|&base| lam.iter().map(move |&x| base + x))
            .collect();
    }
    values.into_iter().map(|v| v.max(0.0)).collect()
}

pub fn build_lambda(lams: &[Vec<f64>], c: f64, r: usize) -> Result<LambdaProfile> {
    if let Some(x) = lams.iter().flatten().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidInput(format!("λ components must be non-negative, got {x}")));
    }
    let mut values = grid_values(lams, c);
    values.sort_by(|a, b| b.total_cmp(a));
    values.truncate(r);
    Ok(LambdaProfile {
        values,
        generator: lams.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaBranch {
    ClosedForm,
    /// Exact evaluation at a known optimizer.
    Canonical,
    Parametrized,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub value: f64,
    pub branch: KappaBranch,
    /// Only a lower bound on the supremum (nonconvex search).
    pub lower_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
}

impl KappaResult {
    fn exact(value: f64, branch: KappaBranch) -> Self {
        Self {
            value,
            branch,
            lower_bound: false,
            spread: None,
            starts: None,
        }
    }
}

/// Dispatches on the norm family.
pub fn kappa(q: &KappaQuery) -> Result<KappaResult> {
    match q.spec {
        NormSpec::KyFan { .. } => kappa_kyfan(q),
        NormSpec::Schatten { .. } => kappa_schatten(q),
    }
}

/// Ky Fan `k`: the supremum is attained when every `λ^{(i)}` has `min(d_i, k)`
/// ones and zeros elsewhere, so `κ` is the dual gauge of that profile.
pub fn kappa_kyfan(q: &KappaQuery) -> Result<KappaResult> {
    q.validate()?;
    let NormSpec::KyFan { k } = q.spec else {
        return Err(Error::NormSpec(format!("expected a Ky Fan norm, got {}", q.spec)));
    };
    let n = q.n() as f64;
    if q.r <= k {
        return Ok(KappaResult::exact((n - q.c).max(0.0), KappaBranch::ClosedForm));
    }
    let lams: Vec<Vec<f64>> = q
        .dims
        .iter()
        .map(|&d| (0..d).map(|j| if j < d.min(k) { 1.0 } else { 0.0 }).collect())
        .collect();
    let profile = build_lambda(&lams, q.c, q.r)?;
    Ok(KappaResult::exact(dual_gauge(&profile.values, &q.spec)?, KappaBranch::Canonical))
}

/// Schatten `p`, dual exponent `q`. Closed forms cover `c >= 1`, `p = 1` and
/// `p = ∞` for two factors; `c ∈ (0, 1)` maximizes over vectors with at most
/// three levels `(α, β, 0)`. More than two factors go to [`kappa_bruteforce`].
pub fn kappa_schatten(q: &KappaQuery) -> Result<KappaResult> {
    q.validate()?;
    let NormSpec::Schatten { p } = q.spec else {
        return Err(Error::NormSpec(format!("expected a Schatten norm, got {}", q.spec)));
    };
    let n = q.n() as f64;
    let c = q.c;
    if c >= n {
        return Ok(KappaResult::exact(0.0, KappaBranch::ClosedForm));
    }
    if p == 1.0 {
        // dual ball is the unit cube; everything at 1
        return Ok(KappaResult::exact(n - c, KappaBranch::ClosedForm));
    }
    if q.n() != 2 {
        return kappa_bruteforce(q, DEFAULT_BUDGET, 0);
    }
    if c >= 1.0 {
        return Ok(KappaResult::exact(2.0 - c, KappaBranch::ClosedForm));
    }
    let (d1, d2) = (q.dims[0], q.dims[1]);
    if p.is_infinite() {
        // Convex objective on a product of simplices: a pair of vertices wins.
        let extra = (q.r - 1).min(d1 + d2 - 2) as f64;
        return Ok(KappaResult::exact(2.0 - c + extra * (1.0 - c), KappaBranch::ClosedForm));
    }
    let qexp = dual_exponent(p);
    let mut best = 0.0f64;
    for ma in 1..=d1 {
        for mb in 0..=d1 - ma {
            for na in 1..=d2 {
                for nb in 0..=d2 - na {
                    let shape = LevelShape {
                        x: (ma, mb, d1 - ma - mb),
                        y: (na, nb, d2 - na - nb),
                        c,
                        q: qexp,
                        r: q.r,
                    };
                    best = best.max(shape.maximize());
                }
            }
        }
    }
    Ok(KappaResult::exact(best, KappaBranch::Parametrized))
}

/// Multiplicities of the levels `(α, β, 0)` for `x` and `y`.
struct LevelShape {
    x: (usize, usize, usize),
    y: (usize, usize, usize),
    c: f64,
    q: f64,
    r: usize,
}

impl LevelShape {
    /// `s` is the share `m_α α^q` of the unit `l_q` mass.
    fn levels(mult: (usize, usize, usize), s: f64, q: f64) -> [(f64, usize); 3] {
        let alpha = (s / mult.0 as f64).powf(1.0 / q);
        let beta = if mult.1 > 0 {
            ((1.0 - s) / mult.1 as f64).powf(1.0 / q)
        } else {
            0.0
        };
        [(alpha, mult.0), (beta, mult.1), (0.0, mult.2)]
    }

    fn value(&self, s: f64, t: f64) -> f64 {
        let xs = Self::levels(self.x, s, self.q);
        let ys = Self::levels(self.y, t, self.q);
        let mut entries: Vec<(f64, usize)> = Vec::with_capacity(9);
        for &(a, ma) in &xs {
            for &(b, mb) in &ys {
                let v = a + b - self.c;
                if v > 0.0 && ma * mb > 0 {
                    entries.push((v, ma * mb));
                }
            }
        }
        entries.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut left = self.r;
        let mut sum = 0.0;
        for (v, count) in entries {
            let take = count.min(left);
            sum += take as f64 * v.powf(self.q);
            left -= take;
            if left == 0 {
                break;
            }
        }
        sum.powf(1.0 / self.q)
    }

    fn axis(free: bool) -> Vec<f64> {
        if free {
            (0..GRID_POINTS).map(|i| i as f64 / (GRID_POINTS - 1) as f64).collect()
        } else {
            vec![1.0]
        }
    }

    /// Grid seed followed by pattern search down to a `1e-10` step.
    fn maximize(&self) -> f64 {
        let (s_free, t_free) = (self.x.1 > 0, self.y.1 > 0);
        let mut best = (f64::NEG_INFINITY, 1.0, 1.0);
        for &s in &Self::axis(s_free) {
            for &t in &Self::axis(t_free) {
                let v = self.value(s, t);
                if v > best.0 {
                    best = (v, s, t);
                }
            }
        }
        let (mut v, mut s, mut t) = best;
        let mut h = 1.0 / (GRID_POINTS - 1) as f64;
        while h >= ASCENT_STEP_FLOOR {
            let mut moved = false;
            for (ds, dt) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
                if (ds != 0.0 && !s_free) || (dt != 0.0 && !t_free) {
                    continue;
                }
                let (ns, nt) = ((s + ds).clamp(0.0, 1.0), (t + dt).clamp(0.0, 1.0));
                let nv = self.value(ns, nt);
                if nv > v {
                    (v, s, t) = (nv, ns, nt);
                    moved = true;
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        v
    }
}

#[derive(Debug, Clone)]
struct Objective<'a> {
    q: &'a KappaQuery,
    strides: Vec<usize>,
}

impl<'a> Objective<'a> {
    fn new(q: &'a KappaQuery) -> Self {
        let mut strides = vec![1; q.n()];
        for i in (0..q.n().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * q.dims[i + 1];
        }
        Self { q, strides }
    }

    fn value(&self, lams: &[Vec<f64>]) -> f64 {
        let mut v = grid_values(lams, self.q.c);
        v.sort_by(|a, b| b.total_cmp(a));
        v.truncate(self.q.r);
        dual_gauge(&v, &self.q.spec).unwrap_or(0.0)
    }

    /// Value and a (sub)gradient with respect to every `λ^{(i)}`.
    fn gradient(&self, lams: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
        let values = grid_values(lams, self.q.c);
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        order.truncate(self.q.r);
        let top: Vec<f64> = order.iter().map(|&m| values[m]).collect();
        let f = dual_gauge(&top, &self.q.spec).unwrap_or(0.0);
        let mut weights = vec![0.0; order.len()];
        if f > 0.0 {
            match self.q.spec {
                NormSpec::Schatten { p } => {
                    let qe = dual_exponent(p);
                    if qe.is_infinite() {
                        weights[0] = 1.0;
                    } else if qe == 1.0 {
                        for (w, v) in weights.iter_mut().zip(&top) {
                            *w = if *v > 0.0 { 1.0 } else { 0.0 };
                        }
                    } else {
                        for (w, v) in weights.iter_mut().zip(&top) {
                            *w = (v / f).powf(qe - 1.0);
                        }
                    }
                }
                NormSpec::KyFan { k } => {
                    let sum: f64 = top.iter().sum();
                    if top[0] >= sum / k as f64 {
                        weights[0] = 1.0;
                    } else {
                        for (w, v) in weights.iter_mut().zip(&top) {
                            *w = if *v > 0.0 { 1.0 / k as f64 } else { 0.0 };
                        }
                    }
                }
            }
        }
        let mut grads: Vec<Vec<f64>> = self.q.dims.iter().map(|&d| vec![0.0; d]).collect();
        for (&m, &w) in order.iter().zip(&weights) {
            if w == 0.0 {
                continue;
            }
            for (i, g) in grads.iter_mut().enumerate() {
                g[(m / self.strides[i]) % self.q.dims[i]] += w;
            }
        }
        (f, grads)
    }

    /// Maximizer of `<g, λ>` over the dual gauge ball (`g >= 0`).
    fn linear_oracle(&self, g: &[f64]) -> Option<Vec<f64>> {
        if g.iter().all(|&x| x <= 0.0) {
            return None;
        }
        let d = g.len();
        Some(match self.q.spec {
            NormSpec::Schatten { p } => {
                let qe = dual_exponent(p);
                if qe.is_infinite() {
                    vec![1.0; d]
                } else if qe == 1.0 {
                    let j = argmax(g);
                    (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect()
                } else {
                    // Hölder equality case in l_q with conjugate p
                    let gp: Vec<f64> = g.iter().map(|x| x.max(0.0).powf(p - 1.0)).collect();
                    let scale = crate::norms::lp_norm(&gp, qe);
                    gp.iter().map(|x| x / scale).collect()
                }
            }
            NormSpec::KyFan { k } => {
                let mut idx: Vec<usize> = (0..d).collect();
                idx.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
                let mut out = vec![0.0; d];
                for &j in idx.iter().take(k) {
                    out[j] = 1.0;
                }
                out
            }
        })
    }

    /// Monotone block ascent: each factor jumps to the oracle answer for the
    /// current gradient while that improves the value.
    fn ascend(&self, mut lams: Vec<Vec<f64>>) -> f64 {
        let mut f = self.value(&lams);
        for _ in 0..MAX_SWEEPS {
            let mut improved = false;
            for i in 0..lams.len() {
                let (_, grads) = self.gradient(&lams);
                let Some(candidate) = self.linear_oracle(&grads[i]) else {
                    continue;
                };
                let old = std::mem::replace(&mut lams[i], candidate);
                let nf = self.value(&lams);
                if nf > f + 1e-15 * (1.0 + f) {
                    f = nf;
                    improved = true;
                } else {
                    lams[i] = old;
                }
            }
            if !improved {
                break;
            }
        }
        f
    }

    fn normalize(&self, v: Vec<f64>) -> Vec<f64> {
        let g = dual_gauge(&v, &self.q.spec).unwrap_or(0.0);
        if g > 0.0 {
            v.into_iter().map(|x| x / g).collect()
        } else {
            v
        }
    }

    fn start(&self, seed: u64, index: usize) -> Vec<Vec<f64>> {
        let dims = &self.q.dims;
        match index {
            0 => dims
                .iter()
                .map(|&d| self.normalize((0..d).map(|j| if j == 0 { 1.0 } else { 0.0 }).collect()))
                .collect(),
            1 => dims.iter().map(|&d| self.normalize(vec![1.0; d])).collect(),
            _ => {
                let mut rng = Sampler::substream(seed, index as u64);
                dims.iter()
                    .map(|&d| self.normalize((0..d).map(|_| rng.uniform()).collect()))
                    .collect()
            }
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Multistart ascent on the variational form of `κ`. Starts 0 and 1 are the
/// unit vector and the flat vector; the rest are seeded random points of the
/// dual ball. The result is a lower bound; `spread` is the range of the
/// per-start optima.
pub fn kappa_bruteforce(q: &KappaQuery, budget: usize, seed: u64) -> Result<KappaResult> {
    q.validate()?;
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be at least 1".into()));
    }
    if q.grid_size() > MAX_BRUTEFORCE_GRID {
        return Err(Error::InvalidInput(format!(
            "grid of size {} exceeds {MAX_BRUTEFORCE_GRID}",
            q.grid_size()
        )));
    }
    let objective = Objective::new(q);
    let values: Vec<f64> = (0..budget)
        .into_par_iter()
        .map(|i| objective.ascend(objective.start(seed, i)))
        .collect();
    let best = values.iter().copied().fold(0.0, f64::max);
    let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(KappaResult {
        value: best,
        branch: KappaBranch::BruteForce,
        lower_bound: true,
        spread: Some(best - worst),
        starts: Some(budget),
    })
}
