//! Reference implementations used as test oracles. Everything here works by
//! explicit index loops or straight nalgebra calls, independent of the
//! library's own routines.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

pub type M = DMatrix<C>;

pub fn digits(mut x: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        out[i] = x % dims[i];
        x /= dims[i];
    }
    out
}

pub fn index(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

/// Partial trace over `traced` by summing matching index pairs.
pub fn ptrace(m: &M, dims: &[usize], traced: &[usize]) -> M {
    let kept: Vec<usize> = (0..dims.len()).filter(|i| !traced.contains(i)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
    let side: usize = kept_dims.iter().product();
    let total: usize = dims.iter().product();
    let mut out = M::zeros(side, side);
    for r in 0..total {
        let dr = digits(r, dims);
        for c in 0..total {
            let dc = digits(c, dims);
            if traced.iter().all(|&t| dr[t] == dc[t]) {
                let kr: Vec<usize> = kept.iter().map(|&i| dr[i]).collect();
                let kc: Vec<usize> = kept.iter().map(|&i| dc[i]).collect();
                out[(index(&kr, &kept_dims), index(&kc, &kept_dims))] += m[(r, c)];
            }
        }
    }
    out
}

/// Keeps only factor `keep`.
pub fn marginal(m: &M, dims: &[usize], keep: usize) -> M {
    let traced: Vec<usize> = (0..dims.len()).filter(|&i| i != keep).collect();
    ptrace(m, dims, &traced)
}

pub fn kron(a: &M, b: &M) -> M {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    M::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

pub fn eye(d: usize) -> M {
    M::identity(d, d)
}

pub fn unit(d: usize, i: usize, j: usize) -> M {
    let mut m = M::zeros(d, d);
    m[(i, j)] = C::new(1.0, 0.0);
    m
}

/// `x` on factor `at` of `dims`, identities elsewhere.
pub fn embed(x: &M, dims: &[usize], at: usize) -> M {
    let mut out = eye(1);
    for (i, &d) in dims.iter().enumerate() {
        out = kron(&out, &if i == at { x.clone() } else { eye(d) });
    }
    out
}

/// `r` on the factors other than `at`, with an identity of size `d` inserted
/// at position `at`.
pub fn insert_identity(r: &M, dims: &[usize], at: usize) -> M {
    let total: usize = dims.iter().product();
    let rest: Vec<usize> = (0..dims.len()).filter(|&i| i != at).collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&i| dims[i]).collect();
    M::from_fn(total, total, |i, j| {
        let (di, dj) = (digits(i, dims), digits(j, dims));
        if di[at] != dj[at] {
            return C::new(0.0, 0.0);
        }
        let ri: Vec<usize> = rest.iter().map(|&k| di[k]).collect();
        let rj: Vec<usize> = rest.iter().map(|&k| dj[k]).collect();
        r[(index(&ri, &rest_dims), index(&rj, &rest_dims))]
    })
}

pub fn fro(m: &M) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn tr(m: &M) -> C {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Singular values as the top half of the spectrum of `[[0, m], [m*, 0]]`.
pub fn svals(m: &M) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut h = M::zeros(r + c, r + c);
    h.view_mut((0, r), (r, c)).copy_from(m);
    h.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
    let mut s = eigh(&h);
    s.truncate(r.min(c));
    s.iter_mut().for_each(|x| *x = x.max(0.0));
    s
}

/// Number of singular values above `rel · σ_1`.
pub fn rank(m: &M, rel: f64) -> usize {
    let s = svals(m);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel * top).count()
}

pub fn eigh(m: &M) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut e: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

/// `(c* c)^{1/2}`.
pub fn abs(c: &M) -> M {
    let h = c.adjoint() * c;
    let h = (&h + h.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let root = eig.eigenvalues.map(|x| C::new(x.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * M::from_diagonal(&root) * eig.eigenvectors.adjoint()
}

pub fn schatten(m: &M, p: f64) -> f64 {
    let s = svals(m);
    if p.is_infinite() {
        return s[0];
    }
    s.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
}

pub fn jordan(eigenvalue: C, size: usize) -> M {
    M::from_fn(size, size, |i, j| {
        if i == j {
            eigenvalue
        } else if j == i + 1 {
            C::new(1.0, 0.0)
        } else {
            C::new(0.0, 0.0)
        }
    })
}

pub fn direct_sum(blocks: &[M]) -> M {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = M::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, at), b.shape()).copy_from(b);
        at += b.nrows();
    }
    out
}

/// Row-major vectorization `Σ_ij x_ij |i>|j>`.
pub fn vec_row_major(x: &M) -> M {
    M::from_fn(x.nrows() * x.ncols(), 1, |k, _| x[(k / x.ncols(), k % x.ncols())])
}

pub fn flip(d: usize) -> M {
    M::from_fn(d * d, d * d, |i, j| {
        let (a, b) = (i / d, i % d);
        if j == b * d + a {
            C::new(1.0, 0.0)
        } else {
            C::new(0.0, 0.0)
        }
    })
}
