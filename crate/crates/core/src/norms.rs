//! Unitarily invariant norms given by their symmetric gauge functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{singular_values, DenseMatrix};

/// Absolute slack allowed in partial-sum comparisons.
pub const MAJORIZATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    /// `p = f64::INFINITY` is the operator norm.
    Schatten { p: f64 },
    #[serde(rename = "kyfan")]
    KyFan { k: usize },
}

impl NormSpec {
    pub fn schatten(p: f64) -> Result<Self> {
        let spec = NormSpec::Schatten { p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kyfan(k: usize) -> Result<Self> {
        let spec = NormSpec::KyFan { k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn trace_norm() -> Self {
        NormSpec::Schatten { p: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NormSpec::Schatten { p } if p.is_nan() || p < 1.0 => {
                Err(Error::NormSpec(format!("Schatten exponent {p} must lie in [1, inf]")))
            }
            NormSpec::KyFan { k: 0 } => Err(Error::NormSpec("Ky Fan index must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::Schatten { p } if p.is_infinite() => write!(f, "schatten:inf"),
            NormSpec::Schatten { p } => write!(f, "schatten:{p}"),
            NormSpec::KyFan { k } => write!(f, "kyfan:{k}"),
        }
    }
}

/// `schatten:P` (`P` may be `inf`) or `kyfan:K`.
impl FromStr for NormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::NormSpec(format!("expected schatten:P or kyfan:K, got {s:?}")))?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "schatten" | "p" => NormSpec::schatten(parse_exponent(arg)?),
            "kyfan" | "k" => NormSpec::kyfan(
                arg.trim()
                    .parse()
                    .map_err(|_| Error::NormSpec(format!("bad Ky Fan index {arg:?}")))?,
            ),
            other => Err(Error::NormSpec(format!("unknown norm family {other:?}"))),
        }
    }
}

pub fn parse_exponent(text: &str) -> Result<f64> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| Error::NormSpec(format!("bad exponent {text:?}"))),
    }
}

/// Hölder conjugate `q` with `1/p + 1/q = 1`.
pub fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `l_p` norm of a non-negative vector, computed relative to its largest entry.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let top = x.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if top == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return top;
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    top * x.iter().map(|v| (v.abs() / top).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Gauge value on a vector of singular values (any order).
pub fn gauge(s: &[f64], spec: &NormSpec) -> f64 {
    match *spec {
        NormSpec::Schatten { p } => lp_norm(s, p),
        NormSpec::KyFan { k } => {
            let mut v = s.to_vec();
            v.sort_by(|a, b| b.total_cmp(a));
            v.iter().take(k).sum()
        }
    }
}

pub fn norm(m: &DenseMatrix, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    Ok(gauge(&singular_values(m)?, spec))
}

/// Dual symmetric gauge: `l_q` for Schatten `p`, `max(max x, Σx / k)` for Ky Fan `k`.
pub fn dual_gauge(x: &[f64], spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "gauge arguments must be non-negative, got {v}"
        )));
    }
    Ok(match *spec {
        NormSpec::Schatten { p } => lp_norm(x, dual_exponent(p)),
        NormSpec::KyFan { k } => {
            let max = x.iter().fold(0.0f64, |a, &b| a.max(b));
            max.max(x.iter().sum::<f64>() / k as f64)
        }
    })
}

/// Smallest `Σ_{j<=i} y↓_j - Σ_{j<=i} x↓_j` over all `i`, with its index and the
/// two partial sums there. Shorter vectors are padded with zeros.
pub fn submajorization_margin(x: &[f64], y: &[f64]) -> (f64, usize, f64, f64) {
    let sorted = |v: &[f64], n: usize| {
        let mut v = v.to_vec();
        v.resize(n, 0.0);
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let n = x.len().max(y.len());
    let (xs, ys) = (sorted(x, n), sorted(y, n));
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut worst = (f64::INFINITY, 0, 0.0, 0.0);
    for i in 0..n {
        sx += xs[i];
        sy += ys[i];
        if sy - sx < worst.0 {
            worst = (sy - sx, i, sx, sy);
        }
    }
    if n == 0 {
        worst.0 = 0.0;
    }
    worst
}

/// `x ≺_w y` within [`MAJORIZATION_TOL`].
pub fn weak_submajorize(x: &[f64], y: &[f64]) -> bool {
    submajorization_margin(x, y).0 >= -MAJORIZATION_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{identity, real_diag};
    use crate::random::Sampler;
    use approx::assert_relative_eq;

    #[test]
    fn norm_examples() {
        let two = NormSpec::schatten(2.0).unwrap();
        assert_relative_eq!(norm(&identity(3), &two).unwrap(), 3f64.sqrt(), epsilon = 1e-14);
        let kf = NormSpec::kyfan(2).unwrap();
        assert_relative_eq!(norm(&real_diag(&[3.0, 2.0, 1.0]), &kf).unwrap(), 5.0, epsilon = 1e-14);
        let mut s = Sampler::new(1);
        let m = s.ginibre(4, 4);
        let op = norm(&m, &NormSpec::schatten(f64::INFINITY).unwrap()).unwrap();
        assert_relative_eq!(norm(&m, &NormSpec::kyfan(1).unwrap()).unwrap(), op, epsilon = 1e-12);
        let tr = norm(&m, &NormSpec::trace_norm()).unwrap();
        assert_relative_eq!(norm(&m, &NormSpec::kyfan(4).unwrap()).unwrap(), tr, epsilon = 1e-12);
        assert_relative_eq!(norm(&m, &NormSpec::kyfan(9).unwrap()).unwrap(), tr, epsilon = 1e-12);
    }

    #[test]
    fn large_exponent_does_not_overflow() {
        let m = real_diag(&[1e200, 1e200]);
        let v = norm(&m, &NormSpec::schatten(4.0).unwrap()).unwrap();
        assert_relative_eq!(v, 1e200 * 2f64.powf(0.25), max_relative = 1e-14);
    }

    #[test]
    fn dual_gauge_examples() {
        for spec in [
            NormSpec::schatten(1.0).unwrap(),
            NormSpec::schatten(3.0).unwrap(),
            NormSpec::schatten(f64::INFINITY).unwrap(),
            NormSpec::kyfan(2).unwrap(),
        ] {
            assert_relative_eq!(dual_gauge(&[1.0, 0.0, 0.0], &spec).unwrap(), 1.0);
        }
        assert_relative_eq!(dual_gauge(&[1.0, 1.0, 1.0], &NormSpec::kyfan(2).unwrap()).unwrap(), 1.5);
        assert!(dual_gauge(&[-1.0], &NormSpec::kyfan(2).unwrap()).is_err());
    }

    #[test]
    fn parse_and_validate() {
        assert_eq!("schatten:inf".parse::<NormSpec>().unwrap(), NormSpec::Schatten { p: f64::INFINITY });
        assert_eq!("kyfan:3".parse::<NormSpec>().unwrap(), NormSpec::KyFan { k: 3 });
        assert!("schatten:0.5".parse::<NormSpec>().is_err());
        assert!("kyfan:0".parse::<NormSpec>().is_err());
        assert!("frob".parse::<NormSpec>().is_err());
        let json = serde_json::to_string(&NormSpec::KyFan { k: 2 }).unwrap();
        assert_eq!(json, r#"{"kind":"kyfan","k":2}"#);
    }

    #[test]
    fn submajorization_examples() {
        assert!(weak_submajorize(&[1.0, 2.0], &[2.0, 1.0]));
        assert!(!weak_submajorize(&[2.0, 0.0], &[1.0, 1.0]));
        assert!(weak_submajorize(&[1.0, 1.0], &[2.0, 0.0]));
        assert!(!weak_submajorize(&[1.0], &[0.5, 0.5, 0.5]));
        assert!(weak_submajorize(&[0.5], &[0.5, 0.5, 0.5]));
    }
}
