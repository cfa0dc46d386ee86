//! Seeded sweeps that run every inequality checker over random instances.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::applications::check_two_copy;
use crate::dilations::check_dimension_constraint;
use crate::error::{Error, Result};
use crate::inequalities::{
    check_audenaert_family, check_individual_bound, check_kron_majorization, check_kyfan_family,
    check_large_rank, check_normal_rank_r, check_rank_one_gamma, check_template, KyFanVariant,
};
use crate::kappa::{kappa, KappaQuery};
use crate::matrix::{DenseMatrix, C64};
use crate::norms::NormSpec;
use crate::random::{normal_from_spectrum, Sampler};
use crate::report::InequalityReport;
use crate::tensor::TensorSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Checker {
    Majorization,
    Individual,
    Template,
    KyFan,
    Audenaert,
    LargeRank,
    RankOneGamma,
    NormalRankR,
    Dimension,
    TwoCopy,
}

impl Checker {
    pub const ALL: [Checker; 10] = [
        Checker::Majorization,
        Checker::Individual,
        Checker::Template,
        Checker::KyFan,
        Checker::Audenaert,
        Checker::LargeRank,
        Checker::RankOneGamma,
        Checker::NormalRankR,
        Checker::Dimension,
        Checker::TwoCopy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Checker::Majorization => "majorization",
            Checker::Individual => "individual",
            Checker::Template => "template",
            Checker::KyFan => "kyfan",
            Checker::Audenaert => "audenaert",
            Checker::LargeRank => "large-rank",
            Checker::RankOneGamma => "rank-one-gamma",
            Checker::NormalRankR => "normal-rank-r",
            Checker::Dimension => "dimension",
            Checker::TwoCopy => "two-copy",
        }
    }

    /// Whether the checker's hypotheses allow this space.
    pub fn applies_to(&self, space: &TensorSpace) -> bool {
        let bip = space.len() == 2;
        let equal = space.equal_dim().is_some();
        match self {
            Checker::Majorization | Checker::Template | Checker::Audenaert => true,
            Checker::KyFan | Checker::LargeRank => equal,
            Checker::Individual | Checker::RankOneGamma | Checker::NormalRankR | Checker::Dimension => bip,
            Checker::TwoCopy => bip && equal && space.dims()[0] >= 2,
        }
    }

    /// Parses a comma-separated list; `all` selects every checker.
    pub fn parse_list(text: &str) -> Result<Vec<Checker>> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim) {
            if part == "all" {
                out.extend(Checker::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Checker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Checker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Checker::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Checker::ALL.iter().map(|c| c.name()).collect();
                Error::InvalidInput(format!("unknown checker {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// One report from a sweep, tagged with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub checker: Checker,
    pub space: Vec<usize>,
    pub instance: usize,
    #[serde(flatten)]
    pub report: InequalityReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub checkers: Vec<Checker>,
    pub spaces: Vec<TensorSpace>,
    pub instances: usize,
    pub seed: u64,
}

/// Parses shapes such as `2x2,2x3,2x2x2`.
pub fn parse_shapes(text: &str) -> Result<Vec<TensorSpace>> {
    text.split(',')
        .map(|shape| {
            let dims = shape
                .trim()
                .split('x')
                .map(|d| {
                    d.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidInput(format!("bad shape {shape:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            TensorSpace::new(dims)
        })
        .collect()
}

const SCHATTEN_P: [f64; 5] = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];
const TEMPLATE_C: [f64; 3] = [0.0, 0.5, 1.0];

fn template_norms(space: &TensorSpace) -> Vec<NormSpec> {
    if space.len() == 2 {
        SCHATTEN_P.iter().map(|&p| NormSpec::Schatten { p }).collect()
    } else {
        // no Schatten closed form beyond two factors; Ky Fan is exact for any n
        [1, 2, 4].iter().map(|&k| NormSpec::KyFan { k }).collect()
    }
}

type KappaTable = HashMap<(usize, usize, usize), f64>;

fn kappa_table(space: &TensorSpace) -> Result<KappaTable> {
    let norms = template_norms(space);
    let keys: Vec<(usize, usize)> = (0..norms.len())
        .flat_map(|i| (0..TEMPLATE_C.len()).map(move |j| (i, j)))
        .collect();
    keys.par_iter()
        .map(|&(i, j)| {
            let q = KappaQuery::unrestricted(norms[i], TEMPLATE_C[j], space.dims().to_vec())?;
            Ok(((space.len(), i, j), kappa(&q)?.value))
        })
        .collect()
}

/// A random matrix on `space` drawn from a mix of ensembles and scales.
fn instance_matrix(rng: &mut Sampler, n: usize, flavor: usize) -> DenseMatrix {
    let scale = 10f64.powf(2.0 * rng.uniform() - 1.0);
    let m = match flavor % 4 {
        0 => rng.ginibre(n, n),
        1 => rng.positive(n),
        2 => {
            let r = 1 + rng.below(n);
            rng.fixed_rank(n, n, r)
        }
        _ => rng.hermitian(n),
    };
    m.scale(scale)
}

fn low_rank_positive(rng: &mut Sampler, n: usize, r: usize) -> DenseMatrix {
    let x = rng.ginibre(n, r);
    &x * x.adjoint()
}

fn normal_of_rank(rng: &mut Sampler, n: usize, r: usize) -> DenseMatrix {
    let u = rng.unitary(n);
    let z: Vec<C64> = (0..n)
        .map(|j| if j < r { rng.complex_gaussian() } else { C64::new(0.0, 0.0) })
        .collect();
    normal_from_spectrum(&u, &z)
}

fn run_one(
    checker: Checker,
    space: &TensorSpace,
    rng: &mut Sampler,
    instance: usize,
    kappas: &KappaTable,
) -> Result<Vec<InequalityReport>> {
    let n = space.total();
    Ok(match checker {
        Checker::Majorization => {
            let cs: Vec<DenseMatrix> = space.dims().iter().map(|&d| rng.ginibre(d, d)).collect();
            vec![check_kron_majorization(&cs, space)?]
        }
        Checker::Individual => {
            let m = instance_matrix(rng, n, instance);
            let spec = if instance.is_multiple_of(2) {
                NormSpec::Schatten {
                    p: SCHATTEN_P[(instance / 2) % SCHATTEN_P.len()],
                }
            } else {
                NormSpec::KyFan { k: 1 + rng.below(n) }
            };
            check_individual_bound(&m, space, &spec)?
        }
        Checker::Template => {
            let m = instance_matrix(rng, n, instance);
            let norms = template_norms(space);
            let i = instance % norms.len();
            let j = (instance / norms.len()) % TEMPLATE_C.len();
            let kappa = kappas[&(space.len(), i, j)];
            vec![check_template(&m, space, &norms[i], TEMPLATE_C[j], kappa)?]
        }
        Checker::KyFan => {
            let d = space.dims()[0];
            let k = 1 + rng.below(d);
            let variant = match instance % 3 {
                1 if space.len() == 2 => KyFanVariant::N2,
                2 => KyFanVariant::LowRank {
                    c: space.len() as f64 * rng.uniform(),
                },
                _ => KyFanVariant::General,
            };
            let m = match variant {
                KyFanVariant::LowRank { .. } => {
                    let r = 1 + rng.below(k);
                    rng.fixed_rank(n, n, r)
                }
                _ => instance_matrix(rng, n, instance / 3),
            };
            vec![check_kyfan_family(&m, space, k, variant)?]
        }
        Checker::Audenaert => {
            let m = instance_matrix(rng, n, instance);
            let p = SCHATTEN_P[instance % SCHATTEN_P.len()];
            let gamma = 1.0 + 3.0 * rng.uniform();
            let (a, b) = check_audenaert_family(&m, space, p, gamma)?;
            vec![a, b]
        }
        Checker::LargeRank => {
            let m = instance_matrix(rng, n, instance);
            vec![check_large_rank(&m, space, SCHATTEN_P[instance % SCHATTEN_P.len()])?]
        }
        Checker::RankOneGamma => {
            let m = rng.fixed_rank(n, n, 1).scale(10f64.powf(2.0 * rng.uniform() - 1.0));
            vec![check_rank_one_gamma(&m, space, [2.0, 3.0, 4.0][instance % 3])?]
        }
        Checker::NormalRankR => {
            let r = 1 + rng.below(n);
            let m = if instance.is_multiple_of(2) {
                normal_of_rank(rng, n, r)
            } else {
                low_rank_positive(rng, n, r)
            };
            vec![check_normal_rank_r(&m, space)?]
        }
        Checker::Dimension => {
            let r = 1 + rng.below(n);
            let m = rng.fixed_rank(n, n, r);
            vec![check_dimension_constraint(&m, space)?]
        }
        Checker::TwoCopy => {
            let m = rng.fixed_rank(n, n, 2);
            let alpha = if instance.is_multiple_of(2) { -0.25 } else { -1.0 / 3.0 };
            vec![check_two_copy(&m, alpha)?]
        }
    })
}

/// Runs each applicable checker on `instances` random inputs per space.
///
/// Instance `i` of checker `c` on space `s` draws from its own substream, so
/// the output is the same for any thread count and is ordered by
/// (checker, space, instance).
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let mut tables = HashMap::new();
    if cfg.checkers.contains(&Checker::Template) {
        for space in &cfg.spaces {
            tables.insert(space.dims().to_vec(), kappa_table(space)?);
        }
    }
    let empty = KappaTable::new();
    let mut jobs = Vec::new();
    for (ci, checker) in cfg.checkers.iter().enumerate() {
        for (si, space) in cfg.spaces.iter().enumerate() {
            if checker.applies_to(space) {
                jobs.extend((0..cfg.instances).map(|i| (ci, si, i)));
            }
        }
    }
    let batches: Vec<Vec<SweepRecord>> = jobs
        .par_iter()
        .map(|&(ci, si, i)| {
            let checker = cfg.checkers[ci];
            let space = &cfg.spaces[si];
            let stream = ((checker as u64) << 48) | ((si as u64) << 32) | i as u64;
            let mut rng = Sampler::substream(cfg.seed, stream);
            let kappas = tables.get(space.dims()).unwrap_or(&empty);
            let reports = run_one(checker, space, &mut rng, i, kappas)?;
            Ok(reports
                .into_iter()
                .map(|report| SweepRecord {
                    checker,
                    space: space.dims().to_vec(),
                    instance: i,
                    report,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(batches.into_iter().flatten().collect())
}
