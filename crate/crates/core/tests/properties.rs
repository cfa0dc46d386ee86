mod common;

use common::{embed, fro, ptrace, svals, tr, M};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use ptrace_lab::dilations::{flanders_similar, shoda_decomposition};
use ptrace_lab::inequalities::check_template;
use ptrace_lab::kappa::{kappa, KappaQuery};
use ptrace_lab::matrix::{eigenvalues, singular_values, Svd};
use ptrace_lab::norms::{norm, NormSpec};
use ptrace_lab::random::Sampler;
use ptrace_lab::tensor::{embed_factor, kronecker_sum, lift, partial_trace, unlift};
use ptrace_lab::{FactorSet, TensorSpace, Tolerance};

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..4, 1..4)
}

fn schatten_p() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(f64::INFINITY)]
}

fn subset(mask: u8, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_matches_index_sums(dims in dims_strategy(), mask in 0u8..8, seed in any::<u64>()) {
        let n = dims.len();
        let traced = subset(mask, n);
        prop_assume!(!traced.is_empty());
        let total: usize = dims.iter().product();
        let m = Sampler::new(seed).ginibre(total, total);
        let space = TensorSpace::new(dims.clone()).unwrap();
        let ours = partial_trace(&m, &space, &FactorSet::new(traced.clone(), n).unwrap()).unwrap();
        let theirs = ptrace(&m, &dims, &traced);
        prop_assert!(fro(&(ours - theirs)) <= 1e-12 * (1.0 + fro(&m)));
    }

    #[test]
    fn partial_trace_is_adjoint_to_embedding(dims in dims_strategy(), at in 0usize..3, seed in any::<u64>()) {
        let at = at % dims.len();
        let total: usize = dims.iter().product();
        let mut rng = Sampler::new(seed);
        let m = rng.ginibre(total, total);
        let x = rng.ginibre(dims[at], dims[at]);
        let space = TensorSpace::new(dims.clone()).unwrap();
        let lhs = tr(&(ptrace_lab::tensor::marginal(&m, &space, at).unwrap() * &x));
        let rhs = tr(&(&m * embed_factor(&x, &space, at).unwrap()));
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + fro(&m) * fro(&x)));
        prop_assert!(fro(&(embed_factor(&x, &space, at).unwrap() - embed(&x, &dims, at))) == 0.0);
    }

    #[test]
    fn iterated_traces_commute(dims in prop::collection::vec(1usize..4, 3), seed in any::<u64>()) {
        let total: usize = dims.iter().product();
        let m = Sampler::new(seed).ginibre(total, total);
        let space = TensorSpace::new(dims.clone()).unwrap();
        let first = |i: usize, j: usize| {
            let once = partial_trace(&m, &space, &FactorSet::single(i, 3).unwrap()).unwrap();
            let rest = space.without(&FactorSet::single(i, 3).unwrap()).unwrap();
            let j = if j > i { j - 1 } else { j };
            partial_trace(&once, &rest, &FactorSet::single(j, 2).unwrap()).unwrap()
        };
        let both = partial_trace(&m, &space, &FactorSet::new(vec![0, 2], 3).unwrap()).unwrap();
        prop_assert!(fro(&(first(0, 2) - &both)) <= 1e-12 * (1.0 + fro(&m)));
        prop_assert!(fro(&(first(2, 0) - &both)) <= 1e-12 * (1.0 + fro(&m)));
    }

    #[test]
    fn kronecker_sum_is_sum_of_embeddings(dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = Sampler::new(seed);
        let cs: Vec<M> = dims.iter().map(|&d| rng.ginibre(d, d)).collect();
        let space = TensorSpace::new(dims.clone()).unwrap();
        let ours = kronecker_sum(&cs, &space).unwrap();
        let total: usize = dims.iter().product();
        let theirs = cs.iter().enumerate().fold(M::zeros(total, total), |acc, (i, c)| acc + embed(c, &dims, i));
        prop_assert!(fro(&(ours - theirs)) <= 1e-12);
    }

    #[test]
    fn lifted_outer_product_traces_to_product(da in 1usize..5, db in 1usize..5, seed in any::<u64>()) {
        let mut rng = Sampler::new(seed);
        let (x1, x2) = (rng.ginibre(da, db), rng.ginibre(da, db));
        let (v1, v2) = (lift(&x1), lift(&x2));
        prop_assert_eq!(unlift(&v1, da, db), x1.clone());
        let m = &v1 * v2.adjoint();
        let b = ptrace(&m, &[da, db], &[1]);
        prop_assert!(fro(&(b - &x1 * x2.adjoint())) <= 1e-12 * (1.0 + fro(&x1) * fro(&x2)));
    }

    #[test]
    fn svd_reconstructs_rank_deficient(rows in 1usize..7, cols in 1usize..7, r in 1usize..7, seed in any::<u64>()) {
        let r = r.min(rows).min(cols);
        let a = Sampler::new(seed).fixed_rank(rows, cols, r);
        let svd = Svd::new(&a).unwrap();
        let s = M::from_diagonal(&nalgebra::DVector::from_iterator(svd.s.len(), svd.s.iter().map(|&x| C::new(x, 0.0))));
        prop_assert!(fro(&(&svd.u * s * &svd.v_t - &a)) <= 1e-12 * (1.0 + fro(&a)));
        prop_assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        let oracle = svals(&a);
        for (x, y) in singular_values(&a).unwrap().iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + oracle[0]));
        }
    }

    #[test]
    fn eigenvalues_are_roots_of_the_characteristic_polynomial(d in 1usize..7, seed in any::<u64>()) {
        let mut rng = Sampler::new(seed);
        let a = rng.ginibre(d, d);
        let z = rng.complex_gaussian() * 3.0;
        let det = (M::identity(d, d) * z - &a).determinant();
        let prod: C = eigenvalues(&a).unwrap().iter().map(|l| z - l).product();
        prop_assert!((det - prod).norm() <= 1e-9 * (1.0 + det.norm()));
        let sum: C = eigenvalues(&a).unwrap().iter().sum();
        prop_assert!((sum - tr(&a)).norm() <= 1e-10 * (1.0 + fro(&a)));
    }

    #[test]
    fn norms_are_unitarily_invariant_and_subadditive(d in 1usize..6, p in schatten_p(), k in 1usize..6, seed in any::<u64>()) {
        let mut rng = Sampler::new(seed);
        let (a, b) = (rng.ginibre(d, d), rng.ginibre(d, d));
        let (u, v) = (rng.unitary(d), rng.unitary(d));
        for spec in [NormSpec::schatten(p).unwrap(), NormSpec::kyfan(k).unwrap()] {
            let na = norm(&a, &spec).unwrap();
            let rotated = norm(&(&u * &a * &v), &spec).unwrap();
            prop_assert!((na - rotated).abs() <= 1e-10 * (1.0 + na));
            let sum = norm(&(&a + &b), &spec).unwrap();
            prop_assert!(sum <= na + norm(&b, &spec).unwrap() + 1e-10 * (1.0 + sum));
        }
    }

    #[test]
    fn norms_are_monotone_in_their_index(d in 1usize..6, seed in any::<u64>()) {
        let a = Sampler::new(seed).ginibre(d, d);
        let kf: Vec<f64> = (1..=d + 1).map(|k| norm(&a, &NormSpec::kyfan(k).unwrap()).unwrap()).collect();
        prop_assert!(kf.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)));
        let sp: Vec<f64> = [1.0, 1.5, 2.0, 3.0, 8.0, f64::INFINITY]
            .iter()
            .map(|&p| norm(&a, &NormSpec::schatten(p).unwrap()).unwrap())
            .collect();
        prop_assert!(sp.windows(2).all(|w| w[0] >= w[1] * (1.0 - 1e-12)));
        let s = svals(&a);
        prop_assert!((kf[0] - s[0]).abs() <= 1e-10 * (1.0 + s[0]));
    }

    #[test]
    fn rank_one_marginals_are_flanders_similar(da in 1usize..5, db in 1usize..5, seed in any::<u64>()) {
        let mut rng = Sampler::new(seed);
        let x = rng.ginibre(da * db, 1);
        let y = rng.ginibre(da * db, 1);
        let m = &x * y.adjoint();
        let a = ptrace(&m, &[da, db], &[1]);
        let b = ptrace(&m, &[da, db], &[0]);
        prop_assert!(flanders_similar(&a, &b, &Tolerance::default()).unwrap().similar);
    }

    #[test]
    fn template_holds_with_computed_kappa(dims in prop::collection::vec(2usize..4, 2..4), c in 0.0f64..1.5, p in schatten_p(), seed in any::<u64>()) {
        let spec = if dims.len() == 2 { NormSpec::schatten(p).unwrap() } else { NormSpec::kyfan(2).unwrap() };
        let k = kappa(&KappaQuery::unrestricted(spec, c, dims.clone()).unwrap()).unwrap();
        let total: usize = dims.iter().product();
        let m = Sampler::new(seed).ginibre(total, total);
        let space = TensorSpace::new(dims).unwrap();
        let report = check_template(&m, &space, &spec, c, k.value).unwrap();
        prop_assert!(report.verdict, "{report:?}");
    }
}

#[test]
fn shoda_on_a_thousand_traceless_inputs() {
    for i in 0..1000u64 {
        let mut rng = Sampler::substream(77, i);
        let d = 1 + rng.below(6);
        let c = rng.traceless(d);
        let s = shoda_decomposition(&c).unwrap();
        let got = &s.k * &s.l - &s.l * &s.k;
        assert!(fro(&(got - &c)) <= 1e-9 * (1.0 + fro(&c)), "input {i}, d = {d}");
        assert!(s.residual <= 1e-9 * (1.0 + fro(&c)));
    }
}

#[test]
fn kappa_is_convex_and_nonincreasing_in_c() {
    let grid: Vec<f64> = (0..=12).map(|i| i as f64 / 8.0).collect();
    let queries = [
        (NormSpec::kyfan(1).unwrap(), vec![2, 2, 2]),
        (NormSpec::kyfan(2).unwrap(), vec![2, 3]),
        (NormSpec::kyfan(4).unwrap(), vec![3, 3]),
        (NormSpec::schatten(2.0).unwrap(), vec![2, 3]),
        (NormSpec::schatten(f64::INFINITY).unwrap(), vec![3, 3]),
    ];
    for (spec, dims) in queries {
        let values: Vec<f64> = grid
            .iter()
            .map(|&c| kappa(&KappaQuery::unrestricted(spec, c, dims.clone()).unwrap()).unwrap().value)
            .collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{spec:?} {dims:?}: {values:?}");
        }
        for w in values.windows(3) {
            assert!(w[1] <= (w[0] + w[2]) / 2.0 + 1e-6, "{spec:?} {dims:?}: {values:?}");
        }
    }
}
