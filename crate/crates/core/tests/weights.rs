use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wildsim::exec::Summary;
use wildsim::kernel::{make_kernel, KernelSpec, Preset};
use wildsim::sampler::{LeafWeights, TreeSample};
use wildsim::tree::enumerate_trees;
use wildsim::weights::{
    elementary_symmetric, expected_sum, expected_sum_closed_form, leaf_weights, power_sum, psi_envelope,
    symmetric_function_bound,
};
use wildsim::Error;

fn xabs() -> wildsim::kernel::CollisionKernel {
    make_kernel(&KernelSpec::from(Preset::Xabs)).unwrap()
}

/// `S_k` from the coefficients of `Π (1 + a_j z)`.
fn elementary_by_expansion(a: &[f64], k_max: usize) -> Vec<f64> {
    let mut c = vec![0.0; k_max + 1];
    c[0] = 1.0;
    for &x in a {
        for k in (1..=k_max).rev() {
            c[k] += x * c[k - 1];
        }
    }
    c[1..].to_vec()
}

proptest! {
    #[test]
    fn squared_weights_sum_to_one(nu in 1usize..1000, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = TreeSample::grow(nu, &xabs(), &mut rng);
        prop_assert!((power_sum(&s.pi, 2.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn newton_identities_match_expansion(a in prop::collection::vec(0.0f64..1.0, 1..12)) {
        let k_max = a.len().min(8);
        let (_, s) = elementary_symmetric(&a, k_max);
        let direct = elementary_by_expansion(&a, k_max);
        for (x, y) in s.iter().zip(&direct) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn recursion_and_closed_form_agree(alpha in 0.0f64..1.0, n in 1usize..60) {
        let r = expected_sum(alpha, n);
        prop_assert!((r - expected_sum_closed_form(alpha, n)).abs() <= 1e-10 * r.max(1.0));
    }

    #[test]
    fn envelope_is_nonincreasing(pi in prop::collection::vec(0.01f64..1.0, 1..8), lambda in 0.1f64..3.0, q in 0.05f64..2.0) {
        let mut prev = psi_envelope(lambda, q, &pi, 0.0);
        prop_assert!((prev - 1.0).abs() < 1e-15);
        for i in 1..50 {
            let v = psi_envelope(lambda, q, &pi, 0.2 * i as f64);
            prop_assert!(v <= prev + 1e-15);
            prev = v;
        }
    }
}

#[test]
fn weights_are_path_products() {
    let k = xabs();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=8 {
        for tree in enumerate_trees(n).unwrap() {
            let phis: Vec<f64> = (1..n).map(|_| k.sample_phi(&mut rng)).collect();
            let pi = leaf_weights(&tree, &phis, 1).unwrap();
            let zeta = leaf_weights(&tree, &phis, 2).unwrap();
            let direct: Vec<f64> = tree.fold_paths(1.0, |w, m, side| {
                w * match side {
                    wildsim::tree::Side::Left => phis[m].cos(),
                    wildsim::tree::Side::Right => phis[m].sin(),
                }
            });
            for ((a, b), z) in pi.values.iter().zip(&direct).zip(&zeta.values) {
                assert!((a - b).abs() < 1e-15);
                assert!(z.abs() <= 1.0);
            }
            assert!((pi.power_sum(2.0) - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn conditional_identity_by_enumeration() {
    // Average of Σ|π_j|^s over trees weighted by p_n and over kernel draws of φ.
    let k = xabs();
    let fs = k.functionals(&[1.0, 3.0, 4.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 2..=5 {
        for s in [1.0, 3.0, 4.0] {
            let mut mean = 0.0;
            let mut var = 0.0;
            for tree in enumerate_trees(n).unwrap() {
                let mut acc = Summary::default();
                for _ in 0..10_000 {
                    let phis: Vec<f64> = (1..n).map(|_| k.sample_phi(&mut rng)).collect();
                    acc.push(leaf_weights(&tree, &phis, 1).unwrap().power_sum(s));
                }
                let p = tree.probability();
                mean += p * acc.mean;
                var += (p * acc.std_error()).powi(2);
            }
            let target = expected_sum(fs.l(s).unwrap(), n);
            assert!((mean - target).abs() <= 4.0 * var.sqrt(), "n = {n}, s = {s}: {mean} vs {target}");
        }
    }
}

#[test]
fn leaf_weight_orders_agree_with_sampler() {
    let k = xabs();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lw = LeafWeights::default();
    for nu in [1, 2, 7, 50] {
        lw.grow(nu, &k, &mut rng);
        assert_eq!(lw.pi.len(), nu);
        assert!((power_sum(&lw.pi, 2.0) - 1.0).abs() < 1e-13);
        assert!(lw.zeta.iter().chain(&lw.eta).all(|x| x.abs() <= 1.0));
    }
}

#[test]
fn newton_bound_examples() {
    let r = symmetric_function_bound(&[1.0 / 3.0; 3], 1, 1.0 / 3.0).unwrap();
    assert!(r.hypothesis_holds && r.passed());
    assert!((r.elementary[1] - 1.0 / 3.0).abs() < 1e-15);
    let single = symmetric_function_bound(&[1.0], 1, 0.5).unwrap();
    assert!(!single.hypothesis_holds && single.violations.is_empty());
    let uniform = symmetric_function_bound(&[1.0 / 30.0; 30], 5, 1.0 / 30.0).unwrap();
    assert!(uniform.passed());
    assert!(matches!(symmetric_function_bound(&[0.5, 0.4], 1, 0.5), Err(Error::NotNormalized { .. })));
}
