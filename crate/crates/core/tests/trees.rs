use num_rational::Rational64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wildsim::tree::{enumerate_trees, sample_tree, McKeanTree};
use wildsim::Error;

fn grow(choices: &[usize]) -> McKeanTree {
    let mut t = McKeanTree::leaf();
    for (m, &c) in choices.iter().enumerate() {
        t = t.germinate(c % (m + 1) + 1).unwrap();
    }
    t
}

proptest! {
    #[test]
    fn germination_updates_depths(choices in prop::collection::vec(0usize..1000, 0..40), pick in 0usize..1000) {
        let t = grow(&choices);
        let n = t.leaf_count();
        let k = pick % n + 1;
        let before = t.depths();
        let after = t.germinate(k).unwrap().depths();
        let mut expected = before[..k - 1].to_vec();
        expected.push(before[k - 1] + 1);
        expected.push(before[k - 1] + 1);
        expected.extend_from_slice(&before[k..]);
        prop_assert_eq!(after, expected);
    }

    #[test]
    fn encoding_round_trips(choices in prop::collection::vec(0usize..1000, 0..40)) {
        let t = grow(&choices);
        let parsed: McKeanTree = t.encode().parse().unwrap();
        prop_assert_eq!(&parsed, &t);
        if !t.is_leaf() {
            let (l, r) = t.split().unwrap();
            prop_assert_eq!(McKeanTree::join(&l, &r), t);
        }
    }

    #[test]
    fn sampled_trees_have_requested_size(n in 1usize..200, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(sample_tree(n, &mut rng).unwrap().leaf_count(), n);
    }
}

#[test]
fn probabilities_sum_to_one() {
    for n in 1..=8 {
        let total: f64 = enumerate_trees(n).unwrap().iter().map(|t| t.probability()).sum();
        assert!((total - 1.0).abs() < 1e-13, "n = {n}: {total}");
    }
}

#[test]
fn mean_total_depth_follows_chain_recursion() {
    // Germinating a uniform leaf adds its depth plus two to Σ δ_j, so
    // E D_{n+1} = (1 + 1/n) E D_n + 2.
    let mut expected = Rational64::from_integer(0);
    for n in 1..=8i64 {
        let mean: Rational64 = enumerate_trees(n as usize)
            .unwrap()
            .iter()
            .map(|t| t.probability_exact().unwrap() * Rational64::from_integer(t.depths().iter().sum::<u32>() as i64))
            .sum();
        assert_eq!(mean, expected, "n = {n}");
        expected = expected * Rational64::new(n + 1, n) + Rational64::from_integer(2);
    }
}

#[test]
fn comb_and_balanced_probabilities() {
    let comb: McKeanTree = "(((..).).)".parse().unwrap();
    assert_eq!(comb.probability_exact().unwrap(), Rational64::new(1, 6));
    let balanced: McKeanTree = "((..)(..))".parse().unwrap();
    assert_eq!(balanced.probability_exact().unwrap(), Rational64::new(1, 3));
}

#[test]
fn out_of_range_germination_is_rejected() {
    let t = McKeanTree::leaf().germinate(1).unwrap();
    assert!(matches!(t.germinate(3), Err(Error::IndexOutOfRange { index: 3, leaves: 2 })));
    assert!(matches!(t.germinate(0), Err(Error::IndexOutOfRange { .. })));
    assert!(matches!(enumerate_trees(9), Err(Error::TooLarge { .. })));
}
