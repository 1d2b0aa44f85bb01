//! Property tests over random offspring laws and biases.

use approx::assert_relative_eq;
use gwspeed::network::{build_conductances, effective_conductance_to_level};
use gwspeed::rng::{stream, Domain};
use gwspeed::*;
use proptest::prelude::*;

/// Leafless laws on {1..5} with two or three support points.
fn leafless_law() -> impl Strategy<Value = OffspringDistribution> {
    (prop::collection::btree_set(1i64..=5, 2..=3), prop::collection::vec(1u32..10, 3)).prop_map(
        |(support, weights)| {
            let total: u32 = weights.iter().take(support.len()).sum();
            let entries: Vec<(i64, f64)> = support
                .iter()
                .zip(&weights)
                .map(|(&k, &w)| (k, w as f64 / total as f64))
                .collect();
            // Absorb rounding so the probabilities sum to one.
            let head: f64 = entries[1..].iter().map(|e| e.1).sum();
            let mut entries = entries;
            entries[0].1 = 1.0 - head;
            OffspringDistribution::new(&entries).unwrap()
        },
    )
}

fn small_tree(dist: &OffspringDistribution, index: u64, n: u32) -> QuenchedTree {
    let mut t = QuenchedTree::new(dist.clone(), stream(11, Domain::Tree, index));
    t.materialize(n);
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recursion_matches_conductance(dist in leafless_law(), index in 0u64..1000, n in 1u32..6, lambda in 0.01f64..4.0) {
        let tree = small_tree(&dist, index, n);
        let mut starred = tree.clone();
        starred.attach_star_root().unwrap();
        let beta = compute_beta(&tree, n, lambda).unwrap().root_beta();
        let c = effective_conductance_to_level(&build_conductances(&starred, lambda, n).unwrap(), n).unwrap();
        assert_relative_eq!(beta, c, max_relative = 1e-12);
    }

    #[test]
    fn derivative_matches_path_sum_and_difference(dist in leafless_law(), index in 0u64..1000, n in 1u32..6, lambda in 0.05f64..3.0) {
        let tree = small_tree(&dist, index, n);
        let table = compute_beta_with_derivative(&tree, n, lambda).unwrap();
        let d = table.root_dbeta().unwrap();
        prop_assert!(d < 0.0);
        assert_relative_eq!(d, beta_derivative_path_sum(&tree, &table).unwrap(), max_relative = 1e-12);
        let h = 1e-5;
        let fd = (compute_beta(&tree, n, lambda + h).unwrap().root_beta()
            - compute_beta(&tree, n, lambda - h).unwrap().root_beta()) / (2.0 * h);
        prop_assert!((fd - d).abs() < 1e-6, "fd {} vs {}", fd, d);
    }

    #[test]
    fn truncation_is_monotone_and_bounded(dist in leafless_law(), index in 0u64..1000, lambda in 0.0f64..4.0) {
        let tree = small_tree(&dist, index, 6);
        let m1 = dist.min_degree() as f64;
        let floor = 1.0 - lambda.min(m1) / m1;
        let mut prev = 1.0;
        for n in 0..=6 {
            let b = compute_beta(&tree, n, lambda).unwrap().root_beta();
            prop_assert!(b <= prev + 1e-15);
            prop_assert!(b >= floor - 1e-12);
            prev = b;
        }
    }

    #[test]
    fn sandwich_is_ordered(dist in leafless_law(), index in 0u64..1000, n in 1u32..6, lambda in 0.05f64..3.0) {
        let tree = small_tree(&dist, index, n);
        let (lo, mid, hi) = conductance_sandwich(&tree, lambda, n).unwrap();
        prop_assert!(lo <= mid + 1e-12 && mid <= hi + 1e-12);
    }

    #[test]
    fn pmf_text_and_json_round_trip(dist in leafless_law()) {
        let again = OffspringDistribution::parse_pmf(&dist.to_pmf_string()).unwrap();
        prop_assert_eq!(again.entries(), dist.entries());
        let json = serde_json::to_string(&dist.to_json()).unwrap();
        let back = OffspringDistribution::from_json(&json).unwrap();
        prop_assert_eq!(back.entries(), dist.entries());
    }

    #[test]
    fn transition_kernel_sums_to_one(dist in leafless_law(), lambda in 0.0f64..5.0, steps in 1usize..50) {
        let mut tree = QuenchedTree::new(dist, stream(3, Domain::Tree, 0));
        tree.attach_star_root().unwrap();
        let mut state = WalkState::at_root(&tree, stream(3, Domain::Walk, 0));
        for _ in 0..steps {
            for graph in [Graph::Tree, Graph::StarTree] {
                let probs = gwspeed::walker::transition_probabilities(&mut tree, state.position, lambda, graph);
                let total: f64 = probs.iter().map(|p| p.1).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
            transition_step(&mut tree, &mut state, lambda, Graph::StarTree);
            prop_assert!(tree.depth(state.position) >= -1);
        }
    }
}
