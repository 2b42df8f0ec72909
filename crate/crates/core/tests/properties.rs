mod common;

use proptest::prelude::*;
use treeproj::oracle::{
    brute_force_project, count_rooted_trees, enumerate_rooted_trees, is_valid_decision,
};
use treeproj::{
    complexity_bound, forward_pass, gta_project, project, DecisionVector, Signal, Support,
    TreeTopology,
};

use common::{rel_close, small_topologies, subset_filter_trees};

// Oracle runs stay cheap: at most this many rooted trees per instance.
const ORACLE_BUDGET: u128 = 100_000;

fn instance() -> impl Strategy<Value = (TreeTopology, Signal, usize)> {
    prop::sample::select(small_topologies())
        .prop_flat_map(|t| {
            let n = t.len();
            let coef = prop_oneof![1 => Just(0.0), 1 => Just(1.0), 6 => -10.0..10.0f64];
            (
                Just(t),
                prop::collection::vec(coef, n).prop_map(|v| Signal::new(v).unwrap()),
                1..=n.min(12),
            )
        })
        .prop_filter("enumeration too large", |(t, _, k)| {
            count_rooted_trees(t, *k).unwrap() <= ORACLE_BUDGET
        })
}

fn any_k_instance() -> impl Strategy<Value = (TreeTopology, Signal, usize)> {
    prop::sample::select(small_topologies()).prop_flat_map(|t| {
        let n = t.len();
        (
            Just(t),
            prop::collection::vec(-10.0..10.0f64, n).prop_map(|v| Signal::new(v).unwrap()),
            1..=n,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_brute_force((t, y, k) in instance()) {
        let exact = project(&t, &y, k).unwrap();
        let oracle = brute_force_project(&t, &y, k).unwrap();
        prop_assert!(rel_close(exact.energy, oracle.energy, 1e-9),
            "etp {} vs oracle {}", exact.energy, oracle.energy);
        for s in enumerate_rooted_trees(&t, k).unwrap() {
            prop_assert!(oracle.energy >= s.energy(y.values()));
        }
    }

    #[test]
    fn result_structure((t, y, k) in any_k_instance()) {
        let r = project(&t, &y, k).unwrap();
        prop_assert_eq!(r.support.len(), k);
        prop_assert!(t.is_rooted_tree(&r.support).unwrap());
        for (i, (&p, &v)) in r.projection.iter().zip(y.values()).enumerate() {
            if r.support.contains(i + 1) {
                prop_assert_eq!(p.to_bits(), v.to_bits());
            } else {
                prop_assert_eq!(p, 0.0);
            }
        }
        let bound = complexity_bound(t.order(), t.len(), k).unwrap();
        prop_assert!(r.ops.total() <= bound);
        prop_assert!(r.ops.pass1() <= bound - t.len() as u64);
        prop_assert!(r.ops.pass2_comparisons <= t.len() as u64);
        let tau = DecisionVector::from_support(&r.support, t.len()).unwrap();
        prop_assert!(is_valid_decision(&t, &tau, k).unwrap());
    }

    #[test]
    fn tables_are_consistent((t, y, k) in any_k_instance()) {
        let tables = forward_pass(&t, &y, k).unwrap();
        let d = t.order();
        for i in 1..=t.len() {
            let cap = tables.cap(i).unwrap();
            if cap == 0 {
                continue;
            }
            let level = t.level_of(i).unwrap();
            prop_assert_eq!(tables.energy(i, 0), Some(0.0));
            prop_assert_eq!(tables.energy(i, 1), Some(y.values()[i - 1].powi(2)));
            for l in 1..=cap {
                prop_assert!(tables.energy(i, l).unwrap() >= tables.energy(i, l - 1).unwrap());
            }
            if level == t.levels() {
                continue;
            }
            let child_cap = t.cardinality_cap(k, level + 1).unwrap();
            for l in 2..=cap {
                let g = tables.allocation(i, l).unwrap();
                prop_assert_eq!(g.len(), d);
                prop_assert_eq!(1 + g.iter().map(|&x| x as usize).sum::<usize>(), l);
                prop_assert!(g.iter().all(|&x| x as usize <= child_cap));
                if i == 1 {
                    prop_assert_eq!(g[0], 0);
                }
            }
        }
    }

    #[test]
    fn backtrack_conserves_allocations((t, y, k) in any_k_instance()) {
        let tables = forward_pass(&t, &y, k).unwrap();
        let d = t.order();
        for k_sub in 1..=k {
            let bt = tables.backtrack(k_sub).unwrap();
            prop_assert_eq!(bt.support.len(), k_sub);
            prop_assert_eq!(bt.budget(1), k_sub);
            prop_assert!(rel_close(
                bt.support.energy(y.values()),
                tables.energy(1, k_sub).unwrap(),
                1e-12,
            ));
            for &i in bt.support.nodes() {
                if t.level_of(i).unwrap() == t.levels() {
                    prop_assert_eq!(bt.budget(i), 1);
                    continue;
                }
                let g = tables.allocation(i, bt.budget(i)).unwrap();
                prop_assert_eq!(bt.budget(i), 1 + g.iter().map(|&x| x as usize).sum::<usize>());
                for c in t.children_of(i).unwrap() {
                    prop_assert_eq!(bt.budget(c), g[c - d * (i - 1) - 1] as usize);
                }
            }
        }
    }

    #[test]
    fn energy_nondecreasing_in_k((t, y, _k) in any_k_instance()) {
        let tables = forward_pass(&t, &y, t.len()).unwrap();
        for l in 1..t.len() {
            prop_assert!(tables.energy(1, l + 1).unwrap() >= tables.energy(1, l).unwrap());
        }
    }

    #[test]
    fn idempotent_on_unique_optimum((t, y, k) in any_k_instance()) {
        let y = y.perturbed(1e-6);
        let first = project(&t, &y, k).unwrap();
        let again = project(&t, &Signal::new(first.projection.clone()).unwrap(), k).unwrap();
        prop_assert_eq!(&again.support, &first.support);
        prop_assert_eq!(again.projection, first.projection);
    }

    #[test]
    fn exact_scaling_keeps_support(
        (t, y, k) in instance(),
        c in prop::sample::select(vec![-1.0, 2.0, -0.5, 4.0, 0.125]),
    ) {
        let a = project(&t, &y, k).unwrap();
        let b = project(&t, &y.scaled(c), k).unwrap();
        prop_assert_eq!(a.support, b.support);
    }

    #[test]
    fn greedy_is_valid_and_dominated((t, y, k) in any_k_instance()) {
        let g = gta_project(&t, &y, k).unwrap();
        prop_assert_eq!(g.support.len(), k);
        prop_assert!(t.is_rooted_tree(&g.support).unwrap());
        prop_assert!(project(&t, &y, k).unwrap().energy >= g.energy);
    }
}

#[test]
fn enumeration_matches_subset_filter() {
    for t in small_topologies().into_iter().filter(|t| t.len() <= 16) {
        for k in 1..=t.len() {
            let listed: Vec<Vec<usize>> = enumerate_rooted_trees(&t, k)
                .unwrap()
                .into_iter()
                .map(Vec::from)
                .collect();
            assert_eq!(
                listed,
                subset_filter_trees(&t, k),
                "d={} N={} k={k}",
                t.order(),
                t.len()
            );
        }
    }
}

#[test]
fn rooted_tree_iff_valid_decision() {
    for t in small_topologies().into_iter().filter(|t| t.len() <= 16) {
        let n = t.len();
        for mask in 0u32..(1 << n) {
            let nodes: Vec<usize> = (1..=n).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            let k = nodes.len();
            let support = Support::new(nodes).unwrap();
            let tau = DecisionVector::from_support(&support, n).unwrap();
            let rooted = k > 0 && t.is_rooted_tree(&support).unwrap();
            let k_check = k.max(1);
            assert_eq!(
                rooted,
                is_valid_decision(&t, &tau, k_check).unwrap() && k > 0
            );
        }
    }
}

#[test]
fn optimal_trees_need_not_nest() {
    let t = TreeTopology::new(2, 3).unwrap();
    let y = Signal::new(vec![0.0, 1.0, 4.0, 2.0, 0.0, 0.0, 5.0, 3.0]).unwrap();
    let three = project(&t, &y, 3).unwrap();
    let four = project(&t, &y, 4).unwrap();
    assert_eq!(three.support.nodes(), &[1, 2, 3]);
    assert_eq!(four.support.nodes(), &[1, 2, 4, 7]);
    let gain = four.energy - three.energy;
    assert_eq!(gain, 13.0);
    assert!(y.values().iter().all(|v| v * v != gain));
}
