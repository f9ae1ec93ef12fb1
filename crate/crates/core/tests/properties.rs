//! Property suites and golden reproductions of the worked examples.

mod common;

use num_rational::BigRational;
use proptest::prelude::*;

use cardshuffle::cards::{enumerate_runs, Card, CardTable, ChoiceSource, TraceEvent, DEFAULT_BRANCH_CAP};
use cardshuffle::gear::{gear_graph, GearSpec};
use cardshuffle::graph::{is_graph_automorphism, DirectedGraph, Hypergraph};
use cardshuffle::perm::{Permutation, PermutationGroup, DEFAULT_GROUP_CAP};
use cardshuffle::protocols::{
    run_hypergraph_shuffle, run_new_graph_shuffle, Instance, ProtocolError,
};

use common::*;

fn arb_permutation(max_degree: usize) -> impl Strategy<Value = Permutation> {
    (1..=max_degree).prop_flat_map(|n| {
        Just((1..=n).collect::<Vec<usize>>())
            .prop_shuffle()
            .prop_map(|images| Permutation::from_images(images).unwrap())
    })
}

fn arb_digraph(max_n: usize, max_m: usize) -> impl Strategy<Value = DirectedGraph> {
    (1..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec((1..=n, 1..=n), 0..=max_m)
            .prop_map(move |edges| DirectedGraph::new(n, edges).unwrap())
    })
}

fn arb_hypergraph(max_n: usize, max_m: usize) -> impl Strategy<Value = Hypergraph> {
    (1..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec(
            proptest::sample::subsequence((1..=n).collect::<Vec<usize>>(), 1..=n),
            0..=max_m,
        )
        .prop_map(move |edges| Hypergraph::new(n, edges).unwrap())
    })
}

/// Undirected simple-ish graphs as hypergraphs with 2-vertex edges
/// (duplicate edges allowed, self-loops not).
fn arb_undirected(max_n: usize, max_m: usize) -> impl Strategy<Value = Hypergraph> {
    (2..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec((1..=n, 1..=n), 0..=max_m).prop_map(move |pairs| {
            let edges: Vec<Vec<usize>> = pairs
                .into_iter()
                .filter(|&(u, v)| u != v)
                .map(|(u, v)| vec![u.min(v), u.max(v)])
                .collect();
            Hypergraph::new(n, edges).unwrap()
        })
    })
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

proptest! {
    #[test]
    fn inverse_cancels_on_both_sides(p in arb_permutation(10)) {
        prop_assert!(p.compose(&p.inverse()).unwrap().is_identity());
        prop_assert!(p.inverse().compose(&p).unwrap().is_identity());
    }

    #[test]
    fn cycle_notation_round_trips(p in arb_permutation(12)) {
        let back = Permutation::parse_cycles(&p.to_string(), p.degree()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn cyclic_group_order_is_lcm_of_cycle_lengths(g in arb_permutation(10)) {
        let group = PermutationGroup::generate(g.degree(), std::slice::from_ref(&g), DEFAULT_GROUP_CAP).unwrap();
        let expected = g.cycles().iter().map(Vec::len).fold(1, lcm);
        prop_assert_eq!(group.order(), expected);
    }

    #[test]
    fn applying_a_composition_equals_applying_in_sequence(
        (p, q, items) in (1..=8usize).prop_flat_map(|n| {
            let perm = Just((1..=n).collect::<Vec<usize>>())
                .prop_shuffle()
                .prop_map(|im| Permutation::from_images(im).unwrap());
            (perm.clone(), perm, proptest::collection::vec(0..100u8, n..=n))
        })
    ) {
        let composed = p.compose(&q).unwrap();
        let direct = composed.apply_to(&items).unwrap();
        let staged = p.apply_to(&q.apply_to(&items).unwrap()).unwrap();
        prop_assert_eq!(direct, staged);
    }

    #[test]
    fn degree_sums_both_equal_the_edge_count(g in arb_digraph(6, 12)) {
        let profile = g.degrees();
        prop_assert_eq!(profile.indegree.iter().sum::<usize>(), g.edge_count());
        prop_assert_eq!(profile.outdegree.iter().sum::<usize>(), g.edge_count());
    }

    #[test]
    fn backtracking_graph_isomorphisms_match_brute_force(g in arb_digraph(5, 8)) {
        let fast = g.isomorphisms_to(&g);
        let mut slow = brute_force_graph_isomorphisms(&g, &g);
        slow.sort();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn backtracking_hypergraph_isomorphisms_match_brute_force(h in arb_hypergraph(4, 4)) {
        let fast = h.isomorphisms_to(&h);
        let mut slow = brute_force_hypergraph_isomorphisms(&h, &h);
        slow.sort();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn automorphism_groups_validate_and_sit_inside_degree_subgroups(g in arb_digraph(5, 8)) {
        let aut = g.automorphism_group();
        aut.validate().unwrap();
        let (h_in, h_out) = g.degree_preserving_subgroups(1 << 20).unwrap();
        for p in aut.iter() {
            prop_assert!(h_in.contains(p));
            prop_assert!(h_out.contains(p));
        }
    }

    #[test]
    fn hypergraph_automorphisms_preserve_incidence_counts(h in arb_hypergraph(5, 4)) {
        let aut = h.automorphism_group();
        aut.validate().unwrap();
        let s = h.incidence_preserving_subgroup(1 << 20).unwrap();
        for p in aut.iter() {
            prop_assert!(s.contains(p));
        }
    }

    #[test]
    fn isomorphism_count_is_zero_or_the_automorphism_count(
        (g, g2) in (1..=4usize).prop_flat_map(|n| {
            let edges = proptest::collection::vec((1..=n, 1..=n), 0..=5);
            (edges.clone(), edges).prop_map(move |(e1, e2)| {
                (DirectedGraph::new(n, e1).unwrap(), DirectedGraph::new(n, e2).unwrap())
            })
        })
    ) {
        let isos = g.isomorphisms_to(&g2).len();
        let aut = g.automorphism_group().order();
        prop_assert!(isos == 0 || isos == aut, "isos={isos} aut={aut}");
    }

    #[test]
    fn relabeled_graphs_have_a_full_isomorphism_class(
        (g, relabel) in (1..=5usize).prop_flat_map(|n| {
            (
                proptest::collection::vec((1..=n, 1..=n), 0..=8)
                    .prop_map(move |e| DirectedGraph::new(n, e).unwrap()),
                Just((1..=n).collect::<Vec<usize>>())
                    .prop_shuffle()
                    .prop_map(|im| Permutation::from_images(im).unwrap()),
            )
        })
    ) {
        let relabeled_edges: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .map(|&(u, v)| (relabel.image(u), relabel.image(v)))
            .collect();
        let g2 = DirectedGraph::new(g.vertex_count(), relabeled_edges).unwrap();
        let isos = g.isomorphisms_to(&g2);
        prop_assert!(isos.contains(&relabel));
        prop_assert_eq!(isos.len(), g.automorphism_group().order());
    }

    #[test]
    fn undirected_graphs_have_equal_hypergraph_and_digraph_automorphisms(
        h in arb_undirected(5, 6)
    ) {
        let as_digraph = h.to_directed().unwrap();
        prop_assert_eq!(h.automorphism_group(), as_digraph.automorphism_group());
    }

    #[test]
    fn generator_powers_are_gear_graph_automorphisms(g in arb_permutation(10)) {
        let graph = gear_graph(&g);
        let powers = PermutationGroup::generate(g.degree(), std::slice::from_ref(&g), DEFAULT_GROUP_CAP).unwrap();
        for p in powers.iter() {
            prop_assert!(is_graph_automorphism(&graph, p));
        }
    }

    #[test]
    fn gear_graph_edge_count_follows_the_gcd_arithmetic(g in arb_permutation(10)) {
        let spec = GearSpec::new(&g);
        let cycles = spec.cycles();
        let mut expected: usize = cycles.iter().map(Vec::len).sum();
        for k in 0..cycles.len() {
            for k2 in k + 1..cycles.len() {
                let d = spec.cycle_gcd(k, k2);
                if d != 1 {
                    expected += cycles[k].len() * cycles[k2].len() / d;
                }
            }
        }
        prop_assert_eq!(gear_graph(&g).edge_count(), expected);
    }

    #[test]
    fn generalized_pss_branch_count_is_the_product_of_class_factorials(
        sizes in proptest::collection::vec(1..=3usize, 1..=5)
    ) {
        let piles: Vec<Vec<Card>> = sizes
            .iter()
            .map(|&s| (0..s).map(|_| Card::numbered(9)).collect())
            .collect();
        let indices: Vec<usize> = (0..sizes.len()).collect();
        let leaves = enumerate_runs(
            |choice| {
                let mut table = CardTable::new(piles.clone());
                table.generalized_pss(&indices, choice)?;
                Ok::<_, cardshuffle::cards::CardError>(())
            },
            100_000,
        )
        .unwrap();

        let mut class_sizes: std::collections::BTreeMap<usize, usize> = Default::default();
        for &s in &sizes {
            *class_sizes.entry(s).or_default() += 1;
        }
        let expected: usize = class_sizes
            .values()
            .map(|&c| (1..=c).product::<usize>())
            .product();
        prop_assert_eq!(leaves.len(), expected);

        let total: BigRational = leaves.iter().map(|(_, p)| p.clone()).sum();
        prop_assert_eq!(total, BigRational::new(1.into(), 1.into()));
    }
}

/// The trace carries no information about drawn permutations before the
/// first card is turned: across all branches, the event prefix up to the
/// first turn is constant.
#[test]
fn trace_prefix_before_first_turn_is_branch_independent() {
    let g = sample_digraph();
    let leaves = enumerate_runs(
        |c| {
            run_new_graph_shuffle(&g, c).map(|run| {
                let events = run.trace.events().to_vec();
                let cut = events
                    .iter()
                    .position(|e| matches!(e, TraceEvent::Turned { .. }))
                    .unwrap();
                events[..cut].to_vec()
            })
        },
        DEFAULT_BRANCH_CAP,
    )
    .unwrap();
    let mut prefixes: Vec<_> = leaves.into_iter().map(|(prefix, _)| prefix).collect();
    prefixes.sort_by_key(|p| format!("{p:?}"));
    prefixes.dedup();
    assert_eq!(prefixes.len(), 1, "all branches share one pre-turn trace prefix");
}

/// Hidden-stage permutations recorded per run preserve the degree data
/// that defines their scramble classes.
#[test]
fn recorded_stage_permutations_preserve_their_degree_classes() {
    let g = sample_digraph();
    let profile = g.degrees();
    for seed in 0..25 {
        let run = run_new_graph_shuffle(&g, &mut ChoiceSource::seeded(seed)).unwrap();
        let sigma = &run.intermediates.sigma;
        let tau = run.intermediates.tau.as_ref().unwrap();
        for i in 1..=5 {
            assert_eq!(profile.indegree[i - 1], profile.indegree[sigma.image(i) - 1]);
            assert_eq!(profile.outdegree[i - 1], profile.outdegree[tau.image(i) - 1]);
        }
    }

    let h = sample_hypergraph();
    let incidence = h.incidence_counts();
    let sizes: Vec<usize> = h.edges().iter().map(Vec::len).collect();
    for seed in 0..25 {
        let run = run_hypergraph_shuffle(&h, &mut ChoiceSource::seeded(seed)).unwrap();
        let sigma = &run.intermediates.sigma;
        for j in 1..=sizes.len() {
            assert_eq!(sizes[j - 1], sizes[sigma.image(j) - 1]);
        }
        let tau = run.intermediates.tau.as_ref().unwrap();
        for i in 1..=5 {
            assert_eq!(incidence[i - 1], incidence[tau.image(i) - 1]);
        }
    }
}

/// Some branch of the exhaustive one-deck run observes exactly the
/// relabeled graph from the worked example, and the chosen relabeling maps
/// it back onto the input.
#[test]
fn golden_observed_graph_occurs_in_the_exhaustive_run() {
    let g = sample_digraph();
    let target = {
        let mut edges = vec![(1, 2), (1, 4), (2, 5), (2, 3), (4, 2), (4, 1)];
        edges.sort_unstable();
        edges
    };
    let leaves = enumerate_runs(
        |c| {
            run_new_graph_shuffle(&g, c).map(|run| match run.intermediates.observed {
                Instance::Digraph(observed) => {
                    let mut edges = observed.edges().to_vec();
                    edges.sort_unstable();
                    (edges, run.intermediates.psi, run.realized)
                }
                _ => unreachable!("graph protocol observes a digraph"),
            })
        },
        DEFAULT_BRANCH_CAP,
    )
    .unwrap();
    let matching: Vec<_> = leaves
        .iter()
        .filter(|((edges, _, _), _)| *edges == target)
        .collect();
    assert!(!matching.is_empty(), "the example graph never showed up");
    for ((_, psi, realized), _) in matching {
        // psi carries the observed graph onto the input; the known map
        // (1->3, 2->2, 3->4, 4->1, 5->5) is among the valid choices.
        let known = Permutation::from_images(vec![3, 2, 4, 1, 5]).unwrap();
        let observed = DirectedGraph::new(
            5,
            vec![(1, 2), (1, 4), (2, 5), (2, 3), (4, 2), (4, 1)],
        )
        .unwrap();
        let isos = observed.isomorphisms_to(&g);
        assert!(isos.contains(&known));
        assert!(isos.contains(psi));
        assert!(is_graph_automorphism(&g, realized));
    }
}

/// Same for the hypergraph protocol. The first helper pile (the size-3
/// hyperedge) is alone in its size class and cannot move, so every
/// reachable observed family lists its size-3 hyperedge first; a concrete
/// reachable relabeling occurs and the expected isomorphism onto it is
/// found.
#[test]
fn golden_observed_hypergraph_occurs_in_the_exhaustive_run() {
    let h = sample_hypergraph();
    let leaves = enumerate_runs(
        |c| {
            run_hypergraph_shuffle(&h, c).map(|run| match run.intermediates.observed {
                Instance::Hypergraph(observed) => observed.edges().to_vec(),
                _ => unreachable!("hypergraph protocol observes a hypergraph"),
            })
        },
        DEFAULT_BRANCH_CAP,
    )
    .unwrap();
    for (family, _) in &leaves {
        let sizes: Vec<usize> = family.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 2, 2], "family {family:?}");
    }
    // Swapping the two 2-card helper piles and exchanging vertices 1 and 4
    // in the second scramble stage yields this family.
    let target = vec![vec![2, 3, 4], vec![2, 5], vec![1, 2]];
    assert!(
        leaves.iter().any(|(family, _)| *family == target),
        "the expected reachable family never showed up"
    );
    let observed = Hypergraph::new(5, target).unwrap();
    assert!(h
        .isomorphisms_to(&observed)
        .contains(&Permutation::parse_cycles("(1 4)", 5).unwrap()));
}

/// The cyclic shuffle of a full cycle is a random cut: uniform over the
/// rotations.
#[test]
fn cyclic_shuffle_of_a_full_cycle_is_a_random_cut() {
    let g = perm("(1 2 3)", 3);
    let leaves = enumerate_runs(
        |c| cardshuffle::gear::run_cyclic_shuffle(&g, c).map(|run| run.realized),
        DEFAULT_BRANCH_CAP,
    )
    .unwrap();
    let mut acc: std::collections::BTreeMap<Permutation, BigRational> = Default::default();
    for (p, prob) in leaves {
        *acc.entry(p).or_insert_with(|| BigRational::new(0.into(), 1.into())) += prob;
    }
    assert_eq!(acc.len(), 3);
    for text in ["()", "(1 2 3)", "(1 3 2)"] {
        assert_eq!(
            acc.get(&perm(text, 3)).unwrap(),
            &BigRational::new(1.into(), 3.into())
        );
    }
}

/// Degenerate but legal: an edgeless graph turns the one-deck protocol
/// into a full scramble, uniform over all n! permutations.
#[test]
fn edgeless_graph_protocol_is_a_full_uniform_scramble() {
    let g = DirectedGraph::new(3, vec![]).unwrap();
    let report = cardshuffle::verify::exact_output_distribution(
        |c| run_new_graph_shuffle(&g, c),
        DEFAULT_BRANCH_CAP,
    )
    .unwrap();
    assert_eq!(report.distribution.support_size(), 6);
    let aut = g.automorphism_group();
    assert!(cardshuffle::verify::check_correctness(&report.distribution, &aut).pass);
}

/// The two-deck protocol's scramble stage classes piles by total degree,
/// so it mixes vertices the one-deck protocol keeps apart; its exhaustive
/// verification must still come out exact on random instances.
#[test]
fn two_deck_protocol_verifies_exhaustively_on_random_digraphs() {
    use cardshuffle::protocols::run_ms_graph_shuffle;
    use cardshuffle::verify::{check_correctness, check_security, exact_output_distribution};
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for case in 0..25 {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(0..=3);
        let edges: Vec<(usize, usize)> = (0..m)
            .map(|_| (rng.random_range(1..=n), rng.random_range(1..=n)))
            .collect();
        let g = DirectedGraph::new(n, edges).unwrap();
        let label = format!("case {case}: n={n} edges={:?}", g.edges());

        let dist = exact_output_distribution(|c| run_ms_graph_shuffle(&g, c), DEFAULT_BRANCH_CAP)
            .unwrap();
        let aut = PermutationGroup::from_elements(n, brute_force_graph_isomorphisms(&g, &g))
            .unwrap();
        assert!(check_correctness(&dist.distribution, &aut).pass, "{label}");

        let security =
            check_security(|c| run_ms_graph_shuffle(&g, c), DEFAULT_BRANCH_CAP).unwrap();
        assert!(security.pass, "{label}");
    }
}

/// Enumeration leaves always sum to exactly one for protocol programs.
#[test]
fn protocol_enumeration_probabilities_sum_to_one() {
    let instances: Vec<DirectedGraph> = vec![
        sample_digraph(),
        directed_cycle(2),
        DirectedGraph::new(2, vec![(1, 2), (1, 2)]).unwrap(),
        DirectedGraph::new(3, vec![(1, 1), (2, 3)]).unwrap(),
    ];
    for g in instances {
        let leaves = enumerate_runs::<_, ProtocolError, _>(
            |c| run_new_graph_shuffle(&g, c).map(|r| r.realized),
            DEFAULT_BRANCH_CAP,
        )
        .unwrap();
        let total: BigRational = leaves.iter().map(|(_, p)| p.clone()).sum();
        assert_eq!(total, BigRational::new(1.into(), 1.into()), "{:?}", g.edges());
    }
}
