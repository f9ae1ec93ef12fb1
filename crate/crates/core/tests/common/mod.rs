//! Shared fixtures and independent brute-force oracles for the
//! integration suites.
//!
//! The oracles deliberately avoid the library's search code: they filter
//! all n! permutations with a direct edge-multiset mapping check, so they
//! can referee the backtracking enumeration.

#![allow(dead_code)]

use cardshuffle::graph::{DirectedGraph, Hypergraph};
use cardshuffle::perm::Permutation;
use itertools::Itertools;

pub fn sample_digraph() -> DirectedGraph {
    DirectedGraph::new(5, vec![(1, 3), (1, 2), (3, 1), (3, 2), (2, 4), (2, 5)]).unwrap()
}

pub fn sample_hypergraph() -> Hypergraph {
    Hypergraph::new(5, vec![vec![1, 2, 3], vec![2, 4], vec![2, 5]]).unwrap()
}

pub fn directed_cycle(n: usize) -> DirectedGraph {
    let edges = (1..=n).map(|i| (i, i % n + 1)).collect();
    DirectedGraph::new(n, edges).unwrap()
}

pub fn perm(text: &str, degree: usize) -> Permutation {
    Permutation::parse_cycles(text, degree).unwrap()
}

pub fn all_permutations(n: usize) -> Vec<Permutation> {
    (1..=n)
        .permutations(n)
        .map(|images| Permutation::from_images(images).unwrap())
        .collect()
}

/// Whether `f` maps `a`'s edge multiset exactly onto `b`'s.
fn maps_edges(a: &DirectedGraph, b: &DirectedGraph, f: &Permutation) -> bool {
    let mut mapped: Vec<(usize, usize)> = a
        .edges()
        .iter()
        .map(|&(u, v)| (f.image(u), f.image(v)))
        .collect();
    mapped.sort_unstable();
    let mut target = b.edges().to_vec();
    target.sort_unstable();
    mapped == target
}

pub fn brute_force_graph_isomorphisms(a: &DirectedGraph, b: &DirectedGraph) -> Vec<Permutation> {
    if a.vertex_count() != b.vertex_count() || a.edge_count() != b.edge_count() {
        return Vec::new();
    }
    all_permutations(a.vertex_count())
        .into_iter()
        .filter(|f| maps_edges(a, b, f))
        .collect()
}

/// Whether `f` maps `a`'s hyperedge family onto `b`'s as a multiset of sets.
fn maps_family(a: &Hypergraph, b: &Hypergraph, f: &Permutation) -> bool {
    let mut mapped: Vec<Vec<usize>> = a
        .edges()
        .iter()
        .map(|edge| {
            let mut e: Vec<usize> = edge.iter().map(|&v| f.image(v)).collect();
            e.sort_unstable();
            e
        })
        .collect();
    mapped.sort();
    let mut target = b.edges().to_vec();
    target.sort();
    mapped == target
}

pub fn brute_force_hypergraph_isomorphisms(a: &Hypergraph, b: &Hypergraph) -> Vec<Permutation> {
    if a.vertex_count() != b.vertex_count() || a.edge_count() != b.edge_count() {
        return Vec::new();
    }
    all_permutations(a.vertex_count())
        .into_iter()
        .filter(|f| maps_family(a, b, f))
        .collect()
}
