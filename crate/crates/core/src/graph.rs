//! Directed multigraphs and hypergraphs with isomorphism and automorphism
//! enumeration.
//!
//! Isomorphism enumeration is a backtracking search over vertex images with
//! degree-class pruning. Candidates are tried in ascending order, so result
//! lists are lexicographically sorted by image table.

use std::collections::BTreeMap;

use itertools::Itertools;
use thiserror::Error;

use crate::perm::{PermError, Permutation, PermutationGroup};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {index} endpoint {vertex} out of range 1..={n}")]
    EdgeOutOfRange { index: usize, vertex: usize, n: usize },
    #[error("hyperedge {index} is empty")]
    EmptyHyperedge { index: usize },
    #[error("hyperedge {index} vertex {vertex} out of range 1..={n}")]
    HyperedgeOutOfRange { index: usize, vertex: usize, n: usize },
    #[error("hyperedge {index} repeats vertex {vertex}")]
    DuplicateVertexInHyperedge { index: usize, vertex: usize },
    #[error("hyperedge {index} has {size} vertices, not 2; not an undirected graph")]
    NotAGraph { index: usize, size: usize },
    #[error("subgroup order exceeds cap of {cap} elements")]
    GroupTooLarge { cap: usize },
    #[error(transparent)]
    Perm(#[from] PermError),
}

/// A finite directed multigraph on vertices `1..=n`. Parallel edges and
/// self-loops are allowed; the edge list order is preserved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// Per-vertex indegrees and outdegrees of a directed graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeProfile {
    pub indegree: Vec<usize>,
    pub outdegree: Vec<usize>,
}

impl DirectedGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        for (index, &(u, v)) in edges.iter().enumerate() {
            for vertex in [u, v] {
                if vertex < 1 || vertex > n {
                    return Err(GraphError::EdgeOutOfRange { index, vertex, n });
                }
            }
        }
        Ok(DirectedGraph { n, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> DegreeProfile {
        let mut indegree = vec![0; self.n];
        let mut outdegree = vec![0; self.n];
        for &(u, v) in &self.edges {
            outdegree[u - 1] += 1;
            indegree[v - 1] += 1;
        }
        DegreeProfile { indegree, outdegree }
    }

    /// Targets of the out-edges of `v`, as a multiset sorted ascending.
    pub fn out_targets(&self, v: usize) -> Vec<usize> {
        let mut targets: Vec<usize> = self
            .edges
            .iter()
            .filter(|&&(u, _)| u == v)
            .map(|&(_, w)| w)
            .collect();
        targets.sort_unstable();
        targets
    }

    /// `counts[u-1][v-1]` = multiplicity of the edge `u -> v`.
    fn adjacency_counts(&self) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0; self.n]; self.n];
        for &(u, v) in &self.edges {
            counts[u - 1][v - 1] += 1;
        }
        counts
    }

    /// All vertex bijections onto `other` that preserve every edge
    /// multiplicity, lexicographically sorted by image table. Empty when the
    /// graphs are not isomorphic (including vertex/edge count mismatches).
    pub fn isomorphisms_to(&self, other: &DirectedGraph) -> Vec<Permutation> {
        if self.n != other.n || self.edges.len() != other.edges.len() {
            return Vec::new();
        }
        let a = self.adjacency_counts();
        let b = other.adjacency_counts();
        let sig_a = degree_signatures(&a);
        let sig_b = degree_signatures(&b);
        {
            let mut sa = sig_a.clone();
            let mut sb = sig_b.clone();
            sa.sort_unstable();
            sb.sort_unstable();
            if sa != sb {
                return Vec::new();
            }
        }
        let mut results = Vec::new();
        let mut image = vec![0usize; self.n];
        let mut used = vec![false; self.n];
        backtrack_graph(&a, &b, &sig_a, &sig_b, 0, &mut image, &mut used, &mut results);
        results
    }

    /// The vertex parts of all self-isomorphisms, as a group.
    pub fn automorphism_group(&self) -> PermutationGroup {
        let elements = self.isomorphisms_to(self);
        PermutationGroup::from_elements_unchecked(self.n, elements)
            .expect("automorphisms share the graph degree")
    }

    /// The subgroups of all permutations preserving indegrees pointwise and
    /// outdegrees pointwise. Each is a product of symmetric groups over the
    /// degree classes, enumerated explicitly; fails with `GroupTooLarge`
    /// when a product would exceed `cap` elements.
    pub fn degree_preserving_subgroups(
        &self,
        cap: usize,
    ) -> Result<(PermutationGroup, PermutationGroup), GraphError> {
        let profile = self.degrees();
        let h_in = class_preserving_group(self.n, &profile.indegree, cap)?;
        let h_out = class_preserving_group(self.n, &profile.outdegree, cap)?;
        Ok((h_in, h_out))
    }
}

fn degree_signatures(counts: &[Vec<usize>]) -> Vec<(usize, usize, usize)> {
    let n = counts.len();
    (0..n)
        .map(|v| {
            let out: usize = counts[v].iter().sum();
            let inn: usize = (0..n).map(|u| counts[u][v]).sum();
            (inn, out, counts[v][v])
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn backtrack_graph(
    a: &[Vec<usize>],
    b: &[Vec<usize>],
    sig_a: &[(usize, usize, usize)],
    sig_b: &[(usize, usize, usize)],
    u: usize,
    image: &mut [usize],
    used: &mut [bool],
    results: &mut Vec<Permutation>,
) {
    let n = a.len();
    if u == n {
        results.push(
            Permutation::from_images(image.to_vec()).expect("image table is a bijection"),
        );
        return;
    }
    for v in 0..n {
        if used[v] || sig_a[u] != sig_b[v] {
            continue;
        }
        let consistent = (0..u).all(|w| {
            let fw = image[w] - 1;
            a[u][w] == b[v][fw] && a[w][u] == b[fw][v]
        });
        if !consistent {
            continue;
        }
        image[u] = v + 1;
        used[v] = true;
        backtrack_graph(a, b, sig_a, sig_b, u + 1, image, used, results);
        used[v] = false;
    }
}

/// A finite hypergraph on vertices `1..=n`: an ordered family of vertex
/// sets. Duplicate sets may appear in the family; within one hyperedge no
/// vertex repeats. Each hyperedge is stored sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(n: usize, edges: Vec<Vec<usize>>) -> Result<Self, GraphError> {
        let mut sorted_edges = Vec::with_capacity(edges.len());
        for (index, edge) in edges.into_iter().enumerate() {
            if edge.is_empty() {
                return Err(GraphError::EmptyHyperedge { index });
            }
            let mut edge = edge;
            edge.sort_unstable();
            for pair in edge.windows(2) {
                if pair[0] == pair[1] {
                    return Err(GraphError::DuplicateVertexInHyperedge {
                        index,
                        vertex: pair[0],
                    });
                }
            }
            for &vertex in &edge {
                if vertex < 1 || vertex > n {
                    return Err(GraphError::HyperedgeOutOfRange { index, vertex, n });
                }
            }
            sorted_edges.push(edge);
        }
        Ok(Hypergraph {
            n,
            edges: sorted_edges,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    /// Number of hyperedges containing each vertex.
    pub fn incidence_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for edge in &self.edges {
            for &v in edge {
                counts[v - 1] += 1;
            }
        }
        counts
    }

    /// For each vertex, the ascending list of 1-based indices of the
    /// hyperedges containing it.
    pub fn incidence_lists(&self) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.n];
        for (j, edge) in self.edges.iter().enumerate() {
            for &v in edge {
                lists[v - 1].push(j + 1);
            }
        }
        lists
    }

    /// Interprets a hypergraph whose hyperedges all have exactly two
    /// vertices as an undirected graph and converts it to a directed graph
    /// by replacing each undirected edge with a 2-cycle.
    pub fn to_directed(&self) -> Result<DirectedGraph, GraphError> {
        let mut edges = Vec::with_capacity(2 * self.edges.len());
        for (index, edge) in self.edges.iter().enumerate() {
            if edge.len() != 2 {
                return Err(GraphError::NotAGraph {
                    index,
                    size: edge.len(),
                });
            }
            edges.push((edge[0], edge[1]));
            edges.push((edge[1], edge[0]));
        }
        DirectedGraph::new(self.n, edges)
    }

    /// All vertex bijections under which the image family equals `other`'s
    /// family as a multiset of sets. Lexicographically sorted.
    pub fn isomorphisms_to(&self, other: &Hypergraph) -> Vec<Permutation> {
        if self.n != other.n || self.edges.len() != other.edges.len() {
            return Vec::new();
        }
        let mut sizes_a: Vec<usize> = self.edges.iter().map(|e| e.len()).collect();
        let mut sizes_b: Vec<usize> = other.edges.iter().map(|e| e.len()).collect();
        sizes_a.sort_unstable();
        sizes_b.sort_unstable();
        if sizes_a != sizes_b {
            return Vec::new();
        }
        let sig_a = incidence_signatures(self);
        let sig_b = incidence_signatures(other);
        let pair_a = pair_counts(self);
        let pair_b = pair_counts(other);
        let mut results = Vec::new();
        let mut image = vec![0usize; self.n];
        let mut used = vec![false; self.n];
        backtrack_hypergraph(
            self,
            other,
            &sig_a,
            &sig_b,
            &pair_a,
            &pair_b,
            0,
            &mut image,
            &mut used,
            &mut results,
        );
        results
    }

    pub fn automorphism_group(&self) -> PermutationGroup {
        let elements = self.isomorphisms_to(self);
        PermutationGroup::from_elements_unchecked(self.n, elements)
            .expect("automorphisms share the vertex count")
    }

    /// The subgroup of all permutations preserving per-vertex incidence
    /// counts pointwise.
    pub fn incidence_preserving_subgroup(
        &self,
        cap: usize,
    ) -> Result<PermutationGroup, GraphError> {
        class_preserving_group(self.n, &self.incidence_counts(), cap)
    }
}

/// Sorted multiset of the sizes of the hyperedges incident to each vertex.
fn incidence_signatures(h: &Hypergraph) -> Vec<Vec<usize>> {
    let mut sigs = vec![Vec::new(); h.n];
    for edge in &h.edges {
        for &v in edge {
            sigs[v - 1].push(edge.len());
        }
    }
    for sig in &mut sigs {
        sig.sort_unstable();
    }
    sigs
}

/// `counts[u-1][v-1]` = number of hyperedges containing both `u` and `v`.
fn pair_counts(h: &Hypergraph) -> Vec<Vec<usize>> {
    let mut counts = vec![vec![0; h.n]; h.n];
    for edge in &h.edges {
        for &u in edge {
            for &v in edge {
                if u != v {
                    counts[u - 1][v - 1] += 1;
                }
            }
        }
    }
    counts
}

#[allow(clippy::too_many_arguments)]
fn backtrack_hypergraph(
    a: &Hypergraph,
    b: &Hypergraph,
    sig_a: &[Vec<usize>],
    sig_b: &[Vec<usize>],
    pair_a: &[Vec<usize>],
    pair_b: &[Vec<usize>],
    u: usize,
    image: &mut [usize],
    used: &mut [bool],
    results: &mut Vec<Permutation>,
) {
    let n = a.n;
    if u == n {
        let f = Permutation::from_images(image.to_vec()).expect("image table is a bijection");
        if families_match(a, b, &f) {
            results.push(f);
        }
        return;
    }
    for v in 0..n {
        if used[v] || sig_a[u] != sig_b[v] {
            continue;
        }
        let consistent = (0..u).all(|w| pair_a[u][w] == pair_b[v][image[w] - 1]);
        if !consistent {
            continue;
        }
        image[u] = v + 1;
        used[v] = true;
        backtrack_hypergraph(a, b, sig_a, sig_b, pair_a, pair_b, u + 1, image, used, results);
        used[v] = false;
    }
}

/// Whether the image family `{f(e) : e in a}` equals `b`'s family as a
/// multiset of sets.
fn families_match(a: &Hypergraph, b: &Hypergraph, f: &Permutation) -> bool {
    let mut mapped: Vec<Vec<usize>> = a
        .edges
        .iter()
        .map(|edge| {
            let mut e: Vec<usize> = edge.iter().map(|&v| f.image(v)).collect();
            e.sort_unstable();
            e
        })
        .collect();
    mapped.sort();
    let mut target = b.edges.clone();
    target.sort();
    mapped == target
}

/// Whether `p` is an automorphism of `g` (preserves all edge multiplicities).
pub fn is_graph_automorphism(g: &DirectedGraph, p: &Permutation) -> bool {
    if p.degree() != g.n {
        return false;
    }
    let mut mapped: Vec<(usize, usize)> = g
        .edges
        .iter()
        .map(|&(u, v)| (p.image(u), p.image(v)))
        .collect();
    mapped.sort_unstable();
    let mut original = g.edges.clone();
    original.sort_unstable();
    mapped == original
}

/// Whether `p` is an automorphism of `h` (maps the family onto itself).
pub fn is_hypergraph_automorphism(h: &Hypergraph, p: &Permutation) -> bool {
    p.degree() == h.n && families_match(h, h, p)
}

/// The group of all permutations `p` with `value[i] == value[p(i)]` for
/// every point: a product of symmetric groups over the value classes.
fn class_preserving_group(
    n: usize,
    values: &[usize],
    cap: usize,
) -> Result<PermutationGroup, GraphError> {
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &value) in values.iter().enumerate() {
        classes.entry(value).or_default().push(i + 1);
    }
    let mut order: usize = 1;
    for class in classes.values() {
        for k in 1..=class.len() {
            order = order
                .checked_mul(k)
                .filter(|&o| o <= cap)
                .ok_or(GraphError::GroupTooLarge { cap })?;
        }
    }
    let per_class: Vec<Vec<Vec<usize>>> = classes
        .values()
        .map(|class| {
            class
                .iter()
                .copied()
                .permutations(class.len())
                .collect::<Vec<_>>()
        })
        .collect();
    let mut elements = Vec::with_capacity(order);
    for combo in per_class.iter().multi_cartesian_product() {
        let mut images: Vec<usize> = (1..=n).collect();
        for (class, arrangement) in classes.values().zip(combo) {
            for (&point, &target) in class.iter().zip(arrangement.iter()) {
                images[point - 1] = target;
            }
        }
        elements.push(Permutation::from_images(images).expect("class images are bijective"));
    }
    Ok(PermutationGroup::from_elements_unchecked(n, elements)?)
}
