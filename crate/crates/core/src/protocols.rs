//! The three shuffle protocol programs and their cost accounting.
//!
//! Each protocol takes an instance (a directed graph or a hypergraph) and a
//! choice source, plays the protocol on a fresh card table, and returns the
//! realized permutation together with the visible trace and a cost report.
//! The realized permutation is read off the ground-truth payload ids, never
//! off the public trace.
//!
//! Every run asserts the structural facts the protocols rely on: the
//! randomizing permutation of the first scramble stage preserves the degree
//! data that defines its pile-size classes, the second stage likewise, the
//! observed instance is isomorphic to the input, the realized permutation
//! is an automorphism, and the helper cards regather exactly into their
//! initial layout. A violation is reported as an internal invariant error
//! since it can only mean a simulator bug.

use std::fmt;

use thiserror::Error;

use crate::cards::{Card, CardError, CardKind, CardTable, ChoiceSource, Symbol, VisibleTrace};
use crate::graph::{
    is_graph_automorphism, is_hypergraph_automorphism, DirectedGraph, GraphError, Hypergraph,
};
use crate::perm::{PermError, Permutation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("protocol needs at least one vertex")]
    EmptyInstance,
    #[error("protocol {protocol} does not apply to a {got} instance")]
    ProtocolMismatch { protocol: Protocol, got: &'static str },
    #[error("no isomorphism between the observed instance and the input; this is a simulator bug")]
    IsomorphismNotFound,
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Card(#[from] CardError),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Which protocol to run or cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    /// Two-deck protocol with one pile per vertex and per edge.
    Ms,
    /// One-deck protocol with one pile per vertex.
    NewGraph,
    /// Hypergraph protocol with one helper pile per hyperedge.
    Hyper,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Protocol::Ms => "ms",
            Protocol::NewGraph => "graph",
            Protocol::Hyper => "hyper",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ms" => Ok(Protocol::Ms),
            "graph" => Ok(Protocol::NewGraph),
            "hyper" => Ok(Protocol::Hyper),
            other => Err(format!("unknown protocol '{other}' (expected ms, graph, or hyper)")),
        }
    }
}

/// A protocol instance: either kind of combinatorial object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instance {
    Digraph(DirectedGraph),
    Hypergraph(Hypergraph),
}

impl Instance {
    pub fn vertex_count(&self) -> usize {
        match self {
            Instance::Digraph(g) => g.vertex_count(),
            Instance::Hypergraph(h) => h.vertex_count(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Instance::Digraph(_) => "digraph",
            Instance::Hypergraph(_) => "hypergraph",
        }
    }
}

/// Card and shuffle counts of one protocol on one instance.
///
/// `nominal_shuffles` is the closed-form count; `effective_shuffles` counts
/// only the shuffle events actually emitted, i.e. it skips size classes
/// with a single pile and in-pile scrambles of fewer than two cards.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostReport {
    pub cards: usize,
    pub nominal_shuffles: usize,
    pub effective_shuffles: usize,
}

/// Ground-truth debug record of one run.
#[derive(Clone, Debug)]
pub struct Intermediates {
    /// The hidden permutation drawn by the first scramble stage. For the
    /// hypergraph protocol its degree is the number of hyperedges.
    pub sigma: Permutation,
    /// The hidden permutation of the second pile-scramble stage; the
    /// two-deck protocol has no such stage.
    pub tau: Option<Permutation>,
    /// The instance as read off the opened cards.
    pub observed: Instance,
    /// The isomorphism chosen to relabel the observed instance (always the
    /// lexicographically first one, a public deterministic rule).
    pub psi: Permutation,
}

/// Outcome of one protocol run.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    /// The realized permutation: the output row holds the input payload of
    /// position `i` at position `realized(i)`.
    pub realized: Permutation,
    pub trace: VisibleTrace,
    pub cost: CostReport,
    pub intermediates: Intermediates,
}

/// Knobs for the one-deck graph protocol. The default runs the protocol as
/// specified. `skip_card_scramble` deliberately omits the in-pile scramble
/// stage; the resulting runs leak the drawn permutation through the opened
/// symbols, and the security verifier must catch that, so the knob exists
/// for such mutation tests.
#[derive(Clone, Copy, Debug, Default)]
pub struct NewGraphOptions {
    pub skip_card_scramble: bool,
}

/// Builds the hidden slot permutation from ground truth: `occupant[j-1]`
/// names the original item now sitting at slot `j`, and the returned
/// permutation maps each original item to its slot.
fn slot_permutation(occupants: Vec<usize>) -> Result<Permutation, ProtocolError> {
    Ok(Permutation::from_images(occupants)?.inverse())
}

fn invariant(check: bool, what: &str) -> Result<(), ProtocolError> {
    if check {
        Ok(())
    } else {
        Err(ProtocolError::Invariant(what.to_string()))
    }
}

/// Checks that the regathered helper piles match the initial layout card
/// for card, ignoring faces.
fn check_restitution(
    table: &CardTable,
    first_helper: usize,
    layout: &[Vec<Card>],
) -> Result<(), ProtocolError> {
    for (offset, expected) in layout.iter().enumerate() {
        let actual = table.pile(first_helper + offset);
        let same = actual.len() == expected.len()
            && actual
                .iter()
                .zip(expected.iter())
                .all(|(a, b)| a.kind == b.kind && a.value == b.value);
        invariant(same, "helper piles must regather into the initial layout")?;
    }
    Ok(())
}

/// Runs the one-deck graph shuffle: `n` payload cards and `2n+m` cards in
/// total. The realized permutation is uniform over the automorphism group
/// of `g` and independent of the visible trace.
pub fn run_new_graph_shuffle(
    g: &DirectedGraph,
    choice: &mut ChoiceSource,
) -> Result<ProtocolRun, ProtocolError> {
    run_new_graph_shuffle_with(g, choice, NewGraphOptions::default())
}

pub fn run_new_graph_shuffle_with(
    g: &DirectedGraph,
    choice: &mut ChoiceSource,
    options: NewGraphOptions,
) -> Result<ProtocolRun, ProtocolError> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(ProtocolError::EmptyInstance);
    }
    let profile = g.degrees();

    // Step 1: payload row plus one helper pile per vertex, holding
    // indegree(i)+1 copies of the vertex's number card.
    let mut piles: Vec<Vec<Card>> = (1..=n).map(|i| vec![Card::payload(i)]).collect();
    let helper_layout: Vec<Vec<Card>> = (1..=n)
        .map(|i| vec![Card::numbered(i); profile.indegree[i - 1] + 1])
        .collect();
    piles.extend(helper_layout.iter().cloned());
    let mut table = CardTable::new(piles);
    let cards = table.card_count();

    // Step 2: scramble the helper piles within equal-size classes.
    let helper_slots: Vec<usize> = (n..2 * n).collect();
    table.generalized_pss(&helper_slots, choice)?;
    let occupants: Vec<usize> = (0..n).map(|j| table.pile(n + j)[0].value).collect();
    let sigma = slot_permutation(occupants)?;
    invariant(
        (1..=n).all(|i| profile.indegree[i - 1] == profile.indegree[sigma.image(i) - 1]),
        "first-stage permutation must preserve indegrees",
    )?;

    // Step 3: one pile per vertex: its payload card, its own randomized
    // number card, then one randomized number card per out-edge target,
    // targets taken in ascending order.
    let targets: Vec<Vec<usize>> = (1..=n).map(|i| g.out_targets(i)).collect();
    table.rearrange("form-vertex-piles", |piles| {
        let mut helper: Vec<Vec<Card>> = piles[n..].to_vec();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut pile = vec![piles[i][0]];
            pile.push(helper[i].pop().expect("one name card per vertex"));
            for &w in &targets[i] {
                pile.push(helper[w - 1].pop().expect("one card per incoming edge"));
            }
            out.push(pile);
        }
        out
    })?;

    // Step 4: scramble the edge-target cards inside each pile.
    if !options.skip_card_scramble {
        for i in 0..n {
            table.scramble_cards(i, 2, choice)?;
        }
    }

    // Step 5: scramble the vertex piles within equal-size classes.
    let vertex_slots: Vec<usize> = (0..n).collect();
    table.generalized_pss(&vertex_slots, choice)?;
    let occupants: Vec<usize> = (0..n).map(|k| table.pile(k)[0].value).collect();
    let tau = slot_permutation(occupants)?;
    invariant(
        (1..=n).all(|i| profile.outdegree[i - 1] == profile.outdegree[tau.image(i) - 1]),
        "second-stage permutation must preserve outdegrees",
    )?;

    // Step 6: open everything but the payloads, then sort by the number
    // card so the pile named i sits at slot i.
    for pile in 0..n {
        for pos in 1..table.pile(pile).len() {
            table.turn(pile, pos)?;
        }
    }
    table.sort_piles_by_revealed(1)?;

    // Step 7: read the observed graph off the opened cards.
    let mut observed_edges = Vec::with_capacity(g.edge_count());
    for slot in 0..n {
        let pile = table.pile(slot);
        invariant(
            pile[1].symbol() == Some(Symbol::Numbered(slot + 1)),
            "sorted slot must hold its own number card",
        )?;
        for card in &pile[2..] {
            observed_edges.push((slot + 1, card.value));
        }
    }
    let observed = DirectedGraph::new(n, observed_edges)?;

    // Step 8: relabel through the first isomorphism onto the input graph
    // and emit the output row; regather the helpers into their initial
    // layout.
    let psi = observed
        .isomorphisms_to(g)
        .into_iter()
        .next()
        .ok_or(ProtocolError::IsomorphismNotFound)?;
    let psi_inv = psi.inverse();
    table.rearrange("emit-output", |piles| {
        let mut out = Vec::with_capacity(2 * n);
        for i in 1..=n {
            out.push(vec![piles[psi_inv.image(i) - 1][0]]);
        }
        let mut helper: Vec<Vec<Card>> = vec![Vec::new(); n];
        for pile in &piles {
            for &card in &pile[1..] {
                helper[card.value - 1].push(card);
            }
        }
        out.extend(helper);
        out
    })?;
    check_restitution(&table, n, &helper_layout)?;

    let mut cost = new_graph_cost(g);
    if options.skip_card_scramble {
        cost.effective_shuffles -= profile.outdegree.iter().filter(|&&d| d >= 2).count();
    }
    finish_graph_run(
        g,
        table,
        cards,
        cost,
        Intermediates {
            sigma,
            tau: Some(tau),
            observed: Instance::Digraph(observed),
            psi,
        },
    )
}

/// Runs the two-deck graph shuffle: one barred card and
/// `indegree+outdegree` number cards per vertex, `2(n+m)` cards in total.
pub fn run_ms_graph_shuffle(
    g: &DirectedGraph,
    choice: &mut ChoiceSource,
) -> Result<ProtocolRun, ProtocolError> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(ProtocolError::EmptyInstance);
    }
    let m = g.edge_count();
    let profile = g.degrees();
    let total = |i: usize| profile.indegree[i - 1] + profile.outdegree[i - 1];

    // Step 1: payload row plus one helper pile per vertex holding its
    // barred card and one number card per incident edge.
    let mut piles: Vec<Vec<Card>> = (1..=n).map(|i| vec![Card::payload(i)]).collect();
    let helper_layout: Vec<Vec<Card>> = (1..=n)
        .map(|i| {
            let mut pile = vec![Card::barred(i)];
            pile.extend(vec![Card::numbered(i); total(i)]);
            pile
        })
        .collect();
    piles.extend(helper_layout.iter().cloned());
    let mut table = CardTable::new(piles);
    let cards = table.card_count();

    // Step 2: scramble the helper piles within equal-size classes.
    let helper_slots: Vec<usize> = (n..2 * n).collect();
    table.generalized_pss(&helper_slots, choice)?;
    let occupants: Vec<usize> = (0..n).map(|j| table.pile(n + j)[0].value).collect();
    let sigma = slot_permutation(occupants)?;
    invariant(
        (1..=n).all(|i| total(i) == total(sigma.image(i))),
        "first-stage permutation must preserve total degrees",
    )?;

    // Step 3: a two-card pile per vertex (barred card over the payload)
    // and per edge (source number card over target number card).
    let edges = g.edges().to_vec();
    table.rearrange("form-vertex-and-edge-piles", |piles| {
        let mut helper: Vec<Vec<Card>> = piles[n..].to_vec();
        let mut out = Vec::with_capacity(n + edges.len());
        for i in 0..n {
            let barred = helper[i].remove(0);
            out.push(vec![barred, piles[i][0]]);
        }
        for &(u, w) in &edges {
            let left = helper[u - 1].pop().expect("one card per outgoing edge");
            let right = helper[w - 1].pop().expect("one card per incoming edge");
            out.push(vec![left, right]);
        }
        out
    })?;

    // Step 4: full scramble of all two-card piles.
    let all: Vec<usize> = (0..n + m).collect();
    table.pss(&all, choice)?;

    // Step 5: open every left card; where it is a number card, open the
    // right card too, then sort with barred cards first.
    let mut lefts = Vec::with_capacity(n + m);
    for pile in 0..n + m {
        lefts.push(table.turn(pile, 0)?);
    }
    for (pile, symbol) in lefts.into_iter().enumerate() {
        if matches!(symbol, Symbol::Numbered(_)) {
            table.turn(pile, 1)?;
        }
    }
    table.sort_piles_by_revealed(0)?;

    // Step 6: read the observed graph off the fully opened edge piles.
    for slot in 0..n {
        invariant(
            table.pile(slot)[0].symbol() == Some(Symbol::Barred(slot + 1)),
            "sorted slot must hold its own barred card",
        )?;
    }
    let mut observed_edges = Vec::with_capacity(m);
    for slot in n..n + m {
        let pile = table.pile(slot);
        invariant(
            pile[0].kind == CardKind::Numbered && pile[1].kind == CardKind::Numbered,
            "edge piles must hold number cards",
        )?;
        observed_edges.push((pile[0].value, pile[1].value));
    }
    let observed = DirectedGraph::new(n, observed_edges)?;

    // Step 7: relabel through the first isomorphism onto the input graph;
    // the output at position i is the card hidden under the barred card
    // it maps to.
    let psi = observed
        .isomorphisms_to(g)
        .into_iter()
        .next()
        .ok_or(ProtocolError::IsomorphismNotFound)?;
    let psi_inv = psi.inverse();
    table.rearrange("emit-output", |piles| {
        let mut out = Vec::with_capacity(2 * n);
        for i in 1..=n {
            out.push(vec![piles[psi_inv.image(i) - 1][1]]);
        }
        let mut helper: Vec<Vec<Card>> = vec![Vec::new(); n];
        for pile in piles.iter().take(n) {
            helper[pile[0].value - 1].push(pile[0]);
        }
        for pile in piles.iter().skip(n) {
            for &card in pile {
                helper[card.value - 1].push(card);
            }
        }
        out.extend(helper);
        out
    })?;
    check_restitution(&table, n, &helper_layout)?;

    finish_graph_run(
        g,
        table,
        cards,
        ms_cost(g),
        Intermediates {
            sigma,
            tau: None,
            observed: Instance::Digraph(observed),
            psi,
        },
    )
}

/// Runs the hypergraph shuffle: `n` payload cards plus one helper card per
/// hyperedge membership.
pub fn run_hypergraph_shuffle(
    h: &Hypergraph,
    choice: &mut ChoiceSource,
) -> Result<ProtocolRun, ProtocolError> {
    let n = h.vertex_count();
    if n == 0 {
        return Err(ProtocolError::EmptyInstance);
    }
    let m = h.edge_count();
    let sizes: Vec<usize> = h.edges().iter().map(Vec::len).collect();
    let incidence = h.incidence_lists();

    // Step 1: payload row plus one helper pile per hyperedge holding
    // |e_j| copies of the hyperedge's number card.
    let mut piles: Vec<Vec<Card>> = (1..=n).map(|i| vec![Card::payload(i)]).collect();
    let helper_layout: Vec<Vec<Card>> = (1..=m)
        .map(|j| vec![Card::numbered(j); sizes[j - 1]])
        .collect();
    piles.extend(helper_layout.iter().cloned());
    let mut table = CardTable::new(piles);
    let cards = table.card_count();

    // Step 2: scramble the hyperedge piles within equal-size classes.
    let helper_slots: Vec<usize> = (n..n + m).collect();
    table.generalized_pss(&helper_slots, choice)?;
    let occupants: Vec<usize> = (0..m).map(|j| table.pile(n + j)[0].value).collect();
    let sigma = slot_permutation(occupants)?;
    invariant(
        (1..=m).all(|j| sizes[j - 1] == sizes[sigma.image(j) - 1]),
        "first-stage permutation must preserve hyperedge sizes",
    )?;

    // Step 3: one pile per vertex: its payload card, then one randomized
    // hyperedge card per membership, hyperedge indices ascending.
    table.rearrange("form-vertex-piles", |piles| {
        let mut helper: Vec<Vec<Card>> = piles[n..].to_vec();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut pile = vec![piles[i][0]];
            for &j in &incidence[i] {
                pile.push(helper[j - 1].pop().expect("one card per membership"));
            }
            out.push(pile);
        }
        out
    })?;

    // Step 4: scramble the hyperedge cards inside each pile.
    for i in 0..n {
        table.scramble_cards(i, 1, choice)?;
    }

    // Step 5: scramble the vertex piles within equal-size classes.
    let vertex_slots: Vec<usize> = (0..n).collect();
    table.generalized_pss(&vertex_slots, choice)?;
    let occupants: Vec<usize> = (0..n).map(|k| table.pile(k)[0].value).collect();
    let tau = slot_permutation(occupants)?;
    invariant(
        (1..=n).all(|i| incidence[i - 1].len() == incidence[tau.image(i) - 1].len()),
        "second-stage permutation must preserve incidence counts",
    )?;

    // Step 6: open everything but the payloads. The piles are not sorted;
    // the observed hypergraph is read off the slots directly.
    for pile in 0..n {
        for pos in 1..table.pile(pile).len() {
            table.turn(pile, pos)?;
        }
    }

    // Step 7: vertex k belongs to observed hyperedge j iff the card j
    // shows in the pile at slot k.
    let mut observed_edges: Vec<Vec<usize>> = vec![Vec::new(); m];
    for slot in 0..n {
        for card in &table.pile(slot)[1..] {
            observed_edges[card.value - 1].push(slot + 1);
        }
    }
    let observed = Hypergraph::new(n, observed_edges)?;

    // Step 8: relabel through the first isomorphism from the input onto
    // the observed hypergraph and emit the output row.
    let psi = h
        .isomorphisms_to(&observed)
        .into_iter()
        .next()
        .ok_or(ProtocolError::IsomorphismNotFound)?;
    let psi_images = psi.clone();
    table.rearrange("emit-output", |piles| {
        let mut out = Vec::with_capacity(n + m);
        for i in 1..=n {
            out.push(vec![piles[psi_images.image(i) - 1][0]]);
        }
        let mut helper: Vec<Vec<Card>> = vec![Vec::new(); m];
        for pile in &piles {
            for &card in &pile[1..] {
                helper[card.value - 1].push(card);
            }
        }
        out.extend(helper);
        out
    })?;
    check_restitution(&table, n, &helper_layout)?;

    let realized = read_realized(&table, n)?;
    invariant(
        is_hypergraph_automorphism(h, &realized),
        "realized permutation must be a hypergraph automorphism",
    )?;
    let cost = hyper_cost(h);
    invariant(cost.cards == cards, "card count must match the cost formula")?;
    invariant(
        cost.effective_shuffles == table.trace().shuffle_count(),
        "emitted shuffle events must match the cost formula",
    )?;
    Ok(ProtocolRun {
        realized,
        trace: table.into_trace(),
        cost,
        intermediates: Intermediates {
            sigma,
            tau: Some(tau),
            observed: Instance::Hypergraph(observed),
            psi,
        },
    })
}

/// Reads the realized permutation off the output payload row.
fn read_realized(table: &CardTable, n: usize) -> Result<Permutation, ProtocolError> {
    let mut occupants = Vec::with_capacity(n);
    for slot in 0..n {
        let card = table.pile(slot)[0];
        invariant(
            card.kind == CardKind::Payload,
            "output row must hold payload cards",
        )?;
        occupants.push(card.value);
    }
    slot_permutation(occupants)
}

fn finish_graph_run(
    g: &DirectedGraph,
    table: CardTable,
    cards: usize,
    cost: CostReport,
    intermediates: Intermediates,
) -> Result<ProtocolRun, ProtocolError> {
    let realized = read_realized(&table, g.vertex_count())?;
    invariant(
        is_graph_automorphism(g, &realized),
        "realized permutation must be a graph automorphism",
    )?;
    invariant(cost.cards == cards, "card count must match the cost formula")?;
    invariant(
        cost.effective_shuffles == table.trace().shuffle_count(),
        "emitted shuffle events must match the cost formula",
    )?;
    Ok(ProtocolRun {
        realized,
        trace: table.into_trace(),
        cost,
        intermediates,
    })
}

/// Cards and shuffles for one protocol on one instance, without running it.
pub fn protocol_cost(instance: &Instance, protocol: Protocol) -> Result<CostReport, ProtocolError> {
    match (protocol, instance) {
        (Protocol::NewGraph, Instance::Digraph(g)) => Ok(new_graph_cost(g)),
        (Protocol::Ms, Instance::Digraph(g)) => Ok(ms_cost(g)),
        (Protocol::Hyper, Instance::Hypergraph(h)) => Ok(hyper_cost(h)),
        _ => Err(ProtocolError::ProtocolMismatch {
            protocol,
            got: instance.kind_name(),
        }),
    }
}

/// Size classes with at least two members: the number of pile-scrambles a
/// generalized pile-scramble of these pile sizes emits.
fn scramble_classes(sizes: &[usize]) -> usize {
    let mut counts: std::collections::BTreeMap<usize, usize> = Default::default();
    for &s in sizes {
        *counts.entry(s).or_default() += 1;
    }
    counts.values().filter(|&&c| c >= 2).count()
}

fn distinct(values: &[usize]) -> usize {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.len()
}

fn new_graph_cost(g: &DirectedGraph) -> CostReport {
    let n = g.vertex_count();
    let profile = g.degrees();
    let stage1: Vec<usize> = profile.indegree.iter().map(|d| d + 1).collect();
    let stage2: Vec<usize> = profile.outdegree.iter().map(|d| d + 2).collect();
    CostReport {
        cards: 2 * n + g.edge_count(),
        nominal_shuffles: n + 2 * distinct(&profile.outdegree),
        effective_shuffles: scramble_classes(&stage1)
            + profile.outdegree.iter().filter(|&&d| d >= 2).count()
            + scramble_classes(&stage2),
    }
}

fn ms_cost(g: &DirectedGraph) -> CostReport {
    let n = g.vertex_count();
    let m = g.edge_count();
    let profile = g.degrees();
    let totals: Vec<usize> = (0..n)
        .map(|i| profile.indegree[i] + profile.outdegree[i])
        .collect();
    let stage1: Vec<usize> = totals.iter().map(|d| d + 1).collect();
    CostReport {
        cards: 2 * (n + m),
        nominal_shuffles: distinct(&totals) + 1,
        effective_shuffles: scramble_classes(&stage1) + usize::from(n + m >= 2),
    }
}

fn hyper_cost(h: &Hypergraph) -> CostReport {
    let n = h.vertex_count();
    let sizes: Vec<usize> = h.edges().iter().map(Vec::len).collect();
    let incidence = h.incidence_counts();
    let stage2: Vec<usize> = incidence.iter().map(|s| s + 1).collect();
    CostReport {
        cards: n + sizes.iter().sum::<usize>(),
        nominal_shuffles: n + distinct(&incidence) + distinct(&sizes),
        effective_shuffles: scramble_classes(&sizes)
            + incidence.iter().filter(|&&s| s >= 2).count()
            + scramble_classes(&stage2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards::enumerate_runs;
    use num_rational::BigRational;

    fn sample_digraph() -> DirectedGraph {
        DirectedGraph::new(5, vec![(1, 3), (1, 2), (3, 1), (3, 2), (2, 4), (2, 5)]).unwrap()
    }

    fn sample_hypergraph() -> Hypergraph {
        Hypergraph::new(5, vec![vec![1, 2, 3], vec![2, 4], vec![2, 5]]).unwrap()
    }

    fn perm(text: &str, degree: usize) -> Permutation {
        Permutation::parse_cycles(text, degree).unwrap()
    }

    fn rational(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    fn distribution<F>(program: F, cap: u64) -> (Vec<(Permutation, BigRational)>, usize)
    where
        F: FnMut(&mut ChoiceSource) -> Result<ProtocolRun, ProtocolError>,
    {
        let mut program = program;
        let leaves = enumerate_runs(|c| program(c).map(|r| r.realized), cap).unwrap();
        let branches = leaves.len();
        let mut acc: std::collections::BTreeMap<Permutation, BigRational> = Default::default();
        for (p, prob) in leaves {
            *acc.entry(p).or_insert_with(|| rational(0, 1)) += prob;
        }
        (acc.into_iter().collect(), branches)
    }

    #[test]
    fn new_graph_single_vertex_is_deterministic_identity() {
        let g = DirectedGraph::new(1, vec![]).unwrap();
        let (dist, branches) = distribution(|c| run_new_graph_shuffle(&g, c), 100);
        assert_eq!(branches, 1);
        assert_eq!(dist, vec![(Permutation::identity(1), rational(1, 1))]);
    }

    #[test]
    fn new_graph_three_cycle_is_uniform_over_rotations() {
        let g = DirectedGraph::new(3, vec![(1, 2), (2, 3), (3, 1)]).unwrap();
        let (dist, branches) = distribution(|c| run_new_graph_shuffle(&g, c), 10_000);
        assert_eq!(branches, 36);
        assert_eq!(dist.len(), 3);
        for text in ["()", "(1 2 3)", "(1 3 2)"] {
            let p = perm(text, 3);
            let found = dist.iter().find(|(q, _)| *q == p).expect("rotation present");
            assert_eq!(found.1, rational(1, 3));
        }
    }

    #[test]
    fn new_graph_edgeless_pair_is_a_full_scramble() {
        let g = DirectedGraph::new(2, vec![]).unwrap();
        let (dist, _) = distribution(|c| run_new_graph_shuffle(&g, c), 1000);
        assert_eq!(dist.len(), 2);
        for (_, p) in dist {
            assert_eq!(p, rational(1, 2));
        }
    }

    #[test]
    fn new_graph_rejects_empty_graph() {
        let g = DirectedGraph::new(0, vec![]).unwrap();
        assert!(matches!(
            run_new_graph_shuffle(&g, &mut ChoiceSource::seeded(0)),
            Err(ProtocolError::EmptyInstance)
        ));
    }

    #[test]
    fn ms_two_cycle_is_uniform_over_both_automorphisms() {
        let g = DirectedGraph::new(2, vec![(1, 2), (2, 1)]).unwrap();
        let (dist, branches) = distribution(|c| run_ms_graph_shuffle(&g, c), 10_000);
        assert_eq!(branches, 48);
        assert_eq!(dist.len(), 2);
        for text in ["()", "(1 2)"] {
            let p = perm(text, 2);
            let found = dist.iter().find(|(q, _)| *q == p).unwrap();
            assert_eq!(found.1, rational(1, 2));
        }
    }

    #[test]
    fn ms_single_vertex_is_deterministic_identity() {
        let g = DirectedGraph::new(1, vec![]).unwrap();
        let (dist, branches) = distribution(|c| run_ms_graph_shuffle(&g, c), 100);
        assert_eq!(branches, 1);
        assert_eq!(dist, vec![(Permutation::identity(1), rational(1, 1))]);
    }

    #[test]
    fn hyper_single_vertex_loop_is_deterministic_identity() {
        let h = Hypergraph::new(1, vec![vec![1]]).unwrap();
        let (dist, branches) = distribution(|c| run_hypergraph_shuffle(&h, c), 100);
        assert_eq!(branches, 1);
        assert_eq!(dist, vec![(Permutation::identity(1), rational(1, 1))]);
    }

    #[test]
    fn hyper_single_pair_edge_is_a_fair_swap() {
        let h = Hypergraph::new(2, vec![vec![1, 2]]).unwrap();
        let (dist, branches) = distribution(|c| run_hypergraph_shuffle(&h, c), 100);
        assert_eq!(branches, 2);
        assert_eq!(dist.len(), 2);
        for (_, p) in dist {
            assert_eq!(p, rational(1, 2));
        }
    }

    #[test]
    fn hyper_edgeless_instance_scrambles_everything() {
        let h = Hypergraph::new(3, vec![]).unwrap();
        let (dist, branches) = distribution(|c| run_hypergraph_shuffle(&h, c), 100);
        assert_eq!(branches, 6);
        assert_eq!(dist.len(), 6);
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let g = sample_digraph();
        let run = |seed| {
            let mut c = ChoiceSource::seeded(seed);
            run_new_graph_shuffle(&g, &mut c).unwrap()
        };
        let a = run(11);
        let b = run(11);
        assert_eq!(a.realized, b.realized);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.trace.digest(), b.trace.digest());
    }

    #[test]
    fn intermediates_record_the_hidden_stages() {
        let g = sample_digraph();
        let mut c = ChoiceSource::seeded(3);
        let run = run_new_graph_shuffle(&g, &mut c).unwrap();
        assert_eq!(run.intermediates.sigma.degree(), 5);
        assert_eq!(run.intermediates.tau.as_ref().unwrap().degree(), 5);
        match &run.intermediates.observed {
            Instance::Digraph(observed) => {
                assert_eq!(observed.edge_count(), g.edge_count());
                assert!(!observed.isomorphisms_to(&g).is_empty());
            }
            _ => panic!("graph protocol observes a digraph"),
        }

        let mut c = ChoiceSource::seeded(3);
        let ms = run_ms_graph_shuffle(&g, &mut c).unwrap();
        assert!(ms.intermediates.tau.is_none());

        let h = sample_hypergraph();
        let mut c = ChoiceSource::seeded(3);
        let hyper = run_hypergraph_shuffle(&h, &mut c).unwrap();
        assert_eq!(hyper.intermediates.sigma.degree(), 3);
        assert_eq!(hyper.intermediates.tau.as_ref().unwrap().degree(), 5);
    }

    #[test]
    fn sample_digraph_costs() {
        let instance = Instance::Digraph(sample_digraph());
        let new = protocol_cost(&instance, Protocol::NewGraph).unwrap();
        assert_eq!(new.cards, 16);
        assert_eq!(new.nominal_shuffles, 9);
        assert_eq!(new.effective_shuffles, 6);

        let ms = protocol_cost(&instance, Protocol::Ms).unwrap();
        assert_eq!(ms.cards, 22);
        assert_eq!(ms.nominal_shuffles, 4);
        assert_eq!(ms.effective_shuffles, 3);
    }

    #[test]
    fn sample_hypergraph_costs() {
        let instance = Instance::Hypergraph(sample_hypergraph());
        let hyper = protocol_cost(&instance, Protocol::Hyper).unwrap();
        assert_eq!(hyper.cards, 12);
        assert_eq!(hyper.nominal_shuffles, 9);
        assert_eq!(hyper.effective_shuffles, 3);
    }

    #[test]
    fn cost_rejects_mismatched_instance() {
        let instance = Instance::Hypergraph(sample_hypergraph());
        assert!(matches!(
            protocol_cost(&instance, Protocol::NewGraph),
            Err(ProtocolError::ProtocolMismatch { .. })
        ));
        let instance = Instance::Digraph(sample_digraph());
        assert!(matches!(
            protocol_cost(&instance, Protocol::Hyper),
            Err(ProtocolError::ProtocolMismatch { .. })
        ));
    }

    #[test]
    fn run_cost_matches_static_cost() {
        let g = sample_digraph();
        let run = run_new_graph_shuffle(&g, &mut ChoiceSource::seeded(0)).unwrap();
        assert_eq!(run.cost, new_graph_cost(&g));
        let run = run_ms_graph_shuffle(&g, &mut ChoiceSource::seeded(0)).unwrap();
        assert_eq!(run.cost, ms_cost(&g));
        let h = sample_hypergraph();
        let run = run_hypergraph_shuffle(&h, &mut ChoiceSource::seeded(0)).unwrap();
        assert_eq!(run.cost, hyper_cost(&h));
    }

    #[test]
    fn realized_stays_in_the_automorphism_group_across_seeds() {
        let g = sample_digraph();
        let aut = g.automorphism_group();
        for seed in 0..40 {
            let run = run_new_graph_shuffle(&g, &mut ChoiceSource::seeded(seed)).unwrap();
            assert!(aut.contains(&run.realized));
            let run = run_ms_graph_shuffle(&g, &mut ChoiceSource::seeded(seed)).unwrap();
            assert!(aut.contains(&run.realized));
        }
        let h = sample_hypergraph();
        let aut = h.automorphism_group();
        for seed in 0..40 {
            let run = run_hypergraph_shuffle(&h, &mut ChoiceSource::seeded(seed)).unwrap();
            assert!(aut.contains(&run.realized));
        }
    }

    #[test]
    fn skipping_the_card_scramble_still_shuffles_correctly() {
        // The mutation drops security, not correctness: the marginal law of
        // the realized permutation stays uniform.
        let g = sample_digraph();
        let options = NewGraphOptions { skip_card_scramble: true };
        let (dist, branches) =
            distribution(|c| run_new_graph_shuffle_with(&g, c, options), 10_000);
        assert_eq!(branches, 288);
        assert_eq!(dist.len(), 4);
        for (_, p) in dist {
            assert_eq!(p, rational(1, 4));
        }
    }

    #[test]
    fn protocol_parses_from_cli_names() {
        assert_eq!("ms".parse::<Protocol>().unwrap(), Protocol::Ms);
        assert_eq!("graph".parse::<Protocol>().unwrap(), Protocol::NewGraph);
        assert_eq!("hyper".parse::<Protocol>().unwrap(), Protocol::Hyper);
        assert!("dot".parse::<Protocol>().is_err());
    }
}
