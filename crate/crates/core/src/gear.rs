//! Gear graphs: directed graphs whose automorphism group realizes the
//! cyclic group generated by a permutation, so that any cyclic group
//! shuffle can be run as a graph shuffle.
//!
//! The construction lays out each cycle of `g` as a directed cycle and
//! connects every pair of cycles whose lengths share a common factor `d`
//! with all edges between positions congruent modulo `d` (earlier cycle to
//! later cycle only; cycles are ordered by ascending length). `g` itself is
//! always an automorphism of the result. Whether the automorphism group is
//! *exactly* the cyclic group is checked empirically by [`verify_gear`]:
//! degenerate shapes exist — two fixed points, say, are two isolated
//! self-loop vertices whose swap is an automorphism outside the cyclic
//! group — and [`run_cyclic_shuffle`] refuses such inputs rather than run a
//! shuffle over the wrong group.

use thiserror::Error;

use crate::cards::ChoiceSource;
use crate::graph::DirectedGraph;
use crate::perm::{PermError, Permutation, PermutationGroup, DEFAULT_GROUP_CAP};
use crate::protocols::{run_new_graph_shuffle, ProtocolError, ProtocolRun};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GearError {
    #[error(
        "the gear graph of this permutation has {aut_order} automorphisms but the cyclic group \
         has order {cyclic_order}; refusing to run the shuffle"
    )]
    PropositionFails { aut_order: usize, cyclic_order: usize },
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// The cycle structure the gear construction works from: the cycles of `g`
/// ordered by ascending length, each starting at its smallest point.
#[derive(Clone, Debug)]
pub struct GearSpec {
    cycles: Vec<Vec<usize>>,
    degree: usize,
}

impl GearSpec {
    pub fn new(g: &Permutation) -> Self {
        GearSpec {
            cycles: g.cycles(),
            degree: g.degree(),
        }
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    /// Greatest common divisor of the lengths of cycles `k` and `k'`
    /// (0-based indices into the ordered cycle list).
    pub fn cycle_gcd(&self, k: usize, k2: usize) -> usize {
        gcd(self.cycles[k].len(), self.cycles[k2].len())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Builds the gear graph of `g`: one directed cycle per cycle of `g` (a
/// fixed point becomes a self-loop) plus, for every cycle pair with
/// non-coprime lengths, all cross edges between positions congruent modulo
/// the gcd of the lengths.
pub fn gear_graph(g: &Permutation) -> DirectedGraph {
    let spec = GearSpec::new(g);
    let mut edges = Vec::new();
    for cycle in spec.cycles() {
        let len = cycle.len();
        for u in 0..len {
            edges.push((cycle[u], cycle[(u + 1) % len]));
        }
    }
    for k in 0..spec.cycles().len() {
        for k2 in k + 1..spec.cycles().len() {
            let d = spec.cycle_gcd(k, k2);
            if d == 1 {
                continue;
            }
            for (u, &src) in spec.cycles()[k].iter().enumerate() {
                for (v, &dst) in spec.cycles()[k2].iter().enumerate() {
                    if u % d == v % d {
                        edges.push((src, dst));
                    }
                }
            }
        }
    }
    DirectedGraph::new(spec.degree, edges).expect("cycle points lie in 1..=degree")
}

/// Outcome of checking the gear construction on a concrete permutation.
#[derive(Clone, Debug)]
pub struct GearReport {
    /// Whether the gear graph's automorphism group equals the cyclic group.
    pub holds: bool,
    pub automorphisms: PermutationGroup,
    pub cyclic: PermutationGroup,
}

/// Compares the automorphism group of the gear graph of `g` against the
/// cyclic group generated by `g`, element for element.
pub fn verify_gear(g: &Permutation) -> Result<GearReport, GearError> {
    let automorphisms = gear_graph(g).automorphism_group();
    let cyclic = PermutationGroup::generate(g.degree(), std::slice::from_ref(g), DEFAULT_GROUP_CAP)?;
    let holds = automorphisms == cyclic;
    Ok(GearReport {
        holds,
        automorphisms,
        cyclic,
    })
}

/// Runs the cyclic group shuffle for `g` as the graph shuffle of its gear
/// graph. Refuses permutations for which the gear construction does not
/// produce exactly the cyclic group.
pub fn run_cyclic_shuffle(
    g: &Permutation,
    choice: &mut ChoiceSource,
) -> Result<ProtocolRun, GearError> {
    let report = verify_gear(g)?;
    if !report.holds {
        return Err(GearError::PropositionFails {
            aut_order: report.automorphisms.order(),
            cyclic_order: report.cyclic.order(),
        });
    }
    Ok(run_new_graph_shuffle(&gear_graph(g), choice)?)
}
