//! A simulator and verification bench for card-based shuffle protocols.
//!
//! Card-based protocols implement a shuffle — a hidden uniform draw from a
//! permutation group applied to a row of face-down cards — using nothing
//! but piles, pile-scramble shuffles, turns, and public sorts. This crate
//! models the card table, runs three such protocols (two graph-driven
//! shuffles over `Aut(G)` of a directed graph and one hypergraph-driven
//! shuffle over `Aut(H)`), and verifies them at desk scale by enumerating
//! every random branch with exact rational probabilities:
//!
//! * correctness — the realized permutation is uniform over the
//!   automorphism group;
//! * security — the realized permutation is stochastically independent of
//!   the visible trace;
//! * equivalence — independent protocols for the same group induce the
//!   same exact distribution.
//!
//! The [`gear`] module constructs, for any permutation `g`, a directed
//! graph whose automorphism group is designed to be exactly the cyclic
//! group generated by `g`, turning cyclic group shuffles into graph
//! shuffles.

pub mod cards;
pub mod gear;
pub mod graph;
pub mod perm;
pub mod protocols;
pub mod verify;

pub use cards::{CardTable, ChoiceSource, VisibleTrace};
pub use graph::{DirectedGraph, Hypergraph};
pub use perm::{Permutation, PermutationGroup};
pub use protocols::{CostReport, Instance, Protocol, ProtocolRun};
