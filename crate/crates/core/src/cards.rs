//! The card table: face-down/face-up cards with hidden identities,
//! pile-scramble shuffles, public turns and sorts, a visible trace, and the
//! randomness contract.
//!
//! Information is kept on two levels. The simulator (and only the simulator)
//! sees ground truth through [`CardTable::pile`], including payload
//! identities and which permutation a shuffle drew. The [`VisibleTrace`]
//! records what bystanders see: pile sizes, shuffle scopes, revealed
//! symbols, and public rearrangements. No trace event ever encodes a drawn
//! permutation, and payload identities have no symbol type at all, so they
//! cannot appear in a trace by construction.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::perm::Permutation;

/// Default cap on the number of branches an exhaustive enumeration may
/// visit.
pub const DEFAULT_BRANCH_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CardError {
    #[error("piles have unequal sizes {sizes:?}; a pile-scramble needs equal piles")]
    UnequalPileSizes { sizes: Vec<usize> },
    #[error("no pile at index {pile}")]
    NoSuchPile { pile: usize },
    #[error("pile {pile} has no card at position {pos}")]
    NoSuchPosition { pile: usize, pos: usize },
    #[error("pile index {pile} named more than once")]
    DuplicatePileIndex { pile: usize },
    #[error("turning pile {pile} position {pos} would expose a payload card")]
    PayloadExposure { pile: usize, pos: usize },
    #[error("card at pile {pile} position {pos} is already face-up")]
    AlreadyFaceUp { pile: usize, pos: usize },
    #[error("sort key at pile {pile} position {pos} is face-down")]
    HiddenKey { pile: usize, pos: usize },
    #[error("sort key {symbol} is duplicated across piles holding hidden cards")]
    DuplicateKey { symbol: Symbol },
    #[error("rearrangement '{label}' does not conserve the card multiset")]
    CardsNotConserved { label: String },
    #[error("choice arity must be at least 1")]
    InvalidChoiceArity,
    #[error("scripted choice source is exhausted")]
    ScriptExhausted,
    #[error("scripted choice {choice} out of range for arity {arity}")]
    ScriptChoiceOutOfRange { choice: usize, arity: usize },
    #[error("program replay diverged: recorded arity {expected}, requested {got}")]
    ReplayDiverged { expected: usize, got: usize },
}

/// Errors from exhaustive enumeration: either the branch tree is too large
/// or the enumerated program itself failed.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumerateError<E> {
    #[error("branch count {estimated} exceeds cap {cap}")]
    TooLarge { estimated: u128, cap: u64 },
    #[error(transparent)]
    Program(E),
}

/// Which deck a card belongs to. Payload cards track the hidden inputs and
/// must never be turned face-up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CardKind {
    Numbered,
    Barred,
    Payload,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Face {
    Up,
    Down,
}

/// A single physical card. `value` is the printed label for `Numbered` and
/// `Barred` cards and the ground-truth payload id for `Payload` cards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Card {
    pub kind: CardKind,
    pub value: usize,
    pub face: Face,
}

impl Card {
    pub fn numbered(value: usize) -> Self {
        Card { kind: CardKind::Numbered, value, face: Face::Down }
    }

    pub fn barred(value: usize) -> Self {
        Card { kind: CardKind::Barred, value, face: Face::Down }
    }

    pub fn payload(id: usize) -> Self {
        Card { kind: CardKind::Payload, value: id, face: Face::Down }
    }

    /// The public symbol this card shows when face-up. Payload cards have
    /// none; they must never be revealed.
    pub fn symbol(&self) -> Option<Symbol> {
        match self.kind {
            CardKind::Numbered => Some(Symbol::Numbered(self.value)),
            CardKind::Barred => Some(Symbol::Barred(self.value)),
            CardKind::Payload => None,
        }
    }
}

/// A revealed card face. The ordering puts every barred symbol before every
/// numbered one, matching the public sort order of the protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Symbol {
    Barred(usize),
    Numbered(usize),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Barred(v) => write!(f, "b{v}"),
            Symbol::Numbered(v) => write!(f, "{v}"),
        }
    }
}

/// One public event. Shuffle events record only which piles (or card
/// positions) were scrambled, never the drawn permutation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    PileShuffle { piles: Vec<usize>, pile_size: usize },
    CardShuffle { pile: usize, start: usize, count: usize },
    Turned { pile: usize, pos: usize, symbol: Symbol },
    Sorted { order: Vec<usize> },
    Rearranged { label: String, pile_sizes: Vec<usize> },
}

impl TraceEvent {
    fn text_line(&self) -> String {
        match self {
            TraceEvent::PileShuffle { piles, pile_size } => {
                format!("pss piles={} size={}", join(piles), pile_size)
            }
            TraceEvent::CardShuffle { pile, start, count } => {
                format!("scramble pile={pile} start={start} count={count}")
            }
            TraceEvent::Turned { pile, pos, symbol } => {
                format!("turn pile={pile} pos={pos} symbol={symbol}")
            }
            TraceEvent::Sorted { order } => format!("sort order={}", join(order)),
            TraceEvent::Rearranged { label, pile_sizes } => {
                format!("arrange label={} sizes={}", label, join(pile_sizes))
            }
        }
    }
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// The public transcript of a run.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct VisibleTrace {
    events: Vec<TraceEvent>,
}

impl VisibleTrace {
    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of shuffle events (pile scrambles plus in-pile card
    /// scrambles). This is the effective shuffle count of a run.
    pub fn shuffle_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| {
                matches!(
                    e,
                    TraceEvent::PileShuffle { .. } | TraceEvent::CardShuffle { .. }
                )
            })
            .count()
    }

    /// Canonical line-oriented text form, one event per line. Bit-exact
    /// across runs with equal seeds.
    pub fn to_text(&self) -> String {
        self.events
            .iter()
            .map(TraceEvent::text_line)
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// SHA-256 of the canonical text form, for use as a map key.
    pub fn digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(self.to_text().as_bytes());
        hasher.finalize().into()
    }
}

impl fmt::Display for VisibleTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// One recorded choice point of an exhaustive enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct BranchPoint {
    choice: usize,
    arity: usize,
}

/// Replay cursor over the tree of uniform choices. The enumeration driver
/// re-runs the program once per branch; the cursor feeds recorded choices
/// back and extends the path at the frontier.
#[derive(Clone, Debug, Default)]
pub struct BranchCursor {
    path: Vec<BranchPoint>,
    cursor: usize,
}

impl BranchCursor {
    fn next(&mut self, arity: usize) -> Result<usize, CardError> {
        if self.cursor < self.path.len() {
            let recorded = self.path[self.cursor];
            if recorded.arity != arity {
                return Err(CardError::ReplayDiverged {
                    expected: recorded.arity,
                    got: arity,
                });
            }
            self.cursor += 1;
            Ok(recorded.choice)
        } else {
            self.path.push(BranchPoint { choice: 0, arity });
            self.cursor += 1;
            Ok(0)
        }
    }

    /// Probability of the branch just replayed: the product of `1/arity`
    /// over its choice points.
    fn probability(&self) -> BigRational {
        let mut denom = BigInt::one();
        for point in &self.path {
            denom *= BigInt::from(point.arity);
        }
        BigRational::new(BigInt::one(), denom)
    }

    fn arity_product(&self) -> u128 {
        self.path
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.arity as u128))
    }

    /// Advances to the next branch in depth-first order. Returns false once
    /// every branch has been visited.
    fn advance(&mut self) -> bool {
        while let Some(last) = self.path.last() {
            if last.choice + 1 < last.arity {
                self.path.last_mut().unwrap().choice += 1;
                self.cursor = 0;
                return true;
            }
            self.path.pop();
        }
        false
    }
}

/// The randomness contract: every protocol draws uniform choices through
/// one of these. Seeded mode is reproducible, scripted mode replays a fixed
/// choice list, and exhaustive mode is driven by [`enumerate_runs`] to
/// cover every branch exactly once.
#[derive(Clone, Debug)]
pub enum ChoiceSource {
    Seeded(Box<ChaCha8Rng>),
    Scripted { choices: Vec<usize>, cursor: usize },
    Exhaustive(BranchCursor),
}

impl ChoiceSource {
    pub fn seeded(seed: u64) -> Self {
        ChoiceSource::Seeded(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn scripted(choices: Vec<usize>) -> Self {
        ChoiceSource::Scripted { choices, cursor: 0 }
    }

    /// A uniform draw from `0..arity`. An arity of 1 is deterministic and
    /// consumes no randomness and no branch point.
    pub fn choose_uniform(&mut self, arity: usize) -> Result<usize, CardError> {
        if arity == 0 {
            return Err(CardError::InvalidChoiceArity);
        }
        if arity == 1 {
            return Ok(0);
        }
        match self {
            ChoiceSource::Seeded(rng) => Ok(rng.random_range(0..arity)),
            ChoiceSource::Scripted { choices, cursor } => {
                let choice = *choices.get(*cursor).ok_or(CardError::ScriptExhausted)?;
                if choice >= arity {
                    return Err(CardError::ScriptChoiceOutOfRange { choice, arity });
                }
                *cursor += 1;
                Ok(choice)
            }
            ChoiceSource::Exhaustive(cursor) => cursor.next(arity),
        }
    }
}

/// Runs `program` once per branch of its choice tree and returns every leaf
/// outcome with its exact probability. Probabilities are exact rationals
/// and sum to exactly 1 across the returned leaves.
///
/// The program must be deterministic given its choice source: it is
/// replayed, not forked. Fails with `TooLarge` when the estimated or actual
/// branch count exceeds `max_branches`.
pub fn enumerate_runs<T, E, F>(
    mut program: F,
    max_branches: u64,
) -> Result<Vec<(T, BigRational)>, EnumerateError<E>>
where
    F: FnMut(&mut ChoiceSource) -> Result<T, E>,
{
    let mut source = ChoiceSource::Exhaustive(BranchCursor::default());
    let mut leaves = Vec::new();
    loop {
        let outcome = program(&mut source).map_err(EnumerateError::Program)?;
        let cursor = match &mut source {
            ChoiceSource::Exhaustive(c) => c,
            _ => unreachable!("enumeration source is exhaustive"),
        };
        if leaves.is_empty() {
            let estimated = cursor.arity_product();
            if estimated > max_branches as u128 {
                return Err(EnumerateError::TooLarge {
                    estimated,
                    cap: max_branches,
                });
            }
        }
        leaves.push((outcome, cursor.probability()));
        if leaves.len() as u64 > max_branches {
            return Err(EnumerateError::TooLarge {
                estimated: leaves.len() as u128,
                cap: max_branches,
            });
        }
        if !cursor.advance() {
            break;
        }
    }
    Ok(leaves)
}

/// The table state: an ordered list of piles of cards plus the public
/// trace. One protocol run owns one table.
#[derive(Clone, Debug)]
pub struct CardTable {
    piles: Vec<Vec<Card>>,
    trace: VisibleTrace,
}

impl CardTable {
    pub fn new(piles: Vec<Vec<Card>>) -> Self {
        let sizes = piles.iter().map(Vec::len).collect();
        let mut table = CardTable {
            piles,
            trace: VisibleTrace::default(),
        };
        table.trace.events.push(TraceEvent::Rearranged {
            label: "layout".into(),
            pile_sizes: sizes,
        });
        table
    }

    pub fn pile_count(&self) -> usize {
        self.piles.len()
    }

    /// Ground-truth view of a pile. Only the simulator looks at this; the
    /// public transcript is in [`CardTable::trace`].
    pub fn pile(&self, index: usize) -> &[Card] {
        &self.piles[index]
    }

    pub fn card_count(&self) -> usize {
        self.piles.iter().map(Vec::len).sum()
    }

    pub fn trace(&self) -> &VisibleTrace {
        &self.trace
    }

    pub fn into_trace(self) -> VisibleTrace {
        self.trace
    }

    fn check_piles(&self, pile_indices: &[usize]) -> Result<(), CardError> {
        let mut seen = vec![false; self.piles.len()];
        for &i in pile_indices {
            if i >= self.piles.len() {
                return Err(CardError::NoSuchPile { pile: i });
            }
            if seen[i] {
                return Err(CardError::DuplicatePileIndex { pile: i });
            }
            seen[i] = true;
        }
        Ok(())
    }

    /// Pile-scramble shuffle: permutes the named equal-size piles by a
    /// uniform permutation drawn from the choice source. The pile at the
    /// i-th named slot moves to the sigma(i)-th named slot. Scrambling
    /// fewer than two piles is a no-op and records no event.
    pub fn pss(
        &mut self,
        pile_indices: &[usize],
        choice: &mut ChoiceSource,
    ) -> Result<(), CardError> {
        self.check_piles(pile_indices)?;
        let sizes: Vec<usize> = pile_indices.iter().map(|&i| self.piles[i].len()).collect();
        if sizes.windows(2).any(|w| w[0] != w[1]) {
            return Err(CardError::UnequalPileSizes { sizes });
        }
        let k = pile_indices.len();
        if k < 2 {
            return Ok(());
        }
        let arrangement = draw_arrangement(k, choice)?;
        let old: Vec<Vec<Card>> = pile_indices
            .iter()
            .map(|&i| std::mem::take(&mut self.piles[i]))
            .collect();
        // arrangement[j] = source slot of destination slot j, i.e. the pile
        // at named slot i lands where arrangement picks it up.
        for (j, &src) in arrangement.iter().enumerate() {
            self.piles[pile_indices[j]] = old[src].clone();
        }
        self.trace.events.push(TraceEvent::PileShuffle {
            piles: pile_indices.to_vec(),
            pile_size: sizes[0],
        });
        Ok(())
    }

    /// Generalized pile-scramble protocol: partitions the named piles by
    /// size and applies one pile-scramble per size class, smallest class
    /// size first. Classes with a single member are skipped entirely and
    /// record no event.
    pub fn generalized_pss(
        &mut self,
        pile_indices: &[usize],
        choice: &mut ChoiceSource,
    ) -> Result<(), CardError> {
        self.check_piles(pile_indices)?;
        let mut classes: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for &i in pile_indices {
            classes.entry(self.piles[i].len()).or_default().push(i);
        }
        for class in classes.values() {
            if class.len() >= 2 {
                self.pss(class, choice)?;
            }
        }
        Ok(())
    }

    /// Pile-scramble of the single cards at positions `start..` of one
    /// pile. Fewer than two cards is a no-op and records no event.
    pub fn scramble_cards(
        &mut self,
        pile: usize,
        start: usize,
        choice: &mut ChoiceSource,
    ) -> Result<(), CardError> {
        let len = self
            .piles
            .get(pile)
            .ok_or(CardError::NoSuchPile { pile })?
            .len();
        if start > len {
            return Err(CardError::NoSuchPosition { pile, pos: start });
        }
        let count = len - start;
        if count < 2 {
            return Ok(());
        }
        let arrangement = draw_arrangement(count, choice)?;
        let tail: Vec<Card> = self.piles[pile][start..].to_vec();
        for (j, &src) in arrangement.iter().enumerate() {
            self.piles[pile][start + j] = tail[src];
        }
        self.trace.events.push(TraceEvent::CardShuffle { pile, start, count });
        Ok(())
    }

    /// Turns a face-down card face-up, revealing its symbol publicly.
    /// Turning a payload card is a protocol bug and fails fatally.
    pub fn turn(&mut self, pile: usize, pos: usize) -> Result<Symbol, CardError> {
        let card = self
            .piles
            .get(pile)
            .ok_or(CardError::NoSuchPile { pile })?
            .get(pos)
            .copied()
            .ok_or(CardError::NoSuchPosition { pile, pos })?;
        if card.face == Face::Up {
            return Err(CardError::AlreadyFaceUp { pile, pos });
        }
        let symbol = card.symbol().ok_or(CardError::PayloadExposure { pile, pos })?;
        self.piles[pile][pos].face = Face::Up;
        self.trace.events.push(TraceEvent::Turned { pile, pos, symbol });
        Ok(symbol)
    }

    /// Sorts all piles ascending by the revealed symbol at `key_pos` and
    /// returns the public rearrangement applied (the pile at slot `i` moved
    /// to slot `r(i)`, 1-based).
    ///
    /// Every key card must be face-up. Tied keys are fatal when any tied
    /// pile still holds a face-down card (the public sort would be
    /// ambiguous); piles that are entirely face-up are interchangeable and
    /// keep their relative order.
    pub fn sort_piles_by_revealed(&mut self, key_pos: usize) -> Result<Permutation, CardError> {
        let mut keys = Vec::with_capacity(self.piles.len());
        for (pile, cards) in self.piles.iter().enumerate() {
            let card = cards
                .get(key_pos)
                .copied()
                .ok_or(CardError::NoSuchPosition { pile, pos: key_pos })?;
            if card.face == Face::Down {
                return Err(CardError::HiddenKey { pile, pos: key_pos });
            }
            keys.push(card.symbol().ok_or(CardError::PayloadExposure { pile, pos: key_pos })?);
        }
        for (i, &key) in keys.iter().enumerate() {
            for (j, &other) in keys.iter().enumerate().skip(i + 1) {
                if key == other {
                    let fully_up = |cards: &[Card]| cards.iter().all(|c| c.face == Face::Up);
                    if !fully_up(&self.piles[i]) || !fully_up(&self.piles[j]) {
                        return Err(CardError::DuplicateKey { symbol: key });
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..self.piles.len()).collect();
        order.sort_by_key(|&i| keys[i]);
        let mut images = vec![0; self.piles.len()];
        for (new_slot, &old_slot) in order.iter().enumerate() {
            images[old_slot] = new_slot + 1;
        }
        let rearrangement =
            Permutation::from_images(images).expect("sort order is a bijection");
        let old = std::mem::take(&mut self.piles);
        self.piles = order.into_iter().map(|i| old[i].clone()).collect();
        self.trace.events.push(TraceEvent::Sorted {
            order: rearrangement.images().to_vec(),
        });
        Ok(rearrangement)
    }

    /// A public deterministic rearrangement of the table: `f` receives the
    /// piles and returns the new pile structure. The card multiset must be
    /// conserved. The trace records the label and the resulting pile sizes,
    /// so the move must depend only on public information.
    pub fn rearrange<F>(&mut self, label: &str, f: F) -> Result<(), CardError>
    where
        F: FnOnce(Vec<Vec<Card>>) -> Vec<Vec<Card>>,
    {
        let before = sorted_cards(&self.piles);
        let new_piles = f(self.piles.clone());
        if sorted_cards(&new_piles) != before {
            return Err(CardError::CardsNotConserved { label: label.to_string() });
        }
        self.piles = new_piles;
        self.trace.events.push(TraceEvent::Rearranged {
            label: label.to_string(),
            pile_sizes: self.piles.iter().map(Vec::len).collect(),
        });
        Ok(())
    }
}

fn sorted_cards(piles: &[Vec<Card>]) -> Vec<Card> {
    let mut all: Vec<Card> = piles.iter().flatten().copied().collect();
    all.sort_unstable();
    all
}

/// Draws a uniform arrangement of `0..k` (as "destination slot j takes
/// source slot arrangement[j]") using k-1 uniform choices, so exhaustive
/// enumeration visits each of the k! arrangements exactly once.
fn draw_arrangement(k: usize, choice: &mut ChoiceSource) -> Result<Vec<usize>, CardError> {
    let mut arrangement: Vec<usize> = (0..k).collect();
    for i in 0..k.saturating_sub(1) {
        let j = i + choice.choose_uniform(k - i)?;
        arrangement.swap(i, j);
    }
    Ok(arrangement)
}
