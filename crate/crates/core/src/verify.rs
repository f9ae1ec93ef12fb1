//! Exact and statistical verification of protocol runs.
//!
//! Exact mode enumerates every random branch of a protocol and checks, in
//! rational arithmetic with no tolerance at all:
//!
//! * correctness — the realized permutation is uniform over the expected
//!   automorphism group;
//! * security — the joint law of (visible trace, realized permutation)
//!   factors into the product of its marginals;
//! * equivalence — two protocols induce identical exact distributions.
//!
//! Statistical mode covers instances whose branch count exceeds the
//! enumeration cap: seeded trials and a Pearson chi-square test against the
//! uniform law, passing below the 0.999 quantile so a correct protocol is
//! flagged falsely only about once in a thousand suite runs.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::cards::{enumerate_runs, ChoiceSource, EnumerateError};
use crate::graph::DirectedGraph;
use crate::perm::{Permutation, PermutationGroup};
use crate::protocols::{
    run_ms_graph_shuffle, run_new_graph_shuffle, ProtocolError, ProtocolRun,
};

/// Trials required per group element before the chi-square statistic is
/// trusted.
pub const TRIALS_PER_ELEMENT: u64 = 50;

/// Chi-square acceptance quantile.
pub const CHI_SQUARE_QUANTILE: f64 = 0.999;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("branch count {estimated} exceeds cap {cap}")]
    TooLarge { estimated: u128, cap: u64 },
    #[error("{trials} trials are too few for a group of order {order}: need at least {needed}")]
    SampleTooSmall { trials: u64, order: usize, needed: u64 },
    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: String },
    #[error("an outcome carries a negative probability")]
    NegativeProbability,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

impl From<EnumerateError<ProtocolError>> for VerifyError {
    fn from(err: EnumerateError<ProtocolError>) -> Self {
        match err {
            EnumerateError::TooLarge { estimated, cap } => VerifyError::TooLarge { estimated, cap },
            EnumerateError::Program(e) => VerifyError::Protocol(e),
        }
    }
}

/// An exact probability distribution: nonnegative rationals summing to
/// exactly 1, keyed by outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactDistribution<K: Ord> {
    outcomes: BTreeMap<K, BigRational>,
}

impl<K: Ord> ExactDistribution<K> {
    /// Accumulates weighted outcomes and checks that they form a
    /// probability distribution.
    pub fn from_weighted<I>(samples: I) -> Result<Self, VerifyError>
    where
        I: IntoIterator<Item = (K, BigRational)>,
    {
        let mut outcomes: BTreeMap<K, BigRational> = BTreeMap::new();
        for (key, p) in samples {
            if p < BigRational::zero() {
                return Err(VerifyError::NegativeProbability);
            }
            *outcomes.entry(key).or_insert_with(BigRational::zero) += p;
        }
        let total: BigRational = outcomes.values().cloned().sum();
        if !total.is_one() {
            return Err(VerifyError::NotNormalized { sum: total.to_string() });
        }
        Ok(ExactDistribution { outcomes })
    }

    pub fn support_size(&self) -> usize {
        self.outcomes.len()
    }

    pub fn probability(&self, key: &K) -> BigRational {
        self.outcomes.get(key).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &BigRational)> {
        self.outcomes.iter()
    }
}

/// An exact output distribution together with how many branches produced it.
#[derive(Clone, Debug)]
pub struct DistributionReport {
    pub distribution: ExactDistribution<Permutation>,
    pub branches: u64,
}

/// Marginal law of the realized permutation, by exhaustive enumeration.
pub fn exact_output_distribution<F>(
    mut program: F,
    max_branches: u64,
) -> Result<DistributionReport, VerifyError>
where
    F: FnMut(&mut ChoiceSource) -> Result<ProtocolRun, ProtocolError>,
{
    let leaves = enumerate_runs(|c| program(c).map(|run| run.realized), max_branches)?;
    let branches = leaves.len() as u64;
    Ok(DistributionReport {
        distribution: ExactDistribution::from_weighted(leaves)?,
        branches,
    })
}

/// Result of comparing a distribution against uniform-over-a-group.
#[derive(Clone, Debug)]
pub struct CorrectnessReport {
    pub pass: bool,
    pub group_order: usize,
    pub support_size: usize,
    /// Group elements the distribution never realizes.
    pub missing: Vec<Permutation>,
    /// Realized outcomes outside the group.
    pub unexpected: Vec<Permutation>,
    /// Outcomes whose probability differs from 1/|group|.
    pub nonuniform: Vec<(Permutation, BigRational)>,
}

/// Passes iff the support equals the group and every probability is
/// exactly `1/|group|`.
pub fn check_correctness(
    dist: &ExactDistribution<Permutation>,
    group: &PermutationGroup,
) -> CorrectnessReport {
    let uniform = BigRational::new(BigInt::one(), BigInt::from(group.order()));
    let mut missing = Vec::new();
    let mut unexpected = Vec::new();
    let mut nonuniform = Vec::new();
    for element in group.iter() {
        if dist.probability(element).is_zero() {
            missing.push(element.clone());
        }
    }
    for (outcome, p) in dist.iter() {
        if !group.contains(outcome) {
            unexpected.push(outcome.clone());
        } else if *p != uniform {
            nonuniform.push((outcome.clone(), p.clone()));
        }
    }
    CorrectnessReport {
        pass: missing.is_empty() && unexpected.is_empty() && nonuniform.is_empty(),
        group_order: group.order(),
        support_size: dist.support_size(),
        missing,
        unexpected,
        nonuniform,
    }
}

/// Result of the exact trace-independence check.
#[derive(Clone, Debug)]
pub struct SecurityReport {
    pub pass: bool,
    pub branches: u64,
    pub trace_count: usize,
    pub outcome_count: usize,
    /// Number of (trace, outcome) pairs where the joint probability is not
    /// the product of the marginals.
    pub violations: usize,
}

/// Builds the exact joint law of (trace digest, realized permutation) and
/// passes iff it factors into the product of its marginals at every pair.
///
/// Digest keys are SHA-256 of the canonical trace text; on digest equality
/// the full traces are compared, so a hash collision cannot silently merge
/// two distinct traces.
pub fn check_security<F>(mut program: F, max_branches: u64) -> Result<SecurityReport, VerifyError>
where
    F: FnMut(&mut ChoiceSource) -> Result<ProtocolRun, ProtocolError>,
{
    let leaves = enumerate_runs(
        |c| {
            program(c).map(|run| {
                let digest = run.trace.digest();
                (digest, run.trace.to_text(), run.realized)
            })
        },
        max_branches,
    )?;
    let branches = leaves.len() as u64;
    let mut joint: BTreeMap<([u8; 32], Permutation), BigRational> = BTreeMap::new();
    let mut trace_marginal: BTreeMap<[u8; 32], BigRational> = BTreeMap::new();
    let mut outcome_marginal: BTreeMap<Permutation, BigRational> = BTreeMap::new();
    let mut texts: HashMap<[u8; 32], String> = HashMap::new();
    for ((digest, text, outcome), p) in leaves {
        if let Some(previous) = texts.get(&digest) {
            assert_eq!(previous, &text, "trace digest collision");
        } else {
            texts.insert(digest, text);
        }
        *joint
            .entry((digest, outcome.clone()))
            .or_insert_with(BigRational::zero) += p.clone();
        *trace_marginal.entry(digest).or_insert_with(BigRational::zero) += p.clone();
        *outcome_marginal.entry(outcome).or_insert_with(BigRational::zero) += p;
    }
    let mut violations = 0;
    for (digest, pt) in &trace_marginal {
        for (outcome, pp) in &outcome_marginal {
            let observed = joint
                .get(&(*digest, outcome.clone()))
                .cloned()
                .unwrap_or_else(BigRational::zero);
            if observed != pt * pp {
                violations += 1;
            }
        }
    }
    Ok(SecurityReport {
        pass: violations == 0,
        branches,
        trace_count: trace_marginal.len(),
        outcome_count: outcome_marginal.len(),
        violations,
    })
}

/// Result of comparing the two graph protocols on one instance.
#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub pass: bool,
    pub ms_branches: u64,
    pub graph_branches: u64,
}

/// Passes iff both graph shuffle protocols induce the same exact output
/// distribution on `g`.
pub fn check_equivalence(
    g: &DirectedGraph,
    max_branches: u64,
) -> Result<EquivalenceReport, VerifyError> {
    let ms = exact_output_distribution(|c| run_ms_graph_shuffle(g, c), max_branches)?;
    let graph = exact_output_distribution(|c| run_new_graph_shuffle(g, c), max_branches)?;
    Ok(EquivalenceReport {
        pass: ms.distribution == graph.distribution,
        ms_branches: ms.branches,
        graph_branches: graph.branches,
    })
}

/// Result of the chi-square uniformity test.
#[derive(Clone, Debug)]
pub struct StatReport {
    pub chi_square: f64,
    pub dof: usize,
    pub threshold: f64,
    pub trials: u64,
    /// Trials whose realized permutation fell outside the group.
    pub out_of_support: u64,
    pub pass: bool,
}

/// Seeded-trial uniformity check for instances beyond the exact cap:
/// tallies realized permutations over the group and applies a Pearson
/// chi-square test at the 0.999 quantile.
pub fn statistical_uniformity<F>(
    mut program: F,
    group: &PermutationGroup,
    trials: u64,
    seed: u64,
) -> Result<StatReport, VerifyError>
where
    F: FnMut(&mut ChoiceSource) -> Result<ProtocolRun, ProtocolError>,
{
    let needed = TRIALS_PER_ELEMENT * group.order() as u64;
    if trials < needed {
        return Err(VerifyError::SampleTooSmall {
            trials,
            order: group.order(),
            needed,
        });
    }
    let mut source = ChoiceSource::seeded(seed);
    let mut counts: BTreeMap<&Permutation, u64> = group.iter().map(|p| (p, 0)).collect();
    let mut out_of_support = 0u64;
    for _ in 0..trials {
        let run = program(&mut source)?;
        match counts.get_mut(&run.realized) {
            Some(count) => *count += 1,
            None => out_of_support += 1,
        }
    }
    let expected = trials as f64 / group.order() as f64;
    let chi_square: f64 = counts
        .values()
        .map(|&c| {
            let diff = c as f64 - expected;
            diff * diff / expected
        })
        .sum();
    let dof = group.order() - 1;
    let (threshold, pass) = if dof == 0 {
        (0.0, out_of_support == 0)
    } else {
        let threshold = ChiSquared::new(dof as f64)
            .expect("dof is positive")
            .inverse_cdf(CHI_SQUARE_QUANTILE);
        (threshold, chi_square < threshold && out_of_support == 0)
    };
    Ok(StatReport {
        chi_square,
        dof,
        threshold,
        trials,
        out_of_support,
        pass,
    })
}
