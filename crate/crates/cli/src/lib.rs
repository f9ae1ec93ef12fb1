//! Command-line front end: parse instance files, run and verify protocols,
//! construct gear graphs, and report costs.
//!
//! Exit codes: 0 = success / verification passed, 1 = verification failed,
//! 2 = input error, 3 = enumeration cap exceeded.

pub mod instance;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use cardshuffle::cards::DEFAULT_BRANCH_CAP;
use cardshuffle::gear::{gear_graph, verify_gear, GearError};
use cardshuffle::perm::{PermError, Permutation, PermutationGroup};
use cardshuffle::protocols::{
    protocol_cost, run_hypergraph_shuffle, run_ms_graph_shuffle, run_new_graph_shuffle,
    ProtocolError, ProtocolRun,
};
use cardshuffle::verify::{
    check_correctness, check_equivalence, check_security, exact_output_distribution,
    statistical_uniformity, VerifyError,
};
use cardshuffle::{ChoiceSource, Instance, Protocol};
use instance::{emit_instance, parse_instance, InstanceError};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "cardshuffle", version, about = "Simulate and verify card-based shuffle protocols")]
pub struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    /// Two-deck graph shuffle (one pile per vertex and per edge).
    Ms,
    /// One-deck graph shuffle (one pile per vertex).
    Graph,
    /// Hypergraph shuffle.
    Hyper,
}

impl From<ProtocolArg> for Protocol {
    fn from(arg: ProtocolArg) -> Protocol {
        match arg {
            ProtocolArg::Ms => Protocol::Ms,
            ProtocolArg::Graph => Protocol::NewGraph,
            ProtocolArg::Hyper => Protocol::Hyper,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Exhaustive enumeration with exact rational probabilities.
    Exact,
    /// Seeded sampling with a chi-square uniformity test.
    Stat,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the automorphism group of an instance.
    Aut { file: PathBuf },
    /// Run one protocol execution with a seeded shuffle source.
    Shuffle {
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        /// Seed for the shuffle randomness; drawn from OS entropy when
        /// omitted. The seed used is always reported.
        #[arg(long)]
        seed: Option<u64>,
        /// Include the hidden intermediate record in the output.
        #[arg(long)]
        debug: bool,
        file: PathBuf,
    },
    /// Verify correctness (uniformity over the automorphism group) and, in
    /// exact mode, security (trace independence).
    Verify {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        /// Sample size for statistical mode.
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Branch cap for exact mode.
        #[arg(long, default_value_t = DEFAULT_BRANCH_CAP)]
        max_branches: u64,
        /// Seed for statistical mode.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        file: PathBuf,
    },
    /// Check that both graph protocols induce the same exact distribution.
    Equiv {
        #[arg(long, default_value_t = DEFAULT_BRANCH_CAP)]
        max_branches: u64,
        file: PathBuf,
    },
    /// Construct the gear graph of a permutation given in cycle notation.
    Gear {
        /// Cycle notation, e.g. "(1 2)(3 4 5 6)".
        cycles: String,
        #[arg(long)]
        degree: usize,
        /// Also check that the gear graph's automorphism group equals the
        /// cyclic group generated by the permutation.
        #[arg(long)]
        verify: bool,
        /// Write the instance file here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Report card and shuffle costs of a protocol on an instance.
    Cost {
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        file: PathBuf,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Instance {
        path: String,
        #[source]
        source: InstanceError,
    },
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Gear(#[from] GearError),
}

impl CliError {
    /// 3 when an enumeration cap was exceeded, 2 for every other input or
    /// usage problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(VerifyError::TooLarge { .. }) => 3,
            _ => 2,
        }
    }
}

/// A rendered report plus the process exit code.
pub struct Outcome {
    pub rendered: String,
    pub exit_code: i32,
}

pub fn run(cli: Cli) -> i32 {
    match execute(&cli.command, cli.format) {
        Ok(outcome) => {
            println!("{}", outcome.rendered);
            outcome.exit_code
        }
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn read_instance(path: &Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text).map_err(|source| CliError::Instance {
        path: path.display().to_string(),
        source,
    })
}

/// The automorphism group a protocol's output law is checked against.
fn oracle_group(instance: &Instance, protocol: Protocol) -> Result<PermutationGroup, CliError> {
    // protocol_cost also validates the protocol/instance pairing.
    protocol_cost(instance, protocol)?;
    Ok(match instance {
        Instance::Digraph(g) => g.automorphism_group(),
        Instance::Hypergraph(h) => h.automorphism_group(),
    })
}

fn protocol_program<'a>(
    instance: &'a Instance,
    protocol: Protocol,
) -> impl FnMut(&mut ChoiceSource) -> Result<ProtocolRun, ProtocolError> + 'a {
    move |choice| match (protocol, instance) {
        (Protocol::NewGraph, Instance::Digraph(g)) => run_new_graph_shuffle(g, choice),
        (Protocol::Ms, Instance::Digraph(g)) => run_ms_graph_shuffle(g, choice),
        (Protocol::Hyper, Instance::Hypergraph(h)) => run_hypergraph_shuffle(h, choice),
        _ => Err(ProtocolError::ProtocolMismatch {
            protocol,
            got: instance.kind_name(),
        }),
    }
}

fn instance_json(instance: &Instance) -> Value {
    match instance {
        Instance::Digraph(g) => json!({
            "kind": "digraph",
            "n": g.vertex_count(),
            "m": g.edge_count(),
        }),
        Instance::Hypergraph(h) => json!({
            "kind": "hypergraph",
            "n": h.vertex_count(),
            "m": h.edge_count(),
        }),
    }
}

fn instance_text(instance: &Instance) -> String {
    format!(
        "instance: {} n={} m={}",
        instance.kind_name(),
        instance.vertex_count(),
        match instance {
            Instance::Digraph(g) => g.edge_count(),
            Instance::Hypergraph(h) => h.edge_count(),
        }
    )
}

fn execute(command: &Command, format: Format) -> Result<Outcome, CliError> {
    match command {
        Command::Aut { file } => cmd_aut(file, format),
        Command::Shuffle { protocol, seed, debug, file } => {
            cmd_shuffle(file, (*protocol).into(), *seed, *debug, format)
        }
        Command::Verify { mode, protocol, trials, max_branches, seed, file } => cmd_verify(
            file,
            *mode,
            (*protocol).into(),
            *trials,
            *max_branches,
            *seed,
            format,
        ),
        Command::Equiv { max_branches, file } => cmd_equiv(file, *max_branches, format),
        Command::Gear { cycles, degree, verify, output } => {
            cmd_gear(cycles, *degree, *verify, output.as_deref(), format)
        }
        Command::Cost { protocol, file } => cmd_cost(file, (*protocol).into(), format),
    }
}

fn cmd_aut(file: &Path, format: Format) -> Result<Outcome, CliError> {
    let instance = read_instance(file)?;
    let group = match &instance {
        Instance::Digraph(g) => g.automorphism_group(),
        Instance::Hypergraph(h) => h.automorphism_group(),
    };
    let elements: Vec<String> = group.iter().map(|p| p.to_string()).collect();
    let rendered = match format {
        Format::Json => pretty(&json!({
            "schema": SCHEMA_VERSION,
            "command": "aut",
            "instance": instance_json(&instance),
            "order": group.order(),
            "elements": elements,
        })),
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "{}", instance_text(&instance));
            let _ = writeln!(out, "automorphism group order: {}", group.order());
            for element in &elements {
                let _ = writeln!(out, "{element}");
            }
            out.trim_end().to_string()
        }
    };
    Ok(Outcome { rendered, exit_code: 0 })
}

fn cmd_shuffle(
    file: &Path,
    protocol: Protocol,
    seed: Option<u64>,
    debug: bool,
    format: Format,
) -> Result<Outcome, CliError> {
    let instance = read_instance(file)?;
    let seed = seed.unwrap_or_else(rand::random);
    let mut choice = ChoiceSource::seeded(seed);
    let run = protocol_program(&instance, protocol)(&mut choice)?;
    let rendered = match format {
        Format::Json => {
            let mut report = json!({
                "schema": SCHEMA_VERSION,
                "command": "shuffle",
                "protocol": protocol.to_string(),
                "seed": seed,
                "instance": instance_json(&instance),
                "realized": run.realized.to_string(),
                "cost": {
                    "cards": run.cost.cards,
                    "nominal_shuffles": run.cost.nominal_shuffles,
                    "effective_shuffles": run.cost.effective_shuffles,
                },
                "trace": run.trace.events(),
            });
            if debug {
                report["intermediates"] = intermediates_json(&run);
            }
            pretty(&report)
        }
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "{}", instance_text(&instance));
            let _ = writeln!(out, "protocol: {protocol}");
            let _ = writeln!(out, "seed: {seed}");
            let _ = writeln!(out, "realized: {}", run.realized);
            let _ = writeln!(
                out,
                "cost: cards={} nominal_shuffles={} effective_shuffles={}",
                run.cost.cards, run.cost.nominal_shuffles, run.cost.effective_shuffles
            );
            if debug {
                let _ = writeln!(out, "sigma: {}", run.intermediates.sigma);
                if let Some(tau) = &run.intermediates.tau {
                    let _ = writeln!(out, "tau: {tau}");
                }
                let _ = writeln!(out, "psi: {}", run.intermediates.psi);
                let observed = emit_instance(&run.intermediates.observed);
                let _ = writeln!(out, "observed:");
                for line in observed.lines() {
                    let _ = writeln!(out, "  {line}");
                }
            }
            let _ = writeln!(out, "trace:");
            for line in run.trace.to_text().lines() {
                let _ = writeln!(out, "  {line}");
            }
            out.trim_end().to_string()
        }
    };
    Ok(Outcome { rendered, exit_code: 0 })
}

fn intermediates_json(run: &ProtocolRun) -> Value {
    json!({
        "sigma": run.intermediates.sigma.to_string(),
        "tau": run.intermediates.tau.as_ref().map(|t| t.to_string()),
        "psi": run.intermediates.psi.to_string(),
        "observed": emit_instance(&run.intermediates.observed),
    })
}

fn cmd_verify(
    file: &Path,
    mode: Mode,
    protocol: Protocol,
    trials: u64,
    max_branches: u64,
    seed: u64,
    format: Format,
) -> Result<Outcome, CliError> {
    let instance = read_instance(file)?;
    let group = oracle_group(&instance, protocol)?;
    match mode {
        Mode::Exact => {
            let dist = exact_output_distribution(protocol_program(&instance, protocol), max_branches)?;
            let correctness = check_correctness(&dist.distribution, &group);
            let security = check_security(protocol_program(&instance, protocol), max_branches)?;
            let pass = correctness.pass && security.pass;
            let rendered = match format {
                Format::Json => pretty(&json!({
                    "schema": SCHEMA_VERSION,
                    "command": "verify",
                    "mode": "exact",
                    "protocol": protocol.to_string(),
                    "instance": instance_json(&instance),
                    "branches": dist.branches,
                    "correctness": {
                        "pass": correctness.pass,
                        "group_order": correctness.group_order,
                        "support_size": correctness.support_size,
                        "uniform_probability": format!("1/{}", correctness.group_order),
                    },
                    "security": {
                        "pass": security.pass,
                        "trace_count": security.trace_count,
                        "outcome_count": security.outcome_count,
                        "violations": security.violations,
                    },
                    "pass": pass,
                })),
                Format::Text => {
                    let mut out = String::new();
                    let _ = writeln!(out, "{}", instance_text(&instance));
                    let _ = writeln!(out, "protocol: {protocol}");
                    let _ = writeln!(out, "mode: exact");
                    let _ = writeln!(out, "branches: {}", dist.branches);
                    let _ = writeln!(
                        out,
                        "correctness: {} (support {} of group order {}, uniform 1/{})",
                        pass_str(correctness.pass),
                        correctness.support_size,
                        correctness.group_order,
                        correctness.group_order
                    );
                    let _ = writeln!(
                        out,
                        "security: {} ({} traces x {} outcomes, {} violations)",
                        pass_str(security.pass),
                        security.trace_count,
                        security.outcome_count,
                        security.violations
                    );
                    let _ = writeln!(out, "result: {}", pass_str(pass));
                    out.trim_end().to_string()
                }
            };
            Ok(Outcome { rendered, exit_code: i32::from(!pass) })
        }
        Mode::Stat => {
            let report = statistical_uniformity(
                protocol_program(&instance, protocol),
                &group,
                trials,
                seed,
            )?;
            let rendered = match format {
                Format::Json => pretty(&json!({
                    "schema": SCHEMA_VERSION,
                    "command": "verify",
                    "mode": "stat",
                    "protocol": protocol.to_string(),
                    "instance": instance_json(&instance),
                    "trials": report.trials,
                    "seed": seed,
                    "chi_square": report.chi_square,
                    "dof": report.dof,
                    "threshold": report.threshold,
                    "out_of_support": report.out_of_support,
                    "pass": report.pass,
                })),
                Format::Text => {
                    let mut out = String::new();
                    let _ = writeln!(out, "{}", instance_text(&instance));
                    let _ = writeln!(out, "protocol: {protocol}");
                    let _ = writeln!(out, "mode: stat");
                    let _ = writeln!(out, "trials: {} (seed {seed})", report.trials);
                    let _ = writeln!(
                        out,
                        "chi-square: {:.4} vs threshold {:.4} (dof {})",
                        report.chi_square, report.threshold, report.dof
                    );
                    let _ = writeln!(out, "out-of-support outcomes: {}", report.out_of_support);
                    let _ = writeln!(out, "result: {}", pass_str(report.pass));
                    out.trim_end().to_string()
                }
            };
            Ok(Outcome { rendered, exit_code: i32::from(!report.pass) })
        }
    }
}

fn cmd_equiv(file: &Path, max_branches: u64, format: Format) -> Result<Outcome, CliError> {
    let instance = read_instance(file)?;
    let graph = match &instance {
        Instance::Digraph(g) => g,
        Instance::Hypergraph(_) => {
            return Err(CliError::Protocol(ProtocolError::ProtocolMismatch {
                protocol: Protocol::Ms,
                got: instance.kind_name(),
            }))
        }
    };
    let report = check_equivalence(graph, max_branches)?;
    let rendered = match format {
        Format::Json => pretty(&json!({
            "schema": SCHEMA_VERSION,
            "command": "equiv",
            "instance": instance_json(&instance),
            "ms_branches": report.ms_branches,
            "graph_branches": report.graph_branches,
            "pass": report.pass,
        })),
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "{}", instance_text(&instance));
            let _ = writeln!(out, "ms branches: {}", report.ms_branches);
            let _ = writeln!(out, "graph branches: {}", report.graph_branches);
            let _ = writeln!(
                out,
                "result: {} (exact output distributions {})",
                pass_str(report.pass),
                if report.pass { "identical" } else { "differ" }
            );
            out.trim_end().to_string()
        }
    };
    Ok(Outcome { rendered, exit_code: i32::from(!report.pass) })
}

fn cmd_gear(
    cycles: &str,
    degree: usize,
    verify: bool,
    output: Option<&Path>,
    format: Format,
) -> Result<Outcome, CliError> {
    let g = Permutation::parse_cycles(cycles, degree)?;
    let graph = gear_graph(&g);
    let instance = Instance::Digraph(graph);
    let text = emit_instance(&instance);
    let report = if verify { Some(verify_gear(&g)?) } else { None };
    let holds = report.as_ref().map(|r| r.holds);
    if let Some(path) = output {
        std::fs::write(path, &text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    let rendered = match format {
        Format::Json => {
            let mut value = json!({
                "schema": SCHEMA_VERSION,
                "command": "gear",
                "cycles": g.to_string(),
                "degree": degree,
                "instance": instance_json(&instance),
                "instance_text": text,
            });
            if let Some(report) = &report {
                value["verify"] = json!({
                    "holds": report.holds,
                    "aut_order": report.automorphisms.order(),
                    "cyclic_order": report.cyclic.order(),
                });
            }
            pretty(&value)
        }
        Format::Text => {
            let mut out = String::new();
            if output.is_none() {
                out.push_str(&text);
            } else {
                let _ = writeln!(out, "wrote {}", output.unwrap().display());
            }
            if let Some(report) = &report {
                let _ = writeln!(
                    out,
                    "# gear verify: holds={} aut_order={} cyclic_order={}",
                    report.holds,
                    report.automorphisms.order(),
                    report.cyclic.order()
                );
            }
            out.trim_end().to_string()
        }
    };
    Ok(Outcome {
        rendered,
        exit_code: i32::from(holds == Some(false)),
    })
}

fn cmd_cost(file: &Path, protocol: Protocol, format: Format) -> Result<Outcome, CliError> {
    let instance = read_instance(file)?;
    let cost = protocol_cost(&instance, protocol)?;
    let rendered = match format {
        Format::Json => pretty(&json!({
            "schema": SCHEMA_VERSION,
            "command": "cost",
            "protocol": protocol.to_string(),
            "instance": instance_json(&instance),
            "cards": cost.cards,
            "nominal_shuffles": cost.nominal_shuffles,
            "effective_shuffles": cost.effective_shuffles,
        })),
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "{}", instance_text(&instance));
            let _ = writeln!(out, "protocol: {protocol}");
            let _ = writeln!(out, "cards: {}", cost.cards);
            let _ = writeln!(out, "nominal shuffles: {}", cost.nominal_shuffles);
            let _ = writeln!(out, "effective shuffles: {}", cost.effective_shuffles);
            out.trim_end().to_string()
        }
    };
    Ok(Outcome { rendered, exit_code: 0 })
}

fn pass_str(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}
