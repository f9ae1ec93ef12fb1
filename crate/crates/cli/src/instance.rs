//! The instance file format.
//!
//! Line 1 declares `<kind> <n> <m>` with kind one of `digraph`, `graph`,
//! `hypergraph`; the next `m` lines carry one edge each. Directed and
//! undirected edges are `u v` pairs; hyperedges are `k v1 ... vk`. A `#`
//! starts a comment, blank lines are ignored, and undirected graphs are
//! converted to directed graphs by replacing each edge with a 2-cycle.

use cardshuffle::graph::{DirectedGraph, Hypergraph};
use cardshuffle::Instance;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Range { line: usize, message: String },
}

fn parse_error(line: usize, message: impl Into<String>) -> InstanceError {
    InstanceError::Parse { line, message: message.into() }
}

fn range_error(line: usize, message: impl Into<String>) -> InstanceError {
    InstanceError::Range { line, message: message.into() }
}

fn parse_number(token: &str, line: usize, what: &str) -> Result<usize, InstanceError> {
    token
        .parse()
        .map_err(|_| parse_error(line, format!("invalid {what} '{token}'")))
}

fn check_vertex(v: usize, n: usize, line: usize) -> Result<(), InstanceError> {
    if v < 1 || v > n {
        return Err(range_error(line, format!("vertex {v} out of range 1..={n}")));
    }
    Ok(())
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    // (1-based line number, content with comments stripped)
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| {
            let content = raw.split('#').next().unwrap_or("").trim();
            (i + 1, content)
        })
        .filter(|(_, content)| !content.is_empty());

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_error(1, "empty instance file"))?;
    let mut tokens = header.split_whitespace();
    let kind = tokens
        .next()
        .ok_or_else(|| parse_error(header_line, "missing kind"))?;
    let n = parse_number(
        tokens.next().ok_or_else(|| parse_error(header_line, "missing vertex count"))?,
        header_line,
        "vertex count",
    )?;
    let m = parse_number(
        tokens.next().ok_or_else(|| parse_error(header_line, "missing edge count"))?,
        header_line,
        "edge count",
    )?;
    if tokens.next().is_some() {
        return Err(parse_error(header_line, "trailing tokens after header"));
    }
    if !matches!(kind, "digraph" | "graph" | "hypergraph") {
        return Err(parse_error(
            header_line,
            format!("unknown kind '{kind}' (expected digraph, graph, or hypergraph)"),
        ));
    }

    let mut body = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, content) = lines
            .next()
            .ok_or_else(|| parse_error(header_line, format!("expected {m} edge lines")))?;
        body.push((line, content));
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_error(line, format!("more than the declared {m} edge lines")));
    }

    match kind {
        "digraph" | "graph" => {
            let mut edges = Vec::with_capacity(m);
            for (line, content) in body {
                let tokens: Vec<&str> = content.split_whitespace().collect();
                if tokens.len() != 2 {
                    return Err(parse_error(line, "expected two vertices"));
                }
                let u = parse_number(tokens[0], line, "vertex")?;
                let v = parse_number(tokens[1], line, "vertex")?;
                check_vertex(u, n, line)?;
                check_vertex(v, n, line)?;
                if kind == "graph" && u == v {
                    return Err(range_error(line, "undirected edges cannot be self-loops"));
                }
                edges.push((u, v));
            }
            if kind == "digraph" {
                let graph = DirectedGraph::new(n, edges)
                    .map_err(|e| range_error(header_line, e.to_string()))?;
                Ok(Instance::Digraph(graph))
            } else {
                let pairs = edges.into_iter().map(|(u, v)| vec![u, v]).collect();
                let undirected = Hypergraph::new(n, pairs)
                    .map_err(|e| range_error(header_line, e.to_string()))?;
                let graph = undirected
                    .to_directed()
                    .map_err(|e| range_error(header_line, e.to_string()))?;
                Ok(Instance::Digraph(graph))
            }
        }
        _ => {
            let mut edges = Vec::with_capacity(m);
            for (line, content) in body {
                let tokens: Vec<&str> = content.split_whitespace().collect();
                if tokens.is_empty() {
                    return Err(parse_error(line, "expected a hyperedge"));
                }
                let k = parse_number(tokens[0], line, "hyperedge size")?;
                if tokens.len() != k + 1 {
                    return Err(parse_error(
                        line,
                        format!("hyperedge declares {k} vertices but lists {}", tokens.len() - 1),
                    ));
                }
                let mut edge = Vec::with_capacity(k);
                for token in &tokens[1..] {
                    let v = parse_number(token, line, "vertex")?;
                    check_vertex(v, n, line)?;
                    edge.push(v);
                }
                edges.push(edge);
            }
            let hypergraph = Hypergraph::new(n, edges)
                .map_err(|e| range_error(header_line, e.to_string()))?;
            Ok(Instance::Hypergraph(hypergraph))
        }
    }
}

/// Canonical text form: header plus one edge per line, no comments.
/// Undirected input graphs were converted on parse, so they emit as
/// `digraph`.
pub fn emit_instance(instance: &Instance) -> String {
    let mut out = String::new();
    match instance {
        Instance::Digraph(g) => {
            out.push_str(&format!("digraph {} {}\n", g.vertex_count(), g.edge_count()));
            for &(u, v) in g.edges() {
                out.push_str(&format!("{u} {v}\n"));
            }
        }
        Instance::Hypergraph(h) => {
            out.push_str(&format!(
                "hypergraph {} {}\n",
                h.vertex_count(),
                h.edge_count()
            ));
            for edge in h.edges() {
                out.push_str(&edge.len().to_string());
                for v in edge {
                    out.push_str(&format!(" {v}"));
                }
                out.push('\n');
            }
        }
    }
    out
}
