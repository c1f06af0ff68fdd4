#![allow(dead_code)]

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rptcard_core::{load_ntriples_str, parse_query, BasicGraphPattern, Graph, NodeRef};

pub const NS: &str = "http://example.org/fixture/";

pub fn fixture_text(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn g1() -> Graph {
    load_ntriples_str(&fixture_text("g1.nt")).unwrap()
}

pub fn g2() -> Graph {
    load_ntriples_str(&fixture_text("g2.nt")).unwrap()
}

pub fn iri(local: &str) -> String {
    format!("{NS}{local}")
}

pub fn id(graph: &Graph, local: &str) -> rptcard_core::TermId {
    graph.iri_id(&iri(local)).unwrap_or_else(|| panic!("{local} not in graph"))
}

/// Parse a query written with the `f:` prefix bound to the fixture namespace.
pub fn query(body: &str) -> BasicGraphPattern {
    parse_query(&format!("PREFIX f: <{NS}>\nSELECT * WHERE {{ {body} }}")).unwrap()
}

pub fn fixture_query(path: &str) -> BasicGraphPattern {
    parse_query(&fixture_text(&format!("queries/{path}"))).unwrap()
}

pub const G1_PATH: &str = "?a f:p ?b . ?b f:q ?c . ?c f:m ?d . ?d f:n ?e";
pub const G1_PATH_A2_D1: &str = "f:a2 f:p ?b . ?b f:q ?c . ?c f:m f:d1 . f:d1 f:n ?e";
pub const G2_STAR: &str = "?s f:p ?a . ?s f:q ?b";

/// Every fixture query used across the suites, paired with its graph.
pub fn fixture_queries() -> Vec<(&'static str, Graph, BasicGraphPattern)> {
    let mut out = Vec::new();
    for (name, body) in [
        ("g1 path", G1_PATH),
        ("g1 path a2..d1", G1_PATH_A2_D1),
        ("g1 path a2", "f:a2 f:p ?b . ?b f:q ?c . ?c f:m ?d . ?d f:n ?e"),
        ("g1 path d1", "?a f:p ?b . ?b f:q ?c . ?c f:m f:d1 . f:d1 f:n ?e"),
        ("g1 path a2..e1", "f:a2 f:p ?b . ?b f:q ?c . ?c f:m ?d . ?d f:n f:e1"),
        ("g1 b2 fork", "?a f:p f:b2 . f:b2 f:q ?c"),
        ("g1 c1 pair", "?b f:q f:c1 . f:c1 f:m ?d"),
        ("g1 three bound", "f:a2 f:p ?b . ?b f:q f:c1 . f:c1 f:m ?d . ?d f:n f:e2"),
    ] {
        out.push((name, g1(), query(body)));
    }
    for (name, body) in [
        ("g2 star", G2_STAR),
        ("g2 x1", "?s f:p f:x1 . ?s f:q ?b"),
        ("g2 x1y1", "?s f:p f:x1 ; f:q f:y1"),
        ("g2 x1y2", "?s f:p f:x1 ; f:q f:y2"),
        ("g2 x2y1", "?s f:p f:x2 ; f:q f:y1"),
        ("g2 x2y2", "?s f:p f:x2 ; f:q f:y2"),
        ("g2 x1y9", "?s f:p f:x1 ; f:q f:y9"),
        ("g2 s1", "f:s1 f:p ?a ; f:q ?b"),
    ] {
        out.push((name, g2(), query(body)));
    }
    out
}

/// A random graph over `nodes` IRIs and `predicates` predicates with at
/// most `triples` distinct triples.
pub fn random_graph(rng: &mut impl Rng, nodes: usize, predicates: usize, triples: usize) -> Graph {
    let mut text = String::new();
    for _ in 0..triples {
        let s = rng.gen_range(0..nodes);
        let p = rng.gen_range(0..predicates);
        let o = rng.gen_range(0..nodes);
        writeln!(text, "<{NS}n{s}> <{NS}p{p}> <{NS}n{o}> .").unwrap();
    }
    load_ntriples_str(&text).unwrap()
}

/// A random tree-shaped query with `patterns` patterns and up to
/// `max_bound` nodes bound to values taken from `graph`.
pub fn random_query(
    rng: &mut impl Rng,
    graph: &Graph,
    predicates: usize,
    patterns: usize,
    max_bound: usize,
) -> BasicGraphPattern {
    let node_count = patterns + 1;
    let mut edges = Vec::with_capacity(patterns);
    for child in 1..node_count {
        let parent = rng.gen_range(0..child);
        let p = format!("{NS}p{}", rng.gen_range(0..predicates));
        if rng.gen_bool(0.5) {
            edges.push((parent, p, child));
        } else {
            edges.push((child, p, parent));
        }
    }
    edges.shuffle(rng);

    let mut order: Vec<usize> = (0..node_count).collect();
    order.shuffle(rng);
    let bound_count = rng.gen_range(0..=max_bound.min(node_count));
    let values: Vec<String> = graph
        .triples()
        .iter()
        .flat_map(|&(s, _, o)| [s, o])
        .map(|t| graph.term(t).as_iri().unwrap().to_owned())
        .collect();
    let mut nodes: Vec<NodeRef> = (0..node_count).map(|i| NodeRef::var(format!("v{i}"))).collect();
    for &i in &order[..bound_count] {
        // mostly values from the graph, occasionally a missing one
        nodes[i] = if rng.gen_bool(0.9) && !values.is_empty() {
            NodeRef::iri(values.choose(rng).unwrap().clone())
        } else {
            NodeRef::iri(format!("{NS}missing"))
        };
    }
    let triples = edges
        .into_iter()
        .map(|(s, p, o)| (nodes[s].clone(), p, nodes[o].clone()))
        .collect();
    BasicGraphPattern::new(triples).expect("tree-shaped query is valid")
}

/// The same query with every node turned into a variable named `n<id>`.
pub fn skeleton(bgp: &BasicGraphPattern) -> BasicGraphPattern {
    let var = |n: rptcard_core::query::NodeId| NodeRef::var(format!("n{}", n.0));
    BasicGraphPattern::new(
        bgp.patterns()
            .iter()
            .map(|p| (var(p.subject), p.predicate.clone(), var(p.object)))
            .collect(),
    )
    .unwrap()
}

/// Oracle count of skeleton embeddings that put `value` at `position`.
pub fn embeddings_at(
    graph: &Graph,
    bgp: &BasicGraphPattern,
    position: rptcard_core::query::NodeId,
    value: rptcard_core::TermId,
) -> usize {
    let name = format!("n{}", position.0);
    rptcard_core::oracle::solutions(graph, &skeleton(bgp))
        .into_iter()
        .filter(|b| b[&name] == value)
        .count()
}
