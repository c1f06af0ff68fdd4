//! Brute-force ground truth for tests and evaluation runs.
//!
//! Nothing here shares code with the estimator: query results are counted by
//! backtracking over the triples, and matrix distributions by listing every
//! 0/1 matrix with the requested column sums.

use std::collections::HashMap;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::overlap::CardinalityDistribution;
use crate::query::{BasicGraphPattern, NodeRef};
use crate::store::{DirectedPredicate, Graph, TermId};

pub const MAX_ENUMERATION_ROWS: u64 = 8;
pub const MAX_ENUMERATION_COLUMNS: usize = 4;

/// Variable name to value.
pub type BindingSet = HashMap<String, TermId>;

/// Patterns in an order where every pattern after the first shares a node
/// with an earlier one, starting from a pattern touching a bound node.
fn join_order(bgp: &BasicGraphPattern) -> Vec<usize> {
    let patterns = bgp.patterns();
    let start = bgp
        .bound_nodes()
        .first()
        .map_or(0, |&b| bgp.incident(b)[0]);
    let mut covered = vec![false; bgp.node_count()];
    let mut used = vec![false; patterns.len()];
    let mut order = Vec::with_capacity(patterns.len());
    let take = |pi: usize, covered: &mut Vec<bool>, used: &mut Vec<bool>, order: &mut Vec<usize>| {
        used[pi] = true;
        covered[patterns[pi].subject.0] = true;
        covered[patterns[pi].object.0] = true;
        order.push(pi);
    };
    take(start, &mut covered, &mut used, &mut order);
    while order.len() < patterns.len() {
        let next = (0..patterns.len())
            .find(|&pi| {
                !used[pi] && (covered[patterns[pi].subject.0] || covered[patterns[pi].object.0])
            })
            .expect("skeleton is connected");
        take(next, &mut covered, &mut used, &mut order);
    }
    order
}

struct Search<'a> {
    graph: &'a Graph,
    steps: Vec<(usize, usize, Option<TermId>)>,
    assignment: Vec<Option<TermId>>,
    found: u128,
    collect: Option<Vec<Vec<Option<TermId>>>>,
}

impl Search<'_> {
    fn run(&mut self, k: usize) {
        if k == self.steps.len() {
            self.found += 1;
            if let Some(out) = &mut self.collect {
                out.push(self.assignment.clone());
            }
            return;
        }
        let (s, o, p) = self.steps[k];
        let Some(p) = p else { return };
        match (self.assignment[s], self.assignment[o]) {
            (Some(sv), Some(ov)) => {
                if self.graph.contains(sv, p, ov) {
                    self.run(k + 1);
                }
            }
            (Some(sv), None) => {
                for &ov in self.graph.lookup(sv, DirectedPredicate::forward(p)) {
                    self.assignment[o] = Some(ov);
                    self.run(k + 1);
                }
                self.assignment[o] = None;
            }
            (None, Some(ov)) => {
                for &sv in self.graph.lookup(ov, DirectedPredicate::inverse(p)) {
                    self.assignment[s] = Some(sv);
                    self.run(k + 1);
                }
                self.assignment[s] = None;
            }
            (None, None) => {
                for &(sv, ov) in self.graph.pairs_of(p) {
                    self.assignment[s] = Some(sv);
                    self.assignment[o] = Some(ov);
                    self.run(k + 1);
                }
                self.assignment[s] = None;
                self.assignment[o] = None;
            }
        }
    }
}

fn search<'a>(graph: &'a Graph, bgp: &BasicGraphPattern, collect: bool) -> Option<Search<'a>> {
    let mut assignment = vec![None; bgp.node_count()];
    for id in bgp.node_ids() {
        if let NodeRef::Bound(term) = bgp.node(id) {
            assignment[id.0] = Some(graph.id_of(term)?);
        }
    }
    let steps = join_order(bgp)
        .into_iter()
        .map(|pi| {
            let pat = &bgp.patterns()[pi];
            (pat.subject.0, pat.object.0, graph.iri_id(&pat.predicate))
        })
        .collect();
    let mut s = Search {
        graph,
        steps,
        assignment,
        found: 0,
        collect: collect.then(Vec::new),
    };
    s.run(0);
    Some(s)
}

/// Number of solutions of `bgp` over `graph`: distinct assignments to all of
/// its variables, including those introduced by path expansion.
pub fn execute_bgp(graph: &Graph, bgp: &BasicGraphPattern) -> BigUint {
    search(graph, bgp, false).map_or(BigUint::ZERO, |s| BigUint::from(s.found))
}

/// Every solution as a variable binding.
pub fn solutions(graph: &Graph, bgp: &BasicGraphPattern) -> Vec<BindingSet> {
    let Some(s) = search(graph, bgp, true) else {
        return Vec::new();
    };
    s.collect
        .unwrap_or_default()
        .into_iter()
        .map(|row| {
            bgp.variables()
                .map(|(id, name)| (name.to_owned(), row[id.0].expect("total assignment")))
                .collect()
        })
        .collect()
}

/// List every `m`-row 0/1 matrix with the given column sums and tabulate
/// the number of all-1 rows.
pub fn enumerate_distribution(m: u64, columns: &[u64]) -> Result<CardinalityDistribution> {
    if m > MAX_ENUMERATION_ROWS || columns.len() > MAX_ENUMERATION_COLUMNS {
        return Err(Error::EnumerationBounds(format!(
            "at most {MAX_ENUMERATION_ROWS} rows and {MAX_ENUMERATION_COLUMNS} columns"
        )));
    }
    if let Some(&c) = columns.iter().find(|&&c| c > m) {
        return Err(Error::Domain {
            column: c.to_string(),
            rows: m.to_string(),
        });
    }
    let full: u32 = (1u32 << m) - 1;
    let masks = |c: u64| -> Vec<u32> { (0..=full).filter(|x| u64::from(x.count_ones()) == c).collect() };
    let per_column: Vec<Vec<u32>> = columns.iter().map(|&c| masks(c)).collect();

    let mut histogram = vec![0u64; m as usize + 1];
    let mut total = 0u64;
    // odometer over one mask per column; the AND of the chosen masks marks
    // the rows that are 1 everywhere
    let mut pick = vec![0usize; per_column.len()];
    loop {
        let all_ones = per_column
            .iter()
            .zip(&pick)
            .fold(full, |acc, (ms, &i)| acc & ms[i]);
        histogram[all_ones.count_ones() as usize] += 1;
        total += 1;

        let mut col = 0;
        loop {
            if col == pick.len() {
                return Ok(CardinalityDistribution::from_counts(
                    histogram.into_iter().map(BigUint::from).collect(),
                    BigUint::from(total),
                ));
            }
            pick[col] += 1;
            if pick[col] < per_column[col].len() {
                break;
            }
            pick[col] = 0;
            col += 1;
        }
    }
}
