//! RPT cardinalities and total embedding counts.
//!
//! `|r, T|` is 1 for the empty tree; otherwise it is the product, over the
//! edges `e` leaving the root of `T`, of the sum over the graph neighbors `v`
//! of `r` along `e` of `|v, T ~ e|`. The evaluation below walks that
//! recursion with an explicit stack and consults the cache for every
//! non-trivial sub-RPT before descending into it.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::cache::CardinalityCache;
use crate::query::{BasicGraphPattern, NodeId, PredicateTree, Rpt};
use crate::store::{DirectedPredicate, Graph, TermId};

struct Frame<'g> {
    root: TermId,
    tree: PredicateTree,
    edge: usize,
    neighbors: Option<&'g [TermId]>,
    next: usize,
    sum: BigUint,
    product: BigUint,
}

impl<'g> Frame<'g> {
    fn new(root: TermId, tree: PredicateTree) -> Self {
        Frame {
            root,
            tree,
            edge: 0,
            neighbors: None,
            next: 0,
            sum: BigUint::zero(),
            product: BigUint::one(),
        }
    }
}

/// Evaluator bound to one graph and cache. Edge labels are resolved to graph
/// ids once per tree node.
pub struct Counter<'g, 'c> {
    graph: &'g Graph,
    cache: &'c CardinalityCache,
    resolved: HashMap<u64, Vec<Option<DirectedPredicate>>>,
}

impl<'g, 'c> Counter<'g, 'c> {
    pub fn new(graph: &'g Graph, cache: &'c CardinalityCache) -> Self {
        Counter {
            graph,
            cache,
            resolved: HashMap::new(),
        }
    }

    fn edge(&mut self, tree: &PredicateTree, index: usize) -> Option<DirectedPredicate> {
        let graph = self.graph;
        self.resolved.entry(tree.id()).or_insert_with(|| {
            tree.edges()
                .iter()
                .map(|(label, _)| {
                    graph.iri_id(&label.predicate).map(|predicate| DirectedPredicate {
                        predicate,
                        direction: label.direction,
                    })
                })
                .collect()
        })[index]
    }

    /// `|root, tree|`.
    pub fn count(&mut self, root: TermId, tree: &PredicateTree) -> BigUint {
        if tree.is_leaf() {
            return BigUint::one();
        }
        if let Some(hit) = self.cache.get(root, tree) {
            return hit;
        }

        let mut stack = vec![Frame::new(root, tree.clone())];
        loop {
            let top = stack.len() - 1;
            let frame = &mut stack[top];
            let edges = frame.tree.edges().len();

            if frame.edge == edges || frame.product.is_zero() {
                let finished = stack.pop().expect("non-empty stack");
                self.cache
                    .put(finished.root, &finished.tree, finished.product.clone());
                match stack.last_mut() {
                    Some(parent) => {
                        parent.sum += finished.product;
                        parent.next += 1;
                        continue;
                    }
                    None => return finished.product,
                }
            }

            if frame.neighbors.is_none() {
                let (root, tree, edge) = (frame.root, frame.tree.clone(), frame.edge);
                let neighbors = match self.edge(&tree, edge) {
                    Some(e) => self.graph.neighbors(root, e),
                    None => &[],
                };
                let frame = &mut stack[top];
                frame.neighbors = Some(neighbors);
                frame.next = 0;
                frame.sum = BigUint::zero();
            }

            let frame = &mut stack[top];
            let neighbors = frame.neighbors.expect("loaded above");
            let child = frame.tree.child(frame.edge).expect("edge in range").clone();

            if child.is_leaf() {
                // every neighbor contributes |v, ∅| = 1
                frame.sum += BigUint::from(neighbors.len());
                frame.next = neighbors.len();
            }

            if frame.next < neighbors.len() {
                let v = neighbors[frame.next];
                match self.cache.get(v, &child) {
                    Some(hit) => {
                        frame.sum += hit;
                        frame.next += 1;
                    }
                    None => stack.push(Frame::new(v, child)),
                }
            } else {
                let sum = std::mem::take(&mut frame.sum);
                frame.product *= sum;
                frame.edge += 1;
                frame.neighbors = None;
            }
        }
    }
}

/// `|r, T|` for one RPT. A root value missing from the graph counts 0.
pub fn rpt_cardinality(graph: &Graph, rpt: &Rpt, cache: &CardinalityCache) -> BigUint {
    match rpt.root {
        Some(root) => Counter::new(graph, cache).count(root, &rpt.tree),
        None => BigUint::zero(),
    }
}

/// Values that can occupy `position`: the intersection, over the patterns
/// touching it, of the subjects or objects of each pattern's predicate.
/// Sorted ascending.
pub fn candidates(graph: &Graph, bgp: &BasicGraphPattern, position: NodeId) -> Vec<TermId> {
    let mut sets: Vec<&[TermId]> = Vec::new();
    for &pi in bgp.incident(position) {
        let pattern = &bgp.patterns()[pi];
        let Some(p) = graph.iri_id(&pattern.predicate) else {
            return Vec::new();
        };
        sets.push(if pattern.subject == position {
            graph.subjects_of(p)
        } else {
            graph.objects_of(p)
        });
    }
    sets.sort_by_key(|s| s.len());
    let Some((smallest, rest)) = sets.split_first() else {
        return Vec::new();
    };
    smallest
        .iter()
        .copied()
        .filter(|v| rest.iter().all(|s| s.binary_search(v).is_ok()))
        .collect()
}

/// `m`: the number of embeddings of the query skeleton, summed over every
/// value that can sit at `position`. Bound values in the query are ignored.
pub fn total_embeddings(
    graph: &Graph,
    bgp: &BasicGraphPattern,
    position: NodeId,
    cache: &CardinalityCache,
) -> BigUint {
    let tree = bgp.predicate_tree(position);
    let mut counter = Counter::new(graph, cache);
    candidates(graph, bgp, position)
        .into_iter()
        .map(|v| counter.count(v, &tree))
        .sum()
}

/// The position with the fewest candidate values, lowest id on ties.
pub fn cheapest_position(graph: &Graph, bgp: &BasicGraphPattern) -> NodeId {
    bgp.node_ids()
        .min_by_key(|&n| (candidates(graph, bgp, n).len(), n))
        .expect("a pattern has at least two nodes")
}
