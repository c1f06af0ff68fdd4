//! Query model: parsing, tree-shaped pattern validation, predicate trees
//! and rooted predicate trees.

mod bgp;
mod parser;
mod tree;

pub use bgp::{BasicGraphPattern, NodeId, NodeRef, TriplePattern, MAX_PATTERNS};
pub use parser::parse_query;
pub use tree::{EdgeLabel, PredicateTree};

use crate::store::{Graph, Term, TermId};

/// A predicate tree whose root is bound to one value: `(r, T)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rpt {
    /// `None` when the value does not occur in the graph.
    pub root: Option<TermId>,
    pub value: Term,
    pub tree: PredicateTree,
    pub position: NodeId,
}

/// Build the predicate tree of `bgp` rooted at `root`.
pub fn build_predicate_tree(bgp: &BasicGraphPattern, root: NodeId) -> PredicateTree {
    bgp.predicate_tree(root)
}

/// The RPT for the bound node at `position`.
///
/// # Panics
/// If `position` is not a bound node of `bgp`.
pub fn rpt_of(graph: &Graph, bgp: &BasicGraphPattern, position: NodeId) -> Rpt {
    let value = bgp
        .node(position)
        .term()
        .expect("rpt_of needs a bound node")
        .clone();
    Rpt {
        root: graph.id_of(&value),
        value,
        tree: bgp.predicate_tree(position),
        position,
    }
}

/// The RPT rooted at an arbitrary value placed at `position`.
pub fn rpt_at(bgp: &BasicGraphPattern, position: NodeId, graph: &Graph, root: TermId) -> Rpt {
    Rpt {
        root: Some(root),
        value: graph.term(root).clone(),
        tree: bgp.predicate_tree(position),
        position,
    }
}
