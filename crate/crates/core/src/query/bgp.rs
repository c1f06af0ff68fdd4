//! Basic graph patterns restricted to tree-shaped skeletons.

use std::fmt;

use crate::error::{Error, Result};
use crate::query::tree::{EdgeLabel, PredicateTree};
use crate::store::Term;

/// Upper bound on the number of triple patterns in one query.
pub const MAX_PATTERNS: usize = 10_000;

/// A query node as written: a variable or a constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Variable(String),
    Bound(Term),
}

impl NodeRef {
    pub fn var(name: impl Into<String>) -> Self {
        NodeRef::Variable(name.into())
    }

    pub fn iri(iri: impl Into<String>) -> Self {
        NodeRef::Bound(Term::Iri(iri.into()))
    }

    pub fn is_bound(&self) -> bool {
        matches!(self, NodeRef::Bound(_))
    }

    pub fn term(&self) -> Option<&Term> {
        match self {
            NodeRef::Bound(t) => Some(t),
            NodeRef::Variable(_) => None,
        }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Variable(name) => write!(f, "?{name}"),
            NodeRef::Bound(term) => write!(f, "{term}"),
        }
    }
}

/// Index of a node position within one [`BasicGraphPattern`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: NodeId,
    pub predicate: String,
    pub object: NodeId,
}

/// A connected, acyclic conjunction of triple patterns with bound predicates.
#[derive(Debug, Clone)]
pub struct BasicGraphPattern {
    nodes: Vec<NodeRef>,
    patterns: Vec<TriplePattern>,
    incident: Vec<Vec<usize>>,
    bound: Vec<NodeId>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// False if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[rb] = ra;
        true
    }
}

impl BasicGraphPattern {
    /// Build and validate a pattern from `(subject, predicate IRI, object)`
    /// triples.
    ///
    /// Variables with the same name are one node. Each occurrence of a
    /// constant starts as its own node; occurrences of the same constant are
    /// then joined, in document order, whenever that connects two otherwise
    /// separate parts of the skeleton. The result must be a tree.
    pub fn new(triples: Vec<(NodeRef, String, NodeRef)>) -> Result<Self> {
        if triples.is_empty() {
            return Err(Error::Shape("query has no triple patterns".into()));
        }
        if triples.len() > MAX_PATTERNS {
            return Err(Error::Shape(format!(
                "query has {} patterns, the limit is {MAX_PATTERNS}",
                triples.len()
            )));
        }

        // one slot per variable name and per constant occurrence
        let mut slots: Vec<NodeRef> = Vec::new();
        let mut var_slot = std::collections::HashMap::new();
        let mut slot_of = |node: NodeRef, slots: &mut Vec<NodeRef>| -> usize {
            match &node {
                NodeRef::Variable(name) => *var_slot.entry(name.clone()).or_insert_with(|| {
                    slots.push(node.clone());
                    slots.len() - 1
                }),
                NodeRef::Bound(_) => {
                    slots.push(node);
                    slots.len() - 1
                }
            }
        };
        let mut raw = Vec::with_capacity(triples.len());
        for (s, p, o) in triples {
            let s = slot_of(s, &mut slots);
            let o = slot_of(o, &mut slots);
            raw.push((s, p, o));
        }

        let mut uf = UnionFind::new(slots.len());
        for (s, p, o) in &raw {
            if !uf.union(*s, *o) {
                return Err(Error::Shape(format!(
                    "pattern {} <{p}> {} closes a cycle",
                    slots[*s], slots[*o]
                )));
            }
        }

        // join repeated constants across components
        let mut merged_into: Vec<usize> = (0..slots.len()).collect();
        for i in 0..slots.len() {
            if !slots[i].is_bound() {
                continue;
            }
            for j in 0..i {
                if merged_into[j] == j && slots[j] == slots[i] && uf.union(j, i) {
                    merged_into[i] = j;
                    break;
                }
            }
        }

        let root = uf.find(0);
        if (0..slots.len()).any(|i| uf.find(i) != root) {
            return Err(Error::Shape("query skeleton is not connected".into()));
        }

        let mut dense = vec![usize::MAX; slots.len()];
        let mut nodes = Vec::new();
        for i in 0..slots.len() {
            if merged_into[i] == i {
                dense[i] = nodes.len();
                nodes.push(slots[i].clone());
            }
        }
        let resolve = |i: usize| NodeId(dense[merged_into[i]]);

        let patterns: Vec<TriplePattern> = raw
            .into_iter()
            .map(|(s, predicate, o)| TriplePattern {
                subject: resolve(s),
                predicate,
                object: resolve(o),
            })
            .collect();
        let mut incident = vec![Vec::new(); nodes.len()];
        for (i, pat) in patterns.iter().enumerate() {
            incident[pat.subject.0].push(i);
            incident[pat.object.0].push(i);
        }
        let bound = (0..nodes.len())
            .filter(|&i| nodes[i].is_bound())
            .map(NodeId)
            .collect();

        Ok(BasicGraphPattern {
            nodes,
            patterns,
            incident,
            bound,
        })
    }

    pub fn patterns(&self) -> &[TriplePattern] {
        &self.patterns
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn node(&self, id: NodeId) -> &NodeRef {
        &self.nodes[id.0]
    }

    /// Bound node positions in document order.
    pub fn bound_nodes(&self) -> &[NodeId] {
        &self.bound
    }

    pub fn variables(&self) -> impl Iterator<Item = (NodeId, &str)> {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            NodeRef::Variable(name) => Some((NodeId(i), name.as_str())),
            NodeRef::Bound(_) => None,
        })
    }

    /// Indexes of the patterns touching `node`.
    pub fn incident(&self, node: NodeId) -> &[usize] {
        &self.incident[node.0]
    }

    /// First node id holding `node`.
    pub fn find(&self, node: &NodeRef) -> Option<NodeId> {
        self.nodes.iter().position(|n| n == node).map(NodeId)
    }

    /// Label of a node, unique within the query.
    pub fn label(&self, id: NodeId) -> String {
        let node = &self.nodes[id.0];
        let repeats = self.nodes.iter().filter(|n| *n == node).count();
        if repeats > 1 {
            format!("{node}#{}", id.0)
        } else {
            node.to_string()
        }
    }

    /// Walk the skeleton depth-first from `root` and build its predicate
    /// tree. An edge is forward when the node nearer the root is the
    /// pattern's subject.
    pub fn predicate_tree(&self, root: NodeId) -> PredicateTree {
        // preorder (node, via pattern, parent slot), then build bottom-up
        let mut order: Vec<(NodeId, Option<usize>, usize)> = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(root, None, usize::MAX)];
        while let Some((node, via, parent)) = stack.pop() {
            let slot = order.len();
            order.push((node, via, parent));
            for &pi in &self.incident[node.0] {
                if Some(pi) == via {
                    continue;
                }
                let pat = &self.patterns[pi];
                let next = if pat.subject == node { pat.object } else { pat.subject };
                stack.push((next, Some(pi), slot));
            }
        }

        let mut children: Vec<Vec<(EdgeLabel, PredicateTree)>> = vec![Vec::new(); order.len()];
        let mut built: Option<PredicateTree> = None;
        for slot in (0..order.len()).rev() {
            let (_, via, parent) = order[slot];
            let tree = PredicateTree::from_edges(std::mem::take(&mut children[slot]));
            match via {
                Some(pi) => {
                    let pat = &self.patterns[pi];
                    let (parent_node, _, _) = order[parent];
                    let label = if pat.subject == parent_node {
                        EdgeLabel::forward(&pat.predicate)
                    } else {
                        EdgeLabel::inverse(&pat.predicate)
                    };
                    children[parent].push((label, tree));
                }
                None => built = Some(tree),
            }
        }
        built.expect("root is always visited")
    }
}
