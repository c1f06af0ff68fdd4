//! Interned predicate trees.
//!
//! A [`PredicateTree`] is a rooted tree of directed predicate edges with no
//! node values attached. Trees are hash-consed in a process-wide table: two
//! structurally equal trees are always the same allocation, so equality and
//! hashing are by identity and cost O(1).

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::store::Direction;

/// A predicate IRI together with the direction it is walked in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeLabel {
    pub predicate: Arc<str>,
    pub direction: Direction,
}

impl EdgeLabel {
    pub fn forward(predicate: &str) -> Self {
        EdgeLabel {
            predicate: predicate.into(),
            direction: Direction::Forward,
        }
    }

    pub fn inverse(predicate: &str) -> Self {
        EdgeLabel {
            predicate: predicate.into(),
            direction: Direction::Inverse,
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.direction {
            Direction::Forward => write!(f, "<{}>", self.predicate),
            Direction::Inverse => write!(f, "^<{}>", self.predicate),
        }
    }
}

#[derive(Debug)]
struct TreeNode {
    id: u64,
    edges: Vec<(EdgeLabel, PredicateTree)>,
    hash: u64,
    size: usize,
    depth: usize,
}

/// Handle to an interned tree. Cloning is a reference-count bump.
#[derive(Clone)]
pub struct PredicateTree(Arc<TreeNode>);

type InternKey = Vec<(EdgeLabel, u64)>;

struct Interner {
    table: HashMap<InternKey, PredicateTree>,
    next_id: u64,
}

fn interner() -> &'static Mutex<Interner> {
    static TABLE: OnceLock<Mutex<Interner>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let leaf = PredicateTree(Arc::new(TreeNode {
            id: 0,
            edges: Vec::new(),
            hash: 1,
            size: 0,
            depth: 0,
        }));
        let mut table = HashMap::new();
        table.insert(Vec::new(), leaf);
        Mutex::new(Interner { table, next_id: 1 })
    })
}

const FORWARD_WEIGHT: u64 = 31;
const INVERSE_WEIGHT: u64 = 37;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// FNV-1a over the IRI bytes, stable across processes.
fn predicate_hash(iri: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in iri.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn mix(edge: u64, child: u64) -> u64 {
    splitmix(edge ^ splitmix(child))
}

impl PredicateTree {
    /// The empty tree, a single unlabeled node.
    pub fn leaf() -> Self {
        Self::from_edges(Vec::new())
    }

    /// Intern a tree whose root has the given outgoing edges. Edge order is
    /// irrelevant; duplicate labels are kept as separate edges.
    pub fn from_edges(mut edges: Vec<(EdgeLabel, PredicateTree)>) -> Self {
        edges.sort_by(|(la, ca), (lb, cb)| la.cmp(lb).then(ca.id().cmp(&cb.id())));
        let key: InternKey = edges.iter().map(|(l, c)| (l.clone(), c.id())).collect();

        let mut guard = interner().lock().unwrap_or_else(|e| e.into_inner());
        if let Some(tree) = guard.table.get(&key) {
            return tree.clone();
        }
        let hash = edges.iter().fold(0u64, |acc, (label, child)| {
            let weight = match label.direction {
                Direction::Forward => FORWARD_WEIGHT,
                Direction::Inverse => INVERSE_WEIGHT,
            };
            acc.wrapping_add(
                weight.wrapping_mul(mix(predicate_hash(&label.predicate), child.tree_hash())),
            )
        });
        let size = edges.iter().map(|(_, c)| c.size() + 1).sum();
        let depth = edges.iter().map(|(_, c)| c.depth() + 1).max().unwrap_or(0);
        let id = guard.next_id;
        guard.next_id += 1;
        let tree = PredicateTree(Arc::new(TreeNode {
            id,
            edges,
            hash,
            size,
            depth,
        }));
        guard.table.insert(key, tree.clone());
        tree
    }

    /// A right-deep chain of edges, first label at the root.
    pub fn chain(labels: &[EdgeLabel]) -> Self {
        labels.iter().rev().fold(Self::leaf(), |child, label| {
            Self::from_edges(vec![(label.clone(), child)])
        })
    }

    /// Process-unique id; equal ids iff structurally equal trees.
    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn is_leaf(&self) -> bool {
        self.0.edges.is_empty()
    }

    /// `E(r, T)`: the edges leaving the root, in canonical order.
    pub fn edges(&self) -> &[(EdgeLabel, PredicateTree)] {
        &self.0.edges
    }

    /// Child reached through the `index`-th root edge.
    pub fn child(&self, index: usize) -> Option<&PredicateTree> {
        self.0.edges.get(index).map(|(_, c)| c)
    }

    /// `T ~ e`: the subtree below the first root edge labeled `label`.
    pub fn subtree(&self, label: &EdgeLabel) -> Result<&PredicateTree> {
        self.0
            .edges
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| c)
            .ok_or_else(|| Error::EdgeLookup(label.to_string()))
    }

    /// Order-independent structural hash; the empty tree hashes to 1.
    pub fn tree_hash(&self) -> u64 {
        self.0.hash
    }

    /// Number of edges in the whole tree.
    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn depth(&self) -> usize {
        self.0.depth
    }

    /// Every edge label in the tree, sorted, with multiplicity.
    pub fn labels(&self) -> Vec<EdgeLabel> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            for (label, child) in t.edges() {
                out.push(label.clone());
                stack.push(child);
            }
        }
        out.sort();
        out
    }
}

impl PartialEq for PredicateTree {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}

impl Eq for PredicateTree {}

impl Hash for PredicateTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

impl fmt::Debug for PredicateTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for PredicateTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_leaf() {
            return f.write_str("∅");
        }
        f.write_str("{")?;
        for (i, (label, child)) in self.edges().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{label}")?;
            if !child.is_leaf() {
                write!(f, " {child}")?;
            }
        }
        f.write_str("}")
    }
}
