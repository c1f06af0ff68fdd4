//! Cardinality estimation for acyclic basic graph patterns over RDF graphs.
//!
//! A query is split into rooted predicate trees, one per bound node. Each
//! tree's cardinality is counted exactly against the graph, and the counts
//! are combined through a hypergeometric overlap model into a distribution
//! over the query's result size.

pub mod cache;
pub mod cardinality;
pub mod error;
pub mod estimate;
pub mod oracle;
pub mod overlap;
pub mod query;
pub mod store;

pub use cache::{CacheStats, CardinalityCache, DEFAULT_CACHE_SIZE, DEFAULT_EVICTION_RATE};
pub use cardinality::{rpt_cardinality, total_embeddings};
pub use error::{Error, Result};
pub use estimate::{estimate, evaluate, Estimate, EvaluationReport, EvaluationRow};
pub use oracle::{enumerate_distribution, execute_bgp};
pub use overlap::{n_column, two_column, CardinalityDistribution, ColumnConstraints};
pub use query::{parse_query, BasicGraphPattern, NodeRef, PredicateTree, Rpt};
pub use store::{load_ntriples, load_ntriples_str, Graph, Term, TermId};
