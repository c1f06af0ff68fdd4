//! Bounded LFU cache of RPT cardinalities.
//!
//! [`Lfu`] is the constant-time LFU scheme: entries sit in per-frequency
//! doubly-linked lists, and the frequency lists themselves form a linked list
//! ordered by frequency. A hit moves the entry to the list of the next
//! frequency, eviction pops from the lowest-frequency list. Within one
//! frequency the entry that arrived there first goes first.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::query::PredicateTree;
use crate::store::TermId;

const NIL: usize = usize::MAX;

struct Node<K, V> {
    key: K,
    value: V,
    bucket: usize,
    prev: usize,
    next: usize,
}

struct Bucket {
    freq: u64,
    head: usize,
    tail: usize,
    prev: usize,
    next: usize,
}

/// Constant-time LFU map with batch eviction.
pub struct Lfu<K, V> {
    capacity: usize,
    batch: usize,
    index: HashMap<K, usize>,
    nodes: Vec<Option<Node<K, V>>>,
    free_nodes: Vec<usize>,
    buckets: Vec<Bucket>,
    free_buckets: Vec<usize>,
    first: usize,
}

impl<K: Hash + Eq + Clone, V: Clone> Lfu<K, V> {
    /// `eviction_rate` is the fraction of `capacity` dropped when a put finds
    /// the map full; at least one entry is always dropped.
    pub fn new(capacity: usize, eviction_rate: f64) -> Result<Self> {
        if capacity < 1 {
            return Err(Error::CacheConfig("capacity must be at least 1".into()));
        }
        if !(eviction_rate > 0.0 && eviction_rate <= 1.0) {
            return Err(Error::CacheConfig(format!(
                "eviction rate {eviction_rate} is outside (0, 1]"
            )));
        }
        let batch = ((eviction_rate * capacity as f64).ceil() as usize).clamp(1, capacity);
        Ok(Lfu {
            capacity,
            batch,
            index: HashMap::new(),
            nodes: Vec::new(),
            free_nodes: Vec::new(),
            buckets: Vec::new(),
            free_buckets: Vec::new(),
            first: NIL,
        })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Entries removed per eviction round.
    pub fn eviction_batch(&self) -> usize {
        self.batch
    }

    pub fn contains(&self, key: &K) -> bool {
        self.index.contains_key(key)
    }

    pub fn frequency(&self, key: &K) -> Option<u64> {
        let &n = self.index.get(key)?;
        Some(self.buckets[self.node(n).bucket].freq)
    }

    fn node(&self, n: usize) -> &Node<K, V> {
        self.nodes[n].as_ref().expect("live node")
    }

    fn node_mut(&mut self, n: usize) -> &mut Node<K, V> {
        self.nodes[n].as_mut().expect("live node")
    }

    fn new_bucket(&mut self, freq: u64, prev: usize, next: usize) -> usize {
        let bucket = Bucket {
            freq,
            head: NIL,
            tail: NIL,
            prev,
            next,
        };
        let b = match self.free_buckets.pop() {
            Some(b) => {
                self.buckets[b] = bucket;
                b
            }
            None => {
                self.buckets.push(bucket);
                self.buckets.len() - 1
            }
        };
        match prev {
            NIL => self.first = b,
            p => self.buckets[p].next = b,
        }
        if next != NIL {
            self.buckets[next].prev = b;
        }
        b
    }

    fn drop_bucket_if_empty(&mut self, b: usize) {
        if self.buckets[b].head != NIL {
            return;
        }
        let (prev, next) = (self.buckets[b].prev, self.buckets[b].next);
        match prev {
            NIL => self.first = next,
            p => self.buckets[p].next = next,
        }
        if next != NIL {
            self.buckets[next].prev = prev;
        }
        self.free_buckets.push(b);
    }

    fn unlink(&mut self, n: usize) {
        let (b, prev, next) = {
            let node = self.node(n);
            (node.bucket, node.prev, node.next)
        };
        match prev {
            NIL => self.buckets[b].head = next,
            p => self.node_mut(p).next = next,
        }
        match next {
            NIL => self.buckets[b].tail = prev,
            x => self.node_mut(x).prev = prev,
        }
    }

    fn push_back(&mut self, n: usize, b: usize) {
        let tail = self.buckets[b].tail;
        {
            let node = self.node_mut(n);
            node.bucket = b;
            node.prev = tail;
            node.next = NIL;
        }
        match tail {
            NIL => self.buckets[b].head = n,
            t => self.node_mut(t).next = n,
        }
        self.buckets[b].tail = n;
    }

    /// Look up `key` and bump its frequency.
    pub fn get(&mut self, key: &K) -> Option<V> {
        let &n = self.index.get(key)?;
        let b = self.node(n).bucket;
        let freq = self.buckets[b].freq;
        let next = self.buckets[b].next;
        let target = if next != NIL && self.buckets[next].freq == freq + 1 {
            next
        } else {
            self.new_bucket(freq + 1, b, next)
        };
        self.unlink(n);
        self.push_back(n, target);
        self.drop_bucket_if_empty(b);
        Some(self.node(n).value.clone())
    }

    /// Insert or overwrite. Overwriting keeps the entry's frequency.
    pub fn put(&mut self, key: K, value: V) {
        if let Some(&n) = self.index.get(&key) {
            self.node_mut(n).value = value;
            return;
        }
        if self.index.len() >= self.capacity {
            self.evict(self.batch);
        }
        let n = match self.free_nodes.pop() {
            Some(n) => n,
            None => {
                self.nodes.push(None);
                self.nodes.len() - 1
            }
        };
        self.nodes[n] = Some(Node {
            key: key.clone(),
            value,
            bucket: NIL,
            prev: NIL,
            next: NIL,
        });
        let b = if self.first != NIL && self.buckets[self.first].freq == 0 {
            self.first
        } else {
            self.new_bucket(0, NIL, self.first)
        };
        self.push_back(n, b);
        self.index.insert(key, n);
    }

    /// Remove up to `count` least-frequently-used entries, returning their
    /// keys in eviction order.
    pub fn evict(&mut self, count: usize) -> Vec<K> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count && self.first != NIL {
            let b = self.first;
            let n = self.buckets[b].head;
            self.unlink(n);
            self.drop_bucket_if_empty(b);
            let node = self.nodes[n].take().expect("live node");
            self.free_nodes.push(n);
            self.index.remove(&node.key);
            out.push(node.key);
        }
        out
    }
}

/// Hit and miss counters of a [`CardinalityCache`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

impl CacheStats {
    pub fn lookups(&self) -> u64 {
        self.hits + self.misses
    }

    /// Counter growth between `earlier` and `self`.
    pub fn since(&self, earlier: CacheStats) -> CacheStats {
        CacheStats {
            hits: self.hits - earlier.hits,
            misses: self.misses - earlier.misses,
        }
    }
}

pub const DEFAULT_CACHE_SIZE: usize = 100_000;
pub const DEFAULT_EVICTION_RATE: f64 = 0.1;

/// Shared LFU cache from `(root, tree)` to `|root, tree|`.
///
/// Every operation takes the internal lock once, so a single get or put is
/// atomic; counters are updated under the same lock. Roots are graph-local
/// term ids: use one cache per graph.
pub struct CardinalityCache {
    inner: Mutex<Lfu<(TermId, u64), BigUint>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl CardinalityCache {
    pub fn new(capacity: usize, eviction_rate: f64) -> Result<Self> {
        Ok(CardinalityCache {
            inner: Mutex::new(Lfu::new(capacity, eviction_rate)?),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    /// A cache that never evicts in practice.
    pub fn unbounded() -> Self {
        Self::new(usize::MAX, DEFAULT_EVICTION_RATE).expect("valid configuration")
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Lfu<(TermId, u64), BigUint>> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn get(&self, root: TermId, tree: &PredicateTree) -> Option<BigUint> {
        let mut lfu = self.lock();
        let found = lfu.get(&(root, tree.id()));
        match found {
            Some(_) => self.hits.fetch_add(1, Ordering::Relaxed),
            None => self.misses.fetch_add(1, Ordering::Relaxed),
        };
        found
    }

    pub fn put(&self, root: TermId, tree: &PredicateTree, count: BigUint) {
        self.lock().put((root, tree.id()), count);
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn capacity(&self) -> usize {
        self.lock().capacity()
    }

    pub fn contains(&self, root: TermId, tree: &PredicateTree) -> bool {
        self.lock().contains(&(root, tree.id()))
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }
}

impl Default for CardinalityCache {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_SIZE, DEFAULT_EVICTION_RATE).expect("valid defaults")
    }
}
