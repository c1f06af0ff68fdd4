//! End-to-end estimation and evaluation against the oracle.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use crate::cache::{CacheStats, CardinalityCache};
use crate::cardinality::{cheapest_position, rpt_cardinality, total_embeddings};
use crate::error::Result;
use crate::oracle::execute_bgp;
use crate::overlap::{n_column, rational_f64, ColumnConstraints, CardinalityDistribution};
use crate::query::{rpt_of, BasicGraphPattern, NodeId};
use crate::store::Graph;

/// One column constraint: the RPT cardinality at a bound node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub node: NodeId,
    pub label: String,
    pub count: BigUint,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Timings {
    pub cardinality_micros: u64,
    pub probability_micros: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Exact count when `exact`, otherwise the mode of `distribution`.
    pub point: BigUint,
    pub mean: BigRational,
    pub distribution: Option<CardinalityDistribution>,
    pub exact: bool,
    /// Total embeddings; not computed when a single RPT answers the query.
    pub m: Option<BigUint>,
    pub columns: Vec<Column>,
    pub timings: Timings,
    pub cache_stats: CacheStats,
}

/// Wall-clock timer. `std::time::Instant` panics on wasm32 targets without
/// a clock, so timings read 0 there.
#[derive(Clone, Copy)]
struct Instant(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Instant {
    fn now() -> Self {
        Instant(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }
}

#[cfg(not(target_arch = "wasm32"))]
fn micros(since: Instant) -> u64 {
    since.0.elapsed().as_micros() as u64
}

#[cfg(target_arch = "wasm32")]
fn micros(_since: Instant) -> u64 {
    0
}

fn exact_estimate(point: BigUint, m: Option<BigUint>, columns: Vec<Column>) -> Estimate {
    Estimate {
        mean: BigRational::from_integer(point.clone().into()),
        point,
        distribution: None,
        exact: true,
        m,
        columns,
        timings: Timings::default(),
        cache_stats: CacheStats::default(),
    }
}

/// Estimate the result cardinality of `bgp` over `graph`.
///
/// With no bound node the answer is the embedding count, with one it is that
/// node's RPT cardinality; both are exact. Otherwise the RPT cardinalities
/// of the bound nodes are column sums over `m` rows and the answer is the
/// mode of the resulting all-1 row distribution.
pub fn estimate(
    graph: &Graph,
    bgp: &BasicGraphPattern,
    cache: &CardinalityCache,
) -> Result<Estimate> {
    let stats_before = cache.stats();
    let started = Instant::now();
    let bound = bgp.bound_nodes();

    let column = |node: NodeId| Column {
        node,
        label: bgp.label(node),
        count: rpt_cardinality(graph, &rpt_of(graph, bgp, node), cache),
    };

    let mut result = match bound {
        [] => {
            let m = total_embeddings(graph, bgp, cheapest_position(graph, bgp), cache);
            exact_estimate(m.clone(), Some(m), Vec::new())
        }
        [only] => {
            let col = column(*only);
            exact_estimate(col.count.clone(), None, vec![col])
        }
        [first, ..] => {
            let m = total_embeddings(graph, bgp, *first, cache);
            let columns: Vec<Column> = bound.iter().map(|&b| column(b)).collect();
            let cardinality_micros = micros(started);

            if columns.iter().any(|c| c.count.is_zero()) {
                exact_estimate(BigUint::ZERO, Some(m), columns)
            } else {
                let remaining: Vec<&BigUint> =
                    columns.iter().map(|c| &c.count).filter(|&c| c != &m).collect();
                match remaining.as_slice() {
                    [] => exact_estimate(m.clone(), Some(m), columns),
                    [single] => exact_estimate((*single).clone(), Some(m), columns),
                    _ => {
                        let prob_started = Instant::now();
                        let constraints = ColumnConstraints {
                            m: m.clone(),
                            columns: columns.iter().map(|c| c.count.clone()).collect(),
                        };
                        let dist = n_column(&constraints)?;
                        let mut est = Estimate {
                            point: BigUint::from(dist.mode()),
                            mean: dist.mean(),
                            distribution: Some(dist),
                            exact: false,
                            m: Some(m),
                            columns,
                            timings: Timings::default(),
                            cache_stats: CacheStats::default(),
                        };
                        est.timings = Timings {
                            cardinality_micros,
                            probability_micros: micros(prob_started),
                        };
                        est.cache_stats = cache.stats().since(stats_before);
                        return Ok(est);
                    }
                }
            }
        }
    };
    result.timings.cardinality_micros = micros(started);
    result.cache_stats = cache.stats().since(stats_before);
    Ok(result)
}

/// JSON for an integer: a number when it fits in 64 bits, else a string.
pub fn big_json(n: &BigUint) -> Value {
    match n.to_u64() {
        Some(x) => json!(x),
        None => json!(n.to_string()),
    }
}

fn rational_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl Estimate {
    /// Report object for one query. Timings sit in their own `timings`
    /// object so the rest is reproducible byte for byte.
    pub fn to_json(&self, query_id: &str, with_distribution: bool, truth: Option<&BigUint>) -> Value {
        let mut obj = Map::new();
        obj.insert("query_id".into(), json!(query_id));
        obj.insert("point".into(), big_json(&self.point));
        obj.insert("exact".into(), json!(self.exact));
        obj.insert("mean".into(), json!(rational_string(&self.mean)));
        if with_distribution {
            if let Some(d) = &self.distribution {
                obj.insert("distribution".into(), d.to_json());
            }
        }
        if let Some(t) = truth {
            obj.insert("true_card".into(), big_json(t));
        }
        obj.insert("m".into(), self.m.as_ref().map_or(Value::Null, big_json));
        obj.insert(
            "columns".into(),
            Value::Array(
                self.columns
                    .iter()
                    .map(|c| json!({"node": c.label, "c": big_json(&c.count)}))
                    .collect(),
            ),
        );
        obj.insert("cache_hits".into(), json!(self.cache_stats.hits));
        obj.insert("cache_misses".into(), json!(self.cache_stats.misses));
        obj.insert(
            "timings".into(),
            json!({
                "cardinality_micros": self.timings.cardinality_micros,
                "probability_micros": self.timings.probability_micros,
            }),
        );
        Value::Object(obj)
    }
}

/// One line of an evaluation run.
#[derive(Debug, Clone)]
pub enum EvaluationRow {
    Done {
        query_id: String,
        estimate: Estimate,
        truth: BigUint,
        oracle_micros: u64,
    },
    Skipped {
        query_id: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub pearson: Option<f64>,
    pub flag: Option<&'static str>,
}

#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub rows: Vec<EvaluationRow>,
    pub n: usize,
    pub mean_true: f64,
    pub mean_estimate: f64,
    pub correlation: Correlation,
}

/// Pearson correlation with the conventions used in reports: fewer than two
/// points is "insufficient data"; if either side is constant the
/// coefficient is undefined, reported as 1 when the two sides agree
/// everywhere and left empty otherwise, flagged "zero variance" either way.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Correlation {
    let n = xs.len();
    if n < 2 {
        return Correlation {
            pearson: None,
            flag: Some("insufficient data"),
        };
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        let agree = xs.iter().zip(ys).all(|(x, y)| x == y);
        return Correlation {
            pearson: agree.then_some(1.0),
            flag: Some("zero variance"),
        };
    }
    Correlation {
        pearson: Some(sxy / (sxx.sqrt() * syy.sqrt())),
        flag: None,
    }
}

fn big_f64(n: &BigUint) -> f64 {
    rational_f64(&BigRational::from_integer(n.clone().into()))
}

/// Estimate every query, run it through the oracle, and correlate the two.
/// Queries that failed to parse are passed in as errors and come out as
/// skipped rows.
pub fn evaluate(
    graph: &Graph,
    queries: &[(String, Result<BasicGraphPattern>)],
    cache: &CardinalityCache,
) -> EvaluationReport {
    let mut rows = Vec::with_capacity(queries.len());
    for (query_id, parsed) in queries {
        let query_id = query_id.clone();
        let row = match parsed {
            Err(e) => EvaluationRow::Skipped {
                query_id,
                reason: e.to_string(),
            },
            Ok(bgp) => match estimate(graph, bgp, cache) {
                Err(e) => EvaluationRow::Skipped {
                    query_id,
                    reason: e.to_string(),
                },
                Ok(estimate) => {
                    let started = Instant::now();
                    let truth = execute_bgp(graph, bgp);
                    EvaluationRow::Done {
                        query_id,
                        estimate,
                        truth,
                        oracle_micros: micros(started),
                    }
                }
            },
        };
        rows.push(row);
    }

    let (points, truths): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| match r {
            EvaluationRow::Done { estimate, truth, .. } => {
                Some((big_f64(&estimate.point), big_f64(truth)))
            }
            EvaluationRow::Skipped { .. } => None,
        })
        .unzip();
    let n = points.len();
    let avg = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    EvaluationReport {
        n,
        mean_true: avg(&truths),
        mean_estimate: avg(&points),
        correlation: pearson(&points, &truths),
        rows,
    }
}

impl EvaluationReport {
    pub fn skipped(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| matches!(r, EvaluationRow::Skipped { .. }))
            .count()
    }

    pub fn aggregate_json(&self) -> Value {
        json!({
            "n": self.n,
            "skipped": self.skipped(),
            "mean_true": self.mean_true,
            "mean_estimate": self.mean_estimate,
            "pearson": self.correlation.pearson,
            "pearson_flag": self.correlation.flag,
        })
    }

    pub fn to_json(&self, with_distribution: bool) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| match r {
                EvaluationRow::Done {
                    query_id,
                    estimate,
                    truth,
                    ..
                } => estimate.to_json(query_id, with_distribution, Some(truth)),
                EvaluationRow::Skipped { query_id, reason } => {
                    json!({"query_id": query_id, "skipped": true, "reason": reason})
                }
            })
            .collect();
        json!({ "queries": rows, "aggregate": self.aggregate_json() })
    }
}
