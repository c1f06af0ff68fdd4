//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each exported function takes plain strings and numbers and returns a JSON
//! string, so the page needs no generated type glue. The `*_json` functions
//! hold the logic and are what the native tests call.

use rptcard_core::oracle::{enumerate_distribution, MAX_ENUMERATION_COLUMNS, MAX_ENUMERATION_ROWS};
use rptcard_core::overlap::{as_f64_series, rational_f64};
use rptcard_core::{
    estimate, execute_bgp, load_ntriples_str, n_column, parse_query, CardinalityCache,
    CardinalityDistribution, ColumnConstraints,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Graphs above this size are estimated but not run through the oracle.
pub const ORACLE_TRIPLE_LIMIT: usize = 20_000;

fn parse_columns(columns: &str) -> Result<Vec<u64>, String> {
    columns
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u64>().map_err(|_| format!("not a column sum: {s:?}")))
        .collect()
}

fn distribution_value(d: &CardinalityDistribution) -> Value {
    let (lo, hi) = d.window();
    json!({
        "exact": d.is_exact(),
        "support": [d.support_min(), d.support_max()],
        "window": [lo, hi],
        "series": as_f64_series(d),
        "mode": d.mode(),
        "mean": d.mean_f64(),
        "probabilities": if d.is_exact() { d.to_json()["p"].clone() } else { Value::Null },
    })
}

/// The all-1 row distribution for `m` rows and comma-separated column sums.
pub fn distribution_json(m: u64, columns: &str) -> Result<Value, String> {
    let columns = parse_columns(columns)?;
    if columns.is_empty() {
        return Err("give at least one column sum".into());
    }
    let d = n_column(&ColumnConstraints::new(m, columns)).map_err(|e| e.to_string())?;
    Ok(distribution_value(&d))
}

/// Compare the closed form with exhaustive enumeration on a small instance.
pub fn enumeration_check_json(m: u64, columns: &str) -> Result<Value, String> {
    let columns = parse_columns(columns)?;
    if m > MAX_ENUMERATION_ROWS || columns.len() > MAX_ENUMERATION_COLUMNS {
        return Err(format!(
            "enumeration is limited to {MAX_ENUMERATION_ROWS} rows and {MAX_ENUMERATION_COLUMNS} columns"
        ));
    }
    let model = n_column(&ColumnConstraints::new(m, columns.iter().copied())).map_err(|e| e.to_string())?;
    let listed = enumerate_distribution(m, &columns).map_err(|e| e.to_string())?;
    Ok(json!({
        "equal": model == listed,
        "model": model.to_json(),
        "enumerated": listed.to_json(),
    }))
}

/// Load N-Triples, estimate one query, and run it exactly when the graph is
/// small enough.
pub fn estimate_json(ntriples: &str, query: &str) -> Result<Value, String> {
    let graph = load_ntriples_str(ntriples).map_err(|e| e.to_string())?;
    let bgp = parse_query(query).map_err(|e| e.to_string())?;
    let cache = CardinalityCache::unbounded();
    let est = estimate(&graph, &bgp, &cache).map_err(|e| e.to_string())?;
    let truth = (graph.len() <= ORACLE_TRIPLE_LIMIT).then(|| execute_bgp(&graph, &bgp));
    let mut v = est.to_json("query", false, truth.as_ref());
    v["mean_value"] = json!(rational_f64(&est.mean));
    v["triples"] = json!(graph.len());
    v["patterns"] = json!(bgp.patterns().len());
    if let Some(d) = &est.distribution {
        v["distribution"] = distribution_value(d);
    }
    Ok(v)
}

fn to_js(result: Result<Value, String>) -> Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn distribution(m: u64, columns: &str) -> Result<String, JsError> {
    to_js(distribution_json(m, columns))
}

#[wasm_bindgen(js_name = enumerationCheck)]
pub fn enumeration_check(m: u64, columns: &str) -> Result<String, JsError> {
    to_js(enumeration_check_json(m, columns))
}

#[wasm_bindgen(js_name = estimateQuery)]
pub fn estimate_query(ntriples: &str, query: &str) -> Result<String, JsError> {
    to_js(estimate_json(ntriples, query))
}
