//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{embeddings_at, fixture_queries, g1, g2, id, query, random_graph, random_query};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rptcard_core::cache::Lfu;
use rptcard_core::cardinality::Counter;
use rptcard_core::overlap::ratio;
use rptcard_core::query::{EdgeLabel, PredicateTree};
use rptcard_core::store::DirectedPredicate;
use rptcard_core::{
    enumerate_distribution, estimate, execute_bgp, load_ntriples_str, n_column, two_column,
    CardinalityCache, ColumnConstraints, Graph,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn two_column_matches_enumeration() -> Outcome {
    let started = Instant::now();
    let mut cases = 0;
    for m in 0..=8u64 {
        for c1 in 0..=m {
            for c2 in 0..=m {
                let closed = two_column(m, c1, c2).map_err(|e| e.to_string())?;
                let listed = enumerate_distribution(m, &[c1, c2]).map_err(|e| e.to_string())?;
                ensure(closed == listed, || format!("m={m} C=({c1},{c2}) differs"))?;
                cases += 1;
            }
        }
    }
    within(started.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{cases} instances, {:?}", started.elapsed()))
}

fn n_column_matches_enumeration() -> Outcome {
    let started = Instant::now();
    let mut cases = 0;
    for m in 0..=6u64 {
        for n in 1..=4usize {
            let mut columns = vec![0u64; n];
            loop {
                let chained = n_column(&ColumnConstraints::new(m, columns.iter().copied()))
                    .map_err(|e| e.to_string())?;
                let listed = enumerate_distribution(m, &columns).map_err(|e| e.to_string())?;
                ensure(chained == listed, || format!("m={m} C={columns:?} differs"))?;
                cases += 1;
                // next column combination in 0..=m
                let mut i = 0;
                while i < n && columns[i] == m {
                    columns[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                columns[i] += 1;
            }
        }
    }
    within(started.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{cases} instances, {:?}", started.elapsed()))
}

fn choose(n: u64, k: u64) -> BigUint {
    // n! / (k! (n-k)!) by full factorials, independent of the library's binomial
    let fact = |x: u64| (1..=x).fold(BigUint::from(1u8), |acc, i| acc * i);
    fact(n) / (fact(k) * fact(n - k))
}

fn figure_one_distribution() -> Outcome {
    let d = two_column(19, 6, 18).map_err(|e| e.to_string())?;
    let expected = [(5, ratio(6, 19)), (6, ratio(13, 19))];
    ensure(d.probabilities() == expected, || format!("got {:?}", d.probabilities()))?;
    ensure(d.mode() == 6, || format!("mode {}", d.mode()))?;
    // closed form with factorial binomials
    for (t, p) in &expected {
        let num = choose(6, *t) * choose(13, 18 - t);
        let den = choose(19, 18);
        let closed = BigRational::new(num.into(), den.into());
        ensure(&closed == p, || format!("closed form at {t} gives {closed}"))?;
    }
    Ok("P(5)=6/19, P(6)=13/19, mode 6".into())
}

fn count_query(g: &Graph, body: &str) -> BigUint {
    execute_bgp(g, &query(body))
}

fn sum_product_structure() -> Outcome {
    let g = g1();
    let cache = CardinalityCache::unbounded();
    let mut counter = Counter::new(&g, &cache);
    let f = |p: &str| EdgeLabel::forward(&common::iri(p));
    let i = |p: &str| EdgeLabel::inverse(&common::iri(p));
    let mut checks = 0;

    // chain: |a2, p/q/m/n| is the sum of |b, q/m/n| over the p-neighbours of a2
    let pqmn = PredicateTree::chain(&[f("p"), f("q"), f("m"), f("n")]);
    let qmn = PredicateTree::chain(&[f("q"), f("m"), f("n")]);
    for root in ["a1", "a2"] {
        let whole = counter.count(id(&g, root), &pqmn);
        let mut sum = BigUint::from(0u8);
        for &b in g.neighbors(id(&g, root), DirectedPredicate::forward(id(&g, "p"))) {
            let part = counter.count(b, &qmn);
            let name = g.term(b).as_iri().unwrap().trim_start_matches(common::NS).to_owned();
            let truth = count_query(&g, &format!("f:{name} f:q ?c . ?c f:m ?d . ?d f:n ?e"));
            ensure(part == truth, || format!("|{name}, q/m/n| = {part}, oracle {truth}"))?;
            sum += part;
        }
        let truth = count_query(&g, &format!("f:{root} f:p ?b . ?b f:q ?c . ?c f:m ?d . ?d f:n ?e"));
        ensure(whole == sum && whole == truth, || {
            format!("|{root}, p/q/m/n| = {whole}, sum {sum}, oracle {truth}")
        })?;
        checks += 1;
    }

    // two branches: |d1, {^m/^q/^p, n}| = (sum over c of |c, ^q/^p|) * (number of n-children)
    let up = PredicateTree::chain(&[i("q"), i("p")]);
    let branchy = PredicateTree::from_edges(vec![(i("m"), up.clone()), (f("n"), PredicateTree::leaf())]);
    let d1 = id(&g, "d1");
    let mut up_sum = BigUint::from(0u8);
    for &c in g.neighbors(d1, DirectedPredicate::inverse(id(&g, "m"))) {
        let part = counter.count(c, &up);
        let name = g.term(c).as_iri().unwrap().trim_start_matches(common::NS).to_owned();
        let truth = count_query(&g, &format!("?a f:p ?b . ?b f:q f:{name}"));
        ensure(part == truth, || format!("|{name}, ^q/^p| = {part}, oracle {truth}"))?;
        up_sum += part;
    }
    let leaf_sum = BigUint::from(g.neighbors(d1, DirectedPredicate::forward(id(&g, "n"))).len());
    let whole = counter.count(d1, &branchy);
    let truth = count_query(&g, "?a f:p ?b . ?b f:q ?c . ?c f:m f:d1 . f:d1 f:n ?e");
    ensure(whole == &up_sum * &leaf_sum && whole == truth, || {
        format!("|d1, T| = {whole}, product {up_sum}*{leaf_sum}, oracle {truth}")
    })?;
    checks += 1;

    // star on G2: |s, {p, q}| = |V(s, p)| * |V(s, q)|
    let g = g2();
    let cache = CardinalityCache::unbounded();
    let mut counter = Counter::new(&g, &cache);
    let star = PredicateTree::from_edges(vec![(f("p"), PredicateTree::leaf()), (f("q"), PredicateTree::leaf())]);
    let star_query = query(common::G2_STAR);
    let s_pos = star_query.find(&rptcard_core::NodeRef::var("s")).unwrap();
    for s in ["s1", "s2", "s3", "s4"] {
        let sid = id(&g, s);
        let whole = counter.count(sid, &star);
        let product = g.neighbors(sid, DirectedPredicate::forward(id(&g, "p"))).len()
            * g.neighbors(sid, DirectedPredicate::forward(id(&g, "q"))).len();
        let truth = embeddings_at(&g, &star_query, s_pos, sid);
        ensure(whole == BigUint::from(product) && product == truth, || {
            format!("|{s}, {{p,q}}| = {whole}, product {product}, oracle {truth}")
        })?;
        checks += 1;
    }
    Ok(format!("{checks} decompositions equal the oracle"))
}

fn exact_short_circuits() -> Outcome {
    let mut checked = 0;
    for (name, g, bgp) in fixture_queries() {
        if bgp.bound_nodes().len() > 1 {
            continue;
        }
        let est = estimate(&g, &bgp, &CardinalityCache::unbounded()).map_err(|e| e.to_string())?;
        let truth = execute_bgp(&g, &bgp);
        ensure(est.exact && est.point == truth, || {
            format!("{name}: exact={} point={} oracle={truth}", est.exact, est.point)
        })?;
        checked += 1;
    }
    Ok(format!("{checked} fixture queries"))
}

fn support_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut total, mut probabilistic, mut exact) = (0, 0, 0);
    while total < 600 {
        let triples = rng.gen_range(20..=200);
        let nodes = rng.gen_range(8..25);
        let predicates = rng.gen_range(1..=4);
        let g = random_graph(&mut rng, nodes, predicates, triples);
        let patterns = rng.gen_range(1..=5);
        let bgp = random_query(&mut rng, &g, predicates, patterns, 3);
        let est = estimate(&g, &bgp, &CardinalityCache::unbounded()).map_err(|e| e.to_string())?;
        let truth = execute_bgp(&g, &bgp);
        if let Some(d) = &est.distribution {
            let t = truth.to_u64().unwrap();
            ensure(d.support_min() <= t && t <= d.support_max(), || {
                format!("truth {t} outside [{}, {}] for {:?}", d.support_min(), d.support_max(), bgp)
            })?;
            probabilistic += 1;
        } else {
            ensure(est.exact && est.point == truth, || {
                format!("exact point {} but oracle {truth}", est.point)
            })?;
            exact += 1;
        }
        total += 1;
    }
    Ok(format!("{total} queries, {probabilistic} with a distribution, {exact} exact, 0 failures"))
}

fn independence_calibration() -> Outcome {
    const SUBJECTS: usize = 24;
    const REGENERATIONS: usize = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let ns = common::NS;
    let bgp = query("?s f:p f:x1 ; f:q f:y1");
    let mut diffs = Vec::with_capacity(REGENERATIONS);
    for _ in 0..REGENERATIONS {
        let mut text = String::new();
        for s in 0..SUBJECTS {
            let x = rng.gen_range(1..=3);
            let y = rng.gen_range(1..=3);
            text.push_str(&format!("<{ns}s{s}> <{ns}p> <{ns}x{x}> .\n<{ns}s{s}> <{ns}q> <{ns}y{y}> .\n"));
        }
        let g = load_ntriples_str(&text).unwrap();
        let est = estimate(&g, &bgp, &CardinalityCache::unbounded()).map_err(|e| e.to_string())?;
        let m = est.m.clone().unwrap();
        let c: Vec<&BigUint> = est.columns.iter().map(|c| &c.count).collect();
        let expected = BigRational::new((c[0] * c[1]).into(), m.into());
        ensure(est.mean == expected, || format!("mean {} but C1*C2/m = {expected}", est.mean))?;
        let truth = execute_bgp(&g, &bgp).to_f64().unwrap();
        diffs.push(truth - expected.to_f64().unwrap());
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    ensure(mean.abs() <= 3.0 * se, || format!("mean difference {mean:.4} exceeds 3 SE ({se:.4})"))?;
    Ok(format!("{REGENERATIONS} regenerations, mean(T - C1*C2/m) = {mean:.4}, SE {se:.4}"))
}

fn cache_behaviour() -> Outcome {
    // warm re-run of an identical query
    for (name, g, bgp) in fixture_queries() {
        let cache = CardinalityCache::unbounded();
        estimate(&g, &bgp, &cache).map_err(|e| e.to_string())?;
        let before = g.adjacency_calls();
        estimate(&g, &bgp, &cache).map_err(|e| e.to_string())?;
        let calls = g.adjacency_calls() - before;
        ensure(calls == 0, || format!("{name}: warm re-run made {calls} adjacency calls"))?;
    }

    // scripted LFU trace: put A, put B, get A, put C evicts B
    let mut lfu = Lfu::new(2, 0.5).map_err(|e| e.to_string())?;
    lfu.put("A", 1);
    lfu.put("B", 2);
    lfu.get(&"A");
    lfu.put("C", 3);
    ensure(lfu.contains(&"A") && !lfu.contains(&"B") && lfu.contains(&"C"), || {
        "LFU trace did not evict B".into()
    })?;
    let g = g1();
    let shared = CardinalityCache::new(2, 0.5).map_err(|e| e.to_string())?;
    let t = PredicateTree::chain(&[EdgeLabel::forward(&common::iri("p"))]);
    let (a, b, c) = (id(&g, "a1"), id(&g, "a2"), id(&g, "b1"));
    shared.put(a, &t, BigUint::from(1u8));
    shared.put(b, &t, BigUint::from(2u8));
    shared.get(a, &t);
    shared.put(c, &t, BigUint::from(0u8));
    ensure(shared.contains(a, &t) && !shared.contains(b, &t) && shared.contains(c, &t), || {
        "cardinality cache trace did not evict B".into()
    })?;

    // a cache warmed by other queries on the same graph saves work whenever
    // they share sub-RPTs
    let queries = fixture_queries();
    let mut shared_cases = 0;
    for (i, (name, g, bgp)) in queries.iter().enumerate() {
        let cold_cache = CardinalityCache::unbounded();
        let before = g.adjacency_calls();
        estimate(g, bgp, &cold_cache).map_err(|e| e.to_string())?;
        let cold = g.adjacency_calls() - before;

        let warm_cache = CardinalityCache::unbounded();
        for (j, (_, other_g, other)) in queries.iter().enumerate() {
            if j != i && other_g.to_ntriples() == g.to_ntriples() {
                estimate(g, other, &warm_cache).map_err(|e| e.to_string())?;
            }
        }
        let stats_before = warm_cache.stats();
        let before = g.adjacency_calls();
        estimate(g, bgp, &warm_cache).map_err(|e| e.to_string())?;
        let warm = g.adjacency_calls() - before;
        if warm_cache.stats().since(stats_before).hits > 0 {
            shared_cases += 1;
            ensure(warm < cold, || format!("{name}: warm {warm} calls, cold {cold}"))?;
        }
    }
    Ok(format!(
        "0 calls on identical re-runs, LFU trace evicts B, {shared_cases} queries with shared sub-RPTs run cheaper warm"
    ))
}

fn tripartite_fan() -> Outcome {
    let ns = common::NS;
    let mut checked = Vec::new();
    for k in 1..=7 {
        let mut text = String::new();
        for a in 0..k {
            for b in 0..k {
                text.push_str(&format!("<{ns}a{a}> <{ns}p> <{ns}b{b}> .\n"));
            }
        }
        for b in 0..k {
            for c in 0..k {
                text.push_str(&format!("<{ns}b{b}> <{ns}q> <{ns}c{c}> .\n"));
            }
        }
        let g = load_ntriples_str(&text).unwrap();
        let bgp = query("f:a0 f:p ?b . ?b f:q f:c0");
        let est = estimate(&g, &bgp, &CardinalityCache::unbounded()).map_err(|e| e.to_string())?;
        let truth = execute_bgp(&g, &bgp);
        ensure(est.point == truth, || format!("k={k}: point {} oracle {truth}", est.point))?;
        checked.push(k);
    }
    Ok(format!("complete fans k = {checked:?}, point equals the oracle"))
}

fn performance_smoke() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ns = common::NS;
    let nodes = 20_000;
    let mut text = String::with_capacity(100_000 * 80);
    let mut seen = std::collections::HashSet::new();
    while seen.len() < 100_000 {
        let t = (rng.gen_range(0..nodes), rng.gen_range(0..5), rng.gen_range(0..nodes));
        if seen.insert(t) {
            text.push_str(&format!("<{ns}n{}> <{ns}p{}> <{ns}n{}> .\n", t.0, t.1, t.2));
        }
    }
    let g = load_ntriples_str(&text).map_err(|e| e.to_string())?;
    ensure(g.len() == 100_000, || format!("{} triples", g.len()))?;
    // pick bound values that make the query non-empty: n0's p0 successor's
    // p1 successor
    let p = |i: usize| g.iri_id(&format!("{ns}p{i}")).unwrap();
    let start = (0..nodes)
        .map(|n| g.iri_id(&format!("{ns}n{n}")).unwrap())
        .find(|&n| {
            g.neighbors(n, DirectedPredicate::forward(p(0)))
                .iter()
                .any(|&b| !g.neighbors(b, DirectedPredicate::forward(p(1))).is_empty())
        })
        .unwrap();
    let b = g.neighbors(start, DirectedPredicate::forward(p(0)))
        .iter()
        .copied()
        .find(|&b| !g.neighbors(b, DirectedPredicate::forward(p(1))).is_empty())
        .unwrap();
    let c = g.neighbors(b, DirectedPredicate::forward(p(1)))[0];
    let name = |t| g.term(t).as_iri().unwrap().trim_start_matches(ns).to_owned();
    let body = format!(
        "f:{} f:p0 ?b . ?b f:p1 f:{} . f:{} f:p2 ?d . ?d f:p3 ?e . ?b f:p4 ?f",
        name(start),
        name(c),
        name(c)
    );
    let bgp = query(&body);
    ensure(bgp.patterns().len() == 5 && bgp.bound_nodes().len() == 2, || "query shape".into())?;
    let cache = CardinalityCache::new(rptcard_core::DEFAULT_CACHE_SIZE, rptcard_core::DEFAULT_EVICTION_RATE)
        .map_err(|e| e.to_string())?;
    let started = Instant::now();
    let est = estimate(&g, &bgp, &cache).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    within(elapsed, Duration::from_secs(2))?;
    Ok(format!("100000 triples, m = {}, point = {}, {elapsed:?}", est.m.unwrap(), est.point))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("two-column closed form equals enumeration (m <= 8)", two_column_matches_enumeration),
        ("n-column chaining equals enumeration (m <= 6, n <= 4)", n_column_matches_enumeration),
        ("worked distribution m=19, C=(6,18)", figure_one_distribution),
        ("RPT cardinality sum/product structure", sum_product_structure),
        ("exact short-circuits for <= 1 bound node", exact_short_circuits),
        ("support soundness over random queries", support_soundness),
        ("independence-case calibration", independence_calibration),
        ("cache behaviour", cache_behaviour),
        ("tripartite fan point equals oracle", tripartite_fan),
        ("performance smoke on 100k triples", performance_smoke),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
