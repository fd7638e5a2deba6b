//! Random network graphs served from memory, with request accounting.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Mutex;
use std::time::Duration;

use adtrace_core::crawler::{
    crawl_ads_txt, crawl_sellers_recursive, CrawlConfig, FetchOutcome, FetchStatus, Transport,
    TransportMode,
};
use adtrace_core::parser::FileKind;
use chrono::Utc;
use proptest::prelude::*;

/// In-memory transport that counts every request by URL.
pub struct GraphTransport {
    bodies: HashMap<String, Vec<u8>>,
    log: Mutex<Vec<String>>,
}

impl GraphTransport {
    fn new(graph: &BTreeMap<String, Vec<String>>, ads: &BTreeSet<String>) -> Self {
        let mut bodies = HashMap::new();
        for (d, children) in graph {
            let entries: Vec<_> = children
                .iter()
                .enumerate()
                .map(|(i, c)| serde_json::json!({"seller_id": i.to_string(), "seller_type": "INTERMEDIARY", "domain": c}))
                .collect();
            bodies.insert(
                format!("https://{d}/sellers.json"),
                serde_json::to_vec(&serde_json::json!({ "sellers": entries })).unwrap(),
            );
        }
        for d in ads {
            bodies.insert(
                format!("https://{d}/ads.txt"),
                b"x.com, 1, DIRECT\n".to_vec(),
            );
        }
        GraphTransport {
            bodies,
            log: Mutex::new(Vec::new()),
        }
    }

    fn counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for u in self.log.lock().unwrap().iter() {
            *m.entry(u.clone()).or_insert(0) += 1;
        }
        m
    }
}

impl Transport for GraphTransport {
    fn get(&self, url: &str) -> FetchOutcome {
        self.log.lock().unwrap().push(url.to_string());
        match self.bodies.get(url) {
            Some(b) => FetchOutcome {
                url: url.to_string(),
                status: FetchStatus::Ok,
                final_url: None,
                body: Some(b.clone()),
                fetched_at: Utc::now(),
                http_status: Some(200),
            },
            None => FetchOutcome::failed(url, FetchStatus::NotFound, None, Some(404)),
        }
    }

    fn mode(&self) -> TransportMode {
        TransportMode::Fixture
    }
}

pub fn name(i: usize) -> String {
    format!("n{i}.com")
}

/// Random directed graph over `n` domains (cycles and self-loops allowed);
/// some nodes serve no sellers.json at all.
pub fn graph() -> impl Strategy<Value = (BTreeMap<String, Vec<String>>, Vec<String>, u32)> {
    (3usize..30).prop_flat_map(|n| {
        let edges = prop::collection::vec(prop::collection::vec(0..n, 0..5), n);
        let serving = prop::collection::vec(prop::bool::weighted(0.85), n);
        let seeds = prop::collection::vec(0..n, 1..6);
        (edges, serving, seeds, 1u32..6).prop_map(move |(edges, serving, seeds, depth)| {
            let g = edges
                .into_iter()
                .enumerate()
                .filter(|(i, _)| serving[*i])
                .map(|(i, cs)| (name(i), cs.into_iter().map(name).collect()))
                .collect();
            (g, seeds.into_iter().map(name).collect(), depth)
        })
    })
}

/// Breadth-first reachability with seeds at level 1.
pub fn reachable(
    graph: &BTreeMap<String, Vec<String>>,
    seeds: &[String],
    depth: u32,
) -> BTreeSet<String> {
    let mut seen: BTreeSet<String> = seeds.iter().cloned().collect();
    let mut q: VecDeque<(String, u32)> = seen.iter().map(|s| (s.clone(), 1)).collect();
    while let Some((d, lvl)) = q.pop_front() {
        if lvl >= depth {
            continue;
        }
        for c in graph.get(&d).into_iter().flatten() {
            if seen.insert(c.clone()) {
                q.push_back((c.clone(), lvl + 1));
            }
        }
    }
    seen
}

pub fn config(depth: u32) -> CrawlConfig {
    CrawlConfig {
        per_host_delay: Duration::ZERO,
        max_recursion_depth: depth,
        workers: 4,
        ..CrawlConfig::default()
    }
}

/// A complete graph with self-loops: every depth bound still ends the crawl
/// with one request per domain.
pub fn cyclic_graph_within_depth() -> Result<(), TestCaseError> {
    let g: BTreeMap<String, Vec<String>> = (0..6)
        .map(|i| (name(i), (0..6).map(name).collect()))
        .collect();
    for depth in 1..4 {
        let t = GraphTransport::new(&g, &BTreeSet::new());
        let snap = crawl_sellers_recursive(&[name(0)], &config(depth), &t).unwrap();
        let expected = if depth == 1 { 1 } else { 6 };
        prop_assert_eq!(t.counts().len(), expected);
        prop_assert!(t.counts().values().all(|c| *c == 1));
        prop_assert_eq!(snap.sellers_files.len(), expected);
    }
    Ok(())
}

pub fn ads_seeds() -> impl Strategy<Value = (Vec<usize>, BTreeSet<usize>)> {
    (
        prop::collection::vec(0usize..40, 1..40),
        prop::collection::btree_set(0usize..40, 0..40),
    )
}

pub fn sellers_crawl_at_most_once(
    (g, seeds, depth): (BTreeMap<String, Vec<String>>, Vec<String>, u32),
) -> Result<(), TestCaseError> {
    let t = GraphTransport::new(&g, &BTreeSet::new());
    let snap = crawl_sellers_recursive(&seeds, &config(depth), &t).unwrap();
    let counts = t.counts();
    prop_assert!(counts.values().all(|c| *c == 1), "{:?}", counts);

    let want = reachable(&g, &seeds, depth);
    let fetched: BTreeSet<String> = counts
        .keys()
        .map(|u| {
            u.trim_start_matches("https://")
                .trim_end_matches("/sellers.json")
                .to_string()
        })
        .collect();
    prop_assert_eq!(&fetched, &want);
    for d in &want {
        prop_assert!(snap.chain_length(d).unwrap() <= depth as usize);
        let has_file = snap.sellers_files.contains_key(d);
        let failed = snap.failed(FileKind::SellersJson, d).is_some();
        prop_assert!(has_file != failed);
    }
    prop_assert!(snap.check_consistency().is_ok());
    Ok(())
}

pub fn ads_crawl_once(
    (seeds, serving): (Vec<usize>, BTreeSet<usize>),
) -> Result<(), TestCaseError> {
    let seeds: Vec<String> = seeds.into_iter().map(name).collect();
    let ads: BTreeSet<String> = serving.into_iter().map(name).collect();
    let t = GraphTransport::new(&BTreeMap::new(), &ads);
    let snap = crawl_ads_txt(&seeds, &config(1), &t).unwrap();
    let counts = t.counts();
    let distinct: BTreeSet<&String> = seeds.iter().collect();
    prop_assert_eq!(counts.len(), distinct.len());
    prop_assert!(counts.values().all(|c| *c == 1));
    prop_assert_eq!(
        snap.ads_files.len() + snap.failures_for(FileKind::AdsTxt).count(),
        distinct.len()
    );
    Ok(())
}
