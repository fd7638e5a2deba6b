//! Flat ads.txt crawl and breadth-first sellers.json crawl.
//!
//! Every request goes through a [`Transport`], so the same code path runs
//! against live HTTP or a recorded fixture tree. Each `(domain, kind)` is
//! requested at most once per run.

mod politeness;
mod seeds;
mod snapshot;
mod transport;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use politeness::HostThrottle;
pub use seeds::{load_aliases, load_seeds, parse_seed_text, SeedList};
pub use snapshot::{CrawlSnapshot, FetchSource, Provenance};
pub use transport::{
    looks_non_text, FixtureTransport, HttpTransport, RecordingTransport, Transport, TransportMode,
};

use crate::domain::{is_valid_domain, parse_domain};
use crate::parser::{parse_ads_txt, parse_sellers_json, ContentHash, FileKind, ParsedFile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FetchStatus {
    Ok,
    NotFound,
    Redirected,
    Timeout,
    NetworkError,
    NonText,
}

impl FetchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FetchStatus::Ok => "OK",
            FetchStatus::NotFound => "NOT_FOUND",
            FetchStatus::Redirected => "REDIRECTED",
            FetchStatus::Timeout => "TIMEOUT",
            FetchStatus::NetworkError => "NETWORK_ERROR",
            FetchStatus::NonText => "NON_TEXT",
        }
    }
}

impl std::fmt::Display for FetchStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of one logical GET. `body` is present iff `status` is OK;
/// `final_url` is present iff a redirect was followed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchOutcome {
    pub url: String,
    pub status: FetchStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "b64_opt")]
    pub body: Option<Vec<u8>>,
    pub fetched_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub http_status: Option<u16>,
}

impl FetchOutcome {
    pub fn failed(
        url: &str,
        status: FetchStatus,
        final_url: Option<String>,
        http_status: Option<u16>,
    ) -> Self {
        debug_assert!(status != FetchStatus::Ok);
        FetchOutcome {
            url: url.to_string(),
            status,
            final_url,
            body: None,
            fetched_at: Utc::now(),
            http_status,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == FetchStatus::Ok
    }
}

mod b64_opt {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(b) => s.serialize_some(&STANDARD.encode(b)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| STANDARD.decode(s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrawlConfig {
    pub user_agent: String,
    pub timeout: Duration,
    pub max_redirects: u32,
    pub max_recursion_depth: u32,
    pub max_domains: usize,
    pub per_host_delay: Duration,
    /// Concurrent fetch workers per breadth-first level.
    pub workers: usize,
    pub max_body_bytes: u64,
    /// Explicit sellers.json URL per domain, consulted before the default path.
    pub sellers_path_aliases: BTreeMap<String, String>,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        CrawlConfig {
            user_agent: concat!("adtrace/", env!("CARGO_PKG_VERSION")).to_string(),
            timeout: Duration::from_secs(10),
            max_redirects: 3,
            max_recursion_depth: 5,
            max_domains: 1_000_000,
            per_host_delay: Duration::from_secs(1),
            workers: 8,
            max_body_bytes: 512 * 1024 * 1024,
            sellers_path_aliases: BTreeMap::new(),
        }
    }
}

impl CrawlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_recursion_depth < 1 {
            return Err(Error::Config(
                "max_recursion_depth must be at least 1".into(),
            ));
        }
        if self.max_domains < 1 {
            return Err(Error::Config("max_domains must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.user_agent.trim().is_empty() {
            return Err(Error::Config("user agent must not be empty".into()));
        }
        for (domain, url) in &self.sellers_path_aliases {
            if !is_valid_domain(domain) {
                return Err(Error::Config(format!(
                    "alias key `{domain}` is not a domain"
                )));
            }
            if !(url.starts_with("https://") || url.starts_with("http://")) {
                return Err(Error::Config(format!(
                    "alias for {domain} is not an http(s) URL"
                )));
            }
        }
        Ok(())
    }

    pub fn url_for(&self, domain: &str, kind: FileKind) -> String {
        if kind == FileKind::SellersJson {
            if let Some(url) = self.sellers_path_aliases.get(domain) {
                return url.clone();
            }
        }
        format!("https://{domain}{}", kind.path())
    }
}

fn validate_seeds(seeds: &[String]) -> Result<Vec<String>> {
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    let mut out = BTreeSet::new();
    let mut bad = Vec::new();
    for s in seeds {
        match parse_domain(s) {
            Some(d) => {
                out.insert(d);
            }
            None => bad.push(s.clone()),
        }
    }
    if !bad.is_empty() {
        let shown: Vec<_> = bad.iter().take(5).map(String::as_str).collect();
        return Err(Error::Config(format!(
            "{} invalid seed domain(s): {}",
            bad.len(),
            shown.join(", ")
        )));
    }
    Ok(out.into_iter().collect())
}

fn worker_pool(config: &CrawlConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start fetch workers: {e}")))
}

fn fetch_level(
    pool: &rayon::ThreadPool,
    domains: &[String],
    kind: FileKind,
    config: &CrawlConfig,
    transport: &dyn Transport,
) -> Vec<FetchOutcome> {
    pool.install(|| {
        domains
            .par_iter()
            .map(|d| transport.get(&config.url_for(d, kind)))
            .collect()
    })
}

/// Stores one outcome in the snapshot; returns the body hash when it was OK.
fn record(
    snap: &mut CrawlSnapshot,
    domain: &str,
    kind: FileKind,
    outcome: FetchOutcome,
) -> Option<ContentHash> {
    let Some(body) = outcome.body.as_ref().filter(|_| outcome.is_ok()) else {
        snap.failures
            .entry(kind)
            .or_default()
            .insert(domain.to_string(), outcome);
        return None;
    };
    let hash = ContentHash::of(body);
    match kind {
        FileKind::AdsTxt => {
            snap.ads_files
                .insert(domain.to_string(), parse_ads_txt(domain, body));
        }
        FileKind::SellersJson => {
            snap.sellers_files
                .insert(domain.to_string(), parse_sellers_json(domain, body));
        }
    }
    snap.sources.entry(kind).or_default().insert(
        domain.to_string(),
        FetchSource {
            url: outcome.url.clone(),
            final_url: outcome.final_url.clone(),
            content_hash: hash,
            http_status: outcome.http_status,
        },
    );
    snap.blobs
        .entry(hash)
        .or_insert_with(|| outcome.body.unwrap_or_default());
    Some(hash)
}

/// Fetches `/ads.txt` once for every seed.
pub fn crawl_ads_txt(
    seeds: &[String],
    config: &CrawlConfig,
    transport: &dyn Transport,
) -> Result<CrawlSnapshot> {
    config.validate()?;
    let mut domains = validate_seeds(seeds)?;
    let mut snap = CrawlSnapshot::empty(Utc::now());
    snap.seed_count = domains.len();
    if domains.len() > config.max_domains {
        domains.truncate(config.max_domains);
        snap.truncated = true;
    }
    let pool = worker_pool(config)?;
    let outcomes = fetch_level(&pool, &domains, FileKind::AdsTxt, config, transport);
    for (domain, outcome) in domains.iter().zip(outcomes) {
        record(&mut snap, domain, FileKind::AdsTxt, outcome);
    }
    snap.finished_at = Utc::now();
    snap.seal_id();
    Ok(snap)
}

/// Breadth-first sellers.json crawl. Every distinct domain listed in a
/// structurally valid file is enqueued once, up to `max_recursion_depth`
/// levels (seeds are level 1) and `max_domains` fetches in total.
pub fn crawl_sellers_recursive(
    seeds: &[String],
    config: &CrawlConfig,
    transport: &dyn Transport,
) -> Result<CrawlSnapshot> {
    config.validate()?;
    let seeds = validate_seeds(seeds)?;
    let mut snap = CrawlSnapshot::empty(Utc::now());
    snap.seed_count = seeds.len();
    let pool = worker_pool(config)?;

    let mut visited: BTreeSet<String> = BTreeSet::new();
    let mut frontier: Vec<(String, Option<String>)> = Vec::new();
    for s in seeds {
        if visited.len() >= config.max_domains {
            snap.truncated = true;
            break;
        }
        visited.insert(s.clone());
        frontier.push((s, None));
    }

    let mut depth = 1;
    while !frontier.is_empty() {
        let domains: Vec<String> = frontier.iter().map(|(d, _)| d.clone()).collect();
        let outcomes = fetch_level(&pool, &domains, FileKind::SellersJson, config, transport);
        let mut next = Vec::new();
        for ((domain, parent), outcome) in frontier.into_iter().zip(outcomes) {
            snap.provenance
                .insert(domain.clone(), Provenance { parent, depth });
            if record(&mut snap, &domain, FileKind::SellersJson, outcome).is_none() {
                continue;
            }
            let file = &snap.sellers_files[&domain];
            if !file.is_structurally_valid() || depth >= config.max_recursion_depth {
                continue;
            }
            let children: BTreeSet<&str> = file
                .entries
                .iter()
                .filter_map(|e| e.domain.as_deref())
                .filter(|d| is_valid_domain(d))
                .collect();
            for child in children {
                if visited.contains(child) {
                    continue;
                }
                if visited.len() >= config.max_domains {
                    snap.truncated = true;
                    break;
                }
                visited.insert(child.to_string());
                next.push((child.to_string(), Some(domain.clone())));
            }
        }
        frontier = next;
        depth += 1;
    }

    snap.finished_at = Utc::now();
    snap.seal_id();
    Ok(snap)
}

/// Distinct valid ad system domains named in the snapshot's ads.txt files.
pub fn network_seeds(snapshot: &CrawlSnapshot) -> Vec<String> {
    snapshot
        .ads_files
        .values()
        .flat_map(|f| f.records.iter())
        .filter_map(|r| parse_domain(&r.ad_system_domain))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// ads.txt crawl of `seeds`, then a recursive sellers.json crawl seeded with
/// every network those files name. Both results are merged into one snapshot.
pub fn crawl_full(
    seeds: &[String],
    config: &CrawlConfig,
    transport: &dyn Transport,
) -> Result<CrawlSnapshot> {
    let ads = crawl_ads_txt(seeds, config, transport)?;
    let networks = network_seeds(&ads);
    if networks.is_empty() {
        return Ok(ads);
    }
    let sellers = crawl_sellers_recursive(&networks, config, transport)?;
    Ok(ads.merge(sellers))
}

/// Raw outcome of a single fetch plus its parse, when the fetch succeeded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiveFetch {
    pub domain: String,
    pub kind: FileKind,
    pub outcome: FetchOutcome,
    pub parsed: Option<ParsedFile>,
}

/// One fetch of one file, parsed but not persisted.
pub fn live_fetch_passthrough(
    domain: &str,
    kind: FileKind,
    config: &CrawlConfig,
    transport: &dyn Transport,
) -> Result<LiveFetch> {
    let domain = parse_domain(domain)
        .ok_or_else(|| Error::InvalidInput(format!("`{domain}` is not a valid domain")))?;
    let outcome = transport.get(&config.url_for(&domain, kind));
    let parsed = match (&outcome.status, &outcome.body) {
        (FetchStatus::Ok, Some(body)) => Some(ParsedFile::parse(kind, &domain, body)),
        _ => None,
    };
    Ok(LiveFetch {
        domain,
        kind,
        outcome,
        parsed,
    })
}

impl LiveFetch {
    /// Wraps the fetch as a one-file snapshot for callers that opt in to
    /// persisting it.
    pub fn into_snapshot(self) -> CrawlSnapshot {
        let mut snap = CrawlSnapshot::empty(self.outcome.fetched_at);
        snap.seed_count = 1;
        if self.kind == FileKind::SellersJson {
            snap.provenance.insert(
                self.domain.clone(),
                Provenance {
                    parent: None,
                    depth: 1,
                },
            );
        }
        record(&mut snap, &self.domain, self.kind, self.outcome);
        snap.seal_id();
        snap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use std::path::Path;

    fn write(root: &Path, rel: &str, body: &str) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, body).unwrap();
    }

    fn sellers(domains: &[&str]) -> String {
        let entries: Vec<String> = domains
            .iter()
            .enumerate()
            .map(|(i, d)| {
                format!(r#"{{"seller_id":"{i}","seller_type":"INTERMEDIARY","domain":"{d}","name":"{d}"}}"#)
            })
            .collect();
        format!(r#"{{"sellers":[{}]}}"#, entries.join(","))
    }

    fn cfg() -> CrawlConfig {
        CrawlConfig {
            per_host_delay: Duration::ZERO,
            workers: 2,
            ..CrawlConfig::default()
        }
    }

    fn seeds(s: &[&str]) -> Vec<String> {
        s.iter().map(|d| d.to_string()).collect()
    }

    #[test]
    fn three_node_chain() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.com/sellers.json", &sellers(&["b.com"]));
        write(dir.path(), "b.com/sellers.json", &sellers(&["c.com"]));
        write(dir.path(), "c.com/index.html", "");
        let t = FixtureTransport::new(dir.path(), 3);
        let snap = crawl_sellers_recursive(&seeds(&["a.com"]), &cfg(), &t).unwrap();
        let files: Vec<_> = snap.sellers_files.keys().cloned().collect();
        assert_eq!(files, ["a.com", "b.com"]);
        let failed: Vec<_> = snap
            .failures_for(FileKind::SellersJson)
            .map(|(d, _)| d.clone())
            .collect();
        assert_eq!(failed, ["c.com"]);
        assert_eq!(snap.provenance["c.com"].parent.as_deref(), Some("b.com"));
        assert_eq!(snap.chain_length("c.com"), Some(3));
        snap.check_consistency().unwrap();
    }

    #[test]
    fn cycle_terminates_after_two_fetches() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.com/sellers.json", &sellers(&["b.com"]));
        write(dir.path(), "b.com/sellers.json", &sellers(&["a.com"]));
        let t = RecordingTransport::new(FixtureTransport::new(dir.path(), 3));
        let snap = crawl_sellers_recursive(&seeds(&["a.com"]), &cfg(), &t).unwrap();
        assert_eq!(t.requests().len(), 2);
        assert_eq!(snap.sellers_files.len(), 2);
    }

    #[test]
    fn depth_and_domain_limits() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "a.com/sellers.json",
            &sellers(&["b.com", "x.com", "y.com"]),
        );
        write(dir.path(), "b.com/sellers.json", &sellers(&["c.com"]));
        write(dir.path(), "c.com/sellers.json", &sellers(&[]));
        let t = FixtureTransport::new(dir.path(), 3);

        let shallow = CrawlConfig {
            max_recursion_depth: 2,
            ..cfg()
        };
        let snap = crawl_sellers_recursive(&seeds(&["a.com"]), &shallow, &t).unwrap();
        assert!(!snap.provenance.contains_key("c.com"));
        assert!(!snap.truncated);

        let narrow = CrawlConfig {
            max_domains: 2,
            ..cfg()
        };
        let snap = crawl_sellers_recursive(&seeds(&["a.com"]), &narrow, &t).unwrap();
        assert_eq!(snap.provenance.len(), 2);
        assert!(snap.truncated);
    }

    #[test]
    fn alias_is_consulted_first() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "realtimebidding.google.com/sellers.json",
            &sellers(&[]),
        );
        let mut config = cfg();
        config.sellers_path_aliases.insert(
            "google.com".into(),
            "https://realtimebidding.google.com/sellers.json".into(),
        );
        let t = RecordingTransport::new(FixtureTransport::new(dir.path(), 3));
        let live =
            live_fetch_passthrough("google.com", FileKind::SellersJson, &config, &t).unwrap();
        assert_eq!(
            t.requests(),
            ["https://realtimebidding.google.com/sellers.json"]
        );
        assert!(live.outcome.is_ok());
        assert!(matches!(live.parsed, Some(ParsedFile::SellersJson(_))));
    }

    #[test]
    fn empty_body_parses_to_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "e.com/ads.txt", "");
        let t = FixtureTransport::new(dir.path(), 3);
        let live = live_fetch_passthrough("e.com", FileKind::AdsTxt, &cfg(), &t).unwrap();
        match live.parsed {
            Some(ParsedFile::AdsTxt(f)) => assert!(f.records.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ads_crawl_records_everything_once() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "quora.com/ads.txt",
            "google.com, pub-1, DIRECT\n",
        );
        write(dir.path(), "gone.com/index.html", "");
        let t = FixtureTransport::new(dir.path(), 3);
        let snap = crawl_ads_txt(&seeds(&["quora.com", "gone.com"]), &cfg(), &t).unwrap();
        assert!(snap.ads_files.contains_key("quora.com"));
        assert_eq!(
            snap.failed(FileKind::AdsTxt, "gone.com").map(|f| f.status),
            Some(FetchStatus::NotFound)
        );
        assert_eq!(snap.blobs.len(), 1);
        assert!(snap.snapshot_id.starts_with("snap-"));
    }

    #[test]
    fn config_errors_abort() {
        let t = FixtureTransport::new("/nonexistent", 3);
        assert!(matches!(
            crawl_ads_txt(&[], &cfg(), &t),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            crawl_ads_txt(&seeds(&["not a domain"]), &cfg(), &t),
            Err(Error::Config(_))
        ));
        let bad = CrawlConfig {
            max_recursion_depth: 0,
            ..cfg()
        };
        assert!(matches!(
            crawl_sellers_recursive(&seeds(&["a.com"]), &bad, &t),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn snapshot_id_ignores_timestamps() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.com/sellers.json", &sellers(&["b.com"]));
        let t = FixtureTransport::new(dir.path(), 3);
        let one = crawl_sellers_recursive(&seeds(&["a.com"]), &cfg(), &t).unwrap();
        std::thread::sleep(Duration::from_millis(5));
        let two = crawl_sellers_recursive(&seeds(&["a.com"]), &cfg(), &t).unwrap();
        assert_eq!(one.snapshot_id, two.snapshot_id);
    }

    #[test]
    fn snapshot_json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.com/sellers.json", &sellers(&["b.com"]));
        write(dir.path(), "a.com/ads.txt", "x.com, 1, DIRECT");
        let t = FixtureTransport::new(dir.path(), 3);
        let s = crawl_sellers_recursive(&seeds(&["a.com"]), &cfg(), &t).unwrap();
        let a = crawl_ads_txt(&seeds(&["a.com"]), &cfg(), &t).unwrap();
        let merged = a.merge(s);
        let text = serde_json::to_string(&merged).unwrap();
        let back: CrawlSnapshot = serde_json::from_str(&text).unwrap();
        assert_eq!(back, merged);
        assert_eq!(back.content_digest(), merged.content_digest());
        back.check_consistency().unwrap();
    }
}
