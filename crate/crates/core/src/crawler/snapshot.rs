use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::FetchOutcome;
use crate::parser::{AdsTxtFile, ContentHash, FileKind, SellersFile};

/// Where a successfully fetched file came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchSource {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_url: Option<String>,
    pub content_hash: ContentHash,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub http_status: Option<u16>,
}

/// How a sellers.json domain was reached: `parent` is the domain whose file
/// listed it, absent for seeds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub parent: Option<String>,
    pub depth: u32,
}

/// One dated crawl: parsed files, failures and provenance.
///
/// Structurally invalid sellers.json bodies that were fetched successfully
/// are kept in `sellers_files` (their content hash matters for copy
/// detection); analysis treats them as not serving a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlSnapshot {
    #[serde(default)]
    pub snapshot_id: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub seed_count: usize,
    #[serde(default)]
    pub ads_files: BTreeMap<String, AdsTxtFile>,
    #[serde(default)]
    pub sellers_files: BTreeMap<String, SellersFile>,
    #[serde(default)]
    pub failures: BTreeMap<FileKind, BTreeMap<String, FetchOutcome>>,
    #[serde(default)]
    pub sources: BTreeMap<FileKind, BTreeMap<String, FetchSource>>,
    #[serde(default)]
    pub provenance: BTreeMap<String, Provenance>,
    /// Set when the crawl stopped expanding because `max_domains` was hit.
    #[serde(default)]
    pub truncated: bool,
    /// Raw bodies keyed by content hash. Moved into the blob table on ingest.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty", with = "blob_map")]
    pub blobs: BTreeMap<ContentHash, Vec<u8>>,
}

impl CrawlSnapshot {
    pub fn empty(started_at: DateTime<Utc>) -> Self {
        CrawlSnapshot {
            snapshot_id: String::new(),
            started_at,
            finished_at: started_at,
            seed_count: 0,
            ads_files: BTreeMap::new(),
            sellers_files: BTreeMap::new(),
            failures: BTreeMap::new(),
            sources: BTreeMap::new(),
            provenance: BTreeMap::new(),
            truncated: false,
            blobs: BTreeMap::new(),
        }
    }

    pub fn failures_for(&self, kind: FileKind) -> impl Iterator<Item = (&String, &FetchOutcome)> {
        self.failures.get(&kind).into_iter().flatten()
    }

    pub fn failed(&self, kind: FileKind, domain: &str) -> Option<&FetchOutcome> {
        self.failures.get(&kind).and_then(|m| m.get(domain))
    }

    pub fn source(&self, kind: FileKind, domain: &str) -> Option<&FetchSource> {
        self.sources.get(&kind).and_then(|m| m.get(domain))
    }

    /// Digest of everything except timestamps, blobs and the id itself.
    pub fn content_digest(&self) -> String {
        let epoch = DateTime::<Utc>::UNIX_EPOCH;
        let mut c = self.clone();
        c.snapshot_id.clear();
        c.started_at = epoch;
        c.finished_at = epoch;
        c.blobs.clear();
        for failures in c.failures.values_mut() {
            for f in failures.values_mut() {
                f.fetched_at = epoch;
            }
        }
        let bytes = serde_json::to_vec(&c).expect("snapshot serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Recomputes `snapshot_id` from the content digest.
    pub fn seal_id(&mut self) -> &str {
        self.snapshot_id = format!("snap-{}", &self.content_digest()[..16]);
        &self.snapshot_id
    }

    /// Combines two crawls (typically one ads.txt and one sellers.json crawl)
    /// into one snapshot. On a per-kind domain collision `self` wins.
    pub fn merge(mut self, other: CrawlSnapshot) -> CrawlSnapshot {
        self.started_at = self.started_at.min(other.started_at);
        self.finished_at = self.finished_at.max(other.finished_at);
        self.seed_count += other.seed_count;
        self.truncated |= other.truncated;
        for (d, f) in other.ads_files {
            self.ads_files.entry(d).or_insert(f);
        }
        for (d, f) in other.sellers_files {
            self.sellers_files.entry(d).or_insert(f);
        }
        for (kind, map) in other.sources {
            let mine = self.sources.entry(kind).or_default();
            for (d, s) in map {
                mine.entry(d).or_insert(s);
            }
        }
        for (kind, map) in other.failures {
            for (d, f) in map {
                let succeeded = match kind {
                    FileKind::AdsTxt => self.ads_files.contains_key(&d),
                    FileKind::SellersJson => self.sellers_files.contains_key(&d),
                };
                if !succeeded {
                    self.failures.entry(kind).or_default().entry(d).or_insert(f);
                }
            }
        }
        // A success from `other` may have replaced a failure recorded by `self`.
        for kind in [FileKind::AdsTxt, FileKind::SellersJson] {
            if let Some(map) = self.failures.get_mut(&kind) {
                map.retain(|d, _| match kind {
                    FileKind::AdsTxt => !self.ads_files.contains_key(d),
                    FileKind::SellersJson => !self.sellers_files.contains_key(d),
                });
            }
        }
        for (d, p) in other.provenance {
            self.provenance.entry(d).or_insert(p);
        }
        self.blobs.extend(other.blobs);
        self.seal_id();
        self
    }

    /// Checks the structural invariants: no domain is both a success and a
    /// failure for one file kind, and every sellers.json domain has a
    /// provenance chain ending at a seed.
    pub fn check_consistency(&self) -> Result<(), String> {
        for (d, _) in self.failures_for(FileKind::AdsTxt) {
            if self.ads_files.contains_key(d) {
                return Err(format!("{d} is both fetched and failed for ads.txt"));
            }
        }
        for (d, _) in self.failures_for(FileKind::SellersJson) {
            if self.sellers_files.contains_key(d) {
                return Err(format!("{d} is both fetched and failed for sellers.json"));
            }
        }
        for d in self.sellers_files.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = d.as_str();
            loop {
                if !seen.insert(cur) {
                    return Err(format!("provenance cycle through {cur}"));
                }
                match self.provenance.get(cur) {
                    None => return Err(format!("{cur} has no provenance")),
                    Some(Provenance { parent: None, .. }) => break,
                    Some(Provenance {
                        parent: Some(p), ..
                    }) => cur = p,
                }
            }
        }
        Ok(())
    }

    /// Length of the provenance chain for `domain`, seeds being 1.
    pub fn chain_length(&self, domain: &str) -> Option<usize> {
        let mut n = 0;
        let mut cur = domain;
        loop {
            let p = self.provenance.get(cur)?;
            n += 1;
            if n > self.provenance.len() {
                return None;
            }
            match &p.parent {
                None => return Some(n),
                Some(parent) => cur = parent,
            }
        }
    }
}

mod blob_map {
    use super::ContentHash;
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<ContentHash, Vec<u8>>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let encoded: BTreeMap<&ContentHash, String> =
            map.iter().map(|(k, v)| (k, STANDARD.encode(v))).collect();
        encoded.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<ContentHash, Vec<u8>>, D::Error> {
        let encoded = BTreeMap::<ContentHash, String>::deserialize(d)?;
        encoded
            .into_iter()
            .map(|(k, v)| {
                STANDARD
                    .decode(v)
                    .map(|b| (k, b))
                    .map_err(serde::de::Error::custom)
            })
            .collect()
    }
}
