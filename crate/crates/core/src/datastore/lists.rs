use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::parse_domain;
use crate::{Error, Result};

/// A plain list of domains, one per line, `#` comments allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainList {
    pub domains: BTreeSet<String>,
    pub source: String,
    /// Lines that were neither blank, comments, nor valid domains.
    pub skipped: usize,
}

impl DomainList {
    pub fn parse(text: &str, source: impl Into<String>) -> Self {
        let mut list = DomainList {
            source: source.into(),
            ..Default::default()
        };
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match parse_domain(line) {
                Some(d) => {
                    list.domains.insert(d);
                }
                None => list.skipped += 1,
            }
        }
        list
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::read_file(path, e))?;
        Ok(Self::parse(&text, path.display().to_string()))
    }

    pub fn contains(&self, domain: &str) -> bool {
        self.domains.contains(domain)
    }

    /// Hash of the sorted domain set, independent of source path and comments.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for d in &self.domains {
            h.update(d.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

/// Curated ad-system domains used to raise confidence in hidden-intermediary
/// findings.
pub type VerifiedNetworkList = DomainList;

/// Category of an objectionable website.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tag {
    FakeNews,
    Piracy,
    Illegal,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::FakeNews => "FAKE_NEWS",
            Tag::Piracy => "PIRACY",
            Tag::Illegal => "ILLEGAL",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectionableLists {
    pub misinformation: BTreeSet<String>,
    pub piracy: BTreeSet<String>,
    pub illegal: BTreeSet<String>,
    pub source_paths: Vec<String>,
    pub skipped: usize,
}

/// Paths of the three objectionable-site lists; any may be absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectionablePaths {
    pub misinformation: Option<PathBuf>,
    pub piracy: Option<PathBuf>,
    pub illegal: Option<PathBuf>,
}

pub fn load_objectionable_lists(paths: &ObjectionablePaths) -> Result<ObjectionableLists> {
    let mut out = ObjectionableLists::default();
    let slots = [
        (&paths.misinformation, &mut out.misinformation),
        (&paths.piracy, &mut out.piracy),
        (&paths.illegal, &mut out.illegal),
    ];
    let mut sources = Vec::new();
    let mut skipped = 0;
    for (path, set) in slots {
        if let Some(p) = path {
            let list = DomainList::load(p)?;
            skipped += list.skipped;
            sources.push(list.source);
            *set = list.domains;
        }
    }
    out.source_paths = sources;
    out.skipped = skipped;
    Ok(out)
}

impl ObjectionableLists {
    pub fn tags_for(&self, domain: &str) -> BTreeSet<Tag> {
        let mut tags = BTreeSet::new();
        if self.misinformation.contains(domain) {
            tags.insert(Tag::FakeNews);
        }
        if self.piracy.contains(domain) {
            tags.insert(Tag::Piracy);
        }
        if self.illegal.contains(domain) {
            tags.insert(Tag::Illegal);
        }
        tags
    }

    pub fn is_empty(&self) -> bool {
        self.misinformation.is_empty() && self.piracy.is_empty() && self.illegal.is_empty()
    }
}

/// Popularity ranks (1 = most popular).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTable {
    pub rank: BTreeMap<String, u64>,
    pub skipped: usize,
}

impl RankTable {
    /// Parses Tranco-style `rank,domain` rows. The first rank seen for a
    /// domain is kept; rows with a non-positive rank or bad domain are skipped.
    pub fn parse(text: &str) -> Self {
        let mut table = RankTable::default();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        for (i, row) in rdr.records().enumerate() {
            let parsed = row.ok().and_then(|r| {
                let rank = r.get(0)?.trim().parse::<u64>().ok().filter(|&n| n > 0)?;
                let domain = parse_domain(r.get(1)?)?;
                Some((rank, domain))
            });
            match parsed {
                Some((rank, domain)) => {
                    table.rank.entry(domain).or_insert(rank);
                }
                None if i == 0 => {}
                None => table.skipped += 1,
            }
        }
        table
    }

    pub fn get(&self, domain: &str) -> Option<u64> {
        self.rank.get(domain).copied()
    }

    pub fn max_rank(&self) -> u64 {
        self.rank.values().copied().max().unwrap_or(0)
    }
}

pub fn load_rank_table(path: &Path) -> Result<RankTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::read_file(path, e))?;
    Ok(RankTable::parse(&text))
}
