//! WHOIS registrant extraction and owner resolution.
//!
//! Owners are compared by a normalised organisation name (lowercase with
//! collapsed whitespace). Records whose registrant data is privacy-redacted,
//! missing, unparseable or too short never resolve to an owner.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::crawler::TransportMode;
use crate::{Error, Result};

const DEFAULT_KEYWORDS: &str = include_str!("../data/privacy_keywords.txt");

/// Keys whose value names the registrant organisation, most specific first.
pub const DEFAULT_ORG_KEYS: &[&str] = &[
    "registrant organization",
    "registrant organisation",
    "registrant org",
    "registrant company",
    "registrant",
    "org",
    "organization",
    "organisation",
    "owner",
    "holder",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhoisRecord {
    pub domain: String,
    pub raw_text: String,
    pub registrant_org: Option<String>,
    pub fetched_at: Option<DateTime<Utc>>,
}

impl WhoisRecord {
    pub fn new(domain: &str, raw_text: String, parser: &WhoisParser) -> Self {
        let registrant_org = parser.parse(&raw_text);
        WhoisRecord {
            domain: domain.to_string(),
            raw_text,
            registrant_org,
            fetched_at: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OwnerStatus {
    Resolved,
    Redacted,
    Unparseable,
    TooShort,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnerResolution {
    pub domain: String,
    pub status: OwnerStatus,
    /// Present iff `status` is RESOLVED.
    pub normalized_org: Option<String>,
}

impl OwnerResolution {
    fn unresolved(domain: &str, status: OwnerStatus) -> Self {
        OwnerResolution {
            domain: domain.to_string(),
            status,
            normalized_org: None,
        }
    }

    pub fn resolved(domain: &str, org: &str) -> Self {
        OwnerResolution {
            domain: domain.to_string(),
            status: OwnerStatus::Resolved,
            normalized_org: Some(normalize_org(org)),
        }
    }
}

/// Lowercase, trim and collapse internal whitespace. Idempotent.
pub fn normalize_org(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyKeywordList {
    pub keywords: Vec<String>,
}

impl PrivacyKeywordList {
    pub fn parse(text: &str) -> Self {
        let mut keywords: Vec<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .map(normalize_org)
            .filter(|l| !l.is_empty())
            .collect();
        keywords.sort();
        keywords.dedup();
        PrivacyKeywordList { keywords }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::read_file(path, e))?;
        let list = Self::parse(&text);
        if list.keywords.is_empty() {
            return Err(Error::Config(format!(
                "{} lists no keywords",
                path.display()
            )));
        }
        Ok(list)
    }

    /// The list shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_KEYWORDS)
    }

    pub fn matches(&self, text: &str) -> bool {
        let t = normalize_org(text);
        self.keywords.iter().any(|k| t.contains(k.as_str()))
    }
}

impl Default for PrivacyKeywordList {
    fn default() -> Self {
        Self::builtin()
    }
}

/// One `key: value` (or `[key] value`) line with the key lowercased and
/// trailing dots removed. A bare `Key:` line takes the value of the next
/// non-blank line when that line is indented.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Field {
    key: String,
    value: String,
}

fn fields(raw: &str) -> Vec<Field> {
    let lines: Vec<&str> = raw.lines().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        i += 1;
        let trimmed = line.trim();
        if trimmed.is_empty()
            || trimmed.starts_with('%')
            || trimmed.starts_with('#')
            || trimmed.starts_with(">>>")
        {
            continue;
        }
        // JPRS prefixes bracketed keys with a letter: `g. [Organization]`.
        let trimmed = match trimmed.as_bytes() {
            [c, b'.', b' ', ..]
                if c.is_ascii_lowercase() && trimmed[3..].trim_start().starts_with('[') =>
            {
                trimmed[3..].trim_start()
            }
            _ => trimmed,
        };
        let (key, value) = if let Some(rest) = trimmed.strip_prefix('[') {
            match rest.split_once(']') {
                Some((k, v)) => (k, v),
                None => continue,
            }
        } else {
            match trimmed.split_once(':') {
                Some((k, v)) if !v.starts_with("//") => (k, v),
                _ => continue,
            }
        };
        let key = normalize_org(key.trim_end_matches(['.', ' ']));
        let mut value = value.trim().to_string();
        if value.is_empty() {
            // Nominet style: header line, value indented on the next line.
            while i < lines.len() && lines[i].trim().is_empty() {
                i += 1;
            }
            if i < lines.len() && lines[i].starts_with([' ', '\t']) && !lines[i].contains(':') {
                value = lines[i].trim().to_string();
                i += 1;
            }
        }
        if !key.is_empty() {
            out.push(Field { key, value });
        }
    }
    out
}

/// Registrant-organisation extractor with a configurable key set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhoisParser {
    keys: Vec<String>,
}

impl Default for WhoisParser {
    fn default() -> Self {
        WhoisParser::new(DEFAULT_ORG_KEYS.iter().map(|s| s.to_string()))
    }
}

impl WhoisParser {
    pub fn new(keys: impl IntoIterator<Item = String>) -> Self {
        WhoisParser {
            keys: keys.into_iter().map(|k| normalize_org(&k)).collect(),
        }
    }

    /// Value of the first line whose key is in the key set, scanning keys in
    /// priority order. Blank values are skipped.
    pub fn parse(&self, raw: &str) -> Option<String> {
        let fields = fields(raw);
        self.keys.iter().find_map(|key| {
            fields
                .iter()
                .find(|f| &f.key == key && !f.value.is_empty())
                .map(|f| f.value.clone())
        })
    }
}

/// [`WhoisParser::parse`] with the default key set.
pub fn parse_whois(raw: &str) -> Option<String> {
    WhoisParser::default().parse(raw)
}

/// Text of every field whose key starts with `registrant`.
fn registrant_block(raw: &str) -> String {
    fields(raw)
        .into_iter()
        .filter(|f| f.key.starts_with("registrant"))
        .map(|f| f.value)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Classifies a record. Checks run in order: MISSING (no text), REDACTED
/// (keyword in the extracted organisation or the registrant fields),
/// UNPARSEABLE (no organisation), TOO_SHORT (under 3 characters), RESOLVED.
pub fn resolve_owner(record: &WhoisRecord, keywords: &PrivacyKeywordList) -> OwnerResolution {
    if record.raw_text.trim().is_empty() && record.registrant_org.is_none() {
        return OwnerResolution::unresolved(&record.domain, OwnerStatus::Missing);
    }
    let org = record.registrant_org.as_deref().map(normalize_org);
    let redacted = org.as_deref().is_some_and(|o| keywords.matches(o))
        || keywords.matches(&registrant_block(&record.raw_text));
    if redacted {
        return OwnerResolution::unresolved(&record.domain, OwnerStatus::Redacted);
    }
    match org {
        None => OwnerResolution::unresolved(&record.domain, OwnerStatus::Unparseable),
        Some(o) if o.is_empty() => {
            OwnerResolution::unresolved(&record.domain, OwnerStatus::Unparseable)
        }
        Some(o) if o.chars().count() < 3 => {
            OwnerResolution::unresolved(&record.domain, OwnerStatus::TooShort)
        }
        Some(o) => OwnerResolution {
            domain: record.domain.clone(),
            status: OwnerStatus::Resolved,
            normalized_org: Some(o),
        },
    }
}

/// Where WHOIS records come from.
pub trait WhoisSource: Send + Sync {
    fn lookup(&self, domain: &str) -> Option<WhoisRecord>;
    fn mode(&self) -> TransportMode;
}

/// Reads `<dir>/<domain>.txt`.
#[derive(Debug, Clone)]
pub struct FixtureWhois {
    dir: PathBuf,
    parser: WhoisParser,
}

impl FixtureWhois {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureWhois {
            dir: dir.into(),
            parser: WhoisParser::default(),
        }
    }

    pub fn with_parser(mut self, parser: WhoisParser) -> Self {
        self.parser = parser;
        self
    }
}

impl WhoisSource for FixtureWhois {
    fn lookup(&self, domain: &str) -> Option<WhoisRecord> {
        if domain.contains(['/', '\\']) || domain.contains("..") {
            return None;
        }
        let raw = std::fs::read(self.dir.join(format!("{domain}.txt"))).ok()?;
        let raw = String::from_utf8_lossy(&raw).into_owned();
        Some(WhoisRecord::new(domain, raw, &self.parser))
    }

    fn mode(&self) -> TransportMode {
        TransportMode::Fixture
    }
}

/// Port-43 client: asks whois.iana.org for the TLD's server, then queries it.
#[derive(Debug, Clone)]
pub struct LiveWhois {
    timeout: Duration,
    parser: WhoisParser,
}

impl LiveWhois {
    pub fn new(timeout: Duration) -> Self {
        LiveWhois {
            timeout,
            parser: WhoisParser::default(),
        }
    }

    fn query(&self, server: &str, q: &str) -> std::io::Result<String> {
        use std::net::ToSocketAddrs;
        let addr = (server, 43)
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::NotFound, "no address"))?;
        let mut s = TcpStream::connect_timeout(&addr, self.timeout)?;
        s.set_read_timeout(Some(self.timeout))?;
        s.set_write_timeout(Some(self.timeout))?;
        s.write_all(format!("{q}\r\n").as_bytes())?;
        let mut buf = Vec::new();
        s.take(1 << 20).read_to_end(&mut buf)?;
        Ok(String::from_utf8_lossy(&buf).into_owned())
    }
}

impl WhoisSource for LiveWhois {
    fn lookup(&self, domain: &str) -> Option<WhoisRecord> {
        let tld = domain.rsplit('.').next()?;
        let iana = self.query("whois.iana.org", tld).ok()?;
        let server = fields(&iana)
            .into_iter()
            .find(|f| f.key == "refer" || f.key == "whois")
            .map(|f| f.value)?;
        let raw = self.query(&server, domain).ok()?;
        let mut rec = WhoisRecord::new(domain, raw, &self.parser);
        rec.fetched_at = Some(Utc::now());
        Some(rec)
    }

    fn mode(&self) -> TransportMode {
        TransportMode::Live
    }
}

/// Resolves every domain; domains without a record are MISSING.
pub fn resolve_owners<'a>(
    domains: impl IntoIterator<Item = &'a str>,
    source: &dyn WhoisSource,
    keywords: &PrivacyKeywordList,
) -> BTreeMap<String, OwnerResolution> {
    domains
        .into_iter()
        .map(|d| {
            let res = match source.lookup(d) {
                Some(rec) => resolve_owner(&rec, keywords),
                None => OwnerResolution::unresolved(d, OwnerStatus::Missing),
            };
            (d.to_string(), res)
        })
        .collect()
}
