use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::finding::{FindingCode, ParseFinding, SourceLocation};
use crate::domain::normalize_domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SellerType {
    Publisher,
    Intermediary,
    Both,
}

impl SellerType {
    pub fn as_str(self) -> &'static str {
        match self {
            SellerType::Publisher => "PUBLISHER",
            SellerType::Intermediary => "INTERMEDIARY",
            SellerType::Both => "BOTH",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PUBLISHER" => Some(SellerType::Publisher),
            "INTERMEDIARY" => Some(SellerType::Intermediary),
            "BOTH" => Some(SellerType::Both),
            _ => None,
        }
    }

    /// True for PUBLISHER and BOTH.
    pub fn acts_as_publisher(self) -> bool {
        matches!(self, SellerType::Publisher | SellerType::Both)
    }

    /// True for INTERMEDIARY and BOTH.
    pub fn acts_as_intermediary(self) -> bool {
        matches!(self, SellerType::Intermediary | SellerType::Both)
    }
}

impl fmt::Display for SellerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// SHA-256 of the raw fetched bytes. Serialized as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentHash(pub [u8; 32]);

impl ContentHash {
    pub fn of(bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        let mut out = [0u8; 32];
        out.copy_from_slice(digest.as_slice());
        ContentHash(out)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        let arr: [u8; 32] = bytes.try_into().ok()?;
        Some(ContentHash(arr))
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentHash({})", self.to_hex())
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for ContentHash {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ContentHash {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ContentHash::from_hex(&s).ok_or_else(|| serde::de::Error::custom("invalid content hash"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SellerEntry {
    pub seller_id: String,
    pub name: Option<String>,
    /// Lowercased domain, absent when the entry does not state one.
    pub domain: Option<String>,
    pub seller_type: SellerType,
    pub is_confidential: bool,
    /// Position in the source `sellers` array.
    pub index: usize,
}

impl SellerEntry {
    /// Non-confidential with a name or a domain.
    pub fn is_named(&self) -> bool {
        !self.is_confidential && (self.name.is_some() || self.domain.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SellersFile {
    pub serving_domain: String,
    pub version: Option<String>,
    pub contact_email: Option<String>,
    pub contact_address: Option<String>,
    pub entries: Vec<SellerEntry>,
    pub content_hash: ContentHash,
    pub parse_findings: Vec<ParseFinding>,
}

impl SellersFile {
    /// False when the body was not object notation with a `sellers` array.
    pub fn is_structurally_valid(&self) -> bool {
        !self.parse_findings.iter().any(|f| {
            matches!(
                f.code,
                FindingCode::InvalidJson | FindingCode::MissingSellersArray
            )
        })
    }

    pub fn has_named_client(&self) -> bool {
        self.entries.iter().any(SellerEntry::is_named)
    }
}

/// Parses a sellers.json body.
///
/// Unknown fields are ignored. `seller_id` may be a string or a number.
/// Entries lacking a usable `seller_id` or `seller_type` are dropped with an
/// ERROR finding. Structurally invalid input yields zero entries and exactly
/// one ERROR finding. The content hash is always computed over the raw bytes.
pub fn parse_sellers_json(serving_domain: &str, bytes: &[u8]) -> SellersFile {
    let content_hash = ContentHash::of(bytes);
    let mut file = SellersFile {
        serving_domain: serving_domain.to_lowercase(),
        version: None,
        contact_email: None,
        contact_address: None,
        entries: Vec::new(),
        content_hash,
        parse_findings: Vec::new(),
    };

    let text = String::from_utf8_lossy(bytes);
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            file.parse_findings.push(ParseFinding::error(
                FindingCode::InvalidJson,
                SourceLocation::File,
                format!("not valid JSON: {e}"),
            ));
            return file;
        }
    };
    let Some(obj) = root.as_object() else {
        file.parse_findings.push(ParseFinding::error(
            FindingCode::MissingSellersArray,
            SourceLocation::File,
            "top-level value is not an object",
        ));
        return file;
    };
    let Some(sellers) = obj.get("sellers").and_then(Value::as_array) else {
        file.parse_findings.push(ParseFinding::error(
            FindingCode::MissingSellersArray,
            SourceLocation::File,
            "no top-level `sellers` array",
        ));
        return file;
    };

    file.version = obj.get("version").and_then(scalar_string);
    file.contact_email = obj.get("contact_email").and_then(scalar_string);
    file.contact_address = obj.get("contact_address").and_then(scalar_string);

    for (index, item) in sellers.iter().enumerate() {
        let loc = SourceLocation::Entry(index);
        let Some(entry) = item.as_object() else {
            file.parse_findings.push(ParseFinding::error(
                FindingCode::InvalidEntry,
                loc,
                "entry is not an object",
            ));
            continue;
        };
        let Some(seller_id) = entry.get("seller_id").and_then(scalar_string) else {
            file.parse_findings.push(ParseFinding::error(
                FindingCode::MissingSellerId,
                loc,
                "entry has no seller_id",
            ));
            continue;
        };
        let seller_type = match entry.get("seller_type").and_then(Value::as_str) {
            None => {
                file.parse_findings.push(ParseFinding::error(
                    FindingCode::MissingSellerType,
                    loc,
                    format!("seller {seller_id} has no seller_type"),
                ));
                continue;
            }
            Some(raw) => match SellerType::parse(raw) {
                Some(t) => t,
                None => {
                    file.parse_findings.push(ParseFinding::error(
                        FindingCode::InvalidSellerType,
                        loc,
                        format!("seller {seller_id} has unknown seller_type `{raw}`"),
                    ));
                    continue;
                }
            },
        };
        let is_confidential = match entry.get("is_confidential") {
            None | Some(Value::Null) => false,
            Some(v) => match confidential_flag(v) {
                Some(b) => b,
                None => {
                    file.parse_findings.push(ParseFinding::warn(
                        FindingCode::InvalidConfidentialFlag,
                        loc,
                        format!("unrecognised is_confidential value {v}"),
                    ));
                    false
                }
            },
        };
        let name = entry.get("name").and_then(scalar_string);
        let domain = entry
            .get("domain")
            .and_then(Value::as_str)
            .map(normalize_domain)
            .filter(|d| !d.is_empty());

        file.entries.push(SellerEntry {
            seller_id,
            name,
            domain,
            seller_type,
            is_confidential,
            index,
        });
    }
    file
}

/// Non-empty trimmed string from a JSON string or number.
fn scalar_string(v: &Value) -> Option<String> {
    let s = match v {
        Value::String(s) => s.trim().to_string(),
        Value::Number(n) => n.to_string(),
        _ => return None,
    };
    (!s.is_empty()).then_some(s)
}

fn confidential_flag(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::Number(n) => match n.as_i64() {
            Some(0) => Some(false),
            Some(1) => Some(true),
            _ => None,
        },
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "0" | "false" => Some(false),
            "1" | "true" => Some(true),
            _ => None,
        },
        _ => None,
    }
}

/// Single-file rules: duplicate seller ids, under-disclosed non-confidential
/// entries, and one domain claimed by several differently named entries.
pub fn lint_sellers_file(file: &SellersFile) -> Vec<ParseFinding> {
    let mut findings = Vec::new();

    let mut by_id: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for e in &file.entries {
        by_id.entry(&e.seller_id).or_default().push(e.index);
    }
    for (id, indexes) in by_id.into_iter().filter(|(_, ix)| ix.len() > 1) {
        findings.push(ParseFinding::error(
            FindingCode::DuplicateSellerId,
            SourceLocation::Entries(indexes.clone()),
            format!("seller_id {id} appears {} times", indexes.len()),
        ));
    }

    for e in &file.entries {
        if !e.is_confidential && e.name.is_none() && e.domain.is_none() {
            findings.push(ParseFinding::warn(
                FindingCode::UnderDisclosed,
                SourceLocation::Entry(e.index),
                format!(
                    "seller {} is not confidential but discloses neither name nor domain",
                    e.seller_id
                ),
            ));
        }
    }

    let mut by_domain: BTreeMap<&str, Vec<&SellerEntry>> = BTreeMap::new();
    for e in file.entries.iter().filter(|e| !e.is_confidential) {
        if let Some(d) = &e.domain {
            by_domain.entry(d).or_default().push(e);
        }
    }
    for (domain, claims) in by_domain {
        let names: BTreeSet<Option<String>> = claims
            .iter()
            .map(|e| e.name.as_ref().map(|n| n.to_lowercase()))
            .collect();
        if names.len() < 2 {
            continue;
        }
        findings.push(ParseFinding::error(
            FindingCode::MultiClaimDomain,
            SourceLocation::Entries(claims.iter().map(|e| e.index).collect()),
            format!(
                "{} entries claim {domain} under {} different names",
                claims.len(),
                names.len()
            ),
        ));
    }
    findings
}
