use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Warn,
    Error,
}

/// Closed set of finding codes emitted by the parsers and lints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingCode {
    /// Input contained invalid UTF-8; offending sequences were replaced.
    InvalidUtf8,
    /// ads.txt record line with fewer than three fields.
    MissingFields,
    /// First field is empty or contains whitespace.
    InvalidDomain,
    /// Second field is empty.
    EmptyAccountId,
    /// Account id contains whitespace.
    MalformedAccountId,
    /// Third field is neither DIRECT nor RESELLER.
    InvalidAccountType,
    /// More than four comma-separated fields; the extras are ignored.
    ExtraFields,
    /// Exact duplicate of an earlier record key; dropped.
    DuplicateRecord,
    /// `key=value` line with an empty or malformed key.
    MalformedVariable,
    /// sellers.json body is not valid object notation.
    InvalidJson,
    /// sellers.json body has no top-level `sellers` array.
    MissingSellersArray,
    /// Element of the sellers array is not an object.
    InvalidEntry,
    MissingSellerId,
    MissingSellerType,
    InvalidSellerType,
    /// `is_confidential` present but not a recognisable boolean.
    InvalidConfidentialFlag,
    /// Several entries share one seller_id.
    DuplicateSellerId,
    /// Non-confidential entry with neither name nor domain.
    UnderDisclosed,
    /// Several non-confidential entries claim one domain under different names.
    MultiClaimDomain,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::InvalidUtf8 => "invalid_utf8",
            FindingCode::MissingFields => "missing_fields",
            FindingCode::InvalidDomain => "invalid_domain",
            FindingCode::EmptyAccountId => "empty_account_id",
            FindingCode::MalformedAccountId => "malformed_account_id",
            FindingCode::InvalidAccountType => "invalid_account_type",
            FindingCode::ExtraFields => "extra_fields",
            FindingCode::DuplicateRecord => "duplicate_record",
            FindingCode::MalformedVariable => "malformed_variable",
            FindingCode::InvalidJson => "invalid_json",
            FindingCode::MissingSellersArray => "missing_sellers_array",
            FindingCode::InvalidEntry => "invalid_entry",
            FindingCode::MissingSellerId => "missing_seller_id",
            FindingCode::MissingSellerType => "missing_seller_type",
            FindingCode::InvalidSellerType => "invalid_seller_type",
            FindingCode::InvalidConfidentialFlag => "invalid_confidential_flag",
            FindingCode::DuplicateSellerId => "duplicate_seller_id",
            FindingCode::UnderDisclosed => "under_disclosed",
            FindingCode::MultiClaimDomain => "multi_claim_domain",
        }
    }
}

impl std::fmt::Display for FindingCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where in the input a finding points. Lines are 1-based, entries are
/// 0-based indexes into the `sellers` array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceLocation {
    File,
    Line(usize),
    Entry(usize),
    Entries(Vec<usize>),
}

impl std::fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceLocation::File => f.write_str("file"),
            SourceLocation::Line(n) => write!(f, "line {n}"),
            SourceLocation::Entry(i) => write!(f, "entry {i}"),
            SourceLocation::Entries(ix) => {
                let list: Vec<String> = ix.iter().map(|i| i.to_string()).collect();
                write!(f, "entries {}", list.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFinding {
    pub severity: Severity,
    pub code: FindingCode,
    pub message: String,
    pub location: SourceLocation,
}

impl ParseFinding {
    pub fn warn(code: FindingCode, location: SourceLocation, message: impl Into<String>) -> Self {
        ParseFinding {
            severity: Severity::Warn,
            code,
            message: message.into(),
            location,
        }
    }

    pub fn error(code: FindingCode, location: SourceLocation, message: impl Into<String>) -> Self {
        ParseFinding {
            severity: Severity::Error,
            code,
            message: message.into(),
            location,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}
