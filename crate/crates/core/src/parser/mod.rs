//! Parsers for the two supply-chain transparency formats.
//!
//! Both parsers are total: any byte sequence yields a typed file plus a list
//! of [`ParseFinding`]s. Nothing here aborts on malformed input.

mod ads_txt;
mod finding;
mod sellers_json;

pub use ads_txt::{parse_ads_txt, AccountType, AdsTxtFile, AdsTxtRecord, AdsTxtVariable};
pub use finding::{FindingCode, ParseFinding, Severity, SourceLocation};
pub use sellers_json::{
    lint_sellers_file, parse_sellers_json, ContentHash, SellerEntry, SellerType, SellersFile,
};

/// Which of the two file formats a document is.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
pub enum FileKind {
    #[serde(rename = "ads.txt")]
    AdsTxt,
    #[serde(rename = "sellers.json")]
    SellersJson,
}

impl FileKind {
    /// Root path the file is served from.
    pub fn path(self) -> &'static str {
        match self {
            FileKind::AdsTxt => "/ads.txt",
            FileKind::SellersJson => "/sellers.json",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FileKind::AdsTxt => "ads.txt",
            FileKind::SellersJson => "sellers.json",
        }
    }
}

impl std::str::FromStr for FileKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ads.txt" | "ads" | "ads_txt" | "adstxt" => Ok(FileKind::AdsTxt),
            "sellers.json" | "sellers" | "sellers_json" => Ok(FileKind::SellersJson),
            other => Err(crate::Error::InvalidInput(format!(
                "unknown file kind `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for FileKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A parsed document of either kind.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", content = "file")]
pub enum ParsedFile {
    #[serde(rename = "ads.txt")]
    AdsTxt(AdsTxtFile),
    #[serde(rename = "sellers.json")]
    SellersJson(SellersFile),
}

impl ParsedFile {
    pub fn parse(kind: FileKind, domain: &str, bytes: &[u8]) -> Self {
        match kind {
            FileKind::AdsTxt => ParsedFile::AdsTxt(parse_ads_txt(domain, bytes)),
            FileKind::SellersJson => ParsedFile::SellersJson(parse_sellers_json(domain, bytes)),
        }
    }

    /// Parse findings plus, for sellers.json, the single-file lint results.
    pub fn all_findings(&self) -> Vec<ParseFinding> {
        match self {
            ParsedFile::AdsTxt(f) => f.parse_findings.clone(),
            ParsedFile::SellersJson(f) => {
                let mut out = f.parse_findings.clone();
                out.extend(lint_sellers_file(f));
                out
            }
        }
    }
}
