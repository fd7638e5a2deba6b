use std::borrow::Cow;
use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::finding::{FindingCode, ParseFinding, SourceLocation};

/// Relationship type declared in the third field of an ads.txt record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AccountType {
    Direct,
    Reseller,
}

impl AccountType {
    pub fn as_str(self) -> &'static str {
        match self {
            AccountType::Direct => "DIRECT",
            AccountType::Reseller => "RESELLER",
        }
    }

    fn parse(field: &str) -> Option<Self> {
        if field.eq_ignore_ascii_case("DIRECT") {
            Some(AccountType::Direct)
        } else if field.eq_ignore_ascii_case("RESELLER") {
            Some(AccountType::Reseller)
        } else {
            None
        }
    }
}

impl fmt::Display for AccountType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One authorized-seller declaration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdsTxtRecord {
    /// Lowercased advertising-system domain.
    pub ad_system_domain: String,
    /// Opaque seller account id, kept verbatim (case-sensitive).
    pub account_id: String,
    pub account_type: AccountType,
    pub cert_authority_id: Option<String>,
    /// 1-based line number in the source file.
    pub source_line: usize,
}

impl AdsTxtRecord {
    /// The analysis key. The certification authority id is deliberately not part of it.
    pub fn key(&self) -> (&str, &str, AccountType) {
        (&self.ad_system_domain, &self.account_id, self.account_type)
    }

    /// Canonical single-line rendering, re-parseable to an identical record.
    pub fn to_line(&self) -> String {
        match &self.cert_authority_id {
            Some(cert) => format!(
                "{}, {}, {}, {}",
                self.ad_system_domain, self.account_id, self.account_type, cert
            ),
            None => format!(
                "{}, {}, {}",
                self.ad_system_domain, self.account_id, self.account_type
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdsTxtVariable {
    /// Lowercased variable name (`contact`, `subdomain`, ...).
    pub key: String,
    pub value: String,
    pub source_line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdsTxtFile {
    pub publisher_domain: String,
    pub records: Vec<AdsTxtRecord>,
    pub variables: Vec<AdsTxtVariable>,
    pub parse_findings: Vec<ParseFinding>,
}

impl AdsTxtFile {
    /// Records first, then variables, one per line.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        for v in &self.variables {
            out.push_str(&v.key);
            out.push('=');
            out.push_str(&v.value);
            out.push('\n');
        }
        out
    }

    pub fn has_errors(&self) -> bool {
        self.parse_findings.iter().any(ParseFinding::is_error)
    }
}

/// Parses an ads.txt body.
///
/// Comment text after `#` is ignored, `key=value` lines become variables, and
/// IAB extension data after `;` is dropped. Malformed lines produce findings
/// and are skipped. Records with the same `(domain, account id, type)` key as
/// an earlier record are dropped with a warning.
pub fn parse_ads_txt(publisher_domain: &str, bytes: &[u8]) -> AdsTxtFile {
    let mut findings = Vec::new();
    let text = String::from_utf8_lossy(bytes);
    if let Cow::Owned(_) = text {
        findings.push(ParseFinding::warn(
            FindingCode::InvalidUtf8,
            SourceLocation::File,
            "invalid UTF-8 sequences replaced",
        ));
    }
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    let text = text.replace("\r\n", "\n").replace('\r', "\n");

    let mut records = Vec::new();
    let mut variables = Vec::new();
    let mut seen: HashSet<(String, String, AccountType)> = HashSet::new();

    for (idx, raw_line) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }

        let head = line.split(',').next().unwrap_or(line);
        if head.contains('=') {
            match parse_variable(line, line_no) {
                Ok(var) => variables.push(var),
                Err(f) => findings.push(f),
            }
            continue;
        }

        match parse_record(line, line_no, &mut findings) {
            Some(record) => {
                let key = (
                    record.ad_system_domain.clone(),
                    record.account_id.clone(),
                    record.account_type,
                );
                if seen.insert(key) {
                    records.push(record);
                } else {
                    findings.push(ParseFinding::warn(
                        FindingCode::DuplicateRecord,
                        SourceLocation::Line(line_no),
                        format!(
                            "duplicate record {}, {}, {}",
                            record.ad_system_domain, record.account_id, record.account_type
                        ),
                    ));
                }
            }
            None => continue,
        }
    }

    AdsTxtFile {
        publisher_domain: publisher_domain.to_lowercase(),
        records,
        variables,
        parse_findings: findings,
    }
}

fn parse_variable(line: &str, line_no: usize) -> Result<AdsTxtVariable, ParseFinding> {
    let (key, value) = line.split_once('=').expect("caller checked for '='");
    let key = key.trim();
    let valid_key = !key.is_empty()
        && key
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
    if !valid_key {
        return Err(ParseFinding::error(
            FindingCode::MalformedVariable,
            SourceLocation::Line(line_no),
            format!("malformed variable name `{key}`"),
        ));
    }
    Ok(AdsTxtVariable {
        key: key.to_ascii_lowercase(),
        value: value.trim().to_string(),
        source_line: line_no,
    })
}

fn parse_record(
    line: &str,
    line_no: usize,
    findings: &mut Vec<ParseFinding>,
) -> Option<AdsTxtRecord> {
    let loc = SourceLocation::Line(line_no);
    let body = match line.find(';') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let fields: Vec<&str> = body.split(',').map(str::trim).collect();
    if fields.len() < 3 {
        findings.push(ParseFinding::error(
            FindingCode::MissingFields,
            loc,
            format!("expected at least 3 fields, found {}", fields.len()),
        ));
        return None;
    }

    let domain = fields[0];
    if domain.is_empty() || domain.contains(char::is_whitespace) {
        findings.push(ParseFinding::error(
            FindingCode::InvalidDomain,
            loc,
            format!("invalid advertising system domain `{domain}`"),
        ));
        return None;
    }

    let account_id = fields[1];
    if account_id.is_empty() {
        findings.push(ParseFinding::error(
            FindingCode::EmptyAccountId,
            loc,
            "empty account id",
        ));
        return None;
    }
    if account_id.contains(char::is_whitespace) {
        findings.push(ParseFinding::error(
            FindingCode::MalformedAccountId,
            loc,
            format!("account id `{account_id}` contains whitespace"),
        ));
        return None;
    }

    let Some(account_type) = AccountType::parse(fields[2]) else {
        findings.push(ParseFinding::error(
            FindingCode::InvalidAccountType,
            loc,
            format!(
                "account type `{}` is neither DIRECT nor RESELLER",
                fields[2]
            ),
        ));
        return None;
    };

    let cert_authority_id = fields
        .get(3)
        .filter(|c| !c.is_empty())
        .map(|c| c.to_string());
    if fields.len() > 4 {
        findings.push(ParseFinding::warn(
            FindingCode::ExtraFields,
            loc.clone(),
            format!("{} fields, extra fields ignored", fields.len()),
        ));
    }

    Some(AdsTxtRecord {
        ad_system_domain: domain.to_lowercase(),
        account_id: account_id.to_string(),
        account_type,
        cert_authority_id,
        source_line: line_no,
    })
}
