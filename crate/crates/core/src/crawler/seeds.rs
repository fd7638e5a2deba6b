use std::collections::BTreeMap;
use std::path::Path;

use crate::domain::parse_domain;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedList {
    /// Valid domains in file order, first occurrence kept.
    pub domains: Vec<String>,
    /// Non-empty, non-comment lines that did not yield a valid domain.
    pub skipped: usize,
}

/// Reads either a Tranco-style `rank,domain` CSV or one domain per line.
/// A header row and `#` comments are ignored.
pub fn parse_seed_text(text: &str) -> SeedList {
    let mut out = SeedList::default();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let field = match line.split_once(',') {
            Some((_, rest)) => rest.split(',').next().unwrap_or("").trim(),
            None => line,
        };
        match parse_domain(field) {
            Some(d) => {
                if seen.insert(d.clone()) {
                    out.domains.push(d);
                }
            }
            None if i == 0 => {}
            None => out.skipped += 1,
        }
    }
    out
}

pub fn load_seeds(path: &Path) -> Result<SeedList> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::read_file(path, e))?;
    Ok(parse_seed_text(&text))
}

/// Reads `domain url` pairs, one per line, `#` comments allowed.
pub fn load_aliases(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::read_file(path, e))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(domain), Some(url), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Config(format!(
                "{}:{}: expected `domain url`",
                path.display(),
                n + 1
            )));
        };
        let domain = parse_domain(domain).ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: bad domain `{domain}`",
                path.display(),
                n + 1
            ))
        })?;
        out.insert(domain, url.to_string());
    }
    Ok(out)
}
