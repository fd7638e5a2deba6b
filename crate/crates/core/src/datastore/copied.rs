use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::crawler::CrawlSnapshot;
use crate::domain::normalize_domain;
use crate::parser::{ContentHash, SellersFile};

/// Several serving domains returning byte-identical sellers.json bodies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopiedGroup {
    pub content_hash: ContentHash,
    pub domains: BTreeSet<String>,
    /// Domain named by the file's contact email, if any.
    pub contact_domain: Option<String>,
    /// The contact domain is not one of the serving domains.
    pub foreign_contact: bool,
    /// The group member the contact domain points at, if any. Its file is
    /// treated as the original.
    pub owner: Option<String>,
}

impl CopiedGroup {
    /// Members whose files are copies of someone else's.
    pub fn copies(&self) -> impl Iterator<Item = &String> {
        self.domains
            .iter()
            .filter(move |d| Some(d.as_str()) != self.owner.as_deref())
    }
}

fn contact_domain(file: &SellersFile) -> Option<String> {
    let email = file.contact_email.as_deref()?;
    let (_, host) = email.rsplit_once('@')?;
    let d = normalize_domain(host);
    (!d.is_empty()).then_some(d)
}

fn related(a: &str, b: &str) -> bool {
    a == b || a.ends_with(&format!(".{b}")) || b.ends_with(&format!(".{a}"))
}

/// Groups structurally valid, non-empty sellers.json files by the hash of
/// their raw bytes. Only groups of two or more domains are returned, ordered
/// by hash; each domain belongs to at most one group.
pub fn detect_copied_sellers_files(snapshot: &CrawlSnapshot) -> Vec<CopiedGroup> {
    let mut by_hash: BTreeMap<ContentHash, Vec<&SellersFile>> = BTreeMap::new();
    for file in snapshot.sellers_files.values() {
        if file.is_structurally_valid() && !file.entries.is_empty() {
            by_hash.entry(file.content_hash).or_default().push(file);
        }
    }
    by_hash
        .into_iter()
        .filter(|(_, files)| files.len() >= 2)
        .map(|(hash, files)| {
            let domains: BTreeSet<String> =
                files.iter().map(|f| f.serving_domain.clone()).collect();
            let contact = contact_domain(files[0]);
            let owner = contact.as_deref().and_then(|c| {
                domains
                    .iter()
                    .filter(|d| related(d, c))
                    .min_by_key(|d| (d.as_str() != c, d.len()))
                    .cloned()
            });
            CopiedGroup {
                content_hash: hash,
                foreign_contact: contact.is_some() && owner.is_none(),
                contact_domain: contact,
                domains,
                owner,
            }
        })
        .collect()
}

/// Serving domains whose sellers.json should be ignored by intermediary
/// analysis: every copy in every group (the owner's original is kept).
pub fn excluded_domains(groups: &[CopiedGroup]) -> BTreeSet<String> {
    groups.iter().flat_map(|g| g.copies().cloned()).collect()
}
