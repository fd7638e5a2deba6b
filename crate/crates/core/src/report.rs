//! CSV exports of an analysis report.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisReport;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Pools,
    DarkPools,
    Mismatches,
    HiddenIntermediaries,
    Confidentiality,
    OverusedIds,
    Flows,
}

impl ReportKind {
    pub const ALL: [ReportKind; 7] = [
        ReportKind::Pools,
        ReportKind::DarkPools,
        ReportKind::Mismatches,
        ReportKind::HiddenIntermediaries,
        ReportKind::Confidentiality,
        ReportKind::OverusedIds,
        ReportKind::Flows,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::Pools => "pools",
            ReportKind::DarkPools => "dark-pools",
            ReportKind::Mismatches => "mismatches",
            ReportKind::HiddenIntermediaries => "hidden-intermediaries",
            ReportKind::Confidentiality => "confidentiality",
            ReportKind::OverusedIds => "overused-ids",
            ReportKind::Flows => "flows",
        }
    }

    /// Number of items the report covers. For hidden intermediaries this is
    /// the number of findings; the CSV has one row per listing.
    pub fn item_count(self, r: &AnalysisReport) -> usize {
        match self {
            ReportKind::Pools => r.pools.len(),
            ReportKind::DarkPools => r.dark_pools.len(),
            ReportKind::Mismatches => r.mismatches.mismatches.len(),
            ReportKind::HiddenIntermediaries => r.hidden_reported.len(),
            ReportKind::Confidentiality => r.confidentiality.len(),
            ReportKind::OverusedIds => r.overused_ids.len(),
            ReportKind::Flows => r.flows.edges.len(),
        }
    }

    /// Number of data rows `write_report` produces.
    pub fn row_count(self, r: &AnalysisReport) -> usize {
        match self {
            ReportKind::HiddenIntermediaries => r
                .hidden_reported
                .iter()
                .map(|f| f.publisher_listings.len() + f.intermediary_listings.len())
                .sum(),
            other => other.item_count(r),
        }
    }
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown report kind {s:?}")))
    }
}

fn join<'a>(items: impl IntoIterator<Item = &'a String>) -> String {
    items
        .into_iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join(";")
}

/// Writes the report as CSV with a header row and returns the number of
/// data rows.
pub fn write_report(kind: ReportKind, r: &AnalysisReport, out: impl Write) -> Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    let mut rows = 0;
    match kind {
        ReportKind::Pools => {
            w.write_record([
                "network",
                "account_id",
                "size",
                "tags",
                "members",
                "reseller_declarers",
            ])?;
            for p in &r.pools {
                let tags: Vec<&str> = p.tags.iter().map(|t| t.as_str()).collect();
                w.write_record([
                    p.ad_system_domain.as_str(),
                    &p.account_id,
                    &p.size().to_string(),
                    &tags.join(";"),
                    &join(&p.members),
                    &join(&p.reseller_declarers),
                ])?;
                rows += 1;
            }
        }
        ReportKind::DarkPools => {
            w.write_record([
                "network",
                "account_id",
                "size",
                "owner_count",
                "owners",
                "resolved_members",
            ])?;
            for d in &r.dark_pools {
                w.write_record([
                    d.pool.ad_system_domain.as_str(),
                    &d.pool.account_id,
                    &d.pool.size().to_string(),
                    &d.distinct_owners.len().to_string(),
                    &join(&d.distinct_owners),
                    &join(&d.resolved_members),
                ])?;
                rows += 1;
            }
        }
        ReportKind::Mismatches => {
            w.write_record([
                "network",
                "account_id",
                "ads_type",
                "seller_type",
                "declarer_count",
                "declaring_publishers",
            ])?;
            for m in &r.mismatches.mismatches {
                w.write_record([
                    m.network.as_str(),
                    &m.account_id,
                    m.ads_type.as_str(),
                    m.seller_type.as_str(),
                    &m.declaring_publishers.len().to_string(),
                    &join(&m.declaring_publishers),
                ])?;
                rows += 1;
            }
        }
        ReportKind::HiddenIntermediaries => {
            w.write_record([
                "subject",
                "verified",
                "weak",
                "named_client_count",
                "role",
                "issuer",
                "seller_id",
                "seller_type",
            ])?;
            for f in &r.hidden_reported {
                let listings = f
                    .publisher_listings
                    .iter()
                    .map(|l| ("PUBLISHER", l))
                    .chain(f.intermediary_listings.iter().map(|l| ("INTERMEDIARY", l)));
                for (role, l) in listings {
                    w.write_record([
                        f.subject.as_str(),
                        &f.verified.to_string(),
                        &f.weak.to_string(),
                        &f.named_client_count.to_string(),
                        role,
                        &l.issuer,
                        &l.seller_id,
                        l.seller_type.as_str(),
                    ])?;
                    rows += 1;
                }
            }
        }
        ReportKind::Confidentiality => {
            w.write_record(["network", "total", "confidential", "fraction"])?;
            for (n, c) in &r.confidentiality {
                w.write_record([
                    n.as_str(),
                    &c.total.to_string(),
                    &c.confidential.to_string(),
                    &format!("{:.6}", c.fraction.value()),
                ])?;
                rows += 1;
            }
        }
        ReportKind::OverusedIds => {
            w.write_record([
                "network",
                "account_id",
                "declared_owner",
                "seller_type",
                "website_count",
            ])?;
            for o in &r.overused_ids {
                w.write_record([
                    o.network.as_str(),
                    &o.account_id,
                    o.declared_owner.as_deref().unwrap_or(""),
                    o.seller_type.map_or("", |t| t.as_str()),
                    &o.website_count.to_string(),
                ])?;
                rows += 1;
            }
        }
        ReportKind::Flows => {
            w.write_record(["network", "website", "weight"])?;
            for e in &r.flows.edges {
                w.write_record([e.network.as_str(), &e.website, &e.weight.to_string()])?;
                rows += 1;
            }
        }
    }
    w.flush()?;
    Ok(rows)
}
