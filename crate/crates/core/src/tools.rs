//! The lookup tools exposed by the HTTP API, as plain functions over an
//! analysed snapshot.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, relationship_graph, AnalysisInputs, AnalysisReport, CorpusCounts};
use crate::datastore::{AccountLookup, Datastore, SealedSnapshot, VerifiedNetworkList};
use crate::domain::parse_domain;
use crate::intermediary::{
    evaluate_hidden_intermediary, Confidentiality, HiddenEvaluation, HiddenIntermediaryFinding,
    RelationshipGraph,
};
use crate::parser::{AccountType, SellerType};
use crate::pooling::{OverusedId, Pool};
use crate::stats::Fraction;
use crate::{Error, Result};

/// A sealed snapshot with its analysis and relationship graph.
#[derive(Debug, Clone)]
pub struct Analyzed {
    pub sealed: SealedSnapshot,
    pub report: Arc<AnalysisReport>,
    pub graph: Arc<RelationshipGraph>,
    pub verified: Arc<VerifiedNetworkList>,
}

impl Analyzed {
    pub fn new(
        sealed: SealedSnapshot,
        report: AnalysisReport,
        verified: VerifiedNetworkList,
    ) -> Self {
        let graph = relationship_graph(&sealed);
        Analyzed {
            sealed,
            report: Arc::new(report),
            graph: Arc::new(graph),
            verified: Arc::new(verified),
        }
    }

    /// Loads the stored report for these inputs, else the snapshot's most
    /// recent stored report, else computes one in memory.
    pub fn load(store: &Datastore, snapshot_id: &str, inputs: &AnalysisInputs) -> Result<Self> {
        let sealed = store.sealed(snapshot_id)?;
        let stored = match store.load_analysis(snapshot_id, &inputs.digest())? {
            Some(body) => Some(body),
            None => store.latest_analysis(snapshot_id)?,
        };
        let report = match stored {
            Some(body) => serde_json::from_str(&body)?,
            None => analyze(&sealed, inputs)?,
        };
        Ok(Analyzed::new(sealed, report, inputs.verified.clone()))
    }

    pub fn snapshot_id(&self) -> &str {
        self.sealed.id()
    }
}

pub fn validate_domain(raw: &str) -> Result<String> {
    parse_domain(raw).ok_or_else(|| Error::InvalidInput(format!("not a valid domain: {raw:?}")))
}

pub fn validate_account_id(raw: &str) -> Result<String> {
    if raw.is_empty()
        || raw.len() > 256
        || raw
            .chars()
            .any(|c| c.is_whitespace() || c.is_control() || c == ',')
    {
        return Err(Error::InvalidInput(format!(
            "not a valid account id: {raw:?}"
        )));
    }
    Ok(raw.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolingResult {
    #[serde(flatten)]
    pub lookup: AccountLookup,
    pub pool: Option<Pool>,
    /// Publishers declaring the key as RESELLER while others declare it DIRECT.
    pub reseller_discrepancy: BTreeSet<String>,
}

pub fn pooling_lookup(a: &Analyzed, network: &str, account_id: &str) -> Result<PoolingResult> {
    let network = validate_domain(network)?;
    let account_id = validate_account_id(account_id)?;
    let lookup = a.sealed.lookup_account(&network, &account_id);
    let pool = a
        .report
        .pools
        .binary_search_by(|p| {
            (p.ad_system_domain.as_str(), p.account_id.as_str()).cmp(&(&network, &account_id))
        })
        .ok()
        .map(|i| a.report.pools[i].clone());
    let reseller_discrepancy = if lookup.direct_declarers.is_empty() {
        BTreeSet::new()
    } else {
        lookup
            .reseller_declarers
            .difference(&lookup.direct_declarers)
            .cloned()
            .collect()
    };
    Ok(PoolingResult {
        lookup,
        pool,
        reseller_discrepancy,
    })
}

pub fn hidden_intermediary_lookup(a: &Analyzed, domain: &str) -> Result<HiddenEvaluation> {
    let domain = validate_domain(domain)?;
    Ok(evaluate_hidden_intermediary(&a.graph, &domain, &a.verified))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SharedKey {
    pub network: String,
    pub account_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartnershipResult {
    pub query_domain: String,
    pub partners: BTreeMap<String, Vec<SharedKey>>,
}

/// Websites sharing at least one DIRECT key with `domain`.
pub fn partnerships(a: &Analyzed, domain: &str) -> Result<PartnershipResult> {
    let domain = validate_domain(domain)?;
    let index = &a.sealed.index;
    let mut partners: BTreeMap<String, BTreeSet<SharedKey>> = BTreeMap::new();
    let own: BTreeSet<(&str, &str)> = index
        .by_publisher
        .get(&domain)
        .into_iter()
        .flatten()
        .filter(|r| r.account_type == AccountType::Direct)
        .map(|r| (r.ad_system_domain.as_str(), r.account_id.as_str()))
        .collect();
    for (network, id) in own {
        let Some(declarers) = index.by_account.get(&(network.to_string(), id.to_string())) else {
            continue;
        };
        for (p, t) in declarers {
            if *t == AccountType::Direct && *p != domain {
                partners.entry(p.clone()).or_default().insert(SharedKey {
                    network: network.to_string(),
                    account_id: id.to_string(),
                });
            }
        }
    }
    Ok(PartnershipResult {
        query_domain: domain,
        partners: partners
            .into_iter()
            .map(|(p, keys)| (p, keys.into_iter().collect()))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClaimedNetwork {
    pub network: String,
    pub account_id: String,
    pub ads_type: AccountType,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AcknowledgingNetwork {
    pub network: String,
    pub seller_id: String,
    pub seller_type: SellerType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipResult {
    pub domain: String,
    /// Keys from the domain's own ads.txt.
    pub claimed_networks: Vec<ClaimedNetwork>,
    /// Networks whose sellers.json lists the domain.
    pub acknowledging_networks: Vec<AcknowledgingNetwork>,
}

pub fn relationships(a: &Analyzed, domain: &str) -> Result<RelationshipResult> {
    let domain = validate_domain(domain)?;
    let claimed: BTreeSet<ClaimedNetwork> = a
        .sealed
        .index
        .by_publisher
        .get(&domain)
        .into_iter()
        .flatten()
        .map(|r| ClaimedNetwork {
            network: r.ad_system_domain.clone(),
            account_id: r.account_id.clone(),
            ads_type: r.account_type,
        })
        .collect();
    let acknowledging: BTreeSet<AcknowledgingNetwork> = a
        .graph
        .edges_to(&domain)
        .map(|e| AcknowledgingNetwork {
            network: e.issuer.clone(),
            seller_id: e.seller_id.clone(),
            seller_type: e.seller_type,
        })
        .collect();
    Ok(RelationshipResult {
        domain,
        claimed_networks: claimed.into_iter().collect(),
        acknowledging_networks: acknowledging.into_iter().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub network: String,
    pub account_id: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenSummary {
    pub subject: String,
    pub publisher_listings: usize,
    pub intermediary_listings: usize,
    pub verified: bool,
}

/// Verified hidden-intermediary count of one analysed snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub snapshot_id: String,
    pub started_at: String,
    pub verified_hidden_intermediaries: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub counts: CorpusCounts,
    pub pool_count: usize,
    pub pool_mean: Fraction,
    pub pool_median: Fraction,
    pub dark_pool_count: usize,
    pub mismatch_count: usize,
    pub unacknowledged_count: usize,
    pub copied_group_count: usize,
    pub unresolvable_count: usize,
    pub hidden_intermediary_count: usize,
    pub verified_hidden_intermediary_count: usize,
    pub distributed_id_count: usize,
    pub confidentiality: Confidentiality,
    pub top_overused_ids: Vec<OverusedId>,
    pub top_pools: Vec<PoolSummary>,
    pub top_hidden_intermediaries: Vec<HiddenSummary>,
    pub verified_hidden_series: Vec<SeriesPoint>,
}

impl Default for CorpusStats {
    fn default() -> Self {
        CorpusStats {
            counts: CorpusCounts::default(),
            pool_count: 0,
            pool_mean: Fraction::zero(),
            pool_median: Fraction::zero(),
            dark_pool_count: 0,
            mismatch_count: 0,
            unacknowledged_count: 0,
            copied_group_count: 0,
            unresolvable_count: 0,
            hidden_intermediary_count: 0,
            verified_hidden_intermediary_count: 0,
            distributed_id_count: 0,
            confidentiality: Confidentiality {
                total: 0,
                confidential: 0,
                fraction: Fraction::zero(),
            },
            top_overused_ids: Vec::new(),
            top_pools: Vec::new(),
            top_hidden_intermediaries: Vec::new(),
            verified_hidden_series: Vec::new(),
        }
    }
}

fn hidden_summary(f: &HiddenIntermediaryFinding) -> HiddenSummary {
    HiddenSummary {
        subject: f.subject.clone(),
        publisher_listings: f.publisher_listings.len(),
        intermediary_listings: f.intermediary_listings.len(),
        verified: f.verified,
    }
}

/// Corpus aggregates of one report with `top_n` rows per table.
pub fn corpus_stats(report: &AnalysisReport, top_n: usize) -> CorpusStats {
    let mut top_pools: Vec<PoolSummary> = report
        .pools
        .iter()
        .map(|p| PoolSummary {
            network: p.ad_system_domain.clone(),
            account_id: p.account_id.clone(),
            size: p.size(),
        })
        .collect();
    top_pools.sort_by(|a, b| {
        b.size
            .cmp(&a.size)
            .then_with(|| (&a.network, &a.account_id).cmp(&(&b.network, &b.account_id)))
    });
    top_pools.truncate(top_n);

    let mut top_hidden: Vec<HiddenSummary> =
        report.hidden_reported.iter().map(hidden_summary).collect();
    top_hidden.sort_by(|a, b| {
        (b.verified, b.publisher_listings)
            .cmp(&(a.verified, a.publisher_listings))
            .then_with(|| a.subject.cmp(&b.subject))
    });
    top_hidden.truncate(top_n);

    CorpusStats {
        counts: report.counts.clone(),
        pool_count: report.pool_stats.pool_count,
        pool_mean: report.pool_stats.mean,
        pool_median: report.pool_stats.median,
        dark_pool_count: report.dark_pools.len(),
        mismatch_count: report.mismatches.mismatches.len(),
        unacknowledged_count: report.mismatches.unacknowledged.len(),
        copied_group_count: report.copied_groups.len(),
        unresolvable_count: report.unresolvable.len(),
        hidden_intermediary_count: report.hidden_reported.len(),
        verified_hidden_intermediary_count: report
            .hidden_reported
            .iter()
            .filter(|f| f.verified)
            .count(),
        distributed_id_count: report.distributed_ids.len(),
        confidentiality: report.confidentiality_overall.clone(),
        top_overused_ids: report.overused_ids.iter().take(top_n).cloned().collect(),
        top_pools,
        top_hidden_intermediaries: top_hidden,
        verified_hidden_series: Vec::new(),
    }
}

/// Verified hidden-intermediary counts of every snapshot that has a stored
/// analysis for `inputs`, oldest first.
pub fn verified_hidden_series(
    store: &Datastore,
    inputs: &AnalysisInputs,
) -> Result<Vec<SeriesPoint>> {
    let digest = inputs.digest();
    let mut out = Vec::new();
    for info in store.list_snapshots()? {
        if let Some(body) = store.load_analysis(&info.snapshot_id, &digest)? {
            let report: AnalysisReport = serde_json::from_str(&body)?;
            out.push(SeriesPoint {
                snapshot_id: info.snapshot_id.clone(),
                started_at: info.started_at.to_rfc3339(),
                verified_hidden_intermediaries: report
                    .hidden_reported
                    .iter()
                    .filter(|f| f.verified)
                    .count(),
            });
        }
    }
    Ok(out)
}
