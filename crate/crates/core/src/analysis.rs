//! Runs every analysis over one sealed snapshot and keeps the results in a
//! single report that can be stored and reloaded.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datastore::{
    detect_copied_sellers_files, excluded_domains, load_objectionable_lists, load_rank_table,
    CopiedGroup, Datastore, DomainList, ObjectionableLists, ObjectionablePaths, RankTable,
    SealedSnapshot, Tag, VerifiedNetworkList,
};
use crate::intermediary::{
    build_relationship_graph, confidentiality_stats, detect_hidden_intermediaries,
    detect_type_mismatches, detect_unresolvable_intermediaries, flag_distributed_publisher_ids,
    indirect_clients, overall_confidentiality, without_content_owners, Confidentiality,
    DistributedId, HiddenIntermediaryFinding, HiddenIntermediaryRun, IndirectClients,
    MismatchReport, RelationshipGraph, UnresolvableIntermediary,
};
use crate::pooling::{
    build_pools, classify_dark_pools, flag_overused_direct_ids, ks_tagged_vs_untagged, pool_stats,
    popularity_strata, rank_participation_correlation, revenue_flow_graph, DarkPool, FlowGraph,
    OverusedId, Pool, PoolStats, Stratum,
};
use crate::stats::StatResult;
use crate::whois::{resolve_owners, OwnerResolution, PrivacyKeywordList, WhoisSource};
use crate::Result;

/// Everything an analysis depends on besides the snapshot itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisInputs {
    pub verified: VerifiedNetworkList,
    pub objectionable: ObjectionableLists,
    pub content_owners: DomainList,
    pub ranks: Option<RankTable>,
    /// Registrant resolution per pool member. Members without an entry are
    /// treated as MISSING.
    pub owners: BTreeMap<String, OwnerResolution>,
    pub overused_threshold: usize,
    pub distributed_threshold: usize,
    pub strata_interval: u64,
    /// Sites whose network edges are kept in the flow graph; empty keeps all.
    pub flow_focus: BTreeSet<String>,
}

impl Default for AnalysisInputs {
    fn default() -> Self {
        AnalysisInputs {
            verified: DomainList::default(),
            objectionable: ObjectionableLists::default(),
            content_owners: DomainList::default(),
            ranks: None,
            owners: BTreeMap::new(),
            overused_threshold: 10,
            distributed_threshold: 10,
            strata_interval: 100_000,
            flow_focus: BTreeSet::new(),
        }
    }
}

/// File locations of the analysis inputs. Absent lists are empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub verified_networks: Option<PathBuf>,
    pub misinformation: Option<PathBuf>,
    pub piracy: Option<PathBuf>,
    pub illegal: Option<PathBuf>,
    pub content_owners: Option<PathBuf>,
    pub ranks: Option<PathBuf>,
}

impl AnalysisInputs {
    /// Loads every list named in `paths`; thresholds keep their defaults.
    pub fn from_paths(paths: &InputPaths) -> Result<Self> {
        let list = |p: &Option<PathBuf>| -> Result<DomainList> {
            p.as_deref()
                .map_or_else(|| Ok(DomainList::default()), DomainList::load)
        };
        Ok(AnalysisInputs {
            verified: list(&paths.verified_networks)?,
            content_owners: list(&paths.content_owners)?,
            objectionable: load_objectionable_lists(&ObjectionablePaths {
                misinformation: paths.misinformation.clone(),
                piracy: paths.piracy.clone(),
                illegal: paths.illegal.clone(),
            })?,
            ranks: paths.ranks.as_deref().map(load_rank_table).transpose()?,
            ..Default::default()
        })
    }

    /// Stable hash of the inputs. Source paths and fetch times are ignored.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |label: &str, v: serde_json::Value| {
            h.update(label.as_bytes());
            h.update(v.to_string().as_bytes());
        };
        put("verified", serde_json::json!(self.verified.domains));
        put(
            "content_owners",
            serde_json::json!(self.content_owners.domains),
        );
        put(
            "objectionable",
            serde_json::json!([
                self.objectionable.misinformation,
                self.objectionable.piracy,
                self.objectionable.illegal
            ]),
        );
        put(
            "ranks",
            serde_json::json!(self.ranks.as_ref().map(|r| &r.rank)),
        );
        let owners: BTreeMap<&String, (&crate::whois::OwnerStatus, &Option<String>)> = self
            .owners
            .iter()
            .map(|(d, o)| (d, (&o.status, &o.normalized_org)))
            .collect();
        put("owners", serde_json::json!(owners));
        put(
            "params",
            serde_json::json!([
                self.overused_threshold,
                self.distributed_threshold,
                self.strata_interval,
                self.flow_focus
            ]),
        );
        hex::encode(h.finalize())
    }

    /// Resolves registrants for every member of every pool in `sealed` that
    /// has no entry yet.
    pub fn resolve_pool_owners(
        &mut self,
        sealed: &SealedSnapshot,
        source: &dyn WhoisSource,
        keywords: &PrivacyKeywordList,
    ) {
        let pools = build_pools(&sealed.index, None);
        let members: BTreeSet<&str> = pools
            .iter()
            .flat_map(|p| p.members.iter().map(String::as_str))
            .filter(|m| !self.owners.contains_key(*m))
            .collect();
        let resolved = resolve_owners(members, source, keywords);
        self.owners.extend(resolved);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub ads_files: usize,
    pub ads_records: usize,
    pub sellers_files: usize,
    pub seller_entries: usize,
    pub ads_failures: usize,
    pub sellers_failures: usize,
    pub graph_nodes: usize,
    pub graph_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub snapshot_id: String,
    pub inputs_digest: String,
    pub verified_digest: String,
    pub counts: CorpusCounts,
    pub copied_groups: Vec<CopiedGroup>,
    pub pools: Vec<Pool>,
    pub pool_stats: PoolStats,
    pub dark_pools: Vec<DarkPool>,
    pub strata: Vec<Stratum>,
    pub rank_participation: Option<StatResult>,
    /// Sizes of pools with a FAKE_NEWS member against all other pools.
    pub fake_news_pool_sizes: Option<StatResult>,
    pub overused_ids: Vec<OverusedId>,
    pub flows: FlowGraph,
    pub mismatches: MismatchReport,
    pub unresolvable: Vec<UnresolvableIntermediary>,
    pub confidentiality: BTreeMap<String, Confidentiality>,
    pub confidentiality_overall: Confidentiality,
    /// Every finding, before the content-owner allowlist.
    pub hidden_intermediaries: Vec<HiddenIntermediaryFinding>,
    /// Findings left after the content-owner allowlist.
    pub hidden_reported: Vec<HiddenIntermediaryFinding>,
    pub distributed_ids: Vec<DistributedId>,
    pub indirect_clients: BTreeMap<String, IndirectClients>,
}

impl AnalysisReport {
    pub fn hidden_run(&self) -> HiddenIntermediaryRun {
        HiddenIntermediaryRun {
            snapshot_id: self.snapshot_id.clone(),
            verified_digest: self.verified_digest.clone(),
            findings: self.hidden_reported.clone(),
        }
    }

    pub fn excluded_domains(&self) -> BTreeSet<String> {
        excluded_domains(&self.copied_groups)
    }
}

/// The relationship graph of `sealed` with copied files removed.
pub fn relationship_graph(sealed: &SealedSnapshot) -> RelationshipGraph {
    let groups = detect_copied_sellers_files(&sealed.snapshot);
    build_relationship_graph(&sealed.snapshot, &excluded_domains(&groups))
}

pub fn analyze(sealed: &SealedSnapshot, inputs: &AnalysisInputs) -> Result<AnalysisReport> {
    let snap = &sealed.snapshot;
    let index = &sealed.index;

    let copied_groups = detect_copied_sellers_files(snap);
    let excluded = excluded_domains(&copied_groups);
    let graph = build_relationship_graph(snap, &excluded);

    let pools = build_pools(index, Some(&inputs.objectionable));
    let stats = pool_stats(&pools, index);
    let dark_pools = classify_dark_pools(&pools, &inputs.owners);
    let (strata, rank_participation) = match &inputs.ranks {
        Some(r) => (
            popularity_strata(&pools, r, inputs.strata_interval)?,
            rank_participation_correlation(&pools, index, r),
        ),
        None => (Vec::new(), None),
    };
    let fake_news_pool_sizes = ks_tagged_vs_untagged(&pools, Tag::FakeNews);
    let overused_ids = flag_overused_direct_ids(index, inputs.overused_threshold)?;
    let flows = revenue_flow_graph(&pools, &inputs.flow_focus);

    let mismatches = detect_type_mismatches(index, &excluded);
    let unresolvable = detect_unresolvable_intermediaries(&graph, snap);
    let confidentiality = confidentiality_stats(&graph);
    let confidentiality_overall = overall_confidentiality(&confidentiality);
    let hidden = detect_hidden_intermediaries(&graph, &inputs.verified);
    let hidden_reported = without_content_owners(&hidden, &inputs.content_owners.domains);
    let distributed_ids =
        flag_distributed_publisher_ids(&graph, index, inputs.distributed_threshold)?;
    let indirect = indirect_clients(&hidden_reported, &graph, &inputs.objectionable);

    let counts = CorpusCounts {
        ads_files: snap.ads_files.len(),
        ads_records: index.record_count(),
        sellers_files: snap.sellers_files.len(),
        seller_entries: index.seller_entry_count(),
        ads_failures: snap.failures_for(crate::parser::FileKind::AdsTxt).count(),
        sellers_failures: snap
            .failures_for(crate::parser::FileKind::SellersJson)
            .count(),
        graph_nodes: graph.nodes.len(),
        graph_edges: graph.edges.len(),
    };

    Ok(AnalysisReport {
        snapshot_id: sealed.id().to_string(),
        inputs_digest: inputs.digest(),
        verified_digest: inputs.verified.digest(),
        counts,
        copied_groups,
        pools,
        pool_stats: stats,
        dark_pools,
        strata,
        rank_participation,
        fake_news_pool_sizes,
        overused_ids,
        flows,
        mismatches,
        unresolvable,
        confidentiality,
        confidentiality_overall,
        hidden_intermediaries: hidden,
        hidden_reported,
        distributed_ids,
        indirect_clients: indirect,
    })
}

/// Returns the stored report for `(snapshot, inputs)` or computes and stores
/// it. The flag is true when a new report was written.
pub fn materialize(
    store: &Datastore,
    snapshot_id: &str,
    inputs: &AnalysisInputs,
) -> Result<(AnalysisReport, bool)> {
    let digest = inputs.digest();
    if let Some(body) = store.load_analysis(snapshot_id, &digest)? {
        return Ok((serde_json::from_str(&body)?, false));
    }
    let sealed = store.sealed(snapshot_id)?;
    let report = analyze(&sealed, inputs)?;
    store.store_analysis(snapshot_id, &digest, &serde_json::to_string(&report)?)?;
    Ok((report, true))
}
