//! Cross-network analysis over sellers.json data: the relationship graph,
//! ads.txt/sellers.json type mismatches, unresolvable intermediaries,
//! confidentiality, hidden intermediaries and changes between snapshots.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crawler::CrawlSnapshot;
use crate::datastore::{EntryIndex, ObjectionableLists, VerifiedNetworkList};
use crate::parser::{AccountType, FileKind, SellerType};
use crate::stats::Fraction;
use crate::{Error, Result};

/// One sellers.json entry that names its subject's domain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub issuer: String,
    pub subject: String,
    pub seller_id: String,
    pub seller_type: SellerType,
    pub confidential: bool,
    /// Position of the entry in the issuer's file.
    pub entry_index: usize,
}

/// Summary of one network's own sellers.json file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuerSummary {
    pub entries: usize,
    pub confidential: usize,
    /// Confidential entries without a domain. They produce no edge.
    pub confidential_without_domain: usize,
    /// Non-confidential entries carrying a name or a domain.
    pub named_clients: usize,
    pub structurally_valid: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipGraph {
    pub snapshot_id: String,
    pub nodes: BTreeSet<String>,
    /// Sorted by (issuer, subject, seller_id).
    pub edges: Vec<Edge>,
    /// Networks whose file was kept after copied-file exclusion.
    pub issuers: BTreeMap<String, IssuerSummary>,
    /// Serving domains dropped as copies of another network's file.
    pub excluded: BTreeSet<String>,
}

impl RelationshipGraph {
    pub fn edges_to<'a>(&'a self, subject: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.subject == subject)
    }

    pub fn edges_from<'a>(&'a self, issuer: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        let start = self.edges.partition_point(|e| e.issuer.as_str() < issuer);
        self.edges[start..]
            .iter()
            .take_while(move |e| e.issuer == issuer)
    }

    fn incoming(&self) -> BTreeMap<&str, Vec<&Edge>> {
        let mut map: BTreeMap<&str, Vec<&Edge>> = BTreeMap::new();
        for e in &self.edges {
            map.entry(e.subject.as_str()).or_default().push(e);
        }
        map
    }
}

/// Builds the graph from every sellers.json file not in `excluded`.
pub fn build_relationship_graph(
    snapshot: &CrawlSnapshot,
    excluded: &BTreeSet<String>,
) -> RelationshipGraph {
    let mut g = RelationshipGraph {
        snapshot_id: snapshot.snapshot_id.clone(),
        excluded: excluded.clone(),
        ..Default::default()
    };
    for (network, file) in &snapshot.sellers_files {
        if excluded.contains(network) {
            continue;
        }
        g.nodes.insert(network.clone());
        let mut summary = IssuerSummary {
            entries: file.entries.len(),
            structurally_valid: file.is_structurally_valid(),
            ..Default::default()
        };
        for e in &file.entries {
            if e.is_confidential {
                summary.confidential += 1;
            }
            if e.is_named() {
                summary.named_clients += 1;
            }
            match &e.domain {
                Some(subject) => {
                    g.nodes.insert(subject.clone());
                    g.edges.push(Edge {
                        issuer: network.clone(),
                        subject: subject.clone(),
                        seller_id: e.seller_id.clone(),
                        seller_type: e.seller_type,
                        confidential: e.is_confidential,
                        entry_index: e.index,
                    });
                }
                None if e.is_confidential => summary.confidential_without_domain += 1,
                None => {}
            }
        }
        g.issuers.insert(network.clone(), summary);
    }
    g.edges.sort();
    g
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeMismatch {
    pub network: String,
    pub account_id: String,
    pub ads_type: AccountType,
    pub seller_type: SellerType,
    pub declaring_publishers: BTreeSet<String>,
}

/// An ads.txt key whose network serves a file that does not list the id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unacknowledged {
    pub network: String,
    pub account_id: String,
    pub declaring_publishers: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub mismatches: Vec<TypeMismatch>,
    pub unacknowledged: Vec<Unacknowledged>,
}

fn conflicts(ads: AccountType, seller: SellerType) -> bool {
    matches!(
        (ads, seller),
        (AccountType::Direct, SellerType::Intermediary)
            | (AccountType::Reseller, SellerType::Publisher)
    )
}

/// Joins each ads.txt key with the entries of the same id in the network's
/// own (non-excluded) file. DIRECT/INTERMEDIARY and RESELLER/PUBLISHER are
/// mismatches; BOTH matches either type.
pub fn detect_type_mismatches(index: &EntryIndex, excluded: &BTreeSet<String>) -> MismatchReport {
    let mut out = MismatchReport::default();
    for ((network, id), declarers) in &index.by_account {
        if excluded.contains(network) || !index.by_network.contains_key(network) {
            continue;
        }
        let Some(entries) = index.by_seller.get(&(network.clone(), id.clone())) else {
            out.unacknowledged.push(Unacknowledged {
                network: network.clone(),
                account_id: id.clone(),
                declaring_publishers: declarers.iter().map(|(p, _)| p.clone()).collect(),
            });
            continue;
        };
        let seller_types: BTreeSet<SellerType> = entries.iter().map(|e| e.seller_type).collect();
        for ads_type in [AccountType::Direct, AccountType::Reseller] {
            let publishers: BTreeSet<String> = declarers
                .iter()
                .filter(|(_, t)| *t == ads_type)
                .map(|(p, _)| p.clone())
                .collect();
            if publishers.is_empty() {
                continue;
            }
            for &seller_type in &seller_types {
                if conflicts(ads_type, seller_type) {
                    out.mismatches.push(TypeMismatch {
                        network: network.clone(),
                        account_id: id.clone(),
                        ads_type,
                        seller_type,
                        declaring_publishers: publishers.clone(),
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvableIntermediary {
    pub domain: String,
    /// INTERMEDIARY edges pointing at the domain.
    pub listing_count: usize,
}

/// INTERMEDIARY subjects whose own sellers.json fetch is a recorded failure
/// or returned a structurally invalid body. Domains the crawl never reached
/// are not flagged. Alias rescues show up as successful files.
pub fn detect_unresolvable_intermediaries(
    graph: &RelationshipGraph,
    snapshot: &CrawlSnapshot,
) -> Vec<UnresolvableIntermediary> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &graph.edges {
        if e.seller_type == SellerType::Intermediary {
            *counts.entry(e.subject.as_str()).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .filter(|(d, _)| match snapshot.sellers_files.get(*d) {
            Some(f) => !f.is_structurally_valid(),
            None => snapshot.failed(FileKind::SellersJson, d).is_some(),
        })
        .map(|(d, listing_count)| UnresolvableIntermediary {
            domain: d.to_string(),
            listing_count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confidentiality {
    pub total: usize,
    pub confidential: usize,
    pub fraction: Fraction,
}

pub fn confidentiality_stats(graph: &RelationshipGraph) -> BTreeMap<String, Confidentiality> {
    graph
        .issuers
        .iter()
        .map(|(n, s)| {
            (
                n.clone(),
                Confidentiality {
                    total: s.entries,
                    confidential: s.confidential,
                    fraction: Fraction::new(s.confidential as u64, s.entries as u64),
                },
            )
        })
        .collect()
}

/// Corpus-wide confidential share over all kept files.
pub fn overall_confidentiality(stats: &BTreeMap<String, Confidentiality>) -> Confidentiality {
    let total: usize = stats.values().map(|c| c.total).sum();
    let confidential: usize = stats.values().map(|c| c.confidential).sum();
    Confidentiality {
        total,
        confidential,
        fraction: Fraction::new(confidential as u64, total as u64),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Listing {
    pub issuer: String,
    pub seller_id: String,
    pub seller_type: SellerType,
}

/// Outcome of each hidden-intermediary criterion for one domain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criteria {
    pub serves_sellers_json: bool,
    pub has_named_client: bool,
    pub listed_as_publisher: bool,
    pub listed_as_intermediary: bool,
}

impl Criteria {
    pub fn all(&self) -> bool {
        self.serves_sellers_json
            && self.has_named_client
            && self.listed_as_publisher
            && self.listed_as_intermediary
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenIntermediaryFinding {
    pub subject: String,
    /// Listings by other networks as PUBLISHER or BOTH.
    pub publisher_listings: BTreeSet<Listing>,
    /// Listings by other networks as INTERMEDIARY or BOTH.
    pub intermediary_listings: BTreeSet<Listing>,
    pub named_client_count: usize,
    pub verified: bool,
    /// All publisher evidence is BOTH-typed.
    pub weak: bool,
    pub snapshot_id: String,
}

/// Per-criterion evaluation for one domain, with the finding when all hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenEvaluation {
    pub subject: String,
    pub criteria: Criteria,
    pub finding: Option<HiddenIntermediaryFinding>,
}

fn evaluate_with(
    graph: &RelationshipGraph,
    subject: &str,
    incoming: &[&Edge],
    verified: &VerifiedNetworkList,
) -> HiddenEvaluation {
    let own = graph.issuers.get(subject).filter(|s| s.structurally_valid);
    let listing = |e: &Edge| Listing {
        issuer: e.issuer.clone(),
        seller_id: e.seller_id.clone(),
        seller_type: e.seller_type,
    };
    let others = incoming.iter().filter(|e| e.issuer != subject);
    let publisher_listings: BTreeSet<Listing> = others
        .clone()
        .filter(|e| e.seller_type.acts_as_publisher())
        .map(|e| listing(e))
        .collect();
    let intermediary_listings: BTreeSet<Listing> = others
        .filter(|e| e.seller_type.acts_as_intermediary())
        .map(|e| listing(e))
        .collect();
    let criteria = Criteria {
        serves_sellers_json: own.is_some(),
        has_named_client: own.is_some_and(|s| s.named_clients > 0),
        listed_as_publisher: !publisher_listings.is_empty(),
        listed_as_intermediary: !intermediary_listings.is_empty(),
    };
    let finding = criteria.all().then(|| HiddenIntermediaryFinding {
        subject: subject.to_string(),
        weak: publisher_listings
            .iter()
            .all(|l| l.seller_type == SellerType::Both),
        publisher_listings,
        intermediary_listings,
        named_client_count: own.map_or(0, |s| s.named_clients),
        verified: verified.contains(subject),
        snapshot_id: graph.snapshot_id.clone(),
    });
    HiddenEvaluation {
        subject: subject.to_string(),
        criteria,
        finding,
    }
}

/// Evaluates the four criteria for a single domain.
pub fn evaluate_hidden_intermediary(
    graph: &RelationshipGraph,
    subject: &str,
    verified: &VerifiedNetworkList,
) -> HiddenEvaluation {
    let incoming: Vec<&Edge> = graph.edges_to(subject).collect();
    evaluate_with(graph, subject, &incoming, verified)
}

/// Every domain meeting all four criteria, ordered by subject.
pub fn detect_hidden_intermediaries(
    graph: &RelationshipGraph,
    verified: &VerifiedNetworkList,
) -> Vec<HiddenIntermediaryFinding> {
    let incoming = graph.incoming();
    let candidates: Vec<(&str, &Vec<&Edge>)> = incoming
        .iter()
        .filter(|(s, _)| graph.issuers.contains_key(**s))
        .map(|(s, e)| (*s, e))
        .collect();
    candidates
        .par_iter()
        .filter_map(|(s, edges)| evaluate_with(graph, s, edges, verified).finding)
        .collect()
}

/// Drops findings for domains on the content-owner allowlist.
pub fn without_content_owners(
    findings: &[HiddenIntermediaryFinding],
    allowlist: &BTreeSet<String>,
) -> Vec<HiddenIntermediaryFinding> {
    findings
        .iter()
        .filter(|f| !allowlist.contains(&f.subject))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributedId {
    pub issuer: String,
    pub seller_id: String,
    pub subject_network: String,
    pub direct_declarer_count: usize,
}

/// PUBLISHER listings of a network X by issuer Y whose `(Y, seller_id)` key
/// is declared DIRECT by more than `threshold` websites. Most declared first.
pub fn flag_distributed_publisher_ids(
    graph: &RelationshipGraph,
    index: &EntryIndex,
    threshold: usize,
) -> Result<Vec<DistributedId>> {
    if threshold < 2 {
        return Err(Error::InvalidInput("threshold must be at least 2".into()));
    }
    let mut rows: Vec<DistributedId> = graph
        .edges
        .iter()
        .filter(|e| {
            e.seller_type == SellerType::Publisher && graph.issuers.contains_key(&e.subject)
        })
        .filter_map(|e| {
            let declarers = index
                .by_account
                .get(&(e.issuer.clone(), e.seller_id.clone()))?;
            let count = declarers
                .iter()
                .filter(|(_, t)| *t == AccountType::Direct)
                .count();
            (count > threshold).then(|| DistributedId {
                issuer: e.issuer.clone(),
                seller_id: e.seller_id.clone(),
                subject_network: e.subject.clone(),
                direct_declarer_count: count,
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        b.direct_declarer_count
            .cmp(&a.direct_declarer_count)
            .then_with(|| {
                (&a.issuer, &a.seller_id, &a.subject_network).cmp(&(
                    &b.issuer,
                    &b.seller_id,
                    &b.subject_network,
                ))
            })
    });
    rows.dedup();
    Ok(rows)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndirectClients {
    pub fake_news: BTreeSet<String>,
    pub piracy: BTreeSet<String>,
    pub illegal: BTreeSet<String>,
}

/// Objectionable domains among the clients each hidden intermediary lists in
/// its own file.
pub fn indirect_clients(
    findings: &[HiddenIntermediaryFinding],
    graph: &RelationshipGraph,
    lists: &ObjectionableLists,
) -> BTreeMap<String, IndirectClients> {
    findings
        .iter()
        .map(|f| {
            let clients: BTreeSet<&String> =
                graph.edges_from(&f.subject).map(|e| &e.subject).collect();
            let pick = |set: &BTreeSet<String>| {
                clients
                    .iter()
                    .filter(|c| set.contains(c.as_str()))
                    .map(|c| c.to_string())
                    .collect()
            };
            (
                f.subject.clone(),
                IndirectClients {
                    fake_news: pick(&lists.misinformation),
                    piracy: pick(&lists.piracy),
                    illegal: pick(&lists.illegal),
                },
            )
        })
        .collect()
}

/// Findings of one snapshot together with the verified list they used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenIntermediaryRun {
    pub snapshot_id: String,
    pub verified_digest: String,
    pub findings: Vec<HiddenIntermediaryFinding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalDiff {
    pub from_snapshot: String,
    pub to_snapshot: String,
    pub verified_only: bool,
    pub appeared: BTreeSet<String>,
    pub disappeared: BTreeSet<String>,
    pub persisted: BTreeSet<String>,
    /// Size of the later set minus size of the earlier one.
    pub net_change: i64,
    /// Change in publisher-listing count for every subject in either run.
    pub listing_delta: BTreeMap<String, i64>,
}

/// Compares the findings of two runs. Both must use the same verified list.
pub fn temporal_diff(
    a: &HiddenIntermediaryRun,
    b: &HiddenIntermediaryRun,
    verified_only: bool,
) -> Result<TemporalDiff> {
    if a.verified_digest != b.verified_digest {
        return Err(Error::NonComparable(format!(
            "snapshots {} and {} were analysed with different verified lists",
            a.snapshot_id, b.snapshot_id
        )));
    }
    let listings = |run: &HiddenIntermediaryRun| -> BTreeMap<String, i64> {
        run.findings
            .iter()
            .filter(|f| !verified_only || f.verified)
            .map(|f| (f.subject.clone(), f.publisher_listings.len() as i64))
            .collect()
    };
    let (la, lb) = (listings(a), listings(b));
    let sa: BTreeSet<String> = la.keys().cloned().collect();
    let sb: BTreeSet<String> = lb.keys().cloned().collect();
    let listing_delta = sa
        .union(&sb)
        .map(|s| {
            let d = lb.get(s).copied().unwrap_or(0) - la.get(s).copied().unwrap_or(0);
            (s.clone(), d)
        })
        .collect();
    Ok(TemporalDiff {
        from_snapshot: a.snapshot_id.clone(),
        to_snapshot: b.snapshot_id.clone(),
        verified_only,
        appeared: sb.difference(&sa).cloned().collect(),
        disappeared: sa.difference(&sb).cloned().collect(),
        persisted: sa.intersection(&sb).cloned().collect(),
        net_change: sb.len() as i64 - sa.len() as i64,
        listing_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastore::DomainList;
    use crate::parser::{parse_ads_txt, parse_sellers_json};
    use chrono::Utc;

    fn entry(id: &str, domain: Option<&str>, t: &str, confidential: bool) -> serde_json::Value {
        let mut v = serde_json::json!({"seller_id": id, "seller_type": t, "is_confidential": confidential as u8});
        if let Some(d) = domain {
            v["domain"] = d.into();
        }
        v
    }

    fn sellers(entries: Vec<serde_json::Value>) -> Vec<u8> {
        serde_json::to_vec(&serde_json::json!({ "sellers": entries })).unwrap()
    }

    fn snap(sellers_files: &[(&str, Vec<u8>)], ads: &[(&str, &str)]) -> CrawlSnapshot {
        let mut s = CrawlSnapshot::empty(Utc::now());
        for (d, body) in sellers_files {
            s.sellers_files
                .insert(d.to_string(), parse_sellers_json(d, body));
        }
        for (d, body) in ads {
            s.ads_files
                .insert(d.to_string(), parse_ads_txt(d, body.as_bytes()));
        }
        s
    }

    fn smaato() -> CrawlSnapshot {
        let pubs = |id: &str| sellers(vec![entry(id, Some("smaato.com"), "PUBLISHER", false)]);
        snap(
            &[
                ("keenkale.com", pubs("k1")),
                ("lkqd.com", pubs("l1")),
                ("adingo.jp", pubs("a1")),
                (
                    "pubmatic.com",
                    sellers(vec![entry("p1", Some("smaato.com"), "INTERMEDIARY", false)]),
                ),
                (
                    "smaato.com",
                    sellers(vec![entry("s1", Some("app.com"), "PUBLISHER", false)]),
                ),
            ],
            &[],
        )
    }

    #[test]
    fn smaato_subgraph() {
        let s = smaato();
        let g = build_relationship_graph(&s, &BTreeSet::new());
        assert_eq!(
            g.edges_to("smaato.com")
                .filter(|e| e.seller_type == SellerType::Publisher)
                .count(),
            3
        );
        let verified = DomainList::parse("smaato.com\n", "test");
        let f = detect_hidden_intermediaries(&g, &verified);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].publisher_listings.len(), 3);
        assert!(f[0].verified && !f[0].weak);
    }

    #[test]
    fn negative_lookups_explain_failed_criteria() {
        let g = build_relationship_graph(&smaato(), &BTreeSet::new());
        let none = DomainList::default();
        let e = evaluate_hidden_intermediary(&g, "app.com", &none);
        assert!(!e.criteria.serves_sellers_json && e.finding.is_none());
        let e = evaluate_hidden_intermediary(&g, "pubmatic.com", &none);
        assert!(e.criteria.serves_sellers_json && !e.criteria.listed_as_publisher);
    }

    #[test]
    fn confidential_domainless_entries_only_count() {
        let s = snap(
            &[(
                "mytarget.com",
                sellers(vec![
                    entry("1", None, "PUBLISHER", true),
                    entry("2", None, "PUBLISHER", true),
                ]),
            )],
            &[],
        );
        let g = build_relationship_graph(&s, &BTreeSet::new());
        assert!(g.edges.is_empty());
        assert_eq!(g.issuers["mytarget.com"].confidential_without_domain, 2);
        assert_eq!(
            confidentiality_stats(&g)["mytarget.com"].fraction,
            Fraction::new(1, 1)
        );
    }

    #[test]
    fn three_of_four_confidential() {
        let s = snap(
            &[(
                "n.com",
                sellers(vec![
                    entry("1", None, "PUBLISHER", true),
                    entry("2", None, "PUBLISHER", true),
                    entry("3", None, "PUBLISHER", true),
                    entry("4", Some("a.com"), "PUBLISHER", false),
                ]),
            )],
            &[],
        );
        let g = build_relationship_graph(&s, &BTreeSet::new());
        assert_eq!(confidentiality_stats(&g)["n.com"].fraction.value(), 0.75);
    }

    #[test]
    fn mismatch_rules() {
        let s = snap(
            &[(
                "beachfront.com",
                sellers(vec![
                    entry("13310", Some("x.com"), "INTERMEDIARY", false),
                    entry("1", Some("y.com"), "PUBLISHER", false),
                    entry("2", Some("z.com"), "BOTH", false),
                ]),
            )],
            &[
                ("mangaread.org", "beachfront.com, 13310, DIRECT"),
                ("y.com", "beachfront.com, 1, DIRECT\nbeachfront.com, 2, DIRECT\nbeachfront.com, 99, DIRECT"),
            ],
        );
        let r = detect_type_mismatches(&EntryIndex::build(&s), &BTreeSet::new());
        assert_eq!(r.mismatches.len(), 1);
        assert_eq!(r.mismatches[0].account_id, "13310");
        assert_eq!(r.unacknowledged.len(), 1);
        assert_eq!(r.unacknowledged[0].account_id, "99");
    }

    #[test]
    fn unresolvable_requires_failure_evidence() {
        let mut s = snap(
            &[
                (
                    "net.com",
                    sellers(vec![
                        entry("1", Some("gone.com"), "INTERMEDIARY", false),
                        entry("2", Some("unvisited.com"), "INTERMEDIARY", false),
                        entry("3", Some("ok.com"), "INTERMEDIARY", false),
                    ]),
                ),
                ("ok.com", sellers(vec![])),
            ],
            &[],
        );
        s.failures.entry(FileKind::SellersJson).or_default().insert(
            "gone.com".into(),
            crate::crawler::FetchOutcome::failed(
                "https://gone.com/sellers.json",
                crate::crawler::FetchStatus::NotFound,
                None,
                Some(404),
            ),
        );
        let g = build_relationship_graph(&s, &BTreeSet::new());
        let u = detect_unresolvable_intermediaries(&g, &s);
        assert_eq!(
            u,
            vec![UnresolvableIntermediary {
                domain: "gone.com".into(),
                listing_count: 1
            }]
        );
    }

    #[test]
    fn distributed_ids_over_threshold() {
        let ads: Vec<(String, String)> = (0..12)
            .map(|i| {
                (
                    format!("site{i}.com"),
                    "yahoo.com, 56848, DIRECT".to_string(),
                )
            })
            .collect();
        let refs: Vec<(&str, &str)> = ads.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let s = snap(
            &[
                (
                    "yahoo.com",
                    sellers(vec![entry(
                        "56848",
                        Some("kiosked.com"),
                        "PUBLISHER",
                        false,
                    )]),
                ),
                (
                    "kiosked.com",
                    sellers(vec![entry("k", Some("a.com"), "PUBLISHER", false)]),
                ),
            ],
            &refs,
        );
        let g = build_relationship_graph(&s, &BTreeSet::new());
        let idx = EntryIndex::build(&s);
        let rows = flag_distributed_publisher_ids(&g, &idx, 10).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].direct_declarer_count, 12);
        assert!(flag_distributed_publisher_ids(&g, &idx, 12)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn temporal_rules() {
        let g = build_relationship_graph(&smaato(), &BTreeSet::new());
        let v = DomainList::parse("smaato.com\n", "v");
        let run = HiddenIntermediaryRun {
            snapshot_id: "a".into(),
            verified_digest: v.digest(),
            findings: detect_hidden_intermediaries(&g, &v),
        };
        let d = temporal_diff(&run, &run, true).unwrap();
        assert!(d.appeared.is_empty() && d.disappeared.is_empty());
        assert_eq!(d.persisted.len(), 1);
        let mut other = run.clone();
        other.verified_digest = "different".into();
        assert!(matches!(
            temporal_diff(&run, &other, true),
            Err(Error::NonComparable(_))
        ));
    }
}
