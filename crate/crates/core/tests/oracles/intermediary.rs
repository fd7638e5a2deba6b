//! Relationship-graph analyses against enumerations over the generated input.

use std::collections::{BTreeMap, BTreeSet};

use adtrace_core::analysis::{analyze, AnalysisInputs};
use adtrace_core::crawler::{CrawlSnapshot, FetchOutcome, FetchStatus};
use adtrace_core::datastore::{DomainList, SealedSnapshot};
use adtrace_core::intermediary::{
    build_relationship_graph, confidentiality_stats, detect_hidden_intermediaries,
    detect_unresolvable_intermediaries, evaluate_hidden_intermediary,
};
use adtrace_core::parser::{parse_ads_txt, parse_sellers_json, FileKind, SellerType};
use adtrace_core::tools::{partnerships, Analyzed};
use chrono::Utc;
use proptest::prelude::*;

pub const N_NETWORKS: usize = 8;
pub const N_PUBLISHERS: usize = 8;

pub fn domain(i: usize) -> String {
    if i < N_NETWORKS {
        format!("n{i}.net")
    } else {
        format!("p{}.org", i - N_NETWORKS)
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    id: u8,
    seller_type: SellerType,
    domain: Option<usize>,
    named: bool,
    confidential: bool,
}

#[derive(Debug, Clone)]
pub enum NetworkFile {
    Valid(Vec<Entry>),
    Invalid,
    Failed,
    NotCrawled,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    networks: Vec<NetworkFile>,
    excluded: BTreeSet<usize>,
    /// `(publisher, network, id, direct)`.
    ads: Vec<(usize, usize, u8, bool)>,
}

pub fn seller_type() -> impl Strategy<Value = SellerType> {
    prop_oneof![
        Just(SellerType::Publisher),
        Just(SellerType::Intermediary),
        Just(SellerType::Both)
    ]
}

pub fn entry() -> impl Strategy<Value = Entry> {
    (
        0u8..6,
        seller_type(),
        prop::option::weighted(0.8, 0..N_NETWORKS + N_PUBLISHERS),
        any::<bool>(),
        prop::bool::weighted(0.2),
    )
        .prop_map(|(id, seller_type, domain, named, confidential)| Entry {
            id,
            seller_type,
            domain,
            named,
            confidential,
        })
}

pub fn network_file() -> impl Strategy<Value = NetworkFile> {
    prop_oneof![
        6 => prop::collection::vec(entry(), 0..10).prop_map(NetworkFile::Valid),
        1 => Just(NetworkFile::Invalid),
        1 => Just(NetworkFile::Failed),
        1 => Just(NetworkFile::NotCrawled),
    ]
}

pub fn corpus() -> impl Strategy<Value = Corpus> {
    (
        prop::collection::vec(network_file(), N_NETWORKS),
        prop::collection::btree_set(0..N_NETWORKS, 0..3),
        prop::collection::vec(
            (
                0..N_PUBLISHERS,
                0..N_NETWORKS,
                0u8..4,
                prop::bool::weighted(0.7),
            ),
            0..40,
        ),
    )
        .prop_map(|(networks, excluded, ads)| Corpus {
            networks,
            excluded,
            ads,
        })
}

pub fn sellers_body(entries: &[Entry]) -> Vec<u8> {
    let list: Vec<_> = entries
        .iter()
        .map(|e| {
            let mut m = serde_json::Map::new();
            m.insert("seller_id".into(), e.id.to_string().into());
            m.insert("seller_type".into(), e.seller_type.as_str().into());
            if let Some(d) = e.domain {
                m.insert("domain".into(), domain(d).into());
            }
            if e.named {
                m.insert("name".into(), "Some Seller".into());
            }
            if e.confidential {
                m.insert("is_confidential".into(), 1.into());
            }
            serde_json::Value::Object(m)
        })
        .collect();
    serde_json::to_vec(&serde_json::json!({ "sellers": list })).unwrap()
}

pub fn snapshot(c: &Corpus) -> CrawlSnapshot {
    let mut snap = CrawlSnapshot::empty(Utc::now());
    for (i, f) in c.networks.iter().enumerate() {
        let d = domain(i);
        match f {
            NetworkFile::Valid(es) => {
                snap.sellers_files
                    .insert(d.clone(), parse_sellers_json(&d, &sellers_body(es)));
            }
            NetworkFile::Invalid => {
                snap.sellers_files
                    .insert(d.clone(), parse_sellers_json(&d, b"<html>not found</html>"));
            }
            NetworkFile::Failed => {
                let url = format!("https://{d}/sellers.json");
                snap.failures
                    .entry(FileKind::SellersJson)
                    .or_default()
                    .insert(
                        d,
                        FetchOutcome::failed(&url, FetchStatus::Timeout, None, None),
                    );
            }
            NetworkFile::NotCrawled => {}
        }
    }
    let mut lines: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for &(p, n, id, direct) in &c.ads {
        let t = if direct { "DIRECT" } else { "RESELLER" };
        lines
            .entry(p)
            .or_default()
            .push(format!("{}, {id}, {t}", domain(n)));
    }
    for (p, ls) in lines {
        let d = domain(N_NETWORKS + p);
        snap.ads_files
            .insert(d.clone(), parse_ads_txt(&d, ls.join("\n").as_bytes()));
    }
    snap.seal_id();
    snap
}

pub fn excluded_names(c: &Corpus) -> BTreeSet<String> {
    c.excluded.iter().map(|&i| domain(i)).collect()
}

/// Kept entries as `(issuer index, entry)`.
pub fn kept_entries(c: &Corpus) -> Vec<(usize, &Entry)> {
    c.networks
        .iter()
        .enumerate()
        .filter(|(i, _)| !c.excluded.contains(i))
        .flat_map(|(i, f)| match f {
            NetworkFile::Valid(es) => es.iter().map(|e| (i, e)).collect(),
            _ => Vec::new(),
        })
        .collect()
}

pub fn acts_as_publisher(t: SellerType) -> bool {
    matches!(t, SellerType::Publisher | SellerType::Both)
}

pub fn acts_as_intermediary(t: SellerType) -> bool {
    matches!(t, SellerType::Intermediary | SellerType::Both)
}

pub fn graph_oracle(c: &Corpus) -> Result<(), TestCaseError> {
    let g = build_relationship_graph(&snapshot(&c), &excluded_names(&c));
    let mut want: Vec<(String, String, String, SellerType, bool)> = kept_entries(&c)
        .into_iter()
        .filter_map(|(i, e)| {
            e.domain.map(|d| {
                (
                    domain(i),
                    domain(d),
                    e.id.to_string(),
                    e.seller_type,
                    e.confidential,
                )
            })
        })
        .collect();
    want.sort();
    let mut got: Vec<_> = g
        .edges
        .iter()
        .map(|e| {
            (
                e.issuer.clone(),
                e.subject.clone(),
                e.seller_id.clone(),
                e.seller_type,
                e.confidential,
            )
        })
        .collect();
    got.sort();
    prop_assert_eq!(got, want);
    for e in &g.edges {
        prop_assert!(g.nodes.contains(&e.issuer) && g.nodes.contains(&e.subject));
        prop_assert!(!g.excluded.contains(&e.issuer));
    }
    Ok(())
}

pub fn hidden_oracle(c: &Corpus) -> Result<(), TestCaseError> {
    let g = build_relationship_graph(&snapshot(&c), &excluded_names(&c));
    let verified = DomainList::parse("n0.net\nn1.net\nn2.net\n", "test");
    let found: BTreeMap<String, _> = detect_hidden_intermediaries(&g, &verified)
        .into_iter()
        .map(|f| (f.subject.clone(), f))
        .collect();
    let kept = kept_entries(&c);
    for s in 0..N_NETWORKS + N_PUBLISHERS {
        let name = domain(s);
        let own = match c.networks.get(s) {
            Some(NetworkFile::Valid(es)) if !c.excluded.contains(&s) => Some(es),
            _ => None,
        };
        let named = own.is_some_and(|es| {
            es.iter()
                .any(|e| !e.confidential && (e.named || e.domain.is_some()))
        });
        let incoming: Vec<&(usize, &Entry)> = kept
            .iter()
            .filter(|(i, e)| e.domain == Some(s) && *i != s)
            .collect();
        let pubs: BTreeSet<(usize, u8, SellerType)> = incoming
            .iter()
            .filter(|(_, e)| acts_as_publisher(e.seller_type))
            .map(|(i, e)| (*i, e.id, e.seller_type))
            .collect();
        let ints = incoming
            .iter()
            .any(|(_, e)| acts_as_intermediary(e.seller_type));
        let expected = own.is_some() && named && !pubs.is_empty() && ints;

        let eval = evaluate_hidden_intermediary(&g, &name, &verified);
        prop_assert_eq!(eval.criteria.serves_sellers_json, own.is_some(), "{}", name);
        prop_assert_eq!(eval.criteria.has_named_client, named);
        prop_assert_eq!(eval.criteria.listed_as_publisher, !pubs.is_empty());
        prop_assert_eq!(eval.criteria.listed_as_intermediary, ints);
        prop_assert_eq!(eval.finding.is_some(), expected);
        prop_assert_eq!(found.contains_key(&name), expected);
        if let Some(f) = found.get(&name) {
            prop_assert_eq!(f.publisher_listings.len(), pubs.len());
            prop_assert_eq!(f.weak, pubs.iter().all(|(_, _, t)| *t == SellerType::Both));
            prop_assert_eq!(f.verified, s < 3);
            prop_assert_eq!(Some(f), eval.finding.as_ref());
        }
    }
    Ok(())
}

pub fn unresolvable_and_confidentiality_oracle(c: &Corpus) -> Result<(), TestCaseError> {
    let snap = snapshot(&c);
    let g = build_relationship_graph(&snap, &excluded_names(&c));

    let mut want: BTreeMap<String, usize> = BTreeMap::new();
    for (_, e) in kept_entries(&c) {
        let Some(d) = e.domain else { continue };
        let broken = matches!(
            c.networks.get(d),
            Some(NetworkFile::Invalid | NetworkFile::Failed)
        );
        if e.seller_type == SellerType::Intermediary && broken {
            *want.entry(domain(d)).or_default() += 1;
        }
    }
    let got: BTreeMap<String, usize> = detect_unresolvable_intermediaries(&g, &snap)
        .into_iter()
        .map(|u| (u.domain, u.listing_count))
        .collect();
    prop_assert_eq!(got, want);

    let conf = confidentiality_stats(&g);
    for (i, f) in c.networks.iter().enumerate() {
        let kept = !c.excluded.contains(&i);
        let (total, confidential) = match f {
            NetworkFile::Valid(es) => (es.len(), es.iter().filter(|e| e.confidential).count()),
            NetworkFile::Invalid => (0, 0),
            _ => {
                prop_assert!(!conf.contains_key(&domain(i)));
                continue;
            }
        };
        match conf.get(&domain(i)) {
            None => prop_assert!(!kept),
            Some(s) => {
                prop_assert!(kept);
                prop_assert_eq!((s.total, s.confidential), (total, confidential));
                if total > 0 {
                    prop_assert!(
                        (s.fraction.value() - confidential as f64 / total as f64).abs() < 1e-12
                    );
                }
            }
        }
    }
    Ok(())
}

pub fn partnership_oracle(c: &Corpus) -> Result<(), TestCaseError> {
    let sealed = SealedSnapshot::new(snapshot(&c));
    let report = analyze(&sealed, &AnalysisInputs::default()).unwrap();
    let a = Analyzed::new(sealed, report, DomainList::default());
    let direct: BTreeMap<usize, BTreeSet<(usize, u8)>> = (0..N_PUBLISHERS)
        .map(|p| {
            let keys = c
                .ads
                .iter()
                .filter(|x| x.0 == p && x.3)
                .map(|x| (x.1, x.2))
                .collect();
            (p, keys)
        })
        .collect();
    for q in 0..N_PUBLISHERS {
        let got = partnerships(&a, &domain(N_NETWORKS + q)).unwrap();
        let mut want: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        for p in 0..N_PUBLISHERS {
            if p == q {
                continue;
            }
            let shared: Vec<(String, String)> = direct[&q]
                .intersection(&direct[&p])
                .map(|(n, id)| (domain(*n), id.to_string()))
                .collect();
            if !shared.is_empty() {
                want.insert(domain(N_NETWORKS + p), shared);
            }
        }
        let got: BTreeMap<String, Vec<(String, String)>> = got
            .partners
            .into_iter()
            .map(|(p, ks)| {
                (
                    p,
                    ks.into_iter().map(|k| (k.network, k.account_id)).collect(),
                )
            })
            .collect();
        prop_assert_eq!(got, want);
    }
    Ok(())
}
