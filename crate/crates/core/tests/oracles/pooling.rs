//! Pool statistics and dark-pool classification against brute-force oracles.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use adtrace_core::crawler::{CrawlSnapshot, TransportMode};
use adtrace_core::datastore::EntryIndex;
use adtrace_core::parser::parse_ads_txt;
use adtrace_core::pooling::{build_pools, classify_dark_pools, pool_stats, Pool};
use adtrace_core::whois::{
    resolve_owners, OwnerStatus, PrivacyKeywordList, WhoisParser, WhoisRecord, WhoisSource,
};
use chrono::Utc;
use num_rational::Ratio;
use proptest::prelude::*;

pub const NETWORKS: [&str; 3] = ["alpha.com", "beta.net", "gamma.io"];

/// `(publisher, network, id, is_direct)` declarations.
pub type Decl = (usize, usize, u8, bool);

pub fn decls() -> impl Strategy<Value = Vec<Decl>> {
    prop::collection::vec(
        (
            0usize..25,
            0..NETWORKS.len(),
            0u8..6,
            prop::bool::weighted(0.8),
        ),
        0..120,
    )
}

pub fn publisher(i: usize) -> String {
    format!("site{i}.org")
}

pub fn snapshot(decls: &[Decl]) -> CrawlSnapshot {
    let mut lines: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for &(p, n, id, direct) in decls {
        let t = if direct { "DIRECT" } else { "RESELLER" };
        lines
            .entry(publisher(p))
            .or_default()
            .push(format!("{}, acct-{id}, {t}", NETWORKS[n]));
    }
    let mut snap = CrawlSnapshot::empty(Utc::now());
    for (p, ls) in lines {
        let f = parse_ads_txt(&p, ls.join("\n").as_bytes());
        snap.ads_files.insert(p, f);
    }
    snap
}

/// Distinct DIRECT declarers per (network, id), straight from the declarations.
pub fn direct_groups(decls: &[Decl]) -> BTreeMap<(usize, u8), BTreeSet<usize>> {
    let mut g: BTreeMap<(usize, u8), BTreeSet<usize>> = BTreeMap::new();
    for &(p, n, id, direct) in decls {
        if direct {
            g.entry((n, id)).or_default().insert(p);
        }
    }
    g
}

pub fn pools_of(decls: &[Decl]) -> Vec<Pool> {
    build_pools(&EntryIndex::build(&snapshot(decls)), None)
}

/// Planted WHOIS ownership for one publisher.
#[derive(Debug, Clone, Copy)]
pub enum Planted {
    Org(usize),
    Redacted,
    Missing,
}

pub const ORGS: [&str; 4] = [
    "Acme Media LLC",
    "Borealis Publishing",
    "Cobalt News Group",
    "Delta Interactive",
];

pub fn planted() -> impl Strategy<Value = Planted> {
    prop_oneof![
        5 => (0..ORGS.len()).prop_map(Planted::Org),
        2 => Just(Planted::Redacted),
        1 => Just(Planted::Missing),
    ]
}

/// Cosmetic variations that normalise to the same organisation.
pub fn spelled(org: &str, variant: u8) -> String {
    match variant % 3 {
        0 => org.to_string(),
        1 => org.to_uppercase(),
        _ => format!("  {}  ", org.replace(' ', "   ")),
    }
}

pub struct MapWhois(HashMap<String, WhoisRecord>);

impl WhoisSource for MapWhois {
    fn lookup(&self, domain: &str) -> Option<WhoisRecord> {
        self.0.get(domain).cloned()
    }
    fn mode(&self) -> TransportMode {
        TransportMode::Fixture
    }
}

pub fn whois_source(plants: &[(Planted, u8)]) -> MapWhois {
    let parser = WhoisParser::default();
    let mut m = HashMap::new();
    for (i, (p, v)) in plants.iter().enumerate() {
        let d = publisher(i);
        let org_line = match p {
            Planted::Org(o) => format!("Registrant Organization: {}\n", spelled(ORGS[*o], *v)),
            Planted::Redacted => "Registrant Organization: REDACTED FOR PRIVACY\n".to_string(),
            Planted::Missing => continue,
        };
        let raw = format!(
            "Domain Name: {}\nRegistrar: Example Registrar\n{org_line}",
            d.to_uppercase()
        );
        m.insert(d.clone(), WhoisRecord::new(&d, raw, &parser));
    }
    MapWhois(m)
}

pub fn is_dark_oracle(members: &BTreeSet<String>, plants: &[(Planted, u8)]) -> bool {
    let orgs: Vec<usize> = members
        .iter()
        .filter_map(|m| {
            let i: usize = m
                .trim_start_matches("site")
                .trim_end_matches(".org")
                .parse()
                .unwrap();
            match plants[i].0 {
                Planted::Org(o) => Some(o),
                _ => None,
            }
        })
        .collect();
    orgs.iter().any(|a| orgs.iter().any(|b| a != b))
}

pub fn corpus() -> impl Strategy<Value = (Vec<Decl>, Vec<(Planted, u8)>)> {
    (decls(), prop::collection::vec((planted(), any::<u8>()), 25))
}

pub fn pool_stats_oracle(decls: &[Decl]) -> Result<(), TestCaseError> {
    let snap = snapshot(&decls);
    let index = EntryIndex::build(&snap);
    let pools = build_pools(&index, None);
    let stats = pool_stats(&pools, &index);

    let groups = direct_groups(&decls);
    let sizes: Vec<u64> = groups
        .values()
        .filter(|m| m.len() >= 2)
        .map(|m| m.len() as u64)
        .collect();
    prop_assert_eq!(stats.pool_count, sizes.len());
    prop_assert_eq!(pools.len(), sizes.len());

    let mut sorted = sizes.clone();
    sorted.sort();
    let (mean, median) = if sorted.is_empty() {
        (Ratio::from_integer(0), Ratio::from_integer(0))
    } else {
        let n = sorted.len();
        let mean = Ratio::new(sorted.iter().sum::<u64>(), n as u64);
        let median = if n % 2 == 1 {
            Ratio::from_integer(sorted[n / 2])
        } else {
            Ratio::new(sorted[n / 2 - 1] + sorted[n / 2], 2)
        };
        (mean, median)
    };
    prop_assert_eq!(stats.mean.0, mean);
    prop_assert_eq!(stats.median.0, median);
    let dist: Vec<usize> = sorted.iter().map(|&s| s as usize).collect();
    prop_assert_eq!(&stats.size_distribution, &dist);

    for (ni, network) in NETWORKS.iter().enumerate() {
        let formed = groups
            .iter()
            .filter(|((n, _), m)| *n == ni && m.len() >= 2)
            .count();
        let ids = groups.keys().filter(|(n, _)| *n == ni).count();
        match stats.per_network.get(*network) {
            None => prop_assert_eq!(formed, 0),
            Some(s) => {
                prop_assert_eq!(s.pools_formed, formed);
                prop_assert_eq!(s.direct_ids, ids);
                prop_assert_eq!(
                    s.fraction_of_all_pools.0,
                    Ratio::new(formed as u64, sizes.len() as u64)
                );
                prop_assert_eq!(
                    s.fraction_of_network_ids_pooled.0,
                    Ratio::new(formed as u64, ids as u64)
                );
            }
        }
    }
    if !pools.is_empty() {
        let total: Ratio<u64> = stats
            .per_network
            .values()
            .map(|s| s.fraction_of_all_pools.0)
            .sum();
        prop_assert_eq!(total, Ratio::from_integer(1));
    }
    Ok(())
}

pub fn dark_pool_oracle(
    (decls, plants): &(Vec<Decl>, Vec<(Planted, u8)>),
) -> Result<(), TestCaseError> {
    let pools = pools_of(&decls);
    let members: BTreeSet<&str> = pools
        .iter()
        .flat_map(|p| p.members.iter().map(String::as_str))
        .collect();
    let owners = resolve_owners(
        members,
        &whois_source(&plants),
        &PrivacyKeywordList::builtin(),
    );
    let dark = classify_dark_pools(&pools, &owners);
    let got: BTreeSet<(String, String)> = dark
        .iter()
        .map(|d| (d.pool.ad_system_domain.clone(), d.pool.account_id.clone()))
        .collect();
    let want: BTreeSet<(String, String)> = pools
        .iter()
        .filter(|p| is_dark_oracle(&p.members, &plants))
        .map(|p| (p.ad_system_domain.clone(), p.account_id.clone()))
        .collect();
    prop_assert_eq!(got, want);
    for d in &dark {
        prop_assert!(d.distinct_owners.len() >= 2);
        prop_assert!(d.resolved_members.is_subset(&d.pool.members));
    }
    Ok(())
}

pub fn redacted_removal_invariant(
    (decls, plants): &(Vec<Decl>, Vec<(Planted, u8)>),
) -> Result<(), TestCaseError> {
    let pools = pools_of(&decls);
    let members: BTreeSet<&str> = pools
        .iter()
        .flat_map(|p| p.members.iter().map(String::as_str))
        .collect();
    let owners = resolve_owners(
        members,
        &whois_source(&plants),
        &PrivacyKeywordList::builtin(),
    );
    let stripped: Vec<Pool> = pools
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q.members
                .retain(|m| owners[m].status != OwnerStatus::Redacted);
            q
        })
        .collect();
    let a = classify_dark_pools(&pools, &owners);
    let b = classify_dark_pools(&stripped, &owners);
    prop_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        prop_assert_eq!(x.pool.key(), y.pool.key());
        prop_assert_eq!(&x.distinct_owners, &y.distinct_owners);
        prop_assert_eq!(&x.resolved_members, &y.resolved_members);
    }
    Ok(())
}
