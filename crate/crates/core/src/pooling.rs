//! Identifier pools: DIRECT `(network, account id)` keys declared by two or
//! more publishers, and the statistics built on them.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datastore::{EntryIndex, ObjectionableLists, RankTable, Tag};
use crate::parser::{AccountType, SellerType};
use crate::stats::{exact_mean, exact_median, ks_two_sample, pearson, Fraction, StatResult};
use crate::whois::{OwnerResolution, OwnerStatus};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pool {
    pub ad_system_domain: String,
    pub account_id: String,
    pub members: BTreeSet<String>,
    /// Union of the members' tags.
    pub tags: BTreeSet<Tag>,
    /// Members carrying at least one tag.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tagged_members: BTreeMap<String, BTreeSet<Tag>>,
    /// Publishers declaring the same key as RESELLER. They never join the pool.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub reseller_declarers: BTreeSet<String>,
}

impl Pool {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.ad_system_domain, &self.account_id)
    }
}

/// Every DIRECT key with at least two declarers, ordered by key. Members are
/// tagged from `lists` when given.
pub fn build_pools(index: &EntryIndex, lists: Option<&ObjectionableLists>) -> Vec<Pool> {
    let keys: Vec<_> = index.by_account.iter().collect();
    keys.par_iter()
        .filter_map(|((network, id), declarers)| {
            let mut members = BTreeSet::new();
            let mut resellers = BTreeSet::new();
            for (publisher, t) in declarers.iter() {
                match t {
                    AccountType::Direct => members.insert(publisher.clone()),
                    AccountType::Reseller => resellers.insert(publisher.clone()),
                };
            }
            if members.len() < 2 {
                return None;
            }
            let mut tags = BTreeSet::new();
            let mut tagged_members = BTreeMap::new();
            if let Some(lists) = lists {
                for m in &members {
                    let t = lists.tags_for(m);
                    if !t.is_empty() {
                        tags.extend(t.iter().copied());
                        tagged_members.insert(m.clone(), t);
                    }
                }
            }
            resellers.retain(|r| !members.contains(r));
            Some(Pool {
                ad_system_domain: network.clone(),
                account_id: id.clone(),
                members,
                tags,
                tagged_members,
                reseller_declarers: resellers,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkPoolShare {
    pub pools_formed: usize,
    /// Share of all pools that belong to this network.
    pub fraction_of_all_pools: Fraction,
    /// Distinct DIRECT ids of this network seen in any ads.txt.
    pub direct_ids: usize,
    /// Share of those ids that form a pool.
    pub fraction_of_network_ids_pooled: Fraction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStats {
    pub pool_count: usize,
    pub size_distribution: Vec<usize>,
    pub mean: Fraction,
    pub median: Fraction,
    pub per_network: BTreeMap<String, NetworkPoolShare>,
}

/// Size distribution, exact mean and median, and per-network shares.
/// Empty input yields zeroed statistics.
pub fn pool_stats(pools: &[Pool], index: &EntryIndex) -> PoolStats {
    let mut sizes: Vec<usize> = pools.iter().map(Pool::size).collect();
    sizes.sort_unstable();
    let as_u64: Vec<u64> = sizes.iter().map(|&s| s as u64).collect();

    let mut direct_ids: BTreeMap<&str, usize> = BTreeMap::new();
    for ((network, _), _) in index.direct_declarers() {
        *direct_ids.entry(network.as_str()).or_default() += 1;
    }
    let mut formed: BTreeMap<&str, usize> = BTreeMap::new();
    for p in pools {
        *formed.entry(p.ad_system_domain.as_str()).or_default() += 1;
    }
    let per_network = formed
        .into_iter()
        .map(|(network, n)| {
            let ids = direct_ids.get(network).copied().unwrap_or(n).max(n);
            (
                network.to_string(),
                NetworkPoolShare {
                    pools_formed: n,
                    fraction_of_all_pools: Fraction::new(n as u64, pools.len() as u64),
                    direct_ids: ids,
                    fraction_of_network_ids_pooled: Fraction::new(n as u64, ids as u64),
                },
            )
        })
        .collect();

    PoolStats {
        pool_count: pools.len(),
        size_distribution: sizes,
        mean: exact_mean(&as_u64).into(),
        median: exact_median(&as_u64).into(),
        per_network,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DarkPool {
    pub pool: Pool,
    pub distinct_owners: BTreeSet<String>,
    pub resolved_members: BTreeSet<String>,
}

/// A pool is dark when its RESOLVED members map to at least two distinct
/// normalised organisations. Other members are ignored.
pub fn classify_dark_pools(
    pools: &[Pool],
    owners: &BTreeMap<String, OwnerResolution>,
) -> Vec<DarkPool> {
    pools
        .par_iter()
        .filter_map(|pool| {
            let mut distinct_owners = BTreeSet::new();
            let mut resolved_members = BTreeSet::new();
            for m in &pool.members {
                if let Some(OwnerResolution {
                    status: OwnerStatus::Resolved,
                    normalized_org: Some(org),
                    ..
                }) = owners.get(m)
                {
                    distinct_owners.insert(org.clone());
                    resolved_members.insert(m.clone());
                }
            }
            (distinct_owners.len() >= 2).then(|| DarkPool {
                pool: pool.clone(),
                distinct_owners,
                resolved_members,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub cutoff: u64,
    /// Pools still holding two or more members ranked within the cutoff.
    pub pool_count: usize,
    pub avg_pool_size: Option<Fraction>,
    /// Percent change of the average from the previous cutoff.
    pub differential_increase: Option<f64>,
}

/// Average pool size when every pool is restricted to members ranked at or
/// below each cutoff `k * interval`, up to the largest member rank. Unranked
/// members never count; restricted pools under two members are dropped.
pub fn popularity_strata(pools: &[Pool], ranks: &RankTable, interval: u64) -> Result<Vec<Stratum>> {
    if interval == 0 {
        return Err(Error::InvalidInput("interval must be positive".into()));
    }
    let ranked: Vec<Vec<u64>> = pools
        .iter()
        .map(|p| {
            let mut r: Vec<u64> = p.members.iter().filter_map(|m| ranks.get(m)).collect();
            r.sort_unstable();
            r
        })
        .collect();
    let max_rank = ranked
        .iter()
        .filter_map(|r| r.last())
        .copied()
        .max()
        .unwrap_or(0);
    let steps = max_rank.div_ceil(interval);
    let mut out: Vec<Stratum> = Vec::with_capacity(steps as usize);
    for k in 1..=steps {
        let cutoff = k * interval;
        let sizes: Vec<u64> = ranked
            .iter()
            .map(|r| r.partition_point(|&x| x <= cutoff) as u64)
            .filter(|&n| n >= 2)
            .collect();
        let avg = (!sizes.is_empty()).then(|| Fraction::from(exact_mean(&sizes)));
        let differential_increase = match (out.last().and_then(|s| s.avg_pool_size), avg) {
            (Some(prev), Some(cur)) => Some((cur.value() - prev.value()) / prev.value() * 100.0),
            _ => None,
        };
        out.push(Stratum {
            cutoff,
            pool_count: sizes.len(),
            avg_pool_size: avg,
            differential_increase,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowEdge {
    pub network: String,
    pub website: String,
    /// Number of the network's pools that contain the website.
    pub weight: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowGraph {
    pub edges: Vec<FlowEdge>,
}

impl FlowGraph {
    pub fn weight(&self, network: &str, website: &str) -> u64 {
        self.edges
            .iter()
            .find(|e| e.network == network && e.website == website)
            .map_or(0, |e| e.weight)
    }
}

/// Network-to-website edges weighted by shared pools, restricted to
/// `focus_sites` unless it is empty.
pub fn revenue_flow_graph(pools: &[Pool], focus_sites: &BTreeSet<String>) -> FlowGraph {
    let mut weights: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for p in pools {
        for m in &p.members {
            if focus_sites.is_empty() || focus_sites.contains(m) {
                *weights.entry((&p.ad_system_domain, m)).or_default() += 1;
            }
        }
    }
    FlowGraph {
        edges: weights
            .into_iter()
            .map(|((n, w), weight)| FlowEdge {
                network: n.to_string(),
                website: w.to_string(),
                weight,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverusedId {
    pub network: String,
    pub account_id: String,
    /// Name from the network's sellers.json entry for the id, when listed.
    pub declared_owner: Option<String>,
    pub seller_type: Option<SellerType>,
    pub website_count: usize,
}

/// DIRECT keys declared by at least `threshold` websites, most used first.
pub fn flag_overused_direct_ids(index: &EntryIndex, threshold: usize) -> Result<Vec<OverusedId>> {
    if threshold < 2 {
        return Err(Error::InvalidInput("threshold must be at least 2".into()));
    }
    let mut rows: Vec<OverusedId> = index
        .direct_declarers()
        .filter(|(_, d)| d.len() >= threshold)
        .map(|((network, id), declarers)| {
            let entry = index
                .by_seller
                .get(&(network.clone(), id.clone()))
                .and_then(|v| v.first());
            OverusedId {
                network: network.clone(),
                account_id: id.clone(),
                declared_owner: entry.and_then(|e| e.name.clone()),
                seller_type: entry.map(|e| e.seller_type),
                website_count: declarers.len(),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.website_count
            .cmp(&a.website_count)
            .then_with(|| a.network.cmp(&b.network))
            .then_with(|| a.account_id.cmp(&b.account_id))
    });
    Ok(rows)
}

/// Number of pools each website belongs to.
pub fn participation(pools: &[Pool]) -> BTreeMap<&str, usize> {
    let mut out: BTreeMap<&str, usize> = BTreeMap::new();
    for p in pools {
        for m in &p.members {
            *out.entry(m.as_str()).or_default() += 1;
        }
    }
    out
}

/// Pearson correlation between the rank of every ranked publisher with an
/// ads.txt file and the number of pools it participates in (zero included).
/// `None` when fewer than three such publishers exist or either side is
/// constant.
pub fn rank_participation_correlation(
    pools: &[Pool],
    index: &EntryIndex,
    ranks: &RankTable,
) -> Option<StatResult> {
    let counts = participation(pools);
    let (xs, ys): (Vec<f64>, Vec<f64>) = index
        .by_publisher
        .keys()
        .filter_map(|p| {
            let r = ranks.get(p)?;
            Some((
                r as f64,
                counts.get(p.as_str()).copied().unwrap_or(0) as f64,
            ))
        })
        .unzip();
    pearson(&xs, &ys).ok()
}

/// KS test between the sizes of pools carrying `tag` and all other pools.
/// `None` when either group is empty.
pub fn ks_tagged_vs_untagged(pools: &[Pool], tag: Tag) -> Option<StatResult> {
    let (tagged, other): (Vec<&Pool>, Vec<&Pool>) =
        pools.iter().partition(|p| p.tags.contains(&tag));
    let a: Vec<f64> = tagged.iter().map(|p| p.size() as f64).collect();
    let b: Vec<f64> = other.iter().map(|p| p.size() as f64).collect();
    ks_two_sample(&a, &b).ok()
}
