use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::crawler::CrawlSnapshot;
use crate::parser::{AccountType, AdsTxtRecord, SellerEntry, SellersFile};

/// `(ad system domain, account id)`.
pub type AccountKey = (String, String);

/// Lookup tables over one snapshot. Built once; never mutated afterwards.
#[derive(Debug, Clone, Default)]
pub struct EntryIndex {
    pub by_account: BTreeMap<AccountKey, BTreeSet<(String, AccountType)>>,
    pub by_publisher: BTreeMap<String, Vec<AdsTxtRecord>>,
    pub by_network: BTreeMap<String, SellersFile>,
    /// Every entry with the given id, in file order (duplicates are kept).
    pub by_seller: BTreeMap<AccountKey, Vec<SellerEntry>>,
}

impl EntryIndex {
    pub fn build(snapshot: &CrawlSnapshot) -> Self {
        let mut idx = EntryIndex::default();
        for (publisher, file) in &snapshot.ads_files {
            for r in &file.records {
                idx.by_account
                    .entry((r.ad_system_domain.clone(), r.account_id.clone()))
                    .or_default()
                    .insert((publisher.clone(), r.account_type));
            }
            idx.by_publisher
                .insert(publisher.clone(), file.records.clone());
        }
        for (network, file) in &snapshot.sellers_files {
            for e in &file.entries {
                idx.by_seller
                    .entry((network.clone(), e.seller_id.clone()))
                    .or_default()
                    .push(e.clone());
            }
            idx.by_network.insert(network.clone(), file.clone());
        }
        idx
    }

    pub fn record_count(&self) -> usize {
        self.by_publisher.values().map(Vec::len).sum()
    }

    pub fn seller_entry_count(&self) -> usize {
        self.by_network.values().map(|f| f.entries.len()).sum()
    }

    /// Publishers declaring `(network, id)`, split by account type, plus the
    /// network's own entry for the id (the first one when duplicated).
    pub fn lookup_account(&self, network: &str, account_id: &str) -> AccountLookup {
        let key = (network.to_string(), account_id.to_string());
        let mut out = AccountLookup {
            network: network.to_string(),
            account_id: account_id.to_string(),
            ..Default::default()
        };
        if let Some(declarers) = self.by_account.get(&key) {
            for (publisher, t) in declarers {
                match t {
                    AccountType::Direct => out.direct_declarers.insert(publisher.clone()),
                    AccountType::Reseller => out.reseller_declarers.insert(publisher.clone()),
                };
            }
        }
        out.seller_entry = self.by_seller.get(&key).and_then(|v| v.first()).cloned();
        out
    }

    /// DIRECT declarers of every key, skipping keys with none.
    pub fn direct_declarers(&self) -> impl Iterator<Item = (&AccountKey, BTreeSet<&str>)> {
        self.by_account.iter().filter_map(|(k, set)| {
            let direct: BTreeSet<&str> = set
                .iter()
                .filter(|(_, t)| *t == AccountType::Direct)
                .map(|(p, _)| p.as_str())
                .collect();
            (!direct.is_empty()).then_some((k, direct))
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountLookup {
    pub network: String,
    pub account_id: String,
    pub direct_declarers: BTreeSet<String>,
    pub reseller_declarers: BTreeSet<String>,
    pub seller_entry: Option<SellerEntry>,
}

/// An ingested snapshot together with its immutable index.
#[derive(Debug, Clone)]
pub struct SealedSnapshot {
    pub snapshot: Arc<CrawlSnapshot>,
    pub index: Arc<EntryIndex>,
}

impl SealedSnapshot {
    pub fn new(snapshot: CrawlSnapshot) -> Self {
        let index = EntryIndex::build(&snapshot);
        SealedSnapshot {
            snapshot: Arc::new(snapshot),
            index: Arc::new(index),
        }
    }

    pub fn id(&self) -> &str {
        &self.snapshot.snapshot_id
    }

    pub fn lookup_account(&self, network: &str, account_id: &str) -> AccountLookup {
        self.index.lookup_account(network, account_id)
    }
}
