//! Generated ads.txt and sellers.json bodies and the properties the parser
//! must hold on them.

use std::collections::BTreeMap;

use adtrace_core::parser::{
    lint_sellers_file, parse_ads_txt, parse_sellers_json, AccountType, AdsTxtRecord, FindingCode,
    SellerType,
};
use proptest::prelude::*;

pub const FUZZ_CASES: u32 = 10_000;

pub fn domain() -> impl Strategy<Value = String> {
    (
        "[a-z][a-z0-9]{0,8}",
        prop::sample::select(vec!["com", "net", "io", "co.uk", "tv"]),
    )
        .prop_map(|(l, t)| format!("{l}.{t}"))
}

pub fn account_id() -> impl Strategy<Value = String> {
    "[A-Za-z0-9_.-]{1,20}"
}

pub fn account_type() -> impl Strategy<Value = AccountType> {
    prop_oneof![Just(AccountType::Direct), Just(AccountType::Reseller)]
}

pub fn record() -> impl Strategy<Value = AdsTxtRecord> {
    (
        domain(),
        account_id(),
        account_type(),
        prop::option::of("[a-f0-9]{16}"),
    )
        .prop_map(|(d, id, t, cert)| AdsTxtRecord {
            ad_system_domain: d,
            account_id: id,
            account_type: t,
            cert_authority_id: cert,
            source_line: 0,
        })
}

/// Lines drawn from a grammar that mixes valid records, comments, variables
/// and a range of broken shapes.
pub fn ads_line() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => record().prop_map(|r| r.to_line()),
        1 => "#[ -~]{0,30}",
        1 => ("[a-z]{3,9}", "[ -~]{0,20}").prop_map(|(k, v)| format!("{k}={v}")),
        1 => record().prop_map(|r| format!("{} # trailing", r.to_line())),
        1 => record().prop_map(|r| format!("{};ext=1", r.to_line())),
        1 => "[ -~]{0,60}",
        1 => "[,; \t]{0,10}",
        1 => (domain(), account_id()).prop_map(|(d, id)| format!("{d}, {id}")),
        1 => (domain(), account_id()).prop_map(|(d, id)| format!("{d}, {id}, SOMETIMES")),
        1 => "\\PC{0,40}",
    ]
}

pub fn ads_body() -> impl Strategy<Value = Vec<u8>> {
    prop_oneof![
        3 => (prop::collection::vec(ads_line(), 0..25), prop::sample::select(vec!["\n", "\r\n", "\r"]))
            .prop_map(|(lines, sep)| lines.join(sep).into_bytes()),
        1 => prop::collection::vec(any::<u8>(), 0..400),
    ]
}

#[derive(Debug, Clone)]
pub struct GenEntry {
    seller_id: String,
    seller_type: &'static str,
    name: Option<String>,
    domain: Option<String>,
    confidential: bool,
}

pub fn gen_entry() -> impl Strategy<Value = GenEntry> {
    (
        account_id(),
        prop::sample::select(vec!["PUBLISHER", "INTERMEDIARY", "BOTH", "publisher"]),
        prop::option::of("[A-Za-z ]{1,20}"),
        prop::option::of(domain()),
        any::<bool>(),
    )
        .prop_map(
            |(seller_id, seller_type, name, domain, confidential)| GenEntry {
                seller_id,
                seller_type,
                name,
                domain,
                confidential,
            },
        )
}

pub fn entry_json(e: &GenEntry) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    m.insert("seller_id".into(), e.seller_id.clone().into());
    m.insert("seller_type".into(), e.seller_type.into());
    if let Some(n) = &e.name {
        m.insert("name".into(), n.clone().into());
    }
    if let Some(d) = &e.domain {
        m.insert("domain".into(), d.clone().into());
    }
    if e.confidential {
        m.insert("is_confidential".into(), 1.into());
    }
    serde_json::Value::Object(m)
}

pub fn sellers_body() -> impl Strategy<Value = Vec<u8>> {
    let valid = prop::collection::vec(gen_entry(), 0..12).prop_map(|es| {
        let v = serde_json::json!({"version": "1.0", "sellers": es.iter().map(entry_json).collect::<Vec<_>>()});
        serde_json::to_vec(&v).unwrap()
    });
    let broken_entries = prop::collection::vec(
        prop_oneof![
            gen_entry().prop_map(|e| entry_json(&e)),
            Just(serde_json::json!({"seller_type": "PUBLISHER"})),
            Just(serde_json::json!({"seller_id": 7, "seller_type": "RESELLER"})),
            Just(serde_json::json!("not an object")),
            Just(serde_json::json!({"seller_id": null, "seller_type": 3})),
        ],
        0..8,
    )
    .prop_map(|es| serde_json::to_vec(&serde_json::json!({"sellers": es})).unwrap());
    prop_oneof![
        3 => valid,
        2 => broken_entries,
        1 => "[ -~]{0,80}".prop_map(String::into_bytes),
        1 => prop::collection::vec(any::<u8>(), 0..300),
        1 => Just(b"[]".to_vec()),
        1 => Just(br#"{"sellers": {}}"#.to_vec()),
    ]
}

pub fn sellers_entries() -> impl Strategy<Value = Vec<GenEntry>> {
    prop::collection::vec(gen_entry(), 0..12)
}

pub fn multiset(
    records: &[AdsTxtRecord],
) -> BTreeMap<(String, String, AccountType, Option<String>), usize> {
    let mut m = BTreeMap::new();
    for r in records {
        *m.entry((
            r.ad_system_domain.clone(),
            r.account_id.clone(),
            r.account_type,
            r.cert_authority_id.clone(),
        ))
        .or_insert(0) += 1;
    }
    m
}

pub fn ads_txt_total_and_round_trip(body: &[u8]) -> Result<(), TestCaseError> {
    let f = parse_ads_txt("pub.example", &body);
    prop_assert_eq!(&parse_ads_txt("pub.example", &body), &f);
    let g = parse_ads_txt("pub.example", f.to_canonical_text().as_bytes());
    prop_assert_eq!(multiset(&f.records), multiset(&g.records));
    prop_assert!(!g.has_errors());
    for r in &f.records {
        prop_assert!(r.source_line >= 1);
        prop_assert_eq!(&r.ad_system_domain, &r.ad_system_domain.to_lowercase());
    }
    Ok(())
}

pub fn sellers_json_total(body: &[u8]) -> Result<(), TestCaseError> {
    let f = parse_sellers_json("net.example", &body);
    let lint = lint_sellers_file(&f);
    prop_assert!(lint.iter().all(|x| x.code != FindingCode::InvalidJson));
    if !f.is_structurally_valid() {
        prop_assert!(f.entries.is_empty());
        prop_assert_eq!(f.parse_findings.iter().filter(|x| x.is_error()).count(), 1);
    }
    prop_assert_eq!(parse_sellers_json("net.example", &body), f);
    Ok(())
}

pub fn sellers_json_round_trip(entries: &[GenEntry]) -> Result<(), TestCaseError> {
    let body = serde_json::to_vec(&serde_json::json!({
        "sellers": entries.iter().map(entry_json).collect::<Vec<_>>()
    }))
    .unwrap();
    let f = parse_sellers_json("net.example", &body);
    prop_assert!(f.is_structurally_valid());
    prop_assert_eq!(f.entries.len(), entries.len());
    let again = serde_json::json!({
        "sellers": f.entries.iter().map(|e| {
            let mut m = serde_json::Map::new();
            m.insert("seller_id".into(), e.seller_id.clone().into());
            m.insert("seller_type".into(), e.seller_type.as_str().into());
            if let Some(n) = &e.name { m.insert("name".into(), n.clone().into()); }
            if let Some(d) = &e.domain { m.insert("domain".into(), d.clone().into()); }
            m.insert("is_confidential".into(), u8::from(e.is_confidential).into());
            serde_json::Value::Object(m)
        }).collect::<Vec<_>>()
    });
    let g = parse_sellers_json("net.example", &serde_json::to_vec(&again).unwrap());
    prop_assert_eq!(&g.entries, &f.entries);
    for (e, src) in f.entries.iter().zip(entries) {
        prop_assert_eq!(&e.seller_id, &src.seller_id);
        prop_assert_eq!(e.is_confidential, src.confidential);
        let want = match src.seller_type.to_ascii_uppercase().as_str() {
            "PUBLISHER" => SellerType::Publisher,
            "INTERMEDIARY" => SellerType::Intermediary,
            _ => SellerType::Both,
        };
        prop_assert_eq!(e.seller_type, want);
    }
    Ok(())
}
