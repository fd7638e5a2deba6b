//! Domain-name normalisation shared by every module.
//!
//! Domains are compared as exact lowercase strings. No subdomain folding is
//! performed anywhere: `realtimebidding.google.com` and `google.com` are two
//! different nodes.

/// Lowercases and trims a domain as written in a file, dropping a leading
/// URL scheme, any path, a port and a trailing dot.
pub fn normalize_domain(raw: &str) -> String {
    let mut s = raw.trim();
    for scheme in ["https://", "http://"] {
        if s.len() >= scheme.len() && s[..scheme.len()].eq_ignore_ascii_case(scheme) {
            s = &s[scheme.len()..];
        }
    }
    if let Some(idx) = s.find(['/', '?', '#']) {
        s = &s[..idx];
    }
    if let Some(idx) = s.rfind(':') {
        if s[idx + 1..].chars().all(|c| c.is_ascii_digit()) {
            s = &s[..idx];
        }
    }
    s.trim_end_matches('.').to_lowercase()
}

/// Syntactic check for a host name: at least two dot-separated labels of
/// `[a-z0-9_-]`, no label longer than 63 bytes and no leading/trailing hyphen.
///
/// Expects an already-normalised (lowercase) value.
pub fn is_valid_domain(domain: &str) -> bool {
    if domain.is_empty() || domain.len() > 253 {
        return false;
    }
    let labels: Vec<&str> = domain.split('.').collect();
    if labels.len() < 2 {
        return false;
    }
    labels.iter().all(|label| {
        !label.is_empty()
            && label.len() <= 63
            && !label.starts_with('-')
            && !label.ends_with('-')
            && label
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_')
    })
}

/// Normalises and validates in one step.
pub fn parse_domain(raw: &str) -> Option<String> {
    let d = normalize_domain(raw);
    is_valid_domain(&d).then_some(d)
}

/// Extracts the host part of an `http(s)://host/path` URL, lowercased.
pub fn url_host(url: &str) -> Option<String> {
    let rest = url.split_once("://").map(|(_, r)| r).unwrap_or(url);
    let host = rest.split(['/', '?', '#']).next()?;
    let host = host.rsplit_once('@').map(|(_, h)| h).unwrap_or(host);
    let host = match host.rsplit_once(':') {
        Some((h, port)) if port.chars().all(|c| c.is_ascii_digit()) => h,
        _ => host,
    };
    (!host.is_empty()).then(|| host.to_lowercase())
}
