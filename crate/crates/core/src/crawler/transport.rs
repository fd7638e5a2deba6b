use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::Utc;
use serde::Deserialize;

use super::politeness::HostThrottle;
use super::{CrawlConfig, FetchOutcome, FetchStatus};
use crate::domain::url_host;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TransportMode {
    Live,
    Fixture,
}

/// One logical GET. Redirects and the HTTPS to HTTP fallback are followed
/// inside a single call, so callers see exactly one outcome per URL.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> FetchOutcome;
    fn mode(&self) -> TransportMode;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn get(&self, url: &str) -> FetchOutcome {
        (**self).get(url)
    }
    fn mode(&self) -> TransportMode {
        (**self).mode()
    }
}

impl<T: Transport + ?Sized> Transport for &T {
    fn get(&self, url: &str) -> FetchOutcome {
        (**self).get(url)
    }
    fn mode(&self) -> TransportMode {
        (**self).mode()
    }
}

/// True when more than 30% of the first 8 KiB are control bytes other than
/// common whitespace. Content-Type headers are never consulted.
pub fn looks_non_text(body: &[u8]) -> bool {
    let sample = &body[..body.len().min(8192)];
    if sample.is_empty() {
        return false;
    }
    let control = sample
        .iter()
        .filter(|&&b| (b < 0x20 && !matches!(b, b'\t' | b'\n' | b'\r' | 0x0c)) || b == 0x7f)
        .count();
    control * 10 > sample.len() * 3
}

fn finish(
    url: &str,
    final_url: Option<String>,
    http_status: Option<u16>,
    body: Vec<u8>,
) -> FetchOutcome {
    if looks_non_text(&body) {
        return FetchOutcome::failed(url, FetchStatus::NonText, final_url, http_status);
    }
    FetchOutcome {
        url: url.to_string(),
        status: FetchStatus::Ok,
        final_url,
        body: Some(body),
        fetched_at: Utc::now(),
        http_status,
    }
}

fn resolve_location(base: &str, location: &str) -> String {
    if location.contains("://") {
        return location.to_string();
    }
    let (scheme, rest) = base.split_once("://").unwrap_or(("https", base));
    let host = rest.split('/').next().unwrap_or(rest);
    if location.starts_with('/') {
        format!("{scheme}://{host}{location}")
    } else {
        let dir = match rest.rfind('/') {
            Some(i) => &rest[..i],
            None => host,
        };
        format!("{scheme}://{dir}/{location}")
    }
}

/// Simulated status for a fixture path, read from `<host>/meta`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaRule {
    status: Option<String>,
    location: Option<String>,
    http_status: Option<u16>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HostMeta {
    status: Option<String>,
    location: Option<String>,
    http_status: Option<u16>,
    #[serde(default)]
    paths: BTreeMap<String, MetaRule>,
}

impl HostMeta {
    fn rule_for(&self, path: &str) -> MetaRule {
        self.paths.get(path).cloned().unwrap_or(MetaRule {
            status: self.status.clone(),
            location: self.location.clone(),
            http_status: self.http_status,
        })
    }
}

enum Step {
    Done(FetchOutcome),
    Redirect(String),
}

/// Replays a directory tree laid out as `<host>/<path>`.
///
/// An optional `<host>/meta` TOML file simulates statuses:
///
/// ```toml
/// status = "timeout"            # applies to every path on the host
/// [paths."sellers.json"]
/// status = "redirect"
/// location = "https://other.example/sellers.json"
/// ```
///
/// Recognised statuses are `ok`, `not_found`, `timeout`, `network_error`,
/// `non_text` and `redirect`; an `http_status` of 404 or 5xx maps to
/// NOT_FOUND or NETWORK_ERROR. A missing file is NOT_FOUND, a missing host
/// directory is NETWORK_ERROR (unresolvable name).
#[derive(Debug, Clone)]
pub struct FixtureTransport {
    root: PathBuf,
    max_redirects: u32,
}

impl FixtureTransport {
    pub fn new(root: impl Into<PathBuf>, max_redirects: u32) -> Self {
        FixtureTransport {
            root: root.into(),
            max_redirects,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn step(&self, original: &str, current: &str, final_url: Option<String>) -> Step {
        let fail = |status, http: Option<u16>| {
            Step::Done(FetchOutcome::failed(
                original,
                status,
                final_url.clone(),
                http,
            ))
        };
        let Some(host) = url_host(current) else {
            return fail(FetchStatus::NetworkError, None);
        };
        let path = current
            .split_once("://")
            .map(|(_, r)| r)
            .unwrap_or(current)
            .split_once('/')
            .map(|(_, p)| p)
            .unwrap_or("")
            .split(['?', '#'])
            .next()
            .unwrap_or("")
            .to_string();
        if host.contains("..") || path.split('/').any(|seg| seg == "..") {
            return fail(FetchStatus::NetworkError, None);
        }
        let host_dir = self.root.join(&host);
        if !host_dir.is_dir() {
            return fail(FetchStatus::NetworkError, None);
        }
        let meta: HostMeta = match std::fs::read_to_string(host_dir.join("meta")) {
            Ok(text) => match toml::from_str(&text) {
                Ok(m) => m,
                Err(e) => {
                    log::warn!("ignoring malformed fixture meta for {host}: {e}");
                    HostMeta::default()
                }
            },
            Err(_) => HostMeta::default(),
        };
        let rule = meta.rule_for(&path);
        match rule
            .status
            .as_deref()
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("redirect") => {
                return match rule.location {
                    Some(loc) => Step::Redirect(resolve_location(current, &loc)),
                    None => fail(FetchStatus::NetworkError, rule.http_status),
                }
            }
            Some("timeout") => return fail(FetchStatus::Timeout, None),
            Some("network_error") => return fail(FetchStatus::NetworkError, rule.http_status),
            Some("not_found") => {
                return fail(FetchStatus::NotFound, rule.http_status.or(Some(404)))
            }
            Some("non_text") => return fail(FetchStatus::NonText, rule.http_status.or(Some(200))),
            Some("ok") | None => {}
            Some(other) => {
                log::warn!("unknown fixture status `{other}` for {host}/{path}");
            }
        }
        match rule.http_status {
            Some(404) | Some(410) => return fail(FetchStatus::NotFound, rule.http_status),
            Some(s) if s >= 400 => return fail(FetchStatus::NetworkError, Some(s)),
            _ => {}
        }
        if path.is_empty() {
            return fail(FetchStatus::NotFound, Some(404));
        }
        match std::fs::read(host_dir.join(&path)) {
            Ok(body) => Step::Done(finish(original, final_url, Some(200), body)),
            Err(_) => fail(FetchStatus::NotFound, Some(404)),
        }
    }
}

impl Transport for FixtureTransport {
    fn get(&self, url: &str) -> FetchOutcome {
        let mut current = url.to_string();
        let mut final_url = None;
        let mut hops = 0;
        loop {
            match self.step(url, &current, final_url.clone()) {
                Step::Done(outcome) => return outcome,
                Step::Redirect(next) => {
                    hops += 1;
                    final_url = Some(next.clone());
                    if hops > self.max_redirects {
                        return FetchOutcome::failed(url, FetchStatus::Redirected, final_url, None);
                    }
                    current = next;
                }
            }
        }
    }

    fn mode(&self) -> TransportMode {
        TransportMode::Fixture
    }
}

/// Blocking HTTP(S) client. Redirects are followed manually so each hop goes
/// through the per-host throttle; an HTTPS network failure is retried once
/// over plain HTTP.
pub struct HttpTransport {
    agent: ureq::Agent,
    max_redirects: u32,
    max_body_bytes: u64,
    throttle: Arc<HostThrottle>,
}

impl HttpTransport {
    pub fn new(config: &CrawlConfig, throttle: Arc<HostThrottle>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .max_redirects(0)
            .http_status_as_error(false)
            .user_agent(config.user_agent.as_str())
            .build()
            .into();
        HttpTransport {
            agent,
            max_redirects: config.max_redirects,
            max_body_bytes: config.max_body_bytes,
            throttle,
        }
    }

    fn fetch_chain(&self, url: &str) -> FetchOutcome {
        let mut current = url.to_string();
        let mut final_url = None;
        let mut hops = 0;
        loop {
            if let Some(host) = url_host(&current) {
                self.throttle.wait(&host);
            }
            let response = match self.agent.get(&current).call() {
                Ok(r) => r,
                Err(e) => {
                    let status = match e {
                        ureq::Error::Timeout(_) => FetchStatus::Timeout,
                        _ => FetchStatus::NetworkError,
                    };
                    log::debug!("GET {current}: {e}");
                    return FetchOutcome::failed(url, status, final_url, None);
                }
            };
            let code = response.status().as_u16();
            if (300..400).contains(&code) {
                let location = response
                    .headers()
                    .get("location")
                    .and_then(|v| v.to_str().ok())
                    .map(|loc| resolve_location(&current, loc));
                let Some(next) = location else {
                    return FetchOutcome::failed(
                        url,
                        FetchStatus::NetworkError,
                        final_url,
                        Some(code),
                    );
                };
                hops += 1;
                final_url = Some(next.clone());
                if hops > self.max_redirects {
                    return FetchOutcome::failed(
                        url,
                        FetchStatus::Redirected,
                        final_url,
                        Some(code),
                    );
                }
                current = next;
                continue;
            }
            if code == 404 || code == 410 {
                return FetchOutcome::failed(url, FetchStatus::NotFound, final_url, Some(code));
            }
            if code >= 400 {
                return FetchOutcome::failed(url, FetchStatus::NetworkError, final_url, Some(code));
            }
            let mut body = Vec::new();
            let read = response
                .into_body()
                .into_reader()
                .take(self.max_body_bytes)
                .read_to_end(&mut body);
            if let Err(e) = read {
                let status = if e.kind() == std::io::ErrorKind::TimedOut {
                    FetchStatus::Timeout
                } else {
                    FetchStatus::NetworkError
                };
                return FetchOutcome::failed(url, status, final_url, Some(code));
            }
            return finish(url, final_url, Some(code), body);
        }
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> FetchOutcome {
        let first = self.fetch_chain(url);
        if first.status == FetchStatus::NetworkError && first.http_status.is_none() {
            if let Some(rest) = url.strip_prefix("https://") {
                let mut second = self.fetch_chain(&format!("http://{rest}"));
                second.url = url.to_string();
                if second.status == FetchStatus::Ok || second.final_url.is_some() {
                    second
                        .final_url
                        .get_or_insert_with(|| format!("http://{rest}"));
                }
                return second;
            }
        }
        first
    }

    fn mode(&self) -> TransportMode {
        TransportMode::Live
    }
}

/// Wraps a transport and records every logical request URL.
pub struct RecordingTransport<T> {
    inner: T,
    requests: Mutex<Vec<String>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport {
            inner,
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().expect("request log poisoned").clone()
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&self, url: &str) -> FetchOutcome {
        self.requests
            .lock()
            .expect("request log poisoned")
            .push(url.to_string());
        self.inner.get(url)
    }

    fn mode(&self) -> TransportMode {
        self.inner.mode()
    }
}
