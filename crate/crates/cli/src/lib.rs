//! The `adtrace` command line: crawl, ingest, analyze, report, validate and
//! serve.
//!
//! Exit codes: 0 success, 1 findings or violations present, 2 operational
//! error.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::num::NonZeroU32;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use adtrace_core::analysis::{materialize, AnalysisInputs, AnalysisReport, InputPaths};
use adtrace_core::crawler::{
    crawl_ads_txt, crawl_sellers_recursive, live_fetch_passthrough, load_aliases, load_seeds,
    network_seeds, CrawlConfig, CrawlSnapshot, FixtureTransport, HostThrottle, HttpTransport,
    Transport,
};
use adtrace_core::datastore::Datastore;
use adtrace_core::parser::{FileKind, ParseFinding, ParsedFile, Severity};
use adtrace_core::report::{write_report, ReportKind};
use adtrace_core::tools::validate_domain;
use adtrace_core::whois::{FixtureWhois, LiveWhois, PrivacyKeywordList, WhoisSource};
use adtrace_server::{AppState, RateLimits, ServiceConfig, ADMIN_TOKEN_ENV};
use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FINDINGS: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

const DEFAULT_DATA_DIR: &str = "adtrace-data";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(
    name = "adtrace",
    version,
    about = "Audit ads.txt and sellers.json supply chains"
)]
pub struct Cli {
    /// Directory holding the datastore and crawl outputs.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// TOML file providing defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct TransportArgs {
    /// Replay a directory tree instead of fetching over the network.
    #[arg(long)]
    pub fixture_root: Option<PathBuf>,
    /// File of `domain url` lines overriding sellers.json locations.
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    #[arg(long)]
    pub per_host_delay_ms: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch /ads.txt for every seed domain.
    CrawlAds {
        /// Tranco-style `rank,domain` CSV or one domain per line.
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        max_domains: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        transport: TransportArgs,
    },
    /// Recursively fetch sellers.json, starting from seeds or from the
    /// networks named in an ads.txt crawl.
    CrawlSellers {
        #[arg(long, conflicts_with = "from", required_unless_present = "from")]
        seeds: Option<PathBuf>,
        /// Crawl output of `crawl-ads` to take network seeds from.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long)]
        max_depth: Option<u32>,
        #[arg(long)]
        max_domains: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        transport: TransportArgs,
    },
    /// Merge crawl outputs into one snapshot and store it.
    Ingest {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run every analysis over a snapshot and store the result.
    Analyze {
        #[arg(long)]
        snapshot: Option<String>,
        /// Directory of `<domain>.txt` WHOIS records.
        #[arg(long, conflicts_with = "live_whois")]
        whois_dir: Option<PathBuf>,
        /// Query WHOIS servers over the network.
        #[arg(long)]
        live_whois: bool,
        #[arg(long)]
        privacy_keywords: Option<PathBuf>,
    },
    /// Export one analysis table as CSV.
    Report {
        kind: ReportKind,
        #[arg(long)]
        snapshot: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and lint an ads.txt or sellers.json file or live domain.
    Validate {
        target: String,
        #[arg(long)]
        kind: Option<FileKind>,
        /// Treat the target as a domain and fetch its file.
        #[arg(long)]
        live: bool,
        #[command(flatten)]
        transport: TransportArgs,
    },
    /// Start the HTTP API.
    Serve {
        #[arg(long)]
        bind: Option<SocketAddr>,
        /// Enable /api/v1/fetch against the network.
        #[arg(long)]
        live_fetch: bool,
        #[command(flatten)]
        transport: TransportArgs,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CrawlSection {
    user_agent: Option<String>,
    timeout_secs: Option<u64>,
    max_redirects: Option<u32>,
    max_recursion_depth: Option<u32>,
    max_domains: Option<usize>,
    per_host_delay_ms: Option<u64>,
    workers: Option<usize>,
    aliases: Option<PathBuf>,
    fixture_root: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AnalysisSection {
    overused_threshold: Option<usize>,
    distributed_threshold: Option<usize>,
    strata_interval: Option<u64>,
    top_n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct WhoisSection {
    fixture_dir: Option<PathBuf>,
    live: bool,
    timeout_secs: Option<u64>,
    privacy_keywords: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ServeSection {
    bind: Option<SocketAddr>,
    live_fetch: bool,
    per_client_per_minute: Option<u32>,
    per_target_per_minute: Option<u32>,
    burst: Option<u32>,
}

/// Contents of the `--config` file. Relative paths are taken from the
/// file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    data_dir: Option<PathBuf>,
    format: Option<Format>,
    crawl: CrawlSection,
    inputs: InputPaths,
    analysis: AnalysisSection,
    whois: WhoisSection,
    serve: ServeSection,
}

impl FileConfig {
    fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(v) = p.as_mut() {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        fix(&mut cfg.data_dir);
        fix(&mut cfg.crawl.aliases);
        fix(&mut cfg.crawl.fixture_root);
        fix(&mut cfg.whois.fixture_dir);
        fix(&mut cfg.whois.privacy_keywords);
        let i = &mut cfg.inputs;
        for p in [
            &mut i.verified_networks,
            &mut i.misinformation,
            &mut i.piracy,
            &mut i.illegal,
            &mut i.content_owners,
            &mut i.ranks,
        ] {
            fix(p);
        }
        Ok(cfg)
    }
}

struct Ctx<'a> {
    data_dir: PathBuf,
    format: Option<Format>,
    file: FileConfig,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn store(&self) -> anyhow::Result<Datastore> {
        Datastore::open(&self.data_dir)
            .with_context(|| format!("opening datastore in {}", self.data_dir.display()))
    }

    fn crawl_config(&self, t: &TransportArgs) -> anyhow::Result<CrawlConfig> {
        let c = &self.file.crawl;
        let d = CrawlConfig::default();
        let aliases = match t.aliases.as_ref().or(c.aliases.as_ref()) {
            Some(p) => load_aliases(p)?,
            None => Default::default(),
        };
        let fixture = self.fixture_root(t).is_some();
        let delay = t
            .per_host_delay_ms
            .or(c.per_host_delay_ms)
            .map(Duration::from_millis)
            .unwrap_or(if fixture {
                Duration::ZERO
            } else {
                d.per_host_delay
            });
        let config = CrawlConfig {
            user_agent: c.user_agent.clone().unwrap_or(d.user_agent),
            timeout: c.timeout_secs.map(Duration::from_secs).unwrap_or(d.timeout),
            max_redirects: c.max_redirects.unwrap_or(d.max_redirects),
            max_recursion_depth: c.max_recursion_depth.unwrap_or(d.max_recursion_depth),
            max_domains: c.max_domains.unwrap_or(d.max_domains),
            per_host_delay: delay,
            workers: t.workers.or(c.workers).unwrap_or(d.workers),
            max_body_bytes: d.max_body_bytes,
            sellers_path_aliases: aliases,
        };
        config.validate()?;
        Ok(config)
    }

    fn fixture_root(&self, t: &TransportArgs) -> Option<PathBuf> {
        t.fixture_root
            .clone()
            .or_else(|| self.file.crawl.fixture_root.clone())
    }

    fn transport(&self, t: &TransportArgs, config: &CrawlConfig) -> Arc<dyn Transport> {
        match self.fixture_root(t) {
            Some(root) => Arc::new(FixtureTransport::new(root, config.max_redirects)),
            None => Arc::new(HttpTransport::new(
                config,
                Arc::new(HostThrottle::new(config.per_host_delay)),
            )),
        }
    }

    fn inputs(&self) -> anyhow::Result<AnalysisInputs> {
        let mut inputs = AnalysisInputs::from_paths(&self.file.inputs)?;
        let a = &self.file.analysis;
        if let Some(v) = a.overused_threshold {
            inputs.overused_threshold = v;
        }
        if let Some(v) = a.distributed_threshold {
            inputs.distributed_threshold = v;
        }
        if let Some(v) = a.strata_interval {
            inputs.strata_interval = v;
        }
        Ok(inputs)
    }

    fn crawl_out(&self, explicit: Option<PathBuf>, prefix: &str, snap: &CrawlSnapshot) -> PathBuf {
        explicit.unwrap_or_else(|| {
            self.data_dir
                .join("crawls")
                .join(format!("{prefix}-{}.json", snap.snapshot_id))
        })
    }

    fn line(&mut self, s: impl AsRef<str>) -> anyhow::Result<()> {
        writeln!(self.out, "{}", s.as_ref())?;
        Ok(())
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer(std::io::BufWriter::new(file), value)?;
    Ok(())
}

fn read_snapshot(path: &Path) -> anyhow::Result<CrawlSnapshot> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .with_context(|| format!("{} is not a crawl output", path.display()))
}

fn crawl_summary(snap: &CrawlSnapshot) -> String {
    let failures: usize = snap.failures.values().map(|m| m.len()).sum();
    format!(
        "snapshot {}: {} ads.txt, {} sellers.json, {} failures{}",
        snap.snapshot_id,
        snap.ads_files.len(),
        snap.sellers_files.len(),
        failures,
        if snap.truncated { " (truncated)" } else { "" }
    )
}

/// Runs one invocation, writing normal output to `out` and diagnostics to
/// `err`, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_ERROR;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let stage = stage_name(&cli.command);
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {stage}: {e:#}");
            EXIT_ERROR
        }
    }
}

fn stage_name(c: &Command) -> &'static str {
    match c {
        Command::CrawlAds { .. } => "crawl-ads",
        Command::CrawlSellers { .. } => "crawl-sellers",
        Command::Ingest { .. } => "ingest",
        Command::Analyze { .. } => "analyze",
        Command::Report { .. } => "report",
        Command::Validate { .. } => "validate",
        Command::Serve { .. } => "serve",
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<u8> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let data_dir = cli
        .data_dir
        .clone()
        .or_else(|| file.data_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR));
    let format = cli.format.or(file.format);
    let mut ctx = Ctx {
        data_dir,
        format,
        file,
        out,
    };
    match cli.command {
        Command::CrawlAds {
            seeds,
            max_domains,
            out,
            transport,
        } => {
            let mut config = ctx.crawl_config(&transport)?;
            if let Some(m) = max_domains {
                config.max_domains = m;
            }
            let list = load_seeds(&seeds)?;
            if list.skipped > 0 {
                writeln!(
                    err,
                    "warning: skipped {} unusable seed line(s)",
                    list.skipped
                )?;
            }
            let t = ctx.transport(&transport, &config);
            let snap = crawl_ads_txt(&list.domains, &config, t.as_ref())?;
            let path = ctx.crawl_out(out, "ads", &snap);
            write_json(&path, &snap)?;
            ctx.line(format!("{} -> {}", crawl_summary(&snap), path.display()))?;
            Ok(EXIT_OK)
        }
        Command::CrawlSellers {
            seeds,
            from,
            max_depth,
            max_domains,
            out,
            transport,
        } => {
            let mut config = ctx.crawl_config(&transport)?;
            if let Some(d) = max_depth {
                config.max_recursion_depth = d;
            }
            if let Some(m) = max_domains {
                config.max_domains = m;
            }
            let domains = match (seeds, from) {
                (Some(p), _) => load_seeds(&p)?.domains,
                (None, Some(p)) => network_seeds(&read_snapshot(&p)?),
                (None, None) => bail!("either --seeds or --from is required"),
            };
            let t = ctx.transport(&transport, &config);
            let snap = crawl_sellers_recursive(&domains, &config, t.as_ref())?;
            let path = ctx.crawl_out(out, "sellers", &snap);
            write_json(&path, &snap)?;
            ctx.line(format!("{} -> {}", crawl_summary(&snap), path.display()))?;
            Ok(EXIT_OK)
        }
        Command::Ingest { files } => {
            let mut merged: Option<CrawlSnapshot> = None;
            for f in &files {
                let snap = read_snapshot(f)?;
                merged = Some(match merged {
                    Some(m) => m.merge(snap),
                    None => snap,
                });
            }
            let snap = merged.ok_or_else(|| anyhow!("no input files"))?;
            let outcome = ctx.store()?.ingest(snap)?;
            let state = if outcome.stored {
                "stored"
            } else {
                "already present"
            };
            ctx.line(format!("{} {state}", outcome.snapshot_id))?;
            Ok(EXIT_OK)
        }
        Command::Analyze {
            snapshot,
            whois_dir,
            live_whois,
            privacy_keywords,
        } => {
            let store = ctx.store()?;
            let id = store.resolve(snapshot.as_deref())?;
            let mut inputs = ctx.inputs()?;
            let w = &ctx.file.whois;
            let keywords = match privacy_keywords.or_else(|| w.privacy_keywords.clone()) {
                Some(p) => PrivacyKeywordList::load(&p)?,
                None => PrivacyKeywordList::builtin(),
            };
            let source: Option<Box<dyn WhoisSource>> = match (
                whois_dir.or_else(|| w.fixture_dir.clone()),
                live_whois || w.live,
            ) {
                (Some(dir), _) => Some(Box::new(FixtureWhois::new(dir))),
                (None, true) => Some(Box::new(LiveWhois::new(Duration::from_secs(
                    w.timeout_secs.unwrap_or(10),
                )))),
                (None, false) => None,
            };
            if let Some(source) = source {
                inputs.resolve_pool_owners(&store.sealed(&id)?, source.as_ref(), &keywords);
            }
            let (report, created) = materialize(&store, &id, &inputs)?;
            print_analysis(&mut ctx, &report, created)?;
            Ok(EXIT_OK)
        }
        Command::Report {
            kind,
            snapshot,
            out,
        } => {
            let store = ctx.store()?;
            let id = store.resolve(snapshot.as_deref())?;
            let body = store.latest_analysis(&id)?.ok_or_else(|| {
                anyhow!("snapshot {id} has not been analysed; run `adtrace analyze` first")
            })?;
            let report: AnalysisReport = serde_json::from_str(&body)?;
            let format = ctx.format.unwrap_or(Format::Csv);
            let mut buf = Vec::new();
            let rows = write_report(kind, &report, &mut buf)?;
            let rendered = match format {
                Format::Csv | Format::Text => buf,
                Format::Table => render_table(&buf)?.into_bytes(),
                Format::Json => report_json(kind, &report)?.into_bytes(),
            };
            let summary = format!("{kind}: {}", kind.item_count(&report));
            match out {
                Some(p) => {
                    if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                        std::fs::create_dir_all(parent)?;
                    }
                    std::fs::write(&p, rendered)
                        .with_context(|| format!("writing {}", p.display()))?;
                    ctx.line(format!("{summary} ({rows} rows) -> {}", p.display()))?;
                }
                None => {
                    ctx.out.write_all(&rendered)?;
                    writeln!(err, "{summary}")?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Validate {
            target,
            kind,
            live,
            transport,
        } => validate(&mut ctx, &target, kind, live, &transport),
        Command::Serve {
            bind,
            live_fetch,
            transport,
        } => {
            let store = ctx.store()?;
            let crawl = ctx.crawl_config(&transport)?;
            let s = &ctx.file.serve;
            let live = live_fetch || s.live_fetch || ctx.fixture_root(&transport).is_some();
            let limits = RateLimits {
                per_client_per_minute: nz(
                    s.per_client_per_minute,
                    RateLimits::default().per_client_per_minute,
                ),
                per_target_per_minute: nz(
                    s.per_target_per_minute,
                    RateLimits::default().per_target_per_minute,
                ),
                burst: nz(s.burst, RateLimits::default().burst),
            };
            let config = ServiceConfig {
                inputs: ctx.inputs()?,
                admin_token: std::env::var(ADMIN_TOKEN_ENV).ok(),
                transport: live.then(|| ctx.transport(&transport, &crawl)),
                crawl,
                limits,
                top_n: ctx.file.analysis.top_n.unwrap_or(10),
            };
            let addr = bind
                .or(s.bind)
                .unwrap_or_else(|| SocketAddr::from(([127, 0, 0, 1], 8080)));
            ctx.line(format!(
                "serving {} on http://{addr}/api/v1",
                ctx.data_dir.display()
            ))?;
            ctx.out.flush()?;
            let state = AppState::new(store, config);
            tokio::runtime::Runtime::new()?.block_on(adtrace_server::serve(addr, state))?;
            Ok(EXIT_OK)
        }
    }
}

fn nz(v: Option<u32>, default: NonZeroU32) -> NonZeroU32 {
    v.and_then(NonZeroU32::new).unwrap_or(default)
}

fn print_analysis(ctx: &mut Ctx, r: &AnalysisReport, created: bool) -> anyhow::Result<()> {
    if ctx.format == Some(Format::Json) {
        let line = serde_json::to_string(&serde_json::json!({
            "snapshot_id": r.snapshot_id,
            "inputs_digest": r.inputs_digest,
            "created": created,
            "counts": ReportKind::ALL.iter().map(|k| (k.as_str(), k.item_count(r))).collect::<std::collections::BTreeMap<_, _>>(),
        }))?;
        return ctx.line(line);
    }
    ctx.line(format!(
        "analysis of {} {}",
        r.snapshot_id,
        if created { "stored" } else { "already stored" }
    ))?;
    for k in ReportKind::ALL {
        ctx.line(format!("  {:<22} {}", k.as_str(), k.item_count(r)))?;
    }
    Ok(())
}

fn report_json(kind: ReportKind, r: &AnalysisReport) -> anyhow::Result<String> {
    let v = match kind {
        ReportKind::Pools => serde_json::to_value(&r.pools)?,
        ReportKind::DarkPools => serde_json::to_value(&r.dark_pools)?,
        ReportKind::Mismatches => serde_json::to_value(&r.mismatches)?,
        ReportKind::HiddenIntermediaries => serde_json::to_value(&r.hidden_reported)?,
        ReportKind::Confidentiality => serde_json::to_value(&r.confidentiality)?,
        ReportKind::OverusedIds => serde_json::to_value(&r.overused_ids)?,
        ReportKind::Flows => serde_json::to_value(&r.flows)?,
    };
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// Re-renders CSV as space-aligned columns.
fn render_table(csv_bytes: &[u8]) -> anyhow::Result<String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(csv_bytes);
    let rows: Vec<Vec<String>> = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{s:<w$}", w = widths[i]))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    Ok(out)
}

fn detect_kind(path: &Path, bytes: &[u8]) -> FileKind {
    let by_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    if by_name.ends_with(".json") {
        return FileKind::SellersJson;
    }
    if by_name.ends_with(".txt") {
        return FileKind::AdsTxt;
    }
    let first = bytes
        .iter()
        .copied()
        .skip_while(|b| b.is_ascii_whitespace() || *b == 0xEF || *b == 0xBB || *b == 0xBF)
        .next();
    if first == Some(b'{') {
        FileKind::SellersJson
    } else {
        FileKind::AdsTxt
    }
}

#[derive(Serialize)]
struct ValidationOutput<'a> {
    target: &'a str,
    kind: FileKind,
    errors: usize,
    warnings: usize,
    findings: &'a [ParseFinding],
}

fn validate(
    ctx: &mut Ctx,
    target: &str,
    kind: Option<FileKind>,
    live: bool,
    transport: &TransportArgs,
) -> anyhow::Result<u8> {
    let path = Path::new(target);
    let (kind, parsed) = if !live && path.is_file() {
        let bytes = std::fs::read(path).with_context(|| format!("reading {target}"))?;
        let kind = kind.unwrap_or_else(|| detect_kind(path, &bytes));
        let domain = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| validate_domain(s).ok())
            .unwrap_or_else(|| "local.invalid".to_string());
        (kind, ParsedFile::parse(kind, &domain, &bytes))
    } else if live {
        let kind = kind.unwrap_or(FileKind::AdsTxt);
        let config = ctx.crawl_config(transport)?;
        let t = ctx.transport(transport, &config);
        let fetched = live_fetch_passthrough(target, kind, &config, t.as_ref())?;
        match fetched.parsed {
            Some(p) => (kind, p),
            None => bail!(
                "fetching {} failed: {}",
                fetched.outcome.url,
                fetched.outcome.status.as_str()
            ),
        }
    } else {
        bail!("{target} is not a readable file (use --live to fetch a domain)");
    };
    let findings = parsed.all_findings();
    let errors = findings.iter().filter(|f| f.is_error()).count();
    let warnings = findings.len() - errors;
    if ctx.format == Some(Format::Json) {
        let v = ValidationOutput {
            target,
            kind,
            errors,
            warnings,
            findings: &findings,
        };
        let line = serde_json::to_string(&v)?;
        ctx.line(line)?;
    } else {
        for f in &findings {
            let sev = match f.severity {
                Severity::Error => "ERROR",
                Severity::Warn => "WARN",
            };
            ctx.line(format!(
                "{sev} {} ({}): {}",
                f.code.as_str(),
                f.location,
                f.message
            ))?;
        }
        ctx.line(format!(
            "{target}: {kind}, {errors} error(s), {warnings} warning(s)"
        ))?;
    }
    Ok(if errors > 0 { EXIT_FINDINGS } else { EXIT_OK })
}
