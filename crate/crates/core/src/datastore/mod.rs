//! Snapshot persistence and indexed retrieval.
//!
//! One SQLite file holds three tables: `snapshots` (append-only, one JSON
//! document per crawl), `blobs` (raw fetched bodies keyed by SHA-256) and
//! `analyses` (materialised analysis results per snapshot and input set).

mod copied;
mod index;
mod lists;

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use rusqlite::{params, Connection, OptionalExtension};
use serde::{Deserialize, Serialize};

pub use copied::{detect_copied_sellers_files, excluded_domains, CopiedGroup};
pub use index::{AccountKey, AccountLookup, EntryIndex, SealedSnapshot};
pub use lists::{
    load_objectionable_lists, load_rank_table, DomainList, ObjectionableLists, ObjectionablePaths,
    RankTable, Tag, VerifiedNetworkList,
};

use crate::crawler::CrawlSnapshot;
use crate::parser::{ContentHash, FileKind};
use crate::{Error, Result};

pub const DB_FILE: &str = "adtrace.sqlite";

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS snapshots (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    id TEXT NOT NULL UNIQUE,
    started_at TEXT NOT NULL,
    finished_at TEXT NOT NULL,
    ingested_at TEXT NOT NULL,
    ads_files INTEGER NOT NULL,
    sellers_files INTEGER NOT NULL,
    body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS blobs (
    hash TEXT PRIMARY KEY,
    bytes BLOB NOT NULL
);
CREATE TABLE IF NOT EXISTS analyses (
    snapshot_id TEXT NOT NULL,
    inputs_digest TEXT NOT NULL,
    created_at TEXT NOT NULL,
    body TEXT NOT NULL,
    PRIMARY KEY (snapshot_id, inputs_digest)
);
";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotInfo {
    pub snapshot_id: String,
    pub seq: i64,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub ingested_at: DateTime<Utc>,
    pub ads_files: usize,
    pub sellers_files: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOutcome {
    pub snapshot_id: String,
    /// False when an identical snapshot was already stored.
    pub stored: bool,
}

pub struct Datastore {
    conn: Mutex<Connection>,
    path: Option<PathBuf>,
    sealed: Mutex<HashMap<String, SealedSnapshot>>,
}

impl std::fmt::Debug for Datastore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Datastore")
            .field("path", &self.path)
            .finish()
    }
}

fn ts(s: String) -> rusqlite::Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(&s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| {
            rusqlite::Error::FromSqlConversionFailure(0, rusqlite::types::Type::Text, Box::new(e))
        })
}

impl Datastore {
    /// Opens (creating if needed) the database inside `data_dir`.
    pub fn open(data_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(data_dir).map_err(|e| Error::read_file(data_dir, e))?;
        let path = data_dir.join(DB_FILE);
        let conn = Connection::open(&path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        Self::init(conn, Some(path))
    }

    pub fn in_memory() -> Result<Self> {
        Self::init(Connection::open_in_memory()?, None)
    }

    fn init(conn: Connection, path: Option<PathBuf>) -> Result<Self> {
        conn.execute_batch(SCHEMA)?;
        Ok(Datastore {
            conn: Mutex::new(conn),
            path,
            sealed: Mutex::new(HashMap::new()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn conn(&self) -> std::sync::MutexGuard<'_, Connection> {
        self.conn.lock().expect("datastore connection poisoned")
    }

    /// Stores a snapshot and its blobs in one transaction. The id is
    /// recomputed from content, so re-ingesting identical content is a no-op.
    pub fn ingest(&self, mut snapshot: CrawlSnapshot) -> Result<IngestOutcome> {
        snapshot.check_consistency().map_err(Error::InvalidInput)?;
        let id = snapshot.seal_id().to_string();
        let blobs = std::mem::take(&mut snapshot.blobs);
        let body = serde_json::to_string(&snapshot)?;

        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let exists: bool = tx
            .query_row("SELECT 1 FROM snapshots WHERE id = ?1", [&id], |_| Ok(()))
            .optional()?
            .is_some();
        if exists {
            return Ok(IngestOutcome {
                snapshot_id: id,
                stored: false,
            });
        }
        {
            let mut put =
                tx.prepare("INSERT OR IGNORE INTO blobs (hash, bytes) VALUES (?1, ?2)")?;
            for (hash, bytes) in &blobs {
                put.execute(params![hash.to_hex(), bytes])?;
            }
        }
        tx.execute(
            "INSERT INTO snapshots (id, started_at, finished_at, ingested_at, ads_files, sellers_files, body)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            params![
                id,
                snapshot.started_at.to_rfc3339(),
                snapshot.finished_at.to_rfc3339(),
                Utc::now().to_rfc3339(),
                snapshot.ads_files.len() as i64,
                snapshot.sellers_files.len() as i64,
                body
            ],
        )?;
        tx.commit()?;
        Ok(IngestOutcome {
            snapshot_id: id,
            stored: true,
        })
    }

    pub fn list_snapshots(&self) -> Result<Vec<SnapshotInfo>> {
        let conn = self.conn();
        let mut stmt = conn.prepare(
            "SELECT id, seq, started_at, finished_at, ingested_at, ads_files, sellers_files
             FROM snapshots ORDER BY seq",
        )?;
        let rows = stmt.query_map([], |r| {
            Ok(SnapshotInfo {
                snapshot_id: r.get(0)?,
                seq: r.get(1)?,
                started_at: ts(r.get(2)?)?,
                finished_at: ts(r.get(3)?)?,
                ingested_at: ts(r.get(4)?)?,
                ads_files: r.get::<_, i64>(5)? as usize,
                sellers_files: r.get::<_, i64>(6)? as usize,
            })
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    /// Most recently ingested snapshot id.
    pub fn latest_id(&self) -> Result<Option<String>> {
        Ok(self
            .conn()
            .query_row(
                "SELECT id FROM snapshots ORDER BY seq DESC LIMIT 1",
                [],
                |r| r.get(0),
            )
            .optional()?)
    }

    /// Resolves an optional explicit id to a stored one, defaulting to latest.
    pub fn resolve(&self, id: Option<&str>) -> Result<String> {
        match id {
            Some(id) => {
                let found: Option<String> = self
                    .conn()
                    .query_row("SELECT id FROM snapshots WHERE id = ?1", [id], |r| r.get(0))
                    .optional()?;
                found.ok_or_else(|| Error::UnknownSnapshot(id.to_string()))
            }
            None => self
                .latest_id()?
                .ok_or_else(|| Error::UnknownSnapshot("(no snapshots ingested)".into())),
        }
    }

    pub fn load(&self, id: &str) -> Result<CrawlSnapshot> {
        let body: Option<String> = self
            .conn()
            .query_row("SELECT body FROM snapshots WHERE id = ?1", [id], |r| {
                r.get(0)
            })
            .optional()?;
        let body = body.ok_or_else(|| Error::UnknownSnapshot(id.to_string()))?;
        Ok(serde_json::from_str(&body)?)
    }

    /// The snapshot plus its index, built once and cached.
    pub fn sealed(&self, id: &str) -> Result<SealedSnapshot> {
        if let Some(s) = self.sealed.lock().expect("cache poisoned").get(id) {
            return Ok(s.clone());
        }
        let sealed = SealedSnapshot::new(self.load(id)?);
        self.sealed
            .lock()
            .expect("cache poisoned")
            .insert(id.to_string(), sealed.clone());
        Ok(sealed)
    }

    pub fn blob(&self, hash: &ContentHash) -> Result<Option<Vec<u8>>> {
        Ok(self
            .conn()
            .query_row(
                "SELECT bytes FROM blobs WHERE hash = ?1",
                [hash.to_hex()],
                |r| r.get(0),
            )
            .optional()?)
    }

    pub fn store_analysis(&self, snapshot_id: &str, inputs_digest: &str, body: &str) -> Result<()> {
        self.conn().execute(
            "INSERT OR REPLACE INTO analyses (snapshot_id, inputs_digest, created_at, body)
             VALUES (?1, ?2, ?3, ?4)",
            params![snapshot_id, inputs_digest, Utc::now().to_rfc3339(), body],
        )?;
        Ok(())
    }

    pub fn load_analysis(&self, snapshot_id: &str, inputs_digest: &str) -> Result<Option<String>> {
        Ok(self
            .conn()
            .query_row(
                "SELECT body FROM analyses WHERE snapshot_id = ?1 AND inputs_digest = ?2",
                [snapshot_id, inputs_digest],
                |r| r.get(0),
            )
            .optional()?)
    }

    /// Most recently materialised analysis for a snapshot, whatever its inputs.
    pub fn latest_analysis(&self, snapshot_id: &str) -> Result<Option<String>> {
        Ok(self
            .conn()
            .query_row(
                "SELECT body FROM analyses WHERE snapshot_id = ?1 ORDER BY created_at DESC, rowid DESC LIMIT 1",
                [snapshot_id],
                |r| r.get(0),
            )
            .optional()?)
    }

    /// Writes one JSON object per ads.txt record, seller entry and failure.
    pub fn export_ndjson(&self, id: &str, out: &mut dyn Write) -> Result<usize> {
        let snap = self.load(id)?;
        export_snapshot_ndjson(&snap, out)
    }
}

pub fn export_snapshot_ndjson(snap: &CrawlSnapshot, out: &mut dyn Write) -> Result<usize> {
    let mut n = 0;
    let mut line = |v: serde_json::Value| -> Result<()> {
        serde_json::to_writer(&mut *out, &v)?;
        out.write_all(b"\n")?;
        n += 1;
        Ok(())
    };
    for (publisher, file) in &snap.ads_files {
        for r in &file.records {
            line(serde_json::json!({
                "kind": "ads_record",
                "snapshot_id": snap.snapshot_id,
                "publisher": publisher,
                "ad_system_domain": r.ad_system_domain,
                "account_id": r.account_id,
                "account_type": r.account_type,
                "cert_authority_id": r.cert_authority_id,
                "line": r.source_line,
            }))?;
        }
    }
    for (network, file) in &snap.sellers_files {
        for e in &file.entries {
            line(serde_json::json!({
                "kind": "seller_entry",
                "snapshot_id": snap.snapshot_id,
                "network": network,
                "seller_id": e.seller_id,
                "name": e.name,
                "domain": e.domain,
                "seller_type": e.seller_type,
                "is_confidential": e.is_confidential,
            }))?;
        }
    }
    for kind in [FileKind::AdsTxt, FileKind::SellersJson] {
        for (domain, f) in snap.failures_for(kind) {
            line(serde_json::json!({
                "kind": "failure",
                "snapshot_id": snap.snapshot_id,
                "file": kind,
                "domain": domain,
                "status": f.status,
                "url": f.url,
            }))?;
        }
    }
    Ok(n)
}
