//! Keyed aggregation of identification results.
//!
//! Every record becomes a [`ProfileKey`] of server type, broad outcome, fine
//! outcome and crawl year; a [`ProfileDataset`] counts keys. Datasets form a
//! commutative monoid under [`merge`], which is what makes the sharded run in
//! [`profile_archives`] independent of the shard count.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::extractors::enrich;
use crate::mimetype::{parse_extended_mime, IdentificationOutcome};
use crate::sig_engine::{identify, Mode, SignatureSet};
use crate::warc_ingest::{
    extract_year, normalize_server_mime, ArchiveReader, ArchiveRecord, IngestError, UNKNOWN_MIME,
};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("count overflow while merging key {0}")]
    Overflow(String),
    #[error("{role} signature set has mode {actual}, expected {expected}")]
    ModeMismatch {
        role: &'static str,
        expected: Mode,
        actual: Mode,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Field order is the sort order of emitted lines.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProfileKey {
    pub year: u16,
    pub server: String,
    pub broad: String,
    pub fine: String,
}

impl ProfileKey {
    pub fn new(
        server: impl Into<String>,
        broad: &IdentificationOutcome,
        fine: &IdentificationOutcome,
        year: u16,
    ) -> Self {
        ProfileKey {
            year,
            server: server.into(),
            broad: broad.to_string(),
            fine: fine.to_string(),
        }
    }
}

/// One TSV line without the count.
impl fmt::Display for ProfileKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.server, self.broad, self.fine, self.year
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProfileDataset {
    entries: BTreeMap<ProfileKey, u64>,
}

impl ProfileDataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `n` to the count of `key`. Zero is ignored so that stored counts
    /// stay positive.
    pub fn add(&mut self, key: ProfileKey, n: u64) -> Result<(), ProfileError> {
        if n == 0 {
            return Ok(());
        }
        let current = self.get(&key);
        let total = current
            .checked_add(n)
            .ok_or_else(|| ProfileError::Overflow(key.to_string()))?;
        self.entries.insert(key, total);
        Ok(())
    }

    pub fn get(&self, key: &ProfileKey) -> u64 {
        self.entries.get(key).copied().unwrap_or(0)
    }

    /// Entries in emission order.
    pub fn iter(&self) -> impl Iterator<Item = (&ProfileKey, u64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn years(&self) -> Vec<u16> {
        let mut years: Vec<u16> = self.entries.keys().map(|k| k.year).collect();
        years.dedup();
        years
    }
}

impl FromIterator<ProfileKey> for ProfileDataset {
    fn from_iter<I: IntoIterator<Item = ProfileKey>>(iter: I) -> Self {
        aggregate(iter)
    }
}

/// Counts key multiplicities.
pub fn aggregate(keys: impl IntoIterator<Item = ProfileKey>) -> ProfileDataset {
    let mut d = ProfileDataset::new();
    for k in keys {
        *d.entries.entry(k).or_insert(0) += 1;
    }
    d
}

/// Pointwise sum.
pub fn merge(a: ProfileDataset, b: ProfileDataset) -> Result<ProfileDataset, ProfileError> {
    let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    for (k, v) in small.entries {
        big.add(k, v)?;
    }
    Ok(big)
}

pub fn emit(d: &ProfileDataset, mut sink: impl Write) -> io::Result<()> {
    for (k, v) in &d.entries {
        writeln!(sink, "{k}\t{v}")?;
    }
    Ok(())
}

pub fn emit_to_string(d: &ProfileDataset) -> String {
    let mut out = Vec::new();
    emit(d, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("profile lines are UTF-8")
}

/// Splits a line that uses spaces instead of TABs. A space separates fields
/// unless it follows a `;` or sits inside a quoted parameter value.
fn split_spaced(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    let mut escaped = false;
    for c in line.chars() {
        if in_quotes {
            cur.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_quotes = false;
            }
            continue;
        }
        match c {
            '"' => {
                in_quotes = true;
                cur.push(c);
            }
            ' ' | '\t' => {
                let continues = cur.trim_end().ends_with(';') || cur.trim_end().ends_with('=');
                if continues {
                    if !cur.ends_with(' ') {
                        cur.push(' ');
                    }
                } else if !cur.is_empty() {
                    fields.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(c),
        }
    }
    if !cur.is_empty() {
        fields.push(cur);
    }
    fields
}

fn parse_line(line: &str, n: usize) -> Result<(ProfileKey, u64), ProfileError> {
    let err = |reason: String| ProfileError::Parse { line: n, reason };
    let fields: Vec<String> = if line.contains('\t') {
        line.split('\t').map(str::to_string).collect()
    } else {
        split_spaced(line)
    };
    if fields.len() != 5 {
        return Err(err(format!("expected 5 fields, found {}", fields.len())));
    }
    let server = fields[0].trim();
    if server != UNKNOWN_MIME {
        let m = parse_extended_mime(server).map_err(|e| err(format!("server type: {e}")))?;
        if m.has_params() {
            return Err(err(format!("server type {server:?} carries parameters")));
        }
    }
    let outcome = |s: &str, what: &str| {
        s.parse::<IdentificationOutcome>()
            .map_err(|e| err(format!("{what} type: {e}")))
    };
    let broad = outcome(&fields[1], "broad")?;
    let fine = outcome(&fields[2], "fine")?;
    let year: u16 = fields[3]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad year {:?}", fields[3])))?;
    let count: u64 = fields[4]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad count {:?}", fields[4])))?;
    if count == 0 {
        return Err(err("zero count".into()));
    }
    Ok((
        ProfileKey::new(server.to_ascii_lowercase(), &broad, &fine, year),
        count,
    ))
}

/// Inverse of [`emit`]. Lines are TAB-separated; lines without any TAB are
/// split on spaces. Repeated keys are summed. Blank lines are skipped.
pub fn load(source: impl BufRead) -> Result<ProfileDataset, ProfileError> {
    let mut d = ProfileDataset::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = parse_line(line, i + 1)?;
        d.add(k, v).map_err(|_| ProfileError::Parse {
            line: i + 1,
            reason: "count overflow".into(),
        })?;
    }
    Ok(d)
}

pub fn load_str(text: &str) -> Result<ProfileDataset, ProfileError> {
    load(text.as_bytes())
}

// ---------------------------------------------------------------------------

/// Pairs the two signature sets for per-record profiling.
#[derive(Debug, Clone, Copy)]
pub struct Profiler<'a> {
    fine: &'a SignatureSet,
    broad: &'a SignatureSet,
}

impl<'a> Profiler<'a> {
    pub fn new(fine: &'a SignatureSet, broad: &'a SignatureSet) -> Result<Self, ProfileError> {
        for (role, set, expected) in [("fine", fine, Mode::Fine), ("broad", broad, Mode::Broad)] {
            if set.mode != expected {
                return Err(ProfileError::ModeMismatch {
                    role,
                    expected,
                    actual: set.mode,
                });
            }
        }
        Ok(Profiler { fine, broad })
    }

    /// Identification outcomes `(broad, fine)` for a payload, with metadata.
    pub fn outcomes(&self, payload: &[u8]) -> (IdentificationOutcome, IdentificationOutcome) {
        (
            enrich(identify(payload, self.broad), payload),
            enrich(identify(payload, self.fine), payload),
        )
    }

    pub fn profile_record(&self, r: &ArchiveRecord) -> Result<ProfileKey, IngestError> {
        let year = extract_year(&r.crawl_timestamp)?;
        let (broad, fine) = self.outcomes(&r.payload);
        Ok(ProfileKey::new(
            normalize_server_mime(&r.server_mime_raw),
            &broad,
            &fine,
            year,
        ))
    }
}

pub fn profile_record(
    r: &ArchiveRecord,
    fine: &SignatureSet,
    broad: &SignatureSet,
) -> Result<ProfileKey, ProfileError> {
    Ok(Profiler::new(fine, broad)?.profile_record(r)?)
}

/// Counters for one profiling run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub files: u64,
    pub records: u64,
    pub payload_bytes: u64,
    pub truncated: u64,
    pub corrupt: u64,
    pub bad_timestamp: u64,
    pub broad_unidentified: u64,
    pub fine_unidentified: u64,
    pub elapsed: Duration,
}

impl RunStats {
    fn absorb(&mut self, o: &RunStats) {
        self.files += o.files;
        self.records += o.records;
        self.payload_bytes += o.payload_bytes;
        self.truncated += o.truncated;
        self.corrupt += o.corrupt;
        self.bad_timestamp += o.bad_timestamp;
        self.broad_unidentified += o.broad_unidentified;
        self.fine_unidentified += o.fine_unidentified;
    }

    pub fn records_per_second(&self) -> f64 {
        let s = self.elapsed.as_secs_f64();
        if s > 0.0 {
            self.records as f64 / s
        } else {
            0.0
        }
    }
}

fn profile_file(
    profiler: &Profiler<'_>,
    path: &PathBuf,
    max_payload: usize,
    data: &mut ProfileDataset,
    stats: &mut RunStats,
) -> Result<(), ProfileError> {
    let reader = ArchiveReader::open(path, max_payload)?;
    stats.files += 1;
    for item in reader {
        let record = match item {
            Ok(r) => r,
            Err(e @ IngestError::CorruptArchive { .. }) => {
                log::warn!("{e}");
                stats.corrupt += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let key = match profiler.profile_record(&record) {
            Ok(k) => k,
            Err(e) => {
                log::warn!("{}@{}: {e}", path.display(), record.source.offset);
                stats.bad_timestamp += 1;
                continue;
            }
        };
        stats.records += 1;
        stats.payload_bytes += record.payload.len() as u64;
        stats.truncated += u64::from(record.truncated);
        stats.broad_unidentified += u64::from(key.broad == crate::mimetype::UNIDENTIFIED);
        stats.fine_unidentified += u64::from(key.fine == crate::mimetype::UNIDENTIFIED);
        data.add(key, 1)?;
    }
    Ok(())
}

/// Profiles archive files on `shards` worker threads. Files are dealt to
/// workers round-robin; each worker owns its partial dataset and the partials
/// are merged once all workers are done.
pub fn profile_archives(
    paths: &[PathBuf],
    fine: &SignatureSet,
    broad: &SignatureSet,
    shards: usize,
    max_payload: usize,
) -> Result<(ProfileDataset, RunStats), ProfileError> {
    let profiler = Profiler::new(fine, broad)?;
    let shards = shards.max(1);
    let started = Instant::now();
    let partials: Vec<Result<(ProfileDataset, RunStats), ProfileError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..shards)
                .map(|shard| {
                    let profiler = &profiler;
                    scope.spawn(move || {
                        let mut data = ProfileDataset::new();
                        let mut stats = RunStats::default();
                        for path in paths.iter().skip(shard).step_by(shards) {
                            profile_file(profiler, path, max_payload, &mut data, &mut stats)?;
                        }
                        Ok((data, stats))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("profiling worker panicked"))
                .collect()
        });
    let mut data = ProfileDataset::new();
    let mut stats = RunStats::default();
    for part in partials {
        let (d, s) = part?;
        data = merge(data, d)?;
        stats.absorb(&s);
    }
    stats.elapsed = started.elapsed();
    Ok((data, stats))
}
