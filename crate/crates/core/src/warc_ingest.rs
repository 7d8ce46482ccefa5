//! Streaming reader for ARC and WARC files.
//!
//! Both plain and per-record gzip files are supported. Only response records
//! are yielded; request, metadata, warcinfo and revisit records are skipped,
//! as are `filedesc://` blocks in ARC files. The payload of each record is the
//! HTTP entity body with the status line and headers removed.
//!
//! On framing damage the reader yields a [`IngestError::CorruptArchive`] and
//! then tries to carry on: gzip files resume at the next gzip member, plain
//! WARC files at the next `WARC/` version line. Plain ARC files cannot be
//! resynchronized reliably and end the stream.

use std::fs::File;
use std::io::{self, BufRead, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use flate2::bufread::GzDecoder;
use thiserror::Error;

use crate::mimetype::{is_token_char, ExtendedMimeType};

/// Default payload cap: 100 MB.
pub const DEFAULT_MAX_PAYLOAD: usize = 100 * 1024 * 1024;

/// Returned by [`normalize_server_mime`] when the server type is missing or
/// unusable.
pub const UNKNOWN_MIME: &str = "unknown/unknown";

const MAX_LINE: u64 = 64 * 1024;
const MAX_HEADER_LINES: usize = 1024;
const GZIP_MAGIC: &[u8] = &[0x1f, 0x8b, 0x08];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("corrupt archive {} at offset {offset}: {reason}", file.display())]
    CorruptArchive {
        file: PathBuf,
        offset: u64,
        reason: String,
    },
    #[error("unsupported archive format: {}", .0.display())]
    UnsupportedFormat(PathBuf),
    #[error("bad crawl timestamp {0:?}")]
    BadTimestamp(String),
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Where a record came from: archive path and the byte offset of its record
/// (or, for gzip files, of its gzip member).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordSource {
    pub file: PathBuf,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchiveRecord {
    pub url: String,
    /// `YYYYMMDDhhmmss` when the archive was well formed.
    pub crawl_timestamp: String,
    /// Content type as sent by the server, possibly empty or malformed.
    pub server_mime_raw: String,
    pub payload: Vec<u8>,
    /// Set when the payload was cut at the configured maximum.
    pub truncated: bool,
    pub source: RecordSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchiveKind {
    Warc,
    Arc,
}

/// Detects the archive flavour from the file name.
pub fn archive_kind(path: &Path) -> Option<(ArchiveKind, bool)> {
    let name = path.file_name()?.to_str()?.to_ascii_lowercase();
    if name.ends_with(".warc.gz") {
        Some((ArchiveKind::Warc, true))
    } else if name.ends_with(".warc") {
        Some((ArchiveKind::Warc, false))
    } else if name.ends_with(".arc.gz") {
        Some((ArchiveKind::Arc, true))
    } else if name.ends_with(".arc") {
        Some((ArchiveKind::Arc, false))
    } else {
        None
    }
}

/// Expands files and directories into the sorted list of archive files they
/// contain. Directories are walked recursively; non-archive files inside them
/// are ignored, while an explicitly named non-archive file is an error.
pub fn discover_archives(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, IngestError> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            for entry in walkdir::WalkDir::new(input).follow_links(true) {
                let entry = entry.map_err(|e| IngestError::Io {
                    path: input.clone(),
                    source: e.into(),
                })?;
                if entry.file_type().is_file() && archive_kind(entry.path()).is_some() {
                    out.push(entry.into_path());
                }
            }
        } else if archive_kind(input).is_some() {
            if !input.exists() {
                return Err(IngestError::Io {
                    path: input.clone(),
                    source: io::Error::new(io::ErrorKind::NotFound, "no such file"),
                });
            }
            out.push(input.clone());
        } else {
            return Err(IngestError::UnsupportedFormat(input.clone()));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Opens an archive with the default payload cap.
pub fn open_archive(path: impl AsRef<Path>) -> Result<ArchiveReader, IngestError> {
    ArchiveReader::open(path, DEFAULT_MAX_PAYLOAD)
}

/// Year of a 14-digit crawl timestamp.
pub fn extract_year(crawl_timestamp: &str) -> Result<u16, IngestError> {
    let bad = || IngestError::BadTimestamp(crawl_timestamp.to_string());
    if crawl_timestamp.len() != 14 || !crawl_timestamp.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let year: u16 = crawl_timestamp[..4].parse().map_err(|_| bad())?;
    if !(1994..=2100).contains(&year) {
        return Err(bad());
    }
    Ok(year)
}

/// Reduces a server `Content-Type` to a lowercase base type, or
/// [`UNKNOWN_MIME`] when nothing usable is left.
pub fn normalize_server_mime(raw: &str) -> String {
    let base = raw
        .split(';')
        .next()
        .unwrap_or("")
        .trim()
        .to_ascii_lowercase();
    match base.split_once('/') {
        Some((t, s))
            if !t.is_empty()
                && !s.is_empty()
                && t.chars().all(is_token_char)
                && s.chars().all(is_token_char) =>
        {
            debug_assert!(ExtendedMimeType::new(t, s).is_ok());
            base
        }
        _ => UNKNOWN_MIME.to_string(),
    }
}

/// Buffered reader that knows its absolute position and can guarantee a
/// minimum lookahead, which the resync scans need.
struct Input<R> {
    inner: R,
    buf: Vec<u8>,
    start: usize,
    end: usize,
    pos: u64,
}

impl<R: Read> Input<R> {
    fn new(inner: R) -> Self {
        Input {
            inner,
            buf: vec![0; 64 * 1024],
            start: 0,
            end: 0,
            pos: 0,
        }
    }

    fn peek_at_least(&mut self, n: usize) -> io::Result<&[u8]> {
        if self.end - self.start < n {
            self.buf.copy_within(self.start..self.end, 0);
            self.end -= self.start;
            self.start = 0;
            while self.end < n.min(self.buf.len()) {
                let read = self.inner.read(&mut self.buf[self.end..])?;
                if read == 0 {
                    break;
                }
                self.end += read;
            }
        }
        Ok(&self.buf[self.start..self.end])
    }

    /// Consumes input until it starts with `needle` (or is exhausted).
    /// Returns whether the needle was found.
    fn scan_to(&mut self, needle: &[u8]) -> io::Result<bool> {
        loop {
            let window = self.peek_at_least(needle.len())?;
            if window.len() < needle.len() {
                let n = window.len();
                self.consume(n);
                return Ok(false);
            }
            if let Some(i) = window.windows(needle.len()).position(|w| w == needle) {
                self.consume(i);
                return Ok(true);
            }
            let n = window.len() + 1 - needle.len();
            self.consume(n);
        }
    }
}

impl<R: Read> Read for Input<R> {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        let avail = self.fill_buf()?;
        let n = avail.len().min(out.len());
        out[..n].copy_from_slice(&avail[..n]);
        self.consume(n);
        Ok(n)
    }
}

impl<R: Read> BufRead for Input<R> {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        if self.start == self.end {
            self.start = 0;
            self.end = self.inner.read(&mut self.buf)?;
        }
        Ok(&self.buf[self.start..self.end])
    }

    fn consume(&mut self, amt: usize) {
        let amt = amt.min(self.end - self.start);
        self.start += amt;
        self.pos += amt as u64;
    }
}

impl<R: Read + Seek> Input<R> {
    /// Repositions at an absolute offset, dropping buffered bytes.
    fn rewind_to(&mut self, pos: u64) -> io::Result<()> {
        self.inner.seek(SeekFrom::Start(pos))?;
        self.start = 0;
        self.end = 0;
        self.pos = pos;
        Ok(())
    }
}

type RawInput = Input<File>;

struct Member {
    reader: io::BufReader<GzDecoder<RawInput>>,
    offset: u64,
}

/// Framing failure inside one record.
#[derive(Debug)]
enum Framing {
    Io(io::Error),
    Format(String),
}

impl From<io::Error> for Framing {
    fn from(e: io::Error) -> Self {
        Framing::Io(e)
    }
}

impl Framing {
    fn reason(&self) -> String {
        match self {
            Framing::Io(e) => e.to_string(),
            Framing::Format(s) => s.clone(),
        }
    }
}

struct ParsedRecord {
    url: String,
    timestamp: String,
    mime: String,
    payload: Vec<u8>,
    truncated: bool,
}

/// Iterator over the response records of one archive file.
pub struct ArchiveReader {
    path: PathBuf,
    kind: ArchiveKind,
    gzip: bool,
    max_payload: usize,
    input: Option<RawInput>,
    member: Option<Member>,
    done: bool,
}

impl ArchiveReader {
    pub fn open(path: impl AsRef<Path>, max_payload: usize) -> Result<Self, IngestError> {
        let path = path.as_ref().to_path_buf();
        let (kind, gzip) =
            archive_kind(&path).ok_or_else(|| IngestError::UnsupportedFormat(path.clone()))?;
        let file = File::open(&path).map_err(|source| IngestError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(ArchiveReader {
            path,
            kind,
            gzip,
            max_payload,
            input: Some(Input::new(file)),
            member: None,
            done: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn corrupt(&self, offset: u64, reason: String) -> IngestError {
        IngestError::CorruptArchive {
            file: self.path.clone(),
            offset,
            reason,
        }
    }

    fn make_record(&self, parsed: ParsedRecord, offset: u64) -> ArchiveRecord {
        ArchiveRecord {
            url: parsed.url,
            crawl_timestamp: parsed.timestamp,
            server_mime_raw: parsed.mime,
            payload: parsed.payload,
            truncated: parsed.truncated,
            source: RecordSource {
                file: self.path.clone(),
                offset,
            },
        }
    }

    fn next_gzip(&mut self) -> Option<Result<ArchiveRecord, IngestError>> {
        loop {
            if self.member.is_none() {
                let mut input = self.input.take()?;
                match input.fill_buf() {
                    Ok([]) => return None,
                    Ok(_) => {}
                    Err(e) => {
                        self.done = true;
                        return Some(Err(self.corrupt(input.pos, e.to_string())));
                    }
                }
                let offset = input.pos;
                self.member = Some(Member {
                    reader: io::BufReader::new(GzDecoder::new(input)),
                    offset,
                });
            }
            let member = self.member.as_mut().expect("member present");
            match read_record(&mut member.reader, self.kind, self.max_payload) {
                Ok(Some(Some(parsed))) => {
                    let offset = member.offset;
                    return Some(Ok(self.make_record(parsed, offset)));
                }
                Ok(Some(None)) => continue,
                Ok(None) => {
                    let member = self.member.take().expect("member present");
                    self.input = Some(member.reader.into_inner().into_inner());
                }
                Err(framing) => {
                    let mut member = self.member.take().expect("member present");
                    let offset = member.offset;
                    // Framing damage inside an intact member: skip to its end.
                    // Damage to the compressed stream itself: scan for the next
                    // member header.
                    let intact = matches!(framing, Framing::Format(_))
                        && io::copy(&mut member.reader, &mut io::sink()).is_ok();
                    let mut input = member.reader.into_inner().into_inner();
                    if !intact {
                        if input.pos <= offset {
                            input.consume(1);
                        }
                        if let Err(e) = input.scan_to(GZIP_MAGIC) {
                            self.done = true;
                            log::warn!("{}: giving up after read error: {e}", self.path.display());
                        }
                    }
                    self.input = Some(input);
                    return Some(Err(self.corrupt(offset, framing.reason())));
                }
            }
        }
    }

    fn next_plain(&mut self) -> Option<Result<ArchiveRecord, IngestError>> {
        loop {
            let input = self.input.as_mut()?;
            if let Err(e) = skip_blank_lines(input) {
                let offset = input.pos;
                self.done = true;
                return Some(Err(self.corrupt(offset, e.to_string())));
            }
            let offset = input.pos;
            match read_record(input, self.kind, self.max_payload) {
                Ok(Some(Some(parsed))) => return Some(Ok(self.make_record(parsed, offset))),
                Ok(Some(None)) => continue,
                Ok(None) => return None,
                Err(framing) => {
                    let resumed = match self.kind {
                        ArchiveKind::Warc => {
                            // the failed parse may have consumed the newline
                            // that precedes the next version line
                            input
                                .rewind_to(offset + 1)
                                .and_then(|()| input.scan_to(b"\nWARC/"))
                                .inspect(|&found| {
                                    if found {
                                        input.consume(1);
                                    }
                                })
                        }
                        ArchiveKind::Arc => Ok(false),
                    };
                    if !matches!(resumed, Ok(true)) {
                        self.done = true;
                    }
                    return Some(Err(self.corrupt(offset, framing.reason())));
                }
            }
        }
    }
}

impl Iterator for ArchiveReader {
    type Item = Result<ArchiveRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = if self.gzip {
            self.next_gzip()
        } else {
            self.next_plain()
        };
        if item.is_none() {
            self.done = true;
        }
        item
    }
}

fn read_line<R: BufRead>(r: &mut R) -> io::Result<Vec<u8>> {
    let mut line = Vec::new();
    r.by_ref().take(MAX_LINE).read_until(b'\n', &mut line)?;
    if line.len() as u64 >= MAX_LINE && line.last() != Some(&b'\n') {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "header line too long",
        ));
    }
    Ok(line)
}

fn trim_eol(line: &[u8]) -> &[u8] {
    let mut end = line.len();
    while end > 0 && (line[end - 1] == b'\n' || line[end - 1] == b'\r') {
        end -= 1;
    }
    &line[..end]
}

fn skip_blank_lines<R: BufRead>(r: &mut R) -> io::Result<()> {
    loop {
        let buf = r.fill_buf()?;
        match buf.first() {
            Some(b'\r') | Some(b'\n') => r.consume(1),
            _ => return Ok(()),
        }
    }
}

/// Reads the next record. `Ok(None)` at end of stream, `Ok(Some(None))` for a
/// record that is not a response.
fn read_record<R: BufRead>(
    r: &mut R,
    kind: ArchiveKind,
    max_payload: usize,
) -> Result<Option<Option<ParsedRecord>>, Framing> {
    skip_blank_lines(r)?;
    if r.fill_buf()?.is_empty() {
        return Ok(None);
    }
    match kind {
        ArchiveKind::Warc => read_warc_record(r, max_payload).map(Some),
        ArchiveKind::Arc => read_arc_record(r, max_payload).map(Some),
    }
}

fn read_warc_record<R: BufRead>(
    r: &mut R,
    max_payload: usize,
) -> Result<Option<ParsedRecord>, Framing> {
    let version = read_line(r)?;
    if !version.starts_with(b"WARC/") {
        return Err(Framing::Format("missing WARC version line".into()));
    }
    let mut headers: Vec<(String, String)> = Vec::new();
    loop {
        let line = read_line(r)?;
        if line.is_empty() {
            return Err(Framing::Format("truncated WARC header".into()));
        }
        let line = trim_eol(&line);
        if line.is_empty() {
            break;
        }
        if headers.len() >= MAX_HEADER_LINES {
            return Err(Framing::Format("too many WARC header fields".into()));
        }
        let text = String::from_utf8_lossy(line);
        if text.starts_with([' ', '\t']) {
            if let Some(last) = headers.last_mut() {
                last.1.push(' ');
                last.1.push_str(text.trim());
            }
            continue;
        }
        match text.split_once(':') {
            Some((name, value)) => {
                headers.push((name.trim().to_ascii_lowercase(), value.trim().to_string()))
            }
            None => return Err(Framing::Format(format!("malformed WARC header {text:?}"))),
        }
    }
    let field = |name: &str| {
        headers
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    };
    let length: u64 = field("content-length")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Framing::Format("missing or invalid Content-Length".into()))?;
    let record_type = field("warc-type").unwrap_or("").to_ascii_lowercase();
    let mut block = r.by_ref().take(length);
    if record_type != "response" {
        skip_exact(&mut block, length)?;
        return Ok(None);
    }
    let url = field("warc-target-uri")
        .unwrap_or("")
        .trim_start_matches('<')
        .trim_end_matches('>')
        .to_string();
    let timestamp: String = field("warc-date")
        .unwrap_or("")
        .chars()
        .filter(char::is_ascii_digit)
        .take(14)
        .collect();
    let (mime, payload, truncated) = read_http_block(&mut block, max_payload)?;
    if block.limit() != 0 {
        return Err(Framing::Format(
            "record block shorter than Content-Length".into(),
        ));
    }
    Ok(Some(ParsedRecord {
        url,
        timestamp,
        mime: mime.unwrap_or_default(),
        payload,
        truncated,
    }))
}

fn read_arc_record<R: BufRead>(
    r: &mut R,
    max_payload: usize,
) -> Result<Option<ParsedRecord>, Framing> {
    let line = read_line(r)?;
    let text = String::from_utf8_lossy(trim_eol(&line)).into_owned();
    let fields: Vec<&str> = text.split_ascii_whitespace().collect();
    if fields.len() < 5 {
        return Err(Framing::Format(format!("malformed ARC header {text:?}")));
    }
    let length: u64 = fields[fields.len() - 1]
        .parse()
        .map_err(|_| Framing::Format(format!("invalid ARC length in {text:?}")))?;
    let mut block = r.by_ref().take(length);
    if fields[0].starts_with("filedesc:") {
        skip_exact(&mut block, length)?;
        return Ok(None);
    }
    let (_, payload, truncated) = read_http_block(&mut block, max_payload)?;
    if block.limit() != 0 {
        return Err(Framing::Format(
            "record shorter than its declared length".into(),
        ));
    }
    let mime = match fields[3] {
        "-" | "no-type" => String::new(),
        m => m.to_string(),
    };
    Ok(Some(ParsedRecord {
        url: fields[0].to_string(),
        timestamp: fields[2].to_string(),
        mime,
        payload,
        truncated,
    }))
}

fn skip_exact<R: Read>(r: &mut R, length: u64) -> Result<(), Framing> {
    let skipped = io::copy(r, &mut io::sink())?;
    if skipped != length {
        return Err(Framing::Format(
            "record block shorter than its length".into(),
        ));
    }
    Ok(())
}

/// Splits an HTTP response block into its Content-Type and entity body. Blocks
/// that do not start with an HTTP status line are taken whole as the payload.
fn read_http_block<R: BufRead>(
    block: &mut R,
    max_payload: usize,
) -> Result<(Option<String>, Vec<u8>, bool), Framing> {
    let mut payload = Vec::new();
    let mut content_type = None;
    // A buffer boundary can fall inside the status line, so the prefix is
    // read out rather than peeked.
    let mut prefix = Vec::with_capacity(5);
    block.by_ref().take(5).read_to_end(&mut prefix)?;
    let is_http = prefix == b"HTTP/";
    let mut block = io::Cursor::new(prefix).chain(block);
    if is_http {
        read_line(&mut block)?;
        for _ in 0..MAX_HEADER_LINES {
            let line = read_line(&mut block)?;
            let trimmed = trim_eol(&line);
            if trimmed.is_empty() {
                break;
            }
            let text = String::from_utf8_lossy(trimmed);
            if let Some((name, value)) = text.split_once(':') {
                if name.trim().eq_ignore_ascii_case("content-type") && content_type.is_none() {
                    content_type = Some(value.trim().to_string());
                }
            }
        }
    }
    block
        .by_ref()
        .take(max_payload as u64)
        .read_to_end(&mut payload)?;
    let rest = io::copy(&mut block, &mut io::sink())?;
    Ok((content_type, payload, rest > 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn warc_record(kind: &str, body: &[u8], content_type: Option<&str>) -> Vec<u8> {
        let mut http = b"HTTP/1.1 200 OK\r\n".to_vec();
        if let Some(ct) = content_type {
            http.extend_from_slice(format!("Content-Type: {ct}\r\n").as_bytes());
        }
        http.extend_from_slice(b"\r\n");
        http.extend_from_slice(body);
        let mut rec = format!(
            "WARC/1.0\r\nWARC-Type: {kind}\r\nWARC-Target-URI: http://example.co.uk/\r\n\
             WARC-Date: 2004-06-12T09:30:11Z\r\nContent-Length: {}\r\n\r\n",
            http.len()
        )
        .into_bytes();
        rec.extend_from_slice(&http);
        rec.extend_from_slice(b"\r\n\r\n");
        rec
    }

    fn gz(data: &[u8]) -> Vec<u8> {
        let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(data).unwrap();
        enc.finish().unwrap()
    }

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, bytes).unwrap();
        p
    }

    fn read_all(path: &Path) -> Vec<Result<ArchiveRecord, IngestError>> {
        open_archive(path).unwrap().collect()
    }

    #[test]
    fn single_response() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "a.warc",
            &warc_record("response", b"hello", Some("text/plain")),
        );
        let recs = read_all(&p);
        assert_eq!(recs.len(), 1);
        let r = recs[0].as_ref().unwrap();
        assert_eq!(r.payload, b"hello");
        assert_eq!(r.url, "http://example.co.uk/");
        assert_eq!(r.crawl_timestamp, "20040612093011");
        assert_eq!(r.server_mime_raw, "text/plain");
        assert_eq!(r.source.offset, 0);
    }

    #[test]
    fn request_records_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = warc_record("request", b"GET / HTTP/1.1\r\n\r\n", None);
        bytes.extend(warc_record("response", b"x", None));
        let p = write(dir.path(), "a.warc", &bytes);
        let recs = read_all(&p);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].as_ref().unwrap().payload, b"x");
        assert_eq!(recs[0].as_ref().unwrap().server_mime_raw, "");
    }

    #[test]
    fn per_record_gzip_and_offsets() {
        let dir = tempfile::tempdir().unwrap();
        let a = gz(&warc_record("response", b"one", None));
        let b = gz(&warc_record("response", b"two", None));
        let mut bytes = a.clone();
        bytes.extend(&b);
        let p = write(dir.path(), "a.warc.gz", &bytes);
        let recs: Vec<_> = read_all(&p).into_iter().map(Result::unwrap).collect();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].payload, b"two");
        assert_eq!(recs[1].source.offset, a.len() as u64);
    }

    #[test]
    fn corrupt_member_resyncs() {
        let dir = tempfile::tempdir().unwrap();
        let a = gz(&warc_record("response", b"one", None));
        let mut bad = gz(&warc_record("response", &[7u8; 4000], None));
        let mid = bad.len() / 2;
        for b in &mut bad[12..mid] {
            *b ^= 0x5a;
        }
        let c = gz(&warc_record("response", b"three", None));
        let mut bytes = a.clone();
        bytes.extend(&bad);
        bytes.extend(&c);
        let p = write(dir.path(), "a.warc.gz", &bytes);
        let recs = read_all(&p);
        let ok: Vec<_> = recs.iter().filter_map(|r| r.as_ref().ok()).collect();
        assert!(recs.iter().any(|r| matches!(
            r,
            Err(IngestError::CorruptArchive { offset, .. }) if *offset == a.len() as u64
        )));
        assert_eq!(ok.first().unwrap().payload, b"one");
        assert_eq!(ok.last().unwrap().payload, b"three");
    }

    #[test]
    fn bad_framing_inside_member_skips_member() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = gz(b"WARC/1.0\r\nWARC-Type: response\r\n\r\nno length here");
        bytes.extend(gz(&warc_record("response", b"after", None)));
        let p = write(dir.path(), "a.warc.gz", &bytes);
        let recs = read_all(&p);
        assert_eq!(recs.len(), 2);
        assert!(matches!(
            recs[0],
            Err(IngestError::CorruptArchive { offset: 0, .. })
        ));
        assert_eq!(recs[1].as_ref().unwrap().payload, b"after");
    }

    #[test]
    fn plain_warc_resyncs_at_next_version_line() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = b"garbage line\r\n".to_vec();
        bytes.extend(warc_record("response", b"ok", None));
        let p = write(dir.path(), "a.warc", &bytes);
        let recs = read_all(&p);
        assert!(recs[0].is_err());
        assert_eq!(recs[1].as_ref().unwrap().payload, b"ok");
    }

    #[test]
    fn payload_cap_sets_truncation_flag() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "a.warc",
            &warc_record("response", &[1u8; 100], None),
        );
        let recs: Vec<_> = ArchiveReader::open(&p, 10).unwrap().collect();
        let r = recs[0].as_ref().unwrap();
        assert_eq!(r.payload.len(), 10);
        assert!(r.truncated);
    }

    #[test]
    fn arc_records() {
        let dir = tempfile::tempdir().unwrap();
        let desc =
            b"1 0 InternetArchive\nURL IP-address Archive-date Content-type Archive-length\n";
        let mut bytes = format!(
            "filedesc://x.arc 0.0.0.0 20040612093011 text/plain {}\n",
            desc.len()
        )
        .into_bytes();
        bytes.extend_from_slice(desc);
        bytes.extend_from_slice(b"\n");
        let http = b"HTTP/1.0 200 OK\r\nContent-Type: text/html\r\n\r\n<html>";
        bytes.extend(
            format!(
                "http://a.co.uk/ 1.2.3.4 19960101000000 text/html {}\n",
                http.len()
            )
            .into_bytes(),
        );
        bytes.extend_from_slice(http);
        bytes.extend_from_slice(b"\n");
        let p = write(dir.path(), "a.arc", &bytes);
        let recs: Vec<_> = read_all(&p).into_iter().map(Result::unwrap).collect();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].payload, b"<html>");
        assert_eq!(recs[0].server_mime_raw, "text/html");
        assert_eq!(recs[0].crawl_timestamp, "19960101000000");

        let pgz = write(dir.path(), "a.arc.gz", &gz(&bytes));
        assert_eq!(read_all(&pgz).len(), 1);
    }

    #[test]
    fn http_prefix_split_across_reads() {
        let http = b"HTTP/1.1 200 OK\r\nContent-Type: image/gif\r\n\r\nGIF89a";
        let mut r = io::BufReader::with_capacity(2, &http[..]);
        let (mime, payload, truncated) = read_http_block(&mut r, 1024).unwrap();
        assert_eq!(mime.as_deref(), Some("image/gif"));
        assert_eq!(payload, b"GIF89a");
        assert!(!truncated);

        let mut r = io::BufReader::with_capacity(1, &b"GIF"[..]);
        let (mime, payload, _) = read_http_block(&mut r, 1024).unwrap();
        assert_eq!((mime, payload), (None, b"GIF".to_vec()));
    }

    #[test]
    fn unsupported_extension() {
        assert!(matches!(
            open_archive("foo.zip"),
            Err(IngestError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn years() {
        assert_eq!(extract_year("20040612093011").unwrap(), 2004);
        assert_eq!(extract_year("19960101000000").unwrap(), 1996);
        assert!(matches!(
            extract_year("2004061209"),
            Err(IngestError::BadTimestamp(_))
        ));
        assert!(extract_year("2004061209301x").is_err());
        assert!(extract_year("18990101000000").is_err());
    }

    #[test]
    fn server_mime_normalization() {
        assert_eq!(
            normalize_server_mime("Text/HTML; charset=UTF-8"),
            "text/html"
        );
        assert_eq!(normalize_server_mime(""), UNKNOWN_MIME);
        assert_eq!(normalize_server_mime("octet stream"), UNKNOWN_MIME);
        assert_eq!(normalize_server_mime("  image/png  "), "image/png");
        assert_eq!(normalize_server_mime("a/b/c"), UNKNOWN_MIME);
        assert_eq!(normalize_server_mime("text/ html"), UNKNOWN_MIME);
    }

    proptest::proptest! {
        #[test]
        fn normalized_server_mime_is_valid(raw in "\\PC{0,30}") {
            let n = normalize_server_mime(&raw);
            let ok = n == UNKNOWN_MIME
                || crate::mimetype::parse_extended_mime(&n).map(|m| m.to_string() == n).unwrap_or(false);
            proptest::prop_assert!(ok, "{:?} -> {:?}", raw, n);
        }
    }
}
