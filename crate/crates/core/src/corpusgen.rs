//! Synthetic web-archive corpora with known ground truth.
//!
//! A [`CorpusSpec`] lists how many records of each payload template to plant
//! in each crawl year. [`generate`] writes them as per-record-gzip WARC files
//! together with a manifest of what the profiler must report for every
//! record. The expected outcomes come from how each payload was built, never
//! from running the identification code, so the manifest can act as an
//! oracle for it.
//!
//! Output is a pure function of the spec: record order comes from a seeded
//! shuffle, and each record's random choices come from its own generator
//! stream keyed on `(seed, record index)`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::write::{GzEncoder, ZlibEncoder};
use flate2::{Compression, Crc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mimetype::{sanitize_value, ExtendedMimeType, IdentificationOutcome, ParamKey};
use crate::profiler::{ProfileDataset, ProfileKey};

pub const MANIFEST_NAME: &str = "manifest.tsv";
pub const MAX_PADDING: usize = 4 * 1024 * 1024;
const MAX_RECORDS: u64 = 100_000_000;
const MAX_VALUE: usize = 256;
/// Offset probed by the fine set's weak PICT rule.
const PICT_OFFSET: usize = 522;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid corpus spec: {0}")]
    Spec(String),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bad manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
}

fn spec_err(msg: impl Into<String>) -> CorpusError {
    CorpusError::Spec(msg.into())
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    Png,
    Gif87a,
    Gif89a,
    JpegJfif,
    JpegExif,
    TiffLe,
    TiffBe,
    Bmp,
    Ico,
    Xbm,
    Pdf,
    Html,
    Css,
    Js,
    Random,
}

impl Template {
    pub const ALL: [Template; 15] = [
        Template::Png,
        Template::Gif87a,
        Template::Gif89a,
        Template::JpegJfif,
        Template::JpegExif,
        Template::TiffLe,
        Template::TiffBe,
        Template::Bmp,
        Template::Ico,
        Template::Xbm,
        Template::Pdf,
        Template::Html,
        Template::Css,
        Template::Js,
        Template::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::Png => "png",
            Template::Gif87a => "gif87a",
            Template::Gif89a => "gif89a",
            Template::JpegJfif => "jpeg_jfif",
            Template::JpegExif => "jpeg_exif",
            Template::TiffLe => "tiff_le",
            Template::TiffBe => "tiff_be",
            Template::Bmp => "bmp",
            Template::Ico => "ico",
            Template::Xbm => "xbm",
            Template::Pdf => "pdf",
            Template::Html => "html",
            Template::Css => "css",
            Template::Js => "js",
            Template::Random => "random",
        }
    }

    fn from_name(s: &str) -> Option<Template> {
        Template::ALL.into_iter().find(|t| t.name() == s)
    }

    fn extension(self) -> &'static str {
        match self {
            Template::Png => "png",
            Template::Gif87a | Template::Gif89a => "gif",
            Template::JpegJfif | Template::JpegExif => "jpg",
            Template::TiffLe | Template::TiffBe => "tif",
            Template::Bmp => "bmp",
            Template::Ico => "ico",
            Template::Xbm => "xbm",
            Template::Pdf => "pdf",
            Template::Html => "html",
            Template::Css => "css",
            Template::Js => "js",
            Template::Random => "bin",
        }
    }

    /// Content-Type the synthetic server sends unless the recipe overrides it.
    pub fn default_server_mime(self) -> &'static str {
        match self {
            Template::Png => "image/png",
            Template::Gif87a | Template::Gif89a => "image/gif",
            Template::JpegJfif | Template::JpegExif => "image/jpeg",
            Template::TiffLe | Template::TiffBe => "image/tiff",
            Template::Bmp => "image/bmp",
            Template::Ico => "image/x-icon",
            Template::Xbm => "image/x-xbitmap",
            Template::Pdf => "application/pdf",
            Template::Html => "text/html",
            Template::Css => "text/css",
            Template::Js => "application/x-javascript",
            Template::Random => "application/octet-stream",
        }
    }

    fn versions(self) -> &'static [&'static str] {
        match self {
            Template::JpegJfif => &["1.00", "1.01", "1.02"],
            Template::Pdf => &["1.0", "1.1", "1.2", "1.3", "1.4", "1.5", "1.6", "1.7"],
            Template::Html => &["2.0", "3.2", "4.0", "4.01", "xhtml-1.0", "xhtml-1.1"],
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Malformation {
    /// PDF ending in `%%EO` instead of `%%EOF`.
    PdfEofTruncated,
    /// No Content-Type header in the HTTP response.
    MissingContentType,
    /// Early HTML with `<head>`/`<body>` but neither DOCTYPE nor `<html>`.
    TaglessHtml,
    /// JFIF JPEG without its end marker and with 0x11 at offset 522.
    JpegPictCollision,
}

impl Malformation {
    fn name(self) -> &'static str {
        match self {
            Malformation::PdfEofTruncated => "pdf_eof_truncated",
            Malformation::MissingContentType => "missing_content_type",
            Malformation::TaglessHtml => "tagless_html",
            Malformation::JpegPictCollision => "jpeg_pict_collision",
        }
    }

    fn applies_to(self, t: Template) -> bool {
        match self {
            Malformation::PdfEofTruncated => t == Template::Pdf,
            Malformation::MissingContentType => true,
            Malformation::TaglessHtml => t == Template::Html,
            Malformation::JpegPictCollision => t == Template::JpegJfif,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<u16>,
    /// Plant `count` records in each of these years.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub years: Option<Vec<u16>>,
    pub template: Template,
    pub count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub producer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub software: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub make: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub server_mime: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub malformations: Vec<Malformation>,
}

impl RecipeEntry {
    pub fn new(year: u16, template: Template, count: u64) -> Self {
        RecipeEntry {
            year: Some(year),
            years: None,
            template,
            count,
            version: None,
            producer: None,
            creator: None,
            software: None,
            make: None,
            model: None,
            server_mime: None,
            malformations: Vec::new(),
        }
    }

    pub fn version(mut self, v: &str) -> Self {
        self.version = Some(v.into());
        self
    }

    pub fn producer(mut self, v: &str) -> Self {
        self.producer = Some(v.into());
        self
    }

    pub fn creator(mut self, v: &str) -> Self {
        self.creator = Some(v.into());
        self
    }

    pub fn software(mut self, v: &str) -> Self {
        self.software = Some(v.into());
        self
    }

    pub fn make(mut self, v: &str) -> Self {
        self.make = Some(v.into());
        self
    }

    pub fn model(mut self, v: &str) -> Self {
        self.model = Some(v.into());
        self
    }

    pub fn server_mime(mut self, v: &str) -> Self {
        self.server_mime = Some(v.into());
        self
    }

    pub fn malformed(mut self, m: Malformation) -> Self {
        self.malformations.push(m);
        self
    }
}

fn default_records_per_file() -> usize {
    1000
}

fn default_padding() -> [usize; 2] {
    [0, 256]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    /// Years for recipe entries that name neither `year` nor `years`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub years: Vec<u16>,
    #[serde(default = "default_records_per_file")]
    pub records_per_file: usize,
    /// Inclusive range of filler bytes added to each payload.
    #[serde(default = "default_padding")]
    pub padding: [usize; 2],
    pub recipe: Vec<RecipeEntry>,
}

impl CorpusSpec {
    pub fn new(seed: u64, recipe: Vec<RecipeEntry>) -> Self {
        CorpusSpec {
            seed,
            years: Vec::new(),
            records_per_file: default_records_per_file(),
            padding: default_padding(),
            recipe,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    fn entry_years<'a>(&'a self, e: &'a RecipeEntry) -> &'a [u16] {
        match (&e.year, &e.years) {
            (Some(y), _) => std::slice::from_ref(y),
            (None, Some(ys)) => ys,
            (None, None) => &self.years,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.records_per_file == 0 {
            return Err(spec_err("records_per_file must be at least 1"));
        }
        let [lo, hi] = self.padding;
        if lo > hi || hi > MAX_PADDING {
            return Err(spec_err(format!(
                "padding range [{lo}, {hi}] must be ordered and at most {MAX_PADDING}"
            )));
        }
        let mut total = 0u64;
        for (i, e) in self.recipe.iter().enumerate() {
            let at = |msg: String| spec_err(format!("recipe[{i}]: {msg}"));
            if e.year.is_some() && e.years.is_some() {
                return Err(at("give either year or years, not both".into()));
            }
            let years = self.entry_years(e);
            if years.is_empty() {
                return Err(at("no year given".into()));
            }
            if let Some(y) = years.iter().find(|y| !(1994..=2100).contains(*y)) {
                return Err(at(format!("year {y} outside 1994..=2100")));
            }
            total = total.saturating_add(e.count.saturating_mul(years.len() as u64));
            let t = e.template;
            if let Some(v) = &e.version {
                if !t.versions().contains(&v.as_str()) {
                    return Err(at(format!("version {v:?} not available for {}", t.name())));
                }
            }
            let pdf_only = [("producer", &e.producer), ("creator", &e.creator)];
            let exif_only = [
                ("software", &e.software),
                ("make", &e.make),
                ("model", &e.model),
            ];
            let exif_capable =
                matches!(t, Template::JpegExif | Template::TiffLe | Template::TiffBe);
            for (name, value) in pdf_only.iter().chain(&exif_only) {
                let Some(v) = value else { continue };
                let allowed = if pdf_only.iter().any(|(n, _)| n == name) {
                    t == Template::Pdf
                } else {
                    exif_capable
                };
                if !allowed {
                    return Err(at(format!("{name} not supported by {}", t.name())));
                }
                check_value(name, v).map_err(at)?;
            }
            if let (Some(make), Some(model)) = (&e.make, &e.model) {
                if make.len() + 1 + model.len() > MAX_VALUE {
                    return Err(at("make and model together exceed 256 bytes".into()));
                }
            }
            if let Some(m) = &e.server_mime {
                let ok = m.split_once('/').is_some_and(|(a, b)| {
                    !a.is_empty()
                        && !b.is_empty()
                        && m.chars()
                            .all(|c| c == '/' || crate::mimetype::is_token_char(c))
                });
                if !ok {
                    return Err(at(format!("server_mime {m:?} is not a bare type/subtype")));
                }
            }
            for m in &e.malformations {
                if !m.applies_to(t) {
                    return Err(at(format!("{} does not apply to {}", m.name(), t.name())));
                }
            }
            if e.malformations.contains(&Malformation::TaglessHtml) && e.version.is_some() {
                return Err(at("tagless_html has no DOCTYPE and so no version".into()));
            }
        }
        if total > MAX_RECORDS {
            return Err(spec_err(format!(
                "{total} records exceed the limit of {MAX_RECORDS}"
            )));
        }
        Ok(())
    }
}

/// Metadata values must survive extraction unchanged.
fn check_value(name: &str, v: &str) -> Result<(), String> {
    if sanitize_value(v).as_deref() != Some(v) {
        return Err(format!(
            "{name} {v:?} must be nonempty, trimmed and free of control characters"
        ));
    }
    if v.len() > MAX_VALUE {
        return Err(format!("{name} longer than {MAX_VALUE} bytes"));
    }
    if v.contains('\u{FFFD}') {
        return Err(format!("{name} contains U+FFFD"));
    }
    Ok(())
}

pub fn parse_spec(bytes: &[u8]) -> Result<CorpusSpec, CorpusError> {
    let spec: CorpusSpec = serde_json::from_slice(bytes).map_err(|e| spec_err(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<CorpusSpec, CorpusError> {
    parse_spec(&fs::read(path).map_err(io_err(path))?)
}

// ---------------------------------------------------------------------------
// manifest

/// One planted record and everything the pipeline must report about it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub index: u64,
    pub file: String,
    pub url: String,
    /// `YYYYMMDDhhmmss`.
    pub timestamp: String,
    pub server: String,
    pub broad: String,
    pub fine: String,
    pub year: u16,
    pub sha256: String,
    pub template: Template,
    pub malformations: Vec<Malformation>,
    pub version: Option<String>,
    pub software: Option<String>,
    pub hardware: Option<String>,
}

impl ManifestEntry {
    pub fn is_well_formed(&self) -> bool {
        self.malformations.is_empty()
    }
}

const MANIFEST_COLUMNS: [&str; 14] = [
    "index",
    "file",
    "url",
    "timestamp",
    "server",
    "broad",
    "fine",
    "year",
    "sha256",
    "template",
    "malformations",
    "version",
    "software",
    "hardware",
];

pub fn write_manifest(entries: &[ManifestEntry], sink: impl Write) -> io::Result<()> {
    let mut w = BufWriter::new(sink);
    writeln!(w, "{}", MANIFEST_COLUMNS.join("\t"))?;
    for e in entries {
        let flags: Vec<&str> = e.malformations.iter().map(|m| m.name()).collect();
        let fields = [
            e.index.to_string(),
            e.file.clone(),
            e.url.clone(),
            e.timestamp.clone(),
            e.server.clone(),
            e.broad.clone(),
            e.fine.clone(),
            e.year.to_string(),
            e.sha256.clone(),
            e.template.name().to_string(),
            flags.join(","),
            e.version.clone().unwrap_or_default(),
            e.software.clone().unwrap_or_default(),
            e.hardware.clone().unwrap_or_default(),
        ];
        writeln!(w, "{}", fields.join("\t"))?;
    }
    w.flush()
}

pub fn read_manifest(text: &str) -> Result<Vec<ManifestEntry>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let err = |reason: String| CorpusError::Manifest {
            line: i + 1,
            reason,
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != MANIFEST_COLUMNS.len() {
            return Err(err(format!(
                "expected {} fields, found {}",
                MANIFEST_COLUMNS.len(),
                f.len()
            )));
        }
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
        let malformations = f[10]
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                [
                    Malformation::PdfEofTruncated,
                    Malformation::MissingContentType,
                    Malformation::TaglessHtml,
                    Malformation::JpegPictCollision,
                ]
                .into_iter()
                .find(|m| m.name() == s)
                .ok_or_else(|| err(format!("unknown malformation {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(ManifestEntry {
            index: f[0].parse().map_err(|_| err("bad index".into()))?,
            file: f[1].into(),
            url: f[2].into(),
            timestamp: f[3].into(),
            server: f[4].into(),
            broad: f[5].into(),
            fine: f[6].into(),
            year: f[7].parse().map_err(|_| err("bad year".into()))?,
            sha256: f[8].into(),
            template: Template::from_name(f[9]).ok_or_else(|| err("unknown template".into()))?,
            malformations,
            version: opt(f[11]),
            software: opt(f[12]),
            hardware: opt(f[13]),
        });
    }
    Ok(out)
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CorpusError> {
    read_manifest(&fs::read_to_string(path).map_err(io_err(path))?)
}

/// The dataset a correct pipeline produces for this manifest, by direct
/// counting.
pub fn expected_profile(manifest: &[ManifestEntry]) -> ProfileDataset {
    manifest
        .iter()
        .map(|e| ProfileKey {
            year: e.year,
            server: e.server.clone(),
            broad: e.broad.clone(),
            fine: e.fine.clone(),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// payload templates

/// Fully resolved parameters for one record.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Plan {
    year: u16,
    template: Template,
    version: Option<String>,
    producer: Option<String>,
    creator: Option<String>,
    software: Option<String>,
    make: Option<String>,
    model: Option<String>,
    server_mime: Option<String>,
    malformations: Vec<Malformation>,
}

impl Plan {
    fn has(&self, m: Malformation) -> bool {
        self.malformations.contains(&m)
    }

    fn hardware(&self) -> Option<String> {
        match (&self.make, &self.model) {
            (Some(a), Some(b)) => Some(format!("{a} {b}")),
            (a, b) => a.clone().or_else(|| b.clone()),
        }
    }

    fn default_version(&self) -> Option<&str> {
        match self.template {
            Template::JpegJfif => Some("1.01"),
            Template::Pdf => Some("1.4"),
            _ => None,
        }
    }

    fn version(&self) -> Option<&str> {
        self.version.as_deref().or_else(|| self.default_version())
    }
}

const ALNUM: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

/// Letters and digits only: filler never forms markup, CSS or script tokens.
fn filler(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n)
        .map(|_| ALNUM[rng.gen_range(0..ALNUM.len())])
        .collect()
}

fn png_chunk(out: &mut Vec<u8>, kind: &[u8; 4], data: &[u8]) {
    out.extend((data.len() as u32).to_be_bytes());
    let mut crc = Crc::new();
    crc.update(kind);
    crc.update(data);
    out.extend(kind);
    out.extend(data);
    out.extend(crc.sum().to_be_bytes());
}

fn png(pad: &[u8]) -> Vec<u8> {
    let mut out = b"\x89PNG\r\n\x1a\n".to_vec();
    // 1x1, 8-bit greyscale
    png_chunk(&mut out, b"IHDR", &[0, 0, 0, 1, 0, 0, 0, 1, 8, 0, 0, 0, 0]);
    if !pad.is_empty() {
        let mut text = b"Comment\0".to_vec();
        text.extend(pad);
        png_chunk(&mut out, b"tEXt", &text);
    }
    let mut z = ZlibEncoder::new(Vec::new(), Compression::default());
    z.write_all(&[0, 0x80]).expect("in-memory write");
    png_chunk(&mut out, b"IDAT", &z.finish().expect("in-memory write"));
    png_chunk(&mut out, b"IEND", &[]);
    out
}

fn gif(v89a: bool, pad: &[u8]) -> Vec<u8> {
    let mut out = if v89a {
        b"GIF89a".to_vec()
    } else {
        b"GIF87a".to_vec()
    };
    // 1x1 screen, 2-colour global table
    out.extend([1, 0, 1, 0, 0x80, 0, 0, 0, 0, 0, 0xFF, 0xFF, 0xFF]);
    if v89a && !pad.is_empty() {
        out.extend([0x21, 0xFE]);
        for block in pad.chunks(255) {
            out.push(block.len() as u8);
            out.extend(block);
        }
        out.push(0);
    }
    out.extend([0x2C, 0, 0, 0, 0, 1, 0, 1, 0, 0]);
    out.extend([0x02, 0x02, 0x44, 0x01, 0x00]);
    out.push(0x3B);
    out
}

enum TiffValue {
    Short(u16),
    Long(u32),
    Ascii(Vec<u8>),
    StripOffset,
}

/// A TIFF structure with one IFD. Entries must be in ascending tag order.
fn tiff(little: bool, entries: &[(u16, TiffValue)], strip: &[u8]) -> Vec<u8> {
    let u16b = |v: u16| {
        if little {
            v.to_le_bytes()
        } else {
            v.to_be_bytes()
        }
    };
    let u32b = |v: u32| {
        if little {
            v.to_le_bytes()
        } else {
            v.to_be_bytes()
        }
    };
    let ifd_len = 2 + 12 * entries.len() + 4;
    let mut data = Vec::new();
    let data_start = 8 + ifd_len;
    let strings_len: usize = entries
        .iter()
        .map(|(_, v)| match v {
            TiffValue::Ascii(s) if s.len() + 1 > 4 => s.len() + 1,
            _ => 0,
        })
        .sum();
    let strip_at = (data_start + strings_len) as u32;

    let mut out = if little {
        b"II".to_vec()
    } else {
        b"MM".to_vec()
    };
    out.extend(u16b(42));
    out.extend(u32b(8));
    out.extend(u16b(entries.len() as u16));
    for (tag, value) in entries {
        out.extend(u16b(*tag));
        match value {
            TiffValue::Short(v) => {
                out.extend(u16b(3));
                out.extend(u32b(1));
                out.extend(u16b(*v));
                out.extend([0, 0]);
            }
            TiffValue::Long(v) => {
                out.extend(u16b(4));
                out.extend(u32b(1));
                out.extend(u32b(*v));
            }
            TiffValue::StripOffset => {
                out.extend(u16b(4));
                out.extend(u32b(1));
                out.extend(u32b(strip_at));
            }
            TiffValue::Ascii(s) => {
                let mut bytes = s.clone();
                bytes.push(0);
                out.extend(u16b(2));
                out.extend(u32b(bytes.len() as u32));
                if bytes.len() <= 4 {
                    bytes.resize(4, 0);
                    out.extend(bytes);
                } else {
                    out.extend(u32b((data_start + data.len()) as u32));
                    data.extend(bytes);
                }
            }
        }
    }
    out.extend(u32b(0));
    out.extend(data);
    debug_assert_eq!(out.len() as u32, strip_at);
    out.extend(strip);
    out
}

fn exif_strings(plan: &Plan) -> Vec<(u16, TiffValue)> {
    let mut v = Vec::new();
    if let Some(m) = &plan.make {
        v.push((0x010F, TiffValue::Ascii(m.as_bytes().to_vec())));
    }
    if let Some(m) = &plan.model {
        v.push((0x0110, TiffValue::Ascii(m.as_bytes().to_vec())));
    }
    if let Some(s) = &plan.software {
        v.push((0x0131, TiffValue::Ascii(s.as_bytes().to_vec())));
    }
    v
}

fn tiff_image(plan: &Plan, little: bool, pad: &[u8]) -> Vec<u8> {
    let strip: Vec<u8> = if pad.is_empty() {
        vec![0x80]
    } else {
        pad.to_vec()
    };
    let mut entries = vec![
        (0x0100, TiffValue::Long(strip.len() as u32)),
        (0x0101, TiffValue::Short(1)),
        (0x0102, TiffValue::Short(8)),
        (0x0103, TiffValue::Short(1)),
        (0x0106, TiffValue::Short(1)),
    ];
    let strings = exif_strings(plan);
    let (before, after): (Vec<_>, Vec<_>) = strings.into_iter().partition(|(t, _)| *t < 0x0111);
    entries.extend(before);
    entries.push((0x0111, TiffValue::StripOffset));
    entries.push((0x0116, TiffValue::Short(1)));
    entries.push((0x0117, TiffValue::Long(strip.len() as u32)));
    entries.extend(after);
    tiff(little, &entries, &strip)
}

fn jpeg(plan: &Plan, pad: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut out = vec![0xFF, 0xD8];
    match plan.template {
        Template::JpegExif => {
            let block = tiff(false, &exif_strings(plan), &[]);
            out.extend([0xFF, 0xE1]);
            out.extend(((block.len() + 8) as u16).to_be_bytes());
            out.extend(b"Exif\0\0");
            out.extend(block);
        }
        _ => {
            let minor = match plan.version() {
                Some("1.00") => 0,
                Some("1.02") => 2,
                _ => 1,
            };
            out.extend([0xFF, 0xE0, 0x00, 0x10]);
            out.extend(b"JFIF\0");
            out.extend([0x01, minor, 0x00, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00]);
        }
    }
    // start of scan, then filler standing in for entropy-coded data
    out.extend([0xFF, 0xDA, 0x00, 0x02]);
    out.extend(pad);
    if plan.has(Malformation::JpegPictCollision) {
        while out.len() <= PICT_OFFSET + 16 {
            out.push(ALNUM[rng.gen_range(0..ALNUM.len())]);
        }
        out[PICT_OFFSET] = 0x11;
    } else {
        out.extend([0xFF, 0xD9]);
    }
    out
}

fn bmp(pad: &[u8]) -> Vec<u8> {
    let mut extra = pad.to_vec();
    // 2x2 24-bit pixels: two rows of 6 bytes plus 2 bytes row padding
    let pixels: Vec<u8> = b"0123456789ABCDEFGHIJKLMN"[..16].to_vec();
    let mut total = 54 + pixels.len() + extra.len();
    // keep '{' out of the size field so no CSS-like byte run can form
    if total & 0xFF == usize::from(b'{') {
        extra.push(b'0');
        total += 1;
    }
    let mut out = b"BM".to_vec();
    out.extend((total as u32).to_le_bytes());
    out.extend([0, 0, 0, 0]);
    out.extend(54u32.to_le_bytes());
    out.extend(40u32.to_le_bytes());
    out.extend(2i32.to_le_bytes());
    out.extend(2i32.to_le_bytes());
    out.extend(1u16.to_le_bytes());
    out.extend(24u16.to_le_bytes());
    out.extend(0u32.to_le_bytes());
    out.extend((pixels.len() as u32).to_le_bytes());
    out.extend(2835u32.to_le_bytes());
    out.extend(2835u32.to_le_bytes());
    out.extend(0u32.to_le_bytes());
    out.extend(0u32.to_le_bytes());
    out.extend(pixels);
    out.extend(extra);
    out
}

fn ico(pad: &[u8]) -> Vec<u8> {
    // one 1x1 32-bit image: DIB header, one pixel, one AND-mask row
    let mut image = Vec::new();
    image.extend(40u32.to_le_bytes());
    image.extend(1i32.to_le_bytes());
    image.extend(2i32.to_le_bytes());
    image.extend(1u16.to_le_bytes());
    image.extend(32u16.to_le_bytes());
    image.extend([0u8; 24]);
    image.extend([0x40, 0x40, 0x40, 0xFF]);
    image.extend([0, 0, 0, 0]);
    image.extend(pad);
    let mut out = vec![0, 0, 1, 0, 1, 0];
    out.extend([1, 1, 0, 0, 1, 0, 32, 0]);
    out.extend((image.len() as u32).to_le_bytes());
    out.extend(22u32.to_le_bytes());
    out.extend(image);
    out
}

fn xbm(pad: &[u8]) -> Vec<u8> {
    let mut out =
        b"#define img_width 8\n#define img_height 2\nstatic char img_bits[] = {\n   0x18, 0x3c};\n"
            .to_vec();
    if !pad.is_empty() {
        out.extend(b"/* ");
        out.extend(pad);
        out.extend(b" */\n");
    }
    out
}

/// PDF literal string if printable ASCII, else UTF-16BE hex string.
fn pdf_string(s: &str) -> String {
    if s.bytes().all(|b| (0x20..0x7F).contains(&b)) {
        let mut out = String::from("(");
        for c in s.chars() {
            if matches!(c, '(' | ')' | '\\') {
                out.push('\\');
            }
            out.push(c);
        }
        out.push(')');
        out
    } else {
        let mut out = String::from("<FEFF");
        for unit in s.encode_utf16() {
            out.push_str(&format!("{unit:04X}"));
        }
        out.push('>');
        out
    }
}

fn pdf(plan: &Plan, pad: &[u8]) -> Vec<u8> {
    let version = plan.version().expect("pdf has a default version");
    let mut out = format!("%PDF-{version}\n").into_bytes();
    out.extend(b"1 0 obj\n<< /Type /Catalog /Pages 2 0 R >>\nendobj\n");
    out.extend(b"2 0 obj\n<< /Type /Pages /Kids [] /Count 0 >>\nendobj\n");
    out.extend(format!("3 0 obj\n<< /Length {} >>\nstream\n", pad.len()).as_bytes());
    out.extend(pad);
    out.extend(b"\nendstream\nendobj\n");
    // info after the filler so it stays in the scanned tail
    out.extend(b"4 0 obj\n<<");
    if let Some(c) = &plan.creator {
        out.extend(format!(" /Creator {}", pdf_string(c)).as_bytes());
    }
    if let Some(p) = &plan.producer {
        out.extend(format!(" /Producer {}", pdf_string(p)).as_bytes());
    }
    out.extend(b" >>\nendobj\ntrailer\n<< /Root 1 0 R /Info 4 0 R >>\n");
    if plan.has(Malformation::PdfEofTruncated) {
        out.extend(b"%%EO");
    } else {
        out.extend(b"%%EOF\n");
    }
    out
}

fn doctype(version: &str) -> &'static str {
    match version {
        "2.0" => r#"<!DOCTYPE HTML PUBLIC "-//IETF//DTD HTML 2.0//EN">"#,
        "3.2" => r#"<!DOCTYPE HTML PUBLIC "-//W3C//DTD HTML 3.2 Final//EN">"#,
        "4.0" => {
            r#"<!DOCTYPE HTML PUBLIC "-//W3C//DTD HTML 4.0//EN" "http://www.w3.org/TR/REC-html40/strict.dtd">"#
        }
        "4.01" => {
            r#"<!DOCTYPE HTML PUBLIC "-//W3C//DTD HTML 4.01//EN" "http://www.w3.org/TR/html4/strict.dtd">"#
        }
        "xhtml-1.0" => {
            r#"<!DOCTYPE html PUBLIC "-//W3C//DTD XHTML 1.0 Strict//EN" "http://www.w3.org/TR/xhtml1/DTD/xhtml1-strict.dtd">"#
        }
        "xhtml-1.1" => {
            r#"<!DOCTYPE html PUBLIC "-//W3C//DTD XHTML 1.1//EN" "http://www.w3.org/TR/xhtml11/DTD/xhtml11.dtd">"#
        }
        other => unreachable!("unvalidated html version {other}"),
    }
}

fn html(plan: &Plan, pad: &[u8]) -> Vec<u8> {
    let body = String::from_utf8_lossy(pad);
    let text = if plan.has(Malformation::TaglessHtml) {
        format!("<head><title>Old page</title></head>\n<body>\n<h1>Welcome</h1>\n<p>{body}</p>\n</body>\n")
    } else {
        let head = plan
            .version()
            .map(|v| format!("{}\n", doctype(v)))
            .unwrap_or_default();
        format!("{head}<html>\n<head><title>Page</title></head>\n<body>\n<p>{body}</p>\n</body>\n</html>\n")
    };
    text.into_bytes()
}

fn css(pad: &[u8]) -> Vec<u8> {
    let mut out = b"body {\n  color: #333333;\n  margin: 0;\n}\n".to_vec();
    if !pad.is_empty() {
        out.extend(b"/* ");
        out.extend(pad);
        out.extend(b" */\n");
    }
    out
}

fn js(pad: &[u8]) -> Vec<u8> {
    let mut out = b"function init(a) {\n  return a + 1;\n}\n".to_vec();
    if !pad.is_empty() {
        out.extend(b"// ");
        out.extend(pad);
        out.push(b'\n');
    }
    out
}

/// Non-text, signature-free bytes: a NUL lead-in, then high bytes only.
fn random_bytes(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = rng.gen_range(16..=500);
    let mut out = vec![0x00, 0xFE, 0xFD, 0xFC];
    out.extend((4..n).map(|_| rng.gen_range(0x80..=0xFF)));
    out
}

fn build_payload(plan: &Plan, pad: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    match plan.template {
        Template::Png => png(pad),
        Template::Gif87a => gif(false, pad),
        Template::Gif89a => gif(true, pad),
        Template::JpegJfif | Template::JpegExif => jpeg(plan, pad, rng),
        Template::TiffLe => tiff_image(plan, true, pad),
        Template::TiffBe => tiff_image(plan, false, pad),
        Template::Bmp => bmp(pad),
        Template::Ico => ico(pad),
        Template::Xbm => xbm(pad),
        Template::Pdf => pdf(plan, pad),
        Template::Html => html(plan, pad),
        Template::Css => css(pad),
        Template::Js => js(pad),
        Template::Random => random_bytes(rng),
    }
}

fn mime(t: &str, s: &str) -> ExtendedMimeType {
    ExtendedMimeType::new(t, s).expect("static type")
}

fn with(mut m: ExtendedMimeType, key: ParamKey, v: Option<&str>) -> ExtendedMimeType {
    if let Some(v) = v {
        m.set_param(key, v);
    }
    m
}

/// Expected `(broad, fine)` outcomes, derived from how the payload is built.
fn expected_outcomes(plan: &Plan) -> (IdentificationOutcome, IdentificationOutcome) {
    use IdentificationOutcome::Unidentified;
    let id = IdentificationOutcome::Identified;
    let version = plan.version();
    let hardware = plan.hardware();
    let exif = |m: ExtendedMimeType| {
        with(
            with(m, ParamKey::Software, plan.software.as_deref()),
            ParamKey::Hardware,
            hardware.as_deref(),
        )
    };
    match plan.template {
        Template::Png => (
            id(mime("image", "png")),
            id(mime("image", "png").with_param(ParamKey::Version, "1.0")),
        ),
        Template::Gif87a | Template::Gif89a => {
            let v = if plan.template == Template::Gif87a {
                "87a"
            } else {
                "89a"
            };
            (
                id(mime("image", "gif")),
                id(mime("image", "gif").with_param(ParamKey::Version, v)),
            )
        }
        Template::JpegJfif if plan.has(Malformation::JpegPictCollision) => {
            (id(mime("image", "jpeg")), id(mime("image", "x-pict")))
        }
        Template::JpegJfif => (
            id(mime("image", "jpeg")),
            id(with(mime("image", "jpeg"), ParamKey::Version, version)),
        ),
        Template::JpegExif => (
            id(exif(mime("image", "jpeg"))),
            id(exif(mime("image", "jpeg"))),
        ),
        Template::TiffLe | Template::TiffBe => (
            id(exif(mime("image", "tiff"))),
            id(exif(mime("image", "tiff"))),
        ),
        Template::Bmp => (
            id(mime("image", "bmp")),
            id(mime("image", "bmp").with_param(ParamKey::Version, "3.0")),
        ),
        Template::Ico => (
            id(mime("image", "vnd.microsoft.icon")),
            id(mime("image", "vnd.microsoft.icon")),
        ),
        Template::Xbm => (
            id(mime("image", "x-xbitmap")),
            id(mime("image", "x-xbitmap")),
        ),
        Template::Pdf => {
            let software = plan.producer.as_deref().or(plan.creator.as_deref());
            let full = with(
                with(mime("application", "pdf"), ParamKey::Version, version),
                ParamKey::Software,
                software,
            );
            if plan.has(Malformation::PdfEofTruncated) {
                (id(full), Unidentified)
            } else {
                (id(full.clone()), id(full))
            }
        }
        Template::Html if plan.has(Malformation::TaglessHtml) => {
            (id(mime("text", "html")), id(mime("text", "plain")))
        }
        Template::Html => {
            let m = with(mime("text", "html"), ParamKey::Version, version);
            (id(m.clone()), id(m))
        }
        Template::Css => (id(mime("text", "css")), id(mime("text", "css"))),
        Template::Js => (
            id(mime("application", "javascript")),
            id(mime("application", "javascript")),
        ),
        Template::Random => (Unidentified, Unidentified),
    }
}

// ---------------------------------------------------------------------------
// WARC writing

fn http_block(server_mime: Option<&str>, payload: &[u8]) -> Vec<u8> {
    let mut out = b"HTTP/1.1 200 OK\r\n".to_vec();
    if let Some(m) = server_mime {
        out.extend(format!("Content-Type: {m}\r\n").as_bytes());
    }
    out.extend(format!("Content-Length: {}\r\n\r\n", payload.len()).as_bytes());
    out.extend(payload);
    out
}

fn record_id(seed: u64, index: u64) -> String {
    let d = Sha256::digest(format!("{seed}:{index}").as_bytes());
    let h = hex::encode(&d[..16]);
    format!(
        "<urn:uuid:{}-{}-{}-{}-{}>",
        &h[0..8],
        &h[8..12],
        &h[12..16],
        &h[16..20],
        &h[20..32]
    )
}

fn warc_record(headers: &[(&str, String)], block: &[u8]) -> Vec<u8> {
    let mut out = b"WARC/1.0\r\n".to_vec();
    for (k, v) in headers {
        out.extend(format!("{k}: {v}\r\n").as_bytes());
    }
    out.extend(format!("Content-Length: {}\r\n\r\n", block.len()).as_bytes());
    out.extend(block);
    out.extend(b"\r\n\r\n");
    out
}

fn gzip_member(bytes: &[u8]) -> Vec<u8> {
    let mut gz = GzEncoder::new(Vec::new(), Compression::fast());
    gz.write_all(bytes).expect("in-memory write");
    gz.finish().expect("in-memory write")
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub files: Vec<PathBuf>,
    pub manifest_path: PathBuf,
    pub manifest: Vec<ManifestEntry>,
}

fn expand(spec: &CorpusSpec) -> Vec<Plan> {
    let mut plans = Vec::new();
    for e in &spec.recipe {
        for &year in spec.entry_years(e) {
            let plan = Plan {
                year,
                template: e.template,
                version: e.version.clone(),
                producer: e.producer.clone(),
                creator: e.creator.clone(),
                software: e.software.clone(),
                make: e.make.clone(),
                model: e.model.clone(),
                server_mime: e.server_mime.clone(),
                malformations: e.malformations.clone(),
            };
            for _ in 0..e.count {
                plans.push(plan.clone());
            }
        }
    }
    plans
}

fn record_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index + 1);
    rng
}

/// Builds record `index` of the shuffled plan list.
fn render(spec: &CorpusSpec, plan: &Plan, index: u64, file: &str) -> (Vec<u8>, ManifestEntry) {
    let mut rng = record_rng(spec.seed, index);
    let timestamp = format!(
        "{:04}{:02}{:02}{:02}{:02}{:02}",
        plan.year,
        rng.gen_range(1..=12),
        rng.gen_range(1..=28),
        rng.gen_range(0..24),
        rng.gen_range(0..60),
        rng.gen_range(0..60)
    );
    let [lo, hi] = spec.padding;
    let pad_len = rng.gen_range(lo..=hi);
    let pad = filler(&mut rng, pad_len);
    let payload = build_payload(plan, &pad, &mut rng);
    let server_mime = (!plan.has(Malformation::MissingContentType)).then(|| {
        plan.server_mime
            .clone()
            .unwrap_or_else(|| plan.template.default_server_mime().to_string())
    });
    let (broad, fine) = expected_outcomes(plan);
    let url = format!(
        "http://www.example.test/{}/r{index:08}.{}",
        plan.year,
        plan.template.extension()
    );
    let entry = ManifestEntry {
        index,
        file: file.to_string(),
        url,
        timestamp,
        server: server_mime
            .as_deref()
            .map(str::to_ascii_lowercase)
            .unwrap_or_else(|| crate::warc_ingest::UNKNOWN_MIME.to_string()),
        broad: broad.to_string(),
        fine: fine.to_string(),
        year: plan.year,
        sha256: hex::encode(Sha256::digest(&payload)),
        template: plan.template,
        malformations: plan.malformations.clone(),
        version: match plan.template {
            Template::Gif87a => Some("87a".into()),
            Template::Gif89a => Some("89a".into()),
            Template::Png => Some("1.0".into()),
            Template::Bmp => Some("3.0".into()),
            Template::Html if plan.has(Malformation::TaglessHtml) => None,
            _ => plan.version().map(str::to_string),
        },
        software: match plan.template {
            Template::Pdf => plan.producer.clone().or_else(|| plan.creator.clone()),
            _ => plan.software.clone(),
        },
        hardware: plan.hardware(),
    };
    let block = http_block(server_mime.as_deref(), &payload);
    let ts = &entry.timestamp;
    let date = format!(
        "{}-{}-{}T{}:{}:{}Z",
        &ts[0..4],
        &ts[4..6],
        &ts[6..8],
        &ts[8..10],
        &ts[10..12],
        &ts[12..14]
    );
    let record = warc_record(
        &[
            ("WARC-Type", "response".into()),
            ("WARC-Record-ID", record_id(spec.seed, index)),
            ("WARC-Date", date),
            ("WARC-Target-URI", entry.url.clone()),
            ("Content-Type", "application/http; msgtype=response".into()),
        ],
        &block,
    );
    (gzip_member(&record), entry)
}

/// Writes the corpus into `out_dir` (created if needed) and returns the
/// archive paths and manifest.
pub fn generate(spec: &CorpusSpec, out_dir: &Path) -> Result<GeneratedCorpus, CorpusError> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut plans = expand(spec);
    let mut order_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order_rng.set_stream(0);
    plans.shuffle(&mut order_rng);

    let mut files = Vec::new();
    let mut manifest = Vec::with_capacity(plans.len());
    for (file_no, chunk) in plans.chunks(spec.records_per_file).enumerate() {
        let name = format!("corpus-{file_no:05}.warc.gz");
        let path = out_dir.join(&name);
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        let info = format!(
            "software: fmtprof corpusgen\r\nformat: WARC File Format 1.0\r\nseed: {}\r\n",
            spec.seed
        );
        let warcinfo = warc_record(
            &[
                ("WARC-Type", "warcinfo".into()),
                (
                    "WARC-Record-ID",
                    record_id(spec.seed, u64::MAX - file_no as u64),
                ),
                ("WARC-Date", "2000-01-01T00:00:00Z".into()),
                ("WARC-Filename", name.clone()),
                ("Content-Type", "application/warc-fields".into()),
            ],
            info.as_bytes(),
        );
        w.write_all(&gzip_member(&warcinfo))
            .map_err(io_err(&path))?;
        for (k, plan) in chunk.iter().enumerate() {
            let index = (file_no * spec.records_per_file + k) as u64;
            let (bytes, entry) = render(spec, plan, index, &name);
            w.write_all(&bytes).map_err(io_err(&path))?;
            manifest.push(entry);
        }
        w.flush().map_err(io_err(&path))?;
        files.push(path);
    }
    let manifest_path = out_dir.join(MANIFEST_NAME);
    let f = File::create(&manifest_path).map_err(io_err(&manifest_path))?;
    write_manifest(&manifest, f).map_err(io_err(&manifest_path))?;
    Ok(GeneratedCorpus {
        files,
        manifest_path,
        manifest,
    })
}

/// SHA-256 over the archive files and the manifest, in order: one digest
/// identifying a generated corpus.
pub fn corpus_digest(g: &GeneratedCorpus) -> Result<String, CorpusError> {
    let mut h = Sha256::new();
    for p in g.files.iter().chain(std::iter::once(&g.manifest_path)) {
        let mut f = File::open(p).map_err(io_err(p))?;
        io::copy(&mut f, &mut h).map_err(io_err(p))?;
    }
    Ok(hex::encode(h.finalize()))
}

/// A single payload for `template` with default parameters, for tests and
/// fuzz seeds.
pub fn sample_payload(template: Template, seed: u64) -> Vec<u8> {
    let plan = Plan {
        year: 2000,
        template,
        version: None,
        producer: (template == Template::Pdf).then(|| "Sample Producer 1.0".to_string()),
        creator: None,
        software: matches!(
            template,
            Template::JpegExif | Template::TiffLe | Template::TiffBe
        )
        .then(|| "Sample Software".to_string()),
        make: None,
        model: None,
        server_mime: None,
        malformations: Vec::new(),
    };
    let mut rng = record_rng(seed, 0);
    let n = rng.gen_range(0..=64);
    let pad = filler(&mut rng, n);
    build_payload(&plan, &pad, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiler::emit_to_string;

    #[test]
    fn spec_parsing_and_validation() {
        let spec = parse_spec(
            br#"{"seed": 7, "years": [1999, 2000],
                "recipe": [{"template": "pdf", "count": 2, "producer": "X", "malformations": ["pdf_eof_truncated"]},
                           {"year": 2004, "template": "png", "count": 1}]}"#,
        )
        .unwrap();
        assert_eq!(expand(&spec).len(), 5);
        let bad = [
            r#"{"seed": 1, "recipe": [{"year": 2000, "template": "png", "count": 1, "producer": "x"}]}"#,
            r#"{"seed": 1, "recipe": [{"year": 2000, "template": "gif87a", "count": 1, "version": "1.0"}]}"#,
            r#"{"seed": 1, "recipe": [{"year": 1990, "template": "png", "count": 1}]}"#,
            r#"{"seed": 1, "recipe": [{"template": "png", "count": 1}]}"#,
            r#"{"seed": 1, "recipe": [{"year": 2000, "template": "png", "count": 1, "malformations": ["tagless_html"]}]}"#,
            r#"{"seed": 1, "recipe": [{"year": 2000, "template": "tiff_le", "count": 1, "software": " padded"}]}"#,
            r#"{"seed": 1, "recipe": [{"year": 2000, "template": "bogus", "count": 1}]}"#,
            r#"{"seed": 1, "padding": [5, 1], "recipe": []}"#,
            r#"{"seed": 1, "records_per_file": 0, "recipe": []}"#,
            r#"{"seed": 1, "recipe": [{"year": 2000, "template": "css", "count": 1, "server_mime": "text/css; charset=x"}]}"#,
        ];
        for b in bad {
            assert!(
                matches!(parse_spec(b.as_bytes()), Err(CorpusError::Spec(_))),
                "{b}"
            );
        }
    }

    #[test]
    fn deterministic_bytes() {
        let spec = CorpusSpec {
            records_per_file: 3,
            ..CorpusSpec::new(
                42,
                vec![
                    RecipeEntry::new(2001, Template::Html, 4).version("3.2"),
                    RecipeEntry::new(2002, Template::Random, 3),
                ],
            )
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ga = generate(&spec, a.path()).unwrap();
        let gb = generate(&spec, b.path()).unwrap();
        assert_eq!(ga.files.len(), 3);
        for (x, y) in ga.files.iter().zip(&gb.files) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
        assert_eq!(ga.manifest, gb.manifest);
        let other = generate(&CorpusSpec { seed: 43, ..spec }, b.path()).unwrap();
        assert_ne!(other.manifest, ga.manifest);
    }

    #[test]
    fn manifest_round_trip_and_profile() {
        let spec = CorpusSpec::new(
            3,
            vec![
                RecipeEntry::new(2004, Template::Png, 2),
                RecipeEntry::new(1998, Template::Pdf, 1)
                    .producer("Acrobat (tm) 3.0")
                    .malformed(Malformation::PdfEofTruncated)
                    .malformed(Malformation::MissingContentType),
            ],
        );
        let dir = tempfile::tempdir().unwrap();
        let g = generate(&spec, dir.path()).unwrap();
        let back = load_manifest(&g.manifest_path).unwrap();
        assert_eq!(back, g.manifest);
        assert_eq!(
            emit_to_string(&expected_profile(&back)),
            "unknown/unknown\tapplication/pdf; version=1.4; software=\"Acrobat (tm) 3.0\"\tunidentified\t1998\t1\n\
             image/png\timage/png\timage/png; version=1.0\t2004\t2\n"
        );
        assert!(expected_profile(&[]).is_empty());
    }

    #[test]
    fn payload_shapes() {
        let mut rng = record_rng(1, 1);
        let plan = |t| Plan {
            year: 2000,
            template: t,
            version: None,
            producer: None,
            creator: None,
            software: None,
            make: None,
            model: None,
            server_mime: None,
            malformations: vec![],
        };
        let mut p = plan(Template::Pdf);
        p.malformations.push(Malformation::PdfEofTruncated);
        assert!(pdf(&p, b"abc").ends_with(b"%%EO"));
        let mut j = plan(Template::JpegJfif);
        j.malformations.push(Malformation::JpegPictCollision);
        let jp = jpeg(&j, b"", &mut rng);
        assert_eq!(jp[PICT_OFFSET], 0x11);
        assert!(!jp.ends_with(&[0xFF, 0xD9]));
        let r = random_bytes(&mut rng);
        assert!(r.len() >= 16 && r.len() <= 500 && r[0] == 0);
        assert_eq!(pdf_string("a(b)\\"), "(a\\(b\\)\\\\)");
        assert_eq!(pdf_string("é"), "<FEFF00E9>");
        for n in 0..600 {
            let b = bmp(&vec![b'x'; n]);
            assert!(!b[..64.min(b.len())].contains(&b'{'));
            assert_eq!(
                u32::from_le_bytes(b[2..6].try_into().unwrap()) as usize,
                b.len()
            );
        }
    }
}
