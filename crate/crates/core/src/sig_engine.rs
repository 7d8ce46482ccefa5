//! Byte-signature identification.
//!
//! A [`SignatureSet`] is compiled from a JSON signature file and used to
//! identify payloads. The same engine serves both identification styles:
//!
//! * `fine` sets are version-granular and strict (e.g. a PDF must carry its
//!   `%%EOF` trailer);
//! * `broad` sets are format-level and may enable tolerant heuristics that
//!   are consulted when no signature matches.
//!
//! # Signature file schema
//!
//! ```json
//! {
//!   "name": "fine",
//!   "mode": "fine",
//!   "heuristics": { "tolerant_html": false, "tolerant_pdf_eof": false, "text_fallback": true },
//!   "signatures": [
//!     {
//!       "id": "pdf",
//!       "mime": "application/pdf",
//!       "anchor": { "bof": 0 },
//!       "elements": ["255044462D", "@version"],
//!       "versions": [["312E34", "1.4"], [{ "text": "1.5" }, "1.5"]],
//!       "requires": [{ "anchor": { "eof": 0 }, "elements": [{ "text": "%%EOF" }, { "gap": [0, 1019] }] }],
//!       "priority_over": []
//!     }
//!   ]
//! }
//! ```
//!
//! Elements are hex literals (`"89504E47"`), `"??"` for any single byte,
//! `{"gap": [min, max]}` for a bounded run of arbitrary bytes, text literals
//! `{"text": "...", "nocase": bool}`, and the `"@version"` marker where the
//! `versions` alternatives are matched; the alternative that matches supplies
//! the `version` parameter. Anchors are `{"bof": n}` (sequence starts at byte
//! `n`), `{"eof": n}` (sequence ends `n` bytes before the end) and
//! `{"window": [start, end]}` (sequence starts anywhere in `start..end`).
//! `requires` lists extra sequences that must all match as well.
//!
//! Scans never look past the first or last 64 KiB of a payload.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use crate::mimetype::{parse_extended_mime, ExtendedMimeType, IdentificationOutcome, ParamKey};

/// Bound on how far from either end of a payload a signature may look.
pub const SCAN_LIMIT: usize = 64 * 1024;

/// Signatures with fewer literal bytes than this are reported as weak.
pub const WEAK_LITERAL_THRESHOLD: usize = 3;

const HEURISTIC_WINDOW: usize = 1024;
const HTML_TOKENS: [&[u8]; 4] = [b"<html", b"<!doctype html", b"<head", b"<body"];

const SHIPPED_FINE: &[u8] = include_bytes!("../signatures/fine.sig.json");
const SHIPPED_BROAD: &[u8] = include_bytes!("../signatures/broad.sig.json");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("SchemaError at {path}: {reason}")]
    SchemaError { path: String, reason: String },
    #[error("CycleError: priority cycle {}", .0.join(" -> "))]
    CycleError(Vec<String>),
}

fn schema_err(path: impl Into<String>, reason: impl Into<String>) -> SignatureError {
    SignatureError::SchemaError {
        path: path.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fine,
    Broad,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Fine => "fine",
            Mode::Broad => "broad",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heuristics {
    /// Accept `<html`, `<!doctype html`, `<head` or `<body` (any case) in the
    /// first 1024 bytes as HTML.
    #[serde(default)]
    pub tolerant_html: bool,
    /// Accept a `%PDF-` header without the `%%EOF` trailer.
    #[serde(default)]
    pub tolerant_pdf_eof: bool,
    /// Report printable text as `text/plain` when nothing else matched.
    #[serde(default)]
    pub text_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub bytes: Vec<u8>,
    pub nocase: bool,
}

impl Pattern {
    fn matches_at(&self, data: &[u8], pos: usize) -> bool {
        let Some(slice) = data.get(pos..pos + self.bytes.len()) else {
            return false;
        };
        if self.nocase {
            slice.eq_ignore_ascii_case(&self.bytes)
        } else {
            slice == self.bytes.as_slice()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Element {
    Literal(Pattern),
    AnyByte,
    Gap {
        min: usize,
        max: usize,
    },
    /// Position of the version alternative group.
    Version,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Bof(usize),
    Eof(usize),
    Window { start: usize, end: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    pub anchor: Anchor,
    pub elements: Vec<Element>,
}

impl Sequence {
    fn has_gap(&self) -> bool {
        self.elements
            .iter()
            .any(|e| matches!(e, Element::Gap { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteSignature {
    pub id: String,
    pub output: ExtendedMimeType,
    pub sequence: Sequence,
    pub requires: Vec<Sequence>,
    /// Alternatives for the `@version` marker, longest first.
    pub versions: Vec<(Pattern, String)>,
    pub priority_over: Vec<String>,
}

impl ByteSignature {
    fn sequences(&self) -> impl Iterator<Item = &Sequence> {
        std::iter::once(&self.sequence).chain(&self.requires)
    }

    /// Literal bytes that any match is guaranteed to contain.
    pub fn min_literal_bytes(&self) -> usize {
        let min_version = self.versions.iter().map(|(p, _)| p.bytes.len()).min();
        self.sequences()
            .flat_map(|s| &s.elements)
            .map(|e| match e {
                Element::Literal(p) => p.bytes.len(),
                Element::Version => min_version.unwrap_or(0),
                _ => 0,
            })
            .sum()
    }

    fn fixed_literal_bytes(&self) -> usize {
        self.sequences()
            .flat_map(|s| &s.elements)
            .map(|e| match e {
                Element::Literal(p) => p.bytes.len(),
                _ => 0,
            })
            .sum()
    }
}

/// One signature that fired on a payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureMatch {
    /// Index into [`SignatureSet::signatures`].
    pub index: usize,
    /// Literal bytes matched, including the chosen version alternative.
    pub literal_len: usize,
    pub version: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SignatureSet {
    pub name: String,
    pub mode: Mode,
    pub heuristics: Heuristics,
    signatures: Vec<ByteSignature>,
    /// `dominates[i]` holds the indices signature `i` has priority over.
    dominates: Vec<Vec<usize>>,
    /// Signatures anchored at offset 0 with a case-sensitive leading literal,
    /// keyed by that literal's first byte.
    bof_dispatch: Vec<Vec<usize>>,
    general: Vec<usize>,
}

// ---------------------------------------------------------------------------
// schema

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SignatureFile {
    #[serde(default)]
    name: Option<String>,
    mode: Mode,
    #[serde(default)]
    heuristics: Heuristics,
    signatures: Vec<SignatureSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SignatureSpec {
    id: String,
    mime: String,
    anchor: AnchorSpec,
    elements: Vec<ElementSpec>,
    #[serde(default)]
    versions: Vec<(PatternSpec, String)>,
    #[serde(default)]
    requires: Vec<SequenceSpec>,
    #[serde(default)]
    priority_over: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceSpec {
    anchor: AnchorSpec,
    elements: Vec<ElementSpec>,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum AnchorSpec {
    Bof(usize),
    Eof(usize),
    Window([usize; 2]),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ElementSpec {
    Token(String),
    Gap { gap: [usize; 2] },
    Text(TextSpec),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PatternSpec {
    Hex(String),
    Text(TextSpec),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TextSpec {
    text: String,
    #[serde(default)]
    nocase: bool,
}

fn parse_hex(s: &str) -> Option<Vec<u8>> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return None;
    }
    hex::decode(compact).ok()
}

fn compile_pattern(spec: &PatternSpec, path: &str) -> Result<Pattern, SignatureError> {
    match spec {
        PatternSpec::Hex(h) => parse_hex(h)
            .map(|bytes| Pattern {
                bytes,
                nocase: false,
            })
            .ok_or_else(|| schema_err(path, format!("invalid hex literal {h:?}"))),
        PatternSpec::Text(t) if t.text.is_empty() => Err(schema_err(path, "empty text literal")),
        PatternSpec::Text(t) => Ok(Pattern {
            bytes: t.text.as_bytes().to_vec(),
            nocase: t.nocase,
        }),
    }
}

fn compile_sequence(
    anchor: AnchorSpec,
    elements: &[ElementSpec],
    versions: &[(Pattern, String)],
    path: &str,
) -> Result<Sequence, SignatureError> {
    let mut out = Vec::with_capacity(elements.len());
    let mut span = 0usize;
    for (j, e) in elements.iter().enumerate() {
        let epath = format!("{path}.elements[{j}]");
        let element = match e {
            ElementSpec::Token(t) if t == "??" => Element::AnyByte,
            ElementSpec::Token(t) if t == "@version" => Element::Version,
            ElementSpec::Token(t) => {
                compile_pattern(&PatternSpec::Hex(t.clone()), &epath).map(Element::Literal)?
            }
            ElementSpec::Gap { gap: [min, max] } => {
                if min > max || *max > SCAN_LIMIT {
                    return Err(schema_err(
                        epath,
                        format!("gap bounds must satisfy 0 <= min <= max <= {SCAN_LIMIT}"),
                    ));
                }
                Element::Gap {
                    min: *min,
                    max: *max,
                }
            }
            ElementSpec::Text(t) => compile_pattern(
                &PatternSpec::Text(TextSpec {
                    text: t.text.clone(),
                    nocase: t.nocase,
                }),
                &epath,
            )
            .map(Element::Literal)?,
        };
        span += match &element {
            Element::Literal(p) => p.bytes.len(),
            Element::AnyByte => 1,
            Element::Gap { max, .. } => *max,
            Element::Version => versions
                .iter()
                .map(|(p, _)| p.bytes.len())
                .max()
                .unwrap_or(0),
        };
        out.push(element);
    }
    if out.is_empty() {
        return Err(schema_err(format!("{path}.elements"), "no elements"));
    }
    let anchor = match anchor {
        AnchorSpec::Bof(o) => Anchor::Bof(o),
        AnchorSpec::Eof(o) => Anchor::Eof(o),
        AnchorSpec::Window([start, end]) => {
            if start >= end || end > SCAN_LIMIT {
                return Err(schema_err(
                    format!("{path}.anchor"),
                    format!("window must satisfy start < end <= {SCAN_LIMIT}"),
                ));
            }
            Anchor::Window { start, end }
        }
    };
    if let Anchor::Bof(offset) | Anchor::Eof(offset) = anchor {
        if offset.saturating_add(span) > SCAN_LIMIT {
            return Err(schema_err(
                format!("{path}.anchor"),
                format!("sequence may reach beyond the {SCAN_LIMIT}-byte scan bound"),
            ));
        }
    }
    Ok(Sequence {
        anchor,
        elements: out,
    })
}

fn compile_signature(spec: &SignatureSpec, path: &str) -> Result<ByteSignature, SignatureError> {
    if spec.id.trim().is_empty() {
        return Err(schema_err(format!("{path}.id"), "empty id"));
    }
    let output = parse_extended_mime(&spec.mime)
        .map_err(|e| schema_err(format!("{path}.mime"), e.to_string()))?;
    let mut versions = Vec::new();
    for (k, (pattern, version)) in spec.versions.iter().enumerate() {
        let vpath = format!("{path}.versions[{k}]");
        if version.trim().is_empty() {
            return Err(schema_err(vpath, "empty version string"));
        }
        versions.push((compile_pattern(pattern, &vpath)?, version.clone()));
    }
    // Longest alternative first so that e.g. "HTML 4.01" beats "HTML 4.0".
    versions.sort_by_key(|v| std::cmp::Reverse(v.0.bytes.len()));

    let sequence = compile_sequence(spec.anchor, &spec.elements, &versions, path)?;
    let requires = spec
        .requires
        .iter()
        .enumerate()
        .map(|(k, r)| {
            compile_sequence(
                r.anchor,
                &r.elements,
                &versions,
                &format!("{path}.requires[{k}]"),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    let markers = std::iter::once(&sequence)
        .chain(&requires)
        .flat_map(|s| &s.elements)
        .filter(|e| matches!(e, Element::Version))
        .count();
    match (markers, versions.is_empty()) {
        (0, true) | (1, false) => {}
        (0, false) => return Err(schema_err(path, "versions given but no @version marker")),
        (1, true) => return Err(schema_err(path, "@version marker without versions")),
        _ => return Err(schema_err(path, "more than one @version marker")),
    }
    let sig = ByteSignature {
        id: spec.id.clone(),
        output,
        sequence,
        requires,
        versions,
        priority_over: spec.priority_over.clone(),
    };
    if sig.min_literal_bytes() == 0 {
        return Err(schema_err(path, "signature needs at least one literal"));
    }
    Ok(sig)
}

/// Parses and validates a signature file.
pub fn compile_signatures(bytes: &[u8]) -> Result<SignatureSet, SignatureError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let file: SignatureFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        schema_err(path, e.into_inner().to_string())
    })?;
    if file.mode == Mode::Fine
        && (file.heuristics.tolerant_html || file.heuristics.tolerant_pdf_eof)
    {
        return Err(schema_err(
            "heuristics",
            "tolerant heuristics are only allowed in broad mode",
        ));
    }

    let mut signatures = Vec::with_capacity(file.signatures.len());
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, spec) in file.signatures.iter().enumerate() {
        let path = format!("signatures[{i}]");
        let sig = compile_signature(spec, &path)?;
        if index.insert(sig.id.clone(), i).is_some() {
            return Err(schema_err(
                format!("{path}.id"),
                format!("duplicate id {:?}", sig.id),
            ));
        }
        signatures.push(sig);
    }

    let mut dominates = vec![Vec::new(); signatures.len()];
    for (i, sig) in signatures.iter().enumerate() {
        for (k, target) in sig.priority_over.iter().enumerate() {
            let &j = index.get(target).ok_or_else(|| {
                schema_err(
                    format!("signatures[{i}].priority_over[{k}]"),
                    format!("unknown signature id {target:?}"),
                )
            })?;
            if !dominates[i].contains(&j) {
                dominates[i].push(j);
            }
        }
    }
    if let Some(cycle) = find_cycle(&dominates) {
        return Err(SignatureError::CycleError(
            cycle
                .into_iter()
                .map(|i| signatures[i].id.clone())
                .collect(),
        ));
    }

    let mut bof_dispatch = vec![Vec::new(); 256];
    let mut general = Vec::new();
    for (i, sig) in signatures.iter().enumerate() {
        match (&sig.sequence.anchor, sig.sequence.elements.first()) {
            (Anchor::Bof(0), Some(Element::Literal(p))) if !p.nocase => {
                bof_dispatch[p.bytes[0] as usize].push(i)
            }
            _ => general.push(i),
        }
    }

    Ok(SignatureSet {
        name: file.name.unwrap_or_else(|| file.mode.to_string()),
        mode: file.mode,
        heuristics: file.heuristics,
        signatures,
        dominates,
        bof_dispatch,
        general,
    })
}

/// Returns a cycle (first node repeated at the end) if the graph has one.
fn find_cycle(edges: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Grey,
        Black,
    }
    fn visit(
        n: usize,
        edges: &[Vec<usize>],
        color: &mut [Color],
        stack: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        color[n] = Color::Grey;
        stack.push(n);
        for &m in &edges[n] {
            match color[m] {
                Color::Grey => {
                    let start = stack.iter().position(|&x| x == m).expect("on stack");
                    let mut cycle = stack[start..].to_vec();
                    cycle.push(m);
                    return Some(cycle);
                }
                Color::White => {
                    if let Some(c) = visit(m, edges, color, stack) {
                        return Some(c);
                    }
                }
                Color::Black => {}
            }
        }
        stack.pop();
        color[n] = Color::Black;
        None
    }
    let mut color = vec![Color::White; edges.len()];
    let mut stack = Vec::new();
    (0..edges.len()).find_map(|n| {
        if color[n] == Color::White {
            visit(n, edges, &mut color, &mut stack)
        } else {
            None
        }
    })
}

/// The shipped version-granular, strict set.
pub fn shipped_fine() -> SignatureSet {
    compile_signatures(SHIPPED_FINE).expect("shipped fine signature set is valid")
}

/// The shipped format-level, tolerant set.
pub fn shipped_broad() -> SignatureSet {
    compile_signatures(SHIPPED_BROAD).expect("shipped broad signature set is valid")
}

pub fn shipped_fine_source() -> &'static [u8] {
    SHIPPED_FINE
}

pub fn shipped_broad_source() -> &'static [u8] {
    SHIPPED_BROAD
}

// ---------------------------------------------------------------------------
// matching

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Backward,
}

struct Matcher<'a> {
    data: &'a [u8],
    elements: &'a [Element],
    versions: &'a [(Pattern, String)],
    dir: Direction,
    failed: Option<HashSet<(usize, usize)>>,
}

/// (literal bytes, chosen version alternative)
type Found = (usize, Option<usize>);

impl<'a> Matcher<'a> {
    fn new(
        data: &'a [u8],
        seq: &'a Sequence,
        versions: &'a [(Pattern, String)],
        dir: Direction,
    ) -> Self {
        Matcher {
            data,
            elements: &seq.elements,
            versions,
            dir,
            failed: seq.has_gap().then(HashSet::new),
        }
    }

    /// Element `step` counts from the front (forward) or from the back
    /// (backward); `pos` is the cursor position.
    fn run(&mut self, step: usize, pos: usize) -> Option<Found> {
        if step == self.elements.len() {
            return Some((0, None));
        }
        if let Some(failed) = &self.failed {
            if failed.contains(&(step, pos)) {
                return None;
            }
        }
        let found = self.try_element(step, pos);
        if found.is_none() {
            if let Some(failed) = &mut self.failed {
                failed.insert((step, pos));
            }
        }
        found
    }

    fn advance(&self, pos: usize, n: usize) -> Option<usize> {
        match self.dir {
            Direction::Forward => pos.checked_add(n).filter(|&p| p <= self.data.len()),
            Direction::Backward => pos.checked_sub(n),
        }
    }

    fn pattern_at(&self, p: &Pattern, pos: usize) -> Option<usize> {
        let next = self.advance(pos, p.bytes.len())?;
        let start = match self.dir {
            Direction::Forward => pos,
            Direction::Backward => next,
        };
        p.matches_at(self.data, start).then_some(next)
    }

    fn try_element(&mut self, step: usize, pos: usize) -> Option<Found> {
        let idx = match self.dir {
            Direction::Forward => step,
            Direction::Backward => self.elements.len() - 1 - step,
        };
        match &self.elements[idx] {
            Element::Literal(p) => {
                let next = self.pattern_at(p, pos)?;
                self.run(step + 1, next)
                    .map(|(n, v)| (n + p.bytes.len(), v))
            }
            Element::AnyByte => {
                let next = self.advance(pos, 1)?;
                self.run(step + 1, next)
            }
            Element::Gap { min, max } => (*min..=*max).find_map(|k| {
                let next = self.advance(pos, k)?;
                self.run(step + 1, next)
            }),
            Element::Version => (0..self.versions.len()).find_map(|vi| {
                let p = &self.versions[vi].0;
                let next = self.pattern_at(p, pos)?;
                self.run(step + 1, next)
                    .map(|(n, _)| (n + p.bytes.len(), Some(vi)))
            }),
        }
    }
}

fn match_sequence(payload: &[u8], seq: &Sequence, versions: &[(Pattern, String)]) -> Option<Found> {
    let head = &payload[..payload.len().min(SCAN_LIMIT)];
    match seq.anchor {
        Anchor::Bof(offset) => {
            if offset > head.len() {
                return None;
            }
            Matcher::new(head, seq, versions, Direction::Forward).run(0, offset)
        }
        Anchor::Eof(offset) => {
            let tail = &payload[payload.len().saturating_sub(SCAN_LIMIT)..];
            let end = tail.len().checked_sub(offset)?;
            Matcher::new(tail, seq, versions, Direction::Backward).run(0, end)
        }
        Anchor::Window { start, end } => {
            let first = match seq.elements.first() {
                Some(Element::Literal(p)) => Some(p),
                _ => None,
            };
            let mut matcher = Matcher::new(head, seq, versions, Direction::Forward);
            (start..end.min(head.len())).find_map(|s| {
                if first.is_some_and(|p| !p.matches_at(head, s)) {
                    return None;
                }
                matcher.run(0, s)
            })
        }
    }
}

impl SignatureSet {
    pub fn signatures(&self) -> &[ByteSignature] {
        &self.signatures
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ByteSignature> {
        self.signatures.iter().find(|s| s.id == id)
    }

    /// Ids of signatures whose guaranteed literal content is below
    /// [`WEAK_LITERAL_THRESHOLD`] bytes, i.e. prone to false positives.
    pub fn weak_signatures(&self) -> Vec<&str> {
        self.signatures
            .iter()
            .filter(|s| s.min_literal_bytes() < WEAK_LITERAL_THRESHOLD)
            .map(|s| s.id.as_str())
            .collect()
    }

    /// Tests a single signature against a payload.
    pub fn match_signature(&self, index: usize, payload: &[u8]) -> Option<SignatureMatch> {
        let sig = &self.signatures[index];
        let mut literal_len = sig.fixed_literal_bytes();
        let mut version = None;
        for seq in sig.sequences() {
            let (_, v) = match_sequence(payload, seq, &sig.versions)?;
            if let Some(vi) = v {
                literal_len += sig.versions[vi].0.bytes.len();
                version = Some(sig.versions[vi].1.clone());
            }
        }
        Some(SignatureMatch {
            index,
            literal_len,
            version,
        })
    }

    fn candidates(&self, payload: &[u8]) -> Vec<usize> {
        let Some(&first) = payload.first() else {
            return Vec::new();
        };
        let mut candidates: Vec<usize> = self.bof_dispatch[first as usize]
            .iter()
            .chain(&self.general)
            .copied()
            .collect();
        candidates.sort_unstable();
        candidates
    }

    /// Every signature that fires on the payload, in signature order.
    pub fn matches(&self, payload: &[u8]) -> Vec<SignatureMatch> {
        self.candidates(payload)
            .into_iter()
            .filter_map(|i| self.match_signature(i, payload))
            .collect()
    }

    /// Whether some signature's main sequence matches even though the whole
    /// signature does not (e.g. a PDF header without its trailer).
    fn partially_matches(&self, payload: &[u8]) -> bool {
        self.candidates(payload).into_iter().any(|i| {
            let sig = &self.signatures[i];
            match_sequence(payload, &sig.sequence, &sig.versions).is_some()
        })
    }

    /// Picks a single outcome from a set of matches: drop every match some
    /// other match has priority over, then prefer the most literal bytes, then
    /// the smallest id.
    pub fn resolve_matches(&self, matches: &[SignatureMatch]) -> IdentificationOutcome {
        let present: HashSet<usize> = matches.iter().map(|m| m.index).collect();
        let dominated: HashSet<usize> = matches
            .iter()
            .flat_map(|m| self.dominates[m.index].iter().copied())
            .filter(|i| present.contains(i))
            .collect();
        let best = matches
            .iter()
            .filter(|m| !dominated.contains(&m.index))
            .max_by(|a, b| {
                a.literal_len.cmp(&b.literal_len).then_with(|| {
                    self.signatures[b.index]
                        .id
                        .cmp(&self.signatures[a.index].id)
                })
            });
        match best {
            None => IdentificationOutcome::Unidentified,
            Some(m) => {
                let mut mime = self.signatures[m.index].output.clone();
                if let Some(v) = &m.version {
                    mime.set_param(ParamKey::Version, v);
                }
                IdentificationOutcome::Identified(mime)
            }
        }
    }

    fn apply_heuristics(&self, payload: &[u8]) -> IdentificationOutcome {
        let head = &payload[..payload.len().min(HEURISTIC_WINDOW)];
        let h = self.heuristics;
        if h.tolerant_pdf_eof {
            if let Some(mime) = tolerant_pdf(head) {
                return mime.into();
            }
        }
        if h.tolerant_html && HTML_TOKENS.iter().any(|t| find_nocase(head, t).is_some()) {
            return fixed_mime("text", "html").into();
        }
        // text is a last resort, never a verdict on a recognisably broken
        // binary format
        if h.text_fallback && looks_like_text(head) && !self.partially_matches(payload) {
            return fixed_mime("text", "plain").into();
        }
        IdentificationOutcome::Unidentified
    }
}

fn fixed_mime(t: &str, s: &str) -> ExtendedMimeType {
    ExtendedMimeType::new(t, s).expect("static MIME type")
}

fn find_nocase(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len())
        .position(|w| w.eq_ignore_ascii_case(needle))
}

fn tolerant_pdf(head: &[u8]) -> Option<ExtendedMimeType> {
    let at = head.windows(5).position(|w| w == b"%PDF-")?;
    let mut mime = fixed_mime("application", "pdf");
    let rest = &head[at + 5..];
    let digits = |s: &[u8]| s.iter().take_while(|b| b.is_ascii_digit()).count();
    let major = digits(rest);
    if major > 0 && rest.get(major) == Some(&b'.') {
        let minor = digits(&rest[major + 1..]);
        if minor > 0 {
            let v = std::str::from_utf8(&rest[..major + 1 + minor]).expect("ascii digits");
            mime.set_param(ParamKey::Version, v);
        }
    }
    Some(mime)
}

/// Nonempty, valid UTF-8 (allowing a character cut at the window edge), and
/// free of control characters other than whitespace.
fn looks_like_text(head: &[u8]) -> bool {
    if head.is_empty() {
        return false;
    }
    let valid = match std::str::from_utf8(head) {
        Ok(s) => s,
        Err(e) if e.error_len().is_none() => {
            std::str::from_utf8(&head[..e.valid_up_to()]).expect("valid prefix")
        }
        Err(_) => return false,
    };
    valid
        .chars()
        .all(|c| !c.is_control() || matches!(c, '\t' | '\n' | '\r' | '\u{c}'))
}

/// Identifies a payload: signatures first, then the set's heuristics.
pub fn identify(payload: &[u8], set: &SignatureSet) -> IdentificationOutcome {
    match set.resolve_matches(&set.matches(payload)) {
        IdentificationOutcome::Unidentified => set.apply_heuristics(payload),
        found => found,
    }
}

/// Free-function form of [`SignatureSet::resolve_matches`].
pub fn resolve_matches(set: &SignatureSet, matches: &[SignatureMatch]) -> IdentificationOutcome {
    set.resolve_matches(matches)
}
