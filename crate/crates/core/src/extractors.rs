//! Creator metadata extraction.
//!
//! These functions pull version, software and hardware strings out of
//! payloads that were already identified, so they can be attached to the
//! identification as extended MIME parameters. All of them are total: bad or
//! hostile input yields absent values, never a panic.

use crate::mimetype::{sanitize_value, ExtendedMimeType, IdentificationOutcome, ParamKey};

/// Upper bound on extracted string length, in bytes.
pub const MAX_VALUE_BYTES: usize = 256;

/// `/Producer` and `/Creator` are searched for in this many trailing bytes.
const PDF_INFO_SCAN: usize = 256 * 1024;
const PDF_EOF_WINDOW: usize = 1024;
const PDF_MAX_STRING: usize = 64 * 1024;
const HTML_DOCTYPE_WINDOW: usize = 1024;
const MAX_IFD_ENTRIES: usize = 1024;

const TAG_MAKE: u16 = 0x010F;
const TAG_MODEL: u16 = 0x0110;
const TAG_SOFTWARE: u16 = 0x0131;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PayloadMetadata {
    pub version: Option<String>,
    pub software: Option<String>,
    pub hardware: Option<String>,
    /// `%%EOF` occurs within the final 1024 bytes.
    pub pdf_has_eof: bool,
}

impl PayloadMetadata {
    pub fn is_empty(&self) -> bool {
        self.version.is_none() && self.software.is_none() && self.hardware.is_none()
    }
}

/// Strips control characters, trims, and caps the length at
/// [`MAX_VALUE_BYTES`] on a character boundary.
fn clean(raw: &str) -> Option<String> {
    let mut s = sanitize_value(raw)?;
    if s.len() > MAX_VALUE_BYTES {
        let mut cut = MAX_VALUE_BYTES;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
        return sanitize_value(&s);
    }
    Some(s)
}

fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

fn rfind(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).rposition(|w| w == needle)
}

// ---------------------------------------------------------------------------
// PDF

pub fn extract_pdf_metadata(payload: &[u8]) -> PayloadMetadata {
    let tail_start = payload.len().saturating_sub(PDF_INFO_SCAN);
    let tail = &payload[tail_start..];
    let software =
        pdf_info_string(tail, b"/Producer").or_else(|| pdf_info_string(tail, b"/Creator"));
    PayloadMetadata {
        version: pdf_header_version(payload),
        software,
        hardware: None,
        pdf_has_eof: find(
            &payload[payload.len().saturating_sub(PDF_EOF_WINDOW)..],
            b"%%EOF",
        )
        .is_some(),
    }
}

fn pdf_header_version(payload: &[u8]) -> Option<String> {
    let head = &payload[..payload.len().min(1024)];
    let at = find(head, b"%PDF-")? + 5;
    let rest = &head[at..];
    let major = rest.iter().take_while(|b| b.is_ascii_digit()).count();
    if major == 0 || rest.get(major) != Some(&b'.') {
        return None;
    }
    let minor = rest[major + 1..]
        .iter()
        .take_while(|b| b.is_ascii_digit())
        .count();
    if minor == 0 {
        return None;
    }
    Some(String::from_utf8_lossy(&rest[..major + 1 + minor]).into_owned())
}

fn is_pdf_whitespace(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | b'\n' | b'\x0c' | b'\0')
}

/// Value of the last `key (string)` or `key <hex>` entry in `data`.
fn pdf_info_string(data: &[u8], key: &[u8]) -> Option<String> {
    let mut end = data.len();
    while let Some(at) = rfind(&data[..end], key) {
        end = at;
        let mut pos = at + key.len();
        while pos < data.len() && is_pdf_whitespace(data[pos]) {
            pos += 1;
        }
        let raw = match (data.get(pos), data.get(pos + 1)) {
            (Some(b'('), _) => pdf_literal_string(&data[pos + 1..]),
            (Some(b'<'), Some(b'<')) => None,
            (Some(b'<'), _) => pdf_hex_string(&data[pos + 1..]),
            _ => None,
        };
        if let Some(text) = raw.map(|b| pdf_text(&b)).and_then(|t| clean(&t)) {
            return Some(text);
        }
    }
    None
}

/// Decodes a literal string body (after the opening parenthesis).
fn pdf_literal_string(data: &[u8]) -> Option<Vec<u8>> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut i = 0;
    let limit = data.len().min(PDF_MAX_STRING);
    while i < limit {
        let b = data[i];
        i += 1;
        match b {
            b'\\' => {
                let Some(&e) = data.get(i) else { break };
                i += 1;
                match e {
                    b'n' => out.push(b'\n'),
                    b'r' => out.push(b'\r'),
                    b't' => out.push(b'\t'),
                    b'b' => out.push(0x08),
                    b'f' => out.push(0x0c),
                    b'0'..=b'7' => {
                        let mut v = u32::from(e - b'0');
                        for _ in 0..2 {
                            match data.get(i) {
                                Some(&d @ b'0'..=b'7') => {
                                    v = v * 8 + u32::from(d - b'0');
                                    i += 1;
                                }
                                _ => break,
                            }
                        }
                        out.push((v & 0xff) as u8);
                    }
                    b'\r' => {
                        if data.get(i) == Some(&b'\n') {
                            i += 1;
                        }
                    }
                    b'\n' => {}
                    other => out.push(other),
                }
            }
            b'(' => {
                depth += 1;
                out.push(b);
            }
            b')' => {
                if depth == 0 {
                    return Some(out);
                }
                depth -= 1;
                out.push(b);
            }
            _ => out.push(b),
        }
    }
    // unterminated
    None
}

fn pdf_hex_string(data: &[u8]) -> Option<Vec<u8>> {
    let end = data.iter().take(PDF_MAX_STRING).position(|&b| b == b'>')?;
    let mut digits: Vec<u8> = data[..end]
        .iter()
        .copied()
        .filter(|b| !is_pdf_whitespace(*b))
        .collect();
    if !digits.iter().all(u8::is_ascii_hexdigit) {
        return None;
    }
    if digits.len() % 2 == 1 {
        digits.push(b'0');
    }
    hex::decode(digits).ok()
}

/// PDF text string bytes to Rust text: UTF-16BE with BOM, UTF-8 with BOM,
/// otherwise one character per byte.
fn pdf_text(bytes: &[u8]) -> String {
    if let Some(rest) = bytes.strip_prefix(&[0xFE, 0xFF]) {
        let units: Vec<u16> = rest
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        String::from_utf16_lossy(&units)
    } else if let Some(rest) = bytes.strip_prefix(&[0xEF, 0xBB, 0xBF]) {
        String::from_utf8_lossy(rest).into_owned()
    } else {
        bytes.iter().map(|&b| char::from(b)).collect()
    }
}

// ---------------------------------------------------------------------------
// HTML

const DOCTYPE_VERSIONS: [(&str, &str); 6] = [
    ("XHTML 1.1", "xhtml-1.1"),
    ("XHTML 1.0", "xhtml-1.0"),
    ("HTML 4.01", "4.01"),
    ("HTML 4.0", "4.0"),
    ("HTML 3.2", "3.2"),
    ("-//IETF//DTD HTML 2.0", "2.0"),
];

pub fn extract_html_version(payload: &[u8]) -> PayloadMetadata {
    let head = &payload[..payload.len().min(HTML_DOCTYPE_WINDOW)];
    let version = head
        .windows(9)
        .position(|w| w.eq_ignore_ascii_case(b"<!doctype"))
        .and_then(|at| {
            let decl = &head[at..];
            let end = decl.iter().position(|&b| b == b'>').unwrap_or(decl.len());
            let text = String::from_utf8_lossy(&decl[..end]).to_ascii_uppercase();
            DOCTYPE_VERSIONS
                .iter()
                .find(|(needle, _)| text.contains(needle))
                .map(|(_, v)| v.to_string())
        });
    PayloadMetadata {
        version,
        ..Default::default()
    }
}

// ---------------------------------------------------------------------------
// EXIF

#[derive(Clone, Copy)]
enum ByteOrder {
    Little,
    Big,
}

impl ByteOrder {
    fn u16(self, data: &[u8], at: usize) -> Option<u16> {
        let b: [u8; 2] = data.get(at..at.checked_add(2)?)?.try_into().ok()?;
        Some(match self {
            ByteOrder::Little => u16::from_le_bytes(b),
            ByteOrder::Big => u16::from_be_bytes(b),
        })
    }

    fn u32(self, data: &[u8], at: usize) -> Option<u32> {
        let b: [u8; 4] = data.get(at..at.checked_add(4)?)?.try_into().ok()?;
        Some(match self {
            ByteOrder::Little => u32::from_le_bytes(b),
            ByteOrder::Big => u32::from_be_bytes(b),
        })
    }
}

/// TIFF structure inside a JPEG APP1 `Exif\0\0` segment.
fn jpeg_exif_block(data: &[u8]) -> Option<&[u8]> {
    if !data.starts_with(&[0xFF, 0xD8]) {
        return None;
    }
    let mut pos = 2;
    loop {
        if *data.get(pos)? != 0xFF {
            return None;
        }
        while *data.get(pos)? == 0xFF {
            pos += 1;
        }
        let marker = *data.get(pos)?;
        pos += 1;
        match marker {
            0xD9 | 0xDA => return None,
            0x01 | 0xD0..=0xD7 => continue,
            _ => {}
        }
        let len = usize::from(u16::from_be_bytes([*data.get(pos)?, *data.get(pos + 1)?]));
        if len < 2 {
            return None;
        }
        let segment = data.get(pos + 2..pos + len)?;
        if marker == 0xE1 {
            if let Some(tiff) = segment.strip_prefix(b"Exif\0\0") {
                return Some(tiff);
            }
        }
        pos += len;
    }
}

#[derive(Default)]
struct Ifd0Strings {
    make: Option<String>,
    model: Option<String>,
    software: Option<String>,
}

fn tiff_ifd0_strings(tiff: &[u8]) -> Option<Ifd0Strings> {
    let order = match tiff.get(..2)? {
        b"II" => ByteOrder::Little,
        b"MM" => ByteOrder::Big,
        _ => return None,
    };
    if order.u16(tiff, 2)? != 42 {
        return None;
    }
    let ifd = order.u32(tiff, 4)? as usize;
    let count = usize::from(order.u16(tiff, ifd)?);
    if count > MAX_IFD_ENTRIES {
        return None;
    }
    let mut out = Ifd0Strings::default();
    for i in 0..count {
        let entry = ifd + 2 + i * 12;
        let tag = order.u16(tiff, entry)?;
        let slot = match tag {
            TAG_MAKE => &mut out.make,
            TAG_MODEL => &mut out.model,
            TAG_SOFTWARE => &mut out.software,
            _ => continue,
        };
        // type 2 is ASCII
        if order.u16(tiff, entry + 2)? != 2 {
            continue;
        }
        let n = order.u32(tiff, entry + 4)? as usize;
        let raw = if n <= 4 {
            tiff.get(entry + 8..entry + 8 + n)
        } else {
            let off = order.u32(tiff, entry + 8)? as usize;
            tiff.get(off..off.checked_add(n)?)
        };
        let Some(raw) = raw else { continue };
        let raw = &raw[..raw.iter().position(|&b| b == 0).unwrap_or(raw.len())];
        let raw = &raw[..raw.len().min(MAX_VALUE_BYTES * 4)];
        *slot = clean(&String::from_utf8_lossy(raw));
    }
    Some(out)
}

/// Software and hardware from the EXIF IFD0 of a JPEG or TIFF payload.
pub fn extract_exif_software(payload: &[u8]) -> PayloadMetadata {
    let tiff = if payload.starts_with(b"II") || payload.starts_with(b"MM") {
        Some(payload)
    } else {
        jpeg_exif_block(payload)
    };
    let Some(fields) = tiff.and_then(tiff_ifd0_strings) else {
        return PayloadMetadata::default();
    };
    let hardware = match (fields.make, fields.model) {
        (Some(make), Some(model)) => clean(&format!("{make} {model}")),
        (make, model) => make.or(model),
    };
    PayloadMetadata {
        software: fields.software,
        hardware,
        ..Default::default()
    }
}

// ---------------------------------------------------------------------------

/// Fills in parameters the outcome lacks. Parameters already present, such as
/// a signature-derived version, are kept.
pub fn apply_metadata(
    outcome: IdentificationOutcome,
    meta: &PayloadMetadata,
) -> IdentificationOutcome {
    match outcome {
        IdentificationOutcome::Unidentified => IdentificationOutcome::Unidentified,
        IdentificationOutcome::Identified(mut mime) => {
            for (key, value) in [
                (ParamKey::Version, &meta.version),
                (ParamKey::Software, &meta.software),
                (ParamKey::Hardware, &meta.hardware),
            ] {
                if let (None, Some(v)) = (mime.param(key), value) {
                    mime.set_param(key, v);
                }
            }
            IdentificationOutcome::Identified(mime)
        }
    }
}

/// Runs whichever extractor suits the identified base type, if any.
pub fn metadata_for(mime: &ExtendedMimeType, payload: &[u8]) -> Option<PayloadMetadata> {
    match (mime.type_(), mime.subtype()) {
        ("application", "pdf") => Some(extract_pdf_metadata(payload)),
        ("text", "html") => Some(extract_html_version(payload)),
        ("image", "jpeg") | ("image", "tiff") => Some(extract_exif_software(payload)),
        _ => None,
    }
}

/// Identification outcome plus extracted metadata.
pub fn enrich(outcome: IdentificationOutcome, payload: &[u8]) -> IdentificationOutcome {
    let meta = outcome.mime().and_then(|m| metadata_for(m, payload));
    match meta {
        Some(meta) => apply_metadata(outcome, &meta),
        None => outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimetype::parse_extended_mime;

    fn outcome(s: &str) -> IdentificationOutcome {
        s.parse().unwrap()
    }

    #[test]
    fn pdf_producer_preferred() {
        let pdf = b"%PDF-1.3\n1 0 obj\n<< /Creator (Word) /Producer (Acrobat Distiller 4.0) >>\nendobj\n%%EOF\n";
        let m = extract_pdf_metadata(pdf);
        assert_eq!(m.version.as_deref(), Some("1.3"));
        assert_eq!(m.software.as_deref(), Some("Acrobat Distiller 4.0"));
        assert!(m.pdf_has_eof);
    }

    #[test]
    fn pdf_creator_fallback_and_absence() {
        let pdf = b"%PDF-1.2\n<< /Creator (Writer) >>\n%%EO";
        let m = extract_pdf_metadata(pdf);
        assert_eq!(m.software.as_deref(), Some("Writer"));
        assert!(!m.pdf_has_eof);
        let bare = extract_pdf_metadata(b"%PDF-1.7\n%%EOF");
        assert_eq!(bare.version.as_deref(), Some("1.7"));
        assert_eq!(bare.software, None);
    }

    #[test]
    fn pdf_string_escapes_and_encodings() {
        let pdf = b"%PDF-1.4\n<< /Producer (A\\(b\\) \\101\\102 (nested) x\\\ny) >>";
        assert_eq!(
            extract_pdf_metadata(pdf).software.as_deref(),
            Some("A(b) AB (nested) xy")
        );
        let hex = b"%PDF-1.4\n<< /Producer <FEFF00470068006F0073007400730063007200690070007400> >>";
        assert_eq!(
            extract_pdf_metadata(hex).software.as_deref(),
            Some("Ghostscript")
        );
        let mut utf16 = b"%PDF-1.4\n<< /Producer (\xFE\xFF".to_vec();
        for c in "PDF Library".encode_utf16() {
            utf16.extend(c.to_be_bytes());
        }
        utf16.extend(b") >>");
        assert_eq!(
            extract_pdf_metadata(&utf16).software.as_deref(),
            Some("PDF Library")
        );
    }

    #[test]
    fn pdf_last_info_wins_and_dictionary_values_skipped() {
        let pdf = b"%PDF-1.4\n<< /Producer (old) >>\n<< /Producer <<>> /Creator (c) >>\n<< /Producer (new) >>";
        assert_eq!(extract_pdf_metadata(pdf).software.as_deref(), Some("new"));
        let unterminated = b"%PDF-1.4\n<< /Producer (never closed";
        assert_eq!(extract_pdf_metadata(unterminated).software, None);
    }

    #[test]
    fn html_versions() {
        let v = |s: &[u8]| extract_html_version(s).version;
        assert_eq!(
            v(b"<!DOCTYPE HTML PUBLIC \"-//W3C//DTD HTML 3.2 Final//EN\">").as_deref(),
            Some("3.2")
        );
        assert_eq!(
            v(b"<!DOCTYPE html PUBLIC \"-//W3C//DTD XHTML 1.1//EN\" \"http://www.w3.org/TR/xhtml11/DTD/xhtml11.dtd\">").as_deref(),
            Some("xhtml-1.1")
        );
        assert_eq!(
            v(b"<!doctype html public \"-//w3c//dtd html 4.01 transitional//en\">").as_deref(),
            Some("4.01")
        );
        assert_eq!(
            v(b"<!DOCTYPE HTML PUBLIC \"-//W3C//DTD HTML 4.0//EN\">").as_deref(),
            Some("4.0")
        );
        assert_eq!(
            v(b"<!DOCTYPE HTML PUBLIC \"-//IETF//DTD HTML 2.0//EN\">").as_deref(),
            Some("2.0")
        );
        assert_eq!(v(b"<html><body>no doctype</body></html>"), None);
        assert_eq!(v(b"<!DOCTYPE html>"), None);
    }

    fn tiff_with(order: &str, entries: &[(u16, &str)]) -> Vec<u8> {
        let le = order == "II";
        let u16b = |v: u16| if le { v.to_le_bytes() } else { v.to_be_bytes() };
        let u32b = |v: u32| if le { v.to_le_bytes() } else { v.to_be_bytes() };
        let mut out = order.as_bytes().to_vec();
        out.extend(u16b(42));
        out.extend(u32b(8));
        out.extend(u16b(entries.len() as u16));
        let data_start = 8 + 2 + entries.len() * 12 + 4;
        let mut data = Vec::new();
        for (tag, s) in entries {
            let mut bytes = s.as_bytes().to_vec();
            bytes.push(0);
            out.extend(u16b(*tag));
            out.extend(u16b(2));
            out.extend(u32b(bytes.len() as u32));
            if bytes.len() <= 4 {
                bytes.resize(4, 0);
                out.extend(&bytes);
            } else {
                out.extend(u32b((data_start + data.len()) as u32));
                data.extend(bytes);
            }
        }
        out.extend(u32b(0));
        out.extend(data);
        out
    }

    fn jpeg_with_exif(tiff: &[u8]) -> Vec<u8> {
        let mut out = vec![0xFF, 0xD8, 0xFF, 0xE1];
        out.extend(((tiff.len() + 8) as u16).to_be_bytes());
        out.extend(b"Exif\0\0");
        out.extend(tiff);
        out.extend([0xFF, 0xDA, 0x00, 0x02, 0xFF, 0xD9]);
        out
    }

    #[test]
    fn exif_from_jpeg_both_orders() {
        for order in ["II", "MM"] {
            let tiff = tiff_with(
                order,
                &[
                    (TAG_MAKE, "Canon"),
                    (TAG_MODEL, "EOS 300D"),
                    (TAG_SOFTWARE, "GIMP 2.8"),
                ],
            );
            let m = extract_exif_software(&jpeg_with_exif(&tiff));
            assert_eq!(m.software.as_deref(), Some("GIMP 2.8"), "{order}");
            assert_eq!(m.hardware.as_deref(), Some("Canon EOS 300D"), "{order}");
            let t = extract_exif_software(&tiff);
            assert_eq!(t.software.as_deref(), Some("GIMP 2.8"));
        }
    }

    #[test]
    fn exif_absent_or_malformed() {
        assert!(
            extract_exif_software(&[0xFF, 0xD8, 0xFF, 0xE0, 0, 4, 1, 2, 0xFF, 0xD9]).is_empty()
        );
        let mut tiff = tiff_with("II", &[(TAG_SOFTWARE, "long software name")]);
        // point the string past the end
        tiff[18] = 0xF0;
        assert!(extract_exif_software(&tiff).software.is_none());
        assert!(extract_exif_software(b"II*\0\xff\xff\xff\xff").is_empty());
    }

    #[test]
    fn exif_values_are_capped() {
        let long = "x".repeat(1000);
        let tiff = tiff_with("II", &[(TAG_SOFTWARE, &long)]);
        assert_eq!(
            extract_exif_software(&tiff).software.unwrap().len(),
            MAX_VALUE_BYTES
        );
    }

    #[test]
    fn merge_rules() {
        let meta = PayloadMetadata {
            software: Some("X".into()),
            ..Default::default()
        };
        assert_eq!(
            apply_metadata(outcome("application/pdf; version=1.4"), &meta).to_string(),
            "application/pdf; version=1.4; software=X"
        );
        assert_eq!(
            apply_metadata(IdentificationOutcome::Unidentified, &meta),
            IdentificationOutcome::Unidentified
        );
        let older = PayloadMetadata {
            version: Some("1.3".into()),
            ..Default::default()
        };
        assert_eq!(
            apply_metadata(outcome("application/pdf; version=1.4"), &older).to_string(),
            "application/pdf; version=1.4"
        );
    }

    #[test]
    fn enrich_keeps_base_type() {
        let pdf = b"%PDF-1.4\n<< /Producer (P) >>\n%%EOF";
        let x = enrich(outcome("application/pdf"), pdf);
        assert_eq!(x.to_string(), "application/pdf; version=1.4; software=P");
        let png = enrich(outcome("image/png"), pdf);
        assert_eq!(png.to_string(), "image/png");
        assert!(crate::mimetype::base_equal(
            x.mime().unwrap(),
            &parse_extended_mime("application/pdf").unwrap()
        ));
    }

    proptest::proptest! {
        #[test]
        fn extractors_are_total(data in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..2048)) {
            for m in [extract_pdf_metadata(&data), extract_html_version(&data), extract_exif_software(&data)] {
                for v in [m.version, m.software, m.hardware].into_iter().flatten() {
                    proptest::prop_assert!(!v.is_empty());
                    proptest::prop_assert!(!v.chars().any(char::is_control));
                }
            }
        }

        #[test]
        fn exif_prefixed_fuzz(tail in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..512)) {
            let mut tiff = b"MM\0*\0\0\0\x08".to_vec();
            tiff.extend(&tail);
            let _ = extract_exif_software(&tiff);
            let _ = extract_exif_software(&jpeg_with_exif(&tiff));
        }
    }
}
