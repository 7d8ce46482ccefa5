//! Extended MIME types.
//!
//! An extended MIME type is a plain `type/subtype` pair that may carry up to
//! three extra parameters describing what was learned about a resource:
//! `version`, `software` and `hardware`. They are the common currency for
//! every identification source: the server header, the broad engine and the
//! fine engine all end up as one of these (or as [`IdentificationOutcome::Unidentified`]).
//!
//! Canonical text form:
//!
//! ```text
//! application/pdf; version=1.4; software="Acrobat Distiller 4.0"
//! ```
//!
//! Parameters always appear in the order version, software, hardware, with
//! exactly one space after each `;`. Values containing whitespace, `;`, `"`
//! or `\` are double-quoted with backslash escapes.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Token for a failed identification. It has no slash so it cannot collide
/// with a real type.
pub const UNIDENTIFIED: &str = "unidentified";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MimeError {
    #[error("malformed MIME type {0:?}")]
    MalformedMime(String),
}

/// The closed set of parameter keys carried by an extended MIME type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamKey {
    Version,
    Software,
    Hardware,
}

impl ParamKey {
    pub const ALL: [ParamKey; 3] = [ParamKey::Version, ParamKey::Software, ParamKey::Hardware];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamKey::Version => "version",
            ParamKey::Software => "software",
            ParamKey::Hardware => "hardware",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        ParamKey::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExtendedMimeType {
    type_: String,
    subtype: String,
    // Indexed by ParamKey discriminant; the fixed layout gives unique keys and
    // canonical ordering for free.
    params: [Option<String>; 3],
}

/// RFC 2045 token character.
pub fn is_token_char(c: char) -> bool {
    c.is_ascii() && !c.is_ascii_control() && !" ()<>@,;:\\\"/[]?=".contains(c)
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_token_char)
}

/// Removes control characters and surrounding whitespace. `None` when
/// nothing printable remains.
pub fn sanitize_value(raw: &str) -> Option<String> {
    let cleaned: String = raw.chars().filter(|c| !c.is_control()).collect();
    let trimmed = cleaned.trim();
    if trimmed.is_empty() {
        None
    } else {
        Some(trimmed.to_string())
    }
}

impl ExtendedMimeType {
    /// Builds a parameterless type. Both halves are lowercased and must be
    /// RFC 2045 tokens.
    pub fn new(type_: &str, subtype: &str) -> Result<Self, MimeError> {
        let t = type_.trim().to_ascii_lowercase();
        let s = subtype.trim().to_ascii_lowercase();
        if !is_token(&t) || !is_token(&s) {
            return Err(MimeError::MalformedMime(format!("{type_}/{subtype}")));
        }
        Ok(ExtendedMimeType {
            type_: t,
            subtype: s,
            params: [None, None, None],
        })
    }

    pub fn type_(&self) -> &str {
        &self.type_
    }

    pub fn subtype(&self) -> &str {
        &self.subtype
    }

    /// `type/subtype` without parameters.
    pub fn base(&self) -> String {
        format!("{}/{}", self.type_, self.subtype)
    }

    pub fn is_base(&self, base: &str) -> bool {
        base.split_once('/')
            .is_some_and(|(t, s)| t == self.type_ && s == self.subtype)
    }

    pub fn param(&self, key: ParamKey) -> Option<&str> {
        self.params[key as usize].as_deref()
    }

    pub fn version(&self) -> Option<&str> {
        self.param(ParamKey::Version)
    }

    pub fn software(&self) -> Option<&str> {
        self.param(ParamKey::Software)
    }

    pub fn hardware(&self) -> Option<&str> {
        self.param(ParamKey::Hardware)
    }

    /// Sets (or clears, for values that sanitize to nothing) a parameter.
    pub fn set_param(&mut self, key: ParamKey, value: &str) {
        self.params[key as usize] = sanitize_value(value);
    }

    pub fn clear_param(&mut self, key: ParamKey) {
        self.params[key as usize] = None;
    }

    pub fn with_param(mut self, key: ParamKey, value: &str) -> Self {
        self.set_param(key, value);
        self
    }

    /// Present parameters in canonical order.
    pub fn params(&self) -> impl Iterator<Item = (ParamKey, &str)> {
        ParamKey::ALL
            .into_iter()
            .filter_map(move |k| self.param(k).map(|v| (k, v)))
    }

    pub fn has_params(&self) -> bool {
        self.params.iter().any(Option::is_some)
    }

    /// Copy with every parameter removed.
    pub fn stripped(&self) -> Self {
        ExtendedMimeType {
            type_: self.type_.clone(),
            subtype: self.subtype.clone(),
            params: [None, None, None],
        }
    }
}

/// Parses `type/subtype[; key=value]*`. Unknown parameter keys are dropped,
/// as are parameters without `=` or with empty values.
pub fn parse_extended_mime(text: &str) -> Result<ExtendedMimeType, MimeError> {
    let malformed = || MimeError::MalformedMime(text.to_string());
    let (base, rest) = match text.find(';') {
        Some(i) => (&text[..i], &text[i + 1..]),
        None => (text, ""),
    };
    let (t, s) = base.trim().split_once('/').ok_or_else(malformed)?;
    let mut mime = ExtendedMimeType::new(t, s).map_err(|_| malformed())?;
    for (key, value) in split_params(rest) {
        if let Some(k) = ParamKey::from_name(key.trim()) {
            if mime.param(k).is_none() {
                mime.set_param(k, &value);
            }
        }
    }
    Ok(mime)
}

/// Splits a parameter list, honouring double quotes and backslash escapes
/// inside them.
fn split_params(rest: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut chars = rest.chars().peekable();
    loop {
        // key
        let mut key = String::new();
        while let Some(&c) = chars.peek() {
            if c == '=' || c == ';' {
                break;
            }
            key.push(c);
            chars.next();
        }
        match chars.next() {
            None => break,
            Some(';') => continue,
            Some(_) => {}
        }
        while chars.peek().is_some_and(|c| *c == ' ' || *c == '\t') {
            chars.next();
        }
        let mut value = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            while let Some(c) = chars.next() {
                match c {
                    '\\' => {
                        if let Some(e) = chars.next() {
                            value.push(e);
                        }
                    }
                    '"' => break,
                    _ => value.push(c),
                }
            }
            // anything between the closing quote and the next ';' is ignored
            for c in chars.by_ref() {
                if c == ';' {
                    break;
                }
            }
        } else {
            for c in chars.by_ref() {
                if c == ';' {
                    break;
                }
                value.push(c);
            }
        }
        out.push((key, value));
    }
    out
}

fn needs_quoting(value: &str) -> bool {
    value
        .chars()
        .any(|c| c.is_whitespace() || c == ';' || c == '"' || c == '\\')
}

/// Canonical text form.
pub fn serialize(mime: &ExtendedMimeType) -> String {
    mime.to_string()
}

impl fmt::Display for ExtendedMimeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.type_, self.subtype)?;
        for (key, value) in self.params() {
            if needs_quoting(value) {
                write!(f, "; {key}=\"")?;
                for c in value.chars() {
                    if c == '"' || c == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("\"")?;
            } else {
                write!(f, "; {key}={value}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for ExtendedMimeType {
    type Err = MimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_extended_mime(s)
    }
}

/// True when both types agree once parameters are ignored.
pub fn base_equal(a: &ExtendedMimeType, b: &ExtendedMimeType) -> bool {
    a.type_ == b.type_ && a.subtype == b.subtype
}

/// Result of one identification attempt.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IdentificationOutcome {
    Identified(ExtendedMimeType),
    Unidentified,
}

impl IdentificationOutcome {
    pub fn mime(&self) -> Option<&ExtendedMimeType> {
        match self {
            IdentificationOutcome::Identified(m) => Some(m),
            IdentificationOutcome::Unidentified => None,
        }
    }

    pub fn is_identified(&self) -> bool {
        matches!(self, IdentificationOutcome::Identified(_))
    }

    pub fn base(&self) -> Option<String> {
        self.mime().map(ExtendedMimeType::base)
    }
}

impl From<ExtendedMimeType> for IdentificationOutcome {
    fn from(m: ExtendedMimeType) -> Self {
        IdentificationOutcome::Identified(m)
    }
}

impl fmt::Display for IdentificationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentificationOutcome::Identified(m) => m.fmt(f),
            IdentificationOutcome::Unidentified => f.write_str(UNIDENTIFIED),
        }
    }
}

impl FromStr for IdentificationOutcome {
    type Err = MimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == UNIDENTIFIED {
            Ok(IdentificationOutcome::Unidentified)
        } else {
            parse_extended_mime(s).map(IdentificationOutcome::Identified)
        }
    }
}
