//! Event data model for one translation session, plus the TSV session and
//! annotation formats.
//!
//! A session file looks like this:
//!
//! ```text
//! #study=BML12
//! #session=P03_T5
//! #translator=P03
//! #source_lang=en
//! #target_lang=es
//! time	kind	text	pos	dur
//! 0	ins	u	0
//! 150	ins	n	1
//! 170	fixS		12	230
//! ```
//!
//! Header lines are `#key=value`. Key rows (`ins`/`del`) leave `dur` empty;
//! fixation rows (`fixS`/`fixT`) leave `text` empty and carry the fixated token
//! index in `pos`. Blank spaces are stored as `_` in the text column.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Milliseconds from session start.
pub type Millis = u64;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate keystroke timestamp {time}")]
    DuplicateTimestamp { line: usize, time: Millis },
    #[error("missing mandatory header `{0}`")]
    MissingHeader(String),
    #[error("line {line}: negative {field}")]
    Negative { line: usize, field: &'static str },
    #[error("line {line}: fixation duration must be positive")]
    BadDuration { line: usize },
    #[error("session has {0} keystroke(s); at least 2 are needed for an inter-keystroke interval")]
    TooFewKeystrokes(usize),
    #[error("line {line}: overlapping annotations")]
    OverlappingAnnotations { line: usize },
    #[error("line {line}: annotation end must be greater than start")]
    EmptyInterval { line: usize },
    #[error("line {line}: unknown state symbol `{symbol}`")]
    UnknownState { line: usize, symbol: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyKind {
    Insertion,
    Deletion,
}

impl KeyKind {
    pub fn code(self) -> &'static str {
        match self {
            KeyKind::Insertion => "ins",
            KeyKind::Deletion => "del",
        }
    }
}

/// One keystroke. A single keystroke may insert or remove several characters
/// (selection deletes, paste).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyEvent {
    pub time: Millis,
    pub kind: KeyKind,
    pub text: String,
    /// Character offset in the emerging target text.
    pub cursor: u64,
}

impl KeyEvent {
    pub fn insertion(time: Millis, text: impl Into<String>, cursor: u64) -> Self {
        KeyEvent { time, kind: KeyKind::Insertion, text: text.into(), cursor }
    }

    pub fn deletion(time: Millis, text: impl Into<String>, cursor: u64) -> Self {
        KeyEvent { time, kind: KeyKind::Deletion, text: text.into(), cursor }
    }

    /// Number of characters produced or removed.
    pub fn char_count(&self) -> usize {
        self.text.chars().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Source,
    Target,
}

impl Window {
    pub fn code(self) -> &'static str {
        match self {
            Window::Source => "fixS",
            Window::Target => "fixT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixationEvent {
    /// Onset.
    pub time: Millis,
    pub duration: Millis,
    pub window: Window,
    pub token_index: u64,
}

impl FixationEvent {
    pub fn end(&self) -> Millis {
        self.time + self.duration
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub study_id: String,
    pub session_id: String,
    pub translator_id: String,
    pub source_lang: String,
    pub target_lang: String,
    /// Any other `#key=value` header, e.g. `mode=postedit`.
    pub extra: BTreeMap<String, String>,
}

impl SessionMeta {
    pub fn new(study: &str, session: &str, translator: &str) -> Self {
        SessionMeta {
            study_id: study.to_string(),
            session_id: session.to_string(),
            translator_id: translator.to_string(),
            ..Default::default()
        }
    }

    /// Production mode from the optional `mode` header; `translation` when absent.
    pub fn mode(&self) -> &str {
        self.extra.get("mode").map(String::as_str).unwrap_or("translation")
    }

    fn set(&mut self, key: &str, value: String) {
        match key {
            "study" => self.study_id = value,
            "session" => self.session_id = value,
            "translator" => self.translator_id = value,
            "source_lang" => self.source_lang = value,
            "target_lang" => self.target_lang = value,
            _ => {
                self.extra.insert(key.to_string(), value);
            }
        }
    }
}

const MANDATORY_HEADERS: [&str; 3] = ["study", "session", "translator"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLog {
    pub meta: SessionMeta,
    pub keys: Vec<KeyEvent>,
    pub fixations: Vec<FixationEvent>,
}

impl SessionLog {
    pub fn new(meta: SessionMeta, keys: Vec<KeyEvent>, fixations: Vec<FixationEvent>) -> Self {
        SessionLog { meta, keys, fixations }
    }

    pub fn key_times(&self) -> Vec<Millis> {
        self.keys.iter().map(|k| k.time).collect()
    }

    /// `[first event, last event]`, fixation ends included.
    pub fn span(&self) -> (Millis, Millis) {
        let mut lo = Millis::MAX;
        let mut hi = 0;
        if let (Some(first), Some(last)) = (self.keys.first(), self.keys.last()) {
            lo = lo.min(first.time);
            hi = hi.max(last.time);
        }
        for f in &self.fixations {
            lo = lo.min(f.time);
            hi = hi.max(f.end());
        }
        if lo == Millis::MAX {
            (0, 0)
        } else {
            (lo, hi)
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        write_session(self, &mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("session text is UTF-8")
    }

    /// SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_tsv().as_bytes()))
    }
}

/// Maps the columns and kind codes of an external keystroke table onto the
/// session model. The default matches the native format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub time: String,
    pub kind: String,
    pub text: String,
    pub pos: String,
    pub dur: String,
    pub insertion: Vec<String>,
    pub deletion: Vec<String>,
    pub fix_source: Vec<String>,
    pub fix_target: Vec<String>,
    /// Rows whose kind matches none of the codes above are skipped instead of
    /// rejected.
    pub skip_unknown_kinds: bool,
    /// Rewrite literal blanks in the text column to `_`.
    pub blank_to_underscore: bool,
    /// Metadata used when the file lacks the corresponding header.
    pub defaults: BTreeMap<String, String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            time: "time".into(),
            kind: "kind".into(),
            text: "text".into(),
            pos: "pos".into(),
            dur: "dur".into(),
            insertion: vec!["ins".into()],
            deletion: vec!["del".into()],
            fix_source: vec!["fixS".into()],
            fix_target: vec!["fixT".into()],
            skip_unknown_kinds: false,
            blank_to_underscore: false,
            defaults: BTreeMap::new(),
        }
    }
}

enum RowKind {
    Key(KeyKind),
    Fix(Window),
    Skip,
}

impl ColumnMap {
    fn row_kind(&self, code: &str) -> Option<RowKind> {
        let hit = |codes: &[String]| codes.iter().any(|c| c == code);
        if hit(&self.insertion) {
            Some(RowKind::Key(KeyKind::Insertion))
        } else if hit(&self.deletion) {
            Some(RowKind::Key(KeyKind::Deletion))
        } else if hit(&self.fix_source) {
            Some(RowKind::Fix(Window::Source))
        } else if hit(&self.fix_target) {
            Some(RowKind::Fix(Window::Target))
        } else if self.skip_unknown_kinds {
            Some(RowKind::Skip)
        } else {
            None
        }
    }
}

struct Columns {
    time: usize,
    kind: usize,
    text: usize,
    pos: usize,
    dur: Option<usize>,
}

fn malformed(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Malformed { line, message: message.into() }
}

fn parse_int(line: usize, field: &'static str, raw: &str) -> Result<Millis, ParseError> {
    let raw = raw.trim();
    let value: i64 = raw
        .parse()
        .map_err(|_| malformed(line, format!("{field} `{raw}` is not an integer")))?;
    if value < 0 {
        return Err(ParseError::Negative { line, field });
    }
    Ok(value as Millis)
}

/// Parses a native session file.
pub fn parse_session<R: BufRead>(reader: R) -> Result<SessionLog, ParseError> {
    parse_session_with(reader, &ColumnMap::default())
}

/// Parses a session file whose columns are described by `map`. Columns are
/// located by header name; unknown columns are ignored.
pub fn parse_session_with<R: BufRead>(reader: R, map: &ColumnMap) -> Result<SessionLog, ParseError> {
    let mut meta = SessionMeta::default();
    let mut seen_headers: Vec<String> = Vec::new();
    let mut columns: Option<Columns> = None;
    // (time, line, event) so that duplicates can name the offending line
    let mut keys: Vec<(Millis, usize, KeyEvent)> = Vec::new();
    let mut fixations: Vec<FixationEvent> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            if let Some((k, v)) = header.split_once('=') {
                let key = k.trim().to_string();
                meta.set(&key, v.trim().to_string());
                seen_headers.push(key);
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let Some(cols) = &columns else {
            let find = |name: &str| fields.iter().position(|f| f.trim() == name);
            let need = |name: &str| {
                find(name).ok_or_else(|| malformed(lineno, format!("column header lacks `{name}`")))
            };
            columns = Some(Columns {
                time: need(&map.time)?,
                kind: need(&map.kind)?,
                text: need(&map.text)?,
                pos: need(&map.pos)?,
                dur: find(&map.dur),
            });
            continue;
        };
        let field = |i: usize| fields.get(i).copied().unwrap_or("");
        let code = field(cols.kind).trim();
        let kind = map
            .row_kind(code)
            .ok_or_else(|| malformed(lineno, format!("unknown event kind `{code}`")))?;
        match kind {
            RowKind::Skip => {}
            RowKind::Key(kind) => {
                let time = parse_int(lineno, "time", field(cols.time))?;
                let mut text = field(cols.text).to_string();
                if map.blank_to_underscore {
                    text = text.replace(' ', "_");
                }
                if text.is_empty() {
                    return Err(malformed(lineno, "keystroke text is empty"));
                }
                let cursor = parse_int(lineno, "pos", field(cols.pos))?;
                keys.push((time, lineno, KeyEvent { time, kind, text, cursor }));
            }
            RowKind::Fix(window) => {
                let time = parse_int(lineno, "time", field(cols.time))?;
                let token_index = parse_int(lineno, "pos", field(cols.pos))?;
                let raw_dur = cols.dur.map(field).unwrap_or("");
                if raw_dur.trim().is_empty() {
                    return Err(malformed(lineno, "fixation row lacks a duration"));
                }
                let duration = parse_int(lineno, "duration", raw_dur)?;
                if duration == 0 {
                    return Err(ParseError::BadDuration { line: lineno });
                }
                fixations.push(FixationEvent { time, duration, window, token_index });
            }
        }
    }

    if columns.is_none() {
        return Err(malformed(0, "no column header line"));
    }
    for (key, value) in &map.defaults {
        if !seen_headers.iter().any(|h| h == key) {
            meta.set(key, value.clone());
            seen_headers.push(key.clone());
        }
    }
    for (required, value) in MANDATORY_HEADERS.iter().zip([&meta.study_id, &meta.session_id, &meta.translator_id]) {
        if value.is_empty() || !seen_headers.iter().any(|h| h == required) {
            return Err(ParseError::MissingHeader(required.to_string()));
        }
    }

    keys.sort_by_key(|(t, line, _)| (*t, *line));
    if let Some(w) = keys.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(ParseError::DuplicateTimestamp { line: w[1].1, time: w[1].0 });
    }
    if keys.len() < 2 {
        return Err(ParseError::TooFewKeystrokes(keys.len()));
    }
    fixations.sort_by_key(|f| f.time);

    Ok(SessionLog {
        meta,
        keys: keys.into_iter().map(|(_, _, k)| k).collect(),
        fixations,
    })
}

pub fn parse_session_str(text: &str) -> Result<SessionLog, ParseError> {
    parse_session(text.as_bytes())
}

/// Writes the canonical serialization: fixed header order, extra headers
/// sorted by key, rows merged by time with keystrokes first on ties.
pub fn write_session<W: Write>(session: &SessionLog, mut out: W) -> io::Result<()> {
    let m = &session.meta;
    writeln!(out, "#study={}", m.study_id)?;
    writeln!(out, "#session={}", m.session_id)?;
    writeln!(out, "#translator={}", m.translator_id)?;
    writeln!(out, "#source_lang={}", m.source_lang)?;
    writeln!(out, "#target_lang={}", m.target_lang)?;
    for (k, v) in &m.extra {
        writeln!(out, "#{k}={v}")?;
    }
    writeln!(out, "time\tkind\ttext\tpos\tdur")?;
    let (mut ki, mut fi) = (0, 0);
    let (keys, fixes) = (&session.keys, &session.fixations);
    while ki < keys.len() || fi < fixes.len() {
        let take_key = match (keys.get(ki), fixes.get(fi)) {
            (Some(k), Some(f)) => k.time <= f.time,
            (Some(_), None) => true,
            _ => false,
        };
        if take_key {
            let k = &keys[ki];
            writeln!(out, "{}\t{}\t{}\t{}\t", k.time, k.kind.code(), k.text, k.cursor)?;
            ki += 1;
        } else {
            let f = &fixes[fi];
            writeln!(out, "{}\t{}\t\t{}\t{}", f.time, f.window.code(), f.token_index, f.duration)?;
            fi += 1;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IssueCode {
    #[serde(rename = "NO_IKI")]
    NoIki,
    #[serde(rename = "DUPLICATE_TIME")]
    DuplicateTime,
    #[serde(rename = "UNSORTED_KEYS")]
    UnsortedKeys,
    #[serde(rename = "UNSORTED_FIXATIONS")]
    UnsortedFixations,
    #[serde(rename = "EMPTY_TEXT")]
    EmptyText,
    #[serde(rename = "BAD_TEXT")]
    BadText,
    #[serde(rename = "BAD_DURATION")]
    BadDuration,
    #[serde(rename = "MISSING_META")]
    MissingMeta,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::NoIki => "NO_IKI",
            IssueCode::DuplicateTime => "DUPLICATE_TIME",
            IssueCode::UnsortedKeys => "UNSORTED_KEYS",
            IssueCode::UnsortedFixations => "UNSORTED_FIXATIONS",
            IssueCode::EmptyText => "EMPTY_TEXT",
            IssueCode::BadText => "BAD_TEXT",
            IssueCode::BadDuration => "BAD_DURATION",
            IssueCode::MissingMeta => "MISSING_META",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    /// Index into `keys` or `fixations`, when the issue is about one event.
    pub index: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }

    fn push(&mut self, code: IssueCode, index: Option<usize>, message: String) {
        self.issues.push(Issue { code, index, message });
    }
}

/// Checks every session invariant. An empty report means the session is valid.
pub fn validate_session(s: &SessionLog) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (name, value) in [
        ("study", &s.meta.study_id),
        ("session", &s.meta.session_id),
        ("translator", &s.meta.translator_id),
    ] {
        if value.is_empty() {
            report.push(IssueCode::MissingMeta, None, format!("header `{name}` is empty"));
        }
    }
    if s.keys.len() < 2 {
        report.push(
            IssueCode::NoIki,
            None,
            format!("{} keystroke(s); no inter-keystroke interval exists", s.keys.len()),
        );
    }
    for (i, k) in s.keys.iter().enumerate() {
        if k.text.is_empty() {
            report.push(IssueCode::EmptyText, Some(i), format!("keystroke {i} has empty text"));
        } else if k.text.contains(['\t', '\n', '\r']) {
            report.push(IssueCode::BadText, Some(i), format!("keystroke {i} text contains a tab or newline"));
        }
    }
    for (i, w) in s.keys.windows(2).enumerate() {
        if w[1].time == w[0].time {
            report.push(
                IssueCode::DuplicateTime,
                Some(i + 1),
                format!("keystrokes {} and {} share time {}", i, i + 1, w[1].time),
            );
        } else if w[1].time < w[0].time {
            report.push(IssueCode::UnsortedKeys, Some(i + 1), format!("keystroke {} goes back in time", i + 1));
        }
    }
    for (i, f) in s.fixations.iter().enumerate() {
        if f.duration == 0 {
            report.push(IssueCode::BadDuration, Some(i), format!("fixation {i} has zero duration"));
        }
    }
    for (i, w) in s.fixations.windows(2).enumerate() {
        if w[1].time < w[0].time {
            report.push(
                IssueCode::UnsortedFixations,
                Some(i + 1),
                format!("fixation {} goes back in time", i + 1),
            );
        }
    }
    report
}

/// HOF state symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum State {
    /// Hesitation.
    H,
    /// Orientation.
    O,
    /// Flow.
    F,
}

impl State {
    pub const ALL: [State; 3] = [State::H, State::O, State::F];

    pub fn index(self) -> usize {
        match self {
            State::H => 0,
            State::O => 1,
            State::F => 2,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            State::H => "H",
            State::O => "O",
            State::F => "F",
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for State {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "H" => Ok(State::H),
            "O" => Ok(State::O),
            "F" => Ok(State::F),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateAnnotation {
    pub start: Millis,
    pub end: Millis,
    pub state: State,
}

impl StateAnnotation {
    pub fn new(start: Millis, end: Millis, state: State) -> Self {
        StateAnnotation { start, end, state }
    }

    pub fn duration(&self) -> Millis {
        self.end - self.start
    }

    /// Half-open containment.
    pub fn contains(&self, t: Millis) -> bool {
        self.start <= t && t < self.end
    }
}

/// Generic reader for `start<TAB>end<TAB>symbol[<TAB>...]` files. Blank lines,
/// `#` comments and a leading `start` header row are skipped; extra columns
/// are ignored.
pub(crate) fn parse_interval_rows<R, T, F>(reader: R, mut symbol: F) -> Result<Vec<(Millis, Millis, T, usize)>, ParseError>
where
    R: BufRead,
    F: FnMut(&str) -> Option<T>,
{
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields[0].trim() == "start" {
            continue;
        }
        if fields.len() < 3 {
            return Err(malformed(lineno, "expected start, end and state columns"));
        }
        let start = parse_int(lineno, "start", fields[0])?;
        let end = parse_int(lineno, "end", fields[1])?;
        if end <= start {
            return Err(ParseError::EmptyInterval { line: lineno });
        }
        let value = symbol(fields[2].trim()).ok_or_else(|| ParseError::UnknownState {
            line: lineno,
            symbol: fields[2].trim().to_string(),
        })?;
        rows.push((start, end, value, lineno));
    }
    rows.sort_by_key(|r| (r.0, r.1));
    if let Some(w) = rows.windows(2).find(|w| w[1].0 < w[0].1) {
        return Err(ParseError::OverlappingAnnotations { line: w[1].3 });
    }
    Ok(rows)
}

/// Parses an HOF annotation file. Gaps between annotations are allowed.
pub fn parse_annotations<R: BufRead>(reader: R) -> Result<Vec<StateAnnotation>, ParseError> {
    Ok(parse_interval_rows(reader, |s| s.parse::<State>().ok())?
        .into_iter()
        .map(|(start, end, state, _)| StateAnnotation { start, end, state })
        .collect())
}

pub fn write_annotations<W: Write>(annotations: &[StateAnnotation], mut out: W) -> io::Result<()> {
    writeln!(out, "start\tend\tstate")?;
    for a in annotations {
        writeln!(out, "{}\t{}\t{}", a.start, a.end, a.state)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "#study=S\n#session=s1\n#translator=P01\n#source_lang=en\n#target_lang=es\ntime\tkind\ttext\tpos\tdur\n";

    fn parse(body: &str) -> Result<SessionLog, ParseError> {
        parse_session_str(&format!("{HEADER}{body}"))
    }

    #[test]
    fn minimal_file() {
        let s = parse("0\tins\ta\t0\t\n150\tins\tb\t1\t\n").unwrap();
        assert_eq!(s.keys.len(), 2);
        assert_eq!(s.keys[0], KeyEvent::insertion(0, "a", 0));
        assert_eq!(s.keys[1].time, 150);
        assert_eq!(s.meta.translator_id, "P01");
        assert_eq!(s.meta.target_lang, "es");
        assert!(validate_session(&s).is_ok());
    }

    #[test]
    fn multi_char_deletion() {
        let s = parse("137000\tins\ty\t5\t\n137200\tdel\tmuy\t5\t\n").unwrap();
        let del = &s.keys[1];
        assert_eq!(del.kind, KeyKind::Deletion);
        assert_eq!(del.char_count(), 3);
    }

    #[test]
    fn duplicate_timestamp_is_rejected() {
        let err = parse("500\tins\ta\t0\t\n500\tins\tb\t1\t\n").unwrap_err();
        assert!(err.to_string().contains("duplicate keystroke timestamp"), "{err}");
        assert!(matches!(err, ParseError::DuplicateTimestamp { line: 8, time: 500 }));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse("0\tins\ta\t0\t\nabc\tins\tb\t1\t\n").unwrap_err();
        assert!(matches!(err, ParseError::Malformed { line: 8, .. }), "{err}");
        let err = parse("0\tins\ta\t0\t\n10\tzap\tb\t1\t\n").unwrap_err();
        assert!(matches!(err, ParseError::Malformed { line: 8, .. }), "{err}");
    }

    #[test]
    fn negative_values() {
        let err = parse("-5\tins\ta\t0\t\n10\tins\tb\t1\t\n").unwrap_err();
        assert!(matches!(err, ParseError::Negative { field: "time", .. }));
        let err = parse("0\tins\ta\t0\t\n10\tins\tb\t1\t\n20\tfixS\t\t3\t-4\n").unwrap_err();
        assert!(matches!(err, ParseError::Negative { field: "duration", .. }));
    }

    #[test]
    fn missing_header() {
        let err = parse_session_str("#study=S\n#session=x\ntime\tkind\ttext\tpos\tdur\n0\tins\ta\t0\t\n9\tins\ta\t1\t\n")
            .unwrap_err();
        assert!(matches!(err, ParseError::MissingHeader(ref h) if h == "translator"));
    }

    #[test]
    fn optional_header_order_does_not_matter() {
        let a = "#study=S\n#session=s\n#translator=T\n#mode=postedit\n#target_lang=ar\ntime\tkind\ttext\tpos\tdur\n0\tins\ta\t0\t\n9\tins\ta\t1\t\n";
        let b = "#target_lang=ar\n#mode=postedit\n#translator=T\n#study=S\n#session=s\ntime\tkind\ttext\tpos\tdur\n0\tins\ta\t0\t\n9\tins\ta\t1\t\n";
        let (a, b) = (parse_session_str(a).unwrap(), parse_session_str(b).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.meta.mode(), "postedit");
    }

    #[test]
    fn too_few_keys_and_zero_duration() {
        assert!(matches!(parse("0\tins\ta\t0\t\n"), Err(ParseError::TooFewKeystrokes(1))));
        let err = parse("0\tins\ta\t0\t\n5\tins\tb\t1\t\n7\tfixT\t\t2\t0\n").unwrap_err();
        assert!(matches!(err, ParseError::BadDuration { line: 9 }));
    }

    #[test]
    fn rows_are_sorted_and_fixations_parsed() {
        let s = parse("300\tins\tc\t2\t\n0\tins\ta\t0\t\n20\tfixS\t\t4\t180\n150\tins\tb\t1\t\n10\tfixT\t\t0\t90\n").unwrap();
        assert_eq!(s.key_times(), vec![0, 150, 300]);
        assert_eq!(s.fixations.len(), 2);
        assert_eq!(s.fixations[0].window, Window::Target);
        assert_eq!(s.fixations[1].token_index, 4);
        assert_eq!(s.span(), (0, 300));
    }

    #[test]
    fn serialize_round_trip() {
        let text = format!("{HEADER}0\tins\tu\t0\t\n20\tfixS\t\t4\t180\n150\tins\tn\t1\t\n150\tfixT\t\t1\t60\n");
        let s = parse_session_str(&text).unwrap();
        assert_eq!(s.to_tsv(), text);
        assert_eq!(parse_session_str(&s.to_tsv()).unwrap(), s);
    }

    #[test]
    fn column_map_adapts_external_tables() {
        let map = ColumnMap {
            time: "Time".into(),
            kind: "Type".into(),
            text: "Char".into(),
            pos: "Cursor".into(),
            dur: "Dur".into(),
            skip_unknown_kinds: true,
            blank_to_underscore: true,
            defaults: [("study", "KD"), ("session", "s9"), ("translator", "P9")]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            ..ColumnMap::default()
        };
        let text = "Id\tTime\tType\tCursor\tChar\n1\t100\tins\t0\ta\n2\t130\tnav\t0\tx\n3\t260\tins\t1\t \n";
        let s = parse_session_with(text.as_bytes(), &map).unwrap();
        assert_eq!(s.keys.len(), 2);
        assert_eq!(s.keys[1].text, "_");
        assert_eq!(s.meta.translator_id, "P9");
    }

    #[test]
    fn validation_codes() {
        let meta = SessionMeta::new("S", "s", "T");
        let one = SessionLog::new(meta.clone(), vec![KeyEvent::insertion(0, "a", 0)], vec![]);
        assert!(validate_session(&one).has(IssueCode::NoIki));
        let bad_fix = SessionLog::new(
            meta.clone(),
            vec![KeyEvent::insertion(0, "a", 0), KeyEvent::insertion(5, "b", 1)],
            vec![FixationEvent { time: 3, duration: 0, window: Window::Source, token_index: 0 }],
        );
        let report = validate_session(&bad_fix);
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].code, IssueCode::BadDuration);
        let dup = SessionLog::new(meta, vec![KeyEvent::insertion(5, "a", 0), KeyEvent::insertion(5, "b", 1)], vec![]);
        assert!(validate_session(&dup).has(IssueCode::DuplicateTime));
    }

    #[test]
    fn annotations() {
        let anns = parse_annotations("0\t5000\tO\n5000\t20000\tF\n".as_bytes()).unwrap();
        assert_eq!(anns, vec![StateAnnotation::new(0, 5000, State::O), StateAnnotation::new(5000, 20000, State::F)]);

        let err = parse_annotations("0\t5000\tO\n4000\t9000\tH\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("overlapping annotations"));
        assert!(matches!(parse_annotations("10\t10\tF\n".as_bytes()), Err(ParseError::EmptyInterval { line: 1 })));
        assert!(matches!(
            parse_annotations("0\t10\tX\n".as_bytes()),
            Err(ParseError::UnknownState { line: 1, .. })
        ));

        let ohfof = "start\tend\tstate\n0\t4000\tO\n4000\t9000\tH\n9000\t16000\tF\n17000\t20000\tO\n20000\t31000\tF\n";
        let anns = parse_annotations(ohfof.as_bytes()).unwrap();
        let seq: String = anns.iter().map(|a| a.state.symbol()).collect();
        assert_eq!(seq, "OHFOF");
        let mut out = Vec::new();
        write_annotations(&anns, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), ohfof);
    }
}
