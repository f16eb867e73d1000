//! Activity Units: the session timeline cut into stretches of source
//! reading, target reading, typing, typing while reading, and inactivity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::session::{parse_interval_rows, Millis, ParseError, SessionLog, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AuType {
    /// Source-text reading.
    T1,
    /// Target-text reading.
    T2,
    /// Typing without gaze data.
    T4,
    /// Typing while reading the source.
    T5,
    /// Typing while reading the target.
    T6,
    /// No keystroke and no fixation for more than the idle threshold.
    T8,
}

impl AuType {
    pub const ALL: [AuType; 6] = [AuType::T1, AuType::T2, AuType::T4, AuType::T5, AuType::T6, AuType::T8];

    pub fn code(self) -> &'static str {
        match self {
            AuType::T1 => "T1",
            AuType::T2 => "T2",
            AuType::T4 => "T4",
            AuType::T5 => "T5",
            AuType::T6 => "T6",
            AuType::T8 => "T8",
        }
    }

    pub fn is_production(self) -> bool {
        matches!(self, AuType::T4 | AuType::T5 | AuType::T6)
    }
}

impl fmt::Display for AuType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for AuType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AuType::ALL.into_iter().find(|t| t.code() == s.trim()).ok_or_else(|| s.trim().to_string())
    }
}

/// Half-open `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityUnit {
    pub start: Millis,
    pub end: Millis,
    pub kind: AuType,
}

impl ActivityUnit {
    pub fn duration(&self) -> Millis {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuParams {
    /// Silence longer than this becomes a T8 unit.
    pub idle_ms: Millis,
    /// Units shorter than this are merged into their longer neighbour.
    pub min_unit_ms: Millis,
}

impl Default for AuParams {
    fn default() -> Self {
        AuParams { idle_ms: 1000, min_unit_ms: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    Au(AuType),
    Idle,
}

struct Active {
    counts: BTreeMap<Millis, usize>,
}

impl Active {
    fn new() -> Self {
        Active { counts: BTreeMap::new() }
    }

    fn add(&mut self, d: Millis) {
        *self.counts.entry(d).or_default() += 1;
    }

    fn remove(&mut self, d: Millis) {
        if let Some(c) = self.counts.get_mut(&d) {
            *c -= 1;
            if *c == 0 {
                self.counts.remove(&d);
            }
        }
    }

    fn longest(&self) -> Option<Millis> {
        self.counts.keys().next_back().copied()
    }
}

/// Session timeline `[first event, last event end)`.
pub fn session_span(s: &SessionLog) -> Option<(Millis, Millis)> {
    let key_lo = s.keys.first().map(|k| k.time);
    let key_hi = s.keys.last().map(|k| k.time + 1);
    let fix_lo = s.fixations.iter().map(|f| f.time).min();
    let fix_hi = s.fixations.iter().map(|f| f.end()).max();
    let lo = [key_lo, fix_lo].into_iter().flatten().min()?;
    let hi = [key_hi, fix_hi].into_iter().flatten().max()?;
    Some((lo, hi))
}

/// Tiles the session span with Activity Units. Two keystrokes less than
/// `tsp` apart count as continuous production between them.
pub fn derive_activity_units(s: &SessionLog, tsp: f64, params: &AuParams) -> Vec<ActivityUnit> {
    let Some((lo, hi)) = session_span(s) else { return Vec::new() };
    // (time, +1 start / -1 end, channel, fixation duration)
    #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
    enum Ch {
        P,
        S,
        T,
    }
    let mut edges: Vec<(Millis, i8, Ch, Millis)> = Vec::new();
    let mut push = |a: Millis, b: Millis, ch: Ch, d: Millis| {
        if b > a {
            edges.push((a, 1, ch, d));
            edges.push((b, -1, ch, d));
        }
    };
    for (i, k) in s.keys.iter().enumerate() {
        push(k.time, k.time + 1, Ch::P, 0);
        if let Some(next) = s.keys.get(i + 1) {
            if ((next.time - k.time) as f64) < tsp {
                push(k.time, next.time, Ch::P, 0);
            }
        }
    }
    for f in &s.fixations {
        let ch = match f.window {
            Window::Source => Ch::S,
            Window::Target => Ch::T,
        };
        push(f.time, f.end(), ch, f.duration);
    }
    edges.sort();
    let mut pieces: Vec<(Millis, Millis, Piece)> = Vec::new();
    let (mut prod, mut src, mut tgt) = (0usize, Active::new(), Active::new());
    let mut cursor = lo;
    let mut idx = 0;
    while idx < edges.len() {
        let t = edges[idx].0;
        if t > cursor {
            let piece = classify(prod > 0, src.longest(), tgt.longest());
            pieces.push((cursor, t, piece));
            cursor = t;
        }
        while idx < edges.len() && edges[idx].0 == t {
            let (_, delta, ch, d) = edges[idx];
            match (ch, delta > 0) {
                (Ch::P, true) => prod += 1,
                (Ch::P, false) => prod -= 1,
                (Ch::S, true) => src.add(d),
                (Ch::S, false) => src.remove(d),
                (Ch::T, true) => tgt.add(d),
                (Ch::T, false) => tgt.remove(d),
            }
            idx += 1;
        }
    }
    debug_assert_eq!(cursor, hi);
    let pieces = merge_pieces(pieces);
    let units = resolve_idle(pieces, params.idle_ms);
    remove_slivers(units, params.min_unit_ms)
}

fn classify(prod: bool, src: Option<Millis>, tgt: Option<Millis>) -> Piece {
    let reading = match (src, tgt) {
        (Some(s), Some(t)) => Some(if s >= t { Window::Source } else { Window::Target }),
        (Some(_), None) => Some(Window::Source),
        (None, Some(_)) => Some(Window::Target),
        (None, None) => None,
    };
    Piece::Au(match (prod, reading) {
        (true, Some(Window::Source)) => AuType::T5,
        (true, Some(Window::Target)) => AuType::T6,
        (true, None) => AuType::T4,
        (false, Some(Window::Source)) => AuType::T1,
        (false, Some(Window::Target)) => AuType::T2,
        (false, None) => return Piece::Idle,
    })
}

fn merge_pieces(pieces: Vec<(Millis, Millis, Piece)>) -> Vec<(Millis, Millis, Piece)> {
    let mut out: Vec<(Millis, Millis, Piece)> = Vec::with_capacity(pieces.len());
    for p in pieces {
        match out.last_mut() {
            Some(last) if last.2 == p.2 && last.1 == p.0 => last.1 = p.1,
            _ => out.push(p),
        }
    }
    out
}

/// Long silences become T8; short ones extend the preceding unit (the
/// following one at the very start).
fn resolve_idle(pieces: Vec<(Millis, Millis, Piece)>, idle_ms: Millis) -> Vec<ActivityUnit> {
    let mut out: Vec<ActivityUnit> = Vec::new();
    let mut pending_start: Option<Millis> = None;
    for (start, end, piece) in pieces {
        let kind = match piece {
            Piece::Au(k) => k,
            Piece::Idle if end - start > idle_ms => AuType::T8,
            Piece::Idle => {
                match out.last_mut() {
                    Some(last) => last.end = end,
                    None => pending_start = Some(start),
                }
                continue;
            }
        };
        let start = pending_start.take().unwrap_or(start);
        push_merged(&mut out, ActivityUnit { start, end, kind });
    }
    out
}

fn push_merged(out: &mut Vec<ActivityUnit>, u: ActivityUnit) {
    match out.last_mut() {
        Some(last) if last.kind == u.kind => last.end = u.end,
        _ => out.push(u),
    }
}

/// Repeatedly folds the shortest unit below `min_ms` into its longer
/// neighbour, then re-merges equal neighbours.
fn remove_slivers(units: Vec<ActivityUnit>, min_ms: Millis) -> Vec<ActivityUnit> {
    let n = units.len();
    let mut u = units;
    let mut prev: Vec<Option<usize>> = (0..n).map(|i| i.checked_sub(1)).collect();
    let mut next: Vec<Option<usize>> = (0..n).map(|i| Some(i + 1).filter(|&j| j < n)).collect();
    let mut alive = vec![true; n];
    let mut live = n;
    // (duration, start) orders like (duration, position) since starts increase
    let mut short: BTreeSet<(Millis, Millis, usize)> = BTreeSet::new();
    let key = |u: &ActivityUnit, i: usize| (u.duration(), u.start, i);
    for (i, x) in u.iter().enumerate() {
        if x.duration() < min_ms {
            short.insert(key(x, i));
        }
    }
    let unlink = |i: usize, prev: &mut Vec<Option<usize>>, next: &mut Vec<Option<usize>>| {
        if let Some(p) = prev[i] {
            next[p] = next[i];
        }
        if let Some(q) = next[i] {
            prev[q] = prev[i];
        }
    };
    while live >= 2 {
        let Some(&(_, _, i)) = short.first() else { break };
        short.remove(&key(&u[i], i));
        let (left, right) = (prev[i], next[i]);
        let into_left = match (left, right) {
            (Some(l), Some(r)) => u[l].duration() >= u[r].duration(),
            (Some(_), None) => true,
            _ => false,
        };
        let target = if into_left { left.unwrap() } else { right.unwrap() };
        short.remove(&key(&u[target], target));
        if into_left {
            u[target].end = u[i].end;
        } else {
            u[target].start = u[i].start;
        }
        unlink(i, &mut prev, &mut next);
        alive[i] = false;
        live -= 1;
        if let (Some(l), Some(r)) = (left, right) {
            if u[l].kind == u[r].kind {
                short.remove(&key(&u[l], l));
                short.remove(&key(&u[r], r));
                u[l].end = u[r].end;
                unlink(r, &mut prev, &mut next);
                alive[r] = false;
                live -= 1;
            }
        }
        for j in [left, right].into_iter().flatten().filter(|&j| alive[j]) {
            if u[j].duration() < min_ms {
                short.insert(key(&u[j], j));
            }
        }
    }
    u.into_iter().zip(alive).filter_map(|(x, a)| a.then_some(x)).collect()
}

/// Writes `start<TAB>end<TAB>type` rows.
pub fn write_activity_units<W: Write>(units: &[ActivityUnit], mut out: W) -> io::Result<()> {
    writeln!(out, "start\tend\ttype")?;
    for u in units {
        writeln!(out, "{}\t{}\t{}", u.start, u.end, u.kind)?;
    }
    Ok(())
}

pub fn parse_activity_units<R: BufRead>(reader: R) -> Result<Vec<ActivityUnit>, ParseError> {
    Ok(parse_interval_rows(reader, |s| s.parse::<AuType>().ok())?
        .into_iter()
        .map(|(start, end, kind, _)| ActivityUnit { start, end, kind })
        .collect())
}
