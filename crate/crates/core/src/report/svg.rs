//! Hand-written SVG 1.1: progression graphs and IKI distribution plots.
//! Coordinates are printed with two decimals so output is byte-stable.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hof::{ActivityUnit, AuType, StateTrack};
use crate::iki::DistributionSummary;
use crate::segment::SegmentationTree;
use crate::session::{KeyEvent, KeyKind, Millis, SessionLog, State, Window};

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("empty time range {0}..{1}")]
    EmptyRange(Millis, Millis),
    #[error("nothing to draw: distribution has no data")]
    EmptySummary,
    #[error("alignment line {0}: expected st_token<TAB>tt_token")]
    BadAlignment(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuColors(pub BTreeMap<AuType, String>);

impl Default for AuColors {
    fn default() -> Self {
        AuColors(
            [
                (AuType::T1, "#2f5fd0"),
                (AuType::T2, "#9ee09e"),
                (AuType::T4, "#f0d020"),
                (AuType::T5, "#d83a2e"),
                (AuType::T6, "#1f7a35"),
                (AuType::T8, "#000000"),
            ]
            .into_iter()
            .map(|(k, v)| (k, v.to_string()))
            .collect(),
        )
    }
}

impl AuColors {
    pub fn get(&self, t: AuType) -> &str {
        self.0.get(&t).map_or("#808080", String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layers {
    pub keystrokes: bool,
    pub fixations: bool,
    pub aus: bool,
    pub tasks: bool,
    pub segments: bool,
    pub tsp_boxes: bool,
    pub hof: bool,
}

impl Default for Layers {
    fn default() -> Self {
        Layers { keystrokes: true, fixations: true, aus: true, tasks: true, segments: true, tsp_boxes: true, hof: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    /// Time window; the whole session when `None`.
    pub window: Option<(Millis, Millis)>,
    pub width: u32,
    pub height: u32,
    pub font_family: String,
    pub font_size: u32,
    pub layers: Layers,
    pub colors: AuColors,
    /// Right end of the x axis for distribution plots.
    pub x_max: Option<f64>,
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec {
            window: None,
            width: 1000,
            height: 600,
            font_family: "sans-serif".into(),
            font_size: 11,
            layers: Layers::default(),
            colors: AuColors::default(),
            x_max: None,
        }
    }
}

/// Everything a progression graph can show; missing parts are skipped.
#[derive(Debug, Clone, Copy)]
pub struct GraphInput<'a> {
    pub session: &'a SessionLog,
    pub tree: Option<&'a SegmentationTree>,
    pub track: Option<&'a StateTrack>,
    pub aus: Option<&'a [ActivityUnit]>,
    pub source_tokens: Option<&'a [String]>,
    pub alignment: Option<&'a [(String, String)]>,
}

impl<'a> GraphInput<'a> {
    pub fn new(session: &'a SessionLog) -> Self {
        GraphInput { session, tree: None, track: None, aus: None, source_tokens: None, alignment: None }
    }
}

/// Reads `st_token<TAB>tt_token` rows.
pub fn parse_alignment<R: BufRead>(reader: R) -> Result<Vec<(String, String)>, RenderError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|_| RenderError::BadAlignment(i + 1))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (st, tt) = line.split_once('\t').ok_or(RenderError::BadAlignment(i + 1))?;
        out.push((st.trim().to_string(), tt.trim().to_string()));
    }
    Ok(out)
}

/// Replays the keystrokes into a text buffer. Returns the final target
/// tokens and, per keystroke, the index of the token it edits.
pub fn reconstruct_target_tokens(keys: &[KeyEvent]) -> (Vec<String>, Vec<usize>) {
    let mut text: Vec<char> = Vec::new();
    let mut token_of_key = Vec::with_capacity(keys.len());
    for k in keys {
        let chars: Vec<char> = k.text.chars().map(|c| if c == '_' { ' ' } else { c }).collect();
        let cursor = (k.cursor as usize).min(text.len());
        let words_before = text[..cursor]
            .iter()
            .enumerate()
            .filter(|&(i, c)| !c.is_whitespace() && (i == 0 || text[i - 1].is_whitespace()))
            .count();
        let inside = cursor > 0 && !text[cursor - 1].is_whitespace();
        token_of_key.push(if inside { words_before.saturating_sub(1) } else { words_before });
        match k.kind {
            KeyKind::Insertion => {
                text.splice(cursor..cursor, chars);
            }
            KeyKind::Deletion => {
                let end = (cursor + chars.len()).min(text.len());
                text.drain(cursor..end);
            }
        }
    }
    let tokens = text.iter().collect::<String>().split_whitespace().map(str::to_string).collect();
    (tokens, token_of_key)
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\t' && c != '\n' => out.push('?'),
            c => out.push(c),
        }
    }
    out
}

fn header(out: &mut String, w: u32, h: u32, font: &str, size: u32) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="{}" font-size="{size}">"#,
        esc(font)
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
}

/// Round tick step of roughly `span / target`.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = (span / target).max(f64::MIN_POSITIVE);
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

struct Frame {
    t0: f64,
    t1: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        self.left + (t.clamp(self.t0, self.t1) - self.t0) / (self.t1 - self.t0) * (self.right - self.left)
    }

    fn lane_y(&self, idx: usize, count: usize) -> f64 {
        let count = count.max(1) as f64;
        self.bottom - (idx as f64 + 0.5) / count * (self.bottom - self.top)
    }
}

fn state_color(s: State) -> &'static str {
    match s {
        State::H => "#e8a33d",
        State::O => "#5aa9e6",
        State::F => "#7bc67b",
    }
}

/// Progression graph: time on x, source tokens on the left axis, target
/// tokens on the right axis, with segment and state overlays on top.
pub fn render_progression_graph(input: &GraphInput<'_>, spec: &GraphSpec) -> Result<String, RenderError> {
    let s = input.session;
    let span = crate::hof::session_span(s).unwrap_or((0, 0));
    let (t0, t1) = spec.window.unwrap_or(span);
    if t1 <= t0 {
        return Err(RenderError::EmptyRange(t0, t1));
    }
    let in_window = |t: Millis| t >= t0 && t <= t1;
    let (w, h) = (spec.width as f64, spec.height as f64);
    let f = Frame { t0: t0 as f64, t1: t1 as f64, left: 70.0, right: w - 90.0, top: 96.0, bottom: h - 40.0 };
    let mut out = String::new();
    header(&mut out, spec.width, spec.height, &spec.font_family, spec.font_size);

    let (tt_tokens, key_token) = reconstruct_target_tokens(&s.keys);
    let st_count = input
        .source_tokens
        .map(<[String]>::len)
        .unwrap_or(0)
        .max(s.fixations.iter().filter(|x| x.window == Window::Source).map(|x| x.token_index as usize + 1).max().unwrap_or(0));
    let tt_count = tt_tokens
        .len()
        .max(key_token.iter().map(|i| i + 1).max().unwrap_or(0))
        .max(s.fixations.iter().filter(|x| x.window == Window::Target).map(|x| x.token_index as usize + 1).max().unwrap_or(0));

    // frame and axes
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#999999"/>"##,
        f.left,
        f.top,
        f.right - f.left,
        f.bottom - f.top
    );
    let step = tick_step(f.t1 - f.t0, 8.0);
    let mut tick = (f.t0 / step).ceil() * step;
    let _ = writeln!(out, r#"<g class="x-axis">"#);
    while tick <= f.t1 {
        let x = f.x(tick);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#999999"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            f.bottom,
            f.bottom + 4.0,
            f.bottom + 16.0,
            tick as u64
        );
        tick += step;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (ms)</text></g>"#,
        (f.left + f.right) / 2.0,
        h - 6.0
    );
    let label_every = |n: usize| (n / 40).max(1);
    let _ = writeln!(out, r#"<g class="st-axis">"#);
    for i in (0..st_count).step_by(label_every(st_count)) {
        let name = input.source_tokens.and_then(|t| t.get(i)).map_or_else(|| i.to_string(), |t| esc(t));
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{name}</text>"#, f.left - 4.0, f.lane_y(i, st_count) + 3.0);
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g class="tt-axis">"#);
    for i in (0..tt_count).step_by(label_every(tt_count)) {
        let name = tt_tokens.get(i).map_or_else(|| i.to_string(), |t| esc(t));
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{name}</text>"#, f.right + 4.0, f.lane_y(i, tt_count) + 3.0);
    }
    let _ = writeln!(out, "</g>");

    if let Some(pairs) = input.alignment {
        let st_index = |tok: &str| input.source_tokens.and_then(|t| t.iter().position(|x| x == tok));
        let tt_index = |tok: &str| tt_tokens.iter().position(|x| x == tok);
        let _ = writeln!(out, r#"<g class="alignment">"#);
        for (st, tt) in pairs {
            if let (Some(a), Some(b)) = (st_index(st), tt_index(tt)) {
                let _ = writeln!(
                    out,
                    r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd" stroke-width="0.5"/>"##,
                    f.left,
                    f.lane_y(a, st_count),
                    f.right,
                    f.lane_y(b, tt_count)
                );
            }
        }
        let _ = writeln!(out, "</g>");
    }

    let tsp = input.tree.map(|t| t.thresholds.tsp);
    if spec.layers.tsp_boxes {
        if let Some(tsp) = tsp {
            let _ = writeln!(out, r#"<g class="tsp">"#);
            for win in s.keys.windows(2) {
                let (a, b) = (win[0].time, win[1].time);
                if ((b - a) as f64) >= tsp && b >= t0 && a <= t1 {
                    let (xa, xb) = (f.x(a as f64), f.x(b as f64));
                    let _ = writeln!(
                        out,
                        r##"<rect x="{xa:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#8a2be2" fill-opacity="0.15" stroke="#8a2be2"/>"##,
                        f.top,
                        xb - xa,
                        f.bottom - f.top
                    );
                }
            }
            let _ = writeln!(out, "</g>");
        }
    }

    if spec.layers.hof {
        if let Some(track) = input.track {
            let _ = writeln!(out, r#"<g class="hof">"#);
            for a in track.annotations.iter().filter(|a| a.end > t0 && a.start < t1) {
                let (xa, xb) = (f.x(a.start as f64), f.x(a.end as f64));
                let _ = writeln!(
                    out,
                    r#"<rect x="{xa:.2}" y="8.00" width="{:.2}" height="16.00" fill="{}"/><text x="{:.2}" y="20.00" text-anchor="middle">{}</text>"#,
                    xb - xa,
                    state_color(a.state),
                    (xa + xb) / 2.0,
                    a.state
                );
            }
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="30.00" x2="{:.2}" y2="30.00" stroke="#555555" stroke-dasharray="4 3"/></g>"##,
                f.left,
                f.right
            );
        }
    }

    if let Some(tree) = input.tree {
        if spec.layers.segments {
            let _ = writeln!(out, r#"<g class="segments">"#);
            for seg in tree.segments.iter().filter(|x| x.end >= t0 && x.start <= t1) {
                let (xa, xb) = (f.x(seg.start as f64), f.x(seg.end as f64 + 1.0));
                let _ = writeln!(
                    out,
                    r##"<rect x="{xa:.2}" y="36.00" width="{:.2}" height="12.00" fill="#a0a0a0"><title>{}</title></rect>"##,
                    (xb - xa).max(1.0),
                    esc(&seg.label)
                );
            }
            let _ = writeln!(out, "</g>");
        }
        if spec.layers.tasks {
            let _ = writeln!(out, r#"<g class="tasks">"#);
            for task in tree.tasks().filter(|x| x.end >= t0 && x.start <= t1) {
                let (xa, xb) = (f.x(task.start as f64), f.x(task.end as f64 + 1.0));
                let _ = writeln!(
                    out,
                    r##"<rect x="{xa:.2}" y="52.00" width="{:.2}" height="10.00" fill="#505050"><title>{}</title></rect>"##,
                    (xb - xa).max(1.0),
                    task.label
                );
            }
            let _ = writeln!(out, "</g>");
        }
    }

    if spec.layers.aus {
        if let Some(aus) = input.aus {
            let _ = writeln!(out, r#"<g class="aus">"#);
            for u in aus.iter().filter(|u| u.end > t0 && u.start < t1) {
                let (xa, xb) = (f.x(u.start as f64), f.x(u.end as f64));
                let _ = writeln!(
                    out,
                    r#"<rect x="{xa:.2}" y="68.00" width="{:.2}" height="12.00" fill="{}"><title>{}</title></rect>"#,
                    xb - xa,
                    spec.colors.get(u.kind),
                    u.kind
                );
            }
            let _ = writeln!(out, "</g>");
        }
    }

    if spec.layers.fixations && !s.fixations.is_empty() {
        let _ = writeln!(out, r#"<g class="fixations">"#);
        for fx in s.fixations.iter().filter(|fx| in_window(fx.time)) {
            let x = f.x(fx.time as f64);
            match fx.window {
                Window::Source => {
                    let y = f.lane_y(fx.token_index as usize, st_count);
                    let _ = writeln!(out, r##"<circle cx="{x:.2}" cy="{y:.2}" r="3.00" fill="#2f5fd0"/>"##);
                }
                Window::Target => {
                    let y = f.lane_y(fx.token_index as usize, tt_count);
                    let _ = writeln!(
                        out,
                        r##"<polygon points="{x:.2},{:.2} {:.2},{y:.2} {x:.2},{:.2} {:.2},{y:.2}" fill="#1f9a3a"/>"##,
                        y - 3.5,
                        x + 3.5,
                        y + 3.5,
                        x - 3.5
                    );
                }
            }
        }
        let _ = writeln!(out, "</g>");
    }

    if spec.layers.keystrokes {
        let _ = writeln!(out, r#"<g class="keystrokes">"#);
        for (k, &tok) in s.keys.iter().zip(&key_token).filter(|(k, _)| in_window(k.time)) {
            let color = match k.kind {
                KeyKind::Insertion => "#000000",
                KeyKind::Deletion => "#d00000",
            };
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" fill="{color}" text-anchor="middle">{}</text>"#,
                f.x(k.time as f64),
                f.lane_y(tok, tt_count) + 3.0,
                esc(&k.text)
            );
        }
        let _ = writeln!(out, "</g>");
    }

    let _ = writeln!(out, "</svg>");
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    Density,
    Cdf,
}

#[derive(Debug, Clone)]
pub struct DistributionSeries<'a> {
    pub label: String,
    pub summary: &'a DistributionSummary,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Density (histogram plus optional KDE) or CDF plot of one or more
/// distributions. Means are solid and medians dotted vertical lines.
pub fn render_distribution(
    series: &[DistributionSeries<'_>],
    kind: DistributionKind,
    spec: &GraphSpec,
) -> Result<String, RenderError> {
    if series.is_empty() || series.iter().any(|s| s.summary.count == 0) {
        return Err(RenderError::EmptySummary);
    }
    let (w, h) = (spec.width as f64, spec.height as f64);
    let lo = series.iter().map(|s| s.summary.min).fold(f64::INFINITY, f64::min).min(0.0);
    let mut hi = spec.x_max.unwrap_or_else(|| series.iter().map(|s| s.summary.max).fold(f64::NEG_INFINITY, f64::max));
    if hi <= lo {
        hi = lo + 1.0;
    }
    let y_max = match kind {
        DistributionKind::Cdf => 1.0,
        DistributionKind::Density => series
            .iter()
            .flat_map(|s| {
                let n = s.summary.count as f64;
                let hist = s.summary.histogram.iter().map(move |b| b.count as f64 / (n * (b.hi - b.lo)));
                let kde = s.summary.kde.iter().flatten().map(|p| p.1);
                hist.chain(kde)
            })
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE),
    };
    let f = Frame { t0: lo, t1: hi, left: 70.0, right: w - 20.0, top: 20.0, bottom: h - 50.0 };
    let y = |v: f64| f.bottom - (v / y_max).clamp(0.0, 1.0) * (f.bottom - f.top);
    let mut out = String::new();
    header(&mut out, spec.width, spec.height, &spec.font_family, spec.font_size);
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#999999"/>"##,
        f.left,
        f.top,
        f.right - f.left,
        f.bottom - f.top
    );
    let step = tick_step(hi - lo, 8.0);
    let mut tick = (lo / step).ceil() * step;
    while tick <= hi + 1e-9 {
        let x = f.x(tick);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            f.bottom + 16.0,
            super::format_sig(tick, 6)
        );
        tick += step;
    }
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            f.left - 4.0,
            y(v) + 3.0,
            super::format_sig(v, 3)
        );
    }
    let ylabel = match kind {
        DistributionKind::Cdf => "probability",
        DistributionKind::Density => "density",
    };
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">IKI (ms)</text><text x="14.00" y="{:.2}" text-anchor="middle" transform="rotate(-90 14.00 {:.2})">{ylabel}</text>"#,
        (f.left + f.right) / 2.0,
        h - 18.0,
        (f.top + f.bottom) / 2.0,
        (f.top + f.bottom) / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let sm = s.summary;
        let _ = writeln!(out, r#"<g class="series" data-label="{}">"#, esc(&s.label));
        match kind {
            DistributionKind::Density => {
                let n = sm.count as f64;
                for b in sm.histogram.iter().filter(|b| b.count > 0 && b.lo < hi) {
                    let d = b.count as f64 / (n * (b.hi - b.lo));
                    let (xa, xb) = (f.x(b.lo), f.x(b.hi));
                    let _ = writeln!(
                        out,
                        r#"<rect x="{xa:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.3"/>"#,
                        y(d),
                        xb - xa,
                        f.bottom - y(d)
                    );
                }
                if let Some(kde) = &sm.kde {
                    let pts: Vec<String> = kde
                        .iter()
                        .filter(|p| p.0 >= lo && p.0 <= hi)
                        .map(|p| format!("{:.2},{:.2}", f.x(p.0), y(p.1)))
                        .collect();
                    let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, pts.join(" "));
                }
            }
            DistributionKind::Cdf => {
                let mut pts = vec![format!("{:.2},{:.2}", f.x(lo), y(0.0))];
                let mut prev = 0.0;
                for p in &sm.cdf {
                    let x = f.x(p.x);
                    pts.push(format!("{x:.2},{:.2}", y(prev)));
                    pts.push(format!("{x:.2},{:.2}", y(p.p)));
                    prev = p.p;
                }
                pts.push(format!("{:.2},{:.2}", f.right, y(prev)));
                let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, pts.join(" "));
            }
        }
        for (v, dash) in [(sm.mean, ""), (sm.median, r#" stroke-dasharray="2 3""#)] {
            if v <= hi {
                let x = f.x(v);
                let _ = writeln!(
                    out,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"{dash}/>"#,
                    f.top,
                    f.bottom
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}" text-anchor="end">{}</text></g>"#,
            f.right - 6.0,
            f.top + 14.0 * (i + 1) as f64,
            esc(&s.label)
        );
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iki::{iki_distribution, DistributionOptions};
    use crate::session::SessionMeta;

    fn session() -> SessionLog {
        let keys = vec![
            KeyEvent::insertion(0, "l", 0),
            KeyEvent::insertion(100, "a", 1),
            KeyEvent::insertion(200, "_", 2),
            KeyEvent::insertion(2000, "c", 3),
            KeyEvent::deletion(2100, "c", 3),
            KeyEvent::insertion(2200, "<", 3),
        ];
        SessionLog::new(SessionMeta::new("S", "s", "P"), keys, vec![])
    }

    #[test]
    fn token_replay() {
        let (tokens, per_key) = reconstruct_target_tokens(&session().keys);
        assert_eq!(tokens, vec!["la", "<"]);
        assert_eq!(per_key, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn keystroke_only_graph() {
        let s = session();
        let svg = render_progression_graph(&GraphInput::new(&s), &GraphSpec::default()).unwrap();
        assert!(svg.contains(r#"class="keystrokes""#));
        assert!(!svg.contains(r#"class="fixations""#));
        assert!(!svg.contains(r#"class="tsp""#));
        assert!(svg.contains("&lt;"));
        assert!(svg.contains("#d00000"));
        assert_eq!(svg, render_progression_graph(&GraphInput::new(&s), &GraphSpec::default()).unwrap());
        assert_eq!(svg.matches("<svg").count(), 1);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_window_is_an_error() {
        let s = session();
        let spec = GraphSpec { window: Some((500, 500)), ..GraphSpec::default() };
        assert_eq!(render_progression_graph(&GraphInput::new(&s), &spec), Err(RenderError::EmptyRange(500, 500)));
    }

    #[test]
    fn single_value_cdf() {
        let d = iki_distribution(&[250.0], &DistributionOptions::default()).unwrap();
        let svg =
            render_distribution(&[DistributionSeries { label: "x".into(), summary: &d }], DistributionKind::Cdf, &GraphSpec::default())
                .unwrap();
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("probability"));
        let density = render_distribution(
            &[DistributionSeries { label: "x".into(), summary: &d }],
            DistributionKind::Density,
            &GraphSpec::default(),
        )
        .unwrap();
        assert!(!density.contains("<polyline"));
        assert!(density.contains("stroke-dasharray"));
    }

    #[test]
    fn alignment_rows() {
        let a = parse_alignment("the\tla\n# x\nhouse\tcasa\n".as_bytes()).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(parse_alignment("bad\n".as_bytes()), Err(RenderError::BadAlignment(1)));
    }
}
