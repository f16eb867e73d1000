//! Hesitation / Orientation / Flow analysis: state tracks laid over a
//! segmentation, transition matrices and per-state statistics.

mod au;
mod suggest;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use au::{
    derive_activity_units, parse_activity_units, session_span, write_activity_units, ActivityUnit, AuParams, AuType,
};
pub use suggest::{agreement, suggest_hof_states, write_suggestions, SuggestParams, SuggestedState};

use crate::report::{Cell, ReportTable};
use crate::segment::{build_segments, natural_breaks, Break, SegmentationTree, TaskLabel};
use crate::session::{Millis, State, StateAnnotation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HofError {
    #[error("annotations overlap at {0} ms")]
    Overlap(Millis),
    #[error("state track is empty")]
    EmptyTrack,
    #[error("state {0} occurs in none of the sessions")]
    StateAbsent(State),
}

/// Sorted, non-overlapping annotations of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTrack {
    pub annotations: Vec<StateAnnotation>,
}

impl StateTrack {
    pub fn new(mut annotations: Vec<StateAnnotation>) -> Result<Self, HofError> {
        if annotations.is_empty() {
            return Err(HofError::EmptyTrack);
        }
        annotations.sort_by_key(|a| (a.start, a.end));
        if let Some(w) = annotations.windows(2).find(|w| w[1].start < w[0].end) {
            return Err(HofError::Overlap(w[1].start));
        }
        Ok(StateTrack { annotations })
    }

    pub fn index_at(&self, t: Millis) -> Option<usize> {
        let i = self.annotations.partition_point(|a| a.start <= t);
        (i > 0 && self.annotations[i - 1].contains(t)).then(|| i - 1)
    }

    fn assign(&self, t: Millis, policy: OutsidePolicy) -> usize {
        if let Some(i) = self.index_at(t) {
            return i;
        }
        let next = self.annotations.partition_point(|a| a.start <= t);
        let prev = next.checked_sub(1);
        let next = (next < self.annotations.len()).then_some(next);
        match (policy, prev, next) {
            (_, Some(p), None) | (OutsidePolicy::Previous, Some(p), _) => p,
            (_, None, Some(n)) | (OutsidePolicy::Next, _, Some(n)) => n,
            (OutsidePolicy::Nearest, Some(p), Some(n)) => {
                let dp = t - (self.annotations[p].end - 1);
                let dn = self.annotations[n].start - t;
                if dn < dp { n } else { p }
            }
            (_, None, None) => unreachable!("track is non-empty"),
        }
    }
}

/// Where a keystroke outside every annotation goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutsidePolicy {
    #[default]
    Nearest,
    Previous,
    Next,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    pub segments_before: usize,
    pub segments_after: usize,
    /// Segments of the uncut tree that contained a state change.
    pub segments_cut: usize,
    pub tasks_before: usize,
    pub tasks_after: usize,
    pub tasks_cut: usize,
    pub keys_outside: usize,
    pub warnings: Vec<String>,
}

/// A segmentation cut at state boundaries, with every key and segment
/// mapped to its annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateOverlay {
    pub tree: SegmentationTree,
    pub track: StateTrack,
    /// Annotation index per keystroke.
    pub key_state: Vec<usize>,
    /// Segment indices per annotation.
    pub segments_by_annotation: Vec<Vec<usize>>,
    pub report: CutReport,
}

impl StateOverlay {
    pub fn segment_state(&self, seg: usize) -> State {
        self.track.annotations[self.key_state[self.tree.segments[seg].first]].state
    }
}

/// Splits every Task and Task Segment that spans a state change. Keys are
/// placed in states by timestamp.
pub fn cut_at_state_boundaries(tree: &SegmentationTree, track: &StateTrack, policy: OutsidePolicy) -> StateOverlay {
    let keys = &tree.keys;
    let mut report = CutReport {
        segments_before: tree.segments.len(),
        tasks_before: tree.task_count(),
        ..CutReport::default()
    };
    let key_state: Vec<usize> = keys
        .iter()
        .map(|k| {
            if track.index_at(k.time).is_none() {
                report.keys_outside += 1;
            }
            track.assign(k.time, policy)
        })
        .collect();
    if report.keys_outside > 0 {
        report.warnings.push(format!(
            "{}: {} keystroke(s) outside every annotation, assigned by {:?} policy",
            tree.session_id, report.keys_outside, policy
        ));
    }
    let changes = |first: usize, last: usize| key_state[first..=last].windows(2).any(|w| w[0] != w[1]);
    report.segments_cut = tree.segments.iter().filter(|s| changes(s.first, s.last)).count();
    report.tasks_cut = tree.tasks().filter(|t| changes(t.first, t.last)).count();

    let mut breaks = natural_breaks(keys, &tree.thresholds);
    for i in 1..keys.len() {
        if key_state[i] != key_state[i - 1] {
            breaks[i] = Break::Segment;
        }
    }
    let segments = build_segments(keys, &breaks);
    let mut segments_by_annotation = vec![Vec::new(); track.annotations.len()];
    for (i, s) in segments.iter().enumerate() {
        segments_by_annotation[key_state[s.first]].push(i);
    }
    let cut = SegmentationTree { segments, ..tree.clone() };
    report.segments_after = cut.segments.len();
    report.tasks_after = cut.task_count();
    StateOverlay { tree: cut, track: track.clone(), key_state, segments_by_annotation, report }
}

/// Counts of moves between consecutive annotations of different states.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    /// `counts[from][to]`, indexed by `State::index`; the diagonal stays 0.
    pub counts: [[u64; 3]; 3],
    pub warnings: Vec<String>,
}

impl TransitionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, from: State) -> u64 {
        self.counts[from.index()].iter().sum()
    }

    /// `None` when `from` has no outgoing transitions or `from == to`.
    pub fn probability(&self, from: State, to: State) -> Option<f64> {
        let row = self.row_total(from);
        (row > 0 && from != to).then(|| self.counts[from.index()][to.index()] as f64 / row as f64)
    }

    pub fn merge(&mut self, other: &TransitionMatrix) {
        for i in 0..3 {
            for j in 0..3 {
                self.counts[i][j] += other.counts[i][j];
            }
        }
    }

    pub fn to_table(&self, name: &str, scope: &str) -> ReportTable {
        let mut t = ReportTable::new(name, "transition_matrix")
            .text("scope")
            .text("from")
            .text("to")
            .int("count", None)
            .float("probability", None);
        for from in State::ALL {
            for to in State::ALL.into_iter().filter(|&to| to != from) {
                t.push(vec![
                    scope.into(),
                    from.symbol().into(),
                    to.symbol().into(),
                    self.counts[from.index()][to.index()].into(),
                    self.probability(from, to).into(),
                ]);
            }
        }
        t
    }
}

pub fn transition_matrix(track: &StateTrack) -> TransitionMatrix {
    let mut m = TransitionMatrix::default();
    for w in track.annotations.windows(2) {
        if w[0].state != w[1].state {
            m.counts[w[0].state.index()][w[1].state.index()] += 1;
        }
    }
    if m.total() == 0 {
        m.warnings.push("track has no transitions between different states".into());
    }
    m
}

fn by_language<'a>(overlays: &[&'a StateOverlay]) -> BTreeMap<String, Vec<&'a StateOverlay>> {
    let mut out: BTreeMap<String, Vec<&StateOverlay>> = BTreeMap::new();
    for o in overlays {
        out.entry(o.tree.target_lang.clone()).or_default().push(o);
    }
    out
}

/// Transition matrix per target language, merged over sessions.
pub fn transition_table(overlays: &[&StateOverlay]) -> ReportTable {
    let mut table: Option<ReportTable> = None;
    for (lang, group) in by_language(overlays) {
        let mut m = TransitionMatrix::default();
        for o in group {
            m.merge(&transition_matrix(&o.track));
        }
        let part = m.to_table("transitions", &lang);
        match table.as_mut() {
            Some(t) => t.rows.extend(part.rows),
            None => table = Some(part),
        }
    }
    table.unwrap_or_else(|| TransitionMatrix::default().to_table("transitions", "all")).param("merge", "sum of counts")
}

/// Number of annotations per state and language, with shares.
pub fn state_counts(overlays: &[&StateOverlay]) -> ReportTable {
    let mut t = ReportTable::new("state_counts", "state_counts")
        .text("scope")
        .text("state")
        .int("count", None)
        .float("pct", Some("%"))
        .int("total_duration", Some("ms"))
        .float("mean_duration", Some("ms"));
    for (lang, group) in by_language(overlays) {
        let mut counts = [0u64; 3];
        let mut durations = [0u64; 3];
        for a in group.iter().flat_map(|o| o.track.annotations.iter()) {
            counts[a.state.index()] += 1;
            durations[a.state.index()] += a.duration();
        }
        let total: u64 = counts.iter().sum();
        for s in State::ALL {
            let (c, d) = (counts[s.index()], durations[s.index()]);
            t.push(vec![
                lang.as_str().into(),
                s.symbol().into(),
                c.into(),
                (if total == 0 { f64::NAN } else { 100.0 * c as f64 / total as f64 }).into(),
                d.into(),
                (if c == 0 { f64::NAN } else { d as f64 / c as f64 }).into(),
            ]);
        }
    }
    t
}

/// Shares of A, D and C Tasks inside Hesitation and Flow, per language.
/// Returns warnings for states without Tasks, whose rows are omitted.
pub fn task_distribution_by_state(overlays: &[&StateOverlay]) -> (ReportTable, Vec<String>) {
    let mut t = ReportTable::new("task_distribution", "task_distribution_by_state")
        .text("scope")
        .text("state")
        .int("tasks", None)
        .float("A", None)
        .float("D", None)
        .float("C", None);
    let mut warnings = Vec::new();
    for (lang, group) in by_language(overlays) {
        for state in [State::H, State::F] {
            let mut counts: BTreeMap<TaskLabel, usize> = BTreeMap::new();
            for o in &group {
                for (i, seg) in o.tree.segments.iter().enumerate() {
                    if o.segment_state(i) == state {
                        for task in &seg.tasks {
                            *counts.entry(task.label).or_default() += 1;
                        }
                    }
                }
            }
            let total: usize = counts.values().sum();
            if total == 0 {
                warnings.push(format!("{lang}: no Tasks in state {state}; row omitted"));
                continue;
            }
            let share = |l: TaskLabel| Cell::Float(counts.get(&l).copied().unwrap_or(0) as f64 / total as f64);
            t.push(vec![
                lang.as_str().into(),
                state.symbol().into(),
                total.into(),
                share(TaskLabel::A),
                share(TaskLabel::D),
                share(TaskLabel::C),
            ]);
        }
    }
    (t, warnings)
}

/// The `k` most frequent TS labels per state and language; ties are broken
/// by label.
pub fn ts_label_ranking_by_state(overlays: &[&StateOverlay], k: usize) -> ReportTable {
    let mut t = ReportTable::new("ts_label_ranking", "ts_label_ranking_by_state")
        .text("scope")
        .text("state")
        .int("rank", None)
        .text("label")
        .int("count", None)
        .float("pct", Some("%"))
        .param("k", k);
    for (lang, group) in by_language(overlays) {
        for state in State::ALL {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for o in &group {
                for (i, seg) in o.tree.segments.iter().enumerate() {
                    if o.segment_state(i) == state {
                        *counts.entry(seg.label.as_str()).or_default() += 1;
                    }
                }
            }
            let total: usize = counts.values().sum();
            let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            for (rank, (label, count)) in ranked.into_iter().take(k).enumerate() {
                t.push(vec![
                    lang.as_str().into(),
                    state.symbol().into(),
                    (rank + 1).into(),
                    label.into(),
                    count.into(),
                    (100.0 * count as f64 / total as f64).into(),
                ]);
            }
        }
    }
    t
}

/// Per-session figures for one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStateStats {
    pub session_id: String,
    pub instances: usize,
    pub duration_per_instance: f64,
    pub keys_per_instance: f64,
    pub ts_per_instance: f64,
    pub tasks_per_instance: f64,
    /// Ratio of totals over the session's instances; `None` without TSs.
    pub keys_per_ts: Option<f64>,
    pub keys_per_task: Option<f64>,
}

pub fn session_state_stats(o: &StateOverlay, state: State) -> Option<SessionStateStats> {
    let idx: Vec<usize> = (0..o.track.annotations.len()).filter(|&i| o.track.annotations[i].state == state).collect();
    if idx.is_empty() {
        return None;
    }
    let (mut dur, mut keys, mut ts, mut tasks) = (0u64, 0usize, 0usize, 0usize);
    for &i in &idx {
        dur += o.track.annotations[i].duration();
        for &s in &o.segments_by_annotation[i] {
            let seg = &o.tree.segments[s];
            keys += seg.keystrokes();
            ts += 1;
            tasks += seg.tasks.len();
        }
    }
    let n = idx.len() as f64;
    Some(SessionStateStats {
        session_id: o.tree.session_id.clone(),
        instances: idx.len(),
        duration_per_instance: dur as f64 / n,
        keys_per_instance: keys as f64 / n,
        ts_per_instance: ts as f64 / n,
        tasks_per_instance: tasks as f64 / n,
        keys_per_ts: (ts > 0).then(|| keys as f64 / ts as f64),
        keys_per_task: (tasks > 0).then(|| keys as f64 / tasks as f64),
    })
}

/// Min, mean and max across sessions of the per-session means for one
/// state, per language.
pub fn state_summary(overlays: &[&StateOverlay], state: State) -> Result<ReportTable, HofError> {
    let mut t = ReportTable::new(&format!("state_summary_{}", state.symbol()), "state_summary")
        .text("scope")
        .text("statistic")
        .int("sessions", None)
        .float("duration", Some("ms"))
        .float("keys", None)
        .float("ts", None)
        .float("tasks", None)
        .float("keys_per_ts", None)
        .float("keys_per_task", None)
        .param("state", state.symbol())
        .param("aggregation", "per-session means, then min/mean/max across sessions");
    let mut any = false;
    for (lang, group) in by_language(overlays) {
        let rows: Vec<SessionStateStats> = group.iter().filter_map(|o| session_state_stats(o, state)).collect();
        if rows.is_empty() {
            continue;
        }
        any = true;
        let fields: [Vec<f64>; 6] = [
            rows.iter().map(|r| r.duration_per_instance).collect(),
            rows.iter().map(|r| r.keys_per_instance).collect(),
            rows.iter().map(|r| r.ts_per_instance).collect(),
            rows.iter().map(|r| r.tasks_per_instance).collect(),
            rows.iter().filter_map(|r| r.keys_per_ts).collect(),
            rows.iter().filter_map(|r| r.keys_per_task).collect(),
        ];
        type Agg = fn(&[f64]) -> f64;
        let aggs: [(&str, Agg); 3] = [
            ("min", |v| v.iter().copied().fold(f64::INFINITY, f64::min)),
            ("mean", |v| v.iter().sum::<f64>() / v.len() as f64),
            ("max", |v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        ];
        for (name, agg) in aggs {
            let mut row: Vec<Cell> = vec![lang.as_str().into(), name.into(), rows.len().into()];
            row.extend(fields.iter().map(|v| if v.is_empty() { Cell::Null } else { agg(v).into() }));
            t.push(row);
        }
    }
    if any { Ok(t) } else { Err(HofError::StateAbsent(state)) }
}

/// Time inside `[start, end)` covered by inter-key gaps of at least `tsp`.
pub fn pause_time_in(times: &[Millis], tsp: f64, start: Millis, end: Millis) -> Millis {
    times
        .windows(2)
        .filter(|w| (w[1] - w[0]) as f64 >= tsp)
        .map(|w| {
            let (a, b) = (w[0].max(start), w[1].min(end));
            b.saturating_sub(a)
        })
        .sum()
}

/// Share of each state's time spent in TSP-class pauses, per language,
/// pooled over instances.
pub fn pause_fraction_by_state(overlays: &[&StateOverlay]) -> ReportTable {
    let mut t = ReportTable::new("pause_fraction", "pause_fraction_by_state")
        .text("scope")
        .text("state")
        .int("state_time", Some("ms"))
        .int("pause_time", Some("ms"))
        .float("fraction", None);
    for (lang, group) in by_language(overlays) {
        let mut totals = [(0u64, 0u64); 3];
        for o in &group {
            let times: Vec<Millis> = o.tree.keys.iter().map(|k| k.time).collect();
            for a in &o.track.annotations {
                let e = &mut totals[a.state.index()];
                e.0 += a.duration();
                e.1 += pause_time_in(&times, o.tree.thresholds.tsp, a.start, a.end);
            }
        }
        for s in State::ALL {
            let (dur, pause) = totals[s.index()];
            if dur == 0 {
                continue;
            }
            t.push(vec![
                lang.as_str().into(),
                s.symbol().into(),
                dur.into(),
                pause.into(),
                (pause as f64 / dur as f64).into(),
            ]);
        }
    }
    t
}

/// Share of each state's annotated time covered by each AU type.
pub fn au_share_by_state(track: &StateTrack, units: &[ActivityUnit]) -> BTreeMap<(State, AuType), f64> {
    let mut time: BTreeMap<(State, AuType), u64> = BTreeMap::new();
    let mut totals = [0u64; 3];
    for a in &track.annotations {
        totals[a.state.index()] += a.duration();
        for u in units {
            let overlap = u.end.min(a.end).saturating_sub(u.start.max(a.start));
            if overlap > 0 {
                *time.entry((a.state, u.kind)).or_default() += overlap;
            }
        }
    }
    time.into_iter().map(|(k, v)| (k, v as f64 / totals[k.0.index()] as f64)).collect()
}
