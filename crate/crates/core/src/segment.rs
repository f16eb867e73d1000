//! Motor programs, Tasks and Task Segments.
//!
//! Every IKI is compared with three thresholds: below `delay` the two keys
//! belong to one motor program, below `rsp` to one Task, below `tsp` to one
//! Task Segment. Intervals are closed on the left, so an IKI equal to `rsp`
//! already separates two Tasks. A pause belongs to the unit that follows it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iki::{TranslatorProfile, DEFAULT_DELAY_MS};
use crate::report::{Cell, ReportTable};
use crate::session::{KeyEvent, KeyKind, Millis, SessionLog};
use crate::stats::{self, RankFlavor, TestResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentError {
    #[error("invalid thresholds: delay={delay}, rsp={rsp}, tsp={tsp} (need 0 < delay, 0 < rsp < tsp)")]
    InvalidThresholds { delay: f64, rsp: f64, tsp: f64 },
    #[error("profile for translator `{0}` is not usable: TSP does not exceed RSP")]
    InvalidProfile(String),
    #[error("no profile for translator `{0}`")]
    MissingProfile(String),
    #[error("session has no keystrokes")]
    NoKeystrokes,
    #[error("not enough data: {0}")]
    InsufficientData(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub delay: f64,
    pub rsp: f64,
    pub tsp: f64,
}

impl Thresholds {
    pub fn new(delay: f64, rsp: f64, tsp: f64) -> Result<Self, SegmentError> {
        let ok = delay > 0.0 && rsp > 0.0 && rsp < tsp && tsp.is_finite();
        if ok {
            Ok(Thresholds { delay, rsp, tsp })
        } else {
            Err(SegmentError::InvalidThresholds { delay, rsp, tsp })
        }
    }

    /// Uses the profile's effective (floored) RSP.
    pub fn from_profile(profile: &TranslatorProfile, delay: f64) -> Result<Self, SegmentError> {
        if !profile.valid {
            return Err(SegmentError::InvalidProfile(profile.translator_id.clone()));
        }
        Thresholds::new(delay, profile.rsp_effective, profile.tsp)
    }

    pub fn classify(&self, iki: Millis) -> PauseClass {
        let v = iki as f64;
        if v >= self.tsp {
            PauseClass::TaskSegmentPause
        } else if v >= self.rsp {
            PauseClass::Respite
        } else if v >= self.delay {
            PauseClass::Gap
        } else {
            PauseClass::Delay
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { delay: DEFAULT_DELAY_MS, rsp: 400.0, tsp: 1200.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PauseClass {
    /// Inside a motor program.
    Delay,
    /// Between motor programs of one Task.
    Gap,
    /// Between Tasks of one Task Segment.
    Respite,
    /// Between Task Segments.
    TaskSegmentPause,
}

/// The only keystroke facts segmentation needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyStamp {
    pub time: Millis,
    pub kind: KeyKind,
}

impl From<&KeyEvent> for KeyStamp {
    fn from(k: &KeyEvent) -> Self {
        KeyStamp { time: k.time, kind: k.kind }
    }
}

pub fn stamps(keys: &[KeyEvent]) -> Vec<KeyStamp> {
    keys.iter().map(KeyStamp::from).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotorProgram {
    pub first: usize,
    pub last: usize,
    pub start: Millis,
    pub end: Millis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskLabel {
    A,
    D,
    C,
}

impl TaskLabel {
    pub fn as_char(self) -> char {
        match self {
            TaskLabel::A => 'A',
            TaskLabel::D => 'D',
            TaskLabel::C => 'C',
        }
    }
}

impl fmt::Display for TaskLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    /// Inclusive key index range.
    pub first: usize,
    pub last: usize,
    pub start: Millis,
    pub end: Millis,
    pub label: TaskLabel,
    /// `None` for the first Task of a session.
    pub preceding_pause: Option<Millis>,
    pub motor_programs: Vec<MotorProgram>,
}

impl Task {
    pub fn keystrokes(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn duration(&self) -> Millis {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSegment {
    pub first: usize,
    pub last: usize,
    pub start: Millis,
    pub end: Millis,
    pub label: String,
    pub preceding_pause: Option<Millis>,
    /// Mean IKI between the segment's own keys; `None` for one-key segments.
    pub mean_internal_iki: Option<f64>,
    pub tasks: Vec<Task>,
}

impl TaskSegment {
    pub fn keystrokes(&self) -> usize {
        self.last - self.first + 1
    }

    /// First to last keystroke; the preceding pause is not included.
    pub fn duration(&self) -> Millis {
        self.end - self.start
    }

    pub fn is_a_only(&self) -> bool {
        self.label.chars().all(|c| c == 'A')
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationTree {
    pub session_id: String,
    pub translator_id: String,
    pub target_lang: String,
    pub thresholds: Thresholds,
    pub segments: Vec<TaskSegment>,
    #[serde(skip)]
    pub keys: Vec<KeyStamp>,
}

impl SegmentationTree {
    pub fn key_count(&self) -> usize {
        self.keys.len()
    }

    pub fn tasks(&self) -> impl Iterator<Item = &Task> {
        self.segments.iter().flat_map(|s| s.tasks.iter())
    }

    pub fn task_count(&self) -> usize {
        self.segments.iter().map(|s| s.tasks.len()).sum()
    }

    pub fn motor_programs(&self) -> impl Iterator<Item = &MotorProgram> {
        self.tasks().flat_map(|t| t.motor_programs.iter())
    }
}

/// What separates key `i` from key `i - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Break {
    None,
    Program,
    Task,
    Segment,
}

pub(crate) fn natural_breaks(keys: &[KeyStamp], th: &Thresholds) -> Vec<Break> {
    let mut out = Vec::with_capacity(keys.len());
    out.push(Break::Segment);
    for w in keys.windows(2) {
        out.push(match th.classify(w[1].time - w[0].time) {
            PauseClass::Delay => Break::None,
            PauseClass::Gap => Break::Program,
            PauseClass::Respite => Break::Task,
            PauseClass::TaskSegmentPause => Break::Segment,
        });
    }
    out
}

pub fn label_task(kinds: impl IntoIterator<Item = KeyKind>) -> TaskLabel {
    let (mut ins, mut del) = (false, false);
    for k in kinds {
        match k {
            KeyKind::Insertion => ins = true,
            KeyKind::Deletion => del = true,
        }
    }
    match (ins, del) {
        (true, false) => TaskLabel::A,
        (false, true) => TaskLabel::D,
        _ => TaskLabel::C,
    }
}

fn pause_before(keys: &[KeyStamp], i: usize) -> Option<Millis> {
    (i > 0).then(|| keys[i].time - keys[i - 1].time)
}

/// Assembles the hierarchy from per-key breaks. `breaks[0]` is ignored.
pub(crate) fn build_segments(keys: &[KeyStamp], breaks: &[Break]) -> Vec<TaskSegment> {
    debug_assert_eq!(keys.len(), breaks.len());
    let mut segments: Vec<TaskSegment> = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        // one Task Segment: [i, seg_end)
        let mut seg_end = i + 1;
        while seg_end < keys.len() && breaks[seg_end] < Break::Segment {
            seg_end += 1;
        }
        let mut tasks = Vec::new();
        let mut t = i;
        while t < seg_end {
            let mut task_end = t + 1;
            while task_end < seg_end && breaks[task_end] < Break::Task {
                task_end += 1;
            }
            let mut programs = Vec::new();
            let mut p = t;
            while p < task_end {
                let mut prog_end = p + 1;
                while prog_end < task_end && breaks[prog_end] == Break::None {
                    prog_end += 1;
                }
                programs.push(MotorProgram { first: p, last: prog_end - 1, start: keys[p].time, end: keys[prog_end - 1].time });
                p = prog_end;
            }
            tasks.push(Task {
                first: t,
                last: task_end - 1,
                start: keys[t].time,
                end: keys[task_end - 1].time,
                label: label_task(keys[t..task_end].iter().map(|k| k.kind)),
                preceding_pause: pause_before(keys, t),
                motor_programs: programs,
            });
            t = task_end;
        }
        let n = seg_end - i;
        let mean_internal_iki = (n > 1).then(|| (keys[seg_end - 1].time - keys[i].time) as f64 / (n - 1) as f64);
        segments.push(TaskSegment {
            first: i,
            last: seg_end - 1,
            start: keys[i].time,
            end: keys[seg_end - 1].time,
            label: tasks.iter().map(|t| t.label.as_char()).collect(),
            preceding_pause: pause_before(keys, i),
            mean_internal_iki,
            tasks,
        });
        i = seg_end;
    }
    segments
}

/// Maximal runs of keys whose internal IKIs are all `< delay`.
pub fn split_motor_programs(keys: &[KeyStamp], delay: f64) -> Vec<MotorProgram> {
    let mut out = Vec::new();
    let mut first = 0;
    for i in 1..=keys.len() {
        if i == keys.len() || (keys[i].time - keys[i - 1].time) as f64 >= delay {
            if i > first {
                out.push(MotorProgram { first, last: i - 1, start: keys[first].time, end: keys[i - 1].time });
            }
            first = i;
        }
    }
    out
}

/// Tasks separated by IKIs `>= rsp` (not grouped into segments).
pub fn split_tasks(keys: &[KeyStamp], th: &Thresholds) -> Vec<Task> {
    let breaks: Vec<Break> = natural_breaks(keys, th)
        .into_iter()
        .map(|b| if b == Break::Segment { Break::Task } else { b })
        .collect();
    build_segments(keys, &breaks).into_iter().flat_map(|s| s.tasks).collect()
}

/// Groups consecutive Tasks; a Task opens a new segment iff its preceding
/// pause is `>= tsp`.
pub fn split_task_segments(keys: &[KeyStamp], tasks: Vec<Task>, th: &Thresholds) -> Vec<TaskSegment> {
    let mut out: Vec<TaskSegment> = Vec::new();
    for task in tasks {
        let opens = match (task.preceding_pause, out.last()) {
            (_, None) => true,
            (Some(p), Some(_)) => p as f64 >= th.tsp,
            (None, Some(_)) => true,
        };
        if opens {
            out.push(TaskSegment {
                first: task.first,
                last: task.last,
                start: task.start,
                end: task.end,
                label: String::new(),
                preceding_pause: task.preceding_pause,
                mean_internal_iki: None,
                tasks: vec![],
            });
        }
        let seg = out.last_mut().expect("segment opened");
        seg.last = task.last;
        seg.end = task.end;
        seg.label.push(task.label.as_char());
        seg.tasks.push(task);
    }
    for seg in &mut out {
        let n = seg.keystrokes();
        seg.mean_internal_iki = (n > 1).then(|| (keys[seg.last].time - keys[seg.first].time) as f64 / (n - 1) as f64);
    }
    out
}

pub fn segment_keys(keys: &[KeyStamp], th: &Thresholds) -> Vec<TaskSegment> {
    build_segments(keys, &natural_breaks(keys, th))
}

pub fn segment_session(session: &SessionLog, th: &Thresholds) -> Result<SegmentationTree, SegmentError> {
    if session.keys.is_empty() {
        return Err(SegmentError::NoKeystrokes);
    }
    let keys = stamps(&session.keys);
    Ok(SegmentationTree {
        session_id: session.meta.session_id.clone(),
        translator_id: session.meta.translator_id.clone(),
        target_lang: session.meta.target_lang.clone(),
        thresholds: *th,
        segments: segment_keys(&keys, th),
        keys,
    })
}

/// Segments a session with its translator's profile.
pub fn segment_with_profiles(
    session: &SessionLog,
    profiles: &BTreeMap<String, TranslatorProfile>,
    delay: f64,
) -> Result<SegmentationTree, SegmentError> {
    let id = &session.meta.translator_id;
    let profile = profiles.get(id).ok_or_else(|| SegmentError::MissingProfile(id.clone()))?;
    segment_session(session, &Thresholds::from_profile(profile, delay)?)
}

/// One row per Task.
pub fn tasks_table(trees: &[&SegmentationTree]) -> ReportTable {
    let mut t = ReportTable::new("tasks", "segment")
        .text("session_id")
        .int("segment", None)
        .int("task", None)
        .int("first_key", None)
        .int("last_key", None)
        .int("start", Some("ms"))
        .int("end", Some("ms"))
        .int("duration", Some("ms"))
        .int("keystrokes", None)
        .int("motor_programs", None)
        .text("label")
        .text("segment_label")
        .int("preceding_pause", Some("ms"));
    for tree in trees {
        for (si, seg) in tree.segments.iter().enumerate() {
            for (ti, task) in seg.tasks.iter().enumerate() {
                t.push(vec![
                    tree.session_id.as_str().into(),
                    si.into(),
                    ti.into(),
                    task.first.into(),
                    task.last.into(),
                    task.start.into(),
                    task.end.into(),
                    task.duration().into(),
                    task.keystrokes().into(),
                    task.motor_programs.len().into(),
                    task.label.to_string().into(),
                    seg.label.as_str().into(),
                    task.preceding_pause.into(),
                ]);
            }
        }
    }
    t
}

fn languages(trees: &[&SegmentationTree]) -> BTreeSet<String> {
    trees.iter().map(|t| t.target_lang.clone()).collect()
}

#[derive(Default)]
struct LabelAcc {
    count: usize,
    per_lang: BTreeMap<String, usize>,
    duration_sum: f64,
    iki_sum: f64,
    iki_n: usize,
    keys_per_task_sum: f64,
}

/// Frequency of each TS label with per-language shares, mean duration, mean
/// internal IKI and mean keys per Task. Most frequent first; ties by label.
pub fn corpus_ts_summary(trees: &[&SegmentationTree]) -> ReportTable {
    let langs = languages(trees);
    let mut lang_totals: BTreeMap<String, usize> = BTreeMap::new();
    let mut acc: BTreeMap<&str, LabelAcc> = BTreeMap::new();
    for tree in trees {
        for seg in &tree.segments {
            *lang_totals.entry(tree.target_lang.clone()).or_default() += 1;
            let a = acc.entry(seg.label.as_str()).or_default();
            a.count += 1;
            *a.per_lang.entry(tree.target_lang.clone()).or_default() += 1;
            a.duration_sum += seg.duration() as f64;
            if let Some(m) = seg.mean_internal_iki {
                a.iki_sum += m;
                a.iki_n += 1;
            }
            a.keys_per_task_sum += seg.keystrokes() as f64 / seg.tasks.len() as f64;
        }
    }
    let total: usize = lang_totals.values().sum();
    let mut table = ReportTable::new("ts_summary", "corpus_ts_summary").text("label").int("count", None);
    table = table.float("pct", Some("%"));
    for lang in &langs {
        table = table.int(&format!("count_{lang}"), None).float(&format!("pct_{lang}"), Some("%"));
    }
    table = table
        .float("mean_duration", Some("ms"))
        .float("mean_iki", Some("ms"))
        .float("keys_per_task", None)
        .param("sessions", trees.len())
        .param("segments", total);
    let mut ordered: Vec<(&str, LabelAcc)> = acc.into_iter().collect();
    ordered.sort_by(|x, y| y.1.count.cmp(&x.1.count).then_with(|| x.0.cmp(y.0)));
    for (label, a) in ordered {
        let mut row: Vec<Cell> = vec![label.into(), a.count.into(), (100.0 * a.count as f64 / total as f64).into()];
        for lang in &langs {
            let c = a.per_lang.get(lang).copied().unwrap_or(0);
            let lt = lang_totals.get(lang).copied().unwrap_or(0);
            row.push(c.into());
            row.push(if lt == 0 { Cell::Null } else { (100.0 * c as f64 / lt as f64).into() });
        }
        row.push((a.duration_sum / a.count as f64).into());
        row.push(if a.iki_n == 0 { Cell::Null } else { (a.iki_sum / a.iki_n as f64).into() });
        row.push((a.keys_per_task_sum / a.count as f64).into());
        table.push(row);
    }
    table
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadStats {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

impl SpreadStats {
    pub fn of(values: &[f64]) -> Option<SpreadStats> {
        if values.is_empty() {
            return None;
        }
        Some(SpreadStats {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            median: stats::median(values).ok()?,
            mean: stats::mean(values).ok()?,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Corpus-level counts of the hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsOverview {
    pub sessions: usize,
    pub keystrokes: usize,
    pub tasks: usize,
    pub segments: usize,
    pub distinct_labels: usize,
    /// Tasks per TS over all TSs.
    pub tasks_per_ts: Option<SpreadStats>,
    /// Number of Tasks per TS label, i.e. label length over distinct labels.
    pub tasks_per_label: Option<SpreadStats>,
    pub ts_duration: Option<SpreadStats>,
}

pub fn corpus_overview(trees: &[&SegmentationTree]) -> TsOverview {
    let segs: Vec<&TaskSegment> = trees.iter().flat_map(|t| t.segments.iter()).collect();
    let labels: BTreeSet<&str> = segs.iter().map(|s| s.label.as_str()).collect();
    let tpt: Vec<f64> = segs.iter().map(|s| s.tasks.len() as f64).collect();
    let tpl: Vec<f64> = labels.iter().map(|l| l.chars().count() as f64).collect();
    let dur: Vec<f64> = segs.iter().map(|s| s.duration() as f64).collect();
    TsOverview {
        sessions: trees.len(),
        keystrokes: trees.iter().map(|t| t.key_count()).sum(),
        tasks: trees.iter().map(|t| t.task_count()).sum(),
        segments: segs.len(),
        distinct_labels: labels.len(),
        tasks_per_ts: SpreadStats::of(&tpt),
        tasks_per_label: SpreadStats::of(&tpl),
        ts_duration: SpreadStats::of(&dur),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ACoverage {
    pub segments: usize,
    pub a_only_segments: usize,
    pub keystrokes: usize,
    pub a_only_keystrokes: usize,
    pub segment_fraction: f64,
    pub keystroke_fraction: f64,
}

/// Share of TSs whose label is all `A`, and the share of keystrokes in them.
pub fn a_only_coverage(trees: &[&SegmentationTree]) -> ACoverage {
    let (mut segments, mut a_segs, mut keys, mut a_keys) = (0, 0, 0, 0);
    for seg in trees.iter().flat_map(|t| t.segments.iter()) {
        segments += 1;
        keys += seg.keystrokes();
        if seg.is_a_only() {
            a_segs += 1;
            a_keys += seg.keystrokes();
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    ACoverage {
        segments,
        a_only_segments: a_segs,
        keystrokes: keys,
        a_only_keystrokes: a_keys,
        segment_fraction: ratio(a_segs, segments),
        keystroke_fraction: ratio(a_keys, keys),
    }
}

#[derive(Default)]
struct TranslatorAcc {
    tasks_per_ts: Vec<f64>,
    keys_per_ts: Vec<f64>,
    keys_per_task: Vec<f64>,
}

fn mean_of(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Rank correlations over per-translator means, per target language and
/// over the whole corpus: Tasks/TS against keys/TS, Tasks/TS against
/// keys/Task, and RSP against TSP. Both Spearman's rho and Kendall's tau-b.
pub fn hierarchy_correlations(
    trees: &[&SegmentationTree],
    profiles: &BTreeMap<String, TranslatorProfile>,
) -> Result<ReportTable, SegmentError> {
    let mut scopes: BTreeMap<String, BTreeMap<String, TranslatorAcc>> = BTreeMap::new();
    for tree in trees {
        for scope in [tree.target_lang.clone(), "all".to_string()] {
            let acc = scopes.entry(scope).or_default().entry(tree.translator_id.clone()).or_default();
            for seg in &tree.segments {
                acc.tasks_per_ts.push(seg.tasks.len() as f64);
                acc.keys_per_ts.push(seg.keystrokes() as f64);
                acc.keys_per_task.push(seg.keystrokes() as f64 / seg.tasks.len() as f64);
            }
        }
    }
    let mut table = ReportTable::new("hierarchy_correlations", "hierarchy_correlations")
        .text("scope")
        .text("x")
        .text("y")
        .text("flavor")
        .int("n", None)
        .float("coefficient", None)
        .float("p_value", None)
        .text("method")
        .text("note")
        .param("unit", "translator");
    let mut computed = 0;
    for (scope, by_translator) in &scopes {
        let ids: Vec<&String> = by_translator.keys().collect();
        let col = |f: &dyn Fn(&TranslatorAcc) -> f64| -> Vec<f64> { ids.iter().map(|id| f(&by_translator[*id])).collect() };
        let tasks_per_ts = col(&|a| mean_of(&a.tasks_per_ts));
        let keys_per_ts = col(&|a| mean_of(&a.keys_per_ts));
        let keys_per_task = col(&|a| mean_of(&a.keys_per_task));
        let with_profile: Vec<&TranslatorProfile> = ids.iter().filter_map(|id| profiles.get(*id)).collect();
        let rsp: Vec<f64> = with_profile.iter().map(|p| p.rsp).collect();
        let tsp: Vec<f64> = with_profile.iter().map(|p| p.tsp).collect();
        let pairs: [(&str, &str, &[f64], &[f64]); 3] = [
            ("tasks_per_ts", "keys_per_ts", &tasks_per_ts, &keys_per_ts),
            ("tasks_per_ts", "keys_per_task", &tasks_per_ts, &keys_per_task),
            ("rsp", "tsp", &rsp, &tsp),
        ];
        for (xn, yn, x, y) in pairs {
            for flavor in [RankFlavor::SpearmanRho, RankFlavor::KendallTau] {
                let mut row: Vec<Cell> = vec![scope.as_str().into(), xn.into(), yn.into(), flavor.name().into(), x.len().into()];
                match stats::rank_correlation(x, y, flavor) {
                    Ok(TestResult { statistic, p_value, method, .. }) => {
                        computed += 1;
                        row.extend([statistic.into(), p_value.into(), format!("{method:?}").to_lowercase().into(), Cell::Null]);
                    }
                    Err(e) => row.extend([Cell::Null, Cell::Null, Cell::Null, e.to_string().into()]),
                }
                table.push(row);
            }
        }
    }
    if computed == 0 {
        return Err(SegmentError::InsufficientData("no correlation could be computed (need >= 3 translators)".into()));
    }
    Ok(table)
}
