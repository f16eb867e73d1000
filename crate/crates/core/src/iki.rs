//! Word-position keystroke classes, inter-keystroke intervals and
//! translator-relative pause thresholds.
//!
//! A keystroke is a *boundary* keystroke when its first character is in the
//! boundary set. Among the others, the first one after a boundary (or at the
//! start of the log) is *word-initial*, one immediately followed by a boundary
//! is *word-final*, and the rest are *within-word*. The IKI before a
//! within-word key is a WP sample and the IKI before a word-initial key a BP
//! sample. `RSP = 2 × median(WP)` and `TSP = 3 × median(BP)` per translator.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::ReportTable;
use crate::session::{KeyEvent, Millis, SessionLog};
use crate::stats::{self, quantile_sorted};

pub const DEFAULT_DELAY_MS: f64 = 200.0;
pub const DEFAULT_RSP_MULTIPLIER: f64 = 2.0;
pub const DEFAULT_TSP_MULTIPLIER: f64 = 3.0;

/// The default word-boundary characters. Blanks are logged as `_`.
pub const DEFAULT_BOUNDARY_CHARS: &str = "`\"“_.!?:=@$%&*()[]{}";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("keystroke {0} has empty text")]
    EmptyText(usize),
    #[error("translator `{0}` has no within-word (WP) samples")]
    NoWpSamples(String),
    #[error("translator `{0}` has no between-word (BP) samples")]
    NoBpSamples(String),
    #[error("empty sample")]
    EmptySample,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySet(BTreeSet<char>);

impl Default for BoundarySet {
    fn default() -> Self {
        BoundarySet::from_chars(DEFAULT_BOUNDARY_CHARS)
    }
}

impl BoundarySet {
    pub fn from_chars(chars: &str) -> Self {
        BoundarySet(chars.chars().collect())
    }

    pub fn contains(&self, c: char) -> bool {
        self.0.contains(&c)
    }

    pub fn chars(&self) -> String {
        self.0.iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyClass {
    Boundary,
    WordInitial,
    WithinWord,
    WordFinal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub boundary: BoundarySet,
    /// Report word-final keys as within-word.
    pub fold_word_final: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { boundary: BoundarySet::default(), fold_word_final: false }
    }
}

/// One class per keystroke. Multi-character keystrokes are judged by their
/// first character; a one-letter word between two boundaries is word-initial.
pub fn classify_keystrokes(keys: &[KeyEvent], boundary: &BoundarySet) -> Result<Vec<KeyClass>, ProfileError> {
    classify_with(keys, &ClassifyOptions { boundary: boundary.clone(), fold_word_final: false })
}

pub fn classify_with(keys: &[KeyEvent], opts: &ClassifyOptions) -> Result<Vec<KeyClass>, ProfileError> {
    let is_boundary = keys
        .iter()
        .enumerate()
        .map(|(i, k)| k.text.chars().next().map(|c| opts.boundary.contains(c)).ok_or(ProfileError::EmptyText(i)))
        .collect::<Result<Vec<bool>, _>>()?;
    Ok((0..keys.len())
        .map(|i| {
            if is_boundary[i] {
                KeyClass::Boundary
            } else if i == 0 || is_boundary[i - 1] {
                KeyClass::WordInitial
            } else if is_boundary.get(i + 1) == Some(&true) && !opts.fold_word_final {
                KeyClass::WordFinal
            } else {
                KeyClass::WithinWord
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IkiRecord {
    /// Index of the later keystroke.
    pub index: usize,
    pub iki: Millis,
    pub class_of_later_key: KeyClass,
}

/// `n - 1` records for `n` keystrokes.
pub fn compute_ikis(keys: &[KeyEvent], classes: &[KeyClass]) -> Vec<IkiRecord> {
    debug_assert_eq!(keys.len(), classes.len());
    keys.windows(2)
        .zip(&classes[1..])
        .enumerate()
        .map(|(i, (w, &class))| IkiRecord { index: i + 1, iki: w[1].time.saturating_sub(w[0].time), class_of_later_key: class })
        .collect()
}

/// All IKIs of a session, regardless of class.
pub fn all_ikis(keys: &[KeyEvent]) -> Vec<Millis> {
    keys.windows(2).map(|w| w[1].time.saturating_sub(w[0].time)).collect()
}

/// WP and BP samples of one or more sessions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IkiSamples {
    pub wp: Vec<Millis>,
    pub bp: Vec<Millis>,
}

impl IkiSamples {
    pub fn from_records(records: &[IkiRecord]) -> Self {
        let mut out = IkiSamples::default();
        out.extend_records(records);
        out
    }

    fn extend_records(&mut self, records: &[IkiRecord]) {
        for r in records {
            match r.class_of_later_key {
                KeyClass::WithinWord => self.wp.push(r.iki),
                KeyClass::WordInitial => self.bp.push(r.iki),
                KeyClass::WordFinal | KeyClass::Boundary => {}
            }
        }
    }

    pub fn of_session(session: &SessionLog, opts: &ClassifyOptions) -> Result<Self, ProfileError> {
        let classes = classify_with(&session.keys, opts)?;
        Ok(IkiSamples::from_records(&compute_ikis(&session.keys, &classes)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub rsp_multiplier: f64,
    pub tsp_multiplier: f64,
    /// RSPs below this are raised to it; equal to the Delay threshold.
    pub rsp_floor: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            rsp_multiplier: DEFAULT_RSP_MULTIPLIER,
            tsp_multiplier: DEFAULT_TSP_MULTIPLIER,
            rsp_floor: DEFAULT_DELAY_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslatorProfile {
    pub translator_id: String,
    pub median_wp: f64,
    pub median_bp: f64,
    /// `rsp_multiplier × median_wp`, unclamped.
    pub rsp: f64,
    /// `tsp_multiplier × median_bp`.
    pub tsp: f64,
    pub n_wp: usize,
    pub n_bp: usize,
    /// The RSP actually used for segmentation (`max(rsp, rsp_floor)`).
    pub rsp_effective: f64,
    pub valid: bool,
    pub warnings: Vec<String>,
}

impl TranslatorProfile {
    pub fn rsp_clamped(&self) -> bool {
        self.rsp_effective != self.rsp
    }
}

pub fn profile_from_samples(
    translator_id: &str,
    samples: &IkiSamples,
    params: &ProfileParams,
) -> Result<TranslatorProfile, ProfileError> {
    let median_wp = stats::median_ms(&samples.wp).ok_or_else(|| ProfileError::NoWpSamples(translator_id.to_string()))?;
    let median_bp = stats::median_ms(&samples.bp).ok_or_else(|| ProfileError::NoBpSamples(translator_id.to_string()))?;
    let rsp = params.rsp_multiplier * median_wp;
    let tsp = params.tsp_multiplier * median_bp;
    let mut warnings = Vec::new();
    let rsp_effective = if rsp < params.rsp_floor {
        warnings.push(format!("RSP {rsp} ms below the {} ms Delay threshold; clamped", params.rsp_floor));
        params.rsp_floor
    } else {
        rsp
    };
    let valid = tsp > rsp_effective;
    if !valid {
        warnings.push(format!("TSP {tsp} ms does not exceed RSP {rsp_effective} ms"));
    }
    Ok(TranslatorProfile {
        translator_id: translator_id.to_string(),
        median_wp,
        median_bp,
        rsp,
        tsp,
        n_wp: samples.wp.len(),
        n_bp: samples.bp.len(),
        rsp_effective,
        valid,
        warnings,
    })
}

/// Profile over all given sessions of one translator, pooling their samples.
pub fn build_profile(
    translator_id: &str,
    sessions: &[&SessionLog],
    opts: &ClassifyOptions,
    params: &ProfileParams,
) -> Result<TranslatorProfile, ProfileError> {
    let mut pooled = IkiSamples::default();
    for s in sessions {
        let classes = classify_with(&s.keys, opts)?;
        pooled.extend_records(&compute_ikis(&s.keys, &classes));
    }
    profile_from_samples(translator_id, &pooled, params)
}

/// One profile per translator id, computed in parallel. Only sessions for
/// which `include` holds contribute (e.g. from-scratch translations).
pub fn build_profiles<'a, I, F>(
    sessions: I,
    include: F,
    opts: &ClassifyOptions,
    params: &ProfileParams,
) -> BTreeMap<String, Result<TranslatorProfile, ProfileError>>
where
    I: IntoIterator<Item = &'a SessionLog>,
    F: Fn(&SessionLog) -> bool,
{
    let mut by_translator: BTreeMap<String, Vec<&SessionLog>> = BTreeMap::new();
    for s in sessions.into_iter().filter(|s| include(s)) {
        by_translator.entry(s.meta.translator_id.clone()).or_default().push(s);
    }
    let groups: Vec<(String, Vec<&SessionLog>)> = by_translator.into_iter().collect();
    groups
        .par_iter()
        .map(|(id, group)| (id.clone(), build_profile(id, group, opts, params)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// `(probe, value)` pairs.
    pub quantiles: Vec<(f64, f64)>,
    /// Empirical CDF at each distinct sample value.
    pub cdf: Vec<CdfPoint>,
    pub histogram: Vec<HistogramBin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kde: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionOptions {
    pub probes: Vec<f64>,
    /// Fixed histogram bin width; Freedman–Diaconis when `None`.
    pub bin_width: Option<f64>,
    pub max_bins: usize,
    /// Gaussian KDE with Silverman's bandwidth, for display only.
    pub kde: bool,
    pub kde_points: usize,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        DistributionOptions {
            probes: vec![0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95],
            bin_width: None,
            max_bins: 400,
            kde: false,
            kde_points: 256,
        }
    }
}

impl DistributionSummary {
    /// `F(x)`: share of the sample at or below `x`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        match self.cdf.partition_point(|pt| pt.x <= x) {
            0 => 0.0,
            k => self.cdf[k - 1].p,
        }
    }

    /// Smallest sample value `v` with `F(v) >= p`.
    pub fn inverse_cdf(&self, p: f64) -> f64 {
        self.cdf.iter().find(|pt| pt.p >= p).map_or(self.max, |pt| pt.x)
    }
}

pub fn iki_distribution(sample: &[f64], opts: &DistributionOptions) -> Result<DistributionSummary, ProfileError> {
    if sample.is_empty() || sample.iter().any(|v| !v.is_finite()) {
        return Err(ProfileError::EmptySample);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let nf = n as f64;
    let mean = sorted.iter().sum::<f64>() / nf;
    let median = quantile_sorted(&sorted, 0.5);
    let (min, max) = (sorted[0], sorted[n - 1]);

    let mut cdf = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        if i + 1 == n || sorted[i + 1] != x {
            cdf.push(CdfPoint { x, p: (i + 1) as f64 / nf });
        }
    }
    if let Some(last) = cdf.last_mut() {
        last.p = 1.0;
    }

    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let range = max - min;
    let mut width = opts.bin_width.unwrap_or_else(|| {
        let fd = 2.0 * iqr / nf.cbrt();
        if fd > 0.0 { fd } else { (range / 10.0).max(1.0) }
    });
    if width <= 0.0 {
        width = 1.0;
    }
    let max_bins = opts.max_bins.max(1);
    if range / width > max_bins as f64 {
        width = range / max_bins as f64;
    }
    let bins = ((range / width).floor() as usize + 1).min(max_bins).max(1);
    let mut histogram: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin { lo: min + b as f64 * width, hi: min + (b + 1) as f64 * width, count: 0 })
        .collect();
    for &x in &sorted {
        let b = (((x - min) / width).floor() as usize).min(bins - 1);
        histogram[b].count += 1;
    }

    let (kde, bandwidth) = if opts.kde {
        let sd = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0).max(1.0)).sqrt();
        let spread = sd.min(iqr / 1.34);
        let spread = if spread > 0.0 { spread } else if sd > 0.0 { sd } else { 1.0 };
        let h = 0.9 * spread * nf.powf(-0.2);
        let points = opts.kde_points.max(2);
        let (lo, hi) = (min - 3.0 * h, max + 3.0 * h);
        let norm = 1.0 / (nf * h * (2.0 * std::f64::consts::PI).sqrt());
        let grid = (0..points)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
                let y = sorted.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>() * norm;
                (x, y)
            })
            .collect();
        (Some(grid), Some(h))
    } else {
        (None, None)
    };

    Ok(DistributionSummary {
        count: n,
        mean,
        median,
        min,
        max,
        quantiles: opts.probes.iter().map(|&p| (p, quantile_sorted(&sorted, p.clamp(0.0, 1.0)))).collect(),
        cdf,
        histogram,
        kde,
        bandwidth,
    })
}

/// One row per translator.
pub fn profiles_table(profiles: &[&TranslatorProfile]) -> ReportTable {
    let mut t = ReportTable::new("profiles", "build_profiles")
        .text("translator_id")
        .float("median_wp", Some("ms"))
        .float("median_bp", Some("ms"))
        .float("rsp", Some("ms"))
        .float("tsp", Some("ms"))
        .float("rsp_effective", Some("ms"))
        .int("n_wp", None)
        .int("n_bp", None)
        .boolean("valid")
        .text("warnings");
    for p in profiles {
        t.push(vec![
            p.translator_id.as_str().into(),
            p.median_wp.into(),
            p.median_bp.into(),
            p.rsp.into(),
            p.tsp.into(),
            p.rsp_effective.into(),
            p.n_wp.into(),
            p.n_bp.into(),
            p.valid.into(),
            p.warnings.join("; ").into(),
        ]);
    }
    t
}

/// Min / max / mean / median of RSP and TSP over translators, per group
/// (typically the target language) and over all groups.
pub fn profile_spread_table(profiles: &[(&str, &TranslatorProfile)]) -> ReportTable {
    let mut t = ReportTable::new("profile_spread", "profile_spread")
        .text("scope")
        .text("threshold")
        .int("n", None)
        .float("min", Some("ms"))
        .float("max", Some("ms"))
        .float("mean", Some("ms"))
        .float("median", Some("ms"));
    let mut groups: BTreeMap<&str, Vec<&TranslatorProfile>> = BTreeMap::new();
    for &(g, p) in profiles {
        groups.entry(g).or_default().push(p);
    }
    let all: Vec<&TranslatorProfile> = profiles.iter().map(|p| p.1).collect();
    let scopes = groups.into_iter().chain((!all.is_empty()).then_some(("all", all)));
    for (scope, group) in scopes {
        for (name, f) in [("rsp", (|p: &TranslatorProfile| p.rsp) as fn(&TranslatorProfile) -> f64), ("tsp", |p| p.tsp)] {
            let v: Vec<f64> = group.iter().map(|p| f(p)).collect();
            t.push(vec![
                scope.into(),
                name.into(),
                v.len().into(),
                v.iter().copied().fold(f64::INFINITY, f64::min).into(),
                v.iter().copied().fold(f64::NEG_INFINITY, f64::max).into(),
                stats::mean(&v).ok().into(),
                stats::median(&v).ok().into(),
            ]);
        }
    }
    t
}

/// Count, mean and median of all IKIs per study.
pub fn iki_summary_table(sessions: &[&SessionLog]) -> ReportTable {
    let mut t = ReportTable::new("iki_summary", "iki_summary")
        .text("study_id")
        .int("sessions", None)
        .int("n", None)
        .float("mean", Some("ms"))
        .float("median", Some("ms"));
    let mut by_study: BTreeMap<&str, (usize, Vec<f64>)> = BTreeMap::new();
    for s in sessions {
        let e = by_study.entry(s.meta.study_id.as_str()).or_default();
        e.0 += 1;
        e.1.extend(all_ikis(&s.keys).into_iter().map(|v| v as f64));
    }
    for (study, (n_sessions, v)) in by_study {
        t.push(vec![
            study.into(),
            n_sessions.into(),
            v.len().into(),
            stats::mean(&v).ok().into(),
            stats::median(&v).ok().into(),
        ]);
    }
    t
}
