//! Rule-based draft of an HOF annotation, meant to be corrected by hand.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::au::{ActivityUnit, AuType};
use crate::segment::SegmentationTree;
use crate::session::{KeyKind, Millis, State, StateAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuggestParams {
    /// Minimum length of a production-free stretch to become Orientation.
    pub orientation_min_ms: Millis,
    /// Minimum share of source reading (T1) in that stretch.
    pub orientation_t1_share: f64,
    /// Minimum share of deletions in the Tasks around a TSP-class pause for
    /// Hesitation.
    pub hesitation_deletion_share: f64,
}

impl Default for SuggestParams {
    fn default() -> Self {
        SuggestParams { orientation_min_ms: 2500, orientation_t1_share: 0.5, hesitation_deletion_share: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuggestedState {
    pub annotation: StateAnnotation,
    pub confidence: f64,
}

struct Candidate {
    start: Millis,
    end: Millis,
    state: State,
    confidence: f64,
}

fn orientation_candidates(aus: &[ActivityUnit], p: &SuggestParams) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < aus.len() {
        if aus[i].kind.is_production() {
            i += 1;
            continue;
        }
        let mut j = i;
        let mut t1 = 0;
        while j < aus.len() && !aus[j].kind.is_production() {
            if aus[j].kind == AuType::T1 {
                t1 += aus[j].duration();
            }
            j += 1;
        }
        let (start, end) = (aus[i].start, aus[j - 1].end);
        let share = t1 as f64 / (end - start) as f64;
        if end - start >= p.orientation_min_ms && share >= p.orientation_t1_share {
            out.push(Candidate { start, end, state: State::O, confidence: share });
        }
        i = j;
    }
    out
}

fn hesitation_candidates(tree: &SegmentationTree, p: &SuggestParams) -> Vec<Candidate> {
    let keys = &tree.keys;
    let tasks: Vec<_> = tree.tasks().collect();
    let mut out: Vec<Candidate> = Vec::new();
    for w in tasks.windows(2) {
        let pause = w[1].start - w[0].end;
        if (pause as f64) < tree.thresholds.tsp {
            continue;
        }
        let window = &keys[w[0].first..=w[1].last];
        let deletions = window.iter().filter(|k| k.kind == KeyKind::Deletion).count();
        let share = deletions as f64 / window.len() as f64;
        if share < p.hesitation_deletion_share {
            continue;
        }
        let (start, end) = (w[0].start, w[1].end + 1);
        match out.last_mut() {
            Some(last) if start <= last.end => {
                last.end = last.end.max(end);
                last.confidence = last.confidence.max(share);
            }
            _ => out.push(Candidate { start, end, state: State::H, confidence: share }),
        }
    }
    out
}

/// Drafts a full cover of `[span.0, span.1)` with states: Orientation for
/// long production-free stretches dominated by source reading, Hesitation
/// around TSP-class pauses with many deletions nearby, Flow elsewhere.
/// Earlier rules win where they overlap.
pub fn suggest_hof_states(
    tree: &SegmentationTree,
    aus: &[ActivityUnit],
    span: (Millis, Millis),
    params: &SuggestParams,
) -> Vec<SuggestedState> {
    let (lo, hi) = span;
    if hi <= lo {
        return Vec::new();
    }
    let layers = [orientation_candidates(aus, params), hesitation_candidates(tree, params)];
    let mut cuts: Vec<Millis> = vec![lo, hi];
    for c in layers.iter().flatten() {
        cuts.extend([c.start.clamp(lo, hi), c.end.clamp(lo, hi)]);
    }
    cuts.sort_unstable();
    cuts.dedup();

    let mut pieces: Vec<(Millis, Millis, State, Option<f64>)> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let hit = layers.iter().flatten().find(|c| c.start <= a && b <= c.end);
        let (state, conf) = hit.map_or((State::F, None), |c| (c.state, Some(c.confidence)));
        match pieces.last_mut() {
            Some(last) if last.2 == state && last.3 == conf => last.1 = b,
            _ => pieces.push((a, b, state, conf)),
        }
    }

    let production_share = |a: Millis, b: Millis| {
        let busy: Millis = aus
            .iter()
            .filter(|u| u.kind.is_production())
            .map(|u| u.end.min(b).saturating_sub(u.start.max(a)))
            .sum();
        busy as f64 / (b - a) as f64
    };
    let mut out: Vec<SuggestedState> = Vec::new();
    for (a, b, state, conf) in pieces {
        let confidence = conf.unwrap_or_else(|| production_share(a, b));
        match out.last_mut() {
            Some(last) if last.annotation.state == state => {
                let (d0, d1) = (last.annotation.duration() as f64, (b - a) as f64);
                last.confidence = (last.confidence * d0 + confidence * d1) / (d0 + d1);
                last.annotation.end = b;
            }
            _ => out.push(SuggestedState { annotation: StateAnnotation::new(a, b, state), confidence }),
        }
    }
    out
}

/// Annotation TSV with an extra `confidence` column; readable by
/// `parse_annotations`.
pub fn write_suggestions<W: Write>(states: &[SuggestedState], mut out: W) -> io::Result<()> {
    writeln!(out, "start\tend\tstate\tconfidence")?;
    for s in states {
        writeln!(
            out,
            "{}\t{}\t{}\t{:.3}",
            s.annotation.start, s.annotation.end, s.annotation.state, s.confidence
        )?;
    }
    Ok(())
}

/// Fraction of the reference's annotated time on which both tracks give the
/// same state.
pub fn agreement(suggested: &[StateAnnotation], reference: &[StateAnnotation]) -> f64 {
    let total: Millis = reference.iter().map(|a| a.duration()).sum();
    if total == 0 {
        return 0.0;
    }
    let mut same = 0;
    for r in reference {
        for s in suggested.iter().filter(|s| s.state == r.state) {
            same += s.end.min(r.end).saturating_sub(s.start.max(r.start));
        }
    }
    same as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::{segment_keys, KeyStamp, Thresholds};
    use crate::session::parse_annotations;

    fn tree(keys: &[(Millis, KeyKind)]) -> SegmentationTree {
        let th = Thresholds::new(200.0, 400.0, 1200.0).unwrap();
        let keys: Vec<KeyStamp> = keys.iter().map(|&(time, kind)| KeyStamp { time, kind }).collect();
        SegmentationTree {
            session_id: "s".into(),
            translator_id: "P".into(),
            target_lang: "es".into(),
            thresholds: th,
            segments: segment_keys(&keys, &th),
            keys,
        }
    }

    #[test]
    fn reading_then_fluent_typing() {
        let keys: Vec<(Millis, KeyKind)> = (0..20).map(|i| (4000 + i * 150, KeyKind::Insertion)).collect();
        let t = tree(&keys);
        let aus = vec![
            ActivityUnit { start: 0, end: 4000, kind: AuType::T1 },
            ActivityUnit { start: 4000, end: 6851, kind: AuType::T4 },
        ];
        let s = suggest_hof_states(&t, &aus, (0, 6851), &SuggestParams::default());
        let states: Vec<_> = s.iter().map(|x| (x.annotation.start, x.annotation.end, x.annotation.state)).collect();
        assert_eq!(states, vec![(0, 4000, State::O), (4000, 6851, State::F)]);
        assert_eq!(s[0].confidence, 1.0);
        assert_eq!(s[1].confidence, 1.0);
    }

    #[test]
    fn deletions_around_long_pause() {
        use KeyKind::*;
        let t = tree(&[(0, Insertion), (100, Deletion), (200, Deletion), (3000, Deletion), (3100, Insertion)]);
        let aus = vec![ActivityUnit { start: 0, end: 3101, kind: AuType::T4 }];
        let s = suggest_hof_states(&t, &aus, (0, 3101), &SuggestParams::default());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].annotation.state, State::H);
        assert!((s[0].confidence - 0.6).abs() < 1e-12);
    }

    #[test]
    fn output_parses_as_annotations() {
        let s = vec![
            SuggestedState { annotation: StateAnnotation::new(0, 10, State::O), confidence: 0.75 },
            SuggestedState { annotation: StateAnnotation::new(10, 20, State::F), confidence: 1.0 },
        ];
        let mut buf = Vec::new();
        write_suggestions(&s, &mut buf).unwrap();
        let parsed = parse_annotations(buf.as_slice()).unwrap();
        assert_eq!(parsed, vec![s[0].annotation, s[1].annotation]);
        assert_eq!(agreement(&parsed, &parsed), 1.0);
        assert_eq!(agreement(&parsed[..1], &parsed), 0.5);
    }
}
