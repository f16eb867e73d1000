//! Acceptance suite. Criteria 1-8 run on synthetic data; 9-16 need the
//! TPR-DB studies converted to session files under `$KEYSEG_TPRDB`:
//!
//! ```text
//! $KEYSEG_TPRDB/BML12/**/*.session.tsv
//! $KEYSEG_TPRDB/AR20/**/*.session.tsv
//! $KEYSEG_TPRDB/hof/<session_id>.hof.tsv
//! $KEYSEG_TPRDB/pairs.tsv
//! ```
//!
//! Prints one PASS / FAIL / SKIP line per criterion and exits non-zero if
//! any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use keyseg_core::hof::{
    cut_at_state_boundaries, derive_activity_units, session_span, transition_matrix, AuParams, OutsidePolicy,
    StateTrack,
};
use keyseg_core::iki::{build_profiles, profile_from_samples, ClassifyOptions, IkiSamples, ProfileParams};
use keyseg_core::segment::{segment_keys, segment_session, segment_with_profiles, KeyStamp, TaskSegment};
use keyseg_core::session::{FixationEvent, KeyEvent, KeyKind, SessionLog, SessionMeta, State, StateAnnotation, Window};
use keyseg_core::stats::{ks2_test, Method};
use keyseg_core::synth::{planted_session, random_thresholds, rng, synthetic_corpus};
use rand::Rng;
use sha2::{Digest, Sha256};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok { Outcome::Pass(detail) } else { Outcome::Fail(detail) }
}

fn ms(d: Duration) -> String {
    format!("{:.0} ms", d.as_secs_f64() * 1000.0)
}

// ---------------------------------------------------------------- oracles

fn sort_median_x2(v: &[u64]) -> u64 {
    let mut s = v.to_vec();
    s.sort_unstable();
    let n = s.len();
    if n % 2 == 1 { 2 * s[n / 2] } else { s[n / 2 - 1] + s[n / 2] }
}

/// Single-pass reference segmenter: `(label, first key of each Task)` per TS.
fn reference_segments(keys: &[KeyStamp], rsp: f64, tsp: f64) -> Vec<(String, Vec<usize>)> {
    let mut out: Vec<(String, Vec<usize>)> = Vec::new();
    let mut run: Vec<KeyKind> = Vec::new();
    let close = |run: &mut Vec<KeyKind>, out: &mut Vec<(String, Vec<usize>)>| {
        if run.is_empty() {
            return;
        }
        let ins = run.iter().filter(|k| **k == KeyKind::Insertion).count();
        out.last_mut().unwrap().0.push(if ins == run.len() { 'A' } else if ins == 0 { 'D' } else { 'C' });
        run.clear();
    };
    for (i, k) in keys.iter().enumerate() {
        let gap = if i == 0 { f64::INFINITY } else { (k.time - keys[i - 1].time) as f64 };
        if gap >= tsp {
            close(&mut run, &mut out);
            out.push((String::new(), vec![i]));
        } else if gap >= rsp {
            close(&mut run, &mut out);
            out.last_mut().unwrap().1.push(i);
        }
        run.push(k.kind);
    }
    close(&mut run, &mut out);
    out
}

fn shape(segs: &[TaskSegment]) -> Vec<(String, Vec<usize>)> {
    segs.iter().map(|s| (s.label.clone(), s.tasks.iter().map(|t| t.first).collect())).collect()
}

fn random_stamps<R: Rng>(r: &mut R, max_keys: usize) -> Vec<KeyStamp> {
    let n = r.random_range(1..=max_keys);
    let mut t = 0;
    (0..n)
        .map(|i| {
            if i > 0 {
                t += r.random_range(1..3000);
            }
            let kind = if r.random_bool(0.3) { KeyKind::Deletion } else { KeyKind::Insertion };
            KeyStamp { time: t, kind }
        })
        .collect()
}

fn random_session<R: Rng>(r: &mut R) -> SessionLog {
    let stamps = random_stamps(r, 150);
    let keys = stamps
        .iter()
        .map(|k| match k.kind {
            KeyKind::Insertion => KeyEvent::insertion(k.time, "a", 0),
            KeyKind::Deletion => KeyEvent::deletion(k.time, "a", 0),
        })
        .collect();
    let end = stamps.last().unwrap().time + 3000;
    let mut fixations: Vec<FixationEvent> = (0..r.random_range(0..60))
        .map(|_| FixationEvent {
            time: r.random_range(0..end),
            duration: r.random_range(1..1500),
            window: if r.random_bool(0.5) { Window::Source } else { Window::Target },
            token_index: r.random_range(0..40),
        })
        .collect();
    fixations.sort_by_key(|f| f.time);
    SessionLog::new(SessionMeta::new("FZ", "fz", "P"), keys, fixations)
}

fn naive_d(a: &[f64], b: &[f64]) -> u64 {
    let (n, m) = (a.len() as i64, b.len() as i64);
    a.iter()
        .chain(b)
        .map(|&x| {
            let fa = a.iter().filter(|&&v| v <= x).count() as i64;
            let fb = b.iter().filter(|&&v| v <= x).count() as i64;
            (fa * m - fb * n).unsigned_abs()
        })
        .max()
        .unwrap()
}

fn enumerated_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let observed = naive_d(a, b);
    let (mut hit, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << pooled.len()) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let x: Vec<f64> = (0..pooled.len()).filter(|i| mask >> i & 1 == 1).map(|i| pooled[i]).collect();
        let y: Vec<f64> = (0..pooled.len()).filter(|i| mask >> i & 1 == 0).map(|i| pooled[i]).collect();
        all += 1;
        if naive_d(&x, &y) >= observed {
            hit += 1;
        }
    }
    hit as f64 / all as f64
}

// ---------------------------------------------------- always-runnable

fn ac01() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut bad = 0;
    for _ in 0..1000 {
        let wp: Vec<u64> = (0..r.random_range(1..400)).map(|_| r.random_range(20..2500)).collect();
        let bp: Vec<u64> = (0..r.random_range(1..400)).map(|_| r.random_range(40..8000)).collect();
        let p = profile_from_samples("T", &IkiSamples { wp: wp.clone(), bp: bp.clone() }, &ProfileParams::default())
            .unwrap();
        if p.rsp != sort_median_x2(&wp) as f64 || 2.0 * p.tsp != 3.0 * sort_median_x2(&bp) as f64 {
            bad += 1;
        }
    }
    let el = start.elapsed();
    check(bad == 0 && el < Duration::from_secs(1), format!("1000 samples, {bad} mismatches, {}", ms(el)))
}

fn ac02() -> Outcome {
    let start = Instant::now();
    let mut r = rng(202);
    let mut bad = 0;
    for _ in 0..1000 {
        let keys = random_stamps(&mut r, 200);
        let th = random_thresholds(&mut r);
        if shape(&segment_keys(&keys, &th)) != reference_segments(&keys, th.rsp, th.tsp) {
            bad += 1;
        }
    }
    let el = start.elapsed();
    check(bad == 0 && el < Duration::from_secs(5), format!("1000 sessions, {bad} disagreements, {}", ms(el)))
}

fn ac03() -> Outcome {
    let mut bad = Vec::new();
    for seed in 0..500u64 {
        let mut r = rng(seed);
        let th = random_thresholds(&mut r);
        let k = r.random_range(1..=20);
        let p = planted_session(&mut r, &th, k, 6);
        let tree = segment_session(&p.session, &th).unwrap();
        let labels: Vec<String> = tree.segments.iter().map(|s| s.label.clone()).collect();
        if labels != p.labels {
            bad.push(seed);
        }
    }
    check(bad.is_empty(), format!("500 seeds, failing seeds {bad:?}"))
}

fn ac04() -> Outcome {
    let mut r = rng(404);
    let mut problems = Vec::new();
    for case in 0..500 {
        let s = random_session(&mut r);
        let th = random_thresholds(&mut r);
        let tree = segment_session(&s, &th).unwrap();
        let n = s.keys.len();
        let seg_keys: usize = tree.segments.iter().map(|x| x.keystrokes()).sum();
        let task_keys: usize = tree.tasks().map(|t| t.keystrokes()).sum();
        let contiguous = tree.segments.windows(2).all(|w| w[1].first == w[0].last + 1)
            && tree.segments.first().is_some_and(|x| x.first == 0);
        if seg_keys != n || task_keys != n || !contiguous {
            problems.push(format!("case {case}: partition"));
        }
        let (lo, hi) = session_span(&s).unwrap();
        let mut cuts: Vec<u64> = (0..r.random_range(0..10)).map(|_| r.random_range(lo..hi)).collect();
        cuts.extend([lo, hi]);
        cuts.sort_unstable();
        cuts.dedup();
        let anns = cuts
            .windows(2)
            .map(|w| StateAnnotation::new(w[0], w[1], State::ALL[r.random_range(0..3)]))
            .collect();
        let o = cut_at_state_boundaries(&tree, &StateTrack::new(anns).unwrap(), OutsidePolicy::Nearest);
        let crossing = o.tree.tasks().any(|t| (t.first..=t.last).any(|i| o.key_state[i] != o.key_state[t.first]));
        let cut_keys: usize = o.tree.segments.iter().map(|x| x.keystrokes()).sum();
        if crossing || cut_keys != n {
            problems.push(format!("case {case}: state cut"));
        }
        let aus = derive_activity_units(&s, th.tsp, &AuParams::default());
        let tiles = aus.first().map(|a| a.start) == Some(lo)
            && aus.last().map(|a| a.end) == Some(hi)
            && aus.windows(2).all(|w| w[0].end == w[1].start)
            && aus.iter().all(|a| a.end > a.start);
        if !tiles {
            problems.push(format!("case {case}: AU tiling"));
        }
    }
    check(problems.is_empty(), format!("500 fuzzed sessions, problems {problems:?}"))
}

fn ac05() -> Outcome {
    let mut r = rng(505);
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        for m in 1..=8 {
            for ties in [false, true] {
                let a: Vec<f64> = (0..n).map(|_| draw(&mut r, ties)).collect();
                let b: Vec<f64> = (0..m).map(|_| draw(&mut r, ties)).collect();
                let t = ks2_test(&a, &b).unwrap();
                if t.method != Method::Exact {
                    return Outcome::Fail(format!("n={n} m={m} not exact"));
                }
                worst = worst.max((t.p_value - enumerated_p(&a, &b)).abs());
            }
        }
    }
    let mut fuzz_bad = 0;
    for _ in 0..100 {
        let a: Vec<f64> = (0..r.random_range(1..60)).map(|_| r.random_range(0.0..5000.0)).collect();
        let b: Vec<f64> = (0..r.random_range(1..60)).map(|_| r.random_range(0.0..5000.0)).collect();
        let f = |v: &[f64]| v.iter().map(|x| (1.0 + x).ln() + x.sqrt()).collect::<Vec<_>>();
        let (ab, ba, fab) = (ks2_test(&a, &b).unwrap(), ks2_test(&b, &a).unwrap(), ks2_test(&f(&a), &f(&b)).unwrap());
        if ab.statistic != ba.statistic || ab.statistic != fab.statistic || (ab.p_value - fab.p_value).abs() > 1e-12 {
            fuzz_bad += 1;
        }
    }
    check(worst <= 1e-12 && fuzz_bad == 0, format!("max |p - enumeration| = {worst:e}, {fuzz_bad}/100 fuzz failures"))
}

/// Continuous draws, or a four-point grid to force ties.
fn draw<R: Rng>(r: &mut R, ties: bool) -> f64 {
    if ties { r.random_range(0..4) as f64 } else { r.random_range(0.0..100.0) }
}

fn ac06() -> Outcome {
    use State::*;
    let track = |seq: &[State]| {
        StateTrack::new(seq.iter().enumerate().map(|(i, &s)| StateAnnotation::new(i as u64, i as u64 + 1, s)).collect())
            .unwrap()
    };
    let m = transition_matrix(&track(&[O, F, O, F, H]));
    let exact = m.probability(O, F) == Some(1.0)
        && m.probability(F, O) == Some(0.5)
        && m.probability(F, H) == Some(0.5)
        && m.row_total(H) == 0;
    let mut r = rng(606);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let seq: Vec<State> = (0..r.random_range(2..80)).map(|_| State::ALL[r.random_range(0..3)]).collect();
        let m = transition_matrix(&track(&seq));
        for from in State::ALL {
            if m.row_total(from) > 0 {
                let sum: f64 = State::ALL.iter().filter_map(|&to| m.probability(from, to)).sum();
                worst = worst.max((sum - 1.0).abs());
            }
        }
    }
    check(exact && worst <= 1e-12, format!("OFOFH exact: {exact}, max row deviation {worst:e}"))
}

fn keyseg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_keyseg"))
}

fn run_ok(args: &[&str]) -> Result<(), String> {
    let out = keyseg().args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("`keyseg {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

/// `relative path -> sha256` for every file under `dir`.
fn tree_digest(dir: &Path) -> BTreeMap<String, String> {
    walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(dir).unwrap().display().to_string();
            (rel, hex::encode(Sha256::digest(std::fs::read(e.path()).unwrap())))
        })
        .collect()
}

fn ac07() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let d = |s: &str| tmp.path().join(s).display().to_string();
    let corpus = d("corpus");
    if let Err(e) = run_ok(&["--out", &corpus, "synth", "--seed", "7", "--translators", "4", "--sessions", "3", "--keys", "500"]) {
        return Outcome::Fail(e);
    }
    let ann = d("ann");
    if let Err(e) = run_ok(&["--out", &ann, "hof", &corpus, "--annotations", &ann, "--suggest"]) {
        return Outcome::Fail(e);
    }
    let sugg = format!("{ann}/suggested");
    let commands: Vec<(&str, Vec<String>)> = vec![
        ("synth", vec!["synth".into(), "--seed".into(), "7".into()]),
        ("validate", vec!["validate".into(), corpus.clone()]),
        ("profile", vec!["profile".into(), corpus.clone()]),
        ("segment", vec!["segment".into(), corpus.clone()]),
        ("hof", vec!["hof".into(), corpus.clone(), "--annotations".into(), sugg.clone()]),
        ("identify", vec!["identify".into(), corpus.clone()]),
        ("render-graph", vec!["render".into(), corpus.clone(), "--graph".into(), "P00_S0".into(), "--annotations".into(), sugg.clone()]),
        ("render-dist", vec!["render".into(), corpus.clone(), "--dist".into(), "density".into()]),
    ];
    let mut differing = Vec::new();
    for (name, args) in &commands {
        let mut digests = Vec::new();
        for run in 0..2 {
            let out = d(&format!("{name}_{run}"));
            let mut full = vec!["--out".to_string(), out.clone()];
            full.extend(args.iter().cloned());
            let refs: Vec<&str> = full.iter().map(String::as_str).collect();
            if let Err(e) = run_ok(&refs) {
                return Outcome::Fail(e);
            }
            digests.push(tree_digest(Path::new(&out)));
        }
        if digests[0] != digests[1] || digests[0].is_empty() {
            differing.push(*name);
        }
    }
    check(differing.is_empty(), format!("{} commands run twice, differing: {differing:?}", commands.len()))
}

fn ac08() -> Outcome {
    let corpus = synthetic_corpus(808, 20, 10, 500);
    let keys: usize = corpus.iter().map(|s| s.keys.len()).sum();
    let start = Instant::now();
    let profiles = build_profiles(&corpus, |_| true, &ClassifyOptions::default(), &ProfileParams::default());
    let profiles: BTreeMap<String, _> = profiles.into_iter().map(|(k, v)| (k, v.unwrap())).collect();
    let segs: usize = corpus.iter().map(|s| segment_with_profiles(s, &profiles, 200.0).unwrap().segments.len()).sum();
    let el = start.elapsed();
    check(keys >= 100_000 && el < Duration::from_secs(1), format!("{keys} keystrokes, {segs} TSs, {}", ms(el)))
}

// ------------------------------------------------------- data-backed

struct Data {
    root: PathBuf,
    out: tempfile::TempDir,
}

impl Data {
    fn locate() -> Result<Data, String> {
        let root = std::env::var_os("KEYSEG_TPRDB").ok_or("KEYSEG_TPRDB not set")?;
        let root = PathBuf::from(root);
        for study in ["BML12", "AR20"] {
            if !root.join(study).is_dir() {
                return Err(format!("{} missing", root.join(study).display()));
            }
        }
        Ok(Data { root, out: tempfile::tempdir().map_err(|e| e.to_string())? })
    }

    fn studies(&self) -> Vec<String> {
        ["BML12", "AR20"].iter().map(|s| self.root.join(s).display().to_string()).collect()
    }

    /// Runs a command once per process; returns its output directory.
    fn run(&self, name: &str, extra: &[String]) -> Result<PathBuf, String> {
        let dir = self.out.path().join(name);
        if !dir.join("manifest.json").exists() {
            let mut args = vec!["--out".to_string(), dir.display().to_string(), name.to_string()];
            args.extend(self.studies());
            args.extend(extra.iter().cloned());
            run_ok(&args.iter().map(String::as_str).collect::<Vec<_>>())?;
        }
        Ok(dir)
    }
}

type Rows = Vec<BTreeMap<String, String>>;

fn read_csv(path: &Path) -> Result<Rows, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    rdr.deserialize().collect::<Result<Rows, _>>().map_err(|e| e.to_string())
}

fn num(row: &BTreeMap<String, String>, col: &str) -> f64 {
    row.get(col).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
}

fn find<'a>(rows: &'a Rows, pairs: &[(&str, &str)]) -> Option<&'a BTreeMap<String, String>> {
    rows.iter().find(|r| pairs.iter().all(|(k, v)| r.get(*k).map(String::as_str) == Some(*v)))
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol + 1e-9
}

fn ac09(d: &Data) -> Result<Outcome, String> {
    let rows = read_csv(&d.run("profile", &[])?.join("iki_summary.csv"))?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (study, median, mean) in [("BML12", 156.0, 493.0), ("AR20", 265.0, 844.0)] {
        let r = find(&rows, &[("study_id", study)]).ok_or(format!("no {study} row"))?;
        let (md, mn) = (num(r, "median"), num(r, "mean"));
        ok &= md == median && within(mn, mean, 1.0);
        detail.push(format!("{study} median {md} mean {mn:.1}"));
    }
    Ok(check(ok, detail.join(", ")))
}

fn ac10(d: &Data) -> Result<Outcome, String> {
    let rows = read_csv(&d.run("profile", &[])?.join("profile_spread.csv"))?;
    let printed = [
        ("ar", "rsp", [312.0, 1032.0, 563.0, 546.0]),
        ("ar", "tsp", [795.0, 2388.0, 1288.0, 1077.0]),
        ("es", "rsp", [220.0, 470.0, 301.0, 281.0]),
        ("es", "tsp", [423.0, 1686.0, 697.0, 609.0]),
    ];
    let mut misses = Vec::new();
    for (lang, th, want) in printed {
        let r = find(&rows, &[("scope", lang), ("threshold", th)]).ok_or(format!("no {lang}/{th} row"))?;
        for (col, w) in ["min", "max", "mean", "median"].iter().zip(want) {
            let g = num(r, col);
            if !within(g, w, 1.0) {
                misses.push(format!("{lang} {th} {col} {g:.1} vs {w}"));
            }
        }
    }
    Ok(check(misses.is_empty(), if misses.is_empty() { "16 values within 1 ms".into() } else { misses.join("; ") }))
}

fn ac11(d: &Data) -> Result<Outcome, String> {
    let dir = d.run("segment", &[])?;
    let rows = read_csv(&dir.join("ts_summary.csv"))?;
    let top = rows.first().ok_or("empty TS summary")?;
    let overview: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("overview.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let total = overview["overview"]["segments"].as_u64().unwrap_or(0);
    let distinct = overview["overview"]["distinct_labels"].as_u64().unwrap_or(0);
    let (count, iki, kpt) = (num(top, "count"), num(top, "mean_iki"), num(top, "keys_per_task"));
    let ok = top["label"] == "A"
        && count == 3870.0
        && within(iki, 173.0, 1.0)
        && within(kpt, 5.33, 0.01)
        && total == 10356
        && distinct == 892;
    Ok(check(
        ok,
        format!("top `{}` x{count}, mean IKI {iki:.1}, keys/Task {kpt:.3}, {total} TSs, {distinct} labels", top["label"]),
    ))
}

fn hof_dir(d: &Data) -> Result<PathBuf, String> {
    let ann = d.root.join("hof");
    if !ann.is_dir() {
        return Err(format!("{} missing", ann.display()));
    }
    d.run("hof", &["--annotations".into(), ann.display().to_string()])
}

fn ac12(d: &Data) -> Result<Outcome, String> {
    let rows = read_csv(&hof_dir(d)?.join("transitions.csv"))?;
    let printed = [
        ("ar", [("O", "F", 0.84), ("O", "H", 0.16), ("F", "O", 0.60), ("F", "H", 0.40), ("H", "O", 0.21), ("H", "F", 0.79)]),
        ("es", [("O", "F", 0.86), ("O", "H", 0.14), ("F", "O", 0.60), ("F", "H", 0.40), ("H", "O", 0.09), ("H", "F", 0.91)]),
    ];
    let mut misses = Vec::new();
    for (lang, cells) in printed {
        for (from, to, want) in cells {
            let r = find(&rows, &[("scope", lang), ("from", from), ("to", to)]).ok_or(format!("no {lang} {from}->{to}"))?;
            let g = num(r, "probability");
            if !within(g, want, 0.01) {
                misses.push(format!("{lang} {from}->{to} {g:.3} vs {want}"));
            }
        }
    }
    Ok(check(misses.is_empty(), if misses.is_empty() { "12 probabilities within 0.01".into() } else { misses.join("; ") }))
}

fn ac13(d: &Data) -> Result<Outcome, String> {
    let rows = read_csv(&hof_dir(d)?.join("state_counts.csv"))?;
    let printed = [("es", [("O", 183.0), ("F", 284.0), ("H", 139.0)]), ("ar", [("O", 93.0), ("F", 132.0), ("H", 67.0)])];
    let mut got = Vec::new();
    let mut ok = true;
    for (lang, cells) in printed {
        for (state, want) in cells {
            let g = find(&rows, &[("scope", lang), ("state", state)]).map_or(f64::NAN, |r| num(r, "count"));
            ok &= g == want;
            got.push(format!("{lang} {state}={g}"));
        }
    }
    Ok(check(ok, got.join(" ")))
}

fn ac14(d: &Data) -> Result<Outcome, String> {
    let rows = read_csv(&hof_dir(d)?.join("pause_fraction.csv"))?;
    let f = find(&rows, &[("scope", "es"), ("state", "F")]).map_or(f64::NAN, |r| num(r, "fraction"));
    let h = find(&rows, &[("scope", "es"), ("state", "H")]).map_or(f64::NAN, |r| num(r, "fraction"));
    Ok(check(within(f, 0.18, 0.01) && within(h, 0.54, 0.01), format!("es Flow {f:.3}, Hesitation {h:.3}")))
}

fn ac15(d: &Data) -> Result<Outcome, String> {
    let plan = d.root.join("pairs.tsv");
    if !plan.is_file() {
        return Err(format!("{} missing", plan.display()));
    }
    let rows = read_csv(&d.run("identify", &["--pairs".into(), plan.display().to_string()])?.join("identification.csv"))?;
    let want = [("translation", "same_pct", 78.0), ("postedit", "same_pct", 44.0), ("different", "different_pct", 96.0)];
    let mut matching = Vec::new();
    let mut detail = Vec::new();
    for rule in ["conventional", "paper_literal"] {
        let mut all = true;
        let mut got = Vec::new();
        for (class, col, w) in want {
            let g = find(&rows, &[("rule", rule), ("class", class)]).map_or(f64::NAN, |r| num(r, col));
            all &= within(g, w, 2.0);
            got.push(format!("{g:.1}"));
        }
        detail.push(format!("{rule} {}", got.join("/")));
        if all {
            matching.push(rule);
        }
    }
    Ok(check(!matching.is_empty(), format!("{}; reproduced by {matching:?}", detail.join(", "))))
}

fn ac16(d: &Data) -> Result<Outcome, String> {
    let dir = d.run("segment", &[])?;
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("overview.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let seg = v["a_only"]["segment_fraction"].as_f64().unwrap_or(f64::NAN);
    let key = v["a_only"]["keystroke_fraction"].as_f64().unwrap_or(f64::NAN);
    Ok(check(within(seg, 0.60, 0.02) && within(key, 0.44, 0.02), format!("A-only {seg:.3} of TSs, {key:.3} of keystrokes")))
}

fn main() {
    let fixed: [(&str, fn() -> Outcome); 8] = [
        ("threshold exactness", ac01),
        ("segmentation oracle equivalence", ac02),
        ("planted-structure recovery", ac03),
        ("partition invariants", ac04),
        ("KS2 exactness", ac05),
        ("transition matrices", ac06),
        ("CLI determinism", ac07),
        ("throughput", ac08),
    ];
    let data_backed: [(&str, fn(&Data) -> Result<Outcome, String>); 8] = [
        ("median / mean IKI per study", ac09),
        ("RSP / TSP spread per language", ac10),
        ("TS label summary", ac11),
        ("HOF transition probabilities", ac12),
        ("HOF state counts", ac13),
        ("pause fraction by state", ac14),
        ("KS2 identification percentages", ac15),
        ("A-only TS coverage", ac16),
    ];
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    for (i, (name, f)) in fixed.iter().enumerate() {
        results.push((i + 1, name, f()));
    }
    let data = Data::locate();
    for (i, (name, f)) in data_backed.iter().enumerate() {
        let outcome = match &data {
            Err(why) => Outcome::Skip(why.clone()),
            Ok(d) => f(d).unwrap_or_else(Outcome::Skip),
        };
        results.push((i + 9, name, outcome));
    }
    let mut failed = 0;
    for (i, name, outcome) in &results {
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("AC{i:02} {tag} {name}: {detail}");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
