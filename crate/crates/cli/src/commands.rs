use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use keyseg_core::hof::{
    au_share_by_state, derive_activity_units, pause_fraction_by_state, session_span, state_counts, state_summary,
    suggest_hof_states, task_distribution_by_state, transition_table, ts_label_ranking_by_state, write_suggestions,
};
use keyseg_core::iki::{build_profiles, iki_distribution, iki_summary_table, profile_spread_table, profiles_table, DistributionOptions};
use keyseg_core::report::{
    parse_alignment, render_distribution, render_progression_graph, DistributionKind, DistributionSeries, GraphInput,
    GraphSpec,
};
use keyseg_core::segment::{
    a_only_coverage, corpus_overview, corpus_ts_summary, hierarchy_correlations, segment_with_profiles, tasks_table,
};
use keyseg_core::session::{validate_session, write_session, IssueCode, SessionLog};
use keyseg_core::stats::{auto_pairing_plan, identification_experiment, parse_pairing_plan};
use keyseg_core::synth::{planted_session, random_thresholds, rng, synthetic_corpus};
use keyseg_core::{
    cut_at_state_boundaries, Cell, OutsidePolicy, ReportTable, SegmentationTree, StateOverlay, StateTrack,
    TranslatorProfile,
};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::corpus::{annotation_index, discover, load_all, load_annotations, load_corpus, Loaded};
use crate::output::Outputs;
use crate::{CliError, Command, DistArg, GroupArg, LayerArg, RenderArgs};

type Res<T> = Result<T, CliError>;

pub fn run(cmd: &Command, cfg: &RunConfig) -> Res<()> {
    match cmd {
        Command::Validate(c) => validate(&c.paths, cfg),
        Command::Profile(c) => profile(&c.paths, cfg),
        Command::Segment { corpus, profiles } => segment(&corpus.paths, profiles.as_deref(), cfg),
        Command::Hof { corpus, annotations, profiles, suggest, top } => {
            hof(&corpus.paths, annotations, profiles.as_deref(), *suggest, *top, cfg)
        }
        Command::Identify { corpus, pairs } => identify(&corpus.paths, pairs.as_deref(), cfg),
        Command::Render(args) => render(args, cfg),
        Command::Synth { seed, translators, sessions, keys, planted } => {
            synth(*seed, *translators, *sessions, *keys, *planted, cfg)
        }
    }
}

fn finish(out: Outputs, cfg: &RunConfig) -> Res<()> {
    let written = out.write(&cfg.out, cfg)?;
    println!("wrote {} files to {}", written.len(), cfg.out.display());
    Ok(())
}

/// Unsorted keys or empty texts break every later step.
const FATAL: [IssueCode; 3] = [IssueCode::UnsortedKeys, IssueCode::EmptyText, IssueCode::BadText];

/// Loads the corpus, keeps sessions of the configured modes with at least
/// one IKI, and records inputs.
fn usable_corpus(paths: &[PathBuf], cfg: &RunConfig, out: &mut Outputs, all_modes: bool) -> Res<Vec<Loaded>> {
    let loaded = load_corpus(paths, &cfg.columns)?;
    let mut keep = Vec::with_capacity(loaded.len());
    for l in loaded {
        out.input(&l.path, &l.digest);
        let report = validate_session(&l.session);
        if let Some(issue) = report.issues.iter().find(|i| FATAL.contains(&i.code)) {
            return Err(CliError::Data(format!("{}: {}", l.path.display(), issue.message)));
        }
        let id = &l.session.meta.session_id;
        if report.has(IssueCode::NoIki) {
            out.warn(format!("{id}: fewer than two keystrokes; skipped"));
        } else if !all_modes && !cfg.modes.iter().any(|m| m == l.session.meta.mode()) {
            out.warn(format!("{id}: mode `{}` not in configured modes; skipped", l.session.meta.mode()));
        } else {
            keep.push(l);
        }
    }
    if keep.is_empty() {
        return Err(CliError::Data("no usable sessions".into()));
    }
    Ok(keep)
}

fn validate(paths: &[PathBuf], cfg: &RunConfig) -> Res<()> {
    let files = discover(paths)?;
    let mut out = Outputs::new("validate", cfg);
    let mut t = ReportTable::new("validation", "validate_session")
        .text("file")
        .text("session_id")
        .text("code")
        .int("index", None)
        .text("message");
    let mut bad = Vec::new();
    for (path, result) in files.iter().zip(load_all(&files, &cfg.columns)) {
        let file = path.display().to_string();
        match result {
            Err(e) => {
                t.push(vec![file.as_str().into(), Cell::Null, "PARSE".into(), Cell::Null, format!("{e:#}").into()]);
                bad.push(file);
            }
            Ok(l) => {
                out.input(&l.path, &l.digest);
                let report = validate_session(&l.session);
                for i in &report.issues {
                    t.push(vec![
                        file.as_str().into(),
                        l.session.meta.session_id.as_str().into(),
                        i.code.as_str().into(),
                        i.index.into(),
                        i.message.as_str().into(),
                    ]);
                }
                if !report.is_ok() {
                    bad.push(file);
                }
            }
        }
    }
    out.table(&t);
    println!("{} session file(s), {} with problems", files.len(), bad.len());
    for b in &bad {
        eprintln!("invalid: {b}");
    }
    finish(out, cfg)?;
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{} invalid session file(s)", bad.len())))
    }
}

fn compute_profiles(sessions: &[&SessionLog], cfg: &RunConfig) -> Res<BTreeMap<String, TranslatorProfile>> {
    let results = build_profiles(sessions.iter().copied(), |_| true, &cfg.classify(), &cfg.profile_params());
    results
        .into_iter()
        .map(|(id, r)| r.map(|p| (id.clone(), p)).map_err(|e| CliError::Data(format!("translator {id}: {e}"))))
        .collect()
}

fn language_of(sessions: &[&SessionLog]) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for s in sessions {
        out.entry(s.meta.translator_id.clone()).or_insert_with(|| s.meta.target_lang.clone());
    }
    out
}

fn emit_profiles(out: &mut Outputs, sessions: &[&SessionLog], profiles: &BTreeMap<String, TranslatorProfile>) {
    let list: Vec<&TranslatorProfile> = profiles.values().collect();
    out.table(&profiles_table(&list));
    let langs = language_of(sessions);
    let grouped: Vec<(&str, &TranslatorProfile)> =
        list.iter().map(|p| (langs.get(&p.translator_id).map_or("", String::as_str), *p)).collect();
    out.table(&profile_spread_table(&grouped));
    out.table(&iki_summary_table(sessions));
    for p in &list {
        for w in &p.warnings {
            out.warn(format!("translator {}: {w}", p.translator_id));
        }
    }
}

fn profile(paths: &[PathBuf], cfg: &RunConfig) -> Res<()> {
    let mut out = Outputs::new("profile", cfg);
    let corpus = usable_corpus(paths, cfg, &mut out, false)?;
    let sessions: Vec<&SessionLog> = corpus.iter().map(|l| &l.session).collect();
    let profiles = compute_profiles(&sessions, cfg)?;
    emit_profiles(&mut out, &sessions, &profiles);
    finish(out, cfg)
}

#[derive(Deserialize)]
struct ProfileRow {
    translator_id: String,
    median_wp: f64,
    median_bp: f64,
    rsp: f64,
    tsp: f64,
    rsp_effective: f64,
    n_wp: usize,
    n_bp: usize,
    valid: bool,
    #[serde(default)]
    warnings: Option<String>,
}

impl From<ProfileRow> for TranslatorProfile {
    fn from(r: ProfileRow) -> Self {
        TranslatorProfile {
            translator_id: r.translator_id,
            median_wp: r.median_wp,
            median_bp: r.median_bp,
            rsp: r.rsp,
            tsp: r.tsp,
            n_wp: r.n_wp,
            n_bp: r.n_bp,
            rsp_effective: r.rsp_effective,
            valid: r.valid,
            warnings: r
                .warnings
                .filter(|w| !w.is_empty())
                .map(|w| w.split("; ").map(String::from).collect())
                .unwrap_or_default(),
        }
    }
}

/// Reads a profiles table written by `profile`, as CSV or JSON.
fn read_profiles(path: &Path) -> Res<BTreeMap<String, TranslatorProfile>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: Vec<ProfileRow> = if path.extension().is_some_and(|e| e == "json") {
        #[derive(Deserialize)]
        struct Doc {
            rows: Vec<ProfileRow>,
        }
        serde_json::from_slice::<Doc>(&bytes).with_context(|| format!("parsing {}", path.display()))?.rows
    } else {
        csv::Reader::from_reader(bytes.as_slice())
            .deserialize()
            .collect::<Result<_, _>>()
            .with_context(|| format!("parsing {}", path.display()))?
    };
    Ok(rows.into_iter().map(|r| (r.translator_id.clone(), r.into())).collect())
}

fn profiles_for(
    given: Option<&Path>,
    sessions: &[&SessionLog],
    cfg: &RunConfig,
    out: &mut Outputs,
) -> Res<BTreeMap<String, TranslatorProfile>> {
    match given {
        Some(p) => {
            out.input(p, &crate::corpus::file_digest(p)?);
            read_profiles(p)
        }
        None => {
            let profiles = compute_profiles(sessions, cfg)?;
            emit_profiles(out, sessions, &profiles);
            Ok(profiles)
        }
    }
}

fn segment_all(
    sessions: &[&SessionLog],
    profiles: &BTreeMap<String, TranslatorProfile>,
    cfg: &RunConfig,
) -> Res<Vec<SegmentationTree>> {
    sessions
        .par_iter()
        .map(|s| {
            segment_with_profiles(s, profiles, cfg.delay)
                .map_err(|e| CliError::Data(format!("{}: {e}", s.meta.session_id)))
        })
        .collect()
}

fn segment(paths: &[PathBuf], profiles: Option<&Path>, cfg: &RunConfig) -> Res<()> {
    let mut out = Outputs::new("segment", cfg);
    let corpus = usable_corpus(paths, cfg, &mut out, false)?;
    let sessions: Vec<&SessionLog> = corpus.iter().map(|l| &l.session).collect();
    let profiles = profiles_for(profiles, &sessions, cfg, &mut out)?;
    let trees = segment_all(&sessions, &profiles, cfg)?;
    let refs: Vec<&SegmentationTree> = trees.iter().collect();
    for t in &trees {
        out.json(&format!("segments/{}.json", t.session_id), t);
    }
    out.table(&tasks_table(&refs));
    out.table(&corpus_ts_summary(&refs));
    out.json("overview.json", &json!({ "overview": corpus_overview(&refs), "a_only": a_only_coverage(&refs) }));
    match hierarchy_correlations(&refs, &profiles) {
        Ok(t) => out.table(&t),
        Err(e) => out.warn(format!("hierarchy correlations: {e}")),
    }
    finish(out, cfg)
}

fn hof(
    paths: &[PathBuf],
    annotation_dirs: &[PathBuf],
    profiles: Option<&Path>,
    suggest: bool,
    top: usize,
    cfg: &RunConfig,
) -> Res<()> {
    let mut out = Outputs::new("hof", cfg);
    let corpus = usable_corpus(paths, cfg, &mut out, false)?;
    let sessions: Vec<&SessionLog> = corpus.iter().map(|l| &l.session).collect();
    let profiles = profiles_for(profiles, &sessions, cfg, &mut out)?;
    let trees = segment_all(&sessions, &profiles, cfg)?;
    let index = annotation_index(annotation_dirs);

    let mut overlays: Vec<StateOverlay> = Vec::new();
    let mut au_share = ReportTable::new("au_share", "au_share_by_state")
        .text("session_id")
        .text("state")
        .text("au_type")
        .float("share", None);
    let mut cuts = ReportTable::new("cut_report", "cut_at_state_boundaries")
        .text("session_id")
        .int("segments_before", None)
        .int("segments_after", None)
        .int("segments_cut", None)
        .int("tasks_before", None)
        .int("tasks_after", None)
        .int("tasks_cut", None)
        .int("keys_outside", None);
    for (s, tree) in sessions.iter().zip(&trees) {
        let id = &s.meta.session_id;
        let aus = derive_activity_units(s, tree.thresholds.tsp, &cfg.au_params());
        let Some(path) = index.get(id) else {
            if suggest {
                let span = session_span(s).expect("session has keystrokes");
                let states = suggest_hof_states(tree, &aus, span, &cfg.suggest_params());
                let mut buf = Vec::new();
                write_suggestions(&states, &mut buf).context("writing suggestions")?;
                out.raw(&format!("suggested/{id}.hof.tsv"), buf);
                out.warn(format!("{id}: no annotation file; suggestion written, session not analysed"));
            } else {
                out.warn(format!("{id}: no annotation file; skipped"));
            }
            continue;
        };
        out.input(path, &crate::corpus::file_digest(path)?);
        let anns = load_annotations(path)?;
        if anns.is_empty() {
            out.warn(format!("{id}: annotation file is empty; skipped"));
            continue;
        }
        let track = StateTrack::new(anns).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let overlay = cut_at_state_boundaries(tree, &track, OutsidePolicy::Nearest);
        for w in &overlay.report.warnings {
            out.warn(format!("{id}: {w}"));
        }
        for ((state, kind), share) in au_share_by_state(&track, &aus) {
            au_share.push(vec![id.as_str().into(), state.symbol().into(), kind.code().into(), share.into()]);
        }
        let r = &overlay.report;
        cuts.push(vec![
            id.as_str().into(),
            r.segments_before.into(),
            r.segments_after.into(),
            r.segments_cut.into(),
            r.tasks_before.into(),
            r.tasks_after.into(),
            r.tasks_cut.into(),
            r.keys_outside.into(),
        ]);
        overlays.push(overlay);
    }
    if overlays.is_empty() {
        if suggest {
            return finish(out, cfg);
        }
        return Err(CliError::Data("no annotated sessions".into()));
    }
    let refs: Vec<&StateOverlay> = overlays.iter().collect();
    out.table(&state_counts(&refs));
    out.table(&transition_table(&refs));
    let (dist, warnings) = task_distribution_by_state(&refs);
    out.table(&dist);
    for w in warnings {
        out.warn(w);
    }
    out.table(&ts_label_ranking_by_state(&refs, top));
    for state in keyseg_core::State::ALL {
        match state_summary(&refs, state) {
            Ok(t) => out.table(&t),
            Err(e) => out.warn(e.to_string()),
        }
    }
    out.table(&pause_fraction_by_state(&refs));
    out.table(&au_share);
    out.table(&cuts);
    finish(out, cfg)
}

fn identify(paths: &[PathBuf], pairs: Option<&Path>, cfg: &RunConfig) -> Res<()> {
    let mut out = Outputs::new("identify", cfg);
    let corpus = usable_corpus(paths, cfg, &mut out, true)?;
    let by_id: BTreeMap<String, &SessionLog> =
        corpus.iter().map(|l| (l.session.meta.session_id.clone(), &l.session)).collect();
    let plan = match pairs {
        Some(p) => {
            out.input(p, &crate::corpus::file_digest(p)?);
            let f = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            parse_pairing_plan(std::io::BufReader::new(f)).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
        }
        None => auto_pairing_plan(&by_id.values().copied().collect::<Vec<_>>()),
    };
    if plan.is_empty() {
        return Err(CliError::Data("pairing plan is empty".into()));
    }
    let report = identification_experiment(&by_id, &plan, &cfg.identification()?)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let rule = cfg.rule()?;
    for c in report.tally(rule) {
        println!(
            "{:<12} pairs={:<5} same={:>6.2}% different={:>6.2}%",
            c.class.code(),
            c.total,
            c.same_pct(),
            c.different_pct()
        );
    }
    out.table(&report.tally_table(rule));
    out.table(&report.outcomes_table());
    finish(out, cfg)
}

fn parse_window(w: &str) -> Res<(u64, u64)> {
    let (a, b) = w
        .split_once(':')
        .or_else(|| w.split_once(".."))
        .ok_or_else(|| CliError::Usage(format!("window `{w}`: expected START:END")))?;
    let parse = |v: &str| v.trim().parse::<u64>().map_err(|_| CliError::Usage(format!("window `{w}`: `{v}` is not a time")));
    let (a, b) = (parse(a)?, parse(b)?);
    if b <= a {
        return Err(CliError::Usage(format!("window `{w}` is empty")));
    }
    Ok((a, b))
}

fn graph_spec(args: &RenderArgs) -> Res<GraphSpec> {
    let mut spec = GraphSpec::default();
    if let Some(w) = &args.window {
        spec.window = Some(parse_window(w)?);
    }
    spec.width = args.width.unwrap_or(spec.width);
    spec.height = args.height.unwrap_or(spec.height);
    spec.font_size = args.font_size.unwrap_or(spec.font_size);
    spec.x_max = args.x_max;
    for layer in &args.hide {
        let l = &mut spec.layers;
        match layer {
            LayerArg::Keystrokes => l.keystrokes = false,
            LayerArg::Fixations => l.fixations = false,
            LayerArg::Aus => l.aus = false,
            LayerArg::Tasks => l.tasks = false,
            LayerArg::Segments => l.segments = false,
            LayerArg::TspBoxes => l.tsp_boxes = false,
            LayerArg::Hof => l.hof = false,
        }
    }
    Ok(spec)
}

fn render(args: &RenderArgs, cfg: &RunConfig) -> Res<()> {
    let mut out = Outputs::new("render", cfg);
    let spec = graph_spec(args)?;
    let corpus = usable_corpus(&args.corpus.paths, cfg, &mut out, true)?;
    if let Some(id) = &args.graph {
        let target = corpus
            .iter()
            .find(|l| &l.session.meta.session_id == id)
            .ok_or_else(|| CliError::Data(format!("unknown session id `{id}`")))?;
        let s = &target.session;
        let same_translator: Vec<&SessionLog> = corpus
            .iter()
            .map(|l| &l.session)
            .filter(|x| x.meta.translator_id == s.meta.translator_id && cfg.modes.iter().any(|m| m == x.meta.mode()))
            .collect();
        let profiles = match &args.profiles {
            Some(p) => read_profiles(p)?,
            None if same_translator.is_empty() => BTreeMap::new(),
            None => compute_profiles(&same_translator, cfg).unwrap_or_default(),
        };
        let tree = match segment_with_profiles(s, &profiles, cfg.delay) {
            Ok(t) => Some(t),
            Err(e) => {
                out.warn(format!("{id}: {e}; segment layers omitted"));
                None
            }
        };
        let aus = tree.as_ref().map(|t| derive_activity_units(s, t.thresholds.tsp, &cfg.au_params()));
        let track = match crate::corpus::annotation_index(&args.annotations).get(id) {
            Some(p) => Some(StateTrack::new(load_annotations(p)?).map_err(|e| CliError::Data(e.to_string()))?),
            None => None,
        };
        let source_tokens: Option<Vec<String>> = match &args.source_text {
            Some(p) => Some(
                std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?
                    .split_whitespace()
                    .map(String::from)
                    .collect(),
            ),
            None => None,
        };
        let alignment = match &args.alignment {
            Some(p) => {
                let f = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
                Some(parse_alignment(std::io::BufReader::new(f)).map_err(|e| CliError::Data(e.to_string()))?)
            }
            None => None,
        };
        let mut input = GraphInput::new(s);
        input.tree = tree.as_ref();
        input.track = track.as_ref();
        input.aus = aus.as_deref();
        input.source_tokens = source_tokens.as_deref();
        input.alignment = alignment.as_deref();
        let svg = render_progression_graph(&input, &spec).map_err(|e| CliError::Data(e.to_string()))?;
        out.raw(&format!("graph_{id}.svg"), svg.into_bytes());
    }
    if let Some(kind) = args.dist {
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for l in &corpus {
            let m = &l.session.meta;
            let key = match args.group_by {
                GroupArg::Study => m.study_id.clone(),
                GroupArg::Lang => m.target_lang.clone(),
                GroupArg::Translator => m.translator_id.clone(),
                GroupArg::Mode => m.mode().to_string(),
                GroupArg::Session => m.session_id.clone(),
            };
            groups.entry(key).or_default().extend(keyseg_core::iki::all_ikis(&l.session.keys).into_iter().map(|v| v as f64));
        }
        let opts = DistributionOptions { kde: kind == DistArg::Density, ..Default::default() };
        let summaries = groups
            .iter()
            .map(|(k, v)| iki_distribution(v, &opts).map(|s| (k.clone(), s)).map_err(|e| anyhow!("{k}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let series: Vec<DistributionSeries> =
            summaries.iter().map(|(label, summary)| DistributionSeries { label: label.clone(), summary }).collect();
        let (dk, name) = match kind {
            DistArg::Cdf => (DistributionKind::Cdf, "cdf"),
            DistArg::Density => (DistributionKind::Density, "density"),
        };
        let svg = render_distribution(&series, dk, &spec).map_err(|e| CliError::Data(e.to_string()))?;
        out.raw(&format!("dist_{name}.svg"), svg.into_bytes());
        let mut t = ReportTable::new("dist_summary", "iki_distribution")
            .text("group")
            .int("n", None)
            .float("mean", Some("ms"))
            .float("median", Some("ms"))
            .float("min", Some("ms"))
            .float("max", Some("ms"))
            .param("group_by", format!("{:?}", args.group_by).to_lowercase());
        for (label, s) in &summaries {
            t.push(vec![label.as_str().into(), s.count.into(), s.mean.into(), s.median.into(), s.min.into(), s.max.into()]);
        }
        out.table(&t);
    }
    finish(out, cfg)
}

fn synth(seed: u64, translators: usize, sessions: usize, keys: usize, planted: Option<usize>, cfg: &RunConfig) -> Res<()> {
    let mut out = Outputs::new("synth", cfg);
    let write = |out: &mut Outputs, s: &SessionLog| -> Res<()> {
        let mut buf = Vec::new();
        write_session(s, &mut buf).context("serializing session")?;
        out.raw(&format!("{}.session.tsv", s.meta.session_id), buf);
        Ok(())
    };
    if let Some(k) = planted {
        if k == 0 {
            return Err(CliError::Usage("--planted needs at least one segment".into()));
        }
        let mut r = rng(seed);
        let th = random_thresholds(&mut r);
        let p = planted_session(&mut r, &th, k, 6);
        write(&mut out, &p.session)?;
        out.json("planted.json", &json!({ "seed": seed, "thresholds": p.thresholds, "labels": p.labels }));
    } else {
        if translators == 0 || sessions == 0 || keys < 2 {
            return Err(CliError::Usage("need at least one translator, one session and two keys".into()));
        }
        for s in synthetic_corpus(seed, translators, sessions, keys) {
            write(&mut out, &s)?;
        }
    }
    finish(out, cfg)
}
