//! Seeded synthetic sessions: planted Task / Task-Segment structure for
//! round-trip tests, and lognormal typists for corpus-level checks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::segment::{TaskLabel, Thresholds};
use crate::session::{FixationEvent, KeyEvent, Millis, SessionLog, SessionMeta, Window};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone)]
pub struct PlantedSession {
    pub session: SessionLog,
    pub thresholds: Thresholds,
    /// Expected TS labels in order.
    pub labels: Vec<String>,
}

/// Integer thresholds with room for all three IKI bands.
pub fn random_thresholds<R: Rng>(rng: &mut R) -> Thresholds {
    let rsp = rng.random_range(150..700) as f64;
    let tsp = rsp + rng.random_range(100..2000) as f64;
    Thresholds::new(200.0, rsp, tsp).expect("rsp < tsp")
}

/// `k` segments of `1..=max_tasks` Tasks each. IKIs inside a Task fall in
/// `(0, rsp)`, between Tasks in `[rsp, tsp)`, between segments in
/// `[tsp, tsp + 5000)`.
pub fn planted_session<R: Rng>(rng: &mut R, th: &Thresholds, k: usize, max_tasks: usize) -> PlantedSession {
    let rsp = th.rsp.ceil() as Millis;
    let tsp = th.tsp.ceil() as Millis;
    let within = |r: &mut R| r.random_range(1..th.rsp.ceil() as Millis);
    let mut keys: Vec<KeyEvent> = Vec::new();
    let mut labels = Vec::with_capacity(k);
    let mut t: Millis = 0;
    let mut cursor = 0u64;
    for seg in 0..k {
        let tasks = rng.random_range(1..=max_tasks.max(1));
        let mut label = String::new();
        for task in 0..tasks {
            if seg > 0 || task > 0 {
                t += if task == 0 { rng.random_range(tsp..tsp + 5000) } else { rng.random_range(rsp..tsp) };
            }
            let kind = *[TaskLabel::A, TaskLabel::D, TaskLabel::C].choose(rng).expect("non-empty");
            let n = match kind {
                TaskLabel::C => rng.random_range(2..=8),
                _ => rng.random_range(1..=8),
            };
            let del_at = rng.random_range(0..n);
            let ins_at = (del_at + 1) % n;
            for i in 0..n {
                if i > 0 {
                    t += within(rng);
                }
                let is_del = match kind {
                    TaskLabel::A => false,
                    TaskLabel::D => true,
                    TaskLabel::C => i == del_at || (i != ins_at && rng.random_bool(0.3)),
                };
                if is_del {
                    keys.push(KeyEvent::deletion(t, "x", cursor.saturating_sub(1)));
                    cursor = cursor.saturating_sub(1);
                } else {
                    keys.push(KeyEvent::insertion(t, if rng.random_bool(0.2) { "_" } else { "e" }, cursor));
                    cursor += 1;
                }
            }
            label.push(kind.as_char());
        }
        labels.push(label);
    }
    let session = SessionLog::new(SessionMeta::new("SYN", "planted", "P00"), keys, vec![]);
    PlantedSession { session, thresholds: *th, labels }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypistParams {
    /// Median within-word IKI in ms.
    pub median_wp: f64,
    /// Median pause before a word in ms.
    pub median_bp: f64,
    pub sigma: f64,
    pub deletion_rate: f64,
    /// Probability of a long reading pause before a word.
    pub long_pause_rate: f64,
}

const WORDS: [&str; 24] = [
    "la", "casa", "de", "traduccion", "el", "texto", "que", "por", "una", "palabra", "los", "para", "con", "sobre",
    "entre", "mundo", "tiempo", "nuevo", "pero", "como", "hacia", "desde", "sin", "todo",
];

/// One session of a lognormal typist. Fixations alternate between source
/// reading in long pauses and target reading while typing.
pub fn typist_session<R: Rng>(rng: &mut R, meta: SessionMeta, p: &TypistParams, n_keys: usize) -> SessionLog {
    let wp = LogNormal::new(p.median_wp.ln(), p.sigma).expect("valid lognormal");
    let bp = LogNormal::new(p.median_bp.ln(), p.sigma).expect("valid lognormal");
    let long = LogNormal::new((p.median_bp * 8.0).ln(), 0.5).expect("valid lognormal");
    let mut keys: Vec<KeyEvent> = Vec::with_capacity(n_keys);
    let mut fixations = Vec::new();
    let mut t: Millis = 0;
    let mut cursor = 0u64;
    let mut src_token = 0u64;
    let ms = |x: f64| (x.round() as Millis).max(1);
    while keys.len() < n_keys {
        let word = *WORDS.choose(rng).expect("non-empty");
        // pause before the word
        if !keys.is_empty() {
            let pause = if rng.random_bool(p.long_pause_rate) { ms(long.sample(rng)) } else { ms(bp.sample(rng)) };
            if pause > 600 {
                let fix_len = (pause / 2).max(1);
                fixations.push(FixationEvent { time: t + pause / 4, duration: fix_len, window: Window::Source, token_index: src_token });
                src_token += 1;
            }
            t += pause;
        }
        for (i, c) in word.chars().enumerate() {
            if i > 0 {
                t += ms(wp.sample(rng));
            }
            keys.push(KeyEvent::insertion(t, c.to_string(), cursor));
            cursor += 1;
            if rng.random_bool(p.deletion_rate) {
                t += ms(wp.sample(rng) * 1.5);
                cursor -= 1;
                keys.push(KeyEvent::deletion(t, c.to_string(), cursor));
            }
        }
        t += ms(wp.sample(rng));
        keys.push(KeyEvent::insertion(t, "_", cursor));
        cursor += 1;
        if rng.random_bool(0.3) {
            let wc = cursor / 6;
            fixations.push(FixationEvent { time: t, duration: ms(wp.sample(rng)) + 80, window: Window::Target, token_index: wc });
        }
    }
    keys.truncate(n_keys.max(2));
    fixations.retain(|f| f.time <= keys.last().map_or(0, |k| k.time));
    fixations.sort_by_key(|f| f.time);
    SessionLog::new(meta, keys, fixations)
}

/// `translators × sessions_each` sessions over two target languages.
/// Odd-numbered sessions of each translator are post-edits.
pub fn synthetic_corpus(seed: u64, translators: usize, sessions_each: usize, keys_per_session: usize) -> Vec<SessionLog> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for tr in 0..translators {
        let lang = if tr % 2 == 0 { "es" } else { "ar" };
        let speed = if lang == "es" { 1.0 } else { 1.6 };
        let p = TypistParams {
            median_wp: r.random_range(110.0..220.0) * speed,
            median_bp: r.random_range(250.0..500.0) * speed,
            sigma: r.random_range(0.45..0.75),
            deletion_rate: r.random_range(0.02..0.1),
            long_pause_rate: r.random_range(0.03..0.12),
        };
        for s in 0..sessions_each {
            let mut meta = SessionMeta::new("SYN", &format!("P{tr:02}_S{s}"), &format!("P{tr:02}"));
            meta.source_lang = "en".into();
            meta.target_lang = lang.into();
            if s % 2 == 1 {
                meta.extra.insert("mode".into(), "postedit".into());
            }
            out.push(typist_session(&mut r, meta, &p, keys_per_session));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::segment_session;

    #[test]
    fn planted_structure_is_recovered() {
        for seed in 0..50 {
            let mut r = rng(seed);
            let th = random_thresholds(&mut r);
            let planted = planted_session(&mut r, &th, 5, 4);
            let tree = segment_session(&planted.session, &th).unwrap();
            let got: Vec<&str> = tree.segments.iter().map(|s| s.label.as_str()).collect();
            assert_eq!(got, planted.labels, "seed {seed}");
        }
    }

    #[test]
    fn corpus_is_reproducible() {
        let a = synthetic_corpus(3, 2, 2, 300);
        let b = synthetic_corpus(3, 2, 2, 300);
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|s| s.keys.len() == 300));
        assert!(a.iter().all(|s| crate::session::validate_session(s).is_ok()));
    }
}
