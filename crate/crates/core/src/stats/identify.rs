//! Can a translator be recognised from the IKI distribution alone? Pairs of
//! sessions are compared with the two-sample KS test and each pair is declared
//! "same translator" or "different translator" by a decision rule.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ks::{ks2_test_with, KsOptions};
use super::StatsError;
use crate::iki::{all_ikis, classify_with, compute_ikis, ClassifyOptions, KeyClass};
use crate::report::ReportTable;
use crate::session::SessionLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonClass {
    /// Two from-scratch translations by one translator.
    SameTranslatorTranslation,
    /// A from-scratch translation and a post-editing session by one translator.
    SameTranslatorPostedit,
    /// From-scratch translations by two different translators.
    DifferentTranslator,
}

impl ComparisonClass {
    pub const ALL: [ComparisonClass; 3] = [
        ComparisonClass::SameTranslatorTranslation,
        ComparisonClass::SameTranslatorPostedit,
        ComparisonClass::DifferentTranslator,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ComparisonClass::SameTranslatorTranslation => "translation",
            ComparisonClass::SameTranslatorPostedit => "postedit",
            ComparisonClass::DifferentTranslator => "different",
        }
    }

    pub fn ground_truth(self) -> Decision {
        match self {
            ComparisonClass::DifferentTranslator => Decision::Different,
            _ => Decision::Same,
        }
    }
}

impl FromStr for ComparisonClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ComparisonClass::ALL
            .into_iter()
            .find(|c| c.code() == s.trim())
            .ok_or_else(|| format!("unknown comparison class `{}`", s.trim()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Same,
    Different,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Same => "same",
            Decision::Different => "different",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionRule {
    /// Same population iff the test fails to reject (`p >= alpha`).
    Conventional,
    /// Same population iff `p < alpha`, as literally worded in the source
    /// experiment.
    PaperLiteral,
}

impl DecisionRule {
    pub fn decide(self, p_value: f64, alpha: f64) -> Decision {
        let reject = p_value < alpha;
        match (self, reject) {
            (DecisionRule::Conventional, false) | (DecisionRule::PaperLiteral, true) => Decision::Same,
            _ => Decision::Different,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            DecisionRule::Conventional => "conventional",
            DecisionRule::PaperLiteral => "paper-literal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFilter {
    AllIkis,
    WithinWord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationConfig {
    pub alpha: f64,
    pub translation_filter: SampleFilter,
    pub postedit_filter: SampleFilter,
    pub different_filter: SampleFilter,
    pub classify: ClassifyOptions,
    pub ks_exact_limit: usize,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        IdentificationConfig {
            alpha: 0.05,
            translation_filter: SampleFilter::AllIkis,
            postedit_filter: SampleFilter::WithinWord,
            different_filter: SampleFilter::AllIkis,
            classify: ClassifyOptions::default(),
            ks_exact_limit: super::ks::DEFAULT_EXACT_LIMIT,
        }
    }
}

impl IdentificationConfig {
    fn filter_for(&self, class: ComparisonClass) -> SampleFilter {
        match class {
            ComparisonClass::SameTranslatorTranslation => self.translation_filter,
            ComparisonClass::SameTranslatorPostedit => self.postedit_filter,
            ComparisonClass::DifferentTranslator => self.different_filter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSpec {
    pub a: String,
    pub b: String,
    pub class: ComparisonClass,
}

/// Reads `session_a<TAB>session_b<TAB>class` rows; `class` is one of
/// `translation`, `postedit`, `different`.
pub fn parse_pairing_plan<R: BufRead>(reader: R) -> Result<Vec<PairSpec>, StatsError> {
    let mut plan = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| StatsError::BadPlan { line: idx + 1, message: e.to_string() })?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields[0] == "session_a" {
            continue;
        }
        if fields.len() < 3 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(StatsError::BadPlan { line: idx + 1, message: "expected session_a, session_b, class".into() });
        }
        let class = fields[2].parse().map_err(|message| StatsError::BadPlan { line: idx + 1, message })?;
        plan.push(PairSpec { a: fields[0].to_string(), b: fields[1].to_string(), class });
    }
    Ok(plan)
}

/// Every same-language pairing a corpus supports: two translations of one
/// translator, translation × post-edit of one translator, and translations
/// of two different translators. Sessions are identified by `session_id`;
/// the `mode` header tells translations from post-edits.
pub fn auto_pairing_plan(sessions: &[&SessionLog]) -> Vec<PairSpec> {
    let mut sorted: Vec<&SessionLog> = sessions.to_vec();
    sorted.sort_by(|x, y| x.meta.session_id.cmp(&y.meta.session_id));
    let is_postedit = |s: &SessionLog| s.meta.mode() == "postedit";
    let mut plan = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if a.meta.target_lang != b.meta.target_lang {
                continue;
            }
            let same = a.meta.translator_id == b.meta.translator_id;
            let class = match (same, is_postedit(a), is_postedit(b)) {
                (true, false, false) => ComparisonClass::SameTranslatorTranslation,
                (true, true, false) | (true, false, true) => ComparisonClass::SameTranslatorPostedit,
                (false, false, false) => ComparisonClass::DifferentTranslator,
                _ => continue,
            };
            plan.push(PairSpec { a: a.meta.session_id.clone(), b: b.meta.session_id.clone(), class });
        }
    }
    plan
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub a: String,
    pub b: String,
    pub class: ComparisonClass,
    pub ground_truth: Decision,
    pub statistic: f64,
    pub p_value: f64,
    pub conventional: Decision,
    pub paper_literal: Decision,
}

impl PairOutcome {
    pub fn decision(&self, rule: DecisionRule) -> Decision {
        match rule {
            DecisionRule::Conventional => self.conventional,
            DecisionRule::PaperLiteral => self.paper_literal,
        }
    }
}

/// Per-class tally for one rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassTally {
    pub class: ComparisonClass,
    pub total: usize,
    pub same: usize,
    pub different: usize,
}

impl ClassTally {
    pub fn same_pct(&self) -> f64 {
        if self.total == 0 { 0.0 } else { 100.0 * self.same as f64 / self.total as f64 }
    }

    pub fn different_pct(&self) -> f64 {
        if self.total == 0 { 0.0 } else { 100.0 * self.different as f64 / self.total as f64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationReport {
    pub alpha: f64,
    pub outcomes: Vec<PairOutcome>,
}

impl IdentificationReport {
    pub fn tally(&self, rule: DecisionRule) -> Vec<ClassTally> {
        ComparisonClass::ALL
            .into_iter()
            .map(|class| {
                let mut t = ClassTally { class, total: 0, same: 0, different: 0 };
                for o in self.outcomes.iter().filter(|o| o.class == class) {
                    t.total += 1;
                    match o.decision(rule) {
                        Decision::Same => t.same += 1,
                        Decision::Different => t.different += 1,
                    }
                }
                t
            })
            .collect()
    }

    /// One row per compared pair.
    pub fn outcomes_table(&self) -> ReportTable {
        let mut t = ReportTable::new("identification_pairs", "identification_experiment")
            .text("session_a")
            .text("session_b")
            .text("class")
            .text("ground_truth")
            .float("statistic", None)
            .float("p_value", None)
            .text("conventional")
            .text("paper_literal")
            .param("alpha", self.alpha);
        for o in &self.outcomes {
            t.push(vec![
                o.a.as_str().into(),
                o.b.as_str().into(),
                o.class.code().into(),
                o.ground_truth.to_string().into(),
                o.statistic.into(),
                o.p_value.into(),
                o.conventional.to_string().into(),
                o.paper_literal.to_string().into(),
            ]);
        }
        t
    }

    /// Same / different percentages per class under both rules. `primary`
    /// marks the rows of the rule selected for reporting.
    pub fn tally_table(&self, primary: DecisionRule) -> ReportTable {
        let mut t = ReportTable::new("identification", "identification_experiment")
            .text("rule")
            .boolean("primary")
            .text("class")
            .int("pairs", None)
            .int("same", None)
            .int("different", None)
            .float("same_pct", Some("%"))
            .float("different_pct", Some("%"))
            .param("alpha", self.alpha);
        for rule in [DecisionRule::Conventional, DecisionRule::PaperLiteral] {
            for c in self.tally(rule) {
                t.push(vec![
                    rule.code().into(),
                    (rule == primary).into(),
                    c.class.code().into(),
                    c.total.into(),
                    c.same.into(),
                    c.different.into(),
                    c.same_pct().into(),
                    c.different_pct().into(),
                ]);
            }
        }
        t
    }
}

fn sample_for(session: &SessionLog, filter: SampleFilter, opts: &ClassifyOptions) -> Result<Vec<f64>, StatsError> {
    Ok(match filter {
        SampleFilter::AllIkis => all_ikis(&session.keys).into_iter().map(|v| v as f64).collect(),
        SampleFilter::WithinWord => {
            let classes = classify_with(&session.keys, opts).map_err(|_| StatsError::EmptySample)?;
            compute_ikis(&session.keys, &classes)
                .into_iter()
                .filter(|r| r.class_of_later_key == KeyClass::WithinWord)
                .map(|r| r.iki as f64)
                .collect()
        }
    })
}

/// Runs the KS comparison for every planned pair. `sessions` is keyed by
/// session id.
pub fn identification_experiment(
    sessions: &BTreeMap<String, &SessionLog>,
    plan: &[PairSpec],
    cfg: &IdentificationConfig,
) -> Result<IdentificationReport, StatsError> {
    let lookup = |id: &str| sessions.get(id).copied().ok_or_else(|| StatsError::MissingSession(id.to_string()));
    let mut outcomes = Vec::with_capacity(plan.len());
    for pair in plan {
        let (a, b) = (lookup(&pair.a)?, lookup(&pair.b)?);
        let filter = cfg.filter_for(pair.class);
        let sa = sample_for(a, filter, &cfg.classify)?;
        let sb = sample_for(b, filter, &cfg.classify)?;
        let r = ks2_test_with(&sa, &sb, KsOptions { exact_limit: cfg.ks_exact_limit })?;
        outcomes.push(PairOutcome {
            a: pair.a.clone(),
            b: pair.b.clone(),
            class: pair.class,
            ground_truth: pair.class.ground_truth(),
            statistic: r.statistic,
            p_value: r.p_value,
            conventional: DecisionRule::Conventional.decide(r.p_value, cfg.alpha),
            paper_literal: DecisionRule::PaperLiteral.decide(r.p_value, cfg.alpha),
        });
    }
    Ok(IdentificationReport { alpha: cfg.alpha, outcomes })
}
