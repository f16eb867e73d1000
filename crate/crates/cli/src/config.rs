//! Run configuration: TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use keyseg_core::hof::{AuParams, SuggestParams};
use keyseg_core::iki::{BoundarySet, ClassifyOptions, ProfileParams, DEFAULT_BOUNDARY_CHARS, DEFAULT_DELAY_MS};
use keyseg_core::report::DEFAULT_PRECISION;
use keyseg_core::session::ColumnMap;
use keyseg_core::stats::{DecisionRule, IdentificationConfig, SampleFilter, DEFAULT_EXACT_LIMIT};
use keyseg_core::Format;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// IKIs below this many ms join keys into one motor program.
    pub delay: f64,
    pub boundary: String,
    pub fold_word_final: bool,
    pub rsp_multiplier: f64,
    pub tsp_multiplier: f64,
    /// Session modes that contribute to profiles and segmentation.
    pub modes: Vec<String>,
    pub out: PathBuf,
    pub format: Format,
    pub precision: usize,
    pub identify: IdentifySection,
    pub au: AuSection,
    pub suggest: SuggestSection,
    pub columns: ColumnMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifySection {
    pub alpha: f64,
    pub rule: String,
    pub exact_limit: usize,
    pub translation_filter: String,
    pub postedit_filter: String,
    pub different_filter: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuSection {
    pub idle_ms: u64,
    pub min_unit_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuggestSection {
    pub orientation_min_ms: u64,
    pub orientation_t1_share: f64,
    pub hesitation_deletion_share: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ProfileParams::default();
        RunConfig {
            delay: DEFAULT_DELAY_MS,
            boundary: DEFAULT_BOUNDARY_CHARS.into(),
            fold_word_final: false,
            rsp_multiplier: p.rsp_multiplier,
            tsp_multiplier: p.tsp_multiplier,
            modes: vec!["translation".into()],
            out: PathBuf::from("keyseg-out"),
            format: Format::Csv,
            precision: DEFAULT_PRECISION,
            identify: IdentifySection::default(),
            au: AuSection::default(),
            suggest: SuggestSection::default(),
            columns: ColumnMap::default(),
        }
    }
}

impl Default for IdentifySection {
    fn default() -> Self {
        IdentifySection {
            alpha: 0.05,
            rule: "conventional".into(),
            exact_limit: DEFAULT_EXACT_LIMIT,
            translation_filter: "all".into(),
            postedit_filter: "within_word".into(),
            different_filter: "all".into(),
        }
    }
}

impl Default for AuSection {
    fn default() -> Self {
        let p = AuParams::default();
        AuSection { idle_ms: p.idle_ms, min_unit_ms: p.min_unit_ms }
    }
}

impl Default for SuggestSection {
    fn default() -> Self {
        let p = SuggestParams::default();
        SuggestSection {
            orientation_min_ms: p.orientation_min_ms,
            orientation_t1_share: p.orientation_t1_share,
            hesitation_deletion_share: p.hesitation_deletion_share,
        }
    }
}

fn parse_filter(name: &str) -> Result<SampleFilter> {
    Ok(match name {
        "all" => SampleFilter::AllIkis,
        "within_word" => SampleFilter::WithinWord,
        other => bail!("unknown sample filter `{other}` (expected all or within_word)"),
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.delay > 0.0) {
            bail!("delay must be > 0");
        }
        if !(self.rsp_multiplier > 0.0 && self.tsp_multiplier > 0.0) {
            bail!("rsp_multiplier and tsp_multiplier must be > 0");
        }
        if !(self.identify.alpha > 0.0 && self.identify.alpha < 1.0) {
            bail!("identify.alpha must lie in (0, 1)");
        }
        if self.boundary.is_empty() {
            bail!("boundary set is empty");
        }
        if self.modes.is_empty() {
            bail!("modes is empty");
        }
        self.rule()?;
        self.identification()?;
        Ok(())
    }

    pub fn classify(&self) -> ClassifyOptions {
        ClassifyOptions { boundary: BoundarySet::from_chars(&self.boundary), fold_word_final: self.fold_word_final }
    }

    pub fn profile_params(&self) -> ProfileParams {
        ProfileParams { rsp_multiplier: self.rsp_multiplier, tsp_multiplier: self.tsp_multiplier, rsp_floor: self.delay }
    }

    pub fn au_params(&self) -> AuParams {
        AuParams { idle_ms: self.au.idle_ms, min_unit_ms: self.au.min_unit_ms }
    }

    pub fn suggest_params(&self) -> SuggestParams {
        SuggestParams {
            orientation_min_ms: self.suggest.orientation_min_ms,
            orientation_t1_share: self.suggest.orientation_t1_share,
            hesitation_deletion_share: self.suggest.hesitation_deletion_share,
        }
    }

    pub fn rule(&self) -> Result<DecisionRule> {
        Ok(match self.identify.rule.as_str() {
            "conventional" => DecisionRule::Conventional,
            "paper_literal" | "paper-literal" => DecisionRule::PaperLiteral,
            other => bail!("unknown decision rule `{other}` (expected conventional or paper_literal)"),
        })
    }

    pub fn identification(&self) -> Result<IdentificationConfig> {
        Ok(IdentificationConfig {
            alpha: self.identify.alpha,
            translation_filter: parse_filter(&self.identify.translation_filter)?,
            postedit_filter: parse_filter(&self.identify.postedit_filter)?,
            different_filter: parse_filter(&self.identify.different_filter)?,
            classify: self.classify(),
            ks_exact_limit: self.identify.exact_limit,
        })
    }

    /// SHA-256 of the canonical TOML rendering, output directory excluded.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let text = toml::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        cfg.check().unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = toml::from_str("delay = 150\n[identify]\nalpha = 0.01\n").unwrap();
        assert_eq!(cfg.delay, 150.0);
        assert_eq!(cfg.identify.alpha, 0.01);
        assert_eq!(cfg.identify.rule, "conventional");
        assert_eq!(cfg.tsp_multiplier, 3.0);
    }

    #[test]
    fn rejects_bad_values() {
        for text in ["rsp_multiplier = 0", "[identify]\nalpha = 1.0", "[identify]\nrule = \"maybe\"", "bogus = 1"] {
            let parsed = toml::from_str::<RunConfig>(text);
            assert!(parsed.is_err() || parsed.unwrap().check().is_err(), "{text}");
        }
    }
}
