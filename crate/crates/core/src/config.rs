//! Run configuration (TOML). Secrets are never stored here: the LLM API key
//! is read from the environment variable named by `llm.api_key_env`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::eval::validate_taus;
use crate::inference::{InferenceConfig, TokenBudget};
use crate::normalize::ValidationPolicy;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Input document; relative paths resolve against the config file.
    pub document: Option<PathBuf>,
    /// Defaults to the document file stem.
    pub doc_id: Option<String>,
    pub tagger: TaggerSettings,
    pub llm: LlmSettings,
    pub validation: ValidationSettings,
    pub alignment: AlignmentSettings,
    pub evaluation: EvaluationSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaggerMode {
    Builtin,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaggerSettings {
    pub mode: TaggerMode,
    pub endpoint: String,
    pub timeout_ms: u64,
    /// Fall back to the builtin tagger when the remote one is unreachable.
    pub fallback: bool,
}

impl Default for TaggerSettings {
    fn default() -> Self {
        Self {
            mode: TaggerMode::Builtin,
            endpoint: "http://127.0.0.1:8750".into(),
            timeout_ms: 5_000,
            fallback: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    Live,
    Replay,
    Record,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    pub mode: LlmMode,
    pub endpoint: String,
    pub api_key_env: String,
    pub model: String,
    pub temperature: f64,
    pub retries: u32,
    pub token_lo: u32,
    pub token_hi: u32,
    pub multiplier: u32,
    pub per_triple: u32,
    pub max_in_flight: usize,
    pub timeout_ms: u64,
    /// Required for replay and record modes.
    pub cassette: Option<PathBuf>,
}

impl Default for LlmSettings {
    fn default() -> Self {
        let inference = InferenceConfig::default();
        let budget = TokenBudget::default();
        Self {
            mode: LlmMode::Replay,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            api_key_env: "ONTOSCAFFOLD_API_KEY".into(),
            model: inference.model_name,
            temperature: inference.temperature,
            retries: inference.retries,
            token_lo: budget.lo,
            token_hi: budget.hi,
            multiplier: budget.multiplier,
            per_triple: budget.per_triple,
            max_in_flight: inference.max_in_flight,
            timeout_ms: 60_000,
            cassette: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSettings {
    pub policy: ValidationPolicy,
    pub orphan_on_empty_verbs: bool,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            policy: ValidationPolicy::Lenient,
            orphan_on_empty_verbs: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityBackend {
    Exact,
    Trigram,
    Embedding,
}

impl std::str::FromStr for SimilarityBackend {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "trigram" => Ok(Self::Trigram),
            "embedding" => Ok(Self::Embedding),
            _ => Err(ConfigError::Unknown {
                kind: "similarity backend",
                value: s.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignmentSettings {
    pub threshold: f64,
    pub backend: SimilarityBackend,
}

impl Default for AlignmentSettings {
    fn default() -> Self {
        Self {
            threshold: 0.85,
            backend: SimilarityBackend::Trigram,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSettings {
    pub mode: LlmMode,
    pub endpoint: String,
    pub model: String,
    pub cassette: Option<PathBuf>,
    pub timeout_ms: u64,
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        Self {
            mode: LlmMode::Replay,
            endpoint: "http://127.0.0.1:8751/embed".into(),
            model: "all-MiniLM-L6-v2".into(),
            cassette: None,
            timeout_ms: 30_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    pub backend: SimilarityBackend,
    pub taus: Vec<f64>,
    pub embedding: EmbeddingSettings,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            backend: SimilarityBackend::Trigram,
            taus: crate::eval::default_taus(),
            embedding: EmbeddingSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Load from a file, resolving relative input paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.document);
        fix(&mut self.llm.cassette);
        fix(&mut self.evaluation.embedding.cassette);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.inference_config().validate()?;
        crate::align::validate_threshold(self.alignment.threshold)?;
        validate_taus(&self.evaluation.taus)?;
        if self.evaluation.backend == SimilarityBackend::Embedding
            && self.evaluation.embedding.mode != LlmMode::Live
            && self.evaluation.embedding.cassette.is_none()
        {
            return Err(ConfigError::Invalid(
                "evaluation.embedding.cassette is required unless mode is live".into(),
            ));
        }
        Ok(())
    }

    /// Settings needed by extraction on top of [`RunConfig::validate`].
    pub fn validate_for_extract(&self) -> Result<(), ConfigError> {
        self.validate()?;
        if self.document.is_none() {
            return Err(ConfigError::Invalid("no input document given".into()));
        }
        if self.llm.mode != LlmMode::Live && self.llm.cassette.is_none() {
            return Err(ConfigError::Invalid(
                "llm.cassette is required in replay and record modes".into(),
            ));
        }
        Ok(())
    }

    pub fn inference_config(&self) -> InferenceConfig {
        InferenceConfig {
            model_name: self.llm.model.clone(),
            temperature: self.llm.temperature,
            retries: self.llm.retries,
            budget: TokenBudget {
                multiplier: self.llm.multiplier,
                per_triple: self.llm.per_triple,
                lo: self.llm.token_lo,
                hi: self.llm.token_hi,
            },
            max_in_flight: self.llm.max_in_flight,
            orphan_on_empty_verbs: self.validation.orphan_on_empty_verbs,
        }
    }

    pub fn tagger_timeout(&self) -> Duration {
        Duration::from_millis(self.tagger.timeout_ms)
    }
}
