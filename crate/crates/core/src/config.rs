//! Pipeline configuration: one TOML file with a table per stage. Every field
//! has a default, and command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotate::LlmConfig;
use crate::compose::{InputFormat, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::filter::DEFAULT_MIN_WORDS;
use crate::gate_split::{DEFAULT_RATIOS, DEFAULT_THRESHOLD};
use crate::ingest::Layout;
use crate::masking::DEFAULT_MASK_RATE;
use crate::metrics::ProviderKind;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub ingest: IngestConfig,
    pub vocab: VocabConfig,
    pub filter: FilterConfig,
    pub annotate: AnnotateConfig,
    pub gate: GateConfig,
    pub split: SplitConfig,
    pub compose: ComposeConfig,
    pub mask: MaskConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: DEFAULT_SEED,
            out_dir: PathBuf::from("out"),
            ingest: IngestConfig::default(),
            vocab: VocabConfig::default(),
            filter: FilterConfig::default(),
            annotate: AnnotateConfig::default(),
            gate: GateConfig::default(),
            split: SplitConfig::default(),
            compose: ComposeConfig::default(),
            mask: MaskConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub layout: Layout,
    /// Alias TSV; the bundled starter table is used when unset.
    pub aliases: Option<PathBuf>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            layout: Layout::Downstream,
            aliases: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    pub max_size: usize,
    pub min_freq: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            max_size: 32_000,
            min_freq: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_words: usize,
    pub subset_size: Option<usize>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_words: DEFAULT_MIN_WORDS,
            subset_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotateConfig {
    #[serde(flatten)]
    pub llm: LlmConfig,
    pub cache_dir: PathBuf,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        AnnotateConfig {
            llm: LlmConfig::default(),
            cache_dir: PathBuf::from(".docsum-cache"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    pub threshold: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratios: [f64; 3],
    pub stratify_by_label: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: DEFAULT_RATIOS,
            stratify_by_label: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComposeConfig {
    pub format: InputFormat,
    pub budget: usize,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        ComposeConfig {
            format: InputFormat::DocumentOnly,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskConfig {
    pub rate: f64,
    pub mask_document_only: bool,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            rate: DEFAULT_MASK_RATE,
            mask_document_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub metrics: Vec<String>,
    pub provider: ProviderKind,
    pub embedding_dim: usize,
    pub embedding_base_url: String,
    pub embedding_model: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            metrics: vec!["rouge".into()],
            provider: ProviderKind::Hashed,
            embedding_dim: 256,
            embedding_base_url: "http://127.0.0.1:8000".into(),
            embedding_model: "bert-base-uncased".into(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.mask.rate) {
            return bad(format!("mask.rate {} outside [0, 1]", self.mask.rate));
        }
        if !(0.0..=1.0).contains(&self.gate.threshold) {
            return bad(format!("gate.threshold {} outside [0, 1]", self.gate.threshold));
        }
        let sum: f64 = self.split.ratios.iter().sum();
        if self.split.ratios.iter().any(|r| *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return bad(format!("split.ratios {:?} must be non-negative and sum to 1", self.split.ratios));
        }
        if self.annotate.llm.temperature < 0.0 {
            return bad("annotate.temperature must be non-negative".into());
        }
        if self.annotate.llm.parallelism == 0 {
            return bad("annotate.parallelism must be at least 1".into());
        }
        if self.vocab.max_size < crate::tokenizer::SPECIAL_TOKENS.len() {
            return bad("vocab.max_size must leave room for the special tokens".into());
        }
        for m in &self.eval.metrics {
            if m != "rouge" && m != "bertscore" {
                return bad(format!("unknown metric `{m}`"));
            }
        }
        Ok(())
    }
}
