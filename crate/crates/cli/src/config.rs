//! TOML run configuration.
//!
//! String values may reference environment variables as `${NAME}`; relative
//! paths are resolved against the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use solidarity_core::corpus::Dialect;
use solidarity_core::prompt::{PromptFormat, ShotMode};
use solidarity_core::taxonomy::TargetGroup;
use solidarity_core::trends::{StabilityParams, YearRange, DEFAULT_EXCLUSION};
use solidarity_llm::BackendConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_target")]
    pub target: TargetGroup,
    #[serde(default)]
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub prompt: PromptSection,
    #[serde(default)]
    pub trends: TrendSection,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub service: ServiceSection,
    /// Directory the config file lives in.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_target() -> TargetGroup {
    TargetGroup::Migrant
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus_dir: PathBuf,
    pub output_dir: PathBuf,
    pub templates_dir: PathBuf,
    /// Keyword file per target group; the shipped list is used when absent.
    #[serde(default)]
    pub keywords: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub gold: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    /// Forces one XML dialect instead of detecting it per file.
    #[serde(default)]
    pub dialect: Option<Dialect>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptSection {
    #[serde(default = "default_format")]
    pub format: PromptFormat,
    #[serde(default = "default_mode")]
    pub mode: ShotMode,
    /// Defaults to `<target>-<format>-<mode>`.
    #[serde(default)]
    pub run_id: Option<String>,
}

fn default_format() -> PromptFormat {
    PromptFormat::TwoStep
}

fn default_mode() -> ShotMode {
    ShotMode::Zero
}

impl Default for PromptSection {
    fn default() -> Self {
        PromptSection { format: default_format(), mode: default_mode(), run_id: None }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendSection {
    /// Year ranges left out of trends. Absent: 1933-1949 for migrants,
    /// nothing for women.
    #[serde(default)]
    pub exclusion: Option<Vec<YearRange>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySection {
    pub num_subsets: usize,
    pub min_keywords: usize,
    pub min_dataset_share: f64,
    pub min_timeline_span: f64,
    pub max_draws: usize,
}

impl Default for StabilitySection {
    fn default() -> Self {
        let p = StabilityParams::default();
        StabilitySection {
            num_subsets: p.num_subsets,
            min_keywords: p.min_keywords,
            min_dataset_share: p.min_dataset_share,
            min_timeline_span: p.min_timeline_span,
            max_draws: p.max_draws,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub host: String,
    pub port: u16,
    pub data_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
    /// token → annotator id
    pub tokens: Option<BTreeMap<String, String>>,
    pub snapshot_every: u64,
}

impl Default for ServiceSection {
    fn default() -> Self {
        ServiceSection {
            host: "127.0.0.1".into(),
            port: 8080,
            data_dir: PathBuf::from("gold-store"),
            static_dir: None,
            tokens: None,
            snapshot_every: 256,
        }
    }
}

/// Replaces `${NAME}` with the variable's value. `$${` escapes a literal `${`.
pub fn interpolate(text: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find("${") {
        if rest[..pos].ends_with('$') {
            out.push_str(&rest[..pos - 1]);
            out.push_str("${");
            rest = &rest[pos + 2..];
            continue;
        }
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 2..];
        let end = after.find('}').ok_or_else(|| format!("unterminated ${{ in {text:?}"))?;
        let name = &after[..end];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("invalid variable name {name:?}"));
        }
        out.push_str(&lookup(name).ok_or_else(|| format!("environment variable {name} is not set"))?);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn interpolate_value(v: &mut toml::Value, lookup: &dyn Fn(&str) -> Option<String>) -> Result<(), String> {
    match v {
        toml::Value::String(s) => *s = interpolate(s, lookup)?,
        toml::Value::Array(items) => {
            for item in items {
                interpolate_value(item, lookup)?;
            }
        }
        toml::Value::Table(t) => {
            for (_, item) in t.iter_mut() {
                interpolate_value(item, lookup)?;
            }
        }
        _ => {}
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<RunConfig, CliError> {
        let mut value: toml::Value = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        interpolate_value(&mut value, &|name| std::env::var(name).ok()).map_err(CliError::Config)?;
        let mut cfg: RunConfig = value.try_into().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.paths.output_dir)
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.resolve(&self.paths.corpus_dir)
    }

    pub fn templates_dir(&self) -> PathBuf {
        self.resolve(&self.paths.templates_dir)
    }

    /// Template directory for the target: `<templates_dir>/<target>` when it
    /// exists, else `templates_dir` itself.
    pub fn target_templates_dir(&self) -> PathBuf {
        let nested = self.templates_dir().join(self.target.as_str());
        if nested.is_dir() {
            nested
        } else {
            self.templates_dir()
        }
    }

    pub fn keywords_path(&self) -> Option<PathBuf> {
        self.paths.keywords.get(self.target.as_str()).map(|p| self.resolve(p))
    }

    pub fn run_id(&self) -> String {
        self.prompt.run_id.clone().unwrap_or_else(|| {
            format!("{}-{}-{}", self.target, self.prompt.format, self.prompt.mode)
        })
    }

    pub fn exclusion(&self) -> Vec<YearRange> {
        match &self.trends.exclusion {
            Some(ranges) => ranges.clone(),
            None if self.target == TargetGroup::Migrant => vec![DEFAULT_EXCLUSION],
            None => Vec::new(),
        }
    }

    pub fn stability_params(&self) -> StabilityParams {
        let s = &self.stability;
        StabilityParams {
            num_subsets: s.num_subsets,
            min_keywords: s.min_keywords,
            min_dataset_share: s.min_dataset_share,
            min_timeline_span: s.min_timeline_span,
            max_draws: s.max_draws,
            seed: self.seed,
            exclusion: self.exclusion(),
        }
    }

    /// Checks that every configured input path exists.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut required = vec![("paths.corpus_dir", self.corpus_dir()), ("paths.templates_dir", self.templates_dir())];
        for (target, p) in &self.paths.keywords {
            target
                .parse::<TargetGroup>()
                .map_err(|_| CliError::Config(format!("paths.keywords: unknown target group {target:?}")))?;
            required.push(("paths.keywords", self.resolve(p)));
        }
        if let Some(g) = &self.paths.gold {
            required.push(("paths.gold", self.resolve(g)));
        }
        for (key, p) in required {
            if !p.exists() {
                return Err(CliError::Config(format!("{key}: {} does not exist", p.display())));
            }
        }
        for r in self.exclusion() {
            if r.start > r.end {
                return Err(CliError::Config(format!("trends.exclusion: {}-{} is empty", r.start, r.end)));
            }
        }
        self.backend.validate().map_err(|e| CliError::Config(e.to_string()))
    }
}
