//! Shared flags, the optional JSON config file, and how they merge.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;

use scratchq::mlp::MlpConfig;
use scratchq::spectral::{FeatureBlocks, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Vas {
    Linear,
    Sqrt,
}

impl Vas {
    /// Negative regressor outputs are floored at 0 mW first.
    pub fn map(self, power_mw: f64) -> Result<f64> {
        let p = power_mw.max(0.0);
        Ok(match self {
            Vas::Linear => scratchq::eval::to_vas_linear(p)?,
            Vas::Sqrt => scratchq::eval::to_vas_sqrt(p)?,
        })
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON file with any of the keys below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub task: Option<Task>,
    /// Feature blocks: both, cm-only or accel-only.
    #[arg(long)]
    pub ablation: Option<FeatureBlocks>,
    #[arg(long, env = "SCRATCHQ_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum)]
    pub vas: Option<Vas>,
    /// Training recipe to start from (intensity or detection).
    #[arg(long)]
    pub preset: Option<Task>,
    /// MLP setting as key=value, e.g. epochs=20 or hidden_sizes=64,64.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    task: Option<String>,
    ablation: Option<String>,
    seed: Option<u64>,
    jobs: Option<usize>,
    vas: Option<Vas>,
    preset: Option<String>,
    #[serde(rename = "override", default)]
    overrides: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub task: Option<Task>,
    pub ablation: FeatureBlocks,
    pub seed: Option<u64>,
    pub jobs: usize,
    pub vas: Option<Vas>,
    pub preset: Option<Task>,
    pub overrides: Vec<String>,
}

fn parse_opt<T: std::str::FromStr<Err = String>>(v: Option<String>, path: &Path) -> Result<Option<T>> {
    v.map(|s| s.parse::<T>())
        .transpose()
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

impl Common {
    pub fn resolve(&self) -> Result<Settings> {
        let (cfg, path) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read config", path.display()))?;
                let cfg: FileConfig =
                    serde_json::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))?;
                (cfg, path.clone())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let mut overrides = cfg.overrides;
        overrides.extend(self.overrides.iter().cloned());
        Ok(Settings {
            task: self.task.or(parse_opt(cfg.task, &path)?),
            ablation: self
                .ablation
                .or(parse_opt(cfg.ablation, &path)?)
                .unwrap_or_default(),
            seed: self.seed.or(cfg.seed),
            jobs: self.jobs.or(cfg.jobs).unwrap_or(0),
            vas: self.vas.or(cfg.vas),
            preset: self.preset.or(parse_opt(cfg.preset, &path)?),
            overrides,
        })
    }
}

impl Settings {
    pub fn require_task(&self) -> Result<Task> {
        match self.task {
            Some(t) => Ok(t),
            None => bail!("--task is required (intensity or detection)"),
        }
    }

    /// Preset for `task` (or `--preset`), with overrides and seed applied.
    pub fn mlp_config(&self, task: Task) -> Result<MlpConfig> {
        let mut cfg = match self.preset.unwrap_or(task) {
            Task::Intensity => MlpConfig::intensity(),
            Task::Detection => MlpConfig::detection(),
        };
        for o in &self.overrides {
            cfg.apply_override(o).with_context(|| format!("--override {o}"))?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
