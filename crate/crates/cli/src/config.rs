//! TOML run configuration and its merge with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use exposure_core::capability::{ReductionPolicy, DEFAULT_TAU};
use exposure_core::index::{Transferability, DEFAULT_SURFACE_SCOPE};
use exposure_core::pipeline::{InputPaths, RunSettings};
use exposure_core::synth::SynthConfig;
use exposure_core::taxonomy::WeightPolicy;
use exposure_core::validation::{Selector, TierSizes};

pub const DEFAULT_OUTPUT: &str = "exposure-out";

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputOverrides {
    pub taxonomy: Option<PathBuf>,
    pub tools: Option<PathBuf>,
    pub employment: Option<PathBuf>,
    pub geography: Option<PathBuf>,
    pub scopes: Option<PathBuf>,
    pub state_metrics: Option<PathBuf>,
    pub transitions: Option<PathBuf>,
    pub external_tiers: Option<PathBuf>,
}

/// Contents of `--config`. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    /// Directory holding the standard dataset file names.
    pub data: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub inputs: InputOverrides,
    pub weight_policy: Option<String>,
    pub reduction: Option<String>,
    pub tau: Option<f64>,
    pub scope: Option<String>,
    pub selector: Option<String>,
    pub workers: Option<usize>,
    pub tier_sizes: Option<TierSizes>,
    pub transferability: Option<Transferability>,
    pub synth: Option<SynthConfig>,
}

impl FileConfig {
    /// Reads a config file; relative paths inside it are resolved against
    /// the file's own directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(v) = p {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        fix(&mut cfg.data);
        fix(&mut cfg.output);
        let i = &mut cfg.inputs;
        for p in [
            &mut i.taxonomy,
            &mut i.tools,
            &mut i.employment,
            &mut i.geography,
            &mut i.scopes,
            &mut i.state_metrics,
            &mut i.transitions,
            &mut i.external_tiers,
        ] {
            fix(p);
        }
        Ok(cfg)
    }
}

/// Flag values that override the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub scope: Option<String>,
    pub weight_policy: Option<String>,
    pub reduction: Option<String>,
    pub tau: Option<f64>,
    pub selector: Option<String>,
    pub workers: Option<usize>,
}

pub fn output_dir(flags: &Overrides, cfg: &FileConfig) -> PathBuf {
    flags
        .output
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

pub fn run_settings(flags: &Overrides, cfg: &FileConfig) -> Result<RunSettings> {
    let weight_policy = match flags.weight_policy.as_ref().or(cfg.weight_policy.as_ref()) {
        Some(name) => name.parse::<WeightPolicy>()?,
        None => WeightPolicy::default(),
    };
    let tau = flags.tau.or(cfg.tau);
    let reduction = match flags.reduction.as_deref().or(cfg.reduction.as_deref()).unwrap_or("max") {
        "max" => {
            if tau.is_some() {
                bail!("tau applies only to the boolean reduction");
            }
            ReductionPolicy::Max
        }
        "boolean" => ReductionPolicy::boolean(tau.unwrap_or(DEFAULT_TAU))?,
        other => bail!("unknown reduction `{other}` (expected max or boolean)"),
    };
    let selector = match flags.selector.as_ref().or(cfg.selector.as_ref()) {
        Some(s) => s.parse::<Selector>()?,
        None => Selector::default(),
    };
    Ok(RunSettings {
        weight_policy,
        reduction,
        transferability: cfg.transferability.clone().unwrap_or_default(),
        surface_scope: flags
            .scope
            .clone()
            .or_else(|| cfg.scope.clone())
            .unwrap_or_else(|| DEFAULT_SURFACE_SCOPE.to_owned()),
        selector,
        tier_sizes: cfg.tier_sizes,
        workers: flags.workers.or(cfg.workers),
    })
}

pub fn input_paths(flags: &Overrides, cfg: &FileConfig) -> Result<InputPaths> {
    let data = flags.data.clone().or_else(|| cfg.data.clone());
    let i = &cfg.inputs;
    let mut paths = match data {
        Some(dir) => {
            let mut p = InputPaths::from_dataset_dir(&dir);
            // a dataset without a scope file gets the built-in surface scope
            if p.scopes.as_ref().is_some_and(|s| !s.exists()) {
                p.scopes = None;
            }
            p
        }
        None => {
            let need = |p: &Option<PathBuf>, name: &str| {
                p.clone()
                    .with_context(|| format!("no input data: pass --data <dir> or set inputs.{name} in the config"))
            };
            InputPaths {
                taxonomy: need(&i.taxonomy, "taxonomy")?,
                tools: need(&i.tools, "tools")?,
                employment: need(&i.employment, "employment")?,
                geography: need(&i.geography, "geography")?,
                scopes: None,
                state_metrics: None,
                transitions: None,
                external_tiers: None,
            }
        }
    };
    if let Some(p) = &i.taxonomy {
        paths.taxonomy = p.clone();
    }
    if let Some(p) = &i.tools {
        paths.tools = p.clone();
    }
    if let Some(p) = &i.employment {
        paths.employment = p.clone();
    }
    if let Some(p) = &i.geography {
        paths.geography = p.clone();
    }
    for (slot, value) in [
        (&mut paths.scopes, &i.scopes),
        (&mut paths.state_metrics, &i.state_metrics),
        (&mut paths.transitions, &i.transitions),
        (&mut paths.external_tiers, &i.external_tiers),
    ] {
        if value.is_some() {
            *slot = value.clone();
        }
    }
    Ok(paths)
}
