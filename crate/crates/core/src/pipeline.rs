//! End-to-end runs over a set of input files, producing the report
//! structures the command line writes out.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::capability::{capability_profile, read_tool_catalog, AutomatabilityMap, ReductionPolicy, ToolCatalog};
use crate::concentration::{state_concentration, HhiTier, StateConcentration};
use crate::econdata::{
    read_employment, read_geography, read_state_metrics, EmploymentTable, RegionScope, StateMetricsTable,
};
use crate::error::{Error, Result};
use crate::index::{
    aggregate, county_indices, read_scopes, surprise_gap, ExposureScore, ExposureSettings, Exposures, RegionalIndex,
    Rollup, ScopeFilter, SurpriseGap, Transferability, DEFAULT_SURFACE_SCOPE,
};
use crate::synth::{names, sha256_hex};
use crate::taxonomy::{read_taxonomy, SkillRequirementMatrix, WeightPolicy};
use crate::validation::{
    pairwise_similarity, rank_to_tiers, read_tiers, read_transitions, regress, tier_agreement, AgreementReport,
    Selector, SimilarityReport, TierAssignment, TierSizes,
};

pub const ENGINE: &str = "exposure-core";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const COMPUTE_REPORT: &str = "exposure_report.json";
pub const VALIDATION_REPORT: &str = "validation_report.json";
pub const CONCENTRATION_REPORT: &str = "concentration_report.json";
pub const CHOROPLETH: &str = "choropleth.csv";
pub const SCATTER: &str = "scatter.csv";
pub const TIER_MAP: &str = "tiers.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputPaths {
    pub taxonomy: PathBuf,
    pub tools: PathBuf,
    pub employment: PathBuf,
    pub geography: PathBuf,
    #[serde(default)]
    pub scopes: Option<PathBuf>,
    #[serde(default)]
    pub state_metrics: Option<PathBuf>,
    #[serde(default)]
    pub transitions: Option<PathBuf>,
    #[serde(default)]
    pub external_tiers: Option<PathBuf>,
}

impl InputPaths {
    /// The standard file names inside one directory.
    pub fn from_dataset_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            taxonomy: dir.join(names::TAXONOMY),
            tools: dir.join(names::TOOLS),
            employment: dir.join(names::EMPLOYMENT),
            geography: dir.join(names::GEOGRAPHY),
            scopes: Some(dir.join(names::SCOPES)),
            state_metrics: Some(dir.join(names::STATE_METRICS)),
            transitions: Some(dir.join(names::TRANSITIONS)),
            external_tiers: Some(dir.join(names::EXTERNAL_TIERS)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub weight_policy: WeightPolicy,
    pub reduction: ReductionPolicy,
    pub transferability: Transferability,
    /// Scope compared against the unrestricted one.
    pub surface_scope: String,
    pub selector: Selector,
    /// Defaults to the external tier file's own group sizes.
    pub tier_sizes: Option<TierSizes>,
    /// Worker threads; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            weight_policy: WeightPolicy::default(),
            reduction: ReductionPolicy::default(),
            transferability: Transferability::default(),
            surface_scope: DEFAULT_SURFACE_SCOPE.to_owned(),
            selector: Selector::default(),
            tier_sizes: None,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub file: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub engine: String,
    pub version: String,
    pub command: String,
    pub inputs: BTreeMap<String, InputDigest>,
    pub weight_policy: WeightPolicy,
    pub reduction: ReductionPolicy,
    pub transferability: Transferability,
    pub scopes: Vec<ScopeFilter>,
    pub surface_scope: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector: Option<Selector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier_sizes: Option<TierSizes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputeReport {
    pub metadata: RunMetadata,
    pub warnings: Vec<String>,
    pub exposures: Vec<ExposureScore>,
    /// Every scope at county, state and national level.
    pub regions: Vec<RegionalIndex>,
    /// Surface vs unrestricted, per state then national.
    pub surprise: Vec<SurpriseGap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierComparison {
    pub index_scope: String,
    pub sizes: TierSizes,
    pub ours: TierAssignment,
    pub agreement: AgreementReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub metric: String,
    pub index_scope: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub metadata: RunMetadata,
    pub warnings: Vec<String>,
    pub similarity: SimilarityReport,
    pub tiers: TierComparison,
    pub regressions: Vec<RegressionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub metadata: RunMetadata,
    pub warnings: Vec<String>,
    pub states: Vec<StateConcentration>,
}

/// Plot-ready CSV tables.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub choropleth: Vec<u8>,
    pub scatter: Vec<u8>,
    pub tiers: Vec<u8>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Error::Internal(format!("serializing report: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(0) => Err(Error::InvalidValue("worker count must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(f),
    }
}

struct Loader {
    digests: BTreeMap<String, InputDigest>,
}

impl Loader {
    fn new() -> Self {
        Self {
            digests: BTreeMap::new(),
        }
    }

    /// Reads the whole file, recording its digest under `role`.
    fn read(&mut self, role: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let file = path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.digests.insert(
            role.to_owned(),
            InputDigest {
                file,
                sha256: sha256_hex(&bytes),
            },
        );
        Ok(bytes)
    }

    fn required<'a>(&mut self, role: &str, path: &'a Option<PathBuf>) -> Result<(Vec<u8>, &'a Path)> {
        let path = path.as_deref().ok_or_else(|| Error::NotFound {
            kind: "input path",
            key: role.to_owned(),
        })?;
        Ok((self.read(role, path)?, path))
    }
}

fn name_of(path: &Path) -> String {
    path.display().to_string()
}

/// Loaded inputs and the exposure / index results shared by every command.
struct Core {
    loader: Loader,
    matrix: SkillRequirementMatrix,
    table: EmploymentTable,
    scopes: Vec<ScopeFilter>,
    exposures: Exposures,
    /// scope name → (county results, rollup)
    results: BTreeMap<String, (Vec<RegionalIndex>, Rollup)>,
    warnings: Vec<String>,
}

impl Core {
    fn scope_names(&self) -> (&str, &str) {
        let all = self
            .scopes
            .iter()
            .find(|s| s.is_all())
            .expect("unrestricted scope present");
        let surface = self
            .scopes
            .iter()
            .find(|s| !s.is_all())
            .expect("surface scope checked at load");
        (surface.name.as_str(), all.name.as_str())
    }

    fn rollup(&self, scope: &str) -> &Rollup {
        &self.results[scope].1
    }

    fn metadata(&self, command: &str, settings: &RunSettings) -> RunMetadata {
        RunMetadata {
            engine: ENGINE.to_owned(),
            version: VERSION.to_owned(),
            command: command.to_owned(),
            inputs: self.loader.digests.clone(),
            weight_policy: settings.weight_policy,
            reduction: settings.reduction,
            transferability: settings.transferability.clone(),
            scopes: self.scopes.clone(),
            surface_scope: settings.surface_scope.clone(),
            selector: None,
            tier_sizes: None,
        }
    }
}

fn load_core(paths: &InputPaths, settings: &RunSettings) -> Result<Core> {
    if let ReductionPolicy::Boolean { tau } = settings.reduction {
        ReductionPolicy::boolean(tau)?;
    }
    let mut loader = Loader::new();
    let bytes = loader.read("taxonomy", &paths.taxonomy)?;
    let matrix = read_taxonomy(&bytes[..], &name_of(&paths.taxonomy))?;
    let bytes = loader.read("tools", &paths.tools)?;
    let catalog: ToolCatalog = read_tool_catalog(&bytes[..], &name_of(&paths.tools))?;
    let bytes = loader.read("geography", &paths.geography)?;
    let geography = read_geography(&bytes[..], &name_of(&paths.geography))?;
    let bytes = loader.read("employment", &paths.employment)?;
    let table = read_employment(&bytes[..], &name_of(&paths.employment), &geography)?;
    drop(bytes);

    let mut scopes = vec![ScopeFilter::all()];
    match &paths.scopes {
        Some(p) => {
            let bytes = loader.read("scopes", p)?;
            scopes.extend(read_scopes(&bytes[..], &name_of(p))?);
        }
        None => scopes.push(ScopeFilter::default_surface()),
    }
    let surface = scopes
        .iter()
        .position(|s| s.name == settings.surface_scope && !s.is_all())
        .ok_or_else(|| Error::InvalidScope(format!("unknown surface scope `{}`", settings.surface_scope)))?;
    // surface first among the restricted scopes
    let chosen = scopes.remove(surface);
    scopes.insert(1, chosen);

    let mut warnings = Vec::new();
    let unknown_skills: Vec<&str> = catalog
        .edges
        .iter()
        .filter(|e| matrix.skill_position(&e.skill).is_none())
        .map(|e| e.skill.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if !unknown_skills.is_empty() {
        warnings.push(format!(
            "{} skill(s) in the tool catalog are absent from the taxonomy and were ignored",
            unknown_skills.len()
        ));
    }
    let auto: AutomatabilityMap = capability_profile(&catalog.edges, settings.reduction);
    let exposure_settings = ExposureSettings {
        weight_policy: settings.weight_policy,
        transferability: settings.transferability.clone(),
    };

    in_pool(settings.workers, move || {
        let exposures = Exposures::compute(&matrix, &auto, &exposure_settings)?;
        for code in exposures.zero_weight() {
            warnings.push(format!(
                "occupation {code} has zero total skill weight; exposure set to 0"
            ));
        }
        let mut results = BTreeMap::new();
        for scope in &scopes {
            let counties = county_indices(&exposures, &table, scope)?;
            let rollup = aggregate(&counties, &table)?;
            results.insert(scope.name.clone(), (counties, rollup));
        }
        Ok(Core {
            loader,
            matrix,
            table,
            scopes,
            exposures,
            results,
            warnings,
        })
    })
}

pub fn run_compute(paths: &InputPaths, settings: &RunSettings) -> Result<ComputeReport> {
    let core = load_core(paths, settings)?;
    let mut regions = Vec::new();
    for scope in &core.scopes {
        let (counties, rollup) = &core.results[&scope.name];
        regions.extend(counties.iter().cloned());
        regions.extend(rollup.states.iter().cloned());
        regions.push(rollup.national.clone());
    }
    let (surface, all) = core.scope_names();
    let (s, a) = (core.rollup(surface), core.rollup(all));
    let mut surprise = Vec::with_capacity(s.states.len() + 1);
    for (x, y) in s.states.iter().zip(&a.states) {
        surprise.push(surprise_gap(x, y)?);
    }
    surprise.push(surprise_gap(&s.national, &a.national)?);
    Ok(ComputeReport {
        metadata: core.metadata("compute", settings),
        warnings: core.warnings.clone(),
        exposures: core.exposures.iter().collect(),
        regions,
        surprise,
    })
}

fn state_values(rollup: &Rollup) -> BTreeMap<String, f64> {
    rollup
        .states
        .iter()
        .filter_map(|r| match &r.region {
            RegionScope::State(s) => Some((s.clone(), r.index)),
            _ => None,
        })
        .collect()
}

pub fn run_validate(paths: &InputPaths, settings: &RunSettings) -> Result<ValidationReport> {
    settings.selector.validate()?;
    let mut core = load_core(paths, settings)?;
    let (bytes, p) = core.loader.required("transitions", &paths.transitions)?;
    let network = read_transitions(&bytes[..], &name_of(p))?;
    network.check_against(&core.matrix)?;
    let (bytes, p) = core.loader.required("external_tiers", &paths.external_tiers)?;
    let external = read_tiers(&bytes[..], &name_of(p))?;
    let (bytes, p) = core.loader.required("state_metrics", &paths.state_metrics)?;
    let metrics: StateMetricsTable = read_state_metrics(&bytes[..], &name_of(p))?;

    let similarities = in_pool(settings.workers, || {
        pairwise_similarity(&core.matrix, settings.weight_policy)
    })?;
    let similarity = crate::validation::transition_recall(&similarities, &network, settings.selector)?;

    let (surface, all) = core.scope_names();
    let iceberg = state_values(core.rollup(all));
    let sizes = settings.tier_sizes.unwrap_or_else(|| external.sizes());
    let ours = rank_to_tiers(&iceberg, sizes)?;
    let agreement = tier_agreement(&ours, &external)?;

    let mut regressions = Vec::new();
    for metric in StateMetricsTable::METRICS {
        let x = metrics.metric(metric).expect("known metric");
        for scope in [all, surface] {
            let fit = regress(&x, &state_values(core.rollup(scope)))?;
            regressions.push(RegressionRow {
                metric: metric.to_owned(),
                index_scope: scope.to_owned(),
                slope: fit.slope,
                intercept: fit.intercept,
                r2: fit.r2,
                n: fit.n,
            });
        }
    }

    let mut metadata = core.metadata("validate", settings);
    metadata.selector = Some(settings.selector);
    metadata.tier_sizes = Some(sizes);
    Ok(ValidationReport {
        metadata,
        warnings: core.warnings.clone(),
        similarity,
        tiers: TierComparison {
            index_scope: all.to_owned(),
            sizes,
            ours,
            agreement,
        },
        regressions,
    })
}

pub fn run_concentration(paths: &InputPaths, settings: &RunSettings) -> Result<ConcentrationReport> {
    let core = load_core(paths, settings)?;
    let states = state_concentration(&core.matrix, &core.exposures, &core.table)?;
    Ok(ConcentrationReport {
        metadata: core.metadata("hhi", settings),
        warnings: core.warnings.clone(),
        states,
    })
}

pub const CHOROPLETH_HEADER: [&str; 5] = ["state", "scope", "index", "exposed_wage_value", "wage_base"];
pub const SCATTER_HEADER: [&str; 6] = [
    "state",
    "iceberg_index",
    "surface_index",
    "gdp",
    "per_capita_income",
    "unemployment_rate",
];
pub const TIER_MAP_HEADER: [&str; 5] = ["state", "index_tier", "external_tier", "hhi", "hhi_tier"];

pub fn run_plotdata(paths: &InputPaths, settings: &RunSettings) -> Result<PlotData> {
    let mut core = load_core(paths, settings)?;
    let (bytes, p) = core.loader.required("state_metrics", &paths.state_metrics)?;
    let metrics = read_state_metrics(&bytes[..], &name_of(p))?;
    let (bytes, p) = core.loader.required("external_tiers", &paths.external_tiers)?;
    let external = read_tiers(&bytes[..], &name_of(p))?;

    let mut choropleth = Vec::new();
    for scope in &core.scopes {
        for r in &core.rollup(&scope.name).states {
            if let RegionScope::State(s) = &r.region {
                choropleth.push([
                    s.clone(),
                    r.scope.clone(),
                    r.index.to_string(),
                    r.exposed_wage_value.to_string(),
                    r.wage_base.to_string(),
                ]);
            }
        }
    }

    let (surface, all) = core.scope_names();
    let iceberg = state_values(core.rollup(all));
    let surface_values = state_values(core.rollup(surface));
    let mut scatter = Vec::new();
    for (state, &ice) in &iceberg {
        let m = metrics.rows.get(state).ok_or_else(|| Error::NotFound {
            kind: "state metrics",
            key: state.clone(),
        })?;
        scatter.push([
            state.clone(),
            ice.to_string(),
            surface_values[state].to_string(),
            m.gdp.to_string(),
            m.per_capita_income.to_string(),
            m.unemployment_rate.to_string(),
        ]);
    }

    let sizes = settings.tier_sizes.unwrap_or_else(|| external.sizes());
    let ours = rank_to_tiers(&iceberg, sizes)?;
    let hhi: BTreeMap<String, (f64, HhiTier)> = state_concentration(&core.matrix, &core.exposures, &core.table)?
        .into_iter()
        .map(|c| (c.state, (c.hhi, c.tier)))
        .collect();
    let mut tiers = Vec::new();
    for (state, tier) in &ours.0 {
        let (h, t) = hhi
            .get(state)
            .map_or((String::new(), String::new()), |(h, t)| (h.to_string(), t.to_string()));
        tiers.push([
            state.clone(),
            tier.to_string(),
            external.0.get(state).map(|t| t.to_string()).unwrap_or_default(),
            h,
            t,
        ]);
    }

    Ok(PlotData {
        choropleth: crate::csvio::write_rows(&CHOROPLETH_HEADER, choropleth),
        scatter: crate::csvio::write_rows(&SCATTER_HEADER, scatter),
        tiers: crate::csvio::write_rows(&TIER_MAP_HEADER, tiers),
    })
}
