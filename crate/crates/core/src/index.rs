//! Occupation exposure and wage-weighted regional indices.
//!
//! An occupation's exposure is the weighted share of its skills that tools can
//! perform. A region's index is the exposure-weighted wage value of the
//! in-scope occupations divided by the wage value of *all* occupations in the
//! region, so a narrow scope (e.g. computing occupations) and the unrestricted
//! scope share one denominator and can be compared directly.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capability::AutomatabilityMap;
use crate::csvio;
use crate::econdata::{EmploymentTable, RegionScope};
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;
use crate::taxonomy::{SkillRequirementMatrix, WeightPolicy};

/// Name of the reserved scope that matches every occupation.
pub const ALL_SCOPE: &str = "all";
pub const DEFAULT_SURFACE_SCOPE: &str = "surface";
/// Major group of computer and mathematical occupations.
pub const DEFAULT_SURFACE_PREFIX: &str = "15";

pub const SCOPE_HEADER: [&str; 2] = ["scope_name", "occupation_code_or_prefix"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureScore {
    pub occupation: String,
    pub value: f64,
}

/// Exposure of one occupation: Σ w·a / Σ w over its required skills.
///
/// Returns 0 when the total weight is 0.
pub fn occupation_exposure(
    matrix: &SkillRequirementMatrix,
    auto: &AutomatabilityMap,
    occupation: &str,
    policy: WeightPolicy,
) -> Result<ExposureScore> {
    let pos = matrix.occupation_position(occupation).ok_or_else(|| Error::NotFound {
        kind: "occupation",
        key: occupation.to_owned(),
    })?;
    let (value, _) = exposure_at(matrix, auto, pos, policy);
    Ok(ExposureScore {
        occupation: occupation.to_owned(),
        value,
    })
}

/// (exposure, total weight was zero)
fn exposure_at(
    matrix: &SkillRequirementMatrix,
    auto: &AutomatabilityMap,
    position: usize,
    policy: WeightPolicy,
) -> (f64, bool) {
    let mut weighted = 0.0;
    let mut total = 0.0;
    for (skill, r) in matrix.requirements_at(position) {
        let w = policy.weight(r.importance, r.level);
        weighted += w * auto.score(&skill.id);
        total += w;
    }
    if total == 0.0 {
        (0.0, true)
    } else {
        ((weighted / total).clamp(0.0, 1.0), false)
    }
}

/// Per-occupation damping of automatability, for scenarios where skills
/// do not transfer fully across occupational contexts. 1 everywhere by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transferability {
    pub default: f64,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

impl Default for Transferability {
    fn default() -> Self {
        Self {
            default: 1.0,
            overrides: BTreeMap::new(),
        }
    }
}

impl Transferability {
    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| !(0.0..=1.0).contains(&v);
        if bad(self.default) {
            return Err(Error::InvalidValue(format!(
                "transferability {} outside [0, 1]",
                self.default
            )));
        }
        if let Some((k, v)) = self.overrides.iter().find(|(_, &v)| bad(v)) {
            return Err(Error::InvalidValue(format!(
                "transferability of {k} = {v} outside [0, 1]"
            )));
        }
        Ok(())
    }

    pub fn factor(&self, occupation: &str) -> f64 {
        self.overrides.get(occupation).copied().unwrap_or(self.default)
    }

    pub fn is_total(&self) -> bool {
        self.default == 1.0 && self.overrides.values().all(|&v| v == 1.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExposureSettings {
    pub weight_policy: WeightPolicy,
    pub transferability: Transferability,
}

/// Exposure of every occupation, keyed by code.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Exposures {
    values: BTreeMap<String, f64>,
    zero_weight: Vec<String>,
}

impl Exposures {
    /// Computes every occupation's exposure (in parallel when run inside a
    /// rayon pool). Results do not depend on the worker count.
    pub fn compute(
        matrix: &SkillRequirementMatrix,
        auto: &AutomatabilityMap,
        settings: &ExposureSettings,
    ) -> Result<Self> {
        settings.transferability.validate()?;
        let raw: Vec<(f64, bool)> = (0..matrix.occupations().len())
            .into_par_iter()
            .map(|pos| exposure_at(matrix, auto, pos, settings.weight_policy))
            .collect();
        let mut values = BTreeMap::new();
        let mut zero_weight = Vec::new();
        for (occ, (v, zero)) in matrix.occupations().iter().zip(raw) {
            if zero {
                zero_weight.push(occ.code.clone());
            }
            values.insert(occ.code.clone(), v * settings.transferability.factor(&occ.code));
        }
        Ok(Self { values, zero_weight })
    }

    pub fn from_values(values: BTreeMap<String, f64>) -> Result<Self> {
        if let Some((k, v)) = values.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!("exposure of {k} = {v} outside [0, 1]")));
        }
        Ok(Self {
            values,
            zero_weight: Vec::new(),
        })
    }

    pub fn get(&self, occupation: &str) -> Option<f64> {
        self.values.get(occupation).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ExposureScore> + '_ {
        self.values.iter().map(|(k, &v)| ExposureScore {
            occupation: k.clone(),
            value: v,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Occupations whose skill weights summed to zero (exposure forced to 0).
    pub fn zero_weight(&self) -> &[String] {
        &self.zero_weight
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopePredicate {
    All,
    /// Occupation codes or code prefixes (e.g. a major group "15").
    Prefixes(BTreeSet<String>),
}

/// Named set of occupations forming an index numerator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeFilter {
    pub name: String,
    pub predicate: ScopePredicate,
}

fn is_code_prefix(p: &str) -> bool {
    !p.is_empty()
        && p.len() <= 7
        && p.bytes()
            .enumerate()
            .all(|(i, c)| if i == 2 { c == b'-' } else { c.is_ascii_digit() })
}

impl ScopeFilter {
    pub fn all() -> Self {
        Self {
            name: ALL_SCOPE.to_owned(),
            predicate: ScopePredicate::All,
        }
    }

    pub fn with_prefixes<I, S>(name: &str, prefixes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if name.is_empty() {
            return Err(Error::InvalidScope("empty scope name".into()));
        }
        if name == ALL_SCOPE {
            return Err(Error::InvalidScope(format!("`{ALL_SCOPE}` is reserved")));
        }
        let set: BTreeSet<String> = prefixes.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(Error::InvalidScope(format!("scope `{name}` has no occupations")));
        }
        if let Some(p) = set.iter().find(|p| !is_code_prefix(p)) {
            return Err(Error::InvalidScope(format!(
                "scope `{name}`: {p:?} is not an occupation code or code prefix"
            )));
        }
        Ok(Self {
            name: name.to_owned(),
            predicate: ScopePredicate::Prefixes(set),
        })
    }

    pub fn default_surface() -> Self {
        Self::with_prefixes(DEFAULT_SURFACE_SCOPE, [DEFAULT_SURFACE_PREFIX]).expect("valid built-in scope")
    }

    pub fn matches(&self, occupation: &str) -> bool {
        match &self.predicate {
            ScopePredicate::All => true,
            ScopePredicate::Prefixes(ps) => ps.iter().any(|p| occupation.starts_with(p.as_str())),
        }
    }

    pub fn is_all(&self) -> bool {
        self.predicate == ScopePredicate::All
    }
}

pub fn load_scopes(path: impl AsRef<Path>) -> Result<Vec<ScopeFilter>> {
    let path = path.as_ref();
    read_scopes(csvio::open(path)?, &csvio::source_name(path))
}

/// Reads a scope file. Scopes come back sorted by name.
pub fn read_scopes<R: Read>(reader: R, source: &str) -> Result<Vec<ScopeFilter>> {
    let mut scopes: BTreeMap<String, Vec<String>> = BTreeMap::new();
    csvio::for_each_row(reader, source, &SCOPE_HEADER, |row| {
        let name = row.nonempty(0, "scope_name")?;
        let entry = row.nonempty(1, "occupation_code_or_prefix")?;
        if name == ALL_SCOPE {
            return Err(row.parse_err(format!("scope name `{ALL_SCOPE}` is reserved")));
        }
        if !is_code_prefix(entry) {
            return Err(row.parse_err(format!("{entry:?} is not an occupation code or code prefix")));
        }
        scopes.entry(name.to_owned()).or_default().push(entry.to_owned());
        Ok(())
    })?;
    scopes
        .into_iter()
        .map(|(name, ps)| ScopeFilter::with_prefixes(&name, ps))
        .collect()
}

pub fn scopes_to_csv(scopes: &[ScopeFilter]) -> Vec<u8> {
    let rows = scopes.iter().flat_map(|s| match &s.predicate {
        ScopePredicate::All => Vec::new(),
        ScopePredicate::Prefixes(ps) => ps.iter().map(|p| [s.name.clone(), p.clone()]).collect(),
    });
    csvio::write_rows(&SCOPE_HEADER, rows)
}

/// Index of one scope over one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalIndex {
    #[serde(flatten)]
    pub region: RegionScope,
    pub scope: String,
    pub index: f64,
    pub exposed_wage_value: f64,
    pub wage_base: f64,
}

fn finish_index(region: RegionScope, scope: &str, exposed: f64, base: f64) -> Result<RegionalIndex> {
    if base <= 0.0 {
        return Err(Error::ZeroWageBase(region.to_string()));
    }
    Ok(RegionalIndex {
        index: (exposed / base).clamp(0.0, 1.0),
        region,
        scope: scope.to_owned(),
        exposed_wage_value: exposed,
        wage_base: base,
    })
}

fn accumulate<'a, I>(cells: I, exposures: &Exposures, scope: &ScopeFilter) -> Result<Option<(f64, f64)>>
where
    I: Iterator<Item = crate::econdata::CellRef<'a>>,
{
    let mut exposed = CompensatedSum::new();
    let mut base = CompensatedSum::new();
    let mut any = false;
    for c in cells {
        any = true;
        let value = c.wage_value();
        base.add(value);
        if scope.matches(c.occupation) {
            let e = exposures
                .get(c.occupation)
                .ok_or_else(|| Error::MissingExposure(c.occupation.to_owned()))?;
            exposed.add(e * value);
        }
    }
    Ok(any.then(|| (exposed.total(), base.total())))
}

/// Index of `scope` over `region`; the denominator is the region's full wage base.
pub fn regional_index(
    exposures: &Exposures,
    table: &EmploymentTable,
    scope: &ScopeFilter,
    region: &RegionScope,
) -> Result<RegionalIndex> {
    let (exposed, base) =
        accumulate(table.cells_in(region), exposures, scope)?.ok_or_else(|| Error::EmptyRegion(region.to_string()))?;
    finish_index(region.clone(), &scope.name, exposed, base)
}

/// Index of `scope` for every county that has employment cells, FIPS order.
pub fn county_indices(
    exposures: &Exposures,
    table: &EmploymentTable,
    scope: &ScopeFilter,
) -> Result<Vec<RegionalIndex>> {
    let partial: Vec<Option<RegionalIndex>> = (0..table.counties().len())
        .into_par_iter()
        .map(|pos| {
            let Some((exposed, base)) = accumulate(table.county_cells(pos), exposures, scope)? else {
                return Ok(None);
            };
            let region = RegionScope::County(table.counties()[pos].clone());
            finish_index(region, &scope.name, exposed, base).map(Some)
        })
        .collect::<Result<_>>()?;
    Ok(partial.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollup {
    pub states: Vec<RegionalIndex>,
    pub national: RegionalIndex,
}

/// Rolls county results up to states and the nation.
///
/// Parent numerators and denominators are sums of their children's; the
/// parent index is recomputed from those sums.
pub fn aggregate(county_results: &[RegionalIndex], table: &EmploymentTable) -> Result<Rollup> {
    let first = county_results
        .first()
        .ok_or_else(|| Error::InvalidValue("no county results to aggregate".into()))?;
    let scope = first.scope.as_str();
    let mut by_state: BTreeMap<&str, BTreeMap<&str, &RegionalIndex>> = BTreeMap::new();
    for r in county_results {
        if r.scope != scope {
            return Err(Error::MixedScopes(scope.to_owned(), r.scope.clone()));
        }
        let RegionScope::County(fips) = &r.region else {
            return Err(Error::InvalidValue(format!("{} is not a county result", r.region)));
        };
        let state = table.state_of_county(fips).ok_or_else(|| Error::NotFound {
            kind: "county",
            key: fips.clone(),
        })?;
        if by_state.entry(state).or_default().insert(fips, r).is_some() {
            return Err(Error::InvalidValue(format!("county {fips} appears twice")));
        }
    }
    let mut states = Vec::with_capacity(by_state.len());
    for (state, counties) in by_state {
        let exposed = counties
            .values()
            .map(|r| r.exposed_wage_value)
            .collect::<CompensatedSum>();
        let base = counties.values().map(|r| r.wage_base).collect::<CompensatedSum>();
        states.push(finish_index(
            RegionScope::State(state.to_owned()),
            scope,
            exposed.total(),
            base.total(),
        )?);
    }
    let exposed = states.iter().map(|r| r.exposed_wage_value).collect::<CompensatedSum>();
    let base = states.iter().map(|r| r.wage_base).collect::<CompensatedSum>();
    let national = finish_index(RegionScope::National, scope, exposed.total(), base.total())?;
    Ok(Rollup { states, national })
}

/// Gap between the unrestricted index and a narrower one for the same region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurpriseGap {
    #[serde(flatten)]
    pub region: RegionScope,
    pub surface_scope: String,
    pub iceberg_scope: String,
    pub surface_index: f64,
    pub iceberg_index: f64,
    pub gap: f64,
}

/// iceberg.index − surface.index
pub fn automation_surprise(surface: &RegionalIndex, iceberg: &RegionalIndex) -> Result<f64> {
    if surface.region != iceberg.region {
        return Err(Error::RegionMismatch(
            surface.region.to_string(),
            iceberg.region.to_string(),
        ));
    }
    Ok(iceberg.index - surface.index)
}

pub fn surprise_gap(surface: &RegionalIndex, iceberg: &RegionalIndex) -> Result<SurpriseGap> {
    let gap = automation_surprise(surface, iceberg)?;
    Ok(SurpriseGap {
        region: surface.region.clone(),
        surface_scope: surface.scope.clone(),
        iceberg_scope: iceberg.scope.clone(),
        surface_index: surface.index,
        iceberg_index: iceberg.index,
        gap,
    })
}
