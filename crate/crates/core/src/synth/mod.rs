//! Seeded synthetic datasets in the engine's file formats, and naive
//! oracles that recompute every core quantity straight from the raw rows.

mod oracle;
pub mod rng;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::capability::{Tool, ToolCatalog, ToolSkillEdge, ToolSource};
use crate::csvio;
use crate::econdata::{EmploymentRecord, Geography, StateMetrics, StateMetricsTable, EMPLOYMENT_HEADER};
use crate::error::{Error, Result};
use crate::index::{scopes_to_csv, ScopeFilter};
use crate::taxonomy::{Occupation, Skill, SkillCategory, SkillRequirement, SkillRequirementMatrix};
use crate::validation::{rank_to_tiers, OccupationPair, TierAssignment, TierSizes, TransitionNetwork};

pub use oracle::{
    oracle_automatability, oracle_exposure, oracle_hhi, oracle_regional_index, oracle_similarity,
    oracle_transition_recall, oracle_wage_base, OracleSettings,
};
use rng::SynthRng;

/// File names of a dataset directory.
pub mod names {
    pub const TAXONOMY: &str = "taxonomy.csv";
    pub const TOOLS: &str = "tools.csv";
    pub const EMPLOYMENT: &str = "employment.csv";
    pub const GEOGRAPHY: &str = "geography.csv";
    pub const STATE_METRICS: &str = "state_metrics.csv";
    pub const TRANSITIONS: &str = "transitions.csv";
    pub const EXTERNAL_TIERS: &str = "external_tiers.csv";
    pub const SCOPES: &str = "scopes.csv";
    pub const MANIFEST: &str = "manifest.json";
}

pub const GENERATOR: &str = "chacha8";

const TECH_GROUP: &str = "15";
const OTHER_GROUPS: [&str; 21] = [
    "11", "13", "17", "19", "21", "23", "25", "27", "29", "31", "33", "35", "37", "39", "41", "43", "45", "47", "49",
    "51", "53",
];
const STATE_CODES: [&str; 56] = [
    "AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "DC", "FL", "GA", "HI", "ID", "IL", "IN", "IA", "KS", "KY", "LA",
    "ME", "MD", "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM", "NY", "NC", "ND", "OH", "OK", "OR",
    "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY", "PR", "GU", "VI", "AS", "MP",
];
const MAX_COUNTIES_PER_STATE: usize = 500;
const FAMILY_SIZE: usize = 5;
const FAMILY_POOL: usize = 20;
const FAMILY_AFFINITY: f64 = 0.75;
const SKILLS_PER_OCCUPATION: (u64, u64) = (3, 15);
const EDGES_PER_TOOL: (u64, u64) = (1, 5);
const TOP_SHARE: f64 = 0.10;
const TOP_PICK: f64 = 0.70;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_occupations: usize,
    pub n_skills: usize,
    pub n_tools: usize,
    pub n_counties: usize,
    pub n_states: usize,
    pub n_industries: usize,
    pub n_transitions: usize,
    /// Median wage bounds, dollars.
    pub wage_range: (f64, f64),
    /// Employment per cell bounds, workers.
    pub employment_range: (u64, u64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_occupations: 50,
            n_skills: 120,
            n_tools: 60,
            n_counties: 30,
            n_states: 8,
            n_industries: 8,
            n_transitions: 50,
            wage_range: (25_000.0, 180_000.0),
            employment_range: (1, 2_000),
        }
    }
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// 923 occupations × 500 skills × 3000 counties.
    pub fn national_scale(seed: u64) -> Self {
        Self {
            seed,
            n_occupations: 923,
            n_skills: 500,
            n_tools: 2_000,
            n_counties: 3_000,
            n_states: 50,
            n_industries: 20,
            n_transitions: 2_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InfeasibleConfig(m));
        let counts = [
            ("n_occupations", self.n_occupations, 9_999),
            ("n_skills", self.n_skills, 9_999),
            ("n_tools", self.n_tools, 9_999),
            (
                "n_counties",
                self.n_counties,
                STATE_CODES.len() * MAX_COUNTIES_PER_STATE,
            ),
            ("n_states", self.n_states, STATE_CODES.len()),
            ("n_industries", self.n_industries, 99),
        ];
        for (name, v, max) in counts {
            if v == 0 || v > max {
                return fail(format!("{name} = {v} must be in 1..={max}"));
            }
        }
        if self.n_skills < SKILLS_PER_OCCUPATION.0 as usize {
            return fail(format!(
                "n_skills = {} is below {}",
                self.n_skills, SKILLS_PER_OCCUPATION.0
            ));
        }
        if self.n_states > self.n_counties {
            return fail(format!(
                "{} states but only {} counties",
                self.n_states, self.n_counties
            ));
        }
        if self.n_counties > self.n_states * MAX_COUNTIES_PER_STATE {
            return fail(format!(
                "{} counties exceed {MAX_COUNTIES_PER_STATE} per state over {} states",
                self.n_counties, self.n_states
            ));
        }
        let (wl, wh) = self.wage_range;
        if !(wl.is_finite() && wh.is_finite() && wl > 0.0 && wl <= wh) {
            return fail(format!("wage range ({wl}, {wh}) is empty or not positive"));
        }
        let (el, eh) = self.employment_range;
        if el == 0 || el > eh || eh > 1 << 40 {
            return fail(format!("employment range ({el}, {eh}) is empty or not positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub generator: String,
    pub config: SynthConfig,
    pub occupations: usize,
    pub skills: usize,
    pub requirements: usize,
    pub tools: usize,
    pub tool_edges: usize,
    pub counties: usize,
    pub states: usize,
    pub industries: usize,
    pub employment_cells: usize,
    pub total_employment: u64,
    pub transitions: usize,
    /// File name → SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
}

/// A generated dataset: the raw rows plus their rendered files.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub config: SynthConfig,
    pub occupations: Vec<Occupation>,
    pub skills: Vec<Skill>,
    pub requirements: Vec<SkillRequirement>,
    pub tools: Vec<Tool>,
    pub edges: Vec<ToolSkillEdge>,
    /// (county FIPS, state)
    pub geography: Vec<(String, String)>,
    pub employment: Vec<EmploymentRecord>,
    pub state_metrics: Vec<StateMetrics>,
    pub transitions: Vec<OccupationPair>,
    pub external_tiers: TierAssignment,
    pub scopes: Vec<ScopeFilter>,
    pub files: Vec<(&'static str, Vec<u8>)>,
    pub manifest: Manifest,
}

impl SyntheticDataset {
    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| *n == name).map(|(_, b)| b.as_slice())
    }

    pub fn manifest_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        out.push(b'\n');
        out
    }

    /// Writes every file and the manifest into `dir`, creating it if needed.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, bytes) in &self.files {
            csvio::write_file(&dir.join(name), bytes)?;
        }
        csvio::write_file(&dir.join(names::MANIFEST), &self.manifest_json())
    }
}

fn round_to(x: f64, scale: f64) -> f64 {
    (x * scale).round() / scale
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Generates a dataset. Identical configs give byte-identical files.
pub fn generate(config: &SynthConfig) -> Result<SyntheticDataset> {
    config.validate()?;
    let mut rng = SynthRng::new(config.seed);

    let skills: Vec<Skill> = (0..config.n_skills)
        .map(|i| Skill {
            id: format!("S{:04}", i + 1),
            name: format!("Skill {}", i + 1),
            category: SkillCategory::ALL[rng.below(SkillCategory::ALL.len())],
        })
        .collect();
    let industries: Vec<String> = (0..config.n_industries).map(|i| format!("IND{:02}", i + 1)).collect();
    let all_skills: Vec<usize> = (0..config.n_skills).collect();
    let n_families = config.n_occupations.div_ceil(FAMILY_SIZE);
    let pools: Vec<Vec<usize>> = (0..n_families)
        .map(|_| rng.sample(&all_skills, FAMILY_POOL.min(config.n_skills)))
        .collect();

    let mut occupations = Vec::with_capacity(config.n_occupations);
    let mut chosen_skills: Vec<Vec<usize>> = Vec::with_capacity(config.n_occupations);
    for i in 0..config.n_occupations {
        let group = if i % 8 == 0 {
            TECH_GROUP
        } else {
            OTHER_GROUPS[rng.below(OTHER_GROUPS.len())]
        };
        let code = format!("{group}-{:04}", i + 1);
        let industry = &industries[rng.below(industries.len())];
        let pool = &pools[rng.below(pools.len())];
        let k = (rng.between(SKILLS_PER_OCCUPATION.0, SKILLS_PER_OCCUPATION.1) as usize).min(config.n_skills);
        let from_pool = (0..k).filter(|_| rng.chance(FAMILY_AFFINITY)).count();
        let mut chosen = rng.sample(pool, from_pool);
        let rest: Vec<usize> = all_skills.iter().copied().filter(|s| !chosen.contains(s)).collect();
        let more = rng.sample(&rest, k - chosen.len());
        chosen.extend(more);
        chosen_skills.push(chosen);
        occupations.push(Occupation::new(&code, &format!("Occupation {}", i + 1), industry)?);
    }

    // Hand every unrequired skill to an occupation with room, so the
    // taxonomy file carries the full skill list whenever capacity allows.
    let mut used = vec![false; config.n_skills];
    for s in chosen_skills.iter().flatten() {
        used[*s] = true;
    }
    let cap = SKILLS_PER_OCCUPATION.1 as usize;
    for s in (0..config.n_skills).filter(|&s| !used[s]) {
        let open: Vec<usize> = (0..chosen_skills.len())
            .filter(|&o| chosen_skills[o].len() < cap)
            .collect();
        if open.is_empty() {
            break;
        }
        chosen_skills[open[rng.below(open.len())]].push(s);
    }

    let mut requirements = Vec::new();
    let mut base_wage: BTreeMap<String, f64> = BTreeMap::new();
    for (occ, chosen) in occupations.iter().zip(&mut chosen_skills) {
        chosen.sort_unstable();
        for &s in chosen.iter() {
            requirements.push(SkillRequirement {
                occupation: occ.code.clone(),
                skill: skills[s].id.clone(),
                importance: round_to(rng.uniform(1.0, 5.0), 100.0),
                level: round_to(rng.uniform(0.5, 7.0), 100.0),
            });
        }
        base_wage.insert(occ.code.clone(), rng.uniform(config.wage_range.0, config.wage_range.1));
    }
    occupations.sort_by(|a, b| a.code.cmp(&b.code));
    requirements.sort_by(|a, b| (&a.occupation, &a.skill).cmp(&(&b.occupation, &b.skill)));

    let mut tools = Vec::with_capacity(config.n_tools);
    let mut edges = Vec::new();
    for t in 0..config.n_tools {
        let id = format!("T{:04}", t + 1);
        tools.push(Tool {
            id: id.clone(),
            name: format!("Tool {}", t + 1),
            source: ToolSource::ALL[rng.below(ToolSource::ALL.len())],
        });
        let m = rng.between(EDGES_PER_TOOL.0, EDGES_PER_TOOL.1) as usize;
        let mut picked = rng.sample(&all_skills, m);
        picked.sort_unstable();
        for s in picked {
            edges.push(ToolSkillEdge {
                tool: id.clone(),
                skill: skills[s].id.clone(),
                confidence: round_to(rng.unit(), 1000.0),
            });
        }
    }

    let states: Vec<&str> = STATE_CODES[..config.n_states].to_vec();
    let mut per_state = vec![0usize; config.n_states];
    let mut geography: Vec<(String, String)> = (0..config.n_counties)
        .map(|j| {
            let s = j % config.n_states;
            let serial = 2 * per_state[s] + 1;
            per_state[s] += 1;
            (format!("{:02}{serial:03}", s + 1), states[s].to_owned())
        })
        .collect();
    geography.sort();

    let (wl, wh) = config.wage_range;
    let (el, eh) = config.employment_range;
    let mut employment = Vec::with_capacity(config.n_occupations * config.n_counties);
    for occ in &occupations {
        let base = base_wage[&occ.code];
        for (fips, _) in &geography {
            let employed = rng.between(el, eh);
            let wage = round_to((base * rng.uniform(0.8, 1.2)).clamp(wl, wh), 100.0);
            employment.push(EmploymentRecord {
                occupation: occ.code.clone(),
                county: fips.clone(),
                employment: employed,
                median_wage: wage,
            });
        }
    }

    let state_of: BTreeMap<&str, &str> = geography.iter().map(|(c, s)| (c.as_str(), s.as_str())).collect();
    let mut state_wages: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for r in &employment {
        let entry = state_wages.entry(state_of[r.county.as_str()]).or_default();
        entry.0 += r.wage_value();
        if r.occupation.starts_with(TECH_GROUP) {
            entry.1 += r.wage_value();
        }
    }
    let mut state_metrics = Vec::with_capacity(state_wages.len());
    let mut tech_score = BTreeMap::new();
    for (&state, &(total, tech)) in &state_wages {
        state_metrics.push(StateMetrics {
            state: state.to_owned(),
            gdp: (total * rng.uniform(1.6, 2.4)).round(),
            per_capita_income: rng.uniform(30_000.0, 90_000.0).round(),
            unemployment_rate: round_to(rng.uniform(0.02, 0.10), 10_000.0),
        });
        tech_score.insert(state.to_owned(), tech / total + rng.uniform(-0.05, 0.05));
    }
    let n = tech_score.len();
    let outer = (n + 2) / 4;
    let external_tiers = rank_to_tiers(
        &tech_score,
        TierSizes {
            leading: outer,
            middle: n - 2 * outer,
            aspiring: outer,
        },
    )?;

    let transitions = sample_transitions(&mut rng, &occupations, &requirements, config.n_transitions);
    let scopes = vec![ScopeFilter::default_surface()];

    let matrix = SkillRequirementMatrix::new(occupations.clone(), skills.clone(), requirements.clone())?;
    let catalog = ToolCatalog {
        tools: tools.clone(),
        edges: edges.clone(),
    };
    let geo = Geography::new(geography.iter().cloned())?;
    let metrics = StateMetricsTable {
        rows: state_metrics.iter().map(|m| (m.state.clone(), m.clone())).collect(),
    };
    let employment_csv = csvio::write_rows(
        &EMPLOYMENT_HEADER,
        employment.iter().map(|r| {
            [
                r.occupation.clone(),
                r.county.clone(),
                r.employment.to_string(),
                r.median_wage.to_string(),
            ]
        }),
    );
    let files: Vec<(&'static str, Vec<u8>)> = vec![
        (names::TAXONOMY, matrix.to_csv()),
        (names::TOOLS, catalog.to_csv()),
        (names::GEOGRAPHY, geo.to_csv()),
        (names::EMPLOYMENT, employment_csv),
        (names::STATE_METRICS, metrics.to_csv()),
        (
            names::TRANSITIONS,
            TransitionNetwork::new(transitions.iter().cloned()).to_csv(),
        ),
        (names::EXTERNAL_TIERS, external_tiers.to_csv()),
        (names::SCOPES, scopes_to_csv(&scopes)),
    ];

    let manifest = Manifest {
        generator: GENERATOR.to_owned(),
        config: config.clone(),
        occupations: occupations.len(),
        skills: requirements
            .iter()
            .map(|r| r.skill.as_str())
            .collect::<BTreeSet<_>>()
            .len(),
        requirements: requirements.len(),
        tools: tools.len(),
        tool_edges: edges.len(),
        counties: geography.len(),
        states: states.len(),
        industries: occupations
            .iter()
            .map(|o| o.industry.as_str())
            .collect::<BTreeSet<_>>()
            .len(),
        employment_cells: employment.len(),
        total_employment: employment.iter().map(|r| r.employment).sum(),
        transitions: transitions.len(),
        files: files.iter().map(|(n, b)| (n.to_string(), sha256_hex(b))).collect(),
    };

    Ok(SyntheticDataset {
        config: config.clone(),
        occupations,
        skills,
        requirements,
        tools,
        edges,
        geography,
        employment,
        state_metrics,
        transitions,
        external_tiers,
        scopes,
        files,
        manifest,
    })
}

/// Mostly high-similarity pairs: each edge comes from the top decile of
/// pairwise similarity with probability 0.7, otherwise from anywhere.
fn sample_transitions(
    rng: &mut SynthRng,
    occupations: &[Occupation],
    requirements: &[SkillRequirement],
    wanted: usize,
) -> Vec<OccupationPair> {
    if occupations.len() < 2 {
        return Vec::new();
    }
    let mut vectors: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    for r in requirements {
        vectors
            .entry(r.occupation.as_str())
            .or_default()
            .push((r.skill.as_str(), r.importance * r.level));
    }
    let vecs: Vec<&Vec<(&str, f64)>> = occupations.iter().map(|o| &vectors[o.code.as_str()]).collect();
    let norms: Vec<f64> = vecs
        .iter()
        .map(|v| v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt())
        .collect();
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..vecs.len() {
        for j in (i + 1)..vecs.len() {
            let (a, b) = (vecs[i], vecs[j]);
            let (mut p, mut q, mut dot) = (0, 0, 0.0);
            while p < a.len() && q < b.len() {
                match a[p].0.cmp(b[q].0) {
                    std::cmp::Ordering::Less => p += 1,
                    std::cmp::Ordering::Greater => q += 1,
                    std::cmp::Ordering::Equal => {
                        dot += a[p].1 * b[q].1;
                        p += 1;
                        q += 1;
                    }
                }
            }
            pairs.push((i, j, dot / (norms[i] * norms[j])));
        }
    }
    pairs.sort_by(|x, y| y.2.total_cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));
    let total = pairs.len();
    let top_len = ((total as f64 * TOP_SHARE).ceil() as usize).max(1);
    let count = wanted.min(total);
    let from_top = (0..count).filter(|_| rng.chance(TOP_PICK)).count().min(top_len);
    let top: Vec<usize> = (0..top_len).collect();
    let mut chosen = rng.sample(&top, from_top);
    let taken: BTreeSet<usize> = chosen.iter().copied().collect();
    let rest: Vec<usize> = (0..total).filter(|i| !taken.contains(i)).collect();
    chosen.extend(rng.sample(&rest, count - chosen.len()));
    let mut out: Vec<OccupationPair> = chosen
        .into_iter()
        .map(|k| {
            let (i, j, _) = pairs[k];
            OccupationPair {
                a: occupations[i].code.clone(),
                b: occupations[j].code.clone(),
            }
        })
        .collect();
    out.sort();
    out
}
