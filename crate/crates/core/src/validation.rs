//! Validation procedures: skill-similarity recall against observed career
//! transitions, tier agreement against an external adoption ranking, and
//! regressions of traditional state metrics on index values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};
use crate::taxonomy::{SkillRequirementMatrix, WeightPolicy};

pub const TRANSITION_HEADER: [&str; 2] = ["occupation_a", "occupation_b"];
pub const TIER_HEADER: [&str; 2] = ["state", "tier"];

/// Unordered occupation pair, stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OccupationPair {
    pub a: String,
    pub b: String,
}

impl OccupationPair {
    pub fn new(x: &str, y: &str) -> Result<Self> {
        match x.cmp(y) {
            std::cmp::Ordering::Less => Ok(Self {
                a: x.into(),
                b: y.into(),
            }),
            std::cmp::Ordering::Greater => Ok(Self {
                a: y.into(),
                b: x.into(),
            }),
            std::cmp::Ordering::Equal => Err(Error::InvalidValue(format!("self-pair ({x}, {y})"))),
        }
    }
}

impl fmt::Display for OccupationPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSimilarity {
    pub pair: OccupationPair,
    pub similarity: f64,
}

/// Cosine similarity of every unordered occupation pair, in pair-key order.
pub fn pairwise_similarity(matrix: &SkillRequirementMatrix, policy: WeightPolicy) -> Result<Vec<PairSimilarity>> {
    let occs = matrix.occupations();
    if occs.len() < 2 {
        return Err(Error::TooFewOccupations(occs.len()));
    }
    let vectors: Vec<Vec<f64>> = (0..occs.len()).map(|i| matrix.vector_at(i, policy).0).collect();
    let norms: Vec<f64> = vectors
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroVector(occs[i].code.clone()));
    }
    let rows: Vec<Vec<PairSimilarity>> = (0..occs.len())
        .into_par_iter()
        .map(|i| {
            ((i + 1)..occs.len())
                .map(|j| {
                    let dot: f64 = vectors[i].iter().zip(&vectors[j]).map(|(x, y)| x * y).sum();
                    PairSimilarity {
                        pair: OccupationPair {
                            a: occs[i].code.clone(),
                            b: occs[j].code.clone(),
                        },
                        similarity: (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0),
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Observed career-mobility edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransitionNetwork {
    edges: BTreeSet<OccupationPair>,
}

impl TransitionNetwork {
    pub fn new<I: IntoIterator<Item = OccupationPair>>(edges: I) -> Self {
        Self {
            edges: edges.into_iter().collect(),
        }
    }

    pub fn edges(&self) -> &BTreeSet<OccupationPair> {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Checks every edge references an occupation of `matrix`.
    pub fn check_against(&self, matrix: &SkillRequirementMatrix) -> Result<()> {
        for e in &self.edges {
            for code in [&e.a, &e.b] {
                if matrix.occupation(code).is_none() {
                    return Err(Error::NotFound {
                        kind: "occupation",
                        key: code.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Vec<u8> {
        csvio::write_rows(&TRANSITION_HEADER, self.edges.iter().map(|p| [&p.a, &p.b]))
    }
}

pub fn load_transitions(path: impl AsRef<Path>) -> Result<TransitionNetwork> {
    let path = path.as_ref();
    read_transitions(csvio::open(path)?, &csvio::source_name(path))
}

pub fn read_transitions<R: Read>(reader: R, source: &str) -> Result<TransitionNetwork> {
    let mut edges = BTreeSet::new();
    csvio::for_each_row(reader, source, &TRANSITION_HEADER, |row| {
        let a = row.nonempty(0, "occupation_a")?;
        let b = row.nonempty(1, "occupation_b")?;
        edges.insert(OccupationPair::new(a, b).map_err(|e| row.parse_err(e.to_string()))?);
        Ok(())
    })?;
    Ok(TransitionNetwork { edges })
}

/// Which similar pairs count as predicted transitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Selector {
    /// Pairs with similarity ≥ the value.
    Threshold(f64),
    /// The top fraction of pairs by similarity; ties go to the smaller pair key.
    TopFraction(f64),
}

impl Default for Selector {
    fn default() -> Self {
        Selector::TopFraction(0.10)
    }
}

impl Selector {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Selector::Threshold(t) if !(-1.0..=1.0).contains(&t) => {
                Err(Error::InvalidValue(format!("similarity threshold {t} outside [-1, 1]")))
            }
            Selector::TopFraction(p) if !(p > 0.0 && p <= 1.0) => {
                Err(Error::InvalidValue(format!("top fraction {p} outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Threshold(t) => write!(f, "threshold:{t}"),
            Selector::TopFraction(p) => write!(f, "top:{p}"),
        }
    }
}

impl FromStr for Selector {
    type Err = Error;

    /// `threshold:0.8` or `top:0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidValue(format!("selector {s:?} (expected threshold:<t> or top:<p>)")))?;
        let v: f64 = value
            .parse()
            .map_err(|_| Error::InvalidValue(format!("selector value {value:?}")))?;
        let sel = match kind {
            "threshold" => Selector::Threshold(v),
            "top" => Selector::TopFraction(v),
            _ => return Err(Error::InvalidValue(format!("selector kind {kind:?}"))),
        };
        sel.validate()?;
        Ok(sel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub selector: Selector,
    /// Lowest similarity among the selected pairs.
    pub threshold: f64,
    pub selected_count: usize,
    pub edge_count: usize,
    pub hits: usize,
    pub recall: f64,
    pub precision: f64,
    #[serde(skip)]
    pub selected: Vec<PairSimilarity>,
}

fn top_count(fraction: f64, total: usize) -> usize {
    // guard against e.g. 0.1 * 30 = 3.0000000000000004
    ((fraction * total as f64) - 1e-9).ceil().max(0.0) as usize
}

pub fn transition_recall(
    similarities: &[PairSimilarity],
    network: &TransitionNetwork,
    selector: Selector,
) -> Result<SimilarityReport> {
    selector.validate()?;
    if network.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let selected: Vec<PairSimilarity> = match selector {
        Selector::Threshold(t) => similarities.iter().filter(|p| p.similarity >= t).cloned().collect(),
        Selector::TopFraction(p) => {
            let mut ranked: Vec<&PairSimilarity> = similarities.iter().collect();
            ranked.sort_by(|x, y| y.similarity.total_cmp(&x.similarity).then_with(|| x.pair.cmp(&y.pair)));
            ranked.truncate(top_count(p, similarities.len()));
            ranked.into_iter().cloned().collect()
        }
    };
    if selected.is_empty() {
        return Err(Error::EmptySelection(selector.to_string()));
    }
    let hits = selected.iter().filter(|p| network.edges.contains(&p.pair)).count();
    let threshold = selected.iter().map(|p| p.similarity).fold(f64::INFINITY, f64::min);
    Ok(SimilarityReport {
        selector,
        threshold,
        selected_count: selected.len(),
        edge_count: network.len(),
        hits,
        recall: hits as f64 / network.len() as f64,
        precision: hits as f64 / selected.len() as f64,
        selected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Leading,
    Emerging,
    Aspiring,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Leading, Tier::Emerging, Tier::Aspiring];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Leading => "leading",
            Tier::Emerging => "emerging",
            Tier::Aspiring => "aspiring",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidValue(format!("tier {s:?}")))
    }
}

/// State → tier.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierAssignment(pub BTreeMap<String, Tier>);

impl TierAssignment {
    pub fn sizes(&self) -> TierSizes {
        let count = |t| self.0.values().filter(|&&x| x == t).count();
        TierSizes {
            leading: count(Tier::Leading),
            middle: count(Tier::Emerging),
            aspiring: count(Tier::Aspiring),
        }
    }

    pub fn to_csv(&self) -> Vec<u8> {
        csvio::write_rows(&TIER_HEADER, self.0.iter().map(|(s, t)| [s.as_str(), t.as_str()]))
    }
}

pub fn load_tiers(path: impl AsRef<Path>) -> Result<TierAssignment> {
    let path = path.as_ref();
    read_tiers(csvio::open(path)?, &csvio::source_name(path))
}

pub fn read_tiers<R: Read>(reader: R, source: &str) -> Result<TierAssignment> {
    let mut tiers = BTreeMap::new();
    csvio::for_each_row(reader, source, &TIER_HEADER, |row| {
        let state = row.nonempty(0, "state")?;
        let tier: Tier = row
            .str(1)
            .trim()
            .parse()
            .map_err(|e: Error| row.parse_err(e.to_string()))?;
        if tiers.insert(state.to_owned(), tier).is_some() {
            return Err(row.duplicate(format!("state {state}")));
        }
        Ok(())
    })?;
    Ok(TierAssignment(tiers))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierSizes {
    pub leading: usize,
    pub middle: usize,
    pub aspiring: usize,
}

impl TierSizes {
    pub fn total(&self) -> usize {
        self.leading + self.middle + self.aspiring
    }
}

/// Ranks states by descending value (ties by state code) and cuts the
/// ranking into leading / emerging / aspiring groups of the given sizes.
pub fn rank_to_tiers(values: &BTreeMap<String, f64>, sizes: TierSizes) -> Result<TierAssignment> {
    if sizes.total() != values.len() {
        return Err(Error::TierSizeMismatch {
            leading: sizes.leading,
            middle: sizes.middle,
            aspiring: sizes.aspiring,
            states: values.len(),
        });
    }
    if let Some((s, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidValue(format!("value {v} for state {s}")));
    }
    let mut ranked: Vec<(&String, f64)> = values.iter().map(|(s, &v)| (s, v)).collect();
    // BTreeMap order already sorts by code; a stable sort keeps it for ties.
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let tiers = ranked
        .into_iter()
        .enumerate()
        .map(|(i, (s, _))| {
            let t = if i < sizes.leading {
                Tier::Leading
            } else if i < sizes.leading + sizes.middle {
                Tier::Emerging
            } else {
                Tier::Aspiring
            };
            (s.clone(), t)
        })
        .collect();
    Ok(TierAssignment(tiers))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierMatch {
    pub matched: usize,
    /// States in this tier under the first assignment.
    pub first: usize,
    /// States in this tier under the second assignment.
    pub second: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub overall: f64,
    pub matched: usize,
    pub total: usize,
    pub per_tier: BTreeMap<Tier, TierMatch>,
}

fn state_set_diff<A, B>(a: &BTreeMap<String, A>, b: &BTreeMap<String, B>) -> Result<()> {
    let only_first: Vec<String> = a.keys().filter(|k| !b.contains_key(*k)).cloned().collect();
    let only_second: Vec<String> = b.keys().filter(|k| !a.contains_key(*k)).cloned().collect();
    if only_first.is_empty() && only_second.is_empty() {
        Ok(())
    } else {
        Err(Error::StateSetMismatch {
            only_first,
            only_second,
        })
    }
}

pub fn tier_agreement(ours: &TierAssignment, external: &TierAssignment) -> Result<AgreementReport> {
    state_set_diff(&ours.0, &external.0)?;
    if ours.0.is_empty() {
        return Err(Error::InvalidValue("tier assignments are empty".into()));
    }
    let mut per_tier: BTreeMap<Tier, TierMatch> = Tier::ALL
        .into_iter()
        .map(|t| {
            (
                t,
                TierMatch {
                    matched: 0,
                    first: 0,
                    second: 0,
                },
            )
        })
        .collect();
    let mut matched = 0;
    for (state, &a) in &ours.0 {
        let b = external.0[state];
        per_tier.get_mut(&a).expect("all tiers present").first += 1;
        per_tier.get_mut(&b).expect("all tiers present").second += 1;
        if a == b {
            matched += 1;
            per_tier.get_mut(&a).expect("all tiers present").matched += 1;
        }
    }
    let total = ours.0.len();
    Ok(AgreementReport {
        overall: matched as f64 / total as f64,
        matched,
        total,
        per_tier,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

/// Ordinary least squares of y on x over the shared state set.
pub fn regress(x: &BTreeMap<String, f64>, y: &BTreeMap<String, f64>) -> Result<RegressionFit> {
    state_set_diff(x, y)?;
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    let pts: Vec<(f64, f64)> = x.iter().map(|(s, &xv)| (xv, y[s])).collect();
    if pts.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::InvalidValue("non-finite regression input".into()));
    }
    let nf = n as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(a, b) in &pts {
        let (dx, dy) = (a - mean_x, b - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ConstantRegressor);
    }
    let slope = sxy / sxx;
    // A constant y has no variation to explain; report 0.
    let r2 = if syy == 0.0 {
        0.0
    } else {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RegressionFit {
        slope,
        intercept: mean_y - slope * mean_x,
        r2,
        n,
    })
}
