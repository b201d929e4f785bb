//! Brute-force recomputations straight from a dataset's raw rows.
//!
//! Nothing here calls the engine's scoring, aggregation or concentration
//! code; each function is a direct loop over the definitions.

use std::collections::BTreeMap;

use crate::capability::ReductionPolicy;
use crate::econdata::RegionScope;
use crate::error::{Error, Result};
use crate::index::{ScopeFilter, ScopePredicate};
use crate::taxonomy::WeightPolicy;
use crate::validation::Selector;

use super::SyntheticDataset;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OracleSettings {
    pub weight: WeightPolicy,
    pub reduction: ReductionPolicy,
}

fn weight(policy: WeightPolicy, importance: f64, level: f64) -> f64 {
    match policy {
        WeightPolicy::ImportanceXLevel => importance * level,
        WeightPolicy::Importance => importance,
        WeightPolicy::Level => level,
    }
}

pub fn oracle_automatability(ds: &SyntheticDataset, skill: &str, reduction: ReductionPolicy) -> f64 {
    let mut best = 0.0f64;
    for e in &ds.edges {
        if e.skill != skill {
            continue;
        }
        let v = match reduction {
            ReductionPolicy::Max => e.confidence,
            ReductionPolicy::Boolean { tau } => {
                if e.confidence >= tau {
                    1.0
                } else {
                    0.0
                }
            }
        };
        if v > best {
            best = v;
        }
    }
    best
}

pub fn oracle_exposure(ds: &SyntheticDataset, occupation: &str, settings: &OracleSettings) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut seen = false;
    for r in &ds.requirements {
        if r.occupation != occupation {
            continue;
        }
        seen = true;
        let w = weight(settings.weight, r.importance, r.level);
        num += w * oracle_automatability(ds, &r.skill, settings.reduction);
        den += w;
    }
    if !seen {
        return Err(Error::NotFound {
            kind: "occupation",
            key: occupation.to_owned(),
        });
    }
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

fn state_of<'a>(ds: &'a SyntheticDataset, county: &str) -> Option<&'a str> {
    ds.geography.iter().find(|(c, _)| c == county).map(|(_, s)| s.as_str())
}

fn in_region(ds: &SyntheticDataset, county: &str, region: &RegionScope) -> bool {
    match region {
        RegionScope::County(c) => c == county,
        RegionScope::State(s) => state_of(ds, county) == Some(s.as_str()),
        RegionScope::National => true,
    }
}

fn in_scope(scope: &ScopeFilter, occupation: &str) -> bool {
    match &scope.predicate {
        ScopePredicate::All => true,
        ScopePredicate::Prefixes(ps) => {
            for p in ps {
                if occupation.len() >= p.len() && &occupation[..p.len()] == p.as_str() {
                    return true;
                }
            }
            false
        }
    }
}

fn all_exposures(ds: &SyntheticDataset, settings: &OracleSettings) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for o in &ds.occupations {
        out.insert(o.code.clone(), oracle_exposure(ds, &o.code, settings)?);
    }
    Ok(out)
}

/// Σ employment × wage over the region.
pub fn oracle_wage_base(ds: &SyntheticDataset, region: &RegionScope) -> f64 {
    let mut base = 0.0;
    for r in &ds.employment {
        if in_region(ds, &r.county, region) {
            base += r.employment as f64 * r.median_wage;
        }
    }
    base
}

pub fn oracle_regional_index(
    ds: &SyntheticDataset,
    scope: &ScopeFilter,
    region: &RegionScope,
    settings: &OracleSettings,
) -> Result<f64> {
    let exposure = all_exposures(ds, settings)?;
    let mut exposed = 0.0;
    let mut base = 0.0;
    let mut any = false;
    for r in &ds.employment {
        if !in_region(ds, &r.county, region) {
            continue;
        }
        any = true;
        let value = r.employment as f64 * r.median_wage;
        base += value;
        if in_scope(scope, &r.occupation) {
            exposed += exposure[&r.occupation] * value;
        }
    }
    if !any {
        return Err(Error::EmptyRegion(region.to_string()));
    }
    if base <= 0.0 {
        return Err(Error::ZeroWageBase(region.to_string()));
    }
    Ok(exposed / base)
}

pub fn oracle_hhi(ds: &SyntheticDataset, state: &str, settings: &OracleSettings) -> Result<f64> {
    let exposure = all_exposures(ds, settings)?;
    let mut by_industry: BTreeMap<String, f64> = BTreeMap::new();
    for r in &ds.employment {
        if state_of(ds, &r.county) != Some(state) {
            continue;
        }
        let industry = ds
            .occupations
            .iter()
            .find(|o| o.code == r.occupation)
            .map(|o| o.industry.clone())
            .ok_or_else(|| Error::NotFound {
                kind: "occupation",
                key: r.occupation.clone(),
            })?;
        *by_industry.entry(industry).or_insert(0.0) += exposure[&r.occupation] * r.employment as f64 * r.median_wage;
    }
    let total: f64 = by_industry.values().sum();
    if total <= 0.0 {
        return Err(Error::ZeroTotal(state.to_owned()));
    }
    let mut h = 0.0;
    for v in by_industry.values() {
        let s = v / total;
        h += s * s;
    }
    Ok(10_000.0 * h)
}

fn dense_vector(ds: &SyntheticDataset, occupation: &str, policy: WeightPolicy) -> Vec<f64> {
    let mut v = vec![0.0; ds.skills.len()];
    for r in &ds.requirements {
        if r.occupation != occupation {
            continue;
        }
        for (i, s) in ds.skills.iter().enumerate() {
            if s.id == r.skill {
                v[i] = weight(policy, r.importance, r.level);
            }
        }
    }
    v
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(dot / (na.sqrt() * nb.sqrt()))
}

pub fn oracle_similarity(ds: &SyntheticDataset, a: &str, b: &str, policy: WeightPolicy) -> Result<f64> {
    let va = dense_vector(ds, a, policy);
    let vb = dense_vector(ds, b, policy);
    for (code, v) in [(a, &va), (b, &vb)] {
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroVector(code.to_owned()));
        }
    }
    Ok(cosine(&va, &vb).expect("nonzero vectors"))
}

/// (recall, precision, selected count) by enumerating every pair.
pub fn oracle_transition_recall(
    ds: &SyntheticDataset,
    policy: WeightPolicy,
    selector: Selector,
) -> Result<(f64, f64, usize)> {
    let n = ds.occupations.len();
    if n < 2 {
        return Err(Error::TooFewOccupations(n));
    }
    let vectors: Vec<Vec<f64>> = ds
        .occupations
        .iter()
        .map(|o| dense_vector(ds, &o.code, policy))
        .collect();
    let mut pairs: Vec<(String, String, f64)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&ds.occupations[i].code, &ds.occupations[j].code);
            let s = cosine(&vectors[i], &vectors[j]).ok_or_else(|| Error::ZeroVector(a.clone()))?;
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            pairs.push((a.clone(), b.clone(), s));
        }
    }
    let selected: Vec<(String, String)> = match selector {
        Selector::Threshold(t) => pairs.into_iter().filter(|p| p.2 >= t).map(|p| (p.0, p.1)).collect(),
        Selector::TopFraction(f) => {
            // insertion into a list kept in (similarity desc, key asc) order
            let mut ranked: Vec<(String, String, f64)> = Vec::new();
            for p in pairs {
                let at = ranked
                    .iter()
                    .position(|q| q.2 < p.2 || (q.2 == p.2 && (&q.0, &q.1) > (&p.0, &p.1)))
                    .unwrap_or(ranked.len());
                ranked.insert(at, p);
            }
            let mut k = 0;
            while (k as f64) < f * ranked.len() as f64 - 1e-9 {
                k += 1;
            }
            ranked.into_iter().take(k).map(|p| (p.0, p.1)).collect()
        }
    };
    if ds.transitions.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    if selected.is_empty() {
        return Err(Error::EmptySelection(selector.to_string()));
    }
    let mut hits = 0;
    for (a, b) in &selected {
        if ds.transitions.iter().any(|t| &t.a == a && &t.b == b) {
            hits += 1;
        }
    }
    Ok((
        hits as f64 / ds.transitions.len() as f64,
        hits as f64 / selected.len() as f64,
        selected.len(),
    ))
}
