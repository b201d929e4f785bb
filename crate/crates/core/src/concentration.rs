//! Industry concentration of exposed wage value (Herfindahl-Hirschman index).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::econdata::EmploymentTable;
use crate::error::{Error, Result};
use crate::index::Exposures;
use crate::sum::CompensatedSum;
use crate::taxonomy::SkillRequirementMatrix;

/// Upper bound (inclusive) of the most-distributed tier, on rounded HHI.
pub const DISTRIBUTED_MAX: i64 = 1580;
/// Lower bound (inclusive) of the most-concentrated tier, on rounded HHI.
pub const CONCENTRATED_MIN: i64 = 1738;

pub const HHI_SCALE: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HhiTier {
    MostDistributed,
    Moderate,
    MostConcentrated,
}

impl HhiTier {
    /// Tier of an HHI value after round-half-up to an integer.
    pub fn classify(hhi: f64) -> Self {
        let rounded = (hhi + 0.5).floor() as i64;
        if rounded <= DISTRIBUTED_MAX {
            Self::MostDistributed
        } else if rounded < CONCENTRATED_MIN {
            Self::Moderate
        } else {
            Self::MostConcentrated
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MostDistributed => "most-distributed",
            Self::Moderate => "moderate",
            Self::MostConcentrated => "most-concentrated",
        }
    }
}

impl fmt::Display for HhiTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndustryShares {
    pub region: String,
    pub shares: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HhiScore {
    pub region: String,
    pub value: f64,
    pub tier: HhiTier,
}

/// Shares of total exposed value by industry. Zero-valued industries are dropped.
pub fn industry_shares(region: &str, exposed_by_industry: &BTreeMap<String, f64>) -> Result<IndustryShares> {
    if let Some((k, &v)) = exposed_by_industry.iter().find(|(_, &v)| !v.is_finite() || v < 0.0) {
        return Err(Error::NegativeContribution {
            industry: k.clone(),
            value: v,
        });
    }
    let total = exposed_by_industry
        .values()
        .copied()
        .collect::<CompensatedSum>()
        .total();
    if total <= 0.0 {
        return Err(Error::ZeroTotal(region.to_owned()));
    }
    let shares = exposed_by_industry
        .iter()
        .filter(|(_, &v)| v > 0.0)
        .map(|(k, &v)| (k.clone(), v / total))
        .collect();
    Ok(IndustryShares {
        region: region.to_owned(),
        shares,
    })
}

/// 10000 × Σ s², with its tier.
pub fn hhi(shares: &IndustryShares) -> HhiScore {
    let value = HHI_SCALE
        * shares
            .shares
            .values()
            .map(|s| s * s)
            .collect::<CompensatedSum>()
            .total();
    HhiScore {
        region: shares.region.clone(),
        value,
        tier: HhiTier::classify(value),
    }
}

/// Exposed wage value per (state, industry), using each occupation's
/// industry tag from the taxonomy.
pub fn exposed_by_state_industry(
    matrix: &SkillRequirementMatrix,
    exposures: &Exposures,
    table: &EmploymentTable,
) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let mut acc: BTreeMap<&str, BTreeMap<&str, CompensatedSum>> = BTreeMap::new();
    for c in table.cells() {
        let occ = matrix.occupation(c.occupation).ok_or_else(|| Error::NotFound {
            kind: "occupation",
            key: c.occupation.to_owned(),
        })?;
        let e = exposures
            .get(c.occupation)
            .ok_or_else(|| Error::MissingExposure(c.occupation.to_owned()))?;
        acc.entry(c.state)
            .or_default()
            .entry(occ.industry.as_str())
            .or_default()
            .add(e * c.wage_value());
    }
    Ok(acc
        .into_iter()
        .map(|(s, m)| {
            (
                s.to_owned(),
                m.into_iter().map(|(i, v)| (i.to_owned(), v.total())).collect(),
            )
        })
        .collect())
}

/// One record of the concentration report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateConcentration {
    pub state: String,
    pub hhi: f64,
    pub tier: HhiTier,
    pub shares: BTreeMap<String, f64>,
}

/// Shares, HHI and tier for every state, sorted by state code.
pub fn state_concentration(
    matrix: &SkillRequirementMatrix,
    exposures: &Exposures,
    table: &EmploymentTable,
) -> Result<Vec<StateConcentration>> {
    exposed_by_state_industry(matrix, exposures, table)?
        .into_iter()
        .map(|(state, by_industry)| {
            let shares = industry_shares(&state, &by_industry)?;
            let score = hhi(&shares);
            Ok(StateConcentration {
                state,
                hhi: score.value,
                tier: score.tier,
                shares: shares.shares,
            })
        })
        .collect()
}
