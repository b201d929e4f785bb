//! Occupation/skill taxonomy: loading, validation and skill-requirement
//! vectors.
//!
//! Ratings follow the O*NET conventions: importance on a 1-5 scale and level
//! on a 0-7 scale. The taxonomy file is authoritative for the skill universe;
//! no fixed skill count is assumed.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};

pub const TAXONOMY_HEADER: [&str; 8] = [
    "occupation_code",
    "occupation_title",
    "industry",
    "skill_id",
    "skill_name",
    "skill_category",
    "importance",
    "level",
];

pub const IMPORTANCE_RANGE: (f64, f64) = (1.0, 5.0);
pub const LEVEL_RANGE: (f64, f64) = (0.0, 7.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkillCategory {
    WorkActivity,
    Skill,
    Knowledge,
}

impl SkillCategory {
    pub const ALL: [SkillCategory; 3] = [Self::WorkActivity, Self::Skill, Self::Knowledge];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::WorkActivity => "work-activity",
            Self::Skill => "skill",
            Self::Knowledge => "knowledge",
        }
    }
}

impl fmt::Display for SkillCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SkillCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidValue(format!("skill category {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skill {
    pub id: String,
    pub name: String,
    pub category: SkillCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occupation {
    pub code: String,
    pub title: String,
    pub major_group: String,
    pub industry: String,
}

/// Checks the `NN-NNNN` occupational code shape.
pub fn is_valid_occupation_code(code: &str) -> bool {
    let b = code.as_bytes();
    b.len() == 7 && b[2] == b'-' && b.iter().enumerate().all(|(i, c)| i == 2 || c.is_ascii_digit())
}

impl Occupation {
    pub fn new(code: &str, title: &str, industry: &str) -> Result<Self> {
        if !is_valid_occupation_code(code) {
            return Err(Error::InvalidValue(format!(
                "occupation code {code:?} does not match NN-NNNN"
            )));
        }
        Ok(Self {
            code: code.to_owned(),
            title: title.to_owned(),
            major_group: code[..2].to_owned(),
            industry: industry.to_owned(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub importance: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillRequirement {
    pub occupation: String,
    pub skill: String,
    pub importance: f64,
    pub level: f64,
}

/// How an (importance, level) rating pair becomes a skill weight.
///
/// Every policy is monotone nondecreasing in both arguments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[non_exhaustive]
pub enum WeightPolicy {
    /// importance × level. A level of 0 means the skill does not count.
    #[default]
    ImportanceXLevel,
    Importance,
    Level,
}

impl WeightPolicy {
    pub const ALL: [WeightPolicy; 3] = [Self::ImportanceXLevel, Self::Importance, Self::Level];

    pub fn weight(self, importance: f64, level: f64) -> f64 {
        match self {
            Self::ImportanceXLevel => importance * level,
            Self::Importance => importance,
            Self::Level => level,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ImportanceXLevel => "importance-x-level",
            Self::Importance => "importance",
            Self::Level => "level",
        }
    }
}

impl fmt::Display for WeightPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|p| p.as_str()).collect();
            Error::InvalidValue(format!("weight policy {s:?} (expected one of {names:?})"))
        })
    }
}

/// Dense vector over the taxonomy's full (sorted) skill list.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillVector(pub Vec<f64>);

impl SkillVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &SkillVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Validated occupation × skill rating table.
///
/// Occupations are sorted by code and skills by id, and each occupation's
/// requirements are sorted by skill, so the structure is independent of the
/// record order of the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillRequirementMatrix {
    occupations: Vec<Occupation>,
    skills: Vec<Skill>,
    /// Per occupation (same order as `occupations`): (skill index, rating).
    requirements: Vec<Vec<(usize, Rating)>>,
    occupation_index: BTreeMap<String, usize>,
    skill_index: BTreeMap<String, usize>,
}

impl SkillRequirementMatrix {
    /// Builds a matrix from loose parts, checking every invariant.
    pub fn new(occupations: Vec<Occupation>, skills: Vec<Skill>, requirements: Vec<SkillRequirement>) -> Result<Self> {
        let mut occ_map = BTreeMap::new();
        for o in occupations {
            if !is_valid_occupation_code(&o.code) || o.major_group != o.code[..2] {
                return Err(Error::InvalidValue(format!("occupation code {:?}", o.code)));
            }
            if occ_map.insert(o.code.clone(), o).is_some() {
                return Err(Error::InvalidValue("duplicate occupation code".into()));
            }
        }
        let mut skill_map = BTreeMap::new();
        for s in skills {
            if skill_map.insert(s.id.clone(), s).is_some() {
                return Err(Error::InvalidValue("duplicate skill id".into()));
            }
        }
        let mut builder = Builder {
            occupations: occ_map,
            skills: skill_map,
            ratings: BTreeMap::new(),
        };
        for r in requirements {
            check_rating(r.importance, r.level).map_err(|(field, v, (lo, hi))| {
                Error::InvalidValue(format!(
                    "occupation {} skill {}: {field} = {v} outside [{lo}, {hi}]",
                    r.occupation, r.skill
                ))
            })?;
            if !builder.occupations.contains_key(&r.occupation) {
                return Err(Error::NotFound {
                    kind: "occupation",
                    key: r.occupation,
                });
            }
            if !builder.skills.contains_key(&r.skill) {
                return Err(Error::NotFound {
                    kind: "skill",
                    key: r.skill,
                });
            }
            let key = (r.occupation, r.skill);
            let rating = Rating {
                importance: r.importance,
                level: r.level,
            };
            if builder.ratings.insert(key.clone(), rating).is_some() {
                return Err(Error::InvalidValue(format!(
                    "duplicate requirement ({}, {})",
                    key.0, key.1
                )));
            }
        }
        builder.finish()
    }

    pub fn occupations(&self) -> &[Occupation] {
        &self.occupations
    }

    pub fn skills(&self) -> &[Skill] {
        &self.skills
    }

    pub fn occupation(&self, code: &str) -> Option<&Occupation> {
        self.occupation_index.get(code).map(|&i| &self.occupations[i])
    }

    pub fn skill_position(&self, id: &str) -> Option<usize> {
        self.skill_index.get(id).copied()
    }

    pub fn occupation_position(&self, code: &str) -> Option<usize> {
        self.occupation_index.get(code).copied()
    }

    /// Requirements of the occupation at `position`, as (skill, rating) pairs
    /// sorted by skill id.
    pub fn requirements_at(&self, position: usize) -> impl Iterator<Item = (&Skill, Rating)> + '_ {
        self.requirements[position]
            .iter()
            .map(move |&(s, r)| (&self.skills[s], r))
    }

    pub fn requirements_of(&self, code: &str) -> Result<impl Iterator<Item = (&Skill, Rating)> + '_> {
        let pos = self.occupation_position(code).ok_or_else(|| Error::NotFound {
            kind: "occupation",
            key: code.to_owned(),
        })?;
        Ok(self.requirements_at(pos))
    }

    pub fn requirement(&self, occupation: &str, skill: &str) -> Option<Rating> {
        let o = self.occupation_position(occupation)?;
        let s = self.skill_position(skill)?;
        let reqs = &self.requirements[o];
        reqs.binary_search_by_key(&s, |&(i, _)| i).ok().map(|i| reqs[i].1)
    }

    pub fn requirement_count(&self) -> usize {
        self.requirements.iter().map(Vec::len).sum()
    }

    /// All requirements in (occupation, skill) order.
    pub fn entries(&self) -> impl Iterator<Item = SkillRequirement> + '_ {
        self.occupations.iter().enumerate().flat_map(move |(o, occ)| {
            self.requirements[o].iter().map(move |&(s, r)| SkillRequirement {
                occupation: occ.code.clone(),
                skill: self.skills[s].id.clone(),
                importance: r.importance,
                level: r.level,
            })
        })
    }

    pub fn vector_at(&self, position: usize, policy: WeightPolicy) -> SkillVector {
        let mut v = vec![0.0; self.skills.len()];
        for &(s, r) in &self.requirements[position] {
            v[s] = policy.weight(r.importance, r.level);
        }
        SkillVector(v)
    }

    /// Serialises the matrix back to the taxonomy CSV format.
    pub fn to_csv(&self) -> Vec<u8> {
        let rows = self.occupations.iter().enumerate().flat_map(|(o, occ)| {
            self.requirements[o].iter().map(move |&(s, r)| {
                let skill = &self.skills[s];
                [
                    occ.code.clone(),
                    occ.title.clone(),
                    occ.industry.clone(),
                    skill.id.clone(),
                    skill.name.clone(),
                    skill.category.to_string(),
                    r.importance.to_string(),
                    r.level.to_string(),
                ]
            })
        });
        csvio::write_rows(&TAXONOMY_HEADER, rows)
    }
}

/// Dense skill-requirement vector of one occupation under `policy`.
///
/// Skills the occupation does not require are 0; the dimension is always the
/// taxonomy's full skill count.
pub fn occupation_vector(
    matrix: &SkillRequirementMatrix,
    occupation: &str,
    policy: WeightPolicy,
) -> Result<SkillVector> {
    let pos = matrix.occupation_position(occupation).ok_or_else(|| Error::NotFound {
        kind: "occupation",
        key: occupation.to_owned(),
    })?;
    Ok(matrix.vector_at(pos, policy))
}

pub fn load_taxonomy(path: impl AsRef<Path>) -> Result<SkillRequirementMatrix> {
    let path = path.as_ref();
    read_taxonomy(csvio::open(path)?, &csvio::source_name(path))
}

pub fn read_taxonomy<R: Read>(reader: R, source: &str) -> Result<SkillRequirementMatrix> {
    let mut b = Builder {
        occupations: BTreeMap::new(),
        skills: BTreeMap::new(),
        ratings: BTreeMap::new(),
    };
    csvio::for_each_row(reader, source, &TAXONOMY_HEADER, |row| {
        let code = row.nonempty(0, "occupation_code")?;
        let title = row.str(1).trim();
        let industry = row.nonempty(2, "industry")?;
        let skill_id = row.nonempty(3, "skill_id")?;
        let skill_name = row.str(4).trim();
        let category: SkillCategory = row
            .str(5)
            .trim()
            .parse()
            .map_err(|e: Error| row.parse_err(e.to_string()))?;
        let what = format!("occupation {code}, skill {skill_id}");
        let importance = row.f64_in(6, "importance", &what, IMPORTANCE_RANGE.0, IMPORTANCE_RANGE.1)?;
        let level = row.f64_in(7, "level", &what, LEVEL_RANGE.0, LEVEL_RANGE.1)?;

        let occ = Occupation::new(code, title, industry).map_err(|e| row.parse_err(e.to_string()))?;
        match b.occupations.get(code) {
            Some(prev) if *prev != occ => return Err(row.inconsistent(format!("title/industry of occupation {code}"))),
            Some(_) => {}
            None => {
                b.occupations.insert(code.to_owned(), occ);
            }
        }
        let skill = Skill {
            id: skill_id.to_owned(),
            name: skill_name.to_owned(),
            category,
        };
        match b.skills.get(skill_id) {
            Some(prev) if *prev != skill => return Err(row.inconsistent(format!("name/category of skill {skill_id}"))),
            Some(_) => {}
            None => {
                b.skills.insert(skill_id.to_owned(), skill);
            }
        }
        if b.ratings
            .insert((code.to_owned(), skill_id.to_owned()), Rating { importance, level })
            .is_some()
        {
            return Err(row.duplicate(format!("requirement ({code}, {skill_id})")));
        }
        Ok(())
    })?;
    b.finish()
}

fn check_rating(importance: f64, level: f64) -> std::result::Result<(), (&'static str, f64, (f64, f64))> {
    let ok = |v: f64, (lo, hi): (f64, f64)| v.is_finite() && v >= lo && v <= hi;
    if !ok(importance, IMPORTANCE_RANGE) {
        return Err(("importance", importance, IMPORTANCE_RANGE));
    }
    if !ok(level, LEVEL_RANGE) {
        return Err(("level", level, LEVEL_RANGE));
    }
    Ok(())
}

struct Builder {
    occupations: BTreeMap<String, Occupation>,
    skills: BTreeMap<String, Skill>,
    ratings: BTreeMap<(String, String), Rating>,
}

impl Builder {
    fn finish(self) -> Result<SkillRequirementMatrix> {
        let occupations: Vec<Occupation> = self.occupations.into_values().collect();
        let skills: Vec<Skill> = self.skills.into_values().collect();
        let occupation_index: BTreeMap<String, usize> = occupations
            .iter()
            .enumerate()
            .map(|(i, o)| (o.code.clone(), i))
            .collect();
        let skill_index: BTreeMap<String, usize> = skills.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
        let mut requirements = vec![Vec::new(); occupations.len()];
        // BTreeMap iteration is (occupation, skill) ordered, so each list ends up sorted.
        for ((o, s), r) in self.ratings {
            requirements[occupation_index[&o]].push((skill_index[&s], r));
        }
        if let Some(i) = requirements.iter().position(Vec::is_empty) {
            return Err(Error::InvalidValue(format!(
                "occupation {} has no skill requirements",
                occupations[i].code
            )));
        }
        Ok(SkillRequirementMatrix {
            occupations,
            skills,
            requirements,
            occupation_index,
            skill_index,
        })
    }
}
