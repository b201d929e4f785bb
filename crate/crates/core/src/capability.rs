//! AI tool catalog and its reduction to per-skill automatability scores.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};

pub const TOOL_HEADER: [&str; 5] = ["tool_id", "tool_name", "source", "skill_id", "confidence"];

pub const DEFAULT_TAU: f64 = 0.5;

/// Where a catalogued tool came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToolSource {
    ProtocolImplementation,
    WorkflowPlatform,
    Directory,
}

impl ToolSource {
    pub const ALL: [ToolSource; 3] = [Self::ProtocolImplementation, Self::WorkflowPlatform, Self::Directory];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ProtocolImplementation => "protocol-implementation",
            Self::WorkflowPlatform => "workflow-platform",
            Self::Directory => "directory",
        }
    }
}

impl fmt::Display for ToolSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ToolSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidValue(format!("tool source {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tool {
    pub id: String,
    pub name: String,
    pub source: ToolSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSkillEdge {
    pub tool: String,
    pub skill: String,
    pub confidence: f64,
}

/// Tools and their skill edges, both sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolCatalog {
    pub tools: Vec<Tool>,
    pub edges: Vec<ToolSkillEdge>,
}

pub fn load_tool_catalog(path: impl AsRef<Path>) -> Result<ToolCatalog> {
    let path = path.as_ref();
    read_tool_catalog(csvio::open(path)?, &csvio::source_name(path))
}

pub fn read_tool_catalog<R: Read>(reader: R, source: &str) -> Result<ToolCatalog> {
    let mut tools: BTreeMap<String, Tool> = BTreeMap::new();
    let mut edges: BTreeMap<(String, String), f64> = BTreeMap::new();
    csvio::for_each_row(reader, source, &TOOL_HEADER, |row| {
        let tool_id = row.nonempty(0, "tool_id")?;
        let name = row.str(1).trim();
        let src: ToolSource = row
            .str(2)
            .trim()
            .parse()
            .map_err(|e: Error| row.parse_err(e.to_string()))?;
        let skill = row.nonempty(3, "skill_id")?;
        let what = format!("edge ({tool_id}, {skill})");
        let confidence = row.f64_in(4, "confidence", &what, 0.0, 1.0)?;

        let tool = Tool {
            id: tool_id.to_owned(),
            name: name.to_owned(),
            source: src,
        };
        match tools.get(tool_id) {
            Some(prev) if *prev != tool => return Err(row.inconsistent(format!("name/source of tool {tool_id}"))),
            Some(_) => {}
            None => {
                tools.insert(tool_id.to_owned(), tool);
            }
        }
        if edges
            .insert((tool_id.to_owned(), skill.to_owned()), confidence)
            .is_some()
        {
            return Err(row.duplicate(what));
        }
        Ok(())
    })?;
    Ok(ToolCatalog {
        tools: tools.into_values().collect(),
        edges: edges
            .into_iter()
            .map(|((tool, skill), confidence)| ToolSkillEdge {
                tool,
                skill,
                confidence,
            })
            .collect(),
    })
}

impl ToolCatalog {
    pub fn to_csv(&self) -> Vec<u8> {
        let by_id: BTreeMap<&str, &Tool> = self.tools.iter().map(|t| (t.id.as_str(), t)).collect();
        let rows = self.edges.iter().map(|e| {
            let t = by_id[e.tool.as_str()];
            [
                t.id.clone(),
                t.name.clone(),
                t.source.to_string(),
                e.skill.clone(),
                e.confidence.to_string(),
            ]
        });
        csvio::write_rows(&TOOL_HEADER, rows)
    }
}

/// How tool-edge confidences for one skill collapse into its score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum ReductionPolicy {
    /// Highest confidence of any tool demonstrating the skill.
    #[default]
    Max,
    /// 1 if any edge reaches `tau`, else 0.
    Boolean { tau: f64 },
}

impl ReductionPolicy {
    pub fn boolean(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidValue(format!("tau {tau} outside [0, 1]")));
        }
        Ok(Self::Boolean { tau })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Max => "max",
            Self::Boolean { .. } => "boolean",
        }
    }
}

impl fmt::Display for ReductionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Max => f.write_str("max"),
            Self::Boolean { tau } => write!(f, "boolean(tau={tau})"),
        }
    }
}

/// Per-skill automatability scores in [0, 1]. Skills without an entry read as 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AutomatabilityMap {
    scores: BTreeMap<String, f64>,
}

impl AutomatabilityMap {
    pub fn from_scores(scores: BTreeMap<String, f64>) -> Result<Self> {
        if let Some((s, v)) = scores.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!(
                "automatability of skill {s} = {v} outside [0, 1]"
            )));
        }
        Ok(Self { scores })
    }

    pub fn score(&self, skill: &str) -> f64 {
        self.scores.get(skill).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.scores.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Reduces validated tool edges to one score per skill.
pub fn capability_profile(edges: &[ToolSkillEdge], policy: ReductionPolicy) -> AutomatabilityMap {
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for e in edges {
        let contribution = match policy {
            ReductionPolicy::Max => e.confidence,
            ReductionPolicy::Boolean { tau } => {
                if e.confidence >= tau {
                    1.0
                } else {
                    0.0
                }
            }
        };
        let slot = scores.entry(e.skill.clone()).or_insert(0.0);
        if contribution > *slot {
            *slot = contribution;
        }
    }
    AutomatabilityMap { scores }
}
