#![allow(dead_code)]

use std::path::PathBuf;

use exposure_core::capability::{
    capability_profile, read_tool_catalog, AutomatabilityMap, ReductionPolicy, ToolCatalog,
};
use exposure_core::econdata::{read_employment, read_geography, EmploymentTable, Geography};
use exposure_core::index::{ExposureSettings, Exposures};
use exposure_core::synth::{names, SyntheticDataset};
use exposure_core::taxonomy::{read_taxonomy, SkillRequirementMatrix, WeightPolicy};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synth_seed42")
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Engine structures parsed from a dataset's rendered files.
pub struct Parsed {
    pub matrix: SkillRequirementMatrix,
    pub catalog: ToolCatalog,
    pub geography: Geography,
    pub table: EmploymentTable,
}

impl Parsed {
    pub fn from(ds: &SyntheticDataset) -> Self {
        let file = |n| ds.file(n).expect("file present");
        let geography = read_geography(file(names::GEOGRAPHY), names::GEOGRAPHY).unwrap();
        Self {
            matrix: read_taxonomy(file(names::TAXONOMY), names::TAXONOMY).unwrap(),
            catalog: read_tool_catalog(file(names::TOOLS), names::TOOLS).unwrap(),
            table: read_employment(file(names::EMPLOYMENT), names::EMPLOYMENT, &geography).unwrap(),
            geography,
        }
    }

    pub fn automatability(&self, reduction: ReductionPolicy) -> AutomatabilityMap {
        capability_profile(&self.catalog.edges, reduction)
    }

    pub fn exposures(&self, weight: WeightPolicy, reduction: ReductionPolicy) -> Exposures {
        let settings = ExposureSettings {
            weight_policy: weight,
            ..ExposureSettings::default()
        };
        Exposures::compute(&self.matrix, &self.automatability(reduction), &settings).unwrap()
    }
}
