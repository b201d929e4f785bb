//! Two published Ohio figures, 11.8% and 11.34%, come from different analyses.
//! Each fixture pins one of them inside its own analysis.

mod common;

use common::rel_err;
use exposure_core::capability::{capability_profile, read_tool_catalog, ReductionPolicy};
use exposure_core::concentration::{state_concentration, HhiTier};
use exposure_core::econdata::{read_employment, read_geography, EmploymentTable, RegionScope};
use exposure_core::index::{regional_index, ExposureSettings, Exposures, ScopeFilter};
use exposure_core::taxonomy::{read_taxonomy, SkillRequirementMatrix};

/// One single-skill occupation per industry, all in one Ohio county with
/// equal wage value; occupation `k` has automatability `auto[k]`.
fn ohio_world(auto: &[f64]) -> (SkillRequirementMatrix, Exposures, EmploymentTable) {
    let mut taxonomy =
        String::from("occupation_code,occupation_title,industry,skill_id,skill_name,skill_category,importance,level\n");
    let mut tools = String::from("tool_id,tool_name,source,skill_id,confidence\n");
    let mut emp = String::from("occupation_code,county_fips,employment,median_wage\n");
    for (k, a) in auto.iter().enumerate() {
        taxonomy.push_str(&format!("43-{k:04},Occ {k},IND{k:02},S{k},s{k},skill,3,4\n"));
        tools.push_str(&format!("T{k},t{k},directory,S{k},{a}\n"));
        emp.push_str(&format!("43-{k:04},39049,1000,50000\n"));
    }
    let matrix = read_taxonomy(taxonomy.as_bytes(), "taxonomy").unwrap();
    let catalog = read_tool_catalog(tools.as_bytes(), "tools").unwrap();
    let geography = read_geography("county_fips,state\n39049,OH\n".as_bytes(), "geography").unwrap();
    let table = read_employment(emp.as_bytes(), "employment", &geography).unwrap();
    let profile = capability_profile(&catalog.edges, ReductionPolicy::Max);
    let ex = Exposures::compute(&matrix, &profile, &ExposureSettings::default()).unwrap();
    (matrix, ex, table)
}

fn ohio_index(ex: &Exposures, table: &EmploymentTable) -> f64 {
    regional_index(ex, table, &ScopeFilter::all(), &RegionScope::State("OH".into()))
        .unwrap()
        .index
}

#[test]
fn industrial_state_index_figure() {
    let (_, ex, table) = ohio_world(&[0.118]);
    let idx = ohio_index(&ex, &table);
    assert!(rel_err(idx, 0.118) <= 1e-12, "{idx}");
    assert_eq!((1000.0 * idx).round() / 10.0, 11.8);
}

#[test]
fn broadly_distributed_state_figure() {
    // relative exposure per industry, mean 1
    let spread = [1.6, 1.4, 1.2, 1.1, 1.0, 0.9, 0.9, 0.8, 0.6, 0.5];
    let auto: Vec<f64> = spread.iter().map(|f| 0.1134 * f).collect();
    let (matrix, ex, table) = ohio_world(&auto);
    let idx = ohio_index(&ex, &table);
    assert!(rel_err(idx, 0.1134) <= 1e-12, "{idx}");
    assert_eq!((10000.0 * idx).round() / 100.0, 11.34);
    let oh = &state_concentration(&matrix, &ex, &table).unwrap()[0];
    // 100 × Σ spread²
    assert!((oh.hhi - 1104.0).abs() <= 1e-9, "{}", oh.hhi);
    assert_eq!(oh.tier, HhiTier::MostDistributed);
}
