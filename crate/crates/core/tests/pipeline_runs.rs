mod common;

use std::collections::BTreeMap;

use common::fixture_dir;
use exposure_core::concentration::HhiTier;
use exposure_core::econdata::RegionScope;
use exposure_core::pipeline::{
    run_compute, run_concentration, run_plotdata, run_validate, to_json_bytes, InputPaths, RunSettings,
};
use exposure_core::synth::{self, SynthConfig};
use exposure_core::Error;

fn settings(workers: Option<usize>) -> RunSettings {
    RunSettings {
        workers,
        ..RunSettings::default()
    }
}

#[test]
fn compute_and_validate_are_byte_identical_across_workers() {
    let paths = InputPaths::from_dataset_dir(fixture_dir());
    let compute = |w| to_json_bytes(&run_compute(&paths, &settings(w)).unwrap()).unwrap();
    let validate = |w| to_json_bytes(&run_validate(&paths, &settings(w)).unwrap()).unwrap();
    let base = compute(Some(1));
    assert_eq!(base, compute(Some(1)));
    assert_eq!(base, compute(Some(4)));
    assert_eq!(base, compute(None));
    let v = validate(Some(1));
    assert_eq!(v, validate(Some(3)));
}

#[test]
fn report_embeds_digests_and_policies() {
    let paths = InputPaths::from_dataset_dir(fixture_dir());
    let report = run_compute(&paths, &RunSettings::default()).unwrap();
    let m = &report.metadata;
    assert_eq!(m.command, "compute");
    for role in ["taxonomy", "tools", "employment", "geography", "scopes"] {
        assert_eq!(m.inputs[role].sha256.len(), 64, "{role}");
    }
    assert_eq!(m.inputs["employment"].file, "employment.csv");
    assert_eq!(m.reduction.name(), "max");
    assert_eq!(m.surface_scope, "surface");
    // all / surface × (30 counties + 8 states + national)
    assert_eq!(report.regions.len(), 2 * (30 + 8 + 1));
    assert_eq!(report.surprise.len(), 9);
    assert_eq!(report.exposures.len(), 50);
}

#[test]
fn choropleth_matches_compute_report() {
    let paths = InputPaths::from_dataset_dir(fixture_dir());
    let report = run_compute(&paths, &RunSettings::default()).unwrap();
    let mut expected = BTreeMap::new();
    for r in &report.regions {
        if let RegionScope::State(s) = &r.region {
            expected.insert((s.clone(), r.scope.clone()), r.index);
        }
    }
    let plots = run_plotdata(&paths, &RunSettings::default()).unwrap();
    let mut rdr = csv::Reader::from_reader(&plots.choropleth[..]);
    let mut seen = 0;
    for row in rdr.records() {
        let row = row.unwrap();
        let v: f64 = row[2].parse().unwrap();
        assert_eq!(v, expected[&(row[0].to_string(), row[1].to_string())]);
        seen += 1;
    }
    assert_eq!(seen, expected.len());
    let scatter_rows = csv::Reader::from_reader(&plots.scatter[..]).records().count();
    assert_eq!(scatter_rows, 8);
    let tier_rows = csv::Reader::from_reader(&plots.tiers[..]).records().count();
    assert_eq!(tier_rows, 8);
}

#[test]
fn single_industry_states_are_most_concentrated() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synth::generate(&SynthConfig {
        n_industries: 1,
        ..SynthConfig::with_seed(4)
    })
    .unwrap();
    ds.write_to(dir.path()).unwrap();
    let report = run_concentration(&InputPaths::from_dataset_dir(dir.path()), &RunSettings::default()).unwrap();
    for s in &report.states {
        assert_eq!(s.hhi, 10_000.0);
        assert_eq!(s.tier, HhiTier::MostConcentrated);
    }
}

#[test]
fn missing_employment_file_names_the_path() {
    let mut paths = InputPaths::from_dataset_dir(fixture_dir());
    paths.employment = fixture_dir().join("no_such_employment.csv");
    let err = run_compute(&paths, &RunSettings::default()).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("no_such_employment.csv"), "{err}");
}

#[test]
fn unknown_surface_scope_is_rejected() {
    let paths = InputPaths::from_dataset_dir(fixture_dir());
    let s = RunSettings {
        surface_scope: "robots".into(),
        ..RunSettings::default()
    };
    assert!(matches!(run_compute(&paths, &s), Err(Error::InvalidScope(_))));
}

#[test]
fn identical_tier_files_agree_fully() {
    let dir = tempfile::tempdir().unwrap();
    let paths = InputPaths::from_dataset_dir(fixture_dir());
    let report = run_validate(&paths, &RunSettings::default()).unwrap();
    // feed our own ranking back in as the external ranking
    std::fs::write(dir.path().join("ours.csv"), report.tiers.ours.to_csv()).unwrap();
    let mut p2 = paths.clone();
    p2.external_tiers = Some(dir.path().join("ours.csv"));
    let again = run_validate(&p2, &RunSettings::default()).unwrap();
    assert_eq!(again.tiers.agreement.overall, 1.0);
}
