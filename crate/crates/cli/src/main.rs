mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use exposure_core::pipeline::{self, InputPaths, RunSettings};
use exposure_core::synth::{self, SynthConfig};

use config::{FileConfig, Overrides};

#[derive(Debug, Parser)]
#[command(name = "exposure", version, about = "Skills-based automation exposure index")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for reports or generated data
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Dataset directory with the standard file names
    #[arg(long, global = true, value_name = "DIR")]
    data: Option<PathBuf>,
    /// Generator seed (synth)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scope compared against all occupations
    #[arg(long, global = true, value_name = "NAME")]
    scope: Option<String>,
    /// importance-x-level, importance or level
    #[arg(long, global = true, value_name = "NAME")]
    weight_policy: Option<String>,
    /// max or boolean
    #[arg(long, global = true, value_name = "NAME")]
    reduction: Option<String>,
    /// Confidence threshold of the boolean reduction
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Pair selector for transition recall: threshold:<t> or top:<fraction>
    #[arg(long, global = true, value_name = "SPEC")]
    selector: Option<String>,
    /// Worker threads (results do not depend on it)
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset
    Synth(SynthArgs),
    /// Occupation exposures, regional indices and surprise gaps
    Compute,
    /// Industry concentration of exposed wage value per state
    Hhi,
    /// Transition recall, tier agreement and metric regressions
    Validate,
    /// Plot-ready CSV tables
    Plotdata,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// 923 occupations × 500 skills × 3000 counties
    #[arg(long)]
    national_scale: bool,
    #[arg(long)]
    occupations: Option<usize>,
    #[arg(long)]
    skills: Option<usize>,
    #[arg(long)]
    tools: Option<usize>,
    #[arg(long)]
    counties: Option<usize>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    industries: Option<usize>,
    #[arg(long)]
    transitions: Option<usize>,
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn prepare(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn synth_config(args: &SynthArgs, seed: Option<u64>, cfg: &FileConfig) -> SynthConfig {
    let mut c = if args.national_scale {
        SynthConfig::national_scale(SynthConfig::default().seed)
    } else {
        cfg.synth.clone().unwrap_or_default()
    };
    if let Some(s) = seed {
        c.seed = s;
    }
    let set = |slot: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut c.n_occupations, args.occupations);
    set(&mut c.n_skills, args.skills);
    set(&mut c.n_tools, args.tools);
    set(&mut c.n_counties, args.counties);
    set(&mut c.n_states, args.states);
    set(&mut c.n_industries, args.industries);
    set(&mut c.n_transitions, args.transitions);
    c
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let cfg = match &g.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        output: g.output.clone(),
        data: g.data.clone(),
        scope: g.scope.clone(),
        weight_policy: g.weight_policy.clone(),
        reduction: g.reduction.clone(),
        tau: g.tau,
        selector: g.selector.clone(),
        workers: g.workers,
    };
    let out = config::output_dir(&flags, &cfg);

    if let Command::Synth(args) = &cli.command {
        let ds = synth::generate(&synth_config(args, g.seed, &cfg))?;
        ds.write_to(&out)?;
        println!(
            "wrote {} files to {} ({} occupations, {} counties)",
            ds.files.len() + 1,
            out.display(),
            ds.manifest.occupations,
            ds.manifest.counties
        );
        return Ok(());
    }

    let settings: RunSettings = config::run_settings(&flags, &cfg)?;
    let paths: InputPaths = config::input_paths(&flags, &cfg)?;
    match cli.command {
        Command::Synth(_) => unreachable!("handled above"),
        Command::Compute => {
            let report = pipeline::run_compute(&paths, &settings)?;
            prepare(&out)?;
            write(&out, pipeline::COMPUTE_REPORT, &pipeline::to_json_bytes(&report)?)?;
        }
        Command::Hhi => {
            let report = pipeline::run_concentration(&paths, &settings)?;
            prepare(&out)?;
            write(&out, pipeline::CONCENTRATION_REPORT, &pipeline::to_json_bytes(&report)?)?;
        }
        Command::Validate => {
            let report = pipeline::run_validate(&paths, &settings)?;
            prepare(&out)?;
            write(&out, pipeline::VALIDATION_REPORT, &pipeline::to_json_bytes(&report)?)?;
        }
        Command::Plotdata => {
            let plots = pipeline::run_plotdata(&paths, &settings)?;
            prepare(&out)?;
            write(&out, pipeline::CHOROPLETH, &plots.choropleth)?;
            write(&out, pipeline::SCATTER, &plots.scatter)?;
            write(&out, pipeline::TIER_MAP, &plots.tiers)?;
        }
    }
    Ok(())
}

/// Prints a JSON error object on stderr and returns the exit code.
fn report_error(err: &anyhow::Error) -> ExitCode {
    let core = err.chain().find_map(|e| e.downcast_ref::<exposure_core::Error>());
    let (code, internal) = match core {
        Some(e) => (e.code(), !e.is_input_error()),
        None => ("input", false),
    };
    let causes: Vec<String> = err.chain().skip(1).map(|e| e.to_string()).collect();
    let body = json!({
        "error": {
            "code": code,
            "kind": if internal { "internal" } else { "input" },
            "message": err.to_string(),
            "causes": causes,
        }
    });
    eprintln!("{body}");
    ExitCode::from(if internal { 2 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body =
                json!({"error": {"code": "usage", "kind": "input", "message": e.to_string().trim_end(), "causes": []}});
            eprintln!("{body}");
            return ExitCode::from(1);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => report_error(&e),
        Err(_) => {
            eprintln!(
                "{}",
                json!({"error": {"code": "internal", "kind": "internal", "message": "unexpected panic", "causes": []}})
            );
            ExitCode::from(2)
        }
    }
}
