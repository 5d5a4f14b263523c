//! The `sstokes` command line.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::output::{csv_string, json_string};
use crate::harness::{compare_noise, converge_space, converge_time, estimate_errors, ExperimentConfig, StudyReport};
use crate::mesh::{DofCounts, TorusMesh};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EXPERIMENT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sstokes", version, about = "Stochastic Stokes solver lab on the periodic square")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct StudyArgs {
    /// TOML experiment description
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `[experiment] seed`
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `[experiment] samples`
    #[arg(long)]
    pub samples: Option<usize>,
    /// Directory receiving `<study>.csv` and `<study>.json`
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format printed to standard output
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print L, n, h and the degree-of-freedom counts as JSON
    MeshInfo {
        #[arg(long = "L", default_value_t = 1.0)]
        l: f64,
        #[arg(long)]
        n: usize,
    },
    /// Errors of a single resolution
    Run(StudyArgs),
    /// Temporal rates on the spectral space over `M_list`
    ConvergeTime(StudyArgs),
    /// Spatial rates over `n_list`
    ConvergeSpace(StudyArgs),
    /// Standard against modified pressure errors over `M_list`
    CompareNoise(StudyArgs),
}

#[derive(Serialize)]
struct MeshInfo {
    #[serde(rename = "L")]
    l: f64,
    n: usize,
    h: f64,
    vertices: usize,
    edges: usize,
    triangles: usize,
    dofs: DofCounts,
}

pub fn mesh_info_json(l: f64, n: usize) -> Result<String> {
    let mesh = TorusMesh::new(l, n)?;
    let info = MeshInfo {
        l,
        n,
        h: mesh.h(),
        vertices: mesh.num_vertices(),
        edges: mesh.num_edges(),
        triangles: mesh.num_triangles(),
        dofs: mesh.dof_counts(),
    };
    serde_json::to_string_pretty(&info).map_err(|e| Error::Experiment(e.to_string()))
}

/// Exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidMesh(_) | Error::InvalidDriver(_) => EXIT_CONFIG,
        Error::Experiment(_) | Error::RateFit(_) => EXIT_EXPERIMENT,
        _ => EXIT_FAILURE,
    }
}

fn load(args: &StudyArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(samples) = args.samples {
        cfg.samples = samples;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(report: &StudyReport, args: &StudyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let csv = csv_string(report)?;
    let json = json_string(report)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.csv", report.study)), &csv)?;
        std::fs::write(dir.join(format!("{}.json", report.study)), &json)?;
    }
    match args.format {
        Format::Csv => stdout.write_all(csv.as_bytes())?,
        Format::Json => stdout.write_all(json.as_bytes())?,
    }
    for c in &report.checks {
        writeln!(
            stderr,
            "{} {}: {:.4e} in [{:.4e}, {:.4e}]",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.band[0],
            c.band[1]
        )?;
    }
    Ok(())
}

/// Run a parsed command line, returning the process exit status.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::MeshInfo { l, n } => mesh_info_json(*l, *n).and_then(|s| {
            writeln!(stdout, "{s}")?;
            Ok(EXIT_OK)
        }),
        Command::Run(a) | Command::ConvergeTime(a) | Command::ConvergeSpace(a) | Command::CompareNoise(a) => {
            let study = match &cli.command {
                Command::Run(_) => estimate_errors,
                Command::ConvergeTime(_) => converge_time,
                Command::ConvergeSpace(_) => converge_space,
                _ => compare_noise,
            };
            load(a).and_then(|cfg| study(&cfg)).and_then(|report| {
                emit(&report, a, stdout, stderr)?;
                Ok(if report.passed() { EXIT_OK } else { EXIT_EXPERIMENT })
            })
        }
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(stderr, "error: {e}");
        exit_code(&e)
    })
}
