//! Command-line front end: partition a mesh once, dump curve keys, or run a
//! full adaptive scenario.
//!
//! Exit codes: 0 on success, 1 on runtime errors (missing or malformed
//! files, partitioning failures), 2 on usage errors (bad flags or invalid
//! scenario values).

mod scenario;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tetpart::harness::{run_scenario, summarize};
use tetpart::mesh::load_mesh;
use tetpart::part1d::{keys_to_items, partition_1d, Part1dParams};
use tetpart::rtree::{partition_serial, PartitionAssignment, RefinementForest};
use tetpart::sfc::element_keys;
use tetpart::{CurveKind, Error, NormalizeMode, QualityReport, TetMesh};

#[derive(Parser)]
#[command(
    name = "tetpart",
    version,
    about = "Partition adaptive tetrahedral meshes and benchmark dynamic load balancing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Refinement-tree prefix sums
    Rtk,
    /// Morton curve keys + 1D multi-section
    Morton,
    /// Hilbert curve keys + 1D multi-section
    Hilbert,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveArg {
    Morton,
    Hilbert,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Divide all axes by the largest box length (keeps aspect ratio)
    Preserve,
    /// Divide each axis by its own length (stretches onto the unit cube)
    Stretch,
}

impl From<ModeArg> for NormalizeMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Preserve => NormalizeMode::PreserveAspect,
            ModeArg::Stretch => NormalizeMode::StretchToUnit,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Partition a mesh file once; emit an `element_id,part` CSV and a
    /// quality report JSON
    Partition {
        /// Input mesh in `tetmesh v1` format
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Rtk)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Preserve)]
        mode: ModeArg,
        /// Space-filling-curve order (bits per axis)
        #[arg(long, default_value_t = 21, value_parser = clap::value_parser!(u32).range(1..=21))]
        order: u32,
        /// Number of parts
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        p: u64,
        /// Subdivision arity of the 1D multi-section search
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(2..))]
        k: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report JSON path (stderr when omitted)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Dump `element_id,key` CSV of space-filling-curve keys
    SfcDump {
        /// Input mesh in `tetmesh v1` format
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = CurveArg::Hilbert)]
        method: CurveArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Preserve)]
        mode: ModeArg,
        #[arg(long, default_value_t = 21, value_parser = clap::value_parser!(u32).range(1..=21))]
        order: u32,
        /// CSV output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario file and stream per-step records as JSON lines
    Bench {
        /// Scenario description (key = value lines)
        scenario: PathBuf,
        /// JSON-lines output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's seed
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                // invalid scenario values are usage errors, like bad flags
                Error::Scenario(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Partition {
            input,
            method,
            mode,
            order,
            p,
            k,
            seed: _,
            out,
            report,
        } => cmd_partition(
            &input,
            method,
            mode.into(),
            order,
            p as usize,
            k as usize,
            out,
            report,
        ),
        Command::SfcDump {
            input,
            method,
            mode,
            order,
            out,
        } => cmd_sfc_dump(&input, method, mode.into(), order, out),
        Command::Bench {
            scenario,
            out,
            seed,
        } => cmd_bench(&scenario, out, seed),
    }
}

fn load_named(path: &Path) -> Result<TetMesh, Error> {
    load_mesh(path).map_err(|err| match err {
        Error::Io(io) => Error::NotFound(format!("{}: {io}", path.display())),
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    })
}

fn write_or_stdout(path: Option<&Path>, contents: &str) -> Result<(), Error> {
    match path {
        Some(path) => fs::write(path, contents)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes())?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_partition(
    input: &Path,
    method: MethodArg,
    mode: NormalizeMode,
    order: u32,
    p: usize,
    k: usize,
    out: Option<PathBuf>,
    report_path: Option<PathBuf>,
) -> Result<(), Error> {
    let mesh = load_named(input)?;
    let weights = |id: usize| mesh.weight(id);

    let (assignment, dfs): (PartitionAssignment, Option<Vec<usize>>) = match method {
        MethodArg::Rtk => {
            let forest = RefinementForest::from_mesh(&mesh);
            let dfs = forest.dfs_leaf_order();
            (partition_serial(&forest, weights, p)?, Some(dfs))
        }
        MethodArg::Morton | MethodArg::Hilbert => {
            let kind = if method == MethodArg::Morton {
                CurveKind::Morton
            } else {
                CurveKind::Hilbert
            };
            let keys = element_keys(&mesh, mode, kind, order)?;
            let items = keys_to_items(&keys, order);
            let params = Part1dParams {
                k,
                ..Part1dParams::default()
            };
            let (_, assignment) = partition_1d(&items, p, &params)?;
            (assignment, None)
        }
    };

    let mut csv = String::from("element_id,part\n");
    for (id, part) in assignment.iter() {
        csv.push_str(&format!("{id},{part}\n"));
    }
    write_or_stdout(out.as_deref(), &csv)?;

    let report: QualityReport = tetpart::metrics::quality_report(
        &mesh,
        None,
        &assignment,
        None,
        weights,
        p,
        dfs.as_deref(),
    )?;
    let mut json = serde_json::to_string(&report).expect("report serializes");
    json.push('\n');
    match report_path {
        Some(path) => fs::write(path, json)?,
        None => eprint!("{json}"),
    }
    Ok(())
}

fn cmd_sfc_dump(
    input: &Path,
    method: CurveArg,
    mode: NormalizeMode,
    order: u32,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    let mesh = load_named(input)?;
    let kind = match method {
        CurveArg::Morton => CurveKind::Morton,
        CurveArg::Hilbert => CurveKind::Hilbert,
    };
    let keys = element_keys(&mesh, mode, kind, order)?;
    let mut csv = String::from("element_id,key\n");
    for (id, key, _) in keys {
        csv.push_str(&format!("{id},{key}\n"));
    }
    write_or_stdout(out.as_deref(), &csv)
}

fn cmd_bench(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), Error> {
    let text = fs::read_to_string(path)
        .map_err(|io| Error::NotFound(format!("{}: {io}", path.display())))?;
    let mut scenario = scenario::parse(&text)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let records = run_scenario(&scenario)?;

    let mut lines = String::new();
    for record in &records {
        lines.push_str(&record.to_json_line());
        lines.push('\n');
    }
    write_or_stdout(out.as_deref(), &lines)?;

    let summary = summarize(&records);
    eprintln!("steps                    {}", summary.steps);
    eprintln!("final elements           {}", summary.final_elements);
    eprintln!("mean imbalance           {:.6}", summary.mean_imbalance);
    eprintln!(
        "mean interface faces     {:.3}",
        summary.mean_interface_faces
    );
    eprintln!(
        "mean migration fraction  {:.6}",
        summary.mean_migration_fraction
    );
    Ok(())
}
