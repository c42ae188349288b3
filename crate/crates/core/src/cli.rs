//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use crate::classify::{classify_motif, Verdict};
use crate::diagram::{build_diagram_with, emit_patch_svg, emit_svg, DiagramError, DiagramOptions, SvgStyle};
use crate::lift_oracle::{lift_trace, lift_trace_auto, OracleError};
use crate::polymethod::{MethodError, PolygonalMethod};
use crate::tcell::{builtin_tcell, summary_line, Builtin, TCell, TCellError};

pub const SCHEMA: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "polylink", version, about = "Classify and draw doubly periodic weaves and polycatenanes")]
pub struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Builtin tilings with their vertex, edge and face counts.
    List,
    /// Check a cell and print its summary.
    Validate(CellArgs),
    /// Classify the motif produced by a method.
    Classify(ClassifyArgs),
    /// Draw the motif as SVG.
    Render(RenderArgs),
    /// Run the universal-cover check and print its report.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct Source {
    /// Builtin tiling name.
    #[arg(long)]
    pub tiling: Option<Builtin>,
    /// TCELL file.
    #[arg(long)]
    pub cell: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CellArgs {
    #[command(flatten)]
    pub source: Source,
    /// Replace the cell by its NxM cover.
    #[arg(long, value_parser = parse_dims)]
    pub cover: Option<(usize, usize)>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub cell: CellArgs,
    /// Method: cr:s, cr:<m> or br:<m>.
    #[arg(long)]
    pub method: PolygonalMethod,
    /// Also run the universal-cover check and report agreement.
    #[arg(long)]
    pub oracle: bool,
    /// Oracle patch size (default: grow until it suffices).
    #[arg(long)]
    pub patch: Option<usize>,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub cell: CellArgs,
    #[arg(long)]
    pub method: PolygonalMethod,
    #[arg(long)]
    pub svg: PathBuf,
    /// Draw an NxM patch of the lift instead of the torus cell.
    #[arg(long, value_parser = parse_dims)]
    pub supercell: Option<(usize, usize)>,
    /// Pixels per cell.
    #[arg(long, default_value_t = 400.0)]
    pub scale: f64,
    /// Circle every crossing.
    #[arg(long)]
    pub markers: bool,
    /// Keep local conventions where the diagram cannot alternate.
    #[arg(long)]
    pub allow_obstruction: bool,
    /// Dump strands, crossings and the component map as JSON.
    #[arg(long)]
    pub diagram_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub cell: CellArgs,
    #[arg(long)]
    pub method: PolygonalMethod,
    #[arg(long)]
    pub patch: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Cell(#[from] TCellError),
    #[error("{0}")]
    Method(#[from] MethodError),
    #[error("{0}")]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Diagram(#[from] DiagramError),
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('x').ok_or_else(|| format!("expected NxM, got `{s}`"))?;
    let n: usize = a.parse().map_err(|_| format!("bad width `{a}`"))?;
    let m: usize = b.parse().map_err(|_| format!("bad height `{b}`"))?;
    if n == 0 || m == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok((n, m))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub fn load_cell(args: &CellArgs) -> Result<TCell, CliError> {
    let cell = match (&args.source.tiling, &args.source.cell) {
        (Some(b), _) => builtin_tcell(*b),
        (None, Some(path)) => {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            TCell::parse(&read(path)?)?.with_name(&name)
        }
        (None, None) => unreachable!("clap requires a cell source"),
    };
    Ok(match args.cover {
        Some((nx, ny)) => cell.cover(nx, ny),
        None => cell,
    })
}

pub fn cmd_list() -> String {
    let mut rows: Vec<String> = Builtin::ALL.iter().map(|b| summary_line(&builtin_tcell(*b))).collect();
    rows.sort();
    rows.join("\n") + "\n"
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value") + "\n"
}

/// Report JSON and exit code.
pub fn cmd_classify(args: &ClassifyArgs) -> Result<(Value, i32), CliError> {
    let cell = load_cell(&args.cell)?;
    let result = classify_motif(&cell, args.method)?;
    let mut report = serde_json::to_value(&result).expect("serializable report");
    report["schema"] = json!(SCHEMA);
    if args.oracle {
        let lift = match args.patch {
            Some(n) => lift_trace(&cell, args.method, n)?,
            None => lift_trace_auto(&cell, args.method)?,
        };
        report["oracle"] = json!({
            "verdict": lift.verdict,
            "patch": lift.patch,
            "agrees": lift.verdict == result.verdict,
        });
        if lift.verdict != result.verdict {
            log::warn!("oracle says {}, classifier says {}", lift.verdict, result.verdict);
        }
    }
    if let Some(path) = &args.report {
        write(path, &pretty(&report))?;
    }
    let code = if result.verdict == Verdict::Invalid { EXIT_INVALID } else { EXIT_OK };
    Ok((report, code))
}

pub fn cmd_render(args: &RenderArgs) -> Result<(), CliError> {
    let cell = load_cell(&args.cell)?;
    let options = DiagramOptions { allow_obstruction: args.allow_obstruction };
    let diagram = build_diagram_with(&cell, args.method, options)?;
    if diagram.repaired > 0 {
        log::info!("{} crossings flipped to alternate", diagram.repaired);
    }
    for c in &diagram.obstructed {
        log::warn!("component {c} does not alternate");
    }
    let style = SvgStyle { scale: args.scale, markers: args.markers, ..SvgStyle::default() };
    let svg = match args.supercell {
        Some((nx, ny)) => emit_patch_svg(&diagram.unfold(nx, ny), &style),
        None => emit_svg(&diagram, &style),
    };
    write(&args.svg, &svg)?;
    if let Some(path) = &args.diagram_json {
        write(path, &pretty(&diagram.to_json()))?;
    }
    Ok(())
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<Value, CliError> {
    let cell = load_cell(&args.cell)?;
    let report = match args.patch {
        Some(n) => lift_trace(&cell, args.method, n)?,
        None => lift_trace_auto(&cell, args.method)?,
    };
    Ok(serde_json::to_value(&report).expect("serializable report"))
}

pub fn cmd_validate(args: &CellArgs) -> Result<String, CliError> {
    let cell = load_cell(args)?;
    Ok(summary_line(&cell) + "\n")
}

/// Run a parsed command line, printing to stdout/stderr. Returns the exit
/// code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::List => {
            print!("{}", cmd_list());
            Ok(EXIT_OK)
        }
        Command::Validate(a) => cmd_validate(a).map(|s| {
            print!("{s}");
            EXIT_OK
        }),
        Command::Classify(a) => cmd_classify(a).map(|(report, code)| {
            print!("{}", pretty(&report));
            code
        }),
        Command::Render(a) => cmd_render(a).map(|_| EXIT_OK),
        Command::Oracle(a) => cmd_oracle(a).map(|report| {
            print!("{}", pretty(&report));
            EXIT_OK
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
