//! `ealm` — train, evaluate, and benchmark the ALM/EALM fuzzy-modeling
//! pipelines, and export the intermediate planes they work on.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 fit failure.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ealm_core::bench::{
    run_benchmark, structure_report, BenchSpec, Generator, GENERATOR_NAMES,
};
use ealm_core::grid::{quantize, GridSpec, PlaneKind};
use ealm_core::idscog::{cog_path, ids};
use ealm_core::io::{
    read_dataset_csv, write_grid_pgm, write_path_csv, write_plane_pgm,
};
use ealm_core::modeling::{
    alm_fit, ealm_fit, model_error, AlmConfig, EalmConfig, Method, RuleBase,
};
use ealm_core::morphology::{fig14_chains, prune, thicken, thin_to_skeleton, DEFAULT_MAX_PASSES};
use ealm_core::{Dataset, EalmError, IdsParams};

#[derive(Parser)]
#[command(
    name = "ealm",
    version,
    about = "Fuzzy modeling by recursive plane decomposition (ALM and EALM)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a rule base on a CSV dataset and save it as JSON.
    Train(TrainArgs),
    /// Score a saved rule base on a CSV dataset.
    Eval(EvalArgs),
    /// Run the synthetic train/test benchmark protocol.
    Bench(BenchArgs),
    /// Quantize a dataset plane and export each processing stage as PGM.
    ExportPlane(ExportPlaneArgs),
    /// Compare the averaging path with the skeleton on a generator's plane.
    StructureReport(StructureReportArgs),
}

/// Flags shared by every command that fits or rasterizes.
#[derive(Args, Clone)]
struct FitOpts {
    /// Cells per side of the square quantization grid.
    #[arg(long, default_value_t = 64)]
    grid_size: usize,
    /// Pyramid radius of the ink-drop spread (ALM).
    #[arg(long, default_value_t = 2)]
    ids_radius: usize,
    /// Thickening passes before thinning (EALM).
    #[arg(long, default_value_t = 3)]
    thicken_passes: usize,
    /// Maximum spur length removed when pruning the skeleton (EALM).
    #[arg(long, default_value_t = 3)]
    spur_length: usize,
    /// Minimum rule truth before ALM splits a region.
    #[arg(long, default_value_t = 0.8)]
    truth_threshold: f64,
    /// Normalized RMSE below which EALM stops splitting a region.
    #[arg(long, default_value_t = 0.05)]
    error_threshold: f64,
    /// Maximum recursion depth of either method.
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
    /// Seed for every pseudo-random draw.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl FitOpts {
    fn alm_config(&self) -> AlmConfig {
        AlmConfig {
            grid_size: self.grid_size,
            ids: IdsParams {
                radius: self.ids_radius,
                ..IdsParams::default()
            },
            truth_threshold: self.truth_threshold,
            max_depth: self.max_depth,
        }
    }

    fn ealm_config(&self) -> EalmConfig {
        EalmConfig {
            grid_size: self.grid_size,
            thicken_passes: self.thicken_passes,
            spur_length: self.spur_length,
            error_threshold: self.error_threshold,
            max_depth: self.max_depth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Alm,
    Ealm,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Alm => Method::Alm,
            MethodArg::Ealm => Method::Ealm,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Modeling method to fit.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Training dataset CSV (columns x1,...,xn,y; optional header).
    #[arg(long)]
    data: PathBuf,
    /// Where to write the rule-base JSON.
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    /// Also write each input plane's processing stages as PGM files
    /// next to the model.
    #[arg(long)]
    dump_planes: bool,
    #[command(flatten)]
    opts: FitOpts,
}

#[derive(Args)]
struct EvalArgs {
    /// Rule-base JSON produced by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Evaluation dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Optional CSV of per-point predictions (inputs, actual, predicted).
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Synthetic data generator.
    #[arg(long)]
    generator: String,
    /// Training set size.
    #[arg(long, default_value_t = 450)]
    train: usize,
    /// Test set size.
    #[arg(long, default_value_t = 1000)]
    test: usize,
    /// Where to write the report CSV.
    #[arg(long, default_value = "bench.csv")]
    csv: PathBuf,
    /// Record wall-clock fit time in the report (breaks byte-identical
    /// reruns, so it is off by default).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    opts: FitOpts,
}

#[derive(Args)]
struct ExportPlaneArgs {
    /// Dataset CSV to rasterize.
    #[arg(long)]
    data: PathBuf,
    /// Zero-based input index of the plane to export.
    #[arg(long, default_value_t = 0)]
    input: usize,
    /// Directory receiving the PGM/CSV stage files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    opts: FitOpts,
}

#[derive(Args)]
struct StructureReportArgs {
    /// Synthetic data generator (circle or sin-circle).
    #[arg(long, default_value = "circle")]
    generator: String,
    /// Number of samples to rasterize.
    #[arg(long, default_value_t = 2000)]
    train: usize,
    /// Directory receiving raw_plane.pgm, cog_path.pgm, skeleton.pgm.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    opts: FitOpts,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> CliError {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<EalmError> for CliError {
    fn from(e: EalmError) -> CliError {
        let code = match e {
            // problems with the user's data or files
            EalmError::EmptyDataset
            | EalmError::ArityMismatch { .. }
            | EalmError::NonFiniteValue { .. }
            | EalmError::Csv { .. }
            | EalmError::QueryArity { .. }
            | EalmError::BadPgm(_)
            | EalmError::Io(_)
            | EalmError::Json(_) => 2,
            // bad flag values and unknown names
            EalmError::BadSpec(_) | EalmError::UnknownGenerator(_) => 1,
            // everything else surfaces from inside a fit
            _ => 3,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::ExportPlane(a) => cmd_export_plane(a),
        Command::StructureReport(a) => cmd_structure_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Resolves an output path against EALM_OUT_DIR (absolute paths win) and
/// makes sure the directory it lands in exists.
fn out_path(p: &Path) -> Result<PathBuf, CliError> {
    let resolved = if p.is_absolute() {
        p.to_path_buf()
    } else {
        match std::env::var_os("EALM_OUT_DIR") {
            Some(dir) => PathBuf::from(dir).join(p),
            None => p.to_path_buf(),
        }
    };
    if let Some(parent) = resolved.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(EalmError::Io)?;
        }
    }
    Ok(resolved)
}

/// Like `out_path`, but the argument names the directory itself.
fn out_dir(p: &Path) -> Result<PathBuf, CliError> {
    let resolved = if p.is_absolute() {
        p.to_path_buf()
    } else {
        match std::env::var_os("EALM_OUT_DIR") {
            Some(dir) => PathBuf::from(dir).join(p),
            None => p.to_path_buf(),
        }
    };
    fs::create_dir_all(&resolved).map_err(EalmError::Io)?;
    Ok(resolved)
}

fn cmd_train(a: TrainArgs) -> CliResult {
    let ds = read_dataset_csv(&a.data)?;
    if ds.len() < 2 {
        // one point cannot span a grid, let alone a rule base
        return Err(EalmError::EmptyDataset.into());
    }
    let rb = match a.method {
        MethodArg::Alm => alm_fit(&ds, &a.opts.alm_config())?,
        MethodArg::Ealm => ealm_fit(&ds, &a.opts.ealm_config())?,
    };
    let (mse, corr) = model_error(&rb, &ds)?;

    let model_path = out_path(&a.model)?;
    let mut w = BufWriter::new(File::create(&model_path).map_err(EalmError::Io)?);
    rb.save_json(&mut w)?;
    w.flush().map_err(EalmError::Io)?;

    println!("method: {}", method_name(rb.method));
    println!("rules: {}", rb.rules.len());
    println!("depth: {}", rb.depth);
    println!("train_mse: {mse}");
    match corr {
        Some(c) => println!("train_corr: {c}"),
        None => println!("train_corr: n/a"),
    }
    println!("model: {}", model_path.display());

    if a.dump_planes {
        let dir = model_path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        dump_planes(&ds, a.method, &a.opts, &dir)?;
    }
    Ok(())
}

/// Writes each input/output plane's processing stages: the quantized plane
/// plus, per method, either the spread intensity and centroid path (ALM) or
/// the thickened plane and pruned skeleton (EALM).
fn dump_planes(ds: &Dataset, method: MethodArg, opts: &FitOpts, dir: &Path) -> CliResult {
    let g = opts.grid_size;
    for i in 0..ds.n_inputs() {
        let spec = GridSpec::new(g, g, ds.input_range(i), ds.output_range())?;
        let raw = quantize(ds, PlaneKind::InputOutput(i), spec)?;
        write_pgm(&raw, &dir.join(format!("plane_x{i}_raw.pgm")))?;
        match method {
            MethodArg::Alm => {
                let params = IdsParams {
                    radius: opts.ids_radius,
                    ..IdsParams::default()
                };
                let spread = ids(&raw, &params);
                let mut w = stage_file(&dir.join(format!("plane_x{i}_spread.pgm")))?;
                write_plane_pgm(&spread, &mut w)?;
                w.flush().map_err(EalmError::Io)?;
                let path = cog_path(&spread);
                let mut w = stage_file(&dir.join(format!("plane_x{i}_path.csv")))?;
                write_path_csv(&path, &mut w)?;
                w.flush().map_err(EalmError::Io)?;
            }
            MethodArg::Ealm => {
                let (thick_chain, thin_chain) = fig14_chains();
                let thick = thicken(&raw, &thick_chain, opts.thicken_passes)?;
                write_pgm(&thick, &dir.join(format!("plane_x{i}_thickened.pgm")))?;
                let sk = thin_to_skeleton(&thick, &thin_chain, DEFAULT_MAX_PASSES)?;
                let pruned = prune(&sk.grid, opts.spur_length);
                write_pgm(&pruned, &dir.join(format!("plane_x{i}_skeleton.pgm")))?;
            }
        }
    }
    Ok(())
}

fn stage_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(EalmError::Io)?))
}

fn write_pgm(g: &ealm_core::BinaryGrid, path: &Path) -> CliResult {
    let mut w = stage_file(path)?;
    write_grid_pgm(g, &mut w)?;
    w.flush().map_err(EalmError::Io)?;
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    let mut r = BufReader::new(File::open(&a.model).map_err(EalmError::Io)?);
    let rb = RuleBase::load_json(&mut r)?;
    let ds = read_dataset_csv(&a.data)?;
    let (mse, corr) = model_error(&rb, &ds)?;
    println!("mse: {mse}");
    match corr {
        Some(c) => println!("corr: {c}"),
        None => println!("corr: n/a"),
    }
    if let Some(pred_path) = &a.predictions {
        let pred_path = out_path(pred_path)?;
        let mut w = stage_file(&pred_path)?;
        let header: Vec<String> = (1..=ds.n_inputs()).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},actual,predicted", header.join(",")).map_err(EalmError::Io)?;
        for (x, y) in ds.rows() {
            let p = ealm_core::modeling::predict(&rb, x)?;
            let fields: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{},{y},{p}", fields.join(",")).map_err(EalmError::Io)?;
        }
        w.flush().map_err(EalmError::Io)?;
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    if a.train == 0 || a.test == 0 {
        return Err(CliError::usage("--train and --test must be at least 1"));
    }
    let generator = Generator::parse(&a.generator).map_err(|_| {
        CliError::usage(format!(
            "unknown generator `{}` (valid: {})",
            a.generator,
            GENERATOR_NAMES.join(", ")
        ))
    })?;
    let spec = BenchSpec {
        generator,
        n_train: a.train,
        n_test: a.test,
        seed: a.opts.seed,
    };
    let table = run_benchmark(
        &spec,
        &[Method::Alm, Method::Ealm],
        &a.opts.alm_config(),
        &a.opts.ealm_config(),
        a.timing,
    )?;
    let csv_path = out_path(&a.csv)?;
    let mut w = stage_file(&csv_path)?;
    table.write_csv(&mut w)?;
    w.flush().map_err(EalmError::Io)?;
    print!("{}", table.to_text());
    println!("csv: {}", csv_path.display());
    Ok(())
}

fn cmd_export_plane(a: ExportPlaneArgs) -> CliResult {
    let ds = read_dataset_csv(&a.data)?;
    if a.input >= ds.n_inputs() {
        return Err(CliError::usage(format!(
            "--input {} out of range: dataset has {} input(s)",
            a.input,
            ds.n_inputs()
        )));
    }
    let dir = out_dir(&a.out_dir)?;
    let g = a.opts.grid_size;
    let spec = GridSpec::new(g, g, ds.input_range(a.input), ds.output_range())?;
    let raw = quantize(&ds, PlaneKind::InputOutput(a.input), spec)?;
    let i = a.input;
    write_pgm(&raw, &dir.join(format!("plane_x{i}_raw.pgm")))?;

    let params = IdsParams {
        radius: a.opts.ids_radius,
        ..IdsParams::default()
    };
    let spread = ids(&raw, &params);
    let mut w = stage_file(&dir.join(format!("plane_x{i}_spread.pgm")))?;
    write_plane_pgm(&spread, &mut w)?;
    w.flush().map_err(EalmError::Io)?;
    let mut w = stage_file(&dir.join(format!("plane_x{i}_path.csv")))?;
    write_path_csv(&cog_path(&spread), &mut w)?;
    w.flush().map_err(EalmError::Io)?;

    let (thick_chain, thin_chain) = fig14_chains();
    let thick = thicken(&raw, &thick_chain, a.opts.thicken_passes)?;
    write_pgm(&thick, &dir.join(format!("plane_x{i}_thickened.pgm")))?;
    let sk = thin_to_skeleton(&thick, &thin_chain, DEFAULT_MAX_PASSES)?;
    let pruned = prune(&sk.grid, a.opts.spur_length);
    write_pgm(&pruned, &dir.join(format!("plane_x{i}_skeleton.pgm")))?;

    println!("out_dir: {}", dir.display());
    Ok(())
}

fn cmd_structure_report(a: StructureReportArgs) -> CliResult {
    let generator = Generator::parse(&a.generator).map_err(|_| {
        CliError::usage(format!(
            "unknown generator `{}` (valid: {})",
            a.generator,
            GENERATOR_NAMES.join(", ")
        ))
    })?;
    let spec = BenchSpec {
        generator,
        n_train: a.train,
        n_test: 1,
        seed: a.opts.seed,
    };
    let params = IdsParams {
        radius: a.opts.ids_radius,
        ..IdsParams::default()
    };
    let report = structure_report(&spec, &a.opts.ealm_config(), &params)?;
    let dir = out_dir(&a.out_dir)?;
    report.write_pgms(&dir)?;

    let two_branch = report
        .skeleton_branches
        .iter()
        .filter(|&&b| b == 2)
        .count();
    let delegates = report.cog_branches.iter().filter(|&&b| b > 0).count();
    println!("columns: {}", report.skeleton_branches.len());
    println!("skeleton_two_branch_columns: {two_branch}");
    println!("cog_delegate_columns: {delegates}");
    println!("out_dir: {}", dir.display());
    Ok(())
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Alm => "alm",
        Method::Ealm => "ealm",
    }
}
