//! `multiwall`: predict, fit, map and check indoor multiwall path loss.
//!
//! Exit codes: 0 success, 2 usage or input error, 1 internal failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use multiwall::calibration::{fit_joint, fit_log_distance, fit_wall_loss, FitResult};
use multiwall::coverage::{export_csv, export_pgm, generate_grid, generate_grid_with_workers, GridSpec, Quantity};
use multiwall::dataio::{
    bundled, load_distance_points, load_measurements, load_params, load_plan, load_wall_samples, params_to_json,
};
use multiwall::evaluation::compare;
use multiwall::floorplan::Point2D;
use multiwall::pathloss::{predict_link, predict_rss, Model, ModelParams, REFERENCE_TX_POWER_DBM};
use multiwall::FloorPlan;

#[derive(Parser, Debug)]
#[command(name = "multiwall", version, about = "Indoor multiwall path-loss toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Path-loss breakdown for one transmitter-receiver link
    Predict(PredictArgs),
    /// Fit model parameters by least squares
    #[command(subcommand)]
    Fit(FitCommand),
    /// Path-loss or RSS raster around a transmitter (writes BASE.csv and BASE.pgm)
    Coverage(CoverageArgs),
    /// Compare model predictions against measurements
    Compare(CompareArgs),
    /// Print a bundled dataset to stdout
    Bundled {
        /// One of: table1, demo-plan, reference-params, table1-links
        name: String,
    },
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Floor-plan JSON file
    #[arg(long)]
    plan: PathBuf,
    /// Model parameter JSON file ({pl0_db, n, pl_w_db})
    #[arg(long)]
    params: PathBuf,
    /// one_slope, cost231 or simplified
    #[arg(long, value_parser = parse_model)]
    model: Model,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Transmitter position X,Y in meters
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    tx: Point2D,
    /// Receiver position X,Y in meters
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    rx: Point2D,
    /// Transmit power; enables the RSS line
    #[arg(long, allow_hyphen_values = true)]
    tx_power: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum FitCommand {
    /// Per-wall loss from a `m_walls,loss_db[,std_db][,distance_m]` CSV
    Walls {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: FitOutput,
    },
    /// pl0 and n from a `distance_m,pl_db` CSV
    Logdist {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: FitOutput,
    },
    /// pl0, n and pl_w from located measurements over a floor plan
    Joint {
        /// Measurement CSV (tx_x,tx_y,rx_x,rx_y and pl_db or rss_dbm+tx_power_dbm)
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        out: FitOutput,
    },
}

#[derive(Args, Debug)]
struct FitOutput {
    /// Write the fitted parameters as a params JSON file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Params file supplying the fields this fit does not estimate
    #[arg(long)]
    base: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CoverageArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Transmitter position X,Y in meters
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    tx: Point2D,
    /// Bounding box x0,y0,x1,y1 in meters
    #[arg(long, allow_hyphen_values = true)]
    bbox: String,
    /// Cell size in meters
    #[arg(long)]
    res: f64,
    /// pl (path loss, dB) or rss (dBm)
    #[arg(long, default_value = "pl", value_parser = parse_quantity)]
    quantity: Quantity,
    /// Transmit power for rss rasters [default: 20]
    #[arg(long, allow_hyphen_values = true)]
    tx_power: Option<f64>,
    /// Value mapped to black in the PGM
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    /// Value mapped to white in the PGM
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Output path prefix
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Measurement CSV (tx_x,tx_y,rx_x,rx_y and pl_db or rss_dbm+tx_power_dbm)
    #[arg(long)]
    measurements: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Write the per-point report as CSV
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add a generation timestamp to the report headers
    #[arg(long)]
    stamp: bool,
}

#[derive(Debug)]
enum CliError {
    /// Bad flags, unreadable or invalid inputs, unfittable data.
    Input(String),
    /// Anything else, e.g. failing to write an output file.
    Internal(String),
}

type CliResult<T> = Result<T, CliError>;

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{context}: {e}"))
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse().map_err(|e: multiwall::PathLossError| e.to_string())
}

fn parse_quantity(s: &str) -> Result<Quantity, String> {
    s.parse().map_err(|e: multiwall::CoverageError| e.to_string())
}

fn parse_numbers(s: &str, expected: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != expected {
        return Err(format!("expected {expected} comma-separated numbers, got `{s}`"));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("not a finite number: `{p}`"))
        })
        .collect()
}

fn parse_point(s: &str) -> Result<Point2D, String> {
    let v = parse_numbers(s, 2)?;
    Ok(Point2D::new(v[0], v[1]))
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(input(path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn load_inputs(args: &ModelArgs) -> CliResult<(FloorPlan, ModelParams)> {
    let plan = load_plan(&read(&args.plan)?).map_err(input(args.plan.display()))?;
    let params = load_params(&read(&args.params)?).map_err(input(args.params.display()))?;
    Ok((plan, params))
}

fn warn(lines: &[String]) {
    for w in lines {
        eprintln!("warning: {w}");
    }
}

fn cmd_predict(args: &PredictArgs) -> CliResult<String> {
    let (plan, params) = load_inputs(&args.model)?;
    let pred = predict_link(&plan, args.tx, args.rx, &params, args.model.model).map_err(input("predict"))?;
    warn(&pred.warnings);
    let b = &pred.breakdown;
    let mut out = String::new();
    let _ = writeln!(out, "model = {}", b.model);
    let _ = writeln!(out, "distance_m = {:.2}", pred.link.distance_m);
    let _ = writeln!(out, "m_walls = {}", pred.link.m_walls);
    for (id, (count, loss)) in pred.link.per_category.iter().flatten() {
        let _ = writeln!(out, "walls[{id}] = {count} x {loss:.2} dB");
    }
    let _ = writeln!(out, "pl0_term_db = {:.2}", b.free_space_term_db);
    let _ = writeln!(out, "distance_term_db = {:.2}", b.distance_term_db);
    let _ = writeln!(out, "wall_term_db = {:.2}", b.wall_term_db);
    let _ = writeln!(out, "total_db = {:.2}", b.total_db);
    if let Some(p) = args.tx_power {
        let _ = writeln!(out, "tx_power_dbm = {p:.2}");
        let _ = writeln!(out, "rss_dbm = {:.2}", predict_rss(p, b.total_db));
    }
    Ok(out)
}

fn render_fit(kind: &str, fit: &FitResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "fit = {kind}");
    let _ = writeln!(out, "points = {}", fit.n_points);
    for c in &fit.coefficients {
        let _ = writeln!(out, "{} = {:.2}", c.name, c.value);
        if let Some(se) = c.std_error {
            let _ = writeln!(out, "{}_std_error = {:.2}", c.name, se);
        }
    }
    let _ = writeln!(out, "rmse_db = {:.2}", fit.rmse_db);
    for (i, r) in fit.residuals_db.iter().enumerate() {
        let _ = writeln!(out, "residual[{i}] = {r:.2}");
    }
    out
}

fn cmd_fit(cmd: &FitCommand) -> CliResult<String> {
    let (kind, fit, out) = match cmd {
        FitCommand::Walls { input: path, out } => {
            let samples = load_wall_samples(&read(path)?).map_err(input(path.display()))?;
            ("walls", fit_wall_loss(&samples).map_err(input("fit walls"))?, out)
        }
        FitCommand::Logdist { input: path, out } => {
            let points = load_distance_points(&read(path)?).map_err(input(path.display()))?;
            ("logdist", fit_log_distance(&points).map_err(input("fit logdist"))?, out)
        }
        FitCommand::Joint { measurements, plan, out } => {
            let meas = load_measurements(&read(measurements)?).map_err(input(measurements.display()))?;
            let plan_data = load_plan(&read(plan)?).map_err(input(plan.display()))?;
            ("joint", fit_joint(&meas, &plan_data).map_err(input("fit joint"))?, out)
        }
    };
    let mut text = render_fit(kind, &fit);
    if let Some(path) = &out.out {
        let base = match &out.base {
            Some(b) => load_params(&read(b)?).map_err(input(b.display()))?,
            None => ModelParams::reference(),
        };
        write(path, params_to_json(&fit.merged_into(base)).as_bytes())?;
        let _ = writeln!(text, "wrote {}", path.display());
    }
    Ok(text)
}

fn with_suffix(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_coverage(args: &CoverageArgs) -> CliResult<String> {
    let (plan, params) = load_inputs(&args.model)?;
    let bbox = parse_numbers(&args.bbox, 4).map_err(input("--bbox"))?;
    let spec = GridSpec::new(bbox[0], bbox[1], bbox[2], bbox[3], args.res).map_err(input("grid"))?;
    let (lo_default, hi_default) = args.quantity.default_bounds();
    let (lo, hi) = (args.lo.unwrap_or(lo_default), args.hi.unwrap_or(hi_default));
    if !(hi > lo) {
        return Err(CliError::Input(format!("--hi ({hi}) must exceed --lo ({lo})")));
    }
    let power = args.tx_power.unwrap_or(REFERENCE_TX_POWER_DBM);
    let model = args.model.model;
    let grid = match args.workers {
        Some(w) => generate_grid_with_workers(&plan, args.tx, &params, model, spec, args.quantity, power, w),
        None => generate_grid(&plan, args.tx, &params, model, spec, args.quantity, power),
    }
    .map_err(input("coverage"))?;
    let pgm = export_pgm(&grid, lo, hi).map_err(input("pgm"))?;

    let (csv_path, pgm_path) = (with_suffix(&args.out, "csv"), with_suffix(&args.out, "pgm"));
    write(&csv_path, export_csv(&grid).as_bytes())?;
    write(&pgm_path, &pgm)?;

    let (min, max) = grid
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut out = String::new();
    let _ = writeln!(out, "quantity = {}", grid.quantity.as_str());
    let _ = writeln!(out, "cells = {} x {}", grid.n_cols, grid.n_rows);
    let _ = writeln!(out, "min = {min:.2}");
    let _ = writeln!(out, "max = {max:.2}");
    let _ = writeln!(out, "wrote {}", csv_path.display());
    let _ = writeln!(out, "wrote {}", pgm_path.display());
    Ok(out)
}

fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn cmd_compare(args: &CompareArgs) -> CliResult<String> {
    let meas = load_measurements(&read(&args.measurements)?).map_err(input(args.measurements.display()))?;
    let (plan, params) = load_inputs(&args.model)?;
    let report = compare(&meas, &plan, &params, args.model.model).map_err(input("compare"))?;
    let stamp = args.stamp.then(unix_time);
    let mut out = String::new();
    if let Some(t) = stamp {
        let _ = writeln!(out, "generated_at_unix = {t}");
    }
    out.push_str(&report.to_table());
    if let Some(path) = &args.out {
        let mut csv = String::new();
        if let Some(t) = stamp {
            let _ = writeln!(csv, "# generated_at_unix: {t}");
        }
        csv.push_str(&report.to_csv());
        write(path, csv.as_bytes())?;
        let _ = writeln!(out, "wrote {}", path.display());
    }
    Ok(out)
}

fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Predict(a) => cmd_predict(a),
        Command::Fit(f) => cmd_fit(f),
        Command::Coverage(a) => cmd_coverage(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Bundled { name } => bundled::get(name).map(str::to_owned).ok_or_else(|| {
            let names: Vec<&str> = bundled::NAMES.iter().map(|(n, _)| *n).collect();
            CliError::Input(format!("unknown dataset `{name}` (available: {})", names.join(", ")))
        }),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
