mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};

use sparsebound::ccrb::{self, oracle_mse_theoretical};
use sparsebound::estimators::EstimatorSpec;
use sparsebound::experiments::{self, log_grid, FigureConfig, FigureId, Point};
use sparsebound::hcrb;
use sparsebound::model::generate_gaussian_matrix;
use sparsebound::montecarlo;
use sparsebound::{rng, ProblemModel, SensingMatrix, SparseSignal};

use config::ConfigFile;

const DEFAULT_SEED: u64 = 1;
const SEED_ENV: &str = "SPARSEBOUND_SEED";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Math(sparsebound::Error),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Math(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Math(e) => write!(f, "{e}"),
        }
    }
}

impl From<sparsebound::Error> for CliError {
    fn from(e: sparsebound::Error) -> Self {
        if e.is_math_domain() {
            CliError::Math(e)
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

fn io_err(what: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", what.display()))
}

#[derive(Parser, Debug)]
#[command(
    name = "sparsebound",
    version,
    about = "Performance bounds for sparse estimation with a perturbed sensing matrix"
)]
struct Cli {
    /// Flat `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a bound for one instance.
    Bounds(BoundsArgs),
    /// Regenerate the data of a figure or table as CSV.
    Figure(FigureArgs),
    /// Monte Carlo MSE of estimators over a noise grid, next to the bounds.
    Simulate(SimulateArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BoundKind {
    Ccrb,
    Hcrb,
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long = "sigma-e")]
    sigma_e: Option<f64>,
    #[arg(long = "sigma-n")]
    sigma_n: Option<f64>,
    /// Signal as comma-separated values, or a file holding them.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// `identity`, `gaussian` (N(0, 1/m) from the seed) or a CSV file of m rows.
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    kind: BoundKind,
    #[command(flatten)]
    instance: InstanceArgs,
    /// Print a JSON object instead of CSV.
    #[arg(long)]
    json: bool,
    /// Write to this file (relative to --out-dir) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FigureArgs {
    /// fig3, fig4, fig5, fig6 (hcrb-sweep), fig7 (xq-sweep), fig-estimators, table1
    id: String,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long = "grid-points")]
    grid_points: Option<usize>,
    /// Comma-separated sparsities for the s sweeps.
    #[arg(long = "s-values")]
    s_values: Option<String>,
    /// Comma-separated σ_e values for fig7 and fig-estimators.
    #[arg(long = "sigma-e-values")]
    sigma_e_values: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SweepVar {
    SigmaN,
    SigmaE,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Noise parameter varied along the grid.
    #[arg(long, value_enum)]
    sweep: Option<SweepVar>,
    /// `lo:hi:points` (log spaced) or a comma-separated list.
    #[arg(long)]
    grid: Option<String>,
    /// Comma-separated: oracle, ml, locally_unbiased, noise_exploiting.
    #[arg(long)]
    estimators: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    /// File name inside --out-dir; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Bounds(a) => cmd_bounds(a, &file),
        Command::Figure(a) => cmd_figure(a, &file),
        Command::Simulate(a) => cmd_simulate(a, &file),
    }
}

fn resolve_seed(flag: Option<u64>, file: &ConfigFile) -> Result<u64, CliError> {
    if let Some(s) = file.pick(flag, "seed")? {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}: cannot parse '{v}'"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn required<T: std::str::FromStr>(file: &ConfigFile, flag: Option<T>, key: &str) -> Result<T, CliError> {
    file.pick(flag, key)?.ok_or_else(|| CliError::Usage(format!("missing --{key}")))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::Usage(format!("{what}: cannot parse '{t}'"))))
        .collect()
}

fn read_signal(spec: &str) -> Result<Vec<f64>, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        parse_list(&fs::read_to_string(path).map_err(io_err(path))?, "x")
    } else {
        parse_list(spec, "x")
    }
}

fn read_matrix(path: &Path, m: usize, n: usize) -> Result<DMatrix<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut data = Vec::with_capacity(m * n);
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        if rec.len() != n {
            return Err(CliError::Usage(format!("matrix row {} has {} entries, expected {n}", rows + 1, rec.len())));
        }
        for field in rec.iter() {
            data.push(field.parse::<f64>().map_err(|_| CliError::Usage(format!("matrix: cannot parse '{field}'")))?);
        }
        rows += 1;
    }
    if rows != m {
        return Err(CliError::Usage(format!("matrix has {rows} rows, expected {m}")));
    }
    Ok(DMatrix::from_row_slice(m, n, &data))
}

struct Instance {
    matrix: Arc<SensingMatrix>,
    signal: SparseSignal,
    sigma_e: f64,
    sigma_n: f64,
    s: usize,
    seed: u64,
}

impl Instance {
    fn model(&self) -> Result<ProblemModel, CliError> {
        Ok(ProblemModel::from_shared(self.matrix.clone(), self.sigma_e, self.sigma_n, self.s)?)
    }
}

/// `swept` names the noise parameter a sweep overrides, which may then be omitted.
fn resolve_instance(a: &InstanceArgs, file: &ConfigFile, swept: Option<SweepVar>) -> Result<Instance, CliError> {
    let n: usize = required(file, a.n, "n")?;
    let s: usize = required(file, a.s, "s")?;
    let sigma_e: f64 = match swept {
        Some(SweepVar::SigmaE) => file.pick_or(a.sigma_e, "sigma-e", 0.0)?,
        _ => required(file, a.sigma_e, "sigma-e")?,
    };
    let sigma_n: f64 = match swept {
        Some(SweepVar::SigmaN) => file.pick_or(a.sigma_n, "sigma-n", 0.0)?,
        _ => required(file, a.sigma_n, "sigma-n")?,
    };
    let matrix_kind: String = file.pick_or(a.matrix.clone(), "matrix", "identity".to_string())?;
    let m: usize = file.pick_or(a.m, "m", n)?;
    let seed = resolve_seed(a.seed, file)?;
    let x_spec: String = required(file, a.x.clone(), "x")?;
    let x = read_signal(&x_spec)?;
    if x.len() != n {
        return Err(CliError::Usage(format!("--x has {} entries, --n is {n}", x.len())));
    }
    let matrix = match matrix_kind.as_str() {
        "identity" => {
            if m != n {
                return Err(CliError::Usage(format!("identity matrix needs m = n, got m = {m}, n = {n}")));
            }
            SensingMatrix::Identity(n)
        }
        "gaussian" => SensingMatrix::Dense(generate_gaussian_matrix(m, n, &mut rng::stream(seed, 0))),
        path => SensingMatrix::Dense(read_matrix(Path::new(path), m, n)?),
    };
    let signal = SparseSignal::new(DVector::from_vec(x))?;
    Ok(Instance { matrix: Arc::new(matrix), signal, sigma_e, sigma_n, s, seed })
}

/// Seventeen significant digits, enough to round-trip an `f64`.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_output(out_dir: &Option<PathBuf>, out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match out {
        None => Ok(Box::new(io::stdout().lock())),
        Some(name) => {
            let path = match out_dir {
                Some(d) => d.join(name),
                None => name.clone(),
            };
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            Ok(Box::new(fs::File::create(&path).map_err(io_err(&path))?))
        }
    }
}

fn csv_io(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn cmd_bounds(a: BoundsArgs, file: &ConfigFile) -> Result<(), CliError> {
    let inst = resolve_instance(&a.instance, file, None)?;
    let model = inst.model()?;
    // HCRB: bound = first_term + correction; CCRB: bound = first_term − correction
    let (bound, first, correction, regime) = match a.kind {
        BoundKind::Ccrb => {
            let r = ccrb::ccrb(&model, &inst.signal)?;
            (r.bound, r.first_term, r.d_ccrb, r.regime.as_str())
        }
        BoundKind::Hcrb => {
            let r = hcrb::hcrb_unit_closed_form(&model, &inst.signal)?;
            (r.bound, r.support_part, r.nonsupport_part, "maximal")
        }
    };
    let gamma = if first > 0.0 { correction / first } else { 0.0 };
    let out_dir = file.pick(a.out_dir.clone(), "out-dir")?;
    let mut w = open_output(&out_dir, &a.out)?;
    if a.json {
        let obj = serde_json::json!({
            "bound": bound, "first_term": first, "correction": correction, "gamma": gamma, "regime": regime,
        });
        writeln!(w, "{obj}").map_err(|e| CliError::Io(e.to_string()))?;
    } else {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["bound", "first_term", "correction", "gamma", "regime"]).map_err(csv_io)?;
        csv.write_record([num(bound), num(first), num(correction), num(gamma), regime.to_string()]).map_err(csv_io)?;
        csv.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

fn cmd_figure(a: FigureArgs, file: &ConfigFile) -> Result<(), CliError> {
    let id: FigureId = a.id.parse()?;
    let defaults = FigureConfig::default();
    let s_values = file.pick(a.s_values.clone(), "s-values")?.map(|t| parse_list(&t, "s-values")).transpose()?;
    let sigma_e_values =
        file.pick(a.sigma_e_values.clone(), "sigma-e-values")?.map(|t| parse_list(&t, "sigma-e-values")).transpose()?;
    let cfg = FigureConfig {
        seed: resolve_seed(a.seed, file)?,
        trials: file.pick_or(a.trials, "trials", defaults.trials)?,
        instances: file.pick_or(a.instances, "instances", defaults.instances)?,
        grid_points: file.pick_or(a.grid_points, "grid-points", defaults.grid_points)?,
        s_values,
        sigma_e_values,
    };
    let out_dir: PathBuf = file.pick_or(a.out_dir.clone(), "out-dir", PathBuf::from("."))?;
    let points = experiments::run_figure(id, &cfg)?;
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let path = out_dir.join(format!("{id}.csv"));
    write_points(&path, &points)?;
    eprintln!("wrote {} points to {}", points.len(), path.display());
    Ok(())
}

fn write_points(path: &Path, points: &[Point]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["x_value", "curve_id", "value", "std_error"]).map_err(csv_io)?;
    for p in points {
        let se = p.std_error.map(num).unwrap_or_default();
        w.write_record([num(p.x_value), p.curve_id.clone(), num(p.value), se]).map_err(csv_io)?;
    }
    w.flush().map_err(io_err(path))
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let grid = if parts.len() == 3 {
        let lo: f64 = parts[0].parse().map_err(|_| CliError::Usage(format!("grid: bad '{}'", parts[0])))?;
        let hi: f64 = parts[1].parse().map_err(|_| CliError::Usage(format!("grid: bad '{}'", parts[1])))?;
        let k: usize = parts[2].parse().map_err(|_| CliError::Usage(format!("grid: bad '{}'", parts[2])))?;
        if !(lo > 0.0 && hi > 0.0) || k == 0 {
            return Err(CliError::Usage("log grid needs lo, hi > 0 and points >= 1".into()));
        }
        log_grid(lo, hi, k)
    } else {
        parse_list(text, "grid")?
    };
    if grid.is_empty() {
        return Err(CliError::Usage("grid is empty".into()));
    }
    Ok(grid)
}

fn parse_estimators(text: &str, signal: &SparseSignal, s: usize) -> Result<Vec<EstimatorSpec>, CliError> {
    parse_list::<String>(text, "estimators")?
        .into_iter()
        .map(|name| match name.as_str() {
            "oracle" => Ok(EstimatorSpec::Oracle { support: signal.support().to_vec() }),
            "ml" => Ok(EstimatorSpec::MaximumLikelihood { s }),
            "locally_unbiased" => Ok(EstimatorSpec::LocallyUnbiased { x0: signal.clone() }),
            "noise_exploiting" => Ok(EstimatorSpec::NoiseExploiting),
            other => Err(CliError::Usage(format!("unknown estimator '{other}'"))),
        })
        .collect()
}

fn cmd_simulate(a: SimulateArgs, file: &ConfigFile) -> Result<(), CliError> {
    let sweep: SweepVar = match file.pick::<String>(a.sweep.map(|v| sweep_name(v).to_string()), "sweep")? {
        None => SweepVar::SigmaN,
        Some(t) => SweepVar::from_str(&t.replace('_', "-"), true)
            .map_err(|_| CliError::Usage(format!("unknown sweep '{t}'")))?,
    };
    let inst = resolve_instance(&a.instance, file, Some(sweep))?;
    let grid = parse_grid(&file.pick_or(a.grid.clone(), "grid", "1e-3:10:25".to_string())?)?;
    let est_text: String = file.pick_or(a.estimators.clone(), "estimators", "oracle".to_string())?;
    let specs = parse_estimators(&est_text, &inst.signal, inst.s)?;
    let trials: usize = file.pick_or(a.trials, "trials", 10_000)?;

    let model_at = |v: f64| {
        let (se, sn) = match sweep {
            SweepVar::SigmaN => (inst.sigma_e, v),
            SweepVar::SigmaE => (v, inst.sigma_n),
        };
        ProblemModel::from_shared(inst.matrix.clone(), se, sn, inst.s)
    };
    let rows = montecarlo::sweep(&grid, model_at, |_| Ok(inst.signal.clone()), &specs, trials, inst.seed)?;

    let out_dir = file.pick(a.out_dir.clone(), "out-dir")?;
    let mut w = csv::Writer::from_writer(open_output(&out_dir, &a.out)?);
    w.write_record([
        sweep_name(sweep),
        "estimator",
        "mse",
        "std_error",
        "ccrb",
        "hcrb",
        "reference",
        "relative_gap",
        "biased_regime",
        "trials",
        "failed",
    ])
    .map_err(csv_io)?;
    for row in rows {
        let hcrb = row.hcrb.map(num).unwrap_or_default();
        let mut record = vec![num(row.x_value), row.estimator.unwrap_or("").to_string()];
        match &row.summary {
            None => record.extend([String::new(), String::new(), num(row.ccrb), hcrb, String::new(), String::new()]),
            Some(sum) => {
                // the oracle knows the support, so only the CCRB applies to it; its gap is
                // measured against its exact MSE
                let is_oracle = row.estimator == Some("oracle");
                let bound = if is_oracle { row.ccrb } else { row.hcrb.unwrap_or(row.ccrb) };
                let reference = if is_oracle {
                    oracle_mse_theoretical(&model_at(row.x_value)?, inst.signal.support(), &inst.signal)?
                } else {
                    bound
                };
                let gap = (sum.mse - reference) / reference;
                let biased = sum.mse + 3.0 * sum.std_error_mse < bound;
                record.extend([num(sum.mse), num(sum.std_error_mse), num(row.ccrb), hcrb, num(reference), num(gap)]);
                record.push(biased.to_string());
                record.push(sum.trials.to_string());
                record.push(sum.failed.to_string());
            }
        }
        record.resize(11, String::new());
        w.write_record(&record).map_err(csv_io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn sweep_name(v: SweepVar) -> &'static str {
    match v {
        SweepVar::SigmaN => "sigma_n",
        SweepVar::SigmaE => "sigma_e",
    }
}
