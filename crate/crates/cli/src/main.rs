//! `csl-heat`: batch front end for the heating library.
//!
//! Every subcommand reads an experiment file, runs one analysis and writes a
//! JSON payload (or CSV with `--csv`) that carries the canonical hash of the
//! input file, the constants version and the quadrature settings.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid experiment file or
//! arguments, 3 computation failure, 4 infeasible design.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};

use csl_heat::analysis::{
    discriminability_report, fmt_f64, lambda_bound, optimize_layers, scan_rc, thermal_gain,
};
use csl_heat::constants::CONSTANTS_VERSION;
use csl_heat::error::{AnalysisError, HeatingError, SpecError};
use csl_heat::experiment::{canonical_hash, parse_spec, ExperimentSpec, MuTask};
use csl_heat::geometry::Wavevector;
use csl_heat::heating::heating_report;
use csl_heat::lattice::lattice_suite;

#[derive(Parser)]
#[command(name = "csl-heat", version, about = "CSL heating rates of solid test masses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Write the payload here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit tables as CSV.
    #[arg(long)]
    csv: bool,
    /// Override the experiment's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "CSL_MASSMODEL_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Normalized geometry factor on a straight k-line.
    Mu {
        #[command(flatten)]
        common: Common,
        /// Start of the k-line, `kx,ky,kz` [1/m].
        #[arg(long, value_parser = parse_k, allow_hyphen_values = true)]
        k_from: Option<[f64; 3]>,
        /// End of the k-line, `kx,ky,kz` [1/m].
        #[arg(long, value_parser = parse_k, allow_hyphen_values = true)]
        k_to: Option<[f64; 3]>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Total, centre-of-mass and internal heating rates.
    Heat {
        #[command(flatten)]
        common: Common,
        /// Also print an aligned summary table on stderr.
        #[arg(long)]
        table: bool,
    },
    /// Γ_cm / λ over a grid of correlation lengths.
    Scan {
        #[command(flatten)]
        common: Common,
    },
    /// Best layer count for a two-material stack at fixed mass.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Spread of Γ_cm across layered designs against thermal leakage.
    Discriminate {
        #[command(flatten)]
        common: Common,
    },
    /// Upper bound on λ from an observed heating power.
    Bound {
        #[command(flatten)]
        common: Common,
        /// Observed power [W]; overrides the experiment file.
        #[arg(long)]
        power: Option<f64>,
    },
    /// Lattice oracle suite.
    LatticeCheck {
        #[command(flatten)]
        common: Common,
    },
}

/// An error with the process exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn spec(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 2,
            error: error.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

impl From<HeatingError> for Failure {
    fn from(e: HeatingError) -> Self {
        Self {
            code: 3,
            error: e.into(),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let code = match e {
            AnalysisError::InfeasibleDesign(_) => 4,
            AnalysisError::ConstraintViolation(_) => 2,
            AnalysisError::Heating(_) => 3,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

/// Compact JSON with every float written to 17 significant digits.
struct Sci17;

impl serde_json::ser::Formatter for Sci17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

fn to_json(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sci17);
    value.serialize(&mut ser).expect("json value serializes");
    let mut s = String::from_utf8(buf).expect("json is utf-8");
    s.push('\n');
    s
}

struct Loaded {
    spec: ExperimentSpec,
    hash: String,
}

fn load(common: &Common) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(&common.spec)
        .with_context(|| format!("cannot read {}", common.spec.display()))
        .map_err(Failure::spec)?;
    let mut spec = parse_spec(&text).map_err(|e: SpecError| Failure::spec(e))?;
    let hash = canonical_hash(&text).map_err(Failure::spec)?;
    if let Some(seed) = common.seed {
        spec.quadrature.rng_seed = seed;
    }
    Ok(Loaded { spec, hash })
}

/// Payload skeleton shared by every subcommand.
fn envelope(command: &str, loaded: &Loaded) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), command.into());
    m.insert("spec_hash".into(), loaded.hash.clone().into());
    m.insert("constants_version".into(), CONSTANTS_VERSION.into());
    m.insert(
        "quadrature".into(),
        serde_json::to_value(loaded.spec.quadrature).expect("quadrature serializes"),
    );
    m
}

fn merge(payload: &mut Map<String, Value>, result: impl Serialize) {
    match serde_json::to_value(result).expect("result serializes") {
        Value::Object(fields) => payload.extend(fields),
        other => {
            payload.insert("result".into(), other);
        }
    }
}

/// CSV with the payload metadata as leading `#` comment lines.
fn csv_with_meta(meta: &Map<String, Value>, table: &str) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let v = match v {
            Value::String(s) => s.clone(),
            other => to_json(other).trim_end().to_string(),
        };
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(table);
    out
}

/// Writes the payload to `--out`, or hands it back for stdout.
fn deliver(common: &Common, text: String) -> Result<String, Failure> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn missing(block: &str) -> Failure {
    Failure::spec(anyhow!("experiment file has no `task.{block}` block"))
}

fn parse_k(s: &str) -> Result<[f64; 3], String> {
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|_| "expected kx,ky,kz".to_string())
}

fn cmd_mu(common: &Common, k_from: Option<[f64; 3]>, k_to: Option<[f64; 3]>, points: Option<usize>) -> Result<String, Failure> {
    let loaded = load(common)?;
    let base = loaded.spec.task.mu.clone();
    let task = MuTask {
        k_from: match k_from {
            Some(k) => k,
            None => base.as_ref().map(|t| t.k_from).ok_or_else(|| missing("mu"))?,
        },
        k_to: match k_to {
            Some(k) => k,
            None => base.as_ref().map(|t| t.k_to).ok_or_else(|| missing("mu"))?,
        },
        points: match points {
            Some(p) => p,
            None => base.as_ref().map(|t| t.points).ok_or_else(|| missing("mu"))?,
        },
    };
    if task.points == 0 || task.k_from.iter().chain(&task.k_to).any(|x| !x.is_finite()) {
        return Err(Failure::spec(anyhow!("k-grid needs finite endpoints and at least one point")));
    }
    let model = &loaded.spec.mass_model;
    let mass = model.total_mass();
    let rows: Vec<[f64; 6]> = (0..task.points)
        .map(|i| {
            let t = if task.points == 1 {
                0.0
            } else {
                i as f64 / (task.points - 1) as f64
            };
            let k: [f64; 3] = std::array::from_fn(|a| task.k_from[a] + t * (task.k_to[a] - task.k_from[a]));
            let mu = model.mu_tilde(Wavevector(k));
            [k[0], k[1], k[2], mu.re, mu.im, mu.norm() / mass]
        })
        .collect();
    let mut payload = envelope("mu", &loaded);
    payload.insert("total_mass".into(), mass.into());
    if common.csv {
        let mut table = String::from("kx,ky,kz,re,im,abs_norm\n");
        for r in &rows {
            let cells: Vec<String> = r.iter().map(|&v| fmt_f64(v)).collect();
            table.push_str(&cells.join(","));
            table.push('\n');
        }
        return Ok(csv_with_meta(&payload, &table));
    }
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "kx": r[0], "ky": r[1], "kz": r[2], "re": r[3], "im": r[4], "abs_norm": r[5]
            })
        })
        .collect();
    payload.insert("rows".into(), rows.into());
    Ok(to_json(&Value::Object(payload)))
}

fn cmd_heat(common: &Common, table: bool) -> Result<String, Failure> {
    let loaded = load(common)?;
    let spec = &loaded.spec;
    let report = heating_report(&spec.mass_model, &spec.csl, &spec.quadrature)?;
    let mut payload = envelope("heat", &loaded);
    payload.insert("model".into(), spec.mass_model.kind_name().into());
    payload.insert("total_mass".into(), spec.mass_model.total_mass().into());
    if let Some(thermal) = &spec.thermal {
        payload.insert("thermal_power".into(), thermal_gain(thermal).into());
    }
    if table {
        eprintln!("{:<20} {:>24}", "quantity", "value");
        for (name, value) in [
            ("gamma_total [W]", report.gamma_total),
            ("gamma_cm [W]", report.gamma_cm),
            ("gamma_int [W]", report.gamma_int),
            ("reduction_factor", report.reduction_factor),
            ("estimate_error", report.quadrature_estimate_error),
        ] {
            eprintln!("{name:<20} {value:>24.10e}");
        }
        if report.internal_clamped {
            eprintln!("gamma_int was clamped to zero");
        }
    }
    merge(&mut payload, report);
    Ok(to_json(&Value::Object(payload)))
}

fn cmd_scan(common: &Common) -> Result<String, Failure> {
    let loaded = load(common)?;
    let spec = &loaded.spec;
    let task = spec.task.scan.as_ref().ok_or_else(|| missing("scan"))?;
    let mut table = scan_rc(&spec.mass_model, &task.rc_grid.values(), &spec.quadrature, task.observed_power)?;
    table.spec_hash = Some(loaded.hash.clone());
    let mut payload = envelope("scan", &loaded);
    if common.csv {
        return Ok(csv_with_meta(&payload, &table.to_csv()));
    }
    let maxima: Vec<f64> = table.interior_maxima().iter().map(|&i| table.rows[i].r_c).collect();
    merge(&mut payload, &table);
    payload.insert("interior_maxima_r_c".into(), maxima.into());
    Ok(to_json(&Value::Object(payload)))
}

fn cmd_optimize(common: &Common) -> Result<String, Failure> {
    let loaded = load(common)?;
    let spec = &loaded.spec;
    let task = spec.task.optimize.as_ref().ok_or_else(|| missing("optimize"))?;
    let result = optimize_layers(&task.family, task.n_layers_min..=task.n_layers_max, &spec.csl, &spec.quadrature)?;
    let mut payload = envelope("optimize", &loaded);
    if common.csv {
        let mut table = String::from("n_layers,mean_layer_thickness,gamma_cm,reduction_factor\n");
        for c in &result.candidates {
            table.push_str(&format!(
                "{},{},{},{}\n",
                c.n_layers,
                fmt_f64(c.mean_layer_thickness),
                fmt_f64(c.gamma_cm),
                fmt_f64(c.reduction_factor)
            ));
        }
        return Ok(csv_with_meta(&payload, &table));
    }
    payload.insert("best_mean_layer_thickness".into(), result.best.mean_layer_thickness().into());
    payload.insert("best_layer_thicknesses".into(), result.best.layer_thicknesses().into());
    merge(&mut payload, &result);
    Ok(to_json(&Value::Object(payload)))
}

fn cmd_discriminate(common: &Common) -> Result<String, Failure> {
    let loaded = load(common)?;
    let spec = &loaded.spec;
    let task = spec.task.discriminate.as_ref().ok_or_else(|| missing("discriminate"))?;
    let thermal = spec
        .thermal
        .as_ref()
        .ok_or_else(|| Failure::spec(anyhow!("discriminate needs a `thermal` block")))?;
    let designs = task
        .layer_counts
        .iter()
        .map(|&n| task.family.design(n))
        .collect::<Result<Vec<_>, _>>()?;
    let report = discriminability_report(&designs, &spec.csl, thermal, &spec.quadrature, task.threshold)?;
    let mut payload = envelope("discriminate", &loaded);
    if common.csv {
        let mut table = String::from("n_layers,mean_layer_thickness,gamma_cm,saturation_power\n");
        for d in &report.designs {
            table.push_str(&format!(
                "{},{},{},{}\n",
                d.n_layers,
                fmt_f64(d.mean_layer_thickness),
                fmt_f64(d.gamma_cm),
                fmt_f64(d.saturation_power)
            ));
        }
        payload.insert("spread".into(), report.spread.into());
        payload.insert("discriminating".into(), report.discriminating.into());
        return Ok(csv_with_meta(&payload, &table));
    }
    merge(&mut payload, &report);
    Ok(to_json(&Value::Object(payload)))
}

fn cmd_bound(common: &Common, power: Option<f64>) -> Result<String, Failure> {
    let loaded = load(common)?;
    let spec = &loaded.spec;
    let power = match power {
        Some(p) => p,
        None => spec.task.bound.as_ref().ok_or_else(|| missing("bound"))?.observed_power,
    };
    let bound = lambda_bound(power, &spec.mass_model, spec.csl.r_c, &spec.quadrature)?;
    let mut payload = envelope("bound", &loaded);
    payload.insert("observed_power".into(), power.into());
    payload.insert("r_c".into(), spec.csl.r_c.into());
    merge(&mut payload, bound);
    Ok(to_json(&Value::Object(payload)))
}

fn cmd_lattice_check(common: &Common) -> Result<String, Failure> {
    let loaded = load(common)?;
    let task = loaded.spec.task.lattice_check.unwrap_or_default();
    let seed = common.seed.unwrap_or(task.seed);
    let report = lattice_suite(task.random_lattices, task.sites_per_lattice, seed);
    let mut payload = envelope("lattice-check", &loaded);
    payload.insert("seed".into(), seed.into());
    merge(&mut payload, &report);
    Ok(to_json(&Value::Object(payload)))
}

fn dispatch(command: Command) -> Result<String, Failure> {
    match command {
        Command::Mu {
            common,
            k_from,
            k_to,
            points,
        } => cmd_mu(&common, k_from, k_to, points),
        Command::Heat { common, table } => cmd_heat(&common, table),
        Command::Scan { common } => cmd_scan(&common),
        Command::Optimize { common } => cmd_optimize(&common),
        Command::Discriminate { common } => cmd_discriminate(&common),
        Command::Bound { common, power } => cmd_bound(&common, power),
        Command::LatticeCheck { common } => cmd_lattice_check(&common),
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    let common = match &cli.command {
        Command::Mu { common, .. }
        | Command::Heat { common, .. }
        | Command::Scan { common }
        | Command::Optimize { common }
        | Command::Discriminate { common }
        | Command::Bound { common, .. }
        | Command::LatticeCheck { common } => common.clone(),
    };
    let text = match common.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot configure the thread pool")?
            .install(|| dispatch(cli.command))?,
        None => dispatch(cli.command)?,
    };
    deliver(&common, text)
}

/// Result of one invocation: exit code and the text bound for stdout and
/// stderr.
struct Execution {
    code: u8,
    stdout: String,
    stderr: String,
}

fn execute<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code() as u8;
            return if e.use_stderr() {
                Execution { code, stdout: String::new(), stderr: text }
            } else {
                Execution { code, stdout: text, stderr: String::new() }
            };
        }
    };
    match run(cli) {
        Ok(stdout) => Execution { code: 0, stdout, stderr: String::new() },
        Err(f) => Execution {
            code: f.code,
            stdout: String::new(),
            stderr: format!("error: {:#}\n", f.error),
        },
    }
}

fn main() -> ExitCode {
    let ex = execute(std::env::args_os());
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(ex.stdout.as_bytes()).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(1);
    }
    eprint!("{}", ex.stderr);
    ExitCode::from(ex.code)
}
