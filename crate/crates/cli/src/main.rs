use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use ivxboot::bootstrap::{bootstrap_distribution, bootstrap_pvalue, BootstrapScheme, Recenter, SchemeKind};
use ivxboot::dgp::{simulate_predictive_system, DgpSpec, InnovationSpec, PersistenceSpec};
use ivxboot::estimators::{fit, IvxParams, Method};
use ivxboot::harness::{config_digest, reference_kind, run_experiment};
use ivxboot::io::{self, Format, RunTiming};
use ivxboot::limitdist::{reference_distribution, ReferenceSpec, TABLE_LEVELS};
use ivxboot::rng::{StreamKey, StreamSource};
use ivxboot::statistics::{evaluate, StatKind, StatSpec, Tail};
use ivxboot::{Error, Result};

/// Predictive regression with nonstationary regressors: simulation, IVX
/// estimation, bootstrap tests and Monte Carlo experiments.
#[derive(Parser)]
#[command(name = "ivxboot", version)]
struct Cli {
    /// Worker threads (also IVXBOOT_THREADS); never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a (y, x) pair and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate the predictive slope from a CSV pair.
    Estimate(EstimateArgs),
    /// Bootstrap p-value for a test statistic on a CSV pair.
    BootTest(BootTestArgs),
    /// Run a Monte Carlo experiment config.
    Mc(McArgs),
    /// Quantile table of a limit functional.
    Limits(LimitsArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// DGP spec as JSON; overrides the flags below.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 250)]
    n: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Fixed autoregressive root; replaces c and gamma.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    sigma_uv: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    rho_u: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct IvxArgs {
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    c_z: f64,
    #[arg(long, default_value_t = 0.95)]
    gamma_z: f64,
}

impl IvxArgs {
    fn params(&self) -> Result<IvxParams> {
        IvxParams::new(self.c_z, self.gamma_z).map_err(|e| Error::config("c_z", e.to_string()))
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    ivx: IvxArgs,
}

#[derive(Args)]
struct BootTestArgs {
    #[arg(long)]
    input: PathBuf,
    /// Statistic kind name or JSON, e.g. `wald_ivx`.
    #[arg(long, default_value = "wald_ivx")]
    stat: String,
    /// Scheme kind name or JSON, e.g. `wild` or `{"kind":"residual_block","b":25}`.
    #[arg(long, default_value = "wild")]
    scheme: String,
    /// `null_imposed` or `estimate_centered`.
    #[arg(long, default_value = "null_imposed")]
    recenter: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    null_beta: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    null_rho: f64,
    /// `right`, `left` or `two_sided_abs`; the statistic's default otherwise.
    #[arg(long)]
    tail: Option<String>,
    #[arg(short = 'B', long = "B", default_value_t = 399)]
    b: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    ivx: IvxArgs,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct LimitsArgs {
    /// Functional: dfxi, dfratio, ou_ratio, psi_gamma, mixed_gaussian_ivx,
    /// explosive_cauchy, v_over_u, int_w2.
    #[arg(long)]
    kind: String,
    #[arg(long = "N", default_value_t = 2000)]
    n_steps: usize,
    #[arg(long = "M", default_value_t = 20000)]
    draws: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    c_z: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s.to_ascii_lowercase().as_str() {
        "ols" => Ok(Method::Ols),
        "ivx" => Ok(Method::Ivx),
        other => Err(format!("unknown method `{other}` (expected ols or ivx)")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let threads = cli.threads.or_else(|| std::env::var("IVXBOOT_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads.filter(|&t| t > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::BootTest(a) => boot_test(a),
        Command::Mc(a) => mc(a),
        Command::Limits(a) => limits(a),
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let spec: DgpSpec = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            io::parse_json("spec", &text)?
        }
        None => DgpSpec {
            beta: a.beta,
            persistence: match a.rho {
                Some(rho) => PersistenceSpec::Fixed { rho },
                None => PersistenceSpec::LocalToUnity { c: a.c, gamma: a.gamma },
            },
            innovations: InnovationSpec { error_ar: a.rho_u, ..InnovationSpec::correlated(a.sigma_uv) },
            n: a.n,
            x0: a.x0,
        },
    };
    spec.validate().map_err(|e| Error::config("spec", e.to_string()))?;
    let data = simulate_predictive_system(&spec, &mut StreamSource::new(StreamKey::root(a.seed)))?;
    emit(&io::pair_csv(&data), a.output.as_deref())
}

/// 12 significant digits with trailing zeros dropped.
fn short(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let data = io::read_pair_csv(&a.input)?;
    let f = fit(&data, a.method, &a.ivx.params()?)?;
    println!("{}", short(f.beta_hat));
    Ok(())
}

fn boot_test(a: BootTestArgs) -> Result<()> {
    let data = io::read_pair_csv(&a.input)?;
    let kind: StatKind = io::parse_tagged("stat", &a.stat)?;
    let scheme_kind: SchemeKind = io::parse_tagged("scheme", &a.scheme)?;
    let stat = StatSpec::new(kind).with_null_beta(a.null_beta).with_null_rho(a.null_rho).with_ivx(a.ivx.params()?);
    let tail: Tail = match &a.tail {
        Some(t) => io::parse_json("tail", &format!("\"{t}\""))?,
        None => kind.default_tail(),
    };
    let recenter = match a.recenter.as_str() {
        "null_imposed" => Recenter::NullImposed(stat.null()),
        "estimate_centered" => Recenter::EstimateCentered,
        other => return Err(Error::config("recenter", format!("unknown recentering `{other}`"))),
    };
    let observed = evaluate(&stat, &data)?;
    let scheme = BootstrapScheme::new(scheme_kind, recenter);
    let dist = bootstrap_distribution(&data, &stat, &scheme, a.b, StreamKey::root(a.seed))?;
    let p = bootstrap_pvalue(&dist, observed.statistic, tail);
    println!("statistic,estimate,pvalue,B,excluded");
    println!("{:?},{:?},{:?},{},{}", observed.statistic, observed.estimate, p, dist.len(), dist.excluded);
    Ok(())
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn mc(a: McArgs) -> Result<()> {
    let format: Format = a.format.parse()?;
    let cfg = io::parse_config(&a.config)?;
    let start = unix_now();
    let clock = Instant::now();
    let report = run_experiment(&cfg)?;
    io::write_report(&report, &a.output, format)?;
    let timing = RunTiming {
        config_digest: config_digest(&cfg),
        start,
        end: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    };
    io::write_timing(&timing, &a.output)?;
    eprintln!(
        "{}: {} rows, {} cells in {:.1}s -> {}",
        report.experiment,
        report.rows.len(),
        report.aggregates.len(),
        timing.wall_seconds,
        a.output.display()
    );
    Ok(())
}

fn limits(a: LimitsArgs) -> Result<()> {
    let kind = reference_kind(&a.kind, a.c, a.gamma, a.c_z, None, None).map_err(|m| Error::config("kind", m))?;
    let spec = ReferenceSpec { kind, n_steps: a.n_steps, draws: a.draws };
    spec.validate().map_err(|e| Error::config("N", e.to_string()))?;
    let dist = reference_distribution(&spec, StreamKey::root(a.seed))?;
    emit(&io::quantile_table(&dist, &TABLE_LEVELS), a.output.as_deref())
}
