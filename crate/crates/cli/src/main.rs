//! `scanlaw` command-line front end.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use scanlaw::cgf::{self, Case, CaseReport, PsiGrid, PsiProfile};
use scanlaw::limits::{self, PValueScale};
use scanlaw::mc::{self, WindowPolicy};
use scanlaw::pickands::{self, HStarEstimate, SpitzerMode, TiltedWalkSpec};
use scanlaw::scan;
use scanlaw::tails::{self, CramerForm};
use scanlaw::DistributionSpec;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "scanlaw", version, about = "Limit laws and simulations for the multiscale scan statistic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide the regime of a distribution from its cgf profile
    Classify(ClassifyArgs),
    /// Regime constants, duality residuals, optimal lengths and the limit law
    Constants(ConstantsArgs),
    /// Rate function I(s) and the Cramer series
    Rate(RateArgs),
    /// Tail approximations and bounds for P[S_k / sqrt k > x]
    Tail(TailArgs),
    /// Estimate the Pickands-type constant of the logarithmic case
    Pickands(PickandsArgs),
    /// Scan statistic of observed data
    Scan(ScanArgs),
    /// Monte Carlo replicates of M_n compared with the limit law
    Simulate(SimulateArgs),
    /// Asymptotic p-value of an observed maximum
    Pvalue(PvalueArgs),
    /// Hitting times of a level, simulated and in the limit
    Hitting(HittingArgs),
}

#[derive(Args, Serialize)]
struct Common {
    /// Distribution as JSON, e.g. '{"family":"bernoulli","params":{"p":0.3}}'
    #[arg(long, conflicts_with = "dist_file")]
    #[serde(skip)]
    dist: Option<String>,
    /// File holding the distribution JSON
    #[arg(long)]
    #[serde(skip)]
    dist_file: Option<PathBuf>,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it
    #[arg(long, env = "SCANLAW_THREADS")]
    #[serde(skip)]
    threads: Option<usize>,
}

#[derive(Args, Serialize)]
struct ClassifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Number of grid points for the psi profile
    #[arg(long, default_value_t = 4096)]
    grid_points: usize,
    /// Largest t examined when the cgf is finite everywhere
    #[arg(long, default_value_t = 50.0)]
    t_cap: f64,
    /// Write the psi profile (t, psi) as CSV
    #[arg(long)]
    #[serde(skip)]
    plot: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ConstantsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Sample size for the limit law and optimal lengths
    #[arg(long)]
    n: Option<u64>,
    /// Pickands constant to use instead of estimating it
    #[arg(long)]
    hstar: Option<f64>,
    /// Write the scale intensity (a, intensity) as CSV
    #[arg(long)]
    #[serde(skip)]
    plot: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct RateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Points at which to evaluate I, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    s: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TailMethod {
    Cramer,
    CramerSeries,
    BahadurRao,
    Chernoff,
    Exact,
    All,
}

#[derive(Args, Serialize)]
struct TailArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    k: u64,
    #[arg(long)]
    x: f64,
    #[arg(long, value_enum, default_value = "all")]
    method: TailMethod,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum HStarChoice {
    Direct,
    Spitzer,
    Both,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SpitzerChoice {
    Exact,
    Mc,
    Auto,
}

#[derive(Args, Serialize)]
struct PickandsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "both")]
    method: HStarChoice,
    /// Truncation of the Spitzer series
    #[arg(long = "K", default_value_t = pickands::DEFAULT_K)]
    #[serde(rename = "K")]
    k: usize,
    #[arg(long, default_value_t = pickands::DEFAULT_REPS)]
    reps: usize,
    /// Walk lengths for the direct estimator, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = pickands::DEFAULT_SCHEDULE)]
    schedule: Vec<u64>,
    #[arg(long, value_enum, default_value = "auto")]
    spitzer_mode: SpitzerChoice,
    /// Largest admissible truncation error of the Spitzer product
    #[arg(long, default_value_t = 1e-8)]
    precision: f64,
    /// Tilt to use instead of t_*
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args, Serialize)]
struct ScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// One-column CSV or one number per line
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1)]
    h1: usize,
    /// Longest window; defaults to the series length
    #[arg(long)]
    h2: Option<usize>,
    /// Also scan the negated series
    #[arg(long)]
    two_sided: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum WindowChoice {
    Full,
    Theory,
    Explicit,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, value_enum, default_value = "theory")]
    window: WindowChoice,
    #[arg(long)]
    h1: Option<usize>,
    #[arg(long)]
    h2: Option<usize>,
    #[arg(long)]
    hstar: Option<f64>,
    /// Include the rescaled argmax-length profile
    #[arg(long)]
    profile: bool,
    /// Write replicate values and argmax lengths as CSV
    #[arg(long)]
    #[serde(skip)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ScaleChoice {
    Squared,
    Linear,
}

#[derive(Args, Serialize)]
struct PvalueArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    n: u64,
    /// Observed value of M_n
    #[arg(long)]
    m: f64,
    #[arg(long, value_enum, default_value = "squared")]
    scale: ScaleChoice,
    #[arg(long)]
    hstar: Option<f64>,
}

#[derive(Args, Serialize)]
struct HittingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Level
    #[arg(long)]
    u: f64,
    /// Number of simulated walks; 0 reports the limit only
    #[arg(long, default_value_t = 0)]
    reps: usize,
    #[arg(long, default_value_t = 1_000_000)]
    n_cap: u64,
    #[arg(long)]
    window_cap: Option<u64>,
    /// Evaluate the limit survival P[c(u) T(u) > y]
    #[arg(long, default_value_t = 1.0)]
    y: f64,
    #[arg(long)]
    hstar: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Lib(scanlaw::Error),
    Io(String),
}

impl From<scanlaw::Error> for Failure {
    fn from(e: scanlaw::Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn code(&self) -> &'static str {
        match self {
            Failure::Lib(e) => e.code(),
            Failure::Io(_) => "io",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Io(m) => m.clone(),
        }
    }
}

type Outcome = Result<Value, Failure>;

fn load_dist(c: &Common) -> Result<DistributionSpec, Failure> {
    let text = match (&c.dist, &c.dist_file) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => fs::read_to_string(p)?,
        (None, None) => {
            return Err(scanlaw::Error::Argument("pass --dist or --dist-file".into()).into())
        }
    };
    Ok(DistributionSpec::from_json(&text)?)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Classify and, in the logarithmic case, attach a Pickands constant.
fn resolve_case(
    dist: &DistributionSpec,
    hstar: Option<f64>,
    seed: u64,
) -> Result<(CaseReport, Option<HStarEstimate>), Failure> {
    let mut case = cgf::classify(dist, &PsiGrid::default())?;
    let mut estimate = None;
    if let Case::Logarithmic(c) = &case.case {
        let h = match hstar {
            Some(h) => h,
            None => {
                let tw = TiltedWalkSpec::tilt(dist, c.t_star)?;
                let e = pickands::estimate_hstar(&tw, seed)?;
                let v = e.value;
                estimate = Some(e);
                v
            }
        };
        case.case = Case::Logarithmic(c.with_hstar(h));
    }
    Ok((case, estimate))
}

fn write_csv(path: &PathBuf, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::Io(e.to_string()))?;
    w.write_record(header).map_err(|e| Failure::Io(e.to_string()))?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:?}")))
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn classify(a: &ClassifyArgs, dist: &DistributionSpec) -> Outcome {
    let grid = PsiGrid {
        points: a.grid_points,
        t_cap: a.t_cap,
        ..PsiGrid::default()
    };
    let case = cgf::classify(dist, &grid)?;
    if let Some(path) = &a.plot {
        let profile = PsiProfile::new(dist, &grid)?;
        let rows = profile.ts.iter().zip(&profile.psis).map(|(t, p)| vec![*t, *p]);
        write_csv(path, &["t", "psi"], rows)?;
    }
    Ok(to_value(&case))
}

fn constants(a: &ConstantsArgs, dist: &DistributionSpec) -> Outcome {
    let (case, estimate) = resolve_case(dist, a.hstar, a.common.seed)?;
    let mut out = json!({ "case": to_value(&case) });
    if let Some(e) = estimate {
        out["hstar_estimate"] = to_value(&e);
    }
    match &case.case {
        Case::Superlogarithmic(_) => {
            out["qkappa"] = to_value(&cgf::extract_qkappa(dist)?);
        }
        Case::Logarithmic(_) => {
            out["duality"] = to_value(&cgf::duality_report(dist, &case)?);
        }
        _ => {}
    }
    if let Some(n) = a.n {
        out["optimal_length"] = to_value(&limits::optimal_length(&case, n)?);
        if let Ok(law) = limits::gumbel_law(&case, n) {
            out["limit_law"] = to_value(&law);
        }
    }
    if let Some(path) = &a.plot {
        let (lo, hi) = match &case.case {
            Case::Superlogarithmic(c) => (c.a_star / 20.0, c.a_star * 20.0),
            Case::Logarithmic(c) => (-4.0 / c.beta_star, 4.0 / c.beta_star),
            _ => {
                return Err(scanlaw::Error::Capability(format!(
                    "no scale intensity for the {} case",
                    case.case.tag()
                ))
                .into())
            }
        };
        let rows = (0..=400).map(|k| {
            let x = lo + (hi - lo) * k as f64 / 400.0;
            vec![x, limits::intensity(&case, x).unwrap_or(0.0)]
        });
        write_csv(path, &["a", "intensity"], rows)?;
    }
    Ok(out)
}

fn rate(a: &RateArgs, dist: &DistributionSpec) -> Outcome {
    let mut rows = Vec::with_capacity(a.s.len());
    for &s in &a.s {
        let r = cgf::rate(dist, s)?;
        let lambda = if s > 0.0 {
            Some(cgf::cramer_lambda(dist, s)?)
        } else {
            None
        };
        let mut v = to_value(&r);
        v["cramer_lambda"] = to_value(&lambda);
        rows.push(v);
    }
    Ok(Value::Array(rows))
}

fn tail(a: &TailArgs, dist: &DistributionSpec) -> Outcome {
    let all = matches!(a.method, TailMethod::All);
    let mut out = json!({ "k": a.k, "x": a.x });
    let pick = |m: TailMethod| all || std::mem::discriminant(&m) == std::mem::discriminant(&a.method);
    let soft = |r: scanlaw::Result<Value>| -> Outcome {
        match r {
            Ok(v) => Ok(v),
            Err(e) if all => Ok(json!({ "error": { "code": e.code(), "message": e.to_string() } })),
            Err(e) => Err(e.into()),
        }
    };
    if pick(TailMethod::Cramer) {
        out["cramer"] = soft(tails::cramer_tail(dist, a.k, a.x, CramerForm::Mills).map(|t| to_value(&t)))?;
    }
    if pick(TailMethod::CramerSeries) {
        out["cramer_series"] = soft(tails::cramer_tail(dist, a.k, a.x, CramerForm::Series).map(|t| to_value(&t)))?;
    }
    if pick(TailMethod::BahadurRao) {
        out["bahadur_rao"] = soft(tails::bahadur_rao_tail(dist, a.k, a.x).map(|v| json!(v)))?;
    }
    if pick(TailMethod::Chernoff) {
        out["chernoff"] = soft(tails::chernoff_bound(dist, a.k, a.x).map(|v| json!(v)))?;
    }
    if pick(TailMethod::Exact) {
        out["exact"] = soft(tails::exact_tail(dist, a.k, a.x, true).map(|v| json!(v)))?;
    }
    Ok(out)
}

fn pickands_cmd(a: &PickandsArgs, dist: &DistributionSpec) -> Outcome {
    let t = match a.t {
        Some(t) => t,
        None => match cgf::find_tstar(dist, &PsiGrid::default())? {
            Some((t, _)) => t,
            None => {
                return Err(scanlaw::Error::Capability(
                    "the distribution has no interior maximum of psi; pass --t".into(),
                )
                .into())
            }
        },
    };
    let tw = TiltedWalkSpec::tilt(dist, t)?;
    let mut out = json!({ "t": t, "tilt_warnings": tw.warnings.clone() });
    let direct = match a.method {
        HStarChoice::Direct | HStarChoice::Both => Some(pickands::hstar_direct(&tw, &a.schedule, a.reps, a.common.seed)?),
        HStarChoice::Spitzer => None,
    };
    let spitzer = match a.method {
        HStarChoice::Spitzer | HStarChoice::Both => {
            let mode = match a.spitzer_mode {
                SpitzerChoice::Exact => SpitzerMode::Exact,
                SpitzerChoice::Mc => SpitzerMode::MonteCarlo { reps: a.reps },
                SpitzerChoice::Auto => SpitzerMode::Auto { reps: a.reps },
            };
            Some(pickands::hstar_spitzer(&tw, a.k, mode, a.common.seed, a.precision)?)
        }
        HStarChoice::Direct => None,
    };
    if let (Some(d), Some(s)) = (&direct, &spitzer) {
        out["reconciliation"] = to_value(&pickands::reconcile(d, s));
    }
    out["direct"] = to_value(&direct);
    out["spitzer"] = to_value(&spitzer);
    Ok(out)
}

fn scan_cmd(a: &ScanArgs) -> Outcome {
    let text = fs::read_to_string(&a.data)?;
    let data = scan::parse_series(&text)?;
    let h2 = a.h2.unwrap_or(data.len());
    if a.two_sided {
        let (plus, minus) = scan::scan_two_sided(&data, a.h1, h2)?;
        Ok(json!({
            "n": data.len(),
            "plus": to_value(&plus),
            "minus": to_value(&minus),
            "abs_value": plus.value.max(minus.value),
        }))
    } else {
        let mut v = to_value(&scan::scan_restricted(&data, a.h1, h2)?);
        v["n"] = json!(data.len());
        Ok(v)
    }
}

fn simulate(a: &SimulateArgs, dist: &DistributionSpec) -> Outcome {
    let (case, estimate) = resolve_case(dist, a.hstar, a.common.seed)?;
    let policy = match a.window {
        WindowChoice::Full => WindowPolicy::Full,
        WindowChoice::Theory => WindowPolicy::Theory,
        WindowChoice::Explicit => match (a.h1, a.h2) {
            (Some(h1), Some(h2)) => WindowPolicy::Explicit { h1, h2 },
            _ => {
                return Err(scanlaw::Error::Argument("explicit windows need --h1 and --h2".into()).into())
            }
        },
    };
    let summary = mc::run_mn_experiment(dist, &case, a.n, a.reps, policy, a.common.seed)?;
    if let Some(path) = &a.csv {
        let rows = summary
            .values
            .iter()
            .zip(&summary.argmax_lengths)
            .map(|(v, l)| vec![*v, *l as f64]);
        write_csv(path, &["value", "length"], rows)?;
    }
    let mut out = json!({ "case": to_value(&case), "summary": to_value(&summary) });
    if let Some(e) = estimate {
        out["hstar_estimate"] = json!({ "value": e.value, "stderr": e.stderr });
    }
    if a.profile {
        out["length_profile"] = to_value(&mc::argmax_length_profile(&summary, &case, a.n)?);
    }
    Ok(out)
}

fn pvalue(a: &PvalueArgs, dist: &DistributionSpec) -> Outcome {
    let (case, estimate) = resolve_case(dist, a.hstar, a.common.seed)?;
    let scale = match a.scale {
        ScaleChoice::Squared => PValueScale::Squared,
        ScaleChoice::Linear => PValueScale::Linear,
    };
    let p = limits::pvalue_m(a.m, &case, a.n, scale)?;
    let mut out = json!({
        "pvalue": p,
        "limit_law": to_value(&limits::gumbel_law(&case, a.n)?),
        "case": case.case.tag(),
    });
    if let Some(e) = estimate {
        out["hstar_estimate"] = json!({ "value": e.value, "stderr": e.stderr });
    }
    Ok(out)
}

fn hitting(a: &HittingArgs, dist: &DistributionSpec) -> Outcome {
    let (case, estimate) = resolve_case(dist, a.hstar, a.common.seed)?;
    let mut out = json!({ "limit": to_value(&limits::hitting_cdf(a.y, a.u, &case)?) });
    if a.reps > 0 {
        out["simulation"] = to_value(&mc::run_hitting_experiment(
            dist,
            &case,
            a.u,
            a.reps,
            a.n_cap,
            a.window_cap,
            a.common.seed,
        )?);
    }
    if let Some(e) = estimate {
        out["hstar_estimate"] = json!({ "value": e.value, "stderr": e.stderr });
    }
    Ok(out)
}

fn run(cmd: &Command) -> (&'static str, Value, &Common, Option<Value>, Outcome) {
    macro_rules! with_dist {
        ($name:expr, $a:expr, $f:expr) => {{
            let cfg = to_value($a);
            match load_dist(&$a.common) {
                Ok(d) => ($name, cfg, &$a.common, Some(to_value(&d)), $f($a, &d)),
                Err(e) => ($name, cfg, &$a.common, None, Err(e)),
            }
        }};
    }
    match cmd {
        Command::Classify(a) => with_dist!("classify", a, classify),
        Command::Constants(a) => with_dist!("constants", a, constants),
        Command::Rate(a) => with_dist!("rate", a, rate),
        Command::Tail(a) => with_dist!("tail", a, tail),
        Command::Pickands(a) => with_dist!("pickands", a, pickands_cmd),
        Command::Simulate(a) => with_dist!("simulate", a, simulate),
        Command::Pvalue(a) => with_dist!("pvalue", a, pvalue),
        Command::Hitting(a) => with_dist!("hitting", a, hitting),
        Command::Scan(a) => {
            let mut cfg = to_value(a);
            cfg["data"] = json!(a.data.display().to_string());
            ("scan", cfg, &a.common, None, scan_cmd(a))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Classify(a) => &a.common,
        Command::Constants(a) => &a.common,
        Command::Rate(a) => &a.common,
        Command::Tail(a) => &a.common,
        Command::Pickands(a) => &a.common,
        Command::Scan(a) => &a.common,
        Command::Simulate(a) => &a.common,
        Command::Pvalue(a) => &a.common,
        Command::Hitting(a) => &a.common,
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("scanlaw: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let (name, config, common, dist, outcome) = run(&cli.command);
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "scanlaw",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "config": config,
        "seed": common.seed,
        "dist": dist,
    });
    let status = match outcome {
        Ok(result) => {
            report["result"] = result;
            ExitCode::SUCCESS
        }
        Err(e) => {
            report["error"] = json!({ "code": e.code(), "message": e.message() });
            ExitCode::from(1)
        }
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    let written = match &common.out {
        Some(path) => fs::write(path, text.as_bytes()),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("scanlaw: cannot write report: {e}");
        return ExitCode::from(1);
    }
    status
}
