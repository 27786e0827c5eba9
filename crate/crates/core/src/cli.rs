//! Command-line front end.
//!
//! Reads JSON network files, runs the solvers and prints JSON (or CSV)
//! reports on stdout. Road numbers in reports are 1-based, matching the
//! order of `roads` in the input file. Every floating-point value is
//! rounded to 9 significant digits so reports are byte-stable.
//!
//! Exit codes: 0 success, 1 invalid input, 2 no isolated equilibrium.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::bounds::{empirical_autonomy_ratio, network_asymmetry, price_of_autonomy_bound, xi};
use crate::equilibrium::{
    best_equilibrium, enumerate_equilibria, verify_equilibrium, worst_equilibrium,
    EquilibriumResult, EquilibriumSet,
};
use crate::error::Error;
use crate::model::{social_cost, Demand, FlowProfile, Network, Road, RoadFlow, RoadToll, TollScheme};
use crate::pattern::SupportPattern;
use crate::social_optimum::{count_mixed_roads, optimal_routing, OptimumResult};
use crate::tolling::{
    synthesize_differentiated_tolls, undiff_toll_search, TollGrid, TollSynthesisConfig,
};

/// Significant digits of every number in a report.
pub const REPORT_DIGITS: usize = 9;

/// Two equilibrium costs closer than this count as equal in toll
/// transcripts.
const COST_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "mixtoll",
    version,
    about = "Equilibria, optimal routing and tolls for mixed-autonomy traffic on parallel roads"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate isolated Wardrop equilibria.
    Equilibria(EquilibriaArgs),
    /// Compute a socially optimal routing.
    Optimal(OptimalArgs),
    /// Synthesize differentiated tolls, or search undifferentiated ones.
    Tolls(TollsArgs),
    /// Evaluate the price-of-autonomy bound.
    Bound(BoundArgs),
    /// Check whether a flow profile is a Wardrop equilibrium.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct EquilibriaArgs {
    network: PathBuf,
    /// Tolls file; overrides tolls in the network file.
    #[arg(long)]
    tolls: Option<PathBuf>,
    #[arg(long, group = "selection")]
    worst: bool,
    #[arg(long, group = "selection")]
    best: bool,
    #[arg(long, group = "selection")]
    all: bool,
    /// Tolerance for the per-equilibrium verification flag.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct OptimalArgs {
    network: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct TollsArgs {
    network: PathBuf,
    /// Common cost on used roads, or `auto` for the largest used latency.
    #[arg(long, default_value = "auto")]
    mu: String,
    /// Prohibitive toll, or `auto`.
    #[arg(long = "P", default_value = "auto")]
    prohibitive: String,
    /// Search undifferentiated tolls over `lo:hi:step` instead.
    #[arg(long = "undiff-grid")]
    undiff_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// Network file; its asymmetry is used as k.
    network: Option<PathBuf>,
    #[arg(long, conflicts_with = "network")]
    k: Option<f64>,
    #[arg(long, default_value_t = 1)]
    sigma: u32,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    network: PathBuf,
    #[arg(long)]
    flows: PathBuf,
    #[arg(long)]
    tolls: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

/// Network input file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub roads: Vec<Road>,
    pub demand: Demand,
    #[serde(default)]
    pub tolls: Option<Vec<RoadToll>>,
}

/// A file with a `tolls` array; other fields are ignored so toll reports
/// can be read back.
#[derive(Debug, Deserialize)]
struct TollsFile {
    tolls: Vec<RoadToll>,
}

/// A file with a `flows` array; other fields are ignored so optimal and
/// equilibrium reports can be read back.
#[derive(Debug, Deserialize)]
struct FlowsFile {
    flows: Vec<RoadFlow>,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoIsolatedEquilibrium { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

pub struct LoadedNetwork {
    pub network: Network,
    pub demand: Demand,
    pub tolls: TollScheme,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_network(path: &Path) -> CliResult<LoadedNetwork> {
    let file: NetworkFile = read_json(path)?;
    parse_network_file(file).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Validates a parsed network file.
pub fn parse_network_file(file: NetworkFile) -> crate::Result<LoadedNetwork> {
    let network = Network::new(file.roads)?;
    file.demand.validate()?;
    let tolls = match file.tolls {
        Some(t) => TollScheme::new(t),
        None => TollScheme::zero(network.len()),
    };
    tolls.check_len(&network)?;
    Ok(LoadedNetwork {
        network,
        demand: file.demand,
        tolls,
    })
}

fn load_tolls(path: &Path, network: &Network) -> CliResult<TollScheme> {
    let file: TollsFile = read_json(path)?;
    let scheme = TollScheme::new(file.tolls);
    scheme
        .check_len(network)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(scheme)
}

fn load_flows(path: &Path) -> CliResult<FlowProfile> {
    let file: FlowsFile = read_json(path)?;
    FlowProfile::new(file.flows).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Rounds `x` to [`REPORT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", REPORT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn fmt_num(x: f64) -> String {
    format!("{}", round_sig(x))
}

fn one_based(idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|i| i + 1).collect()
}

fn pattern_json(p: &SupportPattern) -> Value {
    json!({ "human": one_based(&p.human), "autonomous": one_based(&p.autonomous) })
}

fn flows_json(flow: &FlowProfile) -> Value {
    serde_json::to_value(flow.flows()).expect("flows serialize")
}

fn latencies(network: &Network, flow: &FlowProfile) -> Vec<f64> {
    network
        .roads()
        .iter()
        .zip(flow.flows())
        .map(|(r, f)| r.delay(f.human, f.autonomous))
        .collect()
}

fn equilibrium_json(
    network: &Network,
    demand: &Demand,
    tolls: &TollScheme,
    eq: &EquilibriumResult,
    tol: f64,
) -> CliResult<Value> {
    let verified = verify_equilibrium(network, demand, tolls, &eq.flow, tol)?.holds;
    Ok(json!({
        "cost": eq.cost,
        "lambda_h": eq.lambda_h,
        "lambda_a": eq.lambda_a,
        "support": pattern_json(&eq.pattern),
        "flows": flows_json(&eq.flow),
        "latency": latencies(network, &eq.flow),
        "mixed_road_count": count_mixed_roads(&eq.flow, crate::pattern::SUPPORT_TOL),
        "verified": verified,
    }))
}

fn optimum_json(network: &Network, opt: &OptimumResult) -> Value {
    json!({
        "cost": opt.cost,
        "flows": flows_json(&opt.flow),
        "latency": latencies(network, &opt.flow),
        "support": pattern_json(&opt.pattern),
        "mixed_roads": one_based(&opt.mixed_roads),
        "mixed_road_count": opt.mixed_roads.len(),
        "multipliers": { "human": opt.multipliers.human, "autonomous": opt.multipliers.autonomous },
        "separation_guaranteed": opt.separation_guaranteed,
        "candidates_examined": opt.candidates_examined,
        "degenerate_candidates": opt.degenerate_candidates,
    })
}

const CSV_HEADER: &str = "road,human,aut,latency,toll_h,toll_a";

fn csv_rows(
    out: &mut String,
    prefix: Option<usize>,
    network: &Network,
    flow: &FlowProfile,
    tolls: &TollScheme,
) {
    for (i, ((r, f), t)) in network
        .roads()
        .iter()
        .zip(flow.flows())
        .zip(tolls.tolls())
        .enumerate()
    {
        if let Some(p) = prefix {
            let _ = write!(out, "{p},");
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            i + 1,
            fmt_num(f.human),
            fmt_num(f.autonomous),
            fmt_num(r.delay(f.human, f.autonomous)),
            fmt_num(t.human),
            fmt_num(t.autonomous),
        );
    }
}

enum Report {
    Json(Value),
    Csv(String),
}

struct Outcome {
    report: Report,
    code: i32,
    diagnostic: Option<String>,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Outcome {
            report,
            code: 0,
            diagnostic: None,
        }
    }
}

fn degenerate_json(set: &EquilibriumSet) -> Value {
    Value::Array(set.degenerate.iter().map(pattern_json).collect())
}

fn cmd_equilibria(args: &EquilibriaArgs) -> CliResult<Outcome> {
    let loaded = load_network(&args.network)?;
    let tolls = match &args.tolls {
        Some(p) => load_tolls(p, &loaded.network)?,
        None => loaded.tolls.clone(),
    };
    let (net, demand) = (&loaded.network, &loaded.demand);
    let set = enumerate_equilibria(net, demand, &tolls)?;
    let selection = if args.worst {
        "worst"
    } else if args.best {
        "best"
    } else {
        "all"
    };
    let chosen: Vec<EquilibriumResult> = match selection {
        "worst" => worst_equilibrium(net, demand, &tolls).ok().into_iter().collect(),
        "best" => best_equilibrium(net, demand, &tolls).ok().into_iter().collect(),
        _ => set.equilibria.clone(),
    };
    let (code, diagnostic) = if chosen.is_empty() {
        let e = Error::NoIsolatedEquilibrium {
            degenerate: set.degenerate.clone(),
        };
        (2, Some(e.to_string()))
    } else {
        (0, None)
    };

    let report = match args.format {
        Format::Json => {
            let eqs = chosen
                .iter()
                .map(|e| equilibrium_json(net, demand, &tolls, e, args.tol))
                .collect::<CliResult<Vec<_>>>()?;
            Report::Json(json!({
                "command": "equilibria",
                "selection": selection,
                "equilibria": eqs,
                "degenerate_patterns": degenerate_json(&set),
                "patterns_examined": set.patterns_examined,
            }))
        }
        Format::Csv => {
            let mut s = format!("equilibrium,{CSV_HEADER}\n");
            for (j, e) in chosen.iter().enumerate() {
                csv_rows(&mut s, Some(j + 1), net, &e.flow, &tolls);
            }
            Report::Csv(s)
        }
    };
    Ok(Outcome {
        report,
        code,
        diagnostic,
    })
}

fn cmd_optimal(args: &OptimalArgs) -> CliResult<Outcome> {
    let loaded = load_network(&args.network)?;
    let net = &loaded.network;
    let opt = optimal_routing(net, &loaded.demand)?;
    let report = match args.format {
        Format::Json => {
            let mut v = optimum_json(net, &opt);
            v["command"] = json!("optimal");
            Report::Json(v)
        }
        Format::Csv => {
            let mut s = format!("{CSV_HEADER}\n");
            csv_rows(&mut s, None, net, &opt.flow, &TollScheme::zero(net.len()));
            Report::Csv(s)
        }
    };
    let diagnostic = (!opt.separation_guaranteed).then(|| {
        "warning: more than one road has k = 1; the one-mixed-road property is not guaranteed"
            .to_string()
    });
    Ok(Outcome {
        report,
        code: 0,
        diagnostic,
    })
}

fn parse_auto(flag: &str, value: &str) -> CliResult<Option<f64>> {
    if value.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Some)
        .ok_or_else(|| Failure::input(format!("--{flag}: expected a number or `auto`, got {value:?}")))
}

fn cmd_tolls(args: &TollsArgs) -> CliResult<Outcome> {
    let loaded = load_network(&args.network)?;
    let (net, demand) = (&loaded.network, &loaded.demand);

    if let Some(spec) = &args.undiff_grid {
        let grid: TollGrid = spec.parse()?;
        let res = undiff_toll_search(net, demand, &grid)?;
        let scheme = TollScheme::undifferentiated(&res.tolls);
        let report = match args.format {
            Format::Json => Report::Json(json!({
                "command": "tolls",
                "mode": "undifferentiated",
                "grid": { "lo": grid.lo, "hi": grid.hi, "step": grid.step },
                "tolls": serde_json::to_value(scheme.tolls()).expect("tolls serialize"),
                "worst_cost": res.worst_cost,
                "worst_equilibrium": equilibrium_json(net, demand, &scheme, &res.worst, 1e-7)?,
                "points_evaluated": res.points_evaluated,
                "skipped_points": res.skipped.len(),
            })),
            Format::Csv => {
                let mut s = format!("{CSV_HEADER}\n");
                csv_rows(&mut s, None, net, &res.worst.flow, &scheme);
                Report::Csv(s)
            }
        };
        return Ok(Outcome::ok(report));
    }

    let config = TollSynthesisConfig {
        mu: parse_auto("mu", &args.mu)?,
        prohibitive: parse_auto("P", &args.prohibitive)?,
    };
    let opt = optimal_routing(net, demand)?;
    let synth = synthesize_differentiated_tolls(net, &opt, &config)?;
    let set = enumerate_equilibria(net, demand, &synth.scheme)?;
    let certificate = verify_equilibrium(net, demand, &synth.scheme, &opt.flow, 1e-9)?;
    let all_match = !set.equilibria.is_empty()
        && set
            .equilibria
            .iter()
            .all(|e| (e.cost - opt.cost).abs() <= COST_MATCH_TOL);

    let report = match args.format {
        Format::Json => {
            let eqs = set
                .equilibria
                .iter()
                .map(|e| equilibrium_json(net, demand, &synth.scheme, e, 1e-7))
                .collect::<CliResult<Vec<_>>>()?;
            let prohibited: Vec<Value> = synth
                .human_prohibited
                .iter()
                .zip(&synth.autonomous_prohibited)
                .map(|(h, a)| json!({ "human": h, "autonomous": a }))
                .collect();
            Report::Json(json!({
                "command": "tolls",
                "mode": "differentiated",
                "mu": synth.mu,
                "P": synth.prohibitive,
                "tolls": serde_json::to_value(synth.scheme.tolls()).expect("tolls serialize"),
                "prohibited": prohibited,
                "optimum": optimum_json(net, &opt),
                "transcript": {
                    "equilibria": eqs,
                    "degenerate_patterns": degenerate_json(&set),
                    "optimum_is_equilibrium": certificate.holds,
                    "all_costs_match_optimum": all_match,
                },
            }))
        }
        Format::Csv => {
            let mut s = format!("{CSV_HEADER}\n");
            csv_rows(&mut s, None, net, &opt.flow, &synth.scheme);
            Report::Csv(s)
        }
    };
    Ok(Outcome::ok(report))
}

fn cmd_bound(args: &BoundArgs) -> CliResult<Outcome> {
    let (k, empirical) = match (&args.network, args.k) {
        (Some(path), _) => {
            let loaded = load_network(path)?;
            let k = network_asymmetry(&loaded.network);
            let total = loaded.demand.total();
            let ratio =
                empirical_autonomy_ratio(&loaded.network, total, loaded.demand.human / total)?;
            (k, Some(ratio))
        }
        (None, Some(k)) => (k, None),
        (None, None) => return Err(Failure::input("bound: give --k or a network file")),
    };
    let bound = price_of_autonomy_bound(k, args.sigma)?;
    let mut report = json!({
        "command": "bound",
        "k": k,
        "sigma": args.sigma,
        "xi": xi(args.sigma)?,
        "bound": bound,
    });
    if let Some(r) = empirical {
        report["empirical"] = json!({
            "ratio": r.ratio,
            "mixed_cost": r.mixed_cost,
            "human_only_cost": r.human_only_cost,
            "bound_applies": r.bound_applies,
        });
    }
    Ok(Outcome::ok(Report::Json(report)))
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<Outcome> {
    let loaded = load_network(&args.network)?;
    let tolls = match &args.tolls {
        Some(p) => load_tolls(p, &loaded.network)?,
        None => loaded.tolls.clone(),
    };
    let flow = load_flows(&args.flows)?;
    let v = verify_equilibrium(&loaded.network, &loaded.demand, &tolls, &flow, args.tol)?;
    let violations: Vec<Value> = v
        .violations
        .iter()
        .map(|x| json!({ "road": x.road + 1, "class": x.class.to_string(), "slack": x.slack }))
        .collect();
    Ok(Outcome::ok(Report::Json(json!({
        "command": "verify",
        "holds": v.holds,
        "tol": args.tol,
        "lambda_h": v.lambda_h,
        "lambda_a": v.lambda_a,
        "violations": violations,
        "social_cost": social_cost(&loaded.network, &flow)?,
    }))))
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Equilibria(a) => cmd_equilibria(a),
        Command::Optimal(a) => cmd_optimal(a),
        Command::Tolls(a) => cmd_tolls(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(outcome) => {
            if let Some(d) = &outcome.diagnostic {
                let _ = writeln!(err, "{d}");
            }
            let text = match outcome.report {
                Report::Json(mut v) => {
                    round_numbers(&mut v);
                    let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
                    s.push('\n');
                    s
                }
                Report::Csv(s) => s,
            };
            let _ = out.write_all(text.as_bytes());
            outcome.code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
