//! Command-line driver: polarization spectra, code construction, block
//! error simulation, fixed-point reports and channel validation.
//!
//! Exit codes: 0 on success, 2 on validation failure (bad parameters,
//! malformed channel files, incompatible flag combinations), 1 on
//! anything else.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use abelian_polar::analytic::{self, MapName};
use abelian_polar::channel::{Channel, ChannelJson, ChannelParams1, ChannelParams2};
use abelian_polar::codec::{
    construct_code, error_bound, CodeConfigJson, ConstructOptions, QualityMethod, Thresholds,
};
use abelian_polar::group::GroupSpec;
use abelian_polar::polarize::{self, PolarPath, SynthesisOptions};
use abelian_polar::sim::simulate_bler;

#[derive(Parser)]
#[command(
    name = "polar",
    version,
    about = "Multilevel polar codes over Abelian group alphabets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the info/Z_d spectrum of all 2^n synthesized channels as CSV
    Spectrum(SpectrumArgs),
    /// Construct a code config and emit it as JSON
    Construct(ConstructArgs),
    /// Construct codes and measure block error rate over random messages
    Simulate(SimulateArgs),
    /// Report the fixed points of the example-channel parameter maps
    FixedPoints(FixedPointsArgs),
    /// Validate a channel source and print its scalar functionals
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct ChannelArgs {
    /// Channel source: channel1 | channel2 | json:<path> | random
    #[arg(long, default_value = "channel1")]
    channel: String,
    /// ε parameter of the builtin channels
    #[arg(long, default_value_t = 0.4)]
    eps: f64,
    /// λ parameter of the builtin channels
    #[arg(long, default_value_t = 0.2)]
    lam: f64,
    /// γ parameter of channel2
    #[arg(long, default_value_t = 0.0)]
    gam: f64,
    /// Group spec for random channels, JSON [[p,r],...]
    #[arg(long, default_value = "[[2,2]]")]
    group: String,
    /// Output alphabet size for random channels
    #[arg(long, default_value_t = 8)]
    outputs: usize,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq, Debug)]
enum Engine {
    Analytic,
    Exact,
    Mc,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Transform depth n (N = 2^n rows)
    #[arg(long, default_value_t = 14)]
    n: usize,
    /// Engine: analytic (builtin channels only) or exact synthesis;
    /// defaults to analytic for builtins up to depth 24, exact otherwise
    #[arg(long)]
    engine: Option<Engine>,
    /// Merge tolerance for exact synthesis
    #[arg(long, default_value_t = polarize::MERGE_TOL)]
    tol: f64,
    /// Seed for random channel sources
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Engine: exact synthesis or mc (Monte Carlo estimation)
    #[arg(long, default_value = "exact")]
    engine: Engine,
    /// Monte Carlo trials per index (mc engine)
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Classification threshold z_hi
    #[arg(long, default_value_t = 0.9)]
    z_hi: f64,
    /// Classification threshold z_lo
    #[arg(long, default_value_t = 0.1)]
    z_lo: f64,
    /// Merge tolerance for exact synthesis
    #[arg(long, default_value_t = polarize::MERGE_TOL)]
    tol: f64,
    /// Seed: dither seed, mc estimation seed and random-channel seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Comma-separated list of depths, e.g. 6,8,10
    #[arg(long, default_value = "6,8,10", value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, default_value = "exact")]
    engine: Engine,
    /// Simulation trials per depth (also mc estimation trials)
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    /// Master seed: trial streams, dither and random-channel seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.9)]
    z_hi: f64,
    /// Classification threshold z_lo; default scales as min(0.1, 6.4/N)
    #[arg(long)]
    z_lo: Option<f64>,
    #[arg(long, default_value_t = polarize::MERGE_TOL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FixedPointsArgs {
    /// Restrict to one map: channel1_plus | channel1_minus | channel2_plus | channel2_minus
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Errors that should exit with code 2 rather than 1.
#[derive(Debug)]
struct ValidationError(String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl std::error::Error for ValidationError {}

fn validation<T>(msg: impl Into<String>) -> Result<T, anyhow::Error> {
    Err(anyhow::Error::new(ValidationError(msg.into())))
}

#[derive(Clone)]
enum ChannelSource {
    Channel1(ChannelParams1),
    Channel2(ChannelParams2),
    Json(PathBuf),
    Random,
}

fn parse_source(args: &ChannelArgs) -> Result<ChannelSource, anyhow::Error> {
    match args.channel.as_str() {
        "channel1" => match ChannelParams1::new(args.eps, args.lam) {
            Ok(p) => Ok(ChannelSource::Channel1(p)),
            Err(e) => validation(e.to_string()),
        },
        "channel2" => match ChannelParams2::new(args.gam, args.eps, args.lam) {
            Ok(p) => Ok(ChannelSource::Channel2(p)),
            Err(e) => validation(e.to_string()),
        },
        "random" => Ok(ChannelSource::Random),
        other => match other.strip_prefix("json:") {
            Some(path) => Ok(ChannelSource::Json(PathBuf::from(path))),
            None => validation(format!(
                "unknown channel source {other:?}; use channel1, channel2, json:<path> or random"
            )),
        },
    }
}

fn build_channel(
    source: &ChannelSource,
    args: &ChannelArgs,
    seed: u64,
) -> Result<Channel, anyhow::Error> {
    match source {
        ChannelSource::Channel1(p) => Ok(Channel::channel1(*p)),
        ChannelSource::Channel2(p) => Ok(Channel::channel2(*p)),
        ChannelSource::Json(path) => load_channel(path),
        ChannelSource::Random => {
            let spec: GroupSpec = match serde_json::from_str(&args.group) {
                Ok(s) => s,
                Err(e) => return validation(format!("bad --group JSON: {e}")),
            };
            let group = match spec.build() {
                Ok(g) => g,
                Err(e) => return validation(e.to_string()),
            };
            match Channel::random(group, args.outputs, seed) {
                Ok(ch) => Ok(ch),
                Err(e) => validation(e.to_string()),
            }
        }
    }
}

/// Loads and validates a channel from its JSON schema.
fn load_channel(path: &PathBuf) -> Result<Channel, anyhow::Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let json: ChannelJson = match serde_json::from_str(&text) {
        Ok(j) => j,
        Err(e) => return validation(format!("{}: parse error: {e}", path.display())),
    };
    match Channel::try_from(json) {
        Ok(ch) => Ok(ch),
        Err(e) => validation(format!("{}: {e}", path.display())),
    }
}

fn write_out(out: &Option<PathBuf>, content: &str) -> Result<(), anyhow::Error> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run_spectrum(args: &SpectrumArgs) -> Result<(), anyhow::Error> {
    let source = parse_source(&args.channel)?;
    let engine = args.engine.unwrap_or(match source {
        ChannelSource::Channel1(_) | ChannelSource::Channel2(_) => Engine::Analytic,
        _ => Engine::Exact,
    });

    // (path string, info, z values for d = 1..q-1)
    let rows: Vec<(String, f64, Vec<f64>)> = match (engine, &source) {
        (Engine::Analytic, ChannelSource::Channel1(p)) => {
            if args.n > 24 {
                return validation(format!("analytic depth cap is 24, got {}", args.n));
            }
            analytic::channel1_params_at(*p, args.n)
                .into_iter()
                .enumerate()
                .map(|(k, q)| {
                    (
                        PolarPath::from_counter(k, args.n).to_string(),
                        analytic::channel1_info(q),
                        analytic::channel1_zd(q)[1..].to_vec(),
                    )
                })
                .collect()
        }
        (Engine::Analytic, ChannelSource::Channel2(p)) => {
            if args.n > 24 {
                return validation(format!("analytic depth cap is 24, got {}", args.n));
            }
            analytic::channel2_params_at(*p, args.n)
                .into_iter()
                .enumerate()
                .map(|(k, q)| {
                    (
                        PolarPath::from_counter(k, args.n).to_string(),
                        analytic::channel2_info(q),
                        analytic::channel2_zd(q)[1..].to_vec(),
                    )
                })
                .collect()
        }
        (Engine::Analytic, _) => {
            return validation("--engine analytic works only with builtin channels");
        }
        (Engine::Mc, _) => {
            return validation("--engine mc is not a spectrum engine; use analytic or exact");
        }
        (Engine::Exact, _) => {
            let ch = build_channel(&source, &args.channel, args.seed)?;
            let opts = SynthesisOptions {
                merge_tol: args.tol,
                ..Default::default()
            };
            polarize::spectrum(&ch, args.n, &opts)?
                .into_iter()
                .map(|row| (row.path.to_string(), row.info, row.z[1..].to_vec()))
                .collect()
        }
    };

    let q = rows.first().map_or(0, |r| r.2.len() + 1);
    let mut sorted: Vec<&(String, f64, Vec<f64>)> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("finite info")
            .then(a.0.cmp(&b.0))
    });

    let mut csv = String::from("path,rank,info");
    for d in 1..q {
        write!(csv, ",z_{d}").unwrap();
    }
    csv.push('\n');
    for (rank, (path, info, z)) in sorted.iter().enumerate() {
        write!(csv, "{path},{rank},{info}").unwrap();
        for v in z {
            write!(csv, ",{v}").unwrap();
        }
        csv.push('\n');
    }
    write_out(&args.out, &csv)
}

fn construct_options(
    engine: Engine,
    trials: usize,
    seed: u64,
    tol: f64,
    thresholds: Thresholds,
) -> Result<ConstructOptions, anyhow::Error> {
    let method = match engine {
        Engine::Exact => QualityMethod::Exact(SynthesisOptions {
            merge_tol: tol,
            ..Default::default()
        }),
        Engine::Mc => QualityMethod::MonteCarlo { trials, seed },
        Engine::Analytic => {
            return validation("--engine analytic is not a construction engine; use exact or mc")
        }
    };
    Ok(ConstructOptions {
        method,
        thresholds,
        dither_seed: seed,
    })
}

fn run_construct(args: &ConstructArgs) -> Result<(), anyhow::Error> {
    if args.n > polarize::MAX_SYNTH_DEPTH {
        return validation(format!(
            "construction depth cap is {}, got {}",
            polarize::MAX_SYNTH_DEPTH,
            args.n
        ));
    }
    let source = parse_source(&args.channel)?;
    let ch = build_channel(&source, &args.channel, args.seed)?;
    let thresholds = Thresholds {
        z_hi: args.z_hi,
        z_lo: args.z_lo,
    };
    let options = construct_options(args.engine, args.trials, args.seed, args.tol, thresholds)?;
    let built = construct_code(&ch, args.n, &options)?;
    let json = serde_json::to_string_pretty(&CodeConfigJson::from(&built.config))?;
    write_out(&args.out, &format!("{json}\n"))
}

fn run_simulate(args: &SimulateArgs) -> Result<(), anyhow::Error> {
    if let Some(&n) = args.n.iter().find(|&&n| n > polarize::MAX_SYNTH_DEPTH) {
        return validation(format!(
            "construction depth cap is {}, got {n}",
            polarize::MAX_SYNTH_DEPTH
        ));
    }
    let source = parse_source(&args.channel)?;
    let ch = build_channel(&source, &args.channel, args.seed)?;
    if args.trials == 0 {
        return validation("--trials must be at least 1");
    }
    let mut csv = String::from("n,N,rate,bler,bound,trials,seed\n");
    for &n in &args.n {
        let thresholds = match args.z_lo {
            Some(z_lo) => Thresholds {
                z_hi: args.z_hi,
                z_lo,
            },
            None => Thresholds {
                z_hi: args.z_hi,
                ..Thresholds::scaled(n)
            },
        };
        let options = construct_options(args.engine, args.trials, args.seed, args.tol, thresholds)?;
        let built = construct_code(&ch, n, &options)?;
        let bound = error_bound(&built.config, &built.z_table)?;
        let result = simulate_bler(&ch, &built.config, args.trials, args.seed)?;
        writeln!(
            csv,
            "{n},{},{},{},{bound},{},{}",
            built.config.block_length(),
            built.config.rate(),
            result.bler,
            args.trials,
            args.seed
        )
        .unwrap();
    }
    write_out(&args.out, &csv)
}

fn run_fixed_points(args: &FixedPointsArgs) -> Result<(), anyhow::Error> {
    let maps: Vec<MapName> = match &args.map {
        None => MapName::ALL.to_vec(),
        Some(name) => {
            let found = MapName::ALL.iter().find(|m| m.as_str() == name);
            match found {
                Some(m) => vec![*m],
                None => {
                    return validation(format!(
                        "unknown map {name:?}; expected one of channel1_plus, channel1_minus, channel2_plus, channel2_minus"
                    ))
                }
            }
        }
    };
    let mut text = String::new();
    for map in maps {
        let report = analytic::fixed_points(map);
        writeln!(
            text,
            "{}: {} fixed points, {} admissible",
            map.as_str(),
            report.fixed_points.len(),
            report.admissible.len()
        )
        .unwrap();
        for (p, r) in report.fixed_points.iter().zip(&report.residuals) {
            let coords: Vec<String> = p.iter().map(|v| format!("{v:.9}")).collect();
            let admissible = report.admissible.contains(p);
            writeln!(
                text,
                "  ({})  residual {r:.3e}  {}",
                coords.join(", "),
                if admissible {
                    "admissible"
                } else {
                    "inadmissible"
                }
            )
            .unwrap();
        }
    }
    write_out(&args.out, &text)
}

fn run_validate(args: &ValidateArgs) -> Result<(), anyhow::Error> {
    let source = parse_source(&args.channel)?;
    let ch = build_channel(&source, &args.channel, args.seed)?;
    let q = ch.input_size();
    let mut text = String::new();
    writeln!(text, "group: {} (order {q})", ch.group()).unwrap();
    writeln!(text, "outputs: {}", ch.output_size()).unwrap();
    writeln!(text, "symmetric_capacity: {}", ch.symmetric_capacity()).unwrap();
    writeln!(text, "avg_bhattacharyya: {}", ch.avg_bhattacharyya()).unwrap();
    for d in 1..q {
        writeln!(text, "z_{d}: {}", ch.z_d(d)).unwrap();
    }
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(args) => run_spectrum(args),
        Command::Construct(args) => run_construct(args),
        Command::Simulate(args) => run_simulate(args),
        Command::FixedPoints(args) => run_fixed_points(args),
        Command::Validate(args) => run_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is::<ValidationError>()
                || err
                    .downcast_ref::<abelian_polar::channel::ChannelError>()
                    .is_some()
                || err
                    .downcast_ref::<abelian_polar::group::GroupError>()
                    .is_some()
            {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
