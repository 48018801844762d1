use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mgpart::formulation::{PartitionSolution, SaaConfig};
use mgpart::milp::{export_mps, import_mps};
use mgpart::network::{FeederNetwork, PartitionGraph};
use mgpart::pipeline::study::{monotonicity_violations, run_study, to_csv, StudyKind, StudySpec};
use mgpart::pipeline::{
    assess, assess_bernoulli, build, exit_code, load_network_arg, lower_bound_run, partition, read_scenarios, read_text, write_scenarios,
    write_text, Budget, LowerBoundSpec, ModelKind, PipelineError, Sampler, Sampling, ScenarioSource,
};
use mgpart::scenario::{derive_seed, synthesize, ScenarioSet, SynthConfig};
use mgpart::solver::{solve_milp, write_solution_file, BranchingRule};
use mgpart::validator::{verify, BinomConvention, DesignChecker};

#[derive(Parser)]
#[command(name = "mgpart", version, about = "Partition a distribution feeder into self-adequate microgrids")]
struct Cli {
    /// Base seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Wall-clock limit per solve, seconds. Results then depend on machine speed.
    #[arg(long, global = true)]
    time_limit: Option<f64>,
    /// Stop when (incumbent - bound) / max(1, |incumbent|) is at most this.
    #[arg(long, global = true, default_value_t = 0.01)]
    gap: f64,
    /// Branch-and-bound node budget per solve; reproducible unlike --time-limit.
    #[arg(long, global = true)]
    node_limit: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Branching::MostFractional)]
    branching: Branching,
    /// Binomial sums up to and including k instead of up to k - 1.
    #[arg(long, global = true)]
    inclusive_binom: bool,
    /// -v info, -vv debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Branching {
    MostFractional,
    FirstFractional,
    Random,
    Reliability,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplingArg {
    Uniform,
    Stratified,
}

#[derive(Args)]
struct Input {
    /// Network JSON file, or builtin:<name> (ieee37, feeder13, five_bus, two_bus).
    #[arg(long)]
    network: String,
    /// Scenario pool (CSV, or JSON by extension). Synthetic hourly profiles when absent.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    /// Hours of synthetic profiles.
    #[arg(long, default_value_t = 8760)]
    hours: usize,
    /// Relative noise of synthetic profiles.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
}

#[derive(Args)]
struct ModelArgs {
    /// Scenarios drawn per solve (default: the whole scenario file).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Fraction of demand a retained scenario must serve.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Single-scenario model on the nominal values (or a one-scenario file).
    #[arg(long)]
    deterministic: bool,
    #[arg(long, value_enum, default_value_t = SamplingArg::Uniform)]
    sampling: SamplingArg,
    #[arg(long, default_value_t = 10)]
    clusters: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic scenario pool.
    Synth {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve for the islands and write the solution JSON and DOT.
    Partition {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
        /// Graphviz output (default: next to --out with a .dot extension).
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Also write the scenarios the model was built on.
        #[arg(long)]
        sample_out: Option<PathBuf>,
    },
    /// Estimate a solution's violation probability on fresh draws.
    Assess {
        /// Network JSON file or builtin:<name>.
        #[arg(long, required_unless_present = "oracle_bernoulli")]
        network: Option<String>,
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long, default_value_t = 8760)]
        hours: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, required_unless_present = "oracle_bernoulli")]
        solution: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        n_prime: usize,
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Replace the adequacy check by Bernoulli(q) failures.
        #[arg(long)]
        oracle_bernoulli: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Confidence lower bound on the optimum from M sampled problems.
    LowerBound {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 50)]
        m: usize,
        /// Scenarios per sampled problem.
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 0.7)]
        gamma: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parameter sweep to CSV.
    Study {
        #[command(flatten)]
        input: Input,
        /// gamma-sweep, switch-sweep, scenario-count-sweep or method-compare.
        #[arg(long)]
        kind: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 10)]
        clusters: usize,
        /// Fresh draws per out-of-sample assessment (0 skips it).
        #[arg(long, default_value_t = 200)]
        n_prime: usize,
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        /// Add a wall_time column (output then differs between runs).
        #[arg(long)]
        wall_time: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the model as free MPS.
    ExportMps {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a solution's topology, and its retained scenarios when given.
    Check {
        #[arg(long)]
        network: String,
        #[arg(long)]
        solution: PathBuf,
        /// The exact scenarios the solution was built on.
        #[arg(long)]
        scenarios: Option<PathBuf>,
    },
    /// Solve an MPS file with the built-in solver; writes the backend solution format.
    SolveMps { mps: PathBuf, sol: PathBuf },
}

fn budget(cli: &Cli) -> Budget {
    Budget {
        time_limit: cli.time_limit.map(Duration::from_secs_f64),
        gap: cli.gap,
        node_limit: cli.node_limit,
        branching: match cli.branching {
            Branching::MostFractional => BranchingRule::MostFractional,
            Branching::FirstFractional => BranchingRule::FirstFractional,
            Branching::Random => BranchingRule::Random,
            Branching::Reliability => BranchingRule::Reliability,
        },
    }
}

fn source(input: &Input) -> Result<ScenarioSource, PipelineError> {
    Ok(match &input.scenarios {
        Some(p) => ScenarioSource::File(read_scenarios(p)?),
        None => ScenarioSource::Synth(SynthConfig {
            hours: input.hours,
            noise: input.noise,
            ..SynthConfig::default()
        }),
    })
}

fn load_solution(path: &Path) -> Result<PartitionSolution, PipelineError> {
    Ok(PartitionSolution::from_json(&read_text(path)?)?)
}

/// The scenario set and model kind a partition or export runs on.
fn model_input(cli: &Cli, net: &FeederNetwork, input: &Input, m: &ModelArgs) -> Result<(ScenarioSet, ModelKind), PipelineError> {
    if m.deterministic {
        let set = match &input.scenarios {
            Some(p) => read_scenarios(p)?,
            None => ScenarioSet::nominal(net, &PartitionGraph::new(net)),
        };
        return Ok((set, ModelKind::Deterministic));
    }
    let src = source(input)?;
    let pool = src.pool(net, derive_seed(cli.seed, &[1]))?;
    let stratified = m.sampling == SamplingArg::Stratified;
    let set = match (m.n, &src) {
        (None, ScenarioSource::File(_)) if !stratified => pool,
        (None, _) => return Err(PipelineError::Input("--n is required when sampling".into())),
        (Some(n), _) => {
            let sampling = if stratified {
                Sampling::Stratified { clusters: m.clusters }
            } else {
                Sampling::Uniform
            };
            Sampler::new(pool, sampling)?.draw(n, stratified, derive_seed(cli.seed, &[2]))?
        }
    };
    let cfg = SaaConfig {
        gamma: m.gamma,
        rho: m.rho,
        weights: None,
    };
    Ok((set, ModelKind::Saa(cfg)))
}

fn run(cli: &Cli) -> Result<i32, PipelineError> {
    let conv = if cli.inclusive_binom {
        BinomConvention::Inclusive
    } else {
        BinomConvention::Exclusive
    };
    match &cli.cmd {
        Cmd::Synth { input, out } => {
            let net = load_network_arg(&input.network)?;
            let cfg = SynthConfig {
                hours: input.hours,
                noise: input.noise,
                ..SynthConfig::default()
            };
            write_scenarios(out, &synthesize(&net, &cfg, derive_seed(cli.seed, &[1]))?)?;
            Ok(0)
        }
        Cmd::Partition {
            input,
            model,
            out,
            dot,
            sample_out,
        } => {
            let net = load_network_arg(&input.network)?;
            let (set, kind) = model_input(cli, &net, input, model)?;
            let r = partition(&net, &set, &kind, &budget(cli), None)?;
            eprintln!(
                "{:?}: objective {:.6}, bound {:.6}, {} nodes, {} microgrids",
                r.result.status,
                r.result.objective,
                r.result.bound,
                r.result.nodes_explored,
                r.solution.microgrids.len()
            );
            write_text(out, &r.solution.to_json())?;
            write_text(&dot.clone().unwrap_or_else(|| out.with_extension("dot")), &r.solution.to_dot(&net))?;
            if let Some(p) = sample_out {
                write_scenarios(p, &r.model.scenarios)?;
            }
            Ok(exit_code(r.result.status))
        }
        Cmd::Assess {
            network,
            scenarios,
            hours,
            noise,
            solution,
            n_prime,
            beta,
            epsilon,
            oracle_bernoulli,
            out,
        } => {
            let seed = derive_seed(cli.seed, &[3]);
            let report = match oracle_bernoulli {
                Some(q) => assess_bernoulli(*q, *n_prime, *beta, *epsilon, seed)?,
                None => {
                    let input = Input {
                        network: network.clone().unwrap_or_default(),
                        scenarios: scenarios.clone(),
                        hours: *hours,
                        noise: *noise,
                    };
                    let net = load_network_arg(&input.network)?;
                    let sol = load_solution(solution.as_deref().unwrap_or(Path::new("")))?;
                    let pool = source(&input)?.pool(&net, derive_seed(cli.seed, &[1]))?;
                    assess(&sol, &net, &pool, *n_prime, *beta, *epsilon, seed)?
                }
            };
            write_text(out, &report.to_json())?;
            Ok(0)
        }
        Cmd::LowerBound {
            input,
            m,
            n,
            gamma,
            epsilon,
            beta,
            rho,
            out,
        } => {
            let net = load_network_arg(&input.network)?;
            let pool = source(input)?.pool(&net, derive_seed(cli.seed, &[1]))?;
            let spec = LowerBoundSpec {
                m: *m,
                n_dprime: *n,
                gamma: *gamma,
                epsilon: *epsilon,
                beta: *beta,
                rho: *rho,
                convention: conv,
            };
            let (report, _) = lower_bound_run(&net, &Sampler::new(pool, Sampling::Uniform)?, &spec, &budget(cli), derive_seed(cli.seed, &[4]))?;
            if !report.found {
                eprintln!("no order statistic qualifies at beta = {beta}; bound is -inf");
            }
            write_text(out, &report.to_json())?;
            Ok(0)
        }
        Cmd::Study {
            input,
            kind,
            grid,
            repeats,
            n,
            gamma,
            rho,
            clusters,
            n_prime,
            beta,
            wall_time,
            out,
        } => {
            let net = load_network_arg(&input.network)?;
            let kind: StudyKind = kind.parse()?;
            let pool = source(input)?.pool(&net, derive_seed(cli.seed, &[1]))?;
            let sampling = if kind == StudyKind::MethodCompare {
                Sampling::Stratified { clusters: *clusters }
            } else {
                Sampling::Uniform
            };
            let spec = StudySpec {
                kind,
                grid: grid.clone(),
                repeats: *repeats,
                seed: derive_seed(cli.seed, &[5]),
                n: *n,
                gamma: *gamma,
                rho: *rho,
                clusters: *clusters,
                n_prime: *n_prime,
                beta: *beta,
                record_time: *wall_time,
            };
            let rows = run_study(&net, &Sampler::new(pool, sampling)?, &spec, &budget(cli))?;
            if matches!(kind, StudyKind::GammaSweep | StudyKind::SwitchSweep) {
                for (rep, p) in monotonicity_violations(&rows) {
                    log::warn!("repeat {rep}: objective rose at {p}");
                }
            }
            let failed = rows.iter().filter(|r| r.objective.is_none()).count();
            if failed > 0 {
                eprintln!("{failed} of {} runs failed; see the status column", rows.len());
            }
            write_text(out, &to_csv(&rows)?)?;
            Ok(0)
        }
        Cmd::ExportMps { input, model, out } => {
            let net = load_network_arg(&input.network)?;
            let (set, kind) = model_input(cli, &net, input, model)?;
            write_text(out, &export_mps(&build(&net, &set, &kind)?.model))?;
            Ok(0)
        }
        Cmd::Check {
            network,
            solution,
            scenarios,
        } => {
            let net = load_network_arg(network)?;
            let sol = load_solution(solution)?;
            let (valid, text) = match scenarios {
                Some(p) => {
                    let r = verify(&sol, &net, &read_scenarios(p)?)?;
                    (r.ok(), serde_json::to_string_pretty(&r).expect("report serializes"))
                }
                None => {
                    let t = DesignChecker::new(&sol, &net)?.topology()?;
                    (t.is_valid(), serde_json::to_string_pretty(&t).expect("report serializes"))
                }
            };
            println!("{text}");
            Ok(if valid { 0 } else { 2 })
        }
        Cmd::SolveMps { mps, sol } => {
            let model = import_mps(&read_text(mps)?).map_err(|e| PipelineError::Input(e.to_string()))?;
            let mut opt = budget(cli).options();
            opt.seed = cli.seed;
            let r = solve_milp(&model, &opt)?;
            write_text(sol, &write_solution_file(&model, &r))?;
            Ok(exit_code(r.status))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(PipelineError::NoSolution(status)) => {
            eprintln!("{status:?}: no feasible partition found");
            ExitCode::from(exit_code(status) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
