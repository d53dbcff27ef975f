use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coordmech::PolicyKind;

mod commands;
mod io;

#[derive(Parser, Debug)]
#[command(name = "coordmech", version, about = "Coordination mechanisms for selfish scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance or a lower-bound bundle.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
    },
    /// Evaluate an assignment under a policy.
    Eval(EvalArgs),
    /// Run best-response dynamics.
    Dynamics(DynamicsArgs),
    /// Run the local-search approximation.
    Approx(ApproxArgs),
    /// Price-of-anarchy report over a suite or a single instance (CSV).
    Poa(PoaArgs),
    /// Run invariant checks; exits non-zero if any fails.
    Check(CheckArgs),
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// Random instance with rational weights and processing times.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, env = "COORDMECH_SEED", default_value_t = 0)]
        seed: u64,
        /// Unit weights.
        #[arg(long)]
        unit: bool,
        /// Probability that a (machine, job) pair is forbidden.
        #[arg(long, default_value_t = 0.0)]
        forbidden: f64,
        #[arg(long, default_value_t = 9)]
        max_proc_num: u32,
        #[arg(long, default_value_t = 4)]
        max_proc_den: u32,
        #[arg(long, default_value_t = 5)]
        max_weight_num: u32,
        #[arg(long, default_value_t = 3)]
        max_weight_den: u32,
    },
    /// Restricted unit-job family with groups of m/x² jobs.
    SmithLb {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
    },
    /// Binary tree with chains.
    TreeLb {
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = Variant::Det)]
        variant: Variant,
        /// Per-rank perturbation (rational, e.g. 1/1048576).
        #[arg(long)]
        delta: Option<String>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Variant {
    Det,
    Rand,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Instance JSON, or a bundle with an "instance" field.
    #[arg(long, short)]
    instance: PathBuf,
    /// Assignment JSON; defaults to the bundle's equilibrium or each job's
    /// fastest machine.
    #[arg(long, short)]
    assignment: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, short, value_parser = parse_policy, default_value = "sr")]
    policy: PolicyKind,
    /// Emit the identity report instead of a cost report.
    #[arg(long)]
    identities: bool,
    /// Also check whether the assignment is a pure equilibrium.
    #[arg(long)]
    nash: bool,
}

#[derive(Args, Debug)]
struct DynamicsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, short, value_parser = parse_policy, default_value = "ps")]
    policy: PolicyKind,
    #[arg(long, default_value = "0")]
    alpha: String,
    #[arg(long, default_value = "1/20")]
    epsilon: String,
    #[arg(long, default_value_t = 100_000)]
    max_steps: usize,
    /// Omit per-step records from the trace.
    #[arg(long)]
    summary: bool,
}

#[derive(Args, Debug)]
struct ApproxArgs {
    /// Single instance; mutually exclusive with --suite.
    #[arg(long, short, conflicts_with = "suite")]
    instance: Option<PathBuf>,
    #[arg(long, short)]
    assignment: Option<PathBuf>,
    /// Named suite; writes one CSV row per instance.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long, default_value = "1/20")]
    epsilon: String,
    #[arg(long, default_value_t = coordmech::dynamics::DEFAULT_APPROX_MAX_STEPS)]
    max_steps: usize,
    /// Compare with brute-force OPT when the state space is within this cap.
    #[arg(long, default_value_t = 1_000_000)]
    opt_cap: u128,
    #[arg(long, env = "COORDMECH_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PoaArgs {
    #[arg(long, short, value_parser = parse_policy)]
    policy: PolicyKind,
    #[arg(long, conflicts_with = "instance")]
    suite: Option<String>,
    #[arg(long, short)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = coordmech::oracle::DEFAULT_STATE_CAP)]
    cap: u128,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Fail unless every worst ratio is at most this value.
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Integer inequality over 0 <= k, k* <= N.
    #[arg(long, value_name = "N")]
    lemma_ineq: Option<u64>,
    /// Leading minors of the κ×κ kernel matrix.
    #[arg(long, value_name = "KAPPA")]
    pd: Option<usize>,
    /// Cost identities on a named suite with this many assignments per instance.
    #[arg(long, value_name = "SUITE")]
    identities: Option<String>,
    #[arg(long, default_value_t = 20)]
    assignments: usize,
    /// Ratio bound on the 1/j² family up to n and on random inputs.
    #[arg(long, value_name = "N")]
    chung: Option<usize>,
    /// Routing reduction equivalence on random unweighted instances.
    #[arg(long, value_name = "COUNT")]
    reduction: Option<usize>,
    /// Exact potential property over this many random moves per policy.
    #[arg(long, value_name = "MOVES")]
    potential: Option<usize>,
    #[arg(long, env = "COORDMECH_SEED", default_value_t = 0)]
    seed: u64,
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse().map_err(|e: coordmech::Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
