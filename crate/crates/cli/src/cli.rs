use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oplocal_core::DEFAULT_CAP;

/// Decide secrecy, commutation and locality properties of finite theories.
///
/// Every command prints a JSON report. Exit codes: 0 the property holds or
/// the construction succeeded, 1 it fails (see the witness), 2 usage or
/// validation error, 3 a closure exceeded --cap.
#[derive(Debug, Parser)]
#[command(name = "oplocal", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Leave out `generated_at` so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// Largest monoid closure to materialize.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    pub cap: usize,

    /// Single-line JSON instead of pretty-printed.
    #[arg(long, global = true)]
    pub compact: bool,

    /// Log progress to stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate the monoid generated by some transforms.
    Closure(ClosureArgs),
    /// States reachable from one state.
    Orbit(OrbitArgs),
    /// Whether two generated monoids commute.
    Commute(PairArgs),
    /// Whether some operations are secret towards an agent.
    Secrecy(SecrecyArgs),
    /// Secrecy in the presence of a global transformation.
    ExtendedSecrecy(ExtendedArgs),
    /// Secrecy along interleaved chains of operations.
    Robustness(RobustnessArgs),
    /// Whether operations leave a perspective unchanged.
    Terminality(TerminalityArgs),
    /// Build agents whose operations are secret from each other.
    Derive(DeriveArgs),
    /// Whether two monoids commute as seen through a perspective.
    PerceivedCommute(PerceivedArgs),
    /// Non-signalling checks for a two-bit box.
    GptCheck(GptArgs),
    /// Compare marginal non-signalling with mutual secrecy on many boxes.
    NsEquivalence(NsArgs),
    /// First time at which one agent can signal to another.
    SignalTime(SignalArgs),
    /// Embed agents or graph nodes in Euclidean space.
    Localize(LocalizeArgs),
}

#[derive(Debug, Args)]
pub struct ClosureArgs {
    /// Theory file.
    pub theory: PathBuf,
    /// Agent name or comma-separated transform names.
    #[arg(long)]
    pub ops: String,
    /// Include the full table of every element.
    #[arg(long)]
    pub tables: bool,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    pub theory: PathBuf,
    #[arg(long)]
    pub ops: String,
    /// State index or label.
    #[arg(long)]
    pub state: String,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    pub theory: PathBuf,
    #[arg(long)]
    pub left: String,
    #[arg(long)]
    pub right: String,
}

#[derive(Debug, Args)]
pub struct SecrecyArgs {
    pub theory: PathBuf,
    /// Operations that should stay hidden.
    #[arg(long)]
    pub secret: String,
    /// Observing agent.
    #[arg(long)]
    pub agent: String,
    /// Only consider post-processing words up to this length.
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtendedArgs {
    pub theory: PathBuf,
    #[arg(long)]
    pub secret: String,
    #[arg(long)]
    pub agent: String,
    /// Global transformation: transform or dynamics name, or a shorthand.
    #[arg(long)]
    pub global: String,
    /// Skip the general check and use the commuting shortcut.
    #[arg(long)]
    pub commuting: bool,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    pub theory: PathBuf,
    #[arg(long)]
    pub secret: String,
    #[arg(long)]
    pub agent: String,
    #[arg(long)]
    pub global: Option<String>,
    /// Transformation applied before the chain.
    #[arg(long)]
    pub pre: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub max_len: usize,
    /// Samples when the pattern space is too large to enumerate.
    #[arg(long, default_value_t = oplocal_core::secrecy::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TerminalityArgs {
    pub theory: PathBuf,
    #[arg(long)]
    pub secret: String,
    /// Agent name or partition literal.
    #[arg(long)]
    pub perspective: String,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    pub theory: PathBuf,
    /// Alice's operations.
    #[arg(long)]
    pub ta: String,
    /// Bob's operations.
    #[arg(long)]
    pub tb: String,
    /// Drop the commutation requirement and build Bob's perspective directly.
    #[arg(long)]
    pub general: bool,
    /// Global transformation for --general.
    #[arg(long, requires = "general")]
    pub global: Option<String>,
    /// Write the generator graph of --ta, colored by the derived classes.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PerceivedArgs {
    pub theory: PathBuf,
    #[arg(long)]
    pub left: String,
    #[arg(long)]
    pub right: String,
    /// Agent name or partition literal.
    #[arg(long)]
    pub perspective: String,
}

#[derive(Debug, Args)]
pub struct GptArgs {
    /// Theory file with a `channels` section; not needed for built-in boxes.
    pub theory: Option<PathBuf>,
    /// Box name: a channel of the theory or pr_box, swap, xor_leak, local_coins.
    #[arg(long = "box")]
    pub box_name: String,
    /// Total-variation tolerance.
    #[arg(long, default_value_t = oplocal_core::gpt::TOL)]
    pub eps: f64,
}

#[derive(Debug, Args)]
pub struct NsArgs {
    pub theory: Option<PathBuf>,
    /// Extra box to include besides the built-in ones.
    #[arg(long = "box")]
    pub box_name: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also allow post-processing that mixes both bits.
    #[arg(long)]
    pub unrestricted: bool,
}

#[derive(Debug, Args)]
pub struct SignalArgs {
    pub theory: PathBuf,
    /// Sending agent (acts with its operations).
    #[arg(long)]
    pub from: String,
    /// Receiving agent (observes through its perspective).
    #[arg(long)]
    pub to: String,
    /// One time step: dynamics or transform name, or a shorthand.
    #[arg(long)]
    pub dynamics: String,
    #[arg(long, default_value_t = 32)]
    pub t_max: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    ClassicalMds,
    StressMajorization,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    /// Theory file (model-derived distances).
    #[arg(required_unless_present = "edges", conflicts_with = "edges")]
    pub theory: Option<PathBuf>,
    /// Graph file (hop distances): JSON `{"nodes", "edges", "positions"?}` or
    /// lines of `i j`.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Agents to place; all agents of the theory by default.
    #[arg(long, value_delimiter = ',')]
    pub agents: Vec<String>,
    #[arg(long, required_unless_present = "edges")]
    pub dynamics: Option<String>,
    #[arg(long, default_value_t = 32)]
    pub t_max: usize,
    /// Distance per time step.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, value_enum, default_value_t = Method::ClassicalMds)]
    pub method: Method,
    /// Write a scatter plot of the first two coordinates.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}
