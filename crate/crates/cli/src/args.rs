use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "dictlab", version, about = "Hadamard-predicate dictatorship test toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct TestParams {
    /// Predicate arity, of the form 2^m - 1.
    #[arg(long, default_value_t = 7)]
    pub k: usize,
    /// Noise parameter as a rational, e.g. 1/49.
    #[arg(long, default_value = "1/49")]
    pub eps: String,
}

#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    #[arg(long, env = "DICTLAB_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the built-in verification suite.
    Verify {
        #[command(flatten)]
        params: TestParams,
        #[command(flatten)]
        seed: SeedArg,
        /// Perturb the measured value of one named check.
        #[arg(long)]
        corrupt: Option<String>,
    },
    /// Run a dictatorship test or inspect its schedule.
    Test {
        #[command(subcommand)]
        command: TestCommand,
    },
    /// Inspect the test distribution.
    Dist {
        #[command(subcommand)]
        command: DistCommand,
    },
    /// Inspect the predicate.
    Predicate {
        #[command(subcommand)]
        command: PredicateCommand,
    },
    /// Gaussian constructions and lemmas.
    Gauss {
        #[command(subcommand)]
        command: GaussCommand,
    },
    /// Corpus experiments driven by a JSON config.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
    /// Fourier spectrum of a function.
    Fourier {
        /// Function source, see `test run --help`.
        #[arg(long = "fn")]
        function: String,
        /// Arity for built-in functions.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TestCommand {
    /// Monte Carlo (and optionally exact) acceptance of one function.
    Run {
        /// A truth-table file, or builtin:dictator:<i>, builtin:parity,
        /// builtin:majority, builtin:random:<seed>.
        #[arg(long = "fn")]
        function: String,
        #[command(flatten)]
        params: TestParams,
        /// Arity for built-in functions.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[command(flatten)]
        seed: SeedArg,
        /// Also compute the exact acceptance probability by enumeration.
        #[arg(long)]
        exact: bool,
    },
    /// Parameter schedule of the multi-level test.
    Schedule {
        #[command(flatten)]
        params: TestParams,
        #[arg(long, value_enum, default_value_t = ScheduleModeArg::Paper)]
        mode: ScheduleModeArg,
        /// Paper mode: number of levels to materialize. Practical mode:
        /// comma-separated decreasing rationals.
        #[arg(long)]
        levels: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleModeArg {
    Paper,
    Practical,
}

#[derive(Debug, Subcommand)]
pub enum DistCommand {
    /// Atom table with exact masses.
    Dump {
        #[command(flatten)]
        params: TestParams,
    },
    /// Exact moment checks of the distribution.
    Verify {
        #[command(flatten)]
        params: TestParams,
    },
}

#[derive(Debug, Subcommand)]
pub enum PredicateCommand {
    /// Accepting strings with their labels.
    Dump {
        #[arg(long, default_value_t = 7)]
        k: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum GaussCommand {
    /// Square-root matrix and its residual.
    Verify {
        #[arg(long, default_value_t = 7)]
        k: usize,
        #[arg(long, default_value_t = 2.0 / 43.0)]
        delta: f64,
    },
    /// Perturbation robustness of a random low-degree polynomial.
    Lemma53 {
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 20_000)]
        trials: u64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Correlated against independent product expectations.
    Gap {
        #[arg(long, default_value_t = 7)]
        k: usize,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 20_000)]
        trials: u64,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}
