//! Command implementations behind the `dictlab` binary.
//!
//! Every command returns its report as a JSON value; the binary prints it and
//! maps the outcome to an exit code.

pub mod args;
pub mod experiment;
pub mod verify;

use args::{
    Cli, Command, DistCommand, ExperimentCommand, GaussCommand, PredicateCommand, ScheduleModeArg, TestCommand,
    TestParams,
};
use dictlab::boolfn::{wht_exact, BooleanFunction, MultilinearPoly};
use dictlab::distribution::TestDistribution;
use dictlab::gaussian::{perturbation_check, product_gap_check, solve_beta, CovarianceMatrix};
use dictlab::predicate::{Predicate, PredicateDump};
use dictlab::rational::{self, RationalJson};
use dictlab::tester::{TestSchedule, Tester};
use dictlab::Rational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::fmt;

/// Exit code 1.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit code 2.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Invalid parameters, or input files that are missing or malformed.
    Usage(String),
    /// Writing output failed.
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<dictlab::Error> for CliError {
    fn from(e: dictlab::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_CHECK_FAILED,
        }
    }
}

/// A finished command: its JSON report and whether every check passed.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    /// Printed verbatim instead of `report` when present.
    pub raw: Option<String>,
    pub success: bool,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome { report, raw: None, success: true }
    }

    fn checked(report: Value, success: bool) -> Self {
        Outcome { report, raw: None, success }
    }
}

pub fn test_distribution(params: &TestParams) -> Result<TestDistribution, CliError> {
    let eps = rational::parse(&params.eps)?;
    Ok(TestDistribution::build(params.k, &eps)?)
}

/// Resolves `builtin:...` specs or reads a truth-table file.
pub fn load_function(spec: &str, n: Option<usize>) -> Result<BooleanFunction, CliError> {
    if let Some(rest) = spec.strip_prefix("builtin:") {
        let n = n.ok_or_else(|| CliError::Usage("built-in functions need --n".into()))?;
        let parts: Vec<&str> = rest.split(':').collect();
        let arg = |i: usize| -> Result<u64, CliError> {
            parts
                .get(i)
                .ok_or_else(|| CliError::Usage(format!("{spec}: missing argument")))?
                .parse()
                .map_err(|_| CliError::Usage(format!("{spec}: bad argument")))
        };
        let f = match parts[0] {
            "dictator" => BooleanFunction::dictator(n, arg(1)? as usize)?,
            "parity" => BooleanFunction::parity(n)?,
            "majority" => BooleanFunction::majority(n)?,
            "random" => BooleanFunction::random_folded(n, &mut ChaCha8Rng::seed_from_u64(arg(1)?))?,
            other => return Err(CliError::Usage(format!("unknown built-in {other:?}"))),
        };
        return Ok(f);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| CliError::Usage(format!("{spec}: {e}")))?;
    Ok(BooleanFunction::parse_truth_table(&text)?)
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Verify { params, seed, corrupt } => verify::run(&params, seed.seed, corrupt.as_deref()),
        Command::Test { command } => run_test(command),
        Command::Dist { command } => run_dist(command),
        Command::Predicate { command: PredicateCommand::Dump { k } } => {
            let p = Predicate::for_k(k)?;
            Ok(Outcome::ok(serde_json::to_value(PredicateDump::from(&p)).expect("serializable")))
        }
        Command::Gauss { command } => run_gauss(command),
        Command::Experiment { command: ExperimentCommand::Run { config } } => experiment::run_file(&config),
        Command::Fourier { function, n } => {
            let f = load_function(&function, n)?;
            let spectrum = wht_exact(&f);
            let den = 1i64 << f.n();
            let terms: Vec<Value> = spectrum
                .numerators()
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(mask, &c)| {
                    let coeff = Rational::new(c.into(), den.into());
                    json!({"mask": mask, "size": mask.count_ones(), "coefficient": RationalJson::from(&coeff)})
                })
                .collect();
            let expansion = spectrum.to_expansion();
            Ok(Outcome::ok(json!({
                "n": f.n(),
                "folded": f.is_folded(),
                "degree": expansion.degree(),
                "total_influence": expansion.total_influence(),
                "parseval": spectrum.parseval_holds(),
                "terms": terms,
            })))
        }
    }
}

fn run_test(command: TestCommand) -> Result<Outcome, CliError> {
    match command {
        TestCommand::Run { function, params, n, trials, seed, exact } => {
            let f = load_function(&function, n)?;
            let tester = Tester::from_distribution(test_distribution(&params)?);
            let report = if exact {
                tester.run_with_exact(&f, trials, seed.seed)?
            } else {
                tester.run(&f, trials, seed.seed)?
            };
            let target = report.baseline_f64 + rational::to_f64(tester.distribution().epsilon());
            let mut value = serde_json::to_value(&report).expect("serializable");
            value["function"] = json!(function);
            value["n"] = json!(f.n());
            value["margin_to_soundness_target"] = json!(target - report.estimate);
            value["claim"] =
                json!("dictators are accepted with probability 1; functions far from dictators accept near (2k+1)/2^k");
            Ok(Outcome::ok(value))
        }
        TestCommand::Schedule { params, mode, levels } => {
            let eps = rational::parse(&params.eps)?;
            let schedule = match mode {
                ScheduleModeArg::Paper => {
                    let count = match levels {
                        Some(l) => {
                            l.trim().parse().map_err(|_| CliError::Usage(format!("--levels {l:?} is not a count")))?
                        }
                        None => 3,
                    };
                    TestSchedule::paper_exact(params.k, &eps, count)?
                }
                ScheduleModeArg::Practical => {
                    let list = levels.ok_or_else(|| CliError::Usage("practical mode needs --levels".into()))?;
                    let parsed: Vec<Rational> = list.split(',').map(rational::parse).collect::<Result<_, _>>()?;
                    TestSchedule::practical(params.k, &eps, &parsed)?
                }
            };
            let invariants = schedule.invariants();
            let success = invariants.all();
            let mut value = serde_json::to_value(&schedule).expect("serializable");
            value["invariants"] = serde_json::to_value(&invariants).expect("serializable");
            Ok(Outcome::checked(value, success))
        }
    }
}

fn run_dist(command: DistCommand) -> Result<Outcome, CliError> {
    match command {
        DistCommand::Dump { params } => {
            let d = test_distribution(&params)?;
            let atoms: Vec<Value> = d
                .atoms()
                .iter()
                .map(|a| {
                    let bits: String = (0..d.k()).map(|i| if (a.bits >> i) & 1 == 1 { '1' } else { '0' }).collect();
                    json!({
                        "label": a.label.map(|l| l.to_string()),
                        "bits": bits,
                        "num": a.mass.numer().to_string(),
                        "den": a.mass.denom().to_string(),
                    })
                })
                .collect();
            let moments = d.moment_report();
            let rational = |r: &Rational| RationalJson::from(r);
            Ok(Outcome::ok(json!({
                "k": d.k(),
                "epsilon": rational(d.epsilon()),
                "alpha": rational(d.alpha()),
                "atoms": atoms,
                "moments": {
                    "means": moments.means.iter().map(rational).collect::<Vec<_>>(),
                    "pair_covariance_zero_one": rational(&d.pairwise_covariance()),
                    "min_atom": rational(&d.min_mass()),
                    "connected": moments.connected,
                },
                "rho": moments.rho,
                "rho_bound": d.rho_bound(),
            })))
        }
        DistCommand::Verify { params } => {
            let d = test_distribution(&params)?;
            let result = verify::distribution_checks(&d, None);
            let success = result.iter().all(|c| c.passed);
            Ok(Outcome::checked(json!({ "checks": result, "passed": success }), success))
        }
    }
}

fn run_gauss(command: GaussCommand) -> Result<Outcome, CliError> {
    match command {
        GaussCommand::Verify { k, delta } => {
            let m = solve_beta(k, delta)?;
            let residual = m.residual(&CovarianceMatrix::new(k, delta)?);
            let success = residual <= 1e-12 && m.beta <= delta;
            let report = json!({
                "k": k, "delta": delta, "beta": m.beta, "delta_prime": m.delta_prime,
                "residual": residual, "beta_le_delta": m.beta <= delta,
            });
            Ok(Outcome::checked(report, success))
        }
        GaussCommand::Lemma53 { degree, delta, n, trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.seed);
            let p = MultilinearPoly::random_unit(n, degree, &mut rng)?;
            let r = perturbation_check(&p, delta, trials, seed.seed)?;
            let success = r.within_bound();
            let mut value = serde_json::to_value(&r).expect("serializable");
            value["within_bound"] = json!(success);
            Ok(Outcome::checked(value, success))
        }
        GaussCommand::Gap { k, delta, degree, t, n, trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.seed);
            let p = MultilinearPoly::random_unit(n, degree, &mut rng)?;
            let r = product_gap_check(&p, k, t, delta, trials, seed.seed)?;
            let success = r.within_bound();
            let mut value = serde_json::to_value(&r).expect("serializable");
            value["within_bound"] = json!(success);
            Ok(Outcome::checked(value, success))
        }
    }
}
