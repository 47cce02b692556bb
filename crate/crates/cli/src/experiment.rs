//! Corpus experiments: acceptance of standard function families against the
//! dictator and soundness references.

use crate::{CliError, Outcome};
use dictlab::boolfn::{wht, BooleanFunction};
use dictlab::distribution::TestDistribution;
use dictlab::rational::{self, to_f64};
use dictlab::tester::{run_t_prime, LevelSelection, TestSchedule, Tester};
use dictlab::Rational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dictator,
    Junta,
    Parity,
    Majority,
    Tribes,
    Random,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_eps")]
    pub eps: String,
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    pub functions: Vec<Family>,
    /// Number of random folded functions when `random` is listed.
    #[serde(default = "default_random_count")]
    pub random_count: usize,
    /// Degree cut-off for the influence column.
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Largest `n` for which acceptance is also enumerated exactly.
    #[serde(default = "default_exact_max_n")]
    pub exact_max_n: usize,
    /// Noise levels of a practical multi-level schedule below `eps`. When set,
    /// every function runs through the multi-level test instead of the single
    /// level one.
    pub levels: Option<Vec<String>>,
    /// Written relative to the config file; stdout when absent.
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn default_k() -> usize {
    7
}
fn default_eps() -> String {
    "1/49".into()
}
fn default_trials() -> u64 {
    100_000
}
fn default_random_count() -> usize {
    2
}
fn default_degree() -> usize {
    2
}
fn default_exact_max_n() -> usize {
    4
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub function: String,
    /// `T` for the single-level test, `T'` for the multi-level one.
    pub test: &'static str,
    pub n: usize,
    pub k: usize,
    pub eps: String,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `num/den`, empty when not computed.
    pub exact: String,
    pub baseline: f64,
    pub max_degree_influence: f64,
    pub claim: String,
}

fn corpus(cfg: &ExperimentConfig) -> Result<Vec<(String, BooleanFunction, &'static str)>, CliError> {
    let n = cfg.n;
    let mut out = Vec::new();
    for family in &cfg.functions {
        match family {
            Family::Dictator => {
                for i in 0..n {
                    out.push((
                        format!("dictator:{i}"),
                        BooleanFunction::dictator(n, i)?,
                        "accepted with probability 1",
                    ));
                }
            }
            Family::Junta => {
                if n < 3 {
                    return Err(CliError::Usage("the junta family needs n >= 3".into()));
                }
                // Multiplexer: x_1 selects between x_0 and x_2. Folded, three relevant coordinates.
                let table: Vec<i8> =
                    (0..8usize).map(|x| if (x >> if x & 2 == 0 { 0 } else { 2 }) & 1 == 1 { -1 } else { 1 }).collect();
                out.push((
                    "junta-mux:3".into(),
                    BooleanFunction::junta(n, &[0, 1, 2], &table)?,
                    "folded 3-junta, influential coordinates so soundness gives no bound",
                ));
            }
            Family::Parity => out.push((
                "parity".into(),
                BooleanFunction::parity(n)?,
                "character of size n, exact value from the closed form",
            )),
            Family::Majority => {
                let m = if n % 2 == 1 { n } else { n - 1 };
                let coords: Vec<usize> = (0..m).collect();
                let table: Vec<i8> =
                    (0..1usize << m).map(|x| if (x.count_ones() as usize) * 2 > m { -1 } else { 1 }).collect();
                out.push((
                    format!("majority:{m}"),
                    BooleanFunction::junta(n, &coords, &table)?,
                    "influential coordinates, soundness gives no bound",
                ));
            }
            Family::Tribes => out.push((
                "tribes:2".into(),
                BooleanFunction::tribes(n, 2.min(n))?,
                "not folded, outside the soundness claim",
            )),
            Family::Random => {
                for r in 0..cfg.random_count {
                    let seed = cfg.seed.wrapping_add(1000 + r as u64);
                    let f = BooleanFunction::random_folded(n, &mut ChaCha8Rng::seed_from_u64(seed))?;
                    out.push((
                        format!("random-folded:{seed}"),
                        f,
                        "random folded reference, compare max_degree_influence with the soundness target",
                    ));
                }
            }
        }
    }
    Ok(out)
}

pub fn rows(cfg: &ExperimentConfig) -> Result<Vec<Row>, CliError> {
    let eps = rational::parse(&cfg.eps)?;
    let tester = Tester::from_distribution(TestDistribution::build(cfg.k, &eps)?);
    let schedule = match &cfg.levels {
        Some(list) => {
            let parsed: Vec<Rational> = list.iter().map(|l| rational::parse(l)).collect::<Result<_, _>>()?;
            Some(TestSchedule::practical(cfg.k, &eps, &parsed)?)
        }
        None => None,
    };
    let mut rows = Vec::new();
    for (idx, (name, f, claim)) in corpus(cfg)?.into_iter().enumerate() {
        let seed = cfg.seed.wrapping_add(idx as u64);
        let with_exact = cfg.n <= cfg.exact_max_n;
        let (report, exact) = match &schedule {
            Some(sched) => {
                let r = run_t_prime(&f, sched, LevelSelection::All, cfg.trials, seed, with_exact)?;
                let exact = r.exact.clone();
                (r, exact)
            }
            None => {
                let r = tester.run(&f, cfg.trials, seed)?;
                let exact = if name == "parity" {
                    Some(tester.character_acceptance(cfg.n as u32)?)
                } else if with_exact {
                    Some(tester.exact_acceptance(&f)?)
                } else {
                    None
                };
                (r, exact)
            }
        };
        rows.push(Row {
            function: name,
            test: if schedule.is_some() { "T'" } else { "T" },
            n: cfg.n,
            k: cfg.k,
            eps: cfg.eps.clone(),
            estimate: report.estimate,
            ci_lo: report.ci_lo,
            ci_hi: report.ci_hi,
            exact: exact.as_ref().map(|e| format!("{}/{}", e.numer(), e.denom())).unwrap_or_default(),
            baseline: report.baseline_f64,
            max_degree_influence: wht(&f).max_degree_influence(cfg.degree),
            claim: claim.into(),
        });
    }
    Ok(rows)
}

pub fn render(rows: &[Row], format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
        }
        Format::Json => serde_json::to_string_pretty(rows).map(|s| s + "\n").map_err(|e| CliError::Io(e.to_string())),
    }
}

pub fn run_file(path: &Path) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let rows = rows(&cfg)?;
    let rendered = render(&rows, cfg.format)?;
    let exact_in_ci = rows.iter().all(|r| {
        r.exact.is_empty()
            || rational::parse(&r.exact).map(|e| (r.ci_lo..=r.ci_hi).contains(&to_f64(&e))).unwrap_or(false)
    });
    let report = match &cfg.output {
        Some(out) => {
            let target = path.parent().unwrap_or(Path::new(".")).join(out);
            std::fs::write(&target, &rendered).map_err(|e| CliError::Io(format!("{}: {e}", target.display())))?;
            json!({ "rows": rows.len(), "output": target.display().to_string(), "exact_within_ci": exact_in_ci })
        }
        None => {
            return Ok(Outcome {
                report: json!({ "rows": rows.len(), "exact_within_ci": exact_in_ci }),
                raw: Some(rendered),
                success: true,
            })
        }
    };
    Ok(Outcome { report, raw: None, success: true })
}
