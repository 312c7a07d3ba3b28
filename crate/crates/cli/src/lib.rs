//! The `iafeas` command line tool.
//!
//! Exit status: 0 feasible or computed, 1 infeasible, 2 usage or input
//! error, 3 indeterminate.

pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use clap::{Parser, Subcommand};
use iafeas::bounds::{bounds_report, proper_subsets, DEFAULT_MAX_EDGES};
use iafeas::crosscheck::{corroborate, DEFAULT_MAX_ITERS};
use iafeas::dof_search::{max_dof, SearchOptions, DEFAULT_USER_CAP};
use iafeas::exact::{default_h, exact_feasibility_test, DEFAULT_REPETITIONS};
use iafeas::feasibility::{feasibility_test_with, FeasibilityError, Tolerances, DEFAULT_TRIALS};
use iafeas::{compute_s, parse_scenario, parse_template, RandomSeed, Scenario};
use num_bigint::BigUint;

use report::{
    edge_list, BatchLine, BoundsDetail, CountReport, CrosscheckJson, DofReport, ExactJson, ExactReport, ProperReport,
    TestReport,
};

pub const EXIT_FEASIBLE: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "iafeas", version, about = "Feasibility of linear interference alignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every random draw; the default is a fixed constant.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Independent rank tests per scenario.
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Relative singular value threshold of the rank test.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Also run the exact-arithmetic test (`test` and `batch`).
    #[arg(long, global = true)]
    exact: bool,
    /// Grid size of the exact test, decimal or `2^k`.
    #[arg(long, global = true, value_parser = parse_big)]
    h: Option<BigUint>,
    /// Repetitions of the exact test.
    #[arg(long, global = true, default_value_t = DEFAULT_REPETITIONS)]
    reps: usize,
    /// Largest link count for the subset properness check.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_EDGES)]
    max_edges: usize,
    /// Worker threads for `batch` and `dofmax`.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide feasibility of a scenario.
    Test { scenario: String },
    /// Print the dimension count `s` (variables minus equations).
    S { scenario: String },
    /// Evaluate the necessary-condition screens.
    Bounds { scenario: String },
    /// Check properness of every subset of links.
    Proper { scenario: String },
    /// Maximize the total DoF; `?` marks stream slots to search.
    Dofmax {
        template: String,
        /// Test every tuple, skipping no candidate.
        #[arg(long)]
        no_prune: bool,
        #[arg(long, default_value_t = DEFAULT_USER_CAP)]
        user_cap: usize,
    },
    /// Exact-arithmetic feasibility test.
    Exact { scenario: String },
    /// Compare the verdict with an iterative leakage-minimization solver.
    Crosscheck {
        scenario: String,
        /// Solver runs, each on fresh channels.
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
    },
    /// Test one scenario per line of a file and print one JSON object per line.
    Batch { path: String },
}

fn parse_big(s: &str) -> Result<BigUint, String> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let base: BigUint = base.trim().parse().map_err(|e| format!("{e}"))?;
        let exp: u32 = exp.trim().parse().map_err(|e| format!("{e}"))?;
        return Ok(base.pow(exp));
    }
    s.parse().map_err(|e| format!("{e}"))
}

/// Settings shared by `test` and `batch`.
#[derive(Debug, Clone)]
struct TestConfig {
    seed: RandomSeed,
    trials: usize,
    tol: Tolerances,
    exact: Option<(BigUint, usize)>,
    max_edges: usize,
}

enum Outcome {
    Feasible,
    Infeasible,
    Indeterminate(String),
    Failed(String),
}

impl Outcome {
    fn code(&self) -> i32 {
        match self {
            Outcome::Feasible => EXIT_FEASIBLE,
            Outcome::Infeasible => EXIT_INFEASIBLE,
            Outcome::Indeterminate(_) => EXIT_INDETERMINATE,
            Outcome::Failed(_) => EXIT_USAGE,
        }
    }
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

fn test_scenario(scenario: &Scenario, cfg: &TestConfig) -> (TestReport, Outcome) {
    let start = Instant::now();
    let bounds = bounds_report(scenario, cfg.max_edges);
    let mut report = TestReport::new(scenario, &bounds, cfg.seed.0, cfg.trials);
    let outcome = match feasibility_test_with(scenario, cfg.seed, cfg.trials, cfg.tol) {
        Ok(v) => {
            report = report.with_verdict(&v);
            if v.feasible {
                Outcome::Feasible
            } else {
                Outcome::Infeasible
            }
        }
        Err(e @ FeasibilityError::Indeterminate { .. }) => Outcome::Indeterminate(e.to_string()),
        Err(e) => Outcome::Failed(e.to_string()),
    };
    if let Some((h, reps)) = &cfg.exact {
        match exact_feasibility_test(scenario, h, *reps, cfg.seed) {
            Ok(v) => report.exact = Some(ExactJson::from(&v)),
            Err(e) => return (report, Outcome::Failed(e.to_string())),
        }
    }
    report.runtime_ms = elapsed_ms(start);
    (report, outcome)
}

fn read_input(arg: &str) -> Result<String, String> {
    let path = Path::new(arg);
    if !arg.is_empty() && path.is_file() {
        std::fs::read_to_string(path)
            .map(|s| s.trim().to_string())
            .map_err(|e| format!("cannot read {arg}: {e}"))
    } else {
        Ok(arg.to_string())
    }
}

fn load_scenario(arg: &str) -> Result<Scenario, String> {
    let text = read_input(arg)?;
    parse_scenario(&text).map_err(|e| format!("invalid scenario {text:?}: {e}"))
}

fn emit<T: serde::Serialize>(out: &mut dyn Write, value: &T) {
    let line = serde_json::to_string(value).expect("reports serialize");
    let _ = writeln!(out, "{line}");
}

fn verdict_word(feasible: Option<bool>) -> &'static str {
    match feasible {
        Some(true) => "feasible",
        Some(false) => "infeasible",
        None => "indeterminate",
    }
}

fn flag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "violated"
    }
}

fn print_test(out: &mut dyn Write, r: &TestReport) {
    let _ = writeln!(out, "scenario  {}", r.scenario);
    let _ = writeln!(out, "s         {}", r.s);
    let subsets = match r.proper_subsets {
        Some(true) => "proper",
        Some(false) => "improper",
        None => "not checked",
    };
    let _ = writeln!(
        out,
        "bounds    pairwise {}, simple {}, subsets {}",
        flag(r.bounds.pairwise),
        flag(r.bounds.simple),
        subsets
    );
    if let Some(b) = r.bounds.symmetric_outer {
        let _ = writeln!(out, "outer     total DoF at most {b}");
    }
    for (i, t) in r.per_trial.iter().enumerate() {
        let _ = writeln!(
            out,
            "trial {}   sigma_min {:.3e}  sigma_max {:.3e}  residual {:.3e}  {}",
            i + 1,
            t.sigma_min,
            t.sigma_max,
            t.residual,
            if t.pass { "surjective" } else { "rank deficient" }
        );
    }
    if let Some(e) = &r.exact {
        let _ = writeln!(out, "exact     {} (ranks {:?} of {})", verdict_word(Some(e.feasible)), e.ranks, e.target_rank);
    }
    let _ = writeln!(out, "verdict   {}", verdict_word(r.feasible));
}

/// Runs the tool on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_FEASIBLE
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, String> {
    let seed = RandomSeed(cli.seed.unwrap_or(RandomSeed::DEFAULT.0));
    if cli.trials == 0 {
        return Err("--trials must be at least 1".into());
    }
    let mut tol = Tolerances::default();
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err("--tol must be a positive number".into());
        }
        tol.relative_sigma = t;
    }
    let h = cli.h.clone().unwrap_or_else(default_h);
    let cfg = TestConfig {
        seed,
        trials: cli.trials,
        tol,
        exact: cli.exact.then(|| (h.clone(), cli.reps)),
        max_edges: cli.max_edges,
    };

    match &cli.command {
        Command::Test { scenario } => {
            let scenario = load_scenario(scenario)?;
            let (report, outcome) = test_scenario(&scenario, &cfg);
            if let Outcome::Failed(msg) = &outcome {
                return Err(msg.clone());
            }
            if cli.json {
                emit(out, &report);
            } else {
                print_test(out, &report);
            }
            if let Outcome::Indeterminate(msg) = &outcome {
                let _ = writeln!(out, "note      {msg}");
            }
            Ok(outcome.code())
        }
        Command::S { scenario } => {
            let scenario = load_scenario(scenario)?;
            let s = compute_s(&scenario);
            if cli.json {
                emit(
                    out,
                    &CountReport {
                        scenario: scenario.to_text(),
                        s,
                        proper_global: s >= 0,
                    },
                );
            } else {
                let _ = writeln!(out, "{s}");
            }
            Ok(EXIT_FEASIBLE)
        }
        Command::Bounds { scenario } => {
            let scenario = load_scenario(scenario)?;
            let detail = BoundsDetail::new(&scenario, &bounds_report(&scenario, cli.max_edges));
            if cli.json {
                emit(out, &detail);
            } else {
                let _ = writeln!(out, "s = {} ({})", detail.s, if detail.proper_global { "proper" } else { "improper" });
                for p in &detail.pairwise {
                    let _ = writeln!(out, "pair {}: {} <= {} {}", p.pair, p.lhs, p.bound, flag(p.ok));
                }
                for e in &detail.simple {
                    let _ = writeln!(out, "link {}: {} < {} {}", e.edge, e.lhs, e.rhs, flag(e.ok));
                }
                if let Some(o) = &detail.symmetric_outer {
                    let _ = writeln!(out, "outer bound: {} <= {} {}", o.total, o.bound, flag(o.ok));
                }
                match (detail.proper_subsets, &detail.witness) {
                    (None, _) => {
                        let _ = writeln!(out, "subsets: not checked (more than {} links)", cli.max_edges);
                    }
                    (Some(true), _) => {
                        let _ = writeln!(out, "subsets: proper");
                    }
                    (Some(false), w) => {
                        let _ = writeln!(out, "subsets: improper, witness {}", w.clone().unwrap_or_default().join(";"));
                    }
                }
            }
            Ok(EXIT_FEASIBLE)
        }
        Command::Proper { scenario } => {
            let scenario = load_scenario(scenario)?;
            let p = proper_subsets(&scenario, cli.max_edges).map_err(|e| e.to_string())?;
            let report = ProperReport {
                scenario: scenario.to_text(),
                proper_global: compute_s(&scenario) >= 0,
                proper_subsets: p.proper,
                witness: p.witness.as_deref().map(edge_list),
            };
            if cli.json {
                emit(out, &report);
            } else if let Some(w) = &report.witness {
                let _ = writeln!(out, "improper: links {} have more equations than variables", w.join(";"));
            } else {
                let _ = writeln!(out, "proper");
            }
            Ok(EXIT_FEASIBLE)
        }
        Command::Dofmax {
            template,
            no_prune,
            user_cap,
        } => {
            let start = Instant::now();
            let text = read_input(template)?;
            let parsed = parse_template(&text).map_err(|e| format!("invalid template {text:?}: {e}"))?;
            let opts = SearchOptions {
                seed,
                trials: cli.trials,
                use_pruning: !no_prune,
                user_cap: *user_cap,
                parallelism: cli.parallel.max(1),
            };
            let result = max_dof(&parsed, &opts).map_err(|e| e.to_string())?;
            let mut report = DofReport::new(&text, &result, seed.0);
            report.runtime_ms = elapsed_ms(start);
            if cli.json {
                emit(out, &report);
            } else {
                let _ = writeln!(out, "max total DoF {}", report.max_total);
                for t in &report.argmax_tuples {
                    let parts: Vec<String> = t.iter().map(usize::to_string).collect();
                    let _ = writeln!(out, "  ({})", parts.join(","));
                }
                let _ = writeln!(out, "tested {}, pruned {}", report.tuples_tested, report.tuples_pruned);
            }
            Ok(EXIT_FEASIBLE)
        }
        Command::Exact { scenario } => {
            let start = Instant::now();
            let scenario = load_scenario(scenario)?;
            let v = exact_feasibility_test(&scenario, &h, cli.reps, seed).map_err(|e| e.to_string())?;
            let report = ExactReport {
                scenario: scenario.to_text(),
                s: v.s,
                verdict: ExactJson::from(&v),
                seed: seed.0,
                runtime_ms: elapsed_ms(start),
            };
            if cli.json {
                emit(out, &report);
            } else {
                let _ = writeln!(out, "scenario  {}", report.scenario);
                let _ = writeln!(out, "s         {}", report.s);
                let _ = writeln!(out, "ranks     {:?} of {}", v.ranks, v.target_rank);
                let _ = writeln!(out, "h         {}", v.h_used);
                let _ = writeln!(out, "bound h   {} digits", v.theoretical_h.to_string().len());
                let _ = writeln!(out, "verdict   {}", verdict_word(Some(v.feasible)));
            }
            Ok(if v.feasible { EXIT_FEASIBLE } else { EXIT_INFEASIBLE })
        }
        Command::Crosscheck {
            scenario,
            runs,
            max_iters,
        } => {
            let start = Instant::now();
            let scenario = load_scenario(scenario)?;
            let verdict = match feasibility_test_with(&scenario, seed, cli.trials, tol) {
                Ok(v) => v,
                Err(e @ FeasibilityError::Indeterminate { .. }) => {
                    let _ = writeln!(out, "{e}");
                    return Ok(EXIT_INDETERMINATE);
                }
                Err(e) => return Err(e.to_string()),
            };
            let seeds: Vec<RandomSeed> = (0..*runs as u64).map(|i| seed.derive(0x5EED + i)).collect();
            let report = CrosscheckJson {
                scenario: scenario.to_text(),
                feasible: verdict.feasible,
                report: corroborate(&scenario, &verdict, &seeds, *max_iters),
                seed: seed.0,
                runtime_ms: elapsed_ms(start),
            };
            if cli.json {
                emit(out, &report);
            } else {
                let _ = writeln!(out, "verdict   {}", verdict_word(Some(report.feasible)));
                let _ = writeln!(
                    out,
                    "solver    {} of {} runs aligned: {:?}",
                    report.report.aligned_runs, report.report.runs, report.report.agreement
                );
            }
            Ok(EXIT_FEASIBLE)
        }
        Command::Batch { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
            for line in run_batch(&text, &cfg, cli.parallel) {
                emit(out, &line);
            }
            Ok(EXIT_FEASIBLE)
        }
    }
}

fn batch_line(line: usize, input: &str, cfg: &TestConfig) -> BatchLine {
    let mut entry = BatchLine {
        line,
        input: input.to_string(),
        error: None,
        report: None,
    };
    match parse_scenario(input) {
        Err(e) => entry.error = Some(e.to_string()),
        Ok(scenario) => {
            let (report, outcome) = test_scenario(&scenario, cfg);
            match outcome {
                Outcome::Feasible | Outcome::Infeasible => entry.report = Some(report),
                Outcome::Indeterminate(msg) => {
                    entry.error = Some(msg);
                    entry.report = Some(report);
                }
                Outcome::Failed(msg) => entry.error = Some(msg),
            }
        }
    }
    entry
}

/// One entry per non-blank, non-comment line, in input order.
fn run_batch(text: &str, cfg: &TestConfig, parallel: usize) -> Vec<BatchLine> {
    let jobs: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let slots: Vec<Mutex<Option<BatchLine>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = parallel.clamp(1, jobs.len().max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(line, input)) = jobs.get(i) else {
                    break;
                };
                *slots[i].lock().expect("slot lock") = Some(batch_line(line, input, cfg));
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every job ran"))
        .collect()
}
