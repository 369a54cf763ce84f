//! Command-line front end. Each subcommand is a thin wrapper over a library
//! call and prints JSON, except `simulate`, which writes CSV and SVG.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::constructions::{fixture_by_name, FIXTURE_NAMES};
use crate::election::{CandidateId, Election};
use crate::error::{Error, Result};
use crate::freeride::{audit_election, can_manipulate_by_free_riding, find_free_rides, FreeRideFinding};
use crate::scoring::{Mode, RuleSpec};
use crate::sim::{
    default_rules, emit_csv, emit_svg, records_jsonl, run_experiment, ExperimentConfig, GeometryConfig, SimRule,
};
use crate::solvers::{solve, winner_of_issue, SolveResult, SolverBudget};

#[derive(Parser, Debug)]
#[command(name = "multivote", version, about = "Multi-issue approval elections and free-riding analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the outcome of a rule.
    Solve {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_rule)]
        rule: RuleSpec,
    },
    /// Does a candidate win an issue? Prints true or false.
    Winner {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_rule)]
        rule: RuleSpec,
        #[arg(long)]
        issue: usize,
        /// Candidate label, or its index if no label matches.
        #[arg(long)]
        candidate: String,
    },
    /// Free-riding opportunities of one voter.
    Freeride {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_rule)]
        rule: RuleSpec,
        #[arg(long)]
        voter: usize,
        /// Restrict to single-issue deviations on this issue.
        #[arg(long)]
        issue: Option<usize>,
        /// Only require the deviated outcome to stay approved on the free-ridden issues.
        #[arg(long)]
        generalized: bool,
    },
    /// Successful and harmful single-issue free-rides of every voter.
    Audit {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_rule)]
        rule: RuleSpec,
    },
    /// Run the 2d-Euclidean free-riding experiment.
    Simulate(SimulateArgs),
    /// Print a named proof construction with its expected results.
    Fixture {
        /// One of the names printed by `--list`.
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        #[arg(long)]
        list: bool,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct Input {
    /// Election JSON file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Election JSON given inline.
    #[arg(long)]
    pub json: Option<String>,
}

impl Input {
    fn load(&self) -> Result<Election> {
        match (&self.input, &self.json) {
            (Some(path), None) => Election::from_json(&std::fs::read_to_string(path)?),
            (None, Some(text)) => Election::from_json(text),
            _ => unreachable!("clap enforces exactly one input"),
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub elections: usize,
    /// Comma-separated rules; sequential mode is implied. Defaults to both
    /// family grids.
    #[arg(long, value_delimiter = ',', value_parser = parse_seq_rule)]
    pub rules: Vec<RuleSpec>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub voters: usize,
    #[arg(long, default_value_t = 20)]
    pub issues: usize,
    #[arg(long, default_value_t = 4)]
    pub candidates: usize,
    #[arg(long, default_value_t = 1.2)]
    pub slack: f64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Per-voter JSON-lines records.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    /// Average risk over all eligible voters instead of per election first.
    #[arg(long)]
    pub pooled_q3: bool,
}

fn parse_rule(s: &str) -> std::result::Result<RuleSpec, String> {
    RuleSpec::parse_with_default(s, Mode::Optimization).map_err(|e| e.to_string())
}

fn parse_seq_rule(s: &str) -> std::result::Result<RuleSpec, String> {
    RuleSpec::parse_with_default(s, Mode::Sequential).map_err(|e| e.to_string())
}

/// JSON form of a solver result.
pub fn solve_json(election: &Election, rule: &RuleSpec, result: &SolveResult) -> Value {
    let mut v = json!({
        "rule": rule.to_string(),
        "outcome": result.outcome.labels(election),
        "winners": result.outcome.iter().enumerate()
            .map(|(i, c)| json!({"issue": i, "candidate": c.0, "label": election.issue(i).label(*c)}))
            .collect::<Vec<_>>(),
        "score": result.score,
    });
    if let Some(trace) = &result.trace {
        v["trace"] = trace
            .iter()
            .map(|r| json!({"issue": r.issue, "winner": r.winner.0, "scores": r.scores}))
            .collect();
    }
    v
}

fn findings_json(findings: &[FreeRideFinding]) -> Value {
    json!({ "findings": findings })
}

fn resolve_candidate(election: &Election, issue: usize, text: &str) -> Result<CandidateId> {
    election.check_issue(issue)?;
    let spec = election.issue(issue);
    if let Some(c) = spec.candidate_by_label(text) {
        return Ok(c);
    }
    match text.parse::<usize>() {
        Ok(c) if c < spec.candidate_count() => Ok(CandidateId(c)),
        _ => Err(Error::invalid(format!("issue {issue} has no candidate `{text}`"))),
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<()> {
    Ok(std::fs::write(path, contents)?)
}

/// Executes a parsed command, writing its report to `out`.
pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<()> {
    let text = match cmd {
        Command::Solve { input, rule } => {
            let e = input.load()?;
            let r = solve(&e, rule, &SolverBudget::from_env()?)?;
            pretty(&solve_json(&e, rule, &r))
        }
        Command::Winner {
            input,
            rule,
            issue,
            candidate,
        } => {
            let e = input.load()?;
            let c = resolve_candidate(&e, *issue, candidate)?;
            format!("{}\n", winner_of_issue(&e, rule, *issue, c, &SolverBudget::from_env()?)?)
        }
        Command::Freeride {
            input,
            rule,
            voter,
            issue,
            generalized,
        } => {
            let e = input.load()?;
            let budget = SolverBudget::from_env()?;
            let findings = match issue {
                Some(i) => find_free_rides(&e, rule, *voter, *i, *generalized, &budget)?,
                None => {
                    e.check_voter(*voter)?;
                    let mut all = Vec::new();
                    for i in 0..e.issue_count() {
                        all.extend(find_free_rides(&e, rule, *voter, i, *generalized, &budget)?);
                    }
                    all
                }
            };
            let mut v = findings_json(&findings);
            if issue.is_none() {
                let m = can_manipulate_by_free_riding(&e, rule, *voter, *generalized, false, &budget)?;
                v["manipulation"] = serde_json::to_value(m).expect("finding serializes");
            }
            pretty(&v)
        }
        Command::Audit { input, rule } => {
            let e = input.load()?;
            let report = audit_election(&e, rule, &SolverBudget::from_env()?)?;
            format!("{}\n", report.to_json())
        }
        Command::Simulate(args) => simulate(args)?,
        Command::Fixture { name, list } => {
            if *list {
                FIXTURE_NAMES.iter().map(|n| format!("{n}\n")).collect()
            } else {
                let name = name.as_deref().expect("clap requires a name without --list");
                pretty(&fixture_by_name(name)?.to_json())
            }
        }
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<String> {
    let geometry = GeometryConfig {
        voters: args.voters,
        issues: args.issues,
        candidates: args.candidates,
        slack: args.slack,
        seed: args.seed,
    };
    let rules = if args.rules.is_empty() {
        default_rules(args.voters)
    } else {
        args.rules
            .iter()
            .map(|r| SimRule::from_rule(r, args.voters))
            .collect::<Result<_>>()?
    };
    let config = ExperimentConfig {
        elections: args.elections,
        rules,
        jobs: args.jobs,
        pooled_q3: args.pooled_q3,
        ..ExperimentConfig::with_defaults(geometry)
    };
    let result = run_experiment(&config)?;
    let csv = emit_csv(&result.rows)?;
    if let Some(path) = &args.svg {
        write_file(path, &emit_svg(&result.rows)?)?;
    }
    if let Some(path) = &args.raw {
        write_file(path, &records_jsonl(&result.records))?;
    }
    match &args.out {
        Some(path) => {
            write_file(path, &csv)?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 for domain errors, 2 for usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
