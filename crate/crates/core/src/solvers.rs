//! Winner determination for optimization-based and sequential rules.
//!
//! Optimization search visits outcomes lexicographically in tie-break
//! order and only replaces the incumbent on a strict improvement, so the
//! first maximizer found is the tie-break-minimal one.

use std::cmp::Ordering;

use crate::election::{CandidateId, Election, Outcome, SortedSatVector};
use crate::error::{Error, Result};
use crate::scoring::{
    owa_family_vector, owa_score, thiele_score, ExactComparator, Mode, Objective, OwaWeights, RuleFamily,
    RuleSpec, ScoreValue, ScoreWitness,
};

/// Environment variable overriding [`SolverBudget::max_outcomes`].
pub const BUDGET_ENV: &str = "MULTIVOTE_BUDGET";

/// Outcome-space cap of the brute-force oracle.
pub const ORACLE_CAP: u128 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverBudget {
    pub max_outcomes: u64,
    pub enable_pruning: bool,
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget {
            max_outcomes: 1 << 24,
            enable_pruning: true,
        }
    }
}

impl SolverBudget {
    pub fn new(max_outcomes: u64, enable_pruning: bool) -> Result<Self> {
        if max_outcomes == 0 {
            return Err(Error::invalid("solver budget must allow at least one outcome"));
        }
        Ok(SolverBudget {
            max_outcomes,
            enable_pruning,
        })
    }

    /// Default budget, with `MULTIVOTE_BUDGET` applied if set.
    pub fn from_env() -> Result<Self> {
        let mut b = SolverBudget::default();
        if let Ok(v) = std::env::var(BUDGET_ENV) {
            let cap: u64 = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("{BUDGET_ENV} must be a positive integer, got `{v}`")))?;
            b = SolverBudget::new(cap, b.enable_pruning)?;
        }
        Ok(b)
    }
}

/// Candidate scores of one sequential round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    pub issue: usize,
    /// One entry per candidate, in candidate-index order. Thiele rules
    /// record the marginal gain; OWA rules the score of the extended prefix;
    /// comparator rules its sorted satisfaction vector.
    pub scores: Vec<ScoreWitness>,
    pub winner: CandidateId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub outcome: Outcome,
    pub score: ScoreWitness,
    pub trace: Option<Vec<RoundTrace>>,
}

/// Solves with whichever mode the rule names.
pub fn solve(election: &Election, rule: &RuleSpec, budget: &SolverBudget) -> Result<SolveResult> {
    match rule.mode {
        Mode::Optimization => solve_optimization(election, rule, budget),
        Mode::Sequential => solve_sequential(election, rule),
    }
}

pub fn solve_optimization(election: &Election, rule: &RuleSpec, budget: &SolverBudget) -> Result<SolveResult> {
    if rule.mode != Mode::Optimization {
        return Err(Error::rule(format!("{rule} is not an optimization rule")));
    }
    let space = election.outcome_space();
    if space > budget.max_outcomes as u128 {
        return Err(Error::TooLarge {
            what: "outcome",
            size: space,
            cap: budget.max_outcomes as u128,
        });
    }
    let objective = rule.objective(election.voter_count(), election.issue_count())?;
    let mut search = Search::new(election, &objective, budget.enable_pruning);
    match &objective {
        Objective::Thiele(t) => search.thiele(0, t.zero()),
        _ => search.generic(0),
    }
    let (winners, score) = search.best.expect("outcome space is nonempty");
    Ok(SolveResult {
        outcome: Outcome(winners),
        score,
        trace: None,
    })
}

struct Search<'a> {
    election: &'a Election,
    objective: &'a Objective,
    prune: bool,
    sats: Vec<usize>,
    current: Vec<CandidateId>,
    best: Option<(Vec<CandidateId>, ScoreWitness)>,
}

impl<'a> Search<'a> {
    fn new(election: &'a Election, objective: &'a Objective, prune: bool) -> Self {
        Search {
            election,
            objective,
            prune,
            sats: vec![0; election.voter_count()],
            current: Vec::with_capacity(election.issue_count()),
            best: None,
        }
    }

    fn offer(&mut self, score: ScoreWitness) {
        let better = match &self.best {
            None => true,
            Some((_, b)) => self.objective.compare(&score, b) == Ordering::Greater,
        };
        if better {
            self.best = Some((self.current.clone(), score));
        }
    }

    fn choose(&mut self, issue: usize, c: CandidateId) {
        for v in 0..self.sats.len() {
            if self.election.approves(v, issue, c) {
                self.sats[v] += 1;
            }
        }
        self.current.push(c);
    }

    fn unchoose(&mut self, issue: usize, c: CandidateId) {
        for v in 0..self.sats.len() {
            if self.election.approves(v, issue, c) {
                self.sats[v] -= 1;
            }
        }
        self.current.pop();
    }

    fn generic(&mut self, depth: usize) {
        if depth == self.election.issue_count() {
            let score = self.objective.evaluate(&self.sats);
            self.offer(score);
            return;
        }
        let election = self.election;
        for &c in election.issue(depth).tiebreak() {
            let c = CandidateId(c);
            self.choose(depth, c);
            self.generic(depth + 1);
            self.unchoose(depth, c);
        }
    }

    fn thiele(&mut self, depth: usize, partial: ScoreValue) {
        let Objective::Thiele(table) = self.objective else {
            unreachable!()
        };
        let election = self.election;
        if depth == election.issue_count() {
            self.offer(ScoreWitness::Value(partial));
            return;
        }
        if self.prune {
            if let Some((_, ScoreWitness::Value(best))) = &self.best {
                // Satisfactions only grow and f is nonincreasing, so each
                // remaining issue adds at most its best marginal from here.
                let mut bound = partial.clone();
                for i in depth..election.issue_count() {
                    let best_marginal = (0..election.issue(i).candidate_count())
                        .map(|c| marginal(election, table, &self.sats, i, CandidateId(c)))
                        .max_by(|a, b| a.compare(b))
                        .expect("issues have candidates");
                    bound.add_assign(&best_marginal);
                }
                if bound.cannot_beat(best) {
                    return;
                }
            }
        }
        for &c in election.issue(depth).tiebreak() {
            let c = CandidateId(c);
            let gain = marginal(election, table, &self.sats, depth, c);
            self.choose(depth, c);
            self.thiele(depth + 1, partial.add(&gain));
            self.unchoose(depth, c);
        }
    }
}

fn marginal(
    election: &Election,
    table: &crate::scoring::ThieleTable,
    sats: &[usize],
    issue: usize,
    c: CandidateId,
) -> ScoreValue {
    let mut acc = table.zero();
    for (v, &s) in sats.iter().enumerate() {
        if election.approves(v, issue, c) {
            acc.add_assign(table.f(s + 1));
        }
    }
    acc
}

/// Reusable buffers for sequential rounds.
#[derive(Default)]
pub(crate) struct RoundScratch {
    best: Vec<usize>,
    cand: Vec<usize>,
}

/// Picks the winner of `issue` given the satisfactions accumulated so far.
pub(crate) fn decide_round(
    election: &Election,
    objective: &Objective,
    issue: usize,
    sats: &[usize],
    scratch: &mut RoundScratch,
    mut trace: Option<&mut Vec<ScoreWitness>>,
) -> CandidateId {
    let spec = election.issue(issue);
    if let Some(t) = trace.as_deref_mut() {
        t.clear();
        t.resize(spec.candidate_count(), ScoreWitness::Value(ScoreValue::Float(f64::NAN)));
    }
    let mut winner: Option<CandidateId> = None;
    match objective {
        Objective::Comparator(cmp) => {
            for &c in spec.tiebreak() {
                let c = CandidateId(c);
                scratch.cand.clear();
                scratch
                    .cand
                    .extend(sats.iter().enumerate().map(|(v, &s)| s + election.approves(v, issue, c) as usize));
                scratch.cand.sort_unstable();
                if let Some(t) = trace.as_deref_mut() {
                    t[c.0] = ScoreWitness::Profile(SortedSatVector::from_unsorted(scratch.cand.clone()));
                }
                if winner.is_none() || cmp.compare_slices(&scratch.cand, &scratch.best) == Ordering::Greater {
                    std::mem::swap(&mut scratch.cand, &mut scratch.best);
                    winner = Some(c);
                }
            }
        }
        Objective::Thiele(table) => {
            let mut best: Option<ScoreValue> = None;
            for &c in spec.tiebreak() {
                let c = CandidateId(c);
                let gain = marginal(election, table, sats, issue, c);
                if let Some(t) = trace.as_deref_mut() {
                    t[c.0] = ScoreWitness::Value(gain.clone());
                }
                if best.as_ref().is_none_or(|b| gain.compare(b) == Ordering::Greater) {
                    best = Some(gain);
                    winner = Some(c);
                }
            }
        }
        Objective::Owa(_) => {
            let mut best: Option<ScoreWitness> = None;
            for &c in spec.tiebreak() {
                let c = CandidateId(c);
                scratch.cand.clear();
                scratch
                    .cand
                    .extend(sats.iter().enumerate().map(|(v, &s)| s + election.approves(v, issue, c) as usize));
                let score = objective.evaluate(&scratch.cand);
                if let Some(t) = trace.as_deref_mut() {
                    t[c.0] = score.clone();
                }
                if best.as_ref().is_none_or(|b| objective.compare(&score, b) == Ordering::Greater) {
                    best = Some(score);
                    winner = Some(c);
                }
            }
        }
    }
    winner.expect("issues have candidates")
}

/// Runs sequential rounds `start..k`, extending `winners` and updating `sats`.
pub(crate) fn run_rounds(
    election: &Election,
    objective: &Objective,
    start: usize,
    winners: &mut Vec<CandidateId>,
    sats: &mut [usize],
    scratch: &mut RoundScratch,
    mut trace: Option<&mut Vec<RoundTrace>>,
) {
    let mut scores = Vec::new();
    for issue in start..election.issue_count() {
        let w = decide_round(
            election,
            objective,
            issue,
            sats,
            scratch,
            trace.is_some().then_some(&mut scores),
        );
        for (v, s) in sats.iter_mut().enumerate() {
            if election.approves(v, issue, w) {
                *s += 1;
            }
        }
        winners.push(w);
        if let Some(t) = trace.as_deref_mut() {
            t.push(RoundTrace {
                issue,
                scores: std::mem::take(&mut scores),
                winner: w,
            });
        }
    }
}

/// Decides issues in index order, each maximizing the score of the prefix outcome.
pub fn solve_sequential(election: &Election, rule: &RuleSpec) -> Result<SolveResult> {
    if rule.mode != Mode::Sequential {
        return Err(Error::rule(format!("{rule} is not a sequential rule")));
    }
    let objective = rule.objective(election.voter_count(), election.issue_count())?;
    let mut winners = Vec::with_capacity(election.issue_count());
    let mut sats = vec![0; election.voter_count()];
    let mut trace = Vec::with_capacity(election.issue_count());
    run_rounds(
        election,
        &objective,
        0,
        &mut winners,
        &mut sats,
        &mut RoundScratch::default(),
        Some(&mut trace),
    );
    Ok(SolveResult {
        outcome: Outcome(winners),
        score: objective.evaluate(&sats),
        trace: Some(trace),
    })
}

/// Recomputes the candidate scores of the round following `prefix`.
pub fn round_scores(election: &Election, rule: &RuleSpec, prefix: &[CandidateId]) -> Result<Vec<ScoreWitness>> {
    let issue = prefix.len();
    election.check_issue(issue)?;
    let objective = rule.objective(election.voter_count(), election.issue_count())?;
    let sats: Vec<usize> = (0..election.voter_count())
        .map(|v| {
            prefix
                .iter()
                .enumerate()
                .filter(|&(i, &w)| election.approves(v, i, w))
                .count()
        })
        .collect();
    let mut scores = Vec::new();
    decide_round(
        election,
        &objective,
        issue,
        &sats,
        &mut RoundScratch::default(),
        Some(&mut scores),
    );
    Ok(scores)
}

/// Does `candidate` win `issue` under `rule`?
pub fn winner_of_issue(
    election: &Election,
    rule: &RuleSpec,
    issue: usize,
    candidate: CandidateId,
    budget: &SolverBudget,
) -> Result<bool> {
    election.check_issue(issue)?;
    if candidate.0 >= election.issue(issue).candidate_count() {
        return Err(Error::invalid(format!("candidate {candidate} out of range on issue {issue}")));
    }
    Ok(solve(election, rule, budget)?.outcome[issue] == candidate)
}

/// Plain enumeration over all outcomes with scores computed from scratch.
/// Independent of the search above; meant as a test oracle.
pub fn brute_force_oracle(election: &Election, rule: &RuleSpec) -> Result<SolveResult> {
    let space = election.outcome_space();
    if space > ORACLE_CAP {
        return Err(Error::TooLarge {
            what: "oracle outcome",
            size: space,
            cap: ORACLE_CAP,
        });
    }
    let n = election.voter_count();
    let k = election.issue_count();
    let score_of = |o: &Outcome| -> Result<ScoreWitness> {
        Ok(match &rule.family {
            RuleFamily::Thiele(f) => ScoreWitness::Value(thiele_score(f, election, o)?),
            RuleFamily::Owa(w) => {
                let alpha = match w {
                    OwaWeights::Family(fam) => owa_family_vector(*fam, n, k)?,
                    OwaWeights::Explicit(v) => v.clone(),
                };
                ScoreWitness::Value(owa_score(&alpha, &election.sorted_sat_vector(o)?)?)
            }
            RuleFamily::Comparator(_) => ScoreWitness::Profile(election.sorted_sat_vector(o)?),
        })
    };
    let better = |a: &ScoreWitness, b: &ScoreWitness| -> Result<Ordering> {
        Ok(match (&rule.family, a, b) {
            (RuleFamily::Comparator(c), ScoreWitness::Profile(s), ScoreWitness::Profile(t)) => {
                ExactComparator::compare(*c, s, t)?
            }
            (_, ScoreWitness::Value(x), ScoreWitness::Value(y)) => x.compare(y),
            _ => unreachable!(),
        })
    };

    let sizes: Vec<usize> = election.issues().iter().map(|s| s.candidate_count()).collect();
    let mut digits = vec![0usize; k];
    let mut best: Option<(Outcome, ScoreWitness)> = None;
    loop {
        let o = Outcome::from_indices(digits.iter().copied());
        let s = score_of(&o)?;
        let replace = match &best {
            None => true,
            Some((bo, bs)) => match better(&s, bs)? {
                Ordering::Greater => true,
                Ordering::Equal => election.compare_outcomes_tiebreak(&o, bo)? == Ordering::Less,
                Ordering::Less => false,
            },
        };
        if replace {
            best = Some((o, s));
        }
        // odometer in plain index order
        let mut i = k;
        loop {
            if i == 0 {
                let (outcome, score) = best.expect("nonempty");
                return Ok(SolveResult {
                    outcome,
                    score,
                    trace: None,
                });
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < sizes[i] {
                break;
            }
            digits[i] = 0;
        }
    }
}
