//! Detection and classification of (generalized) free-riding.
//!
//! A voter free-rides on a set of issues by withdrawing approval from each
//! issue's winner while that winner (or, generalized, some candidate the
//! voter truthfully approves) still wins. Satisfaction changes are always
//! measured against the voter's truthful ballots.

use rayon::prelude::*;
use serde::Serialize;

use crate::election::{Ballot, CandidateId, Deviation, Election, Outcome};
use crate::error::{Error, Result};
use crate::scoring::{Mode, Objective, RuleSpec};
use crate::solvers::{decide_round, run_rounds, solve, RoundScratch, SolverBudget};

/// Largest candidate set for which deviating ballots are enumerated.
pub const BALLOT_ENUMERATION_CAP: usize = 12;

/// Cap on deviations tried by a multi-issue manipulation search.
pub const MANIPULATION_SEARCH_CAP: u128 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FreeRideClass {
    Successful,
    Harmful,
    Neutral,
}

impl FreeRideClass {
    pub fn from_delta(delta: i64) -> Self {
        match delta.signum() {
            1 => FreeRideClass::Successful,
            -1 => FreeRideClass::Harmful,
            _ => FreeRideClass::Neutral,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeRideFinding {
    pub voter: usize,
    pub issues: Vec<usize>,
    pub deviation: Deviation,
    pub truthful_outcome: Outcome,
    pub deviated_outcome: Outcome,
    /// Truthful satisfaction with the deviated outcome minus that with the truthful one.
    pub delta_sat: i64,
    pub class: FreeRideClass,
    pub generalized: bool,
}

impl Serialize for FreeRideFinding {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            voter: usize,
            issues: &'a [usize],
            ballots: Vec<(usize, Vec<usize>)>,
            truthful: &'a Outcome,
            deviated: &'a Outcome,
            delta_sat: i64,
            class: FreeRideClass,
            generalized: bool,
        }
        Wire {
            voter: self.voter,
            issues: &self.issues,
            ballots: self
                .deviation
                .replacements
                .iter()
                .map(|(&i, b)| (i, b.iter().map(|c| c.0).collect()))
                .collect(),
            truthful: &self.truthful_outcome,
            deviated: &self.deviated_outcome,
            delta_sat: self.delta_sat,
            class: self.class,
            generalized: self.generalized,
        }
        .serialize(s)
    }
}

/// Checks the free-riding conditions for `deviation` given the truthful outcome.
fn check_free_ride(
    election: &Election,
    rule: &RuleSpec,
    truthful: &Outcome,
    deviation: &Deviation,
    generalized: bool,
    budget: &SolverBudget,
) -> Result<Option<FreeRideFinding>> {
    let v = deviation.voter;
    for (&i, &b) in &deviation.replacements {
        let w = truthful[i];
        if !election.approves(v, i, w) || b.contains(w) {
            return Ok(None);
        }
    }
    let deviated_election = election.apply_deviation(deviation)?;
    let deviated = solve(&deviated_election, rule, budget)?.outcome;
    let holds = deviation.issues().all(|i| {
        if generalized {
            election.approves(v, i, deviated[i])
        } else {
            deviated[i] == truthful[i]
        }
    });
    if !holds {
        return Ok(None);
    }
    let delta = election.sat_unchecked(v, &deviated) as i64 - election.sat_unchecked(v, truthful) as i64;
    Ok(Some(FreeRideFinding {
        voter: v,
        issues: deviation.issues().collect(),
        deviation: deviation.clone(),
        truthful_outcome: truthful.clone(),
        deviated_outcome: deviated,
        delta_sat: delta,
        class: FreeRideClass::from_delta(delta),
        generalized,
    }))
}

/// Is `deviation` a (generalized) free-ride? Returns the finding if so.
pub fn is_free_ride(
    election: &Election,
    rule: &RuleSpec,
    deviation: &Deviation,
    generalized: bool,
    budget: &SolverBudget,
) -> Result<Option<FreeRideFinding>> {
    deviation.check(election)?;
    let truthful = solve(election, rule, budget)?.outcome;
    check_free_ride(election, rule, &truthful, deviation, generalized, budget)
}

/// Ballots on `issue` that exclude `winner`, empty ballot first.
fn deviating_ballots(election: &Election, issue: usize, winner: CandidateId) -> Result<Vec<Ballot>> {
    let m = election.issue(issue).candidate_count();
    if m > BALLOT_ENUMERATION_CAP {
        return Err(Error::TooLarge {
            what: "ballot enumeration candidate",
            size: m as u128,
            cap: BALLOT_ENUMERATION_CAP as u128,
        });
    }
    Ok((0u64..1 << m)
        .map(Ballot::from_bits)
        .filter(|b| !b.contains(winner))
        .collect())
}

fn find_impl(
    election: &Election,
    rule: &RuleSpec,
    voter: usize,
    issue: usize,
    generalized: bool,
    budget: &SolverBudget,
    fast_path: bool,
) -> Result<Vec<FreeRideFinding>> {
    election.check_voter(voter)?;
    election.check_issue(issue)?;
    let truthful = solve(election, rule, budget)?.outcome;
    let w = truthful[issue];
    if !election.approves(voter, issue, w) {
        return Ok(Vec::new());
    }
    // Sequential rules: a ballot only adds nonnegative score to the
    // candidates it names and never changes the winner's score, so the winner
    // survives some ballot iff it survives the empty one; later rounds do not
    // see the ballot once the issue is decided.
    let ballots = if fast_path && !generalized && rule.mode == Mode::Sequential {
        vec![Ballot::EMPTY]
    } else {
        deviating_ballots(election, issue, w)?
    };
    let mut out: Vec<FreeRideFinding> = Vec::new();
    for b in ballots {
        let d = Deviation::single(voter, issue, b);
        if let Some(f) = check_free_ride(election, rule, &truthful, &d, generalized, budget)? {
            if !out.iter().any(|g| g.deviated_outcome == f.deviated_outcome) {
                out.push(f);
            }
        }
    }
    Ok(out)
}

/// Single-issue free-rides of `voter` on `issue`, one representative per
/// distinct deviated outcome.
pub fn find_free_rides(
    election: &Election,
    rule: &RuleSpec,
    voter: usize,
    issue: usize,
    generalized: bool,
    budget: &SolverBudget,
) -> Result<Vec<FreeRideFinding>> {
    find_impl(election, rule, voter, issue, generalized, budget, true)
}

/// As [`find_free_rides`] but always enumerating every deviating ballot.
pub fn find_free_rides_exhaustive(
    election: &Election,
    rule: &RuleSpec,
    voter: usize,
    issue: usize,
    generalized: bool,
    budget: &SolverBudget,
) -> Result<Vec<FreeRideFinding>> {
    find_impl(election, rule, voter, issue, generalized, budget, false)
}

/// Can `voter` free-ride on `issue`? False when the voter does not approve its winner.
pub fn recognize_free_riding(
    election: &Election,
    rule: &RuleSpec,
    voter: usize,
    issue: usize,
    generalized: bool,
    budget: &SolverBudget,
) -> Result<bool> {
    Ok(!find_free_rides(election, rule, voter, issue, generalized, budget)?.is_empty())
}

/// Searches for a free-ride that strictly raises `voter`'s truthful
/// satisfaction. Returns the first witness found, or `None` after an
/// exhaustive search.
pub fn can_manipulate_by_free_riding(
    election: &Election,
    rule: &RuleSpec,
    voter: usize,
    generalized: bool,
    single_issue_only: bool,
    budget: &SolverBudget,
) -> Result<Option<FreeRideFinding>> {
    election.check_voter(voter)?;
    let truthful = solve(election, rule, budget)?.outcome;
    let eligible: Vec<usize> = (0..election.issue_count())
        .filter(|&i| election.approves(voter, i, truthful[i]))
        .collect();

    if single_issue_only {
        for &i in &eligible {
            let found = find_free_rides(election, rule, voter, i, generalized, budget)?;
            if let Some(f) = found.into_iter().find(|f| f.class == FreeRideClass::Successful) {
                return Ok(Some(f));
            }
        }
        return Ok(None);
    }

    let options: Vec<Vec<Ballot>> = eligible
        .iter()
        .map(|&i| deviating_ballots(election, i, truthful[i]))
        .collect::<Result<_>>()?;
    let total = options
        .iter()
        .fold(1u128, |acc, o| acc.saturating_mul(o.len() as u128 + 1))
        .saturating_sub(1);
    if total > MANIPULATION_SEARCH_CAP {
        return Err(Error::TooLarge {
            what: "free-riding deviation",
            size: total,
            cap: MANIPULATION_SEARCH_CAP,
        });
    }
    // Odometer over (skip | ballot) per eligible issue.
    let mut digits = vec![0usize; eligible.len()];
    loop {
        let mut j = 0;
        loop {
            if j == digits.len() {
                return Ok(None);
            }
            digits[j] += 1;
            if digits[j] <= options[j].len() {
                break;
            }
            digits[j] = 0;
            j += 1;
        }
        let d = Deviation::new(
            voter,
            digits
                .iter()
                .zip(&eligible)
                .zip(&options)
                .filter(|((&dg, _), _)| dg > 0)
                .map(|((&dg, &i), opts)| (i, opts[dg - 1])),
        );
        if let Some(f) = check_free_ride(election, rule, &truthful, &d, generalized, budget)? {
            if f.class == FreeRideClass::Successful {
                return Ok(Some(f));
            }
        }
    }
}

/// Single-issue free-ride scan for sequential rules.
///
/// Calls `visit(voter, issue, deviated_winners, delta_sat)` for every pair
/// where withdrawing approval from the issue's winner keeps that winner.
pub(crate) fn scan_sequential(
    election: &Election,
    objective: &Objective,
    mut visit: impl FnMut(usize, usize, &[CandidateId], i64),
) {
    let n = election.voter_count();
    let k = election.issue_count();
    let mut scratch = RoundScratch::default();
    let mut truthful = Vec::with_capacity(k);
    let mut sats = vec![0; n];
    let mut sats_before = Vec::with_capacity(k);
    for i in 0..k {
        sats_before.push(sats.clone());
        let w = decide_round(election, objective, i, &sats, &mut scratch, None);
        for (v, s) in sats.iter_mut().enumerate() {
            if election.approves(v, i, w) {
                *s += 1;
            }
        }
        truthful.push(w);
    }
    let truthful = Outcome(truthful);

    let mut work = election.clone();
    let mut winners = Vec::with_capacity(k);
    let mut run_sats = vec![0; n];
    for v in 0..n {
        let base_sat = election.sat_unchecked(v, &truthful) as i64;
        for i in 0..k {
            let w = truthful[i];
            let original = election.ballot(v, i);
            if !original.contains(w) {
                continue;
            }
            work.set_ballot(v, i, Ballot::EMPTY);
            winners.clear();
            winners.extend_from_slice(&truthful.0[..i]);
            run_sats.copy_from_slice(&sats_before[i]);
            run_rounds(&work, objective, i, &mut winners, &mut run_sats, &mut scratch, None);
            work.set_ballot(v, i, original);
            if winners[i] == w {
                let sat = winners
                    .iter()
                    .enumerate()
                    .filter(|&(j, &c)| election.approves(v, j, c))
                    .count() as i64;
                visit(v, i, &winners, sat - base_sat);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairAudit {
    pub voter: usize,
    pub issue: usize,
    pub successful: bool,
    pub harmful: bool,
    #[serde(skip)]
    pub findings: Vec<FreeRideFinding>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct VoterCounts {
    pub successful_issues: usize,
    pub harmful_issues: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    /// Every (voter, issue) pair, ordered by voter then issue.
    pub pairs: Vec<PairAudit>,
    pub rule: String,
    #[serde(skip)]
    pub voters: Vec<VoterCounts>,
}

impl AuditReport {
    pub fn pair(&self, voter: usize, issue: usize) -> &PairAudit {
        let k = self.pairs.len() / self.voters.len();
        &self.pairs[voter * k + issue]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn pair_from_findings(voter: usize, issue: usize, findings: Vec<FreeRideFinding>) -> PairAudit {
    PairAudit {
        voter,
        issue,
        successful: findings.iter().any(|f| f.class == FreeRideClass::Successful),
        harmful: findings.iter().any(|f| f.class == FreeRideClass::Harmful),
        findings,
    }
}

/// Single-issue free-riding audit over every (voter, issue) pair.
pub fn audit_election(election: &Election, rule: &RuleSpec, budget: &SolverBudget) -> Result<AuditReport> {
    let n = election.voter_count();
    let k = election.issue_count();
    let pairs: Vec<PairAudit> = match rule.mode {
        Mode::Sequential => {
            let objective = rule.objective(n, k)?;
            let truthful = solve(election, rule, budget)?.outcome;
            let mut found: Vec<Vec<FreeRideFinding>> = vec![Vec::new(); n * k];
            scan_sequential(election, &objective, |v, i, deviated, delta| {
                found[v * k + i].push(FreeRideFinding {
                    voter: v,
                    issues: vec![i],
                    deviation: Deviation::single(v, i, Ballot::EMPTY),
                    truthful_outcome: truthful.clone(),
                    deviated_outcome: Outcome(deviated.to_vec()),
                    delta_sat: delta,
                    class: FreeRideClass::from_delta(delta),
                    generalized: false,
                });
            });
            found
                .into_iter()
                .enumerate()
                .map(|(idx, f)| pair_from_findings(idx / k, idx % k, f))
                .collect()
        }
        Mode::Optimization => (0..n * k)
            .into_par_iter()
            .map(|idx| {
                let (v, i) = (idx / k, idx % k);
                find_free_rides(election, rule, v, i, false, budget).map(|f| pair_from_findings(v, i, f))
            })
            .collect::<Result<_>>()?,
    };
    let mut voters = vec![VoterCounts::default(); n];
    for p in &pairs {
        voters[p.voter].successful_issues += p.successful as usize;
        voters[p.voter].harmful_issues += p.harmful as usize;
    }
    Ok(AuditReport {
        pairs,
        rule: rule.to_string(),
        voters,
    })
}
