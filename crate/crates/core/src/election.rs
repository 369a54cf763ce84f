//! Election data model: issues, approval ballots, outcomes and satisfaction.
//!
//! Voters, issues and candidates are addressed by dense 0-based indices.
//! Candidate labels are display metadata only.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard upper bound on candidates per issue (ballots are 64-bit sets).
pub const MAX_CANDIDATES: usize = 64;

/// Issue-local candidate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateId(pub usize);

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An approval ballot on one issue: a set of candidate indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Ballot(u64);

impl Ballot {
    pub const EMPTY: Ballot = Ballot(0);

    pub fn from_bits(bits: u64) -> Self {
        Ballot(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn single(c: CandidateId) -> Self {
        debug_assert!(c.0 < MAX_CANDIDATES);
        Ballot(1 << c.0)
    }

    pub fn contains(self, c: CandidateId) -> bool {
        c.0 < MAX_CANDIDATES && self.0 & (1 << c.0) != 0
    }

    pub fn with(self, c: CandidateId) -> Self {
        Ballot(self.0 | (1 << c.0))
    }

    pub fn without(self, c: CandidateId) -> Self {
        Ballot(self.0 & !(1 << c.0))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Candidates in increasing index order.
    pub fn iter(self) -> impl Iterator<Item = CandidateId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let c = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(CandidateId(c))
            }
        })
    }
}

impl FromIterator<CandidateId> for Ballot {
    fn from_iter<T: IntoIterator<Item = CandidateId>>(iter: T) -> Self {
        iter.into_iter().fold(Ballot::EMPTY, Ballot::with)
    }
}

/// One issue: its candidates and its tie-breaking order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssueSpec {
    labels: Vec<String>,
    tiebreak: Vec<usize>,
    rank: Vec<usize>,
}

impl IssueSpec {
    /// Issue with the identity tie-break order.
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let tiebreak = (0..labels.len()).collect();
        Self::with_tiebreak(labels, tiebreak)
    }

    /// `tiebreak[0]` is the most preferred candidate index.
    pub fn with_tiebreak<S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        tiebreak: Vec<usize>,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut violations = Vec::new();
        check_issue(0, labels.len(), &tiebreak, &mut violations);
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        let mut rank = vec![0; labels.len()];
        for (pos, &c) in tiebreak.iter().enumerate() {
            rank[c] = pos;
        }
        Ok(IssueSpec {
            labels,
            tiebreak,
            rank,
        })
    }

    pub fn candidate_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, c: CandidateId) -> &str {
        &self.labels[c.0]
    }

    /// Candidates from most to least preferred by tie-breaking.
    pub fn tiebreak(&self) -> &[usize] {
        &self.tiebreak
    }

    /// Position of `c` in the tie-break order (0 = most preferred).
    pub fn rank(&self, c: CandidateId) -> usize {
        self.rank[c.0]
    }

    pub fn has_identity_tiebreak(&self) -> bool {
        self.tiebreak.iter().enumerate().all(|(i, &c)| i == c)
    }

    pub fn candidate_by_label(&self, label: &str) -> Option<CandidateId> {
        self.labels.iter().position(|l| l == label).map(CandidateId)
    }

    fn all(&self) -> Ballot {
        (0..self.labels.len()).map(CandidateId).collect()
    }
}

fn check_issue(issue: usize, candidates: usize, tiebreak: &[usize], out: &mut Vec<String>) {
    if candidates == 0 {
        out.push(format!("issue {issue}: candidate set is empty"));
    }
    if candidates > MAX_CANDIDATES {
        out.push(format!(
            "issue {issue}: {candidates} candidates exceeds the supported maximum of {MAX_CANDIDATES}"
        ));
    }
    if tiebreak.len() != candidates {
        out.push(format!(
            "issue {issue}: tiebreak has {} entries for {candidates} candidates",
            tiebreak.len()
        ));
    }
    let mut seen = vec![false; candidates];
    for &c in tiebreak {
        if c >= candidates {
            out.push(format!("issue {issue}: tiebreak references candidate {c} out of range"));
        } else if std::mem::replace(&mut seen[c], true) {
            out.push(format!("issue {issue}: tiebreak repeats candidate {c}"));
        }
    }
}

/// A multi-issue approval election.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Election {
    issues: Vec<IssueSpec>,
    voters: usize,
    // voter-major: approvals[v * k + i]
    approvals: Vec<Ballot>,
}

impl Election {
    /// `approvals[v][i]` lists the candidates voter `v` approves on issue `i`.
    pub fn new(issues: Vec<IssueSpec>, approvals: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let raw = RawElection {
            issues: issues
                .iter()
                .map(|s| RawIssue {
                    candidates: s.labels.clone(),
                    tiebreak: Some(s.tiebreak.clone()),
                })
                .collect(),
            voters: approvals.len(),
            approvals,
        };
        Election::try_from(raw)
    }

    /// Builds an election directly from ballots.
    pub fn from_ballots(issues: Vec<IssueSpec>, approvals: Vec<Vec<Ballot>>) -> Result<Self> {
        let k = issues.len();
        let mut violations = Vec::new();
        if k == 0 {
            violations.push("election has no issues".to_string());
        }
        if approvals.is_empty() {
            violations.push("election has no voters".to_string());
        }
        let mut flat = Vec::with_capacity(approvals.len() * k);
        for (v, row) in approvals.iter().enumerate() {
            if row.len() != k {
                violations.push(format!("voter {v}: {} ballots for {k} issues", row.len()));
                continue;
            }
            for (i, (&b, spec)) in row.iter().zip(&issues).enumerate() {
                if b.bits() & !spec.all().bits() != 0 {
                    violations.push(format!("voter {v}, issue {i}: ballot references unknown candidate"));
                }
                flat.push(b);
            }
        }
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        Ok(Election {
            voters: approvals.len(),
            issues,
            approvals: flat,
        })
    }

    pub fn issue_count(&self) -> usize {
        self.issues.len()
    }

    pub fn voter_count(&self) -> usize {
        self.voters
    }

    pub fn issues(&self) -> &[IssueSpec] {
        &self.issues
    }

    pub fn issue(&self, i: usize) -> &IssueSpec {
        &self.issues[i]
    }

    pub fn ballot(&self, voter: usize, issue: usize) -> Ballot {
        self.approvals[voter * self.issues.len() + issue]
    }

    pub fn approves(&self, voter: usize, issue: usize, c: CandidateId) -> bool {
        self.ballot(voter, issue).contains(c)
    }

    /// Number of outcomes, saturating at `u128::MAX`.
    pub fn outcome_space(&self) -> u128 {
        self.issues
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.candidate_count() as u128))
    }

    pub fn check_voter(&self, voter: usize) -> Result<()> {
        if voter >= self.voters {
            return Err(Error::invalid(format!(
                "voter {voter} out of range (election has {} voters)",
                self.voters
            )));
        }
        Ok(())
    }

    pub fn check_issue(&self, issue: usize) -> Result<()> {
        if issue >= self.issues.len() {
            return Err(Error::invalid(format!(
                "issue {issue} out of range (election has {} issues)",
                self.issues.len()
            )));
        }
        Ok(())
    }

    pub fn check_outcome(&self, outcome: &Outcome) -> Result<()> {
        if outcome.len() != self.issues.len() {
            return Err(Error::invalid(format!(
                "outcome has {} entries for {} issues",
                outcome.len(),
                self.issues.len()
            )));
        }
        for (i, (w, spec)) in outcome.iter().zip(&self.issues).enumerate() {
            if w.0 >= spec.candidate_count() {
                return Err(Error::invalid(format!(
                    "outcome names candidate {w} on issue {i}, which has {} candidates",
                    spec.candidate_count()
                )));
            }
        }
        Ok(())
    }

    /// Number of issues whose winner `voter` approves.
    pub fn satisfaction(&self, voter: usize, outcome: &Outcome) -> Result<usize> {
        self.check_voter(voter)?;
        self.check_outcome(outcome)?;
        Ok(self.sat_unchecked(voter, outcome))
    }

    pub(crate) fn sat_unchecked(&self, voter: usize, outcome: &Outcome) -> usize {
        let k = self.issues.len();
        self.approvals[voter * k..(voter + 1) * k]
            .iter()
            .zip(outcome.iter())
            .filter(|(b, &w)| b.contains(w))
            .count()
    }

    /// Per-voter satisfactions in voter order.
    pub fn satisfactions(&self, outcome: &Outcome) -> Result<Vec<usize>> {
        self.check_outcome(outcome)?;
        Ok((0..self.voters).map(|v| self.sat_unchecked(v, outcome)).collect())
    }

    pub fn sorted_sat_vector(&self, outcome: &Outcome) -> Result<SortedSatVector> {
        Ok(SortedSatVector::from_unsorted(self.satisfactions(outcome)?))
    }

    /// Returns a copy of the election with the deviation's ballots substituted.
    pub fn apply_deviation(&self, deviation: &Deviation) -> Result<Election> {
        deviation.check(self)?;
        let mut next = self.clone();
        let k = self.issues.len();
        for (&i, &b) in &deviation.replacements {
            next.approvals[deviation.voter * k + i] = b;
        }
        Ok(next)
    }

    pub(crate) fn set_ballot(&mut self, voter: usize, issue: usize, ballot: Ballot) {
        let k = self.issues.len();
        self.approvals[voter * k + issue] = ballot;
    }

    /// Lexicographic comparison by issue index under each issue's tie-break
    /// order. `Less` means `a` is preferred.
    pub fn compare_outcomes_tiebreak(&self, a: &Outcome, b: &Outcome) -> Result<Ordering> {
        self.check_outcome(a)?;
        self.check_outcome(b)?;
        Ok(a.iter()
            .zip(b.iter())
            .zip(&self.issues)
            .map(|((&x, &y), spec)| spec.rank(x).cmp(&spec.rank(y)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal))
    }

    pub fn to_raw(&self) -> RawElection {
        let k = self.issues.len();
        RawElection {
            issues: self
                .issues
                .iter()
                .map(|s| RawIssue {
                    candidates: s.labels.clone(),
                    tiebreak: (!s.has_identity_tiebreak()).then(|| s.tiebreak.clone()),
                })
                .collect(),
            voters: self.voters,
            approvals: (0..self.voters)
                .map(|v| {
                    (0..k)
                        .map(|i| self.ballot(v, i).iter().map(|c| c.0).collect())
                        .collect()
                })
                .collect(),
        }
    }

    /// Canonical JSON encoding.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("election serializes")
    }

    pub fn from_json(text: &str) -> Result<Election> {
        let raw: RawElection = serde_json::from_str(text)?;
        Election::try_from(raw)
    }
}

/// Unvalidated wire form of an election.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawElection {
    pub issues: Vec<RawIssue>,
    pub voters: usize,
    pub approvals: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawIssue {
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiebreak: Option<Vec<usize>>,
}

impl RawElection {
    /// Every violated invariant, or `Ok` if the election is well formed.
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut out = Vec::new();
        if self.issues.is_empty() {
            out.push("election has no issues".to_string());
        }
        if self.voters == 0 {
            out.push("election has no voters".to_string());
        }
        for (i, issue) in self.issues.iter().enumerate() {
            let m = issue.candidates.len();
            let identity: Vec<usize> = (0..m).collect();
            check_issue(i, m, issue.tiebreak.as_deref().unwrap_or(&identity), &mut out);
        }
        if self.approvals.len() != self.voters {
            out.push(format!(
                "approvals has {} rows for {} voters",
                self.approvals.len(),
                self.voters
            ));
        }
        for (v, row) in self.approvals.iter().enumerate() {
            if row.len() != self.issues.len() {
                out.push(format!(
                    "voter {v}: {} ballots for {} issues",
                    row.len(),
                    self.issues.len()
                ));
                continue;
            }
            for (i, (ballot, issue)) in row.iter().zip(&self.issues).enumerate() {
                for &c in ballot {
                    if c >= issue.candidates.len() {
                        out.push(format!(
                            "voter {v}, issue {i}: approves candidate {c} but the issue has {} candidates",
                            issue.candidates.len()
                        ));
                    }
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

impl TryFrom<RawElection> for Election {
    type Error = Error;

    fn try_from(raw: RawElection) -> Result<Self> {
        raw.validate().map_err(Error::Validation)?;
        let issues = raw
            .issues
            .into_iter()
            .map(|ri| {
                let tb = ri.tiebreak.unwrap_or_else(|| (0..ri.candidates.len()).collect());
                IssueSpec::with_tiebreak(ri.candidates, tb)
            })
            .collect::<Result<Vec<_>>>()?;
        let approvals = raw
            .approvals
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|b| b.into_iter().map(CandidateId).collect())
                    .collect()
            })
            .collect();
        Election::from_ballots(issues, approvals)
    }
}

/// One winner per issue.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Outcome(pub Vec<CandidateId>);

impl Outcome {
    pub fn from_indices(ix: impl IntoIterator<Item = usize>) -> Self {
        Outcome(ix.into_iter().map(CandidateId).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CandidateId> {
        self.0.iter()
    }

    pub fn winner(&self, issue: usize) -> CandidateId {
        self.0[issue]
    }

    /// Winners rendered with the election's candidate labels.
    pub fn labels<'a>(&self, election: &'a Election) -> Vec<&'a str> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &c)| election.issue(i).label(c))
            .collect()
    }
}

impl std::ops::Index<usize> for Outcome {
    type Output = CandidateId;
    fn index(&self, i: usize) -> &CandidateId {
        &self.0[i]
    }
}

/// Satisfaction values sorted in nondecreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct SortedSatVector(Vec<usize>);

impl SortedSatVector {
    pub fn from_unsorted(mut values: Vec<usize>) -> Self {
        values.sort_unstable();
        SortedSatVector(values)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Replacement ballots for one voter on a nonempty set of issues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deviation {
    pub voter: usize,
    pub replacements: BTreeMap<usize, Ballot>,
}

impl Deviation {
    pub fn new(voter: usize, replacements: impl IntoIterator<Item = (usize, Ballot)>) -> Self {
        Deviation {
            voter,
            replacements: replacements.into_iter().collect(),
        }
    }

    pub fn single(voter: usize, issue: usize, ballot: Ballot) -> Self {
        Deviation::new(voter, [(issue, ballot)])
    }

    pub fn issues(&self) -> impl Iterator<Item = usize> + '_ {
        self.replacements.keys().copied()
    }

    pub fn check(&self, election: &Election) -> Result<()> {
        if self.replacements.is_empty() {
            return Err(Error::invalid("deviation replaces no ballots"));
        }
        election.check_voter(self.voter)?;
        for (&i, &b) in &self.replacements {
            election.check_issue(i)?;
            if b.bits() & !election.issue(i).all().bits() != 0 {
                return Err(Error::invalid(format!(
                    "deviation ballot on issue {i} references unknown candidate"
                )));
            }
        }
        Ok(())
    }

    /// The deviation that restores `election`'s ballots for the same voter and issues.
    pub fn inverse(&self, election: &Election) -> Deviation {
        Deviation {
            voter: self.voter,
            replacements: self
                .replacements
                .keys()
                .map(|&i| (i, election.ballot(self.voter, i)))
                .collect(),
        }
    }
}
