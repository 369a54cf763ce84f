//! Generators for the worked examples and free-riding constructions, each
//! bundled with its expected outcomes.
//!
//! Voters and issues are 0-based here; "voter 1" in the classic write-ups of
//! these elections is voter 0. Letter labels map to indices alphabetically
//! (a=0, b=1, ...); subscripted labels `a1, a2, ...` map in subscript order.

use serde::Serialize;

use crate::election::{Ballot, CandidateId, Deviation, Election, IssueSpec, Outcome};
use crate::error::{Error, Result};
use crate::freeride::{is_free_ride, FreeRideClass};
use crate::scoring::{
    owa_family_vector, ExactComparator, Mode, OwaWeights, RuleFamily, RuleSpec, ScoreValue, ThieleFunction,
};
use crate::solvers::{solve, SolverBudget};

/// How far to look for a strict decrease of a Thiele function.
const DECREASE_SEARCH: usize = 64;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    /// Label mapping and any non-default tie-breaking.
    pub notes: String,
    pub election: Election,
    pub rule: RuleSpec,
    pub expected_truthful: Outcome,
    pub deviation: Option<Deviation>,
    pub expected_deviated: Option<Outcome>,
    pub expected_class: Option<FreeRideClass>,
    /// Further (rule, outcome) expectations on the same election.
    pub also: Vec<(RuleSpec, Outcome)>,
}

impl Fixture {
    /// Re-runs the solvers and free-riding check against every expectation.
    pub fn check(&self, budget: &SolverBudget) -> Result<()> {
        let mismatch = |what: &str, got: String, want: String| {
            Err(Error::invalid(format!("fixture {}: {what}: got {got}, expected {want}", self.name)))
        };
        let truthful = solve(&self.election, &self.rule, budget)?.outcome;
        if truthful != self.expected_truthful {
            return mismatch("truthful outcome", self.show(&truthful), self.show(&self.expected_truthful));
        }
        for (rule, want) in &self.also {
            let got = solve(&self.election, rule, budget)?.outcome;
            if &got != want {
                return mismatch(&format!("outcome under {rule}"), self.show(&got), self.show(want));
            }
        }
        if let Some(dev) = &self.deviation {
            let finding = is_free_ride(&self.election, &self.rule, dev, false, budget)?
                .ok_or_else(|| Error::invalid(format!("fixture {}: deviation is not a free-ride", self.name)))?;
            if let Some(want) = &self.expected_deviated {
                if &finding.deviated_outcome != want {
                    return mismatch("deviated outcome", self.show(&finding.deviated_outcome), self.show(want));
                }
            }
            if let Some(want) = self.expected_class {
                if finding.class != want {
                    return mismatch("class", format!("{:?}", finding.class), format!("{want:?}"));
                }
            }
        }
        Ok(())
    }

    pub fn show(&self, o: &Outcome) -> String {
        format!("({})", o.labels(&self.election).join(","))
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Wire<'a> {
            name: &'a str,
            notes: &'a str,
            rule: String,
            election: serde_json::Value,
            expected_truthful: Vec<&'a str>,
            deviation: Option<serde_json::Value>,
            expected_deviated: Option<Vec<&'a str>>,
            expected_class: Option<FreeRideClass>,
            also: Vec<(String, Vec<&'a str>)>,
        }
        let e = &self.election;
        let wire = Wire {
            name: &self.name,
            notes: &self.notes,
            rule: self.rule.to_string(),
            election: serde_json::to_value(e.to_raw()).expect("election serializes"),
            expected_truthful: self.expected_truthful.labels(e),
            deviation: self.deviation.as_ref().map(|d| {
                serde_json::json!({
                    "voter": d.voter,
                    "ballots": d.replacements.iter()
                        .map(|(&i, b)| (i.to_string(), b.iter().map(|c| c.0).collect::<Vec<_>>()))
                        .collect::<std::collections::BTreeMap<_, _>>(),
                })
            }),
            expected_deviated: self.expected_deviated.as_ref().map(|o| o.labels(e)),
            expected_class: self.expected_class,
            also: self.also.iter().map(|(r, o)| (r.to_string(), o.labels(e))).collect(),
        };
        serde_json::to_value(wire).expect("fixture serializes")
    }
}

/// Names accepted by [`fixture_by_name`], each with its default parameters.
pub const FIXTURE_NAMES: &[&str] = &[
    "running-example",
    "egal-free-ride",
    "seq-thiele-manipulation",
    "opt-thiele-manipulation",
    "owa-manipulation",
    "seq-owa-manipulation",
    "seq-thiele-harmful",
    "seq-owa-harmful",
    "seq-egal-harmful",
];

pub fn fixture_by_name(name: &str) -> Result<Fixture> {
    let egal = RuleFamily::Comparator(ExactComparator::Egalitarian);
    match name {
        "running-example" => Ok(running_example()),
        "egal-free-ride" => Ok(egal_free_ride_example()),
        "seq-thiele-manipulation" => seq_thiele_manipulation(ThieleFunction::Pav),
        "opt-thiele-manipulation" => opt_thiele_manipulation(ThieleFunction::Pav),
        "owa-manipulation" => owa_manipulation(egal, 3),
        "seq-owa-manipulation" => seq_owa_manipulation(egal, 3),
        "seq-thiele-harmful" => seq_thiele_harmful(ThieleFunction::Pav),
        "seq-owa-harmful" => seq_owa_harmful(three_ones(8), 8),
        "seq-egal-harmful" => Ok(seq_egal_harmful()),
        other => Err(Error::invalid(format!(
            "unknown fixture `{other}`; known: {}",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}

/// `(1, 1, 1, 0, ..., 0)` of length `n`.
pub fn three_ones(n: usize) -> RuleFamily {
    let w = (0..n).map(|i| ScoreValue::integer((i < 3) as i64)).collect();
    RuleFamily::Owa(OwaWeights::Explicit(
        crate::scoring::OwaVector::new(w).expect("valid weights"),
    ))
}

fn letters(m: usize) -> IssueSpec {
    IssueSpec::new((0..m).map(|i| ((b'a' + i as u8) as char).to_string())).expect("valid issue")
}

fn ballot(ix: &[usize]) -> Ballot {
    ix.iter().map(|&c| CandidateId(c)).collect()
}

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;

/// 100 voters, 4 issues over `{a, b, c}`: 66 voters approve `a` everywhere
/// (voters 0..66), 33 approve `b` (66..99) and voter 99 approves `c`.
pub fn running_example() -> Fixture {
    let issues = vec![letters(3); 4];
    let row = |c: usize| vec![ballot(&[c]); 4];
    let mut approvals = vec![row(A); 66];
    approvals.extend(vec![row(B); 33]);
    approvals.push(row(C));
    let election = Election::from_ballots(issues, approvals).expect("valid election");
    let r = |s: &str| s.parse::<RuleSpec>().expect("valid rule");
    Fixture {
        name: "running-example".into(),
        notes: "a=0, b=1, c=2 on every issue; identity tie-breaking".into(),
        election,
        rule: r("thiele:util@opt"),
        expected_truthful: Outcome::from_indices([A, A, A, A]),
        deviation: None,
        expected_deviated: None,
        expected_class: None,
        also: vec![
            (r("owa:leximin@opt"), Outcome::from_indices([A, A, B, C])),
            (r("owa:egal@opt"), Outcome::from_indices([A, A, B, C])),
            (r("thiele:pav@opt"), Outcome::from_indices([A, A, A, B])),
            (r("thiele:pav@seq"), Outcome::from_indices([A, A, B, A])),
        ],
    }
}

/// Three voters, two issues: everyone approves `a` on issue 0, and on issue 1
/// voters approve `x`, `y`, `z` respectively. Under egalitarian optimization
/// voter 1 free-rides on issue 0 to turn `(a,x)` into `(a,y)`.
pub fn egal_free_ride_example() -> Fixture {
    let ab = IssueSpec::new(["a", "b"]).expect("valid issue");
    let xyz = IssueSpec::new(["x", "y", "z"]).expect("valid issue");
    let approvals = (0..3).map(|v| vec![ballot(&[0]), ballot(&[v])]).collect();
    Fixture {
        name: "egal-free-ride".into(),
        notes: "issue 0: a=0, b=1; issue 1: x=0, y=1, z=2; voter 2 has the symmetric deviation".into(),
        election: Election::from_ballots(vec![ab, xyz], approvals).expect("valid election"),
        rule: RuleSpec::comparator(ExactComparator::Egalitarian, Mode::Optimization),
        expected_truthful: Outcome::from_indices([0, 0]),
        deviation: Some(Deviation::single(1, 0, ballot(&[1]))),
        expected_deviated: Some(Outcome::from_indices([0, 1])),
        expected_class: Some(FreeRideClass::Successful),
        also: vec![],
    }
}

/// Smallest `j >= 1` with `f(j) > f(j+1)`.
fn first_decrease(f: &ThieleFunction) -> Result<usize> {
    let table = f.table(DECREASE_SEARCH + 1)?;
    (1..=DECREASE_SEARCH)
        .find(|&j| table.f(j).compare(table.f(j + 1)).is_gt())
        .ok_or_else(|| Error::rule(format!("no j <= {DECREASE_SEARCH} with f(j) > f(j+1); f is constant")))
}

/// `j` unanimous `a` issues, then a final issue split 2-2 between `b`
/// (voters 0, 1) and `a` (voters 2, 3).
fn thiele_manipulation_election(j: usize) -> Election {
    let mut approvals = vec![vec![ballot(&[A]); j + 1]; 4];
    approvals[0][j] = ballot(&[B]);
    approvals[1][j] = ballot(&[B]);
    Election::from_ballots(vec![letters(2); j + 1], approvals).expect("valid election")
}

fn thiele_manipulation(f: ThieleFunction, mode: Mode) -> Result<Fixture> {
    let j = first_decrease(&f)?;
    let election = thiele_manipulation_election(j);
    let mut deviated = vec![A; j + 1];
    deviated[j] = B;
    // sequential: deviate on the first issue; optimization: on the last unanimous one
    let issue = match mode {
        Mode::Sequential => 0,
        Mode::Optimization => j - 1,
    };
    let rule = RuleSpec::thiele(f, mode);
    Ok(Fixture {
        name: format!("{}-thiele-manipulation", if mode == Mode::Sequential { "seq" } else { "opt" }),
        notes: format!(
            "a=0, b=1; {j} unanimous issue(s) where f({j}) > f({}); the last issue ties 2-2 and a wins by tie-breaking",
            j + 1
        ),
        election,
        rule,
        expected_truthful: Outcome::from_indices(vec![A; j + 1]),
        deviation: Some(Deviation::single(0, issue, ballot(&[B]))),
        expected_deviated: Some(Outcome::from_indices(deviated)),
        expected_class: Some(FreeRideClass::Successful),
        also: vec![],
    })
}

/// Successful free-riding under a sequential Thiele rule other than utilitarian.
pub fn seq_thiele_manipulation(f: ThieleFunction) -> Result<Fixture> {
    thiele_manipulation(f, Mode::Sequential)
}

/// Successful free-riding under an optimization Thiele rule other than utilitarian.
pub fn opt_thiele_manipulation(f: ThieleFunction) -> Result<Fixture> {
    thiele_manipulation(f, Mode::Optimization)
}

/// 1-based OWA weights of an OWA-type family for `n` voters and `k` issues.
fn owa_weights(family: &RuleFamily, n: usize, k: usize) -> Result<Vec<ScoreValue>> {
    use crate::scoring::OwaFamily;
    let fam = match family {
        RuleFamily::Owa(OwaWeights::Explicit(v)) => {
            if v.len() != n {
                return Err(Error::rule(format!("OWA vector must have length {n}")));
            }
            return Ok(v.weights().to_vec());
        }
        RuleFamily::Owa(OwaWeights::Family(f)) => *f,
        RuleFamily::Comparator(ExactComparator::Egalitarian) => OwaFamily::Egalitarian,
        RuleFamily::Comparator(ExactComparator::Leximin) => OwaFamily::Leximin,
        RuleFamily::Comparator(ExactComparator::Hybrid(x)) => OwaFamily::Hybrid(*x),
        RuleFamily::Thiele(_) => return Err(Error::rule("expected an OWA rule, got a Thiele rule")),
    };
    Ok(owa_family_vector(fam, n, k)?.weights().to_vec())
}

fn subscripts(ix: impl IntoIterator<Item = usize>) -> IssueSpec {
    IssueSpec::new(ix.into_iter().map(|i| format!("a{i}"))).expect("valid issue")
}

fn owa_manipulation_impl(family: RuleFamily, k: usize, mode: Mode) -> Result<Fixture> {
    if k < 2 {
        return Err(Error::rule("the OWA construction needs at least 2 voters"));
    }
    let w = owa_weights(&family, k, 2)?;
    if w[0].compare(&w[k - 1]).is_le() {
        return Err(Error::rule(format!("needs alpha_1 > alpha_{k}; the rule is utilitarian-like at n = {k}")));
    }
    // candidates a1..ak are indices 0..k
    let issue0 = |v: usize| if v < 2 { ballot(&[0]) } else { ballot(&[v]) };
    let issue1 = |v: usize| match v {
        0 => ballot(&[0]),
        1 => ballot(&[1]),
        _ => ballot(&[0, 1]),
    };
    let approvals = (0..k).map(|v| vec![issue0(v), issue1(v)]).collect();
    let election = Election::from_ballots(vec![subscripts(1..=k), subscripts(1..=k)], approvals)?;
    let rule = RuleSpec::new(family, mode);
    Ok(Fixture {
        name: format!("{}owa-manipulation", if mode == Mode::Sequential { "seq-" } else { "" }),
        notes: format!("{k} voters; a1..a{k} are indices 0..{}; lower index preferred", k - 1),
        election,
        rule,
        expected_truthful: Outcome::from_indices([0, 0]),
        deviation: Some(Deviation::single(1, 0, ballot(&[1]))),
        expected_deviated: Some(Outcome::from_indices([0, 1])),
        expected_class: Some(FreeRideClass::Successful),
        also: vec![],
    })
}

/// Successful free-riding under an optimization OWA rule with `alpha_1 > alpha_k`
/// for `k` voters.
pub fn owa_manipulation(family: RuleFamily, k: usize) -> Result<Fixture> {
    owa_manipulation_impl(family, k, Mode::Optimization)
}

/// The sequential counterpart of [`owa_manipulation`].
pub fn seq_owa_manipulation(family: RuleFamily, k: usize) -> Result<Fixture> {
    owa_manipulation_impl(family, k, Mode::Sequential)
}

/// Harmful free-riding under a sequential Thiele rule: nine voters,
/// candidates `a..g`, alphabetic tie-breaking. With `i` the first index where
/// `f(i) > f(i+1)`, there are `i - 1` unanimous issues followed by four
/// constructed ones; voter 0 free-rides on issue `i - 1`.
pub fn seq_thiele_harmful(f: ThieleFunction) -> Result<Fixture> {
    let i = first_decrease(&f)?;
    let (a, b, c, d, e, ff, g) = (0, 1, 2, 3, 4, 5, 6);
    let tail: [[&[usize]; 9]; 4] = [
        [&[a], &[a], &[a], &[b], &[b], &[c], &[d], &[e], &[ff]],
        [&[b], &[a], &[c], &[b], &[b], &[a], &[a], &[a], &[b]],
        [&[b], &[a], &[c], &[b], &[e], &[a], &[ff], &[a, b], &[g]],
        [&[b], &[c], &[d], &[e], &[b], &[ff], &[a], &[a], &[g]],
    ];
    let k = i + 3;
    let approvals: Vec<Vec<Ballot>> = (0..9)
        .map(|v| {
            let mut row = vec![ballot(&[a]); i - 1];
            row.extend(tail.iter().map(|issue| ballot(issue[v])));
            row
        })
        .collect();
    let election = Election::from_ballots(vec![letters(7); k], approvals)?;
    let mut truthful = vec![a; k];
    truthful[k - 2] = b;
    truthful[k - 1] = b;
    let mut deviated = vec![a; k];
    deviated[k - 3] = b;
    Ok(Fixture {
        name: "seq-thiele-harmful".into(),
        notes: format!("a..g = 0..6, alphabetic tie-breaking; f({i}) > f({}); voter 0 withdraws on issue {}", i + 1, i - 1),
        election,
        rule: RuleSpec::thiele(f, Mode::Sequential),
        expected_truthful: Outcome::from_indices(truthful),
        deviation: Some(Deviation::single(0, i - 1, Ballot::EMPTY)),
        expected_deviated: Some(Outcome::from_indices(deviated)),
        expected_class: Some(FreeRideClass::Harmful),
        also: vec![],
    })
}

/// Harmful free-riding under a sequential OWA rule whose `n`-voter vector is
/// nonincreasing with `alpha_3 > alpha_(n-2)`, `n >= 8`. Four issues,
/// candidates drawn from `a1..an`, higher subscript preferred. The last voter
/// free-rides on issue 0 by approving `a1`.
pub fn seq_owa_harmful(family: RuleFamily, n: usize) -> Result<Fixture> {
    if n < 8 {
        return Err(Error::rule(format!("the construction needs n >= 8, got {n}")));
    }
    let w = owa_weights(&family, n, 4)?;
    if w.windows(2).any(|p| p[0].compare(&p[1]).is_lt()) {
        return Err(Error::rule("the OWA vector must be nonincreasing"));
    }
    if w[2].compare(&w[n - 3]).is_le() {
        return Err(Error::rule(format!("needs alpha_3 > alpha_{}", n - 2)));
    }
    // 1-based voter -> 1-based subscript of the approved candidate
    let rules: [&dyn Fn(usize) -> usize; 4] = [
        &|v| if (3..=n - 3).contains(&v) || v == n { n } else { v },
        &|v| match v {
            1..=3 => n,
            _ if v >= n - 2 => 1,
            _ => v,
        },
        &|v| match v {
            1 | 4 => 4,
            _ if v >= n - 1 => n,
            _ => v,
        },
        &|v| match v {
            2 | 3 => 2,
            _ if v == n - 2 || v == n => n,
            _ => v,
        },
    ];
    let mut issues = Vec::new();
    let mut approvals = vec![Vec::new(); n];
    let mut index_of = Vec::new();
    for rule in rules {
        let mut subs: Vec<usize> = (1..=n).map(rule).collect();
        subs.sort_unstable();
        subs.dedup();
        let m = subs.len();
        issues.push(IssueSpec::with_tiebreak(
            subs.iter().map(|s| format!("a{s}")),
            (0..m).rev().collect(),
        )?);
        for (v, row) in approvals.iter_mut().enumerate() {
            let s = rule(v + 1);
            row.push(Ballot::single(CandidateId(subs.binary_search(&s).expect("present"))));
        }
        index_of.push(subs);
    }
    let idx = |issue: usize, sub: usize| index_of[issue].binary_search(&sub).expect("candidate exists");
    let election = Election::from_ballots(issues, approvals)?;
    let expected_truthful = Outcome::from_indices((0..4).map(|i| idx(i, n)));
    let expected_deviated = Outcome::from_indices([idx(0, n), idx(1, 1), idx(2, 4), idx(3, 2)]);
    Ok(Fixture {
        name: "seq-owa-harmful".into(),
        notes: format!(
            "{n} voters; each issue's candidates are the approved subset of a1..a{n}, indexed by subscript; higher subscript preferred"
        ),
        election,
        rule: RuleSpec::new(family, Mode::Sequential),
        expected_truthful,
        deviation: Some(Deviation::single(n - 1, 0, Ballot::single(CandidateId(idx(0, 1))))),
        expected_deviated: Some(expected_deviated),
        expected_class: Some(FreeRideClass::Harmful),
        also: vec![],
    })
}

/// Five voters, five issues over `{a, b, c}`, tie-breaking prefers `a`.
/// Under sequential egalitarian voting, voter 0 free-rides on issue 1 and
/// drops from satisfaction 3 to 2.
pub fn seq_egal_harmful() -> Fixture {
    let table: [[usize; 5]; 5] = [
        [B, A, B, B, B],
        [B, A, A, B, A],
        [B, A, A, C, B],
        [A, A, B, A, B],
        [A, A, B, A, B],
    ];
    let approvals = table
        .iter()
        .map(|row| row.iter().map(|&c| ballot(&[c])).collect())
        .collect();
    Fixture {
        name: "seq-egal-harmful".into(),
        notes: "a=0, b=1, c=2; alphabetic tie-breaking; voter 0 approves b instead of a on issue 1".into(),
        election: Election::from_ballots(vec![letters(3); 5], approvals).expect("valid election"),
        rule: RuleSpec::comparator(ExactComparator::Egalitarian, Mode::Sequential),
        expected_truthful: Outcome::from_indices([A, A, A, B, B]),
        deviation: Some(Deviation::single(0, 1, ballot(&[B]))),
        expected_deviated: Some(Outcome::from_indices([A, A, B, A, A])),
        expected_class: Some(FreeRideClass::Harmful),
        also: vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_named_fixture_checks() {
        for name in FIXTURE_NAMES {
            let f = fixture_by_name(name).unwrap();
            f.check(&SolverBudget::default()).unwrap_or_else(|e| panic!("{e}"));
        }
        assert!(fixture_by_name("nope").is_err());
    }

    #[test]
    fn utilitarian_constructions_are_rejected() {
        assert!(seq_thiele_manipulation(ThieleFunction::Utilitarian).is_err());
        assert!(seq_thiele_harmful(ThieleFunction::Utilitarian).is_err());
        assert!(owa_manipulation(RuleFamily::Owa(OwaWeights::Family(crate::scoring::OwaFamily::Utilitarian)), 3).is_err());
        let util8 = RuleFamily::Owa(OwaWeights::Family(crate::scoring::OwaFamily::Utilitarian));
        assert!(seq_owa_harmful(util8, 8).is_err());
        assert!(seq_owa_harmful(three_ones(7), 7).is_err());
    }
}
