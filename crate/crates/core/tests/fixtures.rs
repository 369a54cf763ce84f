mod common;

use common::rule;
use multivote::constructions::*;
use multivote::freeride::{audit_election, find_free_rides_exhaustive, is_free_ride};
use multivote::scoring::{owa_family_vector, owa_score, thiele_score};
use multivote::{
    solve, Ballot, CandidateId, Deviation, ExactComparator, FreeRideClass, OwaFamily, Outcome, RuleFamily,
    ScoreValue, SolverBudget, ThieleFunction,
};

fn budget() -> SolverBudget {
    SolverBudget::default()
}

fn labels(f: &Fixture, o: &Outcome) -> String {
    o.labels(&f.election).join(",")
}

#[test]
fn running_example_outcomes() {
    let f = running_example();
    let e = &f.election;
    let out = |r: &str| labels(&f, &solve(e, &rule(r), &budget()).unwrap().outcome);
    assert_eq!(out("thiele:util@opt"), "a,a,a,a");
    assert_eq!(out("owa:leximin@opt"), "a,a,b,c");
    assert_eq!(out("thiele:pav@opt"), "a,a,a,b");
    let pav = thiele_score(&ThieleFunction::Pav, e, &Outcome::from_indices([0, 0, 0, 1])).unwrap();
    assert_eq!(pav, ScoreValue::integer(154));
    let pav = thiele_score(&ThieleFunction::Pav, e, &Outcome::from_indices([0; 4])).unwrap();
    assert_eq!(pav, ScoreValue::ratio(275, 2));
    let sorted = e.sorted_sat_vector(&Outcome::from_indices([0; 4])).unwrap();
    let util = owa_family_vector(OwaFamily::Utilitarian, 100, 4).unwrap();
    assert_eq!(owa_score(&util, &sorted).unwrap(), ScoreValue::ratio(264, 100));
}

#[test]
fn egalitarian_example_free_ride() {
    let f = egal_free_ride_example();
    let e = &f.election;
    assert_eq!(labels(&f, &solve(e, &f.rule, &budget()).unwrap().outcome), "a,x");
    let got = is_free_ride(e, &f.rule, &Deviation::single(1, 0, Ballot::single(CandidateId(1))), false, &budget())
        .unwrap()
        .unwrap();
    assert_eq!(labels(&f, &got.deviated_outcome), "a,y");
    assert_eq!(got.class, FreeRideClass::Successful);
    // voter 2 has the mirror-image deviation
    let got = is_free_ride(e, &f.rule, &Deviation::single(2, 0, Ballot::single(CandidateId(1))), false, &budget())
        .unwrap()
        .unwrap();
    assert_eq!(labels(&f, &got.deviated_outcome), "a,z");
    assert_eq!(got.class, FreeRideClass::Successful);
    // voter 0 already gets x; withdrawing on issue 0 changes nothing for them
    let got = is_free_ride(e, &f.rule, &Deviation::single(0, 0, Ballot::EMPTY), false, &budget())
        .unwrap()
        .unwrap();
    assert_eq!(got.class, FreeRideClass::Neutral);
}

#[test]
fn every_named_fixture_reproduces() {
    for name in FIXTURE_NAMES {
        fixture_by_name(name).unwrap().check(&budget()).unwrap();
    }
    assert!(fixture_by_name("nope").is_err());
}

#[test]
fn manipulation_constructions_are_successful() {
    let egal = || RuleFamily::Comparator(ExactComparator::Egalitarian);
    let fixtures = [
        seq_thiele_manipulation(ThieleFunction::Pav).unwrap(),
        opt_thiele_manipulation(ThieleFunction::Pav).unwrap(),
        owa_manipulation(egal(), 3).unwrap(),
        seq_owa_manipulation(egal(), 3).unwrap(),
    ];
    for f in fixtures {
        f.check(&budget()).unwrap();
        let got = is_free_ride(&f.election, &f.rule, f.deviation.as_ref().unwrap(), false, &budget())
            .unwrap()
            .unwrap();
        assert_eq!(got.class, FreeRideClass::Successful, "{}", f.name);
        assert_eq!(got.delta_sat, 1, "{}", f.name);
    }
}

#[test]
fn manipulation_constructions_cover_other_rules() {
    for x in [0.5, 1.5, 3.0] {
        let f = ThieleFunction::power(x).unwrap();
        seq_thiele_manipulation(f.clone()).unwrap().check(&budget()).unwrap();
        opt_thiele_manipulation(f).unwrap().check(&budget()).unwrap();
    }
    // f = (1, 1, 1/2, ...) first decreases at j = 2
    let f = ThieleFunction::lex_simulated(4, 4).unwrap();
    seq_thiele_manipulation(f.clone()).unwrap().check(&budget()).unwrap();
    for k in [2, 3, 5] {
        for fam in [
            RuleFamily::Comparator(ExactComparator::Leximin),
            RuleFamily::Comparator(ExactComparator::Egalitarian),
            RuleFamily::Owa(multivote::scoring::OwaWeights::Family(OwaFamily::Leximin)),
        ] {
            owa_manipulation(fam.clone(), k).unwrap().check(&budget()).unwrap();
            seq_owa_manipulation(fam, k).unwrap().check(&budget()).unwrap();
        }
    }
}

#[test]
fn harmful_constructions() {
    let f = seq_thiele_harmful(ThieleFunction::Pav).unwrap();
    f.check(&budget()).unwrap();
    assert_eq!(labels(&f, &f.expected_truthful), "a,a,b,b");
    assert_eq!(labels(&f, f.expected_deviated.as_ref().unwrap()), "a,b,a,a");
    let all = find_free_rides_exhaustive(&f.election, &f.rule, 0, 0, false, &budget()).unwrap();
    assert!(!all.is_empty());
    assert!(all.iter().all(|g| g.class == FreeRideClass::Harmful));

    let f = seq_thiele_harmful(ThieleFunction::power(1.5).unwrap()).unwrap();
    f.check(&budget()).unwrap();

    let f = seq_owa_harmful(three_ones(8), 8).unwrap();
    f.check(&budget()).unwrap();
    assert_eq!(labels(&f, &f.expected_truthful), "a8,a8,a8,a8");
    assert_eq!(labels(&f, f.expected_deviated.as_ref().unwrap()), "a8,a1,a4,a2");
    seq_owa_harmful(RuleFamily::Comparator(ExactComparator::Leximin), 8)
        .unwrap()
        .check(&budget())
        .unwrap();
    seq_owa_harmful(three_ones(10), 10).unwrap().check(&budget()).unwrap();

    let f = seq_egal_harmful();
    f.check(&budget()).unwrap();
    assert_eq!(labels(&f, &f.expected_truthful), "a,a,a,b,b");
    assert_eq!(labels(&f, f.expected_deviated.as_ref().unwrap()), "a,a,b,a,a");
    let e = &f.election;
    let finding = is_free_ride(e, &f.rule, f.deviation.as_ref().unwrap(), false, &budget())
        .unwrap()
        .unwrap();
    assert_eq!(e.satisfaction(0, &finding.truthful_outcome).unwrap(), 3);
    assert_eq!(e.satisfaction(0, &finding.deviated_outcome).unwrap(), 2);
}

#[test]
fn sequential_egalitarian_audit_flags_voter_zero() {
    let f = seq_egal_harmful();
    let report = audit_election(&f.election, &f.rule, &budget()).unwrap();
    let harmful: Vec<(usize, usize)> =
        report.pairs.iter().filter(|p| p.harmful).map(|p| (p.voter, p.issue)).collect();
    assert_eq!(harmful, vec![(0, 1)]);
    assert_eq!(report.voters[0].harmful_issues, 1);
}

#[test]
fn constructions_reject_rules_outside_their_scope() {
    assert!(seq_thiele_manipulation(ThieleFunction::Utilitarian).is_err());
    assert!(owa_manipulation(RuleFamily::Owa(multivote::scoring::OwaWeights::Family(OwaFamily::Utilitarian)), 3).is_err());
    assert!(seq_owa_harmful(three_ones(7), 7).is_err());
    assert!(seq_owa_harmful(RuleFamily::Comparator(ExactComparator::Egalitarian), 8).is_err());
}

#[test]
fn fixture_json_embeds_a_loadable_election() {
    for name in FIXTURE_NAMES {
        let f = fixture_by_name(name).unwrap();
        let v = f.to_json();
        let e = multivote::Election::from_json(&v["election"].to_string()).unwrap();
        assert_eq!(e, f.election, "{name}");
        assert_eq!(v["rule"], f.rule.to_string());
    }
}
