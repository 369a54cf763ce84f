use multivote::freeride::{find_free_rides_exhaustive, VoterCounts};
use multivote::sim::*;
use multivote::{FreeRideClass, SolverBudget};

fn geometry(voters: usize, issues: usize, candidates: usize, seed: u64) -> GeometryConfig {
    GeometryConfig {
        voters,
        issues,
        candidates,
        slack: 1.2,
        seed,
    }
}

/// Counts from re-solving every deviated election with every deviating ballot.
fn counts_by_resolving(e: &multivote::Election, rule: &multivote::RuleSpec) -> Vec<VoterCounts> {
    (0..e.voter_count())
        .map(|v| {
            let mut c = VoterCounts::default();
            for i in 0..e.issue_count() {
                let found = find_free_rides_exhaustive(e, rule, v, i, false, &SolverBudget::default()).unwrap();
                c.successful_issues += found.iter().any(|f| f.class == FreeRideClass::Successful) as usize;
                c.harmful_issues += found.iter().any(|f| f.class == FreeRideClass::Harmful) as usize;
            }
            c
        })
        .collect()
}

#[test]
fn incremental_scan_matches_full_resolves() {
    let rules = [SimRule::thiele(1.0).unwrap(), SimRule::thiele(2.0).unwrap(), SimRule::owa(1), SimRule::owa(5)];
    for idx in 0..12 {
        let e = sample_election(&geometry(6, 6, 3, 11), idx).unwrap();
        for r in &rules {
            assert_eq!(audit_for_metrics(&e, &r.rule).unwrap(), counts_by_resolving(&e, &r.rule), "{} #{idx}", r.rule);
        }
    }
    let e = sample_election(&GeometryConfig::default(), 0).unwrap();
    for r in [SimRule::thiele(1.0).unwrap(), SimRule::owa(19)] {
        assert_eq!(audit_for_metrics(&e, &r.rule).unwrap(), counts_by_resolving(&e, &r.rule), "{}", r.rule);
    }
}

fn config(jobs: usize) -> ExperimentConfig {
    ExperimentConfig {
        elections: 40,
        rules: vec![SimRule::thiele(0.0).unwrap(), SimRule::thiele(1.0).unwrap(), SimRule::owa(0), SimRule::owa(7)],
        jobs: Some(jobs),
        ..ExperimentConfig::with_defaults(geometry(8, 8, 4, 7))
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let a = run_experiment(&config(1)).unwrap();
    let b = run_experiment(&config(3)).unwrap();
    assert_eq!(emit_csv(&a.rows).unwrap(), emit_csv(&b.rows).unwrap());
    assert_eq!(a.records, b.records);
}

#[test]
fn utilitarian_rows_are_zero() {
    let res = run_experiment(&config(1)).unwrap();
    for row in res.rows.iter().filter(|r| r.x == 0.0) {
        assert_eq!((row.q1, row.q2, row.q3, row.eligible_voters), (0.0, 0.0, 0.0, 0));
    }
}

#[test]
fn summary_is_recomputable_from_raw_records() {
    let cfg = config(2);
    let res = run_experiment(&cfg).unwrap();
    for (r, row) in cfg.rules.iter().zip(&res.rows) {
        let name = r.rule.to_string();
        let per_election: Vec<Vec<VoterCounts>> = (0..cfg.elections)
            .map(|ei| {
                res.records
                    .iter()
                    .filter(|rec| rec.election == ei && rec.rule == name)
                    .map(|rec| VoterCounts {
                        successful_issues: rec.successful,
                        harmful_issues: rec.harmful,
                    })
                    .collect()
            })
            .collect();
        assert_eq!(&summarize(r.family, r.x, &per_election, false), row);
    }
    let line = records_jsonl(&res.records[..1]);
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    for key in ["election", "rule", "voter", "successful", "harmful"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn csv_roundtrip_and_plot() {
    let res = run_experiment(&config(1)).unwrap();
    let csv = emit_csv(&res.rows).unwrap();
    assert_eq!(parse_csv(&csv).unwrap(), res.rows);
    let svg = emit_svg(&res.rows).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 6);
    assert!(svg.contains(r#"id="thiele""#) && svg.contains(r#"id="owa""#));
}

#[test]
fn bad_configs_are_rejected() {
    let mut cfg = config(1);
    cfg.elections = 0;
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = config(1);
    cfg.rules[0].rule = "thiele:pav@opt".parse().unwrap();
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = config(1);
    cfg.rules = vec![SimRule::owa(8)];
    assert!(run_experiment(&cfg).is_err());
}
