#![allow(dead_code)]

use multivote::{Ballot, Election, IssueSpec};
use proptest::prelude::*;

/// Elections with up to `max_n` voters, `max_k` issues and `max_m`
/// candidates per issue, with random approvals and tie-break orders.
pub fn elections(max_n: usize, max_k: usize, max_m: usize) -> impl Strategy<Value = Election> {
    (1..=max_n, prop::collection::vec(1..=max_m, 1..=max_k))
        .prop_flat_map(|(n, sizes)| {
            let perms: Vec<_> = sizes.iter().map(|&m| Just((0..m).collect::<Vec<usize>>()).prop_shuffle()).collect();
            let bits: Vec<_> = sizes.iter().map(|&m| prop::collection::vec(0u64..(1 << m), n)).collect();
            (Just(sizes), perms, bits)
        })
        .prop_map(|(sizes, perms, bits)| {
            let issues = sizes
                .iter()
                .zip(perms)
                .map(|(&m, tb)| IssueSpec::with_tiebreak((0..m).map(|c| format!("c{c}")), tb).unwrap())
                .collect();
            let n = bits[0].len();
            let approvals = (0..n)
                .map(|v| bits.iter().map(|issue| Ballot::from_bits(issue[v])).collect())
                .collect();
            Election::from_ballots(issues, approvals).unwrap()
        })
}

/// The instance size used by the property suites.
pub fn small_elections() -> impl Strategy<Value = Election> {
    elections(5, 4, 3)
}

pub fn rule(s: &str) -> multivote::RuleSpec {
    s.parse().unwrap()
}
