//! Multi-issue approval elections: OWA and Thiele rules in optimization and
//! sequential form, free-riding detection, and simulations of how often
//! free-riding pays off.
//!
//! Voters, issues and candidates are 0-based indices throughout. Ties are
//! broken by a per-issue candidate order, earliest issue first.

pub mod cli;
pub mod constructions;
pub mod election;
pub mod error;
pub mod freeride;
pub mod scoring;
pub mod sim;
pub mod solvers;

pub use election::{Ballot, CandidateId, Deviation, Election, IssueSpec, Outcome, SortedSatVector};
pub use error::{Error, Result};
pub use freeride::{
    audit_election, can_manipulate_by_free_riding, find_free_rides, is_free_ride, recognize_free_riding, AuditReport,
    FreeRideClass, FreeRideFinding,
};
pub use scoring::{ExactComparator, Mode, OwaFamily, OwaVector, RuleFamily, RuleSpec, ScoreValue, ThieleFunction};
pub use solvers::{solve, winner_of_issue, SolveResult, SolverBudget};
