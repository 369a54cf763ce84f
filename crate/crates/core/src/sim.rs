//! Free-riding risk experiments on 2d-Euclidean elections.
//!
//! Each election draws its randomness from a ChaCha8 stream keyed by
//! `(seed, election index)`, so results do not depend on scheduling or the
//! number of worker threads.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::election::{Ballot, CandidateId, Election, IssueSpec};
use crate::error::{Error, Result};
use crate::freeride::{scan_sequential, FreeRideClass, VoterCounts};
use crate::scoring::{ExactComparator, Mode, OwaFamily, OwaWeights, RuleFamily, RuleSpec, ThieleFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    pub voters: usize,
    pub issues: usize,
    pub candidates: usize,
    /// A voter approves every candidate within `slack` times the distance of
    /// the closest one.
    pub slack: f64,
    pub seed: u64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            voters: 20,
            issues: 20,
            candidates: 4,
            slack: 1.2,
            seed: 42,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.voters == 0 || self.issues == 0 || self.candidates == 0 {
            return Err(Error::invalid("voters, issues and candidates must all be at least 1"));
        }
        if self.candidates > crate::election::MAX_CANDIDATES {
            return Err(Error::invalid("too many candidates per issue"));
        }
        if !(self.slack >= 1.0) || !self.slack.is_finite() {
            return Err(Error::invalid(format!("slack must be a finite value >= 1, got {}", self.slack)));
        }
        Ok(())
    }
}

/// Draws election number `index` of the stream identified by `config.seed`.
///
/// Voter points are drawn first, then each issue's candidate points; all
/// coordinates are uniform on the unit square.
pub fn sample_election(config: &GeometryConfig, index: u64) -> Result<Election> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index);
    let mut point = || -> (f64, f64) { (rng.gen(), rng.gen()) };
    let voters: Vec<(f64, f64)> = (0..config.voters).map(|_| point()).collect();
    let candidates: Vec<Vec<(f64, f64)>> = (0..config.issues)
        .map(|_| (0..config.candidates).map(|_| point()).collect())
        .collect();

    let slack2 = config.slack * config.slack;
    let dist2 = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    let approvals = voters
        .iter()
        .map(|&v| {
            candidates
                .iter()
                .map(|cs| {
                    let d: Vec<f64> = cs.iter().map(|&c| dist2(v, c)).collect();
                    let nearest = d.iter().copied().fold(f64::INFINITY, f64::min);
                    d.iter()
                        .enumerate()
                        .filter(|&(_, &x)| x <= slack2 * nearest)
                        .map(|(c, _)| CandidateId(c))
                        .collect::<Ballot>()
                })
                .collect()
        })
        .collect();
    let issue = IssueSpec::new((0..config.candidates).map(|c| format!("c{c}")))?;
    Election::from_ballots(vec![issue; config.issues], approvals)
}

/// Per-voter counts of issues with successful and harmful single-issue
/// free-riding under a sequential rule.
pub fn audit_for_metrics(election: &Election, rule: &RuleSpec) -> Result<Vec<VoterCounts>> {
    if rule.mode != Mode::Sequential {
        return Err(Error::rule(format!("{rule}: metrics are defined for sequential rules")));
    }
    let objective = rule.objective(election.voter_count(), election.issue_count())?;
    let mut counts = vec![VoterCounts::default(); election.voter_count()];
    scan_sequential(election, &objective, |v, _, _, delta| match FreeRideClass::from_delta(delta) {
        FreeRideClass::Successful => counts[v].successful_issues += 1,
        FreeRideClass::Harmful => counts[v].harmful_issues += 1,
        FreeRideClass::Neutral => {}
    });
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimFamily {
    Thiele,
    Owa,
}

impl SimFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            SimFamily::Thiele => "thiele",
            SimFamily::Owa => "owa",
        }
    }
}

/// A sequential rule from one of the two parameterized families.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRule {
    pub family: SimFamily,
    pub x: f64,
    pub rule: RuleSpec,
}

impl SimRule {
    /// `f_x(i) = i^-x`.
    pub fn thiele(x: f64) -> Result<Self> {
        Ok(SimRule {
            family: SimFamily::Thiele,
            x,
            rule: RuleSpec::thiele(ThieleFunction::power(x)?, Mode::Sequential),
        })
    }

    /// `n - x` unit weights followed by the leximin tail.
    pub fn owa(x: usize) -> Self {
        SimRule {
            family: SimFamily::Owa,
            x: x as f64,
            rule: RuleSpec::comparator(ExactComparator::Hybrid(x), Mode::Sequential),
        }
    }

    /// Places a rule in one of the families; `n` resolves leximin to `x = n - 1`.
    pub fn from_rule(rule: &RuleSpec, n: usize) -> Result<Self> {
        let (family, x) = match &rule.family {
            RuleFamily::Thiele(ThieleFunction::Utilitarian) => (SimFamily::Thiele, 0.0),
            RuleFamily::Thiele(ThieleFunction::Pav) => (SimFamily::Thiele, 1.0),
            RuleFamily::Thiele(ThieleFunction::Power(x)) => (SimFamily::Thiele, *x),
            RuleFamily::Comparator(ExactComparator::Hybrid(x))
            | RuleFamily::Owa(OwaWeights::Family(OwaFamily::Hybrid(x))) => (SimFamily::Owa, *x as f64),
            RuleFamily::Comparator(ExactComparator::Leximin) | RuleFamily::Owa(OwaWeights::Family(OwaFamily::Leximin)) => {
                (SimFamily::Owa, n.saturating_sub(1) as f64)
            }
            RuleFamily::Owa(OwaWeights::Family(OwaFamily::Utilitarian)) => (SimFamily::Owa, 0.0),
            _ => return Err(Error::rule(format!("{rule} is not in the Thiele f_x or OWA alpha_x families"))),
        };
        Ok(SimRule {
            family,
            x,
            rule: rule.with_mode(Mode::Sequential),
        })
    }
}

/// Thiele `x` in `0, 0.25, ..., 3` and OWA `x` in `0..n`.
pub fn default_rules(n: usize) -> Vec<SimRule> {
    let mut rules: Vec<SimRule> = (0..=12)
        .map(|i| SimRule::thiele(i as f64 * 0.25).expect("nonnegative exponent"))
        .collect();
    rules.extend((0..n).map(SimRule::owa));
    rules
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub elections: usize,
    pub rules: Vec<SimRule>,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Average risk over all eligible voters at once rather than per election first.
    pub pooled_q3: bool,
}

impl ExperimentConfig {
    pub fn with_defaults(geometry: GeometryConfig) -> Self {
        ExperimentConfig {
            geometry,
            elections: 1000,
            rules: default_rules(geometry.voters),
            jobs: None,
            pooled_q3: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub family: SimFamily,
    pub x: f64,
    /// Mean fraction of voters with a successful free-ride on some issue.
    pub q1: f64,
    /// Mean fraction of voters with a harmful free-ride on some issue.
    pub q2: f64,
    /// Mean risk: harmful issues over successful-or-harmful issues.
    pub q3: f64,
    pub elections: usize,
    /// Voter-election pairs with at least one non-neutral free-ride.
    pub eligible_voters: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RawRecord {
    pub election: usize,
    pub rule: String,
    pub voter: usize,
    pub successful: usize,
    pub harmful: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<MetricsRow>,
    /// Ordered by election, then rule, then voter.
    pub records: Vec<RawRecord>,
}

/// Q1, Q2, Q3 for one rule from per-election voter counts.
pub fn summarize(family: SimFamily, x: f64, per_election: &[Vec<VoterCounts>], pooled_q3: bool) -> MetricsRow {
    let mut q1 = 0.0;
    let mut q2 = 0.0;
    let mut risk_sum = 0.0;
    let mut risk_elections = 0usize;
    let mut pooled_sum = 0.0;
    let mut eligible = 0usize;
    for counts in per_election {
        let n = counts.len() as f64;
        q1 += counts.iter().filter(|c| c.successful_issues > 0).count() as f64 / n;
        q2 += counts.iter().filter(|c| c.harmful_issues > 0).count() as f64 / n;
        let risks: Vec<f64> = counts
            .iter()
            .filter(|c| c.successful_issues + c.harmful_issues > 0)
            .map(|c| c.harmful_issues as f64 / (c.successful_issues + c.harmful_issues) as f64)
            .collect();
        if !risks.is_empty() {
            let s: f64 = risks.iter().sum();
            risk_sum += s / risks.len() as f64;
            risk_elections += 1;
            pooled_sum += s;
            eligible += risks.len();
        }
    }
    let m = per_election.len().max(1) as f64;
    let q3 = if pooled_q3 {
        if eligible == 0 { 0.0 } else { pooled_sum / eligible as f64 }
    } else if risk_elections == 0 {
        0.0
    } else {
        risk_sum / risk_elections as f64
    };
    MetricsRow {
        family,
        x,
        q1: q1 / m,
        q2: q2 / m,
        q3,
        elections: per_election.len(),
        eligible_voters: eligible,
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.geometry.validate()?;
    if config.elections == 0 {
        return Err(Error::invalid("at least one election is required"));
    }
    if config.rules.is_empty() {
        return Err(Error::invalid("at least one rule is required"));
    }
    for r in &config.rules {
        if r.rule.mode != Mode::Sequential {
            return Err(Error::rule(format!("{}: experiments use sequential rules", r.rule)));
        }
        r.rule.objective(config.geometry.voters, config.geometry.issues)?;
    }

    let work = || -> Result<Vec<Vec<Vec<VoterCounts>>>> {
        (0..config.elections)
            .into_par_iter()
            .map(|idx| {
                let e = sample_election(&config.geometry, idx as u64)?;
                config.rules.iter().map(|r| audit_for_metrics(&e, &r.rule)).collect()
            })
            .collect()
    };
    // per_election[election][rule][voter]
    let per_election = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let rows = config
        .rules
        .iter()
        .enumerate()
        .map(|(ri, r)| {
            let counts: Vec<Vec<VoterCounts>> = per_election.iter().map(|e| e[ri].clone()).collect();
            summarize(r.family, r.x, &counts, config.pooled_q3)
        })
        .collect();
    let names: Vec<String> = config.rules.iter().map(|r| r.rule.to_string()).collect();
    let records = per_election
        .iter()
        .enumerate()
        .flat_map(|(ei, by_rule)| {
            let names = &names;
            by_rule.iter().enumerate().flat_map(move |(ri, counts)| {
                counts.iter().enumerate().map(move |(v, c)| RawRecord {
                    election: ei,
                    rule: names[ri].clone(),
                    voter: v,
                    successful: c.successful_issues,
                    harmful: c.harmful_issues,
                })
            })
        })
        .collect();
    Ok(ExperimentResult { rows, records })
}

pub const CSV_HEADER: &str = "family,x,q1,q2,q3,elections,eligible_voters";

pub fn emit_csv(rows: &[MetricsRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("no metrics rows to write"));
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.family.as_str(),
            r.x,
            r.q1,
            r.q2,
            r.q3,
            r.elections,
            r.eligible_voters
        )
        .expect("writing to a String");
    }
    Ok(out)
}

pub fn parse_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::invalid("metrics CSV header mismatch"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::invalid(format!("malformed metrics line `{line}`"));
            if f.len() != 7 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(MetricsRow {
                family: match f[0] {
                    "thiele" => SimFamily::Thiele,
                    "owa" => SimFamily::Owa,
                    _ => return Err(bad()),
                },
                x: num(f[1])?,
                q1: num(f[2])?,
                q2: num(f[3])?,
                q3: num(f[4])?,
                elections: f[5].parse().map_err(|_| bad())?,
                eligible_voters: f[6].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn records_jsonl(records: &[RawRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 50.0;
const SERIES: [(&str, &str); 3] = [("Q1", "#1f77b4"), ("Q2", "#d62728"), ("Q3", "#2ca02c")];

/// One panel per family, with Q1, Q2 and Q3 plotted against `x`.
pub fn emit_svg(rows: &[MetricsRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("no metrics rows to plot"));
    }
    let families: Vec<SimFamily> = [SimFamily::Thiele, SimFamily::Owa]
        .into_iter()
        .filter(|f| rows.iter().any(|r| r.family == *f))
        .collect();
    let width = families.len() as f64 * (PANEL_W + MARGIN) + MARGIN;
    let height = PANEL_H + 2.0 * MARGIN;
    let y_max = rows
        .iter()
        .flat_map(|r| [r.q1, r.q2, r.q3])
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (p, fam) in families.iter().enumerate() {
        let mut pts: Vec<&MetricsRow> = rows.iter().filter(|r| r.family == *fam).collect();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
        let x0 = MARGIN + p as f64 * (PANEL_W + MARGIN);
        let y0 = MARGIN;
        let (xmin, xmax) = (pts[0].x, pts[pts.len() - 1].x);
        let span = if xmax > xmin { xmax - xmin } else { 1.0 };
        let sx = |x: f64| x0 + (x - xmin) / span * PANEL_W;
        let sy = |y: f64| y0 + PANEL_H - y / y_max * PANEL_H;
        let _ = writeln!(
            svg,
            r#"<g class="panel" id="{}"><rect x="{x0}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#,
            fam.as_str()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{} (x)</text>"#,
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H + 35.0,
            fam.as_str()
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{y_max:.3}</text>"#, x0 - 4.0, y0 + 4.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">0</text>"#, x0 - 4.0, y0 + PANEL_H);
        let _ = writeln!(svg, r#"<text x="{x0}" y="{}" text-anchor="middle">{xmin}</text>"#, y0 + PANEL_H + 16.0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{xmax}</text>"#,
            x0 + PANEL_W,
            y0 + PANEL_H + 16.0
        );
        for (si, (name, color)) in SERIES.iter().enumerate() {
            let value = |r: &MetricsRow| [r.q1, r.q2, r.q3][si];
            let coords: Vec<String> = pts
                .iter()
                .map(|r| format!("{:.2},{:.2}", sx(r.x), sy(value(r))))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline class="{name}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                coords.join(" ")
            );
            let last = pts[pts.len() - 1];
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" fill="{color}">{name}</text>"#,
                sx(last.x) + 4.0,
                sy(value(last))
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GeometryConfig {
        GeometryConfig {
            voters: 6,
            issues: 5,
            candidates: 3,
            slack: 1.2,
            seed: 42,
        }
    }

    #[test]
    fn sampling_is_deterministic_and_ballots_nonempty() {
        let a = sample_election(&small(), 0).unwrap();
        let b = sample_election(&small(), 0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_election(&small(), 1).unwrap());
        for idx in 0..20 {
            let e = sample_election(&GeometryConfig::default(), idx).unwrap();
            for v in 0..e.voter_count() {
                for i in 0..e.issue_count() {
                    assert!(!e.ballot(v, i).is_empty());
                }
            }
        }
    }

    #[test]
    fn slack_one_gives_singletons() {
        let cfg = GeometryConfig { slack: 1.0, ..GeometryConfig::default() };
        let e = sample_election(&cfg, 3).unwrap();
        for v in 0..e.voter_count() {
            for i in 0..e.issue_count() {
                assert_eq!(e.ballot(v, i).len(), 1);
            }
        }
    }

    #[test]
    fn invalid_geometry() {
        assert!(sample_election(&GeometryConfig { slack: 0.9, ..small() }, 0).is_err());
        assert!(sample_election(&GeometryConfig { voters: 0, ..small() }, 0).is_err());
    }

    #[test]
    fn optimization_rules_rejected_for_metrics() {
        let e = sample_election(&small(), 0).unwrap();
        assert!(audit_for_metrics(&e, &"thiele:pav@opt".parse().unwrap()).is_err());
    }

    #[test]
    fn summary_arithmetic() {
        let vc = |s, h| VoterCounts { successful_issues: s, harmful_issues: h };
        let per = vec![
            vec![vc(1, 0), vc(1, 1), vc(0, 0), vc(0, 2)],
            vec![vc(0, 0); 4],
        ];
        let row = summarize(SimFamily::Thiele, 1.0, &per, false);
        assert_eq!(row.q1, (2.0 / 4.0) / 2.0);
        assert_eq!(row.q2, (2.0 / 4.0) / 2.0);
        // election 0 risks: 0, 1/2, 1 -> mean 1/2; election 1 has no eligible voter
        assert_eq!(row.q3, 0.5);
        assert_eq!(row.eligible_voters, 3);
        let pooled = summarize(SimFamily::Thiele, 1.0, &per, true);
        assert_eq!(pooled.q3, 0.5);
    }

    #[test]
    fn csv_shape_and_roundtrip() {
        assert!(emit_csv(&[]).is_err());
        let row = MetricsRow {
            family: SimFamily::Owa,
            x: 3.0,
            q1: 0.123456789012345,
            q2: 1.0 / 3.0,
            q3: 0.0,
            elections: 10,
            eligible_voters: 7,
        };
        let csv = emit_csv(std::slice::from_ref(&row)).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(parse_csv(&csv).unwrap(), vec![row]);
    }

    #[test]
    fn svg_polylines_follow_data() {
        assert!(emit_svg(&[]).is_err());
        let rows: Vec<MetricsRow> = (0..4)
            .map(|i| MetricsRow {
                family: SimFamily::Thiele,
                x: i as f64,
                q1: i as f64 * 0.1,
                q2: 0.05,
                q3: 0.0,
                elections: 1,
                eligible_voters: 0,
            })
            .collect();
        let svg = emit_svg(&rows).unwrap();
        assert!(svg.starts_with("<svg"));
        let line = svg.lines().find(|l| l.contains(r#"class="Q1""#)).unwrap();
        let pts = line.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        let ys: Vec<f64> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect();
        // SVG y grows downward, so increasing q1 means decreasing ordinates
        assert!(ys.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rule_placement() {
        let r = |s: &str| RuleSpec::parse_with_default(s, Mode::Sequential).unwrap();
        assert_eq!(SimRule::from_rule(&r("owa:leximin"), 20).unwrap().x, 19.0);
        assert_eq!(SimRule::from_rule(&r("thiele:pav"), 20).unwrap().x, 1.0);
        assert_eq!(SimRule::from_rule(&r("thiele:pow:0.5@opt"), 20).unwrap().rule.mode, Mode::Sequential);
        assert!(SimRule::from_rule(&r("owa:egal"), 20).is_err());
        assert_eq!(default_rules(20).len(), 33);
    }
}
