//! Score functions: OWA weight vectors, Thiele functions and exact
//! comparators for leximin-like rules.
//!
//! All comparisons follow the convention "greater is better": an
//! [`Ordering::Greater`] result means the first argument is preferred.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::election::{Election, Outcome, SortedSatVector};
use crate::error::{Error, Result};

/// Relative tolerance under which two float scores are considered tied.
pub const FLOAT_EPSILON: f64 = 1e-9;

/// A score, either an exact rational or a float compared with
/// [`FLOAT_EPSILON`] relative tolerance.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreValue {
    Exact(BigRational),
    Float(f64),
}

impl ScoreValue {
    pub fn zero_exact() -> Self {
        ScoreValue::Exact(BigRational::zero())
    }

    pub fn integer(v: i64) -> Self {
        ScoreValue::Exact(BigRational::from_integer(v.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        ScoreValue::Exact(BigRational::new(num.into(), den.into()))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ScoreValue::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ScoreValue::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            ScoreValue::Float(x) => *x,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            ScoreValue::Exact(r) => r.is_negative(),
            ScoreValue::Float(x) => *x < 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            ScoreValue::Exact(r) => r.is_positive(),
            ScoreValue::Float(x) => *x > 0.0,
        }
    }

    pub fn add(&self, other: &ScoreValue) -> ScoreValue {
        match (self, other) {
            (ScoreValue::Exact(a), ScoreValue::Exact(b)) => ScoreValue::Exact(a + b),
            _ => ScoreValue::Float(self.to_f64() + other.to_f64()),
        }
    }

    pub fn add_assign(&mut self, other: &ScoreValue) {
        match (&mut *self, other) {
            (ScoreValue::Exact(a), ScoreValue::Exact(b)) => *a += b,
            (ScoreValue::Float(a), ScoreValue::Float(b)) => *a += b,
            _ => *self = ScoreValue::Float(self.to_f64() + other.to_f64()),
        }
    }

    pub fn mul_int(&self, k: usize) -> ScoreValue {
        match self {
            ScoreValue::Exact(a) => ScoreValue::Exact(a * BigRational::from_integer(BigInt::from(k))),
            ScoreValue::Float(a) => ScoreValue::Float(a * k as f64),
        }
    }

    /// Exact comparison for rationals; relative-tolerance comparison once a
    /// float is involved.
    pub fn compare(&self, other: &ScoreValue) -> Ordering {
        match (self, other) {
            (ScoreValue::Exact(a), ScoreValue::Exact(b)) => a.cmp(b),
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                let scale = a.abs().max(b.abs());
                if (a - b).abs() <= FLOAT_EPSILON * scale {
                    Ordering::Equal
                } else if a < b {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }

    /// True iff no value `<= self` can compare strictly greater than `best`.
    pub(crate) fn cannot_beat(&self, best: &ScoreValue) -> bool {
        match (self, best) {
            (ScoreValue::Exact(a), ScoreValue::Exact(b)) => a <= b,
            _ => {
                let (a, b) = (self.to_f64(), best.to_f64());
                a - b <= FLOAT_EPSILON * b.abs()
            }
        }
    }
}

impl fmt::Display for ScoreValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreValue::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            ScoreValue::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            ScoreValue::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for ScoreValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn parse_score(text: &str) -> Result<ScoreValue> {
    let text = text.trim();
    let bad = || Error::rule(format!("cannot parse weight `{text}`"));
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(ScoreValue::Exact(BigRational::new(n, d)))
    } else if let Ok(n) = text.parse::<BigInt>() {
        Ok(ScoreValue::Exact(BigRational::from_integer(n)))
    } else {
        let x: f64 = text.parse().map_err(|_| bad())?;
        if !x.is_finite() {
            return Err(bad());
        }
        Ok(ScoreValue::Float(x))
    }
}

/// An OWA weight vector, applied to the ascending satisfaction vector.
#[derive(Debug, Clone, PartialEq)]
pub struct OwaVector {
    weights: Vec<ScoreValue>,
}

impl OwaVector {
    pub fn new(weights: Vec<ScoreValue>) -> Result<Self> {
        match weights.first() {
            None => return Err(Error::rule("OWA vector is empty")),
            Some(w) if !w.is_positive() => {
                return Err(Error::rule("OWA vector needs a positive first weight"))
            }
            _ => {}
        }
        if weights.iter().any(ScoreValue::is_negative) {
            return Err(Error::rule("OWA weights must be nonnegative"));
        }
        Ok(OwaVector { weights })
    }

    pub fn weights(&self) -> &[ScoreValue] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Multiplies every weight by a positive integer.
    pub fn scaled(&self, factor: usize) -> OwaVector {
        OwaVector {
            weights: self.weights.iter().map(|w| w.mul_int(factor)).collect(),
        }
    }

    fn dot(&self, sorted: &[usize]) -> ScoreValue {
        let mut acc = if self.weights.iter().all(ScoreValue::is_exact) {
            ScoreValue::zero_exact()
        } else {
            ScoreValue::Float(0.0)
        };
        for (w, &s) in self.weights.iter().zip(sorted) {
            if s != 0 {
                acc.add_assign(&w.mul_int(s));
            }
        }
        acc
    }
}

/// Dot product of `alpha` with the sorted satisfaction vector.
pub fn owa_score(alpha: &OwaVector, s: &SortedSatVector) -> Result<ScoreValue> {
    if alpha.len() != s.len() {
        return Err(Error::rule(format!(
            "OWA vector has length {} but there are {} voters",
            alpha.len(),
            s.len()
        )));
    }
    Ok(alpha.dot(s.values()))
}

/// Named OWA weight-vector families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwaFamily {
    Utilitarian,
    Egalitarian,
    Leximin,
    /// `n - x` unit weights followed by `1/(kn), 1/(kn)^2, ...`.
    Hybrid(usize),
}

/// The exact-rational weight vector of a named family for `n` voters and `k` issues.
pub fn owa_family_vector(family: OwaFamily, n: usize, k: usize) -> Result<OwaVector> {
    if n == 0 || k == 0 {
        return Err(Error::rule("OWA vectors need n >= 1 and k >= 1"));
    }
    let geometric = |ones: usize| -> Vec<ScoreValue> {
        let base = BigInt::from(k) * BigInt::from(n);
        let mut w = vec![ScoreValue::integer(1); ones];
        let mut den = BigInt::one();
        while w.len() < n {
            den *= &base;
            w.push(ScoreValue::Exact(BigRational::new(BigInt::one(), den.clone())));
        }
        w
    };
    let weights = match family {
        OwaFamily::Utilitarian => vec![ScoreValue::ratio(1, n as i64); n],
        OwaFamily::Egalitarian => {
            let mut w = vec![ScoreValue::integer(0); n];
            w[0] = ScoreValue::integer(1);
            w
        }
        OwaFamily::Leximin => geometric(1),
        OwaFamily::Hybrid(x) => {
            if x >= n {
                return Err(Error::rule(format!("hybrid parameter {x} must be at most n - 1 = {}", n - 1)));
            }
            geometric(n - x)
        }
    };
    OwaVector::new(weights)
}

/// Comparators realizing leximin-like OWA rules without floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactComparator {
    Leximin,
    Egalitarian,
    Hybrid(usize),
}

impl ExactComparator {
    /// `Greater` iff `s` is preferred to `t`.
    pub fn compare(self, s: &SortedSatVector, t: &SortedSatVector) -> Result<Ordering> {
        if s.len() != t.len() {
            return Err(Error::rule("satisfaction vectors differ in length"));
        }
        if let ExactComparator::Hybrid(x) = self {
            if x >= s.len() {
                return Err(Error::rule(format!(
                    "hybrid parameter {x} must be at most n - 1 = {}",
                    s.len().saturating_sub(1)
                )));
            }
        }
        Ok(self.compare_slices(s.values(), t.values()))
    }

    pub(crate) fn compare_slices(self, s: &[usize], t: &[usize]) -> Ordering {
        match self {
            ExactComparator::Leximin => s.cmp(t),
            ExactComparator::Egalitarian => s.first().cmp(&t.first()),
            ExactComparator::Hybrid(x) => {
                let head = s.len() - x;
                let sum = |v: &[usize]| v[..head].iter().sum::<usize>();
                sum(s).cmp(&sum(t)).then_with(|| s[head..].cmp(&t[head..]))
            }
        }
    }

    fn check(self, n: usize) -> Result<()> {
        match self {
            ExactComparator::Hybrid(x) if x >= n => Err(Error::rule(format!(
                "hybrid parameter {x} must be at most n - 1 = {}",
                n.saturating_sub(1)
            ))),
            _ => Ok(()),
        }
    }
}

/// Leximin preference of `s` over `t`.
pub fn leximin_compare(s: &SortedSatVector, t: &SortedSatVector) -> Result<Ordering> {
    ExactComparator::Leximin.compare(s, t)
}

/// Prefix-sum-then-positional-tail comparison equivalent to the hybrid OWA vector.
pub fn hybrid_owa_compare(x: usize, s: &SortedSatVector, t: &SortedSatVector) -> Result<Ordering> {
    ExactComparator::Hybrid(x).compare(s, t)
}

/// Thiele weight functions `f`, with `f(1) > 0` and `f` nonincreasing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThieleFunction {
    Utilitarian,
    Pav,
    /// `f(i) = i^-x`, evaluated in floating point.
    Power(f64),
    /// `f(i) = (kn)^-(i-1)`.
    LexSimulated { k: usize, n: usize },
}

impl ThieleFunction {
    pub fn power(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::rule(format!("power exponent must be finite and >= 0, got {x}")));
        }
        Ok(ThieleFunction::Power(x))
    }

    pub fn lex_simulated(k: usize, n: usize) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::rule("lexicographic Thiele function needs k, n >= 1"));
        }
        Ok(ThieleFunction::LexSimulated { k, n })
    }

    /// `f(i)` for `i >= 1`.
    pub fn eval(&self, i: usize) -> ScoreValue {
        assert!(i >= 1, "Thiele functions are defined on i >= 1");
        match *self {
            ThieleFunction::Utilitarian => ScoreValue::integer(1),
            ThieleFunction::Pav => ScoreValue::ratio(1, i as i64),
            ThieleFunction::Power(x) => ScoreValue::Float((i as f64).powf(-x)),
            ThieleFunction::LexSimulated { k, n } => {
                let den = (BigInt::from(k) * BigInt::from(n)).pow(i as u32 - 1);
                ScoreValue::Exact(BigRational::new(BigInt::one(), den))
            }
        }
    }

    pub fn is_utilitarian(&self) -> bool {
        matches!(self, ThieleFunction::Utilitarian) || matches!(self, ThieleFunction::Power(x) if *x == 0.0)
    }

    /// `f(1..=k)` memoized, with the required shape checked.
    pub fn table(&self, k: usize) -> Result<ThieleTable> {
        if let ThieleFunction::Power(x) = *self {
            ThieleFunction::power(x)?;
        }
        let values: Vec<ScoreValue> = (1..=k.max(1)).map(|i| self.eval(i)).collect();
        if !values[0].is_positive() {
            return Err(Error::rule("Thiele function needs f(1) > 0"));
        }
        if values.windows(2).any(|w| w[0].compare(&w[1]) == Ordering::Less) {
            return Err(Error::rule("Thiele function must be nonincreasing"));
        }
        Ok(ThieleTable { values })
    }
}

/// Frozen look-up table of a Thiele function over `1..=k`.
#[derive(Debug, Clone)]
pub struct ThieleTable {
    values: Vec<ScoreValue>,
}

impl ThieleTable {
    /// `f(i)`; `i` must be in `1..=k`.
    pub fn f(&self, i: usize) -> &ScoreValue {
        &self.values[i - 1]
    }

    pub fn zero(&self) -> ScoreValue {
        if self.values[0].is_exact() {
            ScoreValue::zero_exact()
        } else {
            ScoreValue::Float(0.0)
        }
    }

    /// `f(1) + ... + f(sat)`.
    pub fn cumulative(&self, sat: usize) -> ScoreValue {
        let mut acc = self.zero();
        for i in 1..=sat {
            acc.add_assign(self.f(i));
        }
        acc
    }
}

/// Thiele score of an outcome: sum over voters of `f(1) + ... + f(sat)`.
pub fn thiele_score(f: &ThieleFunction, election: &Election, outcome: &Outcome) -> Result<ScoreValue> {
    let table = f.table(election.issue_count())?;
    let sats = election.satisfactions(outcome)?;
    let mut acc = table.zero();
    for s in sats {
        acc.add_assign(&table.cumulative(s));
    }
    Ok(acc)
}

/// How an OWA rule's weights are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum OwaWeights {
    /// A named family, bound to the election's `n` and `k` when applied.
    Family(OwaFamily),
    Explicit(OwaVector),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleFamily {
    /// Dot-product OWA evaluation.
    Owa(OwaWeights),
    Thiele(ThieleFunction),
    Comparator(ExactComparator),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Optimization,
    Sequential,
}

/// A voting rule: score family plus evaluation mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSpec {
    pub family: RuleFamily,
    pub mode: Mode,
}

impl RuleSpec {
    pub fn new(family: RuleFamily, mode: Mode) -> Self {
        RuleSpec { family, mode }
    }

    pub fn thiele(f: ThieleFunction, mode: Mode) -> Self {
        RuleSpec::new(RuleFamily::Thiele(f), mode)
    }

    pub fn comparator(c: ExactComparator, mode: Mode) -> Self {
        RuleSpec::new(RuleFamily::Comparator(c), mode)
    }

    pub fn owa(weights: OwaWeights, mode: Mode) -> Self {
        RuleSpec::new(RuleFamily::Owa(weights), mode)
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        RuleSpec {
            family: self.family.clone(),
            mode,
        }
    }

    /// Parses rule syntax; a missing `@opt`/`@seq` suffix selects `default_mode`.
    pub fn parse_with_default(text: &str, default_mode: Mode) -> Result<Self> {
        let (body, mode) = match text.rsplit_once('@') {
            Some((body, "opt")) => (body, Mode::Optimization),
            Some((body, "seq")) => (body, Mode::Sequential),
            Some((_, other)) => return Err(Error::rule(format!("unknown mode suffix `@{other}`"))),
            None => (text, default_mode),
        };
        let parts: Vec<&str> = body.split(':').collect();
        let bad = || Error::rule(format!("unrecognized rule `{text}`"));
        let num = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::rule(format!("expected an integer in `{text}`, got `{s}`")))
        };
        let owa_family = |p: &[&str]| -> Result<OwaFamily> {
            match p {
                ["util"] => Ok(OwaFamily::Utilitarian),
                ["egal"] => Ok(OwaFamily::Egalitarian),
                ["leximin"] => Ok(OwaFamily::Leximin),
                ["hybrid", x] => Ok(OwaFamily::Hybrid(num(x)?)),
                _ => Err(bad()),
            }
        };
        let family = match parts.as_slice() {
            ["thiele", "util"] => RuleFamily::Thiele(ThieleFunction::Utilitarian),
            ["thiele", "pav"] => RuleFamily::Thiele(ThieleFunction::Pav),
            ["thiele", "pow", x] => {
                let x: f64 = x.parse().map_err(|_| bad())?;
                RuleFamily::Thiele(ThieleFunction::power(x)?)
            }
            ["thiele", "lex", k, n] => RuleFamily::Thiele(ThieleFunction::lex_simulated(num(k)?, num(n)?)?),
            ["owa", "egal"] => RuleFamily::Comparator(ExactComparator::Egalitarian),
            ["owa", "leximin"] => RuleFamily::Comparator(ExactComparator::Leximin),
            ["owa", "hybrid", x] => RuleFamily::Comparator(ExactComparator::Hybrid(num(x)?)),
            ["owa", "util"] => RuleFamily::Owa(OwaWeights::Family(OwaFamily::Utilitarian)),
            ["owa", "dot", rest @ ..] => RuleFamily::Owa(OwaWeights::Family(owa_family(rest)?)),
            ["owa", "vec", list] => {
                let weights = list.split(',').map(parse_score).collect::<Result<Vec<_>>>()?;
                RuleFamily::Owa(OwaWeights::Explicit(OwaVector::new(weights)?))
            }
            _ => return Err(bad()),
        };
        Ok(RuleSpec { family, mode })
    }

    /// Binds the rule to an election's dimensions.
    pub(crate) fn objective(&self, n: usize, k: usize) -> Result<Objective> {
        Ok(match &self.family {
            RuleFamily::Thiele(f) => Objective::Thiele(f.table(k)?),
            RuleFamily::Owa(OwaWeights::Family(fam)) => Objective::Owa(owa_family_vector(*fam, n, k)?),
            RuleFamily::Owa(OwaWeights::Explicit(v)) => {
                if v.len() != n {
                    return Err(Error::rule(format!(
                        "OWA vector has length {} but the election has {n} voters",
                        v.len()
                    )));
                }
                Objective::Owa(v.clone())
            }
            RuleFamily::Comparator(c) => {
                c.check(n)?;
                Objective::Comparator(*c)
            }
        })
    }

    pub fn is_utilitarian(&self) -> bool {
        match &self.family {
            RuleFamily::Thiele(f) => f.is_utilitarian(),
            RuleFamily::Owa(OwaWeights::Family(OwaFamily::Utilitarian | OwaFamily::Hybrid(0))) => true,
            RuleFamily::Comparator(ExactComparator::Hybrid(0)) => true,
            _ => false,
        }
    }
}

impl FromStr for RuleSpec {
    type Err = Error;

    /// Without a suffix the rule defaults to optimization mode.
    fn from_str(s: &str) -> Result<Self> {
        RuleSpec::parse_with_default(s, Mode::Optimization)
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = |f: &mut fmt::Formatter<'_>, fam: &OwaFamily| match fam {
            OwaFamily::Utilitarian => write!(f, "util"),
            OwaFamily::Egalitarian => write!(f, "egal"),
            OwaFamily::Leximin => write!(f, "leximin"),
            OwaFamily::Hybrid(x) => write!(f, "hybrid:{x}"),
        };
        match &self.family {
            RuleFamily::Thiele(ThieleFunction::Utilitarian) => write!(f, "thiele:util")?,
            RuleFamily::Thiele(ThieleFunction::Pav) => write!(f, "thiele:pav")?,
            RuleFamily::Thiele(ThieleFunction::Power(x)) => write!(f, "thiele:pow:{x}")?,
            RuleFamily::Thiele(ThieleFunction::LexSimulated { k, n }) => write!(f, "thiele:lex:{k}:{n}")?,
            RuleFamily::Comparator(ExactComparator::Egalitarian) => write!(f, "owa:egal")?,
            RuleFamily::Comparator(ExactComparator::Leximin) => write!(f, "owa:leximin")?,
            RuleFamily::Comparator(ExactComparator::Hybrid(x)) => write!(f, "owa:hybrid:{x}")?,
            RuleFamily::Owa(OwaWeights::Family(OwaFamily::Utilitarian)) => write!(f, "owa:util")?,
            RuleFamily::Owa(OwaWeights::Family(fm)) => {
                write!(f, "owa:dot:")?;
                fam(f, fm)?
            }
            RuleFamily::Owa(OwaWeights::Explicit(v)) => {
                let ws: Vec<String> = v.weights().iter().map(ToString::to_string).collect();
                write!(f, "owa:vec:{}", ws.join(","))?
            }
        }
        match self.mode {
            Mode::Optimization => write!(f, "@opt"),
            Mode::Sequential => write!(f, "@seq"),
        }
    }
}

/// A rule bound to concrete `n` and `k`.
#[derive(Debug, Clone)]
pub(crate) enum Objective {
    Thiele(ThieleTable),
    Owa(OwaVector),
    Comparator(ExactComparator),
}

/// The comparable value of an outcome (or a round candidate) under a rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ScoreWitness {
    Value(ScoreValue),
    /// Sorted satisfaction vector, for comparator rules.
    Profile(SortedSatVector),
}

impl fmt::Display for ScoreWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreWitness::Value(v) => write!(f, "{v}"),
            ScoreWitness::Profile(p) => write!(f, "{:?}", p.values()),
        }
    }
}

impl Objective {
    /// Score of a full satisfaction profile (unsorted, per voter).
    pub(crate) fn evaluate(&self, sats: &[usize]) -> ScoreWitness {
        match self {
            Objective::Thiele(t) => {
                let mut acc = t.zero();
                for &s in sats {
                    acc.add_assign(&t.cumulative(s));
                }
                ScoreWitness::Value(acc)
            }
            Objective::Owa(v) => {
                let sorted = SortedSatVector::from_unsorted(sats.to_vec());
                ScoreWitness::Value(v.dot(sorted.values()))
            }
            Objective::Comparator(_) => ScoreWitness::Profile(SortedSatVector::from_unsorted(sats.to_vec())),
        }
    }

    /// `Greater` iff `a` is strictly better.
    pub(crate) fn compare(&self, a: &ScoreWitness, b: &ScoreWitness) -> Ordering {
        match (self, a, b) {
            (Objective::Comparator(c), ScoreWitness::Profile(s), ScoreWitness::Profile(t)) => {
                c.compare_slices(s.values(), t.values())
            }
            (_, ScoreWitness::Value(x), ScoreWitness::Value(y)) => x.compare(y),
            _ => unreachable!("witness kind does not match objective"),
        }
    }
}
