//! Decision logic of a DiffSum ballot-polling audit.
//!
//! Everything here is a pure function of its inputs. The stopping rule is
//! evaluated in exact integer arithmetic: with `a` votes for the sample
//! leader and `b` votes for the strongest loser, the audit accepts the
//! leader once `a > b` and `(a - b)^2 > c * (a + b)`.

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CandidateId = String;

/// Initial sample size when none is configured.
pub const DEFAULT_INITIAL_SAMPLE_SIZE: u64 = 24;

/// Fraction of the electorate after which sampling should give way to a
/// full hand recount.
pub const DEFAULT_CUTOVER_FRACTION: f64 = 0.04;

/// Worst-case (tie electorate) wrong-acceptance rate for each `delta`, indexed by `delta`.
pub const MAX_ERROR_RATES: [f64; 5] = [0.22, 0.15, 0.10, 0.06, 0.04];

/// Label used for ballots that count toward the sample but toward no candidate.
pub const INVALID_LABEL: &str = "invalid";

/// Number of base-10 digits of `n`.
pub fn decimal_digits(n: u64) -> Result<u32> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    Ok(n.ilog10() + 1)
}

/// The threshold constant `c = d + delta`, where `d` is the digit count of `n`.
pub fn choose_c(n: u64, delta: u32) -> Result<u64> {
    Ok(u64::from(decimal_digits(n)?) + u64::from(delta))
}

/// Looks up the worst-case error rate for `delta`. There is no extrapolation
/// beyond the tabulated range.
pub fn max_error_rate(delta: u32) -> Result<f64> {
    MAX_ERROR_RATES.get(delta as usize).copied().ok_or(Error::OutOfTable(delta))
}

/// The two sides of the stopping inequality: `(a - b)^2` and `c * (a + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffSumStatistic {
    pub statistic: u128,
    pub threshold: u128,
}

impl DiffSumStatistic {
    pub fn new(a: u64, b: u64, c: u64) -> Self {
        let diff = u128::from(a.abs_diff(b));
        Self { statistic: diff * diff, threshold: u128::from(c) * (u128::from(a) + u128::from(b)) }
    }
}

/// True iff `a > b` and `(a - b)^2 > c * (a + b)`.
pub fn diffsum_stop_condition(a: u64, b: u64, c: u64) -> bool {
    if a <= b {
        return false;
    }
    let s = DiffSumStatistic::new(a, b, c);
    s.statistic > s.threshold
}

/// How a single examined ballot was read.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Interpretation {
    Candidate(CandidateId),
    Invalid,
}

impl Interpretation {
    pub fn candidate(id: impl Into<CandidateId>) -> Self {
        Interpretation::Candidate(id.into())
    }

    pub fn as_str(&self) -> &str {
        match self {
            Interpretation::Candidate(id) => id,
            Interpretation::Invalid => INVALID_LABEL,
        }
    }
}

impl TryFrom<String> for Interpretation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Err(Error::param("interpretation must not be empty"));
        }
        if trimmed == INVALID_LABEL {
            Ok(Interpretation::Invalid)
        } else {
            Ok(Interpretation::Candidate(trimmed.to_string()))
        }
    }
}

impl From<Interpretation> for String {
    fn from(i: Interpretation) -> String {
        match i {
            Interpretation::Candidate(id) => id,
            Interpretation::Invalid => INVALID_LABEL.to_string(),
        }
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full configuration of one audit.
///
/// `c` is `d + delta` unless it was set explicitly with [`AuditParams::with_c`],
/// in which case `delta` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAuditParams")]
pub struct AuditParams {
    n: u64,
    d: u32,
    delta: Option<u32>,
    c: u64,
    initial_sample_size: u64,
    cutover_fraction: f64,
    candidates: Vec<CandidateId>,
}

#[derive(Deserialize)]
struct RawAuditParams {
    n: u64,
    #[serde(default)]
    delta: Option<u32>,
    #[serde(default)]
    c: Option<u64>,
    #[serde(default)]
    initial_sample_size: Option<u64>,
    #[serde(default)]
    cutover_fraction: Option<f64>,
    candidates: Vec<CandidateId>,
    // `d` is derived; accepted and checked so serialized params round-trip.
    #[serde(default)]
    d: Option<u32>,
}

impl TryFrom<RawAuditParams> for AuditParams {
    type Error = Error;

    fn try_from(raw: RawAuditParams) -> Result<Self> {
        let mut params = match (raw.delta, raw.c) {
            (Some(delta), Some(c)) => {
                let p = AuditParams::new(raw.n, raw.candidates, delta)?;
                if p.c != c {
                    return Err(Error::param(format!("c = {c} disagrees with d + delta = {}", p.c)));
                }
                p
            }
            (Some(delta), None) => AuditParams::new(raw.n, raw.candidates, delta)?,
            (None, Some(c)) => AuditParams::new(raw.n, raw.candidates, 0)?.with_c(c)?,
            (None, None) => return Err(Error::param("one of delta or c is required")),
        };
        if let Some(d) = raw.d {
            if d != params.d {
                return Err(Error::param(format!("d = {d} is not the digit count of n")));
            }
        }
        if let Some(size) = raw.initial_sample_size {
            params = params.with_initial_sample_size(size)?;
        }
        if let Some(frac) = raw.cutover_fraction {
            params = params.with_cutover_fraction(frac)?;
        }
        Ok(params)
    }
}

impl AuditParams {
    /// Parameters with `c = d + delta`, the default initial sample size
    /// (capped at `n`) and the default cutover fraction.
    pub fn new(n: u64, candidates: Vec<CandidateId>, delta: u32) -> Result<Self> {
        let d = decimal_digits(n)?;
        max_error_rate(delta)?;
        validate_candidates(&candidates)?;
        Ok(Self {
            n,
            d,
            delta: Some(delta),
            c: u64::from(d) + u64::from(delta),
            initial_sample_size: DEFAULT_INITIAL_SAMPLE_SIZE.min(n),
            cutover_fraction: DEFAULT_CUTOVER_FRACTION,
            candidates,
        })
    }

    /// Overrides `c`, bypassing `d + delta`.
    pub fn with_c(mut self, c: u64) -> Result<Self> {
        if c == 0 {
            return Err(Error::param("c must be positive"));
        }
        self.c = c;
        self.delta = None;
        Ok(self)
    }

    pub fn with_initial_sample_size(mut self, size: u64) -> Result<Self> {
        if size == 0 || size > self.n {
            return Err(Error::param(format!("initial sample size {size} must be in 1..={}", self.n)));
        }
        self.initial_sample_size = size;
        Ok(self)
    }

    pub fn with_cutover_fraction(mut self, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::param(format!("cutover fraction {fraction} must be in (0, 1]")));
        }
        self.cutover_fraction = fraction;
        Ok(self)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn delta(&self) -> Option<u32> {
        self.delta
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn initial_sample_size(&self) -> u64 {
        self.initial_sample_size
    }

    pub fn cutover_fraction(&self) -> f64 {
        self.cutover_fraction
    }

    pub fn candidates(&self) -> &[CandidateId] {
        &self.candidates
    }

    /// Tabulated worst-case error rate, when `c` came from `delta`.
    pub fn risk_bound(&self) -> Option<f64> {
        self.delta.and_then(|delta| max_error_rate(delta).ok())
    }

    /// Sample size at which a cutover to a full hand count is recommended.
    pub fn cutover_threshold(&self) -> f64 {
        self.cutover_fraction * self.n as f64
    }

    pub fn is_candidate(&self, id: &str) -> bool {
        self.candidates.iter().any(|c| c == id)
    }
}

fn validate_candidates(candidates: &[CandidateId]) -> Result<()> {
    if candidates.len() < 2 {
        return Err(Error::param("at least two candidates are required"));
    }
    for (i, c) in candidates.iter().enumerate() {
        if c.trim().is_empty() || c.trim() != c {
            return Err(Error::param(format!("candidate id {c:?} is not a bare identifier")));
        }
        if c == INVALID_LABEL || c == "pending" {
            return Err(Error::param(format!("candidate id {c:?} is reserved")));
        }
        if candidates[..i].contains(c) {
            return Err(Error::param(format!("duplicate candidate id {c:?}")));
        }
    }
    Ok(())
}

/// Per-candidate counts in the sample so far.
///
/// `total_drawn` includes invalid ballots, so the candidate counts may sum
/// to less than it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallySnapshot {
    pub counts: IndexMap<CandidateId, u64>,
    pub total_drawn: u64,
}

impl TallySnapshot {
    /// An empty tally over `candidates`, keeping their order.
    pub fn empty(candidates: &[CandidateId]) -> Self {
        Self { counts: candidates.iter().map(|c| (c.clone(), 0)).collect(), total_drawn: 0 }
    }

    /// Builds a tally from `(candidate, count)` pairs; `total_drawn` is the
    /// sum of the counts plus `invalid`.
    pub fn from_counts<I, S>(counts: I, invalid: u64) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<CandidateId>,
    {
        let counts: IndexMap<CandidateId, u64> = counts.into_iter().map(|(c, k)| (c.into(), k)).collect();
        let total_drawn = counts.values().sum::<u64>() + invalid;
        Self { counts, total_drawn }
    }

    pub fn with_total_drawn(mut self, total_drawn: u64) -> Self {
        self.total_drawn = total_drawn;
        self
    }

    /// Adds one ballot. Unknown candidate ids are an error.
    pub fn record(&mut self, interpretation: &Interpretation) -> Result<()> {
        if let Interpretation::Candidate(id) = interpretation {
            let slot = self.counts.get_mut(id).ok_or_else(|| Error::param(format!("unknown candidate {id:?}")))?;
            *slot += 1;
        }
        self.total_drawn += 1;
        Ok(())
    }

    pub fn candidate_total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn invalid(&self) -> u64 {
        self.total_drawn.saturating_sub(self.candidate_total())
    }

    pub fn count(&self, id: &str) -> u64 {
        self.counts.get(id).copied().unwrap_or(0)
    }
}

/// The sample leader against the strongest loser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedPair {
    pub a: u64,
    pub b: u64,
    pub winner: CandidateId,
}

/// Reduces a multi-candidate tally to the leader's count `a` and the
/// strongest loser's count `b`. A shared maximum yields `a == b`, with the
/// earliest such candidate named as `winner`.
pub fn reduce_to_pair(tally: &TallySnapshot) -> Result<ReducedPair> {
    if tally.counts.len() < 2 {
        return Err(Error::param("reduction needs at least two candidates"));
    }
    let mut iter = tally.counts.iter();
    let (first_id, &first) = iter.next().expect("checked length");
    let mut winner = first_id;
    let mut a = first;
    let mut b = 0;
    for (id, &count) in iter {
        if count > a {
            b = a;
            a = count;
            winner = id;
        } else if count > b {
            b = count;
        }
    }
    Ok(ReducedPair { a, b, winner: winner.clone() })
}

/// Outcome of a completed full count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FullCountResult {
    Winner { winner: CandidateId },
    Tie,
}

impl fmt::Display for FullCountResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FullCountResult::Winner { winner } => f.write_str(winner),
            FullCountResult::Tie => f.write_str("tie"),
        }
    }
}

/// The audit verdict at one point in time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    Continue,
    AcceptOutcome { winner: CandidateId },
    RecommendCutover { reason: String },
    FullCountComplete { result: FullCountResult },
}

impl Decision {
    /// Accept and full-count verdicts end the audit; cutover is advisory.
    pub fn is_terminal(&self) -> bool {
        matches!(self, Decision::AcceptOutcome { .. } | Decision::FullCountComplete { .. })
    }

    pub fn accepted_winner(&self) -> Option<&str> {
        match self {
            Decision::AcceptOutcome { winner } => Some(winner),
            _ => None,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Continue => f.write_str("Continue"),
            Decision::AcceptOutcome { winner } => write!(f, "AcceptOutcome({winner})"),
            Decision::RecommendCutover { reason } => write!(f, "RecommendCutover({reason})"),
            Decision::FullCountComplete { result } => write!(f, "FullCountComplete({result})"),
        }
    }
}

/// Plurality result of a tally that covers the whole electorate.
pub fn plurality_result(tally: &TallySnapshot) -> FullCountResult {
    let max = tally.counts.values().copied().max().unwrap_or(0);
    let mut leaders = tally.counts.iter().filter(|(_, &k)| k == max);
    match (leaders.next(), leaders.next()) {
        (Some((id, _)), None) => FullCountResult::Winner { winner: id.clone() },
        _ => FullCountResult::Tie,
    }
}

/// Applies, in order: full-count completion, the stopping rule, the
/// cutover threshold; otherwise the audit continues.
pub fn evaluate(tally: &TallySnapshot, params: &AuditParams) -> Result<Decision> {
    check_consistent(tally, params)?;
    if tally.total_drawn == params.n {
        return Ok(Decision::FullCountComplete { result: plurality_result(tally) });
    }
    let pair = reduce_to_pair(tally)?;
    if diffsum_stop_condition(pair.a, pair.b, params.c) {
        return Ok(Decision::AcceptOutcome { winner: pair.winner });
    }
    if tally.total_drawn as f64 >= params.cutover_threshold() {
        return Ok(Decision::RecommendCutover {
            reason: format!(
                "{} of {} ballots drawn, at or beyond the {:.1}% cutover point; a full hand recount is more economical",
                tally.total_drawn,
                params.n,
                params.cutover_fraction * 100.0
            ),
        });
    }
    Ok(Decision::Continue)
}

fn check_consistent(tally: &TallySnapshot, params: &AuditParams) -> Result<()> {
    if tally.total_drawn > params.n {
        return Err(Error::state(format!("{} ballots drawn from an electorate of {}", tally.total_drawn, params.n)));
    }
    if tally.candidate_total() > tally.total_drawn {
        return Err(Error::state("candidate counts exceed ballots drawn"));
    }
    if !tally.counts.keys().eq(params.candidates.iter()) {
        return Err(Error::state("tally candidates differ from the audit's candidates"));
    }
    Ok(())
}

/// Sample size at which the audit is expected to stop on an electorate
/// with true margin `m`: `c / m^2`.
pub fn expected_stop_size(c: u64, m: f64) -> Result<f64> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::param(format!("margin {m} must be in (0, 1]")));
    }
    // Dividing twice keeps c / 0.2^2 exactly 175.0; 0.2 * 0.2 rounds up.
    Ok(c as f64 / m / m)
}
