//! Monte Carlo harness for ballot-polling audits on synthetic electorates.
//!
//! Trial `i` of a simulation draws from the stream `(master_seed, i)`, so its
//! outcome does not depend on which worker thread runs it or in what order.
//! Ballots are drawn by sequential urn sampling over the label counts: at each
//! step the next label is chosen with probability proportional to how many
//! undrawn ballots carry it, which is the label sequence of a uniformly random
//! permutation of the electorate.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{
    self, choose_c, diffsum_stop_condition, AuditParams, CandidateId, Decision, FullCountResult, Interpretation,
    TallySnapshot, DEFAULT_CUTOVER_FRACTION, DEFAULT_INITIAL_SAMPLE_SIZE,
};
use crate::bravo::{bravo_decision, bravo_update, BallotFor, BravoParams, BravoState};
use crate::error::{Error, Result};
use crate::sampling::{
    next_sample_size, population_counts, synthetic_candidates, EscalationSchedule, PopulationCounts, SeededRng, Truth,
};
use crate::stats::{binomial_sigma, wilson_interval, ConfidenceInterval, SizeSummary, Z_95};

pub const DEFAULT_TRIALS: u64 = 10_000;

/// Largest electorate the exhaustive oracle will enumerate.
pub const MAX_ORACLE_N: u64 = 12;

/// Which outcome a simulated DiffSum audit may confirm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffSumTarget {
    /// Only the reported winner `A` can be accepted, once `a > b` and
    /// `(a - b)^2 > c (a + b)`. A sample led by `B` keeps the audit going.
    /// This is the two-candidate audit of a reported outcome, and is
    /// directly comparable with BRAVO, which also confirms `A` only.
    #[default]
    ReportedWinner,
    /// Whichever candidate leads the sample can be accepted, as in
    /// [`audit::evaluate`].
    SampleLeader,
}

/// The stopping rule under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RuleConfig {
    /// DiffSum with either an explicit `c` or `c = d + delta`.
    #[serde(rename = "diffsum")]
    DiffSum {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<u32>,
        #[serde(default)]
        target: DiffSumTarget,
    },
    Bravo {
        alpha: f64,
        reported_winner_share: f64,
    },
}

impl RuleConfig {
    pub fn diffsum_c(c: u64) -> Self {
        RuleConfig::DiffSum { c: Some(c), delta: None, target: DiffSumTarget::ReportedWinner }
    }

    pub fn diffsum_delta(delta: u32) -> Self {
        RuleConfig::DiffSum { c: None, delta: Some(delta), target: DiffSumTarget::ReportedWinner }
    }

    /// The same DiffSum rule, accepting whichever candidate leads the sample.
    pub fn sample_leader(self) -> Self {
        match self {
            RuleConfig::DiffSum { c, delta, .. } => {
                RuleConfig::DiffSum { c, delta, target: DiffSumTarget::SampleLeader }
            }
            other => other,
        }
    }

    pub fn bravo(alpha: f64, reported_winner_share: f64) -> Self {
        RuleConfig::Bravo { alpha, reported_winner_share }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RuleConfig::DiffSum { .. } => "diffsum",
            RuleConfig::Bravo { .. } => "bravo",
        }
    }

    fn resolve(&self, n: u64) -> Result<Rule> {
        match *self {
            RuleConfig::DiffSum { c: Some(c), delta: None, target } => {
                if c == 0 {
                    return Err(Error::param("c must be positive"));
                }
                Ok(Rule::DiffSum { c, target })
            }
            RuleConfig::DiffSum { c: None, delta: Some(delta), target } => {
                audit::max_error_rate(delta)?;
                Ok(Rule::DiffSum { c: choose_c(n, delta)?, target })
            }
            RuleConfig::DiffSum { .. } => Err(Error::param("diffsum needs exactly one of c or delta")),
            RuleConfig::Bravo { alpha, reported_winner_share } => {
                Ok(Rule::Bravo(BravoParams::new(alpha, reported_winner_share)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Rule {
    DiffSum { c: u64, target: DiffSumTarget },
    Bravo(BravoParams),
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_initial() -> u64 {
    DEFAULT_INITIAL_SAMPLE_SIZE
}

fn default_cutover_fraction() -> f64 {
    DEFAULT_CUTOVER_FRACTION
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: u64,
    pub truth: Truth,
    pub rule: RuleConfig,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub schedule: EscalationSchedule,
    #[serde(default = "default_initial")]
    pub initial_sample_size: u64,
    #[serde(default)]
    pub cutover_enabled: bool,
    #[serde(default = "default_cutover_fraction")]
    pub cutover_fraction: f64,
}

impl SimulationConfig {
    /// A config with the defaults used for reproducing published results:
    /// 10,000 trials, per-ballot checks from 24 ballots, no cutover.
    pub fn new(n: u64, truth: Truth, rule: RuleConfig) -> Self {
        Self {
            n,
            truth,
            rule,
            trials: DEFAULT_TRIALS,
            master_seed: 0,
            schedule: EscalationSchedule::PerBallot,
            initial_sample_size: DEFAULT_INITIAL_SAMPLE_SIZE,
            cutover_enabled: false,
            cutover_fraction: DEFAULT_CUTOVER_FRACTION,
        }
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn with_schedule(mut self, schedule: EscalationSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_initial_sample_size(mut self, size: u64) -> Self {
        self.initial_sample_size = size;
        self
    }

    pub fn with_cutover(mut self, fraction: f64) -> Self {
        self.cutover_enabled = true;
        self.cutover_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.prepare().map(|_| ())
    }

    fn prepare(&self) -> Result<Prepared> {
        if self.trials == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        let population = population_counts(self.n, &self.truth)?;
        if self.initial_sample_size == 0 || self.initial_sample_size > self.n {
            return Err(Error::param(format!(
                "initial sample size {} must be in 1..={}",
                self.initial_sample_size, self.n
            )));
        }
        self.schedule.validate()?;
        if !(self.cutover_fraction > 0.0 && self.cutover_fraction <= 1.0) {
            return Err(Error::param("cutover fraction must be in (0, 1]"));
        }
        let rule = self.rule.resolve(self.n)?;
        Ok(Prepared { population, rule, cutover_at: self.cutover_fraction * self.n as f64 })
    }

    /// `c` actually used by a DiffSum rule.
    pub fn resolved_c(&self) -> Option<u64> {
        match self.rule.resolve(self.n) {
            Ok(Rule::DiffSum { c, .. }) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Prepared {
    population: PopulationCounts,
    rule: Rule,
    cutover_at: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_index: u64,
    pub stopped_at: u64,
    pub decision: Decision,
    pub wrong_acceptance: bool,
}

/// The unique true plurality winner of a synthetic electorate, if any.
fn true_winner(population: &PopulationCounts) -> Option<&'static str> {
    match population.winner.cmp(&population.loser) {
        std::cmp::Ordering::Greater => Some("A"),
        std::cmp::Ordering::Less => Some("B"),
        std::cmp::Ordering::Equal => None,
    }
}

fn is_wrong(decision: &Decision, population: &PopulationCounts) -> bool {
    match decision.accepted_winner() {
        Some(w) => true_winner(population) != Some(w),
        None => false,
    }
}

/// Runs one trial, deterministic in `(config, trial_index)`.
pub fn run_trial(config: &SimulationConfig, trial_index: u64) -> Result<TrialOutcome> {
    let prepared = config.prepare()?;
    Ok(trial(config, &prepared, trial_index))
}

#[derive(Clone, Copy)]
enum Label {
    Winner,
    Loser,
    Invalid,
}

fn trial(config: &SimulationConfig, prepared: &Prepared, trial_index: u64) -> TrialOutcome {
    let n = config.n;
    let pop = prepared.population;
    let mut rng = SeededRng::new(config.master_seed, trial_index);
    let (mut left_w, mut left_l) = (pop.winner, pop.loser);
    let (mut a, mut b, mut drawn) = (0u64, 0u64, 0u64);
    let mut bravo = BravoState::new();
    let mut checkpoint = config.initial_sample_size;

    let decision = loop {
        while drawn < checkpoint {
            let r = rng.below(n - drawn);
            let label = if r < left_w {
                Label::Winner
            } else if r < left_w + left_l {
                Label::Loser
            } else {
                Label::Invalid
            };
            let ballot = match label {
                Label::Winner => {
                    left_w -= 1;
                    a += 1;
                    BallotFor::Winner
                }
                Label::Loser => {
                    left_l -= 1;
                    b += 1;
                    BallotFor::Loser
                }
                Label::Invalid => BallotFor::Other,
            };
            if let Rule::Bravo(params) = &prepared.rule {
                bravo = bravo_update(bravo, ballot, params);
            }
            drawn += 1;
        }

        if let Some(d) = checkpoint_decision(config, prepared, a, b, drawn, &bravo) {
            break d;
        }
        checkpoint = next_sample_size(&config.schedule, drawn, n).expect("drawn < n after a non-terminal check");
    };

    TrialOutcome { trial_index, stopped_at: drawn, wrong_acceptance: is_wrong(&decision, &pop), decision }
}

/// Decision at a schedule point, in the same order as [`audit::evaluate`]:
/// full count, then the rule, then (if enabled) cutover. `None` means continue.
fn checkpoint_decision(
    config: &SimulationConfig,
    prepared: &Prepared,
    a: u64,
    b: u64,
    drawn: u64,
    bravo: &BravoState,
) -> Option<Decision> {
    let [cand_a, cand_b] = synthetic_candidates();
    if drawn == config.n {
        let result = match a.cmp(&b) {
            std::cmp::Ordering::Greater => FullCountResult::Winner { winner: cand_a },
            std::cmp::Ordering::Less => FullCountResult::Winner { winner: cand_b },
            std::cmp::Ordering::Equal => FullCountResult::Tie,
        };
        return Some(Decision::FullCountComplete { result });
    }
    let accepted = match &prepared.rule {
        Rule::DiffSum { c, target: DiffSumTarget::ReportedWinner } => {
            diffsum_stop_condition(a, b, *c).then_some(Decision::AcceptOutcome { winner: cand_a })
        }
        Rule::DiffSum { c, target: DiffSumTarget::SampleLeader } => {
            // leader against the other; a tie at the top cannot pass
            let (hi, lo, leader) = if b > a { (b, a, cand_b) } else { (a, b, cand_a) };
            diffsum_stop_condition(hi, lo, *c).then_some(Decision::AcceptOutcome { winner: leader })
        }
        Rule::Bravo(params) => match bravo_decision(bravo, params, &cand_a) {
            Decision::Continue => None,
            d => Some(d),
        },
    };
    if accepted.is_some() {
        return accepted;
    }
    if config.cutover_enabled && drawn as f64 >= prepared.cutover_at {
        return Some(Decision::RecommendCutover { reason: format!("{drawn} of {} ballots drawn", config.n) });
    }
    None
}

/// Aggregated results of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    /// Threshold constant actually used (DiffSum only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<u64>,
    pub trials: u64,
    pub wrong_acceptances: u64,
    pub wrong_acceptance_rate: f64,
    pub wrong_acceptance_ci: ConfidenceInterval,
    pub standard_error: f64,
    pub acceptance_rate: f64,
    pub full_count_rate: f64,
    pub cutover_rate: f64,
    pub stopped_at: SizeSummary,
    /// Wall-clock duration. Excluded from determinism comparisons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

impl SimulationReport {
    /// The report with its wall-clock duration removed, leaving only
    /// content that is a function of the configuration.
    pub fn without_timing(mut self) -> Self {
        self.elapsed_seconds = None;
        self
    }

    /// Rule parameters in `key=value;...` form, as written to CSV.
    pub fn rule_params(&self) -> String {
        match self.config.rule {
            RuleConfig::DiffSum { delta, target, .. } => {
                let mut p = match (delta, self.c) {
                    (Some(d), Some(c)) => format!("c={c};delta={d}"),
                    (_, Some(c)) => format!("c={c}"),
                    _ => String::new(),
                };
                if target == DiffSumTarget::SampleLeader {
                    p.push_str(";target=sample_leader");
                }
                p
            }
            RuleConfig::Bravo { alpha, reported_winner_share } => {
                format!("alpha={alpha};p_w={reported_winner_share}")
            }
        }
    }
}

/// Runs all trials on the global thread pool.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationReport> {
    run_simulation_with_threads(config, None)
}

/// Runs all trials on `threads` workers (`None` uses the global pool). The
/// report does not depend on the thread count.
pub fn run_simulation_with_threads(config: &SimulationConfig, threads: Option<usize>) -> Result<SimulationReport> {
    let prepared = config.prepare()?;
    let started = Instant::now();
    let run =
        || -> Vec<TrialOutcome> { (0..config.trials).into_par_iter().map(|i| trial(config, &prepared, i)).collect() };
    let outcomes = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::state(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let mut report = aggregate(config, &outcomes);
    report.elapsed_seconds = Some(started.elapsed().as_secs_f64());
    Ok(report)
}

fn aggregate(config: &SimulationConfig, outcomes: &[TrialOutcome]) -> SimulationReport {
    let trials = outcomes.len() as u64;
    let count = |f: fn(&TrialOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u64;
    let wrong = count(|o| o.wrong_acceptance);
    let accepted = count(|o| matches!(o.decision, Decision::AcceptOutcome { .. }));
    let full = count(|o| matches!(o.decision, Decision::FullCountComplete { .. }));
    let cutover = count(|o| matches!(o.decision, Decision::RecommendCutover { .. }));
    let mut sizes: Vec<u64> = outcomes.iter().map(|o| o.stopped_at).collect();
    let rate = wrong as f64 / trials as f64;
    SimulationReport {
        config: config.clone(),
        c: config.resolved_c(),
        trials,
        wrong_acceptances: wrong,
        wrong_acceptance_rate: rate,
        wrong_acceptance_ci: wilson_interval(wrong, trials, Z_95),
        standard_error: binomial_sigma(rate, trials),
        acceptance_rate: accepted as f64 / trials as f64,
        full_count_rate: full as f64 / trials as f64,
        cutover_rate: cutover as f64 / trials as f64,
        stopped_at: SizeSummary::from_sizes(&mut sizes).expect("at least one trial"),
        elapsed_seconds: None,
    }
}

pub const CSV_HEADER: [&str; 11] =
    ["n", "rule", "params", "trials", "rate", "ci_low", "ci_high", "mean_size", "median", "p90", "full_count_rate"];

/// Writes one CSV row per report, with the fixed column order of [`CSV_HEADER`].
pub fn write_reports_csv<W: Write>(reports: &[SimulationReport], writer: W) -> std::io::Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for r in reports {
        wtr.write_record([
            r.config.n.to_string(),
            r.config.rule.name().to_string(),
            r.rule_params(),
            r.trials.to_string(),
            format!("{:.6}", r.wrong_acceptance_rate),
            format!("{:.6}", r.wrong_acceptance_ci.low),
            format!("{:.6}", r.wrong_acceptance_ci.high),
            format!("{:.3}", r.stopped_at.mean),
            format!("{}", r.stopped_at.median),
            r.stopped_at.p90.to_string(),
            format!("{:.6}", r.full_count_rate),
        ])?;
    }
    wtr.flush()
}

/// An exact probability `numerator / denominator`, in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactFraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl ExactFraction {
    fn new(numerator: u64, denominator: u64) -> Self {
        let g = gcd(numerator, denominator).max(1);
        Self { numerator: numerator / g, denominator: denominator / g }
    }

    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exact wrong-acceptance probability by enumerating every distinguishable
/// label sequence of the electorate. All sequences are equally likely, so
/// the probability is (wrong sequences) / (all sequences).
///
/// Each prefix is judged with the library's reference path: DiffSum through
/// [`audit::evaluate`] on a [`TallySnapshot`] (cutover disabled, and with
/// acceptances of `B` ignored when only the reported winner is audited), BRAVO
/// through [`bravo_update`] and [`bravo_decision`]. Checks happen after every
/// ballot from `initial_sample_size` on.
pub fn exhaustive_error_oracle(
    n: u64,
    truth: &Truth,
    rule: &RuleConfig,
    initial_sample_size: u64,
) -> Result<ExactFraction> {
    if n > MAX_ORACLE_N {
        return Err(Error::param(format!("exhaustive oracle is limited to n <= {MAX_ORACLE_N}, got {n}")));
    }
    let population = population_counts(n, truth)?;
    if initial_sample_size == 0 || initial_sample_size > n {
        return Err(Error::param("initial sample size must be in 1..=n"));
    }
    let rule = rule.resolve(n)?;
    let candidates = synthetic_candidates().to_vec();
    let params = match rule {
        Rule::DiffSum { c, .. } => {
            Some(AuditParams::new(n, candidates.clone(), 0)?.with_c(c)?.with_cutover_fraction(1.0)?)
        }
        Rule::Bravo(_) => None,
    };
    let mut walker = OracleWalker {
        rule,
        params,
        initial: initial_sample_size,
        truth: true_winner(&population).map(String::from),
        wrong: 0,
        total: 0,
    };
    let tally = TallySnapshot::empty(&candidates);
    walker.descend([population.winner, population.loser, population.invalid], &tally, BravoState::new());
    debug_assert_eq!(walker.total, multinomial(population.winner, population.loser, population.invalid));
    Ok(ExactFraction::new(walker.wrong, walker.total))
}

struct OracleWalker {
    rule: Rule,
    params: Option<AuditParams>,
    initial: u64,
    truth: Option<CandidateId>,
    wrong: u64,
    total: u64,
}

impl OracleWalker {
    fn descend(&mut self, left: [u64; 3], tally: &TallySnapshot, bravo: BravoState) {
        for (slot, interp, ballot) in [
            (0, Interpretation::candidate("A"), BallotFor::Winner),
            (1, Interpretation::candidate("B"), BallotFor::Loser),
            (2, Interpretation::Invalid, BallotFor::Other),
        ] {
            if left[slot] == 0 {
                continue;
            }
            let mut left = left;
            left[slot] -= 1;
            let mut tally = tally.clone();
            tally.record(&interp).expect("known label");
            let bravo = match &self.rule {
                Rule::Bravo(params) => bravo_update(bravo, ballot, params),
                Rule::DiffSum { .. } => bravo,
            };

            let decision = self.judge(&tally, &bravo, left.iter().sum::<u64>() == 0);
            let stop = match &decision {
                Decision::FullCountComplete { .. } => true,
                Decision::AcceptOutcome { .. } => tally.total_drawn >= self.initial,
                _ => false,
            };
            if stop {
                let completions = multinomial(left[0], left[1], left[2]);
                self.total += completions;
                if decision.accepted_winner().is_some_and(|w| self.truth.as_deref() != Some(w)) {
                    self.wrong += completions;
                }
            } else {
                self.descend(left, &tally, bravo);
            }
        }
    }

    fn judge(&self, tally: &TallySnapshot, bravo: &BravoState, exhausted: bool) -> Decision {
        match &self.rule {
            Rule::DiffSum { target, .. } => {
                let params = self.params.as_ref().expect("diffsum params");
                match audit::evaluate(tally, params).expect("consistent tally") {
                    Decision::AcceptOutcome { winner } if *target == DiffSumTarget::ReportedWinner && winner != "A" => {
                        Decision::Continue
                    }
                    d => d,
                }
            }
            Rule::Bravo(_) if exhausted => Decision::FullCountComplete { result: audit::plurality_result(tally) },
            Rule::Bravo(params) => bravo_decision(bravo, params, &"A".to_string()),
        }
    }
}

fn multinomial(a: u64, b: u64, c: u64) -> u64 {
    binomial(a + b + c, a) * binomial(b + c, b)
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// One cell of the delta-table reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTableRow {
    pub n: u64,
    pub d: u32,
    pub delta: u32,
    pub c: u64,
    pub trials: u64,
    pub wrong_acceptance_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Tabulated maximum error rate for `delta`.
    pub bound: f64,
    /// Binomial standard error at the bound.
    pub sigma: f64,
    pub verdict: Verdict,
    pub mean_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Measured rate within bound + 3 sigma, with a usefully narrow interval.
    Pass,
    /// Within bound + 3 sigma, but the interval is wider than the bound itself.
    Inconclusive,
    /// Measured rate above bound + 3 sigma.
    Fail,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }
}

/// Measures the wrong-acceptance rate of DiffSum on tie electorates for
/// every `(n, delta)` pair. All cells share `master_seed`, so neighbouring
/// `delta` values are compared on the same draw sequences.
pub fn reproduce_delta_table(
    n_grid: &[u64],
    delta_grid: &[u32],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<DeltaTableRow>> {
    let mut rows = Vec::with_capacity(n_grid.len() * delta_grid.len());
    for &n in n_grid {
        for &delta in delta_grid {
            let bound = audit::max_error_rate(delta)?;
            let config = SimulationConfig::new(n, Truth::tie(), RuleConfig::diffsum_delta(delta))
                .with_trials(trials)
                .with_seed(master_seed);
            let report = run_simulation(&config)?;
            let sigma = binomial_sigma(bound, trials);
            let rate = report.wrong_acceptance_rate;
            let verdict = if rate > bound + 3.0 * sigma {
                Verdict::Fail
            } else if report.wrong_acceptance_ci.width() > bound {
                Verdict::Inconclusive
            } else {
                Verdict::Pass
            };
            tracing::info!(n, delta, rate, verdict = verdict.as_str(), "delta table cell");
            rows.push(DeltaTableRow {
                n,
                d: audit::decimal_digits(n)?,
                delta,
                c: report.c.expect("diffsum"),
                trials,
                wrong_acceptance_rate: rate,
                ci_low: report.wrong_acceptance_ci.low,
                ci_high: report.wrong_acceptance_ci.high,
                bound,
                sigma,
                verdict,
                mean_size: report.stopped_at.mean,
            });
        }
    }
    Ok(rows)
}

/// Adjacent `delta` pairs (same `n`) whose rates increase by more than two
/// standard errors of the smaller-`delta` rate.
pub fn monotonicity_violations(rows: &[DeltaTableRow]) -> Vec<(u64, u32, u32)> {
    rows.windows(2)
        .filter(|w| w[0].n == w[1].n && w[1].delta == w[0].delta + 1)
        .filter(|w| {
            let sigma = binomial_sigma(w[0].wrong_acceptance_rate, w[0].trials);
            w[1].wrong_acceptance_rate > w[0].wrong_acceptance_rate + 2.0 * sigma
        })
        .map(|w| (w[0].n, w[0].delta, w[1].delta))
        .collect()
}

pub const DELTA_TABLE_CSV_HEADER: [&str; 11] =
    ["n", "d", "delta", "c", "trials", "rate", "ci_low", "ci_high", "bound", "mean_size", "verdict"];

pub fn write_delta_table_csv<W: Write>(rows: &[DeltaTableRow], writer: W) -> std::io::Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    wtr.write_record(DELTA_TABLE_CSV_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.n.to_string(),
            r.d.to_string(),
            r.delta.to_string(),
            r.c.to_string(),
            r.trials.to_string(),
            format!("{:.6}", r.wrong_acceptance_rate),
            format!("{:.6}", r.ci_low),
            format!("{:.6}", r.ci_high),
            format!("{:.2}", r.bound),
            format!("{:.3}", r.mean_size),
            r.verdict.as_str().to_string(),
        ])?;
    }
    wtr.flush()
}
