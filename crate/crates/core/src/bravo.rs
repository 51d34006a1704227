//! Two-candidate BRAVO ballot-polling audit, kept as a comparison baseline.
//!
//! This is Wald's SPRT for the reported winner's share `p_w` against a tie:
//! each winner ballot multiplies the likelihood ratio by `2 p_w`, each loser
//! ballot by `2 (1 - p_w)`, and the outcome is accepted once the ratio
//! reaches `1 / alpha`. The ratio is tracked in the log domain.

use serde::{Deserialize, Serialize};

use crate::audit::{CandidateId, Decision};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBravoParams")]
pub struct BravoParams {
    alpha: f64,
    reported_winner_share: f64,
}

#[derive(Deserialize)]
struct RawBravoParams {
    alpha: f64,
    reported_winner_share: f64,
}

impl TryFrom<RawBravoParams> for BravoParams {
    type Error = Error;

    fn try_from(raw: RawBravoParams) -> Result<Self> {
        BravoParams::new(raw.alpha, raw.reported_winner_share)
    }
}

impl BravoParams {
    pub fn new(alpha: f64, reported_winner_share: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param(format!("risk limit {alpha} must be in (0, 1)")));
        }
        if !(reported_winner_share > 0.5 && reported_winner_share < 1.0) {
            return Err(Error::param(format!("reported winner share {reported_winner_share} must be in (0.5, 1)")));
        }
        Ok(Self { alpha, reported_winner_share })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn reported_winner_share(&self) -> f64 {
        self.reported_winner_share
    }

    /// `ln(2 p_w)`, added per winner ballot.
    pub fn winner_increment(&self) -> f64 {
        (2.0 * self.reported_winner_share).ln()
    }

    /// `ln(2 (1 - p_w))`, added per loser ballot.
    pub fn loser_increment(&self) -> f64 {
        (2.0 * (1.0 - self.reported_winner_share)).ln()
    }

    /// `ln(1 / alpha)`.
    pub fn log_threshold(&self) -> f64 {
        -self.alpha.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallotFor {
    Winner,
    Loser,
    Other,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BravoState {
    pub log_statistic: f64,
    pub ballots_seen: u64,
}

impl BravoState {
    pub fn new() -> Self {
        Self::default()
    }
}

pub fn bravo_update(state: BravoState, ballot: BallotFor, params: &BravoParams) -> BravoState {
    let step = match ballot {
        BallotFor::Winner => params.winner_increment(),
        BallotFor::Loser => params.loser_increment(),
        BallotFor::Other => 0.0,
    };
    BravoState { log_statistic: state.log_statistic + step, ballots_seen: state.ballots_seen + 1 }
}

/// Accepts `reported_winner` once the log statistic reaches `ln(1/alpha)`.
pub fn bravo_decision(state: &BravoState, params: &BravoParams, reported_winner: &CandidateId) -> Decision {
    if state.log_statistic >= params.log_threshold() {
        Decision::AcceptOutcome { winner: reported_winner.clone() }
    } else {
        Decision::Continue
    }
}

/// Approximate expected sample size: `2 ln(1/alpha) / m^2`.
pub fn bravo_expected_size(alpha: f64, m: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("risk limit {alpha} must be in (0, 1)")));
    }
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::param(format!("margin {m} must be in (0, 1]")));
    }
    Ok(2.0 * (1.0 / alpha).ln() / (m * m))
}
