//! Reproducible sampling without replacement.
//!
//! Every random choice comes from a [`SeededRng`]: ChaCha8 keyed with
//! `ChaCha8Rng::seed_from_u64(seed)` and switched to stream `stream_id`.
//! Bounded integers are drawn with Lemire's multiply-and-reject method on
//! raw `u64` output, so draw sequences depend only on `(seed, stream_id)`
//! and not on the `rand` version or the platform.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::{CandidateId, Interpretation};
use crate::error::{Error, Result};

/// A deterministic random stream identified by `(seed, stream_id)`.
#[derive(Clone)]
pub struct SeededRng {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh copy positioned at the start of the same stream.
    pub fn restart(&self) -> Self {
        Self::new(self.seed, self.stream_id)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..bound`. Panics if `bound` is zero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let mut m = u128::from(self.next_u64()) * u128::from(bound);
        if (m as u64) < bound {
            let threshold = bound.wrapping_neg() % bound;
            while (m as u64) < threshold {
                m = u128::from(self.next_u64()) * u128::from(bound);
            }
        }
        (m >> 64) as u64
    }
}

impl fmt::Debug for SeededRng {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeededRng").field("seed", &self.seed).field("stream_id", &self.stream_id).finish()
    }
}

/// Serializable identity of a [`SeededRng`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

impl From<&SeededRng> for RngSpec {
    fn from(rng: &SeededRng) -> Self {
        RngSpec { seed: rng.seed, stream_id: rng.stream_id }
    }
}

impl From<RngSpec> for SeededRng {
    fn from(spec: RngSpec) -> Self {
        SeededRng::new(spec.seed, spec.stream_id)
    }
}

/// A uniformly random permutation of `0..len`, revealed one position at a
/// time by an incremental Fisher-Yates shuffle. The first `k` values never
/// depend on how many more are requested later.
#[derive(Debug, Clone)]
pub struct PermutationStream {
    indices: Vec<usize>,
    revealed: usize,
    rng: SeededRng,
}

impl PermutationStream {
    pub fn new(len: usize, rng: SeededRng) -> Self {
        Self { indices: (0..len).collect(), revealed: 0, rng }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn revealed(&self) -> &[usize] {
        &self.indices[..self.revealed]
    }

    pub fn remaining(&self) -> usize {
        self.indices.len() - self.revealed
    }
}

impl Iterator for PermutationStream {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let i = self.revealed;
        let remaining = self.indices.len().checked_sub(i).filter(|&r| r > 0)?;
        let j = i + self.rng.below(remaining as u64) as usize;
        self.indices.swap(i, j);
        self.revealed += 1;
        Some(self.indices[i])
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.remaining();
        (r, Some(r))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub ballot_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Interpretation>,
}

/// The ordered list of cast ballots that samples are drawn from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallotManifest {
    entries: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
struct CsvRow {
    ballot_id: String,
    #[serde(default)]
    label: Option<String>,
}

impl BallotManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::param("manifest must list at least one ballot"));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.ballot_id.is_empty() {
                return Err(Error::param("empty ballot id in manifest"));
            }
            if !seen.insert(e.ballot_id.as_str()) {
                return Err(Error::param(format!("duplicate ballot id {:?}", e.ballot_id)));
            }
        }
        Ok(Self { entries })
    }

    /// An unlabeled manifest, as used by live audits.
    pub fn from_ids<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(ids.into_iter().map(|id| ManifestEntry { ballot_id: id.into(), label: None }).collect())
    }

    /// Reads the `ballot_id,label` CSV format. The label column may be
    /// absent or empty.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::param(format!("manifest header: {e}")))?.clone();
        if headers.get(0) != Some("ballot_id") || headers.len() > 2 || (headers.len() == 2 && &headers[1] != "label") {
            return Err(Error::param("manifest header must be `ballot_id,label`"));
        }
        let mut entries = Vec::new();
        for (line, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(|e| Error::param(format!("manifest row {}: {e}", line + 2)))?;
            let label = match row.label {
                Some(l) if !l.is_empty() => Some(Interpretation::try_from(l)?),
                _ => None,
            };
            entries.push(ManifestEntry { ballot_id: row.ballot_id, label });
        }
        Self::new(entries)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::param(format!("cannot open manifest {}: {e}", path.display())))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        wtr.write_record(["ballot_id", "label"])?;
        for e in &self.entries {
            wtr.write_record([e.ballot_id.as_str(), e.label.as_ref().map_or("", |l| l.as_str())])?;
        }
        wtr.flush()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn ballot_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.ballot_id.as_str())
    }

    /// The same ballots with labels dropped.
    pub fn unlabeled(&self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|e| ManifestEntry { ballot_id: e.ballot_id.clone(), label: None })
                .collect(),
        }
    }

    /// SHA-256 over the ballot ids in order, each followed by a newline.
    /// Labels do not contribute.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for e in &self.entries {
            hasher.update(e.ballot_id.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

/// Draws `k` distinct ballot ids: the first `k` positions of the random
/// permutation fixed by `rng`.
pub fn draw_without_replacement(manifest: &BallotManifest, k: usize, rng: &SeededRng) -> Result<Vec<String>> {
    if k > manifest.len() {
        return Err(Error::param(format!("cannot draw {k} ballots from a manifest of {}", manifest.len())));
    }
    Ok(PermutationStream::new(manifest.len(), rng.restart())
        .take(k)
        .map(|i| manifest.entries[i].ballot_id.clone())
        .collect())
}

/// How the sample grows when the stopping rule has not yet been met.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EscalationSchedule {
    #[default]
    PerBallot,
    FixedStep {
        step: u64,
    },
    Geometric {
        factor: f64,
    },
}

impl EscalationSchedule {
    pub fn fixed_step(step: u64) -> Result<Self> {
        let s = EscalationSchedule::FixedStep { step };
        s.validate()?;
        Ok(s)
    }

    pub fn geometric(factor: f64) -> Result<Self> {
        let s = EscalationSchedule::Geometric { factor };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EscalationSchedule::PerBallot => Ok(()),
            EscalationSchedule::FixedStep { step } if step >= 1 => Ok(()),
            EscalationSchedule::FixedStep { .. } => Err(Error::param("escalation step must be positive")),
            EscalationSchedule::Geometric { factor } if factor > 1.0 && factor.is_finite() => Ok(()),
            EscalationSchedule::Geometric { factor } => {
                Err(Error::param(format!("escalation factor {factor} must exceed 1")))
            }
        }
    }
}

impl fmt::Display for EscalationSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EscalationSchedule::PerBallot => f.write_str("per-ballot"),
            EscalationSchedule::FixedStep { step } => write!(f, "step:{step}"),
            EscalationSchedule::Geometric { factor } => write!(f, "geometric:{factor}"),
        }
    }
}

/// Parses `per-ballot`, `step:K` or `geometric:F`.
impl FromStr for EscalationSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("unrecognized schedule {s:?} (per-ballot | step:K | geometric:F)"));
        match s.split_once(':') {
            None if s == "per-ballot" => Ok(EscalationSchedule::PerBallot),
            Some(("step", k)) => EscalationSchedule::fixed_step(k.parse().map_err(|_| bad())?),
            Some(("geometric", f)) => EscalationSchedule::geometric(f.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

/// The next sample size after `current`, capped at `n`.
pub fn next_sample_size(schedule: &EscalationSchedule, current: u64, n: u64) -> Result<u64> {
    if current >= n {
        return Err(Error::state(format!("sample of {current} already covers all {n} ballots")));
    }
    schedule.validate()?;
    let next = match *schedule {
        EscalationSchedule::PerBallot => current + 1,
        EscalationSchedule::FixedStep { step } => current.saturating_add(step),
        EscalationSchedule::Geometric { factor } => {
            let grown = (current as f64 * factor).ceil();
            let grown = if grown >= u64::MAX as f64 { u64::MAX } else { grown as u64 };
            grown.max(current + 1)
        }
    };
    Ok(next.min(n))
}

/// True composition of an electorate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truth {
    /// Two candidates; the winner holds `round(n (1 + m) / 2)` ballots.
    Margin { margin: f64 },
    /// Explicit counts for the reported winner `A`, the reported runner-up
    /// `B` and invalid ballots. `loser > winner` models a wrong reported outcome.
    Counts {
        winner: u64,
        loser: u64,
        #[serde(default)]
        invalid: u64,
    },
}

impl Truth {
    pub fn tie() -> Self {
        Truth::Margin { margin: 0.0 }
    }

    pub fn margin(m: f64) -> Self {
        Truth::Margin { margin: m }
    }
}

/// Ballot counts of a synthetic two-candidate electorate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationCounts {
    pub winner: u64,
    pub loser: u64,
    pub invalid: u64,
}

impl PopulationCounts {
    pub fn total(&self) -> u64 {
        self.winner + self.loser + self.invalid
    }

    pub fn is_tie(&self) -> bool {
        self.winner == self.loser
    }
}

/// Resolves `truth` into counts for an electorate of `n`.
pub fn population_counts(n: u64, truth: &Truth) -> Result<PopulationCounts> {
    if n < 2 {
        return Err(Error::param("electorate must have at least two ballots"));
    }
    match *truth {
        Truth::Margin { margin } => {
            if !(0.0..=1.0).contains(&margin) {
                return Err(Error::param(format!("margin {margin} must be in [0, 1]")));
            }
            if margin == 0.0 && n % 2 == 1 {
                return Err(Error::param(format!("an exact tie needs an even electorate, got {n}")));
            }
            let winner = (n as f64 * (1.0 + margin) / 2.0).round() as u64;
            Ok(PopulationCounts { winner, loser: n - winner, invalid: 0 })
        }
        Truth::Counts { winner, loser, invalid } => {
            let counts = PopulationCounts { winner, loser, invalid };
            if counts.total() != n {
                return Err(Error::param(format!("counts {winner} + {loser} + {invalid} do not sum to n = {n}")));
            }
            Ok(counts)
        }
    }
}

/// Candidate ids used for synthetic electorates: the true (or tied) winner
/// first, then the runner-up.
pub fn synthetic_candidates() -> [CandidateId; 2] {
    ["A".to_string(), "B".to_string()]
}

/// Builds a labeled manifest for a synthetic electorate. Ballots are listed
/// winner first, then runner-up, then invalid; draws are random so the
/// listing order carries no information.
pub fn synthetic_population(n: u64, truth: &Truth) -> Result<BallotManifest> {
    let counts = population_counts(n, truth)?;
    let [a, b] = synthetic_candidates();
    let width = n.to_string().len();
    let labels = std::iter::repeat_n(Interpretation::Candidate(a), counts.winner as usize)
        .chain(std::iter::repeat_n(Interpretation::Candidate(b), counts.loser as usize))
        .chain(std::iter::repeat_n(Interpretation::Invalid, counts.invalid as usize));
    BallotManifest::new(
        labels
            .enumerate()
            .map(|(i, label)| ManifestEntry { ballot_id: format!("ballot-{:0width$}", i + 1), label: Some(label) })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(n: usize) -> BallotManifest {
        BallotManifest::from_ids((0..n).map(|i| format!("b{i}"))).unwrap()
    }

    #[test]
    fn exhaustive_draw_is_a_permutation() {
        let m = manifest(50);
        let mut ids = draw_without_replacement(&m, 50, &SeededRng::new(7, 0)).unwrap();
        ids.sort();
        let mut all: Vec<String> = m.ballot_ids().map(String::from).collect();
        all.sort();
        assert_eq!(ids, all);
    }

    #[test]
    fn empty_and_oversized_draws() {
        let m = manifest(5);
        assert!(draw_without_replacement(&m, 0, &SeededRng::new(1, 0)).unwrap().is_empty());
        assert!(draw_without_replacement(&m, 6, &SeededRng::new(1, 0)).is_err());
    }

    #[test]
    fn streams_differ_and_repeat() {
        let m = manifest(100);
        let a = draw_without_replacement(&m, 20, &SeededRng::new(42, 0)).unwrap();
        let b = draw_without_replacement(&m, 20, &SeededRng::new(42, 0)).unwrap();
        let c = draw_without_replacement(&m, 20, &SeededRng::new(42, 1)).unwrap();
        let d = draw_without_replacement(&m, 20, &SeededRng::new(43, 0)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn frozen_draw_sequence() {
        // Pinned so any change to the stream construction or the bounded
        // sampler shows up as a test failure.
        let m = manifest(10);
        let ids = draw_without_replacement(&m, 10, &SeededRng::new(2024, 3)).unwrap();
        assert_eq!(ids, FROZEN_2024_3);
    }

    const FROZEN_2024_3: [&str; 10] = ["b0", "b3", "b7", "b8", "b1", "b6", "b4", "b9", "b5", "b2"];

    #[test]
    fn below_stays_in_range() {
        let mut rng = SeededRng::new(9, 9);
        for bound in [1u64, 2, 3, 7, 1 << 33, u64::MAX] {
            for _ in 0..200 {
                assert!(rng.below(bound) < bound);
            }
        }
    }

    #[test]
    fn schedules() {
        let n = 1_000;
        assert_eq!(next_sample_size(&EscalationSchedule::PerBallot, 24, n).unwrap(), 25);
        assert_eq!(next_sample_size(&EscalationSchedule::FixedStep { step: 25 }, 24, 30).unwrap(), 30);
        assert_eq!(next_sample_size(&EscalationSchedule::Geometric { factor: 1.5 }, 24, n).unwrap(), 36);
        // geometric growth always advances by at least one ballot
        assert_eq!(next_sample_size(&EscalationSchedule::Geometric { factor: 1.01 }, 1, n).unwrap(), 2);
        assert!(matches!(next_sample_size(&EscalationSchedule::PerBallot, 30, 30), Err(Error::InvalidState(_))));
        assert!(next_sample_size(&EscalationSchedule::FixedStep { step: 0 }, 1, n).is_err());
        assert!(next_sample_size(&EscalationSchedule::Geometric { factor: 1.0 }, 1, n).is_err());
    }

    #[test]
    fn schedule_strings() {
        for s in ["per-ballot", "step:10", "geometric:1.5"] {
            assert_eq!(s.parse::<EscalationSchedule>().unwrap().to_string(), s);
        }
        assert!("step:0".parse::<EscalationSchedule>().is_err());
        assert!("doubling".parse::<EscalationSchedule>().is_err());
    }

    #[test]
    fn synthetic_electorates() {
        let c = population_counts(10, &Truth::tie()).unwrap();
        assert_eq!((c.winner, c.loser), (5, 5));
        let c = population_counts(50_000, &Truth::margin(0.20)).unwrap();
        assert_eq!((c.winner, c.loser), (30_000, 20_000));
        let c = population_counts(10, &Truth::margin(1.0)).unwrap();
        assert_eq!((c.winner, c.loser), (10, 0));
        assert!(population_counts(11, &Truth::tie()).is_err());
        assert!(population_counts(10, &Truth::Counts { winner: 5, loser: 4, invalid: 0 }).is_err());
        assert!(population_counts(10, &Truth::Counts { winner: 4, loser: 6, invalid: 0 }).is_ok());
        assert!(population_counts(10, &Truth::margin(1.5)).is_err());

        let m = synthetic_population(10, &Truth::Counts { winner: 5, loser: 3, invalid: 2 }).unwrap();
        let count = |l: &Interpretation| m.entries().iter().filter(|e| e.label.as_ref() == Some(l)).count();
        assert_eq!(count(&Interpretation::candidate("A")), 5);
        assert_eq!(count(&Interpretation::candidate("B")), 3);
        assert_eq!(count(&Interpretation::Invalid), 2);
    }

    #[test]
    fn manifest_csv() {
        let csv = "ballot_id,label\nb1,A\nb2,\nb3,invalid\n";
        let m = BallotManifest::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.entries()[0].label, Some(Interpretation::candidate("A")));
        assert_eq!(m.entries()[1].label, None);
        assert_eq!(m.entries()[2].label, Some(Interpretation::Invalid));
        let mut out = Vec::new();
        m.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), csv);

        let ids_only = BallotManifest::read_csv("ballot_id\nx\ny\n".as_bytes()).unwrap();
        assert_eq!(ids_only.len(), 2);
        assert!(BallotManifest::read_csv("id,label\nb1,A\n".as_bytes()).is_err());
        assert!(BallotManifest::read_csv("ballot_id,label\nb1,A\nb1,B\n".as_bytes()).is_err());
        assert!(BallotManifest::read_csv("ballot_id,label\n".as_bytes()).is_err());
    }

    #[test]
    fn digest_ignores_labels() {
        let m = BallotManifest::read_csv("ballot_id,label\nb1,A\nb2,B\n".as_bytes()).unwrap();
        assert_eq!(m.digest(), m.unlabeled().digest());
        assert_ne!(m.digest(), BallotManifest::from_ids(["b2", "b1"]).unwrap().digest());
    }
}
