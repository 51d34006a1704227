//! Reads a ballot manifest and prints a reproducible random sample.
//!
//!     cargo run --example draw_sample -- manifest.csv 24 2024

use diffsum::sampling::{draw_without_replacement, BallotManifest, SeededRng};

fn main() -> diffsum::Result<()> {
    let mut args = std::env::args().skip(1);
    let manifest = match args.next() {
        Some(path) => BallotManifest::from_path(path)?,
        None => BallotManifest::from_ids((1..=500).map(|i| format!("batch{:02}-{:03}", i / 100, i % 100)))?,
    };
    let k: usize = args.next().map_or(24, |s| s.parse().expect("sample size"));
    let seed: u64 = args.next().map_or(2024, |s| s.parse().expect("seed"));

    let rng = SeededRng::new(seed, 0);
    let first = draw_without_replacement(&manifest, k, &rng)?;
    let more = draw_without_replacement(&manifest, k + 10, &rng)?;
    assert_eq!(first[..], more[..k], "escalation extends the same sample");

    println!("manifest {} ballots, digest {}", manifest.len(), manifest.digest());
    println!("seed {seed}: {}", first.join(" "));
    println!("next 10 on escalation: {}", more[k..].join(" "));
    Ok(())
}
