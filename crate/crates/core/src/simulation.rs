//! Monte Carlo engine: sample `n` chords, count pairwise crossings `R_n`
//! and regions `F_n = R_n + n + 1`.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{sample_chord, DistSpec, DistanceDistribution};
use crate::error::{Error, Result};
use crate::geometry::{interleaved, Chord};
use crate::rng::RandomStream;

/// Vertex, edge and region counts of the chord arrangement inside the disc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrangementCounts {
    pub n: u64,
    pub r: u64,
    pub v: u64,
    pub e: u64,
    pub f: u64,
}

impl ArrangementCounts {
    pub fn from_crossings(n: u64, r: u64) -> Self {
        ArrangementCounts { n, r, v: r + 2 * n, e: 2 * r + 3 * n, f: r + n + 1 }
    }

    /// `V - E + F`, which is 1 for every arrangement.
    pub fn euler_characteristic(&self) -> i64 {
        self.v as i64 - self.e as i64 + self.f as i64
    }
}

/// Number of unordered crossing pairs, by direct pairwise testing.
pub fn count_intersections(chords: &[Chord]) -> u64 {
    let ends: Vec<(f64, f64)> = chords
        .iter()
        .map(|c| {
            let (a, b) = c.endpoints();
            (a.value(), b.value())
        })
        .collect();
    count_interleaved(&ends)
}

fn count_interleaved(ends: &[(f64, f64)]) -> u64 {
    let mut total = 0u64;
    for (i, &(a1, b1)) in ends.iter().enumerate() {
        for &(a2, b2) in &ends[i + 1..] {
            total += interleaved(a1, b1, a2, b2) as u64;
        }
    }
    total
}

pub fn count_regions(chords: &[Chord]) -> u64 {
    count_intersections(chords) + chords.len() as u64 + 1
}

pub fn euler_counts(chords: &[Chord]) -> ArrangementCounts {
    ArrangementCounts::from_crossings(chords.len() as u64, count_intersections(chords))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_chords: u64,
    pub repetitions: u64,
    pub seed: u64,
    pub dist: DistSpec,
}

impl SimulationConfig {
    pub fn new(n_chords: u64, repetitions: u64, seed: u64, dist: DistSpec) -> Self {
        SimulationConfig { n_chords, repetitions, seed, dist }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chords == 0 {
            return Err(Error::InvalidArgument("n_chords must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub rep: u64,
    pub r_n: u64,
    pub f_n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std_dev: f64,
}

impl Summary {
    /// Sample mean and (n - 1)-denominator standard deviation.
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Summary {
        let (count, sum) = values.clone().fold((0usize, 0.0), |(c, s), x| (c + 1, s + x));
        if count == 0 {
            return Summary { mean: f64::NAN, std_dev: f64::NAN };
        }
        let mean = sum / count as f64;
        let ss: f64 = values.map(|x| (x - mean).powi(2)).sum();
        let std_dev = if count > 1 { (ss / (count - 1) as f64).sqrt() } else { 0.0 };
        Summary { mean, std_dev }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub config: SimulationConfig,
    pub samples: Vec<Sample>,
    pub summary: Summary,
    /// Not serialized; output files stay byte-identical across runs.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SimulationResult {
    pub fn f_values(&self) -> impl Iterator<Item = f64> + Clone + '_ {
        self.samples.iter().map(|s| s.f_n as f64)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rep_index", "r_n", "f_n"])?;
        for s in &self.samples {
            w.write_record([s.rep.to_string(), s.r_n.to_string(), s.f_n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Pretty JSON of the whole result plus the library version.
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Envelope<'a> {
            version: &'static str,
            #[serde(flatten)]
            result: &'a SimulationResult,
        }
        serde_json::to_writer_pretty(&mut out, &Envelope { version: crate::VERSION, result: self })?;
        writeln!(out)?;
        Ok(())
    }
}

/// One repetition: `n` chords from stream `rep` of the master seed.
pub fn simulate_repetition(dist: &DistanceDistribution, n: u64, seed: u64, rep: u64) -> Sample {
    let mut stream = RandomStream::new(seed, rep);
    let ends: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let (a, b) = sample_chord(&mut stream, dist).endpoints();
            (a.value(), b.value())
        })
        .collect();
    let r_n = count_interleaved(&ends);
    let counts = ArrangementCounts::from_crossings(n, r_n);
    debug_assert_eq!(counts.euler_characteristic(), 1);
    Sample { rep, r_n, f_n: counts.f }
}

/// Runs every repetition on the current rayon pool. Output order and
/// content do not depend on the number of workers.
pub fn run_batch(config: &SimulationConfig) -> Result<SimulationResult> {
    config.validate()?;
    let dist = config.dist.resolve()?;
    Ok(run_batch_with(config.clone(), &dist))
}

/// As [`run_batch`] on a dedicated pool of `threads` workers (0 = rayon default).
pub fn run_batch_with_threads(config: &SimulationConfig, threads: usize) -> Result<SimulationResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run_batch(config))
}

/// Runs a batch with an already resolved distribution.
pub fn run_batch_with(config: SimulationConfig, dist: &DistanceDistribution) -> SimulationResult {
    let start = Instant::now();
    let samples: Vec<Sample> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| simulate_repetition(dist, config.n_chords, config.seed, rep))
        .collect();
    let summary = Summary::of(samples.iter().map(|s| s.f_n as f64));
    SimulationResult { config, samples, summary, wall_time: start.elapsed() }
}
