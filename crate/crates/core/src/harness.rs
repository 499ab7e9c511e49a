//! Seeded Monte Carlo experiment runner and statistics engine.
//!
//! Reproducibility contract: every round of every variation draws from its
//! own counter-indexed random stream, derived only from the master seed,
//! the variation's index in enumeration order, and the round number. The
//! per-variation seed is `splitmix64(master_seed ^ SPACE ^ (index+1)·φ64)`
//! with separate `SPACE` tags for measurement and detection draws, and the
//! round number selects the ChaCha stream. Reports are therefore
//! byte-identical for a fixed config regardless of worker count or
//! scheduling, and the measurement outcomes never depend on the detector
//! efficiencies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::{detection_events, sample_noisy_ghz, NoiseError, NoiseModel};
use crate::protocol::{
    enumerate_valid_variations, quantum_round, AppleVariation, Parity, ProtocolError,
};

/// Schema tag of the JSON report format.
pub const REPORT_SCHEMA: &str = "gmn-report/1";

/// Classical win-probability bound the z-scores are measured against.
pub const CLASSICAL_BOUND: f64 = 0.75;

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error("rounds_per_variation must be at least 1")]
    NoRounds,
    #[error("workers must be at least 1")]
    NoWorkers,
    #[error("cannot compute statistics from zero rounds")]
    EmptyTotals,
    #[error("failed to build worker pool: {0}")]
    WorkerPool(String),
    #[error("malformed report: {0}")]
    MalformedReport(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Configuration of one experiment run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    /// Valid rounds played for each of the 32 variations.
    pub rounds_per_variation: u64,
    pub noise: NoiseModel,
    pub master_seed: u64,
    /// Worker threads used by the parallel runner; has no effect on the
    /// produced bytes.
    pub workers: usize,
}

impl RunConfig {
    pub fn new(
        rounds_per_variation: u64,
        noise: NoiseModel,
        master_seed: u64,
        workers: usize,
    ) -> Result<Self, HarnessError> {
        if rounds_per_variation == 0 {
            return Err(HarnessError::NoRounds);
        }
        if workers == 0 {
            return Err(HarnessError::NoWorkers);
        }
        Ok(Self {
            rounds_per_variation,
            noise,
            master_seed,
            workers,
        })
    }
}

/// Counts of the eight diagonal-basis outcomes `N_{+++} .. N_{---}`,
/// indexed by the outcome bit pattern (`+` = 0, `−` = 1, Alice most
/// significant).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CountsTable {
    counts: [u64; 8],
}

impl CountsTable {
    pub fn new(counts: [u64; 8]) -> Self {
        Self { counts }
    }

    pub fn increment(&mut self, outcome: usize) {
        self.counts[outcome] += 1;
    }

    pub fn counts(&self) -> &[u64; 8] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &CountsTable) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }
}

/// Splits a counts table into the rounds answering "even" (outcomes with
/// an even number of `−` results) and those answering "odd".
pub fn parity_counts(table: &CountsTable) -> (u64, u64) {
    let mut even = 0;
    let mut odd = 0;
    for (outcome, count) in table.counts().iter().enumerate() {
        if (outcome as u32).count_ones().is_multiple_of(2) {
            even += count;
        } else {
            odd += count;
        }
    }
    (even, odd)
}

/// Win-rate statistics of a batch of rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub p_hat: f64,
    pub std_error: f64,
    /// Normal-approximation deviations of `p_hat` above the classical 3/4
    /// bound; infinite when the standard error vanishes.
    pub zscore: f64,
}

/// `p̂ = correct/N`, `se = sqrt(p̂(1−p̂)/N)`, `z = (p̂ − 3/4)/se`.
pub fn stats_from_totals(correct: u64, incorrect: u64) -> Result<SummaryStats, HarnessError> {
    let total = correct + incorrect;
    if total == 0 {
        return Err(HarnessError::EmptyTotals);
    }
    let p_hat = correct as f64 / total as f64;
    let std_error = (p_hat * (1.0 - p_hat) / total as f64).sqrt();
    let zscore = (p_hat - CLASSICAL_BOUND) / std_error;
    Ok(SummaryStats {
        p_hat,
        std_error,
        zscore,
    })
}

/// Per-variation results.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationStats {
    pub variation: AppleVariation,
    pub played: u64,
    pub correct: u64,
    pub win_probability: f64,
    pub std_error: f64,
    pub zscore_vs_classical: f64,
}

/// Full experiment results plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub per_variation: Vec<VariationStats>,
    pub pooled_correct: u64,
    pub pooled_total: u64,
    pub pooled_probability: f64,
    pub pooled_std_error: f64,
    pub pooled_zscore: f64,
    /// Rounds lost to detector inefficiency and replayed.
    pub discarded_rounds: u64,
}

// Domain-separation tags for the two substream families.
const MEASUREMENT_SPACE: u64 = 0x4d45_4153_5552_4531;
const DETECTION_SPACE: u64 = 0x4445_5445_4354_3031;
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn substream_seed(master_seed: u64, variation_index: u64, space: u64) -> u64 {
    splitmix64(master_seed ^ space ^ (variation_index + 1).wrapping_mul(GOLDEN_GAMMA))
}

/// One valid round: replay the detector draw until all three parties fire
/// (counting the discarded attempts), then play the measurement. Detection
/// and measurement use independent streams, so the outcome sequence is
/// identical across efficiencies.
fn play_round(
    noise: &NoiseModel,
    v: &AppleVariation,
    measurement_base: &ChaCha8Rng,
    detection_base: &ChaCha8Rng,
    round: u64,
) -> Result<(usize, u64), HarnessError> {
    let mut discarded = 0u64;
    if noise.detector_efficiency != [1.0; 3] {
        let mut detection = detection_base.clone();
        detection.set_stream(round);
        while !detection_events(noise, &mut detection).iter().all(|f| *f) {
            discarded += 1;
        }
    }
    let mut measurement = measurement_base.clone();
    measurement.set_stream(round);
    let state = sample_noisy_ghz(noise, &mut measurement);
    let (bits, _) = quantum_round(v, &state, &mut measurement)?;
    Ok((bits.outcome_index(), discarded))
}

fn rounds_block(
    noise: &NoiseModel,
    v: &AppleVariation,
    measurement_base: &ChaCha8Rng,
    detection_base: &ChaCha8Rng,
    rounds: std::ops::Range<u64>,
) -> Result<(CountsTable, u64), HarnessError> {
    let mut counts = CountsTable::default();
    let mut discarded = 0u64;
    for round in rounds {
        let (outcome, lost) = play_round(noise, v, measurement_base, detection_base, round)?;
        counts.increment(outcome);
        discarded += lost;
    }
    Ok((counts, discarded))
}

fn variation_counts(
    config: &RunConfig,
    index: u64,
    v: &AppleVariation,
    parallel: bool,
) -> Result<(CountsTable, u64), HarnessError> {
    let measurement_base = ChaCha8Rng::seed_from_u64(substream_seed(
        config.master_seed,
        index,
        MEASUREMENT_SPACE,
    ));
    let detection_base = ChaCha8Rng::seed_from_u64(substream_seed(
        config.master_seed,
        index,
        DETECTION_SPACE,
    ));
    let total = config.rounds_per_variation;

    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        const BLOCK: u64 = 2048;
        let blocks: Vec<std::ops::Range<u64>> = (0..total.div_ceil(BLOCK))
            .map(|b| b * BLOCK..((b + 1) * BLOCK).min(total))
            .collect();
        return blocks
            .into_par_iter()
            .map(|range| rounds_block(&config.noise, v, &measurement_base, &detection_base, range))
            .try_reduce(
                || (CountsTable::default(), 0),
                |(mut counts, discarded), (block_counts, block_discarded)| {
                    counts.merge(&block_counts);
                    Ok((counts, discarded + block_discarded))
                },
            );
    }
    let _ = parallel;
    rounds_block(&config.noise, v, &measurement_base, &detection_base, 0..total)
}

fn build_report(
    config: &RunConfig,
    results: Vec<(AppleVariation, CountsTable, u64)>,
) -> Result<ExperimentReport, HarnessError> {
    let mut per_variation = Vec::with_capacity(results.len());
    let mut pooled_correct = 0u64;
    let mut pooled_total = 0u64;
    let mut discarded_rounds = 0u64;
    for (variation, counts, discarded) in results {
        let (n_even, n_odd) = parity_counts(&counts);
        let correct = match variation.parity() {
            Parity::Even => n_even,
            Parity::Odd => n_odd,
        };
        let played = counts.total();
        let stats = stats_from_totals(correct, played - correct)?;
        pooled_correct += correct;
        pooled_total += played;
        discarded_rounds += discarded;
        per_variation.push(VariationStats {
            variation,
            played,
            correct,
            win_probability: stats.p_hat,
            std_error: stats.std_error,
            zscore_vs_classical: stats.zscore,
        });
    }
    let pooled = stats_from_totals(pooled_correct, pooled_total - pooled_correct)?;
    Ok(ExperimentReport {
        config: *config,
        per_variation,
        pooled_correct,
        pooled_total,
        pooled_probability: pooled.p_hat,
        pooled_std_error: pooled.std_error,
        pooled_zscore: pooled.zscore,
        discarded_rounds,
    })
}

/// Reference single-threaded runner. Produces exactly the same report as
/// [`run_experiment`]; benchmarks and determinism tests compare against it.
pub fn run_experiment_sequential(config: &RunConfig) -> Result<ExperimentReport, HarnessError> {
    RunConfig::new(
        config.rounds_per_variation,
        config.noise,
        config.master_seed,
        config.workers,
    )?;
    let variations = enumerate_valid_variations();
    let mut results = Vec::with_capacity(variations.len());
    for (index, v) in variations.into_iter().enumerate() {
        let (counts, discarded) = variation_counts(config, index as u64, &v, false)?;
        results.push((v, counts, discarded));
    }
    build_report(config, results)
}

/// Plays `rounds_per_variation` valid rounds of every variation and
/// aggregates the statistics. Rounds lost to detector inefficiency are
/// replayed (and counted as discarded) so each variation keeps exactly its
/// share of valid rounds. Deterministic in `(config, master_seed)`
/// regardless of `workers`.
#[cfg(feature = "parallel")]
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentReport, HarnessError> {
    use rayon::prelude::*;
    RunConfig::new(
        config.rounds_per_variation,
        config.noise,
        config.master_seed,
        config.workers,
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::WorkerPool(e.to_string()))?;
    pool.install(|| {
        let variations = enumerate_valid_variations();
        let results: Result<Vec<_>, HarnessError> = variations
            .into_par_iter()
            .enumerate()
            .map(|(index, v)| {
                let (counts, discarded) = variation_counts(config, index as u64, &v, true)?;
                Ok((v, counts, discarded))
            })
            .collect();
        build_report(config, results?)
    })
}

/// Plays `rounds_per_variation` valid rounds of every variation and
/// aggregates the statistics (sequential build).
#[cfg(not(feature = "parallel"))]
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentReport, HarnessError> {
    run_experiment_sequential(config)
}

/// Output format of [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Serialize, Deserialize)]
struct ConfigWire {
    rounds_per_variation: u64,
    visibility: f64,
    white_noise: f64,
    detector_efficiency: [f64; 3],
    workers: usize,
}

#[derive(Serialize, Deserialize)]
struct PooledWire {
    correct: u64,
    total: u64,
    probability: f64,
    std_error: f64,
    zscore: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct VariationWire {
    a: u8,
    b: u8,
    c: u8,
    parity: String,
    played: u64,
    correct: u64,
    probability: f64,
    std_error: f64,
    zscore: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ReportWire {
    schema: String,
    version: String,
    seed: u64,
    config: ConfigWire,
    pooled: PooledWire,
    variations: Vec<VariationWire>,
    discarded_rounds: u64,
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

// Reports are byte-identical for every execution width, so the echoed
// worker count names the canonical sequential replay rather than the pool
// that happened to run; echoing the actual width would make equal runs
// compare unequal.
const REPLAY_WORKERS: usize = 1;

fn to_wire(report: &ExperimentReport) -> ReportWire {
    ReportWire {
        schema: REPORT_SCHEMA.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: report.config.master_seed,
        config: ConfigWire {
            rounds_per_variation: report.config.rounds_per_variation,
            visibility: report.config.noise.visibility,
            white_noise: report.config.noise.white_noise,
            detector_efficiency: report.config.noise.detector_efficiency,
            workers: REPLAY_WORKERS,
        },
        pooled: PooledWire {
            correct: report.pooled_correct,
            total: report.pooled_total,
            probability: report.pooled_probability,
            std_error: report.pooled_std_error,
            zscore: finite_or_none(report.pooled_zscore),
        },
        variations: report
            .per_variation
            .iter()
            .map(|vs| {
                let [a, b, c] = vs.variation.counts();
                VariationWire {
                    a: a.half_units(),
                    b: b.half_units(),
                    c: c.half_units(),
                    parity: vs.variation.parity().to_string(),
                    played: vs.played,
                    correct: vs.correct,
                    probability: vs.win_probability,
                    std_error: vs.std_error,
                    zscore: finite_or_none(vs.zscore_vs_classical),
                }
            })
            .collect(),
        discarded_rounds: report.discarded_rounds,
    }
}

/// Renders `x` with six significant digits, fixed-point.
fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (5 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Serializes a report. JSON follows the `gmn-report/1` schema; CSV is a
/// header row followed by one row per variation in enumeration order, with
/// floating-point columns rendered to six significant digits.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut bytes =
                serde_json::to_vec(&to_wire(report)).expect("report serialization is infallible");
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Csv => {
            let mut out = String::from(
                "variation_a_halfunits,variation_b_halfunits,variation_c_halfunits,\
                 parity,played,correct,win_probability,std_error,zscore\n",
            );
            for vs in &report.per_variation {
                let [a, b, c] = vs.variation.counts();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    a.half_units(),
                    b.half_units(),
                    c.half_units(),
                    vs.variation.parity(),
                    vs.played,
                    vs.correct,
                    format_sig6(vs.win_probability),
                    format_sig6(vs.std_error),
                    format_sig6(vs.zscore_vs_classical),
                ));
            }
            out.into_bytes()
        }
    }
}

/// Parses a JSON report. Counts and configuration are taken verbatim; the
/// derived statistics are recomputed from the counts, which the schema
/// guarantees to be lossless.
pub fn parse_report_json(bytes: &[u8]) -> Result<ExperimentReport, HarnessError> {
    let wire: ReportWire = serde_json::from_slice(bytes)
        .map_err(|e| HarnessError::MalformedReport(e.to_string()))?;
    if wire.schema != REPORT_SCHEMA {
        return Err(HarnessError::MalformedReport(format!(
            "unsupported schema {:?}",
            wire.schema
        )));
    }
    let noise = NoiseModel::new(
        wire.config.visibility,
        wire.config.white_noise,
        wire.config.detector_efficiency,
    )?;
    let config = RunConfig::new(
        wire.config.rounds_per_variation,
        noise,
        wire.seed,
        wire.config.workers,
    )?;
    let mut per_variation = Vec::with_capacity(wire.variations.len());
    let mut pooled_correct = 0u64;
    let mut pooled_total = 0u64;
    for vw in &wire.variations {
        let variation = AppleVariation::new(
            crate::protocol::AppleCount::new(vw.a).map_err(malformed)?,
            crate::protocol::AppleCount::new(vw.b).map_err(malformed)?,
            crate::protocol::AppleCount::new(vw.c).map_err(malformed)?,
        )
        .map_err(malformed)?;
        if vw.correct > vw.played {
            return Err(HarnessError::MalformedReport(
                "correct exceeds played".to_string(),
            ));
        }
        let stats = stats_from_totals(vw.correct, vw.played - vw.correct)?;
        pooled_correct += vw.correct;
        pooled_total += vw.played;
        per_variation.push(VariationStats {
            variation,
            played: vw.played,
            correct: vw.correct,
            win_probability: stats.p_hat,
            std_error: stats.std_error,
            zscore_vs_classical: stats.zscore,
        });
    }
    if pooled_correct != wire.pooled.correct || pooled_total != wire.pooled.total {
        return Err(HarnessError::MalformedReport(
            "pooled counts disagree with per-variation counts".to_string(),
        ));
    }
    let pooled = stats_from_totals(pooled_correct, pooled_total - pooled_correct)?;
    Ok(ExperimentReport {
        config,
        per_variation,
        pooled_correct,
        pooled_total,
        pooled_probability: pooled.p_hat,
        pooled_std_error: pooled.std_error,
        pooled_zscore: pooled.zscore,
        discarded_rounds: wire.discarded_rounds,
    })
}

fn malformed(e: ProtocolError) -> HarnessError {
    HarnessError::MalformedReport(e.to_string())
}
