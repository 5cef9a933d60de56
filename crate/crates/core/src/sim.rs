//! Seeded Monte Carlo estimates of coverage and average sample number.
//!
//! Trial `i` draws from the ChaCha8 stream `i` of the batch seed, so results
//! do not depend on how trials are spread over worker threads.

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{covers, csv_number};
use crate::error::{Error, Result};
use crate::plan::StageSchedule;
use crate::stopping::{run, RunLimits};

pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StreamKind {
    Bernoulli(f64),
    Poisson(f64),
}

impl StreamKind {
    pub fn for_plan(plan: &StageSchedule, theta: f64) -> Self {
        if plan.mode().is_poisson() {
            StreamKind::Poisson(theta)
        } else {
            StreamKind::Bernoulli(theta)
        }
    }
}

/// Infinite observation stream; `substream` selects an independent ChaCha
/// stream under the same seed.
pub fn sample_stream(
    kind: StreamKind,
    seed: u64,
    substream: u64,
) -> Result<Box<dyn Iterator<Item = u64> + Send>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(substream);
    match kind {
        StreamKind::Bernoulli(p) => {
            let dist =
                Bernoulli::new(p).map_err(|e| Error::invalid(format!("Bernoulli({p}): {e}")))?;
            Ok(Box::new(dist.sample_iter(rng).map(u64::from)))
        }
        StreamKind::Poisson(lambda) => {
            let dist = Poisson::new(lambda)
                .map_err(|e| Error::invalid(format!("Poisson({lambda}): {e}")))?;
            Ok(Box::new(dist.sample_iter(rng).map(|x: f64| x as u64)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub theta: f64,
    pub trials: u64,
    pub coverage_hat: f64,
    pub coverage_stderr: f64,
    pub asn_hat: f64,
    pub asn_stderr: f64,
    pub seed: u64,
    /// Trials aborted by a draw or stage cap; counted as misses.
    pub failures: u64,
}

impl MonteCarloReport {
    pub const CSV_HEADER: &'static str =
        "theta,trials,coverage_hat,coverage_stderr,asn_hat,asn_stderr,seed,failures";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            csv_number(self.theta),
            self.trials,
            csv_number(self.coverage_hat),
            csv_number(self.coverage_stderr),
            csv_number(self.asn_hat),
            csv_number(self.asn_stderr),
            self.seed,
            self.failures
        )
    }
}

#[derive(Clone, Copy)]
enum Outcome {
    Done { covered: bool, samples: u64 },
    Failed,
}

fn trial(
    plan: &StageSchedule,
    kind: StreamKind,
    theta: f64,
    seed: u64,
    index: u64,
    limits: RunLimits,
) -> Result<Outcome> {
    let mut stream = sample_stream(kind, seed, index)?;
    Ok(match run(plan, &mut stream, limits) {
        Ok(res) => {
            let last = res.trail.last().expect("non-empty trail");
            Outcome::Done {
                covered: covers(
                    plan.mode(),
                    plan.goal.criterion(),
                    last.sum,
                    last.samples,
                    theta,
                ),
                samples: res.total_samples,
            }
        }
        Err(_) => Outcome::Failed,
    })
}

/// Monte Carlo coverage and ASN over `trials` independent runs.
pub fn simulate_coverage(
    plan: &StageSchedule,
    theta: f64,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloReport> {
    simulate_coverage_with(plan, theta, trials, seed, RunLimits::default())
}

pub fn simulate_coverage_with(
    plan: &StageSchedule,
    theta: f64,
    trials: u64,
    seed: u64,
    limits: RunLimits,
) -> Result<MonteCarloReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let kind = StreamKind::for_plan(plan, theta);
    // validate the parameter once before fanning out
    drop(sample_stream(kind, seed, 0)?);
    let outcomes: Vec<Outcome> = (0..trials)
        .into_par_iter()
        .map(|i| trial(plan, kind, theta, seed, i, limits))
        .collect::<Result<_>>()?;

    let (mut covered, mut failures, mut done) = (0u64, 0u64, 0u64);
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for o in &outcomes {
        match *o {
            Outcome::Done {
                covered: c,
                samples,
            } => {
                done += 1;
                covered += u64::from(c);
                let s = samples as f64;
                sum += s;
                sum_sq += s * s;
            }
            Outcome::Failed => failures += 1,
        }
    }
    let t = trials as f64;
    let coverage_hat = covered as f64 / t;
    let (asn_hat, asn_stderr) = if done > 0 {
        let d = done as f64;
        let mean = sum / d;
        let var = if done > 1 {
            ((sum_sq - d * mean * mean) / (d - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, (var / d).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(MonteCarloReport {
        theta,
        trials,
        coverage_hat,
        coverage_stderr: (coverage_hat * (1.0 - coverage_hat) / t).sqrt(),
        asn_hat,
        asn_stderr,
        seed,
        failures,
    })
}
