//! Stage decisions and the sequential executors that drive them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{binom_tail, poisson_tail};
use crate::plan::{Criterion, Mode, StageSchedule};

pub const DEFAULT_DRAW_CAP: u64 = 1_000_000_000;
pub const DEFAULT_STAGE_CAP: usize = 200;

/// State of a run at the end of stage `ell`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageObservation {
    pub ell: usize,
    /// Samples consumed so far (`n_l`, random under inverse sampling).
    pub stat: u64,
    /// Cumulative sum of the observations.
    pub k: u64,
}

impl StageObservation {
    pub fn new(ell: usize, stat: u64, k: u64) -> Self {
        StageObservation { ell, stat, k }
    }

    pub fn estimate(&self) -> f64 {
        self.k as f64 / self.stat as f64
    }
}

/// Lower and upper parameter values the stopping rule tests against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedBrackets {
    pub lower: f64,
    pub upper: f64,
}

impl MixedBrackets {
    pub fn new(criterion: Criterion, estimate: f64) -> Self {
        let (lower, upper) = criterion.brackets(estimate);
        MixedBrackets { lower, upper }
    }
}

/// Binomial stage decision: both one-sided tails at the brackets are within
/// `budget`. A bracket outside `(0, 1)` makes its tail 0.
pub fn decide_binomial(criterion: Criterion, obs: &StageObservation, budget: f64) -> bool {
    let MixedBrackets { lower, upper } = MixedBrackets::new(criterion, obs.estimate());
    let n = obs.stat;
    binom_tail(obs.k, n, n, lower) <= budget && binom_tail(0, obs.k, n, upper) <= budget
}

/// Poisson stage decision, with the lower condition in complement form
/// `S_P(K, inf, n, lower) <= budget` (automatically met for `lower <= 0`).
pub fn decide_poisson(criterion: Criterion, obs: &StageObservation, budget: f64) -> bool {
    let MixedBrackets { lower, upper } = MixedBrackets::new(criterion, obs.estimate());
    let n = obs.stat;
    poisson_tail(obs.k, None, n, lower) <= budget
        && poisson_tail(0, Some(obs.k), n, upper) <= budget
}

/// Decision for whichever family `mode` belongs to.
pub fn decide(mode: Mode, criterion: Criterion, obs: &StageObservation, budget: f64) -> bool {
    if mode.is_poisson() {
        decide_poisson(criterion, obs, budget)
    } else {
        decide_binomial(criterion, obs, budget)
    }
}

/// One entry of the audit trail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub samples: u64,
    pub sum: u64,
    pub estimate: f64,
    pub budget: f64,
    pub decision: bool,
    /// Set when the last stage of a fixed schedule ended the run although
    /// the rule did not fire (only possible for hand-made stage lists).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub forced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub estimate: f64,
    pub stop_stage: usize,
    pub total_samples: u64,
    pub trail: Vec<StageRecord>,
}

impl EstimationResult {
    fn from_trail(trail: Vec<StageRecord>) -> Self {
        let last = *trail.last().expect("a run records at least one stage");
        EstimationResult {
            estimate: last.estimate,
            stop_stage: last.stage,
            total_samples: last.samples,
            trail,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunLimits {
    pub draw_cap: u64,
    pub stage_cap: usize,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            draw_cap: DEFAULT_DRAW_CAP,
            stage_cap: DEFAULT_STAGE_CAP,
        }
    }
}

struct Counter<'a, I> {
    stream: &'a mut I,
    binary: bool,
    drawn: u64,
    sum: u64,
}

impl<I: Iterator<Item = u64>> Counter<'_, I> {
    fn draw(&mut self, stage: usize) -> Result<u64> {
        let x = self.stream.next().ok_or(Error::StreamExhausted {
            stage,
            drawn: self.drawn,
        })?;
        self.drawn += 1;
        if self.binary && x > 1 {
            return Err(Error::InvalidObservation {
                position: self.drawn,
                value: x,
            });
        }
        self.sum += x;
        Ok(x)
    }

    fn draw_until(&mut self, size: u64, stage: usize) -> Result<()> {
        while self.drawn < size {
            self.draw(stage)?;
        }
        Ok(())
    }
}

/// Runs a fixed schedule (absolute binomial, mixed binomial, mixed Poisson).
pub fn run_fixed_schedule<I>(plan: &StageSchedule, stream: &mut I) -> Result<EstimationResult>
where
    I: Iterator<Item = u64>,
{
    let mode = plan.mode();
    if !plan.is_fixed() || mode.is_inverse() {
        return Err(Error::PlanKind(format!(
            "{mode} is not a fixed-size schedule"
        )));
    }
    let criterion = plan.goal.criterion();
    let mut counter = Counter {
        stream,
        binary: !mode.is_poisson(),
        drawn: 0,
        sum: 0,
    };
    let last = plan.stages.len();
    let mut trail = Vec::with_capacity(last);
    for stage in plan.stages() {
        counter.draw_until(stage.size, stage.index)?;
        let obs = StageObservation::new(stage.index, stage.size, counter.sum);
        let decision = decide(mode, criterion, &obs, stage.budget);
        trail.push(StageRecord {
            stage: stage.index,
            samples: stage.size,
            sum: counter.sum,
            estimate: obs.estimate(),
            budget: stage.budget,
            decision,
            forced: !decision && stage.index == last,
        });
        if decision {
            break;
        }
    }
    Ok(EstimationResult::from_trail(trail))
}

/// Runs the multistage inverse-sampling scheme: stage `l` ends at the
/// `gamma_l`-th success.
pub fn run_inverse_sampling<I>(
    plan: &StageSchedule,
    stream: &mut I,
    draw_cap: u64,
) -> Result<EstimationResult>
where
    I: Iterator<Item = u64>,
{
    if !plan.mode().is_inverse() {
        return Err(Error::PlanKind(format!(
            "{} is not an inverse-sampling schedule",
            plan.mode()
        )));
    }
    let criterion = plan.goal.criterion();
    let mut counter = Counter {
        stream,
        binary: true,
        drawn: 0,
        sum: 0,
    };
    let last = plan.stages.len();
    let mut trail = Vec::with_capacity(last);
    for stage in plan.stages() {
        while counter.sum < stage.size {
            if counter.drawn >= draw_cap {
                return Err(Error::DrawCapExceeded {
                    stage: stage.index,
                    cap: draw_cap,
                });
            }
            counter.draw(stage.index)?;
        }
        let obs = StageObservation::new(stage.index, counter.drawn, stage.size);
        let decision = decide_binomial(criterion, &obs, stage.budget);
        trail.push(StageRecord {
            stage: stage.index,
            samples: counter.drawn,
            sum: stage.size,
            estimate: obs.estimate(),
            budget: stage.budget,
            decision,
            forced: !decision && stage.index == last,
        });
        if decision {
            break;
        }
    }
    Ok(EstimationResult::from_trail(trail))
}

/// Runs an open-ended schedule, giving up after `stage_cap` stages.
pub fn run_open_ended<I>(
    plan: &StageSchedule,
    stream: &mut I,
    stage_cap: usize,
) -> Result<EstimationResult>
where
    I: Iterator<Item = u64>,
{
    let mode = plan.mode();
    if plan.is_fixed() {
        return Err(Error::PlanKind(format!(
            "{mode} is not an open-ended schedule"
        )));
    }
    let criterion = plan.goal.criterion();
    let mut counter = Counter {
        stream,
        binary: !mode.is_poisson(),
        drawn: 0,
        sum: 0,
    };
    let mut trail = Vec::new();
    for stage in plan.stages().take(stage_cap) {
        counter.draw_until(stage.size, stage.index)?;
        let obs = StageObservation::new(stage.index, stage.size, counter.sum);
        let decision = decide(mode, criterion, &obs, stage.budget);
        trail.push(StageRecord {
            stage: stage.index,
            samples: stage.size,
            sum: counter.sum,
            estimate: obs.estimate(),
            budget: stage.budget,
            decision,
            forced: false,
        });
        if decision {
            return Ok(EstimationResult::from_trail(trail));
        }
    }
    Err(Error::StageCapExceeded {
        cap: stage_cap,
        trail,
    })
}

/// Runs whichever executor the plan's mode calls for.
pub fn run<I>(plan: &StageSchedule, stream: &mut I, limits: RunLimits) -> Result<EstimationResult>
where
    I: Iterator<Item = u64>,
{
    if plan.mode().is_inverse() {
        run_inverse_sampling(plan, stream, limits.draw_cap)
    } else if plan.is_fixed() {
        run_fixed_schedule(plan, stream)
    } else {
        run_open_ended(plan, stream, limits.stage_cap)
    }
}
