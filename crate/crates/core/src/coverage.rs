//! Exact operating characteristics of a schedule at one parameter value.
//!
//! The dynamic program carries the probability of every not-yet-stopped
//! value of the stage statistic (the cumulative count `K_l`, or the sample
//! count under inverse sampling) from stage to stage. At each stage the
//! decision rule splits that vector into stopping and continuing mass; the
//! continuing part is convolved with the distribution of the next increment.
//! Increments are truncated to a window whose discarded tail mass is computed
//! exactly with the tail kernels and accumulated in `truncation_bound`, so
//! the reported coverage is always a certified lower bound.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::FromPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    binom_tail, binomial_pmf, negative_binomial_trials_pmf, poisson_pmf, poisson_tail_mean,
};
use crate::plan::{Criterion, Mode, Stage, StageSchedule};
use crate::stopping::{decide, decide_binomial, run_fixed_schedule, StageObservation};

/// Open-ended iteration ends once the continuing mass falls below this.
pub const OPEN_RESIDUAL_TARGET: f64 = 1e-9;

/// Largest number of paths `brute_force_enumerate` will visit.
pub const MAX_ENUMERATION_PATHS: u64 = 10_000_000;

const WINDOW_SIGMAS: f64 = 12.0;
const WINDOW_PAD: f64 = 30.0;
const INCREMENT_TAIL_TARGET: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub theta: f64,
    /// Probability that the terminal estimate meets the criterion; a lower
    /// bound when `truncation_bound > 0`.
    pub coverage: f64,
    pub asn: f64,
    /// Probability of stopping at each stage.
    pub stage_mass: Vec<f64>,
    /// Mass lost to support truncation and, for open-ended plans, the mass
    /// still running at the last evaluated stage.
    pub truncation_bound: f64,
    /// `Pr{theta <= lower bracket, stop at l}` per stage.
    pub lower_escape: Vec<f64>,
    /// `Pr{theta >= upper bracket, stop at l}` per stage.
    pub upper_escape: Vec<f64>,
    /// Continuing mass left after the last evaluated stage (open-ended only).
    pub residual_mass: f64,
}

impl CoverageReport {
    pub fn total_stage_mass(&self) -> f64 {
        self.stage_mass.iter().sum()
    }

    pub fn csv_header(stage_columns: usize) -> String {
        let mut cols = vec![
            "theta".to_string(),
            "coverage".to_string(),
            "asn".to_string(),
            "truncation_bound".to_string(),
        ];
        cols.extend((1..=stage_columns).map(|l| format!("stage_mass_{l}")));
        cols.join(",")
    }

    /// Flat CSV row, padded with zeros to `stage_columns` stage entries.
    pub fn csv_row(&self, stage_columns: usize) -> String {
        let mut cols = vec![
            csv_number(self.theta),
            csv_number(self.coverage),
            csv_number(self.asn),
            csv_number(self.truncation_bound),
        ];
        cols.extend(
            (0..stage_columns).map(|i| csv_number(self.stage_mass.get(i).copied().unwrap_or(0.0))),
        );
        cols.join(",")
    }
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or large magnitudes.
pub fn csv_number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

// ---------------------------------------------------------------------------
// Coverage event classification
// ---------------------------------------------------------------------------

/// Where the truth sits relative to the estimate's brackets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Miss {
    /// Truth at or below the lower bracket.
    pub lower: bool,
    /// Truth at or above the upper bracket.
    pub upper: bool,
}

impl Miss {
    pub fn any(self) -> bool {
        self.lower || self.upper
    }
}

/// Compares `side * (k - n theta)` with the tolerance `n eps` (absolute) or
/// `n eps theta` (relative). Near-ties are settled in exact rational
/// arithmetic on the binary values of `theta` and `eps`.
fn gap_cmp(k: u64, n: u64, theta: f64, eps: f64, relative: bool, upper: bool) -> Ordering {
    let (kf, nf) = (k as f64, n as f64);
    let n_theta = nf * theta;
    let gap = if upper { n_theta - kf } else { kf - n_theta };
    let tol = if relative { eps * n_theta } else { eps * nf };
    let diff = gap - tol;
    let scale = kf + n_theta.abs() + tol.abs() + 1.0;
    if diff.abs() > 1e-9 * scale {
        return if diff > 0.0 {
            Ordering::Greater
        } else {
            Ordering::Less
        };
    }
    let k = BigRational::from_integer(k.into());
    let n = BigRational::from_integer(n.into());
    let theta = BigRational::from_f64(theta).expect("finite theta");
    let eps = BigRational::from_f64(eps).expect("finite eps");
    let n_theta = &n * &theta;
    let gap = if upper { &n_theta - &k } else { &k - &n_theta };
    let tol = if relative { &eps * &n_theta } else { &eps * &n };
    gap.cmp(&tol)
}

fn past(ord: Ordering, inclusive: bool) -> bool {
    match ord {
        Ordering::Greater => true,
        Ordering::Equal => inclusive,
        Ordering::Less => false,
    }
}

/// Classifies the estimate `k / n` against `theta`. With `inclusive` the
/// bracket boundary counts as a miss (strict coverage event).
pub fn classify(criterion: Criterion, k: u64, n: u64, theta: f64, inclusive: bool) -> Miss {
    let side = |upper: bool| match criterion {
        Criterion::Absolute(e) => past(gap_cmp(k, n, theta, e, false, upper), inclusive),
        Criterion::Relative(e) => past(gap_cmp(k, n, theta, e, true, upper), inclusive),
        Criterion::Mixed { abs, rel } => {
            past(gap_cmp(k, n, theta, abs, false, upper), inclusive)
                && past(gap_cmp(k, n, theta, rel, true, upper), inclusive)
        }
    };
    Miss {
        lower: side(false),
        upper: side(true),
    }
}

/// Whether the estimate `k / n` meets the plan's coverage event at `theta`.
pub fn covers(mode: Mode, criterion: Criterion, k: u64, n: u64, theta: f64) -> bool {
    !classify(criterion, k, n, theta, mode.strict_event()).any()
}

// ---------------------------------------------------------------------------
// Increment distributions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family {
    Binomial,
    Poisson,
    Inverse,
}

impl Family {
    fn of(mode: Mode) -> Family {
        if mode.is_inverse() {
            Family::Inverse
        } else if mode.is_poisson() {
            Family::Poisson
        } else {
            Family::Binomial
        }
    }
}

/// Truncated pmf of one stage increment on `[lo, lo + pmf.len())`.
struct Increment {
    lo: u64,
    pmf: Vec<f64>,
    discarded: f64,
}

fn window(mean: f64, sd: f64) -> (f64, f64) {
    let half = WINDOW_SIGMAS * sd + WINDOW_PAD;
    ((mean - half).floor().max(0.0), (mean + half).ceil())
}

fn binomial_increment(dn: u64, p: f64) -> Increment {
    let mean = dn as f64 * p;
    let (lo, hi) = window(mean, (mean * (1.0 - p)).sqrt());
    let lo = lo as u64;
    let hi = (hi as u64).min(dn);
    let pmf = (lo..=hi).map(|k| binomial_pmf(k, dn, p)).collect();
    let mut discarded = binom_tail(hi + 1, dn, dn, p);
    if lo > 0 {
        discarded += binom_tail(0, lo - 1, dn, p);
    }
    Increment { lo, pmf, discarded }
}

fn poisson_increment(mean: f64) -> Increment {
    let (lo, hi) = window(mean, mean.sqrt());
    let lo = lo as u64;
    let mut hi = hi as u64;
    while poisson_tail_mean(hi + 1, None, mean) > INCREMENT_TAIL_TARGET {
        hi += hi / 2 + 1;
    }
    let pmf = (lo..=hi).map(|k| poisson_pmf(k, mean)).collect();
    let mut discarded = poisson_tail_mean(hi + 1, None, mean);
    if lo > 0 {
        discarded += poisson_tail_mean(0, Some(lo - 1), mean);
    }
    Increment { lo, pmf, discarded }
}

/// Trials needed for `gamma` further successes.
fn inverse_increment(gamma: u64, p: f64) -> Increment {
    let g = gamma as f64;
    let mean = g / p;
    let (lo, hi) = window(mean, (g * (1.0 - p)).sqrt() / p);
    let lo = (lo as u64).max(gamma);
    let mut hi = (hi as u64).max(lo);
    // Pr{more than m trials} = Pr{Bin(m, p) < gamma}
    while binom_tail(0, gamma - 1, hi, p) > INCREMENT_TAIL_TARGET {
        hi += (hi - gamma) / 2 + 1;
    }
    let pmf = (lo..=hi)
        .map(|m| negative_binomial_trials_pmf(m, gamma, p))
        .collect();
    let mut discarded = binom_tail(0, gamma - 1, hi, p);
    if lo > gamma {
        // Pr{fewer than lo trials} = Pr{Bin(lo - 1, p) >= gamma}
        discarded += binom_tail(gamma, lo - 1, lo - 1, p);
    }
    Increment { lo, pmf, discarded }
}

fn increment(family: Family, step: u64, theta: f64) -> Increment {
    match family {
        Family::Binomial => binomial_increment(step, theta),
        Family::Poisson => poisson_increment(step as f64 * theta),
        Family::Inverse => inverse_increment(step, theta),
    }
}

// ---------------------------------------------------------------------------
// Decision cache
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
struct StageStops {
    lo: u64,
    flags: Vec<bool>,
}

/// Lazily filled stop decisions, indexed by stage and statistic value.
///
/// Decisions depend only on the plan, so one cache can serve any number of
/// parameter values of the same plan.
#[derive(Debug, Clone, Default)]
pub struct StopCache {
    stages: Vec<StageStops>,
}

impl StopCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure(&mut self, plan: &StageSchedule, stage: &Stage, lo: u64, hi: u64) {
        let idx = stage.index - 1;
        if self.stages.len() <= idx {
            self.stages.resize_with(idx + 1, StageStops::default);
        }
        let entry = &mut self.stages[idx];
        let decide_at = |v: u64| stage_decision(plan, stage, v);
        if entry.flags.is_empty() {
            entry.lo = lo;
            entry.flags = (lo..=hi).map(decide_at).collect();
            return;
        }
        let cur_hi = entry.lo + entry.flags.len() as u64 - 1;
        if lo < entry.lo {
            let mut front: Vec<bool> = (lo..entry.lo).map(decide_at).collect();
            front.append(&mut entry.flags);
            entry.flags = front;
            entry.lo = lo;
        }
        if hi > cur_hi {
            entry.flags.extend((cur_hi + 1..=hi).map(decide_at));
        }
    }

    fn stops(&self, stage: &Stage, v: u64) -> bool {
        let entry = &self.stages[stage.index - 1];
        entry.flags[(v - entry.lo) as usize]
    }
}

/// Stop decision at statistic value `v`: the cumulative count for fixed and
/// open-ended schedules, the sample count for inverse sampling.
fn stage_decision(plan: &StageSchedule, stage: &Stage, v: u64) -> bool {
    let mode = plan.mode();
    let criterion = plan.goal.criterion();
    if mode.is_inverse() {
        decide_binomial(
            criterion,
            &StageObservation::new(stage.index, v, stage.size),
            stage.budget,
        )
    } else {
        decide(
            mode,
            criterion,
            &StageObservation::new(stage.index, stage.size, v),
            stage.budget,
        )
    }
}

// ---------------------------------------------------------------------------
// Dynamic program
// ---------------------------------------------------------------------------

struct Accumulator {
    report: CoverageReport,
}

impl Accumulator {
    fn new(theta: f64) -> Self {
        Accumulator {
            report: CoverageReport {
                theta,
                coverage: 0.0,
                asn: 0.0,
                stage_mass: Vec::new(),
                truncation_bound: 0.0,
                lower_escape: Vec::new(),
                upper_escape: Vec::new(),
                residual_mass: 0.0,
            },
        }
    }
}

fn check_theta(mode: Mode, theta: f64) -> Result<()> {
    let ok = if mode.is_poisson() {
        theta > 0.0 && theta.is_finite()
    } else {
        theta > 0.0 && theta < 1.0
    };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "parameter {theta} outside the domain of {mode}"
        )))
    }
}

/// Core recursion shared by all plan kinds. `max_stages` bounds open-ended
/// iteration; fixed plans stop after their last stage.
fn run_dp(
    plan: &StageSchedule,
    theta: f64,
    max_stages: usize,
    cache: &mut StopCache,
) -> CoverageReport {
    let mode = plan.mode();
    let family = Family::of(mode);
    let criterion = plan.goal.criterion();
    let strict = mode.strict_event();
    let last_fixed = plan.stage_count();

    let mut acc = Accumulator::new(theta);
    // sub-probability of the running statistic on [lo, lo + w.len())
    let mut lo = 0u64;
    let mut w = vec![1.0f64];
    let mut prev_size = 0u64;

    for stage in plan.stages().take(max_stages) {
        let inc = increment(family, stage.size - prev_size, theta);
        prev_size = stage.size;
        let cont_mass: f64 = w.iter().sum();
        acc.report.truncation_bound += cont_mass * inc.discarded;
        w = convolve(&w, &inc.pmf);
        lo += inc.lo;
        trim(&mut lo, &mut w);

        let forced = last_fixed == Some(stage.index);
        if !forced && !w.is_empty() {
            cache.ensure(plan, &stage, lo, lo + w.len() as u64 - 1);
        }

        let (mut stop, mut cover, mut low, mut up, mut asn) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, mass) in w.iter_mut().enumerate() {
            if *mass == 0.0 {
                continue;
            }
            let v = lo + i as u64;
            if !(forced || cache.stops(&stage, v)) {
                continue;
            }
            let m = *mass;
            *mass = 0.0;
            let (k, n) = match family {
                Family::Inverse => (stage.size, v),
                _ => (v, stage.size),
            };
            stop += m;
            asn += m * n as f64;
            let escape = classify(criterion, k, n, theta, true);
            if escape.lower {
                low += m;
            }
            if escape.upper {
                up += m;
            }
            let miss = if strict {
                escape
            } else {
                classify(criterion, k, n, theta, false)
            };
            if !miss.any() {
                cover += m;
            }
        }
        acc.report.stage_mass.push(stop);
        acc.report.lower_escape.push(low);
        acc.report.upper_escape.push(up);
        acc.report.coverage += cover;
        acc.report.asn += asn;
        trim(&mut lo, &mut w);

        // an empty f64 sum is -0.0
        let remaining: f64 = w.iter().sum::<f64>() + 0.0;
        if w.is_empty() || (last_fixed.is_none() && remaining < OPEN_RESIDUAL_TARGET) {
            acc.report.residual_mass = remaining;
            break;
        }
        acc.report.residual_mass = remaining;
    }
    acc.report.truncation_bound += acc.report.residual_mass;
    acc.report
}

fn convolve(w: &[f64], pmf: &[f64]) -> Vec<f64> {
    if w.is_empty() || pmf.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; w.len() + pmf.len() - 1];
    for (i, &a) in w.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (o, &b) in out[i..].iter_mut().zip(pmf) {
            *o += a * b;
        }
    }
    out
}

fn trim(lo: &mut u64, w: &mut Vec<f64>) {
    let Some(first) = w.iter().position(|&x| x != 0.0) else {
        w.clear();
        return;
    };
    let last = w
        .iter()
        .rposition(|&x| x != 0.0)
        .expect("nonzero entry exists");
    w.truncate(last + 1);
    w.drain(..first);
    *lo += first as u64;
}

/// Exact coverage of a fixed schedule (absolute/mixed binomial, mixed Poisson).
pub fn exact_coverage_fixed(plan: &StageSchedule, theta: f64) -> Result<CoverageReport> {
    exact_coverage_fixed_cached(plan, theta, &mut StopCache::new())
}

pub fn exact_coverage_fixed_cached(
    plan: &StageSchedule,
    theta: f64,
    cache: &mut StopCache,
) -> Result<CoverageReport> {
    if !plan.is_fixed() || plan.mode().is_inverse() {
        return Err(Error::PlanKind(format!(
            "{} is not a fixed-size schedule",
            plan.mode()
        )));
    }
    check_theta(plan.mode(), theta)?;
    Ok(run_dp(plan, theta, usize::MAX, cache))
}

/// Exact coverage of an inverse-sampling schedule.
pub fn exact_coverage_inverse(plan: &StageSchedule, p: f64) -> Result<CoverageReport> {
    exact_coverage_inverse_cached(plan, p, &mut StopCache::new())
}

pub fn exact_coverage_inverse_cached(
    plan: &StageSchedule,
    p: f64,
    cache: &mut StopCache,
) -> Result<CoverageReport> {
    if !plan.mode().is_inverse() {
        return Err(Error::PlanKind(format!(
            "{} is not an inverse-sampling schedule",
            plan.mode()
        )));
    }
    check_theta(plan.mode(), p)?;
    Ok(run_dp(plan, p, usize::MAX, cache))
}

/// Coverage lower bound of an open-ended schedule, iterating until the
/// continuing mass drops below [`OPEN_RESIDUAL_TARGET`] or `stage_cap`
/// stages have been evaluated.
pub fn exact_coverage_open(
    plan: &StageSchedule,
    theta: f64,
    stage_cap: usize,
) -> Result<CoverageReport> {
    exact_coverage_open_cached(plan, theta, stage_cap, &mut StopCache::new())
}

pub fn exact_coverage_open_cached(
    plan: &StageSchedule,
    theta: f64,
    stage_cap: usize,
    cache: &mut StopCache,
) -> Result<CoverageReport> {
    if plan.is_fixed() {
        return Err(Error::PlanKind(format!(
            "{} is not an open-ended schedule",
            plan.mode()
        )));
    }
    check_theta(plan.mode(), theta)?;
    Ok(run_dp(plan, theta, stage_cap, cache))
}

/// Exact coverage of any plan kind (open-ended plans use `stage_cap`).
pub fn exact_coverage(
    plan: &StageSchedule,
    theta: f64,
    stage_cap: usize,
) -> Result<CoverageReport> {
    exact_coverage_cached(plan, theta, stage_cap, &mut StopCache::new())
}

pub fn exact_coverage_cached(
    plan: &StageSchedule,
    theta: f64,
    stage_cap: usize,
    cache: &mut StopCache,
) -> Result<CoverageReport> {
    if plan.mode().is_inverse() {
        exact_coverage_inverse_cached(plan, theta, cache)
    } else if plan.is_fixed() {
        exact_coverage_fixed_cached(plan, theta, cache)
    } else {
        exact_coverage_open_cached(plan, theta, stage_cap, cache)
    }
}

/// Evaluates `exact_coverage` at every point, in parallel, returning reports
/// in input order.
pub fn sweep(
    plan: &StageSchedule,
    thetas: &[f64],
    stage_cap: usize,
) -> Result<Vec<CoverageReport>> {
    thetas
        .par_iter()
        .map_init(StopCache::new, |cache, &theta| {
            exact_coverage_cached(plan, theta, stage_cap, cache)
        })
        .collect()
}

/// Independent oracle for tiny binomial fixed schedules: replays the
/// executor on every binary sequence of length `n_s`.
pub fn brute_force_enumerate(plan: &StageSchedule, theta: f64) -> Result<CoverageReport> {
    let mode = plan.mode();
    if !plan.is_fixed() || mode.is_inverse() || mode.is_poisson() {
        return Err(Error::PlanKind(format!(
            "enumeration supports fixed binomial schedules only, not {mode}"
        )));
    }
    check_theta(mode, theta)?;
    let n_s = *plan.stages.last().expect("fixed plans have stages");
    if n_s >= 64 || (1u64 << n_s) > MAX_ENUMERATION_PATHS {
        return Err(Error::TooLarge(format!("2^{n_s} paths")));
    }
    let criterion = plan.goal.criterion();
    let s = plan.stages.len();
    let mut acc = Accumulator::new(theta);
    acc.report.stage_mass = vec![0.0; s];
    acc.report.lower_escape = vec![0.0; s];
    acc.report.upper_escape = vec![0.0; s];
    let (ln_p, ln_q) = (theta.ln(), (-theta).ln_1p());

    for bits in 0..(1u64 << n_s) {
        let ones = u64::from(bits.count_ones());
        let prob = (ones as f64 * ln_p + (n_s - ones) as f64 * ln_q).exp();
        let mut stream = (0..n_s).map(|i| (bits >> i) & 1);
        let res = run_fixed_schedule(plan, &mut stream)?;
        let last = res.trail.last().expect("non-empty trail");
        let idx = res.stop_stage - 1;
        acc.report.stage_mass[idx] += prob;
        acc.report.asn += prob * res.total_samples as f64;
        let escape = classify(criterion, last.sum, last.samples, theta, true);
        if escape.lower {
            acc.report.lower_escape[idx] += prob;
        }
        if escape.upper {
            acc.report.upper_escape[idx] += prob;
        }
        if covers(mode, criterion, last.sum, last.samples, theta) {
            acc.report.coverage += prob;
        }
    }
    Ok(acc.report)
}
