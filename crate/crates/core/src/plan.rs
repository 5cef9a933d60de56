//! Stage schedules for each sampling scheme.
//!
//! Fixed schedules (absolute binomial, inverse binomial, mixed binomial and
//! mixed Poisson) are fully materialized at build time. Open-ended schedules
//! keep only their generating parameters; stage sizes and the halving error
//! budgets are produced on demand by [`StageSchedule::stages`].

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_RHO: f64 = 0.5;
pub const DEFAULT_GROWTH_RATIO: f64 = 1.5;
pub const DEFAULT_OPEN_TAU: u32 = 5;
pub const DEFAULT_OPEN_BASE: u64 = 10;
pub const SCHEMA_VERSION: u32 = 1;

/// Largest stage size an open-ended ladder will generate.
const MAX_STAGE_SIZE: f64 = 9.0e15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[serde(rename = "abs-binomial")]
    AbsoluteBinomial,
    #[serde(rename = "rel-binomial-inverse")]
    RelativeBinomialInverse,
    #[serde(rename = "rel-binomial-open")]
    RelativeBinomialOpen,
    #[serde(rename = "mixed-binomial")]
    MixedBinomial,
    #[serde(rename = "mixed-poisson")]
    MixedPoisson,
    #[serde(rename = "abs-poisson-open")]
    AbsolutePoissonOpen,
    #[serde(rename = "rel-poisson-open")]
    RelativePoissonOpen,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::AbsoluteBinomial,
        Mode::RelativeBinomialInverse,
        Mode::RelativeBinomialOpen,
        Mode::MixedBinomial,
        Mode::MixedPoisson,
        Mode::AbsolutePoissonOpen,
        Mode::RelativePoissonOpen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::AbsoluteBinomial => "abs-binomial",
            Mode::RelativeBinomialInverse => "rel-binomial-inverse",
            Mode::RelativeBinomialOpen => "rel-binomial-open",
            Mode::MixedBinomial => "mixed-binomial",
            Mode::MixedPoisson => "mixed-poisson",
            Mode::AbsolutePoissonOpen => "abs-poisson-open",
            Mode::RelativePoissonOpen => "rel-poisson-open",
        }
    }

    pub fn is_poisson(self) -> bool {
        matches!(
            self,
            Mode::MixedPoisson | Mode::AbsolutePoissonOpen | Mode::RelativePoissonOpen
        )
    }

    pub fn is_open_ended(self) -> bool {
        matches!(
            self,
            Mode::RelativeBinomialOpen | Mode::AbsolutePoissonOpen | Mode::RelativePoissonOpen
        )
    }

    pub fn is_inverse(self) -> bool {
        self == Mode::RelativeBinomialInverse
    }

    /// Whether the coverage event uses a strict inequality.
    ///
    /// The open-ended schemes guarantee `|est - theta| <= eps`; the fixed
    /// ones guarantee `< eps`.
    pub fn strict_event(self) -> bool {
        !self.is_open_ended()
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown mode '{s}'")))
    }
}

/// Precision requirement of an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Absolute(f64),
    Relative(f64),
    Mixed { abs: f64, rel: f64 },
}

impl Criterion {
    /// Interval `[lower, upper]` around an estimate such that the truth lying
    /// strictly inside it meets the criterion.
    pub fn brackets(self, estimate: f64) -> (f64, f64) {
        match self {
            Criterion::Absolute(e) => (estimate - e, estimate + e),
            Criterion::Relative(e) => (estimate / (1.0 + e), estimate / (1.0 - e)),
            Criterion::Mixed { abs, rel } => (
                (estimate - abs).min(estimate / (1.0 + rel)),
                (estimate + abs).max(estimate / (1.0 - rel)),
            ),
        }
    }
}

/// Target precision and confidence `1 - delta`.
///
/// `eps_a` carries the absolute tolerance and `eps_r` the relative one; a
/// mode that uses only one of them stores 0 in the other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionGoal {
    pub mode: Mode,
    pub eps_a: f64,
    pub eps_r: f64,
    pub delta: f64,
}

impl PrecisionGoal {
    pub fn new(mode: Mode, eps_a: f64, eps_r: f64, delta: f64) -> Result<Self> {
        let goal = PrecisionGoal {
            mode,
            eps_a,
            eps_r,
            delta,
        };
        goal.validate()?;
        Ok(goal)
    }

    /// Builds a goal from a single tolerance, routed to `eps_a` or `eps_r`
    /// according to the mode.
    pub fn single(mode: Mode, eps: f64, delta: f64) -> Result<Self> {
        match mode {
            Mode::AbsoluteBinomial | Mode::AbsolutePoissonOpen => Self::new(mode, eps, 0.0, delta),
            Mode::MixedBinomial | Mode::MixedPoisson => Err(Error::invalid(format!(
                "mode {mode} needs both an absolute and a relative tolerance"
            ))),
            _ => Self::new(mode, 0.0, eps, delta),
        }
    }

    pub fn criterion(&self) -> Criterion {
        match self.mode {
            Mode::AbsoluteBinomial | Mode::AbsolutePoissonOpen => Criterion::Absolute(self.eps_a),
            Mode::RelativeBinomialInverse
            | Mode::RelativeBinomialOpen
            | Mode::RelativePoissonOpen => Criterion::Relative(self.eps_r),
            Mode::MixedBinomial | Mode::MixedPoisson => Criterion::Mixed {
                abs: self.eps_a,
                rel: self.eps_r,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (ea, er) = (self.eps_a, self.eps_r);
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(infeasible(
                "0 < delta < 1",
                format!("delta = {}", self.delta),
            ));
        }
        match self.mode {
            Mode::AbsoluteBinomial => {
                if !(ea > 0.0 && ea < 0.5) {
                    return Err(infeasible("0 < eps < 1/2", format!("eps = {ea}")));
                }
            }
            Mode::AbsolutePoissonOpen => {
                if !(ea > 0.0 && ea.is_finite()) {
                    return Err(infeasible("eps > 0", format!("eps = {ea}")));
                }
            }
            Mode::RelativeBinomialInverse
            | Mode::RelativeBinomialOpen
            | Mode::RelativePoissonOpen => {
                if !(er > 0.0 && er < 1.0) {
                    return Err(infeasible("0 < eps < 1", format!("eps = {er}")));
                }
            }
            Mode::MixedBinomial => {
                if !(ea > 0.0 && ea < 35.0 / 94.0) {
                    return Err(infeasible("0 < eps_a < 35/94", format!("eps_a = {ea}")));
                }
                let lower = 70.0 * ea / (35.0 - 24.0 * ea);
                if !(er > lower) {
                    return Err(infeasible(
                        "70 eps_a / (35 - 24 eps_a) < eps_r",
                        format!("eps_r = {er}, lower bound = {lower}"),
                    ));
                }
                if !(er < 1.0) {
                    return Err(infeasible("eps_r < 1", format!("eps_r = {er}")));
                }
            }
            Mode::MixedPoisson => {
                if !(ea > 0.0 && ea < 1.0) {
                    return Err(infeasible("0 < eps_a < 1", format!("eps_a = {ea}")));
                }
                if !(er > 0.0 && er < 1.0) {
                    return Err(infeasible("0 < eps_r < 1", format!("eps_r = {er}")));
                }
            }
        }
        Ok(())
    }
}

fn infeasible(inequality: &'static str, detail: String) -> Error {
    Error::Infeasible { inequality, detail }
}

/// Generating parameters of an open-ended ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenLadder {
    pub base_size: u64,
    pub growth_ratio: f64,
    pub tau: u32,
}

/// One evaluated stage of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    /// 1-based stage index.
    pub index: usize,
    /// Cumulative sample size, or success target for inverse sampling.
    pub size: u64,
    /// Error budget `zeta * delta_l` the stage decision is compared against.
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    #[serde(flatten)]
    pub goal: PrecisionGoal,
    pub zeta: f64,
    pub rho: Option<f64>,
    pub tau: i64,
    pub nu: Option<f64>,
    pub stages: Vec<u64>,
    pub per_stage_budget: Vec<f64>,
    pub open_ended: Option<OpenLadder>,
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    schema_version: u32,
    #[serde(flatten)]
    plan: StageSchedule,
}

impl StageSchedule {
    pub fn mode(&self) -> Mode {
        self.goal.mode
    }

    pub fn is_fixed(&self) -> bool {
        self.open_ended.is_none()
    }

    /// Number of stages of a fixed schedule; `None` for open-ended ones.
    pub fn stage_count(&self) -> Option<usize> {
        self.is_fixed().then_some(self.stages.len())
    }

    /// Iterates the stages in order. Open-ended ladders are unbounded.
    pub fn stages(&self) -> Box<dyn Iterator<Item = Stage> + '_> {
        match self.open_ended {
            None => Box::new(
                self.stages
                    .iter()
                    .zip(&self.per_stage_budget)
                    .enumerate()
                    .map(|(i, (&size, &budget))| Stage {
                        index: i + 1,
                        size,
                        budget,
                    }),
            ),
            Some(ladder) => {
                let zeta_delta = self.zeta * self.goal.delta;
                let mut prev = 0u64;
                Box::new((1usize..).map_while(move |index| {
                    let raw = (ladder.base_size as f64
                        * ladder.growth_ratio.powi(index as i32 - 1))
                    .ceil();
                    if raw > MAX_STAGE_SIZE {
                        return None;
                    }
                    let size = (raw as u64).max(prev + 1);
                    prev = size;
                    Some(Stage {
                        index,
                        size,
                        budget: zeta_delta * open_budget_factor(index, ladder.tau),
                    })
                }))
            }
        }
    }

    /// Stage `index` (1-based), if the schedule has one.
    pub fn stage(&self, index: usize) -> Option<Stage> {
        if index == 0 {
            return None;
        }
        self.stages().nth(index - 1)
    }

    /// Canonical JSON document including the schema version.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PlanFile {
            schema_version: SCHEMA_VERSION,
            plan: self.clone(),
        })
        .expect("plan serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PlanFile = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("malformed plan document: {e}")))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported plan schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        file.plan.check_structure()?;
        Ok(file.plan)
    }

    /// Hex SHA-256 of the compact canonical JSON.
    pub fn schedule_hash(&self) -> String {
        let compact = serde_json::to_string(&PlanFile {
            schema_version: SCHEMA_VERSION,
            plan: self.clone(),
        })
        .expect("plan serialization cannot fail");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }

    fn check_structure(&self) -> Result<()> {
        self.goal.validate()?;
        if !(self.zeta > 0.0) {
            return Err(Error::invalid(format!(
                "zeta = {} must be positive",
                self.zeta
            )));
        }
        match self.open_ended {
            Some(ladder) => {
                if !self.goal.mode.is_open_ended() {
                    return Err(Error::PlanKind(format!(
                        "mode {} cannot carry an open-ended ladder",
                        self.goal.mode
                    )));
                }
                check_open_params(ladder, self.zeta)?;
            }
            None => {
                if self.goal.mode.is_open_ended() {
                    return Err(Error::PlanKind(format!(
                        "mode {} needs an open-ended ladder",
                        self.goal.mode
                    )));
                }
                if self.stages.is_empty() {
                    return Err(Error::invalid("schedule has no stages"));
                }
                if self.stages[0] == 0 || self.stages.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::invalid(
                        "stages must be positive and strictly increasing",
                    ));
                }
                if self.per_stage_budget.len() != self.stages.len() {
                    return Err(Error::invalid(
                        "per_stage_budget length differs from stages",
                    ));
                }
            }
        }
        Ok(())
    }

    /// A fixed schedule with caller-supplied stage sizes.
    pub fn with_stages(goal: PrecisionGoal, stages: Vec<u64>, zeta: f64) -> Result<Self> {
        goal.validate()?;
        if goal.mode.is_open_ended() {
            return Err(Error::PlanKind(format!(
                "mode {} uses an open-ended ladder, not a stage list",
                goal.mode
            )));
        }
        let plan = StageSchedule {
            goal,
            zeta,
            rho: None,
            tau: stages.len() as i64 - 1,
            nu: None,
            per_stage_budget: vec![zeta * goal.delta; stages.len()],
            stages,
            open_ended: None,
        };
        plan.check_structure()?;
        Ok(plan)
    }
}

fn open_budget_factor(index: usize, tau: u32) -> f64 {
    let over = index as i64 - tau as i64;
    if over <= 0 {
        1.0
    } else {
        0.5f64.powi(over as i32)
    }
}

fn check_open_params(ladder: OpenLadder, zeta: f64) -> Result<()> {
    if !(ladder.growth_ratio > 1.0) || !ladder.growth_ratio.is_finite() {
        return Err(infeasible(
            "growth ratio r > 1",
            format!("r = {}", ladder.growth_ratio),
        ));
    }
    if ladder.base_size == 0 {
        return Err(Error::invalid("base stage size must be at least 1"));
    }
    if ladder.tau == 0 {
        return Err(Error::invalid("tau must be a positive integer"));
    }
    if !(zeta > 0.0) || 2.0 * (f64::from(ladder.tau) + 1.0) * zeta > 1.0 + 1e-15 {
        return Err(infeasible(
            "2 (tau + 1) zeta <= 1",
            format!("tau = {}, zeta = {zeta}", ladder.tau),
        ));
    }
    Ok(())
}

fn check_zeta_rho(zeta: f64, rho: f64) -> Result<()> {
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::invalid(format!("zeta = {zeta} must be positive")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("rho = {rho} must be positive")));
    }
    Ok(())
}

fn expect_mode(goal: &PrecisionGoal, mode: Mode) -> Result<()> {
    goal.validate()?;
    if goal.mode != mode {
        return Err(Error::PlanKind(format!(
            "builder for {mode} called with a {} goal",
            goal.mode
        )));
    }
    Ok(())
}

/// Sufficient bound on `zeta` for the scheme.
pub fn default_zeta(tau: i64, mode: Mode) -> Result<f64> {
    match mode {
        Mode::MixedBinomial if tau <= -1 => Ok(1.0 / (2.0 * (1 - tau) as f64)),
        Mode::MixedBinomial => Err(Error::invalid(format!(
            "mixed binomial schedules have tau <= -1, got {tau}"
        ))),
        _ if tau >= 1 => Ok(1.0 / (2.0 * (tau + 1) as f64)),
        _ => Err(Error::invalid(format!(
            "tau must be >= 1 for {mode}, got {tau}"
        ))),
    }
}

fn dedup_sorted(mut sizes: Vec<u64>) -> Vec<u64> {
    sizes.sort_unstable();
    sizes.dedup();
    sizes
}

fn fixed_schedule(
    goal: &PrecisionGoal,
    zeta: f64,
    rho: f64,
    tau: i64,
    nu: Option<f64>,
    stages: Vec<u64>,
) -> StageSchedule {
    let stages = dedup_sorted(stages);
    StageSchedule {
        goal: *goal,
        zeta,
        rho: Some(rho),
        tau,
        nu,
        per_stage_budget: vec![zeta * goal.delta; stages.len()],
        stages,
        open_ended: None,
    }
}

fn ceil_size(x: f64) -> u64 {
    x.ceil().max(1.0) as u64
}

/// `tau` of the absolute binomial ladder (independent of `zeta`).
pub fn abs_binomial_tau(eps: f64, rho: f64) -> i64 {
    let two_eps_sq = 2.0 * eps * eps;
    let ln_inv = -(-eps).ln_1p();
    ((ln_inv / two_eps_sq).ln() / rho.ln_1p()).ceil() as i64
}

/// Absolute-error binomial schedule with fixed sample sizes.
pub fn build_abs_binomial(
    goal: &PrecisionGoal,
    zeta: Option<f64>,
    rho: f64,
) -> Result<StageSchedule> {
    expect_mode(goal, Mode::AbsoluteBinomial)?;
    let eps = goal.eps_a;
    let tau = abs_binomial_tau(eps, rho);
    let zeta = zeta.map_or_else(|| default_zeta(tau, goal.mode), Ok)?;
    check_zeta_rho(zeta, rho)?;
    let two_eps_sq = 2.0 * eps * eps;
    let ratio = two_eps_sq / -(-eps).ln_1p();
    let log_budget = -(zeta * goal.delta).ln();
    let sizes = (0..=tau)
        .map(|i| {
            let exponent = 1.0 - i as f64 / tau as f64;
            ceil_size(ratio.powf(exponent) * log_budget / two_eps_sq)
        })
        .collect();
    Ok(fixed_schedule(goal, zeta, rho, tau, None, sizes))
}

/// `(nu, tau)` of the inverse binomial ladder.
pub fn rel_binomial_inverse_params(eps: f64, rho: f64) -> (f64, i64) {
    let ln1e = eps.ln_1p();
    let nu = eps / ((1.0 + eps) * ln1e - eps);
    let tau = (nu.ln_1p() / rho.ln_1p()).ceil() as i64;
    (nu, tau)
}

/// Relative-error binomial schedule of inverse-sampling success targets.
pub fn build_rel_binomial_inverse(
    goal: &PrecisionGoal,
    zeta: Option<f64>,
    rho: f64,
) -> Result<StageSchedule> {
    expect_mode(goal, Mode::RelativeBinomialInverse)?;
    let eps = goal.eps_r;
    let (nu, tau) = rel_binomial_inverse_params(eps, rho);
    let zeta = zeta.map_or_else(|| default_zeta(tau, goal.mode), Ok)?;
    check_zeta_rho(zeta, rho)?;
    let base = -(zeta * goal.delta).ln() / eps.ln_1p();
    let sizes = (0..=tau)
        .map(|i| ceil_size((1.0 + nu).powf(i as f64 / tau as f64) * base))
        .collect();
    Ok(fixed_schedule(goal, zeta, rho, tau, Some(nu), sizes))
}

/// `(nu, tau)` of the mixed binomial ladder; `nu < 0` and `tau <= -1`.
pub fn mixed_binomial_params(eps_a: f64, eps_r: f64, rho: f64) -> (f64, i64) {
    let a = eps_a + eps_r * eps_a - eps_r;
    let nu = a / (eps_r * eps_r.ln_1p()) * (-eps_r * eps_r / a).ln_1p();
    let tau = (nu.ln_1p() / rho.ln_1p()).floor() as i64;
    (nu, tau)
}

/// Mixed absolute/relative binomial schedule.
///
/// Sizes run from `ln(1/(zeta delta)) / ln(1 + eps_r)` (the smallest size at
/// which an estimate of 1 can stop) up to that value divided by `1 + nu`,
/// the size at which every outcome stops.
pub fn build_mixed_binomial(
    goal: &PrecisionGoal,
    zeta: Option<f64>,
    rho: f64,
) -> Result<StageSchedule> {
    expect_mode(goal, Mode::MixedBinomial)?;
    let (nu, tau) = mixed_binomial_params(goal.eps_a, goal.eps_r, rho);
    if !(nu > -1.0 && nu < 0.0) {
        return Err(Error::invalid(format!(
            "mixed binomial nu = {nu} outside (-1, 0)"
        )));
    }
    let zeta = zeta.map_or_else(|| default_zeta(tau, goal.mode), Ok)?;
    check_zeta_rho(zeta, rho)?;
    let base = -(zeta * goal.delta).ln() / goal.eps_r.ln_1p();
    let sizes = (tau..=0)
        .map(|i| ceil_size((1.0 + nu).powf(-(i as f64) / tau as f64) * base))
        .collect();
    Ok(fixed_schedule(goal, zeta, rho, tau, Some(nu), sizes))
}

/// `(nu, tau)` of the mixed Poisson ladder; `nu > 1` and `tau >= 1`.
pub fn mixed_poisson_params(eps_a: f64, eps_r: f64, rho: f64) -> (f64, i64) {
    let nu = eps_r / (eps_a * ((1.0 + eps_r) * eps_r.ln_1p() - eps_r));
    let tau = (nu.ln() / rho.ln_1p()).ceil() as i64;
    (nu, tau)
}

/// Mixed absolute/relative Poisson schedule.
pub fn build_mixed_poisson(
    goal: &PrecisionGoal,
    zeta: Option<f64>,
    rho: f64,
) -> Result<StageSchedule> {
    expect_mode(goal, Mode::MixedPoisson)?;
    let (nu, tau) = mixed_poisson_params(goal.eps_a, goal.eps_r, rho);
    let zeta = zeta.map_or_else(|| default_zeta(tau, goal.mode), Ok)?;
    check_zeta_rho(zeta, rho)?;
    let base = -(zeta * goal.delta).ln();
    let sizes = (0..=tau)
        .map(|i| ceil_size(nu.powf(i as f64 / tau as f64) * base))
        .collect();
    Ok(fixed_schedule(goal, zeta, rho, tau, Some(nu), sizes))
}

/// Default first stage of an open-ended ladder.
///
/// For the relative binomial scheme this is the smallest size at which an
/// estimate of 1 can stop; the Poisson schemes start at 10.
pub fn default_open_base(goal: &PrecisionGoal, zeta: f64) -> u64 {
    match goal.mode {
        Mode::RelativeBinomialOpen => ceil_size(-(zeta * goal.delta).ln() / goal.eps_r.ln_1p()),
        _ => DEFAULT_OPEN_BASE,
    }
}

/// Open-ended schedule with a geometric ladder and halving budgets past `tau`.
pub fn build_open_ended(
    goal: &PrecisionGoal,
    zeta: Option<f64>,
    tau: u32,
    n1: Option<u64>,
    r: f64,
) -> Result<StageSchedule> {
    goal.validate()?;
    if !goal.mode.is_open_ended() {
        return Err(Error::PlanKind(format!(
            "mode {} does not use an open-ended ladder",
            goal.mode
        )));
    }
    if tau == 0 {
        return Err(Error::invalid("tau must be a positive integer"));
    }
    let zeta = zeta.map_or_else(|| default_zeta(i64::from(tau), goal.mode), Ok)?;
    let base = n1.unwrap_or_else(|| default_open_base(goal, zeta));
    let ladder = OpenLadder {
        base_size: base,
        growth_ratio: r,
        tau,
    };
    check_open_params(ladder, zeta)?;
    Ok(StageSchedule {
        goal: *goal,
        zeta,
        rho: None,
        tau: i64::from(tau),
        nu: None,
        stages: Vec::new(),
        per_stage_budget: Vec::new(),
        open_ended: Some(ladder),
    })
}

/// Builds the schedule a mode calls for, with default parameters where
/// `None` is given.
pub fn build(goal: &PrecisionGoal, zeta: Option<f64>, rho: Option<f64>) -> Result<StageSchedule> {
    let rho = rho.unwrap_or(DEFAULT_RHO);
    match goal.mode {
        Mode::AbsoluteBinomial => build_abs_binomial(goal, zeta, rho),
        Mode::RelativeBinomialInverse => build_rel_binomial_inverse(goal, zeta, rho),
        Mode::MixedBinomial => build_mixed_binomial(goal, zeta, rho),
        Mode::MixedPoisson => build_mixed_poisson(goal, zeta, rho),
        _ => build_open_ended(goal, zeta, DEFAULT_OPEN_TAU, None, DEFAULT_GROWTH_RATIO),
    }
}
