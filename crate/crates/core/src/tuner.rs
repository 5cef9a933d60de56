//! Bisection search for the largest risk-allocation factor `zeta` whose
//! schedule still meets the coverage target on a verification grid.

use serde::{Deserialize, Serialize};

use crate::coverage::{sweep, CoverageReport};
use crate::error::{Error, Result};
use crate::plan::{self, Mode, PrecisionGoal, StageSchedule};
use crate::stopping::DEFAULT_STAGE_CAP;

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const UNIFORM_POINTS: usize = 999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    QPlus,
    QMinus,
    Uniform,
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationGrid {
    pub points: Vec<f64>,
    pub provenance: Provenance,
}

impl VerificationGrid {
    /// Sorted, deduplicated grid. Points must lie in the open parameter
    /// domain of `mode`.
    pub fn new(mode: Mode, points: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let points = sorted_unique(points);
        if points.is_empty() {
            return Err(Error::invalid("verification grid is empty"));
        }
        if let Some(&bad) = points.iter().find(|&&x| !in_domain(mode, x)) {
            return Err(Error::invalid(format!(
                "grid point {bad} outside the domain of {mode}"
            )));
        }
        Ok(VerificationGrid { points, provenance })
    }

    /// `count` equally spaced interior points of (0, 1).
    pub fn uniform(count: usize) -> Self {
        let step = 1.0 / (count as f64 + 1.0);
        VerificationGrid {
            points: (1..=count).map(|i| i as f64 * step).collect(),
            provenance: Provenance::Uniform,
        }
    }

    /// `count` log-spaced points on `[lo, hi]`.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Self {
        let (a, b) = (lo.ln(), hi.ln());
        let points = if count == 1 {
            vec![lo]
        } else {
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        };
        VerificationGrid {
            points,
            provenance: Provenance::Uniform,
        }
    }
}

fn in_domain(mode: Mode, x: f64) -> bool {
    if mode.is_poisson() {
        x > 0.0 && x.is_finite()
    } else {
        x > 0.0 && x < 1.0
    }
}

fn sorted_unique(mut points: Vec<f64>) -> Vec<f64> {
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Lattice grids `{k/n_l + eps in (0, 1/2)} u {1/2}` and
/// `{k/n_l - eps in (0, 1/2)} u {1/2}` of an absolute binomial schedule.
pub fn build_q_grids(
    plan: &StageSchedule,
    eps: f64,
) -> Result<(VerificationGrid, VerificationGrid)> {
    if plan.mode() != Mode::AbsoluteBinomial {
        return Err(Error::PlanKind(format!(
            "lattice grids need an absolute binomial schedule, not {}",
            plan.mode()
        )));
    }
    let mut plus = vec![0.5];
    let mut minus = vec![0.5];
    for &n in &plan.stages {
        for k in 0..=n {
            let x = k as f64 / n as f64;
            let up = x + eps;
            if up > 0.0 && up < 0.5 {
                plus.push(up);
            }
            let down = x - eps;
            if down > 0.0 && down < 0.5 {
                minus.push(down);
            }
        }
    }
    Ok((
        VerificationGrid {
            points: sorted_unique(plus),
            provenance: Provenance::QPlus,
        },
        VerificationGrid {
            points: sorted_unique(minus),
            provenance: Provenance::QMinus,
        },
    ))
}

/// Points where the coverage of a fixed binomial schedule can jump: every
/// stage estimate `k/n_l` mapped through the criterion brackets.
pub fn lattice_points(plan: &StageSchedule) -> Vec<f64> {
    if !plan.is_fixed() || plan.mode().is_poisson() || plan.mode().is_inverse() {
        return Vec::new();
    }
    let goal = &plan.goal;
    let mut pts = Vec::new();
    for &n in &plan.stages {
        for k in 0..=n {
            let x = k as f64 / n as f64;
            if goal.eps_a > 0.0 {
                pts.extend([x - goal.eps_a, x + goal.eps_a]);
            }
            if goal.eps_r > 0.0 {
                pts.extend([x / (1.0 + goal.eps_r), x / (1.0 - goal.eps_r)]);
            }
        }
    }
    pts.retain(|&x| x > 0.0 && x < 1.0);
    sorted_unique(pts)
}

/// Where the tuner takes its verification points from.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSource {
    /// Lattice grids rebuilt from every candidate schedule (absolute
    /// binomial only), checked with the one-sided escape sums.
    QLattice,
    /// Uniform points plus the lattice points of every candidate schedule.
    UniformLattice(usize),
    /// A grid held fixed across candidates.
    Fixed(VerificationGrid),
}

impl GridSource {
    /// Default source for a mode.
    pub fn default_for(mode: Mode) -> GridSource {
        match mode {
            Mode::AbsoluteBinomial => GridSource::QLattice,
            m if m.is_poisson() => GridSource::Fixed(VerificationGrid::log_spaced(0.1, 10.0, 199)),
            _ => GridSource::UniformLattice(UNIFORM_POINTS),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningStep {
    pub zeta: f64,
    pub min_coverage: f64,
    /// Largest summed escape mass on the side the grid checks (lattice
    /// grids) or on either side (other grids).
    pub max_one_sided_escape: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningOutcome {
    pub zeta_star: f64,
    pub default_zeta: f64,
    pub plan: StageSchedule,
    /// Reports at ζ*, one per grid point in increasing order.
    pub certificate: Vec<CoverageReport>,
    pub transcript: Vec<TuningStep>,
    /// True when the grid is known to be sufficient for the whole domain.
    pub grid_exact: bool,
}

struct Evaluation {
    step: TuningStep,
    reports: Vec<CoverageReport>,
}

fn evaluate(plan: &StageSchedule, source: &GridSource) -> Result<Evaluation> {
    let delta = plan.goal.delta;
    let (points, plus, minus) = match source {
        GridSource::QLattice => {
            let (plus, minus) = build_q_grids(plan, plan.goal.eps_a)?;
            let mut all = plus.points.clone();
            all.extend(&minus.points);
            (sorted_unique(all), Some(plus.points), Some(minus.points))
        }
        GridSource::UniformLattice(count) => {
            let mut pts = VerificationGrid::uniform(*count).points;
            pts.extend(lattice_points(plan));
            (sorted_unique(pts), None, None)
        }
        GridSource::Fixed(grid) => (grid.points.clone(), None, None),
    };
    let reports = sweep(plan, &points, DEFAULT_STAGE_CAP)?;

    let mut min_coverage = f64::INFINITY;
    let mut max_escape: f64 = 0.0;
    let mut escapes_ok = true;
    for rep in &reports {
        min_coverage = min_coverage.min(rep.coverage);
        let low: f64 = rep.lower_escape.iter().sum::<f64>() + rep.truncation_bound;
        let up: f64 = rep.upper_escape.iter().sum::<f64>() + rep.truncation_bound;
        match (&plus, &minus) {
            (Some(plus), Some(minus)) => {
                if contains(plus, rep.theta) {
                    max_escape = max_escape.max(up);
                    escapes_ok &= up <= delta / 2.0;
                }
                if contains(minus, rep.theta) {
                    max_escape = max_escape.max(low);
                    escapes_ok &= low <= delta / 2.0;
                }
            }
            _ => max_escape = max_escape.max(low.max(up)),
        }
    }
    let feasible = escapes_ok && min_coverage >= 1.0 - delta;
    Ok(Evaluation {
        step: TuningStep {
            zeta: plan.zeta,
            min_coverage,
            max_one_sided_escape: max_escape,
            feasible,
        },
        reports,
    })
}

fn contains(sorted: &[f64], x: f64) -> bool {
    sorted.binary_search_by(|p| p.total_cmp(&x)).is_ok()
}

/// Stages may only shrink as `zeta` grows.
fn check_shrinks(base: &StageSchedule, candidate: &StageSchedule) -> Result<()> {
    let grows = match (base.open_ended, candidate.open_ended) {
        (Some(a), Some(b)) => b.base_size > a.base_size,
        _ => {
            let (a, b) = (&base.stages, &candidate.stages);
            // coincident stages are merged, so index-wise only at equal length
            b.first() > a.first()
                || b.last() > a.last()
                || (a.len() == b.len() && a.iter().zip(b).any(|(x, y)| y > x))
        }
    };
    if grows {
        return Err(Error::Tuning(format!(
            "schedule at zeta {} is larger than at zeta {}",
            candidate.zeta, base.zeta
        )));
    }
    Ok(())
}

/// Largest `zeta` in `[default, 1]`, to relative width `tol`, whose rebuilt
/// schedule satisfies the grid predicate.
pub fn tune_zeta(
    goal: &PrecisionGoal,
    rho: Option<f64>,
    source: &GridSource,
    tol: f64,
) -> Result<TuningOutcome> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if matches!(source, GridSource::QLattice) && goal.mode != Mode::AbsoluteBinomial {
        return Err(Error::PlanKind(format!(
            "lattice grids need an absolute binomial goal, not {}",
            goal.mode
        )));
    }
    if let GridSource::Fixed(grid) = source {
        VerificationGrid::new(goal.mode, grid.points.clone(), grid.provenance)?;
    }

    let base = plan::build(goal, None, rho)?;
    let default_zeta = base.zeta;
    let mut transcript = Vec::new();

    let first = evaluate(&base, source)?;
    transcript.push(first.step.clone());
    if !first.step.feasible {
        return Err(Error::Tuning(format!(
            "default zeta {default_zeta} fails the grid (min coverage {})",
            first.step.min_coverage
        )));
    }
    let mut best = (base.clone(), first.reports);

    let candidate =
        |zeta: f64, transcript: &mut Vec<TuningStep>| -> Result<(StageSchedule, Evaluation)> {
            let plan = plan::build(goal, Some(zeta), rho)?;
            check_shrinks(&base, &plan)?;
            let eval = evaluate(&plan, source)?;
            transcript.push(eval.step.clone());
            Ok((plan, eval))
        };

    let mut lo = default_zeta;
    let mut hi = 1.0;
    if lo < hi {
        let (plan, eval) = candidate(hi, &mut transcript)?;
        if eval.step.feasible {
            lo = hi;
            best = (plan, eval.reports);
        }
    }
    while hi > lo * (1.0 + tol) {
        let mid = 0.5 * (lo + hi);
        let (plan, eval) = candidate(mid, &mut transcript)?;
        if eval.step.feasible {
            lo = mid;
            best = (plan, eval.reports);
        } else {
            hi = mid;
        }
    }

    Ok(TuningOutcome {
        zeta_star: lo,
        default_zeta,
        plan: best.0,
        certificate: best.1,
        transcript,
        grid_exact: matches!(source, GridSource::QLattice),
    })
}
