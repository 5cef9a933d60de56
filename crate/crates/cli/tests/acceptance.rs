//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Every tolerance is a named constant.

use std::process::{Command, ExitCode};
use std::time::Instant;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use seqest_core::coverage::{brute_force_enumerate, exact_coverage, exact_coverage_fixed, sweep};
use seqest_core::kernels::{
    binomial_pmf, m_b, m_i, m_p, negative_binomial_trials_pmf, s_b, s_p, UpperIndex,
};
use seqest_core::plan::{self, Mode, PrecisionGoal, StageSchedule};
use seqest_core::sim::simulate_coverage;
use seqest_core::stopping::{decide, StageObservation};
use seqest_core::tuner::{build_q_grids, lattice_points, tune_zeta, GridSource};

/// Criterion 1: relative error of the tail kernels against the oracle.
const KERNEL_REL_TOL: f64 = 1e-12;
/// Below this the oracle value is outside the normal f64 range with margin,
/// and the kernels must return something at most `KERNEL_TINY_ABS`.
const KERNEL_TINY: f64 = 1e-280;
const KERNEL_TINY_ABS: f64 = 1e-270;
const KERNEL_POINTS: usize = 10_000;
const ORACLE_BITS: usize = 256;

/// Criterion 2: rounding allowances of the lemma checks.
const CHERNOFF_REL_SLACK: f64 = 1e-10;
const HOEFFDING_ABS_SLACK: f64 = 1e-15;
const MONOTONE_REL_SLACK: f64 = 1e-13;
const QUANTILE_REL_SLACK: f64 = 1e-12;
const MIN_LEMMA_CASES: u64 = 100_000;

/// Criterion 3: enumeration limits for unbounded last-stage statistics.
const PLANS_PER_MODE: usize = 20;
const INVERSE_SAMPLE_FACTOR: u64 = 100;
const POISSON_COUNT_FACTOR: u64 = 50;

/// Criterion 4.
const POISSON_TRUNCATION_LIMIT: f64 = 1e-9;
const POISSON_GRID_POINTS: usize = 200;

/// Criterion 6.
const ENUMERATION_TOL: f64 = 1e-12;
const MC_TRIALS: u64 = 100_000;
const MC_SEED: u64 = 20_240_601;
const MC_SIGMAS: f64 = 4.0;

/// Criterion 7.
const TUNE_TOL: f64 = 1e-4;

type Big = FBig<HalfEven, 2>;
type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Check; 8] = [
        ("1 kernel accuracy", kernel_accuracy),
        ("2 lemma property suite", lemma_suite),
        ("3 final-stage certainty", final_stage_certainty),
        ("4 coverage guarantee", coverage_guarantee),
        ("5 per-stage budget", per_stage_budget),
        ("6 oracle cross-validation", cross_validation),
        ("7 tuner soundness", tuner_soundness),
        ("8 simulate determinism", simulate_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {name}: PASS ({detail}; {secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({detail}; {secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

// ---------------------------------------------------------------------------
// 1. Kernel accuracy against a 256-bit summation
// ---------------------------------------------------------------------------

fn big(x: f64) -> Big {
    Big::try_from(x)
        .unwrap()
        .with_precision(ORACLE_BITS)
        .value()
}

fn big_int(x: u64) -> Big {
    Big::from(x).with_precision(ORACLE_BITS).value()
}

/// Sums terms produced by `step` from index 0, keeping those in `[k, l]`.
/// Terms are log-concave in the index, so once past the peak and below
/// 2^-220 of the running sum the rest cannot matter.
fn oracle_sum(first: Big, k: u64, l: Option<u64>, mut step: impl FnMut(&Big, u64) -> Big) -> f64 {
    let mut term = first;
    let mut sum = big(0.0);
    let mut prev = big(0.0);
    let cutoff = big(2f64.powi(-220));
    let mut i = 0u64;
    loop {
        if l.is_some_and(|l| i > l) {
            break;
        }
        if i >= k {
            sum += &term;
            if term < prev && sum > big(0.0) && term < &sum * &cutoff {
                break;
            }
        }
        let next = step(&term, i);
        prev = std::mem::replace(&mut term, next);
        i += 1;
    }
    sum.to_f64().value()
}

fn oracle_binomial(k: u64, l: u64, n: u64, p: f64) -> f64 {
    let (bp, bq) = (big(p), big(1.0) - big(p));
    let ratio = &bp / &bq;
    let first = (bq.ln() * big_int(n)).exp();
    oracle_sum(first, k, Some(l), |t, i| {
        if i >= n {
            big(0.0)
        } else {
            t * &ratio * big_int(n - i) / big_int(i + 1)
        }
    })
}

fn oracle_poisson(k: u64, l: Option<u64>, n: u64, lambda: f64) -> f64 {
    let mean = big(lambda) * big_int(n);
    let first = (-mean.clone()).exp();
    oracle_sum(first, k, l, |t, i| t * &mean / big_int(i + 1))
}

fn check_kernel(got: f64, exact: f64) -> bool {
    if exact >= KERNEL_TINY {
        (got - exact).abs() <= KERNEL_REL_TOL * exact
    } else {
        got <= KERNEL_TINY_ABS
    }
}

fn kernel_accuracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let log_uniform =
        |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.random::<f64>() * (hi / lo).ln()).exp() * lo;
    #[derive(Clone, Copy)]
    enum Case {
        B {
            k: u64,
            l: u64,
            n: u64,
            p: f64,
        },
        P {
            k: u64,
            l: Option<u64>,
            n: u64,
            lambda: f64,
        },
    }
    let mut cases = Vec::with_capacity(KERNEL_POINTS);
    for i in 0..KERNEL_POINTS {
        let n = (log_uniform(&mut rng, 1.0, 10_001.0) as u64).clamp(1, 10_000);
        if i % 2 == 0 {
            let p = match rng.random_range(0..5) {
                0 => log_uniform(&mut rng, 1e-6, 1e-2),
                1 => 1.0 - log_uniform(&mut rng, 1e-6, 1e-2),
                _ => rng.random_range(0.01..0.99),
            };
            let a = rng.random_range(0..=n);
            let b = rng.random_range(0..=n);
            let (k, l) = match rng.random_range(0..3) {
                0 => (0, a),
                1 => (a, n),
                _ => (a.min(b), a.max(b)),
            };
            cases.push(Case::B { k, l, n, p });
        } else {
            let lambda = log_uniform(&mut rng, 1e-4, 2.0);
            let mean = n as f64 * lambda;
            let spread = 6.0 * mean.sqrt() + 10.0;
            let a = (mean + rng.random_range(-spread..spread)).max(0.0) as u64;
            let b = (mean + rng.random_range(-spread..spread)).max(0.0) as u64;
            let (k, l) = match rng.random_range(0..3) {
                0 => (0, Some(a)),
                1 => (a, None),
                _ => (a.min(b), Some(a.max(b))),
            };
            cases.push(Case::P { k, l, n, lambda });
        }
    }
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|&c| match c {
            Case::B { k, l, n, p } => {
                let exact = oracle_binomial(k, l, n, p);
                let got = s_b(k as i64, l as i64, n as i64, p).unwrap();
                (!check_kernel(got, exact))
                    .then(|| format!("S_B({k},{l},{n},{p}) = {got:e} vs {exact:e}"))
            }
            Case::P { k, l, n, lambda } => {
                let exact = oracle_poisson(k, l, n, lambda);
                let upper = l.map_or(UpperIndex::Infinite, |l| UpperIndex::Finite(l as i64));
                let got = s_p(k as i64, upper, n as i64, lambda).unwrap();
                (!check_kernel(got, exact))
                    .then(|| format!("S_P({k},{l:?},{n},{lambda}) = {got:e} vs {exact:e}"))
            }
        })
        .collect();
    if failures.is_empty() {
        Ok(format!(
            "{KERNEL_POINTS} points, rel tol {KERNEL_REL_TOL:e}"
        ))
    } else {
        Err(format!(
            "{} mismatches, first: {}",
            failures.len(),
            failures[0]
        ))
    }
}

// ---------------------------------------------------------------------------
// 2. Lemma property suite
// ---------------------------------------------------------------------------

struct Tally {
    cases: u64,
    violations: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            cases: 0,
            violations: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.violations.len() < 5 {
            self.violations.push(what());
        } else if !ok {
            self.violations.push(String::new());
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.cases += other.cases;
        self.violations.extend(other.violations);
        self
    }
}

fn chernoff_binomial() -> Tally {
    let ns = [
        1u64, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987,
    ];
    ns.par_iter()
        .map(|&n| {
            let mut t = Tally::new();
            for j in 1..100 {
                let p = j as f64 / 100.0;
                for k in 0..=n {
                    let z = k as f64 / n as f64;
                    let bound = (n as f64 * m_b(z, p).unwrap()).exp() * (1.0 + CHERNOFF_REL_SLACK);
                    if z <= p {
                        let v = s_b(0, k as i64, n as i64, p).unwrap();
                        t.check(v <= bound, || format!("lower S_B n={n} k={k} p={p}"));
                    }
                    if z >= p {
                        let v = s_b(k as i64, n as i64, n as i64, p).unwrap();
                        t.check(v <= bound, || format!("upper S_B n={n} k={k} p={p}"));
                    }
                }
            }
            t
        })
        .reduce(Tally::new, Tally::merge)
}

fn chernoff_poisson() -> Tally {
    let ns = [1u64, 2, 5, 10, 20, 50, 100];
    ns.par_iter()
        .map(|&n| {
            let mut t = Tally::new();
            for j in 0..50 {
                let lambda = 0.01 * 2000f64.powf(j as f64 / 49.0);
                let top = (3.0 * n as f64 * lambda + 20.0) as u64;
                for k in 0..=top {
                    let z = k as f64 / n as f64;
                    let bound =
                        (n as f64 * m_p(z, lambda).unwrap()).exp() * (1.0 + CHERNOFF_REL_SLACK);
                    if z <= lambda {
                        let v = s_p(0, k as i64, n as i64, lambda).unwrap();
                        t.check(v <= bound, || {
                            format!("lower S_P n={n} k={k} lambda={lambda}")
                        });
                    }
                    if z >= lambda {
                        let v = s_p(k as i64, UpperIndex::Infinite, n as i64, lambda).unwrap();
                        t.check(v <= bound, || {
                            format!("upper S_P n={n} k={k} lambda={lambda}")
                        });
                    }
                }
            }
            t
        })
        .reduce(Tally::new, Tally::merge)
}

fn hoeffding_dominance() -> Tally {
    let mut t = Tally::new();
    for i in 0..=1000 {
        let z = i as f64 / 1000.0;
        for j in 1..=200 {
            let eps = j as f64 / 201.0;
            for mu in [z - eps, z + eps] {
                let v = m_b(z, mu).unwrap();
                t.check(v <= -2.0 * eps * eps + HOEFFDING_ABS_SLACK, || {
                    format!("M_B({z},{mu}) = {v}")
                });
            }
        }
    }
    t
}

fn inverse_exponent_lemmas() -> Tally {
    let mut t = Tally::new();
    for j in 1..100 {
        let eps = j as f64 / 100.0;
        let f = |z: f64| m_i(z, z / (1.0 + eps)).unwrap();
        let mut prev = f(0.0005);
        for i in 1..1000 {
            let z = 0.0005 + i as f64 * 0.000999;
            let cur = f(z);
            t.check(
                cur <= prev + MONOTONE_REL_SLACK * prev.abs().max(1.0),
                || format!("M_I increasing at z={z} eps={eps}"),
            );
            prev = cur;
        }
        for i in 1..1000 {
            let z = (1.0 - eps) * i as f64 / 1000.0;
            let up = f(z);
            let down = m_i(z, z / (1.0 - eps)).unwrap();
            t.check(up > down, || format!("M_I comparison z={z} eps={eps}"));
        }
    }
    t
}

fn alphas() -> Vec<f64> {
    (0..30)
        .map(|i| 1e-6 * (0.9e6f64).powf(i as f64 / 29.0))
        .collect()
}

fn binomial_quantile_lemmas() -> Tally {
    let alphas = alphas();
    (1u64..=50)
        .into_par_iter()
        .map(|n| {
            let mut t = Tally::new();
            for j in 1..50 {
                let p = j as f64 / 50.0;
                let rows: Vec<(f64, f64, f64)> = (0..=n)
                    .map(|k| {
                        (
                            binomial_pmf(k, n, p),
                            s_b(0, k as i64, n as i64, p).unwrap(),
                            s_b(k as i64, n as i64, n as i64, p).unwrap(),
                        )
                    })
                    .collect();
                for &a in &alphas {
                    let lower: f64 = rows.iter().filter(|r| r.1 <= a).map(|r| r.0).sum();
                    let upper: f64 = rows.iter().filter(|r| r.2 <= a).map(|r| r.0).sum();
                    t.check(lower <= a * (1.0 + QUANTILE_REL_SLACK), || {
                        format!("lower quantile n={n} p={p} a={a}")
                    });
                    t.check(upper <= a * (1.0 + QUANTILE_REL_SLACK), || {
                        format!("upper quantile n={n} p={p} a={a}")
                    });
                }
            }
            t
        })
        .reduce(Tally::new, Tally::merge)
}

fn inverse_quantile_lemmas() -> Tally {
    let alphas = alphas();
    (1u64..=50)
        .into_par_iter()
        .map(|gamma| {
            let mut t = Tally::new();
            for j in 1..20 {
                let p = j as f64 / 20.0;
                // (pmf, S_B(0, gamma, m, p), S_B(gamma, m, m, p)) until the
                // remaining mass is negligible against the smallest alpha
                let mut rows = Vec::new();
                let mut m = gamma;
                let rest = loop {
                    let tail = s_b(0, gamma as i64 - 1, m as i64, p).unwrap();
                    if tail < alphas[0] * 1e-14 {
                        break tail;
                    }
                    rows.push((
                        negative_binomial_trials_pmf(m, gamma, p),
                        s_b(0, gamma as i64, m as i64, p).unwrap(),
                        s_b(gamma as i64, m as i64, m as i64, p).unwrap(),
                    ));
                    m += 1;
                };
                for &a in &alphas {
                    let lower: f64 =
                        rows.iter().filter(|r| r.1 <= a).map(|r| r.0).sum::<f64>() + rest;
                    let upper: f64 =
                        rows.iter().filter(|r| r.2 <= a).map(|r| r.0).sum::<f64>() + rest;
                    t.check(lower <= a * (1.0 + QUANTILE_REL_SLACK), || {
                        format!("inverse lower gamma={gamma} p={p} a={a}")
                    });
                    t.check(upper <= a * (1.0 + QUANTILE_REL_SLACK), || {
                        format!("inverse upper gamma={gamma} p={p} a={a}")
                    });
                }
            }
            t
        })
        .reduce(Tally::new, Tally::merge)
}

fn lemma_suite() -> Outcome {
    let parts = [
        ("chernoff-binomial", chernoff_binomial()),
        ("chernoff-poisson", chernoff_poisson()),
        ("hoeffding", hoeffding_dominance()),
        ("inverse-exponent", inverse_exponent_lemmas()),
        ("binomial-quantile", binomial_quantile_lemmas()),
        ("inverse-quantile", inverse_quantile_lemmas()),
    ];
    let mut summary = Vec::new();
    let mut total = 0;
    let mut bad = Vec::new();
    for (name, t) in &parts {
        summary.push(format!("{name} {}", t.cases));
        total += t.cases;
        if !t.violations.is_empty() {
            bad.push(format!(
                "{name}: {} violations, e.g. {}",
                t.violations.len(),
                t.violations[0]
            ));
        }
    }
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    if total < MIN_LEMMA_CASES {
        return Err(format!("only {total} cases"));
    }
    Ok(format!(
        "{total} cases, 0 violations [{}]",
        summary.join(", ")
    ))
}

// ---------------------------------------------------------------------------
// 3. Final-stage certainty
// ---------------------------------------------------------------------------

fn sample_goals(mode: Mode, count: usize, seed: u64) -> Vec<(PrecisionGoal, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let delta = (rng.random::<f64>() * (0.5f64 / 0.001).ln()).exp() * 0.001;
        let rho = rng.random_range(0.1..1.5);
        let goal = match mode {
            Mode::AbsoluteBinomial => {
                PrecisionGoal::new(mode, rng.random_range(0.02..0.49), 0.0, delta)
            }
            Mode::RelativeBinomialInverse => {
                PrecisionGoal::new(mode, 0.0, rng.random_range(0.1..0.9), delta)
            }
            Mode::MixedBinomial => {
                let ea = rng.random_range(0.01..0.3);
                let lower = 70.0 * ea / (35.0 - 24.0 * ea);
                PrecisionGoal::new(
                    mode,
                    ea,
                    rng.random_range(lower..0.95f64.max(lower + 1e-6)),
                    delta,
                )
            }
            _ => PrecisionGoal::new(
                mode,
                rng.random_range(0.05..0.9),
                rng.random_range(0.05..0.9),
                delta,
            ),
        };
        if let Ok(g) = goal {
            out.push((g, rho));
        }
    }
    out
}

fn final_stage_certainty() -> Outcome {
    let modes = [
        (Mode::AbsoluteBinomial, 11),
        (Mode::RelativeBinomialInverse, 12),
        (Mode::MixedBinomial, 13),
        (Mode::MixedPoisson, 14),
    ];
    let mut checked = 0usize;
    let mut values = 0u64;
    for (mode, seed) in modes {
        for (goal, rho) in sample_goals(mode, PLANS_PER_MODE, seed) {
            let plan = plan::build(&goal, None, Some(rho)).map_err(|e| format!("{mode}: {e}"))?;
            let stage = plan.stage(plan.stages.len()).unwrap();
            let crit = goal.criterion();
            let (lo, hi) = match mode {
                Mode::RelativeBinomialInverse => (stage.size, INVERSE_SAMPLE_FACTOR * stage.size),
                Mode::MixedPoisson => (0, POISSON_COUNT_FACTOR * stage.size),
                _ => (0, stage.size),
            };
            let bad = (lo..=hi).into_par_iter().find_any(|&v| {
                let obs = if mode.is_inverse() {
                    StageObservation::new(stage.index, v, stage.size)
                } else {
                    StageObservation::new(stage.index, stage.size, v)
                };
                !decide(mode, crit, &obs, stage.budget)
            });
            if let Some(v) = bad {
                return Err(format!(
                    "{mode} {goal:?} rho {rho}: last stage continues at statistic {v}"
                ));
            }
            checked += 1;
            values += hi - lo + 1;
        }
    }
    Ok(format!(
        "{checked} plans, {values} last-stage values (inverse n <= {INVERSE_SAMPLE_FACTOR} gamma_s, Poisson K <= {POISSON_COUNT_FACTOR} n_s)"
    ))
}

// ---------------------------------------------------------------------------
// 4. Coverage guarantee
// ---------------------------------------------------------------------------

fn percent_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

fn reference_abs_plan() -> StageSchedule {
    let g = PrecisionGoal::new(Mode::AbsoluteBinomial, 0.1, 0.0, 0.05).unwrap();
    plan::build_abs_binomial(&g, None, 0.5).unwrap()
}

fn q_union(plan: &StageSchedule) -> Vec<f64> {
    let (plus, minus) = build_q_grids(plan, plan.goal.eps_a).unwrap();
    let mut pts: Vec<f64> = plus.points.into_iter().chain(minus.points).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn coverage_guarantee() -> Outcome {
    let mut notes = Vec::new();

    let abs = reference_abs_plan();
    let mut grid = percent_grid();
    grid.extend(q_union(&abs));
    let reps = sweep(&abs, &grid, 200).map_err(|e| e.to_string())?;
    let worst = reps
        .iter()
        .min_by(|a, b| a.coverage.total_cmp(&b.coverage))
        .unwrap();
    if worst.coverage < 0.95 {
        return Err(format!(
            "abs-binomial coverage {} at p = {}",
            worst.coverage, worst.theta
        ));
    }
    notes.push(format!("abs {} pts min {:.6}", grid.len(), worst.coverage));

    let g = PrecisionGoal::new(Mode::MixedBinomial, 0.05, 0.2, 0.05).unwrap();
    let mixed = plan::build_mixed_binomial(&g, None, 0.5).unwrap();
    let mut grid = percent_grid();
    grid.extend(lattice_points(&mixed));
    let reps = sweep(&mixed, &grid, 200).map_err(|e| e.to_string())?;
    let worst = reps
        .iter()
        .min_by(|a, b| a.coverage.total_cmp(&b.coverage))
        .unwrap();
    if worst.coverage < 0.95 {
        return Err(format!(
            "mixed-binomial coverage {} at p = {}",
            worst.coverage, worst.theta
        ));
    }
    notes.push(format!(
        "mixed {} pts min {:.6}",
        grid.len(),
        worst.coverage
    ));

    let g = PrecisionGoal::new(Mode::MixedPoisson, 0.1, 0.1, 0.05).unwrap();
    let poisson = plan::build_mixed_poisson(&g, None, 0.5).unwrap();
    let grid: Vec<f64> = (0..POISSON_GRID_POINTS)
        .map(|i| 0.1 * 100f64.powf(i as f64 / (POISSON_GRID_POINTS - 1) as f64))
        .collect();
    let reps = sweep(&poisson, &grid, 200).map_err(|e| e.to_string())?;
    let worst = reps
        .iter()
        .min_by(|a, b| a.coverage.total_cmp(&b.coverage))
        .unwrap();
    let trunc = reps.iter().map(|r| r.truncation_bound).fold(0.0, f64::max);
    if worst.coverage < 0.95 {
        return Err(format!(
            "mixed-poisson coverage {} at lambda = {}",
            worst.coverage, worst.theta
        ));
    }
    if trunc >= POISSON_TRUNCATION_LIMIT {
        return Err(format!("mixed-poisson truncation bound {trunc:e}"));
    }
    notes.push(format!(
        "poisson {} pts min {:.6} trunc {trunc:.1e}",
        grid.len(),
        worst.coverage
    ));
    Ok(notes.join(", "))
}

// ---------------------------------------------------------------------------
// 5. Per-stage budget
// ---------------------------------------------------------------------------

fn per_stage_budget() -> Outcome {
    let plan = reference_abs_plan();
    let budget = plan.zeta * plan.goal.delta;
    let grid = q_union(&plan);
    let reps = sweep(&plan, &grid, 200).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for r in &reps {
        for (l, (&lo, &up)) in r.lower_escape.iter().zip(&r.upper_escape).enumerate() {
            checks += 2;
            let m = lo.max(up) + r.truncation_bound;
            worst = worst.max(m);
            if m > budget {
                return Err(format!(
                    "stage {} escape {m:e} > {budget:e} at p = {}",
                    l + 1,
                    r.theta
                ));
            }
        }
    }
    Ok(format!(
        "{} grid points, {checks} one-sided stage masses, max {worst:.3e} <= {budget:.3e}",
        grid.len()
    ))
}

// ---------------------------------------------------------------------------
// 6. Oracle cross-validation
// ---------------------------------------------------------------------------

fn tiny_plans() -> Vec<StageSchedule> {
    let pool = [1u64, 2, 3, 5, 8, 12];
    let goals = [
        PrecisionGoal::new(Mode::AbsoluteBinomial, 0.1, 0.0, 0.2).unwrap(),
        PrecisionGoal::new(Mode::AbsoluteBinomial, 0.25, 0.0, 0.3).unwrap(),
        PrecisionGoal::new(Mode::MixedBinomial, 0.1, 0.3, 0.2).unwrap(),
    ];
    let mut plans = Vec::new();
    for mask in 1u32..(1 << pool.len()) {
        let stages: Vec<u64> = (0..pool.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| pool[i])
            .collect();
        for g in goals {
            for zeta in [0.1, 0.5] {
                plans.push(StageSchedule::with_stages(g, stages.clone(), zeta).unwrap());
            }
        }
    }
    plans
}

fn enumeration_agreement() -> Result<usize, String> {
    let thetas = [0.05, 0.2, 0.375, 0.5, 0.7, 0.95];
    let plans = tiny_plans();
    let bad = plans.par_iter().find_map_any(|plan| {
        for &t in &thetas {
            let dp = exact_coverage_fixed(plan, t).unwrap();
            let bf = brute_force_enumerate(plan, t).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() <= ENUMERATION_TOL;
            let ok = close(dp.coverage, bf.coverage)
                && close(dp.asn / 12.0, bf.asn / 12.0)
                && dp.stage_mass.len() <= bf.stage_mass.len()
                && bf
                    .stage_mass
                    .iter()
                    .enumerate()
                    .all(|(i, &m)| close(m, dp.stage_mass.get(i).copied().unwrap_or(0.0)));
            if !ok {
                return Some(format!(
                    "stages {:?} p = {t}: {} vs {}",
                    plan.stages, dp.coverage, bf.coverage
                ));
            }
        }
        None
    });
    match bad {
        Some(msg) => Err(msg),
        None => Ok(plans.len() * thetas.len()),
    }
}

fn mc_configs() -> Vec<(PrecisionGoal, f64)> {
    let g = |m, a, r| PrecisionGoal::new(m, a, r, 0.05).unwrap();
    vec![
        (g(Mode::AbsoluteBinomial, 0.1, 0.0), 0.5),
        (g(Mode::AbsoluteBinomial, 0.1, 0.0), 0.13),
        (g(Mode::RelativeBinomialInverse, 0.0, 0.2), 0.3),
        (g(Mode::RelativeBinomialInverse, 0.0, 0.2), 0.7),
        (g(Mode::RelativeBinomialOpen, 0.0, 0.2), 0.3),
        (g(Mode::MixedBinomial, 0.05, 0.2), 0.25),
        (g(Mode::MixedBinomial, 0.05, 0.2), 0.6),
        (g(Mode::MixedPoisson, 0.1, 0.1), 1.0),
        (g(Mode::MixedPoisson, 0.1, 0.1), 5.0),
        (g(Mode::AbsolutePoissonOpen, 0.2, 0.0), 1.0),
        (g(Mode::RelativePoissonOpen, 0.0, 0.2), 2.0),
    ]
}

fn cross_validation() -> Outcome {
    let pairs = enumeration_agreement()?;
    let configs = mc_configs();
    for (goal, theta) in &configs {
        let plan = plan::build(goal, None, None).map_err(|e| e.to_string())?;
        let exact = exact_coverage(&plan, *theta, 200).map_err(|e| e.to_string())?;
        let mc = simulate_coverage(&plan, *theta, MC_TRIALS, MC_SEED).map_err(|e| e.to_string())?;
        // standard error of the estimator under the exact coverage
        let se = (exact.coverage * (1.0 - exact.coverage) / MC_TRIALS as f64).sqrt();
        let hi = exact.coverage + exact.truncation_bound;
        let cov_ok = mc.coverage_hat >= exact.coverage - MC_SIGMAS * se
            && mc.coverage_hat <= hi + MC_SIGMAS * se;
        let asn_ok = (mc.asn_hat - exact.asn).abs() <= MC_SIGMAS * mc.asn_stderr + 1e-9 * exact.asn;
        if !(cov_ok && asn_ok && mc.failures == 0) {
            return Err(format!(
                "{} at {theta}: MC coverage {} asn {} (se {}), exact {} asn {} trunc {:e}, failures {}",
                goal.mode, mc.coverage_hat, mc.asn_hat, mc.asn_stderr, exact.coverage, exact.asn, exact.truncation_bound, mc.failures
            ));
        }
    }
    Ok(format!(
        "{pairs} tiny plan/parameter pairs within {ENUMERATION_TOL:e}; {} Monte Carlo configs within {MC_SIGMAS} se",
        configs.len()
    ))
}

// ---------------------------------------------------------------------------
// 7. Tuner soundness
// ---------------------------------------------------------------------------

fn tuner_soundness() -> Outcome {
    let goals = [
        PrecisionGoal::new(Mode::AbsoluteBinomial, 0.1, 0.0, 0.05).unwrap(),
        PrecisionGoal::new(Mode::AbsoluteBinomial, 0.05, 0.0, 0.1).unwrap(),
        PrecisionGoal::new(Mode::MixedBinomial, 0.1, 0.4, 0.1).unwrap(),
        PrecisionGoal::new(Mode::MixedPoisson, 0.1, 0.1, 0.05).unwrap(),
    ];
    let mut notes = Vec::new();
    for g in goals {
        let source = GridSource::default_for(g.mode);
        let a = tune_zeta(&g, None, &source, TUNE_TOL).map_err(|e| format!("{}: {e}", g.mode))?;
        let b = tune_zeta(&g, None, &source, TUNE_TOL).map_err(|e| format!("{}: {e}", g.mode))?;
        let min = a
            .certificate
            .iter()
            .map(|r| r.coverage)
            .fold(f64::INFINITY, f64::min);
        if a.zeta_star < a.default_zeta {
            return Err(format!(
                "{}: zeta* {} below default {}",
                g.mode, a.zeta_star, a.default_zeta
            ));
        }
        if min < 1.0 - g.delta {
            return Err(format!("{}: certificate min coverage {min}", g.mode));
        }
        if a.zeta_star.to_bits() != b.zeta_star.to_bits() {
            return Err(format!(
                "{}: rerun gave {} then {}",
                g.mode, a.zeta_star, b.zeta_star
            ));
        }
        notes.push(format!(
            "{} zeta* {:.5} (default {:.5})",
            g.mode, a.zeta_star, a.default_zeta
        ));
    }
    Ok(notes.join(", "))
}

// ---------------------------------------------------------------------------
// 8. Determinism of `simulate`
// ---------------------------------------------------------------------------

fn simulate_determinism() -> Outcome {
    let args = [
        "simulate",
        "--mode",
        "mixed-poisson",
        "--eps-a",
        "0.1",
        "--eps-r",
        "0.1",
        "--delta",
        "0.05",
        "--grid",
        "0.5,1,3",
        "--trials",
        "20000",
        "--seed",
        "7",
    ];
    let mut outputs = Vec::new();
    for threads in ["1", "2", "5", "16"] {
        let out = Command::new(env!("CARGO_BIN_EXE_seqest"))
            .args(args)
            .env("SEQEST_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        outputs.push(out.stdout);
    }
    if outputs.windows(2).all(|w| w[0] == w[1]) {
        Ok(format!(
            "4 worker counts, {} identical bytes",
            outputs[0].len()
        ))
    } else {
        Err("reports differ between worker counts".into())
    }
}
