use std::path::Path;

use seqest_core::coverage::{sweep, CoverageReport};
use seqest_core::plan::{self, SCHEMA_VERSION};
use seqest_core::sim::{sample_stream, simulate_coverage, MonteCarloReport, StreamKind};
use seqest_core::stopping::{run, EstimationResult, RunLimits};
use seqest_core::tuner::{tune_zeta, GridSource, Provenance, TuningStep, VerificationGrid};
use seqest_core::{Mode, PrecisionGoal, StageSchedule};
use serde::Serialize;
use serde_json::Value;

use crate::args::{
    Command, DesignArgs, EvaluateArgs, Format, GoalArgs, PlanSource, RunArgs, SimulateArgs,
    TuneArgs,
};
use crate::error::{CliError, Result};
use crate::grid::parse_grid;
use crate::observations::parse_observations;

/// Rendered command output and where it goes.
pub struct Rendered {
    pub text: String,
    pub path: Option<std::path::PathBuf>,
}

pub fn dispatch(command: Command) -> Result<Rendered> {
    match command {
        Command::Design(a) => design(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Simulate(a) => simulate(a),
        Command::Tune(a) => tune(a),
        Command::Run(a) => run_once(a),
    }
}

pub fn goal_from_args(args: &GoalArgs) -> Result<PrecisionGoal> {
    let mode = args
        .mode
        .ok_or_else(|| CliError::Usage("--mode is required without --plan".into()))?;
    let delta = args
        .delta
        .ok_or_else(|| CliError::Usage("--delta is required without --plan".into()))?;
    let goal = match (args.eps, args.eps_a, args.eps_r) {
        (Some(eps), None, None) => PrecisionGoal::single(mode, eps, delta)?,
        (None, a, r) if a.is_some() || r.is_some() => {
            PrecisionGoal::new(mode, a.unwrap_or(0.0), r.unwrap_or(0.0), delta)?
        }
        (None, _, _) => return Err(CliError::Usage("give --eps, or --eps-a/--eps-r".into())),
        _ => {
            return Err(CliError::Usage(
                "--eps cannot be combined with --eps-a/--eps-r".into(),
            ))
        }
    };
    Ok(goal)
}

pub fn plan_from_goal(args: &GoalArgs) -> Result<StageSchedule> {
    let goal = goal_from_args(args)?;
    let plan = if goal.mode.is_open_ended() {
        plan::build_open_ended(&goal, args.zeta, args.tau, args.n1, args.ratio)?
    } else {
        plan::build(&goal, args.zeta, Some(args.rho))?
    };
    Ok(plan)
}

/// Loads a plan file, checking an embedded `schedule_hash` if present.
pub fn load_plan(path: &Path) -> Result<StageSchedule> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let plan = StageSchedule::from_json(&text)?;
    let doc: Value = serde_json::from_str(&text)?;
    if let Some(recorded) = doc.get("schedule_hash").and_then(Value::as_str) {
        let actual = plan.schedule_hash();
        if recorded != actual {
            return Err(CliError::Usage(format!(
                "{}: schedule_hash {recorded} does not match the schedule ({actual})",
                path.display()
            )));
        }
    }
    Ok(plan)
}

fn resolve_plan(source: &PlanSource) -> Result<StageSchedule> {
    match &source.plan {
        Some(path) => load_plan(path),
        None => plan_from_goal(&source.goal),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(headers.to_vec());
    for row in rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

fn design_document(plan: &StageSchedule) -> Result<String> {
    let mut doc: Value = serde_json::from_str(&plan.to_json())?;
    doc["schedule_hash"] = Value::String(plan.schedule_hash());
    json(&doc)
}

fn design(args: DesignArgs) -> Result<Rendered> {
    let plan = plan_from_goal(&args.goal)?;
    let text = match args.out.format {
        Format::Json => design_document(&plan)?,
        Format::Csv => {
            let mut out = String::from("stage,size,budget\n");
            for s in plan_stages_preview(&plan) {
                out += &format!("{},{},{}\n", s.index, s.size, s.budget);
            }
            out
        }
        Format::Table => {
            let mut out = format!(
                "mode {}  zeta {}  tau {}  hash {}\n",
                plan.mode(),
                plan.zeta,
                plan.tau,
                plan.schedule_hash()
            );
            let rows: Vec<Vec<String>> = plan_stages_preview(&plan)
                .map(|s| {
                    vec![
                        s.index.to_string(),
                        s.size.to_string(),
                        format!("{:.6e}", s.budget),
                    ]
                })
                .collect();
            out += &table(&["stage", "size", "budget"], &rows);
            if !plan.is_fixed() {
                out += "(open-ended ladder, first stages shown)\n";
            }
            out
        }
    };
    Ok(Rendered {
        text,
        path: args.out.output,
    })
}

/// Stages to list: all of a fixed plan, the first 20 of an open ladder.
fn plan_stages_preview(plan: &StageSchedule) -> impl Iterator<Item = seqest_core::Stage> + '_ {
    plan.stages()
        .take(if plan.is_fixed() { usize::MAX } else { 20 })
}

#[derive(Serialize)]
struct EvaluateReport<'a> {
    schema_version: u32,
    schedule_hash: String,
    mode: Mode,
    min_coverage: f64,
    max_truncation_bound: f64,
    reports: &'a [CoverageReport],
}

fn evaluate(args: EvaluateArgs) -> Result<Rendered> {
    let plan = resolve_plan(&args.source)?;
    let grid = parse_grid(&args.grid)?;
    let reports = sweep(&plan, &grid, args.stage_cap)?;
    let min_coverage = reports
        .iter()
        .map(|r| r.coverage)
        .fold(f64::INFINITY, f64::min);
    let max_trunc = reports
        .iter()
        .map(|r| r.truncation_bound)
        .fold(0.0, f64::max);
    let stage_columns = reports
        .iter()
        .map(|r| r.stage_mass.len())
        .max()
        .unwrap_or(0);
    let text = match args.out.format {
        Format::Json => json(&EvaluateReport {
            schema_version: SCHEMA_VERSION,
            schedule_hash: plan.schedule_hash(),
            mode: plan.mode(),
            min_coverage,
            max_truncation_bound: max_trunc,
            reports: &reports,
        })?,
        Format::Csv => {
            let mut out = CoverageReport::csv_header(stage_columns) + "\n";
            for r in &reports {
                out += &(r.csv_row(stage_columns) + "\n");
            }
            out
        }
        Format::Table => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        format!("{}", r.theta),
                        fmt(r.coverage),
                        format!("{:.3}", r.asn),
                        format!("{:.1e}", r.truncation_bound),
                    ]
                })
                .collect();
            let mut out = table(&["theta", "coverage", "asn", "truncation"], &rows);
            out += &format!(
                "min coverage {}  target {}\n",
                fmt(min_coverage),
                fmt(1.0 - plan.goal.delta)
            );
            out
        }
    };
    Ok(Rendered {
        text,
        path: args.out.output,
    })
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    schema_version: u32,
    schedule_hash: String,
    mode: Mode,
    reports: &'a [MonteCarloReport],
}

fn simulate(args: SimulateArgs) -> Result<Rendered> {
    let plan = resolve_plan(&args.source)?;
    let grid = parse_grid(&args.grid)?;
    let reports: Vec<MonteCarloReport> = grid
        .iter()
        .map(|&theta| simulate_coverage(&plan, theta, args.trials, args.seed))
        .collect::<Result<_, _>>()?;
    let text = match args.out.format {
        Format::Json => json(&SimulateReport {
            schema_version: SCHEMA_VERSION,
            schedule_hash: plan.schedule_hash(),
            mode: plan.mode(),
            reports: &reports,
        })?,
        Format::Csv => {
            let mut out = format!("{}\n", MonteCarloReport::CSV_HEADER);
            for r in &reports {
                out += &(r.csv_row() + "\n");
            }
            out
        }
        Format::Table => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        format!("{}", r.theta),
                        fmt(r.coverage_hat),
                        fmt(r.coverage_stderr),
                        format!("{:.3}", r.asn_hat),
                        r.failures.to_string(),
                    ]
                })
                .collect();
            table(&["theta", "coverage", "stderr", "asn", "failures"], &rows)
        }
    };
    Ok(Rendered {
        text,
        path: args.out.output,
    })
}

#[derive(Serialize)]
struct TuneReport<'a> {
    schema_version: u32,
    mode: Mode,
    zeta_star: f64,
    default_zeta: f64,
    grid: &'static str,
    grid_exact: bool,
    min_coverage: f64,
    schedule_hash: String,
    plan: &'a StageSchedule,
    certificate: &'a [CoverageReport],
    transcript: &'a [TuningStep],
}

fn tune(args: TuneArgs) -> Result<Rendered> {
    let goal = goal_from_args(&args.goal)?;
    if goal.mode.is_open_ended() {
        return Err(CliError::Usage(format!(
            "tuning supports the fixed-ladder schemes; {} is open-ended",
            goal.mode
        )));
    }
    let source = match &args.grid {
        Some(spec) => GridSource::Fixed(VerificationGrid::new(
            goal.mode,
            parse_grid(spec)?,
            Provenance::UserSupplied,
        )?),
        None => GridSource::default_for(goal.mode),
    };
    let grid_name = match source {
        GridSource::QLattice => "lattice",
        GridSource::UniformLattice(_) => "uniform-plus-lattice",
        GridSource::Fixed(_) if args.grid.is_some() => "user-supplied",
        GridSource::Fixed(_) => "log-spaced",
    };
    let out = tune_zeta(&goal, Some(args.goal.rho), &source, args.tol)?;
    if let Some(path) = &args.transcript {
        std::fs::write(path, json(&out.transcript)?).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    let min_coverage = out
        .certificate
        .iter()
        .map(|r| r.coverage)
        .fold(f64::INFINITY, f64::min);
    let text = match args.out.format {
        Format::Json => json(&TuneReport {
            schema_version: SCHEMA_VERSION,
            mode: goal.mode,
            zeta_star: out.zeta_star,
            default_zeta: out.default_zeta,
            grid: grid_name,
            grid_exact: out.grid_exact,
            min_coverage,
            schedule_hash: out.plan.schedule_hash(),
            plan: &out.plan,
            certificate: &out.certificate,
            transcript: &out.transcript,
        })?,
        Format::Csv => {
            let cols = out
                .certificate
                .iter()
                .map(|r| r.stage_mass.len())
                .max()
                .unwrap_or(0);
            let mut s = CoverageReport::csv_header(cols) + "\n";
            for r in &out.certificate {
                s += &(r.csv_row(cols) + "\n");
            }
            s
        }
        Format::Table => {
            let rows: Vec<Vec<String>> = out
                .transcript
                .iter()
                .map(|s| {
                    vec![
                        format!("{}", s.zeta),
                        fmt(s.min_coverage),
                        s.feasible.to_string(),
                    ]
                })
                .collect();
            let mut s = table(&["zeta", "min_coverage", "feasible"], &rows);
            s += &format!(
                "zeta* {}  (default {})  min coverage {}  grid {} ({} points)\n",
                out.zeta_star,
                out.default_zeta,
                fmt(min_coverage),
                grid_name,
                out.certificate.len()
            );
            s
        }
    };
    Ok(Rendered {
        text,
        path: args.out.output,
    })
}

#[derive(Serialize)]
struct RunReport<'a> {
    schema_version: u32,
    schedule_hash: String,
    mode: Mode,
    source: String,
    result: &'a EstimationResult,
}

fn run_once(args: RunArgs) -> Result<Rendered> {
    let plan = resolve_plan(&args.source)?;
    let limits = RunLimits {
        draw_cap: args.draw_cap,
        stage_cap: args.stage_cap,
    };
    let binary = !plan.mode().is_poisson();
    let (result, source) = match (&args.data, args.theta) {
        (Some(path), _) => {
            let obs = parse_observations(path, binary)?;
            (
                run(&plan, &mut obs.into_iter(), limits)?,
                path.display().to_string(),
            )
        }
        (None, Some(theta)) => {
            let seed = args.seed.unwrap_or(0);
            let kind = StreamKind::for_plan(&plan, theta);
            let mut stream = sample_stream(kind, seed, 0)?;
            (
                run(&plan, &mut stream, limits)?,
                format!("synthetic theta={theta} seed={seed}"),
            )
        }
        (None, None) => return Err(CliError::Usage("give --data or --theta".into())),
    };
    let text = match args.out.format {
        Format::Json => json(&RunReport {
            schema_version: SCHEMA_VERSION,
            schedule_hash: plan.schedule_hash(),
            mode: plan.mode(),
            source,
            result: &result,
        })?,
        Format::Csv => {
            let mut out = String::from("stage,samples,sum,estimate,budget,decision\n");
            for r in &result.trail {
                out += &format!(
                    "{},{},{},{},{},{}\n",
                    r.stage, r.samples, r.sum, r.estimate, r.budget, r.decision
                );
            }
            out
        }
        Format::Table => {
            let rows: Vec<Vec<String>> = result
                .trail
                .iter()
                .map(|r| {
                    vec![
                        r.stage.to_string(),
                        r.samples.to_string(),
                        r.sum.to_string(),
                        fmt(r.estimate),
                        r.decision.to_string(),
                    ]
                })
                .collect();
            let mut out = table(&["stage", "samples", "sum", "estimate", "stop"], &rows);
            out += &format!(
                "estimate {}  after {} samples (stage {})\n",
                result.estimate, result.total_samples, result.stop_stage
            );
            out
        }
    };
    Ok(Rendered {
        text,
        path: args.out.output,
    })
}
