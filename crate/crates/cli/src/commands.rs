//! The `simulate`, `lasso` and `cover` subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use torus_lasso::{
    cover, euler_trajectory, find_lasso, FailureKind, LambdaZeroMode, LassoError, LassoOutcome, LassoRun,
    LassoSettings, WorkCounters,
};

use crate::export::{period_balls, to_json, trajectory_csv, tube_csv, LassoSummary, Status};
use crate::scenario::ScenarioFile;
use crate::CliError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NO_INCLUSION: u8 = 2;
pub const EXIT_BLOW_UP: u8 = 3;
pub const EXIT_STEP_ENCLOSURE: u8 = 4;

/// Command-line values that take precedence over the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub lambda_mode: Option<LambdaZeroMode>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, s: &mut ScenarioFile) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(mode) = self.lambda_mode {
            s.propagation.lambda_mode = mode;
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(CliError::Scenario("workers must be at least 1".into()));
            }
            s.workers = Some(w);
        }
        if let Some(out) = &self.out {
            s.output = Some(out.clone());
        }
        Ok(())
    }
}

fn output_path(s: &ScenarioFile) -> Result<&Path, CliError> {
    s.output.as_deref().ok_or_else(|| CliError::Scenario("no output path: pass --out or set \"output\"".into()))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// Plain Euler centres, one row per grid time.
pub fn cmd_simulate(s: &ScenarioFile) -> Result<u8, CliError> {
    let out = output_path(s)?;
    let sys = s.build_system()?;
    let steps = s.steps.unwrap_or(s.period_steps);
    let start = Instant::now();
    let traj = euler_trajectory(&sys, &s.x0, s.tau, steps).map_err(|e| CliError::Run(e.to_string()))?;
    write(out, &trajectory_csv(s.tau, &traj))?;
    eprintln!("simulate: {steps} steps in {:.3} s", start.elapsed().as_secs_f64());
    Ok(EXIT_OK)
}

fn failure_summary(
    s: &ScenarioFile,
    system: &str,
    source: &[f64],
    status: Status,
    message: String,
    tube: Option<&torus_lasso::Tube>,
    work: WorkCounters,
) -> LassoSummary {
    LassoSummary {
        status,
        message: Some(message),
        system: system.to_string(),
        source: source.to_vec(),
        eps: s.eps,
        tau: s.tau,
        period_steps: s.period_steps,
        period: s.tau * s.period_steps as f64,
        i0: None,
        steps: tube.map_or(0, |t| t.steps()),
        periods: tube.map_or_else(Vec::new, |t| period_balls(t, s.period_steps)),
        blowup_step: tube.and_then(|t| t.blowup),
        tube_file: None,
        work,
    }
}

fn status_of(kind: FailureKind) -> Status {
    match kind {
        FailureKind::NoInclusion => Status::NoInclusion,
        FailureKind::BlowUp => Status::BlowUp,
        FailureKind::StepEnclosure => Status::StepEnclosure,
        FailureKind::Singular => Status::Singular,
        FailureKind::Error => Status::Error,
    }
}

fn exit_of(status: Status) -> u8 {
    match status {
        Status::Certified => EXIT_OK,
        Status::NoInclusion => EXIT_NO_INCLUSION,
        Status::BlowUp => EXIT_BLOW_UP,
        Status::StepEnclosure => EXIT_STEP_ENCLOSURE,
        Status::Singular | Status::Error => EXIT_ERROR,
    }
}

/// Summary and optional tube of one `find_lasso` call.
fn summarize(
    s: &ScenarioFile,
    system: &str,
    source: &[f64],
    result: Result<LassoRun, LassoError>,
) -> (LassoSummary, Option<torus_lasso::Tube>) {
    match result {
        Ok(LassoRun { outcome: LassoOutcome::Certified(lasso), work }) => {
            let summary = LassoSummary::certified(system, &lasso, s.tau, work);
            (summary, Some(lasso.tube))
        }
        Ok(LassoRun { outcome: LassoOutcome::NoInclusion(tube), work }) => {
            let msg = format!("no inclusion within {} periods", s.max_periods);
            (failure_summary(s, system, source, Status::NoInclusion, msg, Some(&tube), work), Some(tube))
        }
        Ok(LassoRun { outcome: LassoOutcome::BlowUp { step, tube }, work }) => {
            let msg = format!("bound blow-up at step {step}");
            (failure_summary(s, system, source, Status::BlowUp, msg, Some(&tube), work), Some(tube))
        }
        Ok(LassoRun { outcome: LassoOutcome::Stopped { error, tube }, work }) => {
            let status = status_of(FailureKind::of_propagation(&error));
            (failure_summary(s, system, source, status, error.to_string(), Some(&tube), work), Some(tube))
        }
        Err(e) => {
            let status = status_of(FailureKind::of_error(&e));
            (failure_summary(s, system, source, status, e.to_string(), None, WorkCounters::default()), None)
        }
    }
}

/// Lasso search from `x0`; writes `tube.csv` and `summary.json` into the output directory.
pub fn cmd_lasso(s: &ScenarioFile) -> Result<u8, CliError> {
    let dir = output_path(s)?;
    let sys = s.build_system()?;
    let settings = s.lasso_settings();
    create_dir(dir)?;
    let start = Instant::now();
    let result = find_lasso(&sys, &s.x0, &settings);
    let elapsed = start.elapsed().as_secs_f64();
    let (mut summary, tube) = summarize(s, &sys.name, &s.x0, result);
    if let Some(tube) = &tube {
        write(&dir.join("tube.csv"), &tube_csv(tube))?;
        summary.tube_file = Some("tube.csv".into());
    }
    write(&dir.join("summary.json"), &to_json(&summary)?)?;
    match summary.i0 {
        Some(i0) => eprintln!("lasso: inclusion at i0 = {i0} ({elapsed:.3} s)"),
        None => eprintln!("lasso: {} ({elapsed:.3} s)", summary.message.as_deref().unwrap_or("failed")),
    }
    Ok(exit_of(summary.status))
}

#[derive(Debug, Serialize)]
struct CoverEntry {
    index: usize,
    #[serde(flatten)]
    summary: LassoSummary,
}

#[derive(Debug, Serialize)]
struct CoverReportFile {
    system: String,
    params: std::collections::BTreeMap<String, f64>,
    settings: LassoSettings,
    sources: usize,
    certified: usize,
    failed: usize,
    lassos: Vec<CoverEntry>,
    failures: Vec<CoverEntry>,
}

/// Worker count: flag or environment, then scenario, then available parallelism; capped by source count.
pub fn worker_count(s: &ScenarioFile, sources: usize) -> usize {
    let requested = s.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    requested.clamp(1, sources.max(1))
}

/// One lasso per source; writes `lasso_NNN.csv` per source with a tube and `cover_report.json`.
pub fn cmd_cover(s: &ScenarioFile) -> Result<u8, CliError> {
    let dir = output_path(s)?;
    let sys = s.build_system()?;
    let sources = s.source_points()?;
    let settings = s.lasso_settings();
    let workers = worker_count(s, sources.len());
    create_dir(dir)?;
    let start = Instant::now();
    let report = cover(&sys, &sources, &settings, workers).map_err(|e| CliError::Run(e.to_string()))?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut lassos = Vec::new();
    for c in report.lassos {
        let name = format!("lasso_{:03}.csv", c.index);
        write(&dir.join(&name), &tube_csv(&c.lasso.tube))?;
        let mut summary = LassoSummary::certified(&sys.name, &c.lasso, s.tau, c.work);
        summary.tube_file = Some(name);
        lassos.push(CoverEntry { index: c.index, summary });
    }
    let mut failures = Vec::new();
    for f in report.failures {
        let mut summary =
            failure_summary(s, &sys.name, &f.source, status_of(f.kind), f.reason, f.tube.as_ref(), f.work);
        if let Some(tube) = &f.tube {
            let name = format!("lasso_{:03}.csv", f.index);
            write(&dir.join(&name), &tube_csv(tube))?;
            summary.tube_file = Some(name);
        }
        failures.push(CoverEntry { index: f.index, summary });
    }
    let file = CoverReportFile {
        system: sys.name.clone(),
        params: sys.params.clone(),
        settings: report.settings,
        sources: sources.len(),
        certified: lassos.len(),
        failed: failures.len(),
        lassos,
        failures,
    };
    write(&dir.join("cover_report.json"), &to_json(&file)?)?;
    eprintln!("cover: {}/{} certified on {workers} workers ({elapsed:.3} s)", file.certified, file.sources);
    Ok(if file.failed == 0 { EXIT_OK } else { EXIT_NO_INCLUSION })
}
