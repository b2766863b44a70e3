//! CSV and JSON writers, plus a tube CSV reader.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every finite `f64` exactly.

use std::fmt::Write as _;

use serde::Serialize;
use torus_lasso::{Ball, Lasso, Tube, WorkCounters};

use crate::CliError;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,x1,...,xn` rows of a plain Euler trajectory.
pub fn trajectory_csv(tau: f64, states: &[Vec<f64>]) -> String {
    let n = states.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for j in 1..=n {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for (i, x) in states.iter().enumerate() {
        out.push_str(&num(tau * i as f64));
        for v in x {
            out.push(',');
            out.push_str(&num(*v));
        }
        out.push('\n');
    }
    out
}

/// Tube rows: `step,t,c1..cn,radius,lambda,C,gamma`. The last ball has no
/// outgoing step, so its constant columns are empty.
pub fn tube_csv(tube: &Tube) -> String {
    let n = tube.balls[0].dim();
    let mut out = String::from("step,t");
    for j in 1..=n {
        let _ = write!(out, ",c{j}");
    }
    out.push_str(",radius,lambda,C,gamma\n");
    for (i, b) in tube.balls.iter().enumerate() {
        let _ = write!(out, "{i},{}", num(b.t));
        for v in &b.center {
            out.push(',');
            out.push_str(&num(*v));
        }
        out.push(',');
        out.push_str(&num(b.radius));
        match tube.constants.get(i) {
            Some(lc) => {
                let _ = write!(out, ",{},{},{}", num(lc.k.lambda), num(lc.k.c), num(lc.k.gamma));
            }
            None => out.push_str(",,,"),
        }
        out.push('\n');
    }
    out
}

/// One parsed tube row.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeRow {
    pub step: usize,
    pub ball: Ball,
    /// `(lambda, C, gamma)` of the outgoing step.
    pub constants: Option<(f64, f64, f64)>,
}

/// Parse the output of [`tube_csv`].
pub fn parse_tube_csv(text: &str) -> Result<Vec<TubeRow>, CliError> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| CliError::Parse("empty tube file".into()))?.split(',').collect();
    let ncols = header.len();
    if ncols < 7 || header[0] != "step" || header[1] != "t" || header[ncols - 4] != "radius" {
        return Err(CliError::Parse(format!("unexpected tube header {:?}", header.join(","))));
    }
    let n = ncols - 6;
    let float = |s: &str, line: usize| -> Result<f64, CliError> {
        s.parse::<f64>().map_err(|e| CliError::Parse(format!("line {line}: {s:?}: {e}")))
    };
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != ncols {
            return Err(CliError::Parse(format!("line {lineno}: expected {ncols} columns, got {}", cols.len())));
        }
        let step = cols[0].parse::<usize>().map_err(|e| CliError::Parse(format!("line {lineno}: {e}")))?;
        let t = float(cols[1], lineno)?;
        let center = cols[2..2 + n].iter().map(|s| float(s, lineno)).collect::<Result<Vec<_>, _>>()?;
        let radius = float(cols[2 + n], lineno)?;
        let tail = &cols[3 + n..];
        let constants = if tail.iter().all(|s| s.is_empty()) {
            None
        } else {
            Some((float(tail[0], lineno)?, float(tail[1], lineno)?, float(tail[2], lineno)?))
        };
        let ball = Ball::new(t, center, radius).map_err(|e| CliError::Parse(format!("line {lineno}: {e}")))?;
        rows.push(TubeRow { step, ball, constants });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodBall {
    pub period: usize,
    pub t: f64,
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Stroboscopic balls `0, T, 2T, ...` present in `tube`.
pub fn period_balls(tube: &Tube, period_steps: usize) -> Vec<PeriodBall> {
    tube.balls
        .iter()
        .step_by(period_steps)
        .enumerate()
        .map(|(i, b)| PeriodBall { period: i, t: b.t, center: b.center.clone(), radius: b.radius })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Certified,
    NoInclusion,
    BlowUp,
    StepEnclosure,
    Singular,
    Error,
}

/// JSON summary of one lasso search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoSummary {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub system: String,
    pub source: Vec<f64>,
    pub eps: f64,
    pub tau: f64,
    pub period_steps: usize,
    #[serde(rename = "T")]
    pub period: f64,
    pub i0: Option<usize>,
    pub steps: usize,
    pub periods: Vec<PeriodBall>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tube_file: Option<String>,
    /// Deterministic work counters; wall-clock time goes to stderr.
    pub work: WorkCounters,
}

impl LassoSummary {
    pub fn certified(system: &str, lasso: &Lasso, tau: f64, work: WorkCounters) -> Self {
        LassoSummary {
            status: Status::Certified,
            message: None,
            system: system.to_string(),
            source: lasso.source.clone(),
            eps: lasso.eps,
            tau,
            period_steps: lasso.period_steps,
            period: lasso.period(),
            i0: Some(lasso.i0),
            steps: lasso.tube.steps(),
            periods: period_balls(&lasso.tube, lasso.period_steps),
            blowup_step: None,
            tube_file: None,
            work,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
