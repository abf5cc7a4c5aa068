//! The `run`, `check` and `sweep` commands as library functions.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lienard_core::analyzers::{
    assess, detect_boundedness, detect_oscillation, find_limit_cycle, probe_stability, AnalysisError,
    CycleVerdict,
};
use lienard_core::lienard::{self, LienardError, QualReport, ScenarioSpec, Theorem};
use lienard_core::ode::Trajectory;
use rayon::prelude::*;
use serde::Serialize;

use crate::report::{write_trajectory_csv, Analyses, RunReport, Timings, REPORT_FILE, TRAJECTORY_FILE};
use crate::scenario::{apply_env_override, parse_scenario, ScenarioFile, SchemaError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("schema error at {0}")]
    Schema(#[from] SchemaError),
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Schema(_) | Self::Usage(_) => EXIT_SCHEMA,
            Self::Numerical(_) => EXIT_NUMERICAL,
            Self::Io(_) => EXIT_IO,
        }
    }
}

impl From<AnalysisError> for CommandError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Family(_) | AnalysisError::Lienard(LienardError::NotApplicable { .. }) => {
                Self::Usage(e.to_string())
            }
            AnalysisError::Lienard(LienardError::Spec(s)) => Self::Usage(s.to_string()),
            other => Self::Numerical(other.to_string()),
        }
    }
}

impl From<LienardError> for CommandError {
    fn from(e: LienardError) -> Self {
        AnalysisError::from(e).into()
    }
}

fn io_err(what: &str, path: &Path, e: impl std::fmt::Display) -> CommandError {
    CommandError::Io(format!("{what} {}: {e}", path.display()))
}

/// Reads a scenario file and applies the tolerance override from the
/// environment.
pub fn load(path: &Path) -> Result<ScenarioFile, CommandError> {
    let text = fs::read_to_string(path).map_err(|e| CommandError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut file = parse_scenario(&text)?;
    apply_env_override(&mut file)?;
    Ok(file)
}

/// Simulates a validated scenario and runs the analyses it requests.
pub fn execute(file: &ScenarioFile) -> Result<(Trajectory, RunReport), CommandError> {
    let spec = file.to_spec()?;
    let opts = file.analysis_options()?;
    let theorem = file.theorem()?;
    let start = Instant::now();
    let traj = lienard::simulate(&spec)?;
    let simulate_s = start.elapsed().as_secs_f64();

    let analysis_start = Instant::now();
    let a = &file.analysis;
    let mut analyses = Analyses::default();
    if a.oscillation.is_some() {
        analyses.oscillation = Some(detect_oscillation(&traj, opts.min_zeros));
    }
    if a.boundedness.is_some() {
        analyses.boundedness = Some(detect_boundedness(&traj, &opts.radii));
    }
    if a.stability.is_some() {
        let horizon = opts.stability_horizon.unwrap_or(spec.t_end - spec.t0);
        analyses.stability = Some(probe_stability(&spec, &opts.deltas, opts.epsilon, horizon)?);
    }
    if a.cycle.is_some() {
        let mut ics = vec![[spec.x0, spec.y0]];
        ics.extend(opts.cycle_ics.iter().copied());
        analyses.cycle = Some(find_limit_cycle(&spec, &ics, &opts.cycle)?);
    }
    let qualitative = theorem.map(|t| assess(&spec, t, &opts)).transpose()?;
    let analyses_s = analysis_start.elapsed().as_secs_f64();

    let last = traj.last().copied().unwrap_or(lienard_core::ode::Sample {
        t: spec.t0,
        x: spec.x0,
        y: spec.y0,
    });
    let report = RunReport {
        scenario: file.clone(),
        status: traj.status,
        stats: traj.stats,
        samples: traj.samples.len(),
        final_state: [last.t, last.x, last.y],
        sup_norm: traj.sup_norm(),
        analyses,
        qualitative,
        trajectory: TRAJECTORY_FILE.to_string(),
        timings: Timings {
            simulate_s,
            analyses_s,
            total_s: start.elapsed().as_secs_f64(),
        },
    };
    Ok((traj, report))
}

/// Writes `trajectory.csv` and `report.json` into `out`.
pub fn write_outputs(out: &Path, traj: &Trajectory, report: &RunReport) -> Result<(), CommandError> {
    fs::create_dir_all(out).map_err(|e| io_err("cannot create", out, e))?;
    let csv_path = out.join(TRAJECTORY_FILE);
    let csv_file = fs::File::create(&csv_path).map_err(|e| io_err("cannot create", &csv_path, e))?;
    write_trajectory_csv(std::io::BufWriter::new(csv_file), traj).map_err(|e| io_err("cannot write", &csv_path, e))?;
    let json_path = out.join(REPORT_FILE);
    let json = serde_json::to_string_pretty(report).map_err(|e| io_err("cannot serialize", &json_path, e))?;
    fs::write(&json_path, json + "\n").map_err(|e| io_err("cannot write", &json_path, e))?;
    Ok(())
}

pub fn run(scenario: &Path, out: &Path) -> Result<RunReport, CommandError> {
    let file = load(scenario)?;
    let (traj, report) = execute(&file)?;
    write_outputs(out, &traj, &report)?;
    Ok(report)
}

pub fn check_file(file: &ScenarioFile, theorem: &str) -> Result<QualReport, CommandError> {
    let theorem: Theorem = theorem.parse().map_err(CommandError::Usage)?;
    let spec: ScenarioSpec = file.to_spec()?;
    let opts = file.analysis_options()?;
    Ok(assess(&spec, theorem, &opts)?)
}

pub fn check(scenario: &Path, theorem: &str) -> Result<QualReport, CommandError> {
    check_file(&load(scenario)?, theorem)
}

/// A scenario field that a sweep varies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Kernel,
    Constant(String),
}

impl SweepParam {
    pub fn resolve(name: &str, file: &ScenarioFile) -> Result<Self, CommandError> {
        match name {
            "alpha" => Ok(Self::Alpha),
            "kernel" => Ok(Self::Kernel),
            c if file.constants.contains_key(c) => Ok(Self::Constant(c.to_string())),
            other => Err(CommandError::Usage(format!(
                "cannot sweep `{other}`: expected alpha, kernel or one of the scenario constants {:?}",
                file.constants.keys().collect::<Vec<_>>()
            ))),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Alpha => "alpha",
            Self::Kernel => "kernel",
            Self::Constant(c) => c,
        }
    }

    /// The scenario with this parameter set to `value`.
    pub fn apply(&self, file: &ScenarioFile, value: &str) -> Result<ScenarioFile, CommandError> {
        let mut out = file.clone();
        let number = || {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| CommandError::Usage(format!("`{value}` is not a number")))
        };
        match self {
            Self::Alpha => out.alpha = number()?,
            Self::Kernel => {
                out.kernel.kind = value.trim().to_string();
                out.kernel.params = None;
            }
            Self::Constant(c) => {
                out.constants.insert(c.clone(), number()?);
            }
        }
        out.to_spec()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub status: String,
    pub sup_norm: Option<f64>,
    pub oscillation: String,
    pub boundedness: String,
    pub stability: String,
    pub cycle: String,
    pub conclusion: String,
    pub amplitude: Option<f64>,
    pub period: Option<f64>,
    pub elapsed_s: f64,
}

pub const SUMMARY_FILE: &str = "summary.csv";

/// The `verdict` (or `status`) tag of a serialized verdict type.
fn tag<T: Serialize>(v: Option<&T>) -> String {
    let Some(v) = v else { return String::new() };
    let value = serde_json::to_value(v).unwrap_or_default();
    ["verdict", "status"]
        .iter()
        .find_map(|k| value.get(*k).and_then(|t| t.as_str()))
        .map(str::to_string)
        .unwrap_or_default()
}

fn summarize(value: &str, outcome: &Result<RunReport, CommandError>) -> SweepRow {
    match outcome {
        Ok(r) => {
            let (amplitude, period) = match r.analyses.cycle.as_ref().map(|c| &c.verdict) {
                Some(CycleVerdict::UniqueCycle { amplitude, period }) => (Some(*amplitude), Some(*period)),
                _ => (None, None),
            };
            SweepRow {
                value: value.to_string(),
                status: tag(Some(&r.status)),
                sup_norm: Some(r.sup_norm),
                oscillation: tag(r.analyses.oscillation.as_ref().map(|o| &o.verdict)),
                boundedness: tag(r.analyses.boundedness.as_ref()),
                stability: tag(r.analyses.stability.as_ref().map(|s| &s.verdict)),
                cycle: tag(r.analyses.cycle.as_ref().map(|c| &c.verdict)),
                conclusion: tag(r.qualitative.as_ref().map(|q| &q.conclusion)),
                amplitude,
                period,
                elapsed_s: r.timings.total_s,
            }
        }
        Err(e) => SweepRow {
            value: value.to_string(),
            status: format!("error: {e}"),
            sup_norm: None,
            oscillation: String::new(),
            boundedness: String::new(),
            stability: String::new(),
            cycle: String::new(),
            conclusion: String::new(),
            amplitude: None,
            period: None,
            elapsed_s: 0.0,
        },
    }
}

/// Result of a sweep: one row per value, in input order.
#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<Result<RunReport, CommandError>>,
    pub dirs: Vec<PathBuf>,
}

impl SweepOutcome {
    /// First failure's exit code, or success.
    pub fn exit_code(&self) -> i32 {
        self.reports
            .iter()
            .find_map(|r| r.as_ref().err().map(CommandError::exit_code))
            .unwrap_or(EXIT_OK)
    }
}

/// Runs one scenario per value in parallel; each writes its own directory
/// `<out>/<param>=<value>` and `summary.csv` lists them all.
pub fn sweep_file(file: &ScenarioFile, param: &str, values: &[String], out: &Path) -> Result<SweepOutcome, CommandError> {
    let param = SweepParam::resolve(param, file)?;
    if values.is_empty() {
        return Err(CommandError::Usage("no sweep values".into()));
    }
    let files = values
        .iter()
        .map(|v| param.apply(file, v))
        .collect::<Result<Vec<_>, _>>()?;
    let dirs: Vec<PathBuf> = values
        .iter()
        .map(|v| out.join(format!("{}={}", param.name(), v.trim())))
        .collect();
    let reports: Vec<Result<RunReport, CommandError>> = files
        .par_iter()
        .zip(dirs.par_iter())
        .map(|(f, dir)| {
            let (traj, report) = execute(f)?;
            write_outputs(dir, &traj, &report)?;
            Ok(report)
        })
        .collect();
    let rows: Vec<SweepRow> = values.iter().zip(&reports).map(|(v, r)| summarize(v.trim(), r)).collect();
    fs::create_dir_all(out).map_err(|e| io_err("cannot create", out, e))?;
    let path = out.join(SUMMARY_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err("cannot create", &path, e))?;
    for row in &rows {
        w.serialize(row).map_err(|e| io_err("cannot write", &path, e))?;
    }
    w.flush().map_err(|e| io_err("cannot write", &path, e))?;
    Ok(SweepOutcome { rows, reports, dirs })
}

pub fn sweep(scenario: &Path, param: &str, values: &[String], out: &Path) -> Result<SweepOutcome, CommandError> {
    sweep_file(&load(scenario)?, param, values, out)
}
