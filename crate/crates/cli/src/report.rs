//! Run reports and trajectory CSV output.

use std::io::Write;

use lienard_core::analyzers::{Boundedness, CycleReport, OscillationEvidence, StabilityReport};
use lienard_core::lienard::QualReport;
use lienard_core::ode::{Status, StepStats, Trajectory};
use serde::{Deserialize, Serialize};

use crate::scenario::ScenarioFile;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// The scenario as interpreted, after environment overrides.
    pub scenario: ScenarioFile,
    pub status: Status,
    pub stats: StepStats,
    pub samples: usize,
    pub final_state: [f64; 3],
    pub sup_norm: f64,
    pub analyses: Analyses,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualitative: Option<QualReport>,
    pub trajectory: String,
    pub timings: Timings,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Analyses {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillation: Option<OscillationEvidence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundedness: Option<Boundedness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<CycleReport>,
}

/// Wall-clock seconds; the only nondeterministic part of a report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub simulate_s: f64,
    pub analyses_s: f64,
    pub total_s: f64,
}

impl RunReport {
    /// The report with timings zeroed, for comparisons across runs.
    pub fn without_timings(&self) -> Self {
        Self {
            timings: Timings::default(),
            ..self.clone()
        }
    }
}

/// Writes `t,x,y` rows with 17 significant digits.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y"])?;
    for s in &traj.samples {
        w.write_record([
            format!("{:.16e}", s.t),
            format!("{:.16e}", s.x),
            format!("{:.16e}", s.y),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_csv_bytes(traj: &Trajectory) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, traj).expect("writing to memory");
    buf
}

/// Reads back a trajectory CSV as `(t, x, y)` rows.
pub fn read_trajectory_csv<R: std::io::Read>(input: R) -> csv::Result<Vec<[f64; 3]>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use lienard_core::ode::Sample;

    #[test]
    fn csv_round_trips_bit_exactly() {
        let samples = vec![
            Sample { t: 0.0, x: 1.0 / 3.0, y: -2.5e-300 },
            Sample { t: 0.1, x: std::f64::consts::PI, y: 1e300 },
        ];
        let traj = Trajectory::from_samples(samples.clone(), Status::Completed);
        let bytes = trajectory_csv_bytes(&traj);
        let text = std::str::from_utf8(&bytes).unwrap();
        assert!(text.starts_with("t,x,y\n"));
        let rows = read_trajectory_csv(bytes.as_slice()).unwrap();
        for (row, s) in rows.iter().zip(&samples) {
            assert_eq!(row, &[s.t, s.x, s.y]);
        }
    }
}
