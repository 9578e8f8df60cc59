use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::evaluate::{ArmResult, EvalReport};
use crate::error::{Error, Result};

/// One record of the results table; one per (axis value, arm). Column order
/// is the field order below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub axis: String,
    pub value: String,
    pub arm: String,
    pub episodes: usize,
    pub flights: u64,
    pub nmacs: u64,
    pub p_nmac: f64,
    pub risk_ratio: Option<f64>,
    pub p_a0: Option<f64>,
    pub p_a1: Option<f64>,
    pub p_a2: Option<f64>,
    pub p_a3: Option<f64>,
    pub p_a4: Option<f64>,
    pub p_a5: Option<f64>,
    pub mean_flight_s: f64,
}

impl ResultRow {
    fn from_arm(axis: &str, value: &str, arm: &str, r: &ArmResult, ratio: Option<f64>) -> Self {
        let p = r.action_distribution();
        let a = |i: usize| p.map(|p| p[i]);
        Self {
            axis: axis.into(),
            value: value.into(),
            arm: arm.into(),
            episodes: r.episodes,
            flights: r.flights,
            nmacs: r.nmacs,
            p_nmac: r.p_nmac(),
            risk_ratio: ratio,
            p_a0: a(0),
            p_a1: a(1),
            p_a2: a(2),
            p_a3: a(3),
            p_a4: a(4),
            p_a5: a(5),
            mean_flight_s: r.mean_flight_s(),
        }
    }

    /// Logic and baseline rows for one report.
    pub fn pair(axis: &str, value: &str, report: &EvalReport) -> [ResultRow; 2] {
        [
            Self::from_arm(axis, value, "logic", &report.logic, report.risk_ratio),
            Self::from_arm(axis, value, "baseline", &report.baseline, None),
        ]
    }
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Human-readable summary table.
pub fn render_results(rows: &[ResultRow]) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<13} {:>8} {:<9} {:>8} {:>6} {:>8} {:>6}  {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}",
        "axis", "value", "arm", "flights", "nmacs", "p_nmac", "rr", "a0", "a1", "a2", "a3", "a4", "a5"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<13} {:>8} {:<9} {:>8} {:>6} {:>8.4} {:>6}  {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}",
            r.axis,
            r.value,
            r.arm,
            r.flights,
            r.nmacs,
            r.p_nmac,
            opt(r.risk_ratio),
            opt(r.p_a0),
            opt(r.p_a1),
            opt(r.p_a2),
            opt(r.p_a3),
            opt(r.p_a4),
            opt(r.p_a5)
        );
    }
    out
}
