//! Run artifacts: a JSON report of everything a solve decided or measured,
//! and CSV trajectory serialization.
//!
//! Reports are deterministic for a fixed spec except for the `timestamp`
//! field, which comparisons must exclude.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::reference::Trajectory;
use crate::schrodingerizer::ComplexityReport;
use crate::stability::StabilityReport;

/// `[re, im]` pair, the JSON encoding of a complex number.
pub type Pair = [f64; 2];

fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

/// JSON form of an imaginary-axis eigenvalue whose Jordan structure is
/// defective.
#[derive(Debug, Clone, Serialize)]
pub struct DefectJson {
    pub eigenvalue: Pair,
    pub algebraic: usize,
    pub geometric: usize,
}

/// JSON form of a semi-stability analysis.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityJson {
    pub eigenvalues: Vec<Pair>,
    pub max_real_part: f64,
    pub imaginary_axis_defects: Vec<DefectJson>,
    pub semi_stable: bool,
    pub h1_max_eig: f64,
    pub shift_applied: f64,
}

impl From<&StabilityReport> for StabilityJson {
    fn from(r: &StabilityReport) -> Self {
        Self {
            eigenvalues: r.eigenvalues.iter().map(|&z| pair(z)).collect(),
            max_real_part: r.max_real_part,
            imaginary_axis_defects: r
                .imaginary_axis_defects
                .iter()
                .map(|&(z, alg, geo)| DefectJson { eigenvalue: pair(z), algebraic: alg, geometric: geo })
                .collect(),
            semi_stable: r.semi_stable,
            h1_max_eig: r.h1_max_eig,
            shift_applied: r.shift_applied,
        }
    }
}

/// Momentum-grid parameters actually used by a Schrödingerized run.
#[derive(Debug, Clone, Serialize)]
pub struct GridJson {
    pub l: f64,
    pub n_p: usize,
    pub delta_p: f64,
    pub eps_grid: f64,
}

/// The structured companion to a trajectory CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    /// Seconds since the Unix epoch; excluded from determinism comparisons.
    pub timestamp: u64,
    pub solver_id: String,
    pub source: String,
    pub system_dim: usize,
    pub augmented_dim: Option<usize>,
    pub times: Vec<f64>,
    pub stability: Option<StabilityJson>,
    pub complexity: Option<ComplexityReport>,
    pub grid: Option<GridJson>,
    pub success_probabilities: Option<Vec<f64>>,
}

impl RunReport {
    pub fn new(solver_id: &str, source: &str, system_dim: usize) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            schema_version: 1,
            timestamp,
            solver_id: solver_id.to_string(),
            source: source.to_string(),
            system_dim,
            augmented_dim: None,
            times: Vec::new(),
            stability: None,
            complexity: None,
            grid: None,
            success_probabilities: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Write a trajectory as CSV: header `t,re_x1,im_x1,...`, 17 significant
/// digits per value, one row per output time.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: &mut W) -> Result<()> {
    let dim = traj.states.first().map_or(0, |s| s.len());
    let mut header = String::from("t");
    for i in 1..=dim {
        header.push_str(&format!(",re_x{i},im_x{i}"));
    }
    writeln!(out, "{header}")?;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let mut row = format!("{t:.16e}");
        for z in state.iter() {
            row.push_str(&format!(",{:.16e},{:.16e}", z.re, z.im));
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Parse a trajectory CSV produced by [`write_trajectory_csv`].
pub fn read_trajectory_csv<R: BufRead>(input: R, solver_id: &str) -> Result<Trajectory> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Spec("empty trajectory file".into()))?
        .map_err(Error::Io)?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.first() != Some(&"t") || cols.len() % 2 != 1 {
        return Err(Error::Spec(format!("malformed trajectory header '{header}'")));
    }
    let dim = (cols.len() - 1) / 2;
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(Error::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 1 + 2 * dim {
            return Err(Error::Spec(format!(
                "row {}: expected {} fields, got {}",
                lineno + 2,
                1 + 2 * dim,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Spec(format!("row {}: bad number '{s}': {e}", lineno + 2)))
        };
        times.push(parse(fields[0])?);
        let mut state = Array1::zeros(dim);
        for i in 0..dim {
            state[i] = C64::new(parse(fields[1 + 2 * i])?, parse(fields[2 + 2 * i])?);
        }
        states.push(state);
    }
    Trajectory::new(times, states, solver_id)
}
