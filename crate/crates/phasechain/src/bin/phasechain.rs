//! Batch front door: parse problem-spec files, dispatch to the solvers and
//! analyzers, and emit trajectories, reports, and complexity estimates.
//!
//! Exit codes: 0 success, 1 spec error, 2 stability-gate refusal,
//! 3 numerical failure.
//!
//! Thread count is controlled by the `RAYON_NUM_THREADS` environment
//! variable; no other environment is consulted.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array1;
use num_complex::Complex64 as C64;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use phasechain::error::Error;
use phasechain::lct::{augment, initial_augmented, Normalization};
use phasechain::problem::{parse_spec_with, Method, ProblemSpec, Source};
use phasechain::reference::{solve_dde_direct, solve_ode_direct, Trajectory};
use phasechain::report::{write_trajectory_csv, GridJson, RunReport, StabilityJson};
use phasechain::schrodingerizer::{
    choose_grid_from_norm, complexity_estimate, solve_schrodingerized, SchrodGrid, SolveParams,
};
use phasechain::stability::{check_h1_negativity, semistability_of_matrix};
use phasechain::{linalg, Result};

#[derive(Parser)]
#[command(name = "phasechain", version, about = "Distributed-delay system toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    DdeDirect,
    LctOde,
    Schrodingerize,
}

impl MethodArg {
    fn method(self) -> Method {
        match self {
            MethodArg::DdeDirect => Method::DdeDirect,
            MethodArg::LctOde => Method::LctOde,
            MethodArg::Schrodingerize => Method::Schrodingerize,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    Strict,
    Auto,
}

/// Spec-file path plus run-parameter overrides shared by most subcommands.
#[derive(Args)]
struct Common {
    /// Problem-spec TOML file.
    spec: PathBuf,
    /// Solver to use (overrides the spec's run.method).
    #[arg(long)]
    method: Option<MethodArg>,
    /// Final time (overrides run.t_end).
    #[arg(long)]
    t_end: Option<f64>,
    /// Output/integration step (overrides run.step).
    #[arg(long)]
    step: Option<f64>,
    /// Momentum grid size override (overrides run.n_p).
    #[arg(long)]
    np: Option<usize>,
    /// Grid truncation tolerance (overrides run.eps_grid).
    #[arg(long)]
    eps_grid: Option<f64>,
    /// Permit the spectral-shift workaround for indefinite Hermitian parts.
    #[arg(long)]
    allow_shift: bool,
    /// Kernel normalization mode (overrides run.normalization).
    #[arg(long, value_enum)]
    normalize: Option<NormalizeArg>,
    /// Output directory for artifacts (default: current directory).
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<ProblemSpec> {
        let text = fs::read_to_string(&self.spec)?;
        let norm = self.normalize.map(|n| match n {
            NormalizeArg::Strict => Normalization::Strict,
            NormalizeArg::Auto => Normalization::Auto,
        });
        let mut spec = parse_spec_with(&text, norm)?;
        if let Some(m) = self.method {
            spec.run.method = m.method();
        }
        if let Some(t) = self.t_end {
            if t < 0.0 || !t.is_finite() {
                return Err(Error::Spec(format!("--t-end must be nonnegative, got {t}")));
            }
            spec.run.t_end = t;
            spec.run.times = None;
        }
        if let Some(h) = self.step {
            if h <= 0.0 || !h.is_finite() {
                return Err(Error::Spec(format!("--step must be positive, got {h}")));
            }
            spec.run.step = Some(h);
        }
        if let Some(n) = self.np {
            spec.run.n_p = Some(n);
        }
        if let Some(e) = self.eps_grid {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Spec(format!("--eps-grid must lie in (0, 1), got {e}")));
            }
            spec.run.eps_grid = e;
        }
        if self.allow_shift {
            spec.run.allow_shift = true;
        }
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a problem spec; print a summary.
    Validate(Common),
    /// Dump the augmented operator as sparse triplets (CSV: row,col,re,im).
    Augment(Common),
    /// Analyze semi-stability of the augmented operator.
    Stability(Common),
    /// Integrate the system and write trajectory.csv + report.json.
    Solve(Common),
    /// Print the quantum-resource estimate for the requested run.
    Complexity {
        #[command(flatten)]
        common: Common,
        /// Precision bits per query in the gate cost model.
        #[arg(long, default_value_t = 32)]
        precision_bits: u32,
    },
    /// Build a model spec and print its compiled-system summary.
    Model {
        #[command(subcommand)]
        which: ModelCommand,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Generalized master equation with phase-type waiting times.
    Gme(Common),
    /// Vectorized dephasing master equation with phase-type memory.
    Redfield(Common),
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::StabilityGate(_) => ExitCode::from(2),
        Error::Spec(_)
        | Error::InvalidPhaseType(_)
        | Error::DimensionMismatch(_)
        | Error::Domain(_)
        | Error::NoMemoryTerms
        | Error::Io(_) => ExitCode::from(1),
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(c) => cmd_validate(c),
        Command::Augment(c) => cmd_augment(c),
        Command::Stability(c) => cmd_stability(c),
        Command::Solve(c) => cmd_solve(c),
        Command::Complexity { common, precision_bits } => cmd_complexity(common, *precision_bits),
        Command::Model { which } => match which {
            ModelCommand::Gme(c) => cmd_model(c, "gme"),
            ModelCommand::Redfield(c) => cmd_model(c, "redfield"),
        },
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn cmd_validate(common: &Common) -> Result<ExitCode> {
    let spec = common.load()?;
    let sp = spec.system.sparsity();
    println!(
        "ok: source={} dim={} terms={} s_a={} s_b={} g={}",
        spec.source.id(),
        spec.system.dim(),
        spec.system.terms().len(),
        sp.s_a,
        sp.s_b,
        sp.g
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_augment(common: &Common) -> Result<ExitCode> {
    let spec = common.load()?;
    let aug = augment(&spec.system)?;
    let mut out = String::from("row,col,re,im\n");
    for &(r, c, v) in aug.cbar.triplets() {
        out.push_str(&format!("{r},{c},{:.16e},{:.16e}\n", v.re, v.im));
    }
    print!("{out}");
    eprintln!(
        "augmented dimension {} ({} nonzeros)",
        aug.layout.dim(),
        aug.cbar.nnz()
    );
    Ok(ExitCode::SUCCESS)
}

/// Dense augmented operator; plain `A` when the system has no memory terms.
fn augmented_dense(spec: &ProblemSpec) -> Result<(ndarray::Array2<C64>, Option<usize>)> {
    match augment(&spec.system) {
        Ok(aug) => Ok((aug.cbar.to_dense(), Some(aug.layout.dim()))),
        Err(Error::NoMemoryTerms) => Ok((spec.system.a().to_dense(), None)),
        Err(e) => Err(e),
    }
}

fn cmd_stability(common: &Common) -> Result<ExitCode> {
    let spec = common.load()?;
    let (c, _) = augmented_dense(&spec)?;
    let report = semistability_of_matrix(&c.view())?;
    let json = StabilityJson::from(&report);
    println!("{}", serde_json::to_string_pretty(&json).expect("serializable"));
    if report.semi_stable {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Error::StabilityGate(format!(
            "operator is not semi-stable (max Re λ = {:.3e}, {} imaginary-axis defect(s))",
            report.max_real_part,
            report.imaginary_axis_defects.len()
        )))
    }
}

fn require_x0(spec: &ProblemSpec) -> Result<&Array1<C64>> {
    spec.x0.as_ref().ok_or_else(|| {
        Error::Spec("this command needs an initial state: set run.x0 (or run.rho0_re)".into())
    })
}

/// Thin a dense-step trajectory down to the requested output times.
fn thin(traj: &Trajectory, times: &[f64]) -> Result<Trajectory> {
    let states = times.iter().map(|&t| traj.state_at(t).clone()).collect();
    Trajectory::new(times.to_vec(), states, &traj.solver_id)
}

fn cmd_solve(common: &Common) -> Result<ExitCode> {
    let spec = common.load()?;
    let x0 = require_x0(&spec)?;
    let times = spec.run.output_times();
    let t_end = *times.last().expect("output_times is nonempty");

    let mut report = RunReport::new(spec.run.method.id(), spec.source.id(), spec.system.dim());
    report.times = times.clone();

    let traj = match spec.run.method {
        Method::DdeDirect => {
            let h = spec.run.step.unwrap_or(t_end / 1000.0);
            let full = solve_dde_direct(&spec.system, x0, t_end, h)?;
            thin(&full, &times)?
        }
        Method::LctOde => {
            let aug = augment(&spec.system)?;
            report.augmented_dim = Some(aug.layout.dim());
            let y0 = initial_augmented(&x0.view(), &aug.layout)?;
            let full = solve_ode_direct(&aug, &y0, &times)?;
            let states = full
                .states
                .iter()
                .map(|y| phasechain::lct::extract_x(&y.view(), &aug.layout))
                .collect::<Result<Vec<_>>>()?;
            Trajectory::new(times.clone(), states, &full.solver_id)?
        }
        Method::Schrodingerize => {
            let aug = augment(&spec.system)?;
            report.augmented_dim = Some(aug.layout.dim());
            let (c, _) = augmented_dense(&spec)?;
            let stab = semistability_of_matrix(&c.view())?;
            report.stability = Some(StabilityJson::from(&stab));
            let params = SolveParams {
                eps_grid: spec.run.eps_grid,
                n_p: spec.run.n_p,
                allow_shift: spec.run.allow_shift,
                recovery: None,
            };
            let traj = solve_schrodingerized(&spec.system, &x0.view(), &times, &params)?;
            report.grid = Some(grid_json(&c, t_end, &spec)?);
            report.success_probabilities = traj.success_probabilities.clone();
            traj
        }
    };

    if report.stability.is_none() {
        let (c, _) = augmented_dense(&spec)?;
        report.stability = Some(StabilityJson::from(&semistability_of_matrix(&c.view())?));
    }

    fs::create_dir_all(&common.out)?;
    let csv_path = common.out.join("trajectory.csv");
    let mut csv = fs::File::create(&csv_path)?;
    write_trajectory_csv(&traj, &mut csv)?;
    csv.flush()?;
    let report_path = common.out.join("report.json");
    fs::write(&report_path, report.to_json())?;
    eprintln!("wrote {} and {}", csv_path.display(), report_path.display());
    Ok(ExitCode::SUCCESS)
}

/// Reconstruct the momentum grid a Schrödingerized run selects, including the
/// shift it would apply for an indefinite Hermitian part.
fn grid_json(c: &ndarray::Array2<C64>, t_end: f64, spec: &ProblemSpec) -> Result<GridJson> {
    let (_, shift) = check_h1_negativity(&c.view())?;
    let shift = if spec.run.allow_shift { shift } else { 0.0 };
    let mut shifted = c.clone();
    for i in 0..shifted.nrows() {
        shifted[[i, i]] -= C64::new(shift, 0.0);
    }
    let (h1, _) = linalg::hermitian_split(&shifted.view());
    let h1_norm = linalg::spectral_norm_hermitian(&h1.view())?;
    let grid = match spec.run.n_p {
        Some(n_p) => {
            let auto = choose_grid_from_norm(h1_norm, t_end, spec.run.eps_grid)?;
            SchrodGrid::new(auto.l(), n_p)?
        }
        None => choose_grid_from_norm(h1_norm, t_end, spec.run.eps_grid)?,
    };
    Ok(GridJson {
        l: grid.l(),
        n_p: grid.n_p(),
        delta_p: grid.delta_p(),
        eps_grid: spec.run.eps_grid,
    })
}

fn cmd_complexity(common: &Common, precision_bits: u32) -> Result<ExitCode> {
    let spec = common.load()?;
    let aug = augment(&spec.system)?;
    let t_end = spec.run.t_end;
    let norm_ratio = match &spec.x0 {
        Some(x0) => {
            let y0 = initial_augmented(&x0.view(), &aug.layout)?;
            let traj = solve_ode_direct(&aug, &y0, &[0.0, t_end])?;
            let n0 = traj.states[0].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let nt = traj.states[1].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nt > 0.0 {
                n0 / nt
            } else {
                return Err(Error::Numerical("solution norm vanished at t_end".into()));
            }
        }
        None => 1.0,
    };
    let report =
        complexity_estimate(&spec.system, &aug, t_end, spec.run.eps_grid, norm_ratio, precision_bits)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    Ok(ExitCode::SUCCESS)
}

fn cmd_model(common: &Common, expected: &str) -> Result<ExitCode> {
    let spec = common.load()?;
    if spec.source.id() != expected {
        return Err(Error::Spec(format!(
            "spec contains a '{}' source but the command expects '{expected}'",
            spec.source.id()
        )));
    }
    let sp = spec.system.sparsity();
    let mut summary = serde_json::json!({
        "model": expected,
        "dim": spec.system.dim(),
        "terms": spec.system.terms().len(),
        "sparsity": { "s_a": sp.s_a, "s_b": sp.s_b, "g": sp.g, "s": sp.s },
    });
    if let Source::Redfield(rf) = &spec.source {
        summary["max_norm_bound"] =
            serde_json::json!(phasechain::models::redfield_norm_bound(rf));
        summary["row_sparsity_bound"] =
            serde_json::json!(phasechain::models::redfield_sparsity_bound(rf));
    }
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    Ok(ExitCode::SUCCESS)
}
