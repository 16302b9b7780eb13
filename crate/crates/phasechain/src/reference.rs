//! Brute-force reference solvers: a direct history integrator for the
//! delay system (trapezoid convolution + Heun stepping, second order) and a
//! dense matrix-exponential path for the augmented ODE.
//!
//! These are the oracles the rest of the crate is validated against, so
//! they favor reliability over speed: full dense history, fixed step, no
//! interpolation (requested output times snap to the step grid).

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::lct::{AugmentedSystem, DelaySystem};
use crate::linalg::expm;
use crate::C64;

/// Default cap on the number of stored history steps.
pub const DEFAULT_HISTORY_CAP: usize = 2_000_000;

/// A solved trajectory: states sampled on a strictly ascending time grid,
/// tagged with the solver that produced it.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Array1<C64>>,
    pub solver_id: String,
    /// Augmented states, when the solver works in the augmented space.
    pub aux_states: Option<Vec<Array1<C64>>>,
    pub success_probabilities: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Array1<C64>>, solver_id: &str) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} times vs {} states",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("trajectory times must be strictly ascending".into()));
        }
        Ok(Self {
            times,
            states,
            solver_id: solver_id.to_string(),
            aux_states: None,
            success_probabilities: None,
        })
    }

    /// State at the grid point closest to `t`.
    pub fn state_at(&self, t: f64) -> &Array1<C64> {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - t).abs().partial_cmp(&(*b - t).abs()).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        &self.states[idx]
    }
}

/// Direct integration of the delay system with the full history retained.
///
/// The convolution `int_0^t S(t-s) x(s) ds` is evaluated by trapezoidal
/// quadrature on the step grid; time stepping is Heun's predictor-corrector
/// with the convolution re-evaluated at the predicted endpoint. Global
/// error is `O(h^2)`.
pub fn solve_dde_direct(
    sys: &DelaySystem,
    x0: &Array1<C64>,
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    solve_dde_direct_capped(sys, x0, t_end, h, DEFAULT_HISTORY_CAP)
}

pub fn solve_dde_direct_capped(
    sys: &DelaySystem,
    x0: &Array1<C64>,
    t_end: f64,
    h: f64,
    history_cap: usize,
) -> Result<Trajectory> {
    if h <= 0.0 {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    if t_end < 0.0 {
        return Err(Error::Domain(format!("t_end must be nonnegative, got {t_end}")));
    }
    let n = sys.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {} but the system dimension is {n}",
            x0.len()
        )));
    }
    let steps = (t_end / h).round() as usize;
    if steps + 1 > history_cap {
        return Err(Error::Numerical(format!(
            "history of {} steps exceeds the cap of {history_cap}",
            steps + 1
        )));
    }

    // survival tables on the step grid, one per term
    let terms = sys.terms();
    let mut survival: Vec<Vec<f64>> = Vec::with_capacity(terms.len());
    for term in terms {
        let mut table = Vec::with_capacity(steps + 2);
        for m in 0..=steps + 1 {
            let (_, _, s) = term.kernel.eval(m as f64 * h)?;
            table.push(s);
        }
        survival.push(table);
    }

    let a = sys.a();
    // per-term history of the source component x_col
    let mut history: Vec<Vec<C64>> = vec![Vec::with_capacity(steps + 1); terms.len()];
    for (t_idx, term) in terms.iter().enumerate() {
        history[t_idx].push(x0[term.col]);
    }

    // trapezoid convolution of term `t_idx` at grid index `upto`, with the
    // endpoint value overridden (used for the predictor stage)
    let conv = |t_idx: usize, upto: usize, endpoint: C64, hist: &[C64]| -> C64 {
        if upto == 0 {
            return C64::new(0.0, 0.0);
        }
        let table = &survival[t_idx];
        let mut acc = C64::new(0.5 * table[upto], 0.0) * hist[0];
        for m in 1..upto {
            acc += hist[m] * table[upto - m];
        }
        acc += endpoint * (0.5 * table[0]);
        acc * h
    };

    let deriv = |x: &Array1<C64>, convs: &[C64]| -> Array1<C64> {
        let mut dx: Array1<C64> = Array1::zeros(n);
        for &(r, c, v) in a.triplets() {
            dx[r] += v * x[c];
        }
        for (t_idx, term) in terms.iter().enumerate() {
            dx[term.row] += sys.effective_weight(t_idx) * convs[t_idx];
        }
        dx
    };

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.clone());
    let mut x = x0.clone();

    for step in 0..steps {
        // stage 1: derivative at t_n with the stored history
        let convs_n: Vec<C64> = terms
            .iter()
            .enumerate()
            .map(|(t_idx, term)| {
                let hist = &history[t_idx];
                conv(t_idx, step, x[term.col], hist)
            })
            .collect();
        let f_n = deriv(&x, &convs_n);
        let x_pred = &x + &f_n.mapv(|v| v * C64::new(h, 0.0));

        // stage 2: derivative at t_{n+1} with the predicted endpoint
        let convs_p: Vec<C64> = terms
            .iter()
            .enumerate()
            .map(|(t_idx, term)| {
                let hist = &history[t_idx];
                conv(t_idx, step + 1, x_pred[term.col], hist)
            })
            .collect();
        let f_p = deriv(&x_pred, &convs_p);

        x = &x + &(&f_n + &f_p).mapv(|v| v * C64::new(0.5 * h, 0.0));
        for (t_idx, term) in terms.iter().enumerate() {
            history[t_idx].push(x[term.col]);
        }
        times.push((step + 1) as f64 * h);
        states.push(x.clone());
    }

    Trajectory::new(times, states, "dde-direct")
}

/// Dense matrix-exponential solve of the augmented ODE: `y(t) = e^{tC} y0`
/// evaluated independently at each requested time.
pub fn solve_ode_direct(
    aug: &AugmentedSystem,
    y0: &Array1<C64>,
    times: &[f64],
) -> Result<Trajectory> {
    let dim = aug.layout.dim();
    if y0.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "initial vector has length {} but the augmented dimension is {dim}",
            y0.len()
        )));
    }
    let c = aug.cbar.to_dense();
    solve_matrix_expm(&c, y0, times, "lct-ode")
}

/// `y(t) = e^{tC} y0` for an arbitrary dense operator.
pub fn solve_matrix_expm(
    c: &Array2<C64>,
    y0: &Array1<C64>,
    times: &[f64],
    solver_id: &str,
) -> Result<Trajectory> {
    if c.nrows() != c.ncols() || c.nrows() != y0.len() {
        return Err(Error::DimensionMismatch(format!(
            "operator {}x{} vs state length {}",
            c.nrows(),
            c.ncols(),
            y0.len()
        )));
    }
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        if t < 0.0 {
            return Err(Error::Domain(format!("negative time {t}")));
        }
        let e = expm(&c.mapv(|v| v * C64::new(t, 0.0)).view())?;
        states.push(e.dot(y0));
    }
    Trajectory::new(times.to_vec(), states, solver_id)
}

/// Adaptive Runge-Kutta (Dormand-Prince 5(4)) solve of `dy/dt = C y`,
/// used to cross-check the matrix-exponential path.
pub fn solve_matrix_rk(
    c: &Array2<C64>,
    y0: &Array1<C64>,
    times: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Trajectory> {
    if c.nrows() != c.ncols() || c.nrows() != y0.len() {
        return Err(Error::DimensionMismatch("operator/state size mismatch".into()));
    }
    let f = |y: &Array1<C64>| c.dot(y);

    // Dormand-Prince coefficients
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] =
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let mut states = Vec::with_capacity(times.len());
    let mut t = 0.0f64;
    let mut y = y0.clone();
    let mut step = 1e-3_f64;
    for &t_target in times {
        if t_target < t {
            return Err(Error::Domain("requested times must be ascending".into()));
        }
        while t < t_target {
            let h = step.min(t_target - t).max(1e-12);
            let mut k: Vec<Array1<C64>> = Vec::with_capacity(7);
            k.push(f(&y));
            for stage in 0..6 {
                let mut ys = y.clone();
                for (j, kj) in k.iter().enumerate() {
                    let a = A[stage][j];
                    if a != 0.0 {
                        ys = ys + kj.mapv(|v| v * C64::new(a * h, 0.0));
                    }
                }
                k.push(f(&ys));
            }
            let mut y5 = y.clone();
            let mut y4 = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if B5[j] != 0.0 {
                    y5 = y5 + kj.mapv(|v| v * C64::new(B5[j] * h, 0.0));
                }
                if B4[j] != 0.0 {
                    y4 = y4 + kj.mapv(|v| v * C64::new(B4[j] * h, 0.0));
                }
            }
            let scale: f64 = y5
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max)
                .max(y.iter().map(|v| v.norm()).fold(0.0, f64::max))
                .max(1.0);
            let err: f64 = (&y5 - &y4).iter().map(|v| v.norm()).fold(0.0, f64::max)
                / (atol + rtol * scale);
            if err <= 1.0 {
                t += h;
                y = y5;
                step = (h * (0.9 * err.max(1e-10).powf(-0.2)).min(5.0)).min(1.0);
            } else {
                step = h * (0.9 * err.powf(-0.2)).max(0.1);
                if step < 1e-12 {
                    return Err(Error::Numerical("RK step size underflow".into()));
                }
            }
        }
        states.push(y.clone());
    }
    Trajectory::new(times.to_vec(), states, "rk45")
}
