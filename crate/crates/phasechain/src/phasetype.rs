//! Phase-type distributions `PH(G, alpha)`: construction, validation,
//! evaluation, and Laplace transforms.
//!
//! A phase-type distribution is the law of the absorption time of a finite
//! Markov chain with sub-generator `G` (Hurwitz-Metzler: negative diagonal,
//! nonnegative off-diagonal, nonpositive row sums, all eigenvalues in the
//! open left half-plane) and initial probability vector `alpha`. Its
//! survival function `S(t) = alphaᵀ exp(tG) 1` is the kernel class the rest
//! of the crate builds on.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Solve};

use crate::error::{Error, Result};
use crate::linalg::{complexify, expm};
use crate::C64;

/// Tolerance for `sum(alpha) = 1` and sign checks on `alpha` and row sums.
pub const PROB_TOL: f64 = 1e-12;
/// Tolerance for eigenvalue real-part negativity.
pub const EIG_TOL: f64 = 1e-10;

/// Outcome of validating candidate `(alpha, G)` data. An empty violation
/// list means the pair defines a valid phase-type distribution.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A validated phase-type distribution `PH(G, alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseType {
    alpha: Array1<f64>,
    generator: Array2<f64>,
}

/// Check candidate data against the phase-type invariants.
///
/// Structural problems (mismatched dimensions, empty data) are errors;
/// invariant violations are collected in the report.
pub fn validate(alpha: &Array1<f64>, generator: &Array2<f64>) -> Result<ValidationReport> {
    let g = alpha.len();
    if g == 0 {
        return Err(Error::DimensionMismatch("alpha must have dimension >= 1".into()));
    }
    if generator.nrows() != g || generator.ncols() != g {
        return Err(Error::DimensionMismatch(format!(
            "alpha has dimension {g} but G is {}x{}",
            generator.nrows(),
            generator.ncols()
        )));
    }

    let mut report = ValidationReport::default();
    let scale = generator.iter().map(|x| x.abs()).fold(1.0, f64::max);

    for (i, &a) in alpha.iter().enumerate() {
        if a < -PROB_TOL {
            report.violations.push(format!("alpha[{i}] = {a} is negative"));
        }
    }
    let sum: f64 = alpha.sum();
    if (sum - 1.0).abs() > PROB_TOL {
        report.violations.push(format!("alpha sums to {sum}, expected 1"));
    }

    let mut any_strict_row = false;
    for i in 0..g {
        if generator[[i, i]] >= 0.0 {
            report
                .violations
                .push(format!("G[{i},{i}] = {} must be strictly negative", generator[[i, i]]));
        }
        let mut row_sum = 0.0;
        for j in 0..g {
            if i != j && generator[[i, j]] < 0.0 {
                report.violations.push(format!(
                    "G[{i},{j}] = {} must be nonnegative off the diagonal",
                    generator[[i, j]]
                ));
            }
            row_sum += generator[[i, j]];
        }
        if row_sum > PROB_TOL * scale {
            report.violations.push(format!("row {i} of G sums to {row_sum} > 0"));
        }
        if row_sum < -PROB_TOL * scale {
            any_strict_row = true;
        }
    }
    if !any_strict_row {
        report.violations.push("no row of G has a strictly negative sum".into());
    }

    match generator.clone().eig() {
        Ok((eigs, _)) => {
            for ev in eigs.iter() {
                if ev.re > -EIG_TOL * scale {
                    report
                        .violations
                        .push(format!("eigenvalue {ev} of G is not strictly in Re < 0"));
                }
            }
        }
        Err(e) => {
            return Err(Error::Conditioning(format!("eigenvalue computation for G failed: {e}")))
        }
    }

    Ok(report)
}

impl PhaseType {
    /// Build a validated `PH(G, alpha)`.
    pub fn new(alpha: Array1<f64>, generator: Array2<f64>) -> Result<Self> {
        let report = validate(&alpha, &generator)?;
        if !report.is_valid() {
            return Err(Error::InvalidPhaseType(report.violations.join("; ")));
        }
        Ok(Self { alpha, generator })
    }

    /// Exponential distribution with the given rate.
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::erlang(rate, 1)
    }

    /// Erlang distribution with rate `r` and `k` stages: bidiagonal `G` with
    /// `-r` on the diagonal and `r` along the chain, `alpha` on the entry
    /// state.
    pub fn erlang(rate: f64, k: usize) -> Result<Self> {
        if rate <= 0.0 {
            return Err(Error::Domain(format!("erlang rate must be positive, got {rate}")));
        }
        if k == 0 {
            return Err(Error::Domain("erlang stage count must be >= 1".into()));
        }
        let mut g = Array2::zeros((k, k));
        for i in 0..k {
            g[[i, i]] = -rate;
            if i + 1 < k {
                g[[i, i + 1]] = rate;
            }
        }
        let mut alpha = Array1::zeros(k);
        alpha[0] = 1.0;
        Self::new(alpha, g)
    }

    /// Hypoexponential distribution: a chain of stages with independent
    /// rates and certain continuation.
    pub fn hypoexponential(rates: &[f64]) -> Result<Self> {
        let ones = vec![1.0; rates.len()];
        Self::coxian(rates, &ones)
    }

    /// Coxian distribution: per-stage rate `r_i` and continuation
    /// probability `q_i` (the process exits with probability `1 - q_i`
    /// after stage `i`). The last continuation entry is ignored apart from
    /// range validation, since the final stage always absorbs.
    pub fn coxian(rates: &[f64], continuation: &[f64]) -> Result<Self> {
        let k = rates.len();
        if k == 0 {
            return Err(Error::Domain("coxian needs at least one stage".into()));
        }
        if continuation.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "coxian: {k} rates but {} continuation probabilities",
                continuation.len()
            )));
        }
        for (i, &r) in rates.iter().enumerate() {
            if r <= 0.0 {
                return Err(Error::Domain(format!("coxian rate[{i}] must be positive, got {r}")));
            }
        }
        for (i, &q) in continuation.iter().enumerate() {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::Domain(format!(
                    "coxian continuation[{i}] must lie in (0, 1], got {q}"
                )));
            }
        }
        let mut g = Array2::zeros((k, k));
        for i in 0..k {
            g[[i, i]] = -rates[i];
            if i + 1 < k {
                g[[i, i + 1]] = continuation[i] * rates[i];
            }
        }
        let mut alpha = Array1::zeros(k);
        alpha[0] = 1.0;
        Self::new(alpha, g)
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &Array1<f64> {
        &self.alpha
    }

    pub fn generator(&self) -> &Array2<f64> {
        &self.generator
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        validate(&self.alpha, &self.generator)
    }

    /// Density `f`, distribution `F`, and survival `S` at `t >= 0`:
    /// `f = alphaᵀ e^{tG} (-G 1)`, `S = alphaᵀ e^{tG} 1`, `F = 1 - S`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64, f64)> {
        if t < 0.0 {
            return Err(Error::Domain(format!("phase-type eval at negative time {t}")));
        }
        let g = self.dim();
        let e = expm(&complexify(&self.generator.view()).mapv(|v| v * C64::new(t, 0.0)).view())?;
        let ones = Array1::from_elem(g, 1.0);
        let exit_rate = -self.generator.dot(&ones); // -G 1
        let mut survival = 0.0;
        let mut density = 0.0;
        for i in 0..g {
            let mut row_sum = C64::new(0.0, 0.0);
            let mut row_exit = C64::new(0.0, 0.0);
            for j in 0..g {
                row_sum += e[[i, j]];
                row_exit += e[[i, j]] * C64::new(exit_rate[j], 0.0);
            }
            survival += self.alpha[i] * row_sum.re;
            density += self.alpha[i] * row_exit.re;
        }
        Ok((density, 1.0 - survival, survival))
    }

    /// Mean absorption time `-alphaᵀ G⁻¹ 1`, i.e. the integral of the
    /// survival function over `[0, ∞)`.
    pub fn mean(&self) -> Result<f64> {
        let ones = Array1::from_elem(self.dim(), 1.0);
        let z = self
            .generator
            .solve(&ones)
            .map_err(|e| Error::Conditioning(format!("G is numerically singular: {e}")))?;
        let mean = -self.alpha.dot(&z);
        if !mean.is_finite() || mean <= 0.0 {
            return Err(Error::Conditioning(format!(
                "mean evaluated to {mean}; G is too ill-conditioned"
            )));
        }
        Ok(mean)
    }

    /// Laplace transform of the survival function,
    /// `alphaᵀ (lambda I - G)⁻¹ 1`. At `lambda = 0` this equals the mean.
    pub fn laplace_survival(&self, lambda: C64) -> Result<C64> {
        let g = self.dim();
        let scale = self.generator.iter().map(|x| x.abs()).fold(1.0, f64::max);
        if let Ok((eigs, _)) = self.generator.clone().eig() {
            for ev in eigs.iter() {
                if (lambda - ev).norm() < 1e-12 * scale.max(lambda.norm()) {
                    return Err(Error::Singular(format!(
                        "lambda = {lambda} coincides with eigenvalue {ev} of G"
                    )));
                }
            }
        }
        let mut m = complexify(&self.generator.view()).mapv(|v| -v);
        for i in 0..g {
            m[[i, i]] += lambda;
        }
        let ones = Array1::from_elem(g, C64::new(1.0, 0.0));
        let z = m
            .solve(&ones)
            .map_err(|e| Error::Singular(format!("(lambda I - G) is singular: {e}")))?;
        Ok(self.alpha.iter().zip(z.iter()).map(|(&a, &zi)| zi * a).sum())
    }
}
