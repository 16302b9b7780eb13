//! Problem-spec documents: a TOML schema describing either an inline delay
//! system or one of the built-in model families, plus run parameters.
//!
//! Schema (version 1):
//!
//! ```toml
//! schema_version = 1
//!
//! # Exactly one of [system] or [model.*] must be present.
//! [system]
//! dim = 1
//! a = [{ row = 0, col = 0, re = -1.0 }]          # sparse triplets, im defaults to 0
//!
//! [[system.kernel]]
//! row = 0
//! col = 0
//! weight = -0.5                                   # or [re, im]
//! family = "erlang"                               # erlang | exponential |
//! rate = 2.0                                      # hypoexponential | coxian | raw
//! k = 3
//!
//! [run]
//! method = "lct-ode"                              # dde-direct | lct-ode | schrodingerize
//! t_end = 5.0
//! step = 0.01
//! x0 = [1.0]                                      # optionally x0_im
//! ```
//!
//! Kernel families and their parameters:
//! - `exponential`: `rate`
//! - `erlang`: `rate`, `k`
//! - `hypoexponential`: `rates`
//! - `coxian`: `rates`, `continuation`
//! - `raw`: `alpha`, `generator` (row-major)
//!
//! Model sections:
//!
//! ```toml
//! [model.gme]
//! n_states = 2
//! rates = [[-1.0, 2.0], [1.0, -2.0]]              # generator-style, columns sum to 0
//! [[model.gme.kernel]]
//! row = 1
//! col = 0
//! family = "erlang"
//! rate = 3.0
//! k = 2
//!
//! [model.redfield]
//! hamiltonian_re = [[0.5, 0.0], [0.0, -0.5]]      # hamiltonian_im optional
//! [[model.redfield.coupling]]
//! re = [[1.0, 0.0], [0.0, -1.0]]                  # im optional
//! [[model.redfield.correlation]]
//! m = 0
//! n = 0
//! [[model.redfield.correlation.component]]
//! weight = 0.1
//! family = "exponential"
//! rate = 4.0
//! ```
//!
//! For `model.redfield` the run section takes `rho0_re` / `rho0_im` matrices
//! instead of `x0`.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Deserialize;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lct::{DelaySystem, KernelTerm, Normalization};
use crate::models::{
    build_gme, build_redfield_dephasing, vec_density, CorrelationComponent, GmeSpec, RedfieldSpec,
};
use crate::phasetype::PhaseType;

/// A located validation problem: `path` is a dotted/indexed position in the
/// document (e.g. `system.kernel[0]`).
#[derive(Debug, Clone)]
pub struct SpecIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SpecIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn issues_to_error(issues: Vec<SpecIssue>) -> Error {
    let joined = issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ");
    Error::Spec(joined)
}

/// A complex scalar in TOML: either a bare float or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Cx {
    Real(f64),
    Pair([f64; 2]),
}

impl Cx {
    pub fn c64(self) -> C64 {
        match self {
            Cx::Real(re) => C64::new(re, 0.0),
            Cx::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    row: usize,
    col: usize,
    #[serde(default)]
    re: f64,
    #[serde(default)]
    im: f64,
}

/// Parameters shared by every place a kernel can appear.
#[derive(Debug, Clone, Deserialize)]
struct KernelParams {
    family: String,
    rate: Option<f64>,
    k: Option<usize>,
    rates: Option<Vec<f64>>,
    continuation: Option<Vec<f64>>,
    alpha: Option<Vec<f64>>,
    generator: Option<Vec<Vec<f64>>>,
}

impl KernelParams {
    fn build(&self, path: &str, issues: &mut Vec<SpecIssue>) -> Option<PhaseType> {
        let fail = |issues: &mut Vec<SpecIssue>, msg: String| {
            issues.push(SpecIssue { path: path.to_string(), message: msg });
            None
        };
        let result = match self.family.as_str() {
            "exponential" => match self.rate {
                Some(r) => PhaseType::exponential(r),
                None => return fail(issues, "family 'exponential' requires `rate`".into()),
            },
            "erlang" => match (self.rate, self.k) {
                (Some(r), Some(k)) => PhaseType::erlang(r, k),
                _ => return fail(issues, "family 'erlang' requires `rate` and `k`".into()),
            },
            "hypoexponential" => match &self.rates {
                Some(rs) => PhaseType::hypoexponential(rs),
                None => return fail(issues, "family 'hypoexponential' requires `rates`".into()),
            },
            "coxian" => match (&self.rates, &self.continuation) {
                (Some(rs), Some(cs)) => PhaseType::coxian(rs, cs),
                _ => {
                    return fail(issues, "family 'coxian' requires `rates` and `continuation`".into())
                }
            },
            "raw" => match (&self.alpha, &self.generator) {
                (Some(a), Some(g)) => build_raw(a, g),
                _ => return fail(issues, "family 'raw' requires `alpha` and `generator`".into()),
            },
            other => return fail(issues, format!("unknown kernel family '{other}'")),
        };
        match result {
            Ok(ph) => Some(ph),
            Err(e) => fail(issues, e.to_string()),
        }
    }
}

fn build_raw(alpha: &[f64], generator: &[Vec<f64>]) -> Result<PhaseType> {
    let g = alpha.len();
    if generator.len() != g || generator.iter().any(|row| row.len() != g) {
        return Err(Error::Spec(format!("`generator` must be a {g}x{g} row-major matrix")));
    }
    let a = Array1::from_vec(alpha.to_vec());
    let mut gm = Array2::zeros((g, g));
    for (i, row) in generator.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            gm[[i, j]] = v;
        }
    }
    PhaseType::new(a, gm)
}

#[derive(Debug, Clone, Deserialize)]
struct KernelDoc {
    row: usize,
    col: usize,
    weight: Cx,
    #[serde(flatten)]
    params: KernelParams,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    dim: usize,
    #[serde(default)]
    a: Vec<EntryDoc>,
    #[serde(default)]
    kernel: Vec<KernelDoc>,
}

#[derive(Debug, Clone, Deserialize)]
struct GmeKernelDoc {
    row: usize,
    col: usize,
    #[serde(flatten)]
    params: KernelParams,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GmeDoc {
    n_states: usize,
    rates: Vec<Vec<f64>>,
    #[serde(default)]
    kernel: Vec<GmeKernelDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingDoc {
    re: Vec<Vec<f64>>,
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
struct ComponentDoc {
    weight: Cx,
    #[serde(flatten)]
    params: KernelParams,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrelationDoc {
    m: usize,
    n: usize,
    #[serde(default)]
    component: Vec<ComponentDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RedfieldDoc {
    hamiltonian_re: Vec<Vec<f64>>,
    hamiltonian_im: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    coupling: Vec<CouplingDoc>,
    #[serde(default)]
    correlation: Vec<CorrelationDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    gme: Option<GmeDoc>,
    redfield: Option<RedfieldDoc>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunDoc {
    method: Option<String>,
    t_end: Option<f64>,
    step: Option<f64>,
    times: Option<Vec<f64>>,
    eps_grid: Option<f64>,
    n_p: Option<usize>,
    allow_shift: Option<bool>,
    normalization: Option<String>,
    x0: Option<Vec<f64>>,
    x0_im: Option<Vec<f64>>,
    rho0_re: Option<Vec<Vec<f64>>>,
    rho0_im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    schema_version: Option<u32>,
    system: Option<SystemDoc>,
    model: Option<ModelDoc>,
    run: Option<RunDoc>,
}

/// Which solver a run requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    DdeDirect,
    LctOde,
    Schrodingerize,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::DdeDirect => "dde-direct",
            Method::LctOde => "lct-ode",
            Method::Schrodingerize => "schrodingerize",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dde-direct" => Ok(Method::DdeDirect),
            "lct-ode" => Ok(Method::LctOde),
            "schrodingerize" => Ok(Method::Schrodingerize),
            other => Err(Error::Spec(format!(
                "unknown method '{other}' (expected dde-direct, lct-ode, or schrodingerize)"
            ))),
        }
    }
}

/// Validated run parameters with defaults applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    pub t_end: f64,
    pub step: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub eps_grid: f64,
    pub n_p: Option<usize>,
    pub allow_shift: bool,
    pub normalization: Normalization,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::LctOde,
            t_end: 1.0,
            step: None,
            times: None,
            eps_grid: crate::schrodingerizer::DEFAULT_EPS_GRID,
            n_p: None,
            allow_shift: false,
            normalization: Normalization::Auto,
        }
    }
}

impl RunConfig {
    /// Output times: explicit list if given, else a uniform grid of `step`
    /// (falling back to 101 points over `[0, t_end]`).
    pub fn output_times(&self) -> Vec<f64> {
        if let Some(ts) = &self.times {
            return ts.clone();
        }
        let step = self.step.unwrap_or(self.t_end / 100.0);
        let n = (self.t_end / step).round() as usize;
        let n = n.max(1);
        (0..=n).map(|k| self.t_end * k as f64 / n as f64).collect()
    }
}

/// Where the compiled delay system came from.
#[derive(Debug, Clone)]
pub enum Source {
    Inline,
    Gme(GmeSpec),
    Redfield(RedfieldSpec),
}

impl Source {
    pub fn id(&self) -> &'static str {
        match self {
            Source::Inline => "system",
            Source::Gme(_) => "gme",
            Source::Redfield(_) => "redfield",
        }
    }
}

/// A fully validated problem: the compiled delay system, its provenance, an
/// optional initial state, and run parameters.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub system: DelaySystem,
    pub source: Source,
    pub x0: Option<Array1<C64>>,
    pub run: RunConfig,
}

/// Parse and validate a TOML problem document.
pub fn parse_spec(text: &str) -> Result<ProblemSpec> {
    parse_spec_with(text, None)
}

/// [`parse_spec`] with an externally supplied normalization mode (e.g. a
/// command-line flag) taking precedence over the document's `run` section.
pub fn parse_spec_with(
    text: &str,
    normalization_override: Option<Normalization>,
) -> Result<ProblemSpec> {
    let doc: ProblemDoc =
        toml::from_str(text).map_err(|e| Error::Spec(format!("document: {e}")))?;
    let mut issues = Vec::new();

    if let Some(v) = doc.schema_version {
        if v != 1 {
            issues.push(SpecIssue {
                path: "schema_version".into(),
                message: format!("unsupported schema version {v} (expected 1)"),
            });
        }
    }

    let run_doc = doc.run.clone().unwrap_or_default();
    let mut run = compile_run(&run_doc, &mut issues);
    if let Some(norm) = normalization_override {
        run.normalization = norm;
    }

    let model_kind = doc.model.as_ref().map(|m| (m.gme.is_some(), m.redfield.is_some()));
    let n_sources = doc.system.is_some() as usize
        + model_kind.map_or(0, |(g, r)| g as usize + r as usize);
    if n_sources != 1 {
        issues.push(SpecIssue {
            path: "document".into(),
            message: format!(
                "exactly one of [system], [model.gme], [model.redfield] must be present \
                 (found {n_sources})"
            ),
        });
        return Err(issues_to_error(issues));
    }

    let normalization = run.normalization;
    let (system, source, x0) = if let Some(sys_doc) = &doc.system {
        let sys = compile_system(sys_doc, normalization, &mut issues);
        let x0 = compile_x0(&run_doc, sys_doc.dim, &mut issues);
        (sys, Source::Inline, x0)
    } else {
        let model = doc.model.as_ref().unwrap();
        if let Some(gme_doc) = &model.gme {
            let (spec, sys) = compile_gme(gme_doc, &mut issues);
            let x0 = compile_x0(&run_doc, gme_doc.n_states, &mut issues);
            (sys, spec.map(Source::Gme).unwrap_or(Source::Inline), x0)
        } else {
            let rf_doc = model.redfield.as_ref().unwrap();
            let (spec, sys) = compile_redfield(rf_doc, &mut issues);
            let d = rf_doc.hamiltonian_re.len();
            let x0 = compile_rho0(&run_doc, d, &mut issues);
            (sys, spec.map(Source::Redfield).unwrap_or(Source::Inline), x0)
        }
    };

    match system {
        Some(system) if issues.is_empty() => Ok(ProblemSpec { system, source, x0, run }),
        _ => Err(issues_to_error(issues)),
    }
}

fn compile_run(doc: &RunDoc, issues: &mut Vec<SpecIssue>) -> RunConfig {
    let mut run = RunConfig::default();
    if let Some(m) = &doc.method {
        match Method::parse(m) {
            Ok(m) => run.method = m,
            Err(e) => issues.push(SpecIssue { path: "run.method".into(), message: e.to_string() }),
        }
    }
    if let Some(t) = doc.t_end {
        if t < 0.0 || !t.is_finite() {
            issues.push(SpecIssue {
                path: "run.t_end".into(),
                message: format!("must be finite and nonnegative, got {t}"),
            });
        } else {
            run.t_end = t;
        }
    }
    if let Some(h) = doc.step {
        if h <= 0.0 || !h.is_finite() {
            issues.push(SpecIssue {
                path: "run.step".into(),
                message: format!("must be finite and positive, got {h}"),
            });
        } else {
            run.step = Some(h);
        }
    }
    if let Some(ts) = &doc.times {
        if ts.windows(2).any(|w| w[1] <= w[0]) || ts.iter().any(|t| !t.is_finite() || *t < 0.0) {
            issues.push(SpecIssue {
                path: "run.times".into(),
                message: "must be finite, nonnegative, and strictly increasing".into(),
            });
        } else {
            run.times = Some(ts.clone());
        }
    }
    if let Some(e) = doc.eps_grid {
        if !(e > 0.0 && e < 1.0) {
            issues.push(SpecIssue {
                path: "run.eps_grid".into(),
                message: format!("must lie in (0, 1), got {e}"),
            });
        } else {
            run.eps_grid = e;
        }
    }
    run.n_p = doc.n_p;
    run.allow_shift = doc.allow_shift.unwrap_or(false);
    if let Some(n) = &doc.normalization {
        match n.as_str() {
            "auto" => run.normalization = Normalization::Auto,
            "strict" => run.normalization = Normalization::Strict,
            other => issues.push(SpecIssue {
                path: "run.normalization".into(),
                message: format!("unknown mode '{other}' (expected auto or strict)"),
            }),
        }
    }
    run
}

fn compile_x0(doc: &RunDoc, dim: usize, issues: &mut Vec<SpecIssue>) -> Option<Array1<C64>> {
    let re = doc.x0.as_ref()?;
    let im = doc.x0_im.clone().unwrap_or_else(|| vec![0.0; re.len()]);
    if re.len() != dim || im.len() != dim {
        issues.push(SpecIssue {
            path: "run.x0".into(),
            message: format!("expected {dim} components, got {} (re) / {} (im)", re.len(), im.len()),
        });
        return None;
    }
    Some(Array1::from_iter(re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i))))
}

fn compile_rho0(doc: &RunDoc, d: usize, issues: &mut Vec<SpecIssue>) -> Option<Array1<C64>> {
    let re = doc.rho0_re.as_ref()?;
    match parse_complex_matrix(re, doc.rho0_im.as_ref(), d) {
        Ok(rho) => match vec_density(&rho.view()) {
            Ok(v) => Some(v),
            Err(e) => {
                issues.push(SpecIssue { path: "run.rho0_re".into(), message: e.to_string() });
                None
            }
        },
        Err(msg) => {
            issues.push(SpecIssue { path: "run.rho0_re".into(), message: msg });
            None
        }
    }
}

fn parse_complex_matrix(
    re: &[Vec<f64>],
    im: Option<&Vec<Vec<f64>>>,
    d: usize,
) -> std::result::Result<Array2<C64>, String> {
    if re.len() != d || re.iter().any(|row| row.len() != d) {
        return Err(format!("expected a {d}x{d} matrix"));
    }
    let mut m = Array2::zeros((d, d));
    for (i, row) in re.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[[i, j]] = C64::new(v, 0.0);
        }
    }
    if let Some(im) = im {
        if im.len() != d || im.iter().any(|row| row.len() != d) {
            return Err(format!("imaginary part must also be {d}x{d}"));
        }
        for (i, row) in im.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[[i, j]] += C64::new(0.0, v);
            }
        }
    }
    Ok(m)
}

fn compile_system(
    doc: &SystemDoc,
    normalization: Normalization,
    issues: &mut Vec<SpecIssue>,
) -> Option<DelaySystem> {
    let before = issues.len();
    let mut a = Vec::with_capacity(doc.a.len());
    for (idx, e) in doc.a.iter().enumerate() {
        if e.row >= doc.dim || e.col >= doc.dim {
            issues.push(SpecIssue {
                path: format!("system.a[{idx}]"),
                message: format!("({}, {}) outside dimension {}", e.row, e.col, doc.dim),
            });
        } else {
            a.push((e.row, e.col, C64::new(e.re, e.im)));
        }
    }
    let mut terms = Vec::with_capacity(doc.kernel.len());
    for (idx, k) in doc.kernel.iter().enumerate() {
        let path = format!("system.kernel[{idx}]");
        if k.row >= doc.dim || k.col >= doc.dim {
            issues.push(SpecIssue {
                path,
                message: format!("({}, {}) outside dimension {}", k.row, k.col, doc.dim),
            });
            continue;
        }
        if let Some(kernel) = k.params.build(&path, issues) {
            terms.push(KernelTerm { row: k.row, col: k.col, weight: k.weight.c64(), kernel });
        }
    }
    if issues.len() > before {
        return None;
    }
    match DelaySystem::new(doc.dim, a, terms, normalization) {
        Ok(sys) => Some(sys),
        Err(e) => {
            issues.push(SpecIssue { path: "system".into(), message: e.to_string() });
            None
        }
    }
}

fn compile_gme(doc: &GmeDoc, issues: &mut Vec<SpecIssue>) -> (Option<GmeSpec>, Option<DelaySystem>) {
    let d = doc.n_states;
    if doc.rates.len() != d || doc.rates.iter().any(|row| row.len() != d) {
        issues.push(SpecIssue {
            path: "model.gme.rates".into(),
            message: format!("expected a {d}x{d} matrix"),
        });
        return (None, None);
    }
    let mut rates = Array2::zeros((d, d));
    for (i, row) in doc.rates.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            rates[[i, j]] = v;
        }
    }
    let mut kernels = BTreeMap::new();
    for (idx, k) in doc.kernel.iter().enumerate() {
        let path = format!("model.gme.kernel[{idx}]");
        if let Some(kernel) = k.params.build(&path, issues) {
            kernels.insert((k.row, k.col), kernel);
        }
    }
    let spec = GmeSpec { n_states: d, rates, kernels };
    match build_gme(&spec) {
        Ok(sys) => (Some(spec), Some(sys)),
        Err(e) => {
            issues.push(SpecIssue { path: "model.gme".into(), message: e.to_string() });
            (None, None)
        }
    }
}

fn compile_redfield(
    doc: &RedfieldDoc,
    issues: &mut Vec<SpecIssue>,
) -> (Option<RedfieldSpec>, Option<DelaySystem>) {
    let d = doc.hamiltonian_re.len();
    let h = match parse_complex_matrix(&doc.hamiltonian_re, doc.hamiltonian_im.as_ref(), d) {
        Ok(h) => h,
        Err(msg) => {
            issues.push(SpecIssue { path: "model.redfield.hamiltonian_re".into(), message: msg });
            return (None, None);
        }
    };
    let mut couplings = Vec::with_capacity(doc.coupling.len());
    for (idx, c) in doc.coupling.iter().enumerate() {
        match parse_complex_matrix(&c.re, c.im.as_ref(), d) {
            Ok(t) => couplings.push(t),
            Err(msg) => {
                issues.push(SpecIssue {
                    path: format!("model.redfield.coupling[{idx}]"),
                    message: msg,
                });
                return (None, None);
            }
        }
    }
    let mut correlations = BTreeMap::new();
    for (idx, corr) in doc.correlation.iter().enumerate() {
        let mut components = Vec::with_capacity(corr.component.len());
        for (cidx, comp) in corr.component.iter().enumerate() {
            let path = format!("model.redfield.correlation[{idx}].component[{cidx}]");
            if let Some(kernel) = comp.params.build(&path, issues) {
                components.push(CorrelationComponent { weight: comp.weight.c64(), kernel });
            }
        }
        correlations.insert((corr.m, corr.n), components);
    }
    if !issues.is_empty() {
        return (None, None);
    }
    let spec = RedfieldSpec { hamiltonian: h, couplings, correlations };
    match build_redfield_dephasing(&spec) {
        Ok(sys) => (Some(spec), Some(sys)),
        Err(e) => {
            issues.push(SpecIssue { path: "model.redfield".into(), message: e.to_string() });
            (None, None)
        }
    }
}
