//! Solver toolkit for linear distributed-delay differential equations with
//! phase-type memory kernels.
//!
//! The pipeline has three legs:
//!
//! 1. [`phasetype`] defines the kernel class `PH(G, alpha)` and [`lct`]
//!    compiles a [`lct::DelaySystem`] into an augmented linear ODE
//!    `dy/dt = C y` by trading the convolution integral for auxiliary
//!    variables (the generalized linear chain trick).
//! 2. [`stability`] decides whether the augmented operator is semi-stable
//!    and whether its Hermitian part is negative semi-definite, the two
//!    applicability gates for the quantum embedding.
//! 3. [`schrodingerizer`] classically emulates the Schrödingerization
//!    algorithm on the augmented ODE: warped phase transform, Fourier-mode
//!    discretization, mode-decoupled unitary evolution, and recovery of the
//!    solution from the positive half of the auxiliary axis.
//!
//! [`reference`] provides brute-force oracles (a direct history integrator
//! for the delay equation and a dense matrix-exponential ODE path) and
//! [`models`] builds the two shipped applications: generalized master
//! equations and the vectorized Redfield dephasing equation.

pub mod error;
pub mod lct;
pub mod linalg;
pub mod models;
pub mod phasetype;
pub mod problem;
pub mod reference;
pub mod report;
pub mod schrodingerizer;
pub mod sparse;
pub mod stability;

pub use error::{Error, Result};

/// `f64` complex scalar used throughout.
pub type C64 = num_complex::Complex64;
