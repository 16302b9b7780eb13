//! Shared helpers for the integration suites: seeded random systems and an
//! independent characteristic-root probe.
#![allow(dead_code)] // not every suite uses every helper

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use phasechain::lct::{augment, DelaySystem, KernelTerm, Normalization};
use phasechain::phasetype::PhaseType;
use phasechain::stability::{dde_characteristic, semistability_of_matrix};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Random Erlang or Coxian kernel with at most 3 phases.
pub fn random_kernel(rng: &mut ChaCha8Rng) -> PhaseType {
    if rng.gen_bool(0.5) {
        let rate = rng.gen_range(0.6..2.5);
        let k = rng.gen_range(1..=3);
        PhaseType::erlang(rate, k).expect("valid erlang")
    } else {
        let phases = rng.gen_range(2..=3);
        let rates: Vec<f64> = (0..phases).map(|_| rng.gen_range(0.6..2.5)).collect();
        let continuation: Vec<f64> =
            (0..phases).map(|_| rng.gen_range(0.3..0.9)).collect();
        PhaseType::coxian(&rates, &continuation).expect("valid coxian")
    }
}

fn random_terms(rng: &mut ChaCha8Rng, dim: usize) -> Vec<KernelTerm> {
    loop {
        let mut terms = Vec::new();
        for row in 0..dim {
            for col in 0..dim {
                if rng.gen_bool(0.55) {
                    terms.push(KernelTerm {
                        row,
                        col,
                        weight: c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.1..0.1)),
                        kernel: random_kernel(rng),
                    });
                }
            }
        }
        if !terms.is_empty() {
            return terms;
        }
    }
}

/// Random semi-stable delay system (N ≤ 3, g ≤ 3) whose augmented operator
/// also has a negative semidefinite Hermitian part, so the Schrödingerized
/// pipeline accepts it without a shift. Built by pushing the drift diagonal
/// down until both conditions hold.
pub fn random_semistable_system(rng: &mut ChaCha8Rng) -> DelaySystem {
    let dim = rng.gen_range(1..=3);
    let terms = random_terms(rng, dim);
    let mut offdiag = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            if i != j && rng.gen_bool(0.5) {
                offdiag.push((i, j, c(rng.gen_range(-0.3..0.3), 0.0)));
            }
        }
    }
    let mut drop = 1.0;
    for _ in 0..60 {
        let mut a = offdiag.clone();
        for i in 0..dim {
            a.push((i, i, c(-drop, 0.0)));
        }
        let sys = DelaySystem::new(dim, a, terms.clone(), Normalization::Auto)
            .expect("valid system");
        let dense = augment(&sys).expect("augmentable").cbar.to_dense();
        let report = semistability_of_matrix(&dense.view()).expect("analyzable");
        // padding rows contribute exact-zero eigenvalues to the Hermitian
        // part, so the bound is a hair above zero
        if report.semi_stable && report.h1_max_eig <= 1e-12 {
            return sys;
        }
        drop *= 1.5;
    }
    panic!("failed to stabilize a random suite system");
}

/// Random system with a planted right-half-plane characteristic root: one
/// drift diagonal entry is raised until the eigenvalue test reports
/// instability.
pub fn planted_unstable_system(rng: &mut ChaCha8Rng) -> DelaySystem {
    let base = random_semistable_system(rng);
    let dim = base.dim();
    let mut lift = 0.5;
    for _ in 0..60 {
        let mut a: Vec<(usize, usize, C64)> = base.a().triplets().to_vec();
        a.push((0, 0, c(lift, 0.0)));
        let sys = DelaySystem::new(
            dim,
            a,
            base.terms().to_vec(),
            Normalization::Auto,
        )
        .expect("valid system");
        let dense = augment(&sys).expect("augmentable").cbar.to_dense();
        let report = semistability_of_matrix(&dense.view()).expect("analyzable");
        if report.max_real_part > 1e-3 {
            return sys;
        }
        lift *= 1.6;
    }
    panic!("failed to destabilize a random suite system");
}

/// Number of characteristic roots with `Re λ > sigma`, by the argument
/// principle over a rectangle enclosing the root region. Independent of the
/// augmented-matrix spectrum: works directly on
/// `det(λI − A − Σ w L_S(λ))`.
pub fn rhp_root_count(sys: &DelaySystem, sigma: f64) -> i32 {
    // any root with Re λ ≥ 0 satisfies |λ| ≤ ‖A‖ + Σ|w_eff| (unit-mass
    // kernels have |L_S| ≤ 1 in the right half-plane)
    let a_norm: f64 = {
        let dense: Array2<C64> = sys.a().to_dense();
        dense
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let w_sum: f64 =
        (0..sys.terms().len()).map(|i| sys.effective_weight(i).norm()).sum();
    let r = a_norm + w_sum + 1.0;

    let corners = [
        c(sigma, -r),
        c(sigma, r),
        c(r, r),
        c(r, -r),
        c(sigma, -r),
    ];
    let per_edge = 6000;
    let mut total = 0.0f64;
    let mut prev: Option<C64> = None;
    for w in corners.windows(2) {
        for k in 0..per_edge {
            let t = k as f64 / per_edge as f64;
            let lam = w[0] + (w[1] - w[0]) * c(t, 0.0);
            let f = dde_characteristic(sys, lam).expect("characteristic evaluation");
            if let Some(p) = prev {
                total += (f / p).arg();
            }
            prev = Some(f);
        }
    }
    // close the contour
    let f0 = dde_characteristic(sys, corners[0]).expect("characteristic evaluation");
    total += (f0 / prev.expect("contour nonempty")).arg();
    (total / (2.0 * std::f64::consts::PI)).round() as i32
}
