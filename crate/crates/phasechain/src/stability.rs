//! Applicability gate for the Hamiltonian-simulation pipeline: semi-stability
//! of the augmented operator, the Schur-complement identity tying its
//! characteristic polynomial to the delay system's transcendental one, and
//! negative semi-definiteness of the Hermitian part.

use ndarray::{Array2, ArrayView2};
use ndarray_linalg::{Determinant, Eig, Inverse, SVD};

use crate::error::{Error, Result};
use crate::lct::{Blocks, DelaySystem};
use crate::linalg::{hermitian_split, max_eig_hermitian};
use crate::C64;

/// Tolerance on the largest eigenvalue real part.
pub const TOL_REAL: f64 = 1e-9;
/// Band around the imaginary axis within which eigenvalues are treated as
/// lying on it, and the clustering radius for multiplicity counting.
pub const TOL_AXIS: f64 = 1e-7;
/// Margin added to a positive Hermitian-part eigenvalue when recommending a
/// stabilizing shift.
pub const SHIFT_MARGIN: f64 = 1e-10;

/// Outcome of the spectral gate.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub eigenvalues: Vec<C64>,
    pub max_real_part: f64,
    /// Imaginary-axis eigenvalue clusters: (representative value, algebraic
    /// multiplicity, geometric multiplicity).
    pub imaginary_axis_defects: Vec<(C64, usize, usize)>,
    pub semi_stable: bool,
    /// Largest eigenvalue of the Hermitian part (C + C†)/2.
    pub h1_max_eig: f64,
    /// Recommended shift c ≥ 0 such that C − cI has H₁ ⪯ 0.
    pub shift_applied: f64,
}

/// Semi-stability test: every eigenvalue has Re ≤ 0 and imaginary-axis
/// eigenvalues are semi-simple. Geometric multiplicities come from the
/// numerical rank of λI − C (singular values above `1e-9·‖C‖₂`), computed
/// per cluster of axis eigenvalues within [`TOL_AXIS`] of each other.
pub fn semistability_of_matrix(c: &ArrayView2<C64>) -> Result<StabilityReport> {
    let n = c.nrows();
    if n != c.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", n, c.ncols())));
    }
    if c.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let (eigs, _) = c.eig().map_err(|e| {
        Error::Numerical(format!("eigen-solve failed on a {n}x{n} operator: {e}"))
    })?;
    let eigenvalues: Vec<C64> = eigs.iter().copied().collect();
    let max_real_part = eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);

    let norm2 = spectral_norm(c)?;
    let rank_tol = 1e-9 * norm2.max(1.0);

    // cluster the near-axis eigenvalues by imaginary part
    let mut axis: Vec<C64> = eigenvalues.iter().copied().filter(|l| l.re.abs() <= TOL_AXIS).collect();
    axis.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for l in axis {
        match clusters.last_mut() {
            Some(cl) if (l.im - cl.last().unwrap().im).abs() <= TOL_AXIS => cl.push(l),
            _ => clusters.push(vec![l]),
        }
    }

    let mut defects = Vec::new();
    let mut all_semisimple = true;
    for cl in &clusters {
        let rep = cl.iter().sum::<C64>() / C64::new(cl.len() as f64, 0.0);
        let alg = cl.len();
        let mut shifted = c.mapv(|v| -v);
        for i in 0..n {
            shifted[[i, i]] += rep;
        }
        let (_, sv, _) = shifted
            .svd(false, false)
            .map_err(|e| Error::Numerical(format!("SVD failed during rank test: {e}")))?;
        let rank = sv.iter().filter(|&&s| s > rank_tol).count();
        let geo = n - rank;
        if geo != alg {
            all_semisimple = false;
        }
        defects.push((rep, alg, geo));
    }

    let (h1, _) = hermitian_split(c);
    let h1_max_eig = max_eig_hermitian(&h1.view())?;
    let shift = recommended_shift(h1_max_eig);

    Ok(StabilityReport {
        eigenvalues,
        max_real_part,
        imaginary_axis_defects: defects,
        semi_stable: max_real_part <= TOL_REAL && all_semisimple,
        h1_max_eig,
        shift_applied: shift,
    })
}

/// Largest eigenvalue of the Hermitian part `H₁ = (C + C†)/2` and the
/// recommended stabilizing shift for it.
pub fn check_h1_negativity(c: &ArrayView2<C64>) -> Result<(f64, f64)> {
    let (h1, _) = hermitian_split(c);
    let lmax = max_eig_hermitian(&h1.view())?;
    Ok((lmax, recommended_shift(lmax)))
}

fn recommended_shift(h1_max_eig: f64) -> f64 {
    if h1_max_eig > 0.0 {
        h1_max_eig + SHIFT_MARGIN
    } else {
        0.0
    }
}

/// The delay system's characteristic function `det(λI − A − K̂(λ))`, with
/// `K̂_ij(λ)` the sum of effective-weight-scaled Laplace transforms of the
/// kernel survival functions feeding entry (i, j).
pub fn dde_characteristic(sys: &DelaySystem, lambda: C64) -> Result<C64> {
    let n = sys.dim();
    let mut m = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = lambda;
    }
    for &(r, c, v) in sys.a().triplets() {
        m[[r, c]] -= v;
    }
    for (idx, term) in sys.terms().iter().enumerate() {
        let hat = term.kernel.laplace_survival(lambda)?;
        m[[term.row, term.col]] -= sys.effective_weight(idx) * hat;
    }
    m.det().map_err(|e| Error::Numerical(format!("determinant failed: {e}")))
}

/// One λ sample of the Schur-complement identity check.
#[derive(Debug, Clone)]
pub struct IdentitySample {
    pub lambda: C64,
    pub lhs: C64,
    pub rhs: C64,
    pub relative_residual: f64,
}

/// Result of [`check_characteristic_identity`].
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub samples: Vec<IdentitySample>,
    /// Samples too close to an eigenvalue of G′, excluded from the check.
    pub skipped: Vec<C64>,
    pub pass: bool,
}

/// Residual tolerance for the Schur identity check.
pub const IDENTITY_TOL: f64 = 1e-8;

/// Verifies `det(λI − C) = det(λI − G′) · det(λI − A − B′(λI − G′)⁻¹E)` on
/// the unpadded block operator, sample by sample. Samples within `1e-6` of
/// an eigenvalue of G′ are skipped and reported rather than failed.
pub fn check_characteristic_identity(blocks: &Blocks, samples: &[C64]) -> Result<IdentityReport> {
    let n = blocks.n;
    let m = blocks.m;
    let c = blocks.to_dense_c();
    let gprime = blocks.gprime.to_dense();
    let a = blocks.a.to_dense();
    let bprime = blocks.bprime.to_dense();
    let e = blocks.e.to_dense();
    let (g_eigs, _) = gprime
        .eig()
        .map_err(|err| Error::Numerical(format!("eigen-solve of G' failed: {err}")))?;

    let mut out = IdentityReport { samples: Vec::new(), skipped: Vec::new(), pass: true };
    for &lambda in samples {
        if g_eigs.iter().any(|&mu| (lambda - mu).norm() < 1e-6) {
            out.skipped.push(lambda);
            continue;
        }
        let mut full = c.mapv(|v| -v);
        for i in 0..n + m {
            full[[i, i]] += lambda;
        }
        let lhs = full.det().map_err(|e| Error::Numerical(format!("det failed: {e}")))?;

        let mut g_lambda = gprime.mapv(|v| -v);
        for i in 0..m {
            g_lambda[[i, i]] += lambda;
        }
        let det_g = g_lambda.det().map_err(|e| Error::Numerical(format!("det failed: {e}")))?;
        let g_inv = g_lambda
            .inv()
            .map_err(|e| Error::Singular(format!("λI − G' not invertible: {e}")))?;
        let mut schur = a.mapv(|v| -v) - bprime.dot(&g_inv).dot(&e);
        for i in 0..n {
            schur[[i, i]] += lambda;
        }
        let det_s = schur.det().map_err(|e| Error::Numerical(format!("det failed: {e}")))?;
        let rhs = det_g * det_s;

        let scale = lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE);
        let residual = (lhs - rhs).norm() / scale;
        if residual > IDENTITY_TOL {
            out.pass = false;
        }
        out.samples.push(IdentitySample { lambda, lhs, rhs, relative_residual: residual });
    }
    Ok(out)
}

fn spectral_norm(c: &ArrayView2<C64>) -> Result<f64> {
    let (_, sv, _) = c
        .to_owned()
        .svd(false, false)
        .map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?;
    Ok(sv.iter().copied().fold(0.0, f64::max))
}
