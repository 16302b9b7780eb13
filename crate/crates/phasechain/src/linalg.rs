//! Dense complex linear-algebra helpers: matrix exponential, Hermitian
//! splitting, Kronecker products, and norms.

use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{Eigh, Inverse, OperationNorm, UPLO};

use crate::error::{Error, Result};
use crate::C64;

/// Entry-wise max norm.
pub fn max_norm(m: &ArrayView2<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Largest number of nonzero entries (|a_ij| > tol) in any row.
pub fn max_row_nnz(m: &ArrayView2<C64>, tol: f64) -> usize {
    m.rows().into_iter().map(|r| r.iter().filter(|v| v.norm() > tol).count()).max().unwrap_or(0)
}

/// Promote a real matrix to complex.
pub fn complexify(m: &ArrayView2<'_, f64>) -> Array2<C64> {
    m.mapv(|x| C64::new(x, 0.0))
}

/// Split `C = H1 + i H2` into its Hermitian part `H1 = (C + C†)/2` and
/// `H2 = (C − C†)/(2i)`, both Hermitian.
pub fn hermitian_split(c: &ArrayView2<C64>) -> (Array2<C64>, Array2<C64>) {
    let adj = adjoint(c);
    let h1 = (c.to_owned() + &adj) / C64::new(2.0, 0.0);
    let h2 = (c.to_owned() - &adj) / C64::new(0.0, 2.0);
    (h1, h2)
}

pub fn adjoint(m: &ArrayView2<C64>) -> Array2<C64> {
    m.t().mapv(|v| v.conj())
}

/// Deviation from Hermitian symmetry, `max |m − m†|`.
pub fn hermitian_defect(m: &ArrayView2<C64>) -> f64 {
    let adj = adjoint(m);
    max_norm(&(m.to_owned() - &adj).view())
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eig_hermitian(m: &ArrayView2<C64>) -> Result<f64> {
    let (w, _) = m.to_owned().eigh(UPLO::Lower)?;
    w.iter().copied().fold(None::<f64>, |acc, x| Some(acc.map_or(x, |a| a.max(x))))
        .ok_or_else(|| Error::DimensionMismatch("eigh of empty matrix".into()))
}

/// Eigendecomposition of a Hermitian matrix with the usual convention:
/// eigenvectors are the columns of `v`, so `m = v · diag(w) · v†`. (The
/// backend hands back the conjugated basis for complex input; this
/// normalizes it.)
pub fn eigh_hermitian(m: &ArrayView2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let (w, v) = m.to_owned().eigh(UPLO::Lower)?;
    Ok((w, v.mapv(|x| x.conj())))
}

/// Spectral norm of a Hermitian matrix (largest |eigenvalue|).
pub fn spectral_norm_hermitian(m: &ArrayView2<C64>) -> Result<f64> {
    let (w, _) = m.to_owned().eigh(UPLO::Lower)?;
    Ok(w.iter().map(|x| x.abs()).fold(0.0, f64::max))
}

pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

// Padé coefficients and scaling thresholds for the [13/13] approximant
// (Higham 2005, Table 2.3).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling-and-squaring with a [13/13] Padé
/// approximant. Dense, intended for the modest matrix sizes in this crate.
pub fn expm(a: &ArrayView2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!("expm of {}x{} matrix", n, a.ncols())));
    }
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    let norm = a.opnorm_one().map_err(Error::Linalg)?;
    let squarings = if norm > THETA13 {
        ((norm / THETA13).log2().ceil() as i32).max(0) as u32
    } else {
        0
    };
    let scale = C64::new((0.5f64).powi(squarings as i32), 0.0);
    let a_s = a.mapv(|v| v * scale);

    let ident: Array2<C64> = Array2::eye(n);
    let a2 = a_s.dot(&a_s);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let b = |i: usize| C64::new(PADE13[i], 0.0);
    // u = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let w1 = a6.mapv(|v| v * b(13)) + &a4.mapv(|v| v * b(11)) + &a2.mapv(|v| v * b(9));
    let w2 = a6.mapv(|v| v * b(7)) + &a4.mapv(|v| v * b(5)) + &a2.mapv(|v| v * b(3))
        + &ident.mapv(|v| v * b(1));
    let u = a_s.dot(&(a6.dot(&w1) + &w2));
    // v = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let z1 = a6.mapv(|v| v * b(12)) + &a4.mapv(|v| v * b(10)) + &a2.mapv(|v| v * b(8));
    let z2 = a6.mapv(|v| v * b(6)) + &a4.mapv(|v| v * b(4)) + &a2.mapv(|v| v * b(2))
        + &ident.mapv(|v| v * b(0));
    let v = a6.dot(&z1) + &z2;

    let denom = &v - &u;
    let numer = &v + &u;
    let denom_inv = denom
        .inv()
        .map_err(|e| Error::Numerical(format!("expm Padé denominator is singular: {e}")))?;
    let mut r = denom_inv.dot(&numer);
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}

/// `exp(a) x` without forming the full exponential more than once; helper
/// for the dense reference path.
pub fn expm_mul(a: &ArrayView2<C64>, x: &Array1<C64>) -> Result<Array1<C64>> {
    Ok(expm(a)?.dot(x))
}
