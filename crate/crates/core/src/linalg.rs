//! Dense complex linear algebra used by the feasibility test.
//!
//! Matrices are `nalgebra::DMatrix<Complex<f64>>`. Vectorization is
//! column-major throughout, so that `vec(A X B) = (Bᵀ ⊗ A) vec(X)` holds
//! literally.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix dimensions overflow: {0}")]
    DimensionOverflow(String),
    #[error("cannot draw {cols} orthonormal columns in dimension {rows}")]
    TooManyColumns { rows: usize, cols: usize },
    #[error("right-hand side has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// Seed of a reproducible random stream.
///
/// Sub-seeds derived with [`RandomSeed::derive`] let independent pieces of
/// work (edges, trials, repetitions) draw from disjoint streams, so results do
/// not depend on evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct RandomSeed(pub u64);

impl RandomSeed {
    pub const DEFAULT: RandomSeed = RandomSeed(0x1A_FEA5_1B1E);

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Deterministic child seed for the stream labelled `tag`.
    pub fn derive(self, tag: u64) -> RandomSeed {
        RandomSeed(splitmix64(splitmix64(self.0) ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
    }
}

impl Default for RandomSeed {
    fn default() -> Self {
        Self::DEFAULT
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Machine-precision rank tolerance, relative to the largest singular value.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols).max(1) as f64 * f64::EPSILON
}

/// One sample with independent standard normal real and imaginary parts.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    // Filled column by column; the draw order is part of the reproducibility contract.
    let mut m = ComplexMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

pub fn is_finite(a: &ComplexMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Kronecker product; block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    let (Some(rows), Some(cols)) = (rows, cols) else {
        return Err(LinalgError::DimensionOverflow(format!(
            "{}x{} kron {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    };
    if rows.checked_mul(cols).is_none() {
        return Err(LinalgError::DimensionOverflow(format!("{rows}x{cols}")));
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let s = a[(i, j)];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            out.view_mut((i * b.nrows(), j * b.ncols()), b.shape())
                .zip_apply(b, |o, x| *o = s * x);
        }
    }
    Ok(out)
}

/// The `mn x mn` permutation `K` with `K vec(A) = vec(Aᵀ)` for every `m x n` matrix `A`.
pub fn commutation_matrix(m: usize, n: usize) -> ComplexMatrix {
    let mut k = ComplexMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..n {
            k[(j + n * i, i + m * j)] = C64::new(1.0, 0.0);
        }
    }
    k
}

/// Column-major stacking into a single column.
pub fn vec(a: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &[C64], rows: usize, cols: usize) -> ComplexMatrix {
    assert_eq!(v.len(), rows * cols, "unvec length mismatch");
    ComplexMatrix::from_column_slice(rows, cols, v)
}

/// Haar-distributed matrix with orthonormal columns (`R* R = I_b`).
///
/// Orthonormalizes an i.i.d. complex Gaussian matrix with a QR factorization
/// whose `R` diagonal is rotated onto the positive reals.
pub fn random_stiefel<R: Rng + ?Sized>(a: usize, b: usize, rng: &mut R) -> Result<ComplexMatrix, LinalgError> {
    if a < b {
        return Err(LinalgError::TooManyColumns { rows: a, cols: b });
    }
    let g = gaussian_matrix(a, b, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..b {
        let d = r[(j, j)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / C64::new(norm, 0.0);
            q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
    }
    Ok(q)
}

/// Orthonormal basis of the right nullspace, as columns.
///
/// Singular values at or below `tol * sigma_max` count as zero. An injective
/// matrix yields a basis with zero columns.
pub fn nullspace_basis(a: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let (m, n) = a.shape();
    if n == 0 {
        return ComplexMatrix::zeros(0, 0);
    }
    // A square (or tall) input makes the SVD return the full right factor.
    let padded = if m < n {
        let mut p = ComplexMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol * smax).count();
    v_t.rows(rank, n - rank).adjoint()
}

pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    a.singular_values().iter().copied().collect()
}

/// Smallest of the `min(rows, cols)` singular values; zero for an empty matrix.
pub fn smallest_singular_value(a: &ComplexMatrix) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

pub fn largest_singular_value(a: &ComplexMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Householder QR with column pivoting by largest remaining column norm.
///
/// Returns the packed reflectors, their scalars and the numerical rank under
/// the given relative tolerance on `|R_ii| / |R_00|`.
struct PivotedQr {
    qr: ComplexMatrix,
    taus: Vec<C64>,
    rank: usize,
}

fn pivoted_qr(a: &ComplexMatrix, tol: f64) -> PivotedQr {
    let mut qr = a.clone();
    let (m, n) = qr.shape();
    let steps = m.min(n);
    let mut taus = Vec::with_capacity(steps);
    let mut norms: Vec<f64> = (0..n).map(|j| qr.column(j).norm_squared()).collect();
    let mut r00 = 0.0;
    let mut rank = 0;
    for k in 0..steps {
        let (p, _) = norms[k..]
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        let p = p + k;
        if p != k {
            qr.swap_columns(k, p);
            norms.swap(k, p);
        }
        // Reflector zeroing qr[k+1.., k].
        let alpha = qr[(k, k)];
        let xnorm = qr.view((k, k), (m - k, 1)).norm();
        if xnorm == 0.0 {
            taus.push(C64::new(0.0, 0.0));
            break;
        }
        let phase = if alpha.norm() > 0.0 { alpha / C64::new(alpha.norm(), 0.0) } else { C64::new(1.0, 0.0) };
        let beta = -phase * C64::new(xnorm, 0.0);
        let denom = alpha - beta;
        for i in k + 1..m {
            qr[(i, k)] /= denom;
        }
        let tau = (beta - alpha) / beta;
        qr[(k, k)] = beta;
        // Apply H = I - tau v v* to the trailing columns, v = [1; qr[k+1.., k]].
        for j in k + 1..n {
            let mut s = qr[(k, j)];
            for i in k + 1..m {
                s += qr[(i, k)].conj() * qr[(i, j)];
            }
            s *= tau.conj();
            qr[(k, j)] -= s;
            for i in k + 1..m {
                let vi = qr[(i, k)];
                qr[(i, j)] -= vi * s;
            }
        }
        taus.push(tau);
        if k == 0 {
            r00 = beta.norm();
        }
        if beta.norm() > tol * r00 {
            rank = k + 1;
        } else {
            break;
        }
        // Trailing norms are recomputed rather than downdated to avoid cancellation.
        for (j, nj) in norms.iter_mut().enumerate().skip(k + 1) {
            *nj = qr.view((k + 1, j), (m - k - 1, 1)).norm_squared();
        }
    }
    PivotedQr { qr, taus, rank }
}

/// `min_w ||a w - b||_2`, computed with a column-pivoted Householder QR.
pub fn least_squares_residual(a: &ComplexMatrix, b: &ComplexVector) -> Result<f64, LinalgError> {
    least_squares_residual_tol(a, b, default_rank_tol(a.nrows(), a.ncols()))
}

pub fn least_squares_residual_tol(a: &ComplexMatrix, b: &ComplexVector, tol: f64) -> Result<f64, LinalgError> {
    let m = a.nrows();
    if b.len() != m {
        return Err(LinalgError::LengthMismatch { got: b.len(), expected: m });
    }
    if a.ncols() == 0 {
        return Ok(b.norm());
    }
    let f = pivoted_qr(a, tol);
    // Q* b, one reflector at a time; the residual lives in the trailing entries.
    let mut y = b.clone();
    for (k, tau) in f.taus.iter().enumerate().take(f.rank) {
        let mut s = y[k];
        for i in k + 1..m {
            s += f.qr[(i, k)].conj() * y[i];
        }
        s *= tau.conj();
        y[k] -= s;
        for i in k + 1..m {
            y[i] -= f.qr[(i, k)] * s;
        }
    }
    Ok(y.rows(f.rank, m - f.rank).norm())
}

/// Numerical rank from the pivoted QR.
pub fn qr_rank(a: &ComplexMatrix, tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    pivoted_qr(a, tol).rank
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.norm()
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
