//! Small dense complex linear algebra on top of `nalgebra`.
//!
//! Everything here works on Hermitian matrices: positive definite solves go
//! through a Cholesky factor, PSD square roots through an eigendecomposition
//! so that rank-deficient covariances are handled without pivoting tricks.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Eigenvalues below `-PSD_TOLERANCE * scale` are treated as a genuine
/// loss of semidefiniteness rather than roundoff.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Cached Cholesky factor of a Hermitian positive definite matrix.
#[derive(Clone, Debug)]
pub struct HermitianSolver {
    chol: Cholesky<C64, Dyn>,
}

impl HermitianSolver {
    pub fn new(matrix: CMatrix, context: &'static str) -> Result<Self> {
        let chol = matrix
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { context })?;
        // The complex factorization takes complex square roots of negative
        // pivots instead of failing, so check the pivots ourselves.
        let l = chol.l_dirty();
        let ok = (0..l.nrows()).all(|i| {
            let d = l[(i, i)];
            d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-8 * d.re
        });
        if !ok {
            return Err(Error::NotPositiveDefinite { context });
        }
        Ok(Self { chol })
    }

    pub fn solve(&self, rhs: &CVector) -> CVector {
        self.chol.solve(rhs)
    }

    pub fn solve_matrix(&self, rhs: &CMatrix) -> CMatrix {
        self.chol.solve(rhs)
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }
}

/// Solves `A x = b` for Hermitian positive definite `A`.
pub fn hermitian_solve(a: &CMatrix, b: &CVector, context: &'static str) -> Result<CVector> {
    Ok(HermitianSolver::new(a.clone(), context)?.solve(b))
}

/// `(M + M^H) / 2`
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest element-wise modulus of `M - M^H`.
pub fn max_hermitian_skew(m: &CMatrix) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Eigenvalues of a Hermitian matrix (the skew part is discarded first).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect()
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Projects a Hermitian matrix onto the PSD cone by clipping negative
/// eigenvalues, failing if any is below `-PSD_TOLERANCE * scale`.
///
/// The input is returned unchanged when it is already PSD, so the diagonal
/// (and hence the trace) is not disturbed by a needless reconstruction.
pub fn clip_to_psd(m: CMatrix, scale: f64) -> Result<CMatrix> {
    let eig = hermitian_part(&m).symmetric_eigen();
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        return Ok(m);
    }
    if min < -PSD_TOLERANCE * scale {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
            scale,
        });
    }
    let clipped = eig.eigenvalues.map(|l| C64::new(l.max(0.0), 0.0));
    let u = &eig.eigenvectors;
    Ok(hermitian_part(
        &(u * CMatrix::from_diagonal(&clipped) * u.adjoint()),
    ))
}

/// Returns `A` with `A A^H = R` for Hermitian PSD `R`.
///
/// Built from the eigendecomposition, so rank-deficient covariances are fine.
pub fn psd_factor(r: &CMatrix) -> Result<CMatrix> {
    let scale = trace_re(r).abs() / r.nrows().max(1) as f64;
    let eig = hermitian_part(r).symmetric_eigen();
    for &l in eig.eigenvalues.iter() {
        if l < -PSD_TOLERANCE * scale {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: l,
                scale,
            });
        }
    }
    let mut a = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        a.column_mut(j).scale_mut(s);
    }
    Ok(a)
}

/// `v^H M v`, real part.
pub fn quad_form(v: &CVector, m: &CMatrix) -> f64 {
    v.dotc(&(m * v)).re
}

/// Block-diagonal assembly of square blocks.
pub fn block_diag<'a, I>(blocks: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    let blocks: Vec<&CMatrix> = blocks.into_iter().collect();
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let d = b.nrows();
        out.view_mut((off, off), (d, d)).copy_from(b);
        off += d;
    }
    out
}

/// Unit-norm copy of `v`. A zero vector stays zero.
pub fn normalized(v: CVector) -> CVector {
    let n = v.norm();
    if n > 0.0 {
        v.unscale(n)
    } else {
        v
    }
}

/// One draw from CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Vector of i.i.d. CN(0, 1) entries.
pub fn complex_normal_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| complex_normal(rng))
}

/// Angle between the complex lines spanned by `a` and `b`, in radians.
pub fn subspace_angle(a: &CVector, b: &CVector) -> f64 {
    let c = a.dotc(b).norm() / (a.norm() * b.norm());
    // acos loses precision near 1; use the sine instead.
    let s2 = (1.0 - c * c).max(0.0);
    s2.sqrt().asin()
}
