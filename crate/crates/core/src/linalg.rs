//! Dense complex linear algebra: singular values, general eigenvalues,
//! Hermitian square roots and the Takagi factorization `M = U diag(lam) U^T`
//! of complex symmetric matrices.
//!
//! Singular values, Schur and symmetric eigendecompositions come from
//! `nalgebra`. Singular vectors are never taken from its SVD, which can
//! return wrong vectors for rank-deficient or degenerate complex input; the
//! Takagi factorization and the polar factor are built from real and
//! Hermitian eigendecompositions instead.

use nalgebra::linalg::{Schur, SymmetricEigen, SVD};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

const MAX_ITERS: usize = 10_000;
const CONVERGENCE_EPS: f64 = 5.0 * f64::EPSILON;

/// Tolerance on the symmetry check performed by [`takagi`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues of a PSD input above `-PSD_CLIP` are clipped to zero.
pub const PSD_CLIP: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric("matrix has non-finite entries".into()))
    }
}

fn ensure_square(m: &ComplexMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entry modulus of `q q^dagger - I`.
pub fn unitarity_defect(q: &ComplexMatrix) -> f64 {
    if !q.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(q * q.adjoint()), &identity(q.nrows()))
}

/// Largest entry modulus of `m - m^T`.
pub fn symmetry_defect(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.transpose())
}

/// Largest entry modulus of `m - m^dagger`.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    ensure_finite(m)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(m.clone(), false, false, CONVERGENCE_EPS, MAX_ITERS)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// All eigenvalues (with multiplicity, unordered) of a general square matrix,
/// read off the diagonal of its complex Schur form.
pub fn eig_general(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let schur = Schur::try_new(m.clone(), CONVERGENCE_EPS, MAX_ITERS)
        .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let eig = SymmetricEigen::try_new(m.clone(), CONVERGENCE_EPS, MAX_ITERS)
        .ok_or_else(|| Error::Numeric("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok((values, vectors))
}

/// Hermitian PSD square root. Eigenvalues in `(-1e-8, 0)` are clipped to zero.
pub fn herm_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let defect = hermiticity_defect(m);
    if defect > SYMMETRY_TOL {
        return Err(Error::Numeric(format!(
            "square root of a non-Hermitian matrix (defect {defect:.3e})"
        )));
    }
    // Symmetrize away the sub-tolerance residue before the eigensolver sees it.
    let h = (m + m.adjoint()).scale(0.5);
    let (values, vectors) = eigh(&h)?;
    if let Some(v) = values.iter().find(|&&v| v < -PSD_CLIP) {
        return Err(Error::Numeric(format!("negative eigenvalue {v:.3e}")));
    }
    let roots = values.iter().map(|&v| c(v.max(0.0).sqrt(), 0.0));
    let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(values.len(), roots));
    Ok(&vectors * d * vectors.adjoint())
}

/// Closest unitary matrix: the polar factor `V W^dagger` of `m = V S W^dagger`,
/// with `W` and `S^2` from the eigendecomposition of `m^dagger m`. Directions
/// in the kernel of `m` are completed arbitrarily.
pub fn nearest_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let n = m.nrows();
    let (values, w) = eigh(&(m.adjoint() * m))?;
    let top = values.iter().fold(0.0_f64, |a, &v| a.max(v));
    let cols: Vec<Option<DVector<Complex64>>> = (0..n)
        .map(|k| {
            let s = values[k].max(0.0).sqrt();
            (values[k] > KERNEL_TOL * top && s > 0.0).then(|| (m * w.column(k)).unscale(s))
        })
        .collect();
    Ok(orthonormal_completion(cols, n) * w.adjoint())
}

/// Columns of a unitary matrix: the given columns after modified
/// Gram-Schmidt in order, with `None` slots and nearly dependent columns
/// filled from the standard basis.
fn orthonormal_completion(cols: Vec<Option<DVector<Complex64>>>, n: usize) -> ComplexMatrix {
    let project_out = |v: &mut DVector<Complex64>, basis: &[DVector<Complex64>]| {
        // Two passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            for b in basis {
                let overlap = b.dotc(v);
                *v -= b * overlap;
            }
        }
    };
    let mut accepted: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    let mut slots: Vec<Option<usize>> = vec![None; n];
    for (k, col) in cols.into_iter().enumerate() {
        if let Some(mut v) = col {
            let before = v.norm();
            project_out(&mut v, &accepted);
            let after = v.norm();
            if before > 0.0 && after > DEPENDENCE_TOL * before {
                accepted.push(v.unscale(after));
                slots[k] = Some(accepted.len() - 1);
            }
        }
    }
    for slot in slots.iter_mut().filter(|s| s.is_none()) {
        let mut best: Option<DVector<Complex64>> = None;
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = c(1.0, 0.0);
            project_out(&mut e, &accepted);
            if best.as_ref().is_none_or(|b| e.norm() > b.norm()) {
                best = Some(e);
            }
        }
        let e = best.expect("n > 0");
        let norm = e.norm();
        accepted.push(e.unscale(norm));
        *slot = Some(accepted.len() - 1);
    }
    ComplexMatrix::from_fn(n, n, |r, k| accepted[slots[k].expect("filled")][r])
}

/// Eigenvalues below this fraction of the largest count as kernel directions.
const KERNEL_TOL: f64 = 1e-24;
/// Residual fraction under which Gram-Schmidt treats a column as dependent.
const DEPENDENCE_TOL: f64 = 1e-6;

/// Result of [`takagi`]: `m = u * diag(lam) * u^T`.
#[derive(Debug, Clone)]
pub struct TakagiFactors {
    pub u: ComplexMatrix,
    /// Descending, nonnegative.
    pub lam: Vec<f64>,
}

impl TakagiFactors {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.lam.len();
        let d = ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(self.lam[i], 0.0) } else { c(0.0, 0.0) });
        &self.u * d * self.u.transpose()
    }
}

/// Takagi factorization of a complex symmetric matrix.
///
/// Writing `m = A + iB`, the real symmetric matrix `H = [[A, B], [B, -A]]`
/// has eigenvalues `+-lam_k`, and an eigenvector `[x; y]` for `lam >= 0`
/// gives `u = x + iy` with `m conj(u) = lam u`. The `n` largest eigenpairs
/// supply the columns of `U`; vectors for different `lam` are orthogonal as
/// complex vectors. Kernel directions, where `u` and `iu` both appear, are
/// sorted out by Gram-Schmidt.
pub fn takagi(m: &ComplexMatrix) -> Result<TakagiFactors> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = symmetry_defect(m);
    if defect > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(defect));
    }
    if n == 0 {
        return Ok(TakagiFactors { u: identity(0), lam: Vec::new() });
    }

    let sym = (m + m.transpose()).scale(0.5);
    let h = DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, col| {
        let z = sym[(r % n, col % n)];
        match (r < n, col < n) {
            (true, true) => z.re,
            (false, false) => -z.re,
            _ => z.im,
        }
    });
    let eig = SymmetricEigen::try_new(h, CONVERGENCE_EPS, MAX_ITERS)
        .ok_or_else(|| Error::Numeric("eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lam: Vec<f64> = order[..n].iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let cols = order[..n]
        .iter()
        .map(|&k| {
            let v = eig.eigenvectors.column(k);
            Some(DVector::from_fn(n, |r, _| c(v[r], v[r + n])))
        })
        .collect();
    Ok(TakagiFactors { u: orthonormal_completion(cols, n), lam })
}
