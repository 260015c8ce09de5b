//! The entanglement quantities of a `2 x 2 x n` pure state.
//!
//! The lambda spectrum (square roots of the eigenvalues of
//! `R = rho (sy x sy) rho^* (sy x sy)`) is computed three independent ways:
//! from the singular values of the symmetric matrix
//! `M_ij = phi_i^T (sy x sy) phi_j`, from the general eigenvalues of `R`, and
//! from the Hermitian form `sqrt(sqrt(rho) rho~ sqrt(rho))`. From the spectrum
//! follow the localizable concurrence `C_a`, the concurrence `C`, the monotone
//! `tau = sqrt(C_a^2 - C^2)` and the measurable lower bounds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix};
use crate::state::{DensityMatrix, PureState};

/// Squared-spectrum values at or below this are treated as exact zeros before
/// the square root is taken in the eigenvalue routes.
pub const EIGEN_FLOOR: f64 = 1e-13;
/// Largest tolerated imaginary residue on an eigenvalue of `R`.
pub const R_IMAG_TOL: f64 = 1e-9;
/// Route disagreement that is reported as an internal inconsistency.
pub const ROUTE_TOL: f64 = 1e-6;
/// Slack on the bound-dominance check inside [`tau`].
pub const DOMINANCE_TOL: f64 = 1e-9;
/// Singular values above this count towards the rank of `M`.
pub const RANK_TOL: f64 = 1e-9;

/// `sy (x) sy` in the computational order `|00>,|01>,|10>,|11>`.
pub fn spin_flip_kernel() -> ComplexMatrix {
    let mut k = ComplexMatrix::zeros(4, 4);
    k[(0, 3)] = c(-1.0, 0.0);
    k[(1, 2)] = c(1.0, 0.0);
    k[(2, 1)] = c(1.0, 0.0);
    k[(3, 0)] = c(-1.0, 0.0);
    k
}

/// Complex symmetric `n x n` matrix of rank at most 4.
#[derive(Debug, Clone, PartialEq)]
pub struct MMatrix {
    m: ComplexMatrix,
}

impl MMatrix {
    pub const SYMMETRY_TOL: f64 = 1e-12;

    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("M must be square".into()));
        }
        let defect = linalg::symmetry_defect(&m);
        if defect > Self::SYMMETRY_TOL {
            return Err(Error::NotSymmetric(defect));
        }
        let s = linalg::singular_values(&m)?;
        if let Some(extra) = s.iter().skip(4).find(|&&v| v > RANK_TOL) {
            return Err(Error::InvalidState(format!("M has rank above 4 (singular value {extra:.3e})")));
        }
        Ok(Self { m })
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    /// `Tr M M^dagger = sum |M_ij|^2`.
    pub fn trace_mm_dagger(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        linalg::singular_values(&self.m).expect("M entries are finite")
    }

    /// Number of singular values above [`RANK_TOL`].
    pub fn rank(&self) -> usize {
        self.singular_values().iter().filter(|&&v| v > RANK_TOL).count()
    }

    /// `Q^T M Q`.
    pub fn transformed(&self, q: &ComplexMatrix) -> ComplexMatrix {
        q.transpose() * &self.m * q
    }
}

pub fn build_m(s: &PureState) -> MMatrix {
    build_m_with_kernel(s, &spin_flip_kernel())
}

/// `M_ij = phi_i^T K phi_j` for an arbitrary symmetric 4x4 kernel. Only the
/// upper triangle is evaluated, so the result is exactly symmetric.
pub fn build_m_with_kernel(s: &PureState, kernel: &ComplexMatrix) -> MMatrix {
    let psi = s.slice_matrix();
    let kpsi = kernel * &psi;
    let n = s.n();
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: num_complex::Complex64 = (0..4).map(|r| psi[(r, i)] * kpsi[(r, j)]).sum();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    MMatrix { m }
}

/// `R = rho K rho^* K` for a two-qubit density matrix.
pub fn r_matrix(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    if rho.dim() != 4 {
        return Err(Error::Dimension(format!("R needs a 4x4 density matrix, got {}", rho.dim())));
    }
    let k = spin_flip_kernel();
    let r = rho.matrix();
    Ok(r * &k * r.map(|z| z.conj()) * &k)
}

/// The four values `lam_1 >= ... >= lam_4 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaSpectrum {
    lam: [f64; 4],
}

impl LambdaSpectrum {
    const RANGE_TOL: f64 = 1e-9;

    /// Sorts descending, keeps the four largest, pads with zeros.
    pub fn new(values: &[f64]) -> Result<Self> {
        let mut v: Vec<f64> = values.to_vec();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite spectrum value".into()));
        }
        v.sort_by(|a, b| b.total_cmp(a));
        let mut lam = [0.0; 4];
        for (slot, x) in lam.iter_mut().zip(v) {
            if !(-Self::RANGE_TOL..=1.0 + Self::RANGE_TOL).contains(&x) {
                return Err(Error::Domain(format!("spectrum value {x} outside [0, 1]")));
            }
            *slot = x.clamp(0.0, 1.0);
        }
        if lam.iter().sum::<f64>() > 2.0 + Self::RANGE_TOL {
            return Err(Error::Domain("spectrum sum exceeds 2".into()));
        }
        Ok(Self { lam })
    }

    /// Sorted, truncated and padded like [`LambdaSpectrum::new`] but without
    /// the range checks; used for finite-sample estimates, which can leave
    /// the physical range. Negative values are clipped to zero.
    pub fn from_estimates(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().map(|x| x.max(0.0)).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        let mut lam = [0.0; 4];
        for (slot, x) in lam.iter_mut().zip(v) {
            *slot = x;
        }
        Self { lam }
    }

    pub fn zero() -> Self {
        Self { lam: [0.0; 4] }
    }

    pub fn values(&self) -> [f64; 4] {
        self.lam
    }

    /// `max_i |lam_i - other_i|`; both are sorted, so this is a multiset distance.
    pub fn distance(&self, other: &LambdaSpectrum) -> f64 {
        self.lam.iter().zip(other.lam.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Number of values above [`RANK_TOL`].
    pub fn rank(&self) -> usize {
        self.lam.iter().filter(|&&v| v > RANK_TOL).count()
    }
}

/// Which computation produces the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumRoute {
    /// Singular values of `M`.
    ViaM,
    /// Square roots of the eigenvalues of the non-Hermitian `R`.
    ViaR,
    /// Eigenvalues of `sqrt(sqrt(rho) rho~ sqrt(rho))`.
    ViaHermitian,
}

fn sqrt_floored(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    values
        .into_iter()
        .map(|v| if v <= EIGEN_FLOOR { 0.0 } else { v.sqrt() })
        .collect()
}

pub fn lambda_spectrum(s: &PureState, route: SpectrumRoute) -> Result<LambdaSpectrum> {
    match route {
        SpectrumRoute::ViaM => LambdaSpectrum::new(&build_m(s).singular_values()),
        SpectrumRoute::ViaR => {
            let r = r_matrix(&s.reduced_ab())?;
            let ev = linalg::eig_general(&r)?;
            if let Some(z) = ev.iter().find(|z| z.im.abs() > R_IMAG_TOL) {
                return Err(Error::Numeric(format!("eigenvalue {z} of R is not real")));
            }
            LambdaSpectrum::new(&sqrt_floored(ev.iter().map(|z| z.re)))
        }
        SpectrumRoute::ViaHermitian => {
            let rho = s.reduced_ab();
            let k = spin_flip_kernel();
            let flipped = &k * rho.matrix().transpose() * &k;
            let root = linalg::herm_sqrt(rho.matrix())?;
            let inner = &root * flipped * &root;
            let inner = (&inner + inner.adjoint()).scale(0.5);
            // Eigenvalues of inner are lam^2; the outer square root is taken on
            // the spectrum so the floor applies uniformly to all routes.
            let (ev, _) = linalg::eigh(&inner)?;
            if let Some(v) = ev.iter().find(|&&v| v < -linalg::PSD_CLIP) {
                return Err(Error::Numeric(format!("negative eigenvalue {v:.3e}")));
            }
            LambdaSpectrum::new(&sqrt_floored(ev))
        }
    }
}

/// The `M` route, cross-checked against both eigenvalue routes.
pub fn consistent_spectrum(s: &PureState) -> Result<LambdaSpectrum> {
    let via_m = lambda_spectrum(s, SpectrumRoute::ViaM)?;
    for route in [SpectrumRoute::ViaR, SpectrumRoute::ViaHermitian] {
        let other = lambda_spectrum(s, route)?;
        let d = via_m.distance(&other);
        if d > ROUTE_TOL {
            return Err(Error::InternalInconsistency(format!(
                "{route:?} spectrum differs from the M route by {d:.3e}"
            )));
        }
    }
    Ok(via_m)
}

/// `C_a = sum lam_i`.
pub fn localizable_concurrence(lam: &LambdaSpectrum) -> f64 {
    lam.lam.iter().sum()
}

/// `C = max(0, 2 lam_1 - C_a)`.
pub fn concurrence(lam: &LambdaSpectrum) -> f64 {
    (2.0 * lam.lam[0] - localizable_concurrence(lam)).max(0.0)
}

/// `sqrt(C_a^2 - C^2)`.
pub fn tau_from_spectrum(lam: &LambdaSpectrum) -> f64 {
    let ca = localizable_concurrence(lam);
    let cc = concurrence(lam);
    (ca * ca - cc * cc).max(0.0).sqrt()
}

/// The same monotone written with the case split on `lam_1` against the rest.
pub fn tau_branch_form(lam: &LambdaSpectrum) -> f64 {
    let rest: f64 = lam.lam[1..].iter().sum();
    if lam.lam[0] <= rest {
        lam.lam[0] + rest
    } else {
        2.0 * (lam.lam[0] * rest).sqrt()
    }
}

/// `2 sqrt(sum lam_i^2 - lam_1^2)`.
pub fn bound_spectral(lam: &LambdaSpectrum) -> f64 {
    let sq: f64 = lam.lam[1..].iter().map(|v| v * v).sum();
    2.0 * sq.max(0.0).sqrt()
}

fn abs_pow(x: f64, e: f64) -> f64 {
    // 0^0 = 0: zero entries never contribute.
    if x == 0.0 {
        0.0
    } else {
        x.powf(e)
    }
}

/// Upper bound on the largest singular value of `M`,
/// `[max_k sum_j |M_jk|^(2q)]^(1/2) [max_j sum_k |M_jk|^(2(1-q))]^(1/2)`.
pub fn sigma_u(m: &MMatrix, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("q = {q} outside [0, 1]")));
    }
    Ok(sigma_u_unchecked(m.matrix(), q))
}

fn sigma_u_unchecked(m: &ComplexMatrix, q: f64) -> f64 {
    let n = m.nrows();
    let col = (0..n)
        .map(|k| (0..n).map(|j| abs_pow(m[(j, k)].norm(), 2.0 * q)).sum::<f64>())
        .fold(0.0, f64::max);
    let row = (0..n)
        .map(|j| (0..n).map(|k| abs_pow(m[(j, k)].norm(), 2.0 * (1.0 - q))).sum::<f64>())
        .fold(0.0, f64::max);
    col.sqrt() * row.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaUBound {
    pub bound: f64,
    pub q_star: f64,
    pub sigma_min: f64,
    /// The bound evaluated at `q = 0, 1/2, 1`.
    pub at_zero: f64,
    pub at_half: f64,
    pub at_one: f64,
}

const Q_GRID: usize = 101;
const GAP_FLOOR: f64 = 64.0 * f64::EPSILON;
const Q_TOL: f64 = 1e-6;

/// `2 sqrt(Tr M M^dagger - min_q sigma_U(q)^2)`, minimized over a 101-point
/// grid followed by golden-section refinement around the best grid point.
pub fn bound_sigma_u(m: &MMatrix) -> SigmaUBound {
    let mat = m.matrix();
    let trace = m.trace_mm_dagger();
    let f = |q: f64| sigma_u_unchecked(mat, q);
    // Rounding residue of `trace - sigma^2` is dropped; zeroing it can only
    // lower the bound.
    let floor = GAP_FLOOR * trace;
    let bound_at = |sigma: f64| {
        let gap = trace - sigma * sigma;
        if gap <= floor { 0.0 } else { 2.0 * gap.sqrt() }
    };

    let step = 1.0 / (Q_GRID - 1) as f64;
    let (best_idx, mut best) = (0..Q_GRID)
        .map(|i| (i, f(i as f64 * step)))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let mut q_star = best_idx as f64 * step;

    let lo = (best_idx.saturating_sub(1)) as f64 * step;
    let hi = ((best_idx + 1).min(Q_GRID - 1)) as f64 * step;
    let (q_ref, s_ref) = golden_section(f, lo, hi, Q_TOL);
    if s_ref < best {
        best = s_ref;
        q_star = q_ref;
    }

    SigmaUBound {
        bound: bound_at(best),
        q_star,
        sigma_min: best,
        at_zero: bound_at(f(0.0)),
        at_half: bound_at(f(0.5)),
        at_one: bound_at(f(1.0)),
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let q = 0.5 * (a + b);
    (q, f(q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitDetBound {
    /// `2 sqrt(|det M|)`, equal to `tau` for three qubits.
    pub exact: f64,
    /// `2 sqrt(||M00||M11| - |M01||M10||)`, from moduli only.
    pub bound: f64,
}

pub fn bound_qubit_det(m: &MMatrix) -> Result<QubitDetBound> {
    if m.n() != 2 {
        return Err(Error::Dimension(format!("determinant bound needs n = 2, got {}", m.n())));
    }
    let a = m.matrix();
    let (d, o) = (a[(0, 0)] * a[(1, 1)], a[(0, 1)] * a[(1, 0)]);
    // Both differences cancel exactly for rank-one M; rounding left over
    // there would otherwise be lifted to ~1e-9 by the square root.
    let floor = GAP_FLOOR * (d.norm() + o.norm());
    let cut = |x: f64| if x <= floor { 0.0 } else { x };
    let det = cut((d - o).norm());
    let moduli = cut((d.norm() - o.norm()).abs());
    Ok(QubitDetBound { exact: 2.0 * det.sqrt(), bound: 2.0 * moduli.sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub spectral: f64,
    pub sigma_u: SigmaUBound,
    pub qubit_det: Option<QubitDetBound>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangleReport {
    pub n: usize,
    pub c_a: f64,
    pub c: f64,
    pub tau: f64,
    /// `tau^2`, reported for three qubits only.
    pub three_tangle: Option<f64>,
    pub lam: LambdaSpectrum,
    pub bounds: Bounds,
}

pub fn bounds(m: &MMatrix, lam: &LambdaSpectrum) -> Bounds {
    Bounds {
        spectral: bound_spectral(lam),
        sigma_u: bound_sigma_u(m),
        qubit_det: bound_qubit_det(m).ok(),
    }
}

/// Full report for `s`, with the spectrum cross-checked across routes and
/// every bound checked against `tau`.
pub fn tau(s: &PureState) -> Result<TangleReport> {
    let lam = consistent_spectrum(s)?;
    let m = build_m(s);
    let c_a = localizable_concurrence(&lam);
    let c = concurrence(&lam);
    let tau = tau_from_spectrum(&lam);
    let bounds = bounds(&m, &lam);

    let mut checks = vec![("spectral", bounds.spectral), ("sigma_u", bounds.sigma_u.bound)];
    if let Some(d) = bounds.qubit_det {
        checks.push(("qubit_det", d.bound));
    }
    for (name, b) in checks {
        if b > tau + DOMINANCE_TOL {
            return Err(Error::InternalInconsistency(format!("{name} bound {b} exceeds tau {tau}")));
        }
    }
    Ok(TangleReport {
        n: s.n(),
        c_a,
        c,
        tau,
        three_tangle: (s.n() == 2).then_some(tau * tau),
        lam,
        bounds,
    })
}

/// Flat record for CSV output.
#[derive(Debug, Clone, Serialize)]
pub struct TangleRow {
    pub n: usize,
    pub c_a: f64,
    pub c: f64,
    pub tau: f64,
    pub three_tangle: Option<f64>,
    pub lam1: f64,
    pub lam2: f64,
    pub lam3: f64,
    pub lam4: f64,
    pub bound_spectral: f64,
    pub bound_sigma_u: f64,
    pub q_star: f64,
    pub bound_qubit_det: Option<f64>,
}

impl From<&TangleReport> for TangleRow {
    fn from(r: &TangleReport) -> Self {
        let [lam1, lam2, lam3, lam4] = r.lam.values();
        Self {
            n: r.n,
            c_a: r.c_a,
            c: r.c,
            tau: r.tau,
            three_tangle: r.three_tangle,
            lam1,
            lam2,
            lam3,
            lam4,
            bound_spectral: r.bounds.spectral,
            bound_sigma_u: r.bounds.sigma_u.bound,
            q_star: r.bounds.sigma_u.q_star,
            bound_qubit_det: r.bounds.qubit_det.map(|d| d.bound),
        }
    }
}
