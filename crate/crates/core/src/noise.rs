//! Imperfect preparation and imperfect copies.
//!
//! Each copy is prepared as a quasi-pure state `(1 - eps) |psi><psi| + eps rho_x`,
//! and the second copy is also tilted away from the ideal state,
//! `sqrt(1 - eps0^2) |psi> + eps0 |phi>` with `<psi|phi> = 0`. The measured
//! moduli `|M'_ij|` come from the same fourfold coincidences as in the ideal
//! scheme; feeding the noisy diagonal into the `tau` formulas shows how far
//! the estimate drifts.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix};
use crate::protocol::{self, BasisChart, SearchConfig};
use crate::state::{canonical_state, CBasis, Canonical, DensityMatrix, PureState};
use crate::tangle;

/// Noise strengths up to this value count as first-order.
pub const PERTURBATIVE_LIMIT: f64 = 0.05;
/// Largest noise strength a scan accepts.
pub const MAX_SCAN_EPS: f64 = 0.2;
/// Negative coincidence traces above `-NEGATIVE_TRACE_TOL` are clipped to 0.
pub const NEGATIVE_TRACE_TOL: f64 = 1e-10;
/// Residual norm below which a deviation is considered parallel to the state.
pub const PARALLEL_TOL: f64 = 1e-12;

fn check_eps(name: &str, eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("{name} = {eps} outside [0, 1)")));
    }
    Ok(())
}

fn check_dim(s: &PureState, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 * s.n() {
        return Err(Error::Dimension(format!(
            "density matrix of dimension {} for n = {}",
            rho.dim(),
            s.n()
        )));
    }
    Ok(())
}

/// Part of `phi` orthogonal to `s`, normalized.
pub fn orthogonalize(s: &PureState, phi: &PureState) -> Result<PureState> {
    let overlap = s.inner(phi)?;
    let residual: Vec<Complex64> =
        phi.amplitudes().iter().zip(s.amplitudes()).map(|(p, a)| p - overlap * a).collect();
    let norm = residual.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < PARALLEL_TOL {
        return Err(Error::DegenerateDeviation);
    }
    PureState::new(residual.into_iter().map(|z| z / norm).collect(), s.n())
}

/// Three-qubit state placed on the first two levels of `C`.
fn embed(q: &PureState, n: usize) -> Result<PureState> {
    let mut amp = vec![c(0.0, 0.0); 4 * n];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                amp[(2 * i + j) * n + k] = q.amp(i, j, k);
            }
        }
    }
    PureState::new(amp, n)
}

/// W, or the first other named state that is not parallel to `s`, made
/// orthogonal to `s`.
pub fn default_deviation(s: &PureState) -> Result<PureState> {
    let mut last = Error::DegenerateDeviation;
    for name in [Canonical::W, Canonical::Product, Canonical::Ghz] {
        let phi = embed(&canonical_state(name), s.n())?;
        match orthogonalize(s, &phi) {
            Ok(p) => return Ok(p),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// `(1 - eps) |psi><psi| + eps extra`.
pub fn quasi_pure(s: &PureState, eps: f64, extra: &DensityMatrix) -> Result<DensityMatrix> {
    check_eps("eps", eps)?;
    check_dim(s, extra)?;
    s.projector().mix(extra, eps)
}

/// `sqrt(1 - eps0^2) |psi> + eps0 |phi_perp>`, where `phi_perp` is `phi` with
/// its component along `s` removed.
pub fn imperfect_copy(s: &PureState, eps0: f64, phi: &PureState) -> Result<PureState> {
    if !(0.0..=1.0).contains(&eps0) {
        return Err(Error::Domain(format!("eps0 = {eps0} outside [0, 1]")));
    }
    let perp = orthogonalize(s, phi)?;
    let keep = (1.0 - eps0 * eps0).sqrt();
    let amp = s.amplitudes().iter().zip(perp.amplitudes()).map(|(a, p)| a * keep + p * eps0).collect();
    PureState::new(amp, s.n())
}

/// Noise parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Copy infidelity.
    pub eps0: f64,
    /// Mixing of the first and second copy.
    pub eps1: f64,
    pub eps2: f64,
    pub rho1_extra: DensityMatrix,
    pub rho2_extra: DensityMatrix,
    /// Deviation direction, orthogonal to the ideal state.
    pub phi_extra: PureState,
}

impl NoiseSpec {
    pub fn new(
        s: &PureState,
        eps0: f64,
        eps1: f64,
        eps2: f64,
        rho1_extra: DensityMatrix,
        rho2_extra: DensityMatrix,
        phi: &PureState,
    ) -> Result<Self> {
        check_eps("eps0", eps0)?;
        check_eps("eps1", eps1)?;
        check_eps("eps2", eps2)?;
        check_dim(s, &rho1_extra)?;
        check_dim(s, &rho2_extra)?;
        let phi_extra = orthogonalize(s, phi)?;
        Ok(Self { eps0, eps1, eps2, rho1_extra, rho2_extra, phi_extra })
    }

    /// All three strengths equal to `eps`, maximally mixed admixtures and the
    /// default deviation.
    pub fn defaults(s: &PureState, eps: f64) -> Result<Self> {
        let mixed = DensityMatrix::maximally_mixed(4 * s.n());
        Self::new(s, eps, eps, eps, mixed.clone(), mixed, &default_deviation(s)?)
    }

    /// Same admixtures and deviation, with every strength set to `eps`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        check_eps("eps", eps)?;
        Ok(Self { eps0: eps, eps1: eps, eps2: eps, ..self.clone() })
    }

    pub fn max_eps(&self) -> f64 {
        self.eps0.max(self.eps1).max(self.eps2)
    }

    pub fn is_perturbative(&self) -> bool {
        self.max_eps() <= PERTURBATIVE_LIMIT
    }

    /// The two prepared copies `(rho1, rho2)`.
    pub fn states(&self, s: &PureState) -> Result<(DensityMatrix, DensityMatrix)> {
        if self.phi_extra.n() != s.n() {
            return Err(Error::Dimension("deviation state of a different size".into()));
        }
        let rho1 = quasi_pure(s, self.eps1, &self.rho1_extra)?;
        let copy = imperfect_copy(s, self.eps0, &self.phi_extra)?;
        let rho2 = quasi_pure(&copy, self.eps2, &self.rho2_extra)?;
        Ok((rho1, rho2))
    }
}

/// `sum_{c, c'} Q_ci rho_{(x, c), (x', c')} conj(Q_c'i)`: the `AB` block
/// left after projecting `C` onto measurement outcome `i`.
fn project_c(rho: &ComplexMatrix, q: &ComplexMatrix, i: usize) -> ComplexMatrix {
    let n = q.nrows();
    ComplexMatrix::from_fn(4, 4, |x, y| {
        let mut z = c(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                z += q[(a, i)] * rho[(x * n + a, y * n + b)] * q[(b, i)].conj();
            }
        }
        z
    })
}

/// Coincidence probabilities `Tr[(rho1 (x) rho2) A_ij]` with the same basis on
/// both `C` slots, as `Tr(K s1 K s2^T) / 4` on the projected blocks.
pub fn coincidence_probabilities(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    basis: &CBasis,
) -> Result<DMatrix<f64>> {
    let n = basis.n();
    if rho1.dim() != 4 * n || rho2.dim() != 4 * n {
        return Err(Error::Dimension(format!(
            "density matrices of dimension {} and {} for n = {n}",
            rho1.dim(),
            rho2.dim()
        )));
    }
    let k = tangle::spin_flip_kernel();
    let q = basis.matrix();
    let first: Vec<ComplexMatrix> = (0..n).map(|i| project_c(rho1.matrix(), q, i)).collect();
    let second: Vec<ComplexMatrix> = (0..n).map(|j| &k * project_c(rho2.matrix(), q, j).transpose()).collect();
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let left = &k * &first[i];
        for j in 0..n {
            let t = (&left * &second[j]).trace().re / 4.0;
            if t < -NEGATIVE_TRACE_TOL {
                return Err(Error::Numeric(format!("coincidence probability {t:.3e} < 0")));
            }
            p[(i, j)] = t.max(0.0);
        }
    }
    Ok(p)
}

/// `|M'_ij| = 2 sqrt(Tr[(rho1 (x) rho2) A_ij])`.
pub fn m_abs_noisy(rho1: &DensityMatrix, rho2: &DensityMatrix, basis: &CBasis) -> Result<DMatrix<f64>> {
    Ok(coincidence_probabilities(rho1, rho2, basis)?.map(|p| 2.0 * p.sqrt()))
}

/// How the noisy diagonal is read out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimator {
    /// Exact probabilities.
    ExactDiag,
    /// Binomial counts with the given shots per diagonal setting.
    Protocol { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationRow {
    pub eps: f64,
    pub tau_true: f64,
    pub tau_noisy: f64,
    pub delta: f64,
    /// The signal outweighs the noise-induced shift (`delta < tau_true`).
    /// When false the noise drowns the signal and the scheme claims no
    /// detection, whatever `tau_noisy` reads.
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationScan {
    pub n: usize,
    pub estimator: Estimator,
    pub reoptimized: bool,
    pub rows: Vec<DeviationRow>,
    /// `c` in `delta ~ c eps`, least squares through the origin over the rows
    /// with `eps <= PERTURBATIVE_LIMIT`.
    pub slope: Option<f64>,
    /// Coefficient of determination of that fit.
    pub r_squared: Option<f64>,
    pub fit_points: usize,
    /// Every grid value is within the first-order regime.
    pub perturbative: bool,
}

/// Basis minimizing the noisy off-diagonal coincidences, found with the
/// same search as the ideal scheme.
fn noisy_basis(rho1: &DensityMatrix, rho2: &DensityMatrix, n: usize, cfg: &SearchConfig) -> Result<CBasis> {
    let objective = |params: &[f64]| -> f64 {
        let Ok(b) = BasisChart::for_dimension(n, params).basis(n) else {
            return f64::INFINITY;
        };
        match coincidence_probabilities(rho1, rho2, &b) {
            Ok(p) => (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|ij| p[ij]).sum(),
            Err(_) => f64::INFINITY,
        }
    };
    let (_, best, _, _) = protocol::coordinate_search(objective, BasisChart::dimension_of_params(n), cfg);
    BasisChart::for_dimension(n, &best).basis(n)
}

/// `tau` from the noisy diagonal for every `eps` in the grid, with all three
/// strengths of `template` set to `eps`.
///
/// The diagonal is read in the ideal state's optimal basis unless
/// `reoptimize` is set, in which case the basis is searched again on each
/// noisy pair.
pub fn deviation_scan(
    s: &PureState,
    template: &NoiseSpec,
    eps_grid: &[f64],
    estimator: Estimator,
    reoptimize: bool,
) -> Result<DeviationScan> {
    if let Some(&bad) = eps_grid.iter().find(|e| !(0.0..=MAX_SCAN_EPS).contains(*e)) {
        return Err(Error::Domain(format!("eps = {bad} outside [0, {MAX_SCAN_EPS}]")));
    }
    let n = s.n();
    let tau_true = tangle::tau(s)?.tau;
    let ideal = protocol::optimal_basis(s)?;

    let mut rows = Vec::with_capacity(eps_grid.len());
    for (g, &eps) in eps_grid.iter().enumerate() {
        let spec = template.with_eps(eps)?;
        let (rho1, rho2) = spec.states(s)?;
        let basis = if reoptimize { noisy_basis(&rho1, &rho2, n, &SearchConfig::default())? } else { ideal.clone() };
        let p = coincidence_probabilities(&rho1, &rho2, &basis)?;
        let mut moduli = Vec::with_capacity(n);
        for i in 0..n {
            let m = match estimator {
                Estimator::ExactDiag => 2.0 * p[(i, i)].sqrt(),
                Estimator::Protocol { shots, seed } => {
                    let sub = protocol::setting_seed(seed, (g * n + i) as u64);
                    protocol::sample_probability(p[(i, i)], shots, sub)?.m_abs_hat
                }
            };
            moduli.push(m);
        }
        let tau_noisy = protocol::tau_from_moduli(&moduli).0;
        let delta = (tau_noisy - tau_true).abs();
        rows.push(DeviationRow { eps, tau_true, tau_noisy, delta, detected: delta < tau_true });
    }

    let fit: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.eps <= PERTURBATIVE_LIMIT).map(|r| (r.eps, r.delta)).collect();
    let (slope, r_squared) = fit_through_origin(&fit);
    Ok(DeviationScan {
        n,
        estimator,
        reoptimized: reoptimize,
        slope,
        r_squared,
        fit_points: fit.len(),
        perturbative: eps_grid.iter().all(|&e| e <= PERTURBATIVE_LIMIT),
        rows,
    })
}

/// Least-squares `y = c x` and its centered `R^2`.
pub fn fit_through_origin(points: &[(f64, f64)]) -> (Option<f64>, Option<f64>) {
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    if sxx == 0.0 {
        return (None, None);
    }
    let slope = points.iter().map(|(x, y)| x * y).sum::<f64>() / sxx;
    let mean = points.iter().map(|(_, y)| y).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|(_, y)| (y - mean).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|(x, y)| (y - slope * x).powi(2)).sum();
    let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    (Some(slope), r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{expectation, optimal_basis, TwoCopyObservable};
    use crate::state::{random_pure, random_unitary};

    fn ghz() -> PureState {
        canonical_state(Canonical::Ghz)
    }

    #[test]
    fn quasi_pure_limits() {
        let s = ghz();
        let mixed = DensityMatrix::maximally_mixed(8);
        let zero = quasi_pure(&s, 0.0, &mixed).unwrap();
        assert_eq!(zero.matrix(), s.projector().matrix());
        let full = quasi_pure(&s, 1.0 - 1e-9, &mixed).unwrap();
        assert!(crate::linalg::max_abs_diff(full.matrix(), mixed.matrix()) < 1e-9);
        let mid = quasi_pure(&s, 0.02, &mixed).unwrap();
        assert!(DensityMatrix::new(mid.matrix().clone()).is_ok());
        assert!(quasi_pure(&s, 0.1, &DensityMatrix::maximally_mixed(12)).is_err());
    }

    #[test]
    fn imperfect_copy_overlap() {
        let s = ghz();
        let w = canonical_state(Canonical::W);
        assert_eq!(imperfect_copy(&s, 0.0, &w).unwrap().amplitudes(), s.amplitudes());
        let t = imperfect_copy(&s, 0.1, &w).unwrap();
        assert!((t.inner(&s).unwrap().norm_sqr() - 0.99).abs() < 1e-12);
        let full = imperfect_copy(&s, 1.0, &w).unwrap();
        assert!((full.inner(&w).unwrap().norm() - 1.0).abs() < 1e-12);
        assert!(matches!(imperfect_copy(&s, 0.1, &s), Err(Error::DegenerateDeviation)));
    }

    #[test]
    fn spec_projects_deviation() {
        let s = random_pure(3, 5).unwrap();
        let phi = random_pure(3, 6).unwrap();
        let mixed = DensityMatrix::maximally_mixed(12);
        let spec = NoiseSpec::new(&s, 0.1, 0.01, 0.02, mixed.clone(), mixed, &phi).unwrap();
        assert!(s.inner(&spec.phi_extra).unwrap().norm() < 1e-10);
        assert!(!spec.is_perturbative());
        assert!(spec.with_eps(0.03).unwrap().is_perturbative());
    }

    #[test]
    fn pure_inputs_reduce_to_rotated_m() {
        for seed in 0..10 {
            let n = 2 + (seed as usize % 3);
            let s = random_pure(n, seed).unwrap();
            let basis = random_unitary(n, seed + 100);
            let rho = s.projector();
            let noisy = m_abs_noisy(&rho, &rho, &basis).unwrap();
            let exact = tangle::build_m(&s).transformed(basis.matrix());
            for i in 0..n {
                for j in 0..n {
                    assert!((noisy[(i, j)] - exact[(i, j)].norm()).abs() < 1e-10);
                    let obs = TwoCopyObservable::shared(&basis, i, j).unwrap();
                    let p = expectation(&s, &obs).unwrap();
                    assert!((noisy[(i, j)] - 2.0 * p.sqrt()).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn ghz_diagonal_moves_first_order() {
        let s = ghz();
        let mixed = DensityMatrix::maximally_mixed(8);
        let w = canonical_state(Canonical::W);
        let spec = NoiseSpec::new(&s, 0.0, 0.01, 0.0, mixed.clone(), mixed, &w).unwrap();
        let (r1, r2) = spec.states(&s).unwrap();
        let m = m_abs_noisy(&r1, &r2, &optimal_basis(&s).unwrap()).unwrap();
        for i in 0..2 {
            let d = (m[(i, i)] - 0.5).abs();
            assert!(d > 1e-4 && d < 0.02, "deviation {d}");
        }
    }

    #[test]
    fn scan_noiseless_row_is_exact() {
        let s = ghz();
        let template = NoiseSpec::defaults(&s, 0.0).unwrap();
        let scan = deviation_scan(&s, &template, &[0.0], Estimator::ExactDiag, false).unwrap();
        assert!(scan.rows[0].delta < 1e-12);
        assert!(scan.rows[0].detected);
        assert!(scan.slope.is_none());
        assert!(deviation_scan(&s, &template, &[0.5], Estimator::ExactDiag, false).is_err());
    }

    #[test]
    fn weak_signal_is_drowned() {
        let s = canonical_state(Canonical::GeneralizedGhz(0.01));
        let template = NoiseSpec::defaults(&s, 0.0).unwrap();
        let scan = deviation_scan(&s, &template, &[0.0, 0.05], Estimator::ExactDiag, false).unwrap();
        assert!(scan.rows[0].detected);
        assert!(!scan.rows[1].detected);
        assert!(scan.rows[1].tau_noisy > scan.rows[1].eps);

        let w = canonical_state(Canonical::W);
        let template = NoiseSpec::defaults(&w, 0.0).unwrap();
        let scan = deviation_scan(&w, &template, &[0.0, 0.01], Estimator::ExactDiag, false).unwrap();
        assert!(scan.rows.iter().all(|r| !r.detected));
    }

    #[test]
    fn through_origin_fit() {
        let pts = [(0.0, 0.0), (1.0, 2.0), (2.0, 4.0)];
        let (c, r2) = fit_through_origin(&pts);
        assert!((c.unwrap() - 2.0).abs() < 1e-15);
        assert!((r2.unwrap() - 1.0).abs() < 1e-15);
    }
}
