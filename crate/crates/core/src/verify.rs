//! Seeded self-tests of the core identities.
//!
//! Each suite draws its own ensemble from the run seed, records the worst
//! observed violation and compares it with a fixed tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{self, c, ComplexMatrix};
use crate::protocol::{self, setting_seed};
use crate::state::{random_pure, random_unitary, PureState};
use crate::tangle::{self, SpectrumRoute};

pub const DEFAULT_SIZES: [usize; 4] = [2, 3, 5, 8];

pub const LEMMA_TOL: f64 = 1e-8;
pub const TAKAGI_RECON_TOL: f64 = 1e-9;
pub const TAKAGI_UNITARY_TOL: f64 = 1e-10;
pub const DOMINANCE_TOL: f64 = 1e-9;
pub const RANK_TOL: f64 = 1e-9;
pub const FACTOR_TOL: f64 = 1e-9;
pub const THEOREM_TOL: f64 = 1e-9;
pub const EXPECTED_FACTOR: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random draws per suite and size.
    pub trials: usize,
    pub sizes: Vec<usize>,
    /// Replaces the spin-flip kernel inside `M` (and nowhere else); used to
    /// check that the suites notice a broken kernel.
    pub kernel: Option<ComplexMatrix>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 0, trials: 200, sizes: DEFAULT_SIZES.to_vec(), kernel: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    /// Largest violation seen, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub note: String,
}

impl SuiteResult {
    fn new(name: &'static str, cases: usize, worst: f64, tolerance: f64, note: String) -> Self {
        Self { name, cases, worst, tolerance, passed: worst < tolerance, note }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: usize,
    pub sizes: Vec<usize>,
    pub suites: Vec<SuiteResult>,
    /// `Tr M M^dagger / Tr[(rho (x) rho)(P- (x) P-)]`, averaged over the ensemble.
    pub trace_factor: Option<f64>,
    pub all_passed: bool,
}

/// Stream seed for draw `index` of suite `suite`.
fn draw_seed(seed: u64, suite: u64, index: u64) -> u64 {
    setting_seed(setting_seed(seed, suite), index)
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v.resize(4, 0.0);
    v.truncate(4);
    v
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Singular values of `M` against both eigenvalue routes.
pub fn lemma_suite(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let kernel = cfg.kernel.clone().unwrap_or_else(tangle::spin_flip_kernel);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for &n in &cfg.sizes {
        for t in 0..cfg.trials {
            let s = random_pure(n, draw_seed(cfg.seed, 1, (n * 1_000_003 + t) as u64))?;
            let via_m = sorted_desc(tangle::build_m_with_kernel(&s, &kernel).singular_values());
            for route in [SpectrumRoute::ViaR, SpectrumRoute::ViaHermitian] {
                let other = tangle::lambda_spectrum(&s, route)?.values();
                worst = worst.max(max_gap(&via_m, &other));
            }
            cases += 1;
        }
    }
    Ok(SuiteResult::new("lemma", cases, worst, LEMMA_TOL, "max |sv(M) - sqrt(eig R)|".into()))
}

/// Flavour of a random symmetric test matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetricKind {
    /// `(G + G^T) / 2` for a complex Gaussian `G`.
    Generic,
    /// `U D U^T` with repeated Takagi values.
    Degenerate,
    /// `U D U^T` with some zero Takagi values.
    RankDeficient,
}

pub fn random_symmetric(n: usize, seed: u64, kind: SymmetricKind) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        SymmetricKind::Generic => {
            let g = ComplexMatrix::from_fn(n, n, |_, _| {
                c(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            (&g + g.transpose()).scale(0.5)
        }
        SymmetricKind::Degenerate | SymmetricKind::RankDeficient => {
            let u = random_unitary(n, rng.random());
            let levels: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
            let d: Vec<f64> = (0..n)
                .map(|i| match kind {
                    // Two distinct levels at most, so clusters of size >= n/2.
                    SymmetricKind::Degenerate => levels[i % 2],
                    _ if i % 2 == 1 => 0.0,
                    _ => levels[i],
                })
                .collect();
            let diag = ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(d[i], 0.0) } else { c(0.0, 0.0) });
            let m = u.matrix() * diag * u.matrix().transpose();
            (&m + m.transpose()).scale(0.5)
        }
    }
}

/// Worst relative reconstruction error and unitarity defect of one factorization.
pub fn takagi_errors(m: &ComplexMatrix) -> Result<(f64, f64)> {
    let f = linalg::takagi(m)?;
    let scale = m.norm().max(f64::MIN_POSITIVE);
    Ok(((f.reconstruct() - m).norm() / scale, linalg::unitarity_defect(&f.u)))
}

/// Takagi factorizations of generic, degenerate and rank-deficient matrices
/// of every size from 2 to 8.
pub fn takagi_suite(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let kinds = [SymmetricKind::Generic, SymmetricKind::Degenerate, SymmetricKind::RankDeficient];
    let mut recon: f64 = 0.0;
    let mut unit: f64 = 0.0;
    let total = cfg.trials * cfg.sizes.len();
    for t in 0..total {
        let n = 2 + t % 7;
        let kind = kinds[(t / 7) % 3];
        let m = random_symmetric(n, draw_seed(cfg.seed, 2, t as u64), kind);
        let (r, u) = takagi_errors(&m)?;
        recon = recon.max(r);
        unit = unit.max(u);
    }
    // Both tolerances scaled onto the reconstruction one.
    let worst = recon.max(unit * TAKAGI_RECON_TOL / TAKAGI_UNITARY_TOL);
    Ok(SuiteResult::new(
        "takagi",
        total,
        worst,
        TAKAGI_RECON_TOL,
        format!("reconstruction {recon:.2e}, unitarity {unit:.2e}"),
    ))
}

/// Rank-one `M`: a W-class qubit state on the first two levels of `C`,
/// rotated by a random unitary on `C`.
pub fn random_w_class(n: usize, seed: u64) -> Result<PureState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amp = vec![c(0.0, 0.0); 4 * n];
    for (i, j, k) in [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0)] {
        amp[(2 * i + j) * n + k] = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
    }
    PureState::new(amp, n)?.apply_c_basis(&random_unitary(n, rng.random()))
}

/// `sigma_u <= spectral <= tau`, `spectral = 0` exactly on rank-one `M`, and
/// the determinant form of `tau` for three qubits.
pub fn bound_suite(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut zero_hits = 0;
    let mut positive_hits = 0;
    for &n in &cfg.sizes {
        for t in 0..cfg.trials {
            let idx = (n * 1_000_003 + t) as u64;
            let s = if t % 4 == 3 {
                random_w_class(n, draw_seed(cfg.seed, 3, idx))?
            } else {
                random_pure(n, draw_seed(cfg.seed, 3, idx))?
            };
            let report = tangle::tau(&s)?;
            let m = tangle::build_m(&s);
            let b = &report.bounds;
            worst = worst
                .max(b.sigma_u.bound - b.spectral)
                .max(b.spectral - report.tau);
            let low_rank = m.rank() <= 1;
            let vanishes = b.spectral <= RANK_TOL;
            if low_rank != vanishes {
                worst = f64::INFINITY;
            }
            if low_rank {
                zero_hits += 1;
            } else {
                positive_hits += 1;
            }
            if let Some(d) = b.qubit_det {
                worst = worst.max((d.exact - report.tau).abs());
            }
            cases += 1;
        }
    }
    Ok(SuiteResult::new(
        "bounds",
        cases,
        worst,
        DOMINANCE_TOL,
        format!("{zero_hits} rank <= 1, {positive_hits} rank >= 2"),
    ))
}

/// Constancy of `Tr M M^dagger / Tr[(rho (x) rho)(P- (x) P-)]`.
pub fn trace_factor_suite(cfg: &VerifyConfig) -> Result<(SuiteResult, Option<f64>)> {
    let mut factors = Vec::new();
    for &n in &cfg.sizes {
        for t in 0..cfg.trials {
            let s = random_pure(n, draw_seed(cfg.seed, 4, (n * 1_000_003 + t) as u64))?;
            if let Some(f) = protocol::verify_trace_identity(&s)?.factor {
                factors.push(f);
            }
        }
    }
    if factors.is_empty() {
        return Ok((SuiteResult::new("trace_factor", 0, 0.0, FACTOR_TOL, "no nonzero cases".into()), None));
    }
    let mean = factors.iter().sum::<f64>() / factors.len() as f64;
    let spread = factors.iter().map(|f| (f - mean).abs()).fold(0.0, f64::max);
    let off = (mean - EXPECTED_FACTOR).abs();
    Ok((
        SuiteResult::new(
            "trace_factor",
            factors.len(),
            spread.max(off),
            FACTOR_TOL,
            format!("factor {mean:.12}, spread {spread:.2e}"),
        ),
        Some(mean),
    ))
}

/// In the Takagi basis the off-diagonal coincidences vanish and the diagonal
/// moduli are the spectrum.
pub fn theorem_suite(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for &n in &cfg.sizes {
        for t in 0..cfg.trials {
            let s = random_pure(n, draw_seed(cfg.seed, 5, (n * 1_000_003 + t) as u64))?;
            let basis = protocol::optimal_basis(&s)?;
            let off = protocol::off_diagonal_signal(&s, &basis)?;
            let diag = protocol::diagonal_moduli(&s, &basis)?;
            let lam = tangle::lambda_spectrum(&s, SpectrumRoute::ViaM)?.values();
            worst = worst.max(off).max(max_gap(&sorted_desc(diag), &lam));
            cases += 1;
        }
    }
    Ok(SuiteResult::new("theorem", cases, worst, THEOREM_TOL, "off-diagonal and diagonal residues".into()))
}

pub fn run_all(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let (factor_suite, trace_factor) = trace_factor_suite(cfg)?;
    let suites = vec![lemma_suite(cfg)?, takagi_suite(cfg)?, bound_suite(cfg)?, factor_suite, theorem_suite(cfg)?];
    let all_passed = suites.iter().all(|s| s.passed);
    Ok(VerifyReport {
        seed: cfg.seed,
        trials: cfg.trials,
        sizes: cfg.sizes.clone(),
        suites,
        trace_factor,
        all_passed,
    })
}

/// The spin-flip kernel with the signs of its `|01>,|10>` entries flipped.
pub fn mutated_kernel() -> ComplexMatrix {
    let mut k = tangle::spin_flip_kernel();
    k[(1, 2)] = -k[(1, 2)];
    k[(2, 1)] = -k[(2, 1)];
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig { seed: 9, trials: 12, ..Default::default() }
    }

    #[test]
    fn all_suites_pass() {
        let report = run_all(&small()).unwrap();
        for s in &report.suites {
            assert!(s.passed, "{s:?}");
        }
        assert!((report.trace_factor.unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn mutated_kernel_breaks_lemma() {
        let cfg = VerifyConfig { kernel: Some(mutated_kernel()), ..small() };
        assert!(!lemma_suite(&cfg).unwrap().passed);
    }

    #[test]
    fn deterministic() {
        assert_eq!(run_all(&small()).unwrap(), run_all(&small()).unwrap());
    }

    #[test]
    fn constructed_matrices_have_requested_structure() {
        let m = random_symmetric(6, 1, SymmetricKind::RankDeficient);
        let sv = linalg::singular_values(&m).unwrap();
        assert_eq!(sv.iter().filter(|&&v| v > 1e-9).count(), 3);
        let m = random_symmetric(5, 2, SymmetricKind::Degenerate);
        let sv = linalg::singular_values(&m).unwrap();
        assert!((sv[0] - sv[1]).abs() < 1e-12 || (sv[1] - sv[2]).abs() < 1e-12);
    }
}
