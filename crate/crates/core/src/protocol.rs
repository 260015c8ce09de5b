//! Simulation of the two-copy measurement scheme.
//!
//! Two copies of the state are measured with the singlet projector on
//! `(A1, A2)` and on `(B1, B2)`, and with projectors onto basis vectors of
//! `C1` and `C2`. The fourfold coincidence probability `p_ij` of outcome pair
//! `(i, j)` gives `|M~_ij| = 2 sqrt(p_ij)` for the rotated matrix
//! `M~ = Q^T M Q`. In the Takagi basis of `M` the off-diagonal coincidences
//! vanish and the diagonal moduli are the lambda spectrum.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix};
use crate::state::{two_copy, CBasis, PureState};
use crate::tangle::{self, LambdaSpectrum};

/// Singlet projector `|Psi-><Psi-|` on a qubit pair, basis `|00>,|01>,|10>,|11>`.
pub fn antisym_projector() -> ComplexMatrix {
    let v = [c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0), c(0.0, 0.0)];
    ComplexMatrix::from_fn(4, 4, |x, y| v[x] * v[y].conj())
}

/// `A_ij = P-(A1A2) (x) P-(B1B2) (x) P_i(C1) (x) P_j(C2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoCopyObservable {
    pub basis1: CBasis,
    pub basis2: CBasis,
    pub i: usize,
    pub j: usize,
}

impl TwoCopyObservable {
    pub fn new(basis1: CBasis, basis2: CBasis, i: usize, j: usize) -> Result<Self> {
        if basis1.n() != basis2.n() {
            return Err(Error::Dimension("C bases of different size".into()));
        }
        if i >= basis1.n() || j >= basis1.n() {
            return Err(Error::Dimension(format!("outcome ({i}, {j}) out of range for n = {}", basis1.n())));
        }
        Ok(Self { basis1, basis2, i, j })
    }

    /// Same basis on both copies.
    pub fn shared(basis: &CBasis, i: usize, j: usize) -> Result<Self> {
        Self::new(basis.clone(), basis.clone(), i, j)
    }

    fn check(&self, s: &PureState) -> Result<()> {
        if self.basis1.n() != s.n() {
            return Err(Error::Dimension(format!(
                "observable for n = {} on a state with n = {}",
                self.basis1.n(),
                s.n()
            )));
        }
        Ok(())
    }
}

/// `<psi|<psi| A_ij |psi>|psi>`, from the rotated slices
/// `|(phi'_i)^T K phi'_j|^2 / 4` without forming the two-copy vector.
pub fn expectation(s: &PureState, obs: &TwoCopyObservable) -> Result<f64> {
    obs.check(s)?;
    let first = s.apply_c_basis(&obs.basis1)?.slice(obs.i)?;
    let second = s.apply_c_basis(&obs.basis2)?.slice(obs.j)?;
    let k = tangle::spin_flip_kernel();
    let amp = (first.as_vector().transpose() * k * second.as_vector())[(0, 0)];
    Ok(amp.norm_sqr() / 4.0)
}

/// `<psi|<psi| A_ij |psi>|psi>` evaluated as a full double sum over the
/// `16 n^2`-dimensional two-copy vector and the entries of `A_ij`.
pub fn expectation_materialized(s: &PureState, obs: &TwoCopyObservable) -> Result<f64> {
    obs.check(s)?;
    let n = s.n();
    let copies = two_copy(s, s)?;
    let p = antisym_projector();
    let c_proj = |basis: &CBasis, m: usize| {
        let b = basis.measurement_vector(m);
        ComplexMatrix::from_fn(n, n, |x, y| b[x] * b[y].conj())
    };
    let p1 = c_proj(&obs.basis1, obs.i);
    let p2 = c_proj(&obs.basis2, obs.j);

    let labels: Vec<(usize, usize, usize)> =
        (0..2).flat_map(|a| (0..2).flat_map(move |b| (0..n).map(move |k| (a, b, k)))).collect();
    let mut total = c(0.0, 0.0);
    for &l1 in &labels {
        for &l2 in &labels {
            let bra = copies.amp(l1, l2).conj();
            if bra.norm() == 0.0 {
                continue;
            }
            for &r1 in &labels {
                for &r2 in &labels {
                    let ket = copies.amp(r1, r2);
                    if ket.norm() == 0.0 {
                        continue;
                    }
                    let a = p[(2 * l1.0 + l2.0, 2 * r1.0 + r2.0)];
                    let b = p[(2 * l1.1 + l2.1, 2 * r1.1 + r2.1)];
                    let entry = a * b * p1[(l1.2, r1.2)] * p2[(l2.2, r2.2)];
                    total += bra * entry * ket;
                }
            }
        }
    }
    Ok(total.re)
}

/// `2 <Psi-|<Psi-| <b_i|<b_j| psi psi>` for every outcome pair; this is `Q^T M Q`.
fn rotated_amplitudes(s: &PureState, basis: &CBasis) -> Result<ComplexMatrix> {
    let rotated = s.apply_c_basis(basis)?;
    Ok(tangle::build_m(&rotated).into_matrix())
}

/// Sum of the coincidence probabilities over all `i != j` settings with
/// the same basis on both copies.
pub fn off_diagonal_signal(s: &PureState, basis: &CBasis) -> Result<f64> {
    let m = rotated_amplitudes(s, basis)?;
    let n = s.n();
    Ok((0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].norm_sqr() / 4.0)
        .sum())
}

/// `|M~_ii| = 2 sqrt(p_ii)` for each `i`, sorted descending.
pub fn diagonal_moduli(s: &PureState, basis: &CBasis) -> Result<Vec<f64>> {
    let m = rotated_amplitudes(s, basis)?;
    let mut d: Vec<f64> = (0..s.n()).map(|i| m[(i, i)].norm()).collect();
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// The basis `conj(U)` from the Takagi factorization `M = U diag(lam) U^T`.
pub fn optimal_basis(s: &PureState) -> Result<CBasis> {
    let factors = linalg::takagi(tangle::build_m(s).matrix())?;
    let q = factors.u.map(|z| z.conj());
    CBasis::new(q.clone()).or_else(|_| CBasis::nearest(&q))
}

/// Parametrized basis on `C`, as turned by the experimenter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BasisChart {
    /// Quarter- and half-wave plate angles in front of a polarizing beam
    /// splitter (qubit `C` only).
    WavePlates { quarter: f64, half: f64 },
    /// `exp(i H)` with `H` Hermitian: diagonal entries first, then the real
    /// and imaginary parts of the upper triangle row by row.
    Hermitian { params: Vec<f64> },
}

fn rotation(theta: f64) -> ComplexMatrix {
    let (s, co) = theta.sin_cos();
    ComplexMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

/// Jones matrix of a wave plate with retardance `phase` and fast axis at `theta`.
fn wave_plate(theta: f64, phase: Complex64) -> ComplexMatrix {
    let d = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), phase]);
    rotation(theta) * d * rotation(-theta)
}

impl BasisChart {
    pub(crate) fn for_dimension(n: usize, params: &[f64]) -> Self {
        if n == 2 {
            BasisChart::WavePlates { quarter: params[0], half: params[1] }
        } else {
            BasisChart::Hermitian { params: params.to_vec() }
        }
    }

    pub fn dimension_of_params(n: usize) -> usize {
        if n == 2 { 2 } else { n * n }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            BasisChart::WavePlates { quarter, half } => vec![*quarter, *half],
            BasisChart::Hermitian { params } => params.clone(),
        }
    }

    pub fn basis(&self, n: usize) -> Result<CBasis> {
        match self {
            BasisChart::WavePlates { quarter, half } => {
                if n != 2 {
                    return Err(Error::Dimension("wave plates act on a qubit".into()));
                }
                // Plates J map the measured vectors onto H/V, so b_k = J^dagger e_k
                // and Q = conj(b) column-wise = J^T.
                let j = wave_plate(*half, c(-1.0, 0.0)) * wave_plate(*quarter, c(0.0, 1.0));
                CBasis::new(j.transpose())
            }
            BasisChart::Hermitian { params } => {
                if params.len() != n * n {
                    return Err(Error::Dimension(format!("{} parameters for n = {n}", params.len())));
                }
                let mut h = ComplexMatrix::zeros(n, n);
                for k in 0..n {
                    h[(k, k)] = c(params[k], 0.0);
                }
                let mut idx = n;
                for r in 0..n {
                    for col in r + 1..n {
                        let z = c(params[idx], params[idx + 1]);
                        h[(r, col)] = z;
                        h[(col, r)] = z.conj();
                        idx += 2;
                    }
                }
                let (values, vectors) = linalg::eigh(&h)?;
                let phases = ComplexMatrix::from_fn(n, n, |a, b| {
                    if a == b { Complex64::from_polar(1.0, values[a]) } else { c(0.0, 0.0) }
                });
                CBasis::nearest(&(&vectors * phases * vectors.adjoint()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    pub seed: u64,
    /// Coordinate sweeps allowed per start.
    pub max_iters: usize,
    pub tol: f64,
    /// Random restarts after the start at the identity.
    pub restarts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { seed: 0, max_iters: 2000, tol: 1e-8, restarts: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchStep {
    pub params: Vec<f64>,
    pub signal: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisSearchTrace {
    /// Accepted steps; the signal is nonincreasing along the list.
    pub iterations: Vec<SearchStep>,
    pub final_chart: BasisChart,
    #[serde(skip)]
    pub final_basis: CBasis,
    pub final_signal: f64,
    pub converged: bool,
    pub starts_used: usize,
}

/// Derivative-free minimization of `objective` over `dim` real parameters.
///
/// Each sweep tries one step per coordinate; a coordinate's step doubles on
/// success and is halved with flipped sign on failure. A successful sweep is
/// followed by an expanding pattern move along its net displacement. The
/// first start is the origin, later ones are drawn uniformly from
/// `[-pi, pi]^dim`.
pub(crate) fn coordinate_search(
    objective: impl Fn(&[f64]) -> f64,
    dim: usize,
    cfg: &SearchConfig,
) -> (Vec<SearchStep>, Vec<f64>, f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::new();
    let mut best_x = vec![0.0; dim];
    let mut best_f = objective(&best_x);
    history.push(SearchStep { params: best_x.clone(), signal: best_f });
    let mut starts = 0;

    for start in 0..=cfg.restarts {
        if best_f <= cfg.tol {
            break;
        }
        starts += 1;
        let mut x: Vec<f64> = if start == 0 {
            vec![0.0; dim]
        } else {
            (0..dim).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
        };
        let mut fx = objective(&x);
        let mut steps = vec![0.3_f64; dim];
        for _ in 0..cfg.max_iters {
            if fx <= cfg.tol || steps.iter().all(|s| s.abs() < 1e-14) {
                break;
            }
            let base = x.clone();
            let f_base = fx;
            for d in 0..dim {
                let mut y = x.clone();
                y[d] += steps[d];
                let fy = objective(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    steps[d] *= 2.0;
                } else {
                    steps[d] *= -0.5;
                }
            }
            // Pattern move along the sweep's net displacement, for valleys
            // that are not aligned with a coordinate axis.
            if fx < f_base {
                let dir: Vec<f64> = x.iter().zip(&base).map(|(a, b)| a - b).collect();
                let mut reach = 1.0;
                loop {
                    let y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + reach * d).collect();
                    let fy = objective(&y);
                    if fy >= fx {
                        break;
                    }
                    x = y;
                    fx = fy;
                    reach *= 2.0;
                }
            }
            if fx < best_f {
                best_f = fx;
                best_x = x.clone();
                history.push(SearchStep { params: x.clone(), signal: fx });
            }
        }
        if fx > cfg.tol {
            newton_polish(&objective, &mut x, &mut fx, cfg.tol);
            if fx < best_f {
                best_f = fx;
                best_x = x.clone();
                history.push(SearchStep { params: x.clone(), signal: fx });
            }
        }
    }
    (history, best_x, best_f, starts)
}

/// Damped Newton iterations on a finite-difference Hessian. Coordinate moves
/// stall in narrow valleys, which appear wherever the chart is close to
/// singular; the quadratic model does not care about the valley's direction.
fn newton_polish(objective: &impl Fn(&[f64]) -> f64, x: &mut Vec<f64>, fx: &mut f64, tol: f64) {
    const H: f64 = 1e-4;
    let dim = x.len();
    let mut mu = 1e-6;
    for _ in 0..50 {
        if *fx <= tol {
            return;
        }
        let at = |shifts: &[(usize, f64)]| {
            let mut y = x.clone();
            for &(d, t) in shifts {
                y[d] += t;
            }
            objective(&y)
        };
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(dim, dim);
        for a in 0..dim {
            let fp = at(&[(a, H)]);
            let fm = at(&[(a, -H)]);
            grad[a] = (fp - fm) / (2.0 * H);
            hess[(a, a)] = (fp - 2.0 * *fx + fm) / (H * H);
            for b in 0..a {
                let v = (at(&[(a, H), (b, H)]) - at(&[(a, H), (b, -H)]) - at(&[(a, -H), (b, H)])
                    + at(&[(a, -H), (b, -H)]))
                    / (4.0 * H * H);
                hess[(a, b)] = v;
                hess[(b, a)] = v;
            }
        }
        let scale = hess.diagonal().amax().max(1e-12);
        let mut improved = false;
        while mu < 1e6 {
            let damped = &hess + DMatrix::identity(dim, dim) * (mu * scale);
            if let Some(ch) = damped.cholesky() {
                let step = ch.solve(&-&grad);
                let y: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
                let fy = objective(&y);
                if fy < *fx {
                    *x = y;
                    *fx = fy;
                    mu = (mu * 0.1).max(1e-12);
                    improved = true;
                    break;
                }
            }
            mu *= 10.0;
        }
        if !improved {
            return;
        }
    }
}

/// Searches for a basis with vanishing off-diagonal coincidences, the way
/// the wave plates are turned in the experiment.
pub fn search_basis(s: &PureState, cfg: &SearchConfig) -> Result<BasisSearchTrace> {
    if cfg.max_iters == 0 || cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::Domain("search needs max_iters >= 1 and tol > 0".into()));
    }
    let n = s.n();
    let m = tangle::build_m(s);
    let dim = BasisChart::dimension_of_params(n);
    let objective = |p: &[f64]| match BasisChart::for_dimension(n, p).basis(n) {
        Ok(b) => off_diag_from_m(&m, &b),
        Err(_) => f64::INFINITY,
    };
    let (iterations, best, final_signal, starts_used) = coordinate_search(objective, dim, cfg);
    let final_chart = BasisChart::for_dimension(n, &best);
    let final_basis = final_chart.basis(n)?;
    Ok(BasisSearchTrace {
        iterations,
        final_chart,
        final_basis,
        final_signal,
        converged: final_signal <= cfg.tol,
        starts_used,
    })
}

fn off_diag_from_m(m: &tangle::MMatrix, b: &CBasis) -> f64 {
    let t = m.transformed(b.matrix());
    let n = t.nrows();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += t[(i, j)].norm_sqr() / 4.0;
            }
        }
    }
    total
}

/// Finite-sample estimate of one coincidence probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShotEstimate {
    pub counts: u64,
    pub shots: u64,
    pub p_hat: f64,
    /// `2 sqrt(p_hat)`.
    pub m_abs_hat: f64,
    /// Binomial standard error of `p_hat`.
    pub p_std_err: f64,
    /// Standard error propagated through `2 sqrt(p)`; `None` when `p_hat = 0`,
    /// where the derivative is unbounded.
    pub m_std_err: Option<f64>,
}

impl ShotEstimate {
    pub fn from_counts(counts: u64, shots: u64) -> Self {
        let p_hat = counts as f64 / shots as f64;
        let p_std_err = (p_hat * (1.0 - p_hat) / shots as f64).sqrt();
        let m_std_err = (p_hat > 0.0).then(|| p_std_err / p_hat.sqrt());
        Self { counts, shots, p_hat, m_abs_hat: 2.0 * p_hat.sqrt(), p_std_err, m_std_err }
    }
}

/// Draws `shots` Bernoulli trials with success probability `p` as one binomial draw.
pub fn sample_probability(p: f64, shots: u64, seed: u64) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(Error::Domain("shots must be at least 1".into()));
    }
    let p = p.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = Binomial::new(shots, p)
        .map_err(|e| Error::Numeric(format!("binomial sampler: {e}")))?
        .sample(&mut rng);
    Ok(ShotEstimate::from_counts(counts, shots))
}

pub fn sample_shots(s: &PureState, obs: &TwoCopyObservable, shots: u64, seed: u64) -> Result<ShotEstimate> {
    sample_probability(expectation(s, obs)?, shots, seed)
}

/// Independent seed for setting `index` of a run seeded with `seed` (SplitMix64 step).
pub fn setting_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub shots_per_setting: u64,
    pub seed: u64,
    /// Search for the basis instead of taking it from the Takagi factorization.
    pub search: Option<SearchConfig>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SettingEstimate {
    pub i: usize,
    pub j: usize,
    pub probability: f64,
    pub estimate: ShotEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolReport {
    pub n: usize,
    pub shots_per_setting: u64,
    pub seed: u64,
    pub tau_hat: f64,
    /// Delta-method standard error of `tau_hat` (`None` if any diagonal count is 0).
    pub tau_std_err: Option<f64>,
    pub c_a_hat: f64,
    pub c_hat: f64,
    pub lam_hat: [f64; 4],
    /// Basis matrix `Q` as `[re, im]` pairs, row-major.
    pub basis: Vec<Vec<[f64; 2]>>,
    pub diagonal: Vec<SettingEstimate>,
    pub off_diagonal: Vec<SettingEstimate>,
    /// Estimated `sum_{i != j} p_ij`.
    pub residual_off_diagonal: f64,
    pub search: Option<BasisSearchTrace>,
}

pub fn matrix_to_pairs(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|col| [m[(r, col)].re, m[(r, col)].im]).collect()).collect()
}

/// `tau` from measured diagonal moduli, sorted and truncated to four.
pub fn tau_from_moduli(moduli: &[f64]) -> (f64, f64, f64, [f64; 4]) {
    let lam = LambdaSpectrum::from_estimates(moduli);
    (tangle::tau_from_spectrum(&lam), tangle::localizable_concurrence(&lam), tangle::concurrence(&lam), lam.values())
}

/// Runs the `n(n+1)/2` settings `A_ij` (`i <= j`) in the chosen basis and
/// evaluates `tau` on the measured diagonal.
pub fn tau_from_protocol(s: &PureState, cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    if cfg.shots_per_setting == 0 {
        return Err(Error::Domain("shots must be at least 1".into()));
    }
    let n = s.n();
    let (basis, search) = match &cfg.search {
        Some(sc) => {
            let trace = search_basis(s, sc)?;
            (trace.final_basis.clone(), Some(trace))
        }
        None => (optimal_basis(s)?, None),
    };

    let mut diagonal = Vec::with_capacity(n);
    let mut off_diagonal = Vec::new();
    let mut index = 0u64;
    for i in 0..n {
        for j in i..n {
            let obs = TwoCopyObservable::shared(&basis, i, j)?;
            let probability = expectation(s, &obs)?;
            let estimate = sample_probability(probability, cfg.shots_per_setting, setting_seed(cfg.seed, index))?;
            index += 1;
            let row = SettingEstimate { i, j, probability, estimate };
            if i == j {
                diagonal.push(row);
            } else {
                off_diagonal.push(row);
            }
        }
    }

    let moduli: Vec<f64> = diagonal.iter().map(|d| d.estimate.m_abs_hat).collect();
    let (tau_hat, c_a_hat, c_hat, lam_hat) = tau_from_moduli(&moduli);
    let tau_std_err = delta_method(&moduli, &diagonal);
    let residual_off_diagonal = 2.0 * off_diagonal.iter().map(|d| d.estimate.p_hat).sum::<f64>();

    Ok(ProtocolReport {
        n,
        shots_per_setting: cfg.shots_per_setting,
        seed: cfg.seed,
        tau_hat,
        tau_std_err,
        c_a_hat,
        c_hat,
        lam_hat,
        basis: matrix_to_pairs(basis.matrix()),
        diagonal,
        off_diagonal,
        residual_off_diagonal,
        search,
    })
}

fn delta_method(moduli: &[f64], diagonal: &[SettingEstimate]) -> Option<f64> {
    let base = tau_from_moduli(moduli).0;
    let mut var = 0.0;
    for (k, d) in diagonal.iter().enumerate() {
        let se = d.estimate.m_std_err?;
        let h = 1e-7;
        let mut bumped = moduli.to_vec();
        bumped[k] += h;
        let grad = (tau_from_moduli(&bumped).0 - base) / h;
        var += (grad * se).powi(2);
    }
    Some(var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceIdentity {
    /// `sum |M_ij|^2`.
    pub lhs: f64,
    /// `Tr[(rho_AB (x) rho_AB)(P- (x) P-)]`.
    pub rhs: f64,
    /// `lhs / rhs`; `None` when both vanish.
    pub factor: Option<f64>,
}

/// Compares `Tr M M^dagger` with the two-copy singlet-singlet probability of
/// the reduced state.
pub fn verify_trace_identity(s: &PureState) -> Result<TraceIdentity> {
    let lhs = tangle::build_m(s).trace_mm_dagger();
    let rho = s.reduced_ab();
    let r = rho.matrix();
    let p = antisym_projector();
    // Index u = (a1, b1, a2, b2); rho (x) rho acts as r[(a1 b1), .] r[(a2 b2), .]
    // and the projector as p[(a1 a2), .] p[(b1 b2), .].
    let split = |u: usize| ((u >> 3) & 1, (u >> 2) & 1, (u >> 1) & 1, u & 1);
    let mut rhs = c(0.0, 0.0);
    for u in 0..16 {
        let (a1, b1, a2, b2) = split(u);
        for v in 0..16 {
            let (a1p, b1p, a2p, b2p) = split(v);
            let state = r[(2 * a1 + b1, 2 * a1p + b1p)] * r[(2 * a2 + b2, 2 * a2p + b2p)];
            let proj = p[(2 * a1p + a2p, 2 * a1 + a2)] * p[(2 * b1p + b2p, 2 * b1 + b2)];
            rhs += state * proj;
        }
    }
    let rhs = rhs.re;
    if rhs.abs() <= f64::MIN_POSITIVE {
        if lhs > 1e-12 {
            return Err(Error::InternalInconsistency(format!(
                "Tr M M^dagger = {lhs:.3e} but the two-copy probability vanishes"
            )));
        }
        return Ok(TraceIdentity { lhs, rhs, factor: None });
    }
    Ok(TraceIdentity { lhs, rhs, factor: Some(lhs / rhs) })
}
