//! Pure states of a `2 x 2 x n` system, their two-fold copies, reduced
//! two-qubit density matrices and basis changes on the qudit `C`.
//!
//! Amplitudes are stored with `k` fastest: `index(i, j, k) = (2i + j) n + k`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix};

/// Norm deviation above which [`PureState::new`] flags a renormalization.
pub const RENORM_WARN: f64 = 1e-9;
pub const NORM_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    amp: Vec<Complex64>,
    renormalized: bool,
}

impl PureState {
    /// Normalizes `amplitudes` and wraps them as a state with qudit dimension `n`.
    pub fn new(amplitudes: Vec<Complex64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("qudit dimension must be at least 1".into()));
        }
        if amplitudes.len() != 4 * n {
            return Err(Error::Dimension(format!(
                "expected {} amplitudes for n = {n}, got {}",
                4 * n,
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        // Leave already-normalized input bit-identical.
        let amp = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            amplitudes
        } else {
            amplitudes.into_iter().map(|z| z / norm).collect()
        };
        Ok(Self { n, amp, renormalized: (norm - 1.0).abs() > RENORM_WARN })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    /// Whether construction had to rescale the input by more than `1e-9`.
    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (2 * i + j) * self.n + k
    }

    pub fn amp(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.amp[self.index(i, j, k)]
    }

    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("n = {} vs n = {}", self.n, other.n)));
        }
        Ok(self.amp.iter().zip(&other.amp).map(|(a, b)| a.conj() * b).sum())
    }

    /// Unnormalized two-qubit slice `<k|_C psi>` in the order `|00>,|01>,|10>,|11>`.
    pub fn slice(&self, k: usize) -> Result<BipartiteSlice> {
        if k >= self.n {
            return Err(Error::Dimension(format!("slice {k} out of range for n = {}", self.n)));
        }
        let mut v = [c(0.0, 0.0); 4];
        for (ab, slot) in v.iter_mut().enumerate() {
            *slot = self.amp[ab * self.n + k];
        }
        Ok(BipartiteSlice(v))
    }

    pub fn slices(&self) -> Vec<BipartiteSlice> {
        (0..self.n).map(|k| self.slice(k).expect("in range")).collect()
    }

    /// The `4 x n` matrix whose columns are the slices.
    pub fn slice_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(4, self.n, |ab, k| self.amp[ab * self.n + k])
    }

    /// `rho_AB = Tr_C |psi><psi|`, summed entry by entry over `k`.
    pub fn reduced_ab(&self) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for k in 0..self.n {
            for x in 0..4 {
                for y in 0..4 {
                    m[(x, y)] += self.amp[x * self.n + k] * self.amp[y * self.n + k].conj();
                }
            }
        }
        DensityMatrix { m }
    }

    /// Local basis change on `C` with the slice transformation `phi'_k = sum_l phi_l Q_lk`.
    ///
    /// This is the convention that makes the M matrix transform as
    /// `M -> Q^T M Q`. The corresponding measurement vectors on `C` are the
    /// complex conjugates of the columns of `Q`.
    pub fn apply_c_basis(&self, basis: &CBasis) -> Result<PureState> {
        let q = basis.matrix();
        if q.nrows() != self.n {
            return Err(Error::Dimension(format!(
                "basis of size {} on a state with n = {}",
                q.nrows(),
                self.n
            )));
        }
        let rotated = self.slice_matrix() * q;
        let amp = (0..4 * self.n).map(|idx| rotated[(idx / self.n, idx % self.n)]).collect();
        Ok(PureState { n: self.n, amp, renormalized: false })
    }

    /// Density matrix `|psi><psi|` of dimension `4n`.
    pub fn projector(&self) -> DensityMatrix {
        let v = DVector::from_column_slice(&self.amp);
        DensityMatrix { m: &v * v.adjoint() }
    }
}

/// Named states used as fixtures and on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Canonical {
    Ghz,
    W,
    Product,
    /// `cos(theta)|000> + sin(theta)|111>`, `theta` in `[0, pi/2]`.
    GeneralizedGhz(f64),
}

impl std::str::FromStr for Canonical {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "ghz" => Ok(Canonical::Ghz),
            "w" => Ok(Canonical::W),
            "product" => Ok(Canonical::Product),
            _ => {
                let theta = lower
                    .strip_prefix("gghz:")
                    .ok_or_else(|| Error::Parse(format!("unknown state name `{s}`")))?;
                let theta: f64 = theta
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad angle in `{s}`")))?;
                if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
                    return Err(Error::Domain(format!("angle {theta} outside [0, pi/2]")));
                }
                Ok(Canonical::GeneralizedGhz(theta))
            }
        }
    }
}

pub fn canonical_state(name: Canonical) -> PureState {
    let n = 2;
    let mut amp = vec![c(0.0, 0.0); 8];
    let at = |i: usize, j: usize, k: usize| (2 * i + j) * n + k;
    match name {
        Canonical::Ghz => {
            amp[at(0, 0, 0)] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            amp[at(1, 1, 1)] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        }
        Canonical::W => {
            let w = 1.0 / 3f64.sqrt();
            amp[at(0, 0, 1)] = c(w, 0.0);
            amp[at(0, 1, 0)] = c(w, 0.0);
            amp[at(1, 0, 0)] = c(w, 0.0);
        }
        Canonical::Product => amp[0] = c(1.0, 0.0),
        Canonical::GeneralizedGhz(theta) => {
            amp[at(0, 0, 0)] = c(theta.cos(), 0.0);
            amp[at(1, 1, 1)] = c(theta.sin(), 0.0);
        }
    }
    PureState::new(amp, n).expect("canonical states are valid")
}

/// Haar-random pure state from `4n` seeded standard complex Gaussians.
pub fn random_pure(n: usize, seed: u64) -> Result<PureState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = (0..4 * n)
        .map(|_| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    PureState::new(amp, n)
}

/// Haar-random `n x n` unitary (QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal divided out).
pub fn random_unitary(n: usize, seed: u64) -> CBasis {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let (q, r) = g.qr().unpack();
    let phases = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let d = r[(i, i)];
            if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) }
        } else {
            c(0.0, 0.0)
        }
    });
    CBasis::new(q * phases).expect("QR factor is unitary")
}

/// Unnormalized two-qubit vector `|phi_k>_AB`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteSlice(pub [Complex64; 4]);

impl BipartiteSlice {
    pub fn as_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.0)
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;
    pub const EIGEN_TOL: f64 = 1e-10;

    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Dimension("density matrix must be square and nonempty".into()));
        }
        let herm = linalg::hermiticity_defect(&m);
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > Self::TRACE_TOL || tr.im.abs() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let (values, _) = linalg::eigh(&m)?;
        if values[0] < -Self::EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {:.3e}", values[0])));
        }
        Ok(Self { m })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { m: linalg::identity(dim).unscale(dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    /// Convex combination `(1 - t) self + t other` (dimensions must agree).
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(DensityMatrix { m: self.m.scale(1.0 - t) + other.m.scale(t) })
    }
}

/// Unitary change of basis on the qudit `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct CBasis {
    q: ComplexMatrix,
}

impl CBasis {
    pub fn new(q: ComplexMatrix) -> Result<Self> {
        let defect = linalg::unitarity_defect(&q);
        if defect > UNITARY_TOL {
            return Err(Error::InvalidBasis(defect));
        }
        Ok(Self { q })
    }

    /// Projects `q` onto the closest unitary first.
    pub fn nearest(q: &ComplexMatrix) -> Result<Self> {
        Self::new(linalg::nearest_unitary(q)?)
    }

    pub fn identity(n: usize) -> Self {
        Self { q: linalg::identity(n) }
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.q
    }

    /// The vector `|b_k>` measured on `C` for outcome `k`.
    pub fn measurement_vector(&self, k: usize) -> Vec<Complex64> {
        self.q.column(k).iter().map(|z| z.conj()).collect()
    }
}

/// `|psi_1> (x) |psi_2>` in subsystem order `A1 B1 C1 A2 B2 C2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoCopyState {
    n: usize,
    amp: Vec<Complex64>,
}

impl TwoCopyState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Amplitude at `(a1, b1, c1, a2, b2, c2)`.
    pub fn amp(&self, first: (usize, usize, usize), second: (usize, usize, usize)) -> Complex64 {
        let d = 4 * self.n;
        let idx = |(a, b, k): (usize, usize, usize)| (2 * a + b) * self.n + k;
        self.amp[idx(first) * d + idx(second)]
    }
}

pub fn two_copy(first: &PureState, second: &PureState) -> Result<TwoCopyState> {
    if first.n != second.n {
        return Err(Error::Dimension(format!("n = {} vs n = {}", first.n, second.n)));
    }
    let amp = first
        .amp
        .iter()
        .flat_map(|a| second.amp.iter().map(move |b| a * b))
        .collect();
    Ok(TwoCopyState { n: first.n, amp })
}

/// On-disk representation: `{"n": 2, "amplitudes": [[re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub n: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_state(s: &PureState) -> Self {
        Self { n: s.n, amplitudes: s.amp.iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn into_state(self) -> Result<PureState> {
        if self.amplitudes.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Parse("non-finite amplitude".into()));
        }
        let amp = self.amplitudes.iter().map(|&[re, im]| c(re, im)).collect();
        PureState::new(amp, self.n)
    }
}

pub fn parse_state_json(text: &str) -> Result<PureState> {
    let file: StateFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_state()
}

pub fn state_to_json(s: &PureState) -> String {
    serde_json::to_string_pretty(&StateFile::from_state(s)).expect("finite amplitudes serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn make_state_examples() {
        let mut amp = vec![c(0.0, 0.0); 8];
        amp[0] = c(FRAC_1_SQRT_2, 0.0);
        amp[7] = c(FRAC_1_SQRT_2, 0.0);
        let s = PureState::new(amp, 2).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!(!s.was_renormalized());

        let mut amp = vec![c(0.0, 0.0); 8];
        amp[0] = c(2.0, 0.0);
        let s = PureState::new(amp, 2).unwrap();
        assert!(s.was_renormalized());
        assert_eq!(s.amp(0, 0, 0), c(1.0, 0.0));

        assert!(matches!(PureState::new(vec![c(0.0, 0.0); 12], 3), Err(Error::InvalidState(_))));
        assert!(matches!(PureState::new(vec![c(1.0, 0.0); 7], 2), Err(Error::Dimension(_))));
        assert!(matches!(PureState::new(vec![], 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn canonical_states() {
        let ghz = canonical_state(Canonical::Ghz);
        assert!((ghz.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((ghz.amplitudes()[7].re - FRAC_1_SQRT_2).abs() < 1e-15);
        let g = canonical_state(Canonical::GeneralizedGhz(PI / 4.0));
        assert!(g.amplitudes().iter().zip(ghz.amplitudes()).all(|(a, b)| (a - b).norm() < 1e-15));
        let w = canonical_state(Canonical::W);
        let third = 1.0 / 3f64.sqrt();
        for (i, j, k) in [(0, 0, 1), (0, 1, 0), (1, 0, 0)] {
            assert!((w.amp(i, j, k).re - third).abs() < 1e-15);
        }
        assert_eq!("gghz:0.5".parse::<Canonical>().unwrap(), Canonical::GeneralizedGhz(0.5));
        assert!("gghz:2".parse::<Canonical>().is_err());
        assert!("bell".parse::<Canonical>().is_err());
    }

    #[test]
    fn random_pure_is_deterministic_and_normalized() {
        assert_eq!(random_pure(2, 7).unwrap(), random_pure(2, 7).unwrap());
        assert!((random_pure(5, 1).unwrap().norm() - 1.0).abs() < 1e-12);
        assert_ne!(random_pure(2, 7).unwrap(), random_pure(2, 8).unwrap());
    }

    #[test]
    fn random_pure_first_moment() {
        // E|amp_0|^2 = 1/(4n) for Haar vectors; Var = (4n-1)/((4n)^2 (4n+1)).
        let n = 2;
        let samples: Vec<f64> =
            (1..=1000).map(|seed| random_pure(n, seed).unwrap().amplitudes()[0].norm_sqr()).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let d = 4.0 * n as f64;
        let sd = ((d - 1.0) / (d * d * (d + 1.0))).sqrt();
        let se = sd / (samples.len() as f64).sqrt();
        assert!((mean - 1.0 / d).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn slices() {
        let ghz = canonical_state(Canonical::Ghz);
        assert_eq!(ghz.slice(0).unwrap().0, [c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(ghz.slice(1).unwrap().0, [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0)]);
        let w = canonical_state(Canonical::W);
        let third = 1.0 / 3f64.sqrt();
        assert_eq!(w.slice(1).unwrap().0, [c(third, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(w.slice(2), Err(Error::Dimension(_))));
    }

    #[test]
    fn reduced_ab_examples() {
        let rho = canonical_state(Canonical::Ghz).reduced_ab();
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected[(0, 0)] = c(0.5, 0.0);
        expected[(3, 3)] = c(0.5, 0.0);
        assert!(linalg::max_abs_diff(rho.matrix(), &expected) < 1e-15);

        let rho = canonical_state(Canonical::Product).reduced_ab();
        assert_eq!(rho.matrix()[(0, 0)], c(1.0, 0.0));
        assert!((rho.matrix().norm() - 1.0).abs() < 1e-15);

        let s = random_pure(3, 5).unwrap();
        let rho = s.reduced_ab();
        assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        let psi = s.slice_matrix();
        assert!(linalg::max_abs_diff(rho.matrix(), &(&psi * psi.adjoint())) < 1e-15);
    }

    #[test]
    fn c_basis_changes() {
        let s = random_pure(3, 2).unwrap();
        assert_eq!(s.apply_c_basis(&CBasis::identity(3)).unwrap().amplitudes(), s.amplitudes());
        let q = random_unitary(3, 4);
        let t = s.apply_c_basis(&q).unwrap();
        assert!((t.norm() - 1.0).abs() < 1e-12);
        assert!(linalg::max_abs_diff(t.reduced_ab().matrix(), s.reduced_ab().matrix()) < 1e-12);
        assert!(matches!(s.apply_c_basis(&CBasis::identity(2)), Err(Error::Dimension(_))));
        let bad = ComplexMatrix::from_element(3, 3, c(1.0, 0.0));
        assert!(matches!(CBasis::new(bad), Err(Error::InvalidBasis(_))));
    }

    #[test]
    fn two_copy_examples() {
        let p = canonical_state(Canonical::Product);
        let pp = two_copy(&p, &p).unwrap();
        assert_eq!(pp.amplitudes().len(), 64);
        assert_eq!(pp.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert_eq!(pp.amplitudes()[0], c(1.0, 0.0));
        let s = random_pure(3, 8).unwrap();
        let t = random_pure(3, 9).unwrap();
        assert!((two_copy(&s, &t).unwrap().norm() - 1.0).abs() < 1e-12);
        assert!(matches!(two_copy(&s, &p), Err(Error::Dimension(_))));
    }

    #[test]
    fn state_file_parsing() {
        let s = random_pure(2, 3).unwrap();
        let back = parse_state_json(&state_to_json(&s)).unwrap();
        assert!(back.amplitudes().iter().zip(s.amplitudes()).all(|(a, b)| (a - b).norm() < 1e-15));
        assert!(matches!(parse_state_json(r#"{"n": 2, "amplitudes": [[1, 0]]}"#), Err(Error::Dimension(_))));
        assert!(parse_state_json(r#"{"n": 1, "amplitudes": [[1e400, 0], [0, 0], [0, 0], [0, 0]]}"#).is_err());
        assert!(matches!(parse_state_json("{"), Err(Error::Parse(_))));
    }
}
