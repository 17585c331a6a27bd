//! Channel synthesis: sensing covariances, Rayleigh communication channels,
//! and the deterministic generator they draw from.
//!
//! The scenario model is a uniform linear array with half-wavelength spacing.
//! The sensing covariance Σ_s is a sum of steering-vector outer products over
//! point scatterers; the downlink H_c has i.i.d. circularly symmetric complex
//! Gaussian entries (Rayleigh fading). Noise powers derive from an SNR in dB
//! through σ² = P_T / 10^(SNR/10).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::numerics::{hermitian_eig, EigSystem};
use crate::{CasError, Result};

/// Eigenvalues closer to zero than this (relative to the largest one) are
/// snapped to exactly zero when a model caches its eigendecomposition, so
/// that rank-deficient covariances produce clean "inactive subchannel"
/// semantics instead of levels like 1e17 built from roundoff noise.
const EIG_TRUNCATION: f64 = 1e-12;

/// Deterministic 64-bit generator (SplitMix64).
///
/// The exact algorithm is fixed so that seeded experiment output is portable
/// across platforms and releases: each call adds the increment
/// `0x9E3779B97F4A7C15` to the state and mixes the result with two
/// xor-shift-multiply rounds (constants `0xBF58476D1CE4E5B9`,
/// `0x94D049BB133111EB`, final shift 31).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Generator for one Monte-Carlo trial: state seeded with `seed ^ trial`.
    /// Distinct trials get disjoint streams and may run concurrently.
    pub fn substream(seed: u64, trial: u64) -> Self {
        SplitMix64::new(seed ^ trial)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform on [0, 1): the top 53 bits of the next word, scaled by 2⁻⁵³.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Circularly symmetric complex Gaussian CN(0, 1)
    /// (real and imaginary parts each N(0, 1/2)).
    ///
    /// Box–Muller in polar form: draw u₁ uniform on (0, 1] and u₂ uniform on
    /// [0, 1) — in that order — and return √(−ln u₁) · e^(j·2π·u₂).
    pub fn next_complex_gaussian(&mut self) -> Complex64 {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        let radius = (-u1.ln()).sqrt();
        let phase = 2.0 * std::f64::consts::PI * u2;
        Complex64::new(radius * phase.cos(), radius * phase.sin())
    }
}

/// Dimensions, power budget, noise powers, and the experiment seed.
///
/// `power_budget` is the total transmit power with the symbol count already
/// absorbed (P_T = T in the normalized setup), so every solver works with
/// covariances satisfying Tr(R) ≤ P_T directly.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    /// Transmit antennas N.
    pub n_tx: usize,
    /// Sensing receive antennas M_s.
    pub m_s: usize,
    /// Communication receive antennas M_c.
    pub m_c: usize,
    /// Transmit symbols T per coherent block.
    pub n_symbols: usize,
    /// Total transmit power P_T.
    pub power_budget: f64,
    /// Sensing noise power σ_s².
    pub sigma2_s: f64,
    /// Communication noise power σ_c².
    pub sigma2_c: f64,
    /// Base seed for channel draws.
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_tx: 10,
            m_s: 5,
            m_c: 5,
            n_symbols: 100,
            power_budget: 100.0,
            sigma2_s: 1.0,
            sigma2_c: 1.0,
            seed: 0,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.m_s == 0 || self.m_c == 0 || self.n_symbols == 0 {
            return Err(CasError::InvalidInput(
                "all dimensions (n_tx, m_s, m_c, n_symbols) must be at least 1".into(),
            ));
        }
        if !(self.power_budget > 0.0) || !self.power_budget.is_finite() {
            return Err(CasError::InvalidInput(format!(
                "power budget must be positive and finite, got {}",
                self.power_budget
            )));
        }
        if !(self.sigma2_s > 0.0) || !(self.sigma2_c > 0.0) {
            return Err(CasError::InvalidInput(format!(
                "noise powers must be positive, got sigma2_s={}, sigma2_c={}",
                self.sigma2_s, self.sigma2_c
            )));
        }
        Ok(())
    }
}

/// Noise power for a given SNR in dB under the convention
/// SNR = 10·log₁₀(P_T/σ²), i.e. σ² = P_T / 10^(SNR/10).
pub fn sigma2_for_snr(power_budget: f64, snr_db: f64) -> f64 {
    power_budget / 10f64.powf(snr_db / 10.0)
}

/// Transmit-side sensing covariance Σ_s with its cached eigendecomposition
/// and the sensing receive-antenna count M_s.
///
/// The M_s receive antennas see i.i.d. rows of the target response matrix,
/// each with covariance Σ_s, which is why M_s enters the distortion formulas
/// only as a multiplicity factor.
#[derive(Debug, Clone)]
pub struct SensingModel {
    pub sigma_s: DMatrix<Complex64>,
    pub eig: EigSystem,
    pub m_s: usize,
}

impl SensingModel {
    /// Wraps a Hermitian PSD covariance, caching its eigendecomposition.
    ///
    /// Eigenvalues must be ≥ −1e-10 times the largest one; values within
    /// 1e-12 of zero (relative) are truncated to exactly zero.
    pub fn new(sigma_s: DMatrix<Complex64>, m_s: usize) -> Result<Self> {
        if m_s == 0 {
            return Err(CasError::InvalidInput("m_s must be at least 1".into()));
        }
        let mut eig = hermitian_eig(&sigma_s)?;
        let max = eig.values.first().copied().unwrap_or(0.0);
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -1e-10 * max.max(0.0) || max < 0.0 {
            return Err(CasError::InvalidInput(format!(
                "sensing covariance is not PSD: eigenvalues span [{min:.3e}, {max:.3e}]"
            )));
        }
        for v in &mut eig.values {
            if *v < EIG_TRUNCATION * max {
                *v = 0.0;
            }
        }
        Ok(SensingModel { sigma_s, eig, m_s })
    }

    /// Eigenvalues λ_{s_i} of Σ_s, sorted descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    /// CAS distortion with no sensing information at all: M_s·tr(Σ_s),
    /// the prior variance of the target response matrix.
    pub fn prior_distortion(&self) -> f64 {
        self.m_s as f64 * self.eig.values.iter().sum::<f64>()
    }
}

/// Communication channel H_c with the cached eigendecomposition of its
/// Gram matrix Σ_c = H_cᴴH_c.
#[derive(Debug, Clone)]
pub struct CommModel {
    pub h_c: DMatrix<Complex64>,
    pub gram_eig: EigSystem,
}

impl CommModel {
    pub fn new(h_c: DMatrix<Complex64>) -> Result<Self> {
        let gram = h_c.adjoint() * &h_c;
        let mut gram_eig = hermitian_eig(&gram)?;
        let max = gram_eig.values.first().copied().unwrap_or(0.0);
        // A Gram matrix is PSD by construction; tiny negative values are
        // eigensolver roundoff and snap to zero like rank-deficiency zeros.
        for v in &mut gram_eig.values {
            if *v < EIG_TRUNCATION * max.max(0.0) {
                *v = 0.0;
            }
        }
        Ok(CommModel { h_c, gram_eig })
    }

    /// Eigenvalues λ_{c_i} of H_cᴴH_c, sorted descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.gram_eig.values
    }
}

/// Steering vector of an n-element half-wavelength uniform linear array:
/// entry k (k = 0..n−1) is (1/√n)·exp(jπ·k·sin θ). Unit Euclidean norm.
pub fn steering_vector(theta: f64, n: usize) -> DVector<Complex64> {
    assert!(n >= 1, "steering vector needs at least one antenna");
    let scale = 1.0 / (n as f64).sqrt();
    let step = std::f64::consts::PI * theta.sin();
    DVector::from_fn(n, |k, _| {
        let phase = step * k as f64;
        Complex64::new(scale * phase.cos(), scale * phase.sin())
    })
}

/// Sensing covariance of point scatterers: Σ_s = Σ_k δ_k²·a(θ_k)·a(θ_k)ᴴ.
/// Hermitian PSD with rank at most the number of scatterers.
pub fn gen_sensing_covariance(angles: &[f64], gains: &[f64], n: usize) -> Result<DMatrix<Complex64>> {
    if angles.is_empty() || angles.len() != gains.len() {
        return Err(CasError::InvalidInput(format!(
            "need matching non-empty angle/gain lists, got {} angles and {} gains",
            angles.len(),
            gains.len()
        )));
    }
    if gains.iter().any(|&d| !(d > 0.0)) {
        return Err(CasError::InvalidInput("scatterer gains must be positive".into()));
    }
    let mut sigma = DMatrix::zeros(n, n);
    for (&theta, &delta) in angles.iter().zip(gains) {
        let a = steering_vector(theta, n);
        sigma += (&a * a.adjoint()).scale(delta * delta);
    }
    Ok(sigma)
}

/// Rayleigh-fading downlink: an m_c×n matrix of i.i.d. CN(0, 1) entries,
/// drawn row by row from the given generator.
pub fn gen_rayleigh_channel(m_c: usize, n: usize, rng: &mut SplitMix64) -> Result<CommModel> {
    if m_c == 0 || n == 0 {
        return Err(CasError::InvalidInput(format!(
            "channel dimensions must be at least 1, got {m_c}x{n}"
        )));
    }
    let entries: Vec<Complex64> = (0..m_c * n).map(|_| rng.next_complex_gaussian()).collect();
    CommModel::new(DMatrix::from_row_slice(m_c, n, &entries))
}

/// IID sensing subchannels: Σ_s = λ_s·I_n.
pub fn make_iid_sensing(lambda_s: f64, n: usize, m_s: usize) -> Result<SensingModel> {
    if !(lambda_s > 0.0) || !lambda_s.is_finite() {
        return Err(CasError::InvalidInput(format!(
            "iid sensing variance must be positive and finite, got {lambda_s}"
        )));
    }
    let sigma = DMatrix::from_diagonal_element(n, n, Complex64::new(lambda_s, 0.0));
    SensingModel::new(sigma, m_s)
}

/// Independent sensing subchannels: Σ_s = diag(variances). An all-zero
/// vector is allowed (a degenerate target with nothing to estimate).
pub fn make_independent_sensing(variances: &[f64], m_s: usize) -> Result<SensingModel> {
    if variances.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(CasError::InvalidInput(
            "independent sensing variances must be nonnegative and finite".into(),
        ));
    }
    let n = variances.len();
    let sigma = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(variances[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    SensingModel::new(sigma, m_s)
}

/// Scenario sensing covariance: k scatterers at angles uniform on
/// [−π/2, π/2], unit gains. Consumes exactly k uniform draws.
pub fn gen_random_sensing(k: usize, n: usize, m_s: usize, rng: &mut SplitMix64) -> Result<SensingModel> {
    if k == 0 {
        return Err(CasError::InvalidInput("need at least one scatterer".into()));
    }
    let angles: Vec<f64> = (0..k)
        .map(|_| (rng.next_f64() - 0.5) * std::f64::consts::PI)
        .collect();
    let gains = vec![1.0; k];
    SensingModel::new(gen_sensing_covariance(&angles, &gains, n)?, m_s)
}
