//! Closed-form sensing and communication metrics, and the CAS distortion
//! pipeline built from them.
//!
//! The sensing receiver forms the Bayesian MMSE estimate of the target
//! response matrix; its error D_s and the covariance R_η of the estimate
//! itself are closed forms in the waveform covariance R. The estimate then
//! has to be compressed into the downlink's achievable rate I_c, costing a
//! further reverse-water-filling distortion D_c over the spectrum of R_η.
//! Everything here avoids explicit inverses of possibly singular Σ_s by
//! working with the symmetric product R^{1/2}·Σ_s·R^{1/2} and Cholesky
//! solves of σ²I plus that product (always positive definite).
//!
//! A Monte-Carlo estimator validates the closed-form MMSE on small
//! instances; it is test machinery, not part of any solver loop.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channels::{CommModel, SensingModel, SplitMix64};
use crate::numerics::{hermitian_eig, reverse_waterfill, EigSystem, ReverseWaterfillSolution};
use crate::{CasError, Result};

/// PSD tolerance for waveform covariances handed to the metric functions:
/// eigenvalues may undershoot zero by at most this fraction of the largest.
const PSD_TOL: f64 = 1e-8;

/// Spectrum values of R_η below this fraction of the largest are truncated
/// to zero before the rate-distortion step, preventing spurious log terms.
const SPECTRUM_TRUNCATION: f64 = 1e-12;

/// Solver diagnostics carried alongside every CAS evaluation.
#[derive(Debug, Clone, Default)]
pub struct SolverMeta {
    /// Iterations spent (refinement rounds, gradient steps, or grid solves).
    pub iterations: usize,
    /// Weighting factor α, for the weighted-MI search path.
    pub alpha: Option<f64>,
    /// (P_s, P_c) power split, for the separated-waveform path.
    pub power_split: Option<(f64, f64)>,
    /// Number of active-set changes seen by the gradient-projection solver.
    pub k_transitions: Option<usize>,
}

/// End-to-end CAS distortion decomposition for one design.
#[derive(Debug, Clone)]
pub struct CasResult {
    /// Sensing distortion D_s: the MMSE at the base station.
    pub d_s: f64,
    /// Communication distortion D_c: the rate-distortion cost of forwarding
    /// the estimate at the achievable rate.
    pub d_c: f64,
    /// D = D_s + D_c (held exactly by construction).
    pub d_total: f64,
    /// Achievable rate I_c used as the coding budget, in nats.
    pub rate: f64,
    /// Reverse-water-filling level ξ behind D_c.
    pub xi: f64,
    pub meta: SolverMeta,
}

impl CasResult {
    /// Assembles the decomposition from the sensing distortion and the
    /// reverse-water-filling outcome at rate budget `rate`.
    pub fn assemble(d_s: f64, coding: &ReverseWaterfillSolution, rate: f64, meta: SolverMeta) -> Self {
        CasResult {
            d_s,
            d_c: coding.total_distortion,
            d_total: d_s + coding.total_distortion,
            rate,
            xi: coding.factor,
            meta,
        }
    }
}

/// Variances of the estimate seen by the coding stage: eigenvalues of R_η,
/// or the scalar g_i values in the aligned subchannel form.
#[derive(Debug, Clone)]
pub struct SourceSpectrum {
    /// Nonnegative, sorted descending.
    pub variances: Vec<f64>,
}

/// Communication MI over parallel subchannels:
/// Σ_i log(1 + λ_{c_i}·p_{c_i}/σ_c²), in nats.
pub fn comm_mi_eig(lambda_c: &[f64], p_c: &[f64], sigma2_c: f64) -> Result<f64> {
    if lambda_c.len() != p_c.len() {
        return Err(CasError::InvalidInput(format!(
            "gain/power lengths differ: {} vs {}",
            lambda_c.len(),
            p_c.len()
        )));
    }
    if !(sigma2_c > 0.0) {
        return Err(CasError::InvalidInput(format!("noise power must be positive, got {sigma2_c}")));
    }
    if lambda_c.iter().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(CasError::InvalidInput("subchannel gains must be nonnegative and finite".into()));
    }
    if p_c.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(CasError::InvalidInput("subchannel powers must be nonnegative and finite".into()));
    }
    Ok(lambda_c
        .iter()
        .zip(p_c)
        .map(|(&l, &p)| (1.0 + l * p / sigma2_c).ln())
        .sum())
}

/// Checks a waveform covariance is Hermitian PSD (within tolerance) and
/// returns its eigendecomposition with tiny negative values clamped to zero.
fn psd_eig(r: &DMatrix<Complex64>, what: &str) -> Result<EigSystem> {
    let mut eig = hermitian_eig(r)?;
    let max = eig.values.first().copied().unwrap_or(0.0);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -PSD_TOL * max.max(0.0) || max < -PSD_TOL {
        return Err(CasError::InvalidInput(format!(
            "{what} must be PSD: eigenvalues span [{min:.3e}, {max:.3e}]"
        )));
    }
    for v in &mut eig.values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(eig)
}

/// Hermitian square root from a clamped eigendecomposition.
fn sqrt_from_eig(eig: &EigSystem) -> DMatrix<Complex64> {
    let mut scaled = eig.basis.clone();
    for (k, &v) in eig.values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(v.sqrt());
    }
    &scaled * eig.basis.adjoint()
}

fn check_dims(n: usize, r: &DMatrix<Complex64>) -> Result<()> {
    if r.nrows() != n || r.ncols() != n {
        return Err(CasError::InvalidInput(format!(
            "waveform covariance must be {n}x{n}, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    Ok(())
}

/// Communication MI for a waveform covariance:
/// logdet(I_{M_c} + H_c·R·H_cᴴ/σ_c²), in nats.
///
/// The identity is sized to the receive dimension M_c; by the Sylvester
/// determinant identity this equals the transmit-side form whenever both
/// are defined.
pub fn comm_mi_cov(comm: &CommModel, r: &DMatrix<Complex64>, sigma2_c: f64) -> Result<f64> {
    check_dims(comm.h_c.ncols(), r)?;
    if !(sigma2_c > 0.0) {
        return Err(CasError::InvalidInput(format!("noise power must be positive, got {sigma2_c}")));
    }
    psd_eig(r, "waveform covariance")?;
    let product = &comm.h_c * r * comm.h_c.adjoint();
    let eig = hermitian_eig(&product)?;
    Ok(eig.values.iter().map(|&mu| (1.0 + mu.max(0.0) / sigma2_c).ln()).sum())
}

/// Covariance R_η of the MMSE estimate, in the inverse-free form
/// R_η = Σ_s·R^{1/2}·(σ_s²I + R^{1/2}Σ_sR^{1/2})^{-1}·R^{1/2}·Σ_s.
fn estimate_covariance(
    sensing: &SensingModel,
    r: &DMatrix<Complex64>,
    sigma2_s: f64,
) -> Result<DMatrix<Complex64>> {
    check_dims(sensing.sigma_s.nrows(), r)?;
    if !(sigma2_s > 0.0) {
        return Err(CasError::InvalidInput(format!("noise power must be positive, got {sigma2_s}")));
    }
    let n = r.nrows();
    let r_half = sqrt_from_eig(&psd_eig(r, "waveform covariance")?);
    // b = R^{1/2}Σ_s, m = σ²I + R^{1/2}Σ_sR^{1/2}; then R_η = bᴴ·m⁻¹·b.
    let b = &r_half * &sensing.sigma_s;
    let mut m = &b * &r_half;
    for i in 0..n {
        m[(i, i)] += Complex64::new(sigma2_s, 0.0);
    }
    let m = (&m + m.adjoint()).scale(0.5);
    let solved = match m.clone().cholesky() {
        Some(chol) => chol.solve(&b),
        // σ²I + PSD is positive definite, so this only fires on extreme
        // roundoff; fall back to an eigen-based pseudo-solve.
        None => {
            let eig = hermitian_eig(&m)?;
            let mut inv_scaled = eig.basis.clone();
            for (k, &v) in eig.values.iter().enumerate() {
                inv_scaled.column_mut(k).scale_mut(1.0 / v.max(sigma2_s * 1e-6));
            }
            inv_scaled * eig.basis.adjoint() * &b
        }
    };
    let r_eta = b.adjoint() * solved;
    Ok((&r_eta + r_eta.adjoint()).scale(0.5))
}

/// Sensing distortion (total MMSE) for a waveform covariance:
/// D_s = M_s·tr(Σ_s − R_η). Never requires Σ_s to be invertible.
pub fn sensing_mmse_cov(sensing: &SensingModel, r: &DMatrix<Complex64>, sigma2_s: f64) -> Result<f64> {
    let r_eta = estimate_covariance(sensing, r, sigma2_s)?;
    let recovered: f64 = r_eta.diagonal().iter().map(|z| z.re).sum();
    let prior: f64 = sensing.sigma_s.diagonal().iter().map(|z| z.re).sum();
    Ok(sensing.m_s as f64 * (prior - recovered))
}

/// Sensing distortion over aligned subchannels:
/// M_s·Σ_i λ_{s_i}·σ_s²/(σ_s² + λ_{s_i}·p_{s_i}).
pub fn sensing_mmse_eig(lambda_s: &[f64], p_s: &[f64], sigma2_s: f64, m_s: usize) -> Result<f64> {
    if lambda_s.len() != p_s.len() {
        return Err(CasError::InvalidInput(format!(
            "gain/power lengths differ: {} vs {}",
            lambda_s.len(),
            p_s.len()
        )));
    }
    if !(sigma2_s > 0.0) {
        return Err(CasError::InvalidInput(format!("noise power must be positive, got {sigma2_s}")));
    }
    if m_s == 0 {
        return Err(CasError::InvalidInput("m_s must be at least 1".into()));
    }
    if lambda_s.iter().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(CasError::InvalidInput("subchannel variances must be nonnegative and finite".into()));
    }
    if p_s.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(CasError::InvalidInput("subchannel powers must be nonnegative and finite".into()));
    }
    Ok(m_s as f64
        * lambda_s
            .iter()
            .zip(p_s)
            .map(|(&l, &p)| l * sigma2_s / (sigma2_s + l * p))
            .sum::<f64>())
}

/// Source variances for the coding stage: the spectrum of R_η, descending,
/// with values below 1e-12 of the largest truncated to zero.
pub fn source_variances_cov(
    sensing: &SensingModel,
    r: &DMatrix<Complex64>,
    sigma2_s: f64,
) -> Result<SourceSpectrum> {
    let r_eta = estimate_covariance(sensing, r, sigma2_s)?;
    let eig = hermitian_eig(&r_eta)?;
    let max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let variances = eig
        .values
        .into_iter()
        .map(|v| if v < SPECTRUM_TRUNCATION * max { 0.0 } else { v })
        .collect();
    Ok(SourceSpectrum { variances })
}

/// Sensing MI for a waveform covariance:
/// M_s·logdet(I + Σ_s·R/σ_s²), in nats, evaluated through the spectrum of
/// the symmetric product R^{1/2}Σ_sR^{1/2}.
pub fn sensing_mi(sensing: &SensingModel, r: &DMatrix<Complex64>, sigma2_s: f64) -> Result<f64> {
    check_dims(sensing.sigma_s.nrows(), r)?;
    if !(sigma2_s > 0.0) {
        return Err(CasError::InvalidInput(format!("noise power must be positive, got {sigma2_s}")));
    }
    let r_half = sqrt_from_eig(&psd_eig(r, "waveform covariance")?);
    let product = &r_half * &sensing.sigma_s * &r_half;
    let eig = hermitian_eig(&product)?;
    Ok(sensing.m_s as f64
        * eig.values.iter().map(|&nu| (1.0 + nu.max(0.0) / sigma2_s).ln()).sum::<f64>())
}

/// Communication distortion: reverse water-filling of the source spectrum
/// at the given rate budget. D_c = M_s·Σ_i min(λ_i(R_η), ξ).
pub fn comm_distortion(
    spectrum: &SourceSpectrum,
    rate: f64,
    m_s: usize,
) -> Result<ReverseWaterfillSolution> {
    reverse_waterfill(&spectrum.variances, rate, m_s)
}

/// Deterministic waveform realizing a covariance: the Hermitian square root
/// of R padded with T − N zero columns, so that X·Xᴴ = R exactly.
///
/// This is the single place where the T-absorption convention is realized:
/// solvers optimize Tr(R) ≤ P_T with the symbol count already inside P_T,
/// and the physical N×T block transmits that R without rescaling.
pub fn waveform_from_covariance(r: &DMatrix<Complex64>, t: usize) -> Result<DMatrix<Complex64>> {
    let n = r.nrows();
    if t < n {
        return Err(CasError::InvalidInput(format!(
            "need at least as many symbols as antennas to realize a rank-{n} covariance, got T={t}"
        )));
    }
    let r_half = sqrt_from_eig(&psd_eig(r, "waveform covariance")?);
    let mut x = DMatrix::zeros(n, t);
    x.view_mut((0, 0), (n, n)).copy_from(&r_half);
    Ok(x)
}

/// Monte-Carlo validation of the closed-form MMSE: draws channel rows
/// h ~ CN(0, Σ_s) and observations y = Xᴴh + z with z ~ CN(0, σ_s²I_T),
/// applies the linear MMSE estimator Σ_sX·(XᴴΣ_sX + σ_s²I_T)⁻¹, and returns
/// the squared error summed over the M_s rows, averaged over trials.
///
/// Converges to `sensing_mmse_cov(sensing, X·Xᴴ, σ_s²)` as trials grow. Per
/// trial, each row j draws its N channel entries first, then its T noise
/// entries, in row order — fixing the stream layout keeps results
/// reproducible.
pub fn mmse_estimator_mc(
    sensing: &SensingModel,
    x: &DMatrix<Complex64>,
    sigma2_s: f64,
    trials: usize,
    rng: &mut SplitMix64,
) -> Result<f64> {
    let n = sensing.sigma_s.nrows();
    if x.nrows() != n {
        return Err(CasError::InvalidInput(format!(
            "waveform has {} rows but the sensing model has {n} antennas",
            x.nrows()
        )));
    }
    if trials == 0 {
        return Err(CasError::InvalidInput("need at least one trial".into()));
    }
    if !(sigma2_s > 0.0) {
        return Err(CasError::InvalidInput(format!("noise power must be positive, got {sigma2_s}")));
    }
    let t = x.ncols();
    // Sampling square root of Σ_s (eigenvalues are clamped at model build).
    let sigma_half = sqrt_from_eig(&sensing.eig);

    // Estimator E = Σ_sX·R_y⁻¹ with R_y = XᴴΣ_sX + σ²I_T, computed once.
    let xh_sigma = x.adjoint() * &sensing.sigma_s;
    let mut r_y = &xh_sigma * x;
    for i in 0..t {
        r_y[(i, i)] += Complex64::new(sigma2_s, 0.0);
    }
    let r_y = (&r_y + r_y.adjoint()).scale(0.5);
    let chol = r_y
        .cholesky()
        .ok_or_else(|| CasError::InvalidInput("observation covariance is not positive definite".into()))?;
    let estimator = chol.solve(&xh_sigma).adjoint();

    let sigma = sigma2_s.sqrt();
    let mut total = 0.0;
    for _ in 0..trials {
        for _row in 0..sensing.m_s {
            let w = nalgebra::DVector::from_fn(n, |_, _| rng.next_complex_gaussian());
            let h = &sigma_half * w;
            let z = nalgebra::DVector::from_fn(t, |_, _| rng.next_complex_gaussian().scale(sigma));
            let y = x.adjoint() * &h + z;
            let err = &h - &estimator * y;
            total += err.iter().map(|e| e.norm_sqr()).sum::<f64>();
        }
    }
    Ok(total / trials as f64)
}
