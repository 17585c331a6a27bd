//! Dual-functional waveform design: one covariance serves sensing and
//! communication simultaneously.
//!
//! Two solver families live here. The heuristic route maximizes the weighted
//! mutual information α·I_s + (1−α)·I_c by projected gradient ascent over
//! {R ⪰ 0, tr R ≤ P_T}, then sweeps α and keeps the weight whose design
//! minimizes the end-to-end distortion. The direct route works on aligned
//! (independent) subchannels and maximizes h̃(p) = Σ_i (g_i(p_i) − ξ(p))⁺ —
//! the distortion the system removes — by gradient projection with the
//! reverse-water-filling level recomputed every step. A brute-force
//! two-subchannel grid oracle anchors both against ground truth in tests.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channels::{CommModel, SensingModel, SystemConfig};
use crate::metrics::{
    comm_distortion, comm_mi_cov, comm_mi_eig, sensing_mi, sensing_mmse_cov, sensing_mmse_eig,
    source_variances_cov, CasResult, SolverMeta, SourceSpectrum,
};
use crate::numerics::{project_capped_simplex, project_psd_trace, reverse_waterfill};
use crate::{CasError, Result};

/// Projected-gradient iteration cap for the weighted-MI solver.
const PGD_MAX_ITERS: usize = 5000;
/// Armijo sufficient-increase constant for both ascent solvers.
const ARMIJO_C: f64 = 1e-4;
/// Maximum step halvings per line search before declaring the iterate
/// stationary.
const MAX_BACKTRACKS: usize = 60;
/// Relative objective-improvement threshold in the weighted-MI stop test.
const PGD_IMPROVEMENT_TOL: f64 = 1e-10;
/// Gradient-mapping residual threshold (relative to the gradient norm) in
/// the weighted-MI stop test.
const PGD_STATIONARITY_TOL: f64 = 1e-7;
/// Gradient-projection iteration cap for the subchannel solver.
const MGP_MAX_ITERS: usize = 2000;
/// Off-diagonal mass tolerated when the subchannel solvers check that a
/// sensing covariance is diagonal, relative to the largest diagonal entry.
const DIAG_TOL: f64 = 1e-9;

/// Weighted-MI maximizer output.
#[derive(Debug, Clone)]
pub struct WeightedMiSolution {
    /// Optimal waveform covariance (Hermitian PSD, tr R ≤ P_T).
    pub r: DMatrix<Complex64>,
    /// Projected-gradient iterations spent.
    pub iterations: usize,
}

/// Which design a dual-waveform solver produced.
#[derive(Debug, Clone)]
pub enum DwSolution {
    /// Full covariance from the weighted-MI search, with the winning weight.
    Covariance { r: DMatrix<Complex64>, alpha: f64 },
    /// Per-subchannel powers from the gradient-projection or oracle path,
    /// with the number of subchannels the coder keeps active.
    PowerVector { p: Vec<f64>, k_active: usize },
}

/// A dual-waveform design and its distortion decomposition.
#[derive(Debug, Clone)]
pub struct DwDesign {
    pub solution: DwSolution,
    pub result: CasResult,
}

/// Objective value of the subchannel solver at one power vector.
#[derive(Debug, Clone, Copy)]
pub struct MgpObjective {
    /// h̃(p) = Σ_i (g_i − ξ)⁺: the distortion mass the design removes,
    /// per snapshot weight.
    pub value: f64,
    /// Number of subchannels above the coding level ξ.
    pub k_active: usize,
    /// Reverse-water-filling level ξ at this power vector.
    pub xi: f64,
}

fn check_models(sensing: &SensingModel, comm: &CommModel, cfg: &SystemConfig) -> Result<()> {
    cfg.validate()?;
    let n = sensing.sigma_s.nrows();
    if comm.h_c.ncols() != n || cfg.n_tx != n {
        return Err(CasError::InvalidInput(format!(
            "dimension mismatch: sensing has {n} antennas, comm has {}, config says {}",
            comm.h_c.ncols(),
            cfg.n_tx
        )));
    }
    Ok(())
}

fn symmetrize(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let adj = m.adjoint();
    (m + adj).scale(0.5)
}

/// Solves M·X = B for Hermitian positive-definite M.
fn solve_pd(m: DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    symmetrize(m)
        .cholesky()
        .map(|chol| chol.solve(b))
        .ok_or_else(|| CasError::NoConvergence("inner system lost positive definiteness".into()))
}

// ---------------------------------------------------------------------------
// Weighted mutual information over full covariances
// ---------------------------------------------------------------------------

/// α·I_s(R) + (1−α)·I_c(R) in nats.
pub fn weighted_mi_objective(
    alpha: f64,
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
    r: &DMatrix<Complex64>,
) -> Result<f64> {
    check_models(sensing, comm, cfg)?;
    check_alpha(alpha)?;
    let mut value = 0.0;
    if alpha > 0.0 {
        value += alpha * sensing_mi(sensing, r, cfg.sigma2_s)?;
    }
    if alpha < 1.0 {
        value += (1.0 - alpha) * comm_mi_cov(comm, r, cfg.sigma2_c)?;
    }
    Ok(value)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(CasError::InvalidInput(format!("weight must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Euclidean gradient of the weighted MI at R, written inverse-free:
/// α·M_s·S½(I + S½RS½)⁻¹S½ + (1−α)·Hᴴ(σ_c²I + HRHᴴ)⁻¹H with S = Σ_s/σ_s².
fn weighted_mi_gradient(
    alpha: f64,
    sensing: &SensingModel,
    s_half: &DMatrix<Complex64>,
    comm: &CommModel,
    cfg: &SystemConfig,
    r: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let n = r.nrows();
    let mut grad = DMatrix::zeros(n, n);
    if alpha > 0.0 {
        let mut inner = s_half * r * s_half;
        for i in 0..n {
            inner[(i, i)] += Complex64::new(1.0, 0.0);
        }
        let solved = solve_pd(inner, s_half)?;
        grad += symmetrize(s_half * solved).scale(alpha * sensing.m_s as f64);
    }
    if alpha < 1.0 {
        let m_c = comm.h_c.nrows();
        let mut inner = &comm.h_c * r * comm.h_c.adjoint();
        for i in 0..m_c {
            inner[(i, i)] += Complex64::new(cfg.sigma2_c, 0.0);
        }
        let solved = solve_pd(inner, &comm.h_c)?;
        grad += symmetrize(comm.h_c.adjoint() * solved).scale(1.0 - alpha);
    }
    Ok(grad)
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn real_inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Maximizes α·I_s + (1−α)·I_c over {R ⪰ 0, tr R ≤ P_T} by projected
/// gradient ascent with Armijo backtracking, started from R = (P_T/N)·I.
pub fn weighted_mi_solve(
    alpha: f64,
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
) -> Result<WeightedMiSolution> {
    check_models(sensing, comm, cfg)?;
    let n = cfg.n_tx;
    let r0 = DMatrix::from_diagonal_element(n, n, Complex64::new(cfg.power_budget / n as f64, 0.0));
    weighted_mi_solve_from(alpha, sensing, comm, cfg, r0)
}

/// Same ascent from a caller-provided feasible starting covariance; the α
/// sweep uses this to warm-start each weight at the previous optimum.
pub(crate) fn weighted_mi_solve_from(
    alpha: f64,
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
    r0: DMatrix<Complex64>,
) -> Result<WeightedMiSolution> {
    check_models(sensing, comm, cfg)?;
    check_alpha(alpha)?;
    let p_t = cfg.power_budget;
    // Σ_s eigenvectors are reused every iteration; precompute S^{1/2}.
    let mut s_half = sensing.eig.basis.clone();
    for (k, &v) in sensing.eig.values.iter().enumerate() {
        s_half.column_mut(k).scale_mut((v / cfg.sigma2_s).sqrt());
    }
    let s_half = &s_half * sensing.eig.basis.adjoint();

    let mut r = project_psd_trace(&r0, p_t)?;
    let mut value = weighted_mi_objective(alpha, sensing, comm, cfg, &r)?;
    let mut iterations = 0;
    while iterations < PGD_MAX_ITERS {
        iterations += 1;
        let grad = weighted_mi_gradient(alpha, sensing, &s_half, comm, cfg, &r)?;
        let grad_norm = frobenius(&grad);
        if grad_norm < 1e-300 {
            break; // objective is flat (dead channels); anything feasible is optimal
        }

        // Armijo backtracking along the projection arc, starting from a step
        // sized so the first trial moves O(P_T) in Frobenius norm.
        let mut step = p_t / grad_norm;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate = project_psd_trace(&(&r + grad.scale(step)), p_t)?;
            let cand_value = weighted_mi_objective(alpha, sensing, comm, cfg, &candidate)?;
            let predicted = real_inner(&grad, &(&candidate - &r));
            if cand_value >= value + ARMIJO_C * predicted && predicted >= 0.0 {
                accepted = Some((candidate, cand_value));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            break; // no ascent step exists at float resolution
        };
        let improvement = next_value - value;
        r = next;
        value = next_value;

        if improvement < PGD_IMPROVEMENT_TOL * value.abs().max(1.0) {
            // Confirm stationarity with the gradient-mapping residual before
            // trusting a small improvement.
            let probe = 1e-4 * p_t / grad_norm;
            let mapped = project_psd_trace(&(&r + grad.scale(probe)), p_t)?;
            let residual = frobenius(&(&mapped - &r)) / probe;
            if residual <= PGD_STATIONARITY_TOL * grad_norm {
                break;
            }
        }
    }
    Ok(WeightedMiSolution { r, iterations })
}

/// Distortion decomposition of a covariance design: MMSE at the sensing
/// receiver plus the reverse-water-filling cost of forwarding the estimate
/// at the communication rate.
fn eval_covariance(
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
    r: &DMatrix<Complex64>,
    meta: SolverMeta,
) -> Result<CasResult> {
    let d_s = sensing_mmse_cov(sensing, r, cfg.sigma2_s)?;
    let rate = comm_mi_cov(comm, r, cfg.sigma2_c)?;
    let spectrum = source_variances_cov(sensing, r, cfg.sigma2_s)?;
    let coding = comm_distortion(&spectrum, rate, sensing.m_s)?;
    Ok(CasResult::assemble(d_s, &coding, rate, meta))
}

/// Sweeps the weighted-MI design over α ∈ {0, 1/L, …, 1} and keeps the
/// weight whose covariance yields the smallest end-to-end distortion.
pub fn hmi_search(
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
    grid_l: usize,
) -> Result<DwDesign> {
    if grid_l == 0 {
        return Err(CasError::InvalidInput("weight grid needs at least one cell".into()));
    }
    let alphas: Vec<f64> = (0..=grid_l).map(|l| l as f64 / grid_l as f64).collect();
    hmi_search_alphas(sensing, comm, cfg, &alphas)
}

/// The same sweep over an explicit weight list; ties in distortion go to the
/// smaller α.
pub fn hmi_search_alphas(
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
    alphas: &[f64],
) -> Result<DwDesign> {
    check_models(sensing, comm, cfg)?;
    if alphas.is_empty() {
        return Err(CasError::InvalidInput("weight list must be nonempty".into()));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    let mut alphas = alphas.to_vec();
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut warm: Option<DMatrix<Complex64>> = None;
    let mut total_iters = 0;
    let mut best: Option<DwDesign> = None;
    for &alpha in &alphas {
        let r0 = warm.clone().unwrap_or_else(|| {
            DMatrix::from_diagonal_element(
                cfg.n_tx,
                cfg.n_tx,
                Complex64::new(cfg.power_budget / cfg.n_tx as f64, 0.0),
            )
        });
        let sol = weighted_mi_solve_from(alpha, sensing, comm, cfg, r0)?;
        total_iters += sol.iterations;
        let meta = SolverMeta { alpha: Some(alpha), ..SolverMeta::default() };
        let result = eval_covariance(sensing, comm, cfg, &sol.r, meta)?;
        warm = Some(sol.r.clone());
        if best.as_ref().map_or(true, |b| result.d_total < b.result.d_total) {
            best = Some(DwDesign { solution: DwSolution::Covariance { r: sol.r, alpha }, result });
        }
    }
    let mut out = best.expect("weight list is nonempty");
    out.result.meta.iterations = total_iters;
    Ok(out)
}

/// Rebuilds a sensing model in the communication gram's eigenbasis, pairing
/// eigenvalues by rank: Σ' = U_c·diag(λ_s)·U_cᴴ. Under the shared-eigenspace
/// assumption this is the matrix form of the aligned subchannel model, which
/// makes covariance and power-vector solvers directly comparable.
pub fn align_sensing_to_comm(sensing: &SensingModel, comm: &CommModel) -> Result<SensingModel> {
    let n = sensing.sigma_s.nrows();
    if comm.h_c.ncols() != n {
        return Err(CasError::InvalidInput(format!(
            "dimension mismatch: sensing has {n} antennas, comm has {}",
            comm.h_c.ncols()
        )));
    }
    let mut scaled = comm.gram_eig.basis.clone();
    for (k, &v) in sensing.eig.values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(v);
    }
    let aligned = symmetrize(scaled * comm.gram_eig.basis.adjoint());
    SensingModel::new(aligned, sensing.m_s)
}

// ---------------------------------------------------------------------------
// Aligned subchannels: direct distortion descent and the 2-D oracle
// ---------------------------------------------------------------------------

/// Scalar model on aligned subchannels: sensing and communication gains
/// paired by descending rank, sharing the power vector.
struct SubchannelInstance {
    lambda_s: Vec<f64>,
    lambda_c: Vec<f64>,
    m_s: usize,
    sigma2_s: f64,
    sigma2_c: f64,
    power_budget: f64,
}

impl SubchannelInstance {
    fn build(sensing: &SensingModel, comm: &CommModel, cfg: &SystemConfig) -> Result<Self> {
        check_models(sensing, comm, cfg)?;
        let n = sensing.sigma_s.nrows();
        let max_diag = (0..n).map(|i| sensing.sigma_s[(i, i)].re).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                if i != j && sensing.sigma_s[(i, j)].norm() > DIAG_TOL * max_diag.max(f64::MIN_POSITIVE) {
                    return Err(CasError::InvalidInput(
                        "subchannel solvers need a diagonal sensing covariance; \
                         extract its eigenvalues first"
                            .into(),
                    ));
                }
            }
        }
        Ok(SubchannelInstance {
            lambda_s: sensing.eigenvalues().to_vec(),
            lambda_c: comm.eigenvalues().to_vec(),
            m_s: sensing.m_s,
            sigma2_s: cfg.sigma2_s,
            sigma2_c: cfg.sigma2_c,
            power_budget: cfg.power_budget,
        })
    }

    fn check_power_vector(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.lambda_s.len() {
            return Err(CasError::InvalidInput(format!(
                "power vector has {} entries for {} subchannels",
                p.len(),
                self.lambda_s.len()
            )));
        }
        if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(CasError::InvalidInput("powers must be finite and nonnegative".into()));
        }
        let total: f64 = p.iter().sum();
        if total > self.power_budget * (1.0 + 1e-9) {
            return Err(CasError::InvalidInput(format!(
                "powers sum to {total}, above the budget {}",
                self.power_budget
            )));
        }
        Ok(())
    }

    /// Estimate variances g_i = λ_i²p_i/(σ² + λ_ip_i).
    fn estimate_variances(&self, p: &[f64]) -> Vec<f64> {
        self.lambda_s
            .iter()
            .zip(p)
            .map(|(&l, &q)| l * l * q / (self.sigma2_s + l * q))
            .collect()
    }

    fn comm_rate(&self, p: &[f64]) -> Result<f64> {
        comm_mi_eig(&self.lambda_c, p, self.sigma2_c)
    }

    fn objective(&self, p: &[f64]) -> Result<MgpObjective> {
        let g = self.estimate_variances(p);
        let rate = self.comm_rate(p)?;
        let coding = reverse_waterfill(&g, rate, self.m_s)?;
        let xi = coding.factor;
        let k_active = g.iter().filter(|&&gi| gi > xi).count();
        let value: f64 = g.iter().filter(|&&gi| gi > xi).map(|&gi| gi - xi).sum();
        Ok(MgpObjective { value, k_active, xi })
    }

    /// Distortion decomposition for a power vector, shared by the descent
    /// solver and the grid oracle.
    fn eval(&self, p: &[f64], meta: SolverMeta) -> Result<(CasResult, usize)> {
        let d_s = sensing_mmse_eig(&self.lambda_s, p, self.sigma2_s, self.m_s)?;
        let rate = self.comm_rate(p)?;
        let mut variances = self.estimate_variances(p);
        variances.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let spectrum = SourceSpectrum { variances };
        let coding = comm_distortion(&spectrum, rate, self.m_s)?;
        let k_active =
            spectrum.variances.iter().filter(|&&gi| gi > coding.factor).count();
        Ok((CasResult::assemble(d_s, &coding, rate, meta), k_active))
    }
}

/// Objective of the subchannel descent at one power vector:
/// h̃(p) = Σ_i (g_i(p_i) − ξ(p))⁺ with ξ from reverse water-filling the
/// estimate variances at the communication rate I_c(p). The end-to-end
/// distortion is M_s·(Σ_iλ_{s_i} − h̃), so maximizing h̃ minimizes it.
pub fn mgp_objective(
    p: &[f64],
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
) -> Result<MgpObjective> {
    let inst = SubchannelInstance::build(sensing, comm, cfg)?;
    inst.check_power_vector(p)?;
    inst.objective(p)
}

/// Gradient of h̃ with the active set held fixed, following the published
/// case split: inactive subchannels get exactly zero; an active subchannel i
/// gets g_i′(p_i) − ξ·(σ_s²/(σ_s²p_i + λ_{s_i}p_i²) − λ_{c_i}/(M_s(σ_c² +
/// λ_{c_i}p_i))).
pub fn mgp_gradient(
    p: &[f64],
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
) -> Result<Vec<f64>> {
    let inst = SubchannelInstance::build(sensing, comm, cfg)?;
    inst.check_power_vector(p)?;
    Ok(subchannel_gradient(&inst, p, &inst.objective(p)?))
}

fn subchannel_gradient(inst: &SubchannelInstance, p: &[f64], obj: &MgpObjective) -> Vec<f64> {
    let g = inst.estimate_variances(p);
    // Active subchannels have g_i > ξ ≥ 0, hence p_i > 0; the floor only
    // guards the 1/p_i term against denormal-scale powers.
    let p_floor = 1e-12 * inst.power_budget;
    let m_s = inst.m_s as f64;
    g.iter()
        .enumerate()
        .map(|(i, &gi)| {
            if gi <= obj.xi {
                return 0.0;
            }
            let ls = inst.lambda_s[i];
            let lc = inst.lambda_c[i];
            let q = p[i].max(p_floor);
            let denom_s = inst.sigma2_s + ls * q;
            let g_prime = ls * ls * inst.sigma2_s / (denom_s * denom_s);
            let dlog_g = inst.sigma2_s / (inst.sigma2_s * q + ls * q * q);
            let dlog_ic = lc / (inst.sigma2_c + lc * q);
            g_prime - obj.xi * (dlog_g - dlog_ic / m_s)
        })
        .collect()
}

/// Minimizes the end-to-end distortion over aligned subchannels by gradient
/// projection on h̃: step along the fixed-active-set gradient, project onto
/// {p ≥ 0, 1ᵀp ≤ P_T}, line-search toward the projection, and recompute the
/// coding level every iteration. Stops once an accepted step improves h̃ by
/// at most `eps`.
///
/// The case-split gradient carries no term for coding-inactive subchannels
/// (their true partial through the rate's effect on ξ is dropped), so when
/// the optimum leaves subchannels inactive the search can stall short of
/// the weight-sweep answer — the two-subchannel certification scenario
/// makes this gap visible against the exhaustive lattice.
pub fn mgp_solve(
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
    p0: &[f64],
    beta: f64,
    eps: f64,
) -> Result<DwDesign> {
    let inst = SubchannelInstance::build(sensing, comm, cfg)?;
    inst.check_power_vector(p0)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(CasError::InvalidInput(format!("step size must be positive, got {beta}")));
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(CasError::InvalidInput(format!("tolerance must be finite and nonnegative, got {eps}")));
    }

    let mut p = p0.to_vec();
    let mut obj = inst.objective(&p)?;
    let mut iterations = 0;
    let mut k_transitions = 0;
    while iterations < MGP_MAX_ITERS {
        iterations += 1;
        let grad = subchannel_gradient(&inst, &p, &obj);
        let target: Vec<f64> =
            p.iter().zip(&grad).map(|(&x, &d)| x + beta * d).collect();
        let projected = project_capped_simplex(&target, inst.power_budget)?;
        let direction: Vec<f64> = projected.iter().zip(&p).map(|(&t, &x)| t - x).collect();
        let slope: f64 = grad.iter().zip(&direction).map(|(&d, &s)| d * s).sum();
        let dir_norm = direction.iter().map(|&s| s * s).sum::<f64>().sqrt();
        if dir_norm <= 1e-15 * inst.power_budget || slope <= 0.0 {
            break; // the projection no longer moves the iterate uphill
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate: Vec<f64> =
                p.iter().zip(&direction).map(|(&x, &s)| (x + alpha * s).max(0.0)).collect();
            let cand_obj = inst.objective(&candidate)?;
            if cand_obj.value >= obj.value + ARMIJO_C * alpha * slope {
                accepted = Some((candidate, cand_obj));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, next_obj)) = accepted else {
            break; // stationary at float resolution
        };
        let improvement = next_obj.value - obj.value;
        if next_obj.k_active != obj.k_active {
            k_transitions += 1;
        }
        p = next;
        obj = next_obj;
        if improvement <= eps {
            break;
        }
    }

    let meta = SolverMeta {
        iterations,
        k_transitions: Some(k_transitions),
        ..SolverMeta::default()
    };
    let (result, k_active) = inst.eval(&p, meta)?;
    Ok(DwDesign { solution: DwSolution::PowerVector { p, k_active }, result })
}

/// The gradient-projection solver with its standard warm-up: uniform
/// half-budget start, a first step sized to move O(P_T/N) per subchannel,
/// and a tolerance proportional to the prior distortion.
pub fn mgp_solve_default(
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
) -> Result<DwDesign> {
    let inst = SubchannelInstance::build(sensing, comm, cfg)?;
    let n = inst.lambda_s.len();
    let p0 = vec![inst.power_budget / (2.0 * n as f64); n];
    let grad0 = subchannel_gradient(&inst, &p0, &inst.objective(&p0)?);
    let grad_norm = grad0.iter().map(|&d| d * d).sum::<f64>().sqrt();
    if grad_norm < 1e-300 {
        // Flat objective (dead sensing or comm channel): the start is as
        // good as anything; report it.
        let (result, k_active) = inst.eval(&p0, SolverMeta::default())?;
        return Ok(DwDesign { solution: DwSolution::PowerVector { p: p0, k_active }, result });
    }
    let beta = inst.power_budget / (n as f64 * grad_norm);
    let eps = 1e-9 * inst.m_s as f64 * inst.lambda_s.iter().sum::<f64>();
    mgp_solve(sensing, comm, cfg, &p0, beta, eps)
}

/// Exhaustive reference for two aligned subchannels: evaluates the full
/// distortion on a `grid`×`grid` lattice over {p ≥ 0, p₁+p₂ ≤ P_T} and
/// returns the best cell. Ties go to the lexicographically smaller power
/// vector. Quadratic cost — a test oracle, not a solver.
pub fn oracle_2d(
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
    grid: usize,
) -> Result<DwDesign> {
    let inst = SubchannelInstance::build(sensing, comm, cfg)?;
    if inst.lambda_s.len() != 2 {
        return Err(CasError::InvalidInput(format!(
            "the exhaustive reference handles exactly 2 subchannels, got {}",
            inst.lambda_s.len()
        )));
    }
    if grid < 2 {
        return Err(CasError::InvalidInput(format!("lattice needs at least 2 points per axis, got {grid}")));
    }
    let p_t = inst.power_budget;
    let step = p_t / (grid - 1) as f64;
    let mut best: Option<(f64, [f64; 2])> = None;
    let mut evaluated = 0;
    for i in 0..grid {
        let p1 = step * i as f64;
        for j in 0..grid {
            let p2 = step * j as f64;
            if p1 + p2 > p_t * (1.0 + 1e-12) {
                break;
            }
            evaluated += 1;
            let obj = inst.objective(&[p1, p2])?;
            let d = inst.m_s as f64
                * (inst.lambda_s.iter().sum::<f64>() - obj.value);
            if best.as_ref().map_or(true, |(b, _)| d < *b) {
                best = Some((d, [p1, p2]));
            }
        }
    }
    let (_, p) = best.expect("lattice contains the origin");
    let meta = SolverMeta { iterations: evaluated, ..SolverMeta::default() };
    let (result, k_active) = inst.eval(&p, meta)?;
    Ok(DwDesign { solution: DwSolution::PowerVector { p: p.to_vec(), k_active }, result })
}
