//! Separated-waveform design: a sensing beam and a communication beam share
//! the power budget, each individually water-filled over its own channel's
//! eigenmodes.
//!
//! With the split P_s + P_c = P_T fixed, both sides have closed-form optimal
//! allocations, so the whole design reduces to a one-dimensional search over
//! the split. The end-to-end distortion equals the prior at both endpoints —
//! all-sensing gathers an estimate it cannot forward, all-communication has
//! nothing to forward — and dips in between whenever both channels carry
//! anything, so bracketing grid refinement and (in the IID case) golden
//! section both find the minimum quickly.

use crate::channels::{CommModel, SensingModel, SystemConfig};
use crate::metrics::{comm_mi_eig, sensing_mmse_eig, CasResult, SolverMeta, SourceSpectrum};
use crate::numerics::waterfill;
use crate::{CasError, Result};

/// Interval shrink factor for golden-section search.
const GOLDEN: f64 = 0.618_033_988_749_894_9;
/// Refinement rounds / golden-section iterations are capped at this.
const MAX_ROUNDS: usize = 500;

/// A separated design: the split, both per-mode allocations, and the
/// resulting distortion decomposition.
#[derive(Debug, Clone)]
pub struct SwDesign {
    /// Power P_s given to the sensing beam; the communication beam gets
    /// P_T − P_s.
    pub p_split: f64,
    /// Sensing powers per eigenmode of Σ_s (descending eigenvalue order).
    pub p_s: Vec<f64>,
    /// Communication powers per eigenmode of H_cᴴH_c (descending order).
    pub p_c: Vec<f64>,
    pub result: CasResult,
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

/// Water-fills `budget` over modes with the given gains and noise power,
/// returning the zero allocation when nothing can carry power.
fn fill_modes(gains: &[f64], noise: f64, budget: f64) -> Result<Vec<f64>> {
    if budget <= 0.0 || gains.iter().all(|&l| l == 0.0) {
        return Ok(vec![0.0; gains.len()]);
    }
    let levels: Vec<f64> = gains.iter().map(|&l| noise / l).collect();
    Ok(waterfill(&levels, budget)?.allocation)
}

/// Evaluates the separated design at a fixed split: water-fill P_s over the
/// sensing modes and P_T − P_s over the communication modes, then price the
/// forwarding of the resulting estimate at the communication rate.
pub fn sw_eval(
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
    p_split: f64,
) -> Result<SwDesign> {
    check_models(sensing, comm, cfg)?;
    let p_t = cfg.power_budget;
    if !p_split.is_finite() || p_split < -1e-9 * p_t || p_split > p_t * (1.0 + 1e-9) {
        return Err(CasError::InvalidInput(format!(
            "sensing power {p_split} outside the budget [0, {p_t}]"
        )));
    }
    let p_split = p_split.clamp(0.0, p_t);

    let lambda_s = sensing.eigenvalues();
    let p_s = fill_modes(lambda_s, cfg.sigma2_s, p_split)?;
    let d_s = sensing_mmse_eig(lambda_s, &p_s, cfg.sigma2_s, sensing.m_s)?;

    let lambda_c = comm.eigenvalues();
    let p_c = fill_modes(lambda_c, cfg.sigma2_c, p_t - p_split)?;
    let rate = comm_mi_eig(lambda_c, &p_c, cfg.sigma2_c)?;

    // Estimate variances g_i = λ_i²p_i/(σ² + λ_ip_i) per sensing mode.
    let mut variances: Vec<f64> = lambda_s
        .iter()
        .zip(&p_s)
        .map(|(&l, &p)| l * l * p / (cfg.sigma2_s + l * p))
        .collect();
    variances.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let spectrum = SourceSpectrum { variances };
    let coding = crate::metrics::comm_distortion(&spectrum, rate, sensing.m_s)?;

    let meta = SolverMeta {
        power_split: Some((p_split, p_t - p_split)),
        ..SolverMeta::default()
    };
    Ok(SwDesign { p_split, p_s, p_c, result: CasResult::assemble(d_s, &coding, rate, meta) })
}

/// Minimizes the separated design over the split by bracketing grid
/// refinement: evaluate `grid_l`+1 equispaced splits, shrink to the cell
/// around the best one, and repeat until a round improves the incumbent by
/// less than `eps` (absolute distortion). With `eps = 0` the improvement
/// test never fires and the search runs until the bracket collapses to
/// float resolution.
pub fn alg1_search(
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
    grid_l: usize,
    eps: f64,
) -> Result<SwDesign> {
    check_models(sensing, comm, cfg)?;
    if grid_l < 2 {
        return Err(CasError::InvalidInput(format!("refinement grid needs at least 2 cells, got {grid_l}")));
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(CasError::InvalidInput(format!("tolerance must be finite and nonnegative, got {eps}")));
    }
    let p_t = cfg.power_budget;
    let (mut lo, mut hi) = (0.0_f64, p_t);
    // Seeding with the prior makes a flat landscape (e.g. a dead channel)
    // terminate after one round: nothing improves on doing nothing.
    let mut d_prev = sensing.prior_distortion();
    let mut best: Option<SwDesign> = None;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let splits: Vec<f64> =
            (0..=grid_l).map(|l| lo + (hi - lo) * l as f64 / grid_l as f64).collect();
        let mut round_best: Option<(usize, SwDesign)> = None;
        for (idx, &split) in splits.iter().enumerate() {
            let cand = sw_eval(sensing, comm, cfg, split)?;
            if round_best.as_ref().map_or(true, |(_, b)| cand.result.d_total < b.result.d_total) {
                round_best = Some((idx, cand));
            }
        }
        let (best_idx, round_best) = round_best.expect("grid is nonempty");
        let d_round = round_best.result.d_total;
        if best.as_ref().map_or(true, |b| d_round < b.result.d_total) {
            best = Some(round_best);
        }
        let improvement = (d_prev - d_round).abs();
        d_prev = d_round;
        lo = splits[best_idx.saturating_sub(1)];
        hi = splits[(best_idx + 1).min(grid_l)];
        if improvement < eps || rounds >= MAX_ROUNDS || hi - lo <= 1e-12 * p_t {
            break;
        }
    }
    let mut out = best.expect("at least one round ran");
    out.result.meta.iterations = rounds;
    Ok(out)
}

/// Single dense sweep over `grid_points` equispaced splits (endpoints
/// included), returning the best; ties go to the smaller split.
pub fn sw_grid_min(
    sensing: &SensingModel,
    comm: &CommModel,
    cfg: &SystemConfig,
    grid_points: usize,
) -> Result<SwDesign> {
    check_models(sensing, comm, cfg)?;
    if grid_points < 2 {
        return Err(CasError::InvalidInput(format!("sweep needs at least 2 points, got {grid_points}")));
    }
    let p_t = cfg.power_budget;
    let mut best: Option<SwDesign> = None;
    for k in 0..grid_points {
        let split = p_t * k as f64 / (grid_points - 1) as f64;
        let cand = sw_eval(sensing, comm, cfg, split)?;
        if best.as_ref().map_or(true, |b| cand.result.d_total < b.result.d_total) {
            best = Some(cand);
        }
    }
    let mut out = best.expect("grid is nonempty");
    out.result.meta.iterations = grid_points;
    Ok(out)
}

/// Closed-form separated-design distortion for an IID sensing channel
/// (Σ_s = λI): uniform sensing power is optimal, every estimate variance is
/// equal, and the reverse water-filling collapses to
/// N·M_s·[(1 − e^{−Ĩ})·f + λ·e^{−Ĩ}] with f = λσ_s²/(σ_s² + λP_s/N) and
/// Ĩ the per-(mode, snapshot) communication rate.
pub fn p3_objective(
    p_split: f64,
    lambda: f64,
    comm: &CommModel,
    cfg: &SystemConfig,
) -> Result<f64> {
    cfg.validate()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(CasError::InvalidInput(format!("channel variance must be nonnegative, got {lambda}")));
    }
    let p_t = cfg.power_budget;
    if !p_split.is_finite() || p_split < -1e-9 * p_t || p_split > p_t * (1.0 + 1e-9) {
        return Err(CasError::InvalidInput(format!(
            "sensing power {p_split} outside the budget [0, {p_t}]"
        )));
    }
    let p_split = p_split.clamp(0.0, p_t);
    let n = cfg.n_tx as f64;
    let m_s = cfg.m_s as f64;

    let lambda_c = comm.eigenvalues();
    let p_c = fill_modes(lambda_c, cfg.sigma2_c, p_t - p_split)?;
    let rate = comm_mi_eig(lambda_c, &p_c, cfg.sigma2_c)?;
    let per_mode_rate = rate / (m_s * n);

    let f = lambda * cfg.sigma2_s / (cfg.sigma2_s + lambda * p_split / n);
    let shrink = (-per_mode_rate).exp();
    Ok(n * m_s * ((1.0 - shrink) * f + lambda * shrink))
}

/// Minimizes the separated design for an IID sensing channel by golden
/// section over the closed-form objective. Errors if Σ_s is not (numerically)
/// a scaled identity.
pub fn p3_solve(sensing: &SensingModel, comm: &CommModel, cfg: &SystemConfig) -> Result<SwDesign> {
    check_models(sensing, comm, cfg)?;
    if sensing.m_s != cfg.m_s {
        return Err(CasError::InvalidInput(format!(
            "snapshot count mismatch: model has {}, config says {}",
            sensing.m_s, cfg.m_s
        )));
    }
    let values = sensing.eigenvalues();
    let top = values.first().copied().unwrap_or(0.0);
    if values.iter().any(|&v| (v - top).abs() > 1e-9 * top.max(f64::MIN_POSITIVE)) {
        return Err(CasError::InvalidInput(
            "closed-form split search needs an IID sensing channel (equal eigenvalues)".into(),
        ));
    }
    let lambda = top;
    let p_t = cfg.power_budget;

    let (mut lo, mut hi) = (0.0_f64, p_t);
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = p3_objective(x1, lambda, comm, cfg)?;
    let mut f2 = p3_objective(x2, lambda, comm, cfg)?;
    let mut iters = 0;
    while hi - lo > 1e-10 * p_t && iters < MAX_ROUNDS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = p3_objective(x1, lambda, comm, cfg)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = p3_objective(x2, lambda, comm, cfg)?;
        }
        iters += 1;
    }
    let mut out = sw_eval(sensing, comm, cfg, 0.5 * (lo + hi))?;
    out.result.meta.iterations = iters;
    Ok(out)
}
