//! Optimization primitives shared by all solvers: water-filling, reverse
//! water-filling, Euclidean projections, and a Hermitian eigendecomposition
//! facade.
//!
//! The two water-filling maps are solved by bisection (both residuals are
//! monotone, so bisection is unconditionally safe) followed by a closed-form
//! polish on the final active set, which pins the budget identity down to
//! roundoff even when the noise-to-gain levels span many orders of magnitude.
//! All rates are in nats.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{CasError, Result};

const BISECT_REL_TOL: f64 = 1e-12;
const BISECT_MAX_ITERS: u32 = 200;

/// Water level ζ and the per-subchannel powers p_i = (ζ − level_i)⁺.
#[derive(Debug, Clone)]
pub struct WaterfillSolution {
    /// Water level ζ.
    pub factor: f64,
    /// Nonnegative power per subchannel; sums to the budget.
    pub allocation: Vec<f64>,
    /// Number of subchannels with strictly positive power.
    pub active_count: usize,
}

/// Reverse water-filling level ξ with the distortion split it induces.
#[derive(Debug, Clone)]
pub struct ReverseWaterfillSolution {
    /// Distortion level ξ.
    pub factor: f64,
    /// Per-component distortion min(g_i, ξ) (not scaled by the weight).
    pub per_component_distortion: Vec<f64>,
    /// Total distortion: weight · Σ_i min(g_i, ξ).
    pub total_distortion: f64,
    /// weight · Σ_{g_i > ξ} log(g_i/ξ), in nats. Equals the requested rate
    /// whenever that rate is attainable (some variance is positive).
    pub achieved_rate: f64,
}

/// Eigendecomposition with descending real eigenvalues and unitary basis.
#[derive(Debug, Clone)]
pub struct EigSystem {
    /// Eigenvalues, sorted descending; ties keep their original order.
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub basis: DMatrix<Complex64>,
}

/// Bisection for a monotone residual with a sign change across [lo, hi].
/// Runs to relative bracket width 1e-12 or 200 halvings, whichever first.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let rising = f(hi) >= 0.0;
    for _ in 0..BISECT_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= BISECT_REL_TOL * mid.abs() || mid <= lo || mid >= hi {
            break;
        }
        let positive = if rising { f(mid) > 0.0 } else { f(mid) < 0.0 };
        if positive {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Water-filling: the unique level ζ with Σ_i (ζ − level_i)⁺ = budget.
///
/// `levels` are the noise-to-gain ratios σ²/λ_i; a vanished gain (λ_i = 0)
/// is passed as an infinite level and receives zero power. A zero budget
/// returns the all-zero allocation with ζ at the smallest level.
pub fn waterfill(levels: &[f64], budget: f64) -> Result<WaterfillSolution> {
    if levels.is_empty() {
        return Err(CasError::InvalidInput("water-filling needs at least one level".into()));
    }
    if let Some(&bad) = levels.iter().find(|&&l| !(l > 0.0)) {
        return Err(CasError::InvalidInput(format!(
            "water-filling levels must be positive (or infinite), got {bad}"
        )));
    }
    if !budget.is_finite() || budget < 0.0 {
        return Err(CasError::InvalidInput(format!(
            "water-filling budget must be finite and nonnegative, got {budget}"
        )));
    }
    let min_level = levels.iter().copied().fold(f64::INFINITY, f64::min);
    if !min_level.is_finite() {
        return Err(CasError::InvalidInput(
            "water-filling needs at least one finite level".into(),
        ));
    }
    if budget == 0.0 {
        return Ok(WaterfillSolution {
            factor: min_level,
            allocation: vec![0.0; levels.len()],
            active_count: 0,
        });
    }

    let excess = |zeta: f64| levels.iter().map(|&l| (zeta - l).max(0.0)).sum::<f64>() - budget;
    let rough = bisect(min_level, min_level + budget, excess);

    // Closed-form polish: on the active set A the level satisfies
    // |A|·ζ − Σ_A level_i = budget. Keep it only if it selects the same
    // active set; otherwise the bisected level is already at the boundary.
    let active: Vec<usize> = (0..levels.len()).filter(|&i| rough > levels[i]).collect();
    let factor = if active.is_empty() {
        rough
    } else {
        let exact =
            (budget + active.iter().map(|&i| levels[i]).sum::<f64>()) / active.len() as f64;
        let consistent = levels
            .iter()
            .enumerate()
            .all(|(i, &l)| if active.contains(&i) { exact > l } else { exact <= l });
        if consistent {
            exact
        } else {
            rough
        }
    };

    let allocation: Vec<f64> = levels.iter().map(|&l| (factor - l).max(0.0)).collect();
    let active_count = allocation.iter().filter(|&&p| p > 0.0).count();
    Ok(WaterfillSolution { factor, allocation, active_count })
}

/// Reverse water-filling: the level ξ at which encoding the components with
/// variance above ξ, each down to distortion ξ, spends exactly the rate
/// budget: weight · Σ_{g_i > ξ} log(g_i/ξ) = rate_budget.
///
/// Components keep distortion min(g_i, ξ); zero-variance components
/// contribute neither rate nor distortion. With all variances zero the RD
/// curve degenerates to the single point (rate 0, distortion 0).
pub fn reverse_waterfill(
    variances: &[f64],
    rate_budget: f64,
    weight: usize,
) -> Result<ReverseWaterfillSolution> {
    if weight == 0 {
        return Err(CasError::InvalidInput("reverse water-filling weight must be positive".into()));
    }
    if let Some(&bad) = variances.iter().find(|&&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(CasError::InvalidInput(format!(
            "source variances must be finite and nonnegative, got {bad}"
        )));
    }
    if !rate_budget.is_finite() || rate_budget < 0.0 {
        return Err(CasError::InvalidInput(format!(
            "rate budget must be finite and nonnegative, got {rate_budget}"
        )));
    }
    let m = weight as f64;
    let g_max = variances.iter().copied().fold(0.0, f64::max);
    if g_max == 0.0 {
        return Ok(ReverseWaterfillSolution {
            factor: 0.0,
            per_component_distortion: vec![0.0; variances.len()],
            total_distortion: 0.0,
            achieved_rate: 0.0,
        });
    }

    let rate_at =
        |xi: f64| m * variances.iter().filter(|&&g| g > xi).map(|&g| (g / xi).ln()).sum::<f64>();

    let factor = if rate_budget == 0.0 {
        g_max
    } else {
        let rough = bisect(g_max * (-rate_budget / m).exp(), g_max, |xi| rate_at(xi) - rate_budget);
        // Closed-form polish on the active set A = {i : g_i > ξ}:
        // log ξ = (Σ_A log g_i − rate/weight)/|A|.
        let active: Vec<f64> = variances.iter().copied().filter(|&g| g > rough).collect();
        if active.is_empty() {
            rough
        } else {
            let exact = ((active.iter().map(|&g| g.ln()).sum::<f64>() - rate_budget / m)
                / active.len() as f64)
                .exp();
            let consistent = variances.iter().all(|&g| (g > rough) == (g > exact));
            if consistent {
                exact
            } else {
                rough
            }
        }
    };

    let per_component_distortion: Vec<f64> = variances.iter().map(|&g| g.min(factor)).collect();
    let total_distortion = m * per_component_distortion.iter().sum::<f64>();
    Ok(ReverseWaterfillSolution {
        factor,
        per_component_distortion,
        total_distortion,
        achieved_rate: rate_at(factor),
    })
}

/// Euclidean projection onto the capped simplex {x ≥ 0, 1ᵀx ≤ budget}.
///
/// If clamping the negatives already lands inside the cap, the clamp is the
/// projection; otherwise the cap binds and the result is the classic
/// sort-based projection onto {x ≥ 0, 1ᵀx = budget}.
pub fn project_capped_simplex(v: &[f64], budget: f64) -> Result<Vec<f64>> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(CasError::InvalidInput(format!(
            "projection budget must be positive and finite, got {budget}"
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CasError::InvalidInput("projection input must be finite".into()));
    }
    let clamp: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    if clamp.iter().sum::<f64>() <= budget {
        return Ok(clamp);
    }
    // Sum exceeds the cap, so the projection lies on 1ᵀx = budget. Find the
    // shift τ with Σ (v_i − τ)⁺ = budget by scanning prefixes of the sorted
    // values (largest k with u_k − (Σ_{j≤k} u_j − budget)/k > 0).
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite values compare"));
    let mut prefix = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - budget) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    Ok(v.iter().map(|&x| (x - tau).max(0.0)).collect())
}

/// Eigendecomposition of a Hermitian matrix, descending eigenvalue order.
///
/// The input is symmetrized as (A + Aᴴ)/2 before factorization, so callers
/// may pass matrices that are Hermitian only up to roundoff.
pub fn hermitian_eig(a: &DMatrix<Complex64>) -> Result<EigSystem> {
    if a.nrows() != a.ncols() {
        return Err(CasError::InvalidInput(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CasError::InvalidInput("matrix entries must be finite".into()));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(EigSystem { values: Vec::new(), basis: DMatrix::zeros(0, 0) });
    }
    let herm = (a + a.adjoint()).scale(0.5);
    let se = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // A stable sort on descending value keeps original index order on ties.
    order.sort_by(|&i, &j| se.eigenvalues[j].partial_cmp(&se.eigenvalues[i]).expect("real eigenvalues"));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut basis = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        basis.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(EigSystem { values, basis })
}

/// Euclidean projection of a Hermitian matrix onto {R ⪰ 0, Tr(R) ≤ budget}:
/// eigendecompose, project the spectrum onto the capped simplex, rebuild.
/// The output is exactly Hermitian.
pub fn project_psd_trace(a: &DMatrix<Complex64>, budget: f64) -> Result<DMatrix<Complex64>> {
    let eig = hermitian_eig(a)?;
    let spectrum = project_capped_simplex(&eig.values, budget)?;
    let mut scaled = eig.basis.clone();
    for (k, &x) in spectrum.iter().enumerate() {
        scaled.column_mut(k).scale_mut(x);
    }
    let product = scaled * eig.basis.adjoint();
    Ok((&product + product.adjoint()).scale(0.5))
}
