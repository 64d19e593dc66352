//! Closed-form first and second directional derivatives of K and I.

use super::{check_rho, gibbs_row_with, i_functional_eps, pushforward_eps, CostMatrix, EntropicState};
use crate::error::{Error, Result};
use crate::measure::weighted_variance;
use crate::scalar::{compensated_sum, dot, Real};

fn check_dir<T: Real>(cost: &CostMatrix<T>, v: &[T]) -> Result<()> {
    if v.len() != cost.cols() {
        return Err(Error::InvalidInput(format!("direction has {} entries, expected {}", v.len(), cost.cols())));
    }
    Ok(())
}

/// Per-row Gibbs mean ⟨μ^{x_i}, v⟩ and variance Var_{μ^{x_i}}(v).
fn row_moments<T: Real>(state: &EntropicState<T>, cost: &CostMatrix<T>, v: &[T]) -> (Vec<T>, Vec<T>) {
    let sh = state.shifted_psi();
    let mut buf = vec![T::zero(); cost.cols()];
    (0..cost.rows())
        .map(|i| {
            let p = gibbs_row_with(cost.row(i), &sh, state.eps, &mut buf);
            let var = weighted_variance(v, &p).expect("lengths checked");
            (dot(&p, v), var)
        })
        .unzip()
}

/// ∇K_ρ^ε(ψ) = −μ_ε[ψ].
pub fn kantorovich_gradient<T: Real>(state: &EntropicState<T>, cost: &CostMatrix<T>, rho: &[T]) -> Result<Vec<T>> {
    Ok(pushforward_eps(state, cost, rho)?.into_iter().map(|x| -x).collect())
}

/// ⟨D²K_ρ^ε(ψ)v, v⟩ = −(1/ε) Σ_i ρ_i Var_{μ^{x_i}}(v).
pub fn kantorovich_hessian_quadratic<T: Real>(
    state: &EntropicState<T>,
    cost: &CostMatrix<T>,
    rho: &[T],
    v: &[T],
) -> Result<T> {
    state.check(cost)?;
    check_rho(cost, rho)?;
    check_dir(cost, v)?;
    let (_, var) = row_moments(state, cost, v);
    Ok(-compensated_sum(rho.iter().zip(&var).map(|(&r, &s)| r * s)) / state.eps)
}

/// ∇I_ρ^ε(ψ)_j = −Σ_i ρ_i ρ̂_i μ^{x_i}_j.
pub fn i_gradient<T: Real>(state: &EntropicState<T>, cost: &CostMatrix<T>, rho: &[T]) -> Result<Vec<T>> {
    let ifun = i_functional_eps(state, cost, rho)?;
    let w: Vec<T> = rho.iter().zip(&ifun.rho_hat).map(|(&r, &h)| r * h).collect();
    Ok(pushforward_eps(state, cost, &w)?.into_iter().map(|x| -x).collect())
}

/// ⟨D²I v, v⟩ = Var_{ρ_ε}(⟨μ^x, v⟩) − (1/ε) ∫ Var_{μ^x}(v) dρ_ε, with ρ_ε = ρ·ρ̂.
pub fn i_hessian_quadratic<T: Real>(state: &EntropicState<T>, cost: &CostMatrix<T>, rho: &[T], v: &[T]) -> Result<T> {
    check_dir(cost, v)?;
    let ifun = i_functional_eps(state, cost, rho)?;
    let w: Vec<T> = rho.iter().zip(&ifun.rho_hat).map(|(&r, &h)| r * h).collect();
    let (g, var) = row_moments(state, cost, v);
    let spread = weighted_variance(&g, &w)?;
    let local = compensated_sum(w.iter().zip(&var).map(|(&a, &b)| a * b));
    Ok(spread - local / state.eps)
}

/// Both sides of ⟨D²K_{ρ^V} v, v⟩ ≤ −C₀^{−2} Var_{ρ^V}(⟨μ^x, v⟩).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcavitySides<T> {
    pub hessian: T,
    pub bound: T,
    /// exp(osc) over the rows carrying ρ^V mass.
    pub c0: T,
}

impl<T: Real> ConcavitySides<T> {
    pub fn holds(&self, slack: T) -> bool {
        self.hessian <= self.bound + slack
    }
}

pub fn strong_concavity_sides<T: Real>(
    state: &EntropicState<T>,
    cost: &CostMatrix<T>,
    rho_v: &[T],
    v: &[T],
) -> Result<ConcavitySides<T>> {
    state.check(cost)?;
    check_rho(cost, rho_v)?;
    check_dir(cost, v)?;
    let rows: Vec<usize> = (0..cost.rows()).filter(|&i| rho_v[i] > T::zero()).collect();
    let c0 = cost.osc_rows(&rows).exp();
    let (g, var) = row_moments(state, cost, v);
    let hessian = -compensated_sum(rho_v.iter().zip(&var).map(|(&r, &s)| r * s)) / state.eps;
    let bound = -weighted_variance(&g, rho_v)? / (c0 * c0);
    Ok(ConcavitySides { hessian, bound, c0 })
}
