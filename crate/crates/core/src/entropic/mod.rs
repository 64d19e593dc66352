//! ε-regularized c-transform, Gibbs kernels, the functionals K and I, and
//! the semi-dual Sinkhorn solver.

mod derivatives;
mod solver;

pub use derivatives::{
    i_gradient, i_hessian_quadratic, kantorovich_gradient, kantorovich_hessian_quadratic, strong_concavity_sides,
    ConcavitySides,
};
pub use solver::{geometric_schedule, solve_annealed, solve_semidual, solve_semidual_with, Annealed, SolverConfig, SolverReport};

use crate::error::{Error, Result};
use crate::manifold::{ManifoldSpec, Point};
use crate::scalar::{compensated_sum, Real};

/// Dense cost C[i][j] = dist(x_i, y_j)²/2, rows over the ρ-support.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix<T> {
    n: usize,
    m: usize,
    data: Vec<T>,
    osc: T,
}

impl<T: Real> CostMatrix<T> {
    pub fn from_points(spec: &ManifoldSpec<T>, xs: &[Point<T>], ys: &[Point<T>]) -> Result<Self> {
        for p in xs.iter().chain(ys) {
            spec.validate(p)?;
        }
        let data = xs
            .iter()
            .flat_map(|x| ys.iter().map(move |y| spec.cost_raw(&x.coords, &y.coords)))
            .collect();
        Self::from_rows(xs.len(), ys.len(), data)
    }

    pub fn from_rows(n: usize, m: usize, data: Vec<T>) -> Result<Self> {
        if n == 0 || m == 0 || data.len() != n * m {
            return Err(Error::InvalidInput(format!("cost data of length {} is not {n}x{m}", data.len())));
        }
        if data.iter().any(|c| !c.is_finite() || *c < T::zero()) {
            return Err(Error::InvalidInput("cost entries must be finite and nonnegative".into()));
        }
        let mut c = Self { n, m, data, osc: T::zero() };
        c.osc = c.osc_rows(&(0..n).collect::<Vec<_>>());
        Ok(c)
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.m + j]
    }

    /// sup over x, x', y of c(x,y) − c(x',y).
    pub fn osc(&self) -> T {
        self.osc
    }

    /// Oscillation restricted to a subset of rows.
    pub fn osc_rows(&self, rows: &[usize]) -> T {
        let mut best = T::zero();
        for j in 0..self.m {
            let mut lo = T::infinity();
            let mut hi = T::neg_infinity();
            for &i in rows {
                let c = self.get(i, j);
                lo = lo.min(c);
                hi = hi.max(c);
            }
            if hi >= lo {
                best = best.max(hi - lo);
            }
        }
        best
    }

    pub fn max_entry(&self) -> T {
        self.data.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

/// ψ on the target points.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPotential<T> {
    pub values: Vec<T>,
    /// Set when ⟨μ, ψ⟩ = 0 has been imposed.
    pub normalized: bool,
}

impl<T: Real> DualPotential<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values, normalized: false }
    }

    pub fn zeros(m: usize) -> Self {
        Self::new(vec![T::zero(); m])
    }

    pub fn normalize(&mut self, mu: &[T]) {
        let mean = compensated_sum(mu.iter().zip(&self.values).map(|(&w, &v)| w * v));
        self.values.iter_mut().for_each(|v| *v -= mean);
        self.normalized = true;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropicState<T> {
    pub eps: T,
    pub psi: DualPotential<T>,
    pub sigma: Vec<T>,
    /// ½Σ|μ_ε[ψ] − μ| at the returned ψ.
    pub residual: T,
    pub iterations: usize,
}

impl<T: Real> EntropicState<T> {
    /// State with an explicit reference measure σ (renormalized).
    pub fn new(eps: T, psi: Vec<T>, sigma: Vec<T>) -> Result<Self> {
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        if psi.len() != sigma.len() {
            return Err(Error::InvalidInput("psi and sigma lengths differ".into()));
        }
        if psi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("psi has non-finite entries".into()));
        }
        if sigma.iter().any(|s| !s.is_finite() || *s < T::zero()) {
            return Err(Error::InvalidInput("sigma weights must be finite and nonnegative".into()));
        }
        let total = compensated_sum(sigma.iter().copied());
        if !(total > T::zero()) {
            return Err(Error::InvalidInput("sigma has no positive weight".into()));
        }
        let sigma = sigma.into_iter().map(|s| s / total).collect();
        Ok(Self { eps, psi: DualPotential::new(psi), sigma, residual: T::zero(), iterations: 0 })
    }

    /// Uniform reference measure on the target grid.
    pub fn uniform(eps: T, psi: Vec<T>) -> Result<Self> {
        let m = psi.len();
        Self::new(eps, psi, vec![T::one(); m])
    }

    fn check(&self, cost: &CostMatrix<T>) -> Result<()> {
        if cost.cols() != self.psi.values.len() {
            return Err(Error::InvalidInput(format!(
                "cost has {} columns but psi has {} entries",
                cost.cols(),
                self.psi.values.len()
            )));
        }
        Ok(())
    }
}

/// Log-sum-exp of one row, kept in cost units so a single target gives
/// exactly C_i0 − ψ_0. `shifted` holds ψ_j + ε log σ_j; on return `buf`
/// holds b_j = shifted_j − C_ij and log p_ij = (b_j − bmax)/ε − lns.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RowLse<T> {
    pub bmax: T,
    pub lns: T,
    pub value: T,
}

#[inline]
pub(crate) fn row_lse<T: Real>(crow: &[T], shifted: &[T], eps: T, inv_eps: T, buf: &mut [T]) -> RowLse<T> {
    let mut bmax = T::neg_infinity();
    for ((b, &s), &c) in buf.iter_mut().zip(shifted).zip(crow) {
        *b = s - c;
        if *b > bmax {
            bmax = *b;
        }
    }
    let floor = -T::lse_cutoff();
    let mut sum = T::zero();
    for &b in buf.iter() {
        let t = (b - bmax) * inv_eps;
        if t > floor {
            sum += t.exp();
        }
    }
    let lns = sum.ln();
    RowLse { bmax, lns, value: -bmax - eps * lns }
}

impl<T: Real> EntropicState<T> {
    /// ψ_j + ε log σ_j (−∞ where σ_j = 0).
    pub(crate) fn shifted_psi(&self) -> Vec<T> {
        self.psi
            .values
            .iter()
            .zip(&self.sigma)
            .map(|(&p, &s)| if s > T::zero() { p + self.eps * s.ln() } else { T::neg_infinity() })
            .collect()
    }
}

/// ψ^{c,ε}(x_i) = −ε log Σ_j σ_j exp((ψ_j − C_ij)/ε) for every row.
pub fn ctransform_eps<T: Real>(state: &EntropicState<T>, cost: &CostMatrix<T>) -> Result<Vec<T>> {
    state.check(cost)?;
    let sh = state.shifted_psi();
    let inv = T::one() / state.eps;
    let mut buf = vec![T::zero(); cost.cols()];
    Ok((0..cost.rows()).map(|i| row_lse(cost.row(i), &sh, state.eps, inv, &mut buf).value).collect())
}

/// The Gibbs measure μ_ε^{x_i}[ψ] on the targets.
pub fn gibbs_row<T: Real>(state: &EntropicState<T>, cost: &CostMatrix<T>, i: usize) -> Result<Vec<T>> {
    state.check(cost)?;
    if i >= cost.rows() {
        return Err(Error::InvalidInput(format!("row {i} out of range")));
    }
    let sh = state.shifted_psi();
    let mut buf = vec![T::zero(); cost.cols()];
    Ok(gibbs_row_with(cost.row(i), &sh, state.eps, &mut buf))
}

pub(crate) fn gibbs_row_with<T: Real>(crow: &[T], shifted: &[T], eps: T, buf: &mut [T]) -> Vec<T> {
    let inv = T::one() / eps;
    let r = row_lse(crow, shifted, eps, inv, buf);
    let floor = -T::lse_cutoff();
    buf.iter()
        .map(|&b| {
            let t = (b - r.bmax) * inv - r.lns;
            if t > floor {
                t.exp()
            } else {
                T::zero()
            }
        })
        .collect()
}

fn check_rho<T: Real>(cost: &CostMatrix<T>, rho: &[T]) -> Result<()> {
    if rho.len() != cost.rows() {
        return Err(Error::InvalidInput(format!("{} rho weights for {} cost rows", rho.len(), cost.rows())));
    }
    if rho.iter().any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(Error::InvalidInput("rho weights must be nonnegative".into()));
    }
    Ok(())
}

/// μ_ε[ψ] = Σ_i ρ_i μ_ε^{x_i}[ψ].
pub fn pushforward_eps<T: Real>(state: &EntropicState<T>, cost: &CostMatrix<T>, rho: &[T]) -> Result<Vec<T>> {
    state.check(cost)?;
    check_rho(cost, rho)?;
    let sh = state.shifted_psi();
    let mut buf = vec![T::zero(); cost.cols()];
    let mut out = vec![T::zero(); cost.cols()];
    for (i, &r) in rho.iter().enumerate() {
        if r == T::zero() {
            continue;
        }
        let p = gibbs_row_with(cost.row(i), &sh, state.eps, &mut buf);
        out.iter_mut().zip(&p).for_each(|(o, &pj)| *o += r * pj);
    }
    Ok(out)
}

/// K_ρ^ε(ψ) = Σ_i ρ_i ψ^{c,ε}(x_i).
pub fn kantorovich_eps<T: Real>(state: &EntropicState<T>, cost: &CostMatrix<T>, rho: &[T]) -> Result<T> {
    check_rho(cost, rho)?;
    let phi = ctransform_eps(state, cost)?;
    Ok(compensated_sum(rho.iter().zip(&phi).map(|(&r, &f)| r * f)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IFunctional<T> {
    pub value: T,
    /// ρ̂_i = exp(ψ^{c,ε}(x_i)) / Σ_k ρ_k exp(ψ^{c,ε}(x_k)).
    pub rho_hat: Vec<T>,
}

/// I_ρ^ε(ψ) = log Σ_i ρ_i exp(ψ^{c,ε}(x_i)) with the Gibbs reweighting ρ̂.
pub fn i_functional_eps<T: Real>(state: &EntropicState<T>, cost: &CostMatrix<T>, rho: &[T]) -> Result<IFunctional<T>> {
    check_rho(cost, rho)?;
    let phi = ctransform_eps(state, cost)?;
    let fmax = phi
        .iter()
        .zip(rho)
        .filter(|(_, &r)| r > T::zero())
        .fold(T::neg_infinity(), |a, (&f, _)| a.max(f));
    if !fmax.is_finite() {
        return Err(Error::InvalidInput("rho has no positive weight".into()));
    }
    let s = compensated_sum(rho.iter().zip(&phi).map(|(&r, &f)| r * (f - fmax).exp()));
    let value = fmax + s.ln();
    let rho_hat = phi.iter().map(|&f| (f - value).exp()).collect();
    Ok(IFunctional { value, rho_hat })
}
