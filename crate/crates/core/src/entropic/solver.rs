//! Semi-dual Sinkhorn iteration ψ ← ψ + ε·log(μ/μ_ε[ψ]) in log domain.

use serde::Serialize;

use super::{check_rho, ctransform_eps, row_lse, CostMatrix, DualPotential, EntropicState};
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    /// Target total-variation residual ½Σ|μ_ε[ψ] − μ|.
    pub tol: T,
    pub max_iter: usize,
    pub damping: T,
    /// Used once the residual has not improved for `stall_window` iterations.
    pub fallback_damping: T,
    pub stall_window: usize,
    /// Reference measure σ on the targets; uniform when `None`.
    pub sigma: Option<Vec<T>>,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-6),
            max_iter: 100_000,
            damping: T::one(),
            fallback_damping: T::lit(0.5),
            stall_window: 50,
            sigma: None,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Per-level diagnostics, serialized into solver reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverReport {
    pub eps: f64,
    pub iterations: usize,
    pub residual: f64,
    pub annealing_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Annealed<T> {
    /// State at the smallest ε.
    pub state: EntropicState<T>,
    /// sup_i |ψ^{c,ε_k}(x_i) − ψ^{c,ε_{k−1}}(x_i)| over the last two levels.
    pub annealing_gap: Option<T>,
    pub levels: Vec<SolverReport>,
}

impl<T: Real> Annealed<T> {
    pub fn report(&self) -> SolverReport {
        SolverReport {
            eps: self.state.eps.to_f64_lossy(),
            iterations: self.state.iterations,
            residual: self.state.residual.to_f64_lossy(),
            annealing_gap: self.annealing_gap.map(Real::to_f64_lossy),
        }
    }
}

/// Geometric schedule start, start·ratio, … ending exactly at `end`.
pub fn geometric_schedule<T: Real>(start: T, end: T, ratio: T) -> Result<Vec<T>> {
    if !(start > T::zero() && end > T::zero() && end <= start && ratio > T::zero() && ratio < T::one()) {
        return Err(Error::Config("schedule needs start >= end > 0 and ratio in (0,1)".into()));
    }
    let mut out = Vec::new();
    let mut e = start;
    while e > end * (T::one() + T::lit(1e-9)) {
        out.push(e);
        e *= ratio;
    }
    out.push(end);
    Ok(out)
}

pub fn solve_semidual<T: Real>(
    cost: &CostMatrix<T>,
    rho: &[T],
    mu: &[T],
    eps: T,
    tol: T,
    max_iter: usize,
) -> Result<EntropicState<T>> {
    let cfg = SolverConfig { tol, max_iter, ..SolverConfig::default() };
    solve_semidual_with(cost, rho, mu, eps, &cfg, None)
}

struct Workspace<T> {
    buf: Vec<T>,
    cmax: Vec<T>,
    csum: Vec<T>,
}

/// log μ_ε[ψ]_j with a running column log-sum-exp, so columns receiving
/// vanishing mass keep an exact logarithm instead of underflowing to zero.
fn log_pushforward<T: Real>(
    cost: &CostMatrix<T>,
    shifted: &[T],
    log_rho: &[T],
    eps: T,
    ws: &mut Workspace<T>,
) -> Vec<T> {
    let inv_eps = T::one() / eps;
    let cut = T::lse_cutoff();
    ws.cmax.iter_mut().for_each(|c| *c = T::neg_infinity());
    ws.csum.iter_mut().for_each(|c| *c = T::zero());
    for (i, &lr) in log_rho.iter().enumerate() {
        if lr == T::neg_infinity() {
            continue;
        }
        let r = row_lse(cost.row(i), shifted, eps, inv_eps, &mut ws.buf);
        let shift = lr - r.lns;
        for ((&b, cm), cs) in ws.buf.iter().zip(ws.cmax.iter_mut()).zip(ws.csum.iter_mut()) {
            let t = (b - r.bmax) * inv_eps + shift;
            if t > *cm {
                *cs = if *cm == T::neg_infinity() { T::one() } else { *cs * (*cm - t).exp() + T::one() };
                *cm = t;
            } else if t > *cm - cut {
                *cs += (t - *cm).exp();
            }
        }
    }
    ws.cmax.iter().zip(&ws.csum).map(|(&c, &s)| c + s.ln()).collect()
}

fn log_weights<T: Real>(w: &[T]) -> Vec<T> {
    w.iter().map(|&x| if x > T::zero() { x.ln() } else { T::neg_infinity() }).collect()
}

/// Semi-dual iteration from an optional warm start `psi0`.
pub fn solve_semidual_with<T: Real>(
    cost: &CostMatrix<T>,
    rho: &[T],
    mu: &[T],
    eps: T,
    cfg: &SolverConfig<T>,
    psi0: Option<&[T]>,
) -> Result<EntropicState<T>> {
    let m = cost.cols();
    check_rho(cost, rho)?;
    if mu.len() != m {
        return Err(Error::InvalidInput(format!("{} target weights for {m} columns", mu.len())));
    }
    if !(cfg.tol > T::zero()) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let sigma = cfg.sigma.clone().unwrap_or_else(|| vec![T::one(); m]);
    let mut state = EntropicState::new(eps, psi0.map(<[T]>::to_vec).unwrap_or_else(|| vec![T::zero(); m]), sigma)?;
    for j in 0..m {
        let (s, t) = (state.sigma[j] > T::zero(), mu[j] > T::zero());
        if s != t || mu[j] < T::zero() || !mu[j].is_finite() {
            return Err(Error::InvalidInput(format!(
                "target weight {j} must be positive exactly where sigma is positive"
            )));
        }
    }
    let mu_total = compensated_sum(mu.iter().copied());
    let mu: Vec<T> = mu.iter().map(|&x| x / mu_total).collect();
    let rho_total = compensated_sum(rho.iter().copied());
    if !(rho_total > T::zero()) {
        return Err(Error::InvalidInput("rho has no positive weight".into()));
    }
    let rho: Vec<T> = rho.iter().map(|&x| x / rho_total).collect();

    let log_sigma = log_weights(&state.sigma);
    let log_rho = log_weights(&rho);
    let log_mu = log_weights(&mu);
    let mut shifted = vec![T::zero(); m];
    let mut ws = Workspace { buf: vec![T::zero(); m], cmax: vec![T::zero(); m], csum: vec![T::zero(); m] };
    let mut psi = DualPotential::new(state.psi.values.clone());
    psi.normalize(&mu);

    let mut damping = cfg.damping;
    let mut best = T::infinity();
    let mut since_best = 0usize;
    let mut residual = T::infinity();
    for it in 1..=cfg.max_iter {
        for j in 0..m {
            shifted[j] = psi.values[j] + eps * log_sigma[j];
        }
        let lp = log_pushforward(cost, &shifted, &log_rho, eps, &mut ws);
        residual = T::lit(0.5)
            * compensated_sum(lp.iter().zip(&mu).map(|(&l, &w)| {
                let p = if l == T::neg_infinity() { T::zero() } else { l.exp() };
                (p - w).abs()
            }));
        if residual <= cfg.tol {
            state.psi = psi;
            state.residual = residual;
            state.iterations = it;
            return Ok(state);
        }
        if residual < best {
            best = residual;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.stall_window && damping > cfg.fallback_damping {
                damping = cfg.fallback_damping;
                since_best = 0;
            }
        }
        let step = damping * eps;
        for j in 0..m {
            if log_mu[j] > T::neg_infinity() {
                psi.values[j] += step * (log_mu[j] - lp[j]);
            }
        }
        psi.normalize(&mu);
        if psi.values.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    Err(Error::NonConvergence {
        eps: eps.to_f64_lossy(),
        iterations: cfg.max_iter,
        residual: residual.to_f64_lossy(),
        last_psi: psi.values.iter().map(|v| v.to_f64_lossy()).collect(),
    })
}

/// Warm-started chain of semi-dual solves along a strictly decreasing schedule.
pub fn solve_annealed<T: Real>(
    cost: &CostMatrix<T>,
    rho: &[T],
    mu: &[T],
    schedule: &[T],
    cfg: &SolverConfig<T>,
) -> Result<Annealed<T>> {
    if schedule.is_empty() {
        return Err(Error::Config("empty eps schedule".into()));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("eps schedule must be strictly decreasing".into()));
    }
    let mut levels = Vec::with_capacity(schedule.len());
    let mut prev: Option<EntropicState<T>> = None;
    let mut last: Option<EntropicState<T>> = None;
    for &eps in schedule {
        let warm = last.as_ref().map(|s| s.psi.values.as_slice());
        let st = solve_semidual_with(cost, rho, mu, eps, cfg, warm)?;
        levels.push(SolverReport {
            eps: eps.to_f64_lossy(),
            iterations: st.iterations,
            residual: st.residual.to_f64_lossy(),
            annealing_gap: None,
        });
        prev = last.take();
        last = Some(st);
    }
    let state = last.expect("schedule is nonempty");
    let annealing_gap = match prev {
        Some(p) => {
            let a = ctransform_eps(&state, cost)?;
            let b = ctransform_eps(&p, cost)?;
            Some(a.iter().zip(&b).fold(T::zero(), |g, (&x, &y)| g.max((x - y).abs())))
        }
        None => None,
    };
    if let Some(l) = levels.last_mut() {
        l.annealing_gap = annealing_gap.map(Real::to_f64_lossy);
    }
    Ok(Annealed { state, annealing_gap, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropic::pushforward_eps;
    use crate::manifold::{ManifoldSpec, Point};

    #[test]
    fn fixed_point_is_immediate() {
        let c = CostMatrix::from_rows(3, 4, (0..12).map(|k| (k as f64 * 0.7).sin().abs()).collect()).unwrap();
        let rho = [0.2, 0.3, 0.5];
        let s0 = EntropicState::uniform(0.2, vec![0.0; 4]).unwrap();
        let mu = pushforward_eps(&s0, &c, &rho).unwrap();
        let st = solve_semidual(&c, &rho, &mu, 0.2, 1e-12, 10).unwrap();
        assert!(st.iterations <= 2);
        assert!(st.psi.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn one_by_one() {
        let c = CostMatrix::from_rows(1, 1, vec![0.3]).unwrap();
        let st = solve_semidual(&c, &[1.0], &[1.0], 0.1, 1e-12, 5).unwrap();
        assert_eq!(st.psi.values, vec![0.0]);
        assert_eq!(st.residual, 0.0);
    }

    #[test]
    fn sphere_instance_converges() {
        let s = ManifoldSpec::<f64>::sphere(2).unwrap();
        let xs = s.sample_uniform(50, 1).unwrap();
        let ys = s.sample_uniform(50, 2).unwrap();
        let c = CostMatrix::from_points(&s, &xs, &ys).unwrap();
        let rho = vec![1.0 / 50.0; 50];
        let st = solve_semidual(&c, &rho, &rho, 0.1, 1e-6, 10_000).unwrap();
        assert!(st.residual <= 1e-6);
        let mu_eps = pushforward_eps(&st, &c, &rho).unwrap();
        let tv: f64 = 0.5 * mu_eps.iter().zip(&rho).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!((tv - st.residual).abs() < 1e-12);
        let mean: f64 = st.psi.values.iter().zip(&rho).map(|(a, b)| a * b).sum();
        assert!(mean.abs() < 1e-10);
    }

    #[test]
    fn non_convergence_carries_state() {
        let s = ManifoldSpec::<f64>::sphere(2).unwrap();
        let xs = s.sample_uniform(20, 3).unwrap();
        let c = CostMatrix::from_points(&s, &xs, &xs).unwrap();
        let rho = vec![0.05; 20];
        match solve_semidual(&c, &rho, &rho, 0.01, 1e-14, 3) {
            Err(Error::NonConvergence { iterations, last_psi, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(last_psi.len(), 20);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn annealing_levels() {
        let e = ManifoldSpec::<f64>::euclidean(1, None).unwrap();
        let xs: Vec<Point<f64>> = (0..50).map(|k| Point::new(vec![k as f64 / 49.0])).collect();
        let ys: Vec<Point<f64>> = (0..50).map(|k| Point::new(vec![(k as f64 / 49.0).powi(2) + 0.1])).collect();
        let c = CostMatrix::from_points(&e, &xs, &ys).unwrap();
        let w = vec![0.02; 50];
        let sched = geometric_schedule(1.0, 1e-3, 0.5).unwrap();
        assert_eq!(sched.len(), 11);
        assert_eq!(*sched.last().unwrap(), 1e-3);
        let cfg = SolverConfig::with_tol(1e-9);
        let a = solve_annealed(&c, &w, &w, &sched, &cfg).unwrap();
        assert_eq!(a.levels.len(), sched.len());
        assert!(a.annealing_gap.unwrap().is_finite());
        let soft = ctransform_eps(&a.state, &c).unwrap();
        let bound = 3.0 * 1e-3 * (50f64).ln();
        for i in 0..50 {
            let hard = (0..50).map(|j| c.get(i, j) - a.state.psi.values[j]).fold(f64::INFINITY, f64::min);
            assert!((soft[i] - hard).abs() <= bound);
        }
        let single = solve_annealed(&c, &w, &w, &[0.5], &cfg).unwrap();
        let direct = solve_semidual_with(&c, &w, &w, 0.5, &cfg, None).unwrap();
        assert_eq!(single.state, direct);
        assert!(single.annealing_gap.is_none());
        assert!(solve_annealed(&c, &w, &w, &[0.1, 0.2], &cfg).is_err());
    }

    #[test]
    fn symmetric_pair_stays_symmetric() {
        let c = CostMatrix::from_rows(2, 2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        let a = solve_annealed(&c, &[0.5, 0.5], &[0.5, 0.5], &[1.0, 0.1, 0.01], &SolverConfig::with_tol(1e-12)).unwrap();
        assert_eq!(a.state.psi.values[0], a.state.psi.values[1]);
    }
}
