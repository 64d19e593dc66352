//! Hard c-transforms, Kantorovich potentials, argmin transport maps,
//! weighted-ball reference measures and discrepancy metrics.

use std::io::Write;

use crate::entropic::{solve_annealed, Annealed, CostMatrix, DualPotential, SolverConfig};
use crate::error::{Error, Result};
use crate::manifold::{ManifoldSpec, Point};
use crate::measure::{weighted_variance, DiscreteMeasure};
use crate::scalar::{compensated_sum, Real};

/// φ on the ρ-support.
#[derive(Clone, Debug, PartialEq)]
pub struct KantorovichPotential<T> {
    pub phi: Vec<T>,
    /// Set once ⟨ρ, φ⟩ = 0 has been imposed.
    pub gauged: bool,
}

impl<T: Real> KantorovichPotential<T> {
    pub fn apply_gauge(&mut self, rho: &[T]) -> Result<()> {
        if rho.len() != self.phi.len() {
            return Err(Error::InvalidInput("gauge weights do not match the potential".into()));
        }
        let mean = compensated_sum(rho.iter().zip(&self.phi).map(|(&w, &f)| w * f));
        self.phi.iter_mut().for_each(|f| *f -= mean);
        self.gauged = true;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportAssignment<T> {
    pub target_index: Vec<usize>,
    /// second best − best; +∞ with a single target.
    pub gap: Vec<T>,
}

/// φ_i = min_j (C_ij − ψ_j), not gauged.
pub fn ctransform_hard<T: Real>(psi: &DualPotential<T>, cost: &CostMatrix<T>) -> Result<KantorovichPotential<T>> {
    check_cols(psi, cost)?;
    let phi = (0..cost.rows())
        .map(|i| {
            cost.row(i)
                .iter()
                .zip(&psi.values)
                .fold(T::infinity(), |acc, (&c, &p)| acc.min(c - p))
        })
        .collect();
    Ok(KantorovichPotential { phi, gauged: false })
}

/// The transform in the other direction, ψ_j = min_i (C_ij − φ_i).
pub fn ctransform_hard_cols<T: Real>(phi: &[T], cost: &CostMatrix<T>) -> Result<DualPotential<T>> {
    if phi.len() != cost.rows() {
        return Err(Error::InvalidInput("potential length does not match the cost rows".into()));
    }
    let mut out = vec![T::infinity(); cost.cols()];
    for (i, &f) in phi.iter().enumerate() {
        for (o, &c) in out.iter_mut().zip(cost.row(i)) {
            *o = o.min(c - f);
        }
    }
    Ok(DualPotential::new(out))
}

fn check_cols<T: Real>(psi: &DualPotential<T>, cost: &CostMatrix<T>) -> Result<()> {
    if psi.values.len() != cost.cols() {
        return Err(Error::InvalidInput(format!(
            "psi has {} entries for {} cost columns",
            psi.values.len(),
            cost.cols()
        )));
    }
    Ok(())
}

/// y_ψ(x_i) = argmin_j (C_ij − ψ_j), smallest index on exact ties.
pub fn assign_map<T: Real>(psi: &DualPotential<T>, cost: &CostMatrix<T>) -> Result<TransportAssignment<T>> {
    check_cols(psi, cost)?;
    let mut target_index = Vec::with_capacity(cost.rows());
    let mut gap = Vec::with_capacity(cost.rows());
    for i in 0..cost.rows() {
        let (mut best, mut second, mut arg) = (T::infinity(), T::infinity(), 0usize);
        for (j, (&c, &p)) in cost.row(i).iter().zip(&psi.values).enumerate() {
            let v = c - p;
            if v < best {
                second = best;
                best = v;
                arg = j;
            } else if v < second {
                second = v;
            }
        }
        target_index.push(arg);
        gap.push(second - best);
    }
    Ok(TransportAssignment { target_index, gap })
}

#[derive(Clone, Debug)]
pub struct PotentialSolution<T> {
    pub potential: KantorovichPotential<T>,
    /// Indices refer to the points of the target measure.
    pub assignment: TransportAssignment<T>,
    /// ½Σ|(y_ψ)#ρ − μ|.
    pub pushforward_residual: T,
    pub solver: Annealed<T>,
    /// ψ over the target points (zero-weight targets carry +∞-free 0 and are never selected).
    pub psi: Vec<T>,
}

/// Annealed entropic solve, then hard transform, gauge and argmin map.
pub fn potential_from_target<T: Real>(
    rho: &DiscreteMeasure<T>,
    mu: &DiscreteMeasure<T>,
    schedule: &[T],
    cfg: &SolverConfig<T>,
) -> Result<PotentialSolution<T>> {
    if rho.spec != mu.spec {
        return Err(Error::Domain("rho and mu live on different manifolds".into()));
    }
    let support: Vec<usize> = (0..mu.len()).filter(|&j| mu.weights[j] > T::zero()).collect();
    let ys: Vec<Point<T>> = support.iter().map(|&j| mu.points[j].clone()).collect();
    let mw: Vec<T> = support.iter().map(|&j| mu.weights[j]).collect();
    let cost = CostMatrix::from_points(&rho.spec, &rho.points, &ys)?;
    let mut cfg = cfg.clone();
    cfg.sigma = cfg.sigma.map(|s| support.iter().map(|&j| s[j]).collect());
    let solver = solve_annealed(&cost, &rho.weights, &mw, schedule, &cfg)?;
    finish_potential(rho, mu, &support, &cost, solver)
}

pub(crate) fn finish_potential<T: Real>(
    rho: &DiscreteMeasure<T>,
    mu: &DiscreteMeasure<T>,
    support: &[usize],
    cost: &CostMatrix<T>,
    solver: Annealed<T>,
) -> Result<PotentialSolution<T>> {
    let psi_s = &solver.state.psi;
    let mut potential = ctransform_hard(psi_s, cost)?;
    potential.apply_gauge(&rho.weights)?;
    let local = assign_map(psi_s, cost)?;
    let mut pushed = vec![T::zero(); mu.len()];
    let target_index: Vec<usize> = local.target_index.iter().map(|&j| support[j]).collect();
    for (&j, &w) in target_index.iter().zip(&rho.weights) {
        pushed[j] += w;
    }
    let pushforward_residual =
        T::lit(0.5) * compensated_sum(pushed.iter().zip(&mu.weights).map(|(&a, &b)| (a - b).abs()));
    let mut psi = vec![T::zero(); mu.len()];
    for (k, &j) in support.iter().enumerate() {
        psi[j] = psi_s.values[k];
    }
    Ok(PotentialSolution {
        potential,
        assignment: TransportAssignment { target_index, gap: local.gap },
        pushforward_residual,
        solver,
        psi,
    })
}

/// Var_ρ(φ_a − φ_b).
pub fn potential_discrepancy<T: Real>(phi_a: &[T], phi_b: &[T], rho: &[T]) -> Result<T> {
    if phi_a.len() != phi_b.len() {
        return Err(Error::InvalidInput("potentials have different lengths".into()));
    }
    let d: Vec<T> = phi_a.iter().zip(phi_b).map(|(&a, &b)| a - b).collect();
    weighted_variance(&d, rho)
}

/// Σ_i ρ_i dist(y[a_i], y[b_i])².
pub fn map_discrepancy<T: Real>(
    a: &[usize],
    b: &[usize],
    rho: &[T],
    targets: &[Point<T>],
    spec: &ManifoldSpec<T>,
) -> Result<T> {
    if a.len() != b.len() || a.len() != rho.len() {
        return Err(Error::InvalidInput("assignments and rho must have equal length".into()));
    }
    let mut acc = Vec::with_capacity(a.len());
    for ((&i, &j), &w) in a.iter().zip(b).zip(rho) {
        if i >= targets.len() || j >= targets.len() {
            return Err(Error::InvalidInput(format!("target index {} out of range", i.max(j))));
        }
        let d = spec.dist(&targets[i], &targets[j])?;
        acc.push(w * d * d);
    }
    Ok(compensated_sum(acc))
}

/// ρ^V ∝ ρ_i exp(−K dist(x_i, center)²) restricted to the ball.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedBallMeasure<T> {
    pub center: usize,
    pub radius: T,
    pub k: T,
    /// ρ-points inside the ball.
    pub support: Vec<usize>,
    /// Weights over all ρ-points, zero outside the ball.
    pub weights: Vec<T>,
    /// E = exp(K r²)·M_ρ/m_ρ.
    pub comparability: T,
}

impl<T: Real> WeightedBallMeasure<T> {
    /// Checks E^{−1} ρ̃_i ≤ ρ^V_i ≤ E ρ̃_i against the normalized restriction ρ̃.
    pub fn check_comparability(&self, rho: &[T]) -> bool {
        let mass = compensated_sum(self.support.iter().map(|&i| rho[i]));
        let tol = T::one() + T::lit(1e-12);
        self.support.iter().all(|&i| {
            let r = rho[i] / mass;
            let v = self.weights[i];
            v <= self.comparability * r * tol && v * self.comparability * tol >= r
        })
    }
}

/// Bakry–Émery weight K with Hess V + Ric ≥ λ for V = K·dist², using
/// Hess dist² ≥ θ on the ledger ball.
pub fn weighted_ball_k<T: Real>(spec: &ManifoldSpec<T>) -> T {
    let (theta, _) = spec.strong_convexity();
    (spec.semiconcavity_lambda() - spec.ricci_lower()).max(T::zero()) / theta
}

pub fn weighted_ball_measure<T: Real>(
    rho: &DiscreteMeasure<T>,
    center: usize,
    radius: T,
    k: T,
    density_ratio: T,
) -> Result<WeightedBallMeasure<T>> {
    if center >= rho.len() {
        return Err(Error::InvalidInput(format!("center index {center} out of range")));
    }
    let (_, r_cap) = rho.spec.strong_convexity();
    if !(radius > T::zero()) || radius > r_cap {
        return Err(Error::InvalidInput(format!("radius {radius} must lie in (0, {r_cap}]")));
    }
    if !(k >= T::zero()) || !(density_ratio >= T::one()) {
        return Err(Error::InvalidInput("K must be nonnegative and M/m at least 1".into()));
    }
    let c = &rho.points[center].coords;
    let mut weights = vec![T::zero(); rho.len()];
    let mut support = Vec::new();
    for (i, p) in rho.points.iter().enumerate() {
        let d = rho.spec.dist_raw(&p.coords, c);
        if d < radius && rho.weights[i] > T::zero() {
            weights[i] = rho.weights[i] * (-k * d * d).exp();
            support.push(i);
        }
    }
    if support.is_empty() {
        return Err(Error::InvalidInput("ball contains no support point".into()));
    }
    let z = compensated_sum(support.iter().map(|&i| weights[i]));
    weights.iter_mut().for_each(|w| *w /= z);
    Ok(WeightedBallMeasure {
        center,
        radius,
        k,
        support,
        weights,
        comparability: (k * radius * radius).exp() * density_ratio,
    })
}

/// CSV `point_index,phi,target_index,gap`.
pub fn write_potential_csv<T: Real, W: Write>(
    phi: &KantorovichPotential<T>,
    assign: &TransportAssignment<T>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["point_index", "phi", "target_index", "gap"])?;
    for (i, ((f, t), g)) in phi.phi.iter().zip(&assign.target_index).zip(&assign.gap).enumerate() {
        let gap = if g.is_infinite() { "inf".to_string() } else { format!("{g:e}") };
        w.write_record([i.to_string(), format!("{f:e}"), t.to_string(), gap])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropic::geometric_schedule;

    #[test]
    fn single_target_transform() {
        let c = CostMatrix::<f64>::from_rows(3, 1, vec![0.5, 0.1, 2.0]).unwrap();
        let psi = DualPotential::new(vec![0.3]);
        assert_eq!(ctransform_hard(&psi, &c).unwrap().phi, vec![0.5 - 0.3, 0.1 - 0.3, 2.0 - 0.3]);
        let a = assign_map(&psi, &c).unwrap();
        assert_eq!(a.target_index, vec![0, 0, 0]);
        assert!(a.gap.iter().all(|g| g.is_infinite()));
    }

    #[test]
    fn zero_psi_gives_row_minima_and_ties_pick_first() {
        let c = CostMatrix::<f64>::from_rows(2, 3, vec![0.4, 0.2, 0.2, 0.9, 0.1, 0.3]).unwrap();
        let psi = DualPotential::zeros(3);
        assert_eq!(ctransform_hard(&psi, &c).unwrap().phi, vec![0.2, 0.1]);
        let a = assign_map(&psi, &c).unwrap();
        assert_eq!(a.target_index, vec![1, 1]);
        assert_eq!(a.gap[0], 0.0);
        assert!((a.gap[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn discrepancies() {
        let rho = [0.5, 0.5];
        assert_eq!(potential_discrepancy(&[1.0, 2.0], &[1.0, 2.0], &rho).unwrap(), 0.0);
        assert_eq!(potential_discrepancy(&[1.0, 2.0], &[0.0, 1.0], &rho).unwrap(), 0.0);
        assert_eq!(potential_discrepancy(&[0.0, 1.0], &[0.0, 0.0], &rho).unwrap(), 0.25);
        let e = ManifoldSpec::<f64>::euclidean(1, None).unwrap();
        let ys = vec![Point::new(vec![0.0]), Point::new(vec![3.0])];
        assert_eq!(map_discrepancy(&[0], &[1], &[1.0], &ys, &e).unwrap(), 9.0);
        assert_eq!(map_discrepancy(&[0, 1], &[0, 1], &rho, &ys, &e).unwrap(), 0.0);
        assert!(map_discrepancy(&[0], &[2], &[1.0], &ys, &e).is_err());
    }

    #[test]
    fn identity_and_forced_moves() {
        let e = ManifoldSpec::<f64>::euclidean(1, None).unwrap();
        let pts: Vec<Point<f64>> = (0..5).map(|k| Point::new(vec![k as f64 * 0.2])).collect();
        let rho = DiscreteMeasure::from_samples(&e, pts.clone(), None).unwrap();
        let sched = geometric_schedule(1.0, 1e-3, 0.5).unwrap();
        let cfg = SolverConfig::with_tol(1e-10);
        let sol = potential_from_target(&rho, &rho, &sched, &cfg).unwrap();
        assert_eq!(sol.assignment.target_index, vec![0, 1, 2, 3, 4]);
        let bound = 2.0 * 1e-3 * 5f64.ln();
        assert!(sol.potential.phi.iter().all(|f| f.abs() <= bound));
        assert_eq!(sol.pushforward_residual, 0.0);

        let two = DiscreteMeasure::from_samples(&e, pts[..2].to_vec(), None).unwrap();
        let far = DiscreteMeasure::from_samples(&e, pts[..2].to_vec(), Some(vec![0.0, 1.0])).unwrap();
        let sol = potential_from_target(&two, &far, &sched, &cfg).unwrap();
        assert_eq!(sol.assignment.target_index, vec![1, 1]);
    }

    #[test]
    fn weighted_ball() {
        let e: ManifoldSpec<f64> = "box:2:0,0:1,1".parse().unwrap();
        let pts: Vec<Point<f64>> =
            (0..100).map(|k| Point::new(vec![(k % 10) as f64 / 10.0 + 0.05, (k / 10) as f64 / 10.0 + 0.05])).collect();
        let rho = DiscreteMeasure::from_samples(&e, pts, None).unwrap();
        let plain = weighted_ball_measure(&rho, 55, 0.25, 0.0, 1.0).unwrap();
        let n_in = plain.support.len() as f64;
        assert!(plain.support.iter().all(|&i| (plain.weights[i] - 1.0 / n_in).abs() < 1e-15));
        let wb = weighted_ball_measure(&rho, 55, 0.25, 1.0, 1.0).unwrap();
        let c = &rho.points[55].coords;
        let raw: Vec<f64> = wb
            .support
            .iter()
            .map(|&i| {
                let p = &rho.points[i].coords;
                (-((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2))).exp()
            })
            .collect();
        let z: f64 = raw.iter().sum();
        for (k, &i) in wb.support.iter().enumerate() {
            assert!((wb.weights[i] - raw[k] / z).abs() < 1e-12);
        }
        assert!(wb.check_comparability(&rho.weights));
        let single = weighted_ball_measure(&rho, 0, 0.01, 1.0, 1.0).unwrap();
        assert_eq!(single.support, vec![0]);
        assert_eq!(single.weights[0], 1.0);
    }

    #[test]
    fn ledger_k() {
        assert_eq!(weighted_ball_k(&ManifoldSpec::<f64>::euclidean(2, None).unwrap()), 1.0);
        assert_eq!(weighted_ball_k(&ManifoldSpec::<f64>::torus(2).unwrap()), 4.0);
        assert_eq!(weighted_ball_k(&ManifoldSpec::<f64>::sphere(2).unwrap()), 6.0);
    }
}
