//! John domains, the Vitali ball cover with chains to a central ball,
//! Boman condition checks and variance gluing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{Domain, ManifoldSpec, Point};
use crate::measure::{weighted_variance, DiscreteMeasure};
use crate::scalar::{compensated_sum, norm, Real};

#[derive(Clone, Debug, PartialEq)]
enum Curve<T> {
    /// Geodesic from x to the centre.
    Geodesic,
    /// Linear in polar coordinates towards (rm, angle/2).
    Polar { rm: T, mid: T },
}

/// Bounded domain with an analytic John curve to its centre.
#[derive(Clone, Debug, PartialEq)]
pub struct JohnDomain<T> {
    pub spec: ManifoldSpec<T>,
    pub x0: Point<T>,
    pub eta: T,
    curve: Curve<T>,
}

impl<T: Real> JohnDomain<T> {
    /// Builds the descriptor from the domain attached to `spec`.
    pub fn new(spec: &ManifoldSpec<T>) -> Result<Self> {
        let dom = spec
            .domain
            .as_ref()
            .ok_or_else(|| Error::Domain("John curves need a bounded domain".into()))?;
        let two = T::lit(2.0);
        let (x0, eta, curve) = match dom {
            Domain::Ball { center, .. } | Domain::Cap { center, .. } => {
                (Point::new(center.clone()), T::one(), Curve::Geodesic)
            }
            Domain::Box { lo, hi } => {
                let c: Vec<T> = lo.iter().zip(hi).map(|(&a, &b)| (a + b) / two).collect();
                let half: Vec<T> = lo.iter().zip(hi).map(|(&a, &b)| (b - a) / two).collect();
                let hmin = half.iter().copied().fold(T::infinity(), T::min);
                (Point::new(c), hmin / norm(&half), Curve::Geodesic)
            }
            Domain::AnnulusSector { r0, r1, angle } => {
                if !(*r0 > T::zero()) {
                    return Err(Error::Domain("annulus John curves need r0 > 0".into()));
                }
                let rm = (*r0 + *r1) / two;
                let mid = *angle / two;
                let h = (*r1 - *r0) / two;
                // edge distance ≥ r0·sin(min(θ, α−θ, π/2)) and sin x ≥ 2x/π
                let d = h.min(*r0 * angle.min(T::PI()) / T::PI());
                let vmax = (h * h + *r1 * *r1 * mid * mid).sqrt();
                (Point::new(vec![rm * mid.cos(), rm * mid.sin()]), d / vmax, Curve::Polar { rm, mid })
            }
        };
        Ok(Self { spec: spec.clone(), x0, eta, curve })
    }

    pub fn contains(&self, x: &Point<T>) -> bool {
        self.spec.contains(x)
    }

    pub fn boundary_dist(&self, x: &Point<T>) -> T {
        self.spec.boundary_dist(x)
    }

    /// γ(s) for s ∈ [0, 1], from x (s = 0) to x₀ (s = 1).
    pub fn curve_point(&self, x: &Point<T>, s: T) -> Result<Point<T>> {
        match &self.curve {
            Curve::Geodesic => self.spec.geodesic_point(x, &self.x0, s),
            Curve::Polar { rm, mid } => {
                let (r, th) = polar(&x.coords);
                let rs = r + s * (*rm - r);
                let ts = th + s * (*mid - th);
                Ok(Point::new(vec![rs * ts.cos(), rs * ts.sin()]))
            }
        }
    }

    /// |γ'(s)|.
    pub fn curve_speed(&self, x: &Point<T>, s: T) -> T {
        match &self.curve {
            Curve::Geodesic => self.spec.dist_raw(&x.coords, &self.x0.coords),
            Curve::Polar { rm, mid } => {
                let (r, th) = polar(&x.coords);
                let rs = r + s * (*rm - r);
                let dr = *rm - r;
                let dt = *mid - th;
                (dr * dr + rs * rs * dt * dt).sqrt()
            }
        }
    }

    /// Samples (arclength t, dist(γ(t), X^c)) along the curve from x.
    pub fn curve_profile(&self, x: &Point<T>, samples: usize) -> Result<Vec<(T, T)>> {
        let samples = samples.max(1);
        let mut out = Vec::with_capacity(samples + 1);
        let mut t = T::zero();
        let mut prev = x.clone();
        for k in 0..=samples {
            let s = T::from_usize(k).unwrap() / T::from_usize(samples).unwrap();
            let p = self.curve_point(x, s)?;
            t += self.spec.dist_raw(&prev.coords, &p.coords);
            out.push((t, self.boundary_dist(&p)));
            prev = p;
        }
        Ok(out)
    }
}

fn polar<T: Real>(x: &[T]) -> (T, T) {
    let r = norm(x);
    let mut th = x[1].atan2(x[0]);
    if th < T::zero() {
        th += T::lit(2.0) * T::PI();
    }
    (r, th)
}

/// Shrink factor, dilation and chain step divisor of the construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoverParams {
    pub shrink: f64,
    pub dilation: f64,
    pub chain_step: f64,
    /// δ is floored at `resolution·(vol X / n)^{1/d}`; 0 keeps the bare construction.
    pub resolution: f64,
}

impl Default for CoverParams {
    fn default() -> Self {
        Self { shrink: 100.0, dilation: 5.0, chain_step: 1000.0, resolution: 0.0 }
    }
}

impl CoverParams {
    /// Larger balls and a δ floor so that every ball holds several samples.
    pub fn desk() -> Self {
        Self { shrink: 5.0, dilation: 5.0, chain_step: 1000.0, resolution: 4.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverBall<T> {
    pub center: Point<T>,
    pub radius: T,
    pub class: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BomanCover<T> {
    pub spec: ManifoldSpec<T>,
    pub balls: Vec<CoverBall<T>>,
    pub central: usize,
    pub r_cap: T,
    /// chains[q] starts at `central` and ends at q.
    pub chains: Vec<Vec<usize>>,
    pub params: CoverParams,
    /// Waypoints that fell outside every ball and were bridged over.
    pub uncovered_waypoints: usize,
}

impl<T: Real> BomanCover<T> {
    pub fn ball_contains(&self, q: usize, x: &[T], factor: T) -> bool {
        let b = &self.balls[q];
        self.spec.dist_raw(x, &b.center.coords) < factor * b.radius
    }

    /// Support indices inside each ball, sorted.
    pub fn members(&self, rho: &DiscreteMeasure<T>) -> Vec<Vec<usize>> {
        (0..self.balls.len())
            .map(|q| {
                (0..rho.len())
                    .filter(|&i| rho.weights[i] > T::zero() && self.ball_contains(q, &rho.points[i].coords, T::one()))
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let balls: Vec<_> = self
            .balls
            .iter()
            .map(|b| {
                serde_json::json!({
                    "center": b.center.coords.iter().map(|c| c.to_f64_lossy()).collect::<Vec<_>>(),
                    "radius": b.radius.to_f64_lossy(),
                })
            })
            .collect();
        serde_json::json!({ "balls": balls, "central": self.central, "chains": self.chains })
    }
}

fn delta_floor<T: Real>(domain: &JohnDomain<T>, n: usize, resolution: f64) -> T {
    if resolution == 0.0 || n == 0 {
        return T::zero();
    }
    let vol = domain.spec.volume().map_or(1.0, |v| v.to_f64_lossy());
    T::lit(resolution * (vol / n as f64).powf(1.0 / domain.spec.dim as f64))
}

fn dyadic_class<T: Real>(delta: T) -> i32 {
    // 2^{k−1} < δ ≤ 2^k
    delta.log2().ceil().to_i32().unwrap_or(i32::MIN)
}

pub fn build_cover<T: Real>(
    domain: &JohnDomain<T>,
    rho: &DiscreteMeasure<T>,
    r_cap: T,
    params: CoverParams,
) -> Result<BomanCover<T>> {
    if !(r_cap > T::zero()) {
        return Err(Error::InvalidInput("R must be positive".into()));
    }
    let (_, ledger_r) = domain.spec.strong_convexity();
    if r_cap > ledger_r {
        return Err(Error::InvalidInput(format!("R = {r_cap} exceeds the strong-convexity radius {ledger_r}")));
    }
    if params.shrink <= 0.0 || params.dilation < 1.0 || params.chain_step <= 0.0 || params.resolution < 0.0 {
        return Err(Error::Config("cover parameters must be positive, dilation ≥ 1".into()));
    }
    let shrink = T::lit(params.shrink);
    let dilation = T::lit(params.dilation);
    let spec = &domain.spec;

    // Candidate centres: x₀ first, then the support.
    let mut cands: Vec<&Point<T>> = vec![&domain.x0];
    for (i, p) in rho.points.iter().enumerate() {
        if rho.weights[i] <= T::zero() {
            continue;
        }
        if !domain.contains(p) {
            return Err(Error::Precondition { index: i, message: "support point outside the domain".into() });
        }
        cands.push(p);
    }
    let floor = delta_floor(domain, cands.len() - 1, params.resolution);
    let delta: Vec<T> = cands.iter().map(|p| domain.boundary_dist(p).max(floor).min(r_cap)).collect();
    let mut order: Vec<usize> = (1..cands.len()).collect();
    order.sort_by(|&a, &b| delta[b].partial_cmp(&delta[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    order.insert(0, 0);

    let mut selected: Vec<usize> = Vec::new();
    for &c in &order {
        let k = dyadic_class(delta[c]);
        let free = selected.iter().all(|&s| {
            dyadic_class(delta[s]) != k
                || spec.dist_raw(&cands[c].coords, &cands[s].coords) >= (delta[c] + delta[s]) / shrink
        });
        if free {
            selected.push(c);
        }
    }
    let balls: Vec<CoverBall<T>> = selected
        .iter()
        .map(|&c| CoverBall {
            center: cands[c].clone(),
            radius: dilation * delta[c] / shrink,
            class: dyadic_class(delta[c]),
        })
        .collect();
    let mut cover = BomanCover {
        spec: spec.clone(),
        balls,
        central: 0,
        r_cap,
        chains: Vec::new(),
        params,
        uncovered_waypoints: 0,
    };
    build_chains(&mut cover, domain, rho)?;
    Ok(cover)
}

/// ρ(a ∩ b) / max(ρ(a), ρ(b)) for every overlapping pair.
fn overlap_graph<T: Real>(members: &[Vec<usize>], w: &[T]) -> Vec<Vec<(usize, f64)>> {
    let mass: Vec<T> = members.iter().map(|m| compensated_sum(m.iter().map(|&i| w[i]))).collect();
    let mut adj = vec![Vec::new(); members.len()];
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            let inter = sorted_intersection_mass(&members[a], &members[b], w);
            if inter > T::zero() {
                let q = (inter / mass[a].max(mass[b])).to_f64_lossy();
                adj[a].push((b, q));
                adj[b].push((a, q));
            }
        }
    }
    adj
}

fn sorted_intersection_mass<T: Real>(a: &[usize], b: &[usize], w: &[T]) -> T {
    let (mut i, mut j) = (0, 0);
    let mut acc = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                acc.push(w[a[i]]);
                i += 1;
                j += 1;
            }
        }
    }
    compensated_sum(acc)
}

const BRIDGE_HOPS: usize = 3;

#[derive(PartialEq)]
struct Widest(f64, usize);
impl Eq for Widest {}
impl PartialOrd for Widest {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Widest {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(o.1.cmp(&self.1))
    }
}

/// Path from a to b maximizing the smallest overlap quality, through allowed nodes.
fn widest_path(adj: &[Vec<(usize, f64)>], a: usize, b: usize) -> Option<(f64, Vec<usize>)> {
    let n = adj.len();
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    best[a] = f64::INFINITY;
    heap.push(Widest(f64::INFINITY, a));
    while let Some(Widest(q, u)) = heap.pop() {
        if q < best[u] {
            continue;
        }
        if u == b {
            break;
        }
        for &(v, e) in &adj[u] {
            let nq = q.min(e);
            if nq > best[v] {
                best[v] = nq;
                prev[v] = u;
                heap.push(Widest(nq, v));
            }
        }
    }
    if best[b] == f64::NEG_INFINITY {
        return None;
    }
    let mut path = vec![b];
    while *path.last().unwrap() != a {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some((best[b], path))
}

/// Widest path from a to b using at most `hops` edges.
fn widest_path_hops(adj: &[Vec<(usize, f64)>], a: usize, b: usize, hops: usize) -> Option<(f64, Vec<usize>)> {
    let n = adj.len();
    let mut layers: Vec<Vec<(f64, usize)>> = vec![vec![(f64::NEG_INFINITY, usize::MAX); n]];
    layers[0][a] = (f64::INFINITY, usize::MAX);
    for _ in 0..hops {
        let last = layers.last().unwrap();
        let mut next = last.clone();
        for u in 0..n {
            if last[u].0 == f64::NEG_INFINITY {
                continue;
            }
            for &(v, e) in &adj[u] {
                let q = last[u].0.min(e);
                if q > next[v].0 {
                    next[v] = (q, u);
                }
            }
        }
        layers.push(next);
    }
    let mut h = hops;
    if layers[h][b].0 == f64::NEG_INFINITY {
        return None;
    }
    let best = layers[h][b].0;
    let mut path = vec![b];
    let mut v = b;
    while v != a {
        // an unchanged entry was inherited from the previous layer
        while h > 0 && layers[h - 1][v] == layers[h][v] {
            h -= 1;
        }
        v = layers[h][v].1;
        h -= 1;
        path.push(v);
    }
    path.reverse();
    Some((best, path))
}

fn build_chains<T: Real>(cover: &mut BomanCover<T>, domain: &JohnDomain<T>, rho: &DiscreteMeasure<T>) -> Result<()> {
    let members = cover.members(rho);
    let adj = overlap_graph(&members, &rho.weights);
    let quality = |a: usize, b: usize| adj[a].iter().find(|e| e.0 == b).map_or(0.0, |e| e.1);
    let step = T::lit(cover.params.chain_step);
    let shrink = T::lit(cover.params.shrink);
    let nb = cover.balls.len();
    let floor = delta_floor(domain, rho.weights.iter().filter(|w| **w > T::zero()).count(), cover.params.resolution);
    let mut chains = Vec::with_capacity(nb);
    let mut uncovered = 0usize;

    for q in 0..nb {
        let x = cover.balls[q].center.clone();
        // Walk the reversed curve from x₀ to x.
        let mut raw = vec![cover.central];
        let mut s = T::one();
        let mut cur = cover.central;
        loop {
            let y = domain.curve_point(&x, s)?;
            let dy = domain.boundary_dist(&y).max(floor).min(cover.r_cap);
            if let Some(b) = pick_ball(cover, &y.coords, dy, shrink, cur, quality) {
                if b != cur {
                    raw.push(b);
                    cur = b;
                }
            } else {
                uncovered += 1;
            }
            if s == T::zero() {
                break;
            }
            let speed = domain.curve_speed(&x, s);
            if !(speed > T::zero()) {
                break;
            }
            s = (s - dy / step / speed).max(T::zero());
        }
        raw.push(q);
        raw.dedup();
        // Bridge weak steps through the overlap graph.
        let mut chain = vec![raw[0]];
        for w in raw.windows(2) {
            let (a, b) = (w[0], w[1]);
            let direct = quality(a, b);
            match widest_path_hops(&adj, a, b, BRIDGE_HOPS) {
                Some((bq, path)) if bq > direct => chain.extend_from_slice(&path[1..]),
                _ if direct > 0.0 => chain.push(b),
                _ => match widest_path(&adj, a, b) {
                    Some((_, path)) => chain.extend_from_slice(&path[1..]),
                    None => chain.push(b),
                },
            }
        }
        chains.push(erase_loops(&chain));
    }
    cover.chains = chains;
    cover.uncovered_waypoints = uncovered;
    Ok(())
}

/// Ball for a waypoint y with scale δ(y): a same-class ball whose shrunken
/// copy meets B(y, δ/shrink), else the containing ball of nearest class.
fn pick_ball<T: Real>(
    cover: &BomanCover<T>,
    y: &[T],
    dy: T,
    shrink: T,
    cur: usize,
    quality: impl Fn(usize, usize) -> f64,
) -> Option<usize> {
    let k = dyadic_class(dy);
    let dil = T::lit(cover.params.dilation);
    let keep = |b: usize| {
        let ball = &cover.balls[b];
        ball.class == k && cover.spec.dist_raw(y, &ball.center.coords) < dy / shrink + ball.radius / dil
    };
    if keep(cur) {
        return Some(cur);
    }
    // Among admissible same-class balls, the best overlap with the current one.
    let mut best: Option<(f64, usize)> = None;
    for (b, ball) in cover.balls.iter().enumerate() {
        if ball.class != k {
            continue;
        }
        let d = cover.spec.dist_raw(y, &ball.center.coords);
        let q = quality(cur, b);
        if d < dy / shrink + ball.radius / dil && best.is_none_or(|(bq, _)| q > bq) {
            best = Some((q, b));
        }
    }
    if let Some((_, b)) = best {
        return Some(b);
    }
    let mut best: Option<((i32, bool), usize)> = None;
    for (b, ball) in cover.balls.iter().enumerate() {
        let d = cover.spec.dist_raw(y, &ball.center.coords);
        if d >= ball.radius {
            continue;
        }
        let key = ((ball.class - k).abs(), d + dy / shrink > ball.radius);
        if best.is_none_or(|(bk, _)| key < bk) {
            best = Some((key, b));
        }
    }
    best.map(|(_, b)| b)
}

/// Keeps the path simple by cutting out every revisited stretch.
fn erase_loops(path: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(path.len());
    for &p in path {
        if let Some(pos) = out.iter().position(|&q| q == p) {
            out.truncate(pos + 1);
        } else {
            out.push(p);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoverCheck {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub pass: bool,
}

pub fn verify_cover<T: Real>(cover: &BomanCover<T>, rho: &DiscreteMeasure<T>, test_points: &[Point<T>]) -> Result<CoverCheck> {
    if cover.chains.len() != cover.balls.len() {
        return Err(Error::InvalidInput("cover has no chains".into()));
    }
    let two = T::lit(2.0);
    let a = test_points
        .iter()
        .map(|x| (0..cover.balls.len()).filter(|&q| cover.ball_contains(q, &x.coords, two)).count())
        .max()
        .unwrap_or(0) as f64;
    let mut b = 1.0f64;
    for (q, chain) in cover.chains.iter().enumerate() {
        let bq = &cover.balls[q];
        for &j in &chain[..chain.len().saturating_sub(1)] {
            let bj = &cover.balls[j];
            let need = (cover.spec.dist_raw(&bq.center.coords, &bj.center.coords) + bq.radius) / bj.radius;
            b = b.max(need.to_f64_lossy());
        }
    }
    let members = cover.members(rho);
    let mass: Vec<T> = members.iter().map(|m| compensated_sum(m.iter().map(|&i| rho.weights[i]))).collect();
    let mut c = 1.0f64;
    for chain in &cover.chains {
        for w in chain.windows(2) {
            let inter = sorted_intersection_mass(&members[w[0]], &members[w[1]], &rho.weights);
            let top = mass[w[0]].max(mass[w[1]]);
            let r = if inter > T::zero() { (top / inter).to_f64_lossy() } else { f64::INFINITY };
            c = c.max(r);
        }
    }
    let pass = a.is_finite() && b.is_finite() && c.is_finite();
    Ok(CoverCheck { a, b, c, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gluing {
    pub lhs: f64,
    pub rhs: f64,
    pub kappa_hat: f64,
}

/// Var_ρ(f) against Σ_Q ρ(Q)·Var_{ρ̃_Q}(f).
pub fn gluing_check<T: Real>(cover: &BomanCover<T>, rho: &DiscreteMeasure<T>, f: &[T]) -> Result<Gluing> {
    if f.len() != rho.len() {
        return Err(Error::InvalidInput("f must have one value per support point".into()));
    }
    let lhs = weighted_variance(f, &rho.weights)?;
    let mut parts = Vec::new();
    for m in cover.members(rho) {
        if m.is_empty() {
            continue;
        }
        let w: Vec<T> = m.iter().map(|&i| rho.weights[i]).collect();
        let v: Vec<T> = m.iter().map(|&i| f[i]).collect();
        parts.push(compensated_sum(w.iter().copied()) * weighted_variance(&v, &w)?);
    }
    let rhs = compensated_sum(parts);
    let (lhs, rhs) = (lhs.to_f64_lossy(), rhs.to_f64_lossy());
    let kappa_hat = if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Ok(Gluing { lhs, rhs, kappa_hat })
}
