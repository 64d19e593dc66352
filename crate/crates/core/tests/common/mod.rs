//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;

/// Exact W₁ for integer masses by exhaustive matching of unit atoms.
///
/// `a[i]` and `b[j]` count unit atoms (equal totals). An integral transport
/// problem has an integral optimal plan, so the optimum is the cheapest
/// bijection between the unit atoms; the subset DP below visits every one.
pub fn brute_force_w1(a: &[usize], b: &[usize], dist: &dyn Fn(usize, usize) -> f64) -> f64 {
    let rows: Vec<usize> = a.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k)).collect();
    let cols: Vec<usize> = b.iter().enumerate().flat_map(|(j, &k)| std::iter::repeat_n(j, k)).collect();
    assert_eq!(rows.len(), cols.len(), "unequal totals");
    let k = rows.len();
    assert!(k <= 20, "too many unit atoms");
    let mut best = vec![f64::INFINITY; 1 << k];
    best[0] = 0.0;
    for mask in 0usize..(1 << k) {
        let cur = best[mask];
        if !cur.is_finite() {
            continue;
        }
        let placed = mask.count_ones() as usize;
        if placed == k {
            continue;
        }
        let r = rows[placed];
        for (c, &col) in cols.iter().enumerate() {
            if mask & (1 << c) == 0 {
                let next = mask | (1 << c);
                let v = cur + dist(r, col);
                if v < best[next] {
                    best[next] = v;
                }
            }
        }
    }
    best[(1 << k) - 1] / k as f64
}

/// Random composition of `total` into `parts` positive integers.
pub fn composition<R: Rng>(rng: &mut R, total: usize, parts: usize) -> Vec<usize> {
    assert!(parts >= 1 && parts <= total);
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, total - 1, parts - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain([total]) {
        out.push(c - prev);
        prev = c;
    }
    out
}

/// Piecewise-linear convex function on `grid`: increasing slopes in
/// [−max_slope, max_slope] switching at random breakpoints.
pub fn convex_pl<R: Rng>(rng: &mut R, grid: &[f64], pieces: usize, max_slope: f64) -> Vec<f64> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let mut slopes: Vec<f64> = (0..pieces).map(|_| rng.random_range(-max_slope..=max_slope)).collect();
    slopes.sort_by(f64::total_cmp);
    let mut breaks: Vec<f64> = (1..pieces).map(|_| rng.random_range(lo..hi)).collect();
    breaks.sort_by(f64::total_cmp);
    let offset = rng.random_range(-1.0..1.0);
    grid.iter()
        .map(|&s| {
            // integral of the slope step function from lo to s
            let mut acc = offset;
            let mut left = lo;
            for (k, &m) in slopes.iter().enumerate() {
                let right = if k < breaks.len() { breaks[k] } else { hi };
                if s <= left {
                    break;
                }
                acc += m * (s.min(right) - left);
                left = right;
            }
            acc
        })
        .collect()
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}
