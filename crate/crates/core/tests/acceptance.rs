//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use otstab::boman::CoverParams;
use otstab::crofton::{estimate_crossing_integral, reverse_poincare_1d};
use otstab::lab::checks::{concavity_families, concavity_suite, derivative_suite};
use otstab::lab::cover::{cover_run, within_relative};
use otstab::lab::fit_loglog;
use otstab::lab::sharpness::{alpha, closed_form_report, sharpness_closed_form, sharpness_instance, sharpness_numeric, NumericConfig};
use otstab::lab::stability::{stability_batch, StabilityConfig};
use otstab::manifold::ManifoldSpec;
use otstab::measure::{wasserstein1, DiscreteMeasure};

type Outcome = (bool, String);

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

fn derivative_identities() -> Outcome {
    let checks = derivative_suite(20, [0.05, 0.5], 11).expect("derivative suite");
    let sizes_ok = checks.iter().all(|c| c.n <= 8 && c.m <= 8);
    let worst = checks.iter().map(|c| c.max_rel_error()).fold(0.0, f64::max);
    (sizes_ok && worst <= 1e-5, format!("20 instances, worst relative error {worst:.2e}"))
}

fn strong_concavity() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for spec in concavity_families().expect("families") {
        let runs = concavity_suite(&spec, 10, 50, 1e-8, 5).expect("concavity suite");
        let bad: usize = runs.iter().map(|r| r.violations).sum();
        let comparable = runs.iter().all(|r| r.comparable);
        let margin = runs.iter().map(|r| r.worst_margin).fold(f64::NEG_INFINITY, f64::max);
        ok &= bad == 0 && comparable && runs.len() == 10;
        notes.push(format!("{spec}: {bad} violations, worst margin {margin:.2e}"));
    }
    (ok, notes.join("; "))
}

fn sharpness() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let eps = geometric(1e-3, 1e-1, 9);
    for d in [2, 3, 10] {
        let report = closed_form_report(&sharpness_instance(d, &eps).unwrap()).unwrap();
        let a = report.slope / 2.0;
        ok &= (a - alpha(d)).abs() <= 1e-3;
        notes.push(format!("d={d} alpha {a:.5} (exact {:.5})", alpha(d)));
    }
    let eps_num = [0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5];
    let cfg = NumericConfig { n_rho: 2000, grid_m: 800, eps_final: 1e-3, ..NumericConfig::default() };
    match sharpness_numeric(&eps_num, &cfg) {
        Ok(num) => {
            let a = num.report.slope / 2.0;
            ok &= (a - alpha(2)).abs() <= 0.15 && num.report.max_ratio.is_finite();
            let mut worst: f64 = 0.0;
            for &(e, var, _, _) in &num.rows {
                let exact = sharpness_closed_form(2, e).unwrap().variance;
                worst = worst.max((var - exact).abs() / exact);
            }
            ok &= worst <= 0.10;
            notes.push(format!("numeric alpha {a:.4}, worst variance error {:.1}%", 100.0 * worst));
        }
        Err(e) => {
            ok = false;
            notes.push(format!("numeric pipeline failed: {e}"));
        }
    }
    (ok, notes.join("; "))
}

fn stability() -> (Outcome, Outcome) {
    let spec: ManifoldSpec<f64> = "cap:2:0.6".parse().unwrap();
    let cfg = StabilityConfig { n_pairs: 20, ..StabilityConfig::default() };
    let batch = match stability_batch(&spec, &cfg) {
        Ok(b) => b,
        Err(e) => {
            let msg = format!("batch failed: {e}");
            return ((false, msg.clone()), (false, msg));
        }
    };
    let w1: Vec<f64> = batch.rows.iter().map(|r| r.1).collect();
    let (lo, hi) = w1.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &w| (a.min(w), b.max(w)));
    let span_ok = batch.rows.len() == 20 && lo >= 1e-3 && hi <= 1e-1 && hi / lo >= 50.0;
    let p = &batch.potentials;
    let pot = (
        span_ok && p.slope >= 0.95 && p.max_decade_growth() < 10.0,
        format!(
            "W1 in [{lo:.3e}, {hi:.3e}], slope {:.4}, max_ratio {:.3e}, decade growth {:.3}",
            p.slope,
            p.max_ratio,
            p.max_decade_growth()
        ),
    );
    let m = &batch.maps;
    let map = (
        span_ok && m.max_ratio.is_finite() && m.max_decade_growth() < 10.0,
        format!("slope {:.4}, max_ratio {:.3e}, decade growth {:.3}", m.slope, m.max_ratio, m.max_decade_growth()),
    );
    (pot, map)
}

fn boman() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for dom in ["ball:2:1", "annulus:2:0.5:1:270"] {
        let spec: ManifoldSpec<f64> = dom.parse().unwrap();
        let runs: Vec<_> = [1u64, 2]
            .iter()
            .map(|&s| cover_run(&spec, 500, 0.25, CoverParams::desk(), 100, s).expect("cover run"))
            .collect();
        for r in &runs {
            ok &= r.check.pass && r.check.b.is_finite() && r.check.c.is_finite() && r.kappa_max.is_finite();
        }
        let (a, b) = (&runs[0], &runs[1]);
        let stable = within_relative(a.check.a, b.check.a, 0.2)
            && within_relative(a.check.b, b.check.b, 0.2)
            && within_relative(a.check.c, b.check.c, 0.2)
            && within_relative(a.kappa_max, b.kappa_max, 0.2);
        ok &= stable;
        notes.push(format!(
            "{dom}: A {}/{} B {:.2}/{:.2} C {:.2}/{:.2} kappa {:.2}/{:.2}",
            a.check.a, b.check.a, a.check.b, b.check.b, a.check.c, b.check.c, a.kappa_max, b.kappa_max
        ));
    }
    (ok, notes.join("; "))
}

fn crofton() -> Outcome {
    let spec: ManifoldSpec<f64> = "ball:2:1".parse().unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    // flux of the unit-speed flow through a curve of length L in time T:
    // T·L·∫_{S¹}|cos θ| dθ = 4TL, with L = 2π
    for t in [0.5, 1.0] {
        let exact = 4.0 * t * 2.0 * std::f64::consts::PI;
        let est = estimate_crossing_integral(&spec, t, 100_000, 21).expect("crossings");
        let z = (est.unnormalized_integral - exact).abs() / est.unnormalized_std_error;
        ok &= z <= 3.0;
        notes.push(format!("T={t}: {:.4} vs {exact:.4} ({z:.2} se)", est.unnormalized_integral));
    }
    let pairs: Vec<(f64, f64)> = [1_000usize, 10_000, 100_000]
        .iter()
        .map(|&n| (n as f64, estimate_crossing_integral(&spec, 1.0, n, 33).unwrap().std_error))
        .collect();
    let slope = fit_loglog(&pairs).map(|f| f.slope).unwrap_or(f64::NAN);
    ok &= (slope + 0.5).abs() <= 0.1;
    notes.push(format!("se slope {slope:.3}"));
    (ok, notes.join("; "))
}

fn reverse_poincare() -> Outcome {
    let grid = common::uniform_grid(0.0, 1.0, 20_001);
    let u: Vec<f64> = grid.iter().map(|s| s * s).collect();
    let zero = vec![0.0; grid.len()];
    let exact = reverse_poincare_1d(&u, &zero, &grid).unwrap();
    let rhs = 8.0 * 2f64.powf(4.0 / 3.0) * 5f64.powf(-1.0 / 3.0);
    let mut ok = exact.holds && (exact.lhs - 4.0 / 3.0).abs() < 1e-3 && (exact.rhs - rhs).abs() < 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = common::uniform_grid(-1.0, 2.0, 601);
    let mut held = 0;
    for _ in 0..200 {
        let pu = rng.random_range(1..6);
        let pv = rng.random_range(1..6);
        let a = common::convex_pl(&mut rng, &grid, pu, 3.0);
        let b = common::convex_pl(&mut rng, &grid, pv, 3.0);
        if reverse_poincare_1d(&a, &b, &grid).map(|r| r.holds).unwrap_or(false) {
            held += 1;
        }
    }
    ok &= held == 200;
    (ok, format!("s^2 instance lhs {:.4} rhs {:.4}; {held}/200 random pairs hold", exact.lhs, exact.rhs))
}

fn w1_oracle() -> Outcome {
    let specs: Vec<ManifoldSpec<f64>> = ["sphere:2", "torus:2", "ball:2:1"].iter().map(|s| s.parse().unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let units = 14;
    let mut worst: f64 = 0.0;
    for draw in 0..100 {
        let spec = &specs[draw % specs.len()];
        let (na, nb) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let xa = spec.sample_uniform(na, rng.random()).unwrap();
        let xb = spec.sample_uniform(nb, rng.random()).unwrap();
        let ka = common::composition(&mut rng, units, na);
        let kb = common::composition(&mut rng, units, nb);
        let a = DiscreteMeasure::from_samples(spec, xa.clone(), Some(ka.iter().map(|&k| k as f64).collect())).unwrap();
        let b = DiscreteMeasure::from_samples(spec, xb.clone(), Some(kb.iter().map(|&k| k as f64).collect())).unwrap();
        let lp = wasserstein1(&a, &b).unwrap();
        let brute = common::brute_force_w1(&ka, &kb, &|i, j| spec.dist(&xa[i], &xb[j]).unwrap());
        worst = worst.max((lp - brute).abs());
    }
    (worst <= 1e-9, format!("100 draws, worst |LP - brute force| {worst:.2e}"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, (ok, detail): Outcome, secs: f64| {
        if !ok {
            failed += 1;
        }
        println!("{} {n} {name}: {detail} [{secs:.1}s]", if ok { "PASS" } else { "FAIL" });
    };
    let timed = |f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed().as_secs_f64())
    };

    let (o, s) = timed(&derivative_identities);
    report(1, "derivative identities", o, s);
    let (o, s) = timed(&strong_concavity);
    report(2, "strong concavity", o, s);
    let (o, s) = timed(&sharpness);
    report(3, "sharpness family", o, s);
    let t = Instant::now();
    let (pot, map) = stability();
    let secs = t.elapsed().as_secs_f64();
    report(4, "stability envelope", pot, secs);
    report(5, "map stability", map, secs);
    let (o, s) = timed(&boman);
    report(6, "boman conditions", o, s);
    let (o, s) = timed(&crofton);
    report(7, "crofton estimator", o, s);
    let (o, s) = timed(&reverse_poincare);
    report(8, "reverse poincare", o, s);
    let (o, s) = timed(&w1_oracle);
    report(9, "w1 oracle", o, s);

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
