use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde_json::json;

use otstab::boman::CoverParams;
use otstab::crofton::{estimate_crossing_integral, write_crofton_csv};
use otstab::entropic::{geometric_schedule, SolverConfig};
use otstab::lab::checks::{concavity_families, concavity_suite, derivative_suite};
use otstab::lab::cover::cover_run;
use otstab::lab::sharpness::{closed_form_report, sharpness_instance, sharpness_numeric, NumericConfig};
use otstab::lab::stability::{stability_batch, StabilityConfig};
use otstab::lab::{write_json, write_table, RunConfig, RunManifest};
use otstab::measure::read_measure_csv;
use otstab::transport::{potential_from_target, write_potential_csv};
use otstab::ManifoldSpec64;

#[derive(Parser)]
#[command(name = "otstab", version, about = "Optimal transport stability experiments")]
struct Cli {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV tables, JSON reports and the manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One transport problem between two measure files.
    Solve {
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        rho: Option<PathBuf>,
        #[arg(long)]
        mu: Option<PathBuf>,
        /// Comma list of ε values, or `start:end:ratio`.
        #[arg(long)]
        eps_schedule: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Closed-form (and optionally numeric) sharpness family.
    Sharpness {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        eps_list: Option<String>,
        #[arg(long)]
        numeric: bool,
    },
    /// Batch of shifted bump targets.
    Stability {
        #[arg(long)]
        spec: Option<String>,
        /// Domain spec string, e.g. `cap:2:0.6` or `ball:2:1`.
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Boman chain cover on a euclidean domain.
    Boman {
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte-Carlo crossing counts.
    Crofton {
        #[arg(long)]
        domain: Option<String>,
        /// Comma list of horizons.
        #[arg(long)]
        horizon: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Finite-difference and strong-concavity suites.
    DerivativeChecks {
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Effective settings: flag, else config entry, else default. Every value
/// used ends up in the config that is hashed into the manifest.
struct Settings {
    cfg: RunConfig,
}

impl Settings {
    fn pick<V: FromStr + ToString>(&mut self, key: &str, flag: Option<V>, default: V) -> anyhow::Result<V> {
        let v = match flag {
            Some(v) => v,
            None => self.cfg.get(key, default)?,
        };
        self.cfg.set(key, v.to_string());
        Ok(v)
    }

    fn require<V: FromStr + ToString>(&mut self, key: &str, flag: Option<V>) -> anyhow::Result<V> {
        if flag.is_none() && self.cfg.get_str(key).is_none() {
            bail!("missing --{} (or `{key}` in the config file)", key.replace('_', "-"));
        }
        let v = match flag {
            Some(v) => v,
            None => self.cfg.get_str(key).unwrap().parse().map_err(|_| anyhow::anyhow!("bad value for {key}"))?,
        };
        self.cfg.set(key, v.to_string());
        Ok(v)
    }
}

fn floats(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',').map(|x| x.trim().parse::<f64>().with_context(|| format!("not a number: {x:?}"))).collect()
}

fn schedule(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v = floats(&parts.join(","))?;
        return Ok(geometric_schedule(v[0], v[1], v[2])?);
    }
    floats(s)
}

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn finish(out: &Path, s: &Settings, seed: u64) -> anyhow::Result<()> {
    write_json(&RunManifest::new(&s.cfg, seed), create(out, "manifest.json")?)?;
    fs::write(out.join("config.txt"), s.cfg.canonical())?;
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    let mut s = Settings { cfg };
    let out = cli.out.as_path();
    fs::create_dir_all(out)?;

    let seed = match cli.cmd {
        Cmd::Solve { spec, rho, mu, eps_schedule, tol } => {
            let spec: ManifoldSpec64 = s.require::<String>("spec", spec)?.parse()?;
            let rho_path: PathBuf = s.require("rho", rho.map(|p| p.display().to_string()))?.into();
            let mu_path: PathBuf = s.require("mu", mu.map(|p| p.display().to_string()))?.into();
            let sched = schedule(&s.pick("eps_schedule", eps_schedule, "1:0.001:0.5".to_string())?)?;
            let tol = s.pick("tol", tol, 1e-6)?;
            let rho = read_measure_csv(&spec, File::open(&rho_path).with_context(|| rho_path.display().to_string())?)?;
            let mu = read_measure_csv(&spec, File::open(&mu_path).with_context(|| mu_path.display().to_string())?)?;
            let sol = potential_from_target(&rho, &mu, &sched, &SolverConfig::with_tol(tol))?;
            write_potential_csv(&sol.potential, &sol.assignment, create(out, "potential.csv")?)?;
            let report = json!({
                "levels": sol.solver.levels,
                "final": sol.solver.report(),
                "pushforward_residual": sol.pushforward_residual,
            });
            write_json(&report, create(out, "solve.json")?)?;
            println!("solved {} x {}: residual {:e}", rho.len(), mu.len(), sol.pushforward_residual);
            0
        }
        Cmd::Sharpness { d, eps_list, numeric } => {
            let d = s.pick("d", d, 2)?;
            let eps = floats(&s.pick("eps_list", eps_list, "0.1,0.2,0.3,0.4,0.5".to_string())?)?;
            let numeric = s.pick("numeric", numeric.then_some(true), false)?;
            let inst = sharpness_instance(d, &eps)?;
            let report = closed_form_report(&inst)?;
            let rows: Vec<Vec<f64>> =
                inst.records.iter().map(|r| vec![r.eps, r.mean_diff, r.second_moment, r.variance, r.w1]).collect();
            write_table(&["eps", "mean_diff", "second_moment", "variance", "w1"], &rows, create(out, "sharpness.csv")?)?;
            println!("closed form d={d}: variance slope {:.6}, alpha {:.6}", report.slope, report.slope / 2.0);
            let mut doc = json!({ "closed_form": report });
            if numeric {
                if d != 2 {
                    bail!("the numeric pipeline runs at d = 2");
                }
                let defaults = NumericConfig::default();
                let cfg = NumericConfig {
                    n_rho: s.pick("n_rho", None, defaults.n_rho)?,
                    grid_m: s.pick("grid_m", None, defaults.grid_m)?,
                    eps_final: s.pick("eps_final", None, defaults.eps_final)?,
                    ..defaults
                };
                let num = sharpness_numeric(&eps, &cfg)?;
                let rows: Vec<Vec<f64>> = num.rows.iter().map(|r| vec![r.0, r.1, r.2, r.3]).collect();
                write_table(&["eps", "variance", "closed_form_variance", "w1"], &rows, create(out, "sharpness_numeric.csv")?)?;
                println!("numeric: variance slope {:.4}, alpha {:.4}", num.report.slope, num.report.slope / 2.0);
                doc["numeric"] = serde_json::to_value(&num)?;
            }
            write_json(&doc, create(out, "sharpness.json")?)?;
            0
        }
        Cmd::Stability { spec, domain, family, pairs, seed } => {
            let base: ManifoldSpec64 = s.pick("spec", spec, "sphere:2".to_string())?.parse()?;
            let dom: ManifoldSpec64 = s.pick("domain", domain, "cap:2:0.6".to_string())?.parse()?;
            if dom.ambient() != base.ambient() {
                bail!("domain {dom} does not live on {base}");
            }
            let family = s.pick("family", family, "bump".to_string())?;
            if family != "bump" {
                bail!("unknown target family {family:?} (available: bump)");
            }
            let d = StabilityConfig::default();
            let cfg = StabilityConfig {
                n_pairs: s.pick("pairs", pairs, d.n_pairs)?,
                seed: s.pick("seed", seed, d.seed)?,
                n_rho: s.pick("n_rho", None, d.n_rho)?,
                grid_m: s.pick("grid_m", None, d.grid_m)?,
                shift_min: s.pick("shift_min", None, d.shift_min)?,
                shift_max: s.pick("shift_max", None, d.shift_max)?,
                bump_width: s.pick("bump_width", None, d.bump_width)?,
                ..d
            };
            let batch = stability_batch(&dom, &cfg)?;
            let rows: Vec<Vec<f64>> = batch.rows.iter().map(|r| vec![r.0, r.1, r.2, r.3]).collect();
            write_table(&["shift", "w1", "potential_variance", "map_discrepancy"], &rows, create(out, "stability.csv")?)?;
            write_json(&batch, create(out, "stability.json")?)?;
            for (name, r) in [("potentials", &batch.potentials), ("maps", &batch.maps)] {
                println!(
                    "{name}: slope {:.4}, r2 {:.4}, max_ratio {:.4e}, decade growth {:.3}",
                    r.slope,
                    r.r_squared,
                    r.max_ratio,
                    r.max_decade_growth()
                );
            }
            cfg.seed
        }
        Cmd::Boman { domain, samples, radius, seed } => {
            let spec: ManifoldSpec64 = s.pick("domain", domain, "ball:2:1".to_string())?.parse()?;
            let samples = s.pick("samples", samples, 500)?;
            let radius = s.pick("radius", radius, 0.25)?;
            let seed = s.pick("seed", seed, 1)?;
            let d = CoverParams::desk();
            let params = CoverParams {
                shrink: s.pick("shrink", None, d.shrink)?,
                dilation: s.pick("dilation", None, d.dilation)?,
                chain_step: s.pick("chain_step", None, d.chain_step)?,
                resolution: s.pick("resolution", None, d.resolution)?,
            };
            let functions = s.pick("functions", None, 100)?;
            let run = cover_run(&spec, samples, radius, params, functions, seed)?;
            if let Some(cover) = &run.cover {
                write_json(&cover.to_json(), create(out, "cover.json")?)?;
            }
            write_json(&run, create(out, "boman.json")?)?;
            println!(
                "{} balls: A {} B {:.4} C {:.4} ({}), max kappa {:.4}",
                run.balls,
                run.check.a,
                run.check.b,
                run.check.c,
                if run.check.pass { "pass" } else { "fail" },
                run.kappa_max
            );
            seed
        }
        Cmd::Crofton { domain, horizon, samples, seed } => {
            let spec: ManifoldSpec64 = s.pick("domain", domain, "ball:2:1".to_string())?.parse()?;
            let horizons = floats(&s.pick("horizon", horizon, "0.5,1".to_string())?)?;
            let n = s.pick("samples", samples, 100_000)?;
            let seed = s.pick("seed", seed, 1)?;
            let rows = horizons
                .iter()
                .map(|&t| estimate_crossing_integral(&spec, t, n, seed))
                .collect::<otstab::Result<Vec<_>>>()?;
            write_crofton_csv(&rows, create(out, "crofton.csv")?)?;
            for r in &rows {
                println!("T {}: integral {:.5} +- {:.5}", r.horizon, r.unnormalized_integral, r.unnormalized_std_error);
            }
            seed
        }
        Cmd::DerivativeChecks { seed } => {
            let seed = s.pick("seed", seed, 1)?;
            let fd = derivative_suite(20, [0.05, 0.5], seed)?;
            let worst = fd.iter().map(|c| c.max_rel_error()).fold(0.0, f64::max);
            let mut conc = Vec::new();
            for spec in concavity_families()? {
                conc.extend(concavity_suite(&spec, 10, 50, 1e-8, seed)?);
            }
            let violations: usize = conc.iter().map(|c| c.violations).sum();
            write_json(&json!({ "finite_differences": fd, "strong_concavity": conc }), create(out, "derivative_checks.json")?)?;
            println!("finite differences: {} instances, worst relative error {worst:.3e}", fd.len());
            println!("strong concavity: {} instances, {violations} violations", conc.len());
            seed
        }
    };
    finish(out, &s, seed)
}
