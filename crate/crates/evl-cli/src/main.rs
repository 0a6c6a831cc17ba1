//! `evl`: reproducible experiment driver for the EVL solver library.

mod io_util;
mod spec;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use evl_core::analysis::{
    build_error_levels, chain_mixing_bound, chain_simulate, chain_steady_state, complexity_rkhs,
    complexity_rpbf, dominance_check, estimate_q, ComplexityInputs, DominatingChain, NormChoice,
};
use evl_core::engine::{run_evl, Checkpoint, RunTrace};
use evl_core::env::replacement_oracle;
use evl_core::{substream, ValueFn};

use io_util::{fmt_f64, fmt_opt_f64, sha256_hex, write_atomic};
use spec::{EnvironmentSpec, ExperimentSpec};

#[derive(Parser)]
#[command(name = "evl", version, about = "EVL experiment driver")]
struct Cli {
    /// Worker thread cap; EVL_LAB_THREADS is used when unset.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a spec file, one run per seed.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Added to every seed in the spec's seed list.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// Verify the output manifest immediately after writing.
        #[arg(long, default_value_t = false)]
        verify: bool,
    },
    /// Print sample-complexity calculator outputs as JSON.
    Bounds {
        #[arg(long, value_enum)]
        calculator: CalculatorKind,
        #[arg(long, value_enum, default_value_t = NormArg::L1)]
        norm: NormArg,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        v_max: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        c_rho_mu: f64,
        #[arg(long, default_value_t = 1.0)]
        c_const: f64,
        #[arg(long, default_value_t = 2)]
        n_actions: usize,
        #[arg(long, default_value_t = 1.0)]
        c_k: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
    /// Dominating-chain analytics: steady state, occupancy, mixing bound.
    Chain {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        k_star: usize,
        #[arg(long, default_value_t = 1_000_000)]
        steps: usize,
        #[arg(long, default_value_t = 100_000)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        delta_prime: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical stochastic-dominance check over a run directory's traces.
    Dominance {
        #[arg(long)]
        run_dir: PathBuf,
        /// Residual threshold; defaults to the pooled median residual.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        k_star: usize,
    },
    /// Re-check the content hashes listed in a run directory's manifest.
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CalculatorKind {
    Rpbf,
    Rkhs,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L1,
    L2,
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    format: u32,
    package_version: &'static str,
    spec_sha256: String,
    complete: bool,
    outputs: Vec<ManifestEntry>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.jobs.or_else(|| {
        std::env::var("EVL_LAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized");
        }
    }

    match cli.cmd {
        Cmd::Run { spec, out, seed_offset, verify } => cmd_run(&spec, &out, seed_offset, verify),
        Cmd::Bounds {
            calculator,
            norm,
            epsilon,
            delta,
            v_max,
            gamma,
            c_rho_mu,
            c_const,
            n_actions,
            c_k,
            kappa,
        } => cmd_bounds(
            calculator,
            norm,
            ComplexityInputs {
                epsilon,
                delta,
                v_max,
                gamma,
                c_rho_mu,
                c_const,
                n_actions,
                c_k,
                kappa,
            },
        ),
        Cmd::Chain { q, k_star, steps, replicas, seed, delta_prime, out } => {
            cmd_chain(q, k_star, steps, replicas, seed, delta_prime, &out)
        }
        Cmd::Dominance { run_dir, epsilon, k_star } => cmd_dominance(&run_dir, epsilon, k_star),
        Cmd::Verify { out } => cmd_verify(&out),
    }
}

fn trace_csv(trace: &RunTrace) -> String {
    let mut csv = String::from(
        "iteration,residual_l1,residual_l2,residual_sup,fit_objective,fit_residual,bellman_residual_sup,rel_error\n",
    );
    for r in &trace.records {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.k + 1,
            fmt_f64(r.residual_l1),
            fmt_f64(r.residual_l2),
            fmt_f64(r.residual_sup),
            fmt_f64(r.fit_objective),
            fmt_f64(r.fit_residual),
            fmt_opt_f64(r.bellman_residual_sup),
            fmt_opt_f64(r.rel_error),
        ));
    }
    csv
}

/// Relative sup error of `v` against the oracle on a uniform grid over the
/// first state dimension, skipping near-zero oracle values.
fn relative_sup_error(v: &ValueFn, oracle: &ValueFn, lo: f64, hi: f64, n: usize) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..n {
        let s = [lo + (hi - lo) * i as f64 / (n - 1) as f64];
        let v_star = oracle.evaluate(&s);
        if v_star.abs() < 1e-6 {
            continue;
        }
        worst = worst.max((v.evaluate(&s) - v_star).abs() / v_star.abs());
    }
    worst
}

fn cmd_run(spec_path: &Path, out_dir: &Path, seed_offset: u64, verify: bool) -> ExitCode {
    let spec_bytes = match std::fs::read(spec_path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read spec {}: {e}", spec_path.display());
            return ExitCode::from(2);
        }
    };
    let spec: ExperimentSpec = match serde_json::from_slice(&spec_bytes) {
        Ok(s) => s,
        Err(e) => {
            eprintln!(
                "error: invalid spec {} (line {}, column {}): {e}",
                spec_path.display(),
                e.line(),
                e.column()
            );
            return ExitCode::from(2);
        }
    };
    if let Err(e) = spec.validate() {
        eprintln!("error: invalid spec {}: {e}", spec_path.display());
        return ExitCode::from(2);
    }

    let model = spec.environment.build();
    let oracle = match (&spec.oracle, &spec.environment) {
        (Some(o), EnvironmentSpec::Replacement { params }) => {
            match replacement_oracle(params, o.grid_n, o.tol) {
                Ok(v) => Some(v),
                Err(e) => {
                    eprintln!("error: oracle failed: {e}");
                    return ExitCode::from(1);
                }
            }
        }
        _ => None,
    };
    let eval_grid = spec.evaluation.map(|e| e.eval_grid).unwrap_or(201);
    let (lo, hi) = model.state_bounds[0];

    use rayon::prelude::*;
    let seeds: Vec<u64> = spec.seeds.iter().map(|s| s + seed_offset).collect();
    let results: Vec<(u64, Result<Vec<(String, Vec<u8>)>, String>)> = seeds
        .par_iter()
        .map(|&seed| {
            let config = spec.evl_config(seed, &model);
            let run = run_evl(&model, &config, &ValueFn::zero());
            let files = match run {
                Ok((v, mut trace)) => {
                    if let Some(oracle) = &oracle {
                        for (rec, it) in trace.records.iter_mut().zip(&trace.iterates) {
                            rec.rel_error =
                                Some(relative_sup_error(it, oracle, lo, hi, eval_grid));
                        }
                    }
                    let mut files = vec![
                        (format!("trace_{seed}.csv"), trace_csv(&trace).into_bytes()),
                        (
                            format!("checkpoint_{seed}.json"),
                            checkpoint_bytes(&v, trace.records.len(), seed),
                        ),
                    ];
                    if spec.checkpoint_every > 0 {
                        for (idx, it) in trace.iterates.iter().enumerate() {
                            let k = idx + 1;
                            if k % spec.checkpoint_every == 0 && k < trace.iterates.len() {
                                files.push((
                                    format!("checkpoint_{seed}_iter{k}.json"),
                                    checkpoint_bytes(it, k, seed),
                                ));
                            }
                        }
                    }
                    Ok(files)
                }
                Err(e) => Err(e.to_string()),
            };
            (seed, files)
        })
        .collect();

    let mut entries: Vec<ManifestEntry> = Vec::new();
    let mut complete = true;
    for (seed, result) in results {
        match result {
            Ok(files) => {
                for (name, bytes) in files {
                    if let Err(e) = write_atomic(&out_dir.join(&name), &bytes) {
                        eprintln!("error: writing {name}: {e}");
                        return ExitCode::from(1);
                    }
                    entries.push(ManifestEntry { path: name, sha256: sha256_hex(&bytes) });
                }
            }
            Err(e) => {
                eprintln!("error: seed {seed} failed: {e}");
                complete = false;
            }
        }
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        format: 1,
        package_version: env!("CARGO_PKG_VERSION"),
        spec_sha256: sha256_hex(&spec_bytes),
        complete,
        outputs: entries,
    };
    let manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("serializable manifest");
    if let Err(e) = write_atomic(&out_dir.join("manifest.json"), &manifest_bytes) {
        eprintln!("error: writing manifest: {e}");
        return ExitCode::from(1);
    }
    // keep a copy of the spec next to the outputs for dominance/verify
    if let Err(e) = write_atomic(&out_dir.join("spec.json"), &spec_bytes) {
        eprintln!("error: writing spec copy: {e}");
        return ExitCode::from(1);
    }

    if verify {
        let code = cmd_verify(out_dir);
        if code != ExitCode::SUCCESS {
            return code;
        }
    }
    if complete {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn checkpoint_bytes(v: &ValueFn, iteration: usize, seed: u64) -> Vec<u8> {
    serde_json::to_vec_pretty(&Checkpoint::new(v, iteration, seed)).expect("serializable checkpoint")
}

fn cmd_bounds(calculator: CalculatorKind, norm: NormArg, inputs: ComplexityInputs) -> ExitCode {
    let result = match calculator {
        CalculatorKind::Rpbf => {
            let norm = match norm {
                NormArg::L1 => NormChoice::L1,
                NormArg::L2 => NormChoice::L2,
            };
            complexity_rpbf(&inputs, norm).map(|c| {
                serde_json::json!({
                    "calculator": "rpbf",
                    "norm": match norm { NormChoice::L1 => "l1", NormChoice::L2 => "l2" },
                    "variant": "appendix-derivation",
                    "n": c.n,
                    "m": c.m,
                    "j": c.j,
                    "k_star": c.k_star,
                    "k_min": c.k_min,
                })
            })
        }
        CalculatorKind::Rkhs => complexity_rkhs(&inputs).map(|c| {
            serde_json::json!({
                "calculator": "rkhs",
                "norm": "sup",
                "variant": "theorem-display",
                "n": c.n,
                "m": c.m,
                "k_star": c.k_star,
                "k_min": c.k_min,
            })
        }),
    };
    match result {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_chain(
    q: f64,
    k_star: usize,
    steps: usize,
    replicas: usize,
    seed: u64,
    delta_prime: f64,
    out_dir: &Path,
) -> ExitCode {
    let chain = match DominatingChain::new(q, k_star) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let steady = chain_steady_state(&chain);
    let occ = chain_simulate(&chain, steps, &mut substream(seed, &[0]));
    let tv: f64 = occ
        .frequencies
        .iter()
        .zip(&steady)
        .map(|(f, m)| (f - m).abs())
        .sum::<f64>()
        / 2.0;

    let mixing = chain_mixing_bound(&chain, delta_prime).ok();
    let level_one_estimate = mixing.map(|k| {
        let hits = (0..replicas)
            .filter(|&r| {
                let mut rng = substream(seed, &[1, r as u64]);
                let mut y = k_star;
                for _ in 0..k {
                    y = chain.step(y, &mut rng);
                }
                y == 1
            })
            .count();
        hits as f64 / replicas.max(1) as f64
    });

    let mut csv = String::from("level,count,frequency,steady_state\n");
    for i in 0..k_star {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            i + 1,
            occ.counts[i],
            fmt_f64(occ.frequencies[i]),
            fmt_f64(steady[i]),
        ));
    }
    let report = serde_json::json!({
        "q": q,
        "k_star": k_star,
        "steps": steps,
        "steady_state": steady,
        "occupancy": occ.frequencies,
        "total_variation": tv,
        "delta_prime": delta_prime,
        "mixing_bound": mixing,
        "replicas": replicas,
        "level_one_probability_at_mixing_bound": level_one_estimate,
        "level_one_steady_state": steady[0],
    });
    let json = serde_json::to_vec_pretty(&report).expect("serializable");
    if write_atomic(&out_dir.join("occupancy.csv"), csv.as_bytes()).is_err()
        || write_atomic(&out_dir.join("chain.json"), &json).is_err()
    {
        eprintln!("error: cannot write chain outputs to {}", out_dir.display());
        return ExitCode::from(1);
    }
    println!("{}", String::from_utf8_lossy(&json));
    ExitCode::SUCCESS
}

/// Pull one named float column out of a trace CSV.
fn read_trace_column(path: &Path, column: &str) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| format!("{}: empty", path.display()))?;
    let idx = header
        .split(',')
        .position(|c| c == column)
        .ok_or_else(|| format!("{}: no column {column}", path.display()))?;
    lines
        .map(|line| {
            line.split(',')
                .nth(idx)
                .ok_or_else(|| format!("{}: short row", path.display()))?
                .parse::<f64>()
                .map_err(|e| format!("{}: {e}", path.display()))
        })
        .collect()
}

fn cmd_dominance(run_dir: &Path, epsilon: Option<f64>, k_star: usize) -> ExitCode {
    let mut residuals: Vec<Vec<f64>> = Vec::new();
    let mut paths: Vec<PathBuf> = match std::fs::read_dir(run_dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .map(|n| n.starts_with("trace_") && n.ends_with(".csv"))
                    .unwrap_or(false)
            })
            .collect(),
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", run_dir.display());
            return ExitCode::from(2);
        }
    };
    paths.sort();
    for p in &paths {
        match read_trace_column(p, "residual_sup") {
            Ok(col) => residuals.push(col),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }

    let mut pooled: Vec<f64> = residuals.iter().flatten().copied().collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if pooled.is_empty() {
        eprintln!("error: no trace files in {}", run_dir.display());
        return ExitCode::from(1);
    }
    let epsilon = epsilon.unwrap_or(pooled[pooled.len() / 2]);
    let q_hat = estimate_q(&residuals, epsilon);
    let chain = match DominatingChain::new(q_hat, k_star) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let traj = build_error_levels(&residuals, epsilon, k_star);
    let report = match dominance_check(&traj, &chain) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let mut csv = String::from("k,theta,px,py,stderr,flag\n");
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.k,
            row.theta,
            fmt_f64(row.p_x),
            fmt_f64(row.p_y),
            fmt_f64(row.stderr),
            row.flagged as u8,
        ));
    }
    let summary = serde_json::json!({
        "runs": report.n_runs,
        "horizon": report.horizon,
        "epsilon": epsilon,
        "q_hat": q_hat,
        "k_star": k_star,
        "violations": report.violations,
    });
    let json = serde_json::to_vec_pretty(&summary).expect("serializable");
    if write_atomic(&run_dir.join("dominance.csv"), csv.as_bytes()).is_err()
        || write_atomic(&run_dir.join("dominance.json"), &json).is_err()
    {
        eprintln!("error: cannot write dominance outputs");
        return ExitCode::from(1);
    }
    println!("{}", String::from_utf8_lossy(&json));
    ExitCode::SUCCESS
}

fn cmd_verify(out_dir: &Path) -> ExitCode {
    let manifest_bytes = match std::fs::read(out_dir.join("manifest.json")) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read manifest in {}: {e}", out_dir.display());
            return ExitCode::from(2);
        }
    };
    let manifest: BTreeMap<String, serde_json::Value> =
        match serde_json::from_slice(&manifest_bytes) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error: invalid manifest: {e}");
                return ExitCode::from(2);
            }
        };
    let outputs = manifest
        .get("outputs")
        .and_then(|v| v.as_array())
        .cloned()
        .unwrap_or_default();
    let mut failures = 0;
    for entry in outputs {
        let path = entry.get("path").and_then(|v| v.as_str()).unwrap_or("");
        let expected = entry.get("sha256").and_then(|v| v.as_str()).unwrap_or("");
        match std::fs::read(out_dir.join(path)) {
            Ok(bytes) if sha256_hex(&bytes) == expected => println!("ok {path}"),
            Ok(_) => {
                println!("MISMATCH {path}");
                failures += 1;
            }
            Err(e) => {
                println!("MISSING {path} ({e})");
                failures += 1;
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: {failures} artifact(s) failed verification");
        ExitCode::from(1)
    }
}
