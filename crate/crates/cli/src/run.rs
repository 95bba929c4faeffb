use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use rayon::prelude::*;
use serde::Serialize;

use wavetrain::adjoint::{effective_matrix, train_medium};
use wavetrain::chip::{chip_effective_matrix, train_chip};
use wavetrain::gradcheck::{chip_gradcheck, chip_probe, medium_gradcheck, medium_probe};
use wavetrain::helmholtz::SolverOptions;
use wavetrain::io::{fmt_f64, write_matrix_csv, write_nrmse_csv, write_solver_csv, write_table};
use wavetrain::{MediumMap, RngSeed};

use crate::config::RunConfig;

/// A gradient check that ran to completion but missed its tolerance.
#[derive(Debug, thiserror::Error)]
#[error("gradient check failed: max relative error {max_rel_error:.3e} exceeds {tolerance:.1e}")]
pub struct GradcheckFailed {
    pub max_rel_error: f64,
    pub tolerance: f64,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    seed: u64,
    directory: String,
    final_nrmse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    reeval_nrmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta0: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'static str,
    seed: u64,
    config_path: String,
    config: &'a RunConfig,
    started_at: String,
    finished_at: String,
    outputs: Vec<String>,
    runs: Vec<RunSummary>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn seeds(cfg: &RunConfig) -> Vec<u64> {
    (0..cfg.replicates as u64).map(|r| cfg.seed.wrapping_add(r)).collect()
}

fn run_dir(out: &Path, cfg: &RunConfig, seed: u64) -> Result<PathBuf> {
    let dir = if cfg.replicates == 1 {
        out.to_path_buf()
    } else {
        out.join(format!("seed_{seed}"))
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

/// Runs `job` once per replicate seed on `jobs` threads; results come back in
/// seed order whatever the scheduling.
fn replicate<T: Send>(jobs: usize, seeds: &[u64], job: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    pool.install(|| seeds.par_iter().map(|&s| job(s)).collect())
}

fn write_manifest(out: &Path, command: &str, cfg: &RunConfig, config_path: &Path, started_at: String, runs: Vec<(RunSummary, Vec<PathBuf>)>) -> Result<()> {
    let manifest_path = out.join("manifest.json");
    let mut outputs: Vec<String> = runs
        .iter()
        .flat_map(|(_, files)| files.iter().map(|p| p.display().to_string()))
        .collect();
    outputs.push(manifest_path.display().to_string());
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config_path: config_path.display().to_string(),
        config: cfg,
        started_at,
        finished_at: now(),
        outputs,
        runs: runs.into_iter().map(|(s, _)| s).collect(),
    };
    serde_json::to_writer_pretty(create(&manifest_path)?, &manifest)?;
    Ok(())
}

fn write_medium_map(m: &MediumMap, path: &Path) -> Result<()> {
    let g = m.geometry();
    let rows: Vec<Vec<String>> = g
        .cells()
        .enumerate()
        .map(|(idx, (i, j))| {
            let (x, y) = g.position(i, j);
            vec![
                i.to_string(),
                j.to_string(),
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(m.k_real()[idx]),
                fmt_f64(m.k_imag()[idx]),
                u8::from(m.trainable_mask()[idx]).to_string(),
            ]
        })
        .collect();
    write_table(&["i", "j", "x", "y", "k_real", "k_imag", "trainable"], &rows, create(path)?)?;
    Ok(())
}

pub fn train_medium_cmd(cfg: &RunConfig, config_path: &Path, out: &Path, jobs: usize) -> Result<()> {
    let started_at = now();
    // fail on a bad section before any directory is touched
    cfg.medium_experiment(cfg.seed)?;
    let runs = replicate(jobs, &seeds(cfg), |seed| {
        let exp = cfg.medium_experiment(seed)?;
        let dir = run_dir(out, cfg, seed)?;
        let outcome = train_medium(&exp)?;
        let w = effective_matrix(&outcome.medium, &outcome.emitters, &outcome.receivers, &exp.solver)?;
        let files = [
            "nrmse.csv",
            "solver.csv",
            "medium_final.csv",
            "w_effective.csv",
            "target.csv",
        ]
        .map(|f| dir.join(f));
        write_nrmse_csv(&outcome.record, create(&files[0])?)?;
        write_solver_csv(&outcome.record, create(&files[1])?)?;
        write_medium_map(&outcome.medium, &files[2])?;
        write_matrix_csv(&w, create(&files[3])?)?;
        write_matrix_csv(&outcome.target, create(&files[4])?)?;
        let final_nrmse = outcome.record.trailing_mean(1);
        println!(
            "[train-medium] seed {seed}: {} iterations, final NRMSE {final_nrmse:.4e}, trailing-20 mean {:.4e}",
            outcome.record.len(),
            outcome.record.trailing_mean(20)
        );
        let summary = RunSummary {
            seed,
            directory: dir.display().to_string(),
            final_nrmse,
            reeval_nrmse: None,
            eta0: Some(outcome.eta0),
        };
        Ok((summary, files.to_vec()))
    })?;
    write_manifest(out, "train-medium", cfg, config_path, started_at, runs)
}

pub fn train_chip_cmd(cfg: &RunConfig, config_path: &Path, out: &Path, jobs: usize) -> Result<()> {
    let started_at = now();
    cfg.chip_experiment(cfg.seed)?;
    let runs = replicate(jobs, &seeds(cfg), |seed| {
        let exp = cfg.chip_experiment(seed)?;
        let dir = run_dir(out, cfg, seed)?;
        let outcome = train_chip(&exp)?;
        let files = ["nrmse.csv", "phases_final.csv", "chip_matrix.csv", "target.csv", "summary.csv"].map(|f| dir.join(f));
        write_nrmse_csv(&outcome.record, create(&files[0])?)?;
        let phase_rows: Vec<Vec<String>> = outcome
            .chip
            .phases()
            .iter()
            .enumerate()
            .flat_map(|(l, layer)| {
                layer
                    .iter()
                    .enumerate()
                    .map(move |(c, p)| vec![l.to_string(), c.to_string(), fmt_f64(*p)])
            })
            .collect();
        write_table(&["layer", "channel", "phase"], &phase_rows, create(&files[1])?)?;
        write_matrix_csv(&chip_effective_matrix(&outcome.chip)?, create(&files[2])?)?;
        write_matrix_csv(&outcome.target, create(&files[3])?)?;
        let reeval = outcome.reeval_nrmse.map(fmt_f64).unwrap_or_default();
        write_table(
            &["seed", "final_nrmse", "reeval_nrmse"],
            &[vec![seed.to_string(), fmt_f64(outcome.final_nrmse), reeval]],
            create(&files[4])?,
        )?;
        match outcome.reeval_nrmse {
            Some(r) => println!(
                "[train-chip] seed {seed}: final NRMSE {:.4e}, without uneven loss {r:.4e}",
                outcome.final_nrmse
            ),
            None => println!("[train-chip] seed {seed}: final NRMSE {:.4e}", outcome.final_nrmse),
        }
        let summary = RunSummary {
            seed,
            directory: dir.display().to_string(),
            final_nrmse: outcome.final_nrmse,
            reeval_nrmse: outcome.reeval_nrmse,
            eta0: None,
        };
        Ok((summary, files.to_vec()))
    })?;
    write_manifest(out, "train-chip", cfg, config_path, started_at, runs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GradcheckTarget {
    Medium,
    Chip,
}

pub fn gradcheck_cmd(target: GradcheckTarget, cfg: &RunConfig) -> Result<()> {
    let gc = &cfg.gradcheck;
    let (max_rel, tolerance) = match target {
        GradcheckTarget::Medium => {
            let probe = medium_probe(RngSeed(cfg.seed))?;
            let r = medium_gradcheck(
                &probe,
                &SolverOptions::with_tolerance(gc.medium_solver_tolerance),
                gc.medium_rel_step,
                gc.corrupt_sign,
            )?;
            println!(
                "[gradcheck] medium: {} cells, max relative error {:.3e} at cell {:?}",
                r.cells, r.max_rel_error, r.worst_cell
            );
            (r.max_rel_error, gc.medium_pass)
        }
        GradcheckTarget::Chip => {
            let chip = chip_probe(gc.chip_channels, gc.chip_layers, RngSeed(cfg.seed))?;
            let r = chip_gradcheck(&chip, gc.chip_samples, gc.chip_step, RngSeed(cfg.seed), gc.corrupt_sign)?;
            println!(
                "[gradcheck] chip {}x{}: scale {:.9}, max relative error {:.3e}, min cosine {:.9}",
                gc.chip_channels, gc.chip_layers, r.scale, r.max_rel_error, r.min_cosine
            );
            (r.max_rel_error, gc.chip_pass)
        }
    };
    if max_rel <= tolerance {
        println!("[gradcheck] PASS (tolerance {tolerance:.1e})");
        Ok(())
    } else {
        println!("[gradcheck] FAIL (tolerance {tolerance:.1e})");
        Err(GradcheckFailed {
            max_rel_error: max_rel,
            tolerance,
        }
        .into())
    }
}
