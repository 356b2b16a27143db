//! Subcommand implementations.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::{info, warn};
use ncxadmm::admm::{self, beta_bar};
use ncxadmm::bench::{
    self, f_measure, performance_profile, performance_ratios, run_cell, synth_video, ProfileTable, ResultRow, Scenario,
    SolverChoice, SUPPORT_THRESHOLD,
};
use ncxadmm::io::{load_matrix_auto, load_pgm_frames, save_matrix, write_matrix_csv};
use ncxadmm::palm::solve_palm;
use ncxadmm::{write_trace_csv, BetaPolicy, LinearMap, Mat, Problem, RunReport};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{DataSource, Format, RunConfig, ScenarioKind};
use crate::{CliError, RunArgs};

type CliResult<T> = Result<T, CliError>;

struct Loaded {
    scenario: Scenario,
    has_truth: bool,
}

fn load_config(args: &RunArgs) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        match &mut cfg.problem.data {
            DataSource::Synth(spec) => spec.seed = seed,
            _ => warn!("--seed has no effect on loaded data"),
        }
    }
    if let Some(f) = args.format {
        cfg.output.format = f;
    }
    if args.jobs == Some(0) {
        return Err(CliError::Config("--jobs must be positive".into()));
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serialises");
    s.push('\n');
    s.into_bytes()
}

/// Builds `D`, `S_true` and `A` for the configured data source.
fn load_data(cfg: &RunConfig) -> CliResult<Loaded> {
    let p = &cfg.problem;
    let blur = |h: usize, w: usize| -> CliResult<LinearMap> {
        match (p.scenario, &p.blur) {
            (ScenarioKind::Blurred, Some(b)) => Ok(LinearMap::frame_blur(h, w, b.psf_sigma)?),
            _ => Ok(LinearMap::Identity),
        }
    };
    let truth = |path: &Option<std::path::PathBuf>, shape: (usize, usize)| -> CliResult<(Mat, bool)> {
        match path {
            Some(path) => {
                let t = load_matrix_auto(path)?;
                if t.shape() != shape {
                    return Err(CliError::Config(format!(
                        "truth {} has shape {:?}, data has {:?}",
                        path.display(),
                        t.shape(),
                        shape
                    )));
                }
                Ok((t, true))
            }
            None => Ok((Mat::zeros(shape.0, shape.1), false)),
        }
    };
    let (d, s_true, a_map, has_truth) = match &p.data {
        DataSource::Synth(spec) => {
            let v = synth_video(spec)?;
            let a_map = blur(spec.frame_h, spec.frame_w)?;
            let d = match (&a_map, &p.blur) {
                (LinearMap::Identity, _) | (_, None) => v.d,
                (_, Some(b)) => bench::corrupt_blur(&v.d, &a_map, b.noise_sigma, spec.seed)?,
            };
            (d, v.s_true, a_map, true)
        }
        DataSource::Matrix { path, frame, truth: t } => {
            let d = load_matrix_auto(path)?;
            let a_map = match frame {
                Some((h, w)) if h * w != d.nrows() => {
                    return Err(CliError::Config(format!(
                        "frame {h}x{w} does not match {} rows",
                        d.nrows()
                    )))
                }
                Some((h, w)) => blur(*h, *w)?,
                None => LinearMap::Identity,
            };
            let (s_true, has) = truth(t, d.shape())?;
            (d, s_true, a_map, has)
        }
        DataSource::Frames { paths, truth: t } => {
            let (d, (h, w)) = load_pgm_frames(paths)?;
            let a_map = blur(h, w)?;
            let (s_true, has) = truth(t, d.shape())?;
            (d, s_true, a_map, has)
        }
    };
    Ok(Loaded {
        scenario: Scenario {
            name: p.name.clone(),
            d,
            s_true,
            a_map,
            omega: cfg.omega()?,
        },
        has_truth,
    })
}

pub fn synth(args: &RunArgs) -> CliResult<()> {
    let cfg = load_config(args)?;
    let DataSource::Synth(spec) = &cfg.problem.data else {
        return Err(CliError::Config("synth needs a synth data source".into()));
    };
    let loaded = load_data(&cfg)?;
    create_dir(&args.out)?;
    let sc = &loaded.scenario;
    save_matrix(&sc.d, args.out.join("D.bin"))?;
    save_matrix(&sc.s_true, args.out.join("S_true.bin"))?;
    if cfg.output.format == Format::Csv {
        let mut buf = Vec::new();
        write_matrix_csv(&sc.d, &mut buf)?;
        write_file(&args.out.join("D.csv"), &buf)?;
        buf.clear();
        write_matrix_csv(&sc.s_true, &mut buf)?;
        write_file(&args.out.join("S_true.csv"), &buf)?;
    }
    let manifest = json!({
        "name": cfg.problem.name,
        "scenario": cfg.problem.scenario,
        "blur": cfg.problem.blur,
        "spec": spec,
        "rows": sc.d.nrows(),
        "cols": sc.d.ncols(),
        "rng": "ChaCha8",
    });
    write_file(&args.out.join("manifest.json"), &to_json(&manifest))?;
    info!(
        "wrote {}x{} scene to {}",
        sc.d.nrows(),
        sc.d.ncols(),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary {
    solver: String,
    iterations: usize,
    converged: bool,
    final_objective: f64,
    final_stationarity: f64,
    final_beta: Option<f64>,
    monotone_violations: usize,
    f_measure: Option<f64>,
}

fn write_trace(report: &RunReport, dir: &Path, stem: &str, format: Format) -> CliResult<()> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_trace_csv(&report.trace, &mut buf)?;
            write_file(&dir.join(format!("{stem}.csv")), &buf)
        }
        Format::Json => write_file(&dir.join(format!("{stem}.json")), &to_json(&report.trace)),
    }
}

pub fn solve(args: &RunArgs) -> CliResult<()> {
    let cfg = load_config(args)?;
    let loaded = load_data(&cfg)?;
    let sc = &loaded.scenario;
    let penalty = cfg.penalty(cfg.problem.penalty, cfg.problem.mu)?;
    let problem = Problem::new(sc.d.clone(), sc.a_map.clone(), sc.omega, penalty)?;

    let admm_cfg = cfg.solver.admm.as_ref().map(|a| cfg.admm_config(a));
    let palm_cfg = cfg.solver.palm.as_ref().map(|p| cfg.palm_config(p));
    if let Some(a) = &admm_cfg {
        let (lo, hi) = problem.gram_bounds();
        let bb = beta_bar(a.tau, lo, hi)?;
        a.validate(bb).map_err(|e| CliError::Config(e.to_string()))?;
        if let BetaPolicy::Fixed {
            beta,
            guaranteed: false,
        } = a.beta_policy
        {
            if beta <= bb {
                warn!("fixed beta {beta} is not above the threshold {bb}; convergence is not guaranteed");
            }
        }
    }
    let init = problem.initialize(cfg.problem.kappa)?;
    if let Ok(check) = problem.check_init_condition(cfg.problem.kappa) {
        if !check.passes {
            info!(
                "initial point does not satisfy the sufficient condition (margin {})",
                check.margin
            );
        }
    }

    create_dir(&args.out)?;
    let mut reports = Vec::new();
    if let Some(a) = &admm_cfg {
        reports.push(("admm", admm::solve(&problem, a, &init)?));
    }
    if let Some(p) = &palm_cfg {
        reports.push(("palm", solve_palm(&problem, p, &init.l, &init.s)?));
    }

    let mut summaries = Vec::new();
    for (stem, r) in &reports {
        info!(
            "{}: {} iterations, converged {}, objective {:.6e}, {:?}",
            r.solver, r.iterations, r.converged, r.final_objective, r.elapsed
        );
        write_trace(r, &args.out, &format!("trace_{stem}"), cfg.output.format)?;
        if cfg.output.matrices {
            save_matrix(&r.l, args.out.join(format!("L_{stem}.bin")))?;
            save_matrix(&r.s, args.out.join(format!("S_{stem}.bin")))?;
        }
        let fm = if loaded.has_truth {
            Some(f_measure(&r.s, &sc.s_true, SUPPORT_THRESHOLD)?.f_measure)
        } else {
            None
        };
        summaries.push(SolveSummary {
            solver: r.solver.clone(),
            iterations: r.iterations,
            converged: r.converged,
            final_objective: r.final_objective,
            final_stationarity: r.final_stationarity,
            final_beta: r.final_beta,
            monotone_violations: r.monotone_violations,
            f_measure: fm,
        });
    }
    write_file(&args.out.join("summary.json"), &to_json(&summaries))?;

    let failed: Vec<&str> = summaries
        .iter()
        .filter(|s| !s.converged)
        .map(|s| s.solver.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "{} reached max_iter without converging",
            failed.join(", ")
        )))
    }
}

/// Results without the wall-clock column, so reruns compare equal.
fn results_json(rows: &[ResultRow]) -> Vec<u8> {
    let values: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            let mut v = serde_json::to_value(r).expect("plain data serialises");
            if let Some(obj) = v.as_object_mut() {
                obj.remove("time_ms");
            }
            v
        })
        .collect();
    to_json(&values)
}

pub fn compare(args: &RunArgs) -> CliResult<()> {
    let cfg = load_config(args)?;
    let loaded = load_data(&cfg)?;
    if !loaded.has_truth {
        return Err(CliError::Config("compare needs ground truth for the F-measure".into()));
    }
    let sc = &loaded.scenario;

    let base_admm = cfg.admm_config(&cfg.solver.admm.unwrap_or_default());
    let base_palm = cfg.palm_config(&cfg.solver.palm.unwrap_or_default());
    let mut solvers: Vec<SolverChoice> = cfg
        .sweep_taus()
        .into_iter()
        .map(|tau| SolverChoice::Admm(ncxadmm::AdmmConfig { tau, ..base_admm }))
        .collect();
    if cfg.sweep.palm {
        solvers.push(SolverChoice::Palm(base_palm));
    }
    let (lo, hi) = sc.a_map.gram_eigen_bounds();
    for s in &solvers {
        if let SolverChoice::Admm(a) = s {
            a.validate(beta_bar(a.tau, lo, hi)?)
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
    }
    let mut cells = Vec::new();
    for kind in cfg.sweep_penalties() {
        for mu in cfg.sweep_mus() {
            let pen = cfg.penalty(kind, mu)?;
            for s in &solvers {
                cells.push((pen, *s));
            }
        }
    }
    info!("running {} cells", cells.len());

    let run = || -> Vec<ncxadmm::Result<ResultRow>> {
        cells
            .par_iter()
            .map(|(pen, s)| run_cell(sc, *pen, s, cfg.problem.kappa).map(|(row, _)| row))
            .collect()
    };
    let results = match args.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(run),
        None => run(),
    };
    let rows = results.into_iter().collect::<ncxadmm::Result<Vec<_>>>()?;
    let unconverged = rows.iter().filter(|r| !r.converged).count();
    if unconverged > 0 {
        warn!("{unconverged} of {} runs hit max_iter", rows.len());
    }

    create_dir(&args.out)?;
    let mut buf = Vec::new();
    match cfg.output.format {
        Format::Csv => {
            bench::write_results_csv(&rows, &mut buf)?;
            write_file(&args.out.join("results.csv"), &buf)?;
        }
        Format::Json => write_file(&args.out.join("results.json"), &results_json(&rows))?,
    }
    buf.clear();
    bench::write_timing_csv(&rows, &mut buf)?;
    write_file(&args.out.join("timing.csv"), &buf)?;
    buf.clear();
    ProfileTable::iterations(&rows).write_csv(&mut buf)?;
    write_file(&args.out.join("iterations.csv"), &buf)?;
    buf.clear();
    ProfileTable::from_rows(&rows, |r| r.objective).write_csv(&mut buf)?;
    write_file(&args.out.join("objectives.csv"), &buf)?;
    Ok(())
}

pub fn profile(table: &Path, nu_max: f64, points: usize, out: &Path) -> CliResult<()> {
    let grid = bench::nu_grid(nu_max, points).map_err(|e| CliError::Config(e.to_string()))?;
    let text = fs::read_to_string(table).map_err(|e| CliError::Io(format!("{}: {e}", table.display())))?;
    let t = ProfileTable::read_csv(&text)?;
    create_dir(out)?;
    let path = out.join("profile.csv");
    let file = fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    if t.values.is_empty() {
        bench::write_profile_csv(&t.solvers, &[], &[], &mut w)?;
    } else {
        let ratios = performance_ratios(&t.values).map_err(|e| CliError::Io(e.to_string()))?;
        let rho = performance_profile(&ratios, &grid)?;
        bench::write_profile_csv(&t.solvers, &grid, &rho, &mut w)?;
    }
    w.flush()?;
    Ok(())
}
