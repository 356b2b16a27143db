//! Acceptance suite. Every test prints one `PASS`/`FAIL` line straight to
//! stdout (bypassing libtest capture) and then asserts on the same verdict.

use std::io::Write;
use std::time::{Duration, Instant};

use ncxadmm::admm::{self, beta_bar, check_termination, potential, Termination};
use ncxadmm::bench::{
    performance_profile, performance_ratios, run_cell, select_best_mu, synth_video, write_results_csv, ProfileTable,
    Scenario, SolverChoice, SweepPoint, SyntheticSceneSpec, MU_GRID,
};
use ncxadmm::report::write_trace_csv;
use ncxadmm::{AdmmConfig, BetaPolicy, ConstraintSet, LinearMap, Mat, PalmConfig, Penalty, PenaltyKind, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: f64 = 1.618_033_988_749_895;

fn verdict(n: u32, title: &str, pass: bool, elapsed: Duration, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let line = format!(
        "acceptance {n:>2} {status} {title} ({:.2}s): {detail}\n",
        elapsed.as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "{}", line.trim_end());
}

fn identity_problem(d: Mat, pen: Penalty) -> Problem {
    Problem::new(d, LinearMap::Identity, ConstraintSet::default(), pen).unwrap()
}

/// Rank-one background, sparse bright spikes and a little noise in [0, 1].
fn random_instance(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Mat {
    let bg: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..0.35)).collect();
    Mat::from_fn(m, n, |i, _| {
        let spike = if rng.random_bool(0.1) {
            rng.random_range(0.3..0.7)
        } else {
            0.0
        };
        bg[i] + spike + rng.random_range(-0.02..0.02)
    })
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" > ")
}

fn clamp01(d: Mat) -> Mat {
    d.map(|x| x.clamp(0.0, 1.0))
}

#[test]
fn criterion_01_threshold_formula() {
    let t0 = Instant::now();
    let b1 = beta_bar(1.0, 1.0, 1.0).unwrap();
    let b08 = beta_bar(0.8, 1.0, 1.0).unwrap();
    let b16 = beta_bar(1.6, 1.0, 1.0).unwrap();
    let mut ok = (b1 - 1.0).abs() < 1e-12 && (b08 - 1.25).abs() < 1e-12 && (b16 - 10.8248).abs() < 1e-3;

    let grid: Vec<f64> = (0..100).map(|i| GOLDEN * (i as f64 + 0.5) / 100.0).collect();
    let vals: Vec<f64> = grid.iter().map(|t| beta_bar(*t, 1.0, 1.0).unwrap()).collect();
    ok &= vals.iter().all(|v| v.is_finite() && *v > 0.0);
    // decreasing up to τ = 1, increasing after
    for i in 0..grid.len() - 1 {
        if grid[i + 1] <= 1.0 {
            ok &= vals[i + 1] <= vals[i];
        } else if grid[i] >= 1.0 {
            ok &= vals[i + 1] >= vals[i];
        }
    }
    let near0 = beta_bar(0.05, 1.0, 1.0).unwrap();
    let near_g = beta_bar(1.61, 1.0, 1.0).unwrap();
    ok &= near0 > 10.0 * b1 && near_g > 10.0 * b1;
    let el = t0.elapsed();
    ok &= el < Duration::from_secs(1);
    verdict(
        1,
        "threshold formula",
        ok,
        el,
        &format!("b(1)={b1}, b(0.8)={b08}, b(1.6)={b16:.6}, b(0.05)={near0:.3}, b(1.61)={near_g:.3}"),
    );
}

#[test]
fn criterion_02_potential_monotonicity() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_02);
    let instances: Vec<Mat> = (0..20).map(|_| clamp01(random_instance(&mut rng, 16, 12))).collect();
    let penalties = [
        PenaltyKind::Bridge { p: 0.5 },
        PenaltyKind::Fraction { alpha: 1.0 },
        PenaltyKind::Logistic { alpha: 1.0 },
    ];
    let (mut runs, mut steps) = (0, 0);
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_slack = f64::INFINITY;
    for d in &instances {
        for tau in [0.5, 0.8, 1.0, 1.2, 1.6] {
            for kind in penalties {
                let p = identity_problem(d.clone(), Penalty::new(kind, 0.05).unwrap());
                let (lmin, lmax) = p.gram_bounds();
                let beta = 1.05 * beta_bar(tau, lmin, lmax).unwrap();
                let cfg = AdmmConfig {
                    tau,
                    beta_policy: BetaPolicy::Fixed { beta, guaranteed: true },
                    ..AdmmConfig::default()
                };
                let dual = (1.0 / tau).max(tau * tau / (1.0 + tau - tau * tau));
                let c_z = 0.5 * (lmin + beta) - dual * lmax * lmax / beta;
                let mut st = p.initialize(1.0).unwrap();
                st.beta = beta;
                let mut next = admm::admm_step(&p, &cfg, &st).unwrap();
                for _ in 0..300 {
                    let after = admm::admm_step(&p, &cfg, &next).unwrap();
                    let th_k = potential(&p, tau, beta, &next).unwrap();
                    let th_k1 = potential(&p, tau, beta, &after).unwrap();
                    let dl = (&after.l - &next.l).norm();
                    let dz = (&after.z - &next.z).norm();
                    worst_rise = worst_rise.max(th_k1 - th_k);
                    worst_slack = worst_slack.min(th_k - th_k1 - 0.5 * beta * dl * dl - c_z * dz * dz);
                    steps += 1;
                    let stop = check_termination(&next, &after, &cfg) == Termination::Stop;
                    next = after;
                    if stop {
                        break;
                    }
                }
                runs += 1;
            }
        }
    }
    let el = t0.elapsed();
    let ok = worst_rise <= 1e-10 && worst_slack >= -1e-9 && el < Duration::from_secs(60);
    verdict(
        2,
        "potential monotonicity",
        ok,
        el,
        &format!("{runs} runs, {steps} steps, max rise {worst_rise:.3e}, min slack {worst_slack:.3e}"),
    );
}

/// `φ` restated from the penalty definitions; `μ` sits inside for the
/// thresholding penalties.
fn phi_oracle(kind: PenaltyKind, mu: f64, t: f64) -> f64 {
    let u = t.abs();
    match kind {
        PenaltyKind::Bridge { p } => u.powf(p),
        PenaltyKind::Fraction { alpha } => alpha * u / (1.0 + alpha * u),
        PenaltyKind::Logistic { alpha } => (1.0 + alpha * u).ln(),
        PenaltyKind::Scad { alpha } => {
            if u <= mu {
                u
            } else if u <= alpha * mu {
                (-u * u + 2.0 * alpha * mu * u - mu * mu) / (2.0 * (alpha - 1.0) * mu)
            } else {
                (alpha + 1.0) * mu / 2.0
            }
        }
        PenaltyKind::Mcp { alpha } => {
            if u <= alpha * mu {
                u - u * u / (2.0 * alpha * mu)
            } else {
                alpha * mu / 2.0
            }
        }
        PenaltyKind::Hard => {
            if u >= mu {
                mu
            } else {
                mu - (mu - u) * (mu - u) / mu
            }
        }
    }
}

/// Coarse grid over `[−|v|−1, |v|+1]` at `1e-4` on multiples of the step,
/// then `1e-6` refinement around the five lowest coarse local minima.
fn brute_force_prox(kind: PenaltyKind, mu: f64, beta: f64, v: f64) -> (f64, f64) {
    let f = |s: f64| mu * phi_oracle(kind, mu, s) + 0.5 * beta * (s - v) * (s - v);
    let h = 1e-4;
    let r = v.abs() + 1.0;
    let lo = (-r / h).floor() as i64;
    let hi = (r / h).ceil() as i64;
    let vals: Vec<f64> = (lo..=hi).map(|i| f(i as f64 * h)).collect();
    let mut minima: Vec<(f64, f64)> = (0..vals.len())
        .filter(|&i| (i == 0 || vals[i] <= vals[i - 1]) && (i + 1 == vals.len() || vals[i] <= vals[i + 1]))
        .map(|i| (vals[i], (lo + i as i64) as f64 * h))
        .collect();
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (f64::INFINITY, 0.0);
    for &(_, c) in minima.iter().take(5) {
        for j in -1000..=1000 {
            let s = c + j as f64 * 1e-6;
            let val = f(s);
            if val < best.0 {
                best = (val, s);
            }
        }
    }
    (best.1, best.0)
}

#[test]
fn criterion_03_prox_oracle() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(30_03);
    let mut worst_arg: f64 = 0.0;
    let mut worst_obj = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for kind_ix in 0..6 {
        for _ in 0..200 {
            let kind = match kind_ix {
                0 => PenaltyKind::Bridge {
                    p: rng.random_range(0.1..=1.0),
                },
                1 => PenaltyKind::Fraction {
                    alpha: rng.random_range(0.2..5.0),
                },
                2 => PenaltyKind::Logistic {
                    alpha: rng.random_range(0.2..5.0),
                },
                3 => PenaltyKind::Scad {
                    alpha: rng.random_range(2.1..5.0),
                },
                4 => PenaltyKind::Mcp {
                    alpha: rng.random_range(0.5..5.0),
                },
                _ => PenaltyKind::Hard,
            };
            let mu = rng.random_range(0.05..1.0);
            let beta = rng.random_range(0.5..4.0);
            let v = rng.random_range(-3.0..3.0);
            let pen = Penalty::new(kind, mu).unwrap();
            let s = pen.prox(v, beta);
            let f = |s: f64| mu * phi_oracle(kind, mu, s) + 0.5 * beta * (s - v) * (s - v);
            let (s_grid, f_grid) = brute_force_prox(kind, mu, beta, v);
            let arg = (s - s_grid).abs();
            let obj = f(s) - f_grid;
            worst_arg = worst_arg.max(arg);
            worst_obj = worst_obj.max(obj);
            if arg > 1e-5 || obj > 1e-10 {
                failures.push(format!("{kind:?} mu={mu} beta={beta} v={v}: prox {s}, grid {s_grid}"));
            }
        }
    }
    let el = t0.elapsed();
    let ok = failures.is_empty() && el < Duration::from_secs(30);
    verdict(
        3,
        "prox oracle equivalence",
        ok,
        el,
        &format!(
            "1200 draws, max |arg diff| {worst_arg:.2e}, max objective excess {worst_obj:.2e}, {} failures {:?}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_04_stationarity_vs_tolerance() {
    let t0 = Instant::now();
    let levels = [(1e-4, 5e-3), (1e-5, 5e-4), (1e-6, 5e-5)];
    let mut ok = true;
    let mut worst_ratio = f64::INFINITY;
    let mut last = Vec::new();
    for seed in 0..10u64 {
        let v = synth_video(&SyntheticSceneSpec::moving_box(10, 8, 24, 0.05, 100 + seed)).unwrap();
        let p = identity_problem(v.d, Penalty::new(PenaltyKind::Fraction { alpha: 1.0 }, 0.1).unwrap());
        let init = p.initialize(1.0).unwrap();
        let res: Vec<f64> = levels
            .iter()
            .map(|&(t1, t2)| {
                let cfg = AdmmConfig {
                    tau: 0.8,
                    tol_a1: t1,
                    tol_a2: t2,
                    max_iter: 20_000,
                    ..AdmmConfig::default()
                };
                let r = admm::solve(&p, &cfg, &init).unwrap();
                ok &= r.converged;
                r.final_stationarity
            })
            .collect();
        for w in res.windows(2) {
            worst_ratio = worst_ratio.min(w[0] / w[1]);
            ok &= w[0] >= 5.0 * w[1];
        }
        last = res;
    }
    let el = t0.elapsed();
    ok &= el < Duration::from_secs(120);
    verdict(
        4,
        "stationarity at termination",
        ok,
        el,
        &format!(
            "10 instances, smallest reduction per 10x tightening {worst_ratio:.1}x, last instance {}",
            fmt_list(&last)
        ),
    );
}

#[test]
fn criterion_05_convex_cross_check() {
    let t0 = Instant::now();
    let v = synth_video(&SyntheticSceneSpec::moving_box(8, 4, 24, 0.05, 5)).unwrap();
    assert_eq!(v.d.shape(), (32, 24));
    let p = identity_problem(v.d, Penalty::new(PenaltyKind::Bridge { p: 1.0 }, 0.1).unwrap());
    let init = p.initialize(1.0).unwrap();
    let a = admm::solve(
        &p,
        &AdmmConfig {
            tau: 1.0,
            tol_a1: 1e-6,
            tol_a2: 1e-5,
            max_iter: 100_000,
            ..AdmmConfig::default()
        },
        &init,
    )
    .unwrap();
    let b = ncxadmm::palm::solve_palm(
        &p,
        &PalmConfig {
            tol_p: 1e-6,
            max_iter: 100_000,
            ..PalmConfig::default()
        },
        &init.l,
        &init.s,
    )
    .unwrap();
    let rel = (a.final_objective - b.final_objective).abs() / b.final_objective.abs().max(f64::MIN_POSITIVE);
    let el = t0.elapsed();
    let ok = a.converged
        && b.converged
        && rel <= 1e-2
        && a.final_stationarity <= 1e-4
        && b.final_stationarity <= 1e-4
        && el < Duration::from_secs(30);
    verdict(
        5,
        "convex cross-check",
        ok,
        el,
        &format!(
            "ADMM F={:.10} res {:.2e} ({} it), PALM F={:.10} res {:.2e} ({} it), rel diff {rel:.2e}",
            a.final_objective,
            a.final_stationarity,
            a.iterations,
            b.final_objective,
            b.final_stationarity,
            b.iterations
        ),
    );
}

fn tau_study_scenes() -> Vec<Scenario> {
    [
        SyntheticSceneSpec::moving_box(12, 10, 40, 0.05, 1),
        SyntheticSceneSpec::moving_box(10, 12, 40, 0.1, 2),
        SyntheticSceneSpec::moving_box(16, 8, 30, 0.02, 3),
        SyntheticSceneSpec::moving_box(12, 12, 36, 0.0, 4),
    ]
    .iter()
    .enumerate()
    .map(|(i, spec)| {
        let v = synth_video(spec).unwrap();
        Scenario {
            name: format!("scene{i}"),
            d: v.d,
            s_true: v.s_true,
            a_map: LinearMap::Identity,
            omega: ConstraintSet::default(),
        }
    })
    .collect()
}

/// Criteria 6 and 7 share one sweep.
#[test]
fn criterion_06_07_tau_study_and_palm_monotonicity() {
    let t0 = Instant::now();
    let solvers = [
        SolverChoice::Admm(AdmmConfig {
            tau: 0.8,
            ..AdmmConfig::default()
        }),
        SolverChoice::Admm(AdmmConfig {
            tau: 1.0,
            ..AdmmConfig::default()
        }),
        SolverChoice::Admm(AdmmConfig {
            tau: 1.6,
            ..AdmmConfig::default()
        }),
        SolverChoice::Palm(PalmConfig::default()),
    ];
    let mus = [5e-1, 5e-2, 5e-3, 5e-4, 5e-5];
    let kinds = [
        PenaltyKind::Bridge { p: 0.5 },
        PenaltyKind::Fraction { alpha: 1.0 },
        PenaltyKind::Logistic { alpha: 1.0 },
    ];
    let mut rows = Vec::new();
    let mut palm_runs = 0;
    let mut palm_bad = Vec::new();
    for sc in tau_study_scenes() {
        for kind in kinds {
            for mu in mus {
                for solver in &solvers {
                    let (row, rep) = run_cell(&sc, Penalty::new(kind, mu).unwrap(), solver, 1.0).unwrap();
                    if matches!(solver, SolverChoice::Palm(_)) {
                        palm_runs += 1;
                        let tr = rep.objective_trace();
                        let rise = tr.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
                        if rise > 1e-10 {
                            palm_bad.push(format!("{} {} mu={mu}: rise {rise:.2e}", sc.name, kind.name()));
                        }
                    }
                    rows.push(row);
                }
            }
        }
    }
    let cells = rows.len() / solvers.len();
    let iters = ProfileTable::iterations(&rows);
    let rho = performance_profile(&performance_ratios(&iters.values).unwrap(), &[1.0]).unwrap();
    let rho1: Vec<f64> = rho.iter().map(|c| c[0]).collect();
    let fvals = ProfileTable::from_rows(&rows, |r| r.objective);
    let mean: Vec<f64> = (0..solvers.len())
        .map(|j| fvals.values.iter().map(|r| r[j]).sum::<f64>() / fvals.values.len() as f64)
        .collect();

    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("tau_study");
    std::fs::create_dir_all(&dir).unwrap();
    write_results_csv(&rows, std::fs::File::create(dir.join("results.csv")).unwrap()).unwrap();
    iters
        .write_csv(std::fs::File::create(dir.join("iterations.csv")).unwrap())
        .unwrap();

    let el = t0.elapsed();
    let ordering = rho1[0] >= rho1[3] && rho1[1] >= rho1[3];
    let worst_f = mean[2] >= mean[0] && mean[2] >= mean[1];
    let ok6 = cells == 60 && ordering && worst_f && el < Duration::from_secs(600);
    let detail = format!(
        "{cells} cells; rho(1) {:?} = [{}]; mean F [{}]; profile ordering {}; tau=1.6 worst F {}; report in {}",
        iters.solvers,
        rho1.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", "),
        mean.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>().join(", "),
        if ordering { "holds" } else { "FLAGGED" },
        if worst_f { "holds" } else { "FLAGGED" },
        dir.display()
    );
    let ok7 = palm_runs == 60 && palm_bad.is_empty();
    let line7 = format!(
        "{palm_runs} PALM runs, {} with objective increase {:?}",
        palm_bad.len(),
        palm_bad
    );
    // print both lines before asserting either
    let status = |b: bool| if b { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "acceptance  6 {} tau study ({:.2}s): {detail}",
        status(ok6),
        el.as_secs_f64()
    );
    let _ = writeln!(out, "acceptance  7 {} PALM monotone objective: {line7}", status(ok7));
    drop(out);
    assert!(ok7, "criterion 7: {line7}");
    assert!(ok6, "criterion 6: {detail}");
}

#[test]
fn criterion_08_foreground_recovery() {
    let t0 = Instant::now();
    let mut best = Vec::new();
    for sigma in [0.0, 0.05] {
        let v = synth_video(&SyntheticSceneSpec::moving_box(12, 10, 40, sigma, 7)).unwrap();
        let sc = Scenario {
            name: format!("sigma{sigma}"),
            d: v.d,
            s_true: v.s_true,
            a_map: LinearMap::Identity,
            omega: ConstraintSet::default(),
        };
        let solver = SolverChoice::Admm(AdmmConfig::default());
        let points: Vec<SweepPoint> = MU_GRID
            .iter()
            .map(|&mu| {
                let pen = Penalty::new(PenaltyKind::Fraction { alpha: 1.0 }, mu).unwrap();
                let (row, _) = run_cell(&sc, pen, &solver, 1.0).unwrap();
                SweepPoint {
                    mu,
                    f_measure: row.f_measure,
                    iterations: row.iter,
                }
            })
            .collect();
        best.push(select_best_mu(&points).unwrap());
    }
    let el = t0.elapsed();
    let ok = best[0].f_measure == 1.0 && best[1].f_measure >= 0.8 && el < Duration::from_secs(120);
    verdict(
        8,
        "foreground recovery",
        ok,
        el,
        &format!(
            "noiseless best F={} at mu={}; sigma=0.05 best F={:.4} at mu={}",
            best[0].f_measure, best[0].mu, best[1].f_measure, best[1].mu
        ),
    );
}

#[test]
fn criterion_09_initialization() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(90_09);
    let mut worst_dual: f64 = 0.0;
    let mut worst_rise = f64::NEG_INFINITY;
    let (mut checked, mut skipped) = (0, 0);
    let kinds = [
        PenaltyKind::Bridge { p: 0.5 },
        PenaltyKind::Fraction { alpha: 1.0 },
        PenaltyKind::Logistic { alpha: 2.0 },
        PenaltyKind::Scad { alpha: 3.7 },
        PenaltyKind::Mcp { alpha: 2.0 },
        PenaltyKind::Hard,
    ];
    for trial in 0..40 {
        let d = clamp01(random_instance(&mut rng, 12, 10));
        let a = if trial % 2 == 0 {
            LinearMap::Identity
        } else {
            LinearMap::frame_blur(4, 3, 0.8).unwrap()
        };
        let kind = kinds[trial % kinds.len()];
        let mu = [0.05, 0.5, 2.0][trial % 3];
        let p = Problem::new(d, a.clone(), ConstraintSet::default(), Penalty::new(kind, mu).unwrap()).unwrap();
        let kappa = if trial % 4 < 2 { 1.0 } else { 0.5 };
        let st = p.initialize(kappa).unwrap();
        let dual = a.apply_adjoint(&(p.data() - a.apply(&st.z).unwrap())).unwrap();
        worst_dual = worst_dual.max((&st.lambda - dual).amax());

        if !p.check_init_condition(kappa).unwrap().passes {
            skipped += 1;
            continue;
        }
        for tau in [0.8, 1.0, 1.6] {
            let (lmin, lmax) = p.gram_bounds();
            let beta = 1.05 * beta_bar(tau, lmin, lmax).unwrap();
            let cfg = AdmmConfig {
                tau,
                beta_policy: BetaPolicy::Fixed { beta, guaranteed: true },
                ..AdmmConfig::default()
            };
            let mut s0 = st.clone();
            s0.beta = beta;
            let s1 = admm::admm_step(&p, &cfg, &s0).unwrap();
            let rise = potential(&p, tau, beta, &s1).unwrap() - potential(&p, tau, beta, &s0).unwrap();
            worst_rise = worst_rise.max(rise);
            checked += 1;
        }
    }
    let h0 = |k: PenaltyKind, mu: f64| Penalty::new(k, mu).unwrap().h0_lower_bound();
    let consts_ok = h0(PenaltyKind::Bridge { p: 0.5 }, 0.3) == f64::INFINITY
        && h0(PenaltyKind::Logistic { alpha: 1.0 }, 0.3) == f64::INFINITY
        && h0(PenaltyKind::Fraction { alpha: 2.0 }, 0.3) == 0.3
        && h0(PenaltyKind::Scad { alpha: 3.7 }, 0.3) == 0.5 * (3.7 + 1.0) * 0.3 * 0.3
        && h0(PenaltyKind::Mcp { alpha: 2.0 }, 0.3) == 0.5 * 2.0 * 0.3 * 0.3
        && h0(PenaltyKind::Hard, 0.3) == 0.3 * 0.3;
    let el = t0.elapsed();
    let ok = worst_dual <= 1e-12 && checked > 0 && worst_rise <= 1e-10 && consts_ok;
    verdict(
        9,
        "initialization guarantee",
        ok,
        el,
        &format!(
            "dual identity error {worst_dual:.2e}; {checked} first steps checked ({skipped} instances fail the init condition), max rise {worst_rise:.3e}; h0 constants {}",
            if consts_ok { "exact" } else { "WRONG" }
        ),
    );
}

fn deterministic_outputs() -> Vec<Vec<u8>> {
    let spec = SyntheticSceneSpec::moving_box(8, 6, 16, 0.05, 42);
    let v = synth_video(&spec).unwrap();
    let mut matrix = Vec::new();
    ncxadmm::io::write_matrix(&v.d, &mut matrix).unwrap();
    let sc = Scenario {
        name: "det".into(),
        d: v.d,
        s_true: v.s_true,
        a_map: LinearMap::Identity,
        omega: ConstraintSet::default(),
    };
    let mut rows = Vec::new();
    let mut trace = Vec::new();
    for solver in [
        SolverChoice::Admm(AdmmConfig::default()),
        SolverChoice::Palm(PalmConfig::default()),
    ] {
        for mu in [0.1, 0.01] {
            let (row, rep) = run_cell(
                &sc,
                Penalty::new(PenaltyKind::Fraction { alpha: 1.0 }, mu).unwrap(),
                &solver,
                1.0,
            )
            .unwrap();
            write_trace_csv(&rep.trace, &mut trace).unwrap();
            rows.push(row);
        }
    }
    let mut results = Vec::new();
    write_results_csv(&rows, &mut results).unwrap();
    let mut table = Vec::new();
    ProfileTable::iterations(&rows).write_csv(&mut table).unwrap();
    vec![matrix, results, table, trace]
}

#[test]
fn criterion_10_determinism() {
    let t0 = Instant::now();
    let a = deterministic_outputs();
    let b = deterministic_outputs();
    let ok = a == b && a.iter().all(|x| !x.is_empty());
    verdict(
        10,
        "determinism",
        ok,
        t0.elapsed(),
        &format!(
            "{} outputs, {} bytes, identical: {}",
            a.len(),
            a.iter().map(Vec::len).sum::<usize>(),
            a == b
        ),
    );
}
