//! Synthetic scenes with ground truth, foreground metrics, performance
//! profiles and the per-cell runner used by sweeps.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::admm::{self, AdmmConfig};
use crate::error::{check_shape, Error, Result};
use crate::operators::{LinearMap, Mat};
use crate::palm::{self, PalmConfig};
use crate::problem::Problem;
use crate::regularizers::{ConstraintSet, Penalty};
use crate::report::RunReport;

/// μ values swept when picking the best regularisation weight.
pub const MU_GRID: [f64; 10] = [5e-1, 1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5];

/// Support threshold for recovered foregrounds.
pub const SUPPORT_THRESHOLD: f64 = 1e-3;

/// A foreground rectangle present in frames `frames.0 .. frames.1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForegroundRect {
    pub frames: (usize, usize),
    /// `(row, col, height, width)` inside the frame.
    pub rect: (usize, usize, usize, usize),
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSceneSpec {
    pub frame_h: usize,
    pub frame_w: usize,
    pub n_frames: usize,
    #[serde(default)]
    pub fg_rects: Vec<ForegroundRect>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Background pixels are drawn uniformly from this range.
    #[serde(default = "default_background")]
    pub background: (f64, f64),
}

fn default_background() -> (f64, f64) {
    (0.05, 0.35)
}

impl SyntheticSceneSpec {
    /// A single bright box sweeping left to right across the frames.
    pub fn moving_box(frame_h: usize, frame_w: usize, n_frames: usize, noise_sigma: f64, seed: u64) -> Self {
        let bh = (frame_h / 3).max(1);
        let bw = (frame_w / 4).max(1);
        let row = (frame_h - bh) / 2;
        let span = frame_w - bw;
        let fg_rects = (0..n_frames)
            .map(|t| ForegroundRect {
                frames: (t, t + 1),
                rect: (row, span * t / n_frames.max(1), bh, bw),
                intensity: 0.95,
            })
            .collect();
        Self {
            frame_h,
            frame_w,
            n_frames,
            fg_rects,
            noise_sigma,
            seed,
            background: default_background(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_h == 0 || self.frame_w == 0 || self.n_frames == 0 {
            return Err(Error::Domain("scene dimensions must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::Domain(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        let (lo, hi) = self.background;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::Domain(format!("background range {lo}..{hi} not inside [0, 1]")));
        }
        for r in &self.fg_rects {
            let (f0, f1) = r.frames;
            let (y, x, h, w) = r.rect;
            if f0 >= f1 || f1 > self.n_frames {
                return Err(Error::Domain(format!("bad frame range {f0}..{f1}")));
            }
            if h == 0 || w == 0 || y + h > self.frame_h || x + w > self.frame_w {
                return Err(Error::Domain(format!("rectangle {:?} outside the frame", r.rect)));
            }
            if !(0.0..=1.0).contains(&r.intensity) {
                return Err(Error::Domain(format!("intensity {} not in [0, 1]", r.intensity)));
            }
        }
        Ok(())
    }
}

/// Generated data plus ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVideo {
    pub d: Mat,
    /// Foreground such that `background + s_true` is the clean video.
    pub s_true: Mat,
    /// Background frame, vectorised column-major.
    pub background: Vec<f64>,
}

/// Rank-one background plus rectangles plus Gaussian noise, clamped to
/// `[0, 1]`. Random draws come from ChaCha8 seeded with `spec.seed`:
/// first the background pixels, then the noise in column-major order.
pub fn synth_video(spec: &SyntheticSceneSpec) -> Result<SyntheticVideo> {
    spec.validate()?;
    let (h, w, n) = (spec.frame_h, spec.frame_w, spec.n_frames);
    let m = h * w;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.background;
    let background: Vec<f64> = (0..m)
        .map(|_| if hi > lo { rng.random_range(lo..hi) } else { lo })
        .collect();

    let mut s_true = Mat::zeros(m, n);
    for r in &spec.fg_rects {
        let (y, x, rh, rw) = r.rect;
        for t in r.frames.0..r.frames.1 {
            for c in x..x + rw {
                for row in y..y + rh {
                    let p = row + c * h;
                    s_true[(p, t)] = r.intensity - background[p];
                }
            }
        }
    }

    let mut d = Mat::from_fn(m, n, |p, t| background[p] + s_true[(p, t)]);
    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Domain(e.to_string()))?;
        for v in d.iter_mut() {
            *v += rng.sample(normal);
        }
    }
    d.apply(|v| *v = v.clamp(0.0, 1.0));
    Ok(SyntheticVideo { d, s_true, background })
}

/// `A(D)` plus Gaussian noise, clamped to `[0, 1]`.
pub fn corrupt_blur(d: &Mat, map: &LinearMap, noise_sigma: f64, seed: u64) -> Result<Mat> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::Domain(format!("noise_sigma must be >= 0, got {noise_sigma}")));
    }
    let mut out = map.apply(d)?;
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::Domain(e.to_string()))?;
        for v in out.iter_mut() {
            *v += rng.sample(normal);
        }
    }
    out.apply(|v| *v = v.clamp(0.0, 1.0));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Precision, recall and F-measure of the support `|s_star| > threshold`
/// against the support of `s_true`.
pub fn f_measure(s_star: &Mat, s_true: &Mat, threshold: f64) -> Result<MetricsReport> {
    check_shape(s_true.shape(), s_star.shape())?;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (a, b) in s_star.iter().zip(s_true.iter()) {
        match (a.abs() > threshold, b.abs() > threshold) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f = if tp == 0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(MetricsReport {
        tp,
        fp,
        fn_,
        precision,
        recall,
        f_measure: f,
    })
}

/// Divides each row by its minimum. Entries must be positive; `+∞` marks
/// a failed run.
pub fn performance_ratios(table: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = table.first().map_or(0, Vec::len);
    table
        .iter()
        .map(|row| {
            if row.len() != k {
                return Err(Error::Shape {
                    expected: (1, k),
                    got: (1, row.len()),
                });
            }
            if row.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Domain("performance table entries must be positive".into()));
            }
            let best = row.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(row
                .iter()
                .map(|v| if best.is_finite() { v / best } else { f64::INFINITY })
                .collect())
        })
        .collect()
}

/// `ρ_k(ν) = #{j : r_jk <= ν} / J` for each solver `k` and grid point `ν`.
pub fn performance_profile(ratios: &[Vec<f64>], nu_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    if nu_grid.iter().any(|v| !(*v >= 1.0)) || nu_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("nu grid must be increasing and >= 1".into()));
    }
    let j = ratios.len();
    let k = ratios.first().map_or(0, Vec::len);
    if ratios.iter().any(|r| r.len() != k) {
        return Err(Error::Domain("ragged ratio table".into()));
    }
    Ok((0..k)
        .map(|col| {
            nu_grid
                .iter()
                .map(|nu| {
                    let hits = ratios.iter().filter(|r| r[col] <= *nu).count();
                    if j == 0 {
                        0.0
                    } else {
                        hits as f64 / j as f64
                    }
                })
                .collect()
        })
        .collect())
}

/// Smallest finite value over all traces.
pub fn best_objective(traces: &[Vec<f64>]) -> Option<f64> {
    traces
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .reduce(f64::min)
}

/// `|F_k − f_min| / f_min` along every trace.
pub fn relerr_trace(traces: &[Vec<f64>], f_min: f64) -> Result<Vec<Vec<f64>>> {
    if !(f_min > 0.0) || !f_min.is_finite() {
        return Err(Error::Domain(format!("f_min must be positive, got {f_min}")));
    }
    Ok(traces
        .iter()
        .map(|t| t.iter().map(|f| (f - f_min).abs() / f_min).collect())
        .collect())
}

/// Outcome of one μ in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub mu: f64,
    pub f_measure: f64,
    pub iterations: usize,
}

/// Highest F-measure, ties broken by fewer iterations, then by the earlier
/// grid position.
pub fn select_best_mu(points: &[SweepPoint]) -> Option<SweepPoint> {
    let mut best: Option<SweepPoint> = None;
    for p in points {
        best = match best {
            Some(b) if p.f_measure > b.f_measure || (p.f_measure == b.f_measure && p.iterations < b.iterations) => {
                Some(*p)
            }
            None => Some(*p),
            keep => keep,
        };
    }
    best
}

/// Data and ground truth for one benchmark video.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub d: Mat,
    pub s_true: Mat,
    pub a_map: LinearMap,
    pub omega: ConstraintSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverChoice {
    Admm(AdmmConfig),
    Palm(PalmConfig),
}

impl SolverChoice {
    pub fn label(&self) -> String {
        match self {
            SolverChoice::Admm(c) => format!("admm_tau{}", c.tau),
            SolverChoice::Palm(_) => "palm".into(),
        }
    }
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub video: String,
    pub regularizer: String,
    pub param: Option<f64>,
    pub mu: f64,
    pub solver: String,
    pub iter: usize,
    pub converged: bool,
    pub objective: f64,
    pub f_measure: f64,
    pub time_ms: f64,
}

pub const RESULTS_HEADER: &str = "video,regularizer,param,mu,solver,iter,converged,objective,f_measure";
pub const TIMING_HEADER: &str = "video,regularizer,param,mu,solver,time_ms";

impl ResultRow {
    fn key(&self) -> String {
        let param = self.param.map_or(String::new(), |p| p.to_string());
        format!(
            "{},{},{},{},{}",
            self.video, self.regularizer, param, self.mu, self.solver
        )
    }

    /// Problem identifier without the solver column.
    pub fn problem_key(&self) -> String {
        let param = self.param.map_or(String::new(), |p| p.to_string());
        format!("{}/{}({})/mu={}", self.video, self.regularizer, param, self.mu)
    }
}

/// Builds the problem for a cell and runs one solver on it from the
/// standard initialisation with `κ = kappa`.
pub fn run_cell(
    scenario: &Scenario,
    penalty: Penalty,
    solver: &SolverChoice,
    kappa: f64,
) -> Result<(ResultRow, RunReport)> {
    let problem = Problem::new(scenario.d.clone(), scenario.a_map.clone(), scenario.omega, penalty)?;
    let init = problem.initialize(kappa)?;
    let report = match solver {
        SolverChoice::Admm(cfg) => admm::solve(&problem, cfg, &init)?,
        SolverChoice::Palm(cfg) => palm::solve_palm(&problem, cfg, &init.l, &init.s)?,
    };
    let metrics = f_measure(&report.s, &scenario.s_true, SUPPORT_THRESHOLD)?;
    let row = ResultRow {
        video: scenario.name.clone(),
        regularizer: penalty.kind().name().to_string(),
        param: penalty.kind().param(),
        mu: penalty.mu(),
        solver: solver.label(),
        iter: report.iterations,
        converged: report.converged,
        objective: report.final_objective,
        f_measure: metrics.f_measure,
        time_ms: duration_ms(report.elapsed),
    };
    Ok((row, report))
}

fn duration_ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Writes the deterministic part of the results (no timings).
pub fn write_results_csv<W: Write>(rows: &[ResultRow], mut w: W) -> Result<()> {
    writeln!(w, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.key(),
            r.iter,
            r.converged,
            r.objective,
            r.f_measure
        )?;
    }
    Ok(())
}

pub fn write_timing_csv<W: Write>(rows: &[ResultRow], mut w: W) -> Result<()> {
    writeln!(w, "{TIMING_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{}", r.key(), r.time_ms)?;
    }
    Ok(())
}

/// Problems × solvers table of a per-run quantity, in first-seen order.
/// Non-converged runs get `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub problems: Vec<String>,
    pub solvers: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl ProfileTable {
    pub fn from_rows(rows: &[ResultRow], value: impl Fn(&ResultRow) -> f64) -> Self {
        let mut problems: Vec<String> = Vec::new();
        let mut solvers: Vec<String> = Vec::new();
        for r in rows {
            let p = r.problem_key();
            if !problems.contains(&p) {
                problems.push(p);
            }
            if !solvers.contains(&r.solver) {
                solvers.push(r.solver.clone());
            }
        }
        let mut values = vec![vec![f64::INFINITY; solvers.len()]; problems.len()];
        for r in rows {
            let i = problems
                .iter()
                .position(|p| *p == r.problem_key())
                .expect("collected above");
            let j = solvers.iter().position(|s| *s == r.solver).expect("collected above");
            values[i][j] = if r.converged { value(r) } else { f64::INFINITY };
        }
        Self {
            problems,
            solvers,
            values,
        }
    }

    pub fn iterations(rows: &[ResultRow]) -> Self {
        Self::from_rows(rows, |r| r.iter as f64)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = String::from("problem");
        for s in &self.solvers {
            let _ = write!(header, ",{s}");
        }
        writeln!(w, "{header}")?;
        for (p, row) in self.problems.iter().zip(&self.values) {
            let mut line = p.clone();
            for v in row {
                let _ = write!(line, ",{v}");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty profile table".into()))?;
        let mut cols = header.split(',');
        cols.next();
        let solvers: Vec<String> = cols.map(|s| s.trim().to_string()).collect();
        let mut problems = Vec::new();
        let mut values = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut cells = line.split(',');
            problems.push(cells.next().unwrap_or_default().to_string());
            let row = cells
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("line {}: {e}", n + 2)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != solvers.len() {
                return Err(Error::Format(format!(
                    "line {}: expected {} values",
                    n + 2,
                    solvers.len()
                )));
            }
            values.push(row);
        }
        Ok(Self {
            problems,
            solvers,
            values,
        })
    }
}

/// Writes `nu,<solver>...` rows of the performance profile.
pub fn write_profile_csv<W: Write>(solvers: &[String], nu_grid: &[f64], rho: &[Vec<f64>], mut w: W) -> Result<()> {
    let mut header = String::from("nu");
    for s in solvers {
        let _ = write!(header, ",{s}");
    }
    writeln!(w, "{header}")?;
    for (i, nu) in nu_grid.iter().enumerate() {
        let mut line = nu.to_string();
        for col in rho {
            let _ = write!(line, ",{}", col[i]);
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// `n` evenly spaced points from 1 to `nu_max`.
pub fn nu_grid(nu_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(nu_max >= 1.0) || n == 0 {
        return Err(Error::Domain(format!("need nu_max >= 1 and n > 0, got {nu_max}, {n}")));
    }
    if n == 1 || nu_max == 1.0 {
        return Ok(vec![1.0]);
    }
    Ok((0..n)
        .map(|i| 1.0 + (nu_max - 1.0) * i as f64 / (n - 1) as f64)
        .collect())
}
