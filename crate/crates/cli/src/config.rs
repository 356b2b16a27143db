//! JSON run configuration.

use std::path::{Path, PathBuf};

use ncxadmm::admm::GOLDEN_RATIO;
use ncxadmm::bench::{SyntheticSceneSpec, MU_GRID};
use ncxadmm::{AdmmConfig, BetaPolicy, ConstraintSet, HeuristicParams, PalmConfig, Penalty, PenaltyKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[default]
    Noisy,
    Blurred,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default = "default_name")]
    pub name: String,
    pub data: DataSource,
    #[serde(default)]
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub blur: Option<BlurSection>,
    pub penalty: PenaltyKind,
    pub mu: f64,
    #[serde(default = "default_one")]
    pub radius: f64,
    #[serde(default = "default_one")]
    pub kappa: f64,
}

fn default_name() -> String {
    "video".into()
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Generated scene with ground truth.
    Synth(SyntheticSceneSpec),
    /// Matrix file (binary, or CSV by extension). `frame` is needed for blur.
    Matrix {
        path: PathBuf,
        #[serde(default)]
        frame: Option<(usize, usize)>,
        #[serde(default)]
        truth: Option<PathBuf>,
    },
    /// PGM frames, one per column.
    Frames {
        paths: Vec<PathBuf>,
        #[serde(default)]
        truth: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlurSection {
    pub psf_sigma: f64,
    /// Noise added after blurring generated scenes.
    #[serde(default)]
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub admm: Option<AdmmSection>,
    #[serde(default)]
    pub palm: Option<PalmSection>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            admm: Some(AdmmSection::default()),
            palm: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSection {
    Heuristic(HeuristicParams),
    Fixed {
        value: f64,
        #[serde(default)]
        guaranteed: bool,
    },
}

impl Default for BetaSection {
    fn default() -> Self {
        BetaSection::Heuristic(HeuristicParams::default())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmmSection {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub beta: BetaSection,
    #[serde(default)]
    pub tol_a1: Option<f64>,
    #[serde(default)]
    pub tol_a2: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub min_iter: usize,
}

impl Default for AdmmSection {
    fn default() -> Self {
        Self {
            tau: default_tau(),
            beta: BetaSection::default(),
            tol_a1: None,
            tol_a2: None,
            max_iter: default_max_iter(),
            min_iter: 0,
        }
    }
}

fn default_tau() -> f64 {
    0.8
}

fn default_max_iter() -> usize {
    5000
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PalmSection {
    #[serde(default = "default_step_factor")]
    pub step_factor: f64,
    #[serde(default)]
    pub tol_p: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub min_iter: usize,
}

impl Default for PalmSection {
    fn default() -> Self {
        Self {
            step_factor: default_step_factor(),
            tol_p: None,
            max_iter: default_max_iter(),
            min_iter: 0,
        }
    }
}

fn default_step_factor() -> f64 {
    0.99
}

/// Grid for `compare`. Missing lists fall back to the standard μ grid,
/// τ ∈ {0.8, 1, 1.6} and the problem's penalty.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    #[serde(default)]
    pub tau: Option<Vec<f64>>,
    #[serde(default)]
    pub penalties: Option<Vec<PenaltyKind>>,
    #[serde(default = "default_true")]
    pub palm: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            mu: None,
            tau: None,
            penalties: None,
            palm: true,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: Format,
    /// Write final `L` and `S` for `solve`.
    #[serde(default = "default_true")]
    pub matrices: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            format: Format::Csv,
            matrices: true,
        }
    }
}

/// Stopping tolerances `(Tol_A1, Tol_A2, Tol_P)` for a scenario.
pub fn default_tolerances(s: ScenarioKind) -> (f64, f64, f64) {
    match s {
        ScenarioKind::Noisy => (1e-4, 5e-3, 1e-4),
        ScenarioKind::Blurred => (5e-3, 1e-2, 3e-3),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn penalty(&self, kind: PenaltyKind, mu: f64) -> Result<Penalty, CliError> {
        Penalty::new(kind, mu).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn omega(&self) -> Result<ConstraintSet, CliError> {
        ConstraintSet::new(self.problem.radius, true).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn admm_config(&self, section: &AdmmSection) -> AdmmConfig {
        let (t1, t2, _) = default_tolerances(self.problem.scenario);
        AdmmConfig {
            tau: section.tau,
            beta_policy: match section.beta {
                BetaSection::Heuristic(h) => BetaPolicy::Heuristic(h),
                BetaSection::Fixed { value, guaranteed } => BetaPolicy::Fixed {
                    beta: value,
                    guaranteed,
                },
            },
            tol_a1: section.tol_a1.unwrap_or(t1),
            tol_a2: section.tol_a2.unwrap_or(t2),
            max_iter: section.max_iter,
            min_iter: section.min_iter,
        }
    }

    pub fn palm_config(&self, section: &PalmSection) -> PalmConfig {
        let (_, _, tp) = default_tolerances(self.problem.scenario);
        PalmConfig {
            step_factor: section.step_factor,
            tol_p: section.tol_p.unwrap_or(tp),
            max_iter: section.max_iter,
            min_iter: section.min_iter,
        }
    }

    pub fn sweep_mus(&self) -> Vec<f64> {
        self.sweep.mu.clone().unwrap_or_else(|| MU_GRID.to_vec())
    }

    pub fn sweep_taus(&self) -> Vec<f64> {
        self.sweep.tau.clone().unwrap_or_else(|| vec![0.8, 1.0, 1.6])
    }

    pub fn sweep_penalties(&self) -> Vec<PenaltyKind> {
        self.sweep
            .penalties
            .clone()
            .unwrap_or_else(|| vec![self.problem.penalty])
    }

    /// Checks every domain constraint that does not need the data.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let p = &self.problem;
        self.penalty(p.penalty, p.mu)?;
        self.omega()?;
        if !(p.kappa.is_finite()) {
            return bad(format!("kappa must be finite, got {}", p.kappa));
        }
        if let DataSource::Synth(spec) = &p.data {
            spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        match (p.scenario, &p.blur) {
            (ScenarioKind::Blurred, None) => return bad("blurred scenario needs a blur section".into()),
            (ScenarioKind::Noisy, Some(_)) => return bad("blur section given for a noisy scenario".into()),
            (_, Some(b)) if !(b.psf_sigma > 0.0) || !(b.noise_sigma >= 0.0) => {
                return bad("blur psf_sigma must be > 0 and noise_sigma >= 0".into())
            }
            _ => {}
        }
        if p.scenario == ScenarioKind::Blurred {
            if let DataSource::Matrix { frame: None, .. } = p.data {
                return bad("blurred matrix data needs a frame size".into());
            }
        }
        let check_tau = |tau: f64| {
            if tau > 0.0 && tau < GOLDEN_RATIO {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "tau must lie in (0, {GOLDEN_RATIO}), got {tau}"
                )))
            }
        };
        if self.solver.admm.is_none() && self.solver.palm.is_none() {
            return bad("no solver selected".into());
        }
        if let Some(a) = &self.solver.admm {
            check_tau(a.tau)?;
            // the β̄ check needs the operator, so it runs after loading
            self.admm_config(a)
                .validate(0.0)
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(s) = &self.solver.palm {
            self.palm_config(s)
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        for tau in self.sweep_taus() {
            check_tau(tau)?;
        }
        for kind in self.sweep_penalties() {
            for mu in self.sweep_mus() {
                self.penalty(kind, mu)?;
            }
        }
        Ok(())
    }
}
