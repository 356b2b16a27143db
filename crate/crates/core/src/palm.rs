//! Proximal alternating linearized minimisation on `(L, S)`, used as the
//! baseline for comparisons.

use std::time::Instant;

use crate::admm::MONOTONE_TOL;
use crate::error::{Error, Result};
use crate::operators::Mat;
use crate::problem::Problem;
use crate::report::{IterRecord, RunReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalmConfig {
    /// Steps are `1/c` with `c = λ_max / step_factor`.
    pub step_factor: f64,
    pub tol_p: f64,
    pub max_iter: usize,
    pub min_iter: usize,
}

impl Default for PalmConfig {
    fn default() -> Self {
        Self {
            step_factor: 0.99,
            tol_p: 1e-4,
            max_iter: 5000,
            min_iter: 0,
        }
    }
}

impl PalmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_factor > 0.0 && self.step_factor < 1.0) {
            return Err(Error::Domain(format!(
                "step_factor must lie in (0, 1), got {}",
                self.step_factor
            )));
        }
        if !(self.tol_p > 0.0) || self.max_iter == 0 {
            return Err(Error::Domain("PALM needs a positive tolerance and max_iter".into()));
        }
        Ok(())
    }

    /// Proximal constant `c = d = λ_max / step_factor`.
    pub fn prox_constant(&self, lambda_max: f64) -> f64 {
        lambda_max / self.step_factor
    }
}

/// One Gauss-Seidel sweep: projected gradient on `L`, then a proximal
/// gradient step on `S` using the new `L`.
pub fn palm_step(problem: &Problem, config: &PalmConfig, l: &Mat, s: &Mat) -> Result<(Mat, Mat)> {
    if !problem.has_identity_splitting() {
        return Err(Error::Unsupported("PALM requires B = C = identity".into()));
    }
    let c = config.prox_constant(problem.gram_bounds().1);
    let a = problem.a_map();
    let grad = |l: &Mat, s: &Mat| -> Result<Mat> { a.apply_adjoint(&(a.apply(&(l + s))? - problem.data())) };

    let l_next = problem.omega().project(&(l - grad(l, s)? / c));
    let s_next = problem.penalty().prox_matrix(&(s - grad(&l_next, s)? / c), c);
    Ok((l_next, s_next))
}

/// Runs PALM from `(l0, s0)` until
/// `(‖ΔL‖+‖ΔS‖)/(‖L‖+‖S‖+1) < tol_p` or `max_iter`.
pub fn solve_palm(problem: &Problem, config: &PalmConfig, l0: &Mat, s0: &Mat) -> Result<RunReport> {
    let start = Instant::now();
    config.validate()?;
    let mut l = l0.clone();
    let mut s = s0.clone();
    let mut trace = vec![IterRecord {
        k: 0,
        objective: problem.objective(&l, &s)?,
        potential: None,
        violation: None,
        succ_chg: f64::INFINITY,
        beta: None,
    }];
    let mut max_norm = l.norm() + s.norm();
    let mut violations = 0;
    let mut worst_increase: f64 = 0.0;
    let mut converged = false;
    let mut k = 0;

    while k < config.max_iter {
        k += 1;
        let (ln, sn) = palm_step(problem, config, &l, &s)?;
        let change = (&ln - &l).norm() + (&sn - &s).norm();
        let rel = change / (ln.norm() + sn.norm() + 1.0);
        let obj = problem.objective(&ln, &sn)?;
        let prev = trace.last().expect("trace starts with k = 0").objective;
        if obj - prev > MONOTONE_TOL {
            violations += 1;
        }
        worst_increase = worst_increase.max(obj - prev);
        trace.push(IterRecord {
            k,
            objective: obj,
            potential: None,
            violation: None,
            succ_chg: change,
            beta: None,
        });
        l = ln;
        s = sn;
        max_norm = max_norm.max(l.norm() + s.norm());
        if rel < config.tol_p && k >= config.min_iter {
            converged = true;
            break;
        }
    }

    let final_objective = problem.objective(&l, &s)?;
    let final_stationarity = problem.stationarity(&l, &s)?;
    Ok(RunReport {
        solver: "palm".into(),
        iterations: k,
        converged,
        trace,
        l,
        s,
        z: None,
        lambda: None,
        final_beta: None,
        final_objective,
        final_stationarity,
        max_iterate_norm: max_norm,
        monotone_violations: violations,
        worst_increase,
        min_decrease_slack: None,
        elapsed: start.elapsed(),
    })
}
