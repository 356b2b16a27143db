//! ADMM with a general dual step-size `τ ∈ (0, (1+√5)/2)` for
//!
//! ```text
//! min δ_Ω(L) + Φ(S) + ½‖D − A(Z)‖²   s.t.  L + S = Z
//! ```
//!
//! Each iteration minimises the augmented Lagrangian over `L`, `S` and `Z`
//! in turn and then moves the multiplier by `−τβ(L + S − Z)`. For `β` above
//! [`beta_bar`] the potential `Θ_{τ,β} = L_β + θ(τ) β ‖L + S − Z‖²` is
//! non-increasing from the first iterate on; [`solve`] monitors that.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Problem, SolverState, OMEGA_TOL};
use crate::report::{IterRecord, RunReport};

/// `(1 + √5) / 2`, the open upper limit for `τ`.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Allowed rise of a monotone quantity before it counts as a violation.
pub const MONOTONE_TOL: f64 = 1e-10;

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < GOLDEN_RATIO {
        Ok(())
    } else {
        Err(Error::Domain(format!("tau must lie in (0, golden ratio), got {tau}")))
    }
}

/// `max{1/τ, τ²/(1+τ−τ²)}`.
fn dual_factor(tau: f64) -> f64 {
    (1.0 / tau).max(tau * tau / (1.0 + tau - tau * tau))
}

/// `θ(τ) = max{1−τ, (τ−1)τ²/(1+τ−τ²)}`.
pub fn theta(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok((1.0 - tau).max((tau - 1.0) * tau * tau / (1.0 + tau - tau * tau)))
}

/// Penalty threshold above which the potential decreases and the iterates
/// stay bounded.
pub fn beta_bar(tau: f64, lambda_min: f64, lambda_max: f64) -> Result<f64> {
    check_tau(tau)?;
    let first = (1.0 / tau).max(tau) * lambda_max;
    let disc = lambda_min * lambda_min + dual_factor(tau) * 8.0 * lambda_max * lambda_max;
    let second = -0.5 * lambda_min + 0.5 * disc.sqrt();
    Ok(first.max(second))
}

/// Coefficient `C_Z = (λ_min+β)/2 − max{1/τ, τ²/(1+τ−τ²)} λ_max²/β` on
/// `‖Z^{k+1} − Z^k‖²` in the per-step potential decrease.
pub fn z_decrease_coefficient(tau: f64, beta: f64, lambda_min: f64, lambda_max: f64) -> f64 {
    0.5 * (lambda_min + beta) - dual_factor(tau) * lambda_max * lambda_max / beta
}

/// Constants of the adaptive penalty rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicParams {
    /// Start at `init_factor · β̄`.
    pub init_factor: f64,
    /// Multiplier applied on each increase.
    pub growth: f64,
    /// Increases stop once `β > cap_factor · β̄`.
    pub cap_factor: f64,
    /// Increase when `n_s >= ns_ratio · k`.
    pub ns_ratio: f64,
    /// ... or when `‖L‖+‖Z‖` exceeds this.
    pub fnorm_cap: f64,
    /// `n_s` grows when `succ_chg^k > decay · succ_chg^{k-1}`.
    pub decay: f64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        Self {
            init_factor: 0.6,
            growth: 1.1,
            cap_factor: 1.01,
            ns_ratio: 0.3,
            fnorm_cap: 1e10,
            decay: 0.99,
        }
    }
}

/// How the penalty parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaPolicy {
    /// Constant `β`. With `guaranteed`, `β >= 1.0001 β̄` is enforced.
    Fixed {
        beta: f64,
        guaranteed: bool,
    },
    Heuristic(HeuristicParams),
}

impl Default for BetaPolicy {
    fn default() -> Self {
        BetaPolicy::Heuristic(HeuristicParams::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    pub tau: f64,
    pub beta_policy: BetaPolicy,
    pub tol_a1: f64,
    pub tol_a2: f64,
    pub max_iter: usize,
    pub min_iter: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            tau: 0.8,
            beta_policy: BetaPolicy::default(),
            tol_a1: 1e-4,
            tol_a2: 5e-3,
            max_iter: 5000,
            min_iter: 0,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self, beta_bar: f64) -> Result<()> {
        check_tau(self.tau)?;
        if !(self.tol_a1 > 0.0 && self.tol_a2 > 0.0) {
            return Err(Error::Domain("ADMM tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be positive".into()));
        }
        match self.beta_policy {
            BetaPolicy::Fixed { beta, guaranteed } => {
                if !(beta > 0.0) || !beta.is_finite() {
                    return Err(Error::Domain(format!("beta must be positive, got {beta}")));
                }
                if guaranteed && beta < 1.0001 * beta_bar {
                    return Err(Error::Domain(format!(
                        "beta {beta} is below the convergence threshold {beta_bar}"
                    )));
                }
            }
            BetaPolicy::Heuristic(h) => {
                if !(h.init_factor > 0.0 && h.growth > 1.0 && h.cap_factor > 0.0 && h.ns_ratio >= 0.0) {
                    return Err(Error::Domain("invalid heuristic beta parameters".into()));
                }
            }
        }
        Ok(())
    }

    /// Initial penalty parameter for this policy.
    pub fn initial_beta(&self, beta_bar: f64) -> f64 {
        match self.beta_policy {
            BetaPolicy::Fixed { beta, .. } => beta,
            BetaPolicy::Heuristic(h) => h.init_factor * beta_bar,
        }
    }
}

/// `L_β(L, S, Z, Λ)`; `+∞` when `L ∉ Ω`.
pub fn augmented_lagrangian(problem: &Problem, beta: f64, state: &SolverState) -> Result<f64> {
    let r = problem.combine(&state.l, &state.s)? - &state.z;
    if !problem.omega().contains(&state.l, OMEGA_TOL) {
        return Ok(f64::INFINITY);
    }
    let fit = problem.data() - problem.a_map().apply(&state.z)?;
    Ok(
        problem.penalty().value(&state.s) + 0.5 * fit.norm_squared() - state.lambda.dot(&r)
            + 0.5 * beta * r.norm_squared(),
    )
}

/// `Θ_{τ,β} = L_β + θ(τ) β ‖B(L)+C(S)−Z‖²`.
pub fn potential(problem: &Problem, tau: f64, beta: f64, state: &SolverState) -> Result<f64> {
    let th = theta(tau)?;
    let lag = augmented_lagrangian(problem, beta, state)?;
    let v = problem.constraint_violation(state)?;
    Ok(lag + th * beta * v * v)
}

/// One pass of the L-, S-, Z- and multiplier updates at `state.beta`.
///
/// Requires `B = C = I`. The `n_s` / `succ_chg` counters are carried over
/// untouched.
pub fn admm_step(problem: &Problem, config: &AdmmConfig, state: &SolverState) -> Result<SolverState> {
    if !problem.has_identity_splitting() {
        return Err(Error::Unsupported("ADMM requires B = C = identity".into()));
    }
    let beta = state.beta;
    let tau = config.tau;
    let shifted = &state.z + &state.lambda / beta;

    let l = problem.omega().project(&(&shifted - &state.s));
    let s = problem.penalty().prox_matrix(&(&shifted - &l), beta);

    let a = problem.a_map();
    let ls = &l + &s;
    let rhs = a.apply_adjoint(problem.data())? - &state.lambda + &ls * beta;
    let z = a.solve_z_system_from(beta, &rhs, Some(&state.z))?;

    let lambda = &state.lambda - (&ls - &z) * (tau * beta);
    Ok(SolverState {
        l,
        s,
        z,
        lambda,
        beta,
        ns: state.ns,
        succ_chg_prev: state.succ_chg_prev,
    })
}

/// Adaptive penalty rule, applied after iteration `k` (1-based).
///
/// `n_s` grows when the successive change fails to shrink by the decay
/// factor; `β` grows while `β <= cap·β̄` and either `n_s >= ratio·k` or the
/// iterates blow past `fnorm_cap`.
pub fn update_beta_heuristic(
    params: &HeuristicParams,
    beta_bar: f64,
    state: &mut SolverState,
    k: usize,
    succ_chg: f64,
    fnorm: f64,
) {
    if succ_chg > params.decay * state.succ_chg_prev {
        state.ns += 1;
    }
    state.succ_chg_prev = succ_chg;
    let stalled = state.ns as f64 >= params.ns_ratio * k as f64;
    if state.beta <= params.cap_factor * beta_bar && (stalled || fnorm > params.fnorm_cap) {
        state.beta *= params.growth;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Continue,
    Stop,
}

/// Two-stage relative-change test: `(L, Z)` first, then `(S, Λ)`.
pub fn check_termination(prev: &SolverState, state: &SolverState, config: &AdmmConfig) -> Termination {
    let stage1 = ((&state.l - &prev.l).norm() + (&state.z - &prev.z).norm()) / (state.l.norm() + state.z.norm() + 1.0);
    if !(stage1 < config.tol_a1) {
        return Termination::Continue;
    }
    let stage2 = ((&state.s - &prev.s).norm() + (&state.lambda - &prev.lambda).norm())
        / (state.s.norm() + state.lambda.norm() + 1.0);
    if stage2 < config.tol_a2 {
        Termination::Stop
    } else {
        Termination::Continue
    }
}

fn iterate_norm(s: &SolverState) -> f64 {
    s.l.norm() + s.s.norm() + s.z.norm() + s.lambda.norm()
}

/// Runs ADMM from `init` until the two-stage test passes (after at least
/// `min_iter` iterations) or `max_iter` is reached.
pub fn solve(problem: &Problem, config: &AdmmConfig, init: &SolverState) -> Result<RunReport> {
    let start = Instant::now();
    let (lmin, lmax) = problem.gram_bounds();
    let bb = beta_bar(config.tau, lmin, lmax)?;
    config.validate(bb)?;
    let sigma = problem.b_map().gram_eigen_bounds().0;

    let mut state = init.clone();
    state.beta = config.initial_beta(bb);
    state.ns = 0;
    state.succ_chg_prev = f64::INFINITY;

    let mut trace = Vec::with_capacity(config.max_iter.min(4096) + 1);
    trace.push(IterRecord {
        k: 0,
        objective: problem.objective(&state.l, &state.s)?,
        potential: Some(potential(problem, config.tau, state.beta, &state)?),
        violation: Some(problem.constraint_violation(&state)?),
        succ_chg: f64::INFINITY,
        beta: Some(state.beta),
    });

    let mut max_norm = iterate_norm(&state);
    let mut violations = 0;
    let mut worst_increase: f64 = 0.0;
    let mut min_slack: Option<f64> = None;
    let mut converged = false;
    let mut k = 0;

    while k < config.max_iter {
        k += 1;
        let beta_used = state.beta;
        let next = admm_step(problem, config, &state)?;
        let dl = (&next.l - &state.l).norm();
        let dz = (&next.z - &state.z).norm();
        let succ_chg = dl + dz;
        let fnorm = next.l.norm() + next.z.norm();

        let theta_next = potential(problem, config.tau, beta_used, &next)?;
        let prev = trace.last().expect("trace starts with k = 0");
        // Monotonicity holds from k = 1 on, and only while β is constant
        // across both steps involved.
        if k >= 2 && prev.beta == Some(beta_used) {
            if let Some(theta_prev) = prev.potential {
                let rise = theta_next - theta_prev;
                if rise > MONOTONE_TOL {
                    violations += 1;
                }
                worst_increase = worst_increase.max(rise);
                let guaranteed = 0.5 * sigma * beta_used * dl * dl
                    + z_decrease_coefficient(config.tau, beta_used, lmin, lmax) * dz * dz;
                let slack = (theta_prev - theta_next) - guaranteed;
                min_slack = Some(min_slack.map_or(slack, |m: f64| m.min(slack)));
            }
        }
        trace.push(IterRecord {
            k,
            objective: problem.objective(&next.l, &next.s)?,
            potential: Some(theta_next),
            violation: Some(problem.constraint_violation(&next)?),
            succ_chg,
            beta: Some(beta_used),
        });
        max_norm = max_norm.max(iterate_norm(&next));

        let stop = check_termination(&state, &next, config) == Termination::Stop;
        state = next;
        if stop && k >= config.min_iter {
            converged = true;
            break;
        }
        if let BetaPolicy::Heuristic(params) = &config.beta_policy {
            update_beta_heuristic(params, bb, &mut state, k, succ_chg, fnorm);
        }
    }

    let final_objective = problem.objective(&state.l, &state.s)?;
    let final_stationarity = problem.stationarity(&state.l, &state.s)?;
    Ok(RunReport {
        solver: format!("admm(tau={})", config.tau),
        iterations: k,
        converged,
        trace,
        final_beta: Some(state.beta),
        l: state.l,
        s: state.s,
        z: Some(state.z),
        lambda: Some(state.lambda),
        final_objective,
        final_stationarity,
        max_iterate_norm: max_norm,
        monotone_violations: violations,
        worst_increase,
        min_decrease_slack: min_slack,
        elapsed: start.elapsed(),
    })
}
