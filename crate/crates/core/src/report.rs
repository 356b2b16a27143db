use std::time::Duration;

use serde::Serialize;

use crate::operators::Mat;

/// One row of a solver trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterRecord {
    pub k: usize,
    pub objective: f64,
    /// Potential `Θ_{τ,β}`; ADMM only.
    pub potential: Option<f64>,
    /// `‖B(L)+C(S)−Z‖`; ADMM only.
    pub violation: Option<f64>,
    /// Successive change driving the stopping and β rules. Infinite at `k = 0`.
    pub succ_chg: f64,
    /// Penalty parameter that produced this iterate; ADMM only.
    pub beta: Option<f64>,
}

/// Result of one solver run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub solver: String,
    pub iterations: usize,
    pub converged: bool,
    /// Rows for `k = 0..=iterations`.
    pub trace: Vec<IterRecord>,
    pub l: Mat,
    pub s: Mat,
    pub z: Option<Mat>,
    pub lambda: Option<Mat>,
    pub final_beta: Option<f64>,
    pub final_objective: f64,
    pub final_stationarity: f64,
    /// `sup_k ‖L‖+‖S‖+‖Z‖+‖Λ‖` (PALM: `‖L‖+‖S‖`).
    pub max_iterate_norm: f64,
    /// Steps where the monitored quantity (ADMM: potential at constant β
    /// from `k = 1`; PALM: objective) rose by more than `1e-10`.
    pub monotone_violations: usize,
    /// Largest such rise, `0` when none.
    pub worst_increase: f64,
    /// ADMM at constant β: smallest slack of the per-step sufficient
    /// decrease inequality of the potential.
    pub min_decrease_slack: Option<f64>,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn objective_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.objective).collect()
    }

    pub fn potential_trace(&self) -> Vec<f64> {
        self.trace.iter().filter_map(|r| r.potential).collect()
    }
}

pub const TRACE_HEADER: &str = "k,objective,potential,violation,succ_chg,beta";

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// One CSV row per iteration; columns missing for a solver are left empty.
pub fn write_trace_csv<W: std::io::Write>(trace: &[IterRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.k,
            r.objective,
            opt(r.potential),
            opt(r.violation),
            r.succ_chg,
            opt(r.beta)
        )?;
    }
    Ok(())
}
