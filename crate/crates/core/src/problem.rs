//! Problem data, objective, stationarity measure and the safe start point.

use crate::error::{check_shape, Error, Result};
use crate::operators::{LinearMap, Mat};
use crate::regularizers::{ConstraintSet, Penalty};

/// Slack used when testing `L ∈ Ω` for objective evaluation.
pub const OMEGA_TOL: f64 = 1e-12;

/// `min δ_Ω(L) + Φ(S) + ½‖D − A[B(L) + C(S)]‖²`.
#[derive(Debug, Clone)]
pub struct Problem {
    data: Mat,
    a_map: LinearMap,
    b_map: LinearMap,
    c_map: LinearMap,
    omega: ConstraintSet,
    penalty: Penalty,
    gram_bounds: (f64, f64),
}

impl Problem {
    /// Problem with `B = C = I`.
    pub fn new(data: Mat, a_map: LinearMap, omega: ConstraintSet, penalty: Penalty) -> Result<Self> {
        Self::with_maps(data, a_map, LinearMap::Identity, LinearMap::Identity, omega, penalty)
    }

    pub fn with_maps(
        data: Mat,
        a_map: LinearMap,
        b_map: LinearMap,
        c_map: LinearMap,
        omega: ConstraintSet,
        penalty: Penalty,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Domain("data matrix is empty".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("data matrix has non-finite entries".into()));
        }
        omega.validate()?;
        for map in [&a_map, &b_map, &c_map] {
            map.check_dims(data.nrows())?;
        }
        for (name, map) in [("B", &b_map), ("C", &c_map)] {
            if !(map.gram_eigen_bounds().0 > 0.0) {
                return Err(Error::Domain(format!("{name} must be injective")));
            }
        }
        let gram_bounds = a_map.gram_eigen_bounds();
        Ok(Self {
            data,
            a_map,
            b_map,
            c_map,
            omega,
            penalty,
            gram_bounds,
        })
    }

    pub fn data(&self) -> &Mat {
        &self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.shape()
    }

    pub fn a_map(&self) -> &LinearMap {
        &self.a_map
    }

    pub fn b_map(&self) -> &LinearMap {
        &self.b_map
    }

    pub fn c_map(&self) -> &LinearMap {
        &self.c_map
    }

    pub fn omega(&self) -> &ConstraintSet {
        &self.omega
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    /// `(λ_min, λ_max)` of `A*A`.
    pub fn gram_bounds(&self) -> (f64, f64) {
        self.gram_bounds
    }

    pub fn has_identity_splitting(&self) -> bool {
        self.b_map.is_identity() && self.c_map.is_identity()
    }

    /// Copy of this problem with a different penalty.
    pub fn with_penalty(&self, penalty: Penalty) -> Self {
        Self {
            penalty,
            ..self.clone()
        }
    }

    /// `B(L) + C(S)`.
    pub fn combine(&self, l: &Mat, s: &Mat) -> Result<Mat> {
        check_shape(self.shape(), l.shape())?;
        check_shape(self.shape(), s.shape())?;
        Ok(self.b_map.apply(l)? + self.c_map.apply(s)?)
    }

    /// `A*(A(B(L) + C(S)) − D)`, the shared part of both block gradients.
    pub fn data_gradient(&self, l: &Mat, s: &Mat) -> Result<Mat> {
        let fit = self.a_map.apply(&self.combine(l, s)?)? - &self.data;
        self.a_map.apply_adjoint(&fit)
    }

    /// `F(L, S)`; `+∞` when `L ∉ Ω`.
    pub fn objective(&self, l: &Mat, s: &Mat) -> Result<f64> {
        let fit = self.a_map.apply(&self.combine(l, s)?)? - &self.data;
        if !self.omega.contains(l, OMEGA_TOL) {
            return Ok(f64::INFINITY);
        }
        Ok(self.penalty.value(s) + 0.5 * fit.norm_squared())
    }

    /// Prox-gradient stationarity residual with step `t`:
    /// `‖L − P_Ω(L − t G_L)‖/t + ‖S − prox_{tΦ}(S − t G_S)‖/t`.
    ///
    /// Zero exactly at points satisfying the first-order conditions.
    pub fn stationarity_residual(&self, l: &Mat, s: &Mat, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("residual step must be positive, got {t}")));
        }
        let g = self.data_gradient(l, s)?;
        let g_l = self.b_map.apply_adjoint(&g)?;
        let g_s = self.c_map.apply_adjoint(&g)?;
        let l_step = self.omega.project(&(l - &g_l * t));
        let s_step = self.penalty.prox_matrix(&(s - &g_s * t), 1.0 / t);
        Ok(((l - l_step).norm() + (s - s_step).norm()) / t)
    }

    /// Residual with the default step `1/λ_max`.
    pub fn stationarity(&self, l: &Mat, s: &Mat) -> Result<f64> {
        self.stationarity_residual(l, s, 1.0 / self.gram_bounds.1)
    }

    /// Start point `L⁰ = P_Ω(κD)`, `S⁰ = 0`, `Z⁰ = B(L⁰)`,
    /// `Λ⁰ = A*(D − A(Z⁰))`.
    ///
    /// `beta` is left at 1; solvers overwrite it from their own policy.
    pub fn initialize(&self, kappa: f64) -> Result<SolverState> {
        if !kappa.is_finite() {
            return Err(Error::Domain(format!("kappa must be finite, got {kappa}")));
        }
        let (m, n) = self.shape();
        let l = self.omega.project(&(&self.data * kappa));
        let z = self.b_map.apply(&l)?;
        let lambda = self.a_map.apply_adjoint(&(&self.data - self.a_map.apply(&z)?))?;
        Ok(SolverState {
            l,
            s: Mat::zeros(m, n),
            z,
            lambda,
            beta: 1.0,
            ns: 0,
            succ_chg_prev: f64::INFINITY,
        })
    }

    /// `‖B(L) + C(S) − Z‖_F`.
    pub fn constraint_violation(&self, state: &SolverState) -> Result<f64> {
        check_shape(self.shape(), state.z.shape())?;
        Ok((self.combine(&state.l, &state.s)? - &state.z).norm())
    }

    /// Tests `½‖D − A(B(P_Ω(κD)))‖² < liminf Φ`, which makes the start point
    /// of [`initialize`](Self::initialize) satisfy the boundedness premise.
    pub fn check_init_condition(&self, kappa: f64) -> Result<InitCheck> {
        let l0 = self.omega.project(&(&self.data * kappa));
        let fit = &self.data - self.a_map.apply(&self.b_map.apply(&l0)?)?;
        let lhs = 0.5 * fit.norm_squared();
        let h0 = self.penalty.h0_lower_bound();
        Ok(InitCheck {
            passes: lhs < h0,
            lhs,
            h0,
            margin: h0 - lhs,
        })
    }
}

/// Outcome of [`Problem::check_init_condition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitCheck {
    pub passes: bool,
    /// `½‖D − A(B(P_Ω(κD)))‖²`, equal to the potential at the start point.
    pub lhs: f64,
    pub h0: f64,
    /// `h0 − lhs`; positive when the condition holds.
    pub margin: f64,
}

/// ADMM iterate `(L, S, Z, Λ)` with the penalty parameter and the counters
/// used by the adaptive-β rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub l: Mat,
    pub s: Mat,
    pub z: Mat,
    pub lambda: Mat,
    pub beta: f64,
    pub ns: usize,
    pub succ_chg_prev: f64,
}
