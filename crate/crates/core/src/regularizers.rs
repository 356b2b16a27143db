//! Sparsity penalties, their proximal maps, and the low-rank constraint set.
//!
//! A [`Penalty`] represents `Φ(S) = μ Σ_ij φ(s_ij)`. For SCAD, MCP and the
//! hard-thresholding penalty the weight `μ` also appears inside `φ`, so it
//! enters `Φ` twice; this is what makes their tails equal to `(α+1)μ²/2`,
//! `αμ²/2` and `μ²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::Mat;

/// Entry-wise penalty shape `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltyKind {
    /// `|t|^p`, `0 < p <= 1`.
    Bridge { p: f64 },
    /// `α|t| / (1 + α|t|)`.
    Fraction { alpha: f64 },
    /// `log(1 + α|t|)`.
    Logistic { alpha: f64 },
    /// Smoothly clipped absolute deviation, `α > 2`.
    Scad { alpha: f64 },
    /// Minimax concave penalty, `α > 0`.
    Mcp { alpha: f64 },
    /// `μ - (μ - |t|)₊² / μ`.
    Hard,
}

impl PenaltyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PenaltyKind::Bridge { .. } => "bridge",
            PenaltyKind::Fraction { .. } => "fraction",
            PenaltyKind::Logistic { .. } => "logistic",
            PenaltyKind::Scad { .. } => "scad",
            PenaltyKind::Mcp { .. } => "mcp",
            PenaltyKind::Hard => "hard",
        }
    }

    /// The shape parameter (`p` or `α`); `None` for the hard penalty.
    pub fn param(&self) -> Option<f64> {
        match *self {
            PenaltyKind::Bridge { p } => Some(p),
            PenaltyKind::Fraction { alpha }
            | PenaltyKind::Logistic { alpha }
            | PenaltyKind::Scad { alpha }
            | PenaltyKind::Mcp { alpha } => Some(alpha),
            PenaltyKind::Hard => None,
        }
    }
}

/// Separable penalty `Φ(S) = μ Σ φ(s_ij)` with validated parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    kind: PenaltyKind,
    mu: f64,
}

impl Penalty {
    pub fn new(kind: PenaltyKind, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("mu must be positive, got {mu}")));
        }
        let ok = match kind {
            PenaltyKind::Bridge { p } => p > 0.0 && p <= 1.0,
            PenaltyKind::Fraction { alpha } | PenaltyKind::Logistic { alpha } | PenaltyKind::Mcp { alpha } => {
                alpha > 0.0 && alpha.is_finite()
            }
            PenaltyKind::Scad { alpha } => alpha > 2.0 && alpha.is_finite(),
            PenaltyKind::Hard => true,
        };
        if !ok {
            return Err(Error::Domain(format!(
                "invalid {} parameter {:?}",
                kind.name(),
                kind.param()
            )));
        }
        Ok(Self { kind, mu })
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `φ(t)`, without the outer factor `μ`.
    pub fn phi(&self, t: f64) -> f64 {
        let u = t.abs();
        let mu = self.mu;
        match self.kind {
            PenaltyKind::Bridge { p } => {
                if p == 1.0 {
                    u
                } else {
                    u.powf(p)
                }
            }
            PenaltyKind::Fraction { alpha } => alpha * u / (1.0 + alpha * u),
            PenaltyKind::Logistic { alpha } => (alpha * u).ln_1p(),
            PenaltyKind::Scad { alpha } => {
                if u <= mu {
                    u
                } else if u < alpha * mu {
                    mu + (alpha * (u - mu) - (u * u - mu * mu) / (2.0 * mu)) / (alpha - 1.0)
                } else {
                    0.5 * (alpha + 1.0) * mu
                }
            }
            PenaltyKind::Mcp { alpha } => {
                if u < alpha * mu {
                    u - u * u / (2.0 * alpha * mu)
                } else {
                    0.5 * alpha * mu
                }
            }
            PenaltyKind::Hard => {
                let d = (mu - u).max(0.0);
                mu - d * d / mu
            }
        }
    }

    /// `Φ(S)`.
    pub fn value(&self, s: &Mat) -> f64 {
        self.mu * s.iter().map(|&t| self.phi(t)).sum::<f64>()
    }

    /// `liminf Φ(S)` as `‖S‖_F → ∞` (`+∞` for coercive penalties).
    pub fn h0_lower_bound(&self) -> f64 {
        let mu = self.mu;
        match self.kind {
            PenaltyKind::Bridge { .. } | PenaltyKind::Logistic { .. } => f64::INFINITY,
            PenaltyKind::Fraction { .. } => mu,
            PenaltyKind::Scad { alpha } => 0.5 * (alpha + 1.0) * mu * mu,
            PenaltyKind::Mcp { alpha } => 0.5 * alpha * mu * mu,
            PenaltyKind::Hard => mu * mu,
        }
    }

    /// A global minimiser of `μ φ(s) + (β/2)(s - v)²`.
    ///
    /// Works on `|v|`, collects every candidate that can be a minimiser on
    /// `[0, |v|]` and keeps the one with the smallest objective; among equal
    /// objectives the smallest magnitude wins.
    pub fn prox(&self, v: f64, beta: f64) -> f64 {
        debug_assert!(beta > 0.0);
        let a = v.abs();
        if a == 0.0 || !a.is_finite() {
            return if a.is_finite() { 0.0 } else { v };
        }
        let w = self.mu / beta;
        let mut cands = Vec::with_capacity(8);
        cands.push(0.0);
        self.push_candidates(a, w, &mut cands);
        let mut cands: Vec<f64> = cands
            .into_iter()
            .filter(|s| s.is_finite())
            .map(|s| s.clamp(0.0, a))
            .collect();
        cands.sort_by(f64::total_cmp);

        let obj = |s: f64| w * self.phi(s) + 0.5 * (s - a) * (s - a);
        let mut best = 0.0;
        let mut best_val = obj(0.0);
        for s in cands {
            let val = obj(s);
            if val < best_val {
                best = s;
                best_val = val;
            }
        }
        best.copysign(v)
    }

    /// Entry-wise [`prox`](Self::prox).
    pub fn prox_matrix(&self, v: &Mat, beta: f64) -> Mat {
        v.map(|x| self.prox(x, beta))
    }

    fn push_candidates(&self, a: f64, w: f64, out: &mut Vec<f64>) {
        let mu = self.mu;
        match self.kind {
            PenaltyKind::Bridge { p: 1.0 } => out.push((a - w).max(0.0)),
            PenaltyKind::Bridge { p } => {
                if let Some(s) = bridge_root(a, w, p) {
                    out.push(s);
                }
            }
            PenaltyKind::Fraction { alpha } => {
                // (s - a)(1 + αs)² + wα = 0, monic after dividing by α²
                let b = 2.0 / alpha - a;
                let c = (1.0 - 2.0 * a * alpha) / (alpha * alpha);
                let d = (w * alpha - a) / (alpha * alpha);
                let grad = |s: f64| s - a + w * alpha / (1.0 + alpha * s).powi(2);
                let hess = |s: f64| 1.0 - 2.0 * w * alpha * alpha / (1.0 + alpha * s).powi(3);
                for r in cubic_real_roots(b, c, d) {
                    if r > 0.0 && r <= a {
                        out.push(newton_polish(r, a, grad, hess));
                    }
                }
            }
            PenaltyKind::Logistic { alpha } => {
                // α s² + (1 - αa) s + (wα - a) = 0
                let grad = |s: f64| s - a + w * alpha / (1.0 + alpha * s);
                let hess = |s: f64| 1.0 - w * alpha * alpha / (1.0 + alpha * s).powi(2);
                for r in quadratic_real_roots(alpha, 1.0 - alpha * a, w * alpha - a) {
                    if r > 0.0 && r <= a {
                        out.push(newton_polish(r, a, grad, hess));
                    }
                }
            }
            PenaltyKind::Scad { alpha } => {
                let am = alpha * mu;
                push_piece(out, a, 0.0, mu, 1.0, a - w);
                push_piece(
                    out,
                    a,
                    mu,
                    am,
                    1.0 - w / (mu * (alpha - 1.0)),
                    a - w * alpha / (alpha - 1.0),
                );
                push_piece(out, a, am, f64::INFINITY, 1.0, a);
            }
            PenaltyKind::Mcp { alpha } => {
                let am = alpha * mu;
                push_piece(out, a, 0.0, am, 1.0 - w / am, a - w);
                push_piece(out, a, am, f64::INFINITY, 1.0, a);
            }
            PenaltyKind::Hard => {
                push_piece(out, a, 0.0, mu, 1.0 - 2.0 * w / mu, a - 2.0 * w);
                push_piece(out, a, mu, f64::INFINITY, 1.0, a);
            }
        }
    }
}

/// Candidates from one quadratic piece `[lo, hi]` whose stationarity
/// condition reads `k s = r`: both endpoints and, if the piece is convex,
/// the clipped stationary point.
fn push_piece(out: &mut Vec<f64>, a: f64, lo: f64, hi: f64, k: f64, r: f64) {
    if lo > a {
        return;
    }
    let hi = hi.min(a);
    out.push(lo);
    out.push(hi);
    if k > 0.0 {
        out.push((r / k).clamp(lo, hi));
    }
}

/// Local minimiser of `w s^p + (s - a)²/2` on `(0, a)` for `p < 1`, if any.
///
/// The stationarity map `g(s) = s + w p s^{p-1} - a` is convex with its
/// minimum at `s* = (w p (1-p))^{1/(2-p)}`; the minimiser is the root of `g`
/// to the right of `s*`, found by bisection.
fn bridge_root(a: f64, w: f64, p: f64) -> Option<f64> {
    let g = |s: f64| s + w * p * s.powf(p - 1.0) - a;
    let s_star = (w * p * (1.0 - p)).powf(1.0 / (2.0 - p));
    if s_star >= a || g(s_star) > 0.0 {
        return None;
    }
    // g is increasing and convex on [s*, a], so Newton from the right end
    // moves monotonically left; bisection guards the bracket.
    let dg = |s: f64| 1.0 + w * p * (p - 1.0) * s.powf(p - 2.0);
    let (mut lo, mut hi) = (s_star, a);
    let mut x = a;
    for _ in 0..100 {
        let gx = g(x);
        if gx == 0.0 {
            return Some(x);
        }
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = dg(x);
        let mut next = if d > 0.0 { x - gx / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}

/// A few guarded Newton steps on the stationarity equation.
fn newton_polish(mut s: f64, a: f64, grad: impl Fn(f64) -> f64, hess: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..3 {
        let g = grad(s);
        let h = hess(s);
        if h == 0.0 || !h.is_finite() {
            break;
        }
        let next = s - g / h;
        if !(next > 0.0 && next <= a) || grad(next).abs() >= g.abs() {
            break;
        }
        s = next;
    }
    s
}

/// Real roots of `a x² + b x + c` (`a != 0`), computed stably.
fn quadratic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Real roots of the monic cubic `x³ + b x² + c x + d` via the depressed
/// form; complex pairs with imaginary part below `1e-10` count as real.
fn cubic_real_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = Vec::with_capacity(3);
    if p == 0.0 {
        roots.push((-q).cbrt());
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        roots.push(u + v);
        let imag = 0.5 * 3f64.sqrt() * (u - v).abs();
        if imag < 1e-10 {
            roots.push(-(u + v) / 2.0);
        }
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        for k in 0..3 {
            roots.push(m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos());
        }
    }
    roots.into_iter().map(|y| y - shift).collect()
}

/// The convex set `{L : ‖L‖∞ <= l}`, optionally intersected with
/// `{L : all columns equal}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSet {
    pub radius: f64,
    #[serde(default = "default_true")]
    pub equal_columns: bool,
}

fn default_true() -> bool {
    true
}

impl Default for ConstraintSet {
    fn default() -> Self {
        Self {
            radius: 1.0,
            equal_columns: true,
        }
    }
}

impl ConstraintSet {
    pub fn new(radius: f64, equal_columns: bool) -> Result<Self> {
        let set = Self { radius, equal_columns };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "box radius must be positive, got {}",
                self.radius
            )))
        }
    }

    /// Euclidean projection.
    ///
    /// With equal columns this is the row mean clipped to `[-l, l]` and
    /// broadcast across columns.
    pub fn project(&self, x: &Mat) -> Mat {
        let l = self.radius;
        if !self.equal_columns {
            return x.map(|v| v.clamp(-l, l));
        }
        let (m, n) = x.shape();
        let mut out = Mat::zeros(m, n);
        if n == 0 {
            return out;
        }
        for i in 0..m {
            let row = x.row(i);
            let first = row[0];
            let mean = if row.iter().all(|&v| v == first) {
                first
            } else {
                row.sum() / n as f64
            };
            out.row_mut(i).fill(mean.clamp(-l, l));
        }
        out
    }

    /// Membership with absolute slack `tol`.
    pub fn contains(&self, x: &Mat, tol: f64) -> bool {
        let l = self.radius + tol;
        if x.iter().any(|v| !(v.abs() <= l)) {
            return false;
        }
        if self.equal_columns && x.ncols() > 1 {
            let first = x.column(0);
            for j in 1..x.ncols() {
                if (x.column(j) - first).amax() > tol {
                    return false;
                }
            }
        }
        true
    }
}
