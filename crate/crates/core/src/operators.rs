//! Linear forward maps acting on `m x n` data matrices.
//!
//! Every column of a data matrix is one video frame of `frame_h x frame_w`
//! pixels stacked column-major, so pixel `(r, c)` of frame `j` lives at
//! `X[(r + c * frame_h, j)]`. The blur map applies the separable periodic
//! operator `Hr ⊗ Hc` to each column, i.e. `vec(Hc · F · Hrᵀ)` for a frame
//! `F`, where `Hc` (`frame_h x frame_h`) acts down the columns of the frame
//! and `Hr` (`frame_w x frame_w`) across its rows.

use nalgebra::DMatrix;

use crate::error::{check_shape, Error, Result};

pub type Mat = DMatrix<f64>;

/// Relative residual required from every Z-subproblem solve.
pub const Z_SOLVE_RTOL: f64 = 1e-9;

/// Relative tolerance for accepting a PSF as separable.
const RANK_ONE_RTOL: f64 = 1e-8;

/// Frame-wise periodic blur with cached circulant factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBlur {
    frame_h: usize,
    frame_w: usize,
    psf_sigma: f64,
    hr: Mat,
    hc: Mat,
    hr_gram: Mat,
    hc_gram: Mat,
}

impl FrameBlur {
    /// Builds the blur for a Gaussian PSF spanning the whole frame.
    pub fn gaussian(frame_h: usize, frame_w: usize, psf_sigma: f64) -> Result<Self> {
        let (psf, center) = gaussian_psf(frame_h, frame_w, psf_sigma)?;
        let (hr, hc) = kron_decomp_periodic(&psf, center)?;
        Ok(Self::from_factors(frame_h, frame_w, psf_sigma, hr, hc))
    }

    fn from_factors(frame_h: usize, frame_w: usize, psf_sigma: f64, hr: Mat, hc: Mat) -> Self {
        let hr_gram = hr.transpose() * &hr;
        let hc_gram = hc.transpose() * &hc;
        Self {
            frame_h,
            frame_w,
            psf_sigma,
            hr,
            hc,
            hr_gram,
            hc_gram,
        }
    }

    pub fn frame_h(&self) -> usize {
        self.frame_h
    }

    pub fn frame_w(&self) -> usize {
        self.frame_w
    }

    pub fn psf_sigma(&self) -> f64 {
        self.psf_sigma
    }

    /// Row factor, `frame_w x frame_w`.
    pub fn hr(&self) -> &Mat {
        &self.hr
    }

    /// Column factor, `frame_h x frame_h`.
    pub fn hc(&self) -> &Mat {
        &self.hc
    }

    fn pixels(&self) -> usize {
        self.frame_h * self.frame_w
    }

    fn per_frame(&self, x: &Mat, left: &Mat, right_t: &Mat) -> Result<Mat> {
        if x.nrows() != self.pixels() {
            return Err(Error::Shape {
                expected: (self.pixels(), x.ncols()),
                got: x.shape(),
            });
        }
        let mut out = Mat::zeros(x.nrows(), x.ncols());
        for j in 0..x.ncols() {
            let frame = Mat::from_column_slice(self.frame_h, self.frame_w, x.column(j).as_slice());
            let blurred = left * frame * right_t;
            out.column_mut(j).copy_from_slice(blurred.as_slice());
        }
        Ok(out)
    }
}

/// A linear map `R^{m x n} -> R^{m x n}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LinearMap {
    #[default]
    Identity,
    FrameBlur(FrameBlur),
}

impl LinearMap {
    pub fn frame_blur(frame_h: usize, frame_w: usize, psf_sigma: f64) -> Result<Self> {
        Ok(LinearMap::FrameBlur(FrameBlur::gaussian(frame_h, frame_w, psf_sigma)?))
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, LinearMap::Identity)
    }

    /// Checks that the map can act on an `m x n` matrix.
    pub fn check_dims(&self, rows: usize) -> Result<()> {
        match self {
            LinearMap::Identity => Ok(()),
            LinearMap::FrameBlur(b) if b.pixels() == rows => Ok(()),
            LinearMap::FrameBlur(b) => Err(Error::Domain(format!(
                "blur expects {} rows ({}x{} frames), data has {rows}",
                b.pixels(),
                b.frame_h,
                b.frame_w
            ))),
        }
    }

    pub fn apply(&self, x: &Mat) -> Result<Mat> {
        match self {
            LinearMap::Identity => Ok(x.clone()),
            LinearMap::FrameBlur(b) => b.per_frame(x, &b.hc, &b.hr.transpose()),
        }
    }

    pub fn apply_adjoint(&self, x: &Mat) -> Result<Mat> {
        match self {
            LinearMap::Identity => Ok(x.clone()),
            LinearMap::FrameBlur(b) => b.per_frame(x, &b.hc.transpose(), &b.hr),
        }
    }

    /// `A*A(X)`.
    pub fn apply_gram(&self, x: &Mat) -> Result<Mat> {
        match self {
            LinearMap::Identity => Ok(x.clone()),
            // Hr_gram is symmetric, so it is its own transpose.
            LinearMap::FrameBlur(b) => b.per_frame(x, &b.hc_gram, &b.hr_gram),
        }
    }

    /// Smallest and largest eigenvalues of `A*A`.
    ///
    /// For the Kronecker blur these are products of the extreme singular
    /// values of the two factors, squared.
    pub fn gram_eigen_bounds(&self) -> (f64, f64) {
        match self {
            LinearMap::Identity => (1.0, 1.0),
            LinearMap::FrameBlur(b) => {
                let sr = b.hr.clone().singular_values();
                let sc = b.hc.clone().singular_values();
                let lo = (sr.min() * sc.min()).powi(2);
                let hi = (sr.max() * sc.max()).powi(2);
                (lo.max(0.0), hi)
            }
        }
    }

    /// Solves `A*A(Z) + beta Z = rhs`.
    pub fn solve_z_system(&self, beta: f64, rhs: &Mat) -> Result<Mat> {
        self.solve_z_system_from(beta, rhs, None)
    }

    /// Same as [`solve_z_system`](Self::solve_z_system), warm-starting CG at
    /// `guess` when the map is not the identity.
    pub fn solve_z_system_from(&self, beta: f64, rhs: &Mat, guess: Option<&Mat>) -> Result<Mat> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        match self {
            LinearMap::Identity => Ok(rhs / (1.0 + beta)),
            LinearMap::FrameBlur(_) => {
                self.check_dims(rhs.nrows())?;
                if let Some(g) = guess {
                    check_shape(rhs.shape(), g.shape())?;
                }
                self.conjugate_gradient(beta, rhs, guess)
            }
        }
    }

    fn conjugate_gradient(&self, beta: f64, rhs: &Mat, guess: Option<&Mat>) -> Result<Mat> {
        let op = |x: &Mat| -> Result<Mat> { Ok(self.apply_gram(x)? + x * beta) };
        let tol = Z_SOLVE_RTOL * (1.0 + rhs.norm());
        let max_iter = 10 * rhs.nrows().max(1);

        let mut x = guess.cloned().unwrap_or_else(|| Mat::zeros(rhs.nrows(), rhs.ncols()));
        let mut r = rhs - op(&x)?;
        let mut rs = r.norm_squared();
        // Aim slightly below the contract so the recomputed residual passes.
        let target = (0.5 * tol).powi(2);
        let mut p = r.clone();
        let mut it = 0;
        while rs > target && it < max_iter {
            let ap = op(&p)?;
            let alpha = rs / p.dot(&ap);
            x += &p * alpha;
            r -= &ap * alpha;
            let rs_new = r.norm_squared();
            p = &r + &p * (rs_new / rs);
            rs = rs_new;
            it += 1;
        }
        let residual = (rhs - op(&x)?).norm();
        if residual <= tol {
            Ok(x)
        } else {
            Err(Error::CgNotConverged {
                iterations: it,
                residual,
            })
        }
    }
}

/// Gaussian point spread function over a full `frame_h x frame_w` frame.
///
/// The returned center is zero-based: `(frame_h / 2, frame_w / 2)`. Entries
/// are `exp(-((i-ci)^2 + (j-cj)^2) / (2 sigma^2))` normalised to sum one.
pub fn gaussian_psf(frame_h: usize, frame_w: usize, psf_sigma: f64) -> Result<(Mat, (usize, usize))> {
    if frame_h == 0 || frame_w == 0 {
        return Err(Error::Domain("frame dimensions must be positive".into()));
    }
    if !(psf_sigma > 0.0) || !psf_sigma.is_finite() {
        return Err(Error::Domain(format!("psf sigma must be positive, got {psf_sigma}")));
    }
    let center = (frame_h / 2, frame_w / 2);
    let two_s2 = 2.0 * psf_sigma * psf_sigma;
    let mut psf = Mat::from_fn(frame_h, frame_w, |i, j| {
        let di = i as f64 - center.0 as f64;
        let dj = j as f64 - center.1 as f64;
        (-(di * di + dj * dj) / two_s2).exp()
    });
    let total = psf.sum();
    psf /= total;
    Ok((psf, center))
}

/// Splits a separable PSF into periodic circulant factors `(Hr, Hc)`.
///
/// `Hc` is built from the column profile (sum over each row of the PSF) and
/// `Hr` from the row profile, each rotated so the PSF center sits at index 0.
/// For a unit-sum PSF both factors have unit row sums.
pub fn kron_decomp_periodic(psf: &Mat, center: (usize, usize)) -> Result<(Mat, Mat)> {
    let (h, w) = psf.shape();
    if center.0 >= h || center.1 >= w {
        return Err(Error::Domain(format!("psf center {center:?} outside {h}x{w}")));
    }
    let total = psf.sum();
    if !(total > 0.0) {
        return Err(Error::Domain("psf must have positive mass".into()));
    }
    let col_profile: Vec<f64> = (0..h).map(|i| psf.row(i).sum() / total).collect();
    let row_profile: Vec<f64> = (0..w).map(|j| psf.column(j).sum()).collect();

    let mut residual = 0.0;
    for j in 0..w {
        for i in 0..h {
            residual += (psf[(i, j)] - col_profile[i] * row_profile[j]).powi(2);
        }
    }
    let residual = residual.sqrt();
    if residual > RANK_ONE_RTOL * psf.norm() {
        return Err(Error::UnsupportedPsf { residual });
    }

    let hc = periodic_circulant(&col_profile, center.0);
    let hr = periodic_circulant(&row_profile, center.1);
    Ok((hr, hc))
}

/// Circulant with entries `M[i, j] = v[(k + i - j) mod n]`.
fn periodic_circulant(v: &[f64], k: usize) -> Mat {
    let n = v.len();
    Mat::from_fn(n, n, |i, j| v[(k + i + n - j) % n])
}
