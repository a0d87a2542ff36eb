//! Block-design BOLD simulation and the region-wise general linear model.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::geometry::{RoiSet, System};
use crate::rng::standard_normal;

/// Sampling step of the HRF kernel and of the upsampled boxcars, seconds.
pub const HRF_DT: f64 = 0.1;
/// Support of the HRF kernel, seconds.
pub const HRF_SPAN: f64 = 32.0;

const HRF_SHAPE_1: f64 = 6.0;
const HRF_SHAPE_2: f64 = 16.0;
const HRF_UNDERSHOOT: f64 = 1.0 / 6.0;

/// Block timing inside one 120 s cycle: stimulus `[0, 30)`, rest,
/// reaction `[60, 90)`, rest.
pub const CYCLE_S: f64 = 120.0;
pub const STIM_BLOCK: (f64, f64) = (0.0, 30.0);
pub const REACT_BLOCK: (f64, f64) = (60.0, 90.0);

fn gamma_pdf_unit_scale(t: f64, shape: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    libm::exp((shape - 1.0) * libm::log(t) - t - libm::lgamma(shape))
}

fn hrf_raw(t: f64) -> f64 {
    gamma_pdf_unit_scale(t, HRF_SHAPE_1) - HRF_UNDERSHOOT * gamma_pdf_unit_scale(t, HRF_SHAPE_2)
}

/// Canonical double-gamma HRF evaluated on `time_grid`, scaled to unit peak
/// magnitude over the grid.
pub fn hrf_double_gamma(time_grid: &[f64]) -> Result<Vec<f64>> {
    if time_grid.is_empty() {
        return Err(invalid("HRF time grid is empty"));
    }
    if time_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(invalid("HRF time grid must be nonnegative"));
    }
    if time_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("HRF time grid must be strictly increasing"));
    }
    let raw: Vec<f64> = time_grid.iter().map(|&t| hrf_raw(t)).collect();
    let peak = raw.iter().fold(0.0_f64, |m, v| m.max(libm::fabs(*v)));
    if peak == 0.0 {
        return Err(invalid("HRF vanishes on the supplied grid"));
    }
    Ok(raw.into_iter().map(|v| v / peak).collect())
}

/// HRF kernel on `[0, HRF_SPAN]` at `HRF_DT` spacing.
pub fn hrf_kernel() -> Vec<f64> {
    let n = libm::round(HRF_SPAN / HRF_DT) as usize + 1;
    let grid: Vec<f64> = (0..n).map(|k| k as f64 * HRF_DT).collect();
    hrf_double_gamma(&grid).expect("kernel grid is valid")
}

/// Causal discrete convolution `y(t_i) = Σ_k h_k s(t_i − k·dt) · dt`.
pub fn convolve_causal(signal: &[f64], kernel: &[f64], dt: f64) -> Vec<f64> {
    (0..signal.len())
        .map(|i| {
            kernel
                .iter()
                .take(i + 1)
                .enumerate()
                .map(|(k, h)| h * signal[i - k])
                .sum::<f64>()
                * dt
        })
        .collect()
}

/// Stimulus and reaction boxcar values at time `t` (seconds).
pub fn boxcars_at(t: f64) -> (f64, f64) {
    let phase = t - CYCLE_S * libm::floor(t / CYCLE_S);
    let inside = |(lo, hi): (f64, f64)| if phase >= lo && phase < hi { 1.0 } else { 0.0 };
    (inside(STIM_BLOCK), inside(REACT_BLOCK))
}

/// Boxcars at fine-grid sample `index` (time `index · HRF_DT`), using exact
/// integer block boundaries.
pub fn boxcars_at_sample(index: usize) -> (f64, f64) {
    let per = |s: f64| libm::round(s / HRF_DT) as usize;
    let phase = index % per(CYCLE_S);
    let inside = |(lo, hi): (f64, f64)| if phase >= per(lo) && phase < per(hi) { 1.0 } else { 0.0 };
    (inside(STIM_BLOCK), inside(REACT_BLOCK))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub tr: f64,
    pub n_volumes: usize,
    pub x_stim: Vec<f64>,
    pub x_react: Vec<f64>,
    pub intercept: Vec<f64>,
    /// Unconvolved boxcars sampled at the volume times.
    pub stim_boxcar: Vec<f64>,
    pub react_boxcar: Vec<f64>,
}

impl DesignMatrix {
    pub const N_REGRESSORS: usize = 3;
    pub const COLUMN_NAMES: [&'static str; 3] = ["stim", "react", "intercept"];

    pub fn volume_times(&self) -> Vec<f64> {
        (0..self.n_volumes).map(|v| v as f64 * self.tr).collect()
    }

    /// `n_volumes × 3` matrix `[x_stim, x_react, 1]`.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_volumes, 3, |r, c| match c {
            0 => self.x_stim[r],
            1 => self.x_react[r],
            _ => self.intercept[r],
        })
    }
}

/// Block design sampled at `tr_s`; boxcars are upsampled to `HRF_DT`,
/// convolved with the HRF, then read off at the volume times.
pub fn build_block_design(total_s: f64, tr_s: f64) -> Result<DesignMatrix> {
    if !(tr_s > 0.0) || !(total_s > 0.0) {
        return Err(invalid("duration and TR must be positive"));
    }
    let ratio = total_s / tr_s;
    let n_volumes = libm::round(ratio) as usize;
    if libm::fabs(ratio - n_volumes as f64) > 1e-9 * ratio.max(1.0) {
        return Err(invalid(format!("total duration {total_s} s is not a multiple of TR {tr_s} s")));
    }
    let kernel = hrf_kernel();
    let mut design = DesignMatrix {
        tr: tr_s,
        n_volumes,
        x_stim: Vec::with_capacity(n_volumes),
        x_react: Vec::with_capacity(n_volumes),
        intercept: vec![1.0; n_volumes],
        stim_boxcar: Vec::with_capacity(n_volumes),
        react_boxcar: Vec::with_capacity(n_volumes),
    };
    for v in 0..n_volumes {
        let t = v as f64 * tr_s;
        let fine = libm::round(t / HRF_DT) as usize;
        let (mut s, mut r) = (0.0, 0.0);
        for (k, h) in kernel.iter().enumerate().take(fine + 1) {
            let (bs, br) = boxcars_at_sample(fine - k);
            s += h * bs;
            r += h * br;
        }
        let (bs, br) = boxcars_at(t);
        design.x_stim.push(s * HRF_DT);
        design.x_react.push(r * HRF_DT);
        design.stim_boxcar.push(bs);
        design.react_boxcar.push(br);
    }
    Ok(design)
}

/// Ground-truth effects: stimulus 1.0 on visual and auditory regions,
/// reaction 1.0 on sensorimotor and default-mode regions, 0.1 for every other
/// (regressor, region) pair, intercept 100.
pub fn default_beta_true(rois: &RoiSet) -> DMatrix<f64> {
    let mut beta = DMatrix::from_element(3, rois.len(), 0.1);
    for roi in &rois.rois {
        if matches!(roi.system, System::Visual | System::Auditory) {
            beta[(0, roi.index)] = 1.0;
        }
        if matches!(roi.system, System::Sensorimotor | System::DefaultMode) {
            beta[(1, roi.index)] = 1.0;
        }
        beta[(2, roi.index)] = 100.0;
    }
    beta
}

/// `(regressor, region)` pairs with a non-background true effect.
pub fn active_pairs(rois: &RoiSet) -> Vec<(usize, usize)> {
    let beta = default_beta_true(rois);
    let mut out = Vec::new();
    for r in 0..rois.len() {
        for reg in 0..2 {
            if beta[(reg, r)] >= 1.0 {
                out.push((reg, r));
            }
        }
    }
    out
}

/// `Y = X β + ε`, with `ε ~ N(0, noise_std²)` drawn row-major from `rng`.
pub fn simulate_bold<R: Rng + ?Sized>(
    design: &DesignMatrix,
    beta_true: &DMatrix<f64>,
    noise_std: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if beta_true.nrows() != DesignMatrix::N_REGRESSORS {
        return Err(shape("3 regressor rows", beta_true.nrows()));
    }
    if !(noise_std >= 0.0) {
        return Err(invalid("noise_std must be nonnegative"));
    }
    let mut y = design.matrix() * beta_true;
    if noise_std > 0.0 {
        for r in 0..y.nrows() {
            for c in 0..y.ncols() {
                y[(r, c)] += noise_std * standard_normal(rng);
            }
        }
    }
    Ok(y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlmResult {
    /// `n_regressors × n_rois`.
    pub betas: DMatrix<f64>,
    /// t-statistics of the unit contrasts, `n_regressors × n_rois`.
    pub tstats: DMatrix<f64>,
    pub residual_variance: Vec<f64>,
    pub xtx_inverse: DMatrix<f64>,
    pub dof: usize,
}

impl GlmResult {
    /// t-statistic of an arbitrary contrast for one region.
    pub fn contrast_t(&self, contrast: &[f64], roi: usize) -> f64 {
        let c = DVector::from_column_slice(contrast);
        let effect = c.dot(&self.betas.column(roi));
        let var = self.residual_variance[roi] * (c.transpose() * &self.xtx_inverse * &c)[(0, 0)];
        effect / libm::sqrt(var)
    }
}

/// Ordinary least squares per region via a QR factorisation of the design.
pub fn glm_fit(y: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<GlmResult> {
    let (n, p) = x.shape();
    if y.nrows() != n {
        return Err(shape(format!("{n} rows in Y"), y.nrows()));
    }
    if n <= p {
        return Err(Error::RankDeficient);
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let diag_max = (0..p).map(|i| libm::fabs(r[(i, i)])).fold(0.0, f64::max);
    if (0..p).any(|i| !(libm::fabs(r[(i, i)]) > 1e-10 * diag_max)) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * y;
    let betas = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient)?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::RankDeficient)?;
    let xtx_inverse = &r_inv * r_inv.transpose();
    let residuals = y - x * &betas;
    let dof = n - p;
    let residual_variance: Vec<f64> = (0..y.ncols())
        .map(|c| residuals.column(c).norm_squared() / dof as f64)
        .collect();
    let mut tstats = DMatrix::zeros(p, y.ncols());
    for c in 0..y.ncols() {
        for j in 0..p {
            tstats[(j, c)] = betas[(j, c)] / libm::sqrt(residual_variance[c] * xtx_inverse[(j, j)]);
        }
    }
    Ok(GlmResult { betas, tstats, residual_variance, xtx_inverse, dof })
}

/// Positive parts of the stimulus and reaction t-statistics.
pub fn fmri_scores(glm: &GlmResult) -> (Vec<f64>, Vec<f64>) {
    let clip = |row: usize| -> Vec<f64> {
        glm.tstats.row(row).iter().map(|t| if *t > 0.0 { *t } else { 0.0 }).collect()
    };
    (clip(0), clip(1))
}

/// Pearson correlation between the columns of `y`.
pub fn connectivity(y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = y.nrows() as f64;
    let m = y.ncols();
    let centered: Vec<Vec<f64>> = (0..m)
        .map(|c| {
            let col = y.column(c);
            let mean = col.sum() / n;
            col.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|v| libm::sqrt(v.iter().map(|x| x * x).sum()))
        .collect();
    DMatrix::from_fn(m, m, |i, j| {
        let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
        let denom = norms[i] * norms[j];
        if denom > 0.0 { dot / denom } else { 0.0 }
    })
}
