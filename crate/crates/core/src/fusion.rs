//! Geometric fusion of modality scores into source/target probability
//! measures and the supply–demand vector.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};

pub const DEFAULT_FUSION_WEIGHT: f64 = 0.55;
pub const DEFAULT_EPS0: f64 = 1e-6;

/// `{0, 0.125, …, 1}`.
pub fn default_weight_grid() -> Vec<f64> {
    (0..=8).map(|k| k as f64 * 0.125).collect()
}

pub fn normalize_unit_max(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid("scores must be finite and nonnegative"));
    }
    let max = scores.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(invalid("modality scores are all zero"));
    }
    Ok(scores.iter().map(|v| v / max).collect())
}

/// `(a_fmri + eps0)^w_f · (a_eeg + eps0)^(1 − w_f)` elementwise.
pub fn fuse_profiles(a_fmri: &[f64], a_eeg: &[f64], w_f: f64, eps0: f64) -> Result<Vec<f64>> {
    if a_fmri.len() != a_eeg.len() {
        return Err(shape(a_fmri.len(), a_eeg.len()));
    }
    if !(0.0..=1.0).contains(&w_f) {
        return Err(invalid(format!("fusion weight {w_f} outside [0, 1]")));
    }
    Ok(a_fmri
        .iter()
        .zip(a_eeg)
        .map(|(f, e)| libm::pow(f + eps0, w_f) * libm::pow(e + eps0, 1.0 - w_f))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurePair {
    pub mu_stim: Vec<f64>,
    pub mu_react: Vec<f64>,
    /// `mu_stim − mu_react`.
    pub b: Vec<f64>,
}

fn to_probability(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !(*x >= 0.0)) {
        return Err(invalid("profiles must be nonnegative"));
    }
    let sum: f64 = v.iter().sum();
    if !(sum > 0.0) {
        return Err(invalid("profile has zero total mass"));
    }
    Ok(v.iter().map(|x| x / sum).collect())
}

pub fn to_measures(fused_stim: &[f64], fused_react: &[f64]) -> Result<MeasurePair> {
    if fused_stim.len() != fused_react.len() {
        return Err(shape(fused_stim.len(), fused_react.len()));
    }
    let mu_stim = to_probability(fused_stim)?;
    let mu_react = to_probability(fused_react)?;
    let b = mu_stim.iter().zip(&mu_react).map(|(p, q)| p - q).collect();
    Ok(MeasurePair { mu_stim, mu_react, b })
}

/// Unit-max normalisation of each modality, fusion, then measures.
pub fn fuse_modalities(
    fmri: (&[f64], &[f64]),
    eeg: (&[f64], &[f64]),
    w_f: f64,
    eps0: f64,
) -> Result<MeasurePair> {
    let stim = fuse_profiles(&normalize_unit_max(fmri.0)?, &normalize_unit_max(eeg.0)?, w_f, eps0)?;
    let react = fuse_profiles(&normalize_unit_max(fmri.1)?, &normalize_unit_max(eeg.1)?, w_f, eps0)?;
    to_measures(&stim, &react)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySweep {
    pub grid: Vec<f64>,
    /// Row `g` is μ⁺ at `grid[g]`.
    pub rows: Vec<Vec<f64>>,
    /// `max − min` of each region's μ⁺ across the grid.
    pub roi_range: Vec<f64>,
    /// Regions in the top quartile at every grid point.
    pub stable_set: Vec<usize>,
}

impl SensitivitySweep {
    /// Top-quartile sets for the grid points inside `[lo, hi]`.
    pub fn top_quartile_sets_within(&self, lo: f64, hi: f64) -> Vec<Vec<usize>> {
        self.grid
            .iter()
            .zip(&self.rows)
            .filter(|(w, _)| **w >= lo - 1e-12 && **w <= hi + 1e-12)
            .map(|(_, row)| top_quartile(row))
            .collect()
    }
}

/// Indices of the `k` largest entries, sorted by index (ties to lower index).
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut top: Vec<usize> = order.into_iter().take(k).collect();
    top.sort_unstable();
    top
}

/// Top `max(1, ⌊n/4⌋)` entries.
pub fn top_quartile(values: &[f64]) -> Vec<usize> {
    top_k(values, (values.len() / 4).max(1))
}

/// μ⁺ across fusion weights; inputs are raw (non-normalised) stimulus scores.
pub fn sensitivity_sweep(a_fmri: &[f64], a_eeg: &[f64], grid: &[f64], eps0: f64) -> Result<SensitivitySweep> {
    let f = normalize_unit_max(a_fmri)?;
    let e = normalize_unit_max(a_eeg)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &w in grid {
        rows.push(to_probability(&fuse_profiles(&f, &e, w, eps0)?)?);
    }
    let n = f.len();
    let roi_range = (0..n)
        .map(|i| {
            let (lo, hi) = rows
                .iter()
                .fold((f64::MAX, f64::MIN), |(lo, hi), r: &Vec<f64>| (lo.min(r[i]), hi.max(r[i])));
            if rows.is_empty() { 0.0 } else { hi - lo }
        })
        .collect();
    let mut stable_set: Vec<usize> = (0..n).collect();
    for row in &rows {
        let top = top_quartile(row);
        stable_set.retain(|i| top.contains(i));
    }
    Ok(SensitivitySweep { grid: grid.to_vec(), rows, roi_range, stable_set })
}

/// Spearman rank correlation between two score vectors (average ranks for ties).
pub fn rank_agreement(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(shape(a.len(), b.len()));
    }
    let ranks = |v: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = alloc::vec![0.0; v.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
                j += 1;
            }
            let avg = 0.5 * (i + j) as f64;
            for k in i..=j {
                r[order[k]] = avg;
            }
            i = j + 1;
        }
        r
    };
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    Ok(if saa > 0.0 && sbb > 0.0 { sab / libm::sqrt(saa * sbb) } else { 0.0 })
}
