//! Sensor-space electrophysiology through an inverse-square lead field and
//! Tikhonov-regularised minimum-norm source reconstruction.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::geometry::{RoiSet, System};
use crate::rng::{indexed_stream, standard_normal};

/// Softening added to squared sensor–region distances.
pub const LEAD_SOFTENING: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct LeadField {
    /// `n_sensors × n_rois`, max entry 1.
    pub matrix: DMatrix<f64>,
    pub sensor_positions: Vec<[f64; 2]>,
}

/// Sensors equally spaced on a circle of `sensor_radius`; gains
/// `1 / (d² + LEAD_SOFTENING)` normalised by their maximum.
pub fn build_lead_field(rois: &RoiSet, n_sensors: usize, sensor_radius: f64) -> Result<LeadField> {
    if n_sensors == 0 {
        return Err(invalid("need at least one sensor"));
    }
    if rois.is_empty() {
        return Err(invalid("need at least one region"));
    }
    let reach = rois.max_radius();
    if !(sensor_radius > reach) {
        return Err(invalid(format!(
            "sensor radius {sensor_radius} must exceed the outermost region radius {reach}"
        )));
    }
    let sensor_positions: Vec<[f64; 2]> = (0..n_sensors)
        .map(|s| {
            let angle = 2.0 * PI * s as f64 / n_sensors as f64;
            [sensor_radius * libm::cos(angle), sensor_radius * libm::sin(angle)]
        })
        .collect();
    let positions = rois.positions();
    let mut matrix = DMatrix::from_fn(n_sensors, rois.len(), |s, r| {
        let dx = sensor_positions[s][0] - positions[r][0];
        let dy = sensor_positions[s][1] - positions[r][1];
        1.0 / (dx * dx + dy * dy + LEAD_SOFTENING)
    });
    let max = matrix.max();
    matrix /= max;
    Ok(LeadField { matrix, sensor_positions })
}

/// Gaussian-windowed cosine burst.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    /// Seconds.
    pub center: f64,
    /// Gaussian standard deviation, seconds.
    pub width: f64,
    /// Carrier frequency, Hz.
    pub frequency: f64,
    pub amplitude: f64,
}

impl Burst {
    pub fn at(&self, t: f64) -> f64 {
        let z = (t - self.center) / self.width;
        self.amplitude * libm::exp(-0.5 * z * z) * libm::cos(2.0 * PI * self.frequency * (t - self.center))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErpParams {
    pub n_trials: usize,
    pub fs: f64,
    pub duration: f64,
    pub noise_std: f64,
    pub stim_burst: Burst,
    pub react_burst: Burst,
}

impl Default for ErpParams {
    fn default() -> Self {
        Self {
            n_trials: 40,
            fs: 512.0,
            duration: 1.0,
            noise_std: 0.5,
            stim_burst: Burst { center: 0.100, width: 0.040, frequency: 10.0, amplitude: 1.0 },
            react_burst: Burst { center: 0.350, width: 0.080, frequency: 5.0, amplitude: 1.0 },
        }
    }
}

impl ErpParams {
    pub fn n_samples(&self) -> usize {
        libm::round(self.duration * self.fs) as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples()).map(|k| k as f64 / self.fs).collect()
    }
}

/// Noiseless ground-truth sources, `n_samples × n_rois`: stimulus bursts in
/// visual/auditory regions, reaction bursts in sensorimotor/default-mode ones.
pub fn ground_truth_sources(rois: &RoiSet, params: &ErpParams) -> DMatrix<f64> {
    let times = params.times();
    DMatrix::from_fn(times.len(), rois.len(), |k, r| {
        let t = times[k];
        match rois.rois[r].system {
            System::Visual | System::Auditory => params.stim_burst.at(t),
            System::Sensorimotor | System::DefaultMode => params.react_burst.at(t),
            _ => 0.0,
        }
    })
}

/// Trial-averaged sensor data, `n_samples × n_sensors`.
///
/// Trial `i` draws its noise from substream `"eeg-trial-{i}"` of `seed`.
pub fn simulate_erp_trials(
    rois: &RoiSet,
    lead_field: &LeadField,
    params: &ErpParams,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if params.n_trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    if !(params.fs > 0.0 && params.duration > 0.0) || !(params.noise_std >= 0.0) {
        return Err(invalid("fs and duration must be positive, noise_std nonnegative"));
    }
    if lead_field.matrix.ncols() != rois.len() {
        return Err(shape(format!("{} lead-field columns", rois.len()), lead_field.matrix.ncols()));
    }
    let clean = ground_truth_sources(rois, params) * lead_field.matrix.transpose();
    if params.noise_std == 0.0 {
        return Ok(clean);
    }
    let mut noise_sum = DMatrix::zeros(clean.nrows(), clean.ncols());
    for trial in 0..params.n_trials {
        let mut rng = indexed_stream(seed, "eeg-trial", trial);
        for r in 0..clean.nrows() {
            for c in 0..clean.ncols() {
                noise_sum[(r, c)] += standard_normal(&mut rng);
            }
        }
    }
    Ok(clean + noise_sum * (params.noise_std / params.n_trials as f64))
}

/// `L† = Lᵀ (L Lᵀ + λ I)⁻¹`, computed by a Cholesky solve of the symmetric
/// system rather than an explicit inverse.
pub fn min_norm_inverse(lead: &DMatrix<f64>, lambda_reg: f64) -> Result<DMatrix<f64>> {
    if !(lambda_reg >= 0.0) {
        return Err(invalid("lambda_reg must be nonnegative"));
    }
    let n_sensors = lead.nrows();
    let gram = lead * lead.transpose() + DMatrix::identity(n_sensors, n_sensors) * lambda_reg;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("L Lᵀ + {lambda_reg} I is not positive definite")))?;
    // (L Lᵀ + λI) X = L  ⇒  L† = Xᵀ
    let x = chol.solve(lead);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("regularised Gram matrix is numerically singular".into()));
    }
    Ok(x.transpose())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceEstimate {
    /// `n_samples × n_rois`.
    pub samples: DMatrix<f64>,
    pub fs: f64,
}

impl SourceEstimate {
    pub fn from_sensors(sensor_data: &DMatrix<f64>, inverse: &DMatrix<f64>, fs: f64) -> Self {
        Self { samples: sensor_data * inverse.transpose(), fs }
    }

    /// Source amplitudes at the sample nearest to `t`.
    pub fn map_at(&self, t: f64) -> Vec<f64> {
        let k = (libm::round(t * self.fs) as usize).min(self.samples.nrows().saturating_sub(1));
        self.samples.row(k).iter().copied().collect()
    }
}

/// Mean absolute amplitude per region over closed time windows (seconds).
pub fn window_scores(
    est: &SourceEstimate,
    stim_window: (f64, f64),
    react_window: (f64, f64),
) -> Result<(Vec<f64>, Vec<f64>)> {
    let duration = est.samples.nrows() as f64 / est.fs;
    let score = |(lo, hi): (f64, f64)| -> Result<Vec<f64>> {
        if !(lo <= hi) || lo < 0.0 || hi > duration + 1e-12 {
            return Err(invalid(format!("window [{lo}, {hi}] outside [0, {duration}]")));
        }
        let rows: Vec<usize> = (0..est.samples.nrows())
            .filter(|&k| {
                let t = k as f64 / est.fs;
                t >= lo - 1e-12 && t <= hi + 1e-12
            })
            .collect();
        if rows.is_empty() {
            return Err(invalid(format!("window [{lo}, {hi}] contains no samples")));
        }
        Ok((0..est.samples.ncols())
            .map(|c| rows.iter().map(|&k| libm::fabs(est.samples[(k, c)])).sum::<f64>() / rows.len() as f64)
            .collect())
    };
    Ok((score(stim_window)?, score(react_window)?))
}

/// Mean over regions of the Pearson correlation between true and estimated
/// source time-courses (regions with a flat true course are skipped).
pub fn mean_source_correlation(truth: &DMatrix<f64>, est: &DMatrix<f64>) -> f64 {
    let corr = |a: Vec<f64>, b: Vec<f64>| -> Option<f64> {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(&b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        (saa > 0.0 && sbb > 0.0).then(|| sab / libm::sqrt(saa * sbb))
    };
    let vals: Vec<f64> = (0..truth.ncols())
        .filter_map(|c| corr(truth.column(c).iter().copied().collect(), est.column(c).iter().copied().collect()))
        .collect();
    vals.iter().sum::<f64>() / vals.len().max(1) as f64
}
