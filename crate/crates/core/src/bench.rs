//! Numerical studies behind the `bench` subcommands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::{mean, variance};
use crate::spectra::{lobe_integral, q_dbxi_approx, SpectrumParams};
use crate::surface::{CascadeConfig, Cascades};
use crate::velocity::{
    degree_study, interpolation_accuracy, reference_samples, AccuracyConfig, AccuracyRow, DegreeStudyResult,
    DepthSpacing, Interpolation, SliceConfig,
};

/// Band that the Monte-Carlo mean must fall in.
pub const NORMALIZATION_BAND: (f64, f64) = (1.02, 1.12);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    pub samples: usize,
    pub seed: u64,
    /// Frequency ratios are drawn uniformly from `[r_min, r_max)`.
    pub r_min: f64,
    pub r_max: f64,
    pub swell: f64,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self { samples: 10_000, seed: 0, r_min: 0.56, r_max: 0.94, swell: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationReport {
    pub samples: usize,
    pub seed: u64,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl NormalizationReport {
    pub fn in_band(&self) -> bool {
        self.mean >= NORMALIZATION_BAND.0 && self.mean <= NORMALIZATION_BAND.1
    }
}

/// Monte-Carlo mean of the fitted factor times the quadrature of the lobe.
pub fn normalization_study(cfg: &NormalizationConfig) -> Result<NormalizationReport> {
    if cfg.samples == 0 || !(cfg.r_min > 0.0 && cfg.r_min < cfg.r_max) {
        return Err(Error::config("normalization study needs samples > 0 and 0 < r_min < r_max"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ratios: Vec<f64> = (0..cfg.samples).map(|_| rng.random_range(cfg.r_min..cfg.r_max)).collect();
    let values: Vec<f64> = ratios.par_iter().map(|&r| q_dbxi_approx(r) * lobe_integral(r, cfg.swell)).collect();
    Ok(NormalizationReport {
        samples: cfg.samples,
        seed: cfg.seed,
        mean: mean(&values),
        std: variance(&values).sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub wind_min: f64,
    pub wind_max: f64,
    pub wind_step: f64,
    pub points: usize,
    /// Points are uniform over `[0, domain)^2`.
    pub domain: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Iteration count reported as "within".
    pub within: usize,
    pub point_seed: u64,
    pub time: f64,
    pub spectrum: SpectrumParams,
    pub cascades: CascadeConfig,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            wind_min: 0.1,
            wind_max: 35.0,
            wind_step: 0.5,
            points: 1000,
            domain: 1.0e4,
            tolerance: 0.01,
            max_iterations: 32,
            within: 4,
            point_seed: 1,
            time: 0.0,
            spectrum: SpectrumParams::default(),
            cascades: CascadeConfig::default(),
        }
    }
}

impl ConvergenceConfig {
    pub fn winds(&self) -> Vec<f64> {
        let count = ((self.wind_max - self.wind_min) / self.wind_step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.wind_min + self.wind_step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub wind: f64,
    pub mean_iterations: f64,
    pub var_iterations: f64,
    pub fraction_within: f64,
    pub max_iterations: usize,
    pub unconverged: usize,
}

pub fn convergence_at(cfg: &ConvergenceConfig, wind: f64, points: &[[f64; 2]]) -> Result<ConvergenceRow> {
    let params = SpectrumParams { wind_speed: wind, ..cfg.spectrum };
    let cascades = Cascades::generate(&cfg.cascades, &params)?;
    let maps = cascades.maps(cfg.time);
    let solves: Vec<_> =
        points.par_iter().map(|p| maps.height_converged(p[0], p[1], cfg.tolerance, cfg.max_iterations)).collect();
    let iters: Vec<f64> = solves.iter().map(|s| s.iterations as f64).collect();
    let within = solves.iter().filter(|s| s.converged && s.iterations <= cfg.within).count();
    Ok(ConvergenceRow {
        wind,
        mean_iterations: mean(&iters),
        var_iterations: variance(&iters),
        fraction_within: within as f64 / points.len().max(1) as f64,
        max_iterations: solves.iter().map(|s| s.iterations).max().unwrap_or(0),
        unconverged: solves.iter().filter(|s| !s.converged).count(),
    })
}

pub fn convergence_points(cfg: &ConvergenceConfig) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.point_seed);
    (0..cfg.points).map(|_| [rng.random_range(0.0..cfg.domain), rng.random_range(0.0..cfg.domain)]).collect()
}

/// Iteration statistics of the height solve for each wind speed.
pub fn convergence_study(cfg: &ConvergenceConfig) -> Result<Vec<ConvergenceRow>> {
    if cfg.points == 0 || !(cfg.wind_step > 0.0) || !(cfg.wind_min > 0.0) || cfg.wind_max < cfg.wind_min {
        return Err(Error::config("convergence study needs points > 0 and a positive increasing wind range"));
    }
    let points = convergence_points(cfg);
    cfg.winds().into_iter().map(|w| convergence_at(cfg, w, &points)).collect()
}

/// Pairs of consecutive winds whose mean drops by more than `sigmas`
/// standard errors.
pub fn monotonicity_violations(rows: &[ConvergenceRow], points: usize, sigmas: f64) -> Vec<(f64, f64)> {
    rows.windows(2)
        .filter(|w| {
            let se = ((w[0].var_iterations + w[1].var_iterations) / points.max(1) as f64).sqrt();
            w[1].mean_iterations < w[0].mean_iterations - sigmas * se
        })
        .map(|w| (w[0].wind, w[1].wind))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpStudyConfig {
    pub wind: f64,
    pub spectrum: SpectrumParams,
    pub cascades: CascadeConfig,
    pub slices: SliceConfig,
    pub accuracy: AccuracyConfig,
}

impl Default for InterpStudyConfig {
    fn default() -> Self {
        Self {
            wind: 20.0,
            spectrum: SpectrumParams::default(),
            cascades: CascadeConfig { resolution: 128, ..CascadeConfig::default() },
            slices: SliceConfig::default(),
            accuracy: AccuracyConfig::default(),
        }
    }
}

/// Cascades and exact reference velocities shared by the interpolation studies.
pub fn interp_reference(cfg: &InterpStudyConfig) -> Result<(Cascades, Vec<crate::velocity::ReferenceSample>)> {
    let params = SpectrumParams { wind_speed: cfg.wind, ..cfg.spectrum };
    let cascades = Cascades::generate(&cfg.cascades, &params)?;
    let reference = reference_samples(&cascades, &cfg.slices, &cfg.accuracy);
    Ok((cascades, reference))
}

pub const SCHEMES: [(DepthSpacing, Interpolation); 4] = [
    (DepthSpacing::Logarithmic, Interpolation::Exponential),
    (DepthSpacing::Logarithmic, Interpolation::Linear),
    (DepthSpacing::Uniform, Interpolation::Exponential),
    (DepthSpacing::Uniform, Interpolation::Linear),
];

/// Error of every spacing and interpolation pair at the configured degree.
pub fn interp_accuracy_study(cfg: &InterpStudyConfig) -> Result<Vec<AccuracyRow>> {
    let (cascades, reference) = interp_reference(cfg)?;
    SCHEMES
        .iter()
        .map(|&(spacing, interpolation)| {
            let slice = SliceConfig { spacing, interpolation, ..cfg.slices };
            interpolation_accuracy(&cascades, &reference, &slice, cfg.accuracy.time)
        })
        .collect()
}

pub fn degree_study_bench(cfg: &InterpStudyConfig, degrees: &[usize], alpha: f64, beta: f64) -> Result<DegreeStudyResult> {
    let (cascades, reference) = interp_reference(cfg)?;
    degree_study(&cascades, &reference, &cfg.slices, cfg.accuracy.time, degrees, alpha, beta)
}
