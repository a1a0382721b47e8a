//! Ocean wave spectra and initial amplitudes.
//!
//! The frequency spectrum is JONSWAP. The directional spread blends a uniform
//! distribution with a Donelan-Banner lobe shaped by a swell factor.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{conjugate_index, frequency};

pub const STANDARD_GRAVITY: f64 = 9.80665;

const GAMMA: f64 = 3.3;
const POLY_CUTOFF: f64 = 0.94;

/// How the product `D_DB * D_xi` is renormalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// The fitted polynomial everywhere.
    Polynomial,
    /// Numerical quadrature everywhere.
    Quadrature,
    /// Polynomial below r = 0.94, quadrature above.
    #[default]
    Hybrid,
}

/// Which closed forms are used for the peak frequency and mode variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `w_p = 22 g^2 / (U F)` and variance `4 pi / (L k) S D dw/dk`.
    #[default]
    Literal,
    /// `w_p = 22 (g^2 / (U F))^(1/3)` and variance `S(k) dk^2 / 2` per mode,
    /// which gives `Var(h) = integral of S(k)`.
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    pub wind_speed: f64,
    pub fetch: f64,
    pub wind_direction: f64,
    pub swell: f64,
    pub direction_mix: f64,
    pub gravity: f64,
    pub seed: u64,
    /// Overrides the derived peak frequency when set.
    pub peak_frequency: Option<f64>,
    pub normalization: Normalization,
    pub convention: Convention,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            wind_speed: 10.0,
            fetch: 100_000.0,
            wind_direction: 0.0,
            swell: 0.5,
            direction_mix: 1.0,
            gravity: STANDARD_GRAVITY,
            seed: 0,
            peak_frequency: None,
            normalization: Normalization::Hybrid,
            convention: Convention::Literal,
        }
    }
}

impl SpectrumParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.wind_speed,
            self.fetch,
            self.wind_direction,
            self.swell,
            self.direction_mix,
            self.gravity,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("spectrum parameters must be finite"));
        }
        if self.wind_speed <= 0.0 {
            return Err(Error::config(format!("wind_speed must be > 0, got {}", self.wind_speed)));
        }
        if self.fetch <= 0.0 {
            return Err(Error::config(format!("fetch must be > 0, got {}", self.fetch)));
        }
        if !(0.0..=1.0).contains(&self.swell) {
            return Err(Error::config(format!("swell must lie in [0, 1], got {}", self.swell)));
        }
        if !(0.0..=1.0).contains(&self.direction_mix) {
            return Err(Error::config(format!(
                "direction_mix must lie in [0, 1], got {}",
                self.direction_mix
            )));
        }
        if self.gravity <= 0.0 {
            return Err(Error::config("gravity must be > 0"));
        }
        if let Some(wp) = self.peak_frequency {
            if !(wp.is_finite() && wp > 0.0) {
                return Err(Error::config("peak_frequency must be > 0"));
            }
        }
        Ok(())
    }

    /// Peak angular frequency unless overridden.
    pub fn peak_omega(&self) -> f64 {
        let x = self.gravity * self.gravity / (self.wind_speed * self.fetch);
        self.peak_frequency.unwrap_or(match self.convention {
            Convention::Literal => 22.0 * x,
            Convention::Physical => 22.0 * x.cbrt(),
        })
    }

    pub fn alpha(&self) -> f64 {
        0.076 * (self.wind_speed * self.wind_speed / (self.fetch * self.gravity)).powf(0.22)
    }
}

pub fn dispersion(k: f64, g: f64) -> f64 {
    (g * k).sqrt()
}

/// JONSWAP spectral density S(omega).
pub fn jonswap(omega: f64, params: &SpectrumParams) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::domain(format!("jonswap requires omega > 0, got {omega}")));
    }
    let g = params.gravity;
    let wp = params.peak_omega();
    let sigma = if omega <= wp { 0.07 } else { 0.09 };
    let x = (omega - wp) / (sigma * wp);
    let r = (-0.5 * x * x).exp();
    let base = params.alpha() * g * g / omega.powi(5) * (-1.25 * (wp / omega).powi(4)).exp();
    Ok(base * GAMMA.powf(r))
}

pub fn beta_s(r: f64) -> f64 {
    if r < 0.95 {
        2.61 * r.powf(1.3)
    } else if r < 1.6 {
        2.28 * r.powf(-1.3)
    } else {
        let eps = 0.8393 * (-0.567 * (r * r).ln()).exp() - 0.4;
        10f64.powf(eps)
    }
}

/// Donelan-Banner lobe for a given spread `beta`. Integrates to 1 over [-pi, pi].
pub fn donelan_banner_beta(beta: f64, theta: f64) -> f64 {
    let sech = 1.0 / (beta * theta).cosh();
    0.5 * beta / (beta * PI).tanh() * sech * sech
}

pub fn donelan_banner(omega: f64, theta: f64, omega_p: f64) -> f64 {
    donelan_banner_beta(beta_s(omega / omega_p), theta)
}

pub fn swell_exponent(r: f64, xi: f64) -> f64 {
    16.0 * (1.0 / r).tanh() * xi * xi
}

pub fn swell_spread(omega: f64, theta: f64, omega_p: f64, xi: f64) -> f64 {
    let s = swell_exponent(omega / omega_p, xi);
    (theta * 0.5).cos().abs().powf(2.0 * s)
}

/// Fitted normalisation for the product of the lobe and the swell factor.
pub fn q_dbxi_approx(r: f64) -> f64 {
    if r < POLY_CUTOFF {
        7.1467551 * r * r - 13.4662001 * r + 7.75651088
    } else if r < 5.0 {
        -0.69906109 * r * r + 0.77975933 * r + 0.10169164
    } else if r < 100.0 {
        -2.1860997 * r * r + 0.0269209 * r + 0.00016283
    } else {
        1.2038847 * r + 0.0008147
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Integral over theta of `D_DB * D_xi` at frequency ratio `r`.
pub fn lobe_integral(r: f64, xi: f64) -> f64 {
    let beta = beta_s(r);
    let s2 = 2.0 * swell_exponent(r, xi);
    simpson(
        |t| donelan_banner_beta(beta, t) * (t * 0.5).cos().abs().powf(s2),
        -PI,
        PI,
        512,
    )
}

pub fn q_dbxi_exact(r: f64, xi: f64) -> f64 {
    1.0 / lobe_integral(r, xi)
}

/// Wraps an angle into [-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t < -PI {
        t + 2.0 * PI
    } else {
        t
    }
}

const TABLE_LN_MIN: f64 = -6.907_755_278_982_137; // ln 1e-3
const TABLE_LN_MAX: f64 = 9.210_340_371_976_184; // ln 1e4
const TABLE_NODES: usize = 1025;

/// Directional spectrum with a cached quadrature table for the exact normalisation.
#[derive(Debug, Clone)]
pub struct DirectionalSpectrum {
    params: SpectrumParams,
    omega_p: f64,
    table: Option<Arc<Vec<f64>>>,
}

impl DirectionalSpectrum {
    pub fn new(params: &SpectrumParams) -> Self {
        let table = match params.normalization {
            Normalization::Polynomial => None,
            _ => {
                let xi = params.swell;
                let step = (TABLE_LN_MAX - TABLE_LN_MIN) / (TABLE_NODES - 1) as f64;
                let t: Vec<f64> = (0..TABLE_NODES)
                    .into_par_iter()
                    .map(|i| {
                        let r = (TABLE_LN_MIN + step * i as f64).exp();
                        1.0 / lobe_integral(r, xi)
                    })
                    .collect();
                Some(Arc::new(t))
            }
        };
        Self {
            params: *params,
            omega_p: params.peak_omega(),
            table,
        }
    }

    pub fn params(&self) -> &SpectrumParams {
        &self.params
    }

    fn exact_q(&self, r: f64) -> f64 {
        let table = self.table.as_ref().expect("quadrature table");
        let u = ((r.ln() - TABLE_LN_MIN) / (TABLE_LN_MAX - TABLE_LN_MIN) * (TABLE_NODES - 1) as f64)
            .clamp(0.0, (TABLE_NODES - 1) as f64);
        let i = (u.floor() as usize).min(TABLE_NODES - 2);
        let f = u - i as f64;
        table[i] * (1.0 - f) + table[i + 1] * f
    }

    pub fn normalization_factor(&self, r: f64) -> f64 {
        match self.params.normalization {
            Normalization::Polynomial => q_dbxi_approx(r),
            Normalization::Quadrature => self.exact_q(r),
            Normalization::Hybrid => {
                if r < POLY_CUTOFF {
                    q_dbxi_approx(r)
                } else {
                    self.exact_q(r)
                }
            }
        }
    }

    /// `D(omega, theta)`, where theta is already relative to the wind direction.
    pub fn eval(&self, omega: f64, theta: f64) -> f64 {
        let delta = self.params.direction_mix;
        let uniform = 1.0 / (2.0 * PI);
        if delta == 0.0 {
            return uniform;
        }
        let r = omega / self.omega_p;
        let lobe = donelan_banner_beta(beta_s(r), theta)
            * (theta * 0.5).cos().abs().powf(2.0 * swell_exponent(r, self.params.swell));
        let d = self.normalization_factor(r) * lobe;
        (1.0 - delta) * uniform + delta * d
    }
}

/// Directional spectrum evaluated without a cached table.
pub fn directional(omega: f64, theta: f64, params: &SpectrumParams) -> f64 {
    let delta = params.direction_mix;
    let uniform = 1.0 / (2.0 * PI);
    let wp = params.peak_omega();
    let r = omega / wp;
    let xi = params.swell;
    let q = match params.normalization {
        Normalization::Polynomial => q_dbxi_approx(r),
        Normalization::Quadrature => q_dbxi_exact(r, xi),
        Normalization::Hybrid if r < POLY_CUTOFF => q_dbxi_approx(r),
        Normalization::Hybrid => q_dbxi_exact(r, xi),
    };
    let lobe = donelan_banner(omega, theta, wp) * swell_spread(omega, theta, wp, xi);
    (1.0 - delta) * uniform + delta * q * lobe
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector {
    pub kx: f64,
    pub kz: f64,
    pub k: f64,
    pub omega: f64,
}

/// Half-open wavenumber interval `[k_min, k_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub k_min: f64,
    pub k_max: f64,
}

impl Band {
    pub fn contains(&self, k: f64) -> bool {
        k >= self.k_min && k < self.k_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub resolution: usize,
    pub length: f64,
    pub band: Band,
    pub cascade: u32,
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 || !self.resolution.is_power_of_two() {
            return Err(Error::config(format!(
                "resolution must be a power of two >= 2, got {}",
                self.resolution
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::config(format!("cascade length must be > 0, got {}", self.length)));
        }
        if !(self.band.k_min >= 0.0 && self.band.k_max > self.band.k_min) {
            return Err(Error::config(format!(
                "invalid band [{}, {})",
                self.band.k_min, self.band.k_max
            )));
        }
        Ok(())
    }
}

/// Initial amplitudes of one cascade, stored in centred frequency order.
#[derive(Debug, Clone)]
pub struct WaveGrid {
    config: GridConfig,
    gravity: f64,
    wave_vectors: Vec<WaveVector>,
    h0: Vec<Complex64>,
    h0_conj_neg: Vec<Complex64>,
}

impl WaveGrid {
    pub fn resolution(&self) -> usize {
        self.config.resolution
    }

    pub fn length(&self) -> f64 {
        self.config.length
    }

    pub fn band(&self) -> Band {
        self.config.band
    }

    pub fn cascade(&self) -> u32 {
        self.config.cascade
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn wave_vectors(&self) -> &[WaveVector] {
        &self.wave_vectors
    }

    pub fn h0(&self) -> &[Complex64] {
        &self.h0
    }

    pub fn h0_conj_neg(&self) -> &[Complex64] {
        &self.h0_conj_neg
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.config.resolution + col
    }
}

impl WaveGrid {
    /// Builds a grid from explicit amplitudes. Entries at `k = 0`, on the Nyquist
    /// row or column, or outside the band are zeroed.
    pub fn from_amplitudes(config: &GridConfig, gravity: f64, mut h0: Vec<Complex64>) -> Result<Self> {
        config.validate()?;
        let n = config.resolution;
        if h0.len() != n * n {
            return Err(Error::config(format!("expected {} amplitudes, got {}", n * n, h0.len())));
        }
        let wave_vectors = wave_vectors(config, gravity);
        let nyquist = -(n as i64) / 2;
        for (idx, a) in h0.iter_mut().enumerate() {
            let wv = &wave_vectors[idx];
            if frequency(idx / n, n) == nyquist
                || frequency(idx % n, n) == nyquist
                || wv.k == 0.0
                || !config.band.contains(wv.k)
            {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        let h0_conj_neg = conj_neg(&h0, n);
        Ok(WaveGrid { config: *config, gravity, wave_vectors, h0, h0_conj_neg })
    }
}

fn wave_vectors(config: &GridConfig, g: f64) -> Vec<WaveVector> {
    let n = config.resolution;
    let dk = 2.0 * PI / config.length;
    (0..n * n)
        .map(|idx| {
            let kx = dk * frequency(idx / n, n) as f64;
            let kz = dk * frequency(idx % n, n) as f64;
            let k = kx.hypot(kz);
            WaveVector { kx, kz, k, omega: dispersion(k, g) }
        })
        .collect()
}

fn conj_neg(h0: &[Complex64], n: usize) -> Vec<Complex64> {
    (0..n * n)
        .map(|idx| {
            let j = conjugate_index(idx / n, n) * n + conjugate_index(idx % n, n);
            h0[j].conj()
        })
        .collect()
}

fn rng_key(seed: u64, cascade: u32) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&cascade.to_le_bytes());
    key
}

/// Complex unit Gaussian for frequency (n, m), independent of evaluation order.
pub fn gaussian_draw(seed: u64, cascade: u32, n: i64, m: i64) -> Complex64 {
    let mut rng = ChaCha8Rng::from_seed(rng_key(seed, cascade));
    rng.set_stream(((n as i32 as u32 as u64) << 32) | (m as i32 as u32 as u64));
    let g1: f64 = rng.sample(StandardNormal);
    let g2: f64 = rng.sample(StandardNormal);
    Complex64::new(g1, g2) * std::f64::consts::FRAC_1_SQRT_2
}

/// Expected `|h0|^2` at a wave vector, i.e. the amplitude without the random factor.
pub fn amplitude_variance(
    wv: &WaveVector,
    length: f64,
    spectrum: &DirectionalSpectrum,
) -> f64 {
    if wv.k == 0.0 {
        return 0.0;
    }
    let p = spectrum.params();
    let theta = wrap_angle(wv.kz.atan2(wv.kx) - p.wind_direction);
    let s = jonswap(wv.omega, p).unwrap_or(0.0);
    let d = spectrum.eval(wv.omega, theta);
    let dwdk = p.gravity / (2.0 * wv.omega);
    let scale = match p.convention {
        Convention::Literal => 4.0 * PI / (length * wv.k),
        Convention::Physical => 2.0 * PI * PI / (length * length * wv.k),
    };
    let v = scale * s * d * dwdk;
    if v.is_finite() && v > 0.0 {
        v
    } else {
        0.0
    }
}

pub fn generate_h0(config: &GridConfig, params: &SpectrumParams) -> Result<WaveGrid> {
    params.validate()?;
    let spectrum = DirectionalSpectrum::new(params);
    generate_h0_with(config, &spectrum)
}

/// Like [`generate_h0`] but reuses a prepared directional spectrum.
pub fn generate_h0_with(config: &GridConfig, spectrum: &DirectionalSpectrum) -> Result<WaveGrid> {
    config.validate()?;
    let params = spectrum.params();
    let n = config.resolution;
    let g = params.gravity;
    let nyquist = -(n as i64) / 2;
    let wave_vectors = wave_vectors(config, g);

    let mut h0 = vec![Complex64::new(0.0, 0.0); n * n];
    h0.par_chunks_mut(n).enumerate().for_each(|(row, out)| {
        let fn_ = frequency(row, n);
        for (col, slot) in out.iter_mut().enumerate() {
            let fm = frequency(col, n);
            let wv = &wave_vectors[row * n + col];
            if fn_ == nyquist || fm == nyquist || wv.k == 0.0 || !config.band.contains(wv.k) {
                continue;
            }
            let var = amplitude_variance(wv, config.length, spectrum);
            if var == 0.0 {
                continue;
            }
            *slot = gaussian_draw(params.seed, config.cascade, fn_, fm) * var.sqrt();
        }
    });

    let h0_conj_neg = conj_neg(&h0, n);

    Ok(WaveGrid {
        config: *config,
        gravity: g,
        wave_vectors,
        h0,
        h0_conj_neg,
    })
}
