//! Water velocity below (and slightly above) the surface.
//!
//! [`VelocityOracle`] evaluates the exact modal sum. [`VelocitySlices`] holds
//! IFFT planes at a handful of depths and interpolates between them.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::RealField;
use crate::surface::{sample_stencil, stencil, Cascades};

/// Vertical attenuation of a mode with wavenumber `k` at height `y`.
pub fn attenuation(k: f64, y: f64) -> f64 {
    if y > 0.0 {
        1.0 + k * y
    } else {
        (k * y).exp()
    }
}

const LOG_ALPHA: f64 = 1e-4;

/// Depth distortion `sign(y) beta ln(alpha y^2 + 1)` with `l(y_min) = y_min / 2`.
pub fn log_distribution(y: f64, y_min: f64) -> f64 {
    let beta = -y_min / (2.0 * (LOG_ALPHA * y_min * y_min + 1.0).ln());
    let v = beta * (LOG_ALPHA * y * y + 1.0).ln();
    if y < 0.0 {
        -v
    } else {
        v
    }
}

const TINY: f64 = 1e-12;

fn lerp(a: f64, fa: f64, b: f64, fb: f64, x: f64) -> f64 {
    fa + (fb - fa) * (x - a) / (b - a)
}

/// Exponential interpolation through `(a, f_a)` and `(b, f_b)`, linear when
/// the values differ in sign or one of them is (nearly) zero.
pub fn exp_interp(a: f64, fa: f64, b: f64, fb: f64, x: f64) -> Result<f64> {
    if a == b {
        return Err(Error::domain("exp_interp needs distinct abscissae"));
    }
    if x == a {
        return Ok(fa);
    }
    if x == b {
        return Ok(fb);
    }
    if fa.abs() < TINY || fb.abs() < TINY || (fa > 0.0) != (fb > 0.0) {
        return Ok(lerp(a, fa, b, fb, x));
    }
    let beta = (fb.abs().ln() - fa.abs().ln()) / (b - a);
    Ok(fa * (beta * (x - a)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DepthSpacing {
    #[default]
    Logarithmic,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Exponential,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SliceConfig {
    pub y_min: f64,
    pub y_max: f64,
    pub degree: usize,
    pub spacing: DepthSpacing,
    pub interpolation: Interpolation,
    /// Rebuild the slices every this many steps.
    pub rebuild_stride: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        Self {
            y_min: -125.0,
            y_max: 4.5,
            degree: 8,
            spacing: DepthSpacing::Logarithmic,
            interpolation: Interpolation::Exponential,
            rebuild_stride: 1,
        }
    }
}

impl SliceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.y_min.is_finite() && self.y_max.is_finite() && self.y_min < 0.0 && self.y_min < self.y_max) {
            return Err(Error::config(format!(
                "velocity depth range must satisfy y_min < 0 and y_min < y_max, got [{}, {}]",
                self.y_min, self.y_max
            )));
        }
        if self.degree < 2 {
            return Err(Error::config("velocity degree must be >= 2"));
        }
        if self.rebuild_stride == 0 {
            return Err(Error::config("rebuild_stride must be >= 1"));
        }
        Ok(())
    }
}

/// Sampled depths, increasing.
pub fn slice_depths(spacing: DepthSpacing, degree: usize, y_min: f64, y_max: f64) -> Vec<f64> {
    let step = (y_max - y_min) / (degree - 1) as f64;
    (0..degree)
        .map(|i| {
            let u = if i + 1 == degree { y_max } else { y_min + step * i as f64 };
            match spacing {
                DepthSpacing::Uniform => u,
                DepthSpacing::Logarithmic => log_distribution(u, y_min),
            }
        })
        .collect()
}

struct ModeSet {
    kx: Vec<f64>,
    kz: Vec<f64>,
    k: Vec<f64>,
    /// Depth-independent velocity coefficients (x, y, z).
    c: Vec<[Complex64; 3]>,
    storage: Vec<usize>,
    length: f64,
    n: usize,
}

fn mode_set(cascades: &Cascades, cascade: usize, t: f64, half: bool) -> ModeSet {
    let grid = &cascades.grids()[cascade];
    let n = grid.resolution();
    let g = grid.gravity();
    let h0 = grid.h0();
    let hc = grid.h0_conj_neg();
    let zero = Complex64::new(0.0, 0.0);
    let mut set = ModeSet {
        kx: Vec::new(),
        kz: Vec::new(),
        k: Vec::new(),
        c: Vec::new(),
        storage: Vec::new(),
        length: grid.length(),
        n,
    };
    for (idx, wv) in grid.wave_vectors().iter().enumerate() {
        if wv.k == 0.0 || (h0[idx] == zero && hc[idx] == zero) {
            continue;
        }
        if half {
            // Keep one member of each +-k pair; the partner is its conjugate.
            let (r, col) = (idx / n, idx % n);
            let (cr, cc) = ((n - r) % n, (n - col) % n);
            if (r, col) > (cr, cc) {
                continue;
            }
        }
        let phase = Complex64::from_polar(1.0, wv.omega * t);
        let b = h0[idx] * phase - hc[idx] * phase.conj();
        set.kx.push(wv.kx);
        set.kz.push(wv.kz);
        set.k.push(wv.k);
        set.c.push([
            b * (-wv.kx * g / wv.omega),
            b * Complex64::new(0.0, wv.omega),
            b * (-wv.kz * g / wv.omega),
        ]);
        set.storage.push(idx);
    }
    set
}

/// Exact modal velocity sum, used as reference for the slice path.
pub struct VelocityOracle {
    sets: Vec<ModeSet>,
    self_paired: Vec<Vec<bool>>,
}

impl VelocityOracle {
    pub fn new(cascades: &Cascades, t: f64) -> Self {
        let sets: Vec<ModeSet> = (0..cascades.grids().len())
            .map(|i| mode_set(cascades, i, t, true))
            .collect();
        let self_paired = sets
            .iter()
            .map(|s| {
                s.storage
                    .iter()
                    .map(|&idx| {
                        let (r, c) = (idx / s.n, idx % s.n);
                        ((s.n - r) % s.n, (s.n - c) % s.n) == (r, c)
                    })
                    .collect()
            })
            .collect();
        Self { sets, self_paired }
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (set, selfp) in self.sets.iter().zip(&self.self_paired) {
            for i in 0..set.k.len() {
                let e = attenuation(set.k[i], y);
                if e == 0.0 {
                    continue;
                }
                let w = Complex64::from_polar(1.0, set.kx[i] * x + set.kz[i] * z);
                let f = if selfp[i] { e } else { 2.0 * e };
                for (vc, c) in v.iter_mut().zip(&set.c[i]) {
                    *vc += f * (c * w).re;
                }
            }
        }
        v
    }
}

pub fn velocity_direct(cascades: &Cascades, x: f64, z: f64, y: f64, t: f64) -> [f64; 3] {
    VelocityOracle::new(cascades, t).eval(x, y, z)
}

#[derive(Debug, Clone)]
struct SlicePlane {
    /// Per cascade: vx, vy, vz.
    fields: Vec<[RealField; 3]>,
}

#[derive(Debug, Clone)]
pub struct VelocitySlices {
    y_min: f64,
    y_max: f64,
    spacing: DepthSpacing,
    depths: Vec<f64>,
    planes: Vec<SlicePlane>,
    lengths: Vec<f64>,
    n: usize,
    t: f64,
}

pub fn build_slices(cascades: &Cascades, t: f64, config: &SliceConfig) -> Result<VelocitySlices> {
    config.validate()?;
    let depths = slice_depths(config.spacing, config.degree, config.y_min, config.y_max);
    let n = cascades.resolution();
    let plan = cascades.plan();
    let sets: Vec<ModeSet> = (0..cascades.grids().len())
        .map(|i| mode_set(cascades, i, t, false))
        .collect();

    let spectra_at = |set: &ModeSet, y: f64, comp: usize| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..set.k.len() {
            out[set.storage[i]] = set.c[i][comp] * attenuation(set.k[i], y);
        }
        out
    };

    // vx + i vz per depth.
    let horizontal: Vec<Vec<(Vec<f64>, Vec<f64>)>> = depths
        .par_iter()
        .map(|&y| {
            sets.iter()
                .map(|set| plan.pair_unchecked(&spectra_at(set, y, 0), &spectra_at(set, y, 2), 1.0))
                .collect()
        })
        .collect();
    // vy of two consecutive depths per transform.
    let pairs: Vec<(usize, Option<usize>)> = (0..depths.len())
        .step_by(2)
        .map(|i| (i, (i + 1 < depths.len()).then_some(i + 1)))
        .collect();
    let vertical: Vec<Vec<(Vec<f64>, Vec<f64>)>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            sets.iter()
                .map(|set| {
                    let sa = spectra_at(set, depths[a], 1);
                    let sb = match b {
                        Some(b) => spectra_at(set, depths[b], 1),
                        None => vec![Complex64::new(0.0, 0.0); n * n],
                    };
                    plan.pair_unchecked(&sa, &sb, 1.0)
                })
                .collect()
        })
        .collect();

    let mut vy: Vec<Vec<Vec<f64>>> = vec![Vec::new(); depths.len()];
    for ((a, b), per_cascade) in pairs.iter().zip(vertical) {
        for (ya, yb) in per_cascade {
            vy[*a].push(ya);
            if let Some(b) = b {
                vy[*b].push(yb);
            }
        }
    }
    let field = |v: Vec<f64>| RealField::from_vec(n, v).expect("valid size");
    let planes = horizontal
        .into_iter()
        .zip(vy)
        .map(|(h, v)| SlicePlane {
            fields: h
                .into_iter()
                .zip(v)
                .map(|((vx, vz), vy)| [field(vx), field(vy), field(vz)])
                .collect(),
        })
        .collect();

    Ok(VelocitySlices {
        y_min: config.y_min,
        y_max: config.y_max,
        spacing: config.spacing,
        depths,
        planes,
        lengths: sets.iter().map(|s| s.length).collect(),
        n,
        t,
    })
}

fn wrap_pi(a: f64) -> f64 {
    let t = (a + PI).rem_euclid(2.0 * PI) - PI;
    if t == -PI {
        PI
    } else {
        t
    }
}

impl VelocitySlices {
    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.y_min, self.y_max)
    }

    pub fn spacing(&self) -> DepthSpacing {
        self.spacing
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Velocity stored in plane `i` at `(x, z)`.
    pub fn sample_plane(&self, i: usize, x: f64, z: f64) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (fields, &length) in self.planes[i].fields.iter().zip(&self.lengths) {
            let (idx, w) = stencil(self.n, length, x, z);
            for (c, f) in v.iter_mut().zip(fields) {
                *c += sample_stencil(f.data(), &idx, &w);
            }
        }
        v
    }

    /// Interpolation nodes: the log scheme prepends a zero-velocity node at `y_min`.
    fn nodes(&self) -> Vec<(f64, Option<usize>)> {
        let mut nodes = Vec::with_capacity(self.depths.len() + 1);
        if self.spacing == DepthSpacing::Logarithmic {
            nodes.push((self.y_min, None));
        }
        nodes.extend(self.depths.iter().enumerate().map(|(i, &y)| (y, Some(i))));
        nodes
    }

    pub fn velocity_at(&self, x: f64, y: f64, z: f64, interp: Interpolation) -> Result<[f64; 3]> {
        if !(y >= self.y_min - 1e-9 && y <= self.y_max + 1e-9) {
            return Err(Error::domain(format!(
                "depth {y} outside [{}, {}]",
                self.y_min, self.y_max
            )));
        }
        let nodes = self.nodes();
        let seg = nodes
            .iter()
            .rposition(|&(ny, _)| ny <= y)
            .unwrap_or(0)
            .min(nodes.len() - 2);
        let (a, ia) = nodes[seg];
        let (b, ib) = nodes[seg + 1];
        let sample = |i: Option<usize>| i.map_or([0.0; 3], |i| self.sample_plane(i, x, z));
        let va = sample(ia);
        let vb = sample(ib);
        if y == a {
            return Ok(va);
        }
        if y == b {
            return Ok(vb);
        }
        // Above the top plane the attenuation is linear in y.
        if y > b || matches!(interp, Interpolation::Linear) {
            return Ok(std::array::from_fn(|c| lerp(a, va[c], b, vb[c], y)));
        }
        interpolate_exponential(a, va, b, vb, y)
    }
}

/// Horizontal magnitude and angle interpolated separately from the vertical part.
fn interpolate_exponential(a: f64, va: [f64; 3], b: f64, vb: [f64; 3], y: f64) -> Result<[f64; 3]> {
    let ma = va[0].hypot(va[2]);
    let mb = vb[0].hypot(vb[2]);
    let vy = exp_interp(a, va[1], b, vb[1], y)?;
    let mag = exp_interp(a, ma, b, mb, y)?;
    let angle = if ma < TINY && mb < TINY {
        0.0
    } else if ma < TINY {
        vb[2].atan2(vb[0])
    } else if mb < TINY {
        va[2].atan2(va[0])
    } else {
        let ta = va[2].atan2(va[0]);
        let gap = wrap_pi(vb[2].atan2(vb[0]) - ta);
        if gap.abs() > PI - 0.1 {
            return Ok([lerp(a, va[0], b, vb[0], y), vy, lerp(a, va[2], b, vb[2], y)]);
        }
        let beta = (mb.ln() - ma.ln()) / (b - a);
        let w = if (beta * (b - a)).abs() < 1e-9 {
            (y - a) / (b - a)
        } else {
            ((beta * (y - a)).exp() - 1.0) / ((beta * (b - a)).exp() - 1.0)
        };
        ta + w * gap
    };
    Ok([mag * angle.cos(), vy, mag * angle.sin()])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccuracyConfig {
    pub samples: usize,
    pub seed: u64,
    pub half_extent: f64,
    pub time: f64,
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        Self { samples: 10_000, seed: 1, half_extent: 1000.0, time: 0.0 }
    }
}

/// Uniform random positions in the study box with their exact velocities.
pub fn reference_samples(
    cascades: &Cascades,
    slice: &SliceConfig,
    config: &AccuracyConfig,
) -> Vec<ReferenceSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let positions: Vec<[f64; 3]> = (0..config.samples)
        .map(|_| {
            let h = config.half_extent;
            [
                rng.random_range(-h..h),
                rng.random_range(slice.y_min..slice.y_max),
                rng.random_range(-h..h),
            ]
        })
        .collect();
    let oracle = VelocityOracle::new(cascades, config.time);
    positions
        .par_iter()
        .map(|&p| ReferenceSample { position: p, velocity: oracle.eval(p[0], p[1], p[2]) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub degree: usize,
    pub spacing: DepthSpacing,
    pub interpolation: Interpolation,
    pub mean_error: f64,
    pub p95_error: f64,
    pub build_ms: f64,
    pub query_ns: f64,
}

impl AccuracyRow {
    pub fn scheme(&self) -> String {
        let s = match self.spacing {
            DepthSpacing::Logarithmic => "log",
            DepthSpacing::Uniform => "uniform",
        };
        let i = match self.interpolation {
            Interpolation::Exponential => "exp",
            Interpolation::Linear => "linear",
        };
        format!("{s}+{i}")
    }
}

/// Error of `| |v_slices| - |v_exact| |` over the reference set.
pub fn interpolation_accuracy(
    cascades: &Cascades,
    reference: &[ReferenceSample],
    slice: &SliceConfig,
    time: f64,
) -> Result<AccuracyRow> {
    let start = Instant::now();
    let slices = build_slices(cascades, time, slice)?;
    let build = start.elapsed();
    let start = Instant::now();
    let approx = reference
        .iter()
        .map(|r| slices.velocity_at(r.position[0], r.position[1], r.position[2], slice.interpolation))
        .collect::<Result<Vec<_>>>()?;
    let query = start.elapsed();
    let norm = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let mut errors: Vec<f64> = approx
        .iter()
        .zip(reference)
        .map(|(a, r)| (norm(a) - norm(&r.velocity)).abs())
        .collect();
    let mean_error = crate::reduce::mean(&errors);
    errors.sort_by(|a, b| a.total_cmp(b));
    let p95_error = if errors.is_empty() {
        0.0
    } else {
        errors[((errors.len() as f64 * 0.95).ceil() as usize).clamp(1, errors.len()) - 1]
    };
    Ok(AccuracyRow {
        degree: slice.degree,
        spacing: slice.spacing,
        interpolation: slice.interpolation,
        mean_error,
        p95_error,
        build_ms: build.as_secs_f64() * 1e3,
        query_ns: if reference.is_empty() {
            0.0
        } else {
            query.as_secs_f64() * 1e9 / reference.len() as f64
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeRow {
    pub degree: usize,
    /// Mean velocity-magnitude error, m/s.
    pub accuracy: f64,
    /// Build plus query wall time, s.
    pub performance: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeStudyResult {
    pub alpha: f64,
    pub beta: f64,
    pub rows: Vec<DegreeRow>,
}

impl DegreeStudyResult {
    pub fn best_degree(&self) -> Option<usize> {
        self.rows
            .iter()
            .min_by(|a, b| a.objective.total_cmp(&b.objective))
            .map(|r| r.degree)
    }
}

/// Evaluates `J(d) = alpha P(d) + beta A(d)` for each degree using the
/// logarithmic + exponential scheme.
pub fn degree_study(
    cascades: &Cascades,
    reference: &[ReferenceSample],
    base: &SliceConfig,
    time: f64,
    degrees: &[usize],
    alpha: f64,
    beta: f64,
) -> Result<DegreeStudyResult> {
    if degrees.is_empty() {
        return Err(Error::config("degree study needs at least one degree"));
    }
    let rows = degrees
        .iter()
        .map(|&d| {
            let cfg = SliceConfig {
                degree: d,
                spacing: DepthSpacing::Logarithmic,
                interpolation: Interpolation::Exponential,
                ..*base
            };
            let row = interpolation_accuracy(cascades, reference, &cfg, time)?;
            let performance = row.build_ms * 1e-3 + row.query_ns * 1e-9 * reference.len() as f64;
            Ok(DegreeRow {
                degree: d,
                accuracy: row.mean_error,
                performance,
                objective: alpha * performance + beta * row.mean_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DegreeStudyResult { alpha, beta, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attenuation_values() {
        for k in [0.0, 0.3, 2.0] {
            assert_eq!(attenuation(k, 0.0), 1.0);
        }
        for y in [-10.0, 0.0, 3.0] {
            assert_eq!(attenuation(0.0, y), 1.0);
        }
        let k = 0.7;
        let h = 1e-6;
        let left = (attenuation(k, 0.0) - attenuation(k, -h)) / h;
        let right = (attenuation(k, h) - attenuation(k, 0.0)) / h;
        assert!((left - k).abs() < 1e-5 && (right - k).abs() < 1e-9);
    }

    #[test]
    fn log_distribution_values() {
        assert_eq!(log_distribution(0.0, -125.0), 0.0);
        assert!((log_distribution(-125.0, -125.0) + 62.5).abs() < 1e-12);
        for y in [0.5, 10.0, 80.0] {
            assert_eq!(log_distribution(-y, -125.0), -log_distribution(y, -125.0));
        }
    }

    #[test]
    fn default_log_depths() {
        let d = slice_depths(DepthSpacing::Logarithmic, 8, -125.0, 4.5);
        assert_eq!(d.len(), 8);
        assert!((d[0] + 62.5).abs() < 1e-12);
        assert!(d.windows(2).all(|w| w[0] < w[1]));
        let u = slice_depths(DepthSpacing::Uniform, 8, -125.0, 4.5);
        assert_eq!(u[0], -125.0);
        assert_eq!(u[7], 4.5);
    }

    #[test]
    fn exp_interp_contract() {
        assert_eq!(exp_interp(-2.0, 3.0, 0.0, 5.0, -2.0).unwrap(), 3.0);
        assert_eq!(exp_interp(-2.0, 3.0, 0.0, 5.0, 0.0).unwrap(), 5.0);
        let v = exp_interp(-2.0, (-2f64).exp(), 0.0, 1.0, -1.0).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(exp_interp(0.0, 1.0, 2.0, -1.0, 1.0).unwrap(), 0.0);
        assert!(exp_interp(1.0, 1.0, 1.0, 2.0, 1.0).is_err());
        let neg = exp_interp(0.0, -1.0, 1.0, -(1f64).exp(), 0.5).unwrap();
        assert!((neg + 0.5f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn antipodal_angles_fall_back_to_linear() {
        let v = interpolate_exponential(0.0, [1.0, 0.0, 0.0], 1.0, [-1.0, 0.0, 0.0], 0.5).unwrap();
        assert!(v[0].abs() < 1e-15 && v[2].abs() < 1e-15);
    }

    #[test]
    fn angle_follows_shortest_arc() {
        let a = [1.0, 0.0, 0.0];
        let b = [(3.0f64).cos(), 0.0, -(3.0f64).sin()];
        let v = interpolate_exponential(0.0, a, 1.0, b, 0.5).unwrap();
        let ang = v[2].atan2(v[0]);
        assert!(ang < 0.0 && ang > -3.0);
    }
}
