//! Time-dependent surface maps and their sampling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{Ifft2, Precision, RealField};
use crate::spectra::{generate_h0_with, Band, DirectionalSpectrum, GridConfig, SpectrumParams, WaveGrid};

/// The eight real fields produced per cascade, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Height,
    Dx,
    Dz,
    DDxDx,
    DDzDx,
    DDzDz,
    DhDx,
    DhDz,
}

impl FieldKind {
    pub const ALL: [FieldKind; 8] = [
        FieldKind::Height,
        FieldKind::Dx,
        FieldKind::Dz,
        FieldKind::DDxDx,
        FieldKind::DDzDx,
        FieldKind::DDzDz,
        FieldKind::DhDx,
        FieldKind::DhDz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Height => "h",
            FieldKind::Dx => "dx",
            FieldKind::Dz => "dz",
            FieldKind::DDxDx => "ddx_dx",
            FieldKind::DDzDx => "ddz_dx",
            FieldKind::DDzDz => "ddz_dz",
            FieldKind::DhDx => "dh_dx",
            FieldKind::DhDz => "dh_dz",
        }
    }
}

// Transform pairs; each pair is packed into one complex IFFT.
const PAIRS: [(FieldKind, FieldKind); 4] = [
    (FieldKind::Height, FieldKind::Dx),
    (FieldKind::Dz, FieldKind::DDxDx),
    (FieldKind::DDzDx, FieldKind::DDzDz),
    (FieldKind::DhDx, FieldKind::DhDz),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeConfig {
    pub resolution: usize,
    pub lengths: Vec<f64>,
    /// Band boundaries between consecutive cascades, increasing.
    pub cutoffs: Vec<f64>,
    pub choppiness: f64,
    pub height_iterations: usize,
    pub precision: Precision,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            resolution: 256,
            lengths: vec![256.0, 16.0, 4.0],
            cutoffs: vec![12.0 * PI / 16.0, 12.0 * PI / 4.0],
            choppiness: 1.0,
            height_iterations: 4,
            precision: Precision::F64,
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 || !self.resolution.is_power_of_two() {
            return Err(Error::config(format!(
                "cascades.resolution must be a power of two >= 2, got {}",
                self.resolution
            )));
        }
        if self.lengths.is_empty() {
            return Err(Error::config("at least one cascade is required"));
        }
        if self.lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::config("cascade lengths must be positive"));
        }
        if self.lengths.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::config("cascade lengths must be strictly decreasing"));
        }
        if self.cutoffs.len() + 1 != self.lengths.len() {
            return Err(Error::config(format!(
                "{} cascades need {} cutoffs, got {}",
                self.lengths.len(),
                self.lengths.len() - 1,
                self.cutoffs.len()
            )));
        }
        if self.cutoffs.iter().any(|c| !(c.is_finite() && *c > 0.0))
            || self.cutoffs.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::config("cascade cutoffs must be positive and increasing"));
        }
        if !self.choppiness.is_finite() {
            return Err(Error::config("choppiness must be finite"));
        }
        if self.height_iterations == 0 {
            return Err(Error::config("height_iterations must be >= 1"));
        }
        Ok(())
    }

    pub fn bands(&self) -> Vec<Band> {
        let mut edges = vec![0.0];
        edges.extend(&self.cutoffs);
        edges.push(f64::INFINITY);
        edges.windows(2).map(|w| Band { k_min: w[0], k_max: w[1] }).collect()
    }

    pub fn grid_configs(&self) -> Vec<GridConfig> {
        self.lengths
            .iter()
            .zip(self.bands())
            .enumerate()
            .map(|(i, (&length, band))| GridConfig {
                resolution: self.resolution,
                length,
                band,
                cascade: i as u32,
            })
            .collect()
    }
}

/// Per-cascade initial amplitudes plus the transform plan.
#[derive(Debug, Clone)]
pub struct Cascades {
    grids: Vec<WaveGrid>,
    choppiness: f64,
    height_iterations: usize,
    plan: Ifft2,
}

impl Cascades {
    pub fn generate(config: &CascadeConfig, params: &SpectrumParams) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        let spectrum = DirectionalSpectrum::new(params);
        let grids = config
            .grid_configs()
            .par_iter()
            .map(|gc| generate_h0_with(gc, &spectrum))
            .collect::<Result<Vec<_>>>()?;
        Self::from_grids(grids, config.choppiness, config.height_iterations, config.precision)
    }

    pub fn from_grids(
        grids: Vec<WaveGrid>,
        choppiness: f64,
        height_iterations: usize,
        precision: Precision,
    ) -> Result<Self> {
        let n = grids
            .first()
            .map(|g| g.resolution())
            .ok_or_else(|| Error::config("at least one cascade is required"))?;
        if grids.iter().any(|g| g.resolution() != n) {
            return Err(Error::config("all cascades must share one resolution"));
        }
        Ok(Self {
            grids,
            choppiness,
            height_iterations: height_iterations.max(1),
            plan: Ifft2::new(n, precision)?,
        })
    }

    pub fn grids(&self) -> &[WaveGrid] {
        &self.grids
    }

    pub fn resolution(&self) -> usize {
        self.plan.n()
    }

    pub fn choppiness(&self) -> f64 {
        self.choppiness
    }

    pub fn height_iterations(&self) -> usize {
        self.height_iterations
    }

    pub fn plan(&self) -> &Ifft2 {
        &self.plan
    }

    pub fn maps(&self, t: f64) -> SurfaceMaps {
        generate_maps(self, t)
    }
}

/// Frequency-space coefficients of the eight fields, indexed by [`FieldKind`].
pub fn assemble_coefficients(grid: &WaveGrid, t: f64, choppiness: f64) -> [Vec<Complex64>; 8] {
    let n = grid.resolution();
    let mut out: [Vec<Complex64>; 8] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n * n]);
    let h0 = grid.h0();
    let hc = grid.h0_conj_neg();
    let i = Complex64::i();
    for (idx, wv) in grid.wave_vectors().iter().enumerate() {
        if wv.k == 0.0 || (h0[idx] == Complex64::new(0.0, 0.0) && hc[idx] == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let phase = Complex64::from_polar(1.0, wv.omega * t);
        let h = h0[idx] * phase + hc[idx] * phase.conj();
        let dx = i * (wv.kx / wv.k) * h * choppiness;
        let dz = i * (wv.kz / wv.k) * h * choppiness;
        out[0][idx] = h;
        out[1][idx] = dx;
        out[2][idx] = dz;
        out[3][idx] = i * wv.kx * dx;
        out[4][idx] = i * wv.kx * dz;
        out[5][idx] = i * wv.kz * dz;
        out[6][idx] = i * wv.kx * h;
        out[7][idx] = i * wv.kz * h;
    }
    out
}

#[derive(Debug, Clone)]
pub struct CascadeMaps {
    length: f64,
    fields: [RealField; 8],
}

impl CascadeMaps {
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.fields[0].n()
    }

    pub fn field(&self, kind: FieldKind) -> &RealField {
        &self.fields[kind as usize]
    }

    #[inline]
    fn bilinear(&self, kinds: &[FieldKind], x: f64, z: f64, out: &mut [f64]) {
        let (idx, w) = stencil(self.n(), self.length, x, z);
        for (o, &k) in out.iter_mut().zip(kinds) {
            *o += sample_stencil(self.fields[k as usize].data(), &idx, &w);
        }
    }
}

/// Corner indices and weights for periodic bilinear sampling of an `n x n`
/// tile of side `length`.
#[inline]
pub(crate) fn stencil(n: usize, length: f64, x: f64, z: f64) -> ([usize; 4], [f64; 4]) {
    let scale = n as f64 / length;
    let u = x * scale;
    let v = z * scale;
    let fu = u.floor();
    let fv = v.floor();
    let ax = u - fu;
    let az = v - fv;
    let i0 = (fu as i64).rem_euclid(n as i64) as usize;
    let j0 = (fv as i64).rem_euclid(n as i64) as usize;
    let i1 = (i0 + 1) % n;
    let j1 = (j0 + 1) % n;
    (
        [i0 * n + j0, i1 * n + j0, i0 * n + j1, i1 * n + j1],
        [(1.0 - ax) * (1.0 - az), ax * (1.0 - az), (1.0 - ax) * az, ax * az],
    )
}

#[inline]
pub(crate) fn sample_stencil(data: &[f64], idx: &[usize; 4], w: &[f64; 4]) -> f64 {
    w[0] * data[idx[0]] + w[1] * data[idx[1]] + w[2] * data[idx[2]] + w[3] * data[idx[3]]
}

/// Spatial maps of every cascade at one instant. Row `i` is `x = i L / N`,
/// column `j` is `z = j L / N`.
#[derive(Debug, Clone)]
pub struct SurfaceMaps {
    t: f64,
    cascades: Vec<CascadeMaps>,
    height_iterations: usize,
}

pub fn generate_maps(cascades: &Cascades, t: f64) -> SurfaceMaps {
    let plan = cascades.plan();
    let n = plan.n();
    let maps = cascades
        .grids()
        .par_iter()
        .map(|grid| {
            let coeffs = assemble_coefficients(grid, t, cascades.choppiness());
            let mut fields: [RealField; 8] = std::array::from_fn(|_| RealField::zeros(n).expect("valid size"));
            let results: Vec<(Vec<f64>, Vec<f64>)> = PAIRS
                .par_iter()
                .map(|&(a, b)| plan.pair_unchecked(&coeffs[a as usize], &coeffs[b as usize], 1.0))
                .collect();
            for ((a, b), (ra, rb)) in PAIRS.iter().zip(results) {
                fields[*a as usize] = RealField::from_vec(n, ra).expect("valid size");
                fields[*b as usize] = RealField::from_vec(n, rb).expect("valid size");
            }
            CascadeMaps { length: grid.length(), fields }
        })
        .collect();
    SurfaceMaps { t, cascades: maps, height_iterations: cascades.height_iterations() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    /// Displaced surface point `(x + Dx, h, z + Dz)`.
    pub position: [f64; 3],
    pub gradient: [f64; 2],
    /// `[dDx/dx, dDz/dx, dDz/dz]`.
    pub jacobian: [f64; 3],
}

impl SurfaceSample {
    /// Determinant of the horizontal displacement Jacobian.
    pub fn jacobian_determinant(&self) -> f64 {
        let [a, b, c] = self.jacobian;
        (1.0 + a) * (1.0 + c) - b * b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightSolve {
    pub height: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SurfaceMaps {
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn cascades(&self) -> &[CascadeMaps] {
        &self.cascades
    }

    pub fn height_iterations(&self) -> usize {
        self.height_iterations
    }

    pub fn sample_fields(&self, kinds: &[FieldKind], x: f64, z: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for c in &self.cascades {
            c.bilinear(kinds, x, z, out);
        }
    }

    /// Summed displacement `(Dx, h, Dz)` at horizontal position `(x, z)`.
    pub fn sample_displacement(&self, x: f64, z: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        self.sample_fields(&[FieldKind::Dx, FieldKind::Height, FieldKind::Dz], x, z, &mut out);
        out
    }

    pub fn sample_surface(&self, x: f64, z: f64) -> SurfaceSample {
        let mut v = [0.0; 8];
        self.sample_fields(&FieldKind::ALL, x, z, &mut v);
        SurfaceSample {
            position: [x + v[1], v[0], z + v[2]],
            gradient: [v[6], v[7]],
            jacobian: [v[3], v[4], v[5]],
        }
    }

    /// Water height above `(x, z)` after `iterations` fixed-point passes.
    pub fn height_at_iter(&self, x: f64, z: f64, iterations: usize) -> f64 {
        let mut w = [0.0; 3];
        for _ in 0..iterations.max(1) {
            let px = x - w[0];
            let pz = z - w[2];
            w = self.sample_displacement(px, pz);
        }
        w[1]
    }

    pub fn height_at(&self, x: f64, z: f64) -> f64 {
        self.height_at_iter(x, z, self.height_iterations)
    }

    /// Iterates until one more pass would change the height by less than `tol`.
    /// `iterations` is the number of passes that were needed.
    pub fn height_converged(&self, x: f64, z: f64, tol: f64, max_iterations: usize) -> HeightSolve {
        let mut w = self.sample_displacement(x, z);
        let mut prev = w[1];
        for j in 1..=max_iterations {
            w = self.sample_displacement(x - w[0], z - w[2]);
            if (w[1] - prev).abs() < tol {
                return HeightSolve { height: w[1], iterations: j, converged: true };
            }
            prev = w[1];
        }
        HeightSolve { height: w[1], iterations: max_iterations, converged: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::STANDARD_GRAVITY;

    fn single_cascade(n: usize, length: f64, amps: &[((i64, i64), Complex64)]) -> Cascades {
        let gc = GridConfig {
            resolution: n,
            length,
            band: Band { k_min: 0.0, k_max: f64::INFINITY },
            cascade: 0,
        };
        let mut h0 = vec![Complex64::new(0.0, 0.0); n * n];
        for &((a, b), v) in amps {
            let r = (a + n as i64 / 2) as usize;
            let c = (b + n as i64 / 2) as usize;
            h0[r * n + c] = v;
        }
        let grid = WaveGrid::from_amplitudes(&gc, STANDARD_GRAVITY, h0).unwrap();
        Cascades::from_grids(vec![grid], 1.0, 4, Precision::F64).unwrap()
    }

    #[test]
    fn default_bands_partition() {
        let cfg = CascadeConfig::default();
        let bands = cfg.bands();
        assert_eq!(bands.len(), 3);
        assert_eq!(bands[0].k_min, 0.0);
        assert_eq!(bands[0].k_max, bands[1].k_min);
        assert_eq!(bands[1].k_max, bands[2].k_min);
        assert!(bands[2].k_max.is_infinite());
    }

    #[test]
    fn config_validation() {
        let mut c = CascadeConfig::default();
        c.lengths = vec![16.0, 256.0, 4.0];
        assert!(c.validate().is_err());
        let mut c = CascadeConfig::default();
        c.cutoffs.pop();
        assert!(c.validate().is_err());
        let mut c = CascadeConfig::default();
        c.resolution = 100;
        assert!(c.validate().is_err());
    }

    #[test]
    fn flat_sea_is_zero() {
        let c = single_cascade(16, 32.0, &[]);
        let m = c.maps(1.3);
        assert_eq!(m.height_at(3.0, -7.0), 0.0);
        let s = m.height_converged(3.0, -7.0, 0.01, 32);
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn nodes_midpoints_and_tiling() {
        let c = single_cascade(16, 32.0, &[((1, 2), Complex64::new(0.3, 0.1)), ((-3, 1), Complex64::new(-0.2, 0.4))]);
        let m = c.maps(0.7);
        let h = m.cascades()[0].field(FieldKind::Height);
        let dxl = 2.0;
        assert!((m.sample_displacement(3.0 * dxl, 5.0 * dxl)[1] - h.get(3, 5)).abs() < 1e-12);
        let mid = 0.25 * (h.get(3, 5) + h.get(4, 5) + h.get(3, 6) + h.get(4, 6));
        assert!((m.sample_displacement(3.5 * dxl, 5.5 * dxl)[1] - mid).abs() < 1e-12);
        let a = m.sample_displacement(1.234, 5.678);
        let b = m.sample_displacement(1.234 + 32.0, 5.678 - 64.0);
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_derivative_symmetry() {
        let c = single_cascade(8, 10.0, &[((1, 2), Complex64::new(0.3, 0.1)), ((2, -1), Complex64::new(0.1, -0.2))]);
        let grid = &c.grids()[0];
        let coeffs = assemble_coefficients(grid, 0.4, 1.0);
        let i = Complex64::i();
        for (idx, wv) in grid.wave_vectors().iter().enumerate() {
            let ddx_dz = i * wv.kz * coeffs[1][idx];
            assert!((ddx_dz - coeffs[4][idx]).norm() < 1e-12);
        }
    }

    #[test]
    fn no_choppiness_converges_in_one_pass() {
        let amps = [((1, 2), Complex64::new(0.3, 0.1))];
        let c = single_cascade(16, 32.0, &amps);
        let c = Cascades::from_grids(c.grids().to_vec(), 0.0, 4, Precision::F64).unwrap();
        let m = c.maps(0.2);
        let s = m.height_converged(3.3, 1.1, 0.01, 32);
        assert_eq!(s.iterations, 1);
        assert!((m.height_at(3.3, 1.1) - m.sample_displacement(3.3, 1.1)[1]).abs() < 1e-15);
    }
}
