//! Per-body wake zones: a translating grid solving the damped 2D wave
//! equation, forced by a mask under the hull.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Courant number squared used for the wave speed, `(c dt / delta)^2`.
pub const CFL_RATIO: f64 = 0.49;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DampingParams {
    pub d0: f64,
    pub d_max: f64,
    pub v_max: f64,
}

impl Default for DampingParams {
    fn default() -> Self {
        Self { d0: 0.98, d_max: 0.999, v_max: 5.0 }
    }
}

pub fn damping_factor(speed: f64, p: &DampingParams) -> f64 {
    let u = (speed / p.v_max).clamp(0.0, 1.0);
    p.d0 + (p.d_max - p.d0) * u
}

/// Unclamped grid spacing for a body moving at `speed`.
pub fn stable_spacing(speed: f64, dt: f64) -> f64 {
    if speed < 1.0 {
        0.999 * dt
    } else {
        speed * 0.999 * dt
    }
}

pub fn wave_speed(delta: f64, dt: f64) -> f64 {
    CFL_RATIO.sqrt() * delta / dt
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZoneConfig {
    pub grid_size: usize,
    pub margin: usize,
    pub damping: DampingParams,
    /// Derived from the body size when unset.
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    /// Maximum relative change of the spacing per frame.
    pub delta_rate: f64,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        Self {
            grid_size: 512,
            margin: 16,
            damping: DampingParams::default(),
            delta_min: None,
            delta_max: None,
            delta_rate: 0.05,
        }
    }
}

impl ZoneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 8 {
            return Err(Error::config("zone grid_size must be >= 8"));
        }
        if self.margin < 2 || 2 * self.margin >= self.grid_size {
            return Err(Error::config("zone margin must be > 1 and leave interior cells"));
        }
        let d = &self.damping;
        if !(d.d0 > 0.0 && d.d0 <= d.d_max && d.d_max <= 1.0 && d.v_max > 0.0) {
            return Err(Error::config("damping needs 0 < d0 <= d_max <= 1 and v_max > 0"));
        }
        if !(self.delta_rate >= 0.0) {
            return Err(Error::config("delta_rate must be >= 0"));
        }
        if let (Some(a), Some(b)) = (self.delta_min, self.delta_max) {
            if !(a > 0.0 && a <= b) {
                return Err(Error::config("zone spacing bounds need 0 < delta_min <= delta_max"));
            }
        }
        Ok(())
    }

    /// Spacing bounds so the interior spans at least twice `body_size`.
    pub fn spacing_bounds(&self, body_size: f64) -> (f64, f64) {
        let interior = (self.grid_size - 2 * self.margin) as f64;
        let lo = self.delta_min.unwrap_or(2.0 * body_size / interior);
        let hi = self.delta_max.unwrap_or(8.0 * lo).max(lo);
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdmZone {
    n: usize,
    margin: usize,
    delta: f64,
    c: f64,
    delta_min: f64,
    delta_max: f64,
    delta_rate: f64,
    damping: DampingParams,
    h_curr: Vec<f64>,
    h_prev: Vec<f64>,
    p_prev: [f64; 2],
    p_curr: [f64; 2],
    last_damping: f64,
    dropped_wake: usize,
}

fn cell_anchor(p: f64, delta: f64) -> i64 {
    (p / delta).floor() as i64
}

impl FdmZone {
    /// Flat zone centred on `position` with spacing bounds `[delta_min, delta_max]`.
    pub fn new(config: &ZoneConfig, delta_min: f64, delta_max: f64, position: [f64; 2], speed: f64, dt: f64) -> Result<Self> {
        config.validate()?;
        if !(delta_min > 0.0 && delta_min <= delta_max && dt > 0.0) {
            return Err(Error::config("zone needs 0 < delta_min <= delta_max and dt > 0"));
        }
        let n = config.grid_size;
        let delta = stable_spacing(speed, dt).clamp(delta_min, delta_max);
        Ok(Self {
            n,
            margin: config.margin,
            delta,
            c: wave_speed(delta, dt),
            delta_min,
            delta_max,
            delta_rate: config.delta_rate,
            damping: config.damping,
            h_curr: vec![0.0; n * n],
            h_prev: vec![0.0; n * n],
            p_prev: position,
            p_curr: position,
            last_damping: damping_factor(speed, &config.damping),
            dropped_wake: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn wave_speed(&self) -> f64 {
        self.c
    }

    pub fn last_damping(&self) -> f64 {
        self.last_damping
    }

    pub fn dropped_wake(&self) -> usize {
        self.dropped_wake
    }

    pub fn position(&self) -> [f64; 2] {
        self.p_curr
    }

    pub fn heights(&self) -> &[f64] {
        &self.h_curr
    }

    pub fn previous_heights(&self) -> &[f64] {
        &self.h_prev
    }

    pub fn set_height(&mut self, i: usize, j: usize, v: f64) {
        self.h_curr[i * self.n + j] = v;
    }

    /// Sets both time levels, i.e. a field at rest.
    pub fn set_resting(&mut self, i: usize, j: usize, v: f64) {
        self.h_curr[i * self.n + j] = v;
        self.h_prev[i * self.n + j] = v;
    }

    pub fn height(&self, i: usize, j: usize) -> f64 {
        self.h_curr[i * self.n + j]
    }

    pub fn energy(&self) -> f64 {
        crate::reduce::pairwise_sum(&self.h_curr.iter().map(|v| v * v).collect::<Vec<_>>())
    }

    pub fn max_abs(&self) -> f64 {
        self.h_curr.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.h_curr.iter().chain(&self.h_prev).all(|v| v.is_finite())
    }

    fn anchor(&self) -> [i64; 2] {
        [cell_anchor(self.p_curr[0], self.delta), cell_anchor(self.p_curr[1], self.delta)]
    }

    /// World `(x, z)` of cell `(i, j)`.
    pub fn cell_world(&self, i: usize, j: usize) -> [f64; 2] {
        let a = self.anchor();
        let half = (self.n / 2) as i64;
        [
            (a[0] + i as i64 - half) as f64 * self.delta,
            (a[1] + j as i64 - half) as f64 * self.delta,
        ]
    }

    /// Fractional cell coordinates of a world point.
    pub fn world_to_cell(&self, x: f64, z: f64) -> [f64; 2] {
        let a = self.anchor();
        let half = (self.n / 2) as f64;
        [x / self.delta - a[0] as f64 + half, z / self.delta - a[1] as f64 + half]
    }

    /// Adapts the spacing to the body speed and returns `(delta, c)`.
    pub fn update_stability(&mut self, speed: f64, dt: f64) -> (f64, f64) {
        let target = stable_spacing(speed, dt).clamp(self.delta_min, self.delta_max);
        let lo = self.delta * (1.0 - self.delta_rate);
        let hi = self.delta * (1.0 + self.delta_rate);
        self.delta = target.clamp(lo, hi).clamp(self.delta_min, self.delta_max);
        self.c = wave_speed(self.delta, dt);
        (self.delta, self.c)
    }

    /// Sets the spacing directly, bypassing rate limiting.
    pub fn set_spacing(&mut self, delta: f64, dt: f64) {
        self.delta = delta;
        self.c = wave_speed(delta, dt);
    }

    fn clamp_shift(&mut self, s: i64) -> i64 {
        let m = self.margin as i64;
        if s.abs() > m {
            self.dropped_wake += 1;
            log::warn!("zone shift of {s} cells exceeds margin {m}; wake dropped");
            s.clamp(-m, m)
        } else {
            s
        }
    }

    /// Advances one step with the speed-dependent damping.
    pub fn step(&mut self, dt: f64, p_next: [f64; 2], speed: f64) {
        let d = damping_factor(speed, &self.damping);
        self.step_with_damping(dt, p_next, d);
    }

    pub fn step_with_damping(&mut self, dt: f64, p_next: [f64; 2], damping: f64) {
        let n = self.n;
        let ratio = self.c * dt / self.delta;
        let a = ratio * ratio;
        let b = 2.0 - 4.0 * a;
        let next_anchor = [cell_anchor(p_next[0], self.delta), cell_anchor(p_next[1], self.delta)];
        let curr = self.anchor();
        let prev = [cell_anchor(self.p_prev[0], self.delta), cell_anchor(self.p_prev[1], self.delta)];
        let sx = self.clamp_shift(next_anchor[0] - curr[0]);
        let sz = self.clamp_shift(next_anchor[1] - curr[1]);
        let ox = self.clamp_shift(next_anchor[0] - prev[0]);
        let oz = self.clamp_shift(next_anchor[1] - prev[1]);

        let h = &self.h_curr;
        let hp = &self.h_prev;
        let get = |f: &[f64], i: i64, j: i64| -> f64 {
            if i < 0 || j < 0 || i >= n as i64 || j >= n as i64 {
                0.0
            } else {
                f[i as usize * n + j as usize]
            }
        };
        let mut next = vec![0.0; n * n];
        next.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            if i == 0 || i == n - 1 {
                return;
            }
            let k = i as i64 + sx;
            let o = i as i64 + ox;
            for (j, out) in row.iter_mut().enumerate().take(n - 1).skip(1) {
                let l = j as i64 + sz;
                let p = j as i64 + oz;
                let lap = get(h, k + 1, l) + get(h, k - 1, l) + get(h, k, l + 1) + get(h, k, l - 1);
                *out = damping * (a * lap + b * get(h, k, l) - get(hp, o, p));
            }
        });
        self.h_prev = std::mem::replace(&mut self.h_curr, next);
        self.p_prev = self.p_curr;
        self.p_curr = p_next;
        self.last_damping = damping;
    }

    /// Bilinear sample of the current field; zero outside the grid.
    pub fn sample(&self, x: f64, z: f64) -> f64 {
        let [u, v] = self.world_to_cell(x, z);
        let n = self.n as f64;
        if !(u >= 0.0 && v >= 0.0 && u <= n - 1.0 && v <= n - 1.0) {
            return 0.0;
        }
        let i0 = (u.floor() as usize).min(self.n - 2);
        let j0 = (v.floor() as usize).min(self.n - 2);
        let fx = u - i0 as f64;
        let fz = v - j0 as f64;
        let h = |i: usize, j: usize| self.h_curr[i * self.n + j];
        (1.0 - fx) * (1.0 - fz) * h(i0, j0)
            + fx * (1.0 - fz) * h(i0 + 1, j0)
            + (1.0 - fx) * fz * h(i0, j0 + 1)
            + fx * fz * h(i0 + 1, j0 + 1)
    }

    /// Overwrites the current field at the given cells.
    pub fn apply_mask(&mut self, cells: &[usize], heights: &[f64]) {
        for (&c, &h) in cells.iter().zip(heights) {
            self.h_curr[c] = h;
        }
    }
}

/// Even-odd test with a ray toward +z.
pub fn point_in_loops(loops: &[Vec<[f64; 2]>], x: f64, z: f64) -> bool {
    let mut inside = false;
    for lp in loops {
        let m = lp.len();
        if m < 2 {
            continue;
        }
        let mut j = m - 1;
        for i in 0..m {
            let (xi, zi) = (lp[i][0], lp[i][1]);
            let (xj, zj) = (lp[j][0], lp[j][1]);
            if (xi > x) != (xj > x) {
                let zc = zi + (x - xi) * (zj - zi) / (xj - xi);
                if z < zc {
                    inside = !inside;
                }
            }
            j = i;
        }
    }
    inside
}

/// Cells of `zone` under the waterline loops. Loops are world `(x, z)`
/// polylines; the test runs in the body frame rotated by `-yaw` about `center`.
pub fn compute_mask(zone: &FdmZone, loops: &[Vec<[f64; 2]>], center: [f64; 2], yaw: f64) -> Vec<usize> {
    let pts = loops.iter().flatten();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !lo[0].is_finite() {
        return Vec::new();
    }
    let (s, c) = yaw.sin_cos();
    // Body frame: +z along the heading (sin yaw, cos yaw) in world (x, z).
    let to_body = |p: [f64; 2]| {
        let dx = p[0] - center[0];
        let dz = p[1] - center[1];
        [dx * c - dz * s, dx * s + dz * c]
    };
    let body_loops: Vec<Vec<[f64; 2]>> = loops.iter().map(|l| l.iter().map(|&p| to_body(p)).collect()).collect();
    let a = zone.world_to_cell(lo[0], lo[1]);
    let b = zone.world_to_cell(hi[0], hi[1]);
    let n = zone.n() as i64;
    let i0 = (a[0].floor() as i64).clamp(0, n - 1) as usize;
    let i1 = (b[0].ceil() as i64).clamp(0, n - 1) as usize;
    let j0 = (a[1].floor() as i64).clamp(0, n - 1) as usize;
    let j1 = (b[1].ceil() as i64).clamp(0, n - 1) as usize;
    let mut cells = Vec::new();
    for i in i0..=i1 {
        for j in j0..=j1 {
            let w = zone.cell_world(i, j);
            if w[0] < lo[0] || w[0] > hi[0] || w[1] < lo[1] || w[1] > hi[1] {
                continue;
            }
            let p = to_body(w);
            if point_in_loops(&body_loops, p[0], p[1]) {
                cells.push(i * zone.n() + j);
            }
        }
    }
    cells
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskParams {
    /// Stern height `h_b`, m.
    pub back_height: f64,
    /// Bow factor `i_f`.
    pub front_factor: f64,
    /// Overall factor `b_w`.
    pub width_factor: f64,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self { back_height: -0.02, front_factor: 0.05, width_factor: 0.2 }
    }
}

/// Body-frame geometry needed by [`mask_height`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskGeometry {
    pub center_x: f64,
    pub width: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub height: f64,
}

pub fn bow_height(speed: f64, geom: &MaskGeometry, params: &MaskParams, volume_ratio: f64) -> f64 {
    speed * geom.height * params.front_factor * volume_ratio
}

/// V-shaped mask height at body-frame `(x, z)`.
pub fn mask_height(x: f64, z: f64, geom: &MaskGeometry, speed: f64, volume_ratio: f64, params: &MaskParams) -> Result<f64> {
    let bz = geom.z_max - geom.z_min;
    if !(geom.width > 0.0) || !(bz > 0.0) {
        return Err(Error::Geometry(format!(
            "mask needs positive extents, got b_x = {}, b_z = {bz}",
            geom.width
        )));
    }
    let hf = bow_height(speed, geom, params, volume_ratio);
    let hb = params.back_height;
    let f = (x - geom.center_x).abs() / geom.width;
    let a = (hf - hb) / bz;
    let b = (hb * geom.z_max - hf * geom.z_min) / bz;
    Ok(params.width_factor * (f + a * z + b))
}
