//! Forces of the water and air on a floating mesh.
//!
//! Triangles are classified against the sampled surface, partially wet ones
//! are split along the waterline, and the wet part feeds a prism volume sum,
//! buoyancy and a quadratic drag model.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{TriMesh, Vec3};
use crate::reduce::pairwise_reduce;
use crate::rigid_body::{BodyPose, RigidBody};

pub const DEFAULT_WATER_DENSITY: f64 = 1025.0;
pub const DEFAULT_AIR_DENSITY: f64 = 1.204;

/// Read-only view of the water around a body.
pub trait FluidSampler: Sync {
    /// Free-surface height above `(x, z)`.
    fn height(&self, x: f64, z: f64) -> f64;
    /// Water velocity at a world point below the surface.
    fn velocity(&self, p: &Vec3) -> Vec3;
}

/// Still water at a constant level.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatWater {
    pub level: f64,
}

impl FluidSampler for FlatWater {
    fn height(&self, _x: f64, _z: f64) -> f64 {
        self.level
    }

    fn velocity(&self, _p: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
}

/// Density of sea water, optionally varying with depth below the surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WaterDensity {
    Constant(f64),
    /// `(depth, density)` pairs, depth positive downward and increasing.
    Table(Vec<[f64; 2]>),
}

impl Default for WaterDensity {
    fn default() -> Self {
        WaterDensity::Constant(DEFAULT_WATER_DENSITY)
    }
}

impl WaterDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            WaterDensity::Constant(r) if *r > 0.0 && r.is_finite() => Ok(()),
            WaterDensity::Constant(r) => Err(Error::config(format!("water density must be > 0, got {r}"))),
            WaterDensity::Table(t) => {
                if t.is_empty() {
                    return Err(Error::config("water density table is empty"));
                }
                if t.iter().any(|p| !(p[1] > 0.0 && p[0].is_finite() && p[1].is_finite())) {
                    return Err(Error::config("water density table values must be positive"));
                }
                if t.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::config("water density table depths must increase"));
                }
                Ok(())
            }
        }
    }

    /// Piecewise-linear in depth, held constant beyond the table ends.
    pub fn at_depth(&self, depth: f64) -> f64 {
        match self {
            WaterDensity::Constant(r) => *r,
            WaterDensity::Table(t) => {
                if depth <= t[0][0] {
                    return t[0][1];
                }
                for w in t.windows(2) {
                    if depth <= w[1][0] {
                        let f = (depth - w[0][0]) / (w[1][0] - w[0][0]);
                        return w[0][1] + f * (w[1][1] - w[0][1]);
                    }
                }
                t[t.len() - 1][1]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImmersionCenter {
    #[default]
    VolumeWeighted,
    AreaWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DragApplication {
    /// Total water drag at the centre of immersion, air drag at the dry centroid.
    #[default]
    Centers,
    /// Each piece's drag at its own centroid.
    PerTriangle,
}

pub struct FluidQuery<'a> {
    pub sampler: &'a dyn FluidSampler,
    pub wind: Vec3,
    pub water_density: WaterDensity,
    pub air_density: f64,
    pub gravity: f64,
}

impl<'a> FluidQuery<'a> {
    pub fn new(sampler: &'a dyn FluidSampler) -> Self {
        Self {
            sampler,
            wind: Vec3::zeros(),
            water_density: WaterDensity::default(),
            air_density: DEFAULT_AIR_DENSITY,
            gravity: crate::spectra::STANDARD_GRAVITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydroParams {
    pub drag_water: f64,
    pub drag_air: f64,
    pub immersion_center: ImmersionCenter,
    pub drag_application: DragApplication,
}

impl Default for HydroParams {
    fn default() -> Self {
        Self {
            drag_water: 1.0,
            drag_air: 1.0,
            immersion_center: ImmersionCenter::VolumeWeighted,
            drag_application: DragApplication::Centers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleStatus {
    Submerged,
    Partial,
    Dry,
    Degenerate,
}

/// A whole triangle or a sub-triangle lying on one side of the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub area: f64,
    pub centroid: Vec3,
    pub normal: Vec3,
    /// `y - h(x, z)` at the centroid; negative below the surface.
    pub depth: f64,
    pub submerged: bool,
    pub source: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ClipResult {
    pub status: Vec<TriangleStatus>,
    pub pieces: Vec<Piece>,
    /// Closed loops: the first point is repeated at the end.
    pub waterline: Vec<Vec<Vec3>>,
    pub degenerate: usize,
    pub open_segments: usize,
}

const DEGENERATE_AREA: f64 = 1e-14;

fn make_piece(a: Vec3, b: Vec3, c: Vec3, normal: Vec3, submerged: bool, source: usize, fluid: &dyn FluidSampler) -> Option<Piece> {
    let area = 0.5 * (b - a).cross(&(c - a)).norm();
    if area <= 0.0 {
        return None;
    }
    let centroid = (a + b + c) / 3.0;
    let depth = centroid.y - fluid.height(centroid.x, centroid.z);
    Some(Piece { area, centroid, normal, depth, submerged, source })
}

type EdgeKey = (usize, usize);

fn crossing(lo: usize, hi: usize, pos: &[Vec3], depth: &[f64]) -> Vec3 {
    let (a, b) = (lo.min(hi), lo.max(hi));
    let alpha = depth[a] / (depth[a] - depth[b]);
    pos[a] + (pos[b] - pos[a]) * alpha
}

fn key(a: usize, b: usize) -> EdgeKey {
    (a.min(b), a.max(b))
}

struct TriangleClip {
    status: TriangleStatus,
    pieces: Vec<Piece>,
    /// Directed waterline segment, wet side on the left seen from above the hull.
    segment: Option<(EdgeKey, EdgeKey, Vec3, Vec3)>,
}

/// Classifies and splits every triangle of `mesh` placed at `pose`.
pub fn classify_clip(mesh: &TriMesh, pose: &BodyPose, fluid: &dyn FluidSampler) -> ClipResult {
    let pos: Vec<Vec3> = mesh.vertices().iter().map(|v| pose.to_world(v)).collect();
    let depth: Vec<f64> = pos.par_iter().map(|p| p.y - fluid.height(p.x, p.z)).collect();
    let clips: Vec<TriangleClip> = mesh
        .triangles()
        .par_iter()
        .enumerate()
        .map(|(t, tri)| clip_triangle(t, tri, mesh.areas()[t], &pos, &depth, fluid))
        .collect();

    let mut result = ClipResult::default();
    let mut next: HashMap<EdgeKey, (EdgeKey, Vec3)> = HashMap::new();
    let mut starts: Vec<(EdgeKey, Vec3)> = Vec::new();
    for c in clips {
        if c.status == TriangleStatus::Degenerate {
            result.degenerate += 1;
        }
        result.status.push(c.status);
        result.pieces.extend(c.pieces);
        if let Some((from, to, p_from, _)) = c.segment {
            if next.insert(from, (to, p_from)).is_some() {
                result.open_segments += 1;
            }
            starts.push((from, p_from));
        }
    }
    let mut visited: HashMap<EdgeKey, bool> = HashMap::new();
    for (start, p0) in starts {
        if visited.contains_key(&start) {
            continue;
        }
        let mut loop_pts = vec![p0];
        let mut cur = start;
        visited.insert(cur, true);
        let closed = loop {
            let Some(&(to, _)) = next.get(&cur) else { break false };
            if to == start {
                break true;
            }
            if visited.contains_key(&to) {
                break false;
            }
            visited.insert(to, true);
            let Some(&(_, p)) = next.get(&to) else {
                result.open_segments += 1;
                break false;
            };
            loop_pts.push(p);
            cur = to;
        };
        if closed {
            loop_pts.push(p0);
            result.waterline.push(loop_pts);
        } else {
            result.open_segments += 1;
        }
    }
    if result.degenerate > 0 {
        log::debug!("skipped {} degenerate triangles", result.degenerate);
    }
    result
}

fn clip_triangle(
    t: usize,
    tri: &[usize; 3],
    area: f64,
    pos: &[Vec3],
    depth: &[f64],
    fluid: &dyn FluidSampler,
) -> TriangleClip {
    if area < DEGENERATE_AREA {
        return TriangleClip { status: TriangleStatus::Degenerate, pieces: vec![], segment: None };
    }
    let [a, b, c] = *tri;
    let normal = (pos[b] - pos[a]).cross(&(pos[c] - pos[a])).normalize();
    let wet = [depth[a] < 0.0, depth[b] < 0.0, depth[c] < 0.0];
    let n_wet = wet.iter().filter(|&&w| w).count();
    if n_wet == 0 || n_wet == 3 {
        let submerged = n_wet == 3;
        let piece = make_piece(pos[a], pos[b], pos[c], normal, submerged, t, fluid);
        return TriangleClip {
            status: if submerged { TriangleStatus::Submerged } else { TriangleStatus::Dry },
            pieces: piece.into_iter().collect(),
            segment: None,
        };
    }
    // Rotate so the lone vertex comes first, keeping the winding.
    let lone_wet = n_wet == 1;
    let lone = (0..3).find(|&i| wet[i] == lone_wet).expect("one vertex differs");
    let l = tri[lone];
    let p = tri[(lone + 1) % 3];
    let q = tri[(lone + 2) % 3];
    let x_lp = crossing(l, p, pos, depth);
    let x_lq = crossing(l, q, pos, depth);
    let mut pieces = Vec::with_capacity(3);
    pieces.extend(make_piece(pos[l], x_lp, x_lq, normal, lone_wet, t, fluid));
    // The quad is cut along its shorter diagonal, which also makes the split
    // independent of the winding direction.
    if (pos[q] - x_lp).norm_squared() <= (pos[p] - x_lq).norm_squared() {
        pieces.extend(make_piece(x_lp, pos[p], pos[q], normal, !lone_wet, t, fluid));
        pieces.extend(make_piece(x_lp, pos[q], x_lq, normal, !lone_wet, t, fluid));
    } else {
        pieces.extend(make_piece(x_lp, pos[p], x_lq, normal, !lone_wet, t, fluid));
        pieces.extend(make_piece(pos[p], pos[q], x_lq, normal, !lone_wet, t, fluid));
    }
    let segment = if lone_wet {
        (key(l, p), key(l, q), x_lp, x_lq)
    } else {
        (key(l, q), key(l, p), x_lq, x_lp)
    };
    TriangleClip { status: TriangleStatus::Partial, pieces, segment: Some(segment) }
}

/// Prism volume `sum A d n_y` over the wet pieces; `+V` for a submerged closed mesh.
pub fn submerged_volume(clip: &ClipResult) -> f64 {
    let terms: Vec<f64> = clip
        .pieces
        .iter()
        .filter(|p| p.submerged)
        .map(|p| p.area * p.depth * p.normal.y)
        .collect();
    crate::reduce::pairwise_sum(&terms)
}

fn add3(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

/// Weighted centroid of the wet prisms, `None` when nothing is immersed.
pub fn center_of_immersion(clip: &ClipResult, mode: ImmersionCenter) -> Option<Vec3> {
    let terms: Vec<[f64; 4]> = clip
        .pieces
        .iter()
        .filter(|p| p.submerged)
        .map(|p| match mode {
            ImmersionCenter::VolumeWeighted => {
                let w = p.area * p.depth * p.normal.y;
                let surface = p.centroid.y - p.depth;
                [w * p.centroid.x, w * 0.5 * (p.centroid.y + surface), w * p.centroid.z, w]
            }
            ImmersionCenter::AreaWeighted => {
                let w = p.area;
                [w * p.centroid.x, w * p.centroid.y, w * p.centroid.z, w]
            }
        })
        .collect();
    let s = pairwise_reduce(&terms, [0.0; 4], &add3);
    (s[3] > 0.0).then(|| Vec3::new(s[0], s[1], s[2]) / s[3])
}

pub fn buoyancy(volume: f64, density: f64, gravity: f64) -> Vec3 {
    Vec3::new(0.0, volume * density * gravity, 0.0)
}

/// Quadratic drag on one face moving at `v_rel` relative to the medium.
pub fn drag(area: f64, normal: &Vec3, v_rel: &Vec3, density: f64, cd: f64) -> Vec3 {
    let speed = v_rel.norm();
    if speed == 0.0 || area <= 0.0 {
        return Vec3::zeros();
    }
    let facing = (normal.dot(v_rel) / speed).max(0.0);
    -0.5 * cd * density * area * facing * speed * v_rel
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HydroReport {
    /// Clamped to `[0, V]`.
    pub submerged_volume: f64,
    pub raw_volume: f64,
    pub volume_clamped: bool,
    pub center_of_immersion: Option<Vec3>,
    pub waterline: Vec<Vec<Vec3>>,
    pub buoyancy: Vec3,
    pub water_drag: Vec3,
    pub air_drag: Vec3,
    pub water_drag_point: Option<Vec3>,
    pub air_drag_point: Option<Vec3>,
    /// Torques about the body origin with drag applied per piece.
    pub water_drag_torque: Vec3,
    pub air_drag_torque: Vec3,
    pub submerged_area: f64,
    pub dry_area: f64,
    pub degenerate_triangles: usize,
    pub open_waterline_segments: usize,
}

impl HydroReport {
    pub fn total_force(&self) -> Vec3 {
        self.buoyancy + self.water_drag + self.air_drag
    }

    pub fn is_finite(&self) -> bool {
        [self.buoyancy, self.water_drag, self.air_drag]
            .iter()
            .all(|v| v.iter().all(|c| c.is_finite()))
            && self.submerged_volume.is_finite()
    }

    pub fn apply_to(&self, body: &mut RigidBody, mode: DragApplication) {
        if let Some(c) = self.center_of_immersion {
            body.apply_force_at(self.buoyancy, c);
        }
        match mode {
            DragApplication::Centers => {
                if let Some(c) = self.water_drag_point {
                    body.apply_force_at(self.water_drag, c);
                }
                if let Some(c) = self.air_drag_point {
                    body.apply_force_at(self.air_drag, c);
                }
            }
            DragApplication::PerTriangle => {
                body.apply_force(self.water_drag + self.air_drag);
                body.apply_torque(self.water_drag_torque + self.air_drag_torque);
            }
        }
    }
}

/// Runs clipping, volume, immersion centre, buoyancy and drag for one body.
pub fn aggregate(mesh: &TriMesh, pose: &BodyPose, fluid: &FluidQuery, params: &HydroParams) -> HydroReport {
    let clip = classify_clip(mesh, pose, fluid.sampler);
    let raw = submerged_volume(&clip);
    let vmax = mesh.volume();
    let volume = raw.clamp(0.0, vmax);
    let center = if volume > 0.0 { center_of_immersion(&clip, params.immersion_center) } else { None };
    let rho_buoy = center
        .map(|c| fluid.water_density.at_depth(fluid.sampler.height(c.x, c.z) - c.y))
        .unwrap_or_else(|| fluid.water_density.at_depth(0.0));

    // [force(3), torque(3), area, area*centroid(3)] per piece, water then air.
    let terms: Vec<([f64; 10], bool)> = clip
        .pieces
        .par_iter()
        .map(|p| {
            let v = pose.point_velocity(&p.centroid);
            let f = if p.submerged {
                let rel = v - fluid.sampler.velocity(&p.centroid);
                drag(p.area, &p.normal, &rel, fluid.water_density.at_depth(-p.depth), params.drag_water)
            } else {
                drag(p.area, &p.normal, &(v - fluid.wind), fluid.air_density, params.drag_air)
            };
            let tq = (p.centroid - pose.position).cross(&f);
            let ac = p.centroid * p.area;
            ([f.x, f.y, f.z, tq.x, tq.y, tq.z, p.area, ac.x, ac.y, ac.z], p.submerged)
        })
        .collect();
    let add10 = |a: [f64; 10], b: [f64; 10]| std::array::from_fn(|i| a[i] + b[i]);
    let split = |wet: bool| -> [f64; 10] {
        let v: Vec<[f64; 10]> = terms.iter().filter(|t| t.1 == wet).map(|t| t.0).collect();
        pairwise_reduce(&v, [0.0; 10], &add10)
    };
    let w = split(true);
    let a = split(false);
    let air_point = (a[6] > 0.0).then(|| Vec3::new(a[7], a[8], a[9]) / a[6]);
    let wet_area_point = (w[6] > 0.0).then(|| Vec3::new(w[7], w[8], w[9]) / w[6]);

    HydroReport {
        submerged_volume: volume,
        raw_volume: raw,
        volume_clamped: raw != volume,
        center_of_immersion: center,
        waterline: clip.waterline,
        buoyancy: buoyancy(volume, rho_buoy, fluid.gravity),
        water_drag: Vec3::new(w[0], w[1], w[2]),
        air_drag: Vec3::new(a[0], a[1], a[2]),
        water_drag_point: center.or(wet_area_point),
        air_drag_point: air_point,
        water_drag_torque: Vec3::new(w[3], w[4], w[5]),
        air_drag_torque: Vec3::new(a[3], a[4], a[5]),
        submerged_area: w[6],
        dry_area: a[6],
        degenerate_triangles: clip.degenerate,
        open_waterline_segments: clip.open_segments,
    }
}
