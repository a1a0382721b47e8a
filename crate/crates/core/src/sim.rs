//! Fixed-step loop coupling the spectral sea, the floating bodies and their
//! wake zones.

use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::UnitQuaternion;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hydro::{aggregate, FluidQuery, FluidSampler, HydroReport};
use crate::interactive::{compute_mask, mask_height, FdmZone, MaskGeometry};
use crate::io::{export_heightfield, CsvWriter, COMPOSED_ID};
use crate::mesh::{TriMesh, Vec3};
use crate::rigid_body::{BodyPose, RigidBody};
use crate::scenario::{BodyConfig, Scenario};
use crate::surface::{Cascades, SurfaceMaps};
use crate::velocity::{build_slices, Interpolation, VelocitySlices};

/// Sea state seen by one body: spectral surface plus every zone but its own.
pub struct SeaSampler<'a> {
    pub maps: &'a SurfaceMaps,
    pub slices: &'a VelocitySlices,
    pub zones: Vec<&'a FdmZone>,
    pub interpolation: Interpolation,
}

/// Zone contributions are added in sorted order so the body order never
/// changes the rounding.
fn sum_zones<'a>(zones: impl Iterator<Item = &'a FdmZone>, x: f64, z: f64) -> f64 {
    let mut parts: Vec<f64> = zones.map(|zn| zn.sample(x, z)).filter(|v| *v != 0.0).collect();
    parts.sort_by(f64::total_cmp);
    parts.iter().sum()
}

impl FluidSampler for SeaSampler<'_> {
    fn height(&self, x: f64, z: f64) -> f64 {
        self.maps.height_at(x, z) + sum_zones(self.zones.iter().copied(), x, z)
    }

    fn velocity(&self, p: &Vec3) -> Vec3 {
        let (lo, hi) = self.slices.y_range();
        if p.y < lo {
            return Vec3::zeros();
        }
        let y = p.y.min(hi);
        match self.slices.velocity_at(p.x, y, p.z, self.interpolation) {
            Ok(v) => Vec3::from(v),
            Err(_) => Vec3::zeros(),
        }
    }
}

/// Per-body outputs of the last step.
#[derive(Debug, Clone, Default)]
pub struct BodyRecord {
    pub report: HydroReport,
    pub thrust: f64,
    pub mask_cells: usize,
    pub delta: f64,
    pub wave_speed: f64,
    pub damping: f64,
}

pub struct SimBody {
    name: String,
    config: BodyConfig,
    mesh: TriMesh,
    body: RigidBody,
    zone: FdmZone,
    record: BodyRecord,
}

impl SimBody {
    pub fn new(config: &BodyConfig, mesh: TriMesh, dt: f64) -> Result<Self> {
        let mesh = mesh.recentered();
        let mass = config.mass.unwrap_or(config.density * mesh.volume());
        let p = config.position;
        let pose = BodyPose {
            position: Vec3::new(p[0], p[1], p[2]),
            orientation: UnitQuaternion::from_axis_angle(&Vec3::y_axis(), config.yaw),
            linear_velocity: Vec3::from(config.velocity),
            angular_velocity: Vec3::zeros(),
        };
        let body = RigidBody::from_mesh(&mesh, mass, config.inertia, pose)?.with_angular_damping(config.angular_damping);
        let e = mesh.extents();
        let (dmin, dmax) = config.zone.spacing_bounds(e.x.max(e.z));
        let speed = pose.linear_velocity.norm();
        let zone = FdmZone::new(&config.zone, dmin, dmax, [p[0], p[2]], speed, dt)?;
        Ok(Self { name: config.name.clone(), config: config.clone(), mesh, body, zone, record: BodyRecord::default() })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn body(&self) -> &RigidBody {
        &self.body
    }

    pub fn body_mut(&mut self) -> &mut RigidBody {
        &mut self.body
    }

    pub fn zone(&self) -> &FdmZone {
        &self.zone
    }

    pub fn zone_mut(&mut self) -> &mut FdmZone {
        &mut self.zone
    }

    pub fn record(&self) -> &BodyRecord {
        &self.record
    }

    pub fn config(&self) -> &BodyConfig {
        &self.config
    }
}

/// Mask cells and forced heights for one body.
fn body_mask(b: &SimBody, report: &HydroReport) -> (Vec<usize>, Vec<f64>) {
    let pose = b.body.pose();
    let loops: Vec<Vec<[f64; 2]>> =
        report.waterline.iter().map(|l| l.iter().map(|p| [p.x, p.z]).collect()).collect();
    if loops.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let center = [pose.position.x, pose.position.z];
    let yaw = pose.yaw();
    let cells = compute_mask(&b.zone, &loops, center, yaw);
    if cells.is_empty() {
        return (cells, Vec::new());
    }
    let (s, c) = yaw.sin_cos();
    let to_body = |p: [f64; 2]| {
        let dx = p[0] - center[0];
        let dz = p[1] - center[1];
        [dx * c - dz * s, dx * s + dz * c]
    };
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in loops.iter().flatten() {
        let q = to_body(*p);
        for k in 0..2 {
            lo[k] = lo[k].min(q[k]);
            hi[k] = hi[k].max(q[k]);
        }
    }
    let geom = MaskGeometry {
        center_x: 0.5 * (lo[0] + hi[0]),
        width: hi[0] - lo[0],
        z_min: lo[1],
        z_max: hi[1],
        height: b.mesh.height(),
    };
    let speed = pose.linear_velocity.norm();
    let ratio = report.submerged_volume / b.mesh.volume();
    let n = b.zone.n();
    let mut heights = Vec::with_capacity(cells.len());
    for &cell in &cells {
        let q = to_body(b.zone.cell_world(cell / n, cell % n));
        match mask_height(q[0], q[1], &geom, speed, ratio, &b.config.mask) {
            Ok(h) => heights.push(h),
            Err(e) => {
                log::debug!("body {}: mask skipped: {e}", b.name);
                return (Vec::new(), Vec::new());
            }
        }
    }
    (cells, heights)
}

/// Wall-clock time spent per stage, summed over steps.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTiming {
    pub steps: u64,
    pub maps: Duration,
    pub slices: Duration,
    pub hydro: Duration,
    /// Force application, integration and zone updates.
    pub bodies: Duration,
}

impl StageTiming {
    pub fn total(&self) -> Duration {
        self.maps + self.slices + self.hydro + self.bodies
    }

    pub fn lines(&self) -> Vec<String> {
        let per = |d: Duration| d.as_secs_f64() * 1e3 / self.steps.max(1) as f64;
        [
            ("maps", self.maps),
            ("slices", self.slices),
            ("hydro", self.hydro),
            ("bodies", self.bodies),
            ("total", self.total()),
        ]
        .iter()
        .map(|(name, d)| format!("{name:<10} {:>10.3} ms/step", per(*d)))
        .collect()
    }
}

pub struct Simulation {
    scenario: Scenario,
    cascades: Cascades,
    maps: SurfaceMaps,
    slices: VelocitySlices,
    bodies: Vec<SimBody>,
    time: f64,
    step: u64,
    timing: StageTiming,
}

impl Simulation {
    /// Loads meshes relative to the scenario directory.
    pub fn new(scenario: Scenario) -> Result<Self> {
        let meshes = scenario
            .bodies
            .iter()
            .map(|b| {
                b.mesh.load(&scenario.base_dir).map_err(|e| match e {
                    Error::Mesh(m) => Error::Mesh(format!("body {:?}: {m}", b.name)),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Simulation::with_meshes(scenario, meshes)
    }

    pub fn with_meshes(scenario: Scenario, meshes: Vec<TriMesh>) -> Result<Self> {
        scenario.validate()?;
        if meshes.len() != scenario.bodies.len() {
            return Err(Error::config("one mesh per body is required"));
        }
        let cascades = Cascades::generate(&scenario.cascades, &scenario.effective_spectrum())?;
        let maps = cascades.maps(0.0);
        let slices = build_slices(&cascades, 0.0, &scenario.velocity)?;
        let bodies = scenario
            .bodies
            .iter()
            .zip(meshes)
            .map(|(cfg, mesh)| SimBody::new(cfg, mesh, scenario.dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { scenario, cascades, maps, slices, bodies, time: 0.0, step: 0, timing: StageTiming::default() })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn cascades(&self) -> &Cascades {
        &self.cascades
    }

    pub fn maps(&self) -> &SurfaceMaps {
        &self.maps
    }

    pub fn slices(&self) -> &VelocitySlices {
        &self.slices
    }

    pub fn bodies(&self) -> &[SimBody] {
        &self.bodies
    }

    pub fn bodies_mut(&mut self) -> &mut [SimBody] {
        &mut self.bodies
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn timing(&self) -> &StageTiming {
        &self.timing
    }

    /// Spectral height plus the zones of every body except `exclude`.
    pub fn compose_height(&self, x: f64, z: f64, exclude: Option<usize>) -> f64 {
        let zones = self.bodies.iter().enumerate().filter(|(i, _)| Some(*i) != exclude).map(|(_, b)| &b.zone);
        self.maps.height_at(x, z) + sum_zones(zones, x, z)
    }

    fn sampler(&self, exclude: usize) -> SeaSampler<'_> {
        SeaSampler {
            maps: &self.maps,
            slices: &self.slices,
            zones: self.bodies.iter().enumerate().filter(|(i, _)| *i != exclude).map(|(_, b)| &b.zone).collect(),
            interpolation: self.scenario.velocity.interpolation,
        }
    }

    /// Advances the whole frame by one fixed step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.scenario.dt;
        let t_next = self.time + dt;
        let clock = Instant::now();
        self.maps = self.cascades.maps(t_next);
        self.timing.maps += clock.elapsed();

        let clock = Instant::now();
        if (self.step + 1) % self.scenario.velocity.rebuild_stride as u64 == 0 {
            self.slices = build_slices(&self.cascades, t_next, &self.scenario.velocity)?;
        }
        self.timing.slices += clock.elapsed();

        let clock = Instant::now();
        let wind = Vec3::from(self.scenario.wind);
        let gravity = self.scenario.effective_spectrum().gravity;
        let this = &*self;
        let phase_a: Vec<(HydroReport, Vec<usize>, Vec<f64>)> = (0..this.bodies.len())
            .into_par_iter()
            .map(|i| {
                let b = &this.bodies[i];
                let sampler = this.sampler(i);
                let query = FluidQuery {
                    sampler: &sampler,
                    wind,
                    water_density: this.scenario.water_density.clone(),
                    air_density: this.scenario.air_density,
                    gravity,
                };
                let report = aggregate(&b.mesh, b.body.pose(), &query, &b.config.hydro);
                let (cells, heights) = body_mask(b, &report);
                (report, cells, heights)
            })
            .collect();
        self.timing.hydro += clock.elapsed();

        let clock = Instant::now();
        let t = self.time;
        let g = Vec3::new(0.0, -gravity, 0.0);
        self.bodies.par_iter_mut().zip(phase_a).for_each(|(b, (report, cells, heights))| {
            let thrust = b.config.thrust.at(t);
            if !b.config.fixed {
                report.apply_to(&mut b.body, b.config.hydro.drag_application);
                let pose = *b.body.pose();
                b.body.apply_force(pose.orientation * Vec3::z() * thrust);
                b.body.integrate(g, dt);
            }
            let pose = *b.body.pose();
            let speed = pose.linear_velocity.norm();
            let (delta, c) = b.zone.update_stability(speed, dt);
            b.zone.apply_mask(&cells, &heights);
            b.zone.step(dt, [pose.position.x, pose.position.z], speed);
            b.record = BodyRecord {
                report,
                thrust,
                mask_cells: cells.len(),
                delta,
                wave_speed: c,
                damping: b.zone.last_damping(),
            };
        });
        self.timing.bodies += clock.elapsed();

        self.time = t_next;
        self.step += 1;
        self.timing.steps += 1;
        self.check_finite()
    }

    fn check_finite(&self) -> Result<()> {
        let step = self.step;
        for c in self.maps.cascades() {
            if c.field(crate::surface::FieldKind::Height).data().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { step, context: format!("surface cascade L = {}", c.length()) });
            }
        }
        for b in &self.bodies {
            if !b.body.is_finite() || !b.record.report.is_finite() {
                return Err(Error::NonFinite { step, context: format!("body {:?}", b.name) });
            }
            if !b.zone.is_finite() {
                return Err(Error::NonFinite { step, context: format!("zone of body {:?}", b.name) });
            }
        }
        Ok(())
    }

    /// Composed heights on an `n x n` grid over `[0, length)^2`, row `i` along x.
    pub fn composed_heightfield(&self, n: usize, length: f64) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let x = i as f64 * length / n as f64;
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.compose_height(x, j as f64 * length / n as f64, None);
            }
        });
        out
    }
}

/// Summary of a completed run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: u64,
    pub time: f64,
    pub snapshots: usize,
    pub timing: StageTiming,
}

struct Recorders {
    trajectory: Option<CsvWriter>,
    forces: Option<CsvWriter>,
    zones: Option<CsvWriter>,
}

const TRAJECTORY_HEADER: &[&str] =
    &["t", "body", "x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz"];
const FORCES_HEADER: &[&str] = &[
    "t", "body", "volume", "buoyancy_x", "buoyancy_y", "buoyancy_z", "water_drag_x", "water_drag_y", "water_drag_z",
    "air_drag_x", "air_drag_y", "air_drag_z", "thrust", "submerged_area", "waterline_loops",
];
const ZONES_HEADER: &[&str] = &["t", "body", "delta", "c", "damping", "mask_cells", "dropped_wake"];

fn fmt(v: f64) -> String {
    v.to_string()
}

impl Recorders {
    fn open(out: &Path, sim: &Simulation) -> Result<Self> {
        let o = &sim.scenario.output;
        let any = !sim.bodies.is_empty();
        let open = |on: bool, name: &str, header: &[&str]| -> Result<Option<CsvWriter>> {
            if on && any {
                CsvWriter::create(&out.join(name), header).map(Some)
            } else {
                Ok(None)
            }
        };
        Ok(Self {
            trajectory: open(o.trajectory, "trajectory.csv", TRAJECTORY_HEADER)?,
            forces: open(o.forces, "forces.csv", FORCES_HEADER)?,
            zones: open(o.zones, "zones.csv", ZONES_HEADER)?,
        })
    }

    fn record(&mut self, sim: &Simulation) -> Result<()> {
        let t = fmt(sim.time);
        for b in &sim.bodies {
            let name = b.name.clone();
            if let Some(w) = &mut self.trajectory {
                let p = b.body.pose();
                let q = p.orientation.quaternion();
                let mut row = vec![t.clone(), name.clone()];
                let vals = [
                    p.position.x, p.position.y, p.position.z, q.w, q.i, q.j, q.k, p.linear_velocity.x,
                    p.linear_velocity.y, p.linear_velocity.z, p.angular_velocity.x, p.angular_velocity.y,
                    p.angular_velocity.z,
                ];
                row.extend(vals.iter().map(|v| fmt(*v)));
                w.text_row(&row)?;
            }
            let r = &b.record;
            if let Some(w) = &mut self.forces {
                let rep = &r.report;
                let mut row = vec![t.clone(), name.clone(), fmt(rep.submerged_volume)];
                for v in [rep.buoyancy, rep.water_drag, rep.air_drag] {
                    row.extend(v.iter().map(|c| fmt(*c)));
                }
                row.push(fmt(r.thrust));
                row.push(fmt(rep.submerged_area));
                row.push(rep.waterline.len().to_string());
                w.text_row(&row)?;
            }
            if let Some(w) = &mut self.zones {
                w.text_row(&[
                    t.clone(),
                    name,
                    fmt(r.delta),
                    fmt(r.wave_speed),
                    fmt(r.damping),
                    r.mask_cells.to_string(),
                    b.zone.dropped_wake().to_string(),
                ])?;
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        for w in [self.trajectory, self.forces, self.zones].into_iter().flatten() {
            w.finish()?;
        }
        Ok(())
    }
}

fn snapshot(sim: &Simulation, out: &Path) -> Result<()> {
    let o = &sim.scenario.output;
    let n = o.snapshot_resolution;
    let length = sim.scenario.cascades.lengths[0];
    let field = sim.composed_heightfield(n, length);
    let dir = out.join("snapshots");
    export_heightfield(&dir.join(format!("surface_{:06}.abhf", sim.step)), n, COMPOSED_ID, sim.time, &field)?;
    if o.snapshot_zones {
        for (i, b) in sim.bodies.iter().enumerate() {
            let path = dir.join(format!("zone_{}_{:06}.abhf", b.name, sim.step));
            export_heightfield(&path, b.zone.n(), i as i32, sim.time, b.zone.heights())?;
        }
    }
    Ok(())
}

/// Runs the scenario to completion, writing the selected outputs into `out`.
pub fn run(sim: &mut Simulation, out: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let stride = sim.scenario.output.snapshot_stride;
    if stride > 0 {
        let dir = out.join("snapshots");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let mut rec = Recorders::open(out, sim)?;
    let mut snapshots = 0;
    if stride > 0 {
        snapshot(sim, out)?;
        snapshots += 1;
    }
    let steps = sim.scenario.steps();
    for _ in 0..steps {
        sim.step()?;
        rec.record(sim)?;
        if stride > 0 && sim.step % stride as u64 == 0 {
            snapshot(sim, out)?;
            snapshots += 1;
        }
    }
    rec.finish()?;
    Ok(RunSummary { steps, time: sim.time, snapshots, timing: sim.timing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interactive::ZoneConfig;
    use crate::scenario::{MeshSource, Primitive};
    use crate::surface::CascadeConfig;
    use crate::velocity::SliceConfig;

    pub(crate) fn tiny_scenario() -> Scenario {
        let mut s = Scenario::default();
        s.cascades = CascadeConfig { resolution: 16, lengths: vec![64.0], cutoffs: vec![], ..CascadeConfig::default() };
        s.velocity = SliceConfig { degree: 3, ..SliceConfig::default() };
        s.spectrum.wind_speed = 1.0;
        s.spectrum.convention = crate::spectra::Convention::Physical;
        s.duration = 0.1;
        s
    }

    fn cube(name: &str, x: f64) -> BodyConfig {
        let mut b = BodyConfig::new(name, MeshSource::Primitive(Primitive::Cuboid { size: [1.0; 3] }));
        b.position = [x, 0.0, 0.0];
        b.zone = ZoneConfig { grid_size: 32, margin: 4, ..ZoneConfig::default() };
        b
    }

    #[test]
    fn no_bodies_matches_surface() {
        let mut sim = Simulation::new(tiny_scenario()).unwrap();
        sim.step().unwrap();
        let direct = sim.cascades().maps(sim.time());
        assert_eq!(sim.compose_height(3.0, 7.0, None), direct.height_at(3.0, 7.0));
    }

    #[test]
    fn own_zone_excluded() {
        let mut s = tiny_scenario();
        s.bodies = vec![cube("a", 0.0)];
        let mut sim = Simulation::new(s).unwrap();
        sim.step().unwrap();
        let before = sim.compose_height(0.2, 0.1, Some(0));
        let z = sim.bodies_mut()[0].zone_mut();
        let n = z.n();
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                z.set_height(i, j, 3.0);
            }
        }
        assert_eq!(sim.compose_height(0.2, 0.1, Some(0)), before);
        assert!(sim.compose_height(0.2, 0.1, None) != before);
    }

    #[test]
    fn floating_cube_steps() {
        let mut s = tiny_scenario();
        s.bodies = vec![cube("a", 0.0), cube("b", 5.0)];
        let mut sim = Simulation::new(s).unwrap();
        for _ in 0..5 {
            sim.step().unwrap();
        }
        for b in sim.bodies() {
            assert!(b.record().report.submerged_volume > 0.0);
            assert!(b.record().mask_cells > 0);
        }
    }
}
