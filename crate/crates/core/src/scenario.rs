//! Scenario files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydro::{HydroParams, WaterDensity, DEFAULT_AIR_DENSITY};
use crate::interactive::{MaskParams, ZoneConfig};
use crate::mesh::{TriMesh, Vec3};
use crate::rigid_body::InertiaModel;
use crate::spectra::SpectrumParams;
use crate::surface::CascadeConfig;
use crate::velocity::SliceConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    Cuboid { size: [f64; 3] },
    Icosphere { radius: f64, subdivisions: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshSource {
    Path(PathBuf),
    Primitive(Primitive),
}

impl MeshSource {
    pub fn load(&self, base_dir: &Path) -> Result<TriMesh> {
        match self {
            MeshSource::Path(p) => TriMesh::from_obj_path(base_dir.join(p)),
            MeshSource::Primitive(Primitive::Cuboid { size }) => TriMesh::cuboid(Vec3::from(*size)),
            MeshSource::Primitive(Primitive::Icosphere { radius, subdivisions }) => {
                TriMesh::icosphere(*radius, *subdivisions)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thrust {
    /// Along the body +z axis, N.
    pub force: f64,
    pub start: f64,
    pub end: f64,
}

impl Default for Thrust {
    fn default() -> Self {
        Self { force: 0.0, start: 0.0, end: f64::INFINITY }
    }
}

impl Thrust {
    pub fn at(&self, t: f64) -> f64 {
        if t >= self.start && t < self.end {
            self.force
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub name: String,
    pub mesh: MeshSource,
    /// Mass in kg; takes precedence over `density`.
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default = "default_body_density")]
    pub density: f64,
    #[serde(default)]
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw: f64,
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default)]
    pub hydro: HydroParams,
    #[serde(default)]
    pub mask: MaskParams,
    #[serde(default)]
    pub zone: ZoneConfig,
    #[serde(default)]
    pub thrust: Thrust,
    #[serde(default)]
    pub inertia: InertiaModel,
    #[serde(default)]
    pub angular_damping: f64,
    /// Held at its initial pose instead of being integrated.
    #[serde(default)]
    pub fixed: bool,
}

fn default_body_density() -> f64 {
    500.0
}

impl BodyConfig {
    pub fn new(name: impl Into<String>, mesh: MeshSource) -> Self {
        Self {
            name: name.into(),
            mesh,
            mass: None,
            density: default_body_density(),
            position: [0.0; 3],
            yaw: 0.0,
            velocity: [0.0; 3],
            hydro: HydroParams::default(),
            mask: MaskParams::default(),
            zone: ZoneConfig::default(),
            thrust: Thrust::default(),
            inertia: InertiaModel::default(),
            angular_damping: 0.0,
            fixed: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |m: String| Error::config(format!("body {:?}: {m}", self.name));
        if let Some(m) = self.mass {
            if !(m.is_finite() && m > 0.0) {
                return Err(ctx(format!("mass must be > 0, got {m}")));
            }
        } else if !(self.density.is_finite() && self.density > 0.0) {
            return Err(ctx(format!("density must be > 0, got {}", self.density)));
        }
        if self.hydro.drag_water < 0.0 || self.hydro.drag_air < 0.0 {
            return Err(ctx("drag coefficients must be >= 0".into()));
        }
        if self.angular_damping < 0.0 {
            return Err(ctx("angular_damping must be >= 0".into()));
        }
        let finite = self.position.iter().chain(&self.velocity).all(|v| v.is_finite()) && self.yaw.is_finite();
        if !finite {
            return Err(ctx("initial state must be finite".into()));
        }
        self.zone.validate().map_err(|e| ctx(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub trajectory: bool,
    pub forces: bool,
    pub zones: bool,
    /// Write heightfield snapshots every this many steps; 0 disables them.
    pub snapshot_stride: usize,
    /// Snapshot grid size over the first cascade tile.
    pub snapshot_resolution: usize,
    pub snapshot_zones: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trajectory: true,
            forces: true,
            zones: true,
            snapshot_stride: 0,
            snapshot_resolution: 128,
            snapshot_zones: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Overrides `spectrum.seed` when set.
    pub seed: Option<u64>,
    pub duration: f64,
    pub dt: f64,
    pub wind: [f64; 3],
    pub air_density: f64,
    pub water_density: WaterDensity,
    pub spectrum: SpectrumParams,
    pub cascades: CascadeConfig,
    pub velocity: SliceConfig,
    pub output: OutputConfig,
    #[serde(rename = "body")]
    pub bodies: Vec<BodyConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: None,
            duration: 10.0,
            dt: 1.0 / 60.0,
            wind: [0.0; 3],
            air_density: DEFAULT_AIR_DENSITY,
            water_density: WaterDensity::default(),
            spectrum: SpectrumParams::default(),
            cascades: CascadeConfig::default(),
            velocity: SliceConfig::default(),
            output: OutputConfig::default(),
            bodies: Vec::new(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

impl Scenario {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |r| line_col(text, r.start));
            Error::Parse { line, column, message: e.message().to_string() }
        })?;
        s.base_dir = base_dir.into();
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Scenario::from_toml_str(&text, dir)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn effective_spectrum(&self) -> SpectrumParams {
        let mut p = self.spectrum;
        if let Some(seed) = self.seed {
            p.seed = seed;
        }
        p
    }

    pub fn steps(&self) -> u64 {
        (self.duration / self.dt + 1e-9).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.duration.is_finite() && self.duration >= self.dt) {
            return Err(Error::config("duration must be >= dt"));
        }
        if !(self.air_density.is_finite() && self.air_density > 0.0) {
            return Err(Error::config("air_density must be > 0"));
        }
        if !self.wind.iter().all(|v| v.is_finite()) {
            return Err(Error::config("wind must be finite"));
        }
        self.water_density.validate()?;
        self.effective_spectrum().validate()?;
        self.cascades.validate()?;
        self.velocity.validate()?;
        if self.output.snapshot_stride > 0 && self.output.snapshot_resolution < 2 {
            return Err(Error::config("snapshot_resolution must be >= 2"));
        }
        let mut names = std::collections::HashSet::new();
        for b in &self.bodies {
            b.validate()?;
            if !names.insert(b.name.as_str()) {
                return Err(Error::config(format!("duplicate body name {:?}", b.name)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_and_defaults() {
        let s = Scenario::from_toml_str("duration = 1.0\n", ".").unwrap();
        assert_eq!(s.cascades.lengths, vec![256.0, 16.0, 4.0]);
        assert_eq!(s.cascades.resolution, 256);
        assert_eq!(s.velocity.degree, 8);
        assert!(s.bodies.is_empty());
        assert_eq!(s.steps(), 60);
    }

    #[test]
    fn bodies_parse() {
        let text = r#"
seed = 9
[spectrum]
wind_speed = 3.0
[[body]]
name = "box"
mesh = { kind = "cuboid", size = [2.0, 1.0, 4.0] }
density = 400.0
[body.thrust]
force = 100.0
[[body]]
name = "boat"
mesh = "meshes/boat.obj"
mass = 800.0
"#;
        let s = Scenario::from_toml_str(text, "/tmp").unwrap();
        assert_eq!(s.bodies.len(), 2);
        assert_eq!(s.effective_spectrum().seed, 9);
        assert!(matches!(s.bodies[0].mesh, MeshSource::Primitive(Primitive::Cuboid { .. })));
        assert_eq!(s.bodies[0].thrust.at(5.0), 100.0);
        assert!(matches!(s.bodies[1].mesh, MeshSource::Path(_)));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = Scenario::from_toml_str("duration = 1.0\ndt = \"x\"\n", ".").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 6)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Scenario::from_toml_str("bogus = 1\n", "."), Err(Error::Parse { .. })));
        assert!(matches!(Scenario::from_toml_str("dt = -1.0\n", "."), Err(Error::Config(_))));
    }

    #[test]
    fn roundtrip() {
        let mut s = Scenario::default();
        s.bodies.push(BodyConfig::new("a", MeshSource::Primitive(Primitive::Cuboid { size: [1.0; 3] })));
        s.output.snapshot_stride = 3;
        let text = s.to_toml_string().unwrap();
        let back = Scenario::from_toml_str(&text, ".").unwrap();
        assert_eq!(back.bodies, s.bodies);
        assert_eq!(back.output, s.output);
    }
}
