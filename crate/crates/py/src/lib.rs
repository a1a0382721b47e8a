//! Python bindings: `import oceansim`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use oceansim::bench::{normalization_study as run_normalization, NormalizationConfig};
use oceansim::hydro::{classify_clip, submerged_volume, FlatWater};
use oceansim::interactive::{damping_factor as core_damping, stable_spacing as core_spacing, DampingParams};
use oceansim::mesh::{TriMesh, Vec3};
use oceansim::rigid_body::BodyPose;
use oceansim::scenario::Scenario;
use oceansim::sim::Simulation as CoreSimulation;
use oceansim::spectra::{self, Convention, SpectrumParams};
use oceansim::surface::{CascadeConfig, Cascades, FieldKind, SurfaceMaps};
use oceansim::velocity::velocity_direct;
use oceansim::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::NonFinite { .. } | Error::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_convention(name: &str) -> PyResult<Convention> {
    match name {
        "literal" => Ok(Convention::Literal),
        "physical" => Ok(Convention::Physical),
        other => Err(PyValueError::new_err(format!("unknown convention {other:?}; use \"literal\" or \"physical\""))),
    }
}

/// Spectral sea built from a wind-driven spectrum.
#[pyclass(module = "oceansim")]
pub struct Ocean {
    cascades: Cascades,
    cached: Option<SurfaceMaps>,
}

impl Ocean {
    fn maps(&mut self, t: f64) -> &SurfaceMaps {
        if self.cached.as_ref().is_none_or(|m| m.time() != t) {
            self.cached = Some(self.cascades.maps(t));
        }
        self.cached.as_ref().expect("maps cached")
    }
}

#[pymethods]
impl Ocean {
    #[new]
    #[pyo3(signature = (
        wind_speed = 10.0, fetch = 100_000.0, seed = 0, resolution = 64, lengths = None, cutoffs = None,
        choppiness = 1.0, swell = 0.5, direction_mix = 1.0, wind_direction = 0.0, convention = "literal"
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        wind_speed: f64,
        fetch: f64,
        seed: u64,
        resolution: usize,
        lengths: Option<Vec<f64>>,
        cutoffs: Option<Vec<f64>>,
        choppiness: f64,
        swell: f64,
        direction_mix: f64,
        wind_direction: f64,
        convention: &str,
    ) -> PyResult<Self> {
        let params = SpectrumParams {
            wind_speed,
            fetch,
            seed,
            swell,
            direction_mix,
            wind_direction,
            convention: parse_convention(convention)?,
            ..SpectrumParams::default()
        };
        let mut cfg = CascadeConfig { resolution, choppiness, ..CascadeConfig::default() };
        if let Some(l) = lengths {
            cfg.lengths = l;
        }
        if let Some(c) = cutoffs {
            cfg.cutoffs = c;
        }
        let cascades = Cascades::generate(&cfg, &params).map_err(to_py)?;
        Ok(Self { cascades, cached: None })
    }

    #[getter]
    fn resolution(&self) -> usize {
        self.cascades.resolution()
    }

    #[getter]
    fn lengths(&self) -> Vec<f64> {
        self.cascades.grids().iter().map(|g| g.length()).collect()
    }

    /// Free-surface height above `(x, z)` at time `t`.
    fn height_at(&mut self, x: f64, z: f64, t: f64) -> f64 {
        self.maps(t).height_at(x, z)
    }

    /// `(Dx, h, Dz)` at the undisplaced point `(x, z)`.
    fn displacement(&mut self, x: f64, z: f64, t: f64) -> (f64, f64, f64) {
        let d = self.maps(t).sample_displacement(x, z);
        (d[0], d[1], d[2])
    }

    /// One cascade field as rows along x. `field` is one of h, Dx, Dz and the derivative names.
    #[pyo3(signature = (t, cascade = 0, field = "h"))]
    fn field(&mut self, t: f64, cascade: usize, field: &str) -> PyResult<Vec<Vec<f64>>> {
        let kind = FieldKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == field)
            .ok_or_else(|| PyValueError::new_err(format!("unknown field {field:?}")))?;
        let maps = self.maps(t);
        let cm = maps
            .cascades()
            .get(cascade)
            .ok_or_else(|| PyValueError::new_err(format!("no cascade {cascade}")))?;
        let n = cm.n();
        Ok(cm.field(kind).data().chunks(n).map(|r| r.to_vec()).collect())
    }

    /// Exact water velocity at `(x, y, z)` by direct modal summation.
    fn velocity(&self, x: f64, y: f64, z: f64, t: f64) -> (f64, f64, f64) {
        let v = velocity_direct(&self.cascades, x, z, y, t);
        (v[0], v[1], v[2])
    }
}

/// Closed triangle mesh.
#[pyclass(module = "oceansim")]
pub struct Mesh {
    inner: TriMesh,
}

#[pymethods]
impl Mesh {
    #[staticmethod]
    fn cuboid(sx: f64, sy: f64, sz: f64) -> PyResult<Self> {
        TriMesh::cuboid(Vec3::new(sx, sy, sz)).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (radius, subdivisions = 2))]
    fn icosphere(radius: f64, subdivisions: u32) -> PyResult<Self> {
        TriMesh::icosphere(radius, subdivisions).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_obj(path: PathBuf) -> PyResult<Self> {
        TriMesh::from_obj_path(path).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.inner.total_area()
    }

    #[getter]
    fn triangle_count(&self) -> usize {
        self.inner.triangles().len()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertices().len()
    }

    /// Prism-sum submerged volume with the mesh origin at `position` in still water at `level`.
    #[pyo3(signature = (position, level = 0.0))]
    fn submerged_volume(&self, position: (f64, f64, f64), level: f64) -> f64 {
        let pose = BodyPose::at(Vec3::new(position.0, position.1, position.2));
        let water = FlatWater { level };
        submerged_volume(&classify_clip(&self.inner, &pose, &water))
    }
}

/// Scenario run stepped from Python.
#[pyclass(module = "oceansim")]
pub struct Simulation {
    inner: CoreSimulation,
}

#[pymethods]
impl Simulation {
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let s = Scenario::load(path).map_err(to_py)?;
        CoreSimulation::new(s).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (text, base_dir = "."))]
    fn from_toml(text: &str, base_dir: &str) -> PyResult<Self> {
        let s = Scenario::from_toml_str(text, base_dir).map_err(to_py)?;
        CoreSimulation::new(s).map(|inner| Self { inner }).map_err(to_py)
    }

    #[pyo3(signature = (steps = 1))]
    fn step(&mut self, steps: usize) -> PyResult<()> {
        for _ in 0..steps {
            self.inner.step().map_err(to_py)?;
        }
        Ok(())
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time()
    }

    fn body_names(&self) -> Vec<String> {
        self.inner.bodies().iter().map(|b| b.name().to_string()).collect()
    }

    /// Pose, velocities and last hydro forces of body `index`.
    fn body_state<'py>(&self, py: Python<'py>, index: usize) -> PyResult<Bound<'py, PyDict>> {
        let b = self
            .inner
            .bodies()
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("no body {index}")))?;
        let p = b.body().pose();
        let q = p.orientation.quaternion();
        let r = &b.record().report;
        let d = PyDict::new(py);
        d.set_item("name", b.name())?;
        d.set_item("position", (p.position.x, p.position.y, p.position.z))?;
        d.set_item("orientation", (q.w, q.i, q.j, q.k))?;
        d.set_item("linear_velocity", (p.linear_velocity.x, p.linear_velocity.y, p.linear_velocity.z))?;
        d.set_item("angular_velocity", (p.angular_velocity.x, p.angular_velocity.y, p.angular_velocity.z))?;
        d.set_item("submerged_volume", r.submerged_volume)?;
        d.set_item("buoyancy", (r.buoyancy.x, r.buoyancy.y, r.buoyancy.z))?;
        d.set_item("mask_cells", b.record().mask_cells)?;
        Ok(d)
    }

    /// Composed surface height; `exclude` drops one body's zone.
    #[pyo3(signature = (x, z, exclude = None))]
    fn compose_height(&self, x: f64, z: f64, exclude: Option<usize>) -> f64 {
        self.inner.compose_height(x, z, exclude)
    }
}

#[pyfunction]
#[pyo3(signature = (samples = 10_000, seed = 0))]
fn normalization_study<'py>(py: Python<'py>, samples: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let r = run_normalization(&NormalizationConfig { samples, seed, ..NormalizationConfig::default() }).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("mean", r.mean)?;
    d.set_item("std", r.std)?;
    d.set_item("min", r.min)?;
    d.set_item("max", r.max)?;
    d.set_item("samples", r.samples)?;
    d.set_item("in_band", r.in_band())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (omega, wind_speed = 10.0, fetch = 100_000.0, convention = "literal"))]
fn jonswap(omega: f64, wind_speed: f64, fetch: f64, convention: &str) -> PyResult<f64> {
    let p = SpectrumParams { wind_speed, fetch, convention: parse_convention(convention)?, ..SpectrumParams::default() };
    spectra::jonswap(omega, &p).map_err(to_py)
}

#[pyfunction]
fn q_dbxi_approx(r: f64) -> f64 {
    spectra::q_dbxi_approx(r)
}

#[pyfunction]
fn dispersion(k: f64) -> f64 {
    spectra::dispersion(k, spectra::STANDARD_GRAVITY)
}

#[pyfunction]
fn damping_factor(speed: f64) -> f64 {
    core_damping(speed, &DampingParams::default())
}

#[pyfunction]
fn stable_spacing(speed: f64, dt: f64) -> f64 {
    core_spacing(speed, dt)
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Ocean>()?;
    m.add_class::<Mesh>()?;
    m.add_class::<Simulation>()?;
    m.add_function(wrap_pyfunction!(normalization_study, m)?)?;
    m.add_function(wrap_pyfunction!(jonswap, m)?)?;
    m.add_function(wrap_pyfunction!(q_dbxi_approx, m)?)?;
    m.add_function(wrap_pyfunction!(dispersion, m)?)?;
    m.add_function(wrap_pyfunction!(damping_factor, m)?)?;
    m.add_function(wrap_pyfunction!(stable_spacing, m)?)?;
    Ok(())
}

#[pymodule]
#[pyo3(name = "oceansim")]
fn oceansim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
