//! Closed triangle meshes: OBJ I/O, validation, mass properties, primitives.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    areas: Vec<f64>,
    volume: f64,
    centroid: Vec3,
    /// Inertia about the centroid for unit density.
    unit_inertia: Matrix3<f64>,
    bbox_min: Vec3,
    bbox_max: Vec3,
}

impl TriMesh {
    /// Validates closedness and outward winding.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Mesh("non-finite vertex coordinate".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!("triangle {t} repeats a vertex")));
            }
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &triangles {
            for e in 0..3 {
                *directed.entry((tri[e], tri[(e + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count > 1 {
                return Err(Error::Mesh(format!(
                    "edge {a}-{b} is used twice in the same direction (inconsistent winding or non-manifold)"
                )));
            }
            if !directed.contains_key(&(b, a)) {
                return Err(Error::Mesh(format!("mesh is not closed: edge {a}-{b} has one face")));
            }
        }

        let mut normals = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let [a, b, c] = tri.map(|i| vertices[i]);
            let cross = (b - a).cross(&(c - a));
            let norm = cross.norm();
            areas.push(0.5 * norm);
            normals.push(if norm > 0.0 { cross / norm } else { Vec3::zeros() });
        }

        let (volume, centroid, unit_inertia) = mass_properties(&vertices, &triangles);
        if !(volume > 0.0) {
            return Err(Error::Mesh(format!(
                "mesh volume is {volume}; faces must wind counter-clockwise seen from outside"
            )));
        }
        let mut bbox_min = vertices[0];
        let mut bbox_max = vertices[0];
        for v in &vertices {
            bbox_min = bbox_min.inf(v);
            bbox_max = bbox_max.sup(v);
        }
        Ok(Self {
            vertices,
            triangles,
            normals,
            areas,
            volume,
            centroid,
            unit_inertia,
            bbox_min,
            bbox_max,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn centroid(&self) -> Vec3 {
        self.centroid
    }

    /// Inertia tensor about the centroid for a solid of the given density.
    pub fn inertia(&self, density: f64) -> Matrix3<f64> {
        self.unit_inertia * density
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        (self.bbox_min, self.bbox_max)
    }

    /// Bounding-box extents `(b_x, b_y, b_z)`.
    pub fn extents(&self) -> Vec3 {
        self.bbox_max - self.bbox_min
    }

    pub fn height(&self) -> f64 {
        self.extents().y
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        let vertices = self.vertices.iter().map(|v| v + offset).collect();
        TriMesh::new(vertices, self.triangles.clone()).expect("translation keeps a valid mesh")
    }

    /// Copy with the volume centroid moved to the origin.
    pub fn recentered(&self) -> Self {
        self.translated(-self.centroid)
    }

    pub fn scaled(&self, s: Vec3) -> Result<Self> {
        if s.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Mesh("scale factors must be positive".into()));
        }
        let vertices = self.vertices.iter().map(|v| v.component_mul(&s)).collect();
        TriMesh::new(vertices, self.triangles.clone())
    }

    pub fn from_obj_str(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut it = line.split_whitespace();
            let bad = |msg: &str| Error::Mesh(format!("line {}: {msg}", lineno + 1));
            match it.next() {
                Some("v") => {
                    let c: Vec<f64> = it
                        .take(3)
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("bad vertex coordinate"))?;
                    if c.len() != 3 {
                        return Err(bad("vertex needs three coordinates"));
                    }
                    vertices.push(Vec3::new(c[0], c[1], c[2]));
                }
                Some("f") => {
                    let idx: Vec<usize> = it
                        .map(|tok| {
                            let first = tok.split('/').next().unwrap_or("");
                            let i: i64 = first.parse().map_err(|_| bad("bad face index"))?;
                            let n = vertices.len() as i64;
                            let r = if i < 0 { n + i } else { i - 1 };
                            if r < 0 || r >= n {
                                return Err(bad("face index out of range"));
                            }
                            Ok(r as usize)
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() < 3 {
                        return Err(bad("face needs at least three vertices"));
                    }
                    for k in 1..idx.len() - 1 {
                        triangles.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        TriMesh::new(vertices, triangles)
    }

    pub fn from_obj_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TriMesh::from_obj_str(&text).map_err(|e| match e {
            Error::Mesh(m) => Error::Mesh(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_obj_string(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }

    /// Axis-aligned box centred at the origin.
    pub fn cuboid(size: Vec3) -> Result<Self> {
        let h = size * 0.5;
        let vertices: Vec<Vec3> = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { -h.x } else { h.x },
                    if i & 2 == 0 { -h.y } else { h.y },
                    if i & 4 == 0 { -h.z } else { h.z },
                )
            })
            .collect();
        let quads = [
            [0, 4, 6, 2], // -x
            [1, 3, 7, 5], // +x
            [0, 1, 5, 4], // -y
            [2, 6, 7, 3], // +y
            [0, 2, 3, 1], // -z
            [4, 5, 7, 6], // +z
        ];
        let triangles = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        TriMesh::new(vertices, triangles)
    }

    /// Subdivided icosahedron; level 4 has 2562 vertices.
    pub fn icosphere(radius: f64, subdivisions: u32) -> Result<Self> {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .iter()
        .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
        .collect();
        let mut triangles: Vec<[usize; 3]> = vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
                let key = (a.min(b), a.max(b));
                *cache.entry(key).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                    verts.len() - 1
                })
            };
            let mut next = Vec::with_capacity(triangles.len() * 4);
            for [a, b, c] in triangles {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            triangles = next;
        }
        for v in &mut vertices {
            *v *= radius;
        }
        TriMesh::new(vertices, triangles)
    }

    /// Boat-like hull lofted through `stations` cross-sections of `ring` points
    /// each, bow toward +z. With `pointed_bow` the bow closes on a single apex.
    pub fn hull(spec: &HullSpec) -> Result<Self> {
        let HullSpec { length, beam, draft, freeboard, ring, stations, pointed_bow } = *spec;
        if ring < 3 || stations < 2 {
            return Err(Error::Mesh("hull needs ring >= 3 and stations >= 2".into()));
        }
        let mut vertices = Vec::new();
        // A pointed bow places its apex one station beyond the last ring.
        let span = if pointed_bow { stations } else { stations - 1 } as f64;
        for j in 0..stations {
            let u = j as f64 / span;
            let z = (u - 0.5) * length;
            let width = 0.5 * beam * (0.35 + 0.65 * (PI * (0.15 + 0.7 * u)).sin());
            let depth = draft * (0.6 + 0.4 * (PI * u).sin());
            for i in 0..ring {
                let th = -2.0 * PI * i as f64 / ring as f64 - 0.5 * PI;
                let (s, c) = th.sin_cos();
                let y = if s < 0.0 { depth * s } else { freeboard * s };
                vertices.push(Vec3::new(width * c, y, z));
            }
        }
        let at = |j: usize, i: usize| j * ring + (i % ring);
        let mut triangles = Vec::new();
        for j in 0..stations - 1 {
            for i in 0..ring {
                let (a, b, c, d) = (at(j, i), at(j, i + 1), at(j + 1, i + 1), at(j + 1, i));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        for i in 1..ring - 1 {
            triangles.push([at(0, 0), at(0, i + 1), at(0, i)]);
        }
        let j = stations - 1;
        if pointed_bow {
            let apex = vertices.len();
            vertices.push(Vec3::new(0.0, 0.25 * freeboard, 0.5 * length));
            for i in 0..ring {
                triangles.push([at(j, i), at(j, i + 1), apex]);
            }
        } else {
            for i in 1..ring - 1 {
                triangles.push([at(j, 0), at(j, i), at(j, i + 1)]);
            }
        }
        match TriMesh::new(vertices.clone(), triangles.clone()) {
            Ok(m) => Ok(m),
            Err(Error::Mesh(msg)) if msg.contains("volume") => {
                let flipped = triangles.iter().map(|t| [t[0], t[2], t[1]]).collect();
                TriMesh::new(vertices, flipped)
            }
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullSpec {
    pub length: f64,
    pub beam: f64,
    pub draft: f64,
    pub freeboard: f64,
    pub ring: usize,
    pub stations: usize,
    pub pointed_bow: bool,
}

/// Volume, centroid and unit-density inertia about the centroid, from signed
/// tetrahedra against the origin.
fn mass_properties(vertices: &[Vec3], triangles: &[[usize; 3]]) -> (f64, Vec3, Matrix3<f64>) {
    let canonical = Matrix3::new(2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0) / 120.0;
    let mut volume = 0.0;
    let mut first = Vec3::zeros();
    let mut cov = Matrix3::zeros();
    for tri in triangles {
        let [a, b, c] = tri.map(|i| vertices[i]);
        let m = Matrix3::from_columns(&[a, b, c]);
        let det = m.determinant();
        volume += det / 6.0;
        first += det / 24.0 * (a + b + c);
        cov += det * m * canonical * m.transpose();
    }
    if volume.abs() < f64::MIN_POSITIVE {
        return (volume, Vec3::zeros(), Matrix3::zeros());
    }
    let centroid = first / volume;
    // Parallel-axis shift of the covariance to the centroid.
    let cov_c = cov - volume * centroid * centroid.transpose();
    let inertia = Matrix3::identity() * cov_c.trace() - cov_c;
    (volume, centroid, inertia)
}
