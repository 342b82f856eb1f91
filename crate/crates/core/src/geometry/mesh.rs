use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Triangles smaller than this (m²) are dropped on insertion.
pub const MIN_TRIANGLE_AREA: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub position: [f64; 3],
    pub normal: [f64; 3],
    pub uv: [f64; 2],
}

/// Render layer of a mesh.
///
/// Intact geometry is `Static`. Buildings selected for a change are moved to
/// `Changed` (never drawn in the after pass) and their damaged footprints are
/// `Annotation` meshes, drawn in the after pass and alone in the mask pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerTag {
    Static,
    Changed,
    Annotation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MaterialId(pub u32);

impl MaterialId {
    pub const TERRAIN: MaterialId = MaterialId(0);
    pub const ROAD: MaterialId = MaterialId(1);
    pub const FACADE_RESIDENTIAL: MaterialId = MaterialId(2);
    pub const FACADE_INDUSTRIAL: MaterialId = MaterialId(3);
    pub const FLAT_ROOF: MaterialId = MaterialId(4);
    pub const DAMAGE: MaterialId = MaterialId(5);
    /// Per-building gable roof materials start here.
    pub const GABLE_ROOF_BASE: u32 = 1000;
}

impl fmt::Display for MaterialId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextureKind {
    Terrain,
    Facade,
    GableRoof,
    FlatRoof,
    Road,
    Damage,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    /// Linear RGB in `[0, 1]`.
    pub base_color: [f64; 3],
    pub texture_kind: TextureKind,
    pub noise_seed: u64,
    /// Relative modulation of `base_color` by the noise, `0` disables it.
    pub noise_amplitude: f64,
    /// Noise lattice cells per unit of `u` and `v`.
    pub uv_scale: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb3 {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb3 {
    pub fn empty() -> Self {
        Self {
            min: [f64::INFINITY; 3],
            max: [f64::NEG_INFINITY; 3],
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    pub fn include(&mut self, p: [f64; 3]) {
        for i in 0..3 {
            self.min[i] = self.min[i].min(p[i]);
            self.max[i] = self.max[i].max(p[i]);
        }
    }

    pub fn merge(&mut self, other: &Aabb3) {
        if !other.is_empty() {
            self.include(other.min);
            self.include(other.max);
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn corners(&self) -> [[f64; 3]; 8] {
        let mut out = [[0.0; 3]; 8];
        for (i, c) in out.iter_mut().enumerate() {
            *c = [
                if i & 1 == 0 { self.min[0] } else { self.max[0] },
                if i & 2 == 0 { self.min[1] } else { self.max[1] },
                if i & 4 == 0 { self.min[2] } else { self.max[2] },
            ];
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Vertex>,
    pub triangles: Vec<[u32; 3]>,
    pub material: MaterialId,
    pub layer: LayerTag,
}

pub(crate) fn v3(p: [f64; 3]) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

impl Mesh {
    pub fn new(material: MaterialId, layer: LayerTag) -> Self {
        Self {
            vertices: Vec::new(),
            triangles: Vec::new(),
            material,
            layer,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn push_vertex(&mut self, position: [f64; 3], normal: [f64; 3], uv: [f64; 2]) -> u32 {
        self.vertices.push(Vertex { position, normal, uv });
        (self.vertices.len() - 1) as u32
    }

    /// Adds the triangle unless it is degenerate; returns whether it was kept.
    pub fn push_triangle(&mut self, tri: [u32; 3]) -> bool {
        if self.area_of(tri) < MIN_TRIANGLE_AREA {
            return false;
        }
        self.triangles.push(tri);
        true
    }

    /// Appends a triangle with its own three vertices sharing the face
    /// normal. Degenerate triangles are skipped.
    pub fn push_flat_triangle(&mut self, p: [[f64; 3]; 3], uv: [[f64; 2]; 3]) -> bool {
        let n = (v3(p[1]) - v3(p[0])).cross(&(v3(p[2]) - v3(p[0])));
        if 0.5 * n.norm() < MIN_TRIANGLE_AREA {
            return false;
        }
        let n = n.normalize();
        let base = self.vertices.len() as u32;
        for k in 0..3 {
            self.push_vertex(p[k], [n.x, n.y, n.z], uv[k]);
        }
        self.triangles.push([base, base + 1, base + 2]);
        true
    }

    pub fn area_of(&self, tri: [u32; 3]) -> f64 {
        let a = v3(self.vertices[tri[0] as usize].position);
        let b = v3(self.vertices[tri[1] as usize].position);
        let c = v3(self.vertices[tri[2] as usize].position);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(|t| self.area_of(*t)).sum()
    }

    pub fn bounds(&self) -> Aabb3 {
        let mut b = Aabb3::empty();
        for v in &self.vertices {
            b.include(v.position);
        }
        b
    }

    /// Replaces vertex normals by the normalized sum of incident face
    /// normals (area weighted).
    pub fn smooth_normals(&mut self) {
        let mut acc = vec![Vector3::zeros(); self.vertices.len()];
        for t in &self.triangles {
            let a = v3(self.vertices[t[0] as usize].position);
            let b = v3(self.vertices[t[1] as usize].position);
            let c = v3(self.vertices[t[2] as usize].position);
            let n = (b - a).cross(&(c - a));
            for &i in t {
                acc[i as usize] += n;
            }
        }
        for (v, n) in self.vertices.iter_mut().zip(acc) {
            let n = if n.norm() > 0.0 { n.normalize() } else { Vector3::z() };
            v.normal = [n.x, n.y, n.z];
        }
    }

    /// Checks the structural invariants: indices in range, no degenerate
    /// triangle, finite positions, unit normals and uv in `[0, 1]²`.
    pub fn check(&self) -> Result<(), String> {
        let n = self.vertices.len() as u32;
        for (i, v) in self.vertices.iter().enumerate() {
            if v.position.iter().any(|c| !c.is_finite()) {
                return Err(format!("vertex {i}: non-finite position"));
            }
            let len = v3(v.normal).norm();
            if (len - 1.0).abs() > 1e-6 {
                return Err(format!("vertex {i}: normal length {len}"));
            }
            if v.uv.iter().any(|c| !(-1e-9..=1.0 + 1e-9).contains(c)) {
                return Err(format!("vertex {i}: uv {:?} outside [0,1]", v.uv));
            }
        }
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&k| k >= n) {
                return Err(format!("triangle {i}: index out of range"));
            }
            let a = self.area_of(*t);
            if a < MIN_TRIANGLE_AREA {
                return Err(format!("triangle {i}: degenerate (area {a})"));
            }
        }
        Ok(())
    }
}
