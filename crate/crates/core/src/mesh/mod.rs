//! Indexed triangle meshes and the geometric operations the rest of the
//! pipeline is built on.

use std::collections::HashMap;

use crate::{Error, Point3, Result, Vec3};

pub mod boolean;
pub mod bvh;
pub mod geom;
pub mod io;
mod offset;
pub mod primitives;
mod remesh;
pub mod slice;

pub use boolean::{boolean, BooleanOp};
pub use io::{load_mesh, read_mesh, stl_bytes, write_stl, MeshFormat};
pub use offset::{offset_mesh, offset_mesh_with_report, OffsetReport};
pub use remesh::{remesh_isotropic, remesh_with, RemeshOptions};
pub use slice::{partial_volume_below, slice_at, PlanarSection};

/// Faces with area below this are treated as degenerate and dropped.
pub const DEGENERATE_AREA: f64 = 1e-9;

/// Indexed triangle mesh in millimetres.
///
/// Vertex normals are derived (area weighted) and recomputed whenever the
/// mesh is constructed. The mesh is immutable once built; every operation
/// returns a new mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point3>,
    faces: Vec<[u32; 3]>,
    normals: Vec<Vec3>,
    closed: bool,
    non_manifold_edges: usize,
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Point3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        let m = Vec3::repeat(margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: &Point3) -> f64 {
        let mut d = 0.0;
        for i in 0..3 {
            let v = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

impl TriMesh {
    /// Builds a mesh, dropping faces whose area is below [`DEGENERATE_AREA`].
    pub fn new(vertices: Vec<Point3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(bad) = faces.iter().find(|f| f.iter().any(|&i| i as usize >= n)) {
            return Err(Error::InvalidMesh(format!(
                "face {bad:?} references a vertex beyond {n}"
            )));
        }
        if vertices.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        let faces = faces
            .into_iter()
            .filter(|f| {
                f[0] != f[1]
                    && f[1] != f[2]
                    && f[0] != f[2]
                    && geom::triangle_area(
                        &vertices[f[0] as usize],
                        &vertices[f[1] as usize],
                        &vertices[f[2] as usize],
                    ) >= DEGENERATE_AREA
            })
            .collect();
        Ok(Self::from_parts(vertices, faces))
    }

    fn from_parts(vertices: Vec<Point3>, faces: Vec<[u32; 3]>) -> Self {
        let mut mesh = TriMesh {
            normals: Vec::new(),
            vertices,
            faces,
            closed: false,
            non_manifold_edges: 0,
        };
        mesh.normals = mesh.compute_vertex_normals();
        let topo = mesh.edge_topology();
        mesh.non_manifold_edges = topo.non_manifold;
        mesh.closed = topo.is_watertight() && !mesh.faces.is_empty() && mesh.volume() > 0.0;
        mesh
    }

    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new())
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn vertex(&self, i: u32) -> &Point3 {
        &self.vertices[i as usize]
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Watertight, consistently wound and enclosing positive volume.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Every edge shared by exactly two faces with opposite directions.
    ///
    /// Unlike [`TriMesh::is_closed`] this accepts inverted solids, which is
    /// what cavity surfaces look like on their own.
    pub fn is_watertight(&self) -> bool {
        self.edge_topology().is_watertight()
    }

    pub fn non_manifold_edge_count(&self) -> usize {
        self.non_manifold_edges
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edge_topology().boundary
    }

    pub fn triangle(&self, f: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unit normal of face `f` (zero for degenerate faces).
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(Vec3::zeros)
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.triangle(f);
        geom::triangle_area(&a, &b, &c)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Signed volume via the divergence theorem (sum of origin tetrahedra).
    pub fn volume(&self) -> f64 {
        let origin = self.centroid_of_vertices();
        self.faces
            .iter()
            .map(|f| {
                let a = self.vertices[f[0] as usize] - origin;
                let b = self.vertices[f[1] as usize] - origin;
                let c = self.vertices[f[2] as usize] - origin;
                a.dot(&b.cross(&c))
            })
            .sum::<f64>()
            / 6.0
    }

    fn centroid_of_vertices(&self) -> Point3 {
        if self.vertices.is_empty() {
            return Point3::origin();
        }
        let sum = self
            .vertices
            .iter()
            .fold(Vec3::zeros(), |acc, p| acc + p.coords);
        Point3::from(sum / self.vertices.len() as f64)
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Mean edge length over unique undirected edges.
    pub fn mean_edge_length(&self) -> f64 {
        let lengths = self.edge_lengths();
        if lengths.is_empty() {
            0.0
        } else {
            lengths.iter().sum::<f64>() / lengths.len() as f64
        }
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.unique_edges()
            .into_iter()
            .map(|(a, b)| (self.vertices[a as usize] - self.vertices[b as usize]).norm())
            .collect()
    }

    /// Unique undirected edges as `(min, max)` vertex pairs, sorted.
    pub fn unique_edges(&self) -> Vec<(u32, u32)> {
        let mut edges: Vec<(u32, u32)> = self
            .faces
            .iter()
            .flat_map(|f| {
                [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])]
                    .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Vertex indices lying on boundary (single-face) edges.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut count: HashMap<(u32, u32), u32> = HashMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut on_boundary = vec![false; self.vertices.len()];
        for ((a, b), n) in count {
            if n == 1 {
                on_boundary[a as usize] = true;
                on_boundary[b as usize] = true;
            }
        }
        on_boundary
    }

    /// Boundary edges directed as they appear in their single face.
    pub fn boundary_edges(&self) -> Vec<(u32, u32)> {
        let mut directed: HashMap<(u32, u32), u32> = HashMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *directed.entry((a, b)).or_default() += 1;
            }
        }
        let mut out: Vec<(u32, u32)> = directed
            .keys()
            .filter(|(a, b)| !directed.contains_key(&(*b, *a)))
            .copied()
            .collect();
        out.sort_unstable();
        out
    }

    fn edge_topology(&self) -> EdgeTopology {
        let mut undirected: HashMap<(u32, u32), (u32, i32)> = HashMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let key = (a.min(b), a.max(b));
                let entry = undirected.entry(key).or_insert((0, 0));
                entry.0 += 1;
                entry.1 += if a < b { 1 } else { -1 };
            }
        }
        let mut topo = EdgeTopology::default();
        for (count, balance) in undirected.values() {
            match count {
                1 => topo.boundary += 1,
                2 if *balance != 0 => topo.inconsistent += 1,
                2 => {}
                _ => topo.non_manifold += 1,
            }
        }
        topo
    }

    fn compute_vertex_normals(&self) -> Vec<Vec3> {
        let mut normals = vec![Vec3::zeros(); self.vertices.len()];
        for f in &self.faces {
            let [a, b, c] = f.map(|i| self.vertices[i as usize]);
            // Cross product magnitude is twice the area: area weighting for free.
            let n = (b - a).cross(&(c - a));
            for &i in f {
                normals[i as usize] += n;
            }
        }
        normals
            .into_iter()
            .map(|n| n.try_normalize(1e-300).unwrap_or_else(Vec3::zeros))
            .collect()
    }

    /// Merges vertices closer than `tolerance`, dropping faces that collapse.
    pub fn welded(&self, tolerance: f64) -> TriMesh {
        let (vertices, remap) = weld_points(&self.vertices, tolerance);
        let faces = self
            .faces
            .iter()
            .map(|f| f.map(|i| remap[i as usize]))
            .filter(|f| f[0] != f[1] && f[1] != f[2] && f[0] != f[2])
            .collect();
        TriMesh::new(vertices, faces).expect("welding keeps indices in range")
    }

    /// Same surface with every face reversed.
    pub fn flipped(&self) -> TriMesh {
        let faces = self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect();
        TriMesh::from_parts(self.vertices.clone(), faces)
    }

    /// Disjoint union of the two vertex/face sets; no geometry is resolved.
    pub fn merged(&self, other: &TriMesh) -> TriMesh {
        let offset = self.vertices.len() as u32;
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut faces = self.faces.clone();
        faces.extend(other.faces.iter().map(|f| f.map(|i| i + offset)));
        TriMesh::from_parts(vertices, faces)
    }

    pub fn merge_all<'a>(meshes: impl IntoIterator<Item = &'a TriMesh>) -> TriMesh {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for m in meshes {
            let offset = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            faces.extend(m.faces.iter().map(|f| f.map(|i| i + offset)));
        }
        TriMesh::from_parts(vertices, faces)
    }

    pub fn translated(&self, t: &Vec3) -> TriMesh {
        self.mapped(|p| p + t)
    }

    /// Applies a rigid (or any orientation-preserving affine) map to every vertex.
    pub fn mapped(&self, f: impl Fn(&Point3) -> Point3) -> TriMesh {
        let vertices = self.vertices.iter().map(f).collect();
        TriMesh::from_parts(vertices, self.faces.clone())
    }

    /// Same connectivity, new positions. Panics if the count differs.
    pub fn with_positions(&self, vertices: Vec<Point3>) -> TriMesh {
        assert_eq!(vertices.len(), self.vertices.len());
        TriMesh::from_parts(vertices, self.faces.clone())
    }

    /// Connected components by shared vertices.
    pub fn components(&self) -> Vec<TriMesh> {
        let mut parent: Vec<u32> = (0..self.vertices.len() as u32).collect();
        fn find(parent: &mut [u32], mut x: u32) -> u32 {
            while parent[x as usize] != x {
                parent[x as usize] = parent[parent[x as usize] as usize];
                x = parent[x as usize];
            }
            x
        }
        for f in &self.faces {
            let r0 = find(&mut parent, f[0]);
            for &v in &f[1..] {
                let r = find(&mut parent, v);
                if r != r0 {
                    parent[r as usize] = r0;
                }
            }
        }
        let mut groups: Vec<(u32, Vec<usize>)> = Vec::new();
        let mut index: HashMap<u32, usize> = HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            let root = find(&mut parent, f[0]);
            let slot = *index.entry(root).or_insert_with(|| {
                groups.push((root, Vec::new()));
                groups.len() - 1
            });
            groups[slot].1.push(fi);
        }
        groups
            .into_iter()
            .map(|(_, face_ids)| self.subset(&face_ids))
            .collect()
    }

    /// Sub-mesh made of the listed faces, with unused vertices removed.
    pub fn subset(&self, face_ids: &[usize]) -> TriMesh {
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let mut vertices = Vec::new();
        let mut faces = Vec::with_capacity(face_ids.len());
        for &fi in face_ids {
            let f = self.faces[fi].map(|v| {
                *remap.entry(v).or_insert_with(|| {
                    vertices.push(self.vertices[v as usize]);
                    (vertices.len() - 1) as u32
                })
            });
            faces.push(f);
        }
        TriMesh::from_parts(vertices, faces)
    }

    /// Euler characteristic V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.unique_edges().len() as i64 + self.faces.len() as i64
    }
}

#[derive(Default)]
struct EdgeTopology {
    boundary: usize,
    inconsistent: usize,
    non_manifold: usize,
}

impl EdgeTopology {
    fn is_watertight(&self) -> bool {
        self.boundary == 0 && self.inconsistent == 0 && self.non_manifold == 0
    }
}

/// Clusters points closer than `tolerance`; returns the representatives and
/// the index map. Deterministic: the first point seen in a cluster wins.
pub(crate) fn weld_points(points: &[Point3], tolerance: f64) -> (Vec<Point3>, Vec<u32>) {
    let cell = tolerance.max(1e-12);
    let key = |p: &Point3| {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
    let mut out: Vec<Point3> = Vec::new();
    let mut remap = Vec::with_capacity(points.len());
    let tol2 = tolerance * tolerance;
    for p in points {
        let (kx, ky, kz) = key(p);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &i in list {
                            if (out[i as usize] - p).norm_squared() <= tol2 {
                                found = Some(i);
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        let idx = match found {
            Some(i) => i,
            None => {
                out.push(*p);
                let i = (out.len() - 1) as u32;
                grid.entry((kx, ky, kz)).or_default().push(i);
                i
            }
        };
        remap.push(idx);
    }
    (out, remap)
}
