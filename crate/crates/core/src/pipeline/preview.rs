//! JSON scene consumed by the browser preview: flat triangle soups plus a status colour key.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::cells::{Cell, CellReport, CellStatus};
use crate::mesh::TriMesh;
use crate::{Point3, Vec3};

/// Shell surfaces are decimated below this many triangles for preview only.
pub const PREVIEW_TRIANGLE_LIMIT: usize = 50_000;

pub const SCENE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreviewScene {
    pub version: u32,
    pub units: String,
    /// True when cells were lofted but not carved out of the shell.
    pub preview_only: bool,
    /// Hex colour per cell status (and `unplannable` for plan overlays).
    pub status_colors: Vec<(String, String)>,
    pub shell: SceneMesh,
    pub cells: Vec<SceneCell>,
    pub report: CellReport,
}

/// Triangle soup: nine floats per triangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMesh {
    pub triangle_count: usize,
    pub positions: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneCell {
    pub id: usize,
    pub status: CellStatus,
    pub center: [f32; 3],
    pub normal: [f32; 3],
    pub mesh: SceneMesh,
}

pub fn status_colors() -> Vec<(String, String)> {
    [
        ("ok", "#3b82f6"),
        ("shrunk", "#22c55e"),
        ("overlapping", "#ef4444"),
        ("projection_miss", "#a855f7"),
        ("boolean_failed", "#f59e0b"),
        ("unplannable", "#6b7280"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

impl SceneMesh {
    pub fn from_mesh(m: &TriMesh) -> Self {
        let mut positions = Vec::with_capacity(m.faces().len() * 9);
        for f in m.faces() {
            for &v in f {
                let p = m.vertex(v);
                positions.extend([p.x as f32, p.y as f32, p.z as f32]);
            }
        }
        SceneMesh {
            triangle_count: m.faces().len(),
            positions,
        }
    }
}

fn f32x3(v: &[f64]) -> [f32; 3] {
    [v[0] as f32, v[1] as f32, v[2] as f32]
}

pub fn build_scene(shell_surface: &TriMesh, cells: &[Cell], report: &CellReport, preview_only: bool) -> PreviewScene {
    PreviewScene {
        version: SCENE_VERSION,
        units: "mm".into(),
        preview_only,
        status_colors: status_colors(),
        shell: SceneMesh::from_mesh(&decimate(shell_surface, PREVIEW_TRIANGLE_LIMIT)),
        cells: cells
            .iter()
            .map(|c| SceneCell {
                id: c.id,
                status: c.status,
                center: f32x3(c.center.coords.as_slice()),
                normal: f32x3(c.normal.as_slice()),
                mesh: SceneMesh::from_mesh(&c.solid),
            })
            .collect(),
        report: report.clone(),
    }
}

/// Vertex-clustering decimation: snaps vertices to a grid that is coarsened
/// until at most `limit` triangles survive. Meshes already under the limit
/// are returned unchanged. The result is for display only.
pub fn decimate(m: &TriMesh, limit: usize) -> TriMesh {
    if m.faces().len() <= limit {
        return m.clone();
    }
    let b = m.bounds();
    let mut cell = b.extent().norm() / 2000.0;
    loop {
        let out = cluster(m, cell, &b.min);
        if out.faces().len() <= limit {
            return out;
        }
        cell *= 1.5;
    }
}

fn cluster(m: &TriMesh, cell: f64, origin: &Point3) -> TriMesh {
    let mut ids: HashMap<[i64; 3], u32> = HashMap::new();
    let mut sums: Vec<(Vec3, f64)> = Vec::new();
    let remap: Vec<u32> = m
        .vertices()
        .iter()
        .map(|p| {
            let d = (p - origin) / cell;
            let key = [d.x.floor() as i64, d.y.floor() as i64, d.z.floor() as i64];
            let id = *ids.entry(key).or_insert_with(|| {
                sums.push((Vec3::zeros(), 0.0));
                (sums.len() - 1) as u32
            });
            sums[id as usize].0 += p.coords;
            sums[id as usize].1 += 1.0;
            id
        })
        .collect();
    let vertices: Vec<Point3> = sums.iter().map(|(s, n)| Point3::from(s / *n)).collect();
    let mut seen = HashSet::new();
    let faces: Vec<[u32; 3]> = m
        .faces()
        .iter()
        .map(|f| f.map(|v| remap[v as usize]))
        .filter(|f| {
            let mut k = *f;
            k.sort_unstable();
            seen.insert(k)
        })
        .collect();
    TriMesh::new(vertices, faces).unwrap_or_else(|_| TriMesh::empty())
}
