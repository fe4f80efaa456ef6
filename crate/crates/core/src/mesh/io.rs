//! STL (binary/ASCII) and OBJ input, binary STL output. Units are mm.

use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TriMesh;
use crate::{Error, Point3, Result};

/// Tolerance used to weld coincident vertices on load.
pub const WELD_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    /// Binary or ASCII; the reader detects which.
    Stl,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("stl") => Ok(MeshFormat::Stl),
            Some("obj") => Ok(MeshFormat::Obj),
            other => Err(Error::Parse(format!(
                "unsupported mesh extension {other:?} (expected .stl or .obj)"
            ))),
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_mesh(&bytes, format)
}

/// Parses mesh bytes, welds duplicate vertices and reports open/non-manifold
/// status through the returned mesh (non-manifold input is logged, not fatal).
pub fn read_mesh(bytes: &[u8], format: MeshFormat) -> Result<TriMesh> {
    let (vertices, faces) = match format {
        MeshFormat::Stl => read_stl(&mut Cursor::new(bytes))?,
        MeshFormat::Obj => read_obj(bytes)?,
    };
    if faces.is_empty() {
        return Err(Error::Parse("mesh has no faces".into()));
    }
    let mesh = TriMesh::new(vertices, faces)?.welded(WELD_TOLERANCE);
    if mesh.non_manifold_edge_count() > 0 {
        log::warn!(
            "mesh has {} non-manifold edges (more than two faces per edge)",
            mesh.non_manifold_edge_count()
        );
    }
    if !mesh.is_closed() {
        log::info!("mesh is open: {} boundary edges", mesh.boundary_edge_count());
    }
    Ok(mesh)
}

fn read_stl<R: Read + Seek>(reader: &mut R) -> Result<(Vec<Point3>, Vec<[u32; 3]>)> {
    let indexed = stl_io::read_stl(reader).map_err(|e| Error::Parse(format!("STL: {e}")))?;
    let vertices = indexed
        .vertices
        .iter()
        .map(|v| Point3::new(v[0] as f64, v[1] as f64, v[2] as f64))
        .collect();
    let faces = indexed
        .faces
        .iter()
        .map(|t| t.vertices.map(|i| i as u32))
        .collect();
    Ok((vertices, faces))
}

fn read_obj(bytes: &[u8]) -> Result<(Vec<Point3>, Vec<[u32; 3]>)> {
    let options = tobj::LoadOptions {
        triangulate: true,
        single_index: false,
        ignore_points: true,
        ignore_lines: true,
        ..Default::default()
    };
    let (models, _) = tobj::load_obj_buf(&mut Cursor::new(bytes), &options, |_| {
        Err(tobj::LoadError::OpenFileFailed)
    })
    .map_err(|e| Error::Parse(format!("OBJ: {e}")))?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for model in models {
        let base = vertices.len() as u32;
        let m = model.mesh;
        vertices.extend(
            m.positions
                .chunks_exact(3)
                .map(|c| Point3::new(c[0] as f64, c[1] as f64, c[2] as f64)),
        );
        faces.extend(
            m.indices
                .chunks_exact(3)
                .map(|c| [base + c[0], base + c[1], base + c[2]]),
        );
    }
    Ok((vertices, faces))
}

/// Binary STL bytes for `mesh`.
pub fn stl_bytes(mesh: &TriMesh) -> Vec<u8> {
    let triangles: Vec<stl_io::Triangle> = (0..mesh.faces().len())
        .map(|f| {
            let [a, b, c] = mesh.triangle(f);
            let n = mesh.face_normal(f);
            let v = |p: Point3| stl_io::Vertex::new([p.x as f32, p.y as f32, p.z as f32]);
            stl_io::Triangle {
                normal: stl_io::Normal::new([n.x as f32, n.y as f32, n.z as f32]),
                vertices: [v(a), v(b), v(c)],
            }
        })
        .collect();
    let mut out = Vec::with_capacity(84 + 50 * triangles.len());
    stl_io::write_stl(&mut out, triangles.iter()).expect("writing to a Vec cannot fail");
    out
}

pub fn write_stl(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&stl_bytes(mesh)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn tetrahedron_ascii_stl() {
        let t = primitives::tetrahedron(1.0);
        let mut text = String::from("solid tet\n");
        for f in 0..t.faces().len() {
            let n = t.face_normal(f);
            text += &format!("facet normal {} {} {}\nouter loop\n", n.x, n.y, n.z);
            for p in t.triangle(f) {
                text += &format!("vertex {} {} {}\n", p.x, p.y, p.z);
            }
            text += "endloop\nendfacet\n";
        }
        text += "endsolid tet\n";
        let m = read_mesh(text.as_bytes(), MeshFormat::Stl).unwrap();
        assert_eq!(m.vertices().len(), 4);
        assert_eq!(m.faces().len(), 4);
        assert!(m.is_closed());
    }

    #[test]
    fn binary_roundtrip() {
        let s = primitives::icosphere(5.0, 3);
        let back = read_mesh(&stl_bytes(&s), MeshFormat::Stl).unwrap();
        assert_eq!(back.vertices().len(), s.vertices().len());
        assert!(back.is_closed());
        assert!((back.volume() - s.volume()).abs() < 1e-3);
    }

    #[test]
    fn obj_with_duplicated_corners_welds_to_eight() {
        // Every quad carries its own copy of its corners.
        let corners = |x: f64, y: f64, z: f64| format!("v {x} {y} {z}\n");
        let quads: [[[f64; 3]; 4]; 6] = [
            [[0., 0., 0.], [0., 1., 0.], [1., 1., 0.], [1., 0., 0.]],
            [[0., 0., 1.], [1., 0., 1.], [1., 1., 1.], [0., 1., 1.]],
            [[0., 0., 0.], [1., 0., 0.], [1., 0., 1.], [0., 0., 1.]],
            [[1., 0., 0.], [1., 1., 0.], [1., 1., 1.], [1., 0., 1.]],
            [[1., 1., 0.], [0., 1., 0.], [0., 1., 1.], [1., 1., 1.]],
            [[0., 1., 0.], [0., 0., 0.], [0., 0., 1.], [0., 1., 1.]],
        ];
        let mut text = String::new();
        for q in &quads {
            for p in q {
                text += &corners(p[0], p[1], p[2]);
            }
        }
        for i in 0..6 {
            let b = 4 * i + 1;
            text += &format!("f {} {} {} {}\n", b, b + 1, b + 2, b + 3);
        }
        let m = read_mesh(text.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(m.vertices().len(), 8);
        assert_eq!(m.faces().len(), 12);
        assert!(m.is_closed());
    }

    #[test]
    fn open_sheet_reports_boundary() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let m = read_mesh(text.as_bytes(), MeshFormat::Obj).unwrap();
        assert!(!m.is_closed());
        assert_eq!(m.boundary_edge_count(), 4);
    }

    #[test]
    fn garbage_is_a_parse_error() {
        let err = read_mesh(b"solid x\nfacet nonsense\n", MeshFormat::Stl).unwrap_err();
        assert_eq!(err.code(), "parse_error");
    }
}
