use std::collections::HashMap;

use crate::constraints::{CellSpec, ShellMode};
use crate::mesh::{remesh_isotropic, TriMesh};
use crate::shell::ShellModel;
use crate::{Error, Point3, Result, Vec3};

use super::loft::circumradius;

/// Cell centres and normals: the vertices of `M′` remeshed to one cell pitch.
///
/// `M′` is first subdivided below half a pitch so the remesher coarsens
/// towards the target instead of keeping a tessellation that already happens
/// to be within tolerance.
///
/// On single-sided sheets, centres closer to the sheet border than the cell's
/// circumradius plus half a gap are dropped so no cell breaks the side wall.
pub fn place_cells(shell: &ShellModel, spec: &CellSpec) -> Result<Vec<(Point3, Vec3)>> {
    let pitch = spec.pitch();
    let extent = shell.m_prime.bounds().extent();
    if extent.max() < pitch {
        return Err(Error::EmptyPlacement(format!(
            "cell pitch {pitch} mm exceeds the model extent {:.3} mm",
            extent.max()
        )));
    }
    let remeshed = remesh_isotropic(&refined(&shell.m_prime, pitch / 2.0), pitch)?;
    let mut centers: Vec<(Point3, Vec3)> = remeshed
        .vertices()
        .iter()
        .copied()
        .zip(remeshed.normals().iter().copied())
        .collect();
    if shell.mode == ShellMode::SingleSided {
        let margin = circumradius(spec.shape, spec.cross_section) + spec.gap / 2.0;
        let border = border_segments(&shell.m_prime);
        centers.retain(|(p, _)| distance_to_segments(p, &border) >= margin);
    }
    if centers.is_empty() {
        return Err(Error::EmptyPlacement(
            "no remeshed vertex is far enough from the sheet border".into(),
        ));
    }
    log::info!("placed {} cell centres at pitch {pitch} mm", centers.len());
    Ok(centers)
}

/// Midpoint 1-to-4 subdivision until no edge is longer than `max_edge`.
fn refined(m: &TriMesh, max_edge: f64) -> TriMesh {
    let mut m = m.clone();
    while m.edge_lengths().iter().any(|&l| l > max_edge) {
        let mut vertices = m.vertices().to_vec();
        let mut mids: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, vertices: &mut Vec<Point3>| -> u32 {
            *mids.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(nalgebra::center(&vertices[a as usize], &vertices[b as usize]));
                (vertices.len() - 1) as u32
            })
        };
        let mut faces = Vec::with_capacity(m.faces().len() * 4);
        for &[a, b, c] in m.faces() {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            faces.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        m = TriMesh::new(vertices, faces).expect("subdivision indices are in range");
    }
    m
}

fn border_segments(m: &TriMesh) -> Vec<(Point3, Point3)> {
    m.boundary_edges()
        .into_iter()
        .map(|(a, b)| (*m.vertex(a), *m.vertex(b)))
        .collect()
}

fn distance_to_segments(p: &Point3, segments: &[(Point3, Point3)]) -> f64 {
    segments
        .iter()
        .map(|(a, b)| {
            let ab = b - a;
            let t = ((p - a).dot(&ab) / ab.norm_squared().max(1e-300)).clamp(0.0, 1.0);
            (a + ab * t - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}
