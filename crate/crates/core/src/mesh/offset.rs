use nalgebra::{Matrix3, SymmetricEigen};

use super::{bvh::Bvh, TriMesh};
use crate::{Error, Result, Vec3};

/// Eigenvalues of the normalised normal-covariance below this are treated as
/// unconstrained directions (flat or gently curved neighbourhoods).
const RANK_THRESHOLD: f64 = 0.02;

#[derive(Clone, Debug)]
pub struct OffsetReport {
    pub mesh: TriMesh,
    /// Pairs of non-adjacent faces that intersect after offsetting.
    pub self_intersections: usize,
}

/// Moves every vertex along its offset vector so that incident face planes
/// shift by `distance` (positive = along the outward normal).
///
/// On smooth regions the offset vector is `distance` times the vertex normal;
/// at creases and corners it is stretched so flat faces move by the full
/// distance instead of being chamfered. Connectivity is preserved.
pub fn offset_mesh(m: &TriMesh, distance: f64) -> Result<TriMesh> {
    offset_mesh_with_report(m, distance).map(|r| r.mesh)
}

pub fn offset_mesh_with_report(m: &TriMesh, distance: f64) -> Result<OffsetReport> {
    if distance == 0.0 {
        return Ok(OffsetReport {
            mesh: m.clone(),
            self_intersections: 0,
        });
    }
    let directions = offset_directions(m);
    let vertices = m
        .vertices()
        .iter()
        .zip(&directions)
        .map(|(p, d)| p + d * distance)
        .collect();
    let out = m.with_positions(vertices);

    let inverted = (0..m.faces().len())
        .filter(|&f| {
            let before = m.face_normal(f);
            let [a, b, c] = out.triangle(f);
            let after = (b - a).cross(&(c - a));
            after.dot(&before) <= 0.0
        })
        .count();
    // Shrinking past the centre reflects whole regions without flipping faces.
    let reflected = m.is_closed() && out.volume() <= 0.0;
    if inverted > 0 || reflected {
        if distance < 0.0 {
            return Err(Error::OffsetCollapse {
                distance,
                inverted_faces: inverted,
            });
        }
        log::warn!("offset by {distance} mm inverted {inverted} faces");
    }

    let self_intersections = Bvh::new(&out).self_intersections(1e-9).len();
    if self_intersections > 0 {
        log::warn!(
            "offset by {distance} mm produced {self_intersections} self-intersecting face pairs"
        );
    }
    Ok(OffsetReport {
        mesh: out,
        self_intersections,
    })
}

/// Per-vertex displacement for a unit offset.
///
/// Least-squares solution of `n_f · x = 1` over incident face normals,
/// weighted by the face angle at the vertex, restricted to the well-conditioned
/// eigen-directions. Exact for polyhedral corners with up to three distinct
/// face planes; reduces to the angle-weighted normal on smooth patches.
pub(crate) fn offset_directions(m: &TriMesh) -> Vec<Vec3> {
    let n = m.vertices().len();
    let mut cov = vec![Matrix3::<f64>::zeros(); n];
    let mut rhs = vec![Vec3::zeros(); n];
    let mut weight = vec![0.0f64; n];
    for (f, face) in m.faces().iter().enumerate() {
        let normal = m.face_normal(f);
        if normal == Vec3::zeros() {
            continue;
        }
        let tri = m.triangle(f);
        for k in 0..3 {
            let e1 = tri[(k + 1) % 3] - tri[k];
            let e2 = tri[(k + 2) % 3] - tri[k];
            let angle = e1.angle(&e2);
            let v = face[k] as usize;
            cov[v] += normal * normal.transpose() * angle;
            rhs[v] += normal * angle;
            weight[v] += angle;
        }
    }
    (0..n)
        .map(|v| {
            if weight[v] <= 0.0 {
                return Vec3::zeros();
            }
            let a = cov[v] / weight[v];
            let b = rhs[v] / weight[v];
            let eig = SymmetricEigen::new(a);
            let mut x = Vec3::zeros();
            for i in 0..3 {
                let lambda = eig.eigenvalues[i];
                if lambda > RANK_THRESHOLD {
                    let e = eig.eigenvectors.column(i);
                    x += e * (e.dot(&b) / lambda);
                }
            }
            // Nearly opposite normals (a fin): fall back to the mean normal.
            let mean = b.try_normalize(1e-12).unwrap_or_else(Vec3::zeros);
            if x.norm() > 3.0 || x.dot(&mean) <= 0.0 {
                mean
            } else {
                x
            }
        })
        .collect()
}
