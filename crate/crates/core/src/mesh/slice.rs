//! Horizontal plane sections and clipped volumes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{geom, TriMesh};
use crate::{Error, Point2, Point3, Result};

/// Plane offset applied when the slicing plane passes through a vertex.
pub const PLANE_PERTURBATION: f64 = 1e-6;

/// Closed loops cut from a solid by the plane `z`.
///
/// Outer loops are counter-clockwise, holes clockwise, decided by how many
/// other loops contain them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarSection {
    pub z: f64,
    pub loops: Vec<Vec<Point2>>,
}

impl PlanarSection {
    /// Net enclosed area (outer loops minus holes).
    pub fn area(&self) -> f64 {
        self.loops.iter().map(|l| geom::signed_area_2d(l)).sum()
    }

    pub fn contains(&self, p: &Point2) -> bool {
        self.loops.iter().filter(|l| geom::point_in_loop(p, l)).count() % 2 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }
}

/// Intersects `m` with the plane at height `z`.
pub fn slice_at(m: &TriMesh, z: f64) -> Result<PlanarSection> {
    let mut z = z;
    // Move off any vertex so every crossing is a proper edge crossing.
    for _ in 0..8 {
        if m.vertices().iter().any(|p| (p.z - z).abs() < PLANE_PERTURBATION * 0.5) {
            z += PLANE_PERTURBATION;
        } else {
            break;
        }
    }
    let verts = m.vertices();
    let above = |i: u32| verts[i as usize].z > z;

    // Each segment runs between two edge crossings, keyed by undirected edge.
    let mut segments: Vec<((u32, u32), (u32, u32))> = Vec::new();
    for f in m.faces() {
        let mut crossing = Vec::with_capacity(2);
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            if above(a) != above(b) {
                crossing.push((a.min(b), a.max(b)));
            }
        }
        if crossing.len() == 2 {
            segments.push((crossing[0], crossing[1]));
        }
    }
    if segments.is_empty() {
        return Err(Error::EmptySection { z });
    }

    let point_of = |(a, b): (u32, u32)| -> Point2 {
        let pa = verts[a as usize];
        let pb = verts[b as usize];
        let t = (z - pa.z) / (pb.z - pa.z);
        Point2::new(pa.x + (pb.x - pa.x) * t, pa.y + (pb.y - pa.y) * t)
    };

    let mut by_edge: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(i);
        by_edge.entry(*b).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut loops: Vec<Vec<Point2>> = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (first, mut current) = segments[start];
        let mut keys = vec![first];
        while current != first {
            keys.push(current);
            let next = by_edge
                .get(&current)
                .and_then(|list| list.iter().copied().find(|&s| !used[s]));
            let Some(s) = next else { break };
            used[s] = true;
            let (a, b) = segments[s];
            current = if a == current { b } else { a };
        }
        if keys.len() >= 3 {
            loops.push(keys.into_iter().map(point_of).collect());
        }
    }
    if loops.is_empty() {
        return Err(Error::EmptySection { z });
    }

    // Containment parity decides orientation.
    let depth: Vec<usize> = (0..loops.len())
        .map(|i| {
            let probe = loops[i][0];
            (0..loops.len())
                .filter(|&j| j != i && geom::point_in_loop(&probe, &loops[j]))
                .count()
        })
        .collect();
    for (l, d) in loops.iter_mut().zip(depth) {
        let ccw = geom::signed_area_2d(l) > 0.0;
        let want_ccw = d % 2 == 0;
        if ccw != want_ccw {
            l.reverse();
        }
    }
    Ok(PlanarSection { z, loops })
}

/// Volume of the part of closed mesh `m` below the plane `z`.
///
/// Triangles are clipped to the lower half-space and summed as tetrahedra
/// against an apex on the plane; the cap lies in the plane and contributes
/// nothing, so it never has to be built.
pub fn partial_volume_below(m: &TriMesh, z: f64) -> f64 {
    let b = m.bounds();
    if b.is_empty() || z <= b.min.z {
        return 0.0;
    }
    let apex = Point3::new((b.min.x + b.max.x) * 0.5, (b.min.y + b.max.y) * 0.5, z);
    let mut total = 0.0;
    let mut poly: Vec<Point3> = Vec::with_capacity(4);
    for f in 0..m.faces().len() {
        let tri = m.triangle(f);
        poly.clear();
        for k in 0..3 {
            let p = tri[k];
            let q = tri[(k + 1) % 3];
            let p_in = p.z <= z;
            let q_in = q.z <= z;
            if p_in {
                poly.push(p);
            }
            if p_in != q_in {
                let t = (z - p.z) / (q.z - p.z);
                poly.push(p + (q - p) * t);
            }
        }
        for k in 1..poly.len().saturating_sub(1) {
            let a = poly[0] - apex;
            let b = poly[k] - apex;
            let c = poly[k + 1] - apex;
            total += a.dot(&b.cross(&c));
        }
    }
    total / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn cube_mid_section() {
        let c = primitives::cuboid(Point3::origin(), Point3::new(10.0, 10.0, 10.0));
        let s = slice_at(&c, 5.0).unwrap();
        assert_eq!(s.loops.len(), 1);
        assert_relative_eq!(s.area(), 100.0, epsilon = 1e-9);
    }

    #[test]
    fn cone_half_height_section() {
        let cone = primitives::frustum(4.0, 0.0, 5.0, 96, 0.0);
        let s = slice_at(&cone, 2.5).unwrap();
        assert_eq!(s.loops.len(), 1);
        assert!((s.area() - PI * 4.0).abs() / (PI * 4.0) < 0.01);
    }

    #[test]
    fn torus_through_hole_has_ring_with_hole() {
        let t = primitives::torus(5.0, 1.5, 48, 24);
        let s = slice_at(&t, 0.3).unwrap();
        assert_eq!(s.loops.len(), 2);
        let areas: Vec<f64> = s.loops.iter().map(|l| geom::signed_area_2d(l)).collect();
        assert!(areas.iter().any(|&a| a > 0.0) && areas.iter().any(|&a| a < 0.0));
        assert!(!s.contains(&Point2::origin()));
        assert!(s.contains(&Point2::new(5.0, 0.0)));
    }

    #[test]
    fn torus_vertical_cut_gives_two_disjoint_loops() {
        let t = primitives::torus(5.0, 1.5, 48, 24).mapped(|p| Point3::new(p.x, p.z, p.y));
        let s = slice_at(&t, 0.0).unwrap();
        assert_eq!(s.loops.len(), 2);
        assert!(s.loops.iter().all(|l| geom::signed_area_2d(l) > 0.0));
    }

    #[test]
    fn plane_missing_solid_is_empty_section() {
        let c = primitives::cube(Point3::origin(), 2.0);
        assert_eq!(slice_at(&c, 5.0).unwrap_err().code(), "empty_section");
    }

    #[test]
    fn plane_through_vertex_is_perturbed() {
        let c = primitives::cuboid(Point3::origin(), Point3::new(10.0, 10.0, 10.0));
        let s = slice_at(&c, 0.0).unwrap();
        assert!(s.z > 0.0 && s.z < 1e-5);
        assert_relative_eq!(s.area(), 100.0, epsilon = 1e-6);
    }

    #[test]
    fn partial_volumes() {
        let c = primitives::cuboid(Point3::origin(), Point3::new(10.0, 10.0, 10.0));
        assert_relative_eq!(partial_volume_below(&c, 4.0), 400.0, epsilon = 1e-9);
        assert_relative_eq!(partial_volume_below(&c, 10.0), c.volume(), max_relative = 1e-9);
        assert_eq!(partial_volume_below(&c, 0.0), 0.0);
        let cone = primitives::frustum(4.0, 0.0, 6.0, 64, 0.0);
        let below = partial_volume_below(&cone, 3.0);
        assert!((below / cone.volume() - 7.0 / 8.0).abs() < 0.01);
    }
}
