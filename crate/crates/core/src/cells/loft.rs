use std::f64::consts::{PI, TAU};

use super::{Cell, CellStatus};
use crate::constraints::{CellSpec, Shape};
use crate::mesh::bvh::Bvh;
use crate::mesh::{geom, TriMesh};
use crate::shell::ShellModel;
use crate::{Point3, Vec3};

/// Inner/outer ratios this close to 1 are treated as parallel projection.
pub const PARALLEL_TOLERANCE: f64 = 0.02;
const RATIO_RANGE: (f64, f64) = (0.25, 4.0);

/// Circumradius of the cross-section polygon.
///
/// Circles use the radius whose 24-gon has the same area as the circle.
pub fn circumradius(shape: Shape, cross_section: f64) -> f64 {
    match shape {
        Shape::Circle => {
            let n = shape.sides() as f64;
            cross_section / 2.0 * (TAU / (n * (TAU / n).sin())).sqrt()
        }
        Shape::Square => cross_section / 2f64.sqrt(),
        Shape::Hexagon => cross_section / 2.0,
    }
}

/// Polygon corners in the plane `(u, v)` around the origin.
///
/// Corners sit at angles `(2k + 1)π / n`, so squares come out axis aligned and
/// hexagons have a flat edge facing `+u`.
pub fn cross_section_polygon(shape: Shape, cross_section: f64) -> Vec<(f64, f64)> {
    let n = shape.sides();
    let r = circumradius(shape, cross_section);
    (0..n)
        .map(|k| {
            let a = (2 * k + 1) as f64 * PI / n as f64;
            (r * a.cos(), r * a.sin())
        })
        .collect()
}

/// Lofts cells against one shell. Acceleration structures are built once.
pub struct Lofter<'a> {
    shell: &'a ShellModel,
    shape: Shape,
    outer: Bvh,
    floor: Bvh,
    shared_connectivity: bool,
}

impl<'a> Lofter<'a> {
    pub fn new(shell: &'a ShellModel, spec: &CellSpec) -> Self {
        Lofter {
            shell,
            shape: spec.shape,
            outer: Bvh::new(&shell.m_prime),
            floor: Bvh::new(&shell.cell_floor),
            shared_connectivity: shell.m_prime.faces() == shell.cell_floor.faces(),
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Truncated pyramid (or cone) from the outer face of the body down to
    /// its inner face. Returns a `ProjectionMiss` cell when the surfaces
    /// cannot be found along the normal.
    pub fn loft(&self, id: usize, center: Point3, normal: Vec3, cross_section: f64) -> Cell {
        let n = normal.try_normalize(1e-12).unwrap_or_else(Vec3::z);
        match self.loft_solid(&center, &n, cross_section) {
            Some(solid) => {
                let volume = solid.volume();
                Cell {
                    id,
                    center,
                    normal: n,
                    cross_section,
                    solid,
                    volume,
                    status: CellStatus::Ok,
                }
            }
            None => Cell {
                id,
                center,
                normal: n,
                cross_section,
                solid: TriMesh::empty(),
                volume: 0.0,
                status: CellStatus::ProjectionMiss,
            },
        }
    }

    fn loft_solid(&self, center: &Point3, n: &Vec3, cross_section: f64) -> Option<TriMesh> {
        let h = self.shell.cell_depth;
        let s = self.shell.screen_thickness;
        let (u, v) = geom::plane_frame(n);
        let polygon = cross_section_polygon(self.shape, cross_section);
        let r = circumradius(self.shape, cross_section);

        // Depth of the cell floor below the centre.
        let depth = self
            .floor
            .first_hit(&(center + n * 1e-6), &(-n), 0.0, 2.0 * h)
            .map(|(t, _)| t - 1e-6)?;
        if depth < 0.25 * h {
            return None;
        }

        // Raise the opening where the outer surface bulges above the tangent plane.
        let mut lift = 0.0f64;
        let corners: Vec<Point3> = polygon.iter().map(|(a, b)| center + u * *a + v * *b).collect();
        for c in &corners {
            let from = c - n * h;
            let hit = self
                .outer
                .ray_hits(&from, n, 0.0, 2.0 * h)
                .into_iter()
                .min_by(|x, y| (x.0 - h).abs().total_cmp(&(y.0 - h).abs()))?;
            lift = lift.max(hit.0 - h);
        }
        if lift > s {
            return None;
        }

        let ratio = if self.shared_connectivity {
            self.perspective_ratio(&corners, &(center - n * depth), n, r)?
        } else {
            1.0
        };
        let top = center + n * lift;
        let bottom = center - n * depth;
        let mut vertices = Vec::with_capacity(2 * polygon.len());
        vertices.extend(polygon.iter().map(|(a, b)| top + u * *a + v * *b));
        vertices.extend(polygon.iter().map(|(a, b)| bottom + (u * *a + v * *b) * ratio));
        let k = polygon.len() as u32;
        let mut faces = Vec::with_capacity(4 * k as usize);
        for i in 1..k - 1 {
            faces.push([0, i, i + 1]);
            faces.push([k, k + i + 1, k + i]);
        }
        for i in 0..k {
            let j = (i + 1) % k;
            faces.push([j, i, k + i]);
            faces.push([j, k + i, k + j]);
        }
        let solid = TriMesh::new(vertices, faces).ok()?;
        solid.is_closed().then_some(solid)
    }

    /// Mean ratio of inner to outer corner distances from the cell axis,
    /// following each corner through the shared parametrisation of the two
    /// offset surfaces.
    fn perspective_ratio(&self, corners: &[Point3], axis: &Point3, n: &Vec3, r: f64) -> Option<f64> {
        let h = self.shell.cell_depth;
        let mut sum = 0.0;
        for c in corners {
            let hit = self.outer.closest_point(c)?;
            if hit.distance_squared.sqrt() > h {
                return None;
            }
            let f = self.shell.cell_floor.faces()[hit.face];
            let p = f
                .iter()
                .zip(hit.barycentric)
                .fold(Vec3::zeros(), |acc, (&i, w)| acc + self.shell.cell_floor.vertex(i).coords * w);
            let d = Point3::from(p) - axis;
            sum += (d - n * n.dot(&d)).norm() / r;
        }
        let ratio = sum / corners.len() as f64;
        if (ratio - 1.0).abs() <= PARALLEL_TOLERANCE {
            Some(1.0)
        } else {
            Some(ratio.clamp(RATIO_RANGE.0, RATIO_RANGE.1))
        }
    }
}

/// One-off convenience around [`Lofter`].
pub fn loft_cell(id: usize, center: Point3, normal: Vec3, spec: &CellSpec, shell: &ShellModel) -> Cell {
    Lofter::new(shell, spec).loft(id, center, normal, spec.cross_section)
}
