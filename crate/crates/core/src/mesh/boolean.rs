//! Solid booleans on closed meshes.
//!
//! When the two surfaces never touch, the result is composed from whole
//! components by containment, which is exact and cheap. Otherwise a BSP-tree
//! CSG runs on the face polygons and the result is stitched back into a
//! watertight triangle mesh.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{bvh::Bvh, weld_points, Aabb, TriMesh};
use crate::{Error, Point3, Result, Vec3};

const PLANE_EPS: f64 = 1e-5;
const TOUCH_EPS: f64 = 1e-9;
const WELD_EPS: f64 = 1e-5;
const MAX_POLYGONS: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BooleanOp {
    Union,
    Difference,
    Intersection,
}

/// `a op b`. Both inputs must be closed; the output is closed or empty.
pub fn boolean(a: &TriMesh, b: &TriMesh, op: BooleanOp) -> Result<TriMesh> {
    for (name, m) in [("left", a), ("right", b)] {
        if !m.is_closed() {
            return Err(Error::BooleanFailure(format!("{name} operand is not closed")));
        }
    }
    let bvh_a = Bvh::new(a);
    if !bvh_a.touches_mesh(b, TOUCH_EPS) {
        return Ok(compose_disjoint(a, &bvh_a, b, op));
    }
    let out = bsp_boolean(a, b, op)?;
    if !out.is_empty() && !out.is_watertight() {
        return Err(Error::BooleanFailure(format!(
            "{op:?} result has {} open edges",
            out.boundary_edge_count()
        )));
    }
    Ok(out)
}

/// Result for surfaces that do not meet: each component is kept, dropped or
/// flipped depending on whether it lies inside the other operand.
fn compose_disjoint(a: &TriMesh, bvh_a: &Bvh, b: &TriMesh, op: BooleanOp) -> TriMesh {
    let bvh_b = Bvh::new(b);
    let comps_a = a.components();
    let comps_b = b.components();
    let mut parts: Vec<TriMesh> = Vec::new();
    let mut kept_a = 0;
    for ca in comps_a.iter().cloned() {
        let inside_b = bvh_b.contains(&ca.vertices()[0]);
        let keep = match op {
            BooleanOp::Union | BooleanOp::Difference => !inside_b,
            BooleanOp::Intersection => inside_b,
        };
        if keep {
            parts.push(ca);
            kept_a += 1;
        }
    }
    let before_b = parts.len();
    for cb in comps_b.iter().cloned() {
        let inside_a = bvh_a.contains(&cb.vertices()[0]);
        match op {
            BooleanOp::Union if !inside_a => parts.push(cb),
            BooleanOp::Intersection if inside_a => parts.push(cb),
            BooleanOp::Difference if inside_a => parts.push(cb.flipped()),
            _ => {}
        }
    }
    // Hand back the operands untouched when the result is exactly one of them.
    if parts.len() == before_b && kept_a == comps_a.len() {
        return a.clone();
    }
    if kept_a == 0 && parts.len() == comps_b.len() && op != BooleanOp::Difference {
        return b.clone();
    }
    TriMesh::merge_all(parts.iter())
}

#[derive(Clone, Copy, Debug)]
struct Plane {
    normal: Vec3,
    w: f64,
}

impl Plane {
    fn from_points(a: &Point3, b: &Point3, c: &Point3) -> Option<Plane> {
        let n = (b - a).cross(&(c - a)).try_normalize(1e-300)?;
        Some(Plane {
            normal: n,
            w: n.dot(&a.coords),
        })
    }

    fn flip(&mut self) {
        self.normal = -self.normal;
        self.w = -self.w;
    }
}

#[derive(Clone, Debug)]
struct Polygon {
    vertices: Vec<Point3>,
    plane: Plane,
}

impl Polygon {
    fn flip(&mut self) {
        self.vertices.reverse();
        self.plane.flip();
    }
}

const COPLANAR: u8 = 0;
const FRONT: u8 = 1;
const BACK: u8 = 2;
const SPANNING: u8 = 3;

struct Split {
    coplanar_front: Vec<Polygon>,
    coplanar_back: Vec<Polygon>,
    front: Vec<Polygon>,
    back: Vec<Polygon>,
}

impl Split {
    fn new() -> Self {
        Split {
            coplanar_front: Vec::new(),
            coplanar_back: Vec::new(),
            front: Vec::new(),
            back: Vec::new(),
        }
    }
}

fn split_polygon(plane: &Plane, poly: Polygon, out: &mut Split) {
    let mut kind = 0u8;
    let types: Vec<u8> = poly
        .vertices
        .iter()
        .map(|v| {
            let t = plane.normal.dot(&v.coords) - plane.w;
            let ty = if t < -PLANE_EPS {
                BACK
            } else if t > PLANE_EPS {
                FRONT
            } else {
                COPLANAR
            };
            kind |= ty;
            ty
        })
        .collect();
    match kind {
        COPLANAR => {
            if plane.normal.dot(&poly.plane.normal) > 0.0 {
                out.coplanar_front.push(poly);
            } else {
                out.coplanar_back.push(poly);
            }
        }
        FRONT => out.front.push(poly),
        BACK => out.back.push(poly),
        _ => {
            let n = poly.vertices.len();
            let mut f = Vec::with_capacity(n + 1);
            let mut b = Vec::with_capacity(n + 1);
            for i in 0..n {
                let j = (i + 1) % n;
                let (ti, tj) = (types[i], types[j]);
                let (vi, vj) = (poly.vertices[i], poly.vertices[j]);
                if ti != BACK {
                    f.push(vi);
                }
                if ti != FRONT {
                    b.push(vi);
                }
                if (ti | tj) == SPANNING {
                    let t = (plane.w - plane.normal.dot(&vi.coords)) / plane.normal.dot(&(vj - vi));
                    let v = vi + (vj - vi) * t;
                    f.push(v);
                    b.push(v);
                }
            }
            if f.len() >= 3 {
                out.front.push(Polygon {
                    vertices: f,
                    plane: poly.plane,
                });
            }
            if b.len() >= 3 {
                out.back.push(Polygon {
                    vertices: b,
                    plane: poly.plane,
                });
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Node {
    plane: Option<Plane>,
    front: Option<usize>,
    back: Option<usize>,
    polygons: Vec<Polygon>,
}

/// Arena-backed BSP tree; every traversal uses an explicit stack.
#[derive(Clone, Debug)]
struct Bsp {
    nodes: Vec<Node>,
}

impl Bsp {
    fn new(polygons: Vec<Polygon>) -> Result<Bsp> {
        let mut bsp = Bsp {
            nodes: vec![Node::default()],
        };
        bsp.build(polygons)?;
        Ok(bsp)
    }

    fn polygon_count(&self) -> usize {
        self.nodes.iter().map(|n| n.polygons.len()).sum()
    }

    fn build(&mut self, polygons: Vec<Polygon>) -> Result<()> {
        let mut stack = vec![(0usize, polygons)];
        while let Some((idx, polys)) = stack.pop() {
            if polys.is_empty() {
                continue;
            }
            if self.nodes[idx].plane.is_none() {
                self.nodes[idx].plane = Some(polys[0].plane);
            }
            let plane = self.nodes[idx].plane.expect("set above");
            let mut split = Split::new();
            for p in polys {
                split_polygon(&plane, p, &mut split);
            }
            let node = &mut self.nodes[idx];
            node.polygons.append(&mut split.coplanar_front);
            node.polygons.append(&mut split.coplanar_back);
            if !split.front.is_empty() {
                let child = self.child(idx, true);
                stack.push((child, split.front));
            }
            if !split.back.is_empty() {
                let child = self.child(idx, false);
                stack.push((child, split.back));
            }
            if self.nodes.len() > MAX_POLYGONS {
                return Err(Error::BooleanFailure("BSP tree grew without bound".into()));
            }
        }
        Ok(())
    }

    fn child(&mut self, idx: usize, front: bool) -> usize {
        let existing = if front {
            self.nodes[idx].front
        } else {
            self.nodes[idx].back
        };
        if let Some(c) = existing {
            return c;
        }
        self.nodes.push(Node::default());
        let c = self.nodes.len() - 1;
        if front {
            self.nodes[idx].front = Some(c);
        } else {
            self.nodes[idx].back = Some(c);
        }
        c
    }

    fn invert(&mut self) {
        for node in &mut self.nodes {
            for p in &mut node.polygons {
                p.flip();
            }
            if let Some(pl) = node.plane.as_mut() {
                pl.flip();
            }
            std::mem::swap(&mut node.front, &mut node.back);
        }
    }

    /// Removes the parts of `polygons` that lie inside this tree's solid.
    fn clip_polygons(&self, polygons: Vec<Polygon>) -> Vec<Polygon> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, polygons)];
        while let Some((idx, polys)) = stack.pop() {
            let node = &self.nodes[idx];
            let Some(plane) = node.plane else {
                out.extend(polys);
                continue;
            };
            let mut split = Split::new();
            for p in polys {
                split_polygon(&plane, p, &mut split);
            }
            let mut front = split.front;
            front.append(&mut split.coplanar_front);
            let mut back = split.back;
            back.append(&mut split.coplanar_back);
            match node.front {
                Some(c) => stack.push((c, front)),
                None => out.extend(front),
            }
            if let Some(c) = node.back {
                stack.push((c, back));
            }
        }
        out
    }

    fn clip_to(&mut self, other: &Bsp) {
        for i in 0..self.nodes.len() {
            let polys = std::mem::take(&mut self.nodes[i].polygons);
            self.nodes[i].polygons = other.clip_polygons(polys);
        }
    }

    fn all_polygons(&self) -> Vec<Polygon> {
        self.nodes.iter().flat_map(|n| n.polygons.iter().cloned()).collect()
    }
}

fn polygons_of(m: &TriMesh) -> Vec<Polygon> {
    (0..m.faces().len())
        .filter_map(|f| {
            let [a, b, c] = m.triangle(f);
            Plane::from_points(&a, &b, &c).map(|plane| Polygon {
                vertices: vec![a, b, c],
                plane,
            })
        })
        .collect()
}

fn bsp_boolean(a: &TriMesh, b: &TriMesh, op: BooleanOp) -> Result<TriMesh> {
    let mut ta = Bsp::new(polygons_of(a))?;
    let mut tb = Bsp::new(polygons_of(b))?;
    match op {
        BooleanOp::Union => {
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            tb.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.build(tb.all_polygons())?;
        }
        BooleanOp::Difference => {
            ta.invert();
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            tb.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.build(tb.all_polygons())?;
            ta.invert();
        }
        BooleanOp::Intersection => {
            ta.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            ta.build(tb.all_polygons())?;
            ta.invert();
        }
    }
    if ta.polygon_count() > MAX_POLYGONS {
        return Err(Error::BooleanFailure("too many polygons".into()));
    }
    stitch(ta.all_polygons())
}

/// Turns the convex output polygons into a welded triangle mesh, inserting
/// vertices that other polygons left on shared edges (T-junctions).
fn stitch(polygons: Vec<Polygon>) -> Result<TriMesh> {
    if polygons.is_empty() {
        return Ok(TriMesh::empty());
    }
    let flat: Vec<Point3> = polygons.iter().flat_map(|p| p.vertices.iter().copied()).collect();
    let (points, remap) = weld_points(&flat, WELD_EPS);
    let mut loops: Vec<Vec<u32>> = Vec::with_capacity(polygons.len());
    let mut k = 0;
    for p in &polygons {
        let mut l: Vec<u32> = remap[k..k + p.vertices.len()].to_vec();
        k += p.vertices.len();
        l.dedup();
        while l.len() > 1 && l.first() == l.last() {
            l.pop();
        }
        if l.len() >= 3 {
            loops.push(l);
        }
    }

    let grid = PointGrid::new(&points);
    let mut vertices = points.clone();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for l in &loops {
        let mut full: Vec<u32> = Vec::with_capacity(l.len());
        for i in 0..l.len() {
            let (a, b) = (l[i], l[(i + 1) % l.len()]);
            full.push(a);
            let pa = points[a as usize];
            let pb = points[b as usize];
            let ab = pb - pa;
            let len2 = ab.norm_squared();
            let mut on_edge: Vec<(f64, u32)> = grid
                .near_segment(&pa, &pb, WELD_EPS)
                .into_iter()
                .filter(|&v| v != a && v != b)
                .filter_map(|v| {
                    let q = points[v as usize];
                    let t = (q - pa).dot(&ab) / len2;
                    if t <= 0.0 || t >= 1.0 {
                        return None;
                    }
                    let d2 = (pa + ab * t - q).norm_squared();
                    (d2 < WELD_EPS * WELD_EPS).then_some((t, v))
                })
                .collect();
            on_edge.sort_by(|x, y| x.0.total_cmp(&y.0));
            full.extend(on_edge.into_iter().map(|(_, v)| v));
        }
        if full.len() == 3 {
            faces.push([full[0], full[1], full[2]]);
        } else if full.len() == l.len() {
            for i in 1..full.len() - 1 {
                faces.push([full[0], full[i], full[i + 1]]);
            }
        } else {
            // Collinear runs: fan from the centroid so no sliver is degenerate.
            let c = full
                .iter()
                .fold(Vec3::zeros(), |acc, &v| acc + vertices[v as usize].coords)
                / full.len() as f64;
            vertices.push(Point3::from(c));
            let ci = (vertices.len() - 1) as u32;
            for i in 0..full.len() {
                faces.push([ci, full[i], full[(i + 1) % full.len()]]);
            }
        }
    }
    let mesh = TriMesh::new(vertices, faces)?;
    let used: Vec<usize> = (0..mesh.faces().len()).collect();
    Ok(mesh.subset(&used))
}

struct PointGrid {
    cell: f64,
    map: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl PointGrid {
    fn new(points: &[Point3]) -> Self {
        let b = Aabb::from_points(points.iter());
        let diag = b.extent().norm().max(1e-6);
        let cell = diag / (points.len() as f64).cbrt().max(1.0);
        let mut map: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            map.entry(Self::key(p, cell)).or_default().push(i as u32);
        }
        PointGrid { cell, map }
    }

    fn key(p: &Point3, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    fn near_segment(&self, a: &Point3, b: &Point3, margin: f64) -> Vec<u32> {
        let bb = Aabb::from_points([*a, *b].iter()).expanded(margin);
        let lo = Self::key(&bb.min, self.cell);
        let hi = Self::key(&bb.max, self.cell);
        let mut out = Vec::new();
        for x in lo.0..=hi.0 {
            for y in lo.1..=hi.1 {
                for z in lo.2..=hi.2 {
                    if let Some(list) = self.map.get(&(x, y, z)) {
                        out.extend(list.iter().copied());
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use approx::assert_relative_eq;

    fn cube(min: [f64; 3], side: f64) -> TriMesh {
        let min = Point3::from(min);
        primitives::cuboid(min, min + Vec3::repeat(side))
    }

    #[test]
    fn far_cube_leaves_input_unchanged() {
        let a = cube([0.0; 3], 10.0);
        let b = cube([50.0, 0.0, 0.0], 10.0);
        let out = boolean(&a, &b, BooleanOp::Difference).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn nested_cube_becomes_cavity() {
        let a = cube([0.0; 3], 10.0);
        let b = cube([3.0; 3], 4.0);
        let out = boolean(&a, &b, BooleanOp::Difference).unwrap();
        assert!(out.is_closed());
        assert_relative_eq!(out.volume(), 936.0, max_relative = 0.005);
        assert_eq!(out.components().len(), 2);
    }

    #[test]
    fn overlapping_cubes() {
        let a = cube([0.0; 3], 10.0);
        let b = cube([5.0, 5.0, 5.0], 10.0);
        let diff = boolean(&a, &b, BooleanOp::Difference).unwrap();
        assert!(diff.is_closed(), "open edges: {}", diff.boundary_edge_count());
        assert_relative_eq!(diff.volume(), 1000.0 - 125.0, max_relative = 1e-6);
        let inter = boolean(&a, &b, BooleanOp::Intersection).unwrap();
        assert!(inter.is_closed());
        assert_relative_eq!(inter.volume(), 125.0, max_relative = 1e-6);
        let uni = boolean(&a, &b, BooleanOp::Union).unwrap();
        assert!(uni.is_closed());
        assert_relative_eq!(uni.volume(), 2000.0 - 125.0, max_relative = 1e-6);
    }

    #[test]
    fn disjoint_intersection_is_empty() {
        let a = cube([0.0; 3], 1.0);
        let b = cube([5.0; 3], 1.0);
        assert!(boolean(&a, &b, BooleanOp::Intersection).unwrap().is_empty());
    }

    #[test]
    fn open_operand_is_rejected() {
        let a = cube([0.0; 3], 1.0);
        let s = primitives::sheet(1.0, 1.0, 1, 1);
        assert_eq!(
            boolean(&a, &s, BooleanOp::Union).unwrap_err().code(),
            "boolean_failure"
        );
    }
}
