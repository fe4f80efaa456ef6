//! Incremental isotropic remeshing: split long edges, collapse short ones,
//! flip towards regular valence, then smooth tangentially and project back
//! onto the input surface.

use std::collections::BTreeSet;

use super::{bvh::Bvh, TriMesh};
use crate::{Error, Point3, Result, Vec3};

/// Fraction of edges that must land in `[0.7, 1.3] × target` for success.
pub const IN_BAND_REQUIRED: f64 = 0.9;
const BAND: (f64, f64) = (0.7, 1.3);
/// Boundary vertices turning more than this (cosine) are pinned corners.
const CORNER_COS: f64 = 0.94;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemeshOptions {
    pub target_edge: f64,
    pub iterations: usize,
    /// Fraction of the tangential Laplacian step applied per smoothing pass.
    pub smoothing: f64,
}

impl RemeshOptions {
    pub fn new(target_edge: f64) -> Self {
        RemeshOptions {
            target_edge,
            iterations: 10,
            smoothing: 1.0,
        }
    }
}

pub fn remesh_isotropic(m: &TriMesh, target_edge: f64) -> Result<TriMesh> {
    remesh_with(m, &RemeshOptions::new(target_edge))
}

/// Remeshes `m` towards edge length `opts.target_edge`.
///
/// Open meshes are accepted: straight runs of boundary may be resampled but
/// boundary vertices only ever move along the original boundary, and corners
/// stay put.
pub fn remesh_with(m: &TriMesh, opts: &RemeshOptions) -> Result<TriMesh> {
    let target = opts.target_edge;
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target edge length must be positive, got {target}"
        )));
    }
    if m.is_empty() {
        return Err(Error::InvalidMesh("cannot remesh an empty mesh".into()));
    }
    if m.non_manifold_edge_count() > 0 {
        return Err(Error::InvalidMesh("remeshing needs a manifold mesh".into()));
    }
    let reference = Bvh::new(m);
    let boundary_segments: Vec<(Point3, Point3)> = m
        .boundary_edges()
        .into_iter()
        .map(|(a, b)| (*m.vertex(a), *m.vertex(b)))
        .collect();
    let mut w = Work::new(m);
    let high = 4.0 / 3.0 * target;
    let low = 4.0 / 5.0 * target;
    for _ in 0..opts.iterations {
        for _ in 0..32 {
            if w.split_long_edges(high) == 0 {
                break;
            }
        }
        for _ in 0..32 {
            if w.collapse_short_edges(low, high) == 0 {
                break;
            }
        }
        w.equalize_valences();
        w.smooth(opts.smoothing, &reference, &boundary_segments);
    }
    let out = w.into_mesh()?;
    let lengths = out.edge_lengths();
    let in_band = lengths
        .iter()
        .filter(|&&l| l >= BAND.0 * target && l <= BAND.1 * target)
        .count() as f64
        / lengths.len().max(1) as f64;
    if in_band < IN_BAND_REQUIRED {
        return Err(Error::RemeshDiverged {
            in_band: in_band * 100.0,
            iterations: opts.iterations,
        });
    }
    if m.is_closed() && !out.is_closed() {
        return Err(Error::InvalidMesh("remeshing opened a closed mesh".into()));
    }
    Ok(out)
}

struct Work {
    pos: Vec<Point3>,
    faces: Vec<[u32; 3]>,
    face_alive: Vec<bool>,
    vert_alive: Vec<bool>,
    vf: Vec<Vec<u32>>,
    boundary: Vec<bool>,
    corner: Vec<bool>,
}

fn oriented_on_edge(face: [u32; 3], a: u32, b: u32) -> Option<[u32; 3]> {
    (0..3).find_map(|k| {
        let (x, y) = (face[k], face[(k + 1) % 3]);
        ((x == a && y == b) || (x == b && y == a)).then_some([x, y, face[(k + 2) % 3]])
    })
}

fn raw_normal(p: [&Point3; 3]) -> Vec3 {
    (p[1] - p[0]).cross(&(p[2] - p[0]))
}

impl Work {
    fn new(m: &TriMesh) -> Self {
        let n = m.vertices().len();
        let mut vf = vec![Vec::new(); n];
        for (f, face) in m.faces().iter().enumerate() {
            for &v in face {
                vf[v as usize].push(f as u32);
            }
        }
        let boundary = m.boundary_vertices();
        let mut corner = vec![false; n];
        let edges = m.boundary_edges();
        let mut next = vec![u32::MAX; n];
        let mut prev = vec![u32::MAX; n];
        for &(a, b) in &edges {
            next[a as usize] = b;
            prev[b as usize] = a;
        }
        for v in 0..n {
            if !boundary[v] {
                continue;
            }
            let (p, q) = (prev[v], next[v]);
            corner[v] = if p == u32::MAX || q == u32::MAX {
                true
            } else {
                let d1 = (m.vertices()[v] - m.vertices()[p as usize]).normalize();
                let d2 = (m.vertices()[q as usize] - m.vertices()[v]).normalize();
                d1.dot(&d2) < CORNER_COS
            };
        }
        Work {
            pos: m.vertices().to_vec(),
            faces: m.faces().to_vec(),
            face_alive: vec![true; m.faces().len()],
            vert_alive: vec![true; n],
            vf,
            boundary,
            corner,
        }
    }

    fn edge_faces(&self, a: u32, b: u32) -> Vec<u32> {
        self.vf[a as usize]
            .iter()
            .copied()
            .filter(|&f| self.faces[f as usize].contains(&b))
            .collect()
    }

    fn neighbors(&self, v: u32) -> Vec<u32> {
        let mut out: Vec<u32> = self.vf[v as usize]
            .iter()
            .flat_map(|&f| self.faces[f as usize])
            .filter(|&u| u != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn valence_target(&self, v: u32) -> i64 {
        if self.boundary[v as usize] {
            4
        } else {
            6
        }
    }

    fn len(&self, a: u32, b: u32) -> f64 {
        (self.pos[a as usize] - self.pos[b as usize]).norm()
    }

    /// Unique edges sorted by length (ascending), ties by index.
    fn sorted_edges(&self) -> Vec<(f64, u32, u32)> {
        let mut set = BTreeSet::new();
        for (f, face) in self.faces.iter().enumerate() {
            if !self.face_alive[f] {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        let mut edges: Vec<(f64, u32, u32)> =
            set.into_iter().map(|(a, b)| (self.len(a, b), a, b)).collect();
        edges.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        edges
    }

    fn split_long_edges(&mut self, high: f64) -> usize {
        let mut count = 0;
        let edges = self.sorted_edges();
        for &(l, a, b) in edges.iter().rev() {
            if l <= high {
                break;
            }
            let shared = self.edge_faces(a, b);
            if shared.is_empty() {
                continue;
            }
            let m = self.pos.len() as u32;
            self.pos
                .push(nalgebra::center(&self.pos[a as usize], &self.pos[b as usize]));
            self.vert_alive.push(true);
            self.vf.push(Vec::new());
            self.boundary.push(shared.len() == 1);
            self.corner.push(false);
            for f in shared {
                let [x, y, z] = oriented_on_edge(self.faces[f as usize], a, b).expect("edge face");
                let g = self.faces.len() as u32;
                self.faces[f as usize] = [x, m, z];
                self.faces.push([m, y, z]);
                self.face_alive.push(true);
                self.vf[y as usize].retain(|&h| h != f);
                self.vf[y as usize].push(g);
                self.vf[z as usize].push(g);
                self.vf[m as usize].extend([f, g]);
            }
            count += 1;
        }
        count
    }

    fn collapse_short_edges(&mut self, low: f64, high: f64) -> usize {
        let mut count = 0;
        let edges = self.sorted_edges();
        for &(_, a, b) in &edges {
            if !self.vert_alive[a as usize] || !self.vert_alive[b as usize] {
                continue;
            }
            if self.len(a, b) >= low {
                continue;
            }
            let shared = self.edge_faces(a, b);
            if shared.is_empty() {
                continue;
            }
            let boundary_edge = shared.len() == 1;
            let (ba, bb) = (self.boundary[a as usize], self.boundary[b as usize]);
            let mid = nalgebra::center(&self.pos[a as usize], &self.pos[b as usize]);
            let choices: Vec<(u32, u32, Point3)> = match (ba, bb) {
                (true, true) if boundary_edge => {
                    match (self.corner[a as usize], self.corner[b as usize]) {
                        (false, false) => vec![(a, b, self.pos[b as usize]), (b, a, self.pos[a as usize])],
                        (false, true) => vec![(a, b, self.pos[b as usize])],
                        (true, false) => vec![(b, a, self.pos[a as usize])],
                        (true, true) => vec![],
                    }
                }
                (true, true) => vec![],
                (true, false) => vec![(b, a, self.pos[a as usize])],
                (false, true) => vec![(a, b, self.pos[b as usize])],
                (false, false) => vec![(a, b, mid), (a, b, self.pos[b as usize]), (b, a, self.pos[a as usize])],
            };
            if let Some((from, to, target)) = choices
                .into_iter()
                .find(|(from, to, target)| self.can_collapse(*from, *to, target, &shared, high))
            {
                self.collapse(from, to, target, &shared);
                count += 1;
            }
        }
        count
    }

    fn can_collapse(&self, from: u32, to: u32, target: &Point3, shared: &[u32], high: f64) -> bool {
        let opposite: BTreeSet<u32> = shared
            .iter()
            .flat_map(|&f| self.faces[f as usize])
            .filter(|&v| v != from && v != to)
            .collect();
        let nf = self.neighbors(from);
        let nt = self.neighbors(to);
        let common: BTreeSet<u32> = nf.iter().copied().filter(|v| nt.contains(v)).collect();
        if common != opposite {
            return false;
        }
        // A closed mesh must keep at least a tetrahedron's worth of vertices.
        if nf.len() <= 3 && nt.len() <= 3 {
            return false;
        }
        for &n in nf.iter().chain(nt.iter()) {
            if n != from && n != to && (target - self.pos[n as usize]).norm() >= high {
                return false;
            }
        }
        let mut existing: BTreeSet<[u32; 3]> = BTreeSet::new();
        for &f in &self.vf[to as usize] {
            let mut s = self.faces[f as usize];
            s.sort_unstable();
            existing.insert(s);
        }
        for &f in self.vf[from as usize].iter().chain(self.vf[to as usize].iter()) {
            if shared.contains(&f) {
                continue;
            }
            let face = self.faces[f as usize];
            let before = raw_normal(face.map(|v| &self.pos[v as usize]));
            let moved: [u32; 3] = face.map(|v| if v == from { to } else { v });
            let pts = moved.map(|v| if v == to { *target } else { self.pos[v as usize] });
            let after = raw_normal([&pts[0], &pts[1], &pts[2]]);
            let (lb, la) = (before.norm(), after.norm());
            if la <= 1e-12 || lb <= 1e-12 || before.dot(&after) < 0.2 * lb * la {
                return false;
            }
            if face.contains(&from) {
                let mut s = moved;
                s.sort_unstable();
                if existing.contains(&s) {
                    return false;
                }
            }
        }
        true
    }

    fn collapse(&mut self, from: u32, to: u32, target: Point3, shared: &[u32]) {
        for &f in shared {
            self.face_alive[f as usize] = false;
            for v in self.faces[f as usize] {
                self.vf[v as usize].retain(|&h| h != f);
            }
        }
        let moved = std::mem::take(&mut self.vf[from as usize]);
        for f in moved {
            for v in self.faces[f as usize].iter_mut() {
                if *v == from {
                    *v = to;
                }
            }
            self.vf[to as usize].push(f);
        }
        self.vert_alive[from as usize] = false;
        self.pos[to as usize] = target;
    }

    fn equalize_valences(&mut self) {
        let edges = self.sorted_edges();
        for &(_, a, b) in &edges {
            let shared = self.edge_faces(a, b);
            if shared.len() != 2 {
                continue;
            }
            let Some([a, b, c]) = oriented_on_edge(self.faces[shared[0] as usize], a, b) else {
                continue;
            };
            let (f1, f2) = (shared[0], shared[1]);
            let Some([b2, a2, d]) = oriented_on_edge(self.faces[f2 as usize], a, b) else {
                continue;
            };
            if b2 != b || a2 != a || c == d || self.neighbors(c).contains(&d) {
                continue;
            }
            let val = |v: u32| self.neighbors(v).len() as i64;
            let (va, vb, vc, vd) = (val(a), val(b), val(c), val(d));
            if va <= 3 || vb <= 3 {
                continue;
            }
            let dev = |v: u32, n: i64| (n - self.valence_target(v)).abs();
            let before = dev(a, va) + dev(b, vb) + dev(c, vc) + dev(d, vd);
            let after = dev(a, va - 1) + dev(b, vb - 1) + dev(c, vc + 1) + dev(d, vd + 1);
            if after >= before {
                continue;
            }
            let p = |v: u32| &self.pos[v as usize];
            let old = raw_normal([p(a), p(b), p(c)]) + raw_normal([p(b), p(a), p(d)]);
            let n1 = raw_normal([p(a), p(d), p(c)]);
            let n2 = raw_normal([p(d), p(b), p(c)]);
            let ok = |n: &Vec3| n.norm() > 1e-12 && n.dot(&old) > 0.2 * n.norm() * old.norm();
            if !ok(&n1) || !ok(&n2) {
                continue;
            }
            self.faces[f1 as usize] = [a, d, c];
            self.faces[f2 as usize] = [d, b, c];
            self.vf[b as usize].retain(|&h| h != f1);
            self.vf[a as usize].retain(|&h| h != f2);
            self.vf[d as usize].push(f1);
            self.vf[c as usize].push(f2);
        }
    }

    fn smooth(&mut self, lambda: f64, reference: &Bvh, boundary: &[(Point3, Point3)]) {
        let n = self.pos.len();
        let mut normals = vec![Vec3::zeros(); n];
        for (f, face) in self.faces.iter().enumerate() {
            if self.face_alive[f] {
                let nn = raw_normal(face.map(|v| &self.pos[v as usize]));
                for &v in face {
                    normals[v as usize] += nn;
                }
            }
        }
        let mut boundary_next: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (f, face) in self.faces.iter().enumerate() {
            if !self.face_alive[f] {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                if self.boundary[a as usize]
                    && self.boundary[b as usize]
                    && self.edge_faces(a, b).len() == 1
                {
                    boundary_next[a as usize].push(b);
                    boundary_next[b as usize].push(a);
                }
            }
        }
        let updates: Vec<(usize, Point3)> = (0..n)
            .filter(|&v| self.vert_alive[v] && !self.vf[v].is_empty() && !self.corner[v])
            .filter_map(|v| {
                let p = self.pos[v];
                if self.boundary[v] {
                    let nb = &boundary_next[v];
                    if nb.len() != 2 {
                        return None;
                    }
                    let mid = nalgebra::center(&self.pos[nb[0] as usize], &self.pos[nb[1] as usize]);
                    let q = p + (mid - p) * lambda;
                    return Some((v, project_to_segments(&q, boundary)));
                }
                let nbrs = self.neighbors(v as u32);
                let c = nbrs
                    .iter()
                    .fold(Vec3::zeros(), |acc, &u| acc + self.pos[u as usize].coords)
                    / nbrs.len() as f64;
                let nrm = normals[v].try_normalize(1e-300).unwrap_or_else(Vec3::zeros);
                let mut d = c - p.coords;
                d -= nrm * nrm.dot(&d);
                let q = p + d * lambda;
                let proj = reference.closest_point(&q).map(|h| h.point).unwrap_or(q);
                Some((v, proj))
            })
            .collect();
        for (v, q) in updates {
            let old = self.pos[v];
            self.pos[v] = q;
            // Undo moves that would fold a neighbouring face.
            let folds = self.vf[v].iter().any(|&f| {
                let face = self.faces[f as usize];
                let before = raw_normal(face.map(|u| if u as usize == v { &old } else { &self.pos[u as usize] }));
                let after = raw_normal(face.map(|u| &self.pos[u as usize]));
                after.dot(&before) <= 0.0 || after.norm() <= 1e-12
            });
            if folds {
                self.pos[v] = old;
            }
        }
    }

    fn into_mesh(self) -> Result<TriMesh> {
        let mut remap = vec![u32::MAX; self.pos.len()];
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            if !self.face_alive[f] {
                continue;
            }
            faces.push(face.map(|v| {
                if remap[v as usize] == u32::MAX {
                    remap[v as usize] = vertices.len() as u32;
                    vertices.push(self.pos[v as usize]);
                }
                remap[v as usize]
            }));
        }
        TriMesh::new(vertices, faces)
    }
}

fn project_to_segments(q: &Point3, segments: &[(Point3, Point3)]) -> Point3 {
    let mut best = *q;
    let mut best_d = f64::INFINITY;
    for (a, b) in segments {
        let ab = b - a;
        let t = ((q - a).dot(&ab) / ab.norm_squared().max(1e-300)).clamp(0.0, 1.0);
        let p = a + ab * t;
        let d = (p - q).norm_squared();
        if d < best_d {
            best_d = d;
            best = p;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    fn in_band(m: &TriMesh, target: f64) -> f64 {
        let l = m.edge_lengths();
        l.iter().filter(|&&x| x >= 0.7 * target && x <= 1.3 * target).count() as f64 / l.len() as f64
    }

    #[test]
    fn sphere_remesh_keeps_area_and_closure() {
        let s = primitives::icosphere(30.0, 24);
        let r = remesh_isotropic(&s, 5.0).unwrap();
        assert!(r.is_closed());
        assert!(in_band(&r, 5.0) >= 0.9);
        assert!((r.surface_area() / s.surface_area() - 1.0).abs() < 0.02);
        let bvh = Bvh::new(&s);
        for p in r.vertices() {
            assert!(bvh.closest_point(p).unwrap().distance_squared.sqrt() <= 1.0);
        }
    }

    #[test]
    fn coarse_input_is_refined() {
        let c = primitives::cube(Point3::origin(), 10.0);
        let r = remesh_isotropic(&c, 2.0).unwrap();
        assert!(r.is_closed());
        assert!(r.vertices().len() > 50);
    }

    #[test]
    fn open_sheet_keeps_corners_and_boundary() {
        let s = primitives::sheet(40.0, 40.0, 40, 40);
        let r = remesh_isotropic(&s, 5.0).unwrap();
        assert!(!r.is_closed());
        let b = r.bounds();
        assert!((b.min.x).abs() < 1e-9 && (b.max.x - 40.0).abs() < 1e-9);
        assert!(r.vertices().iter().all(|p| p.z.abs() < 1e-9));
        assert!((r.surface_area() - 1600.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_positive_target() {
        let s = primitives::icosphere(1.0, 2);
        assert_eq!(remesh_isotropic(&s, 0.0).unwrap_err().code(), "invalid_argument");
    }
}
