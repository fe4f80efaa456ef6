//! Bounding-volume hierarchy over the faces of a [`TriMesh`].

use super::{geom, Aabb, TriMesh};
use crate::{Point3, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Debug)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClosestPoint {
    pub point: Point3,
    pub face: usize,
    pub barycentric: [f64; 3],
    pub distance_squared: f64,
}

/// Static AABB tree. Face ids returned by queries index the source mesh.
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
    triangles: Vec<[Point3; 3]>,
    faces: Vec<[u32; 3]>,
}

impl Bvh {
    pub fn new(mesh: &TriMesh) -> Self {
        let triangles: Vec<[Point3; 3]> = (0..mesh.faces().len()).map(|f| mesh.triangle(f)).collect();
        let boxes: Vec<Aabb> = triangles.iter().map(|t| Aabb::from_points(t.iter())).collect();
        let centroids: Vec<Point3> = boxes.iter().map(|b| b.center()).collect();
        let mut order: Vec<usize> = (0..triangles.len()).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        if !triangles.is_empty() {
            build(&mut nodes, &mut order, &boxes, &centroids, 0, triangles.len());
        }
        Bvh {
            nodes,
            order,
            triangles,
            faces: mesh.faces().to_vec(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map(|n| *n.bounds()).unwrap_or_else(Aabb::empty)
    }

    pub fn triangle(&self, face: usize) -> &[Point3; 3] {
        &self.triangles[face]
    }

    pub fn closest_point(&self, p: &Point3) -> Option<ClosestPoint> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<ClosestPoint> = None;
        let mut best_d = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if node.bounds().distance_squared(p) > best_d {
                continue;
            }
            match node {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.order[*start..*end] {
                        let [a, b, c] = &self.triangles[f];
                        let (q, bary) = geom::closest_point_on_triangle(p, a, b, c);
                        let d = (q - p).norm_squared();
                        if d < best_d {
                            best_d = d;
                            best = Some(ClosestPoint {
                                point: q,
                                face: f,
                                barycentric: bary,
                                distance_squared: d,
                            });
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().distance_squared(p);
                    let dr = self.nodes[*right].bounds().distance_squared(p);
                    if dl < dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best
    }

    /// All ray hits with parameter in `[t_min, t_max]`, sorted by parameter.
    pub fn ray_hits(&self, origin: &Point3, dir: &Vec3, t_min: f64, t_max: f64) -> Vec<(f64, usize)> {
        let mut hits = Vec::new();
        if self.nodes.is_empty() {
            return hits;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if !ray_box(origin, &inv, node.bounds(), t_min, t_max) {
                continue;
            }
            match node {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.order[*start..*end] {
                        let [a, b, c] = &self.triangles[f];
                        if let Some(t) = geom::ray_triangle(origin, dir, a, b, c) {
                            if t >= t_min && t <= t_max {
                                hits.push((t, f));
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        hits
    }

    pub fn first_hit(&self, origin: &Point3, dir: &Vec3, t_min: f64, t_max: f64) -> Option<(f64, usize)> {
        self.ray_hits(origin, dir, t_min, t_max).into_iter().next()
    }

    /// Faces whose bounds overlap `query`.
    pub fn faces_in_box(&self, query: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if !node.bounds().overlaps(query) {
                continue;
            }
            match node {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.order[*start..*end] {
                        if Aabb::from_points(self.triangles[f].iter()).overlaps(query) {
                            out.push(f);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
        out
    }

    /// Whether any face touches the triangle `tri`.
    pub fn touches_triangle(&self, tri: &[Point3; 3], eps: f64) -> bool {
        let query = Aabb::from_points(tri.iter()).expanded(eps);
        self.faces_in_box(&query)
            .into_iter()
            .any(|f| geom::triangles_intersect(&self.triangles[f], tri, eps))
    }

    /// Whether any face of `other` touches any face of this tree.
    pub fn touches_mesh(&self, other: &TriMesh, eps: f64) -> bool {
        if !self.bounds().expanded(eps).overlaps(&other.bounds()) {
            return false;
        }
        (0..other.faces().len()).any(|f| self.touches_triangle(&other.triangle(f), eps))
    }

    /// Pairs of faces that intersect without sharing a vertex.
    pub fn self_intersections(&self, eps: f64) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for f in 0..self.triangles.len() {
            let tri = &self.triangles[f];
            let query = Aabb::from_points(tri.iter()).expanded(eps);
            for g in self.faces_in_box(&query) {
                if g <= f {
                    continue;
                }
                let shares = self.faces[f].iter().any(|v| self.faces[g].contains(v));
                if !shares && geom::triangles_intersect(tri, &self.triangles[g], eps) {
                    pairs.push((f, g));
                }
            }
        }
        pairs
    }

    /// Point-in-solid by ray parity, majority over three skewed directions.
    pub fn contains(&self, p: &Point3) -> bool {
        const DIRS: [[f64; 3]; 3] = [
            [0.5773, 0.5774, 0.5775],
            [-0.6124, 0.3536, 0.7071],
            [0.2673, -0.8018, 0.5345],
        ];
        let votes = DIRS
            .iter()
            .filter(|d| {
                let dir = Vec3::from(**d).normalize();
                let hits = self.ray_hits(p, &dir, 1e-12, f64::INFINITY);
                // A ray through a shared edge reports both faces at one parameter.
                let mut distinct = 0;
                let mut last = f64::NEG_INFINITY;
                for (t, _) in hits {
                    if t - last > 1e-9 {
                        distinct += 1;
                        last = t;
                    }
                }
                distinct % 2 == 1
            })
            .count();
        votes >= 2
    }
}

fn ray_box(origin: &Point3, inv: &Vec3, b: &Aabb, t_min: f64, t_max: f64) -> bool {
    let mut lo = t_min;
    let mut hi = t_max;
    for i in 0..3 {
        let t1 = (b.min[i] - origin[i]) * inv[i];
        let t2 = (b.max[i] - origin[i]) * inv[i];
        let (a, c) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        // NaN (0 * inf) on a slab edge: keep the node.
        if a.is_nan() || c.is_nan() {
            continue;
        }
        lo = lo.max(a);
        hi = hi.min(c);
        if lo > hi * (1.0 + 1e-12) + 1e-12 {
            return false;
        }
    }
    true
}

fn build(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    boxes: &[Aabb],
    centroids: &[Point3],
    start: usize,
    end: usize,
) -> usize {
    let bounds = order[start..end]
        .iter()
        .fold(Aabb::empty(), |acc, &f| acc.union(&boxes[f]));
    let index = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return index;
    }
    nodes.push(Node::Leaf { bounds, start, end });
    let axis = bounds.extent().iamax();
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
    });
    let left = build(nodes, order, boxes, centroids, start, mid);
    let right = build(nodes, order, boxes, centroids, mid, end);
    nodes[index] = Node::Inner { bounds, left, right };
    index
}
