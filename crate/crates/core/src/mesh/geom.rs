//! Low-level triangle and polygon predicates.

use crate::{Point2, Point3, Vec3};

pub fn triangle_area(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Closest point on triangle `abc` to `p`, with its barycentric coordinates.
pub fn closest_point_on_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> (Point3, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

/// Möller-Trumbore ray/triangle intersection. Returns the ray parameter of
/// the hit (both faces count).
pub fn ray_triangle(origin: &Point3, dir: &Vec3, a: &Point3, b: &Point3, c: &Point3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-14 * e1.norm() * e2.norm() * dir.norm() {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv;
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv;
    if v < -1e-12 || u + v > 1.0 + 1e-12 {
        return None;
    }
    Some(e2.dot(&qvec) * inv)
}

/// Interval of a triangle along the line shared with another triangle's plane.
fn plane_interval(p: [f64; 3], d: [f64; 3]) -> Option<(f64, f64)> {
    let alone = |k: usize, i: usize, j: usize| {
        let t1 = p[k] + (p[i] - p[k]) * d[k] / (d[k] - d[i]);
        let t2 = p[k] + (p[j] - p[k]) * d[k] / (d[k] - d[j]);
        Some((t1.min(t2), t1.max(t2)))
    };
    if d[0] * d[1] > 0.0 {
        alone(2, 0, 1)
    } else if d[0] * d[2] > 0.0 {
        alone(1, 0, 2)
    } else if d[1] * d[2] > 0.0 || d[0] != 0.0 {
        alone(0, 1, 2)
    } else if d[1] != 0.0 {
        alone(1, 0, 2)
    } else if d[2] != 0.0 {
        alone(2, 0, 1)
    } else {
        None
    }
}

/// Whether two triangles share at least one point (touching counts).
///
/// `eps` is the absolute plane-distance tolerance below which a vertex is
/// treated as lying on the other triangle's plane.
pub fn triangles_intersect(t1: &[Point3; 3], t2: &[Point3; 3], eps: f64) -> bool {
    let n2 = (t2[1] - t2[0]).cross(&(t2[2] - t2[0]));
    let n2len = n2.norm();
    if n2len == 0.0 {
        return false;
    }
    let n2u = n2 / n2len;
    let mut du = [0.0; 3];
    for i in 0..3 {
        let d = n2u.dot(&(t1[i] - t2[0]));
        du[i] = if d.abs() < eps { 0.0 } else { d };
    }
    if du[0] * du[1] > 0.0 && du[0] * du[2] > 0.0 {
        return false;
    }
    let n1 = (t1[1] - t1[0]).cross(&(t1[2] - t1[0]));
    let n1len = n1.norm();
    if n1len == 0.0 {
        return false;
    }
    let n1u = n1 / n1len;
    let mut dv = [0.0; 3];
    for i in 0..3 {
        let d = n1u.dot(&(t2[i] - t1[0]));
        dv[i] = if d.abs() < eps { 0.0 } else { d };
    }
    if dv[0] * dv[1] > 0.0 && dv[0] * dv[2] > 0.0 {
        return false;
    }
    if du.iter().all(|&d| d == 0.0) || dv.iter().all(|&d| d == 0.0) {
        return coplanar_triangles_intersect(&n1u, t1, t2);
    }
    let dir = n1u.cross(&n2u);
    let axis = dir.iamax();
    let pu = [t1[0][axis], t1[1][axis], t1[2][axis]];
    let pv = [t2[0][axis], t2[1][axis], t2[2][axis]];
    let (Some(a), Some(b)) = (plane_interval(pu, du), plane_interval(pv, dv)) else {
        return coplanar_triangles_intersect(&n1u, t1, t2);
    };
    let tol = eps * 10.0;
    a.1 + tol >= b.0 && b.1 + tol >= a.0
}

fn coplanar_triangles_intersect(n: &Vec3, t1: &[Point3; 3], t2: &[Point3; 3]) -> bool {
    let axis = n.iamax();
    let (i0, i1) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let p = |q: &Point3| Point2::new(q[i0], q[i1]);
    let a = t1.map(|q| p(&q));
    let b = t2.map(|q| p(&q));
    for i in 0..3 {
        for j in 0..3 {
            if segments_intersect_2d(&a[i], &a[(i + 1) % 3], &b[j], &b[(j + 1) % 3]) {
                return true;
            }
        }
    }
    point_in_triangle_2d(&a[0], &b) || point_in_triangle_2d(&b[0], &a)
}

pub fn orient2d(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn point_in_triangle_2d(p: &Point2, t: &[Point2; 3]) -> bool {
    let d1 = orient2d(&t[0], &t[1], p);
    let d2 = orient2d(&t[1], &t[2], p);
    let d3 = orient2d(&t[2], &t[0], p);
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

pub fn segments_intersect_2d(p1: &Point2, p2: &Point2, q1: &Point2, q2: &Point2) -> bool {
    let d1 = orient2d(q1, q2, p1);
    let d2 = orient2d(q1, q2, p2);
    let d3 = orient2d(p1, p2, q1);
    let d4 = orient2d(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: &Point2, b: &Point2, c: &Point2, d: f64| {
        d == 0.0
            && c.x >= a.x.min(b.x)
            && c.x <= a.x.max(b.x)
            && c.y >= a.y.min(b.y)
            && c.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Signed area of a closed 2D loop (positive when counter-clockwise).
pub fn signed_area_2d(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

/// Even-odd containment test against a single loop.
pub fn point_in_loop(p: &Point2, poly: &[Point2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = poly[i];
        let b = poly[j];
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub fn point_segment_distance_squared_2d(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + ab * t - p).norm_squared()
}

/// Orthonormal basis `(u, v)` of the plane with normal `n`.
///
/// `u` is global +X projected into the plane; when +X is (nearly) parallel
/// to `n` the projected +Y is used instead. `v = n × u`.
pub fn plane_frame(n: &Vec3) -> (Vec3, Vec3) {
    let project = |axis: Vec3| axis - n * n.dot(&axis);
    let px = project(Vec3::x());
    let u = if px.norm() > 1e-6 {
        px.normalize()
    } else {
        project(Vec3::y()).normalize()
    };
    (u, n.cross(&u))
}
