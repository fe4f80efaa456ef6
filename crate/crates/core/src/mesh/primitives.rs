//! Parametric fixture solids.

use std::f64::consts::{PI, TAU};

use super::{weld_points, TriMesh};
use crate::{Point3, Vec3};

pub fn cuboid(min: Point3, max: Point3) -> TriMesh {
    let v = |x: bool, y: bool, z: bool| {
        Point3::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    let vertices = vec![
        v(false, false, false),
        v(true, false, false),
        v(true, true, false),
        v(false, true, false),
        v(false, false, true),
        v(true, false, true),
        v(true, true, true),
        v(false, true, true),
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriMesh::new(vertices, faces).expect("static cuboid")
}

pub fn cube(center: Point3, side: f64) -> TriMesh {
    let h = Vec3::repeat(side / 2.0);
    cuboid(center - h, center + h)
}

/// Geodesic sphere: each icosahedron face split into `frequency²` triangles
/// and projected onto the sphere. Face count is `20 · frequency²`.
pub fn icosphere(radius: f64, frequency: usize) -> TriMesh {
    geodesic(frequency, |dir| Point3::from(dir * radius))
}

/// Closed genus-0 "scan-like" blob: a geodesic sphere with smooth radial
/// lobes (two ear-like bulges and low-frequency bumps). Stands in for a
/// scanned figurine in end-to-end runs.
pub fn lumpy_sphere(radius: f64, frequency: usize) -> TriMesh {
    let ears = [
        Vec3::new(0.35, 0.2, 0.92).normalize(),
        Vec3::new(-0.35, 0.2, 0.92).normalize(),
    ];
    geodesic(frequency, |dir| {
        let mut r = 1.0;
        for ear in &ears {
            let angle = dir.dot(ear).clamp(-1.0, 1.0).acos();
            r += 0.32 * (-(angle / 0.38).powi(2)).exp();
        }
        let (theta, phi) = (dir.z.clamp(-1.0, 1.0).acos(), dir.y.atan2(dir.x));
        r += 0.06 * (2.0 * phi).cos() * theta.sin() + 0.05 * (3.0 * theta).cos();
        // Squash slightly so the body reads as a body, not a ball.
        let scaled = Vec3::new(dir.x * 1.08, dir.y * 0.95, dir.z);
        Point3::from(scaled * (radius * r))
    })
}

fn geodesic(frequency: usize, place: impl Fn(&Vec3) -> Point3) -> TriMesh {
    let f = frequency.max(1);
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let base: [Vec3; 12] = [
        Vec3::new(-1.0, t, 0.0),
        Vec3::new(1.0, t, 0.0),
        Vec3::new(-1.0, -t, 0.0),
        Vec3::new(1.0, -t, 0.0),
        Vec3::new(0.0, -1.0, t),
        Vec3::new(0.0, 1.0, t),
        Vec3::new(0.0, -1.0, -t),
        Vec3::new(0.0, 1.0, -t),
        Vec3::new(t, 0.0, -1.0),
        Vec3::new(t, 0.0, 1.0),
        Vec3::new(-t, 0.0, -1.0),
        Vec3::new(-t, 0.0, 1.0),
    ]
    .map(|v| v.normalize());
    let tris: [[usize; 3]; 20] = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut dirs: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for [a, b, c] in tris {
        let (a, b, c) = (base[a], base[b], base[c]);
        let start = dirs.len() as u32;
        let idx = |i: usize, j: usize| start + (i * (i + 1) / 2 + j) as u32;
        for i in 0..=f {
            for j in 0..=i {
                // Row i runs from a towards the b-c edge.
                let p = a + (b - a) * (i as f64 / f as f64) + (c - b) * (j as f64 / f as f64);
                dirs.push(p.normalize());
            }
        }
        for i in 0..f {
            for j in 0..=i {
                faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                if j < i {
                    faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
                }
            }
        }
    }
    let points: Vec<Point3> = dirs.iter().map(|d| Point3::from(*d)).collect();
    let (unique, remap) = weld_points(&points, 1e-9);
    let vertices = unique.iter().map(|p| place(&p.coords)).collect();
    let faces = faces.into_iter().map(|f| f.map(|i| remap[i as usize])).collect();
    TriMesh::new(vertices, faces).expect("geodesic indices")
}

/// Frustum about the z axis from `z0` up by `height`. `r_top = 0` gives a cone
/// with an apex vertex.
pub fn frustum(r_bottom: f64, r_top: f64, height: f64, segments: usize, z0: f64) -> TriMesh {
    let n = segments.max(3);
    let mut vertices = Vec::new();
    let ring = |r: f64, z: f64, out: &mut Vec<Point3>| {
        for k in 0..n {
            let a = TAU * k as f64 / n as f64;
            out.push(Point3::new(r * a.cos(), r * a.sin(), z));
        }
    };
    ring(r_bottom, z0, &mut vertices);
    let mut faces = Vec::new();
    let bottom_center = vertices.len() as u32;
    vertices.push(Point3::new(0.0, 0.0, z0));
    for k in 0..n as u32 {
        faces.push([bottom_center, (k + 1) % n as u32, k]);
    }
    if r_top <= 0.0 {
        let apex = vertices.len() as u32;
        vertices.push(Point3::new(0.0, 0.0, z0 + height));
        for k in 0..n as u32 {
            faces.push([k, (k + 1) % n as u32, apex]);
        }
    } else {
        let top = vertices.len() as u32;
        ring(r_top, z0 + height, &mut vertices);
        let top_center = vertices.len() as u32;
        vertices.push(Point3::new(0.0, 0.0, z0 + height));
        for k in 0..n as u32 {
            let k1 = (k + 1) % n as u32;
            faces.push([k, k1, top + k1]);
            faces.push([k, top + k1, top + k]);
            faces.push([top_center, top + k, top + k1]);
        }
    }
    TriMesh::new(vertices, faces).expect("frustum indices")
}

pub fn cylinder(radius: f64, height: f64, segments: usize, z0: f64) -> TriMesh {
    frustum(radius, radius, height, segments, z0)
}

pub fn torus(major: f64, minor: f64, major_segments: usize, minor_segments: usize) -> TriMesh {
    let (nu, nv) = (major_segments.max(3), minor_segments.max(3));
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = TAU * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            vertices.push(Point3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| ((i % nu) * nv + (j % nv)) as u32;
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces).expect("torus indices")
}

/// Open rectangular sheet in the plane z = 0, corner at the origin, normal +Z.
pub fn sheet(width: f64, height: f64, nx: usize, ny: usize) -> TriMesh {
    let (nx, ny) = (nx.max(1), ny.max(1));
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point3::new(
                width * i as f64 / nx as f64,
                height * j as f64 / ny as f64,
                0.0,
            ));
        }
    }
    let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces).expect("sheet indices")
}

/// Regular tetrahedron with unit-length-ish edges around the origin.
pub fn tetrahedron(scale: f64) -> TriMesh {
    let vertices = vec![
        Point3::new(1.0, 1.0, 1.0) * scale,
        Point3::new(1.0, -1.0, -1.0) * scale,
        Point3::new(-1.0, 1.0, -1.0) * scale,
        Point3::new(-1.0, -1.0, 1.0) * scale,
    ];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriMesh::new(vertices, faces).expect("tetrahedron indices")
}

/// Volume of a sphere, for fixture comparisons.
pub fn sphere_volume(radius: f64) -> f64 {
    4.0 / 3.0 * PI * radius.powi(3)
}
