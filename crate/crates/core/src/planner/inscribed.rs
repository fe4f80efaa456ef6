//! Largest inscribed circle of a planar section (pole of inaccessibility).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::mesh::geom::point_segment_distance_squared_2d;
use crate::mesh::PlanarSection;
use crate::Point2;

/// Search stops refining cells that cannot beat the best radius by more than this (mm).
pub const DEFAULT_PRECISION: f64 = 1e-3;

/// Distance to the nearest loop edge, negative outside the section.
pub fn signed_distance(section: &PlanarSection, p: &Point2) -> f64 {
    let d2 = section
        .loops
        .iter()
        .flat_map(|l| (0..l.len()).map(move |i| (&l[i], &l[(i + 1) % l.len()])))
        .map(|(a, b)| point_segment_distance_squared_2d(p, a, b))
        .fold(f64::INFINITY, f64::min);
    let d = d2.sqrt();
    if section.contains(p) {
        d
    } else {
        -d
    }
}

struct Cell {
    center: Point2,
    half: f64,
    distance: f64,
    potential: f64,
}

impl Cell {
    fn new(section: &PlanarSection, center: Point2, half: f64) -> Self {
        let distance = signed_distance(section, &center);
        Cell {
            center,
            half,
            distance,
            potential: distance + half * std::f64::consts::SQRT_2,
        }
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on potential; ties broken by position (lower x, then y) for determinism.
        self.potential
            .total_cmp(&other.potential)
            .then_with(|| other.center.x.total_cmp(&self.center.x))
            .then_with(|| other.center.y.total_cmp(&self.center.y))
    }
}

/// Centre and radius of the largest circle inside `section`, to within
/// `precision` mm. Holes are respected. Empty sections give radius 0.
pub fn largest_inscribed_circle_with(section: &PlanarSection, precision: f64) -> (Point2, f64) {
    let points: Vec<&Point2> = section.loops.iter().flatten().collect();
    if points.is_empty() {
        return (Point2::origin(), 0.0);
    }
    let (mut min, mut max) = (*points[0], *points[0]);
    for p in &points {
        min = min.inf(p);
        max = max.sup(p);
    }
    let size = (max - min).min();
    if size <= 0.0 {
        return (min, 0.0);
    }
    let half = size / 2.0;
    let mut queue = BinaryHeap::new();
    let mut x = min.x;
    while x < max.x {
        let mut y = min.y;
        while y < max.y {
            queue.push(Cell::new(section, Point2::new(x + half, y + half), half));
            y += size;
        }
        x += size;
    }
    let mut best = Cell::new(section, area_centroid(section).unwrap_or(nalgebra::center(&min, &max)), 0.0);
    let bbox_center = Cell::new(section, nalgebra::center(&min, &max), 0.0);
    if bbox_center.distance > best.distance {
        best = bbox_center;
    }
    while let Some(cell) = queue.pop() {
        if cell.distance > best.distance {
            best = Cell::new(section, cell.center, 0.0);
        }
        if cell.potential - best.distance <= precision {
            continue;
        }
        let h = cell.half / 2.0;
        for (dx, dy) in [(-h, -h), (h, -h), (-h, h), (h, h)] {
            queue.push(Cell::new(section, Point2::new(cell.center.x + dx, cell.center.y + dy), h));
        }
    }
    (best.center, best.distance.max(0.0))
}

pub fn largest_inscribed_circle(section: &PlanarSection) -> (Point2, f64) {
    largest_inscribed_circle_with(section, DEFAULT_PRECISION)
}

fn area_centroid(section: &PlanarSection) -> Option<Point2> {
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for l in &section.loops {
        for i in 0..l.len() {
            let (p, q) = (l[i], l[(i + 1) % l.len()]);
            let f = p.x * q.y - q.x * p.y;
            a += f;
            cx += (p.x + q.x) * f;
            cy += (p.y + q.y) * f;
        }
    }
    (a.abs() > 1e-12).then(|| Point2::new(cx / (3.0 * a), cy / (3.0 * a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn section(loops: Vec<Vec<(f64, f64)>>) -> PlanarSection {
        PlanarSection {
            z: 0.0,
            loops: loops
                .into_iter()
                .map(|l| l.into_iter().map(|(x, y)| Point2::new(x, y)).collect())
                .collect(),
        }
    }

    #[test]
    fn square() {
        let s = section(vec![vec![(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]]);
        let (c, r) = largest_inscribed_circle(&s);
        assert_relative_eq!(r, 5.0, epsilon = 0.05);
        assert!((c - Point2::new(5.0, 5.0)).norm() < 0.05);
    }

    #[test]
    fn rectangle_tie_region() {
        let s = section(vec![vec![(0.0, 0.0), (10.0, 0.0), (10.0, 4.0), (0.0, 4.0)]]);
        let (c, r) = largest_inscribed_circle(&s);
        assert_relative_eq!(r, 2.0, epsilon = 0.02);
        assert!((c.y - 2.0).abs() <= 0.02 && (2.0..=8.0).contains(&c.x), "{c}");
    }

    #[test]
    fn hole_is_avoided() {
        let s = section(vec![
            vec![(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)],
            vec![(4.0, 4.0), (4.0, 6.0), (6.0, 6.0), (6.0, 4.0)],
        ]);
        let (c, r) = largest_inscribed_circle(&s);
        assert!(!(4.0..=6.0).contains(&c.x) || !(4.0..=6.0).contains(&c.y));
        assert_relative_eq!(r, oracle(&s, 0.01), max_relative = 0.01);
    }

    /// Grid search with its own even-odd test and segment distance.
    fn oracle(s: &PlanarSection, step: f64) -> f64 {
        let edges: Vec<(Point2, Point2)> = s
            .loops
            .iter()
            .flat_map(|l| (0..l.len()).map(move |i| (l[i], l[(i + 1) % l.len()])))
            .collect();
        let inside = |p: &Point2| {
            edges
                .iter()
                .filter(|(a, b)| (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x))
                .count()
                % 2
                == 1
        };
        let dist = |p: &Point2| {
            edges
                .iter()
                .map(|(a, b)| {
                    let ab = b - a;
                    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                    (a + ab * t - p).norm()
                })
                .fold(f64::INFINITY, f64::min)
        };
        let (x0, x1, y0, y1) = edges.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), (p, _)| (a.min(p.x), b.max(p.x), c.min(p.y), d.max(p.y)),
        );
        let mut best = 0.0f64;
        for i in 0..=((x1 - x0) / step) as usize {
            for j in 0..=((y1 - y0) / step) as usize {
                let p = Point2::new(x0 + i as f64 * step, y0 + j as f64 * step);
                if inside(&p) {
                    best = best.max(dist(&p));
                }
            }
        }
        best
    }

    #[test]
    fn l_polygon_matches_grid() {
        let s = section(vec![vec![(0.0, 0.0), (10.0, 0.0), (10.0, 4.0), (4.0, 4.0), (4.0, 10.0), (0.0, 10.0)]]);
        let (c, r) = largest_inscribed_circle(&s);
        assert_relative_eq!(r, oracle(&s, 0.01), max_relative = 0.01);
        assert_relative_eq!(r, 2.343, epsilon = 0.01);
        assert!((c - Point2::new(2.343, 2.343)).norm() < 0.05);
    }
}
