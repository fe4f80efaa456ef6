//! Convex cell separation and the shrink-then-exclude overlap fixpoint.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use super::loft::Lofter;
use super::{Cell, CellStatus};
use crate::constraints::{inscribed_diameter, INSCRIBED_MIN};
use crate::mesh::Aabb;
use crate::{Point3, Vec3};

/// Cross-section scale applied to both cells of a conflicting pair per round.
pub const SHRINK_FACTOR: f64 = 0.9;
pub const MAX_ROUNDS: usize = 5;

/// Euclidean distance between the convex hulls of two point sets (0 when they
/// intersect), by GJK on the Minkowski difference.
pub fn convex_distance(a: &[Point3], b: &[Point3]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let support = |d: &Vec3| -> Vec3 {
        let pa = a.iter().max_by(|p, q| p.coords.dot(d).total_cmp(&q.coords.dot(d))).unwrap();
        let pb = b.iter().min_by(|p, q| p.coords.dot(d).total_cmp(&q.coords.dot(d))).unwrap();
        pa - pb
    };
    let mut v = a[0] - b[0];
    let mut simplex: Vec<Vec3> = Vec::with_capacity(4);
    for _ in 0..128 {
        let vv = v.norm_squared();
        if vv < 1e-18 {
            return 0.0;
        }
        let w = support(&-v);
        if vv - v.dot(&w) <= 1e-10 * vv.max(1.0) || simplex.iter().any(|s| (s - w).norm_squared() < 1e-20) {
            break;
        }
        simplex.push(w);
        let (closest, kept) = closest_on_simplex(&simplex);
        v = closest;
        simplex = kept;
        if simplex.len() == 4 {
            return 0.0;
        }
    }
    v.norm()
}

/// Closest point to the origin on the hull of up to four points, and the
/// smallest subset whose hull contains it.
fn closest_on_simplex(points: &[Vec3]) -> (Vec3, Vec<Vec3>) {
    let n = points.len();
    let mut best: Option<(f64, Vec3, Vec<Vec3>)> = None;
    for mask in 1u32..(1 << n) {
        let subset: Vec<Vec3> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| points[i]).collect();
        let Some(weights) = affine_projection(&subset) else {
            continue;
        };
        if weights.iter().any(|&w| w < -1e-12) {
            continue;
        }
        let p = subset.iter().zip(&weights).fold(Vec3::zeros(), |acc, (s, w)| acc + s * *w);
        let d = p.norm_squared();
        let better = match &best {
            None => true,
            Some((bd, _, bs)) => d < bd - 1e-15 || (d <= bd + 1e-15 && subset.len() < bs.len()),
        };
        if better {
            best = Some((d, p, subset));
        }
    }
    let (_, p, subset) = best.expect("a single point always projects onto itself");
    (p, subset)
}

/// Barycentric weights of the origin's projection onto the affine hull.
fn affine_projection(s: &[Vec3]) -> Option<Vec<f64>> {
    if s.len() == 1 {
        return Some(vec![1.0]);
    }
    let k = s.len() - 1;
    let edges: Vec<Vec3> = s[1..].iter().map(|p| p - s[0]).collect();
    let mut gram = nalgebra::DMatrix::<f64>::zeros(k, k);
    let mut rhs = nalgebra::DVector::<f64>::zeros(k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = edges[i].dot(&edges[j]);
        }
        rhs[i] = -edges[i].dot(&s[0]);
    }
    let scale = (0..k).map(|i| gram[(i, i)]).fold(0.0, f64::max);
    if gram.determinant().abs() <= 1e-12 * scale.powi(k as i32) {
        return None;
    }
    let t = gram.lu().solve(&rhs)?;
    let mut w = vec![1.0 - t.sum()];
    w.extend(t.iter());
    Some(w)
}

/// Pairs of cells (indices into `cells`) closer than `wall`, found through a
/// uniform grid over their bounding boxes.
pub fn find_conflicts(cells: &[&Cell], wall: f64) -> Vec<(usize, usize)> {
    let boxes: Vec<Aabb> = cells.iter().map(|c| c.solid.bounds().expanded(wall / 2.0)).collect();
    let size = boxes
        .iter()
        .map(|b| b.extent().max())
        .fold(0.0, f64::max)
        .max(1e-6);
    let key = |p: &Point3| -> [i64; 3] { [0, 1, 2].map(|k| (p[k] / size).floor() as i64) };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, b) in boxes.iter().enumerate() {
        grid.entry(key(&b.min)).or_default().push(i);
    }
    let mut candidates = BTreeSet::new();
    for (i, b) in boxes.iter().enumerate() {
        let k = key(&b.min);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) else {
                        continue;
                    };
                    for &j in bucket {
                        if j > i && b.overlaps(&boxes[j]) {
                            candidates.insert((i, j));
                        }
                    }
                }
            }
        }
    }
    let candidates: Vec<(usize, usize)> = candidates.into_iter().collect();
    candidates
        .into_par_iter()
        .filter(|&(i, j)| convex_distance(cells[i].solid.vertices(), cells[j].solid.vertices()) < wall)
        .collect()
}

/// Outcome of [`resolve_overlaps`].
#[derive(Clone, Debug)]
pub struct Resolution {
    pub cells: Vec<Cell>,
    /// Cells involved in at least one conflict before any shrinking.
    pub flagged_before: usize,
    pub rounds: usize,
}

/// Shrinks conflicting cells by [`SHRINK_FACTOR`] for up to [`MAX_ROUNDS`]
/// rounds, then excludes what is still in conflict (most conflicts first).
///
/// A cell whose next shrink would fall below the inscribed-diameter floor
/// keeps its size and is left to the exclusion step.
pub fn resolve_overlaps(mut cells: Vec<Cell>, lofter: &Lofter, wall: f64) -> Resolution {
    let mut flagged_before = 0;
    let mut rounds = 0;
    loop {
        let active: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].is_printable()).collect();
        let refs: Vec<&Cell> = active.iter().map(|&i| &cells[i]).collect();
        let conflicts = find_conflicts(&refs, wall);
        let involved: BTreeSet<usize> = conflicts.iter().flat_map(|&(a, b)| [active[a], active[b]]).collect();
        if rounds == 0 {
            flagged_before = involved.len();
        }
        if involved.is_empty() {
            break;
        }
        let shrinkable: Vec<usize> = involved
            .iter()
            .copied()
            .filter(|&i| inscribed_diameter(lofter.shape(), cells[i].cross_section * SHRINK_FACTOR) >= INSCRIBED_MIN)
            .collect();
        if rounds == MAX_ROUNDS || shrinkable.is_empty() {
            exclude_greedily(&mut cells, &active, &conflicts);
            break;
        }
        rounds += 1;
        let updated: Vec<(usize, Cell)> = shrinkable
            .par_iter()
            .map(|&i| {
                let old = &cells[i];
                let mut cell = lofter.loft(old.id, old.center, old.normal, old.cross_section * SHRINK_FACTOR);
                if cell.status == CellStatus::Ok {
                    cell.status = CellStatus::Shrunk;
                }
                (i, cell)
            })
            .collect();
        for (i, cell) in updated {
            cells[i] = cell;
        }
    }
    let overlapping = cells.iter().filter(|c| c.status == CellStatus::Overlapping).count();
    log::info!("overlap resolution: {flagged_before} cells flagged, {rounds} shrink rounds, {overlapping} excluded");
    Resolution {
        cells,
        flagged_before,
        rounds,
    }
}

/// Keeps a large conflict-free subset of the conflicting cells and marks the
/// rest overlapping.
///
/// Greedy minimum-degree selection (ties to the lower id), improved by swaps
/// that drop one kept cell for two excluded ones.
fn exclude_greedily(cells: &mut [Cell], active: &[usize], conflicts: &[(usize, usize)]) {
    let mut adjacency: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &(a, b) in conflicts {
        let (a, b) = (active[a], active[b]);
        adjacency.entry(a).or_default().insert(b);
        adjacency.entry(b).or_default().insert(a);
    }
    let mut kept = BTreeSet::new();
    let mut undecided = adjacency.clone();
    while let Some(keep) = undecided
        .iter()
        .min_by(|x, y| x.1.len().cmp(&y.1.len()).then(cells[*x.0].id.cmp(&cells[*y.0].id)))
        .map(|(&i, _)| i)
    {
        kept.insert(keep);
        let neighbours = undecided.remove(&keep).unwrap_or_default();
        for n in neighbours {
            if let Some(second) = undecided.remove(&n) {
                for m in second {
                    if let Some(set) = undecided.get_mut(&m) {
                        set.remove(&n);
                    }
                }
            }
        }
    }
    let free_except = |kept: &BTreeSet<usize>, i: usize, k: usize| adjacency[&i].iter().all(|j| *j == k || !kept.contains(j));
    let mut improved = true;
    while improved {
        improved = false;
        for k in kept.clone() {
            let candidates: Vec<usize> = adjacency[&k]
                .iter()
                .copied()
                .filter(|&i| free_except(&kept, i, k))
                .collect();
            let pair = candidates.iter().enumerate().find_map(|(x, &a)| {
                candidates[x + 1..]
                    .iter()
                    .find(|&&b| !adjacency[&a].contains(&b))
                    .map(|&b| (a, b))
            });
            if let Some((a, b)) = pair {
                kept.remove(&k);
                kept.insert(a);
                kept.insert(b);
                improved = true;
            }
        }
    }
    for i in adjacency.keys() {
        if !kept.contains(i) {
            cells[*i].status = CellStatus::Overlapping;
        }
    }
}
