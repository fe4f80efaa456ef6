//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//!
//! Every numeric check is made against an oracle written here, not against
//! the library's own geometry code.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use magdisplay::cells::{build_display_with_centers, Cell, DisplayModel};
use magdisplay::constraints::{limits, validate_spec, CellSpec, PrinterProfile, Shape};
use magdisplay::gcode::inject::{PLUNGE_TAG, SERIES_BEGIN, SERIES_END};
use magdisplay::gcode::{emit, parse};
use magdisplay::mesh::{primitives, PlanarSection, TriMesh};
use magdisplay::pipeline::{cmd_pipeline, cmd_postprocess, Job};
use magdisplay::planner::{build_plan, largest_inscribed_circle, InjectionPlan, InjectionPoint};
use magdisplay::{Point2, Point3, Vec3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- shared runs

struct Timed<T> {
    value: T,
    elapsed: Duration,
}

fn timed<T>(f: impl FnOnce() -> T) -> Timed<T> {
    let t = Instant::now();
    let value = f();
    Timed {
        value,
        elapsed: t.elapsed(),
    }
}

/// Square sizes of the 40 × 40 mm plate series.
const PLATE_SIZES: [f64; 7] = [6.0, 5.5, 5.0, 4.5, 4.0, 3.5, 3.0];

fn plate_series_runs() -> &'static Vec<(f64, Timed<Job>)> {
    static RUNS: OnceLock<Vec<(f64, Timed<Job>)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let plate = primitives::sheet(40.0, 40.0, 1, 1);
        PLATE_SIZES
            .iter()
            .map(|&side| {
                let spec = CellSpec::new(Shape::Square, side, 1.0, 5.0, 0.6);
                let run = timed(|| cmd_pipeline(&plate, None, &spec, &PrinterProfile::default()).expect("plate pipeline"));
                (side, run)
            })
            .collect()
    })
}

/// 16 × 10 grid of 3 mm square cells, 5 mm deep, on a 64 × 40 mm plate.
fn grid_plate() -> &'static (DisplayModel, InjectionPlan) {
    static PLATE: OnceLock<(DisplayModel, InjectionPlan)> = OnceLock::new();
    PLATE.get_or_init(|| {
        let spec = CellSpec::new(Shape::Square, 3.0, 1.0, 5.0, 0.6);
        let pitch = spec.cross_section + spec.gap;
        let sheet = primitives::sheet(16.0 * pitch, 10.0 * pitch, 16, 10);
        let shell = magdisplay::shell::build_shell(&sheet, &spec).expect("plate shell");
        let top = spec.cell_depth;
        let centers: Vec<(Point3, Vec3)> = (0..10)
            .flat_map(|j| {
                (0..16).map(move |i| {
                    let c = Point3::new((i as f64 + 0.5) * pitch, (j as f64 + 0.5) * pitch, top);
                    (c, Vec3::z())
                })
            })
            .collect();
        let profile = PrinterProfile::default();
        let model = build_display_with_centers(shell, &spec, &profile, &centers).expect("plate display");
        let plan = build_plan(&model, &profile);
        (model, plan)
    })
}

fn bunny_run() -> &'static (Timed<Job>, usize, i64) {
    static RUN: OnceLock<(Timed<Job>, usize, i64)> = OnceLock::new();
    RUN.get_or_init(|| {
        let mesh = primitives::lumpy_sphere(15.0, 22);
        let spec = CellSpec::new(Shape::Hexagon, 4.0, 1.0, 5.0, 0.6);
        let faces = mesh.faces().len();
        let euler = mesh.euler_characteristic();
        let run = timed(|| cmd_pipeline(&mesh, None, &spec, &PrinterProfile::default()).expect("bunny pipeline"));
        (run, faces, euler)
    })
}

// ---------------------------------------------------------- 2D geometry oracle

fn seg_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

/// Crossing parity of a +x ray against a segment soup.
fn inside(p: Point2, segs: &[(Point2, Point2)]) -> bool {
    let mut odd = false;
    for &(a, b) in segs {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x > p.x {
                odd = !odd;
            }
        }
    }
    odd
}

fn polygon_segments(poly: &[Point2]) -> Vec<(Point2, Point2)> {
    (0..poly.len()).map(|i| (poly[i], poly[(i + 1) % poly.len()])).collect()
}

/// Largest inscribed radius by exhaustive search on a `step` grid.
fn brute_force_radius(poly: &[Point2], step: f64) -> f64 {
    let segs = polygon_segments(poly);
    let (mut lo, mut hi) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
    for p in poly {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let nx = ((hi.x - lo.x) / step).ceil() as usize;
    let ny = ((hi.y - lo.y) / step).ceil() as usize;
    let mut best: f64 = 0.0;
    for j in 0..=ny {
        for i in 0..=nx {
            let p = Point2::new(lo.x + i as f64 * step, lo.y + j as f64 * step);
            if !inside(p, &segs) {
                continue;
            }
            let d = segs.iter().map(|&(a, b)| seg_dist(p, a, b)).fold(f64::MAX, f64::min);
            best = best.max(d);
        }
    }
    best
}

// ---------------------------------------------------------- 3D section oracle

/// Section of a closed mesh at height `z` as oriented segments: outward
/// normal on the right, so the shoelace sum is the enclosed area.
fn section_segments(m: &TriMesh, z: f64) -> Vec<(Point2, Point2)> {
    let mut out = Vec::new();
    for f in 0..m.faces().len() {
        let t = m.triangle(f);
        let above: Vec<bool> = t.iter().map(|v| v.z >= z).collect();
        if above.iter().all(|&a| a) || above.iter().all(|&a| !a) {
            continue;
        }
        let mut pts = Vec::with_capacity(2);
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if above[k] != above[(k + 1) % 3] {
                let s = (z - a.z) / (b.z - a.z);
                pts.push(Point2::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)));
            }
        }
        let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
        let dir = Point2::new(-n.y, n.x);
        let (p, q) = (pts[0], pts[1]);
        if (q - p).dot(&dir.coords) >= 0.0 {
            out.push((p, q));
        } else {
            out.push((q, p));
        }
    }
    out
}

fn section_area(m: &TriMesh, z: f64) -> f64 {
    section_segments(m, z)
        .iter()
        .map(|(p, q)| p.x * q.y - q.x * p.y)
        .sum::<f64>()
        / 2.0
}

/// Volume of `m` below `z`. Section area is quadratic between vertex
/// heights, so 2-point Gauss per interval is exact and never samples a vertex plane.
fn volume_below(m: &TriMesh, z: f64) -> f64 {
    let mut levels: Vec<f64> = m.vertices().iter().map(|v| v.z).filter(|&v| v < z).collect();
    levels.push(z);
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let g = 0.5 / 3f64.sqrt();
    levels
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (mid, h) = ((a + b) / 2.0, b - a);
            h / 2.0 * (section_area(m, mid - g * h) + section_area(m, mid + g * h))
        })
        .sum()
}

/// Independent re-check of one planned point against its cell.
fn point_violations(point: &InjectionPoint, cell: &Cell, needed: f64, threshold: f64) -> Vec<String> {
    let mut out = Vec::new();
    let segs = section_segments(&cell.solid, point.z);
    let p = Point2::new(point.x, point.y);
    if !inside(p, &segs) {
        out.push(format!("cell {}: point outside its section at z {}", cell.id, point.z));
    }
    let clearance = 2.0 * segs.iter().map(|&(a, b)| seg_dist(p, a, b)).fold(f64::MAX, f64::min);
    if !(clearance > needed) {
        out.push(format!("cell {}: opening {clearance:.4} <= {needed}", cell.id));
    }
    let total = volume_below(&cell.solid, cell.solid.bounds().max.z + 1.0);
    let fill = volume_below(&cell.solid, point.z);
    if fill < threshold * total * (1.0 - 1e-9) {
        out.push(format!("cell {}: fill {fill:.4} < {threshold} x {total:.4}", cell.id));
    }
    if (total - cell.volume).abs() > 1e-6 * total.max(1.0) {
        out.push(format!("cell {}: volume {:.6} vs integrated {total:.6}", cell.id, cell.volume));
    }
    out
}

// ------------------------------------------------------------------ criteria

fn envelope_enforcement() -> Outcome {
    let t = Instant::now();
    let profile = PrinterProfile::default();
    // Published bounds.
    let (d_min, d_max, s_min, s_max, depth_max) = (2.5, 6.5, 0.6, 1.0, 5.0);
    let lim = limits(&profile);
    check(
        lim.inscribed_diameter.min == Some(d_min)
            && lim.inscribed_diameter.max == Some(d_max)
            && lim.screen_thickness.min == Some(s_min)
            && lim.screen_thickness.max == Some(s_max)
            && lim.cell_depth.max == Some(depth_max),
        || format!("served limits differ from the published bounds: {lim:?}"),
    )?;
    let mut cases = 0;
    let mut failures = Vec::new();
    let mut expect = |spec: CellSpec, ok: bool, what: String| {
        cases += 1;
        let accepted = validate_spec(&spec, &profile).is_empty();
        if accepted != ok {
            failures.push(format!("{what}: accepted={accepted}, expected {ok}"));
        }
    };
    for shape in Shape::ALL {
        // Inscribed diameter of each cross-section, derived here.
        let ratio = match shape {
            Shape::Circle | Shape::Square => 1.0,
            Shape::Hexagon => (PI / 6.0).cos(),
        };
        for (d, ok) in [
            (d_min - 0.01, false),
            (d_min, true),
            (d_min + 0.01, true),
            (d_max - 0.01, true),
            (d_max, true),
            (d_max + 0.01, false),
        ] {
            let spec = CellSpec::new(shape, d / ratio, 1.0, 3.0, 0.8);
            expect(spec, ok, format!("{} inscribed {d:.2}", shape.name()));
        }
        for (s, ok) in [
            (s_min - 0.01, false),
            (s_min, true),
            (s_min + 0.01, true),
            (s_max - 0.01, true),
            (s_max, true),
            (s_max + 0.01, false),
        ] {
            let spec = CellSpec::new(shape, 4.0 / ratio, 1.0, 3.0, s);
            expect(spec, ok, format!("{} screen {s:.2}", shape.name()));
        }
        for (depth, ok) in [(depth_max - 0.01, true), (depth_max, true), (depth_max + 0.01, false)] {
            let spec = CellSpec::new(shape, 4.0 / ratio, 1.0, depth, 0.8);
            expect(spec, ok, format!("{} depth {depth:.2}", shape.name()));
        }
    }
    check(failures.is_empty(), || failures.join("; "))?;
    let elapsed = t.elapsed();
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{cases} boundary cases in {elapsed:?}"))
}

fn plate_series_reconstruction() -> Outcome {
    let mut counts = Vec::new();
    let mut slowest = Duration::ZERO;
    for (side, run) in plate_series_runs() {
        let model = run.value.model().ok_or("no model")?;
        let plan = run.value.plan_result().ok_or("no plan")?;
        let printable = model.report.printable();
        check(plan.unplannable.is_empty(), || {
            format!("{side} mm: {} unplannable cells", plan.unplannable.len())
        })?;
        let planned: BTreeSet<usize> = plan.points.iter().map(|p| p.cell_id).collect();
        let cells: BTreeSet<usize> = model.printable_cells().map(|c| c.id).collect();
        check(planned == cells, || format!("{side} mm: planned cells differ from printable cells"))?;
        check(run.elapsed < Duration::from_secs(60), || format!("{side} mm took {:?}", run.elapsed))?;
        slowest = slowest.max(run.elapsed);
        counts.push(printable);
    }
    check(counts.windows(2).all(|w| w[0] < w[1]), || format!("cell counts not strictly increasing: {counts:?}"))?;
    Ok(format!("cells {counts:?}, all planned, slowest {slowest:?}"))
}

fn star_polygon(rng: &mut StdRng) -> Vec<Point2> {
    let n = rng.random_range(5..=16);
    let step = TAU / n as f64;
    (0..n)
        .map(|k| {
            let a = k as f64 * step + rng.random_range(-0.3..0.3) * step;
            let r = rng.random_range(1.5..4.0);
            Point2::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

fn inscribed_circle_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed_1c);
    let mut polys: Vec<(String, Vec<Point2>)> = (0..50).map(|i| (format!("star {i}"), star_polygon(&mut rng))).collect();
    let pts = |v: &[(f64, f64)]| v.iter().map(|&(x, y)| Point2::new(x, y)).collect::<Vec<_>>();
    polys.push(("square".into(), pts(&[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)])));
    polys.push(("rectangle".into(), pts(&[(0.0, 0.0), (6.0, 0.0), (6.0, 2.0), (0.0, 2.0)])));
    polys.push((
        "L".into(),
        pts(&[(0.0, 0.0), (5.0, 0.0), (5.0, 2.0), (2.0, 2.0), (2.0, 5.0), (0.0, 5.0)]),
    ));
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (name, poly) in &polys {
        let section = PlanarSection {
            z: 0.0,
            loops: vec![poly.clone()],
        };
        let (c, r) = largest_inscribed_circle(&section);
        let oracle = brute_force_radius(poly, 0.01);
        let segs = polygon_segments(poly);
        let at_center = segs.iter().map(|&(a, b)| seg_dist(c, a, b)).fold(f64::MAX, f64::min);
        let err = (r - oracle).abs() / oracle;
        worst = worst.max(err);
        if err > 0.01 {
            failures.push(format!("{name}: r {r:.4} vs oracle {oracle:.4}"));
        }
        if !inside(c, &segs) || (at_center - r).abs() > 0.01 * oracle {
            failures.push(format!("{name}: centre does not realise r (distance {at_center:.4})"));
        }
    }
    check(failures.is_empty(), || failures.join("; "))?;
    let elapsed = t.elapsed();
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("{} polygons, worst error {:.3}%, {elapsed:?}", polys.len(), worst * 100.0))
}

/// Empty-space components of `solid` not connected to the outside, found by
/// voxelising on a `h` grid (column ray parity) and flood filling.
fn voxel_cavities(solid: &TriMesh, h: f64) -> Result<Vec<f64>, String> {
    let b = solid.bounds();
    let origin = b.min - Vec3::repeat(2.0 * h);
    let n = |ext: f64| (ext / h).ceil() as usize + 4;
    let (nx, ny, nz) = (n(b.max.x - b.min.x), n(b.max.y - b.min.y), n(b.max.z - b.min.z));
    // Column centres nudged off any lattice a mesh edge could lie on.
    let col = |i: usize, j: usize| {
        (
            origin.x + (i as f64 + 0.5) * h + 1.7e-6,
            origin.y + (j as f64 + 0.5) * h + 2.9e-6,
        )
    };
    let mut hits: Vec<Vec<f64>> = vec![Vec::new(); nx * ny];
    for f in 0..solid.faces().len() {
        let [a, bb, c] = solid.triangle(f);
        let det = (bb.x - a.x) * (c.y - a.y) - (c.x - a.x) * (bb.y - a.y);
        if det.abs() < 1e-14 {
            continue;
        }
        let lo_x = a.x.min(bb.x).min(c.x);
        let hi_x = a.x.max(bb.x).max(c.x);
        let lo_y = a.y.min(bb.y).min(c.y);
        let hi_y = a.y.max(bb.y).max(c.y);
        let i0 = ((lo_x - origin.x) / h - 0.5).floor().max(0.0) as usize;
        let i1 = (((hi_x - origin.x) / h - 0.5).ceil() as usize).min(nx - 1);
        let j0 = ((lo_y - origin.y) / h - 0.5).floor().max(0.0) as usize;
        let j1 = (((hi_y - origin.y) / h - 0.5).ceil() as usize).min(ny - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let (x, y) = col(i, j);
                let u = ((bb.x - x) * (c.y - y) - (c.x - x) * (bb.y - y)) / det;
                let v = ((c.x - x) * (a.y - y) - (a.x - x) * (c.y - y)) / det;
                let w = 1.0 - u - v;
                if u >= 0.0 && v >= 0.0 && w >= 0.0 {
                    hits[j * nx + i].push(u * a.z + v * bb.z + w * c.z);
                }
            }
        }
    }
    let idx = |i: usize, j: usize, k: usize| (k * ny + j) * nx + i;
    // 0 empty, 1 solid, 2 visited.
    let mut grid = vec![0u8; nx * ny * nz];
    let mut odd_columns = 0;
    for j in 0..ny {
        for i in 0..nx {
            let zs = &mut hits[j * nx + i];
            zs.sort_by(f64::total_cmp);
            if zs.len() % 2 == 1 {
                odd_columns += 1;
                continue;
            }
            for pair in zs.chunks(2) {
                let k0 = ((pair[0] - origin.z) / h - 0.5).ceil().max(0.0) as usize;
                let k1 = ((pair[1] - origin.z) / h - 0.5).floor();
                if k1 < 0.0 {
                    continue;
                }
                for k in k0..=(k1 as usize).min(nz - 1) {
                    grid[idx(i, j, k)] = 1;
                }
            }
        }
    }
    check(odd_columns == 0, || format!("{odd_columns} columns crossed the surface an odd number of times"))?;
    let fill = |start: usize, grid: &mut Vec<u8>| -> usize {
        let mut queue = VecDeque::from([start]);
        grid[start] = 2;
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            let (i, j, k) = (v % nx, (v / nx) % ny, v / (nx * ny));
            let mut push = |w: usize| {
                if grid[w] == 0 {
                    grid[w] = 2;
                    queue.push_back(w);
                }
            };
            if i > 0 {
                push(v - 1);
            }
            if i + 1 < nx {
                push(v + 1);
            }
            if j > 0 {
                push(v - nx);
            }
            if j + 1 < ny {
                push(v + nx);
            }
            if k > 0 {
                push(v - nx * ny);
            }
            if k + 1 < nz {
                push(v + nx * ny);
            }
        }
        size
    };
    fill(0, &mut grid);
    let mut cavities = Vec::new();
    for v in 0..grid.len() {
        if grid[v] == 0 {
            cavities.push(fill(v, &mut grid) as f64 * h * h * h);
        }
    }
    Ok(cavities)
}

fn volume_conservation() -> Outcome {
    let (model, _) = grid_plate();
    let printable = model.report.printable();
    check(printable == 160, || format!("{printable} printable cells, report {:?}", model.report))?;
    let expected: f64 = model.printable_cells().map(|c| c.volume).sum();
    let cavities = voxel_cavities(&model.printable, 0.125)?;
    let found: f64 = cavities.iter().sum();
    check(cavities.len() == 160, || format!("{} cavities", cavities.len()))?;
    let err = (found - expected).abs() / expected;
    check(err <= 0.02, || format!("cavity volume {found:.1} vs cells {expected:.1}"))?;
    Ok(format!("160 cavities, {found:.1} vs {expected:.1} mm3 ({:.2}%)", err * 100.0))
}

fn planner_soundness() -> Outcome {
    let profile = PrinterProfile::default();
    let needed = profile.injector_nozzle_diameter + profile.injection_clearance;
    let mut fixtures: Vec<(String, &DisplayModel, &InjectionPlan)> = plate_series_runs()
        .iter()
        .map(|(side, run)| (format!("plate {side}"), run.value.model().unwrap(), run.value.plan_result().unwrap()))
        .collect();
    let (plate, plate_plan) = grid_plate();
    fixtures.push(("16x10 plate".into(), plate, plate_plan));
    let bunny = &bunny_run().0.value;
    fixtures.push(("bunny".into(), bunny.model().unwrap(), bunny.plan_result().unwrap()));
    let mut points = 0;
    let mut violations = Vec::new();
    for (name, model, plan) in &fixtures {
        for point in &plan.points {
            points += 1;
            let cell = model.cells.iter().find(|c| c.id == point.cell_id).ok_or("planned cell missing")?;
            for v in point_violations(point, cell, needed, profile.fill_threshold) {
                violations.push(format!("{name} {v}"));
            }
        }
    }
    check(points > 0, || "no planned points".into())?;
    check(violations.is_empty(), || format!("{} violations: {}", violations.len(), violations.join("; ")))?;
    Ok(format!("{points} points over {} models, zero violations", fixtures.len()))
}

const FIXTURES: [(&str, &str); 3] = [
    ("cura", include_str!("fixtures/cura_frustum.gcode")),
    ("prusa", include_str!("fixtures/prusa_frustum.gcode")),
    ("bare", include_str!("fixtures/bare_frustum.gcode")),
];

/// Series markers and plunge E total, read straight from the text.
fn count_injections(text: &str) -> Result<(usize, f64), String> {
    let (mut open, mut pairs, mut e) = (false, 0, 0.0);
    for line in text.lines() {
        if line.starts_with(SERIES_BEGIN) {
            check(!open, || "nested series".into())?;
            open = true;
        } else if line.starts_with(SERIES_END) {
            check(open, || "series end without begin".into())?;
            open = false;
            pairs += 1;
        } else if line.contains(PLUNGE_TAG) {
            let code = line.split(';').next().unwrap_or("");
            let word = code.split_whitespace().find_map(|w| w.strip_prefix('E'));
            e += word.and_then(|w| w.parse::<f64>().ok()).ok_or_else(|| format!("plunge without E: {line}"))?;
        }
    }
    check(!open, || "unterminated series".into())?;
    Ok((pairs, e))
}

fn splice_audit(name: &str, gcode: &str, plan: &InjectionPlan, profile: &PrinterProfile) -> Result<usize, String> {
    let out = cmd_postprocess(gcode, plan, profile).map_err(|e| format!("{name}: {e}"))?.gcode;
    let (pairs, e) = count_injections(&out).map_err(|e| format!("{name}: {e}"))?;
    let layers: BTreeSet<usize> = plan.points.iter().map(|p| p.layer_index).collect();
    check(pairs == layers.len(), || format!("{name}: {pairs} switch pairs for {} layers", layers.len()))?;
    let volume: f64 = plan.points.iter().map(|p| p.fill_volume).sum();
    let expected = volume * profile.e_per_mm3;
    check((e - expected).abs() <= 1e-6 * expected, || format!("{name}: plunge E {e} vs {expected}"))?;
    parse(&out).map_err(|e| format!("{name}: spliced output does not re-parse: {e}"))?;
    Ok(layers.len())
}

fn gcode_round_trip() -> Outcome {
    let profile = PrinterProfile::default();
    for (name, text) in FIXTURES {
        let program = parse(text).map_err(|e| format!("{name}: {e}"))?;
        check(program.layers.len() == 20, || format!("{name}: {} layers", program.layers.len()))?;
        check(emit(&program) == text, || format!("{name}: emit(parse(x)) != x"))?;
        let empty = cmd_postprocess(text, &InjectionPlan::default(), &profile).map_err(|e| e.to_string())?;
        check(empty.gcode == text, || format!("{name}: empty plan changed the file"))?;
    }
    // Hand-made plan over the frustum fixtures: two cells share a layer.
    let point = |cell_id, x, y, k: usize, fill_volume| InjectionPoint {
        cell_id,
        x,
        y,
        z: k as f64 * 0.2,
        layer_index: k - 1,
        fill_volume,
        inscribed_diameter: 3.0,
    };
    let points = vec![
        point(0, 112.0, 117.5, 5, 37.5),
        point(1, 123.0, 117.5, 5, 41.25),
        point(2, 117.5, 112.0, 12, 12.125),
        point(3, 117.5, 121.0, 19, 60.0),
    ];
    let total_volume = points.iter().map(|p| p.fill_volume).sum();
    let plan = InjectionPlan {
        points,
        unplannable: Vec::new(),
        total_volume,
    };
    let mut spliced = 0;
    for (name, text) in FIXTURES {
        splice_audit(name, text, &plan, &profile)?;
        spliced += 1;
    }
    let bunny = &bunny_run().0.value;
    let bunny_plan = bunny.plan_result().ok_or("no bunny plan")?;
    let gcode = magdisplay::pipeline::synthesize_gcode(bunny.model().unwrap(), &profile);
    let bunny_layers = splice_audit("bunny", &gcode, bunny_plan, &profile)?;
    check(bunny_layers > 1, || format!("bunny plan spans {bunny_layers} layer"))?;
    Ok(format!(
        "3 fixtures byte-identical; {spliced} fixture splices and a {bunny_layers}-layer model splice audited"
    ))
}

fn bunny_end_to_end() -> Outcome {
    let (run, faces, euler) = bunny_run();
    check((8_000..=12_000).contains(faces), || format!("input has {faces} faces"))?;
    check(*euler == 2, || format!("input Euler characteristic {euler}"))?;
    let model = run.value.model().ok_or("no model")?;
    let plan = run.value.plan_result().ok_or("no plan")?;
    check(model.printable.is_closed(), || "printable mesh is not closed".into())?;
    let r = &model.report;
    let flagged = r.overlapping + r.projection_miss + r.boolean_failed + plan.unplannable.len();
    let fraction = flagged as f64 / r.centers as f64;
    check(fraction <= 0.05, || format!("{flagged} of {} cells flagged", r.centers))?;
    check(run.elapsed < Duration::from_secs(300), || format!("took {:?}", run.elapsed))?;
    Ok(format!(
        "{faces} faces, {} cells, {flagged} flagged ({:.1}%), closed, {:?}",
        r.centers,
        fraction * 100.0,
        run.elapsed
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("envelope enforcement", envelope_enforcement),
        ("plate series reconstruction", plate_series_reconstruction),
        ("inscribed-circle oracle", inscribed_circle_oracle),
        ("volume conservation", volume_conservation),
        ("planner soundness", planner_soundness),
        ("g-code round-trip and splice audit", gcode_round_trip),
        ("bunny-class end-to-end", bunny_end_to_end),
    ];
    let default_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    std::panic::set_hook(default_hook);
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
