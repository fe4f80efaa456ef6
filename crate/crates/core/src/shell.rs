//! The screen / body / screen sandwich grown from the input surface.

use std::path::Path;

use crate::constraints::{validate_spec, CellSpec, PrinterProfile, ShellMode, ViolationCode};
use crate::mesh::{self, TriMesh};
use crate::{Error, Result};

/// Input surface plus the derived offset surfaces and solids.
///
/// Cells occupy `body`, between `cell_floor` and `m_prime`. `envelope` is the
/// closed solid `s_out ∪ body ∪ s_in` that cells are carved out of.
#[derive(Clone, Debug)]
pub struct ShellModel {
    pub mode: ShellMode,
    pub cell_depth: f64,
    pub screen_thickness: f64,
    pub m: TriMesh,
    /// Surface the cell openings sit on (outer face of the body).
    pub m_prime: TriMesh,
    /// Surface the cell bottoms sit on (inner face of the body).
    pub cell_floor: TriMesh,
    pub s_out: TriMesh,
    pub s_in: TriMesh,
    pub body: TriMesh,
    pub envelope: TriMesh,
}

impl ShellModel {
    /// Writes the five named meshes (and the envelope) as binary STL.
    pub fn write_debug_stls(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, m) in [
            ("m", &self.m),
            ("m_prime", &self.m_prime),
            ("s_out", &self.s_out),
            ("s_in", &self.s_in),
            ("body", &self.body),
            ("envelope", &self.envelope),
        ] {
            mesh::write_stl(m, dir.join(format!("shell_{name}.stl")))?;
        }
        Ok(())
    }
}

/// Shell mode used for `m` when the cell spec leaves it open.
pub fn resolve_mode(m: &TriMesh, spec: &CellSpec) -> ShellMode {
    spec.shell_mode.unwrap_or(if m.is_closed() {
        ShellMode::Outward
    } else {
        ShellMode::SingleSided
    })
}

pub fn build_shell(m: &TriMesh, spec: &CellSpec) -> Result<ShellModel> {
    // Gap only matters once cells are placed; the shell depends on depth and screen.
    let violations: Vec<_> = validate_spec(spec, &PrinterProfile::default())
        .into_iter()
        .filter(|v| v.code != ViolationCode::GapTooNarrow)
        .collect();
    if !violations.is_empty() {
        return Err(Error::SpecInvalid(violations));
    }
    if m.is_empty() {
        return Err(Error::InvalidMesh("empty mesh".into()));
    }
    if m.non_manifold_edge_count() > 0 {
        return Err(Error::InvalidMesh(format!(
            "{} non-manifold edges",
            m.non_manifold_edge_count()
        )));
    }
    let mode = resolve_mode(m, spec);
    let (h, s) = (spec.cell_depth, spec.screen_thickness);
    match mode {
        ShellMode::Outward | ShellMode::Inward if !m.is_closed() => Err(Error::NotClosed),
        ShellMode::Outward => {
            let m_prime = mesh::offset_mesh(m, h)?;
            let (outer, inner) = rayon::join(
                || mesh::offset_mesh(&m_prime, s),
                || mesh::offset_mesh(m, -s),
            );
            let (outer, inner) = (outer?, inner?);
            Ok(ShellModel {
                mode,
                cell_depth: h,
                screen_thickness: s,
                s_out: outer.merged(&m_prime.flipped()),
                s_in: m.merged(&inner.flipped()),
                body: m_prime.merged(&m.flipped()),
                envelope: outer.merged(&inner.flipped()),
                cell_floor: m.clone(),
                m: m.clone(),
                m_prime,
            })
        }
        ShellMode::Inward => {
            let (a, (b, c)) = rayon::join(
                || mesh::offset_mesh(m, -s),
                || {
                    rayon::join(
                        || mesh::offset_mesh(m, -(s + h)),
                        || mesh::offset_mesh(m, -(2.0 * s + h)),
                    )
                },
            );
            let (a, b, c) = (a?, b?, c?);
            Ok(ShellModel {
                mode,
                cell_depth: h,
                screen_thickness: s,
                s_out: m.merged(&a.flipped()),
                body: a.merged(&b.flipped()),
                s_in: b.merged(&c.flipped()),
                envelope: m.merged(&c.flipped()),
                m: m.clone(),
                m_prime: a,
                cell_floor: b,
            })
        }
        ShellMode::SingleSided => {
            let levels = [-s, 0.0, h, h + s];
            let surfaces = levels
                .iter()
                .map(|&d| mesh::offset_mesh(m, d))
                .collect::<Result<Vec<_>>>()?;
            let slab = |lo: usize, hi: usize| extrude_between(m, &surfaces[lo], &surfaces[hi]);
            Ok(ShellModel {
                mode,
                cell_depth: h,
                screen_thickness: s,
                s_in: slab(0, 1),
                body: slab(1, 2),
                s_out: slab(2, 3),
                envelope: slab(0, 3),
                m: m.clone(),
                m_prime: surfaces[2].clone(),
                cell_floor: surfaces[1].clone(),
            })
        }
    }
}

/// Closed solid between two offsets of the same sheet, walled along the
/// sheet boundary. `top` and `bottom` share the connectivity of `sheet`.
fn extrude_between(sheet: &TriMesh, bottom: &TriMesh, top: &TriMesh) -> TriMesh {
    let n = sheet.vertices().len() as u32;
    let mut vertices = bottom.vertices().to_vec();
    vertices.extend_from_slice(top.vertices());
    let mut faces: Vec<[u32; 3]> = sheet.faces().iter().map(|&[a, b, c]| [a, c, b]).collect();
    faces.extend(sheet.faces().iter().map(|f| f.map(|i| i + n)));
    for (u, v) in sheet.boundary_edges() {
        faces.push([u, v, v + n]);
        faces.push([u, v + n, u + n]);
    }
    TriMesh::new(vertices, faces).expect("extrusion indices are in range")
}
