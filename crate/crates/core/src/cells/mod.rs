//! Cell placement, lofting, overlap resolution and assembly of the printable solid.

pub mod assemble;
pub mod loft;
pub mod overlap;
pub mod place;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{validate_spec, CellSpec, PrinterProfile};
use crate::mesh::{self, TriMesh};
use crate::shell::ShellModel;
use crate::{Error, Point3, Result, Vec3};

pub use assemble::assemble;
pub use loft::{loft_cell, Lofter};
pub use overlap::resolve_overlaps;
pub use place::place_cells;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Shrunk,
    Overlapping,
    ProjectionMiss,
    BooleanFailed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Shrunk => "shrunk",
            CellStatus::Overlapping => "overlapping",
            CellStatus::ProjectionMiss => "projection_miss",
            CellStatus::BooleanFailed => "boolean_failed",
        }
    }
}

/// One liquid cell: a convex truncated pyramid (or cone) through the body.
#[derive(Clone, Debug)]
pub struct Cell {
    pub id: usize,
    pub center: Point3,
    pub normal: Vec3,
    /// Across-corners size (or diameter) of the opening actually used.
    pub cross_section: f64,
    pub solid: TriMesh,
    pub volume: f64,
    pub status: CellStatus,
}

impl Cell {
    /// Cells carved out of the printable solid.
    pub fn is_printable(&self) -> bool {
        matches!(self.status, CellStatus::Ok | CellStatus::Shrunk)
    }
}

/// Per-status cell counts. Every placed centre is counted exactly once.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellReport {
    pub centers: usize,
    pub ok: usize,
    pub shrunk: usize,
    pub overlapping: usize,
    pub projection_miss: usize,
    pub boolean_failed: usize,
    /// Cells in conflict before overlap resolution started.
    pub flagged_before_resolution: usize,
}

impl CellReport {
    pub fn from_cells(cells: &[Cell]) -> Self {
        let mut r = CellReport {
            centers: cells.len(),
            ..Default::default()
        };
        for c in cells {
            match c.status {
                CellStatus::Ok => r.ok += 1,
                CellStatus::Shrunk => r.shrunk += 1,
                CellStatus::Overlapping => r.overlapping += 1,
                CellStatus::ProjectionMiss => r.projection_miss += 1,
                CellStatus::BooleanFailed => r.boolean_failed += 1,
            }
        }
        r
    }

    pub fn printable(&self) -> usize {
        self.ok + self.shrunk
    }

    /// Overlapping cells plus blank regions (projection misses and boolean failures).
    pub fn flagged(&self) -> usize {
        self.overlapping + self.projection_miss + self.boolean_failed
    }
}

/// Shell, cells and the final porous solid that goes to the slicer.
#[derive(Clone, Debug)]
pub struct DisplayModel {
    pub shell: ShellModel,
    pub cells: Vec<Cell>,
    pub printable: TriMesh,
    pub report: CellReport,
}

impl DisplayModel {
    pub fn printable_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.is_printable())
    }

    pub fn cell_table(&self) -> Vec<CellRecord> {
        self.cells.iter().map(CellRecord::from).collect()
    }

    pub fn cells_json(&self) -> String {
        serde_json::to_string_pretty(&self.cell_table()).expect("cell records serialize")
    }

    /// Writes `cell_<id>.stl` for every cell with a solid.
    pub fn write_cell_stls(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for c in self.cells.iter().filter(|c| !c.solid.is_empty()) {
            mesh::write_stl(&c.solid, dir.join(format!("cell_{:04}.stl", c.id)))?;
        }
        Ok(())
    }
}

/// Row of the exported cell table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: usize,
    pub center: [f64; 3],
    pub normal: [f64; 3],
    pub status: CellStatus,
    pub volume_mm3: f64,
    pub cross_section_mm: f64,
}

impl From<&Cell> for CellRecord {
    fn from(c: &Cell) -> Self {
        CellRecord {
            id: c.id,
            center: [c.center.x, c.center.y, c.center.z],
            normal: [c.normal.x, c.normal.y, c.normal.z],
            status: c.status,
            volume_mm3: c.volume,
            cross_section_mm: c.cross_section,
        }
    }
}

/// Places, lofts, resolves and assembles cells on `shell`.
pub fn build_display(shell: ShellModel, spec: &CellSpec, profile: &PrinterProfile) -> Result<DisplayModel> {
    let centers = place_cells(&shell, spec)?;
    build_display_with_centers(shell, spec, profile, &centers)
}

/// [`build_display`] with caller-chosen cell centres and normals.
pub fn build_display_with_centers(
    shell: ShellModel,
    spec: &CellSpec,
    profile: &PrinterProfile,
    centers: &[(Point3, Vec3)],
) -> Result<DisplayModel> {
    let (cells, flagged_before) = loft_and_resolve(&shell, spec, profile, centers)?;
    let mut model = assemble(shell, cells)?;
    model.report.flagged_before_resolution = flagged_before;
    Ok(model)
}

/// Lofts one cell per centre and resolves overlaps, without touching the
/// shell solids. Returns the cells and how many conflicted before resolution.
pub fn loft_and_resolve(
    shell: &ShellModel,
    spec: &CellSpec,
    profile: &PrinterProfile,
    centers: &[(Point3, Vec3)],
) -> Result<(Vec<Cell>, usize)> {
    let violations = validate_spec(spec, profile);
    if !violations.is_empty() {
        return Err(Error::SpecInvalid(violations));
    }
    let lofter = Lofter::new(shell, spec);
    let cells: Vec<Cell> = centers
        .par_iter()
        .enumerate()
        .map(|(id, (c, n))| lofter.loft(id, *c, *n, spec.cross_section))
        .collect();
    let resolution = resolve_overlaps(cells, &lofter, profile.fdm_nozzle_diameter);
    Ok((resolution.cells, resolution.flagged_before))
}
