use rayon::prelude::*;

use super::{Cell, CellReport, CellStatus, DisplayModel};
use crate::mesh::bvh::Bvh;
use crate::mesh::TriMesh;
use crate::shell::ShellModel;
use crate::{Error, Result};

/// Cells smaller than this are treated as slivers and fail to seal.
pub const MIN_CELL_VOLUME: f64 = 1e-3;

/// Carves every ok/shrunk cell out of the shell envelope.
///
/// A cell is sealed when its solid is closed, lies strictly inside the
/// envelope and has non-negligible volume; it then becomes an inward-facing
/// cavity shell of the printable mesh. Anything else is a blank region and is
/// marked `boolean_failed`.
pub fn assemble(shell: ShellModel, mut cells: Vec<Cell>) -> Result<DisplayModel> {
    let envelope = Bvh::new(&shell.envelope);
    let sealed: Vec<bool> = cells
        .par_iter()
        .map(|c| !c.is_printable() || seals(c, &envelope))
        .collect();
    for (cell, ok) in cells.iter_mut().zip(sealed) {
        if !ok {
            log::warn!("cell {} cannot be sealed inside the envelope", cell.id);
            cell.status = CellStatus::BooleanFailed;
        }
    }
    let cavities: Vec<TriMesh> = cells.iter().filter(|c| c.is_printable()).map(|c| c.solid.flipped()).collect();
    let printable = TriMesh::merge_all(std::iter::once(&shell.envelope).chain(cavities.iter()));
    if !printable.is_closed() {
        return Err(Error::BooleanFailure(format!(
            "printable solid has {} boundary edges",
            printable.boundary_edge_count()
        )));
    }
    let report = CellReport::from_cells(&cells);
    Ok(DisplayModel {
        shell,
        cells,
        printable,
        report,
    })
}

fn seals(cell: &Cell, envelope: &Bvh) -> bool {
    cell.solid.is_closed()
        && cell.volume >= MIN_CELL_VOLUME
        && envelope.contains(&cell.solid.vertices()[0])
        && !envelope.touches_mesh(&cell.solid, 1e-9)
}
