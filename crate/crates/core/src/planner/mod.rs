//! Injection points found by slicing each cell top-down, and the height-sorted plan.

pub mod inscribed;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{Cell, DisplayModel};
use crate::constraints::PrinterProfile;
use crate::mesh::{partial_volume_below, slice_at};

pub use inscribed::{largest_inscribed_circle, largest_inscribed_circle_with, signed_distance};

/// Where and how much liquid goes into one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectionPoint {
    pub cell_id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub layer_index: usize,
    #[serde(rename = "fill_volume_mm3")]
    pub fill_volume: f64,
    #[serde(rename = "inscribed_diameter_mm")]
    pub inscribed_diameter: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnplannableReason {
    /// No layer above the fill threshold opens wider than the injector.
    NoOpening,
}

impl fmt::Display for UnplannableReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnplannableReason::NoOpening => f.write_str("no_opening"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unplannable {
    pub cell_id: usize,
    pub reason: UnplannableReason,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PlanOutcome {
    Point(InjectionPoint),
    Unplannable(Unplannable),
}

/// Injection points sorted by height, then cell id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InjectionPlan {
    pub points: Vec<InjectionPoint>,
    pub unplannable: Vec<Unplannable>,
    #[serde(rename = "total_volume_mm3")]
    pub total_volume: f64,
}

impl InjectionPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans serialize")
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::Error::Parse(format!("plan JSON: {e}")))
    }

    /// True when the liquid needed exceeds one syringe load.
    pub fn exceeds_syringe(&self, profile: &PrinterProfile) -> bool {
        self.total_volume > profile.syringe_capacity
    }

    /// Distinct injection layers, ascending.
    pub fn layers(&self) -> Vec<usize> {
        let mut layers: Vec<usize> = self.points.iter().map(|p| p.layer_index).collect();
        layers.dedup();
        layers
    }
}

/// Index `k` of the layer plane `z = k × layer_height`.
fn plane_index(z: f64, layer: f64) -> i64 {
    (z / layer + 1e-9).floor() as i64
}

/// Walks layer planes from the cell top downwards and returns the first one
/// whose section admits a circle wider than the injector.
pub fn plan_cell(cell: &Cell, profile: &PrinterProfile) -> PlanOutcome {
    let layer = profile.layer_height;
    let needed = profile.injector_nozzle_diameter + profile.injection_clearance;
    let bounds = cell.solid.bounds();
    let volume = cell.volume;
    let unplannable = PlanOutcome::Unplannable(Unplannable {
        cell_id: cell.id,
        reason: UnplannableReason::NoOpening,
    });
    if cell.solid.is_empty() || volume <= 0.0 {
        return unplannable;
    }
    let mut k = plane_index(bounds.max.z, layer);
    if (k as f64 * layer - bounds.max.z).abs() <= 1e-9 {
        k -= 1;
    }
    while k > 0 && k as f64 * layer > bounds.min.z {
        let z = k as f64 * layer;
        let below = partial_volume_below(&cell.solid, z);
        if below < profile.fill_threshold * volume {
            break;
        }
        if let Ok(section) = slice_at(&cell.solid, z) {
            let (c, r) = largest_inscribed_circle(&section);
            if 2.0 * r > needed {
                return PlanOutcome::Point(InjectionPoint {
                    cell_id: cell.id,
                    x: c.x,
                    y: c.y,
                    z,
                    layer_index: (k - 1) as usize,
                    fill_volume: below,
                    inscribed_diameter: 2.0 * r,
                });
            }
        }
        k -= 1;
    }
    unplannable
}

/// Plans every ok/shrunk cell of `model`.
pub fn build_plan(model: &DisplayModel, profile: &PrinterProfile) -> InjectionPlan {
    let cells: Vec<&Cell> = model.printable_cells().collect();
    plan_cells(&cells, profile)
}

pub fn plan_cells(cells: &[&Cell], profile: &PrinterProfile) -> InjectionPlan {
    let outcomes: Vec<PlanOutcome> = cells.par_iter().map(|c| plan_cell(c, profile)).collect();
    let mut plan = InjectionPlan::default();
    for outcome in outcomes {
        match outcome {
            PlanOutcome::Point(p) => plan.points.push(p),
            PlanOutcome::Unplannable(u) => plan.unplannable.push(u),
        }
    }
    plan.points.sort_by(|a, b| a.layer_index.cmp(&b.layer_index).then(a.cell_id.cmp(&b.cell_id)));
    plan.unplannable.sort_by_key(|u| u.cell_id);
    plan.total_volume = plan.points.iter().map(|p| p.fill_volume).sum();
    if plan.exceeds_syringe(profile) {
        log::warn!(
            "plan needs {:.0} mm³ of liquid, more than the {:.0} mm³ syringe",
            plan.total_volume,
            profile.syringe_capacity
        );
    }
    if !plan.unplannable.is_empty() {
        log::warn!("{} cells have no injectable layer and will print dry", plan.unplannable.len());
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::CellStatus;
    use crate::mesh::{primitives, TriMesh};
    use crate::{Point3, Vec3};
    use approx::assert_relative_eq;

    fn cell(id: usize, solid: TriMesh) -> Cell {
        let volume = solid.volume();
        Cell {
            id,
            center: Point3::origin(),
            normal: Vec3::z(),
            cross_section: 4.0,
            solid,
            volume,
            status: CellStatus::Ok,
        }
    }

    fn point(outcome: PlanOutcome) -> InjectionPoint {
        match outcome {
            PlanOutcome::Point(p) => p,
            PlanOutcome::Unplannable(u) => panic!("unplannable: {u:?}"),
        }
    }

    #[test]
    fn cylinder_injects_one_layer_down() {
        let c = cell(0, primitives::cylinder(2.0, 5.0, 96, 1.0));
        let p = point(plan_cell(&c, &PrinterProfile::default()));
        assert_relative_eq!(p.z, 5.8, epsilon = 1e-9);
        assert_eq!(p.layer_index, 28);
        assert!(p.inscribed_diameter > 2.1 && p.inscribed_diameter <= 4.0);
        assert!(p.fill_volume >= 0.96 * c.volume - 1e-9);
        assert!(p.x.abs() < 0.01 && p.y.abs() < 0.01);
    }

    #[test]
    fn inverted_cone_opens_at_depth_0_8() {
        let c = cell(0, primitives::frustum(3.0, 0.75, 5.0, 96, 0.0));
        let p = point(plan_cell(&c, &PrinterProfile::default()));
        assert_relative_eq!(p.z, 4.2, epsilon = 1e-9);
    }

    #[test]
    fn needle_is_unplannable() {
        let c = cell(7, primitives::cylinder(0.9, 5.0, 48, 0.0));
        assert_eq!(
            plan_cell(&c, &PrinterProfile::default()),
            PlanOutcome::Unplannable(Unplannable {
                cell_id: 7,
                reason: UnplannableReason::NoOpening
            })
        );
    }

    #[test]
    fn ties_sort_by_id() {
        let cells: Vec<Cell> = [3, 1, 2, 0]
            .iter()
            .map(|&id| cell(id, primitives::cuboid(Point3::new(id as f64 * 5.0, 0.0, 0.0), Point3::new(id as f64 * 5.0 + 3.0, 3.0, 5.0))))
            .collect();
        let refs: Vec<&Cell> = cells.iter().collect();
        let plan = plan_cells(&refs, &PrinterProfile::default());
        let ids: Vec<usize> = plan.points.iter().map(|p| p.cell_id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        assert!(plan.points.iter().all(|p| p.z == plan.points[0].z));
        assert_relative_eq!(plan.total_volume, 4.0 * 9.0 * 4.8, max_relative = 1e-9);
        let back = InjectionPlan::from_json(&plan.to_json()).unwrap();
        assert_eq!(back, plan);
    }
}
