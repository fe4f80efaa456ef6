//! The 40 x 40 mm plate at square sizes 6 down to 3 mm.

use magdisplay::constraints::{CellSpec, PrinterProfile, Shape};
use magdisplay::mesh::primitives;
use magdisplay::pipeline::cmd_pipeline;

fn main() -> magdisplay::Result<()> {
    let plate = primitives::sheet(40.0, 40.0, 1, 1);
    for k in 0..7 {
        let side = 6.0 - 0.5 * k as f64;
        let spec = CellSpec::new(Shape::Square, side, 1.0, 5.0, 0.6);
        let job = cmd_pipeline(&plate, None, &spec, &PrinterProfile::default())?;
        let model = job.model().unwrap();
        let plan = job.plan_result().unwrap();
        println!(
            "{side:.1} mm: {} cells, {} planned, {:.0} mm3 of liquid",
            model.report.printable(),
            plan.points.len(),
            plan.total_volume
        );
    }
    Ok(())
}
