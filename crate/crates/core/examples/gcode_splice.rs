//! Splices one injection into slicer G-code and prints the inserted series.

use magdisplay::constraints::PrinterProfile;
use magdisplay::gcode::inject::{SERIES_BEGIN, SERIES_END};
use magdisplay::gcode::synth::{synthesize, Flavor};
use magdisplay::mesh::primitives;
use magdisplay::pipeline::cmd_postprocess;
use magdisplay::planner::{InjectionPlan, InjectionPoint};
use magdisplay::Vec3;

fn main() -> magdisplay::Result<()> {
    let part = primitives::cylinder(10.0, 3.0, 32, 0.0).translated(&Vec3::new(117.5, 117.5, 0.0));
    let gcode = synthesize(&part, 0.2, Flavor::Prusa);
    let plan = InjectionPlan {
        points: vec![InjectionPoint {
            cell_id: 0,
            x: 117.5,
            y: 117.5,
            z: 2.0,
            layer_index: 9,
            fill_volume: 45.0,
            inscribed_diameter: 3.0,
        }],
        unplannable: Vec::new(),
        total_volume: 45.0,
    };
    let out = cmd_postprocess(&gcode, &plan, &PrinterProfile::default())?;
    let series = out
        .gcode
        .lines()
        .skip_while(|l| !l.starts_with(SERIES_BEGIN))
        .take_while(|l| !l.starts_with(SERIES_END));
    for line in series {
        println!("{line}");
    }
    println!("{SERIES_END}");
    println!("{}", serde_json::to_string_pretty(&out.audit).unwrap());
    Ok(())
}
