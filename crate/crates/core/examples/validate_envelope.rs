//! Checks a few cell specs against the printable envelope.

use magdisplay::constraints::{limits, validate_spec, CellSpec, PrinterProfile, Shape};

fn main() {
    let profile = PrinterProfile::default();
    println!("{}", serde_json::to_string_pretty(&limits(&profile)).unwrap());
    let specs = [
        CellSpec::new(Shape::Hexagon, 4.0, 1.0, 5.0, 0.6),
        CellSpec::new(Shape::Circle, 2.0, 1.0, 5.0, 0.6),
        CellSpec::new(Shape::Square, 7.0, 0.2, 6.0, 1.2),
    ];
    for spec in &specs {
        let violations = validate_spec(spec, &profile);
        println!("{} {} mm: {} violation(s)", spec.shape.name(), spec.cross_section, violations.len());
        for v in violations {
            println!("  {}", v.message);
        }
    }
}
