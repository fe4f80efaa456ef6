//! Largest inscribed circle of an L-shaped section.

use magdisplay::mesh::PlanarSection;
use magdisplay::planner::largest_inscribed_circle;
use magdisplay::Point2;

fn main() {
    let corners = [(0.0, 0.0), (5.0, 0.0), (5.0, 2.0), (2.0, 2.0), (2.0, 5.0), (0.0, 5.0)];
    let section = PlanarSection {
        z: 0.0,
        loops: vec![corners.iter().map(|&(x, y)| Point2::new(x, y)).collect()],
    };
    let (c, r) = largest_inscribed_circle(&section);
    println!("centre ({:.3}, {:.3}), diameter {:.3} mm", c.x, c.y, 2.0 * r);
}
