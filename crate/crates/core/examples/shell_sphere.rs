//! Builds the screen/body/screen sandwich around a sphere and writes it as STL.

use magdisplay::constraints::{CellSpec, Shape};
use magdisplay::mesh::primitives;
use magdisplay::shell::build_shell;

fn main() -> magdisplay::Result<()> {
    let spec = CellSpec::new(Shape::Hexagon, 4.0, 1.0, 5.0, 0.6);
    let shell = build_shell(&primitives::icosphere(15.0, 12), &spec)?;
    for (name, part) in [("s_in", &shell.s_in), ("body", &shell.body), ("s_out", &shell.s_out)] {
        println!("{name}: {:.1} mm3, closed {}", part.volume(), part.is_closed());
    }
    let dir = std::env::temp_dir().join("magdisplay_shell");
    shell.write_debug_stls(&dir)?;
    println!("surfaces written to {}", dir.display());
    Ok(())
}
