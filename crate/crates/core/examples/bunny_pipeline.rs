//! Full pipeline on a ~10k-face closed scan stand-in; writes all artifacts.

use magdisplay::constraints::{CellSpec, PrinterProfile, Shape};
use magdisplay::mesh::primitives;
use magdisplay::pipeline::{cmd_pipeline, write_artifacts};

fn main() -> magdisplay::Result<()> {
    let mesh = primitives::lumpy_sphere(15.0, 22);
    let spec = CellSpec::new(Shape::Hexagon, 4.0, 1.0, 5.0, 0.6);
    let t = std::time::Instant::now();
    let job = cmd_pipeline(&mesh, None, &spec, &PrinterProfile::default())?;
    let dir = std::env::temp_dir().join("magdisplay_bunny");
    write_artifacts(&dir, job.artifacts())?;
    println!("{}", serde_json::to_string_pretty(&job.summary()).unwrap());
    println!("done in {:?}, artifacts in {}", t.elapsed(), dir.display());
    Ok(())
}
