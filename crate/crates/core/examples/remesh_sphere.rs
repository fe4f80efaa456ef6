//! Remeshes an offset surface to the cell pitch; vertices become cell centres.

use magdisplay::mesh::{offset_mesh, primitives, remesh_isotropic};

fn main() -> magdisplay::Result<()> {
    let outer = offset_mesh(&primitives::lumpy_sphere(15.0, 22), 5.0)?;
    let pitch = 5.0;
    let r = remesh_isotropic(&outer, pitch)?;
    let lengths = r.edge_lengths();
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    let in_band = lengths.iter().filter(|&&l| (l - pitch).abs() <= 0.2 * pitch).count();
    println!(
        "{} -> {} vertices, mean edge {mean:.3} mm, {:.1}% within 20% of pitch",
        outer.vertices().len(),
        r.vertices().len(),
        100.0 * in_band as f64 / lengths.len() as f64
    );
    Ok(())
}
