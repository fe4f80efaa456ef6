//! Tooling for 3D-printed magnetophoretic displays.
//!
//! A closed triangle mesh is turned into a shelled model whose surface is a
//! matrix of sealed liquid cells, and slicer G-code is rewritten so that a
//! dual-nozzle FDM printer injects the magnetic liquid into each cell at the
//! right layer.
//!
//! The stages, in pipeline order:
//!
//! - [`mesh`]: triangle meshes, file IO, offsetting, remeshing, slicing,
//!   booleans and volume queries.
//! - [`constraints`]: the printable cell envelope and liquid recipes.
//! - [`shell`]: the screen/body/screen sandwich around the input model.
//! - [`cells`]: cell placement, lofting, overlap resolution and assembly.
//! - [`planner`]: injection points found by top-down slicing.
//! - [`gcode`]: lossless G-code parsing and injection splicing.
//! - [`pipeline`]: the command layer shared by the CLI and the job service.
//!
//! ```no_run
//! use magdisplay::constraints::{CellSpec, PrinterProfile, Shape};
//! use magdisplay::mesh::primitives;
//! use magdisplay::pipeline;
//!
//! let mesh = primitives::icosphere(20.0, 16);
//! let spec = CellSpec::new(Shape::Hexagon, 4.0, 1.0, 5.0, 0.6);
//! let profile = PrinterProfile::default();
//! let generated = pipeline::cmd_generate(&mesh, &spec, &profile, false)?;
//! let plan = pipeline::cmd_plan(generated.model.as_ref().unwrap(), &profile);
//! println!("{} injection points", plan.points.len());
//! # Ok::<(), magdisplay::Error>(())
//! ```

pub mod cells;
pub mod constraints;
mod error;
pub mod gcode;
pub mod mesh;
pub mod pipeline;
pub mod planner;
pub mod shell;

pub use error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Point2 = nalgebra::Point2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;
