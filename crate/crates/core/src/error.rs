use std::path::PathBuf;

use crate::constraints::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("mesh is not closed")]
    NotClosed,
    #[error("inward offset of {distance} mm inverts {inverted_faces} faces")]
    OffsetCollapse { distance: f64, inverted_faces: usize },
    #[error("remeshing did not converge: {in_band:.1}% of edges within tolerance after {iterations} iterations")]
    RemeshDiverged { in_band: f64, iterations: usize },
    #[error("plane z = {z} misses the solid")]
    EmptySection { z: f64 },
    #[error("boolean operation failed: {0}")]
    BooleanFailure(String),
    #[error("cell spec violates the printable envelope ({} violations)", .0.len())]
    SpecInvalid(Vec<Violation>),
    #[error("mixture ratio has no positive part")]
    ZeroRatio,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no cell centers could be placed: {0}")]
    EmptyPlacement(String),
    #[error("projection ray from cell {cell_id} leaves the shell")]
    ProjectionMiss { cell_id: usize },
    #[error("no layers found in G-code")]
    NoLayersFound,
    #[error("target ({x:.3}, {y:.3}) is outside the bed")]
    OutOfBed { x: f64, y: f64 },
    #[error("plan points do not match any layer: {}", format_mismatches(.0))]
    LayerMismatch(Vec<(usize, f64)>),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid job state: {0}")]
    JobState(String),
}

fn format_mismatches(points: &[(usize, f64)]) -> String {
    points
        .iter()
        .map(|(id, z)| format!("cell {id} at z={z:.3}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    /// Stable machine-readable code, shared by CLI exit reports and service payloads.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io_error",
            Error::Parse(_) => "parse_error",
            Error::InvalidMesh(_) => "invalid_mesh",
            Error::NotClosed => "not_closed",
            Error::OffsetCollapse { .. } => "offset_collapse",
            Error::RemeshDiverged { .. } => "remesh_diverged",
            Error::EmptySection { .. } => "empty_section",
            Error::BooleanFailure(_) => "boolean_failure",
            Error::SpecInvalid(_) => "spec_invalid",
            Error::ZeroRatio => "zero_ratio",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::EmptyPlacement(_) => "empty_placement",
            Error::ProjectionMiss { .. } => "projection_miss",
            Error::NoLayersFound => "no_layers_found",
            Error::OutOfBed { .. } => "out_of_bed",
            Error::LayerMismatch(_) => "layer_mismatch",
            Error::Config(_) => "config_error",
            Error::JobState(_) => "job_state",
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Parse(_) | Error::Config(_) | Error::InvalidArgument(_) => 4,
            Error::SpecInvalid(_) | Error::ZeroRatio => 5,
            Error::InvalidMesh(_) | Error::NotClosed => 6,
            Error::OffsetCollapse { .. }
            | Error::RemeshDiverged { .. }
            | Error::EmptySection { .. }
            | Error::BooleanFailure(_)
            | Error::EmptyPlacement(_)
            | Error::ProjectionMiss { .. } => 7,
            Error::NoLayersFound | Error::LayerMismatch(_) | Error::OutOfBed { .. } => 8,
            Error::JobState(_) => 9,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
