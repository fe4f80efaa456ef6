//! The printable cell envelope, printer profiles and liquid recipes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest printable inscribed diameter of a cell opening (mm).
pub const INSCRIBED_MIN: f64 = 2.5;
/// Largest inscribed diameter whose overhanging lid still closes (mm).
pub const INSCRIBED_MAX: f64 = 6.5;
pub const SCREEN_MIN: f64 = 0.6;
pub const SCREEN_MAX: f64 = 1.0;
pub const DEPTH_MAX: f64 = 5.0;
/// Slack applied to every bound comparison.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Oil : talc : iron : dye by weight for a persistent display.
pub const REFERENCE_RATIO: [f64; 4] = [25.0, 35.0, 40.0, 1.0];
/// The thinnest mixture known to allow shake-to-erase.
pub const SHAKE_TO_ERASE_RATIO: [f64; 4] = [20.0, 20.0, 40.0, 1.0];
/// Talc/oil at or above this is known to hold an image.
pub const PERSISTENT_TALC_OIL: f64 = 35.0 / 25.0;
/// Talc/oil at or below this lets the powder precipitate.
pub const NON_PERSISTENT_TALC_OIL: f64 = 20.0 / 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Square,
    Hexagon,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Circle, Shape::Square, Shape::Hexagon];

    /// Polygon vertex count used when the cross-section is built.
    pub fn sides(self) -> usize {
        match self {
            Shape::Circle => 24,
            Shape::Square => 4,
            Shape::Hexagon => 6,
        }
    }

    /// Inscribed diameter divided by the cross-section size.
    pub fn inscribed_ratio(self) -> f64 {
        match self {
            Shape::Circle | Shape::Square => 1.0,
            Shape::Hexagon => 3f64.sqrt() / 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Circle => "circle",
            Shape::Square => "square",
            Shape::Hexagon => "hexagon",
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "circle" => Ok(Shape::Circle),
            "square" => Ok(Shape::Square),
            "hexagon" | "hex" => Ok(Shape::Hexagon),
            other => Err(Error::InvalidArgument(format!("unknown shape {other:?}"))),
        }
    }
}

/// Diameter of the circle inscribed in the cross-section.
///
/// `cross_section` is the circle diameter, the square side, or the hexagon's
/// across-corners diagonal.
pub fn inscribed_diameter(shape: Shape, cross_section: f64) -> f64 {
    cross_section * shape.inscribed_ratio()
}

/// How the shell is grown from the input surface.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellMode {
    /// Cells and screens are built outside the input surface.
    #[default]
    Outward,
    /// Everything is built inside; the input surface stays the exterior.
    Inward,
    /// The input is an open sheet extruded along its normals.
    SingleSided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub shape: Shape,
    /// mm; see [`inscribed_diameter`] for the per-shape meaning.
    pub cross_section: f64,
    /// Distance between neighbouring cells (mm).
    pub gap: f64,
    /// H_cell: distance between the two screens (mm).
    pub cell_depth: f64,
    /// H_os: thickness of each screen layer (mm).
    pub screen_thickness: f64,
    /// `None` picks outward for closed meshes and single-sided for sheets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell_mode: Option<ShellMode>,
}

impl CellSpec {
    pub fn new(shape: Shape, cross_section: f64, gap: f64, cell_depth: f64, screen_thickness: f64) -> Self {
        CellSpec {
            shape,
            cross_section,
            gap,
            cell_depth,
            screen_thickness,
            shell_mode: None,
        }
    }

    pub fn with_shell_mode(mut self, mode: ShellMode) -> Self {
        self.shell_mode = Some(mode);
        self
    }

    pub fn inscribed_diameter(&self) -> f64 {
        inscribed_diameter(self.shape, self.cross_section)
    }

    /// Centre-to-centre spacing of neighbouring cells.
    pub fn pitch(&self) -> f64 {
        self.cross_section + self.gap
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("cell spec: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("cell spec serialises")
    }
}

impl Default for CellSpec {
    fn default() -> Self {
        CellSpec::new(Shape::Hexagon, 4.0, 1.0, 5.0, 0.6)
    }
}

/// Machine envelope of the dual-nozzle printer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrinterProfile {
    pub fdm_nozzle_diameter: f64,
    pub injector_nozzle_diameter: f64,
    pub layer_height: f64,
    pub max_overhang: f64,
    /// Printable volume, x/y/z (mm).
    pub bed_size: [f64; 3],
    /// Syringe tip minus FDM nozzle tip (mm).
    pub injector_offset: [f64; 3],
    pub dump_area: [f64; 2],
    pub brush_area: [f64; 2],
    /// Height of the syringe tip above the injection plane while plunging.
    pub tip_height: f64,
    /// Z hop before every travel inside an injection series.
    pub travel_lift: f64,
    /// Liquid pulled back after each injection (mm³). Needs calibration.
    pub retraction_volume: f64,
    /// Liquid over-purged into the dump area per series (mm³). Needs calibration.
    pub purge_volume: f64,
    /// Filament pulled back before an injection series (mm of filament).
    pub filament_retract: f64,
    /// Extra filament pushed through on re-prime (mm of filament).
    pub filament_prime_extra: f64,
    /// Injector E-axis travel per mm³ of liquid.
    pub e_per_mm3: f64,
    pub travel_feedrate: f64,
    pub injection_feedrate: f64,
    pub z_feedrate: f64,
    pub wipe_length: f64,
    /// Minimum fraction of the cell that must lie below the injection plane.
    pub fill_threshold: f64,
    /// Added to the injector diameter in the opening test.
    pub injection_clearance: f64,
    pub syringe_capacity: f64,
    /// G-code template run after the syringe reaches its target. `{x}`,
    /// `{y}`, `{z}` are replaced by the syringe tip position.
    pub engage_macro: String,
    pub disengage_macro: String,
}

impl Default for PrinterProfile {
    fn default() -> Self {
        PrinterProfile {
            fdm_nozzle_diameter: 0.4,
            injector_nozzle_diameter: 2.1,
            layer_height: 0.2,
            max_overhang: 7.0,
            bed_size: [235.0, 235.0, 250.0],
            injector_offset: [30.0, 0.0, 0.0],
            dump_area: [40.0, 10.0],
            brush_area: [225.0, 10.0],
            tip_height: 1.0,
            travel_lift: 2.0,
            retraction_volume: 10.0,
            purge_volume: 40.0,
            filament_retract: 6.5,
            filament_prime_extra: 1.0,
            e_per_mm3: 0.01,
            travel_feedrate: 6000.0,
            injection_feedrate: 120.0,
            z_feedrate: 600.0,
            wipe_length: 20.0,
            fill_threshold: 0.8,
            injection_clearance: 0.0,
            syringe_capacity: 30_000.0,
            engage_macro: "M400\n; injector down at X{x} Y{y} Z{z}".into(),
            disengage_macro: "M400\n; injector up".into(),
        }
    }
}

impl PrinterProfile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: PrinterProfile =
            toml::from_str(text).map_err(|e| Error::Config(format!("printer profile: {e}")))?;
        let problems = validate_profile(&p);
        if problems.is_empty() {
            Ok(p)
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("profile serialises")
    }

    pub fn inside_bed(&self, x: f64, y: f64) -> bool {
        (0.0..=self.bed_size[0]).contains(&x) && (0.0..=self.bed_size[1]).contains(&y)
    }
}

/// Human-readable problems with a profile; empty when usable.
pub fn validate_profile(p: &PrinterProfile) -> Vec<String> {
    let mut out = Vec::new();
    let positive = [
        ("fdm_nozzle_diameter", p.fdm_nozzle_diameter),
        ("injector_nozzle_diameter", p.injector_nozzle_diameter),
        ("layer_height", p.layer_height),
        ("max_overhang", p.max_overhang),
        ("bed_size.x", p.bed_size[0]),
        ("bed_size.y", p.bed_size[1]),
        ("bed_size.z", p.bed_size[2]),
        ("e_per_mm3", p.e_per_mm3),
        ("travel_feedrate", p.travel_feedrate),
        ("injection_feedrate", p.injection_feedrate),
        ("z_feedrate", p.z_feedrate),
        ("syringe_capacity", p.syringe_capacity),
    ];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            out.push(format!("{name} must be positive, got {v}"));
        }
    }
    let non_negative = [
        ("tip_height", p.tip_height),
        ("travel_lift", p.travel_lift),
        ("retraction_volume", p.retraction_volume),
        ("purge_volume", p.purge_volume),
        ("filament_retract", p.filament_retract),
        ("filament_prime_extra", p.filament_prime_extra),
        ("wipe_length", p.wipe_length),
        ("injection_clearance", p.injection_clearance),
    ];
    for (name, v) in non_negative {
        if !(v >= 0.0 && v.is_finite()) {
            out.push(format!("{name} must be non-negative, got {v}"));
        }
    }
    if !(p.fill_threshold > 0.0 && p.fill_threshold <= 1.0) {
        out.push(format!("fill_threshold must be in (0, 1], got {}", p.fill_threshold));
    }
    for (name, [x, y]) in [("dump_area", p.dump_area), ("brush_area", p.brush_area)] {
        if !p.inside_bed(x, y) {
            out.push(format!("{name} ({x}, {y}) is outside the bed"));
        }
    }
    if p.inside_bed(p.brush_area[0], p.brush_area[1])
        && !p.inside_bed(p.brush_area[0] - p.wipe_length, p.brush_area[1])
    {
        out.push("brush wipe pass leaves the bed".into());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    TooSmall,
    TooLarge,
    ScreenTooThin,
    ScreenTooThick,
    TooDeep,
    GapTooNarrow,
    NonPositive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub field: String,
    pub value: f64,
    pub bound: f64,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, field: &str, value: f64, bound: f64, message: String) -> Self {
        Violation {
            code,
            field: field.into(),
            value,
            bound,
            message,
        }
    }
}

/// Every way `spec` falls outside the printable envelope. Empty means printable.
pub fn validate_spec(spec: &CellSpec, profile: &PrinterProfile) -> Vec<Violation> {
    use ViolationCode::*;
    let mut out = Vec::new();
    let fields = [
        ("cross_section", spec.cross_section),
        ("cell_depth", spec.cell_depth),
        ("screen_thickness", spec.screen_thickness),
    ];
    for (name, v) in fields {
        if !(v > 0.0 && v.is_finite()) {
            out.push(Violation::new(NonPositive, name, v, 0.0, format!("{name} must be positive")));
        }
    }
    let d = spec.inscribed_diameter();
    if spec.cross_section > 0.0 {
        if d < INSCRIBED_MIN - BOUND_TOLERANCE {
            out.push(Violation::new(
                TooSmall,
                "cross_section",
                d,
                INSCRIBED_MIN,
                format!("inscribed diameter {d:.3} < {INSCRIBED_MIN}"),
            ));
        }
        if d > INSCRIBED_MAX + BOUND_TOLERANCE {
            out.push(Violation::new(
                TooLarge,
                "cross_section",
                d,
                INSCRIBED_MAX,
                format!("inscribed diameter {d:.3} > {INSCRIBED_MAX}"),
            ));
        }
    }
    let s = spec.screen_thickness;
    if s > 0.0 && s < SCREEN_MIN - BOUND_TOLERANCE {
        out.push(Violation::new(
            ScreenTooThin,
            "screen_thickness",
            s,
            SCREEN_MIN,
            format!("screen {s:.3} < {SCREEN_MIN}"),
        ));
    }
    if s > SCREEN_MAX + BOUND_TOLERANCE {
        out.push(Violation::new(
            ScreenTooThick,
            "screen_thickness",
            s,
            SCREEN_MAX,
            format!("screen {s:.3} > {SCREEN_MAX}"),
        ));
    }
    if spec.cell_depth > DEPTH_MAX + BOUND_TOLERANCE {
        out.push(Violation::new(
            TooDeep,
            "cell_depth",
            spec.cell_depth,
            DEPTH_MAX,
            format!("depth {:.3} > {DEPTH_MAX}", spec.cell_depth),
        ));
    }
    let wall = profile.fdm_nozzle_diameter;
    if !(spec.gap >= wall - BOUND_TOLERANCE) {
        out.push(Violation::new(
            GapTooNarrow,
            "gap",
            spec.gap,
            wall,
            format!("gap {:.3} < extrusion width {wall}", spec.gap),
        ));
    }
    out
}

/// Envelope bounds as served to clients, so no UI hard-codes them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub inscribed_diameter: Range,
    pub screen_thickness: Range,
    pub cell_depth: Range,
    pub gap: Range,
    /// Cross-section bounds per shape, derived from the inscribed bounds.
    pub cross_section: Vec<ShapeRange>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeRange {
    pub shape: Shape,
    pub min: f64,
    pub max: f64,
}

pub fn limits(profile: &PrinterProfile) -> Limits {
    Limits {
        inscribed_diameter: Range {
            min: Some(INSCRIBED_MIN),
            max: Some(INSCRIBED_MAX),
        },
        screen_thickness: Range {
            min: Some(SCREEN_MIN),
            max: Some(SCREEN_MAX),
        },
        cell_depth: Range {
            min: None,
            max: Some(DEPTH_MAX),
        },
        gap: Range {
            min: Some(profile.fdm_nozzle_diameter),
            max: None,
        },
        cross_section: Shape::ALL
            .iter()
            .map(|&shape| ShapeRange {
                shape,
                min: INSCRIBED_MIN / shape.inscribed_ratio(),
                max: INSCRIBED_MAX / shape.inscribed_ratio(),
            })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Persistence {
    Persistent,
    NonPersistent,
    /// Between the two measured mixtures; no viscosity model to decide.
    Unknown,
}

/// Absolute grams of each component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecipe {
    pub oil: f64,
    pub talc: f64,
    pub iron: f64,
    pub dye: f64,
    pub persistence: Persistence,
}

impl MixtureRecipe {
    pub fn total(&self) -> f64 {
        self.oil + self.talc + self.iron + self.dye
    }

    pub fn is_persistent(&self) -> bool {
        self.persistence == Persistence::Persistent
    }
}

/// Splits `total_weight` grams over oil : talc : iron : dye `ratio`.
pub fn mixture_for(total_weight: f64, ratio: [f64; 4]) -> Result<MixtureRecipe> {
    if !(total_weight > 0.0 && total_weight.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "total weight must be positive, got {total_weight}"
        )));
    }
    if ratio.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "ratio parts must be non-negative, got {ratio:?}"
        )));
    }
    let sum: f64 = ratio.iter().sum();
    if sum <= 0.0 {
        return Err(Error::ZeroRatio);
    }
    let grams = ratio.map(|r| total_weight * r / sum);
    Ok(MixtureRecipe {
        oil: grams[0],
        talc: grams[1],
        iron: grams[2],
        dye: grams[3],
        persistence: persistence(ratio[0], ratio[1]),
    })
}

fn persistence(oil: f64, talc: f64) -> Persistence {
    if oil <= 0.0 {
        return if talc > 0.0 {
            Persistence::Persistent
        } else {
            Persistence::Unknown
        };
    }
    let r = talc / oil;
    if r >= PERSISTENT_TALC_OIL - BOUND_TOLERANCE {
        Persistence::Persistent
    } else if r <= NON_PERSISTENT_TALC_OIL + BOUND_TOLERANCE {
        Persistence::NonPersistent
    } else {
        Persistence::Unknown
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn codes(spec: &CellSpec) -> Vec<ViolationCode> {
        validate_spec(spec, &PrinterProfile::default())
            .into_iter()
            .map(|v| v.code)
            .collect()
    }

    #[test]
    fn inscribed_diameters() {
        assert_eq!(inscribed_diameter(Shape::Square, 3.0), 3.0);
        assert_relative_eq!(inscribed_diameter(Shape::Hexagon, 4.0), 3.464, epsilon = 1e-3);
        assert_eq!(inscribed_diameter(Shape::Circle, 6.5), 6.5);
    }

    #[test]
    fn reference_hexagon_is_printable() {
        assert!(codes(&CellSpec::new(Shape::Hexagon, 4.0, 1.0, 5.0, 0.6)).is_empty());
    }

    #[test]
    fn size_bounds() {
        let small = codes(&CellSpec::new(Shape::Circle, 2.0, 1.0, 5.0, 0.6));
        assert_eq!(small, vec![ViolationCode::TooSmall]);
        let large = codes(&CellSpec::new(Shape::Square, 7.0, 1.0, 5.0, 0.6));
        assert_eq!(large, vec![ViolationCode::TooLarge]);
    }

    #[test]
    fn screen_depth_and_gap() {
        let c = codes(&CellSpec::new(Shape::Square, 3.0, 0.2, 5.5, 1.2));
        assert_eq!(
            c,
            vec![ViolationCode::ScreenTooThick, ViolationCode::TooDeep, ViolationCode::GapTooNarrow]
        );
        let c = codes(&CellSpec::new(Shape::Square, 3.0, 1.0, 5.0, 0.5));
        assert_eq!(c, vec![ViolationCode::ScreenTooThin]);
        let c = codes(&CellSpec::new(Shape::Square, -3.0, 1.0, 5.0, 0.6));
        assert_eq!(c, vec![ViolationCode::NonPositive]);
    }

    #[test]
    fn violation_codes_roundtrip_json() {
        let v = validate_spec(&CellSpec::new(Shape::Circle, 2.0, 0.1, 9.0, 2.0), &PrinterProfile::default());
        let json = serde_json::to_string(&v).unwrap();
        let back: Vec<Violation> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert!(json.contains("\"TooSmall\""));
    }

    #[test]
    fn recipes() {
        let r = mixture_for(101.0, REFERENCE_RATIO).unwrap();
        assert_relative_eq!(r.oil, 25.0, epsilon = 1e-12);
        assert_relative_eq!(r.talc, 35.0, epsilon = 1e-12);
        assert_relative_eq!(r.iron, 40.0, epsilon = 1e-12);
        assert_relative_eq!(r.dye, 1.0, epsilon = 1e-12);
        assert!(r.is_persistent());

        let r = mixture_for(81.0, SHAKE_TO_ERASE_RATIO).unwrap();
        assert_relative_eq!(r.talc, 20.0, epsilon = 1e-12);
        assert_eq!(r.persistence, Persistence::NonPersistent);

        let r = mixture_for(50.0, [1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!((r.oil, r.talc, r.iron, r.dye), (25.0, 25.0, 0.0, 0.0));

        let r = mixture_for(10.0, [25.0, 30.0, 40.0, 1.0]).unwrap();
        assert_eq!(r.persistence, Persistence::Unknown);
    }

    #[test]
    fn recipe_errors() {
        assert_eq!(mixture_for(10.0, [0.0; 4]).unwrap_err().code(), "zero_ratio");
        assert_eq!(mixture_for(0.0, REFERENCE_RATIO).unwrap_err().code(), "invalid_argument");
        assert_eq!(
            mixture_for(1.0, [1.0, -1.0, 1.0, 1.0]).unwrap_err().code(),
            "invalid_argument"
        );
    }

    #[test]
    fn profile_toml_roundtrip_and_defaults() {
        let p = PrinterProfile::default();
        let back = PrinterProfile::from_toml_str(&p.to_toml_string()).unwrap();
        assert_eq!(back, p);
        let partial = PrinterProfile::from_toml_str("layer_height = 0.1\n").unwrap();
        assert_eq!(partial.layer_height, 0.1);
        assert_eq!(partial.injector_nozzle_diameter, 2.1);
        let err = PrinterProfile::from_toml_str("dump_area = [400.0, 10.0]\n").unwrap_err();
        assert_eq!(err.code(), "config_error");
    }

    #[test]
    fn spec_toml() {
        let s = CellSpec::from_toml_str(
            "shape = \"square\"\ncross_section = 3.0\ngap = 1.0\ncell_depth = 5.0\nscreen_thickness = 0.6\nshell_mode = \"single_sided\"\n",
        )
        .unwrap();
        assert_eq!(s.shell_mode, Some(ShellMode::SingleSided));
        assert_eq!(CellSpec::from_toml_str(&s.to_toml_string()).unwrap(), s);
    }

    #[test]
    fn limits_follow_profile() {
        let mut p = PrinterProfile::default();
        p.fdm_nozzle_diameter = 0.6;
        let l = limits(&p);
        assert_eq!(l.gap.min, Some(0.6));
        let hex = l.cross_section.iter().find(|r| r.shape == Shape::Hexagon).unwrap();
        assert_relative_eq!(inscribed_diameter(Shape::Hexagon, hex.min), INSCRIBED_MIN, epsilon = 1e-12);
    }
}
