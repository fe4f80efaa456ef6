//! Commands shared by the CLI and the job service. Both front ends call these
//! functions, so identical inputs give byte-identical artifacts.

pub mod job;
pub mod preview;

use std::path::Path;

use serde::Serialize;

use crate::cells::{self, place_cells, CellReport, DisplayModel};
use crate::constraints::{validate_profile, validate_spec, CellSpec, PrinterProfile, Violation};
use crate::gcode::{self, synth, AuditReport};
use crate::mesh::TriMesh;
use crate::planner::{build_plan, InjectionPlan};
use crate::shell::{build_shell, ShellModel};
use crate::{Error, Result, Vec3};

pub use job::{Job, JobState};
pub use preview::{build_scene, PreviewScene};

pub const DISPLAY_STL: &str = "display.stl";
pub const PREVIEW_JSON: &str = "preview.json";
pub const PLAN_JSON: &str = "plan.json";
pub const GCODE_OUT: &str = "injected.gcode";
pub const REPORT_JSON: &str = "report.json";

/// Files a full pipeline run leaves in the output directory.
pub const ARTIFACT_NAMES: [&str; 5] = [DISPLAY_STL, PREVIEW_JSON, PLAN_JSON, GCODE_OUT, REPORT_JSON];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub inscribed_diameter: f64,
    pub violations: Vec<Violation>,
    pub profile_problems: Vec<String>,
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("validation report serializes")
    }

    pub fn into_result(self) -> Result<Self> {
        if !self.violations.is_empty() {
            Err(Error::SpecInvalid(self.violations))
        } else if !self.profile_problems.is_empty() {
            Err(Error::Config(self.profile_problems.join("; ")))
        } else {
            Ok(self)
        }
    }
}

pub fn cmd_validate(spec: &CellSpec, profile: &PrinterProfile) -> ValidationReport {
    let violations = validate_spec(spec, profile);
    let profile_problems = validate_profile(profile);
    ValidationReport {
        valid: violations.is_empty() && profile_problems.is_empty(),
        inscribed_diameter: spec.inscribed_diameter(),
        violations,
        profile_problems,
    }
}

/// Output of [`cmd_generate`]. `model` is `None` on the preview-only path.
#[derive(Clone, Debug)]
pub struct Generated {
    pub model: Option<DisplayModel>,
    pub preview: PreviewScene,
    pub report: CellReport,
    /// Applied to the input so the envelope sits centred on the bed at z = 0.
    pub translation: Vec3,
}

impl Generated {
    pub fn preview_json(&self) -> String {
        serde_json::to_string(&self.preview).expect("preview scene serializes")
    }
}

/// Moves every shell surface so the envelope is centred on the bed and rests on z = 0.
pub fn place_on_bed(shell: ShellModel, profile: &PrinterProfile) -> (ShellModel, Vec3) {
    let b = shell.envelope.bounds();
    let c = b.center();
    let t = Vec3::new(profile.bed_size[0] / 2.0 - c.x, profile.bed_size[1] / 2.0 - c.y, -b.min.z);
    let e = b.extent();
    if e.x > profile.bed_size[0] || e.y > profile.bed_size[1] || e.z > profile.bed_size[2] {
        log::warn!(
            "model {:.1} x {:.1} x {:.1} mm exceeds the {:?} mm bed",
            e.x,
            e.y,
            e.z,
            profile.bed_size
        );
    }
    let m = |mesh: &TriMesh| mesh.translated(&t);
    let moved = ShellModel {
        mode: shell.mode,
        cell_depth: shell.cell_depth,
        screen_thickness: shell.screen_thickness,
        m: m(&shell.m),
        m_prime: m(&shell.m_prime),
        cell_floor: m(&shell.cell_floor),
        s_out: m(&shell.s_out),
        s_in: m(&shell.s_in),
        body: m(&shell.body),
        envelope: m(&shell.envelope),
    };
    (moved, t)
}

/// Shell, cells and preview. With `preview_only` the cells are lofted and
/// checked for overlaps but nothing is carved, so no booleans run.
pub fn cmd_generate(mesh: &TriMesh, spec: &CellSpec, profile: &PrinterProfile, preview_only: bool) -> Result<Generated> {
    cmd_validate(spec, profile).into_result()?;
    let (shell, translation) = place_on_bed(build_shell(mesh, spec)?, profile);
    let centers = place_cells(&shell, spec)?;
    if preview_only {
        let (cells, flagged_before) = cells::loft_and_resolve(&shell, spec, profile, &centers)?;
        let mut report = CellReport::from_cells(&cells);
        report.flagged_before_resolution = flagged_before;
        let preview = build_scene(&shell.m_prime, &cells, &report, true);
        return Ok(Generated {
            model: None,
            preview,
            report,
            translation,
        });
    }
    let model = cells::build_display_with_centers(shell, spec, profile, &centers)?;
    let preview = build_scene(&model.shell.m_prime, &model.cells, &model.report, false);
    Ok(Generated {
        report: model.report.clone(),
        model: Some(model),
        preview,
        translation,
    })
}

pub fn cmd_plan(model: &DisplayModel, profile: &PrinterProfile) -> InjectionPlan {
    build_plan(model, profile)
}

#[derive(Clone, Debug)]
pub struct Postprocessed {
    pub gcode: String,
    pub audit: AuditReport,
    pub checklist: Vec<String>,
}

/// Splices `plan` into slicer output and audits the result.
pub fn cmd_postprocess(gcode_in: &str, plan: &InjectionPlan, profile: &PrinterProfile) -> Result<Postprocessed> {
    let program = gcode::parse(gcode_in)?;
    let spliced = gcode::splice(&program, plan, profile)?;
    let text = gcode::emit(&spliced);
    let audit = gcode::audit(&text)?;
    Ok(Postprocessed {
        gcode: text,
        audit,
        checklist: slicer_checklist(profile),
    })
}

/// Slicer settings the injection routine relies on but cannot enforce.
pub fn slicer_checklist(profile: &PrinterProfile) -> Vec<String> {
    vec![
        "Reduce print speed to 50-60 % of the slicer default.".into(),
        "Enable bridge settings with default parameters so cell lids close.".into(),
        "Add supports only to external overhangs; cells must stay empty.".into(),
        format!(
            "Use a {} mm layer height, including the first layer, so injection planes land on layer tops.",
            profile.layer_height
        ),
        format!(
            "Place a prime tower or sacrificial print under the dump area at X{} Y{}.",
            profile.dump_area[0], profile.dump_area[1]
        ),
        format!(
            "Keep the bed clear around the brush at X{} Y{} for the {} mm wipe.",
            profile.brush_area[0], profile.brush_area[1], profile.wipe_length
        ),
        "Disable firmware tool offsets for T1; the injector offset is applied in the G-code.".into(),
        format!(
            "Purge ({} mm³) and retraction ({} mm³) volumes are placeholders; calibrate them on the machine.",
            profile.purge_volume, profile.retraction_volume
        ),
    ]
}

/// Where the G-code that was post-processed came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GcodeSource {
    Supplied,
    /// No slicer output given; perimeters were synthesized from the printable mesh.
    Synthesized,
}

/// Everything downstream tools need to judge a run, written as `report.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub validation: ValidationReport,
    pub translation: [f64; 3],
    pub cells: CellReport,
    pub injection_points: usize,
    pub unplannable: usize,
    pub injection_layers: usize,
    pub total_volume_mm3: f64,
    pub exceeds_syringe: bool,
    /// Overlapping, blank and unplannable cells together.
    pub flagged: usize,
    pub flagged_fraction: f64,
    pub gcode_source: GcodeSource,
    pub audit: AuditReport,
    pub slicer_checklist: Vec<String>,
}

impl RunReport {
    pub fn new(
        validation: ValidationReport,
        generated: &Generated,
        plan: &InjectionPlan,
        post: &Postprocessed,
        gcode_source: GcodeSource,
        profile: &PrinterProfile,
    ) -> Self {
        let cells = generated.report.clone();
        let flagged = cells.flagged() + plan.unplannable.len();
        let t = generated.translation;
        RunReport {
            validation,
            translation: [t.x, t.y, t.z],
            flagged_fraction: if cells.centers == 0 { 0.0 } else { flagged as f64 / cells.centers as f64 },
            flagged,
            cells,
            injection_points: plan.points.len(),
            unplannable: plan.unplannable.len(),
            injection_layers: plan.layers().len(),
            total_volume_mm3: plan.total_volume,
            exceeds_syringe: plan.exceeds_syringe(profile),
            gcode_source,
            audit: post.audit.clone(),
            slicer_checklist: post.checklist.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run report serializes")
    }
}

/// Stand-in slicer output for the printable mesh when none is supplied.
pub fn synthesize_gcode(model: &DisplayModel, profile: &PrinterProfile) -> String {
    synth::synthesize(&model.printable, profile.layer_height, synth::Flavor::Cura)
}

/// Validate, generate, plan and post-process in one go through a [`Job`].
pub fn cmd_pipeline(mesh: &TriMesh, gcode_in: Option<&str>, spec: &CellSpec, profile: &PrinterProfile) -> Result<Job> {
    let mut job = Job::new(0, "input", mesh.clone(), spec.clone(), profile.clone());
    job.generate()?;
    job.plan()?;
    job.postprocess(gcode_in)?;
    Ok(job)
}

/// Writes named artifacts into `dir`, creating it if needed.
pub fn write_artifacts<'a>(dir: impl AsRef<Path>, artifacts: impl IntoIterator<Item = (&'a str, &'a [u8])>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, bytes) in artifacts {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
