//! Command-line front end. Every subcommand goes through the same [`Job`]
//! steps the service runs.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use magdisplay::constraints::{
    limits, mixture_for, CellSpec, PrinterProfile, Shape, REFERENCE_RATIO, SHAKE_TO_ERASE_RATIO,
};
use magdisplay::mesh::load_mesh;
use magdisplay::pipeline::{
    cmd_generate, cmd_postprocess, cmd_validate, write_artifacts, Job, GCODE_OUT, PREVIEW_JSON,
};
use magdisplay::planner::InjectionPlan;
use magdisplay::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "magdisplay", version, about = "Design and print magnetophoretic displays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Cell spec and printer profile. Flags override values from the files.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// Cell spec TOML file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Printer profile TOML file.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, value_parser = parse_shape)]
    pub shape: Option<Shape>,
    /// Cross-section size (mm).
    #[arg(long)]
    pub size: Option<f64>,
    /// Distance between neighbouring cells (mm).
    #[arg(long)]
    pub gap: Option<f64>,
    /// Cell depth (mm).
    #[arg(long)]
    pub depth: Option<f64>,
    /// Screen thickness (mm).
    #[arg(long)]
    pub screen: Option<f64>,
}

fn parse_shape(s: &str) -> std::result::Result<Shape, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl SpecArgs {
    pub fn load(&self) -> Result<(CellSpec, PrinterProfile)> {
        let mut spec = match &self.spec {
            Some(p) => CellSpec::load(p)?,
            None => CellSpec::default(),
        };
        let profile = match &self.profile {
            Some(p) => PrinterProfile::load(p)?,
            None => PrinterProfile::default(),
        };
        if let Some(s) = self.shape {
            spec.shape = s;
        }
        for (flag, field) in [
            (self.size, &mut spec.cross_section),
            (self.gap, &mut spec.gap),
            (self.depth, &mut spec.cell_depth),
            (self.screen, &mut spec.screen_thickness),
        ] {
            if let Some(v) = flag {
                *field = v;
            }
        }
        Ok((spec, profile))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// Persistent display mixture.
    Reference,
    /// Lower-talc mixture that erases when shaken.
    ShakeToErase,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a cell spec against the printable envelope.
    Validate(SpecArgs),
    /// Print the envelope bounds as JSON.
    Limits {
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Grams of each mixture component for a batch.
    Recipe {
        /// Total batch weight (g).
        #[arg(long)]
        weight: f64,
        #[arg(long, value_enum, default_value = "reference")]
        preset: Preset,
        /// Custom oil:talc:iron:dye parts, e.g. 25:35:40:1.
        #[arg(long)]
        ratio: Option<String>,
    },
    /// Build the shell and cells; writes display.stl and preview.json.
    Generate {
        mesh: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Loft and check cells only; write just preview.json.
        #[arg(long)]
        preview_only: bool,
        /// Also write the shell surfaces as STL.
        #[arg(long)]
        dump_shell: bool,
    },
    /// Generate, then find injection points; adds plan.json.
    Plan {
        mesh: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Splice an existing plan into slicer G-code.
    Postprocess {
        #[arg(long)]
        gcode: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Validate, generate, plan and post-process; writes all five artifacts.
    Pipeline {
        mesh: PathBuf,
        /// Slicer output for the generated display.stl. Without it, simple
        /// perimeters are synthesized so the splice can be inspected.
        #[arg(long)]
        gcode: Option<PathBuf>,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run the local job service.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
    },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("output serializes"));
}

fn run_job(mesh: &Path, spec: &SpecArgs, steps: usize, gcode: Option<&Path>, out_dir: &Path) -> Result<Job> {
    let (spec, profile) = spec.load()?;
    let mesh_data = load_mesh(mesh)?;
    let name = mesh.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let mut job = Job::new(0, name, mesh_data, spec, profile);
    let gcode = gcode.map(read_text).transpose()?;
    let outcome = (|| {
        job.generate()?;
        if steps > 1 {
            job.plan()?;
        }
        if steps > 2 {
            job.postprocess(gcode.as_deref())?;
        }
        Ok(())
    })();
    // Whatever was produced before a failure is still useful for diagnosis.
    write_artifacts(out_dir, job.artifacts())?;
    outcome.map(|()| job)
}

/// Runs one subcommand. Errors carry the exit code and machine-readable code.
pub async fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate(args) => {
            let (spec, profile) = args.load()?;
            let report = cmd_validate(&spec, &profile);
            print_json(&report);
            report.into_result().map(|_| ())
        }
        Command::Limits { profile } => {
            let profile = profile.map(PrinterProfile::load).transpose()?.unwrap_or_default();
            print_json(&limits(&profile));
            Ok(())
        }
        Command::Recipe { weight, preset, ratio } => {
            let ratio = match ratio {
                Some(r) => parse_ratio(&r)?,
                None => match preset {
                    Preset::Reference => REFERENCE_RATIO,
                    Preset::ShakeToErase => SHAKE_TO_ERASE_RATIO,
                },
            };
            print_json(&mixture_for(weight, ratio)?);
            Ok(())
        }
        Command::Generate {
            mesh,
            spec,
            out_dir,
            preview_only,
            dump_shell,
        } => {
            if preview_only {
                let (spec, profile) = spec.load()?;
                let g = cmd_generate(&load_mesh(&mesh)?, &spec, &profile, true)?;
                let json = g.preview_json();
                write_artifacts(&out_dir, [(PREVIEW_JSON, json.as_bytes())])?;
                print_json(&g.report);
                return Ok(());
            }
            let job = run_job(&mesh, &spec, 1, None, &out_dir)?;
            let model = job.model().expect("generated job");
            if dump_shell {
                model.shell.write_debug_stls(&out_dir)?;
            }
            print_json(&model.report);
            Ok(())
        }
        Command::Plan { mesh, spec, out_dir } => {
            let job = run_job(&mesh, &spec, 2, None, &out_dir)?;
            let plan = job.plan_result().expect("planned job");
            print_json(&serde_json::json!({
                "points": plan.points.len(),
                "unplannable": plan.unplannable.len(),
                "layers": plan.layers().len(),
                "total_volume_mm3": plan.total_volume,
            }));
            Ok(())
        }
        Command::Postprocess {
            gcode,
            plan,
            profile,
            out_dir,
        } => {
            let profile = profile.map(PrinterProfile::load).transpose()?.unwrap_or_default();
            let plan = InjectionPlan::from_json(&read_text(&plan)?)?;
            let post = cmd_postprocess(&read_text(&gcode)?, &plan, &profile)?;
            write_artifacts(&out_dir, [(GCODE_OUT, post.gcode.as_bytes())])?;
            print_json(&serde_json::json!({ "audit": post.audit, "slicer_checklist": post.checklist }));
            Ok(())
        }
        Command::Pipeline {
            mesh,
            gcode,
            spec,
            out_dir,
        } => {
            let (s, p) = spec.load()?;
            let report = cmd_validate(&s, &p);
            if !report.valid {
                print_json(&report);
                return report.into_result().map(|_| ());
            }
            let job = run_job(&mesh, &spec, 3, gcode.as_deref(), &out_dir)?;
            print_json(&job.summary());
            Ok(())
        }
        Command::Serve { port } => crate::api::serve(port).await.map_err(|e| Error::Io {
            path: format!("127.0.0.1:{port}").into(),
            source: e,
        }),
    }
}

fn parse_ratio(s: &str) -> Result<[f64; 4]> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(format!("ratio {s:?}: {e}")))?;
    parts
        .try_into()
        .map_err(|_| Error::InvalidArgument(format!("ratio {s:?} needs four parts oil:talc:iron:dye")))
}

/// One-line JSON error for stderr.
pub fn error_line(e: &Error) -> String {
    serde_json::json!({"error": {"code": e.code(), "message": e.to_string(), "exit_code": e.exit_code()}}).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_files() {
        let args = SpecArgs {
            shape: Some(Shape::Circle),
            size: Some(3.0),
            ..Default::default()
        };
        let (spec, _) = args.load().unwrap();
        assert_eq!(spec.shape, Shape::Circle);
        assert_eq!(spec.cross_section, 3.0);
        assert_eq!(spec.gap, CellSpec::default().gap);
    }

    #[test]
    fn ratios() {
        assert_eq!(parse_ratio("25:35:40:1").unwrap(), REFERENCE_RATIO);
        assert_eq!(parse_ratio("1:2").unwrap_err().code(), "invalid_argument");
    }

    #[test]
    fn cli_parses() {
        let cli = Cli::try_parse_from([
            "magdisplay", "generate", "m.stl", "--shape", "square", "--size", "4", "--gap", "1", "--depth", "5",
            "--screen", "0.6", "--out-dir", "o", "--preview-only",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Generate { preview_only: true, .. }));
    }
}
