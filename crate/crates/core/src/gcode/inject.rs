//! Injection blocks and the mode-switch modules spliced between layers.

use std::collections::BTreeMap;

use super::{command, word, GcodeProgram, Layer};
use crate::constraints::PrinterProfile;
use crate::planner::{InjectionPlan, InjectionPoint};
use crate::{Error, Result};

/// Tags emitted in comments so audits can find the generated lines.
pub const SERIES_BEGIN: &str = "; magdisplay: injection series begin";
pub const SERIES_END: &str = "; magdisplay: injection series end";
pub const PLUNGE_TAG: &str = "; plunge";
pub const PURGE_TAG: &str = "; purge";

/// Filament moves during mode switches (mm/min).
pub const FILAMENT_FEEDRATE: f64 = 2400.0;

/// Injector moves for one cell. Starts and ends with the injector up.
#[derive(Clone, Debug, PartialEq)]
pub struct InjectionBlock {
    pub cell_id: usize,
    pub commands: Vec<String>,
}

/// Shortest decimal form with at most `places` decimals.
pub(crate) fn num(v: f64, places: usize) -> String {
    let s = format!("{v:.places$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { &s };
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn xy(v: f64) -> String {
    num(v, 3)
}

/// E values keep enough digits for the volume audit.
fn e(v: f64) -> String {
    num(v, 8)
}

fn expand(template: &str, x: f64, y: f64, z: f64) -> impl Iterator<Item = String> + '_ {
    let (x, y, z) = (xy(x), xy(y), xy(z));
    template
        .lines()
        .map(move |l| l.replace("{x}", &x).replace("{y}", &y).replace("{z}", &z))
}

/// Nozzle position that puts the syringe tip over `(x, y)`.
fn nozzle_target(x: f64, y: f64, profile: &PrinterProfile) -> Result<(f64, f64)> {
    let (nx, ny) = (x - profile.injector_offset[0], y - profile.injector_offset[1]);
    if profile.inside_bed(nx, ny) {
        Ok((nx, ny))
    } else {
        Err(Error::OutOfBed { x: nx, y: ny })
    }
}

/// Travel, engage, plunge `fill_volume`, retract, disengage.
///
/// The carriage is already lifted by the switch module, so the travel carries
/// no Z word.
pub fn make_injection_block(point: &InjectionPoint, profile: &PrinterProfile) -> Result<InjectionBlock> {
    let (nx, ny) = nozzle_target(point.x, point.y, profile)?;
    let tip_z = point.z + profile.tip_height;
    let mut commands = vec![format!(
        "G0 X{} Y{} F{} ; cell {}",
        xy(nx),
        xy(ny),
        num(profile.travel_feedrate, 0),
        point.cell_id
    )];
    commands.extend(expand(&profile.engage_macro, point.x, point.y, tip_z));
    commands.push(format!(
        "G1 E{} F{} {PLUNGE_TAG} cell {}",
        e(point.fill_volume * profile.e_per_mm3),
        num(profile.injection_feedrate, 0),
        point.cell_id
    ));
    commands.push(format!(
        "G1 E-{} F{} ; liquid retract",
        e(profile.retraction_volume * profile.e_per_mm3),
        num(profile.injection_feedrate, 0)
    ));
    commands.extend(expand(&profile.disengage_macro, point.x, point.y, tip_z));
    Ok(InjectionBlock {
        cell_id: point.cell_id,
        commands,
    })
}

/// Modal state needed to hand control back to the slicer's toolpath.
#[derive(Clone, Copy, Debug)]
struct MachineState {
    relative_xyz: bool,
    /// Set by M82/M83; otherwise E follows G90/G91.
    relative_e: Option<bool>,
    e: f64,
    x: Option<f64>,
    y: Option<f64>,
    f: Option<f64>,
}

impl MachineState {
    fn new() -> Self {
        MachineState {
            relative_xyz: false,
            relative_e: None,
            e: 0.0,
            x: None,
            y: None,
            f: None,
        }
    }

    fn e_relative(&self) -> bool {
        self.relative_e.unwrap_or(self.relative_xyz)
    }

    fn feed(&mut self, line: &str) {
        match command(line).as_deref() {
            Some("G90") => self.relative_xyz = false,
            Some("G91") => self.relative_xyz = true,
            Some("M82") => self.relative_e = Some(false),
            Some("M83") => self.relative_e = Some(true),
            Some("G92") => {
                if let Some(v) = word(line, 'E') {
                    self.e = v;
                }
                self.x = word(line, 'X').or(self.x);
                self.y = word(line, 'Y').or(self.y);
            }
            Some("G0" | "G1") => {
                let step = |old: Option<f64>, v: f64, rel: bool| Some(if rel { old.unwrap_or(0.0) + v } else { v });
                if let Some(v) = word(line, 'X') {
                    self.x = step(self.x, v, self.relative_xyz);
                }
                if let Some(v) = word(line, 'Y') {
                    self.y = step(self.y, v, self.relative_xyz);
                }
                if let Some(v) = word(line, 'E') {
                    self.e = if self.e_relative() { self.e + v } else { v };
                }
                if let Some(v) = word(line, 'F') {
                    self.f = Some(v);
                }
            }
            _ => {}
        }
    }
}

fn lift(dz: f64, profile: &PrinterProfile) -> [String; 3] {
    [
        "G91".into(),
        format!("G1 Z{} F{}", xy(dz), num(profile.z_feedrate, 0)),
        "G90".into(),
    ]
}

/// Filament over-retract, lift, tool change and liquid over-purge at the dump area.
fn switch_in(layer: &Layer, profile: &PrinterProfile) -> Result<Vec<String>> {
    let (dx, dy) = (profile.dump_area[0], profile.dump_area[1]);
    let (nx, ny) = nozzle_target(dx, dy, profile)?;
    let tip_z = layer.z + profile.tip_height;
    let mut out = vec![
        format!("{SERIES_BEGIN} after layer {} z={}", layer.index, xy(layer.z)),
        "M83".into(),
        format!("G1 E-{} F{} ; filament retract", e(profile.filament_retract), num(FILAMENT_FEEDRATE, 0)),
    ];
    out.extend(lift(profile.travel_lift, profile));
    out.push("M83".into());
    out.push("T1 ; liquid injector".into());
    out.push(format!("G0 X{} Y{} F{} ; dump area", xy(nx), xy(ny), num(profile.travel_feedrate, 0)));
    out.extend(expand(&profile.engage_macro, dx, dy, tip_z));
    out.push(format!(
        "G1 E{} F{} {PURGE_TAG}",
        e(profile.purge_volume * profile.e_per_mm3),
        num(profile.injection_feedrate, 0)
    ));
    out.extend(expand(&profile.disengage_macro, dx, dy, tip_z));
    Ok(out)
}

/// Tool change back, filament re-prime, brush wipe and restore of the slicer's modal state.
fn switch_out(state: &MachineState, profile: &PrinterProfile) -> Result<Vec<String>> {
    let (bx, by) = (profile.brush_area[0], profile.brush_area[1]);
    let wipe_x = bx - profile.wipe_length;
    if !profile.inside_bed(bx, by) || !profile.inside_bed(wipe_x, by) {
        return Err(Error::OutOfBed { x: wipe_x, y: by });
    }
    let travel = num(profile.travel_feedrate, 0);
    let mut out = vec![
        "T0 ; filament extruder".into(),
        "M83".into(),
        format!("G0 X{} Y{} F{travel} ; brush", xy(bx), xy(by)),
        format!(
            "G1 E{} F{} ; filament prime",
            e(profile.filament_retract + profile.filament_prime_extra),
            num(FILAMENT_FEEDRATE, 0)
        ),
        format!("G1 X{} Y{} F{travel} ; wipe", xy(wipe_x), xy(by)),
        format!("G1 X{} Y{} F{travel} ; wipe", xy(bx), xy(by)),
    ];
    if let (Some(x), Some(y)) = (state.x, state.y) {
        out.push(format!("G0 X{} Y{} F{travel}", xy(x), xy(y)));
    }
    out.extend(lift(-profile.travel_lift, profile));
    if state.relative_xyz {
        out.push("G91".into());
    }
    if state.e_relative() {
        out.push("M83".into());
    } else {
        out.push("M82".into());
        out.push(format!("G92 E{}", e(state.e)));
    }
    if let Some(f) = state.f {
        out.push(format!("G1 F{}", num(f, 3)));
    }
    out.push(SERIES_END.into());
    Ok(out)
}

/// Inserts one injection series after each layer that has plan points.
pub fn splice(program: &GcodeProgram, plan: &InjectionPlan, profile: &PrinterProfile) -> Result<GcodeProgram> {
    let mut groups: BTreeMap<usize, Vec<&InjectionPoint>> = BTreeMap::new();
    let mut unmatched = Vec::new();
    for p in &plan.points {
        match program.layer_at(p.z, profile.layer_height) {
            Some(i) => groups.entry(i).or_default().push(p),
            None => unmatched.push((p.cell_id, p.z)),
        }
    }
    if !unmatched.is_empty() {
        return Err(Error::LayerMismatch(unmatched));
    }
    let mut out = program.clone();
    if groups.is_empty() {
        return Ok(out);
    }
    let mut state = MachineState::new();
    for l in &program.prelude {
        state.feed(l);
    }
    for layer in out.layers.iter_mut() {
        for l in &layer.commands {
            state.feed(l);
        }
        let Some(points) = groups.get(&layer.index) else {
            continue;
        };
        let mut series = switch_in(layer, profile)?;
        for p in points {
            series.extend(make_injection_block(p, profile)?.commands);
        }
        series.extend(switch_out(&state, profile)?);
        layer.commands.extend(series);
    }
    Ok(out)
}
