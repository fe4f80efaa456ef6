//! Minimal slicer stand-ins: one perimeter per section loop, written in the
//! dialects of common slicers. Used for fixtures and offline demos where no
//! real slicer output is at hand.

use std::fmt::Write;

use super::inject::num;
use crate::mesh::{slice_at, TriMesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// `;LAYER:n` markers, absolute E, z-hop travels, `;TIME_ELAPSED:` trailers.
    Cura,
    /// `;LAYER_CHANGE` + `;Z:` markers, relative E, leading-dot numbers.
    Prusa,
    /// No comments at all; layers must be recovered from Z moves.
    Bare,
}

const FILAMENT_DIAMETER: f64 = 1.75;
const LINE_WIDTH: f64 = 0.4;
const PRINT_FEED: f64 = 1500.0;
const TRAVEL_FEED: f64 = 6000.0;
const RETRACT: f64 = 5.0;
const HOP: f64 = 0.2;

/// Slices `mesh` at every layer and writes perimeters only.
pub fn synthesize(mesh: &TriMesh, layer_height: f64, flavor: Flavor) -> String {
    let top = mesh.bounds().max.z;
    let layers = (top / layer_height + 1e-9).floor() as usize;
    let e_per_mm = LINE_WIDTH * layer_height / (std::f64::consts::PI * (FILAMENT_DIAMETER / 2.0).powi(2));
    let mut w = Writer {
        out: String::new(),
        flavor,
        e: 0.0,
        time: 0.0,
    };
    w.header(layer_height, layers);
    let mut index = 0;
    for k in 1..=layers {
        let z = k as f64 * layer_height;
        let Ok(section) = slice_at(mesh, z - layer_height / 2.0) else {
            continue;
        };
        if section.loops.is_empty() {
            continue;
        }
        w.layer_start(index, z, layer_height);
        for (i, l) in section.loops.iter().enumerate() {
            let start = l[0];
            w.travel(start.x, start.y, z, i > 0 || index > 0);
            let mut prev = start;
            for p in l.iter().skip(1).chain(std::iter::once(&start)) {
                let len = (p - prev).norm();
                w.extrude(p.x, p.y, len * e_per_mm, len);
                prev = *p;
            }
        }
        w.layer_end();
        index += 1;
    }
    w.footer();
    w.out
}

struct Writer {
    out: String,
    flavor: Flavor,
    /// Absolute E for Cura and bare output.
    e: f64,
    time: f64,
}

impl Writer {
    fn n(&self, v: f64, places: usize) -> String {
        let s = num(v, places);
        if self.flavor == Flavor::Prusa {
            // PrusaSlicer drops the leading zero.
            if let Some(rest) = s.strip_prefix("0.") {
                return format!(".{rest}");
            }
            if let Some(rest) = s.strip_prefix("-0.") {
                return format!("-.{rest}");
            }
        }
        s
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.out.push_str(s.as_ref());
        self.out.push('\n');
    }

    fn header(&mut self, layer_height: f64, layers: usize) {
        match self.flavor {
            Flavor::Cura => {
                for l in [
                    ";FLAVOR:Marlin".to_string(),
                    format!(";Layer height: {}", num(layer_height, 3)),
                    ";Generated with Cura_SteamEngine 5.4.0".into(),
                    "M140 S60".into(),
                    "M104 S200".into(),
                    "M190 S60".into(),
                    "M109 S200".into(),
                    "M82 ;absolute extrusion mode".into(),
                    "G28 ;Home".into(),
                    "G92 E0 ;Reset Extruder".into(),
                    "G1 Z2.0 F3000 ;Move Z Axis up".into(),
                    "G1 X0.1 Y20 Z0.3 F5000.0 ;Move to start position".into(),
                    "G1 X0.1 Y200.0 Z0.3 F1500.0 E15 ;Draw the first line".into(),
                    "G92 E0 ;Reset Extruder".into(),
                    "G1 Z2.0 F3000".into(),
                    "G92 E0".into(),
                    format!(";LAYER_COUNT:{layers}"),
                ] {
                    self.line(l);
                }
            }
            Flavor::Prusa => {
                for l in [
                    "; generated by PrusaSlicer 2.6.0+linux-x64-GTK3",
                    "",
                    "; external perimeters extrusion width = 0.45mm",
                    "",
                    "M73 P0 R10",
                    "M201 X500 Y500 Z100 E5000 ; sets maximum accelerations, mm/sec^2",
                    "M107",
                    ";TYPE:Custom",
                    "G28 ; home all axes",
                    "G1 Z5 F5000 ; lift nozzle",
                    "M109 S200 ; set temperature and wait for it to be reached",
                    "G21 ; set units to millimeters",
                    "G90 ; use absolute coordinates",
                    "M83 ; use relative distances for extrusion",
                    "G92 E0",
                ] {
                    self.line(l);
                }
            }
            Flavor::Bare => {
                for l in ["M104 S200", "M109 S200", "G28", "G90", "M82", "G92 E0"] {
                    self.line(l);
                }
            }
        }
    }

    fn layer_start(&mut self, index: usize, z: f64, h: f64) {
        match self.flavor {
            Flavor::Cura => {
                self.line(format!(";LAYER:{index}"));
                self.line(format!("G0 F{} Z{}", num(TRAVEL_FEED, 0), num(z, 3)));
            }
            Flavor::Prusa => {
                self.line(";LAYER_CHANGE");
                self.line(format!(";Z:{}", num(z, 3)));
                self.line(format!(";HEIGHT:{}", num(h, 3)));
                self.line(";BEFORE_LAYER_CHANGE");
                self.line("G92 E0");
                self.line(format!(";{}", num(z, 3)));
                self.line("");
                let zs = self.n(z, 3);
                self.line(format!("G1 Z{zs} F7800"));
                self.line(";AFTER_LAYER_CHANGE");
                self.line(format!(";{}", num(z, 3)));
            }
            Flavor::Bare => {
                self.line(format!("G1 Z{} F600", num(z, 3)));
            }
        }
    }

    fn travel(&mut self, x: f64, y: f64, z: f64, retract: bool) {
        let (xs, ys) = (self.n(x, 3), self.n(y, 3));
        match self.flavor {
            Flavor::Cura | Flavor::Bare => {
                let cura = self.flavor == Flavor::Cura;
                if retract {
                    self.line(format!("G1 F2700 E{}", num(self.e - RETRACT, 5)));
                    self.line(format!("G1 F300 Z{}", num(z + HOP, 3)));
                }
                self.line(format!("G0 F{} X{xs} Y{ys}", num(TRAVEL_FEED, 0)));
                if retract {
                    self.line(format!("G1 F300 Z{}", num(z, 3)));
                    self.line(format!("G1 F2700 E{}", num(self.e, 5)));
                }
                if cura {
                    self.line(";TYPE:WALL-OUTER");
                }
            }
            Flavor::Prusa => {
                if retract {
                    self.line("G1 E-.8 F2100");
                }
                self.line(format!("G1 X{xs} Y{ys} F{}", num(TRAVEL_FEED * 1.5, 0)));
                if retract {
                    self.line("G1 E.8 F2100");
                }
                self.line(";TYPE:External perimeter");
                self.line(";WIDTH:0.45");
                self.line(format!("G1 F{}", num(PRINT_FEED, 0)));
            }
        }
    }

    fn extrude(&mut self, x: f64, y: f64, de: f64, len: f64) {
        self.time += len / PRINT_FEED * 60.0;
        let (xs, ys) = (self.n(x, 3), self.n(y, 3));
        match self.flavor {
            Flavor::Cura | Flavor::Bare => {
                self.e += de;
                let e = num(self.e, 5);
                let mut s = String::new();
                if self.flavor == Flavor::Cura {
                    let _ = write!(s, "G1 F{} ", num(PRINT_FEED, 0));
                } else {
                    s.push_str("G1 ");
                }
                let _ = write!(s, "X{xs} Y{ys} E{e}");
                self.line(s);
            }
            Flavor::Prusa => {
                let es = self.n(de, 5);
                self.line(format!("G1 X{xs} Y{ys} E{es}"));
            }
        }
    }

    fn layer_end(&mut self) {
        if self.flavor == Flavor::Cura {
            self.line(format!(";TIME_ELAPSED:{:.6}", self.time));
        }
    }

    fn footer(&mut self) {
        let lines: &[&str] = match self.flavor {
            Flavor::Cura => &[
                "G1 F2700 E0",
                "M140 S0",
                "M107",
                "G91 ;Relative positioning",
                "G1 E-2 F2700 ;Retract a bit",
                "G1 Z10 ;Raise Z",
                "G90 ;Absolute positioning",
                "M104 S0",
                "M84",
                "M82 ;absolute extrusion mode",
                ";End of Gcode",
            ],
            Flavor::Prusa => &[
                "; Filament-specific end gcode ",
                ";END gcode for filament",
                "M107",
                "G1 Z30 F720",
                "M104 S0 ; turn off temperature",
                "M84 ; disable motors",
                "",
                "; filament used [mm] = 0.00",
                "; prusaslicer_config = begin",
                "; layer_height = 0.2",
                "; prusaslicer_config = end",
            ],
            Flavor::Bare => &["M104 S0", "M140 S0", "M84"],
        };
        for l in lines {
            self.line(l);
        }
    }
}
