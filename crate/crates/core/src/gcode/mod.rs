//! Lossless layer-structured G-code, injection splicing and post-hoc audits.
//!
//! Every input line is kept as its original bytes; [`emit`] of an unmodified
//! [`parse`] result reproduces the input exactly.

pub mod audit;
pub mod inject;
pub mod synth;

use crate::{Error, Result};

pub use audit::{audit, AuditReport};
pub use inject::{make_injection_block, splice, InjectionBlock};

/// One printed layer: the lines from its start marker up to the next layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub index: usize,
    pub z: f64,
    pub commands: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcodeProgram {
    pub prelude: Vec<String>,
    pub layers: Vec<Layer>,
    pub postlude: Vec<String>,
    /// Slicer name when recognisable from header comments.
    pub flavor: Option<String>,
    trailing_newline: bool,
}

/// A G-code word such as `X12.5`.
pub fn word(line: &str, letter: char) -> Option<f64> {
    code_part(line).split_whitespace().find_map(|w| {
        let mut chars = w.chars();
        let first = chars.next()?;
        if first.eq_ignore_ascii_case(&letter) {
            chars.as_str().parse().ok()
        } else {
            None
        }
    })
}

/// Line without its `;` comment.
pub fn code_part(line: &str) -> &str {
    line.split(';').next().unwrap_or("").trim()
}

/// Command mnemonic (`G1`, `M83`, `T0`), upper-cased, or `None` for comment-only lines.
pub fn command(line: &str) -> Option<String> {
    let first = code_part(line).split_whitespace().next()?;
    let upper = first.to_ascii_uppercase();
    // `G01` and `G1` are the same command.
    let (letter, digits) = upper.split_at(1);
    match digits.parse::<u32>() {
        Ok(n) => Some(format!("{letter}{n}")),
        Err(_) => Some(upper),
    }
}

fn is_move(line: &str) -> bool {
    matches!(command(line).as_deref(), Some("G0" | "G1"))
}

fn detect_flavor(lines: &[&str]) -> Option<String> {
    for l in lines.iter().take(200) {
        let lower = l.to_ascii_lowercase();
        if lower.contains("cura") {
            return Some("Cura".into());
        }
        if lower.contains("prusaslicer") {
            return Some("PrusaSlicer".into());
        }
        if lower.contains("superslicer") {
            return Some("SuperSlicer".into());
        }
        if lower.contains("orcaslicer") {
            return Some("OrcaSlicer".into());
        }
        if lower.contains("simplify3d") {
            return Some("Simplify3D".into());
        }
    }
    None
}

fn is_layer_marker(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with(";LAYER:") || t.starts_with(";LAYER_CHANGE")
}

/// Splits slicer output into prelude, layers and postlude.
///
/// Layers start at `;LAYER:` (Cura) or `;LAYER_CHANGE` (Prusa-style)
/// comments. Without markers a layer starts at the Z move that precedes the
/// first extrusion at a new, higher Z.
pub fn parse(text: &str) -> Result<GcodeProgram> {
    let trailing_newline = text.ends_with('\n');
    let body = text.strip_suffix('\n').unwrap_or(text);
    let lines: Vec<&str> = if text.is_empty() { Vec::new() } else { body.split('\n').collect() };
    let flavor = detect_flavor(&lines);
    let starts = if lines.iter().any(|l| is_layer_marker(l)) {
        marker_starts(&lines)
    } else {
        z_starts(&lines)
    };
    if starts.is_empty() {
        return Err(Error::NoLayersFound);
    }
    let end = postlude_start(&lines, flavor.as_deref(), starts.last().unwrap().0);
    let own = |r: std::ops::Range<usize>| lines[r].iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut layers = Vec::with_capacity(starts.len());
    for (i, &(start, z)) in starts.iter().enumerate() {
        let stop = starts.get(i + 1).map(|s| s.0).unwrap_or(end);
        layers.push(Layer {
            index: i,
            z,
            commands: own(start..stop),
        });
    }
    for w in layers.windows(2) {
        if w[1].z <= w[0].z {
            return Err(Error::Parse(format!(
                "layer {} at z={} does not rise above layer {} at z={}",
                w[1].index, w[1].z, w[0].index, w[0].z
            )));
        }
    }
    Ok(GcodeProgram {
        prelude: own(0..starts[0].0),
        layers,
        postlude: own(end..lines.len()),
        flavor,
        trailing_newline,
    })
}

/// Absolute Z tracker honouring G90/G91.
#[derive(Clone, Copy, Debug)]
struct ZTracker {
    z: Option<f64>,
    relative: bool,
}

impl ZTracker {
    fn new() -> Self {
        ZTracker { z: None, relative: false }
    }

    /// Returns the new absolute Z when `line` moves in Z.
    fn feed(&mut self, line: &str) -> Option<f64> {
        match command(line).as_deref() {
            Some("G90") => self.relative = false,
            Some("G91") => self.relative = true,
            Some("G0" | "G1") => {
                let dz = word(line, 'Z')?;
                let z = if self.relative { self.z.unwrap_or(0.0) + dz } else { dz };
                self.z = Some(z);
                return Some(z);
            }
            Some("G92") => {
                if let Some(z) = word(line, 'Z') {
                    self.z = Some(z);
                }
            }
            _ => {}
        }
        None
    }
}

fn marker_starts(lines: &[&str]) -> Vec<(usize, f64)> {
    let mut tracker = ZTracker::new();
    let mut starts: Vec<(usize, Option<f64>)> = Vec::new();
    for (i, l) in lines.iter().enumerate() {
        if is_layer_marker(l) {
            starts.push((i, None));
        }
        let moved = tracker.feed(l);
        let comment_z = l.trim_start().strip_prefix(";Z:").and_then(|z| z.trim().parse::<f64>().ok());
        if let Some(last) = starts.last_mut() {
            if last.1.is_none() {
                last.1 = comment_z.or(moved);
            }
        }
    }
    let mut out = Vec::with_capacity(starts.len());
    let mut previous = 0.0;
    for (i, z) in starts {
        let z = z.unwrap_or(previous);
        out.push((i, z));
        previous = z;
    }
    out
}

fn z_starts(lines: &[&str]) -> Vec<(usize, f64)> {
    let mut tracker = ZTracker::new();
    let mut e_relative = false;
    let mut last_e = 0.0;
    let mut pending: Option<(usize, f64)> = None;
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (i, l) in lines.iter().enumerate() {
        match command(l).as_deref() {
            Some("M82") | Some("G90") => e_relative = false,
            Some("M83") | Some("G91") => e_relative = true,
            Some("G92") => {
                if let Some(e) = word(l, 'E') {
                    last_e = e;
                }
            }
            _ => {}
        }
        if let Some(z) = tracker.feed(l) {
            pending = Some((i, z));
        }
        if is_move(l) {
            if let Some(e) = word(l, 'E') {
                let extrudes = if e_relative { e > 0.0 } else { e > last_e };
                if !e_relative {
                    last_e = e;
                }
                let has_xy = word(l, 'X').is_some() || word(l, 'Y').is_some();
                if extrudes && has_xy {
                    if let (Some((start, z)), Some(current)) = (pending, tracker.z) {
                        if out.last().is_none_or(|&(_, top)| current > top + 1e-9) && (z - current).abs() < 1e-12 {
                            out.push((start, current));
                        }
                    }
                    pending = None;
                }
            }
        }
    }
    out
}

fn postlude_start(lines: &[&str], flavor: Option<&str>, last_layer: usize) -> usize {
    if flavor == Some("Cura") {
        if let Some(i) = lines.iter().rposition(|l| l.trim_start().starts_with(";TIME_ELAPSED:")) {
            if i >= last_layer {
                return i + 1;
            }
        }
    }
    lines
        .iter()
        .enumerate()
        .skip(last_layer + 1)
        .find(|(_, l)| {
            let t = l.trim_start().to_ascii_lowercase();
            t.starts_with("; filament-specific end gcode") || t.starts_with(";end gcode") || t.starts_with("; end gcode")
        })
        .map(|(i, _)| i)
        .unwrap_or(lines.len())
}

/// Program text; byte-identical to the parsed input when nothing was spliced.
pub fn emit(program: &GcodeProgram) -> String {
    let all: Vec<&str> = program
        .prelude
        .iter()
        .chain(program.layers.iter().flat_map(|l| l.commands.iter()))
        .chain(program.postlude.iter())
        .map(String::as_str)
        .collect();
    let mut out = all.join("\n");
    if program.trailing_newline {
        out.push('\n');
    }
    out
}

impl GcodeProgram {
    /// Layer whose z lies strictly within half a layer height of `z`.
    pub fn layer_at(&self, z: f64, layer_height: f64) -> Option<usize> {
        self.layers
            .iter()
            .position(|l| (l.z - z).abs() < layer_height / 2.0 - 1e-6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CURA: &str = ";FLAVOR:Marlin\n;Generated with Cura_SteamEngine 5.4.0\nM82\nG28\n;LAYER:0\nG0 F6000 X10 Y10 Z0.2\nG1 X20 Y10 E1.0\n;TIME_ELAPSED:10\n;LAYER:1\nG0 X10 Y10 Z0.4\nG1 X20 Y10 E2.0\n;TIME_ELAPSED:20\n;LAYER:2\nG0 X10 Y10 Z0.6\nG1 X20 Y10 E3.0\n;TIME_ELAPSED:30\nM104 S0\nM84\n;End of Gcode\n";

    #[test]
    fn cura_markers() {
        let p = parse(CURA).unwrap();
        assert_eq!(p.flavor.as_deref(), Some("Cura"));
        let z: Vec<f64> = p.layers.iter().map(|l| l.z).collect();
        assert_eq!(z, vec![0.2, 0.4, 0.6]);
        assert_eq!(p.prelude.len(), 4);
        assert_eq!(p.postlude, vec!["M104 S0", "M84", ";End of Gcode"]);
        assert_eq!(emit(&p), CURA);
    }

    #[test]
    fn z_tracking_without_comments() {
        let bare: String = CURA
            .lines()
            .filter(|l| !l.starts_with(';'))
            .map(|l| format!("{l}\n"))
            .collect();
        let p = parse(&bare).unwrap();
        let z: Vec<f64> = p.layers.iter().map(|l| l.z).collect();
        assert_eq!(z, vec![0.2, 0.4, 0.6]);
        assert_eq!(emit(&p), bare);
    }

    #[test]
    fn z_hop_is_not_a_layer() {
        let text = "G90\nM82\nG1 Z0.2\nG1 X1 Y1 E1\nG1 Z0.8\nG0 X5 Y5\nG1 Z0.2\nG1 X6 Y6 E2\nG1 Z0.4\nG1 X1 Y1 E3\n";
        let p = parse(text).unwrap();
        let z: Vec<f64> = p.layers.iter().map(|l| l.z).collect();
        assert_eq!(z, vec![0.2, 0.4]);
        assert_eq!(emit(&p), text);
    }

    #[test]
    fn no_layers() {
        assert!(matches!(parse("M104 S200\nM84\n"), Err(Error::NoLayersFound)));
        assert!(matches!(parse(""), Err(Error::NoLayersFound)));
    }

    #[test]
    fn crlf_and_missing_final_newline_survive() {
        let text = ";LAYER:0\r\nG1 Z0.2 X1 Y1 E1\r\n;LAYER:1\r\nG1 Z0.4 X1 Y2 E2";
        let p = parse(text).unwrap();
        assert_eq!(p.layers.len(), 2);
        assert_eq!(emit(&p), text);
    }

    #[test]
    fn words() {
        assert_eq!(word("G1 X1.5 Y-2 E0.3 ; Z9", 'Z'), None);
        assert_eq!(word("g1 x1.5", 'X'), Some(1.5));
        assert_eq!(command("G01 X1").as_deref(), Some("G1"));
        assert_eq!(command("; only a comment"), None);
    }
}
