//! Post-hoc checks on spliced G-code text.

use serde::Serialize;

use super::inject::{PLUNGE_TAG, PURGE_TAG, SERIES_BEGIN, SERIES_END};
use super::{command, parse, word};
use crate::Result;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub layers: usize,
    /// Completed begin/end switch-module pairs.
    pub switch_pairs: usize,
    /// Begin markers without a matching end in the same layer.
    pub unclosed_series: usize,
    /// Layer indices that carry an injection series, ascending.
    pub injection_layers: Vec<usize>,
    pub plunge_count: usize,
    /// Sum of plunge E words (injector axis mm).
    pub plunge_e: f64,
    pub purge_e: f64,
    /// Absolute Z moves below the current layer, as (layer index, z).
    pub z_regressions: Vec<(usize, f64)>,
}

impl AuditReport {
    /// Liquid the plunges deliver, in mm³.
    pub fn plunge_volume(&self, e_per_mm3: f64) -> f64 {
        self.plunge_e / e_per_mm3
    }
}

pub fn audit(text: &str) -> Result<AuditReport> {
    let program = parse(text)?;
    let mut report = AuditReport {
        layers: program.layers.len(),
        ..Default::default()
    };
    let mut relative = false;
    for l in &program.prelude {
        match command(l).as_deref() {
            Some("G90") => relative = false,
            Some("G91") => relative = true,
            _ => {}
        }
    }
    for layer in &program.layers {
        let mut open = false;
        for l in &layer.commands {
            if l.starts_with(SERIES_BEGIN) {
                open = true;
                if report.injection_layers.last() != Some(&layer.index) {
                    report.injection_layers.push(layer.index);
                }
            } else if l.starts_with(SERIES_END) && open {
                open = false;
                report.switch_pairs += 1;
            }
            if l.contains(PLUNGE_TAG) {
                report.plunge_count += 1;
                report.plunge_e += word(l, 'E').unwrap_or(0.0);
            } else if l.contains(PURGE_TAG) {
                report.purge_e += word(l, 'E').unwrap_or(0.0);
            }
            match command(l).as_deref() {
                Some("G90") => relative = false,
                Some("G91") => relative = true,
                Some("G0" | "G1") if !relative => {
                    if let Some(z) = word(l, 'Z') {
                        if z < layer.z - 1e-6 {
                            report.z_regressions.push((layer.index, z));
                        }
                    }
                }
                _ => {}
            }
        }
        if open {
            report.unclosed_series += 1;
        }
    }
    Ok(report)
}
