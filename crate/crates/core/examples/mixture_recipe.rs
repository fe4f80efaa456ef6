//! Grams of oil, talc, iron and dye for a 50 g batch of each preset.

use magdisplay::constraints::{mixture_for, REFERENCE_RATIO, SHAKE_TO_ERASE_RATIO};

fn main() -> magdisplay::Result<()> {
    for (name, ratio) in [("reference", REFERENCE_RATIO), ("shake-to-erase", SHAKE_TO_ERASE_RATIO)] {
        let r = mixture_for(50.0, ratio)?;
        println!(
            "{name}: oil {:.2} g, talc {:.2} g, iron {:.2} g, dye {:.2} g ({:?})",
            r.oil, r.talc, r.iron, r.dye, r.persistence
        );
    }
    Ok(())
}
