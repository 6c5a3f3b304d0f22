//! Deterministic number formatting for emitted data files.

/// 12 significant digits; scientific notation outside `[1e-6, 1e6)`.
///
/// Chosen so downstream comparisons at 1e-8 relative tolerance survive a
/// round-trip through the text file, and so re-formatting a parsed value
/// reproduces the file byte for byte.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs();
    if !(1e-6..1e6).contains(&mag) {
        format!("{x:.11e}")
    } else {
        let decimals = (11 - mag.log10().floor() as i64).clamp(0, 17) as usize;
        format!("{x:.decimals$}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub fn fmt_bool_opt(x: Option<bool>) -> String {
    match x {
        Some(true) => "true".into(),
        Some(false) => "false".into(),
        None => String::new(),
    }
}
