//! Fixed-precision decimal formatting shared by every text artifact.

/// Formats `x` with nine significant digits in scientific notation.
///
/// Parsing the output and formatting it again yields the same string,
/// which is what the model and embedding files rely on.
pub fn sci9(x: f64) -> String {
    if x == 0.0 {
        // normalizes -0.0
        return "0.00000000e0".to_string();
    }
    format!("{x:.8e}")
}

/// Formats `x` as a plain decimal with nine significant digits.
pub fn dec9(x: f64) -> String {
    if !x.is_finite() {
        return "NA".to_string();
    }
    if x == 0.0 {
        return "0.00000000".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-6..=9).contains(&magnitude) {
        return sci9(x);
    }
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit (9.99999999995 -> 10.0000000)
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
    let leading_zeros = s
        .trim_start_matches('-')
        .chars()
        .take_while(|&c| c == '0' || c == '.')
        .filter(|&c| c == '0')
        .count();
    if digits - leading_zeros > 9 && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}
