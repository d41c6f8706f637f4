//! Number formatting shared by the CLI and CSV output.

/// Fixed twelve decimals for ordinary magnitudes, scientific otherwise.
///
/// ```
/// assert_eq!(bracket_core::format::number(35.0 / 12.0), "2.916666666667");
/// assert_eq!(bracket_core::format::number(0.0), "0");
/// assert_eq!(bracket_core::format::number(2.5e-7), "2.500000000000e-7");
/// ```
pub fn number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let a = x.abs();
    if (1e-4..1e12).contains(&a) {
        format!("{x:.12}")
    } else {
        format!("{x:.12e}")
    }
}
