//! Text encoding of floating-point values for the JSON and CSV surfaces.
//!
//! Every float we emit is printed with 17 significant decimal digits, which
//! is enough to recover the original `f64` bit pattern exactly on re-parse.
//! All file formats in this crate round-trip bit-exactly as a consequence.

/// Formats `value` with 17 significant digits in scientific notation.
pub fn g17(value: f64) -> String {
    format!("{value:.16e}")
}

/// Renders a slice as a JSON array of 17-digit numbers.
pub fn json_array(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| g17(*v)).collect();
    format!("[{}]", parts.join(","))
}
