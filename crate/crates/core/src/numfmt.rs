//! Number formatting shared by the CSV and JSON writers.

/// Rounds to 12 significant digits and prints the shortest form that
/// round-trips the rounded value, in exponent form below 1e-6 or from 1e16.
pub fn csv_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if (1e-6..1e16).contains(&rounded.abs()) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}
