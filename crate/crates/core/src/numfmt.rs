//! Shared CSV number formatting: 17 significant digits, round-trip exact for
//! doubles. Integers are serialized as plain integers.

/// `f64` with exactly 17 significant digits (scientific notation).
pub fn f64_17(x: f64) -> String {
    format!("{x:.16e}")
}
