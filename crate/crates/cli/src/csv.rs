//! Plain CSV output: header row, LF endings, 9 significant digits and a
//! literal `nan` for undefined cells.

use std::io::{self, Write};

const SIG_DIGITS: i32 = 9;

/// Formats `v` with nine significant digits.
///
/// Magnitudes in `[1e-6, 1e15)` are written in positional notation, the
/// rest in exponent notation.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    // log10 can land one off right at powers of ten.
    let exp = if v.abs() >= 10f64.powi(exp + 1) { exp + 1 } else { exp };
    if !(-6..15).contains(&exp) {
        return format!("{:.*e}", (SIG_DIGITS - 1) as usize, v);
    }
    let decimals = (SIG_DIGITS - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').starts_with("0.") || decimals == 0 {
        return s;
    }
    // Rounding may have carried into a new leading digit.
    let digits = s.chars().filter(char::is_ascii_digit).count();
    if digits as i32 > SIG_DIGITS && decimals > 0 {
        format!("{v:.*}", decimals - 1)
    } else {
        s
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), fmt_sig)
}

pub fn write_table<W: Write>(out: &mut W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}
