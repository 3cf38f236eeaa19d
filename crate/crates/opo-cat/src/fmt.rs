//! Deterministic float formatting: 12 significant digits, trailing zeros
//! trimmed, scientific notation outside [1e-4, 1e12) — the classic "%g"
//! behavior, reimplemented so output bytes are stable across platforms.

pub fn g12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -4 || exp >= 12 {
        let s = format!("{:.*e}", 11, x);
        trim_exponential(&s)
    } else {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_decimal(&s)
    }
}

fn trim_decimal(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

fn trim_exponential(s: &str) -> String {
    // Rust renders 1.20000000000e-3; trim the mantissa zeros.
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let m = trim_decimal(mantissa);
            format!("{m}e{exp}")
        }
        None => s.to_string(),
    }
}
