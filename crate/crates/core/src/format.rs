//! Human-readable number formatting.

/// `%g`-style rendering with `digits` significant digits.
pub fn sig(v: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    // Round first so 9.999996 → "10" picks the right exponent.
    let rounded: f64 = format!("{:.*e}", digits - 1, v).parse().expect("valid float");
    let exp = rounded.abs().log10().floor() as i32;
    let out = if exp < -4 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, v);
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        format!("{}e{e}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    };
    if out == "-0" {
        "0".into()
    } else {
        out
    }
}

/// Six significant digits.
pub fn sig6(v: f64) -> String {
    sig(v, 6)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
