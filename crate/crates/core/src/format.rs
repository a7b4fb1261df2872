//! Locale-independent float formatting for CSV output.

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros trimmed,
/// exponent notation when the decimal exponent is below −4 or at least 12.
pub fn g12(x: f64) -> String {
    const SIG: usize = 12;
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // Round to SIG significant digits first, then read the exponent back.
    let sci = format!("{:.*e}", SIG - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG as i32 {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (SIG as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::g12;

    #[test]
    fn matches_printf_g() {
        assert_eq!(g12(0.0), "0");
        assert_eq!(g12(1.0), "1");
        assert_eq!(g12(1.2), "1.2");
        assert_eq!(g12(-0.25), "-0.25");
        assert_eq!(g12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(g12(1e-7), "1e-07");
        assert_eq!(g12(1.23456789012345e-7), "1.23456789012e-07");
        assert_eq!(g12(123456.0), "123456");
        assert_eq!(g12(1e15), "1e+15");
        assert_eq!(g12(0.0001), "0.0001");
        assert_eq!(g12(1e-5), "1e-05");
        assert_eq!(g12(9.9999999999999e-6), "1e-05");
    }
}
