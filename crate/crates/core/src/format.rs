//! Fixed-significance number formatting for text outputs.

/// Formats like C's `%.{digits}g`: `digits` significant digits, trailing
/// zeros removed, scientific notation for exponents below -4 or at/above
/// `digits`.
pub fn sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Nine significant digits, the CSV convention.
pub fn csv_number(x: f64) -> String {
    sig(x, 9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig(1.2086346121140275, 9), "1.20863461");
        assert_eq!(sig(0.006144015958, 6), "0.00614402");
        assert_eq!(sig(0.999030786, 6), "0.999031");
        assert_eq!(sig(3.243946e-05, 6), "3.24395e-05");
        assert_eq!(sig(1234567890.0, 9), "1.23456789e+09");
        assert_eq!(sig(100.0, 9), "100");
        assert_eq!(sig(0.0001, 9), "0.0001");
        assert_eq!(sig(-2.5, 9), "-2.5");
        assert_eq!(sig(0.0, 9), "0");
        assert_eq!(sig(f64::NAN, 9), "nan");
        assert_eq!(sig(9.9999999999, 9), "10");
        assert_eq!(sig(1e-300, 9), "1e-300");
    }
}
