//! Locale-free number formatting with 9 significant digits.

/// Formats `x` with 9 significant digits, trimming trailing zeros.
///
/// Plain decimal notation is used for magnitudes in `[1e-5, 1e9)`, scientific
/// notation otherwise. Non-finite values print as `nan`, `inf`, `-inf`.
pub fn sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Round first so the exponent reflects the rounded value (0.9999999999 -> 1).
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa.to_string()), exp)
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".to_string()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

/// The value actually encoded by [`sig`], as an `f64`.
pub fn rounded(x: f64) -> f64 {
    sig(x).parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn formats() {
        assert_eq!(sig(0.5), "0.5");
        assert_eq!(sig(1.0 / 3.0), "0.333333333");
        assert_eq!(sig(1.2), "1.2");
        assert_eq!(sig(-2.0 / 9.0), "-0.222222222");
        assert_eq!(sig(100000.0), "100000");
        assert_eq!(sig(1.0e-7), "1e-7");
        assert_eq!(sig(0.99999999999), "1");
        assert_eq!(sig(123456789012.0), "1.23456789e11");
        assert_eq!(sig(0.0), "0");
    }
}
