//! Output formatting shared by every exporter.

/// Nine significant digits, no trailing zeros.
pub fn fmt9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".into() } else { format!("{v}") };
    }
    let s = format!("{}", round9(v));
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// `v` rounded to nine significant digits.
pub fn round9(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{v:.8e}").parse().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt9(12400.0), "12400");
        assert_eq!(fmt9(-0.0), "0");
        assert_eq!(fmt9(51.428571428571), "51.4285714");
    }
}
