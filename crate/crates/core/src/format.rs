//! Number rendering shared by the human and CSV report formats.

/// Renders `x` with at most 12 significant digits and no trailing zeros.
///
/// Products such as `5000 × 0.0001` carry binary rounding noise in the last
/// bits; twelve digits hide it while keeping every value the engine computes
/// from hand-authored inputs exact.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = 11 - exponent;
    if (0..=17).contains(&decimals) {
        trim(format!("{:.*}", decimals as usize, x))
    } else if decimals < 0 && exponent < 15 {
        format!("{:.0}", x)
    } else {
        let s = format!("{:.11e}", x);
        match s.split_once('e') {
            Some((m, e)) => format!("{}e{}", trim(m.to_string()), e),
            None => s,
        }
    }
}

/// Probability as a percentage, e.g. `0.0001` → `0.01%`.
pub fn percent(p: f64) -> String {
    format!("{}%", num(p * 100.0))
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".to_string()
    } else {
        t.to_string()
    }
}
