//! Small formatting helpers shared by the renderers.

/// Two decimals, rounding half away from zero: 0.125 -> "0.13".
pub fn fixed2(x: f64) -> String {
    format!("{:.2}", round2(x))
}

/// Rounds to hundredths, half away from zero.
pub fn round2(x: f64) -> f64 {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Value in whole hundredths, half away from zero.
pub fn hundredths(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

pub fn fmt_hundredths(h: i64) -> String {
    let sign = if h < 0 { "-" } else { "" };
    let h = h.abs();
    format!("{sign}{}.{:02}", h / 100, h % 100)
}

/// A stored parameter exactly as written: 0.8 -> "0.8", 1 -> "1".
pub fn param(x: f64) -> String {
    format!("{x}")
}

pub fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// "paw marks" -> "Paw Marks".
pub fn title_case(s: &str) -> String {
    s.split(' ').map(capitalize).collect::<Vec<_>>().join(" ")
}

/// "a", "a and b", "a, b and c".
pub fn join_list(items: &[String], last: &str) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., tail] => format!("{} {last} {tail}", init.join(", ")),
    }
}
