// SPDX-License-Identifier: Apache-2.0

//! Exact conversion of decimal time literals into integer femtoseconds.

use crate::Tick;

/// Femtoseconds per time unit name (`s`, `ms`, `us`, `ns`, `ps`, `fs`).
pub fn unit_fs(unit: &str) -> Option<u64> {
    Some(match unit.to_ascii_lowercase().as_str() {
        "s" => 1_000_000_000_000_000,
        "ms" => 1_000_000_000_000,
        "us" => 1_000_000_000,
        "ns" => 1_000_000,
        "ps" => 1_000,
        "fs" => 1,
        _ => return None,
    })
}

/// Multiplies a non-negative decimal literal (`12`, `0.3`, `1.5e-2`) by
/// `scale` without going through floating point. The result is rounded to the
/// nearest integer, ties up. Returns `None` for malformed or signed input and
/// on overflow.
pub fn scale_decimal(text: &str, scale: u64) -> Option<u64> {
    let text = text.strip_prefix('+').unwrap_or(text);
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = int_part.chars().chain(frac_part.chars());
    let mut value: u128 = 0;
    let mut significant = 0usize;
    for c in digits {
        let d = c.to_digit(10)? as u128;
        if value > 0 || d > 0 {
            significant += 1;
        }
        if significant > 30 {
            return None;
        }
        value = value * 10 + d;
    }
    let mut value = value.checked_mul(scale as u128)?;
    let shift = exponent as i64 - frac_part.len() as i64;
    if shift >= 0 {
        for _ in 0..shift {
            value = value.checked_mul(10)?;
        }
    } else {
        let down = (-shift) as u32;
        if down > 38 {
            return Some(0);
        }
        let div = 10u128.pow(down);
        value = (value + div / 2) / div;
    }
    u64::try_from(value).ok()
}

/// Parses a time such as `10ns`, `2.5 ps` or `400` (bare numbers are in
/// femtoseconds).
pub fn parse_time(text: &str) -> Result<Tick, String> {
    let text = text.trim();
    let split = text
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let scale = if unit.trim().is_empty() {
        1
    } else {
        unit_fs(unit.trim()).ok_or_else(|| format!("unknown time unit in '{text}'"))?
    };
    scale_decimal(number.trim(), scale).ok_or_else(|| format!("invalid time '{text}'"))
}

/// Parses a byte count with an optional `K`, `M`, `G` or `T` suffix (powers
/// of 1024).
pub fn parse_bytes(text: &str) -> Result<u64, String> {
    let text = text.trim();
    let (number, mult) = match text.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&text[..text.len() - 1], 1u64 << 10),
        Some('M') => (&text[..text.len() - 1], 1 << 20),
        Some('G') => (&text[..text.len() - 1], 1 << 30),
        Some('T') => (&text[..text.len() - 1], 1 << 40),
        _ => (text, 1),
    };
    scale_decimal(number.trim(), mult).ok_or_else(|| format!("invalid byte count '{text}'"))
}
