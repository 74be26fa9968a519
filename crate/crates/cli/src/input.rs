//! Sponge and probability files, scales and words on the command line.

use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use sponge_core::{BernoulliMeasure, DigitTuple, Error as CoreError, Scale, Sponge};

use crate::error::{CliError, Result};

/// Largest denominator a decimal scale is rounded to.
pub const MAX_DECIMAL_DENOMINATOR: u64 = 1_000_000_000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpongeFile {
    #[allow(dead_code)]
    #[serde(default)]
    name: Option<String>,
    bases: Vec<u32>,
    digits: Vec<Vec<u32>>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

/// Byte offsets of every tuple in the `digits` array and of each entry inside it.
fn locate_digits(text: &str) -> Vec<(usize, Vec<usize>)> {
    let bytes = text.as_bytes();
    let Some(key) = text.find("\"digits\"") else { return Vec::new() };
    let mut i = key + "\"digits\"".len();
    let mut depth = 0usize;
    let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut in_number = false;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'[' => {
                depth += 1;
                if depth == 2 {
                    out.push((i, Vec::new()));
                }
            }
            b']' => {
                if depth <= 1 {
                    break;
                }
                depth -= 1;
            }
            b'0'..=b'9' | b'-' if depth == 2 && !in_number => {
                if let Some(last) = out.last_mut() {
                    last.1.push(i);
                }
            }
            _ => {}
        }
        in_number = depth == 2 && (c.is_ascii_digit() || c == b'-' || c == b'.');
        i += 1;
    }
    out
}

/// Reads a sponge file `{"bases": [...], "digits": [[...], ...]}`.
pub fn read_sponge(path: &Path) -> Result<Sponge> {
    let text = read(path)?;
    parse_sponge(&text, path)
}

pub fn parse_sponge(text: &str, path: &Path) -> Result<Sponge> {
    let file: SpongeFile = serde_json::from_str(text).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        name: "ParseError",
        message: e.to_string(),
    })?;
    Sponge::new(file.bases, file.digits).map_err(|e| {
        let offset = match &e {
            CoreError::WrongArity { index, .. } | CoreError::DuplicateDigit { index } => {
                locate_digits(text).get(*index).map(|t| t.0)
            }
            CoreError::DigitOutOfRange { index, coord, .. } => {
                locate_digits(text).get(*index).map(|t| t.1.get(coord - 1).copied().unwrap_or(t.0))
            }
            _ => None,
        };
        let offset = offset.or_else(|| text.find("\"bases\"")).unwrap_or(0);
        let (line, column) = line_col(text, offset);
        CliError::Input { path: path.to_path_buf(), line, column, name: e.name(), message: e.to_string() }
    })
}

/// Map entries in file order, keeping duplicates so they can be reported.
struct Entries(Vec<(String, String)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Entries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping \"i1,...,id\" to \"p/q\"")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some(entry) = map.next_entry::<String, String>()? {
                    out.push(entry);
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn key_offset(text: &str, key: &str) -> usize {
    text.find(&format!("\"{key}\"")).unwrap_or(0)
}

/// Reads a probability file `{"0,1": "1/4", ...}` against `s`.
pub fn read_measure(s: &Sponge, path: &Path) -> Result<BernoulliMeasure> {
    let text = read(path)?;
    parse_measure(s, &text, path)
}

pub fn parse_measure(s: &Sponge, text: &str, path: &Path) -> Result<BernoulliMeasure> {
    let located = |offset: usize, name: &'static str, message: String| {
        let (line, column) = line_col(text, offset);
        CliError::Input { path: path.to_path_buf(), line, column, name, message }
    };
    let entries: Entries = serde_json::from_str(text).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        name: "ParseError",
        message: e.to_string(),
    })?;
    let mut weights = Vec::with_capacity(entries.0.len());
    for (key, value) in &entries.0 {
        let tuple = parse_tuple(key).map_err(|m| located(key_offset(text, key), "ParseError", m))?;
        let w = parse_rational(value).map_err(|m| located(key_offset(text, key), "ParseError", m))?;
        weights.push((tuple, w));
    }
    BernoulliMeasure::new(s, weights).map_err(|e| {
        let offset = match &e {
            CoreError::DigitNotInSponge { tuple } | CoreError::NonPositiveWeight { tuple } => {
                key_offset(text, &join(tuple))
            }
            _ => 0,
        };
        located(offset, e.name(), e.to_string())
    })
}

fn join(tuple: &[u32]) -> String {
    tuple.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

/// `"i1,i2,...,id"` as a tuple string.
pub fn tuple_string(t: &DigitTuple) -> String {
    join(t)
}

fn parse_tuple(s: &str) -> std::result::Result<Vec<u32>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|_| format!("bad digit {p:?} in tuple {s:?}")))
        .collect()
}

/// `"p/q"` or an integer.
pub fn parse_rational(s: &str) -> std::result::Result<BigRational, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| format!("bad rational {s:?}"))?;
    let den: BigInt = den.parse().map_err(|_| format!("bad rational {s:?}"))?;
    if den.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(BigRational::new(num, den))
}

/// A decimal string as an exact rational.
fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Some(if shift >= 0 {
        BigRational::from_integer(digits * ten.pow(shift as u32))
    } else {
        BigRational::new(digits, ten.pow((-shift) as u32))
    })
}

/// Closest rational to `x > 0` with denominator at most `max_den`.
pub fn limit_denominator(x: &BigRational, max_den: u64) -> BigRational {
    let max_den = BigInt::from(max_den);
    if x.denom() <= &max_den {
        return x.clone();
    }
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    loop {
        let a = &n / &d;
        let q2 = &q0 + &a * &q1;
        if q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let r = &n - &a * &d;
        (n, d) = (d, r);
    }
    let k = (&max_den - &q0) / &q1;
    let semi = BigRational::new(&p0 + &k * &p1, &q0 + &k * &q1);
    let conv = BigRational::new(p1, q1);
    if (&conv - x).abs() <= (&semi - x).abs() {
        conv
    } else {
        semi
    }
}

/// A scale as given on the command line.
#[derive(Debug, Clone)]
pub struct ParsedScale {
    pub input: String,
    pub scale: Scale,
    /// Set when a decimal was rounded to a nearby rational.
    pub rounded: bool,
}

/// `"p/q"` exactly, or a decimal rounded to the nearest rational with
/// denominator at most [`MAX_DECIMAL_DENOMINATOR`].
pub fn parse_scale(s: &str) -> Result<ParsedScale> {
    let t = s.trim();
    let (value, rounded) = if t.contains('/') {
        (parse_rational(t).map_err(CliError::Usage)?, false)
    } else {
        let exact = parse_decimal(t).ok_or_else(|| CliError::Usage(format!("bad scale {s:?}")))?;
        if !exact.is_positive() {
            return Err(CliError::Domain(CoreError::ScaleOutOfRange));
        }
        let near = limit_denominator(&exact, MAX_DECIMAL_DENOMINATOR);
        let rounded = near != exact;
        (near, rounded)
    };
    Ok(ParsedScale { input: s.to_string(), scale: Scale::new(value)?, rounded })
}

/// A positive rational given as `"p/q"` or an exact decimal.
pub fn parse_positive(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let v = if t.contains('/') { parse_rational(t).ok() } else { parse_decimal(t) };
    match v {
        Some(v) if v.is_positive() => Ok(v),
        _ => Err(CliError::Usage(format!("expected a positive number, got {s:?}"))),
    }
}

/// `"0,0,0;0,0,3;..."`.
pub fn parse_word(s: &str) -> Result<Vec<DigitTuple>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_tuple(p).map(DigitTuple::new).map_err(CliError::Usage))
        .collect()
}
