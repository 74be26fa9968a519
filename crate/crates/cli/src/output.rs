//! JSON, CSV and SVG emitters.

use std::io::Write;

use num_rational::BigRational;
use serde_json::{json, Map, Value};
use sponge_core::dims::DimReport;
use sponge_core::measure::RationalLog;
use sponge_core::numeric::to_f64;
use sponge_core::verify::{BoundSide, DoublingReport, DoublingVerdict, Neighbourhood, ScanReport, ScanSample};
use sponge_core::{BoxSet, DigitTuple, Error as CoreError, LgFamilyDims, Result as CoreResult};

use crate::input::tuple_string;

pub const SCHEMA_VERSION: u32 = 1;

/// A JSON object that starts with `schema_version` and `command`.
pub fn document(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m
}

pub fn write_json(out: &mut dyn Write, doc: Map<String, Value>) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values always serialize");
    writeln!(out, "{text}")
}

pub fn rational(x: &BigRational) -> Value {
    json!(x.to_string())
}

pub fn word_string(word: &[DigitTuple]) -> String {
    word.iter().map(tuple_string).collect::<Vec<_>>().join(";")
}

/// A value, or `{"error": Name}` in its place.
pub fn or_error(v: CoreResult<Value>) -> Value {
    v.unwrap_or_else(|e| json!({ "error": e.name(), "message": e.to_string() }))
}

pub fn dims(r: &DimReport) -> Map<String, Value> {
    let strict = |v: Option<f64>| or_error(v.map(|x| json!(x)).ok_or(CoreError::NonStrictBases));
    let mut m = Map::new();
    m.insert("assouad".into(), strict(r.assouad));
    m.insert("lower".into(), strict(r.lower));
    m.insert("box".into(), json!(r.box_dim));
    m.insert("hausdorff".into(), json!(r.hausdorff));
    m.insert("lower_via_zprime".into(), strict(r.lower_via_zprime));
    m.insert("strictly_increasing_bases".into(), json!(r.strictness_ok));
    m.insert(
        "dichotomy".into(),
        or_error(r.dichotomy.map(|d| json!(format!("{d:?}"))).ok_or(CoreError::NonStrictBases)),
    );
    m
}

pub fn measure_value(v: &RationalLog) -> Value {
    json!({
        "exact": v.exact.as_ref().map(rational),
        "value": v.value_f64(),
        "ln": v.log_value,
    })
}

fn sample_json(s: &ScanSample, base: u32) -> Value {
    json!({
        "word": word_string(&s.word),
        "R": format!("{base}^-{}", s.coarse),
        "r": format!("{base}^-{}", s.fine),
        "ln_ratio_low": s.ln_ratio_low,
        "ln_ratio_high": s.ln_ratio_high,
        "ln_lower_bound": s.ln_lower_bound,
        "ln_upper_bound": s.ln_upper_bound,
    })
}

/// Violations listed in the report; the count is always exact.
pub const LISTED_VIOLATIONS: usize = 20;

pub fn scan(r: &ScanReport) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("samples".into(), json!(r.samples));
    m.insert("scale_base".into(), json!(r.scale_base));
    m.insert("constants".into(), json!({ "lower": r.constants_used.0, "upper": r.constants_used.1 }));
    m.insert("exponents".into(), json!({ "lower": r.exponents_used.0, "upper": r.exponents_used.1 }));
    m.insert("worst_lower_slack".into(), json!(r.worst_lower_slack));
    m.insert("worst_upper_slack".into(), json!(r.worst_upper_slack));
    m.insert("violation_count".into(), json!(r.violations.len()));
    m.insert("clean".into(), json!(r.is_clean()));
    let listed: Vec<Value> = r
        .violations
        .iter()
        .take(LISTED_VIOLATIONS)
        .map(|v| {
            let side = match v.side {
                BoundSide::Lower => "lower",
                BoundSide::Upper => "upper",
            };
            json!({ "side": side, "sample": sample_json(&v.sample, r.scale_base) })
        })
        .collect();
    m.insert("violations".into(), Value::Array(listed));
    m.insert(
        "own_bounds".into(),
        r.own_bounds.as_ref().map_or(Value::Null, |o| {
            json!({
                "c0": o.c0,
                "c1": o.c1,
                "lower_exponent": o.lower_exponent,
                "upper_exponent": o.upper_exponent,
                "violation_count": o.violations,
                "worst_lower_slack": o.worst_lower_slack,
                "worst_upper_slack": o.worst_upper_slack,
            })
        }),
    );
    m
}

/// One row per sample: word, r, R, ratio bracket and the two bounds.
pub fn scan_csv(out: &mut dyn Write, r: &ScanReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["word", "r", "R", "ratio", "ratio_high", "lower_bound", "upper_bound"])?;
    let b = r.scale_base as f64;
    for s in &r.records {
        w.write_record([
            word_string(&s.word),
            b.powi(-(s.fine as i32)).to_string(),
            b.powi(-(s.coarse as i32)).to_string(),
            s.ln_ratio_low.exp().to_string(),
            s.ln_ratio_high.exp().to_string(),
            s.ln_lower_bound.exp().to_string(),
            s.ln_upper_bound.exp().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn neighbourhood_name(n: Neighbourhood) -> String {
    match n {
        Neighbourhood::Face => "face".into(),
        Neighbourhood::Touching => "touching".into(),
        Neighbourhood::Near(g) => format!("near:{g}"),
    }
}

pub fn verdict(v: &DoublingVerdict) -> Value {
    match v {
        DoublingVerdict::DoublingUpToDepth(k) => json!({ "kind": "DoublingUpToDepth", "depth": k }),
        DoublingVerdict::NonDoublingCertificate { growth_rate, monotone_from } => json!({
            "kind": "NonDoubling",
            "growth_rate": growth_rate,
            "monotone_from": monotone_from,
        }),
    }
}

pub fn doubling(r: &DoublingReport, per_depth: bool) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("neighbourhood".into(), json!(neighbourhood_name(r.neighbourhood)));
    if per_depth {
        let rows: Vec<Value> = r
            .per_depth
            .iter()
            .map(|d| {
                json!({
                    "depth": d.depth,
                    "max_ratio": d.max_ratio.as_ref().map(measure_value),
                })
            })
            .collect();
        m.insert("per_depth".into(), Value::Array(rows));
    }
    m.insert("growth_rate".into(), json!(r.growth_rate));
    m.insert("verdict".into(), verdict(&r.verdict));
    m
}

pub fn family_csv(out: &mut dyn Write, rows: &[LgFamilyDims]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "lower", "hausdorff", "box", "assouad"])?;
    for r in rows {
        w.write_record([r.lambda, r.lower, r.hausdorff, r.box_dim, r.assouad].map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// `set, lo_1, hi_1, ..., lo_d, hi_d` per box, as floats.
pub fn boxes_csv(out: &mut dyn Write, sets: &[(&str, &BoxSet)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(dim) = sets.first().map(|s| s.1.dim) else { return Ok(()) };
    let mut header = vec!["set".to_string()];
    for l in 1..=dim {
        header.push(format!("lo_{l}"));
        header.push(format!("hi_{l}"));
    }
    w.write_record(&header)?;
    for (label, set) in sets {
        for b in &set.boxes {
            let mut row = vec![label.to_string()];
            for i in &b.intervals {
                row.push(to_f64(&i.lo).to_string());
                row.push(to_f64(&i.hi).to_string());
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A planar box set in the unit square, y axis pointing up.
pub fn svg(out: &mut dyn Write, set: &BoxSet) -> std::io::Result<()> {
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1 1">"#)?;
    for b in &set.boxes {
        let (x, y) = (&b.intervals[0], &b.intervals[1]);
        writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
            to_f64(&x.lo),
            1.0 - to_f64(&y.hi),
            to_f64(&x.len()),
            to_f64(&y.len())
        )?;
    }
    writeln!(out, "</svg>")
}
