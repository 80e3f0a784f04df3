//! Tolerant extraction of structured records from model output.
//!
//! Order: strict JSON over the whole text, then the first fenced or balanced
//! JSON block, then a per-field scan for `name: value` style labels. The
//! first stage that yields every required field wins.

use regex::Regex;
use serde_json::{Map, Number, Value};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldType {
    Int,
    Float,
    Bool,
    Str,
    StrList,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: String,
    pub ty: FieldType,
    pub required: bool,
}

impl FieldSpec {
    pub fn required(name: impl Into<String>, ty: FieldType) -> Self {
        Self {
            name: name.into(),
            ty,
            required: true,
        }
    }

    pub fn optional(name: impl Into<String>, ty: FieldType) -> Self {
        Self {
            name: name.into(),
            ty,
            required: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no extraction path yielded required field `{field}`")]
pub struct ParseFailure {
    pub field: String,
}

impl From<ParseFailure> for sdp_core::OperatorError {
    fn from(e: ParseFailure) -> Self {
        sdp_core::OperatorError::Parse(e.field)
    }
}

pub fn tolerant_parse(raw: &str, fields: &[FieldSpec]) -> Result<Map<String, Value>, ParseFailure> {
    let trimmed = raw.trim();
    if let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(trimmed) {
        if let Some(rec) = coerce_record(&obj, fields) {
            return Ok(rec);
        }
    }
    let unfenced = strip_code_fences(trimmed);
    if let Some(block) = extract_first_object(unfenced) {
        if let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(block) {
            if let Some(rec) = coerce_record(&obj, fields) {
                return Ok(rec);
            }
        }
    }
    scan_fields(unfenced, fields)
}

fn coerce_record(obj: &Map<String, Value>, fields: &[FieldSpec]) -> Option<Map<String, Value>> {
    let mut out = Map::new();
    for f in fields {
        let found = obj
            .get(&f.name)
            .or_else(|| {
                obj.iter()
                    .find(|(k, _)| k.eq_ignore_ascii_case(&f.name))
                    .map(|(_, v)| v)
            })
            .and_then(|v| coerce(v, f.ty));
        match found {
            Some(v) => {
                out.insert(f.name.clone(), v);
            }
            None if f.required => return None,
            None => {}
        }
    }
    Some(out)
}

fn coerce(v: &Value, ty: FieldType) -> Option<Value> {
    match (ty, v) {
        (FieldType::Int, Value::Number(n)) => n
            .as_i64()
            .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64))
            .map(Value::from),
        (FieldType::Int, Value::String(s)) => s.trim().parse::<i64>().ok().map(Value::from),
        (FieldType::Float, Value::Number(_)) => Some(v.clone()),
        (FieldType::Float, Value::String(s)) => s
            .trim()
            .parse::<f64>()
            .ok()
            .and_then(Number::from_f64)
            .map(Value::Number),
        (FieldType::Bool, Value::Bool(_)) => Some(v.clone()),
        (FieldType::Bool, Value::String(s)) => parse_bool(s).map(Value::Bool),
        (FieldType::Str, Value::String(_)) => Some(v.clone()),
        (FieldType::Str, Value::Number(n)) => Some(Value::String(n.to_string())),
        (FieldType::Str, Value::Bool(b)) => Some(Value::String(b.to_string())),
        (FieldType::StrList, Value::Array(items)) => items
            .iter()
            .map(|i| coerce(i, FieldType::Str))
            .collect::<Option<Vec<_>>>()
            .map(Value::Array),
        (FieldType::StrList, Value::String(s)) => Some(Value::Array(vec![Value::String(s.clone())])),
        _ => None,
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" => Some(true),
        "false" | "no" => Some(false),
        _ => None,
    }
}

/// Returns the body of the first fenced block, or the input unchanged.
pub fn strip_code_fences(s: &str) -> &str {
    let Some(open) = s.find("```") else {
        return s;
    };
    let after = &s[open + 3..];
    // Skip an info string such as `json`.
    let body_start = after.find('\n').map_or(0, |i| i + 1);
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => body[..close].trim(),
        None => body.trim(),
    }
}

/// First balanced `{...}` span, string-literal aware.
pub fn extract_first_object(s: &str) -> Option<&str> {
    let start = s.find('{')?;
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, ch) in s[start..].char_indices() {
        if in_str {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_str = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&s[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

fn scan_fields(text: &str, fields: &[FieldSpec]) -> Result<Map<String, Value>, ParseFailure> {
    let mut out = Map::new();
    for f in fields {
        match scan_field(text, f) {
            Some(v) => {
                out.insert(f.name.clone(), v);
            }
            None if f.required => {
                return Err(ParseFailure {
                    field: f.name.clone(),
                })
            }
            None => {}
        }
    }
    Ok(out)
}

fn scan_field(text: &str, f: &FieldSpec) -> Option<Value> {
    let name = regex::escape(&f.name);
    let capture = |pattern: String| -> Option<String> {
        let re = Regex::new(&pattern).expect("field pattern compiles");
        re.captures(text)
            .and_then(|c| c.get(1))
            .map(|m| m.as_str().to_string())
    };
    match f.ty {
        FieldType::Int => capture(format!(r"(?is)\b{name}\b[^0-9\-]*?(-?\d+)"))
            .and_then(|s| s.parse::<i64>().ok())
            .map(Value::from),
        FieldType::Float => capture(format!(r"(?is)\b{name}\b[^0-9\-]*?(-?\d+(?:\.\d+)?)"))
            .and_then(|s| s.parse::<f64>().ok())
            .and_then(Number::from_f64)
            .map(Value::Number),
        FieldType::Bool => capture(format!(r"(?is)\b{name}\b\W*?(true|false|yes|no)\b"))
            .and_then(|s| parse_bool(&s))
            .map(Value::Bool),
        FieldType::Str => capture(format!(r#"(?i)"?\b{name}\b"?\s*[:=]\s*"((?:[^"\\]|\\.)*)""#))
            .or_else(|| capture(format!(r"(?i)\b{name}\b\s*[:=]\s*([^\n]+)")))
            .map(|s| Value::String(s.trim().trim_end_matches(',').trim().to_string()))
            .filter(|v| v.as_str().is_some_and(|s| !s.is_empty())),
        FieldType::StrList => capture(format!(r#"(?is)"?\b{name}\b"?\s*[:=]\s*(\[.*?\])"#))
            .and_then(|s| serde_json::from_str::<Value>(&s).ok())
            .and_then(|v| coerce(&v, FieldType::StrList))
            .or_else(|| list_lines(text)),
    }
}

/// Bulleted or numbered lines, as a list of strings.
fn list_lines(text: &str) -> Option<Value> {
    let re = Regex::new(r"^\s*(?:[-*]|\d+[.)])\s+(.+?)\s*$").expect("list pattern compiles");
    let items: Vec<Value> = text
        .lines()
        .filter_map(|l| re.captures(l))
        .map(|c| Value::String(c[1].to_string()))
        .collect();
    (!items.is_empty()).then_some(Value::Array(items))
}
