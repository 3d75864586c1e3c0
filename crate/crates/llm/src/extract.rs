//! Lenient reply parsing.
//!
//! The reply is scanned left to right for the first JSON object that carries
//! a `Functions` key (matched case-insensitively) or the first fenced code
//! block, whichever starts earlier. A fenced block whose body is a JSON
//! object is read like a bare object; any other fenced block is taken to be
//! the program source itself. `Functions` may be a single string or an array
//! of strings, one factor each.

use serde_json::{Map, Value};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extracted {
    pub understand: String,
    pub analyze: String,
    /// Program source, one factor per line. `None` when nothing was found.
    pub functions: Option<String>,
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.iter().find(|(k, _)| k.eq_ignore_ascii_case(key)).map(|(_, v)| v)
}

fn text_of(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

fn functions_of(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => {
            let lines: Option<Vec<&str>> = items.iter().map(|i| i.as_str()).collect();
            lines.map(|l| l.join("\n"))
        }
        _ => None,
    }
}

fn from_object(obj: &Map<String, Value>) -> Option<Extracted> {
    let functions = functions_of(get(obj, "Functions")?)?;
    Some(Extracted {
        understand: text_of(get(obj, "Understand")),
        analyze: text_of(get(obj, "Analyze")),
        functions: Some(functions),
    })
}

fn object_at(s: &str) -> Option<Map<String, Value>> {
    let mut it = serde_json::Deserializer::from_str(s).into_iter::<Value>();
    match it.next() {
        Some(Ok(Value::Object(m))) => Some(m),
        _ => None,
    }
}

pub fn extract_fields(raw: &str) -> Extracted {
    let mut i = 0;
    while i < raw.len() {
        let rest = &raw[i..];
        if rest.starts_with("```") {
            let Some(nl) = rest.find('\n') else { break };
            let body_start = nl + 1;
            let body_len = rest[body_start..].find("```").unwrap_or(rest.len() - body_start);
            let body = &rest[body_start..body_start + body_len];
            let trimmed = body.trim();
            if trimmed.starts_with('{') {
                if let Some(e) = object_at(trimmed).as_ref().and_then(from_object) {
                    return e;
                }
            }
            return Extracted {
                functions: Some(body.trim_end().to_string()),
                ..Extracted::default()
            };
        }
        if rest.starts_with('{') {
            if let Some(e) = object_at(rest).as_ref().and_then(from_object) {
                return e;
            }
        }
        i += rest.chars().next().map_or(1, char::len_utf8);
    }
    Extracted::default()
}
