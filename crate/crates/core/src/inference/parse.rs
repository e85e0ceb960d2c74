use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::TdmsQuadruple;

/// Structured reading of a model reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Answerable(Vec<TdmsQuadruple>),
    Unanswerable,
    ParseFailure(String),
}

impl Parsed {
    pub fn kind(&self) -> ParsedKind {
        match self {
            Parsed::Answerable(_) => ParsedKind::Answerable,
            Parsed::Unanswerable => ParsedKind::Unanswerable,
            Parsed::ParseFailure(_) => ParsedKind::ParseFailure,
        }
    }

    pub fn quadruples(&self) -> &[TdmsQuadruple] {
        match self {
            Parsed::Answerable(q) => q,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParsedKind {
    Answerable,
    Unanswerable,
    ParseFailure,
}

static UNANSWERABLE_WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bunanswerable\b").unwrap());
static FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^[ \t]*```[A-Za-z0-9_-]*[ \t]*$").unwrap());

fn strip_fences(raw: &str) -> String {
    FENCE.replace_all(raw, "").into_owned()
}

/// First well-formed JSON array in `text`, trailing text ignored.
fn first_json_array(text: &str) -> Option<Vec<Value>> {
    text.match_indices('[').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Array(items))) => Some(items),
            _ => None,
        }
    })
}

fn field_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn quadruple_from(obj: &Value) -> Option<TdmsQuadruple> {
    let map = obj.as_object()?;
    let get = |key: &str| {
        map.iter()
            .find(|(k, _)| k.trim().eq_ignore_ascii_case(key))
            .and_then(|(_, v)| field_text(v))
    };
    TdmsQuadruple::new(&get("task")?, &get("dataset")?, &get("metric")?, &get("score")?).ok()
}

/// Reads a reply as `unanswerable`, a list of quadruples, or a failure.
pub fn parse_prediction(raw: &str) -> Parsed {
    let text = strip_fences(raw);
    let array = first_json_array(&text);
    let lowered = raw.trim().to_lowercase();
    if array.is_none() && UNANSWERABLE_WORD.is_match(&lowered) {
        return Parsed::Unanswerable;
    }
    let Some(items) = array else {
        return Parsed::ParseFailure("no JSON array found".into());
    };
    let mut quads: Vec<TdmsQuadruple> = Vec::new();
    for q in items.iter().filter_map(quadruple_from) {
        if !quads.contains(&q) {
            quads.push(q);
        }
    }
    if quads.is_empty() {
        return Parsed::ParseFailure("JSON array holds no Task/Dataset/Metric/Score objects".into());
    }
    Parsed::Answerable(quads)
}
