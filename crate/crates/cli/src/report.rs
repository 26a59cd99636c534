use std::collections::BTreeMap;
use std::fmt::Write as _;

use projgeo::ToleranceProfile;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub name: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(name: impl Into<String>, bytes: &[u8]) -> Self {
        Self {
            name: name.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<T> {
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub tolerance: ToleranceProfile,
    pub seed: Option<u64>,
    pub results: T,
    pub residuals: BTreeMap<String, f64>,
}

impl<T: Serialize> Report<T> {
    pub fn render(&self, json: bool) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        if json {
            let mut s = serde_json::to_string_pretty(&value).expect("report serializes");
            s.push('\n');
            s
        } else {
            let mut out = String::new();
            flatten(&mut out, "", &value);
            out
        }
    }
}

fn flatten(out: &mut String, prefix: &str, v: &Value) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(out, &key(k), v);
            }
        }
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            let _ = writeln!(out, "{prefix}: [{}]", parts.join(", "));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(out, &key(&i.to_string()), v);
            }
        }
        _ => {
            let _ = writeln!(out, "{prefix}: {}", scalar(v));
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
