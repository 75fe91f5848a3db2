//! Report documents. Keys are sorted, floats rounded to 12 significant
//! digits, and every number sits inside a `{value, provenance}` quantity.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use ebmod_core::Provenance;

/// Rounds to 12 significant digits; non-finite values become strings.
pub fn num(v: f64) -> Value {
    if v.is_nan() {
        return Value::String("nan".into());
    }
    if v.is_infinite() {
        return Value::String(if v > 0.0 { "inf" } else { "-inf" }.into());
    }
    let r: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    // normalize -0
    let r = if r == 0.0 { 0.0 } else { r };
    serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn num_sets(sets: &[Vec<f64>]) -> Value {
    Value::Array(sets.iter().map(|s| nums(s)).collect())
}

pub fn index_sets(sets: &[Vec<usize>]) -> Value {
    Value::Array(
        sets.iter()
            .map(|s| Value::Array(s.iter().map(|&i| Value::from(i)).collect()))
            .collect(),
    )
}

/// Object with keys in sorted order regardless of serde_json features.
pub fn obj<K: Into<String>>(pairs: impl IntoIterator<Item = (K, Value)>) -> Value {
    let sorted: BTreeMap<String, Value> = pairs.into_iter().map(|(k, v)| (k.into(), v)).collect();
    Value::Object(sorted.into_iter().collect::<Map<_, _>>())
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub value: Value,
    pub provenance: Provenance,
    pub label: Option<String>,
}

impl Quantity {
    pub fn new(value: Value, provenance: Provenance) -> Self {
        Quantity {
            value,
            provenance,
            label: None,
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    fn to_value(&self) -> Value {
        let mut pairs = vec![
            ("value", self.value.clone()),
            ("provenance", Value::String(self.provenance.name().into())),
        ];
        if let Some(l) = &self.label {
            pairs.push(("label", Value::String(l.clone())));
        }
        obj(pairs)
    }
}

/// One row of the expected-vs-computed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub group: String,
    pub name: String,
    pub expected: Value,
    pub computed: Quantity,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub command: Vec<String>,
    pub input: BTreeMap<String, String>,
    pub config: BTreeMap<String, String>,
    pub quantities: BTreeMap<String, Quantity>,
    pub certificates: BTreeMap<String, Quantity>,
    /// Yes/no outcomes and names; no numbers here.
    pub facts: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: Vec<String>, input_name: &str, input_bytes: &[u8]) -> Self {
        let mut input = BTreeMap::new();
        input.insert("source".to_string(), input_name.to_string());
        input.insert("sha256".to_string(), hex_digest(input_bytes));
        Report {
            command,
            input,
            ..Report::default()
        }
    }

    pub fn quantity(&mut self, key: &str, q: Quantity) {
        self.quantities.insert(key.to_string(), q);
    }

    pub fn scalar(&mut self, key: &str, v: f64, p: Provenance, label: &str) {
        self.quantity(key, Quantity::new(num(v), p).labeled(label));
    }

    pub fn certificate(&mut self, key: &str, q: Quantity) {
        self.certificates.insert(key.to_string(), q);
    }

    pub fn fact(&mut self, key: &str, v: impl Into<String>) {
        self.facts.insert(key.to_string(), v.into());
    }

    pub fn config(&mut self, key: &str, v: impl Into<String>) {
        self.config.insert(key.to_string(), v.into());
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn failed_checks(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn to_value(&self) -> Value {
        let strings = |m: &BTreeMap<String, String>| {
            obj(m.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))))
        };
        let quantities =
            |m: &BTreeMap<String, Quantity>| obj(m.iter().map(|(k, q)| (k.clone(), q.to_value())));
        let checks = self
            .checks
            .iter()
            .map(|c| {
                obj([
                    ("group", Value::String(c.group.clone())),
                    ("name", Value::String(c.name.clone())),
                    (
                        "expected",
                        Quantity::new(c.expected.clone(), Provenance::Fixture).to_value(),
                    ),
                    ("computed", c.computed.to_value()),
                    (
                        "tolerance",
                        Quantity::new(num(c.tolerance), Provenance::Fixture).to_value(),
                    ),
                    ("pass", Value::Bool(c.pass)),
                ])
            })
            .collect();
        obj([
            (
                "command",
                Value::Array(self.command.iter().cloned().map(Value::String).collect()),
            ),
            ("input", strings(&self.input)),
            ("config", strings(&self.config)),
            ("quantities", quantities(&self.quantities)),
            ("certificates", quantities(&self.certificates)),
            ("facts", strings(&self.facts)),
            ("checks", Value::Array(checks)),
            (
                "warnings",
                Value::Array(self.warnings.iter().cloned().map(Value::String).collect()),
            ),
        ])
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ebmod {}", self.command.join(" "));
        for (k, v) in &self.input {
            let _ = writeln!(out, "  {k}: {v}");
        }
        let section = |out: &mut String, title: &str, m: &BTreeMap<String, Quantity>| {
            if m.is_empty() {
                return;
            }
            let _ = writeln!(out, "{title}:");
            for (k, q) in m {
                let _ = write!(
                    out,
                    "  {k} = {} [{}]",
                    compact(&q.value),
                    q.provenance.name()
                );
                if let Some(l) = &q.label {
                    let _ = write!(out, "  {l}");
                }
                out.push('\n');
            }
        };
        if !self.config.is_empty() {
            let _ = writeln!(out, "config:");
            for (k, v) in &self.config {
                let _ = writeln!(out, "  {k} = {v}");
            }
        }
        section(&mut out, "quantities", &self.quantities);
        section(&mut out, "certificates", &self.certificates);
        if !self.facts.is_empty() {
            let _ = writeln!(out, "facts:");
            for (k, v) in &self.facts {
                let _ = writeln!(out, "  {k}: {v}");
            }
        }
        if !self.checks.is_empty() {
            let _ = writeln!(out, "checks:");
            let _ = writeln!(
                out,
                "  {:<16} {:<28} {:<24} {:<24} {:<10} result",
                "group", "check", "expected", "computed", "tolerance"
            );
            for c in &self.checks {
                let _ = writeln!(
                    out,
                    "  {:<16} {:<28} {:<24} {:<24} {:<10} {}",
                    c.group,
                    c.name,
                    compact(&c.expected),
                    compact(&c.computed.value),
                    compact(&num(c.tolerance)),
                    if c.pass { "PASS" } else { "FAIL" }
                );
            }
            let failed = self.failed_checks();
            let _ = writeln!(
                out,
                "{} of {} checks passed",
                self.checks.len() - failed,
                self.checks.len()
            );
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// True when every number in `v` sits under exactly one object carrying a
/// `provenance` key.
pub fn numbers_have_provenance(v: &Value) -> bool {
    fn walk(v: &Value, depth: usize) -> bool {
        match v {
            Value::Number(_) => depth == 1,
            Value::Array(a) => a.iter().all(|x| walk(x, depth)),
            Value::Object(m) => {
                let here = usize::from(m.contains_key("provenance"));
                m.values().all(|x| walk(x, depth + here))
            }
            _ => true,
        }
    }
    walk(v, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_and_specials() {
        assert_eq!(num(2f64.sqrt()).to_string(), "1.41421356237");
        assert_eq!(num(-0.0).to_string(), "0.0");
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
        assert_eq!(num(1e-300).as_f64(), Some(1e-300));
    }

    #[test]
    fn keys_are_sorted_and_numbers_flagged() {
        let mut r = Report::new(vec!["x".into()], "test", b"abc");
        r.scalar("zeta", 1.0, Provenance::Computed, "");
        r.scalar("alpha", 2.0, Provenance::Sampled, "");
        let json = r.to_json();
        assert!(json.find("\"alpha\"").unwrap() < json.find("\"zeta\"").unwrap());
        assert!(numbers_have_provenance(&r.to_value()));
        assert_eq!(
            r.input["sha256"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let bare = obj([("x", num(1.0))]);
        assert!(!numbers_have_provenance(&bare));
    }
}
