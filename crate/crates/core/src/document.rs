//! JSON problem documents.
//!
//! ```json
//! {
//!   "schemaVersion": 1,
//!   "n": 2,
//!   "m": 1,
//!   "A": [1.0, 0.0, 0.0, 2.0],
//!   "B": [[5.0, 0.0, 0.0, 4.0]],
//!   "b": [[0.0, 0.0]],
//!   "f": [0.5, 0.1],
//!   "family": { "kind": "log", "d": [1.0] },
//!   "search": { "starts": 64 }
//! }
//! ```
//!
//! Matrices are dense and row-major. `family` is either
//! `{"kind": "log", "d": [...]}` or
//! `{"kind": "quadratic-well", "alpha": [...], "lambda": [...]}`.
//! `search` is optional and accepts any subset of the search configuration
//! fields (`starts`, `box`, `tolNewton`, `maxIter`, `dedupRadius`).

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::Error;
use crate::family::{CanonicalFamily, LogBarrier, QuadraticWell};
use crate::problem::CanonicalProblem;
use crate::solver::SearchConfig;

pub const SCHEMA_VERSION: u32 = 1;

const FIELDS: [&str; 9] = ["schemaVersion", "n", "m", "A", "B", "b", "f", "family", "search"];

/// A malformed document. `field` names the offending entry.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("schema error in field \"{field}\": {message}")]
pub struct SchemaError {
    pub field: String,
    pub message: String,
}

impl SchemaError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    #[serde(rename = "schemaVersion")]
    pub schema_version: u32,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b_mats: Vec<Vec<f64>>,
    #[serde(rename = "b")]
    pub b_vecs: Vec<Vec<f64>>,
    pub f: Vec<f64>,
    pub family: CanonicalFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
}

fn field<T: DeserializeOwned>(obj: &Map<String, Value>, name: &str) -> Result<T, SchemaError> {
    let v = obj
        .get(name)
        .ok_or_else(|| SchemaError::new(name, "missing"))?;
    serde_json::from_value(v.clone()).map_err(|e| SchemaError::new(name, e.to_string()))
}

fn expect_len(name: &str, expected: usize, found: usize) -> Result<(), SchemaError> {
    if expected != found {
        return Err(SchemaError::new(
            name,
            format!("expected {expected} entries, found {found}"),
        ));
    }
    Ok(())
}

/// Overlays the keys present in `v` on the default configuration.
fn search_overrides(v: &Value) -> Result<SearchConfig, SchemaError> {
    let obj = v
        .as_object()
        .ok_or_else(|| SchemaError::new("search", "expected an object"))?;
    let mut merged = serde_json::to_value(SearchConfig::default())
        .expect("default config serializes")
        .as_object()
        .cloned()
        .unwrap_or_default();
    for (k, val) in obj {
        merged.insert(k.clone(), val.clone());
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| SchemaError::new("search", e.to_string()))
}

fn parse_family(v: &Value, m: usize) -> Result<CanonicalFamily, SchemaError> {
    let obj = v
        .as_object()
        .ok_or_else(|| SchemaError::new("family", "expected an object"))?;
    let kind: String = field(obj, "kind").map_err(|e| SchemaError::new("family.kind", e.message))?;
    let vec_of = |name: &str| -> Result<Vec<f64>, SchemaError> {
        let full = format!("family.{name}");
        let xs: Vec<f64> = field(obj, name).map_err(|e| SchemaError::new(&full, e.message))?;
        expect_len(&full, m, xs.len())?;
        Ok(xs)
    };
    let reject_extra = |allowed: &[&str]| -> Result<(), SchemaError> {
        match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(SchemaError::new(format!("family.{k}"), "unknown field")),
            None => Ok(()),
        }
    };
    let invalid = |e: Error| match e {
        Error::InvalidParameter { name, reason } => SchemaError::new(format!("family.{name}"), reason),
        other => SchemaError::new("family", other.to_string()),
    };
    match kind.as_str() {
        "log" => {
            reject_extra(&["kind", "d"])?;
            Ok(LogBarrier::new(vec_of("d")?).map_err(invalid)?.into())
        }
        "quadratic-well" => {
            reject_extra(&["kind", "alpha", "lambda"])?;
            Ok(QuadraticWell::new(vec_of("alpha")?, vec_of("lambda")?)
                .map_err(invalid)?
                .into())
        }
        other => Err(SchemaError::new(
            "family.kind",
            format!("unknown family \"{other}\" (expected \"log\" or \"quadratic-well\")"),
        )),
    }
}

impl ProblemDocument {
    /// Parses and validates a document; [`ProblemDocument::to_problem`] on
    /// the result cannot fail on dimensions or family parameters.
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let root: Value =
            serde_json::from_str(text).map_err(|e| SchemaError::new("document", e.to_string()))?;
        let obj = root
            .as_object()
            .ok_or_else(|| SchemaError::new("document", "expected a JSON object"))?;
        if let Some(k) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
            return Err(SchemaError::new(k.clone(), "unknown field"));
        }
        let schema_version: u32 = field(obj, "schemaVersion")?;
        if schema_version != SCHEMA_VERSION {
            return Err(SchemaError::new(
                "schemaVersion",
                format!("unsupported version {schema_version} (expected {SCHEMA_VERSION})"),
            ));
        }
        let n: usize = field(obj, "n")?;
        let m: usize = field(obj, "m")?;
        if n == 0 {
            return Err(SchemaError::new("n", "must be at least 1"));
        }
        if m == 0 {
            return Err(SchemaError::new("m", "must be at least 1"));
        }
        let a: Vec<f64> = field(obj, "A")?;
        expect_len("A", n * n, a.len())?;
        let b_mats: Vec<Vec<f64>> = field(obj, "B")?;
        expect_len("B", m, b_mats.len())?;
        for (k, bk) in b_mats.iter().enumerate() {
            expect_len(&format!("B[{k}]"), n * n, bk.len())?;
        }
        let b_vecs: Vec<Vec<f64>> = field(obj, "b")?;
        expect_len("b", m, b_vecs.len())?;
        for (k, bk) in b_vecs.iter().enumerate() {
            expect_len(&format!("b[{k}]"), n, bk.len())?;
        }
        let f: Vec<f64> = field(obj, "f")?;
        expect_len("f", n, f.len())?;
        let family = parse_family(obj.get("family").ok_or_else(|| SchemaError::new("family", "missing"))?, m)?;
        let search = obj.get("search").map(search_overrides).transpose()?;
        let doc = Self {
            schema_version,
            n,
            m,
            a,
            b_mats,
            b_vecs,
            f,
            family,
            search,
        };
        let problem = doc.to_problem()?;
        if let Some(cfg) = &doc.search {
            cfg.resolve_box(&problem)
                .map_err(|e| SchemaError::new("search", e.to_string()))?;
        }
        Ok(doc)
    }

    pub fn to_problem(&self) -> Result<CanonicalProblem, SchemaError> {
        let n = self.n;
        let mat = |xs: &[f64]| DMatrix::from_row_slice(n, n, xs);
        expect_len("A", n * n, self.a.len())?;
        expect_len("B", self.m, self.b_mats.len())?;
        for (k, bk) in self.b_mats.iter().enumerate() {
            expect_len(&format!("B[{k}]"), n * n, bk.len())?;
        }
        CanonicalProblem::new(
            mat(&self.a),
            self.b_mats.iter().map(|b| mat(b)).collect(),
            self.b_vecs.iter().map(|b| DVector::from_column_slice(b)).collect(),
            DVector::from_column_slice(&self.f),
            self.family.clone(),
        )
        .map_err(|e| match e {
            Error::DimensionMismatch { ref what, .. } => SchemaError::new(what.clone(), e.to_string()),
            Error::Asymmetric { ref name, .. } => SchemaError::new(name.clone(), e.to_string()),
            Error::InvalidParameter { ref name, .. } => SchemaError::new(name.clone(), e.to_string()),
            other => SchemaError::new("document", other.to_string()),
        })
    }

    pub fn from_problem(p: &CanonicalProblem, search: Option<SearchConfig>) -> Self {
        let row_major = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
        Self {
            schema_version: SCHEMA_VERSION,
            n: p.n(),
            m: p.m(),
            a: row_major(p.a()),
            b_mats: p.b_matrices().iter().map(row_major).collect(),
            b_vecs: p.b_vectors().iter().map(|b| b.as_slice().to_vec()).collect(),
            f: p.f().as_slice().to_vec(),
            family: p.family().clone(),
            search,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    const EXAMPLE: &str = r#"{
        "schemaVersion": 1, "n": 2, "m": 1,
        "A": [1, 0, 0, 2], "B": [[5, 0, 0, 4]], "b": [[0, 0]],
        "f": [0.5, 0.1], "family": {"kind": "log", "d": [1]}
    }"#;

    fn with(key: &str, value: Value) -> String {
        let mut v: Value = serde_json::from_str(EXAMPLE).unwrap();
        v.as_object_mut().unwrap().insert(key.into(), value);
        v.to_string()
    }

    fn without(key: &str) -> String {
        let mut v: Value = serde_json::from_str(EXAMPLE).unwrap();
        v.as_object_mut().unwrap().remove(key);
        v.to_string()
    }

    #[test]
    fn parses_reference_instance() {
        let doc = ProblemDocument::from_json(EXAMPLE).unwrap();
        assert_eq!(doc.to_problem().unwrap(), instances::quadratic_log_example());
        assert!(doc.search.is_none());
    }

    #[test]
    fn round_trip_through_json() {
        let doc = ProblemDocument::from_problem(&instances::double_well(1.0, 1.0, 0.3), None);
        let back = ProblemDocument::from_json(&doc.to_json_pretty()).unwrap();
        assert_eq!(doc, back);
    }

    #[test]
    fn wrong_block_count_names_b() {
        let e = ProblemDocument::from_json(&with("m", Value::from(2))).unwrap_err();
        assert_eq!(e.field, "B");
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (with("A", serde_json::json!([1, 0, 0])), "A"),
            (with("A", serde_json::json!([1, 1, 0, 2])), "A"),
            (with("b", serde_json::json!([[0]])), "b[0]"),
            (with("f", serde_json::json!("x")), "f"),
            (with("family", serde_json::json!({"kind": "log", "d": [-1]})), "family.d"),
            (with("family", serde_json::json!({"kind": "cubic"})), "family.kind"),
            (
                with("family", serde_json::json!({"kind": "quadratic-well", "alpha": [1]})),
                "family.lambda",
            ),
            (with("schemaVersion", Value::from(7)), "schemaVersion"),
            (with("extra", Value::from(1)), "extra"),
            (with("search", serde_json::json!({"starts": 0.5})), "search"),
            (without("b"), "b"),
        ];
        for (text, expected) in cases {
            let e = ProblemDocument::from_json(&text).unwrap_err();
            assert_eq!(e.field, expected, "{e}");
        }
    }

    #[test]
    fn search_overrides_merge_with_defaults() {
        let doc = ProblemDocument::from_json(&with("search", serde_json::json!({"starts": 8}))).unwrap();
        let s = doc.search.unwrap();
        assert_eq!(s.starts, 8);
        assert_eq!(s.max_iter, SearchConfig::default().max_iter);
    }
}
