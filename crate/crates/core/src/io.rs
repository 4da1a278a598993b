//! JSON model documents.
//!
//! ```json
//! { "kind": "edge", "states": ["1", "2"], "alphabet": ["a", "b"],
//!   "matrices": { "a": [[0, 1], [0, 0]], "b": [[0, 0], ["1/1", 0]] } }
//! ```
//!
//! State-emitting documents carry `"transition"` and `"observation"` instead
//! of `"matrices"`. Probabilities are JSON numbers or `"p/q"` strings.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{EdgeEmittingHmm, Model, StateEmittingHmm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Edge,
    State,
}

/// Identifier written as a JSON string or number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ident {
    Text(String),
    Number(serde_json::Number),
}

impl Ident {
    fn into_string(self) -> String {
        match self {
            Ident::Text(s) => s,
            Ident::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prob {
    Number(f64),
    Text(String),
}

impl Prob {
    pub fn value(&self) -> Result<f64> {
        match self {
            Prob::Number(v) => Ok(*v),
            Prob::Text(s) => parse_probability(s),
        }
    }
}

/// Parses `"p/q"` (or a plain decimal string).
pub fn parse_probability(text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || Error::Parse(format!("bad probability {text:?}"));
    match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => text.parse().map_err(|_| bad()),
    }
}

type Rows = Vec<Vec<Prob>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub kind: ModelKind,
    pub states: Vec<Ident>,
    pub alphabet: Vec<Ident>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<BTreeMap<String, Rows>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Rows>,
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }
}

/// Turns a parsed document into a validated model.
pub fn validate(doc: &ModelDocument) -> Result<Model> {
    let states: Vec<String> = doc.states.iter().cloned().map(Ident::into_string).collect();
    let alphabet: Vec<String> = doc.alphabet.iter().cloned().map(Ident::into_string).collect();
    let n = states.len();
    match doc.kind {
        ModelKind::Edge => {
            if doc.transition.is_some() || doc.observation.is_some() {
                return Err(Error::BadReference("edge model with transition/observation fields".into()));
            }
            let matrices = doc.matrices.as_ref().ok_or_else(|| Error::BadReference("missing \"matrices\"".into()))?;
            if let Some(extra) = matrices.keys().find(|k| !alphabet.contains(k)) {
                return Err(Error::BadReference(format!("matrix for undeclared symbol {extra:?}")));
            }
            let mats = alphabet
                .iter()
                .map(|x| {
                    let rows = matrices
                        .get(x)
                        .ok_or_else(|| Error::BadReference(format!("no matrix for symbol {x:?}")))?;
                    to_matrix(rows, n, n, &format!("matrix {x:?}"))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Model::Edge(EdgeEmittingHmm::new(states, alphabet, mats)?))
        }
        ModelKind::State => {
            if doc.matrices.is_some() {
                return Err(Error::BadReference("state model with \"matrices\" field".into()));
            }
            let t = doc.transition.as_ref().ok_or_else(|| Error::BadReference("missing \"transition\"".into()))?;
            let o = doc.observation.as_ref().ok_or_else(|| Error::BadReference("missing \"observation\"".into()))?;
            let t = to_matrix(t, n, n, "transition")?;
            let o = to_matrix(o, n, alphabet.len(), "observation")?;
            Ok(Model::State(StateEmittingHmm::new(states, alphabet, t, o)?))
        }
    }
}

pub fn parse_model(text: &str) -> Result<Model> {
    validate(&ModelDocument::from_json(text)?)
}

pub fn read_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

pub fn to_document(model: &Model) -> ModelDocument {
    let ids = |v: &[String]| v.iter().cloned().map(Ident::Text).collect::<Vec<_>>();
    let rows = |m: &DMatrix<f64>| -> Rows {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Prob::Number(m[(i, j)])).collect()).collect()
    };
    match model {
        Model::Edge(m) => ModelDocument {
            kind: ModelKind::Edge,
            states: ids(m.states()),
            alphabet: ids(m.alphabet()),
            matrices: Some(m.alphabet().iter().cloned().zip(m.matrices().iter().map(rows)).collect()),
            transition: None,
            observation: None,
        },
        Model::State(m) => ModelDocument {
            kind: ModelKind::State,
            states: ids(m.states()),
            alphabet: ids(m.alphabet()),
            matrices: None,
            transition: Some(rows(m.transition())),
            observation: Some(rows(m.observation())),
        },
    }
}

fn to_matrix(rows: &Rows, nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::BadReference(format!("{what} must be {nrows}x{ncols}")));
    }
    let mut m = DMatrix::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            m[(i, j)] = p.value()?;
        }
    }
    Ok(m)
}
