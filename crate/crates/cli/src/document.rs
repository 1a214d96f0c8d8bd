//! JSON circuit documents. Complex numbers are `[re, im]` pairs and matrices
//! row-major arrays of pairs.

use ptrdual::linalg::CMatrix;
use ptrdual::{Circuit, Cx, Element};
use serde::{Deserialize, Serialize};

/// Largest tolerated deviation of a matrix row norm from 1.
pub const ROW_NORM_TOL: f64 = 1e-9;

pub type MatrixDocument = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDocument {
    pub s_paths: usize,
    pub i_paths: usize,
    pub elements: Vec<ElementDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementDocument {
    Pdc { s: usize, i: usize, r: f64 },
    LinearS { matrix: MatrixDocument },
    LinearI { matrix: MatrixDocument },
    PhaseS { path: usize, phi: f64 },
    PhaseI { path: usize, phi: f64 },
}

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{0}")]
    Circuit(#[from] ptrdual::Error),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> DocumentError {
    DocumentError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

pub fn cx(z: Cx<f64>) -> [f64; 2] {
    [z.re, z.im]
}

pub fn encode_matrix(m: &CMatrix<f64>) -> MatrixDocument {
    m.rows()
        .into_iter()
        .map(|row| row.iter().map(|z| cx(*z)).collect())
        .collect()
}

/// Decodes an `n x n` matrix, rejecting ragged shapes and rows whose norm is
/// not 1.
pub fn decode_matrix(
    doc: &MatrixDocument,
    n: usize,
    path: &str,
) -> Result<CMatrix<f64>, DocumentError> {
    if doc.len() != n {
        return Err(schema(
            path,
            format!("expected {n} rows, found {}", doc.len()),
        ));
    }
    let mut m = ptrdual::linalg::zeros::<f64>(n, n);
    for (j, row) in doc.iter().enumerate() {
        if row.len() != n {
            return Err(schema(
                format!("{path}[{j}]"),
                format!("expected {n} entries, found {}", row.len()),
            ));
        }
        for (k, z) in row.iter().enumerate() {
            if !(z[0].is_finite() && z[1].is_finite()) {
                return Err(schema(format!("{path}[{j}][{k}]"), "entry is not finite"));
            }
            m[[j, k]] = Cx::new(z[0], z[1]);
        }
        let norm = row
            .iter()
            .map(|z| z[0] * z[0] + z[1] * z[1])
            .sum::<f64>()
            .sqrt();
        if (norm - 1.0).abs() > ROW_NORM_TOL {
            return Err(schema(
                format!("{path}[{j}]"),
                format!("matrix is not unitary: row norm {norm}"),
            ));
        }
    }
    Ok(m)
}

impl CircuitDocument {
    pub fn to_circuit(&self) -> Result<Circuit<f64>, DocumentError> {
        let mut c = Circuit::new(self.s_paths, self.i_paths)?;
        for (k, e) in self.elements.iter().enumerate() {
            let path = format!("elements[{k}]");
            let element = match e {
                ElementDocument::Pdc { s, i, r } => Element::Pdc {
                    s: *s,
                    i: *i,
                    r: *r,
                },
                ElementDocument::LinearS { matrix } => Element::LinearS(decode_matrix(
                    matrix,
                    self.s_paths,
                    &format!("{path}.matrix"),
                )?),
                ElementDocument::LinearI { matrix } => Element::LinearI(decode_matrix(
                    matrix,
                    self.i_paths,
                    &format!("{path}.matrix"),
                )?),
                ElementDocument::PhaseS { path: p, phi } => Element::PhaseS {
                    path: *p,
                    phi: *phi,
                },
                ElementDocument::PhaseI { path: p, phi } => Element::PhaseI {
                    path: *p,
                    phi: *phi,
                },
            };
            c.push(element).map_err(|e| schema(path, e.to_string()))?;
        }
        Ok(c)
    }

    pub fn from_circuit(c: &Circuit<f64>) -> Self {
        let elements = c
            .elements()
            .iter()
            .map(|e| match e {
                Element::Pdc { s, i, r } => ElementDocument::Pdc {
                    s: *s,
                    i: *i,
                    r: *r,
                },
                Element::LinearS(m) => ElementDocument::LinearS {
                    matrix: encode_matrix(m),
                },
                Element::LinearI(m) => ElementDocument::LinearI {
                    matrix: encode_matrix(m),
                },
                Element::PhaseS { path, phi } => ElementDocument::PhaseS {
                    path: *path,
                    phi: *phi,
                },
                Element::PhaseI { path, phi } => ElementDocument::PhaseI {
                    path: *path,
                    phi: *phi,
                },
            })
            .collect();
        CircuitDocument {
            s_paths: c.n_s(),
            i_paths: c.n_i(),
            elements,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    s_paths: usize,
    i_paths: usize,
    elements: Vec<serde_json::Map<String, serde_json::Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PdcFields {
    s: usize,
    i: usize,
    r: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearFields {
    matrix: MatrixDocument,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseFields {
    path: usize,
    phi: f64,
}

fn located<'de, D: Deserialize<'de>>(
    de: impl serde::Deserializer<'de, Error = serde_json::Error>,
    prefix: &str,
) -> Result<D, DocumentError> {
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (true, ".") => "document".to_string(),
            (true, _) => inner,
            (false, ".") => prefix.to_string(),
            (false, _) => format!("{prefix}.{inner}"),
        };
        schema(path, e.into_inner().to_string())
    })
}

fn element(
    mut fields: serde_json::Map<String, serde_json::Value>,
    path: &str,
) -> Result<ElementDocument, DocumentError> {
    let tag = match fields.remove("type") {
        Some(serde_json::Value::String(t)) => t,
        Some(_) => {
            return Err(schema(
                format!("{path}.type"),
                "element type must be a string",
            ))
        }
        None => return Err(schema(path, "missing field `type`")),
    };
    let body = serde_json::Value::Object(fields);
    Ok(match tag.as_str() {
        "pdc" => {
            let f: PdcFields = located(body, path)?;
            ElementDocument::Pdc { s: f.s, i: f.i, r: f.r }
        }
        "linear_s" => ElementDocument::LinearS { matrix: located::<LinearFields>(body, path)?.matrix },
        "linear_i" => ElementDocument::LinearI { matrix: located::<LinearFields>(body, path)?.matrix },
        "phase_s" | "phase_i" => {
            let f: PhaseFields = located(body, path)?;
            if tag == "phase_s" {
                ElementDocument::PhaseS { path: f.path, phi: f.phi }
            } else {
                ElementDocument::PhaseI { path: f.path, phi: f.phi }
            }
        }
        other => {
            return Err(schema(
                format!("{path}.type"),
                format!("unknown element type `{other}`, expected one of pdc, linear_s, linear_i, phase_s, phase_i"),
            ))
        }
    })
}

/// Parses and validates a circuit document.
pub fn parse_circuit(text: &str) -> Result<Circuit<f64>, DocumentError> {
    let raw: RawDocument = located(&mut serde_json::Deserializer::from_str(text), "")?;
    let elements = raw
        .elements
        .into_iter()
        .enumerate()
        .map(|(k, e)| element(e, &format!("elements[{k}]")))
        .collect::<Result<_, _>>()?;
    CircuitDocument {
        s_paths: raw.s_paths,
        i_paths: raw.i_paths,
        elements,
    }
    .to_circuit()
}
