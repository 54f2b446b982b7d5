//! JSON exchange format.
//!
//! ```json
//! {"system": {"theory": "quantum", "dims": [2]}, "kind": "state", "data": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}
//! ```
//!
//! Hilbert-space states and effects are written as operators with complex
//! entries `[re, im]`; classical vectors and all coordinate maps are plain
//! real arrays. Kraus lists are arrays of complex matrices. Maps and Kraus
//! lists with a different output system carry `out_dims`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::circuit::Payload;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, RMat};
use crate::theory::{EffectVec, LinearMap, MapTag, StateVec, SystemLabel, TheoryId, TheoryModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    State,
    Effect,
    Map,
    Kraus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemJson {
    pub theory: TheoryId,
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dims: Option<Vec<usize>>,
}

/// Metadata attached to serialized Choi states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaithfulPairMeta {
    pub d: usize,
    pub normalization: String,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub system: SystemJson,
    pub kind: Kind,
    pub data: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faithful_pair: Option<FaithfulPairMeta>,
}

pub fn complex_matrix_to_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| {
                Value::Array(
                    (0..m.ncols())
                        .map(|cc| {
                            let z = m[(r, cc)];
                            serde_json::json!([z.re, z.im])
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

fn num(v: &Value) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::invalid(format!("expected a number, found {v}")))
}

fn rows(v: &Value) -> Result<&Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::invalid("expected a JSON array of rows"))
}

pub fn complex_matrix_from_json(v: &Value) -> Result<CMat> {
    let rs = rows(v)?;
    let nr = rs.len();
    let nc = rs.first().and_then(|r| r.as_array()).map_or(0, |r| r.len());
    let mut m = CMat::zeros(nr, nc);
    for (i, row) in rs.iter().enumerate() {
        let row = rows(row)?;
        if row.len() != nc {
            return Err(Error::invalid("ragged matrix rows"));
        }
        for (j, z) in row.iter().enumerate() {
            m[(i, j)] = match z {
                Value::Array(p) if p.len() == 2 => c(num(&p[0])?, num(&p[1])?),
                Value::Number(_) => c(num(z)?, 0.0),
                _ => return Err(Error::invalid("complex entries must be [re, im]")),
            };
        }
    }
    Ok(m)
}

pub fn real_matrix_to_json(m: &RMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|cc| serde_json::json!(m[(r, cc)])).collect()))
            .collect(),
    )
}

pub fn real_matrix_from_json(v: &Value) -> Result<RMat> {
    let rs = rows(v)?;
    let nr = rs.len();
    let nc = rs.first().and_then(|r| r.as_array()).map_or(0, |r| r.len());
    let mut m = RMat::zeros(nr, nc);
    for (i, row) in rs.iter().enumerate() {
        let row = rows(row)?;
        if row.len() != nc {
            return Err(Error::invalid("ragged matrix rows"));
        }
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = num(x)?;
        }
    }
    Ok(m)
}

pub fn real_vector_from_json(v: &Value) -> Result<Vec<f64>> {
    rows(v)?.iter().map(num).collect()
}

fn system_json(s: &SystemLabel, out: Option<&SystemLabel>) -> SystemJson {
    SystemJson {
        theory: s.theory,
        dims: s.factors.clone(),
        out_dims: out.filter(|o| *o != s).map(|o| o.factors.clone()),
    }
}

impl Document {
    pub fn from_state(model: &dyn TheoryModel, x: &StateVec) -> Document {
        let data = match model.as_hilbert() {
            Some(h) => complex_matrix_to_json(&h.density(x)),
            None => serde_json::json!(x.coords),
        };
        Document {
            system: system_json(&x.system, None),
            kind: Kind::State,
            data,
            faithful_pair: None,
        }
    }

    pub fn from_effect(model: &dyn TheoryModel, a: &EffectVec) -> Document {
        let data = match model.as_hilbert() {
            Some(h) => complex_matrix_to_json(&h.effect_operator(a)),
            None => serde_json::json!(a.coords),
        };
        Document {
            system: system_json(&a.system, None),
            kind: Kind::Effect,
            data,
            faithful_pair: None,
        }
    }

    pub fn from_map(m: &LinearMap) -> Document {
        Document {
            system: system_json(&m.input, Some(&m.output)),
            kind: Kind::Map,
            data: real_matrix_to_json(&m.matrix),
            faithful_pair: None,
        }
    }

    pub fn from_kraus(input: &SystemLabel, output: &SystemLabel, kraus: &[CMat]) -> Document {
        Document {
            system: system_json(input, Some(output)),
            kind: Kind::Kraus,
            data: Value::Array(kraus.iter().map(complex_matrix_to_json).collect()),
            faithful_pair: None,
        }
    }

    pub fn input_system(&self) -> SystemLabel {
        SystemLabel::composite(self.system.theory, self.system.dims.clone())
    }

    pub fn output_system(&self) -> SystemLabel {
        SystemLabel::composite(
            self.system.theory,
            self.system.out_dims.clone().unwrap_or_else(|| self.system.dims.clone()),
        )
    }

    fn check_theory(&self, model: &dyn TheoryModel) -> Result<()> {
        if self.system.theory != model.id() {
            return Err(Error::invalid(format!(
                "document is for theory {}, model is {}",
                self.system.theory,
                model.id()
            )));
        }
        Ok(())
    }

    pub fn to_state(&self, model: &dyn TheoryModel) -> Result<StateVec> {
        self.check_theory(model)?;
        if self.kind != Kind::State {
            return Err(Error::invalid("document does not hold a state"));
        }
        let sys = self.input_system();
        match model.as_hilbert() {
            Some(h) => h.state_from_density(&sys, &complex_matrix_from_json(&self.data)?),
            None => StateVec::new(sys, real_vector_from_json(&self.data)?),
        }
    }

    pub fn to_effect(&self, model: &dyn TheoryModel) -> Result<EffectVec> {
        self.check_theory(model)?;
        if self.kind != Kind::Effect {
            return Err(Error::invalid("document does not hold an effect"));
        }
        let sys = self.input_system();
        match model.as_hilbert() {
            Some(h) => h.effect_from_operator(&sys, &complex_matrix_from_json(&self.data)?),
            None => EffectVec::new(sys, real_vector_from_json(&self.data)?),
        }
    }

    pub fn to_kraus(&self) -> Result<Vec<CMat>> {
        if self.kind != Kind::Kraus {
            return Err(Error::invalid("document does not hold a Kraus list"));
        }
        rows(&self.data)?.iter().map(complex_matrix_from_json).collect()
    }

    pub fn to_map(&self, model: &dyn TheoryModel) -> Result<LinearMap> {
        self.check_theory(model)?;
        let (a, b) = (self.input_system(), self.output_system());
        match self.kind {
            Kind::Map => LinearMap::new(a, b, real_matrix_from_json(&self.data)?, MapTag::Unconstrained),
            Kind::Kraus => {
                let h = model
                    .as_hilbert()
                    .ok_or_else(|| Error::unsupported("Kraus lists need a Hilbert-space theory"))?;
                h.map_from_kraus(&a, &b, self.to_kraus()?)
            }
            _ => Err(Error::invalid("document does not hold a map")),
        }
    }

    pub fn to_payload(&self, model: &dyn TheoryModel) -> Result<Payload> {
        Ok(match self.kind {
            Kind::State => Payload::State(self.to_state(model)?),
            Kind::Effect => Payload::Effect(self.to_effect(model)?),
            Kind::Map | Kind::Kraus => Payload::Map(self.to_map(model)?),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Document> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_document(path: &Path) -> Result<Document> {
    Document::from_json(&read_text(path)?)
}

/// A bare Kraus list (array of complex matrices), or a full document.
pub fn read_kraus(path: &Path) -> Result<Vec<CMat>> {
    let text = read_text(path)?;
    let v: Value = serde_json::from_str(&text)?;
    if v.is_object() {
        return serde_json::from_value::<Document>(v)?.to_kraus();
    }
    rows(&v)?.iter().map(complex_matrix_from_json).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{quantum_model, TheoryModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn document_round_trip_is_bit_exact() {
        let m = quantum_model(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = m.random_state(&m.system(), &mut rng);
        let doc = Document::from_state(&m, &x);
        let back = Document::from_json(&doc.to_json()).unwrap();
        assert_eq!(doc, back);
        let u = m.random_reversible(&m.system(), &mut rng);
        let doc = Document::from_map(&u);
        let back = Document::from_json(&doc.to_json()).unwrap();
        assert_eq!(back.to_map(&m).unwrap().matrix, u.matrix);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"system":{"theory":"quantum","dims":[2]},"kind":"state","data":[],"extra":1}"#;
        assert!(Document::from_json(text).is_err());
    }
}
