use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::triple::SlhTriple;
use crate::error::{Error, Result};
use crate::hilbert::{Factor, FactorKind, LabeledSpace, OperatorJson, TermJson};

/// Version of the triple serialization format.
pub const SCHEMA_VERSION: &str = "qnet-slh/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceJson {
    pub labels: Vec<String>,
    pub dims: Vec<usize>,
    pub kinds: Vec<FactorKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntriesJson {
    pub entries: Vec<(usize, usize, f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlhJson {
    pub schema: String,
    pub ports: Vec<String>,
    pub space: SpaceJson,
    #[serde(rename = "S")]
    pub s: Vec<Vec<EntriesJson>>,
    #[serde(rename = "L")]
    pub l: Vec<EntriesJson>,
    #[serde(rename = "H")]
    pub h: EntriesJson,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub initial: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

fn entries(op: &crate::hilbert::Operator) -> EntriesJson {
    let j = OperatorJson::from_operator(op);
    EntriesJson { entries: j.entries, terms: j.terms }
}

impl SlhJson {
    pub fn from_triple(g: &SlhTriple) -> Self {
        let sp = g.space();
        SlhJson {
            schema: SCHEMA_VERSION.to_string(),
            ports: g.ports().to_vec(),
            space: SpaceJson {
                labels: sp.labels().iter().map(|s| s.to_string()).collect(),
                dims: sp.dims(),
                kinds: sp.factors().iter().map(|f| f.kind).collect(),
            },
            s: g.s().iter().map(|row| row.iter().map(entries).collect()).collect(),
            l: g.l().iter().map(entries).collect(),
            h: entries(g.h()),
            initial: g.initial.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
            metadata: g.metadata.clone(),
        }
    }

    /// Rebuilds a time-independent triple. Initial states are not restored.
    pub fn to_triple(&self) -> Result<SlhTriple> {
        let factors: Vec<Factor> = self
            .space
            .labels
            .iter()
            .zip(&self.space.dims)
            .zip(&self.space.kinds)
            .map(|((l, &d), &k)| Factor::new(l.clone(), d, k))
            .collect();
        let space = LabeledSpace::new(factors)?;
        let op = |e: &EntriesJson| {
            OperatorJson {
                labels: self.space.labels.clone(),
                dims: self.space.dims.clone(),
                kinds: self.space.kinds.clone(),
                entries: e.entries.clone(),
                terms: e.terms.clone(),
            }
            .to_operator()
        };
        let s = self.s.iter().map(|row| row.iter().map(op).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
        let l = self.l.iter().map(op).collect::<Result<Vec<_>>>()?;
        let h = op(&self.h)?;
        let mut g = SlhTriple::from_parts(space, s, l, h, self.ports.clone())?;
        g.metadata = self.metadata.clone();
        Ok(g)
    }
}

impl SlhTriple {
    pub fn to_json(&self) -> SlhJson {
        SlhJson::from_triple(self)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("triple serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<SlhTriple> {
        let j: SlhJson = serde_json::from_str(text)?;
        if j.schema != SCHEMA_VERSION {
            return Err(Error::Unsupported(format!("schema '{}' (expected '{SCHEMA_VERSION}')", j.schema)));
        }
        j.to_triple()
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_json()).expect("triple serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::elementary::{annihilation, number};
    use crate::hilbert::Operator;
    use num_complex::Complex64;

    #[test]
    fn round_trip() {
        let a = annihilation("c", 3).unwrap();
        let g = SlhTriple::new(
            vec![vec![Operator::scalar(Complex64::new(0.0, 1.0))]],
            vec![a.scale_re(2.0)],
            number("c", 3).unwrap(),
        )
        .unwrap();
        let text = g.to_json_string();
        let back = SlhTriple::from_json_str(&text).unwrap();
        assert!(back.approx_eq(&g, 0.0));
        assert_eq!(back.content_hash(), g.content_hash());
    }
}
