use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use super::envelope::Envelope;
use crate::error::{Error, Result};

type C64 = Complex64;

/// Evaluated parameter value.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(C64),
    Ident(String),
    List(Vec<Value>),
    Call { name: String, args: Vec<(String, Value)> },
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(C64::new(x, 0.0))
    }
}

impl From<C64> for Value {
    fn from(x: C64) -> Self {
        Value::Num(x)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Ident(s.to_string())
    }
}

/// A catalog request: kind, instance name (used for factor labels) and
/// parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSpec {
    pub kind: String,
    pub name: String,
    pub params: BTreeMap<String, Value>,
}

impl ComponentSpec {
    pub fn new(kind: &str, name: &str) -> Self {
        ComponentSpec { kind: kind.to_string(), name: name.to_string(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    Real,
    Complex,
    Int,
    Envelope,
    RealList,
    Ident,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamSchema {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub ty: ParamType,
    pub required: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<&'static str>,
    pub doc: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct KindSchema {
    pub kind: &'static str,
    /// Port count, or `None` when it depends on parameters.
    pub ports: Option<usize>,
    pub params: Vec<ParamSchema>,
    /// Groups of alternative parameters; exactly one group must be supplied.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub one_of: Vec<Vec<&'static str>>,
    pub doc: &'static str,
}

/// Typed access to a spec's parameters with kind-specific error messages.
pub(crate) struct Params<'a> {
    spec: &'a ComponentSpec,
}

impl<'a> Params<'a> {
    pub fn new(spec: &'a ComponentSpec, schema: &KindSchema) -> Result<Self> {
        for key in spec.params.keys() {
            if !schema.params.iter().any(|p| p.name == key) {
                return Err(Error::Validation(format!("{}: unknown parameter '{key}'", spec.kind)));
            }
        }
        for p in &schema.params {
            if p.required && !spec.params.contains_key(p.name) {
                return Err(Error::Validation(format!("{}: missing required parameter '{}'", spec.kind, p.name)));
            }
        }
        for group in &schema.one_of {
            let given: Vec<&&str> = group.iter().filter(|k| spec.params.contains_key(**k)).collect();
            if given.len() > 1 {
                return Err(Error::Validation(format!(
                    "{}: parameters {} are alternatives, give only one",
                    spec.kind,
                    group.join(" | ")
                )));
            }
        }
        Ok(Params { spec })
    }

    fn kind(&self) -> &str {
        &self.spec.kind
    }

    pub fn has(&self, key: &str) -> bool {
        self.spec.params.contains_key(key)
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.spec
            .params
            .get(key)
            .ok_or_else(|| Error::Validation(format!("{}: missing parameter '{key}'", self.kind())))
    }

    pub fn complex(&self, key: &str) -> Result<C64> {
        match self.get(key)? {
            Value::Num(c) => Ok(*c),
            other => Err(Error::Validation(format!("{}: '{key}' must be a number, got {other:?}", self.kind()))),
        }
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        let c = self.complex(key)?;
        if c.im.abs() > 1e-15 * c.re.abs().max(1.0) {
            return Err(Error::Validation(format!("{}: '{key}' must be real, got {c}", self.kind())));
        }
        Ok(c.re)
    }

    pub fn real_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.has(key) {
            self.real(key)
        } else {
            Ok(default)
        }
    }

    /// A rate parameter; validated as `key >= 0`.
    pub fn rate(&self, key: &str) -> Result<f64> {
        let v = self.real(key)?;
        if v < 0.0 || v.is_nan() {
            return Err(Error::Validation(format!("{}: violated {key} >= 0 ({key} = {v})", self.kind())));
        }
        Ok(v)
    }

    pub fn rate_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.has(key) {
            self.rate(key)
        } else {
            Ok(default)
        }
    }

    /// First present key among alternatives, as a rate.
    pub fn rate_alias(&self, keys: &[&str]) -> Result<f64> {
        for k in keys {
            if self.has(k) {
                return self.rate(k);
            }
        }
        Err(Error::Validation(format!("{}: missing parameter {}", self.kind(), keys.join(" | "))))
    }

    pub fn int(&self, key: &str) -> Result<usize> {
        let v = self.real(key)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Validation(format!("{}: '{key}' must be a non-negative integer, got {v}", self.kind())));
        }
        Ok(v as usize)
    }

    pub fn int_or(&self, key: &str, default: usize) -> Result<usize> {
        if self.has(key) {
            self.int(key)
        } else {
            Ok(default)
        }
    }

    pub fn trunc(&self, key: &str, default: usize) -> Result<usize> {
        let d = self.int_or(key, default)?;
        if d < 2 {
            return Err(Error::Validation(format!("{}: violated {key} >= 2 ({key} = {d})", self.kind())));
        }
        Ok(d)
    }

    pub fn ident(&self, key: &str) -> Result<String> {
        match self.get(key)? {
            Value::Ident(s) => Ok(s.clone()),
            other => Err(Error::Validation(format!("{}: '{key}' must be a name, got {other:?}", self.kind()))),
        }
    }

    pub fn real_list(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key)? {
            Value::List(items) => items
                .iter()
                .map(|v| match v {
                    Value::Num(c) if c.im == 0.0 => Ok(c.re),
                    other => Err(Error::Validation(format!("{}: '{key}' entries must be real, got {other:?}", self.kind()))),
                })
                .collect(),
            other => Err(Error::Validation(format!("{}: '{key}' must be a list, got {other:?}", self.kind()))),
        }
    }

    pub fn envelope(&self, key: &str) -> Result<Envelope> {
        envelope_from_value(self.get(key)?)
    }

    pub fn envelope_opt(&self, key: &str) -> Result<Option<Envelope>> {
        if self.has(key) {
            self.envelope(key).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// Builds an envelope from `gaussian(center=…, width=…)` style calls.
pub fn envelope_from_value(v: &Value) -> Result<Envelope> {
    let Value::Call { name, args } = v else {
        return Err(Error::Validation(format!("expected an envelope call, got {v:?}")));
    };
    let arg = |k: &str| -> Result<f64> {
        match args.iter().find(|(n, _)| n == k) {
            Some((_, Value::Num(c))) if c.im == 0.0 => Ok(c.re),
            Some((_, other)) => Err(Error::Validation(format!("{name}: '{k}' must be real, got {other:?}"))),
            None => Err(Error::Validation(format!("{name}: missing argument '{k}'"))),
        }
    };
    let allowed: &[&str] = match name.as_str() {
        "gaussian" => &["center", "width"],
        "square" => &["start", "duration"],
        "exp_decay" => &["start", "rate"],
        "exp_rise" => &["end", "rate"],
        _ => return Err(Error::Validation(format!("unknown envelope '{name}'"))),
    };
    if let Some((k, _)) = args.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(Error::Validation(format!("{name}: unknown argument '{k}'")));
    }
    match name.as_str() {
        "gaussian" => Envelope::gaussian(arg("center")?, arg("width")?),
        "square" => Envelope::square(arg("start")?, arg("duration")?),
        "exp_decay" => Envelope::exp_decay(arg("start")?, arg("rate")?),
        _ => Envelope::exp_rise(arg("end")?, arg("rate")?),
    }
}
