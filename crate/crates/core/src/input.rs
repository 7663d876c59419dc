//! JSON input files: PD codes, periodic diagrams, and Burnside functors with
//! an optional Musyt action. The kind is detected from the top-level keys.

use serde::{Deserialize, Serialize};

use crate::actions::{MusytAction, MusytJson};
use crate::burnside::{BurnsideFunctor, FunctorJson};
use crate::corpus::builtin;
use crate::error::{Error, Result};
use crate::khovanov::{from_pd_json, LinkDiagram, PdJson};
use crate::periodic::{PeriodicDiagram, PeriodicJson};
use crate::suites::Subject;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FunctorFile {
    #[serde(flatten)]
    pub functor: FunctorJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<MusytJson>,
}

impl FunctorFile {
    pub fn new(f: &BurnsideFunctor, phi: Option<&MusytAction>) -> Self {
        Self { functor: f.to_json(), action: phi.map(|p| p.to_json(f)) }
    }
}

#[derive(Clone, Debug)]
pub enum Input {
    Diagram(LinkDiagram),
    Periodic(PeriodicDiagram),
    Functor(BurnsideFunctor, Option<MusytAction>),
}

impl Input {
    pub fn into_subject(self, name: impl Into<String>) -> Subject {
        let name = name.into();
        match self {
            Input::Diagram(diagram) => Subject::Diagram { name, diagram },
            Input::Periodic(periodic) => Subject::Periodic { name, periodic },
            Input::Functor(functor, action) => Subject::Functor { name, functor, action },
        }
    }

    /// Plain diagrams are read as periodic with the trivial group.
    pub fn periodic(self) -> Result<PeriodicDiagram> {
        match self {
            Input::Diagram(d) => Ok(PeriodicDiagram::trivial(d)),
            Input::Periodic(p) => Ok(p),
            Input::Functor(..) => Err(Error::Parse("expected a PD code, got a functor".into())),
        }
    }

    pub fn diagram(self) -> Result<LinkDiagram> {
        Ok(self.periodic()?.diagram)
    }
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Parse errors from malformed JSON or PD codes come back as `Error::Parse`;
/// periodicity is not validated here.
pub fn parse_input(text: &str) -> Result<Input> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
    let obj = v.as_object().ok_or_else(|| Error::Parse("top level must be a JSON object".into()))?;
    let wrap = |e: Error| match e {
        Error::Json(s) => Error::Parse(s),
        other => other,
    };
    if obj.contains_key("sigma_crossings") || obj.contains_key("m") && obj.contains_key("pd") {
        let j: PeriodicJson = serde_json::from_value(v).map_err(parse_err)?;
        Ok(Input::Periodic(PeriodicDiagram::from_json(&j).map_err(wrap)?))
    } else if obj.contains_key("pd") {
        let j: PdJson = serde_json::from_value(v).map_err(parse_err)?;
        Ok(Input::Diagram(from_pd_json(&j).map_err(wrap)?))
    } else {
        let j: FunctorFile = serde_json::from_value(v).map_err(parse_err)?;
        let f = BurnsideFunctor::from_json(&j.functor).map_err(wrap)?;
        let phi = j.action.as_ref().map(|a| MusytAction::from_json(&f, a)).transpose().map_err(wrap)?;
        Ok(Input::Functor(f, phi))
    }
}

pub fn builtin_input(name: &str) -> Result<Input> {
    let e = builtin(name)?.ok_or_else(|| Error::Parse(format!("no builtin diagram named '{name}'")))?;
    Ok(match e.periodic {
        Some(p) => Input::Periodic(p),
        None => Input::Diagram(e.diagram),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus;

    #[test]
    fn detects_kinds() {
        assert!(matches!(parse_input(r#"{"pd": [[2,2,1,1]]}"#).unwrap(), Input::Diagram(_)));
        assert!(matches!(parse_input(r#"{"pd": [[1,2]]}"#), Err(Error::Parse(_))));
        assert!(matches!(parse_input("[1"), Err(Error::Parse(_))));
        for e in corpus().unwrap() {
            if let Some(p) = &e.periodic {
                let text = serde_json::to_string(&p.to_json()).unwrap();
                let Input::Periodic(q) = parse_input(&text).unwrap() else { panic!() };
                assert_eq!(&q, p);
            }
        }
    }

    #[test]
    fn functor_file_roundtrip() {
        let Input::Periodic(p) = builtin_input("hopf").unwrap() else { panic!() };
        let Subject::Periodic { .. } = Input::Periodic(p.clone()).into_subject("h") else { panic!() };
        let (f, phi, _) = Input::Periodic(p).into_subject("h").materialize().unwrap();
        let text = serde_json::to_string(&FunctorFile::new(&f, Some(&phi))).unwrap();
        let Input::Functor(g, Some(psi)) = parse_input(&text).unwrap() else { panic!() };
        assert_eq!(g.to_json(), f.to_json());
        assert_eq!(psi, phi);
    }
}
