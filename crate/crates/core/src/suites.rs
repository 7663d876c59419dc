//! Named verification suites over diagrams, periodic diagrams, functors and
//! generated instances, with machine-readable reports.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::actions::{musyt_to_sz, relabel_sz, roundtrip_sz, sz_to_musyt, validate_musyt, validate_sz, MusytAction, RepLabel};
use crate::burnside::{validate_functor, BurnsideFunctor};
use crate::error::{Error, Result};
use crate::flowcat::{burnside_to_flowcat, check_flow_iso, flowcat_natural_iso, flowcat_to_burnside, shuffle, validate_flowcat};
use crate::generate::{generated_instances, random_relabeling};
use crate::khovanov::{ckh, homology, homology_euler, khovanov_functor, state_sum, Coefficients, LinkDiagram};
use crate::periodic::{induced_action, validate_periodic, PeriodicDiagram};
use crate::realize::{both_routes, compare_realizations, fixed_cell_comparison};
use crate::report::Report;

#[derive(Clone, Debug)]
pub enum Subject {
    Diagram { name: String, diagram: LinkDiagram },
    Periodic { name: String, periodic: PeriodicDiagram },
    Functor { name: String, functor: BurnsideFunctor, action: Option<MusytAction> },
}

impl Subject {
    pub fn name(&self) -> &str {
        match self {
            Subject::Diagram { name, .. } | Subject::Periodic { name, .. } | Subject::Functor { name, .. } => name,
        }
    }

    /// The functor, its action (trivial for plain diagrams) and the degree
    /// shift `-n-` for Khovanov functors.
    pub fn materialize(&self) -> Result<(BurnsideFunctor, MusytAction, i64)> {
        match self {
            Subject::Diagram { diagram, .. } => {
                let kf = khovanov_functor(diagram)?;
                let phi = MusytAction::trivial(&kf.functor);
                Ok((kf.functor, phi, -(diagram.n_minus as i64)))
            }
            Subject::Periodic { periodic, .. } => {
                let v = validate_periodic(periodic);
                if !v.report.passed() {
                    let first = &v.report.violations[0];
                    return Err(Error::Periodicity(format!("{}: {} ({})", first.check, first.detail, first.location)));
                }
                let kf = khovanov_functor(&periodic.diagram)?;
                let phi = induced_action(periodic, &kf)?;
                Ok((kf.functor, phi, -(periodic.diagram.n_minus as i64)))
            }
            Subject::Functor { functor, action, .. } => {
                let phi = action.clone().unwrap_or_else(|| MusytAction::trivial(functor));
                Ok((functor.clone(), phi, 0))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Functor,
    Musyt,
    Sz,
    Roundtrips,
    Realize,
    Fixed,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "functor" => Suite::Functor,
            "musyt" => Suite::Musyt,
            "sz" => Suite::Sz,
            "roundtrips" => Suite::Roundtrips,
            "realize" => Suite::Realize,
            "fixed" => Suite::Fixed,
            _ => return Err(Error::Parse(format!("unknown suite '{s}'"))),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub case: String,
    pub passed: bool,
    pub report: Report,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<serde_json::Value>,
}

impl CaseReport {
    pub fn new(case: impl Into<String>, report: Report) -> Self {
        Self { case: case.into(), passed: report.passed(), report, data: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub cases: Vec<CaseReport>,
}

/// Khovanov audits for one diagram: functor validity, `d o d = 0`, and the
/// Euler characteristic of rational homology against the state sum.
pub fn khovanov_audit(d: &LinkDiagram) -> Result<Report> {
    let mut rep = Report::new("khovanov");
    let kf = khovanov_functor(d)?;
    rep.merge(validate_functor(&kf.functor));
    for (u, k) in kf.functor.edge_keys() {
        let w = u & !(1 << k);
        let (a, b) = (kf.states[u as usize].circle_count(), kf.states[w as usize].circle_count());
        rep.check(a.abs_diff(b) == 1, "circle-count", || format!("edge {u:b} drop {k}"), || format!("{a} and {b} circles"));
    }
    let c = ckh(&kf)?;
    rep.check(c.check_d_squared()?, "d-squared", || "ckh".into(), || "d o d != 0 over Z".into());
    let h = homology(&c, Coefficients::Q)?;
    let (e, s) = (homology_euler(&h), state_sum(d)?);
    rep.check(e == s, "euler", || "ckh".into(), || format!("homology gives {e}, state sum {s}"));
    Ok(rep)
}

/// The three round trips of the action formalisms on one instance.
pub fn roundtrip_report(f: &BurnsideFunctor, phi: &MusytAction, rng: &mut ChaCha8Rng) -> Result<Report> {
    let mut rep = Report::new("roundtrips");
    let m = phi.group.order();
    let psi = musyt_to_sz(f, phi)?;
    rep.merge(validate_sz(f, &psi));
    let back = sz_to_musyt(f, &psi)?;
    rep.check(back == *phi, "musyt-sz-musyt", || "action".into(), || "round trip is not the identity".into());
    let w = roundtrip_sz(f, &psi)?;
    rep.check(w.report.passed() && w.is_identity(), "sz-musyt-sz", || "identity labels".into(), || format!("{:?}", w.report.violations.first()));
    let relabeled = relabel_sz(f, &psi, &random_relabeling(f, m, rng))?;
    rep.merge(validate_sz(f, &relabeled));
    let w = roundtrip_sz(f, &relabeled)?;
    rep.check(w.report.passed(), "sz-musyt-sz", || "relabeled".into(), || format!("{:?}", w.report.violations.first()));
    let c = burnside_to_flowcat(f, phi, RepLabel::default())?;
    rep.merge(validate_flowcat(&c));
    let (d, _) = shuffle(&c, rng);
    let (f2, phi2, shift) = flowcat_to_burnside(&d)?;
    let d2 = burnside_to_flowcat(&f2, &phi2, shift)?;
    match flowcat_natural_iso(&d, &d2)? {
        Some(iso) => {
            let chk = check_flow_iso(&d, &d2, &iso);
            rep.check(chk.passed(), "bps-musyt-bps", || "witness".into(), || format!("{:?}", chk.violations.first()));
        }
        None => rep.fail("bps-musyt-bps", "witness".into(), "no equivariant isomorphism found".into()),
    }
    Ok(rep)
}

pub fn run_case(suite: Suite, subject: &Subject, rng: &mut ChaCha8Rng) -> Result<CaseReport> {
    let name = subject.name().to_string();
    if suite == Suite::Functor {
        let rep = match subject {
            Subject::Diagram { diagram, .. } => khovanov_audit(diagram)?,
            Subject::Periodic { periodic, .. } => khovanov_audit(&periodic.diagram)?,
            Subject::Functor { functor, .. } => validate_functor(functor),
        };
        return Ok(CaseReport::new(name, rep));
    }
    let (f, phi, shift) = subject.materialize()?;
    Ok(match suite {
        Suite::Functor => unreachable!(),
        Suite::Musyt => CaseReport::new(name, validate_musyt(&f, &phi)),
        Suite::Sz => {
            let psi = musyt_to_sz(&f, &phi)?;
            CaseReport::new(name, validate_sz(&f, &psi))
        }
        Suite::Roundtrips => CaseReport::new(name, roundtrip_report(&f, &phi, rng)?),
        Suite::Realize => {
            let (bps, sz) = both_routes(&f, &phi, shift)?;
            let cmp = compare_realizations(&bps, &sz)?;
            let mut rep = cmp.report.clone();
            rep.merge(bps.validate());
            rep.merge(sz.validate());
            let mut case = CaseReport::new(name, rep);
            case.data = Some(serde_json::json!({
                "cells": bps.len(),
                "signs": cmp.signs,
                "action_twist": cmp.action_twist,
                "obstruction": cmp.obstruction,
            }));
            case
        }
        Suite::Fixed => {
            let mut rep = Report::new("fixed");
            let mut counts = Vec::new();
            for index in phi.group.divisors() {
                let r = fixed_cell_comparison(&f, &phi, index)?;
                counts.push(serde_json::json!({"index": index, "order": r.subgroup_order, "fixed_cells": r.fixed_cells, "prime": r.prime}));
                rep.merge(r.report);
            }
            let mut case = CaseReport::new(name, rep);
            case.data = Some(serde_json::Value::Array(counts));
            case
        }
    })
}

pub fn run_suite(suite: Suite, subjects: &[Subject], seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    for s in subjects {
        cases.push(run_case(suite, s, &mut rng)?);
    }
    Ok(SuiteReport { suite, passed: cases.iter().all(|c| c.passed), cases })
}

/// Generated instances as subjects (`n <= 3`, `m` in `ms`, `|F(v)| <= 3`).
pub fn generated_subjects(ms: &[usize]) -> Result<Vec<Subject>> {
    Ok(generated_instances(ms)?
        .into_iter()
        .map(|i| Subject::Functor { name: i.name, functor: i.functor, action: Some(i.action) })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus;

    #[test]
    fn corpus_functor_suite() {
        let subjects: Vec<Subject> = corpus()
            .unwrap()
            .into_iter()
            .filter(|e| e.diagram.n() <= 3)
            .map(|e| Subject::Diagram { name: e.name.into(), diagram: e.diagram })
            .collect();
        let r = run_suite(Suite::Functor, &subjects, 1).unwrap();
        assert!(r.passed, "{:?}", r.cases.iter().find(|c| !c.passed));
    }

    #[test]
    fn generated_roundtrips_sample() {
        let subjects = generated_subjects(&[2]).unwrap();
        let r = run_suite(Suite::Roundtrips, &subjects[..10], 7).unwrap();
        assert!(r.passed, "{:?}", r.cases.iter().find(|c| !c.passed));
    }
}
