//! Bundled test diagrams, with rotations for the periodic ones.

use crate::error::Result;
use crate::khovanov::{braid_closure, from_pd_json, parse_pd, LinkDiagram, PdJson};
use crate::periodic::{PeriodicDiagram, PeriodicJson};

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub diagram: LinkDiagram,
    pub periodic: Option<PeriodicDiagram>,
}

/// Closure of `word^m`-style braids with the rotation about the braid axis:
/// crossing `c` goes to `c + len/m`, and so do the edges leaving it.
pub fn periodic_braid(strands: usize, word: &[i32], m: usize) -> Result<PeriodicJson> {
    let pd = braid_closure(strands, word)?;
    let n = word.len();
    let l = n / m.max(1);
    let sigma_crossings = (0..n).map(|c| (c + l) % n).collect();
    let sigma_edges = (0..n as i64)
        .flat_map(|c| {
            let d = (c + l as i64) % n as i64;
            [[2 * c + 1, 2 * d + 1], [2 * c + 2, 2 * d + 2]]
        })
        .collect();
    Ok(PeriodicJson { pd, m, sigma_crossings, sigma_edges })
}

fn named(mut d: LinkDiagram, name: &str) -> LinkDiagram {
    d.name = Some(name.to_string());
    d
}

fn braid_entry(name: &'static str, strands: usize, word: &[i32], m: usize) -> Result<CorpusEntry> {
    let mut j = periodic_braid(strands, word, m)?;
    j.pd.name = Some(name.to_string());
    let p = PeriodicDiagram::from_json(&j)?;
    Ok(CorpusEntry { name, diagram: p.diagram.clone(), periodic: Some(p) })
}

pub fn corpus() -> Result<Vec<CorpusEntry>> {
    let kink = named(parse_pd(r#"{"pd":[[2,2,1,1]]}"#)?, "unknot-1");
    let two_kink = PeriodicDiagram::from_json(&PeriodicJson {
        pd: PdJson { name: Some("unknot-2".into()), components: Some(1), pd: vec![[1, 3, 2, 2], [3, 1, 4, 4]], signs: None },
        m: 2,
        sigma_crossings: vec![1, 0],
        sigma_edges: vec![[1, 3], [3, 1], [2, 4], [4, 2]],
    })?;
    let mut out = vec![
        CorpusEntry { name: "unknot-0", diagram: named(LinkDiagram::unlink(1), "unknot-0"), periodic: None },
        CorpusEntry { name: "unlink-2", diagram: named(LinkDiagram::unlink(2), "unlink-2"), periodic: None },
        CorpusEntry { name: "unknot-1", diagram: kink, periodic: None },
        CorpusEntry { name: "unknot-2", diagram: two_kink.diagram.clone(), periodic: Some(two_kink) },
    ];
    out.push(braid_entry("hopf", 2, &[1, 1], 2)?);
    out.push(braid_entry("trefoil", 2, &[1, 1, 1], 3)?);
    out.push(braid_entry("t24", 2, &[1, 1, 1, 1], 2)?);
    out.push(braid_entry("t24-m4", 2, &[1, 1, 1, 1], 4)?);
    out.push(braid_entry("figure-eight", 3, &[1, -2, 1, -2], 2)?);
    out.push(braid_entry("trefoil-b3", 3, &[1, 2, 1, 2], 2)?);
    out.push(CorpusEntry {
        name: "unlink-r2",
        diagram: named(from_pd_json(&braid_closure(2, &[1, -1])?)?, "unlink-r2"),
        periodic: None,
    });
    out.push(CorpusEntry {
        name: "unknot-braid",
        diagram: named(from_pd_json(&braid_closure(3, &[1, 2])?)?, "unknot-braid"),
        periodic: None,
    });
    Ok(out)
}

pub fn builtin(name: &str) -> Result<Option<CorpusEntry>> {
    Ok(corpus()?.into_iter().find(|e| e.name == name))
}

pub fn periodic_corpus() -> Result<Vec<(&'static str, PeriodicDiagram)>> {
    Ok(corpus()?.into_iter().filter_map(|e| e.periodic.map(|p| (e.name, p))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::validate_periodic;

    #[test]
    fn periodic_entries_validate() {
        for (name, p) in periodic_corpus().unwrap() {
            let v = validate_periodic(&p);
            assert!(v.report.passed(), "{name}: {:?}", v.report.violations);
        }
        let names: Vec<_> = corpus().unwrap().iter().map(|e| e.name).collect();
        assert!(names.contains(&"figure-eight"));
    }
}
