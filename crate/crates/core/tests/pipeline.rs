//! End-to-end checks through the public API: PD code in, homology,
//! equivariant homology and realizations out.

use std::collections::BTreeMap;

use khoburn::corpus::builtin;
use khoburn::input::{builtin_input, parse_input, FunctorFile, Input};
use khoburn::khovanov::{ckh, homology, khovanov_functor, Coefficients, HomologyGroup, LinkDiagram};
use khoburn::periodic::{
    ekh, ekh_dense_oracle, equivariant_complex, induced_action, module_resolution, required_length, validate_periodic,
    GroupModule, PeriodicDiagram, PeriodicJson,
};
use khoburn::realize::{both_routes, compare_realizations};
use khoburn::suites::{run_suite, Subject, Suite};

fn diagram(name: &str) -> LinkDiagram {
    builtin(name).unwrap().unwrap().diagram
}

fn periodic(name: &str) -> PeriodicDiagram {
    builtin(name).unwrap().unwrap().periodic.unwrap()
}

fn kh_z(d: &LinkDiagram) -> BTreeMap<(i64, i64), String> {
    let c = ckh(&khovanov_functor(d).unwrap()).unwrap();
    homology(&c, Coefficients::Z)
        .unwrap()
        .into_iter()
        .filter(|(_, g)| !g.is_zero())
        .map(|(k, g)| (k, g.to_string()))
        .collect()
}

fn table(entries: &[((i64, i64), &str)]) -> BTreeMap<(i64, i64), String> {
    entries.iter().map(|&(k, g)| (k, g.to_string())).collect()
}

// Integral tables below are the published Khovanov tables of these links
// (positive orientations), an oracle independent of this code.

#[test]
fn unknots_agree() {
    let u = table(&[((0, -1), "Z"), ((0, 1), "Z")]);
    for name in ["unknot-0", "unknot-1", "unknot-2", "unknot-braid"] {
        assert_eq!(kh_z(&diagram(name)), u, "{name}");
    }
}

#[test]
fn hopf_table() {
    assert_eq!(kh_z(&diagram("hopf")), table(&[((0, 0), "Z"), ((0, 2), "Z"), ((2, 4), "Z"), ((2, 6), "Z")]));
}

#[test]
fn trefoil_diagrams_agree() {
    let t = table(&[((0, 1), "Z"), ((0, 3), "Z"), ((2, 5), "Z"), ((3, 7), "Z/2"), ((3, 9), "Z")]);
    assert_eq!(kh_z(&diagram("trefoil")), t);
    assert_eq!(kh_z(&diagram("trefoil-b3")), t);
}

#[test]
fn figure_eight_table() {
    let t = table(&[
        ((-2, -5), "Z"),
        ((-1, -3), "Z/2"),
        ((-1, -1), "Z"),
        ((0, -1), "Z"),
        ((0, 1), "Z"),
        ((1, 1), "Z"),
        ((2, 3), "Z/2"),
        ((2, 5), "Z"),
    ]);
    assert_eq!(kh_z(&diagram("figure-eight")), t);
}

#[test]
fn t24_table() {
    let t = table(&[
        ((0, 2), "Z"),
        ((0, 4), "Z"),
        ((2, 6), "Z"),
        ((3, 8), "Z/2"),
        ((3, 10), "Z"),
        ((4, 10), "Z"),
        ((4, 12), "Z"),
    ]);
    assert_eq!(kh_z(&diagram("t24")), t);
}

#[test]
fn field_ranks_follow_universal_coefficients() {
    for name in ["trefoil", "figure-eight", "t24"] {
        let c = ckh(&khovanov_functor(&diagram(name)).unwrap()).unwrap();
        let z = homology(&c, Coefficients::Z).unwrap();
        let f2 = homology(&c, Coefficients::F2).unwrap();
        let q = homology(&c, Coefficients::Q).unwrap();
        let tor2 = |g: Option<&HomologyGroup>| g.map_or(0, |g| g.torsion.iter().filter(|t| *t % 2 == 0).count());
        for (&(i, j), g) in &z {
            assert_eq!(q.get(&(i, j)).map_or(0, |h| h.rank), g.rank);
            let expect = g.rank + tor2(Some(g)) + tor2(z.get(&(i + 1, j)));
            assert_eq!(f2.get(&(i, j)).map_or(0, |h| h.rank), expect, "{name} ({i},{j})");
        }
    }
}

#[test]
fn hopf_ekh_trivial_frozen() {
    // Z/2 acting on the Hopf link: every Kh(F2) class survives in each
    // filtration degree (dense oracle agreement is checked below).
    let p = periodic("hopf");
    let kf = khovanov_functor(&p.diagram).unwrap();
    let ec = equivariant_complex(&kf, &induced_action(&p, &kf).unwrap()).unwrap();
    let t = ekh(&ec, &GroupModule::trivial(2), 4).unwrap();
    let mut expect = BTreeMap::new();
    for j in 0..=4 {
        for (i, q) in [(0, 0), (0, 2), (2, 4), (2, 6)] {
            expect.insert((j, i, q), 1);
        }
    }
    assert_eq!(t.entries, expect);
}

#[test]
fn ekh_matches_dense_oracle_on_corpus() {
    for name in ["hopf", "unknot-2", "trefoil"] {
        let p = periodic(name);
        let kf = khovanov_functor(&p.diagram).unwrap();
        let ec = equivariant_complex(&kf, &induced_action(&p, &kf).unwrap()).unwrap();
        for module in [GroupModule::trivial(p.m), GroupModule::free(p.m)] {
            let res = module_resolution(&module, required_length(&ec.complex, 3)).unwrap();
            let fast = ekh(&ec, &module, 3).unwrap();
            let slow = ekh_dense_oracle(&ec, &res, 3).unwrap();
            assert_eq!(fast, slow, "{name}");
        }
    }
}

#[test]
fn wrong_order_sigma_rejected() {
    let p = periodic("trefoil").to_json();
    let bad = PeriodicJson { m: 2, ..p };
    let v = PeriodicDiagram::from_json(&bad).map(|d| validate_periodic(&d).report.passed());
    assert!(!matches!(v, Ok(true)));
}

#[test]
fn realize_trefoil_records_signs() {
    let p = periodic("trefoil");
    let kf = khovanov_functor(&p.diagram).unwrap();
    let phi = induced_action(&p, &kf).unwrap();
    let (a, b) = both_routes(&kf.functor, &phi, -(p.diagram.n_minus as i64)).unwrap();
    let cmp = compare_realizations(&a, &b).unwrap();
    assert!(cmp.is_iso());
    let signs = cmp.signs.expect("sign assignment recorded");
    assert_eq!(signs.len(), a.len());
    assert!(signs.iter().all(|s| s.abs() == 1));
}

#[test]
fn dumped_functor_verifies_like_the_diagram() {
    let Input::Periodic(p) = builtin_input("t24").unwrap() else { panic!() };
    let (f, phi, _) = Input::Periodic(p.clone()).into_subject("t24").materialize().unwrap();
    let text = serde_json::to_string(&FunctorFile::new(&f, Some(&phi))).unwrap();
    let reread = parse_input(&text).unwrap().into_subject("file");
    for suite in [Suite::Musyt, Suite::Sz, Suite::Realize, Suite::Fixed] {
        let from_file = run_suite(suite, std::slice::from_ref(&reread), 1).unwrap();
        let direct = run_suite(suite, &[Subject::Periodic { name: "file".into(), periodic: p.clone() }], 1).unwrap();
        assert!(from_file.passed && direct.passed);
        assert_eq!(
            serde_json::to_value(&from_file.cases[0].data).unwrap(),
            serde_json::to_value(&direct.cases[0].data).unwrap()
        );
    }
}
