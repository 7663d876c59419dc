//! One line per acceptance criterion; exits nonzero if any fails.

use std::time::{Duration, Instant};

use khoburn::actions::{musyt_to_sz, validate_musyt, validate_sz};
use khoburn::burnside::validate_functor;
use khoburn::corpus::{corpus, periodic_corpus};
use khoburn::cube::{face_poset, fixed_face_poset, posets_isomorphic, CubeVertex, CyclicAction};
use khoburn::generate::swap_ladybug;
use khoburn::khovanov::{ckh, homology, homology_euler, khovanov_functor, state_sum, Coefficients};
use khoburn::periodic::{ekh, equivariant_complex, induced_action, kh_f2_as_ekh, module_resolution, GroupModule};
use khoburn::realize::{both_routes, compare_realizations, fixed_cell_comparison};
use khoburn::suites::{generated_subjects, roundtrip_report};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn err<E: std::fmt::Display>(ctx: &str) -> impl FnOnce(E) -> String + '_ {
    move |e| format!("{ctx}: {e}")
}

fn c1_d_squared() -> Outcome {
    let mut n = 0;
    for e in corpus().map_err(err("corpus"))? {
        let kf = khovanov_functor(&e.diagram).map_err(err(e.name))?;
        let c = ckh(&kf).map_err(err(e.name))?;
        if !c.check_d_squared().map_err(err(e.name))? {
            return Err(format!("{}: d o d != 0", e.name));
        }
        n += 1;
    }
    Ok(format!("{n} diagrams"))
}

fn c2_euler() -> Outcome {
    let mut n = 0;
    for e in corpus().map_err(err("corpus"))? {
        let kf = khovanov_functor(&e.diagram).map_err(err(e.name))?;
        let h = homology(&ckh(&kf).map_err(err(e.name))?, Coefficients::Q).map_err(err(e.name))?;
        let (a, b) = (homology_euler(&h), state_sum(&e.diagram).map_err(err(e.name))?);
        if a != b {
            return Err(format!("{}: homology {a} vs state sum {b}", e.name));
        }
        n += 1;
    }
    Ok(format!("{n} diagrams"))
}

fn c3_hexagon() -> Outcome {
    let mut mutated = None;
    let mut n = 0;
    for e in corpus().map_err(err("corpus"))? {
        let kf = khovanov_functor(&e.diagram).map_err(err(e.name))?;
        let r = validate_functor(&kf.functor);
        if !r.passed() {
            return Err(format!("{}: {:?}", e.name, r.violations[0]));
        }
        n += 1;
        if mutated.is_none() {
            if let Some((g, face)) = swap_ladybug(&kf.functor) {
                let m = validate_functor(&g);
                if !m.has("hexagon") || m.violations.iter().any(|v| v.check != "hexagon") {
                    return Err(format!("{}: ladybug swap at {face:?} gave {:?}", e.name, m.violations));
                }
                mutated = Some((e.name, m.violations.len()));
            }
        }
    }
    let (name, k) = mutated.ok_or("no corpus functor with a ladybug face")?;
    Ok(format!("{n} functors valid; ladybug swap on {name} caught by {k} hexagon violations"))
}

fn c4_roundtrips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let generated = generated_subjects(&[2, 3]).map_err(err("generated"))?;
    let mut subjects = generated.clone();
    for (name, p) in periodic_corpus().map_err(err("corpus"))? {
        subjects.push(khoburn::suites::Subject::Periodic { name: name.into(), periodic: p });
    }
    for s in &subjects {
        let (f, phi, _) = s.materialize().map_err(err(s.name()))?;
        let r = roundtrip_report(&f, &phi, &mut rng).map_err(err(s.name()))?;
        if !r.passed() {
            return Err(format!("{}: {:?}", s.name(), r.violations[0]));
        }
    }
    Ok(format!("{} generated + {} periodic corpus instances", generated.len(), subjects.len() - generated.len()))
}

fn c5_realizations() -> Outcome {
    let (mut cells, mut fixed) = (0, 0);
    for (name, p) in periodic_corpus().map_err(err("corpus"))? {
        let kf = khovanov_functor(&p.diagram).map_err(err(name))?;
        let phi = induced_action(&p, &kf).map_err(err(name))?;
        let (bps, sz) = both_routes(&kf.functor, &phi, -(p.diagram.n_minus as i64)).map_err(err(name))?;
        let cmp = compare_realizations(&bps, &sz).map_err(err(name))?;
        if !(cmp.is_iso() && cmp.f2_equal) {
            return Err(format!("{name}: {:?} obstruction {:?}", cmp.report.violations.first(), cmp.obstruction));
        }
        cells += bps.len();
        for index in phi.group.divisors() {
            let r = fixed_cell_comparison(&kf.functor, &phi, index).map_err(err(name))?;
            if !r.report.passed() {
                return Err(format!("{name} index {index}: {:?}", r.report.violations[0]));
            }
            fixed += 1;
        }
    }
    Ok(format!("{cells} cells matched up to diagonal signs; {fixed} subgroup fixed models equal"))
}

fn c6_axioms() -> Outcome {
    let mut checked = 0;
    for (name, p) in periodic_corpus().map_err(err("corpus"))? {
        let kf = khovanov_functor(&p.diagram).map_err(err(name))?;
        let phi = induced_action(&p, &kf).map_err(err(name))?;
        let r = validate_musyt(&kf.functor, &phi);
        if !r.passed() {
            return Err(format!("{name}: {:?}", r.violations[0]));
        }
        let psi = musyt_to_sz(&kf.functor, &phi).map_err(err(name))?;
        let s = validate_sz(&kf.functor, &psi);
        if !s.passed() {
            return Err(format!("{name}: {:?}", s.violations[0]));
        }
        checked += r.checked + s.checked;
    }
    Ok(format!("{checked} conditions"))
}

fn c7_ekh() -> Outcome {
    for m in [2, 3, 4] {
        for module in [GroupModule::trivial(m), GroupModule::free(m)] {
            let res = module_resolution(&module, 6).map_err(err("resolution"))?;
            let r = res.verify();
            if !r.passed() || !res.covers(6) {
                return Err(format!("m={m} resolution: {:?}", r.violations.first()));
            }
        }
    }
    let mut n = 0;
    for (name, p) in periodic_corpus().map_err(err("corpus"))? {
        let kf = khovanov_functor(&p.diagram).map_err(err(name))?;
        let phi = induced_action(&p, &kf).map_err(err(name))?;
        let ec = equivariant_complex(&kf, &phi).map_err(err(name))?;
        let t = ekh(&ec, &GroupModule::free(p.m), 4).map_err(err(name))?;
        let kh = kh_f2_as_ekh(&ec.complex).map_err(err(name))?;
        if t.entries != kh {
            return Err(format!("{name}: free EKh {:?} vs Kh(F2) {:?}", t.entries, kh));
        }
        n += 1;
    }
    Ok(format!("resolutions exact to length 6 (m = 2, 3, 4); {n} diagrams"))
}

fn ordered_partitions(r: usize, k: usize) -> usize {
    // k! S(r, k), by inclusion-exclusion over empty blocks
    let binom = |n: usize, j: usize| (0..j).fold(1i128, |acc, t| acc * (n - t) as i128 / (t + 1) as i128);
    let s: i128 = (0..=k).map(|j| if j % 2 == 0 { 1 } else { -1 } * binom(k, j) * ((k - j) as i128).pow(r as u32)).sum();
    s as usize
}

fn c8_permutohedra() -> Outcome {
    for r in 1..=5 {
        let p = face_poset(&CubeVertex::one(r), &CubeVertex::zero(r)).map_err(err("face poset"))?;
        let expect: Vec<usize> = (0..r).map(|d| ordered_partitions(r, r - d)).collect();
        if p.f_vector() != expect {
            return Err(format!("r={r}: f-vector {:?} vs {:?}", p.f_vector(), expect));
        }
        let fact: usize = (1..=r).product();
        if p.f_vector()[0] != fact {
            return Err(format!("r={r}: {} maximal chains", p.f_vector()[0]));
        }
    }
    let hex = face_poset(&CubeVertex::one(3), &CubeVertex::zero(3)).map_err(err("hexagon"))?;
    if hex.f_vector() != vec![6, 6, 1] {
        return Err(format!("hexagon {:?}", hex.f_vector()));
    }
    let mut intervals = 0;
    for m in [2usize, 3] {
        for nb in 1..=6 / m {
            let a = CyclicAction::standard(m, nb).map_err(err("action"))?;
            let n = m * nb;
            for index in a.divisors() {
                let fixed: Vec<CubeVertex> =
                    CubeVertex::all(n).filter(|u| a.is_fixed(index, u).unwrap_or(false)).collect();
                for u in &fixed {
                    for v in fixed.iter().filter(|v| u.dominates(v) && u != *v) {
                        let fp = fixed_face_poset(u, v, &a, index).map_err(err("fixed poset"))?;
                        if !fp.verify() {
                            return Err(format!("m={m} {u} >= {v} index {index}: not isomorphic"));
                        }
                        if fp.chains.len() <= 150 {
                            let n = fp.chains.len();
                            let ours: Vec<Vec<bool>> =
                                (0..n).map(|x| (0..n).map(|y| fp.chains[x].is_face_of(&fp.chains[y])).collect()).collect();
                            if posets_isomorphic(&ours, &fp.target.order_matrix()).is_none() {
                                return Err(format!("m={m} {u} >= {v} index {index}: brute force disagrees"));
                            }
                        }
                        intervals += 1;
                    }
                }
            }
        }
    }
    Ok(format!("r <= 5 f-vectors and r! chains; {intervals} fixed intervals"))
}

fn c9_fixed_functors() -> Outcome {
    let mut n = 0;
    for (name, p) in periodic_corpus().map_err(err("corpus"))? {
        let kf = khovanov_functor(&p.diagram).map_err(err(name))?;
        let phi = induced_action(&p, &kf).map_err(err(name))?;
        for index in phi.group.divisors() {
            let fp = khoburn::actions::fixed_point_functor(&kf.functor, &phi, index).map_err(err(name))?;
            let v = validate_functor(&fp.functor);
            if !v.passed() {
                return Err(format!("{name} index {index}: F^H invalid {:?}", v.violations[0]));
            }
            let r = fixed_cell_comparison(&kf.functor, &phi, index).map_err(err(name))?;
            if !r.report.passed() {
                return Err(format!("{name} index {index}: {:?}", r.report.violations[0]));
            }
            n += 1;
        }
    }
    Ok(format!("{n} (diagram, subgroup) pairs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 9] = [
        ("chain-complex axiom d o d = 0", c1_d_squared, Some(60)),
        ("Euler audit against state sum", c2_euler, None),
        ("hexagons and ladybug mutation", c3_hexagon, None),
        ("action round trips", c4_roundtrips, Some(120)),
        ("BPS and SZ realizations agree", c5_realizations, Some(60)),
        ("external action axioms", c6_axioms, None),
        ("EKh free-module sanity", c7_ekh, None),
        ("permutohedron combinatorics", c8_permutohedra, None),
        ("fixed-point functors", c9_fixed_functors, None),
    ];
    let mut failed = 0;
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let mut out = run();
        let dt = t.elapsed();
        if let (Ok(_), Some(s)) = (&out, limit) {
            if dt > Duration::from_secs(*s) {
                out = Err(format!("took {dt:.1?}, limit {s}s"));
            }
        }
        let (tag, detail) = match &out {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => {
                failed += 1;
                ("FAIL", e.clone())
            }
        };
        println!("{tag} criterion {}: {name} ({detail}) [{dt:.2?}]", k + 1);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
