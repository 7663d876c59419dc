use std::process::{Command, Output};

use serde_json::Value;

use khoburn::corpus::builtin;
use khoburn::generate::swap_ladybug;
use khoburn::input::FunctorFile;
use khoburn::khovanov::khovanov_functor;
use khoburn::periodic::{ekh, equivariant_complex, induced_action, GroupModule};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_khoburn")).args(args).output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn kh_zero_crossing_unknot_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "u.json", r#"{"pd": [], "components": 1}"#);
    let o = run(&["kh", &f]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let cells: Vec<(i64, i64, String)> = v["homology"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["i"].as_i64().unwrap(), r["q"].as_i64().unwrap(), r["group"].as_str().unwrap().to_string()))
        .collect();
    assert_eq!(cells, vec![(0, -1, "Z".into()), (0, 1, "Z".into())]);
    assert_eq!(v["euler_audit"], true);
}

#[test]
fn kh_malformed_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [("a.json", "{\"pd\": [[1,2,3]]}"), ("b.json", "not json"), ("c.json", "{\"pd\": [[1,2,3,5]]}")] {
        let o = run(&["kh", &write(&dir, name, text)]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(run(&["kh", "/nonexistent/file.json"]).status.code(), Some(2));
    assert_eq!(run(&["kh", "--builtin", "nope"]).status.code(), Some(2));
}

#[test]
fn kh_f2_gives_dimensions() {
    let v = json(&run(&["kh", "--builtin", "trefoil", "--coeffs", "f2"]));
    assert_eq!(v["coefficients"], "F2");
    let rows = v["homology"].as_array().unwrap();
    assert!(rows.iter().all(|r| r.get("group").is_none() && r["dim"].is_u64()));
    let total: u64 = rows.iter().map(|r| r["dim"].as_u64().unwrap()).sum();
    assert_eq!(total, 6);
}

#[test]
fn ekh_matches_library() {
    let v = json(&run(&["ekh", "--builtin", "hopf", "--module", "trivial", "--jmax", "4"]));
    let p = builtin("hopf").unwrap().unwrap().periodic.unwrap();
    let kf = khovanov_functor(&p.diagram).unwrap();
    let ec = equivariant_complex(&kf, &induced_action(&p, &kf).unwrap()).unwrap();
    let t = ekh(&ec, &GroupModule::trivial(2), 4).unwrap();
    let from_cli: Vec<((usize, i64, i64), usize)> = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let g = |k: &str| r[k].as_i64().unwrap();
            ((g("j") as usize, g("i"), g("q")), g("dim") as usize)
        })
        .collect();
    assert_eq!(from_cli, t.entries.into_iter().collect::<Vec<_>>());
    assert_eq!(v["free_sanity"], true);
}

#[test]
fn ekh_free_jmax0_is_kh_f2() {
    let v = json(&run(&["ekh", "--builtin", "trefoil", "--module", "free", "--jmax", "0"]));
    for r in v["ekh"].as_array().unwrap() {
        assert_eq!(r["j"], 0);
        assert_eq!(r["dim"], r["kh_f2"]);
    }
}

#[test]
fn ekh_bad_sigma_is_exit_4() {
    let mut p = builtin("trefoil").unwrap().unwrap().periodic.unwrap().to_json();
    p.m = 2;
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "t.json", &serde_json::to_string(&p).unwrap());
    let o = run(&["ekh", &f]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_roundtrips_passes() {
    let o = run(&["verify", "roundtrips", "--generated", "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert!(v["cases"].as_array().unwrap().len() > 200);
}

#[test]
fn verify_realize_trefoil_records_signs() {
    let o = run(&["verify", "realize", "--builtin", "trefoil"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let signs = v["cases"][0]["data"]["signs"].as_array().unwrap();
    assert_eq!(signs.len() as u64, v["cases"][0]["data"]["cells"].as_u64().unwrap());
    assert!(signs.iter().all(|s| s.as_i64().unwrap().abs() == 1));
}

#[test]
fn verify_functor_mutated_file_fails() {
    let d = builtin("trefoil-b3").unwrap().unwrap().diagram;
    let f = khovanov_functor(&d).unwrap().functor;
    let (g, _) = swap_ladybug(&f).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let good = write(&dir, "good.json", &serde_json::to_string(&FunctorFile::new(&f, None)).unwrap());
    let bad = write(&dir, "bad.json", &serde_json::to_string(&FunctorFile::new(&g, None)).unwrap());
    assert_eq!(run(&["verify", "functor", &good]).status.code(), Some(0));
    let o = run(&["verify", "functor", &bad]);
    assert_ne!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["passed"], false);
    assert!(v["cases"][0]["report"]["violations"].as_array().unwrap().iter().all(|x| x["check"] == "hexagon"));
}

#[test]
fn functor_dump_round_trips() {
    let o = run(&["functor", "dump", "--builtin", "hopf"]);
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "h.json", std::str::from_utf8(&o.stdout).unwrap());
    for suite in ["functor", "musyt", "sz", "roundtrips", "realize", "fixed"] {
        assert_eq!(run(&["verify", suite, &f]).status.code(), Some(0), "{suite}");
    }
}

#[test]
fn permutohedron_faces() {
    let v = json(&run(&["permutohedron", "faces", "--r", "3"]));
    assert_eq!(v["f_vector"], serde_json::json!([6, 6, 1]));
    assert_eq!(v["maximal_chains"], 6);
    let v = json(&run(&["permutohedron", "faces", "--r", "3", "--m", "3"]));
    let fixed = v["fixed"].as_array().unwrap();
    assert_eq!(fixed[0]["faces"], 1);
    assert!(fixed.iter().all(|f| f["isomorphic"] == true));
}

#[test]
fn output_is_byte_stable_across_thread_counts() {
    let args = ["verify", "realize", "--builtin", "t24"];
    let a = Command::new(env!("CARGO_BIN_EXE_khoburn")).args(args).env("KHOBURN_THREADS", "1").output().unwrap();
    let b = Command::new(env!("CARGO_BIN_EXE_khoburn")).args(args).env("KHOBURN_THREADS", "4").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["kh", "--builtin", "figure-eight", "--format", "table"]);
    let d = run(&["kh", "--builtin", "figure-eight", "--format", "table"]);
    assert_eq!(c.stdout, d.stdout);
}
