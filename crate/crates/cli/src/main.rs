use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use khoburn::corpus::corpus;
use khoburn::cube::{face_poset, fixed_face_poset, CubeVertex, CyclicAction};
use khoburn::input::{builtin_input, parse_input, FunctorFile, Input};
use khoburn::khovanov::{ckh, homology, homology_euler, khovanov_functor, state_sum, Coefficients};
use khoburn::periodic::{ekh, equivariant_complex, induced_action, kh_f2_as_ekh, validate_periodic, GroupModule, PeriodicDiagram};
use khoburn::realize::{both_routes, compare_realizations, fixed_cell_comparison};
use khoburn::suites::{generated_subjects, run_suite, Subject, Suite};
use khoburn::Error;

#[derive(Parser)]
#[command(name = "khoburn", version, about = "Khovanov homotopy types with cyclic actions: homology, equivariant homology and structural checks")]
struct Cli {
    #[arg(long, value_enum, global = true, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct Source {
    /// JSON file: PD code, periodic PD code, or Burnside functor
    input: Option<PathBuf>,
    /// Use a bundled diagram instead of a file (see `khoburn corpus`)
    #[arg(long)]
    builtin: Option<String>,
}

impl Source {
    fn name(&self) -> String {
        match (&self.builtin, &self.input) {
            (Some(b), _) => b.clone(),
            (None, Some(p)) => p.display().to_string(),
            (None, None) => "-".into(),
        }
    }

    fn load(&self) -> Result<Input, Error> {
        match (&self.builtin, &self.input) {
            (Some(b), None) => builtin_input(b),
            (None, Some(p)) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
                parse_input(&text)
            }
            _ => Err(Error::Parse("give exactly one of an input file or --builtin".into())),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Khovanov homology with state-sum and Euler audit
    Kh {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "Z")]
        coeffs: Coefficients,
    },
    /// Equivariant Khovanov homology EKh^{j,q} of a periodic diagram
    Ekh {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "trivial")]
        module: String,
        #[arg(long, default_value_t = 4)]
        jmax: usize,
    },
    /// Dump the Khovanov functor (and induced action) as JSON
    Functor {
        #[command(subcommand)]
        action: FunctorCmd,
    },
    /// Run a named verification suite
    Verify {
        suite: Suite,
        #[command(flatten)]
        source: Source,
        /// Add the generated small-instance family (m = 2, 3)
        #[arg(long)]
        generated: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare the two cellular realizations
    Realize {
        #[command(subcommand)]
        action: RealizeCmd,
    },
    /// Face posets of permutohedra
    Permutohedron {
        #[command(subcommand)]
        action: PermCmd,
    },
    /// List bundled diagrams
    Corpus,
}

#[derive(Subcommand)]
enum FunctorCmd {
    Dump {
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Subcommand)]
enum RealizeCmd {
    Compare {
        #[command(flatten)]
        source: Source,
        /// Subgroup index; all subgroups when omitted
        #[arg(long)]
        index: Option<usize>,
    },
}

#[derive(Subcommand)]
enum PermCmd {
    Faces {
        /// Interval 0...0 <= 1...1 in a cube of dimension r
        #[arg(long, conflicts_with_all = ["from", "to"])]
        r: Option<usize>,
        #[arg(long, requires = "to")]
        from: Option<String>,
        #[arg(long, requires = "from")]
        to: Option<String>,
        /// Standard cyclic action of order m on m blocks
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        index: Option<usize>,
    },
}

enum Failure {
    Error(Error),
    Invariant(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Out = Result<Value, Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Json(_) => 2,
        Error::Periodicity(_) => 4,
        _ => 3,
    }
}

fn coeff_name(c: Coefficients) -> &'static str {
    match c {
        Coefficients::Z => "Z",
        Coefficients::F2 => "F2",
        Coefficients::Q => "Q",
    }
}

fn checked_periodic(input: Input) -> Result<PeriodicDiagram, Error> {
    let p = input.periodic()?;
    let v = validate_periodic(&p);
    if let Some(first) = v.report.violations.first() {
        return Err(Error::Periodicity(format!("{}: {} ({})", first.check, first.detail, first.location)));
    }
    Ok(p)
}

fn cmd_kh(source: &Source, coeffs: Coefficients) -> Out {
    let d = source.load()?.diagram()?;
    let kf = khovanov_functor(&d)?;
    let c = ckh(&kf)?;
    let h = homology(&c, coeffs)?;
    let hq = homology(&c, Coefficients::Q)?;
    let (e, s) = (homology_euler(&hq), state_sum(&d)?);
    let rows: Vec<Value> = h
        .iter()
        .filter(|(_, g)| !g.is_zero())
        .map(|(&(i, q), g)| match coeffs {
            Coefficients::Z => json!({"i": i, "q": q, "group": g.to_string(), "rank": g.rank, "torsion": g.torsion}),
            _ => json!({"i": i, "q": q, "dim": g.rank}),
        })
        .collect();
    let out = json!({
        "input": source.name(),
        "coefficients": coeff_name(coeffs),
        "homology": rows,
        "state_sum": s.to_string(),
        "homology_euler": e.to_string(),
        "euler_audit": e == s,
    });
    if e != s {
        return Err(Failure::Invariant(out));
    }
    Ok(out)
}

fn cmd_ekh(source: &Source, module: &str, jmax: usize) -> Out {
    let p = checked_periodic(source.load()?)?;
    let kf = khovanov_functor(&p.diagram)?;
    let phi = induced_action(&p, &kf)?;
    let ec = equivariant_complex(&kf, &phi)?;
    let module = GroupModule::from_kind(module, p.m)?;
    let table = ekh(&ec, &module, jmax)?;
    let free = ekh(&ec, &GroupModule::free(p.m), jmax)?;
    let kh = kh_f2_as_ekh(&ec.complex)?;
    let mut expect: BTreeMap<(usize, i64), usize> = BTreeMap::new();
    for (&(j, _, q), &d) in &kh {
        *expect.entry((j, q)).or_insert(0) += d;
    }
    let (t, f) = (table.by_jq(), free.by_jq());
    let mut keys: Vec<(usize, i64)> = t.keys().chain(f.keys()).chain(expect.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    let rows: Vec<Value> = keys
        .iter()
        .map(|k| {
            let g = |m: &BTreeMap<(usize, i64), usize>| m.get(k).copied().unwrap_or(0);
            json!({"j": k.0, "q": k.1, "dim": g(&t), "free": g(&f), "kh_f2": g(&expect)})
        })
        .collect();
    let sane = f == expect;
    let out = json!({
        "input": source.name(),
        "m": p.m,
        "module": module_name(&module),
        "jmax": jmax,
        "ekh": rows,
        "entries": table.entries.iter().map(|(&(j, i, q), &d)| json!({"j": j, "i": i, "q": q, "dim": d})).collect::<Vec<_>>(),
        "free_sanity": sane,
    });
    if !sane {
        return Err(Failure::Invariant(out));
    }
    Ok(out)
}

fn module_name(m: &GroupModule) -> String {
    if *m == GroupModule::trivial(m.m) {
        "trivial".into()
    } else if *m == GroupModule::free(m.m) {
        "free".into()
    } else {
        format!("dim {}", m.dim())
    }
}

fn cmd_dump(source: &Source) -> Out {
    let file = match source.load()? {
        Input::Functor(f, phi) => FunctorFile::new(&f, phi.as_ref()),
        input => {
            let p = checked_periodic(input)?;
            let kf = khovanov_functor(&p.diagram)?;
            let phi = induced_action(&p, &kf)?;
            FunctorFile::new(&kf.functor, (p.m > 1).then_some(&phi))
        }
    };
    Ok(serde_json::to_value(file).map_err(Error::from)?)
}

fn cmd_verify(suite: Suite, source: &Source, generated: bool, seed: u64) -> Out {
    let mut subjects: Vec<Subject> = Vec::new();
    if source.input.is_some() || source.builtin.is_some() {
        subjects.push(source.load()?.into_subject(source.name()));
    } else {
        for e in corpus()? {
            subjects.push(match e.periodic {
                Some(p) => Subject::Periodic { name: e.name.into(), periodic: p },
                None => Subject::Diagram { name: e.name.into(), diagram: e.diagram },
            });
        }
    }
    if generated {
        subjects.extend(generated_subjects(&[2, 3])?);
    }
    let report = run_suite(suite, &subjects, seed)?;
    let out = serde_json::to_value(&report).map_err(Error::from)?;
    if report.passed {
        Ok(out)
    } else {
        Err(Failure::Invariant(out))
    }
}

fn cmd_realize(source: &Source, index: Option<usize>) -> Out {
    let subject = source.load()?.into_subject(source.name());
    let (f, phi, shift) = subject.materialize()?;
    let (bps, sz) = both_routes(&f, &phi, shift)?;
    let cmp = compare_realizations(&bps, &sz)?;
    let indices = match index {
        Some(k) => vec![k],
        None => phi.group.divisors(),
    };
    let mut fixed = Vec::new();
    let mut ok = cmp.is_iso();
    for k in indices {
        let r = fixed_cell_comparison(&f, &phi, k)?;
        ok &= r.report.passed();
        fixed.push(json!({"index": r.index, "order": r.subgroup_order, "fixed_cells": r.fixed_cells, "prime": r.prime, "passed": r.report.passed(), "violations": r.report.violations}));
    }
    let out = json!({
        "input": source.name(),
        "m": phi.group.order(),
        "cells": bps.len(),
        "f2_equal": cmp.f2_equal,
        "degrees_equal": cmp.degrees_equal,
        "action_equal": cmp.action_equal,
        "signs": cmp.signs,
        "action_twist": cmp.action_twist,
        "obstruction": cmp.obstruction,
        "fixed": fixed,
        "passed": ok,
    });
    if ok {
        Ok(out)
    } else {
        Err(Failure::Invariant(out))
    }
}

fn parse_vertex(s: &str) -> Result<CubeVertex, Error> {
    let bits: Vec<u8> = s
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::Parse(format!("bad vertex '{s}'"))),
        })
        .collect::<Result<_, _>>()?;
    CubeVertex::from_slice(&bits)
}

fn cmd_faces(r: Option<usize>, from: Option<&str>, to: Option<&str>, m: Option<usize>, index: Option<usize>) -> Out {
    let (u, v) = match (r, from, to) {
        (Some(r), None, None) => (CubeVertex::one(r), CubeVertex::zero(r)),
        (None, Some(a), Some(b)) => (parse_vertex(a)?, parse_vertex(b)?),
        _ => return Err(Error::Parse("give --r or both --from and --to".into()).into()),
    };
    let p = face_poset(&u, &v)?;
    let mut out = json!({
        "from": u.to_string(),
        "to": v.to_string(),
        "dimension": p.r.saturating_sub(1),
        "f_vector": p.f_vector(),
        "euler_characteristic": p.euler_characteristic(),
        "maximal_chains": p.f_vector().first().copied().unwrap_or(0),
    });
    if let Some(m) = m {
        let n = u.dim();
        if m == 0 || n % m != 0 {
            return Err(Error::Degenerate(format!("m = {m} does not divide the dimension {n}")).into());
        }
        let a = CyclicAction::standard(m, n / m)?;
        let indices = match index {
            Some(k) => vec![k],
            None => a.divisors(),
        };
        let mut fixed = Vec::new();
        for k in indices {
            let fp = fixed_face_poset(&u, &v, &a, k)?;
            fixed.push(json!({
                "index": k,
                "faces": fp.chains.len(),
                "lower_r": fp.target.r,
                "lower_f_vector": fp.target.f_vector(),
                "isomorphic": fp.verify(),
            }));
        }
        out["fixed"] = Value::Array(fixed);
    }
    Ok(out)
}

fn cmd_corpus() -> Out {
    let rows: Vec<Value> = corpus()?
        .into_iter()
        .map(|e| json!({"name": e.name, "crossings": e.diagram.n(), "components": e.diagram.components(), "m": e.periodic.map(|p| p.m)}))
        .collect();
    Ok(Value::Array(rows))
}

fn run(cli: &Cli) -> Out {
    match &cli.command {
        Command::Kh { source, coeffs } => cmd_kh(source, *coeffs),
        Command::Ekh { source, module, jmax } => cmd_ekh(source, module, *jmax),
        Command::Functor { action: FunctorCmd::Dump { source } } => cmd_dump(source),
        Command::Verify { suite, source, generated, seed } => cmd_verify(*suite, source, *generated, *seed),
        Command::Realize { action: RealizeCmd::Compare { source, index } } => cmd_realize(source, *index),
        Command::Permutohedron { action: PermCmd::Faces { r, from, to, m, index } } => {
            cmd_faces(*r, from.as_deref(), to.as_deref(), *m, *index)
        }
        Command::Corpus => cmd_corpus(),
    }
}

fn render(v: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(v).expect("serializable"),
        Format::Table => table::render(v),
    }
}

mod table;

fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("KHOBURN_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(&cli) {
        Ok(v) => {
            emit(&render(&v, cli.format));
            ExitCode::SUCCESS
        }
        Err(Failure::Invariant(v)) => {
            emit(&render(&v, cli.format));
            eprintln!("khoburn: check failed");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("khoburn: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::Json("x".into())), 2);
        assert_eq!(exit_code(&Error::Periodicity("x".into())), 4);
        assert_eq!(exit_code(&Error::Overflow), 3);
    }

    #[test]
    fn vertices_and_faces() {
        assert_eq!(parse_vertex("101").unwrap().to_string(), "101");
        assert!(parse_vertex("12").is_err());
        let Ok(v) = cmd_faces(None, Some("110"), Some("000"), None, None) else { panic!() };
        assert_eq!(v["f_vector"], json!([2, 1]));
        assert!(cmd_faces(Some(3), None, None, Some(2), None).is_err());
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let c = Cli::try_parse_from(["khoburn", "--format", "table", "kh", "--builtin", "hopf", "--coeffs", "f2"]).unwrap();
        assert!(matches!(c.command, Command::Kh { coeffs: Coefficients::F2, .. }));
        assert!(Cli::try_parse_from(["khoburn", "verify", "bogus"]).is_err());
    }
}
