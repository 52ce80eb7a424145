//! Acceptance criteria, one line per criterion.
//!
//! Run all with `cargo test --test acceptance`; pass criterion numbers after
//! `--` to run a subset.

mod gen;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

use modcheck_cli::stages::base_contracts;
use modcheck_cli::{load_project, Project, Report};
use modcheck_core::alarm::AlarmClass;
use modcheck_core::analyzer::{analyze, concrete_run, ConcreteStop};
use modcheck_core::domains::concrete::int_binop;
use modcheck_core::domains::{
    abs_binop, AbstractValue, BinOp, DomainConfig, IntInterval, Scalar, ScalarType, ZeroValue,
};
use modcheck_core::frontend::{
    contracts_to_string, parse_module, resolve_project, ContractSet, StmtKind,
};
use modcheck_core::harness::{verify_module, HarnessOptions};
use modcheck_core::ifacespec::{constraints_to_contracts, parse_interface};
use modcheck_core::inference::{
    aggregate_global, aggregate_module, run_fixpoint, FixpointOptions, SummaryDatabase,
};

type Check = fn() -> Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    check: Check,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(rel)
}

fn project(rel: &str, interface: &[&str]) -> Result<Project, String> {
    let ifaces: Vec<PathBuf> = interface.iter().map(|i| corpus(i)).collect();
    load_project(&[corpus(rel)], &[], &ifaces, None).map_err(|e| e.to_string())
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn modcheck(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_modcheck"))
        .args(args)
        .env_remove("MODCHECK_DB")
        .output()
        .expect("modcheck runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temporary directory")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("UTF-8 path")
}

// ---- 1 ----

fn zero_table() -> Result<String, String> {
    use ZeroValue::*;
    let order = [Bottom, Zero, NonZero, Top];
    // Rows are the left operand, columns the right one.
    let expected = [
        [Bottom, Zero, NonZero, Top],
        [Zero, Zero, NonZero, Top],
        [NonZero, NonZero, Top, Top],
        [Top, Top, Top, Top],
    ];
    let cfg = DomainConfig::default();
    for (i, a) in order.iter().enumerate() {
        for (j, b) in order.iter().enumerate() {
            let out = abs_binop(
                BinOp::Add,
                &AbstractValue::Zero(*a),
                &AbstractValue::Zero(*b),
                cfg.int_type(),
                &cfg,
            );
            ensure(out.value == AbstractValue::Zero(expected[i][j]), || {
                format!(
                    "{a:?} + {b:?} gave {:?}, expected {:?}",
                    out.value, expected[i][j]
                )
            })?;
            ensure(out.alarms.is_empty(), || {
                format!("{a:?} + {b:?} raised {:?}", out.alarms)
            })?;
        }
    }
    Ok("16/16 cells".into())
}

// ---- 2 ----

const FUZZ_PROGRAMS: u64 = 1000;
const FUZZ_SAMPLES: usize = 10_000;

fn inputs(seed: u64) -> Vec<(i64, i64)> {
    let edges = [-128, -127, -2, -1, 0, 1, 2, 3, 7, 8, 126, 127];
    let mut set: BTreeSet<(i64, i64)> = edges
        .iter()
        .flat_map(|&a| edges.iter().map(move |&b| (a, b)))
        .collect();
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    while set.len() < FUZZ_SAMPLES {
        set.insert((rng.gen_range(-128..=127), rng.gen_range(-128..=127)));
    }
    set.into_iter().collect()
}

fn fuzz() -> Result<String, String> {
    let cfg = DomainConfig::with_int_bits(8);
    let none = ContractSet::new();
    let mut errors = 0u64;
    let mut erroneous_programs = 0u64;
    let mut classes: BTreeMap<AlarmClass, u64> = BTreeMap::new();
    let mut runs = 0u64;
    for seed in 0..FUZZ_PROGRAMS {
        let src = gen::program(seed);
        let m = parse_module(&src, "m.c").map_err(|e| format!("seed {seed}: {e}\n{src}"))?;
        let p = resolve_project(vec![m]).map_err(|e| format!("seed {seed}: {e}\n{src}"))?;
        let r = analyze(&p, "f", &none, &cfg).map_err(|e| format!("seed {seed}: {e}\n{src}"))?;
        let alarms: BTreeSet<_> = r.alarms.iter().map(|a| (a.class, a.loc)).collect();
        let mut seen = BTreeSet::new();
        for (a, b) in inputs(seed) {
            runs += 1;
            match concrete_run(&p, "f", &[Scalar::Int(a), Scalar::Int(b)], &cfg) {
                Ok(Some(e)) => {
                    errors += 1;
                    seen.insert(e.class);
                    ensure(alarms.contains(&(e.class, e.loc)), || {
                        format!(
                            "seed {seed}: missed {:?} at {} for a={a} b={b}\n{src}\nalarms: {:?}",
                            e.class, e.loc, r.alarms
                        )
                    })?;
                }
                Ok(None) | Err(ConcreteStop::Infeasible) => {}
                Err(e) => return Err(format!("seed {seed}: concrete run stopped: {e}\n{src}")),
            }
        }
        if !seen.is_empty() {
            erroneous_programs += 1;
        }
        for c in seen {
            *classes.entry(c).or_default() += 1;
        }
    }
    let by_class: Vec<String> = classes.iter().map(|(c, n)| format!("{c}:{n}")).collect();
    Ok(format!(
        "{FUZZ_PROGRAMS} programs, {runs} runs, {errors} concrete errors in {erroneous_programs} programs ({}), 0 missed",
        by_class.join(" ")
    ))
}

// ---- 3 ----

fn check_pair(
    op: BinOp,
    ty: ScalarType,
    cfg: &DomainConfig,
    a: IntInterval,
    b: IntInterval,
    violations: &mut Vec<String>,
) -> u64 {
    let out = abs_binop(op, &AbstractValue::Int(a), &AbstractValue::Int(b), ty, cfg);
    let classes: BTreeSet<AlarmClass> = out.alarms.iter().map(|c| c.class).collect();
    let value = out.value.int_hull().unwrap_or(IntInterval::BOTTOM);
    let ((alo, ahi), (blo, bhi)) = (a.bounds().unwrap(), b.bounds().unwrap());
    let mut n = 0;
    for x in alo..=ahi {
        for y in blo..=bhi {
            n += 1;
            let bad = match int_binop(op, x, y, ty, cfg.int_bits) {
                Ok(r) => (!value.contains(r))
                    .then(|| format!("{x} {} {y} = {r} outside {value}", op.symbol())),
                Err(e) => (!classes.contains(&e.class)).then(|| {
                    format!(
                        "{x} {} {y} fails with {:?}, no alarm for {a} {} {b}",
                        op.symbol(),
                        e.class,
                        op.symbol()
                    )
                }),
            };
            if let Some(v) = bad {
                if violations.len() < 5 {
                    violations.push(format!("{ty:?}: {v}"));
                }
            }
        }
    }
    n
}

fn interval_exhaustive() -> Result<String, String> {
    let cfg = DomainConfig::with_int_bits(8);
    let types = [
        ScalarType::Signed { bits: 8 },
        ScalarType::Unsigned { bits: 8 },
    ];
    let mut violations = Vec::new();
    let mut checks = 0u64;
    for ty in types {
        let (lo, hi) = ty.int_range().unwrap();
        // Every operand pair as singletons.
        for op in BinOp::ALL {
            for x in lo..=hi {
                for y in lo..=hi {
                    checks += check_pair(
                        op,
                        ty,
                        &cfg,
                        IntInterval::new(x, x),
                        IntInterval::new(y, y),
                        &mut violations,
                    );
                }
            }
        }
        // Every pair of intervals over a grid of bounds, all members checked.
        let grid: Vec<i64> = [lo, lo + 1, -9, -2, -1, 0, 1, 2, 7, 8, 9, hi - 1, hi]
            .into_iter()
            .filter(|c| lo <= *c && *c <= hi)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let intervals: Vec<IntInterval> = grid
            .iter()
            .flat_map(|&a| {
                grid.iter()
                    .filter(move |&&b| a <= b)
                    .map(move |&b| IntInterval::new(a, b))
            })
            .collect();
        for op in BinOp::ALL {
            for a in &intervals {
                for b in &intervals {
                    checks += check_pair(op, ty, &cfg, *a, *b, &mut violations);
                }
            }
        }
    }
    ensure(violations.is_empty(), || violations.join("; "))?;
    Ok(format!("{checks} concrete checks, 0 violations"))
}

// ---- 4 ----

fn sqrt_example() -> Result<String, String> {
    let cfg = DomainConfig::default();
    let good = project("sqrt/conforming", &[])?;
    let run = verify_module(
        &good.program,
        "sqrt",
        &good.manual,
        HarnessOptions::default(),
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let asr = run.result.count(AlarmClass::ASR);
    ensure(asr == 0, || {
        format!("conforming sqrt has {asr} ASR: {:?}", run.result.alarms)
    })?;
    let bad = project("sqrt/broken", &[])?;
    let run = verify_module(
        &bad.program,
        "sqrt",
        &bad.manual,
        HarnessOptions::default(),
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let asr: Vec<_> = run.result.alarms_of(AlarmClass::ASR).collect();
    ensure(asr.len() == 1 && asr[0].definite, || {
        format!("broken sqrt: {asr:?}")
    })?;
    ensure(
        asr[0].contract.as_deref() == Some("manual:sqrt ensures: return >= 0.0"),
        || format!("ASR not attributed to the ensures: {:?}", asr[0].contract),
    )?;
    Ok("conforming: 0 ASR; returning -1.0: 1 definite ASR at the ensures check".into())
}

// ---- 5 ----

fn memcmp_example() -> Result<String, String> {
    let cfg = DomainConfig::default();
    let ok = project("memcmp/compliant", &[])?;
    let run = verify_module(
        &ok.program,
        "user",
        &ok.manual,
        HarnessOptions::default(),
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    ensure(run.result.alarms.is_empty(), || {
        format!("compliant caller: {:?}", run.result.alarms)
    })?;
    let short = project("memcmp/short", &[])?;
    let run = verify_module(
        &short.program,
        "user",
        &short.manual,
        HarnessOptions::default(),
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let ipa: Vec<_> = run.result.alarms_of(AlarmClass::IPA).collect();
    ensure(!ipa.is_empty(), || {
        format!("short array: no IPA in {:?}", run.result.alarms)
    })?;
    ensure(
        ipa.iter().all(|a| {
            a.contract
                .as_deref()
                .is_some_and(|c| c.contains("memcmp arrayspec: length(ptr1) >= n"))
        }),
        || format!("IPA not raised by the stub length check: {ipa:?}"),
    )?;
    Ok(format!(
        "compliant: 0 alarms; length 4 < n: {} IPA in the stub",
        ipa.len()
    ))
}

// ---- 6 ----

fn dmz_in(report: &Value, module: &str) -> Vec<(bool, u64)> {
    report["modules"]
        .as_array()
        .into_iter()
        .flatten()
        .filter(|m| m["module"] == module)
        .flat_map(|m| m["alarms"].as_array().cloned().unwrap_or_default())
        .filter(|a| a["class"] == "DMZ")
        .map(|a| {
            (
                a["definite"].as_bool().unwrap_or(false),
                a["line"].as_u64().unwrap_or(0),
            )
        })
        .collect()
}

fn foo_bar() -> Result<String, String> {
    let dir = tempdir();
    let src = corpus("foobar");
    let db = dir.path().join("db");
    let s1 = dir.path().join("s1.json");
    let r = modcheck(&["analyze", s(&src), "--stage", "1", "--json", s(&s1)]);
    ensure(r.code == 1, || {
        format!("stage 1 exit {}: {}", r.code, r.stderr)
    })?;
    let dmz = dmz_in(&read_json(&s1)?, "foo");
    ensure(dmz == vec![(false, 4)], || {
        format!("stage 1 DMZ in foo: {dmz:?}")
    })?;
    let export = dir.path().join("inferred.contracts");
    let r = modcheck(&["infer", s(&src), "--db", s(&db), "--export", s(&export)]);
    ensure(r.code == 0, || {
        format!("infer exit {}: {}", r.code, r.stderr)
    })?;
    let passes: u32 = r
        .stdout
        .lines()
        .find_map(|l| {
            l.strip_prefix("Fixpoint after ")?
                .strip_suffix(" passes")?
                .parse()
                .ok()
        })
        .ok_or_else(|| format!("no pass count in {:?}", r.stdout))?;
    ensure(passes <= 3, || format!("{passes} passes"))?;
    let text = std::fs::read_to_string(&export).map_err(|e| e.to_string())?;
    ensure(
        text.contains("/// [[ ensures: return >= 1.0 ]]\nbar;\n"),
        || format!("export:\n{text}"),
    )?;
    let s2 = dir.path().join("s2.json");
    let r = modcheck(&[
        "analyze",
        s(&src),
        "--stage",
        "2",
        "--db",
        s(&db),
        "--json",
        s(&s2),
    ]);
    ensure(r.code != 2, || {
        format!("stage 2 exit {}: {}", r.code, r.stderr)
    })?;
    let dmz = dmz_in(&read_json(&s2)?, "foo");
    ensure(dmz.is_empty(), || format!("stage 2 DMZ in foo: {dmz:?}"))?;
    Ok(format!(
        "stage 1: 1 possible DMZ; fixpoint in {passes} passes; stage 2: 0 DMZ"
    ))
}

// ---- 7 ----

fn sequence_contracts() -> Result<String, String> {
    let cfg = DomainConfig::default();
    let p = project("demo/src", &[])?;
    let without = verify_module(
        &p.program,
        "seq",
        &ContractSet::new(),
        HarnessOptions::default(),
        &cfg,
    )
    .map_err(|e| e.to_string())?
    .result
    .count(AlarmClass::UIV);
    let with = verify_module(
        &p.program,
        "seq",
        &p.manual,
        HarnessOptions::default(),
        &cfg,
    )
    .map_err(|e| e.to_string())?
    .result
    .count(AlarmClass::UIV);
    ensure(without > 0 && with == 0, || {
        format!("UIV without {without}, with {with}")
    })?;
    Ok(format!("UIV: {without} without sequence contracts, 0 with"))
}

// ---- 8 ----

fn range_x() -> Result<String, String> {
    let xml = std::fs::read_to_string(corpus("demo/interface/speed.ifx.xml"))
        .map_err(|e| e.to_string())?;
    let spec = parse_interface(&xml).map_err(|e| e.to_string())?;
    let p = project("demo/src", &[])?;
    let import =
        constraints_to_contracts(&spec, &p.program, "speed.ifx.xml").map_err(|e| e.to_string())?;
    let text = contracts_to_string(&import.contracts);
    let expected = "/// [[ requires: x >= 0.0 && x <= 32000.0 ]]\nspeed_scale;\n";
    ensure(text == expected, || format!("export {text:?}"))?;
    Ok("requires: x >= 0.0 && x <= 32000.0".into())
}

// ---- 9 ----

type AlarmRow = (String, String, String, u64, u64, bool);

fn rows(report: &Value, key_module: &str, key_alarms: &str) -> Vec<AlarmRow> {
    let mut out = Vec::new();
    let list = report[key_alarms].as_array().cloned().unwrap_or_default();
    for a in list {
        out.push((
            a[key_module].as_str().unwrap_or_default().to_string(),
            a["class"].as_str().unwrap_or_default().to_string(),
            a["file"].as_str().unwrap_or_default().to_string(),
            a["line"].as_u64().unwrap_or(0),
            a["col"].as_u64().unwrap_or(0),
            a["definite"].as_bool().unwrap_or(false),
        ));
    }
    out.sort();
    out
}

fn report_rows(report: &Value) -> Vec<AlarmRow> {
    let mut out = Vec::new();
    for m in report["modules"].as_array().cloned().unwrap_or_default() {
        let mut v = serde_json::Map::new();
        v.insert("alarms".into(), m["alarms"].clone());
        let mut r = rows(&Value::Object(v), "module", "alarms");
        for row in &mut r {
            row.0 = m["module"].as_str().unwrap_or_default().to_string();
        }
        out.extend(r);
    }
    out.sort();
    out
}

fn demo_stage(dir: &Path, stage: u8) -> Result<Value, String> {
    let json = dir.join(format!("stage{stage}.json"));
    let st = stage.to_string();
    let src = corpus("demo/src");
    let iface = corpus("demo/interface/speed.ifx.xml");
    let mut args = vec![
        "analyze",
        s(&src),
        "--interface",
        s(&iface),
        "--stage",
        &st,
        "--json",
        s(&json),
    ];
    if stage == 0 {
        args.extend(["--entry", "app_main"]);
    }
    let r = modcheck(&args);
    ensure(r.code == 0 || r.code == 1, || {
        format!("stage {stage} exit {}: {}", r.code, r.stderr)
    })?;
    read_json(&json)
}

fn non_asr(report: &Value) -> u64 {
    let t = &report["totals"];
    t["total"].as_u64().unwrap_or(0) - t["by_class"]["ASR"].as_u64().unwrap_or(0)
}

fn table2() -> Result<String, String> {
    let dir = tempdir();
    let mut reports = Vec::new();
    for stage in 0..=3u8 {
        let report = demo_stage(dir.path(), stage)?;
        let golden = read_json(&corpus(&format!("demo/expected/stage{stage}.json")))?;
        let want = rows(&golden, "module", "alarms");
        let got = report_rows(&report);
        ensure(want == got, || {
            let missing: Vec<_> = want.iter().filter(|w| !got.contains(w)).collect();
            let extra: Vec<_> = got.iter().filter(|g| !want.contains(g)).collect();
            format!("stage {stage} differs from golden: missing {missing:?}, unexpected {extra:?}")
        })?;
        reports.push(report);
    }
    let totals: Vec<u64> = reports.iter().map(non_asr).collect();
    ensure(totals[1] >= totals[2] && totals[2] >= totals[3], || {
        format!("non-ASR totals {totals:?}")
    })?;
    let cov: Vec<f64> = reports
        .iter()
        .map(|r| r["totals"]["coverage"].as_f64().unwrap_or(0.0))
        .collect();
    ensure(cov[1] >= cov[0], || format!("coverage {cov:?}"))?;
    let stage1: BTreeSet<_> = report_rows(&reports[1])
        .into_iter()
        .map(|r| (r.1, r.2, r.3, r.4))
        .collect();
    let outside: Vec<_> = report_rows(&reports[0])
        .into_iter()
        .map(|r| (r.1, r.2, r.3, r.4))
        .filter(|k| !stage1.contains(k))
        .collect();
    ensure(outside.is_empty(), || {
        format!("stage 0 alarms missing at stage 1: {outside:?}")
    })?;
    Ok(format!(
        "non-ASR alarms {} -> {} -> {} (stage 0: {}), coverage {:.2}% at stage 0, {:.2}% at stage 1, golden match",
        totals[1], totals[2], totals[3], totals[0], cov[0], cov[1]
    ))
}

// ---- 10 ----

fn interval_of(v: &Value) -> Option<(f64, f64)> {
    if v.get("bottom").and_then(Value::as_bool) == Some(true) {
        return None;
    }
    Some((v["lo"].as_f64()?, v["hi"].as_f64()?))
}

fn join(acc: &mut BTreeMap<String, Option<(f64, f64)>>, key: &str, v: &Value) {
    let e = acc.entry(key.to_string()).or_insert(None);
    if let Some((lo, hi)) = interval_of(v) {
        *e = Some(match *e {
            None => (lo, hi),
            Some((a, b)) => (a.min(lo), b.max(hi)),
        });
    }
}

fn same(
    oracle: &BTreeMap<String, Option<(f64, f64)>>,
    got: &BTreeMap<String, AbstractValue>,
) -> bool {
    oracle.len() == got.len()
        && oracle.iter().all(|(k, v)| {
            got.get(k)
                .is_some_and(|g| interval_of(&serde_json::to_value(g).unwrap()) == *v)
        })
}

fn fixpoint_properties() -> Result<String, String> {
    let cfg = DomainConfig::default();
    let projects: [(&str, &[&str]); 6] = [
        ("demo/src", &["demo/interface/speed.ifx.xml"]),
        ("foobar", &[]),
        ("sqrt/conforming", &[]),
        ("sqrt/broken", &[]),
        ("memcmp/compliant", &[]),
        ("memcmp/short", &[]),
    ];
    let mut summary = Vec::new();
    for (rel, ifaces) in projects {
        let p = project(rel, ifaces)?;
        let dir = tempdir();
        let mut db = SummaryDatabase::open(dir.path()).map_err(|e| e.to_string())?;
        let base = base_contracts(&p, 3);
        let opts = FixpointOptions { max_passes: 20 };
        let first = run_fixpoint(&p.program, &base, &mut db, &cfg, &opts)
            .map_err(|e| format!("{rel}: {e}"))?;
        let again = run_fixpoint(&p.program, &base, &mut db, &cfg, &opts)
            .map_err(|e| format!("{rel}: {e}"))?;
        ensure(
            again.passes == 1 && again.inferred == first.inferred,
            || format!("{rel}: re-run took {} passes", again.passes),
        )?;
        summary.push(format!("{rel}:{}", first.passes));

        // Aggregates against joins over the raw records on disk.
        let mut global: BTreeMap<String, Option<(f64, f64)>> = BTreeMap::new();
        for rec in db.records() {
            let raw = read_json(
                &dir.path()
                    .join("modules")
                    .join(format!("{}.json", rec.module)),
            )?;
            let sm = &raw["summary"];
            let mut module: BTreeMap<String, Option<(f64, f64)>> = BTreeMap::new();
            for per_fn in sm["values"]
                .as_object()
                .into_iter()
                .flat_map(|o| o.values())
            {
                for (g, v) in per_fn.as_object().into_iter().flatten() {
                    join(&mut module, g, v);
                }
            }
            for (g, v) in sm["initial"].as_object().into_iter().flatten() {
                join(&mut module, g, v);
            }
            let got = aggregate_module(rec, &cfg).map_err(|e| format!("{e:?}"))?;
            ensure(same(&module, &got), || {
                format!(
                    "{rel}/{}: module aggregate {got:?} vs {module:?}",
                    rec.module
                )
            })?;
            for (g, v) in &module {
                let as_json = match v {
                    Some((lo, hi)) => serde_json::json!({"lo": lo, "hi": hi}),
                    None => serde_json::json!({"bottom": true}),
                };
                join(&mut global, g, &as_json);
            }
        }
        let gs = aggregate_global(db.records(), &cfg).map_err(|e| format!("{e:?}"))?;
        ensure(same(&global, &gs.values), || {
            format!("{rel}: global aggregate {:?} vs {global:?}", gs.values)
        })?;
    }
    Ok(format!(
        "passes to convergence {}; re-runs 1 pass; aggregates match",
        summary.join(" ")
    ))
}

// ---- 11 ----

fn determinism() -> Result<String, String> {
    let a = tempdir();
    let b = tempdir();
    let ra = demo_stage(a.path(), 2)?;
    let rb = demo_stage(b.path(), 2)?;
    let strip = |dir: &Path| -> Result<String, String> {
        let text = std::fs::read_to_string(dir.join("stage2.json")).map_err(|e| e.to_string())?;
        Ok(Report::from_json(&text)
            .map_err(|e| e.to_string())?
            .deterministic_json())
    };
    let (ja, jb) = (strip(a.path())?, strip(b.path())?);
    ensure(ja == jb, || "stage-2 reports differ".into())?;
    ensure(
        ra["run"]["timestamp"].is_u64() && rb["run"]["timestamp"].is_u64(),
        || "timestamps missing".into(),
    )?;
    Ok(format!("{} bytes identical", ja.len()))
}

// ---- 12 ----

fn definite_null() -> Result<String, String> {
    let cfg = DomainConfig::default();
    let p = project("demo/src", &[])?;
    let run = verify_module(
        &p.program,
        "diag",
        &ContractSet::new(),
        HarnessOptions::default(),
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let ipa: Vec<_> = run.result.alarms_of(AlarmClass::IPA).collect();
    ensure(ipa.len() == 1 && ipa[0].definite, || {
        format!("IPA alarms {ipa:?}")
    })?;
    let m = p.program.module("diag").ok_or("no diag module")?;
    let mut lines = BTreeMap::new();
    for f in &m.functions {
        for st in &f.body {
            st.visit(&mut |s| {
                if !matches!(s.kind, StmtKind::Block(_)) {
                    lines.insert(s.id, s.loc.line);
                }
            });
        }
    }
    let cov = run
        .result
        .coverage
        .get("diag")
        .ok_or("no coverage for diag")?;
    let uncovered: BTreeSet<u32> = lines
        .iter()
        .filter(|(id, _)| !cov.reached.contains(id))
        .map(|(_, l)| *l)
        .collect();
    // The two assignments after the failing call in diag_probe.
    ensure(uncovered == BTreeSet::from([11, 12]), || {
        format!("uncovered lines {uncovered:?}")
    })?;
    Ok("1 definite IPA; lines 11-12 after it uncovered".into())
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "zero-domain addition table",
            limit: Some(Duration::from_secs(1)),
            check: zero_table,
        },
        Criterion {
            id: 2,
            name: "soundness fuzzing, 8-bit",
            limit: Some(Duration::from_secs(600)),
            check: fuzz,
        },
        Criterion {
            id: 3,
            name: "interval soundness, exhaustive 8-bit",
            limit: Some(Duration::from_secs(60)),
            check: interval_exhaustive,
        },
        Criterion {
            id: 4,
            name: "sqrt ensures",
            limit: None,
            check: sqrt_example,
        },
        Criterion {
            id: 5,
            name: "memcmp arrayspec",
            limit: None,
            check: memcmp_example,
        },
        Criterion {
            id: 6,
            name: "foo/bar inference",
            limit: Some(Duration::from_secs(5)),
            check: foo_bar,
        },
        Criterion {
            id: 7,
            name: "sequence contracts",
            limit: None,
            check: sequence_contracts,
        },
        Criterion {
            id: 8,
            name: "RangeX interface import",
            limit: None,
            check: range_x,
        },
        Criterion {
            id: 9,
            name: "stage comparison on the demo corpus",
            limit: None,
            check: table2,
        },
        Criterion {
            id: 10,
            name: "fixpoint properties",
            limit: None,
            check: fixpoint_properties,
        },
        Criterion {
            id: 11,
            name: "report determinism",
            limit: None,
            check: determinism,
        },
        Criterion {
            id: 12,
            name: "definite null access",
            limit: None,
            check: definite_null,
        },
    ];
    let only: BTreeSet<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.id))
    {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(c.check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if took > limit => {
                Err(format!("took {took:.2?}, limit {limit:?}"))
            }
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => {
                failed += 1;
                ("FAIL", e.clone())
            }
        };
        println!("[{tag}] {:>2}. {} ({:.2?}): {detail}", c.id, c.name, took);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
