use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modcheck_cli::{diff_reports, Report, EXIT_ALARMS, EXIT_CLEAN, EXIT_ERROR, EXIT_NO_FIXPOINT};
use modcheck_core::AlarmClass;
use serde_json::Value;
use tempfile::TempDir;

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(rel)
}

fn modcheck(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modcheck"))
        .current_dir(dir)
        .env_remove("MODCHECK_DB")
        .args(args)
        .output()
        .expect("spawn modcheck")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn report(path: &Path) -> Report {
    Report::from_json(&fs::read_to_string(path).unwrap()).unwrap()
}

fn record(db: &Path, module: &str) -> Value {
    let text = fs::read_to_string(db.join("modules").join(format!("{module}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// A scratch copy of a corpus project.
fn scratch(rel: &str) -> (TempDir, PathBuf) {
    let tmp = TempDir::new().unwrap();
    let dst = tmp.path().join("src");
    fs::create_dir_all(&dst).unwrap();
    for e in fs::read_dir(corpus(rel)).unwrap() {
        let e = e.unwrap();
        if e.path().extension().is_some_and(|x| x == "c") {
            fs::copy(e.path(), dst.join(e.file_name())).unwrap();
        }
    }
    (tmp, dst)
}

#[test]
fn exit_codes() {
    let (tmp, src) = scratch("foobar");
    let dir = tmp.path();
    let s = src.to_str().unwrap();
    assert_eq!(
        code(&modcheck(dir, &["analyze", s, "--stage", "1"])),
        EXIT_ALARMS
    );
    let clean = modcheck(dir, &["analyze", s, "--stage", "0", "--entry", "bar"]);
    assert_eq!(code(&clean), EXIT_CLEAN);
    assert_eq!(
        code(&modcheck(dir, &["analyze", s, "--stage", "0"])),
        EXIT_ERROR
    );
    assert_eq!(
        code(&modcheck(dir, &["analyze", "missing-dir"])),
        EXIT_ERROR
    );
    let stuck = modcheck(dir, &["infer", s, "--db", "db", "--max-passes", "1"]);
    assert_eq!(code(&stuck), EXIT_NO_FIXPOINT);
    let err = String::from_utf8_lossy(&stuck.stderr);
    assert!(err.contains("no fixpoint after 1 passes"), "{err}");
    assert!(err.contains("+ inferred:bar ensures"), "{err}");
}

#[test]
fn analyze_writes_json_text_and_harnesses() {
    let (tmp, src) = scratch("foobar");
    let dir = tmp.path();
    let out = modcheck(
        dir,
        &[
            "analyze",
            src.to_str().unwrap(),
            "--json",
            "out/r.json",
            "--emit-harness",
            "h",
        ],
    );
    assert_eq!(code(&out), EXIT_ALARMS);
    let r = report(&dir.join("out/r.json"));
    assert_eq!(r.stage, 1);
    assert_eq!(r.totals.class(AlarmClass::DMZ), 1);
    let text = fs::read_to_string(dir.join("out/r.txt")).unwrap();
    assert_eq!(text, stdout(&out));
    for m in ["bar", "foo"] {
        let h = fs::read_to_string(dir.join("h").join(format!("{m}.harness.c"))).unwrap();
        assert!(!h.is_empty());
    }
}

#[test]
fn reports_are_deterministic() {
    let (tmp, src) = scratch("demo/src");
    let dir = tmp.path();
    let s = src.to_str().unwrap();
    for name in ["a.json", "b.json"] {
        modcheck(dir, &["analyze", s, "--stage", "1", "--json", name]);
    }
    let (a, b) = (report(&dir.join("a.json")), report(&dir.join("b.json")));
    assert_eq!(a.deterministic_json(), b.deterministic_json());
    assert!(diff_reports(&a, &b).unwrap().is_empty());
    let d = modcheck(dir, &["diff", "a.json", "b.json"]);
    assert_eq!(code(&d), EXIT_CLEAN);
    assert!(stdout(&d).contains("no differences"));
}

#[test]
fn diff_between_stages() {
    let (tmp, src) = scratch("foobar");
    let dir = tmp.path();
    let s = src.to_str().unwrap();
    modcheck(dir, &["analyze", s, "--stage", "1", "--json", "s1.json"]);
    assert_eq!(
        code(&modcheck(
            dir,
            &["analyze", s, "--stage", "2", "--json", "s2.json"]
        )),
        EXIT_CLEAN
    );
    let d = diff_reports(&report(&dir.join("s1.json")), &report(&dir.join("s2.json"))).unwrap();
    assert!(d.added.is_empty());
    let mut removed: Vec<_> = d
        .removed
        .iter()
        .map(|e| (e.alarm.class, e.alarm.line))
        .collect();
    removed.sort();
    assert_eq!(removed, vec![(AlarmClass::IRO, 4), (AlarmClass::DMZ, 4)]);
    assert_eq!(d.class_deltas[&AlarmClass::DMZ], -1);
    let text = stdout(&modcheck(dir, &["diff", "s1.json", "s2.json"]));
    assert!(text.contains("DMZ: -1"), "{text}");
    assert!(text.contains("- DMZ foo.c:4:"), "{text}");
}

#[test]
fn infer_on_empty_project_exports_nothing() {
    let tmp = TempDir::new().unwrap();
    fs::create_dir(tmp.path().join("src")).unwrap();
    let out = modcheck(tmp.path(), &["infer", "src", "--db", "db"]);
    assert_eq!(code(&out), EXIT_CLEAN);
    assert!(stdout(&out).contains("Inferred 0 contracts"));
    assert_eq!(
        fs::read_to_string(tmp.path().join("db/inferred.contracts")).unwrap(),
        ""
    );
}

#[test]
fn infer_rerun_converges_in_one_pass() {
    let (tmp, src) = scratch("demo/src");
    let dir = tmp.path();
    let s = src.to_str().unwrap();
    let first = stdout(&modcheck(
        dir,
        &["infer", s, "--db", "db", "--export", "x.contracts"],
    ));
    assert!(!first.contains("after 1 passes"), "{first}");
    let exported = fs::read_to_string(dir.join("x.contracts")).unwrap();
    let again = stdout(&modcheck(
        dir,
        &["infer", s, "--db", "db", "--export", "y.contracts"],
    ));
    assert!(again.contains("Fixpoint after 1 passes"), "{again}");
    assert_eq!(
        exported,
        fs::read_to_string(dir.join("y.contracts")).unwrap()
    );
}

#[test]
fn single_module_updates() {
    let (tmp, src) = scratch("foobar");
    let dir = tmp.path();
    let s = src.to_str().unwrap();
    modcheck(dir, &["infer", s, "--db", "db"]);
    let foo_before = record(&dir.join("db"), "foo");
    let bar_before = record(&dir.join("db"), "bar");
    assert_eq!(bar_before["summary"]["returns"]["bar"]["lo"], 1.0);

    // Unchanged module: same summary, refreshed record.
    assert_eq!(
        code(&modcheck(
            dir,
            &["single", "--module", "foo", s, "--db", "db"]
        )),
        EXIT_CLEAN
    );
    let foo_after = record(&dir.join("db"), "foo");
    assert_eq!(
        foo_after["summary"]["returns"],
        foo_before["summary"]["returns"]
    );
    assert!(
        foo_after["summary"]["timestamp"].as_u64() >= foo_before["summary"]["timestamp"].as_u64()
    );

    // Edited module: its return summary widens.
    fs::write(src.join("bar.c"), "float bar(float x) {\n  return x;\n}\n").unwrap();
    modcheck(dir, &["single", "--module", "bar", s, "--db", "db"]);
    let lo = record(&dir.join("db"), "bar")["summary"]["returns"]["bar"]["lo"]
        .as_f64()
        .unwrap();
    assert!(lo < 1.0, "lo = {lo}");

    let missing = modcheck(dir, &["single", "--module", "nope", s, "--db", "db"]);
    assert_eq!(code(&missing), EXIT_ERROR);
    assert_eq!(
        code(&modcheck(dir, &["single", "--module", "bar", s])),
        EXIT_ERROR
    );
}

#[test]
fn single_module_inserts_missing_record() {
    let (tmp, src) = scratch("foobar");
    let dir = tmp.path();
    let out = modcheck(
        dir,
        &[
            "single",
            "--module",
            "bar",
            src.to_str().unwrap(),
            "--db",
            "db",
        ],
    );
    assert_eq!(code(&out), EXIT_CLEAN);
    assert!(dir.join("db/modules/bar.json").exists());
    assert!(!dir.join("db/modules/foo.json").exists());
    let r = report(&dir.join("report.json"));
    assert_eq!((r.stage, r.modules.len()), (3, 1));
}
