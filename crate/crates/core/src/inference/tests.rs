use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::alarm::AlarmClass;
use crate::domains::{FiniteSet, FloatInterval, IntDomain, IntInterval};
use crate::frontend::{parse_contracts, parse_module, resolve_project};
use crate::harness::{verify_module, HarnessOptions};

fn project(srcs: &[(&str, &str)]) -> Program {
    let ms = srcs
        .iter()
        .map(|(f, s)| parse_module(s, f).unwrap())
        .collect();
    resolve_project(ms).unwrap()
}

fn ids(cs: &ContractSet) -> Vec<String> {
    cs.iter().map(Contract::id).collect()
}

fn itv(lo: i64, hi: i64) -> AbstractValue {
    AbstractValue::Int(IntInterval::new(lo, hi))
}

fn bot() -> AbstractValue {
    AbstractValue::Int(IntInterval::BOTTOM)
}

fn summary(module: &str, values: &[(&str, &str, AbstractValue)]) -> ModuleSummary {
    let mut s = ModuleSummary {
        module: module.to_string(),
        values: BTreeMap::new(),
        initial: BTreeMap::new(),
        params: BTreeMap::new(),
        returns: BTreeMap::new(),
        observed: BTreeSet::new(),
        timestamp: 0,
        fingerprint: String::new(),
    };
    for (f, g, v) in values {
        s.values
            .entry(f.to_string())
            .or_default()
            .insert(g.to_string(), v.clone());
    }
    s
}

const BAR: &str = "float bar(float x) {\n  if (x > 1.0) {\n    return x;\n  }\n  return 1.0;\n}\n";
const FOO: &str = "float bar(float x);\nfloat foo(float x) {\n  return 1.0 / bar(x);\n}\n";

fn foo_bar() -> Program {
    project(&[("bar.c", BAR), ("foo.c", FOO)])
}

#[test]
fn foo_bar_division_alarm_disappears() {
    let p = foo_bar();
    let cfg = DomainConfig::default();
    let before = verify_module(
        &p,
        "foo",
        &ContractSet::new(),
        HarnessOptions::default(),
        &cfg,
    )
    .unwrap();
    let dmz: Vec<_> = before.result.alarms_of(AlarmClass::DMZ).collect();
    assert_eq!(dmz.len(), 1);
    assert!(!dmz[0].definite);

    let mut db = SummaryDatabase::in_memory();
    let fx = run_fixpoint(
        &p,
        &ContractSet::new(),
        &mut db,
        &cfg,
        &FixpointOptions::default(),
    )
    .unwrap();
    assert!(fx.passes <= 3, "{} passes", fx.passes);
    assert!(ids(&fx.inferred).contains(&"inferred:bar ensures: return >= 1.0".to_string()));
    assert_eq!(fx.runs["foo"].result.count(AlarmClass::DMZ), 0);
    assert_eq!(*fx.changes.last().unwrap(), 0);
}

#[test]
fn bar_return_value_is_extracted() {
    let p = foo_bar();
    let cfg = DomainConfig::default();
    let run = verify_module(
        &p,
        "bar",
        &ContractSet::new(),
        HarnessOptions { infer: true },
        &cfg,
    )
    .unwrap();
    let s = extract_summary(&run, &p, "fp", &cfg).unwrap();
    assert_eq!(
        s.returns["bar"],
        AbstractValue::Float(FloatInterval::new(1.0, FLOAT_MAX))
    );
    assert!(s.observed.contains("bar"));
    assert_eq!(s.fingerprint, "fp");
}

#[test]
fn extraction_requires_markers() {
    let p = foo_bar();
    let cfg = DomainConfig::default();
    let run = verify_module(
        &p,
        "bar",
        &ContractSet::new(),
        HarnessOptions::default(),
        &cfg,
    )
    .unwrap();
    assert!(
        matches!(extract_summary(&run, &p, "", &cfg), Err(InferError::NoExtraction(m)) if m == "bar")
    );
}

#[test]
fn rerun_on_converged_database_takes_one_pass() {
    let p = foo_bar();
    let cfg = DomainConfig::default();
    let mut db = SummaryDatabase::in_memory();
    let first = run_fixpoint(
        &p,
        &ContractSet::new(),
        &mut db,
        &cfg,
        &FixpointOptions::default(),
    )
    .unwrap();
    let again = run_fixpoint(
        &p,
        &ContractSet::new(),
        &mut db,
        &cfg,
        &FixpointOptions::default(),
    )
    .unwrap();
    assert_eq!(again.passes, 1);
    assert_eq!(again.changes, vec![0]);
    assert_eq!(ids(&first.inferred), ids(&again.inferred));
}

#[test]
fn pass_cap_reports_the_changing_contracts() {
    let p = foo_bar();
    let cfg = DomainConfig::default();
    let mut db = SummaryDatabase::in_memory();
    let err = run_fixpoint(
        &p,
        &ContractSet::new(),
        &mut db,
        &cfg,
        &FixpointOptions { max_passes: 1 },
    )
    .unwrap_err();
    match err {
        InferError::NoConvergence { passes, diff } => {
            assert_eq!(passes, 1);
            assert!(
                diff.contains(&"+ inferred:bar ensures: return >= 1.0".to_string()),
                "{diff:?}"
            );
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn unwritten_global_is_bottom() {
    let p = project(&[(
        "m.c",
        "int glob_v;\nint other;\nvoid f(void) { other = 1; }\n",
    )]);
    let cfg = DomainConfig::default();
    let run = verify_module(
        &p,
        "m",
        &ContractSet::new(),
        HarnessOptions { infer: true },
        &cfg,
    )
    .unwrap();
    let s = extract_summary(&run, &p, "", &cfg).unwrap();
    assert!(!s.values["f"].contains_key("glob_v"));
    assert_eq!(s.values["f"]["other"], itv(1, 1));
    assert!(!aggregate_module(&s, &cfg).unwrap().contains_key("glob_v"));
}

#[test]
fn two_writers_give_a_set_invariant() {
    let src = "int x;\nvoid f1(void) { x = 0; }\nvoid f2(void) { x = 10; }\n";
    let p = project(&[("m.c", src)]);
    let cfg = DomainConfig {
        int_domain: IntDomain::FiniteSet,
        ..DomainConfig::default()
    };
    let mut db = SummaryDatabase::in_memory();
    let fx = run_fixpoint(
        &p,
        &ContractSet::new(),
        &mut db,
        &cfg,
        &FixpointOptions::default(),
    )
    .unwrap();
    let s = db.get("m").unwrap();
    assert_eq!(
        aggregate_module(s, &cfg).unwrap()["x"],
        AbstractValue::Set(FiniteSet::from_members([0, 10], cfg.set_cap))
    );
    assert_eq!(
        ids(&fx.inferred),
        vec!["inferred:x invariant: x == 0 || x == 10"]
    );
}

#[test]
fn alternating_writers_stabilize() {
    let src = "int s;\nvoid a(void) { s = 0; }\nvoid b(void) { s = 1; }\n";
    let p = project(&[("m.c", src)]);
    let cfg = DomainConfig::default();
    let mut db = SummaryDatabase::in_memory();
    let fx = run_fixpoint(
        &p,
        &ContractSet::new(),
        &mut db,
        &cfg,
        &FixpointOptions::default(),
    )
    .unwrap();
    assert_eq!(fx.passes, 2);
    assert_eq!(
        ids(&fx.inferred),
        vec!["inferred:s invariant: s >= 0 && s <= 1"]
    );
}

#[test]
fn initializer_joins_the_writers() {
    let src =
        "int mode = 0;\nvoid set(int k) {\n  if (k > 0) { mode = 3; } else { mode = 2; }\n}\n";
    let p = project(&[("m.c", src)]);
    let cfg = DomainConfig::default();
    let mut db = SummaryDatabase::in_memory();
    let fx = run_fixpoint(
        &p,
        &ContractSet::new(),
        &mut db,
        &cfg,
        &FixpointOptions::default(),
    )
    .unwrap();
    assert_eq!(
        ids(&fx.inferred),
        vec!["inferred:mode invariant: mode >= 0 && mode <= 3"]
    );
}

#[test]
fn module_aggregate_examples() {
    let cfg = DomainConfig::default();
    let s = summary("m", &[("f1", "v", itv(0, 5)), ("f2", "v", itv(3, 9))]);
    assert_eq!(aggregate_module(&s, &cfg).unwrap()["v"], itv(0, 9));
    let s = summary("m", &[("f1", "v", bot()), ("f2", "v", bot())]);
    assert!(aggregate_module(&s, &cfg).unwrap()["v"].is_bottom());
    let s = summary("m", &[("f1", "v", bot()), ("f2", "v", itv(1, 1))]);
    assert_eq!(aggregate_module(&s, &cfg).unwrap()["v"], itv(1, 1));
}

#[test]
fn global_aggregate_examples() {
    let cfg = DomainConfig::default();
    let a = summary("a", &[("f", "v", itv(0, 5))]);
    let b = summary("b", &[("g", "v", itv(7, 9))]);
    assert_eq!(
        aggregate_global([&a, &b], &cfg).unwrap().values["v"],
        itv(0, 9)
    );
    assert_eq!(aggregate_global([&a], &cfg).unwrap().values["v"], itv(0, 5));

    let mut db = SummaryDatabase::in_memory();
    db.put(a).unwrap();
    db.put(b).unwrap();
    db.put(summary("b", &[("g", "v", itv(2, 3))])).unwrap();
    assert_eq!(
        aggregate_global(db.records(), &cfg).unwrap().values["v"],
        itv(0, 5)
    );
}

#[test]
fn mixed_representations_name_the_module() {
    let cfg = DomainConfig::default();
    let a = summary("a", &[("f", "v", itv(0, 5))]);
    let b = summary(
        "b",
        &[("g", "v", AbstractValue::Float(FloatInterval::new(0.0, 1.0)))],
    );
    match aggregate_global([&a, &b], &cfg) {
        Err(InferError::Mismatch { module, key }) => {
            assert_eq!((module.as_str(), key.as_str()), ("b", "v"))
        }
        r => panic!("unexpected {r:?}"),
    }
}

#[test]
fn contract_translation() {
    let int = ScalarType::Signed { bits: 32 };
    assert_eq!(
        value_condition(
            "return",
            &AbstractValue::Float(FloatInterval::new(1.0, FLOAT_MAX)),
            ScalarType::Float
        )
        .unwrap(),
        "return >= 1.0"
    );
    assert_eq!(
        value_condition("x", &itv(-2, 7), int).unwrap(),
        "x >= -2 && x <= 7"
    );
    assert_eq!(value_condition("x", &itv(4, 4), int).unwrap(), "x == 4");
    assert_eq!(
        value_condition("x", &itv(0, i32::MAX as i64), int).unwrap(),
        "x >= 0"
    );
    assert_eq!(
        value_condition("x", &itv(i32::MIN as i64, i32::MAX as i64), int),
        None
    );
    assert_eq!(value_condition("x", &bot(), int), None);
    assert_eq!(
        value_condition(
            "x",
            &AbstractValue::Float(FloatInterval::full()),
            ScalarType::Float
        ),
        None
    );
    let set = AbstractValue::Set(FiniteSet::from_members([0, 10], 16));
    assert_eq!(
        value_condition("x", &set, int).unwrap(),
        "x == 0 || x == 10"
    );
    let all = AbstractValue::Set(FiniteSet::from_members([0, 1, 2], 16));
    assert_eq!(
        value_condition("c", &all, ScalarType::Enum { lo: 0, hi: 2 }),
        None
    );
}

#[test]
fn conditions_parse_back_to_the_same_text() {
    for text in [
        "x >= -2 && x <= 7",
        "return >= 1.0",
        "x == 0 || x == 10",
        "v <= -0.5",
    ] {
        let e = parse_condition(text).unwrap();
        assert_eq!(crate::frontend::expr_to_string(&e), text);
    }
}

const LIB: &str = "int scale(int k) {\n  return k * 2;\n}\n";
const USER_A: &str = "int scale(int k);\nint a_out;\nvoid a_step(void) { a_out = scale(3); }\n";
const USER_B: &str = "int scale(int k);\nint b_out;\nvoid b_step(void) { b_out = scale(5); }\n";

#[test]
fn parameter_requires_need_every_caller() {
    let p = project(&[("lib.c", LIB), ("ua.c", USER_A), ("ub.c", USER_B)]);
    let cfg = DomainConfig::default();
    let mut gs = GlobalSummary::default();
    gs.params
        .entry("scale".into())
        .or_default()
        .insert("k".into(), itv(3, 3));
    gs.modules.insert("ua".into());
    assert!(summary_to_contracts(&gs, &p, &cfg).is_empty());
    gs.modules.insert("ub".into());
    assert_eq!(
        ids(&summary_to_contracts(&gs, &p, &cfg)),
        vec!["inferred:scale requires: k == 3"]
    );

    let mut db = SummaryDatabase::in_memory();
    let fx = run_fixpoint(
        &p,
        &ContractSet::new(),
        &mut db,
        &cfg,
        &FixpointOptions::default(),
    )
    .unwrap();
    let got = ids(&fx.inferred);
    assert!(
        got.contains(&"inferred:scale requires: k >= 3 && k <= 5".to_string()),
        "{got:?}"
    );
    assert!(
        got.contains(&"inferred:scale ensures: return >= 6 && return <= 10".to_string()),
        "{got:?}"
    );
    for run in fx.runs.values() {
        assert!(run
            .result
            .alarms
            .iter()
            .all(|a| !(a.class == AlarmClass::ASR && a.definite)));
    }
}

#[test]
fn entry_function_gets_no_requires() {
    let p = project(&[("lib.c", LIB), ("ua.c", USER_A)]).with_entry(Some("scale".into()));
    let mut gs = GlobalSummary::default();
    gs.params
        .entry("scale".into())
        .or_default()
        .insert("k".into(), itv(3, 3));
    gs.modules.insert("ua".into());
    assert!(summary_to_contracts(&gs, &p, &DomainConfig::default()).is_empty());
}

#[test]
fn merge_examples() {
    let base = parse_contracts(
        "/// [[ requires: x >= 0.0 ]]\nsqrt;\n",
        "m.contracts",
        Origin::Manual,
    )
    .unwrap();
    let inf = parse_contracts(
        "/// [[ requires: x >= 1.0 ]]\n/// [[ ensures: return >= 0.0 ]]\nsqrt;\n/// [[ invariant: g >= 0 ]]\ng;\n",
        INFERRED_FILE,
        Origin::Inferred,
    )
    .unwrap();
    let merged = merge(&base, &inf);
    assert_eq!(
        ids(&merged),
        vec![
            "manual:sqrt requires: x >= 0.0",
            "inferred:sqrt ensures: return >= 0.0",
            "inferred:g invariant: g >= 0"
        ]
    );
    assert_eq!(merge(&ContractSet::new(), &inf), inf);
}

#[test]
fn incremental_update_then_fixpoint_matches_scratch() {
    let cfg = DomainConfig::default();
    let p = foo_bar();
    let mut db = SummaryDatabase::in_memory();
    run_fixpoint(
        &p,
        &ContractSet::new(),
        &mut db,
        &cfg,
        &FixpointOptions::default(),
    )
    .unwrap();

    let changed = project(&[
        ("bar.c", "float bar(float x) {\n  return x;\n}\n"),
        ("foo.c", FOO),
    ]);
    let contracts = derive_contracts(&db, &changed, &cfg).unwrap();
    let run = verify_module(
        &changed,
        "bar",
        &contracts,
        HarnessOptions { infer: true },
        &cfg,
    )
    .unwrap();
    db.put(extract_summary(&run, &changed, &fingerprint(&contracts), &cfg).unwrap())
        .unwrap();
    assert_eq!(
        db.get("bar").unwrap().returns["bar"],
        AbstractValue::Float(FloatInterval::full())
    );
    let after = derive_contracts(&db, &changed, &cfg).unwrap();
    assert!(after.for_function("bar").is_empty());

    let incremental = run_fixpoint(
        &changed,
        &ContractSet::new(),
        &mut db,
        &cfg,
        &FixpointOptions::default(),
    )
    .unwrap();
    let mut fresh = SummaryDatabase::in_memory();
    let scratch = run_fixpoint(
        &changed,
        &ContractSet::new(),
        &mut fresh,
        &cfg,
        &FixpointOptions::default(),
    )
    .unwrap();
    assert_eq!(ids(&incremental.inferred), ids(&scratch.inferred));
    assert_eq!(incremental.runs["foo"].result.count(AlarmClass::DMZ), 1);
}

#[test]
fn empty_project_is_a_noop() {
    let p = resolve_project(Vec::new()).unwrap();
    let mut db = SummaryDatabase::in_memory();
    let fx = run_fixpoint(
        &p,
        &ContractSet::new(),
        &mut db,
        &DomainConfig::default(),
        &FixpointOptions::default(),
    )
    .unwrap();
    assert_eq!(fx.passes, 1);
    assert!(fx.inferred.is_empty());
    assert!(db.is_empty());
}

#[test]
fn database_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = summary(
        "a",
        &[
            ("f", "v", itv(0, 5)),
            ("f", "w", AbstractValue::Float(FloatInterval::new(0.1, 2.5))),
        ],
    );
    a.returns.insert("f".into(), itv(-1, 1));
    a.timestamp = 17;
    let b = summary("b", &[("g", "v", itv(7, 9))]);
    {
        let mut db = SummaryDatabase::open(dir.path()).unwrap();
        db.put(a.clone()).unwrap();
        db.put(b.clone()).unwrap();
    }
    let db = SummaryDatabase::open(dir.path()).unwrap();
    assert_eq!(db.len(), 2);
    assert_eq!(db.get("a").unwrap(), &a);
    let on_disk = std::fs::read_to_string(dir.path().join("modules/a.json")).unwrap();
    assert_eq!(on_disk, record_json(db.get("a").unwrap()));

    let mut db = db;
    db.put(summary("b", &[("g", "v", itv(1, 1))])).unwrap();
    let again = SummaryDatabase::open(dir.path()).unwrap();
    assert_eq!(again.get("a").unwrap(), &a);
    assert_eq!(again.get("b").unwrap().values["g"]["v"], itv(1, 1));
}

#[test]
fn database_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut db = SummaryDatabase::open(dir.path()).unwrap();
    db.put(summary("a", &[])).unwrap();
    std::fs::write(dir.path().join("modules/a.json"), "{ not json").unwrap();
    match SummaryDatabase::open(dir.path()) {
        Err(DbError::Corrupt { module, .. }) => assert_eq!(module, "a"),
        r => panic!("unexpected {r:?}"),
    }
    let index = dir.path().join("index.json");
    let text = std::fs::read_to_string(&index)
        .unwrap()
        .replace("\"schema_version\": 1", "\"schema_version\": 99");
    std::fs::write(&index, text).unwrap();
    assert!(matches!(
        SummaryDatabase::open(dir.path()),
        Err(DbError::Schema {
            found: 99,
            expected: 1
        })
    ));
}

#[test]
fn concurrent_writers_serialize() {
    let dir = tempfile::tempdir().unwrap();
    SummaryDatabase::open(dir.path()).unwrap();
    let handles: Vec<_> = (0..8)
        .map(|i| {
            let path = dir.path().to_path_buf();
            std::thread::spawn(move || {
                let mut db = SummaryDatabase::open(&path).unwrap();
                db.put(summary(&format!("m{i}"), &[("f", "v", itv(i, i))]))
                    .unwrap();
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let db = SummaryDatabase::open(dir.path()).unwrap();
    assert_eq!(db.len(), 8);
    assert_eq!(db.get("m5").unwrap().values["f"]["v"], itv(5, 5));
}

fn arb_value() -> impl Strategy<Value = Option<(i64, i64)>> {
    prop_oneof![
        1 => Just(None),
        4 => (-50i64..50, 0i64..40).prop_map(|(lo, w)| Some((lo, lo + w))),
    ]
}

/// Per module: (function, global, written range or bottom).
type Records = Vec<Vec<(u8, u8, Option<(i64, i64)>)>>;

fn arb_records() -> impl Strategy<Value = Records> {
    prop::collection::vec(
        prop::collection::vec((0u8..3, 0u8..3, arb_value()), 0..6),
        0..5,
    )
}

fn to_value(v: Option<(i64, i64)>) -> AbstractValue {
    match v {
        None => bot(),
        Some((lo, hi)) => itv(lo, hi),
    }
}

fn arb_contracts() -> impl Strategy<Value = ContractSet> {
    let one = (0usize..3, 0usize..3, 0usize..3, -5i64..5, 0usize..3);
    prop::collection::vec(one, 0..8).prop_map(|items| {
        let mut cs = ContractSet::new();
        for (kind, subject, var, c, origin) in items {
            let (kind, target) = match kind {
                0 => (ContractKind::Requires, ["x", "y", "z"][var].to_string()),
                1 => (ContractKind::Ensures, "return".to_string()),
                _ => (
                    ContractKind::Invariant,
                    ["g", "h", "k"][subject].to_string(),
                ),
            };
            let subject = if kind == ContractKind::Invariant {
                target.clone()
            } else {
                ["f", "g", "h"][subject].to_string()
            };
            cs.add(Contract {
                kind,
                subject,
                body: ContractBody::Cond(parse_condition(&format!("{target} >= {c}")).unwrap()),
                origin: [Origin::Manual, Origin::Interface, Origin::Inferred][origin],
                file: "t".into(),
                loc: Loc::new(1, 1),
            });
        }
        cs
    })
}

proptest! {
    #[test]
    fn joins_match_brute_force(recs in arb_records()) {
        let cfg = DomainConfig::default();
        let fns = ["f0", "f1", "f2"];
        let vars = ["u", "v", "w"];
        let summaries: Vec<ModuleSummary> = recs
            .iter()
            .enumerate()
            .map(|(m, entries)| {
                let items: Vec<_> = entries
                    .iter()
                    .map(|(f, g, v)| (fns[*f as usize], vars[*g as usize], to_value(*v)))
                    .collect();
                summary(&format!("m{m}"), &items)
            })
            .collect();
        let gs = aggregate_global(&summaries, &cfg).unwrap();
        for g in vars {
            // last write per (module, function) wins, as in a map
            let mut expected: Option<Option<(i64, i64)>> = None;
            for entries in &recs {
                let mut latest = BTreeMap::new();
                for (f, v, val) in entries {
                    if vars[*v as usize] == g {
                        latest.insert(*f, *val);
                    }
                }
                for val in latest.values() {
                    expected = Some(match (expected.flatten(), val) {
                        (None, x) => *x,
                        (Some(a), None) => Some(a),
                        (Some((a, b)), Some((c, d))) => Some((a.min(*c), b.max(*d))),
                    });
                }
            }
            let got = gs.values.get(g).map(|v| v.int_hull().unwrap().bounds());
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn merge_is_idempotent_and_left_biased(a in arb_contracts(), b in arb_contracts()) {
        prop_assert_eq!(merge(&a, &a), a.clone());
        let m = merge(&a, &b);
        for c in a.iter() {
            prop_assert!(m.iter().any(|x| x == c));
        }
        prop_assert_eq!(m.len(), a.len() + m.iter().filter(|c| !a.iter().any(|x| x == *c)).count());
        for c in b.iter() {
            let covered = a.iter().any(|x| x.kind == c.kind && x.subject == c.subject && x.target() == c.target());
            prop_assert_eq!(m.iter().any(|x| x == c), !covered || a.iter().any(|x| x == c));
        }
    }
}
