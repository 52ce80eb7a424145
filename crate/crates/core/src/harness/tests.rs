use super::*;
use crate::alarm::AlarmClass;
use crate::analyzer::analyze;
use crate::domains::DomainConfig;

fn project(srcs: &[(&str, &str)]) -> Program {
    let ms = srcs
        .iter()
        .map(|(f, s)| parse_module(s, f).unwrap())
        .collect();
    resolve_project(ms).unwrap()
}

fn module_contracts(p: &Program) -> ContractSet {
    let mut cs = ContractSet::new();
    for m in &p.modules {
        cs.extend(&m.contracts);
    }
    cs
}

fn build(srcs: &[(&str, &str)], module: &str, infer: bool) -> Harness {
    let p = project(srcs);
    assemble_harness(&p, module, &module_contracts(&p), HarnessOptions { infer }).unwrap()
}

fn lines(h: &Harness) -> Vec<&str> {
    h.text.lines().map(str::trim).collect()
}

const DRIVER_EXAMPLE: &str = "int glob_v;\n/// [[ sequence: init ]]\nvoid g(void) { glob_v = 0; }\nvoid f1(void) { glob_v = glob_v / 2; }\nint f2(int x) { return x / 2; }\n";

#[test]
fn driver_matches_module_shape() {
    let h = build(&[("mod.c", DRIVER_EXAMPLE)], "mod", false);
    assert!(h.stubs.is_empty());
    assert_eq!(h.init, vec!["g"]);
    assert_eq!(h.cyclic, vec!["f1", "f2"]);
    let l = lines(&h);
    let pos = |s: &str| {
        l.iter()
            .position(|x| *x == s)
            .unwrap_or_else(|| panic!("missing `{s}` in\n{}", h.text))
    };
    assert!(pos("__modify_full_range(glob_v);") < pos("g();"));
    assert!(pos("g();") < pos("while (1) {"));
    assert!(pos("while (1) {") < pos("__modify_full_range(decision);"));
    assert!(pos("case 0: {") < pos("f1();"));
    assert!(pos("case 1: {") < pos("int x;"));
    assert!(pos("int x;") < pos("__modify_full_range(x);"));
    assert!(pos("__modify_full_range(x);") < pos("int res = f2(x);"));
    assert_eq!(h.program.entry.as_deref(), Some(DRIVER));
    assert_eq!(h.driver().sig.name, DRIVER);
}

#[test]
fn every_case_is_reached() {
    let h = build(&[("mod.c", DRIVER_EXAMPLE)], "mod", false);
    let r = analyze(
        &h.program,
        h.entry(),
        &ContractSet::new(),
        &DomainConfig::default(),
    )
    .unwrap();
    let cov = &r.coverage["mod"];
    assert_eq!(cov.reached.len() as u32, cov.total, "{cov:?}");
    assert_eq!(
        r.coverage[HARNESS].reached.len() as u32,
        r.coverage[HARNESS].total
    );
}

const SQRT_USER: &str = "/// [[ requires: x >= 0.0 ]]\n/// [[ ensures: return >= 0.0 ]]\nfloat sqrt(float x);\nfloat r;\nvoid step(float v) {\n  r = sqrt(v);\n}\n";

#[test]
fn contract_refines_stub() {
    let h = build(&[("user.c", SQRT_USER)], "user", false);
    assert_eq!(h.stubs, vec!["sqrt"]);
    let l = lines(&h);
    let start = l
        .iter()
        .position(|x| *x == "float sqrt(float x) {")
        .unwrap();
    assert_eq!(
        &l[start + 1..start + 7],
        &[
            "__assert(x >= 0.0);",
            "float res;",
            "__modify_full_range(res);",
            "__known_fact(res >= 0.0);",
            "return res;",
            "}"
        ]
    );
    let check = h
        .provenance
        .values()
        .find(|c| c.rule == Rule::Requires)
        .unwrap();
    assert!(check.contract.contains("requires: x >= 0.0"));
}

#[test]
fn stub_soundness_on_sqrt() {
    // Every concrete sqrt result for admissible inputs lies within the
    // stub's return value.
    let h = build(&[("user.c", SQRT_USER)], "user", true);
    let r = analyze(
        &h.program,
        h.entry(),
        &ContractSet::new(),
        &DomainConfig::default(),
    )
    .unwrap();
    let after = &r.extracted.globals_after["step"]["r"];
    for x in [0.0f32, 1e-30, 0.25, 2.0, 1e10, 3.4e38] {
        assert!(
            after.contains(crate::domains::Scalar::Float(x.sqrt() as f64)),
            "sqrt({x}) outside {after:?}"
        );
    }
    assert!(!after.contains(crate::domains::Scalar::Float(-1.0)));
    // The call with a full-range argument may violate the precondition.
    let asr: Vec<_> = r.alarms_of(AlarmClass::ASR).collect();
    assert_eq!(asr.len(), 1);
    assert_eq!(asr[0].file, HARNESS_FILE);
}

#[test]
fn contractless_stub_returns_full_range() {
    let h = build(
        &[
            (
                "a.c",
                "float sensor(void);\nfloat v;\nvoid f(void) { v = sensor(); }\n",
            ),
            ("b.c", "float sensor(void) { return 1.0; }\n"),
        ],
        "a",
        false,
    );
    let l = lines(&h);
    let start = l.iter().position(|x| *x == "float sensor(void) {").unwrap();
    assert_eq!(
        &l[start + 1..start + 5],
        &[
            "float res;",
            "__modify_full_range(res);",
            "return res;",
            "}"
        ]
    );
}

const MEMCMP_USER: &str = "/// [[ arrayspec: length(ptr1) >= n ]]\n/// [[ arrayspec: length(ptr2) >= n ]]\nint memcmp(const uint8 *ptr1, const uint8 *ptr2, int n);\nuint8 a[4];\nuint8 b[8];\nint same;\nvoid cmp(int k) {\n  if (k >= 1 && k <= 6) {\n    same = memcmp(a, b, k);\n  }\n}\n";

#[test]
fn array_specs_become_length_checks() {
    let h = build(&[("user.c", MEMCMP_USER)], "user", false);
    let l = lines(&h);
    let start = l.iter().position(|x| x.starts_with("int memcmp(")).unwrap();
    assert_eq!(
        &l[start + 1..start + 5],
        &[
            "ptr1[n - 1];",
            "ptr2[n - 1];",
            "int res;",
            "__modify_full_range(res);"
        ]
    );
    let r = analyze(
        &h.program,
        h.entry(),
        &ContractSet::new(),
        &DomainConfig::default(),
    )
    .unwrap();
    // `a` has length 4 but k reaches 6: the first check may fail, the
    // second never does.
    let ipa: Vec<_> = r.alarms_of(AlarmClass::IPA).collect();
    assert_eq!(ipa.len(), 1, "{ipa:?}");
    assert_eq!(ipa[0].file, HARNESS_FILE);
    assert_eq!(ipa[0].loc.line, start as u32 + 2);
    let mut attributed = r.clone();
    h.attribute(&mut attributed);
    assert!(attributed.alarms_of(AlarmClass::IPA).all(|a| a
        .contract
        .as_deref()
        .unwrap()
        .contains("ptr1")));
}

#[test]
fn driver_materializes_arrays_at_maximum_length() {
    let src = "/// [[ requires: n <= 16 ]]\n/// [[ arrayspec: length(buf) >= n ]]\nint sum(const int *buf, int n) {\n  int s = 0;\n  int i;\n  for (i = 0; i < n; i = i + 1) {\n    s = s + buf[i] / 16;\n  }\n  return s;\n}\n";
    let h = build(&[("sum.c", src)], "sum", false);
    assert!(lines(&h).contains(&"int buf[16];"), "{}", h.text);
    let r = analyze(
        &h.program,
        h.entry(),
        &ContractSet::new(),
        &DomainConfig::default(),
    )
    .unwrap();
    assert_eq!(r.count(AlarmClass::IPA), 0, "{:?}", r.alarms);
}

#[test]
fn unbounded_length_is_rejected() {
    let src = "/// [[ arrayspec: length(buf) >= n ]]\nint first(const int *buf, int n) { return buf[0]; }\n";
    let p = project(&[("x.c", src)]);
    let e =
        assemble_harness(&p, "x", &module_contracts(&p), HarnessOptions::default()).unwrap_err();
    assert!(matches!(e, HarnessError::UnboundedLength { .. }));
}

#[test]
fn sequence_contracts_order_calls() {
    let src = "int ready;\n/// [[ sequence: cyclic ]]\nvoid run(void) { ready = ready + 1; }\n/// [[ sequence: init ]]\nvoid initialization(void) { ready = 0; }\n";
    let h = build(&[("s.c", src)], "s", false);
    assert_eq!(h.init, vec!["initialization"]);
    assert_eq!(h.cyclic, vec!["run"]);
    let l = lines(&h);
    let init = l.iter().position(|x| *x == "initialization();").unwrap();
    let lp = l.iter().position(|x| *x == "while (1) {").unwrap();
    let run = l.iter().position(|x| *x == "run();").unwrap();
    assert!(init < lp && lp < run);
}

#[test]
fn ensures_are_checked_and_attributed() {
    let src = "/// [[ requires: x >= 0 && x <= 100 ]]\n/// [[ ensures: return <= 50 ]]\nint half(int x) { return x / 2 + 1; }\n";
    let h = build(&[("h.c", src)], "h", false);
    let mut r = analyze(
        &h.program,
        h.entry(),
        &ContractSet::new(),
        &DomainConfig::default(),
    )
    .unwrap();
    h.attribute(&mut r);
    let asr: Vec<_> = r.alarms_of(AlarmClass::ASR).collect();
    assert_eq!(asr.len(), 1, "{:?}", r.alarms);
    assert_eq!(
        asr[0].contract.as_deref(),
        Some("manual:half ensures: return <= 50")
    );
    assert_eq!(h.provenance[&asr[0].loc.line].rule, Rule::Ensures);
}

#[test]
fn invariants_become_watches() {
    let src = "enum Cyl { NUM_CYL = 8 };\n/// [[ invariant: ctCyl <= NUM_CYL ]]\nuint8 ctCyl;\nvoid next(void) {\n  ctCyl = ctCyl + 1;\n}\n";
    let h = build(&[("cyl.c", src)], "cyl", false);
    let l = lines(&h);
    assert!(l.contains(&"__known_fact(ctCyl <= NUM_CYL);"), "{}", h.text);
    assert!(l.contains(&"__global_assert(ctCyl, ctCyl <= NUM_CYL);"));
    let mut r = analyze(
        &h.program,
        h.entry(),
        &ContractSet::new(),
        &DomainConfig::default(),
    )
    .unwrap();
    h.attribute(&mut r);
    let asr: Vec<_> = r.alarms_of(AlarmClass::ASR).collect();
    assert_eq!(asr.len(), 1, "{:?}", r.alarms);
    assert_eq!(asr[0].file, "cyl.c");
    assert_eq!(asr[0].loc.line, 5);
    assert_eq!(
        asr[0].contract.as_deref(),
        Some("manual:ctCyl invariant: ctCyl <= NUM_CYL")
    );
}

#[test]
fn struct_field_invariants_apply_to_each_variable() {
    let src = "typedef struct {\n  /// [[ invariant: Id <= 4 ]]\n  uint8 Id;\n  int on;\n} LED;\nLED front;\nLED back;\nvoid set(void) { front.Id = 3; }\n";
    let h = build(&[("led.c", src)], "led", false);
    let l = lines(&h);
    assert!(
        l.contains(&"__global_assert(front.Id, front.Id <= 4);"),
        "{}",
        h.text
    );
    assert!(l.contains(&"__global_assert(back.Id, back.Id <= 4);"));
    let r = analyze(
        &h.program,
        h.entry(),
        &ContractSet::new(),
        &DomainConfig::default(),
    )
    .unwrap();
    assert_eq!(r.count(AlarmClass::ASR), 0, "{:?}", r.alarms);
}

#[test]
fn unknown_origin_without_contract_is_not_stubbed() {
    let src = "int v;\nvoid f(void) { v = __builtin_thing(2); }\n";
    let h = build(&[("u.c", src)], "u", false);
    assert!(h.stubs.is_empty());
    let r = analyze(
        &h.program,
        h.entry(),
        &ContractSet::new(),
        &DomainConfig::default(),
    )
    .unwrap();
    assert_eq!(r.count(AlarmClass::UFC), 1);
}

#[test]
fn one_external_one_public() {
    let h = build(
        &[
            ("a.c", "int get(void);\nint f(void) { return get(); }\n"),
            ("b.c", "int get(void) { return 1; }\n"),
        ],
        "a",
        false,
    );
    assert_eq!(h.stubs, vec!["get"]);
    assert_eq!(h.stub_defs().count(), 1);
    assert_eq!(h.cyclic, vec!["f"]);
}

#[test]
fn definition_wins_over_declaration() {
    let h = build(
        &[(
            "a.c",
            "int get(void);\nint get(void) { return 1; }\nint f(void) { return get(); }\n",
        )],
        "a",
        false,
    );
    assert!(h.stubs.is_empty());
}

#[test]
fn static_state_and_collisions() {
    let p = project(&[("a.c", "void __driver(void) { }\n")]);
    assert_eq!(
        assemble_harness(&p, "a", &ContractSet::new(), HarnessOptions::default()).unwrap_err(),
        HarnessError::Collision(DRIVER.into())
    );
    let p = project(&[(
        "a.c",
        "/// [[ sequence: init ]]\nstatic void setup(void) { }\nvoid f(void) { setup(); }\n",
    )]);
    assert!(matches!(
        assemble_harness(&p, "a", &module_contracts(&p), HarnessOptions::default()),
        Err(HarnessError::SequenceOnNonPublic(_))
    ));
}

#[test]
fn unknown_names_in_contracts_are_errors() {
    let p = project(&[("a.c", "int f(int x) { return x; }\n")]);
    let cs = crate::frontend::parse_contracts(
        "/// [[ requires: nosuch > 0 ]]\nf;\n",
        "a.contracts",
        crate::frontend::Origin::Manual,
    )
    .unwrap();
    assert!(matches!(
        assemble_harness(&p, "a", &cs, HarnessOptions::default()),
        Err(HarnessError::UnknownName { .. })
    ));
}

#[test]
fn extraction_markers_only_in_infer_mode() {
    let plain = build(&[("mod.c", DRIVER_EXAMPLE)], "mod", false);
    let infer = build(&[("mod.c", DRIVER_EXAMPLE)], "mod", true);
    assert!(!plain.text.contains("__extract"));
    assert!(lines(&infer).contains(&"__extract(f2);"));
}

#[test]
fn generation_is_deterministic() {
    let a = build(&[("user.c", MEMCMP_USER)], "user", true);
    let b = build(&[("user.c", MEMCMP_USER)], "user", true);
    assert_eq!(a.text, b.text);
    assert_eq!(a.provenance, b.provenance);
}

#[test]
fn every_check_maps_to_one_contract() {
    let h = build(&[("user.c", SQRT_USER)], "user", true);
    let checks = lines(&h)
        .iter()
        .filter(|l| l.starts_with("__assert(") || l.starts_with("__global_assert("))
        .count();
    assert_eq!(checks, h.provenance.len());
}
