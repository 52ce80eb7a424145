use modcheck_core::analyzer::analyze;
use modcheck_core::frontend::{
    parse_module, print_module, resolve_project, ContractKind, ContractSet,
};
use modcheck_core::harness::{verify_module, HarnessOptions};
use modcheck_core::ifacespec::{constraints_to_contracts, parse_interface};
use modcheck_core::inference::{
    derive_contracts, extract_summary, fingerprint, run_fixpoint, FixpointOptions, SummaryDatabase,
};
use modcheck_core::{AlarmClass, DomainConfig, Program};

const BAR: &str = "float bar(float x) {\n  if (x > 1.0) {\n    return x;\n  }\n  return 1.0;\n}\n";
const FOO: &str = "float bar(float x);\n\nfloat foo(float x) {\n  return 1.0 / bar(x);\n}\n";

fn foobar() -> Program {
    resolve_project(vec![
        parse_module(BAR, "bar.c").unwrap(),
        parse_module(FOO, "foo.c").unwrap(),
    ])
    .unwrap()
}

#[test]
fn printed_modules_reparse_to_the_same_text() {
    for (src, file) in [(BAR, "bar.c"), (FOO, "foo.c")] {
        let once = print_module(&parse_module(src, file).unwrap());
        let twice = print_module(&parse_module(&once, file).unwrap());
        assert_eq!(once, twice);
    }
}

#[test]
fn integration_from_foo_sees_through_bar() {
    let r = analyze(
        &foobar(),
        "foo",
        &ContractSet::new(),
        &DomainConfig::default(),
    )
    .unwrap();
    assert_eq!(r.alarms_of(AlarmClass::DMZ).count(), 0);
}

#[test]
fn module_alarm_goes_away_with_bar_summary() {
    let p = foobar();
    let cfg = DomainConfig::default();
    let none = ContractSet::new();
    let foo = verify_module(&p, "foo", &none, HarnessOptions::default(), &cfg).unwrap();
    assert_eq!(foo.result.alarms_of(AlarmClass::DMZ).count(), 1);

    let mut db = SummaryDatabase::in_memory();
    let bar = verify_module(&p, "bar", &none, HarnessOptions { infer: true }, &cfg).unwrap();
    db.put(extract_summary(&bar, &p, &fingerprint(&none), &cfg).unwrap())
        .unwrap();
    let derived = derive_contracts(&db, &p, &cfg).unwrap();
    let ensures: Vec<_> = derived
        .for_function("bar")
        .iter()
        .filter(|c| c.kind == ContractKind::Ensures)
        .collect();
    assert_eq!(ensures.len(), 1);

    let foo = verify_module(&p, "foo", &derived, HarnessOptions::default(), &cfg).unwrap();
    assert_eq!(foo.result.alarms_of(AlarmClass::DMZ).count(), 0);
}

#[test]
fn fixpoint_converges_and_reruns_in_one_pass() {
    let p = foobar();
    let cfg = DomainConfig::default();
    let mut db = SummaryDatabase::in_memory();
    let opts = FixpointOptions::default();
    let first = run_fixpoint(&p, &ContractSet::new(), &mut db, &cfg, &opts).unwrap();
    assert_eq!(first.passes, 2);
    let again = run_fixpoint(&p, &ContractSet::new(), &mut db, &cfg, &opts).unwrap();
    assert_eq!(again.passes, 1);
    assert_eq!(again.inferred.len(), first.inferred.len());
}

#[test]
fn interface_limits_become_requires() {
    let xml = r#"<AUTOSAR><DATA-CONSTR><SHORT-NAME>RangeX</SHORT-NAME><PHYS-CONSTRS>
        <LOWER-LIMIT INTERVAL-TYPE="CLOSED">0.0</LOWER-LIMIT>
        <UPPER-LIMIT INTERVAL-TYPE="CLOSED">32000.0</UPPER-LIMIT></PHYS-CONSTRS>
        <BINDING ROLE="PARAMETER" SYMBOL="bar.x"/></DATA-CONSTR></AUTOSAR>"#;
    let p = foobar();
    let import = constraints_to_contracts(&parse_interface(xml).unwrap(), &p, "x.ifx.xml").unwrap();
    let req = import.contracts.for_function("bar");
    assert_eq!(req.len(), 1);
    assert_eq!(req[0].kind, ContractKind::Requires);
    assert_eq!(req[0].body_text(), "x >= 0.0 && x <= 32000.0");
}
