use std::fs;
use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};

use modcheck_core::analyzer::analyze;
use modcheck_core::frontend::{parse_module, resolve_project, ContractSet, Program};
use modcheck_core::harness::{verify_module, HarnessOptions};
use modcheck_core::inference::{run_fixpoint, FixpointOptions, SummaryDatabase};
use modcheck_core::DomainConfig;

fn sources() -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/demo/src");
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn program(src: &[(String, String)]) -> Program {
    let modules = src
        .iter()
        .map(|(f, s)| parse_module(s, f).unwrap())
        .collect();
    resolve_project(modules).unwrap()
}

fn demo(c: &mut Criterion) {
    let src = sources();
    let cfg = DomainConfig::default();
    let none = ContractSet::new();
    c.bench_function("demo/parse", |b| b.iter(|| program(&src)));

    let p = program(&src);
    c.bench_function("demo/integration", |b| {
        b.iter(|| analyze(&p, "app_main", &none, &cfg).unwrap())
    });
    c.bench_function("demo/modules", |b| {
        b.iter(|| {
            for m in &p.modules {
                verify_module(&p, &m.name, &none, HarnessOptions { infer: false }, &cfg).unwrap();
            }
        })
    });

    let mut g = c.benchmark_group("demo/fixpoint");
    g.sample_size(10);
    g.bench_function("cold", |b| {
        b.iter(|| {
            let mut db = SummaryDatabase::in_memory();
            run_fixpoint(&p, &none, &mut db, &cfg, &FixpointOptions::default()).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, demo);
criterion_main!(benches);
