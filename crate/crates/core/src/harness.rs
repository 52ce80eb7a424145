//! Verification harness generation: stubs for the functions a module
//! calls but does not define, and a driver that initializes the module's
//! globals, runs its init functions once and then calls its cyclic
//! functions in every order from an endless loop.
//!
//! The harness is produced as Mini-C text and parsed back, so the emitted
//! file and the analyzed program are the same thing. Every generated check
//! sits on its own line; the line number is its provenance key.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analyzer::{analyze, AnalysisError, AnalysisResult, DRIVER, HARNESS};
use crate::domains::{BinOp, CmpOp, DomainConfig};
use crate::frontend::{
    conjuncts, expr_to_string, parse_module, print_module, resolve_project, ConstValue, Contract,
    ContractKind, ContractSet, Expr, ExprKind, FrontendError, FunctionDef, FunctionSig, Module,
    Place, Program, Selector, SequenceTag, Storage, Type,
};

/// File name of the generated harness module.
pub const HARNESS_FILE: &str = "__harness.c";

/// Longest array the driver materializes for a pointer parameter.
pub const MAX_MATERIALIZED: i64 = 65_536;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("module `{0}` is not part of the program")]
    UnknownModule(String),
    #[error("`{0}` is defined in the module and would clash with generated code")]
    Collision(String),
    #[error("sequence contract on `{0}`, which is not a public function of the module")]
    SequenceOnNonPublic(String),
    #[error("contract `{contract}` refers to `{name}`, which is neither a parameter nor a global")]
    UnknownName { contract: String, name: String },
    #[error("length of `{param}` in `{function}` has no finite upper bound")]
    UnboundedLength { function: String, param: String },
    #[error("generated harness does not parse: {0}")]
    Frontend(#[from] FrontendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// Precondition checked in a stub.
    Requires,
    /// Postcondition checked after a driver call.
    Ensures,
    /// Length check in a stub.
    ArraySpec,
    /// Watch registered for a variable invariant.
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub contract: String,
    pub rule: Rule,
}

/// A contract left out of the harness and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub contract: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Harness {
    pub module: String,
    pub text: String,
    /// The module under analysis plus the harness module; entry is the driver.
    pub program: Program,
    /// Stubbed function names in generation order.
    pub stubs: Vec<String>,
    /// Functions called once before the loop.
    pub init: Vec<String>,
    /// Functions called from the loop, by case number.
    pub cyclic: Vec<String>,
    /// Harness line of each generated check.
    pub provenance: BTreeMap<u32, Check>,
    pub skipped: Vec<Skipped>,
    /// Built with extraction markers.
    pub infer: bool,
}

impl Harness {
    pub fn entry(&self) -> &str {
        DRIVER
    }

    fn harness_module(&self) -> &Module {
        self.program
            .module(HARNESS)
            .expect("harness module present")
    }

    pub fn driver(&self) -> &FunctionDef {
        self.harness_module()
            .function(DRIVER)
            .expect("driver present")
    }

    pub fn stub_defs(&self) -> impl Iterator<Item = &FunctionDef> {
        self.harness_module()
            .functions
            .iter()
            .filter(|f| f.sig.name != DRIVER)
    }

    /// The check responsible for an alarm, if any: the alarm's own line in
    /// the harness, or the directive that registered the watch.
    pub fn check_for(&self, file: &str, line: u32, origin_line: Option<u32>) -> Option<&Check> {
        if file == HARNESS_FILE {
            if let Some(c) = self.provenance.get(&line) {
                return Some(c);
            }
        }
        origin_line.and_then(|l| self.provenance.get(&l))
    }

    /// Fills in the contract of every alarm raised by a generated check.
    pub fn attribute(&self, result: &mut AnalysisResult) {
        for a in &mut result.alarms {
            let origin = a
                .origin
                .as_ref()
                .filter(|o| o.file == HARNESS_FILE)
                .map(|o| o.loc.line);
            if let Some(c) = self.check_for(&a.file, a.loc.line, origin) {
                a.contract = Some(c.contract.clone());
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HarnessOptions {
    /// Emit extraction markers after every driver call.
    pub infer: bool,
}

/// Line-numbered output.
#[derive(Default)]
struct Out {
    lines: Vec<String>,
    provenance: BTreeMap<u32, Check>,
}

impl Out {
    fn line(&mut self, depth: usize, text: impl AsRef<str>) -> u32 {
        self.lines
            .push(format!("{}{}", "  ".repeat(depth), text.as_ref()));
        self.lines.len() as u32
    }

    fn check(&mut self, depth: usize, text: impl AsRef<str>, c: &Contract, rule: Rule) {
        let l = self.line(depth, text);
        self.provenance.insert(
            l,
            Check {
                contract: c.id(),
                rule,
            },
        );
    }

    fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

/// Name lookup for contracts as seen from the harness.
struct Names<'a> {
    program: &'a Program,
    module: &'a Module,
}

enum Usable {
    Yes,
    Skip(String),
}

impl<'a> Names<'a> {
    fn visible(&self, name: &str) -> bool {
        self.module
            .global(name)
            .is_some_and(|g| g.storage != Storage::Static)
            || self.module.constant(name).is_some()
    }

    fn known_anywhere(&self, name: &str) -> bool {
        self.program
            .modules
            .iter()
            .any(|m| m.global(name).is_some() || m.constant(name).is_some())
    }

    /// Whether every name in `e` resolves in the harness, given the
    /// extra local names.
    fn usable(&self, c: &Contract, e: &Expr, locals: &[&str]) -> Result<Usable, HarnessError> {
        let mut names = BTreeSet::new();
        e.visit(&mut |x| match &x.kind {
            ExprKind::Place(p) => {
                names.insert(p.name.clone());
            }
            ExprKind::Length(p) => {
                names.insert(p.clone());
            }
            _ => {}
        });
        for n in names {
            if locals.contains(&n.as_str()) || self.visible(&n) {
                continue;
            }
            if self.module.global(&n).is_some() {
                return Ok(Usable::Skip(format!("`{n}` is static to the module")));
            }
            if self.known_anywhere(&n) {
                return Ok(Usable::Skip(format!("`{n}` is not visible in the module")));
            }
            return Err(HarnessError::UnknownName {
                contract: c.id(),
                name: n,
            });
        }
        Ok(Usable::Yes)
    }

    fn constant(&self, name: &str) -> Option<i64> {
        match self.module.constant(name) {
            Some(ConstValue::Int(v)) => Some(v),
            _ => None,
        }
    }
}

fn map_expr(e: &Expr, f: &dyn Fn(&Expr) -> Option<ExprKind>) -> Expr {
    let mut out = e.clone();
    out.visit_mut(&mut |x| {
        if let Some(k) = f(x) {
            x.kind = k;
        }
    });
    out
}

fn with_result(e: &Expr, res: &str) -> Expr {
    map_expr(e, &|x| {
        matches!(x.kind, ExprKind::Return).then(|| ExprKind::Place(Place::var(res)))
    })
}

fn type_name(m: &Module, ty: &Type) -> String {
    match ty {
        Type::Void => "void".into(),
        Type::Int => "int".into(),
        Type::UChar => "uint8".into(),
        Type::Float => "float".into(),
        Type::Enum(n) => match m.enum_def(n) {
            Some(d) if d.typedef => n.clone(),
            _ => format!("enum {n}"),
        },
        Type::Struct(n) => match m.struct_def(n) {
            Some(d) if d.typedef => n.clone(),
            _ => format!("struct {n}"),
        },
        Type::Array(e, _) | Type::Ptr { elem: e, .. } => type_name(m, e),
    }
}

fn decl(m: &Module, ty: &Type, name: &str) -> String {
    match ty {
        Type::Array(e, n) => format!("{} {name}[{n}]", type_name(m, e)),
        Type::Ptr { elem, is_const } => {
            format!(
                "{}{} *{name}",
                if *is_const { "const " } else { "" },
                type_name(m, elem)
            )
        }
        t => format!("{} {name}", type_name(m, t)),
    }
}

fn signature(m: &Module, sig: &FunctionSig) -> String {
    let params = if sig.params.is_empty() {
        "void".to_string()
    } else {
        sig.params
            .iter()
            .map(|p| decl(m, &p.ty, &p.name))
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!("{} {}({params})", type_name(m, &sig.ret), sig.name)
}

/// A name for the result local that no parameter or referenced global uses.
fn fresh_result(sig: &FunctionSig, contracts: &[Contract]) -> String {
    let mut taken: BTreeSet<String> = sig.params.iter().map(|p| p.name.clone()).collect();
    for c in contracts {
        if let Some(e) = c.cond() {
            e.visit(&mut |x| {
                if let ExprKind::Place(p) = &x.kind {
                    taken.insert(p.name.clone());
                }
            });
        }
    }
    let mut name = "res".to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

/// `length(p) OP e` or `e OP length(p)`, normalized to the minimum length
/// the contract demands: `(p, e, extra)` meaning `length(p) >= e + extra`.
fn array_length(c: &Contract) -> Vec<(String, Expr, i64)> {
    let Some(cond) = c.cond() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for part in conjuncts(cond) {
        let ExprKind::Cmp(op, a, b) = &part.kind else {
            continue;
        };
        let (p, e, op) = match (&a.kind, &b.kind) {
            (ExprKind::Length(p), _) => (p, b, *op),
            (_, ExprKind::Length(p)) => (p, a, op.swap()),
            _ => continue,
        };
        let extra = match op {
            CmpOp::Ge | CmpOp::Eq => 0,
            CmpOp::Gt => 1,
            _ => continue,
        };
        out.push((p.clone(), (**e).clone(), extra));
    }
    out
}

/// Upper bound of a length expression from constants, type ranges and
/// `x <= c` style conjuncts in `facts`.
fn upper_bound(
    names: &Names,
    e: &Expr,
    facts: &[&Expr],
    types: &dyn Fn(&str) -> Option<Type>,
) -> Option<i64> {
    match &e.kind {
        ExprKind::Int(v) => Some(*v),
        ExprKind::Place(Place {
            name,
            sel: Selector::None,
        }) => {
            if let Some(v) = names.constant(name) {
                return Some(v);
            }
            let from_facts = facts
                .iter()
                .flat_map(|f| conjuncts(f))
                .filter_map(|part| {
                    let ExprKind::Cmp(op, a, b) = &part.kind else {
                        return None;
                    };
                    let lit = |x: &Expr| match &x.kind {
                        ExprKind::Int(v) => Some(*v),
                        ExprKind::Place(Place { name, sel: Selector::None }) => names.constant(name),
                        _ => None,
                    };
                    let is_var = |x: &Expr| matches!(&x.kind, ExprKind::Place(p) if &p.name == name && p.sel == Selector::None);
                    let (op, c) = if is_var(a) {
                        (*op, lit(b)?)
                    } else if is_var(b) {
                        (op.swap(), lit(a)?)
                    } else {
                        return None;
                    };
                    match op {
                        CmpOp::Le | CmpOp::Eq => Some(c),
                        CmpOp::Lt => Some(c - 1),
                        _ => None,
                    }
                })
                .min();
            let from_type = match types(name)? {
                Type::UChar => Some(255),
                Type::Enum(en) => names.module.enum_def(&en).map(|d| d.range().1),
                _ => None,
            };
            match (from_facts, from_type) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            }
        }
        ExprKind::Binary(BinOp::Add, a, b) => {
            Some(upper_bound(names, a, facts, types)? + upper_bound(names, b, facts, types)?)
        }
        ExprKind::Binary(BinOp::Sub, a, b) => match &b.kind {
            ExprKind::Int(v) => Some(upper_bound(names, a, facts, types)? - v),
            _ => None,
        },
        _ => None,
    }
}

struct Gen<'a> {
    names: Names<'a>,
    contracts: &'a ContractSet,
    opts: HarnessOptions,
    out: Out,
    skipped: Vec<Skipped>,
}

impl<'a> Gen<'a> {
    fn m(&self) -> &'a Module {
        self.names.module
    }

    fn usable(&mut self, c: &Contract, e: &Expr, locals: &[&str]) -> Result<bool, HarnessError> {
        match self.names.usable(c, e, locals)? {
            Usable::Yes => Ok(true),
            Usable::Skip(reason) => {
                self.skipped.push(Skipped {
                    contract: c.id(),
                    reason,
                });
                Ok(false)
            }
        }
    }

    fn preamble(&mut self, stubs: &[&FunctionSig]) {
        let m = self.m();
        let types = Module {
            name: HARNESS.into(),
            file: HARNESS_FILE.into(),
            structs: m.structs.clone(),
            enums: m.enums.clone(),
            globals: Vec::new(),
            functions: Vec::new(),
            externals: Vec::new(),
            contracts: ContractSet::new(),
            stmt_count: 0,
        };
        for l in print_module(&types).lines() {
            self.out.line(0, l);
        }
        for g in m.globals.iter().filter(|g| g.storage != Storage::Static) {
            let c = if g.is_const { "const " } else { "" };
            self.out
                .line(0, format!("extern {c}{};", decl(m, &g.ty, &g.name)));
        }
        let stubbed: BTreeSet<&str> = stubs.iter().map(|s| s.name.as_str()).collect();
        for f in m
            .public_functions()
            .filter(|f| !stubbed.contains(f.sig.name.as_str()))
        {
            self.out.line(0, format!("{};", signature(m, &f.sig)));
        }
    }

    /// Stub body: requires asserted, array lengths checked, pointer targets
    /// and side-effect globals havocked, result full range refined by
    /// every ensures.
    fn stub(&mut self, sig: &FunctionSig) -> Result<(), HarnessError> {
        let m = self.m();
        let fc = self.contracts.for_function(&sig.name);
        let res = fresh_result(sig, fc);
        let params: Vec<&str> = sig.params.iter().map(|p| p.name.as_str()).collect();
        let mut with_res = params.clone();
        with_res.push(&res);
        self.out.line(0, format!("{} {{", signature(m, sig)));
        for c in fc.iter().filter(|c| c.kind == ContractKind::Requires) {
            let e = c.cond().expect("requires has a condition");
            if self.usable(c, e, &params)? {
                self.out.check(
                    1,
                    format!("__assert({});", expr_to_string(e)),
                    c,
                    Rule::Requires,
                );
            }
        }
        for c in fc.iter().filter(|c| c.kind == ContractKind::ArraySpec) {
            let e = c.cond().expect("arrayspec has a condition");
            if !self.usable(c, e, &params)? {
                continue;
            }
            for (p, len, extra) in array_length(c) {
                let index = if extra > 0 {
                    len
                } else {
                    Expr::new(
                        len.loc,
                        ExprKind::Binary(BinOp::Sub, Box::new(len), Box::new(Expr::int(c.loc, 1))),
                    )
                };
                let text = expr_to_string(&index);
                self.out
                    .check(1, format!("{p}[{text}];"), c, Rule::ArraySpec);
            }
        }
        for p in &sig.params {
            if matches!(
                p.ty,
                Type::Ptr {
                    is_const: false,
                    ..
                }
            ) {
                self.out
                    .line(1, format!("__modify_full_range({});", p.name));
            }
        }
        let ensures: Vec<&Contract> = fc
            .iter()
            .filter(|c| c.kind == ContractKind::Ensures)
            .collect();
        let mut usable = Vec::new();
        for c in ensures {
            let e = with_result(c.cond().expect("ensures has a condition"), &res);
            if self.usable(c, &e, &with_res)? {
                usable.push(e);
            }
        }
        let mut havoc = BTreeSet::new();
        for e in &usable {
            e.visit(&mut |x| {
                if let ExprKind::Place(p) = &x.kind {
                    if p.name != res
                        && !params.contains(&p.name.as_str())
                        && m.constant(&p.name).is_none()
                    {
                        if let Some(g) = m.global(&p.name).filter(|g| !g.is_const) {
                            havoc.insert(g.name.clone());
                        }
                    }
                }
            });
        }
        for g in &havoc {
            self.out.line(1, format!("__modify_full_range({g});"));
        }
        if sig.ret != Type::Void {
            self.out.line(1, format!("{};", decl(m, &sig.ret, &res)));
            self.out.line(1, format!("__modify_full_range({res});"));
        }
        for e in &usable {
            self.out
                .line(1, format!("__known_fact({});", expr_to_string(e)));
        }
        if sig.ret != Type::Void {
            self.out.line(1, format!("return {res};"));
        }
        self.out.line(0, "}");
        Ok(())
    }

    /// Arguments, call, postcondition checks and extraction for one call
    /// of a module function from the driver.
    fn call(&mut self, f: &FunctionDef, depth: usize) -> Result<(), HarnessError> {
        let m = self.m();
        let sig = &f.sig;
        let fc = self.contracts.for_function(&sig.name);
        let params: Vec<&str> = sig.params.iter().map(|p| p.name.as_str()).collect();
        let requires: Vec<(&Contract, &Expr)> = fc
            .iter()
            .filter(|c| c.kind == ContractKind::Requires)
            .map(|c| (c, c.cond().expect("requires has a condition")))
            .collect();
        for p in sig.params.iter().filter(|p| p.ty.is_scalar()) {
            self.out
                .line(depth, format!("{};", decl(m, &p.ty, &p.name)));
            self.out
                .line(depth, format!("__modify_full_range({});", p.name));
        }
        let mut facts = Vec::new();
        for (c, e) in &requires {
            let has_length = {
                let mut found = false;
                e.visit(&mut |x| found |= matches!(x.kind, ExprKind::Length(_)));
                found
            };
            if !has_length && self.usable(c, e, &params)? {
                self.out
                    .line(depth, format!("__known_fact({});", expr_to_string(e)));
                facts.push(*e);
            }
        }
        let types = |n: &str| {
            sig.param(n)
                .map(|p| p.ty.clone())
                .or_else(|| m.global(n).map(|g| g.ty.clone()))
        };
        for p in sig.params.iter().filter(|p| !p.ty.is_scalar()) {
            let Type::Ptr { elem, .. } = &p.ty else {
                continue;
            };
            let mut len = 1;
            for c in fc.iter().filter(|c| c.kind == ContractKind::ArraySpec) {
                for (q, e, extra) in array_length(c) {
                    if q != p.name {
                        continue;
                    }
                    let hi = upper_bound(&self.names, &e, &facts, &types)
                        .map(|v| v + extra)
                        .filter(|v| *v <= MAX_MATERIALIZED)
                        .ok_or_else(|| HarnessError::UnboundedLength {
                            function: sig.name.clone(),
                            param: p.name.clone(),
                        })?;
                    len = len.max(hi);
                }
            }
            self.out.line(
                depth,
                format!(
                    "{};",
                    decl(m, &Type::Array(elem.clone(), len as u32), &p.name)
                ),
            );
            self.out
                .line(depth, format!("__modify_full_range({});", p.name));
        }
        let args = params.join(", ");
        let res = fresh_result(sig, fc);
        if sig.ret == Type::Void {
            self.out.line(depth, format!("{}({args});", sig.name));
        } else {
            self.out.line(
                depth,
                format!("{} = {}({args});", decl(m, &sig.ret, &res), sig.name),
            );
        }
        let mut locals = params.clone();
        locals.push(&res);
        for c in fc.iter().filter(|c| c.kind == ContractKind::Ensures) {
            let e = with_result(c.cond().expect("ensures has a condition"), &res);
            if sig.ret == Type::Void && matches!(c.target().as_str(), "return") {
                continue;
            }
            if self.usable(c, &e, &locals)? {
                self.out.check(
                    depth,
                    format!("__assert({});", expr_to_string(&e)),
                    c,
                    Rule::Ensures,
                );
            }
        }
        if self.opts.infer {
            self.out.line(depth, format!("__extract({});", sig.name));
        }
        Ok(())
    }

    /// Invariants that apply to global `g`: its own and those of the fields
    /// of its struct type, rewritten to paths of `g`.
    fn invariants_of(&self, g: &crate::frontend::GlobalDecl) -> Vec<(Contract, String, Expr)> {
        let mut out = Vec::new();
        for c in self.contracts.for_variable(&g.name) {
            if let Some(e) = c.cond() {
                out.push((c.clone(), g.name.clone(), e.clone()));
            }
        }
        if let Type::Struct(s) = &g.ty {
            let fields: Vec<String> = self
                .m()
                .struct_def(s)
                .map(|d| d.fields.iter().map(|f| f.name.clone()).collect())
                .unwrap_or_default();
            for fld in &fields {
                for c in self.contracts.for_variable(&format!("{s}.{fld}")) {
                    let Some(e) = c.cond() else { continue };
                    let rewritten = map_expr(e, &|x| match &x.kind {
                        ExprKind::Place(Place {
                            name,
                            sel: Selector::None,
                        }) if fields.contains(name) => Some(ExprKind::Place(Place {
                            name: g.name.clone(),
                            sel: Selector::Field(name.clone()),
                        })),
                        _ => None,
                    });
                    out.push((c.clone(), format!("{}.{fld}", g.name), rewritten));
                }
            }
        }
        out
    }

    fn driver(
        &mut self,
        init: &[&'a FunctionDef],
        cyclic: &[&'a FunctionDef],
    ) -> Result<(), HarnessError> {
        let m = self.m();
        self.out.line(0, format!("void {DRIVER}(void) {{"));
        let globals: Vec<_> = m
            .globals
            .iter()
            .filter(|g| g.storage != Storage::Static && !g.is_const)
            .collect();
        for g in &globals {
            self.out
                .line(1, format!("__modify_full_range({});", g.name));
        }
        let mut watches = Vec::new();
        for g in &globals {
            for (c, path, e) in self.invariants_of(g) {
                if self.usable(&c, &e, &[])? {
                    self.out
                        .line(1, format!("__known_fact({});", expr_to_string(&e)));
                    watches.push((c, path, e));
                }
            }
        }
        for g in m.globals.iter().filter(|g| g.storage == Storage::Static) {
            for (c, _, _) in self.invariants_of(g) {
                self.skipped.push(Skipped {
                    contract: c.id(),
                    reason: format!("`{}` is static to the module", g.name),
                });
            }
        }
        for (c, path, e) in &watches {
            self.out.check(
                1,
                format!("__global_assert({path}, {});", expr_to_string(e)),
                c,
                Rule::Invariant,
            );
        }
        for f in init {
            self.out.line(1, "{");
            self.call(f, 2)?;
            self.out.line(1, "}");
        }
        let decision_ty = if cyclic.len() <= 256 { "uint8" } else { "int" };
        self.out.line(1, format!("{decision_ty} decision;"));
        self.out.line(1, "while (1) {");
        self.out.line(2, "__modify_full_range(decision);");
        if !cyclic.is_empty() {
            self.out.line(2, "switch (decision) {");
            for (k, f) in cyclic.iter().enumerate() {
                self.out.line(3, format!("case {k}: {{"));
                self.call(f, 4)?;
                self.out.line(4, "break;");
                self.out.line(3, "}");
            }
            self.out.line(2, "}");
        }
        self.out.line(1, "}");
        self.out.line(0, "}");
        Ok(())
    }
}

/// Stubs needed by `m`: every external except functions of unknown origin
/// that have no contracts, which stay undefined and raise UFC when called.
fn stubbed<'p>(program: &Program, m: &'p Module, contracts: &ContractSet) -> Vec<&'p FunctionSig> {
    m.externals
        .iter()
        .filter(|s| {
            !program.is_unknown_origin(&s.name) || !contracts.for_function(&s.name).is_empty()
        })
        .collect()
}

/// Builds the harness for module `module` of `program`. `contracts` are all
/// function and variable contracts in effect (the module's own annotations
/// are not added implicitly).
pub fn assemble_harness(
    program: &Program,
    module: &str,
    contracts: &ContractSet,
    opts: HarnessOptions,
) -> Result<Harness, HarnessError> {
    let m = program
        .module(module)
        .ok_or_else(|| HarnessError::UnknownModule(module.to_string()))?;
    let stubs = stubbed(program, m, contracts);
    if m.function(DRIVER).is_some() {
        return Err(HarnessError::Collision(DRIVER.to_string()));
    }
    for s in &stubs {
        if m.function(&s.name).is_some() {
            return Err(HarnessError::Collision(s.name.clone()));
        }
    }
    for (name, list) in &contracts.functions {
        let has_seq = list.iter().any(|c| c.kind == ContractKind::Sequence);
        let defined_here = m.function(name).is_some();
        if has_seq && defined_here && m.function(name).is_some_and(|f| f.sig.is_static) {
            return Err(HarnessError::SequenceOnNonPublic(name.clone()));
        }
    }
    let public: Vec<&FunctionDef> = m.public_functions().collect();
    let (init, cyclic): (Vec<_>, Vec<_>) = public
        .iter()
        .partition(|f| contracts.sequence_of(&f.sig.name) == Some(SequenceTag::Init));

    let mut g = Gen {
        names: Names { program, module: m },
        contracts,
        opts,
        out: Out::default(),
        skipped: Vec::new(),
    };
    g.preamble(&stubs);
    for s in &stubs {
        g.stub(s)?;
    }
    g.driver(&init, &cyclic)?;

    let text = g.out.text();
    let parsed = parse_module(&text, HARNESS_FILE).map_err(|e| e.in_file(HARNESS_FILE))?;
    let program = resolve_project(vec![m.clone(), parsed])?.with_entry(Some(DRIVER.to_string()));
    Ok(Harness {
        module: module.to_string(),
        text,
        program,
        stubs: stubs.iter().map(|s| s.name.clone()).collect(),
        init: init.iter().map(|f| f.sig.name.clone()).collect(),
        cyclic: cyclic.iter().map(|f| f.sig.name.clone()).collect(),
        provenance: g.out.provenance,
        skipped: g.skipped,
        infer: opts.infer,
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("module `{module}`: {source}")]
    Harness {
        module: String,
        #[source]
        source: HarnessError,
    },
    #[error("module `{module}`: {source}")]
    Analysis {
        module: String,
        #[source]
        source: AnalysisError,
    },
}

/// One module-level analysis: the harness and the attributed result.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleRun {
    pub harness: Harness,
    pub result: AnalysisResult,
}

/// Generates the harness for `module`, analyzes it and attributes alarms
/// raised by generated checks to their contracts.
pub fn verify_module(
    program: &Program,
    module: &str,
    contracts: &ContractSet,
    opts: HarnessOptions,
    cfg: &DomainConfig,
) -> Result<ModuleRun, VerifyError> {
    let harness = assemble_harness(program, module, contracts, opts).map_err(|source| {
        VerifyError::Harness {
            module: module.to_string(),
            source,
        }
    })?;
    let mut result = analyze(&harness.program, DRIVER, contracts, cfg).map_err(|source| {
        VerifyError::Analysis {
            module: module.to_string(),
            source,
        }
    })?;
    harness.attribute(&mut result);
    Ok(ModuleRun { harness, result })
}

/// Stub for one function, as Mini-C text. Types are named as in `m`.
pub fn generate_stub(
    m: &Module,
    sig: &FunctionSig,
    contracts: &ContractSet,
) -> Result<String, HarnessError> {
    let program = Program {
        modules: vec![m.clone()],
        entry: None,
        unknown_origin: BTreeSet::new(),
    };
    let mut g = Gen {
        names: Names {
            program: &program,
            module: m,
        },
        contracts,
        opts: HarnessOptions::default(),
        out: Out::default(),
        skipped: Vec::new(),
    };
    g.stub(sig)?;
    Ok(g.out.text())
}

#[cfg(test)]
mod tests;
