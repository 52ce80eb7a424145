use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::check::check_module;
use super::FrontendError;

/// A resolved set of modules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub modules: Vec<Module>,
    /// Entry function for integration analysis.
    pub entry: Option<String>,
    /// Functions declared or called somewhere but defined nowhere.
    pub unknown_origin: BTreeSet<String>,
}

impl Program {
    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// The module defining public function `f`.
    pub fn definition(&self, f: &str) -> Option<(&Module, &FunctionDef)> {
        self.modules
            .iter()
            .find_map(|m| m.function(f).filter(|d| !d.sig.is_static).map(|d| (m, d)))
    }

    pub fn is_unknown_origin(&self, f: &str) -> bool {
        self.unknown_origin.contains(f)
    }

    pub fn with_entry(mut self, entry: Option<String>) -> Program {
        self.entry = entry;
        self
    }
}

fn conflict(m: &Module, loc: Loc, message: String) -> FrontendError {
    FrontendError::Resolve {
        file: m.file.clone(),
        loc,
        message,
    }
}

/// Resolves cross-module references. Calls to functions a module does not
/// declare pick up the signature of the defining module; calls to functions
/// defined nowhere get an implicit `int f(int, ..)` signature. Both end up in
/// the caller's externals. Every module is then checked.
pub fn resolve_project(mut modules: Vec<Module>) -> Result<Program, FrontendError> {
    let mut names = BTreeSet::new();
    for m in &modules {
        if !names.insert(m.name.clone()) {
            return Err(conflict(
                m,
                Loc::new(1, 1),
                format!("duplicate module name `{}`", m.name),
            ));
        }
    }

    let mut defined: BTreeMap<String, (usize, FunctionSig)> = BTreeMap::new();
    for (i, m) in modules.iter().enumerate() {
        for f in m.public_functions() {
            if let Some((j, prev)) = defined.get(&f.sig.name) {
                let msg = if prev.same_shape(&f.sig) {
                    format!(
                        "`{}` is also defined in module `{}`",
                        f.sig.name, modules[*j].name
                    )
                } else {
                    format!(
                        "`{}` conflicts with its definition in module `{}`",
                        f.sig.name, modules[*j].name
                    )
                };
                return Err(conflict(m, f.sig.loc, msg));
            }
            defined.insert(f.sig.name.clone(), (i, f.sig.clone()));
        }
    }

    let mut declared: BTreeMap<String, (usize, FunctionSig)> = BTreeMap::new();
    for (i, m) in modules.iter().enumerate() {
        for sig in &m.externals {
            if let Some((j, def)) = defined.get(&sig.name) {
                if !def.same_shape(sig) {
                    return Err(conflict(
                        m,
                        sig.loc,
                        format!(
                            "declaration of `{}` conflicts with its definition in `{}`",
                            sig.name, modules[*j].name
                        ),
                    ));
                }
            }
            if let Some((j, prev)) = declared.get(&sig.name) {
                if !prev.same_shape(sig) {
                    return Err(conflict(
                        m,
                        sig.loc,
                        format!(
                            "declaration of `{}` conflicts with the one in `{}`",
                            sig.name, modules[*j].name
                        ),
                    ));
                }
            }
            declared.entry(sig.name.clone()).or_insert((i, sig.clone()));
        }
    }

    let mut globals: BTreeMap<String, (usize, Type)> = BTreeMap::new();
    for (i, m) in modules.iter().enumerate() {
        for g in m
            .globals
            .iter()
            .filter(|g| g.storage != Storage::Static && !g.is_const)
        {
            match globals.get(&g.name) {
                Some((j, ty)) if *ty != g.ty => {
                    return Err(conflict(
                        m,
                        g.loc,
                        format!(
                            "`{}` has a different type in module `{}`",
                            g.name, modules[*j].name
                        ),
                    ));
                }
                Some(_) => {}
                None => {
                    globals.insert(g.name.clone(), (i, g.ty.clone()));
                }
            }
        }
    }

    for m in modules.iter_mut() {
        let mut calls: Vec<(String, usize, Loc)> = Vec::new();
        for f in &m.functions {
            for s in &f.body {
                s.visit(&mut |st| {
                    for e in st.exprs() {
                        e.visit(&mut |x| {
                            if let ExprKind::Call(name, args) = &x.kind {
                                calls.push((name.clone(), args.len(), x.loc));
                            }
                        });
                    }
                });
            }
        }
        for (name, arity, loc) in calls {
            if m.signature(&name).is_some() {
                continue;
            }
            let sig = match defined.get(&name).or_else(|| declared.get(&name)) {
                Some((_, sig)) => sig.clone(),
                None => FunctionSig {
                    name: name.clone(),
                    params: (0..arity)
                        .map(|k| Param {
                            name: format!("a{k}"),
                            ty: Type::Int,
                            loc,
                        })
                        .collect(),
                    ret: Type::Int,
                    is_static: false,
                    loc,
                },
            };
            declared.entry(name).or_insert((0, sig.clone()));
            m.externals.push(sig);
        }
    }

    let unknown_origin = modules
        .iter()
        .flat_map(|m| m.externals.iter())
        .filter(|s| !defined.contains_key(&s.name))
        .map(|s| s.name.clone())
        .collect();

    for m in &modules {
        check_module(m)?;
    }
    Ok(Program {
        modules,
        entry: None,
        unknown_origin,
    })
}
