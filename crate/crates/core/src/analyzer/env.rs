//! Program lookups shared by the abstract and the concrete interpreter.

use crate::domains::{DomainConfig, Scalar, ScalarType};
use crate::frontend::{
    const_eval, ConstValue, FunctionDef, FunctionSig, GlobalDecl, Init, Program, Storage,
    StructDef, Type,
};

use super::HARNESS;

pub(crate) enum Callee<'a> {
    Defined(usize, &'a FunctionDef),
    Unknown(&'a FunctionSig),
}

impl<'a> Callee<'a> {
    pub fn sig(&self) -> &'a FunctionSig {
        match self {
            Callee::Defined(_, d) => &d.sig,
            Callee::Unknown(s) => s,
        }
    }
}

/// A global name as seen from one module.
pub(crate) enum GlobalRef {
    Const(Scalar, ScalarType),
    Slot(String),
}

pub(crate) struct Env<'a> {
    pub prog: &'a Program,
    pub cfg: &'a DomainConfig,
    pub harness: Option<usize>,
}

impl<'a> Env<'a> {
    pub fn new(prog: &'a Program, cfg: &'a DomainConfig) -> Env<'a> {
        Env {
            prog,
            cfg,
            harness: prog.modules.iter().position(|m| m.name == HARNESS),
        }
    }

    pub fn is_harness(&self, m: usize) -> bool {
        self.harness == Some(m)
    }

    pub fn file(&self, m: usize) -> &'a str {
        &self.prog.modules[m].file
    }

    pub fn int(&self) -> ScalarType {
        self.cfg.int_type()
    }

    pub fn scalar_ty(&self, m: usize, ty: &Type) -> ScalarType {
        match ty {
            Type::UChar => ScalarType::Unsigned { bits: 8 },
            Type::Float => ScalarType::Float,
            Type::Enum(name) => {
                let def = self.prog.modules[m]
                    .enum_def(name)
                    .or_else(|| self.prog.modules.iter().find_map(|x| x.enum_def(name)));
                match def {
                    Some(d) => {
                        let (lo, hi) = d.range();
                        ScalarType::Enum { lo, hi }
                    }
                    None => self.int(),
                }
            }
            _ => self.int(),
        }
    }

    /// Arithmetic type of a binary operation: float beats unsigned char
    /// pairs, which beat int. Enums act as int.
    pub fn arith(&self, a: ScalarType, b: ScalarType) -> ScalarType {
        let uchar = ScalarType::Unsigned { bits: 8 };
        if a.is_float() || b.is_float() {
            ScalarType::Float
        } else if a == uchar && b == uchar {
            uchar
        } else {
            self.int()
        }
    }

    pub fn struct_def(&self, m: usize, name: &str) -> Option<&'a StructDef> {
        self.prog.modules[m]
            .struct_def(name)
            .or_else(|| self.prog.modules.iter().find_map(|x| x.struct_def(name)))
    }

    /// Scalar types of the cells of a variable of type `ty`, with field
    /// names for structs.
    pub fn layout(&self, m: usize, ty: &Type) -> Layout {
        match ty {
            Type::Array(e, n) => Layout::Array(self.scalar_ty(m, e), *n),
            Type::Struct(s) => Layout::Struct(
                self.struct_def(m, s)
                    .map(|d| {
                        d.fields
                            .iter()
                            .map(|f| (f.name.clone(), self.scalar_ty(m, &f.ty)))
                            .collect()
                    })
                    .unwrap_or_default(),
            ),
            Type::Ptr { .. } => Layout::Ptr,
            t => Layout::Scalar(self.scalar_ty(m, t)),
        }
    }

    pub fn callee(&self, m: usize, name: &str) -> Option<Callee<'a>> {
        let module = &self.prog.modules[m];
        if let Some(d) = module.function(name) {
            return Some(Callee::Defined(m, d));
        }
        for (i, x) in self.prog.modules.iter().enumerate() {
            if let Some(d) = x.function(name).filter(|d| !d.sig.is_static) {
                return Some(Callee::Defined(i, d));
            }
        }
        module.external(name).map(Callee::Unknown)
    }

    /// Entry function: a public definition, or any definition of that name.
    pub fn entry(&self, name: &str) -> Option<(usize, &'a FunctionDef)> {
        let mods = &self.prog.modules;
        mods.iter()
            .enumerate()
            .find_map(|(i, x)| {
                x.function(name)
                    .filter(|d| !d.sig.is_static)
                    .map(|d| (i, d))
            })
            .or_else(|| {
                mods.iter()
                    .enumerate()
                    .find_map(|(i, x)| x.function(name).map(|d| (i, d)))
            })
    }

    fn constant(&self, m: usize, g: &GlobalDecl) -> Option<(Scalar, ScalarType)> {
        if !g.is_const || !g.ty.is_scalar() {
            return None;
        }
        let ty = self.scalar_ty(m, &g.ty);
        let own = self.prog.modules[m].constant(&g.name);
        let v = own.or_else(|| {
            if g.storage != Storage::Extern {
                return None;
            }
            self.prog.modules.iter().find_map(|x| {
                x.global(&g.name)
                    .filter(|d| d.storage != Storage::Extern)
                    .and_then(|_| x.constant(&g.name))
            })
        })?;
        Some((to_scalar(v, ty), ty))
    }

    /// Resolves a global or enum constant visible in module `m`.
    pub fn global(&self, m: usize, name: &str) -> Option<GlobalRef> {
        let module = &self.prog.modules[m];
        if let Some(g) = module.global(name) {
            if let Some((v, ty)) = self.constant(m, g) {
                return Some(GlobalRef::Const(v, ty));
            }
            let key = if g.storage == Storage::Static {
                format!("{}::{}", module.name, g.name)
            } else {
                g.name.clone()
            };
            return Some(GlobalRef::Slot(key));
        }
        match module.constant(name) {
            Some(ConstValue::Int(v)) => Some(GlobalRef::Const(Scalar::Int(v), self.int())),
            Some(ConstValue::Float(v)) => Some(GlobalRef::Const(
                Scalar::Float((v as f32) as f64),
                ScalarType::Float,
            )),
            None => None,
        }
    }

    /// Every global that needs storage: key, owning module, declaration and
    /// whether it lives outside the program (and so starts as full range).
    pub fn storage(&self) -> Vec<(String, usize, &'a GlobalDecl, bool)> {
        let mut out = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        let defined = |name: &str| {
            self.prog
                .modules
                .iter()
                .any(|x| x.global(name).is_some_and(|d| d.storage != Storage::Extern))
        };
        for (i, m) in self.prog.modules.iter().enumerate() {
            for g in &m.globals {
                if self.constant(i, g).is_some() {
                    continue;
                }
                let Some(GlobalRef::Slot(key)) = self.global(i, &g.name) else {
                    continue;
                };
                let external = g.storage == Storage::Extern;
                if external && defined(&g.name) {
                    continue;
                }
                if seen.insert(key.clone()) {
                    out.push((key, i, g, external));
                }
            }
        }
        out
    }

    /// Initial cell values of a global in layout order; `None` when the
    /// global has no initializer.
    pub fn initial_values(&self, m: usize, g: &GlobalDecl) -> Option<Vec<Scalar>> {
        let init = g.init.as_ref()?;
        let module = &self.prog.modules[m];
        let eval = |e| const_eval(e, &|n| module.constant(n)).unwrap_or(ConstValue::Int(0));
        let cells: Vec<ScalarType> = match self.layout(m, &g.ty) {
            Layout::Scalar(t) => vec![t],
            Layout::Array(t, n) => vec![t; n as usize],
            Layout::Struct(fs) => fs.into_iter().map(|(_, t)| t).collect(),
            Layout::Ptr => Vec::new(),
        };
        let exprs: Vec<_> = match init {
            Init::Expr(e) => vec![e],
            Init::List(xs) => xs.iter().collect(),
        };
        Some(
            cells
                .iter()
                .enumerate()
                .map(|(k, &t)| match exprs.get(k) {
                    Some(e) => to_scalar(eval(e), t),
                    None => zero_of(t),
                })
                .collect(),
        )
    }
}

pub(crate) enum Layout {
    Scalar(ScalarType),
    Array(ScalarType, u32),
    Struct(Vec<(String, ScalarType)>),
    Ptr,
}

pub(crate) fn zero_of(t: ScalarType) -> Scalar {
    if t.is_float() {
        Scalar::Float(0.0)
    } else {
        Scalar::Int(0)
    }
}

/// Constant folded into the cell type (floats rounded to `f32`, floats
/// truncated into integers).
pub(crate) fn to_scalar(v: ConstValue, t: ScalarType) -> Scalar {
    match (v, t.is_float()) {
        (ConstValue::Int(i), false) => Scalar::Int(i),
        (ConstValue::Int(i), true) => Scalar::Float((i as f32) as f64),
        (ConstValue::Float(f), true) => Scalar::Float((f as f32) as f64),
        (ConstValue::Float(f), false) => Scalar::Int(f.trunc() as i64),
    }
}
