use std::fmt;

use serde::{Deserialize, Serialize};

use super::contract::ContractSet;
use crate::domains::{BinOp, CmpOp};

/// 1-based source position.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Loc {
        Loc { line, col }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Type {
    Void,
    /// Signed integer of the configured width.
    Int,
    /// `unsigned char` / `uint8`.
    UChar,
    Float,
    Enum(String),
    Struct(String),
    Array(Box<Type>, u32),
    /// Pointer to an array of scalars; parameters only.
    Ptr {
        elem: Box<Type>,
        is_const: bool,
    },
}

impl Type {
    pub fn is_scalar(&self) -> bool {
        matches!(self, Type::Int | Type::UChar | Type::Float | Type::Enum(_))
    }

    pub fn element(&self) -> Option<&Type> {
        match self {
            Type::Array(e, _) => Some(e),
            Type::Ptr { elem, .. } => Some(elem),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Selector {
    None,
    Index(Box<Expr>),
    Field(String),
}

/// An assignable location: `x`, `a[i]`, `p[i]` or `s.f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Place {
    pub name: String,
    pub sel: Selector,
}

impl Place {
    pub fn var(name: impl Into<String>) -> Place {
        Place {
            name: name.into(),
            sel: Selector::None,
        }
    }

    /// Dotted path for whole variables and struct fields; `None` for indexing.
    pub fn path(&self) -> Option<String> {
        match &self.sel {
            Selector::None => Some(self.name.clone()),
            Selector::Field(f) => Some(format!("{}.{}", self.name, f)),
            Selector::Index(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExprKind {
    Int(i64),
    /// Float literal as written; evaluation rounds it to `f32`.
    Float(f64),
    Place(Place),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Cast(Type, Box<Expr>),
    Null,
    /// `return` inside an ensures contract.
    Return,
    /// `length(p)` inside an arrayspec contract.
    Length(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expr {
    pub loc: Loc,
    pub kind: ExprKind,
}

impl Expr {
    pub fn new(loc: Loc, kind: ExprKind) -> Expr {
        Expr { loc, kind }
    }

    pub fn int(loc: Loc, v: i64) -> Expr {
        Expr::new(loc, ExprKind::Int(v))
    }

    pub fn place(loc: Loc, p: Place) -> Expr {
        Expr::new(loc, ExprKind::Place(p))
    }

    pub fn as_place(&self) -> Option<&Place> {
        match &self.kind {
            ExprKind::Place(p) => Some(p),
            _ => None,
        }
    }

    /// Calls `f` on this expression and every subexpression, parents first.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Place(p) => {
                if let Selector::Index(i) = &p.sel {
                    i.visit(f);
                }
            }
            ExprKind::Unary(_, e) | ExprKind::Cast(_, e) => e.visit(f),
            ExprKind::Binary(_, a, b)
            | ExprKind::Cmp(_, a, b)
            | ExprKind::And(a, b)
            | ExprKind::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }

    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        f(self);
        match &mut self.kind {
            ExprKind::Place(p) => {
                if let Selector::Index(i) = &mut p.sel {
                    i.visit_mut(f);
                }
            }
            ExprKind::Unary(_, e) | ExprKind::Cast(_, e) => e.visit_mut(f),
            ExprKind::Binary(_, a, b)
            | ExprKind::Cmp(_, a, b)
            | ExprKind::And(a, b)
            | ExprKind::Or(a, b) => {
                a.visit_mut(f);
                b.visit_mut(f);
            }
            ExprKind::Call(_, args) => args.iter_mut().for_each(|a| a.visit_mut(f)),
            _ => {}
        }
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e.kind, ExprKind::Call(..)));
        found
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Init {
    Expr(Expr),
    List(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CaseLabel {
    Value(i64),
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub loc: Loc,
    pub labels: Vec<CaseLabel>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Directive {
    ModifyFullRange(Place),
    Assert(Expr),
    KnownFact(Expr),
    /// Watch on a variable path: `x` or `s.f`.
    GlobalAssert(String, Expr),
    /// Commits the values recorded for the preceding call of the function.
    Extract(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StmtKind {
    Decl {
        name: String,
        ty: Type,
        init: Option<Init>,
    },
    Assign {
        target: Place,
        value: Expr,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then: Vec<Stmt>,
        els: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Box<Stmt>>,
        body: Vec<Stmt>,
    },
    Switch {
        scrutinee: Expr,
        cases: Vec<Case>,
    },
    Break,
    Return(Option<Expr>),
    Block(Vec<Stmt>),
    Directive(Directive),
}

/// Statement ids are unique within a module and number statements in
/// source order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stmt {
    pub id: u32,
    pub loc: Loc,
    pub kind: StmtKind,
}

impl Stmt {
    /// Calls `f` on this statement and every nested statement.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        let each = |ss: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)| ss.iter().for_each(|s| s.visit(f));
        match &self.kind {
            StmtKind::If { then, els, .. } => {
                each(then, f);
                if let Some(e) = els {
                    each(e, f);
                }
            }
            StmtKind::While { body, .. } | StmtKind::Block(body) => each(body, f),
            StmtKind::For {
                init, step, body, ..
            } => {
                if let Some(i) = init {
                    i.visit(f);
                }
                if let Some(s) = step {
                    s.visit(f);
                }
                each(body, f);
            }
            StmtKind::Switch { cases, .. } => cases.iter().for_each(|c| each(&c.body, f)),
            _ => {}
        }
    }

    /// Calls `f` on every expression appearing directly in this statement.
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Decl {
                init: Some(Init::Expr(e)),
                ..
            } => vec![e],
            StmtKind::Decl {
                init: Some(Init::List(l)),
                ..
            } => l.iter().collect(),
            StmtKind::Assign { target, value } => {
                let mut v = vec![value];
                if let Selector::Index(i) = &target.sel {
                    v.push(i);
                }
                v
            }
            StmtKind::Expr(e) | StmtKind::Return(Some(e)) => vec![e],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For { cond: Some(c), .. } => vec![c],
            StmtKind::Switch { scrutinee, .. } => vec![scrutinee],
            StmtKind::Directive(
                Directive::Assert(e) | Directive::KnownFact(e) | Directive::GlobalAssert(_, e),
            ) => {
                vec![e]
            }
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSig {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub is_static: bool,
    pub loc: Loc,
}

impl FunctionSig {
    /// Signature equality ignoring locations and parameter names.
    pub fn same_shape(&self, other: &FunctionSig) -> bool {
        self.ret == other.ret
            && self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|(a, b)| a.ty == b.ty)
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDef {
    pub sig: FunctionSig,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Storage {
    Public,
    Static,
    Extern,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalDecl {
    pub name: String,
    pub ty: Type,
    pub storage: Storage,
    pub is_const: bool,
    pub init: Option<Init>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub ty: Type,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructDef {
    pub name: String,
    pub fields: Vec<Field>,
    /// Declared as `typedef struct { .. } Name;`.
    pub typedef: bool,
    pub loc: Loc,
}

impl StructDef {
    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumDef {
    pub name: String,
    pub variants: Vec<(String, i64)>,
    pub typedef: bool,
    pub loc: Loc,
}

impl EnumDef {
    pub fn range(&self) -> (i64, i64) {
        let lo = self.variants.iter().map(|v| v.1).min().unwrap_or(0);
        let hi = self.variants.iter().map(|v| v.1).max().unwrap_or(0);
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Module {
    pub name: String,
    pub file: String,
    pub structs: Vec<StructDef>,
    pub enums: Vec<EnumDef>,
    pub globals: Vec<GlobalDecl>,
    pub functions: Vec<FunctionDef>,
    /// Functions declared here but defined elsewhere.
    pub externals: Vec<FunctionSig>,
    pub contracts: ContractSet,
    /// Number of statements; ids run from 0 to `stmt_count - 1`.
    pub stmt_count: u32,
}

impl Module {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.sig.name == name)
    }

    pub fn external(&self, name: &str) -> Option<&FunctionSig> {
        self.externals.iter().find(|f| f.name == name)
    }

    pub fn signature(&self, name: &str) -> Option<&FunctionSig> {
        self.function(name)
            .map(|f| &f.sig)
            .or_else(|| self.external(name))
    }

    pub fn global(&self, name: &str) -> Option<&GlobalDecl> {
        self.globals.iter().find(|g| g.name == name)
    }

    pub fn struct_def(&self, name: &str) -> Option<&StructDef> {
        self.structs.iter().find(|s| s.name == name)
    }

    pub fn enum_def(&self, name: &str) -> Option<&EnumDef> {
        self.enums.iter().find(|e| e.name == name)
    }

    /// Value of a named compile-time constant: an enum constant or an
    /// integer `const` global with a literal initializer.
    pub fn constant(&self, name: &str) -> Option<ConstValue> {
        for e in &self.enums {
            if let Some((_, v)) = e.variants.iter().find(|(n, _)| n == name) {
                return Some(ConstValue::Int(*v));
            }
        }
        let g = self.global(name)?;
        if !g.is_const {
            return None;
        }
        match &g.init {
            Some(Init::Expr(e)) => const_eval(e, &|n| self.constant(n)),
            _ => None,
        }
    }

    /// Public functions: non-static definitions, in declaration order.
    pub fn public_functions(&self) -> impl Iterator<Item = &FunctionDef> {
        self.functions.iter().filter(|f| !f.sig.is_static)
    }

    /// Mutable globals (constants excluded).
    pub fn variables(&self) -> impl Iterator<Item = &GlobalDecl> {
        self.globals.iter().filter(|g| !g.is_const)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConstValue {
    Int(i64),
    Float(f64),
}

/// Folds literal arithmetic and named constants; `None` if `e` is not constant.
pub fn const_eval(e: &Expr, lookup: &dyn Fn(&str) -> Option<ConstValue>) -> Option<ConstValue> {
    match &e.kind {
        ExprKind::Int(v) => Some(ConstValue::Int(*v)),
        ExprKind::Float(v) => Some(ConstValue::Float(*v)),
        ExprKind::Place(Place {
            name,
            sel: Selector::None,
        }) => lookup(name),
        ExprKind::Unary(UnOp::Neg, x) => match const_eval(x, lookup)? {
            ConstValue::Int(v) => v.checked_neg().map(ConstValue::Int),
            ConstValue::Float(v) => Some(ConstValue::Float(-v)),
        },
        ExprKind::Binary(op, a, b) => {
            let (a, b) = (const_eval(a, lookup)?, const_eval(b, lookup)?);
            match (a, b) {
                (ConstValue::Int(x), ConstValue::Int(y)) => match op {
                    BinOp::Add => x.checked_add(y),
                    BinOp::Sub => x.checked_sub(y),
                    BinOp::Mul => x.checked_mul(y),
                    BinOp::Div if y != 0 => x.checked_div(y),
                    _ => None,
                }
                .map(ConstValue::Int),
                _ => None,
            }
        }
        _ => None,
    }
}
