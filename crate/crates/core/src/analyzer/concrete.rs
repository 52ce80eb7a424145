//! Concrete execution with the analyzer's error definitions. Test oracle
//! only: the first runtime error ends the run.

use std::collections::BTreeMap;

use crate::alarm::AlarmClass;
use crate::domains::concrete::{
    compare, fit_int, float_binop, float_to_int, int_binop, ConcreteError,
};
use crate::domains::{BinOp, DomainConfig, Scalar, ScalarType};
use crate::frontend::{
    Case, CaseLabel, ContractSet, Directive, Expr, ExprKind, FunctionDef, Init, Loc, Place,
    Program, Selector, Stmt, StmtKind, Type, UnOp,
};

use super::env::{zero_of, Callee, Env, GlobalRef, Layout};
use super::state::Addr;

const STEP_LIMIT: u64 = 2_000_000;
const CALL_DEPTH_LIMIT: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeError {
    pub class: AlarmClass,
    pub file: String,
    pub loc: Loc,
}

/// Reasons a concrete run ends without a verdict.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConcreteStop {
    #[error("entry function `{0}` is not defined")]
    UnknownEntry(String),
    #[error("step limit reached")]
    StepLimit,
    /// A known fact does not hold for these inputs.
    #[error("inputs violate an assumption")]
    Infeasible,
    #[error("unsupported in concrete runs: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum V {
    I(i64),
    F(f32),
}

impl V {
    fn truthy(self) -> bool {
        match self {
            V::I(x) => x != 0,
            V::F(x) => x != 0.0,
        }
    }

    fn of(s: Scalar) -> V {
        match s {
            Scalar::Int(i) => V::I(i),
            Scalar::Float(f) => V::F(f as f32),
        }
    }
}

#[derive(Debug, Clone)]
struct CCell {
    ty: ScalarType,
    v: Option<V>,
}

#[derive(Debug, Clone)]
enum CSlot {
    Scalar(CCell),
    Array(Vec<CCell>),
    Struct(Vec<(String, CCell)>),
    Ptr(Option<Addr>),
}

#[derive(Default)]
struct Mem {
    globals: BTreeMap<String, CSlot>,
    frames: Vec<Vec<BTreeMap<String, CSlot>>>,
}

enum Flow {
    Normal,
    Break,
    Return(Option<V>),
}

enum Stop {
    Error(RuntimeError),
    Infeasible,
    Steps,
    Unsupported(String),
}

type R<T> = Result<T, Stop>;

#[derive(Clone)]
enum Var {
    Local {
        frame: usize,
        scope: usize,
        name: String,
    },
    Global(String),
    Const(V, ScalarType),
}

impl Var {
    fn from_addr(a: &Addr) -> Var {
        match a {
            Addr::Global(k) => Var::Global(k.clone()),
            Addr::Local { frame, scope, name } => Var::Local {
                frame: *frame,
                scope: *scope,
                name: name.clone(),
            },
        }
    }
}

struct Ctx {
    module: usize,
    ret: Option<ScalarType>,
    locals: bool,
}

struct Watch {
    key: String,
    field: Option<String>,
    cond: Expr,
    module: usize,
}

struct Machine<'a> {
    env: Env<'a>,
    contracts: Option<&'a ContractSet>,
    mem: Mem,
    ctx: Vec<Ctx>,
    watches: Vec<Watch>,
    steps: u64,
}

/// Runs `entry` on `inputs` (one scalar per parameter).
pub fn concrete_run(
    program: &Program,
    entry: &str,
    inputs: &[Scalar],
    cfg: &DomainConfig,
) -> Result<Option<RuntimeError>, ConcreteStop> {
    concrete_run_with(program, entry, inputs, cfg, None)
}

pub(crate) fn concrete_run_with(
    program: &Program,
    entry: &str,
    inputs: &[Scalar],
    cfg: &DomainConfig,
    contracts: Option<&ContractSet>,
) -> Result<Option<RuntimeError>, ConcreteStop> {
    let env = Env::new(program, cfg);
    let (m, def) = env
        .entry(entry)
        .ok_or_else(|| ConcreteStop::UnknownEntry(entry.to_string()))?;
    let mut mc = Machine {
        env,
        contracts,
        mem: Mem::default(),
        ctx: Vec::new(),
        watches: Vec::new(),
        steps: 0,
    };
    mc.init_globals();
    let mut scope = BTreeMap::new();
    for (k, p) in def.sig.params.iter().enumerate() {
        if !p.ty.is_scalar() {
            return Err(ConcreteStop::Unsupported(
                "pointer parameters on the entry function".into(),
            ));
        }
        let ty = mc.env.scalar_ty(m, &p.ty);
        let v = inputs.get(k).copied().unwrap_or(zero_of(ty));
        scope.insert(
            p.name.clone(),
            CSlot::Scalar(CCell {
                ty,
                v: Some(V::of(v)),
            }),
        );
    }
    mc.mem.frames.push(vec![scope]);
    mc.ctx.push(Ctx {
        module: m,
        ret: None,
        locals: true,
    });
    match mc.block(&def.body) {
        Ok(_) => Ok(None),
        Err(Stop::Error(e)) => Ok(Some(e)),
        Err(Stop::Infeasible) => Err(ConcreteStop::Infeasible),
        Err(Stop::Steps) => Err(ConcreteStop::StepLimit),
        Err(Stop::Unsupported(s)) => Err(ConcreteStop::Unsupported(s)),
    }
}

fn conv(v: V, to: ScalarType) -> Result<V, ConcreteError> {
    match (v, to.is_float()) {
        (V::I(x), true) => Ok(V::F(x as f32)),
        (V::I(x), false) => fit_int(x as i128, to).map(V::I),
        (V::F(x), true) => Ok(V::F(x)),
        (V::F(x), false) => float_to_int(x, to).map(V::I),
    }
}

impl<'a> Machine<'a> {
    fn module(&self) -> usize {
        self.ctx.last().expect("active function").module
    }

    fn fail(&self, class: AlarmClass, loc: Loc) -> Stop {
        Stop::Error(RuntimeError {
            class,
            file: self.env.file(self.module()).to_string(),
            loc,
        })
    }

    fn init_globals(&mut self) {
        for (key, m, g, external) in self.env.storage() {
            let values = if external {
                None
            } else {
                self.env.initial_values(m, g)
            };
            let cell = |t: ScalarType, k: usize| CCell {
                ty: t,
                v: if external {
                    Some(V::of(zero_of(t)))
                } else {
                    values.as_ref().map(|v| V::of(v[k]))
                },
            };
            let slot = match self.env.layout(m, &g.ty) {
                Layout::Scalar(t) => CSlot::Scalar(cell(t, 0)),
                Layout::Array(t, n) => CSlot::Array((0..n as usize).map(|k| cell(t, k)).collect()),
                Layout::Struct(fs) => CSlot::Struct(
                    fs.into_iter()
                        .enumerate()
                        .map(|(k, (n, t))| (n, cell(t, k)))
                        .collect(),
                ),
                Layout::Ptr => CSlot::Ptr(None),
            };
            self.mem.globals.insert(key, slot);
        }
    }

    fn resolve(&self, name: &str) -> Option<Var> {
        let ctx = self.ctx.last()?;
        if ctx.locals {
            if let Some(fi) = self.mem.frames.len().checked_sub(1) {
                for (si, sc) in self.mem.frames[fi].iter().enumerate().rev() {
                    if sc.contains_key(name) {
                        return Some(Var::Local {
                            frame: fi,
                            scope: si,
                            name: name.to_string(),
                        });
                    }
                }
            }
        }
        match self.env.global(ctx.module, name)? {
            GlobalRef::Const(c, t) => Some(Var::Const(V::of(c), t)),
            GlobalRef::Slot(k) => Some(Var::Global(k)),
        }
    }

    fn slot(&self, v: &Var) -> Option<&CSlot> {
        match v {
            Var::Local { frame, scope, name } => {
                self.mem.frames.get(*frame)?.get(*scope)?.get(name)
            }
            Var::Global(k) => self.mem.globals.get(k),
            Var::Const(..) => None,
        }
    }

    fn slot_mut(&mut self, v: &Var) -> Option<&mut CSlot> {
        match v {
            Var::Local { frame, scope, name } => self
                .mem
                .frames
                .get_mut(*frame)?
                .get_mut(*scope)?
                .get_mut(name),
            Var::Global(k) => self.mem.globals.get_mut(k),
            Var::Const(..) => None,
        }
    }

    fn unsupported<T>(what: &str) -> R<T> {
        Err(Stop::Unsupported(what.to_string()))
    }

    /// Evaluates the index of `name[ix]` and checks it; returns the array
    /// variable and the element index.
    fn index(&mut self, name: &str, ix: &Expr, loc: Loc) -> R<(Var, usize)> {
        let i = match self.eval(ix)? {
            (V::I(i), _) => i,
            _ => return Self::unsupported("float index"),
        };
        let v = self
            .resolve(name)
            .ok_or(Stop::Unsupported(format!("unknown `{name}`")))?;
        let target = match self.slot(&v) {
            Some(CSlot::Array(_)) => Some(v),
            Some(CSlot::Ptr(a)) => a.as_ref().map(Var::from_addr),
            _ => return Self::unsupported("index of a non-array"),
        };
        let len = match target.as_ref().and_then(|t| self.slot(t)) {
            Some(CSlot::Array(cells)) => cells.len() as i64,
            _ => 0,
        };
        if i < 0 || i >= len {
            return Err(self.fail(AlarmClass::IPA, loc));
        }
        Ok((target.expect("array"), i as usize))
    }

    fn cell(&self, v: &Var, field: Option<&str>, k: usize) -> Option<&CCell> {
        match (self.slot(v)?, field) {
            (CSlot::Scalar(c), None) => Some(c),
            (CSlot::Struct(fs), Some(f)) => fs.iter().find(|(n, _)| n == f).map(|(_, c)| c),
            (CSlot::Array(cells), None) => cells.get(k),
            _ => None,
        }
    }

    fn cell_mut(&mut self, v: &Var, field: Option<&str>, k: usize) -> Option<&mut CCell> {
        match (self.slot_mut(v)?, field) {
            (CSlot::Scalar(c), None) => Some(c),
            (CSlot::Struct(fs), Some(f)) => fs.iter_mut().find(|(n, _)| n == f).map(|(_, c)| c),
            (CSlot::Array(cells), None) => cells.get_mut(k),
            _ => None,
        }
    }

    fn read(&mut self, p: &Place, loc: Loc) -> R<(V, ScalarType)> {
        let (var, field, k) = match &p.sel {
            Selector::Index(ix) => {
                let (v, k) = self.index(&p.name, ix, loc)?;
                (v, None, k)
            }
            Selector::Field(f) => (
                self.resolve(&p.name)
                    .ok_or(Stop::Unsupported("unknown name".into()))?,
                Some(f.as_str()),
                0,
            ),
            Selector::None => {
                let v = self
                    .resolve(&p.name)
                    .ok_or(Stop::Unsupported("unknown name".into()))?;
                if let Var::Const(c, t) = v {
                    return Ok((c, t));
                }
                if !matches!(self.slot(&v), Some(CSlot::Scalar(_))) {
                    return Self::unsupported("whole-array read");
                }
                (v, None, 0)
            }
        };
        let c = self
            .cell(&var, field, k)
            .ok_or(Stop::Unsupported("bad place".into()))?;
        match c.v {
            Some(v) => Ok((v, c.ty)),
            None => Err(self.fail(AlarmClass::UIV, loc)),
        }
    }

    fn write(&mut self, p: &Place, v: V, loc: Loc) -> R<()> {
        let (var, field, k) = match &p.sel {
            Selector::Index(ix) => {
                let (var, k) = self.index(&p.name, ix, loc)?;
                (var, None, k)
            }
            Selector::Field(f) => (
                self.resolve(&p.name)
                    .ok_or(Stop::Unsupported("unknown name".into()))?,
                Some(f.clone()),
                0,
            ),
            Selector::None => (
                self.resolve(&p.name)
                    .ok_or(Stop::Unsupported("unknown name".into()))?,
                None,
                0,
            ),
        };
        let ty = self
            .cell(&var, field.as_deref(), k)
            .ok_or(Stop::Unsupported("bad place".into()))?
            .ty;
        let v = conv(v, ty).map_err(|e| self.fail(e.class, loc))?;
        self.cell_mut(&var, field.as_deref(), k).expect("cell").v = Some(v);
        self.after_write(&var, field.as_deref(), loc)
    }

    fn after_write(&mut self, var: &Var, field: Option<&str>, loc: Loc) -> R<()> {
        let Var::Global(key) = var else {
            return Ok(());
        };
        if self.env.is_harness(self.module()) {
            return Ok(());
        }
        let hits: Vec<(Expr, usize)> = self
            .watches
            .iter()
            .filter(|w| {
                &w.key == key
                    && (w.field.is_none() || field.is_none() || w.field.as_deref() == field)
            })
            .map(|w| (w.cond.clone(), w.module))
            .collect();
        for (cond, module) in hits {
            self.ctx.push(Ctx {
                module,
                ret: None,
                locals: false,
            });
            let r = self.truth(&cond);
            self.ctx.pop();
            match r {
                Ok(true) => {}
                Ok(false) => return Err(self.fail(AlarmClass::ASR, loc)),
                Err(Stop::Error(_)) => return Err(Stop::Infeasible),
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn truth(&mut self, e: &Expr) -> R<bool> {
        Ok(self.eval(e)?.0.truthy())
    }

    fn eval(&mut self, e: &Expr) -> R<(V, ScalarType)> {
        let int = self.env.int();
        match &e.kind {
            ExprKind::Int(v) => {
                let (lo, hi) = int.int_range().unwrap();
                if *v < lo || *v > hi {
                    return Err(self.fail(AlarmClass::IRO, e.loc));
                }
                Ok((V::I(*v), int))
            }
            ExprKind::Float(v) => {
                let f = *v as f32;
                if !f.is_finite() {
                    return Err(self.fail(AlarmClass::IRO, e.loc));
                }
                Ok((V::F(f), ScalarType::Float))
            }
            ExprKind::Place(p) => self.read(p, e.loc),
            ExprKind::Return | ExprKind::Length(_) | ExprKind::Null => {
                Self::unsupported("contract term")
            }
            ExprKind::Unary(UnOp::Neg, x) => {
                let (v, t) = self.eval(x)?;
                let ty = if t.is_float() { ScalarType::Float } else { int };
                let v = conv(v, ty).map_err(|er| self.fail(er.class, e.loc))?;
                let r = match v {
                    V::F(x) => float_binop(BinOp::Sub, 0.0, x).map(V::F),
                    V::I(x) => int_binop(BinOp::Sub, 0, x, ty, self.env.cfg.int_bits).map(V::I),
                };
                r.map(|v| (v, ty)).map_err(|er| self.fail(er.class, e.loc))
            }
            ExprKind::Unary(UnOp::Not, x) => {
                let b = self.truth(x)?;
                Ok((V::I(i64::from(!b)), int))
            }
            ExprKind::Cast(ty, x) => {
                let (v, _) = self.eval(x)?;
                let to = self.env.scalar_ty(self.module(), ty);
                let v = conv(v, to).map_err(|er| self.fail(er.class, e.loc))?;
                Ok((v, to))
            }
            ExprKind::Binary(op, a, b) => {
                let (va, ta) = self.eval(a)?;
                let (vb, tb) = self.eval(b)?;
                let ty = self.env.arith(ta, tb);
                let va = conv(va, ty).map_err(|er| self.fail(er.class, e.loc))?;
                let vb = conv(vb, ty).map_err(|er| self.fail(er.class, e.loc))?;
                let r = match (va, vb) {
                    (V::F(x), V::F(y)) => float_binop(*op, x, y).map(V::F),
                    (V::I(x), V::I(y)) => int_binop(*op, x, y, ty, self.env.cfg.int_bits).map(V::I),
                    _ => unreachable!("operands converted to one type"),
                };
                r.map(|v| (v, ty)).map_err(|er| self.fail(er.class, e.loc))
            }
            ExprKind::Cmp(op, a, b) => {
                let (va, _) = self.eval(a)?;
                let (vb, _) = self.eval(b)?;
                let r = match (va, vb) {
                    (V::I(x), V::I(y)) => compare(*op, x, y),
                    (V::F(x), V::I(y)) => compare(*op, x, y as f32),
                    (V::I(x), V::F(y)) => compare(*op, x as f32, y),
                    (V::F(x), V::F(y)) => compare(*op, x, y),
                };
                Ok((V::I(i64::from(r)), int))
            }
            ExprKind::And(a, b) => {
                let r = self.truth(a)? && self.truth(b)?;
                Ok((V::I(i64::from(r)), int))
            }
            ExprKind::Or(a, b) => {
                let r = self.truth(a)? || self.truth(b)?;
                Ok((V::I(i64::from(r)), int))
            }
            ExprKind::Call(name, args) => {
                let (v, t) = self.call(name, args, e.loc)?;
                Ok((v.unwrap_or(V::I(0)), t))
            }
        }
    }

    fn call(&mut self, name: &str, args: &[Expr], loc: Loc) -> R<(Option<V>, ScalarType)> {
        let m = self.module();
        let callee = self
            .env
            .callee(m, name)
            .ok_or(Stop::Unsupported(format!("unknown `{name}`")))?;
        let (cm, def): (usize, &FunctionDef) = match callee {
            Callee::Defined(cm, def) => (cm, def),
            Callee::Unknown(sig) => {
                if self
                    .contracts
                    .is_some_and(|c| !c.for_function(name).is_empty())
                {
                    return Self::unsupported("call of a contract-only function");
                }
                // Arguments are evaluated before the call itself fails.
                for (p, a) in sig.params.iter().zip(args) {
                    if !matches!(p.ty, Type::Ptr { .. }) {
                        let (v, _) = self.eval(a)?;
                        conv(v, self.env.scalar_ty(m, &p.ty))
                            .map_err(|er| self.fail(er.class, a.loc))?;
                    }
                }
                return Err(self.fail(AlarmClass::UFC, loc));
            }
        };
        if self.ctx.len() >= CALL_DEPTH_LIMIT {
            return Err(Stop::Steps);
        }
        let mut scope = BTreeMap::new();
        for (p, a) in def.sig.params.iter().zip(args) {
            let slot = match &p.ty {
                Type::Ptr { .. } => {
                    let addr = match &a.kind {
                        ExprKind::Null => None,
                        _ => {
                            let pl = a
                                .as_place()
                                .ok_or(Stop::Unsupported("pointer argument".into()))?;
                            let v = self
                                .resolve(&pl.name)
                                .ok_or(Stop::Unsupported("unknown name".into()))?;
                            match (self.slot(&v), &v) {
                                (Some(CSlot::Ptr(a)), _) => a.clone(),
                                (Some(CSlot::Array(_)), Var::Global(k)) => {
                                    Some(Addr::Global(k.clone()))
                                }
                                (Some(CSlot::Array(_)), Var::Local { frame, scope, name }) => {
                                    Some(Addr::Local {
                                        frame: *frame,
                                        scope: *scope,
                                        name: name.clone(),
                                    })
                                }
                                _ => return Self::unsupported("pointer argument"),
                            }
                        }
                    };
                    CSlot::Ptr(addr)
                }
                t => {
                    let (v, _) = self.eval(a)?;
                    let ty = self.env.scalar_ty(cm, t);
                    let v = conv(v, ty).map_err(|er| self.fail(er.class, a.loc))?;
                    CSlot::Scalar(CCell { ty, v: Some(v) })
                }
            };
            scope.insert(p.name.clone(), slot);
        }
        let ret = match &def.sig.ret {
            Type::Void => None,
            t => Some(self.env.scalar_ty(cm, t)),
        };
        self.mem.frames.push(vec![scope]);
        self.ctx.push(Ctx {
            module: cm,
            ret,
            locals: true,
        });
        let flow = self.block(&def.body);
        self.ctx.pop();
        self.mem.frames.pop();
        let rt = ret.unwrap_or(self.env.int());
        match flow? {
            Flow::Return(v) => Ok((v, rt)),
            _ if ret.is_some() => Err(self.fail(AlarmClass::UIV, loc)),
            _ => Ok((None, rt)),
        }
    }

    fn block(&mut self, body: &[Stmt]) -> R<Flow> {
        self.mem
            .frames
            .last_mut()
            .expect("frame")
            .push(BTreeMap::new());
        let r = self.stmts(body);
        self.mem.frames.last_mut().expect("frame").pop();
        r
    }

    fn stmts(&mut self, body: &[Stmt]) -> R<Flow> {
        for s in body {
            match self.stmt(s)? {
                Flow::Normal => {}
                f => return Ok(f),
            }
        }
        Ok(Flow::Normal)
    }

    fn declare(&mut self, ty: &Type, init: Option<&Init>, loc: Loc) -> R<CSlot> {
        let m = self.module();
        let conv_expr = |this: &mut Self, e: &Expr, t: ScalarType| -> R<CCell> {
            let (v, _) = this.eval(e)?;
            let v = conv(v, t).map_err(|er| this.fail(er.class, loc))?;
            Ok(CCell { ty: t, v: Some(v) })
        };
        Ok(match (self.env.layout(m, ty), init) {
            (Layout::Scalar(t), Some(Init::Expr(e))) => CSlot::Scalar(conv_expr(self, e, t)?),
            (Layout::Scalar(t), _) => CSlot::Scalar(CCell { ty: t, v: None }),
            (Layout::Array(t, n), Some(Init::List(xs))) => {
                let mut cells = Vec::new();
                for k in 0..n as usize {
                    cells.push(match xs.get(k) {
                        Some(e) => conv_expr(self, e, t)?,
                        None => CCell {
                            ty: t,
                            v: Some(V::of(zero_of(t))),
                        },
                    });
                }
                CSlot::Array(cells)
            }
            (Layout::Array(t, n), _) => CSlot::Array(vec![CCell { ty: t, v: None }; n as usize]),
            (Layout::Struct(fs), Some(Init::List(xs))) => {
                let mut out = Vec::new();
                for (k, (name, t)) in fs.into_iter().enumerate() {
                    let c = match xs.get(k) {
                        Some(e) => conv_expr(self, e, t)?,
                        None => CCell {
                            ty: t,
                            v: Some(V::of(zero_of(t))),
                        },
                    };
                    out.push((name, c));
                }
                CSlot::Struct(out)
            }
            (Layout::Struct(fs), _) => CSlot::Struct(
                fs.into_iter()
                    .map(|(n, t)| (n, CCell { ty: t, v: None }))
                    .collect(),
            ),
            (Layout::Ptr, _) => CSlot::Ptr(None),
        })
    }

    fn stmt(&mut self, s: &Stmt) -> R<Flow> {
        self.steps += 1;
        if self.steps > STEP_LIMIT {
            return Err(Stop::Steps);
        }
        match &s.kind {
            StmtKind::Decl { name, ty, init } => {
                let slot = self.declare(ty, init.as_ref(), s.loc)?;
                self.mem
                    .frames
                    .last_mut()
                    .and_then(|f| f.last_mut())
                    .expect("scope")
                    .insert(name.clone(), slot);
                Ok(Flow::Normal)
            }
            StmtKind::Assign { target, value } => {
                let (v, _) = self.eval(value)?;
                self.write(target, v, s.loc)?;
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => {
                match &e.kind {
                    ExprKind::Place(Place {
                        name,
                        sel: Selector::Index(ix),
                    }) => {
                        self.index(name, ix, e.loc)?;
                    }
                    ExprKind::Place(_) => {}
                    _ => {
                        self.eval(e)?;
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then, els } => {
                if self.truth(cond)? {
                    self.block(then)
                } else if let Some(b) = els {
                    self.block(b)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => {
                while self.truth(cond)? {
                    match self.block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal => {}
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                self.mem
                    .frames
                    .last_mut()
                    .expect("frame")
                    .push(BTreeMap::new());
                let r = self.for_loop(init.as_deref(), cond.as_ref(), step.as_deref(), body);
                self.mem.frames.last_mut().expect("frame").pop();
                r
            }
            StmtKind::Switch { scrutinee, cases } => self.switch(scrutinee, cases),
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => {
                        let (v, _) = self.eval(e)?;
                        match self.ctx.last().and_then(|c| c.ret) {
                            Some(rt) => Some(conv(v, rt).map_err(|er| self.fail(er.class, s.loc))?),
                            None => None,
                        }
                    }
                    None => None,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::Block(b) => self.block(b),
            StmtKind::Directive(d) => {
                match d {
                    Directive::ModifyFullRange(_) => {
                        return Self::unsupported("__modify_full_range")
                    }
                    Directive::Assert(c) => {
                        if !self.truth(c)? {
                            return Err(self.fail(AlarmClass::ASR, s.loc));
                        }
                    }
                    Directive::KnownFact(c) => match self.truth(c) {
                        Ok(true) => {}
                        Ok(false) | Err(Stop::Error(_)) => return Err(Stop::Infeasible),
                        Err(e) => return Err(e),
                    },
                    Directive::GlobalAssert(path, c) => {
                        let (name, field) = match path.split_once('.') {
                            Some((a, b)) => (a, Some(b.to_string())),
                            None => (path.as_str(), None),
                        };
                        if let Some(Var::Global(key)) = self.resolve(name) {
                            let module = self.module();
                            self.watches.push(Watch {
                                key,
                                field,
                                cond: c.clone(),
                                module,
                            });
                        }
                    }
                    Directive::Extract(_) => {}
                }
                Ok(Flow::Normal)
            }
        }
    }

    fn for_loop(
        &mut self,
        init: Option<&Stmt>,
        cond: Option<&Expr>,
        step: Option<&Stmt>,
        body: &[Stmt],
    ) -> R<Flow> {
        if let Some(i) = init {
            self.stmt(i)?;
        }
        loop {
            if let Some(c) = cond {
                if !self.truth(c)? {
                    break;
                }
            }
            match self.block(body)? {
                Flow::Break => break,
                Flow::Return(v) => return Ok(Flow::Return(v)),
                Flow::Normal => {}
            }
            if let Some(s) = step {
                self.stmt(s)?;
            }
            self.steps += 1;
            if self.steps > STEP_LIMIT {
                return Err(Stop::Steps);
            }
        }
        Ok(Flow::Normal)
    }

    fn switch(&mut self, scrutinee: &Expr, cases: &[Case]) -> R<Flow> {
        let x = match self.eval(scrutinee)?.0 {
            V::I(x) => x,
            V::F(_) => return Self::unsupported("float switch"),
        };
        let start = cases
            .iter()
            .position(|c| c.labels.contains(&CaseLabel::Value(x)))
            .or_else(|| {
                cases
                    .iter()
                    .position(|c| c.labels.contains(&CaseLabel::Default))
            });
        let Some(start) = start else {
            return Ok(Flow::Normal);
        };
        self.mem
            .frames
            .last_mut()
            .expect("frame")
            .push(BTreeMap::new());
        let mut out = Ok(Flow::Normal);
        for c in &cases[start..] {
            match self.stmts(&c.body) {
                Ok(Flow::Normal) => {}
                Ok(Flow::Break) => break,
                other => {
                    out = other;
                    break;
                }
            }
        }
        self.mem.frames.last_mut().expect("frame").pop();
        out
    }
}
