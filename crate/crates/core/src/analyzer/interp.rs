use std::collections::{BTreeMap, BTreeSet};

use crate::alarm::AlarmClass;
use crate::domains::{
    abs_binop, compare, convert, refine_against, refine_by_comparison, truth_of, AbstractValue,
    BinOp, CmpOp, DomainConfig, Scalar, ScalarType, Truth,
};
use crate::frontend::{
    Case, CaseLabel, ContractKind, ContractSet, Directive, Expr, ExprKind, FunctionDef,
    FunctionSig, Place, Selector, Stmt, StmtKind, Type, UnOp,
};

use super::env::{Callee, Env, GlobalRef, Layout};
use super::state::{join_values, Addr, Cell, Frame, Init, Scope, Slot, State};
use super::{
    Alarm, AnalysisError, AnalysisResult, CallSite, Coverage, Extracted, SourcePos, DRIVER,
};

const CALL_STACK_DEPTH: usize = 3;
const WIDEN_DELAY: u32 = 1;
/// Above this magnitude an integer may not convert to float exactly, so
/// mixed comparisons do not refine integer operands.
const EXACT_FLOAT_INT: f64 = 16_777_216.0;

#[derive(Debug, Clone)]
enum Var {
    Local {
        frame: usize,
        scope: usize,
        name: String,
    },
    Global(String),
    Const(Scalar, ScalarType),
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

    fn addr(&self) -> Option<Addr> {
        match self {
            Var::Global(k) => Some(Addr::Global(k.clone())),
            Var::Local { frame, scope, name } => Some(Addr::Local {
                frame: *frame,
                scope: *scope,
                name: name.clone(),
            }),
            Var::Const(..) => None,
        }
    }
}

fn slot<'s>(st: &'s State, v: &Var) -> Option<&'s Slot> {
    match v {
        Var::Local { frame, scope, name } => st.frames.get(*frame)?.scopes.get(*scope)?.get(name),
        Var::Global(k) => st.globals.get(k),
        Var::Const(..) => None,
    }
}

fn slot_mut<'s>(st: &'s mut State, v: &Var) -> Option<&'s mut Slot> {
    match v {
        Var::Local { frame, scope, name } => st
            .frames
            .get_mut(*frame)?
            .scopes
            .get_mut(*scope)?
            .get_mut(name),
        Var::Global(k) => st.globals.get_mut(k),
        Var::Const(..) => None,
    }
}

enum ArgVal {
    Scalar(AbstractValue),
    Ptr(Option<Addr>),
}

struct Ctx {
    module: usize,
    function: String,
    /// Return type; `None` for void functions.
    ret: Option<ScalarType>,
    returns: Option<State>,
    ret_value: Option<AbstractValue>,
    /// Scope depth and accumulated state of each enclosing loop or switch.
    breaks: Vec<(usize, Option<State>)>,
    site: Option<SourcePos>,
    /// Whether names resolve to locals of the top frame.
    locals: bool,
}

impl Ctx {
    fn pseudo(module: usize, locals: bool) -> Ctx {
        Ctx {
            module,
            function: String::new(),
            ret: None,
            returns: None,
            ret_value: None,
            breaks: Vec::new(),
            site: None,
            locals,
        }
    }
}

struct Watch {
    key: String,
    field: Option<String>,
    cond: Expr,
    module: usize,
    pos: SourcePos,
}

/// Globals written while a driver-level call runs.
struct Track {
    function: String,
    written: BTreeSet<String>,
    ret: Option<AbstractValue>,
}

pub(crate) struct Interp<'a> {
    env: Env<'a>,
    cfg: &'a DomainConfig,
    contracts: &'a ContractSet,
    const_keys: BTreeSet<String>,
    checking: bool,
    silent: u32,
    in_directive: bool,
    alarms: BTreeMap<(AlarmClass, String, crate::frontend::Loc), Alarm>,
    reached: Vec<BTreeSet<u32>>,
    visits: u64,
    exhausted: bool,
    ctx: Vec<Ctx>,
    watches: Vec<Watch>,
    track: Option<Track>,
    extracted: Extracted,
}

pub(crate) fn run(
    prog: &crate::frontend::Program,
    entry: &str,
    contracts: &ContractSet,
    cfg: &DomainConfig,
) -> Result<AnalysisResult, AnalysisError> {
    let env = Env::new(prog, cfg);
    let (m, def) = env
        .entry(entry)
        .ok_or_else(|| AnalysisError::UnknownEntry(entry.to_string()))?;
    let mut it = Interp {
        env,
        cfg,
        contracts,
        const_keys: BTreeSet::new(),
        checking: true,
        silent: 0,
        in_directive: false,
        alarms: BTreeMap::new(),
        reached: vec![BTreeSet::new(); prog.modules.len()],
        visits: 0,
        exhausted: false,
        ctx: Vec::new(),
        watches: Vec::new(),
        track: None,
        extracted: Extracted::default(),
    };
    let mut st = it.initial_state();
    let mut scope = Scope::new();
    for p in &def.sig.params {
        let slot = match &p.ty {
            Type::Ptr { elem, .. } => {
                let key = format!("{}#{}", def.sig.name, p.name);
                let t = it.env.scalar_ty(m, elem);
                st.globals
                    .insert(key.clone(), Slot::array(1, Cell::top(t, cfg)));
                Slot::Ptr(Some(Addr::Global(key)))
            }
            t => Slot::Scalar(Cell::top(it.env.scalar_ty(m, t), cfg)),
        };
        scope.insert(p.name.clone(), slot);
    }
    st.frames.push(Frame {
        scopes: vec![scope],
    });
    it.ctx.push(it.new_ctx(m, &def.sig, None));
    let end = it.exec_block(st, &def.body);
    let _ = end;
    if it.exhausted {
        return Err(AnalysisError::Budget(cfg.visit_budget));
    }
    let mut alarms: Vec<Alarm> = it.alarms.into_values().collect();
    alarms.sort_by(|a, b| (&a.file, a.loc, a.class).cmp(&(&b.file, b.loc, b.class)));
    let coverage = prog
        .modules
        .iter()
        .zip(it.reached)
        .map(|(m, reached)| {
            (
                m.name.clone(),
                Coverage {
                    total: m.stmt_count,
                    reached,
                },
            )
        })
        .collect();
    Ok(AnalysisResult {
        alarms,
        coverage,
        extracted: it.extracted,
        visits: it.visits,
    })
}

impl<'a> Interp<'a> {
    fn new_ctx(&self, module: usize, sig: &FunctionSig, site: Option<SourcePos>) -> Ctx {
        Ctx {
            module,
            function: sig.name.clone(),
            ret: match sig.ret {
                Type::Void => None,
                ref t => Some(self.env.scalar_ty(module, t)),
            },
            returns: None,
            ret_value: None,
            breaks: Vec::new(),
            site,
            locals: true,
        }
    }

    fn ctx(&self) -> &Ctx {
        self.ctx.last().expect("active function")
    }

    fn ctx_mut(&mut self) -> &mut Ctx {
        self.ctx.last_mut().expect("active function")
    }

    fn module(&self) -> usize {
        self.ctx().module
    }

    fn int(&self) -> ScalarType {
        self.env.int()
    }

    fn bottom(&self, ty: ScalarType) -> (AbstractValue, ScalarType) {
        (AbstractValue::bottom_of(ty, self.cfg), ty)
    }

    fn constant(&self, c: Scalar) -> AbstractValue {
        AbstractValue::constant(c, self.cfg)
    }

    fn bool_value(&self, t: bool, f: bool) -> AbstractValue {
        let lo = if f { 0 } else { 1 };
        let hi = if t { 1 } else { 0 };
        if lo > hi {
            AbstractValue::bottom_of(self.int(), self.cfg)
        } else {
            AbstractValue::int_range(lo, hi, self.cfg)
        }
    }

    fn initial_state(&mut self) -> State {
        let mut st = State::new();
        for (key, m, g, external) in self.env.storage() {
            if g.is_const {
                self.const_keys.insert(key.clone());
            }
            let values = if external {
                None
            } else {
                self.env.initial_values(m, g)
            };
            let cell = |t: ScalarType, k: usize| -> Cell {
                if external {
                    Cell::top(t, self.cfg)
                } else {
                    match &values {
                        Some(v) => Cell::with(t, self.constant(v[k])),
                        None => Cell::uninit(t, self.cfg),
                    }
                }
            };
            let slot = match self.env.layout(m, &g.ty) {
                Layout::Scalar(t) => Slot::Scalar(cell(t, 0)),
                Layout::Array(t, n) => {
                    let mut s = Slot::array(n, cell(t, 0));
                    if let Slot::Array { cells, .. } = &mut s {
                        if cells.len() == n as usize {
                            for (k, c) in cells.iter_mut().enumerate() {
                                *c = cell(t, k);
                            }
                        } else {
                            for k in 1..n as usize {
                                let next = cell(t, k);
                                cells[0].value =
                                    join_values(&cells[0].value, &next.value, self.cfg);
                            }
                        }
                    }
                    s
                }
                Layout::Struct(fs) => Slot::Struct(
                    fs.into_iter()
                        .enumerate()
                        .map(|(k, (name, t))| (name, cell(t, k)))
                        .collect(),
                ),
                Layout::Ptr => Slot::Ptr(None),
            };
            st.globals.insert(key, slot);
        }
        st
    }

    // ---- alarms and bookkeeping ----

    fn alarm(
        &mut self,
        class: AlarmClass,
        definite: bool,
        loc: crate::frontend::Loc,
        message: impl Into<String>,
    ) {
        let file = self.env.file(self.module()).to_string();
        self.record(class, definite, file, loc, message.into(), None);
    }

    fn record(
        &mut self,
        class: AlarmClass,
        definite: bool,
        file: String,
        loc: crate::frontend::Loc,
        message: String,
        origin: Option<SourcePos>,
    ) {
        if !self.checking || self.silent > 0 {
            return;
        }
        let call_stack: Vec<CallSite> = self
            .ctx
            .iter()
            .rev()
            .filter_map(|c| {
                c.site.as_ref().map(|s| CallSite {
                    function: c.function.clone(),
                    file: s.file.clone(),
                    loc: s.loc,
                })
            })
            .take(CALL_STACK_DEPTH)
            .collect();
        if let Some(a) = self.alarms.get_mut(&(class, file.clone(), loc)) {
            // A possible occurrence makes the alarm possible; keep its wording.
            if a.definite && !definite {
                a.definite = false;
                a.message = message;
            }
            return;
        }
        self.alarms.insert(
            (class, file.clone(), loc),
            Alarm {
                class,
                definite,
                file,
                loc,
                message,
                contract: None,
                origin,
                call_stack,
            },
        );
    }

    // ---- names and places ----

    fn resolve(&self, st: &State, name: &str) -> Option<Var> {
        let ctx = self.ctx();
        if ctx.locals {
            if let Some(fi) = st.frames.len().checked_sub(1) {
                for (si, sc) in st.frames[fi].scopes.iter().enumerate().rev() {
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
            GlobalRef::Const(c, t) => Some(Var::Const(c, t)),
            GlobalRef::Slot(k) => Some(Var::Global(k)),
        }
    }

    /// The array a variable denotes: itself, or the target of a pointer.
    /// `Ok(None)` is a NULL pointer.
    fn array_of(&self, st: &State, v: &Var) -> Option<Option<Var>> {
        match slot(st, v)? {
            Slot::Array { .. } => Some(Some(v.clone())),
            Slot::Ptr(a) => Some(a.as_ref().map(Var::from_addr)),
            _ => None,
        }
    }

    /// A scalar place whose cell a condition may refine.
    /// A scalar, a struct field or a constant-index element of an exactly
    /// tracked array.
    fn refinable(&self, st: &State, e: &Expr) -> Option<(Var, Option<String>, Option<usize>)> {
        let p = e.as_place()?;
        let v = self.resolve(st, &p.name)?;
        match (&p.sel, slot(st, &v)?) {
            (Selector::None, Slot::Scalar(_)) => Some((v, None, None)),
            (Selector::Field(f), Slot::Struct(_)) => Some((v, Some(f.clone()), None)),
            (Selector::Index(ix), Slot::Array { len, cells }) if cells.len() as u32 == *len => {
                match ix.kind {
                    ExprKind::Int(k) if k >= 0 && (k as u64) < *len as u64 => {
                        Some((v, None, Some(k as usize)))
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }

    fn cell_mut<'s>(st: &'s mut State, v: &Var, field: Option<&str>) -> Option<&'s mut Cell> {
        match (slot_mut(st, v)?, field) {
            (Slot::Scalar(c), None) => Some(c),
            (Slot::Struct(fs), Some(f)) => fs.iter_mut().find(|(n, _)| n == f).map(|(_, c)| c),
            _ => None,
        }
    }

    /// Applies `f` to the cell of a refinable place.
    fn refine_expr(
        &mut self,
        st: &mut State,
        e: &Expr,
        f: impl Fn(&Cell) -> Option<AbstractValue>,
    ) {
        if !st.reachable {
            return;
        }
        let Some((v, field, index)) = self.refinable(st, e) else {
            return;
        };
        let cell = match index {
            Some(k) => match slot_mut(st, &v) {
                Some(Slot::Array { cells, .. }) => &mut cells[k],
                _ => return,
            },
            None => match Self::cell_mut(st, &v, field.as_deref()) {
                Some(c) => c,
                None => return,
            },
        };
        if let Some(new) = f(cell) {
            if new.is_bottom() {
                st.set_bottom();
            } else {
                cell.value = new;
            }
        }
    }

    fn refine_cmp(&mut self, st: &mut State, e: &Expr, op: CmpOp, other: &AbstractValue) {
        self.refine_expr(st, e, |cell| {
            let v = &cell.value;
            if v.is_bottom() {
                return None;
            }
            if cell.ty.is_float() {
                let o = other.float_hull()?;
                return Some(refine_against(v, op, &AbstractValue::Float(o)));
            }
            if other.is_float() {
                let (lo, hi) = v.numeric_bounds()?;
                if lo.abs() > EXACT_FLOAT_INT || hi.abs() > EXACT_FLOAT_INT {
                    return None;
                }
            }
            Some(refine_against(v, op, other))
        });
    }

    fn refine_range(&mut self, st: &mut State, e: &Expr, lo: i64, hi: i64) {
        self.refine_expr(st, e, |cell| {
            if cell.ty.is_float() {
                return None;
            }
            let v = refine_by_comparison(&cell.value, CmpOp::Ge, Scalar::Int(lo));
            Some(refine_by_comparison(&v, CmpOp::Le, Scalar::Int(hi)))
        });
    }

    /// Checks that every initialization status allows a read; `false` when
    /// the path aborts.
    fn check_init(
        &mut self,
        st: &mut State,
        init: Init,
        loc: crate::frontend::Loc,
        name: &str,
    ) -> bool {
        match init {
            Init::Yes => true,
            Init::Maybe => {
                self.alarm(
                    AlarmClass::UIV,
                    false,
                    loc,
                    format!("`{name}` may be uninitialized"),
                );
                true
            }
            Init::No => {
                self.alarm(
                    AlarmClass::UIV,
                    true,
                    loc,
                    format!("`{name}` is uninitialized"),
                );
                st.set_bottom();
                false
            }
        }
    }

    /// Bounds check of an index against an array of length `len`. Returns
    /// the in-bounds index range, or `None` when the path aborts.
    fn check_index(
        &mut self,
        st: &mut State,
        ix: &Expr,
        iv: &AbstractValue,
        len: u32,
        loc: crate::frontend::Loc,
    ) -> Option<(usize, usize)> {
        let Some((lo, hi)) = iv.int_hull().and_then(|h| h.bounds()) else {
            st.set_bottom();
            return None;
        };
        let n = len as i64;
        if n == 0 || hi < 0 || lo >= n {
            let msg = if n == 0 {
                "access through a null pointer".to_string()
            } else {
                format!("index out of bounds [0, {}]", n - 1)
            };
            self.alarm(AlarmClass::IPA, true, loc, msg);
            st.set_bottom();
            return None;
        }
        if lo < 0 || hi >= n {
            self.alarm(
                AlarmClass::IPA,
                false,
                loc,
                format!("index may leave [0, {}]", n - 1),
            );
            self.refine_range(st, ix, 0, n - 1);
            if !st.reachable {
                return None;
            }
        }
        Some((lo.max(0) as usize, hi.min(n - 1) as usize))
    }

    /// Resolves `p` to an array cell range: evaluates the index, checks
    /// bounds. Returns the array variable and the index range.
    fn index_target(
        &mut self,
        st: &mut State,
        name: &str,
        ix: &Expr,
        loc: crate::frontend::Loc,
    ) -> Option<(Var, usize, usize)> {
        let (iv, _) = self.eval(st, ix);
        if !st.reachable {
            return None;
        }
        let v = self.resolve(st, name)?;
        let target = self.array_of(st, &v)?;
        let len = match &target {
            None => 0,
            Some(t) => match slot(st, t) {
                Some(Slot::Array { len, .. }) => *len,
                _ => 0,
            },
        };
        let (lo, hi) = self.check_index(st, ix, &iv, len, loc)?;
        Some((target.expect("non-null array"), lo, hi))
    }

    fn array_cells(s: &Slot, lo: usize, hi: usize) -> Vec<&Cell> {
        match s {
            Slot::Array { cells, .. } if cells.len() == 1 => vec![&cells[0]],
            Slot::Array { cells, .. } => cells[lo..=hi].iter().collect(),
            _ => Vec::new(),
        }
    }

    fn read_cells(
        &mut self,
        st: &mut State,
        cells: Vec<Cell>,
        loc: crate::frontend::Loc,
        name: &str,
        check: bool,
    ) -> Option<(AbstractValue, ScalarType)> {
        let ty = cells.first()?.ty;
        let init = cells
            .iter()
            .map(|c| c.init)
            .reduce(Init::join)
            .unwrap_or(Init::Yes);
        let init = if cells.iter().all(|c| c.init == Init::No) {
            Init::No
        } else if cells.iter().all(|c| c.init == Init::Yes) {
            Init::Yes
        } else {
            init.join(Init::Maybe)
        };
        if check && !self.check_init(st, init, loc, name) {
            return None;
        }
        let value = cells
            .iter()
            .filter(|c| c.init != Init::No)
            .map(|c| c.value.clone())
            .reduce(|a, b| join_values(&a, &b, self.cfg))
            .unwrap_or_else(|| AbstractValue::bottom_of(ty, self.cfg));
        Some((value, ty))
    }

    fn read_place(
        &mut self,
        st: &mut State,
        p: &Place,
        loc: crate::frontend::Loc,
        check: bool,
    ) -> (AbstractValue, ScalarType) {
        let int = self.int();
        match &p.sel {
            Selector::Index(ix) => {
                let Some((v, lo, hi)) = self.index_target(st, &p.name, ix, loc) else {
                    st.set_bottom();
                    return self.bottom(int);
                };
                let cells: Vec<Cell> = Self::array_cells(slot(st, &v).expect("array"), lo, hi)
                    .into_iter()
                    .cloned()
                    .collect();
                let single = lo == hi;
                match self.read_cells(st, cells, loc, &p.name, check) {
                    Some(r) => {
                        if single {
                            if let Some(Slot::Array { cells, .. }) = slot_mut(st, &v) {
                                if cells.len() > 1 {
                                    cells[lo].init = Init::Yes;
                                }
                            }
                        }
                        r
                    }
                    None => self.bottom(int),
                }
            }
            sel => {
                let Some(v) = self.resolve(st, &p.name) else {
                    return (AbstractValue::top_of(int, self.cfg), int);
                };
                if let Var::Const(c, t) = v {
                    return (self.constant(c), t);
                }
                let field = match sel {
                    Selector::Field(f) => Some(f.as_str()),
                    _ => None,
                };
                let cells: Vec<Cell> = match (slot(st, &v), field) {
                    (Some(Slot::Scalar(c)), None) => vec![c.clone()],
                    (Some(Slot::Struct(fs)), Some(f)) => fs
                        .iter()
                        .filter(|(n, _)| n == f)
                        .map(|(_, c)| c.clone())
                        .collect(),
                    (Some(Slot::Array { cells, .. }), None) => cells.clone(),
                    (Some(Slot::Ptr(Some(a))), None) => match slot(st, &Var::from_addr(a)) {
                        Some(s) => s.cells().into_iter().cloned().collect(),
                        None => Vec::new(),
                    },
                    _ => Vec::new(),
                };
                if cells.is_empty() {
                    return (AbstractValue::top_of(int, self.cfg), int);
                }
                let scalar = cells.len() == 1
                    && !matches!(slot(st, &v), Some(Slot::Array { .. } | Slot::Ptr(_)));
                match self.read_cells(st, cells, loc, &p.name, check) {
                    Some(r) => {
                        if scalar {
                            if let Some(c) = Self::cell_mut(st, &v, field) {
                                c.init = Init::Yes;
                            }
                        }
                        r
                    }
                    None => self.bottom(int),
                }
            }
        }
    }

    /// Converts `v` from `from` to `to`, recording an IRO at `loc`.
    fn convert_at(
        &mut self,
        st: &mut State,
        v: AbstractValue,
        from: ScalarType,
        to: ScalarType,
        loc: crate::frontend::Loc,
    ) -> AbstractValue {
        if from == to {
            return v;
        }
        let (out, alarm) = convert(&v, to, self.cfg);
        if let Some(a) = alarm {
            self.alarm(a.class, a.definite, loc, a.detail);
            if a.definite {
                st.set_bottom();
                return AbstractValue::bottom_of(to, self.cfg);
            }
        }
        out
    }

    /// Writes `v` into `p` after conversion to the target type.
    fn write_place(
        &mut self,
        st: &mut State,
        p: &Place,
        v: AbstractValue,
        vty: ScalarType,
        loc: crate::frontend::Loc,
    ) {
        match &p.sel {
            Selector::Index(ix) => {
                let Some((target, lo, hi)) = self.index_target(st, &p.name, ix, loc) else {
                    st.set_bottom();
                    return;
                };
                let Some(Slot::Array { cells, .. }) = slot(st, &target) else {
                    return;
                };
                let ty = cells[0].ty;
                let v = self.convert_at(st, v, vty, ty, loc);
                if !st.reachable {
                    return;
                }
                let cfg = self.cfg;
                if let Some(Slot::Array { cells, .. }) = slot_mut(st, &target) {
                    if cells.len() > 1 && lo == hi {
                        cells[lo] = Cell::with(ty, v);
                    } else {
                        let range = if cells.len() == 1 { 0..=0 } else { lo..=hi };
                        for c in &mut cells[range] {
                            c.value = join_values(&c.value, &v, cfg);
                            c.init = c.init.join(Init::Yes);
                        }
                    }
                }
                self.after_write(st, &target, None, loc);
            }
            sel => {
                let Some(var) = self.resolve(st, &p.name) else {
                    return;
                };
                let field = match sel {
                    Selector::Field(f) => Some(f.as_str()),
                    _ => None,
                };
                let Some(ty) = Self::cell_mut(st, &var, field).map(|c| c.ty) else {
                    return;
                };
                let v = self.convert_at(st, v, vty, ty, loc);
                if !st.reachable {
                    return;
                }
                if let Some(c) = Self::cell_mut(st, &var, field) {
                    *c = Cell::with(ty, v);
                }
                self.after_write(st, &var, field, loc);
            }
        }
    }

    /// Bookkeeping after module code writes a global: extraction tracking
    /// and watches.
    fn after_write(
        &mut self,
        st: &mut State,
        var: &Var,
        field: Option<&str>,
        loc: crate::frontend::Loc,
    ) {
        let Var::Global(key) = var else {
            return;
        };
        if self.env.is_harness(self.module()) {
            return;
        }
        if let Some(t) = &mut self.track {
            if !key.contains("::") && !key.contains('#') {
                match field {
                    Some(f) => {
                        t.written.insert(format!("{key}.{f}"));
                    }
                    None => match st.globals.get(key) {
                        Some(Slot::Struct(fs)) => {
                            for (f, _) in fs {
                                t.written.insert(format!("{key}.{f}"));
                            }
                        }
                        _ => {
                            t.written.insert(key.clone());
                        }
                    },
                }
            }
        }
        let hits: Vec<usize> = self
            .watches
            .iter()
            .enumerate()
            .filter(|(_, w)| {
                &w.key == key
                    && (w.field.is_none() || field.is_none() || w.field.as_deref() == field)
            })
            .map(|(i, _)| i)
            .collect();
        for i in hits {
            if !st.reachable {
                return;
            }
            let (cond, module, pos) = {
                let w = &self.watches[i];
                (w.cond.clone(), w.module, w.pos.clone())
            };
            let file = self.env.file(self.module()).to_string();
            self.ctx.push(Ctx::pseudo(module, false));
            self.silent += 1;
            let saved = self.in_directive;
            self.in_directive = true;
            let (t, f) = self.cond(st.clone(), &cond);
            self.in_directive = saved;
            self.silent -= 1;
            self.ctx.pop();
            if f.reachable {
                self.record(
                    AlarmClass::ASR,
                    !t.reachable,
                    file,
                    loc,
                    format!(
                        "write {} `{}`",
                        if t.reachable {
                            "may violate"
                        } else {
                            "violates"
                        },
                        crate::frontend::expr_to_string(&cond)
                    ),
                    Some(pos),
                );
            }
            *st = t;
        }
    }

    // ---- expressions ----

    fn eval(&mut self, st: &mut State, e: &Expr) -> (AbstractValue, ScalarType) {
        let int = self.int();
        if !st.reachable {
            return self.bottom(int);
        }
        match &e.kind {
            ExprKind::Int(v) => {
                let (lo, hi) = int.int_range().unwrap();
                if *v < lo || *v > hi {
                    self.alarm(
                        AlarmClass::IRO,
                        true,
                        e.loc,
                        format!("constant {v} does not fit in int"),
                    );
                    st.set_bottom();
                    return self.bottom(int);
                }
                (self.constant(Scalar::Int(*v)), int)
            }
            ExprKind::Float(v) => {
                let f = *v as f32;
                if !f.is_finite() {
                    self.alarm(AlarmClass::IRO, true, e.loc, "float constant out of range");
                    st.set_bottom();
                    return self.bottom(ScalarType::Float);
                }
                (self.constant(Scalar::Float(f as f64)), ScalarType::Float)
            }
            ExprKind::Place(p) => self.read_place(st, p, e.loc, true),
            ExprKind::Return => self.read_place(st, &Place::var("return"), e.loc, false),
            ExprKind::Length(_) | ExprKind::Null => (AbstractValue::top_of(int, self.cfg), int),
            ExprKind::Unary(UnOp::Neg, x) => {
                let (v, t) = self.eval(st, x);
                if !st.reachable {
                    return self.bottom(int);
                }
                let ty = if t.is_float() { ScalarType::Float } else { int };
                let v = self.convert_at(st, v, t, ty, e.loc);
                let zero = self.constant(if ty.is_float() {
                    Scalar::Float(0.0)
                } else {
                    Scalar::Int(0)
                });
                self.apply_binop(st, BinOp::Sub, zero, v, ty, None, e.loc)
            }
            ExprKind::Cast(ty, x) => {
                let (v, t) = self.eval(st, x);
                let to = self.env.scalar_ty(self.module(), ty);
                if !st.reachable {
                    return self.bottom(to);
                }
                let v = self.convert_at(st, v, t, to, e.loc);
                (v, to)
            }
            ExprKind::Binary(op, a, b) => {
                let (va, ta) = self.eval(st, a);
                let (vb, tb) = self.eval(st, b);
                if !st.reachable {
                    return self.bottom(int);
                }
                let ty = self.env.arith(ta, tb);
                let va = self.convert_at(st, va, ta, ty, e.loc);
                let vb = self.convert_at(st, vb, tb, ty, e.loc);
                if !st.reachable {
                    return self.bottom(ty);
                }
                let refine = (!ty.is_float() && !tb.is_float()).then_some(&**b);
                self.apply_binop(st, *op, va, vb, ty, refine, e.loc)
            }
            ExprKind::Unary(UnOp::Not, _)
            | ExprKind::Cmp(..)
            | ExprKind::And(..)
            | ExprKind::Or(..) => {
                let (t, f) = self.cond(st.clone(), e);
                let v = self.bool_value(t.reachable, f.reachable);
                *st = t.join(&f, self.cfg);
                (v, int)
            }
            ExprKind::Call(name, args) => self.call(st, name, args, e.loc),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_binop(
        &mut self,
        st: &mut State,
        op: BinOp,
        a: AbstractValue,
        b: AbstractValue,
        ty: ScalarType,
        rhs: Option<&Expr>,
        loc: crate::frontend::Loc,
    ) -> (AbstractValue, ScalarType) {
        let out = abs_binop(op, &a, &b, ty, self.cfg);
        for c in &out.alarms {
            self.alarm(c.class, c.definite, loc, c.detail.clone());
            if c.definite {
                st.set_bottom();
                return self.bottom(ty);
            }
        }
        if let (Some(r), Some(e)) = (&out.rhs_refined, rhs) {
            if !out.alarms.is_empty() {
                self.refine_expr(st, e, |cell| {
                    if cell.ty.is_float() {
                        return None;
                    }
                    let h = r.int_hull()?;
                    let (lo, hi) = h.bounds().unwrap_or((1, 0));
                    if lo > hi {
                        return Some(cell.value.to_bottom());
                    }
                    let v = refine_by_comparison(&cell.value, CmpOp::Ge, Scalar::Int(lo));
                    let v = refine_by_comparison(&v, CmpOp::Le, Scalar::Int(hi));
                    Some(if r.contains(Scalar::Int(0)) {
                        v
                    } else {
                        refine_by_comparison(&v, CmpOp::Ne, Scalar::Int(0))
                    })
                });
                if !st.reachable {
                    return self.bottom(ty);
                }
            }
        }
        (out.value, ty)
    }

    /// Splits `st` into the states where `e` is true and where it is false.
    fn cond(&mut self, st: State, e: &Expr) -> (State, State) {
        if !st.reachable {
            return (st.clone(), st);
        }
        match &e.kind {
            ExprKind::Unary(UnOp::Not, x) => {
                let (t, f) = self.cond(st, x);
                (f, t)
            }
            ExprKind::And(a, b) => {
                let (at, af) = self.cond(st, a);
                let (bt, bf) = self.cond(at, b);
                let f = af.join(&bf, self.cfg);
                (bt, f)
            }
            ExprKind::Or(a, b) => {
                let (at, af) = self.cond(st, a);
                let (bt, bf) = self.cond(af, b);
                (at.join(&bt, self.cfg), bf)
            }
            ExprKind::Cmp(op, a, b) => {
                let mut s = st;
                let (va, ta) = self.eval(&mut s, a);
                let (vb, tb) = self.eval(&mut s, b);
                if !s.reachable {
                    return (s.clone(), s);
                }
                let (ca, cb) = if ta.is_float() || tb.is_float() {
                    let fa = va.float_hull().map(AbstractValue::Float).unwrap_or(va);
                    let fb = vb.float_hull().map(AbstractValue::Float).unwrap_or(vb);
                    (fa, fb)
                } else {
                    (va, vb)
                };
                let truth = compare(&ca, *op, &cb);
                let mut t = if truth == Truth::False {
                    s.bottom()
                } else {
                    s.clone()
                };
                let mut f = if truth == Truth::True { s.bottom() } else { s };
                for (state, o) in [(&mut t, *op), (&mut f, op.negate())] {
                    if !b.contains_call() {
                        self.refine_cmp(state, a, o, &cb);
                    }
                    if !a.contains_call() {
                        self.refine_cmp(state, b, o.swap(), &ca);
                    }
                }
                (t, f)
            }
            _ => {
                let mut s = st;
                let (v, ty) = self.eval(&mut s, e);
                if !s.reachable {
                    return (s.clone(), s);
                }
                let truth = truth_of(&v);
                let zero = self.constant(if ty.is_float() {
                    Scalar::Float(0.0)
                } else {
                    Scalar::Int(0)
                });
                let mut t = if truth == Truth::False {
                    s.bottom()
                } else {
                    s.clone()
                };
                let mut f = if truth == Truth::True { s.bottom() } else { s };
                if !e.contains_call() {
                    self.refine_cmp(&mut t, e, CmpOp::Ne, &zero);
                    self.refine_cmp(&mut f, e, CmpOp::Eq, &zero);
                }
                (t, f)
            }
        }
    }

    // ---- calls ----

    fn arg_addr(&self, st: &State, e: &Expr) -> Option<Addr> {
        let p = e.as_place()?;
        let v = self.resolve(st, &p.name)?;
        match slot(st, &v)? {
            Slot::Array { .. } => v.addr(),
            Slot::Ptr(a) => a.clone(),
            _ => None,
        }
    }

    fn call(
        &mut self,
        st: &mut State,
        name: &str,
        args: &[Expr],
        loc: crate::frontend::Loc,
    ) -> (AbstractValue, ScalarType) {
        let m = self.module();
        let Some(callee) = self.env.callee(m, name) else {
            let int = self.int();
            return (AbstractValue::top_of(int, self.cfg), int);
        };
        let sig = callee.sig();
        let callee_module = match &callee {
            Callee::Defined(cm, _) => *cm,
            Callee::Unknown(_) => m,
        };
        let ret_ty = match &sig.ret {
            Type::Void => self.int(),
            t => self.env.scalar_ty(callee_module, t),
        };
        let mut vals = Vec::with_capacity(args.len());
        for (p, a) in sig.params.iter().zip(args) {
            match &p.ty {
                Type::Ptr { .. } => {
                    let addr = match a.kind {
                        ExprKind::Null => None,
                        _ => self.arg_addr(st, a),
                    };
                    vals.push(ArgVal::Ptr(addr));
                }
                t => {
                    let (v, vt) = self.eval(st, a);
                    let to = self.env.scalar_ty(callee_module, t);
                    let v = self.convert_at(st, v, vt, to, a.loc);
                    vals.push(ArgVal::Scalar(v));
                }
            }
            if !st.reachable {
                return self.bottom(ret_ty);
            }
        }
        let driver_level =
            self.ctx.len() == 1 && self.ctx().function == DRIVER && self.env.is_harness(m);
        if driver_level {
            self.track = Some(Track {
                function: name.to_string(),
                written: BTreeSet::new(),
                ret: None,
            });
        }
        let value = match callee {
            Callee::Defined(cm, def) if self.ctx.len() <= self.cfg.max_inline_depth as usize => {
                self.inline(st, cm, def, vals, loc)
            }
            Callee::Defined(cm, def) => self.summarize(st, cm, &def.sig, &vals, true),
            Callee::Unknown(sig) => {
                if self.contracts.for_function(name).is_empty() {
                    self.alarm(
                        AlarmClass::UFC,
                        false,
                        loc,
                        format!("call of unknown function `{name}`"),
                    );
                }
                self.summarize(st, m, sig, &vals, false)
            }
        };
        if driver_level && sig.ret != Type::Void {
            if let Some(t) = &mut self.track {
                t.ret = Some(value.clone());
            }
        }
        if !st.reachable {
            return self.bottom(ret_ty);
        }
        (value, ret_ty)
    }

    fn inline(
        &mut self,
        st: &mut State,
        cm: usize,
        def: &'a FunctionDef,
        vals: Vec<ArgVal>,
        loc: crate::frontend::Loc,
    ) -> AbstractValue {
        let sig = &def.sig;
        let mut scope = Scope::new();
        let stub = self.env.is_harness(cm) && sig.name != DRIVER;
        for (p, v) in sig.params.iter().zip(vals) {
            let slot = match v {
                ArgVal::Scalar(v) => {
                    let ty = self.env.scalar_ty(cm, &p.ty);
                    if stub && self.checking && self.silent == 0 {
                        let entry = self.extracted.params.entry(sig.name.clone()).or_default();
                        let joined = match entry.get(&p.name) {
                            Some(old) => join_values(old, &v, self.cfg),
                            None => v.clone(),
                        };
                        entry.insert(p.name.clone(), joined);
                    }
                    Slot::Scalar(Cell::with(ty, v))
                }
                ArgVal::Ptr(a) => Slot::Ptr(a),
            };
            scope.insert(p.name.clone(), slot);
        }
        let caller_file = self.env.file(self.module()).to_string();
        let mut callee_state = st.clone();
        callee_state.frames.push(Frame {
            scopes: vec![scope],
        });
        let ctx = self.new_ctx(
            cm,
            sig,
            Some(SourcePos {
                file: caller_file,
                loc,
            }),
        );
        let ret = ctx.ret;
        self.ctx.push(ctx);
        let end = self.exec_block(callee_state, &def.body);
        let done = self.ctx.pop().expect("callee context");
        let mut out = done.returns;
        if end.reachable {
            if ret.is_some() {
                let never_returns = out.as_ref().is_none_or(|s| !s.reachable);
                self.alarm(
                    AlarmClass::UIV,
                    never_returns,
                    loc,
                    format!("`{}` may end without returning a value", sig.name),
                );
            } else {
                State::accumulate(&mut out, end, self.cfg);
            }
        }
        match out {
            Some(mut s) if s.reachable => {
                s.frames.pop();
                *st = s;
            }
            _ => st.set_bottom(),
        }
        match (ret, done.ret_value) {
            (Some(_), Some(v)) => v,
            (Some(t), None) => AbstractValue::bottom_of(t, self.cfg),
            (None, _) => AbstractValue::bottom_of(self.int(), self.cfg),
        }
    }

    /// Effect of a call that is not inlined: globals and writable pointer
    /// arguments become full range; the return value is full range refined
    /// by the callee's ensures clauses.
    fn summarize(
        &mut self,
        st: &mut State,
        cm: usize,
        sig: &FunctionSig,
        vals: &[ArgVal],
        all_globals: bool,
    ) -> AbstractValue {
        let cfg = self.cfg;
        let keys: Vec<String> = st
            .globals
            .keys()
            .filter(|k| {
                !self.const_keys.contains(*k)
                    && (all_globals || !k.contains("::"))
                    && !k.contains('#')
            })
            .cloned()
            .collect();
        for k in &keys {
            if let Some(s) = st.globals.get_mut(k) {
                for c in s.cells_mut() {
                    *c = Cell::top(c.ty, cfg);
                }
            }
            if let Some(t) = &mut self.track {
                if !k.contains("::") {
                    match st.globals.get(k) {
                        Some(Slot::Struct(fs)) => {
                            for (f, _) in fs {
                                t.written.insert(format!("{k}.{f}"));
                            }
                        }
                        _ => {
                            t.written.insert(k.clone());
                        }
                    }
                }
            }
        }
        for (p, v) in sig.params.iter().zip(vals) {
            if let (
                Type::Ptr {
                    is_const: false, ..
                },
                ArgVal::Ptr(Some(a)),
            ) = (&p.ty, v)
            {
                if let Some(s) = slot_mut(st, &Var::from_addr(a)) {
                    for c in s.cells_mut() {
                        *c = Cell::top(c.ty, cfg);
                    }
                }
            }
        }
        let rty = match &sig.ret {
            Type::Void => return AbstractValue::bottom_of(self.int(), cfg),
            t => self.env.scalar_ty(cm, t),
        };
        let top = AbstractValue::top_of(rty, cfg);
        let ensures: Vec<&Expr> = self
            .contracts
            .function_contracts(&sig.name, ContractKind::Ensures)
            .filter_map(|c| c.cond())
            .collect();
        if ensures.is_empty() {
            return top;
        }
        let mut s = st.clone();
        let mut scope = Scope::new();
        for (p, v) in sig.params.iter().zip(vals) {
            let slot = match v {
                ArgVal::Scalar(v) => {
                    Slot::Scalar(Cell::with(self.env.scalar_ty(cm, &p.ty), v.clone()))
                }
                ArgVal::Ptr(a) => Slot::Ptr(a.clone()),
            };
            scope.insert(p.name.clone(), slot);
        }
        scope.insert(
            "return".to_string(),
            Slot::Scalar(Cell::with(rty, top.clone())),
        );
        s.frames.push(Frame {
            scopes: vec![scope],
        });
        self.ctx.push(Ctx::pseudo(self.module(), true));
        self.silent += 1;
        let saved = self.in_directive;
        self.in_directive = true;
        for e in ensures {
            s = self.cond(s, e).0;
        }
        self.in_directive = saved;
        self.silent -= 1;
        self.ctx.pop();
        if !s.reachable {
            return top;
        }
        match s.frame().scopes[0].get("return") {
            Some(Slot::Scalar(c)) => c.value.clone(),
            _ => top,
        }
    }

    // ---- statements ----

    fn exec_block(&mut self, mut st: State, body: &[Stmt]) -> State {
        let depth = st.scope_depth();
        st.push_scope();
        for s in body {
            st = self.exec(st, s);
        }
        st.truncate_scopes(depth);
        st
    }

    fn exec(&mut self, mut st: State, s: &Stmt) -> State {
        if !st.reachable || self.exhausted {
            st.set_bottom();
            return st;
        }
        self.visits += 1;
        if self.visits > self.cfg.visit_budget {
            self.exhausted = true;
            st.set_bottom();
            return st;
        }
        if self.checking {
            let m = self.module();
            self.reached[m].insert(s.id);
        }
        match &s.kind {
            StmtKind::Decl { name, ty, init } => {
                let slot = self.declare(&mut st, ty, init.as_ref(), s.loc);
                if let Some(sc) = st.frame_mut().scopes.last_mut() {
                    sc.insert(name.clone(), slot);
                }
                st
            }
            StmtKind::Assign { target, value } => {
                let (v, t) = self.eval(&mut st, value);
                if st.reachable {
                    self.write_place(&mut st, target, v, t, s.loc);
                }
                st
            }
            StmtKind::Expr(e) => {
                match &e.kind {
                    ExprKind::Place(p) => {
                        if let Selector::Index(ix) = &p.sel {
                            if self.index_target(&mut st, &p.name, ix, e.loc).is_none() {
                                st.set_bottom();
                            }
                        }
                    }
                    _ => {
                        self.eval(&mut st, e);
                    }
                }
                st
            }
            StmtKind::If { cond, then, els } => {
                let (t, f) = self.cond(st, cond);
                let t = self.exec_block(t, then);
                let f = match els {
                    Some(b) => self.exec_block(f, b),
                    None => f,
                };
                t.join(&f, self.cfg)
            }
            StmtKind::While { cond, body } => self.exec_loop(st, Some(cond), body, None),
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                let depth = st.scope_depth();
                st.push_scope();
                if let Some(i) = init {
                    st = self.exec(st, i);
                }
                let mut out = self.exec_loop(st, cond.as_ref(), body, step.as_deref());
                out.truncate_scopes(depth);
                out
            }
            StmtKind::Switch { scrutinee, cases } => self.exec_switch(st, scrutinee, cases),
            StmtKind::Break => {
                let cfg = self.cfg;
                let ctx = self.ctx_mut();
                if let Some((depth, acc)) = ctx.breaks.last_mut() {
                    let mut b = st.clone();
                    b.truncate_scopes(*depth);
                    State::accumulate(acc, b, cfg);
                }
                st.set_bottom();
                st
            }
            StmtKind::Return(e) => {
                let mut value = None;
                if let Some(e) = e {
                    let (v, t) = self.eval(&mut st, e);
                    if let Some(rt) = self.ctx().ret {
                        value = Some(self.convert_at(&mut st, v, t, rt, s.loc));
                    }
                }
                if st.reachable {
                    let cfg = self.cfg;
                    let mut r = st.clone();
                    r.truncate_scopes(1);
                    let ctx = self.ctx_mut();
                    State::accumulate(&mut ctx.returns, r, cfg);
                    if let Some(v) = value {
                        ctx.ret_value = Some(match ctx.ret_value.take() {
                            Some(old) => join_values(&old, &v, cfg),
                            None => v,
                        });
                    }
                }
                st.set_bottom();
                st
            }
            StmtKind::Block(b) => self.exec_block(st, b),
            StmtKind::Directive(d) => self.exec_directive(st, d, s.loc),
        }
    }

    fn declare(
        &mut self,
        st: &mut State,
        ty: &Type,
        init: Option<&crate::frontend::Init>,
        loc: crate::frontend::Loc,
    ) -> Slot {
        use crate::frontend::Init as I;
        let m = self.module();
        let cfg = self.cfg;
        let convert_expr = |this: &mut Self, st: &mut State, e: &Expr, t: ScalarType| -> Cell {
            let (v, vt) = this.eval(st, e);
            let v = this.convert_at(st, v, vt, t, loc);
            Cell::with(t, v)
        };
        match (self.env.layout(m, ty), init) {
            (Layout::Scalar(t), Some(I::Expr(e))) => Slot::Scalar(convert_expr(self, st, e, t)),
            (Layout::Scalar(t), _) => Slot::Scalar(Cell::uninit(t, cfg)),
            (Layout::Array(t, n), Some(I::List(xs))) => {
                let mut cells = Vec::with_capacity(n as usize);
                for k in 0..n as usize {
                    cells.push(match xs.get(k) {
                        Some(e) => convert_expr(self, st, e, t),
                        None => Cell::with(t, self.constant(super::env::zero_of(t))),
                    });
                }
                if n > super::state::EXACT_ARRAY_LIMIT {
                    let joined = cells
                        .into_iter()
                        .reduce(|a, b| Cell::with(t, join_values(&a.value, &b.value, cfg)))
                        .unwrap_or_else(|| Cell::uninit(t, cfg));
                    Slot::array(n, joined)
                } else {
                    Slot::Array { len: n, cells }
                }
            }
            (Layout::Array(t, n), _) => Slot::array(n, Cell::uninit(t, cfg)),
            (Layout::Struct(fs), Some(I::List(xs))) => Slot::Struct(
                fs.into_iter()
                    .enumerate()
                    .map(|(k, (name, t))| {
                        let c = match xs.get(k) {
                            Some(e) => convert_expr(self, st, e, t),
                            None => Cell::with(t, self.constant(super::env::zero_of(t))),
                        };
                        (name, c)
                    })
                    .collect(),
            ),
            (Layout::Struct(fs), _) => Slot::Struct(
                fs.into_iter()
                    .map(|(n, t)| (n, Cell::uninit(t, cfg)))
                    .collect(),
            ),
            (Layout::Ptr, _) => Slot::Ptr(None),
        }
    }

    /// One loop iteration from `head`: the back-edge state and the exit state.
    fn loop_iter(
        &mut self,
        head: State,
        cond: Option<&Expr>,
        body: &[Stmt],
        step: Option<&Stmt>,
    ) -> (State, State) {
        let depth = head.scope_depth();
        let (t, f) = match cond {
            Some(c) => self.cond(head, c),
            None => {
                let b = head.bottom();
                (head, b)
            }
        };
        self.ctx_mut().breaks.push((depth, None));
        let mut b = self.exec_block(t, body);
        if let Some(s) = step {
            b = self.exec(b, s);
        }
        let (_, brk) = self.ctx_mut().breaks.pop().expect("loop break slot");
        let exit = match brk {
            Some(x) => f.join(&x, self.cfg),
            None => f,
        };
        (b, exit)
    }

    fn exec_loop(
        &mut self,
        st: State,
        cond: Option<&Expr>,
        body: &[Stmt],
        step: Option<&Stmt>,
    ) -> State {
        let cfg = self.cfg;
        let mut head = st;
        let mut exit = head.bottom();
        for _ in 0..cfg.unroll {
            if !head.reachable {
                break;
            }
            let (b, x) = self.loop_iter(head, cond, body, step);
            exit = exit.join(&x, cfg);
            head = b;
        }
        if !head.reachable || self.exhausted {
            return exit;
        }
        let saved = self.checking;
        self.checking = false;
        let entry = head.clone();
        let mut inv = head;
        let mut round = 0;
        loop {
            let (b, _) = self.loop_iter(inv.clone(), cond, body, step);
            let next = inv.join(&b, cfg);
            if next.leq(&inv) || self.exhausted {
                break;
            }
            inv = if round < WIDEN_DELAY {
                next
            } else {
                inv.widen(&next, cfg)
            };
            round += 1;
        }
        let (b, _) = self.loop_iter(inv.clone(), cond, body, step);
        let narrowed = entry.join(&b, cfg);
        if narrowed.leq(&inv) {
            inv = narrowed;
        }
        self.checking = saved;
        let (_, x) = self.loop_iter(inv, cond, body, step);
        exit.join(&x, cfg)
    }

    fn exec_switch(&mut self, mut st: State, scrutinee: &Expr, cases: &[Case]) -> State {
        let cfg = self.cfg;
        let (v, _) = self.eval(&mut st, scrutinee);
        if !st.reachable {
            return st;
        }
        let labels: Vec<i64> = cases
            .iter()
            .flat_map(|c| &c.labels)
            .filter_map(|l| match l {
                CaseLabel::Value(c) => Some(*c),
                CaseLabel::Default => None,
            })
            .collect();
        let has_default = cases
            .iter()
            .flat_map(|c| &c.labels)
            .any(|l| *l == CaseLabel::Default);
        let depth = st.scope_depth();
        st.push_scope();
        self.ctx_mut().breaks.push((depth, None));

        let covered = match v.int_hull().and_then(|h| h.bounds()) {
            None => true,
            Some((lo, hi)) => {
                (hi as i128 - lo as i128) < 4096
                    && (lo..=hi).all(|c| !v.contains(Scalar::Int(c)) || labels.contains(&c))
            }
        };
        let mut rest = st.clone();
        if covered {
            rest.set_bottom();
        } else {
            for _ in 0..2 {
                for &c in &labels {
                    self.refine_expr(&mut rest, scrutinee, |cell| {
                        Some(refine_by_comparison(&cell.value, CmpOp::Ne, Scalar::Int(c)))
                    });
                }
            }
        }

        let mut fall = st.bottom();
        for case in cases {
            let mut entry = st.bottom();
            for l in &case.labels {
                match l {
                    CaseLabel::Value(c) => {
                        if v.contains(Scalar::Int(*c)) {
                            let mut s = st.clone();
                            self.refine_expr(&mut s, scrutinee, |cell| {
                                Some(refine_by_comparison(
                                    &cell.value,
                                    CmpOp::Eq,
                                    Scalar::Int(*c),
                                ))
                            });
                            entry = entry.join(&s, cfg);
                        }
                    }
                    CaseLabel::Default => entry = entry.join(&rest, cfg),
                }
            }
            let mut cur = fall.join(&entry, cfg);
            for s in &case.body {
                cur = self.exec(cur, s);
            }
            fall = cur;
        }
        let (_, brk) = self.ctx_mut().breaks.pop().expect("switch break slot");
        fall.truncate_scopes(depth);
        let mut out = fall;
        if !has_default {
            rest.truncate_scopes(depth);
            out = out.join(&rest, cfg);
        }
        if let Some(b) = brk {
            out = out.join(&b, cfg);
        }
        out
    }

    fn exec_directive(&mut self, mut st: State, d: &Directive, loc: crate::frontend::Loc) -> State {
        let saved = self.in_directive;
        self.in_directive = true;
        let out = match d {
            Directive::ModifyFullRange(p) => {
                self.modify(&mut st, p, loc);
                st
            }
            Directive::Assert(c) => {
                let (t, f) = self.cond(st, c);
                if f.reachable {
                    self.alarm(
                        AlarmClass::ASR,
                        !t.reachable,
                        loc,
                        format!(
                            "assertion `{}` {}",
                            crate::frontend::expr_to_string(c),
                            if t.reachable { "may fail" } else { "fails" }
                        ),
                    );
                }
                t
            }
            Directive::KnownFact(c) => {
                self.silent += 1;
                let (t, _) = self.cond(st, c);
                self.silent -= 1;
                t
            }
            Directive::GlobalAssert(path, c) => {
                let (name, field) = match path.split_once('.') {
                    Some((a, b)) => (a, Some(b.to_string())),
                    None => (path.as_str(), None),
                };
                if let Some(Var::Global(key)) = self.resolve(&st, name) {
                    let module = self.module();
                    let pos = SourcePos {
                        file: self.env.file(module).to_string(),
                        loc,
                    };
                    if !self.watches.iter().any(|w| w.pos == pos) {
                        self.watches.push(Watch {
                            key,
                            field,
                            cond: c.clone(),
                            module,
                            pos,
                        });
                    }
                }
                st
            }
            Directive::Extract(f) => {
                self.extract(&st, f);
                st
            }
        };
        self.in_directive = saved;
        out
    }

    fn modify(&mut self, st: &mut State, p: &Place, loc: crate::frontend::Loc) {
        let cfg = self.cfg;
        let (var, field, range) = match &p.sel {
            Selector::Index(ix) => match self.index_target(st, &p.name, ix, loc) {
                Some((v, lo, hi)) => (v, None, Some((lo, hi))),
                None => {
                    st.set_bottom();
                    return;
                }
            },
            Selector::Field(f) => match self.resolve(st, &p.name) {
                Some(v) => (v, Some(f.clone()), None),
                None => return,
            },
            Selector::None => match self.resolve(st, &p.name) {
                Some(v) => match self.array_of(st, &v) {
                    Some(Some(a)) => (a, None, None),
                    Some(None) => return,
                    None => (v, None, None),
                },
                None => return,
            },
        };
        match (slot_mut(st, &var), &field, range) {
            (Some(Slot::Struct(fs)), Some(f), _) => {
                for (n, c) in fs.iter_mut() {
                    if n == f {
                        *c = Cell::top(c.ty, cfg);
                    }
                }
            }
            (Some(Slot::Array { cells, .. }), None, Some((lo, hi))) if cells.len() > 1 => {
                for c in &mut cells[lo..=hi] {
                    *c = Cell::top(c.ty, cfg);
                }
            }
            (Some(s), None, _) => {
                for c in s.cells_mut() {
                    *c = Cell::top(c.ty, cfg);
                }
            }
            _ => return,
        }
        self.after_write(st, &var, field.as_deref(), loc);
    }

    fn extract(&mut self, st: &State, f: &str) {
        if !self.checking || self.silent > 0 || !st.reachable {
            return;
        }
        let Some(t) = &self.track else {
            return;
        };
        if t.function != f {
            return;
        }
        let cfg = self.cfg;
        let mut values = Vec::new();
        for path in &t.written {
            let (key, field) = match path.split_once('.') {
                Some((k, f)) => (k, Some(f)),
                None => (path.as_str(), None),
            };
            let cells: Vec<&Cell> = match (st.globals.get(key), field) {
                (Some(Slot::Struct(fs)), Some(fname)) => fs
                    .iter()
                    .filter(|(n, _)| n == fname)
                    .map(|(_, c)| c)
                    .collect(),
                (Some(s), None) => s.cells(),
                _ => Vec::new(),
            };
            let v = cells
                .iter()
                .map(|c| c.value.clone())
                .reduce(|a, b| join_values(&a, &b, cfg));
            if let Some(v) = v {
                values.push((path.clone(), v));
            }
        }
        let ret = t.ret.clone();
        let ex = &mut self.extracted;
        ex.observed.insert(f.to_string());
        if let Some(r) = ret {
            let joined = match ex.returns.get(f) {
                Some(old) => join_values(old, &r, cfg),
                None => r,
            };
            ex.returns.insert(f.to_string(), joined);
        }
        let after = ex.globals_after.entry(f.to_string()).or_default();
        for (path, v) in values {
            let joined = match after.get(&path) {
                Some(old) => join_values(old, &v, cfg),
                None => v,
            };
            after.insert(path, joined);
        }
    }
}
