//! Name and shape checks run after parsing and after project resolution.

use std::collections::BTreeMap;

use super::ast::*;
use super::contract::{Contract, ContractKind};
use super::FrontendError;

fn err(m: &Module, loc: Loc, message: impl Into<String>) -> FrontendError {
    FrontendError::Resolve {
        file: m.file.clone(),
        loc,
        message: message.into(),
    }
}

/// Checks that a contract only mentions names its subject can see. Function
/// contracts see parameters, globals and constants of `m`; variable
/// invariants see globals and constants; field invariants see the struct's
/// fields and constants.
pub fn check_contract(m: &Module, c: &Contract) -> Result<(), FrontendError> {
    let Some(cond) = c.cond() else {
        if m.signature(&c.subject).is_none() {
            return Err(err(m, c.loc, format!("unknown function `{}`", c.subject)));
        }
        return Ok(());
    };
    let visible: Box<dyn Fn(&str) -> bool> = if c.kind == ContractKind::Invariant {
        match c.subject.split_once('.') {
            Some((s, f)) => {
                let Some(sd) = m.struct_def(s) else {
                    return Err(err(m, c.loc, format!("unknown struct `{s}`")));
                };
                if sd.field(f).is_none() {
                    return Err(err(m, c.loc, format!("struct `{s}` has no field `{f}`")));
                }
                Box::new(move |n: &str| sd.field(n).is_some() || m.constant(n).is_some())
            }
            None => {
                if m.global(&c.subject).is_none() {
                    return Err(err(m, c.loc, format!("unknown variable `{}`", c.subject)));
                }
                Box::new(|n: &str| m.global(n).is_some() || m.constant(n).is_some())
            }
        }
    } else {
        let Some(sig) = m.signature(&c.subject) else {
            return Err(err(m, c.loc, format!("unknown function `{}`", c.subject)));
        };
        if c.kind == ContractKind::Ensures && sig.ret == Type::Void {
            let mut uses_return = false;
            cond.visit(&mut |e| uses_return |= matches!(e.kind, ExprKind::Return));
            if uses_return {
                return Err(err(m, c.loc, format!("`{}` returns void", sig.name)));
            }
        }
        Box::new(move |n: &str| {
            sig.param(n).is_some() || m.global(n).is_some() || m.constant(n).is_some()
        })
    };
    let mut bad = None;
    cond.visit(&mut |e| {
        if let ExprKind::Place(p) = &e.kind {
            if bad.is_none() && !visible(&p.name) {
                bad = Some((e.loc, p.name.clone()));
            }
        }
        if let ExprKind::Length(p) = &e.kind {
            let ok = m
                .signature(&c.subject)
                .and_then(|s| s.param(p))
                .is_some_and(|q| matches!(q.ty, Type::Ptr { .. }));
            if bad.is_none() && !ok {
                bad = Some((e.loc, format!("length({p})")));
            }
        }
    });
    match bad {
        Some((loc, name)) => Err(err(
            m,
            loc,
            format!("contract on `{}` refers to unknown `{name}`", c.subject),
        )),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Scalar,
    Array,
    Pointer { is_const: bool },
    Struct,
}

fn kind_of(ty: &Type) -> Kind {
    match ty {
        Type::Array(..) => Kind::Array,
        Type::Ptr { is_const, .. } => Kind::Pointer {
            is_const: *is_const,
        },
        Type::Struct(_) => Kind::Struct,
        _ => Kind::Scalar,
    }
}

struct Checker<'m> {
    m: &'m Module,
    scopes: Vec<BTreeMap<String, Type>>,
    ret: Type,
    loops: usize,
    switches: usize,
    /// Directive conditions may name whole arrays, meaning every element.
    in_directive: std::cell::Cell<bool>,
}

impl<'m> Checker<'m> {
    fn lookup(&self, name: &str) -> Option<Type> {
        for s in self.scopes.iter().rev() {
            if let Some(t) = s.get(name) {
                return Some(t.clone());
            }
        }
        if let Some(g) = self.m.global(name) {
            return Some(g.ty.clone());
        }
        match self.m.constant(name) {
            Some(ConstValue::Int(_)) => Some(Type::Int),
            Some(ConstValue::Float(_)) => Some(Type::Float),
            None => None,
        }
    }

    fn place(&self, p: &Place, loc: Loc, write: bool) -> Result<Type, FrontendError> {
        let Some(ty) = self.lookup(&p.name) else {
            return Err(err(self.m, loc, format!("unknown variable `{}`", p.name)));
        };
        if write && self.scopes.iter().all(|s| !s.contains_key(&p.name)) {
            let is_const = self.m.global(&p.name).is_none_or(|g| g.is_const);
            if is_const {
                return Err(err(
                    self.m,
                    loc,
                    format!("cannot assign to constant `{}`", p.name),
                ));
            }
        }
        match (&p.sel, kind_of(&ty)) {
            (Selector::None, _) => Ok(ty),
            (Selector::Index(i), Kind::Array | Kind::Pointer { .. }) => {
                if let (true, Kind::Pointer { is_const: true }) = (write, kind_of(&ty)) {
                    return Err(err(
                        self.m,
                        loc,
                        format!("cannot write through const pointer `{}`", p.name),
                    ));
                }
                self.integer(i)?;
                Ok(ty.element().cloned().unwrap_or(Type::Int))
            }
            (Selector::Field(f), Kind::Struct) => {
                let Type::Struct(s) = &ty else { unreachable!() };
                match self.m.struct_def(s).and_then(|d| d.field(f)) {
                    Some(field) => Ok(field.ty.clone()),
                    None => Err(err(self.m, loc, format!("struct `{s}` has no field `{f}`"))),
                }
            }
            (Selector::Index(_), _) => {
                Err(err(self.m, loc, format!("`{}` is not an array", p.name)))
            }
            (Selector::Field(_), _) => {
                Err(err(self.m, loc, format!("`{}` is not a struct", p.name)))
            }
        }
    }

    /// Checks an expression used as a scalar value and returns its type:
    /// `Int`, `UChar`, `Float` or an enum.
    fn scalar(&self, e: &Expr) -> Result<Type, FrontendError> {
        match &e.kind {
            ExprKind::Int(_) => Ok(Type::Int),
            ExprKind::Float(_) => Ok(Type::Float),
            ExprKind::Place(p) => {
                let ty = self.place(p, e.loc, false)?;
                if ty.is_scalar() {
                    Ok(ty)
                } else if let (true, Type::Array(elem, _) | Type::Ptr { elem, .. }) =
                    (self.in_directive.get(), &ty)
                {
                    Ok((**elem).clone())
                } else {
                    Err(err(self.m, e.loc, format!("`{}` is not a scalar", p.name)))
                }
            }
            ExprKind::Unary(UnOp::Neg, x) => Ok(if self.scalar(x)? == Type::Float {
                Type::Float
            } else {
                Type::Int
            }),
            ExprKind::Unary(UnOp::Not, x) => self.scalar(x).map(|_| Type::Int),
            ExprKind::Cast(ty, x) => self.scalar(x).map(|_| ty.clone()),
            ExprKind::Binary(op, a, b) => {
                let (ta, tb) = (self.scalar(a)?, self.scalar(b)?);
                if matches!(
                    op,
                    crate::domains::BinOp::Rem
                        | crate::domains::BinOp::Shl
                        | crate::domains::BinOp::Shr
                ) && (ta == Type::Float || tb == Type::Float)
                {
                    return Err(err(
                        self.m,
                        e.loc,
                        format!("`{}` needs integer operands", op.symbol()),
                    ));
                }
                Ok(arith_type(&ta, &tb))
            }
            ExprKind::Cmp(_, a, b) | ExprKind::And(a, b) | ExprKind::Or(a, b) => {
                self.scalar(a)?;
                self.scalar(b)?;
                Ok(Type::Int)
            }
            ExprKind::Call(f, args) => {
                let ret = self.call(f, args, e.loc)?;
                if ret == Type::Void {
                    return Err(err(self.m, e.loc, format!("`{f}` returns void")));
                }
                Ok(ret)
            }
            ExprKind::Null => Err(err(
                self.m,
                e.loc,
                "NULL is only allowed as a pointer argument",
            )),
            ExprKind::Return | ExprKind::Length(_) => {
                Err(err(self.m, e.loc, "contract term outside a contract"))
            }
        }
    }

    fn directive_cond(&self, e: &Expr) -> Result<(), FrontendError> {
        self.in_directive.set(true);
        let r = self.scalar(e).map(|_| ());
        self.in_directive.set(false);
        r
    }

    fn integer(&self, e: &Expr) -> Result<(), FrontendError> {
        if self.scalar(e)? == Type::Float {
            return Err(err(self.m, e.loc, "expected an integer expression"));
        }
        Ok(())
    }

    fn call(&self, f: &str, args: &[Expr], loc: Loc) -> Result<Type, FrontendError> {
        let Some(sig) = self.m.signature(f) else {
            return Err(err(
                self.m,
                loc,
                format!("call to undeclared function `{f}`"),
            ));
        };
        if sig.params.len() != args.len() {
            return Err(err(
                self.m,
                loc,
                format!(
                    "`{f}` takes {} arguments, {} given",
                    sig.params.len(),
                    args.len()
                ),
            ));
        }
        for (p, a) in sig.params.iter().zip(args) {
            match &p.ty {
                Type::Ptr { elem, is_const } => match &a.kind {
                    ExprKind::Null => {}
                    ExprKind::Place(pl) if pl.sel == Selector::None => {
                        let ty = self.place(pl, a.loc, false)?;
                        let ok = match &ty {
                            Type::Array(e, _) => e == elem,
                            Type::Ptr {
                                elem: e,
                                is_const: c,
                            } => e == elem && (*is_const || !c),
                            _ => false,
                        };
                        if !ok {
                            return Err(err(
                                self.m,
                                a.loc,
                                format!("argument for `{}` must be an array", p.name),
                            ));
                        }
                    }
                    _ => {
                        return Err(err(
                            self.m,
                            a.loc,
                            format!("argument for `{}` must be an array", p.name),
                        ))
                    }
                },
                _ => {
                    self.scalar(a)?;
                }
            }
        }
        Ok(sig.ret.clone())
    }

    fn declare(&mut self, name: &str, ty: Type, loc: Loc) -> Result<(), FrontendError> {
        let top = self.scopes.last_mut().expect("scope");
        if top.contains_key(name) {
            return Err(err(
                self.m,
                loc,
                format!("`{name}` is declared twice in the same scope"),
            ));
        }
        top.insert(name.to_string(), ty);
        Ok(())
    }

    fn block(&mut self, body: &[Stmt]) -> Result<(), FrontendError> {
        self.scopes.push(BTreeMap::new());
        let r = body.iter().try_for_each(|s| self.stmt(s));
        self.scopes.pop();
        r
    }

    fn init(&self, ty: &Type, init: &Init, loc: Loc) -> Result<(), FrontendError> {
        match (ty, init) {
            (t, Init::Expr(e)) if t.is_scalar() => self.scalar(e).map(|_| ()),
            (Type::Array(_, n), Init::List(xs)) => {
                if xs.len() > *n as usize {
                    return Err(err(self.m, loc, "too many initializers"));
                }
                xs.iter().try_for_each(|x| self.scalar(x).map(|_| ()))
            }
            (Type::Struct(s), Init::List(xs)) => {
                let n = self.m.struct_def(s).map_or(0, |d| d.fields.len());
                if xs.len() > n {
                    return Err(err(self.m, loc, "too many initializers"));
                }
                xs.iter().try_for_each(|x| self.scalar(x).map(|_| ()))
            }
            _ => Err(err(
                self.m,
                loc,
                "initializer does not match the declared type",
            )),
        }
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), FrontendError> {
        match &s.kind {
            StmtKind::Decl { name, ty, init } => {
                if let Some(i) = init {
                    self.init(ty, i, s.loc)?;
                }
                self.declare(name, ty.clone(), s.loc)
            }
            StmtKind::Assign { target, value } => {
                let ty = self.place(target, s.loc, true)?;
                if !ty.is_scalar() {
                    return Err(err(self.m, s.loc, "only scalars can be assigned"));
                }
                self.scalar(value).map(|_| ())
            }
            StmtKind::Expr(e) => match &e.kind {
                ExprKind::Call(f, args) => self.call(f, args, e.loc).map(|_| ()),
                _ => self.scalar(e).map(|_| ()),
            },
            StmtKind::If { cond, then, els } => {
                self.scalar(cond)?;
                self.block(then)?;
                els.as_ref().map_or(Ok(()), |e| self.block(e))
            }
            StmtKind::While { cond, body } => {
                self.scalar(cond)?;
                self.loops += 1;
                let r = self.block(body);
                self.loops -= 1;
                r
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                self.scopes.push(BTreeMap::new());
                let r = (|| {
                    if let Some(i) = init {
                        self.stmt(i)?;
                    }
                    if let Some(c) = cond {
                        self.scalar(c)?;
                    }
                    if let Some(st) = step {
                        self.stmt(st)?;
                    }
                    self.loops += 1;
                    let r = self.block(body);
                    self.loops -= 1;
                    r
                })();
                self.scopes.pop();
                r
            }
            StmtKind::Switch { scrutinee, cases } => {
                self.integer(scrutinee)?;
                let mut seen = Vec::new();
                for c in cases {
                    for l in &c.labels {
                        if seen.contains(l) {
                            return Err(err(self.m, c.loc, "duplicate case label"));
                        }
                        seen.push(l.clone());
                    }
                }
                if let Some(d) = cases
                    .iter()
                    .flat_map(|c| &c.body)
                    .find(|st| matches!(st.kind, StmtKind::Decl { .. }))
                {
                    return Err(err(
                        self.m,
                        d.loc,
                        "declarations in a case body need their own block",
                    ));
                }
                self.switches += 1;
                self.scopes.push(BTreeMap::new());
                let r = cases
                    .iter()
                    .flat_map(|c| &c.body)
                    .try_for_each(|st| self.stmt(st));
                self.scopes.pop();
                self.switches -= 1;
                r
            }
            StmtKind::Break => {
                if self.loops + self.switches == 0 {
                    return Err(err(self.m, s.loc, "`break` outside a loop or switch"));
                }
                Ok(())
            }
            StmtKind::Return(e) => match (e, &self.ret) {
                (None, Type::Void) => Ok(()),
                (Some(e), Type::Void) => Err(err(self.m, e.loc, "void function returns a value")),
                (None, _) => Err(err(self.m, s.loc, "missing return value")),
                (Some(e), _) => self.scalar(e).map(|_| ()),
            },
            StmtKind::Block(b) => self.block(b),
            StmtKind::Directive(d) => match d {
                Directive::ModifyFullRange(p) => {
                    let ty = self.place(p, s.loc, false)?;
                    if ty.is_scalar()
                        || matches!(ty, Type::Array(..) | Type::Ptr { .. } | Type::Struct(_))
                    {
                        Ok(())
                    } else {
                        Err(err(self.m, s.loc, "cannot modify this variable"))
                    }
                }
                Directive::Assert(e) | Directive::KnownFact(e) => self.directive_cond(e),
                Directive::GlobalAssert(path, e) => {
                    let (name, field) = match path.split_once('.') {
                        Some((a, b)) => (a, Some(b)),
                        None => (path.as_str(), None),
                    };
                    let place = Place {
                        name: name.to_string(),
                        sel: field.map_or(Selector::None, |f| Selector::Field(f.to_string())),
                    };
                    self.place(&place, s.loc, false)?;
                    self.directive_cond(e)
                }
                Directive::Extract(f) => {
                    if self.m.signature(f).is_none() {
                        return Err(err(self.m, s.loc, format!("unknown function `{f}`")));
                    }
                    Ok(())
                }
            },
        }
    }
}

/// Result type of arithmetic on `a` and `b`: float beats int beats
/// unsigned char; enums act as int.
pub fn arith_type(a: &Type, b: &Type) -> Type {
    match (a, b) {
        (Type::Float, _) | (_, Type::Float) => Type::Float,
        (Type::UChar, Type::UChar) => Type::UChar,
        _ => Type::Int,
    }
}

/// Checks names, arity and assignability in every function body and
/// initializer of `m`. All callees must be declared in `m`.
pub fn check_module(m: &Module) -> Result<(), FrontendError> {
    let empty = Checker {
        m,
        scopes: vec![BTreeMap::new()],
        ret: Type::Void,
        loops: 0,
        switches: 0,
        in_directive: Default::default(),
    };
    for g in &m.globals {
        if let Some(i) = &g.init {
            empty.init(&g.ty, i, g.loc)?;
            let mut has_call = false;
            match i {
                Init::Expr(e) => has_call |= e.contains_call(),
                Init::List(xs) => has_call |= xs.iter().any(Expr::contains_call),
            }
            if has_call {
                return Err(err(m, g.loc, "global initializers cannot call functions"));
            }
            let constant = |e: &Expr| const_eval(e, &|n| m.constant(n)).is_some();
            let all_const = match i {
                Init::Expr(e) => constant(e),
                Init::List(xs) => xs.iter().all(constant),
            };
            if !all_const {
                return Err(err(m, g.loc, "global initializers must be constant"));
            }
        }
    }
    for f in &m.functions {
        let mut c = Checker {
            m,
            scopes: vec![f
                .sig
                .params
                .iter()
                .map(|p| (p.name.clone(), p.ty.clone()))
                .collect()],
            ret: f.sig.ret.clone(),
            loops: 0,
            switches: 0,
            in_directive: Default::default(),
        };
        c.block(&f.body)?;
    }
    for ct in m.contracts.iter() {
        check_contract(m, ct)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_module;

    fn check(src: &str) -> Result<(), FrontendError> {
        check_module(&parse_module(src, "t.mc").unwrap())
    }

    #[test]
    fn accepts_well_formed_code() {
        check("int a[4];\nint f(const int *p, int n) { int i = 0; while (i < n) { a[i] = p[i]; i++; } return a[0]; }\nint g(void) { return f(a, 4) + f(NULL, 0); }").unwrap();
    }

    #[test]
    fn rejects_bad_references() {
        assert!(check("int f(void) { return y; }").is_err());
        assert!(check("int f(void) { return h(); }").is_err());
        assert!(check("const int N = 3; void f(void) { N = 2; }").is_err());
        assert!(check("void f(const int *p) { p[0] = 1; }").is_err());
        assert!(check("int a[2]; void f(void) { a = 1; }").is_err());
        assert!(check("void f(void) { break; }").is_err());
        assert!(check("int f(int x) { return; }").is_err());
        assert!(check("int g(int x); int f(void) { return g(1, 2); }").is_err());
        assert!(check("void f(int x) { switch (x) { case 1: int y = 2; break; } }").is_err());
        assert!(check("void f(int x) { switch (x) { case 1: { int y = 2; } break; } }").is_ok());
    }

    #[test]
    fn contracts_must_name_visible_symbols() {
        assert!(check("/// [[ requires: z > 0 ]]\nint f(int x);").is_err());
        assert!(check("/// [[ requires: x > 0 ]]\nint f(int x);").is_ok());
        assert!(
            check("const int N = 2;\nstruct S {\n/// [[ invariant: Id <= N ]]\nint Id; };").is_ok()
        );
    }
}
