//! Pretty-printer producing source the parser accepts.

use std::fmt::Write;

use super::ast::*;
use super::contract::{Contract, ContractSet};

fn prec(e: &Expr) -> u8 {
    use crate::domains::{BinOp::*, CmpOp::*};
    match &e.kind {
        ExprKind::Or(..) => 1,
        ExprKind::And(..) => 2,
        ExprKind::Cmp(Eq | Ne, ..) => 3,
        ExprKind::Cmp(..) => 4,
        ExprKind::Binary(Shl | Shr, ..) => 5,
        ExprKind::Binary(Add | Sub, ..) => 6,
        ExprKind::Binary(Mul | Div | Rem, ..) => 7,
        ExprKind::Unary(..) | ExprKind::Cast(..) => 8,
        _ => 9,
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_operand(out: &mut String, e: &Expr, min: u8) {
    if prec(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    let p = prec(e);
    let infix = |out: &mut String, a: &Expr, op: &str, b: &Expr| {
        write_operand(out, a, p);
        let _ = write!(out, " {op} ");
        write_operand(out, b, p + 1);
    };
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Float(v) => {
            let _ = write!(out, "{v:?}");
        }
        ExprKind::Place(pl) => write_place(out, pl),
        ExprKind::Unary(op, x) => {
            out.push(if *op == UnOp::Neg { '-' } else { '!' });
            // parenthesize nested prefix operators so `- -x` never lexes as `--`
            let min = if matches!(x.kind, ExprKind::Unary(..)) {
                10
            } else {
                8
            };
            write_operand(out, x, min);
        }
        ExprKind::Cast(ty, x) => {
            let _ = write!(out, "({})", scalar_name(ty));
            write_operand(out, x, 8);
        }
        ExprKind::Binary(op, a, b) => infix(out, a, op.symbol(), b),
        ExprKind::Cmp(op, a, b) => infix(out, a, op.symbol(), b),
        ExprKind::And(a, b) => infix(out, a, "&&", b),
        ExprKind::Or(a, b) => infix(out, a, "||", b),
        ExprKind::Call(f, args) => {
            let _ = write!(out, "{f}(");
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
        ExprKind::Null => out.push_str("NULL"),
        ExprKind::Return => out.push_str("return"),
        ExprKind::Length(p) => {
            let _ = write!(out, "length({p})");
        }
    }
}

fn write_place(out: &mut String, p: &Place) {
    out.push_str(&p.name);
    match &p.sel {
        Selector::None => {}
        Selector::Index(i) => {
            out.push('[');
            write_expr(out, i);
            out.push(']');
        }
        Selector::Field(f) => {
            out.push('.');
            out.push_str(f);
        }
    }
}

/// Type name as written in a cast; enum and struct names print bare, which
/// needs a typedef or an `enum`/`struct` keyword depending on the module.
fn scalar_name(ty: &Type) -> String {
    match ty {
        Type::Enum(n) => format!("enum {n}"),
        other => type_to_string(other),
    }
}

/// Spelling of a type without array or pointer declarators.
pub fn type_to_string(ty: &Type) -> String {
    match ty {
        Type::Void => "void".into(),
        Type::Int => "int".into(),
        Type::UChar => "uint8".into(),
        Type::Float => "float".into(),
        Type::Enum(n) | Type::Struct(n) => n.clone(),
        Type::Array(e, _) => type_to_string(e),
        Type::Ptr { elem, .. } => type_to_string(elem),
    }
}

struct Printer<'m> {
    m: &'m Module,
    out: String,
}

impl Printer<'_> {
    fn type_name(&self, ty: &Type) -> String {
        match ty {
            Type::Enum(n) => match self.m.enum_def(n) {
                Some(d) if d.typedef => n.clone(),
                _ => format!("enum {n}"),
            },
            Type::Struct(n) => match self.m.struct_def(n) {
                Some(d) if d.typedef => n.clone(),
                _ => format!("struct {n}"),
            },
            Type::Array(e, _) | Type::Ptr { elem: e, .. } => self.type_name(e),
            other => type_to_string(other),
        }
    }

    fn decl(&self, ty: &Type, name: &str) -> String {
        match ty {
            Type::Array(e, n) => format!("{} {name}[{n}]", self.type_name(e)),
            Type::Ptr { elem, is_const } => {
                format!(
                    "{}{} *{name}",
                    if *is_const { "const " } else { "" },
                    self.type_name(elem)
                )
            }
            t => format!("{} {name}", self.type_name(t)),
        }
    }

    fn contracts(&mut self, cs: &[Contract], indent: &str) {
        for c in cs {
            let _ = writeln!(self.out, "{indent}/// {}", c.annotation());
        }
    }

    fn sig(&self, s: &FunctionSig) -> String {
        let params = if s.params.is_empty() {
            "void".to_string()
        } else {
            s.params
                .iter()
                .map(|p| self.decl(&p.ty, &p.name))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "{}{} {}({params})",
            if s.is_static { "static " } else { "" },
            self.type_name(&s.ret),
            s.name
        )
    }

    fn expr(&self, e: &Expr) -> String {
        // casts to enum types use the module's spelling
        let mut s = expr_to_string(e);
        for d in &self.m.enums {
            if d.typedef {
                s = s.replace(&format!("(enum {})", d.name), &format!("({})", d.name));
            }
        }
        s
    }

    fn init(&self, i: &Init) -> String {
        match i {
            Init::Expr(e) => self.expr(e),
            Init::List(xs) => format!(
                "{{{}}}",
                xs.iter()
                    .map(|e| self.expr(e))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    }

    fn simple(&self, s: &Stmt) -> String {
        match &s.kind {
            StmtKind::Decl { name, ty, init } => {
                let mut d = self.decl(ty, name);
                if let Some(i) = init {
                    d = format!("{d} = {}", self.init(i));
                }
                d
            }
            StmtKind::Assign { target, value } => {
                format!(
                    "{} = {}",
                    self.expr(&Expr::place(Loc::default(), target.clone())),
                    self.expr(value)
                )
            }
            StmtKind::Expr(e) => self.expr(e),
            _ => unreachable!("not a simple statement"),
        }
    }

    fn block(&mut self, body: &[Stmt], depth: usize) {
        for s in body {
            self.stmt(s, depth);
        }
    }

    fn stmt(&mut self, s: &Stmt, depth: usize) {
        let pad = "  ".repeat(depth);
        match &s.kind {
            StmtKind::Decl { .. } | StmtKind::Assign { .. } | StmtKind::Expr(_) => {
                let line = self.simple(s);
                let _ = writeln!(self.out, "{pad}{line};");
            }
            StmtKind::If { cond, then, els } => {
                let _ = writeln!(self.out, "{pad}if ({}) {{", self.expr(cond));
                self.block(then, depth + 1);
                if let Some(e) = els {
                    let _ = writeln!(self.out, "{pad}}} else {{");
                    self.block(e, depth + 1);
                }
                let _ = writeln!(self.out, "{pad}}}");
            }
            StmtKind::While { cond, body } => {
                let _ = writeln!(self.out, "{pad}while ({}) {{", self.expr(cond));
                self.block(body, depth + 1);
                let _ = writeln!(self.out, "{pad}}}");
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                let i = init.as_ref().map(|s| self.simple(s)).unwrap_or_default();
                let c = cond.as_ref().map(|e| self.expr(e)).unwrap_or_default();
                let st = step.as_ref().map(|s| self.simple(s)).unwrap_or_default();
                let _ = writeln!(self.out, "{pad}for ({i}; {c}; {st}) {{");
                self.block(body, depth + 1);
                let _ = writeln!(self.out, "{pad}}}");
            }
            StmtKind::Switch { scrutinee, cases } => {
                let _ = writeln!(self.out, "{pad}switch ({}) {{", self.expr(scrutinee));
                for c in cases {
                    let labels: Vec<String> = c
                        .labels
                        .iter()
                        .map(|l| match l {
                            CaseLabel::Value(v) => format!("case {v}:"),
                            CaseLabel::Default => "default:".to_string(),
                        })
                        .collect();
                    let _ = writeln!(self.out, "{pad}{}", labels.join(" "));
                    self.block(&c.body, depth + 1);
                }
                let _ = writeln!(self.out, "{pad}}}");
            }
            StmtKind::Break => {
                let _ = writeln!(self.out, "{pad}break;");
            }
            StmtKind::Return(None) => {
                let _ = writeln!(self.out, "{pad}return;");
            }
            StmtKind::Return(Some(e)) => {
                let _ = writeln!(self.out, "{pad}return {};", self.expr(e));
            }
            StmtKind::Block(body) => {
                let _ = writeln!(self.out, "{pad}{{");
                self.block(body, depth + 1);
                let _ = writeln!(self.out, "{pad}}}");
            }
            StmtKind::Directive(d) => {
                let text = match d {
                    Directive::ModifyFullRange(p) => {
                        let mut t = String::new();
                        write_place(&mut t, p);
                        format!("__modify_full_range({t})")
                    }
                    Directive::Assert(e) => format!("__assert({})", self.expr(e)),
                    Directive::KnownFact(e) => format!("__known_fact({})", self.expr(e)),
                    Directive::GlobalAssert(v, e) => {
                        format!("__global_assert({v}, {})", self.expr(e))
                    }
                    Directive::Extract(f) => format!("__extract({f})"),
                };
                let _ = writeln!(self.out, "{pad}{text};");
            }
        }
    }

    fn module(&mut self) {
        let m = self.m;
        for e in &m.enums {
            let body = e
                .variants
                .iter()
                .map(|(n, v)| format!("{n} = {v}"))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = if e.typedef {
                writeln!(self.out, "typedef enum {{ {body} }} {};", e.name)
            } else {
                writeln!(self.out, "enum {} {{ {body} }};", e.name)
            };
        }
        for s in &m.structs {
            let _ = if s.typedef {
                writeln!(self.out, "typedef struct {{")
            } else {
                writeln!(self.out, "struct {} {{", s.name)
            };
            for f in &s.fields {
                self.contracts(
                    m.contracts.for_variable(&format!("{}.{}", s.name, f.name)),
                    "  ",
                );
                let _ = writeln!(self.out, "  {};", self.decl(&f.ty, &f.name));
            }
            let _ = if s.typedef {
                writeln!(self.out, "}} {};", s.name)
            } else {
                writeln!(self.out, "}};")
            };
        }
        for g in &m.globals {
            self.contracts(m.contracts.for_variable(&g.name), "");
            let storage = match g.storage {
                Storage::Public => "",
                Storage::Static => "static ",
                Storage::Extern => "extern ",
            };
            let mut line = format!(
                "{storage}{}{}",
                if g.is_const { "const " } else { "" },
                self.decl(&g.ty, &g.name)
            );
            if let Some(i) = &g.init {
                line = format!("{line} = {}", self.init(i));
            }
            let _ = writeln!(self.out, "{line};");
        }
        for sig in &m.externals {
            self.contracts(m.contracts.for_function(&sig.name), "");
            let _ = writeln!(self.out, "{};", self.sig(sig));
        }
        for f in &m.functions {
            self.contracts(m.contracts.for_function(&f.sig.name), "");
            let _ = writeln!(self.out, "{} {{", self.sig(&f.sig));
            self.block(&f.body, 1);
            let _ = writeln!(self.out, "}}");
        }
    }
}

/// Prints a module as Mini-C source. Reparsing the output gives the same
/// AST up to source locations.
pub fn print_module(m: &Module) -> String {
    let mut p = Printer {
        m,
        out: String::new(),
    };
    p.module();
    p.out
}

/// Prints contracts in `.contracts` form: annotation lines followed by the
/// subject they belong to.
pub fn contracts_to_string(cs: &ContractSet) -> String {
    let mut out = String::new();
    for (subject, list) in cs.functions.iter().chain(cs.variables.iter()) {
        if list.is_empty() {
            continue;
        }
        for c in list {
            let _ = writeln!(out, "/// {}", c.annotation());
        }
        let _ = writeln!(out, "{subject};");
    }
    out
}
