//! Value-range constraints from XML interface descriptions.
//!
//! The accepted dialect:
//!
//! ```xml
//! <INTERFACE>
//!   <DATA-CONSTR>
//!     <SHORT-NAME>RangeX</SHORT-NAME>
//!     <PHYS-CONSTRS>
//!       <LOWER-LIMIT INTERVAL-TYPE="CLOSED">0.0</LOWER-LIMIT>
//!       <UPPER-LIMIT INTERVAL-TYPE="CLOSED">32000.0</UPPER-LIMIT>
//!     </PHYS-CONSTRS>
//!     <BINDING ROLE="PARAMETER" SYMBOL="f.x"/>
//!   </DATA-CONSTR>
//!   <ARRAY-TYPE>
//!     <SHORT-NAME>Buf8</SHORT-NAME>
//!     <MAX-NUMBER-OF-ELEMENTS>8</MAX-NUMBER-OF-ELEMENTS>
//!     <BINDING ROLE="PARAMETER" SYMBOL="f.buf"/>
//!   </ARRAY-TYPE>
//!   <BINDING CONSTR="RangeX" ROLE="GLOBAL" SYMBOL="speed"/>
//! </INTERFACE>
//! ```
//!
//! Unknown elements are ignored. Bindings outside a constraint name it with
//! `CONSTR`. Roles are `PARAMETER` (`function.param`), `RETURN` (`function`)
//! and `GLOBAL` (`var`, `var.field` or `Struct.field`).

use std::fmt::{self, Write as _};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::frontend::{
    parse_condition, Contract, ContractBody, ContractKind, ContractSet, FunctionSig, Loc, Origin,
    Program, Type,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IfaceError {
    #[error("malformed XML at byte {pos}: {message}")]
    Xml { pos: usize, message: String },
    #[error("`{context}`: missing <{element}>")]
    Missing { context: String, element: String },
    #[error("constraint `{constraint}`: {message}")]
    MalformedLimit { constraint: String, message: String },
    #[error("binding refers to unknown constraint `{0}`")]
    DanglingReference(String),
    #[error("constraint `{constraint}`: bad binding: {message}")]
    BadBinding { constraint: String, message: String },
    #[error("constraint `{constraint}`: unknown symbol `{symbol}`")]
    UnknownSymbol { constraint: String, symbol: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalType {
    Closed,
    Open,
    Infinite,
}

impl IntervalType {
    fn parse(s: &str) -> Option<IntervalType> {
        match s {
            "CLOSED" => Some(IntervalType::Closed),
            "OPEN" => Some(IntervalType::Open),
            "INFINITE" => Some(IntervalType::Infinite),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IntervalType::Closed => "CLOSED",
            IntervalType::Open => "OPEN",
            IntervalType::Infinite => "INFINITE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Limit {
    /// The limit as written, trimmed.
    pub text: String,
    pub value: f64,
    pub kind: IntervalType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Parameter,
    Return,
    Global,
}

impl Role {
    fn parse(s: &str) -> Option<Role> {
        match s {
            "PARAMETER" => Some(Role::Parameter),
            "RETURN" => Some(Role::Return),
            "GLOBAL" => Some(Role::Global),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Parameter => "PARAMETER",
            Role::Return => "RETURN",
            Role::Global => "GLOBAL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub role: Role,
    pub symbol: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeConstraint {
    pub name: String,
    pub lower: Option<Limit>,
    pub upper: Option<Limit>,
    pub bindings: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConstraint {
    pub name: String,
    pub length: u32,
    pub bindings: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InterfaceSpec {
    pub ranges: Vec<RangeConstraint>,
    pub arrays: Vec<ArrayConstraint>,
}

/// Contracts from an interface plus notes about constraints that produced
/// nothing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Import {
    pub contracts: ContractSet,
    pub warnings: Vec<String>,
}

#[derive(Debug, Default)]
struct Node {
    name: String,
    attrs: Vec<(String, String)>,
    text: String,
    children: Vec<Node>,
}

impl Node {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn child(&self, name: &str) -> Option<&Node> {
        self.children.iter().find(|c| c.name == name)
    }

    fn descendants<'a>(&'a self, name: &str, out: &mut Vec<&'a Node>) {
        for c in &self.children {
            if c.name == name {
                out.push(c);
            } else {
                c.descendants(name, out);
            }
        }
    }
}

fn xml_err(pos: usize, e: impl fmt::Display) -> IfaceError {
    IfaceError::Xml {
        pos,
        message: e.to_string(),
    }
}

fn open_node(e: &BytesStart, pos: usize) -> Result<Node, IfaceError> {
    let mut node = Node {
        name: String::from_utf8_lossy(e.name().as_ref()).into_owned(),
        ..Node::default()
    };
    for a in e.attributes() {
        let a = a.map_err(|x| xml_err(pos, x))?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a
            .unescape_value()
            .map_err(|x| xml_err(pos, x))?
            .into_owned();
        node.attrs.push((key, value));
    }
    Ok(node)
}

fn parse_tree(xml: &str) -> Result<Node, IfaceError> {
    let mut reader = Reader::from_str(xml);
    reader.trim_text(true);
    let mut stack = vec![Node::default()];
    loop {
        let pos = reader.buffer_position();
        match reader.read_event().map_err(|e| xml_err(pos, e))? {
            Event::Start(e) => stack.push(open_node(&e, pos)?),
            Event::Empty(e) => {
                let node = open_node(&e, pos)?;
                stack.last_mut().unwrap().children.push(node);
            }
            Event::End(_) => {
                let node = stack.pop().unwrap();
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => return Err(xml_err(pos, "unbalanced end tag")),
                }
            }
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| xml_err(pos, e))?;
                stack.last_mut().unwrap().text.push_str(&text);
            }
            Event::CData(t) => {
                stack
                    .last_mut()
                    .unwrap()
                    .text
                    .push_str(&String::from_utf8_lossy(&t));
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if stack.len() != 1 {
        return Err(xml_err(
            xml.len(),
            format!("unclosed <{}>", stack.last().unwrap().name),
        ));
    }
    Ok(stack.pop().unwrap())
}

fn short_name(n: &Node) -> Result<String, IfaceError> {
    n.child("SHORT-NAME")
        .map(|s| s.text.trim().to_string())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| IfaceError::Missing {
            context: n.name.clone(),
            element: "SHORT-NAME".into(),
        })
}

fn binding(n: &Node, constraint: &str) -> Result<Binding, IfaceError> {
    let bad = |message: String| IfaceError::BadBinding {
        constraint: constraint.to_string(),
        message,
    };
    let role = n.attr("ROLE").ok_or_else(|| bad("missing ROLE".into()))?;
    let role = Role::parse(role).ok_or_else(|| bad(format!("unknown ROLE `{role}`")))?;
    let symbol = n
        .attr("SYMBOL")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| bad("missing SYMBOL".into()))?;
    Ok(Binding {
        role,
        symbol: symbol.to_string(),
    })
}

fn bindings(n: &Node, constraint: &str) -> Result<Vec<Binding>, IfaceError> {
    let mut found = Vec::new();
    n.descendants("BINDING", &mut found);
    found.into_iter().map(|b| binding(b, constraint)).collect()
}

fn limit(n: &Node, constraint: &str) -> Result<Option<Limit>, IfaceError> {
    let bad = |message: String| IfaceError::MalformedLimit {
        constraint: constraint.to_string(),
        message,
    };
    let kind = match n.attr("INTERVAL-TYPE") {
        None => IntervalType::Closed,
        Some(s) => {
            IntervalType::parse(s).ok_or_else(|| bad(format!("unknown INTERVAL-TYPE `{s}`")))?
        }
    };
    let text = n.text.trim().to_string();
    if kind == IntervalType::Infinite {
        return Ok(Some(Limit {
            text,
            value: f64::NAN,
            kind,
        }));
    }
    let value: f64 = text
        .parse()
        .ok()
        .filter(|v: &f64| v.is_finite())
        .ok_or_else(|| bad(format!("<{}> `{text}` is not a number", n.name)))?;
    if parse_condition(&format!("x >= {text}")).is_err() {
        return Err(bad(format!("<{}> `{text}` is not a literal", n.name)));
    }
    Ok(Some(Limit { text, value, kind }))
}

fn finite(l: &Option<Limit>) -> Option<&Limit> {
    l.as_ref().filter(|l| l.kind != IntervalType::Infinite)
}

/// Parses an interface description.
pub fn parse_interface(xml: &str) -> Result<InterfaceSpec, IfaceError> {
    let root = parse_tree(xml)?;
    let mut spec = InterfaceSpec::default();
    let mut constrs = Vec::new();
    root.descendants("DATA-CONSTR", &mut constrs);
    for c in constrs {
        let name = short_name(c)?;
        let mut phys = Vec::new();
        c.descendants("PHYS-CONSTRS", &mut phys);
        let Some(phys) = phys.first() else {
            continue;
        };
        let lower = match phys.child("LOWER-LIMIT") {
            Some(n) => limit(n, &name)?,
            None => None,
        };
        let upper = match phys.child("UPPER-LIMIT") {
            Some(n) => limit(n, &name)?,
            None => None,
        };
        if let (Some(lo), Some(hi)) = (finite(&lower), finite(&upper)) {
            let empty = lo.value > hi.value
                || (lo.value == hi.value
                    && (lo.kind == IntervalType::Open || hi.kind == IntervalType::Open));
            if empty {
                return Err(IfaceError::MalformedLimit {
                    constraint: name,
                    message: format!("empty range between {} and {}", lo.text, hi.text),
                });
            }
        }
        spec.ranges.push(RangeConstraint {
            bindings: bindings(c, &name)?,
            name,
            lower,
            upper,
        });
    }
    let mut arrays = Vec::new();
    root.descendants("ARRAY-TYPE", &mut arrays);
    for a in arrays {
        let name = short_name(a)?;
        let len = a
            .child("MAX-NUMBER-OF-ELEMENTS")
            .ok_or_else(|| IfaceError::Missing {
                context: name.clone(),
                element: "MAX-NUMBER-OF-ELEMENTS".into(),
            })?;
        let length = len
            .text
            .trim()
            .parse::<u32>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| IfaceError::MalformedLimit {
                constraint: name.clone(),
                message: format!("bad array length `{}`", len.text.trim()),
            })?;
        spec.arrays.push(ArrayConstraint {
            bindings: bindings(a, &name)?,
            name,
            length,
        });
    }
    // free-standing bindings name their constraint
    let mut free = Vec::new();
    collect_free_bindings(&root, &mut free);
    for b in free {
        let Some(target) = b.attr("CONSTR").map(str::trim) else {
            return Err(IfaceError::BadBinding {
                constraint: String::new(),
                message: "binding outside a constraint needs CONSTR".into(),
            });
        };
        let parsed = binding(b, target)?;
        if let Some(r) = spec.ranges.iter_mut().find(|r| r.name == target) {
            r.bindings.push(parsed);
        } else if let Some(a) = spec.arrays.iter_mut().find(|a| a.name == target) {
            a.bindings.push(parsed);
        } else {
            return Err(IfaceError::DanglingReference(target.to_string()));
        }
    }
    Ok(spec)
}

fn collect_free_bindings<'a>(n: &'a Node, out: &mut Vec<&'a Node>) {
    for c in &n.children {
        match c.name.as_str() {
            "DATA-CONSTR" | "ARRAY-TYPE" => {}
            "BINDING" => out.push(c),
            _ => collect_free_bindings(c, out),
        }
    }
}

fn escape(s: &str) -> String {
    quick_xml::escape::escape(s).into_owned()
}

fn write_bindings(out: &mut String, bs: &[Binding]) {
    for b in bs {
        let _ = writeln!(
            out,
            "    <BINDING ROLE=\"{}\" SYMBOL=\"{}\"/>",
            b.role.as_str(),
            escape(&b.symbol)
        );
    }
}

/// Serializes `spec` in the dialect accepted by [`parse_interface`].
pub fn to_xml(spec: &InterfaceSpec) -> String {
    let mut out = String::from("<INTERFACE>\n");
    for r in &spec.ranges {
        out.push_str("  <DATA-CONSTR>\n");
        let _ = writeln!(out, "    <SHORT-NAME>{}</SHORT-NAME>", escape(&r.name));
        out.push_str("    <PHYS-CONSTRS>\n");
        for (tag, l) in [("LOWER-LIMIT", &r.lower), ("UPPER-LIMIT", &r.upper)] {
            if let Some(l) = l {
                let _ = writeln!(
                    out,
                    "      <{tag} INTERVAL-TYPE=\"{}\">{}</{tag}>",
                    l.kind.as_str(),
                    escape(&l.text)
                );
            }
        }
        out.push_str("    </PHYS-CONSTRS>\n");
        write_bindings(&mut out, &r.bindings);
        out.push_str("  </DATA-CONSTR>\n");
    }
    for a in &spec.arrays {
        out.push_str("  <ARRAY-TYPE>\n");
        let _ = writeln!(out, "    <SHORT-NAME>{}</SHORT-NAME>", escape(&a.name));
        let _ = writeln!(
            out,
            "    <MAX-NUMBER-OF-ELEMENTS>{}</MAX-NUMBER-OF-ELEMENTS>",
            a.length
        );
        write_bindings(&mut out, &a.bindings);
        out.push_str("  </ARRAY-TYPE>\n");
    }
    out.push_str("</INTERFACE>\n");
    out
}

/// `target >= lo && target <= hi` with strictness from the interval types;
/// `None` when both limits are absent or infinite.
pub fn range_condition(target: &str, r: &RangeConstraint) -> Option<String> {
    let mut parts = Vec::new();
    if let Some(lo) = finite(&r.lower) {
        let op = if lo.kind == IntervalType::Open {
            ">"
        } else {
            ">="
        };
        parts.push(format!("{target} {op} {}", lo.text));
    }
    if let Some(hi) = finite(&r.upper) {
        let op = if hi.kind == IntervalType::Open {
            "<"
        } else {
            "<="
        };
        parts.push(format!("{target} {op} {}", hi.text));
    }
    (!parts.is_empty()).then(|| parts.join(" && "))
}

fn signature<'a>(program: &'a Program, f: &str) -> Option<&'a FunctionSig> {
    program
        .modules
        .iter()
        .find_map(|m| m.function(f).map(|d| &d.sig))
        .or_else(|| program.modules.iter().find_map(|m| m.external(f)))
}

fn global_type<'a>(program: &'a Program, name: &str) -> Option<&'a Type> {
    program
        .modules
        .iter()
        .find_map(|m| m.global(name))
        .map(|g| &g.ty)
}

fn has_struct_field(program: &Program, s: &str, f: &str) -> bool {
    program
        .modules
        .iter()
        .filter_map(|m| m.struct_def(s))
        .any(|d| d.field(f).is_some())
}

struct Builder<'a> {
    program: &'a Program,
    file: &'a str,
    out: Import,
}

impl Builder<'_> {
    fn add(&mut self, kind: ContractKind, subject: &str, text: &str) {
        let e = parse_condition(text).expect("generated conditions parse");
        self.out.contracts.add(Contract {
            kind,
            subject: subject.to_string(),
            body: ContractBody::Cond(e),
            origin: Origin::Interface,
            file: self.file.to_string(),
            loc: Loc::new(1, 1),
        });
    }

    fn unknown(&self, constraint: &str, symbol: &str) -> IfaceError {
        IfaceError::UnknownSymbol {
            constraint: constraint.to_string(),
            symbol: symbol.to_string(),
        }
    }

    fn range(&mut self, r: &RangeConstraint) -> Result<(), IfaceError> {
        if r.bindings.is_empty() {
            self.out.warnings.push(format!(
                "constraint `{}` is not bound to any symbol",
                r.name
            ));
            return Ok(());
        }
        for b in &r.bindings {
            let sym = b.symbol.as_str();
            match b.role {
                Role::Parameter => {
                    let (f, p) = sym
                        .split_once('.')
                        .ok_or_else(|| self.unknown(&r.name, sym))?;
                    let sig =
                        signature(self.program, f).ok_or_else(|| self.unknown(&r.name, sym))?;
                    let param = sig.param(p).ok_or_else(|| self.unknown(&r.name, sym))?;
                    if !param.ty.is_scalar() {
                        self.out.warnings.push(format!(
                            "constraint `{}`: parameter `{sym}` is not a scalar",
                            r.name
                        ));
                        continue;
                    }
                    if let Some(t) = self.cond(r, p) {
                        self.add(ContractKind::Requires, f, &t);
                    }
                }
                Role::Return => {
                    let sig =
                        signature(self.program, sym).ok_or_else(|| self.unknown(&r.name, sym))?;
                    if !sig.ret.is_scalar() {
                        self.out.warnings.push(format!(
                            "constraint `{}`: `{sym}` does not return a scalar",
                            r.name
                        ));
                        continue;
                    }
                    if let Some(t) = self.cond(r, "return") {
                        self.add(ContractKind::Ensures, sym, &t);
                    }
                }
                Role::Global => self.global(r, sym)?,
            }
        }
        Ok(())
    }

    fn cond(&mut self, r: &RangeConstraint, target: &str) -> Option<String> {
        let t = range_condition(target, r);
        if t.is_none() {
            self.out
                .warnings
                .push(format!("constraint `{}` has no finite limit", r.name));
        }
        t
    }

    fn global(&mut self, r: &RangeConstraint, sym: &str) -> Result<(), IfaceError> {
        let (head, field) = match sym.split_once('.') {
            Some((h, f)) => (h, Some(f)),
            None => (sym, None),
        };
        match (global_type(self.program, head), field) {
            (Some(ty), None) if ty.is_scalar() => {
                if let Some(t) = self.cond(r, sym) {
                    self.add(ContractKind::Invariant, sym, &t);
                }
            }
            (Some(Type::Array(_, n)), None) => {
                // a curve or map: every element of its value array
                let n = *n;
                let parts: Option<Vec<String>> = (0..n)
                    .map(|i| self.cond(r, &format!("{sym}[{i}]")))
                    .collect();
                if let Some(parts) = parts {
                    self.add(ContractKind::Invariant, sym, &parts.join(" && "));
                }
            }
            (Some(Type::Struct(s)), Some(f)) if has_struct_field(self.program, s, f) => {
                if let Some(t) = self.cond(r, sym) {
                    self.add(ContractKind::Invariant, head, &t);
                }
            }
            (None, Some(f)) if has_struct_field(self.program, head, f) => {
                if let Some(t) = self.cond(r, f) {
                    self.add(ContractKind::Invariant, sym, &t);
                }
            }
            _ => return Err(self.unknown(&r.name, sym)),
        }
        Ok(())
    }

    fn array(&mut self, a: &ArrayConstraint) -> Result<(), IfaceError> {
        if a.bindings.is_empty() {
            self.out.warnings.push(format!(
                "array type `{}` is not bound to any symbol",
                a.name
            ));
        }
        for b in &a.bindings {
            let sym = b.symbol.as_str();
            if b.role != Role::Parameter {
                self.out.warnings.push(format!(
                    "array type `{}`: only parameter bindings give arrayspecs, `{sym}` skipped",
                    a.name
                ));
                continue;
            }
            let (f, p) = sym
                .split_once('.')
                .ok_or_else(|| self.unknown(&a.name, sym))?;
            let sig = signature(self.program, f).ok_or_else(|| self.unknown(&a.name, sym))?;
            let param = sig.param(p).ok_or_else(|| self.unknown(&a.name, sym))?;
            if !matches!(param.ty, Type::Ptr { .. }) {
                return Err(IfaceError::BadBinding {
                    constraint: a.name.clone(),
                    message: format!("`{sym}` is not a pointer parameter"),
                });
            }
            self.add(
                ContractKind::ArraySpec,
                f,
                &format!("length({p}) >= {}", a.length),
            );
        }
        Ok(())
    }
}

/// Turns bound constraints into interface contracts: parameters give
/// requires, return values ensures, globals invariants and array lengths
/// arrayspecs.
pub fn constraints_to_contracts(
    spec: &InterfaceSpec,
    program: &Program,
    file: &str,
) -> Result<Import, IfaceError> {
    let mut b = Builder {
        program,
        file,
        out: Import::default(),
    };
    for r in &spec.ranges {
        b.range(r)?;
    }
    for a in &spec.arrays {
        b.array(a)?;
    }
    Ok(b.out)
}
