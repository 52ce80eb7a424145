//! Recursive-descent parser for Mini-C.

use std::collections::BTreeMap;

use super::ast::*;
use super::contract::{
    check_fragment, Contract, ContractBody, ContractKind, ContractSet, Origin, SequenceTag,
};
use super::lexer::{lex, Tok, Token};
use super::FrontendError;
use crate::domains::{BinOp, CmpOp};

type PResult<T> = Result<T, FrontendError>;

/// Parses one Mini-C file. The module is named after the file stem.
pub fn parse_module(source: &str, filename: &str) -> PResult<Module> {
    let toks = lex(source, Loc::new(1, 1))?;
    let name = std::path::Path::new(filename)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(filename)
        .split('.')
        .next()
        .unwrap_or(filename)
        .to_string();
    let mut p = Parser {
        toks,
        pos: 0,
        file: filename.to_string(),
        next_id: 0,
        in_contract: false,
        typedefs: BTreeMap::new(),
        module: Module {
            name,
            file: filename.to_string(),
            structs: Vec::new(),
            enums: Vec::new(),
            globals: Vec::new(),
            functions: Vec::new(),
            externals: Vec::new(),
            contracts: ContractSet::new(),
            stmt_count: 0,
        },
        prototypes: Vec::new(),
    };
    p.parse_items()?;
    p.finish()
}

/// Parses a standalone contract condition such as `x >= 0.0 && x <= 1.0`.
pub fn parse_condition(text: &str) -> PResult<Expr> {
    let toks = lex(text, Loc::new(1, 1))?;
    let mut p = Parser::for_tokens(toks, "<condition>");
    p.in_contract = true;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses a `.contracts` file: groups of `/// [[ kind: expr ]]` lines, each
/// followed by its subject (`f;`, `x;` or `Type.field;`).
pub fn parse_contracts(source: &str, filename: &str, origin: Origin) -> PResult<ContractSet> {
    let toks = lex(source, Loc::new(1, 1))?;
    let mut p = Parser::for_tokens(toks, filename);
    let mut out = ContractSet::new();
    loop {
        let mut pending = Vec::new();
        while let Tok::Contract(text) = p.peek().clone() {
            pending.push((text, p.loc()));
            p.bump();
        }
        if matches!(p.peek(), Tok::Eof) {
            if let Some((_, loc)) = pending.first() {
                return Err(syntax(
                    *loc,
                    "contract annotation is not followed by a subject",
                ));
            }
            return Ok(out);
        }
        let (mut subject, _) = p.expect_ident()?;
        let field = if p.eat_punct(".") {
            let (f, _) = p.expect_ident()?;
            subject = format!("{subject}.{f}");
            Some(f)
        } else {
            None
        };
        p.expect_punct(";")?;
        for (text, loc) in &pending {
            let target = match &field {
                Some(_) => ContractTarget::Field,
                None => ContractTarget::Any,
            };
            let mut c = p.contract(text, *loc, &subject, &target)?;
            c.origin = origin;
            out.add(c);
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: String,
    next_id: u32,
    in_contract: bool,
    typedefs: BTreeMap<String, Type>,
    module: Module,
    prototypes: Vec<FunctionSig>,
}

fn syntax(loc: Loc, message: impl Into<String>) -> FrontendError {
    FrontendError::Syntax {
        loc,
        message: message.into(),
    }
}

impl Parser {
    fn for_tokens(toks: Vec<Token>, file: &str) -> Parser {
        Parser {
            toks,
            pos: 0,
            file: file.to_string(),
            next_id: 0,
            in_contract: false,
            typedefs: BTreeMap::new(),
            module: Module {
                name: String::new(),
                file: file.to_string(),
                structs: Vec::new(),
                enums: Vec::new(),
                globals: Vec::new(),
                functions: Vec::new(),
                externals: Vec::new(),
                contracts: ContractSet::new(),
                stmt_count: 0,
            },
            prototypes: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].loc
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(q) if q == s)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, s: &str) -> bool {
        if self.is_ident(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Loc> {
        let loc = self.loc();
        if self.eat_punct(p) {
            Ok(loc)
        } else {
            Err(syntax(
                loc,
                format!("expected `{p}`, found {}", describe(self.peek())),
            ))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Loc)> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok((s, loc))
            }
            t => Err(syntax(
                loc,
                format!("expected identifier, found {}", describe(&t)),
            )),
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            t => Err(syntax(self.loc(), format!("unexpected {}", describe(t)))),
        }
    }

    fn fresh_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    // ---- items ----

    fn parse_items(&mut self) -> PResult<()> {
        loop {
            let mut pending = Vec::new();
            while let Tok::Contract(text) = self.peek().clone() {
                pending.push((text, self.loc()));
                self.bump();
            }
            if matches!(self.peek(), Tok::Eof) {
                if let Some((_, loc)) = pending.first() {
                    return Err(syntax(
                        *loc,
                        "contract annotation is not followed by a declaration",
                    ));
                }
                return Ok(());
            }
            self.item(pending)?;
        }
    }

    fn item(&mut self, pending: Vec<(String, Loc)>) -> PResult<()> {
        let start = self.loc();
        if self.eat_ident("typedef") {
            if !pending.is_empty() {
                return Err(syntax(start, "contracts cannot annotate a type definition"));
            }
            return self.typedef();
        }
        if (self.is_ident("struct") || self.is_ident("enum"))
            && matches!(self.peek_at(1), Tok::Ident(_))
            && matches!(self.peek_at(2), Tok::Punct("{"))
        {
            if !pending.is_empty() {
                return Err(syntax(start, "contracts cannot annotate a type definition"));
            }
            let is_struct = self.is_ident("struct");
            self.bump();
            let (name, loc) = self.expect_ident()?;
            if is_struct {
                self.struct_body(name, false, loc)?;
            } else {
                self.enum_body(name, false, loc)?;
            }
            self.expect_punct(";")?;
            return Ok(());
        }
        let mut storage = Storage::Public;
        if self.eat_ident("static") {
            storage = Storage::Static;
        } else if self.eat_ident("extern") {
            storage = Storage::Extern;
        }
        let is_const = self.eat_ident("const");
        let ty = self.type_spec()?;
        let (name, loc) = self.expect_ident()?;
        if self.is_punct("(") {
            if is_const {
                return Err(syntax(start, "functions cannot be const"));
            }
            let sig = FunctionSig {
                params: self.params()?,
                name: name.clone(),
                ret: ty,
                is_static: storage == Storage::Static,
                loc,
            };
            self.attach_contracts(&pending, &name, ContractTarget::Function(&sig))?;
            if self.eat_punct(";") {
                self.prototypes.push(sig);
            } else {
                let body = self.block()?;
                if self.module.function(&name).is_some() {
                    return Err(syntax(loc, format!("function `{name}` is defined twice")));
                }
                self.module.functions.push(FunctionDef { sig, body });
            }
            return Ok(());
        }
        let ty = self.array_suffix(ty)?;
        let init = if self.eat_punct("=") {
            Some(self.initializer()?)
        } else {
            None
        };
        self.expect_punct(";")?;
        if matches!(ty, Type::Void) {
            return Err(syntax(loc, "variables cannot have type void"));
        }
        self.attach_contracts(&pending, &name, ContractTarget::Variable)?;
        if self.module.global(&name).is_some() {
            return Err(syntax(loc, format!("global `{name}` is declared twice")));
        }
        if storage == Storage::Extern && init.is_some() {
            return Err(syntax(
                loc,
                "extern declarations cannot have an initializer",
            ));
        }
        self.module.globals.push(GlobalDecl {
            name,
            ty,
            storage,
            is_const,
            init,
            loc,
        });
        Ok(())
    }

    fn typedef(&mut self) -> PResult<()> {
        let loc = self.loc();
        if self.eat_ident("struct") {
            self.eat_ident_any();
            let name = self.typedef_name_after_body(true, loc)?;
            self.typedefs.insert(name.clone(), Type::Struct(name));
        } else if self.eat_ident("enum") {
            self.eat_ident_any();
            let name = self.typedef_name_after_body(false, loc)?;
            self.typedefs.insert(name.clone(), Type::Enum(name));
        } else {
            let ty = self.type_spec()?;
            let (name, _) = self.expect_ident()?;
            self.expect_punct(";")?;
            self.typedefs.insert(name, ty);
            return Ok(());
        }
        self.expect_punct(";").map(|_| ())
    }

    /// Skips an optional tag name after `struct`/`enum` in a typedef.
    fn eat_ident_any(&mut self) {
        if let Tok::Ident(s) = self.peek() {
            if !is_keyword(s) {
                self.bump();
            }
        }
    }

    fn typedef_name_after_body(&mut self, is_struct: bool, loc: Loc) -> PResult<String> {
        // parse the body into a placeholder, then rename once the name is known
        let start = self.pos;
        let depth_ok = self.is_punct("{");
        if !depth_ok {
            return Err(syntax(self.loc(), "expected `{` in typedef"));
        }
        let mut depth = 0;
        loop {
            match self.peek() {
                Tok::Punct("{") => depth += 1,
                Tok::Punct("}") => {
                    depth -= 1;
                    if depth == 0 {
                        self.bump();
                        break;
                    }
                }
                Tok::Eof => return Err(syntax(loc, "unterminated typedef body")),
                _ => {}
            }
            self.bump();
        }
        let (name, _) = self.expect_ident()?;
        let after = self.pos;
        self.pos = start;
        if is_struct {
            self.struct_body(name.clone(), true, loc)?;
        } else {
            self.enum_body(name.clone(), true, loc)?;
        }
        self.pos = after;
        Ok(name)
    }

    fn struct_body(&mut self, name: String, typedef: bool, loc: Loc) -> PResult<()> {
        self.expect_punct("{")?;
        let mut fields: Vec<Field> = Vec::new();
        while !self.eat_punct("}") {
            let mut pending = Vec::new();
            while let Tok::Contract(text) = self.peek().clone() {
                pending.push((text, self.loc()));
                self.bump();
            }
            let ty = self.type_spec()?;
            let (fname, floc) = self.expect_ident()?;
            self.expect_punct(";")?;
            if !ty.is_scalar() {
                return Err(syntax(floc, "struct fields must be scalars"));
            }
            if fields.iter().any(|f| f.name == fname) {
                return Err(syntax(floc, format!("duplicate field `{fname}`")));
            }
            let subject = format!("{name}.{fname}");
            self.attach_contracts(&pending, &subject, ContractTarget::Field)?;
            fields.push(Field {
                name: fname,
                ty,
                loc: floc,
            });
        }
        if self.module.struct_def(&name).is_some() {
            return Err(syntax(loc, format!("struct `{name}` is defined twice")));
        }
        self.module.structs.push(StructDef {
            name,
            fields,
            typedef,
            loc,
        });
        Ok(())
    }

    fn enum_body(&mut self, name: String, typedef: bool, loc: Loc) -> PResult<()> {
        self.expect_punct("{")?;
        let mut variants: Vec<(String, i64)> = Vec::new();
        let mut next = 0i64;
        while !self.eat_punct("}") {
            let (vname, vloc) = self.expect_ident()?;
            if self.eat_punct("=") {
                let e = self.expr()?;
                next = match const_eval(&e, &|n| self.lookup_const(n, &variants)) {
                    Some(ConstValue::Int(v)) => v,
                    _ => return Err(syntax(e.loc, "enum value must be an integer constant")),
                };
            }
            if variants.iter().any(|(n, _)| *n == vname) || self.module.constant(&vname).is_some() {
                return Err(syntax(vloc, format!("duplicate constant `{vname}`")));
            }
            variants.push((vname, next));
            next += 1;
            if !self.eat_punct(",") {
                self.expect_punct("}")?;
                break;
            }
        }
        if variants.is_empty() {
            return Err(syntax(loc, "enum must have at least one constant"));
        }
        self.module.enums.push(EnumDef {
            name,
            variants,
            typedef,
            loc,
        });
        Ok(())
    }

    fn lookup_const(&self, name: &str, local: &[(String, i64)]) -> Option<ConstValue> {
        local
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| ConstValue::Int(*v))
            .or_else(|| self.module.constant(name))
    }

    fn starts_type(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                matches!(
                    s.as_str(),
                    "int" | "unsigned" | "uint8" | "float" | "void" | "struct" | "enum" | "const"
                ) || self.typedefs.contains_key(s)
            }
            _ => false,
        }
    }

    fn type_spec(&mut self) -> PResult<Type> {
        let loc = self.loc();
        let Tok::Ident(word) = self.peek().clone() else {
            return Err(syntax(
                loc,
                format!("expected a type, found {}", describe(self.peek())),
            ));
        };
        self.bump();
        Ok(match word.as_str() {
            "int" => Type::Int,
            "uint8" => Type::UChar,
            "unsigned" => {
                if !self.eat_ident("char") {
                    return Err(syntax(self.loc(), "only `unsigned char` is supported"));
                }
                Type::UChar
            }
            "float" => Type::Float,
            "void" => Type::Void,
            "struct" => {
                let (n, nloc) = self.expect_ident()?;
                if self.module.struct_def(&n).is_none() {
                    return Err(syntax(nloc, format!("unknown struct `{n}`")));
                }
                Type::Struct(n)
            }
            "enum" => {
                let (n, nloc) = self.expect_ident()?;
                if self.module.enum_def(&n).is_none() {
                    return Err(syntax(nloc, format!("unknown enum `{n}`")));
                }
                Type::Enum(n)
            }
            other => match self.typedefs.get(other) {
                Some(t) => t.clone(),
                None => return Err(syntax(loc, format!("unknown type `{other}`"))),
            },
        })
    }

    fn array_suffix(&mut self, ty: Type) -> PResult<Type> {
        if !self.eat_punct("[") {
            return Ok(ty);
        }
        let e = self.expr()?;
        self.expect_punct("]")?;
        let n = match const_eval(&e, &|n| self.module.constant(n)) {
            Some(ConstValue::Int(n)) if n > 0 && n <= u32::MAX as i64 => n as u32,
            _ => {
                return Err(syntax(
                    e.loc,
                    "array size must be a positive integer constant",
                ))
            }
        };
        if !ty.is_scalar() {
            return Err(syntax(e.loc, "array elements must be scalars"));
        }
        Ok(Type::Array(Box::new(ty), n))
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params: Vec<Param> = Vec::new();
        if self.is_ident("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.bump();
        }
        if self.eat_punct(")") {
            return Ok(params);
        }
        loop {
            let is_const = self.eat_ident("const");
            let ty = self.type_spec()?;
            let pointer = self.eat_punct("*");
            let (name, loc) = self.expect_ident()?;
            let ty = if pointer || self.is_punct("[") {
                if self.eat_punct("[") {
                    self.expect_punct("]")?;
                }
                if !ty.is_scalar() {
                    return Err(syntax(loc, "pointers must point to scalars"));
                }
                Type::Ptr {
                    elem: Box::new(ty),
                    is_const,
                }
            } else {
                if !ty.is_scalar() {
                    return Err(syntax(loc, "parameters must be scalars or pointers"));
                }
                ty
            };
            if params.iter().any(|p| p.name == name) {
                return Err(syntax(loc, format!("duplicate parameter `{name}`")));
            }
            params.push(Param { name, ty, loc });
            if self.eat_punct(")") {
                return Ok(params);
            }
            self.expect_punct(",")?;
        }
    }

    fn initializer(&mut self) -> PResult<Init> {
        if self.eat_punct("{") {
            let mut items = Vec::new();
            if !self.eat_punct("}") {
                loop {
                    items.push(self.expr()?);
                    if self.eat_punct("}") {
                        break;
                    }
                    self.expect_punct(",")?;
                    if self.eat_punct("}") {
                        break;
                    }
                }
            }
            Ok(Init::List(items))
        } else {
            Ok(Init::Expr(self.expr()?))
        }
    }

    // ---- contracts ----

    fn attach_contracts(
        &mut self,
        pending: &[(String, Loc)],
        subject: &str,
        target: ContractTarget,
    ) -> PResult<()> {
        for (text, loc) in pending {
            let c = self.contract(text, *loc, subject, &target)?;
            self.module.contracts.add(c);
        }
        Ok(())
    }

    fn contract(
        &mut self,
        text: &str,
        loc: Loc,
        subject: &str,
        target: &ContractTarget,
    ) -> PResult<Contract> {
        let lead = text.len() - text.trim_start().len();
        let Some(colon) = text.find(':') else {
            return Err(syntax(loc, "expected `kind: expression` in contract"));
        };
        let kind_text = text[..colon].trim();
        let kind = ContractKind::parse(kind_text)
            .ok_or_else(|| syntax(loc, format!("unknown contract kind `{kind_text}`")))?;
        let body_text = &text[colon + 1..];
        let kloc = Loc::new(loc.line, loc.col + lead as u32);
        match (kind, target) {
            (ContractKind::Invariant, ContractTarget::Function(_)) => {
                return Err(syntax(
                    kloc,
                    "invariant contracts annotate variables, not functions",
                ))
            }
            (k, ContractTarget::Variable | ContractTarget::Field)
                if k != ContractKind::Invariant =>
            {
                return Err(syntax(
                    kloc,
                    format!("{k} contracts annotate functions, not variables"),
                ))
            }
            _ => {}
        }
        let body = if kind == ContractKind::Sequence {
            match body_text.trim() {
                "init" => ContractBody::Sequence(SequenceTag::Init),
                "cyclic" => ContractBody::Sequence(SequenceTag::Cyclic),
                other => return Err(syntax(kloc, format!("unknown sequence tag `{other}`"))),
            }
        } else {
            let origin = Loc::new(loc.line, loc.col + colon as u32 + 1);
            let toks = lex(body_text, origin)?;
            let saved = (
                std::mem::replace(&mut self.toks, toks),
                self.pos,
                self.in_contract,
            );
            self.pos = 0;
            self.in_contract = true;
            let result = self.expr().and_then(|e| self.expect_eof().map(|_| e));
            self.toks = saved.0;
            self.pos = saved.1;
            self.in_contract = saved.2;
            let e = result?;
            check_fragment(&e).map_err(|(l, m)| FrontendError::Contract { loc: l, message: m })?;
            check_special_terms(&e, kind, target)?;
            ContractBody::Cond(e)
        };
        Ok(Contract {
            kind,
            subject: subject.to_string(),
            body,
            origin: Origin::Manual,
            file: self.file.clone(),
            loc: kloc,
        })
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.eat_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(syntax(self.loc(), "unexpected end of file in block"));
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn body(&mut self) -> PResult<Vec<Stmt>> {
        if self.is_punct("{") {
            self.block()
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        if let Tok::Contract(_) = self.peek() {
            return Err(syntax(
                loc,
                "contract annotations must precede a declaration",
            ));
        }
        let id = self.fresh_id();
        let kind = if self.is_punct("{") {
            StmtKind::Block(self.block()?)
        } else if self.eat_ident("if") {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then = self.body()?;
            let els = if self.eat_ident("else") {
                Some(self.body()?)
            } else {
                None
            };
            StmtKind::If { cond, then, els }
        } else if self.eat_ident("while") {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            StmtKind::While {
                cond,
                body: self.body()?,
            }
        } else if self.eat_ident("for") {
            self.expect_punct("(")?;
            let init = if self.is_punct(";") {
                None
            } else {
                Some(Box::new(self.simple_stmt()?))
            };
            self.expect_punct(";")?;
            let cond = if self.is_punct(";") {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect_punct(";")?;
            let step = if self.is_punct(")") {
                None
            } else {
                Some(Box::new(self.simple_stmt()?))
            };
            self.expect_punct(")")?;
            StmtKind::For {
                init,
                cond,
                step,
                body: self.body()?,
            }
        } else if self.eat_ident("switch") {
            self.switch()?
        } else if self.eat_ident("break") {
            self.expect_punct(";")?;
            StmtKind::Break
        } else if self.eat_ident("return") {
            let e = if self.is_punct(";") {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect_punct(";")?;
            StmtKind::Return(e)
        } else if let Some(d) = self.directive()? {
            self.expect_punct(";")?;
            StmtKind::Directive(d)
        } else {
            // roll back the id so the simple statement takes it
            self.next_id -= 1;
            let s = self.simple_stmt()?;
            self.expect_punct(";")?;
            return Ok(s);
        };
        Ok(Stmt { id, loc, kind })
    }

    fn switch(&mut self) -> PResult<StmtKind> {
        self.expect_punct("(")?;
        let scrutinee = self.expr()?;
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let mut cases: Vec<Case> = Vec::new();
        while !self.eat_punct("}") {
            let loc = self.loc();
            let mut labels = Vec::new();
            loop {
                if self.eat_ident("case") {
                    let e = self.expr()?;
                    self.expect_punct(":")?;
                    match const_eval(&e, &|n| self.module.constant(n)) {
                        Some(ConstValue::Int(v)) => labels.push(CaseLabel::Value(v)),
                        _ => return Err(syntax(e.loc, "case label must be an integer constant")),
                    }
                } else if self.eat_ident("default") {
                    self.expect_punct(":")?;
                    labels.push(CaseLabel::Default);
                } else {
                    break;
                }
            }
            if labels.is_empty() {
                return Err(syntax(loc, "expected `case` or `default`"));
            }
            let mut body = Vec::new();
            while !self.is_ident("case") && !self.is_ident("default") && !self.is_punct("}") {
                body.push(self.stmt()?);
            }
            cases.push(Case { loc, labels, body });
        }
        Ok(StmtKind::Switch { scrutinee, cases })
    }

    fn directive(&mut self) -> PResult<Option<Directive>> {
        let Tok::Ident(name) = self.peek().clone() else {
            return Ok(None);
        };
        if !name.starts_with("__") || !matches!(self.peek_at(1), Tok::Punct("(")) {
            return Ok(None);
        }
        let loc = self.loc();
        self.bump();
        self.expect_punct("(")?;
        let d = match name.as_str() {
            "__modify_full_range" => {
                let e = self.expr()?;
                match e.kind {
                    ExprKind::Place(p) => Directive::ModifyFullRange(p),
                    _ => return Err(syntax(e.loc, "expected a variable")),
                }
            }
            "__assert" => Directive::Assert(self.expr()?),
            "__known_fact" => Directive::KnownFact(self.expr()?),
            "__global_assert" => {
                let (mut path, _) = self.expect_ident()?;
                if self.eat_punct(".") {
                    let (f, _) = self.expect_ident()?;
                    path = format!("{path}.{f}");
                }
                self.expect_punct(",")?;
                Directive::GlobalAssert(path, self.expr()?)
            }
            "__extract" => Directive::Extract(self.expect_ident()?.0),
            _ => return Err(syntax(loc, format!("unknown directive `{name}`"))),
        };
        self.expect_punct(")")?;
        Ok(Some(d))
    }

    /// Declaration, assignment or expression statement, without the `;`.
    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let id = self.fresh_id();
        if self.starts_type() && !matches!(self.peek_at(1), Tok::Punct("(")) {
            self.eat_ident("const");
            let ty = self.type_spec()?;
            let (name, _) = self.expect_ident()?;
            let ty = self.array_suffix(ty)?;
            if matches!(ty, Type::Void) {
                return Err(syntax(loc, "variables cannot have type void"));
            }
            let init = if self.eat_punct("=") {
                Some(self.initializer()?)
            } else {
                None
            };
            return Ok(Stmt {
                id,
                loc,
                kind: StmtKind::Decl { name, ty, init },
            });
        }
        let lhs = self.expr()?;
        let compound = |p: &str| match p {
            "+=" => Some(BinOp::Add),
            "-=" => Some(BinOp::Sub),
            "*=" => Some(BinOp::Mul),
            "/=" => Some(BinOp::Div),
            "%=" => Some(BinOp::Rem),
            "<<=" => Some(BinOp::Shl),
            ">>=" => Some(BinOp::Shr),
            _ => None,
        };
        let op_loc = self.loc();
        let kind = match self.peek().clone() {
            Tok::Punct("=") => {
                self.bump();
                let target = into_place(lhs)?;
                StmtKind::Assign {
                    target,
                    value: self.expr()?,
                }
            }
            Tok::Punct(p @ ("++" | "--")) => {
                self.bump();
                let op = if p == "++" { BinOp::Add } else { BinOp::Sub };
                let target = into_place(lhs.clone())?;
                StmtKind::Assign {
                    target,
                    value: Expr::new(
                        op_loc,
                        ExprKind::Binary(op, Box::new(lhs), Box::new(Expr::int(op_loc, 1))),
                    ),
                }
            }
            Tok::Punct(p) if compound(p).is_some() => {
                self.bump();
                let op = compound(p).unwrap();
                let target = into_place(lhs.clone())?;
                let rhs = self.expr()?;
                StmtKind::Assign {
                    target,
                    value: Expr::new(op_loc, ExprKind::Binary(op, Box::new(lhs), Box::new(rhs))),
                }
            }
            _ => StmtKind::Expr(lhs),
        };
        Ok(Stmt { id, loc, kind })
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.or()
    }

    fn or(&mut self) -> PResult<Expr> {
        let mut l = self.and()?;
        while self.is_punct("||") {
            let loc = self.bump().loc;
            let r = self.and()?;
            l = Expr::new(loc, ExprKind::Or(Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    fn and(&mut self) -> PResult<Expr> {
        let mut l = self.equality()?;
        while self.is_punct("&&") {
            let loc = self.bump().loc;
            let r = self.equality()?;
            l = Expr::new(loc, ExprKind::And(Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    fn equality(&mut self) -> PResult<Expr> {
        let mut l = self.relational()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("==") => CmpOp::Eq,
                Tok::Punct("!=") => CmpOp::Ne,
                _ => return Ok(l),
            };
            let loc = self.bump().loc;
            let r = self.relational()?;
            l = Expr::new(loc, ExprKind::Cmp(op, Box::new(l), Box::new(r)));
        }
    }

    fn relational(&mut self) -> PResult<Expr> {
        let mut l = self.shift()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("<") => CmpOp::Lt,
                Tok::Punct("<=") => CmpOp::Le,
                Tok::Punct(">") => CmpOp::Gt,
                Tok::Punct(">=") => CmpOp::Ge,
                _ => return Ok(l),
            };
            let loc = self.bump().loc;
            let r = self.shift()?;
            l = Expr::new(loc, ExprKind::Cmp(op, Box::new(l), Box::new(r)));
        }
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinOp)],
        next: fn(&mut Parser) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let mut l = next(self)?;
        'outer: loop {
            for (p, op) in ops {
                if self.is_punct(p) {
                    let loc = self.bump().loc;
                    let r = next(self)?;
                    l = Expr::new(loc, ExprKind::Binary(*op, Box::new(l), Box::new(r)));
                    continue 'outer;
                }
            }
            return Ok(l);
        }
    }

    fn shift(&mut self) -> PResult<Expr> {
        self.binary_level(&[("<<", BinOp::Shl), (">>", BinOp::Shr)], Parser::additive)
    }

    fn additive(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            Parser::multiplicative,
        )
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Rem)],
            Parser::unary,
        )
    }

    fn unary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        if self.eat_punct("-") {
            let e = self.unary()?;
            return Ok(Expr::new(loc, ExprKind::Unary(UnOp::Neg, Box::new(e))));
        }
        if self.eat_punct("!") {
            let e = self.unary()?;
            return Ok(Expr::new(loc, ExprKind::Unary(UnOp::Not, Box::new(e))));
        }
        if self.is_punct("(") && self.cast_ahead() {
            self.bump();
            let ty = self.type_spec()?;
            self.expect_punct(")")?;
            if !ty.is_scalar() {
                return Err(syntax(loc, "casts must target a scalar type"));
            }
            let e = self.unary()?;
            return Ok(Expr::new(loc, ExprKind::Cast(ty, Box::new(e))));
        }
        self.primary()
    }

    fn cast_ahead(&self) -> bool {
        match self.peek_at(1) {
            Tok::Ident(s) => {
                matches!(s.as_str(), "int" | "unsigned" | "uint8" | "float" | "enum")
                    || self.typedefs.contains_key(s)
            }
            _ => false,
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::int(loc, v))
            }
            Tok::Float(v) => {
                self.bump();
                Ok(Expr::new(loc, ExprKind::Float(v)))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(name) if name == "NULL" => {
                self.bump();
                Ok(Expr::new(loc, ExprKind::Null))
            }
            Tok::Ident(name) if name == "return" && self.in_contract => {
                self.bump();
                Ok(Expr::new(loc, ExprKind::Return))
            }
            Tok::Ident(name)
                if name == "length"
                    && self.in_contract
                    && matches!(self.peek_at(1), Tok::Punct("(")) =>
            {
                self.bump();
                self.bump();
                let (p, _) = self.expect_ident()?;
                self.expect_punct(")")?;
                Ok(Expr::new(loc, ExprKind::Length(p)))
            }
            Tok::Ident(name) if !is_keyword(&name) => {
                self.bump();
                if self.is_punct("(") {
                    if self.in_contract {
                        return Err(FrontendError::Contract {
                            loc,
                            message: "calls are outside the contract fragment".into(),
                        });
                    }
                    self.bump();
                    let mut args = Vec::new();
                    if !self.eat_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_punct(")") {
                                break;
                            }
                            self.expect_punct(",")?;
                        }
                    }
                    return Ok(Expr::new(loc, ExprKind::Call(name, args)));
                }
                let sel = if self.eat_punct("[") {
                    let i = self.expr()?;
                    self.expect_punct("]")?;
                    Selector::Index(Box::new(i))
                } else if self.eat_punct(".") {
                    Selector::Field(self.expect_ident()?.0)
                } else {
                    Selector::None
                };
                Ok(Expr::place(loc, Place { name, sel }))
            }
            t => Err(syntax(
                loc,
                format!("expected an expression, found {}", describe(&t)),
            )),
        }
    }

    // ---- wrap-up ----

    fn finish(mut self) -> PResult<Module> {
        for proto in std::mem::take(&mut self.prototypes) {
            if let Some(def) = self.module.function(&proto.name) {
                if !def.sig.same_shape(&proto) || def.sig.is_static != proto.is_static {
                    return Err(syntax(
                        proto.loc,
                        format!(
                            "declaration of `{}` does not match its definition",
                            proto.name
                        ),
                    ));
                }
                continue;
            }
            match self.module.external(&proto.name) {
                Some(prev) if !prev.same_shape(&proto) => {
                    return Err(syntax(
                        proto.loc,
                        format!("conflicting declarations of `{}`", proto.name),
                    ));
                }
                Some(_) => {}
                None => self.module.externals.push(proto),
            }
        }
        for g in &self.module.globals {
            if self.module.signature(&g.name).is_some() {
                return Err(syntax(
                    g.loc,
                    format!("`{}` names both a function and a variable", g.name),
                ));
            }
        }
        self.module.stmt_count = self.next_id;
        Ok(self.module)
    }
}

enum ContractTarget<'a> {
    Function(&'a FunctionSig),
    /// Subject of unknown kind, as in a `.contracts` file.
    Any,
    Variable,
    Field,
}

fn check_special_terms(e: &Expr, kind: ContractKind, target: &ContractTarget) -> PResult<()> {
    let mut err = None;
    e.visit(&mut |x| {
        if err.is_some() {
            return;
        }
        match &x.kind {
            ExprKind::Return if kind != ContractKind::Ensures => {
                err = Some((
                    x.loc,
                    "`return` may only appear in ensures contracts".to_string(),
                ));
            }
            ExprKind::Return => {
                if let ContractTarget::Function(sig) = target {
                    if sig.ret == Type::Void {
                        err = Some((x.loc, format!("`{}` returns void", sig.name)));
                    }
                }
            }
            ExprKind::Length(p) if kind != ContractKind::ArraySpec => {
                err = Some((
                    x.loc,
                    format!("`length({p})` may only appear in arrayspec contracts"),
                ));
            }
            ExprKind::Length(p) => {
                if let ContractTarget::Function(sig) = target {
                    if !matches!(sig.param(p).map(|q| &q.ty), Some(Type::Ptr { .. })) {
                        err = Some((
                            x.loc,
                            format!("`{p}` is not a pointer parameter of `{}`", sig.name),
                        ));
                    }
                }
            }
            _ => {}
        }
    });
    if kind == ContractKind::ArraySpec && err.is_none() {
        let ok = matches!(&e.kind, ExprKind::Cmp(CmpOp::Ge | CmpOp::Gt | CmpOp::Eq, l, _) if matches!(l.kind, ExprKind::Length(_)));
        if !ok {
            err = Some((
                e.loc,
                "arrayspec must have the form `length(p) >= expr`".to_string(),
            ));
        }
    }
    if let ContractTarget::Field = target {
        e.visit(&mut |x| {
            if let ExprKind::Place(p) = &x.kind {
                if p.sel != Selector::None && err.is_none() {
                    err = Some((
                        x.loc,
                        "field invariants refer to fields by bare name".to_string(),
                    ));
                }
            }
        });
    }
    match err {
        Some((loc, message)) => Err(FrontendError::Contract { loc, message }),
        None => Ok(()),
    }
}

fn into_place(e: Expr) -> PResult<Place> {
    match e.kind {
        ExprKind::Place(p) => Ok(p),
        _ => Err(syntax(e.loc, "left-hand side is not assignable")),
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "int"
            | "unsigned"
            | "char"
            | "uint8"
            | "float"
            | "void"
            | "struct"
            | "enum"
            | "typedef"
            | "static"
            | "extern"
            | "const"
            | "if"
            | "else"
            | "while"
            | "for"
            | "switch"
            | "case"
            | "default"
            | "break"
            | "return"
            | "NULL"
    )
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Float(v) => format!("`{v:?}`"),
        Tok::Contract(_) => "a contract annotation".into(),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of file".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_prototype_with_contracts() {
        let m = parse_module(
            "/// [[ requires: x >= 0.0 ]]\n/// [[ ensures: return >= 0.0 ]]\nfloat sqrt(float x);\n",
            "lib.mc",
        )
        .unwrap();
        assert_eq!(m.name, "lib");
        assert_eq!(m.externals.len(), 1);
        let fc = m.contracts.for_function("sqrt");
        assert_eq!(fc.len(), 2);
        assert_eq!(fc[0].kind, ContractKind::Requires);
        assert_eq!(fc[0].annotation(), "[[ requires: x >= 0.0 ]]");
        assert_eq!(fc[0].loc, Loc::new(1, 8));
        assert_eq!(fc[1].annotation(), "[[ ensures: return >= 0.0 ]]");
    }

    #[test]
    fn plain_global_has_no_contracts() {
        let m = parse_module("int x;", "a.mc").unwrap();
        assert!(m.contracts.is_empty());
        assert_eq!(m.globals[0].storage, Storage::Public);
    }

    #[test]
    fn unknown_sequence_tag() {
        let e = parse_module("/// [[ sequence: weekly ]]\nvoid f(void);", "a.mc").unwrap_err();
        assert!(e.to_string().contains("unknown sequence tag"), "{e}");
    }

    #[test]
    fn unknown_kind_and_fragment_errors() {
        let e = parse_module("/// [[ promises: x > 0 ]]\nint x;", "a.mc").unwrap_err();
        assert!(e.to_string().contains("unknown contract kind"));
        let e = parse_module("/// [[ invariant: x * 2 > 0 ]]\nint x;", "a.mc").unwrap_err();
        assert!(matches!(e, FrontendError::Contract { .. }), "{e}");
        let e = parse_module("/// [[ requires: return > 0 ]]\nint f(int x);", "a.mc").unwrap_err();
        assert!(e.to_string().contains("ensures"));
    }

    #[test]
    fn struct_field_invariants_use_dotted_subjects() {
        let m = parse_module(
            "const int LED_NUMBER = 4;\ntypedef struct {\n  /// [[ invariant: Id <= LED_NUMBER ]]\n  uint8 Id;\n  int level;\n} LED;\nLED led;\n",
            "leds.mc",
        )
        .unwrap();
        assert_eq!(m.contracts.for_variable("LED.Id").len(), 1);
        assert_eq!(m.globals[1].ty, Type::Struct("LED".into()));
        assert_eq!(m.constant("LED_NUMBER"), Some(ConstValue::Int(4)));
    }

    #[test]
    fn statements_and_desugaring() {
        let src = "enum Mode { OFF, ON = 5 };\nint a[3];\nint f(int x) {\n  int i;\n  for (i = 0; i < 3; i++) { a[i] += x; }\n  switch (x) { case OFF: case 1: return 1; default: break; }\n  return a[0];\n}\n";
        let m = parse_module(src, "m.mc").unwrap();
        let f = &m.functions[0];
        assert_eq!(f.body.len(), 4);
        let StmtKind::Switch { cases, .. } = &f.body[2].kind else {
            panic!()
        };
        assert_eq!(
            cases[0].labels,
            vec![CaseLabel::Value(0), CaseLabel::Value(1)]
        );
        assert_eq!(m.stmt_count, 9);
        assert_eq!(m.enum_def("Mode").unwrap().range(), (0, 5));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_module("int f() {\n  x = ;\n}", "m.mc").unwrap_err();
        assert_eq!(e.loc(), Some(Loc::new(2, 7)));
        let e = parse_module("/// [[ invariant: x > 0 ]]\n", "m.mc").unwrap_err();
        assert_eq!(e.loc(), Some(Loc::new(1, 7)));
    }
}
