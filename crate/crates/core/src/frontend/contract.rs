//! Contracts attached to functions and variables.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{Expr, ExprKind, Loc, Selector};
use crate::domains::BinOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContractKind {
    Requires,
    Ensures,
    Invariant,
    ArraySpec,
    Sequence,
}

impl ContractKind {
    pub const ALL: [ContractKind; 5] = [
        ContractKind::Requires,
        ContractKind::Ensures,
        ContractKind::Invariant,
        ContractKind::ArraySpec,
        ContractKind::Sequence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ContractKind::Requires => "requires",
            ContractKind::Ensures => "ensures",
            ContractKind::Invariant => "invariant",
            ContractKind::ArraySpec => "arrayspec",
            ContractKind::Sequence => "sequence",
        }
    }

    pub fn parse(s: &str) -> Option<ContractKind> {
        ContractKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_function_contract(self) -> bool {
        !matches!(self, ContractKind::Invariant)
    }
}

impl fmt::Display for ContractKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceTag {
    Init,
    Cyclic,
}

impl SequenceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SequenceTag::Init => "init",
            SequenceTag::Cyclic => "cyclic",
        }
    }
}

/// Where a contract came from. Declaration order is precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Manual,
    Interface,
    Inferred,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Manual => "manual",
            Origin::Interface => "interface",
            Origin::Inferred => "inferred",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ContractBody {
    Cond(Expr),
    Sequence(SequenceTag),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub kind: ContractKind,
    /// Function name, variable name or `Struct.field`.
    pub subject: String,
    pub body: ContractBody,
    pub origin: Origin,
    /// File the contract was written in.
    pub file: String,
    pub loc: Loc,
}

impl Contract {
    pub fn cond(&self) -> Option<&Expr> {
        match &self.body {
            ContractBody::Cond(e) => Some(e),
            ContractBody::Sequence(_) => None,
        }
    }

    pub fn sequence(&self) -> Option<SequenceTag> {
        match &self.body {
            ContractBody::Sequence(t) => Some(*t),
            ContractBody::Cond(_) => None,
        }
    }

    /// Body text as written between `kind:` and `]]`.
    pub fn body_text(&self) -> String {
        match &self.body {
            ContractBody::Cond(e) => super::printer::expr_to_string(e),
            ContractBody::Sequence(t) => t.as_str().to_string(),
        }
    }

    /// The `[[ kind: body ]]` form.
    pub fn annotation(&self) -> String {
        format!("[[ {}: {} ]]", self.kind, self.body_text())
    }

    /// Stable identifier used to attribute assertion alarms.
    pub fn id(&self) -> String {
        format!(
            "{}:{} {}: {}",
            self.origin.as_str(),
            self.subject,
            self.kind,
            self.body_text()
        )
    }

    /// The symbol a contract constrains: the first place, `return` or
    /// `length(p)` in its condition. Used to decide whether two contracts
    /// talk about the same thing.
    pub fn target(&self) -> String {
        let Some(e) = self.cond() else {
            return String::new();
        };
        let mut found = None;
        e.visit(&mut |x| {
            if found.is_some() {
                return;
            }
            found = match &x.kind {
                ExprKind::Return => Some("return".to_string()),
                ExprKind::Length(p) => Some(format!("length({p})")),
                ExprKind::Place(p) => Some(p.path().unwrap_or_else(|| p.name.clone())),
                _ => None,
            }
        });
        found.unwrap_or_default()
    }
}

impl fmt::Display for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.subject, self.annotation())
    }
}

/// Function contracts (FC) and variable contracts (VC), keyed by subject.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContractSet {
    pub functions: BTreeMap<String, Vec<Contract>>,
    pub variables: BTreeMap<String, Vec<Contract>>,
}

impl ContractSet {
    pub fn new() -> ContractSet {
        ContractSet::default()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.values().all(Vec::is_empty) && self.variables.values().all(Vec::is_empty)
    }

    pub fn len(&self) -> usize {
        self.functions.values().map(Vec::len).sum::<usize>()
            + self.variables.values().map(Vec::len).sum::<usize>()
    }

    pub fn add(&mut self, c: Contract) {
        let map = if c.kind == ContractKind::Invariant {
            &mut self.variables
        } else {
            &mut self.functions
        };
        map.entry(c.subject.clone()).or_default().push(c);
    }

    pub fn for_function(&self, name: &str) -> &[Contract] {
        self.functions.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn for_variable(&self, path: &str) -> &[Contract] {
        self.variables.get(path).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn function_contracts(
        &self,
        name: &str,
        kind: ContractKind,
    ) -> impl Iterator<Item = &Contract> {
        self.for_function(name)
            .iter()
            .filter(move |c| c.kind == kind)
    }

    pub fn sequence_of(&self, name: &str) -> Option<SequenceTag> {
        self.function_contracts(name, ContractKind::Sequence)
            .find_map(Contract::sequence)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Contract> {
        self.functions
            .values()
            .chain(self.variables.values())
            .flatten()
    }

    /// All contracts of `other` appended after ours.
    pub fn extend(&mut self, other: &ContractSet) {
        for c in other.iter() {
            self.add(c.clone());
        }
    }

    pub fn filter(&self, keep: impl Fn(&Contract) -> bool) -> ContractSet {
        let mut out = ContractSet::new();
        for c in self.iter().filter(|c| keep(c)) {
            out.add(c.clone());
        }
        out
    }

    pub fn with_origin(&self, origin: Origin) -> ContractSet {
        self.filter(|c| c.origin == origin)
    }
}

/// Checks that `e` is in the checkable fragment: `&&`/`||` combinations of
/// comparisons whose operands are simple terms.
pub fn check_fragment(e: &Expr) -> Result<(), (Loc, String)> {
    match &e.kind {
        ExprKind::And(a, b) | ExprKind::Or(a, b) => {
            check_fragment(a)?;
            check_fragment(b)
        }
        ExprKind::Cmp(_, a, b) => {
            check_term(a)?;
            check_term(b)
        }
        _ => Err((e.loc, "expected a comparison".to_string())),
    }
}

/// Simple terms: literals, variables, fields, `return`, `length(p)`, and a
/// term plus or minus a literal.
fn check_term(e: &Expr) -> Result<(), (Loc, String)> {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Return | ExprKind::Length(_) => Ok(()),
        ExprKind::Place(p) => match &p.sel {
            Selector::Index(_) => Err((
                e.loc,
                "array elements are outside the contract fragment".into(),
            )),
            _ => Ok(()),
        },
        ExprKind::Unary(super::ast::UnOp::Neg, x)
            if matches!(x.kind, ExprKind::Int(_) | ExprKind::Float(_)) =>
        {
            Ok(())
        }
        ExprKind::Binary(BinOp::Add | BinOp::Sub, a, b) => {
            check_term(a)?;
            match &b.kind {
                ExprKind::Int(_) | ExprKind::Float(_) => Ok(()),
                ExprKind::Place(p) if p.sel == Selector::None => Ok(()),
                _ => Err((b.loc, "only `term + constant` is allowed".into())),
            }
        }
        _ => Err((e.loc, "expression is outside the contract fragment".into())),
    }
}

/// Splits a condition into its top-level conjuncts.
pub fn conjuncts(e: &Expr) -> Vec<&Expr> {
    match &e.kind {
        ExprKind::And(a, b) => {
            let mut v = conjuncts(a);
            v.extend(conjuncts(b));
            v
        }
        _ => vec![e],
    }
}
