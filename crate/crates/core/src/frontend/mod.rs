//! Mini-C frontend: lexing, parsing, contract annotations, pretty-printing
//! and project-level symbol resolution.

mod ast;
mod check;
mod contract;
mod lexer;
mod parser;
mod printer;
mod program;

pub use ast::*;
pub use check::{check_contract, check_module};
pub use contract::{
    check_fragment, conjuncts, Contract, ContractBody, ContractKind, ContractSet, Origin,
    SequenceTag,
};
pub use parser::{parse_condition, parse_contracts, parse_module};
pub use printer::{contracts_to_string, expr_to_string, print_module, type_to_string};
pub use program::{resolve_project, Program};

/// Errors from parsing and resolution. Every variant names a location.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrontendError {
    #[error("{loc}: syntax error: {message}")]
    Syntax { loc: Loc, message: String },
    #[error("{loc}: contract error: {message}")]
    Contract { loc: Loc, message: String },
    #[error("{file}:{loc}: {message}")]
    Resolve {
        file: String,
        loc: Loc,
        message: String,
    },
    #[error("{file}:{source}")]
    InFile {
        file: String,
        #[source]
        source: Box<FrontendError>,
    },
}

impl FrontendError {
    pub fn loc(&self) -> Option<Loc> {
        match self {
            FrontendError::Syntax { loc, .. }
            | FrontendError::Contract { loc, .. }
            | FrontendError::Resolve { loc, .. } => Some(*loc),
            FrontendError::InFile { source, .. } => source.loc(),
        }
    }

    /// Tags a file-less error with the file it came from.
    pub fn in_file(self, file: &str) -> FrontendError {
        match self {
            e @ (FrontendError::Resolve { .. } | FrontendError::InFile { .. }) => e,
            e => FrontendError::InFile {
                file: file.to_string(),
                source: Box::new(e),
            },
        }
    }
}

#[cfg(test)]
mod roundtrip {
    use super::*;
    use proptest::prelude::*;

    /// Serialized AST with every `loc` field removed.
    pub(crate) fn strip_locs(m: &Module) -> serde_json::Value {
        fn strip(v: &mut serde_json::Value) {
            match v {
                serde_json::Value::Object(map) => {
                    map.remove("loc");
                    map.values_mut().for_each(strip);
                }
                serde_json::Value::Array(xs) => xs.iter_mut().for_each(strip),
                _ => {}
            }
        }
        let mut v = serde_json::to_value(m).unwrap();
        strip(&mut v);
        v
    }

    const SAMPLE: &str = r#"
const int N = 4;
enum Mode { OFF, ON = 3 };
typedef struct {
  /// [[ invariant: Id <= N ]]
  uint8 Id;
  float level;
} LED;
/// [[ invariant: count >= 0 && count <= 10 ]]
static int count = 0;
int table[N] = {1, 2, 3, 4};
LED led;
extern float gain;
/// [[ requires: x >= 0.0 ]]
/// [[ ensures: return >= 0.0 ]]
float sqrt(float x);
/// [[ arrayspec: length(p) >= n ]]
int sum(const int *p, int n);
/// [[ sequence: cyclic ]]
int step(int a, uint8 b) {
  int i;
  float f = (float)a * -1.5;
  for (i = 0; i < N; i++) {
    if (!(a > 0) || b == 2) { a -= 1; } else if (a >> 1 < 3) { a = a % (b + 1); }
  }
  switch (a) { case OFF: case -1: count = count + 1; break; default: { led.Id = 2; } }
  while (i != 0) { i = i - 1; }
  __known_fact(a > 0 && a < 100);
  __global_assert(led.Id, led.Id <= 4);
  gain = sqrt(f - (1.0 - 2.0));
  return a - (b - i) * 2 + table[i % 4];
}
"#;

    #[test]
    fn sample_round_trips() {
        let m = parse_module(SAMPLE, "sample.mc").unwrap();
        let printed = print_module(&m);
        let again =
            parse_module(&printed, "sample.mc").unwrap_or_else(|e| panic!("{e}\n{printed}"));
        assert_eq!(strip_locs(&m), strip_locs(&again), "{printed}");
        assert_eq!(print_module(&again), printed);
    }

    #[test]
    fn parsing_is_deterministic() {
        let a = serde_json::to_string(&parse_module(SAMPLE, "s.mc").unwrap()).unwrap();
        let b = serde_json::to_string(&parse_module(SAMPLE, "s.mc").unwrap()).unwrap();
        assert_eq!(a, b);
    }

    fn arb_expr() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            (0i64..300).prop_map(|v| v.to_string()),
            prop_oneof![Just("x"), Just("y"), Just("a[1]"), Just("s.f")].prop_map(String::from),
            (0u32..2000).prop_map(|v| format!("{:?}", v as f64 / 8.0)),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            let ops = prop_oneof![
                Just("+"),
                Just("-"),
                Just("*"),
                Just("/"),
                Just("%"),
                Just("<<"),
                Just(">>"),
                Just("<"),
                Just("<="),
                Just("=="),
                Just("!="),
                Just("&&"),
                Just("||")
            ];
            prop_oneof![
                (inner.clone(), ops, inner.clone())
                    .prop_map(|(a, o, b)| format!("({a}) {o} ({b})")),
                (inner.clone(), ops_no_paren()).prop_map(|(a, o)| format!("{o}({a})")),
                inner.clone().prop_map(|a| format!("(int)({a})")),
                (inner.clone(), inner).prop_map(|(a, b)| format!("g({a}, {b})")),
            ]
        })
    }

    fn ops_no_paren() -> impl Strategy<Value = &'static str> {
        prop_oneof![Just("-"), Just("!")]
    }

    proptest! {
        #[test]
        fn printed_modules_reparse_identically(e in arb_expr(), c in 0i64..50) {
            let src = format!(
                "struct S {{ int f; }};\nstruct S s;\nint a[4];\nint g(int p, int q);\n/// [[ requires: x >= {c} || y < -{c} ]]\nint h(int x, int y) {{\n  int z = {e};\n  if ({e}) {{ z += 1; }}\n  return z;\n}}\n"
            );
            let m = parse_module(&src, "p.mc").unwrap();
            let printed = print_module(&m);
            let again = parse_module(&printed, "p.mc").unwrap();
            prop_assert_eq!(strip_locs(&m), strip_locs(&again));
        }
    }
}
