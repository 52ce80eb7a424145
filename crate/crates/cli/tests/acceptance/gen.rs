//! Random Mini-C programs for soundness fuzzing.
//!
//! Every program defines `void f(int a, int b)`. Loops run at most 8 times,
//! arrays are small, and the operators cover every alarm class the concrete
//! interpreter can raise.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const MAX_LOOP: u32 = 8;

struct Gen {
    rng: StdRng,
    /// Assignable integer locals of `f`.
    locals: Vec<String>,
    /// Loop counters currently in scope (read-only).
    counters: Vec<String>,
    next_counter: usize,
    array_len: u32,
    has_helper: bool,
    in_helper: bool,
    out: String,
}

pub fn program(seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let array_len = rng.gen_range(2..=6);
    let mut g = Gen {
        rng,
        locals: Vec::new(),
        counters: Vec::new(),
        next_counter: 0,
        array_len,
        has_helper: false,
        in_helper: false,
        out: String::new(),
    };
    g.globals();
    if g.rng.gen_bool(0.5) {
        g.helper();
    }
    g.entry();
    g.out
}

impl Gen {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn globals(&mut self) {
        self.line(0, "int g = 0;");
        if self.rng.gen_bool(0.3) {
            self.line(0, "int u;");
        } else {
            self.line(0, "int u = 1;");
        }
        let n = self.array_len;
        if self.rng.gen_bool(0.8) {
            let init: Vec<String> = (0..n)
                .map(|_| self.rng.gen_range(-9..=9).to_string())
                .collect();
            self.line(0, &format!("int t[{n}] = {{{}}};", init.join(", ")));
        } else {
            self.line(0, &format!("int t[{n}];"));
        }
        self.line(0, "unsigned char c = 0;");
        self.line(0, "float fv = 0.0;");
    }

    fn helper(&mut self) {
        self.has_helper = true;
        self.in_helper = true;
        self.locals = vec!["x".into()];
        self.line(0, "int h(int x) {");
        let n = self.rng.gen_range(0..=2);
        for _ in 0..n {
            self.stmt(1, 1);
        }
        let e = self.expr(2);
        self.line(1, &format!("return {e};"));
        self.line(0, "}");
        self.in_helper = false;
    }

    fn entry(&mut self) {
        self.line(0, "void f(int a, int b) {");
        self.locals = vec!["a".into(), "b".into()];
        let init = self.expr(1);
        self.line(1, &format!("int l0 = {init};"));
        self.locals.push("l0".into());
        if self.rng.gen_bool(0.3) {
            self.line(1, "int l1;");
        } else {
            let init = self.expr(1);
            self.line(1, &format!("int l1 = {init};"));
        }
        self.locals.push("l1".into());
        for i in 0..4 {
            self.line(1, &format!("int i{i};"));
        }
        let n = self.rng.gen_range(3..=7);
        for _ in 0..n {
            self.stmt(1, 0);
        }
        self.line(0, "}");
    }

    fn constant(&mut self) -> String {
        let c: i64 = *[0, 1, 2, 3, -1, -2, 5, 7, 8, 16, 64, 100, -100, 127]
            .choose(&mut self.rng)
            .unwrap();
        if c < 0 {
            format!("({c})")
        } else {
            c.to_string()
        }
    }

    fn leaf(&mut self) -> String {
        match self.rng.gen_range(0..10) {
            0..=3 => {
                let mut names = self.locals.clone();
                names.extend(self.counters.iter().cloned());
                names.choose(&mut self.rng).unwrap().clone()
            }
            4 => "g".into(),
            5 => "u".into(),
            6 => "c".into(),
            _ => self.constant(),
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.leaf();
        }
        match self.rng.gen_range(0..12) {
            0 => format!("-{}", self.leaf()),
            1 => {
                let i = self.expr(depth - 1);
                format!("t[{i}]")
            }
            2 if self.has_helper && !self.in_helper => {
                let x = self.expr(depth - 1);
                format!("h({x})")
            }
            _ => {
                let op = *["+", "-", "*", "/", "%", "<<", ">>", "+", "-", "*"]
                    .choose(&mut self.rng)
                    .unwrap();
                let l = self.expr(depth - 1);
                let r = self.expr(depth - 1);
                format!("({l} {op} {r})")
            }
        }
    }

    fn cond(&mut self, depth: u32) -> String {
        let op = *["<", "<=", ">", ">=", "==", "!="]
            .choose(&mut self.rng)
            .unwrap();
        let l = self.expr(1);
        let r = self.expr(1);
        let base = format!("{l} {op} {r}");
        if depth > 0 && self.rng.gen_bool(0.25) {
            let other = self.cond(depth - 1);
            let join = if self.rng.gen_bool(0.5) { "&&" } else { "||" };
            format!("{base} {join} {other}")
        } else {
            base
        }
    }

    fn target(&mut self) -> String {
        match self.rng.gen_range(0..8) {
            0 => "g".into(),
            1 => "c".into(),
            2 => {
                let i = self.expr(1);
                format!("t[{i}]")
            }
            _ => {
                let names: Vec<String> = self
                    .locals
                    .iter()
                    .filter(|n| !n.starts_with('i'))
                    .cloned()
                    .collect();
                names.choose(&mut self.rng).unwrap().clone()
            }
        }
    }

    fn block(&mut self, depth: usize, nest: u32) {
        let n = self.rng.gen_range(1..=3);
        for _ in 0..n {
            self.stmt(depth, nest + 1);
        }
    }

    fn stmt(&mut self, depth: usize, nest: u32) {
        let roll = if nest >= 2 {
            self.rng.gen_range(0..5)
        } else {
            self.rng.gen_range(0..11)
        };
        match roll {
            0..=2 => {
                let t = self.target();
                let e = self.expr(2);
                self.line(depth, &format!("{t} = {e};"));
            }
            3 => {
                let e = self.expr(1);
                self.line(depth, &format!("fv = {e} * 0.5;"));
                let t = self.target();
                let e = self.expr(1);
                self.line(depth, &format!("{t} = fv * {e};"));
            }
            4 => {
                let c = self.cond(1);
                self.line(depth, &format!("__assert({c});"));
            }
            5 | 6 => {
                let c = self.cond(1);
                self.line(depth, &format!("if ({c}) {{"));
                self.block(depth + 1, nest);
                if self.rng.gen_bool(0.5) {
                    self.line(depth, "} else {");
                    self.block(depth + 1, nest);
                }
                self.line(depth, "}");
            }
            7 | 8 if !self.in_helper && self.next_counter < 4 => {
                let i = format!("i{}", self.next_counter);
                self.next_counter += 1;
                let n = self.rng.gen_range(1..=MAX_LOOP);
                self.line(
                    depth,
                    &format!("for ({i} = 0; {i} < {n}; {i} = {i} + 1) {{"),
                );
                self.counters.push(i);
                self.block(depth + 1, nest);
                self.counters.pop();
                self.line(depth, "}");
            }
            9 => {
                let e = self.expr(1);
                self.line(depth, &format!("switch ({e}) {{"));
                self.line(depth + 1, "case 0:");
                self.block(depth + 2, nest + 1);
                self.line(depth + 2, "break;");
                self.line(depth + 1, "case 1:");
                self.block(depth + 2, nest + 1);
                self.line(depth + 1, "default:");
                self.block(depth + 2, nest + 1);
                self.line(depth, "}");
            }
            10 if self.rng.gen_bool(0.2) => {
                let e = self.expr(1);
                self.line(depth, &format!("g = ext({e});"));
            }
            _ => {
                let t = self.target();
                let e = self.expr(1);
                self.line(depth, &format!("{t} = {e};"));
            }
        }
    }
}
