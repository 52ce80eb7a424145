//! Abstract memory: scalar cells, arrays, structs and pointer bindings.

use std::collections::BTreeMap;

use crate::domains::{AbstractValue, DomainConfig, ScalarType};

/// Arrays up to this length keep one cell per element; longer arrays share
/// a single summary cell.
pub const EXACT_ARRAY_LIMIT: u32 = 256;

/// Initialization status of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    No,
    Maybe,
    Yes,
}

impl Init {
    pub fn join(self, other: Init) -> Init {
        if self == other {
            self
        } else {
            Init::Maybe
        }
    }

    pub fn leq(self, other: Init) -> bool {
        self == other || other == Init::Maybe
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub ty: ScalarType,
    pub value: AbstractValue,
    pub init: Init,
}

impl Cell {
    pub fn uninit(ty: ScalarType, cfg: &DomainConfig) -> Cell {
        Cell {
            ty,
            value: AbstractValue::bottom_of(ty, cfg),
            init: Init::No,
        }
    }

    pub fn top(ty: ScalarType, cfg: &DomainConfig) -> Cell {
        Cell {
            ty,
            value: AbstractValue::top_of(ty, cfg),
            init: Init::Yes,
        }
    }

    pub fn with(ty: ScalarType, value: AbstractValue) -> Cell {
        Cell {
            ty,
            value,
            init: Init::Yes,
        }
    }

    fn join(&self, other: &Cell, cfg: &DomainConfig) -> Cell {
        Cell {
            ty: self.ty,
            value: join_values(&self.value, &other.value, cfg),
            init: self.init.join(other.init),
        }
    }

    fn widen(&self, new: &Cell, cfg: &DomainConfig) -> Cell {
        Cell {
            ty: self.ty,
            value: self
                .value
                .widen_for(&new.value, self.ty, cfg)
                .expect("cells of one variable share a representation"),
            init: self.init.join(new.init),
        }
    }

    fn leq(&self, other: &Cell) -> bool {
        self.init.leq(other.init) && self.value.leq(&other.value)
    }

    /// Same cell as seen on a path where it may not exist yet.
    fn weaken(&self) -> Cell {
        Cell {
            init: self.init.join(Init::No),
            ..self.clone()
        }
    }
}

pub fn join_values(a: &AbstractValue, b: &AbstractValue, cfg: &DomainConfig) -> AbstractValue {
    a.join_with(b, cfg.set_cap)
        .expect("values of one variable share a representation")
}

/// Where a pointer parameter points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Addr {
    Global(String),
    Local {
        frame: usize,
        scope: usize,
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Slot {
    Scalar(Cell),
    /// `cells.len()` is `len`, or 1 for a summarized array.
    Array {
        len: u32,
        cells: Vec<Cell>,
    },
    Struct(Vec<(String, Cell)>),
    /// `None` is NULL, an array of length zero.
    Ptr(Option<Addr>),
}

impl Slot {
    pub fn array(len: u32, cell: Cell) -> Slot {
        let n = if len <= EXACT_ARRAY_LIMIT {
            len as usize
        } else {
            1
        };
        Slot::Array {
            len,
            cells: vec![cell; n],
        }
    }

    pub fn cells(&self) -> Vec<&Cell> {
        match self {
            Slot::Scalar(c) => vec![c],
            Slot::Array { cells, .. } => cells.iter().collect(),
            Slot::Struct(fs) => fs.iter().map(|(_, c)| c).collect(),
            Slot::Ptr(_) => Vec::new(),
        }
    }

    pub fn cells_mut(&mut self) -> Vec<&mut Cell> {
        match self {
            Slot::Scalar(c) => vec![c],
            Slot::Array { cells, .. } => cells.iter_mut().collect(),
            Slot::Struct(fs) => fs.iter_mut().map(|(_, c)| c).collect(),
            Slot::Ptr(_) => Vec::new(),
        }
    }

    fn zip_cells(&self, other: &Slot, f: &mut dyn FnMut(&Cell, &Cell) -> Cell) -> Slot {
        match (self, other) {
            (Slot::Scalar(a), Slot::Scalar(b)) => Slot::Scalar(f(a, b)),
            (Slot::Array { len, cells: a }, Slot::Array { cells: b, .. }) => Slot::Array {
                len: *len,
                cells: a.iter().zip(b).map(|(x, y)| f(x, y)).collect(),
            },
            (Slot::Struct(a), Slot::Struct(b)) => Slot::Struct(
                a.iter()
                    .zip(b)
                    .map(|((n, x), (_, y))| (n.clone(), f(x, y)))
                    .collect(),
            ),
            (Slot::Ptr(a), Slot::Ptr(_)) => Slot::Ptr(a.clone()),
            _ => panic!("slots of one variable share a shape"),
        }
    }

    fn leq(&self, other: &Slot) -> bool {
        match (self, other) {
            (Slot::Ptr(a), Slot::Ptr(b)) => a == b,
            _ => {
                let (a, b) = (self.cells(), other.cells());
                a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.leq(y))
            }
        }
    }

    fn weaken(&self) -> Slot {
        let mut s = self.clone();
        for c in s.cells_mut() {
            *c = c.weaken();
        }
        s
    }
}

pub type Scope = BTreeMap<String, Slot>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    pub scopes: Vec<Scope>,
}

/// Abstract state at a program point. An unreachable state keeps its
/// shape so scopes can still be pushed and popped, but its contents are
/// meaningless.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub reachable: bool,
    pub globals: BTreeMap<String, Slot>,
    pub frames: Vec<Frame>,
}

fn join_maps(a: &Scope, b: &Scope, f: &mut dyn FnMut(&Cell, &Cell) -> Cell) -> Scope {
    let mut out = Scope::new();
    for (k, sa) in a {
        match b.get(k) {
            Some(sb) => {
                out.insert(k.clone(), sa.zip_cells(sb, f));
            }
            None => {
                out.insert(k.clone(), sa.weaken());
            }
        }
    }
    for (k, sb) in b {
        if !a.contains_key(k) {
            out.insert(k.clone(), sb.weaken());
        }
    }
    out
}

impl State {
    pub fn new() -> State {
        State {
            reachable: true,
            globals: BTreeMap::new(),
            frames: Vec::new(),
        }
    }

    pub fn bottom(&self) -> State {
        State {
            reachable: false,
            ..self.clone()
        }
    }

    pub fn set_bottom(&mut self) {
        self.reachable = false;
    }

    fn combine(&self, other: &State, f: &mut dyn FnMut(&Cell, &Cell) -> Cell) -> State {
        if !self.reachable {
            return other.clone();
        }
        if !other.reachable {
            return self.clone();
        }
        let globals = join_maps(&self.globals, &other.globals, f);
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(fa, fb)| Frame {
                scopes: fa
                    .scopes
                    .iter()
                    .zip(&fb.scopes)
                    .map(|(sa, sb)| join_maps(sa, sb, f))
                    .collect(),
            })
            .collect();
        State {
            reachable: true,
            globals,
            frames,
        }
    }

    pub fn join(&self, other: &State, cfg: &DomainConfig) -> State {
        self.combine(other, &mut |a, b| a.join(b, cfg))
    }

    pub fn widen(&self, new: &State, cfg: &DomainConfig) -> State {
        self.combine(new, &mut |a, b| a.widen(b, cfg))
    }

    pub fn leq(&self, other: &State) -> bool {
        if !self.reachable {
            return true;
        }
        if !other.reachable {
            return false;
        }
        let maps_leq = |a: &Scope, b: &Scope| {
            a.len() == b.len() && a.iter().all(|(k, s)| b.get(k).is_some_and(|t| s.leq(t)))
        };
        maps_leq(&self.globals, &other.globals)
            && self.frames.len() == other.frames.len()
            && self.frames.iter().zip(&other.frames).all(|(fa, fb)| {
                fa.scopes.len() == fb.scopes.len()
                    && fa
                        .scopes
                        .iter()
                        .zip(&fb.scopes)
                        .all(|(a, b)| maps_leq(a, b))
            })
    }

    pub fn frame(&self) -> &Frame {
        self.frames.last().expect("active frame")
    }

    pub fn frame_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("active frame")
    }

    pub fn push_scope(&mut self) {
        self.frame_mut().scopes.push(Scope::new());
    }

    pub fn scope_depth(&self) -> usize {
        self.frames.last().map_or(0, |f| f.scopes.len())
    }

    pub fn truncate_scopes(&mut self, depth: usize) {
        if let Some(f) = self.frames.last_mut() {
            f.scopes.truncate(depth);
        }
    }

    /// Joins `s` into an optional accumulator.
    pub fn accumulate(acc: &mut Option<State>, s: State, cfg: &DomainConfig) {
        if !s.reachable {
            if acc.is_none() {
                *acc = Some(s);
            }
            return;
        }
        *acc = Some(match acc.take() {
            Some(a) => a.join(&s, cfg),
            None => s,
        });
    }
}

impl Default for State {
    fn default() -> Self {
        State::new()
    }
}
