//! Abstract arithmetic, comparison refinement and conversions.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alarm::{AlarmClass, AlarmCondition};

use super::concrete;
use super::config::{DomainConfig, IntDomain, ScalarType};
use super::float::{FloatInterval, FLOAT_MAX, FLOAT_OVERFLOW};
use super::interval::IntInterval;
use super::set::FiniteSet;
use super::value::{AbstractValue, Scalar};
use super::zero::ZeroValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
}

impl BinOp {
    pub const ALL: [BinOp; 7] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
        BinOp::Shl,
        BinOp::Shr,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
        CmpOp::Eq,
        CmpOp::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    /// Logical negation: `!(x < y)` is `x >= y`.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }

    /// Operand swap: `x < y` is `y > x`.
    pub fn swap(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Result of an abstract binary operation.
#[derive(Debug, Clone, PartialEq)]
pub struct BinopOutcome {
    /// Values of the non-erroneous executions (plus wrapped unsigned results).
    pub value: AbstractValue,
    pub alarms: Vec<AlarmCondition>,
    /// Right operand restricted to the values that do not fail, for
    /// division, modulo and shifts.
    pub rhs_refined: Option<AbstractValue>,
}

/// Three-valued truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

const PAIRWISE_LIMIT: usize = 4096;
const FLOAT_TINY: f64 = 1.401298464324817e-45;

/// Abstract semantics of `a op b` in type `ty`.
///
/// For every `x ∈ γ(a)`, `y ∈ γ(b)` where the operation is defined, the
/// result is in `γ(value)`; every failing pair is covered by an alarm
/// condition of the matching class.
pub fn abs_binop(
    op: BinOp,
    a: &AbstractValue,
    b: &AbstractValue,
    ty: ScalarType,
    cfg: &DomainConfig,
) -> BinopOutcome {
    match (a, b) {
        (AbstractValue::Zero(x), AbstractValue::Zero(y)) => zero_binop(op, *x, *y),
        (AbstractValue::Float(_), _) | (_, AbstractValue::Float(_)) => {
            let fa = a.float_hull().unwrap_or(FloatInterval::full());
            let fb = b.float_hull().unwrap_or(FloatInterval::full());
            float_binop(op, fa, fb)
        }
        (AbstractValue::Set(sa), AbstractValue::Set(sb)) => match (sa.members(), sb.members()) {
            (Some(ma), Some(mb)) if ma.len() * mb.len() <= PAIRWISE_LIMIT => {
                pairwise_binop(op, ma, mb, ty, cfg)
            }
            _ => {
                let out = int_binop(op, sa.hull(), sb.hull(), ty, cfg.int_bits);
                BinopOutcome {
                    value: AbstractValue::Set(FiniteSet::from_interval(
                        out.value.int_hull().unwrap(),
                        cfg.set_cap,
                    )),
                    rhs_refined: out.rhs_refined.map(|r| {
                        AbstractValue::Set(sb.meet(
                            &FiniteSet::from_interval(r.int_hull().unwrap(), cfg.set_cap),
                            cfg.set_cap,
                        ))
                    }),
                    alarms: out.alarms,
                }
            }
        },
        _ => {
            let ia = a.int_hull().unwrap_or(IntInterval::BOTTOM);
            let ib = b.int_hull().unwrap_or(IntInterval::BOTTOM);
            int_binop(op, ia, ib, ty, cfg.int_bits)
        }
    }
}

fn zero_binop(op: BinOp, a: ZeroValue, b: ZeroValue) -> BinopOutcome {
    let mut alarms = Vec::new();
    let mut rhs_refined = None;
    let value = match op {
        BinOp::Add => a.add(b),
        BinOp::Sub => a.sub(b),
        BinOp::Mul => a.mul(b),
        BinOp::Div | BinOp::Rem => {
            if a != ZeroValue::Bottom && b.contains(0) {
                alarms.push(AlarmCondition::new(
                    AlarmClass::DMZ,
                    b == ZeroValue::Zero,
                    "divisor may be zero",
                ));
            }
            rhs_refined = Some(AbstractValue::Zero(b.meet(ZeroValue::NonZero)));
            if op == BinOp::Div {
                a.div(b)
            } else {
                a.rem(b)
            }
        }
        BinOp::Shl => {
            if a == ZeroValue::Bottom || b == ZeroValue::Bottom {
                ZeroValue::Bottom
            } else if a == ZeroValue::Zero {
                ZeroValue::Zero
            } else {
                ZeroValue::Top
            }
        }
        BinOp::Shr => {
            if a == ZeroValue::Bottom || b == ZeroValue::Bottom {
                ZeroValue::Bottom
            } else if a == ZeroValue::Zero {
                ZeroValue::Zero
            } else {
                ZeroValue::Top
            }
        }
    };
    BinopOutcome {
        value: AbstractValue::Zero(value),
        alarms,
        rhs_refined,
    }
}

fn corners(xs: [i128; 2], ys: [i128; 2], f: impl Fn(i128, i128) -> i128) -> (i128, i128) {
    let mut lo = i128::MAX;
    let mut hi = i128::MIN;
    for x in xs {
        for y in ys {
            let r = f(x, y);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}

/// Range check of an exact result range against `ty`.
fn fit_range(lo: i128, hi: i128, ty: ScalarType, alarms: &mut Vec<AlarmCondition>) -> IntInterval {
    let (tl, th) = ty.int_range().expect("integer type");
    let (tl, th) = (tl as i128, th as i128);
    if tl <= lo && hi <= th {
        return IntInterval::from_i128(lo, hi);
    }
    let definite = hi < tl || lo > th;
    alarms.push(AlarmCondition::new(
        AlarmClass::IRO,
        definite,
        format!("result may exceed [{tl}, {th}]"),
    ));
    if definite {
        return IntInterval::BOTTOM;
    }
    match ty {
        ScalarType::Unsigned { bits } => {
            let m = 1i128 << bits;
            if hi - lo + 1 >= m {
                IntInterval::from_i128(tl, th)
            } else {
                let (wl, wh) = (lo.rem_euclid(m), hi.rem_euclid(m));
                if wl <= wh {
                    IntInterval::from_i128(wl, wh)
                } else {
                    IntInterval::from_i128(tl, th)
                }
            }
        }
        _ => IntInterval::from_i128(lo.max(tl), hi.min(th)),
    }
}

fn int_binop(
    op: BinOp,
    a: IntInterval,
    b: IntInterval,
    ty: ScalarType,
    int_bits: u8,
) -> BinopOutcome {
    let bottom = |alarms, rhs| BinopOutcome {
        value: AbstractValue::Int(IntInterval::BOTTOM),
        alarms,
        rhs_refined: rhs,
    };
    let (Some((al, ah)), Some((bl, bh))) = (a.bounds(), b.bounds()) else {
        return bottom(Vec::new(), None);
    };
    let (al, ah, bl, bh) = (al as i128, ah as i128, bl as i128, bh as i128);
    let mut alarms = Vec::new();
    let mut rhs_refined = None;
    let (lo, hi) = match op {
        BinOp::Add => (al + bl, ah + bh),
        BinOp::Sub => (al - bh, ah - bl),
        BinOp::Mul => corners([al, ah], [bl, bh], |x, y| x * y),
        BinOp::Div | BinOp::Rem => {
            if bl <= 0 && 0 <= bh {
                alarms.push(AlarmCondition::new(
                    AlarmClass::DMZ,
                    bl == 0 && bh == 0,
                    "divisor may be zero",
                ));
            }
            let refined = b.remove(0);
            rhs_refined = Some(AbstractValue::Int(refined));
            let mut parts = Vec::new();
            if bl <= -1 {
                parts.push((bl, bh.min(-1)));
            }
            if bh >= 1 {
                parts.push((bl.max(1), bh));
            }
            if parts.is_empty() {
                return bottom(alarms, rhs_refined);
            }
            if op == BinOp::Rem && !ty.is_unsigned() {
                let (tl, _) = ty.int_range().unwrap();
                if al <= tl as i128 && tl as i128 <= ah && bl <= -1 && -1 <= bh {
                    alarms.push(AlarmCondition::new(
                        AlarmClass::IRO,
                        al == ah && bl == -1 && bh == -1,
                        "minimum value modulo -1",
                    ));
                }
            }
            let mut lo = i128::MAX;
            let mut hi = i128::MIN;
            for (pl, ph) in parts {
                let (l, h) = if op == BinOp::Div {
                    corners([al, ah], [pl, ph], |x, y| x / y)
                } else {
                    rem_range(al, ah, pl, ph)
                };
                lo = lo.min(l);
                hi = hi.max(h);
            }
            (lo, hi)
        }
        BinOp::Shl | BinOp::Shr => {
            let w = ty.bit_width(int_bits) as i128;
            let (vl, vh) = (bl.max(0), bh.min(w - 1));
            if bl < 0 || bh > w - 1 {
                alarms.push(AlarmCondition::new(
                    AlarmClass::ISA,
                    vl > vh,
                    format!("shift count may leave [0, {}]", w - 1),
                ));
            }
            rhs_refined = Some(AbstractValue::Int(IntInterval::from_i128(vl, vh)));
            if vl > vh {
                return bottom(alarms, rhs_refined);
            }
            if op == BinOp::Shl {
                corners([al, ah], [vl, vh], |x, s| x * (1i128 << s))
            } else {
                corners([al, ah], [vl, vh], |x, s| x >> s)
            }
        }
    };
    let value = fit_range(lo, hi, ty, &mut alarms);
    BinopOutcome {
        value: AbstractValue::Int(value),
        alarms,
        rhs_refined,
    }
}

/// Range of `x % y` for `x ∈ [al, ah]` and a sign-constant divisor range.
fn rem_range(al: i128, ah: i128, pl: i128, ph: i128) -> (i128, i128) {
    let min_abs = pl.abs().min(ph.abs());
    let max_abs = pl.abs().max(ph.abs());
    if al.abs().max(ah.abs()) < min_abs {
        return (al, ah);
    }
    let m = max_abs - 1;
    let lo = if al >= 0 { 0 } else { al.max(-m) };
    let hi = if ah <= 0 { 0 } else { ah.min(m) };
    (lo, hi)
}

fn pairwise_binop(
    op: BinOp,
    xs: &BTreeSet<i64>,
    ys: &BTreeSet<i64>,
    ty: ScalarType,
    cfg: &DomainConfig,
) -> BinopOutcome {
    let total = xs.len() * ys.len();
    let mut results = BTreeSet::new();
    let mut counts = std::collections::BTreeMap::<AlarmClass, usize>::new();
    for &x in xs {
        for &y in ys {
            match concrete::int_binop(op, x, y, ty, cfg.int_bits) {
                Ok(r) => {
                    results.insert(r);
                }
                Err(e) => {
                    *counts.entry(e.class).or_default() += 1;
                    if let Some(w) = e.wrapped {
                        results.insert(w);
                    }
                }
            }
        }
    }
    let alarms: Vec<AlarmCondition> = counts
        .iter()
        .map(|(&class, &n)| {
            AlarmCondition::new(
                class,
                n == total,
                format!("{n} of {total} operand pairs fail"),
            )
        })
        .collect();
    // definite failures abort, even when wrapped values exist
    if alarms.iter().any(|a| a.definite) || counts.values().sum::<usize>() == total {
        results.clear();
    }
    let rhs_refined = match op {
        BinOp::Div | BinOp::Rem => Some(
            ys.iter()
                .copied()
                .filter(|&y| y != 0)
                .collect::<BTreeSet<_>>(),
        ),
        BinOp::Shl | BinOp::Shr => {
            let w = ty.bit_width(cfg.int_bits) as i64;
            Some(ys.iter().copied().filter(|&y| 0 <= y && y < w).collect())
        }
        _ => None,
    };
    BinopOutcome {
        value: AbstractValue::Set(FiniteSet::from_members(results, cfg.set_cap)),
        alarms,
        rhs_refined: rhs_refined.map(|s| AbstractValue::Set(FiniteSet::Members(s))),
    }
}

fn float_binop(op: BinOp, a: FloatInterval, b: FloatInterval) -> BinopOutcome {
    let mut alarms = Vec::new();
    let mut rhs_refined = None;
    let (Some((al, ah)), Some((bl, bh))) = (a.bounds(), b.bounds()) else {
        return BinopOutcome {
            value: AbstractValue::Float(FloatInterval::BOTTOM),
            alarms,
            rhs_refined,
        };
    };
    let fcorners = |ys: [f64; 2], f: &dyn Fn(f64, f64) -> f64| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in [al, ah] {
            for y in ys {
                let r = f(x, y);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        (lo, hi)
    };
    let (lo, hi) = match op {
        BinOp::Add => (al + bl, ah + bh),
        BinOp::Sub => (al - bh, ah - bl),
        BinOp::Mul => fcorners([bl, bh], &|x, y| x * y),
        BinOp::Div => {
            if bl <= 0.0 && 0.0 <= bh {
                alarms.push(AlarmCondition::new(
                    AlarmClass::DMZ,
                    bl == 0.0 && bh == 0.0,
                    "divisor may be zero",
                ));
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut refined = FloatInterval::BOTTOM;
            if bl < 0.0 {
                let part = [bl, bh.min(-FLOAT_TINY)];
                refined = refined.join(&FloatInterval::new(part[0], part[1]));
                let (l, h) = fcorners(part, &|x, y| x / y);
                lo = lo.min(l);
                hi = hi.max(h);
            }
            if bh > 0.0 {
                let part = [bl.max(FLOAT_TINY), bh];
                refined = refined.join(&FloatInterval::new(part[0], part[1]));
                let (l, h) = fcorners(part, &|x, y| x / y);
                lo = lo.min(l);
                hi = hi.max(h);
            }
            rhs_refined = Some(AbstractValue::Float(refined));
            if refined.is_bottom() {
                return BinopOutcome {
                    value: AbstractValue::Float(FloatInterval::BOTTOM),
                    alarms,
                    rhs_refined,
                };
            }
            (lo, hi)
        }
        BinOp::Rem | BinOp::Shl | BinOp::Shr => (-FLOAT_MAX, FLOAT_MAX),
    };
    // For + - * / on f32 operands, rounding the f64 result to f32 gives the
    // same value as rounding the exact result, and rounding is monotone.
    if hi >= FLOAT_OVERFLOW || lo <= -FLOAT_OVERFLOW {
        let definite = lo >= FLOAT_OVERFLOW || hi <= -FLOAT_OVERFLOW;
        alarms.push(AlarmCondition::new(
            AlarmClass::IRO,
            definite,
            "float result may overflow",
        ));
        if definite {
            return BinopOutcome {
                value: AbstractValue::Float(FloatInterval::BOTTOM),
                alarms,
                rhs_refined,
            };
        }
    }
    BinopOutcome {
        value: AbstractValue::Float(FloatInterval::new(
            lo.max(-FLOAT_MAX) as f32 as f64,
            hi.min(FLOAT_MAX) as f32 as f64,
        )),
        alarms,
        rhs_refined,
    }
}

/// Evaluates `a op b` to a three-valued truth.
pub fn compare(a: &AbstractValue, op: CmpOp, b: &AbstractValue) -> Truth {
    if a.is_bottom() || b.is_bottom() {
        return Truth::Unknown;
    }
    if let (AbstractValue::Set(sa), AbstractValue::Set(sb)) = (a, b) {
        if let (Some(ma), Some(mb)) = (sa.members(), sb.members()) {
            if ma.len() * mb.len() <= PAIRWISE_LIMIT {
                let mut any_true = false;
                let mut any_false = false;
                for &x in ma {
                    for &y in mb {
                        if concrete::compare(op, x, y) {
                            any_true = true;
                        } else {
                            any_false = true;
                        }
                    }
                }
                return match (any_true, any_false) {
                    (true, false) => Truth::True,
                    (false, true) => Truth::False,
                    _ => Truth::Unknown,
                };
            }
        }
    }
    if let (AbstractValue::Zero(x), AbstractValue::Zero(y)) = (a, b) {
        return match (op, x, y) {
            (CmpOp::Eq, ZeroValue::Zero, ZeroValue::Zero) => Truth::True,
            (CmpOp::Ne, ZeroValue::Zero, ZeroValue::Zero) => Truth::False,
            (CmpOp::Eq, ZeroValue::Zero, ZeroValue::NonZero)
            | (CmpOp::Eq, ZeroValue::NonZero, ZeroValue::Zero) => Truth::False,
            (CmpOp::Ne, ZeroValue::Zero, ZeroValue::NonZero)
            | (CmpOp::Ne, ZeroValue::NonZero, ZeroValue::Zero) => Truth::True,
            _ => Truth::Unknown,
        };
    }
    let (Some((al, ah)), Some((bl, bh))) = (a.numeric_bounds(), b.numeric_bounds()) else {
        return Truth::Unknown;
    };
    let always = match op {
        CmpOp::Lt => ah < bl,
        CmpOp::Le => ah <= bl,
        CmpOp::Gt => al > bh,
        CmpOp::Ge => al >= bh,
        CmpOp::Eq => al == ah && bl == bh && al == bl,
        CmpOp::Ne => ah < bl || bh < al,
    };
    let never = match op {
        CmpOp::Lt => al >= bh,
        CmpOp::Le => al > bh,
        CmpOp::Gt => ah <= bl,
        CmpOp::Ge => ah < bl,
        CmpOp::Eq => ah < bl || bh < al,
        CmpOp::Ne => al == ah && bl == bh && al == bl,
    };
    if always {
        Truth::True
    } else if never {
        Truth::False
    } else {
        Truth::Unknown
    }
}

fn refine_int_interval(itv: IntInterval, op: CmpOp, bound: Scalar) -> IntInterval {
    let Some((lo, hi)) = itv.bounds() else {
        return itv;
    };
    let (lo, hi) = (lo as i128, hi as i128);
    let clamp = |l: i128, h: i128| IntInterval::from_i128(l, h);
    match bound {
        Scalar::Int(c) => {
            let c = c as i128;
            match op {
                CmpOp::Lt => clamp(lo, hi.min(c - 1)),
                CmpOp::Le => clamp(lo, hi.min(c)),
                CmpOp::Gt => clamp(lo.max(c + 1), hi),
                CmpOp::Ge => clamp(lo.max(c), hi),
                CmpOp::Eq => clamp(lo.max(c), hi.min(c)),
                CmpOp::Ne => itv.remove(c as i64),
            }
        }
        Scalar::Float(c) => {
            let fl = c.floor();
            let ce = c.ceil();
            let to = |v: f64| v.clamp(-1.0e30, 1.0e30) as i128;
            match op {
                CmpOp::Lt => clamp(lo, hi.min(to(ce) - 1)),
                CmpOp::Le => clamp(lo, hi.min(to(fl))),
                CmpOp::Gt => clamp(lo.max(to(fl) + 1), hi),
                CmpOp::Ge => clamp(lo.max(to(ce)), hi),
                CmpOp::Eq if c.fract() == 0.0 => clamp(lo.max(to(c)), hi.min(to(c))),
                CmpOp::Eq => IntInterval::BOTTOM,
                CmpOp::Ne if c.fract() == 0.0 && c.abs() < 9.0e18 => itv.remove(c as i64),
                CmpOp::Ne => itv,
            }
        }
    }
}

fn refine_float_interval(itv: FloatInterval, op: CmpOp, bound: Scalar) -> FloatInterval {
    let Some((lo, hi)) = itv.bounds() else {
        return itv;
    };
    let c = bound.as_f64();
    let below = |c: f64| {
        let f = super::float::f32_floor(c);
        if f == c {
            (f as f32).next_down() as f64
        } else {
            f
        }
    };
    let above = |c: f64| {
        let f = super::float::f32_ceil(c);
        if f == c {
            (f as f32).next_up() as f64
        } else {
            f
        }
    };
    match op {
        CmpOp::Lt => FloatInterval::new(lo, hi.min(below(c))),
        CmpOp::Le => FloatInterval::new(lo, hi.min(super::float::f32_floor(c))),
        CmpOp::Gt => FloatInterval::new(lo.max(above(c)), hi),
        CmpOp::Ge => FloatInterval::new(lo.max(super::float::f32_ceil(c)), hi),
        CmpOp::Eq => itv
            .meet(&FloatInterval::new(c, c))
            .meet(&FloatInterval::new(
                super::float::f32_ceil(c),
                super::float::f32_floor(c),
            )),
        CmpOp::Ne => {
            if lo == c && hi == c {
                FloatInterval::BOTTOM
            } else if lo == c {
                FloatInterval::new(above(c), hi)
            } else if hi == c {
                FloatInterval::new(lo, below(c))
            } else {
                itv
            }
        }
    }
}

/// Meet of `v` with the half-space `{x | x op bound}`.
pub fn refine_by_comparison(v: &AbstractValue, op: CmpOp, bound: Scalar) -> AbstractValue {
    match v {
        AbstractValue::Int(itv) => AbstractValue::Int(refine_int_interval(*itv, op, bound)),
        AbstractValue::Float(itv) => AbstractValue::Float(refine_float_interval(*itv, op, bound)),
        AbstractValue::Set(FiniteSet::Members(m)) => AbstractValue::Set(FiniteSet::Members(
            m.iter()
                .copied()
                .filter(|&x| match bound {
                    Scalar::Int(c) => concrete::compare(op, x, c),
                    Scalar::Float(c) => concrete::compare(op, x as f64, c),
                })
                .collect(),
        )),
        AbstractValue::Set(FiniteSet::Range(r)) => {
            let cap = super::set::DEFAULT_SET_CAP;
            AbstractValue::Set(FiniteSet::from_interval(
                refine_int_interval(*r, op, bound),
                cap,
            ))
        }
        AbstractValue::Zero(z) => {
            let c = bound.as_f64();
            let zero_ok = concrete::compare(op, 0.0, c);
            let nonzero_ok = !(op == CmpOp::Eq && c == 0.0);
            let allowed = match (zero_ok, nonzero_ok) {
                (true, true) => ZeroValue::Top,
                (true, false) => ZeroValue::Zero,
                (false, true) => ZeroValue::NonZero,
                (false, false) => ZeroValue::Bottom,
            };
            AbstractValue::Zero(z.meet(allowed))
        }
    }
}

/// Refines `v` assuming `v op other` holds for some member of `other`.
pub fn refine_against(v: &AbstractValue, op: CmpOp, other: &AbstractValue) -> AbstractValue {
    if other.is_bottom() {
        return v.to_bottom();
    }
    if let (
        AbstractValue::Set(FiniteSet::Members(mv)),
        AbstractValue::Set(FiniteSet::Members(mo)),
    ) = (v, other)
    {
        return AbstractValue::Set(FiniteSet::Members(
            mv.iter()
                .copied()
                .filter(|&x| mo.iter().any(|&y| concrete::compare(op, x, y)))
                .collect(),
        ));
    }
    if let Some(c) = other.as_singleton() {
        return refine_by_comparison(v, op, c);
    }
    if let AbstractValue::Zero(_) = other {
        return v.clone();
    }
    let Some((ol, oh)) = other.numeric_bounds() else {
        return v.clone();
    };
    let mk = |x: f64| {
        if other.is_float() {
            Scalar::Float(x)
        } else {
            Scalar::Int(x as i64)
        }
    };
    match op {
        CmpOp::Lt | CmpOp::Le => refine_by_comparison(v, op, mk(oh)),
        CmpOp::Gt | CmpOp::Ge => refine_by_comparison(v, op, mk(ol)),
        CmpOp::Eq => {
            let t = refine_by_comparison(v, CmpOp::Ge, mk(ol));
            refine_by_comparison(&t, CmpOp::Le, mk(oh))
        }
        CmpOp::Ne => v.clone(),
    }
}

/// Converts `v` into type `to`, flagging out-of-range conversions as IRO.
pub fn convert(
    v: &AbstractValue,
    to: ScalarType,
    cfg: &DomainConfig,
) -> (AbstractValue, Option<AlarmCondition>) {
    if v.is_bottom() {
        return (AbstractValue::bottom_of(to, cfg), None);
    }
    if let AbstractValue::Zero(_) = v {
        return (v.clone(), None);
    }
    if to.is_float() {
        return match v.float_hull() {
            Some(f) => (AbstractValue::Float(f), None),
            None => (AbstractValue::top_of(to, cfg), None),
        };
    }
    let (tl, th) = to.int_range().unwrap();
    let mut alarms = Vec::new();
    let result = match v {
        AbstractValue::Float(f) => {
            let (lo, hi) = f.bounds().unwrap();
            let (lo, hi) = (lo.trunc(), hi.trunc());
            let (ftl, fth) = (tl as f64, th as f64);
            if lo < ftl || hi > fth {
                let definite = hi < ftl || lo > fth;
                alarms.push(AlarmCondition::new(
                    AlarmClass::IRO,
                    definite,
                    format!("conversion may leave [{tl}, {th}]"),
                ));
                if definite {
                    IntInterval::BOTTOM
                } else {
                    IntInterval::new(lo.max(ftl) as i64, hi.min(fth) as i64)
                }
            } else {
                IntInterval::new(lo as i64, hi as i64)
            }
        }
        AbstractValue::Set(FiniteSet::Members(m)) => {
            let mut out = BTreeSet::new();
            let mut failed = 0;
            for &x in m {
                match concrete::fit_int(x as i128, to) {
                    Ok(r) => {
                        out.insert(r);
                    }
                    Err(e) => {
                        failed += 1;
                        if let Some(w) = e.wrapped {
                            out.insert(w);
                        }
                    }
                }
            }
            if failed > 0 {
                let definite = failed == m.len();
                alarms.push(AlarmCondition::new(
                    AlarmClass::IRO,
                    definite,
                    format!("conversion may leave [{tl}, {th}]"),
                ));
                if definite {
                    out.clear();
                }
            }
            let value = FiniteSet::from_members(out, cfg.set_cap);
            return (AbstractValue::Set(value), alarms.pop());
        }
        other => {
            let h = other.int_hull().unwrap_or(IntInterval::BOTTOM);
            match h.bounds() {
                None => IntInterval::BOTTOM,
                Some((lo, hi)) => fit_range(lo as i128, hi as i128, to, &mut alarms),
            }
        }
    };
    let value = match cfg.int_domain {
        IntDomain::Interval => AbstractValue::Int(result),
        IntDomain::FiniteSet => AbstractValue::Set(FiniteSet::from_interval(result, cfg.set_cap)),
    };
    (value, alarms.pop())
}

/// Truthiness of a value used as a condition.
pub fn truth_of(v: &AbstractValue) -> Truth {
    if v.is_bottom() {
        return Truth::Unknown;
    }
    let zero = v.contains(Scalar::Int(0));
    let nonzero = match v {
        AbstractValue::Zero(z) => z.join(ZeroValue::NonZero) == *z,
        _ => v.as_singleton().map(|s| s.as_f64() != 0.0).unwrap_or(true),
    };
    match (zero, nonzero) {
        (true, false) => Truth::False,
        (false, true) => Truth::True,
        _ => Truth::Unknown,
    }
}
