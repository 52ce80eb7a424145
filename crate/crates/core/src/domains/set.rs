//! Small finite sets of integers that degrade to an interval past a cap.

use std::collections::BTreeSet;
use std::fmt;

use super::interval::IntInterval;

/// Default number of members kept before degrading to an interval.
pub const DEFAULT_SET_CAP: usize = 16;

/// Canonical form: `Members` whenever the value has at most `cap` members,
/// `Range` otherwise. The empty member set is bottom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FiniteSet {
    Members(BTreeSet<i64>),
    Range(IntInterval),
}

impl FiniteSet {
    pub fn bottom() -> FiniteSet {
        FiniteSet::Members(BTreeSet::new())
    }

    pub fn singleton(c: i64) -> FiniteSet {
        FiniteSet::Members(BTreeSet::from([c]))
    }

    pub fn from_members<I: IntoIterator<Item = i64>>(members: I, cap: usize) -> FiniteSet {
        let set: BTreeSet<i64> = members.into_iter().collect();
        if set.len() <= cap {
            FiniteSet::Members(set)
        } else {
            let lo = *set.first().unwrap();
            let hi = *set.last().unwrap();
            FiniteSet::Range(IntInterval::new(lo, hi))
        }
    }

    pub fn from_interval(itv: IntInterval, cap: usize) -> FiniteSet {
        match itv.bounds() {
            None => FiniteSet::bottom(),
            Some((a, b)) if itv.cardinality() <= cap as u128 => {
                FiniteSet::Members((a..=b).collect())
            }
            Some(_) => FiniteSet::Range(itv),
        }
    }

    pub fn is_bottom(&self) -> bool {
        match self {
            FiniteSet::Members(m) => m.is_empty(),
            FiniteSet::Range(r) => r.is_bottom(),
        }
    }

    pub fn hull(&self) -> IntInterval {
        match self {
            FiniteSet::Members(m) => match (m.first(), m.last()) {
                (Some(&a), Some(&b)) => IntInterval::new(a, b),
                _ => IntInterval::BOTTOM,
            },
            FiniteSet::Range(r) => *r,
        }
    }

    pub fn members(&self) -> Option<&BTreeSet<i64>> {
        match self {
            FiniteSet::Members(m) => Some(m),
            FiniteSet::Range(_) => None,
        }
    }

    pub fn contains(&self, c: i64) -> bool {
        match self {
            FiniteSet::Members(m) => m.contains(&c),
            FiniteSet::Range(r) => r.contains(c),
        }
    }

    pub fn join(&self, other: &FiniteSet, cap: usize) -> FiniteSet {
        match (self, other) {
            (FiniteSet::Members(a), FiniteSet::Members(b)) => {
                FiniteSet::from_members(a.union(b).copied(), cap)
            }
            _ => FiniteSet::from_interval(self.hull().join(&other.hull()), cap),
        }
    }

    pub fn meet(&self, other: &FiniteSet, cap: usize) -> FiniteSet {
        match (self, other) {
            (FiniteSet::Members(a), FiniteSet::Members(b)) => {
                FiniteSet::Members(a.intersection(b).copied().collect())
            }
            (FiniteSet::Members(a), FiniteSet::Range(r))
            | (FiniteSet::Range(r), FiniteSet::Members(a)) => {
                FiniteSet::Members(a.iter().copied().filter(|&c| r.contains(c)).collect())
            }
            (FiniteSet::Range(a), FiniteSet::Range(b)) => FiniteSet::from_interval(a.meet(b), cap),
        }
    }

    pub fn leq(&self, other: &FiniteSet) -> bool {
        match (self, other) {
            (FiniteSet::Members(a), _) => a.iter().all(|&c| other.contains(c)),
            (FiniteSet::Range(a), FiniteSet::Range(b)) => a.leq(b),
            // a canonical range has more members than any member set
            (FiniteSet::Range(_), FiniteSet::Members(_)) => false,
        }
    }

    /// Stable when `new` adds nothing; otherwise the hull is threshold-widened.
    pub fn widen(&self, new: &FiniteSet, thresholds: &[i64], cap: usize) -> FiniteSet {
        if new.leq(self) {
            return self.clone();
        }
        if self.is_bottom() {
            return new.clone();
        }
        let widened = self.hull().widen(&self.join(new, cap).hull(), thresholds);
        FiniteSet::from_interval(widened, cap)
    }
}

impl fmt::Display for FiniteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiniteSet::Members(m) if m.is_empty() => f.write_str("⊥"),
            FiniteSet::Members(m) => {
                let parts: Vec<String> = m.iter().map(|c| c.to_string()).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
            FiniteSet::Range(r) => write!(f, "{r}"),
        }
    }
}
