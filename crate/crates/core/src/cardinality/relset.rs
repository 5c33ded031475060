use std::fmt;

use serde::{Deserialize, Serialize};

/// Bitset over the relations of one query (bit i = `spec.relations[i]`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelSet(pub u64);

impl RelSet {
    pub const EMPTY: RelSet = RelSet(0);

    pub fn single(i: usize) -> Self {
        RelSet(1 << i)
    }

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            RelSet(u64::MAX)
        } else {
            RelSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn union(self, other: RelSet) -> RelSet {
        RelSet(self.0 | other.0)
    }

    pub fn intersect(self, other: RelSet) -> RelSet {
        RelSet(self.0 & other.0)
    }

    pub fn minus(self, other: RelSet) -> RelSet {
        RelSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: RelSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: RelSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Lowest member index.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Non-empty proper subsets, in increasing numeric order.
    pub fn proper_subsets(self) -> impl Iterator<Item = RelSet> {
        let full = self.0;
        let mut sub: u64 = 0;
        std::iter::from_fn(move || {
            // next submask in increasing order
            sub = sub.wrapping_sub(full) & full;
            if sub == 0 || sub == full {
                None
            } else {
                Some(RelSet(sub))
            }
        })
    }

    /// Members in ascending order; used for canonical tie-breaking.
    pub fn members(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Display for RelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}
