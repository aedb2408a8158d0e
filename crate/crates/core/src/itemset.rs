//! Compact subsets of the auctioned items.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest number of items an [`ItemSet`] can address.
pub const MAX_ITEMS: usize = 24;

/// A subset of items `0..m`, stored as a bitmask (bit `j` set means item `j`
/// is a member).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemSet(u32);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub const fn from_mask(mask: u32) -> Self {
        ItemSet(mask)
    }

    /// The full set `{0, .., m-1}`.
    pub fn full(m: usize) -> Self {
        debug_assert!(m <= MAX_ITEMS);
        ItemSet(((1u64 << m) - 1) as u32)
    }

    pub fn singleton(item: usize) -> Self {
        debug_assert!(item < MAX_ITEMS);
        ItemSet(1 << item)
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Self {
        items.into_iter().fold(ItemSet::EMPTY, |acc, j| acc.with(j))
    }

    #[inline]
    pub const fn mask(self) -> u32 {
        self.0
    }

    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub const fn contains(self, item: usize) -> bool {
        self.0 & (1 << item) != 0
    }

    #[inline]
    pub const fn with(self, item: usize) -> Self {
        ItemSet(self.0 | (1 << item))
    }

    #[inline]
    pub const fn without(self, item: usize) -> Self {
        ItemSet(self.0 & !(1 << item))
    }

    #[inline]
    pub const fn union(self, other: ItemSet) -> Self {
        ItemSet(self.0 | other.0)
    }

    #[inline]
    pub const fn intersection(self, other: ItemSet) -> Self {
        ItemSet(self.0 & other.0)
    }

    #[inline]
    pub const fn difference(self, other: ItemSet) -> Self {
        ItemSet(self.0 & !other.0)
    }

    #[inline]
    pub const fn is_disjoint(self, other: ItemSet) -> bool {
        self.0 & other.0 == 0
    }

    #[inline]
    pub const fn is_subset(self, other: ItemSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Index of the highest member, if any.
    #[inline]
    pub const fn highest(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(31 - self.0.leading_zeros() as usize)
        }
    }

    /// Members in increasing order.
    pub fn items(self) -> Items {
        Items(self.0)
    }

    /// Every subset of `self`, including the empty set and `self`, in
    /// increasing mask order.
    pub fn subsets(self) -> impl Iterator<Item = ItemSet> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(ItemSet(cur))
        })
    }

    /// All `2^m` subsets of `{0, .., m-1}` in increasing mask order.
    pub fn all(m: usize) -> impl Iterator<Item = ItemSet> {
        (0..(1u32 << m)).map(ItemSet)
    }
}

pub struct Items(u32);

impl Iterator for Items {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let j = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(j)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Items {}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.items()).finish()
    }
}

impl fmt::Display for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.items().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}
