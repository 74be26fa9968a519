//! Sponges and the combinatorics of their digit sets.
//!
//! Coordinates are numbered from 1 in error values and in the `l` arguments
//! that mirror the usual `N(i_1, …, i_l)` notation; slices are 0-based.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::borrow::Borrow;
use core::fmt;
use core::ops::Deref;

use crate::error::ReducedSponge;
use crate::{Error, Result};

/// One digit tuple `(i_1, …, i_d)` of the digit set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DigitTuple(Vec<u32>);

impl DigitTuple {
    pub fn new(digits: Vec<u32>) -> Self {
        DigitTuple(digits)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    /// The projection `π_l`: the first `l` coordinates.
    pub fn project(&self, l: usize) -> Result<Prefix> {
        if l > self.0.len() {
            return Err(Error::CoordinateOutOfRange { index: l, max: self.0.len() });
        }
        Ok(Prefix(self.0[..l].to_vec()))
    }
}

impl Deref for DigitTuple {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for DigitTuple {
    fn from(v: Vec<u32>) -> Self {
        DigitTuple(v)
    }
}

impl fmt::Display for DigitTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(f, &self.0)
    }
}

/// A truncated tuple `(i_1, …, i_l)`, possibly empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Prefix(Vec<u32>);

impl Prefix {
    pub fn empty() -> Self {
        Prefix(Vec::new())
    }

    pub fn new(coords: Vec<u32>) -> Self {
        Prefix(coords)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn extended(&self, next: u32) -> Prefix {
        let mut v = self.0.clone();
        v.push(next);
        Prefix(v)
    }
}

impl Deref for Prefix {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl Borrow<[u32]> for Prefix {
    fn borrow(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for Prefix {
    fn from(v: Vec<u32>) -> Self {
        Prefix(v)
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("∅");
        }
        write_joined(f, &self.0)
    }
}

fn write_joined(f: &mut fmt::Formatter<'_>, digits: &[u32]) -> fmt::Result {
    for (i, d) in digits.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{d}")?;
    }
    Ok(())
}

/// Which extreme of the fibre counts a construction follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extremum {
    Max,
    Min,
}

/// A validated Bedford–McMullen sponge.
///
/// Immutable after construction. The projected digit sets `D_l` and the
/// fibres over every prefix are materialized once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sponge {
    bases: Vec<u32>,
    digits: Vec<DigitTuple>,
    strict: bool,
    // levels[l] = D_l sorted, l = 0..=d; levels[0] = [∅]
    levels: Vec<Vec<Prefix>>,
    // fibres[l][p] = sorted admissible next digits of p ∈ D_l, l = 0..d-1
    fibres: Vec<BTreeMap<Prefix, Vec<u32>>>,
    max_fibre: Vec<usize>,
    min_fibre: Vec<usize>,
}

/// Validates raw bases and digits into a [`Sponge`].
pub fn validate_sponge(bases: &[u32], digits: &[Vec<u32>]) -> Result<Sponge> {
    Sponge::new(bases.to_vec(), digits.to_vec())
}

impl Sponge {
    pub fn new(bases: Vec<u32>, digits: Vec<Vec<u32>>) -> Result<Self> {
        let d = bases.len();
        if d == 0 {
            return Err(Error::NoCoordinates);
        }
        for (l, &n) in bases.iter().enumerate() {
            if n < 2 {
                return Err(Error::BaseTooSmall { coord: l + 1, base: n });
            }
        }
        for l in 0..d - 1 {
            if bases[l] > bases[l + 1] {
                return Err(Error::DecreasingBases { coord: l + 1, left: bases[l], right: bases[l + 1] });
            }
        }
        if digits.len() < 2 {
            return Err(Error::EmptyOrSingletonDigits { count: digits.len() });
        }
        for (index, t) in digits.iter().enumerate() {
            if t.len() != d {
                return Err(Error::WrongArity { index, found: t.len(), expected: d });
            }
            for (l, (&digit, &base)) in t.iter().zip(&bases).enumerate() {
                if digit >= base {
                    return Err(Error::DigitOutOfRange { index, coord: l + 1, digit, base });
                }
            }
        }
        let mut seen = BTreeMap::new();
        for (index, t) in digits.iter().enumerate() {
            if seen.insert(t.clone(), index).is_some() {
                return Err(Error::DuplicateDigit { index });
            }
        }
        for l in 0..d {
            let first = digits[0][l];
            if digits.iter().all(|t| t[l] == first) {
                let reduced = (d > 1).then(|| ReducedSponge {
                    bases: drop_coord(&bases, l),
                    digits: digits.iter().map(|t| drop_coord(t, l)).collect(),
                });
                return Err(Error::DegenerateCoordinate { coord: l + 1, reduced });
            }
        }

        let strict = bases.windows(2).all(|w| w[0] < w[1]);
        let mut sorted: Vec<DigitTuple> = digits.into_iter().map(DigitTuple).collect();
        sorted.sort();

        let mut levels: Vec<Vec<Prefix>> = Vec::with_capacity(d + 1);
        for l in 0..=d {
            let mut level: Vec<Prefix> = sorted.iter().map(|t| Prefix(t.0[..l].to_vec())).collect();
            level.dedup();
            levels.push(level);
        }
        let mut fibres = Vec::with_capacity(d);
        let mut max_fibre = Vec::with_capacity(d);
        let mut min_fibre = Vec::with_capacity(d);
        for l in 0..d {
            let mut map: BTreeMap<Prefix, Vec<u32>> = BTreeMap::new();
            for p in &levels[l + 1] {
                map.entry(Prefix(p.0[..l].to_vec())).or_default().push(p.0[l]);
            }
            max_fibre.push(map.values().map(Vec::len).max().unwrap_or(0));
            min_fibre.push(map.values().map(Vec::len).min().unwrap_or(0));
            fibres.push(map);
        }

        Ok(Sponge { bases, digits: sorted, strict, levels, fibres, max_fibre, min_fibre })
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[u32] {
        &self.bases
    }

    /// The digit set in lexicographic order.
    pub fn digits(&self) -> &[DigitTuple] {
        &self.digits
    }

    /// Whether `n_1 < … < n_d` holds strictly.
    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// `N = |π_1 D|`.
    pub fn first_count(&self) -> usize {
        self.levels[1].len()
    }

    pub fn contains(&self, tuple: &[u32]) -> bool {
        self.digits.binary_search_by(|t| t.as_slice().cmp(tuple)).is_ok()
    }

    /// `D_l` for `0 ≤ l ≤ d`, with `D_0 = {∅}`.
    pub fn projection(&self, l: usize) -> Result<&[Prefix]> {
        self.levels
            .get(l)
            .map(Vec::as_slice)
            .ok_or(Error::CoordinateOutOfRange { index: l, max: self.dim() })
    }

    /// `D_l = π_l(D)` for `1 ≤ l ≤ d`, deduplicated and sorted.
    pub fn digit_set_projection(&self, l: usize) -> Result<&[Prefix]> {
        if l == 0 {
            return Err(Error::CoordinateOutOfRange { index: l, max: self.dim() });
        }
        self.projection(l)
    }

    pub fn in_projection(&self, prefix: &[u32]) -> bool {
        self.levels
            .get(prefix.len())
            .is_some_and(|lvl| lvl.binary_search_by(|p| p.as_slice().cmp(prefix)).is_ok())
    }

    /// Elements of `D_len` that start with `prefix`, in lexicographic order.
    pub fn extensions(&self, prefix: &[u32], len: usize) -> &[Prefix] {
        let Some(level) = self.levels.get(len) else {
            return &[];
        };
        if prefix.len() > len {
            return &[];
        }
        let k = prefix.len();
        let lo = level.partition_point(|p| &p.0[..k] < prefix);
        let hi = level.partition_point(|p| &p.0[..k] <= prefix);
        &level[lo..hi]
    }

    /// The admissible next digits of `prefix`, or `None` when the prefix is
    /// not in `D_l` or already has length `d`.
    pub fn fibre(&self, prefix: &[u32]) -> Option<&[u32]> {
        self.fibres.get(prefix.len())?.get(prefix).map(Vec::as_slice)
    }

    /// `N(i_1, …, i_l)`; the empty prefix gives `N`.
    pub fn fibre_count(&self, prefix: &[u32]) -> Result<usize> {
        if prefix.len() >= self.dim() {
            return Err(Error::CoordinateOutOfRange { index: prefix.len(), max: self.dim() - 1 });
        }
        self.fibre(prefix)
            .map(<[u32]>::len)
            .ok_or_else(|| Error::PrefixNotInSponge { prefix: prefix.to_vec() })
    }

    /// Max of `N` over `D_level`, `0 ≤ level < d`.
    pub fn max_fibre(&self, level: usize) -> usize {
        self.max_fibre[level]
    }

    /// Min of `N` over `D_level`, `0 ≤ level < d`.
    pub fn min_fibre(&self, level: usize) -> usize {
        self.min_fibre[level]
    }

    pub fn extreme_fibre(&self, level: usize, mode: Extremum) -> usize {
        match mode {
            Extremum::Max => self.max_fibre(level),
            Extremum::Min => self.min_fibre(level),
        }
    }

    /// Whether `N` is constant on `D_l` at the given prefix length.
    pub fn is_uniform_level(&self, level: usize) -> bool {
        self.max_fibre[level] == self.min_fibre[level]
    }

    pub fn has_uniform_fibres(&self) -> bool {
        (1..self.dim()).all(|l| self.is_uniform_level(l))
    }

    /// Very strong separation: digits sharing a prefix and differing at the
    /// next coordinate differ there by more than one.
    pub fn satisfies_vssc(&self) -> bool {
        self.fibres
            .iter()
            .flat_map(BTreeMap::values)
            .all(|next| next.windows(2).all(|w| w[1] - w[0] > 1))
    }

    /// The lexicographically smallest `i ∈ D` whose `(l-1)`-prefix attains the
    /// extreme fibre count, for `2 ≤ l ≤ d`.
    pub fn extremal_witness(&self, l: usize, mode: Extremum) -> Result<&DigitTuple> {
        if l < 2 || l > self.dim() {
            return Err(Error::CoordinateOutOfRange { index: l, max: self.dim() });
        }
        let target = self.extreme_fibre(l - 1, mode);
        let found = self
            .digits
            .iter()
            .find(|t| self.fibres[l - 1].get(&t.0[..l - 1]).map(Vec::len) == Some(target));
        Ok(found.expect("every level has a prefix attaining its extreme"))
    }
}

fn drop_coord(v: &[u32], l: usize) -> Vec<u32> {
    v.iter().enumerate().filter(|&(i, _)| i != l).map(|(_, &x)| x).collect()
}
