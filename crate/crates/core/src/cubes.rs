//! Approximate cubes and their geometry.
//!
//! At scale `r` each coordinate `l` resolves `k_l(r)` digits, where
//! `n_l^{-(k_l+1)} < r ≤ n_l^{-k_l}`. A cube fixes the coordinate-`l` digits of
//! the first `k_l(r)` symbols, so its natural hypercuboid has every side in
//! `[r, n_l r)`. Scales are exact rationals, so bracket boundaries such as
//! `r = n_l^{-k}` never misclassify.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::model::{DigitTuple, Prefix, Sponge};
use crate::numeric::{inv_pow, ln_biguint, ln_rational, pow_u};
use crate::{Error, Result};

/// A scale `r ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scale(BigRational);

impl Scale {
    pub fn new(r: BigRational) -> Result<Self> {
        if !r.is_positive() || r > BigRational::one() {
            return Err(Error::ScaleOutOfRange);
        }
        Ok(Scale(r))
    }

    pub fn one() -> Self {
        Scale(BigRational::one())
    }

    /// `n^{-k}`.
    pub fn inv_pow(n: u32, k: u64) -> Self {
        Scale(inv_pow(n, k))
    }

    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::ScaleOutOfRange);
        }
        Scale::new(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn ln(&self) -> f64 {
        ln_rational(&self.0)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(0.0)
    }
}

/// The exponents `k_1(r) ≥ … ≥ k_d(r)` of a scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleExponents {
    pub scale: Scale,
    pub k: Vec<u64>,
}

impl ScaleExponents {
    pub fn first(&self) -> u64 {
        self.k[0]
    }
}

/// Largest `k` with `n^k · r ≤ 1`.
fn exponent_for(n: u32, r: &BigRational) -> u64 {
    let p = r.numer().magnitude();
    let q = r.denom().magnitude();
    let n = BigUint::from(n);
    let mut k = 0u64;
    let mut lhs = p.clone();
    loop {
        lhs *= &n;
        if &lhs > q {
            return k;
        }
        k += 1;
    }
}

pub fn exponents_for(bases: &[u32], r: &Scale) -> ScaleExponents {
    ScaleExponents { scale: r.clone(), k: bases.iter().map(|&n| exponent_for(n, r.value())).collect() }
}

pub fn scale_exponents(s: &Sponge, r: &Scale) -> ScaleExponents {
    exponents_for(s.bases(), r)
}

/// A symbolic approximate cube: per coordinate, the fixed digit track.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ApproximateCube {
    pub scale: Scale,
    pub k: Vec<u64>,
    /// `tracks[l]` holds the coordinate-`l` digits of the first `k[l]` symbols.
    pub tracks: Vec<Vec<u32>>,
}

impl ApproximateCube {
    /// The cube at scale 1, i.e. the whole symbolic space.
    pub fn trivial(d: usize) -> Self {
        ApproximateCube { scale: Scale::one(), k: vec![0; d], tracks: vec![Vec::new(); d] }
    }

    /// Whether this cube is contained in `coarser` (its tracks extend).
    pub fn refines(&self, coarser: &ApproximateCube) -> bool {
        self.tracks.len() == coarser.tracks.len()
            && self.tracks.iter().zip(&coarser.tracks).all(|(a, b)| a.len() >= b.len() && a.starts_with(b))
    }

    /// Whether the infinite word starting with `word` lies in this cube.
    pub fn contains_word(&self, word: &[DigitTuple]) -> bool {
        self.tracks.iter().enumerate().all(|(l, track)| {
            track.len() <= word.len() && track.iter().zip(word).all(|(&digit, sym)| sym[l] == digit)
        })
    }

    /// Number of active coordinates at 0-based position `t`.
    pub fn active_at(&self, t: usize) -> usize {
        self.k.iter().take_while(|&&k| (t as u64) < k).count()
    }
}

fn check_word(s: &Sponge, word: &[DigitTuple]) -> Result<()> {
    for sym in word {
        if !s.contains(sym) {
            return Err(Error::DigitNotInSponge { tuple: sym.to_vec() });
        }
    }
    Ok(())
}

/// The cube `Q(ω, r)` of the word `ω`, which needs at least `k_1(r)` symbols.
pub fn approximate_cube(s: &Sponge, word: &[DigitTuple], r: &Scale) -> Result<ApproximateCube> {
    check_word(s, word)?;
    let e = scale_exponents(s, r);
    let needed = e.first() as usize;
    if word.len() < needed {
        return Err(Error::WordTooShort { len: word.len(), needed });
    }
    let tracks = e.k.iter().enumerate().map(|(l, &k)| word[..k as usize].iter().map(|sym| sym[l]).collect()).collect();
    Ok(ApproximateCube { scale: r.clone(), k: e.k, tracks })
}

/// A closed interval with exact endpoints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn len(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    fn gap_to(&self, x: &BigRational) -> BigRational {
        if x < &self.lo {
            &self.lo - x
        } else if x > &self.hi {
            x - &self.hi
        } else {
            BigRational::zero()
        }
    }

    fn farthest_from(&self, x: &BigRational) -> BigRational {
        let a = (x - &self.lo).abs();
        let b = (&self.hi - x).abs();
        if a > b {
            a
        } else {
            b
        }
    }
}

/// An axis-aligned box `∏ [lo_l, hi_l]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hypercuboid {
    pub intervals: Vec<Interval>,
}

impl Hypercuboid {
    pub fn unit(d: usize) -> Self {
        Hypercuboid {
            intervals: vec![Interval { lo: BigRational::zero(), hi: BigRational::one() }; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, other: &Hypercuboid) -> bool {
        self.intervals.iter().zip(&other.intervals).all(|(a, b)| a.contains(b))
    }

    /// Whether the interiors are disjoint.
    pub fn interior_disjoint(&self, other: &Hypercuboid) -> bool {
        self.intervals.iter().zip(&other.intervals).any(|(a, b)| a.hi <= b.lo || b.hi <= a.lo)
    }

    /// Squared distance from `x` to the nearest point of the box.
    pub fn min_dist_sq(&self, x: &[BigRational]) -> BigRational {
        self.intervals.iter().zip(x).map(|(iv, c)| {
            let g = iv.gap_to(c);
            &g * &g
        }).fold(BigRational::zero(), |a, b| a + b)
    }

    /// Squared distance from `x` to the farthest point of the box.
    pub fn max_dist_sq(&self, x: &[BigRational]) -> BigRational {
        self.intervals.iter().zip(x).map(|(iv, c)| {
            let g = iv.farthest_from(c);
            &g * &g
        }).fold(BigRational::zero(), |a, b| a + b)
    }

    /// `sup_{x ∈ self} dist(x, other)`, squared.
    pub fn directed_hausdorff_sq(&self, other: &Hypercuboid) -> BigRational {
        self.intervals
            .iter()
            .zip(&other.intervals)
            .map(|(a, b)| {
                let left = &b.lo - &a.lo;
                let right = &a.hi - &b.hi;
                let e = [left, right, BigRational::zero()].into_iter().max().unwrap();
                &e * &e
            })
            .fold(BigRational::zero(), |a, b| a + b)
    }
}

/// A finite collection of boxes inside `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxSet {
    pub dim: usize,
    pub boxes: Vec<Hypercuboid>,
}

impl BoxSet {
    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Upper bound on the Hausdorff distance between the two unions, from the
    /// closed-form box-to-box distances. Quadratic; meant for small sets.
    pub fn hausdorff_upper(&self, other: &BoxSet) -> f64 {
        fn directed(a: &BoxSet, b: &BoxSet) -> BigRational {
            a.boxes
                .iter()
                .map(|x| b.boxes.iter().map(|y| x.directed_hausdorff_sq(y)).min().unwrap_or_else(BigRational::zero))
                .max()
                .unwrap_or_else(BigRational::zero)
        }
        let sq = directed(self, other).max(directed(other, self));
        libm::sqrt(sq.to_f64().unwrap_or(f64::INFINITY))
    }
}

fn track_index(track: &[u32], n: u32) -> BigUint {
    track.iter().fold(BigUint::zero(), |acc, &digit| acc * n + digit)
}

/// Box of a cell whose coordinate-`l` index is `idx[l]` at side `n_l^{-k_l}`.
pub(crate) fn cell_box(bases: &[u32], k: &[u64], idx: &[BigUint]) -> Hypercuboid {
    let intervals = bases
        .iter()
        .zip(k)
        .zip(idx)
        .map(|((&n, &k), i)| {
            let den = BigInt::from(pow_u(n, k));
            let lo = BigRational::new(BigInt::from(i.clone()), den.clone());
            let hi = BigRational::new(BigInt::from(i.clone()) + 1, den);
            Interval { lo, hi }
        })
        .collect();
    Hypercuboid { intervals }
}

/// The natural hypercuboid containing `τ(Q)`.
pub fn geometric_box(s: &Sponge, q: &ApproximateCube) -> Hypercuboid {
    let idx: Vec<BigUint> = q.tracks.iter().zip(s.bases()).map(|(t, &n)| track_index(t, n)).collect();
    cell_box(s.bases(), &q.k, &idx)
}

/// Per-position choices when refining fixed tracks to longer exponents.
///
/// Position `t` keeps the coordinates already fixed by the coarse pattern and
/// chooses the newly active ones among the elements of `D_a` that agree with
/// them. Positions are independent, so every combination is realizable.
#[derive(Debug, Clone)]
pub struct Refinement<'a> {
    pub k: Vec<u64>,
    options: Vec<&'a [Prefix]>,
}

impl<'a> Refinement<'a> {
    pub fn new(s: &'a Sponge, coarse_k: &[u64], coarse_tracks: &[Vec<u32>], fine_k: &[u64]) -> Result<Self> {
        let d = s.dim();
        if coarse_k.len() != d || fine_k.len() != d || coarse_tracks.len() != d {
            return Err(Error::DimensionMismatch { found: fine_k.len(), expected: d });
        }
        if coarse_k.iter().zip(fine_k).any(|(c, f)| c > f) {
            return Err(Error::ScaleOrdering);
        }
        let positions = fine_k.iter().copied().max().unwrap_or(0) as usize;
        let mut options = Vec::with_capacity(positions);
        let mut fixed = Vec::with_capacity(d);
        for t in 0..positions {
            let before = coarse_k.iter().take_while(|&&k| (t as u64) < k).count();
            let after = fine_k.iter().take_while(|&&k| (t as u64) < k).count();
            fixed.clear();
            fixed.extend(coarse_tracks[..before].iter().map(|track| track[t]));
            let ext = s.extensions(&fixed, after);
            if ext.is_empty() {
                return Err(Error::PrefixNotInSponge { prefix: fixed.clone() });
            }
            options.push(ext);
        }
        Ok(Refinement { k: fine_k.to_vec(), options })
    }

    pub fn count(&self) -> BigUint {
        self.options.iter().fold(BigUint::one(), |acc, o| acc * o.len())
    }

    pub fn count_f64_ln(&self) -> f64 {
        self.options.iter().map(|o| libm::log(o.len() as f64)).sum()
    }

    /// Number of choices at each 0-based position.
    pub fn choices(&self) -> Vec<usize> {
        self.options.iter().map(|o| o.len()).collect()
    }

    /// Calls `f` with the tracks of every refinement, positions ordered from
    /// the first symbol outwards and digits lexicographically.
    pub fn for_each(&self, cap: u64, mut f: impl FnMut(&[Vec<u32>])) -> Result<()> {
        let count = self.count();
        if count > BigUint::from(cap) {
            return Err(Error::EnumerationTooLarge { count: count.to_string(), cap });
        }
        let d = self.k.len();
        let positions = self.options.len();
        let mut choice = vec![0usize; positions];
        let mut tracks: Vec<Vec<u32>> = self.k.iter().map(|&k| vec![0; k as usize]).collect();
        let write = |tracks: &mut Vec<Vec<u32>>, t: usize, p: &Prefix| {
            for (l, &digit) in p.iter().enumerate().take(d) {
                tracks[l][t] = digit;
            }
        };
        for t in 0..positions {
            write(&mut tracks, t, &self.options[t][0]);
        }
        loop {
            f(&tracks);
            // odometer, last position fastest
            let mut t = positions;
            loop {
                if t == 0 {
                    return Ok(());
                }
                t -= 1;
                choice[t] += 1;
                if choice[t] < self.options[t].len() {
                    write(&mut tracks, t, &self.options[t][choice[t]]);
                    break;
                }
                choice[t] = 0;
                write(&mut tracks, t, &self.options[t][0]);
            }
        }
    }
}

/// Every side-`r` cube inside `q`, in deterministic order.
pub fn subcubes(s: &Sponge, q: &ApproximateCube, r: &Scale, cap: u64) -> Result<Vec<ApproximateCube>> {
    if r >= &q.scale {
        return Err(Error::ScaleOrdering);
    }
    let fine = scale_exponents(s, r);
    let refinement = Refinement::new(s, &q.k, &q.tracks, &fine.k)?;
    let mut out = Vec::new();
    refinement.for_each(cap, |tracks| {
        out.push(ApproximateCube { scale: r.clone(), k: fine.k.clone(), tracks: tracks.to_vec() });
    })?;
    Ok(out)
}

/// `N_{r,ω}`: the number of side-`r` cubes inside `q`, without enumerating.
pub fn count_subcubes(s: &Sponge, q: &ApproximateCube, r: &Scale) -> Result<BigUint> {
    if r >= &q.scale {
        return Err(Error::ScaleOrdering);
    }
    let fine = scale_exponents(s, r);
    Ok(Refinement::new(s, &q.k, &q.tracks, &fine.k)?.count())
}

/// Number of distinct cubes at scale `r`: `∏_l |D_l|^{k_l - k_{l+1}}`,
/// `k_{d+1} = 0`.
pub fn count_cubes(s: &Sponge, r: &Scale) -> BigUint {
    let e = scale_exponents(s, r);
    let d = s.dim();
    let mut total = BigUint::one();
    for l in 0..d {
        let next = if l + 1 < d { e.k[l + 1] } else { 0 };
        let size = s.projection(l + 1).map_or(1, <[Prefix]>::len);
        total *= BigUint::from(size).pow((e.k[l] - next) as u32);
    }
    total
}

/// `log(count_cubes(n_1^{-depth})) / (depth · log n_1)`.
pub fn box_dim_slope(s: &Sponge, depth: u64) -> Result<f64> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let n1 = s.bases()[0];
    let count = count_cubes(s, &Scale::inv_pow(n1, depth));
    Ok(ln_biguint(&count) / (depth as f64 * libm::log(n1 as f64)))
}

/// The level-`m` pre-fractal: `|D|^m` boxes of sides `n_l^{-m}`, words in
/// lexicographic order.
pub fn prefractal(s: &Sponge, m: u64, cap: u64) -> Result<BoxSet> {
    let count = BigUint::from(s.digits().len()).pow(m as u32);
    if count > BigUint::from(cap) {
        return Err(Error::EnumerationTooLarge { count: count.to_string(), cap });
    }
    let d = s.dim();
    let mut cells: Vec<Vec<BigUint>> = vec![vec![BigUint::zero(); d]];
    for _ in 0..m {
        let mut next = Vec::with_capacity(cells.len() * s.digits().len());
        for cell in &cells {
            for sym in s.digits() {
                next.push(cell.iter().zip(s.bases()).zip(sym.iter()).map(|((i, &n), &digit)| i * n + digit).collect());
            }
        }
        cells = next;
    }
    let k = vec![m; d];
    Ok(BoxSet { dim: d, boxes: cells.iter().map(|idx| cell_box(s.bases(), &k, idx)).collect() })
}

/// `τ(w j j j …)` for a finite word `w` followed by a repeated tuple `j`.
pub fn tau_eventually_constant(s: &Sponge, word: &[DigitTuple], tail: &DigitTuple) -> Result<Vec<BigRational>> {
    check_word(s, word)?;
    check_word(s, core::slice::from_ref(tail))?;
    let m = word.len() as u64;
    Ok(s.bases()
        .iter()
        .enumerate()
        .map(|(l, &n)| {
            let track: Vec<u32> = word.iter().map(|sym| sym[l]).collect();
            let den = BigInt::from(pow_u(n, m));
            let head = BigRational::new(BigInt::from(track_index(&track, n)), den.clone());
            let tail_part = BigRational::new(BigInt::from(tail[l]), den * BigInt::from(n - 1));
            head + tail_part
        })
        .collect())
}
