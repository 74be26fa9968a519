//! Bernoulli measures on the symbolic space and their cube and ball values.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::cubes::{cell_box, scale_exponents, ApproximateCube, Scale};
use crate::model::{DigitTuple, Prefix, Sponge};
use crate::numeric::ln_rational;
use crate::{Error, Result};

/// Default number of conditional factors kept as an exact rational.
pub const PRECISION_BUDGET: usize = 512;

/// A measure value: exact when affordable, always with its natural log.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalLog {
    pub exact: Option<BigRational>,
    pub log_value: f64,
}

impl RationalLog {
    pub fn one() -> Self {
        RationalLog { exact: Some(BigRational::one()), log_value: 0.0 }
    }

    pub fn zero() -> Self {
        RationalLog { exact: Some(BigRational::zero()), log_value: f64::NEG_INFINITY }
    }

    pub fn from_exact(x: BigRational) -> Self {
        let log_value = ln_rational(&x);
        RationalLog { exact: Some(x), log_value }
    }

    pub fn from_log(log_value: f64) -> Self {
        RationalLog { exact: None, log_value }
    }

    pub fn value_f64(&self) -> f64 {
        libm::exp(self.log_value)
    }

    /// `self / other`, exact when both sides are.
    pub fn ratio(&self, other: &RationalLog) -> RationalLog {
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) if !b.is_zero() => Some(a / b),
            _ => None,
        };
        RationalLog { exact, log_value: self.log_value - other.log_value }
    }
}

/// A Bernoulli measure `p` on `D`, with prefix masses precomputed.
///
/// `mass[l][q]` is the total weight of digits whose first `l` coordinates are
/// `q`; the conditional `p(i_l | i_1..i_{l-1})` is a quotient of two of these.
/// Everything is filled in at construction, so the measure is immutable.
#[derive(Debug, Clone)]
pub struct BernoulliMeasure {
    sponge: Sponge,
    weights: Vec<BigRational>,
    mass: Vec<BTreeMap<Prefix, (BigRational, f64)>>,
    cond: Vec<BTreeMap<Prefix, (BigRational, f64)>>,
}

impl BernoulliMeasure {
    /// Builds a measure from `(tuple, weight)` pairs covering every digit.
    pub fn new(s: &Sponge, weights: Vec<(Vec<u32>, BigRational)>) -> Result<Self> {
        let mut table: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for (tuple, w) in weights {
            if !s.contains(&tuple) {
                return Err(Error::DigitNotInSponge { tuple });
            }
            if w <= BigRational::zero() {
                return Err(Error::NonPositiveWeight { tuple });
            }
            if table.insert(tuple.clone(), w).is_some() {
                return Err(Error::InvalidArgument(alloc::format!("weight for {tuple:?} given twice")));
            }
        }
        let mut ordered = Vec::with_capacity(s.digits().len());
        for sym in s.digits() {
            match table.remove(sym.as_slice()) {
                Some(w) => ordered.push(w),
                None => return Err(Error::MissingWeight { tuple: sym.to_vec() }),
            }
        }
        let sum = ordered.iter().fold(BigRational::zero(), |a, b| a + b);
        if !sum.is_one() {
            return Err(Error::WeightsDoNotSumToOne { sum: sum.to_string() });
        }
        Ok(Self::from_ordered(s, ordered))
    }

    fn from_ordered(s: &Sponge, weights: Vec<BigRational>) -> Self {
        let d = s.dim();
        let mut mass: Vec<BTreeMap<Prefix, BigRational>> = vec![BTreeMap::new(); d + 1];
        for (sym, w) in s.digits().iter().zip(&weights) {
            for (l, level) in mass.iter_mut().enumerate() {
                *level.entry(Prefix::new(sym[..l].to_vec())).or_insert_with(BigRational::zero) += w;
            }
        }
        let mut cond = vec![BTreeMap::new(); d + 1];
        for l in 1..=d {
            for (q, m) in &mass[l] {
                let parent = &mass[l - 1][&Prefix::new(q[..l - 1].to_vec())];
                let c = m / parent;
                let lc = ln_rational(&c);
                cond[l].insert(q.clone(), (c, lc));
            }
        }
        let mass = mass
            .into_iter()
            .map(|level| level.into_iter().map(|(q, m)| {
                let lm = ln_rational(&m);
                (q, (m, lm))
            }).collect())
            .collect();
        BernoulliMeasure { sponge: s.clone(), weights, mass, cond }
    }

    /// `p_i = 1/|D|`.
    pub fn uniform(s: &Sponge) -> Self {
        let p = BigRational::new(BigInt::one(), BigInt::from(s.digits().len()));
        Self::from_ordered(s, vec![p; s.digits().len()])
    }

    /// `p_i = 1/(N ∏_{l≥2} N(i_1..i_{l-1}))`.
    pub fn coordinate_uniform(s: &Sponge) -> Self {
        let weights = s
            .digits()
            .iter()
            .map(|sym| {
                let mut den = BigUint::one();
                for l in 0..s.dim() {
                    den *= s.fibre_count(&sym[..l]).expect("prefix of a digit");
                }
                BigRational::new(BigInt::one(), BigInt::from(den))
            })
            .collect();
        Self::from_ordered(s, weights)
    }

    pub fn sponge(&self) -> &Sponge {
        &self.sponge
    }

    /// Weights in the sponge's digit order.
    pub fn weights(&self) -> impl Iterator<Item = (&DigitTuple, &BigRational)> {
        self.sponge.digits().iter().zip(&self.weights)
    }

    pub fn weight(&self, tuple: &[u32]) -> Option<&BigRational> {
        self.sponge.digits().binary_search_by(|t| t.as_slice().cmp(tuple)).ok().map(|i| &self.weights[i])
    }

    /// Total weight of digits starting with `prefix`; `None` off the projection.
    pub fn prefix_mass(&self, prefix: &[u32]) -> Option<&BigRational> {
        self.mass.get(prefix.len())?.get(&Prefix::new(prefix.to_vec())).map(|(m, _)| m)
    }

    fn prefix_mass_entry(&self, prefix: &[u32]) -> Option<&(BigRational, f64)> {
        self.mass.get(prefix.len())?.get(&Prefix::new(prefix.to_vec()))
    }

    /// `p(next | prefix)`, zero when the extension leaves `D_l`.
    pub fn conditional_prob(&self, prefix: &[u32], next: u32) -> Result<BigRational> {
        if prefix.len() >= self.sponge.dim() || !self.sponge.in_projection(prefix) {
            return Err(Error::PrefixNotInSponge { prefix: prefix.to_vec() });
        }
        let mut q = prefix.to_vec();
        q.push(next);
        Ok(self.cond[q.len()].get(&Prefix::new(q)).map_or_else(BigRational::zero, |(c, _)| c.clone()))
    }

    /// Smallest and largest conditional `p(i_l | i_1..i_{l-1})` at level `l`.
    pub fn conditional_range(&self, l: usize) -> (f64, f64) {
        self.cond[l].values().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (c, _)| {
            let v = num_traits::ToPrimitive::to_f64(c).unwrap_or(f64::NAN);
            (lo.min(v), hi.max(v))
        })
    }

    /// `μ̃(Q(ω, r))`.
    pub fn cube_measure(&self, word: &[DigitTuple], r: &Scale) -> Result<RationalLog> {
        self.cube_measure_with_budget(word, r, PRECISION_BUDGET)
    }

    pub fn cube_measure_with_budget(&self, word: &[DigitTuple], r: &Scale, budget: usize) -> Result<RationalLog> {
        let e = scale_exponents(&self.sponge, r);
        let needed = e.first() as usize;
        if word.len() < needed {
            return Err(Error::WordTooShort { len: word.len(), needed });
        }
        let mut tracks = Vec::with_capacity(e.k.len());
        for (l, &k) in e.k.iter().enumerate() {
            tracks.push(word[..k as usize].iter().map(|sym| sym[l]).collect());
        }
        self.measure_of_tracks(&e.k, &tracks, budget)
    }

    /// Measure of a symbolic cube given by its tracks.
    pub fn approximate_cube_measure(&self, q: &ApproximateCube) -> Result<RationalLog> {
        self.measure_of_tracks(&q.k, &q.tracks, PRECISION_BUDGET)
    }

    /// Each position contributes the product of its active conditionals,
    /// which telescopes to the mass of the active prefix.
    fn measure_of_tracks(&self, k: &[u64], tracks: &[Vec<u32>], budget: usize) -> Result<RationalLog> {
        let factors: u64 = k.iter().sum();
        let exact = factors as usize <= budget;
        let positions = k.first().copied().unwrap_or(0) as usize;
        let mut value = BigRational::one();
        let mut log_value = 0.0;
        let mut prefix = Vec::with_capacity(k.len());
        for t in 0..positions {
            prefix.clear();
            prefix.extend(k.iter().zip(tracks).take_while(|(&kl, _)| (t as u64) < kl).map(|(_, track)| track[t]));
            let (m, lm) = self.prefix_mass_entry(&prefix).ok_or(Error::ZeroMeasure)?;
            if exact {
                value *= m;
            }
            log_value += lm;
        }
        Ok(RationalLog { exact: exact.then_some(value), log_value })
    }

    /// Brackets `μ(B(center, radius))` by the depth-`depth` cylinders.
    ///
    /// The lower value sums cylinders whose boxes lie in the closed ball, the
    /// upper value those whose boxes meet it. Subtrees decided early are not
    /// expanded; `cap` bounds the number of boxes examined.
    pub fn ball_measure_bounds(
        &self,
        center: &[BigRational],
        radius: &BigRational,
        depth: u64,
        cap: u64,
    ) -> Result<(RationalLog, RationalLog)> {
        let s = &self.sponge;
        let d = s.dim();
        if center.len() != d {
            return Err(Error::DimensionMismatch { found: center.len(), expected: d });
        }
        if radius < &BigRational::zero() {
            return Err(Error::InvalidArgument("radius must be non-negative".into()));
        }
        let r_sq = radius * radius;
        let mut lower = BigRational::zero();
        let mut upper = BigRational::zero();
        let mut visited = 0u64;
        // (level, per-coordinate indices, cylinder weight)
        let mut stack: Vec<(u64, Vec<BigUint>, BigRational)> = vec![(0, vec![BigUint::zero(); d], BigRational::one())];
        while let Some((level, idx, w)) = stack.pop() {
            visited += 1;
            if visited > cap {
                return Err(Error::EnumerationTooLarge { count: alloc::format!("more than {cap}"), cap });
            }
            let b = cell_box(s.bases(), &vec![level; d], &idx);
            if b.min_dist_sq(center) > r_sq {
                continue;
            }
            if b.max_dist_sq(center) <= r_sq {
                lower += &w;
                upper += &w;
                continue;
            }
            if level == depth {
                upper += &w;
                continue;
            }
            for (sym, p) in s.digits().iter().zip(&self.weights).rev() {
                let child = idx.iter().zip(s.bases()).zip(sym.iter()).map(|((i, &n), &digit)| i * n + digit).collect();
                stack.push((level + 1, child, &w * p));
            }
        }
        Ok((RationalLog::from_exact(lower), RationalLog::from_exact(upper)))
    }
}

/// Free-function form of [`BernoulliMeasure::coordinate_uniform`].
pub fn coordinate_uniform(s: &Sponge) -> BernoulliMeasure {
    BernoulliMeasure::coordinate_uniform(s)
}
