//! Numeric harnesses: measure sandwiches, ball scaling under separation,
//! doubling certificates, weak tangents and the uniform-fibres dichotomy.
//!
//! Everything is deterministic given its seed. Scale pairs are powers of a
//! base so cube measures stay exact rationals.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::seq::index::sample;
use rand::Rng;

use crate::cubes::{
    approximate_cube, count_subcubes, geometric_box, scale_exponents, tau_eventually_constant, ApproximateCube,
    BoxSet, Hypercuboid, Interval, Refinement, Scale,
};
use crate::dims::{assouad_dim, dichotomy, lower_dim, Dichotomy};
use crate::measure::{BernoulliMeasure, RationalLog};
use crate::model::{DigitTuple, Extremum, Sponge};
use crate::numeric::{ln_biguint, pow_u};
use crate::{Error, Result};

pub use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Sampling parameters shared by the scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanConfig {
    pub samples: u64,
    pub seed: u64,
    /// Deepest scale exponent (cube scans) or cylinder depth (ball scan).
    pub depth: u64,
    /// Keep every sample in the report.
    pub record: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { samples: 1000, seed: 0, depth: 40, record: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// A sampled scale pair `r = b^{-fine} < R = b^{-coarse}` for the scan base `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSample {
    pub word: Vec<DigitTuple>,
    pub coarse: u64,
    pub fine: u64,
    pub ln_ratio_low: f64,
    pub ln_ratio_high: f64,
    pub ln_lower_bound: f64,
    pub ln_upper_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub side: BoundSide,
    pub sample: ScanSample,
}

/// Bounds a measure satisfies from its own extremal conditionals.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnBounds {
    pub c0: f64,
    pub c1: f64,
    pub lower_exponent: f64,
    pub upper_exponent: f64,
    pub violations: u64,
    pub worst_lower_slack: f64,
    pub worst_upper_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub samples: u64,
    /// Base whose powers the sampled scales are.
    pub scale_base: u32,
    /// Natural-log margins; negative means a violation.
    pub worst_lower_slack: f64,
    pub worst_upper_slack: f64,
    pub violations: Vec<Violation>,
    pub constants_used: (f64, f64),
    pub exponents_used: (f64, f64),
    /// Only for cube scans of a general measure.
    pub own_bounds: Option<OwnBounds>,
    pub records: Vec<ScanSample>,
}

impl ScanReport {
    fn new(scale_base: u32, constants: (f64, f64), exponents: (f64, f64)) -> Self {
        ScanReport {
            samples: 0,
            scale_base,
            worst_lower_slack: f64::INFINITY,
            worst_upper_slack: f64::INFINITY,
            violations: Vec::new(),
            constants_used: constants,
            exponents_used: exponents,
            own_bounds: None,
            records: Vec::new(),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// Folds one sample; `ln_ratio_low ≤ ln_ratio_high` bracket the ratio.
    fn push(&mut self, sample: ScanSample, record: bool) {
        self.samples += 1;
        let lower_slack = sample.ln_ratio_high - sample.ln_lower_bound;
        let upper_slack = sample.ln_upper_bound - sample.ln_ratio_low;
        self.worst_lower_slack = self.worst_lower_slack.min(lower_slack);
        self.worst_upper_slack = self.worst_upper_slack.min(upper_slack);
        if lower_slack < 0.0 {
            self.violations.push(Violation { side: BoundSide::Lower, sample: sample.clone() });
        }
        if upper_slack < 0.0 {
            self.violations.push(Violation { side: BoundSide::Upper, sample: sample.clone() });
        }
        if record {
            self.records.push(sample);
        }
    }
}

fn random_word(s: &Sponge, rng: &mut ChaCha8Rng, len: usize) -> Vec<DigitTuple> {
    let digits = s.digits();
    (0..len).map(|_| digits[rng.gen_range(0..digits.len())].clone()).collect()
}

/// `0 ≤ a < b ≤ max`.
fn random_pair(rng: &mut ChaCha8Rng, max: u64) -> (u64, u64) {
    let a = rng.gen_range(0..max);
    let b = rng.gen_range(a + 1..=max);
    (a, b)
}

fn sandwich_exponents(s: &Sponge) -> Result<(f64, f64)> {
    Ok((lower_dim(s)?, assouad_dim(s)?))
}

fn ln_nd_pow_d(s: &Sponge) -> f64 {
    s.dim() as f64 * libm::log(*s.bases().last().unwrap() as f64)
}

/// Checks `n_d^{-d}(R/r)^{dim_L} ≤ μ(Q(ω,R))/μ(Q(ω,r)) ≤ n_d^d (R/r)^{dim_A}`
/// over random words and scale pairs `(n_1^{-a}, n_1^{-b})`.
///
/// The report also carries the bounds the measure satisfies with exponents
/// from its own extremal conditionals; for the coordinate uniform measure
/// these coincide with the dimension exponents.
pub fn scan_cube_ratios(s: &Sponge, m: &BernoulliMeasure, cfg: &ScanConfig) -> Result<ScanReport> {
    let (dim_l, dim_a) = sandwich_exponents(s)?;
    if cfg.depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let n1 = s.bases()[0];
    let ln_n1 = libm::log(n1 as f64);
    let ln_c = ln_nd_pow_d(s);
    let mut report = ScanReport::new(n1, (libm::exp(-ln_c), libm::exp(ln_c)), (dim_l, dim_a));

    let (mut ln_c0_own, mut ln_c1_own, mut s_l_own, mut s_a_own) = (0.0, 0.0, 0.0, 0.0);
    for (l, &n) in s.bases().iter().enumerate() {
        let (pmin, pmax) = m.conditional_range(l + 1);
        let ln_n = libm::log(n as f64);
        ln_c1_own -= libm::log(pmin);
        ln_c0_own += libm::log(pmax);
        s_a_own -= libm::log(pmin) / ln_n;
        s_l_own -= libm::log(pmax) / ln_n;
    }
    let mut own = OwnBounds {
        c0: libm::exp(ln_c0_own),
        c1: libm::exp(ln_c1_own),
        lower_exponent: s_l_own,
        upper_exponent: s_a_own,
        violations: 0,
        worst_lower_slack: f64::INFINITY,
        worst_upper_slack: f64::INFINITY,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.samples {
        let word = random_word(s, &mut rng, cfg.depth as usize);
        let (a, b) = random_pair(&mut rng, cfg.depth);
        let big = m.cube_measure(&word, &Scale::inv_pow(n1, a))?;
        let small = m.cube_measure(&word, &Scale::inv_pow(n1, b))?;
        let ln_ratio = big.ratio(&small).log_value;
        let ln_scale = (b - a) as f64 * ln_n1;

        let own_lower = ln_ratio - (ln_c0_own + s_l_own * ln_scale);
        let own_upper = ln_c1_own + s_a_own * ln_scale - ln_ratio;
        own.worst_lower_slack = own.worst_lower_slack.min(own_lower);
        own.worst_upper_slack = own.worst_upper_slack.min(own_upper);
        if own_lower < 0.0 || own_upper < 0.0 {
            own.violations += 1;
        }

        let sample = ScanSample {
            word,
            coarse: a,
            fine: b,
            ln_ratio_low: ln_ratio,
            ln_ratio_high: ln_ratio,
            ln_lower_bound: -ln_c + dim_l * ln_scale,
            ln_upper_bound: ln_c + dim_a * ln_scale,
        };
        report.push(sample, cfg.record);
    }
    report.own_bounds = Some(own);
    Ok(report)
}

/// Checks `n_d^{-d}(R/r)^{dim_L} ≤ N_{r,ω} ≤ n_d^d (R/r)^{dim_A}` for the
/// number of scale-`r` cubes inside `Q(ω, R)`.
pub fn scan_subcube_counts(s: &Sponge, cfg: &ScanConfig) -> Result<ScanReport> {
    let (dim_l, dim_a) = sandwich_exponents(s)?;
    if cfg.depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let n1 = s.bases()[0];
    let ln_n1 = libm::log(n1 as f64);
    let ln_c = ln_nd_pow_d(s);
    let mut report = ScanReport::new(n1, (libm::exp(-ln_c), libm::exp(ln_c)), (dim_l, dim_a));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.samples {
        let word = random_word(s, &mut rng, cfg.depth as usize);
        let (a, b) = random_pair(&mut rng, cfg.depth);
        let q = approximate_cube(s, &word, &Scale::inv_pow(n1, a))?;
        let count = count_subcubes(s, &q, &Scale::inv_pow(n1, b))?;
        let ln_count = ln_biguint(&count);
        let ln_scale = (b - a) as f64 * ln_n1;
        let sample = ScanSample {
            word,
            coarse: a,
            fine: b,
            ln_ratio_low: ln_count,
            ln_ratio_high: ln_count,
            ln_lower_bound: -ln_c + dim_l * ln_scale,
            ln_upper_bound: ln_c + dim_a * ln_scale,
        };
        report.push(sample, cfg.record);
    }
    Ok(report)
}

/// The ball-scaling constants `(C_0, C_1)` used under separation.
pub fn ball_constants(s: &Sponge) -> Result<(f64, f64)> {
    let (dim_l, dim_a) = sandwich_exponents(s)?;
    let n1 = s.bases()[0] as f64;
    let spread = 2.0 * s.bases().iter().map(|&n| n as f64).sum::<f64>() * n1 * n1;
    let ln_c = ln_nd_pow_d(s);
    let ln_spread = libm::log(spread);
    Ok((libm::exp(-ln_c - dim_l * ln_spread), libm::exp(ln_c + dim_a * ln_spread)))
}

/// Ball version of the sandwich for the coordinate uniform measure of a
/// sponge with the very strong separation condition.
///
/// Centres are `τ(ω j^∞)` for a random word `ω` of length `depth` and a
/// random digit `j`; radii are `n_1^{-a} > n_1^{-b}` with `b ≤ depth/2`, so
/// the depth-`depth` cylinders resolve both balls. Ball measures are only
/// bracketed, so the check pairs the lower bracket with the upper bound and
/// the upper bracket with the lower bound: a reported violation is certain.
pub fn scan_ball_ratios_vssc(s: &Sponge, cfg: &ScanConfig, cap: u64) -> Result<ScanReport> {
    if !s.satisfies_vssc() {
        return Err(Error::VsscNotSatisfied);
    }
    let (dim_l, dim_a) = sandwich_exponents(s)?;
    if cfg.depth < 2 {
        return Err(Error::InvalidArgument("ball scan depth must be at least 2".into()));
    }
    let (c0, c1) = ball_constants(s)?;
    let (ln_c0, ln_c1) = (libm::log(c0), libm::log(c1));
    let m = BernoulliMeasure::coordinate_uniform(s);
    let n1 = s.bases()[0];
    let ln_n1 = libm::log(n1 as f64);
    let mut report = ScanReport::new(n1, (c0, c1), (dim_l, dim_a));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max_exp = cfg.depth / 2;
    for _ in 0..cfg.samples {
        let word = random_word(s, &mut rng, cfg.depth as usize);
        let tail = s.digits()[rng.gen_range(0..s.digits().len())].clone();
        let (a, b) = random_pair(&mut rng, max_exp);
        let centre = tau_eventually_constant(s, &word, &tail)?;
        let big_radius = crate::numeric::inv_pow(n1, a);
        let small_radius = crate::numeric::inv_pow(n1, b);
        let (big_lo, big_hi) = m.ball_measure_bounds(&centre, &big_radius, cfg.depth, cap)?;
        let (small_lo, small_hi) = m.ball_measure_bounds(&centre, &small_radius, cfg.depth, cap)?;
        let ln_scale = (b - a) as f64 * ln_n1;
        let sample = ScanSample {
            word,
            coarse: a,
            fine: b,
            ln_ratio_low: big_lo.log_value - small_hi.log_value,
            ln_ratio_high: big_hi.log_value - small_lo.log_value,
            ln_lower_bound: ln_c0 + dim_l * ln_scale,
            ln_upper_bound: ln_c1 + dim_a * ln_scale,
        };
        report.push(sample, cfg.record);
    }
    Ok(report)
}

/// Which pairs of same-scale cubes count as neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbourhood {
    /// Boxes share a codimension-one face.
    Face,
    /// Closed boxes intersect.
    Touching,
    /// Grid indices differ by at most `g` in every coordinate.
    Near(u32),
}

impl Neighbourhood {
    fn reach(self) -> i64 {
        match self {
            Neighbourhood::Face | Neighbourhood::Touching => 1,
            Neighbourhood::Near(g) => g as i64,
        }
    }

    fn accepts(self, diff: &[i64]) -> bool {
        if diff.iter().all(|&h| h == 0) {
            return false;
        }
        match self {
            Neighbourhood::Face => diff.iter().filter(|&&h| h != 0).count() == 1 && diff.iter().all(|h| h.abs() <= 1),
            _ => diff.iter().all(|h| h.abs() <= self.reach()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingConfig {
    pub max_depth: u64,
    pub neighbourhood: Neighbourhood,
    /// Growth must exceed `1 + tolerance` for a non-doubling verdict.
    pub tolerance: f64,
    /// Trailing depths over which the maximum ratio must strictly increase.
    pub monotone_depths: usize,
}

impl Default for DoublingConfig {
    fn default() -> Self {
        DoublingConfig { max_depth: 10, neighbourhood: Neighbourhood::Face, tolerance: 1e-6, monotone_depths: 3 }
    }
}

/// Largest neighbour ratio at scale `n_d^{-depth}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRatio {
    pub depth: u64,
    /// `None` when no two cubes are neighbours at this depth.
    pub max_ratio: Option<RationalLog>,
    /// The pair attaining it, heavier cube first.
    pub pair: Option<(ApproximateCube, ApproximateCube)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DoublingVerdict {
    DoublingUpToDepth(u64),
    NonDoublingCertificate { growth_rate: f64, monotone_from: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoublingReport {
    pub neighbourhood: Neighbourhood,
    pub per_depth: Vec<DepthRatio>,
    /// Per-depth factor of the fitted maximum ratio.
    pub growth_rate: f64,
    pub verdict: DoublingVerdict,
}

type DpState = Vec<i64>;

struct DpEntry {
    value: f64,
    prev: DpState,
    heavy: usize,
    light: usize,
}

/// Maximum of `μ(A)/μ(B)` over neighbouring cubes at exponents `k`.
///
/// Grid indices are base-`n_l` readings of the tracks and measures factor
/// over positions, so the maximum is a dynamic programme over positions
/// whose state is the running index difference per coordinate. Differences
/// that can no longer return to the neighbourhood are dropped.
fn max_neighbour_ratio(
    s: &Sponge,
    m: &BernoulliMeasure,
    k: &[u64],
    hood: Neighbourhood,
) -> Result<Option<(ApproximateCube, ApproximateCube)>> {
    let d = s.dim();
    let reach = hood.reach();
    let positions = k[0] as usize;
    let mut layers: Vec<BTreeMap<DpState, DpEntry>> = Vec::with_capacity(positions);
    let mut current: BTreeMap<DpState, f64> = BTreeMap::new();
    current.insert(vec![0; d], 0.0);
    for t in 0..positions {
        let active = k.iter().take_while(|&&kl| (t as u64) < kl).count();
        let options = s.projection(active)?;
        let masses: Vec<f64> = options
            .iter()
            .map(|p| crate::numeric::ln_rational(m.prefix_mass(p).expect("projection has mass")))
            .collect();
        let mut next: BTreeMap<DpState, DpEntry> = BTreeMap::new();
        for (state, &value) in &current {
            for (hi, heavy) in options.iter().enumerate() {
                'light: for (li, light) in options.iter().enumerate() {
                    let mut new_state = state.clone();
                    for l in 0..active {
                        let n = s.bases()[l] as i64;
                        let h = state[l] * n + light[l] as i64 - heavy[l] as i64;
                        let remaining = k[l] - t as u64 - 1;
                        if !can_return(h, n, remaining, reach) {
                            continue 'light;
                        }
                        new_state[l] = h;
                    }
                    let v = value + masses[hi] - masses[li];
                    let better = next.get(&new_state).is_none_or(|e| v > e.value);
                    if better {
                        next.insert(new_state, DpEntry { value: v, prev: state.clone(), heavy: hi, light: li });
                    }
                }
            }
        }
        current = next.iter().map(|(st, e)| (st.clone(), e.value)).collect();
        layers.push(next);
    }
    let best = current
        .iter()
        .filter(|(st, _)| hood.accepts(st))
        .fold(None::<(&DpState, f64)>, |acc, (st, &v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((st, v)),
        });
    let Some((state, _)) = best else {
        return Ok(None);
    };
    let mut heavy_tracks: Vec<Vec<u32>> = k.iter().map(|&kl| vec![0; kl as usize]).collect();
    let mut light_tracks = heavy_tracks.clone();
    let mut state = state.clone();
    for t in (0..positions).rev() {
        let entry = &layers[t][&state];
        let active = k.iter().take_while(|&&kl| (t as u64) < kl).count();
        let options = s.projection(active)?;
        for l in 0..active {
            heavy_tracks[l][t] = options[entry.heavy][l];
            light_tracks[l][t] = options[entry.light][l];
        }
        state = entry.prev.clone();
    }
    let scale = Scale::inv_pow(*s.bases().last().unwrap(), 0);
    let heavy = ApproximateCube { scale: scale.clone(), k: k.to_vec(), tracks: heavy_tracks };
    let light = ApproximateCube { scale, k: k.to_vec(), tracks: light_tracks };
    Ok(Some((heavy, light)))
}

/// Whether an index difference `h` with `remaining` digits still to come can
/// end within `reach`: the final difference is `h n^rem + L`, `|L| < n^rem`.
fn can_return(h: i64, n: i64, remaining: u64, reach: i64) -> bool {
    let a = h.abs();
    if a == 0 {
        return true;
    }
    if a > reach {
        return false;
    }
    // (|h| - 1) n^rem + 1 ≤ reach
    let mut span: i64 = 1;
    for _ in 0..remaining {
        span = span.saturating_mul(n);
        if span > reach {
            break;
        }
    }
    (a - 1).saturating_mul(span).saturating_add(1) <= reach
}

/// Tracks neighbour-pair measure ratios at scales `n_d^{-1}, …, n_d^{-max_depth}`.
pub fn doubling_report(s: &Sponge, m: &BernoulliMeasure, cfg: &DoublingConfig) -> Result<DoublingReport> {
    let nd = *s.bases().last().unwrap();
    let mut per_depth = Vec::with_capacity(cfg.max_depth as usize);
    for depth in 1..=cfg.max_depth {
        let r = Scale::inv_pow(nd, depth);
        let e = scale_exponents(s, &r);
        let pair = max_neighbour_ratio(s, m, &e.k, cfg.neighbourhood)?;
        let (max_ratio, pair) = match pair {
            Some((mut a, mut b)) => {
                a.scale = r.clone();
                b.scale = r.clone();
                let ratio = m.approximate_cube_measure(&a)?.ratio(&m.approximate_cube_measure(&b)?);
                (Some(ratio), Some((a, b)))
            }
            None => (None, None),
        };
        per_depth.push(DepthRatio { depth, max_ratio, pair });
    }
    let points: Vec<(f64, f64)> = per_depth
        .iter()
        .filter_map(|p| p.max_ratio.as_ref().map(|r| (p.depth as f64, r.log_value)))
        .collect();
    let window = cfg.monotone_depths.max(2);
    let growth_rate = if points.len() >= 2 {
        libm::exp(slope(&points[points.len().saturating_sub(window)..]))
    } else {
        1.0
    };
    let monotone = points.len() >= cfg.monotone_depths
        && points[points.len() - cfg.monotone_depths..].windows(2).all(|w| w[1].1 > w[0].1);
    let verdict = if growth_rate > 1.0 + cfg.tolerance && monotone {
        DoublingVerdict::NonDoublingCertificate {
            growth_rate,
            monotone_from: points[points.len() - cfg.monotone_depths].0 as u64,
        }
    } else {
        DoublingVerdict::DoublingUpToDepth(cfg.max_depth)
    };
    Ok(DoublingReport { neighbourhood: cfg.neighbourhood, per_depth, growth_rate, verdict })
}

/// Least-squares slope.
fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// The witnesses `i(2), …, i(d)`: lexicographically smallest digits whose
/// `(l-1)`-prefix attains the extreme fibre count.
pub fn witnesses(s: &Sponge, mode: Extremum) -> Result<Vec<DigitTuple>> {
    (2..=s.dim()).map(|l| s.extremal_witness(l, mode).cloned()).collect()
}

/// `ω(R)` truncated to `k_1(R)` symbols, with the default witnesses.
pub fn tangent_word(s: &Sponge, r: &Scale, mode: Extremum) -> Result<Vec<DigitTuple>> {
    tangent_word_with(s, r, &witnesses(s, mode)?)
}

/// `ω(R)` for explicit witnesses `i(2), …, i(d)`.
///
/// Positions up to `k_d(R)` carry the smallest digit; positions in
/// `(k_l(R), k_{l-1}(R)]` carry `i(l)`.
pub fn tangent_word_with(s: &Sponge, r: &Scale, witnesses: &[DigitTuple]) -> Result<Vec<DigitTuple>> {
    if !s.is_strict() {
        return Err(Error::NonStrictBases);
    }
    let d = s.dim();
    if witnesses.len() + 1 != d {
        return Err(Error::DimensionMismatch { found: witnesses.len(), expected: d - 1 });
    }
    for w in witnesses {
        if !s.contains(w) {
            return Err(Error::DigitNotInSponge { tuple: w.to_vec() });
        }
    }
    let k = scale_exponents(s, r).k;
    let mut word = Vec::with_capacity(k[0] as usize);
    for t in 0..k[0] {
        // block l: k_l ≤ t < k_{l-1} (0-based)
        let sym = match (1..d).rev().find(|&l| k[l] <= t && t < k[l - 1]) {
            Some(l) => witnesses[l - 1].clone(),
            None => s.digits()[0].clone(),
        };
        word.push(sym);
    }
    Ok(word)
}

/// `T^Q`: the affine map sending the natural hypercuboid of `Q` to `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentMap {
    pub cube: ApproximateCube,
    /// `n_l^{k_l}`.
    pub factors: Vec<BigUint>,
    /// Lower corner of the hypercuboid.
    pub offsets: Vec<BigRational>,
}

impl TangentMap {
    pub fn new(s: &Sponge, cube: ApproximateCube) -> Self {
        let factors = s.bases().iter().zip(&cube.k).map(|(&n, &k)| pow_u(n, k)).collect();
        let offsets = geometric_box(s, &cube).intervals.into_iter().map(|iv| iv.lo).collect();
        TangentMap { cube, factors, offsets }
    }

    pub fn apply(&self, b: &Hypercuboid) -> Hypercuboid {
        let intervals = b
            .intervals
            .iter()
            .zip(self.factors.iter().zip(&self.offsets))
            .map(|(iv, (f, o))| {
                let f = BigRational::from_integer(BigInt::from(f.clone()));
                Interval { lo: (&iv.lo - o) * &f, hi: (&iv.hi - o) * &f }
            })
            .collect();
        Hypercuboid { intervals }
    }

    /// `a_Q`, the smallest scale factor.
    pub fn a_q(&self) -> &BigUint {
        self.factors.iter().min().unwrap()
    }

    /// `b_Q`, the largest scale factor.
    pub fn b_q(&self) -> &BigUint {
        self.factors.iter().max().unwrap()
    }

    pub fn lipschitz_ratio(&self) -> BigRational {
        BigRational::new(BigInt::from(self.b_q().clone()), BigInt::from(self.a_q().clone()))
    }
}

/// Digits generating each factor of `K̂ = π_1 K × ∏_{l≥2} K_l`.
pub fn hat_factors(s: &Sponge, witnesses: &[DigitTuple]) -> Result<Vec<Vec<u32>>> {
    let mut out = Vec::with_capacity(s.dim());
    out.push(s.projection(1)?.iter().map(|p| p[0]).collect());
    for (l, w) in (2..=s.dim()).zip(witnesses) {
        out.push(s.fibre(&w[..l - 1]).ok_or(Error::PrefixNotInSponge { prefix: w[..l - 1].to_vec() })?.to_vec());
    }
    Ok(out)
}

/// `dim_B K̂`, the sum of the factor similarity dimensions.
pub fn hat_box_dim(s: &Sponge, mode: Extremum) -> Result<f64> {
    let factors = hat_factors(s, &witnesses(s, mode)?)?;
    Ok(factors
        .iter()
        .zip(s.bases())
        .map(|(f, &n)| libm::log(f.len() as f64) / libm::log(n as f64))
        .sum())
}

fn check_boundary_case(s: &Sponge, factors: &[Vec<u32>]) -> Result<()> {
    for (l, (f, &n)) in factors.iter().zip(s.bases()).enumerate() {
        if f.len() == 1 && (f[0] == 0 || f[0] == n - 1) {
            return Err(Error::Unsupported(alloc::format!(
                "the limit set lies in the face x_{} = {}; this boundary case is not handled",
                l + 1,
                if f[0] == 0 { 0 } else { 1 }
            )));
        }
    }
    Ok(())
}

/// A set of cells in the grid with sides `n_l^{-level}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridCells {
    pub bases: Vec<u32>,
    pub level: u64,
    pub cells: Vec<Vec<u64>>,
}

impl GridCells {
    pub fn to_box_set(&self) -> BoxSet {
        let d = self.bases.len();
        let k = vec![self.level; d];
        let boxes = self
            .cells
            .iter()
            .map(|c| {
                let idx: Vec<BigUint> = c.iter().map(|&i| BigUint::from(i)).collect();
                crate::cubes::cell_box(&self.bases, &k, &idx)
            })
            .collect();
        BoxSet { dim: d, boxes }
    }
}

fn grid_total(bases: &[u32], level: u64, cap: u64) -> Result<Vec<u64>> {
    let mut total = BigUint::one();
    let mut extent = Vec::with_capacity(bases.len());
    for &n in bases {
        let e = pow_u(n, level);
        total *= &e;
        extent.push(e);
    }
    if total > BigUint::from(cap) {
        return Err(Error::EnumerationTooLarge { count: total.to_string(), cap });
    }
    Ok(extent.iter().map(|e| e.to_u64().unwrap()).collect())
}

fn hat_cells(s: &Sponge, factors: &[Vec<u32>], level: u64, cap: u64) -> Result<GridCells> {
    grid_total(s.bases(), level, cap)?;
    let mut per_coord: Vec<Vec<u64>> = Vec::with_capacity(factors.len());
    for (f, &n) in factors.iter().zip(s.bases()) {
        let mut idx = vec![0u64];
        for _ in 0..level {
            idx = idx.iter().flat_map(|&i| f.iter().map(move |&j| i * n as u64 + j as u64)).collect();
        }
        per_coord.push(idx);
    }
    let mut cells: Vec<Vec<u64>> = vec![Vec::new()];
    for coord in &per_coord {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                coord.iter().map(move |&i| {
                    let mut c = c.clone();
                    c.push(i);
                    c
                })
            })
            .collect();
    }
    Ok(GridCells { bases: s.bases().to_vec(), level, cells })
}

/// Level-`level` pre-fractal of `K̂` for the default witnesses.
pub fn hat_set_prefractal(s: &Sponge, mode: Extremum, level: u64, cap: u64) -> Result<BoxSet> {
    if !s.is_strict() {
        return Err(Error::NonStrictBases);
    }
    let factors = hat_factors(s, &witnesses(s, mode)?)?;
    Ok(hat_cells(s, &factors, level, cap)?.to_box_set())
}

/// The tangent construction at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub word: Vec<DigitTuple>,
    pub map: TangentMap,
    pub factors: Vec<Vec<u32>>,
    /// `T^Q` applied to the refinement of `Q` by `level` more digits per coordinate.
    pub image: GridCells,
    pub hat: GridCells,
}

/// Builds `T^Q(Q)` refined by `level` digits in every coordinate, alongside
/// the level-`level` pre-fractal of `K̂`. Both live on the grid of sides
/// `n_l^{-level}`.
pub fn tangent_construction(
    s: &Sponge,
    r: &Scale,
    witnesses: &[DigitTuple],
    level: u64,
    cap: u64,
) -> Result<Tangent> {
    let word = tangent_word_with(s, r, witnesses)?;
    let factors = hat_factors(s, witnesses)?;
    check_boundary_case(s, &factors)?;
    let cube = approximate_cube(s, &word, r)?;
    let fine: Vec<u64> = cube.k.iter().map(|k| k + level).collect();
    let refinement = Refinement::new(s, &cube.k, &cube.tracks, &fine)?;
    let mut cells = Vec::new();
    refinement.for_each(cap, |tracks| {
        let cell = tracks
            .iter()
            .zip(&cube.k)
            .zip(s.bases())
            .map(|((track, &k), &n)| track[k as usize..].iter().fold(0u64, |acc, &digit| acc * n as u64 + digit as u64))
            .collect();
        cells.push(cell);
    })?;
    cells.sort();
    let image = GridCells { bases: s.bases().to_vec(), level, cells };
    let hat = hat_cells(s, &factors, level, cap)?;
    let map = TangentMap::new(s, cube);
    Ok(Tangent { word, map, factors, image, hat })
}

/// `T^Q` applied to the refinement of `Q(ω(R), R)`, as exact boxes.
pub fn tangent_image(s: &Sponge, r: &Scale, mode: Extremum, level: u64, cap: u64) -> Result<BoxSet> {
    Ok(tangent_construction(s, r, &witnesses(s, mode)?, level, cap)?.image.to_box_set())
}

/// Result of comparing the tangent image with the `K̂` pre-fractal.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentCheck {
    pub distance: f64,
    /// `√d · max_{l≥2} n_l^{-(k_{l-1}(R) - k_l(R))}`.
    pub limit_term: f64,
    /// `2√d · max_l n_l^{-level}`.
    pub resolution_slack: f64,
    pub bound: f64,
    pub ok: bool,
    /// Whether every image cell lies in the `K̂` pre-fractal truncated to the
    /// depths the construction controls.
    pub contained: bool,
    pub lipschitz_ratio: BigRational,
    pub lipschitz_ok: bool,
    pub image_cells: usize,
    pub hat_cells: usize,
}

pub fn check_tangent_convergence(s: &Sponge, r: &Scale, mode: Extremum, level: u64, cap: u64) -> Result<TangentCheck> {
    check_tangent_with(s, r, &witnesses(s, mode)?, level, cap)
}

pub fn check_tangent_with(
    s: &Sponge,
    r: &Scale,
    witnesses: &[DigitTuple],
    level: u64,
    cap: u64,
) -> Result<TangentCheck> {
    let t = tangent_construction(s, r, witnesses, level, cap)?;
    let d = s.dim();
    let k = &t.map.cube.k;
    let sqrt_d = libm::sqrt(d as f64);
    let limit_term = sqrt_d
        * (1..d)
            .map(|l| libm::pow(s.bases()[l] as f64, -((k[l - 1] - k[l]) as f64)))
            .fold(0.0, f64::max);
    let resolution_slack =
        2.0 * sqrt_d * s.bases().iter().map(|&n| libm::pow(n as f64, -(level as f64))).fold(0.0, f64::max);
    let bound = limit_term + resolution_slack;
    let distance = grid_hausdorff(&t.image, &t.hat, cap)?;
    let contained = lemma_containment(&t, k, level);
    let lipschitz_ratio = t.map.lipschitz_ratio();
    let nd = BigRational::from_integer(BigInt::from(*s.bases().last().unwrap()));
    Ok(TangentCheck {
        distance,
        limit_term,
        resolution_slack,
        bound,
        ok: distance <= bound,
        contained,
        lipschitz_ok: lipschitz_ratio <= nd,
        lipschitz_ratio,
        image_cells: t.image.cells.len(),
        hat_cells: t.hat.cells.len(),
    })
}

/// Coordinate `l ≥ 2` of an image cell must follow the `K_l` digits for the
/// first `min(level, k_{l-1} - k_l)` places; deeper digits are not governed
/// by the witness.
fn lemma_containment(t: &Tangent, k: &[u64], level: u64) -> bool {
    let bases = &t.image.bases;
    t.image.cells.iter().all(|cell| {
        (1..bases.len()).all(|l| {
            let n = bases[l] as u64;
            let controlled = level.min(k[l - 1] - k[l]);
            let mut idx = cell[l];
            let mut digits = vec![0u64; level as usize];
            for slot in digits.iter_mut().rev() {
                *slot = idx % n;
                idx /= n;
            }
            digits[..controlled as usize].iter().all(|&digit| t.factors[l].contains(&(digit as u32)))
        })
    })
}

/// Hausdorff distance between two unions of grid cells, measured as the
/// largest shift from a cell of one set to the nearest cell of the other.
/// This bounds the distance between the unions from above.
pub fn grid_hausdorff(a: &GridCells, b: &GridCells, cap: u64) -> Result<f64> {
    if a.bases != b.bases || a.level != b.level {
        return Err(Error::InvalidArgument("grid cell sets live on different grids".into()));
    }
    if a.cells.is_empty() || b.cells.is_empty() {
        return Ok(if a.cells.is_empty() && b.cells.is_empty() { 0.0 } else { f64::INFINITY });
    }
    let extent = grid_total(&a.bases, a.level, cap)?;
    let spacing: Vec<f64> = a.bases.iter().map(|&n| libm::pow(n as f64, -(a.level as f64))).collect();
    let to_b = distance_transform(&extent, &spacing, &b.cells);
    let to_a = distance_transform(&extent, &spacing, &a.cells);
    let flat = |c: &[u64]| c.iter().zip(&extent).fold(0usize, |acc, (&i, &e)| acc * e as usize + i as usize);
    let directed = |cells: &[Vec<u64>], field: &[f64]| cells.iter().map(|c| field[flat(c)]).fold(0.0, f64::max);
    Ok(libm::sqrt(directed(&a.cells, &to_b).max(directed(&b.cells, &to_a))))
}

/// Squared Euclidean distance from every cell centre to the nearest marked
/// centre, one axis at a time (lower envelope of parabolas).
fn distance_transform(extent: &[u64], spacing: &[f64], marked: &[Vec<u64>]) -> Vec<f64> {
    let total: usize = extent.iter().map(|&e| e as usize).product();
    let mut field = vec![f64::INFINITY; total];
    let flat = |c: &[u64]| c.iter().zip(extent).fold(0usize, |acc, (&i, &e)| acc * e as usize + i as usize);
    for c in marked {
        field[flat(c)] = 0.0;
    }
    let mut stride = total;
    for (axis, &len) in extent.iter().enumerate() {
        let len = len as usize;
        stride /= len;
        let h = spacing[axis];
        let mut line = vec![0.0; len];
        let mut out = vec![0.0; len];
        for base in 0..total {
            // visit each line once, from its first cell
            if !(base / stride).is_multiple_of(len) {
                continue;
            }
            for (i, v) in line.iter_mut().enumerate() {
                *v = field[base + i * stride];
            }
            envelope_1d(&line, h, &mut out);
            for (i, v) in out.iter().enumerate() {
                field[base + i * stride] = *v;
            }
        }
    }
    field
}

fn envelope_1d(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let sites: Vec<usize> = (0..n).filter(|&i| f[i].is_finite()).collect();
    if sites.is_empty() {
        out.iter_mut().for_each(|v| *v = f64::INFINITY);
        return;
    }
    let x = |i: usize| i as f64 * h;
    let mut v: Vec<usize> = Vec::with_capacity(sites.len());
    let mut z: Vec<f64> = Vec::with_capacity(sites.len() + 1);
    for &q in &sites {
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.clear();
                z.push(f64::NEG_INFINITY);
                z.push(f64::INFINITY);
                break;
            };
            let s = ((f[q] + x(q) * x(q)) - (f[p] + x(p) * x(p))) / (2.0 * (x(q) - x(p)));
            if s <= z[v.len() - 1] {
                v.pop();
                z.pop();
                if v.is_empty() {
                    continue;
                }
                continue;
            }
            v.push(q);
            let last = z.len() - 1;
            z[last] = s;
            z.push(f64::INFINITY);
            break;
        }
    }
    let mut j = 0;
    for (i, o) in out.iter_mut().enumerate() {
        while z[j + 1] < x(i) {
            j += 1;
        }
        let dx = x(i) - x(v[j]);
        *o = dx * dx + f[v[j]];
    }
}

/// Per-level inequality `min N ≤ |D_l| / |D_{l-1}| ≤ max N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCheck {
    pub level: usize,
    pub ratio: f64,
    pub min_fibre: usize,
    pub max_fibre: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyAudit {
    pub verdict: Dichotomy,
    pub uniform_fibres: bool,
    /// Largest level `l` (1-based, `l ≤ d-1`) whose fibre counts vary.
    pub non_uniform_level: Option<usize>,
    pub levels: Vec<LevelCheck>,
    pub consistent: bool,
}

pub fn dichotomy_audit(s: &Sponge) -> Result<DichotomyAudit> {
    let verdict = dichotomy(s)?;
    let uniform_fibres = s.has_uniform_fibres();
    let d = s.dim();
    let levels: Vec<LevelCheck> = (1..=d)
        .map(|l| {
            let ratio = s.projection(l).map_or(0, <[_]>::len) as f64 / s.projection(l - 1).map_or(1, <[_]>::len) as f64;
            let (min_fibre, max_fibre) = (s.min_fibre(l - 1), s.max_fibre(l - 1));
            LevelCheck { level: l, ratio, min_fibre, max_fibre, holds: min_fibre as f64 <= ratio && ratio <= max_fibre as f64 }
        })
        .collect();
    let non_uniform_level = (1..d).rev().find(|&l| !s.is_uniform_level(l));
    let consistent = levels.iter().all(|c| c.holds) && ((verdict == Dichotomy::AllEqual) == uniform_fibres);
    Ok(DichotomyAudit { verdict, uniform_fibres, non_uniform_level, levels, consistent })
}

/// Limits for [`random_strict_sponge`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSpongeConfig {
    pub max_dim: usize,
    pub max_base: u32,
    pub max_digits: usize,
}

impl Default for RandomSpongeConfig {
    fn default() -> Self {
        RandomSpongeConfig { max_dim: 3, max_base: 6, max_digits: 20 }
    }
}

fn random_bases(rng: &mut ChaCha8Rng, cfg: &RandomSpongeConfig) -> Vec<u32> {
    let d = rng.gen_range(2..=cfg.max_dim.min(cfg.max_base as usize - 1));
    let mut bases: Vec<u32> =
        sample(rng, cfg.max_base as usize - 1, d).into_iter().map(|i| i as u32 + 2).collect();
    bases.sort_unstable();
    bases
}

/// A valid sponge with strictly increasing bases and a random digit set.
pub fn random_strict_sponge(rng: &mut ChaCha8Rng, cfg: &RandomSpongeConfig) -> Sponge {
    loop {
        let bases = random_bases(rng, cfg);
        let grid: usize = bases.iter().map(|&n| n as usize).product();
        let size = rng.gen_range(2..=cfg.max_digits.min(grid));
        let digits: Vec<Vec<u32>> = sample(rng, grid, size)
            .into_iter()
            .map(|mut cell| {
                let mut tuple = vec![0; bases.len()];
                for (slot, &n) in tuple.iter_mut().zip(&bases).rev() {
                    *slot = (cell % n as usize) as u32;
                    cell /= n as usize;
                }
                tuple
            })
            .collect();
        if let Ok(s) = Sponge::new(bases, digits) {
            return s;
        }
    }
}

/// A valid strict sponge whose fibre counts are constant at every level.
pub fn random_uniform_fibre_sponge(rng: &mut ChaCha8Rng, cfg: &RandomSpongeConfig) -> Sponge {
    loop {
        let bases = random_bases(rng, cfg);
        let counts: Vec<usize> = bases.iter().map(|&n| rng.gen_range(2..=n as usize)).collect();
        if counts.iter().product::<usize>() > cfg.max_digits {
            continue;
        }
        let mut digits: Vec<Vec<u32>> = vec![Vec::new()];
        for (&n, &c) in bases.iter().zip(&counts) {
            let mut next = Vec::new();
            for p in &digits {
                for j in sample(rng, n as usize, c) {
                    let mut q = p.clone();
                    q.push(j as u32);
                    next.push(q);
                }
            }
            digits = next;
        }
        if let Ok(s) = Sponge::new(bases, digits) {
            return s;
        }
    }
}

/// Every strictly positive probability vector of length `len` whose entries
/// are multiples of `1/parts`, in lexicographic order of numerators.
pub fn positive_simplex_grid(len: usize, parts: u32) -> Vec<Vec<BigRational>> {
    fn fill(left: u32, slots: usize, acc: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            acc.push(left);
            out.push(acc.clone());
            acc.pop();
            return;
        }
        for a in 1..=left.saturating_sub(slots as u32 - 1) {
            acc.push(a);
            fill(left - a, slots - 1, acc, out);
            acc.pop();
        }
    }
    let mut numerators = Vec::new();
    if len > 0 && parts as usize >= len {
        fill(parts, len, &mut Vec::new(), &mut numerators);
    }
    let den = BigInt::from(parts);
    numerators
        .into_iter()
        .map(|v| v.into_iter().map(|a| BigRational::new(BigInt::from(a), den.clone())).collect())
        .collect()
}

/// Seeded generator used by the scans and audits.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
