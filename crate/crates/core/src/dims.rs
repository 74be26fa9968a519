//! Closed-form dimensions of sponges.
//!
//! Assouad and lower dimension use the per-level maximum/minimum fibre
//! counts. Box and Hausdorff dimension follow the Kenyon–Peres formulas, the
//! latter through the bottom-up `Z` recursion; a parallel `Z'` recursion gives
//! an independent route to the lower dimension.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::model::{Prefix, Sponge};
use crate::{Error, Result};

/// Tolerance for deciding whether dimension values coincide.
pub const DICHOTOMY_TOLERANCE: f64 = 1e-9;
/// Tolerance for the ordering chain and the two lower-dimension routes.
pub const CHAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dichotomy {
    AllEqual,
    AllDistinct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimReport {
    /// `None` when the bases are not strictly increasing.
    pub assouad: Option<f64>,
    pub lower: Option<f64>,
    pub box_dim: f64,
    pub hausdorff: f64,
    pub lower_via_zprime: Option<f64>,
    pub strictness_ok: bool,
    pub dichotomy: Option<Dichotomy>,
}

fn ln(x: f64) -> f64 {
    libm::log(x)
}

fn require_strict(s: &Sponge) -> Result<()> {
    if s.is_strict() {
        Ok(())
    } else {
        Err(Error::NonStrictBases)
    }
}

// log N / log n_1 + Σ_{l≥2} log F_{l-1} / log n_l, with F the per-level extreme
fn extremal_formula(s: &Sponge, pick: impl Fn(usize) -> usize) -> f64 {
    s.bases()
        .iter()
        .enumerate()
        .map(|(l, &n)| ln(pick(l) as f64) / ln(n as f64))
        .sum()
}

pub fn assouad_dim(s: &Sponge) -> Result<f64> {
    require_strict(s)?;
    Ok(extremal_formula(s, |l| s.max_fibre(l)))
}

pub fn lower_dim(s: &Sponge) -> Result<f64> {
    require_strict(s)?;
    Ok(extremal_formula(s, |l| s.min_fibre(l)))
}

/// `log N / log n_1 + Σ_{l≥2} log(|D_l| / |D_{l-1}|) / log n_l`.
pub fn box_dim(s: &Sponge) -> f64 {
    (0..s.dim())
        .map(|l| {
            let here = s.projection(l + 1).map_or(0, <[Prefix]>::len) as f64;
            let below = s.projection(l).map_or(1, <[Prefix]>::len) as f64;
            ln(here / below) / ln(s.bases()[l] as f64)
        })
        .sum()
}

/// The `Z` and `Z'` tables of the Hausdorff/lower recursions, one map per
/// prefix length `0..=d`.
#[derive(Debug, Clone)]
pub struct ZTables {
    pub z: Vec<BTreeMap<Prefix, f64>>,
    pub z_prime: Vec<BTreeMap<Prefix, f64>>,
}

impl ZTables {
    pub fn compute(s: &Sponge) -> Self {
        let d = s.dim();
        let bases = s.bases();
        // exponent applied to Z_l when folding into level l-1; n_{d+1} = n_d
        let exponent = |l: usize| -> f64 {
            let here = bases[l - 1] as f64;
            let next = if l < d { bases[l] as f64 } else { bases[d - 1] as f64 };
            ln(here) / ln(next)
        };

        let mut z: Vec<BTreeMap<Prefix, f64>> = alloc::vec![BTreeMap::new(); d + 1];
        let mut zp: Vec<BTreeMap<Prefix, f64>> = alloc::vec![BTreeMap::new(); d + 1];
        for t in s.projection(d).expect("level d exists") {
            z[d].insert(t.clone(), 1.0);
            zp[d].insert(t.clone(), 1.0);
        }
        for l in (1..=d).rev() {
            let e = exponent(l);
            let min_below = zp[l].values().map(|&v| libm::pow(v, e)).fold(f64::INFINITY, f64::min);
            let mut sums: BTreeMap<Prefix, f64> = BTreeMap::new();
            for (p, &v) in &z[l] {
                *sums.entry(Prefix::new(p[..l - 1].to_vec())).or_insert(0.0) += libm::pow(v, e);
            }
            for (parent, sum) in sums {
                let n = s.fibre_count(&parent).expect("parent is in D_{l-1}") as f64;
                let zprime = n * min_below;
                debug_assert!(sum >= zprime * (1.0 - 1e-12), "Z must dominate Z'");
                zp[l - 1].insert(parent.clone(), zprime);
                z[l - 1].insert(parent, sum);
            }
        }
        ZTables { z, z_prime: zp }
    }

    pub fn z0(&self) -> f64 {
        self.z[0].values().next().copied().unwrap_or(0.0)
    }

    pub fn z0_prime(&self) -> f64 {
        self.z_prime[0].values().next().copied().unwrap_or(0.0)
    }

    /// Whether `Z_l ≥ Z'_l` holds at every prefix, up to relative `tol`.
    pub fn dominates(&self, tol: f64) -> bool {
        self.z.iter().zip(&self.z_prime).all(|(z, zp)| {
            z.iter().all(|(p, &v)| zp.get(p).is_some_and(|&w| v >= w * (1.0 - tol)))
        })
    }
}

pub fn hausdorff_dim(s: &Sponge) -> f64 {
    ln(ZTables::compute(s).z0()) / ln(s.bases()[0] as f64)
}

pub fn lower_via_zprime(s: &Sponge) -> Result<f64> {
    require_strict(s)?;
    Ok(ln(ZTables::compute(s).z0_prime()) / ln(s.bases()[0] as f64))
}

/// `AllEqual` exactly when the sponge has uniform fibres.
pub fn dichotomy(s: &Sponge) -> Result<Dichotomy> {
    require_strict(s)?;
    if s.has_uniform_fibres() {
        return Ok(Dichotomy::AllEqual);
    }
    let lower = lower_dim(s)?;
    let assouad = assouad_dim(s)?;
    let h = hausdorff_dim(s);
    let b = box_dim(s);
    debug_assert!(lower < h && h < b && b < assouad, "non-uniform fibres give four distinct values");
    Ok(Dichotomy::AllDistinct)
}

pub fn dim_report(s: &Sponge) -> DimReport {
    DimReport {
        assouad: assouad_dim(s).ok(),
        lower: lower_dim(s).ok(),
        box_dim: box_dim(s),
        hausdorff: hausdorff_dim(s),
        lower_via_zprime: lower_via_zprime(s).ok(),
        strictness_ok: s.is_strict(),
        dichotomy: dichotomy(s).ok(),
    }
}

impl DimReport {
    /// Whether `lower ≤ hausdorff ≤ box ≤ assouad` holds within `tol`.
    /// Missing values are skipped.
    pub fn chain_holds(&self, tol: f64) -> bool {
        let chain: Vec<f64> = [self.lower, Some(self.hausdorff), Some(self.box_dim), self.assouad]
            .into_iter()
            .flatten()
            .collect();
        chain.windows(2).all(|w| w[0] <= w[1] + tol)
    }
}

/// Dimensions of the three-map carpet family `(x/2, λy)`, `(x/2 + 1/2, λy)`,
/// `(x/2 + 1/2, λy + 1 - λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgFamilyDims {
    pub lambda: f64,
    pub lower: f64,
    pub hausdorff: f64,
    pub box_dim: f64,
    pub assouad: f64,
}

pub fn lg_family_dims(lambda: f64) -> Result<LgFamilyDims> {
    if !(lambda > 0.0 && lambda <= 0.5) {
        return Err(Error::LambdaOutOfRange { lambda });
    }
    let ln2 = core::f64::consts::LN_2;
    if lambda == 0.5 {
        // self-similar Sierpiński triangle
        let v = ln(3.0) / ln2;
        return Ok(LgFamilyDims { lambda, lower: v, hausdorff: v, box_dim: v, assouad: v });
    }
    let ln_lambda = ln(lambda);
    Ok(LgFamilyDims {
        lambda,
        lower: 1.0,
        hausdorff: ln(1.0 + libm::pow(2.0, -ln2 / ln_lambda)) / ln2,
        box_dim: 1.0 + ln(1.5) / -ln_lambda,
        assouad: 1.0 + ln2 / -ln_lambda,
    })
}
