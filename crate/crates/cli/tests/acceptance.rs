//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Every expected value is recomputed here from the raw digit set (closed
//! forms, brute-force enumeration) rather than read back from the library.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive};
use serde_json::Value;
use sponge_core::cubes::{approximate_cube, box_dim_slope, count_cubes, subcubes};
use sponge_core::dims::{dim_report, lower_via_zprime, CHAIN_TOLERANCE, DICHOTOMY_TOLERANCE};
use sponge_core::model::Extremum;
use sponge_core::verify::{
    ball_constants, check_tangent_convergence, doubling_report, random_strict_sponge, scan_ball_ratios_vssc,
    scan_cube_ratios, seeded_rng, tangent_construction, witnesses, DoublingConfig, DoublingVerdict, GridCells,
    Neighbourhood, RandomSpongeConfig, ScanConfig,
};
use sponge_core::{ApproximateCube, BernoulliMeasure, DigitTuple, Scale, Sponge, DEFAULT_ENUMERATION_CAP};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["sponge"];
    argv.extend_from_slice(args);
    let code = sponge_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn cli_json(args: &[&str]) -> Result<Value, String> {
    let (code, text) = cli(args);
    if code != 0 {
        return Err(format!("exit {code} for {args:?}"));
    }
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn load(name: &str) -> Sponge {
    sponge_cli::input::read_sponge(&data(name)).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn ln(x: f64) -> f64 {
    x.ln()
}

// ---------- independent closed forms from the digit list ----------

fn raw_digits(s: &Sponge) -> Vec<Vec<u32>> {
    s.digits().iter().map(|t| t.to_vec()).collect()
}

fn prefixes(digits: &[Vec<u32>], l: usize) -> BTreeSet<Vec<u32>> {
    digits.iter().map(|t| t[..l].to_vec()).collect()
}

/// Number of distinct `l`-th coordinates among digits starting with `p`.
fn fibre(digits: &[Vec<u32>], p: &[u32]) -> usize {
    digits.iter().filter(|t| t.starts_with(p)).map(|t| t[p.len()]).collect::<BTreeSet<_>>().len()
}

fn extreme_sum(bases: &[u32], digits: &[Vec<u32>], pick_max: bool) -> f64 {
    (0..bases.len())
        .map(|l| {
            let counts = prefixes(digits, l).into_iter().map(|p| fibre(digits, &p));
            let c = if pick_max { counts.max().unwrap() } else { counts.min().unwrap() };
            ln(c as f64) / ln(bases[l] as f64)
        })
        .sum()
}

fn oracle_box(bases: &[u32], digits: &[Vec<u32>]) -> f64 {
    (0..bases.len())
        .map(|l| ln(prefixes(digits, l + 1).len() as f64 / prefixes(digits, l).len() as f64) / ln(bases[l] as f64))
        .sum()
}

fn oracle_hausdorff(bases: &[u32], digits: &[Vec<u32>]) -> f64 {
    let d = bases.len();
    let mut z: BTreeMap<Vec<u32>, f64> = prefixes(digits, d).into_iter().map(|p| (p, 1.0)).collect();
    for l in (1..=d).rev() {
        let next_base = if l == d { bases[d - 1] } else { bases[l] };
        let e = ln(bases[l - 1] as f64) / ln(next_base as f64);
        let mut up: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (p, v) in &z {
            *up.entry(p[..l - 1].to_vec()).or_insert(0.0) += v.powf(e);
        }
        z = up;
    }
    ln(z[&Vec::new()]) / ln(bases[0] as f64)
}

fn oracle_uniform_fibres(digits: &[Vec<u32>], d: usize) -> bool {
    (0..d).all(|l| prefixes(digits, l).into_iter().map(|p| fibre(digits, &p)).collect::<BTreeSet<_>>().len() == 1)
}

/// Largest `k` with `n^k ≤ m^c`.
fn k_for(n: u32, m: u32, c: u64) -> u64 {
    let limit = BigUint::from(m).pow(c as u32);
    let mut k = 0u64;
    while BigUint::from(n).pow((k + 1) as u32) <= limit {
        k += 1;
    }
    k
}

// ---------- 1 ----------

fn c1() -> Outcome {
    let v = cli_json(&["dims", data("worked_example.json").to_str().unwrap()])?;
    let l = |x: f64| x.ln();
    let c = l(3.0) / l(4.0);
    let e = l(2.0) / l(3.0);
    let exact = [
        ("assouad", 2.0 + c, 2.792),
        ("lower", 1.0 + e, 1.631),
        ("box", 1.0 + l(2.5) / l(3.0) + l(2.0) / l(4.0), 2.3340),
        ("hausdorff", ((2f64.powf(c) + 1.0).powf(e) + (2.0 * 3f64.powf(c) + 1.0).powf(e)).log2(), 2.296),
    ];
    let mut worst: f64 = 0.0;
    for (key, closed, printed) in exact {
        let got = v[key].as_f64().ok_or(format!("{key} missing"))?;
        ensure((got - closed).abs() < 1e-9, || format!("{key} = {got}, closed form {closed}"))?;
        ensure((got - printed).abs() < 5e-4, || format!("{key} = {got}, printed {printed}"))?;
        worst = worst.max((got - closed).abs());
    }
    Ok(format!("max deviation from closed forms {worst:.1e}"))
}

// ---------- 2 ----------

fn c2() -> Outcome {
    let v = cli_json(&["weights", data("worked_example.json").to_str().unwrap()])?;
    let expected = [
        ("0,0,0", "1/8"),
        ("0,0,3", "1/8"),
        ("0,1,2", "1/4"),
        ("1,0,2", "1/6"),
        ("1,1,0", "1/18"),
        ("1,1,1", "1/18"),
        ("1,1,2", "1/18"),
        ("1,2,0", "1/18"),
        ("1,2,2", "1/18"),
        ("1,2,3", "1/18"),
    ];
    let table = v["weights"].as_object().ok_or("no weights")?;
    ensure(table.len() == expected.len(), || format!("{} weights", table.len()))?;
    let mut sum = BigRational::from_integer(0.into());
    for (k, w) in expected {
        ensure(table.get(k).and_then(Value::as_str) == Some(w), || format!("{k}: {:?}", table.get(k)))?;
        sum += sponge_cli::input::parse_rational(w)?;
    }
    ensure(sum.is_one() && v["sum"] == "1", || format!("sum {sum}"))?;
    // the table is the library's measure
    let m = BernoulliMeasure::coordinate_uniform(&load("worked_example.json"));
    for (t, w) in m.weights() {
        ensure(table[&sponge_cli::input::tuple_string(t)] == w.to_string(), || format!("{t}"))?;
    }
    Ok("10 weights exact, sum 1".into())
}

// ---------- 3 ----------

/// `ln μ(Q(ω, n_1^{-c}))` for the coordinate uniform measure, from fibre counts.
fn oracle_ln_cube(bases: &[u32], digits: &[Vec<u32>], word: &[DigitTuple], c: u64) -> f64 {
    let k: Vec<u64> = bases.iter().map(|&n| k_for(n, bases[0], c)).collect();
    let mut total = 0.0;
    for (t, sym) in word.iter().enumerate().take(k[0] as usize) {
        for (l, &kl) in k.iter().enumerate() {
            if kl > t as u64 {
                let p = &sym.as_slice()[..l];
                let n = if l == 0 { prefixes(digits, 1).len() } else { fibre(digits, p) };
                total -= ln(n as f64);
            }
        }
    }
    total
}

fn c3() -> Outcome {
    let s = load("worked_example.json");
    let m = BernoulliMeasure::coordinate_uniform(&s);
    let cfg = ScanConfig { samples: 1000, seed: 20240601, depth: 40, record: true };
    let report = scan_cube_ratios(&s, &m, &cfg).map_err(|e| e.to_string())?;
    ensure(report.samples == 1000 && report.records.len() == 1000, || "sample count".into())?;
    let (bases, digits) = (s.bases().to_vec(), raw_digits(&s));
    let dim_a = extreme_sum(&bases, &digits, true);
    let dim_l = extreme_sum(&bases, &digits, false);
    let (d, nd, n1) = (bases.len() as f64, *bases.last().unwrap() as f64, bases[0] as f64);
    let mut violations = 0;
    let mut worst_gap: f64 = 0.0;
    let mut deepest = 0;
    for sample in &report.records {
        let ratio = oracle_ln_cube(&bases, &digits, &sample.word, sample.coarse)
            - oracle_ln_cube(&bases, &digits, &sample.word, sample.fine);
        ensure((ratio - sample.ln_ratio_low).abs() < 1e-9, || format!("ratio mismatch {ratio} vs {}", sample.ln_ratio_low))?;
        let span = (sample.fine - sample.coarse) as f64 * ln(n1);
        let lower = -d * ln(nd) + dim_l * span;
        let upper = d * ln(nd) + dim_a * span;
        if ratio < lower || ratio > upper {
            violations += 1;
        }
        worst_gap = worst_gap.max((lower - sample.ln_lower_bound).abs()).max((upper - sample.ln_upper_bound).abs());
        deepest = deepest.max(sample.fine);
    }
    ensure(violations == 0 && report.is_clean(), || format!("{violations} oracle violations, {} reported", report.violations.len()))?;
    ensure(worst_gap < 1e-9, || format!("bound mismatch {worst_gap}"))?;
    Ok(format!("1000 samples, 0 violations, deepest r = 2^-{deepest}, ratios match the fibre-count oracle"))
}

// ---------- 4 ----------

/// Weights as integer numerators over one denominator.
struct IntWeights {
    digits: Vec<Vec<u32>>,
    numer: Vec<u128>,
    denom: u128,
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn int_weights(digits: &[Vec<u32>], w: &[BigRational]) -> IntWeights {
    let dens: Vec<u128> = w.iter().map(|x| x.denom().to_u128().unwrap()).collect();
    let denom = dens.iter().fold(1u128, |acc, &q| acc / gcd(acc, q) * q);
    let numer = w.iter().zip(&dens).map(|(x, &q)| x.numer().to_u128().unwrap() * (denom / q)).collect();
    IntWeights { digits: digits.to_vec(), numer, denom }
}

fn for_each_word(w: &IntWeights, len: usize, word: &mut Vec<usize>, numer: u128, f: &mut dyn FnMut(&[usize], u128)) {
    if word.len() == len {
        f(word, numer);
        return;
    }
    for (i, &p) in w.numer.iter().enumerate() {
        word.push(i);
        for_each_word(w, len, word, numer * p, f);
        word.pop();
    }
}

fn exps(bases: &[u32], r: &BigRational) -> Vec<usize> {
    bases
        .iter()
        .map(|&n| {
            let mut k = 0;
            let mut p = BigRational::one();
            loop {
                p /= BigRational::from_integer(BigInt::from(n));
                if &p < r {
                    return k;
                }
                k += 1;
            }
        })
        .collect()
}

/// Tracks of a word's cube, packed: coordinate `l` read in base `n_l` to depth `k_l`.
fn pack(bases: &[u32], k: &[usize], digit: impl Fn(usize, usize) -> u32) -> u128 {
    let mut acc = 0u128;
    for (l, (&n, &kl)) in bases.iter().zip(k).enumerate() {
        for t in 0..kl {
            acc = acc * n as u128 + digit(t, l) as u128;
        }
    }
    acc
}

fn pack_cube(bases: &[u32], c: &ApproximateCube) -> u128 {
    pack(bases, &c.k.iter().map(|&k| k as usize).collect::<Vec<_>>(), |t, l| c.tracks[l][t])
}

fn oracle_equivalence(s: &Sponge, scales: &[BigRational], pairs: &[(BigRational, BigRational)]) -> Result<usize, String> {
    let m = BernoulliMeasure::coordinate_uniform(s);
    let digits = raw_digits(s);
    let weights: Vec<BigRational> = digits.iter().map(|t| m.weight(t).unwrap().clone()).collect();
    let iw = int_weights(&digits, &weights);
    let bases = s.bases();
    let mut checked = 0;
    for r in scales {
        let scale = Scale::new(r.clone()).unwrap();
        let k = exps(bases, r);
        ensure(k[0] <= 6, || format!("depth {} above 6", k[0]))?;
        let mut sums: BTreeMap<u128, u128> = BTreeMap::new();
        for_each_word(&iw, k[0], &mut Vec::new(), 1, &mut |word, p| {
            *sums.entry(pack(bases, &k, |t, l| iw.digits[word[t]][l])).or_insert(0) += p;
        });
        let total = BigInt::from(iw.denom).pow(k[0] as u32);
        let brute: BTreeMap<u128, BigRational> =
            sums.into_iter().map(|(key, p)| (key, BigRational::new(BigInt::from(p), total.clone()))).collect();
        ensure(count_cubes(s, &scale) == BigUint::from(brute.len()), || format!("count at {r}"))?;
        let all = subcubes(s, &ApproximateCube::trivial(s.dim()), &scale, DEFAULT_ENUMERATION_CAP).map_err(|e| e.to_string())?;
        let listed: BTreeSet<u128> = all.iter().map(|c| pack_cube(bases, c)).collect();
        ensure(listed.len() == all.len() && listed == brute.keys().copied().collect(), || format!("subcubes at {r}"))?;
        for c in &all {
            let v = m.approximate_cube_measure(c).map_err(|e| e.to_string())?.exact.ok_or("inexact")?;
            ensure(v == brute[&pack_cube(bases, c)], || format!("measure at {r}"))?;
            checked += 1;
        }
        let mut seen = 0usize;
        let mut bad = None;
        for_each_word(&iw, k[0], &mut Vec::new(), 1, &mut |word, _| {
            seen += 1;
            if seen % 31 == 1 && bad.is_none() {
                let w: Vec<DigitTuple> = word.iter().map(|&i| DigitTuple::new(iw.digits[i].clone())).collect();
                let v = m.cube_measure(&w, &scale).unwrap().exact.unwrap();
                if v != brute[&pack(bases, &k, |t, l| iw.digits[word[t]][l])] {
                    bad = Some(format!("cube_measure at {r}"));
                }
            }
        });
        if let Some(b) = bad {
            return Err(b);
        }
    }
    for (big, small) in pairs {
        let (kb, kf) = (exps(bases, big), exps(bases, small));
        let mut expected: BTreeMap<u128, (Vec<usize>, BTreeSet<u128>)> = BTreeMap::new();
        for_each_word(&iw, kf[0], &mut Vec::new(), 1, &mut |word, _| {
            let key = pack(bases, &kb, |t, l| iw.digits[word[t]][l]);
            let e = expected.entry(key).or_insert_with(|| (word.to_vec(), BTreeSet::new()));
            e.1.insert(pack(bases, &kf, |t, l| iw.digits[word[t]][l]));
        });
        for (witness, subs) in expected.values() {
            let w: Vec<DigitTuple> = witness.iter().map(|&i| DigitTuple::new(iw.digits[i].clone())).collect();
            let q = approximate_cube(s, &w, &Scale::new(big.clone()).unwrap()).map_err(|e| e.to_string())?;
            let got: BTreeSet<u128> = subcubes(s, &q, &Scale::new(small.clone()).unwrap(), DEFAULT_ENUMERATION_CAP)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|c| pack_cube(bases, c))
                .collect();
            ensure(&got == subs, || format!("subcubes {big} -> {small}"))?;
        }
    }
    Ok(checked)
}

fn c4() -> Outcome {
    let s = load("worked_example.json");
    let scales: Vec<BigRational> = [2, 3, 4, 5, 9, 16, 27, 64].iter().map(|&d| q(1, d)).collect();
    let pairs = [(q(1, 2), q(1, 4)), (q(1, 4), q(1, 27)), (q(1, 3), q(1, 64))];
    let a = oracle_equivalence(&s, &scales, &pairs)?;
    let mut rng = seeded_rng(77);
    let carpet = random_strict_sponge(&mut rng, &RandomSpongeConfig { max_dim: 2, max_base: 6, max_digits: 8 });
    let n1 = carpet.bases()[0] as i64;
    let mut scales: Vec<BigRational> = (1..=6).map(|j| q(1, n1.pow(j))).collect();
    scales.push(q(2, 7 * n1.pow(3)));
    let pairs = [(q(1, n1), q(1, n1.pow(4))), (q(1, n1 * n1), q(1, n1.pow(6)))];
    let b = oracle_equivalence(&carpet, &scales, &pairs)?;
    Ok(format!("{a} + {b} cube measures equal, carpet bases {:?} with {} digits", carpet.bases(), carpet.digits().len()))
}

// ---------- 5 ----------

fn c5() -> Outcome {
    let mut sponges = vec![load("worked_example.json")];
    let mut rng = seeded_rng(5);
    sponges.push(random_strict_sponge(&mut rng, &RandomSpongeConfig::default()));
    sponges.push(random_strict_sponge(&mut rng, &RandomSpongeConfig::default()));
    let mut gaps = Vec::new();
    for s in &sponges {
        let closed = oracle_box(s.bases(), &raw_digits(s));
        ensure((dim_report(s).box_dim - closed).abs() < 1e-12, || "box_dim differs from closed form".into())?;
        let slope = box_dim_slope(s, 40).map_err(|e| e.to_string())?;
        ensure((slope - closed).abs() < 0.05, || format!("slope {slope} vs {closed} for {:?}", s.bases()))?;
        gaps.push(format!("{:.4}", (slope - closed).abs()));
    }
    Ok(format!("|slope - box| = {}", gaps.join(", ")))
}

// ---------- 6 and 7: brute-force neighbour ratios on carpets ----------

/// Largest `μ(A)/μ(B)` over pairs of planar cubes at scale `n_2^{-depth}`
/// whose grid indices pass `near`, from summed word weights.
fn brute_max_ratio(s: &Sponge, weights: &[BigRational], depth: u64, near: impl Fn(i64, i64) -> bool) -> Option<BigRational> {
    let (n1, n2) = (s.bases()[0], s.bases()[1]);
    let k2 = depth as usize;
    let k1 = k_for(n1, n2, depth) as usize;
    let iw = int_weights(&raw_digits(s), weights);
    let mut cells: BTreeMap<(i64, i64), u128> = BTreeMap::new();
    for_each_word(&iw, k1, &mut Vec::new(), 1, &mut |word, p| {
        let x = word.iter().fold(0i64, |a, &i| a * n1 as i64 + iw.digits[i][0] as i64);
        let y = word[..k2].iter().fold(0i64, |a, &i| a * n2 as i64 + iw.digits[i][1] as i64);
        *cells.entry((x, y)).or_insert(0) += p;
    });
    let mut best: Option<BigRational> = None;
    for (&(x, y), &a) in &cells {
        for (&(u, v), &b) in &cells {
            if (x, y) != (u, v) && near(x - u, y - v) {
                let r = BigRational::new(BigInt::from(a), BigInt::from(b));
                if best.as_ref().is_none_or(|c| &r > c) {
                    best = Some(r);
                }
            }
        }
    }
    best
}

fn face(dx: i64, dy: i64) -> bool {
    (dx.abs() == 1 && dy == 0) || (dx == 0 && dy.abs() == 1)
}

fn c6() -> Outcome {
    let s = load("no_doubling_carpet.json");
    let third = q(1, 3);
    let uniform = BernoulliMeasure::new(&s, raw_digits(&s).into_iter().map(|t| (t, third.clone())).collect()).map_err(|e| e.to_string())?;
    let cfg = DoublingConfig { max_depth: 10, ..DoublingConfig::default() };
    let report = doubling_report(&s, &uniform, &cfg).map_err(|e| e.to_string())?;
    let weights = vec![third.clone(); 3];
    for row in report.per_depth.iter().filter(|r| r.depth <= 5) {
        let brute = brute_max_ratio(&s, &weights, row.depth, face);
        let lib = row.max_ratio.as_ref().and_then(|r| r.exact.clone());
        ensure(brute == lib, || format!("depth {}: library {lib:?}, brute force {brute:?}", row.depth))?;
    }
    ensure((report.growth_rate - 2.0).abs() < 1e-6, || format!("growth {}", report.growth_rate))?;
    ensure(matches!(report.verdict, DoublingVerdict::NonDoublingCertificate { .. }), || format!("{:?}", report.verdict))?;
    // a fixed pair of neighbours: ratio ((b+d)/a)^{k-2}
    let t = |v: &[u32]| DigitTuple::new(v.to_vec());
    for k in 2..10usize {
        let r = Scale::inv_pow(4, k as u64);
        let mut w1 = vec![t(&[0, 1]); k + 1];
        w1.extend(vec![t(&[1, 1]); k - 1]);
        let mut w2 = vec![t(&[0, 1]); k];
        w2.push(t(&[1, 1]));
        w2.extend(vec![t(&[0, 1]); k - 1]);
        let ratio = uniform.cube_measure(&w1, &r).unwrap().ratio(&uniform.cube_measure(&w2, &r).unwrap());
        ensure(ratio.exact == Some(BigRational::from_integer(BigInt::from(2)).pow(k as i32 - 2)), || format!("pair ratio at k={k}"))?;
    }
    let v = cli_json(&["doubling", data("no_doubling_carpet.json").to_str().unwrap(), "--grid", "1/8", "--max-depth", "10"])?;
    ensure(v["vectors"] == 21, || format!("{} grid vectors", v["vectors"]))?;
    let min_growth = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["growth_rate"].as_f64().unwrap())
        .fold(f64::INFINITY, f64::min);
    ensure(v["all_non_doubling"] == true, || "a grid vector was not flagged".into())?;
    Ok(format!("uniform growth {:.9}, 21/21 grid vectors NonDoubling (least growth {min_growth:.4})", report.growth_rate))
}

fn c7() -> Outcome {
    let s = load("vssc_carpet.json");
    let m = BernoulliMeasure::coordinate_uniform(&s);
    let cfg = DoublingConfig { max_depth: 12, neighbourhood: Neighbourhood::Near(2), ..DoublingConfig::default() };
    let report = doubling_report(&s, &m, &cfg).map_err(|e| e.to_string())?;
    let weights: Vec<BigRational> = raw_digits(&s).iter().map(|t| m.weight(t).unwrap().clone()).collect();
    for row in report.per_depth.iter().filter(|r| r.depth <= 6) {
        let brute = brute_max_ratio(&s, &weights, row.depth, |dx, dy| dx.abs() <= 2 && dy.abs() <= 2);
        let lib = row.max_ratio.as_ref().and_then(|r| r.exact.clone());
        ensure(brute == lib, || format!("depth {}: library {lib:?}, brute force {brute:?}", row.depth))?;
    }
    let worst = report.per_depth.iter().filter_map(|r| r.max_ratio.as_ref()).map(|r| r.value_f64()).fold(0.0, f64::max);
    let with_pairs = report.per_depth.iter().filter(|r| r.max_ratio.is_some()).count();
    ensure(with_pairs >= 6, || format!("only {with_pairs} depths have neighbours"))?;
    ensure(worst <= 4.0 && report.verdict == DoublingVerdict::DoublingUpToDepth(12), || format!("worst {worst}, {:?}", report.verdict))?;

    let (bases, digits) = (s.bases(), raw_digits(&s));
    let (dim_a, dim_l) = (extreme_sum(bases, &digits, true), extreme_sum(bases, &digits, false));
    let d = bases.len() as f64;
    let nd = *bases.last().unwrap() as f64;
    let spread = 2.0 * bases.iter().map(|&n| n as f64).sum::<f64>() * (bases[0] as f64).powi(2);
    let (c0, c1) = (nd.powf(-d) * spread.powf(-dim_l), nd.powf(d) * spread.powf(dim_a));
    let (l0, l1) = ball_constants(&s).map_err(|e| e.to_string())?;
    ensure((l0 / c0 - 1.0).abs() < 1e-12 && (l1 / c1 - 1.0).abs() < 1e-12, || format!("constants {l0},{l1} vs {c0},{c1}"))?;
    let scan = scan_ball_ratios_vssc(&s, &ScanConfig { samples: 200, seed: 3, depth: 8, record: false }, DEFAULT_ENUMERATION_CAP)
        .map_err(|e| e.to_string())?;
    ensure(scan.samples == 200 && scan.is_clean(), || format!("{} ball violations", scan.violations.len()))?;
    Ok(format!(
        "near:2 ratio <= {worst} through depth 12; 200 ball samples clean (C0 = {c0:.3e}, C1 = {c1:.3e})"
    ))
}

// ---------- 8 ----------

fn point_box_dist(p: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    p.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&a, &b))| {
            let g = if x < a { a - x } else if x > b { x - b } else { 0.0 };
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

fn cell_bounds(g: &GridCells) -> Vec<(Vec<f64>, Vec<f64>)> {
    let sides: Vec<f64> = g.bases.iter().map(|&n| (n as f64).powi(-(g.level as i32))).collect();
    g.cells
        .iter()
        .map(|c| {
            let lo: Vec<f64> = c.iter().zip(&sides).map(|(&i, s)| i as f64 * s).collect();
            let hi: Vec<f64> = lo.iter().zip(&sides).map(|(a, s)| a + s).collect();
            (lo, hi)
        })
        .collect()
}

/// `max_a d(centre(a), B)` both ways: a lower bound on the Hausdorff distance.
fn centre_lower_bound(a: &GridCells, b: &GridCells) -> f64 {
    let (ca, cb) = (cell_bounds(a), cell_bounds(b));
    let one_way = |x: &[(Vec<f64>, Vec<f64>)], y: &[(Vec<f64>, Vec<f64>)]| {
        x.iter()
            .map(|(lo, hi)| {
                let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (a + b) / 2.0).collect();
                y.iter().map(|(l, h)| point_box_dist(&c, l, h)).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(&ca, &cb).max(one_way(&cb, &ca))
}

fn c8() -> Outcome {
    let s = load("worked_example.json");
    let bases = s.bases();
    let sqrt3 = 3f64.sqrt();
    let mut last = f64::INFINITY;
    let mut shown = Vec::new();
    for j in [2u64, 3, 4] {
        let r = Scale::inv_pow(4, j);
        let check = check_tangent_convergence(&s, &r, Extremum::Max, 4, DEFAULT_ENUMERATION_CAP).map_err(|e| e.to_string())?;
        let k: Vec<u64> = bases.iter().map(|&n| k_for(n, 4, j)).collect();
        let limit = (1..3).map(|l| (bases[l] as f64).powi(-((k[l - 1] - k[l]) as i32))).fold(0.0, f64::max);
        let bound = sqrt3 * limit + 2.0 * sqrt3 * bases.iter().map(|&n| (n as f64).powi(-4)).fold(0.0, f64::max);
        ensure((check.bound - bound).abs() < 1e-12, || format!("bound {} vs {bound}", check.bound))?;
        ensure(check.distance <= bound, || format!("distance {} above {bound} at 4^-{j}", check.distance))?;
        ensure(check.distance <= last, || format!("distance rose to {} at 4^-{j}", check.distance))?;
        last = check.distance;
        let factors: Vec<BigUint> = bases.iter().zip(&k).map(|(&n, &kl)| BigUint::from(n).pow(kl as u32)).collect();
        let (a, b) = (factors.iter().min().unwrap(), factors.iter().max().unwrap());
        ensure(b <= &(a * 4u32), || format!("b/a = {b}/{a} at 4^-{j}"))?;
        ensure(check.contained, || format!("image leaves the limit set at 4^-{j}"))?;
        // coarser resolution: the grid distance against brute-force centre distances
        let t = tangent_construction(&s, &r, &witnesses(&s, Extremum::Max).unwrap(), 2, DEFAULT_ENUMERATION_CAP)
            .map_err(|e| e.to_string())?;
        let coarse = check_tangent_convergence(&s, &r, Extremum::Max, 2, DEFAULT_ENUMERATION_CAP).map_err(|e| e.to_string())?;
        let lower = centre_lower_bound(&t.image, &t.hat);
        let diag = bases.iter().map(|&n| (n as f64).powi(-4)).sum::<f64>().sqrt();
        ensure(lower <= coarse.distance + 1e-12 && coarse.distance <= lower + diag, || {
            format!("grid distance {} outside [{lower}, {lower} + {diag}]", coarse.distance)
        })?;
        shown.push(format!("4^-{j}: {:.4} <= {:.4}", check.distance, bound));
    }
    Ok(format!("{}; b/a <= 4", shown.join(", ")))
}

// ---------- 9 ----------

fn c9() -> Outcome {
    let mut rng = seeded_rng(9);
    let cfg = RandomSpongeConfig { max_dim: 3, max_base: 6, max_digits: 20 };
    let mut uniform = 0;
    for i in 0..100 {
        let s = random_strict_sponge(&mut rng, &cfg);
        let (bases, digits) = (s.bases().to_vec(), raw_digits(&s));
        ensure(bases.len() <= 3 && bases.iter().all(|&n| n <= 6) && digits.len() <= 20, || format!("sponge {i} out of range"))?;
        let r = dim_report(&s);
        let (a, l) = (r.assouad.ok_or("no assouad")?, r.lower.ok_or("no lower")?);
        let oracle = [
            extreme_sum(&bases, &digits, false),
            oracle_hausdorff(&bases, &digits),
            oracle_box(&bases, &digits),
            extreme_sum(&bases, &digits, true),
        ];
        let got = [l, r.hausdorff, r.box_dim, a];
        for (g, o) in got.iter().zip(&oracle) {
            ensure((g - o).abs() < 1e-9, || format!("sponge {i}: {got:?} vs {oracle:?}"))?;
        }
        let uf = oracle_uniform_fibres(&digits, bases.len());
        ensure(uf == s.has_uniform_fibres(), || format!("sponge {i}: uniform fibres"))?;
        let all_equal = got.iter().all(|x| (x - got[0]).abs() < DICHOTOMY_TOLERANCE);
        let all_distinct = (0..4).all(|p| (p + 1..4).all(|q| (got[p] - got[q]).abs() >= DICHOTOMY_TOLERANCE));
        ensure(all_equal == uf, || format!("sponge {i}: all equal {all_equal}, uniform {uf}"))?;
        ensure(all_equal || all_distinct, || format!("sponge {i}: neither all equal nor all distinct"))?;
        ensure(r.chain_holds(CHAIN_TOLERANCE), || format!("sponge {i}: chain"))?;
        let z = lower_via_zprime(&s).map_err(|e| e.to_string())?;
        ensure((z - l).abs() < 1e-12, || format!("sponge {i}: lower via Z' {z} vs {l}"))?;
        uniform += uf as usize;
    }
    Ok(format!("100 sponges, {uniform} with uniform fibres, all consistent"))
}

// ---------- 10 ----------

fn c10() -> Outcome {
    let v = cli_json(&["dims", data("equal_bases.json").to_str().unwrap()])?;
    let b = v["box"].as_f64().ok_or("box missing")?;
    ensure((b - 1.792).abs() < 5e-4, || format!("box {b}"))?;
    ensure(v["assouad"]["error"] == "NonStrictBases" && v["lower"]["error"] == "NonStrictBases", || {
        format!("assouad {} lower {}", v["assouad"], v["lower"])
    })?;
    let (code, csv) = cli(&["family-lg", "--min", "0.1", "--max", "0.5", "--step", "0.05"]);
    ensure(code == 0, || format!("family-lg exit {code}"))?;
    let mut rows = BTreeMap::new();
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        rows.insert(line.split(',').next().unwrap().to_string(), f);
    }
    let ln2 = 2f64.ln();
    for lam in ["0.1", "0.25", "0.4", "0.5"] {
        let row = rows.get(lam).ok_or(format!("no row for {lam}"))?;
        let x: f64 = lam.parse().unwrap();
        let expected = if lam == "0.5" {
            [3f64.log2(); 4]
        } else {
            [
                1.0,
                (1.0 + 2f64.powf(-ln2 / x.ln())).ln() / ln2,
                1.0 + 1.5f64.ln() / -x.ln(),
                1.0 + ln2 / -x.ln(),
            ]
        };
        for (g, e) in row[1..].iter().zip(&expected) {
            ensure((g - e).abs() < 1e-9, || format!("lambda {lam}: {row:?} vs {expected:?}"))?;
        }
    }
    let (_, near) = cli(&["family-lg", "--min", "0.4999999", "--max", "0.4999999", "--step", "1"]);
    let below: f64 = near.lines().nth(1).ok_or("no row")?.split(',').nth(4).unwrap().parse().unwrap();
    let at = rows["0.5"][4];
    ensure(below > 1.999 && (at - 3f64.log2()).abs() < 1e-12, || format!("assouad {below} -> {at}"))?;
    Ok(format!("box {b:.4}; assouad {below:.4} just below 1/2, {at:.4} at 1/2"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("worked example dimensions", c1, Duration::from_secs(1)),
        ("coordinate uniform weights", c2, Duration::from_secs(1)),
        ("cube sandwich scan", c3, Duration::from_secs(10)),
        ("oracle equivalence", c4, Duration::from_secs(30)),
        ("box-dimension slope", c5, Duration::from_secs(1)),
        ("non-doubling certificate", c6, Duration::from_secs(60)),
        ("doubling under separation", c7, Duration::from_secs(60)),
        ("tangent convergence", c8, Duration::from_secs(60)),
        ("dimension dichotomy", c9, Duration::from_secs(10)),
        ("equal bases and the lambda family", c10, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if took <= *budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("over budget: {d}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {status} {name}: {detail} [{:.2}s / {}s]", i + 1, took.as_secs_f64(), budget.as_secs());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
