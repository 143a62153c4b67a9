//! Extension ratios `‖(g dσ)^∨‖_{L^q(dx)} / ‖g‖_{L^p(dσ)}` and searches for
//! large ones. A search returns a measured supremum over declared families,
//! which is a lower bound for `R*(p→q)` and nothing more.

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ffield::{Elem, FieldCtx};
use crate::fourier::{rel_err, Exponent};
use crate::paraboloid::{extension, ParaboloidCtx, SurfaceFn};
use crate::rng::substream;

fn exponent(x: f64) -> Result<Exponent> {
    Exponent::finite(x)
}

/// The exact ratio for one nonzero `g`.
pub fn extension_ratio(g: &SurfaceFn, p_exp: f64, q_exp: f64, exec: Exec) -> Result<f64> {
    if g.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let (p, q) = (exponent(p_exp)?, exponent(q_exp)?);
    let num = extension(g, exec)?.lp_norm(q, exec)?;
    Ok(num / g.lp_norm(p, exec))
}

/// Ratio of `g ≡ 1`: `(dσ)^∨` is 1 at the origin, 0 elsewhere on `x₃ = 0`
/// and of modulus `1/q` off that plane.
pub fn constant_ratio_closed_form(q: u32, q_exp: f64) -> f64 {
    if q_exp.is_infinite() {
        return 1.0;
    }
    let qf = q as f64;
    (1.0 + (qf.powi(3) - qf.powi(2)) * qf.powf(-q_exp)).powf(1.0 / q_exp)
}

/// Ratio of a point mass: `|(δ dσ)^∨| = q^{-2}` everywhere, so the ratio is
/// `q^{-2 + 3/Q + 2/p}`.
pub fn point_ratio_closed_form(q: u32, p_exp: f64, q_exp: f64) -> f64 {
    (q as f64).powf(-2.0 + 3.0 / q_exp + 2.0 / p_exp)
}

/// `q^{2/Q − 1/2}`, the ratio of the isotropic line `{(ξ, iξ, 0)}` at `p = 2`.
pub fn subspace_closed_form(q: u32, q_exp: f64) -> f64 {
    (q as f64).powf(2.0 / q_exp - 0.5)
}

/// Ranks of `{(ξ, iξ)}` with `i² = −1`.
pub fn isotropic_line(pctx: &ParaboloidCtx, i: Elem) -> Vec<usize> {
    let f = pctx.field();
    f.elements().map(|x| pctx.rank([x, f.mul(i, x)])).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub field: String,
    pub q_exp: f64,
    pub measured: f64,
    pub closed_form: f64,
    pub rel_err: f64,
    pub support_size: usize,
}

/// The isotropic subspace example: unbounded ratios for `Q < 4` when `−1` is a square.
pub fn subspace_sharpness(pctx: &Arc<ParaboloidCtx>, q_exp: f64, exec: Exec) -> Result<SharpnessReport> {
    let i = pctx.field().sqrt_minus_one().ok_or(Error::MinusOneNotSquare)?;
    let support = isotropic_line(pctx, i);
    let g = SurfaceFn::indicator(pctx.clone(), &support)?;
    let measured = extension_ratio(&g, 2.0, q_exp, exec)?;
    let closed_form = subspace_closed_form(pctx.order(), q_exp);
    Ok(SharpnessReport {
        field: pctx.field().description(),
        q_exp,
        measured,
        closed_form,
        rel_err: rel_err(measured, closed_form),
        support_size: support.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Constant,
    Point,
    Subspace,
    Galilean,
    Slices,
    Grids,
    Random,
    Ascent,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Constant,
        Family::Point,
        Family::Subspace,
        Family::Galilean,
        Family::Slices,
        Family::Grids,
        Family::Random,
        Family::Ascent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Constant => "constant",
            Family::Point => "point",
            Family::Subspace => "subspace",
            Family::Galilean => "galilean",
            Family::Slices => "slices",
            Family::Grids => "grids",
            Family::Random => "random",
            Family::Ascent => "ascent",
        }
    }

    /// `"all"` or a comma-separated list of family names.
    pub fn parse_list(s: &str) -> Result<Vec<Family>> {
        if s.trim() == "all" {
            return Ok(Family::ALL.to_vec());
        }
        let mut out = Vec::new();
        for part in s.split(',') {
            let f = Family::ALL
                .into_iter()
                .find(|f| f.name() == part.trim())
                .ok_or_else(|| Error::Precondition(format!("unknown family {part:?}")))?;
            if !out.contains(&f) {
                out.push(f);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub p_exp: f64,
    pub q_exp: f64,
    pub families: Vec<Family>,
    pub seed: u64,
    /// Random candidates, and ascent steps per restart.
    pub iterations: usize,
    pub restarts: usize,
}

impl SearchOptions {
    pub fn new(p_exp: f64, q_exp: f64, seed: u64) -> SearchOptions {
        SearchOptions { p_exp, q_exp, families: Family::ALL.to_vec(), seed, iterations: 64, restarts: 2 }
    }
}

/// Support and values of a surface function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionDigest {
    pub support: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl FunctionDigest {
    pub fn of(g: &SurfaceFn) -> FunctionDigest {
        let support = g.support();
        let values = support.iter().map(|&r| g.values()[r]).collect();
        FunctionDigest { support, values }
    }

    pub fn to_surface(&self, pctx: &Arc<ParaboloidCtx>) -> Result<SurfaceFn> {
        let mut g = SurfaceFn::zeros(pctx.clone());
        for (&r, &v) in self.support.iter().zip(&self.values) {
            let n = g.values().len();
            *g.values_mut().get_mut(r).ok_or(Error::BadLength { expected: n, got: r + 1 })? = v;
        }
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyBest {
    pub family: Family,
    pub label: String,
    pub value: f64,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub field: String,
    pub p_exp: f64,
    pub q_exp: f64,
    pub seed: u64,
    pub iterations: usize,
    pub families: Vec<Family>,
    /// Family and label of the maximizer.
    pub family: Family,
    pub label: String,
    /// Measured maximum ratio, a lower bound for `R*(p→q)`.
    pub value: f64,
    pub candidates: usize,
    pub per_family: Vec<FamilyBest>,
    pub digest: FunctionDigest,
    pub comparisons: Vec<Comparison>,
}

impl RatioReport {
    /// The ratio of the stored maximizer, recomputed from the digest.
    pub fn recompute(&self, pctx: &Arc<ParaboloidCtx>, exec: Exec) -> Result<f64> {
        extension_ratio(&self.digest.to_surface(pctx)?, self.p_exp, self.q_exp, exec)
    }
}

struct Candidate {
    family: Family,
    label: String,
    g: SurfaceFn,
}

fn indicator(pctx: &Arc<ParaboloidCtx>, family: Family, label: String, ranks: &[usize]) -> Candidate {
    let g = SurfaceFn::indicator(pctx.clone(), ranks).expect("ranks come from the context");
    Candidate { family, label, g }
}

fn dedup(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

fn structured(pctx: &Arc<ParaboloidCtx>, family: Family, seed: u64, iterations: usize) -> Vec<Candidate> {
    let f: &FieldCtx = pctx.field();
    let q = f.order();
    let n = pctx.len();
    let mut out = Vec::new();
    match family {
        Family::Constant => out.push(indicator(pctx, family, "g = 1".into(), &(0..n).collect::<Vec<_>>())),
        Family::Point => out.push(indicator(pctx, family, "point at 0".into(), &[0])),
        Family::Subspace => {
            if let Some(i) = f.sqrt_minus_one() {
                for (name, s) in [("i", i), ("-i", f.neg(i))] {
                    out.push(indicator(pctx, family, format!("isotropic line w2 = {name} w1"), &isotropic_line(pctx, s)));
                }
            }
            let vertical: Vec<usize> = f.elements().map(|x| pctx.rank([Elem::ZERO, x])).collect();
            out.push(indicator(pctx, family, "line w1 = 0".into(), &vertical));
            for m in f.elements().take(8) {
                let line: Vec<usize> = f.elements().map(|x| pctx.rank([x, f.mul(m, x)])).collect();
                out.push(indicator(pctx, family, format!("line w2 = {} w1", m.value()), &dedup(line)));
            }
        }
        Family::Galilean => {
            // unions of prime-field orbits ω + F_p·δ of a few random points
            for j in 0..iterations.clamp(1, 16) {
                let mut rng = substream(seed, 1 << 20 | j as u64);
                let delta = loop {
                    let d = [Elem(rng.gen_range(0..q)), Elem(rng.gen_range(0..q))];
                    if !(d[0].is_zero() && d[1].is_zero()) {
                        break d;
                    }
                };
                let seeds = rng.gen_range(1..=3);
                let mut ranks = Vec::new();
                for _ in 0..seeds {
                    let w = [Elem(rng.gen_range(0..q)), Elem(rng.gen_range(0..q))];
                    for k in 0..f.p() {
                        let kk = f.from_int(k as i64);
                        ranks.push(pctx.rank([f.add(w[0], f.mul(kk, delta[0])), f.add(w[1], f.mul(kk, delta[1]))]));
                    }
                }
                out.push(indicator(pctx, family, format!("orbit union {j}"), &dedup(ranks)));
            }
        }
        Family::Slices => {
            let step = (q as usize).div_ceil(32).max(1);
            for cval in f.elements().step_by(step) {
                let ranks: Vec<usize> = (0..n).filter(|&r| pctx.height(r) == cval).collect();
                if !ranks.is_empty() {
                    out.push(indicator(pctx, family, format!("circle w.w = {}", cval.value()), &ranks));
                }
            }
        }
        Family::Grids => {
            for g in f.subfields() {
                let ranks: Vec<usize> =
                    g.elements.iter().flat_map(|&a| g.elements.iter().map(move |&b| (a, b))).map(|(a, b)| pctx.rank([a, b])).collect();
                out.push(indicator(pctx, family, format!("subfield grid of order {}", g.order), &ranks));
                let row: Vec<usize> = g.elements.iter().map(|&a| pctx.rank([a, Elem::ZERO])).collect();
                out.push(indicator(pctx, family, format!("subfield row of order {}", g.order), &row));
            }
            let root = ((q as f64).sqrt().ceil() as u32).max(2);
            let mut sides = vec![2, 3, root, q.div_ceil(2)];
            sides.retain(|&m| m >= 2 && m < q);
            sides.sort_unstable();
            sides.dedup();
            for m in sides {
                let ranks: Vec<usize> =
                    (0..m).flat_map(|a| (0..m).map(move |b| (a, b))).map(|(a, b)| pctx.rank([f.from_int(a as i64), f.from_int(b as i64)])).collect();
                out.push(indicator(pctx, family, format!("interval grid {m}x{m}"), &ranks));
            }
        }
        Family::Random => {
            for j in 0..iterations {
                let mut rng = substream(seed, 2 << 20 | j as u64);
                let size = rng.gen_range(1..=n);
                let ranks = dedup(sample(&mut rng, n, size).into_vec());
                out.push(indicator(pctx, family, format!("random indicator {j} of size {size}"), &ranks));
            }
        }
        Family::Ascent => {}
    }
    out
}

fn random_value<R: Rng>(rng: &mut R) -> Complex64 {
    match rng.gen_range(0..3) {
        0 => Complex64::new(0.0, 0.0),
        1 => Complex64::new(1.0, 0.0),
        _ => Complex64::from_polar(rng.gen_range(0.05..1.0), rng.gen_range(0.0..std::f64::consts::TAU)),
    }
}

/// Coordinate ascent from `start`: change one value at a time, keep strict improvements.
fn ascend(start: SurfaceFn, opts: &SearchOptions, restart: usize) -> Result<(SurfaceFn, f64)> {
    let mut rng = substream(opts.seed, 3 << 20 | restart as u64);
    let n = start.values().len();
    let mut g = start;
    let mut best = extension_ratio(&g, opts.p_exp, opts.q_exp, Exec::Sequential)?;
    for _ in 0..opts.iterations {
        let r = rng.gen_range(0..n);
        let v = random_value(&mut rng);
        let old = g.values()[r];
        if v == old {
            continue;
        }
        g.values_mut()[r] = v;
        let ratio = if g.is_zero() { f64::NEG_INFINITY } else { extension_ratio(&g, opts.p_exp, opts.q_exp, Exec::Sequential)? };
        if ratio > best {
            best = ratio;
        } else {
            g.values_mut()[r] = old;
        }
    }
    Ok((g, best))
}

/// Maximizes the extension ratio over the requested families. `g ≡ 1` is
/// always evaluated so the result is never below it. Deterministic in the seed.
pub fn search_lower_bound(pctx: &Arc<ParaboloidCtx>, opts: &SearchOptions, exec: Exec) -> Result<RatioReport> {
    exponent(opts.p_exp)?;
    exponent(opts.q_exp)?;
    let mut families = opts.families.clone();
    if !families.contains(&Family::Constant) {
        families.insert(0, Family::Constant);
    }
    families.sort();
    families.dedup();

    let candidates: Vec<Candidate> =
        families.iter().flat_map(|&fam| structured(pctx, fam, opts.seed, opts.iterations)).collect();
    let ratios = exec.map(candidates.len(), |i| extension_ratio(&candidates[i].g, opts.p_exp, opts.q_exp, Exec::Sequential));
    let mut scored: Vec<(Family, String, SurfaceFn, f64)> = Vec::with_capacity(candidates.len());
    for (c, r) in candidates.into_iter().zip(ratios) {
        scored.push((c.family, c.label, c.g, r?));
    }

    if families.contains(&Family::Ascent) && opts.restarts > 0 {
        // restart 0 continues from the best structured candidate, the others from random indicators
        let (best_idx, _) = scored.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let n = pctx.len();
        let starts: Vec<SurfaceFn> = (0..opts.restarts)
            .map(|k| {
                if k == 0 {
                    scored[best_idx].2.clone()
                } else {
                    let mut rng = substream(opts.seed, 4 << 20 | k as u64);
                    let size = rng.gen_range(1..=n);
                    SurfaceFn::indicator(pctx.clone(), &sample(&mut rng, n, size).into_vec()).expect("ranks in range")
                }
            })
            .collect();
        let results = exec.map(starts.len(), |k| ascend(starts[k].clone(), opts, k));
        for (k, r) in results.into_iter().enumerate() {
            let (g, _) = r?;
            let exact = extension_ratio(&g, opts.p_exp, opts.q_exp, Exec::Sequential)?;
            scored.push((Family::Ascent, format!("ascent restart {k}"), g, exact));
        }
    }

    let mut per_family: Vec<FamilyBest> = Vec::new();
    for &fam in &families {
        let items: Vec<&(Family, String, SurfaceFn, f64)> = scored.iter().filter(|s| s.0 == fam).collect();
        if let Some(b) = items.iter().fold(None::<&&(Family, String, SurfaceFn, f64)>, |acc, s| match acc {
            Some(a) if a.3 >= s.3 => Some(a),
            _ => Some(s),
        }) {
            per_family.push(FamilyBest { family: fam, label: b.1.clone(), value: b.3, candidates: items.len() });
        }
    }
    let best = scored
        .iter()
        .fold(None::<&(Family, String, SurfaceFn, f64)>, |acc, s| match acc {
            Some(a) if a.3 >= s.3 => Some(a),
            _ => Some(s),
        })
        .expect("the constant candidate is always present");

    let q = pctx.order();
    let mut comparisons = vec![
        Comparison { name: "constant closed form".into(), value: constant_ratio_closed_form(q, opts.q_exp) },
        Comparison { name: "point closed form".into(), value: point_ratio_closed_form(q, opts.p_exp, opts.q_exp) },
    ];
    if pctx.field().minus_one_is_square() && opts.p_exp == 2.0 {
        comparisons.push(Comparison { name: "isotropic subspace closed form".into(), value: subspace_closed_form(q, opts.q_exp) });
    }
    Ok(RatioReport {
        field: pctx.field().description(),
        p_exp: opts.p_exp,
        q_exp: opts.q_exp,
        seed: opts.seed,
        iterations: opts.iterations,
        families,
        family: best.0,
        label: best.1.clone(),
        value: best.3,
        candidates: scored.len(),
        per_family,
        digest: FunctionDigest::of(&best.2),
        comparisons,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalRow {
    pub p: u32,
    pub max_ratio: f64,
    /// `cap · p^{1/16}`.
    pub bound: f64,
    pub holds: bool,
    pub family: Family,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSweepReport {
    pub q_exp: f64,
    pub cap: f64,
    pub rows: Vec<LocalRow>,
    pub all_hold: bool,
}

/// No-counterexample check of `R*(2 → 16/5) ≤ cap·q^{1/16}` over all families.
pub fn local_restriction_sweep(primes: &[u32], iterations: usize, seed: u64, cap: f64, exec: Exec) -> Result<LocalSweepReport> {
    let q_exp = 16.0 / 5.0;
    let mut rows = Vec::new();
    for &p in primes {
        let pctx = Arc::new(ParaboloidCtx::new(Arc::new(FieldCtx::prime(p)?))?);
        let opts = SearchOptions { iterations, ..SearchOptions::new(2.0, q_exp, seed) };
        let r = search_lower_bound(&pctx, &opts, exec)?;
        let bound = cap * (p as f64).powf(1.0 / 16.0);
        rows.push(LocalRow { p, max_ratio: r.value, bound, holds: r.value <= bound, family: r.family, label: r.label });
    }
    let all_hold = rows.iter().all(|r| r.holds);
    Ok(LocalSweepReport { q_exp, cap, rows, all_hold })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtStReport {
    pub field: String,
    pub q_exp: f64,
    pub theta: f64,
    pub d_tilde: f64,
    /// Measured lower bound for `R*(2→q)`.
    pub low: f64,
    /// Measured lower bound for `R*(2→q/θ)`.
    pub high: f64,
    /// `cap·(1 + low^θ·|F|^{−d̃(1−θ)/4})`.
    pub rhs: f64,
    pub cap: f64,
    pub holds: bool,
}

/// Consistency of measured ratios with the interpolation bound
/// `R*(2→q/θ) ≪ 1 + R*(2→q)^θ |F|^{−d̃(1−θ)/4}` at `q = 16/5`, `θ = 8/9`, `d̃ = 2`.
pub fn mt_st_consistency(pctx: &Arc<ParaboloidCtx>, iterations: usize, seed: u64, cap: f64, exec: Exec) -> Result<MtStReport> {
    let (q_exp, theta, d_tilde) = (16.0 / 5.0, 8.0 / 9.0, 2.0);
    let run = |qe: f64| search_lower_bound(pctx, &SearchOptions { iterations, ..SearchOptions::new(2.0, qe, seed) }, exec);
    let low = run(q_exp)?.value;
    let high = run(q_exp / theta)?.value;
    let rhs = cap * (1.0 + low.powf(theta) * (pctx.order() as f64).powf(-d_tilde * (1.0 - theta) / 4.0));
    Ok(MtStReport { field: pctx.field().description(), q_exp, theta, d_tilde, low, high, rhs, cap, holds: high <= rhs })
}
