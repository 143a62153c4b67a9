//! Additive combinatorics on subsets of F: collinear triples, sumset and
//! product-set growth, a constructive Balog–Szemerédi–Gowers refinement and
//! subfield-coset detection.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ffield::{Elem, FieldCtx, Subfield};

/// Cap on `|A|²|B|` for [`collinear_energy`].
pub const COLLINEAR_CAP: u64 = 100_000_000;
/// How many popular differences and anchors `subfield_detect` tries.
pub const DETECT_CANDIDATES: usize = 20;
/// Minimum fraction of `A` a detected coset must cover.
pub const MIN_COVERAGE: f64 = 0.5;

fn bitmap(field: &FieldCtx, a: &[Elem]) -> Vec<bool> {
    let mut m = vec![false; field.order() as usize];
    for x in a {
        m[x.0 as usize] = true;
    }
    m
}

fn distinct(field: &FieldCtx, a: &[Elem]) -> Vec<Elem> {
    let m = bitmap(field, a);
    (0..field.order()).filter(|&i| m[i as usize]).map(Elem).collect()
}

/// `#{(y, x₀, x₁) ∈ B×A×A : y ∉ {0,1}, (1−y)x₀ + yx₁ ∈ A}`.
pub fn collinear_energy(field: &FieldCtx, a: &[Elem], b: &[Elem], exec: Exec) -> Result<u64> {
    let a = distinct(field, a);
    let b = distinct(field, b);
    let size = (a.len() as u64).pow(2) * b.len() as u64;
    if size > COLLINEAR_CAP {
        return Err(Error::SizeCap { what: "collinear_energy |A|^2|B|", size, cap: COLLINEAR_CAP });
    }
    let in_a = bitmap(field, &a);
    Ok(exec.sum_u64(b.len(), |i| {
        let y = b[i];
        if y.is_zero() || y == Elem::ONE {
            return 0;
        }
        let one_minus_y = field.sub(Elem::ONE, y);
        let mut count = 0u64;
        for &x0 in &a {
            let base = field.mul(one_minus_y, x0);
            for &x1 in &a {
                if in_a[field.add(base, field.mul(y, x1)).0 as usize] {
                    count += 1;
                }
            }
        }
        count
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthStats {
    pub size: usize,
    pub sumset: usize,
    pub difference_set: usize,
    pub product_set: usize,
    /// `|A·A ∖ {0}|`.
    pub nonzero_products: usize,
    pub sum_ratio: f64,
    pub difference_ratio: f64,
    pub product_ratio: f64,
}

/// Exact sizes of `A+A`, `A−A` and `A·A`.
pub fn growth_stats(field: &FieldCtx, a: &[Elem]) -> GrowthStats {
    let a = distinct(field, a);
    let q = field.order() as usize;
    let (mut sums, mut diffs, mut prods) = (vec![false; q], vec![false; q], vec![false; q]);
    for &x in &a {
        for &y in &a {
            sums[field.add(x, y).0 as usize] = true;
            diffs[field.sub(x, y).0 as usize] = true;
            prods[field.mul(x, y).0 as usize] = true;
        }
    }
    let count = |v: &[bool]| v.iter().filter(|&&b| b).count();
    let (s, d, p) = (count(&sums), count(&diffs), count(&prods));
    let nonzero_products = p - usize::from(prods[0]);
    let m = a.len().max(1) as f64;
    GrowthStats {
        size: a.len(),
        sumset: s,
        difference_set: d,
        product_set: p,
        nonzero_products,
        sum_ratio: s as f64 / m,
        difference_ratio: d as f64 / m,
        product_ratio: p as f64 / m,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsgOptions {
    pub k: f64,
    /// Size floor `|A'| ≥ c·K^{-c}|A|`.
    pub c: f64,
    /// Exponent in the reported `|A'−B'| / (K^C |A|)` ratio.
    pub big_c: f64,
}

impl Default for BsgOptions {
    fn default() -> Self {
        BsgOptions { k: 2.0, c: 1.0, big_c: 4.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsgResult {
    pub a_prime: Vec<Elem>,
    pub b_prime: Vec<Elem>,
    pub difference_set: usize,
    /// `|{a + b : (a,b) ∈ G}|`.
    pub restricted_sumset: usize,
    pub sumset_hypothesis_holds: bool,
    /// Edges whose sum is popular, i.e. represented at least `|G| / (2|A+_G B|)` times.
    pub popular_edges: usize,
    pub pivot: Elem,
    /// Minimum over `(a, b) ∈ A'×B'` of the number of paths `a, b₁, a₁, b` in `G`.
    pub min_paths: u64,
    pub size_floor: f64,
    pub floor_met: bool,
    /// `|A'−B'| / (K^C |A|)`.
    pub ratio_to_bound: f64,
}

/// Pivot on the `b₀ ∈ B` of largest degree, take `A' = N(b₀)`, and keep the
/// `b` with at least `|A'|/(2K)` neighbours in `A'`.
pub fn bsg_refine(
    field: &FieldCtx,
    a: &[Elem],
    b: &[Elem],
    g: &[(Elem, Elem)],
    opts: &BsgOptions,
) -> Result<BsgResult> {
    let a = distinct(field, a);
    let b = distinct(field, b);
    let mut g: Vec<(Elem, Elem)> = g.to_vec();
    g.sort_unstable();
    g.dedup();
    if a.len() != b.len() {
        return Err(Error::Precondition(format!("|A| = {} differs from |B| = {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Precondition("A is empty".into()));
    }
    let (in_a, in_b) = (bitmap(field, &a), bitmap(field, &b));
    if !g.iter().all(|(x, y)| in_a[x.0 as usize] && in_b[y.0 as usize]) {
        return Err(Error::Precondition("G is not a subset of A x B".into()));
    }
    if (g.len() as f64) * opts.k < (a.len() * b.len()) as f64 {
        return Err(Error::Precondition(format!(
            "|G| = {} is below |A||B|/K = {}",
            g.len(),
            (a.len() * b.len()) as f64 / opts.k
        )));
    }

    let mut sum_reps: HashMap<Elem, usize> = HashMap::new();
    for &(x, y) in &g {
        *sum_reps.entry(field.add(x, y)).or_default() += 1;
    }
    let restricted_sumset = sum_reps.len();
    let popular_threshold = g.len() as f64 / (2.0 * restricted_sumset as f64);
    let popular_edges = g.iter().filter(|(x, y)| sum_reps[&field.add(*x, *y)] as f64 >= popular_threshold).count();

    // neighbourhoods, indexed by position in a / b
    let pos_a: HashMap<Elem, usize> = a.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let pos_b: HashMap<Elem, usize> = b.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let mut adj = vec![vec![false; b.len()]; a.len()];
    for &(x, y) in &g {
        adj[pos_a[&x]][pos_b[&y]] = true;
    }
    let deg_b: Vec<usize> = (0..b.len()).map(|j| (0..a.len()).filter(|&i| adj[i][j]).count()).collect();
    let pivot = (0..b.len()).max_by_key(|&j| (deg_b[j], std::cmp::Reverse(j))).expect("B nonempty");
    let a_idx: Vec<usize> = (0..a.len()).filter(|&i| adj[i][pivot]).collect();
    let threshold = a_idx.len() as f64 / (2.0 * opts.k);
    let b_idx: Vec<usize> = (0..b.len())
        .filter(|&j| a_idx.iter().filter(|&&i| adj[i][j]).count() as f64 >= threshold)
        .collect();

    // paths of length 3: (A·Aᵀ·A)[a][b]
    let co: Vec<Vec<u64>> = a_idx
        .iter()
        .map(|&i| (0..a.len()).map(|i1| (0..b.len()).filter(|&j| adj[i][j] && adj[i1][j]).count() as u64).collect())
        .collect();
    let mut min_paths = u64::MAX;
    for row in &co {
        for &j in &b_idx {
            let paths: u64 = (0..a.len()).filter(|&i1| adj[i1][j]).map(|i1| row[i1]).sum();
            min_paths = min_paths.min(paths);
        }
    }
    if min_paths == u64::MAX {
        min_paths = 0;
    }

    let a_prime: Vec<Elem> = a_idx.iter().map(|&i| a[i]).collect();
    let b_prime: Vec<Elem> = b_idx.iter().map(|&j| b[j]).collect();
    let mut diffs = vec![false; field.order() as usize];
    for &x in &a_prime {
        for &y in &b_prime {
            diffs[field.sub(x, y).0 as usize] = true;
        }
    }
    let difference_set = diffs.iter().filter(|&&d| d).count();
    let size_floor = opts.c * opts.k.powf(-opts.c) * a.len() as f64;
    let floor_met =
        a_prime.len() as f64 >= size_floor * (1.0 - 1e-12) && b_prime.len() as f64 >= size_floor * (1.0 - 1e-12);
    Ok(BsgResult {
        ratio_to_bound: difference_set as f64 / (opts.k.powf(opts.big_c) * a.len() as f64),
        pivot: b[pivot],
        a_prime,
        b_prime,
        difference_set,
        restricted_sumset,
        sumset_hypothesis_holds: restricted_sumset as f64 <= opts.k * a.len() as f64,
        popular_edges,
        min_paths,
        size_floor,
        floor_met,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubfieldWitness {
    pub subfield_order: u32,
    pub subfield_degree: u32,
    pub scale: Elem,
    pub shift: Elem,
    /// `A ∖ (x·G + τ)`.
    pub exceptional: Vec<Elem>,
    /// `|A ∩ (x·G + τ)|`.
    pub covered: usize,
    pub size: usize,
    pub coverage: f64,
    pub candidates_tried: usize,
}

impl SubfieldWitness {
    /// Whether `A ⊆ (x·G + τ) ∪ X`.
    pub fn verify(&self, field: &FieldCtx, a: &[Elem]) -> bool {
        let Some(g) = field.subfields().into_iter().find(|s| s.order == self.subfield_order) else {
            return false;
        };
        let Ok(x_inv) = field.inv(self.scale) else { return false };
        a.iter().all(|&y| g.contains(field.mul(field.sub(y, self.shift), x_inv)) || self.exceptional.contains(&y))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectOptions {
    pub k: f64,
    /// Subfield orders are capped at `c·K^c·|A|`.
    pub c: f64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions { k: 2.0, c: 1.0 }
    }
}

fn coset_members(field: &FieldCtx, g: &Subfield, x_inv: Elem, tau: Elem, a: &[Elem]) -> usize {
    a.iter().filter(|&&y| g.contains(field.mul(field.sub(y, tau), x_inv))).count()
}

/// Searches for `A ⊆ (x·G + τ) ∪ X` with `G` a subfield and `|X|` small.
///
/// Scales come from the most popular nonzero differences of `A`; every
/// nonzero difference inside a coset `x·G + τ` lies in `x·G*`, so it is itself
/// a valid scale. Shifts are anchors `a ∈ A`.
pub fn subfield_detect(field: &FieldCtx, a: &[Elem], opts: &DetectOptions) -> Option<SubfieldWitness> {
    let a = distinct(field, a);
    if a.is_empty() {
        return None;
    }
    let cap = opts.c * opts.k.powf(opts.c) * a.len() as f64;
    let subfields: Vec<Subfield> = field.subfields().into_iter().filter(|s| s.order as f64 <= cap).collect();
    if subfields.is_empty() {
        return None;
    }

    let mut diff_count: HashMap<Elem, usize> = HashMap::new();
    for &x in &a {
        for &y in &a {
            if x != y {
                *diff_count.entry(field.sub(x, y)).or_default() += 1;
            }
        }
    }
    let mut diffs: Vec<(usize, Elem)> = diff_count.into_iter().map(|(d, c)| (c, d)).collect();
    diffs.sort_unstable_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut scales: Vec<Elem> = diffs.into_iter().take(DETECT_CANDIDATES).map(|(_, d)| d).collect();
    if scales.is_empty() {
        scales.push(Elem::ONE);
    }
    let anchors: Vec<Elem> = a.iter().copied().take(DETECT_CANDIDATES).collect();

    // (exceptional, order, scale, shift, covered)
    let mut best: Option<(usize, u32, Elem, Elem, usize)> = None;
    let mut tried = 0;
    for g in &subfields {
        for &x in &scales {
            let x_inv = field.inv(x).expect("nonzero difference");
            for &tau in &anchors {
                tried += 1;
                let covered = coset_members(field, g, x_inv, tau, &a);
                let key = (a.len() - covered, g.order, x, tau, covered);
                if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                    best = Some(key);
                }
            }
        }
    }
    let (_, order, scale, shift, covered) = best?;
    if (covered as f64) < MIN_COVERAGE * a.len() as f64 {
        return None;
    }
    let g = subfields.iter().find(|s| s.order == order).expect("chosen from the list");
    let x_inv = field.inv(scale).expect("nonzero");
    let exceptional = a.iter().copied().filter(|&y| !g.contains(field.mul(field.sub(y, shift), x_inv))).collect();
    Some(SubfieldWitness {
        subfield_order: order,
        subfield_degree: g.degree,
        scale,
        shift,
        exceptional,
        covered,
        size: a.len(),
        coverage: covered as f64 / a.len() as f64,
        candidates_tried: tried,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::seq::SliceRandom;

    #[test]
    fn collinear_small_cases() {
        let f = FieldCtx::prime(7).unwrap();
        let all: Vec<Elem> = f.elements().collect();
        assert_eq!(collinear_energy(&f, &all, &all, Exec::Sequential).unwrap(), 245);
        assert_eq!(collinear_energy(&f, &[Elem::ZERO], &all, Exec::Parallel).unwrap(), 5);
    }

    #[test]
    fn collinear_cap() {
        let f = FieldCtx::new(3, 8).unwrap();
        let all: Vec<Elem> = f.elements().take(2000).collect();
        assert!(matches!(collinear_energy(&f, &all, &all, Exec::Sequential), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn growth_of_subfield_and_progression() {
        let f = FieldCtx::new(3, 4).unwrap();
        let g9 = f.subfields().into_iter().find(|s| s.order == 9).unwrap();
        let st = growth_stats(&f, &g9.elements);
        assert_eq!((st.sumset, st.product_set), (9, 9));
        let p = FieldCtx::prime(101).unwrap();
        let ap: Vec<Elem> = (0..10).map(|i| p.from_int(i)).collect();
        assert_eq!(growth_stats(&p, &ap).sumset, 19);
    }

    #[test]
    fn detect_planted_coset() {
        let f = FieldCtx::new(3, 4).unwrap();
        let g9 = f.subfields().into_iter().find(|s| s.order == 9).unwrap();
        let (two, five) = (f.from_int(2), f.elem(5).unwrap());
        let coset: Vec<Elem> = g9.elements.iter().map(|&g| f.add(f.mul(two, g), five)).collect();
        let w = subfield_detect(&f, &coset, &DetectOptions::default()).unwrap();
        assert_eq!((w.subfield_order, w.exceptional.len()), (9, 0));
        assert!(w.verify(&f, &coset));

        let mut with_outliers = coset.clone();
        let mut extra = f.elements().filter(|e| !coset.contains(e));
        with_outliers.extend((0..3).map(|_| extra.next().unwrap()));
        let w = subfield_detect(&f, &with_outliers, &DetectOptions::default()).unwrap();
        assert_eq!((w.subfield_order, w.exceptional.len()), (9, 3));
        assert!(w.verify(&f, &with_outliers));
    }

    #[test]
    fn detect_none_in_large_prime_field() {
        let f = FieldCtx::prime(101).unwrap();
        let mut all: Vec<Elem> = f.elements().collect();
        all.shuffle(&mut seeded(1));
        assert!(subfield_detect(&f, &all[..10], &DetectOptions::default()).is_none());
    }

    #[test]
    fn bsg_full_product_of_coset() {
        let f = FieldCtx::new(3, 4).unwrap();
        let g9 = f.subfields().into_iter().find(|s| s.order == 9).unwrap();
        let x = f.elem(7).unwrap();
        let a: Vec<Elem> = g9.elements.iter().map(|&g| f.add(f.mul(x, g), Elem::ONE)).collect();
        let g: Vec<(Elem, Elem)> = a.iter().flat_map(|&u| a.iter().map(move |&v| (u, v))).collect();
        let r = bsg_refine(&f, &a, &a, &g, &BsgOptions::default()).unwrap();
        assert_eq!((r.a_prime.len(), r.b_prime.len(), r.difference_set), (9, 9, 9));
        assert!(r.floor_met);
    }

    #[test]
    fn bsg_preconditions_and_bijection() {
        let f = FieldCtx::prime(11).unwrap();
        let a: Vec<Elem> = (0..5).map(|i| f.from_int(i)).collect();
        let b: Vec<Elem> = (0..5).map(|i| f.from_int(3 - i)).collect();
        let g: Vec<(Elem, Elem)> = a.iter().zip(&b).map(|(&x, &y)| (x, y)).collect();
        let k1 = BsgOptions { k: 1.0, ..BsgOptions::default() };
        assert!(matches!(bsg_refine(&f, &a, &b, &g, &k1), Err(Error::Precondition(_))));
        let k5 = BsgOptions { k: 5.0, ..BsgOptions::default() };
        let r = bsg_refine(&f, &a, &b, &g, &k5).unwrap();
        assert_eq!(r.restricted_sumset, 1);
        assert_eq!(r.difference_set, r.a_prime.len() * r.b_prime.len());
        assert!(bsg_refine(&f, &a, &a[..4], &g, &k5).is_err());
    }
}
