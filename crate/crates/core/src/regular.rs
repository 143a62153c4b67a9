//! Dyadic level sets and `(γ, s, t)`-regular slice decompositions of
//! functions on F³.
//!
//! A function is first scaled by a power of two so that `max|f| ∈ (1/2, 1]`,
//! which keeps every rescaling exact in floating point. Level `j` collects the
//! points with `2^{-j-1} < |f| ≤ 2^{-j}`; values are stored multiplied by `2^j`
//! so each piece takes values in `(1/2, 1]`. Points with
//! `|f| ≤ q^{-10}·max|f|` go to the tail. Each level is then split by the
//! dyadic class of its horizontal slices `A_z = {x̄ : (x̄, z) ∈ support}`.
//!
//! Exponents are derived from integer counts: `t = log_q(#slices)`,
//! `s = log_q(min slice size)`, `γ = s + t`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ffield::FieldCtx;
use crate::fourier::{GridFn, Measure};

/// `2^k`, exact for the exponents used here.
fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

fn log_q(x: u64, q: u32) -> f64 {
    (x as f64).ln() / (q as f64).ln()
}

/// Whether `1/2 < |v| ≤ 1`, decided on `|v|²`.
fn in_unit_band(v: Complex64) -> bool {
    let n = v.norm_sqr();
    n > 0.25 && n <= 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelPiece {
    pub level: u32,
    /// Original values are `values · 2^scale_exp`.
    pub scale_exp: i32,
    /// Sorted grid indices `x₁ + q·x₂ + q²·x₃`.
    pub support: Vec<usize>,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelDecomposition {
    pub q: u32,
    /// `f = 2^norm_exp · g` with `max|g| ∈ (1/2, 1]`.
    pub norm_exp: i32,
    pub pieces: Vec<LevelPiece>,
    /// Nonzero points with `|f| ≤ q^{-10}·max|f|`, kept verbatim.
    pub tail: Vec<(usize, Complex64)>,
    pub tail_threshold: f64,
    /// `⌊10·log₂ q⌋ + 2`, the most levels that can occur.
    pub level_bound: usize,
}

/// Most level pieces that can be nonempty for field order `q`.
pub fn level_bound(q: u32) -> usize {
    (10.0 * (q as f64).log2()).floor() as usize + 2
}

/// Most dyadic slice classes for field order `q`: slice sizes lie in `1..=q²`.
pub fn slice_class_bound(q: u32) -> usize {
    let q2 = q as u64 * q as u64;
    (63 - q2.leading_zeros()) as usize + 1
}

fn require_3d(f: &GridFn) -> Result<()> {
    if f.dim() != 3 {
        return Err(Error::BadDimension(f.dim()));
    }
    Ok(())
}

/// Splits `f` into dyadic level pieces and a tail; zeros belong to neither.
pub fn dyadic_levels(f: &GridFn, exec: Exec) -> Result<LevelDecomposition> {
    require_3d(f)?;
    let q = f.field().order();
    let vals = f.values();
    let max_sq = vals.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let bound = level_bound(q);
    if max_sq == 0.0 {
        return Ok(LevelDecomposition {
            q,
            norm_exp: 0,
            pieces: Vec::new(),
            tail: Vec::new(),
            tail_threshold: 0.0,
            level_bound: bound,
        });
    }
    let max = max_sq.sqrt();
    // smallest e with max ≤ 2^e, then fix rounding on the squared scale
    let mut e = max.log2().ceil() as i32;
    while max_sq > pow2(2 * e) {
        e += 1;
    }
    while max_sq <= pow2(2 * e - 2) {
        e -= 1;
    }
    let tail_threshold = max * (q as f64).powi(-10);
    let tail_sq = tail_threshold * tail_threshold;

    // level index per point, None for zeros and tail
    let classes: Vec<Option<u32>> = exec.map(vals.len(), |i| {
        let n = vals[i].norm_sqr();
        if n == 0.0 || n <= tail_sq {
            return None;
        }
        let g = n * pow2(-2 * e);
        let mut j = ((-g.log2()) / 2.0).floor().max(0.0) as i32;
        while g > pow2(-2 * j) {
            j -= 1;
        }
        while g <= pow2(-2 * j - 2) {
            j += 1;
        }
        Some(j as u32)
    });
    let mut by_level: BTreeMap<u32, (Vec<usize>, Vec<Complex64>)> = BTreeMap::new();
    let mut tail = Vec::new();
    for (i, c) in classes.into_iter().enumerate() {
        match c {
            Some(j) => {
                let entry = by_level.entry(j).or_default();
                entry.0.push(i);
                entry.1.push(vals[i] * pow2(j as i32 - e));
            }
            None if vals[i].norm_sqr() > 0.0 => tail.push((i, vals[i])),
            None => {}
        }
    }
    let pieces = by_level
        .into_iter()
        .map(|(level, (support, values))| LevelPiece { level, scale_exp: e - level as i32, support, values })
        .collect();
    Ok(LevelDecomposition { q, norm_exp: e, pieces, tail, tail_threshold, level_bound: bound })
}

impl LevelDecomposition {
    /// `Σ pieces + tail`, pointwise.
    pub fn reconstruct(&self, field: Arc<FieldCtx>) -> Result<GridFn> {
        let mut g = GridFn::zeros(field, 3, Measure::Counting)?;
        let out = g.values_mut();
        for p in &self.pieces {
            for (&i, &v) in p.support.iter().zip(&p.values) {
                out[i] += v * pow2(p.scale_exp);
            }
        }
        for &(i, v) in &self.tail {
            out[i] += v;
        }
        Ok(g)
    }

    /// Whether no grid point appears twice across pieces and tail.
    pub fn supports_disjoint(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.pieces.iter().flat_map(|p| p.support.iter().copied()).chain(self.tail.iter().map(|t| t.0)).all(|i| seen.insert(i))
    }
}

/// A `(γ, s, t)`-regular piece, with exponents carried as integer counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularPiece {
    pub q: u32,
    pub support: Vec<usize>,
    pub values: Vec<Complex64>,
    /// Original values are `values · 2^scale_exp`.
    pub scale_exp: i32,
    pub support_size: u64,
    pub slice_count: u64,
    /// Smallest nonempty slice.
    pub slice_floor: u64,
    pub slice_max: u64,
    /// `⌊log₂ |A_z|⌋` shared by every slice.
    pub dyadic_class: u32,
}

impl RegularPiece {
    /// `log_q(min slice size)`.
    pub fn s(&self) -> f64 {
        log_q(self.slice_floor, self.q)
    }

    /// `log_q(number of nonempty slices)`.
    pub fn t(&self) -> f64 {
        log_q(self.slice_count, self.q)
    }

    /// `s + t`.
    pub fn gamma(&self) -> f64 {
        self.s() + self.t()
    }

    /// `log_q |support|`, within `log_q 2` of `γ`.
    pub fn support_exponent(&self) -> f64 {
        log_q(self.support_size, self.q)
    }

    /// Heights `z` with nonempty slices, ascending.
    pub fn heights(&self) -> Vec<u32> {
        let q2 = self.q as usize * self.q as usize;
        let mut z: Vec<u32> = self.support.iter().map(|&i| (i / q2) as u32).collect();
        z.dedup();
        z
    }

    /// Restriction to the slice at height `z`, as `(x̄ index, value)` pairs.
    pub fn slice(&self, z: u32) -> Vec<(usize, Complex64)> {
        let q2 = self.q as usize * self.q as usize;
        self.support
            .iter()
            .zip(&self.values)
            .filter(|(&i, _)| i / q2 == z as usize)
            .map(|(&i, &v)| (i % q2, v))
            .collect()
    }

    /// The piece as a function on F³ in original units.
    pub fn to_grid(&self, field: Arc<FieldCtx>) -> Result<GridFn> {
        let mut g = GridFn::zeros(field, 3, Measure::Counting)?;
        let out = g.values_mut();
        for (&i, &v) in self.support.iter().zip(&self.values) {
            out[i] = v * pow2(self.scale_exp);
        }
        Ok(g)
    }

    /// Builds a piece from raw data, recording slice counts without checking them.
    pub fn from_support(q: u32, support: &[usize], values: &[Complex64], scale_exp: i32) -> Result<RegularPiece> {
        if support.len() != values.len() {
            return Err(Error::BadLength { expected: support.len(), got: values.len() });
        }
        let mut pairs: Vec<(usize, Complex64)> = support.iter().copied().zip(values.iter().copied()).collect();
        pairs.sort_unstable_by_key(|p| p.0);
        let q2 = q as usize * q as usize;
        let sizes = slice_sizes(pairs.iter().map(|p| p.0), q2);
        let floor = sizes.values().copied().min().unwrap_or(0);
        Ok(RegularPiece {
            q,
            support: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
            scale_exp,
            support_size: pairs.len() as u64,
            slice_count: sizes.len() as u64,
            slice_floor: floor,
            slice_max: sizes.values().copied().max().unwrap_or(0),
            dyadic_class: if floor == 0 { 0 } else { 63 - floor.leading_zeros() },
        })
    }
}

fn slice_sizes(support: impl Iterator<Item = usize>, q2: usize) -> BTreeMap<u32, u64> {
    let mut sizes = BTreeMap::new();
    for i in support {
        *sizes.entry((i / q2) as u32).or_insert(0u64) += 1;
    }
    sizes
}

fn check_band(values: &[Complex64]) -> Result<()> {
    match values.iter().position(|&v| !in_unit_band(v)) {
        Some(i) => Err(Error::Precondition(format!("|g| outside (1/2, 1] at support entry {i}: |g| = {}", values[i].norm()))),
        None => Ok(()),
    }
}

fn decompose(q: u32, support: &[usize], values: &[Complex64], scale_exp: i32, exec: Exec) -> Result<Vec<RegularPiece>> {
    check_band(values)?;
    let q2 = q as usize * q as usize;
    let sizes = slice_sizes(support.iter().copied(), q2);
    let heights: Vec<(u32, u64)> = sizes.into_iter().collect();
    let classes: Vec<u32> = exec.map(heights.len(), |i| 63 - heights[i].1.leading_zeros());
    let mut class_of_z = vec![u32::MAX; q as usize];
    for (&(z, _), &c) in heights.iter().zip(&classes) {
        class_of_z[z as usize] = c;
    }
    let mut buckets: BTreeMap<u32, (Vec<usize>, Vec<Complex64>)> = BTreeMap::new();
    for (&i, &v) in support.iter().zip(values) {
        let entry = buckets.entry(class_of_z[i / q2]).or_default();
        entry.0.push(i);
        entry.1.push(v);
    }
    buckets.into_values().map(|(s, v)| RegularPiece::from_support(q, &s, &v, scale_exp)).collect()
}

/// Splits a single level piece (`1/2 < |g| ≤ 1` on its support) by the dyadic
/// class of its slice sizes.
pub fn slice_regular_decompose(g: &GridFn, exec: Exec) -> Result<Vec<RegularPiece>> {
    require_3d(g)?;
    let (support, values): (Vec<usize>, Vec<Complex64>) =
        g.values().iter().enumerate().filter(|(_, v)| v.norm_sqr() > 0.0).map(|(i, &v)| (i, v)).unzip();
    decompose(g.field().order(), &support, &values, 0, exec)
}

impl LevelPiece {
    pub fn regular_pieces(&self, q: u32, exec: Exec) -> Result<Vec<RegularPiece>> {
        decompose(q, &self.support, &self.values, self.scale_exp, exec)
    }
}

/// A `(γ, s, t)`-regular indicator: `slice_count` random heights, each with
/// `slice_size` random points of F².
pub fn planted_regular_set<R: Rng>(q: u32, slice_count: usize, slice_size: usize, rng: &mut R) -> Result<RegularPiece> {
    let q2 = q as usize * q as usize;
    if slice_count == 0 || slice_count > q as usize || slice_size == 0 || slice_size > q2 {
        return Err(Error::Precondition(format!(
            "need 1 <= slices <= {q} and 1 <= slice size <= {q2}, got {slice_count} and {slice_size}"
        )));
    }
    let mut support = Vec::with_capacity(slice_count * slice_size);
    for z in sample(rng, q as usize, slice_count) {
        support.extend(sample(rng, q2, slice_size).into_iter().map(|x| z * q2 + x));
    }
    let values = vec![Complex64::new(1.0, 0.0); support.len()];
    RegularPiece::from_support(q, &support, &values, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityStats {
    pub gamma: f64,
    pub s: f64,
    pub t: f64,
    pub support_exponent: f64,
    /// `max |A_z| / min |A_z|`.
    pub ratio: f64,
    pub support_size: u64,
    pub slice_count: u64,
    pub slice_floor: u64,
    pub slice_max: u64,
}

/// Recomputes every invariant of `piece` from its support and values.
pub fn regularity_stats(piece: &RegularPiece) -> Result<RegularityStats> {
    let q2 = piece.q as usize * piece.q as usize;
    if piece.support.is_empty() {
        return Err(Error::Regularity("empty piece".into()));
    }
    check_band(&piece.values).map_err(|e| Error::Regularity(e.to_string()))?;
    let sizes = slice_sizes(piece.support.iter().copied(), q2);
    let floor = *sizes.values().min().expect("nonempty");
    let max = *sizes.values().max().expect("nonempty");
    if let Some((z, &size)) = sizes.iter().find(|(_, &c)| c > 2 * floor) {
        return Err(Error::Regularity(format!(
            "slice z = {z} has {size} points, more than twice the smallest slice ({floor})"
        )));
    }
    let recount = (sizes.len() as u64, floor, max, piece.support.len() as u64);
    if recount != (piece.slice_count, piece.slice_floor, piece.slice_max, piece.support_size) {
        return Err(Error::Regularity(format!(
            "stored counts {:?} disagree with recomputed {recount:?}",
            (piece.slice_count, piece.slice_floor, piece.slice_max, piece.support_size)
        )));
    }
    Ok(RegularityStats {
        gamma: piece.gamma(),
        s: piece.s(),
        t: piece.t(),
        support_exponent: piece.support_exponent(),
        ratio: max as f64 / floor as f64,
        support_size: piece.support_size,
        slice_count: piece.slice_count,
        slice_floor: floor,
        slice_max: max,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularDecomposition {
    pub levels: LevelDecomposition,
    /// Regular pieces of each level, in level order.
    pub pieces: Vec<Vec<RegularPiece>>,
    pub level_bound: usize,
    pub slice_class_bound: usize,
    pub total_pieces: usize,
}

impl RegularDecomposition {
    pub fn all_pieces(&self) -> impl Iterator<Item = &RegularPiece> {
        self.pieces.iter().flatten()
    }

    /// `Σ regular pieces + tail`, pointwise.
    pub fn reconstruct(&self, field: Arc<FieldCtx>) -> Result<GridFn> {
        let mut g = GridFn::zeros(field, 3, Measure::Counting)?;
        let out = g.values_mut();
        for p in self.all_pieces() {
            for (&i, &v) in p.support.iter().zip(&p.values) {
                out[i] += v * pow2(p.scale_exp);
            }
        }
        for &(i, v) in &self.levels.tail {
            out[i] += v;
        }
        Ok(g)
    }
}

/// Levels, then slice classes within each level.
pub fn regular_decomposition(f: &GridFn, exec: Exec) -> Result<RegularDecomposition> {
    let levels = dyadic_levels(f, exec)?;
    let q = levels.q;
    let pieces = levels.pieces.iter().map(|lp| lp.regular_pieces(q, exec)).collect::<Result<Vec<_>>>()?;
    let total_pieces = pieces.iter().map(Vec::len).sum();
    Ok(RegularDecomposition {
        level_bound: levels.level_bound,
        slice_class_bound: slice_class_bound(q),
        levels,
        pieces,
        total_pieces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn gf(p: u32) -> Arc<FieldCtx> {
        Arc::new(FieldCtx::prime(p).unwrap())
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn set_fn(q: u32, pts: &[(u32, u32, u32)]) -> GridFn {
        let f = gf(q);
        let mut g = GridFn::zeros(f, 3, Measure::Counting).unwrap();
        for &(a, b, z) in pts {
            g.values_mut()[(a + q * b + q * q * z) as usize] = c(1.0);
        }
        g
    }

    #[test]
    fn zero_and_unit_functions() {
        let f = gf(5);
        let z = GridFn::zeros(f.clone(), 3, Measure::Counting).unwrap();
        let d = dyadic_levels(&z, Exec::Sequential).unwrap();
        assert!(d.pieces.is_empty() && d.tail.is_empty());
        let one = set_fn(5, &[(0, 0, 0), (1, 2, 3), (4, 4, 4)]);
        let d = dyadic_levels(&one, Exec::Sequential).unwrap();
        assert_eq!(d.pieces.len(), 1);
        assert!(d.tail.is_empty());
    }

    #[test]
    fn random_reconstruction_exact() {
        let f = gf(5);
        let mut rng = seeded(4);
        for _ in 0..50 {
            let g = GridFn::from_fn(f.clone(), 3, Measure::Counting, |_| {
                if rng.gen_bool(0.3) {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)) * 10f64.powi(rng.gen_range(-9..3))
                }
            })
            .unwrap();
            let d = regular_decomposition(&g, Exec::Parallel).unwrap();
            assert!(d.levels.supports_disjoint());
            assert_eq!(d.reconstruct(f.clone()).unwrap(), g);
            assert_eq!(d.levels.reconstruct(f.clone()).unwrap(), g);
            assert!(d.levels.pieces.len() <= d.level_bound);
            for level in &d.pieces {
                assert!(level.len() <= d.slice_class_bound);
                for p in level {
                    regularity_stats(p).unwrap();
                }
            }
        }
    }

    #[test]
    fn two_equal_slices() {
        let g = set_fn(5, &[(0, 0, 1), (1, 0, 1), (2, 0, 1), (3, 0, 1), (0, 1, 3), (1, 1, 3), (2, 1, 3), (3, 1, 3)]);
        let ps = slice_regular_decompose(&g, Exec::Sequential).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!((ps[0].slice_count, ps[0].slice_floor), (2, 4));
        assert!((ps[0].t() - 2f64.ln() / 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn single_point_piece() {
        let ps = slice_regular_decompose(&set_fn(5, &[(2, 3, 4)]), Exec::Sequential).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!((ps[0].gamma(), ps[0].s(), ps[0].t()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn dyadic_bucketing_of_slice_sizes() {
        let q = 5u32;
        let mut pts = Vec::new();
        for (z, size) in [(0u32, 1u32), (1, 2), (2, 5), (3, 11)] {
            for i in 0..size {
                pts.push((i % q, i / q, z));
            }
        }
        let ps = slice_regular_decompose(&set_fn(q, &pts), Exec::Sequential).unwrap();
        let classes: Vec<u32> = ps.iter().map(|p| p.dyadic_class).collect();
        assert_eq!(classes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn planted_and_invalid_pieces() {
        let q = 7u32;
        let pts: Vec<_> = (0..7).flat_map(|z| (0..7).map(move |a| (a, 0, z))).collect();
        let p = &slice_regular_decompose(&set_fn(q, &pts), Exec::Sequential).unwrap()[0];
        let st = regularity_stats(p).unwrap();
        assert!((st.t - 1.0).abs() < 1e-15 && (st.s - 1.0).abs() < 1e-15 && (st.gamma - 2.0).abs() < 1e-15);

        let full: Vec<_> = (0..49).map(|i| (i % 7, i / 7, 2)).collect();
        let st = regularity_stats(&slice_regular_decompose(&set_fn(q, &full), Exec::Sequential).unwrap()[0]).unwrap();
        assert!((st.t, st.s) == (0.0, 2.0));

        let mut mixed: Vec<_> = (0..4).map(|i| (i, 0, 0)).collect();
        mixed.extend((0..9).map(|i| (i % 7, i / 7, 1)));
        let q2 = 49usize;
        let support: Vec<usize> = mixed.iter().map(|&(a, b, z)| (a + 7 * b) as usize + q2 * z as usize).collect();
        let piece = RegularPiece::from_support(7, &support, &vec![c(1.0); support.len()], 0).unwrap();
        assert!(matches!(regularity_stats(&piece), Err(Error::Regularity(_))));
    }

    #[test]
    fn band_precondition() {
        let mut g = set_fn(5, &[(0, 0, 0)]);
        g.values_mut()[0] = c(0.3);
        assert!(slice_regular_decompose(&g, Exec::Sequential).is_err());
    }

    #[test]
    fn planted_set_is_regular() {
        let piece = planted_regular_set(7, 7, 7, &mut crate::rng::seeded(1)).unwrap();
        let st = regularity_stats(&piece).unwrap();
        assert_eq!((st.slice_count, st.slice_floor, st.support_size), (7, 7, 49));
        assert!((st.gamma - 2.0).abs() < 1e-12);
        assert!(planted_regular_set(7, 8, 1, &mut crate::rng::seeded(1)).is_err());
    }
}
