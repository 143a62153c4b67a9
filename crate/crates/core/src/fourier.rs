//! Dense functions on F^n (n ≤ 3), the Fourier transform and L^p norms.
//!
//! A point `(x_1, ..., x_n)` is stored at index `Σ x_i · q^{i-1}`, so `x_1` is
//! the fastest-varying coordinate. This layout is part of the serialized
//! format and is not going to change.
//!
//! Two measures are supported. `Counting` gives each point mass 1 (the space
//! `dx`), `Normalized` gives each point mass `q^{-n}` (the dual space `dξ`).
//! The forward transform takes counting-measure input to normalized-measure
//! output:
//!
//! ```text
//! f̂(ξ) = Σ_x f(x) e(-x·ξ)
//! ```

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ffield::{Elem, FieldCtx};

/// Largest number of stored values, `q^n`.
pub const MAX_GRID: u64 = 1 << 22;

/// Phase tables are precomputed up to this field order.
const PHASE_TABLE_MAX: u32 = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Counting,
    Normalized,
}

impl Measure {
    fn name(self) -> &'static str {
        match self {
            Measure::Counting => "counting",
            Measure::Normalized => "normalized",
        }
    }
}

/// Lebesgue exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Exponent> {
        if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else {
            Err(Error::BadExponent(format!("{p} is below 1")))
        }
    }

    fn check(self) -> Result<()> {
        match self {
            Exponent::Finite(p) if !(p >= 1.0) || !p.is_finite() => {
                Err(Error::BadExponent(format!("{p}")))
            }
            _ => Ok(()),
        }
    }

    /// Dual exponent `p' = p/(p-1)`.
    pub fn dual(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(p) if p == 1.0 => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }
}

impl From<f64> for Exponent {
    fn from(p: f64) -> Self {
        if p.is_infinite() {
            Exponent::Infinity
        } else {
            Exponent::Finite(p)
        }
    }
}

/// `(Σ_i w·|v_i|^p)^{1/p}` or `max |v_i|`, the shared norm kernel.
///
/// Indicator-like data (values in {0, ±1}) with even integer `p` is summed
/// exactly as a point count.
pub(crate) fn weighted_norm(values: &[Complex64], weight: f64, exp: Exponent, exec: Exec) -> f64 {
    match exp {
        Exponent::Infinity => values.iter().fold(0.0f64, |m, v| m.max(v.norm())),
        Exponent::Finite(p) => {
            let even_int = p.fract() == 0.0 && (p as u64) % 2 == 0;
            if even_int && values.iter().all(|v| v.im == 0.0 && (v.re == 0.0 || v.re.abs() == 1.0)) {
                let count = values.iter().filter(|v| v.re != 0.0).count() as f64;
                return (count * weight).powf(1.0 / p);
            }
            let s = if p == 2.0 {
                exec.sum_f64(values.len(), |i| values[i].norm_sqr())
            } else {
                exec.sum_f64(values.len(), |i| values[i].norm().powf(p))
            };
            (s * weight).powf(1.0 / p)
        }
    }
}

/// Phase lookup `e(±a·b)` for a fixed field.
pub(crate) struct PhaseTable<'a> {
    field: &'a FieldCtx,
    table: Option<Vec<Complex64>>,
    sign_negative: bool,
}

impl<'a> PhaseTable<'a> {
    pub(crate) fn new(field: &'a FieldCtx, sign_negative: bool) -> Self {
        let q = field.order();
        let table = (q <= PHASE_TABLE_MAX).then(|| {
            let mut t = Vec::with_capacity((q * q) as usize);
            for a in 0..q {
                for b in 0..q {
                    t.push(Self::raw(field, sign_negative, Elem(a), Elem(b)));
                }
            }
            t
        });
        PhaseTable { field, table, sign_negative }
    }

    fn raw(field: &FieldCtx, neg: bool, a: Elem, b: Elem) -> Complex64 {
        let t = field.trace_of_product(a, b);
        field.root(if neg { field.p() - t } else { t })
    }

    #[inline]
    pub(crate) fn get(&self, a: u32, b: u32) -> Complex64 {
        match &self.table {
            Some(t) => t[(a * self.field.order() + b) as usize],
            None => Self::raw(self.field, self.sign_negative, Elem(a), Elem(b)),
        }
    }
}

/// One size-q transform along `axis`, applied to every line of the grid.
///
/// `out[.., ξ, ..] = Σ_x in[.., x, ..] · phase(x, ξ)`.
pub(crate) fn transform_axis(
    values: &[Complex64],
    q: usize,
    axis: usize,
    phases: &PhaseTable<'_>,
    exec: Exec,
) -> Vec<Complex64> {
    let stride = q.pow(axis as u32);
    exec.map(values.len(), |idx| {
        let xi = (idx / stride) % q;
        let base = idx - xi * stride;
        let mut acc = Complex64::new(0.0, 0.0);
        for x in 0..q {
            let v = values[base + x * stride];
            if v.re != 0.0 || v.im != 0.0 {
                acc += v * phases.get(x as u32, xi as u32);
            }
        }
        acc
    })
}

/// A complex-valued function on F^n with a declared measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFnRepr", into = "GridFnRepr")]
pub struct GridFn {
    field: Arc<FieldCtx>,
    n: usize,
    values: Vec<Complex64>,
    measure: Measure,
}

#[derive(Serialize, Deserialize)]
struct GridFnRepr {
    field: String,
    n: usize,
    measure: Measure,
    values: Vec<[f64; 2]>,
}

impl From<GridFn> for GridFnRepr {
    fn from(f: GridFn) -> Self {
        GridFnRepr {
            field: f.field.description(),
            n: f.n,
            measure: f.measure,
            values: f.values.iter().map(|v| [v.re, v.im]).collect(),
        }
    }
}

impl TryFrom<GridFnRepr> for GridFn {
    type Error = Error;

    fn try_from(r: GridFnRepr) -> Result<Self> {
        let field = Arc::new(FieldCtx::parse(&r.field)?);
        let values = r.values.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
        GridFn::new(field, r.n, values, r.measure)
    }
}

pub(crate) fn grid_len(q: u32, n: usize) -> Result<usize> {
    if !(1..=3).contains(&n) {
        return Err(Error::BadDimension(n));
    }
    let len = (q as u64).pow(n as u32);
    if len > MAX_GRID {
        return Err(Error::SizeCap { what: "q^n", size: len, cap: MAX_GRID });
    }
    Ok(len as usize)
}

impl GridFn {
    pub fn new(field: Arc<FieldCtx>, n: usize, values: Vec<Complex64>, measure: Measure) -> Result<GridFn> {
        let len = grid_len(field.order(), n)?;
        if values.len() != len {
            return Err(Error::BadLength { expected: len, got: values.len() });
        }
        Ok(GridFn { field, n, values, measure })
    }

    pub fn zeros(field: Arc<FieldCtx>, n: usize, measure: Measure) -> Result<GridFn> {
        let len = grid_len(field.order(), n)?;
        Ok(GridFn { field, n, values: vec![Complex64::new(0.0, 0.0); len], measure })
    }

    /// Build from a function of the coordinate tuple.
    pub fn from_fn<F>(field: Arc<FieldCtx>, n: usize, measure: Measure, mut f: F) -> Result<GridFn>
    where
        F: FnMut(&[Elem]) -> Complex64,
    {
        let len = grid_len(field.order(), n)?;
        let q = field.order();
        let mut coords = vec![Elem::ZERO; n];
        let values = (0..len)
            .map(|idx| {
                decode_index(idx, q, &mut coords);
                f(&coords)
            })
            .collect();
        Ok(GridFn { field, n, values, measure })
    }

    /// The delta function at the origin, counting measure.
    pub fn delta(field: Arc<FieldCtx>, n: usize) -> Result<GridFn> {
        let mut f = GridFn::zeros(field, n, Measure::Counting)?;
        f.values[0] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn constant(field: Arc<FieldCtx>, n: usize, c: Complex64, measure: Measure) -> Result<GridFn> {
        let len = grid_len(field.order(), n)?;
        Ok(GridFn { field, n, values: vec![c; len], measure })
    }

    pub fn field(&self) -> &Arc<FieldCtx> {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mass per point: 1 or `q^{-n}`.
    pub fn point_mass(&self) -> f64 {
        match self.measure {
            Measure::Counting => 1.0,
            Measure::Normalized => 1.0 / self.values.len() as f64,
        }
    }

    pub fn index_of(&self, coords: &[Elem]) -> usize {
        encode_index(coords, self.field.order())
    }

    pub fn coords_of(&self, idx: usize) -> Vec<Elem> {
        let mut c = vec![Elem::ZERO; self.n];
        decode_index(idx, self.field.order(), &mut c);
        c
    }

    pub fn at(&self, coords: &[Elem]) -> Complex64 {
        self.values[self.index_of(coords)]
    }

    /// Same values under a different measure tag.
    pub fn with_measure(mut self, measure: Measure) -> GridFn {
        self.measure = measure;
        self
    }

    /// `x ↦ f(-x)`.
    pub fn reflect(&self) -> GridFn {
        let q = self.field.order();
        let mut c = vec![Elem::ZERO; self.n];
        let values = (0..self.values.len())
            .map(|idx| {
                decode_index(idx, q, &mut c);
                for e in c.iter_mut() {
                    *e = self.field.neg(*e);
                }
                self.values[encode_index(&c, q)]
            })
            .collect();
        GridFn { values, ..self.clone() }
    }

    /// `x ↦ f(x - a)`.
    pub fn translate(&self, a: &[Elem]) -> GridFn {
        let q = self.field.order();
        let mut c = vec![Elem::ZERO; self.n];
        let values = (0..self.values.len())
            .map(|idx| {
                decode_index(idx, q, &mut c);
                for (e, &s) in c.iter_mut().zip(a) {
                    *e = self.field.sub(*e, s);
                }
                self.values[encode_index(&c, q)]
            })
            .collect();
        GridFn { values, ..self.clone() }
    }

    pub fn scale(&self, c: Complex64) -> GridFn {
        GridFn { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    fn same_space(&self, other: &GridFn) -> Result<()> {
        if self.n != other.n || *self.field != *other.field {
            return Err(Error::BadLength { expected: self.values.len(), got: other.values.len() });
        }
        Ok(())
    }

    pub fn add(&self, other: &GridFn) -> Result<GridFn> {
        self.same_space(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridFn { values, ..self.clone() })
    }

    /// Forward transform via n one-dimensional passes.
    pub fn fourier_transform(&self, exec: Exec) -> Result<GridFn> {
        self.require_counting()?;
        let q = self.field.order() as usize;
        let phases = PhaseTable::new(&self.field, true);
        let mut cur = self.values.clone();
        for axis in 0..self.n {
            cur = transform_axis(&cur, q, axis, &phases, exec);
        }
        Ok(GridFn { values: cur, measure: Measure::Normalized, ..self.clone() })
    }

    /// Forward transform by direct O(q^{2n}) summation; the reference.
    pub fn fourier_transform_direct(&self, exec: Exec) -> Result<GridFn> {
        self.require_counting()?;
        let field = &self.field;
        let q = field.order();
        let n = self.n;
        let support: Vec<(Vec<Elem>, Complex64)> = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm_sqr() != 0.0)
            .map(|(i, &v)| (self.coords_of(i), v))
            .collect();
        let values = exec.map(self.values.len(), |idx| {
            let mut xi = vec![Elem::ZERO; n];
            decode_index(idx, q, &mut xi);
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, v) in &support {
                let t: u32 = x.iter().zip(&xi).map(|(&a, &b)| field.trace_of_product(a, b)).sum();
                acc += v * field.root(field.p() - t % field.p());
            }
            acc
        });
        Ok(GridFn { values, measure: Measure::Normalized, ..self.clone() })
    }

    fn require_counting(&self) -> Result<()> {
        if self.measure != Measure::Counting {
            return Err(Error::WrongMeasure { expected: Measure::Counting.name() });
        }
        Ok(())
    }

    pub fn lp_norm(&self, exp: Exponent, exec: Exec) -> Result<f64> {
        exp.check()?;
        Ok(weighted_norm(&self.values, self.point_mass(), exp, exec))
    }

    /// `⟨f, g⟩ = ∫ f·conj(g)` under the shared measure.
    pub fn inner_product(&self, other: &GridFn, exec: Exec) -> Result<Complex64> {
        self.same_space(other)?;
        if self.measure != other.measure {
            return Err(Error::WrongMeasure { expected: self.measure.name() });
        }
        let re = exec.sum_f64(self.values.len(), |i| (self.values[i] * other.values[i].conj()).re);
        let im = exec.sum_f64(self.values.len(), |i| (self.values[i] * other.values[i].conj()).im);
        Ok(Complex64::new(re, im) * self.point_mass())
    }

    /// `(f*g)(x) = Σ_y f(y) g(x-y)` over counting measure, by direct summation.
    pub fn convolve(&self, other: &GridFn, exec: Exec) -> Result<GridFn> {
        self.same_space(other)?;
        self.require_counting()?;
        other.require_counting()?;
        let field = &self.field;
        let q = field.order();
        let n = self.n;
        let support: Vec<(Vec<Elem>, Complex64)> = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm_sqr() != 0.0)
            .map(|(i, &v)| (self.coords_of(i), v))
            .collect();
        let values = exec.map(self.values.len(), |idx| {
            let mut x = vec![Elem::ZERO; n];
            decode_index(idx, q, &mut x);
            let mut d = vec![Elem::ZERO; n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (y, v) in &support {
                for i in 0..n {
                    d[i] = field.sub(x[i], y[i]);
                }
                acc += v * other.values[encode_index(&d, q)];
            }
            acc
        });
        Ok(GridFn { values, ..self.clone() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("grid functions always serialize")
    }

    pub fn from_json(s: &str) -> std::result::Result<GridFn, serde_json::Error> {
        serde_json::from_str(s)
    }
}

pub(crate) fn encode_index(coords: &[Elem], q: u32) -> usize {
    coords.iter().rev().fold(0usize, |acc, c| acc * q as usize + c.0 as usize)
}

pub(crate) fn decode_index(mut idx: usize, q: u32, out: &mut [Elem]) {
    for c in out.iter_mut() {
        *c = Elem((idx % q as usize) as u32);
        idx /= q as usize;
    }
}

/// Both sides of Plancherel, `‖f̂‖_{L²(dξ)}` and `‖f‖_{L²(dx)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlancherelReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

pub fn plancherel_check(f: &GridFn, exec: Exec) -> Result<PlancherelReport> {
    let fhat = f.fourier_transform(exec)?;
    let lhs = fhat.lp_norm(Exponent::Finite(2.0), exec)?;
    let rhs = f.lp_norm(Exponent::Finite(2.0), exec)?;
    Ok(PlancherelReport { lhs, rhs, rel_err: rel_err(lhs, rhs) })
}

/// `|a-b| / max(|a|,|b|)`, zero when both vanish.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn field(p: u32, k: u32) -> Arc<FieldCtx> {
        Arc::new(FieldCtx::new(p, k).unwrap())
    }

    fn random_fn(f: &Arc<FieldCtx>, n: usize, seed: u64) -> GridFn {
        let mut rng = seeded(seed);
        GridFn::from_fn(f.clone(), n, Measure::Counting, |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .unwrap()
    }

    fn max_diff(a: &GridFn, b: &GridFn) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn delta_transforms_to_one() {
        let f = field(5, 1);
        let d = GridFn::delta(f.clone(), 2).unwrap();
        let t = d.fourier_transform(Exec::Sequential).unwrap();
        assert_eq!(t.measure(), Measure::Normalized);
        assert!(t.values().iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn constant_transforms_to_scaled_delta() {
        let f = field(3, 2);
        let one = GridFn::constant(f.clone(), 2, Complex64::new(1.0, 0.0), Measure::Counting).unwrap();
        let t = one.fourier_transform(Exec::Parallel).unwrap();
        assert!((t.values()[0].re - 81.0).abs() < 1e-9);
        assert!(t.values()[1..].iter().all(|v| v.norm() < 1e-9));
    }

    #[test]
    fn fast_matches_direct() {
        for (p, k, n) in [(5, 1, 2), (3, 2, 2), (3, 1, 3), (7, 1, 3)] {
            let f = field(p, k);
            let g = random_fn(&f, n, 11 + p as u64);
            let fast = g.fourier_transform(Exec::Parallel).unwrap();
            let slow = g.fourier_transform_direct(Exec::Sequential).unwrap();
            assert!(max_diff(&fast, &slow) < 1e-12 * (g.len() as f64), "{p}^{k} n={n}");
        }
    }

    #[test]
    fn double_transform_reflects() {
        let f = field(5, 1);
        let g = random_fn(&f, 2, 3);
        let twice = g
            .fourier_transform(Exec::Sequential)
            .unwrap()
            .with_measure(Measure::Counting)
            .fourier_transform(Exec::Sequential)
            .unwrap()
            .reflect();
        let scaled = g.scale(Complex64::new(25.0, 0.0));
        assert!(max_diff(&twice, &scaled) < 1e-10);
    }

    #[test]
    fn translation_becomes_modulation() {
        let f = field(3, 1);
        let g = random_fn(&f, 2, 9);
        let ghat = g.fourier_transform(Exec::Sequential).unwrap();
        for a0 in 0..3 {
            for a1 in 0..3 {
                let a = [Elem(a0), Elem(a1)];
                let lhs = g.translate(&a).fourier_transform(Exec::Sequential).unwrap();
                for idx in 0..9 {
                    let xi = lhs.coords_of(idx);
                    let dot = f.add(f.mul(a[0], xi[0]), f.mul(a[1], xi[1]));
                    let expect = f.character(f.neg(dot)) * ghat.values()[idx];
                    assert!((lhs.values()[idx] - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn norm_examples() {
        let f = field(3, 1);
        let d = GridFn::delta(f.clone(), 3).unwrap();
        for p in [1.0, 2.0, 3.5] {
            assert_eq!(d.lp_norm(Exponent::Finite(p), Exec::Sequential).unwrap(), 1.0);
        }
        let one = GridFn::constant(f.clone(), 3, Complex64::new(1.0, 0.0), Measure::Counting).unwrap();
        let n2 = one.lp_norm(Exponent::Finite(2.0), Exec::Sequential).unwrap();
        assert!((n2 - 27f64.sqrt()).abs() < 1e-12);
        let n2n = one.with_measure(Measure::Normalized).lp_norm(Exponent::Finite(2.0), Exec::Sequential).unwrap();
        assert!((n2n - 1.0).abs() < 1e-12);
        assert!(d.lp_norm(Exponent::Finite(0.5), Exec::Sequential).is_err());
    }

    #[test]
    fn plancherel_examples() {
        let f7 = field(7, 1);
        let r = plancherel_check(&GridFn::delta(f7.clone(), 1).unwrap(), Exec::Sequential).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
        let one = GridFn::constant(f7.clone(), 1, Complex64::new(1.0, 0.0), Measure::Counting).unwrap();
        let r = plancherel_check(&one, Exec::Sequential).unwrap();
        assert!((r.lhs - 7f64.sqrt()).abs() < 1e-12 && r.rel_err < 1e-12);
    }

    #[test]
    fn transform_requires_counting_measure() {
        let f = field(3, 1);
        let g = GridFn::zeros(f, 1, Measure::Normalized).unwrap();
        assert!(matches!(g.fourier_transform(Exec::Sequential), Err(Error::WrongMeasure { .. })));
    }

    #[test]
    fn json_round_trip() {
        let f = field(3, 2);
        let g = random_fn(&f, 1, 5);
        let back = GridFn::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
        let v: serde_json::Value = serde_json::from_str(&g.to_json()).unwrap();
        assert_eq!(v["field"], "3^2/1,0,1");
        assert_eq!(v["measure"], "counting");
    }

    #[test]
    fn bad_shapes_rejected() {
        let f = field(3, 1);
        assert!(matches!(GridFn::zeros(f.clone(), 4, Measure::Counting), Err(Error::BadDimension(4))));
        assert!(matches!(
            GridFn::new(f, 2, vec![Complex64::new(0.0, 0.0); 8], Measure::Counting),
            Err(Error::BadLength { expected: 9, got: 8 })
        ));
    }
}
