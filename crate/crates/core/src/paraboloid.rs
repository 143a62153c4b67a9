//! The paraboloid `P = {(ω, ω·ω)} ⊂ F³`, its surface measure and extension
//! operator, the Bochner–Riesz kernel, Gauss sums, and the two symmetries the
//! L⁴ arguments lean on (Galilean shears and the pseudo-conformal change of
//! variables).
//!
//! Points of P are ranked by `ω_1 + q·ω_2`. The surface measure `dσ` puts mass
//! `q^{-2}` on each point, and the extension operator is
//!
//! ```text
//! (g dσ)^∨(x) = q^{-2} Σ_ω g(ω) e(x̄·ω + x_3·ω·ω)
//! ```

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ffield::{Elem, FieldCtx};
use crate::fourier::{self, rel_err, Exponent, GridFn, Measure, PhaseTable};

/// Largest field order for which extensions (q³ outputs) are evaluated.
pub const MAX_EXTENSION_ORDER: u32 = 161;

pub type Point3 = [Elem; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct ParaboloidCtx {
    field: Arc<FieldCtx>,
    heights: Vec<Elem>,
}

impl ParaboloidCtx {
    pub fn new(field: Arc<FieldCtx>) -> Result<ParaboloidCtx> {
        let q = field.order();
        if q > MAX_EXTENSION_ORDER {
            return Err(Error::SizeCap {
                what: "paraboloid field order",
                size: q as u64,
                cap: MAX_EXTENSION_ORDER as u64,
            });
        }
        let heights = (0..q * q)
            .map(|r| {
                let (a, b) = (Elem(r % q), Elem(r / q));
                field.add(field.mul(a, a), field.mul(b, b))
            })
            .collect();
        Ok(ParaboloidCtx { field, heights })
    }

    pub fn field(&self) -> &Arc<FieldCtx> {
        &self.field
    }

    pub fn order(&self) -> u32 {
        self.field.order()
    }

    /// `|P| = q²`.
    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn rank(&self, omega: [Elem; 2]) -> usize {
        (omega[0].0 + self.order() * omega[1].0) as usize
    }

    pub fn omega(&self, rank: usize) -> [Elem; 2] {
        let q = self.order() as usize;
        [Elem((rank % q) as u32), Elem((rank / q) as u32)]
    }

    pub fn point(&self, rank: usize) -> Point3 {
        let [a, b] = self.omega(rank);
        [a, b, self.heights[rank]]
    }

    /// `ω·ω` for the point of the given rank.
    pub fn height(&self, rank: usize) -> Elem {
        self.heights[rank]
    }

    pub fn points(&self) -> impl Iterator<Item = Point3> + '_ {
        (0..self.len()).map(|r| self.point(r))
    }

    pub fn contains(&self, x: Point3) -> bool {
        x.iter().all(|e| e.0 < self.order()) && self.heights[self.rank([x[0], x[1]])] == x[2]
    }

    pub fn rank_of_point(&self, x: Point3) -> Result<usize> {
        if self.contains(x) {
            Ok(self.rank([x[0], x[1]]))
        } else {
            Err(Error::OffParaboloid([x[0].0, x[1].0, x[2].0]))
        }
    }

    /// Ranks of a point set, rejecting anything off P.
    pub fn subset(&self, pts: &[Point3]) -> Result<Vec<usize>> {
        pts.iter().map(|&x| self.rank_of_point(x)).collect()
    }

    pub fn dot2(&self, a: [Elem; 2], b: [Elem; 2]) -> Elem {
        let f = &self.field;
        f.add(f.mul(a[0], b[0]), f.mul(a[1], b[1]))
    }

    pub fn add3(&self, a: Point3, b: Point3) -> Point3 {
        let f = &self.field;
        [f.add(a[0], b[0]), f.add(a[1], b[1]), f.add(a[2], b[2])]
    }

    pub fn sub3(&self, a: Point3, b: Point3) -> Point3 {
        let f = &self.field;
        [f.sub(a[0], b[0]), f.sub(a[1], b[1]), f.sub(a[2], b[2])]
    }

    /// Index of a point of F³ in the `GridFn` layout.
    pub fn grid_index(&self, x: Point3) -> usize {
        let q = self.order() as usize;
        x[0].0 as usize + q * (x[1].0 as usize + q * x[2].0 as usize)
    }

    /// `g_δ(γ, τ) = (γ + δ, τ + 2γ·δ + δ·δ)`.
    pub fn galilean(&self, delta: [Elem; 2], x: Point3) -> Result<Point3> {
        self.rank_of_point(x)?;
        Ok(self.galilean_unchecked(delta, x))
    }

    fn galilean_unchecked(&self, delta: [Elem; 2], x: Point3) -> Point3 {
        let f = &self.field;
        let g = [x[0], x[1]];
        let two_g_d = f.add(self.dot2(g, delta), self.dot2(g, delta));
        [
            f.add(x[0], delta[0]),
            f.add(x[1], delta[1]),
            f.add(f.add(x[2], two_g_d), self.dot2(delta, delta)),
        ]
    }

    /// `g_δ` on ranks.
    pub fn galilean_rank(&self, delta: [Elem; 2], rank: usize) -> usize {
        let y = self.galilean_unchecked(delta, self.point(rank));
        self.rank([y[0], y[1]])
    }
}

/// A function on P, aligned with point ranks.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceFn {
    pctx: Arc<ParaboloidCtx>,
    values: Vec<Complex64>,
}

impl SurfaceFn {
    pub fn new(pctx: Arc<ParaboloidCtx>, values: Vec<Complex64>) -> Result<SurfaceFn> {
        if values.len() != pctx.len() {
            return Err(Error::BadLength { expected: pctx.len(), got: values.len() });
        }
        Ok(SurfaceFn { pctx, values })
    }

    pub fn zeros(pctx: Arc<ParaboloidCtx>) -> SurfaceFn {
        let n = pctx.len();
        SurfaceFn { pctx, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn constant(pctx: Arc<ParaboloidCtx>, c: Complex64) -> SurfaceFn {
        let n = pctx.len();
        SurfaceFn { pctx, values: vec![c; n] }
    }

    pub fn indicator(pctx: Arc<ParaboloidCtx>, ranks: &[usize]) -> Result<SurfaceFn> {
        let mut g = SurfaceFn::zeros(pctx);
        for &r in ranks {
            if r >= g.values.len() {
                return Err(Error::BadLength { expected: g.values.len(), got: r + 1 });
            }
            g.values[r] = Complex64::new(1.0, 0.0);
        }
        Ok(g)
    }

    pub fn from_fn<F: FnMut([Elem; 2]) -> Complex64>(pctx: Arc<ParaboloidCtx>, mut f: F) -> SurfaceFn {
        let values = (0..pctx.len()).map(|r| f(pctx.omega(r))).collect();
        SurfaceFn { pctx, values }
    }

    pub fn pctx(&self) -> &Arc<ParaboloidCtx> {
        &self.pctx
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&r| self.values[r].norm_sqr() != 0.0).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm_sqr() == 0.0)
    }

    /// `‖g‖_{L^p(P, dσ)}`.
    pub fn lp_norm(&self, exp: Exponent, exec: Exec) -> f64 {
        fourier::weighted_norm(&self.values, 1.0 / self.values.len() as f64, exp, exec)
    }

    pub fn scale(&self, c: Complex64) -> SurfaceFn {
        SurfaceFn { pctx: self.pctx.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    /// Push forward along `g_δ`: the result takes the value `g(ω)` at `g_δ(ω)`.
    pub fn galilean_transport(&self, delta: [Elem; 2]) -> SurfaceFn {
        let mut values = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for (r, &v) in self.values.iter().enumerate() {
            values[self.pctx.galilean_rank(delta, r)] = v;
        }
        SurfaceFn { pctx: self.pctx.clone(), values }
    }

    /// `ξ ↦ e(a·ξ) g(ξ)`.
    pub fn modulate(&self, a: Point3) -> SurfaceFn {
        let f = self.pctx.field();
        let values = (0..self.values.len())
            .map(|r| {
                let xi = self.pctx.point(r);
                let t = (0..3).map(|i| f.trace_of_product(a[i], xi[i])).sum::<u32>();
                self.values[r] * f.root(t)
            })
            .collect();
        SurfaceFn { pctx: self.pctx.clone(), values }
    }
}

/// `(g dσ)^∨` on all of F³ in O(q⁴): for each height x₃, a two-axis transform
/// of `g(ω) e(x₃ ω·ω)`.
pub fn extension(g: &SurfaceFn, exec: Exec) -> Result<GridFn> {
    let pctx = &g.pctx;
    let field = pctx.field();
    let q = field.order() as usize;
    let plane = q * q;
    let plus = PhaseTable::new(field, false);
    let mut cur = exec.map(plane * q, |idx| {
        let r = idx % plane;
        let x3 = (idx / plane) as u32;
        let v = g.values[r];
        if v.norm_sqr() == 0.0 {
            v
        } else {
            v * plus.get(x3, pctx.height(r).0)
        }
    });
    for axis in 0..2 {
        cur = fourier::transform_axis(&cur, q, axis, &plus, exec);
    }
    let w = 1.0 / plane as f64;
    for v in cur.iter_mut() {
        *v *= w;
    }
    GridFn::new(field.clone(), 3, cur, Measure::Counting)
}

/// `(g dσ)^∨` by direct O(q⁵) summation; the reference for [`extension`].
pub fn extension_direct(g: &SurfaceFn, exec: Exec) -> Result<GridFn> {
    let pctx = &g.pctx;
    let field = pctx.field();
    let q = field.order() as usize;
    let support: Vec<(Point3, Complex64)> = g.support().into_iter().map(|r| (pctx.point(r), g.values[r])).collect();
    let w = 1.0 / (q * q) as f64;
    let values = exec.map(q * q * q, |idx| {
        let x = [Elem((idx % q) as u32), Elem(((idx / q) % q) as u32), Elem((idx / (q * q)) as u32)];
        let mut acc = Complex64::new(0.0, 0.0);
        for (xi, v) in &support {
            let t: u32 = (0..3).map(|i| field.trace_of_product(x[i], xi[i])).sum();
            acc += v * field.root(t);
        }
        acc * w
    });
    GridFn::new(field.clone(), 3, values, Measure::Counting)
}

/// `S(a) = Σ_ξ e(a ξ²)`.
pub fn gauss_sum(field: &FieldCtx, a: Elem) -> Complex64 {
    field.elements().map(|x| field.character(field.mul(a, field.mul(x, x)))).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdimReport {
    pub field: String,
    /// `max_{x≠0} |(dσ)^∨(x)|`.
    pub max_nonzero: f64,
    pub argmax: [u32; 3],
    /// `max |(dσ)^∨(x)|` over `x₃ = 0, x̄ ≠ 0`.
    pub max_on_flat: f64,
    /// `min |(dσ)^∨(x)|` over `x₃ ≠ 0`.
    pub min_on_curved: f64,
    /// `q^{-1}`, the value the maximum is compared against.
    pub reference: f64,
}

/// Exhaustive scan of `|(dσ)^∨|` over `x ≠ 0`.
pub fn fourier_dimension_report(pctx: &Arc<ParaboloidCtx>, exec: Exec) -> Result<FdimReport> {
    let ext = extension(&SurfaceFn::constant(pctx.clone(), Complex64::new(1.0, 0.0)), exec)?;
    let q = pctx.order() as usize;
    let plane = q * q;
    let vals = ext.values();
    let (i, max_nonzero) = exec
        .argmax_f64(vals.len() - 1, |i| vals[i + 1].norm())
        .expect("q³ > 1");
    let idx = i + 1;
    let max_on_flat = vals[1..plane].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let min_on_curved = vals[plane..].iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    Ok(FdimReport {
        field: pctx.field().description(),
        max_nonzero,
        argmax: [(idx % q) as u32, ((idx / q) % q) as u32, (idx / plane) as u32],
        max_on_flat,
        min_on_curved,
        reference: 1.0 / q as f64,
    })
}

/// `K = (dσ)^∨ - δ_0`, from the definition.
pub fn bochner_riesz_kernel(pctx: &Arc<ParaboloidCtx>, exec: Exec) -> Result<GridFn> {
    let mut k = extension(&SurfaceFn::constant(pctx.clone(), Complex64::new(1.0, 0.0)), exec)?;
    k.values_mut()[0] -= Complex64::new(1.0, 0.0);
    Ok(k)
}

/// Sign of the quadratic phase in the kernel closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelPhase {
    /// `e(-x̄·x̄ / 4x₃)`, which is what completing the square gives.
    Minus,
    /// `e(+x̄·x̄ / 4x₃)`, kept only to measure how far it is off.
    Plus,
}

/// `q^{-2} S(x₃)² e(∓x̄·x̄ / 4x₃)` for `x₃ ≠ 0`, and 0 on `x₃ = 0`.
pub fn kernel_closed_form(pctx: &ParaboloidCtx, x: Point3, phase: KernelPhase) -> Complex64 {
    let f = pctx.field();
    if x[2].is_zero() {
        return Complex64::new(0.0, 0.0);
    }
    let four_x3 = f.mul(f.from_int(4), x[2]);
    let ratio = f
        .div(pctx.dot2([x[0], x[1]], [x[0], x[1]]), four_x3)
        .expect("x₃ ≠ 0 and p odd");
    let arg = match phase {
        KernelPhase::Minus => f.neg(ratio),
        KernelPhase::Plus => ratio,
    };
    let s = gauss_sum(f, x[2]);
    s * s * f.character(arg) / (f.order() as f64).powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub field: String,
    /// Max deviation between the definition and the closed form, over all x.
    pub max_deviation: f64,
    /// Same, with the opposite sign in the quadratic phase.
    pub plus_phase_deviation: f64,
    /// Max `|K|` on `x₃ = 0`.
    pub max_on_flat: f64,
    /// Max of `||S(a)|² - q|` over `a ≠ 0`.
    pub gauss_modulus_error: f64,
}

pub fn kernel_formula_check(pctx: &Arc<ParaboloidCtx>, exec: Exec) -> Result<KernelCheck> {
    let k = bochner_riesz_kernel(pctx, exec)?;
    let q = pctx.order() as usize;
    let plane = q * q;
    let point = |idx: usize| [Elem((idx % q) as u32), Elem(((idx / q) % q) as u32), Elem((idx / plane) as u32)];
    let dev = |phase| {
        exec.map(k.len(), |idx| (k.values()[idx] - kernel_closed_form(pctx, point(idx), phase)).norm())
            .into_iter()
            .fold(0.0, f64::max)
    };
    let f = pctx.field();
    let gauss_modulus_error = f
        .elements()
        .skip(1)
        .map(|a| (gauss_sum(f, a).norm_sqr() - f.order() as f64).abs())
        .fold(0.0, f64::max);
    Ok(KernelCheck {
        field: f.description(),
        max_deviation: dev(KernelPhase::Minus),
        plus_phase_deviation: dev(KernelPhase::Plus),
        max_on_flat: k.values()[..plane].iter().map(|v| v.norm()).fold(0.0, f64::max),
        gauss_modulus_error,
    })
}

/// A function on the horizontal plane `x₃ = z`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceFn {
    pub z: Elem,
    /// Indexed by `y_1 + q·y_2`.
    pub values: Vec<Complex64>,
}

impl SliceFn {
    /// The same values read on P through `ω ↦ (ω, ω·ω)`.
    pub fn to_surface(&self, pctx: &Arc<ParaboloidCtx>) -> Result<SurfaceFn> {
        SurfaceFn::new(pctx.clone(), self.values.clone())
    }

    /// As a function on F³ supported on `x₃ = z`.
    pub fn to_grid(&self, pctx: &ParaboloidCtx) -> Result<GridFn> {
        let q = pctx.order() as usize;
        let mut g = GridFn::zeros(pctx.field().clone(), 3, Measure::Counting)?;
        let off = self.z.0 as usize * q * q;
        g.values_mut()[off..off + q * q].copy_from_slice(&self.values);
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoConformalReport {
    /// `‖h_z * K‖_{L⁴}` over `x₃ ≠ z`.
    pub lhs: f64,
    /// `q · ‖(h dσ)^∨‖_{L⁴}` over `t ≠ 0`.
    pub rhs: f64,
    pub rel_err: f64,
    /// `max |h_z * K|` on the plane `x₃ = z` itself; K vanishes on `x₃ = 0`.
    pub max_on_slice_plane: f64,
    /// `q · ‖(h dσ)^∨‖_{L⁴(F³)}`, which bounds `lhs` from above.
    pub full_rhs: f64,
}

/// The single-slice pseudo-conformal identity.
///
/// With `z̄ = x̄/2x₃` and `t = -1/4x₃` the map `(x̄, x₃) ↦ (z̄, t)` is a
/// bijection from `{x₃ ≠ 0}` onto `{t ≠ 0}`, and `|h_0 * K(x)| = q·|(h dσ)^∨(z̄, t)|`.
/// The left side is computed from the kernel's definition by direct convolution,
/// the right side through the extension operator.
pub fn pseudo_conformal_identity(
    pctx: &Arc<ParaboloidCtx>,
    slice: &SliceFn,
    exec: Exec,
) -> Result<PseudoConformalReport> {
    let field = pctx.field();
    if field.p() == 2 {
        return Err(Error::EvenCharacteristic);
    }
    let q = field.order() as usize;
    let plane = q * q;
    if slice.values.len() != plane {
        return Err(Error::BadLength { expected: plane, got: slice.values.len() });
    }
    let kernel = bochner_riesz_kernel(pctx, exec)?;
    let conv = slice.to_grid(pctx)?.convolve(&kernel, exec)?;
    let z = slice.z.0 as usize;
    let off_plane: Vec<Complex64> = conv
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| i / plane != z)
        .map(|(_, &v)| v)
        .collect();
    let lhs = fourier::weighted_norm(&off_plane, 1.0, Exponent::Finite(4.0), exec);
    let max_on_slice_plane = conv.values()[z * plane..(z + 1) * plane].iter().map(|v| v.norm()).fold(0.0, f64::max);

    let ext = extension(&slice.to_surface(pctx)?, exec)?;
    let qf = q as f64;
    let rhs = qf * fourier::weighted_norm(&ext.values()[plane..], 1.0, Exponent::Finite(4.0), exec);
    let full_rhs = qf * ext.lp_norm(Exponent::Finite(4.0), exec)?;
    Ok(PseudoConformalReport { lhs, rhs, rel_err: rel_err(lhs, rhs), max_on_slice_plane, full_rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn pctx(p: u32, k: u32) -> Arc<ParaboloidCtx> {
        Arc::new(ParaboloidCtx::new(Arc::new(FieldCtx::new(p, k).unwrap())).unwrap())
    }

    fn one(p: &Arc<ParaboloidCtx>) -> SurfaceFn {
        SurfaceFn::constant(p.clone(), Complex64::new(1.0, 0.0))
    }

    #[test]
    fn membership() {
        let p = pctx(7, 1);
        assert_eq!(p.len(), 49);
        assert!(p.contains([Elem(3), Elem(3), Elem(4)]));
        assert!(!p.contains([Elem(3), Elem(3), Elem(5)]));
        assert_eq!(p.rank_of_point([Elem(1), Elem(0), Elem(0)]), Err(Error::OffParaboloid([1, 0, 0])));
        for r in 0..p.len() {
            assert_eq!(p.rank_of_point(p.point(r)), Ok(r));
        }
    }

    #[test]
    fn extension_examples() {
        let p = pctx(7, 1);
        let ext = extension(&one(&p), Exec::Sequential).unwrap();
        assert!((ext.values()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(ext.at(&[Elem(1), Elem(0), Elem(0)]).norm() < 1e-12);
        for idx in 49..343 {
            assert!((ext.values()[idx].norm() - 1.0 / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_extension_matches_direct() {
        for (pp, k) in [(3, 1), (5, 1), (3, 2)] {
            let p = pctx(pp, k);
            let mut rng = seeded(pp as u64);
            let g = SurfaceFn::from_fn(p.clone(), |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let a = extension(&g, Exec::Parallel).unwrap();
            let b = extension_direct(&g, Exec::Sequential).unwrap();
            let d = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(d < 1e-12, "{pp}^{k}: {d}");
        }
    }

    #[test]
    fn fourier_dimension_small_primes() {
        for pp in [3, 5, 7] {
            let r = fourier_dimension_report(&pctx(pp, 1), Exec::Parallel).unwrap();
            assert!((r.max_nonzero - 1.0 / pp as f64).abs() < 1e-12);
            assert!(r.max_on_flat < 1e-12);
        }
    }

    #[test]
    fn gauss_sums() {
        let f7 = FieldCtx::new(7, 1).unwrap();
        assert!((gauss_sum(&f7, Elem(1)).norm_sqr() - 7.0).abs() < 1e-9);
        assert!((gauss_sum(&f7, Elem(0)) - Complex64::new(7.0, 0.0)).norm() < 1e-12);
        let f9 = FieldCtx::new(3, 2).unwrap();
        assert!((gauss_sum(&f9, Elem(1)).norm_sqr() - 9.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_closed_form_and_sign() {
        let c = kernel_formula_check(&pctx(5, 1), Exec::Parallel).unwrap();
        assert!(c.max_deviation < 1e-9);
        assert!(c.max_on_flat < 1e-12);
        let c7 = kernel_formula_check(&pctx(7, 1), Exec::Parallel).unwrap();
        assert!(c7.plus_phase_deviation > 0.1, "{}", c7.plus_phase_deviation);
        let k = bochner_riesz_kernel(&pctx(7, 1), Exec::Sequential).unwrap();
        assert!(k.values()[0].norm() < 1e-12);
        assert!(k.values()[49..].iter().all(|v| (v.norm() - 1.0 / 7.0).abs() < 1e-12));
    }

    #[test]
    fn galilean_examples() {
        let p = pctx(7, 1);
        let img = p.galilean([Elem(1), Elem(0)], [Elem(2), Elem(3), Elem(6)]).unwrap();
        assert_eq!(img, [Elem(3), Elem(3), Elem(4)]);
        let d = [Elem(4), Elem(2)];
        assert_eq!(p.galilean(d, [Elem(0); 3]).unwrap(), [d[0], d[1], p.dot2(d, d)]);
        assert!(p.galilean(d, [Elem(1), Elem(0), Elem(0)]).is_err());

        let p5 = pctx(5, 1);
        let f = p5.field().clone();
        for a in 0..5 {
            for b in 0..5 {
                let nu = [Elem(a), Elem(b)];
                let neg = [f.neg(nu[0]), f.neg(nu[1])];
                let mut seen = vec![false; 25];
                for r in 0..25 {
                    let s = p5.galilean_rank(nu, r);
                    seen[s] = true;
                    assert_eq!(p5.galilean_rank(neg, s), r);
                }
                assert!(seen.iter().all(|&x| x));
            }
        }
    }

    #[test]
    fn pseudo_conformal_delta_and_zero() {
        let p = pctx(3, 1);
        let mut values = vec![Complex64::new(0.0, 0.0); 9];
        values[4] = Complex64::new(1.0, 0.0);
        let r = pseudo_conformal_identity(&p, &SliceFn { z: Elem(0), values: values.clone() }, Exec::Sequential).unwrap();
        assert!(r.rel_err < 1e-9 && r.lhs > 0.0);
        assert!(r.max_on_slice_plane < 1e-12);
        assert!(r.lhs <= r.full_rhs * (1.0 + 1e-12));
        let shifted = pseudo_conformal_identity(&p, &SliceFn { z: Elem(2), values }, Exec::Sequential).unwrap();
        assert!((shifted.lhs - r.lhs).abs() < 1e-12);

        let zero = SliceFn { z: Elem(1), values: vec![Complex64::new(0.0, 0.0); 9] };
        let r = pseudo_conformal_identity(&p, &zero, Exec::Sequential).unwrap();
        assert_eq!((r.lhs, r.rhs, r.rel_err), (0.0, 0.0, 0.0));
    }
}
